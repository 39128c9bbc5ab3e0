//! `CdpProvider` against a scripted stand-in for a browser's debugging
//! endpoint.

use std::io::{BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use base64::Engine as _;
use phishcollect::snapshot::{
    capture_viewport, png_dimensions, solid_png, CaptureTarget, CdpProvider, ScreenshotProvider, SnapshotError,
    ViewportSpec,
};
use serde_json::{json, Value};
use tungstenite::Message;

#[derive(Clone, Copy)]
enum Script {
    Render,
    Blocked,
    NeverLoads,
}

struct FakeBrowser {
    http: String,
    methods: Arc<Mutex<Vec<Value>>>,
}

fn start(script: Script) -> FakeBrowser {
    let ws = TcpListener::bind("127.0.0.1:0").unwrap();
    let ws_addr = ws.local_addr().unwrap();
    let http = TcpListener::bind("127.0.0.1:0").unwrap();
    let http_addr = http.local_addr().unwrap();
    let methods: Arc<Mutex<Vec<Value>>> = Arc::default();

    thread::spawn(move || {
        for stream in http.incoming().flatten() {
            let ws_url = format!("ws://{ws_addr}/devtools/page/T1");
            thread::spawn(move || answer_http(stream, &ws_url));
        }
    });
    let log = methods.clone();
    thread::spawn(move || {
        for stream in ws.incoming().flatten() {
            let log = log.clone();
            thread::spawn(move || devtools(stream, script, &log));
        }
    });
    FakeBrowser {
        http: format!("http://{http_addr}"),
        methods,
    }
}

fn answer_http(stream: TcpStream, ws_url: &str) {
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut line = String::new();
    reader.read_line(&mut line).unwrap();
    loop {
        let mut h = String::new();
        if reader.read_line(&mut h).unwrap_or(0) == 0 || h == "\r\n" {
            break;
        }
    }
    let body = if line.starts_with("PUT /json/new") {
        json!({"id": "T1", "type": "page", "webSocketDebuggerUrl": ws_url}).to_string()
    } else {
        "Target is closing".to_string()
    };
    let mut out = stream;
    let _ = write!(
        out,
        "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    );
}

fn devtools(stream: TcpStream, script: Script, log: &Mutex<Vec<Value>>) {
    let mut socket = tungstenite::accept(stream).unwrap();
    let mut size = (0u32, 0u32);
    loop {
        let msg = match socket.read() {
            Ok(Message::Text(t)) => t,
            Ok(Message::Close(_)) | Err(_) => return,
            Ok(_) => continue,
        };
        let req: Value = serde_json::from_str(msg.as_str()).unwrap();
        log.lock().unwrap().push(req.clone());
        let id = req["id"].clone();
        let result = match req["method"].as_str().unwrap() {
            "Emulation.setDeviceMetricsOverride" => {
                size = (
                    req["params"]["width"].as_u64().unwrap() as u32,
                    req["params"]["height"].as_u64().unwrap() as u32,
                );
                json!({})
            }
            "Page.navigate" => match script {
                Script::Blocked => json!({"frameId": "F", "errorText": "net::ERR_BLOCKED_BY_CLIENT"}),
                _ => json!({"frameId": "F"}),
            },
            "Page.captureScreenshot" => {
                let png = solid_png(size.0, size.1, [255, 0, 0]);
                json!({"data": base64::engine::general_purpose::STANDARD.encode(png)})
            }
            _ => json!({}),
        };
        socket.send(Message::text(json!({"id": id, "result": result}).to_string())).unwrap();
        if req["method"] == "Page.navigate" && matches!(script, Script::Render) {
            let event = json!({"method": "Page.loadEventFired", "params": {"timestamp": 1.0}});
            socket.send(Message::text(event.to_string())).unwrap();
        }
    }
}

fn spec() -> ViewportSpec {
    ViewportSpec {
        width: 100,
        height: 100,
        settle_delay: Duration::from_millis(10),
    }
}

#[test]
fn renders_and_decodes_the_capture() {
    let browser = start(Script::Render);
    let mut provider = CdpProvider::new(&browser.http, Duration::from_secs(5));
    let target = CaptureTarget::File("/tmp/some page.html".into());
    let png = capture_viewport(&target, &spec(), &mut provider).unwrap();
    assert_eq!(png_dimensions(&png), Ok((100, 100)));
    assert_eq!(png, solid_png(100, 100, [255, 0, 0]));

    let methods: Vec<String> = browser
        .methods
        .lock()
        .unwrap()
        .iter()
        .map(|m| m["method"].as_str().unwrap().to_string())
        .collect();
    assert_eq!(
        methods,
        ["Emulation.setDeviceMetricsOverride", "Page.enable", "Page.navigate", "Page.captureScreenshot"]
    );
    let nav = browser.methods.lock().unwrap()[2].clone();
    assert_eq!(nav["params"]["url"], "file:///tmp/some%20page.html");
}

#[test]
fn blocked_navigation_is_reported() {
    let browser = start(Script::Blocked);
    let mut provider = CdpProvider::new(&browser.http, Duration::from_secs(5));
    let err = provider
        .capture(&CaptureTarget::File("/tmp/x.html".into()), &spec())
        .unwrap_err();
    assert!(matches!(err, SnapshotError::SafeBrowsingBlocked(_)), "{err:?}");
    assert_eq!(err.kind(), "SafeBrowsingBlocked");
}

#[test]
fn pages_that_never_load_time_out() {
    let browser = start(Script::NeverLoads);
    let mut provider = CdpProvider::new(&browser.http, Duration::from_millis(600));
    let started = Instant::now();
    let err = provider
        .capture(&CaptureTarget::File("/tmp/x.html".into()), &spec())
        .unwrap_err();
    assert_eq!(err, SnapshotError::RenderTimeout);
    assert!(started.elapsed() < Duration::from_secs(3));
}

#[test]
fn missing_browser_is_unavailable() {
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let mut provider = CdpProvider::new(&format!("http://127.0.0.1:{port}"), Duration::from_secs(1));
    let err = provider
        .capture(&CaptureTarget::File("/tmp/x.html".into()), &spec())
        .unwrap_err();
    assert!(matches!(err, SnapshotError::ProviderUnavailable(_)), "{err:?}");
}
