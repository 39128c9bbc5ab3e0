//! Loopback HTTP fixture server with a request log.

#![allow(dead_code)]

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

#[derive(Debug, Clone)]
pub struct Route {
    pub status: u16,
    pub content_type: String,
    pub body: Vec<u8>,
    pub headers: Vec<(String, String)>,
    pub delay: Duration,
}

impl Route {
    pub fn ok(content_type: &str, body: impl Into<Vec<u8>>) -> Route {
        Route {
            status: 200,
            content_type: content_type.into(),
            body: body.into(),
            headers: Vec::new(),
            delay: Duration::ZERO,
        }
    }

    pub fn html(body: &str) -> Route {
        Route::ok("text/html; charset=utf-8", body)
    }

    pub fn status(code: u16) -> Route {
        Route {
            status: code,
            ..Route::ok("text/plain", format!("status {code}"))
        }
    }

    pub fn redirect(location: &str) -> Route {
        Route {
            status: 302,
            headers: vec![("Location".into(), location.into())],
            ..Route::ok("text/plain", "")
        }
    }

    pub fn delayed(mut self, delay: Duration) -> Route {
        self.delay = delay;
        self
    }
}

#[derive(Debug, Clone)]
pub struct Hit {
    pub host: String,
    pub path: String,
    pub at: Instant,
}

/// One listening address serving a mutable route table. Unknown paths
/// answer 404.
pub struct Server {
    pub addr: SocketAddr,
    routes: Arc<Mutex<HashMap<String, Route>>>,
    hits: Arc<Mutex<Vec<Hit>>>,
}

impl Server {
    /// Binds `ip:0`; use distinct loopback addresses (127.0.0.2, ...) for
    /// distinct hosts.
    pub fn start(ip: &str) -> Server {
        let listener = TcpListener::bind((ip, 0)).expect("bind loopback");
        let addr = listener.local_addr().unwrap();
        let routes: Arc<Mutex<HashMap<String, Route>>> = Arc::default();
        let hits: Arc<Mutex<Vec<Hit>>> = Arc::default();
        let (r, h) = (routes.clone(), hits.clone());
        thread::spawn(move || {
            for stream in listener.incoming().flatten() {
                let (r, h) = (r.clone(), h.clone());
                thread::spawn(move || {
                    let _ = serve(stream, &r, &h);
                });
            }
        });
        Server { addr, routes, hits }
    }

    pub fn route(&self, path: &str, route: Route) -> &Server {
        self.routes.lock().unwrap().insert(path.to_string(), route);
        self
    }

    /// `http://ip:port` without a trailing slash.
    pub fn base(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base())
    }

    /// `//ip:port`, for protocol-relative references.
    pub fn authority(&self) -> String {
        format!("//{}", self.addr)
    }

    pub fn hits(&self) -> Vec<Hit> {
        self.hits.lock().unwrap().clone()
    }

    pub fn hit_count(&self) -> usize {
        self.hits.lock().unwrap().len()
    }
}

fn serve(stream: TcpStream, routes: &Mutex<HashMap<String, Route>>, hits: &Mutex<Vec<Hit>>) -> std::io::Result<()> {
    stream.set_read_timeout(Some(Duration::from_secs(10)))?;
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut request_line = String::new();
    reader.read_line(&mut request_line)?;
    let path = request_line.split_whitespace().nth(1).unwrap_or("/").to_string();
    let mut host = String::new();
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line)? == 0 || line == "\r\n" || line == "\n" {
            break;
        }
        if let Some((k, v)) = line.split_once(':') {
            if k.eq_ignore_ascii_case("host") {
                host = v.trim().to_string();
            }
        }
    }
    hits.lock().unwrap().push(Hit {
        host,
        path: path.clone(),
        at: Instant::now(),
    });
    let route = routes.lock().unwrap().get(&path).cloned().unwrap_or_else(|| Route::status(404));
    if !route.delay.is_zero() {
        thread::sleep(route.delay);
    }
    let mut out = stream;
    let mut head = format!(
        "HTTP/1.1 {} X\r\nContent-Type: {}\r\nContent-Length: {}\r\nConnection: close\r\n",
        route.status,
        route.content_type,
        route.body.len()
    );
    for (k, v) in &route.headers {
        head.push_str(&format!("{k}: {v}\r\n"));
    }
    head.push_str("\r\n");
    out.write_all(head.as_bytes())?;
    out.write_all(&route.body)?;
    out.flush()
}

/// Fetch policy suited to loopback tests: short timeouts, no proxies.
pub fn test_policy() -> phishcollect::fetch::FetchPolicy {
    phishcollect::fetch::FetchPolicy {
        connect_timeout: Duration::from_secs(2),
        total_timeout: Duration::from_secs(5),
        per_host_delay: Duration::from_millis(20),
        env_proxy: false,
        ..Default::default()
    }
}

pub fn args(s: &[&str]) -> Vec<String> {
    std::iter::once("phishcollect").chain(s.iter().copied()).map(str::to_string).collect()
}

/// 1×1 PNG bytes.
pub fn tiny_png() -> Vec<u8> {
    phishcollect::snapshot::solid_png(1, 1, [0, 0, 0])
}

/// A page with 1 inline + 2 external scripts, 1 style attribute, 1 style
/// block, 2 stylesheets, 3 images (root-relative, absolute on `other`,
/// protocol-relative on `other`) and one `rel=icon`. Returns the page URL.
pub fn resource_site(site: &Server, other: &Server) -> String {
    let b = other.base();
    let pr = other.authority();
    let page = format!(
        r#"<!DOCTYPE html>
<html><head><title>Fixture</title>
<link rel="icon" href="/favicon.png">
<link rel="stylesheet" href="/css/main.css">
<link rel="stylesheet" href="{b}/css/theme.css">
<style>body {{ margin: 0 }}</style>
<script>var inline = 1;</script>
<script src="/js/app.js"></script>
<script src="{b}/js/lib.js"></script>
</head><body>
<div style="color:red">hello</div>
<img src="/img/logo.png" alt="logo">
<img src="{b}/img/banner.jpg" alt="">
<img src="{pr}/img/pixel.gif" alt="">
<a href="/about">about</a>
</body></html>
"#
    );
    site.route("/index.html", Route::html(&page));
    site.route("/favicon.png", Route::ok("image/png", tiny_png()));
    site.route("/css/main.css", Route::ok("text/css", "p { color: blue }"));
    site.route("/js/app.js", Route::ok("application/javascript", "console.log('app');"));
    site.route("/img/logo.png", Route::ok("image/png", tiny_png()));
    other.route("/css/theme.css", Route::ok("text/css", "h1 { font-size: 2em }"));
    other.route("/js/lib.js", Route::ok("application/javascript", "function lib() {}"));
    other.route("/img/banner.jpg", Route::ok("image/jpeg", b"\xff\xd8\xff\xe0 fake jpeg".to_vec()));
    other.route("/img/pixel.gif", Route::ok("image/gif", b"GIF89a fake".to_vec()));
    site.url("/index.html")
}

/// Writes `id,url,label` rows to `<dir>/<name>`.
pub fn write_feed(dir: &std::path::Path, name: &str, rows: &[(&str, &str, &str)]) -> std::path::PathBuf {
    let mut csv = String::from("id,url,label\n");
    for (id, url, label) in rows {
        csv.push_str(&format!("{id},{url},{label}\n"));
    }
    let path = dir.join(name);
    std::fs::write(&path, csv).unwrap();
    path
}

/// Files per kind subdirectory of a sample.
pub fn file_counts(sample: &std::path::Path) -> std::collections::BTreeMap<String, usize> {
    ["CSS", "Favicon", "HTML", "Images", "Javascript", "Screenshots"]
        .iter()
        .map(|d| (d.to_string(), std::fs::read_dir(sample.join(d)).map(|r| r.count()).unwrap_or(usize::MAX)))
        .collect()
}

/// Common `collect` flags for loopback runs with stub screenshots.
pub fn collect_args(feed: &std::path::Path, root: &std::path::Path, extra: &[&str]) -> Vec<String> {
    let mut a = args(&[
        "collect",
        "--input",
        feed.to_str().unwrap(),
        "--root",
        root.to_str().unwrap(),
        "--screenshots",
        "--screenshot-provider",
        "stub",
        "--viewport-width",
        "320",
        "--viewport-height",
        "200",
        "--no-env-proxy",
        "--per-host-delay-ms",
        "20",
        "--timeout-ms",
        "5000",
    ]);
    a.extend(extra.iter().map(|s| s.to_string()));
    a
}
