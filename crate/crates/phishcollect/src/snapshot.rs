//! Viewport screenshots through a pluggable provider: a Chrome DevTools
//! Protocol client for real captures and a deterministic stub.

use std::net::TcpStream;
use std::path::PathBuf;
use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use base64::Engine as _;
use phishcollect_core::Url;
use serde_json::{json, Value};
use tungstenite::stream::MaybeTlsStream;
use tungstenite::{Message, WebSocket};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ViewportSpec {
    pub width: u32,
    pub height: u32,
    pub settle_delay: Duration,
}

impl Default for ViewportSpec {
    fn default() -> Self {
        ViewportSpec {
            width: 1366,
            height: 768,
            settle_delay: Duration::from_secs(2),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CaptureTarget {
    File(PathBuf),
    Url(Url),
}

impl CaptureTarget {
    /// Address handed to the browser; files become `file://` URLs.
    pub fn to_url(&self) -> String {
        match self {
            CaptureTarget::Url(u) => u.to_string(),
            CaptureTarget::File(p) => {
                let abs = std::path::absolute(p).unwrap_or_else(|_| p.clone());
                let mut out = String::from("file://");
                for b in abs.to_string_lossy().bytes() {
                    if b.is_ascii_alphanumeric() || b"/-._~".contains(&b) {
                        out.push(b as char);
                    } else {
                        out.push_str(&format!("%{b:02X}"));
                    }
                }
                out
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SnapshotError {
    #[error("screenshot provider unavailable: {0}")]
    ProviderUnavailable(String),
    #[error("browser refused to render the page: {0}")]
    SafeBrowsingBlocked(String),
    #[error("page did not finish rendering in time")]
    RenderTimeout,
    #[error("navigation failed: {0}")]
    NavigationFailed(String),
    #[error("provider returned an unusable image: {0}")]
    InvalidImage(String),
    #[error("provider protocol error: {0}")]
    Protocol(String),
}

impl SnapshotError {
    pub fn kind(&self) -> &'static str {
        match self {
            SnapshotError::ProviderUnavailable(_) => "ProviderUnavailable",
            SnapshotError::SafeBrowsingBlocked(_) => "SafeBrowsingBlocked",
            SnapshotError::RenderTimeout => "RenderTimeout",
            SnapshotError::NavigationFailed(_) => "NavigationFailed",
            SnapshotError::InvalidImage(_) => "InvalidImage",
            SnapshotError::Protocol(_) => "Protocol",
        }
    }
}

pub trait ScreenshotProvider: Send {
    /// PNG bytes of the initial viewport of `target`.
    fn capture(&mut self, target: &CaptureTarget, spec: &ViewportSpec) -> Result<Vec<u8>, SnapshotError>;
}

/// Width and height from a PNG header.
pub fn png_dimensions(bytes: &[u8]) -> Result<(u32, u32), SnapshotError> {
    let decoder = png::Decoder::new(std::io::Cursor::new(bytes));
    let reader = decoder
        .read_info()
        .map_err(|e| SnapshotError::InvalidImage(e.to_string()))?;
    let info = reader.info();
    Ok((info.width, info.height))
}

/// Captures through `provider` and checks the result is a PNG of exactly
/// the requested size.
pub fn capture_viewport(
    target: &CaptureTarget,
    spec: &ViewportSpec,
    provider: &mut dyn ScreenshotProvider,
) -> Result<Vec<u8>, SnapshotError> {
    let bytes = provider.capture(target, spec)?;
    let (w, h) = png_dimensions(&bytes)?;
    if (w, h) != (spec.width, spec.height) {
        return Err(SnapshotError::InvalidImage(format!(
            "{w}x{h}, expected {}x{}",
            spec.width, spec.height
        )));
    }
    Ok(bytes)
}

/// An RGB image of one color.
pub fn solid_png(width: u32, height: u32, rgb: [u8; 3]) -> Vec<u8> {
    let mut out = Vec::new();
    {
        let mut encoder = png::Encoder::new(&mut out, width, height);
        encoder.set_color(png::ColorType::Rgb);
        encoder.set_depth(png::BitDepth::Eight);
        let mut writer = encoder.write_header().expect("in-memory PNG header");
        let data: Vec<u8> = rgb.iter().copied().cycle().take(width as usize * height as usize * 3).collect();
        writer.write_image_data(&data).expect("in-memory PNG data");
    }
    out
}

/// Deterministic provider for tests and offline runs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StubProvider {
    /// A solid image of the requested size.
    Solid([u8; 3]),
    /// The same bytes for every capture.
    Fixed(Vec<u8>),
    Unavailable,
    Blocked,
}

impl ScreenshotProvider for StubProvider {
    fn capture(&mut self, _target: &CaptureTarget, spec: &ViewportSpec) -> Result<Vec<u8>, SnapshotError> {
        match self {
            StubProvider::Solid(rgb) => Ok(solid_png(spec.width, spec.height, *rgb)),
            StubProvider::Fixed(bytes) => Ok(bytes.clone()),
            StubProvider::Unavailable => Err(SnapshotError::ProviderUnavailable("stub".into())),
            StubProvider::Blocked => Err(SnapshotError::SafeBrowsingBlocked("stub".into())),
        }
    }
}

/// Drives a headless Chromium through its remote-debugging endpoint
/// (`--remote-debugging-port`). Each capture opens a fresh tab.
#[derive(Debug, Clone)]
pub struct CdpProvider {
    endpoint: String,
    render_timeout: Duration,
    http: reqwest::blocking::Client,
}

type Socket = WebSocket<MaybeTlsStream<TcpStream>>;

impl CdpProvider {
    /// `endpoint` is the debugging HTTP address, e.g. `http://127.0.0.1:9222`.
    pub fn new(endpoint: &str, render_timeout: Duration) -> Self {
        let http = reqwest::blocking::Client::builder()
            .no_proxy()
            .timeout(Duration::from_secs(10))
            .build()
            .expect("HTTP client for the debugging endpoint");
        CdpProvider {
            endpoint: endpoint.trim_end_matches('/').to_string(),
            render_timeout,
            http,
        }
    }

    fn open_tab(&self) -> Result<(String, String), SnapshotError> {
        let unavailable = |e: reqwest::Error| SnapshotError::ProviderUnavailable(e.to_string());
        let tab: Value = self
            .http
            .put(format!("{}/json/new?about:blank", self.endpoint))
            .send()
            .and_then(|r| r.error_for_status())
            .and_then(|r| r.bytes())
            .map_err(unavailable)
            .and_then(|b| serde_json::from_slice(&b).map_err(|e| SnapshotError::Protocol(e.to_string())))?;
        let id = tab["id"].as_str().unwrap_or_default().to_string();
        let ws = tab["webSocketDebuggerUrl"]
            .as_str()
            .ok_or_else(|| SnapshotError::Protocol("tab has no webSocketDebuggerUrl".into()))?
            .to_string();
        Ok((id, ws))
    }

    fn close_tab(&self, id: &str) {
        if !id.is_empty() {
            let _ = self.http.get(format!("{}/json/close/{id}", self.endpoint)).send();
        }
    }

    fn session(&self, ws_url: &str, target: &CaptureTarget, spec: &ViewportSpec) -> Result<Vec<u8>, SnapshotError> {
        let (mut socket, _) =
            tungstenite::connect(ws_url).map_err(|e| SnapshotError::ProviderUnavailable(e.to_string()))?;
        if let MaybeTlsStream::Plain(s) = socket.get_mut() {
            let _ = s.set_read_timeout(Some(Duration::from_millis(250)));
        }
        let mut session = Session {
            socket: &mut socket,
            next_id: 0,
            load_fired: false,
        };
        let deadline = Instant::now() + self.render_timeout;

        session.call(
            "Emulation.setDeviceMetricsOverride",
            json!({"width": spec.width, "height": spec.height, "deviceScaleFactor": 1, "mobile": false}),
            deadline,
        )?;
        session.call("Page.enable", json!({}), deadline)?;
        let nav = session.call("Page.navigate", json!({"url": target.to_url()}), deadline)?;
        if let Some(err) = nav.get("errorText").and_then(Value::as_str).filter(|e| !e.is_empty()) {
            let upper = err.to_ascii_uppercase();
            return Err(if upper.contains("SAFE_BROWSING") || upper.contains("BLOCKED") {
                SnapshotError::SafeBrowsingBlocked(err.to_string())
            } else {
                SnapshotError::NavigationFailed(err.to_string())
            });
        }
        session.wait_for_load(deadline)?;
        std::thread::sleep(spec.settle_delay);
        let shot = session.call(
            "Page.captureScreenshot",
            json!({"format": "png", "fromSurface": true, "captureBeyondViewport": false}),
            deadline,
        )?;
        let data = shot
            .get("data")
            .and_then(Value::as_str)
            .ok_or_else(|| SnapshotError::Protocol("captureScreenshot returned no data".into()))?;
        let _ = socket.close(None);
        base64::engine::general_purpose::STANDARD
            .decode(data)
            .map_err(|e| SnapshotError::InvalidImage(e.to_string()))
    }
}

impl ScreenshotProvider for CdpProvider {
    fn capture(&mut self, target: &CaptureTarget, spec: &ViewportSpec) -> Result<Vec<u8>, SnapshotError> {
        let (id, ws) = self.open_tab()?;
        let result = self.session(&ws, target, spec);
        self.close_tab(&id);
        result
    }
}

struct Session<'a> {
    socket: &'a mut Socket,
    next_id: u64,
    load_fired: bool,
}

impl Session<'_> {
    fn read(&mut self, deadline: Instant) -> Result<Option<Value>, SnapshotError> {
        if Instant::now() >= deadline {
            return Err(SnapshotError::RenderTimeout);
        }
        match self.socket.read() {
            Ok(Message::Text(text)) => {
                let v: Value = serde_json::from_str(text.as_str()).map_err(|e| SnapshotError::Protocol(e.to_string()))?;
                if v.get("method").and_then(Value::as_str) == Some("Page.loadEventFired") {
                    self.load_fired = true;
                }
                Ok(Some(v))
            }
            Ok(_) => Ok(None),
            Err(tungstenite::Error::Io(e))
                if matches!(e.kind(), std::io::ErrorKind::WouldBlock | std::io::ErrorKind::TimedOut) =>
            {
                Ok(None)
            }
            Err(e) => Err(SnapshotError::Protocol(e.to_string())),
        }
    }

    fn call(&mut self, method: &str, params: Value, deadline: Instant) -> Result<Value, SnapshotError> {
        self.next_id += 1;
        let id = self.next_id;
        let msg = json!({"id": id, "method": method, "params": params}).to_string();
        self.socket
            .send(Message::text(msg))
            .map_err(|e| SnapshotError::Protocol(e.to_string()))?;
        loop {
            let Some(v) = self.read(deadline)? else { continue };
            if v.get("id").and_then(Value::as_u64) != Some(id) {
                continue;
            }
            if let Some(err) = v.get("error") {
                return Err(SnapshotError::Protocol(format!("{method}: {err}")));
            }
            return Ok(v.get("result").cloned().unwrap_or(Value::Null));
        }
    }

    fn wait_for_load(&mut self, deadline: Instant) -> Result<(), SnapshotError> {
        while !self.load_fired {
            self.read(deadline)?;
        }
        Ok(())
    }
}

/// A fixed set of provider sessions; each capture borrows one exclusively.
pub struct ProviderPool {
    idle: Mutex<Vec<Box<dyn ScreenshotProvider>>>,
    available: Condvar,
}

impl ProviderPool {
    pub fn new(sessions: Vec<Box<dyn ScreenshotProvider>>) -> Self {
        assert!(!sessions.is_empty(), "a provider pool needs at least one session");
        ProviderPool {
            idle: Mutex::new(sessions),
            available: Condvar::new(),
        }
    }

    pub fn capture(&self, target: &CaptureTarget, spec: &ViewportSpec) -> Result<Vec<u8>, SnapshotError> {
        let mut provider = {
            let mut idle = self.idle.lock().unwrap_or_else(|e| e.into_inner());
            loop {
                if let Some(p) = idle.pop() {
                    break p;
                }
                idle = self.available.wait(idle).unwrap_or_else(|e| e.into_inner());
            }
        };
        let result = capture_viewport(target, spec, provider.as_mut());
        self.idle.lock().unwrap_or_else(|e| e.into_inner()).push(provider);
        self.available.notify_one();
        result
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ViewportSpec {
        ViewportSpec {
            width: 100,
            height: 100,
            settle_delay: Duration::ZERO,
        }
    }

    #[test]
    fn solid_stub_matches_viewport() {
        let target = CaptureTarget::File("page.html".into());
        let bytes = capture_viewport(&target, &small(), &mut StubProvider::Solid([255, 0, 0])).unwrap();
        assert_eq!(&bytes[..4], b"\x89PNG");
        let mut reader = png::Decoder::new(std::io::Cursor::new(&bytes)).read_info().unwrap();
        let mut buf = vec![0; reader.output_buffer_size().unwrap()];
        let info = reader.next_frame(&mut buf).unwrap();
        assert_eq!((info.width, info.height), (100, 100));
        assert!(buf[..info.buffer_size()].chunks(3).all(|px| px == [255, 0, 0]));
    }

    #[test]
    fn wrong_size_or_garbage_is_rejected() {
        let target = CaptureTarget::File("page.html".into());
        let mut wrong = StubProvider::Fixed(solid_png(10, 10, [0, 0, 0]));
        assert!(matches!(
            capture_viewport(&target, &small(), &mut wrong),
            Err(SnapshotError::InvalidImage(_))
        ));
        let mut garbage = StubProvider::Fixed(b"not a png".to_vec());
        assert!(matches!(
            capture_viewport(&target, &small(), &mut garbage),
            Err(SnapshotError::InvalidImage(_))
        ));
        let exact = solid_png(100, 100, [1, 2, 3]);
        let mut fixed = StubProvider::Fixed(exact.clone());
        assert_eq!(capture_viewport(&target, &small(), &mut fixed).unwrap(), exact);
    }

    #[test]
    fn file_targets_become_file_urls() {
        let url = CaptureTarget::File("/tmp/a b/x.html".into()).to_url();
        assert_eq!(url, "file:///tmp/a%20b/x.html");
    }

    #[test]
    fn unreachable_endpoint_is_unavailable() {
        let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        drop(listener);
        let mut cdp = CdpProvider::new(&format!("http://{addr}"), Duration::from_secs(2));
        let err = cdp
            .capture(&CaptureTarget::File("x.html".into()), &small())
            .unwrap_err();
        assert!(matches!(err, SnapshotError::ProviderUnavailable(_)), "{err:?}");
    }

    #[test]
    fn pool_serves_concurrent_captures() {
        let pool = ProviderPool::new(vec![Box::new(StubProvider::Solid([0, 0, 0])), Box::new(StubProvider::Solid([0, 0, 0]))]);
        std::thread::scope(|s| {
            for _ in 0..6 {
                s.spawn(|| {
                    pool.capture(&CaptureTarget::File("x".into()), &small()).unwrap();
                });
            }
        });
    }
}
