//! HTTP(S) retrieval with per-host politeness, retries, manual redirect
//! following and a body size cap.

use std::collections::HashMap;
use std::error::Error as _;
use std::io::{self, Read};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use phishcollect_core::Url;
use reqwest::header::{CONTENT_TYPE, LOCATION};

pub const DEFAULT_USER_AGENT: &str = concat!("phishcollect/", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FetchPolicy {
    pub connect_timeout: Duration,
    pub total_timeout: Duration,
    pub max_redirects: u32,
    pub max_body_bytes: u64,
    /// Extra attempts after a timeout, DNS failure or 5xx answer.
    pub retries: u32,
    pub per_host_delay: Duration,
    pub user_agent: String,
    /// Accept invalid TLS certificates.
    pub insecure: bool,
    /// Use proxies from `HTTP_PROXY`/`HTTPS_PROXY`/`NO_PROXY`.
    pub env_proxy: bool,
}

impl Default for FetchPolicy {
    fn default() -> Self {
        FetchPolicy {
            connect_timeout: Duration::from_secs(10),
            total_timeout: Duration::from_secs(60),
            max_redirects: 10,
            max_body_bytes: 25 * 1024 * 1024,
            retries: 2,
            per_host_delay: Duration::from_millis(500),
            user_agent: DEFAULT_USER_AGENT.to_string(),
            insecure: false,
            env_proxy: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PolicyError {
    #[error("{0} must be greater than zero")]
    NotPositive(&'static str),
}

impl FetchPolicy {
    pub fn validate(&self) -> Result<(), PolicyError> {
        if self.connect_timeout.is_zero() {
            return Err(PolicyError::NotPositive("connect timeout"));
        }
        if self.total_timeout.is_zero() {
            return Err(PolicyError::NotPositive("total timeout"));
        }
        if self.per_host_delay.is_zero() {
            return Err(PolicyError::NotPositive("per-host delay"));
        }
        if self.max_body_bytes == 0 {
            return Err(PolicyError::NotPositive("max body bytes"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FetchResult {
    pub requested_url: Url,
    pub final_url: Url,
    pub status_code: u16,
    /// `type/subtype` from Content-Type, lowercased; empty when absent.
    pub media_type: String,
    pub charset: Option<String>,
    pub body: Vec<u8>,
    pub elapsed: Duration,
    /// The body was cut at `max_body_bytes`.
    pub truncated: bool,
    pub redirect_hops: u32,
}

impl FetchResult {
    /// Body decoded with the declared charset (header, then `<meta>`),
    /// falling back to lossy UTF-8.
    pub fn text(&self) -> String {
        decode_html(&self.body, self.charset.as_deref())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FetchError {
    #[error("content forbidden (HTTP 403)")]
    ContentForbidden,
    #[error("file not found (HTTP 404)")]
    FileNotFound,
    #[error("HTTP status {0}")]
    HttpError(u16),
    #[error("timed out")]
    Timeout,
    #[error("more than the allowed number of redirects")]
    TooManyRedirects,
    #[error("redirect to unusable location `{0}`")]
    InvalidRedirect(String),
    #[error("DNS resolution failed: {0}")]
    DnsFailure(String),
    #[error("TLS failure: {0}")]
    TlsFailure(String),
    #[error("connection failed: {0}")]
    ConnectionFailed(String),
}

impl FetchError {
    /// Stable class name used in manifests and run summaries.
    pub fn kind(&self) -> &'static str {
        match self {
            FetchError::ContentForbidden => "ContentForbidden",
            FetchError::FileNotFound => "FileNotFound",
            FetchError::HttpError(_) => "HttpError",
            FetchError::Timeout => "Timeout",
            FetchError::TooManyRedirects => "TooManyRedirects",
            FetchError::InvalidRedirect(_) => "InvalidRedirect",
            FetchError::DnsFailure(_) => "DnsFailure",
            FetchError::TlsFailure(_) => "TlsFailure",
            FetchError::ConnectionFailed(_) => "ConnectionFailed",
        }
    }

    pub fn status_code(&self) -> Option<u16> {
        match self {
            FetchError::ContentForbidden => Some(403),
            FetchError::FileNotFound => Some(404),
            FetchError::HttpError(code) => Some(*code),
            _ => None,
        }
    }

    pub fn is_transient(&self) -> bool {
        match self {
            FetchError::Timeout | FetchError::DnsFailure(_) => true,
            FetchError::HttpError(code) => (500..600).contains(code),
            _ => false,
        }
    }

    fn from_status(code: u16) -> FetchError {
        match code {
            403 => FetchError::ContentForbidden,
            404 => FetchError::FileNotFound,
            _ => FetchError::HttpError(code),
        }
    }

    fn from_reqwest(err: &reqwest::Error) -> FetchError {
        if err.is_timeout() {
            return FetchError::Timeout;
        }
        let mut chain = err.to_string();
        let mut source = err.source();
        while let Some(s) = source {
            if let Some(io) = s.downcast_ref::<io::Error>() {
                if io.kind() == io::ErrorKind::TimedOut {
                    return FetchError::Timeout;
                }
            }
            chain.push_str(": ");
            chain.push_str(&s.to_string());
            source = s.source();
        }
        let lower = chain.to_ascii_lowercase();
        if ["dns error", "failed to lookup address", "name or service not known", "no such host"]
            .iter()
            .any(|p| lower.contains(p))
        {
            FetchError::DnsFailure(chain)
        } else if ["certificate", "tls", "ssl", "handshake"].iter().any(|p| lower.contains(p)) {
            FetchError::TlsFailure(chain)
        } else {
            FetchError::ConnectionFailed(chain)
        }
    }

    fn from_body(err: io::Error) -> FetchError {
        if err.kind() == io::ErrorKind::TimedOut {
            return FetchError::Timeout;
        }
        match err.get_ref().and_then(|e| e.downcast_ref::<reqwest::Error>()) {
            Some(inner) => FetchError::from_reqwest(inner),
            None => FetchError::ConnectionFailed(err.to_string()),
        }
    }
}

/// Spaces out requests to the same host. Each host has its own lock, held
/// while waiting, so the recorded dispatch instants of consecutive
/// requests to one host are at least `delay` apart.
#[derive(Debug)]
pub struct HostScheduler {
    delay: Duration,
    hosts: Mutex<HashMap<String, Arc<Mutex<Option<Instant>>>>>,
}

impl HostScheduler {
    pub fn new(delay: Duration) -> Self {
        HostScheduler {
            delay,
            hosts: Mutex::new(HashMap::new()),
        }
    }

    /// Blocks until a request to `host` may be sent, then returns the
    /// dispatch instant.
    pub fn acquire(&self, host: &str) -> Instant {
        let slot = {
            let mut hosts = self.hosts.lock().unwrap_or_else(|e| e.into_inner());
            hosts.entry(host.to_ascii_lowercase()).or_default().clone()
        };
        let mut last = slot.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(prev) = *last {
            let ready = prev + self.delay;
            let now = Instant::now();
            if ready > now {
                thread::sleep(ready - now);
            }
        }
        let now = Instant::now();
        *last = Some(now);
        now
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RequestEntry {
    pub host: String,
    pub url: String,
    pub at: Instant,
}

/// Every request the fetcher dispatched, in dispatch order per host.
#[derive(Debug, Default)]
pub struct RequestLog {
    entries: Mutex<Vec<RequestEntry>>,
}

impl RequestLog {
    pub fn new() -> Self {
        RequestLog::default()
    }

    fn push(&self, entry: RequestEntry) {
        self.entries.lock().unwrap_or_else(|e| e.into_inner()).push(entry);
    }

    pub fn entries(&self) -> Vec<RequestEntry> {
        self.entries.lock().unwrap_or_else(|e| e.into_inner()).clone()
    }

    pub fn len(&self) -> usize {
        self.entries.lock().unwrap_or_else(|e| e.into_inner()).len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Smallest gap between consecutive requests to the same host, if any
    /// host was hit twice.
    pub fn min_same_host_gap(&self) -> Option<Duration> {
        let mut by_host: HashMap<&str, Vec<Instant>> = HashMap::new();
        let entries = self.entries();
        for e in &entries {
            by_host.entry(e.host.as_str()).or_default().push(e.at);
        }
        by_host
            .values_mut()
            .flat_map(|times| {
                times.sort();
                times.windows(2).map(|w| w[1] - w[0]).collect::<Vec<_>>()
            })
            .min()
    }
}

/// Shared HTTP client; cheap to share by reference across worker threads.
pub struct Fetcher {
    client: reqwest::blocking::Client,
    policy: FetchPolicy,
    scheduler: HostScheduler,
    log: Option<Arc<RequestLog>>,
}

impl Fetcher {
    pub fn new(policy: FetchPolicy) -> Result<Self, anyhow::Error> {
        policy.validate()?;
        let mut builder = reqwest::blocking::Client::builder()
            .redirect(reqwest::redirect::Policy::none())
            .connect_timeout(policy.connect_timeout)
            .timeout(policy.total_timeout)
            .user_agent(policy.user_agent.clone())
            .tls_danger_accept_invalid_certs(policy.insecure);
        if !policy.env_proxy {
            builder = builder.no_proxy();
        }
        Ok(Fetcher {
            client: builder.build()?,
            scheduler: HostScheduler::new(policy.per_host_delay),
            policy,
            log: None,
        })
    }

    pub fn with_log(mut self, log: Arc<RequestLog>) -> Self {
        self.log = Some(log);
        self
    }

    pub fn policy(&self) -> &FetchPolicy {
        &self.policy
    }

    /// Retrieves a landing page. Use [`FetchResult::text`] for the decoded
    /// document.
    pub fn fetch_page(&self, url: &Url) -> Result<FetchResult, FetchError> {
        self.fetch(url)
    }

    /// Retrieves a sub-resource; the body is kept as raw bytes.
    pub fn fetch_resource(&self, url: &Url) -> Result<FetchResult, FetchError> {
        self.fetch(url)
    }

    fn fetch(&self, url: &Url) -> Result<FetchResult, FetchError> {
        let mut attempt = 0;
        loop {
            match self.fetch_once(url) {
                Err(e) if e.is_transient() && attempt < self.policy.retries => {
                    log::debug!("retrying {url} after {e}");
                    attempt += 1;
                }
                other => return other,
            }
        }
    }

    fn fetch_once(&self, url: &Url) -> Result<FetchResult, FetchError> {
        let started = Instant::now();
        let mut current = url.clone();
        let mut hops = 0;
        loop {
            let at = self.scheduler.acquire(current.host());
            if let Some(log) = &self.log {
                log.push(RequestEntry {
                    host: current.host().to_ascii_lowercase(),
                    url: current.to_string(),
                    at,
                });
            }
            let response = self
                .client
                .get(current.as_str())
                .send()
                .map_err(|e| FetchError::from_reqwest(&e))?;
            let status = response.status().as_u16();

            if response.status().is_redirection() {
                if let Some(location) = response.headers().get(LOCATION) {
                    let location = String::from_utf8_lossy(location.as_bytes()).into_owned();
                    if hops >= self.policy.max_redirects {
                        return Err(FetchError::TooManyRedirects);
                    }
                    current = current
                        .join(&location)
                        .map_err(|_| FetchError::InvalidRedirect(location))?;
                    hops += 1;
                    continue;
                }
            }
            if !response.status().is_success() {
                return Err(FetchError::from_status(status));
            }

            let (media_type, charset) = response
                .headers()
                .get(CONTENT_TYPE)
                .and_then(|v| v.to_str().ok())
                .map(parse_content_type)
                .unwrap_or_default();
            let limit = self.policy.max_body_bytes;
            let mut body = Vec::new();
            response
                .take(limit.saturating_add(1))
                .read_to_end(&mut body)
                .map_err(FetchError::from_body)?;
            let truncated = body.len() as u64 > limit;
            body.truncate(limit as usize);

            return Ok(FetchResult {
                requested_url: url.clone(),
                final_url: current,
                status_code: status,
                media_type,
                charset,
                body,
                elapsed: started.elapsed(),
                truncated,
                redirect_hops: hops,
            });
        }
    }
}

/// Splits a Content-Type value into lowercased media type and charset.
pub fn parse_content_type(value: &str) -> (String, Option<String>) {
    let mut parts = value.split(';');
    let media_type = parts.next().unwrap_or("").trim().to_ascii_lowercase();
    let charset = parts.find_map(|p| {
        let (k, v) = p.split_once('=')?;
        k.trim()
            .eq_ignore_ascii_case("charset")
            .then(|| v.trim().trim_matches('"').to_string())
    });
    (media_type, charset)
}

/// Charset declared by a `<meta>` tag in the first 1024 bytes.
fn sniff_meta_charset(bytes: &[u8]) -> Option<String> {
    let head = &bytes[..bytes.len().min(1024)];
    let lower = String::from_utf8_lossy(head).to_ascii_lowercase();
    let mut rest = lower.as_str();
    while let Some(i) = rest.find("<meta") {
        rest = &rest[i + 5..];
        let tag = &rest[..rest.find('>').unwrap_or(rest.len())];
        if let Some(j) = tag.find("charset=") {
            let value: String = tag[j + 8..]
                .trim_start_matches(['"', '\''])
                .chars()
                .take_while(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | ':' | '.'))
                .collect();
            if !value.is_empty() {
                return Some(value);
            }
        }
    }
    None
}

/// Decodes a document: BOM, then `declared`, then a `<meta>` charset, then
/// UTF-8. Malformed sequences become U+FFFD.
pub fn decode_html(bytes: &[u8], declared: Option<&str>) -> String {
    let encoding = declared
        .and_then(|l| encoding_rs::Encoding::for_label(l.as_bytes()))
        .or_else(|| sniff_meta_charset(bytes).and_then(|l| encoding_rs::Encoding::for_label(l.as_bytes())))
        .unwrap_or(encoding_rs::UTF_8);
    let (text, _, _) = encoding.decode(bytes);
    text.into_owned()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn content_type_parsing() {
        assert_eq!(
            parse_content_type("Text/HTML; charset=\"ISO-8859-1\""),
            ("text/html".to_string(), Some("ISO-8859-1".to_string()))
        );
        assert_eq!(parse_content_type("image/png"), ("image/png".to_string(), None));
    }

    #[test]
    fn decoding_prefers_header_then_meta() {
        let latin1 = b"<html><meta charset=\"iso-8859-1\">caf\xe9</html>";
        assert!(decode_html(latin1, None).contains("café"));
        assert!(decode_html(b"caf\xe9", Some("windows-1252")).contains("café"));
        assert_eq!(decode_html(b"ok \xff", None), "ok \u{fffd}");
        assert_eq!(decode_html("é".as_bytes(), None), "é");
    }

    #[test]
    fn transient_classification() {
        assert!(FetchError::Timeout.is_transient());
        assert!(FetchError::DnsFailure(String::new()).is_transient());
        assert!(FetchError::HttpError(503).is_transient());
        assert!(!FetchError::ContentForbidden.is_transient());
        assert!(!FetchError::FileNotFound.is_transient());
        assert!(!FetchError::HttpError(410).is_transient());
        assert_eq!(FetchError::from_status(403), FetchError::ContentForbidden);
        assert_eq!(FetchError::from_status(404), FetchError::FileNotFound);
        assert_eq!(FetchError::from_status(418).status_code(), Some(418));
    }

    #[test]
    fn scheduler_spaces_same_host() {
        let s = HostScheduler::new(Duration::from_millis(30));
        let a = s.acquire("a.com");
        let other = s.acquire("b.com");
        let b = s.acquire("A.com");
        assert!(b - a >= Duration::from_millis(30));
        assert!(other - a < Duration::from_millis(30));
    }

    #[test]
    fn policy_validation() {
        assert!(FetchPolicy::default().validate().is_ok());
        let p = FetchPolicy {
            max_body_bytes: 0,
            ..FetchPolicy::default()
        };
        assert_eq!(p.validate(), Err(PolicyError::NotPositive("max body bytes")));
    }
}
