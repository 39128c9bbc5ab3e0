//! URI references (RFC 3986): component splitting, reference resolution,
//! and an owned absolute `http`/`https` URL type.

use alloc::borrow::ToOwned;
use alloc::string::String;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// The five components of a URI reference, borrowed from the input.
///
/// Splitting follows the generic regular expression from RFC 3986
/// Appendix B, except that a scheme is only recognised when it is
/// syntactically valid (`ALPHA *( ALPHA / DIGIT / "+" / "-" / "." )`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UriRef<'a> {
    pub scheme: Option<&'a str>,
    pub authority: Option<&'a str>,
    pub path: &'a str,
    pub query: Option<&'a str>,
    pub fragment: Option<&'a str>,
}

impl<'a> UriRef<'a> {
    pub fn parse(input: &'a str) -> Self {
        let (rest, fragment) = match input.find('#') {
            Some(i) => (&input[..i], Some(&input[i + 1..])),
            None => (input, None),
        };
        let (rest, query) = match rest.find('?') {
            Some(i) => (&rest[..i], Some(&rest[i + 1..])),
            None => (rest, None),
        };
        let (scheme, rest) = match rest.find([':', '/']) {
            Some(i) if rest.as_bytes()[i] == b':' && is_scheme(&rest[..i]) => {
                (Some(&rest[..i]), &rest[i + 1..])
            }
            _ => (None, rest),
        };
        let (authority, path) = match rest.strip_prefix("//") {
            Some(after) => {
                let end = after.find('/').unwrap_or(after.len());
                (Some(&after[..end]), &after[end..])
            }
            None => (None, rest),
        };
        UriRef {
            scheme,
            authority,
            path,
            query,
            fragment,
        }
    }

    /// Recomposes the components (RFC 3986 section 5.3).
    pub fn recompose(&self) -> String {
        let mut out = String::new();
        if let Some(s) = self.scheme {
            out.push_str(s);
            out.push(':');
        }
        if let Some(a) = self.authority {
            out.push_str("//");
            out.push_str(a);
        }
        out.push_str(self.path);
        if let Some(q) = self.query {
            out.push('?');
            out.push_str(q);
        }
        if let Some(f) = self.fragment {
            out.push('#');
            out.push_str(f);
        }
        out
    }
}

fn is_scheme(s: &str) -> bool {
    let mut bytes = s.bytes();
    matches!(bytes.next(), Some(b) if b.is_ascii_alphabetic())
        && bytes.all(|b| b.is_ascii_alphanumeric() || matches!(b, b'+' | b'-' | b'.'))
}

/// Removes `.` and `..` segments from a path (RFC 3986 section 5.2.4).
pub fn remove_dot_segments(path: &str) -> String {
    let mut input = path;
    let mut output = String::with_capacity(path.len());
    while !input.is_empty() {
        if let Some(rest) = input.strip_prefix("../") {
            input = rest;
        } else if let Some(rest) = input.strip_prefix("./") {
            input = rest;
        } else if input.starts_with("/./") {
            input = &input[2..];
        } else if input == "/." {
            input = "/";
        } else if input.starts_with("/../") || input == "/.." {
            input = if input.len() == 3 { "/" } else { &input[3..] };
            match output.rfind('/') {
                Some(i) => output.truncate(i),
                None => output.clear(),
            }
        } else if input == "." || input == ".." {
            input = "";
        } else {
            let start = usize::from(input.starts_with('/'));
            let end = input[start..].find('/').map_or(input.len(), |i| i + start);
            output.push_str(&input[..end]);
            input = &input[end..];
        }
    }
    output
}

/// Resolves `reference` against an absolute `base` using the strict
/// algorithm of RFC 3986 section 5.2.2. Works for any scheme.
pub fn resolve_reference(base: &str, reference: &str) -> String {
    let b = UriRef::parse(base);
    let r = UriRef::parse(reference);

    let owned_path;
    let (scheme, authority, path, query);
    if r.scheme.is_some() {
        scheme = r.scheme;
        authority = r.authority;
        owned_path = remove_dot_segments(r.path);
        path = owned_path.as_str();
        query = r.query;
    } else {
        scheme = b.scheme;
        if r.authority.is_some() {
            authority = r.authority;
            owned_path = remove_dot_segments(r.path);
            path = owned_path.as_str();
            query = r.query;
        } else {
            authority = b.authority;
            if r.path.is_empty() {
                owned_path = b.path.to_owned();
                path = owned_path.as_str();
                query = r.query.or(b.query);
            } else {
                owned_path = if r.path.starts_with('/') {
                    remove_dot_segments(r.path)
                } else {
                    remove_dot_segments(&merge(&b, r.path))
                };
                path = owned_path.as_str();
                query = r.query;
            }
        }
    }
    UriRef {
        scheme,
        authority,
        path,
        query,
        fragment: r.fragment,
    }
    .recompose()
}

fn merge(base: &UriRef<'_>, ref_path: &str) -> String {
    let mut out = String::new();
    if base.authority.is_some() && base.path.is_empty() {
        out.push('/');
    } else if let Some(i) = base.path.rfind('/') {
        out.push_str(&base.path[..=i]);
    }
    out.push_str(ref_path);
    out
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum UrlError {
    #[error("URL has no scheme")]
    MissingScheme,
    #[error("unsupported scheme `{0}` (only http and https)")]
    UnsupportedScheme(String),
    #[error("URL has no host")]
    MissingHost,
    #[error("invalid port `{0}`")]
    InvalidPort(String),
    #[error("URL contains whitespace or control characters")]
    InvalidCharacter,
}

/// Why a reference found in a page could not be turned into a fetchable URL.
/// These are skips, not failures.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ResolveError {
    #[error("empty reference")]
    Empty,
    #[error("non-fetchable scheme `{0}`")]
    UnsupportedScheme(String),
    #[error("reference does not resolve to an http(s) URL: {0}")]
    Invalid(UrlError),
}

/// An absolute `http` or `https` URL with a non-empty host.
///
/// The serialization is kept as given, apart from the scheme which is
/// lowercased.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Url {
    serialization: String,
    scheme_end: usize,
    authority: (usize, usize),
    path_end: usize,
    query_end: usize,
}

impl Url {
    pub fn parse(input: &str) -> Result<Url, UrlError> {
        if input.bytes().any(|b| b <= b' ' || b == 0x7f) {
            return Err(UrlError::InvalidCharacter);
        }
        let parts = UriRef::parse(input);
        let scheme = parts.scheme.ok_or(UrlError::MissingScheme)?;
        if !scheme.eq_ignore_ascii_case("http") && !scheme.eq_ignore_ascii_case("https") {
            return Err(UrlError::UnsupportedScheme(scheme.to_owned()));
        }
        let authority = parts.authority.ok_or(UrlError::MissingHost)?;
        let (host, port) = split_host_port(authority);
        if host.is_empty() {
            return Err(UrlError::MissingHost);
        }
        if let Some(p) = port {
            if !p.is_empty() && p.parse::<u16>().is_err() {
                return Err(UrlError::InvalidPort(p.to_owned()));
            }
        }

        let mut serialization = String::with_capacity(input.len());
        serialization.extend(scheme.chars().map(|c| c.to_ascii_lowercase()));
        let scheme_end = serialization.len();
        serialization.push_str("://");
        let a_start = serialization.len();
        serialization.push_str(authority);
        let a_end = serialization.len();
        serialization.push_str(parts.path);
        let path_end = serialization.len();
        if let Some(q) = parts.query {
            serialization.push('?');
            serialization.push_str(q);
        }
        let query_end = serialization.len();
        if let Some(f) = parts.fragment {
            serialization.push('#');
            serialization.push_str(f);
        }
        Ok(Url {
            serialization,
            scheme_end,
            authority: (a_start, a_end),
            path_end,
            query_end,
        })
    }

    pub fn as_str(&self) -> &str {
        &self.serialization
    }

    pub fn scheme(&self) -> &str {
        &self.serialization[..self.scheme_end]
    }

    pub fn is_https(&self) -> bool {
        self.scheme() == "https"
    }

    pub fn authority(&self) -> &str {
        &self.serialization[self.authority.0..self.authority.1]
    }

    /// Host as written (IPv6 literals keep their brackets), without
    /// userinfo or port.
    pub fn host(&self) -> &str {
        split_host_port(self.authority()).0
    }

    /// The explicit port, if one is written and non-empty.
    pub fn port(&self) -> Option<u16> {
        split_host_port(self.authority())
            .1
            .filter(|p| !p.is_empty())
            .and_then(|p| p.parse().ok())
    }

    pub fn default_port(&self) -> u16 {
        if self.is_https() {
            443
        } else {
            80
        }
    }

    pub fn port_or_default(&self) -> u16 {
        self.port().unwrap_or_else(|| self.default_port())
    }

    pub fn has_userinfo(&self) -> bool {
        self.authority().contains('@')
    }

    pub fn path(&self) -> &str {
        &self.serialization[self.authority.1..self.path_end]
    }

    pub fn query(&self) -> Option<&str> {
        (self.query_end > self.path_end).then(|| &self.serialization[self.path_end + 1..self.query_end])
    }

    pub fn fragment(&self) -> Option<&str> {
        (self.serialization.len() > self.query_end).then(|| &self.serialization[self.query_end + 1..])
    }

    /// Last non-empty path segment, e.g. `logo.png` for `/img/logo.png`.
    pub fn last_segment(&self) -> Option<&str> {
        self.path().rsplit('/').next().filter(|s| !s.is_empty())
    }

    /// Resolves a reference found in a document against this URL.
    ///
    /// Surrounding whitespace and embedded tabs/newlines are dropped,
    /// protocol-relative references inherit this URL's scheme, and only
    /// references that end up as `http`/`https` URLs are accepted. Spaces,
    /// quotes, angle brackets and non-ASCII characters in the path, query
    /// and fragment are percent-encoded.
    pub fn join(&self, reference: &str) -> Result<Url, ResolveError> {
        let cleaned: String = reference
            .trim_matches(|c: char| c.is_ascii_whitespace() || c.is_ascii_control())
            .chars()
            .filter(|c| !matches!(c, '\t' | '\n' | '\r'))
            .collect();
        if cleaned.is_empty() {
            return Err(ResolveError::Empty);
        }
        if let Some(s) = UriRef::parse(&cleaned).scheme {
            if !s.eq_ignore_ascii_case("http") && !s.eq_ignore_ascii_case("https") {
                return Err(ResolveError::UnsupportedScheme(s.to_ascii_lowercase()));
            }
        }
        let resolved = resolve_reference(self.as_str(), &cleaned);
        Url::parse(&encode_unsafe(&resolved)).map_err(ResolveError::Invalid)
    }

    /// Key used to decide whether two URLs name the same resource:
    /// lowercase scheme and host, default port dropped, empty path
    /// written as `/`, fragment removed. Path and query keep their case.
    pub fn normalized_key(&self) -> String {
        let authority = self.authority();
        let (userinfo, hostport) = match authority.rfind('@') {
            Some(i) => (Some(&authority[..i]), &authority[i + 1..]),
            None => (None, authority),
        };
        let (host, _) = split_host_port(hostport);
        let mut key = String::with_capacity(self.serialization.len());
        key.push_str(self.scheme());
        key.push_str("://");
        if let Some(u) = userinfo {
            key.push_str(u);
            key.push('@');
        }
        key.extend(host.chars().map(|c| c.to_ascii_lowercase()));
        if let Some(p) = self.port() {
            if p != self.default_port() {
                key.push(':');
                key.push_str(&alloc::format!("{p}"));
            }
        }
        let path = self.path();
        key.push_str(if path.is_empty() { "/" } else { path });
        if let Some(q) = self.query() {
            key.push('?');
            key.push_str(q);
        }
        key
    }
}

/// Splits `[userinfo@]host[:port]` into host and optional port text.
fn split_host_port(authority: &str) -> (&str, Option<&str>) {
    let hostport = authority.rsplit_once('@').map_or(authority, |(_, h)| h);
    if hostport.starts_with('[') {
        return match hostport.find(']') {
            Some(end) => {
                let rest = &hostport[end + 1..];
                (&hostport[..=end], rest.strip_prefix(':'))
            }
            None => (hostport, None),
        };
    }
    match hostport.rsplit_once(':') {
        Some((h, p)) => (h, Some(p)),
        None => (hostport, None),
    }
}

fn encode_unsafe(s: &str) -> String {
    const HEX: &[u8; 16] = b"0123456789ABCDEF";
    let parts = UriRef::parse(s);
    let prefix_len = s.len() - parts.path.len() - parts.query.map_or(0, |q| q.len() + 1) - parts.fragment.map_or(0, |f| f.len() + 1);
    let mut out = String::with_capacity(s.len());
    out.push_str(&s[..prefix_len]);
    for &b in &s.as_bytes()[prefix_len..] {
        if b <= b' ' || b >= 0x7f || matches!(b, b'"' | b'<' | b'>' | b'`') {
            out.push('%');
            out.push(HEX[usize::from(b >> 4)] as char);
            out.push(HEX[usize::from(b & 0xf)] as char);
        } else {
            out.push(b as char);
        }
    }
    out
}

impl fmt::Display for Url {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.serialization)
    }
}

impl fmt::Debug for Url {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Url({:?})", self.serialization)
    }
}

impl FromStr for Url {
    type Err = UrlError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Url::parse(s)
    }
}

impl Serialize for Url {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Url {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Url::parse(&s).map_err(serde::de::Error::custom)
    }
}
