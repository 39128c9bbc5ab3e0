//! Host-name heuristics shared by the feature rules.
//!
//! The registrable domain is approximated without a public-suffix list:
//! the last two labels, or the last three when the last two look like a
//! country-code second-level suffix such as `co.uk` or `com.au`.

use alloc::string::String;

const SECOND_LEVEL: [&str; 17] = [
    "ac", "co", "com", "edu", "gob", "go", "gov", "gv", "ltd", "mil", "ne", "net", "nic", "or", "org", "plc", "sch",
];

/// Lowercased host without a trailing dot.
pub fn canonical_host(host: &str) -> String {
    host.trim_end_matches('.').to_ascii_lowercase()
}

/// True for bracketed IPv6 literals and for any IPv4 spelling a browser
/// accepts: one to four dot-separated numbers, each decimal, octal
/// (leading `0`) or hexadecimal (`0x`), e.g. `0x7f.0.0.1` or `2130706433`.
pub fn is_ip_literal(host: &str) -> bool {
    if host.starts_with('[') {
        return true;
    }
    let host = host.strip_suffix('.').unwrap_or(host);
    if host.is_empty() {
        return false;
    }
    let mut parts = 0;
    for part in host.split('.') {
        parts += 1;
        if parts > 4 || !is_ipv4_number(part) {
            return false;
        }
    }
    true
}

fn is_ipv4_number(part: &str) -> bool {
    if part.is_empty() {
        return false;
    }
    if let Some(hex) = part.strip_prefix("0x").or_else(|| part.strip_prefix("0X")) {
        return hex.bytes().all(|b| b.is_ascii_hexdigit());
    }
    part.bytes().all(|b| b.is_ascii_digit())
}

/// Number of labels forming the registrable domain of `host`.
fn registrable_label_count(host: &str) -> usize {
    let labels: alloc::vec::Vec<&str> = host.split('.').collect();
    let n = labels.len();
    if n >= 3 && labels[n - 1].len() == 2 && SECOND_LEVEL.contains(&labels[n - 2]) {
        3
    } else {
        n.min(2)
    }
}

/// Registrable ("site") domain of a host; IP literals are returned whole.
pub fn registrable_domain(host: &str) -> String {
    let host = canonical_host(host);
    if is_ip_literal(&host) {
        return host;
    }
    let keep = registrable_label_count(&host);
    let mut start = host.len();
    for _ in 0..keep {
        start = host[..start].rfind('.').unwrap_or(0);
        if start == 0 {
            return host;
        }
    }
    String::from(&host[start + 1..])
}

/// Labels in front of the registrable domain, not counting a leading `www`.
pub fn subdomain_depth(host: &str) -> usize {
    let host = canonical_host(host);
    if is_ip_literal(&host) {
        return 0;
    }
    let total = host.split('.').count();
    let mut depth = total.saturating_sub(registrable_label_count(&host));
    if depth > 0 && host.starts_with("www.") {
        depth -= 1;
    }
    depth
}

pub fn same_site(a: &str, b: &str) -> bool {
    registrable_domain(a) == registrable_domain(b)
}
