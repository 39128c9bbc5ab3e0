use alloc::string::String;

use crate::domain::{is_ip_literal, same_site};
use crate::extract::{document_base, DiscoveredResources};
use crate::features::{FeatureName, PartialVector, Ternary};
use crate::html::{tokenize, Tag, Token};
use crate::url::Url;

/// Everything the page-content rules look at for one sample.
#[derive(Debug, Clone, Copy)]
pub struct PageContent<'a> {
    pub html: &'a str,
    pub final_url: &'a Url,
    pub resources: &'a DiscoveredResources,
    /// Bodies of the archived external scripts. Inline scripts are part of
    /// `html` already.
    pub external_scripts: &'a [String],
    /// HTTP redirects followed to reach `final_url`.
    pub redirect_hops: u32,
}

/// Ratio thresholds `(legit_below, phishing_above)` as integer
/// per-mille values, so boundaries are compared exactly.
const ANCHOR_PERMILLE: (u64, u64) = (317, 670);
const REQUEST_PERMILLE: (u64, u64) = (220, 610);
const LINKS_IN_TAGS_PERMILLE: (u64, u64) = (170, 810);

/// `1` below the lower ratio, `-1` above the upper one, `0` between
/// (inclusive). An empty population counts as legitimate.
fn ratio_rule(hits: u64, total: u64, (low, high): (u64, u64)) -> Ternary {
    if total == 0 || hits * 1000 < low * total {
        Ternary::Legitimate
    } else if hits * 1000 <= high * total {
        Ternary::Suspicious
    } else {
        Ternary::Phishing
    }
}

#[derive(Default)]
struct Counts {
    anchors: u64,
    unsafe_anchors: u64,
    objects: u64,
    external_objects: u64,
    tag_links: u64,
    external_tag_links: u64,
    sfh: Option<Ternary>,
    mailto_form: bool,
    hidden_iframe: bool,
    foreign_identity: bool,
}

fn is_unsafe_anchor(tag: &Tag<'_>, base: &Url, page_host: &str) -> bool {
    let Some(href) = tag.attr("href") else { return true };
    let href = href.trim();
    if href.is_empty() || href.starts_with('#') {
        return true;
    }
    if href.get(..11).is_some_and(|p| p.eq_ignore_ascii_case("javascript:")) {
        return true;
    }
    match base.join(href) {
        Ok(url) => !same_site(url.host(), page_host),
        Err(_) => false,
    }
}

fn form_handler(tag: &Tag<'_>, base: &Url, page_host: &str) -> (Ternary, bool) {
    let action = tag.attr("action");
    let action = action.as_deref().map(str::trim).unwrap_or("");
    if action.is_empty() || action.eq_ignore_ascii_case("about:blank") {
        return (Ternary::Phishing, false);
    }
    let mailto = action.get(..7).is_some_and(|p| p.eq_ignore_ascii_case("mailto:"));
    match base.join(action) {
        Ok(url) if same_site(url.host(), page_host) => (Ternary::Legitimate, mailto),
        _ => (Ternary::Suspicious, mailto),
    }
}

fn is_hidden_iframe(tag: &Tag<'_>) -> bool {
    let zero = |name: &str| {
        tag.attr(name)
            .is_some_and(|v| matches!(v.trim().trim_end_matches("px").trim(), "0"))
    };
    let style_hidden = tag.attr("style").is_some_and(|s| {
        let compact = compact_lower(&s);
        compact.contains("display:none") || compact.contains("visibility:hidden")
    });
    zero("frameborder") || zero("width") || zero("height") || style_hidden || tag.has_attr("hidden")
}

fn compact_lower(s: &str) -> String {
    s.chars()
        .filter(|c| !c.is_whitespace())
        .flat_map(char::to_lowercase)
        .collect()
}

fn scan(html: &str, base: &Url, page_host: &str) -> Counts {
    let mut c = Counts::default();
    let external = |reference: &str| base.join(reference).ok().map(|u| !same_site(u.host(), page_host));
    for token in tokenize(html) {
        let Token::StartTag(tag) = token else { continue };
        let name = tag.name.to_ascii_lowercase();
        match name.as_str() {
            "a" => {
                c.anchors += 1;
                c.unsafe_anchors += u64::from(is_unsafe_anchor(&tag, base, page_host));
            }
            "img" | "audio" | "video" | "source" | "embed" | "object" => {
                let src = if name == "object" { tag.attr("data") } else { tag.attr("src") };
                if let Some(ext) = src.and_then(|s| external(&s)) {
                    c.objects += 1;
                    c.external_objects += u64::from(ext);
                }
            }
            "script" | "link" | "meta" => {
                let reference = match name.as_str() {
                    "script" => tag.attr("src"),
                    "link" => tag.attr("href"),
                    _ => tag.attr("content").filter(|v| Url::parse(v.trim()).is_ok()),
                };
                if let Some(ext) = reference.and_then(|r| external(&r)) {
                    c.tag_links += 1;
                    c.external_tag_links += u64::from(ext);
                }
                let identity = match name.as_str() {
                    "link" if tag.attr("rel").is_some_and(|r| r.trim().eq_ignore_ascii_case("canonical")) => tag.attr("href"),
                    "meta" if tag.attr("property").is_some_and(|p| p.trim().eq_ignore_ascii_case("og:url")) => tag.attr("content"),
                    _ => None,
                };
                if identity.and_then(|i| external(&i)) == Some(true) {
                    c.foreign_identity = true;
                }
            }
            "form" => {
                let (sfh, mailto) = form_handler(&tag, base, page_host);
                c.sfh = Some(c.sfh.map_or(sfh, |prev| prev.min(sfh)));
                c.mailto_form |= mailto;
            }
            "iframe" => c.hidden_iframe |= is_hidden_iframe(&tag),
            _ => {}
        }
    }
    c
}

const RIGHT_CLICK_PATTERNS: [&str; 7] = [
    "event.button==2",
    "event.button===2",
    "event.which==3",
    "event.which===3",
    "oncontextmenu=\"returnfalse",
    "oncontextmenu='returnfalse",
    "oncontextmenu=returnfalse",
];

/// Page-content features: the abnormal-request group, the HTML/JS group
/// and `Favicon`.
pub fn content_features(page: &PageContent<'_>) -> PartialVector {
    let base = document_base(page.html, page.final_url);
    let page_host = page.final_url.host();
    let c = scan(page.html, &base, page_host);
    let mut v = PartialVector::default();

    let foreign_favicon = !page.resources.favicon_fallback
        && page.resources.favicon_urls.iter().any(|u| !same_site(u.host(), page_host));
    v.set(FeatureName::Favicon, Ternary::binary(!foreign_favicon));

    v.set(FeatureName::RequestUrl, ratio_rule(c.external_objects, c.objects, REQUEST_PERMILLE));
    v.set(FeatureName::UrlOfAnchor, ratio_rule(c.unsafe_anchors, c.anchors, ANCHOR_PERMILLE));
    v.set(FeatureName::LinksInTags, ratio_rule(c.external_tag_links, c.tag_links, LINKS_IN_TAGS_PERMILLE));
    v.set(FeatureName::Sfh, c.sfh.unwrap_or(Ternary::Legitimate));
    v.set(FeatureName::SubmittingToEmail, Ternary::binary(!c.mailto_form));
    v.set(
        FeatureName::AbnormalUrl,
        Ternary::binary(!is_ip_literal(page_host) && !c.foreign_identity),
    );

    v.set(
        FeatureName::Redirect,
        match page.redirect_hops {
            0..=1 => Ternary::Legitimate,
            2..=3 => Ternary::Suspicious,
            _ => Ternary::Phishing,
        },
    );

    let mut corpus = compact_lower(page.html);
    for script in page.external_scripts {
        corpus.push_str(&compact_lower(script));
    }
    let has = |p: &str| corpus.contains(p);
    v.set(
        FeatureName::OnMouseover,
        Ternary::binary(!(has("onmouseover") && has("window.status"))),
    );
    v.set(
        FeatureName::RightClick,
        Ternary::binary(!RIGHT_CLICK_PATTERNS.iter().any(|p| has(p))),
    );
    v.set(FeatureName::PopUpWidnow, Ternary::binary(!(has("window.open(") || has("prompt("))));
    v.set(FeatureName::Iframe, Ternary::binary(!c.hidden_iframe));
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extract::discover;

    fn features(html: &str, url: &str, hops: u32) -> PartialVector {
        let url = Url::parse(url).unwrap();
        let resources = discover(html, &url);
        content_features(&PageContent {
            html,
            final_url: &url,
            resources: &resources,
            external_scripts: &[],
            redirect_hops: hops,
        })
    }

    fn get(html: &str, name: FeatureName) -> i8 {
        features(html, "http://shop.example.com/login", 0).get(name).unwrap().value()
    }

    #[test]
    fn assigns_twelve_features() {
        assert_eq!(features("<p>", "http://x.com/", 0).assigned().count(), 12);
    }

    #[test]
    fn anchors() {
        assert_eq!(get(r##"<a href="#">a</a><a href="#">b</a>"##, FeatureName::UrlOfAnchor), -1);
        assert_eq!(get("<p>no anchors</p>", FeatureName::UrlOfAnchor), 1);
        assert_eq!(get(r#"<a href="/a">a</a><a href="http://www.example.com/b">b</a>"#, FeatureName::UrlOfAnchor), 1);
        assert_eq!(
            get(r##"<a href="#content"></a><a href="/x"></a><a href="/y"></a>"##, FeatureName::UrlOfAnchor),
            0
        );
        assert_eq!(get(r#"<a href="JavaScript::void()"></a>"#, FeatureName::UrlOfAnchor), -1);
        assert_eq!(get(r#"<a href="http://other.org/"></a><a href="/x"></a>"#, FeatureName::UrlOfAnchor), 0);
    }

    #[test]
    fn anchor_ratio_boundaries() {
        // 317/1000 is the first suspicious ratio, 670/1000 the last one
        assert_eq!(ratio_rule(316, 1000, ANCHOR_PERMILLE), Ternary::Legitimate);
        assert_eq!(ratio_rule(317, 1000, ANCHOR_PERMILLE), Ternary::Suspicious);
        assert_eq!(ratio_rule(670, 1000, ANCHOR_PERMILLE), Ternary::Suspicious);
        assert_eq!(ratio_rule(671, 1000, ANCHOR_PERMILLE), Ternary::Phishing);
        assert_eq!(ratio_rule(0, 0, ANCHOR_PERMILLE), Ternary::Legitimate);
    }

    #[test]
    fn favicon_domain() {
        assert_eq!(get(r#"<link rel=icon href="http://cdn.other.net/f.ico">"#, FeatureName::Favicon), -1);
        assert_eq!(get(r#"<link rel=icon href="http://static.example.com/f.ico">"#, FeatureName::Favicon), 1);
        assert_eq!(get("<p>fallback</p>", FeatureName::Favicon), 1);
    }

    #[test]
    fn forms() {
        assert_eq!(get(r#"<form action=""></form>"#, FeatureName::Sfh), -1);
        assert_eq!(get(r#"<form action="about:blank"></form>"#, FeatureName::Sfh), -1);
        assert_eq!(get(r#"<form action="http://collector.ru/x.php"></form>"#, FeatureName::Sfh), 0);
        assert_eq!(get(r#"<form action="/login.php"></form>"#, FeatureName::Sfh), 1);
        assert_eq!(get("<p>", FeatureName::Sfh), 1);
        assert_eq!(get(r#"<form action="mailto:a@b.c"></form>"#, FeatureName::SubmittingToEmail), -1);
        assert_eq!(get(r#"<form action="/x"></form>"#, FeatureName::SubmittingToEmail), 1);
    }

    #[test]
    fn requests_and_tag_links() {
        let html = r#"<img src="http://a.org/1.png"><img src="/2.png"><img src="/3.png"><img src="/4.png">"#;
        assert_eq!(get(html, FeatureName::RequestUrl), 0);
        let html = r#"<img src="http://a.org/1.png"><img src="http://b.org/2.png">"#;
        assert_eq!(get(html, FeatureName::RequestUrl), -1);
        let html = r#"<script src="http://a.org/x.js"></script><link rel=stylesheet href="/s.css">"#;
        assert_eq!(get(html, FeatureName::LinksInTags), 0);
        assert_eq!(get("<p>", FeatureName::LinksInTags), 1);
    }

    #[test]
    fn script_patterns() {
        assert_eq!(get(r#"<a onmouseover="window.status='x'">"#, FeatureName::OnMouseover), -1);
        assert_eq!(get(r#"<a onmouseover="hi()">"#, FeatureName::OnMouseover), 1);
        assert_eq!(get("<script>if (event.button == 2) alert(1)</script>", FeatureName::RightClick), -1);
        assert_eq!(get(r#"<body oncontextmenu="return false">"#, FeatureName::RightClick), -1);
        assert_eq!(get("<script>window.open('x')</script>", FeatureName::PopUpWidnow), -1);
        assert_eq!(get("<script>var p = prompt('pin')</script>", FeatureName::PopUpWidnow), -1);
        assert_eq!(get(r#"<iframe src="x" frameborder="0"></iframe>"#, FeatureName::Iframe), -1);
        assert_eq!(get(r#"<iframe src="x" style="display: none"></iframe>"#, FeatureName::Iframe), -1);
        assert_eq!(get(r#"<iframe src="x" width="300"></iframe>"#, FeatureName::Iframe), 1);
    }

    #[test]
    fn external_script_text_is_scanned() {
        let url = Url::parse("http://x.com/").unwrap();
        let resources = discover("<p>", &url);
        let scripts = [String::from("document.oncontextmenu = function(e){ if (event.button==2) {} }")];
        let v = content_features(&PageContent {
            html: "<p>",
            final_url: &url,
            resources: &resources,
            external_scripts: &scripts,
            redirect_hops: 0,
        });
        assert_eq!(v.get(FeatureName::RightClick), Some(Ternary::Phishing));
    }

    #[test]
    fn redirects_and_identity() {
        let hops = |n| features("<p>", "http://x.com/", n).get(FeatureName::Redirect).unwrap().value();
        assert_eq!([hops(0), hops(1), hops(2), hops(3), hops(4)], [1, 1, 0, 0, -1]);
        assert_eq!(get(r#"<link rel="canonical" href="https://www.paypal.com/signin">"#, FeatureName::AbnormalUrl), -1);
        assert_eq!(get(r#"<meta property="og:url" content="https://example.com/">"#, FeatureName::AbnormalUrl), 1);
        let ip = features("<p>", "http://10.1.2.3/", 0).get(FeatureName::AbnormalUrl).unwrap();
        assert_eq!(ip, Ternary::Phishing);
    }
}
