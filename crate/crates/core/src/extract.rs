//! Discovery of the five resource classes referenced by a landing page:
//! scripts, styles, favicons and images (the page itself being the fifth).
//!
//! References are resolved against the document base: the fetch's final
//! URL, overridden by the first `<base href>` element when one is present.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::html::{tokenize, Tag, Token};
use crate::url::{ResolveError, Url};

/// Favicon `rel` values recognised in addition to any `rel` containing the
/// `icon` token.
const FAVICON_RELS: [&str; 9] = [
    "icon",
    "apple-touch-icon",
    "shortcut icon",
    "mask-icon",
    "mask icon",
    "fluid-icon",
    "fluid icon",
    "manifest",
    "yandex-tableau-widget",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InlineStyle {
    /// Lowercased name of the element carrying the `style` attribute.
    pub element: String,
    pub declarations: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Scripts {
    pub inline: Vec<String>,
    pub external: Vec<Url>,
    pub skipped: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Styles {
    pub inline: Vec<InlineStyle>,
    pub internal: Vec<String>,
    pub external: Vec<Url>,
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Favicons {
    pub urls: Vec<Url>,
    /// Set when the page declares no icon and `urls` holds only the
    /// conventional `/favicon.ico`.
    pub fallback: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Images {
    pub urls: Vec<Url>,
    /// `data:` URIs and other unresolvable sources.
    pub skipped: usize,
}

/// Everything [`discover`] finds in one document, in document order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiscoveredResources {
    pub inline_scripts: Vec<String>,
    pub external_script_urls: Vec<Url>,
    pub inline_style_decls: Vec<InlineStyle>,
    pub internal_style_blocks: Vec<String>,
    pub external_stylesheet_urls: Vec<Url>,
    pub favicon_urls: Vec<Url>,
    pub favicon_fallback: bool,
    pub image_urls: Vec<Url>,
    pub skipped: usize,
}

/// Resolves a document reference against an absolute base URL.
pub fn resolve_url(base: &Url, reference: &str) -> Result<Url, ResolveError> {
    base.join(reference)
}

/// Base URL in effect for `html`: the first `<base href>` that resolves,
/// otherwise `fetched`.
pub fn document_base(html: &str, fetched: &Url) -> Url {
    tokenize(html)
        .find_map(|t| match t {
            Token::StartTag(tag) if tag.is("base") => tag.attr("href").and_then(|h| fetched.join(&h).ok()),
            _ => None,
        })
        .unwrap_or_else(|| fetched.clone())
}

fn start_tags(html: &str) -> impl Iterator<Item = Tag<'_>> {
    tokenize(html).filter_map(|t| match t {
        Token::StartTag(tag) => Some(tag),
        _ => None,
    })
}

fn rel_tokens(tag: &Tag<'_>) -> Option<String> {
    let rel = tag.attr("rel")?;
    let mut out = String::new();
    for word in rel.split_ascii_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(&word.to_ascii_lowercase());
    }
    Some(out)
}

pub fn extract_scripts(html: &str, base: &Url) -> Scripts {
    let base = document_base(html, base);
    let mut out = Scripts::default();
    let mut tokens = tokenize(html);
    while let Some(token) = tokens.next() {
        let Token::StartTag(tag) = token else { continue };
        if !tag.is("script") {
            continue;
        }
        if let Some(src) = tag.attr("src") {
            match base.join(&src) {
                Ok(url) => out.external.push(url),
                Err(_) => out.skipped += 1,
            }
            continue;
        }
        if let Some(Token::Text(body)) = tokens.next() {
            if !body.trim().is_empty() {
                out.inline.push(body.to_string());
            }
        }
    }
    out
}

pub fn extract_styles(html: &str, base: &Url) -> Styles {
    let base = document_base(html, base);
    let mut out = Styles::default();
    let mut tokens = tokenize(html);
    while let Some(token) = tokens.next() {
        let Token::StartTag(tag) = token else { continue };
        if let Some(style) = tag.attr("style") {
            if !style.trim().is_empty() {
                out.inline.push(InlineStyle {
                    element: tag.name.to_ascii_lowercase(),
                    declarations: style.into_owned(),
                });
            }
        }
        if tag.is("style") {
            if let Some(Token::Text(body)) = tokens.next() {
                if !body.trim().is_empty() {
                    out.internal.push(body.to_string());
                }
            }
        } else if tag.is("link") {
            let is_stylesheet = rel_tokens(&tag).is_some_and(|r| r.split(' ').any(|w| w == "stylesheet"));
            if let (true, Some(href)) = (is_stylesheet, tag.attr("href")) {
                match base.join(&href) {
                    Ok(url) => out.external.push(url),
                    Err(_) => out.skipped += 1,
                }
            }
        }
    }
    out
}

fn is_favicon_rel(rel: &str) -> bool {
    FAVICON_RELS.contains(&rel) || rel.split(' ').any(|w| w == "icon")
}

pub fn extract_favicon_urls(html: &str, base: &Url) -> Favicons {
    let base = document_base(html, base);
    let urls: Vec<Url> = start_tags(html)
        .filter(|tag| tag.is("link") && rel_tokens(tag).is_some_and(|r| is_favicon_rel(&r)))
        .filter_map(|tag| tag.attr("href").and_then(|h| base.join(&h).ok()))
        .collect();
    if urls.is_empty() {
        let fallback = base.join("/favicon.ico").expect("root-relative reference against an http(s) base");
        return Favicons {
            urls: alloc::vec![fallback],
            fallback: true,
        };
    }
    Favicons { urls, fallback: false }
}

pub fn extract_image_urls(html: &str, base: &Url) -> Images {
    let base = document_base(html, base);
    let mut out = Images::default();
    for tag in start_tags(html).filter(|t| t.is("img")) {
        let Some(src) = tag.attr("src") else { continue };
        match base.join(&src) {
            Ok(url) => {
                if !out.urls.contains(&url) {
                    out.urls.push(url);
                }
            }
            Err(_) => out.skipped += 1,
        }
    }
    out
}

/// Runs every extractor over `html`.
pub fn discover(html: &str, base: &Url) -> DiscoveredResources {
    let scripts = extract_scripts(html, base);
    let styles = extract_styles(html, base);
    let favicons = extract_favicon_urls(html, base);
    let images = extract_image_urls(html, base);
    DiscoveredResources {
        inline_scripts: scripts.inline,
        external_script_urls: scripts.external,
        inline_style_decls: styles.inline,
        internal_style_blocks: styles.internal,
        external_stylesheet_urls: styles.external,
        favicon_urls: favicons.urls,
        favicon_fallback: favicons.fallback,
        image_urls: images.urls,
        skipped: scripts.skipped + styles.skipped + images.skipped,
    }
}
