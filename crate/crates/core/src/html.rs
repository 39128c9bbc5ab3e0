//! A lenient, allocation-light HTML tokenizer.
//!
//! It never fails: unclosed tags, stray `<`, unterminated quotes and
//! comments are all recovered the way browsers recover them closely
//! enough for resource discovery. Contents of raw-text elements
//! (`script`, `style`, `textarea`, `title`, ...) are returned as a single
//! text token and never tokenized as markup.

use alloc::borrow::Cow;
use alloc::string::String;
use alloc::vec::Vec;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Token<'a> {
    StartTag(Tag<'a>),
    EndTag(&'a str),
    Text(&'a str),
    Comment(&'a str),
    /// `<!DOCTYPE ...>`, `<?...>` and other bogus markup declarations.
    Declaration(&'a str),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tag<'a> {
    pub name: &'a str,
    pub attrs: Vec<Attribute<'a>>,
    pub self_closing: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Attribute<'a> {
    pub name: &'a str,
    pub raw_value: Option<&'a str>,
}

impl<'a> Tag<'a> {
    pub fn is(&self, name: &str) -> bool {
        self.name.eq_ignore_ascii_case(name)
    }

    /// Entity-decoded value of the first attribute called `name`.
    /// A present attribute without a value yields `Some("")`.
    pub fn attr(&self, name: &str) -> Option<Cow<'a, str>> {
        self.attrs
            .iter()
            .find(|a| a.name.eq_ignore_ascii_case(name))
            .map(|a| decode_entities(a.raw_value.unwrap_or("")))
    }

    pub fn has_attr(&self, name: &str) -> bool {
        self.attrs.iter().any(|a| a.name.eq_ignore_ascii_case(name))
    }
}

const RAW_TEXT: [&str; 8] = [
    "script", "style", "textarea", "title", "xmp", "iframe", "noembed", "noframes",
];

pub struct Tokenizer<'a> {
    src: &'a str,
    pos: usize,
    raw_end_tag: Option<&'static str>,
}

impl<'a> Tokenizer<'a> {
    pub fn new(src: &'a str) -> Self {
        Tokenizer {
            src,
            pos: 0,
            raw_end_tag: None,
        }
    }

    fn bytes(&self) -> &'a [u8] {
        self.src.as_bytes()
    }

    fn raw_text(&mut self, name: &'static str) -> Option<Token<'a>> {
        let bytes = self.bytes();
        let start = self.pos;
        let mut i = start;
        while let Some(off) = memchr(b'<', &bytes[i..]) {
            let lt = i + off;
            let after = lt + 2 + name.len();
            if bytes.get(lt + 1) == Some(&b'/')
                && after <= bytes.len()
                && bytes[lt + 2..after].eq_ignore_ascii_case(name.as_bytes())
                && bytes.get(after).is_none_or(|&b| b == b'>' || b == b'/' || b.is_ascii_whitespace())
            {
                self.pos = lt;
                return (lt > start).then(|| Token::Text(&self.src[start..lt]));
            }
            i = lt + 1;
        }
        self.pos = bytes.len();
        Some(Token::Text(&self.src[start..]))
    }

    fn text(&mut self) -> Token<'a> {
        let bytes = self.bytes();
        let start = self.pos;
        let mut i = start + 1;
        while let Some(off) = memchr(b'<', &bytes[i..]) {
            let lt = i + off;
            if starts_markup(&bytes[lt..]) {
                self.pos = lt;
                return Token::Text(&self.src[start..lt]);
            }
            i = lt + 1;
        }
        self.pos = bytes.len();
        Token::Text(&self.src[start..])
    }

    fn comment(&mut self) -> Token<'a> {
        let body_start = self.pos + 4;
        let (body_end, next) = match find(&self.bytes()[body_start..], b"-->") {
            Some(off) => (body_start + off, body_start + off + 3),
            None => (self.src.len(), self.src.len()),
        };
        self.pos = next;
        Token::Comment(&self.src[body_start..body_end])
    }

    fn declaration(&mut self) -> Token<'a> {
        let start = self.pos + 2;
        let (end, next) = match memchr(b'>', &self.bytes()[start..]) {
            Some(off) => (start + off, start + off + 1),
            None => (self.src.len(), self.src.len()),
        };
        self.pos = next;
        Token::Declaration(&self.src[start..end])
    }

    fn end_tag(&mut self) -> Token<'a> {
        let bytes = self.bytes();
        let start = self.pos + 2;
        let mut i = start;
        while i < bytes.len() && !(bytes[i] == b'>' || bytes[i] == b'/' || bytes[i].is_ascii_whitespace()) {
            i += 1;
        }
        let name = &self.src[start..i];
        self.pos = memchr(b'>', &bytes[i..]).map_or(bytes.len(), |off| i + off + 1);
        Token::EndTag(name)
    }

    fn start_tag(&mut self) -> Token<'a> {
        let bytes = self.bytes();
        let start = self.pos + 1;
        let mut i = start;
        while i < bytes.len() && !(bytes[i] == b'>' || bytes[i] == b'/' || bytes[i].is_ascii_whitespace()) {
            i += 1;
        }
        let name = &self.src[start..i];
        let mut attrs = Vec::new();
        let mut self_closing = false;
        loop {
            while i < bytes.len() && (bytes[i].is_ascii_whitespace() || bytes[i] == b'/') {
                self_closing = bytes[i] == b'/';
                i += 1;
            }
            if i >= bytes.len() {
                break;
            }
            if bytes[i] == b'>' {
                i += 1;
                break;
            }
            self_closing = false;
            // attribute name; a leading '=' is part of the name per HTML
            let name_start = i;
            i += 1;
            while i < bytes.len() && !(bytes[i] == b'>' || bytes[i] == b'/' || bytes[i] == b'=' || bytes[i].is_ascii_whitespace()) {
                i += 1;
            }
            let attr_name = &self.src[name_start..i];
            let mut j = i;
            while j < bytes.len() && bytes[j].is_ascii_whitespace() {
                j += 1;
            }
            let mut raw_value = None;
            if j < bytes.len() && bytes[j] == b'=' {
                j += 1;
                while j < bytes.len() && bytes[j].is_ascii_whitespace() {
                    j += 1;
                }
                match bytes.get(j) {
                    Some(&q) if q == b'"' || q == b'\'' => {
                        let vstart = j + 1;
                        let vend = memchr(q, &bytes[vstart..]).map_or(bytes.len(), |off| vstart + off);
                        raw_value = Some(&self.src[vstart..vend]);
                        i = (vend + 1).min(bytes.len());
                    }
                    Some(_) => {
                        let vstart = j;
                        while j < bytes.len() && !(bytes[j] == b'>' || bytes[j].is_ascii_whitespace()) {
                            j += 1;
                        }
                        raw_value = Some(&self.src[vstart..j]);
                        i = j;
                    }
                    None => {
                        raw_value = Some("");
                        i = j;
                    }
                }
            }
            attrs.push(Attribute {
                name: attr_name,
                raw_value,
            });
        }
        self.pos = i;
        self.raw_end_tag = RAW_TEXT.iter().copied().find(|t| t.eq_ignore_ascii_case(name));
        Token::StartTag(Tag {
            name,
            attrs,
            self_closing,
        })
    }
}

impl<'a> Iterator for Tokenizer<'a> {
    type Item = Token<'a>;

    fn next(&mut self) -> Option<Token<'a>> {
        if self.pos >= self.src.len() {
            return None;
        }
        if let Some(name) = self.raw_end_tag.take() {
            if let Some(text) = self.raw_text(name) {
                return Some(text);
            }
        }
        let rest = &self.bytes()[self.pos..];
        if rest[0] != b'<' || !starts_markup(rest) {
            return Some(self.text());
        }
        Some(match rest[1] {
            b'!' if rest.starts_with(b"<!--") => self.comment(),
            b'!' | b'?' => self.declaration(),
            b'/' => self.end_tag(),
            _ => self.start_tag(),
        })
    }
}

fn starts_markup(rest: &[u8]) -> bool {
    match rest.get(1) {
        Some(b) if b.is_ascii_alphabetic() || *b == b'!' || *b == b'?' => true,
        Some(b'/') => rest.get(2).is_some_and(|b| b.is_ascii_alphabetic()),
        _ => false,
    }
}

fn memchr(needle: u8, haystack: &[u8]) -> Option<usize> {
    haystack.iter().position(|&b| b == needle)
}

fn find(haystack: &[u8], needle: &[u8]) -> Option<usize> {
    haystack.windows(needle.len()).position(|w| w == needle)
}

pub fn tokenize(src: &str) -> Tokenizer<'_> {
    Tokenizer::new(src)
}

/// Concatenated, entity-decoded text inside the first element matching
/// `pred`, up to its balanced end tag (or end of document).
pub fn element_text<'a>(src: &'a str, mut pred: impl FnMut(&Tag<'a>) -> bool) -> Option<String> {
    let mut tokens = tokenize(src);
    let name = loop {
        match tokens.next()? {
            Token::StartTag(tag) if pred(&tag) => {
                if tag.self_closing || is_void(tag.name) {
                    return Some(String::new());
                }
                break tag.name;
            }
            _ => {}
        }
    };
    let mut depth = 1usize;
    let mut text = String::new();
    for token in tokens {
        match token {
            Token::StartTag(tag) if tag.is(name) && !tag.self_closing => depth += 1,
            Token::EndTag(end) if end.eq_ignore_ascii_case(name) => {
                depth -= 1;
                if depth == 0 {
                    break;
                }
            }
            Token::Text(t) => text.push_str(&decode_entities(t)),
            _ => {}
        }
    }
    Some(text)
}

pub fn is_void(name: &str) -> bool {
    const VOID: [&str; 14] = [
        "area", "base", "br", "col", "embed", "hr", "img", "input", "link", "meta", "param", "source", "track", "wbr",
    ];
    VOID.iter().any(|v| v.eq_ignore_ascii_case(name))
}

const NAMED: [(&str, char); 28] = [
    ("amp", '&'),
    ("lt", '<'),
    ("gt", '>'),
    ("quot", '"'),
    ("apos", '\''),
    ("nbsp", '\u{a0}'),
    ("copy", '\u{a9}'),
    ("reg", '\u{ae}'),
    ("trade", '\u{2122}'),
    ("hellip", '\u{2026}'),
    ("mdash", '\u{2014}'),
    ("ndash", '\u{2013}'),
    ("laquo", '\u{ab}'),
    ("raquo", '\u{bb}'),
    ("lsquo", '\u{2018}'),
    ("rsquo", '\u{2019}'),
    ("ldquo", '\u{201c}'),
    ("rdquo", '\u{201d}'),
    ("bull", '\u{2022}'),
    ("middot", '\u{b7}'),
    ("euro", '\u{20ac}'),
    ("pound", '\u{a3}'),
    ("yen", '\u{a5}'),
    ("cent", '\u{a2}'),
    ("sect", '\u{a7}'),
    ("deg", '\u{b0}'),
    ("times", '\u{d7}'),
    ("divide", '\u{f7}'),
];

/// Decodes character references. Unknown named references are left as-is;
/// `&amp`, `&lt`, `&gt` and `&quot` are also accepted without a semicolon.
pub fn decode_entities(s: &str) -> Cow<'_, str> {
    if !s.contains('&') {
        return Cow::Borrowed(s);
    }
    let mut out = String::with_capacity(s.len());
    let mut rest = s;
    while let Some(amp) = rest.find('&') {
        out.push_str(&rest[..amp]);
        rest = &rest[amp..];
        match decode_one(rest) {
            Some((c, used)) => {
                out.push(c);
                rest = &rest[used..];
            }
            None => {
                out.push('&');
                rest = &rest[1..];
            }
        }
    }
    out.push_str(rest);
    Cow::Owned(out)
}

fn decode_one(s: &str) -> Option<(char, usize)> {
    let body = &s[1..];
    if let Some(num) = body.strip_prefix('#') {
        let (digits, radix, skip) = match num.strip_prefix(['x', 'X']) {
            Some(hex) => (hex, 16, 3),
            None => (num, 10, 2),
        };
        let len = digits.bytes().take_while(|b| (*b as char).is_digit(radix)).count();
        if len == 0 {
            return None;
        }
        let value = u32::from_str_radix(&digits[..len.min(8)], radix).unwrap_or(0x110000);
        let c = char::from_u32(value).filter(|_| value != 0).unwrap_or('\u{fffd}');
        let semi = usize::from(digits[len..].starts_with(';'));
        return Some((c, skip + len + semi));
    }
    let len = body.bytes().take_while(u8::is_ascii_alphanumeric).count();
    let name = &body[..len];
    let &(_, c) = NAMED.iter().find(|(n, _)| *n == name)?;
    if body[len..].starts_with(';') {
        Some((c, len + 2))
    } else if matches!(name, "amp" | "lt" | "gt" | "quot") {
        Some((c, len + 1))
    } else {
        None
    }
}
