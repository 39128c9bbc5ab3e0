use crate::domain::{canonical_host, is_ip_literal, registrable_domain, subdomain_depth};
use crate::features::{FeatureName, PartialVector, Ternary};
use crate::url::Url;

/// URLs shorter than this many characters are legitimate-leaning.
pub const URL_LENGTH_LEGIT_BELOW: usize = 54;
/// URLs longer than this many characters are phishing-leaning.
pub const URL_LENGTH_PHISHING_ABOVE: usize = 75;

/// URL shortening services (registrable domains).
pub const SHORTENERS: &[&str] = &[
    "1url.com", "adf.ly", "bc.vc", "bit.do", "bit.ly", "bitly.com", "bkite.com", "budurl.com", "buff.ly",
    "buzurl.com", "cli.gs", "cur.lv", "cutt.ly", "cutt.us", "db.tt", "doiop.com", "ff.im", "fic.kr",
    "filoops.info", "goo.gl", "go2l.ink", "is.gd", "ity.im", "j.mp", "just.as", "kl.am", "link.zip.net",
    "lnkd.in", "loopt.us", "migre.me", "om.ly", "ow.ly", "ping.fm", "po.st", "post.ly", "prettylinkpro.com",
    "q.gs", "qr.ae", "qr.net", "rb.gy", "rubyurl.com", "scrnch.me", "short.ie", "short.to", "shorte.st",
    "shorturl.at", "snipr.com", "snipurl.com", "su.pr", "t.co", "t.ly", "tiny.cc", "tinyurl.com", "to.ly",
    "tr.im", "tweez.me", "twit.ac", "twitthis.com", "twurl.nl", "u.bb", "u.to", "url4.eu", "v.gd",
    "vzturl.com", "wp.me", "x.co", "yfrog.com", "yourls.org",
];

fn is_shortener(host: &str) -> bool {
    SHORTENERS
        .iter()
        .any(|s| host == *s || (host.ends_with(s) && host.as_bytes()[host.len() - s.len() - 1] == b'.'))
}

/// Address-bar features: everything in that group except `SSLfinal_State`,
/// `Favicon` and `Domain_registeration_length`, which need the page or
/// third-party data.
pub fn url_features(url: &Url) -> PartialVector {
    let text = url.as_str();
    let host = canonical_host(url.host());
    let mut v = PartialVector::default();

    v.set(FeatureName::HavingIpAddress, Ternary::binary(!is_ip_literal(&host)));

    let len = text.chars().count();
    v.set(
        FeatureName::UrlLength,
        if len < URL_LENGTH_LEGIT_BELOW {
            Ternary::Legitimate
        } else if len <= URL_LENGTH_PHISHING_ABOVE {
            Ternary::Suspicious
        } else {
            Ternary::Phishing
        },
    );

    v.set(FeatureName::ShortiningService, Ternary::binary(!is_shortener(&host)));
    v.set(FeatureName::HavingAtSymbol, Ternary::binary(!text.contains('@')));

    // 1-based position of the last "//"; "http://" puts it at 6, "https://" at 7
    let last_double_slash = text.rfind("//").map_or(0, |i| i + 1);
    v.set(FeatureName::DoubleSlashRedirecting, Ternary::binary(last_double_slash <= 7));

    v.set(FeatureName::PrefixSuffix, Ternary::binary(!registrable_domain(&host).contains('-')));

    v.set(
        FeatureName::HavingSubDomain,
        match subdomain_depth(&host) {
            0 => Ternary::Legitimate,
            1 => Ternary::Suspicious,
            _ => Ternary::Phishing,
        },
    );

    let odd_port = url.port().is_some_and(|p| p != url.default_port());
    v.set(FeatureName::Port, Ternary::binary(!odd_port));

    v.set(FeatureName::HttpsToken, Ternary::binary(!host.contains("https")));
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::String;

    fn f(url: &str, name: FeatureName) -> i8 {
        url_features(&Url::parse(url).unwrap()).get(name).unwrap().value()
    }

    fn url_of_len(n: usize) -> String {
        let mut s = String::from("http://example.com/");
        while s.len() < n {
            s.push('a');
        }
        s
    }

    #[test]
    fn length_boundaries() {
        for (n, want) in [(53, 1), (54, 0), (75, 0), (76, -1), (80, -1), (19, 1)] {
            assert_eq!(f(&url_of_len(n), FeatureName::UrlLength), want, "length {n}");
        }
    }

    #[test]
    fn ip_hosts() {
        assert_eq!(f("http://125.98.3.123/login", FeatureName::HavingIpAddress), -1);
        assert_eq!(f("http://0x7d.0x62.0x3.0x7b/", FeatureName::HavingIpAddress), -1);
        assert_eq!(f("http://[2001:db8::1]/", FeatureName::HavingIpAddress), -1);
        assert_eq!(f("https://example.com/", FeatureName::HavingIpAddress), 1);
    }

    #[test]
    fn plain_https_url() {
        let v = url_features(&Url::parse("https://example.com/").unwrap());
        for name in [
            FeatureName::HavingIpAddress,
            FeatureName::UrlLength,
            FeatureName::ShortiningService,
            FeatureName::HavingAtSymbol,
            FeatureName::DoubleSlashRedirecting,
            FeatureName::PrefixSuffix,
            FeatureName::HavingSubDomain,
            FeatureName::Port,
            FeatureName::HttpsToken,
        ] {
            assert_eq!(v.get(name), Some(Ternary::Legitimate), "{name}");
        }
        assert_eq!(v.assigned().count(), 9);
    }

    #[test]
    fn individual_rules() {
        assert_eq!(f("http://bit.ly/abc", FeatureName::ShortiningService), -1);
        assert_eq!(f("http://www.tinyurl.com/abc", FeatureName::ShortiningService), -1);
        assert_eq!(f("http://notbit.ly/abc", FeatureName::ShortiningService), 1);
        assert_eq!(f("http://a.com/@x", FeatureName::HavingAtSymbol), -1);
        assert_eq!(f("http://a.com//evil.com", FeatureName::DoubleSlashRedirecting), -1);
        assert_eq!(f("https://a.com/x", FeatureName::DoubleSlashRedirecting), 1);
        assert_eq!(f("http://pay-pal.com/", FeatureName::PrefixSuffix), -1);
        assert_eq!(f("http://my-site.pay.com/", FeatureName::PrefixSuffix), 1);
        assert_eq!(f("http://www.a.com/", FeatureName::HavingSubDomain), 1);
        assert_eq!(f("http://mail.a.com/", FeatureName::HavingSubDomain), 0);
        assert_eq!(f("http://x.y.a.com/", FeatureName::HavingSubDomain), -1);
        assert_eq!(f("http://a.com:8080/", FeatureName::Port), -1);
        assert_eq!(f("http://a.com:80/", FeatureName::Port), 1);
        assert_eq!(f("http://https-login.a.com/", FeatureName::HttpsToken), -1);
    }
}
