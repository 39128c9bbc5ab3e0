use serde::{Deserialize, Serialize};

use crate::features::{FeatureName, PartialVector, Ternary};
use crate::url::Url;

/// Six months.
pub const MIN_DOMAIN_AGE_DAYS: u32 = 183;
/// One year.
pub const MIN_REGISTRATION_REMAINING_DAYS: u32 = 366;
pub const MIN_CERT_AGE_DAYS: u32 = 365;
pub const TRAFFIC_RANK_LIMIT: u64 = 100_000;
pub const MIN_PAGE_RANK: f64 = 0.2;

/// Third-party facts about a sample's domain. `None` means unknown and
/// always maps to `0`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntelligenceReport {
    pub domain_age_days: Option<u32>,
    pub registration_remaining_days: Option<u32>,
    pub has_dns_record: Option<bool>,
    /// Popularity rank; `0` records that the domain is not ranked at all.
    pub traffic_rank: Option<u64>,
    /// In `[0, 1]`.
    pub page_rank_score: Option<f64>,
    pub indexed_by_search: Option<bool>,
    pub inbound_link_count: Option<u32>,
    pub on_blacklist: Option<bool>,
    pub cert_issuer_trusted: Option<bool>,
    pub cert_age_days: Option<u32>,
}

fn known(v: Option<Ternary>) -> Ternary {
    v.unwrap_or(Ternary::Suspicious)
}

/// The domain-based group plus `SSLfinal_State` and
/// `Domain_registeration_length`.
pub fn thirdparty_features(url: &Url, report: &IntelligenceReport) -> PartialVector {
    let mut v = PartialVector::default();

    v.set(
        FeatureName::AgeOfDomain,
        known(report.domain_age_days.map(|d| Ternary::binary(d >= MIN_DOMAIN_AGE_DAYS))),
    );
    v.set(FeatureName::DnsRecord, known(report.has_dns_record.map(Ternary::binary)));
    v.set(
        FeatureName::WebTraffic,
        known(report.traffic_rank.map(|r| match r {
            0 => Ternary::Phishing,
            r if r < TRAFFIC_RANK_LIMIT => Ternary::Legitimate,
            _ => Ternary::Suspicious,
        })),
    );
    v.set(
        FeatureName::PageRank,
        known(report.page_rank_score.map(|p| Ternary::binary(p >= MIN_PAGE_RANK))),
    );
    v.set(FeatureName::GoogleIndex, known(report.indexed_by_search.map(Ternary::binary)));
    v.set(
        FeatureName::LinksPointingToPage,
        known(report.inbound_link_count.map(|n| match n {
            0 => Ternary::Phishing,
            1..=2 => Ternary::Suspicious,
            _ => Ternary::Legitimate,
        })),
    );
    v.set(
        FeatureName::StatisticalReport,
        known(report.on_blacklist.map(|listed| Ternary::binary(!listed))),
    );

    v.set(
        FeatureName::DomainRegisterationLength,
        known(
            report
                .registration_remaining_days
                .map(|d| Ternary::binary(d >= MIN_REGISTRATION_REMAINING_DAYS)),
        ),
    );

    let ssl = if !url.is_https() {
        Ternary::Phishing
    } else {
        match (report.cert_issuer_trusted, report.cert_age_days) {
            (Some(false), _) => Ternary::Suspicious,
            (Some(true), Some(age)) => Ternary::binary(age >= MIN_CERT_AGE_DAYS),
            _ => Ternary::Suspicious,
        }
    };
    v.set(FeatureName::SslFinalState, ssl);
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    fn https() -> Url {
        Url::parse("https://example.com/").unwrap()
    }

    #[test]
    fn unknown_report_is_neutral() {
        let v = thirdparty_features(&https(), &IntelligenceReport::default());
        for f in FeatureName::DOMAIN_GROUP {
            assert_eq!(v.get(f), Some(Ternary::Suspicious), "{f}");
        }
        assert_eq!(v.get(FeatureName::DomainRegisterationLength), Some(Ternary::Suspicious));
        assert_eq!(v.get(FeatureName::SslFinalState), Some(Ternary::Suspicious));
        assert_eq!(v.assigned().count(), 9);
        let http = thirdparty_features(&Url::parse("http://example.com/").unwrap(), &IntelligenceReport::default());
        assert_eq!(http.get(FeatureName::SslFinalState), Some(Ternary::Phishing));
    }

    #[test]
    fn domain_age() {
        let age = |d| {
            let r = IntelligenceReport {
                domain_age_days: Some(d),
                ..Default::default()
            };
            thirdparty_features(&https(), &r).get(FeatureName::AgeOfDomain).unwrap()
        };
        assert_eq!(age(400), Ternary::Legitimate);
        assert_eq!(age(183), Ternary::Legitimate);
        assert_eq!(age(182), Ternary::Phishing);
    }

    #[test]
    fn direct_mappings() {
        let r = IntelligenceReport {
            has_dns_record: Some(false),
            traffic_rank: Some(0),
            page_rank_score: Some(0.1),
            indexed_by_search: Some(true),
            inbound_link_count: Some(2),
            on_blacklist: Some(true),
            registration_remaining_days: Some(200),
            cert_issuer_trusted: Some(true),
            cert_age_days: Some(30),
            ..Default::default()
        };
        let v = thirdparty_features(&https(), &r);
        assert_eq!(v.get(FeatureName::DnsRecord), Some(Ternary::Phishing));
        assert_eq!(v.get(FeatureName::WebTraffic), Some(Ternary::Phishing));
        assert_eq!(v.get(FeatureName::PageRank), Some(Ternary::Phishing));
        assert_eq!(v.get(FeatureName::GoogleIndex), Some(Ternary::Legitimate));
        assert_eq!(v.get(FeatureName::LinksPointingToPage), Some(Ternary::Suspicious));
        assert_eq!(v.get(FeatureName::StatisticalReport), Some(Ternary::Phishing));
        assert_eq!(v.get(FeatureName::DomainRegisterationLength), Some(Ternary::Phishing));
        assert_eq!(v.get(FeatureName::SslFinalState), Some(Ternary::Phishing));

        let ranked = |rank| {
            let r = IntelligenceReport {
                traffic_rank: Some(rank),
                ..Default::default()
            };
            thirdparty_features(&https(), &r).get(FeatureName::WebTraffic).unwrap()
        };
        assert_eq!(ranked(5_000), Ternary::Legitimate);
        assert_eq!(ranked(250_000), Ternary::Suspicious);
    }

    #[test]
    fn ssl_with_certificate_data() {
        let r = IntelligenceReport {
            cert_issuer_trusted: Some(true),
            cert_age_days: Some(800),
            ..Default::default()
        };
        assert_eq!(thirdparty_features(&https(), &r).get(FeatureName::SslFinalState), Some(Ternary::Legitimate));
        let r = IntelligenceReport {
            cert_issuer_trusted: Some(false),
            ..Default::default()
        };
        assert_eq!(thirdparty_features(&https(), &r).get(FeatureName::SslFinalState), Some(Ternary::Suspicious));
    }
}
