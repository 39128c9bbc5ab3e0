//! The 30-feature ternary phishing vector in the UCI "Phishing Websites"
//! encoding: `-1` phishing-leaning, `0` suspicious or unknown, `1`
//! legitimate-leaning.
//!
//! Features are computed in three independent groups, each producing a
//! [`PartialVector`]: [`url_features`] from the address bar,
//! [`content_features`] from the archived page, and [`thirdparty_features`]
//! from an [`IntelligenceReport`]. [`assemble`] joins them and checks that
//! every feature was assigned exactly once.

mod content;
mod thirdparty;
mod url_rules;

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::ingest::Label;
use crate::url::Url;

pub use content::{content_features, PageContent};
pub use thirdparty::{thirdparty_features, IntelligenceReport};
pub use url_rules::{url_features, SHORTENERS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(i8)]
pub enum Ternary {
    Phishing = -1,
    Suspicious = 0,
    Legitimate = 1,
}

impl Ternary {
    pub fn value(self) -> i8 {
        self as i8
    }

    pub fn from_i8(v: i8) -> Option<Ternary> {
        match v {
            -1 => Some(Ternary::Phishing),
            0 => Some(Ternary::Suspicious),
            1 => Some(Ternary::Legitimate),
            _ => None,
        }
    }

    /// `Legitimate` when `legit` holds, otherwise `Phishing`.
    pub(crate) fn binary(legit: bool) -> Ternary {
        if legit {
            Ternary::Legitimate
        } else {
            Ternary::Phishing
        }
    }
}

macro_rules! feature_names {
    ($($variant:ident => $name:literal,)*) => {
        /// Feature columns in canonical order (the UCI file's column order).
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub enum FeatureName {
            $($variant,)*
        }

        impl FeatureName {
            pub const ALL: [FeatureName; FEATURE_COUNT] = [$(FeatureName::$variant,)*];

            /// Canonical column name, spelled as in the UCI dataset.
            pub fn as_str(self) -> &'static str {
                match self {
                    $(FeatureName::$variant => $name,)*
                }
            }
        }
    };
}

pub const FEATURE_COUNT: usize = 30;

/// Name of the label column in feature matrix files.
pub const LABEL_COLUMN: &str = "Result";

feature_names! {
    HavingIpAddress => "having_IP_Address",
    UrlLength => "URL_Length",
    ShortiningService => "Shortining_Service",
    HavingAtSymbol => "having_At_Symbol",
    DoubleSlashRedirecting => "double_slash_redirecting",
    PrefixSuffix => "Prefix_Suffix",
    HavingSubDomain => "having_Sub_Domain",
    SslFinalState => "SSLfinal_State",
    DomainRegisterationLength => "Domain_registeration_length",
    Favicon => "Favicon",
    Port => "port",
    HttpsToken => "HTTPS_token",
    RequestUrl => "Request_URL",
    UrlOfAnchor => "URL_of_Anchor",
    LinksInTags => "Links_in_tags",
    Sfh => "SFH",
    SubmittingToEmail => "Submitting_to_email",
    AbnormalUrl => "Abnormal_URL",
    Redirect => "Redirect",
    OnMouseover => "on_mouseover",
    RightClick => "RightClick",
    PopUpWidnow => "popUpWidnow",
    Iframe => "Iframe",
    AgeOfDomain => "age_of_domain",
    DnsRecord => "DNSRecord",
    WebTraffic => "web_traffic",
    PageRank => "Page_Rank",
    GoogleIndex => "Google_Index",
    LinksPointingToPage => "Links_pointing_to_page",
    StatisticalReport => "Statistical_report",
}

impl FeatureName {
    pub fn index(self) -> usize {
        self as usize
    }

    /// Looks up a column name. Matching ignores ASCII case; the misspelled
    /// `having_IPhaving_IP_Address` header found in common CSV exports of
    /// the UCI file is accepted as well.
    pub fn from_column(name: &str) -> Option<FeatureName> {
        let name = name.trim();
        if name.eq_ignore_ascii_case("having_IPhaving_IP_Address") {
            return Some(FeatureName::HavingIpAddress);
        }
        FeatureName::ALL.into_iter().find(|f| f.as_str().eq_ignore_ascii_case(name))
    }

    /// Domain-based group: values depend only on third-party intelligence.
    pub const DOMAIN_GROUP: [FeatureName; 7] = [
        FeatureName::AgeOfDomain,
        FeatureName::DnsRecord,
        FeatureName::WebTraffic,
        FeatureName::PageRank,
        FeatureName::GoogleIndex,
        FeatureName::LinksPointingToPage,
        FeatureName::StatisticalReport,
    ];
}

impl fmt::Display for FeatureName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureName {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        FeatureName::from_column(s).ok_or(())
    }
}

/// Values for a subset of the features.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PartialVector {
    values: [Option<Ternary>; FEATURE_COUNT],
}

impl PartialVector {
    pub fn set(&mut self, name: FeatureName, value: Ternary) {
        self.values[name.index()] = Some(value);
    }

    pub fn get(&self, name: FeatureName) -> Option<Ternary> {
        self.values[name.index()]
    }

    pub fn assigned(&self) -> impl Iterator<Item = (FeatureName, Ternary)> + '_ {
        FeatureName::ALL
            .into_iter()
            .filter_map(|f| self.values[f.index()].map(|v| (f, v)))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AssembleError {
    #[error("feature {0} assigned by more than one group")]
    Duplicate(FeatureName),
    #[error("feature {0} not assigned")]
    Missing(FeatureName),
}

/// One sample's complete feature vector and class label.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FeatureVector {
    values: [Ternary; FEATURE_COUNT],
    pub label: Label,
}

impl FeatureVector {
    pub fn new(values: [Ternary; FEATURE_COUNT], label: Label) -> Self {
        FeatureVector { values, label }
    }

    pub fn get(&self, name: FeatureName) -> Ternary {
        self.values[name.index()]
    }

    pub fn values(&self) -> &[Ternary; FEATURE_COUNT] {
        &self.values
    }

    /// Values as integers in canonical column order, followed by the label.
    pub fn to_row(&self) -> Vec<i8> {
        self.values
            .iter()
            .map(|v| v.value())
            .chain(core::iter::once(self.label.as_i8()))
            .collect()
    }
}

/// Joins partial vectors; every feature must be assigned by exactly one.
pub fn assemble(parts: &[&PartialVector], label: Label) -> Result<FeatureVector, AssembleError> {
    let mut values = [None; FEATURE_COUNT];
    for part in parts {
        for (name, v) in part.assigned() {
            if values[name.index()].replace(v).is_some() {
                return Err(AssembleError::Duplicate(name));
            }
        }
    }
    let mut out = [Ternary::Suspicious; FEATURE_COUNT];
    for name in FeatureName::ALL {
        out[name.index()] = values[name.index()].ok_or(AssembleError::Missing(name))?;
    }
    Ok(FeatureVector::new(out, label))
}

/// Full vector for one sample: address-bar rules on the sample URL,
/// content rules on the archived page, intelligence rules on `report`.
pub fn feature_vector(url: &Url, page: &PageContent<'_>, report: &IntelligenceReport, label: Label) -> FeatureVector {
    let parts = [
        &url_features(url),
        &content_features(page),
        &thirdparty_features(url, report),
    ];
    assemble(&parts, label).expect("the three feature groups partition the feature set")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_order_and_names() {
        assert_eq!(FeatureName::ALL.len(), 30);
        assert_eq!(FeatureName::ALL[0].as_str(), "having_IP_Address");
        assert_eq!(FeatureName::ALL[13].as_str(), "URL_of_Anchor");
        assert_eq!(FeatureName::ALL[29].as_str(), "Statistical_report");
        for (i, f) in FeatureName::ALL.into_iter().enumerate() {
            assert_eq!(f.index(), i);
            assert_eq!(FeatureName::from_column(f.as_str()), Some(f));
        }
        assert_eq!(FeatureName::from_column("having_IPhaving_IP_Address"), Some(FeatureName::HavingIpAddress));
        assert_eq!(FeatureName::from_column("Result"), None);
    }

    #[test]
    fn assemble_requires_each_feature_once() {
        let mut a = PartialVector::default();
        for f in &FeatureName::ALL[..15] {
            a.set(*f, Ternary::Legitimate);
        }
        let mut b = PartialVector::default();
        for f in &FeatureName::ALL[15..] {
            b.set(*f, Ternary::Phishing);
        }
        let v = assemble(&[&a, &b], Label::Legitimate).unwrap();
        assert_eq!(v.get(FeatureName::UrlLength), Ternary::Legitimate);
        assert_eq!(v.to_row().len(), 31);
        assert_eq!(*v.to_row().last().unwrap(), 1);

        assert_eq!(assemble(&[&a], Label::Phishing), Err(AssembleError::Missing(FeatureName::Sfh)));
        assert_eq!(
            assemble(&[&a, &b, &a], Label::Phishing),
            Err(AssembleError::Duplicate(FeatureName::HavingIpAddress))
        );
    }
}
