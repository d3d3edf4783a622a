//! Registrable-domain computation against a public suffix rule list.
//!
//! Implements the standard matching algorithm over rules in the upstream list
//! format: plain suffix rules, `*.` wildcard rules, `!` exception rules, and
//! the implicit default `*` rule for unknown top-level labels. A pinned
//! snapshot of rules ships with the crate; operators can substitute a full,
//! current list file when auditing domains outside the snapshot's coverage.

use std::collections::HashSet;
use std::net::IpAddr;
use std::path::Path;
use std::sync::OnceLock;

const BUILTIN_SNAPSHOT: &str = include_str!("../data/public_suffix_snapshot.dat");

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum PslError {
    #[error("failed to read suffix list: {0}")]
    Io(String),
    #[error("suffix list contains no rules")]
    Empty,
    #[error("host `{0}` is not a syntactically valid DNS name")]
    InvalidHost(String),
    #[error("host `{0}` is an IP address, not a domain")]
    IpAddress(String),
    #[error("host `{host}` equals the public suffix `{suffix}`; no registrable domain")]
    NoRegistrableDomain { host: String, suffix: String },
}

/// A parsed public suffix rule list.
#[derive(Debug, Clone)]
pub struct PublicSuffixList {
    /// Plain rules, stored as the full dotted suffix.
    exact: HashSet<String>,
    /// `*.X` rules, stored as `X` (the labels after the wildcard).
    wildcard: HashSet<String>,
    /// `!Y` exception rules, stored as `Y`.
    exception: HashSet<String>,
}

impl PublicSuffixList {
    /// The bundled snapshot, parsed once.
    pub fn builtin() -> &'static PublicSuffixList {
        static INSTANCE: OnceLock<PublicSuffixList> = OnceLock::new();
        INSTANCE.get_or_init(|| {
            PublicSuffixList::parse(BUILTIN_SNAPSHOT)
                .expect("bundled suffix snapshot must parse")
        })
    }

    /// Parse rules from text in the upstream list format. Lines are trimmed;
    /// empty lines and `//` comments are skipped.
    pub fn parse(text: &str) -> Result<PublicSuffixList, PslError> {
        let mut list = PublicSuffixList {
            exact: HashSet::new(),
            wildcard: HashSet::new(),
            exception: HashSet::new(),
        };
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with("//") {
                continue;
            }
            // Upstream files may carry trailing annotations after whitespace.
            let rule = line.split_whitespace().next().unwrap().to_ascii_lowercase();
            if let Some(rest) = rule.strip_prefix('!') {
                list.exception.insert(rest.to_string());
            } else if let Some(rest) = rule.strip_prefix("*.") {
                list.wildcard.insert(rest.to_string());
            } else {
                list.exact.insert(rule);
            }
        }
        if list.exact.is_empty() && list.wildcard.is_empty() {
            return Err(PslError::Empty);
        }
        Ok(list)
    }

    pub fn from_path(path: &Path) -> Result<PublicSuffixList, PslError> {
        let text = std::fs::read_to_string(path).map_err(|e| PslError::Io(e.to_string()))?;
        PublicSuffixList::parse(&text)
    }

    pub fn rule_count(&self) -> usize {
        self.exact.len() + self.wildcard.len() + self.exception.len()
    }

    /// The public suffix of `host` (e.g. `co.uk` for `shop.example.co.uk`).
    pub fn public_suffix(&self, host: &str) -> Result<String, PslError> {
        let labels = normalize_host(host)?;
        let suffix_len = self.suffix_label_count(&labels);
        Ok(labels[labels.len() - suffix_len..].join("."))
    }

    /// The registrable domain of `host`: the public suffix plus one label.
    ///
    /// Errors when the host *is* a public suffix (there is nothing to
    /// register below it), when it is an IP address, or when it is not a
    /// valid DNS name.
    pub fn registrable_domain(&self, host: &str) -> Result<String, PslError> {
        let labels = normalize_host(host)?;
        let suffix_len = self.suffix_label_count(&labels);
        if labels.len() <= suffix_len {
            return Err(PslError::NoRegistrableDomain {
                host: labels.join("."),
                suffix: labels[labels.len() - suffix_len..].join("."),
            });
        }
        Ok(labels[labels.len() - suffix_len - 1..].join("."))
    }

    /// True when both hosts resolve to the same registrable domain.
    pub fn same_site(&self, a: &str, b: &str) -> bool {
        match (self.registrable_domain(a), self.registrable_domain(b)) {
            (Ok(da), Ok(db)) => da == db,
            _ => false,
        }
    }

    /// Number of labels in the prevailing suffix for `labels`.
    ///
    /// Exception rules take priority; otherwise the longest matching rule
    /// wins; the implicit `*` default rule makes any unknown top-level label
    /// a suffix of one label.
    fn suffix_label_count(&self, labels: &[String]) -> usize {
        let n = labels.len();
        let mut best = 1; // implicit default rule `*`
        for i in 0..n {
            let candidate = labels[i..].join(".");
            if self.exception.contains(&candidate) {
                // An exception rule's suffix is the rule minus its leftmost
                // label, and it overrides everything else.
                return n - i - 1;
            }
            if self.exact.contains(&candidate) {
                best = best.max(n - i);
            }
            // `*.X` matches `<any-label>.X`: position i matches when the
            // remaining labels equal X.
            if self.wildcard.contains(&labels[i + 1..].join(".")) {
                best = best.max(n - i);
            }
        }
        best
    }
}

/// Lowercase, strip one trailing dot, validate label syntax, and reject IPs.
fn normalize_host(host: &str) -> Result<Vec<String>, PslError> {
    let lowered = host.trim().to_ascii_lowercase();
    let trimmed = lowered.strip_suffix('.').unwrap_or(&lowered);
    if trimmed.is_empty() {
        return Err(PslError::InvalidHost(host.to_string()));
    }
    if trimmed.parse::<IpAddr>().is_ok() || trimmed.starts_with('[') {
        return Err(PslError::IpAddress(host.to_string()));
    }
    let labels: Vec<String> = trimmed.split('.').map(str::to_string).collect();
    for label in &labels {
        let valid = !label.is_empty()
            && label.len() <= 63
            && label
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
            && !label.starts_with('-')
            && !label.ends_with('-');
        if !valid {
            return Err(PslError::InvalidHost(host.to_string()));
        }
    }
    Ok(labels)
}
