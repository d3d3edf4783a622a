//! Login page discovery: collect candidate links from a site's start page,
//! probe the conventional `/login` path, optionally ask a search provider,
//! then score candidates with indicator word lists and pick the best one.

use std::fmt;
use std::path::Path;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use url::Url;

use crate::html;
use crate::psl::PublicSuffixList;

const BUILTIN_INDICATORS: &str = include_str!("../data/indicators.txt");

/// Transport-level fetch failure. HTTP error statuses are *not* fetch
/// errors; they come back as a [`FetchedPage`] with that status.
#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum FetchError {
    #[error("transport error ({tag}): {message}")]
    Transport { tag: String, message: String },
    #[error("redirect chain exceeded {0} hops")]
    TooManyRedirects(usize),
    #[error("invalid url: {0}")]
    InvalidUrl(String),
}

/// A fetched page after following redirects.
#[derive(Debug, Clone)]
pub struct FetchedPage {
    /// URL of the final response in the redirect chain.
    pub final_url: Url,
    /// Status of the final response.
    pub status: u16,
    pub body: String,
}

/// Anything that can fetch a page for discovery. The production
/// implementation wraps the crawl engine's HTTP client; tests use canned
/// maps.
#[async_trait]
pub trait PageFetcher: Send + Sync {
    async fn fetch(&self, url: &Url) -> Result<FetchedPage, FetchError>;
}

/// Optional third discovery step: a web search for the site's login page.
#[async_trait]
pub trait SearchProvider: Send + Sync {
    /// Returns `(url, result title)` pairs, best hits first.
    async fn search_login(&self, domain: &str) -> Result<Vec<(Url, String)>, FetchError>;
}

/// A provider that returns nothing, for runs without a search backend.
pub struct NoSearch;

#[async_trait]
impl SearchProvider for NoSearch {
    async fn search_login(&self, _domain: &str) -> Result<Vec<(Url, String)>, FetchError> {
        Ok(Vec::new())
    }
}

/// Where a candidate came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CandidateSource {
    AnchorTag,
    PathProbe,
    SearchProvider,
}

impl fmt::Display for CandidateSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CandidateSource::AnchorTag => "anchor",
            CandidateSource::PathProbe => "probe",
            CandidateSource::SearchProvider => "search",
        };
        f.write_str(s)
    }
}

/// A scored login page candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoginCandidate {
    pub url: Url,
    /// Anchor text, probe page title, or search result title.
    pub text: String,
    pub source: CandidateSource,
    /// Collection order across all sources; breaks score ties.
    pub position: usize,
    pub score: i32,
}

/// Positive and negative indicator word lists used for scoring. Words are
/// matched case-insensitively as substrings of the candidate URL and text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndicatorSet {
    positive: Vec<String>,
    negative: Vec<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum IndicatorError {
    #[error("failed to read indicator file: {0}")]
    Io(#[from] std::io::Error),
    #[error("indicator line {line} must start with '+' or '-': `{text}`")]
    BadLine { line: usize, text: String },
    #[error("indicator set needs at least one positive and one negative word")]
    Incomplete,
}

impl IndicatorSet {
    /// The bundled English/German indicator lists.
    pub fn builtin() -> IndicatorSet {
        IndicatorSet::parse(BUILTIN_INDICATORS).expect("bundled indicator list must parse")
    }

    /// Parse `+word` / `-word` lines; `#` and `!` lines are comments.
    pub fn parse(text: &str) -> Result<IndicatorSet, IndicatorError> {
        let mut positive = Vec::new();
        let mut negative = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with('!') {
                continue;
            }
            if let Some(word) = line.strip_prefix('+') {
                positive.push(word.trim().to_lowercase());
            } else if let Some(word) = line.strip_prefix('-') {
                negative.push(word.trim().to_lowercase());
            } else {
                return Err(IndicatorError::BadLine {
                    line: idx + 1,
                    text: line.to_string(),
                });
            }
        }
        if positive.is_empty() || negative.is_empty() {
            return Err(IndicatorError::Incomplete);
        }
        Ok(IndicatorSet { positive, negative })
    }

    pub fn from_path(path: &Path) -> Result<IndicatorSet, IndicatorError> {
        IndicatorSet::parse(&std::fs::read_to_string(path)?)
    }

    pub fn positive(&self) -> &[String] {
        &self.positive
    }

    pub fn negative(&self) -> &[String] {
        &self.negative
    }
}

/// Score one candidate.
///
/// Each positive indicator contributes its best single outcome: +3 when the
/// word occurs in both the URL and the text, +2 for the URL only, +1 for the
/// text only. Each negative indicator mirrors that with -3/-2/-1. The final
/// score is the maximum positive contribution plus the minimum negative
/// contribution, so one strong signal of each polarity decides and repeated
/// indicators do not pile up.
pub fn score_candidate(url: &Url, text: &str, indicators: &IndicatorSet) -> i32 {
    let url_lower = url.as_str().to_lowercase();
    let text_lower = text.to_lowercase();
    let outcome = |word: &str| -> i32 {
        match (url_lower.contains(word), text_lower.contains(word)) {
            (true, true) => 3,
            (true, false) => 2,
            (false, true) => 1,
            (false, false) => 0,
        }
    };
    let best_positive = indicators
        .positive
        .iter()
        .map(|w| outcome(w))
        .max()
        .unwrap_or(0);
    let worst_negative = indicators
        .negative
        .iter()
        .map(|w| -outcome(w))
        .min()
        .unwrap_or(0);
    best_positive + worst_negative
}

/// Pick the winning candidate: highest score wins, ties go to the earliest
/// collected, and nothing wins unless the best score is positive.
pub fn select_best(candidates: &[LoginCandidate]) -> Option<&LoginCandidate> {
    candidates
        .iter()
        .max_by(|a, b| {
            a.score
                .cmp(&b.score)
                .then(b.position.cmp(&a.position))
        })
        .filter(|c| c.score > 0)
}

/// Result of checking a discovered login URL against the domain it was
/// discovered for.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum DomainMatch {
    Match,
    Mismatch { login_domain: String, expected: String },
    Invalid { reason: String },
}

impl DomainMatch {
    pub fn is_match(&self) -> bool {
        matches!(self, DomainMatch::Match)
    }
}

/// A login page only counts for a site when its registrable domain equals
/// the site's. Anything else — a different domain, or a host that does not
/// parse — is reported rather than silently accepted, since a foreign login
/// page would poison per-site statistics.
pub fn validate_login_domain(
    login_url: &Url,
    site_domain: &str,
    psl: &PublicSuffixList,
) -> DomainMatch {
    let Some(host) = login_url.host_str() else {
        return DomainMatch::Invalid {
            reason: format!("login url `{login_url}` has no host"),
        };
    };
    let login_domain = match psl.registrable_domain(host) {
        Ok(d) => d,
        Err(e) => {
            return DomainMatch::Invalid {
                reason: e.to_string(),
            }
        }
    };
    let expected = match psl.registrable_domain(site_domain) {
        Ok(d) => d,
        Err(e) => {
            return DomainMatch::Invalid {
                reason: e.to_string(),
            }
        }
    };
    if login_domain == expected {
        DomainMatch::Match
    } else {
        DomainMatch::Mismatch {
            login_domain,
            expected,
        }
    }
}

/// Knobs for candidate collection.
#[derive(Debug, Clone)]
pub struct DiscoveryOptions {
    /// Maximum candidates taken from each source; `None` means unbounded.
    pub candidate_cap: Option<usize>,
    /// Allow plain-http candidates and probes. Off by default: production
    /// audits only ever visit TLS endpoints. The testbed turns this on.
    pub allow_http: bool,
    /// Path probed on the site origin, `/login` by convention.
    pub probe_path: String,
}

impl Default for DiscoveryOptions {
    fn default() -> Self {
        DiscoveryOptions {
            candidate_cap: None,
            allow_http: false,
            probe_path: "/login".to_string(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum DiscoveryError {
    #[error("failed to fetch start page {url}: {source}")]
    StartPage { url: Url, source: FetchError },
    #[error("start url `{0}` has no host")]
    NoHost(Url),
}

/// Everything discovery learned about one site.
#[derive(Debug, Clone)]
pub struct DiscoveryResult {
    pub best: Option<LoginCandidate>,
    /// All scored candidates, in collection order.
    pub candidates: Vec<LoginCandidate>,
    /// Non-fatal hiccups (probe failures, search failures).
    pub notes: Vec<String>,
}

/// Run the three discovery steps against one start URL and score the
/// resulting candidates.
///
/// Step 1 collects anchors from the start page (resolved against the final
/// URL after redirects). Step 2 probes `<origin>/login` and adds it when the
/// probe answers 200. Step 3 appends search results when a provider is
/// given. Candidates on non-TLS URLs are dropped unless `allow_http` is set.
/// Only the start page fetch is fatal; probe and search failures become
/// notes.
pub async fn discover_login(
    start_url: &Url,
    fetcher: &dyn PageFetcher,
    search: Option<&dyn SearchProvider>,
    indicators: &IndicatorSet,
    opts: &DiscoveryOptions,
) -> Result<DiscoveryResult, DiscoveryError> {
    let domain = start_url
        .host_str()
        .ok_or_else(|| DiscoveryError::NoHost(start_url.clone()))?
        .to_string();
    let page = fetcher
        .fetch(start_url)
        .await
        .map_err(|source| DiscoveryError::StartPage {
            url: start_url.clone(),
            source,
        })?;

    let mut notes = Vec::new();
    let mut candidates = Vec::new();
    let mut position = 0;
    let scheme_ok =
        |url: &Url| url.scheme() == "https" || (opts.allow_http && url.scheme() == "http");
    let cap = opts.candidate_cap.unwrap_or(usize::MAX);

    let doc = html::parse(&page.body);
    let mut kept_anchors = 0;
    for anchor in doc.anchors() {
        if kept_anchors >= cap {
            break;
        }
        let Ok(mut resolved) = page.final_url.join(&anchor.href) else {
            continue;
        };
        resolved.set_fragment(None);
        if !scheme_ok(&resolved) {
            continue;
        }
        candidates.push(LoginCandidate {
            url: resolved,
            text: anchor.text,
            source: CandidateSource::AnchorTag,
            position,
            score: 0,
        });
        position += 1;
        kept_anchors += 1;
    }

    let mut probe_url = page.final_url.clone();
    probe_url.set_path(&opts.probe_path);
    probe_url.set_query(None);
    probe_url.set_fragment(None);
    if scheme_ok(&probe_url) {
        match fetcher.fetch(&probe_url).await {
            Ok(probe_page) if probe_page.status == 200 => {
                let title = html::parse(&probe_page.body)
                    .title()
                    .unwrap_or_default();
                candidates.push(LoginCandidate {
                    url: probe_url,
                    text: title,
                    source: CandidateSource::PathProbe,
                    position,
                    score: 0,
                });
                position += 1;
            }
            Ok(probe_page) => notes.push(format!(
                "probe {} answered {}",
                probe_url, probe_page.status
            )),
            Err(e) => notes.push(format!("probe {probe_url} failed: {e}")),
        }
    }

    if let Some(provider) = search {
        match provider.search_login(&domain).await {
            Ok(results) => {
                for (url, text) in results.into_iter().take(cap) {
                    if !scheme_ok(&url) {
                        continue;
                    }
                    candidates.push(LoginCandidate {
                        url,
                        text,
                        source: CandidateSource::SearchProvider,
                        position,
                        score: 0,
                    });
                    position += 1;
                }
            }
            Err(e) => notes.push(format!("search for {domain} failed: {e}")),
        }
    }

    for candidate in &mut candidates {
        candidate.score = score_candidate(&candidate.url, &candidate.text, indicators);
    }
    let best = select_best(&candidates).cloned();
    Ok(DiscoveryResult {
        best,
        candidates,
        notes,
    })
}
