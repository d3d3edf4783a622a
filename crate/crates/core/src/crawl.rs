//! The crawl engine: fetches each target in a fresh, cache-isolated session,
//! records `Accept-CH` response headers from the site and its third parties,
//! and enforces the operational guardrails (throughput cap, bounded
//! concurrency, randomized order, one top-level request per target).

use std::collections::BTreeSet;
use std::sync::Arc;
use std::time::Duration;

use async_trait::async_trait;
use chrono::{DateTime, Utc};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};
use tokio::sync::mpsc;
use tokio::task::JoinHandle;
use url::Url;

use crate::discovery::{FetchError, FetchedPage, PageFetcher};
use crate::emulator::{self, BrowserProfile, GrantCache, ProfileSet};
use crate::html;
use crate::psl::PublicSuffixList;
use crate::registry::{ParsedAcceptCh, Registry};

/// Version stamp written into every crawl record; bump on breaking schema
/// changes so `analyze` can refuse records it does not understand.
pub const RECORD_SCHEMA_VERSION: u32 = 1;

/// Where a crawl ran from. Purely descriptive labels that flow into records
/// and reports so multi-vantage datasets stay distinguishable.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Vantage {
    pub region: String,
    pub isp: String,
}

impl Default for Vantage {
    fn default() -> Self {
        Vantage {
            region: "unspecified".to_string(),
            isp: "unspecified".to_string(),
        }
    }
}

/// Which page of a site a record covers.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "kebab-case")]
pub enum PageKind {
    Start,
    Login,
}

impl PageKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PageKind::Start => "start",
            PageKind::Login => "login",
        }
    }
}

impl std::fmt::Display for PageKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for PageKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "start" => Ok(PageKind::Start),
            "login" => Ok(PageKind::Login),
            other => Err(format!("unknown page kind `{other}`")),
        }
    }
}

/// Final outcome of a fetch: an HTTP status, or a transport failure tagged
/// with a coarse category (`timeout`, `connect`, `tls-required`, ...).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordStatus {
    Http(u16),
    Error(String),
}

impl RecordStatus {
    pub fn is_ok(&self) -> bool {
        matches!(self, RecordStatus::Http(s) if (200..400).contains(s))
    }
}

/// One third-party resource observed on a page.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThirdPartyObservation {
    /// Registrable domain of the third party.
    pub domain: String,
    pub resource_url: String,
    /// `Accept-CH` sent by the third party, when it sent one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accept_ch: Option<ParsedAcceptCh>,
}

/// One crawled page: the unit stored in JSONL datasets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrawlRecord {
    pub schema: u32,
    pub run_id: String,
    /// Registrable domain of the audited site.
    pub target_domain: String,
    /// The URL that was requested.
    pub url: String,
    pub page_kind: PageKind,
    pub vantage: Vantage,
    pub timestamp: DateTime<Utc>,
    pub status: RecordStatus,
    /// True when any hop of the chain used plain http (only possible with
    /// the test-only `allow_http` override).
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub insecure_transport: bool,
    /// `Accept-CH` from the first response in the redirect chain that
    /// carried one; absent when no response did.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accept_ch: Option<ParsedAcceptCh>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub third_parties: Vec<ThirdPartyObservation>,
}

/// One entry in a crawl work list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrawlTarget {
    pub rank: Option<u64>,
    pub domain: String,
    pub url: Url,
    pub page_kind: PageKind,
}

/// Everything that shapes a crawl run.
#[derive(Debug, Clone)]
pub struct CrawlConfig {
    /// Number of targets fetched concurrently.
    pub concurrency: usize,
    /// Aggregate download cap across all workers, in bytes per second.
    /// Defaults to 625,000 (5 MBit/s).
    pub throughput_cap_bytes_per_sec: u64,
    /// Seed for the randomized target order; identical seeds reproduce
    /// identical orders.
    pub order_seed: u64,
    /// Ethics mode (default on): at most one top-level request per target
    /// (registrable domain + page kind) per run.
    pub ethics_mode: bool,
    /// Whether to fetch the third-party resources referenced by each page.
    pub fetch_third_parties: bool,
    /// Browser build to emulate.
    pub profile: BrowserProfile,
    pub timeout: Duration,
    /// Maximum redirects followed per fetch.
    pub redirect_cap: usize,
    /// Allow plain-http URLs. Test-only: records gain `insecure_transport`.
    pub allow_http: bool,
    pub vantage: Vantage,
    pub run_id: String,
    /// Host -> address overrides, used by the testbed to route scenario
    /// domains at a local listener.
    pub resolve_overrides: Vec<(String, std::net::SocketAddr)>,
    /// Stored page bodies are truncated beyond this size.
    pub max_body_bytes: usize,
    /// Per-page cap on third-party fetches; `None` means all of them.
    pub third_party_cap: Option<usize>,
    /// Fixed timestamp for records instead of wall-clock time, for
    /// reproducible testbed datasets.
    pub fixed_timestamp: Option<DateTime<Utc>>,
}

impl CrawlConfig {
    /// A default configuration around the given profile.
    pub fn new(profile: BrowserProfile) -> CrawlConfig {
        CrawlConfig {
            concurrency: 6,
            throughput_cap_bytes_per_sec: 625_000,
            order_seed: 0,
            ethics_mode: true,
            fetch_third_parties: true,
            profile,
            timeout: Duration::from_secs(30),
            redirect_cap: 10,
            allow_http: false,
            vantage: Vantage::default(),
            run_id: "run-0".to_string(),
            resolve_overrides: Vec::new(),
            max_body_bytes: 2 * 1024 * 1024,
            third_party_cap: None,
            fixed_timestamp: None,
        }
    }

    /// Default configuration with the default emulated browser.
    pub fn default_chrome() -> CrawlConfig {
        let profiles = ProfileSet::builtin();
        CrawlConfig::new(
            profiles
                .get("chrome-116-desktop")
                .expect("bundled chrome profile exists")
                .clone(),
        )
    }

    pub fn validate(&self) -> Result<(), CrawlError> {
        if self.concurrency == 0 {
            return Err(CrawlError::InvalidConfig(
                "concurrency must be at least 1".to_string(),
            ));
        }
        if self.throughput_cap_bytes_per_sec == 0 {
            return Err(CrawlError::InvalidConfig(
                "throughput cap must be positive".to_string(),
            ));
        }
        if self.redirect_cap == 0 {
            return Err(CrawlError::InvalidConfig(
                "redirect cap must be at least 1".to_string(),
            ));
        }
        if self.run_id.trim().is_empty() {
            return Err(CrawlError::InvalidConfig("run_id must be set".to_string()));
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CrawlError {
    #[error("invalid crawl config: {0}")]
    InvalidConfig(String),
    #[error("failed to build http client: {0}")]
    ClientBuild(reqwest::Error),
}

/// Summary of a finished crawl run, written alongside the records. Contains
/// the wall-clock interval, so it is excluded from byte-level reproducibility
/// comparisons.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema: u32,
    pub run_id: String,
    pub order_seed: u64,
    pub vantage: Vantage,
    pub profile_name: String,
    pub started_at: DateTime<Utc>,
    pub finished_at: DateTime<Utc>,
    pub targets_input: usize,
    /// Targets dropped by ethics-mode deduplication.
    pub targets_deduped: usize,
    pub targets_crawled: usize,
    pub transport_errors: usize,
    pub concurrency: usize,
    pub throughput_cap_bytes_per_sec: u64,
    pub ethics_mode: bool,
    pub fetch_third_parties: bool,
    pub allow_http: bool,
    pub timeout_secs: u64,
    pub redirect_cap: usize,
}

/// Aggregate token bucket for download throughput. Workers deduct the bytes
/// they consumed and sleep off any debt, so the long-run rate never exceeds
/// the cap while short bursts up to one second's allowance pass untouched.
pub struct TokenBucket {
    rate: f64,
    capacity: f64,
    state: tokio::sync::Mutex<BucketState>,
}

struct BucketState {
    available: f64,
    last_refill: tokio::time::Instant,
}

impl TokenBucket {
    pub fn new(bytes_per_sec: u64) -> TokenBucket {
        let rate = bytes_per_sec as f64;
        TokenBucket {
            rate,
            capacity: rate,
            state: tokio::sync::Mutex::new(BucketState {
                available: rate,
                last_refill: tokio::time::Instant::now(),
            }),
        }
    }

    /// Account for `bytes` of transfer, sleeping as long as needed to keep
    /// the aggregate rate under the cap. Requests larger than the bucket
    /// capacity are allowed; they simply incur proportional debt.
    pub async fn acquire(&self, bytes: u64) {
        let wait = {
            let mut state = self.state.lock().await;
            let now = tokio::time::Instant::now();
            let refill = now.duration_since(state.last_refill).as_secs_f64() * self.rate;
            state.available = (state.available + refill).min(self.capacity);
            state.last_refill = now;
            state.available -= bytes as f64;
            if state.available >= 0.0 {
                None
            } else {
                Some(Duration::from_secs_f64(-state.available / self.rate))
            }
        };
        if let Some(wait) = wait {
            tokio::time::sleep(wait).await;
        }
    }
}

/// One fetched redirect chain.
#[derive(Debug)]
struct ChainOutcome {
    final_url: Url,
    status: u16,
    body: String,
    /// Raw `Accept-CH` values from the first response that carried any.
    accept_ch_values: Option<Vec<String>>,
    /// Whether any hop used plain http.
    insecure: bool,
}

/// A single browsing session: its own connection pool and its own grant
/// cache, discarded when the target is done. Nothing persists across
/// sessions, which is what keeps per-site measurements independent.
struct Session<'a> {
    client: reqwest::Client,
    cache: GrantCache,
    profile: &'a BrowserProfile,
    registry: &'a Registry,
    bucket: &'a TokenBucket,
    redirect_cap: usize,
    allow_http: bool,
    max_body_bytes: usize,
}

impl<'a> Session<'a> {
    fn new(
        config: &'a CrawlConfig,
        registry: &'a Registry,
        bucket: &'a TokenBucket,
    ) -> Result<Session<'a>, CrawlError> {
        let mut builder = reqwest::Client::builder()
            .redirect(reqwest::redirect::Policy::none())
            .timeout(config.timeout)
            .user_agent(config.profile.user_agent.clone());
        for (host, addr) in &config.resolve_overrides {
            builder = builder.resolve(host, *addr);
        }
        Ok(Session {
            client: builder.build().map_err(CrawlError::ClientBuild)?,
            cache: GrantCache::new(),
            profile: &config.profile,
            registry,
            bucket,
            redirect_cap: config.redirect_cap,
            allow_http: config.allow_http,
            max_body_bytes: config.max_body_bytes,
        })
    }

    fn scheme_allowed(&self, url: &Url) -> bool {
        url.scheme() == "https" || (self.allow_http && url.scheme() == "http")
    }

    /// Fetch a URL, following redirects manually so each hop records and
    /// honors `Accept-CH` the way a browser would: the header replaces the
    /// origin's grants immediately, and the *first* response carrying it
    /// defines what the page requested.
    async fn fetch_chain(&mut self, url: &Url) -> Result<ChainOutcome, FetchError> {
        let mut current = url.clone();
        let mut accept_ch_values: Option<Vec<String>> = None;
        let mut insecure = false;
        for _hop in 0..=self.redirect_cap {
            if !self.scheme_allowed(&current) {
                return Err(FetchError::Transport {
                    tag: "tls-required".to_string(),
                    message: format!("refusing non-https url {current}"),
                });
            }
            insecure |= current.scheme() == "http";
            let origin = emulator::origin_of(&current);
            let ch_headers = emulator::request_headers(self.profile, &self.cache, &origin)
                .map_err(|e| FetchError::Transport {
                    tag: "profile-config".to_string(),
                    message: e.to_string(),
                })?;
            let mut request = self.client.get(current.clone());
            for (name, value) in &ch_headers {
                request = request.header(name, value);
            }
            let response = request.send().await.map_err(classify_reqwest_error)?;
            let status = response.status().as_u16();
            let headers = response.headers().clone();

            let ch_values: Vec<String> = headers
                .get_all("accept-ch")
                .iter()
                .map(|v| String::from_utf8_lossy(v.as_bytes()).to_string())
                .collect();
            if !ch_values.is_empty() {
                let parsed = self.registry.parse_accept_ch(&ch_values);
                emulator::receive_accept_ch(self.profile, &mut self.cache, &origin, &parsed);
                if accept_ch_values.is_none() {
                    accept_ch_values = Some(ch_values);
                }
            }

            let bytes = response.bytes().await.map_err(classify_reqwest_error)?;
            self.bucket.acquire(bytes.len() as u64).await;

            let location = headers
                .get("location")
                .and_then(|v| v.to_str().ok())
                .map(str::to_string);
            if (300..400).contains(&status) && status != 304 {
                if let Some(location) = location {
                    if let Ok(next) = current.join(&location) {
                        current = next;
                        continue;
                    }
                }
            }

            let mut body = String::from_utf8_lossy(&bytes).to_string();
            if body.len() > self.max_body_bytes {
                body.truncate(self.max_body_bytes);
            }
            return Ok(ChainOutcome {
                final_url: current,
                status,
                body,
                accept_ch_values,
                insecure,
            });
        }
        Err(FetchError::TooManyRedirects(self.redirect_cap))
    }
}

fn classify_reqwest_error(e: reqwest::Error) -> FetchError {
    let tag = if e.is_timeout() {
        "timeout"
    } else if e.is_connect() {
        "connect"
    } else if e.is_body() || e.is_decode() {
        "body"
    } else if e.is_builder() {
        "url"
    } else {
        "request"
    };
    FetchError::Transport {
        tag: tag.to_string(),
        message: e.to_string(),
    }
}

/// A third-party subresource reference extracted from a page.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThirdPartyRef {
    pub domain: String,
    pub url: Url,
}

/// Pull third-party resource references out of a page body: subresource
/// URLs resolved against the final page URL whose registrable domain differs
/// from the target's. Deduplicated by URL, document order preserved.
pub fn extract_third_party_refs(
    body: &str,
    base: &Url,
    target_domain: &str,
    psl: &PublicSuffixList,
) -> Vec<ThirdPartyRef> {
    let target_reg = psl
        .registrable_domain(target_domain)
        .unwrap_or_else(|_| target_domain.to_ascii_lowercase());
    let mut seen = BTreeSet::new();
    let mut refs = Vec::new();
    for resource in html::parse(body).resource_refs() {
        let Ok(resolved) = base.join(&resource.url) else {
            continue;
        };
        if !matches!(resolved.scheme(), "http" | "https") {
            continue;
        }
        let Some(host) = resolved.host_str() else {
            continue;
        };
        let Ok(domain) = psl.registrable_domain(host) else {
            continue;
        };
        if domain == target_reg {
            continue;
        }
        if seen.insert(resolved.as_str().to_string()) {
            refs.push(ThirdPartyRef {
                domain,
                url: resolved,
            });
        }
    }
    refs
}

/// Crawl a single target in a fresh session. Transport failures fold into
/// the record's status; this function itself only fails on configuration
/// errors caught earlier by [`CrawlConfig::validate`].
pub async fn crawl_one(
    target: &CrawlTarget,
    config: &CrawlConfig,
    registry: &Registry,
    psl: &PublicSuffixList,
    bucket: &TokenBucket,
) -> CrawlRecord {
    let timestamp = config.fixed_timestamp.unwrap_or_else(Utc::now);
    let target_domain = psl
        .registrable_domain(&target.domain)
        .unwrap_or_else(|_| target.domain.to_ascii_lowercase());
    let mut record = CrawlRecord {
        schema: RECORD_SCHEMA_VERSION,
        run_id: config.run_id.clone(),
        target_domain,
        url: target.url.to_string(),
        page_kind: target.page_kind,
        vantage: config.vantage.clone(),
        timestamp,
        status: RecordStatus::Error("unattempted".to_string()),
        insecure_transport: false,
        accept_ch: None,
        third_parties: Vec::new(),
    };

    let mut session = match Session::new(config, registry, bucket) {
        Ok(session) => session,
        Err(e) => {
            record.status = RecordStatus::Error(format!("client-build: {e}"));
            return record;
        }
    };

    let outcome = match session.fetch_chain(&target.url).await {
        Ok(outcome) => outcome,
        Err(FetchError::Transport { tag, .. }) => {
            record.status = RecordStatus::Error(tag);
            return record;
        }
        Err(FetchError::TooManyRedirects(_)) => {
            record.status = RecordStatus::Error("redirect-loop".to_string());
            return record;
        }
        Err(FetchError::InvalidUrl(_)) => {
            record.status = RecordStatus::Error("url".to_string());
            return record;
        }
    };

    record.status = RecordStatus::Http(outcome.status);
    record.insecure_transport = outcome.insecure;
    record.accept_ch = outcome
        .accept_ch_values
        .as_ref()
        .map(|values| registry.parse_accept_ch(values));

    if config.fetch_third_parties {
        let refs = extract_third_party_refs(
            &outcome.body,
            &outcome.final_url,
            &record.target_domain,
            psl,
        );
        let cap = config.third_party_cap.unwrap_or(usize::MAX);
        for third_party in refs.into_iter().take(cap) {
            if !session.scheme_allowed(&third_party.url) {
                continue;
            }
            let accept_ch = match session.fetch_chain(&third_party.url).await {
                Ok(tp_outcome) => tp_outcome
                    .accept_ch_values
                    .as_ref()
                    .map(|values| registry.parse_accept_ch(values)),
                Err(_) => None,
            };
            record.third_parties.push(ThirdPartyObservation {
                domain: third_party.domain,
                resource_url: third_party.url.to_string(),
                accept_ch,
            });
        }
    }

    record
}

/// Ethics-mode deduplication and seeded shuffling of the work list. Returns
/// the prepared list and how many entries deduplication dropped.
pub fn prepare_targets(
    mut targets: Vec<CrawlTarget>,
    config: &CrawlConfig,
    psl: &PublicSuffixList,
) -> (Vec<CrawlTarget>, usize) {
    let input = targets.len();
    if config.ethics_mode {
        let mut seen = BTreeSet::new();
        targets.retain(|t| {
            let key = (
                psl.registrable_domain(&t.domain)
                    .unwrap_or_else(|_| t.domain.to_ascii_lowercase()),
                t.page_kind,
            );
            seen.insert(key)
        });
    }
    let deduped = input - targets.len();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(config.order_seed);
    targets.shuffle(&mut rng);
    (targets, deduped)
}

/// Crawl a batch of targets with bounded concurrency. Records stream out of
/// the returned channel as they finish; the join handle yields the run
/// manifest once every worker is done. Must be called within a tokio
/// runtime.
pub fn crawl_batch(
    targets: Vec<CrawlTarget>,
    config: CrawlConfig,
    registry: Arc<Registry>,
    psl: Arc<PublicSuffixList>,
) -> Result<(mpsc::Receiver<CrawlRecord>, JoinHandle<RunManifest>), CrawlError> {
    config.validate()?;
    let started_at = config.fixed_timestamp.unwrap_or_else(Utc::now);
    let input = targets.len();
    let (prepared, deduped) = prepare_targets(targets, &config, &psl);
    let (sender, receiver) = mpsc::channel(64);
    let bucket = Arc::new(TokenBucket::new(config.throughput_cap_bytes_per_sec));
    let config = Arc::new(config);

    let driver = tokio::spawn({
        let config = Arc::clone(&config);
        async move {
            let semaphore = Arc::new(tokio::sync::Semaphore::new(config.concurrency));
            let mut workers = tokio::task::JoinSet::new();
            for target in prepared {
                let permit = Arc::clone(&semaphore)
                    .acquire_owned()
                    .await
                    .expect("semaphore never closed");
                let config = Arc::clone(&config);
                let registry = Arc::clone(&registry);
                let psl = Arc::clone(&psl);
                let bucket = Arc::clone(&bucket);
                let sender = sender.clone();
                workers.spawn(async move {
                    let record =
                        crawl_one(&target, &config, &registry, &psl, &bucket).await;
                    let failed = matches!(record.status, RecordStatus::Error(_));
                    // A closed receiver means the caller stopped listening;
                    // keep crawling so the manifest stays accurate.
                    let _ = sender.send(record).await;
                    drop(permit);
                    failed
                });
            }
            drop(sender);
            let mut crawled = 0usize;
            let mut errors = 0usize;
            while let Some(result) = workers.join_next().await {
                if let Ok(failed) = result {
                    crawled += 1;
                    if failed {
                        errors += 1;
                    }
                }
            }
            RunManifest {
                schema: RECORD_SCHEMA_VERSION,
                run_id: config.run_id.clone(),
                order_seed: config.order_seed,
                vantage: config.vantage.clone(),
                profile_name: config.profile.name.clone(),
                started_at,
                finished_at: config.fixed_timestamp.unwrap_or_else(Utc::now),
                targets_input: input,
                targets_deduped: deduped,
                targets_crawled: crawled,
                transport_errors: errors,
                concurrency: config.concurrency,
                throughput_cap_bytes_per_sec: config.throughput_cap_bytes_per_sec,
                ethics_mode: config.ethics_mode,
                fetch_third_parties: config.fetch_third_parties,
                allow_http: config.allow_http,
                timeout_secs: config.timeout.as_secs(),
                redirect_cap: config.redirect_cap,
            }
        }
    });

    Ok((receiver, driver))
}

/// Discovery-facing fetcher backed by the same HTTP stack as the crawl
/// engine, without hint emulation: discovery only needs pages, not grants.
pub struct HttpPageFetcher {
    client: reqwest::Client,
    redirect_cap: usize,
    allow_http: bool,
}

impl HttpPageFetcher {
    pub fn new(
        timeout: Duration,
        redirect_cap: usize,
        allow_http: bool,
        user_agent: &str,
        resolve_overrides: &[(String, std::net::SocketAddr)],
    ) -> Result<HttpPageFetcher, CrawlError> {
        let mut builder = reqwest::Client::builder()
            .redirect(reqwest::redirect::Policy::none())
            .timeout(timeout)
            .user_agent(user_agent.to_string());
        for (host, addr) in resolve_overrides {
            builder = builder.resolve(host, *addr);
        }
        Ok(HttpPageFetcher {
            client: builder.build().map_err(CrawlError::ClientBuild)?,
            redirect_cap,
            allow_http,
        })
    }
}

#[async_trait]
impl PageFetcher for HttpPageFetcher {
    async fn fetch(&self, url: &Url) -> Result<FetchedPage, FetchError> {
        let mut current = url.clone();
        for _ in 0..=self.redirect_cap {
            let https_ok =
                current.scheme() == "https" || (self.allow_http && current.scheme() == "http");
            if !https_ok {
                return Err(FetchError::Transport {
                    tag: "tls-required".to_string(),
                    message: format!("refusing non-https url {current}"),
                });
            }
            let response = self
                .client
                .get(current.clone())
                .send()
                .await
                .map_err(classify_reqwest_error)?;
            let status = response.status().as_u16();
            if (300..400).contains(&status) && status != 304 {
                if let Some(next) = response
                    .headers()
                    .get("location")
                    .and_then(|v| v.to_str().ok())
                    .and_then(|loc| current.join(loc).ok())
                {
                    current = next;
                    continue;
                }
            }
            let body = response.text().await.map_err(classify_reqwest_error)?;
            return Ok(FetchedPage {
                final_url: current,
                status,
                body,
            });
        }
        Err(FetchError::TooManyRedirects(self.redirect_cap))
    }
}
