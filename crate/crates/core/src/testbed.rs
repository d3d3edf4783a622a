//! Local HTTP testbed: serves scripted multi-site scenarios on one
//! loopback listener with Host-header virtual hosting, records every
//! request (counters, hint headers, concurrency watermark), and drives the
//! full pipeline — discovery, crawl, analysis, report — end to end against
//! them. Scenarios embed their own expected outcomes so tests and the
//! acceptance suite verify behavior, not implementation details.

use std::collections::{BTreeMap, BTreeSet};
use std::net::SocketAddr;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::body::Body;
use axum::extract::State;
use axum::http::{header, Response, StatusCode};
use axum::Router;
use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use tokio::sync::oneshot;
use url::Url;

use crate::crawl::{
    crawl_batch, CrawlConfig, CrawlError, CrawlRecord, CrawlTarget, HttpPageFetcher, PageKind,
    RunManifest,
};
use crate::discovery::{discover_login, DiscoveryOptions, IndicatorSet};
use crate::filter::FilterList;
use crate::psl::PublicSuffixList;
use crate::registry::Registry;
use crate::report::{analyze, AnalysisReport, AnalyzeInputs, ReportError};
use crate::store::{NoCategories, SiteProfile};

#[derive(Debug, thiserror::Error)]
pub enum TestbedError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("scenario error: {0}")]
    Scenario(String),
    #[error("scenario json: {0}")]
    Json(#[from] serde_json::Error),
}

/// One hyperlink on a scripted page.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSpec {
    pub href: String,
    pub text: String,
}

fn default_status() -> u16 {
    200
}

/// One scripted page.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PageSpec {
    #[serde(default = "default_status")]
    pub status: u16,
    #[serde(default)]
    pub title: Option<String>,
    /// Raw `Accept-CH` response header value.
    #[serde(default)]
    pub accept_ch: Option<String>,
    #[serde(default)]
    pub links: Vec<LinkSpec>,
    /// Subresource URLs rendered as `<script src>`; absolute URLs pointing
    /// at scenario hosts are rewritten to the testbed port at serve time.
    #[serde(default)]
    pub resources: Vec<String>,
    /// `Location` header; pair with a 3xx status.
    #[serde(default)]
    pub redirect_to: Option<String>,
    /// Overrides the generated HTML body entirely.
    #[serde(default)]
    pub body: Option<String>,
}

/// One virtual host.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SiteSpec {
    /// Auxiliary hosts (third parties, foreign auth providers) are served
    /// but never crawled as targets.
    #[serde(default)]
    pub auxiliary: bool,
    pub pages: BTreeMap<String, PageSpec>,
}

/// Scenario-declared expected outcomes, verified against an end-to-end run.
/// Every field is optional; a scenario asserts only what it cares about.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectations {
    /// domain -> page kind (`start`/`login`) -> exact sorted hint set.
    #[serde(default)]
    pub first_party_hints: Option<BTreeMap<String, BTreeMap<String, Vec<String>>>>,
    /// domain -> level name, or `none`.
    #[serde(default)]
    pub max_level: Option<BTreeMap<String, String>>,
    /// domain -> exact set of tracker-linked third-party domains.
    #[serde(default)]
    pub tracker_linked: Option<BTreeMap<String, Vec<String>>>,
    /// domain -> third-party domain -> exact sorted hint set.
    #[serde(default)]
    pub third_party_hints: Option<BTreeMap<String, BTreeMap<String, Vec<String>>>>,
    /// Exact set of unrecognized names across the run.
    #[serde(default)]
    pub misspellings: Option<Vec<String>>,
    /// domain -> expected login URL (ports ignored), or null for none.
    #[serde(default)]
    pub discovered_logins: Option<BTreeMap<String, Option<String>>>,
    #[serde(default)]
    pub sites_with_both: Option<usize>,
    #[serde(default)]
    pub identical: Option<usize>,
    #[serde(default)]
    pub login_silent_among_differing: Option<usize>,
    #[serde(default)]
    pub login_extra_among_differing: Option<usize>,
    /// `all` bucket percentages from the adoption table.
    #[serde(default)]
    pub first_party_pct_all: Option<f64>,
    #[serde(default)]
    pub third_party_pct_all: Option<f64>,
}

/// A scripted multi-site world.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    /// Artificial response latency applied to every request.
    #[serde(default)]
    pub latency_ms: u64,
    /// Tracker filter rules active for this scenario.
    #[serde(default)]
    pub filter_rules: Vec<String>,
    pub sites: BTreeMap<String, SiteSpec>,
    #[serde(default)]
    pub expectations: Expectations,
}

impl Scenario {
    pub fn from_json(json: &str) -> Result<Scenario, TestbedError> {
        let scenario: Scenario = serde_json::from_str(json)?;
        if scenario.sites.is_empty() {
            return Err(TestbedError::Scenario(format!(
                "scenario `{}` has no sites",
                scenario.name
            )));
        }
        Ok(scenario)
    }

    pub fn from_path(path: &Path) -> Result<Scenario, TestbedError> {
        Scenario::from_json(&std::fs::read_to_string(path)?)
    }

    /// Hosts crawled as audit targets (non-auxiliary).
    pub fn target_hosts(&self) -> Vec<&str> {
        self.sites
            .iter()
            .filter(|(_, spec)| !spec.auxiliary)
            .map(|(host, _)| host.as_str())
            .collect()
    }
}

/// One request the testbed answered.
#[derive(Debug, Clone)]
pub struct LoggedRequest {
    pub host: String,
    pub path: String,
    /// Client-hint request headers, keyed by canonical hint name.
    pub hint_headers: BTreeMap<String, String>,
    pub user_agent: Option<String>,
}

struct TestbedState {
    scenario: Scenario,
    port: u16,
    registry: Registry,
    counters: Mutex<BTreeMap<(String, String), usize>>,
    log: Mutex<Vec<LoggedRequest>>,
    active: AtomicUsize,
    max_active: AtomicUsize,
}

/// A running scenario server on a loopback port.
pub struct Testbed {
    addr: SocketAddr,
    state: Arc<TestbedState>,
    shutdown: Option<oneshot::Sender<()>>,
    task: tokio::task::JoinHandle<()>,
}

impl Testbed {
    /// Bind a loopback listener and serve the scenario. Must be called
    /// within a tokio runtime.
    pub async fn start(scenario: Scenario) -> Result<Testbed, TestbedError> {
        let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await?;
        let addr = listener.local_addr()?;
        let state = Arc::new(TestbedState {
            scenario,
            port: addr.port(),
            registry: Registry::builtin(),
            counters: Mutex::new(BTreeMap::new()),
            log: Mutex::new(Vec::new()),
            active: AtomicUsize::new(0),
            max_active: AtomicUsize::new(0),
        });
        let app = Router::new()
            .fallback(handle_request)
            .with_state(Arc::clone(&state));
        let (tx, rx) = oneshot::channel::<()>();
        let task = tokio::spawn(async move {
            let serve = axum::serve(listener, app).with_graceful_shutdown(async {
                let _ = rx.await;
            });
            if let Err(e) = serve.await {
                eprintln!("testbed server error: {e}");
            }
        });
        Ok(Testbed {
            addr,
            state,
            shutdown: Some(tx),
            task,
        })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn scenario(&self) -> &Scenario {
        &self.state.scenario
    }

    /// URL for a scenario host and path, carrying the testbed port. Use
    /// together with [`Testbed::resolve_overrides`].
    pub fn url_for(&self, host: &str, path: &str) -> Url {
        Url::parse(&format!("http://{host}:{}{path}", self.addr.port()))
            .expect("scenario host and path form a valid url")
    }

    /// DNS overrides routing every scenario host at this listener.
    pub fn resolve_overrides(&self) -> Vec<(String, SocketAddr)> {
        self.state
            .scenario
            .sites
            .keys()
            .map(|host| (host.clone(), self.addr))
            .collect()
    }

    /// Request counts per (host, path).
    pub fn counters(&self) -> BTreeMap<(String, String), usize> {
        self.state.counters.lock().expect("counters lock").clone()
    }

    pub fn hits(&self, host: &str, path: &str) -> usize {
        self.counters()
            .get(&(host.to_string(), path.to_string()))
            .copied()
            .unwrap_or(0)
    }

    pub fn request_log(&self) -> Vec<LoggedRequest> {
        self.state.log.lock().expect("log lock").clone()
    }

    /// Highest number of requests in flight at once since startup.
    pub fn max_concurrency(&self) -> usize {
        self.state.max_active.load(Ordering::Relaxed)
    }

    pub async fn shutdown(mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        let _ = (&mut self.task).await;
    }
}

struct ActiveGuard<'a>(&'a TestbedState);

impl<'a> ActiveGuard<'a> {
    fn enter(state: &'a TestbedState) -> ActiveGuard<'a> {
        let now = state.active.fetch_add(1, Ordering::SeqCst) + 1;
        state.max_active.fetch_max(now, Ordering::SeqCst);
        ActiveGuard(state)
    }
}

impl Drop for ActiveGuard<'_> {
    fn drop(&mut self) {
        self.0.active.fetch_sub(1, Ordering::SeqCst);
    }
}

async fn handle_request(
    State(state): State<Arc<TestbedState>>,
    req: axum::extract::Request,
) -> Response<Body> {
    let _guard = ActiveGuard::enter(&state);
    let host = req
        .headers()
        .get(header::HOST)
        .and_then(|v| v.to_str().ok())
        .map(|h| h.split(':').next().unwrap_or(h).to_ascii_lowercase())
        .unwrap_or_default();
    let path = req.uri().path().to_string();

    {
        let mut counters = state.counters.lock().expect("counters lock");
        *counters.entry((host.clone(), path.clone())).or_insert(0) += 1;
    }
    {
        let mut hint_headers = BTreeMap::new();
        for (name, value) in req.headers() {
            if let Some(descriptor) = state.registry.lookup(name.as_str()) {
                hint_headers.insert(
                    descriptor.header_name.clone(),
                    String::from_utf8_lossy(value.as_bytes()).to_string(),
                );
            }
        }
        let user_agent = req
            .headers()
            .get(header::USER_AGENT)
            .and_then(|v| v.to_str().ok())
            .map(str::to_string);
        state.log.lock().expect("log lock").push(LoggedRequest {
            host: host.clone(),
            path: path.clone(),
            hint_headers,
            user_agent,
        });
    }

    if state.scenario.latency_ms > 0 {
        tokio::time::sleep(Duration::from_millis(state.scenario.latency_ms)).await;
    }

    let page = state
        .scenario
        .sites
        .get(&host)
        .and_then(|site| site.pages.get(&path));
    let Some(page) = page else {
        return Response::builder()
            .status(StatusCode::NOT_FOUND)
            .header(header::CONTENT_TYPE, "text/html; charset=utf-8")
            .body(Body::from("<!DOCTYPE html><html><body>not found</body></html>"))
            .expect("static 404 response");
    };

    let hosts: BTreeSet<&str> = state.scenario.sites.keys().map(|s| s.as_str()).collect();
    let mut builder = Response::builder().status(page.status);
    if let Some(accept_ch) = &page.accept_ch {
        builder = builder.header("Accept-CH", accept_ch);
    }
    if let Some(redirect_to) = &page.redirect_to {
        builder = builder.header(header::LOCATION, rewrite_port(redirect_to, state.port, &hosts));
    }
    builder
        .header(header::CONTENT_TYPE, "text/html; charset=utf-8")
        .body(Body::from(render_page(page, state.port, &hosts)))
        .expect("scripted response is valid")
}

/// Absolute URLs pointing at scenario hosts gain the testbed port, so that
/// static scenario files work on whatever ephemeral port the run got.
fn rewrite_port(raw: &str, port: u16, hosts: &BTreeSet<&str>) -> String {
    match Url::parse(raw) {
        Ok(mut url) if url.host_str().is_some_and(|h| hosts.contains(h)) => {
            url.set_port(Some(port)).expect("http urls accept ports");
            url.to_string()
        }
        _ => raw.to_string(),
    }
}

fn render_page(page: &PageSpec, port: u16, hosts: &BTreeSet<&str>) -> String {
    if let Some(body) = &page.body {
        return body.clone();
    }
    let mut html = String::from("<!DOCTYPE html><html><head>");
    if let Some(title) = &page.title {
        html.push_str(&format!("<title>{title}</title>"));
    }
    html.push_str("</head><body>");
    for link in &page.links {
        html.push_str(&format!(
            "<a href=\"{}\">{}</a>\n",
            rewrite_port(&link.href, port, hosts),
            link.text
        ));
    }
    for resource in &page.resources {
        html.push_str(&format!(
            "<script src=\"{}\"></script>\n",
            rewrite_port(resource, port, hosts)
        ));
    }
    html.push_str("</body></html>");
    html
}

#[derive(Debug, thiserror::Error)]
pub enum EndToEndError {
    #[error("discovery stage failed for {domain}: {message}")]
    Discovery { domain: String, message: String },
    #[error("crawl stage failed: {0}")]
    Crawl(#[from] CrawlError),
    #[error("report stage failed: {0}")]
    Report(#[from] ReportError),
    #[error("unknown browser profile `{0}`")]
    Profile(String),
}

/// Knobs for an end-to-end pipeline run.
#[derive(Debug, Clone)]
pub struct EndToEndOptions {
    pub order_seed: u64,
    pub concurrency: usize,
    pub run_id: String,
    pub profile_name: String,
    /// Every record gets this timestamp, making datasets reproducible.
    pub fixed_timestamp: DateTime<Utc>,
    pub throughput_cap_bytes_per_sec: u64,
    pub fetch_third_parties: bool,
}

impl Default for EndToEndOptions {
    fn default() -> Self {
        EndToEndOptions {
            order_seed: 7,
            concurrency: 4,
            run_id: "e2e".to_string(),
            profile_name: "chrome-116-desktop".to_string(),
            fixed_timestamp: "2023-09-15T12:00:00Z"
                .parse()
                .expect("valid fixed timestamp"),
            throughput_cap_bytes_per_sec: 625_000,
            fetch_third_parties: true,
        }
    }
}

/// Everything one end-to-end run produced.
pub struct EndToEndOutcome {
    /// Crawl records in a canonical order (domain, kind, url), so that
    /// serializing them is reproducible regardless of completion order.
    pub records: Vec<CrawlRecord>,
    pub manifest: RunManifest,
    pub report: AnalysisReport,
    pub profiles: BTreeMap<String, SiteProfile>,
    /// Per target host: the discovered login URL, if any.
    pub discoveries: BTreeMap<String, Option<Url>>,
    /// Notes from the discovery stage (probe failures, skipped foreign
    /// logins).
    pub discovery_notes: Vec<String>,
}

/// Drive the full pipeline against a running testbed: discover login pages
/// for every target host, crawl start and login pages with cache-isolated
/// sessions, aggregate, analyze, and build the report.
pub async fn run_end_to_end(
    testbed: &Testbed,
    options: &EndToEndOptions,
) -> Result<EndToEndOutcome, EndToEndError> {
    let registry = Registry::builtin();
    let psl = PublicSuffixList::builtin();
    let profiles_set = crate::emulator::ProfileSet::builtin();
    let profile = profiles_set
        .get(&options.profile_name)
        .map_err(|_| EndToEndError::Profile(options.profile_name.clone()))?
        .clone();
    let overrides = testbed.resolve_overrides();

    // Stage 1: discovery.
    let indicators = IndicatorSet::builtin();
    let fetcher = HttpPageFetcher::new(
        Duration::from_secs(10),
        10,
        true,
        &profile.user_agent,
        &overrides,
    )?;
    let disc_opts = DiscoveryOptions {
        allow_http: true,
        ..DiscoveryOptions::default()
    };
    let mut targets = Vec::new();
    let mut discoveries = BTreeMap::new();
    let mut discovery_notes = Vec::new();
    for host in testbed.scenario().target_hosts() {
        let start_url = testbed.url_for(host, "/");
        targets.push(CrawlTarget {
            rank: None,
            domain: host.to_string(),
            url: start_url.clone(),
            page_kind: PageKind::Start,
        });
        let result = discover_login(&start_url, &fetcher, None, &indicators, &disc_opts)
            .await
            .map_err(|e| EndToEndError::Discovery {
                domain: host.to_string(),
                message: e.to_string(),
            })?;
        discovery_notes.extend(
            result
                .notes
                .iter()
                .map(|note| format!("{host}: {note}")),
        );
        let login = result.best.map(|candidate| candidate.url);
        if let Some(login_url) = &login {
            if crate::discovery::validate_login_domain(login_url, host, psl).is_match() {
                targets.push(CrawlTarget {
                    rank: None,
                    domain: host.to_string(),
                    url: login_url.clone(),
                    page_kind: PageKind::Login,
                });
            } else {
                discovery_notes.push(format!(
                    "{host}: discovered login {login_url} is on a foreign domain; skipped"
                ));
            }
        }
        discoveries.insert(host.to_string(), login);
    }

    // Stage 2: crawl.
    let mut config = CrawlConfig::new(profile);
    config.concurrency = options.concurrency;
    config.order_seed = options.order_seed;
    config.run_id = options.run_id.clone();
    config.allow_http = true;
    config.resolve_overrides = overrides;
    config.fixed_timestamp = Some(options.fixed_timestamp);
    config.throughput_cap_bytes_per_sec = options.throughput_cap_bytes_per_sec;
    config.fetch_third_parties = options.fetch_third_parties;
    config.timeout = Duration::from_secs(10);
    let (mut receiver, driver) = crawl_batch(
        targets,
        config,
        Arc::new(Registry::builtin()),
        Arc::new(PublicSuffixList::builtin().clone()),
    )?;
    let mut records = Vec::new();
    while let Some(record) = receiver.recv().await {
        records.push(record);
    }
    let manifest = driver.await.expect("crawl driver never panics");
    records.sort_by(|a, b| {
        a.target_domain
            .cmp(&b.target_domain)
            .then_with(|| a.page_kind.as_str().cmp(b.page_kind.as_str()))
            .then_with(|| a.url.cmp(&b.url))
    });

    // Stage 3: analysis and report.
    let filter_text = testbed.scenario().filter_rules.join("\n");
    let filter = (!testbed.scenario().filter_rules.is_empty())
        .then(|| FilterList::parse(&filter_text));
    let (report, profiles) = analyze(AnalyzeInputs {
        records: &records,
        registry: &registry,
        psl,
        filter: filter.as_ref(),
        ranks: &BTreeMap::new(),
        rba: &BTreeMap::new(),
        categories: &NoCategories,
        run_id: options.run_id.clone(),
        alpha: crate::analytics::ALPHA,
    });

    Ok(EndToEndOutcome {
        records,
        manifest,
        report,
        profiles,
        discoveries,
        discovery_notes,
    })
}

impl Expectations {
    /// Check an end-to-end outcome against these expectations; returns one
    /// message per mismatch (empty means everything held).
    pub fn verify(&self, outcome: &EndToEndOutcome) -> Vec<String> {
        let mut failures = Vec::new();

        if let Some(expected) = &self.first_party_hints {
            for (domain, kinds) in expected {
                let Some(profile) = outcome.profiles.get(domain) else {
                    failures.push(format!("no profile for {domain}"));
                    continue;
                };
                for (kind_name, hints) in kinds {
                    let Ok(kind) = kind_name.parse::<PageKind>() else {
                        failures.push(format!("{domain}: bad page kind `{kind_name}`"));
                        continue;
                    };
                    match profile.hints_by_page_kind.get(&kind) {
                        Some(actual) => {
                            let actual: Vec<&str> =
                                actual.iter().map(|s| s.as_str()).collect();
                            let expected_sorted: Vec<&str> = {
                                let mut v: Vec<&str> =
                                    hints.iter().map(|s| s.as_str()).collect();
                                v.sort_unstable();
                                v
                            };
                            if actual != expected_sorted {
                                failures.push(format!(
                                    "{domain} {kind_name}: hints {actual:?}, expected {expected_sorted:?}"
                                ));
                            }
                        }
                        None => failures.push(format!(
                            "{domain}: page kind {kind_name} was not observed"
                        )),
                    }
                }
            }
        }

        if let Some(expected) = &self.max_level {
            for (domain, level) in expected {
                let actual = outcome
                    .profiles
                    .get(domain)
                    .and_then(|p| p.max_level)
                    .map(|l| l.as_str().to_string())
                    .unwrap_or_else(|| "none".to_string());
                if &actual != level {
                    failures.push(format!(
                        "{domain}: max level {actual}, expected {level}"
                    ));
                }
            }
        }

        if let Some(expected) = &self.tracker_linked {
            for (domain, trackers) in expected {
                let actual: Vec<String> = outcome
                    .profiles
                    .get(domain)
                    .map(|p| p.tracker_linked_third_parties.iter().cloned().collect())
                    .unwrap_or_default();
                let mut expected_sorted = trackers.clone();
                expected_sorted.sort_unstable();
                if actual != expected_sorted {
                    failures.push(format!(
                        "{domain}: tracker-linked {actual:?}, expected {expected_sorted:?}"
                    ));
                }
            }
        }

        if let Some(expected) = &self.third_party_hints {
            for (domain, tps) in expected {
                let Some(profile) = outcome.profiles.get(domain) else {
                    failures.push(format!("no profile for {domain}"));
                    continue;
                };
                for (tp, hints) in tps {
                    let actual: Vec<&str> = profile
                        .third_party_hints
                        .get(tp)
                        .map(|set| set.iter().map(|s| s.as_str()).collect())
                        .unwrap_or_default();
                    let mut expected_sorted: Vec<&str> =
                        hints.iter().map(|s| s.as_str()).collect();
                    expected_sorted.sort_unstable();
                    if actual != expected_sorted {
                        failures.push(format!(
                            "{domain} third party {tp}: hints {actual:?}, expected {expected_sorted:?}"
                        ));
                    }
                }
            }
        }

        if let Some(expected) = &self.misspellings {
            let actual: BTreeSet<&str> = outcome
                .report
                .misspellings
                .iter()
                .map(|m| m.name.as_str())
                .collect();
            let expected_set: BTreeSet<&str> = expected.iter().map(|s| s.as_str()).collect();
            if actual != expected_set {
                failures.push(format!(
                    "misspellings {actual:?}, expected {expected_set:?}"
                ));
            }
        }

        if let Some(expected) = &self.discovered_logins {
            for (domain, expected_url) in expected {
                let actual = outcome.discoveries.get(domain).cloned().flatten().map(
                    |mut url| {
                        url.set_port(None).expect("http urls accept ports");
                        url.to_string()
                    },
                );
                if actual != *expected_url {
                    failures.push(format!(
                        "{domain}: discovered login {actual:?}, expected {expected_url:?}"
                    ));
                }
            }
        }

        let diff = &outcome.report.page_kind_diff;
        if let Some(expected) = self.sites_with_both {
            if diff.sites_with_both != expected {
                failures.push(format!(
                    "sites_with_both {}, expected {expected}",
                    diff.sites_with_both
                ));
            }
        }
        if let Some(expected) = self.identical {
            if diff.identical != expected {
                failures.push(format!("identical {}, expected {expected}", diff.identical));
            }
        }
        if let Some(expected) = self.login_silent_among_differing {
            if diff.login_silent_among_differing != expected {
                failures.push(format!(
                    "login_silent_among_differing {}, expected {expected}",
                    diff.login_silent_among_differing
                ));
            }
        }
        if let Some(expected) = self.login_extra_among_differing {
            if diff.login_extra_among_differing != expected {
                failures.push(format!(
                    "login_extra_among_differing {}, expected {expected}",
                    diff.login_extra_among_differing
                ));
            }
        }

        let all_row = outcome
            .report
            .adoption_by_rank
            .last()
            .expect("adoption table always has the all row");
        if let Some(expected) = self.first_party_pct_all {
            if (all_row.first_party_pct - expected).abs() > 1e-9 {
                failures.push(format!(
                    "first-party adoption {}, expected {expected}",
                    all_row.first_party_pct
                ));
            }
        }
        if let Some(expected) = self.third_party_pct_all {
            if (all_row.third_party_pct - expected).abs() > 1e-9 {
                failures.push(format!(
                    "third-party adoption {}, expected {expected}",
                    all_row.third_party_pct
                ));
            }
        }

        failures
    }
}
