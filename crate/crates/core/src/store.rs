//! Dataset persistence and shaping: JSONL crawl records, external archive
//! ingestion, per-site profiles aggregated from records, dataset alignment,
//! and joining rank / authentication / category labels onto profiles.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{BufRead, Write};
use std::path::Path;
use std::sync::Mutex;

use chrono::{DateTime, TimeZone, Utc};
use serde::{Deserialize, Serialize};
use url::Url;

use crate::crawl::{
    CrawlRecord, PageKind, RecordStatus, Vantage, RECORD_SCHEMA_VERSION,
};
use crate::discovery::{validate_login_domain, DomainMatch};
use crate::filter::{match_tracker, FilterList};
use crate::psl::PublicSuffixList;
use crate::registry::{HintLevel, Registry};

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: malformed record: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: record schema {found} but this build reads schema {expected}")]
    SchemaMismatch {
        line: usize,
        found: u32,
        expected: u32,
    },
    #[error("{file_kind} line {line}: cannot parse `{text}`")]
    BadLabelLine {
        file_kind: &'static str,
        line: usize,
        text: String,
    },
}

/// Write crawl records as JSON Lines.
pub fn write_records<'a, W, I>(writer: &mut W, records: I) -> Result<(), StoreError>
where
    W: Write,
    I: IntoIterator<Item = &'a CrawlRecord>,
{
    for record in records {
        let line = serde_json::to_string(record).map_err(|e| StoreError::Malformed {
            line: 0,
            message: e.to_string(),
        })?;
        writer.write_all(line.as_bytes())?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

pub fn write_records_to_path<'a, I>(path: &Path, records: I) -> Result<(), StoreError>
where
    I: IntoIterator<Item = &'a CrawlRecord>,
{
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_records(&mut file, records)?;
    file.flush()?;
    Ok(())
}

/// Read crawl records from JSON Lines, validating the schema version of
/// every line. Blank lines are permitted; anything else that does not parse
/// is an error, not a skip — datasets are either trustworthy or refused.
pub fn read_records<R: BufRead>(reader: R) -> Result<Vec<CrawlRecord>, StoreError> {
    let mut records = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: CrawlRecord =
            serde_json::from_str(&line).map_err(|e| StoreError::Malformed {
                line: line_no,
                message: e.to_string(),
            })?;
        if record.schema != RECORD_SCHEMA_VERSION {
            return Err(StoreError::SchemaMismatch {
                line: line_no,
                found: record.schema,
                expected: RECORD_SCHEMA_VERSION,
            });
        }
        records.push(record);
    }
    Ok(records)
}

pub fn read_records_from_path(path: &Path) -> Result<Vec<CrawlRecord>, StoreError> {
    let file = std::io::BufReader::new(std::fs::File::open(path)?);
    read_records(file)
}

/// Field names for ingesting foreign JSONL archives of HTTP responses.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArchiveFieldMap {
    /// Field holding the request URL.
    pub url: String,
    /// Field holding the response time: RFC 3339 string or epoch seconds.
    pub timestamp: String,
    /// Field holding the response header object.
    pub headers: String,
    /// Header name to read inside the header object (case-insensitive).
    pub accept_ch_header: String,
    /// Optional field holding the HTTP status; responses default to 200
    /// when the archive does not record it.
    pub status: Option<String>,
}

impl Default for ArchiveFieldMap {
    fn default() -> Self {
        ArchiveFieldMap {
            url: "url".to_string(),
            timestamp: "timestamp".to_string(),
            headers: "headers".to_string(),
            accept_ch_header: "accept-ch".to_string(),
            status: Some("status".to_string()),
        }
    }
}

/// Tally of an archive ingestion pass.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub ingested: usize,
    pub skipped: usize,
    /// Skip counts keyed by reason.
    pub reasons: BTreeMap<String, usize>,
}

impl IngestReport {
    fn skip(&mut self, reason: &str) {
        self.skipped += 1;
        *self.reasons.entry(reason.to_string()).or_insert(0) += 1;
    }
}

/// Convert a foreign response archive (one JSON object per line) into crawl
/// records. Lines missing required fields are skipped and counted — archives
/// are messy — but a line that has the fields and simply lacks an
/// `Accept-CH` header becomes a record with no hints, which is a
/// measurement, not an error.
pub fn ingest_archive<R: BufRead>(
    reader: R,
    map: &ArchiveFieldMap,
    registry: &Registry,
    psl: &PublicSuffixList,
    run_id: &str,
    vantage: &Vantage,
) -> Result<(Vec<CrawlRecord>, IngestReport), StoreError> {
    let mut records = Vec::new();
    let mut report = IngestReport::default();
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let Ok(value) = serde_json::from_str::<serde_json::Value>(&line) else {
            report.skip("not-json");
            continue;
        };
        let Some(obj) = value.as_object() else {
            report.skip("not-an-object");
            continue;
        };
        let Some(url_str) = obj.get(&map.url).and_then(|v| v.as_str()) else {
            report.skip("missing-url");
            continue;
        };
        let Ok(url) = Url::parse(url_str) else {
            report.skip("bad-url");
            continue;
        };
        let Some(host) = url.host_str() else {
            report.skip("bad-url");
            continue;
        };
        let Ok(target_domain) = psl.registrable_domain(host) else {
            report.skip("bad-domain");
            continue;
        };
        let Some(timestamp) = obj.get(&map.timestamp).and_then(parse_timestamp) else {
            report.skip("bad-timestamp");
            continue;
        };
        let accept_ch = obj
            .get(&map.headers)
            .and_then(|v| v.as_object())
            .and_then(|headers| {
                headers
                    .iter()
                    .find(|(k, _)| k.eq_ignore_ascii_case(&map.accept_ch_header))
                    .map(|(_, v)| header_values(v))
            })
            .filter(|values| !values.is_empty())
            .map(|values| registry.parse_accept_ch(&values));
        let status = map
            .status
            .as_ref()
            .and_then(|field| obj.get(field))
            .and_then(|v| v.as_u64())
            .and_then(|s| u16::try_from(s).ok())
            .unwrap_or(200);
        records.push(CrawlRecord {
            schema: RECORD_SCHEMA_VERSION,
            run_id: run_id.to_string(),
            target_domain,
            url: url.to_string(),
            page_kind: PageKind::Start,
            vantage: vantage.clone(),
            timestamp,
            status: RecordStatus::Http(status),
            insecure_transport: url.scheme() == "http",
            accept_ch,
            third_parties: Vec::new(),
        });
        report.ingested += 1;
    }
    Ok((records, report))
}

fn parse_timestamp(value: &serde_json::Value) -> Option<DateTime<Utc>> {
    if let Some(s) = value.as_str() {
        return DateTime::parse_from_rfc3339(s)
            .ok()
            .map(|dt| dt.with_timezone(&Utc));
    }
    if let Some(epoch) = value.as_i64() {
        return Utc.timestamp_opt(epoch, 0).single();
    }
    None
}

fn header_values(value: &serde_json::Value) -> Vec<String> {
    match value {
        serde_json::Value::String(s) => vec![s.clone()],
        serde_json::Value::Array(items) => items
            .iter()
            .filter_map(|v| v.as_str().map(str::to_string))
            .collect(),
        _ => Vec::new(),
    }
}

/// Whether a site deploys risk-based authentication, per an external label
/// dataset.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, Default,
)]
#[serde(rename_all = "kebab-case")]
pub enum RbaStatus {
    Rba,
    NoRba,
    #[default]
    Unknown,
}

impl std::str::FromStr for RbaStatus {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rba" => Ok(RbaStatus::Rba),
            "no-rba" => Ok(RbaStatus::NoRba),
            "unknown" => Ok(RbaStatus::Unknown),
            other => Err(format!("unknown rba status `{other}`")),
        }
    }
}

/// Everything known about one audited site, aggregated from its crawl
/// records plus joined labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteProfile {
    /// Registrable domain.
    pub domain: String,
    pub rank: Option<u64>,
    /// First-party hints observed, unioned per page kind. A page kind maps
    /// to an empty set when the page answered but requested nothing.
    pub hints_by_page_kind: BTreeMap<PageKind, BTreeSet<String>>,
    /// Highest level of detail among all first-party hints; `None` when the
    /// site requested nothing.
    pub max_level: Option<HintLevel>,
    pub categories: Option<Vec<String>>,
    pub rba_status: RbaStatus,
    pub vantages: BTreeSet<Vantage>,
    /// Registrable domains of all observed third parties.
    pub third_party_domains: BTreeSet<String>,
    /// Hints requested by third parties, keyed by third-party domain. Only
    /// third parties that requested at least one recognized hint appear.
    pub third_party_hints: BTreeMap<String, BTreeSet<String>>,
    /// Observed third parties that match the tracker filter list.
    pub tracker_linked_third_parties: BTreeSet<String>,
}

impl SiteProfile {
    fn new(domain: String) -> SiteProfile {
        SiteProfile {
            domain,
            rank: None,
            hints_by_page_kind: BTreeMap::new(),
            max_level: None,
            categories: None,
            rba_status: RbaStatus::Unknown,
            vantages: BTreeSet::new(),
            third_party_domains: BTreeSet::new(),
            third_party_hints: BTreeMap::new(),
            tracker_linked_third_parties: BTreeSet::new(),
        }
    }

    /// Union of first-party hints across page kinds.
    pub fn all_hints(&self) -> BTreeSet<&str> {
        self.hints_by_page_kind
            .values()
            .flat_map(|set| set.iter().map(|s| s.as_str()))
            .collect()
    }
}

/// Tally of a profile-building pass.
#[derive(Debug, Clone, Default)]
pub struct BuildReport {
    pub records_seen: usize,
    pub records_used: usize,
    /// Login records whose URL belongs to a different registrable domain
    /// than the site; excluded from profiles.
    pub login_domain_mismatches: usize,
    /// Records that failed at the transport level (no page observed).
    pub transport_failures: usize,
    pub warnings: Vec<String>,
}

/// Aggregate crawl records into per-site profiles.
///
/// Sites are keyed by registrable domain. A record contributes its hint set
/// to its page kind (empty set when the page answered without `Accept-CH`),
/// its third-party observations, and its vantage. Login records whose URL
/// resolves to a foreign registrable domain are excluded and counted — a
/// foreign login page must not poison the site's profile. When a filter
/// list is given, third-party resource URLs are matched against it to mark
/// tracker-linked third parties.
pub fn build_profiles(
    records: &[CrawlRecord],
    registry: &Registry,
    psl: &PublicSuffixList,
    filter: Option<&FilterList>,
) -> (BTreeMap<String, SiteProfile>, BuildReport) {
    let mut profiles: BTreeMap<String, SiteProfile> = BTreeMap::new();
    let mut report = BuildReport::default();
    for record in records {
        report.records_seen += 1;
        if let RecordStatus::Error(_) = record.status {
            report.transport_failures += 1;
            continue;
        }
        let domain = psl
            .registrable_domain(&record.target_domain)
            .unwrap_or_else(|_| record.target_domain.to_ascii_lowercase());
        if record.page_kind == PageKind::Login {
            match Url::parse(&record.url) {
                Ok(login_url) => {
                    let verdict = validate_login_domain(&login_url, &domain, psl);
                    if !verdict.is_match() {
                        report.login_domain_mismatches += 1;
                        if let DomainMatch::Mismatch {
                            login_domain,
                            expected,
                        } = verdict
                        {
                            report.warnings.push(format!(
                                "login record for {expected} points at {login_domain}; excluded"
                            ));
                        } else {
                            report.warnings.push(format!(
                                "login record for {domain} has unusable url {}; excluded",
                                record.url
                            ));
                        }
                        continue;
                    }
                }
                Err(_) => {
                    report.login_domain_mismatches += 1;
                    report.warnings.push(format!(
                        "login record for {domain} has unparseable url {}; excluded",
                        record.url
                    ));
                    continue;
                }
            }
        }
        report.records_used += 1;
        let profile = profiles
            .entry(domain.clone())
            .or_insert_with(|| SiteProfile::new(domain.clone()));
        let hints = profile
            .hints_by_page_kind
            .entry(record.page_kind)
            .or_default();
        if let Some(parsed) = &record.accept_ch {
            hints.extend(parsed.recognized.iter().cloned());
        }
        profile.vantages.insert(record.vantage.clone());
        for tp in &record.third_parties {
            profile.third_party_domains.insert(tp.domain.clone());
            if let Some(parsed) = &tp.accept_ch {
                if !parsed.recognized.is_empty() {
                    profile
                        .third_party_hints
                        .entry(tp.domain.clone())
                        .or_default()
                        .extend(parsed.recognized.iter().cloned());
                }
            }
            if let Some(filter) = filter {
                if let Ok(resource_url) = Url::parse(&tp.resource_url) {
                    if match_tracker(&resource_url, filter, psl).is_tracker {
                        profile
                            .tracker_linked_third_parties
                            .insert(tp.domain.clone());
                    }
                }
            }
        }
    }
    for profile in profiles.values_mut() {
        profile.max_level = registry.max_level(profile.all_hints());
    }
    (profiles, report)
}

/// Pairs of profiles for the same domain across two datasets, plus the
/// domains present in only one of them.
#[derive(Debug, Clone)]
pub struct Alignment<'a> {
    pub both: Vec<(&'a SiteProfile, &'a SiteProfile)>,
    pub only_left: Vec<&'a str>,
    pub only_right: Vec<&'a str>,
}

/// Align two profile sets by domain for before/after comparisons.
pub fn align_datasets<'a>(
    left: &'a BTreeMap<String, SiteProfile>,
    right: &'a BTreeMap<String, SiteProfile>,
) -> Alignment<'a> {
    let mut alignment = Alignment {
        both: Vec::new(),
        only_left: Vec::new(),
        only_right: Vec::new(),
    };
    for (domain, l) in left {
        match right.get(domain) {
            Some(r) => alignment.both.push((l, r)),
            None => alignment.only_left.push(domain),
        }
    }
    for domain in right.keys() {
        if !left.contains_key(domain) {
            alignment.only_right.push(domain);
        }
    }
    alignment
}

/// Looks up content categories for a domain. Implementations must be cheap
/// to call repeatedly or be wrapped in [`MemoizedProvider`].
pub trait CategoryProvider: Send + Sync {
    /// `Ok(None)` means the provider has no opinion about the domain;
    /// `Err` means the provider itself failed (and the failure is reported,
    /// never fatal).
    fn categories(&self, domain: &str) -> Result<Option<Vec<String>>, String>;
}

/// Provider with no data; every lookup is `None`.
pub struct NoCategories;

impl CategoryProvider for NoCategories {
    fn categories(&self, _domain: &str) -> Result<Option<Vec<String>>, String> {
        Ok(None)
    }
}

/// Offline domain -> categories map loaded from a CSV-ish file with lines
/// `domain,category[;category...]`.
pub struct OfflineCategoryMap {
    map: HashMap<String, Vec<String>>,
}

impl OfflineCategoryMap {
    pub fn from_reader<R: BufRead>(reader: R) -> Result<OfflineCategoryMap, StoreError> {
        let mut map = HashMap::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let Some((domain, cats)) = trimmed.split_once(',') else {
                return Err(StoreError::BadLabelLine {
                    file_kind: "category map",
                    line: idx + 1,
                    text: trimmed.to_string(),
                });
            };
            let categories: Vec<String> = cats
                .split(';')
                .map(|c| c.trim().to_string())
                .filter(|c| !c.is_empty())
                .collect();
            if categories.is_empty() {
                return Err(StoreError::BadLabelLine {
                    file_kind: "category map",
                    line: idx + 1,
                    text: trimmed.to_string(),
                });
            }
            map.insert(domain.trim().to_ascii_lowercase(), categories);
        }
        Ok(OfflineCategoryMap { map })
    }

    pub fn from_path(path: &Path) -> Result<OfflineCategoryMap, StoreError> {
        OfflineCategoryMap::from_reader(std::io::BufReader::new(std::fs::File::open(path)?))
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

impl CategoryProvider for OfflineCategoryMap {
    fn categories(&self, domain: &str) -> Result<Option<Vec<String>>, String> {
        Ok(self.map.get(&domain.to_ascii_lowercase()).cloned())
    }
}

/// Memoizing wrapper: each domain is asked of the inner provider at most
/// once, which keeps remote or expensive providers affordable.
pub struct MemoizedProvider<P> {
    inner: P,
    cache: Mutex<HashMap<String, Option<Vec<String>>>>,
    inner_calls: std::sync::atomic::AtomicUsize,
}

impl<P: CategoryProvider> MemoizedProvider<P> {
    pub fn new(inner: P) -> MemoizedProvider<P> {
        MemoizedProvider {
            inner,
            cache: Mutex::new(HashMap::new()),
            inner_calls: std::sync::atomic::AtomicUsize::new(0),
        }
    }

    /// How many lookups reached the inner provider.
    pub fn inner_calls(&self) -> usize {
        self.inner_calls.load(std::sync::atomic::Ordering::Relaxed)
    }
}

impl<P: CategoryProvider> CategoryProvider for MemoizedProvider<P> {
    fn categories(&self, domain: &str) -> Result<Option<Vec<String>>, String> {
        let key = domain.to_ascii_lowercase();
        if let Some(hit) = self.cache.lock().expect("cache lock").get(&key) {
            return Ok(hit.clone());
        }
        self.inner_calls
            .fetch_add(1, std::sync::atomic::Ordering::Relaxed);
        let result = self.inner.categories(&key)?;
        self.cache
            .lock()
            .expect("cache lock")
            .insert(key, result.clone());
        Ok(result)
    }
}

/// Parse a rank list with lines `rank,domain` (the usual top-list export
/// format). Duplicate domains keep their best (lowest) rank.
pub fn parse_rank_list<R: BufRead>(reader: R) -> Result<BTreeMap<String, u64>, StoreError> {
    let mut ranks = BTreeMap::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let parsed = trimmed
            .split_once(',')
            .and_then(|(rank, domain)| Some((rank.trim().parse::<u64>().ok()?, domain.trim())));
        let Some((rank, domain)) = parsed else {
            return Err(StoreError::BadLabelLine {
                file_kind: "rank list",
                line: idx + 1,
                text: trimmed.to_string(),
            });
        };
        if domain.is_empty() {
            return Err(StoreError::BadLabelLine {
                file_kind: "rank list",
                line: idx + 1,
                text: trimmed.to_string(),
            });
        }
        let entry = ranks
            .entry(domain.to_ascii_lowercase())
            .or_insert(rank);
        *entry = (*entry).min(rank);
    }
    Ok(ranks)
}

pub fn parse_rank_list_from_path(path: &Path) -> Result<BTreeMap<String, u64>, StoreError> {
    parse_rank_list(std::io::BufReader::new(std::fs::File::open(path)?))
}

/// Parse authentication labels with lines `domain,status` where status is
/// `rba`, `no-rba`, or `unknown`.
pub fn parse_rba_labels<R: BufRead>(
    reader: R,
) -> Result<BTreeMap<String, RbaStatus>, StoreError> {
    let mut labels = BTreeMap::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let parsed = trimmed
            .split_once(',')
            .and_then(|(domain, status)| {
                let status: RbaStatus = status.trim().parse().ok()?;
                Some((domain.trim().to_ascii_lowercase(), status))
            });
        let Some((domain, status)) = parsed else {
            return Err(StoreError::BadLabelLine {
                file_kind: "rba labels",
                line: idx + 1,
                text: trimmed.to_string(),
            });
        };
        labels.insert(domain, status);
    }
    Ok(labels)
}

pub fn parse_rba_labels_from_path(
    path: &Path,
) -> Result<BTreeMap<String, RbaStatus>, StoreError> {
    parse_rba_labels(std::io::BufReader::new(std::fs::File::open(path)?))
}

/// Join rank, authentication, and category labels onto profiles. Label
/// gaps and provider failures become warnings, never errors: labels enrich
/// the dataset, they do not gate it.
pub fn join_labels(
    profiles: &mut BTreeMap<String, SiteProfile>,
    ranks: &BTreeMap<String, u64>,
    rba: &BTreeMap<String, RbaStatus>,
    categories: &dyn CategoryProvider,
) -> Vec<String> {
    let mut warnings = Vec::new();
    for (domain, profile) in profiles.iter_mut() {
        profile.rank = ranks.get(domain).copied();
        profile.rba_status = rba.get(domain).copied().unwrap_or(RbaStatus::Unknown);
        match categories.categories(domain) {
            Ok(cats) => profile.categories = cats,
            Err(e) => {
                warnings.push(format!("category lookup for {domain} failed: {e}"));
                profile.categories = None;
            }
        }
    }
    warnings
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crawl::ThirdPartyObservation;

    fn record(domain: &str, url: &str, kind: PageKind, hints: &[&str]) -> CrawlRecord {
        let registry = Registry::builtin();
        CrawlRecord {
            schema: RECORD_SCHEMA_VERSION,
            run_id: "test-run".to_string(),
            target_domain: domain.to_string(),
            url: url.to_string(),
            page_kind: kind,
            vantage: Vantage::default(),
            timestamp: "2023-09-01T00:00:00Z".parse().unwrap(),
            status: RecordStatus::Http(200),
            insecure_transport: false,
            accept_ch: if hints.is_empty() {
                None
            } else {
                Some(registry.parse_accept_ch(&[hints.join(", ").as_str()]))
            },
            third_parties: Vec::new(),
        }
    }

    #[test]
    fn records_roundtrip_through_jsonl() {
        let records = vec![
            record("example.com", "https://example.com/", PageKind::Start, &["RTT"]),
            record(
                "example.com",
                "https://example.com/login",
                PageKind::Login,
                &[],
            ),
        ];
        let mut buf = Vec::new();
        write_records(&mut buf, &records).unwrap();
        let back = read_records(std::io::BufReader::new(buf.as_slice())).unwrap();
        assert_eq!(back, records);
    }

    #[test]
    fn read_rejects_wrong_schema() {
        let mut buf = Vec::new();
        write_records(&mut buf, &[record("a.com", "https://a.com/", PageKind::Start, &[])])
            .unwrap();
        let doctored = String::from_utf8(buf).unwrap().replace(
            &format!("\"schema\":{RECORD_SCHEMA_VERSION}"),
            "\"schema\":999",
        );
        match read_records(std::io::BufReader::new(doctored.as_bytes())) {
            Err(StoreError::SchemaMismatch { line: 1, found: 999, expected }) => {
                assert_eq!(expected, RECORD_SCHEMA_VERSION);
            }
            other => panic!("expected schema mismatch, got {other:?}"),
        }
    }

    #[test]
    fn read_reports_malformed_line_numbers() {
        let text = format!(
            "{}\nnot json at all\n",
            serde_json::to_string(&record("a.com", "https://a.com/", PageKind::Start, &[]))
                .unwrap()
        );
        match read_records(std::io::BufReader::new(text.as_bytes())) {
            Err(StoreError::Malformed { line: 2, .. }) => {}
            other => panic!("expected malformed line 2, got {other:?}"),
        }
    }

    #[test]
    fn ingest_archive_happy_path_and_skips() {
        let registry = Registry::builtin();
        let psl = PublicSuffixList::builtin();
        let lines = concat!(
            // String header value + RFC 3339 timestamp.
            r#"{"url":"https://a.example.com/","timestamp":"2023-01-15T10:00:00Z","headers":{"Accept-CH":"RTT, Sec-CH-UA"},"status":200}"#,
            "\n",
            // Array header value + epoch timestamp + default status.
            r#"{"url":"https://b.example.org/x","timestamp":1673776800,"headers":{"accept-ch":["Downlink","ECT"]}}"#,
            "\n",
            // No accept-ch header: ingested with no hints.
            r#"{"url":"https://c.example.net/","timestamp":"2023-01-15T10:00:00Z","headers":{"server":"nginx"}}"#,
            "\n",
            // Missing URL: skipped.
            r#"{"timestamp":"2023-01-15T10:00:00Z","headers":{}}"#,
            "\n",
            // Bad timestamp: skipped.
            r#"{"url":"https://d.example.com/","timestamp":"yesterday","headers":{}}"#,
            "\n",
            // Not JSON: skipped.
            "garbage\n",
        );
        let (records, report) = ingest_archive(
            std::io::BufReader::new(lines.as_bytes()),
            &ArchiveFieldMap::default(),
            &registry,
            psl,
            "archive-1",
            &Vantage::default(),
        )
        .unwrap();
        assert_eq!(report.ingested, 3);
        assert_eq!(report.skipped, 3);
        assert_eq!(report.reasons["missing-url"], 1);
        assert_eq!(report.reasons["bad-timestamp"], 1);
        assert_eq!(report.reasons["not-json"], 1);
        assert_eq!(records[0].target_domain, "example.com");
        let hints = &records[0].accept_ch.as_ref().unwrap().recognized;
        assert!(hints.contains("RTT") && hints.contains("Sec-CH-UA"));
        assert_eq!(
            records[1].accept_ch.as_ref().unwrap().recognized.len(),
            2
        );
        assert!(records[2].accept_ch.is_none());
        assert_eq!(records[1].timestamp.to_rfc3339(), "2023-01-15T10:00:00+00:00");
    }

    #[test]
    fn profiles_union_hints_per_page_kind() {
        let registry = Registry::builtin();
        let psl = PublicSuffixList::builtin();
        let records = vec![
            record("example.com", "https://example.com/", PageKind::Start, &["RTT"]),
            record(
                "www.example.com",
                "https://www.example.com/",
                PageKind::Start,
                &["Downlink"],
            ),
            record(
                "example.com",
                "https://example.com/login",
                PageKind::Login,
                &["Sec-CH-UA-Full-Version-List"],
            ),
        ];
        let (profiles, report) = build_profiles(&records, &registry, psl, None);
        assert_eq!(profiles.len(), 1);
        let profile = &profiles["example.com"];
        let start_hints = &profile.hints_by_page_kind[&PageKind::Start];
        assert!(start_hints.contains("RTT") && start_hints.contains("Downlink"));
        assert_eq!(profile.max_level, Some(HintLevel::VeryHigh));
        assert_eq!(report.records_used, 3);
    }

    #[test]
    fn profiles_keep_silent_pages_as_empty_sets() {
        let registry = Registry::builtin();
        let psl = PublicSuffixList::builtin();
        let records = vec![
            record("example.com", "https://example.com/", PageKind::Start, &["RTT"]),
            record(
                "example.com",
                "https://example.com/login",
                PageKind::Login,
                &[],
            ),
        ];
        let (profiles, _) = build_profiles(&records, &registry, psl, None);
        let profile = &profiles["example.com"];
        assert!(profile.hints_by_page_kind[&PageKind::Login].is_empty());
        assert_eq!(profile.hints_by_page_kind.len(), 2);
    }

    #[test]
    fn foreign_login_records_are_excluded() {
        let registry = Registry::builtin();
        let psl = PublicSuffixList::builtin();
        let records = vec![
            record("example.com", "https://example.com/", PageKind::Start, &[]),
            // Login on a different registrable domain: excluded.
            record(
                "example.com",
                "https://auth.provider.com/login",
                PageKind::Login,
                &["RTT"],
            ),
        ];
        let (profiles, report) = build_profiles(&records, &registry, psl, None);
        assert_eq!(report.login_domain_mismatches, 1);
        assert!(!report.warnings.is_empty());
        let profile = &profiles["example.com"];
        assert!(!profile.hints_by_page_kind.contains_key(&PageKind::Login));
        assert_eq!(profile.max_level, None);
    }

    #[test]
    fn transport_failures_contribute_nothing() {
        let registry = Registry::builtin();
        let psl = PublicSuffixList::builtin();
        let mut failed = record("example.com", "https://example.com/", PageKind::Start, &[]);
        failed.status = RecordStatus::Error("timeout".to_string());
        let (profiles, report) = build_profiles(&[failed], &registry, psl, None);
        assert!(profiles.is_empty());
        assert_eq!(report.transport_failures, 1);
    }

    #[test]
    fn third_parties_aggregate_and_match_trackers() {
        let registry = Registry::builtin();
        let psl = PublicSuffixList::builtin();
        let filter = FilterList::parse("||tracker.example^");
        let mut rec = record("example.com", "https://example.com/", PageKind::Start, &[]);
        rec.third_parties = vec![
            ThirdPartyObservation {
                domain: "tracker.example".to_string(),
                resource_url: "https://cdn.tracker.example/t.js".to_string(),
                accept_ch: Some(registry.parse_accept_ch(&["RTT, Viewport-Width"])),
            },
            ThirdPartyObservation {
                domain: "benign.example".to_string(),
                resource_url: "https://benign.example/lib.js".to_string(),
                accept_ch: None,
            },
        ];
        let (profiles, _) = build_profiles(&[rec], &registry, psl, Some(&filter));
        let profile = &profiles["example.com"];
        assert_eq!(profile.third_party_domains.len(), 2);
        assert_eq!(profile.third_party_hints.len(), 1);
        assert!(profile.third_party_hints["tracker.example"].contains("RTT"));
        assert_eq!(
            profile.tracker_linked_third_parties.iter().collect::<Vec<_>>(),
            ["tracker.example"]
        );
        // Third-party hints never affect the site's own max level.
        assert_eq!(profile.max_level, None);
    }

    #[test]
    fn alignment_matches_domains() {
        let registry = Registry::builtin();
        let psl = PublicSuffixList::builtin();
        let (left, _) = build_profiles(
            &[
                record("a.com", "https://a.com/", PageKind::Start, &[]),
                record("b.com", "https://b.com/", PageKind::Start, &[]),
            ],
            &registry,
            psl,
            None,
        );
        let (right, _) = build_profiles(
            &[
                record("b.com", "https://b.com/", PageKind::Start, &[]),
                record("c.com", "https://c.com/", PageKind::Start, &[]),
            ],
            &registry,
            psl,
            None,
        );
        let alignment = align_datasets(&left, &right);
        assert_eq!(alignment.both.len(), 1);
        assert_eq!(alignment.both[0].0.domain, "b.com");
        assert_eq!(alignment.only_left, ["a.com"]);
        assert_eq!(alignment.only_right, ["c.com"]);
    }

    #[test]
    fn label_files_parse_and_join() {
        let ranks = parse_rank_list(std::io::BufReader::new(
            "1,example.com\n2,other.com\n".as_bytes(),
        ))
        .unwrap();
        assert_eq!(ranks["example.com"], 1);
        let rba = parse_rba_labels(std::io::BufReader::new(
            "example.com,rba\nother.com,no-rba\n".as_bytes(),
        ))
        .unwrap();
        let categories = OfflineCategoryMap::from_reader(std::io::BufReader::new(
            "example.com,Shopping;Technology\n".as_bytes(),
        ))
        .unwrap();
        let registry = Registry::builtin();
        let psl = PublicSuffixList::builtin();
        let (mut profiles, _) = build_profiles(
            &[record("example.com", "https://example.com/", PageKind::Start, &[])],
            &registry,
            psl,
            None,
        );
        let warnings = join_labels(&mut profiles, &ranks, &rba, &categories);
        assert!(warnings.is_empty());
        let profile = &profiles["example.com"];
        assert_eq!(profile.rank, Some(1));
        assert_eq!(profile.rba_status, RbaStatus::Rba);
        assert_eq!(
            profile.categories.as_deref().unwrap(),
            ["Shopping", "Technology"]
        );
    }

    #[test]
    fn label_parsers_reject_garbage_with_line_numbers() {
        assert!(matches!(
            parse_rank_list(std::io::BufReader::new("1,a.com\nnot-a-rank,b.com\n".as_bytes())),
            Err(StoreError::BadLabelLine { line: 2, .. })
        ));
        assert!(matches!(
            parse_rba_labels(std::io::BufReader::new("a.com,maybe\n".as_bytes())),
            Err(StoreError::BadLabelLine { line: 1, .. })
        ));
        assert!(matches!(
            OfflineCategoryMap::from_reader(std::io::BufReader::new("justadomain\n".as_bytes())),
            Err(StoreError::BadLabelLine { line: 1, .. })
        ));
    }

    #[test]
    fn memoized_provider_calls_inner_once_per_domain() {
        struct Counting;
        impl CategoryProvider for Counting {
            fn categories(&self, domain: &str) -> Result<Option<Vec<String>>, String> {
                Ok(Some(vec![domain.to_uppercase()]))
            }
        }
        let provider = MemoizedProvider::new(Counting);
        for _ in 0..5 {
            provider.categories("example.com").unwrap();
            provider.categories("EXAMPLE.COM").unwrap();
            provider.categories("other.com").unwrap();
        }
        assert_eq!(provider.inner_calls(), 2);
    }

    #[test]
    fn provider_failures_become_warnings() {
        struct Flaky;
        impl CategoryProvider for Flaky {
            fn categories(&self, _: &str) -> Result<Option<Vec<String>>, String> {
                Err("service unavailable".to_string())
            }
        }
        let registry = Registry::builtin();
        let psl = PublicSuffixList::builtin();
        let (mut profiles, _) = build_profiles(
            &[record("example.com", "https://example.com/", PageKind::Start, &[])],
            &registry,
            psl,
            None,
        );
        let warnings = join_labels(&mut profiles, &BTreeMap::new(), &BTreeMap::new(), &Flaky);
        assert_eq!(warnings.len(), 1);
        assert!(profiles["example.com"].categories.is_none());
    }
}
