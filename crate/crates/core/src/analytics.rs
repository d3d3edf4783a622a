//! The study analyses, reproduced as pure functions over site profiles and
//! crawl records: hint frequency, adoption by rank and over time, start page
//! versus login page behavior, the site / third-party interconnection graph,
//! group comparisons with chi-squared tests under Bonferroni correction,
//! misspelled header names, and vantage tallies.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::crawl::{CrawlRecord, PageKind, RecordStatus, Vantage};
use crate::registry::{HintLevel, Registry};
use crate::stats::{chi_squared, summary_stats, SummaryStats};
use crate::store::{RbaStatus, SiteProfile};

/// Significance level used throughout the analyses.
pub const ALPHA: f64 = 0.05;

/// Rank thresholds for cumulative top-N adoption buckets.
pub const RANK_BUCKETS: [u64; 6] = [1_000, 5_000, 10_000, 100_000, 1_000_000, 8_000_000];

fn pct(part: usize, whole: usize) -> f64 {
    if whole == 0 {
        0.0
    } else {
        100.0 * part as f64 / whole as f64
    }
}

/// How many sites request a given hint (first party, any page kind).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HintFrequencyRow {
    pub hint: String,
    pub level: Option<HintLevel>,
    pub group: Option<String>,
    pub sites: usize,
    /// Share among all sites in the dataset.
    pub pct_of_sites: f64,
    /// Share among sites requesting at least one hint.
    pub pct_of_adopters: f64,
}

/// Per-hint adoption counts, most common first (ties broken by name).
pub fn hint_frequency(
    profiles: &BTreeMap<String, SiteProfile>,
    registry: &Registry,
) -> Vec<HintFrequencyRow> {
    let total = profiles.len();
    let mut adopters = 0usize;
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for profile in profiles.values() {
        let hints = profile.all_hints();
        if !hints.is_empty() {
            adopters += 1;
        }
        for hint in hints {
            *counts.entry(hint).or_insert(0) += 1;
        }
    }
    let mut rows: Vec<HintFrequencyRow> = counts
        .into_iter()
        .map(|(hint, sites)| {
            let descriptor = registry.lookup(hint);
            HintFrequencyRow {
                hint: hint.to_string(),
                level: descriptor.map(|d| d.level),
                group: descriptor.map(|d| d.group.to_string()),
                sites,
                pct_of_sites: pct(sites, total),
                pct_of_adopters: pct(sites, adopters),
            }
        })
        .collect();
    rows.sort_by(|a, b| b.sites.cmp(&a.sites).then_with(|| a.hint.cmp(&b.hint)));
    rows
}

/// Adoption within one cumulative top-N rank bucket.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankBucketRow {
    pub label: String,
    /// Upper rank bound; `None` for the all-sites row.
    pub max_rank: Option<u64>,
    pub sites: usize,
    /// Sites requesting at least one first-party hint.
    pub first_party_sites: usize,
    pub first_party_pct: f64,
    /// Sites with at least one hint-requesting third party.
    pub third_party_sites: usize,
    pub third_party_pct: f64,
}

/// First- and third-party adoption in cumulative top-N buckets, plus a
/// final `all` row over every site (ranked or not).
pub fn adoption_by_rank(profiles: &BTreeMap<String, SiteProfile>) -> Vec<RankBucketRow> {
    let mut rows = Vec::with_capacity(RANK_BUCKETS.len() + 1);
    for &bound in &RANK_BUCKETS {
        let in_bucket: Vec<&SiteProfile> = profiles
            .values()
            .filter(|p| p.rank.is_some_and(|r| r <= bound))
            .collect();
        rows.push(bucket_row(format!("top-{bound}"), Some(bound), &in_bucket));
    }
    let all: Vec<&SiteProfile> = profiles.values().collect();
    rows.push(bucket_row("all".to_string(), None, &all));
    rows
}

fn bucket_row(label: String, max_rank: Option<u64>, members: &[&SiteProfile]) -> RankBucketRow {
    let sites = members.len();
    let first_party_sites = members
        .iter()
        .filter(|p| p.hints_by_page_kind.values().any(|set| !set.is_empty()))
        .count();
    let third_party_sites = members
        .iter()
        .filter(|p| !p.third_party_hints.is_empty())
        .count();
    RankBucketRow {
        label,
        max_rank,
        sites,
        first_party_sites,
        first_party_pct: pct(first_party_sites, sites),
        third_party_sites,
        third_party_pct: pct(third_party_sites, sites),
    }
}

/// Start page versus login page behavior over sites where both pages were
/// observed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageKindDiff {
    /// Sites where both page kinds answered.
    pub sites_with_both: usize,
    /// Sites lacking one of the kinds, excluded from the comparison.
    pub excluded: usize,
    pub identical: usize,
    pub identical_pct: f64,
    pub differing: usize,
    /// Among differing sites: the login page requested nothing while the
    /// start page requested something.
    pub login_silent_among_differing: usize,
    pub login_silent_among_differing_pct: f64,
    /// Among differing sites: the login page requested hints the start page
    /// did not (strict superset or disjoint extras).
    pub login_extra_among_differing: usize,
    /// Hint-count distribution on start pages (sites with both kinds).
    pub start_hint_stats: Option<SummaryStats>,
    /// Hint-count distribution on login pages (sites with both kinds).
    pub login_hint_stats: Option<SummaryStats>,
}

/// Compare what sites request on their start page against their login page.
pub fn page_kind_diff(profiles: &BTreeMap<String, SiteProfile>) -> PageKindDiff {
    let mut sites_with_both = 0usize;
    let mut excluded = 0usize;
    let mut identical = 0usize;
    let mut login_silent = 0usize;
    let mut login_extra = 0usize;
    let mut start_counts = Vec::new();
    let mut login_counts = Vec::new();
    for profile in profiles.values() {
        let (Some(start), Some(login)) = (
            profile.hints_by_page_kind.get(&PageKind::Start),
            profile.hints_by_page_kind.get(&PageKind::Login),
        ) else {
            excluded += 1;
            continue;
        };
        sites_with_both += 1;
        start_counts.push(start.len() as f64);
        login_counts.push(login.len() as f64);
        if start == login {
            identical += 1;
        } else {
            if login.is_empty() && !start.is_empty() {
                login_silent += 1;
            }
            if login.difference(start).next().is_some() {
                login_extra += 1;
            }
        }
    }
    let differing = sites_with_both - identical;
    PageKindDiff {
        sites_with_both,
        excluded,
        identical,
        identical_pct: pct(identical, sites_with_both),
        differing,
        login_silent_among_differing: login_silent,
        login_silent_among_differing_pct: pct(login_silent, differing),
        login_extra_among_differing: login_extra,
        start_hint_stats: summary_stats(&start_counts),
        login_hint_stats: summary_stats(&login_counts),
    }
}

/// Adoption within one calendar month of records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonthRow {
    /// `YYYY-MM`.
    pub month: String,
    pub sites: usize,
    pub sites_with_ch: usize,
    pub pct: f64,
}

/// Adoption over time, bucketed by calendar month of the record timestamp.
/// Useful for longitudinal archive ingests; a site counts as adopting in a
/// month when any of its records that month carried recognized hints.
pub fn adoption_over_time(records: &[CrawlRecord]) -> Vec<MonthRow> {
    let mut months: BTreeMap<String, (BTreeSet<&str>, BTreeSet<&str>)> = BTreeMap::new();
    for record in records {
        if let RecordStatus::Error(_) = record.status {
            continue;
        }
        let month = record.timestamp.format("%Y-%m").to_string();
        let (sites, adopting) = months.entry(month).or_default();
        sites.insert(&record.target_domain);
        if record
            .accept_ch
            .as_ref()
            .is_some_and(|parsed| !parsed.recognized.is_empty())
        {
            adopting.insert(&record.target_domain);
        }
    }
    months
        .into_iter()
        .map(|(month, (sites, adopting))| MonthRow {
            month,
            sites: sites.len(),
            sites_with_ch: adopting.len(),
            pct: pct(adopting.len(), sites.len()),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeKind {
    Site,
    ThirdParty,
}

impl NodeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::Site => "site",
            NodeKind::ThirdParty => "third-party",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphNode {
    pub domain: String,
    pub kind: NodeKind,
    /// For sites: requests first-party hints. For third parties: requested
    /// hints on at least one embedding site.
    pub requests_hints: bool,
    pub max_level: Option<HintLevel>,
    /// Number of incident edges.
    pub degree: usize,
    /// For third parties: matched the tracker filter list on any site.
    pub tracker: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphEdge {
    pub site: String,
    pub third_party: String,
    /// The third party requested hints when embedded on this site.
    pub requests_hints: bool,
}

/// Bipartite graph between audited sites and the third parties they embed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterconnectionGraph {
    pub nodes: Vec<GraphNode>,
    pub edges: Vec<GraphEdge>,
}

impl InterconnectionGraph {
    /// Third-party nodes ranked by how many sites embed them, hint
    /// requesters first.
    pub fn top_third_parties(&self, limit: usize) -> Vec<&GraphNode> {
        let mut tps: Vec<&GraphNode> = self
            .nodes
            .iter()
            .filter(|n| n.kind == NodeKind::ThirdParty)
            .collect();
        tps.sort_by(|a, b| {
            b.requests_hints
                .cmp(&a.requests_hints)
                .then(b.degree.cmp(&a.degree))
                .then_with(|| a.domain.cmp(&b.domain))
        });
        tps.truncate(limit);
        tps
    }
}

/// Build the site / third-party interconnection graph. Nodes carry the
/// highest level of detail among the hints they request; third parties that
/// request hints anywhere are annotated as such everywhere.
pub fn build_interconnection_graph(
    profiles: &BTreeMap<String, SiteProfile>,
    registry: &Registry,
) -> InterconnectionGraph {
    let mut edges = Vec::new();
    let mut tp_degree: BTreeMap<&str, usize> = BTreeMap::new();
    let mut tp_hints: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    let mut tp_tracker: BTreeSet<&str> = BTreeSet::new();
    for profile in profiles.values() {
        for tp in &profile.third_party_domains {
            *tp_degree.entry(tp).or_insert(0) += 1;
            edges.push(GraphEdge {
                site: profile.domain.clone(),
                third_party: tp.clone(),
                requests_hints: profile.third_party_hints.contains_key(tp),
            });
        }
        for (tp, hints) in &profile.third_party_hints {
            tp_hints
                .entry(tp)
                .or_default()
                .extend(hints.iter().map(|h| h.as_str()));
        }
        for tp in &profile.tracker_linked_third_parties {
            tp_tracker.insert(tp);
        }
    }
    let mut nodes: Vec<GraphNode> = profiles
        .values()
        .map(|p| GraphNode {
            domain: p.domain.clone(),
            kind: NodeKind::Site,
            requests_hints: p.hints_by_page_kind.values().any(|s| !s.is_empty()),
            max_level: p.max_level,
            degree: p.third_party_domains.len(),
            tracker: false,
        })
        .collect();
    for (tp, degree) in &tp_degree {
        let hints = tp_hints.get(tp);
        nodes.push(GraphNode {
            domain: tp.to_string(),
            kind: NodeKind::ThirdParty,
            requests_hints: hints.is_some(),
            max_level: hints.and_then(|h| registry.max_level(h.iter().copied())),
            degree: *degree,
            tracker: tp_tracker.contains(tp),
        });
    }
    nodes.sort_by(|a, b| {
        let rank = |k: NodeKind| if k == NodeKind::Site { 0 } else { 1 };
        rank(a.kind)
            .cmp(&rank(b.kind))
            .then_with(|| a.domain.cmp(&b.domain))
    });
    edges.sort_by(|a, b| {
        a.site
            .cmp(&b.site)
            .then_with(|| a.third_party.cmp(&b.third_party))
    });
    InterconnectionGraph { nodes, edges }
}

/// One per-hint independence test across site groups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HintTest {
    pub hint: String,
    /// Per group: (sites requesting the hint, sites not requesting it),
    /// in the order of [`GroupComparisonReport::groups`].
    pub counts: Vec<(u64, u64)>,
    pub chi2: f64,
    pub dof: usize,
    pub p: f64,
    /// Bonferroni-adjusted across all non-degenerate tests in the family.
    pub p_adjusted: f64,
    pub significant: bool,
}

/// A hint excluded from testing, with the reason.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedTest {
    pub hint: String,
    pub reason: String,
}

/// Post-hoc pairwise test for a hint whose omnibus test was significant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseTest {
    pub hint: String,
    pub group_a: String,
    pub group_b: String,
    pub chi2: f64,
    pub p: f64,
    /// Bonferroni-adjusted over the pairs tested for this hint.
    pub p_adjusted: f64,
    pub significant: bool,
}

/// Chi-squared comparison of hint adoption across site groups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupComparisonReport {
    /// Group labels in table-row order.
    pub groups: Vec<String>,
    /// Sites per group.
    pub group_sizes: Vec<usize>,
    pub alpha: f64,
    /// Family size used for the Bonferroni correction (number of
    /// non-degenerate per-hint tests).
    pub correction_m: usize,
    pub tests: Vec<HintTest>,
    pub skipped: Vec<SkippedTest>,
    /// Pairwise follow-ups for significant omnibus tests when more than two
    /// groups are compared.
    pub pairwise: Vec<PairwiseTest>,
}

/// Test, per hint, whether requesting that hint is independent of group
/// membership. Hints whose contingency table is degenerate (no variation)
/// are skipped and listed; the Bonferroni family is the set of tests that
/// actually ran. With more than two groups, hints significant after
/// correction get pairwise follow-up tests corrected over the pairs.
pub fn group_comparison(
    groups: &BTreeMap<String, Vec<&SiteProfile>>,
    alpha: f64,
) -> GroupComparisonReport {
    let labels: Vec<String> = groups.keys().cloned().collect();
    let sizes: Vec<usize> = groups.values().map(|members| members.len()).collect();
    let requesters: Vec<Vec<BTreeSet<&str>>> = groups
        .values()
        .map(|members| members.iter().map(|p| p.all_hints()).collect())
        .collect();

    let mut all_hints: BTreeSet<&str> = BTreeSet::new();
    for group in &requesters {
        for site in group {
            all_hints.extend(site.iter().copied());
        }
    }

    // First pass: build tables, separating testable from degenerate.
    let mut raw: Vec<(String, Vec<(u64, u64)>, f64, usize, f64)> = Vec::new();
    let mut skipped = Vec::new();
    for hint in &all_hints {
        let counts: Vec<(u64, u64)> = requesters
            .iter()
            .map(|group| {
                let with = group.iter().filter(|site| site.contains(hint)).count() as u64;
                (with, group.len() as u64 - with)
            })
            .collect();
        let table: Vec<Vec<u64>> = counts.iter().map(|&(a, b)| vec![a, b]).collect();
        match chi_squared(&table) {
            Ok(result) => raw.push((hint.to_string(), counts, result.chi2, result.dof, result.p)),
            Err(e) => skipped.push(SkippedTest {
                hint: hint.to_string(),
                reason: e.to_string(),
            }),
        }
    }

    let m = raw.len();
    let mut tests: Vec<HintTest> = raw
        .into_iter()
        .map(|(hint, counts, chi2, dof, p)| {
            let p_adjusted = (p * m as f64).min(1.0);
            HintTest {
                hint,
                counts,
                chi2,
                dof,
                p,
                p_adjusted,
                significant: p_adjusted < alpha,
            }
        })
        .collect();
    tests.sort_by(|a, b| {
        a.p.partial_cmp(&b.p)
            .expect("finite p-values")
            .then_with(|| a.hint.cmp(&b.hint))
    });

    // Pairwise follow-ups only make sense with three or more groups.
    let mut pairwise = Vec::new();
    if labels.len() > 2 {
        let pair_count = labels.len() * (labels.len() - 1) / 2;
        for test in tests.iter().filter(|t| t.significant) {
            for i in 0..labels.len() {
                for j in (i + 1)..labels.len() {
                    let table = vec![
                        vec![test.counts[i].0, test.counts[i].1],
                        vec![test.counts[j].0, test.counts[j].1],
                    ];
                    let Ok(result) = chi_squared(&table) else {
                        continue;
                    };
                    let p_adjusted = (result.p * pair_count as f64).min(1.0);
                    pairwise.push(PairwiseTest {
                        hint: test.hint.clone(),
                        group_a: labels[i].clone(),
                        group_b: labels[j].clone(),
                        chi2: result.chi2,
                        p: result.p,
                        p_adjusted,
                        significant: p_adjusted < alpha,
                    });
                }
            }
        }
    }

    GroupComparisonReport {
        groups: labels,
        group_sizes: sizes,
        alpha,
        correction_m: m,
        tests,
        skipped,
        pairwise,
    }
}

/// Partition profiles into `rba` / `no-rba` groups; unlabeled sites are
/// left out.
pub fn group_by_rba(
    profiles: &BTreeMap<String, SiteProfile>,
) -> BTreeMap<String, Vec<&SiteProfile>> {
    let mut groups: BTreeMap<String, Vec<&SiteProfile>> = BTreeMap::new();
    for profile in profiles.values() {
        let label = match profile.rba_status {
            RbaStatus::Rba => "rba",
            RbaStatus::NoRba => "no-rba",
            RbaStatus::Unknown => continue,
        };
        groups.entry(label.to_string()).or_default().push(profile);
    }
    groups
}

/// Partition profiles with known categories into `<category>` versus
/// `other`.
pub fn partition_by_category<'a>(
    profiles: &'a BTreeMap<String, SiteProfile>,
    category: &str,
) -> BTreeMap<String, Vec<&'a SiteProfile>> {
    let mut groups: BTreeMap<String, Vec<&SiteProfile>> = BTreeMap::new();
    for profile in profiles.values() {
        let Some(categories) = &profile.categories else {
            continue;
        };
        let label = if categories.iter().any(|c| c.eq_ignore_ascii_case(category)) {
            category.to_string()
        } else {
            "other".to_string()
        };
        groups.entry(label).or_default().push(profile);
    }
    groups
}

/// An unrecognized header name seen in `Accept-CH` values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MisspellingRow {
    /// The name as first seen (original casing).
    pub name: String,
    /// Total occurrences across records.
    pub occurrences: usize,
    /// Distinct sites advertising it.
    pub sites: usize,
    /// A registry hint this was probably meant to be, when the name matches
    /// one after adding or stripping a `Sec-CH-` prefix.
    pub probably_meant: Option<String>,
}

/// Collect unrecognized `Accept-CH` names — misspellings, retired drafts,
/// or vendor inventions — with counts and a best-effort canonical guess.
pub fn misspelling_report(records: &[CrawlRecord], registry: &Registry) -> Vec<MisspellingRow> {
    let mut by_name: BTreeMap<String, (String, usize, BTreeSet<&str>)> = BTreeMap::new();
    for record in records {
        let parsed = [record.accept_ch.as_ref()]
            .into_iter()
            .flatten()
            .chain(record.third_parties.iter().filter_map(|tp| tp.accept_ch.as_ref()));
        for accept_ch in parsed {
            for name in &accept_ch.unrecognized {
                let entry = by_name
                    .entry(name.to_ascii_lowercase())
                    .or_insert_with(|| (name.clone(), 0, BTreeSet::new()));
                entry.1 += 1;
                entry.2.insert(&record.target_domain);
            }
        }
    }
    let mut rows: Vec<MisspellingRow> = by_name
        .into_values()
        .map(|(name, occurrences, sites)| MisspellingRow {
            probably_meant: suggest_canonical(&name, registry),
            name,
            occurrences,
            sites: sites.len(),
        })
        .collect();
    rows.sort_by(|a, b| {
        b.occurrences
            .cmp(&a.occurrences)
            .then_with(|| a.name.cmp(&b.name))
    });
    rows
}

/// Guess which registry hint an unrecognized name was meant to be: the same
/// name with a `Sec-CH-` prefix added or removed.
fn suggest_canonical(name: &str, registry: &Registry) -> Option<String> {
    let lower = name.to_ascii_lowercase();
    let variants = [
        lower.strip_prefix("sec-ch-").map(str::to_string),
        Some(format!("sec-ch-{lower}")),
    ];
    for variant in variants.into_iter().flatten() {
        if let Some(descriptor) = registry.lookup(&variant) {
            return Some(descriptor.header_name.clone());
        }
    }
    None
}

/// Records and distinct sites observed from one vantage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VantageRow {
    pub vantage: Vantage,
    pub records: usize,
    pub sites: usize,
}

/// Tally records and distinct sites per vantage.
pub fn vantage_counts(records: &[CrawlRecord]) -> Vec<VantageRow> {
    let mut by_vantage: BTreeMap<&Vantage, (usize, BTreeSet<&str>)> = BTreeMap::new();
    for record in records {
        let entry = by_vantage.entry(&record.vantage).or_default();
        entry.0 += 1;
        entry.1.insert(&record.target_domain);
    }
    by_vantage
        .into_iter()
        .map(|(vantage, (records, sites))| VantageRow {
            vantage: vantage.clone(),
            records,
            sites: sites.len(),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crawl::{ThirdPartyObservation, RECORD_SCHEMA_VERSION};
    use crate::psl::PublicSuffixList;
    use crate::store::build_profiles;

    fn record_at(
        domain: &str,
        kind: PageKind,
        hints: &[&str],
        timestamp: &str,
    ) -> CrawlRecord {
        let registry = Registry::builtin();
        let path = if kind == PageKind::Login { "/login" } else { "/" };
        CrawlRecord {
            schema: RECORD_SCHEMA_VERSION,
            run_id: "t".to_string(),
            target_domain: domain.to_string(),
            url: format!("https://{domain}{path}"),
            page_kind: kind,
            vantage: Vantage::default(),
            timestamp: timestamp.parse().unwrap(),
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

    fn record(domain: &str, kind: PageKind, hints: &[&str]) -> CrawlRecord {
        record_at(domain, kind, hints, "2023-09-01T00:00:00Z")
    }

    fn profiles_from(records: &[CrawlRecord]) -> BTreeMap<String, SiteProfile> {
        let registry = Registry::builtin();
        let psl = PublicSuffixList::builtin();
        build_profiles(records, &registry, psl, None).0
    }

    #[test]
    fn frequency_sorts_by_count_then_name() {
        let registry = Registry::builtin();
        let profiles = profiles_from(&[
            record("a.com", PageKind::Start, &["RTT", "Sec-CH-UA"]),
            record("b.com", PageKind::Start, &["RTT", "Downlink"]),
            record("c.com", PageKind::Start, &["RTT"]),
            record("d.com", PageKind::Start, &[]),
        ]);
        let rows = hint_frequency(&profiles, &registry);
        assert_eq!(rows[0].hint, "RTT");
        assert_eq!(rows[0].sites, 3);
        assert_eq!(rows[0].pct_of_sites, 75.0);
        assert_eq!(rows[0].pct_of_adopters, 100.0);
        assert_eq!(rows[0].level, Some(HintLevel::High));
        // Downlink and Sec-CH-UA tie at 1; name order breaks the tie.
        assert_eq!(rows[1].hint, "Downlink");
        assert_eq!(rows[2].hint, "Sec-CH-UA");
    }

    #[test]
    fn rank_buckets_are_cumulative_with_all_row() {
        let mut profiles = profiles_from(&[
            record("a.com", PageKind::Start, &["RTT"]),
            record("b.com", PageKind::Start, &[]),
            record("c.com", PageKind::Start, &["Sec-CH-UA"]),
            record("d.com", PageKind::Start, &[]),
        ]);
        profiles.get_mut("a.com").unwrap().rank = Some(500);
        profiles.get_mut("b.com").unwrap().rank = Some(800);
        profiles.get_mut("c.com").unwrap().rank = Some(4_000);
        // d.com stays unranked.
        let rows = adoption_by_rank(&profiles);
        assert_eq!(rows.len(), RANK_BUCKETS.len() + 1);
        let top1k = &rows[0];
        assert_eq!((top1k.sites, top1k.first_party_sites), (2, 1));
        assert_eq!(top1k.first_party_pct, 50.0);
        let top5k = &rows[1];
        assert_eq!((top5k.sites, top5k.first_party_sites), (3, 2));
        let all = rows.last().unwrap();
        assert_eq!(all.label, "all");
        assert_eq!(all.sites, 4);
        assert_eq!(all.first_party_pct, 50.0);
    }

    #[test]
    fn third_party_rate_counts_hint_requesting_embeds_only() {
        let registry = Registry::builtin();
        let psl = PublicSuffixList::builtin();
        let mut with_tp = record("a.com", PageKind::Start, &[]);
        with_tp.third_parties = vec![ThirdPartyObservation {
            domain: "cdn.example".to_string(),
            resource_url: "https://cdn.example/x.js".to_string(),
            accept_ch: Some(registry.parse_accept_ch(&["RTT"])),
        }];
        let mut silent_tp = record("b.com", PageKind::Start, &[]);
        silent_tp.third_parties = vec![ThirdPartyObservation {
            domain: "static.example".to_string(),
            resource_url: "https://static.example/y.js".to_string(),
            accept_ch: None,
        }];
        let (profiles, _) =
            build_profiles(&[with_tp, silent_tp], &registry, psl, None);
        let rows = adoption_by_rank(&profiles);
        let all = rows.last().unwrap();
        assert_eq!(all.third_party_sites, 1);
        assert_eq!(all.third_party_pct, 50.0);
    }

    #[test]
    fn page_kind_diff_worked_example() {
        // a: identical; b: login silent; c: login adds a hint; d: start only.
        let profiles = profiles_from(&[
            record("a.com", PageKind::Start, &["RTT"]),
            record("a.com", PageKind::Login, &["RTT"]),
            record("b.com", PageKind::Start, &["RTT", "Downlink"]),
            record("b.com", PageKind::Login, &[]),
            record("c.com", PageKind::Start, &["RTT"]),
            record("c.com", PageKind::Login, &["RTT", "Sec-CH-UA-Model"]),
            record("d.com", PageKind::Start, &["RTT"]),
        ]);
        let diff = page_kind_diff(&profiles);
        assert_eq!(diff.sites_with_both, 3);
        assert_eq!(diff.excluded, 1);
        assert_eq!(diff.identical, 1);
        assert!((diff.identical_pct - 100.0 / 3.0).abs() < 1e-9);
        assert_eq!(diff.differing, 2);
        assert_eq!(diff.login_silent_among_differing, 1);
        assert_eq!(diff.login_silent_among_differing_pct, 50.0);
        assert_eq!(diff.login_extra_among_differing, 1);
        let start = diff.start_hint_stats.unwrap();
        assert_eq!(start.n, 3);
        assert!((start.mean - 4.0 / 3.0).abs() < 1e-12);
        let login = diff.login_hint_stats.unwrap();
        assert_eq!(login.median, 1.0);
    }

    #[test]
    fn adoption_over_time_buckets_by_month() {
        let records = vec![
            record_at("a.com", PageKind::Start, &["RTT"], "2023-01-10T00:00:00Z"),
            record_at("b.com", PageKind::Start, &[], "2023-01-20T00:00:00Z"),
            record_at("a.com", PageKind::Start, &[], "2023-02-01T00:00:00Z"),
            record_at("b.com", PageKind::Start, &["Sec-CH-UA"], "2023-02-15T00:00:00Z"),
            record_at("c.com", PageKind::Start, &["ECT"], "2023-02-20T00:00:00Z"),
        ];
        let rows = adoption_over_time(&records);
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].month, "2023-01");
        assert_eq!((rows[0].sites, rows[0].sites_with_ch), (2, 1));
        assert_eq!(rows[0].pct, 50.0);
        assert_eq!(rows[1].month, "2023-02");
        assert_eq!((rows[1].sites, rows[1].sites_with_ch), (3, 2));
    }

    #[test]
    fn interconnection_graph_is_bipartite_and_sorted() {
        let registry = Registry::builtin();
        let psl = PublicSuffixList::builtin();
        let mut rec_a = record("a.com", PageKind::Start, &["RTT"]);
        rec_a.third_parties = vec![
            ThirdPartyObservation {
                domain: "tracker.example".to_string(),
                resource_url: "https://t.tracker.example/x.js".to_string(),
                accept_ch: Some(registry.parse_accept_ch(&["Sec-CH-UA-Full-Version-List"])),
            },
            ThirdPartyObservation {
                domain: "cdn.example".to_string(),
                resource_url: "https://cdn.example/y.js".to_string(),
                accept_ch: None,
            },
        ];
        let mut rec_b = record("b.com", PageKind::Start, &[]);
        rec_b.third_parties = vec![ThirdPartyObservation {
            domain: "tracker.example".to_string(),
            resource_url: "https://t.tracker.example/x.js".to_string(),
            accept_ch: None,
        }];
        let (profiles, _) = build_profiles(&[rec_a, rec_b], &registry, psl, None);
        let graph = build_interconnection_graph(&profiles, &registry);
        // Sites first, alphabetical; then third parties alphabetical.
        let names: Vec<&str> = graph.nodes.iter().map(|n| n.domain.as_str()).collect();
        assert_eq!(names, ["a.com", "b.com", "cdn.example", "tracker.example"]);
        let tracker = graph
            .nodes
            .iter()
            .find(|n| n.domain == "tracker.example")
            .unwrap();
        assert_eq!(tracker.kind, NodeKind::ThirdParty);
        assert_eq!(tracker.degree, 2);
        assert!(tracker.requests_hints);
        assert_eq!(tracker.max_level, Some(HintLevel::VeryHigh));
        assert_eq!(graph.edges.len(), 3);
        // Edge annotation is per embedding site.
        let edge_a = graph
            .edges
            .iter()
            .find(|e| e.site == "a.com" && e.third_party == "tracker.example")
            .unwrap();
        assert!(edge_a.requests_hints);
        let edge_b = graph
            .edges
            .iter()
            .find(|e| e.site == "b.com" && e.third_party == "tracker.example")
            .unwrap();
        assert!(!edge_b.requests_hints);
        let top = graph.top_third_parties(1);
        assert_eq!(top[0].domain, "tracker.example");
    }

    #[test]
    fn group_comparison_two_groups_worked_example() {
        // 30 rba sites, 20 request RTT; 40 no-rba sites, 10 request RTT.
        let mut records = Vec::new();
        for i in 0..30 {
            let hints: &[&str] = if i < 20 { &["RTT"] } else { &[] };
            records.push(record(&format!("rba-{i}.com"), PageKind::Start, hints));
        }
        for i in 0..40 {
            let hints: &[&str] = if i < 10 { &["RTT"] } else { &[] };
            records.push(record(&format!("plain-{i}.com"), PageKind::Start, hints));
        }
        let mut profiles = profiles_from(&records);
        for (domain, profile) in profiles.iter_mut() {
            profile.rba_status = if domain.starts_with("rba-") {
                RbaStatus::Rba
            } else {
                RbaStatus::NoRba
            };
        }
        let groups = group_by_rba(&profiles);
        assert_eq!(groups.len(), 2);
        let report = group_comparison(&groups, ALPHA);
        assert_eq!(report.groups, ["no-rba", "rba"]);
        assert_eq!(report.group_sizes, [40, 30]);
        assert_eq!(report.correction_m, 1);
        assert_eq!(report.tests.len(), 1);
        let test = &report.tests[0];
        assert_eq!(test.hint, "RTT");
        assert_eq!(test.counts, [(10, 30), (20, 10)]);
        // Oracle: chi2 = 70*(10*10 - 30*20)^2 / (40*30*30*40) = 12.152777...
        assert!((test.chi2 - 12.152777777777779).abs() < 1e-9);
        assert!(test.significant);
        assert_eq!(test.p_adjusted, test.p); // m == 1
        assert!(report.pairwise.is_empty(), "no pairwise for two groups");
    }

    #[test]
    fn group_comparison_skips_degenerate_hints_and_sets_family_size() {
        // Sec-CH-UA requested by every site: degenerate column.
        let mut records = Vec::new();
        for i in 0..10 {
            let hints: &[&str] = if i < 8 {
                &["Sec-CH-UA", "RTT"]
            } else {
                &["Sec-CH-UA"]
            };
            records.push(record(&format!("rba-{i}.com"), PageKind::Start, hints));
        }
        for i in 0..10 {
            let hints: &[&str] = if i < 2 {
                &["Sec-CH-UA", "RTT"]
            } else {
                &["Sec-CH-UA"]
            };
            records.push(record(&format!("plain-{i}.com"), PageKind::Start, hints));
        }
        let mut profiles = profiles_from(&records);
        for (domain, profile) in profiles.iter_mut() {
            profile.rba_status = if domain.starts_with("rba-") {
                RbaStatus::Rba
            } else {
                RbaStatus::NoRba
            };
        }
        let report = group_comparison(&group_by_rba(&profiles), ALPHA);
        assert_eq!(report.correction_m, 1);
        assert_eq!(report.tests.len(), 1);
        assert_eq!(report.tests[0].hint, "RTT");
        assert_eq!(report.skipped.len(), 1);
        assert_eq!(report.skipped[0].hint, "Sec-CH-UA");
    }

    #[test]
    fn group_comparison_three_groups_runs_pairwise_followups() {
        let mut records = Vec::new();
        let spec: [(&str, usize, usize); 3] =
            [("alpha", 30, 28), ("beta", 30, 2), ("gamma", 30, 15)];
        for (label, n, with) in spec {
            for i in 0..n {
                let hints: &[&str] = if i < with { &["RTT"] } else { &[] };
                records.push(record(&format!("{label}-{i}.com"), PageKind::Start, hints));
            }
        }
        let profiles = profiles_from(&records);
        let mut groups: BTreeMap<String, Vec<&SiteProfile>> = BTreeMap::new();
        for (domain, profile) in &profiles {
            let label = domain.split('-').next().unwrap().to_string();
            groups.entry(label).or_default().push(profile);
        }
        let report = group_comparison(&groups, ALPHA);
        assert_eq!(report.tests.len(), 1);
        assert!(report.tests[0].significant);
        assert_eq!(report.tests[0].dof, 2);
        // Three pairs, each corrected by m = 3.
        assert_eq!(report.pairwise.len(), 3);
        for pair in &report.pairwise {
            assert!((pair.p_adjusted - (pair.p * 3.0).min(1.0)).abs() < 1e-12);
        }
        let ab = report
            .pairwise
            .iter()
            .find(|t| t.group_a == "alpha" && t.group_b == "beta")
            .unwrap();
        assert!(ab.significant);
    }

    #[test]
    fn category_partition_is_binary() {
        let mut profiles = profiles_from(&[
            record("shop.com", PageKind::Start, &[]),
            record("news.com", PageKind::Start, &[]),
            record("blog.com", PageKind::Start, &[]),
        ]);
        profiles.get_mut("shop.com").unwrap().categories =
            Some(vec!["Shopping".to_string()]);
        profiles.get_mut("news.com").unwrap().categories = Some(vec!["News".to_string()]);
        // blog.com has no category data and is excluded.
        let groups = partition_by_category(&profiles, "shopping");
        assert_eq!(groups.len(), 2);
        assert_eq!(groups["shopping"].len(), 1);
        assert_eq!(groups["other"].len(), 1);
    }

    #[test]
    fn misspellings_are_counted_and_diagnosed() {
        let mut records = vec![
            record("a.com", PageKind::Start, &["Sec-CH-Device-Memory", "RTT"]),
            record("b.com", PageKind::Start, &["Sec-CH-Device-Memory"]),
            record("c.com", PageKind::Start, &["X-Custom-Probe"]),
        ];
        // Same misspelling again on a.com's login page: occurrence counted,
        // site deduplicated.
        records.push(record("a.com", PageKind::Login, &["sec-ch-device-memory"]));
        let registry = Registry::builtin();
        let rows = misspelling_report(&records, &registry);
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].name, "Sec-CH-Device-Memory");
        assert_eq!(rows[0].occurrences, 3);
        assert_eq!(rows[0].sites, 2);
        assert_eq!(rows[0].probably_meant.as_deref(), Some("Device-Memory"));
        assert_eq!(rows[1].name, "X-Custom-Probe");
        assert!(rows[1].probably_meant.is_none());
    }

    #[test]
    fn vantage_rows_tally_records_and_sites() {
        let mut r1 = record("a.com", PageKind::Start, &[]);
        let mut r2 = record("a.com", PageKind::Login, &[]);
        let r3 = record("b.com", PageKind::Start, &[]);
        let eu = Vantage {
            region: "eu-central".to_string(),
            isp: "university".to_string(),
        };
        r1.vantage = eu.clone();
        r2.vantage = eu.clone();
        let rows = vantage_counts(&[r1, r2, r3]);
        assert_eq!(rows.len(), 2);
        let eu_row = rows.iter().find(|r| r.vantage == eu).unwrap();
        assert_eq!((eu_row.records, eu_row.sites), (2, 1));
    }
}
