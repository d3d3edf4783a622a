//! Machine-readable analysis reports: one directory of deterministic CSV
//! files plus a JSON manifest. Reports built from the same dataset are
//! byte-identical, so diffing two report directories is a meaningful
//! regression check; nothing time- or machine-dependent is written.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analytics::{
    adoption_by_rank, adoption_over_time, build_interconnection_graph, group_by_rba,
    group_comparison, hint_frequency, misspelling_report, page_kind_diff, vantage_counts,
    GroupComparisonReport, HintFrequencyRow, InterconnectionGraph, MisspellingRow, MonthRow,
    PageKindDiff, RankBucketRow, VantageRow, ALPHA,
};
use crate::crawl::CrawlRecord;
use crate::filter::FilterList;
use crate::psl::PublicSuffixList;
use crate::registry::Registry;
use crate::store::{build_profiles, join_labels, CategoryProvider, RbaStatus, SiteProfile};

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Significance formatting convention: very small p-values print as a bound
/// rather than a misleading string of zeros; everything else gets four
/// decimals.
pub fn format_p(p: f64) -> String {
    if p < 1e-4 {
        "<0.0001".to_string()
    } else {
        format!("{p:.4}")
    }
}

fn fmt_pct(v: f64) -> String {
    format!("{v:.4}")
}

fn fmt_stat(v: f64) -> String {
    format!("{v:.6}")
}

/// Everything the analysis stage produces, ready to serialize.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub run_id: String,
    pub sites: usize,
    pub records_seen: usize,
    pub records_used: usize,
    pub login_domain_mismatches: usize,
    pub transport_failures: usize,
    pub frequency: Vec<HintFrequencyRow>,
    pub adoption_by_rank: Vec<RankBucketRow>,
    pub page_kind_diff: PageKindDiff,
    pub adoption_over_time: Vec<MonthRow>,
    pub graph: InterconnectionGraph,
    /// Present when at least two authentication groups had members.
    pub group_comparison: Option<GroupComparisonReport>,
    pub misspellings: Vec<MisspellingRow>,
    pub vantages: Vec<VantageRow>,
    /// Sorted, deduplicated warnings from profile building and label joins.
    pub warnings: Vec<String>,
}

/// Borrowed inputs for one analysis pass.
pub struct AnalyzeInputs<'a> {
    pub records: &'a [CrawlRecord],
    pub registry: &'a Registry,
    pub psl: &'a PublicSuffixList,
    /// Tracker filter list for third-party attribution.
    pub filter: Option<&'a FilterList>,
    pub ranks: &'a BTreeMap<String, u64>,
    pub rba: &'a BTreeMap<String, RbaStatus>,
    pub categories: &'a dyn CategoryProvider,
    pub run_id: String,
    /// Significance level for group comparisons; [`ALPHA`] unless an
    /// operator overrides it. Must lie in (0, 1).
    pub alpha: f64,
}

/// Run the full analysis pipeline over a record set: build profiles, join
/// labels, then compute every analysis. Pure over its inputs — two calls
/// with the same data produce identical reports.
pub fn analyze(inputs: AnalyzeInputs<'_>) -> (AnalysisReport, BTreeMap<String, SiteProfile>) {
    let (mut profiles, build) =
        build_profiles(inputs.records, inputs.registry, inputs.psl, inputs.filter);
    let join_warnings = join_labels(&mut profiles, inputs.ranks, inputs.rba, inputs.categories);
    let mut warnings: Vec<String> = build
        .warnings
        .into_iter()
        .chain(join_warnings)
        .collect();
    warnings.sort();
    warnings.dedup();

    assert!(
        inputs.alpha > 0.0 && inputs.alpha < 1.0,
        "alpha must lie in (0, 1), got {}",
        inputs.alpha
    );
    let groups = group_by_rba(&profiles);
    let comparison = if groups.len() >= 2 {
        Some(group_comparison(&groups, inputs.alpha))
    } else {
        None
    };

    let report = AnalysisReport {
        run_id: inputs.run_id,
        sites: profiles.len(),
        records_seen: build.records_seen,
        records_used: build.records_used,
        login_domain_mismatches: build.login_domain_mismatches,
        transport_failures: build.transport_failures,
        frequency: hint_frequency(&profiles, inputs.registry),
        adoption_by_rank: adoption_by_rank(&profiles),
        page_kind_diff: page_kind_diff(&profiles),
        adoption_over_time: adoption_over_time(inputs.records),
        graph: build_interconnection_graph(&profiles, inputs.registry),
        group_comparison: comparison,
        misspellings: misspelling_report(inputs.records, inputs.registry),
        vantages: vantage_counts(inputs.records),
        warnings,
    };
    (report, profiles)
}

/// File-level manifest written next to the CSVs. Deliberately carries no
/// timestamps or host details: report directories must be reproducible.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct ReportManifest {
    schema: u32,
    run_id: String,
    sites: usize,
    records_seen: usize,
    records_used: usize,
    login_domain_mismatches: usize,
    transport_failures: usize,
    alpha: f64,
    group_comparison_family_size: Option<usize>,
    files: Vec<String>,
    warnings: Vec<String>,
}

const REPORT_FILES: [&str; 10] = [
    "frequency.csv",
    "adoption_by_rank.csv",
    "page_kind_diff.csv",
    "adoption_over_time.csv",
    "graph_nodes.csv",
    "graph_edges.csv",
    "group_comparison.csv",
    "group_comparison_pairwise.csv",
    "misspellings.csv",
    "vantage_counts.csv",
];

/// Write the report as CSV files plus `report_manifest.json` into `dir`
/// (created if missing). Every file is written on every call, so a report
/// directory is always internally consistent.
pub fn write_report(report: &AnalysisReport, dir: &Path) -> Result<(), ReportError> {
    std::fs::create_dir_all(dir)?;

    let mut w = csv::Writer::from_path(dir.join("frequency.csv"))?;
    w.write_record(["hint", "level", "group", "sites", "pct_of_sites", "pct_of_adopters"])?;
    for row in &report.frequency {
        w.write_record([
            row.hint.as_str(),
            row.level.map(|l| l.as_str()).unwrap_or(""),
            row.group.as_deref().unwrap_or(""),
            &row.sites.to_string(),
            &fmt_pct(row.pct_of_sites),
            &fmt_pct(row.pct_of_adopters),
        ])?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join("adoption_by_rank.csv"))?;
    w.write_record([
        "bucket",
        "max_rank",
        "sites",
        "first_party_sites",
        "first_party_pct",
        "third_party_sites",
        "third_party_pct",
    ])?;
    for row in &report.adoption_by_rank {
        w.write_record([
            row.label.as_str(),
            &row.max_rank.map(|r| r.to_string()).unwrap_or_default(),
            &row.sites.to_string(),
            &row.first_party_sites.to_string(),
            &fmt_pct(row.first_party_pct),
            &row.third_party_sites.to_string(),
            &fmt_pct(row.third_party_pct),
        ])?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join("page_kind_diff.csv"))?;
    w.write_record(["metric", "value"])?;
    let d = &report.page_kind_diff;
    let stat_or_empty = |s: Option<f64>| s.map(fmt_stat).unwrap_or_default();
    let diff_rows: [(&str, String); 14] = [
        ("sites_with_both", d.sites_with_both.to_string()),
        ("excluded", d.excluded.to_string()),
        ("identical", d.identical.to_string()),
        ("identical_pct", fmt_pct(d.identical_pct)),
        ("differing", d.differing.to_string()),
        (
            "login_silent_among_differing",
            d.login_silent_among_differing.to_string(),
        ),
        (
            "login_silent_among_differing_pct",
            fmt_pct(d.login_silent_among_differing_pct),
        ),
        (
            "login_extra_among_differing",
            d.login_extra_among_differing.to_string(),
        ),
        ("start_hint_mean", stat_or_empty(d.start_hint_stats.map(|s| s.mean))),
        (
            "start_hint_median",
            stat_or_empty(d.start_hint_stats.map(|s| s.median)),
        ),
        ("start_hint_sd", stat_or_empty(d.start_hint_stats.map(|s| s.sd))),
        ("login_hint_mean", stat_or_empty(d.login_hint_stats.map(|s| s.mean))),
        (
            "login_hint_median",
            stat_or_empty(d.login_hint_stats.map(|s| s.median)),
        ),
        ("login_hint_sd", stat_or_empty(d.login_hint_stats.map(|s| s.sd))),
    ];
    for (metric, value) in diff_rows {
        w.write_record([metric, value.as_str()])?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join("adoption_over_time.csv"))?;
    w.write_record(["month", "sites", "sites_with_ch", "pct"])?;
    for row in &report.adoption_over_time {
        w.write_record([
            row.month.as_str(),
            &row.sites.to_string(),
            &row.sites_with_ch.to_string(),
            &fmt_pct(row.pct),
        ])?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join("graph_nodes.csv"))?;
    w.write_record(["domain", "kind", "requests_hints", "max_level", "degree", "tracker"])?;
    for node in &report.graph.nodes {
        w.write_record([
            node.domain.as_str(),
            node.kind.as_str(),
            if node.requests_hints { "true" } else { "false" },
            node.max_level.map(|l| l.as_str()).unwrap_or(""),
            &node.degree.to_string(),
            if node.tracker { "true" } else { "false" },
        ])?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join("graph_edges.csv"))?;
    w.write_record(["site", "third_party", "requests_hints"])?;
    for edge in &report.graph.edges {
        w.write_record([
            edge.site.as_str(),
            edge.third_party.as_str(),
            if edge.requests_hints { "true" } else { "false" },
        ])?;
    }
    w.flush()?;

    write_group_comparison(report.group_comparison.as_ref(), dir)?;

    let mut w = csv::Writer::from_path(dir.join("misspellings.csv"))?;
    w.write_record(["name", "occurrences", "sites", "probably_meant"])?;
    for row in &report.misspellings {
        w.write_record([
            row.name.as_str(),
            &row.occurrences.to_string(),
            &row.sites.to_string(),
            row.probably_meant.as_deref().unwrap_or(""),
        ])?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join("vantage_counts.csv"))?;
    w.write_record(["region", "isp", "records", "sites"])?;
    for row in &report.vantages {
        w.write_record([
            row.vantage.region.as_str(),
            row.vantage.isp.as_str(),
            &row.records.to_string(),
            &row.sites.to_string(),
        ])?;
    }
    w.flush()?;

    let manifest = ReportManifest {
        schema: 1,
        run_id: report.run_id.clone(),
        sites: report.sites,
        records_seen: report.records_seen,
        records_used: report.records_used,
        login_domain_mismatches: report.login_domain_mismatches,
        transport_failures: report.transport_failures,
        alpha: report
            .group_comparison
            .as_ref()
            .map_or(ALPHA, |g| g.alpha),
        group_comparison_family_size: report.group_comparison.as_ref().map(|g| g.correction_m),
        files: REPORT_FILES.iter().map(|s| s.to_string()).collect(),
        warnings: report.warnings.clone(),
    };
    let json = serde_json::to_string_pretty(&manifest)?;
    std::fs::write(dir.join("report_manifest.json"), json + "\n")?;
    Ok(())
}

fn write_group_comparison(
    comparison: Option<&GroupComparisonReport>,
    dir: &Path,
) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_path(dir.join("group_comparison.csv"))?;
    let mut pw = csv::Writer::from_path(dir.join("group_comparison_pairwise.csv"))?;
    match comparison {
        Some(report) => {
            let mut header: Vec<String> = vec!["hint".to_string()];
            for group in &report.groups {
                header.push(format!("{group}_with"));
                header.push(format!("{group}_without"));
            }
            header.extend(
                ["chi2", "dof", "p", "p_adjusted", "significant", "skipped_reason"]
                    .map(str::to_string),
            );
            w.write_record(&header)?;
            for test in &report.tests {
                let mut row = vec![test.hint.clone()];
                for &(with, without) in &test.counts {
                    row.push(with.to_string());
                    row.push(without.to_string());
                }
                row.push(fmt_stat(test.chi2));
                row.push(test.dof.to_string());
                row.push(format_p(test.p));
                row.push(format_p(test.p_adjusted));
                row.push(test.significant.to_string());
                row.push(String::new());
                w.write_record(&row)?;
            }
            for skip in &report.skipped {
                let mut row = vec![skip.hint.clone()];
                row.extend(std::iter::repeat_n(String::new(), report.groups.len() * 2 + 5));
                row.push(skip.reason.clone());
                w.write_record(&row)?;
            }

            pw.write_record([
                "hint",
                "group_a",
                "group_b",
                "chi2",
                "p",
                "p_adjusted",
                "significant",
            ])?;
            for pair in &report.pairwise {
                pw.write_record([
                    pair.hint.as_str(),
                    pair.group_a.as_str(),
                    pair.group_b.as_str(),
                    &fmt_stat(pair.chi2),
                    &format_p(pair.p),
                    &format_p(pair.p_adjusted),
                    &pair.significant.to_string(),
                ])?;
            }
        }
        None => {
            w.write_record([
                "hint",
                "chi2",
                "dof",
                "p",
                "p_adjusted",
                "significant",
                "skipped_reason",
            ])?;
            pw.write_record([
                "hint",
                "group_a",
                "group_b",
                "chi2",
                "p",
                "p_adjusted",
                "significant",
            ])?;
        }
    }
    w.flush()?;
    pw.flush()?;
    Ok(())
}
