//! `hintscan report`: re-render a stored analysis without re-reading the
//! records — print any of its tables, or rebuild the CSV directory.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use hintscan_core::{format_p, write_report, AnalysisReport};

use crate::output::Sheet;
use crate::{CliError, Ctx};

#[derive(Debug, Args)]
#[command(about = "Re-render a stored analysis (print a table or rebuild the CSVs)")]
pub struct ReportArgs {
    /// The `analysis.json` written by `analyze` (or the directory holding
    /// it).
    #[arg(long, value_name = "PATH")]
    pub analysis: PathBuf,

    /// Which table to print.
    #[arg(long, value_enum, default_value_t = Table::Summary)]
    pub table: Table,

    /// Rebuild the full CSV report directory here instead of printing.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Table {
    /// Headline numbers for the whole run.
    Summary,
    /// Per-hint adoption counts.
    Frequency,
    /// First-/third-party adoption by rank bucket.
    Adoption,
    /// Start-versus-login hint behavior.
    PageKindDiff,
    /// Adoption by calendar month.
    OverTime,
    /// Interconnection graph nodes.
    GraphNodes,
    /// Interconnection graph edges.
    GraphEdges,
    /// Omnibus group comparison tests.
    GroupComparison,
    /// Pairwise follow-up tests.
    Pairwise,
    /// Unrecognized Accept-CH names.
    Misspellings,
    /// Records and sites per vantage.
    Vantages,
}

fn load_analysis(path: &PathBuf) -> Result<AnalysisReport, CliError> {
    let file = if path.is_dir() {
        path.join("analysis.json")
    } else {
        path.clone()
    };
    let text = std::fs::read_to_string(&file)
        .map_err(|e| CliError::Usage(format!("cannot read analysis {}: {e}", file.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", file.display())))
}

fn pct(v: f64) -> String {
    format!("{v:.4}")
}

fn stat(v: f64) -> String {
    format!("{v:.6}")
}

fn build_sheet(report: &AnalysisReport, table: Table) -> Sheet {
    match table {
        Table::Summary => {
            let mut s = Sheet::new(["metric", "value"]);
            s.row(["run_id", report.run_id.as_str()]);
            s.row(["sites".to_string(), report.sites.to_string()]);
            s.row(["records_seen".to_string(), report.records_seen.to_string()]);
            s.row(["records_used".to_string(), report.records_used.to_string()]);
            s.row([
                "login_domain_mismatches".to_string(),
                report.login_domain_mismatches.to_string(),
            ]);
            s.row([
                "transport_failures".to_string(),
                report.transport_failures.to_string(),
            ]);
            s.row([
                "hints_observed".to_string(),
                report.frequency.len().to_string(),
            ]);
            s.row([
                "unrecognized_names".to_string(),
                report.misspellings.len().to_string(),
            ]);
            s.row(["warnings".to_string(), report.warnings.len().to_string()]);
            s
        }
        Table::Frequency => {
            let mut s = Sheet::new([
                "hint",
                "level",
                "group",
                "sites",
                "pct_of_sites",
                "pct_of_adopters",
            ]);
            for row in &report.frequency {
                s.row([
                    row.hint.clone(),
                    row.level.map(|l| l.as_str().to_string()).unwrap_or_default(),
                    row.group.clone().unwrap_or_default(),
                    row.sites.to_string(),
                    pct(row.pct_of_sites),
                    pct(row.pct_of_adopters),
                ]);
            }
            s
        }
        Table::Adoption => {
            let mut s = Sheet::new([
                "bucket",
                "max_rank",
                "sites",
                "first_party_sites",
                "first_party_pct",
                "third_party_sites",
                "third_party_pct",
            ]);
            for row in &report.adoption_by_rank {
                s.row([
                    row.label.clone(),
                    row.max_rank.map(|r| r.to_string()).unwrap_or_default(),
                    row.sites.to_string(),
                    row.first_party_sites.to_string(),
                    pct(row.first_party_pct),
                    row.third_party_sites.to_string(),
                    pct(row.third_party_pct),
                ]);
            }
            s
        }
        Table::PageKindDiff => {
            let d = &report.page_kind_diff;
            let opt = |v: Option<f64>| v.map(stat).unwrap_or_default();
            let mut s = Sheet::new(["metric", "value"]);
            s.row(["sites_with_both".to_string(), d.sites_with_both.to_string()]);
            s.row(["excluded".to_string(), d.excluded.to_string()]);
            s.row(["identical".to_string(), d.identical.to_string()]);
            s.row(["identical_pct".to_string(), pct(d.identical_pct)]);
            s.row(["differing".to_string(), d.differing.to_string()]);
            s.row([
                "login_silent_among_differing".to_string(),
                d.login_silent_among_differing.to_string(),
            ]);
            s.row([
                "login_silent_among_differing_pct".to_string(),
                pct(d.login_silent_among_differing_pct),
            ]);
            s.row([
                "login_extra_among_differing".to_string(),
                d.login_extra_among_differing.to_string(),
            ]);
            s.row([
                "start_hint_mean".to_string(),
                opt(d.start_hint_stats.map(|t| t.mean)),
            ]);
            s.row([
                "start_hint_median".to_string(),
                opt(d.start_hint_stats.map(|t| t.median)),
            ]);
            s.row([
                "start_hint_sd".to_string(),
                opt(d.start_hint_stats.map(|t| t.sd)),
            ]);
            s.row([
                "login_hint_mean".to_string(),
                opt(d.login_hint_stats.map(|t| t.mean)),
            ]);
            s.row([
                "login_hint_median".to_string(),
                opt(d.login_hint_stats.map(|t| t.median)),
            ]);
            s.row([
                "login_hint_sd".to_string(),
                opt(d.login_hint_stats.map(|t| t.sd)),
            ]);
            s
        }
        Table::OverTime => {
            let mut s = Sheet::new(["month", "sites", "sites_with_ch", "pct"]);
            for row in &report.adoption_over_time {
                s.row([
                    row.month.clone(),
                    row.sites.to_string(),
                    row.sites_with_ch.to_string(),
                    pct(row.pct),
                ]);
            }
            s
        }
        Table::GraphNodes => {
            let mut s = Sheet::new([
                "domain",
                "kind",
                "requests_hints",
                "max_level",
                "degree",
                "tracker",
            ]);
            for node in &report.graph.nodes {
                s.row([
                    node.domain.clone(),
                    node.kind.as_str().to_string(),
                    node.requests_hints.to_string(),
                    node.max_level.map(|l| l.as_str().to_string()).unwrap_or_default(),
                    node.degree.to_string(),
                    node.tracker.to_string(),
                ]);
            }
            s
        }
        Table::GraphEdges => {
            let mut s = Sheet::new(["site", "third_party", "requests_hints"]);
            for edge in &report.graph.edges {
                s.row([
                    edge.site.clone(),
                    edge.third_party.clone(),
                    edge.requests_hints.to_string(),
                ]);
            }
            s
        }
        Table::GroupComparison => {
            let mut s = Sheet::new([
                "hint",
                "counts",
                "chi2",
                "dof",
                "p",
                "p_adjusted",
                "significant",
                "skipped_reason",
            ]);
            if let Some(cmp) = &report.group_comparison {
                for test in &cmp.tests {
                    let counts = cmp
                        .groups
                        .iter()
                        .zip(&test.counts)
                        .map(|(g, (with, without))| format!("{g}:{with}/{without}"))
                        .collect::<Vec<_>>()
                        .join(" ");
                    s.row([
                        test.hint.clone(),
                        counts,
                        stat(test.chi2),
                        test.dof.to_string(),
                        format_p(test.p),
                        format_p(test.p_adjusted),
                        test.significant.to_string(),
                        String::new(),
                    ]);
                }
                for skip in &cmp.skipped {
                    s.row([
                        skip.hint.clone(),
                        String::new(),
                        String::new(),
                        String::new(),
                        String::new(),
                        String::new(),
                        String::new(),
                        skip.reason.clone(),
                    ]);
                }
            }
            s
        }
        Table::Pairwise => {
            let mut s = Sheet::new([
                "hint",
                "group_a",
                "group_b",
                "chi2",
                "p",
                "p_adjusted",
                "significant",
            ]);
            if let Some(cmp) = &report.group_comparison {
                for pair in &cmp.pairwise {
                    s.row([
                        pair.hint.clone(),
                        pair.group_a.clone(),
                        pair.group_b.clone(),
                        stat(pair.chi2),
                        format_p(pair.p),
                        format_p(pair.p_adjusted),
                        pair.significant.to_string(),
                    ]);
                }
            }
            s
        }
        Table::Misspellings => {
            let mut s = Sheet::new(["name", "occurrences", "sites", "probably_meant"]);
            for row in &report.misspellings {
                s.row([
                    row.name.clone(),
                    row.occurrences.to_string(),
                    row.sites.to_string(),
                    row.probably_meant.clone().unwrap_or_default(),
                ]);
            }
            s
        }
        Table::Vantages => {
            let mut s = Sheet::new(["region", "isp", "records", "sites"]);
            for row in &report.vantages {
                s.row([
                    row.vantage.region.clone(),
                    row.vantage.isp.clone(),
                    row.records.to_string(),
                    row.sites.to_string(),
                ]);
            }
            s
        }
    }
}

pub fn run(ctx: &Ctx, args: ReportArgs) -> Result<(), CliError> {
    let report = load_analysis(&args.analysis)?;
    match &args.out {
        Some(dir) => {
            write_report(&report, dir).map_err(CliError::runtime)?;
            eprintln!("report: CSV directory rebuilt at {}", dir.display());
            Ok(())
        }
        None => build_sheet(&report, args.table).print(ctx.format),
    }
}
