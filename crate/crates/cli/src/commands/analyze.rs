//! `hintscan analyze`: turn record files plus optional label files into a
//! deterministic report directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::Args;
use hintscan_core::{
    analyze, parse_rank_list_from_path, parse_rba_labels_from_path, read_records, write_report,
    AnalyzeInputs, CategoryProvider, CrawlRecord, NoCategories, OfflineCategoryMap, RbaStatus,
    ALPHA,
};
use serde::Serialize;

use crate::commands::write_manifest;
use crate::{resources, CliError, Ctx};

#[derive(Debug, Args)]
#[command(about = "Analyze crawl records into a report directory")]
pub struct AnalyzeArgs {
    /// Records file (JSON Lines). Repeatable; files are concatenated.
    #[arg(long = "records", value_name = "FILE", required = true)]
    pub records: Vec<PathBuf>,

    /// Report directory (created if missing).
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,

    /// Rank list with lines `rank,domain`.
    #[arg(long, value_name = "FILE")]
    pub ranks: Option<PathBuf>,

    /// Authentication labels with lines `domain,status` (status `rba`,
    /// `no-rba`, or `unknown`).
    #[arg(long, value_name = "FILE")]
    pub rba: Option<PathBuf>,

    /// Category labels with lines `domain,category[,category...]`.
    #[arg(long, value_name = "FILE")]
    pub categories: Option<PathBuf>,

    /// Significance level for group comparisons, in (0, 1).
    #[arg(long)]
    pub alpha: Option<f64>,

    /// Run identifier stamped into the report; defaults to the run id of
    /// the first record.
    #[arg(long)]
    pub run_id: Option<String>,
}

#[derive(Debug, Serialize)]
struct AnalyzeManifest {
    schema: u32,
    records: Vec<String>,
    out: String,
    ranks: Option<String>,
    rba: Option<String>,
    categories: Option<String>,
    alpha: f64,
    run_id: String,
    records_read: usize,
}

/// Open errors are usage problems (the file was never there); content
/// errors — malformed lines, schema mismatches — are hard runtime errors,
/// because a half-trusted dataset must never be silently skipped.
fn read_records_checked(path: &Path) -> Result<Vec<CrawlRecord>, CliError> {
    let file = std::fs::File::open(path)
        .map_err(|e| CliError::Usage(format!("cannot read records {}: {e}", path.display())))?;
    read_records(std::io::BufReader::new(file))
        .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

pub fn run(ctx: &Ctx, args: AnalyzeArgs) -> Result<(), CliError> {
    let alpha = args.alpha.or(ctx.config.alpha).unwrap_or(ALPHA);
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(CliError::Usage(format!(
            "alpha must lie strictly between 0 and 1, got {alpha}"
        )));
    }

    let mut records = Vec::new();
    for path in &args.records {
        records.extend(read_records_checked(path)?);
    }
    let ranks: BTreeMap<String, u64> = match &args.ranks {
        Some(path) => parse_rank_list_from_path(path)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?,
        None => BTreeMap::new(),
    };
    let rba: BTreeMap<String, RbaStatus> = match &args.rba {
        Some(path) => parse_rba_labels_from_path(path)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?,
        None => BTreeMap::new(),
    };
    let categories: Box<dyn CategoryProvider> = match &args.categories {
        Some(path) => Box::new(
            OfflineCategoryMap::from_path(path)
                .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?,
        ),
        None => Box::new(NoCategories),
    };
    let res = resources::load(&ctx.config)?;

    let run_id = args
        .run_id
        .clone()
        .or_else(|| ctx.config.run_id.clone())
        .or_else(|| records.first().map(|r| r.run_id.clone()))
        .unwrap_or_else(|| "analysis-0".to_string());
    let (report, _profiles) = analyze(AnalyzeInputs {
        records: &records,
        registry: &res.registry,
        psl: &res.suffixes,
        filter: res.filters.as_ref(),
        ranks: &ranks,
        rba: &rba,
        categories: categories.as_ref(),
        run_id: run_id.clone(),
        alpha,
    });

    write_report(&report, &args.out).map_err(CliError::runtime)?;
    let json = serde_json::to_string_pretty(&report).map_err(CliError::runtime)?;
    std::fs::write(args.out.join("analysis.json"), json + "\n").map_err(CliError::runtime)?;

    let manifest = AnalyzeManifest {
        schema: 1,
        records: args.records.iter().map(|p| p.display().to_string()).collect(),
        out: args.out.display().to_string(),
        ranks: args.ranks.as_ref().map(|p| p.display().to_string()),
        rba: args.rba.as_ref().map(|p| p.display().to_string()),
        categories: args.categories.as_ref().map(|p| p.display().to_string()),
        alpha,
        run_id,
        records_read: records.len(),
    };
    write_manifest(&args.out.join("analyze_manifest.json"), &manifest)?;
    eprintln!(
        "analyze: {} records over {} sites; report written to {}",
        report.records_seen,
        report.sites,
        args.out.display()
    );
    for warning in &report.warnings {
        eprintln!("analyze: warning: {warning}");
    }
    Ok(())
}
