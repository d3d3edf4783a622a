//! `hintscan ingest`: convert a foreign JSONL response archive into crawl
//! records so archived datasets flow through the same analyses as live
//! crawls.

use std::path::PathBuf;

use clap::Args;
use hintscan_core::{
    ingest_archive, write_records_to_path, ArchiveFieldMap, IngestReport, Vantage,
};
use serde::Serialize;

use crate::commands::{ensure_output_parent, write_manifest};
use crate::{resources, CliError, Ctx};

#[derive(Debug, Args)]
#[command(about = "Convert a foreign JSONL response archive into crawl records")]
pub struct IngestArgs {
    /// Archive file: one JSON object per line.
    #[arg(long, value_name = "FILE")]
    pub input: PathBuf,

    /// Output records file (JSON Lines).
    #[arg(long, value_name = "FILE")]
    pub output: PathBuf,

    /// Archive field holding the request URL.
    #[arg(long, default_value = "url")]
    pub url_field: String,

    /// Archive field holding the response time (RFC 3339 or epoch seconds).
    #[arg(long, default_value = "timestamp")]
    pub timestamp_field: String,

    /// Archive field holding the response header object.
    #[arg(long, default_value = "headers")]
    pub headers_field: String,

    /// Header name read inside the header object (case-insensitive).
    #[arg(long, default_value = "accept-ch")]
    pub accept_ch_header: String,

    /// Archive field holding the HTTP status.
    #[arg(long, default_value = "status")]
    pub status_field: String,

    /// Treat every archived response as status 200 instead of reading a
    /// status field.
    #[arg(long)]
    pub no_status_field: bool,

    /// Run identifier stored in every record.
    #[arg(long, default_value = "ingest-0")]
    pub run_id: String,

    /// Vantage region label stored in every record.
    #[arg(long)]
    pub vantage_region: Option<String>,

    /// Vantage ISP label stored in every record.
    #[arg(long)]
    pub vantage_isp: Option<String>,
}

#[derive(Debug, Serialize)]
struct IngestManifest {
    schema: u32,
    input: String,
    output: String,
    field_map: ArchiveFieldMap,
    run_id: String,
    vantage: Vantage,
    report: IngestReport,
}

pub fn run(ctx: &Ctx, args: IngestArgs) -> Result<(), CliError> {
    let file = std::fs::File::open(&args.input)
        .map_err(|e| CliError::Usage(format!("cannot read input {}: {e}", args.input.display())))?;
    ensure_output_parent(&args.output)?;
    let res = resources::load(&ctx.config)?;

    let map = ArchiveFieldMap {
        url: args.url_field.clone(),
        timestamp: args.timestamp_field.clone(),
        headers: args.headers_field.clone(),
        accept_ch_header: args.accept_ch_header.clone(),
        status: (!args.no_status_field).then(|| args.status_field.clone()),
    };
    let vantage = Vantage {
        region: args
            .vantage_region
            .clone()
            .or_else(|| ctx.config.vantage_region.clone())
            .unwrap_or_else(|| Vantage::default().region),
        isp: args
            .vantage_isp
            .clone()
            .or_else(|| ctx.config.vantage_isp.clone())
            .unwrap_or_else(|| Vantage::default().isp),
    };

    let reader = std::io::BufReader::new(file);
    let (records, report) = ingest_archive(
        reader,
        &map,
        &res.registry,
        &res.suffixes,
        &args.run_id,
        &vantage,
    )
    .map_err(CliError::runtime)?;

    write_records_to_path(&args.output, &records).map_err(CliError::runtime)?;
    let manifest = IngestManifest {
        schema: 1,
        input: args.input.display().to_string(),
        output: args.output.display().to_string(),
        field_map: map,
        run_id: args.run_id,
        vantage,
        report: report.clone(),
    };
    write_manifest(&args.output.with_extension("manifest.json"), &manifest)?;
    eprintln!(
        "ingest: {} records written, {} lines skipped",
        report.ingested, report.skipped
    );
    for (reason, count) in &report.reasons {
        eprintln!("ingest:   {count} skipped: {reason}");
    }
    Ok(())
}
