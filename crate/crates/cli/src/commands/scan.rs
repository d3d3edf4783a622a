//! `hintscan scan`: crawl a target list with cache-isolated sessions and
//! write the resulting records plus the run manifest.

use std::path::{Path, PathBuf};

use std::sync::Arc;

use clap::Args;
use hintscan_core::{
    crawl_batch, write_records_to_path, CrawlConfig, CrawlTarget, PageKind, Vantage,
};
use url::Url;

use crate::commands::{ensure_output_parent, parse_resolve_flags, write_manifest};
use crate::{resources, CliError, Ctx};

/// Aggregate download cap enforced unless the operator asserts permission.
const DEFAULT_RATE_LIMIT: u64 = 625_000;

#[derive(Debug, Args)]
#[command(about = "Crawl targets and record the Accept-CH headers they send")]
pub struct ScanArgs {
    /// Target CSV with lines `rank,domain[,start-url[,login-url]]`, as
    /// written by `discover`. URLs default to `https://<domain>/`.
    #[arg(long, value_name = "FILE")]
    pub input: PathBuf,

    /// Output records file (JSON Lines). The run manifest is written next
    /// to it.
    #[arg(long, value_name = "FILE")]
    pub output: PathBuf,

    /// Number of targets fetched concurrently.
    #[arg(long)]
    pub concurrency: Option<usize>,

    /// Aggregate download cap in bytes per second. Raising it above the
    /// default requires --i-have-permission.
    #[arg(long, value_name = "BYTES_PER_SEC")]
    pub rate_limit: Option<u64>,

    /// Per-fetch timeout in seconds.
    #[arg(long, value_name = "SECS")]
    pub timeout: Option<u64>,

    /// Do not fetch third-party resources referenced by pages.
    #[arg(long)]
    pub no_third_parties: bool,

    /// Cap on third-party fetches per page.
    #[arg(long)]
    pub third_party_cap: Option<usize>,

    /// Vantage region label stored in every record.
    #[arg(long)]
    pub vantage_region: Option<String>,

    /// Vantage ISP label stored in every record.
    #[arg(long)]
    pub vantage_isp: Option<String>,

    /// Run identifier stored in every record.
    #[arg(long)]
    pub run_id: Option<String>,

    /// Browser build to emulate.
    #[arg(long)]
    pub profile: Option<String>,

    /// Maximum redirects followed per fetch.
    #[arg(long)]
    pub redirect_cap: Option<usize>,

    /// Allow plain-http targets (testbed use only; records gain
    /// `insecure_transport`).
    #[arg(long)]
    pub allow_http: bool,

    /// Route a host at a fixed address, as `host=ip:port`. Repeatable.
    #[arg(long, value_name = "HOST=ADDR")]
    pub resolve: Vec<String>,

    /// Assert the targets are yours to load-test: disables the one-request-
    /// per-target budget and unlocks rate limits above the default.
    #[arg(long)]
    pub i_have_permission: bool,

    /// Fixed RFC 3339 timestamp stored in records instead of wall-clock
    /// time, for byte-reproducible datasets.
    #[arg(long, value_name = "RFC3339")]
    pub fixed_timestamp: Option<String>,
}

fn parse_targets(path: &Path) -> Result<Vec<CrawlTarget>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read input {}: {e}", path.display())))?;
    let mut targets = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |msg: String| {
            CliError::Usage(format!("{} line {}: {msg}", path.display(), idx + 1))
        };
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() < 2 {
            return Err(bad("expected `rank,domain`".to_string()));
        }
        let rank = if fields[0].is_empty() {
            None
        } else {
            Some(
                fields[0]
                    .parse::<u64>()
                    .map_err(|_| bad(format!("rank `{}` is not a number", fields[0])))?,
            )
        };
        let domain = fields[1].to_string();
        if domain.is_empty() {
            return Err(bad("domain is empty".to_string()));
        }
        let parse_url = |text: &str| {
            Url::parse(text).map_err(|e| bad(format!("url `{text}`: {e}")))
        };
        let start_url = match fields.get(2).filter(|u| !u.is_empty()) {
            Some(explicit) => parse_url(explicit)?,
            None => parse_url(&format!("https://{domain}/"))?,
        };
        targets.push(CrawlTarget {
            rank,
            domain: domain.clone(),
            url: start_url,
            page_kind: PageKind::Start,
        });
        if let Some(login) = fields.get(3).filter(|u| !u.is_empty()) {
            targets.push(CrawlTarget {
                rank,
                domain,
                url: parse_url(login)?,
                page_kind: PageKind::Login,
            });
        }
    }
    Ok(targets)
}

pub fn run(ctx: &Ctx, args: ScanArgs) -> Result<(), CliError> {
    let targets = parse_targets(&args.input)?;
    ensure_output_parent(&args.output)?;
    let resolve = parse_resolve_flags(&args.resolve)?;

    let rate_limit = args
        .rate_limit
        .or(ctx.config.rate_limit)
        .unwrap_or(DEFAULT_RATE_LIMIT);
    if rate_limit > DEFAULT_RATE_LIMIT && !args.i_have_permission {
        return Err(CliError::Usage(format!(
            "rate limit {rate_limit} exceeds the default {DEFAULT_RATE_LIMIT} B/s; \
             pass --i-have-permission to assert the targets are yours to load-test"
        )));
    }
    let fixed_timestamp = args
        .fixed_timestamp
        .as_deref()
        .map(|text| {
            text.parse::<chrono::DateTime<chrono::Utc>>()
                .map_err(|e| CliError::Usage(format!("--fixed-timestamp `{text}`: {e}")))
        })
        .transpose()?;

    let res = resources::load(&ctx.config)?;
    let profile_name = args
        .profile
        .as_deref()
        .or(ctx.config.profile.as_deref())
        .unwrap_or("chrome-116-desktop");
    let profile = res
        .profiles
        .get(profile_name)
        .map_err(|e| CliError::Usage(e.to_string()))?
        .clone();

    let mut config = CrawlConfig::new(profile);
    config.concurrency = args
        .concurrency
        .or(ctx.config.concurrency)
        .unwrap_or(config.concurrency);
    config.throughput_cap_bytes_per_sec = rate_limit;
    config.order_seed = ctx.seed;
    config.ethics_mode = !args.i_have_permission;
    config.fetch_third_parties = !args.no_third_parties;
    config.timeout = std::time::Duration::from_secs(
        args.timeout.or(ctx.config.timeout_secs).unwrap_or(30),
    );
    config.redirect_cap = args
        .redirect_cap
        .or(ctx.config.redirect_cap)
        .unwrap_or(config.redirect_cap);
    config.allow_http = args.allow_http;
    config.vantage = Vantage {
        region: args
            .vantage_region
            .or_else(|| ctx.config.vantage_region.clone())
            .unwrap_or_else(|| Vantage::default().region),
        isp: args
            .vantage_isp
            .or_else(|| ctx.config.vantage_isp.clone())
            .unwrap_or_else(|| Vantage::default().isp),
    };
    if let Some(run_id) = args.run_id.or_else(|| ctx.config.run_id.clone()) {
        config.run_id = run_id;
    }
    config.resolve_overrides = resolve;
    config.third_party_cap = args.third_party_cap;
    config.fixed_timestamp = fixed_timestamp;
    config
        .validate()
        .map_err(|e| CliError::Usage(e.to_string()))?;

    let registry = Arc::new(res.registry);
    let psl = Arc::new(res.suffixes);
    let runtime = tokio::runtime::Runtime::new().map_err(CliError::runtime)?;
    let (records, manifest) = runtime
        .block_on(async {
            let (mut receiver, driver) =
                crawl_batch(targets, config, Arc::clone(&registry), Arc::clone(&psl))?;
            let mut records = Vec::new();
            while let Some(record) = receiver.recv().await {
                records.push(record);
            }
            let manifest = driver.await.expect("crawl driver never panics");
            Ok::<_, hintscan_core::CrawlError>((records, manifest))
        })
        .map_err(CliError::runtime)?;

    // Canonical record order: workers finish in racy order, so sort before
    // writing to make equal-seed runs byte-comparable, not just multiset-
    // equal.
    let mut records = records;
    records.sort_by(|a, b| {
        (&a.target_domain, a.page_kind, &a.url).cmp(&(&b.target_domain, b.page_kind, &b.url))
    });
    write_records_to_path(&args.output, &records).map_err(CliError::runtime)?;
    write_manifest(&args.output.with_extension("manifest.json"), &manifest)?;
    eprintln!(
        "scan: {} targets in, {} deduped, {} crawled, {} transport errors",
        manifest.targets_input,
        manifest.targets_deduped,
        manifest.targets_crawled,
        manifest.transport_errors
    );
    Ok(())
}
