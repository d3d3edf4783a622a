//! `hintscan discover`: find each site's login page and write a target list
//! the `scan` subcommand consumes.

use std::path::{Path, PathBuf};

use clap::Args;
use hintscan_core::{discover_login, DiscoveryOptions, HttpPageFetcher, NoSearch};
use serde::Serialize;
use url::Url;

use crate::commands::{ensure_output_parent, parse_resolve_flags, write_manifest};
use crate::{resources, CliError, Ctx};

#[derive(Debug, Args)]
#[command(about = "Discover login pages for a list of ranked domains")]
pub struct DiscoverArgs {
    /// Input CSV with lines `rank,domain[,start-url]`. The start URL
    /// defaults to `https://<domain>/`.
    #[arg(long, value_name = "FILE")]
    pub input: PathBuf,

    /// Output CSV of targets: `rank,domain,start-url,login-url` (login-url
    /// empty when nothing qualified). A JSON manifest is written next to it.
    #[arg(long, value_name = "FILE")]
    pub output: PathBuf,

    /// Path probed on each site origin.
    #[arg(long, default_value = "/login")]
    pub probe_path: String,

    /// Cap on candidates collected per source.
    #[arg(long)]
    pub candidate_cap: Option<usize>,

    /// Allow plain-http start URLs and candidates (testbed use only).
    #[arg(long)]
    pub allow_http: bool,

    /// Route a host at a fixed address, as `host=ip:port`. Repeatable.
    #[arg(long, value_name = "HOST=ADDR")]
    pub resolve: Vec<String>,
}

/// One input line of the domain list.
struct DomainLine {
    rank: Option<u64>,
    domain: String,
    start_url: Url,
}

/// Per-domain result recorded in the manifest.
#[derive(Debug, Serialize)]
struct DomainOutcome {
    rank: Option<u64>,
    domain: String,
    start_url: String,
    login_url: Option<String>,
    score: Option<i32>,
    source: Option<String>,
    candidates: usize,
    notes: Vec<String>,
    error: Option<String>,
}

#[derive(Debug, Serialize)]
struct DiscoverManifest {
    schema: u32,
    input: String,
    output: String,
    probe_path: String,
    candidate_cap: Option<usize>,
    allow_http: bool,
    resolve: Vec<String>,
    timeout_secs: u64,
    redirect_cap: usize,
    user_agent: String,
    domains: usize,
    discovered: usize,
    failed: usize,
    outcomes: Vec<DomainOutcome>,
}

fn parse_input(path: &Path) -> Result<Vec<DomainLine>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read input {}: {e}", path.display())))?;
    let mut lines = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.splitn(3, ',').map(str::trim);
        let rank_field = fields.next().unwrap_or_default();
        let rank = if rank_field.is_empty() {
            None
        } else {
            Some(rank_field.parse::<u64>().map_err(|_| {
                CliError::Usage(format!(
                    "{} line {}: rank `{rank_field}` is not a number",
                    path.display(),
                    idx + 1
                ))
            })?)
        };
        let domain = fields
            .next()
            .filter(|d| !d.is_empty())
            .ok_or_else(|| {
                CliError::Usage(format!(
                    "{} line {}: expected `rank,domain`",
                    path.display(),
                    idx + 1
                ))
            })?
            .to_string();
        let start_url = match fields.next().filter(|u| !u.is_empty()) {
            Some(explicit) => Url::parse(explicit).map_err(|e| {
                CliError::Usage(format!(
                    "{} line {}: start url `{explicit}`: {e}",
                    path.display(),
                    idx + 1
                ))
            })?,
            None => Url::parse(&format!("https://{domain}/")).map_err(|e| {
                CliError::Usage(format!(
                    "{} line {}: domain `{domain}` does not form a URL: {e}",
                    path.display(),
                    idx + 1
                ))
            })?,
        };
        lines.push(DomainLine {
            rank,
            domain,
            start_url,
        });
    }
    Ok(lines)
}

pub fn run(ctx: &Ctx, args: DiscoverArgs) -> Result<(), CliError> {
    // Validate everything before touching the output path: a usage error
    // must not leave partial output behind.
    let domains = parse_input(&args.input)?;
    ensure_output_parent(&args.output)?;
    let resolve = parse_resolve_flags(&args.resolve)?;
    let res = resources::load(&ctx.config)?;
    let profile_name = ctx.config.profile.as_deref().unwrap_or("chrome-116-desktop");
    let profile = res
        .profiles
        .get(profile_name)
        .map_err(|e| CliError::Usage(e.to_string()))?;

    let fetcher = HttpPageFetcher::new(
        ctx.timeout(),
        ctx.redirect_cap(),
        args.allow_http,
        &profile.user_agent,
        &resolve,
    )
    .map_err(CliError::runtime)?;
    let opts = DiscoveryOptions {
        candidate_cap: args.candidate_cap,
        allow_http: args.allow_http,
        probe_path: args.probe_path.clone(),
    };

    let runtime = tokio::runtime::Runtime::new().map_err(CliError::runtime)?;
    let mut outcomes = Vec::with_capacity(domains.len());
    for line in &domains {
        // Domains are processed in input order, one at a time: discovery is
        // polite by construction, and all crawl concurrency lives in `scan`.
        let result = runtime.block_on(discover_login(
            &line.start_url,
            &fetcher,
            Some(&NoSearch),
            &res.indicators,
            &opts,
        ));
        let outcome = match result {
            Ok(found) => DomainOutcome {
                rank: line.rank,
                domain: line.domain.clone(),
                start_url: line.start_url.to_string(),
                login_url: found.best.as_ref().map(|c| c.url.to_string()),
                score: found.best.as_ref().map(|c| c.score),
                source: found.best.as_ref().map(|c| c.source.to_string()),
                candidates: found.candidates.len(),
                notes: found.notes,
                error: None,
            },
            Err(e) => DomainOutcome {
                rank: line.rank,
                domain: line.domain.clone(),
                start_url: line.start_url.to_string(),
                login_url: None,
                score: None,
                source: None,
                candidates: 0,
                notes: Vec::new(),
                error: Some(e.to_string()),
            },
        };
        outcomes.push(outcome);
    }

    let mut w = csv::Writer::from_path(&args.output).map_err(CliError::runtime)?;
    for o in &outcomes {
        w.write_record([
            o.rank.map(|r| r.to_string()).unwrap_or_default().as_str(),
            o.domain.as_str(),
            o.start_url.as_str(),
            o.login_url.as_deref().unwrap_or(""),
        ])
        .map_err(CliError::runtime)?;
    }
    w.flush().map_err(CliError::runtime)?;

    let discovered = outcomes.iter().filter(|o| o.login_url.is_some()).count();
    let failed = outcomes.iter().filter(|o| o.error.is_some()).count();
    for o in outcomes.iter().filter(|o| o.error.is_some()) {
        eprintln!(
            "discover: {}: {}",
            o.domain,
            o.error.as_deref().unwrap_or_default()
        );
    }
    let manifest = DiscoverManifest {
        schema: 1,
        input: args.input.display().to_string(),
        output: args.output.display().to_string(),
        probe_path: args.probe_path,
        candidate_cap: args.candidate_cap,
        allow_http: args.allow_http,
        resolve: args.resolve,
        timeout_secs: ctx.timeout().as_secs(),
        redirect_cap: ctx.redirect_cap(),
        user_agent: profile.user_agent.clone(),
        domains: outcomes.len(),
        discovered,
        failed,
        outcomes,
    };
    write_manifest(&manifest_path(&args.output), &manifest)?;
    eprintln!(
        "discover: {} domains, {discovered} login pages found, {failed} failures",
        manifest.domains
    );
    Ok(())
}

fn manifest_path(output: &Path) -> PathBuf {
    output.with_extension("manifest.json")
}
