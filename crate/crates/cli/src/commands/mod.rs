pub mod analyze;
pub mod discover;
pub mod emulate;
pub mod ingest;
pub mod report;
pub mod scan;

use std::net::SocketAddr;

use crate::CliError;

/// Parse repeated `--resolve host=ip:port` overrides (testbed affordance
/// mirroring `curl --resolve`).
pub fn parse_resolve_flags(flags: &[String]) -> Result<Vec<(String, SocketAddr)>, CliError> {
    flags
        .iter()
        .map(|flag| {
            let (host, addr) = flag.split_once('=').ok_or_else(|| {
                CliError::Usage(format!("--resolve expects host=ip:port, got `{flag}`"))
            })?;
            let addr: SocketAddr = addr.parse().map_err(|e| {
                CliError::Usage(format!("--resolve `{flag}`: {e}"))
            })?;
            Ok((host.to_string(), addr))
        })
        .collect()
}

/// Fail before any work happens when an output file cannot possibly be
/// created, so usage errors never leave partial output.
pub fn ensure_output_parent(path: &std::path::Path) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() && !parent.is_dir() {
            return Err(CliError::Usage(format!(
                "output directory {} does not exist",
                parent.display()
            )));
        }
    }
    Ok(())
}

/// Write a subcommand manifest: the full effective configuration needed to
/// reproduce the run, as pretty JSON.
pub fn write_manifest<T: serde::Serialize>(
    path: &std::path::Path,
    manifest: &T,
) -> Result<(), CliError> {
    let json = serde_json::to_string_pretty(manifest).map_err(CliError::runtime)?;
    std::fs::write(path, json + "\n").map_err(CliError::runtime)
}
