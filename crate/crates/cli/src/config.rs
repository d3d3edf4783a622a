//! Layered run configuration: command-line flags override `HINTSCAN_*`
//! environment variables, which override the TOML config file, which
//! overrides built-in defaults.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::CliError;

/// Keys an operator can pin in a config file. Every field is optional; the
/// effective value of a setting is resolved per subcommand.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Significance level for group comparisons. Must lie in (0, 1).
    pub alpha: Option<f64>,
    /// Default output format: table, csv, or jsonl.
    pub format: Option<String>,
    /// Seed for randomized orderings.
    pub seed: Option<u64>,
    pub run_id: Option<String>,
    /// Browser profile emulated by `scan` and `emulate`.
    pub profile: Option<String>,
    pub concurrency: Option<usize>,
    /// Aggregate download cap in bytes per second.
    pub rate_limit: Option<u64>,
    pub timeout_secs: Option<u64>,
    pub redirect_cap: Option<usize>,
    pub vantage_region: Option<String>,
    pub vantage_isp: Option<String>,
    /// Hint registry CSV; the built-in registry when unset.
    pub registry: Option<PathBuf>,
    /// Login indicator word list; built-in when unset.
    pub indicators: Option<PathBuf>,
    /// Tracker filter rules; tracker attribution is skipped when unset.
    pub filters: Option<PathBuf>,
    /// Public suffix snapshot; built-in when unset.
    pub suffixes: Option<PathBuf>,
    /// Browser profile set JSON; built-in when unset.
    pub profiles: Option<PathBuf>,
}

impl RunConfig {
    /// Load the file (when given), then apply environment overrides and
    /// validate. A missing or malformed file is a usage error.
    pub fn load(path: Option<&Path>) -> Result<RunConfig, CliError> {
        let mut config = match path {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    CliError::Usage(format!("cannot read config {}: {e}", path.display()))
                })?;
                toml::from_str(&text).map_err(|e| {
                    CliError::Usage(format!("config {}: {e}", path.display()))
                })?
            }
            None => RunConfig::default(),
        };
        config.apply_env()?;
        config.validate()?;
        Ok(config)
    }

    /// `HINTSCAN_<KEY>` environment variables override file values key for
    /// key.
    fn apply_env(&mut self) -> Result<(), CliError> {
        fn parsed<T: std::str::FromStr>(key: &str) -> Result<Option<T>, CliError>
        where
            T::Err: std::fmt::Display,
        {
            match std::env::var(key) {
                Ok(raw) => raw
                    .parse()
                    .map(Some)
                    .map_err(|e| CliError::Usage(format!("{key}: {e}"))),
                Err(_) => Ok(None),
            }
        }
        fn path(key: &str) -> Option<PathBuf> {
            std::env::var_os(key).map(PathBuf::from)
        }

        if let Some(v) = parsed("HINTSCAN_ALPHA")? {
            self.alpha = Some(v);
        }
        if let Some(v) = parsed("HINTSCAN_FORMAT")? {
            self.format = Some(v);
        }
        if let Some(v) = parsed("HINTSCAN_SEED")? {
            self.seed = Some(v);
        }
        if let Some(v) = parsed("HINTSCAN_RUN_ID")? {
            self.run_id = Some(v);
        }
        if let Some(v) = parsed("HINTSCAN_PROFILE")? {
            self.profile = Some(v);
        }
        if let Some(v) = parsed("HINTSCAN_CONCURRENCY")? {
            self.concurrency = Some(v);
        }
        if let Some(v) = parsed("HINTSCAN_RATE_LIMIT")? {
            self.rate_limit = Some(v);
        }
        if let Some(v) = parsed("HINTSCAN_TIMEOUT_SECS")? {
            self.timeout_secs = Some(v);
        }
        if let Some(v) = parsed("HINTSCAN_REDIRECT_CAP")? {
            self.redirect_cap = Some(v);
        }
        if let Some(v) = parsed("HINTSCAN_VANTAGE_REGION")? {
            self.vantage_region = Some(v);
        }
        if let Some(v) = parsed("HINTSCAN_VANTAGE_ISP")? {
            self.vantage_isp = Some(v);
        }
        if let Some(v) = path("HINTSCAN_REGISTRY") {
            self.registry = Some(v);
        }
        if let Some(v) = path("HINTSCAN_INDICATORS") {
            self.indicators = Some(v);
        }
        if let Some(v) = path("HINTSCAN_FILTERS") {
            self.filters = Some(v);
        }
        if let Some(v) = path("HINTSCAN_SUFFIXES") {
            self.suffixes = Some(v);
        }
        if let Some(v) = path("HINTSCAN_PROFILES") {
            self.profiles = Some(v);
        }
        Ok(())
    }

    /// Startup invariants: alpha in range, every referenced file present.
    fn validate(&self) -> Result<(), CliError> {
        if let Some(alpha) = self.alpha {
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(CliError::Usage(format!(
                    "alpha must lie strictly between 0 and 1, got {alpha}"
                )));
            }
        }
        for (name, path) in [
            ("registry", &self.registry),
            ("indicators", &self.indicators),
            ("filters", &self.filters),
            ("suffixes", &self.suffixes),
            ("profiles", &self.profiles),
        ] {
            if let Some(path) = path {
                if !path.exists() {
                    return Err(CliError::Usage(format!(
                        "{name} file {} does not exist",
                        path.display()
                    )));
                }
            }
        }
        Ok(())
    }
}
