//! Resource loading shared by the subcommands. Every resource falls back to
//! a built-in snapshot when the config does not point at a file.

use hintscan_core::{
    FilterList, IndicatorSet, ProfileSet, PublicSuffixList, Registry,
};

use crate::config::RunConfig;
use crate::CliError;

pub struct Resources {
    pub registry: Registry,
    pub suffixes: PublicSuffixList,
    pub indicators: IndicatorSet,
    pub profiles: ProfileSet,
    /// Only loaded when the config names a filter file.
    pub filters: Option<FilterList>,
}

pub fn load(config: &RunConfig) -> Result<Resources, CliError> {
    let registry = match &config.registry {
        Some(path) => Registry::from_csv_path(path)
            .map_err(|e| CliError::Usage(format!("registry {}: {e}", path.display())))?,
        None => Registry::builtin(),
    };
    let suffixes = match &config.suffixes {
        Some(path) => PublicSuffixList::from_path(path)
            .map_err(|e| CliError::Usage(format!("suffixes {}: {e}", path.display())))?,
        None => PublicSuffixList::builtin().clone(),
    };
    let indicators = match &config.indicators {
        Some(path) => IndicatorSet::from_path(path)
            .map_err(|e| CliError::Usage(format!("indicators {}: {e}", path.display())))?,
        None => IndicatorSet::builtin(),
    };
    let profiles = match &config.profiles {
        Some(path) => ProfileSet::from_path(path)
            .map_err(|e| CliError::Usage(format!("profiles {}: {e}", path.display())))?,
        None => ProfileSet::builtin(),
    };
    let filters = match &config.filters {
        Some(path) => Some(
            FilterList::from_path(path)
                .map_err(|e| CliError::Usage(format!("filters {}: {e}", path.display())))?,
        ),
        None => None,
    };
    Ok(Resources {
        registry,
        suffixes,
        indicators,
        profiles,
        filters,
    })
}
