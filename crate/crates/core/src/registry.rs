//! Client hint registry: the catalog of known `Accept-CH` tokens, their
//! privacy level of detail, functional group, and standardization status,
//! plus the parser that turns raw `Accept-CH` header values into classified
//! hint sets.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Bundled registry table. Operators can override it with a CSV file of the
/// same shape via [`Registry::from_csv_path`].
const BUILTIN_REGISTRY_CSV: &str = include_str!("../data/ch_registry.csv");

/// Ordinal privacy level of detail a hint exposes. The order of the variants
/// defines the ordering used everywhere (`VeryLow < Low < Medium < High <
/// VeryHigh`); never reorder them.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "kebab-case")]
pub enum HintLevel {
    VeryLow,
    Low,
    Medium,
    High,
    VeryHigh,
}

impl HintLevel {
    /// All levels in ascending order.
    pub const ALL: [HintLevel; 5] = [
        HintLevel::VeryLow,
        HintLevel::Low,
        HintLevel::Medium,
        HintLevel::High,
        HintLevel::VeryHigh,
    ];

    /// Position on the ordinal scale, starting at 0 for `VeryLow`.
    pub fn ordinal(self) -> u8 {
        match self {
            HintLevel::VeryLow => 0,
            HintLevel::Low => 1,
            HintLevel::Medium => 2,
            HintLevel::High => 3,
            HintLevel::VeryHigh => 4,
        }
    }

    /// Kebab-case label used in data files and reports.
    pub fn as_str(self) -> &'static str {
        match self {
            HintLevel::VeryLow => "very-low",
            HintLevel::Low => "low",
            HintLevel::Medium => "medium",
            HintLevel::High => "high",
            HintLevel::VeryHigh => "very-high",
        }
    }
}

impl fmt::Display for HintLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for HintLevel {
    type Err = RegistryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace(' ', "-").as_str() {
            "very-low" => Ok(HintLevel::VeryLow),
            "low" => Ok(HintLevel::Low),
            "medium" => Ok(HintLevel::Medium),
            "high" => Ok(HintLevel::High),
            "very-high" => Ok(HintLevel::VeryHigh),
            other => Err(RegistryError::BadField {
                field: "level",
                value: other.to_string(),
            }),
        }
    }
}

/// Functional group a hint belongs to.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "kebab-case")]
pub enum HintGroup {
    UserAgent,
    UserPreferenceMedia,
    DeviceInformation,
    Network,
}

impl HintGroup {
    pub fn as_str(self) -> &'static str {
        match self {
            HintGroup::UserAgent => "user-agent",
            HintGroup::UserPreferenceMedia => "user-preference-media",
            HintGroup::DeviceInformation => "device-information",
            HintGroup::Network => "network",
        }
    }
}

impl fmt::Display for HintGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for HintGroup {
    type Err = RegistryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "user-agent" => Ok(HintGroup::UserAgent),
            "user-preference-media" => Ok(HintGroup::UserPreferenceMedia),
            "device-information" => Ok(HintGroup::DeviceInformation),
            "network" => Ok(HintGroup::Network),
            other => Err(RegistryError::BadField {
                field: "group",
                value: other.to_string(),
            }),
        }
    }
}

/// Standardization status of a hint.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "kebab-case")]
pub enum HintStatus {
    Valid,
    Experimental,
    Deprecated,
}

impl HintStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            HintStatus::Valid => "valid",
            HintStatus::Experimental => "experimental",
            HintStatus::Deprecated => "deprecated",
        }
    }
}

impl fmt::Display for HintStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for HintStatus {
    type Err = RegistryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "valid" => Ok(HintStatus::Valid),
            "experimental" => Ok(HintStatus::Experimental),
            "deprecated" => Ok(HintStatus::Deprecated),
            other => Err(RegistryError::BadField {
                field: "status",
                value: other.to_string(),
            }),
        }
    }
}

/// One registry entry: a known client hint header.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HintDescriptor {
    /// Canonical header name, e.g. `Sec-CH-UA-Platform-Version`.
    pub header_name: String,
    /// Human-readable name used in reports, e.g. `OS (High Entropy)`.
    pub friendly_name: String,
    pub group: HintGroup,
    pub level: HintLevel,
    pub status: HintStatus,
}

/// Controls which statuses count as "valid" when deciding whether a site
/// requests client hints. Valid and experimental hints always count;
/// deprecated hints count by default because widely deployed servers still
/// request them, but the flag allows a strict reading.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountingPolicy {
    pub deprecated_counts_as_valid: bool,
}

impl Default for CountingPolicy {
    fn default() -> Self {
        CountingPolicy {
            deprecated_counts_as_valid: true,
        }
    }
}

impl CountingPolicy {
    /// Strict policy: deprecated hints do not count as valid.
    pub fn strict() -> Self {
        CountingPolicy {
            deprecated_counts_as_valid: false,
        }
    }

    pub fn counts(self, status: HintStatus) -> bool {
        match status {
            HintStatus::Valid | HintStatus::Experimental => true,
            HintStatus::Deprecated => self.deprecated_counts_as_valid,
        }
    }
}

/// Result of classifying a single `Accept-CH` token.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification<'a> {
    /// Token names a registry hint; `counts_as_valid` reflects the policy.
    Recognized {
        descriptor: &'a HintDescriptor,
        counts_as_valid: bool,
    },
    /// Token does not name any known hint (a misspelling or junk value).
    NotValid,
}

impl Classification<'_> {
    pub fn counts_as_valid(&self) -> bool {
        matches!(
            self,
            Classification::Recognized {
                counts_as_valid: true,
                ..
            }
        )
    }
}

/// Outcome of parsing one or more raw `Accept-CH` header values.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ParsedAcceptCh {
    /// Canonical names of recognized hints, deduplicated.
    pub recognized: BTreeSet<String>,
    /// Tokens that match no registry entry, in first-seen order with the
    /// original casing preserved; deduplicated case-insensitively.
    pub unrecognized: Vec<String>,
    /// The raw header values as received, in order.
    pub raw: Vec<String>,
}

impl ParsedAcceptCh {
    pub fn is_empty(&self) -> bool {
        self.recognized.is_empty() && self.unrecognized.is_empty()
    }

    /// Recognized hints that count as valid under `policy`.
    pub fn counted_valid<'a>(
        &'a self,
        registry: &Registry,
        policy: CountingPolicy,
    ) -> BTreeSet<&'a str> {
        self.recognized
            .iter()
            .filter(|name| {
                registry
                    .lookup(name)
                    .is_some_and(|d| policy.counts(d.status))
            })
            .map(|s| s.as_str())
            .collect()
    }

    /// True if at least one recognized hint counts as valid under `policy`.
    pub fn any_counted_valid(&self, registry: &Registry, policy: CountingPolicy) -> bool {
        self.recognized.iter().any(|name| {
            registry
                .lookup(name)
                .is_some_and(|d| policy.counts(d.status))
        })
    }
}

/// Errors raised while loading a registry table.
#[derive(Debug, thiserror::Error)]
pub enum RegistryError {
    #[error("failed to read registry file: {0}")]
    Io(#[from] std::io::Error),
    #[error("registry CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("registry row {row}: bad {field} value `{value}`")]
    BadRow {
        row: usize,
        field: &'static str,
        value: String,
    },
    #[error("bad {field} value `{value}`")]
    BadField { field: &'static str, value: String },
    #[error("duplicate header name `{0}` (names are case-insensitive)")]
    DuplicateHeader(String),
    #[error("registry table is empty")]
    Empty,
}

/// The hint registry: an ordered table of descriptors with a case-insensitive
/// name index.
#[derive(Debug, Clone)]
pub struct Registry {
    descriptors: Vec<HintDescriptor>,
    by_lower: HashMap<String, usize>,
}

impl Registry {
    /// Load the bundled registry table.
    ///
    /// Panics only if the bundled CSV is corrupt, which the test suite rules
    /// out.
    pub fn builtin() -> Registry {
        Registry::from_csv_reader(BUILTIN_REGISTRY_CSV.as_bytes())
            .expect("bundled registry CSV must parse")
    }

    /// Load a registry from a CSV file with the columns
    /// `header_name,friendly_name,group,level,status`.
    pub fn from_csv_path(path: &Path) -> Result<Registry, RegistryError> {
        let file = std::fs::File::open(path)?;
        Registry::from_csv_reader(file)
    }

    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Registry, RegistryError> {
        let mut csv_reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut descriptors = Vec::new();
        let mut by_lower = HashMap::new();
        for (idx, result) in csv_reader.deserialize::<RawRow>().enumerate() {
            let row = result?;
            let descriptor = row.into_descriptor(idx + 2)?;
            let key = descriptor.header_name.to_ascii_lowercase();
            if by_lower.contains_key(&key) {
                return Err(RegistryError::DuplicateHeader(descriptor.header_name));
            }
            by_lower.insert(key, descriptors.len());
            descriptors.push(descriptor);
        }
        if descriptors.is_empty() {
            return Err(RegistryError::Empty);
        }
        Ok(Registry {
            descriptors,
            by_lower,
        })
    }

    /// All descriptors in table order.
    pub fn descriptors(&self) -> &[HintDescriptor] {
        &self.descriptors
    }

    /// Case-insensitive lookup by header name.
    pub fn lookup(&self, token: &str) -> Option<&HintDescriptor> {
        self.by_lower
            .get(&token.trim().to_ascii_lowercase())
            .map(|&i| &self.descriptors[i])
    }

    /// Look up a descriptor by its friendly name (exact match).
    pub fn lookup_friendly(&self, friendly: &str) -> Option<&HintDescriptor> {
        self.descriptors
            .iter()
            .find(|d| d.friendly_name == friendly)
    }

    /// Classify a single token under the given counting policy.
    pub fn classify<'a>(&'a self, token: &str, policy: CountingPolicy) -> Classification<'a> {
        match self.lookup(token) {
            Some(descriptor) => Classification::Recognized {
                descriptor,
                counts_as_valid: policy.counts(descriptor.status),
            },
            None => Classification::NotValid,
        }
    }

    /// Parse one or more raw `Accept-CH` header values into a classified set.
    ///
    /// Tokens are comma-separated, surrounding whitespace is ignored, empty
    /// tokens are dropped, and matching is case-insensitive. Recognized
    /// tokens collapse onto their canonical header names; unrecognized tokens
    /// are kept verbatim (first casing wins) for misspelling reports.
    /// Parsing is idempotent: feeding the recognized names back in yields the
    /// same recognized set.
    pub fn parse_accept_ch<S: AsRef<str>>(&self, header_values: &[S]) -> ParsedAcceptCh {
        let mut parsed = ParsedAcceptCh::default();
        let mut seen_unrecognized: BTreeSet<String> = BTreeSet::new();
        for value in header_values {
            let value = value.as_ref();
            parsed.raw.push(value.to_string());
            for token in value.split(',') {
                let token = token.trim();
                if token.is_empty() {
                    continue;
                }
                match self.lookup(token) {
                    Some(descriptor) => {
                        parsed.recognized.insert(descriptor.header_name.clone());
                    }
                    None => {
                        if seen_unrecognized.insert(token.to_ascii_lowercase()) {
                            parsed.unrecognized.push(token.to_string());
                        }
                    }
                }
            }
        }
        parsed
    }

    /// Highest level of detail among the named hints, ignoring names that are
    /// not in the registry. `None` when nothing matches.
    pub fn max_level<I, S>(&self, names: I) -> Option<HintLevel>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        names
            .into_iter()
            .filter_map(|name| self.lookup(name.as_ref()).map(|d| d.level))
            .max()
    }

    /// Canonical names of hints that count as valid under `policy`.
    pub fn valid_hint_names(&self, policy: CountingPolicy) -> Vec<&str> {
        self.descriptors
            .iter()
            .filter(|d| policy.counts(d.status))
            .map(|d| d.header_name.as_str())
            .collect()
    }
}

/// Highest level of detail among a set of descriptors; `None` for an empty
/// set.
pub fn max_level<'a, I>(descriptors: I) -> Option<HintLevel>
where
    I: IntoIterator<Item = &'a HintDescriptor>,
{
    descriptors.into_iter().map(|d| d.level).max()
}

#[derive(Debug, Deserialize)]
struct RawRow {
    header_name: String,
    friendly_name: String,
    group: String,
    level: String,
    status: String,
}

impl RawRow {
    fn into_descriptor(self, row: usize) -> Result<HintDescriptor, RegistryError> {
        let bad = |field: &'static str, value: &str| RegistryError::BadRow {
            row,
            field,
            value: value.to_string(),
        };
        if self.header_name.is_empty() {
            return Err(bad("header_name", ""));
        }
        Ok(HintDescriptor {
            group: self.group.parse().map_err(|_| bad("group", &self.group))?,
            level: self.level.parse().map_err(|_| bad("level", &self.level))?,
            status: self
                .status
                .parse()
                .map_err(|_| bad("status", &self.status))?,
            header_name: self.header_name,
            friendly_name: self.friendly_name,
        })
    }
}
