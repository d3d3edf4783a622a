//! Browser behavior emulation: which client hints a given browser build
//! sends by default, which it will honor when a server requests them via
//! `Accept-CH`, and the per-origin grant cache that models how real browsers
//! remember those requests within a session.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::registry::ParsedAcceptCh;

const BUILTIN_PROFILES: &str = include_str!("../data/browser_profiles.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Platform {
    Desktop,
    Ios,
    Android,
}

/// One browser build: its client hint support set, the low-entropy hints it
/// sends unprompted, and the concrete header values it would emit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BrowserProfile {
    pub name: String,
    pub browser: String,
    pub version: String,
    pub platform: Platform,
    pub user_agent: String,
    /// Hints this build will send when granted. Browsers without client hint
    /// support have an empty set and never emit a hint header.
    pub supported: BTreeSet<String>,
    /// Hints sent on every request without needing a grant; always a subset
    /// of `supported`.
    pub default_low_entropy: BTreeSet<String>,
    /// Header value emitted for each supported hint.
    pub values: BTreeMap<String, String>,
}

#[derive(Debug, thiserror::Error)]
pub enum EmulatorError {
    #[error("failed to read profile file: {0}")]
    Io(#[from] std::io::Error),
    #[error("profile JSON error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unknown profile `{name}`; available: {available}")]
    UnknownProfile { name: String, available: String },
    #[error("profile `{profile}`: {problem}")]
    InvalidProfile { profile: String, problem: String },
    #[error("profile `{profile}` has no value for granted hint `{hint}`")]
    ValueGap { profile: String, hint: String },
}

#[derive(Debug, Deserialize)]
struct ProfileFile {
    #[allow(dead_code)]
    schema: u32,
    #[serde(default)]
    aliases: BTreeMap<String, String>,
    profiles: Vec<BrowserProfile>,
}

/// The full set of emulated browser builds, with alias resolution
/// (`chrome-desktop` for `chrome-116-desktop`, and so on).
#[derive(Debug, Clone)]
pub struct ProfileSet {
    profiles: Vec<BrowserProfile>,
    by_name: HashMap<String, usize>,
    aliases: BTreeMap<String, String>,
}

impl ProfileSet {
    pub fn builtin() -> ProfileSet {
        ProfileSet::from_json(BUILTIN_PROFILES).expect("bundled profiles must parse")
    }

    pub fn from_json(text: &str) -> Result<ProfileSet, EmulatorError> {
        let file: ProfileFile = serde_json::from_str(text)?;
        let mut by_name = HashMap::new();
        for (i, profile) in file.profiles.iter().enumerate() {
            validate_profile(profile)?;
            if by_name.insert(profile.name.clone(), i).is_some() {
                return Err(EmulatorError::InvalidProfile {
                    profile: profile.name.clone(),
                    problem: "duplicate profile name".to_string(),
                });
            }
        }
        for (alias, target) in &file.aliases {
            if !by_name.contains_key(target) {
                return Err(EmulatorError::InvalidProfile {
                    profile: alias.clone(),
                    problem: format!("alias points at unknown profile `{target}`"),
                });
            }
        }
        Ok(ProfileSet {
            profiles: file.profiles,
            by_name,
            aliases: file.aliases,
        })
    }

    pub fn from_path(path: &Path) -> Result<ProfileSet, EmulatorError> {
        ProfileSet::from_json(&std::fs::read_to_string(path)?)
    }

    /// Look up a profile by name or alias.
    pub fn get(&self, name: &str) -> Result<&BrowserProfile, EmulatorError> {
        let resolved = self.aliases.get(name).map(String::as_str).unwrap_or(name);
        self.by_name
            .get(resolved)
            .map(|&i| &self.profiles[i])
            .ok_or_else(|| EmulatorError::UnknownProfile {
                name: name.to_string(),
                available: self.names().join(", "),
            })
    }

    pub fn names(&self) -> Vec<&str> {
        self.profiles.iter().map(|p| p.name.as_str()).collect()
    }

    pub fn profiles(&self) -> &[BrowserProfile] {
        &self.profiles
    }

    pub fn aliases(&self) -> &BTreeMap<String, String> {
        &self.aliases
    }
}

fn validate_profile(profile: &BrowserProfile) -> Result<(), EmulatorError> {
    let invalid = |problem: String| EmulatorError::InvalidProfile {
        profile: profile.name.clone(),
        problem,
    };
    for hint in &profile.default_low_entropy {
        if !profile.supported.contains(hint) {
            return Err(invalid(format!(
                "default hint `{hint}` is not in the supported set"
            )));
        }
    }
    for hint in profile.values.keys() {
        if !profile.supported.contains(hint) {
            return Err(invalid(format!(
                "value table covers unsupported hint `{hint}`"
            )));
        }
    }
    for hint in &profile.supported {
        if !profile.values.contains_key(hint) {
            return Err(invalid(format!(
                "supported hint `{hint}` has no value table entry"
            )));
        }
    }
    Ok(())
}

static NEXT_SESSION_ID: AtomicU64 = AtomicU64::new(1);

/// Per-origin `Accept-CH` grants within one browsing session.
///
/// Mirrors browser behavior: a response's `Accept-CH` header *replaces* the
/// stored grant set for that origin (it does not accumulate), grants never
/// leak across origins, and a fresh session starts empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrantCache {
    session_id: u64,
    grants: HashMap<String, BTreeSet<String>>,
}

impl Default for GrantCache {
    fn default() -> Self {
        GrantCache::new()
    }
}

impl GrantCache {
    pub fn new() -> GrantCache {
        GrantCache {
            session_id: NEXT_SESSION_ID.fetch_add(1, Ordering::Relaxed),
            grants: HashMap::new(),
        }
    }

    pub fn session_id(&self) -> u64 {
        self.session_id
    }

    pub fn is_empty(&self) -> bool {
        self.grants.is_empty()
    }

    /// Grants currently stored for an origin.
    pub fn grants_for(&self, origin: &str) -> Option<&BTreeSet<String>> {
        self.grants.get(origin)
    }

    /// Discard all grants and start a new session.
    pub fn reset_session(&mut self) {
        self.grants.clear();
        self.session_id = NEXT_SESSION_ID.fetch_add(1, Ordering::Relaxed);
    }
}

/// Record an `Accept-CH` response header from `origin`: the origin's grant
/// set becomes exactly the recognized hints the profile supports. Hints the
/// browser does not support are ignored; a repeat header with fewer hints
/// shrinks the grant set accordingly.
pub fn receive_accept_ch(
    profile: &BrowserProfile,
    cache: &mut GrantCache,
    origin: &str,
    parsed: &ParsedAcceptCh,
) {
    let granted: BTreeSet<String> = parsed
        .recognized
        .iter()
        .filter(|hint| profile.supported.contains(*hint))
        .cloned()
        .collect();
    cache.grants.insert(origin.to_string(), granted);
}

/// Compute the client hint headers the profile would attach to a request to
/// `origin`: the default low-entropy hints plus whatever that origin has
/// been granted this session. Browsers without client hint support return an
/// empty map.
pub fn request_headers(
    profile: &BrowserProfile,
    cache: &GrantCache,
    origin: &str,
) -> Result<BTreeMap<String, String>, EmulatorError> {
    let mut names: BTreeSet<&String> = profile.default_low_entropy.iter().collect();
    if let Some(grants) = cache.grants.get(origin) {
        names.extend(grants.iter());
    }
    let mut headers = BTreeMap::new();
    for name in names {
        let value = profile
            .values
            .get(name)
            .ok_or_else(|| EmulatorError::ValueGap {
                profile: profile.name.clone(),
                hint: name.clone(),
            })?;
        headers.insert(name.clone(), value.clone());
    }
    Ok(headers)
}

/// The scheme://host[:port] origin string for a URL, used as the grant cache
/// key.
pub fn origin_of(url: &url::Url) -> String {
    url.origin().ascii_serialization()
}
