//! Tracker attribution against adblock-style filter lists.
//!
//! Supports the subset of the filter syntax that matters for network-request
//! blocking decisions: domain anchors (`||host^`), plain substring patterns,
//! `*` wildcards, the `^` separator class, and `@@` exception rules.
//! Comments, element-hiding rules, and rules carrying `$` options are skipped
//! and counted, never fatal — published lists are full of syntax this tool
//! does not need.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use url::Url;

use crate::psl::PublicSuffixList;

/// Why a filter line was skipped during parsing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SkipReason {
    Comment,
    ElementHiding,
    UnsupportedOptions,
    UnsupportedSyntax,
}

impl fmt::Display for SkipReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SkipReason::Comment => "comment",
            SkipReason::ElementHiding => "element-hiding rule",
            SkipReason::UnsupportedOptions => "rule with unsupported options",
            SkipReason::UnsupportedSyntax => "unsupported syntax",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedLine {
    pub line: usize,
    pub text: String,
    pub reason: SkipReason,
}

/// Counts from parsing a filter list.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseReport {
    pub loaded: usize,
    pub skipped: Vec<SkippedLine>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleKind {
    /// `||host^rest`: host must be a label-boundary suffix of the URL host,
    /// and `rest` must match immediately after the host.
    DomainAnchor,
    /// Pattern may match anywhere in the URL.
    Substring,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterRule {
    pub kind: RuleKind,
    /// For domain anchors, the anchor host (lowercase).
    pub host: Option<String>,
    /// The pattern remainder (for anchors) or the whole pattern (for
    /// substrings), lowercase, with `*` and `^` metacharacters.
    pub pattern: String,
    pub exception: bool,
    /// The original line, for reporting which rule matched.
    pub raw: String,
}

/// A parsed filter list.
#[derive(Debug, Clone, Default)]
pub struct FilterList {
    rules: Vec<FilterRule>,
    report: ParseReport,
}

/// Verdict for one URL against a filter list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrackerVerdict {
    pub is_tracker: bool,
    /// Registrable domain of the URL host, when it has one.
    pub domain: Option<String>,
    /// First blocking rule that matched, by raw text.
    pub matched_rule: Option<String>,
    /// First exception rule that matched, by raw text.
    pub exception_rule: Option<String>,
}

impl FilterList {
    /// Parse filter list text. Never fails: unusable lines are skipped and
    /// recorded in the parse report.
    pub fn parse(text: &str) -> FilterList {
        let mut list = FilterList::default();
        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            match parse_line(line) {
                Ok(rule) => {
                    list.rules.push(rule);
                    list.report.loaded += 1;
                }
                Err(reason) => list.report.skipped.push(SkippedLine {
                    line: line_no,
                    text: line.to_string(),
                    reason,
                }),
            }
        }
        list
    }

    pub fn from_path(path: &Path) -> std::io::Result<FilterList> {
        Ok(FilterList::parse(&std::fs::read_to_string(path)?))
    }

    /// Parse a list of rule strings (e.g. from a testbed scenario).
    pub fn from_rules<S: AsRef<str>>(rules: &[S]) -> FilterList {
        let joined: Vec<&str> = rules.iter().map(|r| r.as_ref()).collect();
        FilterList::parse(&joined.join("\n"))
    }

    pub fn rules(&self) -> &[FilterRule] {
        &self.rules
    }

    pub fn report(&self) -> &ParseReport {
        &self.report
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// First matching blocking rule and first matching exception rule.
    pub fn match_url(&self, url: &Url) -> (Option<&FilterRule>, Option<&FilterRule>) {
        let url_lower = url.as_str().to_ascii_lowercase();
        let host = url.host_str().map(|h| h.to_ascii_lowercase());
        // Byte offset where the host ends inside the serialized URL,
        // accounting for optional userinfo before it. When the host cannot
        // be located (IP literals with brackets, say), anchor rules simply
        // cannot match.
        let host_end = host.as_deref().and_then(|h| {
            let after_scheme = url.scheme().len() + "://".len();
            let userinfo = if url.username().is_empty() && url.password().is_none() {
                0
            } else {
                url_lower[after_scheme..]
                    .find('@')
                    .map(|i| i + 1)
                    .unwrap_or(0)
            };
            let start = after_scheme + userinfo;
            url_lower[start..]
                .starts_with(h)
                .then_some(start + h.len())
        });
        let mut blocked = None;
        let mut exception = None;
        for rule in &self.rules {
            let slot = if rule.exception {
                &mut exception
            } else {
                &mut blocked
            };
            if slot.is_some() {
                continue;
            }
            if rule_matches(rule, &url_lower, host.as_deref(), host_end) {
                *slot = Some(rule);
            }
            if blocked.is_some() && exception.is_some() {
                break;
            }
        }
        (blocked, exception)
    }
}

/// Decide whether `url` points at a known tracker. Exception (`@@`) rules
/// always win over blocking rules; the boolean outcome is independent of rule
/// order.
pub fn match_tracker(url: &Url, filters: &FilterList, psl: &PublicSuffixList) -> TrackerVerdict {
    let (blocked, exception) = filters.match_url(url);
    TrackerVerdict {
        is_tracker: blocked.is_some() && exception.is_none(),
        domain: url
            .host_str()
            .and_then(|h| psl.registrable_domain(h).ok()),
        matched_rule: blocked.map(|r| r.raw.clone()),
        exception_rule: exception.map(|r| r.raw.clone()),
    }
}

fn parse_line(line: &str) -> Result<FilterRule, SkipReason> {
    if line.starts_with('!') || line.starts_with('[') {
        return Err(SkipReason::Comment);
    }
    if line.contains("##") || line.contains("#@#") || line.contains("#?#") || line.contains("#$#")
    {
        return Err(SkipReason::ElementHiding);
    }
    let (body, exception) = match line.strip_prefix("@@") {
        Some(rest) => (rest, true),
        None => (line, false),
    };
    if body.contains('$') {
        return Err(SkipReason::UnsupportedOptions);
    }
    // Regex rules (`/…/`) and single-pipe start/end anchors are outside the
    // supported subset.
    if body.len() >= 2 && body.starts_with('/') && body.ends_with('/') {
        return Err(SkipReason::UnsupportedSyntax);
    }
    if let Some(rest) = body.strip_prefix("||") {
        let rest_lower = rest.to_ascii_lowercase();
        let host_len = rest_lower
            .find(['^', '/', '*', ':', '?'])
            .unwrap_or(rest_lower.len());
        let (host, pattern) = rest_lower.split_at(host_len);
        if host.is_empty() || !host.contains('.') {
            return Err(SkipReason::UnsupportedSyntax);
        }
        return Ok(FilterRule {
            kind: RuleKind::DomainAnchor,
            host: Some(host.to_string()),
            pattern: pattern.to_string(),
            exception,
            raw: line.to_string(),
        });
    }
    if body.starts_with('|') || body.ends_with('|') {
        return Err(SkipReason::UnsupportedSyntax);
    }
    if body.is_empty() {
        return Err(SkipReason::UnsupportedSyntax);
    }
    Ok(FilterRule {
        kind: RuleKind::Substring,
        host: None,
        pattern: body.to_ascii_lowercase(),
        exception,
        raw: line.to_string(),
    })
}

fn rule_matches(
    rule: &FilterRule,
    url_lower: &str,
    host: Option<&str>,
    host_end: Option<usize>,
) -> bool {
    match rule.kind {
        RuleKind::DomainAnchor => {
            let (Some(host), Some(host_end)) = (host, host_end) else {
                return false;
            };
            let anchor = rule.host.as_deref().expect("anchor rules carry a host");
            let boundary_suffix =
                host == anchor || host.ends_with(&format!(".{anchor}"));
            if !boundary_suffix {
                return false;
            }
            // The rest of the pattern must match starting right after the
            // URL's host.
            match_at(rule.pattern.as_bytes(), url_lower[host_end..].as_bytes())
        }
        RuleKind::Substring => {
            let text = url_lower.as_bytes();
            let pattern = rule.pattern.as_bytes();
            (0..=text.len()).any(|i| match_at(pattern, &text[i..]))
        }
    }
}

/// True if `pattern` matches a prefix of `text`. `*` matches any span, `^`
/// matches a separator character (anything but letters, digits, `_`, `-`,
/// `.`, `%`) or the end of the URL; all other bytes match literally.
fn match_at(pattern: &[u8], text: &[u8]) -> bool {
    match pattern.split_first() {
        None => true,
        Some((b'*', rest)) => (0..=text.len()).any(|k| match_at(rest, &text[k..])),
        Some((b'^', rest)) => match text.split_first() {
            None => match_at(rest, text),
            Some((&c, tail)) => is_separator(c) && match_at(rest, tail),
        },
        Some((&c, rest)) => match text.split_first() {
            Some((&t, tail)) => t == c && match_at(rest, tail),
            None => false,
        },
    }
}

fn is_separator(c: u8) -> bool {
    !(c.is_ascii_alphanumeric() || matches!(c, b'_' | b'-' | b'.' | b'%'))
}
