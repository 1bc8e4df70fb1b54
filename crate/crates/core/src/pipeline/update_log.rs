//! Markdown update-log parsing.

use std::fmt;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::PipelineError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EntryCategory {
    Feature,
    BugFix,
    Improvement,
}

impl fmt::Display for EntryCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EntryCategory::Feature => "Feature",
            EntryCategory::BugFix => "BugFix",
            EntryCategory::Improvement => "Improvement",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UpdateEntry {
    pub category: EntryCategory,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UpdateLog {
    pub from_version: String,
    pub to_version: String,
    pub entries: Vec<UpdateEntry>,
    /// Original document, kept for prompt rendering.
    #[serde(skip)]
    pub source: String,
}

/// Canonical version id: a leading `v` is dropped.
pub fn canonical_version(v: &str) -> String {
    let v = v.trim();
    v.strip_prefix('v')
        .or_else(|| v.strip_prefix('V'))
        .unwrap_or(v)
        .to_string()
}

fn section_category(title: &str) -> Option<EntryCategory> {
    let t = title.trim().to_ascii_lowercase();
    match t.as_str() {
        "features" | "feature" | "new features" => Some(EntryCategory::Feature),
        "bug fixes" | "bugfixes" | "bug fix" | "fixes" => Some(EntryCategory::BugFix),
        "improvements" | "improvement" => Some(EntryCategory::Improvement),
        _ => None,
    }
}

pub fn parse_update_log(text: &str) -> Result<UpdateLog, PipelineError> {
    let header = Regex::new(r"^##\s+(\S+)\s*->\s*(\S+)\s*$").expect("static regex");
    let mut versions = None;
    let mut category = EntryCategory::Improvement;
    let mut entries = Vec::new();
    for line in text.lines() {
        let line = line.trim_end();
        if let Some(rest) = line.strip_prefix("###") {
            category = section_category(rest).unwrap_or_else(|| {
                log::warn!("unknown update-log section `{}`, treating as Improvement", rest.trim());
                EntryCategory::Improvement
            });
        } else if let Some(c) = header.captures(line) {
            if versions.is_none() {
                versions = Some((canonical_version(&c[1]), canonical_version(&c[2])));
            }
        } else if let Some(item) = line.trim_start().strip_prefix("- ") {
            let item = item.trim();
            if !item.is_empty() {
                entries.push(UpdateEntry {
                    category,
                    text: item.to_string(),
                });
            }
        }
    }
    let (from_version, to_version) = versions.ok_or(PipelineError::MalformedLog)?;
    if from_version.is_empty() || to_version.is_empty() {
        return Err(PipelineError::MalformedLog);
    }
    Ok(UpdateLog {
        from_version,
        to_version,
        entries,
        source: text.to_string(),
    })
}

impl UpdateLog {
    /// A log with no entries, used for no-op version bumps.
    pub fn empty(from: &str, to: &str) -> Self {
        UpdateLog {
            from_version: canonical_version(from),
            to_version: canonical_version(to),
            entries: Vec::new(),
            source: format!("# Game Update Log\n## v{} -> v{}\n", canonical_version(from), canonical_version(to)),
        }
    }
}
