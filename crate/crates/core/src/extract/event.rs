use serde::{Deserialize, Serialize};

use crate::env::StateView;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    GameLog,
    TaskName,
    UiPrompt,
    StateDiff,
}

impl SourceKind {
    pub const ALL: [SourceKind; 4] = [
        SourceKind::GameLog,
        SourceKind::TaskName,
        SourceKind::UiPrompt,
        SourceKind::StateDiff,
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateDiff {
    pub before: StateView,
    pub after: StateView,
}

impl StateDiff {
    /// Items whose count went up, with the increase.
    pub fn gained(&self) -> Vec<(String, u32)> {
        self.after
            .inventory
            .iter()
            .filter_map(|(k, &v)| {
                let b = self.before.inventory.get(k).copied().unwrap_or(0);
                (v > b).then(|| (k.clone(), v - b))
            })
            .collect()
    }

    /// Items whose count went down, with the decrease.
    pub fn lost(&self) -> Vec<(String, u32)> {
        self.before
            .inventory
            .iter()
            .filter_map(|(k, &b)| {
                let v = self.after.inventory.get(k).copied().unwrap_or(0);
                (b > v).then(|| (k.clone(), b - v))
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogEvent {
    pub source: SourceKind,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_index: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diff: Option<StateDiff>,
}

impl LogEvent {
    pub fn new(source: SourceKind, text: impl Into<String>) -> Self {
        LogEvent {
            source,
            text: text.into(),
            step_index: None,
            diff: None,
        }
    }

    pub fn game(text: impl Into<String>) -> Self {
        Self::new(SourceKind::GameLog, text)
    }

    pub fn task(name: impl Into<String>) -> Self {
        Self::new(SourceKind::TaskName, name)
    }

    pub fn ui(text: impl Into<String>) -> Self {
        Self::new(SourceKind::UiPrompt, text)
    }

    pub fn state_diff(before: StateView, after: StateView) -> Self {
        LogEvent {
            source: SourceKind::StateDiff,
            text: "inventory changed".into(),
            step_index: None,
            diff: Some(StateDiff { before, after }),
        }
    }
}
