//! Deterministic versioned simulators: Overcooked-lite and Craftworld.

mod action;
pub mod bugs;
pub mod catalog;
mod craftworld;
mod overcooked;
pub mod rules;
mod state;
pub mod trace;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use action::Action;
pub use bugs::{flag_bugs, BugSpec, Predicate};
pub use catalog::{Catalog, Difficulty, Goal, TaskSpec};
pub use rules::{apply_update, PatchRegistry, RuleTable, Rulebook};
pub use state::{EnvState, StateView};
pub use trace::{RunTrace, StepRecord};

use crate::extract::LogEvent;
use crate::pipeline::canonical_version;

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("unknown version `{0}`")]
    UnknownVersion(String),
    #[error("update entry has no shipped patch: `{0}`")]
    UnknownEntry(String),
    #[error("bad rule patch: {0}")]
    BadPatch(String),
    #[error("unknown environment `{0}`")]
    UnknownEnv(String),
    #[error("cannot parse action `{0}`")]
    BadAction(String),
    #[error("catalog error: {0}")]
    Catalog(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvName {
    OvercookedLite,
    Craftworld,
}

impl EnvName {
    pub const ALL: [EnvName; 2] = [EnvName::OvercookedLite, EnvName::Craftworld];

    pub fn as_str(self) -> &'static str {
        match self {
            EnvName::OvercookedLite => "overcooked_lite",
            EnvName::Craftworld => "craftworld",
        }
    }

    /// Verbs that take an argument, and those that take none.
    pub fn verbs(self) -> &'static [&'static str] {
        match self {
            EnvName::OvercookedLite => &["move", "pick_up", "chop", "cook", "plate", "submit"],
            EnvName::Craftworld => &["mine", "craft", "smelt", "attack", "move_to"],
        }
    }

    pub fn verb_takes_arg(self, verb: &str) -> bool {
        !matches!(
            (self, verb),
            (EnvName::OvercookedLite, "chop" | "cook" | "plate" | "submit")
        )
    }
}

impl fmt::Display for EnvName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EnvName {
    type Err = EnvError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "overcooked_lite" | "overcooked" => Ok(EnvName::OvercookedLite),
            "craftworld" | "minecraft" => Ok(EnvName::Craftworld),
            other => Err(EnvError::UnknownEnv(other.to_string())),
        }
    }
}

/// Result of one atomic step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub reward: f64,
    pub events: Vec<LogEvent>,
    /// Cataloged elements this step touched.
    pub elements: BTreeSet<String>,
    pub valid: bool,
    pub done: bool,
}

/// Scratch record built by the per-environment step functions.
#[derive(Debug, Default)]
pub(crate) struct StepScratch {
    pub reward: f64,
    pub events: Vec<LogEvent>,
    pub touched: Vec<String>,
    pub valid: bool,
}

impl StepScratch {
    pub fn event(&mut self, text: impl Into<String>) {
        self.events.push(LogEvent::game(text));
    }

    pub fn touch(&mut self, name: &str) {
        self.touched.push(name.to_string());
    }

    pub fn invalid(&mut self, action: &Action, why: &str) {
        self.valid = false;
        self.event(format!("invalid action {action}: {why}"));
    }
}

/// One simulator with all its shipped versions and catalogs.
#[derive(Debug, Clone)]
pub struct Environment {
    pub name: EnvName,
    pub rulebook: Rulebook,
    pub catalog: Arc<Catalog>,
}

impl Environment {
    /// Loads the shipped data files for `name`.
    pub fn load(name: EnvName) -> Result<Self, EnvError> {
        let catalog = Catalog::shipped(name)?;
        let rulebook = catalog.build_rulebook()?;
        Ok(Self {
            name,
            rulebook,
            catalog: Arc::new(catalog),
        })
    }

    pub fn versions(&self) -> &[String] {
        self.rulebook.chain()
    }

    pub fn base_version(&self) -> &str {
        &self.rulebook.chain()[0]
    }

    pub fn rules(&self, version: &str) -> Result<Arc<RuleTable>, EnvError> {
        self.rulebook.get(&canonical_version(version))
    }

    pub fn reset(&self, version: &str, seed: u64) -> Result<EnvState, EnvError> {
        let rules = self.rules(version)?;
        Ok(EnvState::new(rules, seed))
    }

    pub fn parse_action(&self, token: &str) -> Result<Action, EnvError> {
        let a: Action = token.parse()?;
        if !self.name.verbs().contains(&a.verb.as_str()) {
            return Err(EnvError::BadAction(token.to_string()));
        }
        if self.name.verb_takes_arg(&a.verb) != a.arg.is_some() {
            return Err(EnvError::BadAction(token.to_string()));
        }
        Ok(a)
    }

    /// Every command token with parameters drawn from the version's catalogs.
    pub fn vocabulary(&self, version: &str) -> Result<Vec<Action>, EnvError> {
        let rules = self.rules(version)?;
        Ok(match self.name {
            EnvName::OvercookedLite => overcooked::vocabulary(&rules),
            EnvName::Craftworld => craftworld::vocabulary(&rules),
        })
    }

    /// Splits a command into the atomic steps needed from `state`.
    pub fn expand(&self, state: &EnvState, action: &Action) -> Vec<Action> {
        match self.name {
            EnvName::OvercookedLite => overcooked::expand(state, action),
            EnvName::Craftworld => craftworld::expand(state, action),
        }
    }

    /// Applies one atomic step.
    pub fn step(&self, state: &mut EnvState, action: &Action) -> StepOutcome {
        let before = state.view.clone();
        let mut s = StepScratch {
            valid: true,
            ..Default::default()
        };
        s.reward += state.rules.rewards.step;
        if let Some(arg) = &action.arg {
            s.touch(arg);
        }
        match self.name {
            EnvName::OvercookedLite => overcooked::step(state, action, &mut s),
            EnvName::Craftworld => craftworld::step(state, action, &mut s),
        }
        self.award_progress(state, &mut s);
        if state.view.inventory != before.inventory {
            s.events.push(LogEvent::state_diff(before, state.view.clone()));
        }
        state.step += 1;
        for e in &mut s.events {
            e.step_index = Some(state.step);
        }
        let elements = s
            .touched
            .iter()
            .filter(|t| self.catalog.is_element(t))
            .cloned()
            .collect();
        StepOutcome {
            reward: s.reward,
            events: s.events,
            elements,
            valid: s.valid,
            done: false,
        }
    }

    /// Key-component and task rewards, each paid once per episode.
    fn award_progress(&self, state: &mut EnvState, s: &mut StepScratch) {
        let rewards = state.rules.rewards.clone();
        if rewards.key_component != 0.0 {
            let mut fresh: Vec<String> = Vec::new();
            for task in &self.catalog.tasks {
                for k in &task.key_components {
                    if state.view.count(k) > 0 && !state.view.statuses.contains_key(&format!("claimed:{k}")) && !fresh.contains(k) {
                        fresh.push(k.clone());
                    }
                }
            }
            fresh.sort();
            for k in fresh {
                state.view.statuses.insert(format!("claimed:{k}"), "1".into());
                s.reward += rewards.key_component;
                s.event(format!("reward: key component {k}"));
            }
        }
        for task in &self.catalog.tasks {
            for k in &task.key_components {
                let key = format!("progress:{}:{k}", task.id);
                if state.view.count(k) > 0 && !state.view.statuses.contains_key(&key) {
                    state.view.statuses.insert(key, "1".into());
                    s.event(format!("task progress: {} needs {k}", task.name.to_lowercase()));
                }
            }
        }
        if rewards.task != 0.0 {
            for task in &self.catalog.tasks {
                let key = format!("task:{}", task.id);
                if !state.view.statuses.contains_key(&key) && task.goal.satisfied(&state.view) {
                    state.view.statuses.insert(key, "done".into());
                    s.reward += rewards.task;
                    s.event(format!("reward: task completed {}", task.name.to_lowercase()));
                }
            }
        }
    }
}

#[cfg(test)]
mod tests;
