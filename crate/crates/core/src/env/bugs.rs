//! Injected-bug oracles. Flagging reads a finished trace and never touches
//! execution.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{Action, RunTrace, StateView};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Predicate {
    Has(String),
    Lacks(String),
    CountAtLeast { item: String, n: u32 },
    At(String),
    HeldAtLeast(u32),
    HeldAtMost(u32),
    Served(String),
    Status { key: String, value: String },
}

impl Predicate {
    pub fn holds(&self, v: &StateView) -> bool {
        match self {
            Predicate::Has(i) => v.count(i) > 0,
            Predicate::Lacks(i) => v.count(i) == 0,
            Predicate::CountAtLeast { item, n } => v.count(item) >= *n,
            Predicate::At(l) => v.location == *l,
            Predicate::HeldAtLeast(n) => v.held_total() >= *n,
            Predicate::HeldAtMost(n) => v.held_total() <= *n,
            Predicate::Served(d) => v.status_count(&format!("served:{d}")) > 0,
            Predicate::Status { key, value } => v.status(key) == Some(value.as_str()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BugSpec {
    pub id: String,
    /// 1-based update number the bug is anchored to.
    pub update: u8,
    /// Index of the anchoring entry within that update log.
    pub entry: usize,
    pub description: String,
    /// Present for state-action triggers. A bare verb matches any argument.
    #[serde(default)]
    pub action: Option<Action>,
    pub when: Vec<Predicate>,
    /// Version the bug lives in; filled in from the update log at load.
    #[serde(default)]
    pub version: String,
}

impl BugSpec {
    fn action_matches(&self, taken: &Action) -> bool {
        match &self.action {
            None => false,
            Some(a) => a.verb == taken.verb && (a.arg.is_none() || a.arg == taken.arg),
        }
    }

    fn state_holds(&self, v: &StateView) -> bool {
        self.when.iter().all(|p| p.holds(v))
    }

    /// Whether the trigger fires on a single executed step.
    pub fn fires(&self, pre: &StateView, action: &Action, valid: bool, post: &StateView) -> bool {
        if self.action.is_some() {
            valid && self.action_matches(action) && self.state_holds(pre)
        } else {
            self.state_holds(post)
        }
    }
}

/// Every bug whose trigger fires somewhere in the trace.
pub fn flag_bugs(trace: &RunTrace, bugs: &[BugSpec]) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    let live: Vec<&BugSpec> = bugs.iter().filter(|b| b.version == trace.version).collect();
    let mut pre = &trace.initial;
    for step in &trace.steps {
        for b in &live {
            if !out.contains(&b.id) && b.fires(pre, &step.action, step.valid, &step.state) {
                out.insert(b.id.clone());
            }
        }
        pre = &step.state;
    }
    out
}
