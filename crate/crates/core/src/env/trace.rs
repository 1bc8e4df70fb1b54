//! Run traces and command execution.

use std::collections::BTreeSet;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{flag_bugs, Action, EnvError, EnvName, EnvState, Environment, StateView};
use crate::extract::LogEvent;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub index: usize,
    /// Which input command this atomic step came from.
    pub command_index: usize,
    pub action: Action,
    pub valid: bool,
    pub reward: f64,
    pub events: Vec<LogEvent>,
    pub elements: BTreeSet<String>,
    pub state_digest: String,
    pub state: StateView,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub env: EnvName,
    pub seed: u64,
    pub version: String,
    pub initial: StateView,
    pub steps: Vec<StepRecord>,
    pub cumulative_reward: f64,
    pub bug_flags: BTreeSet<String>,
    /// Set when the step limit cut the command list short.
    pub truncated: bool,
}

#[derive(Serialize)]
struct TraceHeader<'a> {
    env: EnvName,
    seed: u64,
    version: &'a str,
    steps: usize,
    cumulative_reward: f64,
    bug_flags: &'a BTreeSet<String>,
    truncated: bool,
}

impl RunTrace {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn final_state(&self) -> &StateView {
        self.steps.last().map(|s| &s.state).unwrap_or(&self.initial)
    }

    /// Line-delimited export: one header record, then one record per step.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let header = TraceHeader {
            env: self.env,
            seed: self.seed,
            version: &self.version,
            steps: self.steps.len(),
            cumulative_reward: self.cumulative_reward,
            bug_flags: &self.bug_flags,
            truncated: self.truncated,
        };
        serde_json::to_writer(&mut w, &header)?;
        w.write_all(b"\n")?;
        for s in &self.steps {
            serde_json::to_writer(&mut w, s)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("Vec write");
        String::from_utf8(buf).expect("utf8")
    }

    pub fn events(&self) -> impl Iterator<Item = &LogEvent> {
        self.steps.iter().flat_map(|s| s.events.iter())
    }
}

impl Environment {
    /// Resets and replays `commands`, expanding each into atomic steps, until
    /// the list ends or `max_steps` atomic steps have run.
    pub fn execute(
        &self,
        version: &str,
        seed: u64,
        commands: &[Action],
        max_steps: usize,
    ) -> Result<RunTrace, EnvError> {
        self.execute_with(version, seed, commands, max_steps, true)
    }

    pub fn execute_with(
        &self,
        version: &str,
        seed: u64,
        commands: &[Action],
        max_steps: usize,
        check_bugs: bool,
    ) -> Result<RunTrace, EnvError> {
        let state = self.reset(version, seed)?;
        Ok(self.run_from_state(state, commands, max_steps, check_bugs))
    }

    /// Cumulative reward of `commands` without building a trace.
    pub fn score(&self, version: &str, seed: u64, commands: &[Action], max_steps: usize) -> Result<f64, EnvError> {
        let mut state = self.reset(version, seed)?;
        let mut total = 0.0;
        let mut steps = 0;
        for cmd in commands {
            for atomic in self.expand(&state, cmd) {
                if steps >= max_steps {
                    return Ok(total);
                }
                total += self.step(&mut state, &atomic).reward;
                steps += 1;
            }
        }
        Ok(total)
    }

    /// Replays `commands` from an arbitrary starting state.
    pub fn run_from_state(
        &self,
        mut state: EnvState,
        commands: &[Action],
        max_steps: usize,
        check_bugs: bool,
    ) -> RunTrace {
        let mut trace = RunTrace {
            env: self.name,
            seed: state.seed,
            version: state.version().to_string(),
            initial: state.view.clone(),
            steps: Vec::new(),
            cumulative_reward: 0.0,
            bug_flags: BTreeSet::new(),
            truncated: false,
        };
        'outer: for (ci, cmd) in commands.iter().enumerate() {
            for atomic in self.expand(&state, cmd) {
                if trace.steps.len() >= max_steps {
                    trace.truncated = true;
                    break 'outer;
                }
                let out = self.step(&mut state, &atomic);
                trace.cumulative_reward += out.reward;
                trace.steps.push(StepRecord {
                    index: trace.steps.len(),
                    command_index: ci,
                    action: atomic,
                    valid: out.valid,
                    reward: out.reward,
                    events: out.events,
                    elements: out.elements,
                    state_digest: state.view.digest(),
                    state: state.view.clone(),
                });
            }
        }
        if check_bugs {
            trace.bug_flags = flag_bugs(&trace, &self.catalog.bugs);
        }
        trace
    }
}
