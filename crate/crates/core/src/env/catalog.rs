//! Task, element and bug catalogs plus the shipped data files.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::rules::{PatchEntry, PatchRegistry, RuleTable, Rulebook};
use super::{Action, BugSpec, EnvError, EnvName, StateView};
use crate::pipeline::{parse_update_log, UpdateLog};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Difficulty {
    BasicCollection,
    IntermediateCrafting,
    AdvancedCombat,
    Tier1,
    Tier2,
    Tier3,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Goal {
    Serve(String),
    Obtain(String),
    Defeat(String),
}

impl Goal {
    pub fn target(&self) -> &str {
        match self {
            Goal::Serve(x) | Goal::Obtain(x) | Goal::Defeat(x) => x,
        }
    }

    pub fn satisfied(&self, view: &StateView) -> bool {
        match self {
            Goal::Serve(d) => view.status_count(&format!("served:{d}")) > 0,
            Goal::Obtain(i) => view.count(i) > 0,
            Goal::Defeat(m) => view.status_count(&format!("defeated:{m}")) > 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub id: String,
    pub name: String,
    pub difficulty: Difficulty,
    pub goal: Goal,
    pub key_components: Vec<String>,
    /// Reference command sequence that completes the task on the base version.
    pub walkthrough: Vec<Action>,
}

#[derive(Debug, Clone, Deserialize)]
struct ElementsFile {
    elements: Vec<String>,
    update_elements: BTreeMap<u8, Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub env: EnvName,
    pub tasks: usize,
    pub difficulty_levels: usize,
    pub bugs: usize,
    pub update_elements: usize,
    pub updates: usize,
}

#[derive(Debug, Clone)]
pub struct Catalog {
    pub env: EnvName,
    pub tasks: Vec<TaskSpec>,
    pub bugs: Vec<BugSpec>,
    pub elements: BTreeSet<String>,
    /// Update number (1-based) → elements that update touches.
    pub update_elements: BTreeMap<u8, Vec<String>>,
    pub updates: Vec<UpdateLog>,
    pub base_rules: RuleTable,
    pub patches: Vec<PatchEntry>,
    pub manifest: Manifest,
}

struct Files {
    rules: &'static str,
    patches: &'static str,
    tasks: &'static str,
    bugs: &'static str,
    elements: &'static str,
    manifest: &'static str,
    updates: [&'static str; 3],
}

fn files(env: EnvName) -> Files {
    match env {
        EnvName::OvercookedLite => Files {
            rules: include_str!("../../data/overcooked/rules.json"),
            patches: include_str!("../../data/overcooked/patches.json"),
            tasks: include_str!("../../data/overcooked/tasks.json"),
            bugs: include_str!("../../data/overcooked/bugs.json"),
            elements: include_str!("../../data/overcooked/elements.json"),
            manifest: include_str!("../../data/overcooked/manifest.json"),
            updates: [
                include_str!("../../data/overcooked/updates/1.md"),
                include_str!("../../data/overcooked/updates/2.md"),
                include_str!("../../data/overcooked/updates/3.md"),
            ],
        },
        EnvName::Craftworld => Files {
            rules: include_str!("../../data/craftworld/rules.json"),
            patches: include_str!("../../data/craftworld/patches.json"),
            tasks: include_str!("../../data/craftworld/tasks.json"),
            bugs: include_str!("../../data/craftworld/bugs.json"),
            elements: include_str!("../../data/craftworld/elements.json"),
            manifest: include_str!("../../data/craftworld/manifest.json"),
            updates: [
                include_str!("../../data/craftworld/updates/1.md"),
                include_str!("../../data/craftworld/updates/2.md"),
                include_str!("../../data/craftworld/updates/3.md"),
            ],
        },
    }
}

fn json<T: serde::de::DeserializeOwned>(what: &str, text: &str) -> Result<T, EnvError> {
    serde_json::from_str(text).map_err(|e| EnvError::Catalog(format!("{what}: {e}")))
}

impl Catalog {
    pub fn shipped(env: EnvName) -> Result<Self, EnvError> {
        let f = files(env);
        let updates = f
            .updates
            .iter()
            .map(|t| parse_update_log(t).map_err(|e| EnvError::Catalog(e.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        let elements: ElementsFile = json("elements", f.elements)?;
        let mut bugs: Vec<BugSpec> = json("bugs", f.bugs)?;
        for b in &mut bugs {
            let log = updates
                .get(usize::from(b.update).wrapping_sub(1))
                .ok_or_else(|| EnvError::Catalog(format!("bug {} names unknown update {}", b.id, b.update)))?;
            if b.entry >= log.entries.len() {
                return Err(EnvError::Catalog(format!("bug {} names unknown entry {}", b.id, b.entry)));
            }
            b.version = log.to_version.clone();
        }
        let cat = Catalog {
            env,
            tasks: json("tasks", f.tasks)?,
            bugs,
            elements: elements.elements.into_iter().collect(),
            update_elements: elements.update_elements,
            updates,
            base_rules: json("rules", f.rules)?,
            patches: json("patches", f.patches)?,
            manifest: json("manifest", f.manifest)?,
        };
        cat.check_manifest()?;
        Ok(cat)
    }

    fn check_manifest(&self) -> Result<(), EnvError> {
        let m = &self.manifest;
        let levels: BTreeSet<Difficulty> = self.tasks.iter().map(|t| t.difficulty).collect();
        let distinct_update: BTreeSet<&String> = self.update_elements.values().flatten().collect();
        let checks = [
            ("env", usize::from(m.env == self.env), 1),
            ("tasks", self.tasks.len(), m.tasks),
            ("difficulty levels", levels.len(), m.difficulty_levels),
            ("bugs", self.bugs.len(), m.bugs),
            ("update elements", distinct_update.len(), m.update_elements),
            ("updates", self.updates.len(), m.updates),
        ];
        for (what, got, want) in checks {
            if got != want {
                return Err(EnvError::Catalog(format!("manifest declares {want} {what}, data has {got}")));
            }
        }
        if let Some(e) = distinct_update.iter().find(|e| !self.elements.contains(e.as_str())) {
            return Err(EnvError::Catalog(format!("update element `{e}` is not cataloged")));
        }
        Ok(())
    }

    pub fn build_rulebook(&self) -> Result<Rulebook, EnvError> {
        let registry = PatchRegistry::from_entries(self.patches.clone());
        Rulebook::build(self.base_rules.clone(), &self.updates, &registry)
    }

    pub fn is_element(&self, name: &str) -> bool {
        self.elements.contains(name)
    }

    /// Distinct elements touched by any update.
    pub fn all_update_elements(&self) -> BTreeSet<String> {
        self.update_elements.values().flatten().cloned().collect()
    }

    pub fn update_elements_for(&self, update: u8) -> BTreeSet<String> {
        self.update_elements
            .get(&update)
            .map(|v| v.iter().cloned().collect())
            .unwrap_or_default()
    }

    pub fn bugs_for_update(&self, update: u8) -> Vec<BugSpec> {
        self.bugs.iter().filter(|b| b.update == update).cloned().collect()
    }

    pub fn task(&self, id: &str) -> Option<&TaskSpec> {
        self.tasks.iter().find(|t| t.id == id)
    }

    /// Task whose lowercased display name equals `name`.
    pub fn task_by_name(&self, name: &str) -> Option<&TaskSpec> {
        let n = crate::kg::normalize_name(name);
        self.tasks.iter().find(|t| t.name.to_lowercase() == n)
    }
}
