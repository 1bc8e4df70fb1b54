//! Versioned rule tables and the update patch registry.
//!
//! A shipped version's rules are the base table plus every shipped update
//! patch applied in order. Tables and patches are data files.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::EnvError;
use crate::kg::normalize_name;
use crate::pipeline::UpdateLog;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Location {
    pub name: String,
    /// Atomic steps needed to arrive.
    #[serde(default = "one")]
    pub travel: u32,
}

fn one() -> u32 {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecipeVerb {
    Chop,
    Cook,
    Plate,
    Craft,
    Smelt,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recipe {
    pub verb: RecipeVerb,
    pub inputs: Vec<String>,
    pub output: String,
    #[serde(default = "one")]
    pub count: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockRule {
    pub location: String,
    pub drops: String,
    #[serde(default = "one")]
    pub count: u32,
    /// Tools able to break the block; empty means bare hands work.
    #[serde(default)]
    pub tools: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MobRule {
    pub location: String,
    #[serde(default)]
    pub drops: Option<String>,
    #[serde(default = "one")]
    pub count: u32,
    /// Weapons able to defeat the mob; empty means bare hands work.
    #[serde(default)]
    pub weapons: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rewards {
    pub step: f64,
    #[serde(default)]
    pub processed: f64,
    #[serde(default)]
    pub dish: f64,
    #[serde(default)]
    pub wrong_submission: f64,
    #[serde(default)]
    pub key_component: f64,
    #[serde(default)]
    pub task: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleTable {
    pub version: String,
    pub start: String,
    pub locations: Vec<Location>,
    /// Location → items that can be picked up there.
    #[serde(default)]
    pub sources: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    pub recipes: Vec<Recipe>,
    #[serde(default)]
    pub blocks: BTreeMap<String, BlockRule>,
    #[serde(default)]
    pub mobs: BTreeMap<String, MobRule>,
    #[serde(default)]
    pub fuel: Vec<String>,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default)]
    pub flags: BTreeMap<String, bool>,
    pub rewards: Rewards,
}

impl RuleTable {
    pub fn param(&self, name: &str, default: f64) -> f64 {
        self.params.get(name).copied().unwrap_or(default)
    }

    pub fn flag(&self, name: &str) -> bool {
        self.flags.get(name).copied().unwrap_or(false)
    }

    pub fn location(&self, name: &str) -> Option<&Location> {
        self.locations.iter().find(|l| l.name == name)
    }

    pub fn recipe_for(&self, verb: RecipeVerb, output: &str) -> Option<&Recipe> {
        self.recipes.iter().find(|r| r.verb == verb && r.output == output)
    }

    pub fn recipes_by(&self, verb: RecipeVerb) -> impl Iterator<Item = &Recipe> {
        self.recipes.iter().filter(move |r| r.verb == verb)
    }

    /// Every item name the table can produce or hand out.
    pub fn items(&self) -> BTreeSet<String> {
        let mut out: BTreeSet<String> = self.sources.values().flatten().cloned().collect();
        for r in &self.recipes {
            out.insert(r.output.clone());
            out.extend(r.inputs.iter().cloned());
        }
        out.extend(self.blocks.values().map(|b| b.drops.clone()));
        out.extend(self.mobs.values().filter_map(|m| m.drops.clone()));
        out
    }

    fn apply_op(&mut self, op: &PatchOp) -> Result<(), String> {
        match op {
            PatchOp::SetParam { name, value } => {
                self.params.insert(name.clone(), *value);
            }
            PatchOp::SetFlag { name, value } => {
                self.flags.insert(name.clone(), *value);
            }
            PatchOp::AddRecipe { recipe } => {
                if self.recipe_for(recipe.verb, &recipe.output).is_some() {
                    return Err(format!("recipe for `{}` already exists", recipe.output));
                }
                self.recipes.push(recipe.clone());
            }
            PatchOp::SetRecipeCount { verb, output, count } => {
                let r = self
                    .recipes
                    .iter_mut()
                    .find(|r| r.verb == *verb && &r.output == output)
                    .ok_or_else(|| format!("no recipe for `{output}`"))?;
                r.count = *count;
            }
            PatchOp::AddSource { location, item } => {
                let list = self.sources.entry(location.clone()).or_default();
                if !list.contains(item) {
                    list.push(item.clone());
                }
            }
            PatchOp::AddBlockTool { block, tool } => {
                let b = self
                    .blocks
                    .get_mut(block)
                    .ok_or_else(|| format!("no block `{block}`"))?;
                if !b.tools.contains(tool) {
                    b.tools.push(tool.clone());
                }
            }
            PatchOp::AddToolAllBlocks { tool } => {
                for b in self.blocks.values_mut() {
                    if !b.tools.is_empty() && !b.tools.contains(tool) {
                        b.tools.push(tool.clone());
                    }
                }
            }
            PatchOp::AddMob { name, rule } => {
                if self.mobs.insert(name.clone(), rule.clone()).is_some() {
                    return Err(format!("mob `{name}` already exists"));
                }
            }
            PatchOp::SetMobDrop { mob, drops, count } => {
                let m = self
                    .mobs
                    .get_mut(mob)
                    .ok_or_else(|| format!("no mob `{mob}`"))?;
                m.drops = Some(drops.clone());
                m.count = *count;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum PatchOp {
    SetParam { name: String, value: f64 },
    SetFlag { name: String, value: bool },
    AddRecipe { recipe: Recipe },
    SetRecipeCount { verb: RecipeVerb, output: String, count: u32 },
    AddSource { location: String, item: String },
    AddBlockTool { block: String, tool: String },
    AddToolAllBlocks { tool: String },
    AddMob { name: String, rule: MobRule },
    SetMobDrop { mob: String, drops: String, #[serde(default = "one")] count: u32 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PatchEntry {
    pub entry: String,
    #[serde(default)]
    pub ops: Vec<PatchOp>,
}

/// Entry-text digest → rule patch.
#[derive(Debug, Clone, Default)]
pub struct PatchRegistry {
    patches: BTreeMap<String, PatchEntry>,
}

pub fn entry_digest(text: &str) -> String {
    hex::encode(Sha256::digest(normalize_name(text).as_bytes()))
}

impl PatchRegistry {
    pub fn from_entries(entries: Vec<PatchEntry>) -> Self {
        let patches = entries
            .into_iter()
            .map(|p| (entry_digest(&p.entry), p))
            .collect();
        Self { patches }
    }

    pub fn get(&self, entry_text: &str) -> Option<&PatchEntry> {
        self.patches.get(&entry_digest(entry_text))
    }

    pub fn len(&self) -> usize {
        self.patches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patches.is_empty()
    }
}

/// Derives the next version's rule table by applying each entry's patch.
pub fn apply_update(
    rules: &RuleTable,
    log: &UpdateLog,
    registry: &PatchRegistry,
) -> Result<RuleTable, EnvError> {
    let mut next = rules.clone();
    for entry in &log.entries {
        let patch = registry
            .get(&entry.text)
            .ok_or_else(|| EnvError::UnknownEntry(entry.text.clone()))?;
        for op in &patch.ops {
            next.apply_op(op)
                .map_err(|msg| EnvError::BadPatch(format!("{}: {msg}", entry.text)))?;
        }
    }
    next.version = log.to_version.clone();
    Ok(next)
}

/// All shipped versions of one environment.
#[derive(Debug, Clone)]
pub struct Rulebook {
    tables: BTreeMap<String, Arc<RuleTable>>,
    chain: Vec<String>,
}

impl Rulebook {
    pub fn build(
        base: RuleTable,
        updates: &[UpdateLog],
        registry: &PatchRegistry,
    ) -> Result<Self, EnvError> {
        let mut chain = vec![base.version.clone()];
        let mut tables = BTreeMap::new();
        let mut current = base;
        tables.insert(current.version.clone(), Arc::new(current.clone()));
        for log in updates {
            if log.from_version != current.version {
                return Err(EnvError::BadPatch(format!(
                    "update {} -> {} does not chain from {}",
                    log.from_version, log.to_version, current.version
                )));
            }
            if tables.contains_key(&log.to_version) {
                return Err(EnvError::BadPatch(format!(
                    "version {} already present",
                    log.to_version
                )));
            }
            current = apply_update(&current, log, registry)?;
            chain.push(current.version.clone());
            tables.insert(current.version.clone(), Arc::new(current.clone()));
        }
        Ok(Self { tables, chain })
    }

    pub fn get(&self, version: &str) -> Result<Arc<RuleTable>, EnvError> {
        self.tables
            .get(version)
            .cloned()
            .ok_or_else(|| EnvError::UnknownVersion(version.to_string()))
    }

    /// Versions in release order.
    pub fn chain(&self) -> &[String] {
        &self.chain
    }
}
