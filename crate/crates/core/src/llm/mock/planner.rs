//! Rule-backed stand-in for the test generator.
//!
//! Reads an impact description, chains backwards through the production
//! facts it lists to reach the task goal, then adds probes for any target
//! element the route did not reach. Without listed facts it can only try
//! actions that name something mentioned in the entry or task.

use std::collections::{BTreeMap, BTreeSet};

use crate::pipeline::{mentions, ImpactDescription};

const MAX_COMMANDS: usize = 40;

#[derive(Debug, Clone)]
struct Recipe {
    command: String,
    inputs: Vec<String>,
    /// Block or mob whose tool or weapon list applies.
    source: Option<String>,
    fuel: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    /// Feature: reach each target once, loading stations fully.
    Explore,
    /// Bug fix: re-run each target's interaction, then repeat the last
    /// command to confirm the fix holds.
    Recheck,
}

pub struct Planner {
    actions: Vec<String>,
    action_set: BTreeSet<String>,
    producers: BTreeMap<String, Vec<Recipe>>,
    tools: BTreeMap<String, Vec<String>>,
    weapons: BTreeMap<String, Vec<String>>,
    fuels: Vec<String>,
    /// Station element → action node using it, e.g. chopping board → chopping.
    stations: BTreeMap<String, Vec<String>>,
    /// (relation, tail) → heads, for input lookups.
    by_relation: BTreeMap<String, Vec<(String, String)>>,
    depends: Vec<(String, String)>,
    preferred: Vec<String>,
    impacted: BTreeSet<String>,
}

fn verb_of_action_node(node: &str) -> Option<&'static str> {
    match node {
        "chopping" => Some("chop"),
        "cooking" => Some("cook"),
        "plating" => Some("plate"),
        "submitting" => Some("submit"),
        "crafting" => Some("craft"),
        "smelting" => Some("smelt"),
        _ => None,
    }
}

fn arg_of(token: &str) -> Option<&str> {
    token.split_once('(').and_then(|(_, r)| r.strip_suffix(')'))
}

fn verb(token: &str) -> &str {
    token.split_once('(').map_or(token, |(v, _)| v)
}

impl Planner {
    pub fn new(desc: &ImpactDescription) -> Self {
        let actions = desc.actions.clone();
        let action_set: BTreeSet<String> = actions.iter().cloned().collect();
        let mut p = Planner {
            actions,
            action_set,
            producers: BTreeMap::new(),
            tools: BTreeMap::new(),
            weapons: BTreeMap::new(),
            fuels: Vec::new(),
            stations: BTreeMap::new(),
            by_relation: BTreeMap::new(),
            depends: Vec::new(),
            preferred: desc.targets.clone(),
            impacted: desc.impacted.iter().flatten().cloned().collect(),
        };
        for a in p.actions.clone() {
            if verb(&a) == "pick_up" {
                if let Some(x) = arg_of(&a) {
                    p.add_recipe(x, Recipe { command: a.clone(), inputs: vec![], source: None, fuel: false });
                }
            }
        }
        let facts = desc.knowledge.clone().unwrap_or_default();
        let mut grouped: BTreeMap<(String, String), Vec<String>> = BTreeMap::new();
        for f in &facts {
            let (h, r, t) = (f.head.clone(), f.relation.as_str(), f.tail.clone());
            p.by_relation.entry(r.to_string()).or_default().push((h.clone(), t.clone()));
            match r {
                "crafts" | "plated_into" => grouped.entry((r.to_string(), t)).or_default().push(h),
                "smelts_to" => {
                    let cmd = format!("smelt({t})");
                    p.add_recipe(&t, Recipe { command: cmd, inputs: vec![h], source: None, fuel: true });
                }
                "cooked_to" => {
                    let smelt = format!("smelt({t})");
                    if p.action_set.contains(&smelt) {
                        p.add_recipe(&t, Recipe { command: smelt, inputs: vec![h], source: None, fuel: true });
                    } else {
                        p.add_recipe(&t, Recipe { command: "cook".into(), inputs: vec![h], source: None, fuel: false });
                    }
                }
                "chopped_to" => {
                    p.add_recipe(&t, Recipe { command: "chop".into(), inputs: vec![h], source: None, fuel: false })
                }
                "drops" => {
                    for v in ["mine", "attack"] {
                        let cmd = format!("{v}({h})");
                        if p.action_set.contains(&cmd) {
                            let r = Recipe { command: cmd, inputs: vec![], source: Some(h.clone()), fuel: false };
                            p.add_recipe(&t, r);
                        }
                    }
                }
                "mines" => p.tools.entry(t).or_default().push(h),
                "attacks" => p.weapons.entry(t).or_default().push(h),
                "fuels" => p.fuels.push(h),
                "uses" => p.stations.entry(t).or_default().push(h),
                "depends_on" => p.depends.push((h, t)),
                _ => {}
            }
        }
        for ((r, out), inputs) in grouped {
            let cmd = if r == "crafts" { format!("craft({out})") } else { "plate".to_string() };
            p.add_recipe(&out, Recipe { command: cmd, inputs, source: None, fuel: false });
        }
        p
    }

    fn add_recipe(&mut self, out: &str, r: Recipe) {
        if self.action_set.contains(&r.command) {
            self.producers.entry(out.to_string()).or_default().push(r);
        }
    }

    fn rank(&self, name: &str) -> (u8, String) {
        let tier = if self.preferred.iter().any(|p| p == name) {
            0
        } else if self.impacted.contains(name) {
            1
        } else {
            2
        };
        (tier, name.to_string())
    }

    fn cost(&self, item: &str, stack: &mut Vec<String>) -> f64 {
        if stack.iter().any(|s| s == item) || stack.len() > 12 {
            return f64::INFINITY;
        }
        stack.push(item.to_string());
        let best = self
            .producers
            .get(item)
            .into_iter()
            .flatten()
            .map(|r| self.recipe_cost(r, stack))
            .fold(f64::INFINITY, f64::min);
        stack.pop();
        best
    }

    fn recipe_cost(&self, r: &Recipe, stack: &mut Vec<String>) -> f64 {
        let mut c = 1.0;
        for i in &r.inputs {
            c += self.cost(i, stack);
        }
        if let Some(src) = &r.source {
            c += self.min_cost(self.equipment_for(src), stack);
        }
        if r.fuel {
            c += self.min_cost(&self.fuels, stack);
        }
        c
    }

    fn equipment_for(&self, source: &str) -> &[String] {
        self.tools
            .get(source)
            .or_else(|| self.weapons.get(source))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// Zero when nothing is required.
    fn min_cost(&self, options: &[String], stack: &mut Vec<String>) -> f64 {
        if options.is_empty() {
            return 0.0;
        }
        options.iter().map(|o| self.cost(o, stack)).fold(f64::INFINITY, f64::min)
    }

    fn cheapest<'a>(&self, options: &'a [String]) -> Option<&'a String> {
        options
            .iter()
            .map(|o| (self.cost(o, &mut Vec::new()), o))
            .filter(|(c, _)| c.is_finite())
            .min_by(|a, b| a.0.total_cmp(&b.0).then_with(|| self.rank(a.1).cmp(&self.rank(b.1))))
            .map(|(_, o)| o)
    }
}

/// Mutable plan under construction.
struct Plan<'p> {
    p: &'p Planner,
    commands: Vec<String>,
    inventory: BTreeMap<String, i32>,
    touched: BTreeSet<String>,
}

impl<'p> Plan<'p> {
    fn has(&self, item: &str) -> bool {
        self.inventory.get(item).copied().unwrap_or(0) > 0
    }

    fn emit(&mut self, cmd: &str) {
        if self.commands.len() >= MAX_COMMANDS {
            return;
        }
        self.commands.push(cmd.to_string());
        if let Some(a) = arg_of(cmd) {
            self.touched.insert(a.to_string());
        }
        let node = match verb(cmd) {
            "chop" => "chopping",
            "cook" => "cooking",
            "plate" => "plating",
            "submit" => "submitting",
            "craft" => "crafting",
            "smelt" => "smelting",
            _ => "",
        };
        for (station, users) in &self.p.stations {
            if users.iter().any(|u| u == node) {
                self.touched.insert(station.clone());
            }
        }
    }

    fn ensure_any(&mut self, options: &[String], depth: usize) -> Option<String> {
        if options.is_empty() {
            return None;
        }
        if let Some(held) = options.iter().find(|o| self.has(o)) {
            return Some(held.clone());
        }
        let pick = self.p.cheapest(options)?.clone();
        self.obtain(&pick, depth + 1).then_some(pick)
    }

    /// Adds commands that should leave `item` in the inventory.
    fn obtain(&mut self, item: &str, depth: usize) -> bool {
        if self.has(item) {
            return true;
        }
        if depth > 12 {
            return false;
        }
        let Some(recipe) = self
            .p
            .producers
            .get(item)
            .into_iter()
            .flatten()
            .map(|r| (self.p.recipe_cost(r, &mut vec![item.to_string()]), r))
            .filter(|(c, _)| c.is_finite())
            .min_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.command.cmp(&b.1.command)))
            .map(|(_, r)| r.clone())
        else {
            return false;
        };
        for input in &recipe.inputs {
            if !self.obtain(input, depth + 1) {
                return false;
            }
        }
        if let Some(src) = &recipe.source {
            let gear = self.p.equipment_for(src).to_vec();
            if let Some(g) = self.ensure_any(&gear, depth) {
                self.touched.insert(g);
            }
        }
        if recipe.fuel {
            if let Some(f) = self.ensure_any(&self.p.fuels.clone(), depth) {
                *self.inventory.entry(f.clone()).or_insert(0) -= 1;
                self.touched.insert(f);
            }
        }
        for input in &recipe.inputs {
            *self.inventory.entry(input.clone()).or_insert(0) -= 1;
            self.touched.insert(input.clone());
        }
        self.emit(&recipe.command);
        *self.inventory.entry(item.to_string()).or_insert(0) += 1;
        self.touched.insert(item.to_string());
        true
    }

    /// Attacks or mines `source` with the cheapest known tool or weapon.
    /// With `basic`, the cheapest equipment is fetched even when better
    /// gear is already held.
    fn engage(&mut self, verb: &str, source: &str, basic: bool) {
        let gear = self.p.equipment_for(source).to_vec();
        let pick = match self.p.cheapest(&gear).cloned() {
            Some(g) if basic => self.obtain(&g, 1).then_some(g),
            _ => self.ensure_any(&gear, 0),
        };
        if let Some(g) = pick {
            self.touched.insert(g);
        }
        self.emit(&format!("{verb}({source})"));
    }

    fn best_by_rank(&self, options: Vec<String>) -> Option<String> {
        options
            .into_iter()
            .filter(|o| self.p.cost(o, &mut Vec::new()).is_finite() || self.has(o))
            .min_by(|a, b| {
                let ca = self.p.cost(a, &mut Vec::new());
                let cb = self.p.cost(b, &mut Vec::new());
                self.p.rank(a).0.cmp(&self.p.rank(b).0).then(ca.total_cmp(&cb)).then(a.cmp(b))
            })
    }

    /// Runs a station's action with `loads` distinct inputs in hand.
    fn use_station(&mut self, station: &str, loads: usize) -> bool {
        let users = self.p.stations.get(station).cloned().unwrap_or_default();
        for node in users {
            let Some(v) = verb_of_action_node(&node) else { continue };
            match v {
                "chop" | "cook" => {
                    let rel = if v == "chop" { "chopped_to" } else { "cooked_to" };
                    let mut inputs: Vec<String> = self
                        .p
                        .by_relation
                        .get(rel)
                        .into_iter()
                        .flatten()
                        .map(|(h, _)| h.clone())
                        .collect();
                    inputs.sort();
                    inputs.dedup();
                    let mut loaded = 0;
                    while loaded < loads {
                        let Some(pick) = self.best_by_rank(inputs.clone()) else { break };
                        inputs.retain(|i| i != &pick);
                        if self.obtain(&pick, 0) {
                            loaded += 1;
                        }
                    }
                    if loaded == 0 || !self.p.action_set.contains(v) {
                        continue;
                    }
                    self.emit(v);
                    return true;
                }
                "submit" => {
                    let dishes: Vec<String> = self
                        .p
                        .by_relation
                        .get("plated_into")
                        .into_iter()
                        .flatten()
                        .map(|(_, t)| t.clone())
                        .collect();
                    if let Some(d) = self.best_by_rank(dishes) {
                        self.obtain(&d, 0);
                    }
                    self.emit("submit");
                    return true;
                }
                "craft" | "smelt" => {
                    let outputs: Vec<String> = self
                        .p
                        .actions
                        .iter()
                        .filter(|a| verb(a) == v)
                        .filter_map(|a| arg_of(a).map(String::from))
                        .collect();
                    if let Some(o) = self.best_by_rank(outputs) {
                        let before = self.commands.len();
                        self.inventory.remove(&o);
                        if self.obtain(&o, 0) && self.commands.len() > before {
                            return true;
                        }
                    }
                }
                _ => {}
            }
        }
        false
    }

    fn probe(&mut self, target: &str, mode: Mode) {
        let p = self.p;
        let mine = format!("mine({target})");
        let attack = format!("attack({target})");
        let basic = mode == Mode::Explore;
        if p.action_set.contains(&mine) {
            self.engage("mine", target, basic);
        } else if p.action_set.contains(&attack) {
            self.engage("attack", target, basic);
        } else if p.tools.values().flatten().any(|t| t == target) {
            if self.obtain(target, 0) {
                let blocks: Vec<String> =
                    p.tools.iter().filter(|(_, ts)| ts.iter().any(|t| t == target)).map(|(b, _)| b.clone()).collect();
                if let Some(b) = blocks.iter().min_by_key(|b| p.rank(b)) {
                    self.emit(&format!("mine({b})"));
                }
            }
        } else if p.weapons.values().flatten().any(|w| w == target) {
            if self.obtain(target, 0) {
                let mobs: Vec<String> = p
                    .weapons
                    .iter()
                    .filter(|(_, ws)| ws.iter().any(|w| w == target))
                    .map(|(m, _)| m.clone())
                    .collect();
                if let Some(m) = mobs.iter().min_by_key(|m| p.rank(m)) {
                    self.emit(&format!("attack({m})"));
                }
            }
        } else if p.stations.contains_key(target) {
            let loads = if mode == Mode::Explore { 2 } else { 1 };
            self.use_station(target, loads);
        } else if p.producers.contains_key(target) {
            if mode == Mode::Recheck {
                self.inventory.remove(target);
            }
            self.obtain(target, 0);
        } else if let Some(a) = p.actions.iter().find(|a| arg_of(a) == Some(target) && !is_move(a)) {
            let a = a.clone();
            self.emit(&a);
        }
    }

    fn route(&mut self, task: &str) {
        let lower = task.to_lowercase();
        let (goal_verb, rest) = lower.split_once(' ').unwrap_or((lower.as_str(), ""));
        let target = self
            .p
            .depends
            .iter()
            .filter(|(t, x)| *t == lower && lower.contains(x.as_str()))
            .map(|(_, x)| x.clone())
            .max_by_key(|x| x.len())
            .unwrap_or_else(|| rest.to_string());
        match goal_verb {
            "defeat" => self.engage("attack", &target, false),
            "serve" => {
                if !self.obtain(&target, 0) {
                    self.direct(&target);
                }
                self.emit("submit");
            }
            _ => {
                if !self.obtain(&target, 0) {
                    self.direct(&target);
                }
            }
        }
    }

    fn direct(&mut self, name: &str) {
        let hits: Vec<String> = self.p.actions.iter().filter(|a| arg_of(a) == Some(name)).cloned().collect();
        for h in hits {
            self.emit(&h);
        }
    }
}

fn is_move(action: &str) -> bool {
    matches!(verb(action), "move" | "move_to")
}

pub fn plan(desc: &ImpactDescription) -> (String, Vec<String>) {
    let planner = Planner::new(desc);
    let mode = if desc.entry_category == "BugFix" { Mode::Recheck } else { Mode::Explore };
    let mut plan = Plan {
        p: &planner,
        commands: Vec::new(),
        inventory: BTreeMap::new(),
        touched: BTreeSet::new(),
    };
    let mut targets = desc.targets.clone();
    if targets.is_empty() {
        let context = format!("{} {}", desc.entry_text, desc.task.clone().unwrap_or_default());
        for a in &planner.actions {
            if let Some(arg) = arg_of(a) {
                if mentions(&context, arg) && !targets.iter().any(|t| t == arg) && !is_move(a) {
                    targets.push(arg.to_string());
                }
            }
        }
    }
    if let Some(task) = &desc.task {
        plan.route(task);
    }
    for t in &targets {
        if mode == Mode::Recheck || !plan.touched.contains(t) {
            plan.probe(t, mode);
        }
    }
    if mode == Mode::Recheck {
        if let Some(last) = plan.commands.iter().rev().find(|c| !is_move(c)).cloned() {
            plan.emit(&last);
        }
    }
    if plan.commands.is_empty() {
        if let Some(a) = planner.actions.iter().find(|a| !is_move(a)) {
            plan.commands.push(a.clone());
        }
    }
    let objective = match &desc.task {
        Some(t) => format!("Complete \"{t}\" and confirm the change: {}", desc.entry_text),
        None => format!("Confirm the change: {}", desc.entry_text),
    };
    (objective, plan.commands)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::KnowledgeLine;

    fn k(h: &str, r: &str, t: &str) -> KnowledgeLine {
        KnowledgeLine {
            head: h.into(),
            relation: r.into(),
            tail: t.into(),
        }
    }

    fn craft_actions() -> Vec<String> {
        [
            "move_to(base)", "mine(tree)", "mine(stone)", "mine(iron ore)", "mine(coal ore)", "craft(wooden plank)",
            "craft(stick)", "craft(wooden pickaxe)", "craft(stone pickaxe)", "craft(iron sword)", "smelt(iron ingot)",
            "attack(zombie)",
        ]
        .map(String::from)
        .to_vec()
    }

    fn craft_facts() -> Vec<KnowledgeLine> {
        vec![
            k("tree", "drops", "log"),
            k("log", "crafts", "wooden plank"),
            k("wooden plank", "crafts", "stick"),
            k("wooden plank", "crafts", "wooden pickaxe"),
            k("stick", "crafts", "wooden pickaxe"),
            k("wooden pickaxe", "mines", "stone"),
            k("wooden pickaxe", "mines", "iron ore"),
            k("wooden pickaxe", "mines", "coal ore"),
            k("coal ore", "drops", "coal"),
            k("coal", "fuels", "furnace"),
            k("iron ore", "drops", "iron ore"),
            k("iron ore", "smelts_to", "iron ingot"),
            k("iron ingot", "crafts", "iron sword"),
            k("stick", "crafts", "iron sword"),
            k("craft iron sword", "depends_on", "iron sword"),
        ]
    }

    #[test]
    fn iron_sword_route_uses_wooden_pickaxe() {
        let desc = ImpactDescription {
            task: Some("Craft Iron Sword".into()),
            entry_category: "Feature".into(),
            entry_text: "The Wooden Pickaxe now can mine Iron Ore.".into(),
            targets: vec!["wooden pickaxe".into(), "iron ore".into()],
            impacted: Some(vec![]),
            knowledge: Some(craft_facts()),
            actions: craft_actions(),
        };
        let (_, steps) = plan(&desc);
        let mine_iron = steps.iter().position(|s| s == "mine(iron ore)").unwrap();
        let pickaxe = steps.iter().position(|s| s == "craft(wooden pickaxe)").unwrap();
        assert!(pickaxe < mine_iron);
        assert!(!steps.contains(&"craft(stone pickaxe)".to_string()));
        assert_eq!(steps.last().unwrap(), "craft(iron sword)");
        assert!(steps.contains(&"mine(coal ore)".to_string()));
    }

    #[test]
    fn without_knowledge_only_direct_attempts() {
        let desc = ImpactDescription {
            task: None,
            entry_category: "Feature".into(),
            entry_text: "The Wooden Pickaxe now can mine Iron Ore.".into(),
            actions: craft_actions(),
            ..Default::default()
        };
        let (_, steps) = plan(&desc);
        assert_eq!(steps, ["mine(iron ore)", "craft(wooden pickaxe)"]);
    }

    #[test]
    fn steps_stay_in_vocabulary() {
        let desc = ImpactDescription {
            task: Some("Defeat Zombie".into()),
            entry_category: "BugFix".into(),
            entry_text: "Fixed zombies.".into(),
            targets: vec!["zombie".into()],
            impacted: Some(vec![]),
            knowledge: Some(craft_facts()),
            actions: craft_actions(),
        };
        let (_, steps) = plan(&desc);
        assert!(steps.iter().all(|s| desc.actions.contains(s)));
        assert_eq!(steps, ["attack(zombie)"; 3]);
    }
}
