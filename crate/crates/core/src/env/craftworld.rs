//! Craftworld: abstract locations with travel costs, mining, crafting,
//! smelting and combat.

use rand::Rng;

use super::rules::{RecipeVerb, RuleTable};
use super::{Action, EnvState, StepScratch};
use crate::extract::LogEvent;

/// Where the crafting table and furnace stand.
pub(crate) const BASE: &str = "base";

pub(crate) fn vocabulary(rules: &RuleTable) -> Vec<Action> {
    let mut out: Vec<Action> = rules
        .locations
        .iter()
        .map(|l| Action::with("move_to", &l.name))
        .collect();
    out.extend(rules.blocks.keys().map(|b| Action::with("mine", b)));
    let mut crafted: Vec<&String> = rules.recipes_by(RecipeVerb::Craft).map(|r| &r.output).collect();
    crafted.sort();
    out.extend(crafted.into_iter().map(|o| Action::with("craft", o)));
    let mut smelted: Vec<&String> = rules.recipes_by(RecipeVerb::Smelt).map(|r| &r.output).collect();
    smelted.sort();
    out.extend(smelted.into_iter().map(|o| Action::with("smelt", o)));
    out.extend(rules.mobs.keys().map(|m| Action::with("attack", m)));
    out
}

fn site_of(rules: &RuleTable, action: &Action) -> Option<String> {
    let arg = action.arg();
    match action.verb.as_str() {
        "mine" => rules.blocks.get(arg).map(|b| b.location.clone()),
        "attack" => rules.mobs.get(arg).map(|m| m.location.clone()),
        "craft" | "smelt" => Some(BASE.into()),
        "move_to" => rules.location(arg).map(|l| l.name.clone()),
        _ => None,
    }
}

/// Ticks still needed to reach `loc` given any transit already under way.
fn ticks_to(state: &EnvState, loc: &str) -> u32 {
    if state.view.location == loc {
        return 0;
    }
    let travel = state.rules.location(loc).map_or(1, |l| l.travel);
    let done = transit(state).filter(|(to, _)| to == loc).map_or(0, |(_, n)| n);
    travel.saturating_sub(done).max(1)
}

fn transit(state: &EnvState) -> Option<(String, u32)> {
    let raw = state.view.status("transit")?;
    let (to, n) = raw.rsplit_once(':')?;
    Some((to.to_string(), n.parse().ok()?))
}

pub(crate) fn expand(state: &EnvState, action: &Action) -> Vec<Action> {
    let Some(site) = site_of(&state.rules, action) else {
        return vec![action.clone()];
    };
    let ticks = ticks_to(state, &site);
    let mut out: Vec<Action> = (0..ticks).map(|_| Action::with("move_to", &site)).collect();
    if action.verb != "move_to" {
        out.push(action.clone());
    } else if out.is_empty() {
        out.push(action.clone());
    }
    out
}

fn held_from<'a>(state: &EnvState, options: &'a [String]) -> Option<&'a String> {
    options.iter().find(|t| state.view.count(t) > 0)
}

pub(crate) fn step(state: &mut EnvState, action: &Action, s: &mut StepScratch) {
    let rules = state.rules.clone();
    let here = state.view.location.clone();
    let arg = action.arg().to_string();
    if action.verb != "move_to" {
        state.view.statuses.remove("transit");
    }
    match action.verb.as_str() {
        "move_to" => {
            let Some(loc) = rules.location(&arg) else {
                return s.invalid(action, "unknown location");
            };
            if here == arg {
                state.view.statuses.remove("transit");
                s.event(format!("player waits at {here}"));
                return;
            }
            let progress = transit(state).filter(|(to, _)| *to == arg).map_or(0, |(_, n)| n) + 1;
            if progress >= loc.travel {
                state.view.statuses.remove("transit");
                state.view.location = arg.clone();
                s.event(format!("player moved from {here} to {arg}"));
                let first = format!("seen:{arg}");
                if arg == "nether" && !state.view.statuses.contains_key(&first) {
                    s.events.push(LogEvent::ui("Touching the Nether portal will teleport you to the Nether."));
                }
                state.view.statuses.insert(first, "1".into());
            } else {
                state.view.statuses.insert("transit".into(), format!("{arg}:{progress}"));
                s.event(format!("player walks toward {arg}"));
            }
        }
        "mine" => {
            let Some(block) = rules.blocks.get(&arg) else {
                return s.invalid(action, "unknown block");
            };
            if block.location != here {
                return s.invalid(action, "block not here");
            }
            let tool = if block.tools.is_empty() {
                None
            } else {
                match held_from(state, &block.tools) {
                    Some(t) => Some(t.clone()),
                    None => {
                        s.event(format!("player cannot break {arg}"));
                        return s.invalid(action, "no suitable tool");
                    }
                }
            };
            match &tool {
                Some(t) => {
                    s.touch(t);
                    s.event(format!("a {t} interacts with {arg}"));
                }
                None => s.event(format!("player punches {arg}")),
            }
            state.view.add(&block.drops, block.count);
            s.touch(&block.drops);
            s.event(format!("player obtained {} from {arg}", block.drops));
        }
        "attack" => {
            let Some(mob) = rules.mobs.get(&arg) else {
                return s.invalid(action, "unknown mob");
            };
            if mob.location != here {
                return s.invalid(action, "mob not here");
            }
            let weapon = if mob.weapons.is_empty() {
                None
            } else {
                match held_from(state, &mob.weapons) {
                    Some(w) => Some(w.clone()),
                    None => {
                        s.event(format!("player cannot defeat {arg} bare-handed"));
                        return s.invalid(action, "no suitable weapon");
                    }
                }
            };
            match &weapon {
                Some(w) => {
                    s.touch(w);
                    s.event(format!("player attacks {arg} with the {w}"));
                }
                None => s.event(format!("player attacks {arg} with bare hands")),
            }
            state.view.bump(&format!("defeated:{arg}"));
            s.event(format!("event: defeating {arg}"));
            if let Some(drop) = &mob.drops {
                let lost = arg == "pig" && rules.flag("pig_drop_fail") && state.rng.gen_bool(0.5);
                if lost {
                    s.event(format!("{arg} dropped nothing"));
                } else {
                    state.view.add(drop, mob.count);
                    s.touch(drop);
                    s.event(format!("player obtained {drop} from {arg}"));
                }
            }
        }
        "craft" => {
            let Some(r) = rules.recipe_for(RecipeVerb::Craft, &arg) else {
                return s.invalid(action, "no such recipe");
            };
            if here != BASE {
                return s.invalid(action, "no crafting table here");
            }
            if let Some(missing) = r.inputs.iter().find(|i| state.view.count(i) == 0) {
                return s.invalid(action, &format!("missing {missing}"));
            }
            s.touch("crafting table");
            for i in &r.inputs {
                state.view.remove(i, 1);
                s.touch(i);
                s.event(format!("the player uses {i} to craft {arg}"));
            }
            state.view.add(&arg, r.count);
            s.event(format!("ui: clicking crafting result triggers acquiring {arg}"));
            s.event(format!("event: acquiring {arg}"));
        }
        "smelt" => {
            let Some(r) = rules.recipe_for(RecipeVerb::Smelt, &arg) else {
                return s.invalid(action, "no such recipe");
            };
            if here != BASE {
                return s.invalid(action, "no furnace here");
            }
            if let Some(missing) = r.inputs.iter().find(|i| state.view.count(i) == 0) {
                return s.invalid(action, &format!("missing {missing}"));
            }
            let Some(fuel) = held_from(state, &rules.fuel).cloned() else {
                return s.invalid(action, "no fuel");
            };
            s.touch("furnace");
            if r.inputs.iter().any(|i| i == "sand") && rules.flag("sand_smelt_crash") {
                s.event("the furnace crashed while smelting sand");
                return s.invalid(action, "furnace crashed");
            }
            state.view.remove(&fuel, 1);
            s.touch(&fuel);
            s.event(format!("the player burns {fuel} in the furnace"));
            for i in &r.inputs {
                state.view.remove(i, 1);
                s.touch(i);
                if arg.starts_with("cooked ") {
                    s.event(format!("the player cooks {i} in the furnace"));
                } else {
                    s.event(format!("the player smelts {i} into {arg} in the furnace"));
                }
            }
            state.view.add(&arg, r.count);
            state.view.statuses.insert("furnace".into(), "lit".into());
        }
        _ => s.invalid(action, "unknown verb"),
    }
}
