//! Overcooked-lite: a kitchen of five stations.

use super::rules::{RecipeVerb, RuleTable};
use super::{Action, EnvState, StepScratch};

pub(crate) const PREP: &str = "prep station";
pub(crate) const COOK: &str = "cook station";
pub(crate) const PLATING: &str = "plating station";
pub(crate) const SERVING: &str = "serving station";

const BURNT: &str = "burnt food";

pub(crate) fn vocabulary(rules: &RuleTable) -> Vec<Action> {
    let mut out: Vec<Action> = rules
        .locations
        .iter()
        .map(|l| Action::with("move", &l.name))
        .collect();
    let mut items: Vec<&String> = rules.sources.values().flatten().collect();
    items.sort();
    items.dedup();
    out.extend(items.into_iter().map(|i| Action::with("pick_up", i)));
    out.extend(["chop", "cook", "plate", "submit"].map(Action::bare));
    out
}

fn station_of(rules: &RuleTable, action: &Action) -> Option<String> {
    match action.verb.as_str() {
        "pick_up" => rules
            .sources
            .iter()
            .find(|(_, items)| items.iter().any(|i| Some(i.as_str()) == action.arg.as_deref()))
            .map(|(loc, _)| loc.clone()),
        "chop" => Some(PREP.into()),
        "cook" => Some(COOK.into()),
        "plate" => Some(PLATING.into()),
        "submit" => Some(SERVING.into()),
        _ => None,
    }
}

pub(crate) fn expand(state: &EnvState, action: &Action) -> Vec<Action> {
    let mut out = Vec::new();
    if let Some(loc) = station_of(&state.rules, action) {
        if loc != state.view.location {
            out.push(Action::with("move", &loc));
        }
    }
    out.push(action.clone());
    out
}

/// Held units that `verb` can process, one entry per unit, sorted by name.
fn processable(state: &EnvState, verb: RecipeVerb) -> Vec<(String, String)> {
    let mut out = Vec::new();
    for (item, &n) in &state.view.inventory {
        if let Some(r) = state
            .rules
            .recipes_by(verb)
            .find(|r| r.inputs.len() == 1 && &r.inputs[0] == item)
        {
            for _ in 0..n {
                out.push((item.clone(), r.output.clone()));
            }
        }
    }
    out
}

fn is_dish(rules: &RuleTable, item: &str) -> bool {
    rules.recipes_by(RecipeVerb::Plate).any(|r| r.output == item)
}

pub(crate) fn step(state: &mut EnvState, action: &Action, s: &mut StepScratch) {
    let rules = state.rules.clone();
    let here = state.view.location.clone();
    match action.verb.as_str() {
        "move" => {
            let to = action.arg();
            if rules.location(to).is_none() {
                return s.invalid(action, "unknown location");
            }
            if to == here {
                s.event(format!("player waits at {here}"));
            } else {
                state.view.location = to.to_string();
                s.event(format!("player moved from {here} to {to}"));
                let first = format!("seen:{to}");
                if !state.view.statuses.contains_key(&first) {
                    state.view.statuses.insert(first, "1".into());
                    match to {
                        SERVING => s.events.push(crate::extract::LogEvent::ui(
                            "Press submit at the serving window to deliver a finished dish.",
                        )),
                        PREP => s.events.push(crate::extract::LogEvent::ui(
                            "Chop ingredients on the chopping board before plating them.",
                        )),
                        _ => {}
                    }
                }
            }
        }
        "pick_up" => {
            let item = action.arg();
            let stocked = rules.sources.get(&here).is_some_and(|l| l.iter().any(|i| i == item));
            if !stocked {
                return s.invalid(action, "item not available here");
            }
            let cap = rules.param("hand_capacity", 4.0) as u32;
            if state.view.held_total() >= cap {
                return s.invalid(action, "hands are full");
            }
            if item == "steak" && rules.flag("steak_single_stock") {
                if state.view.status("stock:steak") == Some("empty") {
                    return s.invalid(action, "the pantry has no steak left");
                }
                state.view.statuses.insert("stock:steak".into(), "empty".into());
            }
            state.view.add(item, 1);
            s.event(format!("player picked up {item} from the {here}"));
        }
        "chop" => {
            if here != PREP {
                return s.invalid(action, "not at the chopping board");
            }
            let units = processable(state, RecipeVerb::Chop);
            if units.is_empty() {
                return s.invalid(action, "nothing to chop");
            }
            s.touch("chopping board");
            s.touch("knife");
            let cap = rules.param("board_capacity", 1.0) as usize;
            for (input, output) in units.iter().take(cap) {
                state.view.remove(input, 1);
                state.view.add(output, 1);
                s.reward += rules.rewards.processed;
                s.touch(input);
                s.touch(output);
                s.event(format!("player chops {input} into {output} with the knife at the chopping board"));
            }
            if rules.flag("knife_loss") {
                if let Some((lost, _)) = units.get(cap) {
                    state.view.remove(lost, 1);
                    s.touch(lost);
                    s.event(format!("the knife destroyed {lost}"));
                }
            }
        }
        "cook" => {
            if here != COOK {
                return s.invalid(action, "not at the stove");
            }
            let units = processable(state, RecipeVerb::Cook);
            let burnable: Vec<String> = if rules.flag("stove_burns_cooked") {
                state
                    .view
                    .inventory
                    .keys()
                    .filter(|i| rules.recipes_by(RecipeVerb::Cook).any(|r| &r.output == *i))
                    .cloned()
                    .collect()
            } else {
                Vec::new()
            };
            if units.is_empty() && burnable.is_empty() {
                return s.invalid(action, "nothing to cook");
            }
            s.touch("stove");
            for item in &burnable {
                let n = state.view.remove(item, u32::MAX);
                state.view.add(BURNT, n);
                s.touch(item);
                s.touch(BURNT);
                s.event(format!("the stove burned {item}"));
            }
            for (input, output) in &units {
                state.view.remove(input, 1);
                state.view.add(output, 1);
                s.reward += rules.rewards.processed;
                s.touch(input);
                s.touch(output);
                s.event(format!("player cooks {input} into {output} on the stove"));
            }
        }
        "plate" => {
            if here != PLATING {
                return s.invalid(action, "not at the plating station");
            }
            let recipe = rules
                .recipes_by(RecipeVerb::Plate)
                .find(|r| r.inputs.iter().all(|i| state.view.count(i) > 0));
            let Some(r) = recipe else {
                return s.invalid(action, "no recipe matches the held items");
            };
            for i in &r.inputs {
                state.view.remove(i, 1);
                s.touch(i);
                s.event(format!("player plates {i} into {}", r.output));
            }
            state.view.add(&r.output, r.count);
            s.touch(&r.output);
        }
        "submit" => {
            if here != SERVING {
                return s.invalid(action, "not at the serving window");
            }
            if state.view.inventory.is_empty() {
                return s.invalid(action, "nothing to submit");
            }
            s.touch("serving window");
            let dish = state
                .view
                .inventory
                .keys()
                .find(|i| is_dish(&rules, i))
                .cloned();
            match dish {
                Some(d) => {
                    state.view.remove(&d, 1);
                    s.touch(&d);
                    s.event(format!("player submits {d} at the serving window"));
                    if state.view.status("window") == Some("stale") {
                        s.event("event: stale serving window rejected the dish");
                    } else {
                        state.view.bump(&format!("served:{d}"));
                        s.reward += rules.rewards.dish;
                        s.event(format!("ui: pressing submit triggers serving {d}"));
                        s.event(format!("event: serving {d}"));
                    }
                }
                None => {
                    let held: Vec<String> = state.view.inventory.keys().cloned().collect();
                    for i in &held {
                        s.touch(i);
                        s.event(format!("player submits {i} at the serving window"));
                    }
                    state.view.inventory.clear();
                    s.reward += rules.rewards.wrong_submission;
                    s.event("event: failed submission");
                    if rules.flag("window_stale_after_failure") {
                        state.view.statuses.insert("window".into(), "stale".into());
                    }
                }
            }
        }
        _ => s.invalid(action, "unknown verb"),
    }
}
