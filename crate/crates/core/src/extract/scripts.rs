//! Compiled-in script hooks, one per environment.

use super::{ExtractError, ExtractedTriple, LogEvent};
use crate::env::{EnvName, StateView};
use crate::kg::{NodeKind, RelationCategory, Triple};

/// Two pure callbacks: one per log line, one per state change.
pub trait ScriptHooks: Send + Sync {
    fn on_event(&self, event: &LogEvent) -> Result<Vec<ExtractedTriple>, ExtractError>;
    fn on_state_change(&self, prev: &StateView, curr: &StateView) -> Result<Vec<ExtractedTriple>, ExtractError>;
}

pub fn hooks_for(env: EnvName) -> Box<dyn ScriptHooks> {
    match env {
        EnvName::OvercookedLite => Box::new(OvercookedHooks),
        EnvName::Craftworld => Box::new(CraftworldHooks),
    }
}

fn triple(
    h: &str,
    r: &str,
    c: RelationCategory,
    t: &str,
    hk: NodeKind,
    tk: NodeKind,
) -> Result<ExtractedTriple, ExtractError> {
    let triple = Triple::parse(h, r, c, t).map_err(|e| ExtractError::Script(e.to_string()))?;
    Ok(ExtractedTriple {
        triple,
        head_kind: hk,
        tail_kind: tk,
    })
}

pub struct CraftworldHooks;

const TOOL_SUFFIXES: [&str; 3] = ["pickaxe", "axe", "shovel"];

impl ScriptHooks for CraftworldHooks {
    fn on_event(&self, event: &LogEvent) -> Result<Vec<ExtractedTriple>, ExtractError> {
        let text = event.text.trim();
        if let Some(rest) = text.strip_prefix("a ") {
            if let Some((tool, block)) = rest.split_once(" interacts with ") {
                if TOOL_SUFFIXES.iter().any(|s| tool.ends_with(s)) {
                    use RelationCategory::GameElementInteraction as G;
                    return Ok(vec![triple(tool, "mines", G, block, NodeKind::Element, NodeKind::Element)?]);
                }
            }
        }
        if let Some(rest) = text.strip_prefix("player attacks ") {
            if let Some((mob, weapon)) = rest.split_once(" with the ") {
                use RelationCategory::GameElementInteraction as G;
                return Ok(vec![triple(weapon, "attacks", G, mob, NodeKind::Element, NodeKind::Element)?]);
            }
        }
        Ok(Vec::new())
    }

    fn on_state_change(&self, prev: &StateView, curr: &StateView) -> Result<Vec<ExtractedTriple>, ExtractError> {
        if curr.status("furnace") != Some("lit") {
            return Ok(Vec::new());
        }
        let gained: Vec<&String> = curr
            .inventory
            .iter()
            .filter(|(k, &v)| v > prev.count(k))
            .map(|(k, _)| k)
            .collect();
        let lost: Vec<&String> = prev
            .inventory
            .iter()
            .filter(|(k, &v)| v > curr.count(k))
            .map(|(k, _)| k)
            .collect();
        let mut out = Vec::new();
        for g in gained {
            let Some(food) = g.strip_prefix("cooked ") else { continue };
            for l in &lost {
                if l.strip_prefix("raw ") == Some(food) {
                    out.push(triple(
                        l,
                        "cooked_to",
                        RelationCategory::CausalTransition,
                        g,
                        NodeKind::Element,
                        NodeKind::Element,
                    )?);
                }
            }
        }
        Ok(out)
    }
}

pub struct OvercookedHooks;

impl ScriptHooks for OvercookedHooks {
    fn on_event(&self, _event: &LogEvent) -> Result<Vec<ExtractedTriple>, ExtractError> {
        Ok(Vec::new())
    }

    fn on_state_change(&self, prev: &StateView, curr: &StateView) -> Result<Vec<ExtractedTriple>, ExtractError> {
        if curr.status("window") == Some("stale") && prev.status("window") != Some("stale") {
            return Ok(vec![triple(
                "failed submission",
                "blocks",
                RelationCategory::CausalTransition,
                "serving window",
                NodeKind::Event,
                NodeKind::Element,
            )?]);
        }
        Ok(Vec::new())
    }
}

/// Dispatches an event to the matching callback.
pub fn script_extract(hooks: &dyn ScriptHooks, event: &LogEvent) -> Result<Vec<ExtractedTriple>, ExtractError> {
    match (&event.source, &event.diff) {
        (super::SourceKind::StateDiff, Some(d)) => hooks.on_state_change(&d.before, &d.after),
        (super::SourceKind::GameLog, _) => hooks.on_event(event),
        _ => Ok(Vec::new()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn view(items: &[(&str, u32)], furnace: bool) -> StateView {
        let mut v = StateView::default();
        for (i, n) in items {
            v.add(i, *n);
        }
        if furnace {
            v.statuses.insert("furnace".into(), "lit".into());
        }
        v
    }

    #[test]
    fn pickaxe_interaction_mines() {
        let got = CraftworldHooks.on_event(&LogEvent::game("a wooden pickaxe interacts with stone")).unwrap();
        assert_eq!(got[0].triple.to_string(), "(wooden pickaxe, mines, stone)");
        let none = CraftworldHooks.on_event(&LogEvent::game("a zombie interacts with stone")).unwrap();
        assert!(none.is_empty());
    }

    #[test]
    fn furnace_cooking_diff() {
        let prev = view(&[("raw porkchop", 1), ("coal", 1)], true);
        let curr = view(&[("cooked porkchop", 1)], true);
        let got = CraftworldHooks.on_state_change(&prev, &curr).unwrap();
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].triple.to_string(), "(raw porkchop, cooked_to, cooked porkchop)");
        assert!(CraftworldHooks.on_state_change(&curr, &curr).unwrap().is_empty());
        let cold = CraftworldHooks.on_state_change(&view(&[("raw porkchop", 1)], false), &view(&[("cooked porkchop", 1)], false));
        assert!(cold.unwrap().is_empty());
    }
}
