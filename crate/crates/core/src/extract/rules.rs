//! Regex rules loaded from a JSON configuration.

use std::collections::BTreeMap;

use regex::Regex;
use serde::Deserialize;

use super::{ExtractError, ExtractedTriple, LogEvent, SourceKind};
use crate::kg::{NodeKind, RelationCategory, RelationLabel, Triple};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRule {
    pattern: String,
    head: String,
    relation: String,
    category: RelationCategory,
    tail: String,
    head_kind: NodeKind,
    tail_kind: NodeKind,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    relations: Vec<RawRelation>,
    sources: BTreeMap<SourceKind, Vec<RawRule>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRelation {
    label: String,
    category: RelationCategory,
}

#[derive(Debug, Clone)]
pub struct Rule {
    pub pattern: Regex,
    pub head: String,
    pub relation: RelationLabel,
    pub tail: String,
    pub head_kind: NodeKind,
    pub tail_kind: NodeKind,
}

/// Validated rule set. Every template placeholder is known to refer to an
/// existing capture group, so instantiation cannot fail at run time.
#[derive(Debug, Clone)]
pub struct RuleConfig {
    pub rules: BTreeMap<SourceKind, Vec<Rule>>,
    /// Relation vocabulary offered to the LLM extractor.
    pub relations: Vec<RelationLabel>,
}

fn placeholder() -> Regex {
    Regex::new(r"\$(\d)").expect("static regex")
}

impl RuleConfig {
    pub fn from_json(text: &str) -> Result<Self, ExtractError> {
        let raw: RawConfig = serde_json::from_str(text).map_err(|e| ExtractError::Config(e.to_string()))?;
        let ph = placeholder();
        let mut rules = BTreeMap::new();
        for (source, list) in raw.sources {
            if list.is_empty() {
                return Err(ExtractError::Config(format!("source {source:?} declares no rules")));
            }
            let mut compiled = Vec::with_capacity(list.len());
            for (i, r) in list.into_iter().enumerate() {
                let at = |msg: String| ExtractError::Config(format!("{source:?}[{i}]: {msg}"));
                let pattern = Regex::new(&r.pattern).map_err(|e| at(e.to_string()))?;
                let groups = pattern.captures_len() - 1;
                if groups == 0 {
                    return Err(at("pattern has no capture group".into()));
                }
                for template in [&r.head, &r.tail] {
                    for c in ph.captures_iter(template) {
                        let n: usize = c[1].parse().expect("digit");
                        if n > groups {
                            return Err(at(format!("`${n}` but pattern has {groups} group(s)")));
                        }
                    }
                    if template.trim().is_empty() {
                        return Err(at("empty template".into()));
                    }
                }
                let relation = RelationLabel::new(&r.relation, r.category).map_err(|e| at(e.to_string()))?;
                compiled.push(Rule {
                    pattern,
                    head: r.head,
                    relation,
                    tail: r.tail,
                    head_kind: r.head_kind,
                    tail_kind: r.tail_kind,
                });
            }
            rules.insert(source, compiled);
        }
        let relations = raw
            .relations
            .iter()
            .map(|r| RelationLabel::new(&r.label, r.category))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| ExtractError::Config(e.to_string()))?;
        Ok(Self { rules, relations })
    }

    pub fn shipped(env: crate::env::EnvName) -> Self {
        let text = match env {
            crate::env::EnvName::OvercookedLite => include_str!("../../data/overcooked/extractor_rules.json"),
            crate::env::EnvName::Craftworld => include_str!("../../data/craftworld/extractor_rules.json"),
        };
        Self::from_json(text).expect("bundled extractor rules are valid")
    }

    pub fn rules_for(&self, source: SourceKind) -> &[Rule] {
        self.rules.get(&source).map(Vec::as_slice).unwrap_or(&[])
    }
}

fn instantiate(template: &str, caps: &regex::Captures<'_>) -> String {
    placeholder()
        .replace_all(template, |c: &regex::Captures<'_>| {
            let n: usize = c[1].parse().expect("digit");
            caps.get(n).map_or("", |m| m.as_str()).to_string()
        })
        .into_owned()
}

/// Applies every rule for the event's source. Output is rule order, then
/// match order within a rule.
pub fn rule_extract(config: &RuleConfig, event: &LogEvent) -> Vec<ExtractedTriple> {
    let mut out = Vec::new();
    for rule in config.rules_for(event.source) {
        for caps in rule.pattern.captures_iter(&event.text) {
            let head = instantiate(&rule.head, &caps);
            let tail = instantiate(&rule.tail, &caps);
            match Triple::parse(&head, rule.relation.label(), rule.relation.category, &tail) {
                Ok(triple) => out.push(ExtractedTriple {
                    triple,
                    head_kind: rule.head_kind,
                    tail_kind: rule.tail_kind,
                }),
                Err(e) => log::debug!("rule `{}` produced an empty name: {e}", rule.pattern),
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn craft() -> RuleConfig {
        RuleConfig::from_json(include_str!("../../data/craftworld/extractor_rules.json")).unwrap()
    }

    fn strs(ts: &[ExtractedTriple]) -> Vec<String> {
        ts.iter().map(|t| t.triple.to_string()).collect()
    }

    #[test]
    fn task_name_depends_on() {
        let got = rule_extract(&craft(), &LogEvent::task("Craft Wooden Pickaxe"));
        assert_eq!(strs(&got), ["(craft wooden pickaxe, depends_on, wooden pickaxe)"]);
        assert_eq!(got[0].head_kind, NodeKind::Task);
    }

    #[test]
    fn uses_to_craft() {
        let got = rule_extract(&craft(), &LogEvent::game("the player uses wooden planks to craft stick"));
        assert_eq!(
            strs(&got),
            ["(wooden plank, crafts, stick)", "(crafting, uses, crafting table)"]
        );
    }

    #[test]
    fn irrelevant_lines_yield_nothing() {
        for cfg in [
            craft(),
            RuleConfig::from_json(include_str!("../../data/overcooked/extractor_rules.json")).unwrap(),
        ] {
            assert!(rule_extract(&cfg, &LogEvent::game("User A has logged in")).is_empty());
        }
    }

    #[test]
    fn config_validation() {
        let bad_group = r#"{"sources":{"game_log":[{"pattern":"^a (.+)$","head":"$2","relation":"r","category":"TaskDependency","tail":"$1","head_kind":"Task","tail_kind":"Element"}]}}"#;
        assert!(RuleConfig::from_json(bad_group).is_err());
        let no_group = r#"{"sources":{"game_log":[{"pattern":"^a$","head":"x","relation":"r","category":"TaskDependency","tail":"y","head_kind":"Task","tail_kind":"Element"}]}}"#;
        assert!(RuleConfig::from_json(no_group).is_err());
        let empty_source = r#"{"sources":{"game_log":[]}}"#;
        assert!(RuleConfig::from_json(empty_source).is_err());
        let bad_regex = r#"{"sources":{"game_log":[{"pattern":"(","head":"x","relation":"r","category":"TaskDependency","tail":"y","head_kind":"Task","tail_kind":"Element"}]}}"#;
        assert!(RuleConfig::from_json(bad_regex).is_err());
    }
}
