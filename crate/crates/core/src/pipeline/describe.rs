//! The impact description handed to the test generator.
//!
//! Plain labelled lines, so a human reviewing an audit can read it and the
//! offline generator can parse it back.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnowledgeLine {
    pub head: String,
    pub relation: String,
    pub tail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ImpactDescription {
    pub task: Option<String>,
    pub entry_category: String,
    pub entry_text: String,
    /// Elements the case must reach. Empty when no graph was consulted.
    pub targets: Vec<String>,
    /// `None` when the graph was not consulted at all.
    pub impacted: Option<Vec<String>>,
    pub knowledge: Option<Vec<KnowledgeLine>>,
    pub actions: Vec<String>,
}

const ARROW_L: &str = " \u{2014}";
const ARROW_R: &str = "\u{2192} ";

impl ImpactDescription {
    pub fn render(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("Task: {}\n", self.task.as_deref().unwrap_or("none")));
        s.push_str(&format!("Update entry [{}]: {}\n", self.entry_category, self.entry_text));
        if !self.targets.is_empty() {
            s.push_str(&format!("Target elements: {}\n", self.targets.join("; ")));
        }
        if let Some(imp) = &self.impacted {
            s.push_str(&format!("Impacted elements: {}\n", imp.join("; ")));
        }
        if let Some(k) = &self.knowledge {
            s.push_str("Knowledge:\n");
            for line in k {
                s.push_str(&format!("- {}{ARROW_L}{}{ARROW_R}{}\n", line.head, line.relation, line.tail));
            }
        }
        s.push_str(&format!("Available actions: {}", self.actions.join("; ")));
        s
    }

    pub fn parse(text: &str) -> Option<Self> {
        let mut d = ImpactDescription::default();
        let mut in_knowledge = false;
        let split = |v: &str| -> Vec<String> {
            v.split("; ").map(str::trim).filter(|x| !x.is_empty()).map(String::from).collect()
        };
        let mut saw_entry = false;
        for line in text.lines() {
            if in_knowledge {
                if let Some(rest) = line.strip_prefix("- ") {
                    let (head, rest) = rest.split_once(ARROW_L)?;
                    let (rel, tail) = rest.split_once(ARROW_R)?;
                    d.knowledge.get_or_insert_with(Vec::new).push(KnowledgeLine {
                        head: head.into(),
                        relation: rel.into(),
                        tail: tail.into(),
                    });
                    continue;
                }
                in_knowledge = false;
            }
            if let Some(v) = line.strip_prefix("Task: ") {
                d.task = (v != "none").then(|| v.to_string());
            } else if let Some(v) = line.strip_prefix("Update entry [") {
                let (cat, text) = v.split_once("]: ")?;
                d.entry_category = cat.into();
                d.entry_text = text.into();
                saw_entry = true;
            } else if let Some(v) = line.strip_prefix("Target elements: ") {
                d.targets = split(v);
            } else if let Some(v) = line.strip_prefix("Impacted elements:") {
                d.impacted = Some(split(v));
            } else if line == "Knowledge:" {
                d.knowledge = Some(Vec::new());
                in_knowledge = true;
            } else if let Some(v) = line.strip_prefix("Available actions: ") {
                d.actions = split(v);
            }
        }
        saw_entry.then_some(d)
    }
}

/// Whole-word, case-insensitive mention of `name` in `text`. A trailing
/// plural `s` on the mention is accepted.
pub fn mentions(text: &str, name: &str) -> bool {
    let words = |s: &str| -> String {
        let cleaned: String = s.to_lowercase().chars().map(|c| if c.is_alphanumeric() { c } else { ' ' }).collect();
        format!(" {} ", cleaned.split_whitespace().collect::<Vec<_>>().join(" "))
    };
    let hay = words(text);
    let needle = words(name);
    let needle = needle.trim();
    !needle.is_empty() && ["", "s", "es"].iter().any(|suffix| hay.contains(&format!(" {needle}{suffix} ")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mention_matching() {
        assert!(mentions("Fixed zombies not dropping rotten flesh.", "zombie"));
        assert!(mentions("Torches can now be crafted from coal and a stick.", "torch"));
        assert!(mentions("The Wooden Pickaxe now can mine Iron Ore.", "iron ore"));
        assert!(!mentions("Added the Bow, crafted from a stick and string.", "sti"));
        assert!(!mentions("anything", ""));
    }

    #[test]
    fn round_trip() {
        let d = ImpactDescription {
            task: Some("Serve Steak Dish".into()),
            entry_category: "Feature".into(),
            entry_text: "Added new \"Steak Dish\" recipe.".into(),
            targets: vec!["steak".into(), "steak dish".into()],
            impacted: Some(vec!["cooked steak".into()]),
            knowledge: Some(vec![KnowledgeLine {
                head: "cooked steak".into(),
                relation: "plated_into".into(),
                tail: "steak dish".into(),
            }]),
            actions: vec!["pick_up(steak)".into(), "cook".into()],
        };
        let text = d.render();
        assert!(text.contains("- cooked steak \u{2014}plated_into\u{2192} steak dish"));
        assert_eq!(ImpactDescription::parse(&text).unwrap(), d);
        let bare = ImpactDescription {
            knowledge: None,
            impacted: None,
            targets: vec![],
            task: None,
            ..d
        };
        assert_eq!(ImpactDescription::parse(&bare.render()).unwrap(), bare);
    }
}
