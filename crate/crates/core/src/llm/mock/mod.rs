//! Offline deterministic provider.
//!
//! Stateless: each reply is a function of the message history alone. The
//! template is recognised from the first user message and the current round
//! from how many tool results have come back so far.

mod planner;

use serde::Deserialize;
use serde_json::{json, Value};

use super::provider::{ChatMessage, ChatProvider, ProviderError, Role};
use super::session::{tool_block, TOOL_RESULTS_PREFIX};
use super::templates::{unrender, TemplateId};
use crate::env::EnvName;
use crate::pipeline::ImpactDescription;

pub use planner::plan;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct CannedExtraction {
    input_text: String,
    triples: Vec<[String; 3]>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScriptedUpdate {
    /// Matched against the log text, e.g. `v1.2.0 -> v1.2.1`.
    header: String,
    #[serde(default)]
    find: Vec<String>,
    #[serde(default)]
    triples: Vec<Value>,
    #[serde(default)]
    related_items: Vec<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct MockScript {
    #[serde(default)]
    extractor: Vec<CannedExtraction>,
    #[serde(default)]
    updates: Vec<ScriptedUpdate>,
}

#[derive(Debug, Clone, Default)]
pub struct MockProvider {
    script: MockScript,
}

impl MockProvider {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        Ok(Self {
            script: serde_json::from_str(text)?,
        })
    }

    pub fn for_env(env: EnvName) -> Self {
        let text = match env {
            EnvName::OvercookedLite => include_str!("../../../data/overcooked/mock_script.json"),
            EnvName::Craftworld => include_str!("../../../data/craftworld/mock_script.json"),
        };
        Self::from_json(text).expect("bundled mock script parses")
    }

    fn extract(&self, input: &str) -> Value {
        let triples: Vec<Value> = self
            .script
            .extractor
            .iter()
            .find(|c| c.input_text == input)
            .map(|c| c.triples.iter().map(|[h, r, t]| json!({"Head": h, "Relation": r, "Tail": t})).collect())
            .unwrap_or_default();
        json!({ "knowledge_triples": triples })
    }

    fn parse_update(&self, log: &str, round: usize) -> String {
        let script = self.script.updates.iter().find(|u| log.contains(&u.header));
        let Some(u) = script else {
            return json!({"new_or_modified_triples": [], "related_items": []}).to_string();
        };
        let mut rounds: Vec<Vec<(&str, Value)>> = Vec::new();
        if !u.find.is_empty() {
            rounds.push(u.find.iter().map(|n| ("find_nodes", json!({ "name": n }))).collect());
        }
        if !u.triples.is_empty() {
            rounds.push(
                u.triples
                    .iter()
                    .map(|t| {
                        let op = t.get("Op").and_then(Value::as_str).unwrap_or("insert");
                        let triple = json!({"Head": t["Head"], "Relation": t["Relation"], "Tail": t["Tail"]});
                        ("graph_update", json!({ "op": op, "triple": triple }))
                    })
                    .collect(),
            );
        }
        match rounds.get(round) {
            Some(calls) => tool_block(calls),
            None => json!({"new_or_modified_triples": u.triples, "related_items": u.related_items}).to_string(),
        }
    }
}

fn infer_impact(item: &str, last_results: Option<&str>) -> String {
    let Some(results) = last_results else {
        return tool_block(&[("impact_set", json!({ "item": item }))]);
    };
    let parsed: Vec<Value> = serde_json::from_str(results).unwrap_or_default();
    let items: Vec<Value> = parsed
        .iter()
        .filter(|r| r["name"] == "impact_set")
        .filter_map(|r| r["result"].as_array())
        .flatten()
        .filter(|v| v.is_string())
        .cloned()
        .collect();
    json!({"input_item": item, "inferred_related_items": items}).to_string()
}

fn generate_test(description: &str) -> String {
    let desc = ImpactDescription::parse(description).unwrap_or_default();
    let (objective, steps) = plan(&desc);
    json!({"Test_Objective": objective, "Action_Steps": steps}).to_string()
}

impl ChatProvider for MockProvider {
    fn chat(&self, messages: &[ChatMessage]) -> Result<String, ProviderError> {
        let malformed = |m: &str| ProviderError::Malformed {
            message: m.into(),
            raw_body: String::new(),
        };
        let prompt = messages
            .iter()
            .find(|m| m.role == Role::User)
            .ok_or_else(|| malformed("no user message"))?;
        let id = TemplateId::detect(&prompt.content).ok_or_else(|| malformed("unrecognised prompt"))?;
        let bindings = unrender(id, &prompt.content).ok_or_else(|| malformed("prompt does not match its template"))?;
        let results: Vec<&str> = messages
            .iter()
            .filter(|m| m.role == Role::User)
            .filter_map(|m| m.content.strip_prefix(TOOL_RESULTS_PREFIX))
            .map(str::trim)
            .collect();
        Ok(match id {
            TemplateId::Extractor => self.extract(&bindings["input_text"]).to_string(),
            TemplateId::UpdateParser => self.parse_update(&bindings["update_log"], results.len()),
            TemplateId::ImpactInferencer => infer_impact(&bindings["input_item"], results.last().copied()),
            TemplateId::TestGenerator => generate_test(&bindings["impact_description"]),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::{render, Gateway, ParamKind, ParamSpec, Payload, ToolHost, ToolSpec};
    use std::collections::BTreeMap;
    use std::sync::Arc;

    struct Impact;
    impl ToolHost for Impact {
        fn specs(&self) -> Vec<ToolSpec> {
            vec![ToolSpec {
                name: "impact_set".into(),
                description: "elements reachable from an item".into(),
                params: vec![ParamSpec {
                    name: "item".into(),
                    kind: ParamKind::String,
                    required: true,
                }],
            }]
        }
        fn invoke(&mut self, _: &str, args: &Value) -> Result<Value, String> {
            Ok(json!([format!("near {}", args["item"].as_str().unwrap())]))
        }
    }

    #[test]
    fn impact_echoes_tool_result() {
        let gw = Gateway::new(Arc::new(MockProvider::default()));
        let b = BTreeMap::from([("input_item", "steak".to_string())]);
        let r = gw.ask(TemplateId::ImpactInferencer, &b, Some(&mut Impact)).unwrap();
        assert_eq!(r.completion.tool_invocations.len(), 1);
        assert_eq!(
            r.payload,
            Payload::Impact {
                input_item: "steak".into(),
                items: vec!["near steak".into()]
            }
        );
    }

    #[test]
    fn canned_and_unknown_extraction() {
        let mock = MockProvider::for_env(EnvName::Craftworld);
        let gw = Gateway::new(Arc::new(mock));
        let unknown = BTreeMap::from([("input_text", "nothing here".to_string()), ("relations", "drops".to_string())]);
        let r = gw.ask(TemplateId::Extractor, &unknown, None).unwrap();
        assert_eq!(r.payload, Payload::Triples(vec![]));
    }

    #[test]
    fn replies_are_pure_functions_of_history() {
        let mock = MockProvider::for_env(EnvName::OvercookedLite);
        let b = BTreeMap::from([("update_log", "## v1.2.0 -> v1.2.1".to_string())]);
        let msgs = [ChatMessage::user(render(TemplateId::UpdateParser, &b).unwrap())];
        assert_eq!(mock.chat(&msgs).unwrap(), mock.chat(&msgs).unwrap());
        assert!(mock.chat(&[ChatMessage::user("hello")]).is_err());
    }
}
