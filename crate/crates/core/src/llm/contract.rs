//! Strict parsing of the JSON output contracts.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use super::TemplateId;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("schema violation at {path}: {message}")]
pub struct SchemaError {
    pub path: String,
    pub message: String,
}

fn violation(path: impl Into<String>, message: impl Into<String>) -> SchemaError {
    SchemaError {
        path: path.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TripleOp {
    Insert,
    Remove,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawTriple {
    pub head: String,
    pub relation: String,
    pub tail: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub op: Option<TripleOp>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestCasePayload {
    pub objective: String,
    pub steps: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Payload {
    Triples(Vec<RawTriple>),
    Delta {
        triples: Vec<RawTriple>,
        related_items: Vec<String>,
    },
    Impact {
        input_item: String,
        items: Vec<String>,
    },
    TestCase(TestCasePayload),
}

/// Removes one optional fenced block wrapper. Anything outside the fence,
/// or a second fence, is rejected later as non-JSON text.
fn unwrap_fence(text: &str) -> &str {
    let t = text.trim();
    let Some(rest) = t.strip_prefix("```") else { return t };
    let Some(body) = rest.strip_suffix("```") else { return t };
    let body = match body.find('\n') {
        Some(nl) if body[..nl].trim().chars().all(|c| c.is_ascii_alphanumeric()) => &body[nl + 1..],
        _ => body,
    };
    if body.contains("```") {
        return t;
    }
    body.trim()
}

pub fn parse_contract(id: TemplateId, text: &str) -> Result<Payload, SchemaError> {
    let body = unwrap_fence(text);
    let value: Value =
        serde_json::from_str(body).map_err(|e| violation("$", format!("not a single JSON document: {e}")))?;
    let obj = value.as_object().ok_or_else(|| violation("$", "expected an object"))?;
    match id {
        TemplateId::Extractor => {
            only_keys(obj, "$", &["knowledge_triples"])?;
            Ok(Payload::Triples(triples(obj, "knowledge_triples", false)?))
        }
        TemplateId::UpdateParser => {
            only_keys(obj, "$", &["new_or_modified_triples", "related_items"])?;
            Ok(Payload::Delta {
                triples: triples(obj, "new_or_modified_triples", true)?,
                related_items: strings(obj, "related_items", false)?,
            })
        }
        TemplateId::ImpactInferencer => {
            only_keys(obj, "$", &["input_item", "inferred_related_items"])?;
            Ok(Payload::Impact {
                input_item: string(obj, "$", "input_item")?,
                items: strings(obj, "inferred_related_items", false)?,
            })
        }
        TemplateId::TestGenerator => {
            only_keys(obj, "$", &["Test_Objective", "Action_Steps"])?;
            Ok(Payload::TestCase(TestCasePayload {
                objective: string(obj, "$", "Test_Objective")?,
                steps: strings(obj, "Action_Steps", true)?,
            }))
        }
    }
}

fn only_keys(obj: &Map<String, Value>, path: &str, allowed: &[&str]) -> Result<(), SchemaError> {
    match obj.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(violation(format!("{path}.{k}"), "unexpected key")),
        None => Ok(()),
    }
}

fn string(obj: &Map<String, Value>, path: &str, key: &str) -> Result<String, SchemaError> {
    let at = format!("{path}.{key}");
    match obj.get(key) {
        None => Err(violation(at, "missing")),
        Some(Value::String(s)) if !s.trim().is_empty() => Ok(s.clone()),
        Some(Value::String(_)) => Err(violation(at, "empty string")),
        Some(_) => Err(violation(at, "expected a string")),
    }
}

fn array<'a>(obj: &'a Map<String, Value>, key: &str, non_empty: bool) -> Result<&'a Vec<Value>, SchemaError> {
    let at = format!("$.{key}");
    let arr = obj
        .get(key)
        .ok_or_else(|| violation(&at, "missing"))?
        .as_array()
        .ok_or_else(|| violation(&at, "expected an array"))?;
    if non_empty && arr.is_empty() {
        return Err(violation(at, "must not be empty"));
    }
    Ok(arr)
}

fn strings(obj: &Map<String, Value>, key: &str, non_empty: bool) -> Result<Vec<String>, SchemaError> {
    array(obj, key, non_empty)?
        .iter()
        .enumerate()
        .map(|(i, v)| match v {
            Value::String(s) if !s.trim().is_empty() => Ok(s.clone()),
            _ => Err(violation(format!("$.{key}[{i}]"), "expected a non-empty string")),
        })
        .collect()
}

fn triples(obj: &Map<String, Value>, key: &str, allow_op: bool) -> Result<Vec<RawTriple>, SchemaError> {
    let mut out = Vec::new();
    for (i, v) in array(obj, key, false)?.iter().enumerate() {
        let path = format!("$.{key}[{i}]");
        let item = v.as_object().ok_or_else(|| violation(&path, "expected an object"))?;
        let allowed: &[&str] = if allow_op {
            &["Head", "Relation", "Tail", "Op"]
        } else {
            &["Head", "Relation", "Tail"]
        };
        only_keys(item, &path, allowed)?;
        let op = match item.get("Op") {
            None => None,
            Some(Value::String(s)) if s == "insert" => Some(TripleOp::Insert),
            Some(Value::String(s)) if s == "remove" => Some(TripleOp::Remove),
            Some(_) => return Err(violation(format!("{path}.Op"), "expected \"insert\" or \"remove\"")),
        };
        out.push(RawTriple {
            head: string(item, &path, "Head")?,
            relation: string(item, &path, "Relation")?,
            tail: string(item, &path, "Tail")?,
            op,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn test_case_shape() {
        let text = r#"{"Test_Objective": "verify steak dish", "Action_Steps": ["pick_up(steak)", "cook"]}"#;
        let Payload::TestCase(tc) = parse_contract(TemplateId::TestGenerator, text).unwrap() else { panic!() };
        assert_eq!(tc.objective, "verify steak dish");
        assert_eq!(tc.steps, ["pick_up(steak)", "cook"]);
    }

    #[test]
    fn trailing_prose_rejected() {
        let text = "{\"knowledge_triples\": []}\n\nThese triples describe the portal.";
        let err = parse_contract(TemplateId::Extractor, text).unwrap_err();
        assert_eq!(err.path, "$");
    }

    #[test]
    fn empty_triples_ok() {
        assert_eq!(
            parse_contract(TemplateId::Extractor, r#"{"knowledge_triples": []}"#).unwrap(),
            Payload::Triples(vec![])
        );
    }

    #[test]
    fn single_fence_tolerated() {
        let text = "```json\n{\"knowledge_triples\": [{\"Head\": \"a\", \"Relation\": \"r\", \"Tail\": \"b\"}]}\n```";
        let Payload::Triples(t) = parse_contract(TemplateId::Extractor, text).unwrap() else { panic!() };
        assert_eq!(t.len(), 1);
        let two = format!("{text}\n{text}");
        assert!(parse_contract(TemplateId::Extractor, &two).is_err());
    }

    #[test]
    fn first_violating_path() {
        let text = r#"{"knowledge_triples": [{"Head": "a", "Relation": "r", "Tail": "b"}, {"Head": "a", "Tail": "b"}]}"#;
        let err = parse_contract(TemplateId::Extractor, text).unwrap_err();
        assert_eq!(err.path, "$.knowledge_triples[1].Relation");
        let extra = r#"{"input_item": "x", "inferred_related_items": [], "why": "because"}"#;
        assert_eq!(parse_contract(TemplateId::ImpactInferencer, extra).unwrap_err().path, "$.why");
        let empty_steps = r#"{"Test_Objective": "x", "Action_Steps": []}"#;
        assert_eq!(
            parse_contract(TemplateId::TestGenerator, empty_steps).unwrap_err().path,
            "$.Action_Steps"
        );
    }

    #[test]
    fn delta_with_ops() {
        let text = r#"{"new_or_modified_triples": [{"Head": "knife", "Relation": "destroys", "Tail": "onion", "Op": "remove"}], "related_items": ["knife"]}"#;
        let Payload::Delta { triples, related_items } = parse_contract(TemplateId::UpdateParser, text).unwrap() else {
            panic!()
        };
        assert_eq!(triples[0].op, Some(TripleOp::Remove));
        assert_eq!(related_items, ["knife"]);
        let bad_op = text.replace("remove", "upsert");
        assert!(parse_contract(TemplateId::UpdateParser, &bad_op).is_err());
    }
}
