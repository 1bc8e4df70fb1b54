//! Prompt sessions with emulated tool calling.
//!
//! Tools are described in a system message so the template text reaches the
//! model unchanged. The model calls tools by replying with nothing but a
//! fenced `tool` block holding a JSON array of `{"name", "arguments"}`
//! objects; results come back in a user message.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::contract::{parse_contract, Payload};
use super::provider::{ChatMessage, ChatProvider};
use super::templates::{render, TemplateId};
use super::GatewayError;

pub const TOOL_RESULTS_PREFIX: &str = "tool results:";
pub const REASK: &str = "Your previous reply did not match the required format. Output valid JSON only.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParamKind {
    String,
    Integer,
    /// Object with string fields Head, Relation and Tail.
    Triple,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    pub kind: ParamKind,
    pub required: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolSpec {
    pub name: String,
    pub description: String,
    pub params: Vec<ParamSpec>,
}

impl ToolSpec {
    pub fn validate(&self, args: &Value) -> Result<(), String> {
        let obj = args.as_object().ok_or("arguments must be an object")?;
        if let Some(k) = obj.keys().find(|k| !self.params.iter().any(|p| &p.name == *k)) {
            return Err(format!("unknown argument `{k}`"));
        }
        for p in &self.params {
            let Some(v) = obj.get(&p.name) else {
                if p.required {
                    return Err(format!("missing argument `{}`", p.name));
                }
                continue;
            };
            let ok = match p.kind {
                ParamKind::String => v.is_string(),
                ParamKind::Integer => v.is_u64(),
                ParamKind::Triple => v.as_object().is_some_and(|t| {
                    t.len() == 3 && ["Head", "Relation", "Tail"].iter().all(|f| t.get(*f).is_some_and(Value::is_string))
                }),
            };
            if !ok {
                return Err(format!("argument `{}` is not a {:?}", p.name, p.kind));
            }
        }
        Ok(())
    }
}

/// Executes tool calls on behalf of a session.
pub trait ToolHost {
    fn specs(&self) -> Vec<ToolSpec>;
    fn invoke(&mut self, name: &str, args: &Value) -> Result<Value, String>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolInvocation {
    pub name: String,
    pub arguments: Value,
    pub result: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Completion {
    pub text: String,
    pub tool_invocations: Vec<ToolInvocation>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reply {
    pub payload: Payload,
    pub completion: Completion,
}

#[derive(Debug, Clone, Deserialize)]
struct CallRequest {
    name: String,
    #[serde(default)]
    arguments: Value,
}

/// Parses a reply that is exactly one fenced `tool` block.
pub fn parse_tool_block(text: &str) -> Option<Result<Vec<Value>, String>> {
    let body = text.trim().strip_prefix("```tool")?.strip_suffix("```")?;
    Some(match serde_json::from_str::<Value>(body.trim()) {
        Ok(Value::Array(calls)) => Ok(calls),
        Ok(single @ Value::Object(_)) => Ok(vec![single]),
        Ok(_) => Err("tool block must hold an object or an array".into()),
        Err(e) => Err(e.to_string()),
    })
}

pub fn tool_block(calls: &[(&str, Value)]) -> String {
    let arr: Vec<Value> = calls.iter().map(|(n, a)| json!({"name": n, "arguments": a})).collect();
    format!("```tool\n{}\n```", serde_json::to_string(&arr).expect("json"))
}

pub fn describe_tools(specs: &[ToolSpec]) -> String {
    let mut s = String::from(
        "Tools are available. To call tools, reply with only a fenced block tagged `tool` holding a JSON array \
         of {\"name\": ..., \"arguments\": {...}} objects. Results arrive in a message starting with \
         `tool results:`. When done, reply with the final answer only.\nTools:\n",
    );
    for t in specs {
        let params: Vec<String> = t
            .params
            .iter()
            .map(|p| format!("{}: {:?}{}", p.name, p.kind, if p.required { "" } else { "?" }))
            .collect();
        s.push_str(&format!("- {}({}): {}\n", t.name, params.join(", "), t.description));
    }
    s
}

/// Gateway over one provider. Stateless between calls.
#[derive(Clone)]
pub struct Gateway {
    provider: Arc<dyn ChatProvider>,
    pub max_tool_rounds: usize,
}

impl Gateway {
    pub fn new(provider: Arc<dyn ChatProvider>) -> Self {
        Self {
            provider,
            max_tool_rounds: 8,
        }
    }

    pub fn complete(&self, prompt: &str, tools: Option<&mut dyn ToolHost>) -> Result<Completion, GatewayError> {
        let mut messages = Vec::new();
        let mut tools = tools;
        if let Some(host) = tools.as_deref() {
            messages.push(ChatMessage::system(describe_tools(&host.specs())));
        }
        messages.push(ChatMessage::user(prompt));
        let mut invocations = Vec::new();
        let text = self.converse(&mut messages, &mut tools, &mut invocations)?;
        Ok(Completion {
            text,
            tool_invocations: invocations,
        })
    }

    fn converse(
        &self,
        messages: &mut Vec<ChatMessage>,
        tools: &mut Option<&mut dyn ToolHost>,
        invocations: &mut Vec<ToolInvocation>,
    ) -> Result<String, GatewayError> {
        let mut rounds = 0;
        loop {
            let reply = self.provider.chat(messages)?;
            let Some(calls) = parse_tool_block(&reply) else {
                messages.push(ChatMessage::assistant(reply.clone()));
                return Ok(reply);
            };
            rounds += 1;
            if rounds > self.max_tool_rounds {
                return Err(GatewayError::ToolRounds(self.max_tool_rounds));
            }
            let host = tools.as_deref_mut().ok_or_else(|| GatewayError::UnknownTool("<no tools registered>".into()))?;
            let specs: BTreeMap<String, ToolSpec> = host.specs().into_iter().map(|s| (s.name.clone(), s)).collect();
            let calls = calls.map_err(|m| GatewayError::ToolArguments {
                tool: "<block>".into(),
                message: m,
            })?;
            let mut results = Vec::new();
            for raw in calls {
                let call: CallRequest = serde_json::from_value(raw).map_err(|e| GatewayError::ToolArguments {
                    tool: "<call>".into(),
                    message: e.to_string(),
                })?;
                let spec = specs.get(&call.name).ok_or_else(|| GatewayError::UnknownTool(call.name.clone()))?;
                spec.validate(&call.arguments).map_err(|message| GatewayError::ToolArguments {
                    tool: call.name.clone(),
                    message,
                })?;
                let result = match host.invoke(&call.name, &call.arguments) {
                    Ok(v) => v,
                    Err(e) => json!({ "error": e }),
                };
                results.push(json!({"name": call.name, "result": result}));
                invocations.push(ToolInvocation {
                    name: call.name,
                    arguments: call.arguments,
                    result,
                });
            }
            messages.push(ChatMessage::assistant(reply));
            messages.push(ChatMessage::user(format!(
                "{TOOL_RESULTS_PREFIX}\n{}",
                serde_json::to_string(&results).expect("json")
            )));
        }
    }

    /// Renders, completes and parses; one re-ask on a schema violation.
    pub fn ask(
        &self,
        id: TemplateId,
        bindings: &BTreeMap<&str, String>,
        tools: Option<&mut dyn ToolHost>,
    ) -> Result<Reply, GatewayError> {
        let prompt = render(id, bindings)?;
        let mut tools = tools;
        let mut messages = Vec::new();
        if let Some(host) = tools.as_deref() {
            messages.push(ChatMessage::system(describe_tools(&host.specs())));
        }
        messages.push(ChatMessage::user(prompt));
        let mut invocations = Vec::new();
        let mut text = self.converse(&mut messages, &mut tools, &mut invocations)?;
        let payload = match parse_contract(id, &text) {
            Ok(p) => p,
            Err(first) => {
                log::warn!("{id} reply violated its contract ({first}); asking again");
                messages.push(ChatMessage::user(REASK));
                text = self.converse(&mut messages, &mut tools, &mut invocations)?;
                parse_contract(id, &text)?
            }
        };
        Ok(Reply {
            payload,
            completion: Completion {
                text,
                tool_invocations: invocations,
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::provider::ProviderError;
    use std::sync::Mutex;

    /// Replies from a fixed queue and records what it was sent.
    struct Scripted {
        replies: Mutex<Vec<String>>,
        seen: Mutex<Vec<Vec<ChatMessage>>>,
    }

    impl Scripted {
        fn new(replies: &[&str]) -> Arc<Self> {
            Arc::new(Self {
                replies: Mutex::new(replies.iter().rev().map(|s| s.to_string()).collect()),
                seen: Mutex::new(Vec::new()),
            })
        }
    }

    impl ChatProvider for Scripted {
        fn chat(&self, messages: &[ChatMessage]) -> Result<String, ProviderError> {
            self.seen.lock().unwrap().push(messages.to_vec());
            self.replies.lock().unwrap().pop().ok_or(ProviderError::Timeout)
        }
    }

    struct Echo;
    impl ToolHost for Echo {
        fn specs(&self) -> Vec<ToolSpec> {
            vec![ToolSpec {
                name: "echo".into(),
                description: "returns its input".into(),
                params: vec![ParamSpec {
                    name: "x".into(),
                    kind: ParamKind::String,
                    required: true,
                }],
            }]
        }
        fn invoke(&mut self, _: &str, args: &Value) -> Result<Value, String> {
            Ok(args["x"].clone())
        }
    }

    fn bind(item: &str) -> BTreeMap<&'static str, String> {
        BTreeMap::from([("input_item", item.to_string())])
    }

    #[test]
    fn tool_invocations_in_order() {
        let call = tool_block(&[("echo", json!({"x": "a"})), ("echo", json!({"x": "b"}))]);
        let p = Scripted::new(&[&call, r#"{"input_item": "a", "inferred_related_items": ["b"]}"#]);
        let gw = Gateway::new(p.clone());
        let r = gw.ask(TemplateId::ImpactInferencer, &bind("a"), Some(&mut Echo)).unwrap();
        let names: Vec<&Value> = r.completion.tool_invocations.iter().map(|i| &i.result).collect();
        assert_eq!(names, [&json!("a"), &json!("b")]);
        let seen = p.seen.lock().unwrap();
        assert!(seen[1].last().unwrap().content.starts_with(TOOL_RESULTS_PREFIX));
        assert_eq!(seen[0][1].content, render(TemplateId::ImpactInferencer, &bind("a")).unwrap());
    }

    #[test]
    fn one_reask_then_schema_error() {
        let p = Scripted::new(&["not json", r#"{"input_item": "a", "inferred_related_items": []}"#]);
        assert!(Gateway::new(p.clone()).ask(TemplateId::ImpactInferencer, &bind("a"), None).is_ok());
        assert_eq!(p.seen.lock().unwrap()[1].last().unwrap().content, REASK);
        let p = Scripted::new(&["not json", "still not"]);
        let err = Gateway::new(p).ask(TemplateId::ImpactInferencer, &bind("a"), None).unwrap_err();
        assert!(matches!(err, GatewayError::Schema(_)));
    }

    #[test]
    fn round_cap_is_distinct() {
        let call = tool_block(&[("echo", json!({"x": "a"}))]);
        let replies: Vec<&str> = std::iter::repeat(call.as_str()).take(20).collect();
        let mut gw = Gateway::new(Scripted::new(&replies));
        gw.max_tool_rounds = 3;
        let err = gw.complete("hi", Some(&mut Echo)).unwrap_err();
        assert!(matches!(err, GatewayError::ToolRounds(3)));
    }

    #[test]
    fn bad_arguments_rejected() {
        let call = tool_block(&[("echo", json!({"y": "a"}))]);
        let err = Gateway::new(Scripted::new(&[&call])).complete("hi", Some(&mut Echo)).unwrap_err();
        assert!(matches!(err, GatewayError::ToolArguments { .. }));
        let call = tool_block(&[("nope", json!({}))]);
        let err = Gateway::new(Scripted::new(&[&call])).complete("hi", Some(&mut Echo)).unwrap_err();
        assert!(matches!(err, GatewayError::UnknownTool(n) if n == "nope"));
    }
}
