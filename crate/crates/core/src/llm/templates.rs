//! The four prompt templates and placeholder rendering.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::GatewayError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TemplateId {
    Extractor,
    UpdateParser,
    ImpactInferencer,
    TestGenerator,
}

impl TemplateId {
    pub const ALL: [TemplateId; 4] = [
        TemplateId::Extractor,
        TemplateId::UpdateParser,
        TemplateId::ImpactInferencer,
        TemplateId::TestGenerator,
    ];

    pub fn body(self) -> &'static str {
        let raw = match self {
            TemplateId::Extractor => include_str!("../../data/prompts/extractor.txt"),
            TemplateId::UpdateParser => include_str!("../../data/prompts/update_parser.txt"),
            TemplateId::ImpactInferencer => include_str!("../../data/prompts/impact_inferencer.txt"),
            TemplateId::TestGenerator => include_str!("../../data/prompts/test_generator.txt"),
        };
        raw.trim_end_matches('\n')
    }

    /// Placeholder names in order of first appearance.
    pub fn placeholders(self) -> Vec<String> {
        let mut seen = BTreeSet::new();
        placeholder_re()
            .captures_iter(self.body())
            .map(|c| c[1].to_string())
            .filter(|p| seen.insert(p.clone()))
            .collect()
    }

    /// Identifies which template a rendered prompt came from.
    pub fn detect(prompt: &str) -> Option<TemplateId> {
        Self::ALL.into_iter().find(|t| {
            let first = t.body().lines().next().unwrap_or_default();
            prompt.starts_with(first)
        })
    }
}

impl fmt::Display for TemplateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

fn placeholder_re() -> Regex {
    Regex::new(r"\{([a-z_]+)\}").expect("static regex")
}

pub fn render(id: TemplateId, bindings: &BTreeMap<&str, String>) -> Result<String, GatewayError> {
    let body = id.body();
    if let Some(missing) = id.placeholders().into_iter().find(|p| !bindings.contains_key(p.as_str())) {
        return Err(GatewayError::UnboundPlaceholder(missing));
    }
    Ok(placeholder_re()
        .replace_all(body, |c: &regex::Captures<'_>| bindings[&c[1]].clone())
        .into_owned())
}

/// Recovers placeholder values from a prompt rendered from `id`.
///
/// Works because every template's placeholders are separated by fixed text
/// and values never contain the text that follows their slot.
pub fn unrender(id: TemplateId, prompt: &str) -> Option<BTreeMap<String, String>> {
    let body = id.body();
    let re = placeholder_re();
    let mut out = BTreeMap::new();
    let mut rest = prompt;
    let mut cursor = 0;
    let slots: Vec<_> = re.captures_iter(body).collect();
    for (i, c) in slots.iter().enumerate() {
        let m = c.get(0).expect("whole match");
        let literal = &body[cursor..m.start()];
        rest = rest.strip_prefix(literal)?;
        let next_literal = match slots.get(i + 1) {
            Some(n) => &body[m.end()..n.get(0).expect("whole match").start()],
            None => &body[m.end()..],
        };
        let value = if next_literal.is_empty() {
            rest
        } else if slots.get(i + 1).is_none() {
            rest.strip_suffix(next_literal)?
        } else {
            &rest[..rest.rfind(next_literal)?]
        };
        out.insert(c[1].to_string(), value.to_string());
        rest = &rest[value.len()..];
        cursor = m.end();
    }
    (rest == &body[cursor..]).then_some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(pairs: &[(&'static str, &str)]) -> BTreeMap<&'static str, String> {
        pairs.iter().map(|(k, v)| (*k, v.to_string())).collect()
    }

    #[test]
    fn placeholder_sets() {
        assert_eq!(TemplateId::Extractor.placeholders(), ["input_text", "relations"]);
        assert_eq!(TemplateId::UpdateParser.placeholders(), ["update_log"]);
        assert_eq!(TemplateId::ImpactInferencer.placeholders(), ["input_item"]);
        assert_eq!(TemplateId::TestGenerator.placeholders(), ["impact_description"]);
    }

    #[test]
    fn parser_prompt_ends_with_log() {
        let log = "## v1 -> v2\n### Features\n- x";
        let p = render(TemplateId::UpdateParser, &b(&[("update_log", log)])).unwrap();
        assert!(p.ends_with(log));
        assert!(p.starts_with("You are a game update log analyzer."));
        assert_eq!(p, render(TemplateId::UpdateParser, &b(&[("update_log", log)])).unwrap());
    }

    #[test]
    fn missing_binding_is_an_error() {
        let err = render(TemplateId::Extractor, &b(&[("input_text", "hi")])).unwrap_err();
        assert!(matches!(err, GatewayError::UnboundPlaceholder(p) if p == "relations"));
    }

    #[test]
    fn unrender_inverts_render() {
        let binds = b(&[("input_text", "Touching the portal."), ("relations", "triggers, transitions_to")]);
        let p = render(TemplateId::Extractor, &binds).unwrap();
        assert_eq!(TemplateId::detect(&p), Some(TemplateId::Extractor));
        let back = unrender(TemplateId::Extractor, &p).unwrap();
        assert_eq!(back["input_text"], "Touching the portal.");
        assert_eq!(back["relations"], "triggers, transitions_to");
    }

    #[test]
    fn bodies_keep_json_braces() {
        assert!(TemplateId::TestGenerator.body().contains("\"Action_Steps\": [\"...\",]"));
        assert!(TemplateId::Extractor.body().contains("output an empty array."));
    }
}
