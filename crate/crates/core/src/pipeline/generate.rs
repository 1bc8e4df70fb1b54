//! Test-case generation and the per-update driver.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::delta::{derive_delta, sync_graph, GraphDelta, SyncReport};
use super::describe::{mentions, ImpactDescription, KnowledgeLine};
use super::impact::{infer_impact, infer_impact_via, prerequisite_knowledge, select_tasks, ImpactMap};
use super::{EntryCategory, PipelineError, UpdateEntry, UpdateLog};
use crate::env::{Environment, TaskSpec};
use crate::extract::RuleConfig;
use crate::kg::{Direction, KnowledgeGraph, NodeId, NodeKind, TraversalPolicy};
use crate::llm::{render, Completion, Gateway, Payload, TemplateId, ToolInvocation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenerationMode {
    /// Graph-guided: parse the log, sync, traverse, select tasks.
    #[default]
    Klpeg,
    /// Ablation: every gameplay entry against every task, no graph.
    NoKg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub max_hops: usize,
    pub direction: Direction,
    pub max_tasks_per_entry: usize,
    /// Also run the impact inferencer and require it to match the traversal.
    pub verify_impact: bool,
    pub mode: GenerationMode,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            max_hops: 2,
            direction: Direction::Both,
            max_tasks_per_entry: 2,
            verify_impact: true,
            mode: GenerationMode::Klpeg,
        }
    }
}

impl PipelineConfig {
    pub fn policy(&self) -> Result<TraversalPolicy, PipelineError> {
        Ok(TraversalPolicy::new(self.max_hops, self.direction)?)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestCase {
    pub id: String,
    pub update: u8,
    pub version: String,
    pub entry_index: usize,
    pub category: EntryCategory,
    pub entry_text: String,
    pub task: Option<String>,
    pub objective: String,
    pub steps: Vec<String>,
    pub target_elements: Vec<String>,
    pub impacted_elements: Vec<String>,
}

/// One gateway exchange, kept for review.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub update: u8,
    pub entry_index: Option<usize>,
    pub template: TemplateId,
    pub prompt: String,
    pub reply: String,
    pub tool_invocations: Vec<ToolInvocation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryImpact {
    pub entry_index: usize,
    pub items: Vec<String>,
    pub impacted: BTreeMap<String, usize>,
    pub tasks: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpdateOutcome {
    pub update: u8,
    pub from_version: String,
    pub to_version: String,
    pub delta: Option<GraphDelta>,
    pub sync: Option<SyncReport>,
    pub entries: Vec<EntryImpact>,
    pub tests: Vec<TestCase>,
    pub audit: Vec<AuditRecord>,
}

struct Generator<'a> {
    env: &'a Environment,
    gateway: &'a Gateway,
    update: u8,
    version: String,
    actions: Vec<String>,
    audit: Vec<AuditRecord>,
}

impl Generator<'_> {
    fn record(&mut self, entry: Option<usize>, template: TemplateId, prompt: String, c: Completion) {
        self.audit.push(AuditRecord {
            update: self.update,
            entry_index: entry,
            template,
            prompt,
            reply: c.text,
            tool_invocations: c.tool_invocations,
        });
    }

    /// First step outside the vocabulary, normalised where possible.
    fn invalid_step(&self, steps: &[String]) -> Option<String> {
        steps.iter().find_map(|s| match self.env.parse_action(s) {
            Ok(a) if self.actions.contains(&a.to_string()) => None,
            _ => Some(s.clone()),
        })
    }

    fn ask_case(&mut self, entry: usize, text: String) -> Result<(String, Vec<String>), PipelineError> {
        let bindings = BTreeMap::from([("impact_description", text)]);
        let prompt = render(TemplateId::TestGenerator, &bindings)?;
        let reply = self.gateway.ask(TemplateId::TestGenerator, &bindings, None)?;
        self.record(Some(entry), TemplateId::TestGenerator, prompt, reply.completion);
        let Payload::TestCase(tc) = reply.payload else {
            unreachable!("generator template parses to a test case")
        };
        Ok((tc.objective, tc.steps))
    }

    /// Generates one case, re-asking once when a step is not an available
    /// action.
    fn case(&mut self, entry: usize, desc: &ImpactDescription) -> Result<(String, Vec<String>), PipelineError> {
        let (objective, steps) = self.ask_case(entry, desc.render())?;
        let Some(bad) = self.invalid_step(&steps) else {
            return Ok((objective, self.normalise(&steps)));
        };
        log::warn!("generated step `{bad}` is not an available action; asking again");
        let retry = format!("{}\nNote: `{bad}` is not one of the available actions.", desc.render());
        let (objective, steps) = self.ask_case(entry, retry)?;
        match self.invalid_step(&steps) {
            Some(step) => Err(PipelineError::VocabularyViolation { step }),
            None => Ok((objective, self.normalise(&steps))),
        }
    }

    fn normalise(&self, steps: &[String]) -> Vec<String> {
        steps
            .iter()
            .map(|s| self.env.parse_action(s).expect("validated").to_string())
            .collect()
    }
}

fn gameplay(log: &UpdateLog) -> impl Iterator<Item = (usize, &UpdateEntry)> {
    log.entries
        .iter()
        .enumerate()
        .filter(|(_, e)| e.category != EntryCategory::Improvement)
}

fn slug(s: &str) -> String {
    s.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .collect::<Vec<_>>()
        .join("_")
}

/// The delta's items that an entry is about: those it mentions, else the
/// mentioned endpoints of changed triples, else all of them.
fn entry_items(entry: &UpdateEntry, delta: &GraphDelta) -> Vec<NodeId> {
    let named: Vec<NodeId> = delta
        .related_items
        .iter()
        .filter(|n| mentions(&entry.text, n.as_str()))
        .cloned()
        .collect();
    if !named.is_empty() {
        return named;
    }
    let mut ends: Vec<NodeId> = Vec::new();
    for c in &delta.changes {
        for n in [&c.triple.head, &c.triple.tail] {
            if mentions(&entry.text, n.as_str()) && !ends.contains(n) {
                ends.push(n.clone());
            }
        }
    }
    if ends.is_empty() {
        delta.related_items.clone()
    } else {
        ends
    }
}

/// Runs one update: parse, sync, then generate a case per selected task
/// for each gameplay entry.
pub fn run_update(
    env: &Environment,
    graph: &mut KnowledgeGraph,
    gateway: &Gateway,
    update: u8,
    log: &UpdateLog,
    config: &PipelineConfig,
) -> Result<UpdateOutcome, PipelineError> {
    let actions: Vec<String> = env.vocabulary(&log.to_version)?.iter().map(ToString::to_string).collect();
    let mut gen = Generator {
        env,
        gateway,
        update,
        version: log.to_version.clone(),
        actions,
        audit: Vec::new(),
    };
    let mut outcome = UpdateOutcome {
        update,
        from_version: log.from_version.clone(),
        to_version: log.to_version.clone(),
        delta: None,
        sync: None,
        entries: Vec::new(),
        tests: Vec::new(),
        audit: Vec::new(),
    };
    match config.mode {
        GenerationMode::NoKg => no_kg(&mut gen, log, &env.catalog.tasks, &mut outcome)?,
        GenerationMode::Klpeg => klpeg(&mut gen, graph, log, config, &mut outcome)?,
    }
    outcome.audit = gen.audit;
    Ok(outcome)
}

fn no_kg(
    gen: &mut Generator<'_>,
    log: &UpdateLog,
    tasks: &[TaskSpec],
    out: &mut UpdateOutcome,
) -> Result<(), PipelineError> {
    for (idx, entry) in gameplay(log) {
        for task in tasks {
            let desc = ImpactDescription {
                task: Some(task.name.clone()),
                entry_category: entry.category.to_string(),
                entry_text: entry.text.clone(),
                actions: gen.actions.clone(),
                ..Default::default()
            };
            let (objective, steps) = gen.case(idx, &desc)?;
            out.tests.push(TestCase {
                id: format!("u{}-e{}-{}", gen.update, idx, slug(&task.name)),
                update: gen.update,
                version: gen.version.clone(),
                entry_index: idx,
                category: entry.category,
                entry_text: entry.text.clone(),
                task: Some(task.name.clone()),
                objective,
                steps,
                target_elements: Vec::new(),
                impacted_elements: Vec::new(),
            });
        }
    }
    Ok(())
}

fn klpeg(
    gen: &mut Generator<'_>,
    graph: &mut KnowledgeGraph,
    log: &UpdateLog,
    config: &PipelineConfig,
    out: &mut UpdateOutcome,
) -> Result<(), PipelineError> {
    let policy = config.policy()?;
    let vocab = RuleConfig::shipped(gen.env.name).relations;
    let prompt = render(TemplateId::UpdateParser, &BTreeMap::from([("update_log", log.source.clone())]))?;
    let (delta, completion) = derive_delta(gen.gateway, graph, log, &vocab)?;
    gen.record(None, TemplateId::UpdateParser, prompt, completion);
    out.sync = Some(sync_graph(graph, &delta, &log.to_version));
    let focus: BTreeSet<NodeId> = delta
        .changes
        .iter()
        .flat_map(|c| [c.triple.head.clone(), c.triple.tail.clone()])
        .chain(delta.related_items.iter().cloned())
        .collect();

    for (idx, entry) in gameplay(log) {
        let items = entry_items(entry, &delta);
        let impact: ImpactMap = infer_impact(graph, &items, &policy);
        if config.verify_impact {
            for item in items.iter().filter(|i| graph.contains_node(i)) {
                let prompt = render(TemplateId::ImpactInferencer, &BTreeMap::from([("input_item", item.to_string())]))?;
                let (_, completion) = infer_impact_via(gen.gateway, graph, item, &policy)?;
                gen.record(Some(idx), TemplateId::ImpactInferencer, prompt, completion);
            }
        }
        let tasks: Vec<&TaskSpec> = select_tasks(graph, &gen.env.catalog.tasks, &impact, &focus)
            .into_iter()
            .take(config.max_tasks_per_entry)
            .map(|(t, _)| t)
            .collect();
        out.entries.push(EntryImpact {
            entry_index: idx,
            items: items.iter().map(ToString::to_string).collect(),
            impacted: impact.iter().map(|(n, d)| (n.to_string(), *d)).collect(),
            tasks: tasks.iter().map(|t| t.name.clone()).collect(),
        });

        let targets: Vec<NodeId> = items.iter().filter(|i| impact.get(*i) == Some(&0)).cloned().collect();
        let impacted: Vec<String> = impact
            .keys()
            .filter(|n| !targets.contains(n) && graph.kind_of(n) == Some(NodeKind::Element))
            .map(ToString::to_string)
            .collect();
        let task_slots: Vec<Option<&TaskSpec>> = if tasks.is_empty() {
            vec![None]
        } else {
            tasks.into_iter().map(Some).collect()
        };
        for task in task_slots {
            let mut seeds = targets.clone();
            if let Some(node) = task.and_then(|t| NodeId::new(&t.name).ok()).filter(|n| graph.contains_node(n)) {
                seeds.push(node);
            }
            let knowledge: Vec<KnowledgeLine> = prerequisite_knowledge(graph, &seeds)
                .into_iter()
                .map(|t| KnowledgeLine {
                    head: t.head.to_string(),
                    relation: t.relation.label().to_string(),
                    tail: t.tail.to_string(),
                })
                .collect();
            let desc = ImpactDescription {
                task: task.map(|t| t.name.clone()),
                entry_category: entry.category.to_string(),
                entry_text: entry.text.clone(),
                targets: targets.iter().map(ToString::to_string).collect(),
                impacted: Some(impacted.clone()),
                knowledge: Some(knowledge),
                actions: gen.actions.clone(),
            };
            let (objective, steps) = gen.case(idx, &desc)?;
            let suffix = task.map_or_else(|| "entry".to_string(), |t| slug(&t.name));
            out.tests.push(TestCase {
                id: format!("u{}-e{}-{}", gen.update, idx, suffix),
                update: gen.update,
                version: gen.version.clone(),
                entry_index: idx,
                category: entry.category,
                entry_text: entry.text.clone(),
                task: task.map(|t| t.name.clone()),
                objective,
                steps,
                target_elements: desc.targets.clone(),
                impacted_elements: impacted.clone(),
            });
        }
    }
    out.delta = Some(delta);
    Ok(())
}

/// All updates in order, starting from `seed_graph`. Returns the outcomes
/// and the graph as of the last update.
pub fn run_pipeline(
    env: &Environment,
    seed_graph: &KnowledgeGraph,
    gateway: &Gateway,
    config: &PipelineConfig,
) -> Result<(Vec<UpdateOutcome>, KnowledgeGraph), PipelineError> {
    let mut graph = seed_graph.clone();
    let mut outcomes = Vec::new();
    for (i, log) in env.catalog.updates.iter().enumerate() {
        let update = u8::try_from(i + 1).expect("fewer than 256 updates");
        outcomes.push(run_update(env, &mut graph, gateway, update, log, config)?);
    }
    Ok((outcomes, graph))
}
