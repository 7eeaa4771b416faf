//! Policy and evaluator interfaces used by the tree search.
//!
//! A [`Policy`] proposes candidate next actions for an agent state, and an
//! [`Evaluator`] turns a state into a reward in `[0, 1]` with a short
//! rationale. Both receive the same deterministic prompt text, rendered by
//! [`render_prompt`], so scripted and remote implementations are
//! interchangeable.

mod remote;
mod scripted;
mod task;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::PropertyGraph;
use crate::tools::{cap_text, fnv1a, manifest, Observation, ToolInvocation, ToolSpec};

pub use remote::{
    parse_action_reply, parse_evaluation_reply, RemoteConfig, RemoteEvaluator, RemotePolicy,
    ENV_KEY, ENV_URL,
};
pub use scripted::{
    AdversarialKind, AdversarialPolicy, DegeneratePolicy, DiversifyingPolicy, QuestionPolicy,
    TablePolicy,
};
pub use task::{Constraint, Level, PlanningQuestion, QuestionSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Action {
    Tool(ToolInvocation),
    Answer { text: String },
}

impl Action {
    pub fn answer(text: impl Into<String>) -> Self {
        Action::Answer { text: text.into() }
    }

    pub fn tool_name(&self) -> Option<&str> {
        match self {
            Action::Tool(t) => Some(&t.tool),
            Action::Answer { .. } => None,
        }
    }

    /// Equality that ignores the step index of tool calls.
    pub fn same_as(&self, other: &Action) -> bool {
        match (self, other) {
            (Action::Tool(a), Action::Tool(b)) => a.same_call(b),
            (Action::Answer { text: a }, Action::Answer { text: b }) => a.trim() == b.trim(),
            _ => false,
        }
    }

    fn render(&self) -> String {
        match self {
            Action::Tool(t) => format!(
                "{} {}",
                t.tool,
                serde_json::to_string(&t.args).expect("json args serialize")
            ),
            Action::Answer { text } => format!("answer {text}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionCandidate {
    pub thought: String,
    pub action: Action,
}

impl ActionCandidate {
    pub fn new(thought: impl Into<String>, action: Action) -> Self {
        ActionCandidate {
            thought: thought.into(),
            action,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub thought: String,
    pub action: Action,
    /// Absent for answer steps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observation: Option<Observation>,
}

/// The question plus every step taken so far.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AgentState {
    pub question: String,
    pub steps: Vec<Step>,
}

impl AgentState {
    pub fn new(question: impl Into<String>) -> Self {
        AgentState {
            question: question.into(),
            steps: Vec::new(),
        }
    }

    pub fn with_step(&self, step: Step) -> Self {
        let mut next = self.clone();
        next.steps.push(step);
        next
    }

    pub fn answer(&self) -> Option<&str> {
        match self.steps.last().map(|s| &s.action) {
            Some(Action::Answer { text }) => Some(text),
            _ => None,
        }
    }

    /// Length of the trailing run of calls to the same tool.
    pub fn same_tool_run(&self) -> usize {
        let Some(last) = self.steps.last().and_then(|s| s.action.tool_name()) else {
            return 0;
        };
        self.steps
            .iter()
            .rev()
            .take_while(|s| s.action.tool_name() == Some(last))
            .count()
    }

    /// Step-by-step transcript; each step appends text and never edits what
    /// came before.
    pub fn transcript(&self, summary_cap: usize) -> String {
        let mut out = String::new();
        for (i, s) in self.steps.iter().enumerate() {
            let n = i + 1;
            let _ = writeln!(out, "Thought {n}: {}", s.thought.trim());
            let _ = writeln!(out, "Action {n}: {}", s.action.render());
            if let Some(obs) = &s.observation {
                let status = if obs.success { "ok" } else { "failed" };
                let _ = writeln!(
                    out,
                    "Observation {n} [{status}]: {}",
                    cap_text(obs.summary.trim(), summary_cap)
                );
            }
        }
        out
    }

    pub fn fingerprint(&self) -> u64 {
        let mut text = self.question.clone();
        text.push('\n');
        text.push_str(&self.transcript(usize::MAX));
        fnv1a(text.as_bytes())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskFamily {
    SiteRecommendation,
    ConditionalSiting,
    FunctionPlanning,
}

impl TaskFamily {
    pub fn of_question(question: &str) -> TaskFamily {
        let q = question.to_lowercase();
        if q.contains("function") && (q.contains("assign") || q.contains("plan")) {
            TaskFamily::FunctionPlanning
        } else if q.contains(" within ") || q.contains(" adjacent to ") || q.contains(" near ") {
            TaskFamily::ConditionalSiting
        } else {
            TaskFamily::SiteRecommendation
        }
    }

    fn instructions(self) -> &'static str {
        match self {
            TaskFamily::SiteRecommendation => {
                "Recommend sites for the facility in the question. Gather candidates from the graph, rank them on the listed criteria and reply with the best ids."
            }
            TaskFamily::ConditionalSiting => {
                "Recommend sites that satisfy the spatial condition in the question. Restrict candidates to the condition before ranking them."
            }
            TaskFamily::FunctionPlanning => {
                "Choose one of the 15 grid functions for the target grid. Inspect its planning context first, then answer with a function name."
            }
        }
    }
}

/// Few-shot example blocks, one per task family.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FewShot {
    pub site_recommendation: String,
    pub conditional_siting: String,
    pub function_planning: String,
}

impl Default for FewShot {
    fn default() -> Self {
        FewShot {
            site_recommendation: include_str!("../../assets/fewshot/site_recommendation.txt").into(),
            conditional_siting: include_str!("../../assets/fewshot/conditional_siting.txt").into(),
            function_planning: include_str!("../../assets/fewshot/function_planning.txt").into(),
        }
    }
}

impl FewShot {
    /// Reads `<family>.txt` files from a directory; missing files keep the
    /// bundled text.
    pub fn load_dir(dir: impl AsRef<Path>) -> std::io::Result<FewShot> {
        let dir = dir.as_ref();
        if !dir.is_dir() {
            return Err(std::io::Error::new(
                std::io::ErrorKind::NotFound,
                format!("{} is not a directory", dir.display()),
            ));
        }
        let mut shots = FewShot::default();
        for (name, slot) in [
            ("site_recommendation", &mut shots.site_recommendation),
            ("conditional_siting", &mut shots.conditional_siting),
            ("function_planning", &mut shots.function_planning),
        ] {
            let path = dir.join(format!("{name}.txt"));
            if path.exists() {
                *slot = std::fs::read_to_string(path)?;
            }
        }
        Ok(shots)
    }

    pub fn for_family(&self, family: TaskFamily) -> &str {
        match family {
            TaskFamily::SiteRecommendation => &self.site_recommendation,
            TaskFamily::ConditionalSiting => &self.conditional_siting,
            TaskFamily::FunctionPlanning => &self.function_planning,
        }
    }
}

/// Static parts of every prompt: graph schema, tool manifest and examples.
#[derive(Debug, Clone, PartialEq)]
pub struct PromptContext {
    pub schema: String,
    pub tools: Vec<ToolSpec>,
    pub fewshot: FewShot,
    pub summary_cap: usize,
}

/// Lists entity kinds, relations and the attribute registry with counts.
pub fn schema_summary(graph: &PropertyGraph) -> String {
    let stats = graph.stats();
    let mut out = String::from("Entity kinds:");
    for (k, n) in &stats.entities_by_kind {
        let _ = write!(out, " {k} ({n})");
    }
    out.push_str("\nRelations:");
    for (r, n) in &stats.triples_by_relation {
        let _ = write!(out, " {r} ({n})");
    }
    out.push_str("\nAttributes:");
    for (name, def) in graph.attribute_defs() {
        match &def.unit {
            Some(u) => {
                let _ = write!(out, " {name}:{:?}[{u}]", def.kind);
            }
            None => {
                let _ = write!(out, " {name}:{:?}", def.kind);
            }
        }
    }
    out
}

impl PromptContext {
    pub fn new(graph: &PropertyGraph) -> Self {
        PromptContext {
            schema: schema_summary(graph),
            tools: manifest(),
            fewshot: FewShot::default(),
            summary_cap: crate::tools::DEFAULT_SUMMARY_CAP,
        }
    }

    pub fn with_fewshot(mut self, fewshot: FewShot) -> Self {
        self.fewshot = fewshot;
        self
    }
}

/// Renders the full prompt for a state. With no steps the text ends after
/// the example block; every step then appends to it.
pub fn render_prompt(ctx: &PromptContext, state: &AgentState) -> String {
    let family = TaskFamily::of_question(&state.question);
    let mut out = String::new();
    let _ = writeln!(out, "# Task\n{}\n", family.instructions());
    let _ = writeln!(out, "# Question\n{}\n", state.question.trim());
    let _ = writeln!(out, "# Graph schema\n{}\n", ctx.schema.trim());
    out.push_str("# Tools\n");
    for t in &ctx.tools {
        let args: Vec<String> = t
            .args
            .iter()
            .map(|a| {
                let kind = serde_json::to_value(a.kind).expect("arg kind serializes");
                format!(
                    "{}: {}{}",
                    a.name,
                    kind.as_str().unwrap_or_default(),
                    if a.required { "" } else { "?" }
                )
            })
            .collect();
        let _ = writeln!(out, "- {}({}): {}", t.name, args.join(", "), t.description);
    }
    out.push_str(
        "Reply with fenced json blocks, each {\"thought\": ..., \"tool\": ..., \"args\": {...}} or {\"thought\": ..., \"answer\": \"ANSWER: ...\"}.\n\n",
    );
    let _ = write!(out, "# Examples\n{}", ctx.fewshot.for_family(family).trim_end());
    out.push('\n');
    if !state.steps.is_empty() {
        out.push_str("\n# Transcript\n");
        out.push_str(&state.transcript(ctx.summary_cap));
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyRequest<'a> {
    pub state: &'a AgentState,
    pub prompt: String,
    pub k: usize,
    pub temperature: f64,
}

impl PolicyRequest<'_> {
    pub fn fingerprint(&self) -> u64 {
        fnv1a(self.prompt.as_bytes())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolicyError {
    #[error("transport: {0}")]
    Transport(String),
    #[error("malformed reply: {0}")]
    Malformed(String),
    #[error("{0}")]
    Scripted(String),
}

pub trait Policy: Send + Sync {
    fn name(&self) -> &str;
    fn propose(&self, request: &PolicyRequest<'_>) -> Result<Vec<ActionCandidate>, PolicyError>;
}

/// Per-step success signal handed to evaluators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepFeedback {
    pub step: usize,
    pub tool: Option<String>,
    pub success: bool,
    pub result_count: Option<usize>,
}

/// One executed action remembered across the search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryEntry {
    pub state: u64,
    pub action: Action,
    pub observation: Option<Observation>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationRequest<'a> {
    pub state: &'a AgentState,
    pub prompt: String,
    pub feedback: Vec<StepFeedback>,
    pub memory: &'a [MemoryEntry],
}

impl<'a> EvaluationRequest<'a> {
    pub fn new(ctx: &PromptContext, state: &'a AgentState, memory: &'a [MemoryEntry]) -> Self {
        let feedback = state
            .steps
            .iter()
            .enumerate()
            .map(|(i, s)| StepFeedback {
                step: i,
                tool: s.action.tool_name().map(str::to_string),
                success: s.observation.as_ref().is_none_or(|o| o.success),
                result_count: s.observation.as_ref().and_then(|o| o.result_count),
            })
            .collect();
        EvaluationRequest {
            state,
            prompt: render_prompt(ctx, state),
            feedback,
            memory,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub reward: f64,
    pub rationale: String,
}

pub trait Evaluator: Send + Sync {
    fn name(&self) -> &str;
    fn evaluate(&self, request: &EvaluationRequest<'_>) -> Result<Evaluation, PolicyError>;
}

/// Extracts the ids of a final answer: the text after the last
/// `ANSWER:` marker (case-insensitive), split on commas, with backticks and
/// quotes stripped. `None` when there is no marker or no id.
pub fn parse_answer_ids(text: &str) -> Option<Vec<String>> {
    let upper = text.to_uppercase();
    let at = upper.rfind("ANSWER:")?;
    let tail = &text[at + "ANSWER:".len()..];
    let line = tail.lines().next().unwrap_or("");
    let mut seen = BTreeSet::new();
    let ids: Vec<String> = line
        .split(',')
        .map(|s| {
            s.trim()
                .trim_end_matches('.')
                .trim_matches(|c| c == '`' || c == '"' || c == '\'')
                .trim()
                .to_string()
        })
        .filter(|s| !s.is_empty() && seen.insert(s.clone()))
        .collect();
    (!ids.is_empty()).then_some(ids)
}

pub const REWARD_GOLD: f64 = 1.0;
pub const REWARD_PRODUCTIVE: f64 = 0.5;
pub const REWARD_UNPRODUCTIVE: f64 = 0.1;

/// Scripted rubric.
///
/// | last step                               | reward |
/// |-----------------------------------------|--------|
/// | answer matching the gold ids            | 1.0    |
/// | well-formed answer, no gold configured  | 1.0    |
/// | tool call that succeeded with results   | 0.5    |
/// | failed tool call or empty result        | 0.1    |
/// | anything else                           | 0.0    |
#[derive(Debug, Clone, Default)]
pub struct RubricEvaluator {
    pub gold: Option<BTreeSet<String>>,
}

impl RubricEvaluator {
    pub fn with_gold(gold: impl IntoIterator<Item = impl Into<String>>) -> Self {
        RubricEvaluator {
            gold: Some(gold.into_iter().map(Into::into).collect()),
        }
    }
}

impl Evaluator for RubricEvaluator {
    fn name(&self) -> &str {
        "rubric"
    }

    fn evaluate(&self, request: &EvaluationRequest<'_>) -> Result<Evaluation, PolicyError> {
        let Some(last) = request.state.steps.last() else {
            return Ok(Evaluation {
                reward: 0.0,
                rationale: "no steps taken".into(),
            });
        };
        let (reward, rationale) = match (&last.action, &last.observation) {
            (Action::Answer { text }, _) => match (parse_answer_ids(text), &self.gold) {
                (None, _) => (0.0, "answer has no ANSWER: ids".to_string()),
                (Some(ids), Some(gold)) => {
                    let ids: BTreeSet<String> = ids.into_iter().collect();
                    if &ids == gold {
                        (REWARD_GOLD, "answer matches the gold ids".into())
                    } else {
                        (0.0, "answer differs from the gold ids".into())
                    }
                }
                (Some(ids), None) => (REWARD_GOLD, format!("well-formed answer with {} id(s)", ids.len())),
            },
            (Action::Tool(t), Some(obs)) if obs.success && obs.result_count != Some(0) => {
                (REWARD_PRODUCTIVE, format!("{} returned results", t.tool))
            }
            (Action::Tool(t), Some(obs)) if obs.success => {
                (REWARD_UNPRODUCTIVE, format!("{} returned nothing", t.tool))
            }
            (Action::Tool(t), Some(obs)) => (
                REWARD_UNPRODUCTIVE,
                format!("{} failed: {}", t.tool, obs.error.as_deref().unwrap_or("no detail")),
            ),
            (Action::Tool(t), None) => (0.0, format!("{} has no observation", t.tool)),
        };
        Ok(Evaluation { reward, rationale })
    }
}

/// Evaluator that returns rewards from a fingerprint table; missing entries
/// score `default`.
#[derive(Debug, Clone, Default)]
pub struct TableEvaluator {
    pub table: BTreeMap<u64, f64>,
    pub default: f64,
}

impl Evaluator for TableEvaluator {
    fn name(&self) -> &str {
        "table"
    }

    fn evaluate(&self, request: &EvaluationRequest<'_>) -> Result<Evaluation, PolicyError> {
        let fp = request.state.fingerprint();
        let reward = self.table.get(&fp).copied().unwrap_or(self.default);
        Ok(Evaluation {
            reward,
            rationale: format!("table entry for {fp:016x}"),
        })
    }
}
