//! Reflective Monte Carlo tree search over agent states.
//!
//! Each iteration selects a leaf by UCT, asks the policy for `k` candidate
//! actions, executes the tool calls (in parallel), has the evaluator score
//! every new child, and backpropagates the best child's reward to the root.
//! A node's value `V` is the running mean of the rewards that passed through
//! it; `N` counts those rewards.

mod plan;

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value as Json};

use crate::policy::{
    render_prompt, Action, ActionCandidate, AgentState, EvaluationRequest, Evaluator, MemoryEntry, Policy,
    PolicyRequest, PromptContext, Step,
};
use crate::tools::{Observation, Toolbox};

pub use plan::{plan_park, ParkPlan, PlanError};

pub const ROOT: usize = 0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    /// Exploration weight ω.
    pub exploration: f64,
    /// Decay d applied to the exploration term as `d^N`.
    pub decay: f64,
    /// Candidates requested per expansion.
    pub branching: usize,
    pub max_depth: usize,
    /// Iteration budget; every iteration backpropagates exactly once.
    pub iterations: usize,
    /// Longest allowed run of consecutive calls to one tool.
    pub same_tool_cap: usize,
    /// Stop as soon as an answer scores 1.0.
    pub early_accept: bool,
    /// Sampling temperature passed to the policy.
    pub temperature: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            exploration: 1.0,
            decay: 0.95,
            branching: 2,
            max_depth: 5,
            iterations: 50,
            same_tool_cap: 4,
            early_accept: true,
            temperature: 0.0,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !self.exploration.is_finite() || self.exploration < 0.0 {
            return Err(format!("exploration must be finite and >= 0 (got {})", self.exploration));
        }
        if !(self.decay > 0.0 && self.decay <= 1.0) {
            return Err(format!("decay must lie in (0, 1] (got {})", self.decay));
        }
        if self.branching == 0 {
            return Err("branching must be at least 1".into());
        }
        if self.max_depth == 0 {
            return Err("max_depth must be at least 1".into());
        }
        if self.same_tool_cap == 0 {
            return Err("same_tool_cap must be at least 1".into());
        }
        Ok(())
    }
}

/// `V/N + ω·d^N·sqrt(2 ln N(p) / N)`, infinite for unvisited nodes.
pub fn uct_score(value: f64, visits: u64, parent_visits: u64, exploration: f64, decay: f64) -> f64 {
    if visits == 0 {
        return f64::INFINITY;
    }
    let n = visits as f64;
    let parent = (parent_visits.max(1)) as f64;
    value / n + exploration * decay.powf(n) * (2.0 * parent.ln() / n).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeStatus {
    Open,
    Answered,
    /// The node's tool call broke the same-tool cap and was not executed.
    CapExceeded,
    /// Reached `max_depth` without answering.
    DepthLimit,
    /// The policy failed or proposed nothing here.
    NoCandidates,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: usize,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    pub depth: usize,
    /// The step that led here; `None` at the root.
    pub step: Option<Step>,
    pub value: f64,
    pub visits: u64,
    /// Backpropagations that started at this node.
    pub origins: u64,
    pub reward: Option<f64>,
    pub reflection: String,
    pub status: NodeStatus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchTree {
    pub question: String,
    pub nodes: Vec<Node>,
    pub memory: Vec<MemoryEntry>,
}

impl SearchTree {
    pub fn new(question: impl Into<String>) -> Self {
        SearchTree {
            question: question.into(),
            nodes: vec![Node {
                id: ROOT,
                parent: None,
                children: Vec::new(),
                depth: 0,
                step: None,
                value: 0.0,
                visits: 0,
                origins: 0,
                reward: None,
                reflection: String::new(),
                status: NodeStatus::Open,
            }],
            memory: Vec::new(),
        }
    }

    /// Node ids from the root down to `id`.
    pub fn path(&self, id: usize) -> Vec<usize> {
        let mut path = vec![id];
        let mut cur = id;
        while let Some(p) = self.nodes[cur].parent {
            path.push(p);
            cur = p;
        }
        path.reverse();
        path
    }

    pub fn state_of(&self, id: usize) -> AgentState {
        AgentState {
            question: self.question.clone(),
            steps: self
                .path(id)
                .into_iter()
                .filter_map(|n| self.nodes[n].step.clone())
                .collect(),
        }
    }

    pub fn expandable(&self, id: usize, config: &SearchConfig) -> bool {
        let n = &self.nodes[id];
        n.status == NodeStatus::Open && n.children.is_empty() && n.depth < config.max_depth
    }

    /// Visited, not expandable, and every child exhausted too.
    pub fn exhausted(&self, id: usize, config: &SearchConfig) -> bool {
        let n = &self.nodes[id];
        n.visits > 0
            && !self.expandable(id, config)
            && n.children.iter().all(|&c| self.exhausted(c, config))
    }

    /// Descends by UCT (ties to the earlier child), skipping exhausted
    /// subtrees while any sibling is still open.
    pub fn select(&self, config: &SearchConfig) -> usize {
        let mut cur = ROOT;
        loop {
            let node = &self.nodes[cur];
            if self.expandable(cur, config) || node.children.is_empty() {
                return cur;
            }
            let open: Vec<usize> = node
                .children
                .iter()
                .copied()
                .filter(|&c| !self.exhausted(c, config))
                .collect();
            let pool = if open.is_empty() { node.children.clone() } else { open };
            let mut best = pool[0];
            let mut best_score = f64::NEG_INFINITY;
            for c in pool {
                let ch = &self.nodes[c];
                let s = uct_score(ch.value, ch.visits, node.visits, config.exploration, config.decay);
                if s > best_score {
                    best = c;
                    best_score = s;
                }
            }
            cur = best;
        }
    }

    /// Adds one reward sample to every node from `origin` up to the root.
    pub fn backpropagate(&mut self, origin: usize, reward: f64) {
        self.nodes[origin].origins += 1;
        let mut cur = Some(origin);
        while let Some(id) = cur {
            let n = &mut self.nodes[id];
            n.visits += 1;
            n.value += (reward - n.value) / n.visits as f64;
            cur = n.parent;
        }
    }

    /// Highest-valued visited answer (ties: deeper, then earlier). Without
    /// any answer, the best visited node is returned and flagged answerless.
    pub fn best_trajectory(&self) -> Trajectory {
        let rank = |a: &&Node, b: &&Node| {
            a.value
                .total_cmp(&b.value)
                .then(a.depth.cmp(&b.depth))
                .then(b.id.cmp(&a.id))
        };
        let answered = self
            .nodes
            .iter()
            .filter(|n| n.status == NodeStatus::Answered && n.visits > 0)
            .max_by(rank);
        let (leaf, has_answer) = match answered {
            Some(n) => (n.id, true),
            None => (
                self.nodes
                    .iter()
                    .filter(|n| n.id != ROOT && n.visits > 0)
                    .max_by(rank)
                    .map_or(ROOT, |n| n.id),
                false,
            ),
        };
        let state = self.state_of(leaf);
        Trajectory {
            nodes: self.path(leaf),
            answer: if has_answer { state.answer().map(str::to_string) } else { None },
            value: self.nodes[leaf].value,
            answerless: !has_answer,
            state,
        }
    }

    pub fn to_json(&self) -> Json {
        let nodes: Vec<Json> = self
            .nodes
            .iter()
            .map(|n| {
                let (thought, action, observation) = match &n.step {
                    None => (Json::Null, Json::Null, Json::Null),
                    Some(s) => (
                        json!(s.thought),
                        serde_json::to_value(&s.action).expect("action serializes"),
                        s.observation.as_ref().map_or(Json::Null, |o| {
                            json!({
                                "success": o.success,
                                "summary": o.summary,
                                "error": o.error,
                                "result_count": o.result_count,
                            })
                        }),
                    ),
                };
                json!({
                    "id": n.id,
                    "parent": n.parent,
                    "children": n.children,
                    "depth": n.depth,
                    "visits": n.visits,
                    "value": n.value,
                    "origins": n.origins,
                    "reward": n.reward,
                    "status": n.status,
                    "reflection": n.reflection,
                    "thought": thought,
                    "action": action,
                    "observation": observation,
                })
            })
            .collect();
        json!({"question": self.question, "nodes": nodes, "memory_entries": self.memory.len()})
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub nodes: Vec<usize>,
    pub state: AgentState,
    pub answer: Option<String>,
    pub value: f64,
    pub answerless: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    IterationLimit,
    EarlyAccept,
    Exhausted,
}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub tree: SearchTree,
    pub trajectory: Trajectory,
    pub iterations: usize,
    pub stop: StopReason,
}

impl SearchOutcome {
    /// Trace document: stop reason, trajectory and the whole tree.
    pub fn to_json(&self) -> Json {
        json!({
            "stop": self.stop,
            "iterations": self.iterations,
            "answer": self.trajectory.answer,
            "answerless": self.trajectory.answerless,
            "value": self.trajectory.value,
            "trajectory": self.trajectory.nodes,
            "tree": self.tree.to_json(),
        })
    }
}

#[derive(Clone)]
pub struct Planner {
    pub toolbox: Toolbox,
    pub policy: Arc<dyn Policy>,
    pub evaluator: Arc<dyn Evaluator>,
    pub prompt: PromptContext,
    pub config: SearchConfig,
}

impl Planner {
    pub fn new(toolbox: Toolbox, policy: Arc<dyn Policy>, evaluator: Arc<dyn Evaluator>) -> Self {
        let prompt = PromptContext::new(toolbox.graph());
        Planner {
            toolbox,
            policy,
            evaluator,
            prompt,
            config: SearchConfig::default(),
        }
    }

    pub fn with_config(mut self, config: SearchConfig) -> Self {
        self.config = config;
        self
    }

    pub fn with_prompt(mut self, prompt: PromptContext) -> Self {
        self.prompt = prompt;
        self
    }

    pub fn search(&self, question: &str) -> SearchOutcome {
        let cfg = &self.config;
        let mut tree = SearchTree::new(question);
        let mut iterations = 0;
        let mut stop = StopReason::IterationLimit;
        while iterations < cfg.iterations {
            if tree.exhausted(ROOT, cfg) {
                stop = StopReason::Exhausted;
                break;
            }
            let leaf = tree.select(cfg);
            let (origin, reward) = if tree.expandable(leaf, cfg) {
                let children = self.expand(&mut tree, leaf);
                let mut best: Option<(usize, f64)> = None;
                for c in children {
                    let r = tree.nodes[c].reward.unwrap_or(0.0);
                    if best.is_none_or(|(_, b)| r > b) {
                        best = Some((c, r));
                    }
                }
                best.unwrap_or_else(|| {
                    tree.nodes[leaf].status = NodeStatus::NoCandidates;
                    (leaf, 0.0)
                })
            } else {
                (leaf, tree.nodes[leaf].reward.unwrap_or(0.0))
            };
            tree.backpropagate(origin, reward);
            iterations += 1;
            if cfg.early_accept && reward >= 1.0 && tree.nodes[origin].status == NodeStatus::Answered {
                stop = StopReason::EarlyAccept;
                break;
            }
        }
        let trajectory = tree.best_trajectory();
        SearchOutcome {
            tree,
            trajectory,
            iterations,
            stop,
        }
    }

    /// Creates, executes and reflects on the children of `leaf`; returns
    /// their ids in proposal order.
    fn expand(&self, tree: &mut SearchTree, leaf: usize) -> Vec<usize> {
        let cfg = &self.config;
        let state = tree.state_of(leaf);
        let request = PolicyRequest {
            state: &state,
            prompt: render_prompt(&self.prompt, &state),
            k: cfg.branching,
            temperature: cfg.temperature,
        };
        let proposed = match self.policy.propose(&request) {
            Ok(c) => c,
            Err(e) => {
                tree.nodes[leaf].reflection = format!("policy failed: {e}");
                return Vec::new();
            }
        };
        let mut candidates: Vec<ActionCandidate> = Vec::new();
        for c in proposed {
            if !candidates.iter().any(|k| k.action.same_as(&c.action)) {
                candidates.push(c);
            }
        }
        candidates.truncate(cfg.branching);
        if candidates.is_empty() {
            tree.nodes[leaf].reflection = "policy proposed no actions".into();
            return Vec::new();
        }

        let depth = tree.nodes[leaf].depth;
        let last_tool = state.steps.last().and_then(|s| s.action.tool_name()).map(str::to_string);
        let run = state.same_tool_run();
        let executed: Vec<(Step, NodeStatus)> = candidates
            .into_par_iter()
            .map(|c| match c.action {
                Action::Answer { .. } => (
                    Step {
                        thought: c.thought,
                        action: c.action,
                        observation: None,
                    },
                    NodeStatus::Answered,
                ),
                Action::Tool(mut inv) => {
                    inv.step = depth;
                    let streak = if last_tool.as_deref() == Some(inv.tool.as_str()) { run + 1 } else { 1 };
                    let (obs, status) = if streak > cfg.same_tool_cap {
                        (
                            Observation::fail_with(
                                format!("{} called more than {} times in a row", inv.tool, cfg.same_tool_cap),
                                json!({"cap_exceeded": true}),
                            ),
                            NodeStatus::CapExceeded,
                        )
                    } else {
                        let status = if depth + 1 >= cfg.max_depth {
                            NodeStatus::DepthLimit
                        } else {
                            NodeStatus::Open
                        };
                        (self.toolbox.invoke(&inv), status)
                    };
                    (
                        Step {
                            thought: c.thought,
                            action: Action::Tool(inv),
                            observation: Some(obs),
                        },
                        status,
                    )
                }
            })
            .collect();

        let fingerprint = state.fingerprint();
        for (step, _) in &executed {
            tree.memory.push(MemoryEntry {
                state: fingerprint,
                action: step.action.clone(),
                observation: step.observation.clone(),
            });
        }

        let memory = &tree.memory;
        let reflections: Vec<(AgentState, f64, String)> = executed
            .par_iter()
            .map(|(step, _)| {
                let child = state.with_step(step.clone());
                let request = EvaluationRequest::new(&self.prompt, &child, memory);
                let (reward, note) = match self.evaluator.evaluate(&request) {
                    Ok(e) if e.reward.is_finite() => (e.reward.clamp(0.0, 1.0), e.rationale),
                    Ok(e) => (0.0, format!("non-finite reward {}", e.reward)),
                    Err(e) => (0.0, format!("evaluator failed: {e}")),
                };
                (child, reward, note)
            })
            .collect();

        let mut ids = Vec::new();
        for ((step, status), (_, reward, note)) in executed.into_iter().zip(reflections) {
            let id = tree.nodes.len();
            tree.nodes.push(Node {
                id,
                parent: Some(leaf),
                children: Vec::new(),
                depth: depth + 1,
                step: Some(step),
                value: 0.0,
                visits: 0,
                origins: 0,
                reward: Some(reward),
                reflection: note,
                status,
            });
            tree.nodes[leaf].children.push(id);
            ids.push(id);
        }
        ids
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uct_worked_value() {
        let s = uct_score(1.0, 1, 2, 1.0, 0.5);
        assert!((s - 1.5887).abs() < 1e-4, "{s}");
        assert_eq!(uct_score(0.0, 0, 10, 1.0, 0.95), f64::INFINITY);
    }

    #[test]
    fn backprop_keeps_running_means() {
        let mut t = SearchTree::new("q");
        for i in 0..3 {
            t.nodes.push(Node {
                id: i + 1,
                parent: Some(i),
                ..t.nodes[0].clone()
            });
            t.nodes[i].children.push(i + 1);
        }
        for r in [0.2, 0.6, 1.0] {
            t.backpropagate(3, r);
        }
        t.backpropagate(1, 0.0);
        assert_eq!(t.nodes[3].visits, 3);
        assert!((t.nodes[3].value - 0.6).abs() < 1e-12);
        assert_eq!(t.nodes[0].visits, 4);
        assert!((t.nodes[0].value - 0.45).abs() < 1e-12);
        assert_eq!(t.nodes[1].origins, 1);
    }

    #[test]
    fn config_validation() {
        assert!(SearchConfig::default().validate().is_ok());
        let bad = SearchConfig {
            decay: 0.0,
            ..SearchConfig::default()
        };
        assert!(bad.validate().is_err());
        let parsed: SearchConfig = toml::from_str("branching = 3").unwrap();
        assert_eq!(parsed.branching, 3);
        assert_eq!(parsed.iterations, 50);
    }
}
