//! Deterministic policies for tests, benchmarks and offline runs.

use std::collections::BTreeMap;

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value as Json};

use super::task::{Level, PlanningQuestion, QuestionSpec};
use super::{Action, ActionCandidate, Policy, PolicyError, PolicyRequest, Step};
use crate::graph::{EntityKind, PropertyGraph};
use crate::taxonomy::FunctionType;
use crate::tools::{
    ToolInvocation, FUNCTION_PLANNER, GEO_DECODE, RANK_MASTER, SIMILARITY_SEARCH,
    STRUCTURED_QUERY,
};

/// Replays candidates keyed by the state fingerprint
/// ([`super::AgentState::fingerprint`]).
#[derive(Debug, Clone, Default)]
pub struct TablePolicy {
    pub table: BTreeMap<u64, Vec<ActionCandidate>>,
    /// Used for states missing from the table; `None` makes them an error.
    pub fallback: Option<Vec<ActionCandidate>>,
}

impl Policy for TablePolicy {
    fn name(&self) -> &str {
        "table"
    }

    fn propose(&self, request: &PolicyRequest<'_>) -> Result<Vec<ActionCandidate>, PolicyError> {
        let fp = request.state.fingerprint();
        self.table
            .get(&fp)
            .or(self.fallback.as_ref())
            .map(|c| c.iter().take(request.k).cloned().collect())
            .ok_or_else(|| PolicyError::Scripted(format!("no scripted entry for state {fp:016x}")))
    }
}

fn tool(thought: &str, inv: ToolInvocation) -> ActionCandidate {
    ActionCandidate::new(thought, Action::Tool(inv))
}

fn last_success<'a>(steps: &'a [Step], name: &str) -> Option<&'a Json> {
    steps.iter().rev().find_map(|s| match (&s.action, &s.observation) {
        (Action::Tool(t), Some(o)) if t.tool == name && o.success => Some(&o.payload),
        _ => None,
    })
}

fn id_list(value: &Json) -> Vec<String> {
    value
        .as_array()
        .map(|a| a.iter().filter_map(|v| v.as_str().map(str::to_string)).collect())
        .unwrap_or_default()
}

/// Oracle for templated site questions: list the candidates with a graph
/// query, rank them on the question's criteria, answer with the top ids.
///
/// With `distractor` set, the first expansion also offers a similarity
/// search on the facility description; it is productive but leads nowhere.
#[derive(Debug, Clone, Default)]
pub struct QuestionPolicy {
    pub distractor: bool,
}

impl QuestionPolicy {
    pub fn new() -> Self {
        QuestionPolicy { distractor: true }
    }
}

impl Policy for QuestionPolicy {
    fn name(&self) -> &str {
        "question-oracle"
    }

    fn propose(&self, request: &PolicyRequest<'_>) -> Result<Vec<ActionCandidate>, PolicyError> {
        let state = request.state;
        let spec = QuestionSpec::parse(&state.question)
            .ok_or_else(|| PolicyError::Scripted("question does not follow the site template".into()))?;
        let list_candidates = || {
            tool(
                "List the candidate sites allowed by the question.",
                ToolInvocation::new(STRUCTURED_QUERY).arg("query", spec.candidate_query()),
            )
        };

        let ranked = state
            .steps
            .last()
            .and_then(|s| last_success(std::slice::from_ref(s), RANK_MASTER));
        if let Some(payload) = ranked {
            let ordering = id_list(&payload["ordering"]);
            let top: Vec<String> = ordering.into_iter().take(spec.top.max(1)).collect();
            if !top.is_empty() {
                return Ok(vec![ActionCandidate::new(
                    "The ranking is complete; report the leaders.",
                    Action::answer(format!("ANSWER: {}", top.join(", "))),
                )]);
            }
        }

        let mut out = Vec::new();
        match last_success(&state.steps, STRUCTURED_QUERY) {
            Some(table) if !id_list(&table["entities"]).is_empty() => {
                out.push(tool(
                    "Rank the candidates on the requested criteria.",
                    ToolInvocation::new(RANK_MASTER)
                        .arg("candidates", table["entities"].clone())
                        .arg("criteria", json!(spec.criteria)),
                ));
            }
            _ => {
                out.push(list_candidates());
                if self.distractor && state.steps.is_empty() {
                    out.push(tool(
                        "Look for parks resembling the facility.",
                        ToolInvocation::new(SIMILARITY_SEARCH)
                            .arg("description", spec.facility.clone())
                            .arg("top_k", 3),
                    ));
                }
            }
        }
        out.truncate(request.k.max(1));
        Ok(out)
    }
}

/// Baseline that answers immediately with uniformly drawn ids of the
/// question's level, seeded by the state fingerprint.
#[derive(Debug, Clone)]
pub struct DegeneratePolicy {
    parks: Vec<String>,
    grids: Vec<String>,
    pub seed: u64,
}

impl DegeneratePolicy {
    pub fn new(graph: &PropertyGraph, seed: u64) -> Self {
        let ids = |k| {
            graph
                .entities_of_kind(k)
                .into_iter()
                .map(|e| e.as_str().to_string())
                .collect()
        };
        DegeneratePolicy {
            parks: ids(EntityKind::IndustrialPark),
            grids: ids(EntityKind::Grid),
            seed,
        }
    }
}

impl Policy for DegeneratePolicy {
    fn name(&self) -> &str {
        "degenerate"
    }

    fn propose(&self, request: &PolicyRequest<'_>) -> Result<Vec<ActionCandidate>, PolicyError> {
        let spec = QuestionSpec::parse(&request.state.question);
        let level = spec.as_ref().map_or(Level::Park, |s| s.level);
        let top = spec.as_ref().map_or(1, |s| s.top.max(1));
        let pool = match level {
            Level::Park => &self.parks,
            Level::Grid => &self.grids,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ request.state.fingerprint());
        let picks: Vec<&String> = pool.choose_multiple(&mut rng, top).collect();
        if picks.is_empty() {
            return Err(PolicyError::Scripted("no sites to pick from".into()));
        }
        let ids: Vec<&str> = picks.iter().map(|s| s.as_str()).collect();
        Ok(vec![ActionCandidate::new(
            "Guess.",
            Action::answer(format!("ANSWER: {}", ids.join(", "))),
        )])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum AdversarialKind {
    /// Calls the same tool forever with shifting arguments.
    Loop,
    /// Emits invocations that fail validation or execution.
    Fail,
    /// Cycles between productive tools and never answers.
    NeverAnswer,
    /// Returns no candidates.
    Empty,
    /// Returns an error.
    Error,
    /// Returns many duplicated candidates, more than requested.
    Flood,
}

impl AdversarialKind {
    pub const ALL: [AdversarialKind; 6] = [
        AdversarialKind::Loop,
        AdversarialKind::Fail,
        AdversarialKind::NeverAnswer,
        AdversarialKind::Empty,
        AdversarialKind::Error,
        AdversarialKind::Flood,
    ];
}

/// Misbehaving policy used to exercise the search's termination and cap
/// handling. `variant` perturbs the arguments it emits.
#[derive(Debug, Clone, Copy)]
pub struct AdversarialPolicy {
    pub kind: AdversarialKind,
    pub variant: u64,
}

impl Policy for AdversarialPolicy {
    fn name(&self) -> &str {
        "adversarial"
    }

    fn propose(&self, request: &PolicyRequest<'_>) -> Result<Vec<ActionCandidate>, PolicyError> {
        let depth = request.state.steps.len() as u64;
        let v = self.variant;
        let k = request.k.max(1) as u64;
        let out = match self.kind {
            AdversarialKind::Loop => (0..k)
                .map(|i| {
                    let grid = format!("grid:{:03}_{:03}", (v + depth) % 7, i);
                    tool("again", ToolInvocation::new(GEO_DECODE).arg("grid", grid))
                })
                .collect(),
            AdversarialKind::Fail => (0..k)
                .map(|i| match (v + i + depth) % 3 {
                    0 => tool("oops", ToolInvocation::new("teleport").arg("to", "moon")),
                    1 => tool(
                        "oops",
                        ToolInvocation::new(STRUCTURED_QUERY).arg("query", format!("MATCH ({i}")),
                    ),
                    _ => tool("oops", ToolInvocation::new(RANK_MASTER).arg("candidates", json!([]))),
                })
                .collect(),
            AdversarialKind::NeverAnswer => (0..k)
                .map(|i| {
                    if (depth + i + v).is_multiple_of(2) {
                        tool(
                            "keep looking",
                            ToolInvocation::new(STRUCTURED_QUERY)
                                .arg("query", format!("MATCH (p:Park) RETURN p.id LIMIT {}", depth + i + 1)),
                        )
                    } else {
                        tool(
                            "keep looking",
                            ToolInvocation::new(SIMILARITY_SEARCH)
                                .arg("description", format!("industrial park {}", v + i))
                                .arg("top_k", 1 + (depth % 3)),
                        )
                    }
                })
                .collect(),
            AdversarialKind::Empty => Vec::new(),
            AdversarialKind::Error => {
                return Err(PolicyError::Transport(format!("simulated outage #{v}")));
            }
            AdversarialKind::Flood => (0..k * 5)
                .map(|i| {
                    tool(
                        "more",
                        ToolInvocation::new(STRUCTURED_QUERY)
                            .arg("query", format!("MATCH (p:Park) RETURN p.id LIMIT {}", i % 2 + 1)),
                    )
                })
                .collect(),
        };
        Ok(out)
    }
}

/// Functional-planning policy: inspect the grid's context, then choose the
/// function least represented among its neighbours and the park's running
/// plan (ties go to the alphabetically first label).
#[derive(Debug, Clone, Default)]
pub struct DiversifyingPolicy;

impl DiversifyingPolicy {
    pub fn choose(counts: &BTreeMap<String, usize>) -> FunctionType {
        *FunctionType::ALL
            .iter()
            .min_by_key(|f| (counts.get(f.label()).copied().unwrap_or(0), f.label()))
            .expect("taxonomy is non-empty")
    }
}

impl Policy for DiversifyingPolicy {
    fn name(&self) -> &str {
        "diversifying"
    }

    fn propose(&self, request: &PolicyRequest<'_>) -> Result<Vec<ActionCandidate>, PolicyError> {
        let state = request.state;
        let q = PlanningQuestion::parse(&state.question)
            .ok_or_else(|| PolicyError::Scripted("question does not follow the planning template".into()))?;
        let context = last_success(&state.steps, FUNCTION_PLANNER);
        if context.is_none() && state.steps.is_empty() {
            return Ok(vec![tool(
                "Inspect the grid's planning context.",
                ToolInvocation::new(FUNCTION_PLANNER).arg("grid", q.grid.as_str()),
            )]);
        }
        let mut counts = q.current.clone();
        if let Some(hist) = context.and_then(|c| c["neighbor_functions"].as_object()) {
            for (k, v) in hist {
                *counts.entry(k.clone()).or_default() += v.as_u64().unwrap_or(0) as usize;
            }
        }
        let choice = DiversifyingPolicy::choose(&counts);
        Ok(vec![ActionCandidate::new(
            format!("{choice} is the least represented function nearby."),
            Action::answer(format!("ANSWER: {choice}")),
        )])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::AgentState;

    fn request(state: &AgentState, k: usize) -> PolicyRequest<'_> {
        PolicyRequest {
            state,
            prompt: String::new(),
            k,
            temperature: 0.0,
        }
    }

    #[test]
    fn table_policy_is_keyed_by_state() {
        let s = AgentState::new("q");
        let c = vec![
            ActionCandidate::new("a", Action::answer("ANSWER: x")),
            ActionCandidate::new("b", Action::answer("ANSWER: y")),
        ];
        let p = TablePolicy {
            table: [(s.fingerprint(), c.clone())].into(),
            fallback: None,
        };
        assert_eq!(p.propose(&request(&s, 1)).unwrap(), c[..1].to_vec());
        assert!(p.propose(&request(&AgentState::new("other"), 2)).is_err());
    }

    #[test]
    fn diversifying_prefers_rare_functions() {
        let mut counts = BTreeMap::new();
        for f in FunctionType::ALL {
            counts.insert(f.label().to_string(), 2);
        }
        counts.insert("Traffic".into(), 1);
        assert_eq!(DiversifyingPolicy::choose(&counts), FunctionType::Traffic);
        assert_eq!(DiversifyingPolicy::choose(&BTreeMap::new()), FunctionType::BusinessOffice);
    }

    #[test]
    fn adversarial_error_and_empty() {
        let s = AgentState::new("q");
        let e = AdversarialPolicy {
            kind: AdversarialKind::Error,
            variant: 3,
        };
        assert!(e.propose(&request(&s, 2)).is_err());
        let empty = AdversarialPolicy {
            kind: AdversarialKind::Empty,
            variant: 0,
        };
        assert!(empty.propose(&request(&s, 2)).unwrap().is_empty());
    }
}
