use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::Planner;
use crate::builder::attr;
use crate::eval::{diversity_profile, DiversityProfile, EvalError};
use crate::graph::{EntityId, EntityKind};
use crate::policy::{parse_answer_ids, PlanningQuestion};
use crate::taxonomy::{FunctionType, UNASSIGNED};

#[derive(Debug, Error, PartialEq)]
pub enum PlanError {
    #[error("unknown park `{0}`")]
    UnknownPark(EntityId),
    #[error("park `{0}` has no grids")]
    EmptyPark(EntityId),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Functional plan for one park with before/after diversity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParkPlan {
    pub park: EntityId,
    /// Grid → proposed function label.
    pub assignments: BTreeMap<EntityId, String>,
    /// Grids whose search produced no valid function; they keep their
    /// current function.
    pub fallbacks: Vec<EntityId>,
    pub current: DiversityProfile,
    pub proposed: DiversityProfile,
}

fn answer_function(answer: Option<&str>) -> Option<FunctionType> {
    let ids = parse_answer_ids(answer?)?;
    ids.first()?.parse().ok()
}

/// Runs one search per grid of the park, in grid-id order. Each question
/// carries the histogram of functions chosen so far.
pub fn plan_park(planner: &Planner, park: &EntityId) -> Result<ParkPlan, PlanError> {
    let graph = planner.toolbox.graph();
    if graph.entity(park).map(|e| e.kind) != Some(EntityKind::IndustrialPark) {
        return Err(PlanError::UnknownPark(park.clone()));
    }
    let mut grids: Vec<EntityId> = graph.grids_of_park(park).into_iter().map(|c| c.entity.clone()).collect();
    grids.sort();
    if grids.is_empty() {
        return Err(PlanError::EmptyPark(park.clone()));
    }
    let current_of = |g: &EntityId| graph.text(g, attr::DOMINANT_FUNCTION).unwrap_or(UNASSIGNED).to_string();
    let current: BTreeMap<EntityId, String> = grids.iter().map(|g| (g.clone(), current_of(g))).collect();

    let mut assignments = BTreeMap::new();
    let mut fallbacks = Vec::new();
    let mut histogram: BTreeMap<String, usize> = BTreeMap::new();
    for grid in &grids {
        let question = PlanningQuestion {
            grid: grid.clone(),
            park: park.clone(),
            current: histogram.clone(),
        }
        .render();
        let outcome = planner.search(&question);
        let label = match answer_function(outcome.trajectory.answer.as_deref()) {
            Some(f) => f.label().to_string(),
            None => {
                fallbacks.push(grid.clone());
                current[grid].clone()
            }
        };
        *histogram.entry(label.clone()).or_default() += 1;
        assignments.insert(grid.clone(), label);
    }
    Ok(ParkPlan {
        current: diversity_profile(graph, park, &current)?,
        proposed: diversity_profile(graph, park, &assignments)?,
        park: park.clone(),
        assignments,
        fallbacks,
    })
}
