//! Site-recommendation question template.
//!
//! Generated questions follow one fixed grammar so that scripted policies
//! can read the constraint and criteria back out of the text:
//!
//! ```text
//! Recommend the best park for a new <facility>[ adjacent to park `<id>`].
//! Criteria: <name:dir>, <name:dir>, ... Answer with 1 site id.
//!
//! Recommend the top 3 grids for a new <facility> within park `<id>`.
//! Criteria: ... Answer with 3 site ids.
//! ```

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::graph::EntityId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Park,
    Grid,
}

impl Level {
    fn noun(self, plural: bool) -> &'static str {
        match (self, plural) {
            (Level::Park, false) => "park",
            (Level::Park, true) => "parks",
            (Level::Grid, false) => "grid",
            (Level::Grid, true) => "grids",
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.noun(false))
    }
}

/// Spatial condition attached to a conditional question.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", content = "park", rename_all = "snake_case")]
pub enum Constraint {
    /// Grid-level: candidates are the grids located in the park.
    WithinPark(EntityId),
    /// Park-level: candidates are the parks adjacent to the park.
    AdjacentToPark(EntityId),
}

impl Constraint {
    pub fn park(&self) -> &EntityId {
        match self {
            Constraint::WithinPark(p) | Constraint::AdjacentToPark(p) => p,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionSpec {
    pub level: Level,
    pub facility: String,
    pub constraint: Option<Constraint>,
    /// Criterion specs, `name:higher` or `name:lower`.
    pub criteria: Vec<String>,
    pub top: usize,
}

const WITHIN: &str = " within park `";
const ADJACENT: &str = " adjacent to park `";
const CRITERIA: &str = "Criteria: ";
const ANSWER_WITH: &str = " Answer with ";

impl QuestionSpec {
    pub fn render(&self) -> String {
        let head = if self.top <= 1 {
            format!("Recommend the best {}", self.level.noun(false))
        } else {
            format!("Recommend the top {} {}", self.top, self.level.noun(true))
        };
        let condition = match &self.constraint {
            None => String::new(),
            Some(Constraint::WithinPark(p)) => format!("{WITHIN}{p}`"),
            Some(Constraint::AdjacentToPark(p)) => format!("{ADJACENT}{p}`"),
        };
        let n = self.top.max(1);
        format!(
            "{head} for a new {}{condition}. {CRITERIA}{}.{ANSWER_WITH}{n} site id{}.",
            self.facility,
            self.criteria.join(", "),
            if n == 1 { "" } else { "s" }
        )
    }

    /// Inverse of [`QuestionSpec::render`]; `None` when the text does not
    /// follow the template.
    pub fn parse(text: &str) -> Option<QuestionSpec> {
        let text = text.trim();
        let rest = text.strip_prefix("Recommend the ")?;
        let (top, rest) = if let Some(r) = rest.strip_prefix("best ") {
            (1, r)
        } else {
            let r = rest.strip_prefix("top ")?;
            let (n, r) = r.split_once(' ')?;
            (n.parse().ok()?, r)
        };
        let (noun, rest) = rest.split_once(" for a new ")?;
        let level = match noun {
            "park" | "parks" => Level::Park,
            "grid" | "grids" => Level::Grid,
            _ => return None,
        };
        let (head, tail) = rest.split_once(&format!(". {CRITERIA}"))?;
        let (facility, constraint) = if let Some((f, p)) = head.split_once(WITHIN) {
            (f, Some(Constraint::WithinPark(EntityId::new(p.strip_suffix('`')?))))
        } else if let Some((f, p)) = head.split_once(ADJACENT) {
            (f, Some(Constraint::AdjacentToPark(EntityId::new(p.strip_suffix('`')?))))
        } else {
            (head, None)
        };
        let (criteria, _) = tail.split_once(&format!(".{ANSWER_WITH}"))?;
        let criteria: Vec<String> = criteria
            .split(',')
            .map(|c| c.trim().to_string())
            .filter(|c| !c.is_empty())
            .collect();
        if criteria.is_empty() {
            return None;
        }
        Some(QuestionSpec {
            level,
            facility: facility.to_string(),
            constraint,
            criteria,
            top,
        })
    }

    /// Graph query that lists the candidate sites of this question.
    pub fn candidate_query(&self) -> String {
        match (&self.level, &self.constraint) {
            (Level::Park, None) => "MATCH (p:Park) RETURN p.id".into(),
            (Level::Park, Some(c)) => format!(
                "MATCH (p:Park) WHERE (p)-[:AdjacentTo]-(q:Park WHERE q.id = \"{}\") RETURN p.id",
                c.park()
            ),
            (Level::Grid, None) => "MATCH (g:Grid) RETURN g.id".into(),
            (Level::Grid, Some(c)) => format!(
                "MATCH (g:Grid) WHERE (g)-[:LocatedIn]->(p:Park WHERE p.id = \"{}\") RETURN g.id",
                c.park()
            ),
        }
    }
}

/// Per-grid question used by functional planning. The running histogram of
/// functions already chosen in the park travels inside the question.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanningQuestion {
    pub grid: EntityId,
    pub park: EntityId,
    pub current: BTreeMap<String, usize>,
}

const PLAN_HEAD: &str = "Assign a function to grid `";
const PLAN_PARK: &str = "` in park `";
const PLAN_CURRENT: &str = "Current plan:";

impl PlanningQuestion {
    pub fn render(&self) -> String {
        let current: Vec<String> = self.current.iter().map(|(k, v)| format!("{k}={v}")).collect();
        format!(
            "{PLAN_HEAD}{}{PLAN_PARK}{}`.\n{PLAN_CURRENT} {}",
            self.grid,
            self.park,
            if current.is_empty() { "none".to_string() } else { current.join("; ") }
        )
    }

    pub fn parse(text: &str) -> Option<PlanningQuestion> {
        let rest = text.trim().strip_prefix(PLAN_HEAD)?;
        let (grid, rest) = rest.split_once(PLAN_PARK)?;
        let (park, rest) = rest.split_once('`')?;
        let mut current = BTreeMap::new();
        if let Some((_, tail)) = rest.split_once(PLAN_CURRENT) {
            let tail = tail.trim();
            if tail != "none" {
                for part in tail.split(';') {
                    let (k, v) = part.split_once('=')?;
                    current.insert(k.trim().to_string(), v.trim().parse().ok()?);
                }
            }
        }
        Some(PlanningQuestion {
            grid: EntityId::new(grid),
            park: EntityId::new(park),
            current,
        })
    }
}
