//! Budget allocation over a skills graph.
//!
//! Two readings of the same budget problem are supported:
//!
//! * [`select_knapsack`]: fund whole nodes, maximizing total effectiveness
//!   subject to the sum of node costs staying within budget (0/1 knapsack).
//! * [`allocate_fractional`]: split one continuous budget across nodes,
//!   maximizing `sum f(v) * r(v)` with `0 <= r(v) <= capacity(v)`.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::SkillsGraph;

/// Default bound on the number of dynamic-programming cells.
pub const DEFAULT_MAX_CELLS: u64 = 10_000_000;

const FEASIBILITY_EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AllocError {
    #[error("budget must be a finite non-negative number, got {0}")]
    InvalidBudget(f64),
    #[error("cost {cost} of node `{node}` has more than two decimals")]
    CostPrecision { node: String, cost: f64 },
    #[error("knapsack table needs {cells} cells, limit is {limit}")]
    CostResolutionExceeded { cells: u64, limit: u64 },
    #[error("unknown node `{0}`")]
    UnknownNode(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum AllocationMode {
    Select,
    #[default]
    Fractional,
}

impl std::str::FromStr for AllocationMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "select" => Ok(AllocationMode::Select),
            "fractional" => Ok(AllocationMode::Fractional),
            other => Err(format!("unknown allocation mode `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AllocationRequest {
    pub budget: f64,
    #[serde(default)]
    pub mode: AllocationMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSelection {
    /// Chosen ids, in graph insertion order.
    pub chosen: Vec<String>,
    pub total_cost: f64,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationPlan {
    pub allocation: IndexMap<String, f64>,
    pub objective: f64,
}

impl AllocationPlan {
    pub fn total(&self) -> f64 {
        self.allocation.values().sum()
    }
}

/// Serialized form shared by both modes; inapplicable fields are omitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanReport {
    pub mode: AllocationMode,
    pub budget: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub allocation: Option<IndexMap<String, f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chosen: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_cost: Option<f64>,
    pub objective: f64,
}

fn check_budget(budget: f64) -> Result<(), AllocError> {
    if budget.is_finite() && budget >= 0.0 {
        Ok(())
    } else {
        Err(AllocError::InvalidBudget(budget))
    }
}

fn to_cents(node: &str, cost: f64) -> Result<u64, AllocError> {
    let scaled = cost * 100.0;
    let rounded = scaled.round();
    if (scaled - rounded).abs() > 1e-6 {
        return Err(AllocError::CostPrecision {
            node: node.to_string(),
            cost,
        });
    }
    Ok(rounded as u64)
}

/// `a` beats `b` by more than rounding noise.
fn clearly_greater(a: f64, b: f64) -> bool {
    a - b > 1e-9 * a.abs().max(b.abs()).max(1.0)
}

/// Runs either allocator according to `request`.
pub fn allocate(graph: &SkillsGraph, request: &AllocationRequest) -> Result<PlanReport, AllocError> {
    match request.mode {
        AllocationMode::Select => {
            let sel = select_knapsack(graph, request.budget)?;
            Ok(PlanReport {
                mode: AllocationMode::Select,
                budget: request.budget,
                allocation: None,
                chosen: Some(sel.chosen),
                total_cost: Some(sel.total_cost),
                objective: sel.objective,
            })
        }
        AllocationMode::Fractional => {
            let plan = allocate_fractional(graph, request.budget)?;
            Ok(PlanReport {
                mode: AllocationMode::Fractional,
                budget: request.budget,
                allocation: Some(plan.allocation),
                chosen: None,
                total_cost: None,
                objective: plan.objective,
            })
        }
    }
}

pub fn select_knapsack(graph: &SkillsGraph, budget: f64) -> Result<NodeSelection, AllocError> {
    select_knapsack_with_limit(graph, budget, DEFAULT_MAX_CELLS)
}

/// Exact 0/1 selection by dynamic programming over costs in hundredths.
///
/// Among selections of equal effectiveness the one with fewer nodes wins,
/// then the lexicographically smallest sorted id list.
pub fn select_knapsack_with_limit(
    graph: &SkillsGraph,
    budget: f64,
    max_cells: u64,
) -> Result<NodeSelection, AllocError> {
    check_budget(budget)?;
    let nodes = graph.nodes();

    // Items are processed in id order; the suffix recurrence below relies on
    // it for the lexicographic tie-break.
    let mut order: Vec<usize> = (0..nodes.len()).collect();
    order.sort_by(|&a, &b| nodes[a].id.cmp(&nodes[b].id));
    let cents = order
        .iter()
        .map(|&i| to_cents(&nodes[i].id, nodes[i].cost))
        .collect::<Result<Vec<u64>, _>>()?;
    let total_cents: u64 = cents.iter().sum();
    let budget_cents = (budget * 100.0 + 1e-6).floor() as u64;
    let cap = budget_cents.min(total_cents);

    let cells = (order.len() as u64 + 1).saturating_mul(cap + 1);
    if cells > max_cells {
        return Err(AllocError::CostResolutionExceeded {
            cells,
            limit: max_cells,
        });
    }

    let width = cap as usize + 1;
    let n = order.len();
    // best over items[i..] for each remaining capacity: (objective, count)
    let mut value = vec![0.0f64; width];
    let mut count = vec![0u32; width];
    let mut take = vec![false; n * width];
    for pos in (0..n).rev() {
        let f = nodes[order[pos]].effectiveness;
        let c = cents[pos] as usize;
        let mut next_value = value.clone();
        let mut next_count = count.clone();
        for room in c..width {
            let v_take = f + value[room - c];
            let n_take = count[room - c] + 1;
            let v_skip = value[room];
            let n_skip = count[room];
            let better = clearly_greater(v_take, v_skip)
                || (!clearly_greater(v_skip, v_take) && n_take <= n_skip);
            if better {
                next_value[room] = v_take;
                next_count[room] = n_take;
                take[pos * width + room] = true;
            }
        }
        value = next_value;
        count = next_count;
    }

    let mut picked = vec![false; nodes.len()];
    let mut room = cap as usize;
    for pos in 0..n {
        if take[pos * width + room] {
            picked[order[pos]] = true;
            room -= cents[pos] as usize;
        }
    }

    let mut selection = NodeSelection {
        chosen: Vec::new(),
        total_cost: 0.0,
        objective: 0.0,
    };
    for (node, _) in nodes.iter().zip(&picked).filter(|(_, &p)| p) {
        selection.chosen.push(node.id.clone());
        selection.total_cost += node.cost;
        selection.objective += node.effectiveness;
    }
    Ok(selection)
}

/// Greedy by descending effectiveness (ties by id), which is optimal for the
/// linear objective. Unbounded capacity is capped at the budget. Nodes with
/// zero effectiveness receive nothing.
pub fn allocate_fractional(graph: &SkillsGraph, budget: f64) -> Result<AllocationPlan, AllocError> {
    check_budget(budget)?;
    let nodes = graph.nodes();
    let mut order: Vec<usize> = (0..nodes.len()).collect();
    order.sort_by(|&a, &b| {
        nodes[b]
            .effectiveness
            .total_cmp(&nodes[a].effectiveness)
            .then_with(|| nodes[a].id.cmp(&nodes[b].id))
    });

    let mut amounts = vec![0.0; nodes.len()];
    let mut remaining = budget;
    for i in order {
        if remaining <= 0.0 || nodes[i].effectiveness <= 0.0 {
            break;
        }
        let give = nodes[i].capacity.unwrap_or(budget).min(remaining);
        amounts[i] = give;
        remaining -= give;
    }

    let allocation: IndexMap<String, f64> = nodes
        .iter()
        .zip(amounts)
        .map(|(node, r)| (node.id.clone(), r))
        .collect();
    let objective = nodes
        .iter()
        .map(|node| node.effectiveness * allocation[&node.id])
        .sum();
    Ok(AllocationPlan {
        allocation,
        objective,
    })
}

/// `sum f(v) * r(v)` for an arbitrary plan.
pub fn objective_value(plan: &AllocationPlan, graph: &SkillsGraph) -> Result<f64, AllocError> {
    plan.allocation.iter().try_fold(0.0, |acc, (id, r)| {
        let node = graph
            .node(id)
            .ok_or_else(|| AllocError::UnknownNode(id.clone()))?;
        Ok(acc + node.effectiveness * r)
    })
}

/// True when the plan respects the budget and every node capacity.
pub fn plan_is_feasible(plan: &AllocationPlan, graph: &SkillsGraph, budget: f64) -> bool {
    plan.total() <= budget + FEASIBILITY_EPS
        && plan.allocation.iter().all(|(id, &r)| {
            r >= 0.0
                && graph
                    .node(id)
                    .map(|n| r <= n.capacity.unwrap_or(budget) + FEASIBILITY_EPS)
                    .unwrap_or(false)
        })
}
