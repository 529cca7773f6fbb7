//! Baseline placements: the classical full-observability dominating set and
//! a degree-greedy search under the outage-prevention goal.

use super::{sced_feasible, PlacementError, PlacementOutcome, PlacementTrace, SolveBudget};
use crate::attack::{solve_attacker, AttackGoal, AttackParams, PmuPlacement, SolveOutcome};
use crate::bigm::BigMBundle;
use crate::grid::GridModel;
use crate::solver::{ModelHandle, RowSense, SolveStatus};
use std::time::Instant;

/// Minimum placement observing every bus (each bus hosts a PMU or neighbors
/// one), optionally containing `pins`. A dominating-set MILP.
pub fn full_observability(
    grid: &GridModel,
    pins: &[usize],
) -> Result<PmuPlacement, PlacementError> {
    let n = grid.n_buses();
    let mut m = ModelHandle::minimize();
    let eps = 1.0 / ((n * (n + 3)) as f64 / 2.0 + 2.0);
    let beta: Vec<_> = (0..n)
        .map(|u| m.add_binary(1.0 + eps * (u + 1) as f64))
        .collect();
    for &u in pins {
        m.set_bounds(beta[u], 1.0, 1.0);
    }
    for u in 0..n {
        let row = std::iter::once((beta[u], 1.0))
            .chain(grid.neighbors(u).iter().map(|&(v, _)| (beta[v], 1.0)));
        m.add_row(RowSense::Ge, 1.0, row);
    }
    let r = m.solve();
    match r.status {
        SolveStatus::Optimal => {
            let values = r.values.as_deref().unwrap();
            Ok(PmuPlacement::from_indices(
                n,
                (0..n).filter(|&u| values[beta[u].0] > 0.5),
            ))
        }
        other => Err(PlacementError::MasterFailed(format!(
            "observability MILP ended with {other:?}"
        ))),
    }
}

/// Adds PMUs in descending degree order (ties by bus index) until the
/// attacker proves the placement safe.
pub fn greedy_degree(
    grid: &GridModel,
    params: &AttackParams,
    bigm: &BigMBundle,
    budget: &SolveBudget,
) -> Result<PlacementOutcome, PlacementError> {
    params.validate(grid)?;
    if params.load_range.is_none() && !sced_feasible(grid) {
        return Err(PlacementError::ScedInfeasible);
    }
    let start = Instant::now();
    let n = grid.n_buses();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| grid.degree(b).cmp(&grid.degree(a)).then(a.cmp(&b)));

    let mut beta = PmuPlacement::empty(n);
    let mut trace = PlacementTrace {
        algorithm: "greedy-degree".into(),
        ..Default::default()
    };
    for picked in 0..=n {
        let left = budget.total_s - start.elapsed().as_secs_f64();
        if left <= 0.0 {
            return Err(PlacementError::BudgetExhausted);
        }
        trace.attacker_calls += 1;
        let out = solve_attacker(grid, params, &beta, bigm, Some(left), AttackGoal::FindAny)?;
        match out {
            SolveOutcome::NoAttack => {
                trace.wall_s = start.elapsed().as_secs_f64();
                return Ok(PlacementOutcome {
                    placement: beta,
                    optimal: false,
                    verified: true,
                    trace,
                });
            }
            SolveOutcome::Attack(_) if picked < n => beta.set(order[picked], true),
            SolveOutcome::Attack(_) => unreachable!("full placement admits no attack"),
        }
    }
    unreachable!()
}
