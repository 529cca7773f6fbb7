//! DC power-flow solve: B_reduced * theta = p with the slack angle pinned.

use super::{DcState, GridError, GridModel, LineSet, BALANCE_TOL};
use nalgebra::{DMatrix, DVector};

pub(super) fn solve(
    grid: &GridModel,
    injections: &[f64],
    outages: &LineSet,
) -> Result<DcState, GridError> {
    let n = grid.n_buses();
    assert_eq!(injections.len(), n, "injection vector length mismatch");
    let scale = injections.iter().fold(1.0f64, |m, p| m.max(p.abs()));
    let imbalance: f64 = injections.iter().sum();
    if imbalance.abs() > BALANCE_TOL * scale {
        return Err(GridError::UnbalancedInjection(imbalance));
    }
    if !grid.connected_without(outages) {
        return Err(GridError::IslandedGrid);
    }

    let theta = solve_connected(grid, injections, outages, grid.slack());
    let flows = flows_from_theta(grid, &theta, outages);
    Ok(DcState {
        theta,
        flows,
        outages: outages.clone(),
    })
}

/// Angle solution on a connected (sub)graph; callers guarantee that every bus
/// with a nonzero injection is reachable from `reference`.
pub(super) fn solve_connected(
    grid: &GridModel,
    injections: &[f64],
    outages: &LineSet,
    reference: usize,
) -> Vec<f64> {
    let n = grid.n_buses();
    let b = grid.admittance(outages);
    let comp = super::paths::components(grid, outages);
    // Drop the reference row/column; buses outside the reference's component
    // get an identity row instead (their injections are zero by the caller's
    // contract, so their angles come out zero).
    let keep: Vec<usize> = (0..n).filter(|&u| u != reference).collect();
    let mut b_red = DMatrix::zeros(keep.len(), keep.len());
    let mut p_red = DVector::zeros(keep.len());
    for (i, &u) in keep.iter().enumerate() {
        if comp[u] != comp[reference] {
            b_red[(i, i)] = 1.0;
            continue;
        }
        p_red[i] = injections[u];
        for (j, &v) in keep.iter().enumerate() {
            if comp[v] == comp[reference] {
                b_red[(i, j)] = b[(u, v)];
            }
        }
    }
    let lu = b_red.lu();
    let sol = lu.solve(&p_red).expect("reduced admittance is singular");
    let mut theta = vec![0.0; n];
    for (i, &u) in keep.iter().enumerate() {
        theta[u] = sol[i];
    }
    theta
}

pub(super) fn flows_from_theta(grid: &GridModel, theta: &[f64], outages: &LineSet) -> Vec<f64> {
    grid.lines()
        .iter()
        .enumerate()
        .map(|(e, l)| {
            if outages.contains(&e) {
                0.0
            } else {
                (theta[l.from] - theta[l.to]) / l.reactance
            }
        })
        .collect()
}
