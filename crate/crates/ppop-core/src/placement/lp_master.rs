//! LP relaxation of the Attack-Denial master: per pooled pair a Gale
//! certificate whose angle-pinning duals are throttled by the fractional
//! placement, plus relaxed No-Good rows. Rounding the fractional solution
//! up yields a placement that denies every pooled pair.

use super::denial::AttackDenialBlock;
use super::PlacementError;
use crate::attack::PmuPlacement;
use crate::bigm::BigMBundle;
use crate::grid::GridModel;
use crate::solver::{ModelHandle, RowSense, SolveStatus, VarId};

#[derive(Debug, Clone)]
pub struct LpMasterSolution {
    /// Fractional placement in [0, 1] per bus.
    pub beta: Vec<f64>,
    /// Per pair, per bus: the angle-pinning dual mass (q2p + q2n), the
    /// effectiveness proxy behind the fractional values.
    pub pin_duals: Vec<Vec<f64>>,
}

impl LpMasterSolution {
    pub fn rounded_up(&self) -> PmuPlacement {
        PmuPlacement::from_indices(
            self.beta.len(),
            (0..self.beta.len()).filter(|&u| self.beta[u] > 1e-9),
        )
    }
}

/// Solves the relaxed master over the pooled pairs and No-Good placements,
/// with `pins` forced to 1. Infeasibility triggers doubling of the dual
/// constants (up to 8 times) before giving up.
pub fn lp_relax_master(
    grid: &GridModel,
    bigm: &mut BigMBundle,
    blocks: &[AttackDenialBlock],
    nogood: &[PmuPlacement],
    pins: &[usize],
) -> Result<LpMasterSolution, PlacementError> {
    loop {
        match solve_once(grid, bigm, blocks, nogood, pins) {
            Some(sol) => return Ok(sol),
            None => {
                if bigm.escalations >= 8 {
                    return Err(PlacementError::LpInfeasible(bigm.escalations));
                }
                *bigm = bigm.escalated();
            }
        }
    }
}

fn solve_once(
    grid: &GridModel,
    bigm: &BigMBundle,
    blocks: &[AttackDenialBlock],
    nogood: &[PmuPlacement],
    pins: &[usize],
) -> Option<LpMasterSolution> {
    let n = grid.n_buses();
    let mut m = ModelHandle::minimize();
    let beta: Vec<VarId> = (0..n).map(|_| m.add_continuous(0.0, 1.0, 1.0)).collect();
    for &u in pins {
        m.set_bounds(beta[u], 1.0, 1.0);
    }
    for hat in nogood {
        let row = (0..n).filter(|&u| !hat.get(u)).map(|u| (beta[u], 1.0));
        m.add_row(RowSense::Ge, 1.0, row);
    }

    let inf = f64::INFINITY;
    let mut q2_handles = Vec::with_capacity(blocks.len());
    for block in blocks {
        let q1: Vec<VarId> = (0..block.m1())
            .map(|_| m.add_continuous(-inf, inf, 0.0))
            .collect();
        let q2: Vec<VarId> = (0..block.m2())
            .map(|_| m.add_continuous(0.0, inf, 0.0))
            .collect();
        let mut cols: Vec<Vec<(VarId, f64)>> = vec![Vec::new(); block.n_cols()];
        for (i, row) in block.f1.iter().enumerate() {
            for &(c, v) in row {
                cols[c].push((q1[i], v));
            }
        }
        for (i, row) in block.f2.iter().enumerate() {
            for &(c, v) in row {
                cols[c].push((q2[i], v));
            }
        }
        for col in cols {
            m.add_row(RowSense::Eq, 0.0, col);
        }
        // Margin with the worst-case coverage folded in:
        // s1'q1 + (s2 + F3 * 1)'q2 <= -1.
        let margin = block
            .s1
            .iter()
            .enumerate()
            .map(|(i, &b)| (q1[i], b))
            .chain(block.s2.iter().enumerate().map(|(i, &b)| {
                let f3_rowsum = if i >= 2 * n && i < 4 * n {
                    -block.m2theta
                } else {
                    0.0
                };
                (q2[i], b + f3_rowsum)
            }));
        m.add_row(RowSense::Le, -1.0, margin);
        // Pinning duals only where the (fractional) placement can secure the
        // angle: q2p_u + q2n_u <= Mq * (A_underbar beta)_u.
        for u in 0..n {
            let mut row = vec![
                (q2[block.pin_p_row(u)], 1.0),
                (q2[block.pin_n_row(u)], 1.0),
                (beta[u], -bigm.mq),
            ];
            row.extend(grid.neighbors(u).iter().map(|&(v, _)| (beta[v], -bigm.mq)));
            m.add_row(RowSense::Le, 0.0, row);
        }
        q2_handles.push(q2);
    }

    let r = m.solve();
    match r.status {
        SolveStatus::Optimal => {
            let values = r.values.as_deref().unwrap();
            let pin_duals = blocks
                .iter()
                .zip(&q2_handles)
                .map(|(block, q2)| {
                    (0..n)
                        .map(|u| {
                            values[q2[block.pin_p_row(u)].0] + values[q2[block.pin_n_row(u)].0]
                        })
                        .collect()
                })
                .collect();
            Some(LpMasterSolution {
                beta: beta.iter().map(|v| values[v.0]).collect(),
                pin_duals,
            })
        }
        SolveStatus::Infeasible => None,
        other => panic!("lp master ended with {other:?}"),
    }
}
