//! Exact placement by alternating optimization: solve the attacker under a
//! candidate placement, turn the witness into cuts, re-solve the master,
//! repeat until the attacker proves the placement safe.
//!
//! AONG pools No-Good cuts from maximal infeasible placements; AODC
//! additionally pools Attack-Denial blocks whose Gale certificates (with
//! McCormick-linearized xN coupling) deny the identified pairs.

use super::denial::{build_with_theta2, AttackDenialBlock};
use super::{
    sced_feasible, ConstraintPool, IterationRecord, PlacementError, PlacementOutcome,
    PlacementTrace, SolveBudget,
};
use crate::attack::{
    maximal_infeasible, solve_attacker, AttackGoal, AttackOutcome, AttackPair, AttackParams,
    PmuPlacement, SolveOutcome,
};
use crate::bigm::BigMBundle;
use crate::grid::GridModel;
use crate::solver::{ModelHandle, RowSense, SolveStatus, VarId};
use std::time::Instant;

/// Secondary objective weight: small enough that cardinality always
/// dominates, large enough to break ties deterministically by bus index.
fn tie_eps(n: usize) -> f64 {
    1.0 / ((n * (n + 3)) as f64 / 2.0 + 2.0)
}

fn beta_objective(m: &mut ModelHandle, n: usize, mask: Option<&[bool]>) -> Vec<VarId> {
    let eps = tie_eps(n);
    (0..n)
        .map(|u| {
            let v = m.add_binary(1.0 + eps * (u + 1) as f64);
            if let Some(mask) = mask {
                if !mask[u] {
                    m.set_bounds(v, 0.0, 0.0);
                }
            }
            v
        })
        .collect()
}

fn add_nogood_rows(m: &mut ModelHandle, beta: &[VarId], pool: &ConstraintPool) {
    for hat in &pool.nogood {
        let row = (0..beta.len())
            .filter(|&u| !hat.get(u))
            .map(|u| (beta[u], 1.0));
        m.add_row(RowSense::Ge, 1.0, row);
    }
}

fn extract_beta(values: &[f64], beta: &[VarId]) -> PmuPlacement {
    PmuPlacement::from_indices(
        beta.len(),
        beta.iter()
            .enumerate()
            .filter(|(_, v)| values[v.0] > 0.5)
            .map(|(u, _)| u),
    )
}

/// AONG master: minimum-cardinality placement satisfying every pooled
/// No-Good cut (and the optional rollout mask).
fn solve_nogood_master(
    grid: &GridModel,
    params: &AttackParams,
    pool: &ConstraintPool,
    limit_s: f64,
) -> Result<(PmuPlacement, bool), PlacementError> {
    let mut m = ModelHandle::minimize();
    let beta = beta_objective(&mut m, grid.n_buses(), params.placement_mask.as_deref());
    add_nogood_rows(&mut m, &beta, pool);
    m.options.time_limit = Some(limit_s);
    let r = m.solve();
    match r.status {
        SolveStatus::Optimal => Ok((extract_beta(r.values.as_deref().unwrap(), &beta), true)),
        SolveStatus::FeasibleIncumbent => {
            Ok((extract_beta(r.values.as_deref().unwrap(), &beta), false))
        }
        SolveStatus::Infeasible => Err(PlacementError::MasterInfeasible(
            "no placement satisfies the cuts (placement mask too tight?)".into(),
        )),
        other => Err(PlacementError::MasterFailed(format!(
            "{other:?}: {}",
            r.message.unwrap_or_default()
        ))),
    }
}

pub fn aong(
    grid: &GridModel,
    params: &AttackParams,
    bigm: &BigMBundle,
    budget: &SolveBudget,
) -> Result<PlacementOutcome, PlacementError> {
    alternating(grid, params, bigm, budget, false)
}

pub fn aodc(
    grid: &GridModel,
    params: &AttackParams,
    bigm: &BigMBundle,
    budget: &SolveBudget,
) -> Result<PlacementOutcome, PlacementError> {
    if !params.pair_lp_valid() {
        return Err(PlacementError::Attack(
            crate::attack::AttackError::Precondition(
                "aodc needs relaxed dispatch and unlimited xi_c".into(),
            ),
        ));
    }
    alternating(grid, params, bigm, budget, true)
}

fn alternating(
    grid: &GridModel,
    params: &AttackParams,
    bigm: &BigMBundle,
    budget: &SolveBudget,
    with_denial: bool,
) -> Result<PlacementOutcome, PlacementError> {
    params.validate(grid)?;
    if params.load_range.is_none() && !sced_feasible(grid) {
        return Err(PlacementError::ScedInfeasible);
    }
    let start = Instant::now();
    let remaining = |start: Instant| budget.total_s - start.elapsed().as_secs_f64();

    let mut bigm = bigm.clone();
    let mut pool = ConstraintPool::default();
    let mut beta = PmuPlacement::empty(grid.n_buses());
    let mut trace = PlacementTrace {
        algorithm: if with_denial { "aodc" } else { "aong" }.into(),
        ..Default::default()
    };
    let mut optimal = true;

    for k in 1.. {
        let iter_start = Instant::now();
        let left = remaining(start);
        if left <= 0.0 {
            return Err(PlacementError::BudgetExhausted);
        }
        trace.attacker_calls += 1;
        let outcome = solve_attacker(grid, params, &beta, &bigm, Some(left), AttackGoal::FindAny)?;
        let mut rec = IterationRecord {
            k,
            beta_size: beta.count(),
            beta_bus_ids: beta.bus_ids(grid),
            attacker: String::new(),
            witness_ap: Vec::new(),
            witness_targets: Vec::new(),
            cut: String::new(),
            maximal_size: None,
            master_status: None,
            gale_checked: None,
            wall_s: 0.0,
        };
        let witness = match outcome {
            SolveOutcome::NoAttack => {
                rec.attacker = "safe".into();
                rec.wall_s = iter_start.elapsed().as_secs_f64();
                trace.iterations.push(rec);
                trace.nogood_cuts = pool.nogood.len();
                trace.denial_blocks = pool.blocks.len();
                trace.bigm_escalations = bigm.escalations;
                trace.wall_s = start.elapsed().as_secs_f64();
                return Ok(PlacementOutcome {
                    placement: beta,
                    optimal,
                    verified: true,
                    trace,
                });
            }
            SolveOutcome::Attack(w) => w,
        };
        rec.attacker = "attack".into();
        rec.witness_ap = witness.ap.clone();
        rec.witness_targets = witness.targets.clone();

        // No-Good cut from the maximal augmentation of the vulnerable beta.
        let cap = budget.eq18_cap_s.min(remaining(start).max(1.0));
        let prime = maximal_infeasible(grid, params, &beta, &bigm, cap, Some(&witness))?;
        rec.maximal_size = Some(prime.count());
        pool.push_nogood(prime);
        rec.cut = if with_denial {
            "nogood+denial".into()
        } else {
            "nogood".into()
        };
        if with_denial {
            for block in blocks_from_witness(grid, params, &bigm, &witness) {
                pool.push_block(block);
            }
        }

        // Master step, with certificate re-checks and escalation under AODC.
        let left = remaining(start);
        if left <= 0.0 {
            return Err(PlacementError::BudgetExhausted);
        }
        let (next, exact) = if with_denial {
            solve_aodc_master(grid, params, &mut bigm, &pool, left, &mut rec)?
        } else {
            solve_nogood_master(grid, params, &pool, left)?
        };
        if !exact {
            optimal = false;
        }
        rec.master_status = Some(if exact { "optimal" } else { "incumbent" }.into());
        beta = next;
        rec.wall_s = iter_start.elapsed().as_secs_f64();
        trace.iterations.push(rec);
    }
    unreachable!()
}

/// One Attack-Denial block per tripped line of the witness, in the witness's
/// overload direction, reusing the witness's ground-truth angles.
pub(crate) fn blocks_from_witness(
    grid: &GridModel,
    params: &AttackParams,
    bigm: &BigMBundle,
    witness: &AttackOutcome,
) -> Vec<AttackDenialBlock> {
    witness
        .target_dirs
        .iter()
        .map(|&(target, dir)| {
            let pair = AttackPair {
                ap: witness.ap_set(),
                target,
                dir,
            };
            // theta2 from the witness is the unique post-attack state; under
            // a floating load profile it reflects the exploited profile.
            build_with_theta2(
                grid,
                params,
                bigm,
                &pair,
                witness.theta2.clone(),
                witness.load_profile_used.as_deref(),
            )
        })
        .collect()
}

/// AODC master: beta/xN/xL coverage, No-Good rows, and per pooled pair
/// either a Gale certificate (w = 0) or coverage of an attacked line
/// (w = 1), with the bilinear (F3 xN)^T q2 term McCormick-linearized.
/// Every returned solution has its w = 0 certificates re-checked against
/// the primal block LP; disagreement escalates the dual constants.
fn solve_aodc_master(
    grid: &GridModel,
    params: &AttackParams,
    bigm: &mut BigMBundle,
    pool: &ConstraintPool,
    limit_s: f64,
    rec: &mut IterationRecord,
) -> Result<(PmuPlacement, bool), PlacementError> {
    loop {
        let (beta, exact, w_zero_pairs, mccormick_ok) =
            solve_aodc_master_once(grid, params, bigm, pool, limit_s)?;
        // Gale soundness: every pair the master claims denied must have an
        // infeasible primal block under the chosen coverage.
        let xn: Vec<bool> = beta.x_n(grid);
        let mut agreed = 0;
        for &k in &w_zero_pairs {
            if !pool.blocks[k].feasible_under(&xn) {
                agreed += 1;
            }
        }
        rec.gale_checked = Some((w_zero_pairs.len(), agreed));
        if agreed == w_zero_pairs.len() && mccormick_ok {
            return Ok((beta, exact));
        }
        if bigm.escalations >= 8 {
            return Err(PlacementError::LpInfeasible(bigm.escalations));
        }
        *bigm = bigm.escalated();
    }
}

fn solve_aodc_master_once(
    grid: &GridModel,
    params: &AttackParams,
    bigm: &BigMBundle,
    pool: &ConstraintPool,
    limit_s: f64,
) -> Result<(PmuPlacement, bool, Vec<usize>, bool), PlacementError> {
    let n = grid.n_buses();
    let mut m = ModelHandle::minimize();
    let beta = beta_objective(&mut m, n, params.placement_mask.as_deref());
    let xn: Vec<VarId> = (0..n).map(|_| m.add_binary(0.0)).collect();
    let xl: Vec<VarId> = (0..grid.n_lines()).map(|_| m.add_binary(0.0)).collect();

    // Coverage coupling.
    let delta_max = (0..n).map(|u| grid.degree(u) + 1).max().unwrap() as f64;
    for u in 0..n {
        let card = (grid.degree(u) + 1) as f64;
        let mut hood = vec![(beta[u], 1.0 / card)];
        hood.extend(grid.neighbors(u).iter().map(|&(v, _)| (beta[v], 1.0 / card)));
        let mut lower = hood.clone();
        lower.push((xn[u], -1.0));
        m.add_row(RowSense::Le, 0.0, lower);
        let mut upper: Vec<(VarId, f64)> = hood.into_iter().map(|(v, c)| (v, -c)).collect();
        upper.push((xn[u], 1.0));
        m.add_row(RowSense::Le, (delta_max - 1.0) / delta_max, upper);
    }
    for (e, l) in grid.lines().iter().enumerate() {
        m.add_row(
            RowSense::Le,
            0.0,
            [(beta[l.from], 0.5), (beta[l.to], 0.5), (xl[e], -1.0)],
        );
        m.add_row(
            RowSense::Le,
            0.5,
            [(beta[l.from], -0.5), (beta[l.to], -0.5), (xl[e], 1.0)],
        );
    }

    add_nogood_rows(&mut m, &beta, pool);

    // Per-pair certificate machinery.
    let mut w_vars = Vec::with_capacity(pool.blocks.len());
    let mut y_vars: Vec<Vec<VarId>> = Vec::with_capacity(pool.blocks.len());
    let mut q2_vars: Vec<Vec<VarId>> = Vec::with_capacity(pool.blocks.len());
    let inf = f64::INFINITY;
    for block in &pool.blocks {
        let q1: Vec<VarId> = (0..block.m1())
            .map(|_| m.add_continuous(-inf, inf, 0.0))
            .collect();
        let q2: Vec<VarId> = (0..block.m2())
            .map(|_| m.add_continuous(0.0, inf, 0.0))
            .collect();
        let w = m.add_binary(0.0);
        let y: Vec<VarId> = (0..n)
            .map(|_| m.add_continuous(bigm.mf_lower, 0.0, 0.0))
            .collect();

        // F1' q1 + F2' q2 = 0, one row per y-space column.
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

        // McCormick: y_u = xN_u * g_u where g_u = -m2theta * (q2p_u + q2n_u)
        // ranges in [mf_lower, 0]; the range itself is enforced.
        for u in 0..n {
            let qp = q2[block.pin_p_row(u)];
            let qn = q2[block.pin_n_row(u)];
            m.add_row(
                RowSense::Le,
                bigm.mf_lower.abs() / block.m2theta,
                [(qp, 1.0), (qn, 1.0)],
            );
            m.add_row(RowSense::Ge, 0.0, [(y[u], 1.0), (xn[u], -bigm.mf_lower)]);
            // y <= g - mf_lower (1 - xN)
            m.add_row(
                RowSense::Le,
                -bigm.mf_lower,
                [
                    (y[u], 1.0),
                    (qp, block.m2theta),
                    (qn, block.m2theta),
                    (xn[u], -bigm.mf_lower),
                ],
            );
            // y >= g
            m.add_row(
                RowSense::Ge,
                0.0,
                [(y[u], 1.0), (qp, block.m2theta), (qn, block.m2theta)],
            );
        }

        // Margin: s1'q1 + s2'q2 + sum_u y_u <= w - 1.
        let margin = block
            .s1
            .iter()
            .enumerate()
            .map(|(i, &b)| (q1[i], b))
            .chain(block.s2.iter().enumerate().map(|(i, &b)| (q2[i], b)))
            .chain(y.iter().map(|&v| (v, 1.0)))
            .chain([(w, -1.0)]);
        m.add_row(RowSense::Le, -1.0, margin);

        // Coverage alternative: some attacked line of the pair protected.
        let cover = block
            .pair
            .ap
            .iter()
            .map(|&l| (xl[l], 1.0))
            .chain([(w, -1.0)]);
        m.add_row(RowSense::Ge, 0.0, cover);

        w_vars.push(w);
        y_vars.push(y);
        q2_vars.push(q2);
    }

    m.options.time_limit = Some(limit_s);
    let r = m.solve();
    let (values, exact) = match r.status {
        SolveStatus::Optimal => (r.values.as_deref().unwrap(), true),
        SolveStatus::FeasibleIncumbent => (r.values.as_deref().unwrap(), false),
        SolveStatus::Infeasible => {
            return Err(PlacementError::MasterInfeasible(
                "aodc master infeasible".into(),
            ))
        }
        other => {
            return Err(PlacementError::MasterFailed(format!(
                "{other:?}: {}",
                r.message.unwrap_or_default()
            )))
        }
    };
    let chosen = extract_beta(values, &beta);
    let w_zero: Vec<usize> = w_vars
        .iter()
        .enumerate()
        .filter(|(_, w)| values[w.0] < 0.5)
        .map(|(k, _)| k)
        .collect();
    // McCormick exactness at the binary point.
    let mut mccormick_ok = true;
    for (k, block) in pool.blocks.iter().enumerate() {
        for u in 0..n {
            let g = -block.m2theta
                * (values[q2_vars[k][block.pin_p_row(u)].0]
                    + values[q2_vars[k][block.pin_n_row(u)].0]);
            let xnv = values[xn[u].0] > 0.5;
            let y = values[y_vars[k][u].0];
            let want = if xnv { g } else { 0.0 };
            if (y - want).abs() > 1e-6 * (1.0 + g.abs()) {
                mccormick_ok = false;
            }
        }
    }
    Ok((chosen, exact, w_zero, mccormick_ok))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bigm::compute_bigm;
    use crate::cases::{ring5, triangle3_with_limits};

    fn exhaustive_optimum(
        grid: &GridModel,
        params: &AttackParams,
        bigm: &BigMBundle,
    ) -> (usize, Vec<PmuPlacement>) {
        // Brute force over all 2^n placements with the attacker MILP as the
        // psi_a oracle.
        let n = grid.n_buses();
        let mut best = usize::MAX;
        let mut safe = Vec::new();
        for mask in 0..(1u32 << n) {
            let beta =
                PmuPlacement::from_indices(n, (0..n).filter(|i| mask & (1 << i) != 0));
            let out = solve_attacker(grid, params, &beta, bigm, None, AttackGoal::FindAny)
                .unwrap();
            if !out.is_attack() {
                best = best.min(beta.count());
                safe.push(beta);
            }
        }
        (best, safe)
    }

    #[test]
    fn aong_and_aodc_match_brute_force_on_triangle() {
        let g = triangle3_with_limits(0.8, 1.2);
        let params = AttackParams {
            xi_p: 1,
            ..AttackParams::default_eval()
        };
        let bm = compute_bigm(&g, &params);
        let (best, _) = exhaustive_optimum(&g, &params, &bm);
        let budget = SolveBudget::new(120.0);
        let a = aong(&g, &params, &bm, &budget).unwrap();
        assert!(a.verified && a.optimal);
        assert_eq!(a.placement.count(), best);
        let d = aodc(&g, &params, &bm, &budget).unwrap();
        assert!(d.verified && d.optimal);
        assert_eq!(d.placement.count(), best);
    }

    #[test]
    fn aong_and_aodc_match_brute_force_on_ring5() {
        let g = ring5();
        let params = AttackParams {
            xi_p: 1,
            ..AttackParams::default_eval()
        };
        let bm = compute_bigm(&g, &params);
        let (best, _) = exhaustive_optimum(&g, &params, &bm);
        let budget = SolveBudget::new(300.0);
        let a = aong(&g, &params, &bm, &budget).unwrap();
        let d = aodc(&g, &params, &bm, &budget).unwrap();
        assert_eq!(a.placement.count(), best, "aong vs brute force");
        assert_eq!(d.placement.count(), best, "aodc vs brute force");
        // Gale checks ran and agreed on every recorded AODC iteration.
        for rec in &d.trace.iterations {
            if let Some((checked, agreed)) = rec.gale_checked {
                assert_eq!(checked, agreed);
            }
        }
    }

    #[test]
    fn mask_restricts_the_master() {
        let g = triangle3_with_limits(0.8, 1.2);
        let params = AttackParams {
            xi_p: 1,
            placement_mask: Some(vec![true, true, false]),
            ..AttackParams::default_eval()
        };
        let bm = compute_bigm(&g, &params);
        match aong(&g, &params, &bm, &SolveBudget::new(60.0)) {
            Ok(out) => {
                assert!(!out.placement.get(2));
                assert!(out.verified);
            }
            Err(PlacementError::MasterInfeasible(_)) => {}
            Err(e) => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn undispatchable_base_case_is_an_error() {
        // Load exceeds every line limit: SCED has no feasible point.
        let g = triangle3_with_limits(0.2, 1.2);
        let params = AttackParams::default_eval();
        let bm = compute_bigm(&g, &params);
        assert!(matches!(
            aong(&g, &params, &bm, &SolveBudget::new(60.0)),
            Err(PlacementError::ScedInfeasible)
        ));
    }
}
