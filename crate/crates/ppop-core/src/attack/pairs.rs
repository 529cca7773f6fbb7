//! Attack pairs: a physical attack set plus a target line. For a fixed pair
//! under relaxed dispatch and unlimited meter access the attacker reduces to
//! an LP, probed here in both overload directions.

use super::{model, verify_outcome, AttackError, AttackOutcome, AttackParams, PmuPlacement};
use crate::bigm::BigMBundle;
use crate::grid::{GridModel, LineSet};
use crate::solver::SolveStatus;
use itertools::Itertools;

/// A directional attack pair as pooled by the masters: `dir` is the sign of
/// the overload at the target line.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct AttackPair {
    pub ap: LineSet,
    pub target: usize,
    pub dir: i8,
}

#[derive(Debug, Clone)]
pub struct PairProbe {
    pub feasible: bool,
    /// Overload direction that succeeded.
    pub dir: Option<i8>,
    pub witness: Option<AttackOutcome>,
}

/// LP feasibility of the pair (ap, target) under a placement: does some
/// undetectable falsification make the misled dispatch overload the target?
/// Both overload directions are probed. Requires relaxed dispatch and
/// unlimited meters; callers outside that regime fall back to
/// [`super::solve_attacker_fixed_pair`].
pub fn check_attack_pair(
    grid: &GridModel,
    params: &AttackParams,
    placement: &PmuPlacement,
    bigm: &BigMBundle,
    ap: &LineSet,
    target: usize,
) -> Result<PairProbe, AttackError> {
    if !params.pair_lp_valid() {
        return Err(AttackError::Precondition(
            "pair LP needs relaxed dispatch and unlimited xi_c".into(),
        ));
    }
    if ap.len() > params.xi_p {
        return Err(AttackError::Precondition("|ap| > xi_p".into()));
    }
    if !grid.connected_without(ap) {
        return Err(AttackError::Precondition("ap disconnects the grid".into()));
    }
    let xl = placement.x_l(grid);
    if ap.iter().any(|&e| xl[e]) {
        // A protected line cannot be disconnected, so the pair cannot form.
        return Ok(PairProbe {
            feasible: false,
            dir: None,
            witness: None,
        });
    }
    for dir in [1i8, -1] {
        if let Some(w) = probe_direction(grid, params, placement, bigm, ap, target, dir)? {
            return Ok(PairProbe {
                feasible: true,
                dir: Some(dir),
                witness: Some(w),
            });
        }
    }
    Ok(PairProbe {
        feasible: false,
        dir: None,
        witness: None,
    })
}

/// One-direction LP probe; also used by the masters' per-iteration
/// certificate checks.
pub(crate) fn probe_direction(
    grid: &GridModel,
    params: &AttackParams,
    placement: &PmuPlacement,
    bigm: &BigMBundle,
    ap: &LineSet,
    target: usize,
    dir: i8,
) -> Result<Option<AttackOutcome>, AttackError> {
    let opts = model::BuildOpts {
        beta: model::BetaSpec::Fixed(placement),
        fixed_ap: Some(ap),
        probe: Some(model::Probe {
            target,
            dir: Some(dir),
        }),
        force_some_trip: false,
        objective: model::Objective::Feasibility,
    };
    let built = model::build_attacker_model(grid, params, bigm, &opts)?;
    let result = built.model.solve();
    match result.status {
        SolveStatus::Infeasible => Ok(None),
        SolveStatus::Optimal => {
            let outcome = built
                .vars
                .extract(grid, result.values.as_deref().unwrap());
            verify_outcome(grid, params, placement, &outcome)?;
            Ok(Some(outcome))
        }
        other => Err(AttackError::SolverFailure(format!(
            "pair probe ended with {other:?}: {}",
            result.message.unwrap_or_default()
        ))),
    }
}

/// All candidate pairs under a placement: |ap| <= xi_p (the empty physical
/// attack included), no attacked line protected, post-attack grid connected,
/// target outside ap.
pub fn enumerate_attack_pairs(
    grid: &GridModel,
    params: &AttackParams,
    placement: &PmuPlacement,
) -> Vec<(LineSet, usize)> {
    let m = grid.n_lines();
    let xl = placement.x_l(grid);
    let free: Vec<usize> = (0..m).filter(|&e| !xl[e]).collect();
    let mut out = Vec::new();
    for k in 0..=params.xi_p.min(free.len()) {
        for combo in free.iter().copied().combinations(k) {
            let ap: LineSet = combo.into_iter().collect();
            if !grid.connected_without(&ap) {
                continue;
            }
            for target in 0..m {
                if !ap.contains(&target) {
                    out.push((ap.clone(), target));
                }
            }
        }
    }
    out
}

/// The raw pair count at exactly `k` attacked lines before any exclusions:
/// |E| * C(|E|, k) targets-times-subsets.
pub fn pair_count_at_size(n_lines: usize, k: usize) -> u128 {
    let mut c: u128 = 1;
    for i in 0..k {
        c = c * (n_lines - i) as u128 / (i + 1) as u128;
    }
    c * n_lines as u128
}
