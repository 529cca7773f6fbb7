//! The attacker: coordinated physical line disconnections masked by false
//! data injection, optimized to trip lines after the misled redispatch.
//!
//! The full attacker is a MILP ([`solve_attacker`]); for a fixed physical
//! attack and target line under relaxed dispatch and unlimited meter access
//! it collapses to an LP ([`check_attack_pair`]). [`maximal_infeasible`]
//! augments a vulnerable placement into a maximal one for No-Good cuts.

pub(crate) mod cyber;
pub(crate) mod model;
mod pairs;

pub use cyber::{construct_cyber_vector, residual_norm};
pub use pairs::{check_attack_pair, enumerate_attack_pairs, pair_count_at_size, AttackPair, PairProbe};

use crate::bigm::BigMBundle;
use crate::grid::{GridModel, LineSet, MeterLayout};
use crate::solver::{SolveStatus, SolverOptions};
use serde::{Deserialize, Serialize};

/// Strict-inequality margin: a line counts as tripped when
/// |f3| / f_max >= gamma + EPS_STRICT.
pub const EPS_STRICT: f64 = 1e-6;

/// Tolerance under which a cyber-vector component counts as untouched.
pub const AC_ZERO_TOL: f64 = 1e-7;

#[derive(Debug, thiserror::Error)]
pub enum AttackError {
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("solver timed out without a usable point; placement must be treated as potentially vulnerable")]
    SolverTimeout,
    #[error("solver failure: {0}")]
    SolverFailure(String),
    #[error("witness failed verification: {0}")]
    BadWitness(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScedMode {
    /// The attacker may pick any dispatch in the SCED feasible region
    /// (cost-vector independent defense; the evaluation default).
    Relaxed,
    /// The dispatch is the SCED optimum, enforced through its KKT system.
    Kkt,
}

/// One load-fluctuation box [lo, hi] per bus; boxes must be sign-consistent
/// per bus so |p0| stays linear inside the box.
#[derive(Debug, Clone, Serialize)]
pub struct LoadBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

/// Attacker capability knobs.
#[derive(Debug, Clone, Serialize)]
pub struct AttackParams {
    /// Maximum relative load falsification (fraction of |p0| per bus).
    pub alpha: f64,
    /// Maximum number of physically disconnected lines.
    pub xi_p: usize,
    /// Maximum number of manipulated meters; `None` means unlimited.
    pub xi_c: Option<usize>,
    pub sced_mode: ScedMode,
    /// Optional union of load boxes the true profile may move in.
    pub load_range: Option<Vec<LoadBox>>,
    /// Optional superset the placement must stay inside (staged rollout).
    pub placement_mask: Option<Vec<bool>>,
}

impl AttackParams {
    /// Evaluation defaults: alpha = 0.25, xi_p = 2, xi_c unlimited, relaxed
    /// dispatch, nominal load profile.
    pub fn default_eval() -> AttackParams {
        AttackParams {
            alpha: 0.25,
            xi_p: 2,
            xi_c: None,
            sced_mode: ScedMode::Relaxed,
            load_range: None,
            placement_mask: None,
        }
    }

    pub fn validate(&self, grid: &GridModel) -> Result<(), AttackError> {
        if !(self.alpha >= 0.0) {
            return Err(AttackError::Precondition("alpha must be >= 0".into()));
        }
        if self.sced_mode == ScedMode::Kkt && grid.cost().is_none() {
            return Err(AttackError::Precondition(
                "kkt dispatch needs a generation cost vector".into(),
            ));
        }
        if let Some(boxes) = &self.load_range {
            for (i, b) in boxes.iter().enumerate() {
                if b.lo.len() != grid.n_buses() || b.hi.len() != grid.n_buses() {
                    return Err(AttackError::Precondition(format!(
                        "load box {i} has wrong length"
                    )));
                }
                let (mut lo_sum, mut hi_sum) = (0.0, 0.0);
                for u in 0..grid.n_buses() {
                    if b.lo[u] > b.hi[u] {
                        return Err(AttackError::Precondition(format!(
                            "load box {i} empty at bus {u}"
                        )));
                    }
                    if b.lo[u] * b.hi[u] < 0.0 {
                        return Err(AttackError::Precondition(format!(
                            "load box {i} straddles zero at bus {u}"
                        )));
                    }
                    lo_sum += b.lo[u];
                    hi_sum += b.hi[u];
                }
                if lo_sum > 0.0 || hi_sum < 0.0 {
                    return Err(AttackError::Precondition(format!(
                        "load box {i} contains no balanced injection"
                    )));
                }
            }
        }
        if let Some(mask) = &self.placement_mask {
            if mask.len() != grid.n_buses() {
                return Err(AttackError::Precondition("placement mask length".into()));
            }
        }
        Ok(())
    }

    /// Largest |p0| the attacker can face (over the load range if any).
    pub fn p0_inf_norm(&self, grid: &GridModel) -> f64 {
        match &self.load_range {
            None => grid.p0().iter().fold(0.0, |m, p| m.max(p.abs())),
            Some(boxes) => boxes
                .iter()
                .flat_map(|b| b.lo.iter().chain(&b.hi))
                .fold(0.0, |m, p| m.max(p.abs())),
        }
    }

    /// True when the fixed-pair LP reduction applies.
    pub fn pair_lp_valid(&self) -> bool {
        self.sced_mode == ScedMode::Relaxed && self.xi_c.is_none()
    }
}

/// Binary PMU placement with derived bus and line coverage.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PmuPlacement {
    beta: Vec<bool>,
}

impl PmuPlacement {
    pub fn empty(n: usize) -> PmuPlacement {
        PmuPlacement {
            beta: vec![false; n],
        }
    }

    pub fn all(n: usize) -> PmuPlacement {
        PmuPlacement {
            beta: vec![true; n],
        }
    }

    pub fn from_indices(n: usize, idx: impl IntoIterator<Item = usize>) -> PmuPlacement {
        let mut p = PmuPlacement::empty(n);
        for u in idx {
            p.beta[u] = true;
        }
        p
    }

    pub fn from_bus_ids(grid: &GridModel, ids: &[u32]) -> Result<PmuPlacement, AttackError> {
        let mut p = PmuPlacement::empty(grid.n_buses());
        for &id in ids {
            let u = grid
                .bus_index(id)
                .ok_or_else(|| AttackError::Precondition(format!("unknown bus id {id}")))?;
            p.beta[u] = true;
        }
        Ok(p)
    }

    pub fn beta(&self) -> &[bool] {
        &self.beta
    }

    pub fn get(&self, u: usize) -> bool {
        self.beta[u]
    }

    pub fn set(&mut self, u: usize, v: bool) {
        self.beta[u] = v;
    }

    pub fn count(&self) -> usize {
        self.beta.iter().filter(|&&b| b).count()
    }

    pub fn indices(&self) -> Vec<usize> {
        (0..self.beta.len()).filter(|&u| self.beta[u]).collect()
    }

    pub fn bus_ids(&self, grid: &GridModel) -> Vec<u32> {
        self.indices().iter().map(|&u| grid.bus_id(u)).collect()
    }

    pub fn is_superset_of(&self, other: &PmuPlacement) -> bool {
        self.beta
            .iter()
            .zip(&other.beta)
            .all(|(a, b)| *a || !*b)
    }

    /// x_N: angle of bus u is secured iff u or a neighbor hosts a PMU.
    pub fn x_n(&self, grid: &GridModel) -> Vec<bool> {
        (0..grid.n_buses())
            .map(|u| self.beta[u] || grid.neighbors(u).iter().any(|&(v, _)| self.beta[v]))
            .collect()
    }

    /// x_L: line e is protected iff an endpoint hosts a PMU.
    pub fn x_l(&self, grid: &GridModel) -> Vec<bool> {
        grid.lines()
            .iter()
            .map(|l| self.beta[l.from] || self.beta[l.to])
            .collect()
    }
}

/// Witness of a successful attack.
#[derive(Debug, Clone, Serialize)]
pub struct AttackOutcome {
    /// Physically disconnected lines.
    pub ap: Vec<usize>,
    /// Lines tripped at t3 (recomputed from f3, not trusted from the model).
    pub targets: Vec<usize>,
    /// Signed tripping direction per target (+1: f3 > 0).
    pub target_dirs: Vec<(usize, i8)>,
    pub theta2: Vec<f64>,
    pub theta2_tilde: Vec<f64>,
    pub theta3: Vec<f64>,
    pub theta3_tilde: Vec<f64>,
    pub f2: Vec<f64>,
    pub f2_tilde: Vec<f64>,
    pub f3: Vec<f64>,
    /// Number of tripped lines in this witness.
    pub objective: usize,
    /// Nonzero components of the cyber vector (against xi_c).
    pub meters_touched: usize,
    /// The load profile the attacker exploited, when a range was allowed.
    pub load_profile_used: Option<Vec<f64>>,
}

impl AttackOutcome {
    pub fn ap_set(&self) -> LineSet {
        self.ap.iter().copied().collect()
    }

    /// True dispatch at t3: scheduled loads plus the generation the misled
    /// control center ordered. Feeds the cascade simulation.
    pub fn dispatch_t3(&self, grid: &GridModel) -> Vec<f64> {
        let bt3 = b_times(grid, &self.theta3_tilde);
        let p0 = self.load_profile_used.as_deref().unwrap_or(grid.p0());
        (0..grid.n_buses())
            .map(|u| if grid.is_gen(u) { bt3[u] } else { p0[u] })
            .collect()
    }
}

/// (B_tilde * theta) on the intact topology.
pub(crate) fn b_times(grid: &GridModel, theta: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; grid.n_buses()];
    for l in grid.lines() {
        let f = (theta[l.from] - theta[l.to]) / l.reactance;
        out[l.from] += f;
        out[l.to] -= f;
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub enum SolveOutcome {
    /// Proved: no feasible attack trips any line.
    NoAttack,
    Attack(AttackOutcome),
}

impl SolveOutcome {
    pub fn is_attack(&self) -> bool {
        matches!(self, SolveOutcome::Attack(_))
    }

    pub fn attack(&self) -> Option<&AttackOutcome> {
        match self {
            SolveOutcome::Attack(a) => Some(a),
            SolveOutcome::NoAttack => None,
        }
    }
}

/// Objective handed to the attacker MILP.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttackGoal {
    /// Maximize the number of tripped lines (reports psi_a).
    MaxTrips,
    /// Stop at the first witness with at least one trip.
    FindAny,
}

/// Solves the attacker's problem under a placement. `NoAttack` is returned
/// only on a proof (infeasibility of the trip-forced model); a timeout
/// without proof surfaces as an error so callers treat the placement as
/// potentially vulnerable.
pub fn solve_attacker(
    grid: &GridModel,
    params: &AttackParams,
    placement: &PmuPlacement,
    bigm: &BigMBundle,
    budget_s: Option<f64>,
    goal: AttackGoal,
) -> Result<SolveOutcome, AttackError> {
    solve_attacker_seeded(grid, params, placement, bigm, budget_s, goal, 0)
}

/// [`solve_attacker`] with an explicit solver seed; distinct seeds may pick
/// different (equally valid) witnesses among the optima.
pub fn solve_attacker_seeded(
    grid: &GridModel,
    params: &AttackParams,
    placement: &PmuPlacement,
    bigm: &BigMBundle,
    budget_s: Option<f64>,
    goal: AttackGoal,
    seed: u64,
) -> Result<SolveOutcome, AttackError> {
    params.validate(grid)?;
    let opts = model::BuildOpts {
        beta: model::BetaSpec::Fixed(placement),
        fixed_ap: None,
        probe: None,
        force_some_trip: true,
        objective: match goal {
            AttackGoal::MaxTrips => model::Objective::MaxTrips,
            AttackGoal::FindAny => model::Objective::Feasibility,
        },
    };
    let built = model::build_attacker_model(grid, params, bigm, &opts)?;
    let mut m = built.model;
    m.options = SolverOptions {
        time_limit: budget_s,
        seed,
        ..SolverOptions::default()
    };
    let result = m.solve();
    match result.status {
        SolveStatus::Infeasible => Ok(SolveOutcome::NoAttack),
        SolveStatus::Optimal | SolveStatus::FeasibleIncumbent => {
            let values = result.values.as_deref().unwrap();
            let outcome = built.vars.extract(grid, values);
            verify_outcome(grid, params, placement, &outcome)?;
            Ok(SolveOutcome::Attack(outcome))
        }
        SolveStatus::TimeoutNoIncumbent => Err(AttackError::SolverTimeout),
        SolveStatus::Unbounded => Err(AttackError::SolverFailure("attacker unbounded".into())),
        SolveStatus::Error => Err(AttackError::SolverFailure(
            result.message.unwrap_or_else(|| "unknown".into()),
        )),
    }
}

/// Feasibility probe: can the attacker trip `target` (either direction)
/// under a fixed physical attack? Used where the pair LP is invalid
/// (finite xi_c or KKT dispatch).
pub fn solve_attacker_fixed_pair(
    grid: &GridModel,
    params: &AttackParams,
    placement: &PmuPlacement,
    bigm: &BigMBundle,
    ap: &LineSet,
    target: usize,
    budget_s: Option<f64>,
) -> Result<Option<AttackOutcome>, AttackError> {
    params.validate(grid)?;
    let opts = model::BuildOpts {
        beta: model::BetaSpec::Fixed(placement),
        fixed_ap: Some(ap),
        probe: Some(model::Probe {
            target,
            dir: None,
        }),
        force_some_trip: false,
        objective: model::Objective::Feasibility,
    };
    let built = model::build_attacker_model(grid, params, bigm, &opts)?;
    let mut m = built.model;
    m.options.time_limit = budget_s;
    let result = m.solve();
    match result.status {
        SolveStatus::Infeasible => Ok(None),
        SolveStatus::Optimal | SolveStatus::FeasibleIncumbent => {
            let outcome = built
                .vars
                .extract(grid, result.values.as_deref().unwrap());
            verify_outcome(grid, params, placement, &outcome)?;
            Ok(Some(outcome))
        }
        SolveStatus::TimeoutNoIncumbent => Err(AttackError::SolverTimeout),
        other => Err(AttackError::SolverFailure(format!("{other:?}"))),
    }
}

/// Augments an infeasible placement into a maximal infeasible one: maximize
/// the number of protected buses subject to some attack still succeeding.
/// Suboptimal incumbents are safe, so a time cap plus a relative gap is
/// applied; `hat` itself is the fallback when nothing better comes back.
pub fn maximal_infeasible(
    grid: &GridModel,
    params: &AttackParams,
    hat: &PmuPlacement,
    bigm: &BigMBundle,
    budget_s: f64,
    witness: Option<&AttackOutcome>,
) -> Result<PmuPlacement, AttackError> {
    params.validate(grid)?;
    let opts = model::BuildOpts {
        beta: model::BetaSpec::Variable { at_least: hat },
        fixed_ap: None,
        probe: None,
        force_some_trip: true,
        objective: model::Objective::MaxBetaCount,
    };
    let built = model::build_attacker_model(grid, params, bigm, &opts)?;
    let mut m = built.model;
    m.options.time_limit = Some(budget_s);
    m.options.mip_gap = 0.05;
    // The witnessed attack under beta' = hat is a ready-made incumbent.
    if let Some(w) = witness {
        m.options.warm_start = built.vars.warm_start(grid, m.num_vars(), w, hat);
    }
    let result = m.solve();
    match result.status {
        SolveStatus::Optimal | SolveStatus::FeasibleIncumbent => {
            let values = result.values.as_deref().unwrap();
            let beta_vars = built.vars.beta.as_ref().unwrap();
            let prime = PmuPlacement {
                beta: beta_vars.iter().map(|&v| values[v.0] > 0.5).collect(),
            };
            debug_assert!(prime.is_superset_of(hat));
            Ok(prime)
        }
        // No incumbent in time, or the solve failed outright: the un-augmented
        // placement still yields a valid (weaker) cut.
        SolveStatus::TimeoutNoIncumbent | SolveStatus::Error => Ok(hat.clone()),
        SolveStatus::Infeasible => Err(AttackError::Precondition(
            "maximal_infeasible called on a placement with no successful attack".into(),
        )),
        SolveStatus::Unbounded => Err(AttackError::SolverFailure("unbounded".into())),
    }
}

/// Re-validates every invariant a witness must satisfy, independently of the
/// solver: connectivity, budgets, PMU pinning, generator integrity, and the
/// tripping predicate on f3.
pub fn verify_outcome(
    grid: &GridModel,
    params: &AttackParams,
    placement: &PmuPlacement,
    w: &AttackOutcome,
) -> Result<(), AttackError> {
    let fail = |msg: String| Err(AttackError::BadWitness(msg));
    let ap = w.ap_set();
    if !grid.connected_without(&ap) {
        return fail("physical attack disconnects the grid".into());
    }
    if ap.len() > params.xi_p {
        return fail(format!("|ap| = {} > xi_p", ap.len()));
    }
    let xl = placement.x_l(grid);
    if ap.iter().any(|&e| xl[e]) {
        return fail("attacked line is PMU-protected".into());
    }
    let xn = placement.x_n(grid);
    for u in 0..grid.n_buses() {
        if xn[u] && (w.theta2_tilde[u] - w.theta2[u]).abs() > 1e-6 {
            return fail(format!("secured angle falsified at bus {u}"));
        }
    }
    // Generator injections untouched by the falsification.
    let p0 = w.load_profile_used.as_deref().unwrap_or(grid.p0());
    let bt2 = b_times(grid, &w.theta2_tilde);
    for &g in grid.gen_buses() {
        if (bt2[g] - p0[g]).abs() > 1e-6 {
            return fail(format!("generator injection falsified at bus {g}"));
        }
    }
    // Tripping predicate, recomputed with a guard band around the strict
    // margin: claimed targets must clear it, unclaimed lines must not exceed
    // it.
    for (e, l) in grid.lines().iter().enumerate() {
        let band = (l.gamma + EPS_STRICT) * l.f_max;
        let guard = AC_ZERO_TOL * l.f_max.max(1.0);
        let claimed = w.targets.contains(&e);
        if claimed && w.f3[e].abs() < band - guard {
            return fail(format!("target {e} not actually overloaded"));
        }
        if !claimed && !ap.contains(&e) && w.f3[e].abs() > band + guard {
            return fail(format!("unreported overload on line {e}"));
        }
    }
    if let Some(xi_c) = params.xi_c {
        if w.meters_touched > xi_c {
            return fail(format!("{} meters touched > xi_c", w.meters_touched));
        }
    }
    Ok(())
}

/// Counts the nonzero components of the cyber vector a witness needs, using
/// the full meter layout.
pub(crate) fn count_meters_touched(grid: &GridModel, w: &mut AttackOutcome) {
    let meters = MeterLayout::full(grid);
    let state2 = crate::grid::DcState {
        theta: w.theta2.clone(),
        flows: w.f2.clone(),
        outages: w.ap_set(),
    };
    let ac = construct_cyber_vector(grid, &meters, &w.theta2, &w.theta2_tilde, &state2);
    w.meters_touched = ac.iter().filter(|x| x.abs() > AC_ZERO_TOL).count();
}
