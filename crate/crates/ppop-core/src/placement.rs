//! The defender: exact placement via alternating optimization with No-Good
//! (AONG) or No-Good plus Attack-Denial constraints (AODC), a polynomial
//! 3-phase heuristic, and the full-observability / degree-greedy baselines.

mod baselines;
pub mod denial;
mod heuristic;
mod lp_master;
mod masters;

pub use baselines::{full_observability, greedy_degree};
pub use denial::{build_attack_denial, AttackDenialBlock};
pub use heuristic::{heuristic_place, update_candidate, HeuristicKnobs};
pub use lp_master::{lp_relax_master, LpMasterSolution};
pub use masters::{aodc, aong};

use crate::attack::{AttackError, AttackPair, PmuPlacement};
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum PlacementError {
    #[error("base case is not dispatchable within limits; no placement can prevent overloads")]
    ScedInfeasible,
    #[error("master problem infeasible: {0}")]
    MasterInfeasible(String),
    #[error("master problem failed: {0}")]
    MasterFailed(String),
    #[error("budget exhausted without a verified placement")]
    BudgetExhausted,
    #[error("relaxed attack-denial LP infeasible after {0} escalations")]
    LpInfeasible(u32),
    #[error(transparent)]
    Attack(#[from] AttackError),
}

/// Wall-clock budgets for the iterative solvers. The augmentation cap
/// follows the evaluation setup (1200 s per maximal-infeasible solve).
#[derive(Debug, Clone, Serialize)]
pub struct SolveBudget {
    pub total_s: f64,
    pub eq18_cap_s: f64,
}

impl SolveBudget {
    pub fn new(total_s: f64) -> SolveBudget {
        SolveBudget {
            total_s,
            eq18_cap_s: 1200.0,
        }
    }
}

impl Default for SolveBudget {
    fn default() -> Self {
        SolveBudget::new(1800.0)
    }
}

/// Accumulated constraints driving the masters.
#[derive(Debug, Clone, Default)]
pub struct ConstraintPool {
    /// Maximal infeasible placements (No-Good cuts).
    pub nogood: Vec<PmuPlacement>,
    /// Attack-Denial blocks with their pairs.
    pub blocks: Vec<AttackDenialBlock>,
    /// Diagnostics: per-cut count of the placements each No-Good excludes,
    /// as log2 (the cut rules out every subset of the augmented placement).
    pub cutout_log2: Vec<f64>,
}

impl ConstraintPool {
    pub fn push_nogood(&mut self, beta: PmuPlacement) {
        if self.nogood.contains(&beta) {
            return;
        }
        self.cutout_log2.push(beta.count() as f64);
        self.nogood.push(beta);
    }

    pub fn push_block(&mut self, block: AttackDenialBlock) {
        if self.blocks.iter().any(|b| b.pair == block.pair) {
            return;
        }
        self.blocks.push(block);
    }

    pub fn has_pair(&self, pair: &AttackPair) -> bool {
        self.blocks.iter().any(|b| &b.pair == pair)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IterationRecord {
    pub k: usize,
    pub beta_size: usize,
    pub beta_bus_ids: Vec<u32>,
    /// `attack` when the attacker found a witness, `safe` when proved none.
    pub attacker: String,
    pub witness_ap: Vec<usize>,
    pub witness_targets: Vec<usize>,
    pub cut: String,
    pub maximal_size: Option<usize>,
    pub master_status: Option<String>,
    /// Gale certificates re-checked against the primal pair LP this round
    /// (AODC): (checked, agreed).
    pub gale_checked: Option<(usize, usize)>,
    pub wall_s: f64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct PlacementTrace {
    pub algorithm: String,
    pub iterations: Vec<IterationRecord>,
    pub nogood_cuts: usize,
    pub denial_blocks: usize,
    pub bigm_escalations: u32,
    pub lp_calls: usize,
    pub attacker_calls: usize,
    pub wall_s: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PlacementOutcome {
    pub placement: PmuPlacement,
    /// Proven cardinality-minimal (exact masters solved to optimality
    /// throughout).
    pub optimal: bool,
    /// psi_a(placement) = 0 re-proved by the attacker MILP.
    pub verified: bool,
    pub trace: PlacementTrace,
}

/// One-time sanity check: the SCED region for the base profile must be
/// nonempty, otherwise the attacker model is vacuously infeasible for every
/// placement and "no attack" would be meaningless.
pub(crate) fn sced_feasible(grid: &crate::grid::GridModel) -> bool {
    use crate::solver::{ModelHandle, RowSense};
    let mut m = ModelHandle::minimize();
    let inf = f64::INFINITY;
    let theta: Vec<_> = (0..grid.n_buses())
        .map(|u| {
            if u == grid.slack() {
                m.add_continuous(0.0, 0.0, 0.0)
            } else {
                m.add_continuous(-inf, inf, 0.0)
            }
        })
        .collect();
    let (pg_min, pg_max) = grid.pg_bounds();
    for (gi, &g) in grid.gen_buses().iter().enumerate() {
        let coeffs: Vec<_> = grid
            .neighbors(g)
            .iter()
            .flat_map(|&(v, e)| {
                let y = grid.line(e).susceptance();
                [(theta[g], y), (theta[v], -y)]
            })
            .collect();
        m.add_row(RowSense::Le, pg_max[gi], coeffs.clone());
        m.add_row(RowSense::Ge, pg_min[gi], coeffs);
    }
    for &d in grid.load_buses() {
        let coeffs: Vec<_> = grid
            .neighbors(d)
            .iter()
            .flat_map(|&(v, e)| {
                let y = grid.line(e).susceptance();
                [(theta[d], y), (theta[v], -y)]
            })
            .collect();
        m.add_row(RowSense::Eq, grid.p0()[d], coeffs);
    }
    for l in grid.lines() {
        let y = l.susceptance();
        let coeffs = [(theta[l.from], y), (theta[l.to], -y)];
        m.add_row(RowSense::Le, l.f_max, coeffs);
        m.add_row(RowSense::Ge, -l.f_max, coeffs);
    }
    matches!(m.solve().status, crate::solver::SolveStatus::Optimal)
}
