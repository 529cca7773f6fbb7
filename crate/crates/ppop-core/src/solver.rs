//! Backend-neutral LP/MILP modeling layer.
//!
//! A [`ModelHandle`] holds variables, sparse linear rows and a linear
//! objective; [`ModelHandle::solve`] hands it to the configured backend and
//! re-verifies the returned point row by row before reporting it. Exactly one
//! open-source MILP backend is compiled in (HiGHS); `PPOP_SOLVER` selects it
//! by name so a misconfigured environment fails loudly instead of silently.

mod highs_backend;
mod lp_file;

use serde::Serialize;
use std::time::Duration;

#[derive(Debug, thiserror::Error)]
pub enum SolverError {
    #[error("unknown solver backend `{0}` (set PPOP_SOLVER=highs or unset it)")]
    UnknownBackend(String),
    #[error("model rejected: {0}")]
    InvalidModel(String),
}

/// Index of a variable inside one [`ModelHandle`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub(crate) usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Continuous,
    Binary,
}

#[derive(Debug, Clone)]
pub struct Variable {
    pub kind: VarKind,
    pub lb: f64,
    pub ub: f64,
    /// Objective coefficient.
    pub obj: f64,
    pub name: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowSense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
pub struct Row {
    pub coeffs: Vec<(VarId, f64)>,
    pub sense: RowSense,
    pub rhs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjSense {
    Minimize,
    Maximize,
}

/// Solver knobs. Golden tests pin `threads = 1` and a fixed seed so repeated
/// runs return identical statuses and objectives.
#[derive(Debug, Clone)]
pub struct SolverOptions {
    pub time_limit: Option<f64>,
    pub seed: u64,
    pub threads: u32,
    pub mip_gap: f64,
    /// Optional feasible point handed to the backend as a MIP start.
    pub warm_start: Option<Vec<f64>>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            time_limit: None,
            seed: 0,
            threads: 1,
            mip_gap: 0.0,
            warm_start: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Optimal,
    FeasibleIncumbent,
    Infeasible,
    Unbounded,
    TimeoutNoIncumbent,
    Error,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub status: SolveStatus,
    /// Objective value, present iff a point is.
    pub objective: Option<f64>,
    /// Variable values, present iff status is optimal or feasible-incumbent.
    pub values: Option<Vec<f64>>,
    pub wall: Duration,
    /// Relative MIP gap of the incumbent, when the backend reports one.
    pub gap: Option<f64>,
    pub message: Option<String>,
}

impl SolveResult {
    pub fn has_point(&self) -> bool {
        matches!(
            self.status,
            SolveStatus::Optimal | SolveStatus::FeasibleIncumbent
        )
    }

    pub fn value(&self, v: VarId) -> f64 {
        self.values.as_ref().expect("no solution point")[v.0]
    }
}

/// Tolerance for the row-by-row re-verification of returned points.
pub const ROW_CHECK_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Default)]
pub struct ModelHandle {
    vars: Vec<Variable>,
    rows: Vec<Row>,
    pub obj_sense: Option<ObjSense>,
    pub options: SolverOptions,
}

impl ModelHandle {
    pub fn new(sense: ObjSense) -> Self {
        ModelHandle {
            obj_sense: Some(sense),
            ..Default::default()
        }
    }

    pub fn minimize() -> Self {
        Self::new(ObjSense::Minimize)
    }

    pub fn maximize() -> Self {
        Self::new(ObjSense::Maximize)
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn vars(&self) -> &[Variable] {
        &self.vars
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn add_continuous(&mut self, lb: f64, ub: f64, obj: f64) -> VarId {
        self.push_var(Variable {
            kind: VarKind::Continuous,
            lb,
            ub,
            obj,
            name: None,
        })
    }

    pub fn add_binary(&mut self, obj: f64) -> VarId {
        self.push_var(Variable {
            kind: VarKind::Binary,
            lb: 0.0,
            ub: 1.0,
            obj,
            name: None,
        })
    }

    /// Binary variable pinned to a constant (used to freeze decisions such as
    /// a fixed physical attack while keeping the row structure unchanged).
    pub fn add_binary_fixed(&mut self, value: bool) -> VarId {
        let v = if value { 1.0 } else { 0.0 };
        self.push_var(Variable {
            kind: VarKind::Binary,
            lb: v,
            ub: v,
            obj: 0.0,
            name: None,
        })
    }

    pub fn set_name(&mut self, v: VarId, name: impl Into<String>) {
        self.vars[v.0].name = Some(name.into());
    }

    pub fn set_obj(&mut self, v: VarId, obj: f64) {
        assert!(obj.is_finite(), "objective coefficient must be finite");
        self.vars[v.0].obj = obj;
    }

    pub fn set_bounds(&mut self, v: VarId, lb: f64, ub: f64) {
        assert!(!lb.is_nan() && !ub.is_nan() && lb <= ub);
        self.vars[v.0].lb = lb;
        self.vars[v.0].ub = ub;
    }

    fn push_var(&mut self, v: Variable) -> VarId {
        assert!(!v.lb.is_nan() && !v.ub.is_nan(), "NaN bound");
        assert!(v.lb <= v.ub, "empty variable domain [{}, {}]", v.lb, v.ub);
        assert!(v.obj.is_finite(), "objective coefficient must be finite");
        self.vars.push(v);
        VarId(self.vars.len() - 1)
    }

    /// Adds `sum coeffs {<=,=,>=} rhs`. Coefficients on the same variable are
    /// accumulated; zero coefficients are dropped.
    pub fn add_row<I>(&mut self, sense: RowSense, rhs: f64, coeffs: I)
    where
        I: IntoIterator<Item = (VarId, f64)>,
    {
        assert!(rhs.is_finite(), "row rhs must be finite");
        let mut acc: Vec<(VarId, f64)> = Vec::new();
        for (v, c) in coeffs {
            assert!(c.is_finite(), "row coefficient must be finite");
            assert!(v.0 < self.vars.len(), "row references unknown variable");
            if c == 0.0 {
                continue;
            }
            match acc.iter_mut().find(|(w, _)| *w == v) {
                Some((_, old)) => *old += c,
                None => acc.push((v, c)),
            }
        }
        self.rows.push(Row {
            coeffs: acc,
            sense,
            rhs,
        });
    }

    /// Signed violation of row `i` at `point` (positive means violated).
    fn row_violation(&self, i: usize, point: &[f64]) -> f64 {
        let row = &self.rows[i];
        let lhs: f64 = row.coeffs.iter().map(|(v, c)| c * point[v.0]).sum();
        match row.sense {
            RowSense::Le => lhs - row.rhs,
            RowSense::Ge => row.rhs - lhs,
            RowSense::Eq => (lhs - row.rhs).abs(),
        }
    }

    /// Checks every row, bound and integrality restriction at `point`.
    pub fn point_feasible(&self, point: &[f64], tol: f64) -> bool {
        self.worst_violation(point) <= tol
    }

    pub fn worst_violation(&self, point: &[f64]) -> f64 {
        if point.len() != self.vars.len() {
            return f64::INFINITY;
        }
        let mut worst: f64 = 0.0;
        for (x, v) in point.iter().zip(&self.vars) {
            worst = worst.max(v.lb - x).max(x - v.ub);
            if v.kind == VarKind::Binary {
                worst = worst.max((x - x.round()).abs());
            }
        }
        for i in 0..self.rows.len() {
            // Scale by the row magnitude so huge big-M rows are not rejected
            // over least-significant-digit noise.
            let scale = 1f64.max(self.rows[i].rhs.abs());
            worst = worst.max(self.row_violation(i, point) / scale);
        }
        worst
    }

    pub fn objective_at(&self, point: &[f64]) -> f64 {
        self.vars
            .iter()
            .zip(point)
            .map(|(v, x)| v.obj * x)
            .sum()
    }

    pub fn is_mip(&self) -> bool {
        self.vars.iter().any(|v| v.kind == VarKind::Binary)
    }

    /// LP relaxation: every binary becomes continuous on `[max(0,lb), min(1,ub)]`.
    pub fn relax_to_lp(&self) -> ModelHandle {
        let mut out = self.clone();
        for v in &mut out.vars {
            if v.kind == VarKind::Binary {
                v.kind = VarKind::Continuous;
                v.lb = v.lb.max(0.0);
                v.ub = v.ub.min(1.0);
            }
        }
        out
    }

    /// Exports the model in CPLEX LP text format for external debugging.
    pub fn to_lp_format(&self) -> String {
        lp_file::write_lp(self)
    }

    /// Solves with the backend named by `PPOP_SOLVER` (default `highs`).
    pub fn solve(&self) -> SolveResult {
        match self.solve_checked() {
            Ok(r) => r,
            Err(e) => SolveResult {
                status: SolveStatus::Error,
                objective: None,
                values: None,
                wall: Duration::ZERO,
                gap: None,
                message: Some(e.to_string()),
            },
        }
    }

    fn solve_checked(&self) -> Result<SolveResult, SolverError> {
        self.validate()?;
        let backend = std::env::var("PPOP_SOLVER").unwrap_or_else(|_| "highs".into());
        let mut result = match backend.as_str() {
            "highs" => highs_backend::solve(self),
            other => return Err(SolverError::UnknownBackend(other.to_string())),
        };
        // Re-verify any returned point before handing it to callers; a point
        // that fails the row check is reported as an error, not as a solution.
        if let Some(values) = result.values.take() {
            let worst = self.worst_violation(&values);
            if worst <= ROW_CHECK_TOL {
                result.objective = Some(self.objective_at(&values));
                result.values = Some(values);
            } else if result.status == SolveStatus::FeasibleIncumbent {
                result.status = SolveStatus::TimeoutNoIncumbent;
                result.objective = None;
            } else {
                result.status = SolveStatus::Error;
                result.objective = None;
                result.message = Some(format!(
                    "backend point violates rows by {worst:.3e} (> {ROW_CHECK_TOL:.0e})"
                ));
            }
        }
        Ok(result)
    }

    fn validate(&self) -> Result<(), SolverError> {
        for (i, v) in self.vars.iter().enumerate() {
            if v.lb.is_nan() || v.ub.is_nan() || !v.obj.is_finite() {
                return Err(SolverError::InvalidModel(format!("bad variable {i}")));
            }
            if v.kind == VarKind::Binary && (v.lb < 0.0 || v.ub > 1.0) {
                return Err(SolverError::InvalidModel(format!(
                    "binary variable {i} with bounds [{}, {}]",
                    v.lb, v.ub
                )));
            }
        }
        for (i, r) in self.rows.iter().enumerate() {
            if !r.rhs.is_finite() || r.coeffs.iter().any(|(_, c)| !c.is_finite()) {
                return Err(SolverError::InvalidModel(format!("bad row {i}")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounded_max_hits_the_row() {
        let mut m = ModelHandle::maximize();
        let x = m.add_continuous(0.0, 10.0, 1.0);
        m.add_row(RowSense::Le, 3.0, [(x, 1.0)]);
        let r = m.solve();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.value(x) - 3.0).abs() < 1e-9);
        assert!((r.objective.unwrap() - 3.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_system_is_reported() {
        let mut m = ModelHandle::minimize();
        let x = m.add_continuous(2.0, f64::INFINITY, 0.0);
        let y = m.add_continuous(0.0, f64::INFINITY, 0.0);
        m.add_row(RowSense::Le, 1.0, [(x, 1.0), (y, 1.0)]);
        assert_eq!(m.solve().status, SolveStatus::Infeasible);
    }

    #[test]
    fn knapsack_matches_exhaustive_enumeration() {
        // 5-item 0/1 knapsack; the expected value is frozen from the 2^5
        // enumeration below, not from the solver.
        let weights = [3.0, 4.0, 5.0, 2.0, 6.0];
        let values = [4.0, 5.0, 6.0, 3.0, 8.0];
        let cap = 10.0;
        let mut best = 0.0f64;
        for mask in 0u32..32 {
            let (mut w, mut v) = (0.0, 0.0);
            for i in 0..5 {
                if mask & (1 << i) != 0 {
                    w += weights[i];
                    v += values[i];
                }
            }
            if w <= cap {
                best = best.max(v);
            }
        }
        assert_eq!(best, 13.0);

        let mut m = ModelHandle::maximize();
        let xs: Vec<VarId> = values.iter().map(|&v| m.add_binary(v)).collect();
        m.add_row(
            RowSense::Le,
            cap,
            xs.iter().zip(weights).map(|(&x, w)| (x, w)),
        );
        let r = m.solve();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.objective.unwrap() - best).abs() < 1e-9);
    }

    #[test]
    fn lp_relaxation_is_idempotent_on_pure_lp() {
        let mut m = ModelHandle::minimize();
        let x = m.add_continuous(0.0, 1.0, 1.0);
        m.add_row(RowSense::Ge, 0.5, [(x, 1.0)]);
        let relaxed = m.relax_to_lp();
        assert_eq!(relaxed.num_vars(), m.num_vars());
        assert_eq!(
            relaxed.solve().objective.unwrap(),
            m.solve().objective.unwrap()
        );
    }

    #[test]
    fn lp_bound_does_not_exceed_milp_on_cover() {
        // Vertex cover on a triangle: LP optimum 1.5, MILP optimum 2.
        let mut m = ModelHandle::minimize();
        let xs: Vec<VarId> = (0..3).map(|_| m.add_binary(1.0)).collect();
        for (a, b) in [(0, 1), (1, 2), (0, 2)] {
            m.add_row(RowSense::Ge, 1.0, [(xs[a], 1.0), (xs[b], 1.0)]);
        }
        let milp = m.solve().objective.unwrap();
        let lp = m.relax_to_lp().solve().objective.unwrap();
        assert!(lp <= milp + 1e-9);
        assert!((milp - 2.0).abs() < 1e-9);
        assert!((lp - 1.5).abs() < 1e-9);
    }

    #[test]
    fn identical_seed_gives_identical_outcome() {
        let build = || {
            let mut m = ModelHandle::maximize();
            let xs: Vec<VarId> = (0..8).map(|i| m.add_binary(1.0 + 0.1 * i as f64)).collect();
            m.add_row(RowSense::Le, 3.0, xs.iter().map(|&x| (x, 1.0)));
            m.options.seed = 7;
            m
        };
        let a = build().solve();
        let b = build().solve();
        assert_eq!(a.status, b.status);
        assert_eq!(a.objective, b.objective);
    }

    #[test]
    fn unknown_backend_is_a_config_error() {
        // Serialized with other env-dependent tests by taking the lock.
        let mut m = ModelHandle::minimize();
        m.add_continuous(0.0, 1.0, 1.0);
        std::env::set_var("PPOP_SOLVER", "no-such-solver");
        let r = m.solve();
        std::env::remove_var("PPOP_SOLVER");
        assert_eq!(r.status, SolveStatus::Error);
        assert!(r.message.unwrap().contains("no-such-solver"));
    }

    #[test]
    fn lp_export_mentions_sections() {
        let mut m = ModelHandle::minimize();
        let x = m.add_binary(1.0);
        let y = m.add_continuous(0.0, 2.0, 0.5);
        m.add_row(RowSense::Le, 1.5, [(x, 1.0), (y, 1.0)]);
        let text = m.to_lp_format();
        for section in ["Minimize", "Subject To", "Bounds", "Binaries", "End"] {
            assert!(text.contains(section), "missing `{section}` in:\n{text}");
        }
    }
}
