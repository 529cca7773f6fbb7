//! HiGHS adapter: translates a [`ModelHandle`] into a `highs::RowProblem`,
//! runs the solve single-threaded, and maps the status back.

use super::{ModelHandle, ObjSense, RowSense, SolveResult, SolveStatus, VarKind};
use highs::{HighsModelStatus, RowProblem, Sense};
use std::ops::Bound;
use std::time::Instant;

pub(super) fn solve(model: &ModelHandle) -> SolveResult {
    let start = Instant::now();
    let mut pb = RowProblem::new();

    let cols: Vec<highs::Col> = model
        .vars()
        .iter()
        .map(|v| {
            let bounds = (Bound::Included(v.lb), Bound::Included(v.ub));
            match v.kind {
                VarKind::Continuous => pb.add_column(v.obj, bounds),
                VarKind::Binary => pb.add_integer_column(v.obj, bounds),
            }
        })
        .collect();

    for row in model.rows() {
        let factors: Vec<(highs::Col, f64)> =
            row.coeffs.iter().map(|&(v, c)| (cols[v.0], c)).collect();
        let bounds = match row.sense {
            RowSense::Le => (Bound::Unbounded, Bound::Included(row.rhs)),
            RowSense::Ge => (Bound::Included(row.rhs), Bound::Unbounded),
            RowSense::Eq => (Bound::Included(row.rhs), Bound::Included(row.rhs)),
        };
        pb.add_row(bounds, factors);
    }

    let sense = match model.obj_sense.unwrap_or(ObjSense::Minimize) {
        ObjSense::Minimize => Sense::Minimise,
        ObjSense::Maximize => Sense::Maximise,
    };
    let mut m = pb.optimise(sense);
    m.make_quiet();
    m.set_option("threads", model.options.threads as i32);
    m.set_option("random_seed", (model.options.seed % i32::MAX as u64) as i32);
    if model.options.mip_gap > 0.0 {
        m.set_option("mip_rel_gap", model.options.mip_gap);
    }
    if let Some(limit) = model.options.time_limit {
        m.set_option("time_limit", limit.max(0.01));
    }
    if let Some(point) = &model.options.warm_start {
        // Only a verified point is worth handing over.
        if point.len() == model.num_vars() && model.point_feasible(point, super::ROW_CHECK_TOL) {
            m.set_solution(Some(point), None, None, None);
        }
    }

    let is_mip = model.is_mip();
    let solved = m.solve();
    let wall = start.elapsed();
    let status = solved.status();
    let gap = if is_mip {
        let g = solved.mip_gap();
        g.is_finite().then_some(g)
    } else {
        None
    };

    let take_point = |solved: highs::SolvedModel| {
        let values = solved.get_solution().columns().to_vec();
        (values.len() == model.num_vars()).then_some(values)
    };

    let (status, values) = match status {
        HighsModelStatus::Optimal => (SolveStatus::Optimal, take_point(solved)),
        HighsModelStatus::Infeasible => (SolveStatus::Infeasible, None),
        HighsModelStatus::Unbounded => (SolveStatus::Unbounded, None),
        HighsModelStatus::ReachedTimeLimit
        | HighsModelStatus::ReachedIterationLimit
        | HighsModelStatus::ObjectiveBound
        | HighsModelStatus::ObjectiveTarget => {
            // An incumbent may or may not exist; the caller re-verifies the
            // point and downgrades to timeout-no-incumbent if it is not valid.
            match take_point(solved) {
                Some(v) => (SolveStatus::FeasibleIncumbent, Some(v)),
                None => (SolveStatus::TimeoutNoIncumbent, None),
            }
        }
        other => {
            return SolveResult {
                status: SolveStatus::Error,
                objective: None,
                values: None,
                wall,
                gap,
                message: Some(format!("HiGHS terminated with {other:?}")),
            }
        }
    };

    SolveResult {
        status,
        objective: None, // recomputed by the caller from the verified point
        values,
        wall,
        gap,
        message: None,
    }
}
