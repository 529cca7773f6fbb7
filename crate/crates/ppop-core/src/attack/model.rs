//! Construction of the attacker MILP over the decision variables
//! theta2, theta2~, theta3, theta3~, f2, f2~, f3, f_con plus the binary
//! attack/overflow indicators. One builder serves every caller: the full
//! attacker, the fixed-pair probes, and the placement-augmentation problem
//! (where beta itself becomes a decision).

use super::{AttackError, AttackOutcome, AttackParams, PmuPlacement, ScedMode, EPS_STRICT};
use crate::bigm::BigMBundle;
use crate::grid::{GridModel, LineSet};
use crate::solver::{ModelHandle, ObjSense, RowSense, VarId};

pub(crate) enum BetaSpec<'a> {
    Fixed(&'a PmuPlacement),
    /// beta is a decision variable bounded below by a pinned placement.
    Variable { at_least: &'a PmuPlacement },
}

/// Force tripping of one target line; `dir` picks the overload sign
/// (+1: f3 >= (gamma+eps) fmax), `None` allows either via two binaries.
pub(crate) struct Probe {
    pub target: usize,
    pub dir: Option<i8>,
}

pub(crate) enum Objective {
    MaxTrips,
    Feasibility,
    MaxBetaCount,
}

pub(crate) struct BuildOpts<'a> {
    pub beta: BetaSpec<'a>,
    pub fixed_ap: Option<&'a LineSet>,
    pub probe: Option<Probe>,
    pub force_some_trip: bool,
    pub objective: Objective,
}

pub(crate) struct AttackVars {
    pub theta2: Vec<VarId>,
    pub theta2_t: Vec<VarId>,
    pub theta3: Vec<VarId>,
    pub theta3_t: Vec<VarId>,
    pub f2: Vec<VarId>,
    pub f2_t: Vec<VarId>,
    pub f3: Vec<VarId>,
    pub f_con: Vec<VarId>,
    pub ap: Vec<VarId>,
    /// Overflow indicators; empty in directional-probe mode.
    pub pi_p: Vec<VarId>,
    pub pi_n: Vec<VarId>,
    pub beta: Option<Vec<VarId>>,
    pub xn: Option<Vec<VarId>>,
    pub xl: Option<Vec<VarId>>,
    pub p0_var: Option<Vec<VarId>>,
    pub box_sel: Vec<VarId>,
}

pub(crate) struct BuiltModel {
    pub model: ModelHandle,
    pub vars: AttackVars,
}

impl AttackVars {
    pub(crate) fn extract(&self, grid: &GridModel, values: &[f64]) -> AttackOutcome {
        let take = |ids: &[VarId]| -> Vec<f64> { ids.iter().map(|v| values[v.0]).collect() };
        let ap: Vec<usize> = self
            .ap
            .iter()
            .enumerate()
            .filter(|(_, v)| values[v.0] > 0.5)
            .map(|(e, _)| e)
            .collect();
        let f3 = take(&self.f3);
        // Tripped lines from the model's indicators when they exist (full
        // model), else from the predicate (probe mode, where the target row
        // stands in for them).
        let full_pi = self.pi_p.len() == grid.n_lines();
        let mut targets = Vec::new();
        let mut target_dirs = Vec::new();
        for (e, l) in grid.lines().iter().enumerate() {
            if ap.contains(&e) {
                continue;
            }
            let tripped = if full_pi {
                values[self.pi_p[e].0] + values[self.pi_n[e].0] > 0.5
            } else {
                f3[e].abs() >= (l.gamma + EPS_STRICT * 0.5) * l.f_max
            };
            if tripped {
                targets.push(e);
                target_dirs.push((e, if f3[e] > 0.0 { 1i8 } else { -1i8 }));
            }
        }
        let mut outcome = AttackOutcome {
            ap,
            objective: targets.len(),
            targets,
            target_dirs,
            theta2: take(&self.theta2),
            theta2_tilde: take(&self.theta2_t),
            theta3: take(&self.theta3),
            theta3_tilde: take(&self.theta3_t),
            f2: take(&self.f2),
            f2_tilde: take(&self.f2_t),
            f3,
            meters_touched: 0,
            load_profile_used: self.p0_var.as_ref().map(|ids| take(ids)),
        };
        super::count_meters_touched(grid, &mut outcome);
        outcome
    }
}

pub(crate) fn build_attacker_model(
    grid: &GridModel,
    params: &AttackParams,
    bigm: &BigMBundle,
    opts: &BuildOpts,
) -> Result<BuiltModel, AttackError> {
    let n = grid.n_buses();
    let n_lines = grid.n_lines();
    let slack = grid.slack();
    let inf = f64::INFINITY;

    if let Some(ap) = opts.fixed_ap {
        if ap.len() > params.xi_p {
            return Err(AttackError::Precondition("fixed ap exceeds xi_p".into()));
        }
        if !grid.connected_without(ap) {
            return Err(AttackError::Precondition(
                "fixed ap disconnects the grid".into(),
            ));
        }
    }

    let mut m = match opts.objective {
        Objective::Feasibility => ModelHandle::minimize(),
        _ => ModelHandle::new(ObjSense::Maximize),
    };

    // Angle pin at the reference bus is a bound; the other angle domains
    // carry their sound envelopes, which tightens every big-M relaxation.
    let mut angle = |m: &mut ModelHandle, u: usize, envelope: f64| {
        if u == slack {
            m.add_continuous(0.0, 0.0, 0.0)
        } else {
            m.add_continuous(-envelope, envelope, 0.0)
        }
    };
    let theta2: Vec<VarId> = (0..n).map(|u| angle(&mut m, u, bigm.m_theta2[u])).collect();
    let theta2_t: Vec<VarId> = (0..n)
        .map(|u| angle(&mut m, u, bigm.m_theta2_tilde[u]))
        .collect();
    let theta3: Vec<VarId> = (0..n).map(|u| angle(&mut m, u, bigm.m_theta3[u])).collect();
    let theta3_t: Vec<VarId> = (0..n)
        .map(|u| angle(&mut m, u, bigm.m_theta2_tilde[u]))
        .collect();
    let f2: Vec<VarId> = (0..n_lines)
        .map(|e| m.add_continuous(-bigm.m2a[e], bigm.m2a[e], 0.0))
        .collect();
    // |f2~| <= fmax is exactly the falsified-flow validity constraint.
    let f2_t: Vec<VarId> = grid
        .lines()
        .iter()
        .map(|l| m.add_continuous(-l.f_max, l.f_max, 0.0))
        .collect();
    let f3: Vec<VarId> = (0..n_lines)
        .map(|e| m.add_continuous(-bigm.m3a_line[e], bigm.m3a_line[e], 0.0))
        .collect();
    let nf = n as f64;
    let f_con: Vec<VarId> = (0..n_lines).map(|_| m.add_continuous(-nf, nf, 0.0)).collect();

    // Placement coverage, either constant or as variables coupled to beta.
    let (beta, xn_const, xl_const, xn_var, xl_var): (
        Option<Vec<VarId>>,
        Option<Vec<bool>>,
        Option<Vec<bool>>,
        Option<Vec<VarId>>,
        Option<Vec<VarId>>,
    ) = match &opts.beta {
        BetaSpec::Fixed(p) => (None, Some(p.x_n(grid)), Some(p.x_l(grid)), None, None),
        BetaSpec::Variable { at_least } => {
            let beta: Vec<VarId> = (0..n)
                .map(|u| {
                    let v = m.add_binary(0.0);
                    if at_least.get(u) {
                        m.set_bounds(v, 1.0, 1.0);
                    }
                    v
                })
                .collect();
            let xn: Vec<VarId> = (0..n).map(|_| m.add_binary(0.0)).collect();
            let xl: Vec<VarId> = (0..n_lines).map(|_| m.add_binary(0.0)).collect();
            let delta_max = (0..n).map(|u| grid.degree(u) + 1).max().unwrap() as f64;
            for u in 0..n {
                let card = (grid.degree(u) + 1) as f64;
                let mut hood = vec![(beta[u], 1.0 / card)];
                hood.extend(grid.neighbors(u).iter().map(|&(v, _)| (beta[v], 1.0 / card)));
                let mut lower = hood.clone();
                lower.push((xn[u], -1.0));
                m.add_row(RowSense::Le, 0.0, lower);
                let mut upper: Vec<(VarId, f64)> =
                    hood.into_iter().map(|(v, c)| (v, -c)).collect();
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
            (Some(beta), None, None, Some(xn), Some(xl))
        }
    };

    // Physical attack: binaries, fixed where dictated by the options or by
    // constant line coverage.
    let ap: Vec<VarId> = (0..n_lines)
        .map(|e| {
            if let Some(fixed) = opts.fixed_ap {
                m.add_binary_fixed(fixed.contains(&e))
            } else if xl_const.as_ref().is_some_and(|xl| xl[e]) {
                m.add_binary_fixed(false)
            } else {
                m.add_binary(0.0)
            }
        })
        .collect();
    if let Some(xl) = &xl_var {
        for e in 0..n_lines {
            m.add_row(RowSense::Le, 1.0, [(ap[e], 1.0), (xl[e], 1.0)]);
        }
    }
    m.add_row(
        RowSense::Le,
        params.xi_p as f64,
        ap.iter().map(|&v| (v, 1.0)),
    );

    // Optional fluctuating load profile: one selector binary per box.
    let mut box_sel: Vec<VarId> = Vec::new();
    let p0_var: Option<Vec<VarId>> = params.load_range.as_ref().map(|boxes| {
        let span = params.p0_inf_norm(grid);
        let p0v: Vec<VarId> = (0..n)
            .map(|u| {
                let lo = boxes.iter().map(|b| b.lo[u]).fold(inf, f64::min);
                let hi = boxes.iter().map(|b| b.hi[u]).fold(-inf, f64::max);
                m.add_continuous(lo, hi, 0.0)
            })
            .collect();
        box_sel = boxes.iter().map(|_| m.add_binary(0.0)).collect();
        m.add_row(RowSense::Eq, 1.0, box_sel.iter().map(|&s| (s, 1.0)));
        let big = 2.0 * span + 1.0;
        for (i, b) in boxes.iter().enumerate() {
            for u in 0..n {
                m.add_row(
                    RowSense::Ge,
                    b.lo[u] - big,
                    [(p0v[u], 1.0), (box_sel[i], -big)],
                );
                m.add_row(
                    RowSense::Le,
                    b.hi[u] + big,
                    [(p0v[u], 1.0), (box_sel[i], big)],
                );
            }
        }
        p0v
    });
    let p0_const = grid.p0();
    // Appends the +/- p0 term of a row: variable when the profile floats.
    let p0_term = |coeffs: &mut Vec<(VarId, f64)>, rhs: &mut f64, u: usize, sign: f64| {
        match &p0_var {
            Some(p0v) => coeffs.push((p0v[u], sign)),
            None => *rhs -= sign * p0_const[u],
        }
    };

    let b_row = |theta: &[VarId], u: usize| -> Vec<(VarId, f64)> {
        let mut c = Vec::with_capacity(grid.degree(u) + 1);
        for &(v, e) in grid.neighbors(u) {
            let y = grid.line(e).susceptance();
            c.push((theta[u], y));
            c.push((theta[v], -y));
        }
        c
    };
    let d_row = |f: &[VarId], u: usize| -> Vec<(VarId, f64)> {
        grid.neighbors(u)
            .iter()
            .map(|&(_, e)| {
                let sign = if grid.line(e).from == u { 1.0 } else { -1.0 };
                (f[e], sign)
            })
            .collect()
    };

    // True post-attack state at t2: zero flow on attacked lines, flow
    // conservation at the base profile, angle consistency in service.
    for e in 0..n_lines {
        m.add_row(
            RowSense::Le,
            bigm.m2a[e],
            [(f2[e], 1.0), (ap[e], bigm.m2a[e])],
        );
        m.add_row(
            RowSense::Le,
            bigm.m2a[e],
            [(f2[e], -1.0), (ap[e], bigm.m2a[e])],
        );
    }
    for u in 0..n {
        let mut coeffs = d_row(&f2, u);
        let mut rhs = 0.0;
        p0_term(&mut coeffs, &mut rhs, u, -1.0);
        m.add_row(RowSense::Eq, rhs, coeffs);
    }
    for (e, l) in grid.lines().iter().enumerate() {
        let y = l.susceptance();
        for sign in [1.0, -1.0] {
            m.add_row(
                RowSense::Le,
                0.0,
                [
                    (theta2[l.from], sign * y),
                    (theta2[l.to], -sign * y),
                    (f2[e], -sign),
                    (ap[e], -bigm.m2f_line[e]),
                ],
            );
        }
    }

    // Falsified state at t2: consistent with the intact topology, load
    // deviations bounded, generator injections untouched.
    for (e, l) in grid.lines().iter().enumerate() {
        let y = l.susceptance();
        m.add_row(
            RowSense::Eq,
            0.0,
            [
                (theta2_t[l.from], y),
                (theta2_t[l.to], -y),
                (f2_t[e], -1.0),
            ],
        );
    }
    match (&p0_var, &params.load_range) {
        (None, _) => {
            for u in 0..n {
                let bound = params.alpha * p0_const[u].abs();
                let coeffs = d_row(&f2_t, u);
                m.add_row(RowSense::Le, p0_const[u] + bound, coeffs.clone());
                m.add_row(RowSense::Ge, p0_const[u] - bound, coeffs);
            }
        }
        (Some(p0v), Some(boxes)) => {
            // Per active box: |D f2~ - p0| <= alpha * sign(box) * p0.
            let big = (1.0 + params.alpha) * 2.0 * params.p0_inf_norm(grid) + 1.0;
            for (i, b) in boxes.iter().enumerate() {
                let sel = box_sel[i];
                for u in 0..n {
                    let s = if b.hi[u] + b.lo[u] >= 0.0 { 1.0 } else { -1.0 };
                    let mut up = d_row(&f2_t, u);
                    up.push((p0v[u], -1.0 - params.alpha * s));
                    up.push((sel, big));
                    m.add_row(RowSense::Le, big, up);
                    let mut lo = d_row(&f2_t, u);
                    lo.push((p0v[u], -1.0 + params.alpha * s));
                    lo.push((sel, -big));
                    m.add_row(RowSense::Ge, -big, lo);
                }
            }
        }
        (Some(_), None) => unreachable!(),
    }
    for &g in grid.gen_buses() {
        let mut coeffs = d_row(&f2_t, g);
        let mut rhs = 0.0;
        p0_term(&mut coeffs, &mut rhs, g, -1.0);
        m.add_row(RowSense::Eq, rhs, coeffs);
    }

    // Meter budget: count manipulated flow and injection readings.
    if let Some(xi_c) = params.xi_c {
        let w_f: Vec<VarId> = (0..n_lines).map(|_| m.add_binary(0.0)).collect();
        let w_p: Vec<VarId> = (0..n).map(|_| m.add_binary(0.0)).collect();
        for e in 0..n_lines {
            for sign in [1.0, -1.0] {
                m.add_row(
                    RowSense::Le,
                    0.0,
                    [
                        (f2_t[e], sign),
                        (f2[e], -sign),
                        (w_f[e], -bigm.m_cf),
                    ],
                );
            }
        }
        for u in 0..n {
            for sign in [1.0, -1.0] {
                let mut coeffs: Vec<(VarId, f64)> = d_row(&f2_t, u)
                    .into_iter()
                    .map(|(v, c)| (v, sign * c))
                    .collect();
                let mut rhs = 0.0;
                p0_term(&mut coeffs, &mut rhs, u, -sign);
                coeffs.push((w_p[u], -bigm.m_cp));
                m.add_row(RowSense::Le, rhs, coeffs);
            }
        }
        let all = w_f.iter().chain(&w_p).map(|&v| (v, 1.0));
        m.add_row(RowSense::Le, xi_c as f64, all);
    }

    // PMU pinning of estimated angles.
    for u in 0..n {
        match (&xn_const, &xn_var) {
            (Some(xn), _) => {
                let slackness = if xn[u] { 0.0 } else { bigm.m2theta };
                m.add_row(
                    RowSense::Le,
                    slackness,
                    [(theta2_t[u], 1.0), (theta2[u], -1.0)],
                );
                m.add_row(
                    RowSense::Ge,
                    -slackness,
                    [(theta2_t[u], 1.0), (theta2[u], -1.0)],
                );
            }
            (None, Some(xn)) => {
                m.add_row(
                    RowSense::Le,
                    bigm.m2theta,
                    [
                        (theta2_t[u], 1.0),
                        (theta2[u], -1.0),
                        (xn[u], bigm.m2theta),
                    ],
                );
                m.add_row(
                    RowSense::Ge,
                    -bigm.m2theta,
                    [
                        (theta2_t[u], 1.0),
                        (theta2[u], -1.0),
                        (xn[u], -bigm.m2theta),
                    ],
                );
            }
            _ => unreachable!(),
        }
    }

    // Dispatch the misled control center believes in: within generation and
    // flow limits on the intact topology, meeting the falsified loads.
    let (pg_min, pg_max) = grid.pg_bounds();
    for (gi, &g) in grid.gen_buses().iter().enumerate() {
        let coeffs = b_row(&theta3_t, g);
        m.add_row(RowSense::Le, pg_max[gi], coeffs.clone());
        m.add_row(RowSense::Ge, pg_min[gi], coeffs);
    }
    for l in grid.lines() {
        let y = l.susceptance();
        let coeffs = [(theta3_t[l.from], y), (theta3_t[l.to], -y)];
        m.add_row(RowSense::Le, l.f_max, coeffs);
        m.add_row(RowSense::Ge, -l.f_max, coeffs);
    }
    for &d in grid.load_buses() {
        let mut coeffs = b_row(&theta3_t, d);
        coeffs.extend(d_row(&f2_t, d).into_iter().map(|(v, c)| (v, -c)));
        m.add_row(RowSense::Eq, 0.0, coeffs);
    }

    // True state at t3 under the ordered dispatch.
    for e in 0..n_lines {
        m.add_row(
            RowSense::Le,
            bigm.m3a_line[e],
            [(f3[e], 1.0), (ap[e], bigm.m3a_line[e])],
        );
        m.add_row(
            RowSense::Le,
            bigm.m3a_line[e],
            [(f3[e], -1.0), (ap[e], bigm.m3a_line[e])],
        );
    }
    for &d in grid.load_buses() {
        let mut coeffs = d_row(&f3, d);
        let mut rhs = 0.0;
        p0_term(&mut coeffs, &mut rhs, d, -1.0);
        m.add_row(RowSense::Eq, rhs, coeffs);
    }
    for &g in grid.gen_buses() {
        let mut coeffs = d_row(&f3, g);
        coeffs.extend(b_row(&theta3_t, g).into_iter().map(|(v, c)| (v, -c)));
        m.add_row(RowSense::Eq, 0.0, coeffs);
    }
    for (e, l) in grid.lines().iter().enumerate() {
        let y = l.susceptance();
        for sign in [1.0, -1.0] {
            m.add_row(
                RowSense::Le,
                0.0,
                [
                    (theta3[l.from], sign * y),
                    (theta3[l.to], -sign * y),
                    (f3[e], -sign),
                    (ap[e], -bigm.m3f_line[e]),
                ],
            );
        }
    }

    // Connectivity of the post-attack grid via a unit pseudo flow from the
    // reference to every bus.
    for u in 0..n {
        let coeffs = d_row(&f_con, u);
        let rhs = if u == slack { nf - 1.0 } else { -1.0 };
        m.add_row(RowSense::Eq, rhs, coeffs);
    }
    for e in 0..n_lines {
        m.add_row(RowSense::Le, nf, [(f_con[e], 1.0), (ap[e], nf)]);
        m.add_row(RowSense::Le, nf, [(f_con[e], -1.0), (ap[e], nf)]);
    }

    // Overflow indicators. In directional-probe mode the single target row
    // replaces them entirely, keeping the probe a pure LP.
    let mut pi_p = Vec::new();
    let mut pi_n = Vec::new();
    match &opts.probe {
        Some(Probe {
            target,
            dir: Some(dir),
        }) => {
            let l = grid.line(*target);
            let thresh = (l.gamma + EPS_STRICT) * l.f_max;
            let sign = f64::from(*dir);
            m.add_row(RowSense::Ge, thresh, [(f3[*target], sign)]);
        }
        Some(Probe { target, dir: None }) => {
            let (pp, pn) = overflow_pair(&mut m, grid, bigm, &f3, *target, 0.0);
            m.add_row(RowSense::Ge, 1.0, [(pp, 1.0), (pn, 1.0)]);
            pi_p.push(pp);
            pi_n.push(pn);
        }
        None => {
            let obj = matches!(opts.objective, Objective::MaxTrips);
            for e in 0..n_lines {
                let w = if obj { 1.0 } else { 0.0 };
                let (pp, pn) = overflow_pair(&mut m, grid, bigm, &f3, e, w);
                pi_p.push(pp);
                pi_n.push(pn);
            }
            if opts.force_some_trip {
                let all = pi_p.iter().chain(&pi_n).map(|&v| (v, 1.0));
                m.add_row(RowSense::Ge, 1.0, all);
            }
        }
    }

    if matches!(opts.objective, Objective::MaxBetaCount) {
        let beta = beta.as_ref().expect("beta objective needs variable beta");
        for &b in beta {
            m.set_obj(b, 1.0);
        }
    }

    if params.sced_mode == ScedMode::Kkt {
        add_kkt_block(&mut m, grid, bigm, &theta3_t);
    }

    Ok(BuiltModel {
        model: m,
        vars: AttackVars {
            theta2,
            theta2_t,
            theta3,
            theta3_t,
            f2,
            f2_t,
            f3,
            f_con,
            ap,
            pi_p,
            pi_n,
            beta,
            xn: xn_var,
            xl: xl_var,
            p0_var,
            box_sel,
        },
    })
}

impl AttackVars {
    /// Assembles a feasible MIP start for the augmentation problem from a
    /// verified witness: the same attack under beta' = beta_hat. Only the
    /// plain evaluation regime is supported (relaxed dispatch, unlimited
    /// meters, fixed profile); anything else returns None and the solve
    /// starts cold.
    pub(crate) fn warm_start(
        &self,
        grid: &GridModel,
        n_vars: usize,
        outcome: &super::AttackOutcome,
        beta_hat: &PmuPlacement,
    ) -> Option<Vec<f64>> {
        if self.p0_var.is_some() || outcome.load_profile_used.is_some() {
            return None;
        }
        let mut v = vec![0.0; n_vars];
        let fill = |v: &mut Vec<f64>, ids: &[VarId], vals: &[f64]| {
            for (id, &x) in ids.iter().zip(vals) {
                v[id.0] = x;
            }
        };
        fill(&mut v, &self.theta2, &outcome.theta2);
        fill(&mut v, &self.theta2_t, &outcome.theta2_tilde);
        fill(&mut v, &self.theta3, &outcome.theta3);
        fill(&mut v, &self.theta3_t, &outcome.theta3_tilde);
        fill(&mut v, &self.f2, &outcome.f2);
        fill(&mut v, &self.f2_t, &outcome.f2_tilde);
        fill(&mut v, &self.f3, &outcome.f3);
        let ap = outcome.ap_set();
        for (e, id) in self.ap.iter().enumerate() {
            v[id.0] = if ap.contains(&e) { 1.0 } else { 0.0 };
        }
        if self.pi_p.len() == grid.n_lines() {
            for &(e, dir) in &outcome.target_dirs {
                let id = if dir > 0 { self.pi_p[e] } else { self.pi_n[e] };
                v[id.0] = 1.0;
            }
        }
        fill(&mut v, &self.f_con, &pseudo_flow(grid, &ap)?);
        if let Some(beta) = &self.beta {
            for (u, id) in beta.iter().enumerate() {
                v[id.0] = if beta_hat.get(u) { 1.0 } else { 0.0 };
            }
            let xn = beta_hat.x_n(grid);
            let xl = beta_hat.x_l(grid);
            for (u, id) in self.xn.as_ref()?.iter().enumerate() {
                v[id.0] = if xn[u] { 1.0 } else { 0.0 };
            }
            for (e, id) in self.xl.as_ref()?.iter().enumerate() {
                v[id.0] = if xl[e] { 1.0 } else { 0.0 };
            }
        }
        Some(v)
    }
}

/// A unit pseudo flow from the slack to every bus over the in-service
/// lines, routed along a BFS tree; None when the grid is split.
fn pseudo_flow(grid: &GridModel, ap: &LineSet) -> Option<Vec<f64>> {
    let n = grid.n_buses();
    let mut parent_line = vec![usize::MAX; n];
    let mut order = vec![grid.slack()];
    let mut seen = vec![false; n];
    seen[grid.slack()] = true;
    let mut head = 0;
    while head < order.len() {
        let u = order[head];
        head += 1;
        for &(w, e) in grid.neighbors(u) {
            if !ap.contains(&e) && !seen[w] {
                seen[w] = true;
                parent_line[w] = e;
                order.push(w);
            }
        }
    }
    if order.len() != n {
        return None;
    }
    // One unit terminates at every non-slack bus; accumulate leaf-to-root.
    let mut demand = vec![1.0; n];
    demand[grid.slack()] = 0.0;
    let mut flows = vec![0.0; grid.n_lines()];
    for &u in order.iter().rev() {
        let e = parent_line[u];
        if e == usize::MAX {
            continue;
        }
        let l = grid.line(e);
        let (toward_parent, parent) = if l.from == u { (1.0, l.to) } else { (-1.0, l.from) };
        // Flow is oriented from parent to child: negative of toward_parent.
        flows[e] = -toward_parent * demand[u] * 1.0;
        demand[parent] += demand[u];
    }
    Some(flows)
}

/// Indicator pair for |f3_e| exceeding gamma_e * fmax_e, with the strict
/// inequality realized as a margin of EPS_STRICT.
fn overflow_pair(
    m: &mut ModelHandle,
    grid: &GridModel,
    bigm: &BigMBundle,
    f3: &[VarId],
    e: usize,
    obj: f64,
) -> (VarId, VarId) {
    let l = grid.line(e);
    let pp = m.add_binary(obj);
    let pn = m.add_binary(obj);
    let inv = 1.0 / l.f_max;
    let mpi = bigm.m_pi[e];
    // pi = 1 -> overload by at least the margin; pi = 0 -> no overload.
    m.add_row(RowSense::Le, l.gamma, [(f3[e], inv), (pp, -mpi)]);
    m.add_row(
        RowSense::Ge,
        l.gamma - mpi,
        [(f3[e], inv), (pp, -(mpi + EPS_STRICT))],
    );
    m.add_row(RowSense::Le, l.gamma, [(f3[e], -inv), (pn, -mpi)]);
    m.add_row(
        RowSense::Ge,
        l.gamma - mpi,
        [(f3[e], -inv), (pn, -(mpi + EPS_STRICT))],
    );
    (pp, pn)
}

/// Optimality of the believed dispatch as a KKT system with big-M
/// complementarity; only meaningful when a cost vector exists.
fn add_kkt_block(m: &mut ModelHandle, grid: &GridModel, bigm: &BigMBundle, theta3_t: &[VarId]) {
    let phi = grid.cost().expect("kkt needs costs");
    let (pg_min, pg_max) = grid.pg_bounds();
    let mk = bigm.m_kkt;
    let inf = f64::INFINITY;
    let n = grid.n_buses();

    let mu_b: Vec<VarId> = grid.load_buses().iter().map(|_| m.add_continuous(-inf, inf, 0.0)).collect();
    let mu_c: Vec<VarId> = (0..grid.n_lines()).map(|_| m.add_continuous(0.0, mk, 0.0)).collect();
    let mu_d: Vec<VarId> = (0..grid.n_lines()).map(|_| m.add_continuous(0.0, mk, 0.0)).collect();
    let mu_e: Vec<VarId> = grid.gen_buses().iter().map(|_| m.add_continuous(0.0, mk, 0.0)).collect();
    let mu_g: Vec<VarId> = grid.gen_buses().iter().map(|_| m.add_continuous(0.0, mk, 0.0)).collect();
    let r_fl: Vec<VarId> = (0..grid.n_lines()).map(|_| m.add_binary(0.0)).collect();
    let r_fu: Vec<VarId> = (0..grid.n_lines()).map(|_| m.add_binary(0.0)).collect();
    let r_gl: Vec<VarId> = grid.gen_buses().iter().map(|_| m.add_binary(0.0)).collect();
    let r_gu: Vec<VarId> = grid.gen_buses().iter().map(|_| m.add_binary(0.0)).collect();

    // Stationarity: B Lambda_d^T mu_b + D Gamma (mu_d - mu_c)
    //             + B Lambda_g^T (mu_g - mu_e) = -B Lambda_g^T phi.
    let b = grid.admittance(&LineSet::new());
    for v in 0..n {
        let mut coeffs: Vec<(VarId, f64)> = Vec::new();
        for (di, &d) in grid.load_buses().iter().enumerate() {
            let c = b[(v, d)];
            if c != 0.0 {
                coeffs.push((mu_b[di], c));
            }
        }
        for &(_, e) in grid.neighbors(v) {
            let l = grid.line(e);
            let sign = if l.from == v { 1.0 } else { -1.0 };
            let y = l.susceptance();
            coeffs.push((mu_d[e], sign * y));
            coeffs.push((mu_c[e], -sign * y));
        }
        let mut rhs = 0.0;
        for (gi, &g) in grid.gen_buses().iter().enumerate() {
            let c = b[(v, g)];
            if c != 0.0 {
                coeffs.push((mu_g[gi], c));
                coeffs.push((mu_e[gi], -c));
                rhs -= c * phi[gi];
            }
        }
        m.add_row(RowSense::Eq, rhs, coeffs);
    }

    // Complementarity of the line-limit and generation-bound multipliers.
    for (e, l) in grid.lines().iter().enumerate() {
        let y = l.susceptance();
        let flow = [(theta3_t[l.from], y), (theta3_t[l.to], -y)];
        m.add_row(RowSense::Le, 0.0, [(mu_d[e], 1.0), (r_fu[e], -mk)]);
        let mut up = flow.to_vec();
        up.push((r_fu[e], -mk));
        m.add_row(RowSense::Ge, l.f_max - mk, up);
        m.add_row(RowSense::Le, 0.0, [(mu_c[e], 1.0), (r_fl[e], -mk)]);
        let mut lo = flow.to_vec();
        lo.push((r_fl[e], mk));
        m.add_row(RowSense::Le, -l.f_max + mk, lo);
        m.add_row(RowSense::Le, 1.0, [(r_fl[e], 1.0), (r_fu[e], 1.0)]);
    }
    for (gi, &g) in grid.gen_buses().iter().enumerate() {
        let mut coeffs: Vec<(VarId, f64)> = Vec::new();
        for v in 0..n {
            let c = b[(g, v)];
            if c != 0.0 {
                coeffs.push((theta3_t[v], c));
            }
        }
        m.add_row(RowSense::Le, 0.0, [(mu_g[gi], 1.0), (r_gu[gi], -mk)]);
        let mut up = coeffs.clone();
        up.push((r_gu[gi], -mk));
        m.add_row(RowSense::Ge, pg_max[gi] - mk, up);
        m.add_row(RowSense::Le, 0.0, [(mu_e[gi], 1.0), (r_gl[gi], -mk)]);
        let mut lo = coeffs;
        lo.push((r_gl[gi], mk));
        m.add_row(RowSense::Le, pg_min[gi] + mk, lo);
        m.add_row(RowSense::Le, 1.0, [(r_gl[gi], 1.0), (r_gu[gi], 1.0)]);
    }
}
