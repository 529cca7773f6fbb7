//! Grid data model, MATPOWER ingestion, DC power-flow algebra, connectivity
//! checks and cascade simulation.
//!
//! All quantities are per-unit. Line orientation is from-bus to to-bus as
//! listed in the case file; buses are referred to internally by dense indices
//! `0..n` while the original case ids are kept for I/O.

mod cascade;
mod dcflow;
mod matpower;
pub mod paths;

pub use cascade::CascadeReport;
pub use matpower::{load_matpower, parse_matpower};

use nalgebra::DMatrix;
use std::collections::{BTreeMap, BTreeSet};

/// Set of line indices (outages, physical attacks).
pub type LineSet = BTreeSet<usize>;

pub const BALANCE_TOL: f64 = 1e-6;

#[derive(Debug, thiserror::Error)]
pub enum GridError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("grid data invalid: {0}")]
    BadData(String),
    #[error("graph is not connected")]
    Disconnected,
    #[error("no slack bus (bus type 3) in case data")]
    MissingSlack,
    #[error("injections do not balance: sum = {0:.3e} p.u.")]
    UnbalancedInjection(f64),
    #[error("outages split the grid into islands")]
    IslandedGrid,
}

#[derive(Debug, Clone)]
pub struct Line {
    /// Internal index of the from-bus.
    pub from: usize,
    /// Internal index of the to-bus.
    pub to: usize,
    /// Series reactance r_e > 0 [p.u.] (parallel branches already merged).
    pub reactance: f64,
    /// Normal flow limit f_max > 0 [p.u.].
    pub f_max: f64,
    /// Overload-tripping factor gamma >= 1: the line trips when
    /// |f| > gamma * f_max.
    pub gamma: f64,
    /// 1-based rows of the case file's branch table folded into this line.
    pub source_rows: Vec<usize>,
}

impl Line {
    pub fn susceptance(&self) -> f64 {
        1.0 / self.reactance
    }

    pub fn other_end(&self, bus: usize) -> Option<usize> {
        if self.from == bus {
            Some(self.to)
        } else if self.to == bus {
            Some(self.from)
        } else {
            None
        }
    }
}

/// Immutable network model. Buses partition into generator buses (dispatch
/// adjustable within bounds) and load buses (fixed injection, possibly zero).
#[derive(Debug, Clone)]
pub struct GridModel {
    bus_ids: Vec<u32>,
    id_to_idx: BTreeMap<u32, usize>,
    lines: Vec<Line>,
    gen_buses: Vec<usize>,
    load_buses: Vec<usize>,
    is_gen: Vec<bool>,
    /// Injection bounds per generator bus (aligned with `gen_buses`), with any
    /// co-located load already folded in.
    pg_min: Vec<f64>,
    pg_max: Vec<f64>,
    /// Base injection per bus, generation positive. Sums to zero.
    p0: Vec<f64>,
    slack: usize,
    /// Optional SCED cost per generator bus (aligned with `gen_buses`).
    cost: Option<Vec<f64>>,
    /// adjacency: per bus, (neighbor, line index).
    adj: Vec<Vec<(usize, usize)>>,
}

impl GridModel {
    /// Builds and validates a model from per-bus data keyed by external ids.
    ///
    /// `lines`: (from id, to id, reactance, f_max, gamma);
    /// `gens`: (bus id, pg_min, pg_max, optional cost). Parallel (from, to)
    /// entries are merged into one equivalent line.
    pub fn new(
        bus_ids: Vec<u32>,
        lines: Vec<(u32, u32, f64, f64, f64)>,
        gens: Vec<(u32, f64, f64, Option<f64>)>,
        p0: Vec<f64>,
        slack_id: u32,
    ) -> Result<GridModel, GridError> {
        let n = bus_ids.len();
        let mut id_to_idx = BTreeMap::new();
        for (i, &id) in bus_ids.iter().enumerate() {
            if id_to_idx.insert(id, i).is_some() {
                return Err(GridError::BadData(format!("duplicate bus id {id}")));
            }
        }
        if p0.len() != n {
            return Err(GridError::BadData("p0 length mismatch".into()));
        }
        let lookup = |id: u32| -> Result<usize, GridError> {
            id_to_idx
                .get(&id)
                .copied()
                .ok_or_else(|| GridError::BadData(format!("unknown bus id {id}")))
        };

        // Merge parallel branches: 1/r = sum 1/r_i; the combined limit is the
        // total flow at which the first constituent hits its own limit under
        // the admittance-proportional split; gamma conservatively the min.
        let mut by_pair: BTreeMap<(usize, usize), Vec<(f64, f64, f64, usize)>> = BTreeMap::new();
        for (row, &(f, t, r, fmax, gamma)) in lines.iter().enumerate() {
            let (fi, ti) = (lookup(f)?, lookup(t)?);
            if fi == ti {
                return Err(GridError::BadData(format!("self-loop at bus {f}")));
            }
            if r <= 0.0 {
                return Err(GridError::BadData(format!(
                    "non-positive reactance on line {f}-{t}"
                )));
            }
            if fmax <= 0.0 {
                return Err(GridError::BadData(format!(
                    "non-positive flow limit on line {f}-{t}"
                )));
            }
            if gamma < 1.0 {
                return Err(GridError::BadData(format!(
                    "trip factor below 1 on line {f}-{t}"
                )));
            }
            let key = (fi.min(ti), fi.max(ti));
            by_pair.entry(key).or_default().push((r, fmax, gamma, row + 1));
        }
        let mut merged: Vec<Line> = Vec::with_capacity(by_pair.len());
        for ((a, b), group) in by_pair {
            let y_total: f64 = group.iter().map(|g| 1.0 / g.0).sum();
            let f_max = group
                .iter()
                .map(|g| g.1 * y_total * g.0)
                .fold(f64::INFINITY, f64::min);
            let gamma = group.iter().map(|g| g.2).fold(f64::INFINITY, f64::min);
            merged.push(Line {
                from: a,
                to: b,
                reactance: 1.0 / y_total,
                f_max,
                gamma,
                source_rows: group.iter().map(|g| g.3).collect(),
            });
        }

        let mut is_gen = vec![false; n];
        let mut gen_map: BTreeMap<usize, (f64, f64, Option<f64>)> = BTreeMap::new();
        for (id, lo, hi, c) in gens {
            let u = lookup(id)?;
            if lo > hi {
                return Err(GridError::BadData(format!("pg_min > pg_max at bus {id}")));
            }
            is_gen[u] = true;
            gen_map.insert(u, (lo, hi, c));
        }
        let gen_buses: Vec<usize> = gen_map.keys().copied().collect();
        let load_buses: Vec<usize> = (0..n).filter(|u| !is_gen[*u]).collect();
        let pg_min: Vec<f64> = gen_buses.iter().map(|u| gen_map[u].0).collect();
        let pg_max: Vec<f64> = gen_buses.iter().map(|u| gen_map[u].1).collect();
        let cost: Option<Vec<f64>> = if gen_buses.iter().all(|u| gen_map[u].2.is_some()) {
            Some(gen_buses.iter().map(|u| gen_map[u].2.unwrap()).collect())
        } else {
            None
        };

        let mut adj = vec![Vec::new(); n];
        for (e, line) in merged.iter().enumerate() {
            adj[line.from].push((line.to, e));
            adj[line.to].push((line.from, e));
        }

        let slack = lookup(slack_id)?;
        let grid = GridModel {
            bus_ids,
            id_to_idx,
            lines: merged,
            gen_buses,
            load_buses,
            is_gen,
            pg_min,
            pg_max,
            p0,
            slack,
            cost,
            adj,
        };

        if !grid.connected_without(&LineSet::new()) {
            return Err(GridError::Disconnected);
        }
        let imbalance: f64 = grid.p0.iter().sum();
        let scale = grid.p0.iter().fold(1.0f64, |m, p| m.max(p.abs()));
        if imbalance.abs() > BALANCE_TOL * scale {
            return Err(GridError::UnbalancedInjection(imbalance));
        }
        Ok(grid)
    }

    pub fn n_buses(&self) -> usize {
        self.bus_ids.len()
    }

    pub fn n_lines(&self) -> usize {
        self.lines.len()
    }

    pub fn lines(&self) -> &[Line] {
        &self.lines
    }

    pub fn line(&self, e: usize) -> &Line {
        &self.lines[e]
    }

    pub fn bus_ids(&self) -> &[u32] {
        &self.bus_ids
    }

    pub fn bus_id(&self, u: usize) -> u32 {
        self.bus_ids[u]
    }

    pub fn bus_index(&self, id: u32) -> Option<usize> {
        self.id_to_idx.get(&id).copied()
    }

    /// Line index whose merged source rows contain the given 1-based branch
    /// row of the original case file.
    pub fn line_by_source_row(&self, row: usize) -> Option<usize> {
        self.lines.iter().position(|l| l.source_rows.contains(&row))
    }

    pub fn slack(&self) -> usize {
        self.slack
    }

    pub fn gen_buses(&self) -> &[usize] {
        &self.gen_buses
    }

    pub fn load_buses(&self) -> &[usize] {
        &self.load_buses
    }

    pub fn is_gen(&self, u: usize) -> bool {
        self.is_gen[u]
    }

    pub fn pg_bounds(&self) -> (&[f64], &[f64]) {
        (&self.pg_min, &self.pg_max)
    }

    pub fn p0(&self) -> &[f64] {
        &self.p0
    }

    pub fn cost(&self) -> Option<&[f64]> {
        self.cost.as_deref()
    }

    pub fn neighbors(&self, u: usize) -> &[(usize, usize)] {
        &self.adj[u]
    }

    /// Degree of a bus (parallel branches already merged).
    pub fn degree(&self, u: usize) -> usize {
        self.adj[u].len()
    }

    pub fn set_uniform_gamma(&mut self, gamma: f64) {
        assert!(gamma >= 1.0);
        for l in &mut self.lines {
            l.gamma = gamma;
        }
    }

    pub fn set_line_gamma(&mut self, e: usize, gamma: f64) {
        assert!(gamma >= 1.0);
        self.lines[e].gamma = gamma;
    }

    /// Bus-by-bus admittance matrix B with the given lines outaged:
    /// symmetric, zero row sums, off-diagonal (u,v) = -1/r_uv.
    pub fn admittance(&self, outages: &LineSet) -> DMatrix<f64> {
        let n = self.n_buses();
        let mut b = DMatrix::zeros(n, n);
        for (e, line) in self.lines.iter().enumerate() {
            if outages.contains(&e) {
                continue;
            }
            let y = line.susceptance();
            b[(line.from, line.to)] -= y;
            b[(line.to, line.from)] -= y;
            b[(line.from, line.from)] += y;
            b[(line.to, line.to)] += y;
        }
        b
    }

    /// Bus-by-line incidence matrix D; outaged columns are all-zero, and
    /// D * Gamma * D^T equals the admittance matrix for the same outage set.
    pub fn incidence(&self, outages: &LineSet) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.n_buses(), self.n_lines());
        for (e, line) in self.lines.iter().enumerate() {
            if outages.contains(&e) {
                continue;
            }
            d[(line.from, e)] = 1.0;
            d[(line.to, e)] = -1.0;
        }
        d
    }

    /// True iff the graph minus `ap` is connected (over all buses).
    pub fn connected_without(&self, ap: &LineSet) -> bool {
        let comp = paths::components(self, ap);
        comp.iter().all(|&c| c == 0)
    }

    /// DC power flow under `outages` for the given balanced injections.
    pub fn dc_flow(&self, injections: &[f64], outages: &LineSet) -> Result<DcState, GridError> {
        dcflow::solve(self, injections, outages)
    }

    /// Rounds of overload-induced tripping starting from physical outages
    /// `ap` under a fixed dispatch; islands are rebalanced proportionally.
    pub fn cascade_simulate(&self, dispatch: &[f64], ap: &LineSet) -> CascadeReport {
        cascade::simulate(self, dispatch, ap)
    }
}

/// Per-bus phase angles and per-line flows of one DC solution.
#[derive(Debug, Clone)]
pub struct DcState {
    pub theta: Vec<f64>,
    pub flows: Vec<f64>,
    pub outages: LineSet,
}

/// Locations of unsecured meters: injection meters on a subset of buses and
/// flow meters on a subset of lines. Generator buses are always metered.
#[derive(Debug, Clone)]
pub struct MeterLayout {
    pub node_meters: Vec<usize>,
    pub line_meters: Vec<usize>,
}

impl MeterLayout {
    /// Every bus injection and every line flow measured.
    pub fn full(grid: &GridModel) -> MeterLayout {
        MeterLayout {
            node_meters: (0..grid.n_buses()).collect(),
            line_meters: (0..grid.n_lines()).collect(),
        }
    }

    pub fn validate(&self, grid: &GridModel) -> Result<(), GridError> {
        for &g in grid.gen_buses() {
            if !self.node_meters.contains(&g) {
                return Err(GridError::BadData(format!(
                    "generator bus {} lacks an injection meter",
                    grid.bus_id(g)
                )));
            }
        }
        if !self.full_rank(grid) {
            return Err(GridError::BadData(
                "measurement matrix is rank deficient".into(),
            ));
        }
        Ok(())
    }

    /// Numerical check that H = [Lambda_p B; Lambda_f Gamma D^T] determines
    /// the state up to the reference angle (rank n-1).
    pub fn full_rank(&self, grid: &GridModel) -> bool {
        let n = grid.n_buses();
        let no_outage = LineSet::new();
        let b = grid.admittance(&no_outage);
        let mut h = DMatrix::zeros(self.node_meters.len() + self.line_meters.len(), n);
        for (i, &u) in self.node_meters.iter().enumerate() {
            for v in 0..n {
                h[(i, v)] = b[(u, v)];
            }
        }
        for (i, &e) in self.line_meters.iter().enumerate() {
            let line = grid.line(e);
            let y = line.susceptance();
            h[(self.node_meters.len() + i, line.from)] = y;
            h[(self.node_meters.len() + i, line.to)] = -y;
        }
        let rank = h.rank(1e-9);
        rank >= n - 1
    }

    /// Builds the measurement vector z = [injections; flows] for a state.
    pub fn measure(&self, grid: &GridModel, state: &DcState) -> Vec<f64> {
        let b = grid.admittance(&state.outages);
        let mut z = Vec::with_capacity(self.node_meters.len() + self.line_meters.len());
        for &u in &self.node_meters {
            let mut p = 0.0;
            for v in 0..grid.n_buses() {
                p += b[(u, v)] * state.theta[v];
            }
            z.push(p);
        }
        for &e in &self.line_meters {
            z.push(state.flows[e]);
        }
        z
    }
}
