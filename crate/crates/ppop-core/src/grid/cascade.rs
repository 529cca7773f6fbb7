//! Overload-cascade simulation: trip every in-service line whose flow
//! exceeds gamma * f_max, re-solve, and repeat until a fixed point.
//!
//! Islands created along the way are rebalanced by scaling generation
//! proportionally down to the island load (or shedding load proportionally
//! when generation falls short), each island solved against its own
//! reference bus.

use super::{dcflow, paths, GridModel, LineSet};
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct CascadeReport {
    /// Tripped lines per round, in tripping order.
    pub rounds: Vec<Vec<usize>>,
    /// Initial physical outages plus everything tripped.
    pub final_outages: Vec<usize>,
    /// Flows at the fixed point (zero on outaged lines).
    pub final_flows: Vec<f64>,
    /// Number of connected components at the fixed point.
    pub islands: usize,
}

impl CascadeReport {
    pub fn total_tripped(&self) -> usize {
        self.rounds.iter().map(|r| r.len()).sum()
    }
}

fn rebalance_islands(grid: &GridModel, dispatch: &[f64], outages: &LineSet) -> (Vec<f64>, usize) {
    let comp = paths::components(grid, outages);
    let n_islands = comp.iter().max().map_or(0, |&c| c + 1);
    let mut p = dispatch.to_vec();
    for island in 0..n_islands {
        let members: Vec<usize> = (0..grid.n_buses()).filter(|&u| comp[u] == island).collect();
        let gen: f64 = members.iter().map(|&u| p[u].max(0.0)).sum();
        let load: f64 = members.iter().map(|&u| (-p[u]).max(0.0)).sum();
        if gen <= 0.0 || load <= 0.0 {
            for &u in &members {
                p[u] = 0.0;
            }
        } else if gen >= load {
            let s = load / gen;
            for &u in &members {
                if p[u] > 0.0 {
                    p[u] *= s;
                }
            }
        } else {
            let s = gen / load;
            for &u in &members {
                if p[u] < 0.0 {
                    p[u] *= s;
                }
            }
        }
    }
    (p, n_islands)
}

fn island_flows(grid: &GridModel, dispatch: &[f64], outages: &LineSet) -> Vec<f64> {
    let comp = paths::components(grid, outages);
    let n_islands = comp.iter().max().map_or(0, |&c| c + 1);
    let mut theta = vec![0.0; grid.n_buses()];
    for island in 0..n_islands {
        // Reference: the slack if it lives here, else the smallest bus index.
        let reference = if comp[grid.slack()] == island {
            grid.slack()
        } else {
            (0..grid.n_buses()).find(|&u| comp[u] == island).unwrap()
        };
        let mut p_island = vec![0.0; grid.n_buses()];
        for u in 0..grid.n_buses() {
            if comp[u] == island {
                p_island[u] = dispatch[u];
            }
        }
        let t = dcflow::solve_connected(grid, &p_island, outages, reference);
        for u in 0..grid.n_buses() {
            if comp[u] == island {
                theta[u] = t[u];
            }
        }
    }
    dcflow::flows_from_theta(grid, &theta, outages)
}

pub(super) fn simulate(grid: &GridModel, dispatch: &[f64], ap: &LineSet) -> CascadeReport {
    let mut outages = ap.clone();
    let mut rounds = Vec::new();
    let mut flows;
    let mut islands;
    loop {
        let (p, n_islands) = rebalance_islands(grid, dispatch, &outages);
        islands = n_islands;
        flows = island_flows(grid, &p, &outages);
        let trips: Vec<usize> = (0..grid.n_lines())
            .filter(|e| !outages.contains(e))
            .filter(|&e| flows[e].abs() > grid.line(e).gamma * grid.line(e).f_max)
            .collect();
        if trips.is_empty() {
            break;
        }
        outages.extend(trips.iter().copied());
        rounds.push(trips);
        if rounds.len() > grid.n_lines() {
            break; // cannot happen: every round removes a line
        }
    }
    CascadeReport {
        rounds,
        final_outages: outages.into_iter().collect(),
        final_flows: flows,
        islands,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cases::{triangle3, triangle3_with_limits};

    #[test]
    fn no_overload_means_no_rounds() {
        let g = triangle3(); // f_max = 1 everywhere, flows <= 2/3
        let rep = g.cascade_simulate(&[1.0, 0.0, -1.0], &LineSet::new());
        assert!(rep.rounds.is_empty());
        assert_eq!(rep.islands, 1);
    }

    #[test]
    fn series_overload_trips_both_remaining_lines() {
        // f_max = 0.8, gamma = 1.2: after losing line 1-3 both remaining
        // lines carry |f| = 1 > 0.96 and trip together in round one.
        let g = triangle3_with_limits(0.8, 1.2);
        let e_13 = g.lines().iter().position(|l| l.from == 0 && l.to == 2).unwrap();
        let rep = g.cascade_simulate(&[1.0, 0.0, -1.0], &LineSet::from([e_13]));
        assert_eq!(rep.rounds.len(), 1);
        assert_eq!(rep.rounds[0].len(), 2);
        // Everything is dead afterwards: three singleton islands, no flow.
        assert_eq!(rep.islands, 3);
        assert!(rep.final_flows.iter().all(|&f| f == 0.0));
    }

    #[test]
    fn island_rebalance_scales_generation() {
        // Cut the triangle so bus 1 (gen 1.0) islands from buses 2-3
        // (load 1.0): the island with generation only goes dark, the
        // load-only island sheds everything, so no flow remains.
        let g = triangle3();
        let e_12 = g.lines().iter().position(|l| l.from == 0 && l.to == 1).unwrap();
        let e_13 = g.lines().iter().position(|l| l.from == 0 && l.to == 2).unwrap();
        let rep = g.cascade_simulate(&[1.0, 0.0, -1.0], &LineSet::from([e_12, e_13]));
        assert!(rep.rounds.is_empty());
        assert_eq!(rep.islands, 2);
        assert!(rep.final_flows.iter().all(|&f| f == 0.0));
    }
}
