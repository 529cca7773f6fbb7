//! Graph helpers over the in-service topology: components, Dijkstra, and the
//! weighted-path machinery behind the angle envelopes.

use super::{GridModel, LineSet};
use itertools::Itertools;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Component label per bus (0 = the component containing bus 0).
pub fn components(grid: &GridModel, outages: &LineSet) -> Vec<usize> {
    let n = grid.n_buses();
    let mut label = vec![usize::MAX; n];
    let mut next = 0;
    for start in 0..n {
        if label[start] != usize::MAX {
            continue;
        }
        let mut stack = vec![start];
        label[start] = next;
        while let Some(u) = stack.pop() {
            for &(v, e) in grid.neighbors(u) {
                if !outages.contains(&e) && label[v] == usize::MAX {
                    label[v] = next;
                    stack.push(v);
                }
            }
        }
        next += 1;
    }
    label
}

#[derive(PartialEq)]
struct HeapItem {
    dist: f64,
    bus: usize,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on dist, ties by bus for determinism
        other
            .dist
            .partial_cmp(&self.dist)
            .unwrap_or(Ordering::Equal)
            .then(other.bus.cmp(&self.bus))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Shortest distances from `source` under per-line `weights`, skipping
/// `outages` and any line in `removed`. Unreachable buses get `INFINITY`.
pub fn dijkstra(
    grid: &GridModel,
    weights: &[f64],
    source: usize,
    outages: &LineSet,
    removed: &LineSet,
) -> Vec<f64> {
    let n = grid.n_buses();
    let mut dist = vec![f64::INFINITY; n];
    let mut prev_line = vec![usize::MAX; n];
    dist[source] = 0.0;
    let mut heap = BinaryHeap::new();
    heap.push(HeapItem {
        dist: 0.0,
        bus: source,
    });
    while let Some(HeapItem { dist: d, bus: u }) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for &(v, e) in grid.neighbors(u) {
            if outages.contains(&e) || removed.contains(&e) {
                continue;
            }
            let nd = d + weights[e];
            if nd < dist[v] {
                dist[v] = nd;
                prev_line[v] = e;
                heap.push(HeapItem { dist: nd, bus: v });
            }
        }
    }
    dist
}

fn shortest_path_lines(
    grid: &GridModel,
    weights: &[f64],
    source: usize,
    target: usize,
    removed: &LineSet,
) -> Option<(f64, Vec<usize>)> {
    let n = grid.n_buses();
    let mut dist = vec![f64::INFINITY; n];
    let mut prev = vec![usize::MAX; n];
    let mut prev_line = vec![usize::MAX; n];
    dist[source] = 0.0;
    let mut heap = BinaryHeap::new();
    heap.push(HeapItem {
        dist: 0.0,
        bus: source,
    });
    while let Some(HeapItem { dist: d, bus: u }) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for &(v, e) in grid.neighbors(u) {
            if removed.contains(&e) {
                continue;
            }
            let nd = d + weights[e];
            if nd < dist[v] {
                dist[v] = nd;
                prev[v] = u;
                prev_line[v] = e;
                heap.push(HeapItem { dist: nd, bus: v });
            }
        }
    }
    if !dist[target].is_finite() {
        return None;
    }
    let mut lines = Vec::new();
    let mut u = target;
    while u != source {
        lines.push(prev_line[u]);
        u = prev[u];
    }
    Some((dist[target], lines))
}

/// Weights of up to `k` edge-disjoint source-target paths, found by repeated
/// shortest path with edge removal (shortest first).
pub fn disjoint_path_weights(
    grid: &GridModel,
    weights: &[f64],
    source: usize,
    target: usize,
    k: usize,
) -> Vec<f64> {
    let mut removed = LineSet::new();
    let mut out = Vec::new();
    for _ in 0..k {
        match shortest_path_lines(grid, weights, source, target, &removed) {
            Some((w, lines)) => {
                out.push(w);
                removed.extend(lines);
            }
            None => break,
        }
    }
    out
}

/// Exact per-bus angle envelope: for every bus, the maximum over all
/// connectivity-preserving attacks of size <= `xi_p` of the shortest
/// surviving path weight from the slack. Returns `None` when the number of
/// attack subsets exceeds `subset_cap`.
pub fn exact_envelope(
    grid: &GridModel,
    weights: &[f64],
    xi_p: usize,
    subset_cap: usize,
) -> Option<Vec<f64>> {
    let m = grid.n_lines();
    let xi = xi_p.min(m);
    let mut total: usize = 0;
    for k in 0..=xi {
        total = total.saturating_add(n_choose_k(m, k)?);
    }
    if total > subset_cap {
        return None;
    }
    let mut env = vec![0.0f64; grid.n_buses()];
    let empty = LineSet::new();
    for k in 0..=xi {
        for combo in (0..m).combinations(k) {
            let ap: LineSet = combo.into_iter().collect();
            if !grid.connected_without(&ap) {
                continue;
            }
            let dist = dijkstra(grid, weights, grid.slack(), &ap, &empty);
            for (e, d) in env.iter_mut().zip(&dist) {
                *e = e.max(*d);
            }
        }
    }
    Some(env)
}

fn n_choose_k(n: usize, k: usize) -> Option<usize> {
    let mut acc: usize = 1;
    for i in 0..k {
        acc = acc.checked_mul(n - i)?;
        acc /= i + 1;
    }
    Some(acc)
}

/// Total weight over all lines; a sound (if crude) upper bound on any simple
/// path weight.
pub fn total_weight(weights: &[f64]) -> f64 {
    weights.iter().sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cases::triangle3;

    #[test]
    fn disjoint_paths_on_triangle() {
        let g = triangle3();
        let w = vec![1.0; 3];
        // slack is bus 1 (index 0); paths to bus 3 (index 2): direct (1) and
        // two-hop (2).
        let ps = disjoint_path_weights(&g, &w, 0, 2, 3);
        assert_eq!(ps, vec![1.0, 2.0]);
    }

    #[test]
    fn exact_envelope_respects_connectivity() {
        let g = triangle3();
        let w = vec![1.0; 3];
        // xi_p = 1: worst case for bus 3 is losing the direct line -> 2.
        let env = exact_envelope(&g, &w, 1, 10_000).unwrap();
        assert_eq!(env[0], 0.0);
        assert_eq!(env[2], 2.0);
    }
}
