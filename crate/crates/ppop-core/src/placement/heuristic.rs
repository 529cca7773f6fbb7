//! Polynomial-time 3-phase placement heuristic.
//!
//! Phase 1 accumulates attack pairs until rounding the relaxed master blocks
//! them all; phase 2 seeds candidate placements from the final fractional
//! solution; phase 3 grows the candidates against newly discovered pairs,
//! one node per round, until one verifies safe.

use super::denial::{build_with_theta2, AttackDenialBlock};
use super::lp_master::lp_relax_master;
use super::{
    sced_feasible, IterationRecord, PlacementError, PlacementOutcome, PlacementTrace, SolveBudget,
};
use crate::attack::{
    solve_attacker_seeded, AttackGoal, AttackPair, AttackParams, PmuPlacement, SolveOutcome,
};
use crate::bigm::BigMBundle;
use crate::grid::GridModel;
use rayon::prelude::*;
use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

#[derive(Debug, Clone)]
pub struct HeuristicKnobs {
    /// Candidate pool size (Kc), new candidates per LP (KA), and per
    /// coverage-greedy step (KL).
    pub kc: usize,
    pub ka: usize,
    pub kl: usize,
    pub seed: u64,
}

impl Default for HeuristicKnobs {
    fn default() -> Self {
        HeuristicKnobs {
            kc: 10,
            ka: 10,
            kl: 10,
            seed: 0,
        }
    }
}

type Candidate = BTreeSet<usize>;

/// Shared state across the phases: pooled pairs with their denial blocks,
/// No-Good placements, and a defense-check memo.
struct Ctx<'a> {
    grid: &'a GridModel,
    params: &'a AttackParams,
    knobs: &'a HeuristicKnobs,
    blocks: Vec<AttackDenialBlock>,
    nogood: Vec<PmuPlacement>,
    defense_memo: BTreeMap<(Vec<usize>, usize), bool>,
    lp_calls: usize,
    attacker_calls: usize,
}

impl Ctx<'_> {
    fn add_pair(&mut self, bigm: &BigMBundle, pair: AttackPair, theta2: Vec<f64>, p0: Option<&[f64]>) -> usize {
        if let Some(i) = self.blocks.iter().position(|b| b.pair == pair) {
            return i;
        }
        self.blocks
            .push(build_with_theta2(self.grid, self.params, bigm, &pair, theta2, p0));
        self.blocks.len() - 1
    }

    /// Does the candidate defend the pooled pair? Either an attacked line is
    /// covered or the pair's block is infeasible under the coverage.
    fn defends(&mut self, omega: &Candidate, pair_idx: usize) -> bool {
        let key = (omega.iter().copied().collect::<Vec<_>>(), pair_idx);
        if let Some(&v) = self.defense_memo.get(&key) {
            return v;
        }
        let beta = PmuPlacement::from_indices(self.grid.n_buses(), omega.iter().copied());
        let block = &self.blocks[pair_idx];
        let xl = beta.x_l(self.grid);
        let covered = block.pair.ap.iter().any(|&e| xl[e]);
        let v = covered || !block.feasible_under(&beta.x_n(self.grid));
        self.defense_memo.insert(key, v);
        v
    }

    fn lp_round(
        &mut self,
        bigm: &mut BigMBundle,
        pair_subset: &[usize],
        pins: &Candidate,
    ) -> Result<Vec<f64>, PlacementError> {
        self.lp_calls += 1;
        let blocks: Vec<AttackDenialBlock> = pair_subset
            .iter()
            .map(|&i| self.blocks[i].clone())
            .collect();
        let pins: Vec<usize> = pins.iter().copied().collect();
        let sol = lp_relax_master(self.grid, bigm, &blocks, &self.nogood, &pins)?;
        Ok(sol.beta)
    }
}

pub fn heuristic_place(
    grid: &GridModel,
    params: &AttackParams,
    bigm: &BigMBundle,
    knobs: &HeuristicKnobs,
    budget: &SolveBudget,
) -> Result<PlacementOutcome, PlacementError> {
    params.validate(grid)?;
    if !params.pair_lp_valid() {
        return Err(PlacementError::Attack(
            crate::attack::AttackError::Precondition(
                "heuristic needs relaxed dispatch and unlimited xi_c".into(),
            ),
        ));
    }
    if params.load_range.is_none() && !sced_feasible(grid) {
        return Err(PlacementError::ScedInfeasible);
    }
    let start = Instant::now();
    let left = |start: Instant| budget.total_s - start.elapsed().as_secs_f64();
    let mut bigm = bigm.clone();
    let mut trace = PlacementTrace {
        algorithm: "heuristic".into(),
        ..Default::default()
    };
    let mut ctx = Ctx {
        grid,
        params,
        knobs,
        blocks: Vec::new(),
        nogood: Vec::new(),
        defense_memo: BTreeMap::new(),
        lp_calls: 0,
        attacker_calls: 0,
    };
    let n = grid.n_buses();

    // Phase 1: pair discovery until the rounded LP placement is safe.
    let mut beta_hat = PmuPlacement::empty(n);
    let mut frac = vec![0.0; n];
    let mut a0: Vec<usize> = Vec::new();
    let mut k = 0usize;
    let phase1_result = loop {
        k += 1;
        if left(start) <= 0.0 {
            return Err(PlacementError::BudgetExhausted);
        }
        ctx.attacker_calls += 1;
        let out = solve_attacker_seeded(
            grid,
            params,
            &beta_hat,
            &bigm,
            Some(left(start)),
            AttackGoal::FindAny,
            knobs.seed,
        )?;
        let witness = match out {
            SolveOutcome::NoAttack => break beta_hat.clone(),
            SolveOutcome::Attack(w) => w,
        };
        trace.iterations.push(IterationRecord {
            k,
            beta_size: beta_hat.count(),
            beta_bus_ids: beta_hat.bus_ids(grid),
            attacker: "attack".into(),
            witness_ap: witness.ap.clone(),
            witness_targets: witness.targets.clone(),
            cut: "phase1".into(),
            maximal_size: None,
            master_status: None,
            gale_checked: None,
            wall_s: start.elapsed().as_secs_f64(),
        });
        for &(target, dir) in &witness.target_dirs {
            let pair = AttackPair {
                ap: witness.ap_set(),
                target,
                dir,
            };
            let idx = ctx.add_pair(
                &bigm,
                pair,
                witness.theta2.clone(),
                witness.load_profile_used.as_deref(),
            );
            if !a0.contains(&idx) {
                a0.push(idx);
            }
        }
        ctx.nogood.push(beta_hat.clone());
        frac = ctx.lp_round(&mut bigm, &a0, &Candidate::new())?;
        beta_hat = PmuPlacement::from_indices(n, (0..n).filter(|&u| frac[u] > 1e-9));
        if k > 10 * grid.n_lines() + 50 {
            return Err(PlacementError::MasterFailed(
                "phase-1 failed to converge".into(),
            ));
        }
    };

    if a0.is_empty() {
        // The empty placement is already safe.
        trace.lp_calls = ctx.lp_calls;
        trace.attacker_calls = ctx.attacker_calls;
        trace.wall_s = start.elapsed().as_secs_f64();
        return Ok(PlacementOutcome {
            placement: phase1_result,
            optimal: false,
            verified: true,
            trace,
        });
    }

    // Phase 2: seed candidates with the top-Kc fractional buses.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| frac[b].partial_cmp(&frac[a]).unwrap().then(a.cmp(&b)));
    let kc = knobs.kc.max(1).min(n);
    let mut candidates: Vec<Candidate> = order[..kc]
        .iter()
        .map(|&u| Candidate::from([u]))
        .collect();
    candidates = update_candidates_inner(&mut ctx, &mut bigm, candidates, &a0, start, budget)?;

    // Phase 3: grow the candidates against fresh attacks.
    loop {
        if left(start) <= 0.0 {
            return Err(PlacementError::BudgetExhausted);
        }
        let mut attacks: Vec<usize> = Vec::new();
        let mut feasible: Vec<&Candidate> = Vec::new();
        let mut infeasible_min = usize::MAX;
        let mut evaluated = Vec::new();
        for omega in &candidates {
            ctx.attacker_calls += 1;
            let beta = PmuPlacement::from_indices(n, omega.iter().copied());
            let out = solve_attacker_seeded(
                grid,
                params,
                &beta,
                &bigm,
                Some(left(start).max(1.0)),
                AttackGoal::FindAny,
                knobs.seed,
            )?;
            match out {
                SolveOutcome::NoAttack => feasible.push(omega),
                SolveOutcome::Attack(w) => {
                    infeasible_min = infeasible_min.min(omega.len());
                    evaluated.push((omega.clone(), w.ap.clone(), w.targets.clone()));
                    for &(target, dir) in &w.target_dirs {
                        let pair = AttackPair {
                            ap: w.ap_set(),
                            target,
                            dir,
                        };
                        let idx = ctx.add_pair(
                            &bigm,
                            pair,
                            w.theta2.clone(),
                            w.load_profile_used.as_deref(),
                        );
                        if !attacks.contains(&idx) {
                            attacks.push(idx);
                        }
                    }
                }
            }
        }
        if !feasible.is_empty() {
            let best = feasible
                .iter()
                .min_by_key(|o| (o.len(), o.iter().copied().collect::<Vec<_>>()))
                .unwrap();
            // Return early when no failing candidate could beat the best by
            // more than one PMU (or when none are failing).
            if infeasible_min == usize::MAX || best.len() <= 1 + infeasible_min {
                let placement = PmuPlacement::from_indices(n, best.iter().copied());
                trace.nogood_cuts = ctx.nogood.len();
                trace.denial_blocks = ctx.blocks.len();
                trace.lp_calls = ctx.lp_calls;
                trace.attacker_calls = ctx.attacker_calls;
                trace.bigm_escalations = bigm.escalations;
                trace.wall_s = start.elapsed().as_secs_f64();
                return Ok(PlacementOutcome {
                    placement,
                    optimal: false,
                    verified: true,
                    trace,
                });
            }
        }
        for (omega, ap, targets) in evaluated {
            trace.iterations.push(IterationRecord {
                k: trace.iterations.len() + 1,
                beta_size: omega.len(),
                beta_bus_ids: omega.iter().map(|&u| grid.bus_id(u)).collect(),
                attacker: "attack".into(),
                witness_ap: ap,
                witness_targets: targets,
                cut: "phase3".into(),
                maximal_size: None,
                master_status: None,
                gale_checked: None,
                wall_s: start.elapsed().as_secs_f64(),
            });
        }
        candidates = update_candidates_inner(&mut ctx, &mut bigm, candidates, &attacks, start, budget)?;
    }
}

/// Standalone form of the candidate-augmentation step: returns the updated
/// candidates and the grown No-Good pool. Blocks are derived from the pairs'
/// ground-truth states under the nominal profile.
pub fn update_candidate(
    grid: &GridModel,
    params: &AttackParams,
    bigm: &BigMBundle,
    candidates: Vec<BTreeSet<usize>>,
    attacks: &[AttackPair],
    nogood: Vec<PmuPlacement>,
    knobs: &HeuristicKnobs,
) -> Result<(Vec<BTreeSet<usize>>, Vec<PmuPlacement>), PlacementError> {
    let mut bigm = bigm.clone();
    let mut ctx = Ctx {
        grid,
        params,
        knobs,
        blocks: attacks
            .iter()
            .map(|pair| super::denial::build_attack_denial(grid, params, &bigm, pair))
            .collect::<Result<_, _>>()?,
        nogood,
        defense_memo: BTreeMap::new(),
        lp_calls: 0,
        attacker_calls: 0,
    };
    let idx: Vec<usize> = (0..attacks.len()).collect();
    let budget = SolveBudget::default();
    let out = update_candidates_inner(&mut ctx, &mut bigm, candidates, &idx, Instant::now(), &budget)?;
    Ok((out, ctx.nogood))
}

/// Augments candidates until each defends every pair in `attacks`; every
/// surviving candidate grows by at most one bus per round.
fn update_candidates_inner(
    ctx: &mut Ctx,
    bigm: &mut BigMBundle,
    mut candidates: Vec<Candidate>,
    attacks: &[usize],
    start: Instant,
    budget: &SolveBudget,
) -> Result<Vec<Candidate>, PlacementError> {
    if attacks.is_empty() {
        return Ok(candidates);
    }
    let n = ctx.grid.n_buses();
    let kc = candidates.len();
    let mut rounds = 0usize;
    loop {
        rounds += 1;
        if rounds > n + 1 {
            return Err(PlacementError::MasterFailed(
                "candidate augmentation failed to converge".into(),
            ));
        }
        if budget.total_s - start.elapsed().as_secs_f64() <= 0.0 {
            return Err(PlacementError::BudgetExhausted);
        }
        let undefended: Vec<Vec<usize>> = candidates
            .iter()
            .map(|omega| {
                attacks
                    .iter()
                    .copied()
                    .filter(|&i| !ctx.defends(omega, i))
                    .collect()
            })
            .collect();
        if undefended.iter().all(|u| u.is_empty()) {
            return Ok(candidates);
        }

        let mut pool: BTreeSet<Candidate> = BTreeSet::new();
        for (omega, misses) in candidates.iter().zip(&undefended) {
            if misses.is_empty() {
                pool.insert(omega.clone());
                continue;
            }
            ctx.nogood
                .push(PmuPlacement::from_indices(n, omega.iter().copied()));

            // Coverage-greedy: buses ranked by how many of the missed pairs'
            // physical attacks they would protect.
            let mut prevented = vec![0usize; n];
            for &i in misses {
                for &e in &ctx.blocks[i].pair.ap {
                    let l = ctx.grid.line(e);
                    prevented[l.from] += 1;
                    prevented[l.to] += 1;
                }
            }
            let mut by_coverage: Vec<usize> = (0..n)
                .filter(|&u| prevented[u] > 0 && !omega.contains(&u))
                .collect();
            by_coverage.sort_by(|&a, &b| prevented[b].cmp(&prevented[a]).then(a.cmp(&b)));
            for &v in by_coverage.iter().take(ctx.knobs.kl) {
                let mut bigger = omega.clone();
                bigger.insert(v);
                pool.insert(bigger);
            }

            // LP-guided: pin the candidate, rank outside buses by the
            // fractional solution.
            let frac = ctx.lp_round(bigm, attacks, omega)?;
            let mut by_frac: Vec<usize> = (0..n)
                .filter(|&u| !omega.contains(&u) && frac[u] > 1e-9)
                .collect();
            by_frac.sort_by(|&a, &b| frac[b].partial_cmp(&frac[a]).unwrap().then(a.cmp(&b)));
            for &u in by_frac.iter().take(ctx.knobs.ka) {
                let mut bigger = omega.clone();
                bigger.insert(u);
                pool.insert(bigger);
            }
        }

        // Keep the Kc pool entries defending the most pairs; ties prefer
        // smaller then lexicographically earlier candidates. Scoring runs the
        // per-pair block LPs in parallel (grid and blocks are immutable).
        let entries: Vec<Candidate> = pool.into_iter().collect();
        let blocks = &ctx.blocks;
        let grid = ctx.grid;
        let scores: Vec<usize> = entries
            .par_iter()
            .map(|omega| {
                let beta = PmuPlacement::from_indices(n, omega.iter().copied());
                let xn = beta.x_n(grid);
                let xl = beta.x_l(grid);
                attacks
                    .iter()
                    .filter(|&&i| {
                        let b = &blocks[i];
                        b.pair.ap.iter().any(|&e| xl[e]) || !b.feasible_under(&xn)
                    })
                    .count()
            })
            .collect();
        let mut order: Vec<usize> = (0..entries.len()).collect();
        order.sort_by(|&a, &b| {
            scores[b]
                .cmp(&scores[a])
                .then(entries[a].len().cmp(&entries[b].len()))
                .then(entries[a].cmp(&entries[b]))
        });
        candidates = order
            .into_iter()
            .take(kc)
            .map(|i| entries[i].clone())
            .collect();
    }
}
