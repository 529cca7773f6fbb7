//! Acceptance suite: one test per benchmark criterion, each printing a
//! PASS/FAIL line with the expected and observed values before asserting.
//!
//! Defaults everywhere: alpha = 0.25, xi_p = 2, xi_c unlimited, gamma = 1.2,
//! relaxed dispatch, nominal load profile. Long-tier checks (118-bus,
//! 300-bus) are `#[ignore]` and run via `cargo test -- --ignored`.
//!
//! The bundled 57/118-bus cases carry synthesized thermal ratings and the
//! 30-bus case is the classic data set (see cases/README.md); criteria whose
//! published values depend on the authors' parameter source may fail here
//! honestly rather than being tuned to pass.

use itertools::Itertools;
use ppop_core::attack::{
    check_attack_pair, solve_attacker, AttackGoal, AttackParams, PmuPlacement, SolveOutcome,
};
use ppop_core::bigm::compute_bigm;
use ppop_core::cases::{load_bundled, ring5_with_limits, triangle3_with_limits};
use ppop_core::grid::{GridModel, LineSet};
use ppop_core::placement::{
    aodc, aong, full_observability, greedy_degree, heuristic_place, HeuristicKnobs,
    PlacementOutcome, SolveBudget,
};

const CASE_BUDGET_S: f64 = 1800.0; // 30 minutes per case, the stated target

fn verdict(criterion: &str, pass: bool, expected: impl std::fmt::Display, observed: impl std::fmt::Display) -> bool {
    println!(
        "[{}] {criterion}: expected {expected}, observed {observed}",
        if pass { "PASS" } else { "FAIL" }
    );
    pass
}

fn exact_solver_count(case: &str, alpha: f64, use_aodc: bool) -> (usize, Vec<u32>, usize, f64) {
    let grid = load_bundled(case, 1.2).unwrap();
    let params = AttackParams {
        alpha,
        ..AttackParams::default_eval()
    };
    let bigm = compute_bigm(&grid, &params);
    let t = std::time::Instant::now();
    let out = if use_aodc {
        aodc(&grid, &params, &bigm, &SolveBudget::new(CASE_BUDGET_S))
    } else {
        aong(&grid, &params, &bigm, &SolveBudget::new(CASE_BUDGET_S))
    }
    .unwrap_or_else(|e| panic!("{case} exact solve failed: {e}"));
    assert!(out.verified, "{case}: returned placement not verified");
    assert!(out.optimal, "{case}: master not solved to optimality");
    (
        out.placement.count(),
        out.placement.bus_ids(&grid),
        out.trace.iterations.len(),
        t.elapsed().as_secs_f64(),
    )
}

#[test]
fn criterion1_exact_optima_ieee30() {
    let (aong_count, aong_ids, _, t1) = exact_solver_count("ieee30", 0.25, false);
    let (aodc_count, aodc_ids, iters, t2) = exact_solver_count("ieee30", 0.25, true);
    let ok = verdict(
        "criterion 1 (30-bus exact optima)",
        aong_count == 2 && aodc_count == 2,
        "2 PMUs from both exact solvers",
        format!(
            "aong {aong_count} at {aong_ids:?} ({t1:.0}s), aodc {aodc_count} at {aodc_ids:?} ({iters} iters, {t2:.0}s)"
        ),
    );
    assert!(t1 < CASE_BUDGET_S && t2 < CASE_BUDGET_S, "runtime target exceeded");
    assert!(
        ok,
        "30-bus optimum differs (classic ratings; authors' parameter set unavailable, see cases/README.md)"
    );
}

#[test]
fn criterion1_exact_optima_ieee57() {
    let (aong_count, aong_ids, _, t1) = exact_solver_count("ieee57", 0.25, false);
    let (aodc_count, aodc_ids, iters, t2) = exact_solver_count("ieee57", 0.25, true);
    let ok = verdict(
        "criterion 1 (57-bus exact optima)",
        aong_count == 3 && aodc_count == 3,
        "3 PMUs from both exact solvers",
        format!(
            "aong {aong_count} at {aong_ids:?} ({t1:.0}s), aodc {aodc_count} at {aodc_ids:?} ({iters} iters, {t2:.0}s)"
        ),
    );
    assert!(t1 < CASE_BUDGET_S && t2 < CASE_BUDGET_S, "runtime target exceeded");
    assert!(
        ok,
        "57-bus optimum differs (synthesized ratings; authors' parameter set unavailable, see cases/README.md)"
    );
}

fn psi_a_zero(grid: &GridModel, params: &AttackParams, ids: &[u32]) -> bool {
    let bigm = compute_bigm(grid, params);
    let beta = PmuPlacement::from_bus_ids(grid, ids).unwrap();
    match solve_attacker(grid, params, &beta, &bigm, Some(CASE_BUDGET_S), AttackGoal::FindAny)
        .unwrap()
    {
        SolveOutcome::NoAttack => true,
        SolveOutcome::Attack(_) => false,
    }
}

#[test]
fn criterion2_golden_placements_verify() {
    let g30 = load_bundled("ieee30", 1.2).unwrap();
    let g57 = load_bundled("ieee57", 1.2).unwrap();
    let params = AttackParams::default_eval();
    let safe30 = psi_a_zero(&g30, &params, &[15, 23]);
    let safe57 = psi_a_zero(&g57, &params, &[12, 13, 25]);
    let ok = verdict(
        "criterion 2 (published placements verify)",
        safe30 && safe57,
        "psi_a = 0 for {15,23}@30 and {12,13,25}@57",
        format!("30-bus safe: {safe30}, 57-bus safe: {safe57}"),
    );
    assert!(
        ok,
        "published placements do not verify on the reconstructed data (see cases/README.md)"
    );
}

#[test]
fn criterion2_every_single_pmu_is_insufficient_on_ieee30() {
    let grid = load_bundled("ieee30", 1.2).unwrap();
    let params = AttackParams::default_eval();
    let bigm = compute_bigm(&grid, &params);
    let mut safe = Vec::new();
    for u in 0..grid.n_buses() {
        let beta = PmuPlacement::from_indices(grid.n_buses(), [u]);
        if let SolveOutcome::NoAttack =
            solve_attacker(&grid, &params, &beta, &bigm, Some(120.0), AttackGoal::FindAny).unwrap()
        {
            safe.push(grid.bus_id(u));
        }
    }
    let ok = verdict(
        "criterion 2 (30 single-bus placements all vulnerable)",
        safe.is_empty(),
        "psi_a >= 1 for every single-bus placement",
        if safe.is_empty() {
            "all vulnerable".to_string()
        } else {
            format!("safe single buses {safe:?}")
        },
    );
    assert!(ok);
}

#[test]
fn criterion3_alpha_sweep_ieee30() {
    let expected = [(0.01, 1usize), (0.10, 1), (0.25, 2), (0.50, 3)];
    let mut observed = Vec::new();
    for (alpha, _) in expected {
        let (count, _, _, _) = exact_solver_count("ieee30", alpha, true);
        observed.push(count);
    }
    let ok = expected
        .iter()
        .zip(&observed)
        .all(|((_, want), got)| want == got);
    // The monotone response must hold on any data; the exact counts are the
    // published ones.
    assert!(
        observed.windows(2).all(|w| w[0] <= w[1]),
        "PMU count must be non-decreasing in alpha, got {observed:?}"
    );
    let ok = verdict(
        "criterion 3 (alpha sweep)",
        ok,
        "counts [1, 1, 2, 3] at alpha = [0.01, 0.10, 0.25, 0.50]",
        format!("{observed:?}"),
    );
    assert!(
        ok,
        "alpha-sweep counts differ (classic ratings; authors' parameter set unavailable, see cases/README.md)"
    );
}

fn run_heuristic(case: &str, seed: u64) -> PlacementOutcome {
    let grid = load_bundled(case, 1.2).unwrap();
    let params = AttackParams::default_eval();
    let bigm = compute_bigm(&grid, &params);
    heuristic_place(
        &grid,
        &params,
        &bigm,
        &HeuristicKnobs {
            kc: 10,
            ka: 10,
            kl: 10,
            seed,
        },
        &SolveBudget::new(CASE_BUDGET_S),
    )
    .unwrap_or_else(|e| panic!("heuristic failed on {case}: {e}"))
}

#[test]
fn criterion4_heuristic_quality_fast_cases() {
    let h30 = run_heuristic("ieee30", 0);
    let h57 = run_heuristic("ieee57", 0);
    assert!(h30.verified && h57.verified);
    let ok = verdict(
        "criterion 4 (heuristic quality)",
        h30.placement.count() == 2 && h57.placement.count() == 3,
        "2 PMUs on 30-bus and 3 on 57-bus",
        format!(
            "30-bus {} PMUs, 57-bus {} PMUs",
            h30.placement.count(),
            h57.placement.count()
        ),
    );
    assert!(
        ok,
        "heuristic counts differ (authors' parameter set unavailable, see cases/README.md)"
    );
}

#[test]
#[ignore = "long tier: five seeded 118-bus heuristic runs"]
fn criterion4_heuristic_ieee118_long() {
    let mut sizes = Vec::new();
    for seed in 0..5 {
        let out = run_heuristic("ieee118", seed);
        assert!(out.verified);
        sizes.push(out.placement.count());
    }
    let worst = *sizes.iter().max().unwrap();
    let ok = verdict(
        "criterion 4 (118-bus heuristic, 5 seeds)",
        worst <= 12,
        "<= 12 PMUs on every seed",
        format!("sizes {sizes:?}"),
    );
    assert!(ok);
}

#[test]
fn criterion5_baselines_fast_and_full() {
    let g30 = load_bundled("ieee30", 1.2).unwrap();
    let g57 = load_bundled("ieee57", 1.2).unwrap();
    let obs30 = full_observability(&g30, &[]).unwrap().count();
    let obs57 = full_observability(&g57, &[]).unwrap().count();
    let params = AttackParams::default_eval();
    let greedy = |g: &GridModel| {
        let bigm = compute_bigm(g, &params);
        greedy_degree(g, &params, &bigm, &SolveBudget::new(CASE_BUDGET_S))
            .unwrap()
            .placement
            .count()
    };
    let gd30 = greedy(&g30);
    let gd57 = greedy(&g57);
    let ok = verdict(
        "criterion 5 (baselines 30/57)",
        obs30 == 10 && obs57 == 17 && gd30 == 3 && gd57 == 3,
        "full observability 10/17, degree-greedy 3/3",
        format!("full observability {obs30}/{obs57}, degree-greedy {gd30}/{gd57}"),
    );
    assert!(ok);
}

#[test]
#[ignore = "long tier: 118-bus baselines"]
fn criterion5_baselines_ieee118_long() {
    let g = load_bundled("ieee118", 1.2).unwrap();
    let obs = full_observability(&g, &[]).unwrap().count();
    let params = AttackParams::default_eval();
    let bigm = compute_bigm(&g, &params);
    let gd = greedy_degree(&g, &params, &bigm, &SolveBudget::new(2.0 * CASE_BUDGET_S))
        .unwrap()
        .placement
        .count();
    let ok = verdict(
        "criterion 5 (118-bus baselines)",
        obs == 32 && gd == 14,
        "full observability 32, degree-greedy 14",
        format!("full observability {obs}, degree-greedy {gd}"),
    );
    assert!(ok);
}

#[test]
#[ignore = "long tier: 300-bus case data is not bundled in this environment"]
fn criterion6_long_term_placement_ieee300() {
    // Appendix-published 31-bus placement would be pinned into the
    // full-observability MILP (expect 95 pinned / 87 unpinned). The 300-bus
    // case cannot be reconstructed faithfully, so this criterion is
    // unattainable here; see cases/README.md and the run below fails loudly
    // rather than fabricating topology.
    let err = load_bundled("ieee300", 1.2).unwrap_err();
    panic!("criterion 6 blocked: {err}");
}

#[test]
fn criterion7_brute_force_equivalence_and_cut_soundness() {
    // Exact solvers versus 2^n enumeration on small grids with the pair
    // LP as the psi_a oracle, plus Lemma-1 style cut soundness.
    for (grid, xi_p) in [
        (triangle3_with_limits(0.8, 1.2), 1usize),
        (ring5_with_limits(0.55, 1.2), 1),
    ] {
        let params = AttackParams {
            xi_p,
            ..AttackParams::default_eval()
        };
        let bigm = compute_bigm(&grid, &params);
        let n = grid.n_buses();

        // Oracle: a placement is safe iff no enumerated pair is feasible.
        let pairs = ppop_core::attack::enumerate_attack_pairs(
            &grid,
            &params,
            &PmuPlacement::empty(n),
        );
        let safe_by_pairs = |beta: &PmuPlacement| {
            let xl = beta.x_l(&grid);
            pairs
                .iter()
                .filter(|(ap, _)| ap.iter().all(|&e| !xl[e]))
                .all(|(ap, target)| {
                    !check_attack_pair(&grid, &params, beta, &bigm, ap, *target)
                        .unwrap()
                        .feasible
                })
        };
        let mut best = usize::MAX;
        for mask in 0..(1u32 << n) {
            let beta = PmuPlacement::from_indices(n, (0..n).filter(|i| mask & (1 << i) != 0));
            if safe_by_pairs(&beta) {
                best = best.min(beta.count());
            }
        }
        let budget = SolveBudget::new(600.0);
        let a = aong(&grid, &params, &bigm, &budget).unwrap();
        let d = aodc(&grid, &params, &bigm, &budget).unwrap();
        assert_eq!(a.placement.count(), best, "aong vs 2^n enumeration");
        assert_eq!(d.placement.count(), best, "aodc vs 2^n enumeration");
        // Gale certificates agreed with the primal LP on every iteration.
        for rec in &d.trace.iterations {
            if let Some((checked, agreed)) = rec.gale_checked {
                assert_eq!(checked, agreed, "gale certificate disagreement");
            }
        }
    }
    println!("[PASS] criterion 7 (brute-force equivalence, Gale soundness): small grids match 2^n enumeration");
}

#[test]
fn criterion7_lemma1_monotonicity_exhaustive() {
    // psi_a(beta) = 0 and beta' >= beta imply psi_a(beta') = 0, checked
    // exhaustively on a vulnerable small grid.
    let grid = ring5_with_limits(0.55, 1.2);
    let params = AttackParams {
        xi_p: 1,
        ..AttackParams::default_eval()
    };
    let bigm = compute_bigm(&grid, &params);
    let n = grid.n_buses();
    let mut safe = vec![false; 1 << n];
    for mask in 0..(1u32 << n) {
        let beta = PmuPlacement::from_indices(n, (0..n).filter(|i| mask & (1 << i) != 0));
        safe[mask as usize] = matches!(
            solve_attacker(&grid, &params, &beta, &bigm, Some(60.0), AttackGoal::FindAny).unwrap(),
            SolveOutcome::NoAttack
        );
    }
    for a in 0..(1u32 << n) {
        for b in 0..(1u32 << n) {
            if a & b == a && safe[a as usize] {
                assert!(safe[b as usize], "monotonicity violated: {a:b} safe, {b:b} not");
            }
        }
    }
    println!("[PASS] criterion 7 (Lemma-1 monotonicity): exhaustive on 2^5 placements");
}

#[test]
fn criterion7_pair_enumeration_counts() {
    let g30 = load_bundled("ieee30", 1.2).unwrap();
    assert_eq!(g30.n_lines(), 41);
    assert_eq!(ppop_core::attack::pair_count_at_size(41, 2), 33_620);
    assert_eq!(ppop_core::attack::pair_count_at_size(80, 2), 252_800);
    assert_eq!(ppop_core::attack::pair_count_at_size(186, 2), 3_200_130);
    // Enumeration consistency against hand counting on the triangle.
    let tri = triangle3_with_limits(1.0, 1.2);
    let params = AttackParams {
        xi_p: 1,
        ..AttackParams::default_eval()
    };
    let pairs =
        ppop_core::attack::enumerate_attack_pairs(&tri, &params, &PmuPlacement::empty(3));
    assert_eq!(pairs.iter().filter(|(ap, _)| !ap.is_empty()).count(), 6);
    println!("[PASS] criterion 7 (pair enumeration): published totals and hand counts match");
}

#[test]
fn criterion7_connectivity_equivalence_small_grids() {
    // Attack sets accepted by the pseudo-flow system equal the BFS notion;
    // exercised through the attacker: any witness's ap keeps the grid
    // connected, and every disconnecting ap is rejected at model level.
    let grid = ring5_with_limits(0.5, 1.2);
    let params = AttackParams {
        xi_p: 2,
        ..AttackParams::default_eval()
    };
    let bigm = compute_bigm(&grid, &params);
    let m = grid.n_lines();
    for combo in (0..m).combinations(2) {
        let ap: LineSet = combo.into_iter().collect();
        let connected = grid.connected_without(&ap);
        // A fixed-ap probe must be buildable iff connected.
        let probe = check_attack_pair(
            &grid,
            &params,
            &PmuPlacement::empty(grid.n_buses()),
            &bigm,
            &ap,
            (0..m).find(|t| !ap.contains(t)).unwrap(),
        );
        assert_eq!(probe.is_ok(), connected, "ap {ap:?}");
    }
    println!("[PASS] criterion 7 (connectivity): pseudo-flow gate equals BFS on all |ap| = 2 sets");
}
