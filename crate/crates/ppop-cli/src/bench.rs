//! Benchmark harness: expected-vs-observed tables per tier.
//!
//! `fast` covers the 30-bus rows, `full` adds the 57-bus rows, `long` adds
//! the 118-bus rows plus the 300-bus long-term placement comparison. Hard
//! rows fail the run with a nonzero exit; long-tier rows are soft and skip
//! on budget exhaustion or missing case data.

use crate::run::{load_case, params_from, verify_placement};
use ppop_core::attack::{
    solve_attacker_seeded, AttackGoal, PmuPlacement, SolveOutcome,
};
use ppop_core::bigm::compute_bigm;
use ppop_core::placement::{
    aodc, aong, full_observability, greedy_degree, heuristic_place, HeuristicKnobs,
    PlacementError, SolveBudget,
};
use ppop_core::report::{Algorithm, BenchRow, Report, RunConfig};
use std::process::ExitCode;
use std::time::Instant;

struct Harness {
    cfg: RunConfig,
    rows: Vec<BenchRow>,
    hard_failures: usize,
}

#[derive(Clone, Copy, PartialEq)]
enum Strictness {
    Hard,
    Soft,
}

impl Harness {
    fn record(
        &mut self,
        id: &str,
        expected: impl Into<String>,
        strict: Strictness,
        body: impl FnOnce(&RunConfig) -> Result<(String, bool), String>,
    ) {
        let t = Instant::now();
        let expected = expected.into();
        let (observed, pass) = match body(&self.cfg) {
            Ok((obs, ok)) => (obs, Some(ok)),
            Err(msg) if strict == Strictness::Soft => (msg, None),
            Err(msg) => (msg, Some(false)),
        };
        let seconds = t.elapsed().as_secs_f64();
        let verdict = match pass {
            Some(true) => "PASS",
            Some(false) => "FAIL",
            None => "SKIP",
        };
        println!("[{verdict}] {id}: expected {expected}, observed {observed} ({seconds:.1}s)");
        if pass == Some(false) && strict == Strictness::Hard {
            self.hard_failures += 1;
        }
        self.rows.push(BenchRow {
            id: id.into(),
            expected,
            observed,
            pass,
            hard: strict == Strictness::Hard,
            seconds,
        });
    }
}

fn budget_err(e: &PlacementError) -> String {
    match e {
        PlacementError::BudgetExhausted => "budget exhausted".into(),
        other => format!("{other}"),
    }
}

fn place_count(
    cfg: &RunConfig,
    case: &str,
    algo: Algorithm,
    alpha: Option<f64>,
    seed: u64,
) -> Result<(usize, Vec<u32>, usize), String> {
    let mut cfg = cfg.clone();
    cfg.case = case.into();
    cfg.algorithm = algo;
    cfg.seed = seed;
    if let Some(a) = alpha {
        cfg.alpha = a;
    }
    let grid = load_case(&cfg)?;
    let params = params_from(&cfg, &grid)?;
    let bigm = compute_bigm(&grid, &params);
    let budget = SolveBudget::new(cfg.budget_s);
    let out = match algo {
        Algorithm::Aong => aong(&grid, &params, &bigm, &budget),
        Algorithm::Aodc => aodc(&grid, &params, &bigm, &budget),
        Algorithm::Heuristic => {
            let knobs = HeuristicKnobs {
                kc: cfg.kc,
                ka: cfg.ka,
                kl: cfg.kl,
                seed,
            };
            heuristic_place(&grid, &params, &bigm, &knobs, &budget)
        }
        Algorithm::GreedyDegree => greedy_degree(&grid, &params, &bigm, &budget),
        Algorithm::FullObservability => unreachable!("handled separately"),
    }
    .map_err(|e| budget_err(&e))?;
    if !out.verified {
        return Err("placement unverified".into());
    }
    Ok((
        out.placement.count(),
        out.placement.bus_ids(&grid),
        out.trace.iterations.len(),
    ))
}

fn verify_golden(cfg: &RunConfig, case: &str, ids: &[u32]) -> Result<bool, String> {
    let mut cfg = cfg.clone();
    cfg.case = case.into();
    let grid = load_case(&cfg)?;
    let params = params_from(&cfg, &grid)?;
    let bigm = compute_bigm(&grid, &params);
    let beta = PmuPlacement::from_bus_ids(&grid, ids).map_err(|e| e.to_string())?;
    verify_placement(&grid, &params, &bigm, &beta, &cfg)
}

pub fn run(mut report: Report, cfg: &RunConfig, tier: &str, start: Instant) -> ExitCode {
    if !matches!(tier, "fast" | "full" | "long") {
        eprintln!("config error: unknown tier `{tier}` (fast|full|long)");
        return ExitCode::from(2);
    }
    let mut h = Harness {
        cfg: cfg.clone(),
        rows: Vec::new(),
        hard_failures: 0,
    };
    use Strictness::*;

    // ---- fast tier: 30-bus rows -------------------------------------
    for algo in [Algorithm::Aong, Algorithm::Aodc] {
        let name = format!("table2/{}/ieee30", if algo == Algorithm::Aong { "aong" } else { "aodc" });
        h.record(&name, "2 PMUs", Hard, |cfg| {
            let (count, ids, iters) = place_count(cfg, "ieee30", algo, None, cfg.seed)?;
            Ok((format!("{count} PMUs at {ids:?} ({iters} iters)"), count == 2))
        });
    }
    h.record("table7/aodc-iterations/ieee30", "<= 30", Hard, |cfg| {
        let (_, _, iters) = place_count(cfg, "ieee30", Algorithm::Aodc, None, cfg.seed)?;
        Ok((format!("{iters} iterations"), iters <= 30))
    });
    h.record("golden/placement-15-23/ieee30", "psi_a = 0", Hard, |cfg| {
        let safe = verify_golden(cfg, "ieee30", &[15, 23])?;
        Ok((if safe { "psi_a = 0" } else { "attackable" }.into(), safe))
    });
    h.record(
        "golden/every-single-bus-vulnerable/ieee30",
        "psi_a >= 1 for all 30",
        Hard,
        |cfg| {
            let mut cfg30 = cfg.clone();
            cfg30.case = "ieee30".into();
            let grid = load_case(&cfg30)?;
            let params = params_from(&cfg30, &grid)?;
            let bigm = compute_bigm(&grid, &params);
            let mut safe_buses = Vec::new();
            for u in 0..grid.n_buses() {
                let beta = PmuPlacement::from_indices(grid.n_buses(), [u]);
                match solve_attacker_seeded(
                    &grid,
                    &params,
                    &beta,
                    &bigm,
                    Some(cfg30.budget_s),
                    AttackGoal::FindAny,
                    cfg30.seed,
                )
                .map_err(|e| e.to_string())?
                {
                    SolveOutcome::Attack(_) => {}
                    SolveOutcome::NoAttack => safe_buses.push(grid.bus_id(u)),
                }
            }
            Ok((
                if safe_buses.is_empty() {
                    "all vulnerable".into()
                } else {
                    format!("safe single buses: {safe_buses:?}")
                },
                safe_buses.is_empty(),
            ))
        },
    );
    {
        let sweep = [(0.01, 1usize), (0.10, 1), (0.25, 2), (0.50, 3)];
        for (alpha, want) in sweep {
            let id = format!("table4/alpha-{alpha}/ieee30");
            h.record(&id, format!("{want} PMUs"), Hard, |cfg| {
                let (count, ids, _) =
                    place_count(cfg, "ieee30", Algorithm::Aodc, Some(alpha), cfg.seed)?;
                Ok((format!("{count} PMUs at {ids:?}"), count == want))
            });
        }
    }
    h.record("table2/full-observability/ieee30", "10 PMUs", Hard, |cfg| {
        let mut c = cfg.clone();
        c.case = "ieee30".into();
        let grid = load_case(&c)?;
        let p = full_observability(&grid, &[]).map_err(|e| e.to_string())?;
        Ok((format!("{} PMUs", p.count()), p.count() == 10))
    });
    h.record("table2/greedy-degree/ieee30", "3 PMUs", Hard, |cfg| {
        let (count, ids, _) = place_count(cfg, "ieee30", Algorithm::GreedyDegree, None, cfg.seed)?;
        Ok((format!("{count} PMUs at {ids:?}"), count == 3))
    });

    // ---- full tier: 57-bus rows -------------------------------------
    if tier != "fast" {
        for algo in [Algorithm::Aong, Algorithm::Aodc] {
            let name = format!(
                "table2/{}/ieee57",
                if algo == Algorithm::Aong { "aong" } else { "aodc" }
            );
            h.record(&name, "3 PMUs", Hard, |cfg| {
                let (count, ids, iters) = place_count(cfg, "ieee57", algo, None, cfg.seed)?;
                Ok((format!("{count} PMUs at {ids:?} ({iters} iters)"), count == 3))
            });
        }
        h.record("golden/placement-12-13-25/ieee57", "psi_a = 0", Hard, |cfg| {
            let safe = verify_golden(cfg, "ieee57", &[12, 13, 25])?;
            Ok((if safe { "psi_a = 0" } else { "attackable" }.into(), safe))
        });
        h.record("table2/heuristic/ieee30", "2 PMUs", Hard, |cfg| {
            let (count, ids, _) =
                place_count(cfg, "ieee30", Algorithm::Heuristic, None, cfg.seed)?;
            Ok((format!("{count} PMUs at {ids:?}"), count == 2))
        });
        h.record("table2/heuristic/ieee57", "3 PMUs", Hard, |cfg| {
            let (count, ids, _) =
                place_count(cfg, "ieee57", Algorithm::Heuristic, None, cfg.seed)?;
            Ok((format!("{count} PMUs at {ids:?}"), count == 3))
        });
        h.record("table2/full-observability/ieee57", "17 PMUs", Hard, |cfg| {
            let mut c = cfg.clone();
            c.case = "ieee57".into();
            let grid = load_case(&c)?;
            let p = full_observability(&grid, &[]).map_err(|e| e.to_string())?;
            Ok((format!("{} PMUs", p.count()), p.count() == 17))
        });
        h.record("table2/greedy-degree/ieee57", "3 PMUs", Hard, |cfg| {
            let (count, ids, _) =
                place_count(cfg, "ieee57", Algorithm::GreedyDegree, None, cfg.seed)?;
            Ok((format!("{count} PMUs at {ids:?}"), count == 3))
        });
    }

    // ---- long tier: 118-bus and 300-bus rows ------------------------
    if tier == "long" {
        h.record("table2/full-observability/ieee118", "32 PMUs", Soft, |cfg| {
            let mut c = cfg.clone();
            c.case = "ieee118".into();
            let grid = load_case(&c)?;
            let p = full_observability(&grid, &[]).map_err(|e| e.to_string())?;
            Ok((format!("{} PMUs", p.count()), p.count() == 32))
        });
        h.record("table2/greedy-degree/ieee118", "14 PMUs", Soft, |cfg| {
            let (count, ids, _) =
                place_count(cfg, "ieee118", Algorithm::GreedyDegree, None, cfg.seed)?;
            Ok((format!("{count} PMUs at {ids:?}"), count == 14))
        });
        h.record(
            "table2/heuristic/ieee118",
            "<= 12 PMUs over 5 seeds",
            Soft,
            |cfg| {
                let mut worst = 0usize;
                let mut sizes = Vec::new();
                for seed in 0..5u64 {
                    let (count, _, _) =
                        place_count(cfg, "ieee118", Algorithm::Heuristic, None, seed)?;
                    worst = worst.max(count);
                    sizes.push(count);
                }
                Ok((format!("sizes {sizes:?}"), worst <= 12))
            },
        );
        h.record(
            "table3/full-observability-pinned/ieee300",
            "95 PMUs (87 unpinned)",
            Soft,
            |_cfg| {
                Err("ieee300 case data not bundled (unavailable in this environment)".into())
            },
        );
        h.record("cascade/ieee118-rows-144-109", ">= 2 rounds", Soft, |cfg| {
            let mut c = cfg.clone();
            c.case = "ieee118".into();
            let grid = load_case(&c)?;
            let params = params_from(&c, &grid)?;
            let bigm = compute_bigm(&grid, &params);
            let ap_line = grid
                .line_by_source_row(144)
                .ok_or("no branch row 144".to_string())?;
            let target = grid
                .line_by_source_row(109)
                .ok_or("no branch row 109".to_string())?;
            let ap = ppop_core::grid::LineSet::from([ap_line]);
            let w = ppop_core::attack::solve_attacker_fixed_pair(
                &grid,
                &params,
                &PmuPlacement::empty(grid.n_buses()),
                &bigm,
                &ap,
                target,
                Some(c.budget_s),
            )
            .map_err(|e| e.to_string())?
            .ok_or("pair infeasible on this data".to_string())?;
            let cascade = grid.cascade_simulate(&w.dispatch_t3(&grid), &w.ap_set());
            Ok((
                format!(
                    "{} rounds, {} lines tripped",
                    cascade.rounds.len(),
                    cascade.total_tripped()
                ),
                cascade.rounds.len() >= 2,
            ))
        });
    }

    report.bench = h.rows;
    report.wall_s = start.elapsed().as_secs_f64();
    let json = report.to_json();
    match &report.config.out {
        Some(path) => {
            if std::fs::write(path, &json).is_err() {
                eprintln!("cannot write report to {path}");
                return ExitCode::from(2);
            }
            println!("report written to {path}");
        }
        None => println!("{json}"),
    }
    if h.hard_failures > 0 {
        eprintln!("{} hard benchmark assertion(s) failed", h.hard_failures);
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}
