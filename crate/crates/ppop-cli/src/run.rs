//! Command execution: case loading, algorithm dispatch, re-verification,
//! and JSON report emission.

use crate::bench;
use ppop_core::attack::{
    solve_attacker_seeded, AttackGoal, AttackParams, PmuPlacement, SolveOutcome,
};
use ppop_core::bigm::{compute_bigm, BigMBundle};
use ppop_core::cases;
use ppop_core::grid::{load_matpower, parse_matpower, GridModel, LineSet};
use ppop_core::placement::{
    aodc, aong, full_observability, greedy_degree, heuristic_place, HeuristicKnobs,
    PlacementError, SolveBudget,
};
use ppop_core::report::{parse_placement_file, Algorithm, Report, RunConfig, WitnessReport};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

pub enum Action {
    Place,
    Attack {
        placement: Option<PathBuf>,
        expect_safe: bool,
    },
    Cascade {
        lines: String,
    },
    Bench {
        tier: String,
    },
}

pub fn load_case(cfg: &RunConfig) -> Result<GridModel, String> {
    let mut grid = match cases::bundled(&cfg.case) {
        Some(text) => parse_matpower(text, cfg.gamma).map_err(|e| e.to_string())?,
        None => {
            let mut g = load_matpower(&cfg.case).map_err(|e| {
                format!(
                    "case `{}` is neither bundled ({}) nor a readable MATPOWER file: {e}",
                    cfg.case,
                    cases::bundled_names().join(", ")
                )
            })?;
            g.set_uniform_gamma(cfg.gamma);
            g
        }
    };
    for &(row, gamma) in &cfg.gamma_overrides {
        let e = grid
            .line_by_source_row(row)
            .ok_or_else(|| format!("gamma override: no branch row {row}"))?;
        grid.set_line_gamma(e, gamma);
    }
    Ok(grid)
}

pub fn params_from(cfg: &RunConfig, grid: &GridModel) -> Result<AttackParams, String> {
    let mask = match &cfg.placement_mask {
        None => None,
        Some(ids) => {
            let mut mask = vec![false; grid.n_buses()];
            for &id in ids {
                let u = grid
                    .bus_index(id)
                    .ok_or_else(|| format!("mask: unknown bus id {id}"))?;
                mask[u] = true;
            }
            Some(mask)
        }
    };
    let params = AttackParams {
        alpha: cfg.alpha,
        xi_p: cfg.xi_p,
        xi_c: cfg.xi_c,
        sced_mode: cfg.sced,
        load_range: cfg.load_range.as_ref().map(|s| s.to_boxes(grid)),
        placement_mask: mask,
    };
    params.validate(grid).map_err(|e| e.to_string())?;
    Ok(params)
}

fn emit(report: &Report) -> ExitCode {
    let json = report.to_json();
    match &report.config.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &json) {
                eprintln!("cannot write report to {path}: {e}");
                return ExitCode::from(2);
            }
            println!("report written to {path}");
        }
        None => println!("{json}"),
    }
    ExitCode::SUCCESS
}

fn fail(mut report: Report, msg: String, code: u8) -> ExitCode {
    report.error = Some(msg.clone());
    let _ = emit(&report);
    eprintln!("error: {msg}");
    ExitCode::from(code)
}

fn placement_error_code(e: &PlacementError) -> u8 {
    match e {
        PlacementError::BudgetExhausted => 3,
        PlacementError::ScedInfeasible | PlacementError::MasterInfeasible(_) => 2,
        _ => 4,
    }
}

pub fn execute(cfg: RunConfig, action: Action) -> ExitCode {
    let start = Instant::now();
    let mut report = Report::new(cfg.clone());
    let grid = match load_case(&cfg) {
        Ok(g) => g,
        Err(e) => return fail(report, e, 2),
    };
    let params = match params_from(&cfg, &grid) {
        Ok(p) => p,
        Err(e) => return fail(report, e, 2),
    };

    match action {
        Action::Place => {
            let bigm = compute_bigm(&grid, &params);
            let budget = SolveBudget::new(cfg.budget_s);
            let outcome = match cfg.algorithm {
                Algorithm::Aong => aong(&grid, &params, &bigm, &budget),
                Algorithm::Aodc => aodc(&grid, &params, &bigm, &budget),
                Algorithm::Heuristic => {
                    let knobs = HeuristicKnobs {
                        kc: cfg.kc,
                        ka: cfg.ka,
                        kl: cfg.kl,
                        seed: cfg.seed,
                    };
                    heuristic_place(&grid, &params, &bigm, &knobs, &budget)
                }
                Algorithm::GreedyDegree => greedy_degree(&grid, &params, &bigm, &budget),
                Algorithm::FullObservability => {
                    let pins: Vec<usize> = Vec::new();
                    full_observability(&grid, &pins).map(|placement| {
                        ppop_core::placement::PlacementOutcome {
                            placement,
                            optimal: true,
                            verified: false, // verified below like every other run
                            trace: Default::default(),
                        }
                    })
                }
            };
            let outcome = match outcome {
                Ok(o) => o,
                Err(e) => {
                    let code = placement_error_code(&e);
                    return fail(report, e.to_string(), code);
                }
            };
            // Independent re-verification before reporting success.
            let verified = match verify_placement(&grid, &params, &bigm, &outcome.placement, &cfg)
            {
                Ok(v) => v,
                Err(e) => return fail(report, e, 4),
            };
            report.placement_bus_ids = Some(outcome.placement.bus_ids(&grid));
            report.pmu_count = Some(outcome.placement.count());
            report.verified = Some(verified);
            report.optimal = Some(outcome.optimal);
            report.trace = Some(outcome.trace);
            report.wall_s = start.elapsed().as_secs_f64();
            if !verified {
                return fail(report, "placement failed re-verification".into(), 3);
            }
            emit(&report)
        }
        Action::Attack {
            placement,
            expect_safe,
        } => {
            let beta = match load_placement(&grid, placement.as_deref()) {
                Ok(b) => b,
                Err(e) => return fail(report, e, 2),
            };
            report.placement_bus_ids = Some(beta.bus_ids(&grid));
            report.pmu_count = Some(beta.count());
            let bigm = compute_bigm(&grid, &params);
            let out = solve_attacker_seeded(
                &grid,
                &params,
                &beta,
                &bigm,
                Some(cfg.budget_s),
                AttackGoal::MaxTrips,
                cfg.seed,
            );
            match out {
                Ok(SolveOutcome::NoAttack) => {
                    report.psi_a = Some(0);
                    report.verified = Some(true);
                    report.wall_s = start.elapsed().as_secs_f64();
                    emit(&report)
                }
                Ok(SolveOutcome::Attack(w)) => {
                    report.psi_a = Some(w.objective);
                    report.verified = Some(false);
                    report.witness = Some(WitnessReport::from_outcome(&grid, &w));
                    // Cascade outcome of the witness dispatch.
                    let dispatch = w.dispatch_t3(&grid);
                    report.cascade = Some(grid.cascade_simulate(&dispatch, &w.ap_set()));
                    report.wall_s = start.elapsed().as_secs_f64();
                    let code = emit(&report);
                    if expect_safe {
                        eprintln!("placement is vulnerable: psi_a = {}", w.objective);
                        ExitCode::from(1)
                    } else {
                        code
                    }
                }
                Err(e) => fail(report, e.to_string(), 4),
            }
        }
        Action::Cascade { lines } => {
            let mut ap = LineSet::new();
            for tok in lines.split(',') {
                let row: usize = match tok.trim().parse() {
                    Ok(r) => r,
                    Err(_) => return fail(report, format!("bad branch row `{tok}`"), 2),
                };
                match grid.line_by_source_row(row) {
                    Some(e) => {
                        ap.insert(e);
                    }
                    None => return fail(report, format!("no branch row {row}"), 2),
                }
            }
            report.cascade = Some(grid.cascade_simulate(grid.p0(), &ap));
            report.wall_s = start.elapsed().as_secs_f64();
            emit(&report)
        }
        Action::Bench { tier } => bench::run(report, &cfg, &tier, start),
    }
}

pub fn verify_placement(
    grid: &GridModel,
    params: &AttackParams,
    bigm: &BigMBundle,
    beta: &PmuPlacement,
    cfg: &RunConfig,
) -> Result<bool, String> {
    match solve_attacker_seeded(
        grid,
        params,
        beta,
        bigm,
        Some(cfg.budget_s),
        AttackGoal::FindAny,
        cfg.seed,
    ) {
        Ok(SolveOutcome::NoAttack) => Ok(true),
        Ok(SolveOutcome::Attack(_)) => Ok(false),
        Err(e) => Err(e.to_string()),
    }
}

fn load_placement(
    grid: &GridModel,
    path: Option<&std::path::Path>,
) -> Result<PmuPlacement, String> {
    match path {
        None => Ok(PmuPlacement::empty(grid.n_buses())),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
            let ids = parse_placement_file(&text)?;
            PmuPlacement::from_bus_ids(grid, &ids).map_err(|e| e.to_string())
        }
    }
}
