//! Scratch probe for the reconstructed 57-bus case.
use ppop_core::attack::*;
use ppop_core::bigm::compute_bigm;
use ppop_core::cases::load_bundled;
use ppop_core::placement::*;
use std::time::Instant;

fn main() {
    let alg = std::env::args().nth(1).unwrap_or_else(|| "attack".into());
    let g = load_bundled("ieee57", 1.2).unwrap();
    println!("case57: {} buses {} lines", g.n_buses(), g.n_lines());
    let params = AttackParams::default_eval();
    let bm = compute_bigm(&g, &params);
    let t = Instant::now();
    match alg.as_str() {
        "attack" => {
            let out = solve_attacker(
                &g, &params, &PmuPlacement::empty(g.n_buses()), &bm,
                Some(900.0), AttackGoal::MaxTrips,
            );
            println!("attack(beta=0) in {:?}: {:?}", t.elapsed(),
                out.map(|o| o.attack().map(|w| (w.objective, w.ap.clone(), w.targets.clone()))));
            let t2 = Instant::now();
            let beta = PmuPlacement::from_bus_ids(&g, &[12, 13, 25]).unwrap();
            let out = solve_attacker(&g, &params, &beta, &bm, Some(900.0), AttackGoal::FindAny).unwrap();
            println!("attack(beta={{12,13,25}}) in {:?}: attack={}", t2.elapsed(), out.is_attack());
        }
        "aodc" => {
            let out = aodc(&g, &params, &bm, &SolveBudget::new(1800.0));
            report("aodc", &g, out, t);
        }
        "aong" => {
            let out = aong(&g, &params, &bm, &SolveBudget::new(1800.0));
            report("aong", &g, out, t);
        }
        "greedy" => {
            let out = greedy_degree(&g, &params, &bm, &SolveBudget::new(1800.0));
            report("greedy", &g, out, t);
        }
        "heuristic" => {
            let out = heuristic_place(&g, &params, &bm, &HeuristicKnobs::default(), &SolveBudget::new(1800.0));
            report("heuristic", &g, out, t);
        }
        _ => panic!("alg?"),
    }
}

fn report(alg: &str, g: &ppop_core::grid::GridModel, out: Result<PlacementOutcome, PlacementError>, t: Instant) {
    match out {
        Ok(o) => println!(
            "{alg}: count={} buses={:?} optimal={} verified={} iters={} in {:?}",
            o.placement.count(), o.placement.bus_ids(g), o.optimal, o.verified,
            o.trace.iterations.len(), t.elapsed()
        ),
        Err(e) => println!("{alg}: ERR {e} after {:?}", t.elapsed()),
    }
}
