//! Scratch probe: alpha sweep and heuristic on the bundled cases.
use ppop_core::attack::AttackParams;
use ppop_core::bigm::compute_bigm;
use ppop_core::cases::load_bundled;
use ppop_core::placement::*;
use std::time::Instant;

fn main() {
    let what = std::env::args().nth(1).unwrap_or_else(|| "alpha30".into());
    match what.as_str() {
        "alpha30" => {
            let g = load_bundled("ieee30", 1.2).unwrap();
            for alpha in [0.01, 0.10, 0.25, 0.50] {
                let params = AttackParams { alpha, ..AttackParams::default_eval() };
                let bm = compute_bigm(&g, &params);
                let t = Instant::now();
                match aodc(&g, &params, &bm, &SolveBudget::new(1800.0)) {
                    Ok(o) => println!("alpha={alpha}: count={} buses={:?} in {:?}", o.placement.count(), o.placement.bus_ids(&g), t.elapsed()),
                    Err(e) => println!("alpha={alpha}: ERR {e} in {:?}", t.elapsed()),
                }
            }
        }
        "heur" => {
            for case in ["ieee30", "ieee57"] {
                let g = load_bundled(case, 1.2).unwrap();
                let params = AttackParams::default_eval();
                let bm = compute_bigm(&g, &params);
                let t = Instant::now();
                match heuristic_place(&g, &params, &bm, &HeuristicKnobs::default(), &SolveBudget::new(1800.0)) {
                    Ok(o) => println!("heuristic {case}: count={} buses={:?} verified={} in {:?}", o.placement.count(), o.placement.bus_ids(&g), o.verified, t.elapsed()),
                    Err(e) => println!("heuristic {case}: ERR {e} in {:?}", t.elapsed()),
                }
            }
        }
        "greedy57" => {
            let g = load_bundled("ieee57", 1.2).unwrap();
            let params = AttackParams::default_eval();
            let bm = compute_bigm(&g, &params);
            let t = Instant::now();
            match greedy_degree(&g, &params, &bm, &SolveBudget::new(1800.0)) {
                Ok(o) => println!("greedy ieee57: count={} buses={:?} in {:?}", o.placement.count(), o.placement.bus_ids(&g), t.elapsed()),
                Err(e) => println!("greedy ieee57: ERR {e} in {:?}", t.elapsed()),
            }
        }
        "aong57" => {
            let g = load_bundled("ieee57", 1.2).unwrap();
            let params = AttackParams::default_eval();
            let bm = compute_bigm(&g, &params);
            let t = Instant::now();
            match aong(&g, &params, &bm, &SolveBudget::new(1800.0)) {
                Ok(o) => println!("aong ieee57: count={} buses={:?} iters={} in {:?}", o.placement.count(), o.placement.bus_ids(&g), o.trace.iterations.len(), t.elapsed()),
                Err(e) => println!("aong ieee57: ERR {e} in {:?}", t.elapsed()),
            }
        }
        _ => panic!(),
    }
}
