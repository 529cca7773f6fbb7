//! Scratch probe: exact solvers on the bundled 30-bus case.
use ppop_core::attack::AttackParams;
use ppop_core::bigm::compute_bigm;
use ppop_core::cases::load_bundled;
use ppop_core::placement::{aodc, aong, greedy_degree, SolveBudget};
use std::time::Instant;

fn main() {
    let alg = std::env::args().nth(1).unwrap_or_else(|| "aodc".into());
    let g = load_bundled("ieee30", 1.2).unwrap();
    let params = AttackParams::default_eval();
    let bm = compute_bigm(&g, &params);
    let budget = SolveBudget::new(1500.0);
    let t = Instant::now();
    let out = match alg.as_str() {
        "aodc" => aodc(&g, &params, &bm, &budget),
        "aong" => aong(&g, &params, &bm, &budget),
        "greedy" => greedy_degree(&g, &params, &bm, &budget),
        _ => panic!("alg?"),
    };
    match out {
        Ok(o) => println!(
            "{alg}: count={} buses={:?} optimal={} verified={} iters={} in {:?}",
            o.placement.count(),
            o.placement.bus_ids(&g),
            o.optimal,
            o.verified,
            o.trace.iterations.len(),
            t.elapsed()
        ),
        Err(e) => println!("{alg}: ERR {e} after {:?}", t.elapsed()),
    }
}
