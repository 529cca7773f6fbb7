//! Scratch probe for the bundled 30-bus case (not part of the test suite).
use ppop_core::attack::*;
use ppop_core::bigm::compute_bigm;
use ppop_core::cases::load_bundled;
use std::time::Instant;

fn main() {
    let g = load_bundled("ieee30", 1.2).unwrap();
    println!("case30: {} buses {} lines", g.n_buses(), g.n_lines());
    let params = AttackParams::default_eval();
    let t = Instant::now();
    let bm = compute_bigm(&g, &params);
    println!("bigm in {:?}; m2theta={:.3}", t.elapsed(), bm.m2theta);
    let t = Instant::now();
    let out = solve_attacker(
        &g,
        &params,
        &PmuPlacement::empty(g.n_buses()),
        &bm,
        Some(600.0),
        AttackGoal::MaxTrips,
    )
    .unwrap();
    println!("attacker(beta=0) in {:?}", t.elapsed());
    match out {
        SolveOutcome::Attack(w) => println!(
            "psi_a = {} ap={:?} targets={:?} meters={}",
            w.objective,
            w.ap.iter().map(|&e| g.line(e).source_rows[0]).collect::<Vec<_>>(),
            w.targets.iter().map(|&e| g.line(e).source_rows[0]).collect::<Vec<_>>(),
            w.meters_touched
        ),
        SolveOutcome::NoAttack => println!("NO ATTACK"),
    }
    // Golden placement {15, 23}
    let t = Instant::now();
    let beta = PmuPlacement::from_bus_ids(&g, &[15, 23]).unwrap();
    let out = solve_attacker(&g, &params, &beta, &bm, Some(600.0), AttackGoal::FindAny).unwrap();
    println!("attacker(beta={{15,23}}) in {:?}: attack={}", t.elapsed(), out.is_attack());
}
