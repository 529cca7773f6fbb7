//! Minimum secured-PMU placement preventing coordinated cyber-physical
//! attacks from tripping transmission lines in a DC-modeled grid.
//!
//! The library is organized around the pieces of that problem:
//!
//! * [`grid`] — network model, MATPOWER ingestion, DC power-flow algebra,
//!   connectivity checks and cascade simulation;
//! * [`bigm`] — the big-M constants that make the attacker formulation a
//!   finite MILP;
//! * [`solver`] — a backend-neutral LP/MILP modeling layer (HiGHS behind it);
//! * [`attack`] — the attacker's MILP, fixed-pair LP feasibility, pair
//!   enumeration, cyber-vector construction and placement augmentation;
//! * [`placement`] — the defender: AONG and AODC constraint generation,
//!   the 3-phase heuristic, and baselines;
//! * [`report`] — serializable run reports and traces;
//! * [`cases`] — bundled test systems and synthetic fixtures.

pub mod attack;
pub mod bigm;
pub mod cases;
pub mod grid;
pub mod placement;
pub mod report;
pub mod solver;
