//! Bundled test systems and synthetic fixtures.
//!
//! The IEEE case files are reconstructions of the classic test systems in
//! MATPOWER format; see `cases/README` next to them for provenance and for
//! the rule used to fill in thermal ratings where the originals carry none.
//! The 300-bus system is not bundled; passing a MATPOWER file path to the
//! CLI covers systems beyond the bundled set.

use crate::grid::{parse_matpower, GridError, GridModel};

pub const CASE30_M: &str = include_str!("../cases/case30.m");
pub const CASE57_M: &str = include_str!("../cases/case57.m");
pub const CASE118_M: &str = include_str!("../cases/case118.m");
pub const TRIANGLE3_M: &str = include_str!("../cases/triangle3.m");

/// Case text by short name, e.g. `ieee30`, `case57`, `triangle3`.
pub fn bundled(name: &str) -> Option<&'static str> {
    match name.trim().to_ascii_lowercase().as_str() {
        "ieee30" | "case30" | "30" => Some(CASE30_M),
        "ieee57" | "case57" | "57" => Some(CASE57_M),
        "ieee118" | "case118" | "118" => Some(CASE118_M),
        "triangle3" | "triangle" => Some(TRIANGLE3_M),
        _ => None,
    }
}

pub fn bundled_names() -> &'static [&'static str] {
    &["ieee30", "ieee57", "ieee118", "triangle3"]
}

pub fn load_bundled(name: &str, gamma: f64) -> Result<GridModel, GridError> {
    let text = bundled(name)
        .ok_or_else(|| GridError::Parse(format!("no bundled case named `{name}`")))?;
    parse_matpower(text, gamma)
}

/// Three buses in a cycle, r = 1 and f_max = 1 everywhere, generation 1 p.u.
/// at bus 1 against a 1 p.u. load at bus 3.
pub fn triangle3() -> GridModel {
    triangle3_with_limits(1.0, 1.2)
}

pub fn triangle3_with_limits(f_max: f64, gamma: f64) -> GridModel {
    GridModel::new(
        vec![1, 2, 3],
        vec![
            (1, 2, 1.0, f_max, gamma),
            (1, 3, 1.0, f_max, gamma),
            (2, 3, 1.0, f_max, gamma),
        ],
        vec![(1, 0.0, 2.0, Some(1.0))],
        vec![1.0, 0.0, -1.0],
        1,
    )
    .expect("triangle fixture")
}

/// Five-bus ring with a chord; small enough for exhaustive placement and
/// attack enumeration in the property suite.
pub fn ring5() -> GridModel {
    ring5_with_limits(0.9, 1.2)
}

pub fn ring5_with_limits(f_max: f64, gamma: f64) -> GridModel {
    GridModel::new(
        vec![1, 2, 3, 4, 5],
        vec![
            (1, 2, 1.0, f_max, gamma),
            (2, 3, 0.8, f_max, gamma),
            (3, 4, 1.2, f_max, gamma),
            (4, 5, 1.0, f_max, gamma),
            (5, 1, 0.9, f_max, gamma),
            (2, 5, 1.1, f_max, gamma),
        ],
        vec![(1, 0.0, 1.5, Some(1.0)), (2, 0.0, 0.5, Some(2.0))],
        vec![0.9, 0.0, -0.5, -0.4, 0.0],
        1,
    )
    .expect("ring fixture")
}

/// Chain u0 - a - b used by the path-bound examples.
pub fn chain3(r1: f64, r2: f64, f_max: f64) -> GridModel {
    GridModel::new(
        vec![1, 2, 3],
        vec![(1, 2, r1, f_max, 1.2), (2, 3, r2, f_max, 1.2)],
        vec![(1, 0.0, 1.0, None)],
        vec![0.5, 0.0, -0.5],
        1,
    )
    .expect("chain fixture")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle_matches_its_matpower_form() {
        let parsed = parse_matpower(TRIANGLE3_M, 1.2).unwrap();
        let built = triangle3();
        assert_eq!(parsed.n_buses(), built.n_buses());
        assert_eq!(parsed.n_lines(), built.n_lines());
        assert_eq!(parsed.p0(), built.p0());
        let sum: f64 = parsed.p0().iter().sum();
        assert!(sum.abs() < 1e-9);
    }

    #[test]
    fn ieee30_shape() {
        let g = load_bundled("ieee30", 1.2).unwrap();
        assert_eq!(g.n_buses(), 30);
        assert_eq!(g.n_lines(), 41);
        assert!(g.connected_without(&Default::default()));
    }

    #[test]
    fn unknown_bundle_is_none() {
        assert!(bundled("ieee300").is_none());
        assert!(load_bundled("ieee300", 1.2).is_err());
    }
}
