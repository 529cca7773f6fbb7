//! Construction of the cyber-attack vector that masks a physical attack:
//! the measurement perturbation steering the state estimate to theta2~
//! while the true grid sits at state2, leaving the bad-data residual at its
//! pre-attack value (exactly zero under noise-free measurements).

use crate::grid::{DcState, GridModel, MeterLayout};

/// a_c = z0 - z2 + H~ (theta2~ - theta0), evaluated meter by meter. z0 is
/// the pre-attack measurement of theta0 on the intact topology, z2 the true
/// post-attack measurement of state2.
pub fn construct_cyber_vector(
    grid: &GridModel,
    meters: &MeterLayout,
    theta0: &[f64],
    theta2_tilde: &[f64],
    state2: &DcState,
) -> Vec<f64> {
    let intact = crate::grid::LineSet::new();
    let state0 = DcState {
        theta: theta0.to_vec(),
        flows: grid
            .lines()
            .iter()
            .map(|l| (theta0[l.from] - theta0[l.to]) / l.reactance)
            .collect(),
        outages: intact,
    };
    let z0 = meters.measure(grid, &state0);
    let z2 = meters.measure(grid, state2);
    // H~ (theta2~ - theta0): intact-topology measurement of the difference.
    let diff: Vec<f64> = theta2_tilde
        .iter()
        .zip(theta0)
        .map(|(a, b)| a - b)
        .collect();
    let state_diff = DcState {
        flows: grid
            .lines()
            .iter()
            .map(|l| (diff[l.from] - diff[l.to]) / l.reactance)
            .collect(),
        theta: diff,
        outages: crate::grid::LineSet::new(),
    };
    let h_diff = meters.measure(grid, &state_diff);
    z0.iter()
        .zip(&z2)
        .zip(&h_diff)
        .map(|((a, b), c)| a - b + c)
        .collect()
}

/// Residual of the falsified measurements against the intact-topology model
/// at theta2~; zero (up to float noise) for a correctly constructed vector.
pub fn residual_norm(
    grid: &GridModel,
    meters: &MeterLayout,
    a_c: &[f64],
    theta2_tilde: &[f64],
    state2: &DcState,
) -> f64 {
    let z2 = meters.measure(grid, state2);
    let believed = DcState {
        theta: theta2_tilde.to_vec(),
        flows: grid
            .lines()
            .iter()
            .map(|l| (theta2_tilde[l.from] - theta2_tilde[l.to]) / l.reactance)
            .collect(),
        outages: crate::grid::LineSet::new(),
    };
    let h_theta = meters.measure(grid, &believed);
    z2.iter()
        .zip(a_c)
        .zip(&h_theta)
        .map(|((z, a), h)| (z + a - h) * (z + a - h))
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cases::triangle3;
    use crate::grid::LineSet;

    #[test]
    fn identity_case_needs_no_injection() {
        let g = triangle3();
        let meters = MeterLayout::full(&g);
        let st0 = g.dc_flow(g.p0(), &LineSet::new()).unwrap();
        let ac = construct_cyber_vector(&g, &meters, &st0.theta, &st0.theta.clone(), &st0);
        assert!(ac.iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn masking_touches_only_meters_near_the_cut_line() {
        // Physical attack on line 1-3 with the estimate pinned at theta0:
        // the vector must correct exactly the meters whose reading moved,
        // i.e. everything incident to the masked line.
        let g = triangle3();
        let meters = MeterLayout::full(&g);
        let st0 = g.dc_flow(g.p0(), &LineSet::new()).unwrap();
        let e13 = g.lines().iter().position(|l| l.from == 0 && l.to == 2).unwrap();
        let st2 = g.dc_flow(g.p0(), &LineSet::from([e13])).unwrap();
        let ac = construct_cyber_vector(&g, &meters, &st0.theta, &st0.theta.clone(), &st2);

        // Eq-oracle: a_c = H theta0 - H_post theta2 computed directly.
        let z_believed = meters.measure(&g, &st0);
        let z_true = meters.measure(&g, &st2);
        for (i, a) in ac.iter().enumerate() {
            let direct = z_believed[i] - z_true[i];
            assert!((a - direct).abs() < 1e-9, "component {i}");
        }
        // Every flow and injection in this 3-bus system changes when the
        // line drops, so all meters are touched; in particular the masked
        // line's own flow meter.
        assert!(ac[g.n_buses() + e13].abs() > 1e-9);
        assert_eq!(residual_norm(&g, &meters, &ac, &st0.theta, &st2) < 1e-9, true);
    }

    #[test]
    fn residual_vanishes_for_any_constructed_vector() {
        let g = triangle3();
        let meters = MeterLayout::full(&g);
        let st0 = g.dc_flow(g.p0(), &LineSet::new()).unwrap();
        // An arbitrary (consistent) falsified estimate.
        let theta_tilde = vec![0.0, -0.2, -0.5];
        let e12 = g.lines().iter().position(|l| l.from == 0 && l.to == 1).unwrap();
        let st2 = g.dc_flow(g.p0(), &LineSet::from([e12])).unwrap();
        let ac = construct_cyber_vector(&g, &meters, &st0.theta, &theta_tilde, &st2);
        assert!(residual_norm(&g, &meters, &ac, &theta_tilde, &st2) < 1e-9);
    }
}
