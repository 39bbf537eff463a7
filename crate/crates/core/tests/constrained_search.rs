use ke_lab_core::constrained_search::{minimize_ts, objective_gradient_check, SearchConfig};
use ke_lab_core::functionals::t_s_gradient_form;
use ke_lab_core::model_densities::{sample_density, DensityField, DensityModel};
use ke_lab_core::scaling::{scale_density, scale_orbitals, ScalingParams};
use ke_lab_core::Error;

fn gaussian_1d(points: usize) -> DensityField {
    let model = DensityModel::gaussian(1.0, 1.0).unwrap();
    sample_density(&model, &model.default_grid(1, points).unwrap()).unwrap()
}

// (1/2) ∫ (d sqrt(n)/dx)^2 with the grid's own stencil and weights.
fn vw_reference(n: &DensityField) -> f64 {
    let grid = n.grid();
    let root: Vec<f64> = n.values().iter().map(|v| v.sqrt()).collect();
    let d = grid.derivative(&root, 0);
    0.5 * grid.quadrature(|i| d[i] * d[i])
}

#[test]
fn single_orbital_reaches_von_weizsacker_bound() {
    let n = gaussian_1d(64);
    let result = minimize_ts(&n, &SearchConfig::default()).unwrap();
    let reference = vw_reference(&n);
    assert!(result.converged);
    assert!(
        result.density_residual <= 1e-4,
        "{}",
        result.density_residual
    );
    assert!(
        (result.energy - reference).abs() <= 1e-6 * reference,
        "{} vs {reference}",
        result.energy
    );
    assert!(result.energy >= reference - 1e-8);
}

#[test]
fn reference_agrees_with_orbital_gradient_form() {
    let n = gaussian_1d(64);
    let phi = ke_lab_core::functionals::OrbitalSet::single_from_density(&n, 1.0).unwrap();
    let t = t_s_gradient_form(&phi).unwrap().value;
    assert!((t - vw_reference(&n)).abs() < 1e-12);
}

#[test]
fn objective_gradient_matches_finite_differences() {
    let n = gaussian_1d(64);
    for orbitals in [1, 2] {
        let cfg = SearchConfig {
            orbital_count: orbitals,
            seed: Some(5),
            ..Default::default()
        };
        let dev = objective_gradient_check(&n, &cfg, 1e-5).unwrap();
        assert!(dev <= 1e-5, "{orbitals} orbitals: {dev}");
    }
}

#[test]
fn residual_shrinks_along_penalty_ladder() {
    let n = gaussian_1d(64);
    let residuals: Vec<f64> = [1e2, 1e3, 1e4]
        .iter()
        .map(|&lambda| {
            let cfg = SearchConfig {
                penalty_weight: lambda,
                multiplier_updates: 0,
                ..Default::default()
            };
            minimize_ts(&n, &cfg).unwrap().density_residual
        })
        .collect();
    assert!(residuals.windows(2).all(|w| w[1] < w[0]), "{residuals:?}");
}

#[test]
fn seeded_restart_finds_same_minimum() {
    let n = gaussian_1d(64);
    let a = minimize_ts(&n, &SearchConfig::default()).unwrap();
    let cfg = SearchConfig {
        seed: Some(17),
        ..Default::default()
    };
    let b = minimize_ts(&n, &cfg).unwrap();
    assert!((a.energy - b.energy).abs() < 1e-7 * a.energy);
    let again = minimize_ts(&n, &cfg).unwrap();
    assert_eq!(b.energy.to_bits(), again.energy.to_bits());
}

#[test]
fn converged_orbitals_scale_with_kinetic_law() {
    let n = gaussian_1d(64);
    let result = minimize_ts(&n, &SearchConfig::default()).unwrap();
    let phi = result.orbital_set().unwrap();
    let base = t_s_gradient_form(&phi).unwrap().value;
    for (alpha, beta, m, p) in [
        (2.0, 1.0, 1.0, 0.0),
        (0.5, 2.0, 2.0, 1.0),
        (2.0, 0.5, -1.0, 0.5),
    ] {
        let s = ScalingParams::new(alpha, beta, m, p).unwrap();
        let scaled = scale_orbitals(&phi, &s).unwrap();
        let ratio = t_s_gradient_form(&scaled).unwrap().value / base;
        assert!((ratio / s.kinetic_factor_in(1) - 1.0).abs() <= 1e-12);
        let induced = scaled.induced_density().unwrap();
        let direct = scale_density(&phi.induced_density().unwrap(), &s).unwrap();
        assert_eq!(induced.values(), direct.values());
    }
}

#[test]
fn two_orbitals_share_the_density() {
    let n = gaussian_1d(64);
    let cfg = SearchConfig {
        orbital_count: 2,
        max_iterations: 2_000,
        ..Default::default()
    };
    let best = match minimize_ts(&n, &cfg) {
        Ok(r) => r,
        Err(Error::NotConverged(best)) => *best,
        Err(e) => panic!("{e}"),
    };
    assert!(best.energy > vw_reference(&n));
    best.orbital_set().unwrap().check_invariants().unwrap();
}

#[test]
fn rejects_vanishing_target() {
    let model = DensityModel::gaussian(1.0, 1.0).unwrap();
    let grid = ke_lab_core::grid::Grid::open_cube(1, 64, 40.0).unwrap();
    let n = sample_density(&model, &grid).unwrap();
    assert!(matches!(
        minimize_ts(&n, &SearchConfig::default()),
        Err(Error::NonPositiveTarget { .. })
    ));
}
