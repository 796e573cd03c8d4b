//! Independent checks of the estimators against quadrature, analytic values
//! and derivative identities.

mod common;

use robust_sobol::densities::{Marginal, ProductDensity};
use robust_sobol::frechet::{derivative_table, optimal_direction, PerturbationBasis, Target};
use robust_sobol::models::{equicorrelated, linear_gaussian_total_indices};
use robust_sobol::partition::Partition;
use robust_sobol::pipeline::prepare;
use robust_sobol::reweight::perturbed_total_indices;
use robust_sobol::sobol::build_sample_set;
use robust_sobol::{ModelName, RunConfig};

use common::{centered_derivative, lorenz_case2, quadrature_total_indices_2d, spec};

#[test]
fn quadrature_matches_nominal_indices() {
    // delta = 0: plain total indices of an additive-plus-interaction model.
    let f = |x0: f64, x1: f64| x0 * x0 + x1 + 3.0 * x0 * x1;
    let density = ProductDensity::new(vec![
        Marginal::uniform(0.0, 2.0).unwrap(),
        Marginal::beta(2.0, 3.0, 0.0, 1.0).unwrap(),
    ])
    .unwrap();
    let model = move |x: &[f64]| f(x[0], x[1]);
    let s = build_sample_set(&density, &model, 60_000, 3).unwrap();
    let part = Partition::whole(density.support(), s.x0());
    let basis = PerturbationBasis::new(&s, part.clone(), &density).unwrap();
    let t = perturbed_total_indices(&s, &basis, &spec(vec![0.0], 0.0, basis.volumes())).unwrap();
    let q = quadrature_total_indices_2d(&f, &density, &part, &[0.0], 0.0, [&[], &[]], 30);
    for k in 0..2 {
        assert!((t[k] - q[k]).abs() < 0.02, "{k}: {} vs {}", t[k], q[k]);
    }
}

#[test]
fn quadrature_matches_perturbed_grid() {
    let f = |x0: f64, x1: f64| (3.0 * x0).sin() + x1 * x1;
    let density = ProductDensity::unit_cube(2);
    let model = move |x: &[f64]| f(x[0], x[1]);
    let s = build_sample_set(&density, &model, 80_000, 4).unwrap();
    let cuts = vec![vec![0.25, 0.5, 0.75], vec![0.5]];
    let part = Partition::from_grid(density.support(), &cuts, s.x0()).unwrap();
    let basis = PerturbationBasis::new(&s, part.clone(), &density).unwrap();
    assert_eq!(basis.len(), 8);
    let a: Vec<f64> = (0..8).map(|i| if i % 3 == 0 { -1.0 } else { 1.0 }).collect();
    for delta in [-0.6, 0.9] {
        let t = perturbed_total_indices(&s, &basis, &spec(a.clone(), delta, basis.volumes())).unwrap();
        let q = quadrature_total_indices_2d(&f, &density, &part, &a, delta, [&cuts[0], &cuts[1]], 24);
        for k in 0..2 {
            assert!((t[k] - q[k]).abs() < 0.02, "delta {delta}, {k}: {} vs {}", t[k], q[k]);
        }
    }
}

#[test]
fn finite_differences_match_centered_derivative() {
    let mut config = RunConfig::unit_cube(ModelName::Linear3, 4000);
    config.seed = 31;
    let prep = prepare(&config).unwrap();
    let (s, basis) = (&prep.samples, &prep.basis);
    let table = derivative_table(s, basis).unwrap();
    let floors = basis.effective_floors();
    let eps = 0.01;
    for target in [Target::TotalIndex(0), Target::TotalIndex(2), Target::NormalizedIndex(1)] {
        let dir = optimal_direction(target, table.row(target), &floors);
        let up = perturbed_total_indices(s, basis, &spec(dir.a.clone(), eps, basis.volumes())).unwrap();
        let dn = perturbed_total_indices(s, basis, &spec(dir.a.clone(), -eps, basis.volumes())).unwrap();
        for k in 0..3 {
            let fd = (up[k] - dn[k]) / (2.0 * eps);
            let exact = centered_derivative(s, basis, &dir.a, k, table.along(k, &dir.a), table.t_hat[k]);
            assert!((fd - exact).abs() <= 1e-3 * exact.abs().max(1e-3), "{target:?} {k}: {fd} vs {exact}");
        }
    }
}

#[test]
fn beta_marginal_tree_has_many_small_floors() {
    let prep = prepare(&lorenz_case2(4000, 3)).unwrap();
    let floors = prep.basis.floors();
    let max = floors.iter().cloned().fold(0.0, f64::max);
    // A zero floor counts as small even when every floor is zero.
    let small = floors.iter().filter(|b| **b < 0.1 * max || **b == 0.0).count();
    assert!(2 * small >= floors.len(), "{small} of {} floors small", floors.len());
}

#[test]
fn quantile_refinement_multiplies_boxes() {
    let mut config = lorenz_case2(4000, 3);
    config.min_leaf = 200;
    config.allowed_dims = Some(vec![1, 2, 3, 4, 5]);
    let coarse = prepare(&config).unwrap();
    config.quantile_refine = Some(robust_sobol::config::QuantileRefine { dim: 6, q: 4 });
    let fine = prepare(&config).unwrap();
    assert_eq!(fine.basis.len(), 4 * coarse.basis.len());
    // The alpha3 floors stay positive away from the upper end of its support.
    let positive = fine.basis.floors().iter().filter(|b| **b > 0.0).count();
    assert_eq!(positive, 3 * coarse.basis.len());
}

#[test]
fn gaussian_normalized_indices_ignore_correlation() {
    let c = [1.5, 1.25, 1.0];
    let t0 = linear_gaussian_total_indices(&c, &equicorrelated(3, 0.0)).unwrap();
    let expected = [36.0 / 77.0, 25.0 / 77.0, 16.0 / 77.0];
    for k in 0..3 {
        assert!((t0[k] - expected[k]).abs() < 1e-14);
    }
    let t9 = linear_gaussian_total_indices(&c, &equicorrelated(3, 0.9)).unwrap();
    for k in 0..3 {
        assert!(t9[k] < t0[k]);
        assert!((t9[k] / t9.sum() - expected[k]).abs() < 1e-12);
    }
}
