//! Sampling variability of T1 for the g-function, nominal and perturbed
//! along its own optimal direction at delta = -0.33 and +0.33.
//!
//! cargo run --release --example gfunction_convergence -- [reps]

use robust_sobol::frechet::{derivative_table, optimal_direction, Target};
use robust_sobol::numerics::sample_std;
use robust_sobol::pipeline::prepare;
use robust_sobol::reweight::{perturbed_total_indices, PerturbedDensitySpec};
use robust_sobol::{ModelName, RunConfig};

fn quartiles(v: &mut [f64]) -> (f64, f64, f64) {
    v.sort_by(f64::total_cmp);
    let q = |p: f64| v[((v.len() - 1) as f64 * p).round() as usize];
    (q(0.25), q(0.5), q(0.75))
}

fn main() -> Result<(), robust_sobol::Error> {
    let reps: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(32);
    println!("{:>6}  {:>24}  {:>24}  {:>24}  {:>8}", "n", "delta=-0.33 (q1 med q3)", "nominal", "delta=+0.33", "std");
    for n in [1000, 5000, 10_000, 50_000] {
        let mut cols = [Vec::new(), Vec::new(), Vec::new()];
        for rep in 0..reps {
            let mut config = RunConfig::unit_cube(ModelName::Gfunction, n);
            config.seed = 500 + rep;
            let prep = prepare(&config)?;
            let (s, basis) = (&prep.samples, &prep.basis);
            let table = derivative_table(s, basis)?;
            let target = Target::TotalIndex(0);
            let dir = optimal_direction(target, table.row(target), &basis.effective_floors());
            cols[1].push(table.t_hat[0]);
            for (slot, delta) in [(0, -0.33), (2, 0.33)] {
                let spec = PerturbedDensitySpec::new(dir.clone(), delta, basis.volumes())?;
                cols[slot].push(perturbed_total_indices(s, basis, &spec)?[0]);
            }
        }
        let spread = sample_std(&cols[1]);
        let fmt = |v: &mut Vec<f64>| {
            let (a, b, c) = quartiles(v);
            format!("{a:.3} {b:.3} {c:.3}")
        };
        let [mut lo, mut mid, mut hi] = cols;
        println!("{n:>6}  {:>24}  {:>24}  {:>24}  {spread:>8.4}", fmt(&mut lo), fmt(&mut mid), fmt(&mut hi));
    }
    let analytic = robust_sobol::GFunction::standard().analytic_total_indices();
    println!("analytic T1 = {:.4}", analytic[0]);
    Ok(())
}
