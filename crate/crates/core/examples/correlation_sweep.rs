//! Linear model with equicorrelated Gaussian inputs: total indices shrink
//! as correlation grows, normalized indices do not move.
//!
//! cargo run --example correlation_sweep

use robust_sobol::models::{equicorrelated, linear_gaussian_total_indices};
use robust_sobol::sobol::normalized_indices;

fn main() -> Result<(), robust_sobol::Error> {
    let c = [1.5, 1.25, 1.0];
    println!("{:>5}  {:>26}  {:>26}", "rho", "T", "N");
    for step in 0..10 {
        let rho = step as f64 / 10.0;
        let t = linear_gaussian_total_indices(&c, &equicorrelated(3, rho))?;
        let n = normalized_indices(&t)?;
        println!("{rho:>5.1}  {:>26}  {:>26}", format!("{:.4?}", t.values()), format!("{:.4?}", n.values()));
    }
    Ok(())
}
