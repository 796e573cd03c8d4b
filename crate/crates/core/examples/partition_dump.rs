//! Regression-tree partition of the g-function samples: box bounds, counts,
//! density floors and estimated volumes.
//!
//! cargo run --release --example partition_dump -- [n] [L]

use robust_sobol::pipeline::prepare;
use robust_sobol::report::partition_csv;
use robust_sobol::{ModelName, RunConfig};

fn main() -> Result<(), robust_sobol::Error> {
    let mut args = std::env::args().skip(1);
    let n = args.next().and_then(|s| s.parse().ok()).unwrap_or(5000);
    let mut config = RunConfig::unit_cube(ModelName::Gfunction, n);
    config.min_leaf = args.next().and_then(|s| s.parse().ok()).unwrap_or(50);
    let prep = prepare(&config)?;
    let part = prep.basis.partition();

    let mut used = vec![0usize; prep.samples.p()];
    for rule in part.splits() {
        used[rule.dim] += 1;
    }
    println!("{} boxes from {n} samples (L = {})", part.len(), config.min_leaf);
    println!("splits per variable: {used:?}");
    let volume: f64 = prep.basis.volumes().iter().sum();
    println!("estimated volumes sum to {volume:.6}");
    print!("{}", partition_csv(&prep.basis));
    Ok(())
}
