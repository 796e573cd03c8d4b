//! Lorenz system with uniform parameter marginals: which parameters are
//! robustly unimportant?
//!
//! cargo run --release --example lorenz_case1

use std::path::Path;

use robust_sobol::pipeline::{run, write_outputs};
use robust_sobol::RunConfig;

fn main() -> Result<(), robust_sobol::Error> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/configs/lorenz_case1.json");
    let config = RunConfig::load(&path)?;
    let out = run(&config)?;
    let names = config.model.variable_names();
    let (ea, er) = (out.report.extreme_abs(), out.report.extreme_rel());
    println!("{} boxes", out.prepared.basis.len());
    println!("{:>4}  {:>8}  {:>8}  {:>8}", "", "nominal", "abs", "rel");
    for (k, name) in names.iter().enumerate() {
        println!(
            "{name:>4}  {:>8.4}  {:>8.4}  {:>8.4}",
            out.report.nominal.t[k], ea.perturbed_t[k], er.perturbed_t[k]
        );
    }
    println!("abs: {} delta {:+.3}; rel: {} delta {:+.3}", ea.target().label(), ea.delta(), er.target().label(), er.delta());
    write_outputs(&out, &config.output_dir)?;
    println!("wrote {}", config.output_dir.display());
    Ok(())
}
