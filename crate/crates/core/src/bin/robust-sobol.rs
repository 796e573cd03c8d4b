use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use robust_sobol::pipeline::{partition_dump, run, write_outputs, write_scan};
use robust_sobol::{Error, RunConfig, Target};

#[derive(Parser)]
#[command(name = "robust-sobol", version, about = "Total Sobol' indices with density-perturbation robustness analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (results do not depend on this).
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory (overrides `output_dir`).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Full pipeline: writes report.json, report.csv, bars.svg, histogram.csv, partition.csv.
    Run(Common),
    /// δ-scan of a single optimal direction; writes scan.csv.
    DeltaScan {
        #[command(flatten)]
        common: Common,
        /// Target such as T1 (total index of variable 1) or N2 (normalized index of variable 2).
        #[arg(long, default_value = "T1")]
        target: String,
    },
    /// Stops after partitioning; writes partition.csv.
    PartitionDump(Common),
}

fn setup(common: &Common) -> Result<(RunConfig, PathBuf), Error> {
    if let Some(threads) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    }
    let mut config = RunConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    let out = common.out.clone().unwrap_or_else(|| config.output_dir.clone());
    Ok((config, out))
}

fn main_inner(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run(common) => {
            let (config, out) = setup(&common)?;
            let result = run(&config)?;
            write_outputs(&result, &out)?;
            let doc = &result.doc;
            println!("nominal T: {:?}", doc.nominal.t);
            println!(
                "extreme abs ({}, delta {}): {:?}",
                doc.extremes.abs.target.label(),
                doc.extremes.abs.delta,
                doc.extremes.abs.perturbed_t
            );
            println!(
                "extreme rel ({}, delta {}): {:?}",
                doc.extremes.rel.target.label(),
                doc.extremes.rel.delta,
                doc.extremes.rel.perturbed_t
            );
            println!("wrote {}", out.display());
        }
        Command::DeltaScan { common, target } => {
            let (config, out) = setup(&common)?;
            let target = Target::parse(&target)?;
            let scan = write_scan(&config, target, &out)?;
            println!(
                "{}: best delta {} (t = {}, abs {}, rel {}{})",
                target.label(),
                scan.best.delta(),
                scan.best.t,
                scan.best.abs_change,
                scan.best.rel_change,
                if scan.best.degenerate { ", degenerate" } else { "" }
            );
            println!("wrote {}", out.join("scan.csv").display());
        }
        Command::PartitionDump(common) => {
            let (config, out) = setup(&common)?;
            let prepared = partition_dump(&config, &out)?;
            println!("{} boxes", prepared.basis.len());
            println!("wrote {}", out.join("partition.csv").display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match main_inner(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
