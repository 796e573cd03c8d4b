//! End-to-end runs: sample, evaluate, estimate, partition, perturb, report.

use std::path::Path;

use log::info;

use crate::config::RunConfig;
use crate::densities::ProductDensity;
use crate::error::{Error, Result, StageExt};
use crate::frechet::{derivative_table, optimal_direction, PerturbationBasis, Target};
use crate::models::CountingModel;
use crate::partition::{fit_tree, refine_by_quantiles, Partition};
use crate::report::{derivatives_csv, partition_csv, write_file, ReportDoc};
use crate::reweight::{
    analyze, delta_scan, AnalysisOptions, Nominal, ReweightContext, RobustnessReport, ScanResult,
};
use crate::sobol::{build_sample_set, SampleSet, Subsamples};

/// Samples, evaluations and partition geometry for a config.
pub struct Prepared {
    pub density: ProductDensity,
    pub samples: SampleSet,
    pub basis: PerturbationBasis,
    pub evaluations: usize,
}

fn build_partition(config: &RunConfig, s: &SampleSet, density: &ProductDensity) -> Result<Partition> {
    let mut part = fit_tree(s.x0(), s.f0(), &density.support(), config.min_leaf, &config.split_dims())?;
    if let Some(refine) = config.quantile_refine {
        part = refine_by_quantiles(&part, s.x0(), refine.dim - 1, refine.q)?;
    }
    Ok(part)
}

/// Runs the sampling, evaluation and partition stages.
pub fn prepare(config: &RunConfig) -> Result<Prepared> {
    config.validate()?;
    let density = config.density().stage("density")?;
    let model = config.model.build();
    let counter = CountingModel::new(model.as_ref());
    let samples = build_sample_set(&density, &counter, config.n, config.seed).stage("evaluation")?;
    let evaluations = counter.count();
    let expected = config.n * (density.dim() + 1);
    if evaluations != expected {
        return Err(Error::InvalidArgument(format!(
            "made {evaluations} model evaluations, expected {expected}"
        )))
        .stage("evaluation");
    }
    info!("evaluated {evaluations} points");
    let part = build_partition(config, &samples, &density).stage("partition")?;
    info!("partition has {} boxes", part.len());
    let basis = PerturbationBasis::new(&samples, part, &density).stage("partition")?;
    Ok(Prepared {
        density,
        samples,
        basis,
        evaluations,
    })
}

fn options(config: &RunConfig) -> AnalysisOptions {
    AnalysisOptions {
        r: config.r,
        tau: config.tau,
        reps: config.reps,
        seed: config.seed,
    }
}

/// Result of a full run.
pub struct RunOutput {
    pub prepared: Prepared,
    pub report: RobustnessReport,
    pub doc: ReportDoc,
}

/// Full pipeline, without writing anything.
pub fn run(config: &RunConfig) -> Result<RunOutput> {
    let prepared = prepare(config)?;
    let report = analyze(&prepared.samples, &prepared.basis, options(config)).stage("robustness")?;
    let doc = ReportDoc::new(config, prepared.evaluations, &prepared.basis, &report);
    Ok(RunOutput {
        prepared,
        report,
        doc,
    })
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Writes every output file of a run into `dir`.
pub fn write_outputs(out: &RunOutput, dir: &Path) -> Result<()> {
    ensure_dir(dir)?;
    write_file(dir, "report.json", &out.doc.to_json()?)?;
    write_file(dir, "report.csv", &out.doc.to_csv())?;
    write_file(dir, "histogram.csv", &out.doc.histogram_csv())?;
    write_file(dir, "partition.csv", &partition_csv(&out.prepared.basis))?;
    write_file(dir, "derivatives.csv", &derivatives_csv(&out.report))?;
    out.doc.bar_chart().write(&dir.join("bars.svg"))
}

/// Runs through the partition stage and writes `partition.csv`.
pub fn partition_dump(config: &RunConfig, dir: &Path) -> Result<Prepared> {
    let prepared = prepare(config)?;
    ensure_dir(dir)?;
    write_file(dir, "partition.csv", &partition_csv(&prepared.basis))?;
    Ok(prepared)
}

/// Every grid point of the δ-scan for one target's optimal direction.
pub fn scan_target(config: &RunConfig, target: Target) -> Result<ScanResult> {
    let prepared = prepare(config)?;
    if target.variable() >= prepared.samples.p() {
        return Err(Error::Index {
            index: target.variable() + 1,
            dim: prepared.samples.p(),
        });
    }
    let (s, basis) = (&prepared.samples, &prepared.basis);
    let subsamples = Subsamples::new(s.n(), config.reps, config.seed)?;
    let nominal = Nominal::compute(s, &subsamples).stage("nominal")?;
    let table = derivative_table(s, basis).stage("derivatives")?;
    let direction = optimal_direction(target, table.row(target), &basis.effective_floors());
    let ctx = ReweightContext {
        samples: s,
        basis,
        nominal: &nominal,
        subsamples: &subsamples,
    };
    delta_scan(&ctx, &direction, config.r, config.tau).stage("delta scan")
}

/// CSV of a δ-scan, one row per grid point.
pub fn scan_csv(scan: &ScanResult) -> String {
    use std::fmt::Write as _;
    let p = scan.best.perturbed_t.len();
    let mut out = String::from("delta,normalizer,t,admissible,abs_change,rel_change");
    for k in 1..=p {
        let _ = write!(out, ",T_{k}");
    }
    for k in 1..=p {
        let _ = write!(out, ",N_{k}");
    }
    out.push_str(",selected,failure\n");
    for c in &scan.points {
        let _ = write!(
            out,
            "{},{},{},{},{},{}",
            c.delta(),
            c.spec.normalizer,
            c.t,
            c.admissible,
            c.abs_change,
            c.rel_change
        );
        for v in c.perturbed_t.values().iter().chain(c.perturbed_n.values()) {
            let _ = write!(out, ",{v}");
        }
        let selected = c.delta() == scan.best.delta() && c.failure.is_none();
        let failure = c.failure.as_deref().unwrap_or("").replace(',', ";");
        let _ = writeln!(out, ",{selected},{failure}");
    }
    out
}

/// Runs the scan for `target` and writes `scan.csv` into `dir`.
pub fn write_scan(config: &RunConfig, target: Target, dir: &Path) -> Result<ScanResult> {
    let scan = scan_target(config, target)?;
    ensure_dir(dir)?;
    write_file(dir, "scan.csv", &scan_csv(&scan))?;
    Ok(scan)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ModelName;

    #[test]
    fn evaluations_are_counted() {
        let config = RunConfig::unit_cube(ModelName::Linear3, 400);
        let prepared = prepare(&config).unwrap();
        assert_eq!(prepared.evaluations, 400 * 4);
    }

    #[test]
    fn small_run_writes_everything() {
        let mut config = RunConfig::unit_cube(ModelName::Linear3, 600);
        config.r = 6;
        config.reps = 10;
        let out = run(&config).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_outputs(&out, dir.path()).unwrap();
        for f in ["report.json", "report.csv", "histogram.csv", "partition.csv", "derivatives.csv", "bars.svg"] {
            assert!(dir.path().join(f).exists(), "{f}");
        }
        assert_eq!(out.doc.candidates.len(), 6);
    }
}
