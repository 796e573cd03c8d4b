//! Perturbed densities, reweighted index estimates, the acceptance
//! statistic and the δ-scan.
//!
//! The perturbed density is `(phi + delta * sum_i a_i psi_i) / N`. Indices
//! under it are estimated from the existing evaluations with
//! self-normalized importance weights written as density ratios:
//!
//! ```text
//! r(x)      = 1 + delta a_box(x) / phi(x)
//! r_k(x)    = 1 + delta (int psi dx_k)(x) / (int phi dx_k)(x)
//! w_j       = r(x_j) / N
//! w_{k,j}   = r(x_j) r(x'_j) / (r_k(x_j) N)
//! ```
//!
//! At `delta = 0` every weight is exactly one, so the nominal estimates are
//! reproduced bit for bit.

use log::warn;
use rayon::prelude::*;

use crate::densities::ProductDensity;
use crate::error::{Error, Result};
use crate::frechet::{
    derivative_table, optimal_direction, DerivativeTable, PerturbationBasis,
    PerturbationDirection, Target,
};
use crate::numerics::pairwise_sum_by;
use crate::sobol::{
    component_std, estimate_on_rows, normalized_indices, IndexVector, RowWeights, SampleSet,
    Subsamples,
};

/// Nominal indices with their subsample standard deviations.
#[derive(Debug, Clone, PartialEq)]
pub struct Nominal {
    pub t: IndexVector,
    pub n: IndexVector,
    pub std: Vec<f64>,
}

impl Nominal {
    pub fn compute(s: &SampleSet, subsamples: &Subsamples) -> Result<Self> {
        let all: Vec<usize> = (0..s.n()).collect();
        let t = IndexVector(estimate_on_rows(s, &all, None)?);
        let n = normalized_indices(&t)?;
        let std = subsamples.std(|rows| estimate_on_rows(s, rows, None))?;
        Ok(Self { t, n, std })
    }
}

/// A perturbed density `(phi + delta sum_i a_i psi_i) / N`.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbedDensitySpec {
    pub direction: PerturbationDirection,
    pub delta: f64,
    pub normalizer: f64,
}

impl PerturbedDensitySpec {
    /// `volumes` are the box volume estimates used for `N`.
    pub fn new(direction: PerturbationDirection, delta: f64, volumes: &[f64]) -> Result<Self> {
        if !(-1.0..=1.0).contains(&delta) {
            return Err(Error::InvalidArgument(format!("delta {delta} outside [-1, 1]")));
        }
        if direction.a.len() != volumes.len() {
            return Err(Error::Dimension {
                expected: volumes.len(),
                got: direction.a.len(),
            });
        }
        let mass = pairwise_sum_by(volumes.len(), |i| direction.a[i] * volumes[i]);
        let normalizer = 1.0 + delta * mass;
        if !(normalizer > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "perturbation at delta {delta} has non-positive normalizer {normalizer}"
            )));
        }
        Ok(Self {
            direction,
            delta,
            normalizer,
        })
    }
}

/// Value of the perturbed density at `x`, which lies in box `box_index`.
pub fn perturbed_pdf_value(
    spec: &PerturbedDensitySpec,
    density: &ProductDensity,
    x: &[f64],
    box_index: usize,
) -> Result<f64> {
    let phi = density.pdf(x)?;
    let v = (phi + spec.delta * spec.direction.a[box_index]) / spec.normalizer;
    Ok(v.max(0.0))
}

/// Per-row density-ratio slopes of a direction; weights at any `delta` are
/// affine in these.
pub(crate) struct DirectionWeights {
    joint: Vec<f64>,
    pick: Vec<Vec<f64>>,
    line: Vec<Vec<f64>>,
}

impl DirectionWeights {
    pub(crate) fn new(s: &SampleSet, basis: &PerturbationBasis, a: &[f64]) -> Self {
        let n = s.n();
        let joint = (0..n).map(|j| a[basis.box_of_x0(j)] / s.phi0()[j]).collect();
        let (pick, line): (Vec<_>, Vec<_>) = (0..s.p())
            .into_par_iter()
            .map(|k| {
                let phik = s.phik(k);
                let pick = (0..n).map(|j| a[basis.box_of_xk(k, j)] / phik[j]).collect();
                let line = (0..n)
                    .map(|j| basis.line_integral(a, k, j) / basis.complement(k, j))
                    .collect();
                (pick, line)
            })
            .unzip();
        Self { joint, pick, line }
    }

    pub(crate) fn at(&self, delta: f64, normalizer: f64) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
        let ratio = |slope: f64| (1.0 + delta * slope).max(0.0);
        let r0: Vec<f64> = self.joint.iter().map(|&c| ratio(c)).collect();
        let denom = r0.iter().map(|r| r / normalizer).collect();
        let pairs = self
            .pick
            .iter()
            .zip(&self.line)
            .enumerate()
            .map(|(k, (pick, line))| {
                r0.iter()
                    .zip(pick.iter().zip(line))
                    .enumerate()
                    .map(|(j, (&r, (&pk, &lk)))| {
                        let num = r * ratio(pk);
                        let den = ratio(lk);
                        if den > 0.0 {
                            Ok(num / (den * normalizer))
                        } else if num == 0.0 {
                            Ok(0.0)
                        } else {
                            Err(Error::Weight { row: j, index: k })
                        }
                    })
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((denom, pairs))
    }
}

/// Everything the reweighted estimators share for one sample set.
pub struct ReweightContext<'a> {
    pub samples: &'a SampleSet,
    pub basis: &'a PerturbationBasis,
    pub nominal: &'a Nominal,
    pub subsamples: &'a Subsamples,
}

/// Total indices under the perturbed density.
pub fn perturbed_total_indices(
    s: &SampleSet,
    basis: &PerturbationBasis,
    spec: &PerturbedDensitySpec,
) -> Result<IndexVector> {
    let dw = DirectionWeights::new(s, basis, &spec.direction.a);
    let (denom, pairs) = dw.at(spec.delta, spec.normalizer)?;
    let all: Vec<usize> = (0..s.n()).collect();
    estimate_on_rows(s, &all, Some(&RowWeights { denom: &denom, pairs: &pairs })).map(IndexVector)
}

/// Indices that enter the acceptance statistic: those estimated well above
/// their noise level. Falls back to every positive index with positive
/// spread if none qualifies.
fn eligible_indices(nominal: &Nominal) -> Vec<usize> {
    let usable = |j: &usize| nominal.t[*j] > 0.0 && nominal.std[*j] > 0.0;
    let p = nominal.t.len();
    let strict: Vec<usize> = (0..p)
        .filter(usable)
        .filter(|&j| nominal.t[j] >= 10.0 * nominal.std[j])
        .collect();
    if strict.is_empty() {
        (0..p).filter(usable).collect()
    } else {
        strict
    }
}

fn ratio_statistic(nominal: &Nominal, perturbed: &[f64], perturbed_std: &[f64]) -> f64 {
    let eligible = eligible_indices(nominal);
    if eligible.is_empty() {
        return 1.0;
    }
    let mut t = f64::NEG_INFINITY;
    for j in eligible {
        if !(perturbed[j] > 0.0) {
            warn!("perturbed index {} is {}, left out of the acceptance statistic", j + 1, perturbed[j]);
            continue;
        }
        let r = (perturbed_std[j] / perturbed[j]) / (nominal.std[j] / nominal.t[j]);
        t = t.max(r);
    }
    if t == f64::NEG_INFINITY {
        f64::INFINITY
    } else {
        t
    }
}

/// Acceptance statistic `t = max_j (std~_j / T~_j) / (std_j / T_j)`, with
/// the perturbed spread computed on the nominal subsample row sets.
pub fn convergence_ratio(ctx: &ReweightContext<'_>, spec: &PerturbedDensitySpec) -> Result<f64> {
    let dw = DirectionWeights::new(ctx.samples, ctx.basis, &spec.direction.a);
    let (denom, pairs) = dw.at(spec.delta, spec.normalizer)?;
    let w = RowWeights { denom: &denom, pairs: &pairs };
    let all: Vec<usize> = (0..ctx.samples.n()).collect();
    let perturbed = estimate_on_rows(ctx.samples, &all, Some(&w))?;
    let std = ctx.subsamples.std(|rows| estimate_on_rows(ctx.samples, rows, Some(&w)))?;
    Ok(ratio_statistic(ctx.nominal, &perturbed, &std))
}

/// One evaluated point of a δ-scan.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationCandidate {
    pub spec: PerturbedDensitySpec,
    pub perturbed_t: IndexVector,
    pub perturbed_n: IndexVector,
    pub t: f64,
    pub admissible: bool,
    pub abs_change: f64,
    pub rel_change: f64,
    /// Set when no perturbation other than the identity was admissible.
    pub degenerate: bool,
    /// Why the reweighted estimate could not be formed, if it could not.
    pub failure: Option<String>,
}

impl PerturbationCandidate {
    pub fn target(&self) -> Target {
        self.spec.direction.target
    }

    pub fn delta(&self) -> f64 {
        self.spec.delta
    }

    /// The change metric matching the candidate's target.
    pub fn change(&self) -> f64 {
        if self.target().is_total() {
            self.abs_change
        } else {
            self.rel_change
        }
    }
}

fn failed_candidate(
    direction: &PerturbationDirection,
    delta: f64,
    p: usize,
    err: Error,
) -> PerturbationCandidate {
    PerturbationCandidate {
        spec: PerturbedDensitySpec {
            direction: direction.clone(),
            delta,
            normalizer: f64::NAN,
        },
        perturbed_t: IndexVector(vec![f64::NAN; p]),
        perturbed_n: IndexVector(vec![f64::NAN; p]),
        t: f64::INFINITY,
        admissible: false,
        abs_change: f64::NAN,
        rel_change: f64::NAN,
        degenerate: false,
        failure: Some(err.to_string()),
    }
}

fn evaluate_candidate(
    ctx: &ReweightContext<'_>,
    direction: &PerturbationDirection,
    dw: &DirectionWeights,
    delta: f64,
    tau: f64,
) -> PerturbationCandidate {
    let s = ctx.samples;
    let attempt = || -> Result<PerturbationCandidate> {
        let spec = PerturbedDensitySpec::new(direction.clone(), delta, ctx.basis.volumes())?;
        let (denom, pairs) = dw.at(delta, spec.normalizer)?;
        let w = RowWeights { denom: &denom, pairs: &pairs };
        let all: Vec<usize> = (0..s.n()).collect();
        let perturbed_t = IndexVector(estimate_on_rows(s, &all, Some(&w))?);
        let perturbed_n = normalized_indices(&perturbed_t)?;
        let t = match ctx.subsamples.replicates(|rows| estimate_on_rows(s, rows, Some(&w))) {
            Ok(reps) => ratio_statistic(ctx.nominal, &perturbed_t.0, &component_std(&reps)),
            Err(_) => f64::INFINITY,
        };
        let abs_change = pairwise_sum_by(s.p(), |k| (ctx.nominal.t[k] - perturbed_t[k]).abs());
        let rel_change = pairwise_sum_by(s.p(), |k| (ctx.nominal.n[k] - perturbed_n[k]).abs());
        Ok(PerturbationCandidate {
            spec,
            perturbed_t,
            perturbed_n,
            t,
            admissible: t <= tau,
            abs_change,
            rel_change,
            degenerate: false,
            failure: None,
        })
    };
    attempt().unwrap_or_else(|e| failed_candidate(direction, delta, s.p(), e))
}

/// All grid points of a scan plus the index of the selected one.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    pub points: Vec<PerturbationCandidate>,
    pub best: PerturbationCandidate,
}

/// `delta_l = -1 + 2 l / r` for `l = 0..=r`.
pub fn delta_grid(r: usize) -> Vec<f64> {
    (0..=r).map(|l| -1.0 + 2.0 * l as f64 / r as f64).collect()
}

/// Evaluates `direction` on the δ grid and keeps the admissible point with
/// the largest change (absolute for total-index targets, relative for
/// normalized ones). Ties go to the smaller `|delta|`, then the more
/// negative one.
pub fn delta_scan(
    ctx: &ReweightContext<'_>,
    direction: &PerturbationDirection,
    r: usize,
    tau: f64,
) -> Result<ScanResult> {
    if r < 2 {
        return Err(Error::InvalidArgument(format!("grid resolution r must be >= 2, got {r}")));
    }
    let dw = DirectionWeights::new(ctx.samples, ctx.basis, &direction.a);
    let points: Vec<PerturbationCandidate> = delta_grid(r)
        .into_par_iter()
        .map(|delta| evaluate_candidate(ctx, direction, &dw, delta, tau))
        .collect();
    let mut best: Option<&PerturbationCandidate> = None;
    for c in points.iter().filter(|c| c.admissible) {
        best = match best {
            None => Some(c),
            Some(b) => {
                let better = c.change() > b.change()
                    || (c.change() == b.change() && c.delta().abs() < b.delta().abs());
                Some(if better { c } else { b })
            }
        };
    }
    let best = match best {
        Some(b) if b.delta() != 0.0 => b.clone(),
        Some(b) => PerturbationCandidate {
            degenerate: true,
            ..b.clone()
        },
        None => {
            let mut zero = evaluate_candidate(ctx, direction, &dw, 0.0, tau);
            if let Some(f) = &zero.failure {
                return Err(Error::InvalidArgument(format!("identity perturbation failed: {f}")));
            }
            zero.degenerate = true;
            zero
        }
    };
    Ok(ScanResult { points, best })
}

/// Positions of the candidates with the largest absolute and relative
/// change among admissible ones. Ties go to the smaller `|delta|`, then to
/// the earlier target.
pub fn select_extremes(candidates: &[PerturbationCandidate]) -> Option<(usize, usize)> {
    let pick = |metric: fn(&PerturbationCandidate) -> f64| {
        let mut best: Option<usize> = None;
        for (i, c) in candidates.iter().enumerate().filter(|(_, c)| c.admissible) {
            best = match best {
                None => Some(i),
                Some(b) => {
                    let (mc, mb) = (metric(c), metric(&candidates[b]));
                    let better = mc > mb
                        || (mc == mb && c.delta().abs() < candidates[b].delta().abs())
                        || (mc == mb
                            && c.delta().abs() == candidates[b].delta().abs()
                            && c.target().rank() < candidates[b].target().rank());
                    Some(if better { i } else { b })
                }
            };
        }
        best
    };
    Some((pick(|c| c.abs_change)?, pick(|c| c.rel_change)?))
}

/// Settings for the robustness post-processing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisOptions {
    pub r: usize,
    pub tau: f64,
    pub reps: usize,
    pub seed: u64,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            r: 60,
            tau: 1.5,
            reps: crate::sobol::DEFAULT_REPS,
            seed: 0,
        }
    }
}

/// Nominal indices, derivatives, and the best admissible perturbation for
/// each of the `2p` targets.
#[derive(Debug, Clone, PartialEq)]
pub struct RobustnessReport {
    pub nominal: Nominal,
    pub table: DerivativeTable,
    pub directions: Vec<PerturbationDirection>,
    pub candidates: Vec<PerturbationCandidate>,
    pub extreme_abs: usize,
    pub extreme_rel: usize,
}

impl RobustnessReport {
    pub fn extreme_abs(&self) -> &PerturbationCandidate {
        &self.candidates[self.extreme_abs]
    }

    pub fn extreme_rel(&self) -> &PerturbationCandidate {
        &self.candidates[self.extreme_rel]
    }
}

/// Targets in scan order: for each variable, its total then normalized index.
pub fn targets(p: usize) -> Vec<Target> {
    (0..p)
        .flat_map(|k| [Target::TotalIndex(k), Target::NormalizedIndex(k)])
        .collect()
}

/// Runs the derivative, direction, scan and selection stages.
pub fn analyze(
    s: &SampleSet,
    basis: &PerturbationBasis,
    options: AnalysisOptions,
) -> Result<RobustnessReport> {
    let subsamples = Subsamples::new(s.n(), options.reps, options.seed)?;
    let nominal = Nominal::compute(s, &subsamples)?;
    let table = derivative_table(s, basis)?;
    let floors = basis.effective_floors();
    let directions: Vec<PerturbationDirection> = targets(s.p())
        .into_iter()
        .map(|t| optimal_direction(t, table.row(t), &floors))
        .collect();
    let ctx = ReweightContext {
        samples: s,
        basis,
        nominal: &nominal,
        subsamples: &subsamples,
    };
    let candidates = directions
        .par_iter()
        .map(|d| delta_scan(&ctx, d, options.r, options.tau).map(|scan| scan.best))
        .collect::<Result<Vec<_>>>()?;
    let (extreme_abs, extreme_rel) =
        select_extremes(&candidates).ok_or(Error::DegenerateWeights)?;
    Ok(RobustnessReport {
        nominal,
        table,
        directions,
        candidates,
        extreme_abs,
        extreme_rel,
    })
}
