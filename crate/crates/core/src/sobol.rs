//! Pick-freeze sample sets and nominal total Sobol' index estimation.

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::densities::ProductDensity;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::models::Model;
use crate::numerics::{pairwise_sum_by, sample_std};
use crate::rng::seeded;

/// Default number of half-size subsample replicates for standard deviations.
pub const DEFAULT_REPS: usize = 50;

const SUBSAMPLE_STREAM: u64 = 0x5ab5_a3b1e;

/// The reusable dataset: `X0`, the `p` pick-freeze matrices, and model and
/// density evaluations on all of them.
#[derive(Debug, Clone)]
pub struct SampleSet {
    x0: Matrix,
    xk: Vec<Matrix>,
    f0: Vec<f64>,
    fk: Vec<Vec<f64>>,
    phi0: Vec<f64>,
    phik: Vec<Vec<f64>>,
}

impl SampleSet {
    /// Assembles a sample set from precomputed parts, checking shapes, the
    /// freeze structure and positivity of the density evaluations.
    pub fn from_parts(
        x0: Matrix,
        xk: Vec<Matrix>,
        f0: Vec<f64>,
        fk: Vec<Vec<f64>>,
        phi0: Vec<f64>,
        phik: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let (n, p) = (x0.rows(), x0.cols());
        let dim_err = |expected, got| Error::Dimension { expected, got };
        if xk.len() != p {
            return Err(dim_err(p, xk.len()));
        }
        if fk.len() != p || phik.len() != p {
            return Err(dim_err(p, fk.len().min(phik.len())));
        }
        for v in [&f0, &phi0].into_iter().chain(fk.iter()).chain(phik.iter()) {
            if v.len() != n {
                return Err(dim_err(n, v.len()));
            }
        }
        for (k, m) in xk.iter().enumerate() {
            if m.rows() != n || m.cols() != p {
                return Err(dim_err(n * p, m.rows() * m.cols()));
            }
            for i in 0..n {
                for j in (0..p).filter(|&j| j != k) {
                    if m.get(i, j).to_bits() != x0.get(i, j).to_bits() {
                        return Err(Error::InvalidArgument(format!(
                            "matrix X{} differs from X0 outside column {k} at row {i}",
                            k + 1
                        )));
                    }
                }
            }
        }
        for (matrix, v) in std::iter::once(&phi0).chain(phik.iter()).enumerate() {
            if let Some(row) = v.iter().position(|&d| !(d > 0.0)) {
                return Err(Error::ZeroDensity { matrix, row });
            }
        }
        Ok(Self {
            x0,
            xk,
            f0,
            fk,
            phi0,
            phik,
        })
    }

    pub fn n(&self) -> usize {
        self.x0.rows()
    }

    pub fn p(&self) -> usize {
        self.x0.cols()
    }

    pub fn x0(&self) -> &Matrix {
        &self.x0
    }

    /// Pick-freeze matrix for variable `k` (0-based).
    pub fn xk(&self, k: usize) -> &Matrix {
        &self.xk[k]
    }

    pub fn f0(&self) -> &[f64] {
        &self.f0
    }

    pub fn fk(&self, k: usize) -> &[f64] {
        &self.fk[k]
    }

    pub fn phi0(&self) -> &[f64] {
        &self.phi0
    }

    pub fn phik(&self, k: usize) -> &[f64] {
        &self.phik[k]
    }

    /// Applies one row permutation to every matrix and vector.
    pub fn permute_rows(&self, perm: &[usize]) -> Self {
        let p = self.p();
        let pm = |m: &Matrix| {
            let mut data = Vec::with_capacity(m.rows() * p);
            for &i in perm {
                data.extend_from_slice(m.row(i));
            }
            Matrix::from_row_major(perm.len(), p, data)
        };
        let pv = |v: &[f64]| perm.iter().map(|&i| v[i]).collect::<Vec<_>>();
        Self {
            x0: pm(&self.x0),
            xk: self.xk.iter().map(pm).collect(),
            f0: pv(&self.f0),
            fk: self.fk.iter().map(|v| pv(v)).collect(),
            phi0: pv(&self.phi0),
            phik: self.phik.iter().map(|v| pv(v)).collect(),
        }
    }
}

/// One estimate per input variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IndexVector(pub Vec<f64>);

impl IndexVector {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn sum(&self) -> f64 {
        pairwise_sum_by(self.0.len(), |i| self.0[i])
    }

    /// Values clipped to [0, 1]; for display only.
    pub fn clamped(&self) -> Vec<f64> {
        self.0.iter().map(|v| v.clamp(0.0, 1.0)).collect()
    }
}

impl std::ops::Index<usize> for IndexVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

fn evaluate(model: &dyn Model, x: &Matrix, matrix: usize) -> Result<Vec<f64>> {
    (0..x.rows())
        .into_par_iter()
        .map(|i| match model.eval(x.row(i)) {
            Ok(v) if v.is_finite() => Ok(v),
            Ok(v) => Err(Error::Evaluation {
                matrix,
                row: i,
                reason: format!("non-finite output {v}"),
            }),
            Err(e) => Err(Error::Evaluation {
                matrix,
                row: i,
                reason: e.to_string(),
            }),
        })
        .collect()
}

/// Draws `X0` and all pick-freeze matrices from `density` and evaluates the
/// model on each, `n * (p + 1)` evaluations in total.
pub fn build_sample_set(
    density: &ProductDensity,
    model: &dyn Model,
    n: usize,
    seed: u64,
) -> Result<SampleSet> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("need n >= 2 samples, got {n}")));
    }
    let p = density.dim();
    let x0 = density.sample(n, seed);
    let xk = (0..p)
        .map(|k| density.pick_freeze(&x0, k, seed))
        .collect::<Result<Vec<_>>>()?;
    let f0 = evaluate(model, &x0, 0)?;
    let fk = xk
        .iter()
        .enumerate()
        .map(|(k, m)| evaluate(model, m, k + 1))
        .collect::<Result<Vec<_>>>()?;
    let dens = |m: &Matrix| -> Vec<f64> {
        (0..m.rows())
            .into_par_iter()
            .map(|i| density.pdf_unchecked(m.row(i)))
            .collect()
    };
    let phi0 = dens(&x0);
    let phik = xk.iter().map(dens).collect();
    SampleSet::from_parts(x0, xk, f0, fk, phi0, phik)
}

/// Weight vectors for the reweighted estimator. `denom` has one entry per
/// row; `pairs[k]` has one entry per row for the index-`k` numerator.
pub(crate) struct RowWeights<'a> {
    pub denom: &'a [f64],
    pub pairs: &'a [Vec<f64>],
}

/// Total-index estimator restricted to `rows`, optionally reweighted.
///
/// Weights are self-normalized over `rows`. With `None` every weight is
/// exactly one, so this is the plain pick-freeze estimator; any weight
/// vector of exact ones reproduces it bit for bit.
pub(crate) fn estimate_on_rows(
    s: &SampleSet,
    rows: &[usize],
    weights: Option<&RowWeights<'_>>,
) -> Result<Vec<f64>> {
    let len = rows.len();
    let m = len as f64;
    let f0 = s.f0();

    let w0 = |t: usize| weights.map_or(1.0, |w| w.denom[rows[t]]);
    let mean_w = pairwise_sum_by(len, w0) / m;
    if !(mean_w > 0.0) || !mean_w.is_finite() {
        return Err(Error::DegenerateWeights);
    }
    let m1 = pairwise_sum_by(len, |t| w0(t) / mean_w * f0[rows[t]]) / m;
    let m2 = pairwise_sum_by(len, |t| w0(t) / mean_w * f0[rows[t]] * f0[rows[t]]) / m;
    let variance = m2 - m1 * m1;
    if variance <= 1e-14 * m2 || variance <= 0.0 {
        return Err(Error::ConstantModel);
    }

    (0..s.p())
        .map(|k| {
            let fk = s.fk(k);
            let wk = |t: usize| weights.map_or(1.0, |w| w.pairs[k][rows[t]]);
            let mean_wk = pairwise_sum_by(len, wk) / m;
            if !(mean_wk > 0.0) || !mean_wk.is_finite() {
                return Err(Error::DegenerateWeights);
            }
            let numerator = pairwise_sum_by(len, |t| {
                let i = rows[t];
                let d = f0[i] - fk[i];
                wk(t) / mean_wk * (0.5 * d * d)
            }) / m;
            Ok(numerator / variance)
        })
        .collect()
}

/// Pick-freeze estimate of every total index:
/// `[(1/2n) sum (F0 - Fk)^2] / [mean(F0^2) - mean(F0)^2]`.
pub fn total_indices(s: &SampleSet) -> Result<IndexVector> {
    let rows: Vec<usize> = (0..s.n()).collect();
    estimate_on_rows(s, &rows, None).map(IndexVector)
}

/// Total indices divided by their sum.
pub fn normalized_indices(t: &IndexVector) -> Result<IndexVector> {
    let total = t.sum();
    if total == 0.0 || !total.is_finite() {
        return Err(Error::ZeroIndexSum);
    }
    Ok(IndexVector(t.0.iter().map(|v| v / total).collect()))
}

/// Row subsets for half-size subsampling, shared by every estimator so that
/// replicate `r` always sees the same paired rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Subsamples {
    sets: Vec<Vec<usize>>,
}

impl Subsamples {
    /// `reps` subsets of `floor(n / 2)` distinct rows each, sorted ascending.
    pub fn new(n: usize, reps: usize, seed: u64) -> Result<Self> {
        if n < 4 {
            return Err(Error::InvalidArgument(format!(
                "subsampling needs n >= 4, got {n}"
            )));
        }
        let mut rng = seeded(seed, SUBSAMPLE_STREAM);
        let sets = (0..reps)
            .map(|_| {
                let mut v = index::sample(&mut rng, n, n / 2).into_vec();
                v.sort_unstable();
                v
            })
            .collect();
        Ok(Self { sets })
    }

    pub fn sets(&self) -> &[Vec<usize>] {
        &self.sets
    }

    pub fn reps(&self) -> usize {
        self.sets.len()
    }

    /// Runs `estimator` on every subset (in parallel) and returns the
    /// replicate estimates in replicate order.
    pub fn replicates<F>(&self, estimator: F) -> Result<Vec<Vec<f64>>>
    where
        F: Fn(&[usize]) -> Result<Vec<f64>> + Sync,
    {
        self.sets.par_iter().map(|rows| estimator(rows)).collect()
    }

    /// Per-component sample standard deviation of the replicate estimates.
    pub fn std<F>(&self, estimator: F) -> Result<Vec<f64>>
    where
        F: Fn(&[usize]) -> Result<Vec<f64>> + Sync,
    {
        Ok(component_std(&self.replicates(estimator)?))
    }
}

pub(crate) fn component_std(reps: &[Vec<f64>]) -> Vec<f64> {
    let p = reps.first().map_or(0, Vec::len);
    (0..p)
        .map(|k| sample_std(&reps.iter().map(|r| r[k]).collect::<Vec<_>>()))
        .collect()
}

/// Subsample standard deviation of the nominal total indices.
pub fn subsample_std(s: &SampleSet, reps: usize, seed: u64) -> Result<Vec<f64>> {
    let sub = Subsamples::new(s.n(), reps, seed)?;
    sub.std(|rows| estimate_on_rows(s, rows, None))
}
