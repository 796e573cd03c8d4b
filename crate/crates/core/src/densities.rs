//! Compactly supported product-form input densities.
//!
//! A [`ProductDensity`] is a list of independent univariate [`Marginal`]s. It
//! knows how to evaluate itself, draw pick-freeze sample matrices, integrate
//! out a subset of coordinates, and bound itself from below on a
//! [`HyperRect`].

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::beta::{inv_beta_reg, ln_beta};
use statrs::function::erf::{erfc, erfc_inv};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::numerics::adaptive_simpson;
use crate::rng::{CounterStream, BLOCK};

const NORMALIZATION_TOL: f64 = 1e-10;

/// A finite closed interval `[lo, hi]` with `lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 2]", into = "[f64; 2]")]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_finite() && hi.is_finite() && lo < hi {
            Ok(Self { lo, hi })
        } else {
            Err(Error::InvalidInterval { lo, hi })
        }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

impl TryFrom<[f64; 2]> for Interval {
    type Error = Error;
    fn try_from(v: [f64; 2]) -> Result<Self> {
        Interval::new(v[0], v[1])
    }
}

impl From<Interval> for [f64; 2] {
    fn from(i: Interval) -> Self {
        [i.lo, i.hi]
    }
}

/// Shape of a univariate marginal, before it is placed on its support.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MarginalFamily {
    Uniform,
    /// Standard Beta shape, density proportional to `t^(alpha-1) (1-t)^(beta-1)`
    /// on the unit interval mapped affinely onto the support. Both shapes must
    /// be at least 1 so the density is bounded and unimodal.
    Beta { alpha: f64, beta: f64 },
    /// Normal(mean, sd) conditioned on the support.
    TruncatedNormal { mean: f64, sd: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Cache {
    Uniform { density: f64 },
    Beta { ln_norm: f64 },
    TruncatedNormal { cdf_lo: f64, mass: f64 },
}

/// A univariate density on a compact interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MarginalSpec", into = "MarginalSpec")]
pub struct Marginal {
    family: MarginalFamily,
    support: Interval,
    cache: Cache,
}

fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

fn std_normal_quantile(p: f64) -> f64 {
    -std::f64::consts::SQRT_2 * erfc_inv(2.0 * p)
}

impl Marginal {
    /// Creates a marginal and verifies by quadrature that it integrates to one.
    pub fn new(family: MarginalFamily, support: Interval) -> Result<Self> {
        let cache = match family {
            MarginalFamily::Uniform => Cache::Uniform {
                density: 1.0 / support.len(),
            },
            MarginalFamily::Beta { alpha, beta } => {
                if !(alpha.is_finite() && beta.is_finite() && alpha >= 1.0 && beta >= 1.0) {
                    return Err(Error::InvalidMarginal(format!(
                        "beta shapes must be finite and >= 1, got ({alpha}, {beta})"
                    )));
                }
                Cache::Beta {
                    ln_norm: ln_beta(alpha, beta) + support.len().ln(),
                }
            }
            MarginalFamily::TruncatedNormal { mean, sd } => {
                if !(mean.is_finite() && sd.is_finite() && sd > 0.0) {
                    return Err(Error::InvalidMarginal(format!(
                        "truncated normal needs finite mean and sd > 0, got ({mean}, {sd})"
                    )));
                }
                let cdf_lo = std_normal_cdf((support.lo - mean) / sd);
                let mass = std_normal_cdf((support.hi - mean) / sd) - cdf_lo;
                if !(mass > 1e-300) {
                    return Err(Error::InvalidMarginal(
                        "truncated normal has no mass on its support".into(),
                    ));
                }
                Cache::TruncatedNormal { cdf_lo, mass }
            }
        };
        let m = Self {
            family,
            support,
            cache,
        };
        let total = adaptive_simpson(&|x| m.pdf(x), support.lo, support.hi, 1e-13);
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidMarginal(format!(
                "density integrates to {total}, not 1"
            )));
        }
        Ok(m)
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        Self::new(MarginalFamily::Uniform, Interval::new(lo, hi)?)
    }

    pub fn beta(alpha: f64, beta: f64, lo: f64, hi: f64) -> Result<Self> {
        Self::new(MarginalFamily::Beta { alpha, beta }, Interval::new(lo, hi)?)
    }

    pub fn truncated_normal(mean: f64, sd: f64, lo: f64, hi: f64) -> Result<Self> {
        Self::new(
            MarginalFamily::TruncatedNormal { mean, sd },
            Interval::new(lo, hi)?,
        )
    }

    pub fn family(&self) -> MarginalFamily {
        self.family
    }

    pub fn support(&self) -> Interval {
        self.support
    }

    /// Density at `x`; zero outside the support.
    pub fn pdf(&self, x: f64) -> f64 {
        if !self.support.contains(x) {
            return 0.0;
        }
        match (self.family, self.cache) {
            (MarginalFamily::Uniform, Cache::Uniform { density }) => density,
            (MarginalFamily::Beta { alpha, beta }, Cache::Beta { ln_norm }) => {
                let t = ((x - self.support.lo) / self.support.len()).clamp(0.0, 1.0);
                t.powf(alpha - 1.0) * (1.0 - t).powf(beta - 1.0) * (-ln_norm).exp()
            }
            (MarginalFamily::TruncatedNormal { mean, sd }, Cache::TruncatedNormal { mass, .. }) => {
                let z = (x - mean) / sd;
                (-0.5 * z * z).exp() / ((2.0 * std::f64::consts::PI).sqrt() * sd * mass)
            }
            _ => unreachable!("cache matches family by construction"),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.support.lo {
            return 0.0;
        }
        if x >= self.support.hi {
            return 1.0;
        }
        match (self.family, self.cache) {
            (MarginalFamily::Uniform, _) => (x - self.support.lo) / self.support.len(),
            (MarginalFamily::Beta { alpha, beta }, _) => {
                let t = (x - self.support.lo) / self.support.len();
                statrs::function::beta::beta_reg(alpha, beta, t)
            }
            (
                MarginalFamily::TruncatedNormal { mean, sd },
                Cache::TruncatedNormal { cdf_lo, mass },
            ) => ((std_normal_cdf((x - mean) / sd) - cdf_lo) / mass).clamp(0.0, 1.0),
            _ => unreachable!("cache matches family by construction"),
        }
    }

    /// Inverse CDF for `u` in `[0, 1]`; the result always lies in the support.
    pub fn quantile(&self, u: f64) -> f64 {
        let Interval { lo, hi } = self.support;
        let x = match (self.family, self.cache) {
            (MarginalFamily::Uniform, _) => lo + u * (hi - lo),
            (MarginalFamily::Beta { alpha, beta }, _) => lo + inv_beta_reg(alpha, beta, u) * (hi - lo),
            (
                MarginalFamily::TruncatedNormal { mean, sd },
                Cache::TruncatedNormal { cdf_lo, mass },
            ) => {
                let p = (cdf_lo + u * mass).clamp(0.0, 1.0);
                mean + sd * std_normal_quantile(p)
            }
            _ => unreachable!("cache matches family by construction"),
        };
        x.clamp(lo, hi)
    }

    /// Infimum of the density over the closed interval `[a, b]` inside the support.
    ///
    /// Every supported family is unimodal or monotone on its support, so the
    /// infimum over a closed sub-interval sits at one of its endpoints.
    pub fn inf_on(&self, iv: &Interval) -> f64 {
        match self.cache {
            Cache::Uniform { density } => density,
            _ => self.pdf(iv.lo).min(self.pdf(iv.hi)),
        }
    }
}

/// Serialized form: `{"family": "uniform" | "beta" | "truncnorm", "support": [lo, hi], "params": {...}}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarginalSpec {
    pub family: String,
    pub support: [f64; 2],
    #[serde(default)]
    pub params: serde_json::Map<String, serde_json::Value>,
}

impl TryFrom<MarginalSpec> for Marginal {
    type Error = Error;

    fn try_from(spec: MarginalSpec) -> Result<Self> {
        let support = Interval::new(spec.support[0], spec.support[1])?;
        let param = |names: &[&str]| -> Result<f64> {
            names
                .iter()
                .find_map(|n| spec.params.get(*n))
                .and_then(serde_json::Value::as_f64)
                .ok_or_else(|| {
                    Error::InvalidMarginal(format!(
                        "{} marginal requires numeric param `{}`",
                        spec.family, names[0]
                    ))
                })
        };
        let family = match spec.family.as_str() {
            "uniform" => MarginalFamily::Uniform,
            "beta" => MarginalFamily::Beta {
                alpha: param(&["alpha", "a"])?,
                beta: param(&["beta", "b"])?,
            },
            "truncnorm" => MarginalFamily::TruncatedNormal {
                mean: param(&["mean", "mu"])?,
                sd: param(&["sd", "sigma"])?,
            },
            other => {
                return Err(Error::InvalidMarginal(format!(
                    "unknown family `{other}` (expected uniform, beta or truncnorm)"
                )))
            }
        };
        Marginal::new(family, support)
    }
}

impl From<Marginal> for MarginalSpec {
    fn from(m: Marginal) -> Self {
        let mut params = serde_json::Map::new();
        let family = match m.family {
            MarginalFamily::Uniform => "uniform",
            MarginalFamily::Beta { alpha, beta } => {
                params.insert("alpha".into(), alpha.into());
                params.insert("beta".into(), beta.into());
                "beta"
            }
            MarginalFamily::TruncatedNormal { mean, sd } => {
                params.insert("mean".into(), mean.into());
                params.insert("sd".into(), sd.into());
                "truncnorm"
            }
        };
        MarginalSpec {
            family: family.into(),
            support: m.support.into(),
            params,
        }
    }
}

/// An axis-aligned box, one interval per coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperRect {
    intervals: Vec<Interval>,
}

impl HyperRect {
    pub fn new(intervals: Vec<Interval>) -> Self {
        Self { intervals }
    }

    pub fn dim(&self) -> usize {
        self.intervals.len()
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn interval(&self, j: usize) -> Interval {
        self.intervals[j]
    }

    pub(crate) fn set_interval(&mut self, j: usize, iv: Interval) {
        self.intervals[j] = iv;
    }

    pub fn volume(&self) -> f64 {
        self.intervals.iter().map(Interval::len).product()
    }

    /// Closed containment test.
    pub fn contains(&self, x: &[f64]) -> bool {
        self.intervals.iter().zip(x).all(|(iv, &v)| iv.contains(v))
    }

    /// Measure of the box along the coordinates in `u`: the integral of the
    /// box indicator over `x_u` at any `x_{~u}` inside the box's projection.
    pub fn face_measure(&self, u: &[usize]) -> f64 {
        u.iter().map(|&j| self.intervals[j].len()).product()
    }
}

/// Product of independent compactly supported marginals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Marginal>", into = "Vec<Marginal>")]
pub struct ProductDensity {
    marginals: Vec<Marginal>,
}

impl TryFrom<Vec<Marginal>> for ProductDensity {
    type Error = Error;
    fn try_from(m: Vec<Marginal>) -> Result<Self> {
        ProductDensity::new(m)
    }
}

impl From<ProductDensity> for Vec<Marginal> {
    fn from(d: ProductDensity) -> Self {
        d.marginals
    }
}

impl ProductDensity {
    pub fn new(marginals: Vec<Marginal>) -> Result<Self> {
        if marginals.is_empty() {
            return Err(Error::InvalidMarginal("at least one marginal required".into()));
        }
        Ok(Self { marginals })
    }

    /// Independent Uniform[0, 1] marginals in `p` dimensions.
    pub fn unit_cube(p: usize) -> Self {
        let m = Marginal::uniform(0.0, 1.0).expect("unit interval is valid");
        Self {
            marginals: vec![m; p],
        }
    }

    pub fn dim(&self) -> usize {
        self.marginals.len()
    }

    pub fn marginals(&self) -> &[Marginal] {
        &self.marginals
    }

    pub fn marginal(&self, j: usize) -> &Marginal {
        &self.marginals[j]
    }

    /// The support `Omega` as a box.
    pub fn support(&self) -> HyperRect {
        HyperRect::new(self.marginals.iter().map(Marginal::support).collect())
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: x.len(),
            });
        }
        if self
            .marginals
            .iter()
            .zip(x)
            .any(|(m, &v)| !m.support().contains(v))
        {
            return Err(Error::Domain { point: x.to_vec() });
        }
        Ok(())
    }

    /// Joint density at a point of the closed support.
    pub fn pdf(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        Ok(self.pdf_unchecked(x))
    }

    pub(crate) fn pdf_unchecked(&self, x: &[f64]) -> f64 {
        self.marginals.iter().zip(x).map(|(m, &v)| m.pdf(v)).product()
    }

    /// Draws `n` i.i.d. rows. Row `i`, column `j` uses counter `i * p + j` of stream 0.
    pub fn sample(&self, n: usize, seed: u64) -> Matrix {
        let p = self.dim();
        let stream = CounterStream::new(seed, 0);
        let mut out = Matrix::zeros(n, p);
        out.as_mut_slice()
            .par_chunks_mut(BLOCK * p)
            .enumerate()
            .for_each(|(b, chunk)| {
                let mut cur = stream.at((b * BLOCK * p) as u64);
                for (c, v) in chunk.iter_mut().enumerate() {
                    *v = self.marginals[c % p].quantile(cur.next_open01());
                }
            });
        out
    }

    /// Copies `x0` and redraws column `k` from marginal `k` (stream `k + 1`).
    pub fn pick_freeze(&self, x0: &Matrix, k: usize, seed: u64) -> Result<Matrix> {
        let p = self.dim();
        if k >= p {
            return Err(Error::Index { index: k, dim: p });
        }
        if x0.cols() != p {
            return Err(Error::Dimension {
                expected: p,
                got: x0.cols(),
            });
        }
        let stream = CounterStream::new(seed, k as u64 + 1);
        let marginal = &self.marginals[k];
        let mut out = x0.clone();
        out.as_mut_slice()
            .par_chunks_mut(BLOCK * p)
            .enumerate()
            .for_each(|(b, chunk)| {
                let mut cur = stream.at((b * BLOCK) as u64);
                for row in chunk.chunks_exact_mut(p) {
                    row[k] = marginal.quantile(cur.next_open01());
                }
            });
        Ok(out)
    }

    /// `int phi dx_u` at `x`: the product of the marginals not in `u`.
    pub fn complement_marginal(&self, x: &[f64], u: &[usize]) -> f64 {
        self.marginals
            .iter()
            .enumerate()
            .filter(|(j, _)| !u.contains(j))
            .map(|(j, m)| m.pdf(x[j]))
            .product()
    }

    /// Same as [`complement_marginal`](Self::complement_marginal) for a single excluded index.
    pub(crate) fn complement_marginal_one(&self, x: &[f64], k: usize) -> f64 {
        let mut acc = 1.0;
        for (j, m) in self.marginals.iter().enumerate() {
            if j != k {
                acc *= m.pdf(x[j]);
            }
        }
        acc
    }

    /// Infimum of the joint density over the closed box.
    pub fn inf_on_box(&self, rect: &HyperRect) -> f64 {
        self.marginals
            .iter()
            .zip(rect.intervals())
            .map(|(m, iv)| m.inf_on(iv))
            .product()
    }
}
