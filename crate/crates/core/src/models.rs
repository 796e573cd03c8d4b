//! Test problems: the g-function, a three-variable linear model, the Lorenz
//! system quantity of interest, and the analytic linear-Gaussian indices.

use std::sync::atomic::{AtomicUsize, Ordering};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::sobol::IndexVector;

/// A scalar model evaluated at points of the input domain.
pub trait Model: Sync {
    fn eval(&self, x: &[f64]) -> Result<f64>;
}

impl<F> Model for F
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    fn eval(&self, x: &[f64]) -> Result<f64> {
        Ok(self(x))
    }
}

/// Wraps a model and counts evaluations.
pub struct CountingModel<'a> {
    inner: &'a dyn Model,
    calls: AtomicUsize,
}

impl<'a> CountingModel<'a> {
    pub fn new(inner: &'a dyn Model) -> Self {
        Self {
            inner,
            calls: AtomicUsize::new(0),
        }
    }

    pub fn count(&self) -> usize {
        self.calls.load(Ordering::Relaxed)
    }
}

impl Model for CountingModel<'_> {
    fn eval(&self, x: &[f64]) -> Result<f64> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.inner.eval(x)
    }
}

/// Sobol' g-function `prod_k (|4 x_k - 2| + a_k) / (1 + a_k)` on the unit cube.
#[derive(Debug, Clone, PartialEq)]
pub struct GFunction {
    a: Vec<f64>,
}

impl GFunction {
    pub fn new(a: Vec<f64>) -> Self {
        Self { a }
    }

    /// Ten variables with `a_k = k - 1`.
    pub fn standard() -> Self {
        Self::new((0..10).map(f64::from).collect())
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.a
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.a
            .iter()
            .zip(x)
            .map(|(a, xk)| ((4.0 * xk - 2.0).abs() + a) / (1.0 + a))
            .product()
    }

    /// Exact total indices under independent Uniform[0, 1] inputs.
    pub fn analytic_total_indices(&self) -> IndexVector {
        let partial: Vec<f64> = self.a.iter().map(|a| 1.0 / (3.0 * (1.0 + a).powi(2))).collect();
        let all: f64 = partial.iter().map(|d| 1.0 + d).product();
        IndexVector(
            partial
                .iter()
                .map(|d| d * (all / (1.0 + d)) / (all - 1.0))
                .collect(),
        )
    }
}

impl Model for GFunction {
    fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.a.len() {
            return Err(Error::Dimension {
                expected: self.a.len(),
                got: x.len(),
            });
        }
        Ok(self.value(x))
    }
}

/// `f(x) = 1.5 x1 + 1.25 x2 + x3`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Linear3;

impl Linear3 {
    pub const COEFFICIENTS: [f64; 3] = [1.5, 1.25, 1.0];

    pub fn value(x: &[f64]) -> f64 {
        1.5 * x[0] + 1.25 * x[1] + x[2]
    }
}

impl Model for Linear3 {
    fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != 3 {
            return Err(Error::Dimension {
                expected: 3,
                got: x.len(),
            });
        }
        Ok(Self::value(x))
    }
}

/// Coefficients and initial state of one Lorenz trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LorenzParams {
    pub sigma: f64,
    pub rho: f64,
    pub beta: f64,
    pub alpha: [f64; 3],
    pub t_end: f64,
    pub step: f64,
}

impl LorenzParams {
    /// Maps `(sigma, rho, beta, alpha1, alpha2, alpha3)` with the default horizon and step.
    pub fn from_point(x: &[f64]) -> Self {
        Self {
            sigma: x[0],
            rho: x[1],
            beta: x[2],
            alpha: [x[3], x[4], x[5]],
            t_end: 1.0,
            step: Lorenz::DEFAULT_STEP,
        }
    }
}

/// Final state of the Lorenz system integrated with classical RK4 at a fixed step.
pub fn lorenz_state(params: &LorenzParams) -> Result<[f64; 3]> {
    let ratio = params.t_end / params.step;
    let steps = ratio.round();
    if !(params.step > 0.0) || (ratio - steps).abs() > 1e-9 * ratio.max(1.0) {
        return Err(Error::InvalidArgument(format!(
            "step {} does not divide horizon {}",
            params.step, params.t_end
        )));
    }
    let (s, r, b) = (params.sigma, params.rho, params.beta);
    let rhs = |y: [f64; 3]| {
        [
            s * (y[1] - y[0]),
            y[0] * (r - y[2]) - y[1],
            y[0] * y[1] - b * y[2],
        ]
    };
    let h = params.step;
    let axpy = |y: [f64; 3], a: f64, k: [f64; 3]| [y[0] + a * k[0], y[1] + a * k[1], y[2] + a * k[2]];
    let mut y = params.alpha;
    for _ in 0..steps as usize {
        let k1 = rhs(y);
        let k2 = rhs(axpy(y, 0.5 * h, k1));
        let k3 = rhs(axpy(y, 0.5 * h, k2));
        let k4 = rhs(axpy(y, h, k3));
        for i in 0..3 {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if !y.iter().all(|v| v.is_finite()) {
            return Err(Error::BlowUp);
        }
    }
    Ok(y)
}

/// `y3(t_end) / y2(t_end)`.
pub fn lorenz_qoi(params: &LorenzParams) -> Result<f64> {
    let y = lorenz_state(params)?;
    if y[1].abs() < 1e-12 {
        return Err(Error::QoiSingular(y[1].abs()));
    }
    Ok(y[2] / y[1])
}

/// The Lorenz quantity of interest as a six-input model.
#[derive(Debug, Clone, Copy)]
pub struct Lorenz {
    pub step: f64,
}

impl Lorenz {
    pub const DEFAULT_STEP: f64 = 1e-3;
}

impl Default for Lorenz {
    fn default() -> Self {
        Self {
            step: Self::DEFAULT_STEP,
        }
    }
}

impl Model for Lorenz {
    fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != 6 {
            return Err(Error::Dimension {
                expected: 6,
                got: x.len(),
            });
        }
        let mut params = LorenzParams::from_point(x);
        params.step = self.step;
        lorenz_qoi(&params)
    }
}

/// Total indices of `f(X) = c^T X` for `X ~ N(mu, sigma)`:
/// `T_k = c_k^2 Var(X_k | X_{~k}) / (c^T Sigma c)`, with the conditional
/// variance from the Schur complement
/// `Sigma_kk - Sigma_{k,~k} Sigma_{~k,~k}^{-1} Sigma_{~k,k}`.
pub fn linear_gaussian_total_indices(c: &[f64], sigma: &DMatrix<f64>) -> Result<IndexVector> {
    let p = c.len();
    if sigma.nrows() != p || sigma.ncols() != p {
        return Err(Error::Dimension {
            expected: p,
            got: sigma.nrows(),
        });
    }
    let cv = DVector::from_column_slice(c);
    let total = (cv.transpose() * sigma * &cv)[(0, 0)];
    if !(total > 0.0) {
        return Err(Error::LinearAlgebra("c^T Sigma c is not positive".into()));
    }
    let values = (0..p)
        .map(|k| {
            let rest: Vec<usize> = (0..p).filter(|&j| j != k).collect();
            let conditional = if rest.is_empty() {
                sigma[(k, k)]
            } else {
                let block = sigma.select_rows(&rest).select_columns(&rest);
                let cross = DVector::from_iterator(rest.len(), rest.iter().map(|&j| sigma[(j, k)]));
                let chol = block.cholesky().ok_or_else(|| {
                    Error::LinearAlgebra(format!("covariance block without variable {k} is not positive definite"))
                })?;
                sigma[(k, k)] - cross.dot(&chol.solve(&cross))
            };
            Ok(c[k] * c[k] * conditional / total)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(IndexVector(values))
}

/// Equicorrelated covariance with unit variances and off-diagonal `rho`.
pub fn equicorrelated(p: usize, rho: f64) -> DMatrix<f64> {
    DMatrix::from_fn(p, p, |i, j| if i == j { 1.0 } else { rho })
}
