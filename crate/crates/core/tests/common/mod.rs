#![allow(dead_code)]

use robust_sobol::densities::{Marginal, ProductDensity};
use robust_sobol::frechet::{PerturbationBasis, PerturbationDirection};
use robust_sobol::numerics::gauss_legendre;
use robust_sobol::partition::Partition;
use robust_sobol::reweight::PerturbedDensitySpec;
use robust_sobol::sobol::SampleSet;
use robust_sobol::{ModelName, RunConfig};

pub fn lorenz_case1(n: usize, seed: u64) -> RunConfig {
    let u = |lo: f64, hi: f64| Marginal::uniform(lo, hi).unwrap();
    let mut c = RunConfig::unit_cube(ModelName::Lorenz, n);
    c.marginals = vec![
        u(97.0 / 10.0, 103.0 / 10.0),
        u(2716.0 / 100.0, 2884.0 / 100.0),
        u(194.0 / 75.0, 206.0 / 75.0),
        u(0.8, 1.2),
        u(0.8, 1.2),
        u(0.8, 1.2),
    ];
    c.seed = seed;
    c
}

pub fn lorenz_case2(n: usize, seed: u64) -> RunConfig {
    let mut c = lorenz_case1(n, seed);
    c.marginals[5] = Marginal::beta(1.0, 4.0, 0.8, 1.2).unwrap();
    c
}

/// Composite Gauss-Legendre nodes and weights on `[a, b]` split at `cuts`.
pub fn panel_rule(a: f64, b: f64, cuts: &[f64], order: usize) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(order);
    let mut edges = vec![a];
    edges.extend(cuts.iter().copied().filter(|c| *c > a && *c < b));
    edges.push(b);
    let mut out = Vec::new();
    for e in edges.windows(2) {
        let (lo, hi) = (e[0], e[1]);
        let half = 0.5 * (hi - lo);
        for (xi, wi) in x.iter().zip(&w) {
            out.push((lo + half * (xi + 1.0), half * wi));
        }
    }
    out
}

/// Total indices of `f` on a 2-D domain under the perturbed density
/// `phi + delta * a_box`, by tensor-grid quadrature of
/// `E[Var(f | x_other)] / Var(f)`.
pub fn quadrature_total_indices_2d(
    f: &dyn Fn(f64, f64) -> f64,
    density: &ProductDensity,
    part: &Partition,
    a: &[f64],
    delta: f64,
    cuts: [&[f64]; 2],
    order: usize,
) -> [f64; 2] {
    let s0 = density.marginal(0).support();
    let s1 = density.marginal(1).support();
    let r0 = panel_rule(s0.lo(), s0.hi(), cuts[0], order);
    let r1 = panel_rule(s1.lo(), s1.hi(), cuts[1], order);
    let pdf = |x0: f64, x1: f64| {
        let b = part.locate(&[x0, x1]);
        density.pdf(&[x0, x1]).unwrap() + delta * a[b]
    };
    let (mut mass, mut m1, mut m2) = (0.0, 0.0, 0.0);
    for &(x0, w0) in &r0 {
        for &(x1, w1) in &r1 {
            let p = pdf(x0, x1) * w0 * w1;
            let v = f(x0, x1);
            mass += p;
            m1 += p * v;
            m2 += p * v * v;
        }
    }
    let mean = m1 / mass;
    let var = m2 / mass - mean * mean;
    // E[Var(f | x_other)] for the variable integrated on the inner rule.
    let cond = |outer: &[(f64, f64)], inner: &[(f64, f64)], swap: bool| {
        let mut acc = 0.0;
        for &(z, wz) in outer {
            let (mut q, mut s1, mut s2) = (0.0, 0.0, 0.0);
            for &(y, wy) in inner {
                let (x0, x1) = if swap { (z, y) } else { (y, z) };
                let p = pdf(x0, x1) * wy;
                let v = f(x0, x1);
                q += p;
                s1 += p * v;
                s2 += p * v * v;
            }
            if q > 0.0 {
                acc += wz * (s2 - s1 * s1 / q);
            }
        }
        acc / mass
    };
    [cond(&r1, &r0, false) / var, cond(&r0, &r1, true) / var]
}

/// Exact derivative at `delta = 0` of the self-normalized reweighted
/// estimator along `a`, obtained from the plug-in derivative `dt` by adding
/// the centering term `-T_k mean_j(a(x'_j)/phi(x'_j) - (int a dx_k)(x_j)/(int phi dx_k)(x_j))`.
pub fn centered_derivative(
    s: &SampleSet,
    basis: &PerturbationBasis,
    a: &[f64],
    k: usize,
    dt: f64,
    t_hat: f64,
) -> f64 {
    let n = s.n();
    let boxes = basis.partition().boxes();
    let mut acc = 0.0;
    for j in 0..n {
        let pick = a[basis.box_of_xk(k, j)] / s.phik(k)[j];
        let line: f64 = basis.line(k, j).map(|b| a[b] * boxes[b].interval(k).len()).sum();
        acc += pick - line / basis.complement(k, j);
    }
    dt - t_hat * acc / n as f64
}

pub fn spec(a: Vec<f64>, delta: f64, volumes: &[f64]) -> PerturbedDensitySpec {
    PerturbedDensitySpec::new(
        PerturbationDirection {
            a,
            target: robust_sobol::Target::TotalIndex(0),
            norm_value: 0.0,
        },
        delta,
        volumes,
    )
    .unwrap()
}

pub fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len();
    if m % 2 == 1 {
        s[m / 2]
    } else {
        0.5 * (s[m / 2 - 1] + s[m / 2])
    }
}
