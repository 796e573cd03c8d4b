//! Fréchet derivatives of the total indices along piecewise-constant
//! density perturbations, and the closed-form optimal perturbation.
//!
//! The perturbation space is spanned by the indicators `psi_i` of the
//! partition boxes. For a direction `psi`, with pick-freeze pairs
//! `(x_j, x'_j)` for variable `k` and `D_j = (f(x_j) - f(x'_j))^2 / 2`:
//!
//! ```text
//! DF psi = mean_j D_j [ psi(x'_j)/phi(x'_j) + psi(x_j)/phi(x_j)
//!                       - (int psi dx_k)(x_j) / (int phi dx_k)(x_j) ]
//! DG psi = mean(f^2 psi/phi) - 2 mean(f) mean(f psi/phi) + mean(psi/phi) mean(f)^2
//! DT_k psi = DF psi / G - T_k DG psi / G
//! ```
//!
//! All sample means run over the existing evaluations; no new model calls.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::densities::ProductDensity;
use crate::error::{Error, Result};
use crate::numerics::{pairwise_sum, pairwise_sum_by};
use crate::partition::{compute_floors, estimate_volumes, Partition};
use crate::sobol::{total_indices, IndexVector, SampleSet};

/// Which index a perturbation direction was optimized for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Target {
    TotalIndex(usize),
    NormalizedIndex(usize),
}

impl Target {
    pub fn variable(&self) -> usize {
        match *self {
            Target::TotalIndex(k) | Target::NormalizedIndex(k) => k,
        }
    }

    pub fn is_total(&self) -> bool {
        matches!(self, Target::TotalIndex(_))
    }

    /// Order used for tie-breaks: by variable, total before normalized.
    pub fn rank(&self) -> (usize, u8) {
        match *self {
            Target::TotalIndex(k) => (k, 0),
            Target::NormalizedIndex(k) => (k, 1),
        }
    }

    /// Short label such as `T1` or `N3` (1-based).
    pub fn label(&self) -> String {
        match *self {
            Target::TotalIndex(k) => format!("T{}", k + 1),
            Target::NormalizedIndex(k) => format!("N{}", k + 1),
        }
    }

    /// Parses labels produced by [`label`](Self::label).
    pub fn parse(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("bad target `{s}`, expected e.g. T1 or N2"));
        let (kind, num) = s.split_at(s.char_indices().nth(1).map_or(s.len(), |(i, _)| i));
        let k: usize = num.parse().map_err(|_| bad())?;
        if k == 0 {
            return Err(bad());
        }
        match kind {
            "T" | "t" => Ok(Target::TotalIndex(k - 1)),
            "N" | "n" => Ok(Target::NormalizedIndex(k - 1)),
            _ => Err(bad()),
        }
    }
}

impl Serialize for Target {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.label())
    }
}

impl<'de> Deserialize<'de> for Target {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Target::parse(&s).map_err(serde::de::Error::custom)
    }
}

/// Per-sample geometry of a partition relative to a sample set: which box
/// every `X0` and pick-freeze row falls in, which boxes each axis line
/// through an `X0` row crosses, and the complement marginals at `X0`.
#[derive(Debug, Clone)]
pub struct PerturbationBasis {
    partition: Partition,
    floors: Vec<f64>,
    volumes: Vec<f64>,
    box_x0: Vec<usize>,
    box_xk: Vec<Vec<usize>>,
    /// CSR layout per variable: boxes crossed by the `k`-line through row `j`
    /// are `line_boxes[k][line_start[k][j]..line_start[k][j + 1]]`.
    line_start: Vec<Vec<usize>>,
    line_boxes: Vec<Vec<u32>>,
    complement: Vec<Vec<f64>>,
}

impl PerturbationBasis {
    /// `partition` must have been built from `s.x0()`.
    pub fn new(s: &SampleSet, partition: Partition, density: &ProductDensity) -> Result<Self> {
        let (n, p) = (s.n(), s.p());
        if density.dim() != p {
            return Err(Error::Dimension {
                expected: p,
                got: density.dim(),
            });
        }
        if partition.assignment().len() != n {
            return Err(Error::InvalidArgument(
                "partition was not built from this sample set".into(),
            ));
        }
        let floors = compute_floors(&partition, density);
        let volumes = estimate_volumes(&partition, s.phi0())?;
        let box_x0 = partition.assignment().to_vec();
        let box_xk: Vec<Vec<usize>> = (0..p)
            .into_par_iter()
            .map(|k| s.xk(k).iter_rows().map(|r| partition.locate(r)).collect())
            .collect();
        let (line_start, line_boxes): (Vec<_>, Vec<_>) = (0..p)
            .into_par_iter()
            .map(|k| {
                let mut start = Vec::with_capacity(n + 1);
                let mut boxes = Vec::with_capacity(n);
                start.push(0);
                for row in s.x0().iter_rows() {
                    partition.for_each_on_line(row, k, |b| boxes.push(b as u32));
                    start.push(boxes.len());
                }
                (start, boxes)
            })
            .unzip();
        let complement: Vec<Vec<f64>> = (0..p)
            .into_par_iter()
            .map(|k| {
                s.x0()
                    .iter_rows()
                    .map(|r| density.complement_marginal_one(r, k))
                    .collect()
            })
            .collect();
        Ok(Self {
            partition,
            floors,
            volumes,
            box_x0,
            box_xk,
            line_start,
            line_boxes,
            complement,
        })
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn len(&self) -> usize {
        self.partition.len()
    }

    pub fn is_empty(&self) -> bool {
        self.partition.is_empty()
    }

    /// Density infimum on each box.
    pub fn floors(&self) -> &[f64] {
        &self.floors
    }

    /// Monte Carlo box volumes.
    pub fn volumes(&self) -> &[f64] {
        &self.volumes
    }

    /// Floors with empty boxes zeroed: the feasible magnitudes `|a_i| <= b_i`.
    pub fn effective_floors(&self) -> Vec<f64> {
        self.floors
            .iter()
            .zip(&self.volumes)
            .map(|(&b, &v)| if v > 0.0 { b } else { 0.0 })
            .collect()
    }

    pub fn box_of_x0(&self, j: usize) -> usize {
        self.box_x0[j]
    }

    pub fn box_of_xk(&self, k: usize, j: usize) -> usize {
        self.box_xk[k][j]
    }

    /// Boxes crossed by the axis-`k` line through `X0` row `j`.
    pub fn line(&self, k: usize, j: usize) -> impl Iterator<Item = usize> + '_ {
        let (a, b) = (self.line_start[k][j], self.line_start[k][j + 1]);
        self.line_boxes[k][a..b].iter().map(|&b| b as usize)
    }

    /// `int phi dx_k` at `X0` row `j`.
    pub fn complement(&self, k: usize, j: usize) -> f64 {
        self.complement[k][j]
    }

    /// `int psi dx_k` at `X0` row `j` for `psi = sum_i c_i psi_i`.
    pub(crate) fn line_integral(&self, coeffs: &[f64], k: usize, j: usize) -> f64 {
        let boxes = self.partition.boxes();
        self.line(k, j)
            .map(|b| coeffs[b] * boxes[b].interval(k).len())
            .sum()
    }
}

/// Derivatives of every total index (and normalized index) along every box indicator.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeTable {
    /// `dt[k][i]`: derivative of `T_k` along `psi_i`.
    pub dt: Vec<Vec<f64>>,
    /// `dn[k][i]`: derivative of the normalized index `k` along `psi_i`.
    pub dn: Vec<Vec<f64>>,
    /// Plug-in variance estimate.
    pub g_hat: f64,
    pub t_hat: IndexVector,
}

impl DerivativeTable {
    /// Derivative of `T_k` along `sum_i c_i psi_i`, by linearity.
    pub fn along(&self, k: usize, coeffs: &[f64]) -> f64 {
        self.dt[k].iter().zip(coeffs).map(|(d, c)| d * c).sum()
    }

    /// Row of the table for `target`.
    pub fn row(&self, target: Target) -> &[f64] {
        match target {
            Target::TotalIndex(k) => &self.dt[k],
            Target::NormalizedIndex(k) => &self.dn[k],
        }
    }
}

fn plug_in_moments(f0: &[f64], rows: &[usize]) -> (f64, f64) {
    let m = rows.len() as f64;
    let m1 = pairwise_sum_by(rows.len(), |t| f0[rows[t]]) / m;
    let m2 = pairwise_sum_by(rows.len(), |t| f0[rows[t]] * f0[rows[t]]) / m;
    (m1, m2)
}

/// Estimates `DT_k(phi) psi_i` for every variable `k` and box `i`.
pub fn derivative_table(s: &SampleSet, basis: &PerturbationBasis) -> Result<DerivativeTable> {
    let (n, p, m) = (s.n(), s.p(), basis.len());
    let nf = n as f64;
    let t_hat = total_indices(s)?;
    let all: Vec<usize> = (0..n).collect();
    let (m1, m2) = plug_in_moments(s.f0(), &all);
    let g_hat = m2 - m1 * m1;
    if !(g_hat > 0.0) {
        return Err(Error::ConstantModel);
    }

    // Per-box sums for DG, gathered then pairwise-summed.
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); m];
    for j in 0..n {
        members[basis.box_of_x0(j)].push(j);
    }
    let (f0, phi0) = (s.f0(), s.phi0());
    let dg: Vec<f64> = members
        .iter()
        .map(|rows| {
            let sum_f2 = pairwise_sum_by(rows.len(), |t| f0[rows[t]] * f0[rows[t]] / phi0[rows[t]]) / nf;
            let sum_f = pairwise_sum_by(rows.len(), |t| f0[rows[t]] / phi0[rows[t]]) / nf;
            let sum_1 = pairwise_sum_by(rows.len(), |t| 1.0 / phi0[rows[t]]) / nf;
            sum_f2 - 2.0 * m1 * sum_f + sum_1 * m1 * m1
        })
        .collect();

    let boxes = basis.partition().boxes();
    let dt: Vec<Vec<f64>> = (0..p)
        .into_par_iter()
        .map(|k| {
            let (fk, phik) = (s.fk(k), s.phik(k));
            let mut buckets: Vec<Vec<f64>> = vec![Vec::new(); m];
            for j in 0..n {
                let d = f0[j] - fk[j];
                let half_sq = 0.5 * d * d;
                buckets[basis.box_of_xk(k, j)].push(half_sq / phik[j]);
                buckets[basis.box_of_x0(j)].push(half_sq / phi0[j]);
                let comp = basis.complement(k, j);
                for b in basis.line(k, j) {
                    buckets[b].push(-half_sq * boxes[b].interval(k).len() / comp);
                }
            }
            buckets
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    let df = pairwise_sum(v) / nf;
                    df / g_hat - t_hat[k] * dg[i] / g_hat
                })
                .collect()
        })
        .collect();
    let dn = normalized_derivative_table(&dt, &t_hat)?;
    Ok(DerivativeTable {
        dt,
        dn,
        g_hat,
        t_hat,
    })
}

/// Direct sample-sum estimate of `DT_k(phi) psi` for `psi = sum_i c_i psi_i`,
/// over a subset of rows. This evaluates the same estimator as
/// [`derivative_table`] without going through the per-box table.
pub fn derivative_on_rows(
    s: &SampleSet,
    basis: &PerturbationBasis,
    coeffs: &[f64],
    rows: &[usize],
) -> Result<Vec<f64>> {
    let len = rows.len();
    let m = len as f64;
    let (f0, phi0) = (s.f0(), s.phi0());
    let (m1, m2) = plug_in_moments(f0, rows);
    let g = m2 - m1 * m1;
    if !(g > 0.0) {
        return Err(Error::ConstantModel);
    }
    let ratio0 = |j: usize| coeffs[basis.box_of_x0(j)] / phi0[j];
    let dg = pairwise_sum_by(len, |t| f0[rows[t]] * f0[rows[t]] * ratio0(rows[t])) / m
        - 2.0 * m1 * pairwise_sum_by(len, |t| f0[rows[t]] * ratio0(rows[t])) / m
        + pairwise_sum_by(len, |t| ratio0(rows[t])) / m * m1 * m1;
    Ok((0..s.p())
        .map(|k| {
            let (fk, phik) = (s.fk(k), s.phik(k));
            let half_sq = |j: usize| 0.5 * (f0[j] - fk[j]).powi(2);
            let f = pairwise_sum_by(len, |t| half_sq(rows[t])) / m;
            let df = pairwise_sum_by(len, |t| {
                let j = rows[t];
                half_sq(j)
                    * (coeffs[basis.box_of_xk(k, j)] / phik[j] + ratio0(j)
                        - basis.line_integral(coeffs, k, j) / basis.complement(k, j))
            }) / m;
            df / g - (f / g) * dg / g
        })
        .collect())
}

/// Quotient rule for `T_k / sum_j T_j`:
/// `dN[k][i] = (S dT[k][i] - T_k sum_j dT[j][i]) / S^2`.
pub fn normalized_derivative_table(dt: &[Vec<f64>], t: &IndexVector) -> Result<Vec<Vec<f64>>> {
    let total = t.sum();
    if !(total > 0.0) {
        return Err(Error::ZeroIndexSum);
    }
    let m = dt.first().map_or(0, Vec::len);
    let col_sums: Vec<f64> = (0..m)
        .map(|i| pairwise_sum_by(dt.len(), |k| dt[k][i]))
        .collect();
    Ok(dt
        .iter()
        .enumerate()
        .map(|(k, row)| {
            row.iter()
                .zip(&col_sums)
                .map(|(d, cs)| (total * d - t[k] * cs) / (total * total))
                .collect()
        })
        .collect())
}

/// Coefficients `a` of a perturbation `sum_i a_i psi_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationDirection {
    pub a: Vec<f64>,
    pub target: Target,
    /// `max |d . a|` over the feasible set, i.e. `sum_i |d_i| b_i`.
    pub norm_value: f64,
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Maximizer of `|d . a|` subject to `|a_i| <= b_i`: `a_i = sign(d_i) b_i`
/// with `sign(0) = 0`.
pub fn optimal_direction(target: Target, d_row: &[f64], floors: &[f64]) -> PerturbationDirection {
    let a: Vec<f64> = d_row.iter().zip(floors).map(|(&d, &b)| sign(d) * b).collect();
    let norm_value = d_row.iter().zip(floors).map(|(d, b)| d.abs() * b).sum();
    PerturbationDirection {
        a,
        target,
        norm_value,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::Linear3;
    use crate::partition::fit_tree;
    use crate::sobol::build_sample_set;
    use proptest::prelude::*;

    fn linear_setup(n: usize, min_leaf: usize) -> (SampleSet, PerturbationBasis) {
        let d = ProductDensity::unit_cube(3);
        let s = build_sample_set(&d, &Linear3, n, 21).unwrap();
        let part = fit_tree(s.x0(), s.f0(), &d.support(), min_leaf, &[0, 1, 2]).unwrap();
        let basis = PerturbationBasis::new(&s, part, &d).unwrap();
        (s, basis)
    }

    #[test]
    fn target_labels() {
        for t in [Target::TotalIndex(0), Target::NormalizedIndex(11)] {
            assert_eq!(Target::parse(&t.label()).unwrap(), t);
        }
        assert!(Target::parse("X1").is_err());
        assert!(Target::parse("T0").is_err());
        assert_eq!(serde_json::to_string(&Target::TotalIndex(2)).unwrap(), "\"T3\"");
    }

    #[test]
    fn scale_direction_has_zero_derivative() {
        let d = ProductDensity::unit_cube(3);
        let s = build_sample_set(&d, &Linear3, 2000, 5).unwrap();
        let part = Partition::whole(d.support(), s.x0());
        let basis = PerturbationBasis::new(&s, part, &d).unwrap();
        let table = derivative_table(&s, &basis).unwrap();
        for k in 0..3 {
            assert!(table.dt[k][0].abs() < 1e-12, "{}", table.dt[k][0]);
        }
    }

    #[test]
    fn table_matches_direct_route_and_is_linear() {
        let (s, basis) = linear_setup(3000, 100);
        let table = derivative_table(&s, &basis).unwrap();
        let m = basis.len();
        let all: Vec<usize> = (0..s.n()).collect();
        for i in [0, m / 2, m - 1] {
            let mut e = vec![0.0; m];
            e[i] = 1.0;
            let direct = derivative_on_rows(&s, &basis, &e, &all).unwrap();
            for k in 0..3 {
                assert!((direct[k] - table.dt[k][i]).abs() < 1e-12);
            }
        }
        let (i, j) = (0, m - 1);
        let mut both = vec![0.0; m];
        both[i] = 1.0;
        both[j] = 1.0;
        for k in 0..3 {
            assert_eq!(table.along(k, &both), table.dt[k][i] + table.dt[k][j]);
        }
        let direct = derivative_on_rows(&s, &basis, &both, &all).unwrap();
        for k in 0..3 {
            assert!((direct[k] - (table.dt[k][i] + table.dt[k][j])).abs() < 1e-12);
        }
    }

    #[test]
    fn normalized_columns_sum_to_zero() {
        let (s, basis) = linear_setup(3000, 50);
        let table = derivative_table(&s, &basis).unwrap();
        for i in 0..basis.len() {
            let col: f64 = (0..3).map(|k| table.dn[k][i]).sum();
            assert!(col.abs() < 1e-10);
        }
    }

    #[test]
    fn normalized_derivative_special_cases() {
        let t = IndexVector(vec![0.7]);
        let dn = normalized_derivative_table(&[vec![0.3, -0.2]], &t).unwrap();
        assert!(dn[0].iter().all(|v| v.abs() < 1e-15));

        let t = IndexVector(vec![0.5, 0.3, 0.1]);
        let c = 0.37;
        let dt: Vec<Vec<f64>> = t.values().iter().map(|tk| vec![c * tk, 1.0]).collect();
        let dn = normalized_derivative_table(&dt, &t).unwrap();
        for row in &dn {
            assert!(row[0].abs() < 1e-12);
        }
        assert!(normalized_derivative_table(&dt, &IndexVector(vec![0.0; 3])).is_err());
    }

    #[test]
    fn optimal_direction_examples() {
        let dir = optimal_direction(Target::TotalIndex(0), &[1.0, -2.0], &[1.0, 1.0]);
        assert_eq!(dir.a, vec![1.0, -1.0]);
        assert_eq!(dir.norm_value, 3.0);
        let dir = optimal_direction(Target::TotalIndex(0), &[0.5, -0.5], &[0.0, 2.0]);
        assert_eq!(dir.a, vec![0.0, -2.0]);
        assert_eq!(dir.norm_value, 1.0);
        let dir = optimal_direction(Target::TotalIndex(0), &[0.0, -0.0], &[1.0, 1.0]);
        assert_eq!(dir.a, vec![0.0, 0.0]);
    }

    /// Exhaustive oracle over all `a_i in {-b_i, 0, b_i}`.
    fn enumerate_best(d: &[f64], b: &[f64]) -> f64 {
        let m = d.len();
        let mut best: f64 = 0.0;
        for code in 0..3usize.pow(m as u32) {
            let mut c = code;
            let mut val = 0.0;
            for i in 0..m {
                let s = (c % 3) as f64 - 1.0;
                c /= 3;
                val += d[i] * s * b[i];
            }
            best = best.max(val.abs());
        }
        best
    }

    proptest! {
        #[test]
        fn optimal_direction_matches_enumeration(
            pairs in prop::collection::vec((-5.0f64..5.0, 0.0f64..3.0), 1..8)
        ) {
            let (d, b): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let dir = optimal_direction(Target::TotalIndex(0), &d, &b);
            let value: f64 = d.iter().zip(&dir.a).map(|(x, y)| x * y).sum();
            let best = enumerate_best(&d, &b);
            prop_assert!((value.abs() - best).abs() <= 1e-12 * best.max(1.0));
            prop_assert!((dir.norm_value - best).abs() <= 1e-12 * best.max(1.0));
            for (a, b) in dir.a.iter().zip(&b) {
                prop_assert!(a.abs() <= *b);
            }
        }

        #[test]
        fn optimal_direction_beats_random_feasible(
            pairs in prop::collection::vec((-5.0f64..5.0, 0.0f64..3.0), 1..12),
            scales in prop::collection::vec(-1.0f64..1.0, 12)
        ) {
            let (d, b): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let dir = optimal_direction(Target::NormalizedIndex(1), &d, &b);
            let opt: f64 = d.iter().zip(&dir.a).map(|(x, y)| x * y).sum::<f64>().abs();
            let other: f64 = d.iter().zip(&b).zip(&scales).map(|((x, bi), s)| x * bi * s).sum::<f64>().abs();
            prop_assert!(opt + 1e-12 >= other);
        }
    }
}
