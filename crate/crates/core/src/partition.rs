//! Hyperrectangle partitions of the input domain.
//!
//! Partitions are built by greedy CART regression-tree splitting of
//! `(X0, F0)` under a minimum-leaf-size constraint, optionally refined at
//! per-box empirical quantiles of one coordinate. Boxes are closed; a point
//! on an interior face belongs to the box on its upper side (left-closed,
//! right-open cells, with the last cell along each split closed on the right).

use rayon::prelude::*;

use crate::densities::{HyperRect, Interval, ProductDensity};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::numerics::pairwise_sum_by;

/// An axis-aligned cut: points with `x[dim] < threshold` go left.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitRule {
    pub dim: usize,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Leaf(usize),
    /// Children are ordered along `dim`; child `c` covers
    /// `[thresholds[c - 1], thresholds[c])`.
    Split {
        dim: usize,
        thresholds: Vec<f64>,
        children: Vec<Node>,
    },
}

impl Node {
    fn child_for(thresholds: &[f64], v: f64) -> usize {
        thresholds.partition_point(|&t| t <= v)
    }
}

/// A set of disjoint boxes tiling the domain, with the box index of every `X0` row.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    root: Node,
    domain: HyperRect,
    boxes: Vec<HyperRect>,
    assignment: Vec<usize>,
}

impl Partition {
    fn from_tree(mut root: Node, domain: HyperRect, x0: &Matrix) -> Self {
        let mut boxes = Vec::new();
        number_leaves(&mut root, domain.clone(), &mut boxes);
        let mut part = Self {
            root,
            domain,
            boxes,
            assignment: Vec::new(),
        };
        part.assignment = x0.iter_rows().map(|r| part.locate(r)).collect();
        part
    }

    /// The trivial partition with the whole domain as its only box.
    pub fn whole(domain: HyperRect, x0: &Matrix) -> Self {
        Self::from_tree(Node::Leaf(0), domain, x0)
    }

    /// Tensor-grid partition from increasing per-dimension cut lists.
    pub fn from_grid(domain: HyperRect, cuts: &[Vec<f64>], x0: &Matrix) -> Result<Self> {
        if cuts.len() != domain.dim() {
            return Err(Error::Dimension {
                expected: domain.dim(),
                got: cuts.len(),
            });
        }
        fn build(dim: usize, cuts: &[Vec<f64>]) -> Node {
            if dim == cuts.len() {
                return Node::Leaf(0);
            }
            if cuts[dim].is_empty() {
                return build(dim + 1, cuts);
            }
            Node::Split {
                dim,
                thresholds: cuts[dim].clone(),
                children: (0..=cuts[dim].len()).map(|_| build(dim + 1, cuts)).collect(),
            }
        }
        for (d, c) in cuts.iter().enumerate() {
            let iv = domain.interval(d);
            if c.windows(2).any(|w| w[0] >= w[1]) || c.iter().any(|&t| t <= iv.lo() || t >= iv.hi()) {
                return Err(Error::InvalidArgument(format!(
                    "cuts for dim {d} must be increasing and strictly inside the domain"
                )));
            }
        }
        Ok(Self::from_tree(build(0, cuts), domain, x0))
    }

    pub fn len(&self) -> usize {
        self.boxes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    pub fn boxes(&self) -> &[HyperRect] {
        &self.boxes
    }

    pub fn domain(&self) -> &HyperRect {
        &self.domain
    }

    /// Box index of each `X0` row used to build the partition.
    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    /// Number of `X0` rows in each box.
    pub fn counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.len()];
        for &b in &self.assignment {
            c[b] += 1;
        }
        c
    }

    /// Index of the box containing `x`.
    pub fn locate(&self, x: &[f64]) -> usize {
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf(i) => return *i,
                Node::Split {
                    dim,
                    thresholds,
                    children,
                } => node = &children[Node::child_for(thresholds, x[*dim])],
            }
        }
    }

    /// Calls `visit` for every box met by the line through `x` parallel to
    /// axis `k`, i.e. every box whose `~k`-projection contains `x_{~k}`.
    pub fn for_each_on_line(&self, x: &[f64], k: usize, mut visit: impl FnMut(usize)) {
        fn walk(node: &Node, x: &[f64], k: usize, visit: &mut dyn FnMut(usize)) {
            match node {
                Node::Leaf(i) => visit(*i),
                Node::Split {
                    dim,
                    thresholds,
                    children,
                } => {
                    if *dim == k {
                        for c in children {
                            walk(c, x, k, visit);
                        }
                    } else {
                        walk(&children[Node::child_for(thresholds, x[*dim])], x, k, visit);
                    }
                }
            }
        }
        walk(&self.root, x, k, &mut visit);
    }

    /// All cuts in pre-order (root first).
    pub fn splits(&self) -> Vec<SplitRule> {
        fn walk(node: &Node, out: &mut Vec<SplitRule>) {
            if let Node::Split {
                dim,
                thresholds,
                children,
            } = node
            {
                out.extend(thresholds.iter().map(|&threshold| SplitRule { dim: *dim, threshold }));
                for c in children {
                    walk(c, out);
                }
            }
        }
        let mut out = Vec::new();
        walk(&self.root, &mut out);
        out
    }
}

fn number_leaves(node: &mut Node, rect: HyperRect, boxes: &mut Vec<HyperRect>) {
    match node {
        Node::Leaf(i) => {
            *i = boxes.len();
            boxes.push(rect);
        }
        Node::Split {
            dim,
            thresholds,
            children,
        } => {
            let iv = rect.interval(*dim);
            let mut lo = iv.lo();
            for (c, child) in children.iter_mut().enumerate() {
                let hi = thresholds.get(c).copied().unwrap_or(iv.hi());
                let mut sub = rect.clone();
                sub.set_interval(*dim, Interval::new(lo, hi).expect("thresholds strictly increasing"));
                number_leaves(child, sub, boxes);
                lo = hi;
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    gain: f64,
    threshold: f64,
}

/// Best admissible split of `rows` along `dim`, scanning thresholds in increasing order.
fn best_split_in_dim(
    x0: &Matrix,
    y: &[f64],
    mean: f64,
    rows: &[usize],
    dim: usize,
    min_leaf: usize,
    rect: &HyperRect,
) -> Option<Candidate> {
    let m = rows.len();
    let mut order: Vec<(f64, f64)> = rows.iter().map(|&i| (x0.get(i, dim), y[i] - mean)).collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = order.iter().map(|o| o.1).sum();
    let iv = rect.interval(dim);
    let mut best: Option<Candidate> = None;
    let mut left = 0.0;
    for t in 1..m {
        left += order[t - 1].1;
        if t < min_leaf || m - t < min_leaf {
            continue;
        }
        let (a, b) = (order[t - 1].0, order[t].0);
        if !(a < b) {
            continue;
        }
        let threshold = 0.5 * (a + b);
        if !(a < threshold && threshold <= b && iv.lo() < threshold && threshold < iv.hi()) {
            continue;
        }
        let right = total - left;
        let gain = left * left / t as f64 + right * right / (m - t) as f64 - total * total / m as f64;
        if best.is_none_or(|c| gain > c.gain) {
            best = Some(Candidate { gain, threshold });
        }
    }
    best
}

/// Greedy CART regression tree on `(x0, f0)` with at least `min_leaf` rows per
/// leaf, splitting only along `allowed_dims`. Leaves become boxes clipped to
/// `domain`. Fewer than `2 * min_leaf` rows yields the single-box partition.
///
/// Ties between equally good splits go to the lowest dimension, then the
/// smallest threshold.
pub fn fit_tree(
    x0: &Matrix,
    f0: &[f64],
    domain: &HyperRect,
    min_leaf: usize,
    allowed_dims: &[usize],
) -> Result<Partition> {
    let p = x0.cols();
    if domain.dim() != p {
        return Err(Error::Dimension {
            expected: p,
            got: domain.dim(),
        });
    }
    if f0.len() != x0.rows() {
        return Err(Error::Dimension {
            expected: x0.rows(),
            got: f0.len(),
        });
    }
    if min_leaf == 0 {
        return Err(Error::InvalidArgument("minimum leaf size must be positive".into()));
    }
    if allowed_dims.is_empty() {
        return Err(Error::InvalidArgument("no dimensions allowed for splitting".into()));
    }
    if let Some(&d) = allowed_dims.iter().find(|&&d| d >= p) {
        return Err(Error::Index { index: d, dim: p });
    }
    let mut dims = allowed_dims.to_vec();
    dims.sort_unstable();
    dims.dedup();

    fn grow(
        x0: &Matrix,
        y: &[f64],
        rows: Vec<usize>,
        rect: HyperRect,
        min_leaf: usize,
        dims: &[usize],
    ) -> Node {
        let m = rows.len();
        if m < 2 * min_leaf {
            return Node::Leaf(0);
        }
        // Center responses to keep the gain formula well conditioned.
        let mean = pairwise_sum_by(m, |t| y[rows[t]]) / m as f64;
        let sse = pairwise_sum_by(m, |t| (y[rows[t]] - mean).powi(2));
        if !(sse > 0.0) {
            return Node::Leaf(0);
        }
        let per_dim: Vec<Option<Candidate>> = dims
            .par_iter()
            .map(|&d| best_split_in_dim(x0, y, mean, &rows, d, min_leaf, &rect))
            .collect();
        let mut best: Option<(usize, Candidate)> = None;
        for (&d, cand) in dims.iter().zip(per_dim) {
            if let Some(c) = cand {
                if best.is_none_or(|(_, b)| c.gain > b.gain) {
                    best = Some((d, c));
                }
            }
        }
        match best {
            Some((dim, c)) if c.gain > 1e-12 * sse => {
                let (left, right): (Vec<usize>, Vec<usize>) =
                    rows.into_iter().partition(|&i| x0.get(i, dim) < c.threshold);
                let iv = rect.interval(dim);
                let mut lrect = rect.clone();
                lrect.set_interval(dim, Interval::new(iv.lo(), c.threshold).expect("inside"));
                let mut rrect = rect;
                rrect.set_interval(dim, Interval::new(c.threshold, iv.hi()).expect("inside"));
                let (l, r) = (
                    grow(x0, y, left, lrect, min_leaf, dims),
                    grow(x0, y, right, rrect, min_leaf, dims),
                );
                Node::Split {
                    dim,
                    thresholds: vec![c.threshold],
                    children: vec![l, r],
                }
            }
            _ => Node::Leaf(0),
        }
    }

    let rows: Vec<usize> = (0..x0.rows()).collect();
    let root = grow(x0, f0, rows, domain.clone(), min_leaf, &dims);
    Ok(Partition::from_tree(root, domain.clone(), x0))
}

/// Splits every box into up to `q` boxes at the empirical `1/q, ..., (q-1)/q`
/// quantiles of coordinate `dim` among the `X0` rows inside it. Each cut is
/// the midpoint of the two order statistics bracketing the quantile position;
/// duplicate cuts merge cells. Boxes with fewer than `q` rows stay whole.
pub fn refine_by_quantiles(part: &Partition, x0: &Matrix, dim: usize, q: usize) -> Result<Partition> {
    if q < 2 {
        return Err(Error::InvalidArgument(format!("quantile count must be >= 2, got {q}")));
    }
    if dim >= x0.cols() {
        return Err(Error::Index {
            index: dim,
            dim: x0.cols(),
        });
    }
    let mut members: Vec<Vec<f64>> = vec![Vec::new(); part.len()];
    for row in x0.iter_rows() {
        members[part.locate(row)].push(row[dim]);
    }
    let cuts: Vec<Vec<f64>> = members
        .into_iter()
        .enumerate()
        .map(|(b, mut v)| {
            let c = v.len();
            if c < q {
                return Vec::new();
            }
            v.sort_by(f64::total_cmp);
            let iv = part.boxes[b].interval(dim);
            let mut out: Vec<f64> = Vec::with_capacity(q - 1);
            for level in 1..q {
                let idx = ((c * level) as f64 / q as f64).round() as usize;
                let idx = idx.clamp(1, c - 1);
                let (a, b) = (v[idx - 1], v[idx]);
                let t = 0.5 * (a + b);
                let fresh = out.last().is_none_or(|&last| t > last);
                if a < t && t <= b && iv.lo() < t && t < iv.hi() && fresh {
                    out.push(t);
                }
            }
            out
        })
        .collect();

    fn rewrite(node: &mut Node, dim: usize, cuts: &[Vec<f64>]) {
        match node {
            Node::Leaf(i) => {
                let c = &cuts[*i];
                if !c.is_empty() {
                    *node = Node::Split {
                        dim,
                        thresholds: c.clone(),
                        children: vec![Node::Leaf(0); c.len() + 1],
                    };
                }
            }
            Node::Split { children, .. } => {
                for ch in children {
                    rewrite(ch, dim, cuts);
                }
            }
        }
    }
    let mut root = part.root.clone();
    rewrite(&mut root, dim, &cuts);
    Ok(Partition::from_tree(root, part.domain.clone(), x0))
}

/// Monte Carlo box volumes `(1/n) sum_j 1{x_j in R_i} / phi(x_j)` over the
/// rows the partition was built from. Empty boxes get volume 0.
pub fn estimate_volumes(part: &Partition, phi0: &[f64]) -> Result<Vec<f64>> {
    let n = part.assignment.len();
    if phi0.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: phi0.len(),
        });
    }
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); part.len()];
    for (j, &b) in part.assignment.iter().enumerate() {
        members[b].push(j);
    }
    Ok(members
        .iter()
        .map(|rows| pairwise_sum_by(rows.len(), |t| 1.0 / phi0[rows[t]]) / n as f64)
        .collect())
}

/// Infimum of the density over each closed box.
pub fn compute_floors(part: &Partition, density: &ProductDensity) -> Vec<f64> {
    part.boxes.iter().map(|b| density.inf_on_box(b)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::densities::Marginal;

    fn unit(p: usize) -> (ProductDensity, HyperRect) {
        let d = ProductDensity::unit_cube(p);
        let s = d.support();
        (d, s)
    }

    fn exact_volume_sum(part: &Partition) -> f64 {
        part.boxes().iter().map(HyperRect::volume).sum()
    }

    #[test]
    fn too_few_rows_gives_single_box() {
        let (d, dom) = unit(2);
        let x = d.sample(99, 1);
        let y: Vec<f64> = x.iter_rows().map(|r| r[0]).collect();
        let part = fit_tree(&x, &y, &dom, 50, &[0, 1]).unwrap();
        assert_eq!(part.len(), 1);
    }

    #[test]
    fn exactly_two_min_leaves() {
        let (d, dom) = unit(2);
        let x = d.sample(100, 2);
        let y: Vec<f64> = x.iter_rows().map(|r| r[0] + r[1]).collect();
        let part = fit_tree(&x, &y, &dom, 50, &[0, 1]).unwrap();
        assert!(part.len() <= 2);
        assert!(part.counts().iter().all(|&c| c >= 50));
    }

    /// Independent oracle: exhaustive SSE over every midpoint threshold.
    fn brute_force_first_split(x: &Matrix, y: &[f64], min_leaf: usize) -> (usize, f64) {
        let n = x.rows();
        let sse = |idx: &[usize]| {
            let m = idx.iter().map(|&i| y[i]).sum::<f64>() / idx.len() as f64;
            idx.iter().map(|&i| (y[i] - m).powi(2)).sum::<f64>()
        };
        let mut best = (f64::INFINITY, 0, 0.0);
        for d in 0..x.cols() {
            let mut vals: Vec<f64> = x.column(d).collect();
            vals.sort_by(f64::total_cmp);
            for w in vals.windows(2) {
                let t = 0.5 * (w[0] + w[1]);
                let (l, r): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| x.get(i, d) < t);
                if l.len() < min_leaf || r.len() < min_leaf {
                    continue;
                }
                let s = sse(&l) + sse(&r);
                if s < best.0 - 1e-9 {
                    best = (s, d, t);
                }
            }
        }
        (best.1, best.2)
    }

    #[test]
    fn step_function_first_split() {
        let (d, dom) = unit(2);
        let x = d.sample(1000, 3);
        let y: Vec<f64> = x.iter_rows().map(|r| (r[0] - 0.5).signum()).collect();
        let part = fit_tree(&x, &y, &dom, 50, &[0, 1]).unwrap();
        let first = part.splits()[0];
        assert_eq!(first.dim, 0);
        assert!((first.threshold - 0.5).abs() < 0.05);
        let (bd, bt) = brute_force_first_split(&x, &y, 50);
        assert_eq!(bd, first.dim);
        assert!((bt - first.threshold).abs() < 1e-12);
    }

    #[test]
    fn tiling_and_occupancy() {
        let d = ProductDensity::new(vec![
            Marginal::uniform(-1.0, 2.0).unwrap(),
            Marginal::beta(2.0, 2.0, 0.0, 1.0).unwrap(),
            Marginal::uniform(5.0, 6.0).unwrap(),
        ])
        .unwrap();
        let dom = d.support();
        let x = d.sample(4000, 5);
        let y: Vec<f64> = x.iter_rows().map(|r| r[0] * r[1] + (3.0 * r[2]).sin()).collect();
        let part = fit_tree(&x, &y, &dom, 50, &[0, 1, 2]).unwrap();
        assert!(part.len() > 4);
        assert!(part.counts().iter().all(|&c| c >= 50));
        assert!((exact_volume_sum(&part) - dom.volume()).abs() < 1e-12 * dom.volume());
        for (row, &b) in x.iter_rows().zip(part.assignment()) {
            assert!(part.boxes()[b].contains(row));
            let interior_hits = part
                .boxes()
                .iter()
                .filter(|bx| bx.intervals().iter().zip(row).all(|(iv, &v)| iv.lo() < v && v < iv.hi()))
                .count();
            assert_eq!(interior_hits, 1);
        }
        let again = fit_tree(&x, &y, &dom, 50, &[0, 1, 2]).unwrap();
        assert_eq!(part, again);
    }

    #[test]
    fn thread_count_does_not_change_tree() {
        let (d, dom) = unit(4);
        let x = d.sample(3000, 8);
        let y: Vec<f64> = x.iter_rows().map(|r| r[0] * r[1] + r[2] * r[2] - r[3]).collect();
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let a = one.install(|| fit_tree(&x, &y, &dom, 40, &[0, 1, 2, 3]).unwrap());
        let b = fit_tree(&x, &y, &dom, 40, &[0, 1, 2, 3]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn allowed_dims_are_respected() {
        let (d, dom) = unit(3);
        let x = d.sample(2000, 4);
        let y: Vec<f64> = x.iter_rows().map(|r| r[0] + 5.0 * r[2]).collect();
        let part = fit_tree(&x, &y, &dom, 50, &[0, 1]).unwrap();
        assert!(part.splits().iter().all(|s| s.dim != 2));
        assert!(fit_tree(&x, &y, &dom, 50, &[]).is_err());
        assert!(fit_tree(&x, &y, &dom, 50, &[3]).is_err());
    }

    #[test]
    fn quantile_refinement() {
        let (d, dom) = unit(2);
        let x = d.sample(2000, 6);
        let y: Vec<f64> = x.iter_rows().map(|r| r[0]).collect();
        let part = fit_tree(&x, &y, &dom, 200, &[0]).unwrap();
        let m = part.len();
        let refined = refine_by_quantiles(&part, &x, 1, 4).unwrap();
        assert_eq!(refined.len(), 4 * m);
        assert_eq!(refined.counts().iter().sum::<usize>(), 2000);
        assert!((exact_volume_sum(&refined) - 1.0).abs() < 1e-12);

        let halves = refine_by_quantiles(&part, &x, 1, 2).unwrap();
        let parent = part.counts();
        let kids = halves.counts();
        for (b, &c) in parent.iter().enumerate() {
            let (l, r) = (kids[2 * b], kids[2 * b + 1]);
            assert_eq!(l + r, c);
            assert!((l as i64 - r as i64).abs() <= 1, "{l} {r}");
        }
        assert!(refine_by_quantiles(&part, &x, 1, 1).is_err());
    }

    #[test]
    fn refinement_skips_small_boxes_and_duplicates() {
        let x = Matrix::from_rows(&[vec![0.1, 0.5], vec![0.2, 0.5], vec![0.3, 0.5], vec![0.4, 0.5]]);
        let dom = ProductDensity::unit_cube(2).support();
        let part = Partition::whole(dom.clone(), &x);
        // All values tie in dim 1: no usable cut.
        assert_eq!(refine_by_quantiles(&part, &x, 1, 2).unwrap().len(), 1);
        // Fewer rows than q.
        assert_eq!(refine_by_quantiles(&part, &x, 0, 5).unwrap().len(), 1);
        assert_eq!(refine_by_quantiles(&part, &x, 0, 4).unwrap().len(), 4);
    }

    #[test]
    fn volumes_on_uniform_are_counts() {
        let (d, dom) = unit(2);
        let x = d.sample(1000, 7);
        let part = Partition::from_grid(dom, &[vec![0.5], vec![0.3]], &x).unwrap();
        let vols = estimate_volumes(&part, &vec![1.0; 1000]).unwrap();
        let counts = part.counts();
        for (v, c) in vols.iter().zip(counts) {
            assert_eq!(*v, c as f64 / 1000.0);
        }
    }

    #[test]
    fn volumes_converge_to_exact() {
        let d = ProductDensity::new(vec![
            Marginal::truncated_normal(0.3, 0.4, 0.0, 1.0).unwrap(),
            Marginal::beta(2.0, 1.5, 0.0, 1.0).unwrap(),
        ])
        .unwrap();
        let x = d.sample(100_000, 9);
        let phi: Vec<f64> = x.iter_rows().map(|r| d.pdf(r).unwrap()).collect();
        let part = Partition::from_grid(d.support(), &[vec![0.4], vec![0.6]], &x).unwrap();
        let vols = estimate_volumes(&part, &phi).unwrap();
        for (v, b) in vols.iter().zip(part.boxes()) {
            assert!((v - b.volume()).abs() < 0.01, "{v} vs {}", b.volume());
        }
        // Sum estimates vol(Omega) = 1; MC std from the same draws.
        let inv: Vec<f64> = phi.iter().map(|p| 1.0 / p).collect();
        let mean = inv.iter().sum::<f64>() / 1e5;
        let sd = (inv.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 1e5).sqrt() / 1e5f64.sqrt();
        let total: f64 = vols.iter().sum();
        assert!((total - 1.0).abs() < 3.0 * sd + 1e-12, "{total} sd {sd}");
    }

    #[test]
    fn floors() {
        let (d, dom) = unit(3);
        let x = d.sample(500, 1);
        let y: Vec<f64> = x.iter_rows().map(|r| r[0]).collect();
        let part = fit_tree(&x, &y, &dom, 50, &[0, 1, 2]).unwrap();
        assert!(compute_floors(&part, &d).iter().all(|&b| b == 1.0));

        let lorenz2 = ProductDensity::new(vec![
            Marginal::uniform(9.7, 10.3).unwrap(),
            Marginal::beta(1.0, 4.0, 0.8, 1.2).unwrap(),
        ])
        .unwrap();
        let x = lorenz2.sample(1000, 2);
        let y: Vec<f64> = x.iter_rows().map(|r| r[0]).collect();
        let part = fit_tree(&x, &y, &lorenz2.support(), 50, &[0]).unwrap();
        let fl = compute_floors(&part, &lorenz2);
        assert!(fl.iter().all(|&b| b == 0.0));

        let refined = refine_by_quantiles(&part, &x, 1, 4).unwrap();
        let fl = compute_floors(&refined, &lorenz2);
        let phi: Vec<f64> = x.iter_rows().map(|r| lorenz2.pdf(r).unwrap()).collect();
        for (j, &b) in refined.assignment().iter().enumerate() {
            assert!(fl[b] <= phi[j]);
        }
        assert!(fl.iter().any(|&b| b > 0.0));
    }

    #[test]
    fn line_query_matches_projection_scan() {
        let (d, dom) = unit(3);
        let x = d.sample(3000, 12);
        let y: Vec<f64> = x.iter_rows().map(|r| r[0] * r[1] + r[2]).collect();
        let part = fit_tree(&x, &y, &dom, 60, &[0, 1, 2]).unwrap();
        for row in x.iter_rows().take(200) {
            for k in 0..3 {
                let mut hits = Vec::new();
                part.for_each_on_line(row, k, |b| hits.push(b));
                let scan: Vec<usize> = (0..part.len())
                    .filter(|&b| {
                        (0..3).filter(|&j| j != k).all(|j| {
                            let iv = part.boxes()[b].interval(j);
                            iv.lo() <= row[j] && row[j] < iv.hi()
                        })
                    })
                    .collect();
                assert_eq!(hits, scan);
                let total: f64 = hits.iter().map(|&b| part.boxes()[b].interval(k).len()).sum();
                assert!((total - 1.0).abs() < 1e-12);
            }
        }
    }
}
