//! Grid-restricted p-variation of sampled paths and 2D rho-variation of
//! covariance kernels.
//!
//! Every estimate is a supremum over sub-partitions of a finite grid, so it
//! is a lower bound for the variation of the continuous-time object.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::{CovarianceKernel, Partition};

pub const DEFAULT_EXACT_LIMIT: usize = 12;

/// Largest number of candidate partition pairs the exact 2D search visits.
pub const MAX_EXACT_CANDIDATES: u64 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Exact,
    Heuristic,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::Heuristic => "heuristic",
        }
    }
}

/// A variation estimate: `value` is the maximized sum of p-th powers, and
/// `axes` holds the maximizing grid indices (one list per axis).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariationReport {
    pub value: f64,
    pub axes: Vec<Vec<usize>>,
    pub method: Method,
}

fn check_exponent(p: f64) -> Result<()> {
    if !(p.is_finite() && p >= 1.0) {
        return Err(Error::domain(format!("exponent must be finite and at least 1, got {p}")));
    }
    Ok(())
}

/// Exact `max sum |x_{k+1} - x_k|^p` over endpoint-including sub-sequences.
pub fn p_variation_1d(seq: &[f64], p: f64) -> Result<VariationReport> {
    check_exponent(p)?;
    if seq.len() < 2 {
        return Err(Error::domain(format!("need at least two points, got {}", seq.len())));
    }
    let n = seq.len();
    let mut best = vec![0.0; n];
    let mut prev = vec![0usize; n];
    for j in 1..n {
        let (arg, val) = (0..j)
            .map(|i| (i, best[i] + (seq[j] - seq[i]).abs().powf(p)))
            .fold((0, f64::NEG_INFINITY), |acc, c| if c.1 > acc.1 { c } else { acc });
        best[j] = val;
        prev[j] = arg;
    }
    let mut axis = vec![n - 1];
    while *axis.last().unwrap() != 0 {
        axis.push(prev[*axis.last().unwrap()]);
    }
    axis.reverse();
    Ok(VariationReport { value: best[n - 1], axes: vec![axis], method: Method::Exact })
}

/// Rectangular increments of a kernel on a fixed grid.
struct RectTable {
    gram: Vec<f64>,
    m: usize,
}

impl RectTable {
    fn new(kernel: &CovarianceKernel, grid: &Partition) -> Result<Self> {
        let h = kernel.horizon();
        if (grid.horizon() - h).abs() > 1e-12 * h {
            return Err(Error::domain(format!("grid ends at {} but kernel horizon is {h}", grid.horizon())));
        }
        let t = grid.times();
        let m = t.len();
        let mut gram = vec![0.0; m * m];
        for a in 0..m {
            for b in 0..m {
                gram[a * m + b] = kernel.cov(t[a].min(h), t[b].min(h));
            }
        }
        Ok(RectTable { gram, m })
    }

    /// `|R-rect over [t_a, t_b] x [t_c, t_e]|^rho`.
    #[inline]
    fn cell(&self, a: usize, b: usize, c: usize, e: usize, rho: f64) -> f64 {
        let g = |i: usize, j: usize| self.gram[i * self.m + j];
        (g(b, e) - g(a, e) - g(b, c) + g(a, c)).abs().powf(rho)
    }

    fn value(&self, rows: &[usize], cols: &[usize], rho: f64) -> f64 {
        let mut total = 0.0;
        for r in rows.windows(2) {
            for c in cols.windows(2) {
                total += self.cell(r[0], r[1], c[0], c[1], rho);
            }
        }
        total
    }

    /// Best row partition of `lo..=hi` for fixed columns, by dynamic programming.
    fn best_rows(&self, lo: usize, hi: usize, cols: &[usize], rho: f64) -> (f64, Vec<usize>) {
        let len = hi - lo + 1;
        let mut best = vec![0.0; len];
        let mut prev = vec![0usize; len];
        for j in 1..len {
            let mut arg = 0;
            let mut val = f64::NEG_INFINITY;
            for i in 0..j {
                let gain: f64 = cols.windows(2).map(|c| self.cell(lo + i, lo + j, c[0], c[1], rho)).sum();
                let cand = best[i] + gain;
                if cand > val {
                    val = cand;
                    arg = i;
                }
            }
            best[j] = val;
            prev[j] = arg;
        }
        let mut rows = vec![len - 1];
        while *rows.last().unwrap() != 0 {
            rows.push(prev[*rows.last().unwrap()]);
        }
        rows.reverse();
        (best[len - 1], rows.into_iter().map(|r| r + lo).collect())
    }

    /// Exact maximum over all sub-partitions of the rectangle of grid indices
    /// `[r0, r1] x [c0, c1]`.
    fn exact(&self, (r0, r1): (usize, usize), (c0, c1): (usize, usize), rho: f64) -> (f64, Vec<usize>, Vec<usize>) {
        if r0 == r1 || c0 == c1 {
            return (0.0, vec![r0, r1], vec![c0, c1]);
        }
        let interior = c1 - c0 - 1;
        let eval = |mask: u64| {
            let cols: Vec<usize> = std::iter::once(c0)
                .chain((0..interior).filter(|b| mask >> b & 1 == 1).map(|b| c0 + 1 + b))
                .chain(std::iter::once(c1))
                .collect();
            let (v, rows) = self.best_rows(r0, r1, &cols, rho);
            (v, mask, rows, cols)
        };
        let pick = |a: (f64, u64, Vec<usize>, Vec<usize>), b: (f64, u64, Vec<usize>, Vec<usize>)| {
            if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
                b
            } else {
                a
            }
        };
        let (v, _, rows, cols) = (0..1u64 << interior)
            .into_par_iter()
            .map(eval)
            .reduce(|| (f64::NEG_INFINITY, u64::MAX, Vec::new(), Vec::new()), pick);
        (v, rows, cols)
    }
}

fn exact_guard(n: usize, exact_limit: usize) -> Result<()> {
    if n > exact_limit {
        return Err(Error::capability(format!(
            "exact 2D variation is limited to {exact_limit} intervals per axis, grid has {n}"
        )));
    }
    let exponent = 2 * (n.max(1) - 1);
    if exponent >= 64 || (1u64 << exponent) > MAX_EXACT_CANDIDATES {
        return Err(Error::capability(format!(
            "exact 2D variation on {n} intervals would visit 2^{exponent} partition pairs"
        )));
    }
    Ok(())
}

/// Exact `sup sum |R-rect|^rho` over pairs of sub-partitions of `grid`.
pub fn rho_variation_2d(kernel: &CovarianceKernel, grid: &Partition, rho: f64, exact_limit: usize) -> Result<VariationReport> {
    check_exponent(rho)?;
    exact_guard(grid.n(), exact_limit)?;
    let table = RectTable::new(kernel, grid)?;
    let n = grid.n();
    let (value, rows, cols) = table.exact((0, n), (0, n), rho);
    Ok(VariationReport { value, axes: vec![rows, cols], method: Method::Exact })
}

/// Steepest-ascent search: starting from the full grid on both axes, toggle
/// the single interior point whose insertion or removal helps most, until
/// no toggle improves the sum.
pub fn rho_variation_2d_heuristic(kernel: &CovarianceKernel, grid: &Partition, rho: f64) -> Result<VariationReport> {
    check_exponent(rho)?;
    let table = RectTable::new(kernel, grid)?;
    let n = grid.n();
    let mut keep = [vec![true; n + 1], vec![true; n + 1]];
    let axis = |mask: &[bool]| -> Vec<usize> { (0..mask.len()).filter(|&i| mask[i]).collect() };
    let mut value = table.value(&axis(&keep[0]), &axis(&keep[1]), rho);
    loop {
        let candidates: Vec<(usize, usize)> = (0..2).flat_map(|a| (1..n).map(move |p| (a, p))).collect();
        let best = candidates
            .par_iter()
            .map(|&(a, p)| {
                let mut trial = keep.clone();
                trial[a][p] = !trial[a][p];
                (table.value(&axis(&trial[0]), &axis(&trial[1]), rho), a, p)
            })
            .reduce(
                || (f64::NEG_INFINITY, usize::MAX, usize::MAX),
                |x, y| if y.0 > x.0 || (y.0 == x.0 && (y.1, y.2) < (x.1, x.2)) { y } else { x },
            );
        if best.1 == usize::MAX || best.0 <= value * (1.0 + 1e-15) {
            break;
        }
        value = best.0;
        keep[best.1][best.2] = !keep[best.1][best.2];
    }
    Ok(VariationReport { value, axes: vec![axis(&keep[0]), axis(&keep[1])], method: Method::Heuristic })
}

/// A split of rectangle `whole` into `first` and `second` along one axis for
/// which the estimated control fails to be super-additive.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    /// Grid-index rectangle `((r0, r1), (c0, c1))`.
    pub whole: ((usize, usize), (usize, usize)),
    pub axis: usize,
    pub split: usize,
    pub first: f64,
    pub second: f64,
    pub whole_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuperadditivityReport {
    pub splits_checked: usize,
    pub violations: Vec<Violation>,
    pub tolerance: f64,
}

impl SuperadditivityReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

pub const SUPERADDITIVITY_TOL: f64 = 1e-10;

/// Checks `w(A1) + w(A2) <= w(A) + tol max(1, w(A))` for every grid-aligned
/// rectangle `A` and every split of it into `A1` and `A2` along one axis, where
/// `w` is the exact grid-restricted rho-variation raised to the power rho.
pub fn superadditivity_check(kernel: &CovarianceKernel, grid: &Partition, rho: f64) -> Result<SuperadditivityReport> {
    check_exponent(rho)?;
    let n = grid.n();
    if n > 10 {
        return Err(Error::capability(format!("super-additivity check is limited to 10 intervals, grid has {n}")));
    }
    let table = RectTable::new(kernel, grid)?;
    let spans: Vec<(usize, usize)> = (0..=n).flat_map(|a| (a + 1..=n).map(move |b| (a, b))).collect();
    let rects: Vec<((usize, usize), (usize, usize))> =
        spans.iter().flat_map(|&r| spans.iter().map(move |&c| (r, c))).collect();
    let omega: HashMap<_, f64> = rects.iter().map(|&(r, c)| ((r, c), table.exact(r, c, rho).0)).collect();
    let w = |r: (usize, usize), c: (usize, usize)| if r.0 == r.1 || c.0 == c.1 { 0.0 } else { omega[&(r, c)] };

    let mut checked = 0;
    let mut violations = Vec::new();
    for &(r, c) in &rects {
        let whole_value = w(r, c);
        for axis in 0..2 {
            let (lo, hi) = if axis == 0 { r } else { c };
            for split in lo + 1..hi {
                let (first, second) = if axis == 0 {
                    (w((r.0, split), c), w((split, r.1), c))
                } else {
                    (w(r, (c.0, split)), w(r, (split, c.1)))
                };
                checked += 1;
                if first + second > whole_value + SUPERADDITIVITY_TOL * whole_value.max(1.0) {
                    violations.push(Violation { whole: (r, c), axis, split, first, second, whole_value });
                }
            }
        }
    }
    Ok(SuperadditivityReport { splits_checked: checked, violations, tolerance: SUPERADDITIVITY_TOL })
}
