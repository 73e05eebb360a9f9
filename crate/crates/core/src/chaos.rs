//! Hermite polynomials and closed-form iterated divergences.
//!
//! For an interval `k` write `beta = 1_[t_k, t_{k+1}]`, `sigma^2 = <beta, beta>`,
//! `alpha = <1_[0, t_k], beta>` and `dx = x(t_{k+1}) - x(t_k)`. The iterated
//! divergence of `g(x(t_k)) beta^{(x) n}` is a finite sum of terms
//! `coeff * :dx^m: * g^{(a)}(x(t_k))`, where `:dx^m: = sigma^m H_m(dx / sigma)`
//! is the Wick power. Coefficients depend on `alpha` only; `sigma` enters
//! through the Wick powers, which are evaluated without dividing by `sigma`.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::kernel::PartitionTables;
use crate::multi_index::{binomial, MultiIndex};
use crate::sampler::SamplePath;
use crate::testfn::TestFunction;

/// Probabilists' Hermite polynomial `H_k(x)`.
pub fn hermite_eval(k: u32, x: f64) -> f64 {
    wick_power(k, x, 1.0)
}

/// `:y^m: = sigma^m H_m(y / sigma)` with `sigma^2 = var`, via
/// `P_{m+1} = y P_m - m var P_{m-1}`.
pub fn wick_power(m: u32, y: f64, var: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, y);
    if m == 0 {
        return prev;
    }
    for j in 1..m {
        let next = y * cur - f64::from(j) * var * prev;
        prev = cur;
        cur = next;
    }
    cur
}

fn wick_powers(max: u32, y: f64, var: f64, out: &mut Vec<f64>) {
    out.clear();
    out.push(1.0);
    if max >= 1 {
        out.push(y);
    }
    for j in 1..max as usize {
        let next = y * out[j] - j as f64 * var * out[j - 1];
        out.push(next);
    }
}

/// Coefficient of `H_{i-2q}` in `x^i = sum_q c(i, q) H_{i-2q}(x)`, namely
/// `i! / (2^q q! (i-2q)!)`.
pub fn monomial_hermite_coeff(i: u32, q: u32) -> Result<u64> {
    if 2 * q > i {
        return Err(Error::domain(format!("need 2q <= i, got i = {i}, q = {q}")));
    }
    if i > 20 {
        return Err(Error::domain(format!("i = {i} exceeds 20")));
    }
    let fact = |n: u32| (1..=u64::from(n)).product::<u64>();
    Ok(fact(i) / (fact(q) << q) / fact(i - 2 * q))
}

/// `E[delta^i(beta_k^{(x) i}) delta^{i'}(beta_{k'}^{(x) i'})]`.
pub fn moment_oracle(i: u32, i_prime: u32, k: usize, k_prime: usize, tables: &PartitionTables) -> f64 {
    if i != i_prime {
        return 0.0;
    }
    crate::multi_index::factorial(i) * tables.cross(k, k_prime).powi(i as i32)
}

/// `coeff * prod_l :dx_l^{hermite[l]}: * d_t^{time_deriv} d^{deriv} f(t_k, x(t_k))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChaosTerm {
    pub coeff: f64,
    pub hermite: MultiIndex,
    pub time_deriv: u32,
    pub deriv: MultiIndex,
}

type TermKey = (MultiIndex, u32, MultiIndex);

/// A linear combination of [`ChaosTerm`]s attached to one interval.
///
/// Terms are merged by `(hermite, time_deriv, deriv)`, zero coefficients are
/// dropped, and the remaining terms are stored in descending total Hermite
/// degree, the order in which they are summed.
#[derive(Debug, Clone, PartialEq)]
pub struct ChaosSum {
    interval: usize,
    dim: usize,
    terms: Vec<ChaosTerm>,
}

impl ChaosSum {
    pub fn new(interval: usize, dim: usize, terms: impl IntoIterator<Item = ChaosTerm>) -> Self {
        let mut merged: BTreeMap<TermKey, f64> = BTreeMap::new();
        for t in terms {
            debug_assert_eq!(t.hermite.dim(), dim);
            *merged.entry((t.hermite, t.time_deriv, t.deriv)).or_insert(0.0) += t.coeff;
        }
        let mut terms: Vec<ChaosTerm> = merged
            .into_iter()
            .filter(|(_, c)| *c != 0.0)
            .map(|((hermite, time_deriv, deriv), coeff)| ChaosTerm { coeff, hermite, time_deriv, deriv })
            .collect();
        terms.sort_by_key(|t| std::cmp::Reverse(t.hermite.total()));
        ChaosSum { interval, dim, terms }
    }

    pub fn interval(&self) -> usize {
        self.interval
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[ChaosTerm] {
        &self.terms
    }

    pub fn scale(mut self, factor: f64) -> Self {
        if factor == 0.0 {
            self.terms.clear();
        }
        for t in &mut self.terms {
            t.coeff *= factor;
        }
        self
    }

    pub fn max_hermite(&self) -> u32 {
        self.terms.iter().flat_map(|t| t.hermite.as_slice().to_vec()).max().unwrap_or(0)
    }

    pub fn max_deriv(&self) -> u32 {
        self.terms.iter().map(|t| t.time_deriv + t.deriv.total()).max().unwrap_or(0)
    }

    /// Value on `path`, whose component `l` has increment tables `tables[l]`.
    pub fn eval(&self, f: &TestFunction, path: &SamplePath, tables: &[PartitionTables]) -> Result<f64> {
        check_context(f, path, tables, self.dim)?;
        f.require_order(self.max_deriv())?;
        if self.interval >= path.grid.n() {
            return Err(Error::domain(format!("interval {} outside a grid of {} intervals", self.interval, path.grid.n())));
        }
        let mut scratch = EvalScratch::default();
        Ok(self.eval_unchecked(f, path, tables, &mut scratch))
    }

    pub(crate) fn eval_unchecked(
        &self,
        f: &TestFunction,
        path: &SamplePath,
        tables: &[PartitionTables],
        scratch: &mut EvalScratch,
    ) -> f64 {
        let k = self.interval;
        let t = path.grid.times()[k];
        scratch.point.clear();
        scratch.point.extend(path.values.iter().map(|v| v[k]));
        let max_h = self.max_hermite();
        scratch.wick.resize_with(self.dim, Vec::new);
        for l in 0..self.dim {
            wick_powers(max_h, path.increment(l, k), tables[l].sigma_sq[k], &mut scratch.wick[l]);
        }
        let mut acc = Neumaier::default();
        for term in &self.terms {
            let mut v = term.coeff;
            for l in 0..self.dim {
                v *= scratch.wick[l][term.hermite.get(l) as usize];
            }
            if v != 0.0 {
                v *= f.partial(term.time_deriv, &term.deriv, t, &scratch.point);
            }
            acc.add(v);
        }
        acc.total()
    }
}

#[derive(Debug, Default)]
pub(crate) struct EvalScratch {
    point: Vec<f64>,
    wick: Vec<Vec<f64>>,
}

pub(crate) fn check_context(f: &TestFunction, path: &SamplePath, tables: &[PartitionTables], dim: usize) -> Result<()> {
    if f.dim() != dim || path.dim() != dim || tables.len() != dim {
        return Err(Error::domain(format!(
            "dimension mismatch: expression {dim}, function {}, path {}, tables {}",
            f.dim(),
            path.dim(),
            tables.len()
        )));
    }
    if tables.iter().any(|t| t.n() != path.grid.n()) {
        return Err(Error::domain("tables were built for a different partition"));
    }
    Ok(())
}

/// One-component divergence `delta^n(g beta^{(x) n})` as a list of
/// `(coeff, hermite degree, extra derivative order)`, by the recursion
/// `delta^n(g beta^n) = g :dx^n: - sum_{j>=1} C(n, j) alpha^j delta^{n-j}(g^{(j)} beta^{n-j})`.
fn one_component_templates(max_n: u32, alpha: f64) -> Vec<Vec<(f64, u32, u32)>> {
    let mut memo: Vec<Vec<(f64, u32, u32)>> = Vec::with_capacity(max_n as usize + 1);
    for n in 0..=max_n {
        let mut acc: BTreeMap<(u32, u32), f64> = BTreeMap::new();
        acc.insert((n, 0), 1.0);
        let mut alpha_pow = 1.0;
        for j in 1..=n {
            alpha_pow *= alpha;
            let c = binomial(n, j) * alpha_pow;
            if c == 0.0 {
                continue;
            }
            for &(coeff, h, shift) in &memo[(n - j) as usize] {
                *acc.entry((h, shift + j)).or_insert(0.0) -= c * coeff;
            }
        }
        memo.push(acc.into_iter().filter(|(_, c)| *c != 0.0).map(|((h, s), c)| (c, h, s)).collect());
    }
    memo
}

/// `delta^i(d^{deriv_base} f(t_k, x(t_k)) beta_k^{(x) i})` as a [`ChaosSum`],
/// with components processed in ascending order.
pub fn divergence_eval(
    f: &TestFunction,
    deriv_base: &MultiIndex,
    i: &MultiIndex,
    k: usize,
    tables: &[PartitionTables],
) -> Result<ChaosSum> {
    let order: Vec<usize> = (0..i.dim()).collect();
    divergence_eval_ordered(f, deriv_base, i, k, tables, &order)
}

/// [`divergence_eval`] with an explicit component processing order.
pub fn divergence_eval_ordered(
    f: &TestFunction,
    deriv_base: &MultiIndex,
    i: &MultiIndex,
    k: usize,
    tables: &[PartitionTables],
    order: &[usize],
) -> Result<ChaosSum> {
    let d = f.dim();
    if deriv_base.dim() != d || i.dim() != d || tables.len() != d {
        return Err(Error::domain(format!(
            "dimension mismatch: function {d}, base {deriv_base}, order {i}, {} tables",
            tables.len()
        )));
    }
    let mut seen = [false; crate::multi_index::MAX_DIM];
    if order.len() != d || order.iter().any(|&l| l >= d || std::mem::replace(&mut seen[l], true)) {
        return Err(Error::domain(format!("{order:?} is not an ordering of {d} components")));
    }
    if tables.iter().any(|t| k >= t.n()) {
        return Err(Error::domain(format!("interval {k} outside the partition")));
    }
    f.require_order(deriv_base.total() + i.total())?;
    let alphas: Vec<f64> = tables.iter().map(|t| t.alpha[k]).collect();
    Ok(divergence_from_alphas(deriv_base, i, k, &alphas, order))
}

fn divergence_from_alphas(deriv_base: &MultiIndex, i: &MultiIndex, k: usize, alphas: &[f64], order: &[usize]) -> ChaosSum {
    let d = i.dim();
    let mut terms = vec![ChaosTerm { coeff: 1.0, hermite: MultiIndex::zeros(d), time_deriv: 0, deriv: *deriv_base }];
    for &l in order {
        let n = i.get(l);
        if n == 0 {
            continue;
        }
        let template = one_component_templates(n, alphas[l]).pop().expect("template for order n");
        let mut next = Vec::with_capacity(terms.len() * template.len());
        for t in &terms {
            for &(c, h, shift) in &template {
                next.push(ChaosTerm {
                    coeff: t.coeff * c,
                    hermite: t.hermite.with(l, h),
                    time_deriv: t.time_deriv,
                    deriv: t.deriv.with(l, t.deriv.get(l) + shift),
                });
            }
        }
        terms = ChaosSum::new(k, d, next).terms;
    }
    ChaosSum::new(k, d, terms)
}

/// Per-interval [`ChaosSum`]s of `sum_{1 <= |i| <= order} delta^i(d^i f beta_k^{(x) i}) / i!`,
/// built once per partition and evaluated on many paths.
#[derive(Debug, Clone)]
pub struct SkorohodPlan {
    order: u32,
    intervals: Vec<ChaosSum>,
}

impl SkorohodPlan {
    pub fn new(dim: usize, order: u32, tables: &[PartitionTables]) -> Result<Self> {
        if tables.len() != dim {
            return Err(Error::domain(format!("{} tables for {dim} components", tables.len())));
        }
        let n = tables.first().map_or(0, PartitionTables::n);
        let indices = MultiIndex::with_total_between(dim, 1, order);
        let all: Vec<usize> = (0..dim).collect();
        let intervals = (0..n)
            .map(|k| {
                let alphas: Vec<f64> = tables.iter().map(|t| t.alpha[k]).collect();
                let terms = indices.iter().flat_map(|i| {
                    divergence_from_alphas(i, i, k, &alphas, &all).scale(1.0 / i.factorial()).terms
                });
                ChaosSum::new(k, dim, terms)
            })
            .collect();
        Ok(SkorohodPlan { order, intervals })
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn intervals(&self) -> &[ChaosSum] {
        &self.intervals
    }

    /// The Skorohod-Riemann sum on one path.
    pub fn eval(&self, f: &TestFunction, path: &SamplePath, tables: &[PartitionTables]) -> Result<f64> {
        let dim = self.intervals.first().map_or(f.dim(), ChaosSum::dim);
        check_context(f, path, tables, dim)?;
        if self.intervals.len() != path.grid.n() {
            return Err(Error::domain("plan was built for a different partition"));
        }
        f.require_order(2 * self.order)?;
        let mut scratch = EvalScratch::default();
        let mut acc = Neumaier::default();
        for sum in &self.intervals {
            acc.add(sum.eval_unchecked(f, path, tables, &mut scratch));
        }
        Ok(acc.total())
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct Neumaier {
    sum: f64,
    carry: f64,
}

impl Neumaier {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn total(&self) -> f64 {
        self.sum + self.carry
    }
}

impl std::iter::FromIterator<f64> for Neumaier {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = Neumaier::default();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{CovarianceKernel, Partition};
    use crate::multi_index::factorial;
    use crate::sampler::{sample_paths, SimConfig};
    use crate::testfn::{Monomial, Polynomial};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};
    use std::sync::Arc;

    #[test]
    fn hermite_examples() {
        assert_eq!(hermite_eval(0, 2.0), 1.0);
        assert_eq!(hermite_eval(1, 2.0), 2.0);
        assert_eq!(hermite_eval(2, 2.0), 3.0);
        assert_eq!(hermite_eval(3, 2.0), 2.0);
        // H_4 = x^4 - 6x^2 + 3
        assert_eq!(hermite_eval(4, 2.0), 16.0 - 24.0 + 3.0);
    }

    #[test]
    fn wick_power_scaling() {
        for m in 0..8 {
            let (y, s) = (0.37, 0.21f64);
            let expected = s.powi(m as i32) * hermite_eval(m, y / s);
            assert!((wick_power(m, y, s * s) - expected).abs() < 1e-14);
        }
        // degenerate variance collapses to the plain power
        assert_eq!(wick_power(3, 0.5, 0.0), 0.125);
    }

    #[test]
    fn hermite_coefficients() {
        assert_eq!(monomial_hermite_coeff(1, 0).unwrap(), 1);
        assert_eq!(monomial_hermite_coeff(2, 1).unwrap(), 1);
        assert_eq!(monomial_hermite_coeff(4, 1).unwrap(), 6);
        assert_eq!(monomial_hermite_coeff(20, 10).unwrap(), 654_729_075);
        assert!(matches!(monomial_hermite_coeff(3, 2), Err(Error::Domain(_))));
        assert!(monomial_hermite_coeff(21, 0).is_err());
    }

    #[test]
    fn monomials_reconstruct() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for i in 0..=8u32 {
            for _ in 0..100 {
                let z: f64 = StandardNormal.sample(&mut rng);
                let x = 3.0 * z;
                let rebuilt: f64 =
                    (0..=i / 2).map(|q| monomial_hermite_coeff(i, q).unwrap() as f64 * hermite_eval(i - 2 * q, x)).sum();
                let exact = x.powi(i as i32);
                assert!((rebuilt - exact).abs() <= 1e-9 * exact.abs().max(1.0), "i={i} x={x}");
            }
        }
    }

    fn fbm_tables(n: usize) -> (Arc<Partition>, Vec<PartitionTables>, CovarianceKernel) {
        let fbm = CovarianceKernel::fbm(0.3, 1.0).unwrap();
        let p = Arc::new(Partition::uniform(n, 1.0).unwrap());
        let t = fbm.partition_tables(&p).unwrap();
        (p, vec![t], fbm)
    }

    #[test]
    fn divergence_examples() {
        let f = TestFunction::sinusoid(1.0, vec![1.3], 0.0, 0.2).unwrap();
        let (_, tables, _) = fbm_tables(8);
        let k = 3;
        let alpha = tables[0].alpha[k];
        let one = divergence_eval(&f, &MultiIndex::zeros(1), &MultiIndex::from_slice(&[1]), k, &tables).unwrap();
        let expected = ChaosSum::new(
            k,
            1,
            [
                ChaosTerm { coeff: 1.0, hermite: MultiIndex::from_slice(&[1]), time_deriv: 0, deriv: MultiIndex::zeros(1) },
                ChaosTerm { coeff: -alpha, hermite: MultiIndex::zeros(1), time_deriv: 0, deriv: MultiIndex::from_slice(&[1]) },
            ],
        );
        assert_eq!(one, expected);

        let one_fn = TestFunction::monomial(1.0, &[0]);
        let two = divergence_eval(&one_fn, &MultiIndex::zeros(1), &MultiIndex::from_slice(&[2]), k, &tables).unwrap();
        assert_eq!(two.terms().len(), 3);
        assert_eq!(two.terms()[0].hermite.get(0), 2);

        let bm = CovarianceKernel::brownian(1.0).unwrap();
        let p = Partition::uniform(4, 1.0).unwrap();
        let bt = vec![bm.partition_tables(&p).unwrap()];
        let ito = divergence_eval(&f, &MultiIndex::zeros(1), &MultiIndex::from_slice(&[1]), 2, &bt).unwrap();
        assert_eq!(ito.terms().len(), 1);
        assert_eq!(ito.terms()[0].hermite.get(0), 1);
    }

    #[test]
    fn divergence_values_on_a_path() {
        let (p, tables, fbm) = fbm_tables(8);
        let paths = sample_paths(&[fbm], &p, &SimConfig::new(3, 11)).unwrap();
        let f = TestFunction::monomial(1.0, &[0]);
        for path in &paths {
            for k in 0..8 {
                let dx = path.increment(0, k);
                let v = divergence_eval(&f, &MultiIndex::zeros(1), &MultiIndex::from_slice(&[2]), k, &tables)
                    .unwrap()
                    .eval(&f, path, &tables)
                    .unwrap();
                assert!((v - (dx * dx - tables[0].sigma_sq[k])).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn capability_is_checked() {
        let f = TestFunction::half_square().with_max_order(3);
        let (_, tables, _) = fbm_tables(4);
        let err = divergence_eval(&f, &MultiIndex::from_slice(&[2]), &MultiIndex::from_slice(&[2]), 1, &tables);
        assert!(matches!(err, Err(Error::Capability(_))));
    }

    /// `sum_j C(n,j) (-alpha)^j :dx^{n-j}: g^{(j)}`.
    fn closed_form(n: u32, alpha: f64) -> Vec<(f64, u32, u32)> {
        (0..=n).map(|j| (binomial(n, j) * (-alpha).powi(j as i32), n - j, j)).collect()
    }

    proptest! {
        #[test]
        fn recursion_matches_closed_form(n in 0u32..9, alpha in -2.0f64..2.0) {
            let rec = one_component_templates(n, alpha).pop().unwrap();
            let mut expected: Vec<_> = closed_form(n, alpha).into_iter().filter(|t| t.0 != 0.0).collect();
            expected.sort_by_key(|t| (t.1, t.2));
            let mut got = rec.clone();
            got.sort_by_key(|t| (t.1, t.2));
            prop_assert_eq!(got.len(), expected.len());
            for (a, b) in got.iter().zip(&expected) {
                prop_assert_eq!((a.1, a.2), (b.1, b.2));
                prop_assert!((a.0 - b.0).abs() <= 1e-12 * b.0.abs().max(1.0));
            }
        }
    }

    fn two_component_setup() -> (Vec<CovarianceKernel>, Arc<Partition>, Vec<PartitionTables>) {
        let kernels = vec![CovarianceKernel::fbm(0.3, 1.0).unwrap(), CovarianceKernel::fbm(0.7, 1.0).unwrap()];
        let p = Arc::new(Partition::uniform(6, 1.0).unwrap());
        let tables = kernels.iter().map(|k| k.partition_tables(&p).unwrap()).collect();
        (kernels, p, tables)
    }

    #[test]
    fn component_order_does_not_matter() {
        let (kernels, p, tables) = two_component_setup();
        let f = TestFunction::sinusoid(1.0, vec![0.8, -1.1], 0.4, 0.1).unwrap();
        let paths = sample_paths(&kernels, &p, &SimConfig::new(20, 5)).unwrap();
        for i in [[1, 1], [2, 1], [1, 2], [2, 2]] {
            let i = MultiIndex::from_slice(&i);
            for k in 0..6 {
                let base = MultiIndex::from_slice(&[1, 0]);
                let fwd = divergence_eval_ordered(&f, &base, &i, k, &tables, &[0, 1]).unwrap();
                let rev = divergence_eval_ordered(&f, &base, &i, k, &tables, &[1, 0]).unwrap();
                for path in &paths {
                    let (a, b) = (fwd.eval(&f, path, &tables).unwrap(), rev.eval(&f, path, &tables).unwrap());
                    assert!((a - b).abs() <= 1e-9 * a.abs().max(1e-300), "{a} vs {b}");
                }
            }
        }
        assert!(divergence_eval_ordered(&f, &MultiIndex::zeros(2), &MultiIndex::zeros(2), 0, &tables, &[0, 0]).is_err());
    }

    #[test]
    fn divergences_are_centred() {
        let (kernels, p, tables) = two_component_setup();
        let poly = Polynomial::new(
            2,
            vec![
                Monomial { coeff: 1.0, t_pow: 0, x_pow: MultiIndex::from_slice(&[2, 1]) },
                Monomial { coeff: 0.5, t_pow: 1, x_pow: MultiIndex::from_slice(&[0, 3]) },
            ],
        )
        .unwrap();
        let f = TestFunction::polynomial(poly);
        let n_paths = 4000;
        let paths = sample_paths(&kernels, &p, &SimConfig::new(n_paths, 17)).unwrap();
        for i in MultiIndex::with_total_between(2, 1, 2) {
            let sum = divergence_eval(&f, &MultiIndex::zeros(2), &i, 4, &tables).unwrap();
            let vals: Vec<f64> = paths.iter().map(|path| sum.eval(&f, path, &tables).unwrap()).collect();
            let (mean, se) = mean_stderr(&vals);
            assert!(mean.abs() < 4.0 * se, "i={i}: mean {mean} stderr {se}");
        }
    }

    #[test]
    fn second_moments_match_oracle() {
        let (kernels, p, tables) = two_component_setup();
        let paths = sample_paths(&kernels[..1], &p, &SimConfig::new(20_000, 23)).unwrap();
        let f = TestFunction::monomial(1.0, &[0]);
        let t0 = &tables[..1];
        for i in 1..=2u32 {
            for (k, kk) in [(2, 2), (1, 4), (0, 1)] {
                let a = divergence_eval(&f, &MultiIndex::zeros(1), &MultiIndex::from_slice(&[i]), k, t0).unwrap();
                let b = divergence_eval(&f, &MultiIndex::zeros(1), &MultiIndex::from_slice(&[i]), kk, t0).unwrap();
                let prods: Vec<f64> =
                    paths.iter().map(|x| a.eval(&f, x, t0).unwrap() * b.eval(&f, x, t0).unwrap()).collect();
                let (mean, se) = mean_stderr(&prods);
                let oracle = moment_oracle(i, i, k, kk, &t0[0]);
                assert!((mean - oracle).abs() < 4.0 * se, "i={i} k={k} kk={kk}: {mean} vs {oracle} (se {se})");
            }
        }
        assert_eq!(moment_oracle(1, 2, 0, 0, &t0[0]), 0.0);
        assert_eq!(moment_oracle(1, 1, 1, 3, &t0[0]), t0[0].cross(1, 3));
        assert_eq!(factorial(2) * t0[0].sigma_sq[2].powi(2), moment_oracle(2, 2, 2, 2, &t0[0]));
    }

    #[test]
    fn canonical_form_merges_and_drops() {
        let h = MultiIndex::from_slice(&[1]);
        let a = MultiIndex::from_slice(&[0]);
        let s = ChaosSum::new(
            0,
            1,
            [
                ChaosTerm { coeff: 1.5, hermite: h, time_deriv: 0, deriv: a },
                ChaosTerm { coeff: -1.5, hermite: h, time_deriv: 0, deriv: a },
                ChaosTerm { coeff: 2.0, hermite: a, time_deriv: 1, deriv: a },
                ChaosTerm { coeff: 1.0, hermite: a, time_deriv: 1, deriv: a },
            ],
        );
        assert_eq!(s.terms().len(), 1);
        assert_eq!(s.terms()[0].coeff, 3.0);
    }

    #[test]
    fn neumaier_recovers_cancellation() {
        let acc: Neumaier = [1e16, 1.0, -1e16, 1.0].into_iter().collect();
        assert_eq!(acc.total(), 2.0);
    }

    pub(crate) fn mean_stderr(v: &[f64]) -> (f64, f64) {
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, (var / n).sqrt())
    }
}
