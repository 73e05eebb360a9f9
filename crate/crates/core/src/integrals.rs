//! Riemann sums over a partition, the exact Stratonovich oracle, and the
//! chaos decomposition of the compensated sum.
//!
//! All sums are evaluated on a single path. Component `l` of the path is
//! driven by `kernels[l]`, whose increment tables are passed as `tables[l]`.

use std::sync::Arc;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::chaos::{check_context, divergence_eval, EvalScratch, Neumaier, SkorohodPlan};
use crate::error::{Error, Result};
use crate::kernel::{CovarianceKernel, Partition, PartitionTables};
use crate::multi_index::{binomial, factorial, MultiIndex};
use crate::sampler::SamplePath;
use crate::testfn::TestFunction;

/// Time quadrature for `int_0^T d_t f(u, x_u) du`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quadrature {
    #[default]
    Trapezoid,
    /// Midpoint in time, with the path averaged over the two endpoints.
    Midpoint,
}

/// Everything a sum needs besides the path.
#[derive(Debug, Clone)]
pub struct SumSpec {
    pub partition: Arc<Partition>,
    /// Taylor order of the compensated sum.
    pub strat_order: u32,
    /// Highest total divergence order in the Skorohod sum.
    pub skorohod_order: u32,
    pub kernels: Arc<[CovarianceKernel]>,
    pub f: TestFunction,
    pub quadrature: Quadrature,
}

/// `(floor(rho + eps), floor(2 (rho + eps)))` for the largest declared `rho`.
pub fn auto_orders(kernels: &[CovarianceKernel], epsilon: f64) -> Result<(u32, u32)> {
    if !(epsilon.is_finite() && epsilon >= 0.0) {
        return Err(Error::config(format!("epsilon must be finite and nonnegative, got {epsilon}")));
    }
    let rho = kernels.iter().map(CovarianceKernel::rho).fold(f64::NAN, f64::max);
    if rho.is_nan() {
        return Err(Error::config("at least one kernel is required"));
    }
    let r = rho + epsilon;
    Ok((r.floor() as u32, (2.0 * r).floor() as u32))
}

impl SumSpec {
    /// Orders from the declared indices of `kernels`, inflated by `epsilon`.
    pub fn auto(
        partition: Arc<Partition>,
        kernels: Arc<[CovarianceKernel]>,
        f: TestFunction,
        epsilon: f64,
    ) -> Result<Self> {
        let (skorohod, strat) = auto_orders(&kernels, epsilon)?;
        Self::with_orders(partition, kernels, f, strat, skorohod)
    }

    pub fn with_orders(
        partition: Arc<Partition>,
        kernels: Arc<[CovarianceKernel]>,
        f: TestFunction,
        strat_order: u32,
        skorohod_order: u32,
    ) -> Result<Self> {
        if skorohod_order < 1 || strat_order < skorohod_order {
            return Err(Error::config(format!(
                "need 1 <= skorohod_order <= strat_order, got {skorohod_order} and {strat_order}"
            )));
        }
        if kernels.len() != f.dim() {
            return Err(Error::config(format!("{} kernels for a function of dimension {}", kernels.len(), f.dim())));
        }
        for k in kernels.iter() {
            if (k.horizon() - partition.horizon()).abs() > 1e-12 * k.horizon() {
                return Err(Error::config(format!(
                    "kernel horizon {} does not match partition endpoint {}",
                    k.horizon(),
                    partition.horizon()
                )));
            }
        }
        Ok(SumSpec { partition, strat_order, skorohod_order, kernels, f, quadrature: Quadrature::Trapezoid })
    }

    pub fn with_quadrature(mut self, quadrature: Quadrature) -> Self {
        self.quadrature = quadrature;
        self
    }

    pub fn dim(&self) -> usize {
        self.f.dim()
    }

    /// Increment tables of every component on the partition.
    pub fn tables(&self) -> Result<Vec<PartitionTables>> {
        self.kernels.iter().map(|k| k.partition_tables(&self.partition)).collect()
    }

    fn check_path(&self, path: &SamplePath) -> Result<()> {
        if path.dim() != self.dim() {
            return Err(Error::domain(format!("path has {} components, expected {}", path.dim(), self.dim())));
        }
        if path.grid.times() != self.partition.times() {
            return Err(Error::domain("path grid differs from the partition"));
        }
        Ok(())
    }
}

/// `sum_k sum_{1 <= |i| <= strat_order} d^i f(t_k, x_k) prod_l dx_{l,k}^{i_l} / i_l!`.
pub fn compensated_sum(spec: &SumSpec, path: &SamplePath) -> Result<f64> {
    spec.check_path(path)?;
    spec.f.require_order(spec.strat_order)?;
    let d = spec.dim();
    let indices = MultiIndex::with_total_between(d, 1, spec.strat_order);
    let times = spec.partition.times();
    let mut point = vec![0.0; d];
    let mut incr = vec![0.0; d];
    let mut acc = Neumaier::default();
    for k in 0..spec.partition.n() {
        for l in 0..d {
            point[l] = path.values[l][k];
            incr[l] = path.increment(l, k);
        }
        // highest orders first: they are the smallest terms
        for i in indices.iter().rev() {
            let mut w = 1.0 / i.factorial();
            for l in 0..d {
                w *= incr[l].powi(i.get(l) as i32);
            }
            if w != 0.0 {
                acc.add(w * spec.f.partial(0, i, times[k], &point));
            }
        }
    }
    Ok(acc.total())
}

/// Skorohod-Riemann sum of order `spec.skorohod_order`.
pub fn skorohod_sum(spec: &SumSpec, path: &SamplePath, tables: &[PartitionTables]) -> Result<f64> {
    spec.check_path(path)?;
    SkorohodPlan::new(spec.dim(), spec.skorohod_order, tables)?.eval(&spec.f, path, tables)
}

/// `sum_k sum_l d_ll f(t_k, x_k) (R_l(t_{k+1}, t_{k+1}) - R_l(t_k, t_k))`.
pub fn young_sum(spec: &SumSpec, path: &SamplePath) -> Result<f64> {
    spec.check_path(path)?;
    spec.f.require_order(2)?;
    let d = spec.dim();
    let times = spec.partition.times();
    let mut point = vec![0.0; d];
    let mut acc = Neumaier::default();
    for k in 0..spec.partition.n() {
        for l in 0..d {
            point[l] = path.values[l][k];
        }
        for (l, kernel) in spec.kernels.iter().enumerate() {
            let dr = kernel.cov(times[k + 1], times[k + 1]) - kernel.cov(times[k], times[k]);
            acc.add(dr * spec.f.partial(0, &MultiIndex::axis(d, l, 2), times[k], &point));
        }
    }
    Ok(acc.total())
}

/// `f(T, x_T) - f(0, x_0) - int_0^T d_t f(u, x_u) du`, the path-wise value of
/// the Stratonovich-type integral.
pub fn stratonovich_oracle(spec: &SumSpec, path: &SamplePath) -> Result<f64> {
    spec.check_path(path)?;
    spec.f.require_order(1)?;
    let n = spec.partition.n();
    let times = spec.partition.times();
    let end = spec.f.value(times[n], &path.point(n)) - spec.f.value(times[0], &path.point(0));
    Ok(end - time_integral(spec, path))
}

fn time_integral(spec: &SumSpec, path: &SamplePath) -> f64 {
    let d = spec.dim();
    let times = spec.partition.times();
    let dt0 = |t: f64, x: &[f64]| spec.f.partial(1, &MultiIndex::zeros(d), t, x);
    let mut acc = Neumaier::default();
    match spec.quadrature {
        Quadrature::Trapezoid => {
            let mut left = dt0(times[0], &path.point(0));
            for k in 0..spec.partition.n() {
                let right = dt0(times[k + 1], &path.point(k + 1));
                acc.add(0.5 * (left + right) * (times[k + 1] - times[k]));
                left = right;
            }
        }
        Quadrature::Midpoint => {
            for k in 0..spec.partition.n() {
                let mid: Vec<f64> = path.values.iter().map(|v| 0.5 * (v[k] + v[k + 1])).collect();
                acc.add(dt0(0.5 * (times[k] + times[k + 1]), &mid) * (times[k + 1] - times[k]));
            }
        }
    }
    acc.total()
}

/// `oracle - skorohod - young / 2`.
pub fn conversion_residual(spec: &SumSpec, path: &SamplePath, tables: &[PartitionTables]) -> Result<f64> {
    let oracle = stratonovich_oracle(spec, path)?;
    let skorohod = skorohod_sum(spec, path, tables)?;
    let young = young_sum(spec, path)?;
    Ok(oracle - skorohod - 0.5 * young)
}

/// `f(T, x_T) - f(0, x_0) - int d_t f - skorohod - young / 2`, computed
/// without the Skorohod plan, the oracle, or the kernel diagonal, as an
/// independent cross-check of [`conversion_residual`].
pub fn ito_residual(spec: &SumSpec, path: &SamplePath, tables: &[PartitionTables]) -> Result<f64> {
    spec.check_path(path)?;
    check_context(&spec.f, path, tables, spec.dim())?;
    spec.f.require_order((2 * spec.skorohod_order).max(2))?;
    let d = spec.dim();
    let n = spec.partition.n();
    let times = spec.partition.times();
    let f = &spec.f;

    let mut terms: Vec<f64> = Vec::with_capacity(4 * n + 2);
    terms.push(f.partial(0, &MultiIndex::zeros(d), times[n], &path.point(n)));
    terms.push(-f.partial(0, &MultiIndex::zeros(d), times[0], &path.point(0)));
    terms.push(-time_integral(spec, path));

    let indices = MultiIndex::with_total_between(d, 1, spec.skorohod_order);
    let mut scratch = EvalScratch::default();
    for k in 0..n {
        let mut step = Neumaier::default();
        for i in &indices {
            let div = divergence_eval(f, i, i, k, tables)?;
            step.add(div.eval_unchecked(f, path, tables, &mut scratch) / i.factorial());
        }
        let point = path.point(k);
        for (l, t) in tables.iter().enumerate() {
            step.add(0.5 * t.diag_incr[k] * f.partial(0, &MultiIndex::axis(d, l, 2), times[k], &point));
        }
        terms.push(-step.total());
    }
    Ok(terms.into_iter().collect::<Neumaier>().total())
}

/// Index tuple `(L, tau, i, q, j, j')` of one term in the chaos decomposition
/// of the compensated sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MIndex {
    pub l: MultiIndex,
    pub tau: MultiIndex,
    pub i: MultiIndex,
    pub q: MultiIndex,
    pub j: MultiIndex,
    pub j_prime: MultiIndex,
}

impl MIndex {
    /// Completes `(i, q, j, j')` with `L = i - 2q - j` and `tau = q + j`.
    pub fn from_iqj(i: MultiIndex, q: MultiIndex, j: MultiIndex, j_prime: MultiIndex) -> Result<Self> {
        let l = i
            .checked_sub(&q.scale(2))
            .and_then(|r| r.checked_sub(&j))
            .ok_or_else(|| Error::domain(format!("need 2q + j <= i, got i = {i}, q = {q}, j = {j}")))?;
        let idx = MIndex { l, tau: q.add(&j), i, q, j, j_prime };
        Ok(idx)
    }

    /// Checks membership in the index set for Taylor order `strat_order`.
    pub fn validate(&self, strat_order: u32) -> Result<()> {
        let d = self.i.dim();
        let dims = [self.l, self.tau, self.q, self.j, self.j_prime].iter().all(|m| m.dim() == d);
        let total = self.i.total();
        let ok = dims
            && (1..=strat_order).contains(&total)
            && self.q.scale(2).le(&self.i)
            && self.j.add(&self.q.scale(2)).le(&self.i)
            && self.j_prime.le(&self.j)
            && self.l.add(&self.q.scale(2)).add(&self.j) == self.i
            && self.tau == self.q.add(&self.j);
        if ok {
            Ok(())
        } else {
            Err(Error::domain(format!("index tuple {self:?} is outside the admissible set for order {strat_order}")))
        }
    }

    /// Which of the six cases of the decomposition this term belongs to,
    /// with `rho` the Skorohod order.
    pub fn case(&self, rho: u32) -> Case {
        let gap = self.j.total() - self.j_prime.total();
        let lt = self.l.total() + self.tau.total();
        match gap {
            g if g >= 2 => Case::I,
            1 if lt > 1 => Case::II,
            1 => Case::IV,
            _ if lt > rho => Case::III,
            _ if !self.tau.is_zero() => Case::V,
            _ => Case::VI,
        }
    }
}

/// The six groups of M-terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Case {
    /// `|j - j'| >= 2`.
    I,
    /// `|j - j'| = 1`, `|L + tau| > 1`.
    II,
    /// `j = j'`, `|L + tau|` above the Skorohod order.
    III,
    /// `|j - j'| = 1`, `|L + tau| = 1`: half the Young sum.
    IV,
    /// `j = j'`, `tau != 0`, `|L + tau|` within the Skorohod order: cancels.
    V,
    /// `j = j'`, `tau = 0`: the Skorohod sum.
    VI,
}

impl Case {
    pub const ALL: [Case; 6] = [Case::I, Case::II, Case::III, Case::IV, Case::V, Case::VI];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Every admissible index tuple for Taylor order `strat_order` in dimension `d`.
pub fn admissible_indices(d: usize, strat_order: u32) -> Vec<MIndex> {
    let mut out = Vec::new();
    for i in MultiIndex::with_total_between(d, 1, strat_order) {
        for q in i.below().into_iter().filter(|q| q.scale(2).le(&i)) {
            let rest = i.checked_sub(&q.scale(2)).expect("2q <= i");
            for j in rest.below() {
                for jp in j.below() {
                    out.push(MIndex::from_iqj(i, q, j, jp).expect("admissible by construction"));
                }
            }
        }
    }
    out
}

/// One-dimensional `(i, q, j)` with `i - 2q - j = big_l`, `q + j = tau` and
/// `1 <= i <= strat_order`: `(L+tau, 0, tau), (L+tau+1, 1, tau-1), ..., (L+2tau, tau, 0)`.
pub fn index_set_l_tau(big_l: u32, tau: u32, strat_order: u32) -> Vec<(u32, u32, u32)> {
    (0..=tau)
        .map(|r| (big_l + tau + r, r, tau - r))
        .filter(|&(i, _, _)| (1..=strat_order).contains(&i))
        .collect()
}

/// Pairs `(L, tau)` for which [`index_set_l_tau`] is non-empty.
pub fn l_tau_pairs(strat_order: u32) -> Vec<(u32, u32)> {
    let mut out = Vec::new();
    for big_l in 0..=strat_order {
        for tau in 0..=strat_order - big_l {
            if big_l + 2 * tau >= 1 {
                out.push((big_l, tau));
            }
        }
    }
    out
}

fn m_weight(idx: &MIndex, sigma_sq: &[f64], diag: &[f64]) -> f64 {
    let mut w = 1.0;
    for l in 0..idx.i.dim() {
        let (q, j, jp, big_l) = (idx.q.get(l), idx.j.get(l), idx.j_prime.get(l), idx.l.get(l));
        w /= 2f64.powi(q as i32) * factorial(q) * factorial(j) * factorial(big_l);
        w *= sigma_sq[l].powi((jp + q) as i32);
        let sign = if jp % 2 == 0 { 1.0 } else { -1.0 };
        w *= sign * binomial(j, jp) * diag[l].powi((j - jp) as i32) / 2f64.powi(j as i32);
    }
    w
}

/// `M(L, tau, i, q, j, j')` summed over the intervals of the partition.
pub fn m_term(idx: &MIndex, spec: &SumSpec, path: &SamplePath, tables: &[PartitionTables]) -> Result<f64> {
    idx.validate(spec.strat_order)?;
    if idx.i.dim() != spec.dim() {
        return Err(Error::domain(format!("index of dimension {} for a {}-dimensional spec", idx.i.dim(), spec.dim())));
    }
    spec.check_path(path)?;
    check_context(&spec.f, path, tables, spec.dim())?;
    let deriv = idx.l.add(&idx.tau.scale(2));
    spec.f.require_order(deriv.total() + idx.l.total())?;
    let mut scratch = EvalScratch::default();
    let mut acc = Neumaier::default();
    let mut sigma_sq = vec![0.0; spec.dim()];
    let mut diag = vec![0.0; spec.dim()];
    for k in 0..spec.partition.n() {
        for (l, t) in tables.iter().enumerate() {
            sigma_sq[l] = t.sigma_sq[k];
            diag[l] = t.diag_incr[k];
        }
        let w = m_weight(idx, &sigma_sq, &diag);
        if w == 0.0 {
            continue;
        }
        let div = divergence_eval(&spec.f, &deriv, &idx.l, k, tables)?;
        acc.add(w * div.eval_unchecked(&spec.f, path, tables, &mut scratch));
    }
    Ok(acc.total())
}

/// The compensated sum split into its M-terms.
#[derive(Debug, Clone, PartialEq)]
pub struct ChaosDecomposition {
    pub compensated: f64,
    /// Sum of all M-terms.
    pub total: f64,
    /// Per-case sums, indexed by [`Case::index`].
    pub cases: [f64; 6],
    /// Sum of the absolute values of all M-terms, the natural scale for
    /// round-off in `compensated - total`.
    pub abs_mass: f64,
    pub terms: usize,
}

impl ChaosDecomposition {
    pub fn residual(&self) -> f64 {
        self.compensated - self.total
    }

    /// `|compensated - total|` relative to the size of the summands.
    pub fn relative_residual(&self) -> f64 {
        let scale = self.abs_mass.max(self.compensated.abs());
        if scale == 0.0 {
            self.residual().abs()
        } else {
            self.residual().abs() / scale
        }
    }

    pub fn case(&self, c: Case) -> f64 {
        self.cases[c.index()]
    }
}

/// Splits the compensated sum into all M-terms, in any dimension.
pub fn chaos_decomposition(spec: &SumSpec, path: &SamplePath, tables: &[PartitionTables]) -> Result<ChaosDecomposition> {
    let compensated = compensated_sum(spec, path)?;
    let mut cases = [Neumaier::default(); 6];
    let mut all = Neumaier::default();
    let mut abs_mass = 0.0;
    let indices = admissible_indices(spec.dim(), spec.strat_order);
    for idx in &indices {
        let m = m_term(idx, spec, path, tables)?;
        cases[idx.case(spec.skorohod_order).index()].add(m);
        all.add(m);
        abs_mass += m.abs();
    }
    Ok(ChaosDecomposition {
        compensated,
        total: all.total(),
        cases: cases.map(|c| c.total()),
        abs_mass,
        terms: indices.len(),
    })
}

/// `compensated - sum of M-terms` for a one-component spec, enumerating the
/// terms through the `(L, tau)` pairs and their explicit index lists.
pub fn chaos_identity_residual(spec: &SumSpec, path: &SamplePath, tables: &[PartitionTables]) -> Result<f64> {
    if spec.dim() != 1 {
        return Err(Error::domain(format!("the explicit decomposition is one-dimensional, got d = {}", spec.dim())));
    }
    let compensated = compensated_sum(spec, path)?;
    let one = |v: u32| MultiIndex::from_slice(&[v]);
    let mut acc = Neumaier::default();
    acc.add(compensated);
    for (big_l, tau) in l_tau_pairs(spec.strat_order) {
        for (i, q, j) in index_set_l_tau(big_l, tau, spec.strat_order) {
            for jp in 0..=j {
                let idx = MIndex::from_iqj(one(i), one(q), one(j), one(jp))?;
                acc.add(-m_term(&idx, spec, path, tables)?);
            }
        }
    }
    Ok(acc.total())
}

/// `sum_{q + j = tau} 2^{-q} / (q! j!) (-1/2)^j`, exactly.
pub fn case_v_coeff(tau: u32) -> Result<Ratio<i128>> {
    if tau == 0 {
        return Err(Error::domain("tau must be positive"));
    }
    if tau > 30 {
        return Err(Error::domain(format!("tau = {tau} exceeds 30")));
    }
    let fact = |n: u32| (1..=i128::from(n)).product::<i128>();
    let mut sum = Ratio::from_integer(0);
    for q in 0..=tau {
        let j = tau - q;
        let sign = if j.is_multiple_of(2) { 1 } else { -1 };
        sum += Ratio::new(sign, (1i128 << tau) * fact(q) * fact(j));
    }
    Ok(sum)
}
