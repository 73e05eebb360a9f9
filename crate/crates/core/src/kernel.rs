//! Covariance kernels of one-dimensional, mean-zero Gaussian processes and the
//! inner-product geometry of the indicator functions `1_[s,t]` they generate.
//!
//! For a covariance `R` the Hilbert space `H` is the completion of the step
//! functions under `<1_[u,v], 1_[s,t]> = R(v,t) - R(u,t) - R(v,s) + R(u,s)`,
//! the rectangular increment of `R`. Every catalogue kernel satisfies
//! `R(0, .) = 0`, so `x_t` is the image of `1_[0,t]`.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative slack accepted on the time range `[0, T]`.
const TIME_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelFamily {
    /// `min(s, t)`.
    Brownian,
    /// `(s^2H + t^2H - |t - s|^2H) / 2`.
    FractionalBrownian { hurst: f64 },
    /// Ornstein-Uhlenbeck process started at zero:
    /// `sigma^2 / (2 lambda) * (exp(-lambda |t - s|) - exp(-lambda (t + s)))`.
    OrnsteinUhlenbeck { rate: f64, sigma: f64 },
    /// `min(s, t) - s t / T`.
    BrownianBridge,
}

impl KernelFamily {
    pub fn name(&self) -> &'static str {
        match self {
            KernelFamily::Brownian => "brownian",
            KernelFamily::FractionalBrownian { .. } => "fbm",
            KernelFamily::OrnsteinUhlenbeck { .. } => "ou",
            KernelFamily::BrownianBridge => "brownian-bridge",
        }
    }

    fn params(&self) -> BTreeMap<String, f64> {
        let mut out = BTreeMap::new();
        match *self {
            KernelFamily::FractionalBrownian { hurst } => {
                out.insert("hurst".to_string(), hurst);
            }
            KernelFamily::OrnsteinUhlenbeck { rate, sigma } => {
                out.insert("rate".to_string(), rate);
                out.insert("sigma".to_string(), sigma);
            }
            KernelFamily::Brownian | KernelFamily::BrownianBridge => {}
        }
        out
    }

    /// Declared `(rho, rho')`: the 2D variation index of `R` and the 1D
    /// variation index of the diagonal `t -> R(t, t)`.
    pub fn declared_indices(&self) -> (f64, f64) {
        match *self {
            KernelFamily::FractionalBrownian { hurst } => ((0.5 / hurst).max(1.0), 1.0),
            _ => (1.0, 1.0),
        }
    }
}

/// A covariance function on `[0, T]^2` with its declared variation indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceKernel {
    family: KernelFamily,
    horizon: f64,
    rho: f64,
    rho_prime: f64,
}

impl CovarianceKernel {
    /// Builds a kernel with the catalogue's declared indices.
    pub fn new(family: KernelFamily, horizon: f64) -> Result<Self> {
        let (rho, rho_prime) = family.declared_indices();
        Self::with_indices(family, horizon, rho, rho_prime)
    }

    /// Builds a kernel with explicitly declared `rho` and `rho'`.
    pub fn with_indices(family: KernelFamily, horizon: f64, rho: f64, rho_prime: f64) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::config(format!("horizon T must be positive, got {horizon}")));
        }
        if !(rho >= 1.0 && rho.is_finite()) || !(rho_prime >= 1.0 && rho_prime.is_finite()) {
            return Err(Error::config(format!(
                "declared variation indices must be >= 1, got rho = {rho}, rho' = {rho_prime}"
            )));
        }
        match family {
            KernelFamily::FractionalBrownian { hurst } if !(hurst > 0.0 && hurst < 1.0) => {
                return Err(Error::config(format!("Hurst exponent must lie in (0, 1), got {hurst}")));
            }
            KernelFamily::OrnsteinUhlenbeck { rate, sigma } if !(rate > 0.0 && sigma > 0.0) => {
                return Err(Error::config(format!(
                    "OU rate and sigma must be positive, got rate = {rate}, sigma = {sigma}"
                )));
            }
            _ => {}
        }
        Ok(CovarianceKernel { family, horizon, rho, rho_prime })
    }

    pub fn brownian(horizon: f64) -> Result<Self> {
        Self::new(KernelFamily::Brownian, horizon)
    }

    pub fn fbm(hurst: f64, horizon: f64) -> Result<Self> {
        Self::new(KernelFamily::FractionalBrownian { hurst }, horizon)
    }

    pub fn ornstein_uhlenbeck(rate: f64, sigma: f64, horizon: f64) -> Result<Self> {
        Self::new(KernelFamily::OrnsteinUhlenbeck { rate, sigma }, horizon)
    }

    pub fn brownian_bridge(horizon: f64) -> Result<Self> {
        Self::new(KernelFamily::BrownianBridge, horizon)
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn name(&self) -> &'static str {
        self.family.name()
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn rho_prime(&self) -> f64 {
        self.rho_prime
    }

    fn check_time(&self, t: f64) -> Result<f64> {
        let slack = TIME_SLACK * self.horizon;
        if !t.is_finite() || t < -slack || t > self.horizon + slack {
            return Err(Error::domain(format!("time {t} outside [0, {}]", self.horizon)));
        }
        Ok(t.clamp(0.0, self.horizon))
    }

    /// `R(s, t)` without range checks. Callers guarantee `s, t` in `[0, T]`.
    #[inline]
    pub fn cov(&self, s: f64, t: f64) -> f64 {
        match self.family {
            KernelFamily::Brownian => s.min(t),
            KernelFamily::FractionalBrownian { hurst } => {
                let h2 = 2.0 * hurst;
                0.5 * (s.powf(h2) + t.powf(h2) - (t - s).abs().powf(h2))
            }
            KernelFamily::OrnsteinUhlenbeck { rate, sigma } => {
                sigma * sigma / (2.0 * rate) * ((-rate * (t - s).abs()).exp() - (-rate * (t + s)).exp())
            }
            KernelFamily::BrownianBridge => s.min(t) - s * t / self.horizon,
        }
    }

    /// `R(s, t)`, checking `0 <= s, t <= T`.
    pub fn eval_r(&self, s: f64, t: f64) -> Result<f64> {
        let s = self.check_time(s)?;
        let t = self.check_time(t)?;
        Ok(self.cov(s, t))
    }

    /// Rectangular increment `R(v,t) - R(u,t) - R(v,s) + R(u,s)`, which is the
    /// inner product `<1_[u,v], 1_[s,t]>`.
    pub fn rect_increment(&self, u: f64, v: f64, s: f64, t: f64) -> Result<f64> {
        let (u, v, s, t) = (self.check_time(u)?, self.check_time(v)?, self.check_time(s)?, self.check_time(t)?);
        if u > v || s > t {
            return Err(Error::domain(format!("intervals must be ordered, got [{u}, {v}] x [{s}, {t}]")));
        }
        Ok(self.rect(u, v, s, t))
    }

    #[inline]
    pub(crate) fn rect(&self, u: f64, v: f64, s: f64, t: f64) -> f64 {
        self.cov(v, t) - self.cov(u, t) - self.cov(v, s) + self.cov(u, s)
    }

    /// `R(t, t) - R(s, s)` for `s <= t`.
    pub fn diagonal_increment(&self, s: f64, t: f64) -> Result<f64> {
        let (s, t) = (self.check_time(s)?, self.check_time(t)?);
        if s > t {
            return Err(Error::domain(format!("expected s <= t, got s = {s}, t = {t}")));
        }
        Ok(self.cov(t, t) - self.cov(s, s))
    }

    /// Precomputes the per-interval inner products for `p`.
    pub fn partition_tables(&self, p: &Partition) -> Result<PartitionTables> {
        PartitionTables::new(self, p)
    }

    pub fn to_spec(&self) -> KernelSpec {
        KernelSpec {
            name: self.name().to_string(),
            params: self.family.params(),
            horizon: self.horizon,
            rho: Some(self.rho),
            rho_prime: Some(self.rho_prime),
        }
    }
}

impl fmt::Display for CovarianceKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())?;
        let params = self.family.params();
        if !params.is_empty() {
            let parts: Vec<String> = params.iter().map(|(k, v)| format!("{k}={v}")).collect();
            write!(f, "({})", parts.join(", "))?;
        }
        write!(f, " on [0, {}], rho = {}, rho' = {}", self.horizon, self.rho, self.rho_prime)
    }
}

/// Serialized kernel description: `{ name, params, T, rho, rho_prime }`.
///
/// `rho` and `rho_prime` default to the catalogue's declared indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    pub name: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(rename = "T")]
    pub horizon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_prime: Option<f64>,
}

impl KernelSpec {
    pub fn build(&self) -> Result<CovarianceKernel> {
        let param = |key: &str| -> Result<f64> {
            self.params
                .get(key)
                .copied()
                .ok_or_else(|| Error::config(format!("kernel '{}' needs parameter '{key}'", self.name)))
        };
        let allowed: &[&str] = match self.name.as_str() {
            "brownian" | "brownian-bridge" => &[],
            "fbm" => &["hurst"],
            "ou" => &["rate", "sigma"],
            other => return Err(Error::config(format!("unknown kernel '{other}'"))),
        };
        if let Some(extra) = self.params.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(Error::config(format!("kernel '{}' has no parameter '{extra}'", self.name)));
        }
        let family = match self.name.as_str() {
            "brownian" => KernelFamily::Brownian,
            "brownian-bridge" => KernelFamily::BrownianBridge,
            "fbm" => KernelFamily::FractionalBrownian { hurst: param("hurst")? },
            "ou" => KernelFamily::OrnsteinUhlenbeck { rate: param("rate")?, sigma: param("sigma")? },
            _ => unreachable!(),
        };
        let (rho, rho_prime) = family.declared_indices();
        CovarianceKernel::with_indices(
            family,
            self.horizon,
            self.rho.unwrap_or(rho),
            self.rho_prime.unwrap_or(rho_prime),
        )
    }

    /// Parses the compact form `name[:key=value,...]`, e.g. `fbm:hurst=0.35`.
    pub fn parse_compact(text: &str, horizon: f64) -> Result<Self> {
        let (name, rest) = match text.split_once(':') {
            Some((name, rest)) => (name, rest),
            None => (text, ""),
        };
        let mut params = BTreeMap::new();
        for item in rest.split(',').filter(|s| !s.trim().is_empty()) {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| Error::config(format!("expected key=value, got '{item}'")))?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| Error::config(format!("parameter '{key}' is not a number: '{value}'")))?;
            params.insert(key.trim().to_string(), value);
        }
        Ok(KernelSpec { name: name.trim().to_string(), params, horizon, rho: None, rho_prime: None })
    }
}

/// One entry of the kernel catalogue, for listing.
#[derive(Debug, Clone, Copy)]
pub struct CatalogueEntry {
    pub name: &'static str,
    pub params: &'static str,
    pub covariance: &'static str,
    pub rho: &'static str,
    pub rho_prime: &'static str,
}

pub const CATALOGUE: &[CatalogueEntry] = &[
    CatalogueEntry {
        name: "brownian",
        params: "-",
        covariance: "min(s,t)",
        rho: "1",
        rho_prime: "1",
    },
    CatalogueEntry {
        name: "fbm",
        params: "hurst in (0,1)",
        covariance: "(s^2H + t^2H - |t-s|^2H)/2",
        rho: "max(1, 1/(2H))",
        rho_prime: "1",
    },
    CatalogueEntry {
        name: "ou",
        params: "rate > 0, sigma > 0",
        covariance: "sigma^2/(2 rate) (exp(-rate|t-s|) - exp(-rate(t+s)))",
        rho: "1",
        rho_prime: "1",
    },
    CatalogueEntry {
        name: "brownian-bridge",
        params: "-",
        covariance: "min(s,t) - s t / T",
        rho: "1",
        rho_prime: "1",
    },
];

/// A partition `0 = t_0 < t_1 < ... < t_n = T`.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    times: Vec<f64>,
}

impl Partition {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.len() < 2 {
            return Err(Error::domain("a partition needs at least two points"));
        }
        if times[0] != 0.0 {
            return Err(Error::domain(format!("partition must start at 0, got {}", times[0])));
        }
        if let Some(w) = times.windows(2).find(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
            return Err(Error::domain(format!("partition is not strictly increasing at {} -> {}", w[0], w[1])));
        }
        Ok(Partition { times })
    }

    /// `n` equal steps on `[0, T]`; the last point is exactly `T`.
    pub fn uniform(n: usize, horizon: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("a uniform partition needs n >= 1"));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::domain(format!("horizon must be positive, got {horizon}")));
        }
        let mut times: Vec<f64> = (0..=n).map(|k| horizon * k as f64 / n as f64).collect();
        times[n] = horizon;
        Partition::new(times)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Number of intervals.
    pub fn n(&self) -> usize {
        self.times.len() - 1
    }

    pub fn horizon(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    pub fn mesh(&self) -> f64 {
        self.times.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }
}

/// Inner products of the interval indicators `beta_k = 1_[t_k, t_{k+1}]`.
#[derive(Debug, Clone)]
pub struct PartitionTables {
    /// `sigma_k^2 = <beta_k, beta_k>`.
    pub sigma_sq: Vec<f64>,
    /// `alpha_k = <1_[0, t_k], beta_k>`.
    pub alpha: Vec<f64>,
    /// `R(t_{k+1}, t_{k+1}) - R(t_k, t_k)`.
    pub diag_incr: Vec<f64>,
    cross: Vec<f64>,
    n: usize,
}

impl PartitionTables {
    pub fn new(kernel: &CovarianceKernel, p: &Partition) -> Result<Self> {
        let h = kernel.horizon();
        if (p.horizon() - h).abs() > TIME_SLACK * h {
            return Err(Error::domain(format!(
                "partition ends at {} but kernel horizon is {h}",
                p.horizon()
            )));
        }
        let t = p.times();
        let n = p.n();
        let m = n + 1;
        let mut gram = vec![0.0; m * m];
        for i in 0..m {
            for j in i..m {
                let r = kernel.cov(t[i].min(h), t[j].min(h));
                gram[i * m + j] = r;
                gram[j * m + i] = r;
            }
        }
        let g = |i: usize, j: usize| gram[i * m + j];
        let scale = (0..m).map(|i| g(i, i).abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);

        let mut cross = vec![0.0; n * n];
        for k in 0..n {
            for kk in k..n {
                let v = g(k + 1, kk + 1) - g(k, kk + 1) - g(k + 1, kk) + g(k, kk);
                cross[k * n + kk] = v;
                cross[kk * n + k] = v;
            }
        }
        let mut sigma_sq = Vec::with_capacity(n);
        for k in 0..n {
            let s = cross[k * n + k];
            if s < -1e-10 * scale {
                return Err(Error::KernelIntegrity(format!(
                    "negative increment variance {s:e} on interval {k} of {}",
                    kernel
                )));
            }
            let s = s.max(0.0);
            cross[k * n + k] = s;
            sigma_sq.push(s);
        }
        let alpha = (0..n)
            .map(|k| if k == 0 { 0.0 } else { g(k, k + 1) - g(k, k) - g(0, k + 1) + g(0, k) })
            .collect();
        let diag_incr = (0..n).map(|k| g(k + 1, k + 1) - g(k, k)).collect();
        Ok(PartitionTables { sigma_sq, alpha, diag_incr, cross, n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `<beta_k, beta_k'>`.
    #[inline]
    pub fn cross(&self, k: usize, kk: usize) -> f64 {
        self.cross[k * self.n + kk]
    }
}

/// Free-function form of [`CovarianceKernel::partition_tables`].
pub fn partition_tables(kernel: &CovarianceKernel, p: &Partition) -> Result<PartitionTables> {
    PartitionTables::new(kernel, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn catalogue(horizon: f64) -> Vec<CovarianceKernel> {
        vec![
            CovarianceKernel::brownian(horizon).unwrap(),
            CovarianceKernel::fbm(0.2, horizon).unwrap(),
            CovarianceKernel::fbm(0.35, horizon).unwrap(),
            CovarianceKernel::fbm(0.75, horizon).unwrap(),
            CovarianceKernel::ornstein_uhlenbeck(1.5, 0.8, horizon).unwrap(),
            CovarianceKernel::brownian_bridge(horizon).unwrap(),
        ]
    }

    #[test]
    fn eval_r_examples() {
        let bm = CovarianceKernel::brownian(1.0).unwrap();
        assert_eq!(bm.eval_r(0.3, 0.7).unwrap(), 0.3);
        let half = CovarianceKernel::fbm(0.5, 1.0).unwrap();
        assert!((half.eval_r(0.3, 0.7).unwrap() - 0.3).abs() < 1e-15);
        let quarter = CovarianceKernel::fbm(0.25, 4.0).unwrap();
        let expected = 0.5 * (1.0 + 2.0 - 3f64.sqrt());
        assert!((quarter.eval_r(1.0, 4.0).unwrap() - expected).abs() < 1e-14);
        assert!((quarter.eval_r(1.0, 4.0).unwrap() - 0.6339746).abs() < 1e-7);
    }

    #[test]
    fn eval_r_rejects_out_of_range() {
        let bm = CovarianceKernel::brownian(1.0).unwrap();
        assert!(matches!(bm.eval_r(-0.1, 0.5), Err(Error::Domain(_))));
        assert!(matches!(bm.eval_r(0.5, 1.5), Err(Error::Domain(_))));
        assert!(bm.eval_r(0.5, 1.0 + 1e-14).is_ok());
    }

    #[test]
    fn declared_indices() {
        let bm = CovarianceKernel::brownian(1.0).unwrap();
        assert_eq!((bm.rho(), bm.rho_prime()), (1.0, 1.0));
        let f = CovarianceKernel::fbm(0.2, 1.0).unwrap();
        assert!((f.rho() - 2.5).abs() < 1e-15);
        assert_eq!(f.rho_prime(), 1.0);
        assert_eq!(CovarianceKernel::fbm(0.7, 1.0).unwrap().rho(), 1.0);
    }

    #[test]
    fn invalid_kernels() {
        assert!(CovarianceKernel::fbm(0.0, 1.0).is_err());
        assert!(CovarianceKernel::fbm(1.0, 1.0).is_err());
        assert!(CovarianceKernel::brownian(0.0).is_err());
        assert!(CovarianceKernel::ornstein_uhlenbeck(-1.0, 1.0, 1.0).is_err());
        assert!(CovarianceKernel::with_indices(KernelFamily::Brownian, 1.0, 0.5, 1.0).is_err());
    }

    #[test]
    fn rect_increment_examples() {
        let bm = CovarianceKernel::brownian(1.0).unwrap();
        assert_eq!(bm.rect_increment(0.4, 0.4, 0.1, 0.9).unwrap(), 0.0);
        assert!((bm.rect_increment(0.2, 0.5, 0.3, 0.7).unwrap() - 0.2).abs() < 1e-15);
        assert_eq!(bm.rect_increment(0.1, 0.2, 0.5, 0.9).unwrap(), 0.0);
        assert!(matches!(bm.rect_increment(0.5, 0.2, 0.0, 1.0), Err(Error::Domain(_))));
        for k in catalogue(2.0) {
            assert_eq!(k.rect_increment(0.7, 0.7, 0.1, 1.9).unwrap(), 0.0);
        }
    }

    #[test]
    fn diagonal_increment_examples() {
        let bm = CovarianceKernel::brownian(1.0).unwrap();
        assert!((bm.diagonal_increment(0.2, 0.9).unwrap() - 0.7).abs() < 1e-15);
        let f = CovarianceKernel::fbm(0.2, 1.0).unwrap();
        assert_eq!(f.diagonal_increment(0.0, 1.0).unwrap(), 1.0);
        let f = CovarianceKernel::fbm(0.35, 1.0).unwrap();
        let expected = 1.0 - 0.25f64.powf(0.7);
        assert!((f.diagonal_increment(0.25, 1.0).unwrap() - expected).abs() < 1e-15);
        assert!((expected - 0.62107).abs() < 1e-5);
        assert!(f.diagonal_increment(0.5, 0.25).is_err());
    }

    #[test]
    fn brownian_tables() {
        let bm = CovarianceKernel::brownian(1.0).unwrap();
        let p = Partition::uniform(4, 1.0).unwrap();
        let t = bm.partition_tables(&p).unwrap();
        assert_eq!(t.alpha, vec![0.0; 4]);
        assert_eq!(t.sigma_sq, vec![0.25; 4]);
        for k in 0..4 {
            for kk in 0..4 {
                let expected = if k == kk { 0.25 } else { 0.0 };
                assert_eq!(t.cross(k, kk), expected);
            }
        }
    }

    #[test]
    fn fbm_stationary_increments() {
        let f = CovarianceKernel::fbm(0.35, 1.0).unwrap();
        for n in [3usize, 8, 50] {
            let p = Partition::uniform(n, 1.0).unwrap();
            let t = f.partition_tables(&p).unwrap();
            let expected = (1.0 / n as f64).powf(0.7);
            for s in &t.sigma_sq {
                assert!((s - expected).abs() < 1e-13, "{s} vs {expected}");
            }
        }
    }

    #[test]
    fn tables_satisfy_diagonal_identity() {
        let p = Partition::new(vec![0.0, 0.1, 0.15, 0.5, 0.9, 1.3, 2.0]).unwrap();
        for k in catalogue(2.0) {
            let t = k.partition_tables(&p).unwrap();
            assert_eq!(t.alpha[0], 0.0);
            for j in 0..p.n() {
                let rhs = -0.5 * t.sigma_sq[j] + 0.5 * t.diag_incr[j];
                assert!((t.alpha[j] - rhs).abs() < 1e-13, "{k}: {} vs {rhs}", t.alpha[j]);
                for jj in 0..p.n() {
                    assert_eq!(t.cross(j, jj), t.cross(jj, j));
                }
            }
        }
    }

    #[test]
    fn partition_validation() {
        assert!(Partition::new(vec![0.0]).is_err());
        assert!(Partition::new(vec![0.1, 1.0]).is_err());
        assert!(Partition::new(vec![0.0, 0.5, 0.5, 1.0]).is_err());
        let p = Partition::new(vec![0.0, 0.1, 0.6, 1.0]).unwrap();
        assert!((p.mesh() - 0.5).abs() < 1e-15);
        assert_eq!(p.n(), 3);
        let u = Partition::uniform(7, 3.0).unwrap();
        assert_eq!(u.horizon(), 3.0);
    }

    #[test]
    fn tables_reject_mismatched_horizon() {
        let bm = CovarianceKernel::brownian(1.0).unwrap();
        let p = Partition::uniform(4, 2.0).unwrap();
        assert!(bm.partition_tables(&p).is_err());
    }

    #[test]
    fn spec_round_trip_and_compact_form() {
        let spec = KernelSpec::parse_compact("fbm:hurst=0.35", 1.0).unwrap();
        let k = spec.build().unwrap();
        assert_eq!(k.family(), KernelFamily::FractionalBrownian { hurst: 0.35 });
        let json = serde_json::to_string(&k.to_spec()).unwrap();
        let back: KernelSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back.build().unwrap(), k);
        assert!(KernelSpec::parse_compact("fbm", 1.0).unwrap().build().is_err());
        assert!(KernelSpec::parse_compact("nope", 1.0).unwrap().build().is_err());
        assert!(KernelSpec::parse_compact("brownian:hurst=0.3", 1.0).unwrap().build().is_err());
        let parsed: KernelSpec =
            serde_json::from_str(r#"{"name":"ou","params":{"rate":2,"sigma":1},"T":1.5,"rho_prime":1.2}"#).unwrap();
        let ou = parsed.build().unwrap();
        assert_eq!(ou.rho(), 1.0);
        assert_eq!(ou.rho_prime(), 1.2);
    }

    fn kernel_strategy() -> impl Strategy<Value = CovarianceKernel> {
        prop_oneof![
            Just(CovarianceKernel::brownian(1.0).unwrap()),
            (0.05f64..0.95).prop_map(|h| CovarianceKernel::fbm(h, 1.0).unwrap()),
            (0.1f64..5.0, 0.1f64..2.0).prop_map(|(r, s)| CovarianceKernel::ornstein_uhlenbeck(r, s, 1.0).unwrap()),
            Just(CovarianceKernel::brownian_bridge(1.0).unwrap()),
        ]
    }

    proptest! {
        #[test]
        fn symmetric(k in kernel_strategy(), s in 0.0f64..=1.0, t in 0.0f64..=1.0) {
            prop_assert_eq!(k.eval_r(s, t).unwrap(), k.eval_r(t, s).unwrap());
        }

        #[test]
        fn rect_is_additive(k in kernel_strategy(), mut pts in proptest::collection::vec(0.0f64..=1.0, 5)) {
            pts.sort_by(f64::total_cmp);
            let (u, v, w) = (pts[0], pts[1], pts[2]);
            let (s, t) = (pts[3].min(pts[4]), pts[3].max(pts[4]));
            let whole = k.rect_increment(u, w, s, t).unwrap();
            let parts = k.rect_increment(u, v, s, t).unwrap() + k.rect_increment(v, w, s, t).unwrap();
            prop_assert!((whole - parts).abs() < 1e-12);
        }

        #[test]
        fn brownian_rect_is_overlap(a in 0.0f64..=1.0, b in 0.0f64..=1.0, c in 0.0f64..=1.0, d in 0.0f64..=1.0) {
            let bm = CovarianceKernel::brownian(1.0).unwrap();
            let (u, v) = (a.min(b), a.max(b));
            let (s, t) = (c.min(d), c.max(d));
            let overlap = (v.min(t) - u.max(s)).max(0.0);
            prop_assert!((bm.rect_increment(u, v, s, t).unwrap() - overlap).abs() < 1e-12);
        }
    }
}
