//! Monte-Carlo convergence runs and their CSV formats.
//!
//! A run draws fresh paths at every mesh level `n = 2^e`, evaluates the sums
//! on each path, and reports the root-mean-square conversion residual per
//! level. Paths are generated in parallel, but every statistic is reduced
//! in path order, so a run is reproducible regardless of thread count.

use std::io::{Read, Write};
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chaos::SkorohodPlan;
use crate::error::{Error, Result};
use crate::integrals::{auto_orders, compensated_sum, stratonovich_oracle, young_sum, Quadrature, SumSpec};
use crate::kernel::{CovarianceKernel, KernelSpec, Partition, PartitionTables};
use crate::sampler::{PathSampler, SamplePath, SimConfig};
use crate::testfn::{FunctionSpec, TestFunction};

/// Largest mesh exponent accepted by a run.
pub const MAX_MESH_EXPONENT: u32 = 12;

/// `"auto"`, or explicit overrides such as `{ "skorohod": 1 }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OrdersSpec {
    Named(String),
    Explicit {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        strat: Option<u32>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        skorohod: Option<u32>,
    },
}

impl Default for OrdersSpec {
    fn default() -> Self {
        OrdersSpec::Named("auto".into())
    }
}

fn default_jitter() -> f64 {
    SimConfig::DEFAULT_JITTER
}

fn default_true() -> bool {
    true
}

fn is_true(b: &bool) -> bool {
    *b
}

/// A convergence experiment as read from JSON.
///
/// Give either `kernel` (used for every component) or `kernels` (one per
/// component). The number of components is `f.d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernels: Option<Vec<KernelSpec>>,
    pub f: FunctionSpec,
    pub mesh_exponents: Vec<u32>,
    pub n_paths: usize,
    pub master_seed: u64,
    pub orders: OrdersSpec,
    #[serde(default)]
    pub epsilon: f64,
    #[serde(default)]
    pub quadrature: Quadrature,
    #[serde(default = "default_jitter")]
    pub jitter: f64,
    /// When false, the `seconds` column is written as zero.
    #[serde(default = "default_true", skip_serializing_if = "is_true")]
    pub timing: bool,
    /// Grid size for `simulate`; defaults to the finest mesh level.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_n: Option<usize>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_path(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| {
            Error::config(format!("cannot read config {}: {e}", path.as_ref().display()))
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Validates the config and builds kernels, function and orders.
    pub fn resolve(&self) -> Result<Experiment> {
        let f = self.f.build()?;
        let d = f.dim();
        let kernels: Vec<CovarianceKernel> = match (&self.kernel, &self.kernels) {
            (Some(k), None) => vec![k.build()?; d],
            (None, Some(ks)) => {
                if ks.len() != d {
                    return Err(Error::config(format!("{} kernels given for d = {d}", ks.len())));
                }
                ks.iter().map(KernelSpec::build).collect::<Result<_>>()?
            }
            _ => return Err(Error::config("give exactly one of 'kernel' and 'kernels'")),
        };
        let horizon = kernels[0].horizon();
        if kernels.iter().any(|k| (k.horizon() - horizon).abs() > 1e-12 * horizon) {
            return Err(Error::config("all kernels must share the horizon T"));
        }
        if self.mesh_exponents.is_empty() {
            return Err(Error::config("mesh_exponents must not be empty"));
        }
        if let Some(&e) = self.mesh_exponents.iter().find(|&&e| e > MAX_MESH_EXPONENT) {
            return Err(Error::config(format!("mesh exponent {e} exceeds {MAX_MESH_EXPONENT}")));
        }
        if self.n_paths == 0 {
            return Err(Error::config("n_paths must be at least 1"));
        }
        if !(self.jitter.is_finite() && self.jitter >= 0.0) {
            return Err(Error::config("jitter must be finite and nonnegative"));
        }
        if self.grid_n == Some(0) {
            return Err(Error::config("grid_n must be at least 1"));
        }
        let (auto_skorohod, auto_strat) = auto_orders(&kernels, self.epsilon)?;
        let (strat_order, skorohod_order) = match &self.orders {
            OrdersSpec::Named(s) if s == "auto" => (auto_strat, auto_skorohod),
            OrdersSpec::Named(s) => return Err(Error::config(format!("orders must be \"auto\" or an object, got \"{s}\""))),
            OrdersSpec::Explicit { strat, skorohod } => (strat.unwrap_or(auto_strat), skorohod.unwrap_or(auto_skorohod)),
        };
        if skorohod_order < 1 || strat_order < skorohod_order {
            return Err(Error::config(format!(
                "need 1 <= skorohod <= strat, got skorohod = {skorohod_order}, strat = {strat_order}"
            )));
        }
        f.require_order((2 * skorohod_order).max(strat_order).max(2))?;
        let rho = kernels.iter().map(CovarianceKernel::rho).fold(1.0, f64::max);
        let rho_prime = kernels.iter().map(CovarianceKernel::rho_prime).fold(1.0, f64::max);
        Ok(Experiment {
            kernels: kernels.into(),
            f,
            mesh_exponents: self.mesh_exponents.clone(),
            n_paths: self.n_paths,
            master_seed: self.master_seed,
            strat_order,
            skorohod_order,
            quadrature: self.quadrature,
            jitter: self.jitter,
            timing: self.timing,
            grid_n: self.grid_n,
            regime: in_regime(rho, rho_prime),
            rho,
            rho_prime,
        })
    }
}

/// Whether the conversion formula is asserted: `rho < 3/2`, or
/// `1 / (2 rho) + 1 / rho' > 1`.
pub fn in_regime(rho: f64, rho_prime: f64) -> bool {
    rho < 1.5 || 1.0 / (2.0 * rho) + 1.0 / rho_prime > 1.0
}

/// A validated experiment.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub kernels: Arc<[CovarianceKernel]>,
    pub f: TestFunction,
    pub mesh_exponents: Vec<u32>,
    pub n_paths: usize,
    pub master_seed: u64,
    pub strat_order: u32,
    pub skorohod_order: u32,
    pub quadrature: Quadrature,
    pub jitter: f64,
    pub timing: bool,
    pub grid_n: Option<usize>,
    pub regime: bool,
    pub rho: f64,
    pub rho_prime: f64,
}

/// Seed of the path streams at grid size `n`.
pub fn level_seed(master_seed: u64, n: usize) -> u64 {
    splitmix64(master_seed ^ splitmix64(n as u64))
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl Experiment {
    pub fn horizon(&self) -> f64 {
        self.kernels[0].horizon()
    }

    pub fn spec(&self, partition: Arc<Partition>) -> Result<SumSpec> {
        Ok(SumSpec::with_orders(partition, self.kernels.clone(), self.f.clone(), self.strat_order, self.skorohod_order)?
            .with_quadrature(self.quadrature))
    }

    /// Grid used by `simulate`.
    pub fn simulation_grid(&self) -> Result<Partition> {
        let n = self.grid_n.unwrap_or(1 << self.mesh_exponents.iter().max().expect("non-empty"));
        Partition::uniform(n, self.horizon())
    }

    /// Paths at grid size `n`, drawn from the same streams a convergence run
    /// uses at that level.
    pub fn simulate(&self, grid: &Partition) -> Result<Vec<SamplePath>> {
        let cfg = SimConfig { n_paths: self.n_paths, master_seed: level_seed(self.master_seed, grid.n()), jitter: self.jitter };
        crate::sampler::sample_paths(&self.kernels, grid, &cfg)
    }

    /// One row per mesh level.
    pub fn run(&self) -> Result<ConvergenceReport> {
        let mut rows = Vec::with_capacity(self.mesh_exponents.len());
        for &e in &self.mesh_exponents {
            let n = 1usize << e;
            let row = self.run_level(n).map_err(|err| err.at_mesh(n))?;
            log::info!("n = {n}: rms conversion residual {:.6e} +- {:.2e}", row.rms_conversion, row.stderr_conversion);
            rows.push(row);
        }
        Ok(ConvergenceReport {
            regime: self.regime,
            rho: self.rho,
            rho_prime: self.rho_prime,
            strat_order: self.strat_order,
            skorohod_order: self.skorohod_order,
            rows,
        })
    }

    fn run_level(&self, n: usize) -> Result<ConvergenceRow> {
        let start = Instant::now();
        let partition = Arc::new(Partition::uniform(n, self.horizon())?);
        let spec = self.spec(partition.clone())?;
        let tables = spec.tables()?;
        let plan = SkorohodPlan::new(spec.dim(), spec.skorohod_order, &tables)?;
        let sampler = PathSampler::new(&self.kernels, partition, self.jitter)?;
        let seed = level_seed(self.master_seed, n);
        let sums = (0..self.n_paths)
            .into_par_iter()
            .map(|i| path_sums(&spec, &tables, &plan, &sampler.sample(seed, i)))
            .collect::<Result<Vec<_>>>()?;
        let (rms_conversion, stderr_conversion) = rms_with_stderr(sums.iter().map(|s| s.conversion_residual));
        let (rms_strat_vs_oracle, _) = rms_with_stderr(sums.iter().map(|s| s.compensated - s.oracle));
        let mean_skorohod = sums.iter().map(|s| s.skorohod).sum::<f64>() / sums.len() as f64;
        let seconds = if self.timing { start.elapsed().as_secs_f64() } else { 0.0 };
        Ok(ConvergenceRow {
            n,
            mesh: spec.partition.mesh(),
            rms_conversion,
            stderr_conversion,
            rms_strat_vs_oracle,
            mean_skorohod,
            seconds,
        })
    }
}

/// Root mean square of `values` and its delta-method standard error
/// `sd(v^2) / (2 sqrt(N) rms)`.
pub fn rms_with_stderr(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let sq: Vec<f64> = values.map(|v| v * v).collect();
    let n = sq.len() as f64;
    if sq.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = sq.iter().sum::<f64>() / n;
    let rms = mean.sqrt();
    if sq.len() < 2 || rms == 0.0 {
        return (rms, 0.0);
    }
    let var = sq.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (rms, var.sqrt() / n.sqrt() / (2.0 * rms))
}

/// All sums on one path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSums {
    pub compensated: f64,
    pub skorohod: f64,
    pub young: f64,
    pub oracle: f64,
    pub conversion_residual: f64,
}

pub fn path_sums(spec: &SumSpec, tables: &[PartitionTables], plan: &SkorohodPlan, path: &SamplePath) -> Result<PathSums> {
    let compensated = compensated_sum(spec, path)?;
    let skorohod = plan.eval(&spec.f, path, tables)?;
    let young = young_sum(spec, path)?;
    let oracle = stratonovich_oracle(spec, path)?;
    Ok(PathSums { compensated, skorohod, young, oracle, conversion_residual: oracle - skorohod - 0.5 * young })
}

/// Sums for every path in `paths`, which must share one grid.
pub fn integrate_paths(exp: &Experiment, paths: &[SamplePath]) -> Result<Vec<PathSums>> {
    let first = paths.first().ok_or_else(|| Error::config("no paths to integrate"))?;
    let spec = exp.spec(first.grid.clone())?;
    let tables = spec.tables()?;
    let plan = SkorohodPlan::new(spec.dim(), spec.skorohod_order, &tables)?;
    paths.par_iter().map(|p| path_sums(&spec, &tables, &plan, p)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub mesh: f64,
    pub rms_conversion: f64,
    pub stderr_conversion: f64,
    pub rms_strat_vs_oracle: f64,
    pub mean_skorohod: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    /// Whether the conversion formula is claimed for these kernels.
    pub regime: bool,
    pub rho: f64,
    pub rho_prime: f64,
    pub strat_order: u32,
    pub skorohod_order: u32,
    pub rows: Vec<ConvergenceRow>,
}

/// Validates `cfg` and runs it.
pub fn run_convergence(cfg: &ExperimentConfig) -> Result<ConvergenceReport> {
    cfg.resolve()?.run()
}

pub const REPORT_HEADER: [&str; 7] =
    ["n", "mesh", "rms_conversion", "stderr_conversion", "rms_strat_vs_oracle", "mean_skorohod", "seconds"];

/// Formats with 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn emit_report<W: Write>(rows: &[ConvergenceRow], out: W) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::config("cannot write an empty report"));
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(REPORT_HEADER)?;
    for r in rows {
        w.write_record([
            r.n.to_string(),
            fmt_real(r.mesh),
            fmt_real(r.rms_conversion),
            fmt_real(r.stderr_conversion),
            fmt_real(r.rms_strat_vs_oracle),
            fmt_real(r.mean_skorohod),
            fmt_real(r.seconds),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_report<R: Read>(input: R) -> Result<Vec<ConvergenceRow>> {
    let mut r = csv::Reader::from_reader(input);
    if r.headers()?.iter().ne(REPORT_HEADER) {
        return Err(Error::config("unexpected report header"));
    }
    Ok(r.deserialize().collect::<std::result::Result<Vec<ConvergenceRow>, _>>()?)
}

pub const PATHS_HEADER: [&str; 5] = ["path_id", "component", "time_index", "time", "value"];

pub fn write_paths<W: Write>(paths: &[SamplePath], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(PATHS_HEADER)?;
    for (id, p) in paths.iter().enumerate() {
        let times = p.grid.times();
        for (l, comp) in p.values.iter().enumerate() {
            for (k, v) in comp.iter().enumerate() {
                w.write_record([id.to_string(), l.to_string(), k.to_string(), fmt_real(times[k]), fmt_real(*v)])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Deserialize)]
struct PathRecord {
    path_id: usize,
    component: usize,
    time_index: usize,
    time: f64,
    value: f64,
}

/// Reads paths written by [`write_paths`]; records must be grouped by path,
/// then component, with time indices in order.
pub fn read_paths<R: Read>(input: R, kernels: Arc<[CovarianceKernel]>) -> Result<Vec<SamplePath>> {
    let mut r = csv::Reader::from_reader(input);
    if r.headers()?.iter().ne(PATHS_HEADER) {
        return Err(Error::config("unexpected paths header"));
    }
    let d = kernels.len();
    let mut times: Vec<f64> = Vec::new();
    let mut grid: Option<Arc<Partition>> = None;
    let mut raw: Vec<Vec<Vec<f64>>> = Vec::new();
    for rec in r.deserialize::<PathRecord>() {
        let rec = rec?;
        if rec.component >= d {
            return Err(Error::config(format!("component {} but only {d} kernels", rec.component)));
        }
        if rec.path_id == raw.len() {
            raw.push(vec![Vec::new(); d]);
        } else if rec.path_id + 1 != raw.len() {
            return Err(Error::config(format!("path {} out of order", rec.path_id)));
        }
        let comp = &mut raw[rec.path_id][rec.component];
        if rec.time_index != comp.len() {
            return Err(Error::config(format!(
                "path {} component {}: time index {} out of order",
                rec.path_id, rec.component, rec.time_index
            )));
        }
        if rec.path_id == 0 && rec.component == 0 {
            times.push(rec.time);
        } else if times.get(rec.time_index) != Some(&rec.time) {
            return Err(Error::config("all paths must share one time grid"));
        }
        comp.push(rec.value);
    }
    if raw.is_empty() {
        return Err(Error::config("paths file holds no records"));
    }
    raw.into_iter()
        .map(|values| {
            let g = match &grid {
                Some(g) => g.clone(),
                None => {
                    let g = Arc::new(Partition::new(times.clone())?);
                    grid = Some(g.clone());
                    g
                }
            };
            SamplePath::from_values(g, values, kernels.clone())
        })
        .collect()
}

pub const SUMS_HEADER: [&str; 6] = ["path_id", "compensated", "skorohod", "young", "oracle", "conversion_residual"];

pub fn write_sums<W: Write>(sums: &[PathSums], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMS_HEADER)?;
    for (id, s) in sums.iter().enumerate() {
        w.write_record([
            id.to_string(),
            fmt_real(s.compensated),
            fmt_real(s.skorohod),
            fmt_real(s.young),
            fmt_real(s.oracle),
            fmt_real(s.conversion_residual),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brownian_config() -> ExperimentConfig {
        ExperimentConfig::from_json(
            r#"{
                "kernel": { "name": "brownian", "T": 1.0 },
                "f": { "family": "polynomial", "terms": [{ "coeff": 0.5, "x": [2] }], "d": 1 },
                "mesh_exponents": [3, 5, 7],
                "n_paths": 400,
                "master_seed": 42,
                "orders": "auto",
                "timing": false
            }"#,
        )
        .unwrap()
    }

    #[test]
    fn config_parsing() {
        let cfg = brownian_config();
        let exp = cfg.resolve().unwrap();
        assert_eq!((exp.strat_order, exp.skorohod_order), (2, 1));
        assert!(exp.regime);
        assert_eq!(exp.quadrature, Quadrature::Trapezoid);
        assert_eq!(ExperimentConfig::from_json(&cfg.to_json()).unwrap(), cfg);

        let mut bad = cfg.clone();
        bad.orders = OrdersSpec::Named("fast".into());
        assert!(matches!(bad.resolve(), Err(Error::Config(_))));
        let mut bad = cfg.clone();
        bad.mesh_exponents.clear();
        assert!(bad.resolve().is_err());
        let mut bad = cfg.clone();
        bad.kernels = Some(vec![]);
        assert!(bad.resolve().is_err());
        let mut forced = cfg.clone();
        forced.orders = OrdersSpec::Explicit { strat: None, skorohod: Some(3) };
        assert!(forced.resolve().is_err());
        forced.orders = OrdersSpec::Explicit { strat: Some(4), skorohod: Some(2) };
        assert_eq!(forced.resolve().unwrap().skorohod_order, 2);
        assert!(ExperimentConfig::from_json(r#"{"nonsense": 1}"#).is_err());
        let explicit: OrdersSpec = serde_json::from_str(r#"{ "skorohod": 1 }"#).unwrap();
        assert_eq!(explicit, OrdersSpec::Explicit { strat: None, skorohod: Some(1) });
    }

    #[test]
    fn regime_flag() {
        assert!(in_regime(1.0, 1.0));
        assert!(in_regime(1.0 / 0.7, 1.0));
        assert!(in_regime(2.5, 1.0));
        assert!(!in_regime(2.5, 2.0));
        let mut cfg = brownian_config();
        cfg.kernel = Some(KernelSpec::parse_compact("fbm:hurst=0.2", 1.0).unwrap());
        cfg.kernel.as_mut().unwrap().rho_prime = Some(3.0);
        let exp = cfg.resolve().unwrap();
        assert!(!exp.regime);
        assert_eq!((exp.strat_order, exp.skorohod_order), (5, 2));
    }

    #[test]
    fn brownian_run_is_deterministic_and_converges() {
        let cfg = brownian_config();
        let a = run_convergence(&cfg).unwrap();
        let b = run_convergence(&cfg).unwrap();
        let (mut ba, mut bb) = (Vec::new(), Vec::new());
        emit_report(&a.rows, &mut ba).unwrap();
        emit_report(&b.rows, &mut bb).unwrap();
        assert_eq!(ba, bb);
        assert_eq!(a.rows.iter().map(|r| r.n).collect::<Vec<_>>(), vec![8, 32, 128]);
        // residual = sum dx^2 / 2 - T / 2 has rms sqrt(T mesh / 2)
        for r in &a.rows {
            let expected = (r.mesh / 2.0).sqrt();
            assert!((r.rms_conversion - expected).abs() < 4.0 * r.stderr_conversion + 0.02 * expected, "{r:?}");
            assert!(r.rms_strat_vs_oracle < 1e-13);
            assert_eq!(r.seconds, 0.0);
        }
    }

    #[test]
    fn report_round_trip() {
        let rows = vec![ConvergenceRow {
            n: 32,
            mesh: 1.0 / 32.0,
            rms_conversion: 0.123_456_789_012_345_67,
            stderr_conversion: 1e-300,
            rms_strat_vs_oracle: std::f64::consts::PI,
            mean_skorohod: -2.5e-17,
            seconds: 0.0,
        }];
        let mut buf = Vec::new();
        emit_report(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert_eq!(text.lines().next().unwrap(), REPORT_HEADER.join(","));
        assert_eq!(read_report(buf.as_slice()).unwrap(), rows);
        assert!(emit_report(&[], Vec::new()).is_err());
    }

    #[test]
    fn paths_round_trip_and_integrate() {
        let mut cfg = brownian_config();
        cfg.n_paths = 5;
        cfg.grid_n = Some(16);
        let exp = cfg.resolve().unwrap();
        let grid = exp.simulation_grid().unwrap();
        let paths = exp.simulate(&grid).unwrap();
        let mut buf = Vec::new();
        write_paths(&paths, &mut buf).unwrap();
        let back = read_paths(buf.as_slice(), exp.kernels.clone()).unwrap();
        assert_eq!(back, paths);
        let sums = integrate_paths(&exp, &back).unwrap();
        for (s, p) in sums.iter().zip(&paths) {
            let xt = p.values[0][16];
            assert!((s.oracle - 0.5 * xt * xt).abs() < 1e-12);
            assert!((s.young - 1.0).abs() < 1e-12);
        }
        let mut out = Vec::new();
        write_sums(&sums, &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap().lines().count(), 6);
    }

    #[test]
    fn stderr_estimator() {
        let (rms, se) = rms_with_stderr([3.0, -3.0, 3.0].into_iter());
        assert_eq!((rms, se), (3.0, 0.0));
        let (rms, _) = rms_with_stderr([3.0, 4.0].into_iter());
        assert!((rms - 12.5f64.sqrt()).abs() < 1e-15);
    }
}
