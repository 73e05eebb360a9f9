//! Exact Gaussian path simulation on a grid by Cholesky factorization of the
//! Gram matrix `R(t_i, t_j)`.
//!
//! Every path and component draws from its own ChaCha stream: the generator is
//! seeded with the master seed and switched to stream `path * d + component`.
//! Output is therefore independent of thread count and generation order.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernel::{CovarianceKernel, Partition};

/// Largest relative jitter tried before giving up on a factorization.
const MAX_RELATIVE_JITTER: f64 = 1e-8;
/// First relative jitter tried when the caller passes zero.
const FIRST_ESCALATION: f64 = 1e-14;

/// Dense square matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    dim: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(dim: usize) -> Self {
        Matrix { dim, data: vec![0.0; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::domain("matrix rows must all have length equal to the row count"));
        }
        Ok(Matrix { dim, data: rows.concat() })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.dim).all(|i| (0..i).all(|j| self[(i, j)] == self[(j, i)]))
    }

    /// `self * self^T`.
    pub fn mul_transpose(&self) -> Matrix {
        let n = self.dim;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                let v: f64 = self.row(i).iter().zip(self.row(j)).map(|(a, b)| a * b).sum();
                out[(i, j)] = v;
                out[(j, i)] = v;
            }
        }
        out
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.dim + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.dim + j]
    }
}

/// `M[i][j] = R(t_i, t_j)` on the grid points of `p`.
pub fn gram_matrix(kernel: &CovarianceKernel, p: &Partition) -> Matrix {
    let t = p.times();
    let h = kernel.horizon();
    let mut m = Matrix::zeros(t.len());
    for i in 0..t.len() {
        for j in 0..=i {
            let r = kernel.cov(t[i].min(h), t[j].min(h));
            m[(i, j)] = r;
            m[(j, i)] = r;
        }
    }
    m
}

/// Lower-triangular `L` with `L L^T ~= m + jitter * trace(m) / dim * I`.
///
/// Rows and columns that are identically zero (a process pinned at zero) are
/// excluded and produce zero rows of `L`. When the factorization breaks down
/// the relative jitter is raised tenfold, up to `1e-8`.
pub fn cholesky_psd(m: &Matrix, jitter: f64) -> Result<Matrix> {
    if !m.is_symmetric() {
        return Err(Error::NonPsd("matrix is not symmetric".into()));
    }
    if !(jitter >= 0.0) {
        return Err(Error::domain(format!("jitter must be nonnegative, got {jitter}")));
    }
    let n = m.dim();
    let active: Vec<usize> = (0..n).filter(|&i| m.row(i).iter().any(|&v| v != 0.0)).collect();
    let mut out = Matrix::zeros(n);
    if active.is_empty() {
        return Ok(out);
    }
    let trace = m.trace();
    let mut rel = jitter;
    loop {
        let shift = rel * trace / n as f64;
        match factor_active(m, &active, shift) {
            Some(lower) => {
                if rel > jitter {
                    log::debug!("cholesky needed relative jitter {rel:e}");
                }
                for (a, &i) in active.iter().enumerate() {
                    for (b, &j) in active.iter().enumerate().take(a + 1) {
                        out[(i, j)] = lower[a * active.len() + b];
                    }
                }
                return Ok(out);
            }
            None => {
                rel = if rel == 0.0 { FIRST_ESCALATION.max(jitter) } else { rel * 10.0 };
                if rel > MAX_RELATIVE_JITTER * (1.0 + 1e-9) {
                    return Err(Error::NonPsd(format!(
                        "factorization failed with relative jitter up to {MAX_RELATIVE_JITTER:e}"
                    )));
                }
            }
        }
    }
}

fn factor_active(m: &Matrix, active: &[usize], shift: f64) -> Option<Vec<f64>> {
    let k = active.len();
    let mut l = vec![0.0; k * k];
    for a in 0..k {
        for b in 0..=a {
            let mut s = m[(active[a], active[b])];
            if a == b {
                s += shift;
            }
            s -= l[a * k..a * k + b].iter().zip(&l[b * k..b * k + b]).map(|(x, y)| x * y).sum::<f64>();
            if a == b {
                if !(s > 0.0) {
                    return None;
                }
                l[a * k + a] = s.sqrt();
            } else {
                l[a * k + b] = s / l[b * k + b];
            }
        }
    }
    Some(l)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub n_paths: usize,
    pub master_seed: u64,
    pub jitter: f64,
}

impl SimConfig {
    pub const DEFAULT_JITTER: f64 = 1e-12;

    pub fn new(n_paths: usize, master_seed: u64) -> Self {
        SimConfig { n_paths, master_seed, jitter: Self::DEFAULT_JITTER }
    }

    fn validate(&self) -> Result<()> {
        if self.n_paths == 0 {
            return Err(Error::config("n_paths must be at least 1"));
        }
        if !(self.jitter >= 0.0) {
            return Err(Error::config("jitter must be nonnegative"));
        }
        Ok(())
    }
}

/// Values of a `d`-component path on a grid: `values[l][k] = x_l(t_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    pub grid: Arc<Partition>,
    pub values: Vec<Vec<f64>>,
    pub kernels: Arc<[CovarianceKernel]>,
}

impl SamplePath {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Builds a path from explicit values, checking shapes.
    pub fn from_values(grid: Arc<Partition>, values: Vec<Vec<f64>>, kernels: Arc<[CovarianceKernel]>) -> Result<Self> {
        if values.len() != kernels.len() || values.is_empty() {
            return Err(Error::domain(format!(
                "path has {} components but {} kernels",
                values.len(),
                kernels.len()
            )));
        }
        if values.iter().any(|v| v.len() != grid.n() + 1) {
            return Err(Error::domain("every component needs one value per grid point"));
        }
        Ok(SamplePath { grid, values, kernels })
    }

    /// `x(t_k)` across components.
    pub fn point(&self, k: usize) -> Vec<f64> {
        self.values.iter().map(|v| v[k]).collect()
    }

    /// Increment of component `l` over interval `k`.
    #[inline]
    pub fn increment(&self, l: usize, k: usize) -> f64 {
        self.values[l][k + 1] - self.values[l][k]
    }
}

/// Cholesky factors for a fixed set of component kernels on a fixed grid.
#[derive(Debug, Clone)]
pub struct PathSampler {
    grid: Arc<Partition>,
    kernels: Arc<[CovarianceKernel]>,
    factors: Vec<Matrix>,
}

impl PathSampler {
    pub fn new(kernels: &[CovarianceKernel], grid: Arc<Partition>, jitter: f64) -> Result<Self> {
        if kernels.is_empty() {
            return Err(Error::config("at least one component kernel is required"));
        }
        for k in kernels {
            let h = k.horizon();
            if (grid.horizon() - h).abs() > 1e-12 * h {
                return Err(Error::domain(format!(
                    "kernel horizon {h} does not match grid endpoint {}",
                    grid.horizon()
                )));
            }
        }
        let factors = kernels
            .iter()
            .map(|k| cholesky_psd(&gram_matrix(k, &grid), jitter))
            .collect::<Result<Vec<_>>>()?;
        Ok(PathSampler { grid, kernels: kernels.to_vec().into(), factors })
    }

    pub fn grid(&self) -> &Arc<Partition> {
        &self.grid
    }

    pub fn kernels(&self) -> &Arc<[CovarianceKernel]> {
        &self.kernels
    }

    pub fn dim(&self) -> usize {
        self.kernels.len()
    }

    /// Draws path number `path_index` of the stream family rooted at `seed`.
    pub fn sample(&self, seed: u64, path_index: usize) -> SamplePath {
        let d = self.dim();
        let m = self.grid.n() + 1;
        let mut z = vec![0.0; m];
        let values = self
            .factors
            .iter()
            .enumerate()
            .map(|(l, lower)| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream((path_index * d + l) as u64);
                for zi in z.iter_mut() {
                    *zi = StandardNormal.sample(&mut rng);
                }
                (0..m)
                    .map(|i| lower.row(i)[..=i].iter().zip(&z[..=i]).map(|(a, b)| a * b).sum())
                    .collect()
            })
            .collect();
        SamplePath { grid: self.grid.clone(), values, kernels: self.kernels.clone() }
    }
}

/// Draws `cfg.n_paths` independent paths of the `d` independent components.
pub fn sample_paths(kernels: &[CovarianceKernel], p: &Partition, cfg: &SimConfig) -> Result<Vec<SamplePath>> {
    cfg.validate()?;
    let sampler = PathSampler::new(kernels, Arc::new(p.clone()), cfg.jitter)?;
    Ok((0..cfg.n_paths).into_par_iter().map(|i| sampler.sample(cfg.master_seed, i)).collect())
}
