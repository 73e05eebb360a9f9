//! For Brownian motion the Skorohod sum of `x^2 / 2` approaches `x_T^2 / 2 - T / 2`.
//!
//! Usage: `cargo run --release --example classical_ito [n_paths]`

use std::sync::Arc;

use skorohod::integrals::{skorohod_sum, SumSpec};
use skorohod::kernel::{CovarianceKernel, Partition};
use skorohod::sampler::{sample_paths, SimConfig};
use skorohod::testfn::TestFunction;

fn main() -> skorohod::Result<()> {
    let n_paths: usize = std::env::args().nth(1).map_or(500, |s| s.parse().expect("n_paths"));
    let kernels: Arc<[CovarianceKernel]> = vec![CovarianceKernel::brownian(1.0)?].into();
    println!("{:>6} {:>14}", "n", "rms error");
    for e in [4, 6, 8, 10] {
        let n = 1usize << e;
        let p = Arc::new(Partition::uniform(n, 1.0)?);
        let spec = SumSpec::auto(p.clone(), kernels.clone(), TestFunction::half_square(), 0.0)?;
        let tables = spec.tables()?;
        let paths = sample_paths(&kernels, &p, &SimConfig::new(n_paths, 1))?;
        let mut sq = 0.0;
        for path in &paths {
            let x_t = path.values[0][n];
            sq += (skorohod_sum(&spec, path, &tables)? - (0.5 * x_t * x_t - 0.5)).powi(2);
        }
        println!("{n:>6} {:>14.6e}", (sq / n_paths as f64).sqrt());
    }
    Ok(())
}
