//! Exact Gaussian sampling on a grid, with an empirical check of the variance.
//!
//! Usage: `cargo run --release --example sample_paths [hurst] [n_paths]`

use skorohod::kernel::{CovarianceKernel, Partition};
use skorohod::sampler::{sample_paths, SimConfig};

fn main() -> skorohod::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let hurst: f64 = args.first().map_or(0.3, |s| s.parse().expect("hurst"));
    let n_paths: usize = args.get(1).map_or(2000, |s| s.parse().expect("n_paths"));

    let kernel = CovarianceKernel::fbm(hurst, 1.0)?;
    let grid = Partition::uniform(8, 1.0)?;
    let paths = sample_paths(std::slice::from_ref(&kernel), &grid, &SimConfig::new(n_paths, 42))?;

    println!("first path: {:?}", paths[0].values[0].iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>());
    println!("{:>6} {:>12} {:>12}", "t", "empirical", "R(t,t)");
    for (k, &t) in grid.times().iter().enumerate().skip(1) {
        let var = paths.iter().map(|x| x.point(k)[0].powi(2)).sum::<f64>() / n_paths as f64;
        println!("{t:>6.3} {var:>12.5} {:>12.5}", kernel.cov(t, t));
    }
    Ok(())
}
