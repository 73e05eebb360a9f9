//! 1D p-variation of a path and 2D rho-variation of covariance kernels.
//!
//! Usage: `cargo run --release --example variation_diagnostics [grid_n]`

use skorohod::kernel::{CovarianceKernel, Partition};
use skorohod::sampler::{sample_paths, SimConfig};
use skorohod::variation::{p_variation_1d, rho_variation_2d, rho_variation_2d_heuristic, superadditivity_check};

fn main() -> skorohod::Result<()> {
    let grid_n: usize = std::env::args().nth(1).map_or(8, |s| s.parse().expect("grid_n"));
    let grid = Partition::uniform(grid_n, 1.0)?;

    let bm = CovarianceKernel::brownian(1.0)?;
    let path = &sample_paths(std::slice::from_ref(&bm), &Partition::uniform(256, 1.0)?, &SimConfig::new(1, 4))?[0];
    for p in [2.0, 2.5, 3.0] {
        println!("brownian path, {p}-variation^p = {:.5}", p_variation_1d(&path.values[0], p)?.value);
    }

    for kernel in [bm, CovarianceKernel::fbm(0.35, 1.0)?, CovarianceKernel::fbm(0.2, 1.0)?] {
        let rho = kernel.rho();
        let exact = rho_variation_2d(&kernel, &grid, rho, grid_n)?;
        let heuristic = rho_variation_2d_heuristic(&kernel, &grid, rho)?;
        println!(
            "{kernel}: exact {:.6}, heuristic {:.6}, rows {:?}",
            exact.value, heuristic.value, exact.axes[0]
        );
    }

    let fbm = CovarianceKernel::fbm(0.35, 1.0)?;
    let small = Partition::uniform(grid_n.min(6), 1.0)?;
    let report = superadditivity_check(&fbm, &small, fbm.rho())?;
    println!(
        "super-additivity of the grid variation for {fbm}: {} violations in {} splits",
        report.violations.len(),
        report.splits_checked
    );
    Ok(())
}
