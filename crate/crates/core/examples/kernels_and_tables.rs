//! Covariance kernels and the per-interval tables derived from them.
//!
//! Usage: `cargo run --example kernels_and_tables`

use skorohod::kernel::{CovarianceKernel, KernelSpec, Partition, CATALOGUE};

fn main() -> skorohod::Result<()> {
    for entry in CATALOGUE {
        println!("{:<16} {}", entry.name, entry.covariance);
    }

    let kernels = [
        CovarianceKernel::brownian(1.0)?,
        KernelSpec::parse_compact("fbm:hurst=0.35", 1.0)?.build()?,
        CovarianceKernel::ornstein_uhlenbeck(2.0, 1.0, 1.0)?,
        CovarianceKernel::brownian_bridge(1.0)?,
    ];
    let p = Partition::uniform(4, 1.0)?;
    for kernel in &kernels {
        let t = kernel.partition_tables(&p)?;
        println!("\n{kernel}");
        println!("{:>3} {:>12} {:>12} {:>12}", "k", "sigma^2", "alpha", "dR(t,t)");
        for k in 0..t.n() {
            println!("{k:>3} {:>12.6} {:>12.6} {:>12.6}", t.sigma_sq[k], t.alpha[k], t.diag_incr[k]);
        }
        println!("cross(0, 3) = {:.6}", t.cross(0, 3));
    }
    Ok(())
}
