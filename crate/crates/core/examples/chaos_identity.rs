//! Splits the compensated sum into M-terms and prints the per-case totals.
//!
//! Usage: `cargo run --release --example chaos_identity [hurst]`

use std::sync::Arc;

use skorohod::integrals::{chaos_decomposition, skorohod_sum, young_sum, Case, SumSpec};
use skorohod::kernel::{CovarianceKernel, Partition};
use skorohod::sampler::{sample_paths, SimConfig};
use skorohod::testfn::TestFunction;

fn main() -> skorohod::Result<()> {
    let hurst: f64 = std::env::args().nth(1).map_or(0.2, |s| s.parse().expect("hurst"));
    let kernels: Arc<[CovarianceKernel]> = vec![CovarianceKernel::fbm(hurst, 1.0)?].into();
    let p = Arc::new(Partition::uniform(16, 1.0)?);
    let f = TestFunction::sinusoid(1.0, vec![2.0], 1.0, 0.0)?;
    let spec = SumSpec::auto(p.clone(), kernels.clone(), f, 0.0)?;
    let tables = spec.tables()?;
    let path = &sample_paths(&kernels, &p, &SimConfig::new(1, 12))?[0];

    let dec = chaos_decomposition(&spec, path, &tables)?;
    println!(
        "orders (strat, skorohod) = ({}, {}), {} M-terms",
        spec.strat_order, spec.skorohod_order, dec.terms
    );
    for c in Case::ALL {
        println!("case {c:?}: {:+.10}", dec.case(c));
    }
    println!("compensated sum   {:+.10}", dec.compensated);
    println!("sum of M-terms    {:+.10}", dec.total);
    println!("relative residual {:.3e}", dec.relative_residual());
    println!("skorohod sum      {:+.10}", skorohod_sum(&spec, path, &tables)?);
    println!("young sum / 2     {:+.10}", 0.5 * young_sum(&spec, path)?);
    Ok(())
}
