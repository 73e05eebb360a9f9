//! Conversion-residual convergence for fractional Brownian motion.
//!
//! Usage: `cargo run --release --example conversion_convergence [hurst] [n_paths] [skorohod_order]`
//!
//! Prints one line per mesh level with the RMS of
//! `oracle - skorohod - young / 2` and its standard error.

use skorohod::experiments::{run_convergence, ExperimentConfig, OrdersSpec};
use skorohod::kernel::KernelSpec;
use skorohod::testfn::FunctionSpec;

fn main() -> skorohod::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let hurst: f64 = args.first().map_or(0.35, |s| s.parse().expect("hurst"));
    let n_paths: usize = args.get(1).map_or(1000, |s| s.parse().expect("n_paths"));
    let orders = match args.get(2) {
        Some(s) => OrdersSpec::Explicit { strat: None, skorohod: Some(s.parse().expect("order")) },
        None => OrdersSpec::default(),
    };

    let cfg = ExperimentConfig {
        kernel: Some(KernelSpec::parse_compact(&format!("fbm:hurst={hurst}"), 1.0)?),
        kernels: None,
        f: FunctionSpec {
            family: "sinusoid".into(),
            d: 1,
            omega: Some(vec![2.0]),
            nu: Some(1.0),
            amplitude: None,
            phase: None,
            terms: None,
            decay: None,
            max_order: None,
        },
        mesh_exponents: (5..=10).collect(),
        n_paths,
        master_seed: 2024,
        orders,
        epsilon: 0.0,
        quadrature: Default::default(),
        jitter: 1e-12,
        timing: true,
        grid_n: None,
    };
    let report = run_convergence(&cfg)?;
    println!(
        "fbm H = {hurst}: rho = {:.4}, orders (strat, skorohod) = ({}, {}), regime = {}",
        report.rho, report.strat_order, report.skorohod_order, report.regime
    );
    println!("{:>6} {:>14} {:>12} {:>14} {:>9}", "n", "rms residual", "stderr", "rms comp-orc", "seconds");
    for r in &report.rows {
        println!(
            "{:>6} {:>14.6e} {:>12.3e} {:>14.6e} {:>9.2}",
            r.n, r.rms_conversion, r.stderr_conversion, r.rms_strat_vs_oracle, r.seconds
        );
    }
    let (first, last) = (&report.rows[0], report.rows.last().unwrap());
    println!("finest / coarsest = {:.3}", last.rms_conversion / first.rms_conversion);
    Ok(())
}
