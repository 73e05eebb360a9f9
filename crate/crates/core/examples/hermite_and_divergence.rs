//! Hermite polynomials and closed-form iterated divergences on one interval.
//!
//! Usage: `cargo run --example hermite_and_divergence`

use std::sync::Arc;

use skorohod::chaos::{divergence_eval, hermite_eval, monomial_hermite_coeff};
use skorohod::kernel::{CovarianceKernel, Partition};
use skorohod::multi_index::MultiIndex;
use skorohod::sampler::{sample_paths, SimConfig};
use skorohod::testfn::TestFunction;

fn main() -> skorohod::Result<()> {
    for k in 0..=5 {
        println!("H_{k}(1.5) = {}", hermite_eval(k, 1.5));
    }
    let x: f64 = 0.8;
    let rebuilt: f64 = (0..=3).map(|q| monomial_hermite_coeff(6, q).unwrap() as f64 * hermite_eval(6 - 2 * q, x)).sum();
    println!("x^6 at {x}: {} vs {}", x.powi(6), rebuilt);

    let kernel = CovarianceKernel::fbm(0.3, 1.0)?;
    let p = Arc::new(Partition::uniform(4, 1.0)?);
    let tables = vec![kernel.partition_tables(&p)?];
    let f = TestFunction::sinusoid(1.0, vec![1.5], 0.0, 0.0)?;
    let path = &sample_paths(&[kernel], &p, &SimConfig::new(1, 3))?[0];

    for order in 1..=3 {
        let div = divergence_eval(&f, &MultiIndex::zeros(1), &MultiIndex::from_slice(&[order]), 2, &tables)?;
        println!("\ndelta^{order}(f(x_2) beta_2^{order}) has {} terms:", div.terms().len());
        for t in div.terms() {
            println!("  {:+.5} :dx^{}: d^{} f", t.coeff, t.hermite.get(0), t.deriv.get(0));
        }
        println!("  value on a sample path: {:.6}", div.eval(&f, path, &tables)?);
    }
    Ok(())
}
