//! Hölder exponents of extended barriers `|x'|^beta` at the origin.
//!
//! cargo run --release --example barrier

use obstacle_lab::very_thin::{barrier, HolderOptions, KernelSpec};

fn main() -> obstacle_lab::Result<()> {
    for (a, beta) in [(-0.5, 1.0), (-0.5, 0.25), (-0.25, 0.5)] {
        let kernel = KernelSpec::new(2, a)?;
        let (_, rep) = barrier(&kernel, beta, &HolderOptions::default())?;
        println!(
            "a = {a:+.2}, beta = {beta:.2}: exponent {:.4} (expected {:.4}), trace error {:.1e}, min on unit sphere {:.3e}",
            rep.holder.exponent, rep.expected_exponent, rep.trace_error, rep.boundary_min
        );
    }
    Ok(())
}
