//! The flux of an extension against the fractional Laplacian of its trace.
//!
//! cargo run --release --example kernel_symbol

use obstacle_lab::very_thin::{extend, f_a_flux, fractional_laplacian, predicted_flux_constant, FluxOptions, KernelSpec, LineFunction};

fn main() -> obstacle_lab::Result<()> {
    let a = -0.5;
    let kernel = KernelSpec::new(2, a)?;
    println!("kernel constant {:.10}, predicted ratio {:.6}", kernel.c, predicted_flux_constant(&kernel));
    let bumps = [
        LineFunction::bump(&[0.0], 1.0, 1.0),
        LineFunction::bump(&[0.3], 0.6, 2.0),
        LineFunction::bump(&[-0.2], 1.5, 0.5),
    ];
    for (i, v) in bumps.iter().enumerate() {
        let ext = extend(&kernel, v)?;
        for x in [0.05, 0.4] {
            let flux = f_a_flux(&ext, &[x], a, &FluxOptions::default())?.value;
            let frac = fractional_laplacian(v, &[x], -a / 2.0)?;
            println!("bump {i} at x = {x}: flux {flux:+.6e}, fractional {frac:+.6e}, ratio {:.6}", flux / frac);
        }
    }
    Ok(())
}
