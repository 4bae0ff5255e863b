//! Compare the very thin grid solution on the line with the fractional
//! obstacle problem solved directly on the line.
//!
//! cargo run --release --example equivalence

use std::time::Instant;

use obstacle_lab::very_thin::{equivalence_chain, EquivalenceOptions, LineFunction};

fn main() -> obstacle_lab::Result<()> {
    let psi = LineFunction::bump(&[0.0], 0.5, 1.0);
    let t = Instant::now();
    let rep = equivalence_chain(&psi, -0.5, &EquivalenceOptions::default())?;
    println!("res {} in {:.1?}: {} line sweeps, {} grid sweeps", rep.res, t.elapsed(), rep.line_sweeps, rep.grid_sweeps);
    println!("line rel Linf    {:.3e}", rep.line_rel_linf);
    println!("contact rel Linf {:.3e} over {} nodes", rep.contact_rel_linf, rep.contact_nodes);
    println!("plane rel Linf   {:.3e}", rep.plane_rel_linf);
    for k in (0..rep.xs.len()).step_by(8) {
        println!("{:+.4} {:.6} {:.6}", rep.xs[k], rep.grid_line[k], rep.kernel_line[k]);
    }
    Ok(())
}
