//! First and second blow-ups of a field with a cubic correction, and the
//! translated quartic of the order-four example.
//!
//! cargo run --release --example blowup

use obstacle_lab::blowup::{blowup, BlowupOptions};
use obstacle_lab::poly::{ext_a, parse_poly};

fn main() -> obstacle_lab::Result<()> {
    let a = -0.5;
    let u = ext_a(&parse_poly("x1^2 + 0.1 x1^2 x2", 2)?, a)?;
    let (first, second) = blowup(&u, &[0.0, 0.0], a, &BlowupOptions::default())?;
    let f = first.singular().expect("the origin is singular");
    println!("kappa {}, p* = {}", f.kappa, f.p_star);
    println!("spine dimension {}, frequency {:.6}", f.spine.dim, f.frequency.value);
    let rep = second.expect("second blow-up");
    let lambda = rep.lambda_star.as_ref().map_or(f64::NAN, |l| l.value);
    println!("case {:?}, lambda* = {lambda:.6}", rep.case);
    if let Some(q) = &rep.q {
        println!("q = {q}");
    }
    if let Some(o) = &rep.orthogonality {
        println!("<q, p*> = {:.2e}, largest probe {:.2e}", o.with_p_star, o.probe_max);
    }
    println!("next-order flags: {:?}", rep.nxt);

    let quartic = ext_a(&parse_poly("x1^2 x2^2", 2)?, 0.0)?;
    let (first, second) = blowup(&quartic, &[0.3, 0.0], 0.0, &BlowupOptions::default())?;
    let f = first.singular().expect("(0.3, 0) is singular");
    println!("\nat (0.3, 0): kappa {}, p* = {}", f.kappa, f.p_star);
    if let Some(rep) = second {
        println!("q = {}", rep.q.map_or("-".into(), |q| q.to_string()));
    }
    Ok(())
}
