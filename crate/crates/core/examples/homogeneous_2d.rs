//! Which homogeneities admit a very thin solution in the plane.
//!
//! cargo run --release --example homogeneous_2d

use obstacle_lab::very_thin::homogeneous::polynomial_profile;
use obstacle_lab::very_thin::verify_homogeneous_2d;

fn main() -> obstacle_lab::Result<()> {
    let a = -0.5;
    for k in 1..=3 {
        let g = polynomial_profile(k, a, 801)?;
        let v = verify_homogeneous_2d(&g, f64::from(k), a, 1e-3)?;
        println!("lambda {k}: {:?}, valid {}", v.class, v.valid);
    }
    let g = polynomial_profile(1, a, 801)?;
    let v = verify_homogeneous_2d(&g, 1.37, a, 1e-3)?;
    println!("lambda 1.37: admissible {}, valid {}", v.admissible_homogeneity, v.valid);
    let v = verify_homogeneous_2d(&vec![-1.0; 801], -a, a, 1e-3)?;
    println!("lambda {}: {:?}, flux at the origin {:.4}", -a, v.class, v.origin_flux);
    Ok(())
}
