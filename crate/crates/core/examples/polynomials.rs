//! Polynomial toolkit: the even a-harmonic extension, its spine, cone
//! membership and weighted inner products on the unit sphere.
//!
//! cargo run --release --example polynomials

use num_rational::BigRational;
use obstacle_lab::poly::{
    ext_a, ext_a_exact, homogeneous_basis, is_in_p_kappa, la_residual, parse_poly, parse_poly_exact, sphere_inner, spine,
    MembershipOptions,
};

fn main() -> obstacle_lab::Result<()> {
    let a = -0.5;
    let trace = parse_poly("x1^2 x2^2", 2)?;
    let p = ext_a(&trace, a)?;
    println!("Ext_a(x1^2 x2^2), a = {a}:\n  {p}");
    println!("  L_a residual has {} terms", la_residual(&p, a)?.len());

    // exact arithmetic for golden values
    let exact = ext_a_exact(&parse_poly_exact("x1^4", 1)?, &BigRational::new((-1).into(), 2.into()))?;
    println!("exact Ext_a(x1^4): {exact}");

    for s in ["x1^2", "x1^2 + 2 x1 x2 + x2^2", "x1^2 x2^2", "x1^2 - x2^2"] {
        let q = ext_a(&parse_poly(s, 2)?, a)?;
        let sp = spine(&q);
        let k = q.degree();
        let m = is_in_p_kappa(&q, k, a, &MembershipOptions::default());
        println!("{s:>12}: degree {k}, spine dimension {}, in the cone: {}", sp.dim, m.member);
    }

    let basis = homogeneous_basis(2, 3, a)?;
    println!("{} homogeneous a-harmonic cubics; Gram matrix on the unit sphere:", basis.len());
    for u in &basis {
        let row: Vec<String> = basis.iter().map(|v| format!("{:+.4}", sphere_inner(u, v, a))).collect();
        println!("  {}", row.join(" "));
    }
    Ok(())
}
