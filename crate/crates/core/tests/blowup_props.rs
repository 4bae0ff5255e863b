mod common;

use common::ext;
use obstacle_lab::blowup::{blowup, BlowupOptions, SecondCase};
use obstacle_lab::field::FnField;
use obstacle_lab::poly::{sphere_norm, MultiPoly};
use proptest::prelude::*;

fn weight() -> impl Strategy<Value = f64> {
    prop::sample::select(vec![-0.5, -0.25, 0.0, 0.4])
}

/// `Ext_a(x1^2) + b Ext_a(x1^2 x2) + c Ext_a(x1^3)`: a quadratic
/// blow-up with a cubic correction vanishing on the spine.
fn constructed(a: f64, b: f64, c: f64) -> (MultiPoly, MultiPoly, MultiPoly) {
    let p = ext("x1^2", 2, a);
    let q = &ext("x1^2 x2", 2, a).scale(&b) + &ext("x1^3", 2, a).scale(&c);
    (&p + &q, p, q)
}

proptest! {
    #![proptest_config(common::config(24))]

    #[test]
    fn blowups_scale_with_the_field(a in weight(), b in 0.05f64..0.3, c in -0.2f64..0.2, s in prop::sample::select(vec![0.5, 2.0])) {
        let (u, _, _) = constructed(a, b, c);
        let opts = BlowupOptions::default();
        let (f0, r0) = blowup(&u, &[0.0, 0.0], a, &opts).unwrap();
        let us = u.clone();
        let scaled = FnField::new(2, move |x| us.eval(&x.iter().map(|v| s * v).collect::<Vec<_>>()));
        let (f1, r1) = blowup(&scaled, &[0.0, 0.0], a, &opts).unwrap();
        let (f0, f1) = (f0.singular().unwrap(), f1.singular().unwrap());
        prop_assert_eq!(f0.kappa, f1.kappa);
        let k = f0.kappa as i32;
        let expect = f0.p_star.scale(&s.powi(k));
        prop_assert!((&f1.p_star - &expect).max_coeff() <= 1e-6 * expect.max_coeff());
        let (r0, r1) = (r0.unwrap(), r1.unwrap());
        let (l0, l1) = (r0.lambda_star.unwrap().value, r1.lambda_star.unwrap().value);
        prop_assert!((l0 - l1).abs() < 1e-6);
        let q0 = r0.q.unwrap().scale(&s.powi(l0.round() as i32));
        prop_assert!(sphere_norm(&(&r1.q.unwrap() - &q0), a) <= 1e-6 * sphere_norm(&q0, a));
    }

    #[test]
    fn second_blowup_is_orthogonal_to_the_first(a in weight(), b in 0.05f64..0.3, c in -0.2f64..0.2) {
        let (u, p, q) = constructed(a, b, c);
        let (_, rep) = blowup(&u, &[0.0, 0.0], a, &BlowupOptions::default()).unwrap();
        let rep = rep.unwrap();
        prop_assert_eq!(rep.case, SecondCase::Polynomial);
        prop_assert!(sphere_norm(&(rep.q.as_ref().unwrap() - &q), a) <= 1e-6 * sphere_norm(&q, a));
        let o = rep.orthogonality.unwrap();
        let scale = sphere_norm(&p, a) * sphere_norm(&q, a);
        prop_assert!(o.with_p_star.abs() <= 1e-6 * scale);
        prop_assert!(o.doubled.abs() <= 1e-6 * scale && o.halved.abs() <= 1e-6 * scale);
    }

    #[test]
    fn blowups_are_invariant_along_the_spine(a in weight(), c in -0.5f64..0.5, d in -0.5f64..0.5, t in -0.2f64..0.2) {
        // depends on x1 and y only, so every point of the x2 axis looks the same
        let u = &(&ext("x1^2", 2, a) + &ext("x1^3", 2, a).scale(&c)) + &ext("x1^4", 2, a).scale(&d);
        let opts = BlowupOptions::default();
        let (f0, r0) = blowup(&u, &[0.0, 0.0], a, &opts).unwrap();
        let (f1, r1) = blowup(&u, &[0.0, t], a, &opts).unwrap();
        let (f0, f1) = (f0.singular().unwrap(), f1.singular().unwrap());
        prop_assert_eq!(f0.kappa, f1.kappa);
        prop_assert!((&f0.p_star - &f1.p_star).max_coeff() <= 1e-9);
        prop_assert_eq!(f0.spine.dim, 1);
        let (r0, r1) = (r0.unwrap(), r1.unwrap());
        prop_assert_eq!(r0.case, r1.case);
        prop_assert!((r0.lambda_star.unwrap().value - r1.lambda_star.unwrap().value).abs() < 1e-6);
    }

    #[test]
    fn very_thin_reports_keep_a_gap(a in -0.75f64..-0.1, lambda in 2.2f64..2.8, c in 0.05f64..0.5) {
        // the homogeneous correction -c rho^lambda is not a polynomial, so
        // the report falls in the very thin branch (n = 1, spine of dimension 0)
        let p = ext("x1^2", 1, a);
        let u = FnField::new(1, move |x| p.eval(x) - c * x[0].hypot(x[1]).powf(lambda));
        let (_, rep) = blowup(&u, &[0.0], a, &BlowupOptions::default()).unwrap();
        let rep = rep.unwrap();
        prop_assert_eq!(rep.case, SecondCase::VeryThinSolution);
        let gap = rep.gap.unwrap();
        prop_assert!((gap - (lambda - 2.0)).abs() < 0.02, "gap {gap} for lambda {lambda}");
        prop_assert!(gap >= 0.05);
        prop_assert!(!rep.nxt.polynomial_next);
    }
}
