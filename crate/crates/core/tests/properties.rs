//! Invariants as properties over random inputs.

mod common;

use proptest::prelude::*;

use common::{control, corollary, example2};
use cylfinsler::expr::{Bindings, Expr};
use cylfinsler::family::{build_family_phi, im_values, integral_identity_check, GFamilySpec, UnaryFn};
use cylfinsler::flatness::flatness_residuals;
use cylfinsler::geometry::{check_cylindrical_symmetry, check_homogeneity, random_orthogonal};
use cylfinsler::phi::PHI_VARS;
use cylfinsler::quadrature::{quadrature, GaussPanels};
use cylfinsler::spray::{f_partials, spray_coeffs};
use cylfinsler::tensor::det_identity_residual;
use cylfinsler::{BasePoint, MetricSpec, PhiPoint, Tangent};

fn tangent_point(n: usize) -> impl Strategy<Value = (BasePoint, Tangent)> {
    (
        -0.9f64..0.9,
        prop::collection::vec(-0.5f64..0.5, n),
        -2.0f64..2.0,
        prop::collection::vec(-1.5f64..1.5, n),
    )
        .prop_filter("ybar away from the slit", |(_, _, _, yb)| yb.iter().map(|v| v * v).sum::<f64>() > 0.04)
        .prop_filter("xbar away from the axis", |(_, xb, _, _)| xb.iter().map(|v| v * v).sum::<f64>() > 1e-4)
        .prop_map(|(x0, xb, y0, yb)| (BasePoint::new(x0, xb), Tangent::new(y0, yb)))
}

fn metrics() -> Vec<MetricSpec> {
    vec![control(3), example2(3), corollary(3)]
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 64,
        failure_persistence: None,
        ..ProptestConfig::default()
    })]

    #[test]
    fn metric_is_positively_homogeneous((x, y) in tangent_point(3), lambda in 0.05f64..20.0) {
        for spec in metrics() {
            let d = check_homogeneity(&spec, &x, &y, &[lambda]).unwrap();
            prop_assert!(d < 1e-12, "{}: {d}", spec.name);
        }
    }

    #[test]
    fn metric_is_cylindrically_symmetric((x, y) in tangent_point(3), seed in any::<u64>()) {
        let o = random_orthogonal(3, seed);
        for spec in metrics() {
            let f = spec.eval_f(&x, &y).unwrap();
            let d = check_cylindrical_symmetry(&spec, &x, &y, &o).unwrap();
            prop_assert!(d < 1e-12 * f, "{}: {d}", spec.name);
        }
    }

    #[test]
    fn euler_relation_holds((x, y) in tangent_point(3)) {
        for spec in metrics() {
            let fp = f_partials(&spec, &x, &y).unwrap();
            let e: f64 = fp.fy.iter().zip(y.to_vec()).map(|(a, b)| a * b).sum();
            prop_assert!((e - fp.f).abs() < 1e-12 * fp.f);
        }
    }

    #[test]
    fn spray_is_two_homogeneous((x, y) in tangent_point(3), lambda in 0.1f64..10.0) {
        for spec in metrics() {
            let g = spray_coeffs(&spec, &x, &y).unwrap().to_vec();
            let gl = spray_coeffs(&spec, &x, &y.scaled(lambda)).unwrap().to_vec();
            for (a, b) in g.iter().zip(&gl) {
                prop_assert!((b - lambda * lambda * a).abs() < 1e-10 * (1.0 + b.abs()));
            }
        }
    }

    #[test]
    fn determinant_identity_holds((x, y) in tangent_point(3)) {
        for spec in metrics() {
            let d = det_identity_residual(&spec, &x, &y).unwrap();
            prop_assert!(d.rel_diff < 1e-10, "{}: {:?}", spec.name, d);
        }
    }

    #[test]
    fn constrained_families_are_flat(
        c in -1.0f64..1.0,
        d in -1.0f64..1.0,
        a in 0.0f64..2.0,
        x0 in -1.0f64..1.0,
        z in -3.0f64..3.0,
        r in 0.05f64..0.95,
        sigma in -1.0f64..1.0,
    ) {
        // g₂ = c, g₃ = cz + d satisfies g₂ − zg₂′ − g₃′ = 0.
        let g2 = format!("{c:?}");
        let g3 = format!("{c:?}*z + {d:?}");
        let g6 = format!("{a:?} + xi");
        let fam = GFamilySpec::parse([Some("sqrt(1+z^2)"), Some(&g2), Some(&g3), Some("sin(x0)"), Some("r^2"), Some(&g6)])
            .unwrap();
        prop_assert!(fam.constraint_residual().unwrap() < 1e-12);
        let phi = build_family_phi(&fam).unwrap();
        let res = flatness_residuals(&phi, PhiPoint::new(x0, z, r, sigma * r)).unwrap();
        prop_assert!(res.r1.abs() < 1e-10 && res.r2.abs() < 1e-10, "{:?}", res);
    }

    #[test]
    fn corrected_im_relation_holds(r in 0.1f64..3.0, sigma in -1.0f64..1.0) {
        for row in im_values(r, sigma * r, 8).unwrap().iter().skip(1) {
            prop_assert!((row.i_corrected - row.i).abs() <= 1e-9 * (1.0 + row.i.abs()), "{:?}", row);
        }
    }

    #[test]
    fn integral_identity_holds(a in -2.0f64..2.0, b in -2.0f64..2.0, r in 0.05f64..1.5, sigma in -1.0f64..1.0) {
        let g6 = UnaryFn::parse(&format!("{a:?} + {b:?}*xi + sin(xi)"), "xi").unwrap();
        let c = integral_identity_check(&g6, r, sigma * r).unwrap();
        prop_assert!(c.abs_diff < 1e-9, "{:?}", c);
    }

    #[test]
    fn gauss_panels_are_exact_on_polynomials(coeffs in prop::collection::vec(-3.0f64..3.0, 1..12), hi in 0.1f64..3.0) {
        let p = |x: f64| coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c);
        let exact: f64 = coeffs.iter().enumerate().map(|(k, c)| c * hi.powi(k as i32 + 1) / (k + 1) as f64).sum();
        let gl = GaussPanels::new(1).integrate(|x| Ok(p(x)), 0.0, hi).unwrap();
        let simpson = quadrature(|x| Ok(p(x)), 0.0, hi, 1e-12).unwrap();
        prop_assert!((gl - exact).abs() < 1e-12 * (1.0 + exact.abs()));
        prop_assert!((simpson - exact).abs() < 1e-9 * (1.0 + exact.abs()));
    }

    #[test]
    fn dsl_jet_matches_finite_differences(
        c in prop::collection::vec(-2.0f64..2.0, 4),
        p in (-1.0f64..1.0, -1.0f64..1.0, 0.2f64..1.0, -0.5f64..0.5),
    ) {
        let src = format!(
            "{:?}*z^3 + {:?}*sin(r*s) + {:?}*exp(x0*z) + {:?}*sqrt(1 + r^2 + s^2)",
            c[0], c[1], c[2], c[3]
        );
        let e = Expr::parse(&src, &PHI_VARS).unwrap();
        let at = [p.0, p.1, p.2, p.3];
        let jet = e.eval_jet(&Bindings::from_pairs(PHI_VARS.iter().copied().zip(at)), &PHI_VARS).unwrap();
        let h = 1e-6;
        for (i, v) in PHI_VARS.iter().enumerate() {
            let mut hi = at;
            let mut lo = at;
            hi[i] += h;
            lo[i] -= h;
            let fd = (e.eval(&hi).unwrap() - e.eval(&lo).unwrap()) / (2.0 * h);
            let exact = jet.d(v).unwrap();
            prop_assert!((exact - fd).abs() < 1e-6 * (1.0 + exact.abs()), "{src} d/d{v}: {exact} vs {fd}");
        }
    }
}
