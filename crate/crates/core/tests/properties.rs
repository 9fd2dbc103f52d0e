use approx::assert_relative_eq;
use proptest::prelude::*;

use cusplab::blowup::{blow_down, blow_up, matching_map, ChartId};
use cusplab::cusp::{critical_branches, cubic_residual, StatePoint};
use cusplab::exp_maps::{compose_exp, compose_left, Diffeo, ExpTypeMap};
use cusplab::sdi::{sdi_closed, sdi_primitive, sdi_quadrature};

fn state() -> impl Strategy<Value = StatePoint> {
    (-2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64, 1e-6..0.5f64)
        .prop_map(|(a, b, z, e)| StatePoint::new(a, b, z, e).unwrap())
}

fn close(x: f64, y: f64, scale: f64) -> bool {
    (x - y).abs() <= 1e-11 * scale.max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn blow_up_then_down_is_the_identity(s in state()) {
        for chart in ChartId::ALL {
            let Ok(p) = blow_up(chart, &s) else { continue };
            let back = blow_down(&p);
            prop_assert!(close(back.a, s.a, s.a.abs()));
            prop_assert!(close(back.b, s.b, s.b.abs()));
            prop_assert!(close(back.z, s.z, s.z.abs()));
            prop_assert!(close(back.eps, s.eps, s.eps));
        }
    }

    #[test]
    fn matching_maps_commute_with_blow_down(s in state()) {
        let p = blow_up(ChartId::Eps, &s).unwrap();
        for to in ChartId::ALL {
            let Ok(q) = matching_map(ChartId::Eps, to, &p) else { continue };
            let back = blow_down(&q);
            prop_assert!(close(back.z, s.z, s.z.abs()));
            prop_assert!(close(back.a, s.a, s.a.abs()));
        }
    }

    #[test]
    fn critical_branches_solve_the_cubic(a in -3.0..3.0f64, b in -3.0..3.0f64) {
        let roots = critical_branches(a, b);
        prop_assert!(!roots.is_empty());
        for r in &roots {
            prop_assert!(cubic_residual(a, b, r.z).abs() < 1e-12 * (1.0 + r.z.abs().powi(3)));
        }
        prop_assert!(roots.windows(2).all(|w| w[0].z < w[1].z));
    }

    #[test]
    fn sdi_primitive_differentiates_to_the_integrand(b in -1.0..1.0f64, zeta in -2.0..2.0f64) {
        let h = 1e-5;
        let d = (sdi_primitive(b, zeta + h) - sdi_primitive(b, zeta - h)) / (2.0 * h);
        let want = (3.0 * zeta * zeta + b).powi(2);
        prop_assert!((d - want).abs() < 1e-6 * (1.0 + want));
    }

    #[test]
    fn closed_form_matches_quadrature(b in 0.05..1.0f64, z_en in 1.0..2.0f64, z_ex in -2.0..-1.0f64) {
        let closed = sdi_closed(b, z_en, z_ex).unwrap();
        let quad = sdi_quadrature(b, z_en, z_ex, 1e-12).unwrap();
        prop_assert!((closed - quad).abs() < 1e-9 * (1.0 + closed.abs()));
        prop_assert!(closed < 0.0);
    }

    #[test]
    fn pure_rates_add_under_composition(a1 in 0.1..2.0f64, a2 in 0.1..2.0f64, z in -1.0..1.0f64) {
        let eps = 0.5;
        let d = compose_exp(&ExpTypeMap::pure(a1), &ExpTypeMap::pure(a2));
        let got = d.eval(0.0, z, eps).unwrap().value;
        assert_relative_eq!(got, z * (-(a1 + a2) / eps).exp(), max_relative = 1e-12, epsilon = 1e-300);
        prop_assert_eq!(d.rate(0.0, eps).unwrap(), a1 + a2);
    }

    #[test]
    fn scaling_on_the_left_moves_into_the_correction(c in 0.2..5.0f64, a in 0.1..2.0f64, z in 0.01..1.0f64) {
        let eps = 0.3;
        let d = compose_left(&Diffeo::scale(c), &ExpTypeMap::pure(a));
        let got = d.eval(0.0, z, eps).unwrap().value;
        assert_relative_eq!(got, c * z * (-a / eps).exp(), max_relative = 1e-12);
        let phi = d.correction(0.0, z, eps).unwrap();
        prop_assert!((phi + eps * c.ln()).abs() < 1e-12);
    }
}
