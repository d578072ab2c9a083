use orbitlets_core::group::{ChartKind, GroupChart, Params};
use orbitlets_core::linalg::{Mat2, Vec2};
use proptest::prelude::*;

fn close(a: &Mat2, b: &Mat2, tol: f64) -> bool {
    (a - b).abs().max() <= tol * (1.0 + b.abs().max())
}

fn params() -> impl Strategy<Value = Params> {
    (prop::bool::ANY, -2.0f64..2.0, -2.0f64..2.0).prop_map(|(s, t, a)| Params::new(if s { 1 } else { -1 }, t, a))
}

fn charts() -> Vec<GroupChart> {
    vec![GroupChart::new(ChartKind::Similitude2d), GroupChart::new(ChartKind::Shearlet2d)]
}

proptest! {
    #[test]
    fn product_is_matrix_product(p in params(), q in params()) {
        for c in charts() {
            let (g, h) = (c.point(p), c.point(q));
            let gh = c.mul(&g, &h);
            prop_assert!(close(&gh.matrix, &(g.matrix * h.matrix), 1e-10));
        }
    }

    #[test]
    fn inverse_is_matrix_inverse(p in params()) {
        for c in charts() {
            let h = c.point(p);
            let prod = h.matrix * c.inv(&h).matrix;
            prop_assert!(close(&prod, &Mat2::identity(), 1e-10));
        }
    }

    #[test]
    fn cross_section_hits_its_point(x in -3.0f64..3.0, y in -3.0f64..3.0) {
        prop_assume!(x.abs() > 1e-3);
        let xi = Vec2::new(x, y);
        for c in charts() {
            let h = c.cross_section(&xi).unwrap();
            let back = h.dual(&c.base_point());
            prop_assert!((back - xi).norm() < 1e-10 * (1.0 + xi.norm()));
        }
    }

    #[test]
    fn dual_action_preserves_orbit(p in params(), x in -3.0f64..3.0, y in -3.0f64..3.0) {
        let xi = Vec2::new(x, y);
        for c in charts() {
            let h = c.point(p);
            prop_assert_eq!(c.in_orbit(&xi), c.in_orbit(&h.dual(&xi)));
        }
    }

    #[test]
    fn conjugated_elements_are_conjugates(p in params(), theta in 0.0f64..6.3) {
        let g = orbitlets_core::linalg::rotation(theta);
        let base = GroupChart::new(ChartKind::Shearlet2d);
        let conj = base.conjugated(g).unwrap();
        let m = conj.point(p).matrix;
        let want = g.try_inverse().unwrap() * base.point(p).matrix * g;
        prop_assert!(close(&m, &want, 1e-10));
    }
}

#[test]
fn quarter_turn_moves_the_shearlet_blind_line() {
    let g = orbitlets_core::linalg::rotation(std::f64::consts::FRAC_PI_2);
    let conj = GroupChart::new(ChartKind::Shearlet2d).conjugated(g).unwrap();
    // the conjugated dual orbit is R x R*
    assert!(conj.in_orbit(&Vec2::new(0.0, 3.0)));
    assert!(!conj.in_orbit(&Vec2::new(2.0, 0.0)));
}

#[test]
fn dyadic_points_multiply_scalars() {
    let c = GroupChart::new(ChartKind::Dyadic1d);
    let h = c.mul(&c.dyadic_point(-0.5), &c.dyadic_point(3.0));
    assert!((c.natural_params(&h)[0] + 1.5).abs() < 1e-12);
}
