use orbitlets_core::decomp::signal::BandlimitedSignal;
use orbitlets_core::group::{ChartKind, GroupChart};
use orbitlets_core::linalg::Vec2;
use orbitlets_core::transform::{slice_norm, SliceSpec};
use orbitlets_core::window::{AnalyticWindow, Profile};

/// ||G||_2 with G(y) = f_hat(h^-T y) psi_hat(y), by a midpoint rule over the window's box.
fn plancherel_oracle(f: &BandlimitedSignal, w: &AnalyticWindow, h: &orbitlets_core::group::GroupPoint) -> f64 {
    let (lo, hi) = w.bounding_box();
    let n = 800;
    let (dx, dy) = ((hi[0] - lo[0]) / n as f64, (hi[1] - lo[1]) / n as f64);
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            let y = Vec2::new(lo[0] + (i as f64 + 0.5) * dx, lo[1] + (j as f64 + 0.5) * dy);
            s += (f.eval(&h.dual_inv(&y)) * w.eval(&y)).norm_sqr();
        }
    }
    (s * dx * dy).sqrt()
}

#[test]
fn l2_slices_obey_plancherel() {
    let chart = GroupChart::new(ChartKind::Similitude2d);
    let w = AnalyticWindow::ball(2, Vec2::new(1.0, 0.0), 0.5, Profile::Bump);
    let f = BandlimitedSignal::from_window(&AnalyticWindow::ball(2, Vec2::new(1.4, 0.5), 0.6, Profile::Bump));
    // the last overlap is a thin sliver of two bump tails, resolved more slowly
    for (r, phi, tol) in [(0.9, -0.2, 1e-4), (1.1, 0.1, 1e-4), (0.8, 0.0, 1e-4), (1.0, 0.3, 2e-3)] {
        let h = chart.similitude_point(r, phi);
        let got = slice_norm(&f, &w, &h, 2.0, &SliceSpec::default());
        let want = plancherel_oracle(&f, &w, &h);
        assert!(want > 0.0);
        assert!((got - want).abs() < tol * want, "{got} vs {want}");
    }
}

#[test]
fn slice_norms_ignore_translation() {
    let chart = GroupChart::new(ChartKind::Shearlet2d);
    let w = AnalyticWindow::ball(2, Vec2::new(3.0, 3.0), 0.5, Profile::Bump);
    let f = BandlimitedSignal::from_window(&AnalyticWindow::ball(2, Vec2::new(2.5, 0.25), 0.7, Profile::Bump));
    let g = f.translated(&Vec2::new(0.7, -1.1));
    let h = chart.shearlet_point(1, 1.2, 1.1);
    for p in [1.0, 2.0, 3.0] {
        let (a, b) = (slice_norm(&f, &w, &h, p, &SliceSpec::default()), slice_norm(&g, &w, &h, p, &SliceSpec::default()));
        assert!(a > 0.0);
        assert!((a - b).abs() < 2e-3 * a, "p = {p}: {a} vs {b}");
    }
}
