//! Single slices x -> W_psi f(x, h).

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::decomp::grid::{lp_norm_samples, pow2_at_least, Domain, FrequencyGrid, SampledSignal};
use crate::decomp::signal::{Atom, BandlimitedSignal};
use crate::group::GroupPoint;
use crate::linalg::{invert, Vec2};
use crate::window::AnalyticWindow;

/// Sizing of the per-slice grids.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SliceSpec {
    /// spatial half-width in units of the smallest feature length
    pub decay: f64,
    /// frequency samples per feature length
    pub resolution: f64,
    /// frequency-box enlargement for p != 2, refining the spatial sampling of |W|
    pub oversample: f64,
    pub n_min: usize,
    pub n_max_1d: usize,
    pub n_max_2d: usize,
}

impl Default for SliceSpec {
    fn default() -> Self {
        SliceSpec { decay: 10.0, resolution: 6.0, oversample: 4.0, n_min: 32, n_max_1d: 1 << 14, n_max_2d: 256 }
    }
}

/// W_psi f(., h) on the spatial grid dual to `grid`.
pub fn wavelet_slice(f: &BandlimitedSignal, window: &AnalyticWindow, h: &GroupPoint, grid: &FrequencyGrid) -> SampledSignal {
    let s = h.det_abs.sqrt();
    let data = crate::par::map_range(grid.len(), |k| {
        let xi = grid.freq(k);
        let w = window.eval(&h.dual(&xi));
        if w == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            f.eval(&xi) * (w * s)
        }
    });
    SampledSignal::new(grid.clone(), data, Domain::Frequency).to_spatial()
}

/// The signal y -> f_hat(h^-T y), i.e. the spectrum of |det h|^(-1/2) pi(0, h)^-1 f up to scaling.
pub fn pulled_back(f: &BandlimitedSignal, h: &GroupPoint) -> BandlimitedSignal {
    let hit = invert(&h.matrix).transpose();
    let hinv = invert(&h.matrix);
    let atoms = f
        .atoms
        .iter()
        .map(|a| {
            let mut sh = hinv * a.shift();
            if f.dim == 1 {
                sh[1] = 0.0;
            }
            Atom::new(a.window.composed(&hit, 1.0), a.coeff(), sh)
        })
        .collect();
    BandlimitedSignal::new(f.dim, atoms)
}

fn box_of(w: &AnalyticWindow) -> (Vec2, Vec2) {
    w.bounding_box()
}

/// Bounding box of supp f_hat intersected with the box of `other`; None if disjoint.
fn intersect_box(f: &BandlimitedSignal, other: (Vec2, Vec2), dim: usize) -> Option<(Vec2, Vec2)> {
    let (flo, fhi) = f.bounding_box()?;
    let lo = flo.sup(&other.0);
    let hi = fhi.inf(&other.1);
    if (0..dim).any(|a| lo[a] >= hi[a]) {
        return None;
    }
    Some((lo, hi))
}

/// Grid for G(y) = f_hat(h^-T y) psi_hat(y), or None when the product vanishes.
pub fn slice_grid(f: &BandlimitedSignal, window: &AnalyticWindow, h: &GroupPoint, p: f64, spec: &SliceSpec) -> Option<(FrequencyGrid, BandlimitedSignal)> {
    if window.is_zero() || f.is_zero() {
        return None;
    }
    let g = pulled_back(f, h);
    let (lo, hi) = intersect_box(&g, box_of(window), f.dim)?;
    let dim = f.dim;
    let center = (lo + hi) / 2.0;
    let mut half = if dim == 1 { (hi[0] - lo[0]) / 2.0 } else { ((hi - lo) / 2.0).max() } * 1.25;
    let feature = g
        .atoms
        .iter()
        .filter(|a| !a.window.is_zero())
        .map(|a| a.window.inner_radius() * a.window.profile.feature_scale())
        .fold(window.inner_radius() * window.profile.feature_scale(), f64::min)
        .min(half);
    let n_max = if dim == 1 { spec.n_max_1d } else { spec.n_max_2d };
    let mut n = pow2_at_least(2.0 * half * spec.resolution / feature, spec.n_min, n_max);
    if p != 2.0 {
        half *= spec.oversample.max(1.0);
        let shift = g.atoms.iter().map(|a| a.shift().norm()).fold(0.0, f64::max);
        let reach = shift + spec.decay / feature;
        n = n.max(pow2_at_least(4.0 * half * reach, spec.n_min, n_max));
    }
    let grid = FrequencyGrid::centered(dim, n, half, center).expect("power-of-two grid");
    Some((grid, g))
}

/// ||W_psi f(., h)||_p = |det h|^(1/p - 1/2) ||F^-1 G||_p with G(y) = f_hat(h^-T y) conj psi_hat(y).
pub fn slice_norm(f: &BandlimitedSignal, window: &AnalyticWindow, h: &GroupPoint, p: f64, spec: &SliceSpec) -> f64 {
    let Some((grid, g)) = slice_grid(f, window, h, p, spec) else { return 0.0 };
    let data: Vec<Complex64> = grid
        .frequencies()
        .map(|y| {
            let w = window.eval(&y);
            if w == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                g.eval(&y) * w
            }
        })
        .collect();
    let x = SampledSignal::new(grid.clone(), data, Domain::Frequency).to_spatial();
    let inv_p = if p.is_infinite() { 0.0 } else { 1.0 / p };
    h.det_abs.powf(inv_p - 0.5) * lp_norm_samples(&x.data, grid.dx_vol(), p)
}

/// W_psi f(x, h) by a direct Riemann sum over the support intersection with m points per axis.
pub fn wavelet_value(f: &BandlimitedSignal, window: &AnalyticWindow, h: &GroupPoint, x: &Vec2, m: usize) -> Complex64 {
    let pulled = window.composed(&h.matrix.transpose(), 1.0);
    let Some((lo, hi)) = intersect_box(f, box_of(&pulled), f.dim) else { return Complex64::new(0.0, 0.0) };
    let dim = f.dim;
    let d = (hi - lo) / m as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    let m2 = if dim == 1 { 1 } else { m };
    for i in 0..m {
        for j in 0..m2 {
            let xi = Vec2::new(lo[0] + (i as f64 + 0.5) * d[0], if dim == 1 { 0.0 } else { lo[1] + (j as f64 + 0.5) * d[1] });
            let w = pulled.eval(&xi);
            if w == 0.0 {
                continue;
            }
            acc += f.eval(&xi) * Complex64::from_polar(w, TAU * x.dot(&xi));
        }
    }
    let cell = if dim == 1 { d[0] } else { d[0] * d[1] };
    acc * cell * h.det_abs.sqrt()
}

/// W_psi f(x, h) by direct spatial quadrature of <f, pi(x, h) psi> on the spatial grid of `grid`.
pub fn wavelet_value_spatial(f: &BandlimitedSignal, window: &AnalyticWindow, h: &GroupPoint, x: &Vec2, grid: &FrequencyGrid) -> Complex64 {
    let fx = f.sample(grid).to_spatial();
    // pi(x, h) psi = |det h|^(-1/2) psi(h^-1 (y - x)), with spectrum |det h|^(1/2) e^(-2 pi i x.xi) psi_hat(h^T xi)
    let moved = BandlimitedSignal::from_window(window).dilated(&h.matrix).translated(x);
    let px = moved.sample(grid).to_spatial();
    let vol = grid.dx_vol();
    fx.data.iter().zip(&px.data).map(|(a, b)| a * b.conj()).sum::<Complex64>() * vol
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomp::signal::SignalFamily;
    use crate::group::{ChartKind, GroupChart, Params};
    use crate::window::{default_window, Profile};

    #[test]
    fn identity_slice_at_origin_is_psi_norm() {
        let chart = GroupChart::new(ChartKind::Similitude2d);
        let w = default_window(&chart);
        let f = BandlimitedSignal::from_window(&w);
        let grid = FrequencyGrid::centered(2, 64, 1.0, Vec2::new(1.0, 0.0)).unwrap();
        let s = wavelet_slice(&f, &w, &chart.identity(), &grid);
        let center = grid.len() / 2 + grid.n / 2;
        let want = w.sample(&grid).l2_norm().powi(2);
        assert!((s.data[center].re - want).abs() < 1e-12 * want);
    }

    #[test]
    fn disjoint_supports_give_zero() {
        let chart = GroupChart::new(ChartKind::Shearlet2d);
        let w = default_window(&chart);
        let f = BandlimitedSignal::from_window(&AnalyticWindow::ball(2, Vec2::new(-3.0, 3.0), 0.5, Profile::Bump));
        let h = chart.identity();
        assert_eq!(slice_norm(&f, &w, &h, 1.0, &SliceSpec::default()), 0.0);
        assert_eq!(wavelet_value(&f, &w, &h, &Vec2::zeros(), 64), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn frequency_formula_matches_spatial_inner_product() {
        let chart = GroupChart::new(ChartKind::Shearlet2d);
        let w = default_window(&chart);
        let fam = SignalFamily { dim: 2, anchors: vec![Vec2::new(3.0, 3.0)], jitter: 0.6, radius: (0.4, 0.7), max_shift: 1.0 };
        let grid = FrequencyGrid::centered(2, 1024, 6.0, Vec2::new(3.0, 3.0)).unwrap();
        for (n, f) in fam.generate(3, 4, &chart).iter().enumerate() {
            let h = chart.point(Params::new(1, 0.2 * n as f64 - 0.1, 0.1 * n as f64));
            for x in [Vec2::new(0.3, -0.2), Vec2::new(-1.0, 0.5)] {
                let a = wavelet_value(f, &w, &h, &x, 256);
                let b = wavelet_value_spatial(f, &w, &h, &x, &grid);
                assert!((a - b).norm() < 1e-6, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn adapted_norm_matches_full_grid() {
        let chart = GroupChart::new(ChartKind::Similitude2d);
        let w = default_window(&chart);
        let f = BandlimitedSignal::from_window(&AnalyticWindow::ball(2, Vec2::new(1.5, 0.3), 0.6, Profile::Bump));
        let h = chart.similitude_point(0.7, 0.1);
        let grid = FrequencyGrid::centered(2, 512, 4.0, Vec2::new(1.5, 0.5)).unwrap();
        let full = wavelet_slice(&f, &w, &h, &grid);
        for p in [1.0, 2.0] {
            let a = slice_norm(&f, &w, &h, p, &SliceSpec::default());
            let b = full.lp_norm(p);
            assert!(b > 0.0 && (a - b).abs() < 2e-3 * b, "p={p}: {a} vs {b}");
        }
    }
}
