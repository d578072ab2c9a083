//! Analytic frequency windows: smooth compactly supported profiles on ellipses.

use serde::{Deserialize, Serialize};

use crate::decomp::grid::{Domain, FrequencyGrid, SampledSignal};
use crate::error::{Error, Result};
use crate::group::{BlindSpot, GroupChart};
use crate::linalg::{det_abs, invert, singular_values, Mat2, Vec2};
use num_complex::Complex64;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Profile {
    /// exp(1 - 1/(1 - r^2)) on r < 1, peak 1.
    Bump,
    /// 1 on r <= inner, 0 on r >= 1, smooth monotone step in between.
    Plateau { inner: f64 },
}

impl Profile {
    pub fn eval(&self, r: f64) -> f64 {
        if r >= 1.0 {
            return 0.0;
        }
        match *self {
            Profile::Bump => (1.0 - 1.0 / (1.0 - r * r)).exp(),
            Profile::Plateau { inner } => {
                if r <= inner {
                    1.0
                } else {
                    smooth_step((1.0 - r) / (1.0 - inner))
                }
            }
        }
    }

    /// Relative width of the narrowest feature, used for grid sizing.
    pub fn feature_scale(&self) -> f64 {
        match *self {
            Profile::Bump => 1.0,
            Profile::Plateau { inner } => (1.0 - inner).max(0.05),
        }
    }
}

/// C-infinity step: 0 at t <= 0, 1 at t >= 1.
pub fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    let a = (-1.0 / t).exp();
    let b = (-1.0 / (1.0 - t)).exp();
    a / (a + b)
}

/// A window amplitude * profile(|A (xi - c)|) with support {|A (xi - c)| < 1}.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalyticWindow {
    pub dim: usize,
    pub center: [f64; 2],
    /// row-major shape matrix A
    pub shape: [f64; 4],
    pub amplitude: f64,
    pub profile: Profile,
}

impl AnalyticWindow {
    pub fn new(dim: usize, center: Vec2, shape: Mat2, amplitude: f64, profile: Profile) -> Self {
        AnalyticWindow {
            dim,
            center: [center[0], if dim == 1 { 0.0 } else { center[1] }],
            shape: [shape[(0, 0)], shape[(0, 1)], shape[(1, 0)], shape[(1, 1)]],
            amplitude,
            profile,
        }
    }

    /// Round window of the given radius.
    pub fn ball(dim: usize, center: Vec2, radius: f64, profile: Profile) -> Self {
        Self::new(dim, center, Mat2::identity() / radius, 1.0, profile)
    }

    pub fn zero(dim: usize) -> Self {
        let mut w = Self::ball(dim, Vec2::new(1.0, 0.0), 0.5, Profile::Bump);
        w.amplitude = 0.0;
        w
    }

    pub fn center(&self) -> Vec2 {
        Vec2::new(self.center[0], self.center[1])
    }

    pub fn shape(&self) -> Mat2 {
        Mat2::new(self.shape[0], self.shape[1], self.shape[2], self.shape[3])
    }

    /// |A (xi - c)|, the normalized radius.
    #[inline]
    pub fn rho(&self, xi: &Vec2) -> f64 {
        let d0 = xi[0] - self.center[0];
        if self.dim == 1 {
            return (self.shape[0] * d0).abs();
        }
        let d1 = xi[1] - self.center[1];
        let u0 = self.shape[0] * d0 + self.shape[1] * d1;
        let u1 = self.shape[2] * d0 + self.shape[3] * d1;
        (u0 * u0 + u1 * u1).sqrt()
    }

    #[inline]
    pub fn eval(&self, xi: &Vec2) -> f64 {
        if self.amplitude == 0.0 {
            return 0.0;
        }
        self.amplitude * self.profile.eval(self.rho(xi))
    }

    pub fn is_zero(&self) -> bool {
        self.amplitude == 0.0
    }

    /// Largest semi-axis of the support ellipse.
    pub fn outer_radius(&self) -> f64 {
        if self.dim == 1 {
            return 1.0 / self.shape[0].abs();
        }
        1.0 / singular_values(&self.shape()).1
    }

    /// Smallest semi-axis of the support ellipse.
    pub fn inner_radius(&self) -> f64 {
        if self.dim == 1 {
            return 1.0 / self.shape[0].abs();
        }
        1.0 / singular_values(&self.shape()).0
    }

    /// Support function of the support ellipse: max of n.xi over the support.
    pub fn support_extent(&self, n: &Vec2) -> f64 {
        let c = self.center();
        if self.dim == 1 {
            return n[0] * c[0] + n[0].abs() / self.shape[0].abs();
        }
        let ait = invert(&self.shape()).transpose();
        n.dot(&c) + (ait * n).norm()
    }

    /// Axis-aligned bounding box [lo, hi] of the support.
    pub fn bounding_box(&self) -> (Vec2, Vec2) {
        let ex = self.support_extent(&Vec2::new(1.0, 0.0));
        let wx = -self.support_extent(&Vec2::new(-1.0, 0.0));
        if self.dim == 1 {
            return (Vec2::new(wx, 0.0), Vec2::new(ex, 0.0));
        }
        let ey = self.support_extent(&Vec2::new(0.0, 1.0));
        let wy = -self.support_extent(&Vec2::new(0.0, -1.0));
        (Vec2::new(wx, wy), Vec2::new(ex, ey))
    }

    /// Margin between the support and the chart's blind spot (negative if they meet).
    pub fn blind_margin(&self, chart: &GroupChart) -> f64 {
        match chart.blind_spot() {
            BlindSpot::Origin => {
                if self.dim == 1 {
                    return self.center[0].abs() - self.outer_radius();
                }
                // the ellipse avoids 0 iff |A c| > 1; report a distance-like margin
                let ac = self.shape() * self.center();
                (ac.norm() - 1.0) * self.inner_radius()
            }
            BlindSpot::Line(n) => {
                let n = n / n.norm();
                let hi = self.support_extent(&n);
                let lo = -self.support_extent(&(-n));
                if lo > 0.0 {
                    lo
                } else if hi < 0.0 {
                    -hi
                } else {
                    lo.max(-hi)
                }
            }
        }
    }

    /// The window xi -> scale * self(M xi).
    pub fn composed(&self, m: &Mat2, scale: f64) -> Self {
        let mi = invert(m);
        AnalyticWindow::new(self.dim, mi * self.center(), self.shape() * m, self.amplitude * scale, self.profile)
    }

    /// Fourier side of the dilated window sigma(0, g) psi: |det g|^(1/2) psi_hat(g^T xi).
    pub fn dilated(&self, g: &Mat2) -> Self {
        self.composed(&g.transpose(), det_abs(g, self.dim).sqrt())
    }

    pub fn sample(&self, grid: &FrequencyGrid) -> SampledSignal {
        let data = grid.frequencies().map(|xi| Complex64::new(self.eval(&xi), 0.0)).collect();
        SampledSignal::new(grid.clone(), data, Domain::Frequency)
    }
}

/// Bump window on the ball B_radius(center), rejected if it meets the blind spot
/// unless `allow_off_orbit` is set.
pub fn bump_window(center: Vec2, radius: f64, chart: &GroupChart, allow_off_orbit: bool) -> Result<AnalyticWindow> {
    checked_window(AnalyticWindow::ball(chart.dim(), center, radius, Profile::Bump), chart, allow_off_orbit)
}

/// Bump window on an ellipse {|A (xi - c)| < 1}.
pub fn bump_window_shaped(center: Vec2, shape: Mat2, chart: &GroupChart, allow_off_orbit: bool) -> Result<AnalyticWindow> {
    checked_window(AnalyticWindow::new(chart.dim(), center, shape, 1.0, Profile::Bump), chart, allow_off_orbit)
}

pub fn plateau_window(dim: usize, center: Vec2, inner_radius: f64, outer_radius: f64) -> Result<AnalyticWindow> {
    if !(inner_radius > 0.0 && inner_radius < outer_radius) {
        return Err(Error::Invalid(format!(
            "plateau radii must satisfy 0 < inner < outer, got {inner_radius} and {outer_radius}"
        )));
    }
    Ok(AnalyticWindow::ball(dim, center, outer_radius, Profile::Plateau { inner: inner_radius / outer_radius }))
}

/// Rejects windows meeting the blind spot unless allowed.
pub fn checked_window(w: AnalyticWindow, chart: &GroupChart, allow_off_orbit: bool) -> Result<AnalyticWindow> {
    let margin = w.blind_margin(chart);
    if margin <= 0.0 && !allow_off_orbit {
        return Err(Error::TouchesBlindSpot { what: "window".into(), margin });
    }
    Ok(w)
}

/// Default window per chart: a bump of radius 1/2 at the chart's canonical interior point.
pub fn default_window(chart: &GroupChart) -> AnalyticWindow {
    use crate::group::ChartKind::*;
    let c = match chart.kind {
        Dyadic1d => Vec2::new(1.0, 0.0),
        Similitude2d => Vec2::new(1.0, 0.0),
        Shearlet2d => Vec2::new(3.0, 3.0),
    };
    let w = AnalyticWindow::ball(chart.dim(), c, 0.5, Profile::Bump);
    match chart.conjugator() {
        // keep the window in the conjugated orbit: psi_hat(g^-T xi)
        Some(g) => w.composed(&invert(&g).transpose(), 1.0),
        None => w,
    }
}

/// psi on the spatial grid, by inverse DFT of the sampled window.
pub fn synthesize_spatial(window: &AnalyticWindow, grid: &FrequencyGrid) -> Result<SampledSignal> {
    let (lo, hi) = window.bounding_box();
    if !window.is_zero() && !(grid.contains(&lo) && grid.contains(&hi)) {
        return Err(Error::SupportOutsideBox(format!(
            "window box [{:.3}, {:.3}] x [{:.3}, {:.3}] vs grid extent {}",
            lo[0], hi[0], lo[1], hi[1], grid.extent
        )));
    }
    Ok(window.sample(grid).to_spatial())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::ChartKind;

    #[test]
    fn bump_peak_and_boundary() {
        let w = AnalyticWindow::ball(2, Vec2::new(3.0, 3.0), 1.0, Profile::Bump);
        assert_eq!(w.eval(&Vec2::new(3.0, 3.0)), 1.0);
        assert_eq!(w.eval(&Vec2::new(4.0, 3.0)), 0.0);
        // flat approach to the boundary
        for k in 2..6 {
            let h = 10f64.powi(-k) * 0.5;
            let v = w.eval(&Vec2::new(4.0 - h, 3.0));
            let dv = (w.eval(&Vec2::new(4.0 - h, 3.0)) - w.eval(&Vec2::new(4.0 - 2.0 * h, 3.0))) / h;
            assert!(v < 1e-3 && dv.abs() < 1e-2, "h={h} v={v} dv={dv}");
        }
    }

    #[test]
    fn shearlet_window_acceptance() {
        let c = GroupChart::new(ChartKind::Shearlet2d);
        assert!(bump_window(Vec2::new(3.0, 3.0), 1.0, &c, false).is_ok());
        assert!(bump_window(Vec2::new(0.0, 3.0), 1.0, &c, false).is_err());
        assert!(bump_window(Vec2::new(0.0, 3.0), 1.0, &c, true).is_ok());
        let s = GroupChart::new(ChartKind::Similitude2d);
        assert!(bump_window(Vec2::new(0.3, 0.0), 0.5, &s, false).is_err());
    }

    #[test]
    fn plateau_values() {
        let w = plateau_window(2, Vec2::new(0.0, 3.0), 0.5, 1.0).unwrap();
        assert_eq!(w.eval(&Vec2::new(0.0, 3.0)), 1.0);
        assert_eq!(w.eval(&Vec2::new(0.3, 3.3)), 1.0);
        assert_eq!(w.eval(&Vec2::new(0.0, 4.01)), 0.0);
        let mut prev = 1.0;
        for k in 0..=100 {
            let r = 0.5 + 0.5 * k as f64 / 100.0;
            let v = w.eval(&Vec2::new(r, 3.0));
            assert!(v <= prev + 1e-15 && (0.0..=1.0).contains(&v));
            prev = v;
        }
        assert!(plateau_window(2, Vec2::zeros(), 1.0, 0.5).is_err());
    }

    #[test]
    fn composed_window_moves_support() {
        let w = AnalyticWindow::ball(2, Vec2::new(3.0, 3.0), 1.0, Profile::Bump);
        let g = crate::linalg::rotation(std::f64::consts::FRAC_PI_2);
        let d = w.dilated(&g);
        // sigma(0,g) psi has spectrum psi_hat(g^T xi): centered at g^-T c
        let c2 = invert(&g).transpose() * w.center();
        assert!((d.eval(&c2) - 1.0).abs() < 1e-14);
        let x = Vec2::new(0.2, -0.7);
        assert!((d.eval(&x) - w.eval(&(g.transpose() * x))).abs() < 1e-14);
    }

    #[test]
    fn support_extent_of_ellipse() {
        let w = AnalyticWindow::new(2, Vec2::new(1.0, 2.0), Mat2::new(2.0, 0.0, 0.0, 0.5), 1.0, Profile::Bump);
        let (lo, hi) = w.bounding_box();
        assert!((lo - Vec2::new(0.5, 0.0)).norm() < 1e-14);
        assert!((hi - Vec2::new(1.5, 4.0)).norm() < 1e-14);
        assert!((w.outer_radius() - 2.0).abs() < 1e-14);
        assert!((w.inner_radius() - 0.5).abs() < 1e-14);
    }
}
