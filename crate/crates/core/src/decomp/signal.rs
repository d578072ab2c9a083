//! Band-limited test functions given by their spectra: finite sums of analytic
//! windows times a coefficient and a spatial translation.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::decomp::grid::{Domain, FrequencyGrid, SampledSignal};
use crate::group::{GroupChart, GroupPoint};
use crate::linalg::{det_abs, Mat2, Vec2};
use crate::window::{AnalyticWindow, Profile};

/// coeff * exp(-2 pi i shift.xi) * window(xi)
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub window: AnalyticWindow,
    pub coeff: [f64; 2],
    pub shift: [f64; 2],
}

impl Atom {
    pub fn new(window: AnalyticWindow, coeff: Complex64, shift: Vec2) -> Self {
        Atom { window, coeff: [coeff.re, coeff.im], shift: [shift[0], shift[1]] }
    }

    pub fn coeff(&self) -> Complex64 {
        Complex64::new(self.coeff[0], self.coeff[1])
    }

    pub fn shift(&self) -> Vec2 {
        Vec2::new(self.shift[0], self.shift[1])
    }

    #[inline]
    pub fn eval(&self, xi: &Vec2) -> Complex64 {
        let w = self.window.eval(xi);
        if w == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let t = self.shift[0] * xi[0] + self.shift[1] * xi[1];
        let c = self.coeff();
        if t == 0.0 {
            c * w
        } else {
            c * Complex64::from_polar(w, -TAU * t)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandlimitedSignal {
    pub dim: usize,
    pub atoms: Vec<Atom>,
}

impl BandlimitedSignal {
    pub fn new(dim: usize, atoms: Vec<Atom>) -> Self {
        BandlimitedSignal { dim, atoms }
    }

    pub fn zero(dim: usize) -> Self {
        BandlimitedSignal { dim, atoms: vec![] }
    }

    pub fn from_window(w: &AnalyticWindow) -> Self {
        BandlimitedSignal::new(w.dim, vec![Atom::new(w.clone(), Complex64::new(1.0, 0.0), Vec2::zeros())])
    }

    pub fn is_zero(&self) -> bool {
        self.atoms.iter().all(|a| a.window.is_zero() || a.coeff() == Complex64::new(0.0, 0.0))
    }

    /// f_hat(xi).
    #[inline]
    pub fn eval(&self, xi: &Vec2) -> Complex64 {
        self.atoms.iter().map(|a| a.eval(xi)).sum()
    }

    pub fn sample(&self, grid: &FrequencyGrid) -> SampledSignal {
        let data = crate::par::map_range(grid.len(), |i| self.eval(&grid.freq(i)));
        SampledSignal::new(grid.clone(), data, Domain::Frequency)
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        let atoms = self
            .atoms
            .iter()
            .map(|a| Atom::new(a.window.clone(), a.coeff() * c, a.shift()))
            .collect();
        BandlimitedSignal::new(self.dim, atoms)
    }

    pub fn plus(&self, other: &Self) -> Self {
        let mut atoms = self.atoms.clone();
        atoms.extend(other.atoms.iter().cloned());
        BandlimitedSignal::new(self.dim, atoms)
    }

    /// Spectrum of f(. - x): exp(-2 pi i x.xi) f_hat(xi).
    pub fn translated(&self, x: &Vec2) -> Self {
        let atoms = self
            .atoms
            .iter()
            .map(|a| Atom::new(a.window.clone(), a.coeff(), a.shift() + x))
            .collect();
        BandlimitedSignal::new(self.dim, atoms)
    }

    /// Spectrum of sigma(0, g) f = |det g|^(-1/2) f(g^-1 .), namely |det g|^(1/2) f_hat(g^T xi).
    pub fn dilated(&self, g: &Mat2) -> Self {
        let s = det_abs(g, self.dim).sqrt();
        let atoms = self
            .atoms
            .iter()
            .map(|a| {
                let mut w = a.window.composed(&g.transpose(), 1.0);
                w.amplitude = a.window.amplitude;
                let mut sh = g * a.shift();
                if self.dim == 1 {
                    sh[1] = 0.0;
                }
                Atom::new(w, a.coeff() * s, sh)
            })
            .collect();
        BandlimitedSignal::new(self.dim, atoms)
    }

    /// Spectrum of pi(0, h) f.
    pub fn dilated_by(&self, h: &GroupPoint) -> Self {
        self.dilated(&h.matrix)
    }

    /// Axis-aligned box containing the support of f_hat.
    pub fn bounding_box(&self) -> Option<(Vec2, Vec2)> {
        let mut it = self.atoms.iter().filter(|a| !a.window.is_zero()).map(|a| a.window.bounding_box());
        let first = it.next()?;
        Some(it.fold(first, |(lo, hi), (l, h)| (lo.inf(&l), hi.sup(&h))))
    }

    /// Points covering every atom support with spacing about `step` (interior and boundary).
    pub fn support_samples(&self, per_radius: usize) -> Vec<Vec2> {
        let mut pts = Vec::new();
        for a in self.atoms.iter().filter(|a| !a.window.is_zero()) {
            let w = &a.window;
            let ai = crate::linalg::invert(&w.shape());
            let c = w.center();
            if self.dim == 1 {
                let r = 1.0 / w.shape[0].abs();
                let n = 2 * per_radius;
                for k in 0..=n {
                    pts.push(Vec2::new(c[0] - r + 2.0 * r * k as f64 / n as f64, 0.0));
                }
                continue;
            }
            let n = per_radius as i64;
            for i in -n..=n {
                for j in -n..=n {
                    let u = Vec2::new(i as f64, j as f64) / n as f64;
                    if u.norm() <= 1.0 {
                        pts.push(c + ai * u);
                    }
                }
            }
            let m = 8 * per_radius;
            for k in 0..m {
                let t = TAU * k as f64 / m as f64;
                pts.push(c + ai * Vec2::new(t.cos(), t.sin()));
            }
        }
        pts
    }

    /// L2 norm of f (= of f_hat), by frequency quadrature on `grid`.
    pub fn l2_norm(&self, grid: &FrequencyGrid) -> f64 {
        self.sample(grid).l2_norm()
    }

    /// Minimal blind-spot margin over all atoms.
    pub fn blind_margin(&self, chart: &GroupChart) -> f64 {
        self.atoms
            .iter()
            .filter(|a| !a.window.is_zero())
            .map(|a| a.window.blind_margin(chart))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Seeded random family of bump sums inside the frequency region described by
/// `centers`: each function has 1 to 3 atoms with centers drawn near the given
/// anchor points, radii in [r_lo, r_hi], random complex coefficients and shifts.
pub struct SignalFamily {
    pub dim: usize,
    pub anchors: Vec<Vec2>,
    pub jitter: f64,
    pub radius: (f64, f64),
    pub max_shift: f64,
}

impl SignalFamily {
    pub fn generate(&self, count: usize, seed: u64, chart: &GroupChart) -> Vec<BandlimitedSignal> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(count);
        while out.len() < count {
            let n_atoms = rng.gen_range(1..=3);
            let mut atoms = Vec::new();
            for _ in 0..n_atoms {
                let anchor = self.anchors[rng.gen_range(0..self.anchors.len())];
                let mut c = anchor + Vec2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * self.jitter;
                let mut shift = Vec2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * self.max_shift;
                if self.dim == 1 {
                    c[1] = 0.0;
                    shift[1] = 0.0;
                }
                let r = rng.gen_range(self.radius.0..=self.radius.1);
                let ecc = if self.dim == 2 { rng.gen_range(0.7..1.0) } else { 1.0 };
                let rot = crate::linalg::rotation(rng.gen_range(0.0..TAU));
                let shape = if self.dim == 2 {
                    Mat2::new(1.0 / r, 0.0, 0.0, 1.0 / (r * ecc)) * rot
                } else {
                    Mat2::new(1.0 / r, 0.0, 0.0, 1.0)
                };
                let w = AnalyticWindow::new(self.dim, c, shape, 1.0, Profile::Bump);
                let coeff = Complex64::from_polar(rng.gen_range(0.5..1.5), rng.gen_range(0.0..TAU));
                atoms.push(Atom::new(w, coeff, shift));
            }
            let f = BandlimitedSignal::new(self.dim, atoms);
            if f.blind_margin(chart) > 0.05 {
                out.push(f);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::ChartKind;

    #[test]
    fn dilation_matches_definition() {
        let w = AnalyticWindow::ball(2, Vec2::new(2.0, 1.0), 0.8, Profile::Bump);
        let f = BandlimitedSignal::new(2, vec![Atom::new(w, Complex64::new(0.5, 1.0), Vec2::new(0.3, -0.2))]);
        let g = Mat2::new(2.0, 0.5, -0.3, 1.0);
        let d = f.dilated(&g);
        let s = det_abs(&g, 2).sqrt();
        for xi in [Vec2::new(1.0, 0.5), Vec2::new(0.7, 0.1), Vec2::new(0.9, 0.6)] {
            let want = f.eval(&(g.transpose() * xi)) * s;
            assert!((d.eval(&xi) - want).norm() < 1e-13);
        }
    }

    #[test]
    fn translation_is_a_modulation() {
        let w = AnalyticWindow::ball(1, Vec2::new(1.0, 0.0), 0.5, Profile::Bump);
        let f = BandlimitedSignal::from_window(&w);
        let x = Vec2::new(2.5, 0.0);
        let t = f.translated(&x);
        let xi = Vec2::new(1.1, 0.0);
        let want = f.eval(&xi) * Complex64::from_polar(1.0, -TAU * 2.5 * 1.1);
        assert!((t.eval(&xi) - want).norm() < 1e-14);
    }

    #[test]
    fn family_is_deterministic_and_on_orbit() {
        let chart = GroupChart::new(ChartKind::Shearlet2d);
        let fam = SignalFamily {
            dim: 2,
            anchors: vec![Vec2::new(2.0, 1.0)],
            jitter: 0.5,
            radius: (0.3, 0.6),
            max_shift: 1.0,
        };
        let a = fam.generate(4, 9, &chart);
        let b = fam.generate(4, 9, &chart);
        assert_eq!(a, b);
        assert!(a.iter().all(|f| f.blind_margin(&chart) > 0.0));
    }
}
