//! Uniform frequency boxes, the matching spatial grids, and the DFT realization of
//! the Fourier transform F f(xi) = int f(x) exp(-2 pi i x.xi) dx.
//!
//! Frequencies are xi_k = c + (k - N/2) dxi with dxi = 2 X / N on the box [c - X, c + X),
//! spatial samples are x_m = (m - N/2) dx with dx = 1 / (2 X). Then
//! F^-1 g(x_m) = dxi^d (-1)^m e^(2 pi i c.x_m) IDFT[(-1)^k g_k](m), with the unnormalized IDFT.

use std::cell::RefCell;
use std::f64::consts::TAU;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Vec2;
use crate::par;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    pub dim: usize,
    pub n: usize,
    /// half-width X of the frequency box
    pub extent: f64,
    pub center: [f64; 2],
}

impl FrequencyGrid {
    pub fn new(dim: usize, n: usize, extent: f64) -> Result<Self> {
        Self::centered(dim, n, extent, Vec2::zeros())
    }

    pub fn centered(dim: usize, n: usize, extent: f64, center: Vec2) -> Result<Self> {
        if !(dim == 1 || dim == 2) {
            return Err(Error::Invalid(format!("grid dimension must be 1 or 2, got {dim}")));
        }
        if n < 4 || !n.is_power_of_two() {
            return Err(Error::Invalid(format!("grid size must be a power of two >= 4, got {n}")));
        }
        if !(extent > 0.0 && extent.is_finite()) {
            return Err(Error::Invalid(format!("grid extent must be positive, got {extent}")));
        }
        let c1 = if dim == 1 { 0.0 } else { center[1] };
        Ok(FrequencyGrid { dim, n, extent, center: [center[0], c1] })
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dxi(&self) -> f64 {
        2.0 * self.extent / self.n as f64
    }

    pub fn dx(&self) -> f64 {
        1.0 / (2.0 * self.extent)
    }

    /// Cell volume in frequency space.
    pub fn dxi_vol(&self) -> f64 {
        self.dxi().powi(self.dim as i32)
    }

    pub fn dx_vol(&self) -> f64 {
        self.dx().powi(self.dim as i32)
    }

    /// Half the length of the spatial period.
    pub fn spatial_half_width(&self) -> f64 {
        self.n as f64 * self.dx() / 2.0
    }

    #[inline]
    pub fn freq_1d(&self, axis: usize, k: usize) -> f64 {
        self.center[axis] + (k as f64 - (self.n / 2) as f64) * self.dxi()
    }

    #[inline]
    pub fn space_1d(&self, m: usize) -> f64 {
        (m as f64 - (self.n / 2) as f64) * self.dx()
    }

    /// Multi-index of flat position `idx` (axis 0 is the slow index).
    #[inline]
    pub fn unflatten(&self, idx: usize) -> (usize, usize) {
        if self.dim == 1 {
            (idx, 0)
        } else {
            (idx / self.n, idx % self.n)
        }
    }

    #[inline]
    pub fn freq(&self, idx: usize) -> Vec2 {
        let (i, j) = self.unflatten(idx);
        if self.dim == 1 {
            Vec2::new(self.freq_1d(0, i), 0.0)
        } else {
            Vec2::new(self.freq_1d(0, i), self.freq_1d(1, j))
        }
    }

    #[inline]
    pub fn point(&self, idx: usize) -> Vec2 {
        let (i, j) = self.unflatten(idx);
        if self.dim == 1 {
            Vec2::new(self.space_1d(i), 0.0)
        } else {
            Vec2::new(self.space_1d(i), self.space_1d(j))
        }
    }

    pub fn frequencies(&self) -> impl Iterator<Item = Vec2> + '_ {
        (0..self.len()).map(move |i| self.freq(i))
    }

    /// Whether xi lies in the closed frequency box.
    pub fn contains(&self, xi: &Vec2) -> bool {
        (0..self.dim).all(|a| (xi[a] - self.center[a]).abs() <= self.extent)
    }

    /// Flat index range of frequencies inside the axis-aligned box [lo, hi].
    pub fn index_box(&self, lo: &Vec2, hi: &Vec2) -> Option<[(usize, usize); 2]> {
        let mut out = [(0usize, 0usize); 2];
        for a in 0..self.dim {
            let k = |v: f64| (v - self.center[a]) / self.dxi() + (self.n / 2) as f64;
            let k0 = k(lo[a]).ceil().max(0.0);
            let k1 = k(hi[a]).floor().min((self.n - 1) as f64);
            if k1 < k0 {
                return None;
            }
            out[a] = (k0 as usize, k1 as usize);
        }
        if self.dim == 1 {
            out[1] = (0, 0);
        }
        Some(out)
    }

    pub fn flat(&self, i: usize, j: usize) -> usize {
        if self.dim == 1 {
            i
        } else {
            i * self.n + j
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Domain {
    Spatial,
    Frequency,
}

#[derive(Clone, Debug)]
pub struct SampledSignal {
    pub grid: FrequencyGrid,
    pub data: Vec<Complex64>,
    pub domain: Domain,
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    })
}

fn transpose(data: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            data.swap(i * n + j, j * n + i);
        }
    }
}

/// Unnormalized DFT along every axis (e^(+2 pi i) kernel when `inverse`).
pub fn dft_inplace(data: &mut [Complex64], n: usize, dim: usize, inverse: bool) {
    let fft = plan(n, inverse);
    let rows = |d: &mut [Complex64]| {
        par::for_each_chunk_mut(d, n * 16.max(1), |_, c| fft.process(c));
    };
    rows(data);
    if dim == 2 {
        transpose(data, n);
        rows(data);
        transpose(data, n);
    }
}

impl SampledSignal {
    pub fn new(grid: FrequencyGrid, data: Vec<Complex64>, domain: Domain) -> Self {
        assert_eq!(data.len(), grid.len(), "sample count does not match the grid");
        SampledSignal { grid, data, domain }
    }

    pub fn zeros(grid: FrequencyGrid, domain: Domain) -> Self {
        let len = grid.len();
        SampledSignal::new(grid, vec![Complex64::new(0.0, 0.0); len], domain)
    }

    fn checker(&self, idx: usize) -> f64 {
        let (i, j) = self.grid.unflatten(idx);
        if (i + j) % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    fn center_phase(&self, idx: usize, sign: f64) -> Complex64 {
        let x = self.grid.point(idx);
        let c = Vec2::new(self.grid.center[0], self.grid.center[1]);
        let t = c.dot(&x);
        if t == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::from_polar(1.0, sign * TAU * t)
        }
    }

    pub fn to_spatial(&self) -> SampledSignal {
        if self.domain == Domain::Spatial {
            return self.clone();
        }
        let g = &self.grid;
        let mut d: Vec<Complex64> = self.data.iter().enumerate().map(|(k, v)| v * self.checker(k)).collect();
        dft_inplace(&mut d, g.n, g.dim, true);
        let s = g.dxi_vol();
        for (m, v) in d.iter_mut().enumerate() {
            *v *= self.center_phase(m, 1.0) * (s * self.checker(m));
        }
        SampledSignal::new(g.clone(), d, Domain::Spatial)
    }

    pub fn to_frequency(&self) -> SampledSignal {
        if self.domain == Domain::Frequency {
            return self.clone();
        }
        let g = &self.grid;
        let mut d: Vec<Complex64> = self
            .data
            .iter()
            .enumerate()
            .map(|(m, v)| v * self.center_phase(m, -1.0) * self.checker(m))
            .collect();
        dft_inplace(&mut d, g.n, g.dim, false);
        let s = g.dx_vol();
        for (k, v) in d.iter_mut().enumerate() {
            *v *= s * self.checker(k);
        }
        SampledSignal::new(g.clone(), d, Domain::Frequency)
    }

    fn cell(&self) -> f64 {
        match self.domain {
            Domain::Spatial => self.grid.dx_vol(),
            Domain::Frequency => self.grid.dxi_vol(),
        }
    }

    /// Riemann-sum L^p norm in the signal's own domain; p = infinity gives the max modulus.
    pub fn lp_norm(&self, p: f64) -> f64 {
        lp_norm_samples(&self.data, self.cell(), p)
    }

    pub fn l2_norm(&self) -> f64 {
        self.lp_norm(2.0)
    }

    /// Little-endian (re, im) f64 pairs plus a text sidecar `<path>.txt`.
    pub fn save_raw(&self, path: &Path) -> std::io::Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        for v in &self.data {
            f.write_all(&v.re.to_le_bytes())?;
            f.write_all(&v.im.to_le_bytes())?;
        }
        f.flush()?;
        let mut side = path.as_os_str().to_owned();
        side.push(".txt");
        std::fs::write(
            side,
            format!(
                "dimension {}\nN {}\nextent {}\ncenter {} {}\ndomain {:?}\nlayout row-major, axis 0 slow, f64 le (re, im)\n",
                self.grid.dim, self.grid.n, self.grid.extent, self.grid.center[0], self.grid.center[1], self.domain
            ),
        )
    }
}

/// (sum |v|^p cell)^(1/p), or max |v| for p = infinity.
pub fn lp_norm_samples(data: &[Complex64], cell: f64, p: f64) -> f64 {
    if p.is_infinite() {
        return data.iter().map(|v| v.norm()).fold(0.0, f64::max);
    }
    if p == 2.0 {
        return (data.iter().map(|v| v.norm_sqr()).sum::<f64>() * cell).sqrt();
    }
    if p == 1.0 {
        return data.iter().map(|v| v.norm()).sum::<f64>() * cell;
    }
    (data.iter().map(|v| v.norm().powf(p)).sum::<f64>() * cell).powf(1.0 / p)
}

pub fn lp_norm(signal: &SampledSignal, p: f64) -> f64 {
    signal.lp_norm(p)
}

/// Smallest power of two >= x, clamped to [lo, hi].
pub fn pow2_at_least(x: f64, lo: usize, hi: usize) -> usize {
    let mut n = lo;
    while (n as f64) < x && n < hi {
        n *= 2;
    }
    n
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn gaussian_grid(dim: usize, n: usize) -> SampledSignal {
        let g = FrequencyGrid::new(dim, n, 8.0).unwrap();
        // f(x) = exp(-pi |x|^2) has F f = exp(-pi |xi|^2)
        let d = g.frequencies().map(|xi| Complex64::new((-PI * xi.norm_squared()).exp(), 0.0)).collect();
        SampledSignal::new(g, d, Domain::Frequency)
    }

    #[test]
    fn gaussian_is_self_dual() {
        for dim in [1, 2] {
            let s = gaussian_grid(dim, if dim == 1 { 1024 } else { 128 }).to_spatial();
            for idx in [0usize, 7, 300, s.grid.len() / 2 + 3] {
                let x = s.grid.point(idx);
                let want = (-PI * x.norm_squared()).exp();
                assert!((s.data[idx] - want).norm() < 1e-12, "dim {dim} idx {idx}");
            }
        }
    }

    #[test]
    fn round_trip_identity() {
        let s = gaussian_grid(2, 64);
        let back = s.to_spatial().to_frequency();
        let err = s.data.iter().zip(&back.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-12);
    }

    #[test]
    fn shifted_box_matches_modulation() {
        // spectrum centered at c: F^-1 is e^(2 pi i c x) times the centered one
        let c = Vec2::new(3.0, -1.0);
        let g = FrequencyGrid::centered(2, 64, 4.0, c).unwrap();
        let d = g.frequencies().map(|xi| Complex64::new((-PI * (xi - c).norm_squared()).exp(), 0.0)).collect();
        let s = SampledSignal::new(g, d, Domain::Frequency).to_spatial();
        for idx in [5usize, 1000, 2080] {
            let x = s.grid.point(idx);
            let want = Complex64::from_polar((-PI * x.norm_squared()).exp(), TAU * c.dot(&x));
            assert!((s.data[idx] - want).norm() < 1e-12);
        }
    }

    #[test]
    fn gaussian_l2_closed_form() {
        // ||exp(-pi a x^2)||_2^2 = 1/sqrt(2a) in one dimension
        let g = FrequencyGrid::new(1, 1024, 16.0).unwrap();
        let a: f64 = 3.0;
        let d = (0..g.len()).map(|m| Complex64::new((-PI * a * g.space_1d(m).powi(2)).exp(), 0.0)).collect();
        let s = SampledSignal::new(g, d, Domain::Spatial);
        let want = (1.0 / (2.0 * a).sqrt()).sqrt();
        assert!((s.l2_norm() - want).abs() < 1e-8);
        assert!((s.to_frequency().l2_norm() - want).abs() < 1e-8);
    }

    #[test]
    fn lp_basics() {
        let g = FrequencyGrid::new(1, 8, 0.5).unwrap();
        let s = SampledSignal::zeros(g.clone(), Domain::Spatial);
        assert_eq!(s.lp_norm(1.0), 0.0);
        assert_eq!(s.lp_norm(f64::INFINITY), 0.0);
        // indicator of one spatial cell
        let mut d = vec![Complex64::new(0.0, 0.0); 8];
        d[3] = Complex64::new(1.0, 0.0);
        let s = SampledSignal::new(g.clone(), d, Domain::Spatial);
        assert!((s.lp_norm(1.0) - g.dx()).abs() < 1e-15);
        assert!(FrequencyGrid::new(1, 12, 1.0).is_err());
    }
}
