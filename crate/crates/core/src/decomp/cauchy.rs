//! The 1-D translation covering Q_i = (i - 3/4, i + 3/4) with normalized plateau
//! partition and weight 10^-i, and the sequence f_n = sum_{j<=n} 4^j psi(. - j)
//! (frequency side) whose differences have norms ||F^-1 psi||_1 sum 0.4^i.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::covering::Index;
use crate::decomp::grid::{pow2_at_least, FrequencyGrid};
use crate::decomp::norm::{decomp_norm, NormReport, Partition};
use crate::decomp::signal::{Atom, BandlimitedSignal};
use crate::error::{Error, Result};
use crate::linalg::Vec2;
use crate::weights::DiscretizedWeight;
use crate::window::{AnalyticWindow, Profile};

/// phi_i(x) = chi(x - i) / sum_m chi(x - m), chi = 1 on |t| <= 1/4, 0 on |t| >= 3/4.
#[derive(Clone, Debug)]
pub struct TranslateBapu {
    pub lo: i64,
    pub hi: i64,
    chi: AnalyticWindow,
}

impl TranslateBapu {
    pub fn new(lo: i64, hi: i64) -> Self {
        let chi = AnalyticWindow::ball(1, Vec2::zeros(), 0.75, Profile::Plateau { inner: 1.0 / 3.0 });
        TranslateBapu { lo, hi, chi }
    }

    fn chi(&self, t: f64) -> f64 {
        self.chi.eval(&Vec2::new(t, 0.0))
    }

    fn contributors(&self, x: f64) -> Vec<(i64, f64)> {
        let c = x.round() as i64;
        ((c - 1)..=(c + 1)).map(|m| (m, self.chi(x - m as f64))).filter(|e| e.1 > 0.0).collect()
    }

    pub fn phi(&self, i: i64, x: f64) -> f64 {
        let cs = self.contributors(x);
        let total: f64 = cs.iter().map(|e| e.1).sum();
        cs.iter().find(|e| e.0 == i).map_or(0.0, |e| e.1 / total)
    }

    /// u_i = 10^-i on the window.
    pub fn weights(&self) -> DiscretizedWeight {
        DiscretizedWeight::declared((self.lo..=self.hi).map(|i| (Index::scale(i), 10f64.powi(-i as i32))).collect())
    }
}

impl Partition for TranslateBapu {
    fn eval_all(&self, xi: &Vec2) -> (Vec<(Index, f64)>, bool) {
        let cs = self.contributors(xi[0]);
        let total: f64 = cs.iter().map(|e| e.1).sum();
        let safe = cs.iter().all(|e| e.0 >= self.lo && e.0 <= self.hi);
        let vals = cs
            .into_iter()
            .filter(|e| e.0 >= self.lo && e.0 <= self.hi)
            .map(|(m, v)| (Index::scale(m), v / total))
            .collect();
        (vals, safe)
    }

    fn missing(&self, xi: &Vec2) -> Vec<Index> {
        self.contributors(xi[0])
            .into_iter()
            .filter(|e| e.0 < self.lo || e.0 > self.hi)
            .map(|e| Index::scale(e.0))
            .collect()
    }

    fn label(&self, i: &Index) -> String {
        format!("i={}", i.k)
    }
}

/// The bump psi on (-1/4, 1/4).
pub fn cauchy_psi() -> AnalyticWindow {
    AnalyticWindow::ball(1, Vec2::zeros(), 0.25, Profile::Bump)
}

/// f_n - f_m = sum_{j=m+1}^n 4^j psi(. - j).
pub fn cauchy_difference(n: i64, m: i64) -> BandlimitedSignal {
    let psi = cauchy_psi();
    let atoms = ((m + 1)..=n)
        .map(|j| {
            let mut w = psi.clone();
            w.center[0] = j as f64;
            Atom::new(w, Complex64::new(4f64.powi(j as i32), 0.0), Vec2::zeros())
        })
        .collect();
    BandlimitedSignal::new(1, atoms)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CauchyReport {
    pub n: i64,
    pub m: i64,
    pub norm: f64,
    pub closed_form: f64,
    pub rel_err: f64,
    pub psi_l1: f64,
    pub report: Option<NormReport>,
}

/// Grid on [-1, n + 1] with spatial half-width about 200 (psi's transform decays on scale 4).
pub fn cauchy_grid(n: i64) -> Result<FrequencyGrid> {
    let extent = (n as f64 + 2.0) / 2.0;
    let n_pts = pow2_at_least(4.0 * extent * 200.0, 1024, 1 << 16);
    FrequencyGrid::centered(1, n_pts, extent, Vec2::new(n as f64 / 2.0, 0.0))
}

/// ||F^-1 psi||_1 on a dedicated grid.
pub fn psi_l1(n_pts: usize) -> Result<f64> {
    let g = FrequencyGrid::new(1, n_pts, 0.5)?;
    Ok(cauchy_psi().sample(&g).to_spatial().lp_norm(1.0))
}

/// Computed norm of f_n - f_m against the closed form ||F^-1 psi||_1 sum_{m<i<=n} 0.4^i.
pub fn cauchy_example(n: i64, m: i64, grid: Option<&FrequencyGrid>) -> Result<CauchyReport> {
    if m < 1 || n < m {
        return Err(Error::Invalid(format!("need n >= m >= 1 (got n = {n}, m = {m})")));
    }
    let grid = match grid {
        Some(g) => g.clone(),
        None => cauchy_grid(n)?,
    };
    if grid.center[0] - grid.extent > -0.5 || grid.center[0] + grid.extent < n as f64 + 0.5 {
        return Err(Error::SupportOutsideBox(format!(
            "grid [{:.2}, {:.2}) does not hold the translates up to {n}",
            grid.center[0] - grid.extent,
            grid.center[0] + grid.extent
        )));
    }
    let psi = psi_l1(grid.n.max(4096))?;
    let closed_form = psi * ((m + 1)..=n).map(|i| 0.4f64.powi(i as i32)).sum::<f64>();
    if n == m {
        return Ok(CauchyReport { n, m, norm: 0.0, closed_form, rel_err: 0.0, psi_l1: psi, report: None });
    }
    let bapu = TranslateBapu::new(-1, n + 1);
    let f = cauchy_difference(n, m);
    let r = decomp_norm(&f, &bapu, &bapu.weights(), 1.0, 1.0, Some(&grid))?;
    let rel_err = (r.value - closed_form).abs() / closed_form;
    Ok(CauchyReport { n, m, norm: r.value, closed_form, rel_err, psi_l1: psi, report: Some(r) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_sums_to_one_and_has_plateaus() {
        let b = TranslateBapu::new(-5, 5);
        for k in 0..200 {
            let x = -3.0 + 6.0 * k as f64 / 199.0;
            let (vals, safe) = b.eval_all(&Vec2::new(x, 0.0));
            assert!(safe);
            let s: f64 = vals.iter().map(|e| e.1).sum();
            assert!((s - 1.0).abs() < 1e-14);
            assert!(vals.iter().all(|e| (x - e.0.k as f64).abs() < 0.75));
        }
        for i in -2..=2 {
            for t in [-0.25, 0.0, 0.2, 0.25] {
                assert_eq!(b.phi(i, i as f64 + t), 1.0);
            }
        }
    }

    #[test]
    fn equal_indices_give_zero() {
        let r = cauchy_example(3, 3, None).unwrap();
        assert_eq!(r.norm, 0.0);
    }

    #[test]
    fn grid_must_hold_translates() {
        let g = FrequencyGrid::centered(1, 1024, 1.0, Vec2::new(1.0, 0.0)).unwrap();
        assert!(matches!(cauchy_example(4, 1, Some(&g)), Err(Error::SupportOutsideBox(_))));
    }
}
