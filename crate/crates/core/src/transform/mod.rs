//! The wavelet transform W_psi f(x, h) = |det h|^(1/2) F^-1(f_hat . conj psi_hat(h^T .))(x),
//! mixed norms over sampled groups, coorbit norms and identity checks.

pub mod checks;
pub mod coorbit;
pub mod slice;

use num_complex::Complex64;

use crate::decomp::grid::{lp_norm_samples, pow2_at_least, Domain, FrequencyGrid, SampledSignal};
use crate::linalg::Vec2;
use crate::par;

pub use checks::*;
pub use coorbit::*;
pub use slice::*;

/// ||F^-1 G||_p for G supported in the box center +- half, refining N until the
/// relative change drops below tol. `feature` is the smallest length scale of G.
/// Returns the norm and the final N.
pub fn adaptive_inv_ft_norm<F>(dim: usize, center: Vec2, half: f64, feature: f64, p: f64, tol: f64, eval: F) -> (f64, usize)
where
    F: Fn(&Vec2) -> Complex64 + Sync,
{
    let (n_lo, n_hi) = if dim == 1 { (256, 1 << 16) } else { (64, 256) };
    let mut n = pow2_at_least(4.0 * half * 8.0 / feature, n_lo, n_hi);
    let mut last = inv_ft_norm_at(dim, center, half, n, p, &eval);
    while n < n_hi {
        n *= 2;
        let next = inv_ft_norm_at(dim, center, half, n, p, &eval);
        let change = (next - last).abs() / next.abs().max(f64::MIN_POSITIVE);
        last = next;
        if change < tol {
            break;
        }
    }
    (last, n)
}

fn inv_ft_norm_at<F>(dim: usize, center: Vec2, half: f64, n: usize, p: f64, eval: &F) -> f64
where
    F: Fn(&Vec2) -> Complex64 + Sync,
{
    let grid = FrequencyGrid::centered(dim, n, half, center).expect("power-of-two grid");
    let data = par::map_range(grid.len(), |k| eval(&grid.freq(k)));
    let x = SampledSignal::new(grid.clone(), data, Domain::Frequency).to_spatial();
    lp_norm_samples(&x.data, grid.dx_vol(), p)
}

/// Least-squares line y = a + b x with its coefficient of determination.
#[derive(Clone, Copy, Debug, serde::Serialize, serde::Deserialize)]
pub struct LineFit {
    pub intercept: f64,
    pub slope: f64,
    pub r2: f64,
}

pub fn fit_line(x: &[f64], y: &[f64]) -> LineFit {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    LineFit { intercept: my - slope * mx, slope, r2 }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_l1_of_inverse_transform() {
        // F^-1 exp(-pi xi^2) = exp(-pi x^2), L1 norm 1
        let (v, _) = adaptive_inv_ft_norm(1, Vec2::zeros(), 6.0, 1.0, 1.0, 1e-10, |xi| {
            Complex64::new((-std::f64::consts::PI * xi[0] * xi[0]).exp(), 0.0)
        });
        assert!((v - 1.0).abs() < 1e-9);
    }

    #[test]
    fn line_fit_is_exact_on_lines() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = x.map(|t| 2.0 - 0.5 * t);
        let f = fit_line(&x, &y);
        assert!((f.slope + 0.5).abs() < 1e-14 && (f.intercept - 2.0).abs() < 1e-14 && (f.r2 - 1.0).abs() < 1e-14);
    }
}
