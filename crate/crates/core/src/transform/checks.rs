//! Identity checks: Duflo-Moore/Parseval, the localization formula and conjugation covariance.

use std::f64::consts::{LN_2, TAU};
use std::time::Instant;

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bapu::{GroupQuadrature, QuadSpec};
use crate::covering::{Index, IndexWindow, WellSpreadFamily};
use crate::decomp::grid::{Domain, FrequencyGrid, SampledSignal};
use crate::decomp::norm::default_grid;
use crate::decomp::signal::BandlimitedSignal;
use crate::error::{Error, Result};
use crate::group::{ChartKind, GroupChart, GroupPoint, Params};
use crate::linalg::{invert, Mat2, Vec2};
use crate::transform::coorbit::{coorbit_norm, GroupGrid};
use crate::transform::slice::{wavelet_slice, wavelet_value, SliceSpec};
use crate::weights::WeightSpec;
use crate::window::AnalyticWindow;

const QUAD_TOL: f64 = 1e-13;

fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    quadrature::integrate(f, a, b, QUAD_TOL).integral
}

/// Interval of t with |A (p + t d - c)| < 1, if any.
fn chord(w: &AnalyticWindow, p: &Vec2, d: &Vec2) -> Option<(f64, f64)> {
    let a = w.shape();
    let u = a * (p - w.center());
    let v = a * d;
    let (qa, qb, qc) = (v.dot(&v), 2.0 * u.dot(&v), u.dot(&u) - 1.0);
    let disc = qb * qb - 4.0 * qa * qc;
    if disc <= 0.0 || qa == 0.0 {
        return None;
    }
    let s = disc.sqrt();
    Some(((-qb - s) / (2.0 * qa), (-qb + s) / (2.0 * qa)))
}

/// C_psi = int_H |psi_hat(h^T xi_0)|^2 dh by the change of variables y = h^T xi_0:
/// int |psi_hat|^2 / |y| (dyadic), / |y|^2 (similitude), / y_1^2 (shearlet); for a
/// conjugated chart y = g^T z with the density of z.
pub fn calderon_integral(window: &AnalyticWindow, chart: &GroupChart) -> Result<f64> {
    if window.is_zero() {
        return Ok(0.0);
    }
    let w = match chart.conjugator() {
        Some(g) => window.composed(&g.transpose(), 1.0),
        None => window.clone(),
    };
    let base = GroupChart::new(chart.kind);
    if w.blind_margin(&base) <= 0.0 {
        return Err(Error::TouchesBlindSpot { what: "window".into(), margin: w.blind_margin(&base) });
    }
    let (lo, hi) = w.bounding_box();
    let sq = |y: &Vec2| {
        let v = w.eval(y);
        v * v
    };
    let value = match chart.kind {
        ChartKind::Dyadic1d => integrate(|t| sq(&Vec2::new(t, 0.0)) / t.abs(), lo[0], hi[0]),
        ChartKind::Similitude2d | ChartKind::Shearlet2d => integrate(
            |y1| {
                let Some((a, b)) = chord(&w, &Vec2::new(y1, 0.0), &Vec2::new(0.0, 1.0)) else { return 0.0 };
                integrate(
                    |y2| {
                        let y = Vec2::new(y1, y2);
                        let rho = if chart.kind == ChartKind::Similitude2d { y.norm_squared() } else { y1 * y1 };
                        sq(&y) / rho
                    },
                    a,
                    b,
                )
            },
            lo[0],
            hi[0],
        ),
    };
    Ok(value)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ParsevalReport {
    pub c_psi: f64,
    pub ratios: Vec<f64>,
    pub max_rel_err: f64,
    pub coefficient_of_variation: f64,
    pub node_counts: Vec<usize>,
    pub seconds: Vec<f64>,
}

/// ||W_psi f||^2_{L^2(G)} / ||f||^2 for each f against the independently integrated C_psi.
pub fn parseval_check(fs: &[BandlimitedSignal], window: &AnalyticWindow, chart: &GroupChart, spec: QuadSpec, slices: &SliceSpec) -> Result<ParsevalReport> {
    let c_psi = calderon_integral(window, chart)?;
    let mut ratios = Vec::new();
    let mut node_counts = Vec::new();
    let mut seconds = Vec::new();
    for f in fs {
        let t0 = Instant::now();
        let g = GroupGrid::support_driven(f, window, chart, spec, false)?;
        let r = coorbit_norm(f, window, &g, &WeightSpec::one(), 2.0, 2.0, slices)?;
        let fl2 = f.l2_norm(&default_grid(f)?);
        ratios.push(r.value * r.value / (fl2 * fl2));
        node_counts.push(g.len());
        seconds.push(t0.elapsed().as_secs_f64());
    }
    let max_rel_err = ratios.iter().map(|r| (r - c_psi).abs() / c_psi).fold(0.0, f64::max);
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    let var = ratios.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / ratios.len() as f64;
    Ok(ParsevalReport { c_psi, max_rel_err, coefficient_of_variation: var.sqrt() / mean, ratios, node_counts, seconds })
}

/// phi_V(xi) C_psi = int_V |psi_hat(h^T xi)|^2 dh by adaptive quadrature.
pub fn cell_integral(window: &AnalyticWindow, chart: &GroupChart, family: &WellSpreadFamily, cell: &Index, xi: &Vec2) -> Result<f64> {
    let p = family.params_of(cell);
    let (t0, t1) = (p.log_scale, p.log_scale + family.tau_period());
    let c = window.center();
    let r = window.outer_radius();
    let sq = |y: &Vec2| {
        let v = window.eval(y);
        v * v
    };
    match chart.kind {
        ChartKind::Dyadic1d => {
            let (lo, hi) = window.bounding_box();
            let mut acc = 0.0;
            for sign in [-1.0, 1.0] {
                let t = sign * xi[0];
                if t == 0.0 {
                    continue;
                }
                let (a, b) = if t > 0.0 { (lo[0] / t, hi[0] / t) } else { (hi[0] / t, lo[0] / t) };
                if b <= 0.0 {
                    continue;
                }
                let a = if a <= 0.0 { t0 } else { a.ln().max(t0) };
                acc += integrate(|tau| sq(&Vec2::new(tau.exp() * t, 0.0)), a, b.ln().min(t1));
            }
            Ok(acc)
        }
        ChartKind::Similitude2d => {
            let rx = xi.norm();
            let cn = c.norm();
            if rx == 0.0 {
                return Ok(0.0);
            }
            let lo = if cn > r { ((cn - r) / rx).ln() } else { t0 };
            let hi = ((cn + r) / rx).ln();
            let phi_c = c[1].atan2(c[0]) - xi[1].atan2(xi[0]);
            Ok(integrate(
                |tau| {
                    let rho = tau.exp() * rx;
                    let kappa = (rho * rho + cn * cn - r * r) / (2.0 * rho * cn);
                    if kappa >= 1.0 {
                        return 0.0;
                    }
                    let (a, b) = if kappa <= -1.0 { (0.0, TAU) } else {
                        let d = kappa.acos();
                        (phi_c - d, phi_c + d)
                    };
                    integrate(
                        |phi| {
                            let (s, co) = phi.sin_cos();
                            sq(&(Vec2::new(co * xi[0] - s * xi[1], s * xi[0] + co * xi[1]) * tau.exp()))
                        },
                        a,
                        b,
                    )
                },
                lo.max(t0),
                hi.min(t1),
            ))
        }
        ChartKind::Shearlet2d => Err(Error::UnsupportedKind("cell integrals are implemented for the radial charts".into())),
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LocalizationLevel {
    pub nodes_per_cell: usize,
    pub nodes: usize,
    pub max_dev: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LocalizationReport {
    pub cell: Index,
    pub c_psi: f64,
    /// max |F^-1(phi_V f_hat)| on the grid
    pub scale: f64,
    pub levels: Vec<LocalizationLevel>,
    /// log2 of the deviation ratio between the last two levels above the roundoff floor
    pub order: Option<f64>,
}

/// Both sides of F^-1(phi_V f_hat)(x) = C^-1 int_V |det h|^(-3/2) (W_psi f(., h) * psi(h^-1 .))(x) dh:
/// the left side from adaptive quadrature of phi_V, the right side by per-node FFT
/// convolution and the node rule at each density in `levels`.
pub fn localization_identity_check(
    f: &BandlimitedSignal,
    window: &AnalyticWindow,
    chart: &GroupChart,
    cell: Index,
    levels: &[usize],
    grid: &FrequencyGrid,
) -> Result<LocalizationReport> {
    let family = WellSpreadFamily::new(chart.clone(), IndexWindow::scales(cell.k, cell.k));
    let c_psi = calderon_integral(window, chart)?;
    if c_psi == 0.0 {
        return Ok(LocalizationReport { cell, c_psi, scale: 0.0, levels: vec![], order: None });
    }
    let f_hat = f.sample(grid);
    let phi: Vec<Result<f64>> = crate::par::map_range(grid.len(), |k| {
        if f_hat.data[k] == Complex64::new(0.0, 0.0) {
            Ok(0.0)
        } else {
            cell_integral(window, chart, &family, &cell, &grid.freq(k)).map(|v| v / c_psi)
        }
    });
    let mut data = f_hat.data.clone();
    for (z, v) in data.iter_mut().zip(phi) {
        *z *= v?;
    }
    let left = SampledSignal::new(grid.clone(), data, Domain::Frequency).to_spatial();
    let scale = left.data.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut out = Vec::new();
    for &n in levels {
        let quad = GroupQuadrature::new(family.clone(), QuadSpec::with_nodes(n));
        let nodes = quad.cell_nodes(&cell);
        let points: Vec<GroupPoint> = nodes.iter().map(|id| quad.point(id)).collect();
        let w = quad.weight();
        let parts = crate::par::map(&points, |h| {
            let slice = wavelet_slice(f, window, h, grid);
            let mut spec = slice.to_frequency();
            for (k, z) in spec.data.iter_mut().enumerate() {
                let xi = grid.freq(k);
                *z *= h.det_abs * window.eval(&h.dual(&xi));
            }
            let conv = spec.to_spatial();
            let s = w * h.det_abs.powf(-1.5) / c_psi;
            conv.data.into_iter().map(|z| z * s).collect::<Vec<_>>()
        });
        let mut right = vec![Complex64::new(0.0, 0.0); grid.len()];
        for part in parts {
            for (a, b) in right.iter_mut().zip(part) {
                *a += b;
            }
        }
        let max_dev = left.data.iter().zip(&right).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        out.push(LocalizationLevel { nodes_per_cell: n, nodes: nodes.len(), max_dev });
    }
    let floor = 1e-12 * scale.max(1e-300);
    let order = out
        .windows(2)
        .filter(|p| p[1].max_dev > floor && p[0].max_dev > floor)
        .last()
        .map(|p| (p[0].max_dev / p[1].max_dev).log2() / ((p[1].nodes_per_cell as f64 / p[0].nodes_per_cell as f64).log2()));
    Ok(LocalizationReport { cell, c_psi, scale, levels: out, order })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CovarianceSample {
    pub x: [f64; 2],
    pub params: Params,
    pub left: [f64; 2],
    pub right: [f64; 2],
    pub deviation: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CovarianceReport {
    pub g: [f64; 4],
    pub max_dev: f64,
    pub max_abs: f64,
    pub samples: Vec<CovarianceSample>,
}

/// Left: W^1_psi1(sigma(0, g) f)(x, h); right: W^2_psi2 f(g^-1 x, g^-1 h g) with
/// psi2_hat = |det g|^(-1/2) psi1_hat(g^-T .). Both by direct frequency quadrature.
pub fn conjugation_covariance_check(
    f: &BandlimitedSignal,
    window: &AnalyticWindow,
    chart: &GroupChart,
    g: &Mat2,
    h: &GroupPoint,
    x: &Vec2,
    m: usize,
) -> Result<(Complex64, Complex64)> {
    let conj = chart.conjugated(*g)?;
    let left = wavelet_value(&f.dilated(g), window, h, x, m);
    let psi2 = window.dilated(&invert(g));
    let h2 = conj.point(h.params);
    let x2 = invert(g) * x;
    let right = wavelet_value(f, &psi2, &h2, &x2, m);
    Ok((left, right))
}

/// The covariance identity at `count` seeded random (x, h).
pub fn covariance_sweep(
    f: &BandlimitedSignal,
    window: &AnalyticWindow,
    chart: &GroupChart,
    g: &Mat2,
    count: usize,
    seed: u64,
    m: usize,
) -> Result<CovarianceReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cases: Vec<(Vec2, Params)> = (0..count)
        .map(|_| {
            let x = Vec2::new(rng.gen_range(-2.0..2.0), if chart.dim() == 2 { rng.gen_range(-2.0..2.0) } else { 0.0 });
            let sign = if chart.has_sign_branch() && rng.gen_bool(0.5) { -1 } else { 1 };
            let aux = match chart.kind {
                ChartKind::Similitude2d => rng.gen_range(0.0..TAU),
                ChartKind::Shearlet2d => rng.gen_range(-1.0..1.0),
                ChartKind::Dyadic1d => 0.0,
            };
            (x, Params::new(sign, rng.gen_range(-LN_2..LN_2), aux))
        })
        .collect();
    let rows = crate::par::map(&cases, |(x, p)| {
        let h = chart.point(*p);
        conjugation_covariance_check(f, window, chart, g, &h, x, m).map(|(l, r)| CovarianceSample {
            x: [x[0], x[1]],
            params: *p,
            left: [l.re, l.im],
            right: [r.re, r.im],
            deviation: (l - r).norm(),
        })
    });
    let samples: Vec<CovarianceSample> = rows.into_iter().collect::<Result<_>>()?;
    Ok(CovarianceReport {
        g: [g[(0, 0)], g[(0, 1)], g[(1, 0)], g[(1, 1)]],
        max_dev: samples.iter().map(|s| s.deviation).fold(0.0, f64::max),
        max_abs: samples.iter().map(|s| Complex64::new(s.left[0], s.left[1]).norm()).fold(0.0, f64::max),
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bapu::{calderon_at, GroupQuadrature, DEFAULT_NODES_PER_CELL};
    use crate::window::{default_window, Profile};

    #[test]
    fn calderon_integral_matches_node_rule() {
        for kind in ChartKind::ALL {
            let chart = GroupChart::new(kind);
            let w = default_window(&chart);
            let a = calderon_integral(&w, &chart).unwrap();
            let rule = |n| calderon_at(&w, &GroupQuadrature::for_chart(&chart, QuadSpec::with_nodes(n)), &chart.base_point()).unwrap();
            let b = rule(DEFAULT_NODES_PER_CELL);
            assert!((a - b).abs() < 2e-5 * a, "{kind}: {a} vs {b}");
            let fine = rule(512);
            assert!((a - fine).abs() < 1e-9 * a, "{kind}: {a} vs {fine}");
        }
    }

    #[test]
    fn zero_window_gives_zero_sides() {
        let chart = GroupChart::new(ChartKind::Dyadic1d);
        let f = BandlimitedSignal::from_window(&AnalyticWindow::ball(1, Vec2::new(1.0, 0.0), 0.4, Profile::Bump));
        let grid = FrequencyGrid::new(1, 256, 4.0).unwrap();
        let r = localization_identity_check(&f, &AnalyticWindow::zero(1), &chart, Index::scale(0), &[8], &grid).unwrap();
        assert!(r.levels.is_empty());
    }

    #[test]
    fn identity_conjugation_is_exact() {
        let chart = GroupChart::new(ChartKind::Shearlet2d);
        let w = default_window(&chart);
        let f = BandlimitedSignal::from_window(&AnalyticWindow::ball(2, Vec2::new(2.5, 2.0), 0.7, Profile::Bump));
        let r = covariance_sweep(&f, &w, &chart, &Mat2::identity(), 5, 1, 64).unwrap();
        assert_eq!(r.max_dev, 0.0);
    }
}
