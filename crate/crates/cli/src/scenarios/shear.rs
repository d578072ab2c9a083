//! Shearlet coorbit norm of a function whose spectrum touches the blind spot, against
//! the same norm for the group conjugated by a quarter turn.
//!
//! The divergence is probed by truncating the log-scale: a node with scale a reaches
//! the frequencies |xi_1| ~ 3 / a, so the cut log a <= ln(3 / eps) keeps the band
//! |xi_1| >= eps. All norms of the eps list come from one pass at the smallest eps by
//! cumulative sums over the nodes ordered by log-scale (p = q = 1 makes the norm a sum).

use std::time::Instant;

use orbitlets_core::bapu::QuadSpec;
use orbitlets_core::decomp::signal::BandlimitedSignal;
use orbitlets_core::group::{GroupChart, ChartKind};
use orbitlets_core::linalg::{invert, Vec2};
use orbitlets_core::transform::{coorbit_norm, fit_line, CoorbitReport, GroupGrid, SliceSpec};
use orbitlets_core::window::{plateau_window, AnalyticWindow};
use serde_json::json;

use crate::config::Config;
use crate::report::{num, Report, Table};
use crate::setup;

pub fn defaults(cfg: &mut Config) -> anyhow::Result<()> {
    cfg.set_default("group", "shearlet2d");
    cfg.set_default("window.kind", "plateau");
    cfg.set_default("window.center", setup::float_pair(3.0, 3.0));
    cfg.set_default("window.radius", 1.0);
    cfg.set_default("window.inner", 0.5);
    cfg.set_default("weight.det_exponent", 7.0 / 6.0);
    cfg.set_default("p", 1.0);
    cfg.set_default("q", 1.0);
    cfg.set_default("quad.coorbit_nodes", 16);
    cfg.set_default("eps", setup::float_list(&(3..=8).map(|k| 0.5f64.powi(k)).collect::<Vec<_>>()));
    cfg.set_default("g", setup::float_list(&[0.0, -1.0, 1.0, 0.0]));
    Ok(())
}

/// The analyzed function: plateau of radius 1 (flat on radius 1/2) at (0, 3).
pub fn probe_signal() -> anyhow::Result<BandlimitedSignal> {
    Ok(BandlimitedSignal::from_window(&plateau_window(2, Vec2::new(0.0, 3.0), 0.5, 1.0)?))
}

/// Log-scale cut that keeps the band |xi_1| >= eps.
pub fn tau_cut(eps: f64) -> f64 {
    (3.0 / eps).ln()
}

/// Norms of the eps list from the contributions of a run at the smallest eps.
pub fn truncated_norms(r: &CoorbitReport, eps: &[f64]) -> Vec<f64> {
    let mut terms: Vec<(f64, f64)> = r.contributions.iter().map(|c| (c.log_scale, c.term)).collect();
    terms.sort_by(|a, b| a.0.total_cmp(&b.0));
    eps.iter()
        .map(|&e| {
            let cut = tau_cut(e);
            terms.iter().take_while(|t| t.0 <= cut).map(|t| t.1).sum()
        })
        .collect()
}

fn truncated_run(f: &BandlimitedSignal, w: &AnalyticWindow, chart: &GroupChart, nodes: usize, eps: &[f64], cfg: &Config) -> anyhow::Result<(Vec<f64>, usize)> {
    let v = setup::weight(cfg)?;
    let (p, q) = setup::exponents(cfg)?;
    let last = *eps.last().expect("nonempty eps list");
    let spec = QuadSpec { nodes_per_cell: nodes, tau_bounds: Some((-20.0, tau_cut(last))) };
    let g = GroupGrid::support_driven(f, w, chart, spec, true)?;
    let r = coorbit_norm(f, w, &g, &v, p, q, &SliceSpec::default())?;
    Ok((truncated_norms(&r, eps), r.node_count))
}

pub fn run(cfg: &mut Config) -> anyhow::Result<Report> {
    let chart = setup::chart(cfg)?;
    if chart.kind != ChartKind::Shearlet2d {
        anyhow::bail!("shear-rotation needs group = shearlet2d");
    }
    let eps = cfg.floats("eps")?;
    if eps.is_empty() || eps.iter().any(|&e| !(e > 0.0)) {
        anyhow::bail!("`eps` must be a nonempty list of positive numbers");
    }
    if eps.windows(2).any(|w| w[1] >= w[0]) {
        anyhow::bail!("`eps` must be strictly decreasing, got {eps:?}");
    }
    let g = setup::matrix(cfg, "g")?;
    let window = setup::window(cfg, &chart)?;
    let f = probe_signal()?;
    let nodes = cfg.usize("quad.coorbit_nodes")?;
    let mut report = Report::new("shear-rotation", cfg);

    let t0 = Instant::now();
    let (h2, n_h2) = truncated_run(&f, &window, &chart, nodes, &eps, cfg)?;
    // conjugated group: the window transported into its orbit, psi2_hat = psi_hat(g^-T .)
    let conj = chart.conjugated(g)?;
    let w2 = window.composed(&invert(&g).transpose(), 1.0);
    let (c2, n_c2) = truncated_run(&f, &w2, &conj, nodes, &eps, cfg)?;
    let seconds = t0.elapsed().as_secs_f64();

    let x: Vec<f64> = eps.iter().map(|e| (1.0 / e).ln()).collect();
    let fit = fit_line(&x, &h2);
    let loglog = fit_line(&x, &h2.iter().map(|v| v.ln()).collect::<Vec<_>>());
    let n = c2.len();
    let increment = if n >= 2 { (c2[n - 1] - c2[n - 2]).abs() / c2[n - 1] } else { 0.0 };

    let mut csv = Table::new("shear_rotation", &["eps", "log_inv_eps", "h2_norm", "conjugated_norm"]);
    for k in 0..eps.len() {
        csv.push(vec![num(eps[k]), num(x[k]), num(h2[k]), num(c2[k])]);
    }
    report.tables.push(csv);
    report.assert("h2_finite", h2.iter().chain(&c2).all(|v| v.is_finite() && *v > 0.0), "all truncated norms finite");
    report.assert(
        "h2_log_linear",
        fit.r2 > 0.99 && fit.slope > 0.0,
        format!("R^2 {:.5}, slope {:.4e} (log-log slope {:.3})", fit.r2, fit.slope, loglog.slope),
    );
    report.assert("conjugated_converges", increment < 1e-2, format!("relative increment {increment:.3e}"));
    report.timed("runtime", seconds, 300.0);
    report.results = json!({
        "eps": eps,
        "h2_norms": h2,
        "conjugated_norms": c2,
        "fit": fit,
        "loglog_fit": loglog,
        "conjugated_increment": increment,
        "nodes": { "h2": n_h2, "conjugated": n_c2 },
        "rotation_angle_deg": g[(1, 0)].atan2(g[(0, 0)]).to_degrees(),
    });
    Ok(report)
}
