use orbitlets_core::covering::Index;
use orbitlets_core::decomp::grid::FrequencyGrid;
use orbitlets_core::linalg::{Mat2, Vec2};
use orbitlets_core::transform::{covariance_sweep, localization_identity_check, parseval_check, SliceSpec};
use serde_json::json;

use crate::config::Config;
use crate::report::{num, Report, Table};
use crate::setup;

/// Riemann points per axis in the direct evaluation of single coefficients.
const VALUE_POINTS: usize = 160;

pub fn parseval(cfg: &mut Config) -> anyhow::Result<Report> {
    setup::family_defaults(cfg, 5)?;
    let chart = setup::chart(cfg)?;
    let window = setup::window(cfg, &chart)?;
    let tol = setup::tolerance(cfg, 1e-2)?;
    let fs = setup::family(cfg, &chart, |_| true)?;
    let mut report = Report::new("parseval-check", cfg);
    let r = parseval_check(&fs, &window, &chart, setup::coorbit_quad(cfg)?, &SliceSpec::default())?;
    let mut csv = Table::new("parseval", &["member", "ratio", "c_psi", "rel_err", "nodes"]);
    for k in 0..r.ratios.len() {
        csv.push(vec![
            k.to_string(),
            num(r.ratios[k]),
            num(r.c_psi),
            num((r.ratios[k] - r.c_psi).abs() / r.c_psi),
            r.node_counts[k].to_string(),
        ]);
    }
    report.tables.push(csv);
    let total: f64 = r.seconds.iter().sum();
    report.assert("ratio_matches_calderon", r.max_rel_err < tol, format!("max relative error {:.3e}", r.max_rel_err));
    report.assert("ratio_constant", r.coefficient_of_variation < tol, format!("coefficient of variation {:.3e}", r.coefficient_of_variation));
    report.timed("runtime", total, 60.0);
    report.results = json!({
        "c_psi": r.c_psi,
        "ratios": r.ratios,
        "max_rel_err": r.max_rel_err,
        "coefficient_of_variation": r.coefficient_of_variation,
        "node_counts": r.node_counts,
    });
    Ok(report)
}

/// The cell sum converges at second order in the node density (midpoint rule in the
/// log-scale), so 1e-4 needs about 160 nodes per cell.
pub fn localization_defaults(cfg: &mut Config) {
    cfg.set_default("quad.coorbit_nodes", 256);
}

pub fn localization(cfg: &mut Config) -> anyhow::Result<Report> {
    let chart = setup::chart(cfg)?;
    let window = setup::window(cfg, &chart)?;
    let f = setup::signal(cfg, &chart)?;
    let tol = setup::tolerance(cfg, 1e-4)?;
    let levels = cfg.usize("quad.levels")?.max(2);
    let top = cfg.usize("quad.coorbit_nodes")?;
    if top >> (levels - 1) == 0 {
        anyhow::bail!("`quad.coorbit_nodes` = {top} is too small for {levels} halvings");
    }
    let nodes: Vec<usize> = (0..levels).rev().map(|l| top >> l).collect();
    // the identity holds on any grid containing supp f_hat; a small one suffices
    let base = orbitlets_core::decomp::norm::default_grid(&f)?;
    let n = if cfg.usize("grid.n")? > 0 { cfg.usize("grid.n")? } else if chart.dim() == 1 { 1024 } else { 64 };
    let grid = FrequencyGrid::centered(chart.dim(), n, base.extent, Vec2::new(base.center[0], base.center[1]))?;
    let mut report = Report::new("localization-check", cfg);
    let r = localization_identity_check(&f, &window, &chart, Index::scale(0), &nodes, &grid)?;
    let mut csv = Table::new("localization", &["nodes_per_cell", "nodes", "max_deviation", "relative"]);
    for l in &r.levels {
        csv.push(vec![l.nodes_per_cell.to_string(), l.nodes.to_string(), num(l.max_dev), num(l.max_dev / r.scale)]);
    }
    report.tables.push(csv);
    let last = r.levels.last().map_or(f64::NAN, |l| l.max_dev / r.scale);
    report.assert("deviation", r.scale > 0.0 && last < tol, format!("relative deviation {last:.3e} at {top} nodes"));
    let order = r.order.unwrap_or(f64::NAN);
    report.assert("order", order >= 2.0, format!("observed order {order:.3}"));
    report.results = json!({ "localization": r, "relative_deviation": last });
    Ok(report)
}

pub fn covariance(cfg: &mut Config) -> anyhow::Result<Report> {
    cfg.set_default("probes", 100);
    cfg.set_default("g", setup::float_list(&[1.0, 0.0, 0.0, 1.0]));
    let chart = setup::chart(cfg)?;
    let window = setup::window(cfg, &chart)?;
    let g: Mat2 = setup::matrix(cfg, "g")?;
    if !cfg.contains("signal.centers") {
        // wide bumps around +-g^T c: the dilate sigma(0, g) f then meets most of the
        // sampled h^-T supp psi_hat, including the mirrored sign branch
        let c = g.transpose() * window.center();
        let r = 6.0 * window.outer_radius();
        cfg.set("signal.centers", setup::pair_list(&[[c[0], c[1]], [-c[0], -c[1]]]));
        cfg.set("signal.radii", setup::float_list(&[r, r]));
    }
    let f = setup::signal(cfg, &chart)?;
    let tol = setup::tolerance(cfg, 1e-8)?;
    let count = cfg.usize("probes")?;
    let mut report = Report::new("covariance-check", cfg);
    let r = covariance_sweep(&f, &window, &chart, &g, count, cfg.int("seed")? as u64, VALUE_POINTS)?;
    let mut csv = Table::new("covariance", &["x1", "x2", "log_scale", "aux", "left_re", "left_im", "right_re", "right_im", "deviation"]);
    for s in &r.samples {
        csv.push(vec![
            num(s.x[0]),
            num(s.x[1]),
            num(s.params.log_scale),
            num(s.params.aux),
            num(s.left[0]),
            num(s.left[1]),
            num(s.right[0]),
            num(s.right[1]),
            num(s.deviation),
        ]);
    }
    report.tables.push(csv);
    let nonzero = r.samples.iter().filter(|s| s.left[0] != 0.0 || s.left[1] != 0.0).count();
    report.assert("deviation", r.max_dev < tol, format!("max deviation {:.3e} (max |W| {:.3e})", r.max_dev, r.max_abs));
    report.assert("informative", nonzero * 2 >= r.samples.len(), format!("{nonzero} of {} samples nonzero", r.samples.len()));
    report.results = json!({ "max_deviation": r.max_dev, "max_abs": r.max_abs, "nonzero": nonzero, "samples": r.samples.len() });
    Ok(report)
}
