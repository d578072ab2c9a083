use std::time::Instant;

use orbitlets_core::bapu::BapuFamily;
use orbitlets_core::covering::Index;
use orbitlets_core::decomp::cauchy::{cauchy_example, cauchy_grid};
use orbitlets_core::decomp::norm::{decomp_norm, NormReport};
use orbitlets_core::decomp::signal::BandlimitedSignal;
use orbitlets_core::group::{ChartKind, GroupChart};
use orbitlets_core::transform::{coorbit_norm, node_slice_norms, CoorbitReport, GroupGrid, SliceSpec};
use orbitlets_core::weights::{DiscretizedWeight, WeightSpec};
use orbitlets_core::window::AnalyticWindow;
use serde_json::json;

use crate::config::Config;
use crate::report::{num, Report, Table};
use crate::setup;

pub fn decomp(cfg: &mut Config) -> anyhow::Result<Report> {
    if cfg.contains("cauchy.n") {
        return cauchy(cfg);
    }
    let (chart, _, bapu) = setup::bapu(cfg)?;
    let f = setup::signal(cfg, &chart)?;
    let v = setup::weight(cfg)?;
    let (p, q) = setup::exponents(cfg)?;
    let grid = setup::grid_for(cfg, &f)?;
    let u = setup::decomp_weights(&v, &bapu, q)?;
    let mut report = Report::new("decomp-norm", cfg);
    let r = decomp_norm(&f, &bapu, &u, p, q, Some(&grid))?;

    let mut csv = Table::new("pieces", &["index", "weight", "lp_norm", "weighted"]);
    for pc in &r.pieces {
        csv.push(vec![pc.label.clone(), num(pc.weight), num(pc.lp_norm), num(pc.weight * pc.lp_norm)]);
    }
    report.tables.push(csv);
    let f_hat = f.sample(&grid);
    report.raw.push(("fhat.bin".into(), f_hat.clone()));
    report.raw.push(("f_spatial.bin".into(), f_hat.to_spatial()));

    report.assert("finite_positive", r.value.is_finite() && r.value > 0.0, format!("norm {:.6e}", r.value));
    let agg = NormReport::aggregate(&r.pieces, q);
    report.assert("aggregate_consistent", (agg - r.value).abs() <= 1e-12 * r.value, format!("{agg:.6e}"));
    // with p = q = 2 and unit weights the pieces carry at most the energy of f
    if p == 2.0 && q == 2.0 && u.values.iter().all(|w| (w - 1.0).abs() < 1e-12) {
        let fl2 = f_hat.l2_norm();
        report.assert("l2_pieces_bounded", r.value <= fl2 * (1.0 + 1e-9), format!("{:.6e} <= {fl2:.6e}", r.value));
    }
    report.results = json!({ "norm": r });
    Ok(report)
}

/// The translate-covering Cauchy sequence: ||f_j - f_(j-1)|| for j = m + 1 ..= n.
fn cauchy(cfg: &mut Config) -> anyhow::Result<Report> {
    cfg.set_default("cauchy.m", 1);
    let n = cfg.int("cauchy.n")?;
    let m = cfg.int("cauchy.m")?;
    if !(m >= 1 && n > m) {
        anyhow::bail!("the Cauchy sequence needs n > m >= 1 (got n = {n}, m = {m})");
    }
    let mut report = Report::new("decomp-norm", cfg);
    let grid = cauchy_grid(n)?;
    let whole = cauchy_example(n, m, Some(&grid))?;
    let mut csv = Table::new("cauchy", &["j", "norm", "closed_form", "ratio_to_previous"]);
    let mut steps: Vec<f64> = Vec::new();
    let mut ratios = Vec::new();
    for j in (m + 1)..=n {
        let r = cauchy_example(j, j - 1, Some(&grid))?;
        let ratio = steps.last().map(|prev| r.norm / prev);
        if let Some(x) = ratio {
            ratios.push(x);
        }
        csv.push(vec![j.to_string(), num(r.norm), num(r.closed_form), ratio.map_or_else(String::new, num)]);
        steps.push(r.norm);
    }
    report.tables.push(csv);
    report.assert("matches_closed_form", whole.rel_err < 0.02, format!("{:.6e} vs {:.6e}", whole.norm, whole.closed_form));
    let worst = ratios.iter().map(|r| (r - 0.4).abs()).fold(0.0, f64::max);
    report.assert("successive_ratio", !ratios.is_empty() && worst <= 0.01, format!("ratios {ratios:?}"));
    report.results = json!({
        "n": n,
        "m": m,
        "norm": whole.norm,
        "closed_form": whole.closed_form,
        "rel_err": whole.rel_err,
        "psi_l1": whole.psi_l1,
        "steps": steps,
        "ratios": ratios,
    });
    Ok(report)
}

/// Coorbit norm on the support-driven group grid.
pub fn coorbit_of(
    f: &BandlimitedSignal,
    window: &AnalyticWindow,
    chart: &GroupChart,
    cfg: &Config,
    v: &WeightSpec,
    p: f64,
    q: f64,
) -> anyhow::Result<(GroupGrid, CoorbitReport)> {
    let g = GroupGrid::support_driven(f, window, chart, setup::coorbit_quad(cfg)?, false)?;
    let r = coorbit_norm(f, window, &g, v, p, q, &SliceSpec::default())?;
    Ok((g, r))
}

pub fn coorbit(cfg: &mut Config) -> anyhow::Result<Report> {
    let chart = setup::chart(cfg)?;
    let window = setup::window(cfg, &chart)?;
    let f = setup::signal(cfg, &chart)?;
    let v = setup::weight(cfg)?;
    let (p, q) = setup::exponents(cfg)?;
    let mut report = Report::new("coorbit-norm", cfg);
    let t0 = Instant::now();
    let (g, r) = coorbit_of(&f, &window, &chart, cfg, &v, p, q)?;
    report.timings.push(("coorbit".into(), t0.elapsed().as_secs_f64()));
    let fine = g.refined(&f, &window, false)?;
    let rf = coorbit_norm(&f, &window, &fine, &v, p, q, &SliceSpec::default())?;

    // |W f(x, h)| <= ||f||_2 ||psi||_2 at every node
    let sup = node_slice_norms(&f, &window, &g, f64::INFINITY, &SliceSpec::default());
    let grid = setup::grid_for(cfg, &f)?;
    let fl2 = f.l2_norm(&grid);
    let wl2 = BandlimitedSignal::from_window(&window).l2_norm(&orbitlets_core::decomp::norm::default_grid(
        &BandlimitedSignal::from_window(&window),
    )?);
    let cs = sup.iter().cloned().fold(0.0, f64::max);

    let mut csv = Table::new("coorbit_nodes", &["sign", "log_scale", "aux", "det", "slice_norm", "term"]);
    for c in &r.contributions {
        csv.push(vec![c.node.sign.to_string(), num(c.log_scale), num(c.aux), num(c.det), num(c.slice_norm), num(c.term)]);
    }
    report.tables.push(csv);
    let change = (rf.value - r.value).abs() / r.value;
    report.assert("finite_positive", r.value.is_finite() && r.value > 0.0, format!("norm {:.6e}", r.value));
    report.assert("cauchy_schwarz", cs <= fl2 * wl2 * (1.0 + 1e-6), format!("max |W| {cs:.6e} <= {:.6e}", fl2 * wl2));
    report.assert("refinement_stable", change < 5e-3, format!("{:.6e} -> {:.6e} ({change:.2e})", r.value, rf.value));
    report.results = json!({
        "norm": r.value,
        "refined": rf.value,
        "relative_change": change,
        "nodes": r.node_count,
        "nodes_refined": rf.node_count,
        "max_abs_coefficient": cs,
    });
    Ok(report)
}

/// The lattice element used to build group-dilate subfamilies.
fn lattice_element(kind: ChartKind, k: i64) -> Index {
    match kind {
        ChartKind::Shearlet2d => Index::shear(k, 0, 1),
        _ => Index::scale(k),
    }
}

struct Pair {
    decomp: f64,
    coorbit: f64,
}

fn both(
    f: &BandlimitedSignal,
    window: &AnalyticWindow,
    bapu: &BapuFamily,
    u: &DiscretizedWeight,
    cfg: &Config,
    v: &WeightSpec,
    p: f64,
    q: f64,
) -> anyhow::Result<Pair> {
    let grid = setup::grid_for(cfg, f)?;
    let d = decomp_norm(f, bapu, u, p, q, Some(&grid))?;
    let (_, c) = coorbit_of(f, window, bapu.chart(), cfg, v, p, q)?;
    Ok(Pair { decomp: d.value, coorbit: c.value })
}

pub fn equivalence(cfg: &mut Config) -> anyhow::Result<Report> {
    setup::family_defaults(cfg, 10)?;
    setup::family_grid_default(cfg)?;
    // coarse shearlet dilates push supp f_hat beyond |xi_1| ~ 14, the reach of j = -1
    let dil = if setup::chart_kind(cfg)? == ChartKind::Shearlet2d { setup::int_pair(0, 2) } else { setup::int_pair(-2, 2) };
    cfg.set_default("family.dilates", dil);
    let (chart, window, bapu) = setup::bapu(cfg)?;
    let v = setup::weight(cfg)?;
    let (p, q) = setup::exponents(cfg)?;
    let u = setup::decomp_weights(&v, &bapu, q)?;
    let (d0, d1) = cfg.int_pair("family.dilates")?;
    let mut report = Report::new("equivalence", cfg);

    let fs = setup::family(cfg, &chart, |f| setup::fits_window(f, &bapu))?;
    let mut csv = Table::new("equivalence", &["member", "decomp", "coorbit", "ratio"]);
    let mut ratios = Vec::new();
    for (n, f) in fs.iter().enumerate() {
        let r = both(f, &window, &bapu, &u, cfg, &v, p, q)?;
        let ratio = r.decomp / r.coorbit;
        csv.push(vec![n.to_string(), num(r.decomp), num(r.coorbit), num(ratio)]);
        ratios.push(ratio);
    }
    report.tables.push(csv);
    let (lo, hi) = (ratios.iter().cloned().fold(f64::INFINITY, f64::min), ratios.iter().cloned().fold(0.0, f64::max));
    report.assert("bracket", hi / lo < 10.0, format!("min {lo:.4e}, max {hi:.4e}, max/min {:.3}", hi / lo));

    // group dilates of the first member: both norms pick up the same factor
    let base = &fs[0];
    let mut dcsv = Table::new("dilates", &["k", "decomp", "coorbit", "ratio"]);
    let mut dr = Vec::new();
    for k in d0..=d1 {
        let h = bapu.family().element(&lattice_element(chart.kind, k));
        let fk = base.dilated_by(&h);
        if !setup::fits_window(&fk, &bapu) {
            anyhow::bail!("dilate k = {k} leaves the index window; shrink `family.dilates` or grow `index.*`");
        }
        let r = both(&fk, &window, &bapu, &u, cfg, &v, p, q)?;
        dcsv.push(vec![k.to_string(), num(r.decomp), num(r.coorbit), num(r.decomp / r.coorbit)]);
        dr.push(r.decomp / r.coorbit);
    }
    report.tables.push(dcsv);
    let mean = dr.iter().sum::<f64>() / dr.len() as f64;
    let spread = dr.iter().map(|r| (r - mean).abs() / mean).fold(0.0, f64::max);
    report.assert("dilates_constant", spread < 0.05, format!("max relative spread {spread:.3e}"));
    report.results = json!({
        "ratios": ratios,
        "min": lo,
        "max": hi,
        "max_over_min": hi / lo,
        "dilate_ratios": dr,
        "dilate_spread": spread,
    });
    Ok(report)
}
