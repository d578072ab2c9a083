//! Decomposition norms of dilates sigma(0, g) f against f, normalized so that a dilation
//! which preserves the covering gives ratio 1.

use orbitlets_core::decomp::norm::decomp_norm;
use orbitlets_core::group::ChartKind;
use orbitlets_core::linalg::Mat2;
use serde_json::json;

use crate::config::Config;
use crate::report::{num, Report, Table};
use crate::setup;

/// True for positive multiples of orthogonal matrices, which map annuli to annuli.
fn conformal(g: &Mat2) -> bool {
    let m = g.transpose() * g;
    let s = 0.5 * (m[(0, 0)] + m[(1, 1)]);
    (m[(0, 0)] - s).abs() + (m[(1, 1)] - s).abs() + m[(0, 1)].abs() < 1e-12 * s
}

fn bracket(r: &[f64]) -> (f64, f64) {
    (r.iter().cloned().fold(f64::INFINITY, f64::min), r.iter().cloned().fold(0.0, f64::max))
}

pub fn run(cfg: &mut Config) -> anyhow::Result<Report> {
    setup::family_defaults(cfg, 10)?;
    setup::family_grid_default(cfg)?;
    cfg.set_default("g", setup::float_list(&[0.0, -1.0, 1.0, 0.0]));
    let (chart, _, bapu) = setup::bapu(cfg)?;
    if chart.kind != ChartKind::Similitude2d {
        anyhow::bail!("dilation-invariance needs group = similitude2d");
    }
    let g = setup::matrix(cfg, "g")?;
    let v = setup::weight(cfg)?;
    let (p, q) = setup::exponents(cfg)?;
    let tol = setup::tolerance(cfg, 2e-2)?;
    let u = setup::decomp_weights(&v, &bapu, q)?;
    let scale = g.determinant().abs().powf(0.5 - 1.0 / p);
    let mut report = Report::new("dilation-invariance", cfg);

    let fs = setup::family(cfg, &chart, |f| setup::fits_window(f, &bapu) && setup::fits_window(&f.dilated(&g), &bapu))?;
    let mut csv = Table::new("dilation", &["member", "norm", "dilated_norm", "ratio"]);
    let mut ratios = Vec::with_capacity(fs.len());
    for (n, f) in fs.iter().enumerate() {
        let fg = f.dilated(&g);
        let a = decomp_norm(f, &bapu, &u, p, q, Some(&setup::grid_for(cfg, f)?))?.value;
        let b = decomp_norm(&fg, &bapu, &u, p, q, Some(&setup::grid_for(cfg, &fg)?))?.value;
        let r = b / a * scale;
        csv.push(vec![n.to_string(), num(a), num(b), num(r)]);
        ratios.push(r);
    }
    report.tables.push(csv);

    let (lo, hi) = bracket(&ratios);
    let (hlo, hhi) = bracket(&ratios[..(ratios.len() + 1) / 2]);
    let finite = lo > 0.0 && hi.is_finite();
    report.assert("bracket_finite", finite, format!("[{lo:.4e}, {hi:.4e}]"));
    let conf = conformal(&g);
    if conf {
        let worst = ratios.iter().map(|r| (r - 1.0).abs()).fold(0.0, f64::max);
        report.assert("ratio_one", worst < tol, format!("max |ratio - 1| {worst:.3e}"));
    } else {
        // widening of the bracket once the second half of the family is added
        let growth = (hi / lo).ln() - (hhi / hlo).ln();
        report.assert("bracket_stable", finite && growth < 1.5f64.ln(), format!("half [{hlo:.4e}, {hhi:.4e}], full [{lo:.4e}, {hi:.4e}]"));
    }
    report.results = json!({
        "ratios": ratios,
        "min": lo,
        "max": hi,
        "half_min": hlo,
        "half_max": hhi,
        "conformal": conf,
        "det_scale": scale,
    });
    Ok(report)
}
