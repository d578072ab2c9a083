use orbitlets_core::bapu::{calderon, orbit_probes, BapuFamily, QuadSpec};
use serde_json::json;

use crate::config::Config;
use crate::report::{num, Report, Table};
use crate::setup;

const L1_TOL: f64 = 1e-4;

fn l1_max(bapu: &BapuFamily, table: Option<&mut Table>) -> (f64, f64, bool) {
    let recs = bapu.l1_norms(L1_TOL);
    let mut ok = true;
    let mut worst: f64 = 0.0;
    let mut worst_ratio: f64 = 0.0;
    for r in &recs {
        ok &= r.norm <= r.bound * (1.0 + 1e-3);
        worst = worst.max(r.norm);
        worst_ratio = worst_ratio.max(r.norm / r.bound);
    }
    if let Some(t) = table {
        for r in &recs {
            t.push(vec![r.index.label(bapu.chart().kind), num(r.norm), num(r.bound), num(r.cell_measure), r.grid_n.to_string()]);
        }
    }
    (worst, worst_ratio, ok)
}

pub fn run(cfg: &mut Config) -> anyhow::Result<Report> {
    cfg.set_default("probes", 1000);
    let (chart, window, bapu) = setup::bapu(cfg)?;
    let tol = setup::tolerance(cfg, 1e-4)?;
    let count = cfg.usize("probes")?;
    let seed = cfg.int("seed")? as u64;
    let spec = setup::quad(cfg)?;
    let mut report = Report::new("bapu-check", cfg);

    // partition of unity on truncation-safe probes
    let probes = bapu.safe_probes(count, 8.0, 0.05, seed);
    let pr = bapu.probe_report(&probes);
    let mut csv = Table::new("bapu_probes", &["xi1", "xi2", "sum_phi", "worst_index", "c_psi", "deviation"]);
    for r in &pr.records {
        csv.push(vec![
            num(r.xi[0]),
            num(r.xi[1]),
            num(r.sum),
            r.worst_index.map_or_else(String::new, |i| i.label(chart.kind)),
            num(pr.c_psi),
            num(r.deviation),
        ]);
    }
    report.tables.push(csv);
    report.assert("probe_count", probes.len() == count, format!("{} of {count} safe probes", probes.len()));
    report.assert("partition_of_unity", pr.max_deviation < tol, format!("max |sum phi - 1| = {:.3e}", pr.max_deviation));
    report.assert("supports_subordinate", pr.support_violations == 0, format!("{} violations", pr.support_violations));

    // Calderon constancy over orbit probes, default and refined
    let op = orbit_probes(&chart, 20, seed);
    let c0 = calderon(&window, &chart, spec, &op)?;
    let c1 = calderon(&window, &chart, QuadSpec { nodes_per_cell: 2 * spec.nodes_per_cell, ..spec }, &op)?;
    report.assert("calderon_constant", c0.max_rel_deviation < tol, format!("relative deviation {:.3e}", c0.max_rel_deviation));
    report.assert(
        "calderon_refines",
        c1.max_rel_deviation < c0.max_rel_deviation || c1.max_rel_deviation < 1e-12,
        format!("{:.3e} -> {:.3e}", c0.max_rel_deviation, c1.max_rel_deviation),
    );

    // L1 bounds on the window and on the doubled window
    let mut l1 = Table::new("bapu_l1", &["index", "l1_norm", "bound", "cell_measure", "grid_n"]);
    let (m0, r0, ok0) = l1_max(&bapu, Some(&mut l1));
    let doubled = setup::bapu_over(&window, &chart, bapu.family().window.doubled(), spec)?;
    let (m1, _, ok1) = l1_max(&doubled, None);
    report.tables.push(l1);
    let change = (m1 - m0).abs() / m0;
    report.assert("l1_bound", ok0 && ok1, format!("max norm/bound {r0:.6}"));
    report.assert("l1_max_stable", change < 1e-2, format!("max {m0:.6} -> {m1:.6} ({change:.2e})"));

    report.results = json!({
        "c_psi": pr.c_psi,
        "probes": probes.len(),
        "max_deviation": pr.max_deviation,
        "calderon": { "default": c0, "refined": c1 },
        "l1": { "max": m0, "max_doubled": m1, "relative_change": change, "max_ratio_to_bound": r0 },
    });
    Ok(report)
}
