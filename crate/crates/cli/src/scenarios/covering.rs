use orbitlets_core::bapu::base_set_for;
use orbitlets_core::covering::{
    affine_clusters, clusters, structured_check, AffineCovering, BaseSet, ClusterTable, InducedCovering, WellSpreadFamily,
};
use orbitlets_core::covering::IndexWindow;
use orbitlets_core::group::{ChartKind, GroupChart};
use orbitlets_core::weights::discretize;
use serde_json::json;

use crate::config::Config;
use crate::report::{num, Report, Table};
use crate::setup;

/// P: Q shrunk by one percent on every side, so that its closure sits inside Q.
fn shrunk(q: &BaseSet) -> BaseSet {
    let s = 0.01;
    match *q {
        BaseSet::IntervalPair { lo, hi } => BaseSet::IntervalPair { lo: lo * (1.0 + s), hi: hi * (1.0 - s) },
        BaseSet::Annulus { lo, hi } => BaseSet::Annulus { lo: lo * (1.0 + s), hi: hi * (1.0 - s) },
        BaseSet::Interval { lo, hi } => {
            let d = (hi - lo) * s;
            BaseSet::Interval { lo: lo + d, hi: hi - d }
        }
        BaseSet::Box { lo, hi } => {
            let d = [(hi[0] - lo[0]) * s, (hi[1] - lo[1]) * s];
            BaseSet::Box { lo: [lo[0] + d[0], lo[1] + d[1]], hi: [hi[0] - d[0], hi[1] - d[1]] }
        }
    }
}

/// Clusters of the 1-D translate covering (i - 3/4, i + 3/4); true when every cluster
/// lies inside {i - 1, i, i + 1}.
fn translate_example() -> anyhow::Result<(ClusterTable, bool)> {
    let cov = AffineCovering::translates(
        -6,
        6,
        BaseSet::Interval { lo: -0.75, hi: 0.75 },
        BaseSet::Interval { lo: -0.6, hi: 0.6 },
    )?;
    let t = affine_clusters(&cov);
    let ok = t.neighbors.iter().enumerate().all(|(a, nb)| {
        nb.iter().all(|&b| (cov.indices[b] - cov.indices[a]).abs() <= 1)
    });
    Ok((t, ok))
}

/// The dyadic covering of the plane by 2^k {1/2 < |xi| < 2}: max cluster size, and
/// whether the cluster of k = 0 is exactly {-1, 0, 1}.
fn dyadic_annuli(chart: &GroupChart) -> anyhow::Result<(usize, bool)> {
    let family = WellSpreadFamily::new(chart.clone(), IndexWindow::scales(-8, 8));
    let cov = InducedCovering::build(family, BaseSet::Annulus { lo: 0.5, hi: 2.0 }, None)?;
    let t = clusters(&cov);
    let idx = cov.family.indices();
    let zero = idx.iter().position(|i| i.k == 0).expect("k = 0 in window");
    let mut ks: Vec<i64> = t.neighbors[zero].iter().map(|&b| idx[b].k).collect();
    ks.sort();
    Ok((t.max_cluster, ks == [-1, 0, 1]))
}

pub fn run(cfg: &mut Config) -> anyhow::Result<Report> {
    let chart = setup::chart(cfg)?;
    let window = setup::window(cfg, &chart)?;
    let idx = setup::index_window(cfg, chart.kind)?;
    let v = setup::weight(cfg)?;
    let (_, q) = setup::exponents(cfg)?;
    let mut report = Report::new("covering-stats", cfg);

    let family = WellSpreadFamily::new(chart.clone(), idx.clone());
    let qset = base_set_for(&window, &family)?;
    let cov = InducedCovering::build(family, qset.clone(), None)?;
    let p = shrunk(&qset);
    let table = clusters(&cov);
    let cert = structured_check(&cov, &p, None);
    let weights = discretize(&v, &cov, q)?;

    let doubled = InducedCovering::build(WellSpreadFamily::new(chart.clone(), idx.doubled()), qset.clone(), None)?;
    let cert2 = structured_check(&doubled, &p, None);

    let mut csv = Table::new("covering", &["index", "sign", "log_scale", "aux", "cluster_size", "max_structure", "weight"]);
    let indices = cov.family.indices();
    for (a, i) in indices.iter().enumerate() {
        let pr = cov.family.params_of(i);
        csv.push(vec![
            table.labels[a].clone(),
            pr.sign.to_string(),
            num(pr.log_scale),
            num(pr.aux),
            table.neighbors[a].len().to_string(),
            num(table.structure[a]),
            num(weights.values[a]),
        ]);
    }
    report.tables.push(csv);

    let (tr, tr_ok) = translate_example()?;
    let mut tcsv = Table::new("translates", &["index", "cluster"]);
    for (a, nb) in tr.neighbors.iter().enumerate() {
        let names: Vec<&str> = nb.iter().map(|&b| tr.labels[b].as_str()).collect();
        tcsv.push(vec![tr.labels[a].clone(), names.join(" ")]);
    }
    report.tables.push(tcsv);

    let stable = cert.n0 == cert2.n0 && (cert.c - cert2.c).abs() <= 1e-9 * cert.c.max(1.0);
    report.assert("clusters_symmetric", table.is_symmetric(), format!("{} indices", indices.len()));
    report.assert("p_inside_q", p.compactly_inside(&qset), format!("{p:?} in {qset:?}"));
    report.assert(
        "constants_stable_under_doubling",
        stable,
        format!("n0 {} -> {}, c {:.6} -> {:.6}", cert.n0, cert2.n0, cert.c, cert2.c),
    );
    report.assert("translate_clusters_adjacent", tr_ok, format!("max cluster {}", tr.max_cluster));
    let annuli = if chart.kind == ChartKind::Similitude2d { Some(dyadic_annuli(&chart)?) } else { None };
    if let Some((m, zero)) = annuli {
        report.assert("dyadic_annuli_cluster", m == 3 && zero, format!("max cluster {m}, cluster of 0 is {{-1, 0, 1}}: {zero}"));
    }
    report.results = json!({
        "base_set": qset,
        "p_set": p,
        "indices": indices.len(),
        "max_cluster": table.max_cluster,
        "max_structure": table.max_structure,
        "method": table.method,
        "weight_moderateness": weights.moderateness(&table),
        "doubled": { "indices": doubled.family.indices().len(), "max_cluster": cert2.n0, "max_structure": cert2.c },
        "dyadic_annuli": annuli.map(|(m, z)| json!({ "max_cluster": m, "zero_cluster_adjacent": z })),
        "translate_example": { "max_cluster": tr.max_cluster, "adjacent_only": tr_ok },
    });
    Ok(report)
}
