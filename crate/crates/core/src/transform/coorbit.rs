//! Sampled groups, mixed norms (int_H (v(h) ||F(., h)||_p)^q dh / |det h|)^(1/q) and
//! coorbit norms ||W_psi f||_{L_v^{p,q}}.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::bapu::{support_ball, GroupQuadrature, NodeId, QuadSpec};
use crate::decomp::grid::{FrequencyGrid, SampledSignal};
use crate::decomp::signal::BandlimitedSignal;
use crate::error::{Error, Result};
use crate::group::{ChartKind, GroupChart, GroupPoint};
use crate::par;
use crate::transform::slice::{slice_norm, wavelet_slice, SliceSpec};
use crate::weights::WeightSpec;
use crate::window::AnalyticWindow;

/// Quadrature nodes covering every h with supp psi_hat(h^T .) meeting supp f_hat.
#[derive(Clone, Debug)]
pub struct GroupGrid {
    pub quad: GroupQuadrature,
    pub nodes: Vec<NodeId>,
    /// the log-scale truncation cut relevant nodes
    pub clipped: bool,
}

impl GroupGrid {
    /// Support-driven node set: the nodes hit from sampled points of supp f_hat,
    /// padded by one node in each parameter, pruned by a ball test.
    pub fn support_driven(f: &BandlimitedSignal, window: &AnalyticWindow, chart: &GroupChart, spec: QuadSpec, allow_clip: bool) -> Result<Self> {
        let quad = GroupQuadrature::for_chart(chart, spec);
        if f.is_zero() || window.is_zero() {
            return Ok(GroupGrid { quad, nodes: vec![], clipped: false });
        }
        let (c, r) = support_ball(window);
        let mut samples = f.support_samples(12);
        let balls: Vec<_> = f.atoms.iter().filter(|a| !a.window.is_zero()).map(|a| (a.window.center(), a.window.outer_radius())).collect();
        samples.extend(quad.blind_line_samples(&balls, 12, |xi| f.atoms.iter().any(|a| a.window.eval(xi) > 0.0)));
        let hits = par::map(&samples, |xi| {
            let mut ids = Vec::new();
            let sweep = quad.visit(xi, &c, r, None, None, |id, y| {
                if window.eval(&y) > 0.0 {
                    ids.push(id);
                }
            });
            (ids, sweep)
        });
        let mut set = BTreeSet::new();
        let mut clipped = false;
        for (ids, sweep) in &hits {
            if sweep.unbounded {
                return Err(Error::Clipped(
                    "supp f_hat meets the blind spot: the log-scale parameter is unbounded; supply tau bounds".into(),
                ));
            }
            clipped |= sweep.clipped;
            set.extend(ids.iter().copied());
        }
        if clipped && !allow_clip {
            let (a, b) = spec.tau_bounds.unwrap_or((f64::NAN, f64::NAN));
            return Err(Error::Clipped(format!("relevant log-scales extend beyond the truncation [{a:.3}, {b:.3}]")));
        }
        let n = quad.n() as i64;
        let mut padded = BTreeSet::new();
        for id in &set {
            for dm in -1..=1 {
                let dls: &[i64] = if chart.kind == ChartKind::Dyadic1d { &[0] } else { &[-1, 0, 1] };
                for &dl in dls {
                    let mut l = id.l + dl;
                    if chart.kind == ChartKind::Similitude2d {
                        l = l.rem_euclid(n);
                    }
                    padded.insert(NodeId { sign: id.sign, m: id.m + dm, l });
                }
            }
        }
        if let Some((a, b)) = spec.tau_bounds {
            padded.retain(|id| {
                let t = (id.m as f64 + 0.5) * quad.dtau;
                t >= a && t <= b
            });
        }
        let rf: Vec<(crate::linalg::Vec2, f64)> = f
            .atoms
            .iter()
            .filter(|a| !a.window.is_zero())
            .map(|a| (a.window.center(), a.window.outer_radius()))
            .collect();
        let nodes = padded
            .into_iter()
            .filter(|id| {
                let h = quad.point(id);
                let nh = h.norm();
                rf.iter().any(|(cf, rr)| (h.dual(cf) - c).norm() < r + nh * rr)
            })
            .collect();
        Ok(GroupGrid { quad, nodes, clipped })
    }

    /// The same construction with twice the nodes per parameter.
    pub fn refined(&self, f: &BandlimitedSignal, window: &AnalyticWindow, allow_clip: bool) -> Result<Self> {
        let spec = QuadSpec { nodes_per_cell: 2 * self.quad.n(), tau_bounds: self.quad.spec.tau_bounds };
        GroupGrid::support_driven(f, window, self.quad.chart(), spec, allow_clip)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn points(&self) -> Vec<GroupPoint> {
        self.nodes.iter().map(|id| self.quad.point(id)).collect()
    }
}

/// Slices W_psi f(., h_m) on one shared grid.
#[derive(Clone, Debug)]
pub struct WaveletCoeffs {
    pub nodes: Vec<NodeId>,
    pub points: Vec<GroupPoint>,
    /// Haar weights
    pub weights: Vec<f64>,
    pub slices: Vec<SampledSignal>,
}

pub fn wavelet_coeffs(f: &BandlimitedSignal, window: &AnalyticWindow, group: &GroupGrid, grid: &FrequencyGrid) -> WaveletCoeffs {
    let points = group.points();
    let slices = points.iter().map(|h| wavelet_slice(f, window, h, grid)).collect();
    WaveletCoeffs { nodes: group.nodes.clone(), weights: vec![group.quad.weight(); points.len()], points, slices }
}

/// (sum_m w_m (v(h_m) s_m)^q / |det h_m|)^(1/q), q = infinity as max of v s.
pub fn mixed_norm_of(weights: &[f64], points: &[GroupPoint], slice_norms: &[f64], v: &WeightSpec, q: f64) -> f64 {
    let terms = points.iter().zip(slice_norms).map(|(h, s)| v.eval(h) * s);
    if q.is_infinite() {
        return terms.fold(0.0, f64::max);
    }
    let sum: f64 = terms
        .zip(weights)
        .zip(points)
        .map(|((t, w), h)| w * t.powf(q) / h.det_abs)
        .sum();
    sum.powf(1.0 / q)
}

pub fn mixed_norm(coeffs: &WaveletCoeffs, v: &WeightSpec, p: f64, q: f64) -> f64 {
    let norms: Vec<f64> = coeffs.slices.iter().map(|s| s.lp_norm(p)).collect();
    mixed_norm_of(&coeffs.weights, &coeffs.points, &norms, v, q)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NodeContribution {
    pub node: NodeId,
    pub log_scale: f64,
    pub aux: f64,
    pub det: f64,
    pub slice_norm: f64,
    /// w v^q s^q / |det h| (or v s for q = infinity)
    pub term: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CoorbitReport {
    pub value: f64,
    pub p: f64,
    pub q: f64,
    pub node_count: usize,
    pub nodes_per_cell: usize,
    pub clipped: bool,
    pub contributions: Vec<NodeContribution>,
}

/// Per-node slice norms on adapted grids.
pub fn node_slice_norms(f: &BandlimitedSignal, window: &AnalyticWindow, group: &GroupGrid, p: f64, spec: &SliceSpec) -> Vec<f64> {
    let points = group.points();
    par::map(&points, |h| slice_norm(f, window, h, p, spec))
}

pub fn coorbit_norm(
    f: &BandlimitedSignal,
    window: &AnalyticWindow,
    group: &GroupGrid,
    v: &WeightSpec,
    p: f64,
    q: f64,
    spec: &SliceSpec,
) -> Result<CoorbitReport> {
    if !(p >= 1.0 && q >= 1.0) {
        return Err(Error::Invalid(format!("exponents must satisfy p, q >= 1 (got p = {p}, q = {q})")));
    }
    let points = group.points();
    let norms = node_slice_norms(f, window, group, p, spec);
    let w = group.quad.weight();
    let contributions: Vec<NodeContribution> = group
        .nodes
        .iter()
        .zip(&points)
        .zip(&norms)
        .map(|((id, h), s)| {
            let t = v.eval(h) * s;
            let term = if q.is_infinite() { t } else { w * t.powf(q) / h.det_abs };
            NodeContribution { node: *id, log_scale: h.params.log_scale, aux: h.params.aux, det: h.det_abs, slice_norm: *s, term }
        })
        .collect();
    let value = mixed_norm_of(&vec![w; points.len()], &points, &norms, v, q);
    Ok(CoorbitReport {
        value,
        p,
        q,
        node_count: points.len(),
        nodes_per_cell: group.quad.n(),
        clipped: group.clipped,
        contributions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::ChartKind;
    use crate::linalg::Vec2;
    use crate::window::{default_window, Profile};

    fn similitude_case() -> (BandlimitedSignal, AnalyticWindow, GroupChart) {
        let chart = GroupChart::new(ChartKind::Similitude2d);
        let w = default_window(&chart);
        let f = BandlimitedSignal::from_window(&AnalyticWindow::ball(2, Vec2::new(1.2, 0.9), 0.5, Profile::Bump));
        (f, w, chart)
    }

    #[test]
    fn zero_function_has_zero_norm() {
        let (_, w, chart) = similitude_case();
        let g = GroupGrid::support_driven(&BandlimitedSignal::zero(2), &w, &chart, QuadSpec::with_nodes(16), false).unwrap();
        let r = coorbit_norm(&BandlimitedSignal::zero(2), &w, &g, &WeightSpec::one(), 2.0, 2.0, &SliceSpec::default()).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn weight_scaling_is_exact() {
        let (f, w, chart) = similitude_case();
        let g = GroupGrid::support_driven(&f, &w, &chart, QuadSpec::with_nodes(16), false).unwrap();
        let a = coorbit_norm(&f, &w, &g, &WeightSpec::det_power(0.3), 1.0, 2.0, &SliceSpec::default()).unwrap();
        let b: f64 = a.contributions.iter().map(|c| c.term).sum::<f64>().sqrt();
        assert!((a.value - b).abs() < 1e-12 * b);
        // c v in place of v: the same as c times every slice norm
        let pts = g.points();
        let norms: Vec<f64> = a.contributions.iter().map(|c| 3.0 * c.slice_norm).collect();
        let scaled = mixed_norm_of(&vec![g.quad.weight(); pts.len()], &pts, &norms, &WeightSpec::det_power(0.3), 2.0);
        assert!((scaled - 3.0 * a.value).abs() < 1e-12 * scaled);
    }

    #[test]
    fn support_driven_grid_is_complete() {
        // every node with a nonzero slice lies in the grid: compare with a brute-force sweep
        let (f, w, chart) = similitude_case();
        let spec = QuadSpec::with_nodes(8);
        let g = GroupGrid::support_driven(&f, &w, &chart, spec, false).unwrap();
        let quad = &g.quad;
        let norms = node_slice_norms(&f, &w, &g, 2.0, &SliceSpec::default());
        let total: f64 = norms.iter().map(|s| s * s).sum();
        let mut brute = 0.0;
        for m in -40..40 {
            for l in 0..8 {
                let id = NodeId { sign: 1, m, l };
                let s = crate::transform::slice::slice_norm(&f, &w, &quad.point(&id), 2.0, &SliceSpec::default());
                brute += s * s;
            }
        }
        assert!((total - brute).abs() < 1e-12 * brute);
    }

    #[test]
    fn clipping_is_reported() {
        let (f, w, chart) = similitude_case();
        let spec = QuadSpec { nodes_per_cell: 8, tau_bounds: Some((-0.1, 0.1)) };
        assert!(matches!(GroupGrid::support_driven(&f, &w, &chart, spec, false), Err(Error::Clipped(_))));
        let g = GroupGrid::support_driven(&f, &w, &chart, spec, true).unwrap();
        assert!(g.clipped);
    }

    #[test]
    fn truncated_shearlet_grid_reaches_the_cut() {
        // f_hat touches the blind line xi_1 = 0, so every log-scale up to the cut is hit
        let chart = GroupChart::new(ChartKind::Shearlet2d);
        let w = AnalyticWindow::ball(2, Vec2::new(3.0, 3.0), 1.0, Profile::Bump);
        let f = BandlimitedSignal::from_window(&AnalyticWindow::ball(2, Vec2::new(0.0, 3.0), 1.0, Profile::Bump));
        let spec = QuadSpec { nodes_per_cell: 4, tau_bounds: Some((-20.0, 6.0)) };
        let g = GroupGrid::support_driven(&f, &w, &chart, spec, true).unwrap();
        let top = g.nodes.iter().map(|id| (id.m as f64 + 0.5) * g.quad.dtau).fold(f64::MIN, f64::max);
        assert!(top > 6.0 - g.quad.dtau, "top log-scale {top}");
    }
}
