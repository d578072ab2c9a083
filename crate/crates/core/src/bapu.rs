//! Group-cell partitions of unity phi_i(xi) = (1/C) sum_{h in U_i} w |psi_hat(h^T xi)|^2.
//!
//! The Haar integral over the group is a tensor midpoint rule on the chart's flat
//! coordinates: node (sign, m, l) sits at t = (m + 1/2) dt, aux = (l + 1/2) daux with
//! dt = (cell length in t) / n and daux = (cell length in aux) / n, so lattice cells are
//! unions of whole quadrature cells. Every node belongs to the first window cell
//! (in index order) containing it.

use std::f64::consts::TAU;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::covering::{BaseSet, Index, IndexWindow, InducedCovering, WellSpreadFamily};
use crate::error::{Error, Result};
use crate::group::{ChartKind, GroupChart, GroupPoint, Params};
use crate::linalg::{invert, Mat2, Vec2};
use crate::par;
use crate::window::AnalyticWindow;

pub const DEFAULT_NODES_PER_CELL: usize = 128;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId {
    pub sign: i8,
    pub m: i64,
    pub l: i64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadSpec {
    pub nodes_per_cell: usize,
    /// optional truncation of the log-scale parameter
    pub tau_bounds: Option<(f64, f64)>,
}

impl Default for QuadSpec {
    fn default() -> Self {
        QuadSpec { nodes_per_cell: DEFAULT_NODES_PER_CELL, tau_bounds: None }
    }
}

impl QuadSpec {
    pub fn with_nodes(n: usize) -> Self {
        QuadSpec { nodes_per_cell: n, tau_bounds: None }
    }
}

/// Result flags of a node sweep.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Sweep {
    /// nodes were cut off by the truncation bounds
    pub clipped: bool,
    /// the point is on the blind spot relative to an unbounded window support
    pub unbounded: bool,
}

#[derive(Clone, Debug)]
pub struct GroupQuadrature {
    pub family: WellSpreadFamily,
    pub spec: QuadSpec,
    pub dtau: f64,
    pub daux: f64,
    /// exp(t'/2) for the n sub-rows of a shearlet cell
    half_exp: Vec<f64>,
    conj: Option<(Mat2, Mat2)>,
}

/// Positive scales r with r * t in (lo, hi), as a log-range.
fn log_ratio_range(t: f64, lo: f64, hi: f64) -> Option<(f64, f64)> {
    let (a, b) = if t > 0.0 {
        (lo / t, hi / t)
    } else if t < 0.0 {
        (hi / t, lo / t)
    } else {
        return None;
    };
    if b <= 0.0 || b <= a {
        return None;
    }
    let la = if a <= 0.0 { f64::NEG_INFINITY } else { a.ln() };
    Some((la, b.ln()))
}

/// Integers m with (m + 1/2) d in (lo, hi).
fn node_range(lo: f64, hi: f64, d: f64) -> (i64, i64) {
    let a = (lo / d - 0.5).floor() as i64 + 1;
    let b = (hi / d - 0.5).ceil() as i64 - 1;
    (a, b)
}

impl GroupQuadrature {
    pub fn new(family: WellSpreadFamily, spec: QuadSpec) -> Self {
        let n = spec.nodes_per_cell.max(1);
        let dtau = family.tau_period() / n as f64;
        let daux = family.aux_period() / n as f64;
        let half_exp = (0..n).map(|mm| (((mm as f64 + 0.5) * dtau) / 2.0).exp()).collect();
        let conj = family.chart.conjugator().map(|g| (g, invert(&g)));
        GroupQuadrature { family, spec: QuadSpec { nodes_per_cell: n, ..spec }, dtau, daux, half_exp, conj }
    }

    /// Quadrature over the whole group without a partition (all nodes unassigned).
    pub fn for_chart(chart: &GroupChart, spec: QuadSpec) -> Self {
        let window = match chart.kind {
            ChartKind::Shearlet2d => IndexWindow::rect((0, -1), (0, -1)),
            _ => IndexWindow::scales(0, -1),
        };
        Self::new(WellSpreadFamily::new(chart.clone(), window), spec)
    }

    pub fn chart(&self) -> &GroupChart {
        &self.family.chart
    }

    pub fn n(&self) -> usize {
        self.spec.nodes_per_cell
    }

    /// Haar weight of every node.
    pub fn weight(&self) -> f64 {
        match self.chart().kind {
            ChartKind::Dyadic1d => self.dtau,
            _ => self.dtau * self.daux,
        }
    }

    pub fn params(&self, id: &NodeId) -> Params {
        Params::new(id.sign, (id.m as f64 + 0.5) * self.dtau, (id.l as f64 + 0.5) * self.daux)
    }

    pub fn point(&self, id: &NodeId) -> GroupPoint {
        self.chart().point(self.params(id))
    }

    /// The refined quadrature (twice the nodes per parameter).
    pub fn refined(&self) -> Self {
        GroupQuadrature::new(
            self.family.clone(),
            QuadSpec { nodes_per_cell: 2 * self.n(), tau_bounds: self.spec.tau_bounds },
        )
    }

    /// First window cell containing the node, if any.
    pub fn assign(&self, id: &NodeId) -> Option<Index> {
        let n = self.n() as i64;
        match self.chart().kind {
            ChartKind::Dyadic1d | ChartKind::Similitude2d => {
                let i = Index::scale(-id.m.div_euclid(n));
                self.family.in_window(&i).then_some(i)
            }
            ChartKind::Shearlet2d => {
                let j = id.m.div_euclid(n);
                let (k0, k1) = self.family.window.k_range(j)?;
                let e = self.half_exp[id.m.rem_euclid(n) as usize];
                let s = (id.l as f64 + 0.5) * self.daux;
                let k = (((s - 1.0) * e).floor() as i64 + 1).max(k0);
                (k <= k1 && (k as f64) <= s * e).then_some(Index::shear(j, k, id.sign))
            }
        }
    }

    /// First cell of the unbounded lattice containing the node.
    pub fn cell_unbounded(&self, id: &NodeId) -> Index {
        let n = self.n() as i64;
        match self.chart().kind {
            ChartKind::Dyadic1d | ChartKind::Similitude2d => Index::scale(-id.m.div_euclid(n)),
            ChartKind::Shearlet2d => {
                let j = id.m.div_euclid(n);
                let e = self.half_exp[id.m.rem_euclid(n) as usize];
                let s = (id.l as f64 + 0.5) * self.daux;
                Index::shear(j, ((s - 1.0) * e).floor() as i64 + 1, id.sign)
            }
        }
    }

    /// Node rows (m range) and sign of the lattice cell i.
    pub fn cell_rows(&self, i: &Index) -> ((i64, i64), Option<i8>) {
        let n = self.n() as i64;
        match self.chart().kind {
            ChartKind::Dyadic1d | ChartKind::Similitude2d => ((-i.k * n, -i.k * n + n - 1), None),
            ChartKind::Shearlet2d => ((i.j * n, i.j * n + n - 1), Some(i.sign)),
        }
    }

    /// All nodes assigned to window cell i.
    pub fn cell_nodes(&self, i: &Index) -> Vec<NodeId> {
        let ((m0, m1), sign) = self.cell_rows(i);
        let n = self.n() as i64;
        let mut out = Vec::new();
        for m in m0..=m1 {
            match self.chart().kind {
                ChartKind::Dyadic1d => {
                    for sg in [-1, 1] {
                        out.push(NodeId { sign: sg, m, l: 0 });
                    }
                }
                ChartKind::Similitude2d => {
                    for l in 0..n {
                        out.push(NodeId { sign: 1, m, l });
                    }
                }
                ChartKind::Shearlet2d => {
                    let e = self.half_exp[m.rem_euclid(n) as usize];
                    // cell s-range [k/e, k/e + 1), plus one row either side for the first-match test
                    let lo = ((i.k as f64 / e) / self.daux).floor() as i64 - 1;
                    let hi = (((i.k as f64 / e) + 1.0) / self.daux).ceil() as i64 + 1;
                    for l in lo..=hi {
                        let id = NodeId { sign: sign.unwrap(), m, l };
                        if self.assign(&id) == Some(*i) {
                            out.push(id);
                        }
                    }
                }
            }
        }
        out
    }

    /// Haar measure of the (disjointified) cell U_i.
    pub fn cell_measure(&self, i: &Index) -> f64 {
        self.cell_nodes(i).len() as f64 * self.weight()
    }

    /// Visits every node h (restricted to the rows `rows` and branch `sign` if given) for
    /// which h^T xi may lie in the ball B(c, r); the callback receives the node and h^T xi.
    pub fn visit<F: FnMut(NodeId, Vec2)>(
        &self,
        xi: &Vec2,
        c: &Vec2,
        r: f64,
        rows: Option<(i64, i64)>,
        sign: Option<i8>,
        mut f: F,
    ) -> Sweep {
        let mut sweep = Sweep::default();
        // move to the unconjugated chart: h'^T xi in B iff h^T (g^-T xi) in g^-T B
        let (xb, cb, rb) = match &self.conj {
            Some((_, gi)) => {
                let git = gi.transpose();
                (git * xi, git * c, r * crate::linalg::spectral_norm(&git, 2))
            }
            None => (*xi, *c, r),
        };
        let out = |y: Vec2| match &self.conj {
            Some((g, _)) => g.transpose() * y,
            None => y,
        };
        let n = self.n() as i64;
        let clamp = |lo: f64, hi: f64, sweep: &mut Sweep| -> Option<(i64, i64)> {
            let (mut lo, mut hi) = (lo, hi);
            if let Some((a, b)) = self.spec.tau_bounds {
                if lo < a {
                    sweep.clipped = true;
                    lo = a;
                }
                if hi > b {
                    sweep.clipped = true;
                    hi = b;
                }
            }
            if !lo.is_finite() || !hi.is_finite() {
                sweep.unbounded = true;
                return None;
            }
            let (mut m0, mut m1) = node_range(lo, hi, self.dtau);
            if let Some((a, b)) = rows {
                m0 = m0.max(a);
                m1 = m1.min(b);
            }
            (m0 <= m1).then_some((m0, m1))
        };
        match self.chart().kind {
            ChartKind::Dyadic1d => {
                for sg in [-1i8, 1] {
                    if sign.is_some_and(|s| s != sg) {
                        continue;
                    }
                    let t = sg as f64 * xb[0];
                    if t == 0.0 {
                        sweep.unbounded |= cb[0] - rb < 0.0 && 0.0 < cb[0] + rb;
                        continue;
                    }
                    let Some((lo, hi)) = log_ratio_range(t, cb[0] - rb, cb[0] + rb) else { continue };
                    let Some((m0, m1)) = clamp(lo, hi, &mut sweep) else { continue };
                    for m in m0..=m1 {
                        let a = ((m as f64 + 0.5) * self.dtau).exp();
                        f(NodeId { sign: sg, m, l: 0 }, out(Vec2::new(a * t, 0.0)));
                    }
                }
            }
            ChartKind::Similitude2d => {
                if sign.is_some_and(|s| s != 1) {
                    return sweep;
                }
                let rho_x = xb.norm();
                let cn = cb.norm();
                if rho_x == 0.0 {
                    sweep.unbounded |= cn < rb;
                    return sweep;
                }
                let Some((lo, hi)) = log_ratio_range(rho_x, cn - rb, cn + rb) else { return sweep };
                let Some((m0, m1)) = clamp(lo, hi, &mut sweep) else { return sweep };
                let phi_c = cb[1].atan2(cb[0]) - xb[1].atan2(xb[0]);
                for m in m0..=m1 {
                    let a = ((m as f64 + 0.5) * self.dtau).exp();
                    let rho = a * rho_x;
                    let (l0, l1) = if cn == 0.0 {
                        (0, n - 1)
                    } else {
                        let kappa = (rho * rho + cn * cn - rb * rb) / (2.0 * rho * cn);
                        if kappa >= 1.0 {
                            continue;
                        }
                        if kappa <= -1.0 {
                            (0, n - 1)
                        } else {
                            let d = kappa.acos();
                            let (l0, l1) = node_range(phi_c - d, phi_c + d, self.daux);
                            if l1 - l0 + 1 >= n {
                                (0, n - 1)
                            } else {
                                (l0, l1)
                            }
                        }
                    };
                    for l in l0..=l1 {
                        let lm = l.rem_euclid(n);
                        let phi = (lm as f64 + 0.5) * self.daux;
                        let (s, co) = phi.sin_cos();
                        let y = Vec2::new(co * xb[0] - s * xb[1], s * xb[0] + co * xb[1]) * a;
                        f(NodeId { sign: 1, m, l: lm }, out(y));
                    }
                }
            }
            ChartKind::Shearlet2d => {
                for sg in [-1i8, 1] {
                    if sign.is_some_and(|s| s != sg) {
                        continue;
                    }
                    let t = sg as f64 * xb[0];
                    if t == 0.0 {
                        sweep.unbounded |= cb[0] - rb < 0.0 && 0.0 < cb[0] + rb;
                        continue;
                    }
                    let Some((lo, hi)) = log_ratio_range(t, cb[0] - rb, cb[0] + rb) else { continue };
                    let Some((m0, m1)) = clamp(lo, hi, &mut sweep) else { continue };
                    for m in m0..=m1 {
                        let a = ((m as f64 + 0.5) * self.dtau).exp();
                        let y1 = a * t;
                        let hc2 = rb * rb - (y1 - cb[0]) * (y1 - cb[0]);
                        if hc2 <= 0.0 {
                            continue;
                        }
                        let hc = hc2.sqrt();
                        let b = sg as f64 * a.sqrt() * xb[1];
                        let (s0, s1) = if y1 > 0.0 {
                            ((cb[1] - hc - b) / y1, (cb[1] + hc - b) / y1)
                        } else {
                            ((cb[1] + hc - b) / y1, (cb[1] - hc - b) / y1)
                        };
                        let (l0, l1) = node_range(s0, s1, self.daux);
                        for l in l0..=l1 {
                            let s = (l as f64 + 0.5) * self.daux;
                            f(NodeId { sign: sg, m, l }, out(Vec2::new(y1, s * y1 + b)));
                        }
                    }
                }
            }
        }
        sweep
    }

    /// Extra support samples near the blind line xi_1 = 0 of a shearlet chart, at
    /// geometric distances down to the reach of the upper log-scale bound. Regular
    /// samples miss the large scales, which only see |xi_1| ~ e^-tau.
    pub fn blind_line_samples(&self, balls: &[(Vec2, f64)], per_radius: usize, inside: impl Fn(&Vec2) -> bool) -> Vec<Vec2> {
        let Some((_, b)) = self.spec.tau_bounds else { return vec![] };
        if self.chart().kind != ChartKind::Shearlet2d {
            return vec![];
        }
        // unconjugated frame: xi' = g^-T xi, back by xi = g^T xi'
        let (to, back) = match &self.conj {
            Some((g, gi)) => (gi.transpose(), g.transpose()),
            None => (Mat2::identity(), Mat2::identity()),
        };
        let stretch = crate::linalg::spectral_norm(&to, 2);
        let x_min = 0.1 * (-b).exp();
        let mut pts = Vec::new();
        for (c, r) in balls {
            let (cb, rb) = (to * c, r * stretch);
            let ny = 4 * per_radius as i64;
            let mut x = rb;
            while x > x_min {
                for sx in [-x, x] {
                    for k in -ny..=ny {
                        let xi = back * Vec2::new(sx, cb[1] + rb * k as f64 / ny as f64);
                        if inside(&xi) {
                            pts.push(xi);
                        }
                    }
                }
                x *= (-0.25f64).exp();
            }
        }
        pts
    }
}

/// Bounding ball of the window support.
pub fn support_ball(w: &AnalyticWindow) -> (Vec2, f64) {
    let (lo, hi) = w.bounding_box();
    let c = (lo + hi) / 2.0;
    let r = if w.dim == 1 { (hi[0] - lo[0]) / 2.0 } else { w.outer_radius() + (c - w.center()).norm() };
    (c, r * (1.0 + 1e-12))
}

/// int_H |psi_hat(h^T xi)|^2 dh by the quadrature, or an error if the truncation clips it.
pub fn calderon_at(window: &AnalyticWindow, quad: &GroupQuadrature, xi: &Vec2) -> Result<f64> {
    let (c, r) = support_ball(window);
    let mut acc = 0.0;
    let sweep = quad.visit(xi, &c, r, None, None, |_, y| {
        let v = window.eval(&y);
        acc += v * v;
    });
    if sweep.unbounded {
        return Err(Error::Clipped(format!(
            "log-scale parameter unbounded below at xi = ({:.4}, {:.4}); supply tau bounds",
            xi[0], xi[1]
        )));
    }
    if sweep.clipped && acc > 0.0 {
        let (a, b) = quad.spec.tau_bounds.unwrap_or((f64::NAN, f64::NAN));
        return Err(Error::Clipped(format!("log-scale range outside [{a:.3}, {b:.3}] at xi = ({:.4}, {:.4})", xi[0], xi[1])));
    }
    Ok(acc * quad.weight())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CalderonReport {
    pub value: f64,
    pub max_rel_deviation: f64,
    pub probes: usize,
}

/// Orbit probes h^T xi_0 for seeded random h with log-scale in [-2, 2].
pub fn orbit_probes(chart: &GroupChart, count: usize, seed: u64) -> Vec<Vec2> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let sign = if chart.has_sign_branch() && rng.gen_bool(0.5) { -1 } else { 1 };
            let aux = match chart.kind {
                ChartKind::Similitude2d => rng.gen_range(0.0..TAU),
                _ => rng.gen_range(-2.0..2.0),
            };
            let h = chart.point(Params::new(sign, rng.gen_range(-2.0..2.0), aux));
            h.dual(&chart.base_point())
        })
        .collect()
}

/// C_psi at the base point together with the relative spread over the probes.
pub fn calderon(window: &AnalyticWindow, chart: &GroupChart, spec: QuadSpec, probes: &[Vec2]) -> Result<CalderonReport> {
    let quad = GroupQuadrature::for_chart(chart, spec);
    let value = calderon_at(window, &quad, &chart.base_point())?;
    let vals = par::map(probes, |xi| calderon_at(window, &quad, xi));
    let mut dev: f64 = 0.0;
    for v in vals {
        let v = v?;
        if value > 0.0 {
            dev = dev.max((v - value).abs() / value);
        }
    }
    Ok(CalderonReport { value, max_rel_deviation: dev, probes: probes.len() })
}

/// Analytic superset of U^-T supp psi_hat for the family's generator cell.
pub fn base_set_for(window: &AnalyticWindow, family: &WellSpreadFamily) -> Result<BaseSet> {
    let (lo, hi) = window.bounding_box();
    let grow = 1e-9;
    match family.kind() {
        ChartKind::Dyadic1d => {
            if lo[0] <= 0.0 && hi[0] >= 0.0 {
                return Err(Error::TouchesBlindSpot { what: "window".into(), margin: 0.0 });
            }
            let (a, b) = (lo[0].abs().min(hi[0].abs()), lo[0].abs().max(hi[0].abs()));
            Ok(BaseSet::IntervalPair { lo: a / 2.0 * (1.0 - grow), hi: b * (1.0 + grow) })
        }
        ChartKind::Similitude2d => {
            let c = window.center().norm();
            let r = window.outer_radius();
            if c <= r {
                return Err(Error::TouchesBlindSpot { what: "window".into(), margin: c - r });
            }
            Ok(BaseSet::Annulus { lo: (c - r) / 2.0 * (1.0 - grow), hi: (c + r) * (1.0 + grow) })
        }
        ChartKind::Shearlet2d => {
            if family.chart.conjugator().is_some() {
                return Err(Error::Invalid("coverings are built on the unconjugated shearlet chart".into()));
            }
            if lo[0] <= 0.0 && hi[0] >= 0.0 {
                return Err(Error::TouchesBlindSpot { what: "window".into(), margin: 0.0 });
            }
            // xi = (y1 / a, (y2 - s y1) / sqrt a) with a in [1, 4), s in [0, 1)
            let x1 = [lo[0], hi[0], lo[0] / 4.0, hi[0] / 4.0];
            let mut n = Vec::new();
            for y1 in [lo[0], hi[0]] {
                for y2 in [lo[1], hi[1]] {
                    for s in [0.0, 1.0] {
                        let v = y2 - s * y1;
                        n.push(v);
                        n.push(v / 2.0);
                    }
                }
            }
            let mn = |v: &[f64]| v.iter().cloned().fold(f64::INFINITY, f64::min);
            let mx = |v: &[f64]| v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let pad = |a: f64, b: f64| {
                let w = (b - a) * grow + grow;
                (a - w, b + w)
            };
            let (a0, a1) = pad(mn(&x1), mx(&x1));
            let (b0, b1) = pad(mn(&n), mx(&n));
            Ok(BaseSet::Box { lo: [a0, b0], hi: [a1, b1] })
        }
    }
}

#[derive(Clone, Debug)]
pub struct BapuFamily {
    pub window: AnalyticWindow,
    pub quad: GroupQuadrature,
    pub c_psi: f64,
    pub covering: InducedCovering,
    ball: (Vec2, f64),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProbeRecord {
    pub xi: [f64; 2],
    pub sum: f64,
    pub worst_index: Option<Index>,
    pub deviation: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProbeReport {
    pub records: Vec<ProbeRecord>,
    pub max_deviation: f64,
    pub c_psi: f64,
    pub support_violations: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct L1Record {
    pub index: Index,
    pub norm: f64,
    pub bound: f64,
    pub cell_measure: f64,
    pub grid_n: usize,
}

impl BapuFamily {
    /// The family subordinate to `covering`; C_psi is taken at the chart's base point.
    pub fn build(window: &AnalyticWindow, covering: &InducedCovering, spec: QuadSpec) -> Result<Self> {
        if window.is_zero() {
            return Err(Error::Invalid("zero window has no partition of unity".into()));
        }
        let quad = GroupQuadrature::new(covering.family.clone(), spec);
        // the images u^-T supp psi_hat (u in U) must lie in Q
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (lo, hi) = window.bounding_box();
        for _ in 0..2000 {
            let y = Vec2::new(rng.gen_range(lo[0]..=hi[0]), if window.dim == 2 { rng.gen_range(lo[1]..=hi[1]) } else { 0.0 });
            if window.eval(&y) == 0.0 {
                continue;
            }
            let u = random_cell_point(&covering.family, &mut rng);
            let xi = u.dual_inv(&y);
            if !covering.q.contains(&xi) {
                return Err(Error::Invalid(format!(
                    "window support is not inside the base set: U^-T maps ({:.3}, {:.3}) to ({:.3}, {:.3})",
                    y[0], y[1], xi[0], xi[1]
                )));
            }
        }
        let c_psi = calderon_at(window, &GroupQuadrature::for_chart(&covering.family.chart, spec), &covering.family.chart.base_point())?;
        Ok(BapuFamily { window: window.clone(), quad, c_psi, covering: covering.clone(), ball: support_ball(window) })
    }

    pub fn chart(&self) -> &GroupChart {
        self.quad.chart()
    }

    pub fn family(&self) -> &WellSpreadFamily {
        &self.quad.family
    }

    /// phi_i(xi).
    pub fn phi(&self, i: &Index, xi: &Vec2) -> f64 {
        let (rows, sign) = self.quad.cell_rows(i);
        let mut acc = 0.0;
        self.quad.visit(xi, &self.ball.0, self.ball.1, Some(rows), sign, |id, y| {
            let v = self.window.eval(&y);
            if v != 0.0 && self.quad.assign(&id) == Some(*i) {
                acc += v * v;
            }
        });
        acc * self.quad.weight() / self.c_psi
    }

    /// All nonzero phi_i(xi), sorted by index, and whether xi is truncation-safe
    /// (every contributing node lies in a window cell).
    pub fn eval_all(&self, xi: &Vec2) -> (Vec<(Index, f64)>, bool) {
        let mut out: Vec<(Index, f64)> = Vec::new();
        let mut safe = true;
        let sweep = self.quad.visit(xi, &self.ball.0, self.ball.1, None, None, |id, y| {
            let v = self.window.eval(&y);
            if v == 0.0 {
                return;
            }
            match self.quad.assign(&id) {
                Some(i) => match out.iter_mut().find(|e| e.0 == i) {
                    Some(e) => e.1 += v * v,
                    None => out.push((i, v * v)),
                },
                None => safe = false,
            }
        });
        let s = self.quad.weight() / self.c_psi;
        for e in out.iter_mut() {
            e.1 *= s;
        }
        out.sort_by(|a, b| a.0.cmp(&b.0));
        (out, safe && !sweep.unbounded && !sweep.clipped)
    }

    /// Cells of the unbounded lattice carrying mass at xi but missing from the window.
    pub fn missing_indices(&self, xi: &Vec2) -> Vec<Index> {
        let mut out = Vec::new();
        self.quad.visit(xi, &self.ball.0, self.ball.1, None, None, |id, y| {
            if self.window.eval(&y) != 0.0 && self.quad.assign(&id).is_none() {
                let i = self.quad.cell_unbounded(&id);
                if !out.contains(&i) {
                    out.push(i);
                }
            }
        });
        out
    }

    pub fn sum(&self, xi: &Vec2) -> (f64, bool) {
        let (v, safe) = self.eval_all(xi);
        (v.iter().map(|e| e.1).sum(), safe)
    }

    /// Truncation-safe probe points drawn from the box [-x, x]^d with blind margin.
    pub fn safe_probes(&self, count: usize, half_width: f64, margin: f64, seed: u64) -> Vec<Vec2> {
        let region = crate::covering::FreqRegion { half_width, margin };
        let chart = self.chart();
        let mut out = Vec::with_capacity(count);
        let mut rng_seed = seed;
        let mut attempts = 0;
        while out.len() < count && attempts < 200 {
            for xi in region.samples(chart, 4 * count, rng_seed) {
                if out.len() >= count {
                    break;
                }
                if self.eval_all(&xi).1 {
                    out.push(xi);
                }
            }
            rng_seed = rng_seed.wrapping_add(1);
            attempts += 1;
        }
        out
    }

    /// Partition of unity, support and nonnegativity on the given probes.
    pub fn probe_report(&self, probes: &[Vec2]) -> ProbeReport {
        let rows = par::map(probes, |xi| {
            let (vals, _) = self.eval_all(xi);
            let sum: f64 = vals.iter().map(|e| e.1).sum();
            let worst = vals.iter().max_by(|a, b| a.1.partial_cmp(&b.1).unwrap()).map(|e| e.0);
            let violations = vals.iter().filter(|e| e.1 > 0.0 && !self.covering.member_contains(&e.0, xi)).count()
                + vals.iter().filter(|e| e.1 < 0.0).count();
            (ProbeRecord { xi: [xi[0], xi[1]], sum, worst_index: worst, deviation: (sum - 1.0).abs() }, violations)
        });
        let max_deviation = rows.iter().map(|r| r.0.deviation).fold(0.0, f64::max);
        let support_violations = rows.iter().map(|r| r.1).sum();
        ProbeReport { records: rows.into_iter().map(|r| r.0).collect(), max_deviation, c_psi: self.c_psi, support_violations }
    }

    /// ||F^-1 phi_i||_1 and the bound mu_H(U_i) ||F^-1 |psi_hat|^2||_1 / C_psi.
    pub fn l1_norm(&self, i: &Index, tol: f64) -> L1Record {
        let h = self.family().element(i);
        // pull back by h_i: Phi(y) = phi_i(h_i^-T y) has the same L1 norm and lives in Q
        let (center, half) = base_set_box(&self.covering.q, self.window.dim);
        let eval = |y: &Vec2| num_complex::Complex64::new(self.phi(i, &h.dual_inv(y)), 0.0);
        let nodes = self.quad.cell_nodes(i);
        let feature = self.window.inner_radius() * self.window.profile.feature_scale();
        let (norm, grid_n) = crate::transform::adaptive_inv_ft_norm(self.window.dim, center, half, feature, 1.0, tol, eval);
        let gamma = gamma_l1(&self.window, tol);
        let cell_measure = nodes.len() as f64 * self.quad.weight();
        L1Record { index: *i, norm, bound: cell_measure * gamma / self.c_psi, cell_measure, grid_n }
    }

    /// Indices with equal keys have the same pulled-back partition function
    /// phi_i(h_i^-T .) up to the reflection y -> -y. Nodes are aligned with the cells
    /// in log-scale and angle, so only the shear offset of a cell matters.
    pub fn pullback_class(&self, i: &Index) -> i64 {
        match self.chart().kind {
            ChartKind::Shearlet2d => i.k,
            _ => 0,
        }
    }

    /// `l1_norm` for every index of the window, computed once per pullback class.
    pub fn l1_norms(&self, tol: f64) -> Vec<L1Record> {
        let idx = self.family().indices();
        let mut reps: Vec<(i64, Index)> = Vec::new();
        for i in &idx {
            let c = self.pullback_class(i);
            if !reps.iter().any(|r| r.0 == c) {
                reps.push((c, *i));
            }
        }
        let recs = crate::par::map(&reps, |r| (r.0, self.l1_norm(&r.1, tol)));
        idx.iter()
            .map(|i| {
                let c = self.pullback_class(i);
                let r = &recs.iter().find(|r| r.0 == c).expect("class representative").1;
                let cell_measure = self.quad.cell_nodes(i).len() as f64 * self.quad.weight();
                L1Record { index: *i, bound: r.bound / r.cell_measure * cell_measure, cell_measure, ..r.clone() }
            })
            .collect()
    }
}

/// ||F^-1 (|psi_hat|^2)||_1 on an adapted grid.
pub fn gamma_l1(window: &AnalyticWindow, tol: f64) -> f64 {
    let (lo, hi) = window.bounding_box();
    let center = (lo + hi) / 2.0;
    let half = ((hi - lo) / 2.0).max() * 1.25;
    let feature = window.inner_radius() * window.profile.feature_scale();
    crate::transform::adaptive_inv_ft_norm(window.dim, center, half, feature, 1.0, tol, |y| {
        let v = window.eval(y);
        num_complex::Complex64::new(v * v, 0.0)
    })
    .0
}

fn base_set_box(q: &BaseSet, dim: usize) -> (Vec2, f64) {
    match q {
        BaseSet::IntervalPair { hi, .. } | BaseSet::Annulus { hi, .. } => (Vec2::zeros(), hi * 1.1),
        BaseSet::Box { lo, hi } => {
            let c = Vec2::new((lo[0] + hi[0]) / 2.0, (lo[1] + hi[1]) / 2.0);
            let h = ((hi[0] - lo[0]) / 2.0).max(if dim == 2 { (hi[1] - lo[1]) / 2.0 } else { 0.0 });
            (c, h * 1.1)
        }
        BaseSet::Interval { lo, hi } => (Vec2::new((lo + hi) / 2.0, 0.0), (hi - lo) / 2.0 * 1.1),
    }
}

fn random_cell_point(family: &WellSpreadFamily, rng: &mut impl Rng) -> GroupPoint {
    let t = rng.gen_range(0.0..family.tau_period());
    let sign = match family.kind() {
        ChartKind::Dyadic1d => {
            if rng.gen_bool(0.5) {
                -1
            } else {
                1
            }
        }
        _ => 1,
    };
    let aux = match family.kind() {
        ChartKind::Dyadic1d => 0.0,
        _ => rng.gen_range(0.0..family.aux_period()),
    };
    family.chart.point(Params::new(sign, t, aux))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::window::{AnalyticWindow, Profile};

    fn one_dim_window() -> AnalyticWindow {
        // bump on (1/2, 2)
        AnalyticWindow::new(1, Vec2::new(1.25, 0.0), Mat2::new(1.0 / 0.75, 0.0, 0.0, 1.0), 1.0, Profile::Bump)
    }

    #[test]
    fn l1_norm_depends_only_on_pullback_class() {
        let chart = GroupChart::new(ChartKind::Shearlet2d);
        let w = AnalyticWindow::ball(2, Vec2::new(3.0, 3.0), 0.5, Profile::Bump);
        let fam = WellSpreadFamily::new(chart, IndexWindow::rect((0, 1), (1, 2)));
        let q = base_set_for(&w, &fam).unwrap();
        let cov = InducedCovering::build(fam, q, None).unwrap();
        let b = BapuFamily::build(&w, &cov, QuadSpec::with_nodes(16)).unwrap();
        let at = |j, k, sign| b.l1_norm(&Index { j, k, sign }, 1e-3).norm;
        let (a, c) = (at(0, 1, 1), at(1, 1, -1));
        assert!((a - c).abs() < 1e-9 * a, "{a} vs {c}");
        assert_ne!(b.pullback_class(&Index { j: 0, k: 1, sign: 1 }), b.pullback_class(&Index { j: 0, k: 2, sign: 1 }));
    }

    #[test]
    fn zero_window_has_zero_calderon() {
        let chart = GroupChart::new(ChartKind::Shearlet2d);
        let w = AnalyticWindow::zero(2);
        let r = calderon(&w, &chart, QuadSpec::default(), &orbit_probes(&chart, 5, 1)).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn dyadic_calderon_matches_closed_form() {
        let chart = GroupChart::new(ChartKind::Dyadic1d);
        let w = one_dim_window();
        // int_0^inf |psi_hat(a)|^2 da / a (one sign contributes for xi of either sign)
        let oracle = quadrature::integrate(|a: f64| w.eval(&Vec2::new(a, 0.0)).powi(2) / a, 0.5, 2.0, 1e-13).integral;
        let probes = [0.5, 1.0, 3.0, -2.0].map(|x| Vec2::new(x, 0.0));
        let quad = GroupQuadrature::for_chart(&chart, QuadSpec::with_nodes(1024));
        for xi in probes {
            let c = calderon_at(&w, &quad, &xi).unwrap();
            assert!((c - oracle).abs() < 1e-6 * oracle, "{c} vs {oracle}");
        }
    }

    #[test]
    fn off_orbit_window_needs_bounds() {
        let chart = GroupChart::new(ChartKind::Shearlet2d);
        let w = AnalyticWindow::ball(2, Vec2::new(0.0, 3.0), 1.0, Profile::Bump);
        let quad = GroupQuadrature::for_chart(&chart, QuadSpec::default());
        assert!(matches!(calderon_at(&w, &quad, &Vec2::new(1.0, 3.0)), Err(Error::Clipped(_))));
        let bounded = GroupQuadrature::for_chart(&chart, QuadSpec { nodes_per_cell: 16, tau_bounds: Some((-1.0, 1.0)) });
        assert!(matches!(calderon_at(&w, &bounded, &Vec2::new(1.0, 3.0)), Err(Error::Clipped(_))));
    }

    #[test]
    fn shearlet_assignment_matches_cell_geometry() {
        let chart = GroupChart::new(ChartKind::Shearlet2d);
        let fam = WellSpreadFamily::new(chart.clone(), IndexWindow::rect((-2, 2), (-6, 6)));
        let quad = GroupQuadrature::new(fam.clone(), QuadSpec::with_nodes(8));
        for m in -16..16 {
            for l in -40..40 {
                let id = NodeId { sign: 1, m, l };
                let h = quad.point(&id);
                let all: Vec<Index> = fam.cells_containing(&h).into_iter().filter(|i| fam.in_window(i)).collect();
                assert_eq!(quad.assign(&id), all.first().copied(), "m={m} l={l}");
            }
        }
    }

    #[test]
    fn interior_cells_have_full_measure() {
        let chart = GroupChart::new(ChartKind::Similitude2d);
        let fam = WellSpreadFamily::new(chart, IndexWindow::scales(-3, 3));
        let quad = GroupQuadrature::new(fam.clone(), QuadSpec::with_nodes(16));
        assert!((quad.cell_measure(&Index::scale(1)) - fam.cell_measure()).abs() < 1e-12);
        let sh = WellSpreadFamily::new(GroupChart::new(ChartKind::Shearlet2d), IndexWindow::rect((-1, 1), (-4, 4)));
        let quad = GroupQuadrature::new(sh.clone(), QuadSpec::with_nodes(32));
        // first cell of a row absorbs the whole generator cell; its neighbours lose the overlap
        let first = quad.cell_measure(&Index::shear(0, -4, 1));
        assert!((first - sh.cell_measure()).abs() < 0.02);
        let total: f64 = (-4..=4).map(|k| quad.cell_measure(&Index::shear(0, k, 1))).sum();
        assert!(total > 0.0);
    }
}
