//! Well-spread families, induced frequency coverings Q_i = h_i^-T Q, the 1-D affine
//! covering, and cluster / structure certificates.
//!
//! Families are fixed lattices:
//! * dyadic1d and similitude2d: h_k = 2^-k, generator cell t in [0, ln 2) (all signs, all angles);
//! * shearlet2d: h_(j,k,e) = e D_(4^j) S_k = e [[4^j, k 4^j], [0, 2^j]], generator cell
//!   t in [0, ln 4), s in [0, 1), sign +1.

use std::f64::consts::{LN_2, TAU};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{ChartKind, GroupChart, GroupPoint, Params};
use crate::linalg::{invert, spectral_norm, Mat2, Vec2};
use crate::par;

/// Lattice index. One-parameter families use `k` only (j = 0, sign = 1).
/// The derived order (j, k, sign) is the disjointification order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Index {
    pub j: i64,
    pub k: i64,
    pub sign: i8,
}

impl Index {
    pub fn scale(k: i64) -> Self {
        Index { j: 0, k, sign: 1 }
    }

    pub fn shear(j: i64, k: i64, sign: i8) -> Self {
        Index { j, k, sign }
    }

    pub fn label(&self, kind: ChartKind) -> String {
        match kind {
            ChartKind::Shearlet2d => format!("j={} k={} e={}", self.j, self.k, self.sign),
            _ => format!("k={}", self.k),
        }
    }
}

/// Finite index window: j in [j_lo, j_lo + k_ranges.len()), and for each j a k range.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexWindow {
    pub j_lo: i64,
    pub k_ranges: Vec<(i64, i64)>,
}

impl IndexWindow {
    pub fn scales(k_lo: i64, k_hi: i64) -> Self {
        IndexWindow { j_lo: 0, k_ranges: vec![(k_lo, k_hi)] }
    }

    pub fn rect(j: (i64, i64), k: (i64, i64)) -> Self {
        IndexWindow { j_lo: j.0, k_ranges: vec![k; (j.1 - j.0 + 1).max(0) as usize] }
    }

    pub fn j_range(&self) -> (i64, i64) {
        (self.j_lo, self.j_lo + self.k_ranges.len() as i64 - 1)
    }

    pub fn k_range(&self, j: i64) -> Option<(i64, i64)> {
        let off = j - self.j_lo;
        if off < 0 {
            return None;
        }
        self.k_ranges.get(off as usize).copied().filter(|r| r.0 <= r.1)
    }

    /// The window grown by `layers` indices in every direction.
    pub fn grown(&self, layers: i64) -> Self {
        let mut k_ranges = Vec::new();
        let (j0, j1) = self.j_range();
        let grow_j = if self.k_ranges.len() == 1 && self.j_lo == 0 { 0 } else { layers };
        for j in (j0 - grow_j)..=(j1 + grow_j) {
            let r = self.k_range(j.clamp(j0, j1)).unwrap_or((0, -1));
            k_ranges.push((r.0 - layers, r.1 + layers));
        }
        IndexWindow { j_lo: j0 - grow_j, k_ranges }
    }

    /// Window with doubled index ranges about the same center.
    pub fn doubled(&self) -> Self {
        let (j0, j1) = self.j_range();
        let one_param = self.k_ranges.len() == 1 && self.j_lo == 0;
        let dj = if one_param { 0 } else { (j1 - j0 + 2) / 2 };
        let mut k_ranges = Vec::new();
        for j in (j0 - dj)..=(j1 + dj) {
            let r = self.k_range(j.clamp(j0, j1)).unwrap_or((0, -1));
            let dk = (r.1 - r.0 + 2) / 2;
            k_ranges.push((r.0 - dk, r.1 + dk));
        }
        IndexWindow { j_lo: j0 - dj, k_ranges }
    }
}

#[derive(Clone, Debug)]
pub struct WellSpreadFamily {
    pub chart: GroupChart,
    pub window: IndexWindow,
}

impl WellSpreadFamily {
    pub fn new(chart: GroupChart, window: IndexWindow) -> Self {
        WellSpreadFamily { chart, window }
    }

    pub fn kind(&self) -> ChartKind {
        self.chart.kind
    }

    /// Length of the generator cell in the log-scale parameter.
    pub fn tau_period(&self) -> f64 {
        match self.kind() {
            ChartKind::Shearlet2d => 2.0 * LN_2,
            _ => LN_2,
        }
    }

    /// Length of the generator cell in the auxiliary parameter.
    pub fn aux_period(&self) -> f64 {
        match self.kind() {
            ChartKind::Similitude2d => TAU,
            ChartKind::Shearlet2d => 1.0,
            ChartKind::Dyadic1d => 1.0,
        }
    }

    /// Haar measure of the generator cell U.
    pub fn cell_measure(&self) -> f64 {
        match self.kind() {
            ChartKind::Dyadic1d => 2.0 * LN_2,
            ChartKind::Similitude2d => LN_2 * TAU,
            ChartKind::Shearlet2d => 2.0 * LN_2,
        }
    }

    pub fn params_of(&self, i: &Index) -> Params {
        match self.kind() {
            ChartKind::Dyadic1d | ChartKind::Similitude2d => Params::new(1, -(i.k as f64) * LN_2, 0.0),
            ChartKind::Shearlet2d => Params::new(i.sign, 2.0 * i.j as f64 * LN_2, i.k as f64),
        }
    }

    pub fn element(&self, i: &Index) -> GroupPoint {
        self.chart.point(self.params_of(i))
    }

    pub fn indices(&self) -> Vec<Index> {
        let mut out = Vec::new();
        let (j0, j1) = self.window.j_range();
        for j in j0..=j1 {
            if let Some((k0, k1)) = self.window.k_range(j) {
                for k in k0..=k1 {
                    match self.kind() {
                        ChartKind::Shearlet2d => {
                            out.push(Index::shear(j, k, -1));
                            out.push(Index::shear(j, k, 1));
                        }
                        _ => out.push(Index::scale(k)),
                    }
                }
            }
        }
        out.sort();
        out
    }

    pub fn in_window(&self, i: &Index) -> bool {
        match self.window.k_range(i.j) {
            Some((k0, k1)) => i.k >= k0 && i.k <= k1,
            None => false,
        }
    }

    /// Whether the element with parameters p lies in the generator cell U.
    pub fn in_generator_cell(&self, p: &Params) -> bool {
        let t = p.log_scale;
        match self.kind() {
            ChartKind::Dyadic1d | ChartKind::Similitude2d => (0.0..LN_2).contains(&t),
            ChartKind::Shearlet2d => p.sign == 1 && (0.0..2.0 * LN_2).contains(&t) && (0.0..1.0).contains(&p.aux),
        }
    }

    /// Whether h lies in h_i U.
    pub fn cell_contains(&self, i: &Index, h: &GroupPoint) -> bool {
        let hi = self.element(i);
        let u = self.chart.mul(&self.chart.inv(&hi), h);
        self.in_generator_cell(&u.params)
    }

    /// The separating subcell V of U: cells h_i V are pairwise disjoint.
    pub fn in_separating_cell(&self, p: &Params) -> bool {
        match self.kind() {
            ChartKind::Shearlet2d => self.in_generator_cell(p) && p.aux < 0.5,
            _ => self.in_generator_cell(p),
        }
    }

    /// All indices (unbounded lattice, any window) whose cell contains h.
    pub fn cells_containing(&self, h: &GroupPoint) -> Vec<Index> {
        let t = h.params.log_scale;
        match self.kind() {
            ChartKind::Dyadic1d | ChartKind::Similitude2d => vec![Index::scale(-(t / LN_2).floor() as i64)],
            ChartKind::Shearlet2d => {
                let j = (t / (2.0 * LN_2)).floor() as i64;
                let tp = t - 2.0 * LN_2 * j as f64;
                let e = (tp / 2.0).exp();
                let s = h.params.aux;
                let k0 = ((s - 1.0) * e).floor() as i64 + 1;
                let k1 = (s * e).floor() as i64;
                (k0..=k1).map(|k| Index::shear(j, k, h.params.sign)).collect()
            }
        }
    }

    /// Indices whose induced set (for base set q) meets the region. Used to size windows.
    pub fn for_region(chart: GroupChart, q: &BaseSet, region: &FreqRegion) -> Result<Self> {
        let (lo, hi) = q.radial_bounds();
        match chart.kind {
            ChartKind::Dyadic1d | ChartKind::Similitude2d => {
                if chart.conjugator().is_some() {
                    return Err(Error::Invalid("region windows need an unconjugated radial chart".into()));
                }
                let rmin = region.margin;
                let rmax = region.half_width * (chart.dim() as f64).sqrt();
                // Q_k has radii (lo 2^k, hi 2^k)
                let k_lo = ((rmin / hi).log2()).floor() as i64;
                let k_hi = ((rmax / lo).log2()).ceil() as i64;
                Ok(WellSpreadFamily::new(chart, IndexWindow::scales(k_lo, k_hi)))
            }
            ChartKind::Shearlet2d => {
                let BaseSet::Box { lo: blo, hi: bhi } = q else {
                    return Err(Error::Invalid("shearlet coverings need a box base set".into()));
                };
                if chart.conjugator().is_some() {
                    return Err(Error::Invalid("region windows need the unconjugated shearlet chart".into()));
                }
                let x = region.half_width;
                // xi_1 = y_1 4^-j must reach [margin, x]
                let j_lo = ((blo[0] / x).log2() / 2.0).floor() as i64;
                let j_hi = ((bhi[0] / region.margin).log2() / 2.0).ceil() as i64;
                let mut k_ranges = Vec::new();
                for j in j_lo..=j_hi {
                    // xi_2 = (y_2 - k y_1) 2^-j with |xi_2| <= x
                    let span = x * 2f64.powi(j as i32);
                    let cands = [
                        (blo[1] - span) / blo[0],
                        (blo[1] - span) / bhi[0],
                        (bhi[1] + span) / blo[0],
                        (bhi[1] + span) / bhi[0],
                    ];
                    let kmin = cands.iter().cloned().fold(f64::INFINITY, f64::min).floor() as i64;
                    let kmax = cands.iter().cloned().fold(f64::NEG_INFINITY, f64::max).ceil() as i64;
                    k_ranges.push((kmin, kmax));
                }
                Ok(WellSpreadFamily::new(chart, IndexWindow { j_lo, k_ranges }))
            }
        }
    }
}

/// Analytic base sets in frequency space (all open).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum BaseSet {
    /// lo < |xi_1| < hi
    IntervalPair { lo: f64, hi: f64 },
    /// lo < |xi| < hi
    Annulus { lo: f64, hi: f64 },
    /// lo < xi < hi componentwise
    Box { lo: [f64; 2], hi: [f64; 2] },
    /// lo < xi_1 < hi (one-sided interval, for affine coverings)
    Interval { lo: f64, hi: f64 },
}

impl BaseSet {
    pub fn contains(&self, y: &Vec2) -> bool {
        match *self {
            BaseSet::IntervalPair { lo, hi } => lo < y[0].abs() && y[0].abs() < hi,
            BaseSet::Annulus { lo, hi } => {
                let r = y.norm();
                lo < r && r < hi
            }
            BaseSet::Box { lo, hi } => lo[0] < y[0] && y[0] < hi[0] && lo[1] < y[1] && y[1] < hi[1],
            BaseSet::Interval { lo, hi } => lo < y[0] && y[0] < hi,
        }
    }

    fn radial_bounds(&self) -> (f64, f64) {
        match *self {
            BaseSet::IntervalPair { lo, hi } | BaseSet::Annulus { lo, hi } => (lo, hi),
            BaseSet::Box { lo, hi } => (lo[0].abs().min(hi[0].abs()), Vec2::new(hi[0], hi[1]).norm()),
            BaseSet::Interval { lo, hi } => (lo.abs(), hi.abs()),
        }
    }

    /// Distance of the closure to the chart's blind spot (negative if it meets it).
    pub fn blind_margin(&self, chart: &GroupChart) -> f64 {
        use crate::group::BlindSpot;
        match (self, chart.blind_spot()) {
            (BaseSet::IntervalPair { lo, .. }, _) | (BaseSet::Annulus { lo, .. }, _) => *lo,
            (BaseSet::Box { lo, hi }, BlindSpot::Line(n)) => {
                let n = n / n.norm();
                let corners = box_corners(lo, hi);
                let v: Vec<f64> = corners.iter().map(|c| n.dot(c)).collect();
                let (a, b) = (v.iter().cloned().fold(f64::INFINITY, f64::min), v.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
                if a > 0.0 {
                    a
                } else if b < 0.0 {
                    -b
                } else {
                    a.max(-b)
                }
            }
            (BaseSet::Box { lo, hi }, BlindSpot::Origin) => {
                let nearest = Vec2::new(0.0f64.clamp(lo[0], hi[0]), 0.0f64.clamp(lo[1], hi[1]));
                if nearest.norm() == 0.0 {
                    -1.0
                } else {
                    nearest.norm()
                }
            }
            (BaseSet::Interval { lo, hi }, _) => {
                if *lo >= 0.0 {
                    *lo
                } else if *hi <= 0.0 {
                    -hi
                } else {
                    -1.0
                }
            }
        }
    }

    /// Uniform sample of the set.
    pub fn sample(&self, rng: &mut impl Rng) -> Vec2 {
        match *self {
            BaseSet::IntervalPair { lo, hi } => {
                let r = rng.gen_range(lo..hi);
                Vec2::new(if rng.gen_bool(0.5) { r } else { -r }, 0.0)
            }
            BaseSet::Annulus { lo, hi } => {
                let r = (rng.gen_range(lo * lo..hi * hi)).sqrt();
                let t = rng.gen_range(0.0..TAU);
                Vec2::new(r * t.cos(), r * t.sin())
            }
            BaseSet::Box { lo, hi } => Vec2::new(rng.gen_range(lo[0]..hi[0]), rng.gen_range(lo[1]..hi[1])),
            BaseSet::Interval { lo, hi } => Vec2::new(rng.gen_range(lo..hi), 0.0),
        }
    }

    /// Whether the closure of self lies in the open set other (sampled on the boundary).
    pub fn compactly_inside(&self, other: &BaseSet) -> bool {
        match (self, other) {
            (BaseSet::IntervalPair { lo: a, hi: b }, BaseSet::IntervalPair { lo: c, hi: d })
            | (BaseSet::Annulus { lo: a, hi: b }, BaseSet::Annulus { lo: c, hi: d })
            | (BaseSet::Interval { lo: a, hi: b }, BaseSet::Interval { lo: c, hi: d }) => c < a && b < d,
            (BaseSet::Box { lo: a, hi: b }, BaseSet::Box { lo: c, hi: d }) => {
                c[0] < a[0] && c[1] < a[1] && b[0] < d[0] && b[1] < d[1]
            }
            _ => false,
        }
    }
}

fn box_corners(lo: &[f64; 2], hi: &[f64; 2]) -> [Vec2; 4] {
    [
        Vec2::new(lo[0], lo[1]),
        Vec2::new(hi[0], lo[1]),
        Vec2::new(hi[0], hi[1]),
        Vec2::new(lo[0], hi[1]),
    ]
}

/// Frequency region used for window sizing and coverage checks:
/// the box [-half_width, half_width]^d minus the margin-neighborhood of the blind spot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FreqRegion {
    pub half_width: f64,
    pub margin: f64,
}

impl FreqRegion {
    pub fn contains(&self, chart: &GroupChart, xi: &Vec2) -> bool {
        (0..chart.dim()).all(|a| xi[a].abs() <= self.half_width) && chart.blind_distance(xi) >= self.margin
    }

    pub fn samples(&self, chart: &GroupChart, count: usize, seed: u64) -> Vec<Vec2> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(count);
        let x = self.half_width;
        while out.len() < count {
            let xi = if chart.dim() == 1 {
                Vec2::new(rng.gen_range(-x..x), 0.0)
            } else {
                Vec2::new(rng.gen_range(-x..x), rng.gen_range(-x..x))
            };
            if self.contains(chart, &xi) {
                out.push(xi);
            }
        }
        out
    }
}

/// Geometric shape of one covering member, for exact intersection tests.
#[derive(Clone, Debug, PartialEq)]
pub enum Tile {
    /// {lo < |xi| < hi}, one- or two-dimensional
    Radial { lo: f64, hi: f64 },
    /// open convex polygon (counterclockwise or clockwise vertices)
    Polygon(Vec<Vec2>),
    /// {lo < xi_1 < hi}
    Interval { lo: f64, hi: f64 },
    /// no closed form: decided by sampling
    Opaque,
}

impl Tile {
    pub fn intersects(&self, other: &Tile) -> Option<bool> {
        match (self, other) {
            (Tile::Radial { lo: a, hi: b }, Tile::Radial { lo: c, hi: d })
            | (Tile::Interval { lo: a, hi: b }, Tile::Interval { lo: c, hi: d }) => {
                // open sets: touching endpoints (up to rounding of exp) do not meet
                let (lo, hi) = (a.max(*c), b.min(*d));
                Some(hi - lo > 1e-12 * (hi.abs() + lo.abs()))
            }
            (Tile::Polygon(p), Tile::Polygon(q)) => Some(polygons_overlap(p, q)),
            _ => None,
        }
    }

    pub fn contains(&self, xi: &Vec2) -> Option<bool> {
        match self {
            Tile::Radial { lo, hi } => {
                let r = xi.norm();
                Some(*lo < r && r < *hi)
            }
            Tile::Interval { lo, hi } => Some(*lo < xi[0] && xi[0] < *hi),
            Tile::Polygon(p) => Some(point_in_convex(p, xi)),
            Tile::Opaque => None,
        }
    }
}

fn point_in_convex(p: &[Vec2], x: &Vec2) -> bool {
    let n = p.len();
    let mut sign = 0.0;
    for i in 0..n {
        let a = p[i];
        let b = p[(i + 1) % n];
        let cr = (b - a).perp(&(x - a));
        if cr == 0.0 {
            return false;
        }
        if sign == 0.0 {
            sign = cr.signum();
        } else if cr.signum() != sign {
            return false;
        }
    }
    true
}

/// Separating-axis test for open convex polygons: true iff the interiors overlap.
fn polygons_overlap(p: &[Vec2], q: &[Vec2]) -> bool {
    let scale = p.iter().chain(q.iter()).map(|v| v.norm()).fold(0.0, f64::max).max(1.0);
    let tol = 1e-12 * scale;
    for poly in [p, q] {
        let n = poly.len();
        for i in 0..n {
            let e = poly[(i + 1) % n] - poly[i];
            let axis = Vec2::new(-e[1], e[0]);
            let proj = |s: &[Vec2]| {
                s.iter().map(|v| axis.dot(v)).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)))
            };
            let (a0, a1) = proj(p);
            let (b0, b1) = proj(q);
            let al = axis.norm();
            if a1.min(b1) - a0.max(b0) <= tol * al {
                return false;
            }
        }
    }
    true
}

#[derive(Clone, Debug)]
pub struct InducedCovering {
    pub family: WellSpreadFamily,
    pub q: BaseSet,
}

impl InducedCovering {
    /// Builds the covering, checking the base set against the blind spot and, if a
    /// region is given, that sampled region points are covered by the window.
    pub fn build(family: WellSpreadFamily, q: BaseSet, region: Option<&FreqRegion>) -> Result<Self> {
        let margin = q.blind_margin(&family.chart);
        if margin <= 0.0 {
            return Err(Error::TouchesBlindSpot { what: "base set Q".into(), margin });
        }
        let cov = InducedCovering { family, q };
        if let Some(r) = region {
            for xi in r.samples(&cov.family.chart, 4096, 17) {
                if cov.members_containing(&xi).is_empty() {
                    return Err(Error::Uncovered([xi[0], xi[1]]));
                }
            }
        }
        Ok(cov)
    }

    pub fn chart(&self) -> &GroupChart {
        &self.family.chart
    }

    /// xi in Q_i iff h_i^T xi in Q.
    pub fn member_contains(&self, i: &Index, xi: &Vec2) -> bool {
        self.q.contains(&self.family.element(i).dual(xi))
    }

    pub fn members_containing(&self, xi: &Vec2) -> Vec<Index> {
        self.family.indices().into_iter().filter(|i| self.member_contains(i, xi)).collect()
    }

    /// Exact geometric description of Q_i when available.
    pub fn tile(&self, i: &Index) -> Tile {
        let h = self.family.element(i);
        let hit = invert(&h.matrix).transpose();
        let similarity = {
            let (n, m) = (h.norm(), h.inv_norm());
            (n * m - 1.0).abs() < 1e-12
        };
        match &self.q {
            BaseSet::IntervalPair { lo, hi } | BaseSet::Annulus { lo, hi } if similarity => {
                let r = 1.0 / h.norm();
                Tile::Radial { lo: lo * r, hi: hi * r }
            }
            BaseSet::Box { lo, hi } => Tile::Polygon(box_corners(lo, hi).iter().map(|c| hit * c).collect()),
            BaseSet::Interval { lo, hi } if h.dim() == 1 => {
                let a = hit[(0, 0)];
                Tile::Interval { lo: (lo * a).min(hi * a), hi: (lo * a).max(hi * a) }
            }
            _ => Tile::Opaque,
        }
    }

    /// T_i = h_i^-T.
    pub fn transform(&self, i: &Index) -> Mat2 {
        invert(&self.family.element(i).matrix).transpose()
    }

    /// Monte-Carlo test: does any of `samples` points drawn uniformly from Q_i land in Q_j?
    pub fn sampled_intersection(&self, i: &Index, j: &Index, samples: usize, seed: u64) -> bool {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = self.family.element(i);
        (0..samples).any(|_| {
            let y = self.q.sample(&mut rng);
            self.member_contains(j, &h.dual_inv(&y))
        })
    }
}

/// General affine covering Q_i = T_i Q + b_i (one-dimensional here).
#[derive(Clone, Debug)]
pub struct AffineCovering {
    pub indices: Vec<i64>,
    pub scale: Vec<f64>,
    pub offset: Vec<f64>,
    pub q: BaseSet,
    pub p: BaseSet,
}

impl AffineCovering {
    /// Integer translates: T_i = 1, b_i = i over [lo, hi].
    pub fn translates(lo: i64, hi: i64, q: BaseSet, p: BaseSet) -> Result<Self> {
        if !p.compactly_inside(&q) {
            return Err(Error::Invalid("the closure of P must lie inside Q".into()));
        }
        let indices: Vec<i64> = (lo..=hi).collect();
        Ok(AffineCovering {
            scale: vec![1.0; indices.len()],
            offset: indices.iter().map(|&i| i as f64).collect(),
            indices,
            q,
            p,
        })
    }

    pub fn tile(&self, pos: usize, set: &BaseSet) -> Tile {
        let (t, b) = (self.scale[pos], self.offset[pos]);
        match *set {
            BaseSet::Interval { lo, hi } => Tile::Interval { lo: (t * lo).min(t * hi) + b, hi: (t * lo).max(t * hi) + b },
            _ => Tile::Opaque,
        }
    }

    pub fn contains(&self, pos: usize, x: f64) -> bool {
        self.q.contains(&Vec2::new((x - self.offset[pos]) / self.scale[pos], 0.0))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum IntersectionMethod {
    Exact,
    /// decided by point sampling; reported as approximate
    Sampled,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClusterTable {
    pub labels: Vec<String>,
    pub neighbors: Vec<Vec<usize>>,
    /// per index: max ||T_i^-1 T_j|| over its cluster
    pub structure: Vec<f64>,
    pub max_cluster: usize,
    pub max_structure: f64,
    pub method: IntersectionMethod,
}

impl ClusterTable {
    fn from_pairs(labels: Vec<String>, tiles: &[Tile], mats: &[Mat2], dim: usize, sampled: impl Fn(usize, usize) -> bool + Sync) -> Self {
        let n = tiles.len();
        let exact = tiles.iter().all(|t| *t != Tile::Opaque);
        let rows: Vec<(Vec<usize>, f64)> = par::map_range(n, |a| {
            let mut nb = Vec::new();
            let mut worst: f64 = 0.0;
            let ta_inv = invert(&mats[a]);
            for b in 0..n {
                let hit = if a == b {
                    true
                } else {
                    match tiles[a].intersects(&tiles[b]) {
                        Some(x) => x,
                        None => sampled(a, b) || sampled(b, a),
                    }
                };
                if hit {
                    nb.push(b);
                    worst = worst.max(spectral_norm(&(ta_inv * mats[b]), dim));
                }
            }
            (nb, worst)
        });
        let max_cluster = rows.iter().map(|r| r.0.len()).max().unwrap_or(0);
        let max_structure = rows.iter().map(|r| r.1).fold(0.0, f64::max);
        let (neighbors, structure) = rows.into_iter().unzip();
        ClusterTable {
            labels,
            neighbors,
            structure,
            max_cluster,
            max_structure,
            method: if exact { IntersectionMethod::Exact } else { IntersectionMethod::Sampled },
        }
    }

    pub fn is_symmetric(&self) -> bool {
        self.neighbors
            .iter()
            .enumerate()
            .all(|(a, nb)| nb.contains(&a) && nb.iter().all(|&b| self.neighbors[b].contains(&a)))
    }
}

/// Cluster table of the induced covering over its window.
pub fn clusters(cov: &InducedCovering) -> ClusterTable {
    let idx = cov.family.indices();
    let tiles: Vec<Tile> = idx.iter().map(|i| cov.tile(i)).collect();
    let mats: Vec<Mat2> = idx.iter().map(|i| cov.transform(i)).collect();
    let labels = idx.iter().map(|i| i.label(cov.family.kind())).collect();
    ClusterTable::from_pairs(labels, &tiles, &mats, cov.chart().dim(), |a, b| {
        cov.sampled_intersection(&idx[a], &idx[b], 4096, (a * 7919 + b) as u64)
    })
}

pub fn affine_clusters(cov: &AffineCovering) -> ClusterTable {
    let tiles: Vec<Tile> = (0..cov.indices.len()).map(|p| cov.tile(p, &cov.q)).collect();
    let mats: Vec<Mat2> = cov.scale.iter().map(|&t| crate::linalg::embed1(t)).collect();
    let labels = cov.indices.iter().map(|i| format!("i={i}")).collect();
    ClusterTable::from_pairs(labels, &tiles, &mats, 1, |_, _| false)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StructureCertificate {
    pub is_structured: bool,
    /// max ||T_i^-1 T_j|| over intersecting pairs
    pub c: f64,
    /// max cluster size
    pub n0: usize,
    pub method: IntersectionMethod,
    pub uncovered: Option<[f64; 2]>,
}

/// Checks the structured-admissibility conditions over the window: P compactly in Q,
/// both the Q- and P-coverings cover the sampled region, clusters are bounded.
pub fn structured_check(cov: &InducedCovering, p: &BaseSet, region: Option<&FreqRegion>) -> StructureCertificate {
    let table = clusters(cov);
    let mut ok = p.compactly_inside(&cov.q);
    let mut uncovered = None;
    if let Some(r) = region {
        let pcov = InducedCovering { family: cov.family.clone(), q: p.clone() };
        for xi in r.samples(cov.chart(), 4096, 23) {
            if pcov.members_containing(&xi).is_empty() || cov.members_containing(&xi).is_empty() {
                ok = false;
                uncovered = Some([xi[0], xi[1]]);
                break;
            }
        }
    }
    StructureCertificate {
        is_structured: ok && table.max_cluster < usize::MAX,
        c: table.max_structure,
        n0: table.max_cluster,
        method: table.method,
        uncovered,
    }
}
