//! Decomposition norms ||(u_i ||F^-1(phi_i f_hat)||_p)_i||_{l^q}.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bapu::BapuFamily;
use crate::covering::Index;
use crate::decomp::grid::{lp_norm_samples, pow2_at_least, Domain, FrequencyGrid, SampledSignal};
use crate::decomp::signal::BandlimitedSignal;
use crate::error::{Error, Result};
use crate::linalg::Vec2;
use crate::par;
use crate::weights::DiscretizedWeight;

/// A family of functions phi_i that can be evaluated all at once.
pub trait Partition: Sync {
    /// Nonzero phi_i(xi) sorted by index, and whether every contributing index lies in
    /// the finite window.
    fn eval_all(&self, xi: &Vec2) -> (Vec<(Index, f64)>, bool);

    /// Indices outside the window carrying mass at xi.
    fn missing(&self, xi: &Vec2) -> Vec<Index>;

    fn label(&self, i: &Index) -> String;
}

impl Partition for BapuFamily {
    fn eval_all(&self, xi: &Vec2) -> (Vec<(Index, f64)>, bool) {
        BapuFamily::eval_all(self, xi)
    }

    fn missing(&self, xi: &Vec2) -> Vec<Index> {
        self.missing_indices(xi)
    }

    fn label(&self, i: &Index) -> String {
        i.label(self.chart().kind)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Piece {
    pub index: Index,
    pub label: String,
    pub weight: f64,
    pub lp_norm: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NormReport {
    pub value: f64,
    pub p: f64,
    pub q: f64,
    pub pieces: Vec<Piece>,
    pub grid_n: usize,
    pub grid_extent: f64,
    pub grid_center: [f64; 2],
    /// frequency samples where f_hat was nonzero
    pub support_samples: usize,
}

impl NormReport {
    /// The l^q aggregate recomputed from the pieces.
    pub fn aggregate(pieces: &[Piece], q: f64) -> f64 {
        let terms = pieces.iter().map(|pc| pc.weight * pc.lp_norm);
        if q.is_infinite() {
            return terms.fold(0.0, f64::max);
        }
        terms.map(|t| t.powf(q)).sum::<f64>().powf(1.0 / q)
    }
}

/// Default grid: box around supp f_hat with 25% margin, N = 1024 (1-D) or 512 (2-D).
pub fn default_grid(f: &BandlimitedSignal) -> Result<FrequencyGrid> {
    let (lo, hi) = f.bounding_box().ok_or_else(|| Error::Invalid("zero signal has no support box".into()))?;
    let c = (lo + hi) / 2.0;
    let half = if f.dim == 1 { (hi[0] - lo[0]) / 2.0 } else { ((hi - lo) / 2.0).max() };
    FrequencyGrid::centered(f.dim, if f.dim == 1 { 1024 } else { 512 }, half * 1.25, c)
}

/// Grid whose spatial extent holds the decay of F^-1 f to about `decay` feature lengths.
pub fn decay_grid(f: &BandlimitedSignal, decay: f64, n_max: usize) -> Result<FrequencyGrid> {
    let g = default_grid(f)?;
    let feature = f
        .atoms
        .iter()
        .filter(|a| !a.window.is_zero())
        .map(|a| a.window.inner_radius() * a.window.profile.feature_scale())
        .fold(f64::INFINITY, f64::min);
    let shift = f.atoms.iter().map(|a| a.shift().norm()).fold(0.0, f64::max);
    let half_x = shift + decay / feature;
    // spatial half width is N / (4 extent)
    let n = pow2_at_least(4.0 * g.extent * half_x, g.n, n_max);
    FrequencyGrid::centered(f.dim, n, g.extent, Vec2::new(g.center[0], g.center[1]))
}

fn check_support(f: &BandlimitedSignal, grid: &FrequencyGrid) -> Result<()> {
    if let Some((lo, hi)) = f.bounding_box() {
        let inside = (0..f.dim).all(|a| {
            lo[a] >= grid.center[a] - grid.extent && hi[a] < grid.center[a] + grid.extent
        });
        if !inside {
            return Err(Error::SupportOutsideBox(format!(
                "supp f_hat spans [{:.3}, {:.3}] x [{:.3}, {:.3}], grid half-width {:.3}",
                lo[0], hi[0], lo[1], hi[1], grid.extent
            )));
        }
    }
    Ok(())
}

/// phi_i f_hat for every index meeting supp f_hat, as sparse frequency samples.
fn scatter<P: Partition>(f_hat: &SampledSignal, bapu: &P) -> Result<(BTreeMap<Index, Vec<(usize, Complex64)>>, usize)> {
    let grid = &f_hat.grid;
    let support: Vec<usize> = (0..grid.len()).filter(|&k| f_hat.data[k] != Complex64::new(0.0, 0.0)).collect();
    let evals = par::map(&support, |&k| bapu.eval_all(&grid.freq(k)));
    let unsafe_pts: Vec<usize> = support.iter().zip(&evals).filter(|(_, e)| !e.1).map(|(k, _)| *k).collect();
    if !unsafe_pts.is_empty() {
        let mut missed: Vec<Index> = Vec::new();
        for k in unsafe_pts.iter().step_by((unsafe_pts.len() / 64).max(1)) {
            for i in bapu.missing(&grid.freq(*k)) {
                if !missed.contains(&i) {
                    missed.push(i);
                }
            }
        }
        missed.sort();
        let mut labels: Vec<String> = missed.iter().map(|i| bapu.label(i)).collect();
        if labels.is_empty() {
            labels.push("unbounded parameter range (support touches the blind spot)".into());
        }
        return Err(Error::WindowTooSmall(labels));
    }
    let mut pieces: BTreeMap<Index, Vec<(usize, Complex64)>> = BTreeMap::new();
    for (k, (vals, _)) in support.iter().zip(evals) {
        for (i, phi) in vals {
            pieces.entry(i).or_default().push((*k, f_hat.data[*k] * phi));
        }
    }
    Ok((pieces, support.len()))
}

/// The localized pieces F^-1(phi_i f_hat) on the grid (spatial domain), sorted by index.
pub fn localize<P: Partition>(f: &BandlimitedSignal, bapu: &P, grid: &FrequencyGrid) -> Result<Vec<(Index, SampledSignal)>> {
    check_support(f, grid)?;
    let (pieces, _) = scatter(&f.sample(grid), bapu)?;
    Ok(pieces
        .into_iter()
        .map(|(i, entries)| {
            let mut s = SampledSignal::zeros(grid.clone(), Domain::Frequency);
            for (k, v) in entries {
                s.data[k] = v;
            }
            (i, s.to_spatial())
        })
        .collect())
}

/// F^-1(phi f_hat) for a single multiplier given pointwise.
pub fn localize_with(f_hat: &SampledSignal, phi: impl Fn(&Vec2) -> f64 + Sync) -> SampledSignal {
    let grid = &f_hat.grid;
    let data = par::map_range(grid.len(), |k| {
        let v = f_hat.data[k];
        if v == Complex64::new(0.0, 0.0) {
            v
        } else {
            v * phi(&grid.freq(k))
        }
    });
    SampledSignal::new(grid.clone(), data, Domain::Frequency).to_spatial()
}

/// The decomposition norm of f with weights u. The grid defaults to `default_grid`.
pub fn decomp_norm<P: Partition>(
    f: &BandlimitedSignal,
    bapu: &P,
    u: &DiscretizedWeight,
    p: f64,
    q: f64,
    grid: Option<&FrequencyGrid>,
) -> Result<NormReport> {
    if !(p >= 1.0 && q >= 1.0) {
        return Err(Error::Invalid(format!("exponents must satisfy p, q >= 1 (got p = {p}, q = {q})")));
    }
    if f.is_zero() {
        return Ok(NormReport {
            value: 0.0,
            p,
            q,
            pieces: vec![],
            grid_n: grid.map_or(0, |g| g.n),
            grid_extent: grid.map_or(0.0, |g| g.extent),
            grid_center: grid.map_or([0.0; 2], |g| g.center),
            support_samples: 0,
        });
    }
    let grid = match grid {
        Some(g) => g.clone(),
        None => default_grid(f)?,
    };
    check_support(f, &grid)?;
    let (pieces, support_samples) = scatter(&f.sample(&grid), bapu)?;
    let entries: Vec<(Index, Vec<(usize, Complex64)>)> = pieces.into_iter().collect();
    for (i, _) in &entries {
        if u.get(i).is_none() {
            return Err(Error::Invalid(format!("no weight for index {}", bapu.label(i))));
        }
    }
    let norms = par::map(&entries, |(_, e)| {
        let mut s = SampledSignal::zeros(grid.clone(), Domain::Frequency);
        for &(k, v) in e {
            s.data[k] = v;
        }
        let x = s.to_spatial();
        lp_norm_samples(&x.data, grid.dx_vol(), p)
    });
    let pieces: Vec<Piece> = entries
        .iter()
        .zip(norms)
        .map(|((i, _), n)| Piece { index: *i, label: bapu.label(i), weight: u.get(i).unwrap(), lp_norm: n })
        .collect();
    Ok(NormReport {
        value: NormReport::aggregate(&pieces, q),
        p,
        q,
        pieces,
        grid_n: grid.n,
        grid_extent: grid.extent,
        grid_center: grid.center,
        support_samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bapu::{base_set_for, QuadSpec};
    use crate::covering::{InducedCovering, WellSpreadFamily};
    use crate::group::{ChartKind, GroupChart};
    use crate::weights::{discretize, WeightSpec};
    use crate::window::{default_window, AnalyticWindow, Profile};

    fn dyadic_setup() -> (BapuFamily, DiscretizedWeight) {
        let chart = GroupChart::new(ChartKind::Dyadic1d);
        let w = default_window(&chart);
        let fam = WellSpreadFamily::new(chart.clone(), crate::covering::IndexWindow::scales(-6, 6));
        let q = base_set_for(&w, &fam).unwrap();
        let cov = InducedCovering::build(fam, q, None).unwrap();
        let bapu = BapuFamily::build(&w, &cov, QuadSpec::default()).unwrap();
        let u = discretize(&WeightSpec::one(), &cov, 2.0).unwrap();
        (bapu, u)
    }

    #[test]
    fn zero_signal_has_zero_norm() {
        let (bapu, u) = dyadic_setup();
        let r = decomp_norm(&BandlimitedSignal::zero(1), &bapu, &u, 2.0, 2.0, None).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn homogeneity_and_aggregate() {
        let (bapu, u) = dyadic_setup();
        let w = AnalyticWindow::ball(1, Vec2::new(1.7, 0.0), 0.4, Profile::Bump);
        let f = BandlimitedSignal::from_window(&w);
        let g = default_grid(&f).unwrap();
        let a = decomp_norm(&f, &bapu, &u, 1.0, 2.0, Some(&g)).unwrap();
        let b = decomp_norm(&f.scaled(Complex64::new(0.0, -3.0)), &bapu, &u, 1.0, 2.0, Some(&g)).unwrap();
        assert!((b.value - 3.0 * a.value).abs() < 1e-12 * b.value);
        assert!((NormReport::aggregate(&a.pieces, 2.0) - a.value).abs() < 1e-15);
        assert!(a.pieces.windows(2).all(|w| w[0].index < w[1].index));
    }

    #[test]
    fn l2_pieces_sum_below_f() {
        // sum phi_i = 1 and 0 <= phi_i <= 1 give sum ||phi_i f||^2 <= ||f||^2
        let (bapu, u) = dyadic_setup();
        let w = AnalyticWindow::ball(1, Vec2::new(-2.0, 0.0), 0.9, Profile::Bump);
        let f = BandlimitedSignal::from_window(&w);
        let g = default_grid(&f).unwrap();
        let r = decomp_norm(&f, &bapu, &u, 2.0, 2.0, Some(&g)).unwrap();
        let total = f.l2_norm(&g);
        assert!(r.value <= total * (1.0 + 1e-12));
        assert!(r.value >= total / 2f64.sqrt());
    }

    #[test]
    fn small_window_is_rejected() {
        let chart = GroupChart::new(ChartKind::Dyadic1d);
        let w = default_window(&chart);
        let fam = WellSpreadFamily::new(chart.clone(), crate::covering::IndexWindow::scales(0, 1));
        let q = base_set_for(&w, &fam).unwrap();
        let cov = InducedCovering::build(fam, q, None).unwrap();
        let bapu = BapuFamily::build(&w, &cov, QuadSpec::with_nodes(16)).unwrap();
        let u = discretize(&WeightSpec::one(), &cov, 2.0).unwrap();
        let f = BandlimitedSignal::from_window(&AnalyticWindow::ball(1, Vec2::new(6.0, 0.0), 1.0, Profile::Bump));
        match decomp_norm(&f, &bapu, &u, 2.0, 2.0, None) {
            Err(Error::WindowTooSmall(missed)) => assert!(!missed.is_empty()),
            other => panic!("expected a window error, got {other:?}"),
        }
    }
}
