//! Weights v(h) = |det h|^s ||h||^t1 ||h^-1||^t2 on the dilation group, their
//! submultiplicative majorants, the v -> v' reflection, transplants onto the dual
//! orbit, per-index discretizations and the control weight of the mixed-norm space.

use serde::{Deserialize, Serialize};

use crate::covering::{ClusterTable, Index, InducedCovering};
use crate::error::{Error, Result};
use crate::group::{GroupChart, GroupPoint};
use crate::linalg::Vec2;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightSpec {
    pub s: f64,
    pub t1: f64,
    pub t2: f64,
}

impl WeightSpec {
    pub fn new(s: f64, t1: f64, t2: f64) -> Self {
        WeightSpec { s, t1, t2 }
    }

    pub fn det_power(s: f64) -> Self {
        WeightSpec::new(s, 0.0, 0.0)
    }

    pub fn one() -> Self {
        WeightSpec::new(0.0, 0.0, 0.0)
    }

    pub fn eval(&self, h: &GroupPoint) -> f64 {
        let mut v = h.det_abs.powf(self.s);
        if self.t1 != 0.0 {
            v *= h.norm().powf(self.t1);
        }
        if self.t2 != 0.0 {
            v *= h.inv_norm().powf(self.t2);
        }
        v
    }

    /// Submultiplicative majorant |det|^s kappa^(|t1| + |t2|), kappa = max(||h||, ||h^-1||).
    pub fn majorant(&self) -> Majorant {
        Majorant { s: self.s, t: self.t1.abs() + self.t2.abs() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Majorant {
    pub s: f64,
    pub t: f64,
}

impl Majorant {
    pub fn eval(&self, h: &GroupPoint) -> f64 {
        let kappa = h.norm().max(h.inv_norm());
        h.det_abs.powf(self.s) * kappa.powf(self.t)
    }
}

/// 1/q with 1/infinity = 0.
pub fn inv_exponent(q: f64) -> f64 {
    if q.is_infinite() {
        0.0
    } else {
        1.0 / q
    }
}

/// v'(h) = |det h^-1|^(1/2 - 1/q) v(h^-1), again a member of the family.
pub fn vprime(v: &WeightSpec, q: f64) -> WeightSpec {
    WeightSpec::new(inv_exponent(q) - 0.5 - v.s, v.t2, v.t1)
}

/// Orbit weight u(xi) = v(h_xi) for the chart's cross-section.
pub fn transplant(v: &WeightSpec, chart: &GroupChart, xi: &Vec2) -> Result<f64> {
    Ok(v.eval(&chart.cross_section(xi)?))
}

/// Transplant through the cross-section for the base point c^T xi_0, i.e. xi -> v(c^-1 h_xi).
pub fn transplant_via(v: &WeightSpec, chart: &GroupChart, c: &GroupPoint, xi: &Vec2) -> Result<f64> {
    let h = chart.cross_section(xi)?;
    Ok(v.eval(&chart.mul(&chart.inv(c), &h)))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DiscretizedWeight {
    pub indices: Vec<Index>,
    pub values: Vec<f64>,
    pub provenance: Vec<String>,
}

impl DiscretizedWeight {
    pub fn get(&self, i: &Index) -> Option<f64> {
        self.indices.binary_search(i).ok().map(|p| self.values[p])
    }

    /// Weights declared index by index.
    pub fn declared(pairs: Vec<(Index, f64)>) -> Self {
        let mut pairs = pairs;
        pairs.sort_by(|a, b| a.0.cmp(&b.0));
        DiscretizedWeight {
            provenance: pairs.iter().map(|_| "declared".to_string()).collect(),
            values: pairs.iter().map(|p| p.1).collect(),
            indices: pairs.into_iter().map(|p| p.0).collect(),
        }
    }

    /// max u_i / u_j over cluster pairs, with the table's index order matching `indices`.
    pub fn moderateness(&self, table: &ClusterTable) -> f64 {
        let mut worst: f64 = 1.0;
        for (a, nb) in table.neighbors.iter().enumerate() {
            for &b in nb {
                worst = worst.max(self.values[a] / self.values[b]);
            }
        }
        worst
    }
}

/// u_i = u(h_i^-T xi_0) = v'(h_i^-1) = |det h_i|^(1/2 - 1/q) v(h_i); requires xi_0 in Q.
pub fn discretize(v: &WeightSpec, cov: &InducedCovering, q: f64) -> Result<DiscretizedWeight> {
    let xi0 = cov.chart().base_point();
    if !cov.q.contains(&xi0) {
        return Err(Error::Invalid(format!(
            "base point ({:.3}, {:.3}) must lie in the base set Q to discretize a weight",
            xi0[0], xi0[1]
        )));
    }
    let vp = vprime(v, q);
    let chart = cov.chart();
    let indices = cov.family.indices();
    let mut values = Vec::with_capacity(indices.len());
    let mut provenance = Vec::with_capacity(indices.len());
    for i in &indices {
        let h = cov.family.element(i);
        values.push(vp.eval(&chart.inv(&h)));
        let xi = h.dual_inv(&xi0);
        provenance.push(format!("u(h_i^-T xi_0) at ({:.6e}, {:.6e})", xi[0], xi[1]));
    }
    Ok(DiscretizedWeight { indices, values, provenance })
}

/// Same as `discretize` but sampling the transplant at h_i^-T (c^T xi_0), i.e. through
/// another valid cross-section; used to compare discretizations.
pub fn discretize_via(v: &WeightSpec, cov: &InducedCovering, q: f64, c: &GroupPoint) -> Result<DiscretizedWeight> {
    let chart = cov.chart();
    let vp = vprime(v, q);
    let xi0 = c.dual(&chart.base_point());
    let indices = cov.family.indices();
    let mut values = Vec::with_capacity(indices.len());
    let mut provenance = Vec::with_capacity(indices.len());
    for i in &indices {
        let xi = cov.family.element(i).dual_inv(&xi0);
        values.push(transplant_via(&vp, chart, c, &xi)?);
        provenance.push(format!("u'(xi) at ({:.6e}, {:.6e})", xi[0], xi[1]));
    }
    Ok(DiscretizedWeight { indices, values, provenance })
}

/// w(h) = v0(1) v0+(h) |det|+(h) Delta_H+(h) with f+(h) = max(f(h), f(h^-1)).
pub fn control_weight(v0: &Majorant, chart: &GroupChart, h: &GroupPoint) -> f64 {
    let hi = chart.inv(h);
    let plus = |f: &dyn Fn(&GroupPoint) -> f64| f(h).max(f(&hi));
    v0.eval(&chart.identity())
        * plus(&|g| v0.eval(g))
        * plus(&|g| g.det_abs)
        * plus(&|g| chart.modular_h(g))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covering::{BaseSet, IndexWindow, WellSpreadFamily};
    use crate::group::{ChartKind, Params};

    #[test]
    fn vprime_examples() {
        let v = WeightSpec::det_power(7.0 / 6.0);
        let p = vprime(&v, 1.0);
        assert!((p.s + 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(vprime(&WeightSpec::one(), 2.0), WeightSpec::one());
        let w = WeightSpec::new(0.3, 1.0, -2.0);
        assert_eq!(vprime(&vprime(&w, 3.0), 3.0), w);
        assert_eq!(vprime(&WeightSpec::one(), f64::INFINITY).s, -0.5);
    }

    #[test]
    fn shearlet_transplant_is_inverse_abs_x() {
        let c = GroupChart::new(ChartKind::Shearlet2d);
        let vp = WeightSpec::det_power(-2.0 / 3.0);
        for xi in [Vec2::new(2.0, 1.0), Vec2::new(-0.3, 4.0), Vec2::new(5.0, -7.0)] {
            let u = transplant(&vp, &c, &xi).unwrap();
            assert!((u - 1.0 / xi[0].abs()).abs() < 1e-12 * u);
        }
        assert!(transplant(&vp, &c, &Vec2::new(0.0, 1.0)).is_err());
    }

    #[test]
    fn similitude_transplant_is_radial_power() {
        let c = GroupChart::new(ChartKind::Similitude2d);
        let v = WeightSpec::det_power(0.75);
        let xi = Vec2::new(1.5, -2.0);
        let u = transplant(&v, &c, &xi).unwrap();
        assert!((u - xi.norm().powf(1.5)).abs() < 1e-12);
    }

    #[test]
    fn similitude_discretization() {
        let fam = WellSpreadFamily::new(GroupChart::new(ChartKind::Similitude2d), IndexWindow::scales(-4, 4));
        let cov = InducedCovering::build(fam, BaseSet::Annulus { lo: 0.5, hi: 2.0 }, None).unwrap();
        let u = discretize(&WeightSpec::one(), &cov, 2.0).unwrap();
        assert!(u.values.iter().all(|&x| (x - 1.0).abs() < 1e-14));
        let u = discretize(&WeightSpec::one(), &cov, 1.0).unwrap();
        for (i, x) in u.indices.iter().zip(&u.values) {
            assert!((x - 2f64.powi(i.k as i32)).abs() < 1e-12 * x);
        }
    }

    #[test]
    fn discretize_requires_base_point_in_q() {
        let fam = WellSpreadFamily::new(GroupChart::new(ChartKind::Similitude2d), IndexWindow::scales(0, 1));
        let cov = InducedCovering::build(fam, BaseSet::Annulus { lo: 1.5, hi: 3.0 }, None).unwrap();
        assert!(discretize(&WeightSpec::one(), &cov, 2.0).is_err());
    }

    #[test]
    fn control_weight_examples() {
        let c = GroupChart::new(ChartKind::Similitude2d);
        let v0 = Majorant { s: 0.5, t: 0.0 };
        let h = c.similitude_point(2.0, 0.0);
        assert!((control_weight(&v0, &c, &h) - 8.0).abs() < 1e-12);
        let d = GroupChart::new(ChartKind::Dyadic1d);
        assert!((control_weight(&Majorant { s: 1.0, t: 2.0 }, &d, &d.identity()) - 1.0).abs() < 1e-15);
        let v0 = Majorant { s: 0.3, t: 1.0 };
        let sh = GroupChart::new(ChartKind::Shearlet2d);
        let e = sh.identity();
        assert!((control_weight(&v0, &sh, &e) - v0.eval(&e).powi(2)).abs() < 1e-15);
        let _ = Params::new(1, 0.0, 0.0);
    }
}
