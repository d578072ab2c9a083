//! Dilation groups as parametrized charts.
//!
//! Every chart uses coordinates in which the left Haar density is the constant 1:
//!
//! * `dyadic1d`: h = sign * e^t acting on the line; Haar measure da/|a| = dt per sign.
//! * `similitude2d`: h = e^t [[cos p, sin p], [-sin p, cos p]], so that h^T (1,0) = e^t (cos p, sin p);
//!   Haar measure dr dp / r = dt dp.
//! * `shearlet2d`: h = sign [[a, a s], [0, sqrt a]] with a = e^t, i.e. b = a s in the
//!   [[a, b], [0, sqrt a]] form; Haar measure db da / a^2 = dt ds.
//!
//! A chart may be conjugated by a fixed invertible g: its matrices are g^-1 h g, the
//! parameters and Haar measure are unchanged and the base point becomes g^T xi_0.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{det_abs, embed1, invert, spectral_norm, Mat2, Vec2};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChartKind {
    Dyadic1d,
    Similitude2d,
    Shearlet2d,
}

impl ChartKind {
    pub const ALL: [ChartKind; 3] = [ChartKind::Dyadic1d, ChartKind::Similitude2d, ChartKind::Shearlet2d];

    pub fn name(self) -> &'static str {
        match self {
            ChartKind::Dyadic1d => "dyadic1d",
            ChartKind::Similitude2d => "similitude2d",
            ChartKind::Shearlet2d => "shearlet2d",
        }
    }
}

impl fmt::Display for ChartKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ChartKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dyadic1d" => Ok(ChartKind::Dyadic1d),
            "similitude2d" | "similitude" => Ok(ChartKind::Similitude2d),
            "shearlet2d" | "shearlet" => Ok(ChartKind::Shearlet2d),
            other => Err(Error::UnsupportedKind(other.to_string())),
        }
    }
}

/// Chart coordinates: `sign` is the discrete branch (always +1 for similitude),
/// `log_scale` is t, `aux` is the rotation angle (similitude) or shear s (shearlet).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub sign: i8,
    pub log_scale: f64,
    pub aux: f64,
}

impl Params {
    pub fn new(sign: i8, log_scale: f64, aux: f64) -> Self {
        Params { sign, log_scale, aux }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BlindSpot {
    Origin,
    /// the line {xi : n . xi = 0}
    Line(Vec2),
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroupPoint {
    pub kind: ChartKind,
    pub params: Params,
    pub matrix: Mat2,
    pub det_abs: f64,
}

impl GroupPoint {
    pub fn dim(&self) -> usize {
        dim_of(self.kind)
    }

    pub fn norm(&self) -> f64 {
        spectral_norm(&self.matrix, self.dim())
    }

    pub fn inv_norm(&self) -> f64 {
        spectral_norm(&invert(&self.matrix), self.dim())
    }

    /// h^T xi.
    pub fn dual(&self, xi: &Vec2) -> Vec2 {
        let mut y = self.matrix.transpose() * xi;
        if self.dim() == 1 {
            y[1] = 0.0;
        }
        y
    }

    /// h^-T xi.
    pub fn dual_inv(&self, y: &Vec2) -> Vec2 {
        let mut xi = invert(&self.matrix).transpose() * y;
        if self.dim() == 1 {
            xi[1] = 0.0;
        }
        xi
    }
}

fn dim_of(kind: ChartKind) -> usize {
    match kind {
        ChartKind::Dyadic1d => 1,
        _ => 2,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroupChart {
    pub kind: ChartKind,
    conj: Option<(Mat2, Mat2)>,
}

pub fn make_group(kind: &str) -> Result<GroupChart> {
    Ok(GroupChart::new(kind.parse()?))
}

impl GroupChart {
    pub fn new(kind: ChartKind) -> Self {
        GroupChart { kind, conj: None }
    }

    /// The chart of g^-1 H g.
    pub fn conjugated(&self, g: Mat2) -> Result<Self> {
        if self.dim() == 1 {
            return Err(Error::Invalid("conjugation is only meaningful in dimension 2".into()));
        }
        let total = match self.conj {
            Some((c, _)) => c * g,
            None => g,
        };
        let inv = total
            .try_inverse()
            .ok_or_else(|| Error::Invalid("conjugating matrix is singular".into()))?;
        Ok(GroupChart { kind: self.kind, conj: Some((total, inv)) })
    }

    pub fn conjugator(&self) -> Option<Mat2> {
        self.conj.map(|c| c.0)
    }

    pub fn dim(&self) -> usize {
        dim_of(self.kind)
    }

    /// Number of continuous parameters.
    pub fn param_dim(&self) -> usize {
        match self.kind {
            ChartKind::Dyadic1d => 1,
            _ => 2,
        }
    }

    pub fn has_sign_branch(&self) -> bool {
        self.kind != ChartKind::Similitude2d
    }

    pub fn signs(&self) -> &'static [i8] {
        if self.has_sign_branch() {
            &[-1, 1]
        } else {
            &[1]
        }
    }

    /// Period of the auxiliary parameter, if it is an angle.
    pub fn aux_period(&self) -> Option<f64> {
        match self.kind {
            ChartKind::Similitude2d => Some(TAU),
            _ => None,
        }
    }

    fn unconj_base_point(&self) -> Vec2 {
        Vec2::new(1.0, 0.0)
    }

    pub fn base_point(&self) -> Vec2 {
        match self.conj {
            Some((g, _)) => g.transpose() * self.unconj_base_point(),
            None => self.unconj_base_point(),
        }
    }

    fn base_matrix(&self, p: &Params) -> Mat2 {
        let a = p.log_scale.exp();
        let sg = p.sign as f64;
        match self.kind {
            ChartKind::Dyadic1d => embed1(sg * a),
            ChartKind::Similitude2d => {
                let (s, c) = p.aux.sin_cos();
                Mat2::new(a * c, a * s, -a * s, a * c)
            }
            ChartKind::Shearlet2d => Mat2::new(sg * a, sg * a * p.aux, 0.0, sg * a.sqrt()),
        }
    }

    pub fn matrix(&self, p: &Params) -> Mat2 {
        let m = self.base_matrix(p);
        match self.conj {
            Some((g, gi)) => gi * m * g,
            None => m,
        }
    }

    pub fn point(&self, p: Params) -> GroupPoint {
        let p = self.normalize(p);
        let matrix = self.matrix(&p);
        GroupPoint { kind: self.kind, params: p, det_abs: det_abs(&matrix, self.dim()), matrix }
    }

    fn normalize(&self, mut p: Params) -> Params {
        if !self.has_sign_branch() {
            p.sign = 1;
        } else if p.sign >= 0 {
            p.sign = 1;
        } else {
            p.sign = -1;
        }
        match self.kind {
            ChartKind::Similitude2d => p.aux = p.aux.rem_euclid(TAU),
            ChartKind::Dyadic1d => p.aux = 0.0,
            ChartKind::Shearlet2d => {}
        }
        p
    }

    pub fn identity(&self) -> GroupPoint {
        self.point(Params::new(1, 0.0, 0.0))
    }

    /// Shearlet element sign * [[a, b], [0, sqrt a]].
    pub fn shearlet_point(&self, sign: i8, a: f64, b: f64) -> GroupPoint {
        assert_eq!(self.kind, ChartKind::Shearlet2d);
        assert!(a > 0.0, "shearlet scale must be positive");
        self.point(Params::new(sign, a.ln(), b / a))
    }

    /// Similitude element r * rotation with h^T (1,0) = r (cos phi, sin phi).
    pub fn similitude_point(&self, r: f64, phi: f64) -> GroupPoint {
        assert_eq!(self.kind, ChartKind::Similitude2d);
        assert!(r > 0.0, "similitude scale must be positive");
        self.point(Params::new(1, r.ln(), phi))
    }

    /// Dyadic element: multiplication by the nonzero real a.
    pub fn dyadic_point(&self, a: f64) -> GroupPoint {
        assert_eq!(self.kind, ChartKind::Dyadic1d);
        assert!(a != 0.0, "dilation must be nonzero");
        self.point(Params::new(if a < 0.0 { -1 } else { 1 }, a.abs().ln(), 0.0))
    }

    /// Natural parameters: (a) for dyadic, (r, phi) for similitude, (sign, a, b) for shearlet.
    pub fn natural_params(&self, h: &GroupPoint) -> Vec<f64> {
        let p = &h.params;
        let a = p.log_scale.exp();
        match self.kind {
            ChartKind::Dyadic1d => vec![p.sign as f64 * a],
            ChartKind::Similitude2d => vec![a, p.aux],
            ChartKind::Shearlet2d => vec![p.sign as f64, a, a * p.aux],
        }
    }

    pub fn mul(&self, g: &GroupPoint, h: &GroupPoint) -> GroupPoint {
        let (p, q) = (&g.params, &h.params);
        let r = match self.kind {
            ChartKind::Dyadic1d | ChartKind::Similitude2d => {
                Params::new(p.sign * q.sign, p.log_scale + q.log_scale, p.aux + q.aux)
            }
            ChartKind::Shearlet2d => Params::new(
                p.sign * q.sign,
                p.log_scale + q.log_scale,
                p.aux * (-q.log_scale / 2.0).exp() + q.aux,
            ),
        };
        self.point(r)
    }

    pub fn inv(&self, h: &GroupPoint) -> GroupPoint {
        let p = &h.params;
        let r = match self.kind {
            ChartKind::Dyadic1d | ChartKind::Similitude2d => Params::new(p.sign, -p.log_scale, -p.aux),
            ChartKind::Shearlet2d => {
                Params::new(p.sign, -p.log_scale, -p.aux * (p.log_scale / 2.0).exp())
            }
        };
        self.point(r)
    }

    pub fn dual_action(&self, h: &GroupPoint, xi: &Vec2) -> Vec2 {
        h.dual(xi)
    }

    pub fn blind_spot(&self) -> BlindSpot {
        match self.kind {
            ChartKind::Similitude2d => BlindSpot::Origin,
            ChartKind::Dyadic1d | ChartKind::Shearlet2d => {
                let n = Vec2::new(1.0, 0.0);
                // xi is blind iff (g^-T xi)_1 = 0, i.e. (g^-1 e1) . xi = 0
                match self.conj {
                    Some((_, gi)) => BlindSpot::Line(gi * n),
                    None => BlindSpot::Line(n),
                }
            }
        }
    }

    /// Distance from xi to the blind spot.
    pub fn blind_distance(&self, xi: &Vec2) -> f64 {
        match self.blind_spot() {
            BlindSpot::Origin => xi.norm(),
            BlindSpot::Line(n) => n.dot(xi).abs() / n.norm(),
        }
    }

    /// Membership up to rounding in the conjugating matrix.
    pub fn in_orbit(&self, xi: &Vec2) -> bool {
        self.blind_distance(xi) > 1e-12 * xi.norm()
    }

    /// Maps xi into the coordinates of the unconjugated chart (g^-T xi).
    fn to_base(&self, xi: &Vec2) -> Vec2 {
        match self.conj {
            Some((_, gi)) => gi.transpose() * xi,
            None => *xi,
        }
    }

    /// The element h_xi with h_xi^T xi_0 = xi.
    pub fn cross_section(&self, xi: &Vec2) -> Result<GroupPoint> {
        if !self.in_orbit(xi) {
            return Err(Error::OffOrbit([xi[0], xi[1]]));
        }
        let z = self.to_base(xi);
        let p = match self.kind {
            ChartKind::Dyadic1d => Params::new(sign_of(z[0]), z[0].abs().ln(), 0.0),
            ChartKind::Similitude2d => Params::new(1, z.norm().ln(), z[1].atan2(z[0])),
            ChartKind::Shearlet2d => Params::new(sign_of(z[0]), z[0].abs().ln(), z[1] / z[0]),
        };
        Ok(self.point(p))
    }

    pub fn modular_h(&self, h: &GroupPoint) -> f64 {
        match self.kind {
            ChartKind::Shearlet2d => (-h.params.log_scale / 2.0).exp(),
            _ => 1.0,
        }
    }

    pub fn modular_g(&self, h: &GroupPoint) -> f64 {
        self.modular_h(h) / h.det_abs
    }

    /// Left Haar density in chart coordinates.
    pub fn haar_density(&self, _p: &Params) -> f64 {
        1.0
    }
}

fn sign_of(x: f64) -> i8 {
    if x < 0.0 {
        -1
    } else {
        1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &Mat2, b: &Mat2, tol: f64) -> bool {
        (a - b).abs().max() < tol
    }

    #[test]
    fn shearlet_element_matrix_and_det() {
        let c = GroupChart::new(ChartKind::Shearlet2d);
        let h = c.shearlet_point(1, 4.0, 1.0);
        assert!(close(&h.matrix, &Mat2::new(4.0, 1.0, 0.0, 2.0), 1e-14));
        assert!((h.det_abs - 8.0).abs() < 1e-13);
        let y = c.dual_action(&h, &Vec2::new(1.0, 0.0));
        assert!((y - Vec2::new(4.0, 1.0)).norm() < 1e-14);
    }

    #[test]
    fn similitude_identity_and_scalar() {
        let c = GroupChart::new(ChartKind::Similitude2d);
        let h = c.similitude_point(1.0, 0.0);
        assert!(close(&h.matrix, &Mat2::identity(), 1e-15));
        assert_eq!(h.det_abs, 1.0);
        let h2 = c.similitude_point(2.0, 0.0);
        assert!((c.dual_action(&h2, &Vec2::new(1.0, 1.0)) - Vec2::new(2.0, 2.0)).norm() < 1e-14);
    }

    #[test]
    fn shearlet_blind_spot() {
        let c = make_group("shearlet2d").unwrap();
        assert!(!c.in_orbit(&Vec2::new(0.0, 5.0)));
        assert!(c.in_orbit(&Vec2::new(0.1, 5.0)));
        assert!(c.cross_section(&Vec2::new(0.0, 5.0)).is_err());
    }

    #[test]
    fn unsupported_kind_rejected() {
        let e = make_group("blaschke").unwrap_err();
        assert!(e.to_string().contains("blaschke"));
    }

    #[test]
    fn cross_sections() {
        let c = GroupChart::new(ChartKind::Shearlet2d);
        let h = c.cross_section(&Vec2::new(4.0, 2.0)).unwrap();
        assert_eq!(c.natural_params(&h), vec![1.0, 4.0, 2.0]);
        assert!(close(&c.cross_section(&Vec2::new(1.0, 0.0)).unwrap().matrix, &Mat2::identity(), 1e-15));
        let s = GroupChart::new(ChartKind::Similitude2d);
        let h = s.cross_section(&Vec2::new(0.0, 2.0)).unwrap();
        let np = s.natural_params(&h);
        assert!((np[0] - 2.0).abs() < 1e-14 && (np[1] - std::f64::consts::FRAC_PI_2).abs() < 1e-14);
    }

    #[test]
    fn modular_functions() {
        let c = GroupChart::new(ChartKind::Shearlet2d);
        assert_eq!(c.modular_h(&c.shearlet_point(1, 1.0, 0.0)), 1.0);
        let h = c.shearlet_point(1, 4.0, 0.0);
        assert!((c.modular_h(&h) - 0.5).abs() < 1e-15);
        assert!((c.modular_g(&h) - 0.5 / 8.0).abs() < 1e-15);
        let s = GroupChart::new(ChartKind::Similitude2d);
        assert_eq!(s.modular_h(&s.similitude_point(3.0, 1.0)), 1.0);
    }

    #[test]
    fn conjugated_chart_base_point_and_orbit() {
        let g = crate::linalg::rotation(std::f64::consts::FRAC_PI_2);
        let c = GroupChart::new(ChartKind::Shearlet2d).conjugated(g).unwrap();
        let xi0 = c.base_point();
        let h = c.point(Params::new(1, 0.7, -0.3));
        let y = c.dual_action(&h, &xi0);
        assert!(c.in_orbit(&y));
        let back = c.cross_section(&y).unwrap();
        assert!((c.dual_action(&back, &xi0) - y).norm() < 1e-12);
        // the rotated blind spot is the horizontal axis
        assert!(!c.in_orbit(&Vec2::new(3.0, 0.0)));
        assert!(c.in_orbit(&Vec2::new(0.0, 3.0)));
    }

    #[test]
    fn matrix_products_follow_parameter_law() {
        for kind in ChartKind::ALL {
            let c = GroupChart::new(kind);
            let g = c.point(Params::new(-1, 0.4, 1.3));
            let h = c.point(Params::new(1, -1.1, -0.6));
            let gh = c.mul(&g, &h);
            assert!(close(&gh.matrix, &(g.matrix * h.matrix), 1e-12), "{kind}");
        }
    }
}
