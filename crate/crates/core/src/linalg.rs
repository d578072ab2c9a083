//! Small fixed-size linear algebra. One-dimensional objects are embedded in
//! the 2x2 types with the second axis left as identity.

pub type Mat2 = nalgebra::Matrix2<f64>;
pub type Vec2 = nalgebra::Vector2<f64>;

/// Singular values (largest first) of a 2x2 matrix in closed form.
pub fn singular_values(m: &Mat2) -> (f64, f64) {
    let fro2 = m.iter().map(|x| x * x).sum::<f64>();
    let det = m.determinant().abs();
    let disc = (fro2 * fro2 - 4.0 * det * det).max(0.0).sqrt();
    let s1 = ((fro2 + disc) / 2.0).sqrt();
    // the small one from det/s1 keeps relative accuracy for ill-conditioned m
    let s2 = if s1 > 0.0 { det / s1 } else { 0.0 };
    (s1, s2)
}

pub fn spectral_norm(m: &Mat2, dim: usize) -> f64 {
    if dim == 1 {
        m[(0, 0)].abs()
    } else {
        singular_values(m).0
    }
}

pub fn det_abs(m: &Mat2, dim: usize) -> f64 {
    if dim == 1 {
        m[(0, 0)].abs()
    } else {
        m.determinant().abs()
    }
}

/// Euclidean length of the first `dim` coordinates.
pub fn vnorm(v: &Vec2, dim: usize) -> f64 {
    if dim == 1 {
        v[0].abs()
    } else {
        v.norm()
    }
}

pub fn embed1(a: f64) -> Mat2 {
    Mat2::new(a, 0.0, 0.0, 1.0)
}

pub fn rotation(theta: f64) -> Mat2 {
    let (s, c) = theta.sin_cos();
    Mat2::new(c, -s, s, c)
}

pub fn invert(m: &Mat2) -> Mat2 {
    m.try_inverse().expect("matrix is singular")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn singular_values_of_diagonal() {
        let (a, b) = singular_values(&Mat2::new(3.0, 0.0, 0.0, -0.5));
        assert!((a - 3.0).abs() < 1e-14 && (b - 0.5).abs() < 1e-14);
    }

    #[test]
    fn singular_values_match_eigen_of_gram() {
        let m = Mat2::new(4.0, 1.0, 0.0, 2.0);
        let (a, b) = singular_values(&m);
        let g = m.transpose() * m;
        let ev = g.symmetric_eigenvalues();
        let (hi, lo) = (ev.max(), ev.min());
        assert!((a * a - hi).abs() < 1e-12 && (b * b - lo).abs() < 1e-12);
    }

    #[test]
    fn one_dimensional_embedding_ignores_second_axis() {
        let m = embed1(-0.25);
        assert_eq!(spectral_norm(&m, 1), 0.25);
        assert_eq!(det_abs(&m, 1), 0.25);
    }
}
