//! Traceless symmetric 3x3 tensors and the uniaxial limit manifold.
//!
//! A [`QTensor`] stores five coefficients in the orthonormal basis
//!
//! ```text
//! E1 = diag(-1, -1, 2) / √6      E2 = diag(1, -1, 0) / √2
//! E3 = (e_x⊗e_y + e_y⊗e_x) / √2  E4 = (e_x⊗e_z + e_z⊗e_x) / √2
//! E5 = (e_y⊗e_z + e_z⊗e_y) / √2
//! ```
//!
//! so the Euclidean norm of the coefficients is the Frobenius norm of the
//! matrix and coefficient-wise gradients are Frobenius gradients.

use core::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use crate::eigen::symmetric_eigen;
use crate::error::{Error, Result};
use crate::linalg::{mat_mul, transpose, Mat3, Vec3};
use crate::math;

const SQRT2: f64 = core::f64::consts::SQRT_2;
const INV_SQRT2: f64 = core::f64::consts::FRAC_1_SQRT_2;
const SQRT6: f64 = 2.449_489_742_783_178;
const INV_SQRT6: f64 = 1.0 / SQRT6;

/// `√(2/3)`: Frobenius norm of `n⊗n - Id/3` for unit `n`.
pub const SQRT_2_3: f64 = 0.816_496_580_927_726;

/// Default minimal leading-eigenvalue gap for the projection onto N.
pub const DEFAULT_GAP_MIN: f64 = 1e-8;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct QTensor(pub [f64; 5]);

/// Sorted eigen-decomposition of a [`QTensor`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EigenSystem {
    /// λ₁ ≥ λ₂ ≥ λ₃, summing to zero.
    pub values: [f64; 3],
    /// Orthonormal eigenvectors matching `values`.
    pub vectors: [Vec3; 3],
}

impl EigenSystem {
    /// λ₁ - λ₂.
    pub fn leading_gap(&self) -> f64 {
        self.values[0] - self.values[1]
    }

    pub fn reconstruct(&self) -> QTensor {
        let mut m = [[0.0; 3]; 3];
        for k in 0..3 {
            let v = self.vectors[k];
            for i in 0..3 {
                for j in 0..3 {
                    m[i][j] += self.values[k] * v[i] * v[j];
                }
            }
        }
        QTensor::from_matrix(&m)
    }
}

impl QTensor {
    pub const ZERO: QTensor = QTensor([0.0; 5]);

    #[inline]
    pub fn from_slice(c: &[f64]) -> Self {
        QTensor([c[0], c[1], c[2], c[3], c[4]])
    }

    #[inline]
    pub fn coeffs(&self) -> &[f64; 5] {
        &self.0
    }

    /// Symmetric traceless part of `m`, in coefficients.
    pub fn from_matrix(m: &Mat3) -> Self {
        QTensor([
            (2.0 * m[2][2] - m[0][0] - m[1][1]) * INV_SQRT6,
            (m[0][0] - m[1][1]) * INV_SQRT2,
            (m[0][1] + m[1][0]) * INV_SQRT2,
            (m[0][2] + m[2][0]) * INV_SQRT2,
            (m[1][2] + m[2][1]) * INV_SQRT2,
        ])
    }

    #[inline]
    pub fn to_matrix(&self) -> Mat3 {
        let [q1, q2, q3, q4, q5] = self.0;
        let d = q1 * INV_SQRT6;
        let e = q2 * INV_SQRT2;
        let xy = q3 * INV_SQRT2;
        let xz = q4 * INV_SQRT2;
        let yz = q5 * INV_SQRT2;
        [[-d + e, xy, xz], [xy, -d - e, yz], [xz, yz, 2.0 * d]]
    }

    /// `s (n⊗n - Id/3)`; `n` must be a unit vector to within 1e-12.
    pub fn uniaxial(n: Vec3, s: f64) -> Result<Self> {
        let norm = crate::linalg::norm(n);
        if !(math::abs(norm - 1.0) <= 1e-12) {
            return Err(Error::NonUnitDirector { norm });
        }
        Ok(Self::uniaxial_unchecked(n, s))
    }

    /// `s (n̂⊗n̂ - Id/3)` with `n̂ = n/|n|`; the zero vector gives zero.
    pub fn uniaxial_normalized(n: Vec3, s: f64) -> Self {
        match crate::linalg::normalize(n) {
            Some(u) => Self::uniaxial_unchecked(u, s),
            None => Self::ZERO,
        }
    }

    #[inline]
    pub(crate) fn uniaxial_unchecked(n: Vec3, s: f64) -> Self {
        let [x, y, z] = n;
        let nn = x * x + y * y + z * z;
        QTensor([
            s * (3.0 * z * z - nn) * INV_SQRT6,
            s * (x * x - y * y) * INV_SQRT2,
            s * SQRT2 * x * y,
            s * SQRT2 * x * z,
            s * SQRT2 * y * z,
        ])
    }

    #[inline]
    pub fn dot(&self, other: &QTensor) -> f64 {
        self.0.iter().zip(other.0.iter()).map(|(a, b)| a * b).sum()
    }

    #[inline]
    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    /// Frobenius norm.
    #[inline]
    pub fn norm(&self) -> f64 {
        math::sqrt(self.norm_sq())
    }

    /// `tr(Q²)`.
    #[inline]
    pub fn tr2(&self) -> f64 {
        self.norm_sq()
    }

    /// `tr(Q³)`, equal to `3 det Q` for traceless `Q`.
    #[inline]
    pub fn tr3(&self) -> f64 {
        let m = self.to_matrix();
        3.0 * (m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[1][2])
            - m[0][1] * (m[0][1] * m[2][2] - m[1][2] * m[0][2])
            + m[0][2] * (m[0][1] * m[1][2] - m[1][1] * m[0][2]))
    }

    /// Traceless part of `Q²`, i.e. `Q² - tr(Q²) Id/3`.
    #[inline]
    pub fn square_traceless(&self) -> QTensor {
        let m = self.to_matrix();
        QTensor::from_matrix(&mat_mul(&m, &m))
    }

    /// `R Q Rᵀ`.
    pub fn conjugate(&self, r: &Mat3) -> QTensor {
        let m = self.to_matrix();
        QTensor::from_matrix(&mat_mul(&mat_mul(r, &m), &transpose(r)))
    }

    pub fn eigensystem(&self) -> EigenSystem {
        let e = symmetric_eigen(&self.to_matrix());
        EigenSystem {
            values: e.values,
            vectors: e.vectors,
        }
    }

    /// Nearest point of N = {s₊(n⊗n - Id/3)}: `s₊(e₁⊗e₁ - Id/3)`.
    pub fn project_to_n(&self, s_plus: f64, gap_min: f64) -> Result<QTensor> {
        let e = self.eigensystem();
        let gap = e.leading_gap();
        if !(gap >= gap_min) {
            return Err(Error::ProjectionUndefined { gap, gap_min });
        }
        Ok(Self::uniaxial_unchecked(e.vectors[0], s_plus))
    }

    /// Distance to N from the sorted eigenvalues.
    pub fn dist_to_n(&self, s_plus: f64) -> f64 {
        let l = self.eigensystem().values;
        let a = l[0] - 2.0 * s_plus / 3.0;
        let b = l[1] + s_plus / 3.0;
        let c = l[2] + s_plus / 3.0;
        math::sqrt(a * a + b * b + c * c)
    }

    /// `β = 1 - 6 tr(Q³)² / tr(Q²)³`, zero for the zero tensor.
    pub fn biaxiality(&self) -> f64 {
        let t2 = self.tr2();
        if t2 == 0.0 {
            return 0.0;
        }
        let t3 = self.tr3();
        (1.0 - 6.0 * t3 * t3 / (t2 * t2 * t2)).clamp(0.0, 1.0)
    }
}

impl Add for QTensor {
    type Output = QTensor;
    #[inline]
    fn add(self, o: QTensor) -> QTensor {
        QTensor(core::array::from_fn(|i| self.0[i] + o.0[i]))
    }
}

impl Sub for QTensor {
    type Output = QTensor;
    #[inline]
    fn sub(self, o: QTensor) -> QTensor {
        QTensor(core::array::from_fn(|i| self.0[i] - o.0[i]))
    }
}

impl Mul<f64> for QTensor {
    type Output = QTensor;
    #[inline]
    fn mul(self, s: f64) -> QTensor {
        QTensor(self.0.map(|x| x * s))
    }
}

impl Neg for QTensor {
    type Output = QTensor;
    #[inline]
    fn neg(self) -> QTensor {
        QTensor(self.0.map(|x| -x))
    }
}

impl AddAssign for QTensor {
    #[inline]
    fn add_assign(&mut self, o: QTensor) {
        for i in 0..5 {
            self.0[i] += o.0[i];
        }
    }
}

impl SubAssign for QTensor {
    #[inline]
    fn sub_assign(&mut self, o: QTensor) {
        for i in 0..5 {
            self.0[i] -= o.0[i];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{axis_angle, frobenius, mat_sub};

    const EZ: Vec3 = [0.0, 0.0, 1.0];

    fn diag(a: f64, b: f64, c: f64) -> QTensor {
        QTensor::from_matrix(&[[a, 0.0, 0.0], [0.0, b, 0.0], [0.0, 0.0, c]])
    }

    fn close(a: &QTensor, b: &QTensor, tol: f64) -> bool {
        (*a - *b).norm() < tol
    }

    #[test]
    fn uniaxial_examples() {
        let q = QTensor::uniaxial(EZ, 1.5).unwrap();
        assert!(close(&q, &diag(-0.5, -0.5, 1.0), 1e-15));
        assert_eq!(QTensor::uniaxial(EZ, 0.0).unwrap(), QTensor::ZERO);
        let a = QTensor::uniaxial([1.0, 0.0, 0.0], 1.5).unwrap();
        let b = QTensor::uniaxial([-1.0, 0.0, 0.0], 1.5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn uniaxial_rejects_non_unit_director() {
        assert!(matches!(
            QTensor::uniaxial([0.0, 0.0, 1.0 + 1e-9], 1.0),
            Err(Error::NonUnitDirector { .. })
        ));
        assert!(QTensor::uniaxial([0.0, 0.0, 1.0 + 1e-13], 1.0).is_ok());
    }

    #[test]
    fn traces() {
        let q = QTensor::uniaxial(EZ, 1.5).unwrap();
        assert!((q.tr2() - 1.5).abs() < 1e-14);
        assert!((q.tr3() - 0.75).abs() < 1e-14);
        assert_eq!(diag(0.5, -0.5, 0.0).tr3(), 0.0);
    }

    #[test]
    fn matrix_view_is_symmetric_and_traceless() {
        let q = QTensor([0.3, -1.2, 0.7, 0.05, -0.4]);
        let m = q.to_matrix();
        assert!((m[0][0] + m[1][1] + m[2][2]).abs() < 1e-15);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(m[i][j], m[j][i]);
            }
        }
        assert!(close(&QTensor::from_matrix(&m), &q, 1e-15));
        assert!((frobenius(&m) - q.norm()).abs() < 1e-15);
    }

    #[test]
    fn eigensystem_of_diagonal() {
        let e = diag(-0.5, -0.5, 1.0).eigensystem();
        assert!((e.values[0] - 1.0).abs() < 1e-15);
        assert!((e.values[1] + 0.5).abs() < 1e-15);
        assert!((e.values[2] + 0.5).abs() < 1e-15);
        assert!((e.vectors[0][2].abs() - 1.0).abs() < 1e-15);
        let z = QTensor::ZERO.eigensystem();
        assert_eq!(z.values, [0.0; 3]);
    }

    #[test]
    fn projection_examples() {
        let n = QTensor::uniaxial([0.6, 0.0, 0.8], 1.5).unwrap();
        assert!(close(&n.project_to_n(1.5, DEFAULT_GAP_MIN).unwrap(), &n, 1e-14));
        let p = diag(-0.4, -0.6, 1.0).project_to_n(1.5, DEFAULT_GAP_MIN).unwrap();
        assert!(close(&p, &diag(-0.5, -0.5, 1.0), 1e-14));
        assert!(matches!(
            QTensor::ZERO.project_to_n(1.5, DEFAULT_GAP_MIN),
            Err(Error::ProjectionUndefined { .. })
        ));
    }

    #[test]
    fn distance_examples() {
        let n = QTensor::uniaxial([0.0, 0.6, 0.8], 1.5).unwrap();
        assert!(n.dist_to_n(1.5) < 1e-14);
        assert!((QTensor::ZERO.dist_to_n(1.5) - 1.224_744_871_391_589).abs() < 1e-12);
        let q = QTensor::uniaxial(EZ, 1.4).unwrap();
        assert!((q.dist_to_n(1.5) - 0.1 * SQRT_2_3).abs() < 1e-13);
    }

    #[test]
    fn distance_matches_projection_where_defined() {
        let q = QTensor([0.4, -0.3, 0.9, 0.1, 0.2]);
        let p = q.project_to_n(1.5, DEFAULT_GAP_MIN).unwrap();
        assert!(((q - p).norm() - q.dist_to_n(1.5)).abs() < 1e-12);
    }

    #[test]
    fn biaxiality_examples() {
        assert!(QTensor::uniaxial([0.0, 0.6, 0.8], 0.7).unwrap().biaxiality() < 1e-12);
        assert!(QTensor::uniaxial(EZ, -0.7).unwrap().biaxiality() < 1e-12);
        assert!((diag(0.5, -0.5, 0.0).biaxiality() - 1.0).abs() < 1e-15);
        assert_eq!(QTensor::ZERO.biaxiality(), 0.0);
    }

    #[test]
    fn conjugation_rotates_uniaxial_director() {
        let r = axis_angle([1.0, 0.0, 0.0], math::PI / 2.0);
        let q = QTensor::uniaxial(EZ, 1.5).unwrap().conjugate(&r);
        let expected = QTensor::uniaxial([0.0, -1.0, 0.0], 1.5).unwrap();
        assert!(close(&q, &expected, 1e-14));
        let m = mat_sub(&q.to_matrix(), &expected.to_matrix());
        assert!(frobenius(&m) < 1e-14);
    }
}
