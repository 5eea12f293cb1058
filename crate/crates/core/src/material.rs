//! Bulk potential of the Landau-de Gennes model.
//!
//! `f_b(Q) = -a²/2 tr(Q²) - b²/3 tr(Q³) + c²/4 tr(Q²)² + C`, with `C` chosen
//! so that the minimum value, attained on N = {s₊(n⊗n - Id/3)}, is zero.
//!
//! In the Euler-Lagrange operator the quartic term's `tr(Q)²` is read as
//! `tr(Q²)`, the only reading consistent with `f_b`.

use crate::error::{Error, Result};
use crate::math;
use crate::qtensor::QTensor;

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct MaterialParams {
    a2: f64,
    b2: f64,
    c2: f64,
    eps: f64,
    s_plus: f64,
    c_offset: f64,
}

impl MaterialParams {
    /// Validates `a², b², c², ε > 0` and derives `s₊` and `C`.
    pub fn new(a2: f64, b2: f64, c2: f64, eps: f64) -> Result<Self> {
        for (name, value) in [("a2", a2), ("b2", b2), ("c2", c2), ("eps", eps)] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::InvalidParameter { name, value });
            }
        }
        Ok(Self::derive(a2, b2, c2, eps))
    }

    /// Like [`MaterialParams::new`] but allows `b² = 0`.
    pub fn new_allow_zero_b2(a2: f64, b2: f64, c2: f64, eps: f64) -> Result<Self> {
        if b2 == 0.0 {
            let p = Self::new(a2, 1.0, c2, eps)?;
            return Ok(Self::derive(p.a2, 0.0, p.c2, p.eps));
        }
        Self::new(a2, b2, c2, eps)
    }

    fn derive(a2: f64, b2: f64, c2: f64, eps: f64) -> Self {
        let s_plus = (b2 + math::sqrt(b2 * b2 + 24.0 * a2 * c2)) / (4.0 * c2);
        let s2 = s_plus * s_plus;
        let on_manifold = -(a2 / 3.0) * s2 - (2.0 * b2 / 27.0) * s2 * s_plus + (c2 / 9.0) * s2 * s2;
        MaterialParams {
            a2,
            b2,
            c2,
            eps,
            s_plus,
            c_offset: -on_manifold,
        }
    }

    /// The canonical preset `a² = b² = c² = 1`.
    pub fn unit(eps: f64) -> Result<Self> {
        Self::new(1.0, 1.0, 1.0, eps)
    }

    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        Self::new_allow_zero_b2(self.a2, self.b2, self.c2, eps)
    }

    pub fn a2(&self) -> f64 {
        self.a2
    }
    pub fn b2(&self) -> f64 {
        self.b2
    }
    pub fn c2(&self) -> f64 {
        self.c2
    }
    pub fn eps(&self) -> f64 {
        self.eps
    }
    pub fn s_plus(&self) -> f64 {
        self.s_plus
    }
    pub fn c_offset(&self) -> f64 {
        self.c_offset
    }

    /// `f_b(Q)`.
    #[inline]
    pub fn bulk_energy(&self, q: &QTensor) -> f64 {
        let t2 = q.tr2();
        -0.5 * self.a2 * t2 - self.b2 / 3.0 * q.tr3() + 0.25 * self.c2 * t2 * t2 + self.c_offset
    }

    /// Gradient of `f_b` in the traceless coefficient coordinates:
    /// `-a² Q - b² (Q² - tr(Q²) Id/3) + c² tr(Q²) Q`.
    #[inline]
    pub fn bulk_gradient(&self, q: &QTensor) -> QTensor {
        let t2 = q.tr2();
        *q * (self.c2 * t2 - self.a2) - q.square_traceless() * self.b2
    }

    /// `f_b` restricted to uniaxial tensors `s(n⊗n - Id/3)`.
    pub fn bulk_energy_uniaxial(&self, s: f64) -> f64 {
        let s2 = s * s;
        -(self.a2 / 3.0) * s2 - (2.0 * self.b2 / 27.0) * s2 * s + (self.c2 / 9.0) * s2 * s2
            + self.c_offset
    }

    /// `d/ds` of [`MaterialParams::bulk_energy_uniaxial`].
    pub fn bulk_derivative_uniaxial(&self, s: f64) -> f64 {
        -(2.0 * self.a2 / 3.0) * s - (2.0 * self.b2 / 9.0) * s * s + (4.0 * self.c2 / 9.0) * s * s * s
    }

    /// Second derivative in `s` of the uniaxial restriction.
    pub fn bulk_curvature_uniaxial(&self, s: f64) -> f64 {
        -(2.0 * self.a2 / 3.0) - (4.0 * self.b2 / 9.0) * s + (4.0 * self.c2 / 3.0) * s * s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_positive_inputs() {
        assert!(MaterialParams::new(0.0, 1.0, 1.0, 0.1).is_err());
        assert!(MaterialParams::new(1.0, -1.0, 1.0, 0.1).is_err());
        assert!(MaterialParams::new(1.0, 1.0, 1.0, 0.0).is_err());
        assert!(MaterialParams::new(1.0, 1.0, f64::NAN, 0.1).is_err());
    }

    #[test]
    fn zero_b2_gives_sqrt6_over_2() {
        let p = MaterialParams::new_allow_zero_b2(1.0, 0.0, 1.0, 0.1).unwrap();
        assert!((p.s_plus() - 6f64.sqrt() / 2.0).abs() < 1e-15);
        assert!(p.bulk_energy_uniaxial(p.s_plus()).abs() < 1e-14);
    }

    #[test]
    fn uniaxial_restriction_matches_tensor_form() {
        let p = MaterialParams::new(0.7, 1.3, 2.1, 0.2).unwrap();
        for s in [-1.0, -0.2, 0.0, 0.4, 1.7] {
            let q = QTensor::uniaxial([0.0, 0.6, 0.8], s).unwrap();
            assert!((p.bulk_energy(&q) - p.bulk_energy_uniaxial(s)).abs() < 1e-13);
        }
    }

    #[test]
    fn gradient_vanishes_at_zero_and_on_n() {
        let p = MaterialParams::unit(0.1).unwrap();
        assert_eq!(p.bulk_gradient(&QTensor::ZERO), QTensor::ZERO);
        let on_n = QTensor::uniaxial([0.0, 0.0, 1.0], 1.5).unwrap();
        assert!(p.bulk_gradient(&on_n).norm() < 1e-14);
        assert!(p.bulk_energy(&on_n).abs() < 1e-12);
    }
}
