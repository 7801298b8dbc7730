//! Minimal real 2x2 matrix used by the transfer-matrix formalism.

use std::ops::Mul;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2 {
    pub m11: f64,
    pub m12: f64,
    pub m21: f64,
    pub m22: f64,
}

impl Mat2 {
    pub const fn new(m11: f64, m12: f64, m21: f64, m22: f64) -> Self {
        Self { m11, m12, m21, m22 }
    }

    pub const fn identity() -> Self {
        Self::new(1.0, 0.0, 0.0, 1.0)
    }

    pub fn det(&self) -> f64 {
        self.m11 * self.m22 - self.m12 * self.m21
    }

    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        [
            self.m11 * v[0] + self.m12 * v[1],
            self.m21 * v[0] + self.m22 * v[1],
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.m11.is_finite() && self.m12.is_finite() && self.m21.is_finite() && self.m22.is_finite()
    }

    /// Singular values in decreasing order, from the closed form for 2x2.
    pub fn singular_values(&self) -> (f64, f64) {
        let f = self.m11.hypot(self.m12).hypot(self.m21.hypot(self.m22));
        let g = self.det().abs();
        // sigma1^2 + sigma2^2 = f^2, sigma1 sigma2 = g
        let sum_sq = f * f;
        let disc = (sum_sq * sum_sq - 4.0 * g * g).max(0.0).sqrt();
        let s1 = ((sum_sq + disc) / 2.0).sqrt();
        let s2 = if s1 > 0.0 { g / s1 } else { 0.0 };
        (s1, s2)
    }

    pub fn max_abs(&self) -> f64 {
        self.m11
            .abs()
            .max(self.m12.abs())
            .max(self.m21.abs())
            .max(self.m22.abs())
    }
}

impl Mul for Mat2 {
    type Output = Mat2;

    fn mul(self, rhs: Mat2) -> Mat2 {
        Mat2::new(
            self.m11 * rhs.m11 + self.m12 * rhs.m21,
            self.m11 * rhs.m12 + self.m12 * rhs.m22,
            self.m21 * rhs.m11 + self.m22 * rhs.m21,
            self.m21 * rhs.m12 + self.m22 * rhs.m22,
        )
    }
}
