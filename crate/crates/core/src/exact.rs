//! Exact arithmetic in the ring `Z[i, 1/sqrt(2)]`, enough to sum stabiliser
//! amplitudes and basis coefficients without rounding.

use std::fmt;
use std::ops::{Add, AddAssign, Neg};

use num_complex::{Complex, Complex64};

use crate::pauli::Z4Phase;

/// Fixed denominator exponent: values are `(a + b sqrt 2) / 2^SCALE_BITS`.
const SCALE_BITS: u32 = 40;

/// Largest `m` accepted by [`ExactScalar::unit`], i.e. smallest magnitude
/// `2^(-m/2)` that is represented exactly.
pub const MAX_HALF_POWER: u32 = 2 * SCALE_BITS;

#[derive(Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct ExactScalar {
    a: Complex<i64>,
    b: Complex<i64>,
}

impl ExactScalar {
    pub fn zero() -> Self {
        Self::default()
    }

    /// `i^phase * 2^(-half_powers/2)`.
    pub fn unit(phase: Z4Phase, half_powers: u32) -> Self {
        assert!(half_powers <= MAX_HALF_POWER, "2^(-{half_powers}/2) below exact range");
        let (re, im) = phase.to_unit();
        let mag = 1i64 << (SCALE_BITS - half_powers.div_ceil(2));
        let c = Complex::new(re * mag, im * mag);
        if half_powers.is_multiple_of(2) {
            Self { a: c, b: Complex::new(0, 0) }
        } else {
            // 2^(-(2m+1)/2) = sqrt(2) * 2^(-(m+1))
            Self { a: Complex::new(0, 0), b: c }
        }
    }

    pub fn one() -> Self {
        Self::unit(Z4Phase::ONE, 0)
    }

    pub fn is_zero(&self) -> bool {
        self.a == Complex::new(0, 0) && self.b == Complex::new(0, 0)
    }

    /// Multiplication by a phase `i^k`.
    pub fn rotate(self, phase: Z4Phase) -> Self {
        let (re, im) = phase.to_unit();
        let u = Complex::new(re, im);
        Self { a: self.a * u, b: self.b * u }
    }

    /// Multiplication by `2^(-half_powers/2)`, exact when the result stays in range.
    pub fn scale_down(self, half_powers: u32) -> Self {
        let mut v = self;
        for _ in 0..half_powers {
            // x / sqrt 2 = (a + b sqrt 2)/sqrt 2 = b + (a/2) sqrt 2
            assert!(v.a.re % 2 == 0 && v.a.im % 2 == 0, "scale below exact range");
            v = Self { a: v.b, b: v.a / 2 };
        }
        v
    }

    pub fn to_complex(&self) -> Complex64 {
        let d = (SCALE_BITS as f64).exp2();
        let s = std::f64::consts::SQRT_2;
        Complex64::new(
            (self.a.re as f64 + s * self.b.re as f64) / d,
            (self.a.im as f64 + s * self.b.im as f64) / d,
        )
    }
}

impl Add for ExactScalar {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self { a: self.a + rhs.a, b: self.b + rhs.b }
    }
}

impl AddAssign for ExactScalar {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl Neg for ExactScalar {
    type Output = Self;
    fn neg(self) -> Self {
        Self { a: -self.a, b: -self.b }
    }
}

impl fmt::Debug for ExactScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({} + {} sqrt2)/2^{SCALE_BITS}", self.a, self.b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_powers_cancel() {
        // 1/sqrt2 * 1/sqrt2 - 1/2 = 0
        let x = ExactScalar::unit(Z4Phase::ONE, 1).scale_down(1);
        assert!((x + -ExactScalar::unit(Z4Phase::ONE, 2)).is_zero());
        // |+> amplitudes: 1/sqrt2 + i^2/sqrt2 = 0
        let y = ExactScalar::unit(Z4Phase::ONE, 1) + ExactScalar::unit(Z4Phase::MINUS_ONE, 1);
        assert!(y.is_zero());
        // sqrt 2 is not rational
        assert!(!(ExactScalar::unit(Z4Phase::ONE, 1) + -ExactScalar::unit(Z4Phase::ONE, 2)).is_zero());
    }

    #[test]
    fn decodes_to_float() {
        for m in 0..20 {
            for k in 0..4 {
                let ph = Z4Phase::new(k);
                let v = ExactScalar::unit(ph, m).to_complex();
                let want = ph.to_complex() * (-(m as f64) / 2.0).exp2();
                assert!((v - want).norm() < 1e-15);
            }
        }
        let r = ExactScalar::unit(Z4Phase::I, 3).rotate(Z4Phase::I).to_complex();
        assert!((r - Complex64::new(-(-1.5f64).exp2(), 0.0)).norm() < 1e-15);
    }
}
