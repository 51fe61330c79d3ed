//! Scalar abstraction for the probability formulas.
//!
//! The closed forms are written once against [`Probability`] and evaluated
//! either in floating point (`f32`/`f64`) or exactly over `BigRational`.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

pub trait Probability:
    Clone
    + Debug
    + PartialOrd
    + Zero
    + One
    + std::ops::Add<Output = Self>
    + std::ops::Sub<Output = Self>
    + std::ops::Mul<Output = Self>
    + std::ops::Div<Output = Self>
{
    /// `num / den` in this scalar type. `den` must be nonzero.
    fn ratio(num: u64, den: u64) -> Self;

    fn to_f64(&self) -> f64;

    fn powu(&self, exp: u64) -> Self {
        let mut base = self.clone();
        let mut acc = Self::one();
        let mut e = exp;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base.clone();
            }
            base = base.clone() * base;
            e >>= 1;
        }
        acc
    }
}

impl Probability for f64 {
    fn ratio(num: u64, den: u64) -> Self {
        num as f64 / den as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn powu(&self, exp: u64) -> Self {
        self.powf(exp as f64)
    }
}

impl Probability for f32 {
    fn ratio(num: u64, den: u64) -> Self {
        (num as f64 / den as f64) as f32
    }

    fn to_f64(&self) -> f64 {
        *self as f64
    }

    fn powu(&self, exp: u64) -> Self {
        self.powf(exp as f32)
    }
}

impl Probability for BigRational {
    fn ratio(num: u64, den: u64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn to_f64(&self) -> f64 {
        num_traits::ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_ratio_reduces() {
        let r = BigRational::ratio(200, 1000);
        assert_eq!(r, BigRational::ratio(1, 5));
        assert_eq!(r.to_f64(), 0.2);
    }

    #[test]
    fn powu_agrees_across_scalars() {
        let exact = BigRational::ratio(2, 3).powu(5);
        assert_eq!(exact, BigRational::ratio(32, 243));
        assert!((f64::ratio(2, 3).powu(5) - 32.0 / 243.0).abs() < 1e-15);
        assert!((f32::ratio(2, 3).powu(5) - 32.0 / 243.0).abs() < 1e-6);
    }
}
