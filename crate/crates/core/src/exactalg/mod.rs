//! Exact rational arithmetic, sparse multivariate polynomials and polynomial
//! matrices.
//!
//! Everything symbolic in the crate is built on [`MultiPoly`], a sparse map
//! from [`Monomial`] to [`Rational`] over a shared [`VarTable`]. The same
//! container is reused with `f64` and `Complex64` coefficients by the
//! numerical layers through the [`Coeff`] abstraction.

mod matrix;
mod order;
mod poly;

pub use matrix::{rank_exact, PolyMatrix, QMatrix};
pub use order::{MonomialOrder, OrderKind};
pub use poly::{poly_arith, ArithOp, Monomial, MultiPoly, Poly, VarTable};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use std::fmt::Debug;
use std::ops::{Add, Mul, Neg, Sub};

/// Arbitrary-precision fraction, always stored in lowest terms with a
/// positive denominator.
pub type Rational = BigRational;

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Lossy conversion used when handing exact data to floating-point code.
pub fn rat_to_f64(q: &Rational) -> f64 {
    q.to_f64().unwrap_or_else(|| {
        // numerator or denominator too large for f64; scale both down
        let shift = q.numer().bits().max(q.denom().bits()).saturating_sub(1000);
        let n = (q.numer() >> shift).to_f64().unwrap_or(f64::NAN);
        let d = (q.denom() >> shift).to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

/// Coefficient field of a [`Poly`].
pub trait Coeff:
    Clone
    + PartialEq
    + Debug
    + Send
    + Sync
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + 'static
{
    fn from_i64(n: i64) -> Self;

    fn from_rational(q: &Rational) -> Self;
}

impl Coeff for Rational {
    fn from_i64(n: i64) -> Self {
        int(n)
    }

    fn from_rational(q: &Rational) -> Self {
        q.clone()
    }
}

impl Coeff for f64 {
    fn from_i64(n: i64) -> Self {
        n as f64
    }

    fn from_rational(q: &Rational) -> Self {
        rat_to_f64(q)
    }
}

impl Coeff for Complex64 {
    fn from_i64(n: i64) -> Self {
        Complex64::new(n as f64, 0.0)
    }

    fn from_rational(q: &Rational) -> Self {
        Complex64::new(rat_to_f64(q), 0.0)
    }
}

/// Minimal commutative-ring interface shared by scalars and polynomials, so
/// coordinate changes such as moments to cumulants can be written once.
pub trait RingElem: Clone {
    fn ring_add(&self, other: &Self) -> Self;
    fn ring_sub(&self, other: &Self) -> Self;
    fn ring_mul(&self, other: &Self) -> Self;
    fn scale_int(&self, n: &BigInt) -> Self;
}

macro_rules! scalar_ring {
    ($t:ty) => {
        impl RingElem for $t {
            fn ring_add(&self, other: &Self) -> Self {
                self.clone() + other.clone()
            }
            fn ring_sub(&self, other: &Self) -> Self {
                self.clone() - other.clone()
            }
            fn ring_mul(&self, other: &Self) -> Self {
                self.clone() * other.clone()
            }
            fn scale_int(&self, n: &BigInt) -> Self {
                self.clone() * <$t as Coeff>::from_rational(&Rational::from_integer(n.clone()))
            }
        }
    };
}

scalar_ring!(Rational);
scalar_ring!(f64);
scalar_ring!(Complex64);

impl<C: Coeff> RingElem for Poly<C> {
    fn ring_add(&self, other: &Self) -> Self {
        self + other
    }
    fn ring_sub(&self, other: &Self) -> Self {
        self - other
    }
    fn ring_mul(&self, other: &Self) -> Self {
        self * other
    }
    fn scale_int(&self, n: &BigInt) -> Self {
        self.scale(&C::from_rational(&Rational::from_integer(n.clone())))
    }
}

/// Binomial coefficient as an exact integer.
pub fn binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

pub fn binomial_u64(n: u64, k: u64) -> u64 {
    binomial(n, k).to_u64().expect("binomial coefficient exceeds u64")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rationals_are_reduced() {
        let q = rat(6, -4);
        assert_eq!(q.numer(), &BigInt::from(-3));
        assert_eq!(q.denom(), &BigInt::from(2));
        assert_eq!(rat(1, 3) + rat(1, 6), rat(1, 2));
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial_u64(5, 2), 10);
        assert_eq!(binomial_u64(3, 4), 0);
        assert_eq!(binomial_u64(19, 2), 171);
    }

    #[test]
    fn huge_rational_to_f64() {
        let big = Rational::new(BigInt::from(10).pow(400) * 3, BigInt::from(10).pow(400));
        assert!((rat_to_f64(&big) - 3.0).abs() < 1e-12);
    }
}
