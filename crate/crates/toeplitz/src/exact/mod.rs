//! Exact rationals, multivariate polynomials and rational functions.

pub mod gcd;
pub mod linalg;
pub mod poly;
pub mod rat;
pub mod var;

pub use gcd::gcd;
pub use poly::{Monomial, MultiPoly};
pub use rat::MultiRat;
pub use var::{Family, VarId};

use num::{One, Zero};

/// Arbitrary-precision rational.
pub type Rational = num::BigRational;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExactError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("value not determined: {0}")]
    Unassigned(String),
    #[error("parse error: {0}")]
    Parse(String),
}

/// Minimal commutative ring interface shared by the coefficient types.
pub trait Ring: Clone {
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    fn scale(&self, c: &Rational) -> Self;
    fn vanishes(&self) -> bool;
    fn zero_like(&self) -> Self;
    fn one_like(&self) -> Self;
}

/// Rings in which nonzero elements may be inverted (possibly failing).
pub trait Field: Ring {
    type Error;
    fn inv(&self) -> Result<Self, Self::Error>;
    fn div(&self, o: &Self) -> Result<Self, Self::Error> {
        Ok(self.mul(&o.inv()?))
    }
}

impl Ring for Rational {
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn scale(&self, c: &Rational) -> Self {
        self * c
    }
    fn vanishes(&self) -> bool {
        Zero::is_zero(self)
    }
    fn zero_like(&self) -> Self {
        Rational::zero()
    }
    fn one_like(&self) -> Self {
        Rational::one()
    }
}

impl Field for Rational {
    type Error = ExactError;
    fn inv(&self) -> Result<Self, ExactError> {
        if Zero::is_zero(self) {
            Err(ExactError::DivisionByZero)
        } else {
            Ok(self.recip())
        }
    }
}

impl Ring for MultiPoly {
    fn add(&self, o: &Self) -> Self {
        MultiPoly::add(self, o)
    }
    fn sub(&self, o: &Self) -> Self {
        MultiPoly::sub(self, o)
    }
    fn mul(&self, o: &Self) -> Self {
        MultiPoly::mul(self, o)
    }
    fn neg(&self) -> Self {
        MultiPoly::neg(self)
    }
    fn scale(&self, c: &Rational) -> Self {
        MultiPoly::scale(self, c)
    }
    fn vanishes(&self) -> bool {
        MultiPoly::is_zero(self)
    }
    fn zero_like(&self) -> Self {
        MultiPoly::zero()
    }
    fn one_like(&self) -> Self {
        MultiPoly::one()
    }
}

/// Parse `"p/q"` or an integer.
pub fn parse_rational(s: &str) -> Result<Rational, ExactError> {
    let s = s.trim();
    let bad = || ExactError::Parse(s.to_string());
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let n: num::BigInt = n.parse().map_err(|_| bad())?;
    let d: num::BigInt = d.parse().map_err(|_| bad())?;
    if Zero::is_zero(&d) {
        return Err(ExactError::DivisionByZero);
    }
    Ok(Rational::new(n, d))
}

/// Canonical `"p/q"` text (integers print without a denominator).
pub fn rational_text(c: &Rational) -> String {
    poly::fmt_rational(c)
}

/// Shorthand for `Rational::new(n, d)` with machine integers.
pub fn q(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}
