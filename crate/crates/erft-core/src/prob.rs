//! Exact probability arithmetic.
//!
//! Every probability produced by fair coins and 50-50 routing is a dyadic
//! rational (denominator a power of two), and the engines rely on exact
//! equality rather than float tolerances. Conditioning can introduce odd
//! denominators for circuits with cascaded splitters, so the representation
//! is a full rational; dyadicity is checked, not assumed.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, Mul, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// An exact probability in `[0, 1]` (bounds enforced by construction sites,
/// not by the type).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Prob(BigRational);

impl Prob {
    pub fn zero() -> Self {
        Prob(BigRational::zero())
    }

    pub fn one() -> Self {
        Prob(BigRational::one())
    }

    pub fn half() -> Self {
        Prob::ratio(1, 2)
    }

    /// `numer / denom`, reduced.
    pub fn ratio(numer: u64, denom: u64) -> Self {
        assert!(denom != 0, "probability denominator must be nonzero");
        Prob(BigRational::new(BigInt::from(numer), BigInt::from(denom)))
    }

    /// `2^-k`, the weight of one outcome of `k` fair bits.
    pub fn pow2_neg(k: u32) -> Self {
        Prob(BigRational::new(BigInt::one(), BigInt::one() << k))
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.0.is_one()
    }

    /// True when the reduced denominator is a power of two.
    pub fn is_dyadic(&self) -> bool {
        let denom = self.0.denom().magnitude();
        denom.count_ones() == 1
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().expect("probability fits in f64")
    }

    /// Absolute difference, used by total-variation distances.
    pub fn abs_diff(&self, other: &Prob) -> Prob {
        Prob((&self.0 - &other.0).abs())
    }

    /// Canonical `"num/den"` rendering, e.g. `"1/1"`, `"3/8"`.
    pub fn num_den_string(&self) -> String {
        format!("{}/{}", self.0.numer(), self.0.denom())
    }
}

impl fmt::Display for Prob {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.num_den_string())
    }
}

impl Add for Prob {
    type Output = Prob;
    fn add(self, rhs: Prob) -> Prob {
        Prob(self.0 + rhs.0)
    }
}

impl<'a> Add<&'a Prob> for Prob {
    type Output = Prob;
    fn add(self, rhs: &'a Prob) -> Prob {
        Prob(self.0 + &rhs.0)
    }
}

impl AddAssign<&Prob> for Prob {
    fn add_assign(&mut self, rhs: &Prob) {
        self.0 += &rhs.0;
    }
}

impl Sub for Prob {
    type Output = Prob;
    fn sub(self, rhs: Prob) -> Prob {
        Prob(self.0 - rhs.0)
    }
}

impl Mul for Prob {
    type Output = Prob;
    fn mul(self, rhs: Prob) -> Prob {
        Prob(self.0 * rhs.0)
    }
}

impl<'a> Mul<&'a Prob> for &Prob {
    type Output = Prob;
    fn mul(self, rhs: &'a Prob) -> Prob {
        Prob(&self.0 * &rhs.0)
    }
}

impl Div for Prob {
    type Output = Prob;
    fn div(self, rhs: Prob) -> Prob {
        assert!(!rhs.0.is_zero(), "division by zero probability");
        Prob(self.0 / rhs.0)
    }
}

impl<'a> Div<&'a Prob> for &Prob {
    type Output = Prob;
    fn div(self, rhs: &'a Prob) -> Prob {
        assert!(!rhs.0.is_zero(), "division by zero probability");
        Prob(&self.0 / &rhs.0)
    }
}

impl Sum for Prob {
    fn sum<I: Iterator<Item = Prob>>(iter: I) -> Prob {
        iter.fold(Prob::zero(), |acc, p| acc + p)
    }
}

impl<'a> Sum<&'a Prob> for Prob {
    fn sum<I: Iterator<Item = &'a Prob>>(iter: I) -> Prob {
        iter.fold(Prob::zero(), |mut acc, p| {
            acc += p;
            acc
        })
    }
}
