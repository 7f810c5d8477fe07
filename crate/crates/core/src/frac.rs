//! Exact nonnegative rationals used for every counted frequency, density,
//! and bound in the crate. Floats only ever appear after a root is taken.

use std::fmt;
use std::ops::{Add, Div, Mul, Sub};

use num_rational::Ratio;
use serde::{Serialize, Serializer};

/// A nonnegative rational held in lowest terms.
///
/// Counts in this crate are bounded by 2^96 (tuple spaces up to 2^{4*24}),
/// so `u128` arithmetic never overflows for the quantities we form.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Frac(Ratio<u128>);

impl Frac {
    pub fn new(num: u128, den: u128) -> Self {
        assert!(den != 0, "zero denominator");
        Frac(Ratio::new(num, den))
    }

    pub fn zero() -> Self {
        Frac(Ratio::new(0, 1))
    }

    pub fn one() -> Self {
        Frac(Ratio::new(1, 1))
    }

    pub fn from_int(v: u128) -> Self {
        Frac(Ratio::new(v, 1))
    }

    pub fn num(&self) -> u128 {
        *self.0.numer()
    }

    pub fn den(&self) -> u128 {
        *self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.num() == 0
    }

    pub fn pow(self, e: u32) -> Self {
        Frac(self.0.pow(e as i32))
    }

    /// Saturating subtraction: returns zero instead of going negative.
    pub fn saturating_sub(self, rhs: Self) -> Self {
        if self.0 <= rhs.0 {
            Frac::zero()
        } else {
            Frac(self.0 - rhs.0)
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.num() as f64 / self.den() as f64
    }
}

impl Add for Frac {
    type Output = Frac;
    fn add(self, rhs: Frac) -> Frac {
        Frac(self.0 + rhs.0)
    }
}

impl Sub for Frac {
    type Output = Frac;
    fn sub(self, rhs: Frac) -> Frac {
        Frac(self.0 - rhs.0)
    }
}

impl Mul for Frac {
    type Output = Frac;
    fn mul(self, rhs: Frac) -> Frac {
        Frac(self.0 * rhs.0)
    }
}

impl Div for Frac {
    type Output = Frac;
    fn div(self, rhs: Frac) -> Frac {
        assert!(!rhs.is_zero(), "division by zero");
        Frac(self.0 / rhs.0)
    }
}

impl fmt::Display for Frac {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num(), self.den())
    }
}

impl Serialize for Frac {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduces_and_compares() {
        let a = Frac::new(7, 4);
        let b = Frac::new(14, 8);
        assert_eq!(a, b);
        assert_eq!(a.to_string(), "7/4");
        assert!(Frac::new(1, 2) < Frac::new(2, 3));
    }

    #[test]
    fn arithmetic() {
        let e = Frac::new(1, 4);
        assert_eq!(e.pow(4), Frac::new(1, 256));
        assert_eq!(Frac::new(4, 1) / Frac::new(1, 4), Frac::from_int(16));
        assert_eq!(
            Frac::new(3, 4).saturating_sub(Frac::one()),
            Frac::zero()
        );
    }
}
