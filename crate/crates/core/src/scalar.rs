//! Numeric abstraction shared by the path, payoff and search code.
//!
//! Everything that manipulates distances or payoffs is written against
//! [`Scalar`], so the same code runs in `f64` for production and in exact
//! rationals ([`num_rational::BigRational`]) for verification.

use std::fmt::Debug;

use num_traits::{FromPrimitive, Num, ToPrimitive};

pub trait Scalar: Num + Clone + PartialOrd + Debug + FromPrimitive + ToPrimitive {
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    fn from_months(months: u32) -> Self {
        Self::from_u32(months).expect("month count representable in scalar type")
    }

    /// Lossy conversion used for reporting and tolerance checks.
    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn max_of(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }
}

impl<T> Scalar for T where T: Num + Clone + PartialOrd + Debug + FromPrimitive + ToPrimitive {}

/// Relative closeness in `f64`, used to flag near-ties in search traces.
pub fn nearly_equal<T: Scalar>(a: &T, b: &T, rel: f64) -> bool {
    if a == b {
        return true;
    }
    let (x, y) = (a.to_f64_lossy(), b.to_f64_lossy());
    (x - y).abs() <= rel * x.abs().max(y.abs()).max(f64::MIN_POSITIVE)
}
