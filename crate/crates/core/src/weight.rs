//! Tropical semiring weights.
//!
//! A weight is a non-negative cost, conventionally `-ln p` for a probability
//! `p`, or `+inf` for "impossible". `plus` is `min` (choose the better of two
//! alternatives) and `times` is `+` (accumulate cost along a path).

use std::cmp::Ordering;
use std::fmt;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar usable as the carrier of a tropical weight.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + fmt::Debug + fmt::Display + Send + Sync + 'static
{
    /// Lossy conversion from `f64`, used when reading text formats.
    fn from_f64_lossy(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).unwrap_or_else(Self::nan)
    }

    fn to_f64_lossy(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// A value of the tropical semiring `(R+ ∪ {+inf}, min, +, +inf, 0)`.
#[derive(Clone, Copy, PartialEq)]
pub struct Tropical<T: Scalar>(T);

impl<T: Scalar> Tropical<T> {
    /// Builds a weight, rejecting negative values and NaN.
    pub fn new(value: T) -> Option<Self> {
        if value.is_nan() || value < T::zero() {
            None
        } else {
            Some(Tropical(value))
        }
    }

    /// The additive identity, `+inf`.
    pub fn zero() -> Self {
        Tropical(T::infinity())
    }

    /// The multiplicative identity, `0`.
    pub fn one() -> Self {
        Tropical(T::zero())
    }

    /// Weight of an event with probability `p`, i.e. `-ln p`.
    pub fn from_probability(p: f64) -> Option<Self> {
        if !(p > 0.0 && p <= 1.0) {
            return None;
        }
        let v = -p.ln();
        // -ln(1) is -0.0
        Self::new(T::from_f64_lossy(if v == 0.0 { 0.0 } else { v }))
    }

    pub fn value(self) -> T {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0.is_infinite()
    }

    pub fn is_one(self) -> bool {
        self.0 == T::zero()
    }

    pub fn plus(self, other: Self) -> Self {
        if other.0 < self.0 {
            other
        } else {
            self
        }
    }

    pub fn times(self, other: Self) -> Self {
        Tropical(self.0 + other.0)
    }

    pub fn approx_eq(self, other: Self, tol: T) -> bool {
        if self.is_zero() || other.is_zero() {
            return self.is_zero() && other.is_zero();
        }
        (self.0 - other.0).abs() <= tol
    }
}

impl<T: Scalar> Default for Tropical<T> {
    fn default() -> Self {
        Self::one()
    }
}

impl<T: Scalar> Eq for Tropical<T> {}

impl<T: Scalar> PartialOrd for Tropical<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

// NaN is excluded by construction, so the order is total.
impl<T: Scalar> Ord for Tropical<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.partial_cmp(&other.0).unwrap_or(Ordering::Equal)
    }
}

impl<T: Scalar> fmt::Debug for Tropical<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Tropical({})", self.0)
    }
}

impl<T: Scalar> fmt::Display for Tropical<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            f.write_str("inf")
        } else {
            fmt::Display::fmt(&self.0, f)
        }
    }
}
