//! Scalar abstraction shared by every numerical routine in the crate.
//!
//! All math is written against [`Scalar`], which is satisfied by `f32` and
//! `f64`. Rational types are not supported: eigenvalues, square roots and
//! trigonometric eigenfunctions have no exact rational representation.

use nalgebra::RealField;
use num_traits::ToPrimitive;

/// Real floating-point scalar usable by the bound computations.
pub trait Scalar: RealField + Copy + ToPrimitive + Send + Sync + 'static {
    /// Converts an `f64` literal into `Self`, rounding if necessary.
    #[inline]
    fn lit(x: f64) -> Self {
        nalgebra::convert(x)
    }

    /// Converts an index or count into `Self`.
    #[inline]
    fn from_index(k: usize) -> Self {
        nalgebra::convert(k as f64)
    }

    #[inline]
    fn as_f64(self) -> f64 {
        // Every RealField we admit is a primitive float.
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Machine epsilon of the underlying representation.
    #[inline]
    fn eps() -> Self {
        Self::default_epsilon()
    }

    #[inline]
    fn infinity() -> Self {
        Self::lit(f64::INFINITY)
    }

    #[inline]
    fn is_finite_value(self) -> bool {
        self.as_f64().is_finite()
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literal_round_trip() {
        assert_eq!(f64::lit(0.25), 0.25);
        assert_eq!(f32::lit(0.5), 0.5f32);
        assert_eq!(f64::from_index(7), 7.0);
        assert!(f64::infinity().as_f64().is_infinite());
        assert!(!f64::infinity().is_finite_value());
    }
}
