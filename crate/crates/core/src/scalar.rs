use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive};

/// Floating-point element type for feature matrices and codebooks.
///
/// All distance and inertia accumulation is carried out in `f64` regardless
/// of the storage type, so `widen`/`narrow` are the only conversions the
/// algorithms need.
pub trait Scalar:
    Float + FromPrimitive + Debug + Display + Default + Sum + Send + Sync + 'static
{
    /// Lossless conversion into the accumulation type.
    fn widen(self) -> f64;

    /// Round an accumulated value back into storage precision.
    fn narrow(value: f64) -> Self;
}

impl Scalar for f32 {
    #[inline]
    fn widen(self) -> f64 {
        f64::from(self)
    }

    #[inline]
    fn narrow(value: f64) -> Self {
        value as f32
    }
}

impl Scalar for f64 {
    #[inline]
    fn widen(self) -> f64 {
        self
    }

    #[inline]
    fn narrow(value: f64) -> Self {
        value
    }
}

/// Squared Euclidean distance accumulated in `f64`, summed in index order.
#[inline]
pub fn squared_distance<T: Scalar>(a: &[T], b: &[T]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = x.widen() - y.widen();
            d * d
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn narrow_rounds_to_nearest() {
        assert_eq!(f32::narrow(0.1), 0.1f32);
        assert_eq!(f64::narrow(0.1), 0.1);
        assert_eq!(1.5f32.widen(), 1.5);
    }

    #[test]
    fn distance_matches_hand_sum() {
        assert_eq!(squared_distance(&[0.0f32, 3.0], &[4.0, 0.0]), 25.0);
        assert_eq!(squared_distance::<f64>(&[], &[]), 0.0);
    }
}
