//! Scalar abstraction shared by every numeric routine in the crate.

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real scalar type the solvers are generic over.
///
/// Anything that is a nalgebra [`RealField`] and converts to and from
/// primitive floats qualifies; `f64` and `f32` are provided.
pub trait Real: RealField + Copy + FromPrimitive + ToPrimitive + Send + Sync {
    /// Converts an `f64` literal into this type.
    #[inline]
    fn lit(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).expect("finite literal")
    }

    /// Lossy conversion back to `f64`, for reporting and I/O.
    #[inline]
    fn as_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }

    /// Maps a tolerance tuned for double precision onto this type.
    ///
    /// Tolerances in the default configurations are stated for `f64`; lower
    /// precision types loosen them so the same defaults stay attainable.
    fn tolerance(double_precision: f64) -> Self;
}

impl Real for f64 {
    #[inline]
    fn tolerance(double_precision: f64) -> Self {
        double_precision
    }
}

impl Real for f32 {
    #[inline]
    fn tolerance(double_precision: f64) -> Self {
        (double_precision * 1e4).min(1e-1) as f32
    }
}
