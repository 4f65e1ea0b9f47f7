//! Scalar abstraction shared by every numeric routine in the crate.

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Floating-point scalar usable by the geometry, solver and metric code.
///
/// Implemented for `f32` and `f64`. Literals are written as `f64` and
/// converted with [`Real::lit`].
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + Send + Sync + std::fmt::Debug + 'static
{
    /// Per-element tolerance used when validating rotation matrices.
    const ORTHONORMAL_TOL: f64;

    /// Relative singular-value floor below which a point scatter is treated
    /// as rank deficient.
    const RANK_TOL: f64;

    #[inline]
    fn lit(value: f64) -> Self {
        Self::from_f64(value).expect("f64 literal fits the scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f64 {
    const ORTHONORMAL_TOL: f64 = 1e-6;
    const RANK_TOL: f64 = 1e-12;
}

impl Real for f32 {
    const ORTHONORMAL_TOL: f64 = 1e-5;
    const RANK_TOL: f64 = 1e-6;
}
