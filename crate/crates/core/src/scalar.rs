//! Scalar abstraction shared by the Gaussian-state algebra and the
//! quadrature statistics.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar: `f32` or `f64`.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + NumAssign + Default + Debug + Display + Send + Sync + 'static
{
    /// Lowest eigenvalue of `cov + iΩ` still accepted as physical.
    const PHYSICALITY_TOL: f64;

    /// Lossless-enough conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {
    const PHYSICALITY_TOL: f64 = 1e-5;
}

impl Real for f64 {
    const PHYSICALITY_TOL: f64 = 1e-12;
}
