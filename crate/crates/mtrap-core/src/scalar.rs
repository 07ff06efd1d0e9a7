use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, NumCast};

/// Scalar type for all geometric computation: `f32` or `f64`.
///
/// Everything in this crate is generic over `Real`; the crate root exposes
/// `f64` aliases for the common case. `of` converts literal constants.
pub trait Real:
    Float + FromPrimitive + NumCast + Debug + Display + Default + Send + Sync + 'static
{
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    fn to_f64_lossy(self) -> f64 {
        NumCast::from(self).unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}
