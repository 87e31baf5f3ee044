//! Floating-point abstraction used by the numeric kernels.

use std::fmt::Debug;
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Real scalar the filtering and statistics code is generic over.
///
/// Implemented for `f32` and `f64`. The saliency pyramid runs in `f32` by
/// default, score statistics in `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Default + Send + Sync + 'static
{
    /// Lossy conversion from `f64`; literals in kernels go through this.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable")
    }

    #[inline]
    fn from_byte(v: u8) -> Self {
        Self::lit(f64::from(v))
    }

    #[inline]
    fn from_len(n: usize) -> Self {
        Self::from_usize(n).expect("length representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Rounds half away from zero and saturates into `0..=255`.
///
/// Every 8-bit quantization in the crate goes through here.
#[inline]
pub fn quantize_u8<T: Scalar>(v: T) -> u8 {
    let r = v.as_f64().round();
    if r.is_nan() || r <= 0.0 {
        0
    } else if r >= 255.0 {
        255
    } else {
        r as u8
    }
}
