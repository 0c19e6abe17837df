//! Floating point abstraction shared by the tracking math.

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};
use std::fmt::{Debug, Display};

/// Real scalar used by projections, decaying maps and trackers.
///
/// Implemented for `f32` and `f64`. Timestamps stay integer microseconds
/// everywhere; only derived quantities (seconds, pixels, velocities) are `T`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumAssign + Default + Debug + Display + Send + Sync + 'static
{
    #[inline]
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("f64 is representable in every Scalar")
    }

    #[inline]
    fn of_usize(v: usize) -> Self {
        Self::from_usize(v).expect("usize is representable in every Scalar")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Microseconds to seconds.
    #[inline]
    fn from_us(us: u64) -> Self {
        Self::of(us as f64 * 1e-6)
    }

    /// Signed microsecond difference `a - b` in seconds.
    #[inline]
    fn us_delta(a: u64, b: u64) -> Self {
        Self::of((a as i128 - b as i128) as f64 * 1e-6)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
