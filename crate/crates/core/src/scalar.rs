//! Scalar abstraction for sample values.
//!
//! Sample-valued data (traces, trends, rate tracks) is generic over [`Real`],
//! implemented for `f32` and `f64`. Time bases, rates and filter coefficients
//! are always `f64`; coefficient-sensitive stages (IIR filtering, spline
//! fitting, FFTs) widen to `f64` internally and narrow on output.

use std::fmt::{Debug, Display};

/// Floating-point sample type: f32 or f64.
pub trait Real:
    num_traits::Float
    + num_traits::FromPrimitive
    + num_traits::ToPrimitive
    + num_traits::NumAssign
    + std::iter::Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from an `f64` literal or intermediate.
    fn of(x: f64) -> Self;

    /// Widen to `f64`.
    fn f64(self) -> f64;
}

impl Real for f32 {
    #[inline]
    fn of(x: f64) -> Self {
        x as f32
    }
    #[inline]
    fn f64(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    #[inline]
    fn of(x: f64) -> Self {
        x
    }
    #[inline]
    fn f64(self) -> f64 {
        self
    }
}

pub(crate) fn widen<T: Real>(x: &[T]) -> Vec<f64> {
    x.iter().map(|v| v.f64()).collect()
}

pub(crate) fn narrow<T: Real>(x: Vec<f64>) -> Vec<T> {
    x.into_iter().map(T::of).collect()
}

/// Shortest round-trip decimal; `NaN` for NaN.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else {
        format!("{v}")
    }
}

/// Serde adapter: non-finite `f64` is written as `null`, `null` reads back as NaN.
pub mod nullable_f64 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}
