//! Scalar abstraction: the whole library is generic over the working
//! floating-point type, instantiated as `f32` or `f64`.

use std::fmt;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar the library computes with.
///
/// `f64` is the working precision for the shipped experiments; `f32` is
/// supported for the core math.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + fmt::Debug
    + fmt::Display
    + fmt::LowerExp
    + Default
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from an `f64` constant (tolerances, catalog data).
    fn from_config(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 constant must convert")
    }

    /// Lossy conversion to `f64` for reporting and serialization.
    fn to_report(self) -> f64 {
        self.to_f64().expect("scalar must convert to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Shorthand used throughout the crate for embedding `f64` constants.
#[inline]
pub fn cst<F: Scalar>(x: f64) -> F {
    F::from_config(x)
}
