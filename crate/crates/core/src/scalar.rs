//! Scalar abstraction the whole pipeline is generic over.

use std::fmt::{Debug, Display};
use std::num::ParseFloatError;
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating-point scalar type: `f32` or `f64`.
///
/// The concrete aliases at the crate root fix `f64`, which is what the CLI
/// uses. `FromStr` is required so CSV ingestion parses at the native
/// precision of the chosen scalar instead of routing through `f64`.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + FromStr<Err = ParseFloatError>
    + Debug
    + Display
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Converts an `f64` constant (defaults, unit factors, tolerances) into `T`.
pub fn convert<T: Scalar>(value: f64) -> T {
    T::from_f64(value).expect("constant must be representable in the scalar type")
}
