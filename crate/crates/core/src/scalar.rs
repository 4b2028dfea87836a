//! Floating-point abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};

use nalgebra::RealField;

/// Real scalar usable throughout the toolkit: `f32` or `f64`.
///
/// Tolerances are written as `f64` literals and converted with [`Scalar::lit`];
/// results that leave the crate (JSON, CSV, the conic solver) go through
/// [`Scalar::as_f64`].
pub trait Scalar: RealField + Copy + Debug + Display + Send + Sync + 'static {
    fn lit(x: f64) -> Self {
        nalgebra::convert(x)
    }

    fn as_f64(self) -> f64 {
        nalgebra::try_convert(self).expect("scalar representable as f64")
    }

    fn eps() -> Self {
        Self::default_epsilon()
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
