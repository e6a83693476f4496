//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real floating-point type the library can be instantiated with.
///
/// Tolerances throughout the crate are written for `f64`. [`Real::tol`]
/// widens them to a small multiple of machine epsilon when the type is
/// less precise, so the same code paths work for `f32`.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + LowerExp + Default + Send + Sync + Sum + 'static
{
    /// Converts a literal. Panics only for values the type cannot represent at all.
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    /// A tolerance of `base`, floored at `64·ε` of the scalar type.
    #[inline]
    fn tol(base: f64) -> Self {
        let floor = Self::epsilon() * Self::of(64.0);
        Self::of(base).max(floor)
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex number over a [`Real`] scalar.
pub type C<T> = Complex<T>;

#[inline]
pub(crate) fn cre<T: Real>(re: T) -> C<T> {
    C::new(re, T::zero())
}
