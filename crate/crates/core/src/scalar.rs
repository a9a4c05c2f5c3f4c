//! Scalar abstraction shared by the closed-form engine.

use std::fmt::{Debug, Display};

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Real floating-point type the closed-form engine is generic over.
///
/// Validation tolerances are quoted for `f64`; [`Real::tol`] rescales them to
/// the number of significant digits the type actually carries.
pub trait Real:
    Float + FloatConst + FromPrimitive + NumAssign + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    /// Rescales a tolerance quoted for `f64` to this precision.
    fn tol(f64_tol: f64) -> Self {
        let digits = Self::epsilon().to_f64().unwrap().ln() / f64::EPSILON.ln();
        Self::lit(f64_tol.powf(digits))
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

pub(crate) type C<T> = Complex<T>;

pub(crate) fn re<T: Real>(x: T) -> C<T> {
    Complex::new(x, T::zero())
}

pub(crate) fn im<T: Real>(x: T) -> C<T> {
    Complex::new(T::zero(), x)
}

/// Factorial as a float; arguments here never exceed a few dozen.
pub(crate) fn factorial<T: Real>(n: u32) -> T {
    (1..=n).fold(T::one(), |acc, i| acc * T::lit(i as f64))
}

/// Returns the real part after checking that the imaginary residue is negligible.
pub(crate) fn real_part<T: Real>(z: C<T>, what: &str) -> crate::Result<T> {
    let bound = T::tol(1e-10) * T::one().max(z.re.abs());
    if z.im.abs() > bound || !z.re.is_finite() {
        return Err(crate::Error::Validation(format!(
            "{what} is not real: {} + {}i",
            z.re, z.im
        )));
    }
    Ok(z.re)
}
