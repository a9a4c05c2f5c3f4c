//! Phase sensitivity of a Mach-Zehnder interferometer fed with a coherent
//! state and a heralded non-Gaussian squeezed vacuum.
//!
//! The heralded state, its success probability, the output moments and the
//! parity signal are all Gaussian exponentials in auxiliary variables; the
//! Fock structure is recovered by differentiating at the origin with
//! truncated power series ([`jet`]). [`oracle`] recomputes the same
//! quantities by brute force in the Fock basis.
//!
//! The closed-form engine is generic over [`Real`] (`f32` or `f64`); the
//! aliases below fix it to `f64`.

// `!(x >= 0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod gaussian;
pub mod herald;
pub mod jet;
pub mod moments;
pub mod optimize;
pub mod oracle;
pub mod paritydet;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Polynomial = jet::TruncatedPolynomial<f64>;
pub type Form = gaussian::GaussianExponentialForm<f64>;
pub type Symplectic = gaussian::SymplecticMatrix<f64>;
pub type Squeezed = gaussian::SqueezedSource<f64>;
pub type Coherent = gaussian::CoherentSource<f64>;
pub type Operation = herald::OperationSpec<f64>;
pub type Heralded = herald::HeraldedForm<f64>;
pub type Mgf = moments::MgfForm<f64>;
pub type Parity = paritydet::ParityForm<f64>;
pub type Sensitivity = optimize::SensitivityResult<f64>;
pub type Grid = optimize::SweepGrid<f64>;
