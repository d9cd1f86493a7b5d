//! Exponential sums over discrete quadratic surfaces.
//!
//! The crate evaluates `F_a(α, θ) = Σ a(n) e(αR(n) + θ·n)` for an integer
//! quadratic form `R`, splits the circle into smooth major and minor arc
//! pieces, and measures moments and level sets of `|F_a|` on torus grids.
//!
//! Analytic code is generic over [`Real`]; the aliases below fix `f64`
//! (and `f32` where single precision is useful for large grids).

pub mod arcs;
pub mod bump;
pub mod error;
pub mod expsum;
pub mod moments;
pub mod numtheory;
pub mod quadform;
pub mod quadrature;
pub mod scalar;
pub mod scaling;

pub use error::{Error, Result};
pub use quadform::{QuadraticForm, RationalDiagonalization, Signature};
pub use scalar::Real;

pub type Coefficients = expsum::CoefficientSequence<f64>;
pub type Weight = expsum::SmoothWeight<f64>;
pub type Grid = expsum::TorusGrid;
pub type Field = expsum::GridField<f64>;
pub type Mollifiers = arcs::MollifierFamily<f64>;
pub type Bump = bump::SmoothBump<f64>;

pub type Coefficients32 = expsum::CoefficientSequence<f32>;
pub type Weight32 = expsum::SmoothWeight<f32>;
pub type Field32 = expsum::GridField<f32>;
pub type Mollifiers32 = arcs::MollifierFamily<f32>;
