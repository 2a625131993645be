//! Unregularized third-order Newton method.
//!
//! Each iteration expands the objective to third order and moves to the
//! local minimum of that cubic, found by solving a small semidefinite
//! program. Alongside it the crate ships reference optimizers, benchmark
//! objectives and a Newton-fractal renderer.
//!
//! Numeric code is generic over [`Real`]; the `*F64` aliases below fix the
//! scalar to `f64`.

pub mod cubic;
pub mod error;
pub mod fractal;
pub mod localmin;
pub mod objectives;
pub mod optimizers;
pub mod scalar;
pub mod sdp;

pub use error::{Error, Result};
pub use scalar::Real;

pub type CubicModelF64 = cubic::CubicModel<f64>;
pub type SdpProblemF64 = sdp::SdpProblem<f64>;
pub type SdpSolutionF64 = sdp::SdpSolution<f64>;
pub type SolverConfigF64 = sdp::SolverConfig<f64>;
pub type LocalMinConfigF64 = localmin::LocalMinConfig<f64>;
pub type LocalMinResultF64 = localmin::LocalMinResult<f64>;
pub type OptimizerConfigF64 = optimizers::OptimizerConfig<f64>;
pub type OptimizerTraceF64 = optimizers::OptimizerTrace<f64>;
