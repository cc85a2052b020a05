//! Frame interpolation by optimal control of a divergence-free transport
//! equation.
//!
//! Given frames `u0` and `uT`, a flow `b` is sought such that transporting
//! `u0` along `b` reproduces `uT` at time `T`; the flow is regularized by
//! its `H1` seminorm and constrained to be divergence free. Intermediate
//! frames come from transporting `u0` forward and `uT` backward.
//!
//! Every numerical type is generic over [`Real`] (`f32` or `f64`);
//! the aliases at the crate root fix the scalar for convenience.

// `!(x > 0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod control;
pub mod error;
pub mod grid;
pub mod io;
pub mod metrics;
pub mod scalar;
pub mod stokes;
pub mod synthetic;
pub mod transport;

pub use control::{
    hierarchical_solve, interpolate_at, interpolate_frames, segregation_loop_i, segregation_loop_ii, LambdaSchedule,
    LoopKind, RunConfig,
};
pub use error::{Error, Result};
pub use grid::{BacktraceMap, ScalarField, TimeFlow, VectorField};
pub use metrics::{interpolation_error, EvalReport};
pub use scalar::Real;
pub use transport::Scheme;

pub type ScalarField64 = grid::ScalarField<f64>;
pub type ScalarField32 = grid::ScalarField<f32>;
pub type VectorField64 = grid::VectorField<f64>;
pub type VectorField32 = grid::VectorField<f32>;
pub type TimeFlow64 = grid::TimeFlow<f64>;
pub type TimeFlow32 = grid::TimeFlow<f32>;
pub type BacktraceMap64 = grid::BacktraceMap<f64>;
pub type SaddleSystem64 = stokes::SaddleSystem<f64>;
pub type StokesSolution64 = stokes::StokesSolution<f64>;
pub type StokesSolver64 = stokes::StokesSolver<f64>;
pub type LoopState64 = control::LoopState<f64>;
pub type Interpolation64 = control::Interpolation<f64>;
