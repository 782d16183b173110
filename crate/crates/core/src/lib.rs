//! Damped semilinear wave equations `u_tt - Δu + f(u) + g(u_t) = 0` with
//! power-law sources and monotone damping.
//!
//! The crate turns the local-existence-and-patching construction into a
//! pipeline: solve with a truncated source on balls ([`solver`]), cut the
//! initial data to each ball ([`cutting`]), glue the ball solutions along
//! backward cones ([`patching`]), and check the properties the construction
//! relies on ([`verification`]). [`phase`] sweeps the exponent plane for
//! blow-up.
//!
//! Numerics are generic over [`Real`]; the `*64`/`*32` aliases below fix the
//! scalar type.

pub mod cutting;
pub mod data;
pub mod error;
pub mod grid;
pub mod nonlinearity;
pub mod patching;
pub mod phase;
pub mod quadrature;
pub mod scalar;
pub mod smooth;
pub mod solver;
pub mod verification;

pub use error::{Error, Result};
pub use grid::{Field, Geometry, GridSpec};
pub use nonlinearity::{DampingSpec, Sign, SourceSpec};
pub use scalar::Real;
pub use solver::{Observers, Outcome, Solver, State, Trajectory};

pub type Field64 = grid::Field<f64>;
pub type Field32 = grid::Field<f32>;
pub type GridSpec64 = grid::GridSpec<f64>;
pub type GridSpec32 = grid::GridSpec<f32>;
pub type State64 = solver::State<f64>;
pub type State32 = solver::State<f32>;
pub type Trajectory64 = solver::Trajectory<f64>;
pub type Trajectory32 = solver::Trajectory<f32>;
pub type SourceSpec64 = nonlinearity::SourceSpec<f64>;
pub type DampingSpec64 = nonlinearity::DampingSpec<f64>;
pub type Solver64 = solver::Solver<f64>;
pub type Solver32 = solver::Solver<f32>;
