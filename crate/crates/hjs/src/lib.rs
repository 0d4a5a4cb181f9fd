//! One-dimensional Hamilton-Jacobi-Schrodinger simulation.
//!
//! A state is either an amplitude/action pair `(R, S)` or a complex field
//! `psi = R exp(iS/kappa)` with a complex deformation parameter `kappa`.
//! The crate evolves both representations, maps between them, and measures
//! the moment and probability structure of the result.
//!
//! Everything is generic over the float type ([`Real`], implemented for
//! `f32` and `f64`); the aliases at the crate root fix it to `f64`.

// `!(x > 0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod embedding;
pub mod error;
pub mod grid;
pub mod observables;
pub mod oscillator_benchmark;
pub mod scalar;
pub mod solver_linear;
pub mod solver_madelung;
pub mod state;
pub mod trajectory;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Grid = grid::Grid<f64>;
pub type Kappa = state::Kappa<f64>;
pub type EnsembleState = state::EnsembleState<f64>;
pub type WaveField = state::WaveField<f64>;
pub type Potential = state::Potential<f64>;
pub type MomentSet = observables::MomentSet<f64>;
pub type PhaseAnchor = embedding::PhaseAnchor<f64>;
pub type LinearRunConfig = solver_linear::LinearRunConfig<f64>;
pub type MadelungRunConfig = solver_madelung::MadelungRunConfig<f64>;
pub type BenchmarkParams = oscillator_benchmark::BenchmarkParams<f64>;
pub type BenchmarkRun = oscillator_benchmark::BenchmarkRun<f64>;
pub type ComparisonReport = oscillator_benchmark::ComparisonReport<f64>;
pub type Trajectory<S> = trajectory::Trajectory<f64, S>;
pub type Complex = num_complex::Complex<f64>;
