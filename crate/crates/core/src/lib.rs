//! Numerical simulator for non-adiabatic holonomic quantum gates on
//! triple-quantum-dot charge qubits.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`] builds the tight-binding ring, Λ-system and two-qubit
//!   Hamiltonians as dense complex matrices.
//! * [`propagate`] turns time-dependent Hamiltonians into propagators
//!   (fourth-order Magnus with step doubling, a brute-force midpoint oracle,
//!   and the closed-form square-pulse propagator).
//! * [`holonomy`] evolves a computational subspace, accumulates the
//!   connection and dynamical-phase matrices, extracts the holonomy and
//!   synthesises single-qubit gates.
//! * [`twoqubit`] solves the two-pulse entangler schedule, assembles the
//!   gate and evaluates its concurrence.
//! * [`noise`] propagates density matrices under site dephasing and
//!   evaluates gate fidelities.
//!
//! All numerics are generic over the real scalar `T: Real` (`f32` or `f64`);
//! the `*64` aliases below fix `T = f64`, which is what the tolerances in the
//! test-suite are calibrated for.

pub mod error;
pub mod holonomy;
pub mod linalg;
pub mod model;
pub mod noise;
pub mod propagate;
pub mod twoqubit;

use nalgebra::{DMatrix, RealField};
use num_complex::Complex;

pub use error::{Error, Result};

/// Real scalar the simulator is generic over.
pub trait Real: RealField + Copy + num_traits::ToPrimitive + Send + Sync + 'static {}

impl Real for f32 {}
impl Real for f64 {}

/// Dense complex matrix over the scalar `T`.
pub type CMatrix<T> = DMatrix<Complex<T>>;

pub type C64 = Complex<f64>;
pub type CMatrix64 = CMatrix<f64>;

pub type DotNetwork64 = model::DotNetwork<f64>;
pub type PulseEnvelope64 = model::PulseEnvelope<f64>;
pub type LambdaParams64 = model::LambdaParams<f64>;
pub type TwoQubitParams64 = model::TwoQubitParams<f64>;
pub type IntegratorConfig64 = propagate::IntegratorConfig<f64>;
pub type PropagatorResult64 = propagate::PropagatorResult<f64>;
pub type Drive64 = propagate::Drive<f64>;
pub type HolonomyConfig64 = holonomy::HolonomyConfig<f64>;
pub type SubspaceEvolution64 = holonomy::SubspaceEvolution<f64>;
pub type GateReport64 = holonomy::GateReport<f64>;
pub type LambdaLoop64 = holonomy::LambdaLoop<f64>;
pub type PulseSchedule64 = twoqubit::PulseSchedule<f64>;
pub type EntanglingGateReport64 = twoqubit::EntanglingGateReport<f64>;
pub type SweepGrid64 = twoqubit::SweepGrid<f64>;
pub type ConcurrenceTable64 = twoqubit::ConcurrenceTable<f64>;
pub type NoiseSpec64 = noise::NoiseSpec<f64>;
pub type GateProtocol64 = noise::GateProtocol<f64>;
pub type FidelityCurve64 = noise::FidelityCurve<f64>;
pub type FidelitySurface64 = noise::FidelitySurface<f64>;

/// Converts an `f64` literal into the working scalar.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    nalgebra::convert(x)
}

/// Converts a working scalar to `f64` (for reporting and serialisation).
#[inline]
pub fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}
