//! Solver for one-dimensional Schrödinger equations carrying a dissipative
//! memory term.
//!
//! The wavefunction evolves under `H = -(hbar^2/2m) d_xx + V(x) + W(x, t)`,
//! where the work field `W` accumulates a model-dependent integrand of the
//! local flow velocity and its time derivative:
//!
//! - [`grid`]: periodic grid and spectral derivatives
//! - [`madelung`]: density, velocity and acceleration fields
//! - [`dissipation`]: the radiative and drag integrands
//! - [`memory`]: the running work integral
//! - [`stepper`]: Strang and Crank–Nicolson time stepping
//! - [`diagnostics`]: energies and Ehrenfest observables
//! - [`scenarios`]: initial states and potentials
//! - [`oracle`]: an independent finite-difference RK4 reference
//! - [`validation`]: the built-in validation suites

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod dissipation;
pub mod error;
pub mod grid;
pub mod madelung;
pub mod memory;
pub mod oracle;
pub mod scenarios;
pub mod stepper;
pub mod validation;

pub use diagnostics::{energy_report, EnergyReport};
pub use dissipation::{larmor_kappa, CubeConvention, DissipationModel, ModelKind};
pub use error::{Result, SolverError};
pub use grid::Grid;
pub use memory::{accel_drag_closed_form, WorkField};
pub use scenarios::{gaussian_packet, make_potential, PotentialKind, Scenario};
pub use stepper::{evolve, Scheme, SimParams, SimState};
