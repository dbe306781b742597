//! Quantum-trajectory simulation of single-atom filtering: ensembles of
//! four-level atoms driven by adiabatic passage into a Rydberg state, with
//! blockade and dissipation into an untrapped level.
//!
//! The crate is organised bottom-up: single-atom model and rates
//! ([`atom_model`]), atom positions and pair shifts ([`geometry`]), drive
//! schedules ([`pulses`]), many-body operators ([`operators`]), the
//! trajectory engine ([`mcwf`]), the density-matrix reference ([`master`]) and
//! trapped-atom statistics ([`observables`]).

pub mod atom_model;
pub mod error;
pub mod geometry;
pub mod integrator;
pub mod master;
pub mod mcwf;
pub mod observables;
pub mod operators;
pub mod pulses;

pub use atom_model::{AtomRates, SchemeConfig};
pub use error::{Error, Result};
pub use geometry::EnsembleGeometry;
pub use integrator::Tolerances;
pub use master::integrate_lindblad;
pub use mcwf::{
    evolve_trajectory, run_ensemble, uniform_grid, EnsembleResult, IntegratorSettings, JumpEvent,
    Sample, SimulationConfig, TrajectoryRecord,
};
pub use observables::{poisson_average, PoissonAverage, SurvivalDistribution};
pub use operators::{Channel, Level};
pub use pulses::{PulseSchedule, RampKind};
