//! Simulator and numerical-analysis toolkit for a mean-field system of
//! interacting spin-renewal processes.
//!
//! Each of N spins flips after a non-exponential waiting time whose hazard
//! at age y is y^γ, time-rescaled by exp(−(γ+1)βσm) through the empirical
//! magnetization m. Three engines share the model layer:
//!
//! * [`sim`] — exact event-driven simulation of the N-particle dynamics,
//!   plus a common-noise coupling harness against the mean-field law;
//! * [`pde`] — a deterministic solver for the mean-field Fokker–Planck
//!   system with its age-zero renewal boundary condition;
//! * [`spectral`] — evaluation of the holomorphic functions whose zeros
//!   form the discrete spectrum of the linearized operator, complex root
//!   finding, argument-principle zero counts, and Hopf-crossing detection
//!   in β;
//! * [`analysis`] — trajectory classification (stable / oscillatory /
//!   magnetized) and β-sweep phase diagrams.

pub mod analysis;
pub mod model;
pub mod pde;
pub mod rng;
pub mod sim;
pub mod special;
pub mod spectral;

pub use model::{
    hazard_rate, normalization_lambda, sample_flip_time, survival, ModelError, ModelParams,
    ParticleState, Spin, SystemState,
};
pub use sim::coupling::{CouplingStats, MagnetizationPath, PathInterp};
pub use sim::{InitialCondition, Trajectory};
pub use pde::{DensityGrid, MeanFieldTrajectory};
pub use spectral::{HopfResult, RootResult};
pub use analysis::{PhaseKind, PhaseLabel};
