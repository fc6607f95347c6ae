//! Simulation of cloning transverse images from a control laser beam onto a
//! probe beam via coherent population trapping in a three-level Lambda
//! medium.
//!
//! The crate provides:
//!
//! * [`medium`] — exact all-order steady-state susceptibilities of the
//!   driven Lambda system plus an independent density-matrix oracle;
//! * [`beams`] — initial envelope synthesis (Hermite-Gaussian,
//!   super-Gaussian, plane wave, PGM-image-encoded profiles);
//! * [`propagator`] — coupled paraxial split-operator propagation of both
//!   envelopes with selectable order and absorbing boundaries;
//! * [`analysis`] — beam metrology (widths, transmissions, cloning
//!   fidelity, feature-size ratios);
//! * [`config`], [`run`], [`io`] — TOML run configuration, command
//!   orchestration, and bit-exact field/PGM serialization.
//!
//! Conventions: rates, detunings and Rabi amplitudes in units of the branch
//! decay rate gamma; transverse lengths and z in cm; densities in atoms/cm^3.

pub mod analysis;
pub mod beams;
pub mod config;
pub mod field;
pub(crate) mod fft2;
pub mod grid;
pub mod io;
pub mod medium;
pub mod propagator;
pub mod run;

pub use field::ComplexField;
pub use grid::TransverseGrid;
pub use medium::{FieldPoint, MediumParams, SusceptibilityPair};
pub use propagator::{FieldState, Propagator, SnapshotPlan, StepConfig};
