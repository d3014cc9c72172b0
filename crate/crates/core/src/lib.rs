//! Simulation and analysis toolkit for the one-dimensional Stern-Gerlach
//! measurement model: a spin-1/2 Gaussian wavepacket evolving under
//! `H = p²/2m + λσ_z + εxσ_z` (natural units, ħ = 1).
//!
//! Two propagators cover the same dynamics and cross-check each other:
//!
//! * [`analytic`] — closed-form constant-force Gaussian propagation of each
//!   spin branch (the fast path),
//! * [`spectral`] — split-operator (Strang) stepping on a Fourier grid
//!   (the brute-force oracle).
//!
//! On top of those, [`observables`] extracts means, variances and Ehrenfest
//! residuals, [`coherence`] tracks branch overlap, spin-coherence visibility
//! and phase-scrambling ensembles, and [`regime`] sweeps apparatus parameters
//! to map where the device actually resolves the two spin components
//! (the Bohm-limit criterion ε·Δt/Δp ≫ 1).
//!
//! With the default `parallel` feature, regime scans, ensemble averages and
//! the per-branch FFT work run on rayon; disabling the feature falls back to
//! equivalent sequential loops with identical results.

pub mod analytic;
pub mod coherence;
pub mod diagnostics;
pub mod error;
pub mod fft;
pub mod fmt;
pub mod grid;
pub mod model;
pub mod observables;
pub mod regime;
pub mod spectral;

mod exec;

pub use error::SgError;
pub use grid::GridSpec;
pub use model::{ApparatusGeometry, Branch, GaussianPacket, PhysParams, SpinWeights};
pub use spectral::SpinorGridState;
