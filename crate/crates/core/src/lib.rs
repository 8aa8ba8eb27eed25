//! Pseudo-spectral simulation of stochastically forced electroconvection on
//! the 2D torus.
//!
//! A mean-zero surface charge density `q` is transported by an
//! incompressible velocity `u` and dissipated by the fractional Laplacian
//! `Λ^α`; the velocity solves the Navier-Stokes equations forced by the
//! nonlocal electrical term `qRq`, a potential, a body force, and finitely
//! many Brownian noise modes. The crate provides:
//!
//! * [`grid`], [`field`], [`ops`], [`norms`]: Fourier grids, field types,
//!   spectral operators with 2/3-rule dealiasing, and norm evaluators;
//! * [`forcing`]: noise banks and reproducible counter-based Wiener
//!   increments;
//! * [`dynamics`]: drift assembly and the drift-implicit Euler-Maruyama
//!   stepper;
//! * [`diagnostics`]: discrete energy budgets with realized Itô
//!   corrections, pathwise continuity (Gronwall) monitoring, commutator
//!   ratios, and moment/growth trackers;
//! * [`measure`]: time-averaged (Krylov-Bogoliubov) measures, Markov kernel
//!   Monte Carlo estimates, Feller continuity probes, tightness scans, and
//!   exact Ornstein-Uhlenbeck oracles for the linearized system.
//!
//! All numerics are generic over the scalar type via [`scalar::Real`];
//! concrete `f64`/`f32` aliases live at the crate root.
//!
//! ```
//! use ecnv_core::dynamics::{run, SimParams, SimState};
//! use ecnv_core::forcing::{ForcingBank, WienerDriver};
//! use ecnv_core::norms::norms;
//! use ecnv_core::ops::perp_gradient;
//! use ecnv_core::{Grid64, SpectralScalar64, SpectralVector64, TrigMode64};
//!
//! let grid = Grid64::new(32)?;
//! let mode = |k1, k2, amp| SpectralScalar64::from_modes(
//!     &grid,
//!     &[TrigMode64 { k1, k2, cos_amp: amp, sin_amp: 0.0 }],
//! );
//! let bank = ForcingBank::new(
//!     &grid,
//!     SpectralScalar64::zeros(32),              // potential
//!     SpectralVector64::zeros(32),              // body force
//!     vec![mode(1, 0, 0.25)?],                  // charge noise shape
//!     vec![perp_gradient(&grid, &mode(0, 1, 0.25)?)?],
//! )?;
//! let params = SimParams::new(1.0, 0.0, 0.01, 1.0);
//! let mut driver = WienerDriver::new(42, 0, bank.n_noise());
//! let end = run(&grid, SimState::zero(&grid), &bank, &mut driver, &params, &mut [])?;
//! let report = norms(&grid, &end.q, &end.u)?;
//! assert!(report.script_h_sq > 0.0);
//! # Ok::<(), ecnv_core::Error>(())
//! ```

pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod field;
pub mod forcing;
pub mod grid;
pub mod measure;
pub mod norms;
pub mod ops;
pub mod rng;
pub mod scalar;
pub mod synth;

pub use error::{Error, Result};
pub use field::{SpectralScalar, SpectralVector, TrigMode};
pub use grid::Grid;
pub use scalar::{real, Real};

/// f64 (production precision) aliases.
pub type Grid64 = grid::Grid<f64>;
pub type SpectralScalar64 = field::SpectralScalar<f64>;
pub type SpectralVector64 = field::SpectralVector<f64>;
pub type TrigMode64 = field::TrigMode<f64>;
pub type NormReport64 = norms::NormReport<f64>;
pub type ForcingBank64 = forcing::ForcingBank<f64>;
pub type NoiseIncrement64 = forcing::NoiseIncrement<f64>;
pub type SimParams64 = dynamics::SimParams<f64>;
pub type SimState64 = dynamics::SimState<f64>;

/// f32 aliases for quick low-precision scans.
pub type Grid32 = grid::Grid<f32>;
pub type SpectralScalar32 = field::SpectralScalar<f32>;
pub type SpectralVector32 = field::SpectralVector<f32>;
pub type SimParams32 = dynamics::SimParams<f32>;
pub type SimState32 = dynamics::SimState<f32>;
