//! Parametric shock waveforms and greedy shock-signal decomposition.
//!
//! A shock waveform component is a modulated damped harmonic
//!
//! ```text
//! w(t) = A (t'/τ)^(ζωτ) exp(ζω(τ - t') + i(ωt' + φ)),   t' = t - t̊ ≥ 0
//! ```
//!
//! whose envelope peaks with value |A| at `t̊ + τ`. A measured transient is
//! represented as a superposition of such components, extracted one at a time
//! by multistart nonlinear least squares ([`decompose`]), then reduced to a
//! characteristic subset ([`select`]) and compared against the original in
//! the time and frequency domains ([`spectral`]).
//!
//! ```
//! use shockwave::{Signal, WaveformParams};
//! use std::f64::consts::PI;
//!
//! let w = WaveformParams::new(1000.0, 2.0 * PI * 2000.0, 0.05, 0.5e-3, 0.0, 0.0).unwrap();
//! let s = Signal::from_waveforms(0.0, 1e-5, 2000, &[w]).unwrap();
//! assert_eq!(s.len(), 2000);
//! assert!((w.kappa() - 1.0).abs() < 1e-12);
//! ```

pub mod decompose;
pub mod erf;
mod error;
pub mod fitting;
pub mod oracles;
pub mod select;
mod signal;
pub mod spectral;
pub mod waveform;

pub use decompose::{decompose, DecomposeOptions, Decomposition, FittedComponent, Termination};
pub use error::{Result, ShockError};
pub use fitting::{Bounds, FitResult, StartPoint};
pub use select::SelectionReport;
pub use signal::{Signal, TimeGrid};
pub use waveform::{FieldCategory, SpecialKind, WaveformParams};
