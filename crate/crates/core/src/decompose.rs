//! Greedy extraction of shock waveform components.
//!
//! Each iteration fits one component to the current residual, subtracts
//! its real part on the record's own grid and tracks the residual energy
//! relative to the original record.

use log::{debug, info, warn};

use crate::error::{invalid_input, Result};
use crate::fitting::{fit_component_with, Bounds, FitOptions, FitResult, GridDensity};
use crate::signal::{Signal, TimeGrid};
use crate::waveform::WaveformParams;

/// Minimum relative drop in residual energy for a fit to count.
pub const MIN_RELATIVE_REDUCTION: f64 = 1e-6;

/// Rectangle-rule energy `Σ s[k]² dt`.
pub fn signal_energy(s: &Signal) -> f64 {
    s.energy()
}

/// Energy of `|w|²` on `grid` divided by `reference_energy`.
pub fn energy_ratio(w: &WaveformParams, grid: TimeGrid, reference_energy: f64) -> Result<f64> {
    if !(reference_energy > 0.0) || !reference_energy.is_finite() {
        return Err(invalid_input(format!(
            "reference energy must be positive, got {reference_energy}"
        )));
    }
    Ok(w.complex_energy(grid)? / reference_energy)
}

/// Why the extraction loop stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    ToleranceMet,
    MaxComponents,
    /// The 1-based component index whose fit could not lower the residual.
    FitFailed { iteration: usize },
}

impl Termination {
    pub fn label(self) -> &'static str {
        match self {
            Termination::ToleranceMet => "tolerance-met",
            Termination::MaxComponents => "max-components",
            Termination::FitFailed { .. } => "fit-failed",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecomposeOptions {
    /// Residual energy ratio at which extraction stops.
    pub tolerance: f64,
    pub max_components: usize,
    /// Parameter box; derived from the record when `None`.
    pub bounds: Option<Bounds>,
    pub fit: FitOptions,
}

impl Default for DecomposeOptions {
    fn default() -> Self {
        Self { tolerance: 0.10, max_components: 100, bounds: None, fit: FitOptions::default() }
    }
}

/// One extracted component with its fit diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FittedComponent {
    pub params: WaveformParams,
    /// `E(|w|²) / E_r`.
    pub energy_ratio: f64,
    /// `E((Re w)²) / E_r`.
    pub real_energy_ratio: f64,
    /// Residual energy ratio after subtracting this component.
    pub residual_ratio: f64,
    pub start_index: usize,
    pub iterations: usize,
    pub dense_retry: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    /// Components in fit order.
    pub components: Vec<FittedComponent>,
    /// `E_{r(i)} / E_r` for `i = 0..=components.len()`; the first entry is 1.
    pub residual_ratio_trace: Vec<f64>,
    pub termination: Termination,
    pub original_energy: f64,
    pub tolerance: f64,
    pub bounds: Bounds,
    /// Final residual on the input grid.
    pub residual: Signal,
}

impl Decomposition {
    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn params(&self) -> Vec<WaveformParams> {
        self.components.iter().map(|c| c.params).collect()
    }

    pub fn energy_ratios(&self) -> Vec<f64> {
        self.components.iter().map(|c| c.energy_ratio).collect()
    }

    pub fn real_energy_ratios(&self) -> Vec<f64> {
        self.components.iter().map(|c| c.real_energy_ratio).collect()
    }

    /// [`goodness_check`] on the complex-modulus energy ratios.
    pub fn goodness_violations(&self) -> Vec<usize> {
        goodness_check(&self.energy_ratios())
    }

    pub fn final_residual_ratio(&self) -> f64 {
        *self.residual_ratio_trace.last().unwrap_or(&1.0)
    }
}

/// Extracts components until the residual energy ratio is at or below
/// `options.tolerance`, the component cap is reached, or a fit fails to
/// lower the residual even after one retry on the dense start grid.
pub fn decompose(r: &Signal, options: &DecomposeOptions) -> Result<Decomposition> {
    Signal::new(r.start_time, r.dt, r.samples.clone())?;
    if !(options.tolerance > 0.0 && options.tolerance <= 1.0) {
        return Err(invalid_input(format!(
            "tolerance must lie in (0, 1], got {}",
            options.tolerance
        )));
    }
    let original_energy = r.energy();
    if !(original_energy > 0.0) {
        return Err(invalid_input("signal has zero energy"));
    }
    let bounds = match options.bounds {
        Some(b) => {
            b.validate()?;
            b
        }
        None => Bounds::default_for(r)?,
    };
    let grid = r.grid();

    let mut residual = r.clone();
    let mut residual_energy = original_energy;
    let mut trace = vec![1.0];
    let mut components = Vec::new();

    let termination = loop {
        if residual_energy / original_energy <= options.tolerance {
            break Termination::ToleranceMet;
        }
        if components.len() >= options.max_components {
            break Termination::MaxComponents;
        }
        let iteration = components.len() + 1;
        let attempt = |density| {
            fit_component_with(&residual, &bounds, density, &options.fit)
                .ok()
                .filter(|f| reduces(f, residual_energy))
        };
        let (fit, dense_retry) = match attempt(GridDensity::Standard) {
            Some(f) => (f, false),
            None => {
                warn!("component {iteration}: standard grid failed, retrying on dense grid");
                match attempt(GridDensity::Dense) {
                    Some(f) => (f, true),
                    None => break Termination::FitFailed { iteration },
                }
            }
        };

        fit.params.add_real_to(&mut residual, -1.0)?;
        residual_energy = residual.energy();
        let ratio = residual_energy / original_energy;
        let component = FittedComponent {
            params: fit.params,
            energy_ratio: fit.params.complex_energy(grid)? / original_energy,
            real_energy_ratio: fit.params.real_energy(grid)? / original_energy,
            residual_ratio: ratio,
            start_index: fit.start_index,
            iterations: fit.iterations,
            dense_retry,
        };
        debug!("component {iteration}: {:?}", component.params);
        info!(
            "component {iteration}: f = {:.2} Hz, kappa = {:.3}, residual ratio {:.5}",
            fit.params.frequency_hz(),
            fit.params.kappa(),
            ratio
        );
        components.push(component);
        trace.push(ratio);
    };

    Ok(Decomposition {
        components,
        residual_ratio_trace: trace,
        termination,
        original_energy,
        tolerance: options.tolerance,
        bounds,
        residual,
    })
}

fn reduces(fit: &FitResult, residual_energy: f64) -> bool {
    fit.params.validate().is_ok()
        && fit.residual_energy.is_finite()
        && residual_energy - fit.residual_energy >= MIN_RELATIVE_REDUCTION * residual_energy
}

/// Component numbers `i` (1-based, fit order) where `ε_i ≤ ε_{i+1}`, i.e.
/// where the descending energy order of the extraction is broken.
pub fn goodness_check(energy_ratios: &[f64]) -> Vec<usize> {
    energy_ratios
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[0] <= w[1])
        .map(|(i, _)| i + 1)
        .collect()
}
