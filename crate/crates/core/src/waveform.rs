//! The six-parameter shock waveform family.
//!
//! Evaluation uses the log form of the envelope so that large orders
//! `n = ζωτ` never overflow: the exponent `n (ln x + 1 - x)` with
//! `x = t'/τ` is non-positive everywhere and zero at the envelope peak.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use statrs::function::gamma::ln_gamma;

use crate::error::{invalid_input, invalid_param, Result, ShockError};
use crate::signal::{Signal, TimeGrid};

/// One shock waveform component, SI units throughout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveformParams {
    /// Envelope maximum, m/s². May be negative.
    pub amplitude: f64,
    /// Carrier frequency ω, rad/s.
    pub angular_frequency: f64,
    /// Damping ratio ζ.
    pub damping_ratio: f64,
    /// Duration τ from the initial time to the envelope peak, s.
    pub peak_offset: f64,
    /// Phase φ, rad.
    pub phase: f64,
    /// Initial time t̊, s. May be negative.
    pub initial_time: f64,
}

/// Dominant shock distance category derived from κ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FieldCategory {
    NearField,
    MidField,
    FarField,
}

impl FieldCategory {
    pub fn label(self) -> &'static str {
        match self {
            FieldCategory::NearField => "near-field",
            FieldCategory::MidField => "mid-field",
            FieldCategory::FarField => "far-field",
        }
    }
}

impl std::fmt::Display for FieldCategory {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Named limits of the waveform family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpecialKind {
    /// ζ = 0.
    Harmonic,
    /// τ = 0, ζ > 0.
    Prony,
    /// n = ζωτ = 1.
    KernHayes,
    /// ζ > 0, κ ≥ [`WAVELET_MIN_KAPPA`].
    AsymmetricWavelet,
    /// Asymmetric wavelet with the carrier maximum aligned to the envelope peak.
    SymmetricWavelet,
}

/// Lower κ bound for the wavelet-like special cases.
pub const WAVELET_MIN_KAPPA: f64 = 10.0;

/// Classifies a κ value into near (κ < 1), mid (1 ≤ κ < 10) or far field.
pub fn classify(kappa: f64) -> Result<FieldCategory> {
    if !(kappa >= 0.0) || !kappa.is_finite() {
        return Err(invalid_input(format!("kappa must be finite and non-negative, got {kappa}")));
    }
    Ok(if kappa < 1.0 {
        FieldCategory::NearField
    } else if kappa < 10.0 {
        FieldCategory::MidField
    } else {
        FieldCategory::FarField
    })
}

/// Phase that puts an extremum of the real carrier on the envelope peak.
pub fn symmetric_phase(angular_frequency: f64, peak_offset: f64) -> f64 {
    let x = peak_offset * angular_frequency;
    -(x - PI * (x / PI).floor())
}

impl WaveformParams {
    pub fn new(
        amplitude: f64,
        angular_frequency: f64,
        damping_ratio: f64,
        peak_offset: f64,
        phase: f64,
        initial_time: f64,
    ) -> Result<Self> {
        let p = Self { amplitude, angular_frequency, damping_ratio, peak_offset, phase, initial_time };
        p.validate()?;
        Ok(p)
    }

    /// Builds a component from display units (Hz and ms).
    pub fn from_display(
        amplitude: f64,
        frequency_hz: f64,
        initial_time_ms: f64,
        peak_offset_ms: f64,
        damping_ratio: f64,
        phase: f64,
    ) -> Result<Self> {
        Self::new(
            amplitude,
            TAU * frequency_hz,
            damping_ratio,
            peak_offset_ms * 1e-3,
            phase,
            initial_time_ms * 1e-3,
        )
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("amplitude", self.amplitude),
            ("angular_frequency", self.angular_frequency),
            ("damping_ratio", self.damping_ratio),
            ("peak_offset", self.peak_offset),
            ("phase", self.phase),
            ("initial_time", self.initial_time),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(invalid_param(format!("{name} is not finite ({v})")));
            }
        }
        if self.angular_frequency <= 0.0 {
            return Err(invalid_param("angular_frequency must be positive"));
        }
        if self.damping_ratio < 0.0 {
            return Err(invalid_param("damping_ratio must be non-negative"));
        }
        if self.peak_offset < 0.0 {
            return Err(invalid_param("peak_offset must be non-negative"));
        }
        if !self.order().is_finite() {
            return Err(invalid_param("order ζωτ is not finite"));
        }
        Ok(())
    }

    /// Order n = ζωτ of the power term.
    #[inline]
    pub fn order(&self) -> f64 {
        self.damping_ratio * self.angular_frequency * self.peak_offset
    }

    pub fn frequency_hz(&self) -> f64 {
        self.angular_frequency / TAU
    }

    /// Natural log of the envelope divided by |A|, `None` where the envelope is zero.
    #[inline]
    fn log_envelope(&self, t: f64) -> Option<f64> {
        let tp = t - self.initial_time;
        if tp < 0.0 {
            return None;
        }
        let zw = self.damping_ratio * self.angular_frequency;
        let n = zw * self.peak_offset;
        if n == 0.0 {
            // 0^0 = 1: harmonic (ζ = 0) and Prony (τ = 0) limits
            return Some(zw * (self.peak_offset - tp));
        }
        if tp == 0.0 {
            return None;
        }
        let x = tp / self.peak_offset;
        Some(n * (x.ln() + 1.0 - x))
    }

    /// Complex value without re-validating the parameters.
    #[inline]
    pub(crate) fn eval_unchecked(&self, t: f64) -> Complex64 {
        match self.log_envelope(t) {
            None => Complex64::new(0.0, 0.0),
            Some(le) => {
                let mag = self.amplitude * le.exp();
                let (s, c) = (self.angular_frequency * (t - self.initial_time) + self.phase).sin_cos();
                Complex64::new(mag * c, mag * s)
            }
        }
    }

    #[inline]
    pub(crate) fn eval_real_unchecked(&self, t: f64) -> f64 {
        match self.log_envelope(t) {
            None => 0.0,
            Some(le) => {
                self.amplitude
                    * le.exp()
                    * (self.angular_frequency * (t - self.initial_time) + self.phase).cos()
            }
        }
    }

    pub fn eval(&self, t: f64) -> Result<Complex64> {
        self.validate()?;
        Ok(self.eval_unchecked(t))
    }

    pub fn eval_real(&self, t: f64) -> Result<f64> {
        self.validate()?;
        Ok(self.eval_real_unchecked(t))
    }

    pub fn envelope(&self, t: f64) -> Result<f64> {
        self.validate()?;
        Ok(self.log_envelope(t).map_or(0.0, |le| self.amplitude.abs() * le.exp()))
    }

    /// Time of the envelope maximum, `t̊ + τ`.
    pub fn peak_time(&self) -> f64 {
        self.initial_time + self.peak_offset
    }

    /// κ = τω/2π, the peak offset in carrier periods.
    pub fn kappa(&self) -> f64 {
        self.peak_offset * self.angular_frequency / TAU
    }

    pub fn category(&self) -> Result<FieldCategory> {
        classify(self.kappa())
    }

    pub fn translate(&self, initial_time: f64) -> Self {
        Self { initial_time, ..*self }
    }

    /// Reduces φ into [0, 2π). The sign of A is kept.
    pub fn canonicalize(&self) -> Self {
        let mut phase = self.phase.rem_euclid(TAU);
        if phase >= TAU {
            phase = 0.0;
        }
        Self { phase, ..*self }
    }

    /// Closed-form Fourier transform `∫ w(t) e^{-iξt} dt`, evaluated in
    /// log-Gamma form.
    pub fn spectrum(&self, xi: f64) -> Result<Complex64> {
        self.validate()?;
        if !xi.is_finite() {
            return Err(invalid_input("xi must be finite"));
        }
        let zw = self.damping_ratio * self.angular_frequency;
        let n = self.order();
        let z = Complex64::new(zw, xi - self.angular_frequency);
        if z.re == 0.0 && z.im == 0.0 {
            return Err(ShockError::DivergentSpectrum { xi });
        }
        let mut log = -(n + 1.0) * z.ln() + ln_gamma(n + 1.0) + n;
        if n > 0.0 {
            log -= n * self.peak_offset.ln();
        }
        log += Complex64::new(0.0, self.phase - xi * self.initial_time);
        Ok(self.amplitude * log.exp())
    }

    /// Samples the complex waveform on `grid`.
    pub fn sample_complex(&self, grid: TimeGrid) -> Result<Vec<Complex64>> {
        self.validate()?;
        Ok(grid.times().map(|t| self.eval_unchecked(t)).collect())
    }

    /// Samples the real part on `grid`.
    pub fn sample_real(&self, grid: TimeGrid) -> Result<Signal> {
        let mut s = Signal::zeros(grid);
        self.add_real_to(&mut s, 1.0)?;
        Ok(s)
    }

    /// `signal += scale * Re w` on the signal's own grid.
    pub fn add_real_to(&self, signal: &mut Signal, scale: f64) -> Result<()> {
        self.validate()?;
        let (t0, dt) = (signal.start_time, signal.dt);
        for (k, v) in signal.samples.iter_mut().enumerate() {
            *v += scale * self.eval_real_unchecked(t0 + k as f64 * dt);
        }
        Ok(())
    }

    /// Rectangle-rule energy of `|w|²` over `grid`.
    pub fn complex_energy(&self, grid: TimeGrid) -> Result<f64> {
        self.validate()?;
        Ok(grid.times().map(|t| self.eval_unchecked(t).norm_sqr()).sum::<f64>() * grid.dt)
    }

    /// Rectangle-rule energy of `(Re w)²` over `grid`.
    pub fn real_energy(&self, grid: TimeGrid) -> Result<f64> {
        self.validate()?;
        Ok(grid.times().map(|t| self.eval_real_unchecked(t).powi(2)).sum::<f64>() * grid.dt)
    }

    /// Converts `base` into the requested special case, adjusting the
    /// parameter that defines it.
    pub fn make_special(kind: SpecialKind, base: WaveformParams) -> Result<Self> {
        base.validate()?;
        let needs_damping = |p: &WaveformParams| {
            if p.damping_ratio > 0.0 {
                Ok(())
            } else {
                Err(invalid_param(format!("{kind:?} requires a positive damping ratio")))
            }
        };
        let p = match kind {
            SpecialKind::Harmonic => Self { damping_ratio: 0.0, ..base },
            SpecialKind::Prony => {
                needs_damping(&base)?;
                Self { peak_offset: 0.0, ..base }
            }
            SpecialKind::KernHayes => {
                needs_damping(&base)?;
                Self { peak_offset: 1.0 / (base.damping_ratio * base.angular_frequency), ..base }
            }
            SpecialKind::AsymmetricWavelet | SpecialKind::SymmetricWavelet => {
                needs_damping(&base)?;
                if base.kappa() < WAVELET_MIN_KAPPA {
                    return Err(invalid_param(format!(
                        "{kind:?} requires kappa >= {WAVELET_MIN_KAPPA}, got {}",
                        base.kappa()
                    )));
                }
                if kind == SpecialKind::SymmetricWavelet {
                    Self {
                        phase: symmetric_phase(base.angular_frequency, base.peak_offset),
                        ..base
                    }
                } else {
                    base
                }
            }
        };
        p.validate()?;
        Ok(p)
    }
}
