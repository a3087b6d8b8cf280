//! Reference signal generators: modal free-vibration responses, Taylor-term
//! waveforms, the Gaussian-smoothed ("advanced") Prony mode and a
//! velocity-change check.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;

use crate::erf::{faddeeva, ERF_IMAG_LIMIT};
use crate::error::{invalid_param, Result, ShockError};
use crate::signal::{Signal, TimeGrid};
use crate::waveform::WaveformParams;

/// Default narrow-band limit on `max|ω_j - ω̄| / ω̄`.
pub const NARROW_BAND_LIMIT: f64 = 0.1;

/// Free vibration of a lightly damped system observed at one coordinate:
/// modes `ω_j` sharing damping ratio `ζ`, each with a complex weight `c_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalSystem {
    pub frequencies: Vec<f64>,
    pub weights: Vec<Complex64>,
    pub damping_ratio: f64,
}

impl ModalSystem {
    pub fn new(frequencies: Vec<f64>, weights: Vec<Complex64>, damping_ratio: f64) -> Result<Self> {
        if frequencies.is_empty() || frequencies.len() != weights.len() {
            return Err(invalid_param("need one weight per mode and at least one mode"));
        }
        if frequencies.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(invalid_param("modal frequencies must be finite and positive"));
        }
        if weights.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(invalid_param("modal weights must be finite"));
        }
        if !(damping_ratio.is_finite() && damping_ratio >= 0.0) {
            return Err(invalid_param("damping ratio must be finite and non-negative"));
        }
        Ok(Self { frequencies, weights, damping_ratio })
    }

    /// Like [`ModalSystem::new`] but also requires `spread() ≤ limit`.
    pub fn narrow_band(
        frequencies: Vec<f64>,
        weights: Vec<Complex64>,
        damping_ratio: f64,
        limit: f64,
    ) -> Result<Self> {
        let m = Self::new(frequencies, weights, damping_ratio)?;
        if m.spread() > limit {
            return Err(invalid_param(format!(
                "modal spread {} exceeds narrow-band limit {limit}",
                m.spread()
            )));
        }
        Ok(m)
    }

    pub fn mean_frequency(&self) -> f64 {
        self.frequencies.iter().sum::<f64>() / self.frequencies.len() as f64
    }

    /// `max|ω_j - ω̄| / ω̄`.
    pub fn spread(&self) -> f64 {
        let wm = self.mean_frequency();
        self.frequencies.iter().map(|w| (w - wm).abs()).fold(0.0, f64::max) / wm
    }

    fn eigenvalue(&self, w: f64) -> Complex64 {
        Complex64::new(-self.damping_ratio * w, w)
    }

    /// `Σ c_j e^{λ_j t}` for `t ≥ 0`, zero before.
    pub fn complex_response(&self, t: f64) -> Complex64 {
        if t < 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        self.frequencies
            .iter()
            .zip(&self.weights)
            .map(|(&w, &c)| c * (self.eigenvalue(w) * t).exp())
            .sum()
    }

    /// `Σ c_j (λ_j - λ̄)ⁿ / n!` with `λ̄` the eigenvalue at the mean frequency.
    pub fn taylor_coefficient(&self, n: u32) -> Complex64 {
        let lambda_bar = self.eigenvalue(self.mean_frequency());
        let factorial: f64 = (1..=n).map(f64::from).product();
        self.frequencies
            .iter()
            .zip(&self.weights)
            .map(|(&w, &c)| c * (self.eigenvalue(w) - lambda_bar).powu(n))
            .sum::<Complex64>()
            / factorial
    }
}

/// Observed response `Σ Re(c_j e^{(-ζω_j + iω_j)t})`, zero for `t < 0`.
pub fn mdof_response(m: &ModalSystem, grid: TimeGrid) -> Signal {
    let samples = grid.times().map(|t| m.complex_response(t).re).collect();
    Signal { start_time: grid.start, dt: grid.dt, samples }
}

/// `C tⁿ e^{(-ζω̄ + iω̄)t}` for `t ≥ 0`, zero before.
pub fn taylor_term(n: u32, c: Complex64, omega_bar: f64, zeta: f64, t: f64) -> Complex64 {
    if t < 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    c * t.powi(n as i32) * (Complex64::new(-zeta * omega_bar, omega_bar) * t).exp()
}

/// Envelope maximum of `tⁿ e^{-ζω̄t}`, i.e. `τⁿ e^{-n}` with `τ = n/(ζω̄)`.
/// Dividing a Taylor term with `C = 1` by this gives the unit-amplitude
/// waveform with that τ and zero phase and onset.
pub fn taylor_normalization(n: u32, omega_bar: f64, zeta: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let nf = f64::from(n);
    let tau = nf / (zeta * omega_bar);
    (nf * (tau.ln() - 1.0)).exp()
}

/// Unit-amplitude waveform matching the order-`n` Taylor term.
pub fn taylor_waveform(n: u32, omega_bar: f64, zeta: f64) -> Result<WaveformParams> {
    let tau = if n == 0 { 0.0 } else { f64::from(n) / (zeta * omega_bar) };
    WaveformParams::new(1.0, omega_bar, zeta, tau, 0.0, 0.0)
}

/// Damped harmonic `A e^{-ζωt + i(ωt + φ)}` driven through a Gaussian pulse
/// `exp(-(t - τ)² / (2σ²τ²))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdvancedPronyParams {
    pub amplitude: f64,
    pub damping_ratio: f64,
    pub angular_frequency: f64,
    pub phase: f64,
    /// Gaussian peak time τ, s.
    pub peak_time: f64,
    /// Gaussian width relative to τ.
    pub width: f64,
}

impl AdvancedPronyParams {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.amplitude,
            self.damping_ratio,
            self.angular_frequency,
            self.phase,
            self.peak_time,
            self.width,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(invalid_param("advanced Prony parameters must be finite"));
        }
        if !(self.peak_time > 0.0 && self.width > 0.0) {
            return Err(invalid_param("peak time and width must be positive"));
        }
        if self.angular_frequency <= 0.0 || self.damping_ratio < 0.0 {
            return Err(invalid_param("need ω > 0 and ζ ≥ 0"));
        }
        Ok(())
    }

    fn rate(&self) -> Complex64 {
        // b = (ζ - i)ω
        Complex64::new(self.damping_ratio, -1.0) * self.angular_frequency
    }

    /// Arguments of the two error functions in the closed form.
    fn erf_arguments(&self, t: f64) -> (Complex64, Complex64) {
        let (tau, s) = (self.peak_time, self.width);
        let shifted = 1.0 + self.rate() * s * s * tau;
        let u = shifted / (SQRT_2 * s);
        let v = (t - tau * shifted) / (SQRT_2 * s * tau);
        (u, v)
    }

    fn pulse(&self, x: f64) -> f64 {
        let d = (x - self.peak_time) / (self.width * self.peak_time);
        (-0.5 * d * d).exp()
    }

    fn mode(&self, t: f64) -> Complex64 {
        let w = self.angular_frequency;
        self.amplitude
            * Complex64::new(-self.damping_ratio * w * t, w * t + self.phase).exp()
    }
}

/// `e^E · erf(z)` as `s(e^E - e^{E - z²} w(isz))`, `s = sign(Re z)`, split
/// into the coefficient of `e^E` and the remainder.
fn scaled_erf_parts(z: Complex64, e: Complex64) -> (f64, Complex64) {
    let s = if z.re >= 0.0 { 1.0 } else { -1.0 };
    let iz = Complex64::new(-z.im, z.re) * s;
    (s, -s * (e - z * z).exp() * faddeeva(iz))
}

/// Closed form of the pulse-driven mode. The two error functions are
/// evaluated through the Faddeeva function, which keeps the product with the
/// exponential factor free of overflow and cancellation. Arguments with
/// `|Im| >` [`ERF_IMAG_LIMIT`] are reported as [`ShockError::OutOfRange`].
pub fn advanced_prony_closed_form(p: &AdvancedPronyParams, t: f64) -> Result<Complex64> {
    p.validate()?;
    if !t.is_finite() {
        return Err(invalid_param("time must be finite"));
    }
    if t <= 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let (u, v) = p.erf_arguments(t);
    if u.im.abs() > ERF_IMAG_LIMIT || v.im.abs() > ERF_IMAG_LIMIT {
        return Err(ShockError::OutOfRange(format!(
            "erf argument imaginary part exceeds {ERF_IMAG_LIMIT} (u = {u}, v = {v})"
        )));
    }
    let b = p.rate();
    let (tau, s) = (p.peak_time, p.width);
    let exponent =
        0.5 * b * (-2.0 * t + tau * (2.0 + b * s * s * tau)) + Complex64::new(0.0, p.phase);
    let (su, ru) = scaled_erf_parts(u, exponent);
    let (sv, rv) = scaled_erf_parts(v, exponent);
    let sum = if su + sv == 0.0 { ru + rv } else { (su + sv) * exponent.exp() + ru + rv };
    Ok(p.amplitude * (PI / 2.0).sqrt() * s * tau * sum)
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// Direct convolution `∫₀ᵗ P(t - x) G(x) dx` by composite Gauss–Legendre
/// quadrature over the part of `[0, t]` where the pulse is not negligible.
pub fn advanced_prony_convolution(p: &AdvancedPronyParams, t: f64) -> Result<Complex64> {
    p.validate()?;
    if !t.is_finite() {
        return Err(invalid_param("time must be finite"));
    }
    if t <= 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let width = p.width * p.peak_time;
    let a = (p.peak_time - 40.0 * width).max(0.0);
    let b = (p.peak_time + 40.0 * width).min(t);
    if b <= a {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let period = 2.0 * PI / p.angular_frequency;
    let panel = 0.25 * width.min(period);
    let panels = ((b - a) / panel).ceil().clamp(1.0, 2e6) as usize;
    let h = (b - a) / panels as f64;
    let rule = gauss_legendre(16);
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..panels {
        let mid = a + (k as f64 + 0.5) * h;
        for &(x, w) in &rule {
            let s = mid + 0.5 * h * x;
            acc += w * p.mode(t - s) * p.pulse(s);
        }
    }
    Ok(acc * 0.5 * h)
}

/// Closed form where it is representable, direct convolution otherwise.
pub fn advanced_prony(p: &AdvancedPronyParams, t: f64) -> Result<Complex64> {
    match advanced_prony_closed_form(p, t) {
        Err(ShockError::OutOfRange(_)) => advanced_prony_convolution(p, t),
        other => other,
    }
}

/// Rescales each component's amplitude so that the real-part energy of
/// component `i` on `grid` is `shares[i]` of the combined energy of the
/// individually rescaled components (cross terms ignored). Signs are kept.
pub fn scale_to_energy_shares(
    components: &[WaveformParams],
    shares: &[f64],
    total_energy: f64,
    grid: TimeGrid,
) -> Result<Vec<WaveformParams>> {
    if components.len() != shares.len() {
        return Err(invalid_param("need one energy share per component"));
    }
    if shares.iter().any(|s| !(s.is_finite() && *s > 0.0)) || !(total_energy > 0.0) {
        return Err(invalid_param("energy shares and total must be positive"));
    }
    components
        .iter()
        .zip(shares)
        .map(|(w, &share)| {
            let e = w.real_energy(grid)?;
            if !(e > 0.0) {
                return Err(invalid_param("component has no energy on the grid"));
            }
            let a = w.amplitude * (share * total_energy / e).sqrt();
            WaveformParams::new(a, w.angular_frequency, w.damping_ratio, w.peak_offset, w.phase, w.initial_time)
        })
        .collect()
}

/// Trapezoidal integral of the acceleration record, m/s.
pub fn velocity_change(s: &Signal) -> f64 {
    let n = s.samples.len();
    if n < 2 {
        return 0.0;
    }
    let inner: f64 = s.samples.iter().sum();
    s.dt * (inner - 0.5 * (s.samples[0] + s.samples[n - 1]))
}
