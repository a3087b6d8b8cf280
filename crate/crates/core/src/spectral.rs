//! Discrete spectra, ideal band-pass filtering and shock response spectra.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::{invalid_input, Result};
use crate::signal::{Signal, TimeGrid};
use crate::waveform::WaveformParams;

/// Default quality factor of the SRS oscillators.
pub const DEFAULT_Q: f64 = 10.0;
/// Default SRS grid density.
pub const DEFAULT_PER_OCTAVE: u32 = 12;

/// Unwindowed DFT scaled by `dt`, approximating the continuous transform
/// `∫ s(t) e^{-iξt} dt` with `ξ = 2πf`. Bins are ordered by ascending
/// frequency, negative frequencies first.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    /// Hz.
    pub frequencies: Vec<f64>,
    pub values: Vec<Complex64>,
    pub dt: f64,
    pub len: usize,
}

impl Spectrum {
    /// Bin spacing `fs / N`, Hz.
    pub fn resolution(&self) -> f64 {
        1.0 / (self.len as f64 * self.dt)
    }

    /// `Σ |S|² df`, equal to the time-domain energy.
    pub fn energy(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.resolution()
    }

    /// Bins with `f ≥ 0`.
    pub fn one_sided(&self) -> (Vec<f64>, Vec<Complex64>) {
        let first = self.frequencies.iter().position(|&f| f >= 0.0).unwrap_or(self.len);
        (self.frequencies[first..].to_vec(), self.values[first..].to_vec())
    }
}

fn fft_in_place(buf: &mut [Complex64], inverse: bool) {
    let mut planner = FftPlanner::new();
    let fft = if inverse {
        planner.plan_fft_inverse(buf.len())
    } else {
        planner.plan_fft_forward(buf.len())
    };
    fft.process(buf);
}

/// Signed frequency of FFT bin `k`, in units of the bin spacing.
fn signed_bin(k: usize, n: usize) -> i64 {
    if k <= n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

/// Spectrum of complex samples on `grid`.
pub fn dft_complex(samples: &[Complex64], grid: TimeGrid) -> Result<Spectrum> {
    if samples.len() != grid.len {
        return Err(invalid_input("sample count does not match the grid"));
    }
    let n = grid.len;
    let mut buf = samples.to_vec();
    fft_in_place(&mut buf, false);
    let df = 1.0 / (n as f64 * grid.dt);
    let mut bins: Vec<(f64, Complex64)> = buf
        .iter()
        .enumerate()
        .map(|(k, &v)| {
            let f = signed_bin(k, n) as f64 * df;
            // grid starts at `start`, not at zero
            let shift = Complex64::from_polar(1.0, -TAU * f * grid.start);
            (f, v * grid.dt * shift)
        })
        .collect();
    bins.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(Spectrum {
        frequencies: bins.iter().map(|b| b.0).collect(),
        values: bins.iter().map(|b| b.1).collect(),
        dt: grid.dt,
        len: n,
    })
}

pub fn dft_spectrum(s: &Signal) -> Spectrum {
    let samples: Vec<Complex64> = s.samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    dft_complex(&samples, s.grid()).expect("grid matches samples")
}

/// Ideal filter: keeps the DFT bins with `lo ≤ |f| ≤ hi` (edges included).
pub fn band_pass(s: &Signal, lo: f64, hi: f64) -> Result<Signal> {
    let nyquist = s.sample_rate() / 2.0;
    if !(lo >= 0.0 && lo < hi && hi <= nyquist * (1.0 + 1e-12)) {
        return Err(invalid_input(format!(
            "band [{lo}, {hi}] Hz must satisfy 0 <= lo < hi <= {nyquist}"
        )));
    }
    let n = s.len();
    let df = 1.0 / (n as f64 * s.dt);
    let eps = 1e-9 * df;
    let mut buf: Vec<Complex64> = s.samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft_in_place(&mut buf, false);
    for (k, v) in buf.iter_mut().enumerate() {
        let f = signed_bin(k, n).unsigned_abs() as f64 * df;
        if f < lo - eps || f > hi + eps {
            *v = Complex64::new(0.0, 0.0);
        }
    }
    fft_in_place(&mut buf, true);
    let samples = buf.iter().map(|v| v.re / n as f64).collect();
    Signal::new(s.start_time, s.dt, samples)
}

/// `|ω - 2π (lo + hi)/2| / ω`.
pub fn band_symmetry_error(p: &WaveformParams, lo: f64, hi: f64) -> f64 {
    let w = p.angular_frequency;
    (w - TAU * 0.5 * (lo + hi)).abs() / w
}

/// Band `[lo, hi]` (Hz) of the spectral bell whose peak lies closest to
/// `hint` in `[hint/√2, hint·√2]`: bins are added on both sides of the peak
/// while the magnitude stays at or above `level` times the peak and keeps
/// decreasing.
pub fn bell_band(spectrum: &Spectrum, hint: f64, level: f64) -> Result<(f64, f64)> {
    let (f, v) = spectrum.one_sided();
    let mag: Vec<f64> = v.iter().map(|c| c.norm()).collect();
    let window = hint / std::f64::consts::SQRT_2..=hint * std::f64::consts::SQRT_2;
    let peak = (0..f.len())
        .filter(|&k| window.contains(&f[k]))
        .max_by(|&a, &b| mag[a].total_cmp(&mag[b]).then(b.cmp(&a)))
        .ok_or_else(|| invalid_input(format!("no spectrum bins near {hint} Hz")))?;
    let floor = level * mag[peak];
    let mut lo = peak;
    while lo > 0 && mag[lo - 1] >= floor && mag[lo - 1] <= mag[lo] {
        lo -= 1;
    }
    let mut hi = peak;
    while hi + 1 < f.len() && mag[hi + 1] >= floor && mag[hi + 1] <= mag[hi] {
        hi += 1;
    }
    Ok((f[lo], f[hi]))
}

/// Maximax absolute-acceleration shock response spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct SrsCurve {
    /// Natural frequencies, Hz.
    pub frequencies: Vec<f64>,
    /// m/s².
    pub values: Vec<f64>,
    pub q: f64,
}

/// `lo · 2^{k/per_octave}` up to `hi`, with `hi` itself as the last point.
pub fn srs_grid(lo: f64, hi: f64, per_octave: u32) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo && lo.is_finite() && hi.is_finite()) || per_octave == 0 {
        return Err(invalid_input(format!(
            "SRS grid needs 0 < lo < hi and per_octave > 0 (got {lo}, {hi}, {per_octave})"
        )));
    }
    let mut out = Vec::new();
    let mut k = 0;
    loop {
        let f = lo * 2f64.powf(k as f64 / per_octave as f64);
        if f >= hi * (1.0 - 1e-9) {
            break;
        }
        out.push(f);
        k += 1;
    }
    out.push(hi);
    Ok(out)
}

/// 1/12-octave grid from 100 Hz to `fs/4`.
pub fn default_srs_grid(sample_rate: f64) -> Result<Vec<f64>> {
    srs_grid(100.0, sample_rate / 4.0, DEFAULT_PER_OCTAVE)
}

/// Peak absolute response of one oscillator, ramp-invariant recursion.
fn srs_point(x: &[f64], dt: f64, f_n: f64, q: f64) -> f64 {
    let wn = TAU * f_n;
    let zeta = 1.0 / (2.0 * q);
    let wd = wn * (1.0 - zeta * zeta).sqrt();
    let e = (-zeta * wn * dt).exp();
    let k = wd * dt;
    let c = e * k.cos();
    let sp = e * k.sin() / k;
    let (a1, a2) = (2.0 * c, -e * e);
    let (b0, b1, b2) = (1.0 - sp, 2.0 * (sp - c), e * e - sp);
    let (mut y1, mut y2, mut x1, mut x2) = (0.0, 0.0, 0.0, 0.0);
    let mut peak = 0.0_f64;
    for &x0 in x {
        let y0 = a1 * y1 + a2 * y2 + b0 * x0 + b1 * x1 + b2 * x2;
        peak = peak.max(y0.abs());
        (y2, y1, x2, x1) = (y1, y0, x1, x0);
    }
    peak
}

pub fn srs(s: &Signal, q: f64, grid: &[f64]) -> Result<SrsCurve> {
    if !(q > 0.5 && q.is_finite()) {
        return Err(invalid_input(format!("Q must exceed 0.5, got {q}")));
    }
    let nyquist = s.sample_rate() / 2.0;
    if let Some(&f) = grid.iter().find(|&&f| !(f > 0.0 && f < nyquist)) {
        return Err(invalid_input(format!("SRS frequency {f} Hz outside (0, {nyquist})")));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid_input("SRS grid must be strictly ascending"));
    }
    let values = grid.par_iter().map(|&f| srs_point(&s.samples, s.dt, f, q)).collect();
    Ok(SrsCurve { frequencies: grid.to_vec(), values, q })
}

/// Scalar agreement metrics between a record and an approximation of it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Comparison {
    /// `E(r - r̂) / E(r)`.
    pub residual_energy_ratio: f64,
    /// `Σ r r̂ / √(Σ r² Σ r̂²)`.
    pub ncc: f64,
    /// Largest `|20 log10(SRS_r̂ / SRS_r)|` over the grid, dB.
    pub srs_max_abs_db_error: f64,
    /// `‖S_r - S_r̂‖₂ / ‖S_r‖₂` over all DFT bins.
    pub spectrum_l2_error: f64,
}

/// Normalized cross-correlation at zero lag. Two zero signals correlate
/// perfectly; a zero signal against a non-zero one gives 0.
pub fn ncc(a: &[f64], b: &[f64]) -> f64 {
    let ab: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let aa: f64 = a.iter().map(|x| x * x).sum();
    let bb: f64 = b.iter().map(|x| x * x).sum();
    if aa == 0.0 && bb == 0.0 {
        1.0
    } else if aa == 0.0 || bb == 0.0 {
        0.0
    } else {
        ab / (aa * bb).sqrt()
    }
}

fn db_error(reference: f64, approx: f64) -> f64 {
    if reference == approx {
        0.0
    } else if reference == 0.0 || approx == 0.0 {
        f64::INFINITY
    } else {
        (20.0 * (approx / reference).log10()).abs()
    }
}

/// [`compare_with`] on the default SRS grid and Q.
pub fn compare(r: &Signal, r_hat: &Signal) -> Result<Comparison> {
    compare_with(r, r_hat, &default_srs_grid(r.sample_rate())?, DEFAULT_Q)
}

pub fn compare_with(r: &Signal, r_hat: &Signal, grid: &[f64], q: f64) -> Result<Comparison> {
    if !r.same_grid(r_hat) {
        return Err(invalid_input("signals are not on the same grid"));
    }
    let e = r.energy();
    let residual = r.sub(r_hat)?;
    let residual_energy_ratio = if e > 0.0 {
        residual.energy() / e
    } else if residual.energy() == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };

    let srs_r = srs(r, q, grid)?;
    let srs_h = srs(r_hat, q, grid)?;
    let srs_max_abs_db_error =
        srs_r.values.iter().zip(&srs_h.values).map(|(&a, &b)| db_error(a, b)).fold(0.0, f64::max);

    let sr = dft_spectrum(r);
    let sh = dft_spectrum(r_hat);
    let diff: f64 = sr.values.iter().zip(&sh.values).map(|(a, b)| (a - b).norm_sqr()).sum();
    let norm: f64 = sr.values.iter().map(|a| a.norm_sqr()).sum();
    let spectrum_l2_error = if norm > 0.0 {
        (diff / norm).sqrt()
    } else if diff == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };

    Ok(Comparison {
        residual_energy_ratio,
        ncc: ncc(&r.samples, &r_hat.samples),
        srs_max_abs_db_error,
        spectrum_l2_error,
    })
}
