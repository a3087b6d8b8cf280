//! Single-component nonlinear least squares with box constraints and a
//! deterministic multistart grid.
//!
//! Parameters are handled as a vector in the order `(A, ω, t̊, τ, ζ, φ)`.
//! Each start is refined with a damped Gauss–Newton (Levenberg–Marquardt)
//! iteration using a central-difference Jacobian; every trial point is
//! projected onto the box before it is evaluated.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, TAU};

use nalgebra::{Matrix6, Vector6};
use rayon::prelude::*;

use crate::error::{invalid_input, Result, ShockError};
use crate::signal::{Signal, TimeGrid};
use crate::waveform::WaveformParams;

pub const PARAM_COUNT: usize = 6;

/// Parameter vector `(A, ω, t̊, τ, ζ, φ)`.
pub type ParamVector = [f64; PARAM_COUNT];

pub const PARAM_NAMES: [&str; PARAM_COUNT] =
    ["amplitude", "angular_frequency", "initial_time", "peak_offset", "damping_ratio", "phase"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub const fn new(lower: f64, upper: f64) -> Self {
        Self { lower, upper }
    }

    pub fn clamp(&self, x: f64) -> f64 {
        x.max(self.lower).min(self.upper)
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lower && x <= self.upper
    }
}

/// Box constraints on the six fitted parameters, SI units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub amplitude: Interval,
    pub angular_frequency: Interval,
    pub initial_time: Interval,
    pub peak_offset: Interval,
    pub damping_ratio: Interval,
    pub phase: Interval,
}

impl Bounds {
    /// Permissive bounds derived from the record itself.
    pub fn default_for(signal: &Signal) -> Result<Self> {
        let grid = signal.grid();
        let t_rec = grid.duration();
        let peak = signal.max_abs();
        let b = Self {
            amplitude: Interval::new(-10.0 * peak, 10.0 * peak),
            angular_frequency: Interval::new(TAU * 2.0 / t_rec, TAU * grid.sample_rate() / 4.0),
            initial_time: Interval::new(grid.start - t_rec, grid.start + t_rec),
            peak_offset: Interval::new(0.0, 2.0 * t_rec),
            damping_ratio: Interval::new(0.0, 1e4),
            phase: Interval::new(-TAU, 2.0 * TAU),
        };
        b.validate()?;
        Ok(b)
    }

    pub fn intervals(&self) -> [Interval; PARAM_COUNT] {
        [
            self.amplitude,
            self.angular_frequency,
            self.initial_time,
            self.peak_offset,
            self.damping_ratio,
            self.phase,
        ]
    }

    pub fn intervals_mut(&mut self) -> [&mut Interval; PARAM_COUNT] {
        [
            &mut self.amplitude,
            &mut self.angular_frequency,
            &mut self.initial_time,
            &mut self.peak_offset,
            &mut self.damping_ratio,
            &mut self.phase,
        ]
    }

    pub fn validate(&self) -> Result<()> {
        for (iv, name) in self.intervals().iter().zip(PARAM_NAMES) {
            if !(iv.lower.is_finite() && iv.upper.is_finite()) {
                return Err(invalid_input(format!("{name} bounds must be finite")));
            }
            if iv.lower > iv.upper {
                return Err(invalid_input(format!(
                    "{name} lower bound {} exceeds upper bound {}",
                    iv.lower, iv.upper
                )));
            }
        }
        if self.angular_frequency.lower <= 0.0 {
            return Err(invalid_input("angular_frequency bounds must be positive"));
        }
        if self.peak_offset.lower < 0.0 || self.damping_ratio.lower < 0.0 {
            return Err(invalid_input("peak_offset and damping_ratio lower bounds must be >= 0"));
        }
        Ok(())
    }

    pub fn clamp(&self, x: &ParamVector) -> ParamVector {
        let iv = self.intervals();
        std::array::from_fn(|j| iv[j].clamp(x[j]))
    }

    pub fn contains(&self, x: &ParamVector) -> bool {
        self.intervals().iter().zip(x).all(|(iv, v)| iv.contains(*v))
    }
}

pub fn to_vector(p: &WaveformParams) -> ParamVector {
    [p.amplitude, p.angular_frequency, p.initial_time, p.peak_offset, p.damping_ratio, p.phase]
}

pub fn from_vector(x: &ParamVector) -> WaveformParams {
    WaveformParams {
        amplitude: x[0],
        angular_frequency: x[1],
        initial_time: x[2],
        peak_offset: x[3],
        damping_ratio: x[4],
        phase: x[5],
    }
}

/// One element of the multistart grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StartPoint {
    pub params: ParamVector,
    /// Ordinal in the grid enumeration.
    pub index: usize,
}

/// Size of the multistart grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GridDensity {
    /// Octave ω steps, four damping ratios, four phases.
    #[default]
    Standard,
    /// Half-octave ω steps, ζ = 1e-3 added, eight phases.
    Dense,
}

/// Geometric ω ladder from the lower bound, with the upper bound appended
/// when it is not already on the ladder.
fn frequency_ladder(iv: Interval, steps_per_octave: u32) -> Vec<f64> {
    let ratio = 2f64.powf(1.0 / steps_per_octave as f64);
    let mut out = Vec::new();
    let mut k = 0;
    loop {
        let w = iv.lower * ratio.powi(k);
        if w > iv.upper * (1.0 + 1e-9) {
            break;
        }
        out.push(w);
        k += 1;
    }
    match out.last() {
        Some(&last) if (last - iv.upper).abs() <= 1e-9 * iv.upper => {}
        _ => out.push(iv.upper),
    }
    out
}

/// Elapsed time from the record start to its largest-magnitude sample.
pub fn time_to_peak(signal: &Signal) -> f64 {
    signal.peak().map_or(0.0, |(k, _)| k as f64 * signal.dt)
}

pub fn generate_starts(residual: &Signal, bounds: &Bounds) -> Result<Vec<StartPoint>> {
    generate_starts_with(residual, bounds, GridDensity::Standard)
}

/// Cartesian grid over `(A, ω, t̊, τ, ζ, φ)` enumerated lexicographically in
/// that order, each point clamped into `bounds`.
pub fn generate_starts_with(
    residual: &Signal,
    bounds: &Bounds,
    density: GridDensity,
) -> Result<Vec<StartPoint>> {
    if residual.is_empty() {
        return Err(invalid_input("cannot build starting points for an empty signal"));
    }
    bounds.validate()?;
    let tau_r = time_to_peak(residual);
    let t0 = residual.start_time;

    let amplitudes = [residual.max_abs()];
    let omegas = match density {
        GridDensity::Standard => frequency_ladder(bounds.angular_frequency, 1),
        GridDensity::Dense => frequency_ladder(bounds.angular_frequency, 2),
    };
    let onsets = [t0 - tau_r, t0, t0 + tau_r];
    let offsets = [tau_r];
    let dampings: Vec<f64> = match density {
        GridDensity::Standard => vec![1e-2, 1e-1, 1e0, 1e1],
        GridDensity::Dense => vec![1e-3, 1e-2, 1e-1, 1e0, 1e1],
    };
    let phases: Vec<f64> = match density {
        GridDensity::Standard => vec![0.0, FRAC_PI_2, PI, 3.0 * FRAC_PI_2],
        GridDensity::Dense => (0..8).map(|k| k as f64 * FRAC_PI_4).collect(),
    };

    let mut starts = Vec::with_capacity(
        amplitudes.len() * omegas.len() * onsets.len() * offsets.len() * dampings.len() * phases.len(),
    );
    for &a in &amplitudes {
        for &w in &omegas {
            for &t in &onsets {
                for &tau in &offsets {
                    for &z in &dampings {
                        for &phi in &phases {
                            let params = bounds.clamp(&[a, w, t, tau, z, phi]);
                            starts.push(StartPoint { params, index: starts.len() });
                        }
                    }
                }
            }
        }
    }
    Ok(starts)
}

/// Solver settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Relative objective decrease below which an accepted step ends the run.
    pub objective_tolerance: f64,
    /// Scaled step length below which the run ends.
    pub step_tolerance: f64,
    /// Relative central-difference step.
    pub difference_step: f64,
    /// Iterations over which progress is measured for stall detection.
    pub stall_window: usize,
    /// Relative decrease over `stall_window` iterations below which the run ends.
    pub stall_tolerance: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iterations: 400,
            objective_tolerance: 1e-10,
            step_tolerance: 1e-10,
            difference_step: 1e-6,
            stall_window: 20,
            stall_tolerance: 1e-3,
        }
    }
}

/// Outcome of one local fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    pub params: WaveformParams,
    /// `Σ (r - Re w)² dt` at `params`.
    pub residual_energy: f64,
    pub start_index: usize,
    pub iterations: usize,
    pub converged: bool,
}

/// Discrete objective `Σ (r[k] - Re w(t_k))² dt`, evaluated directly.
pub fn objective(residual: &Signal, params: &WaveformParams) -> f64 {
    residual
        .samples
        .iter()
        .enumerate()
        .map(|(k, &r)| {
            let d = r - params.eval_real_unchecked(residual.time(k));
            d * d
        })
        .sum::<f64>()
        * residual.dt
}

struct Problem<'a> {
    grid: TimeGrid,
    target: &'a [f64],
    bounds: &'a Bounds,
    /// Magnitudes used when a parameter sits at zero.
    typical: ParamVector,
}

impl Problem<'_> {
    fn model_into(&self, x: &ParamVector, out: &mut [f64]) {
        let w = from_vector(x);
        for (k, o) in out.iter_mut().enumerate() {
            *o = w.eval_real_unchecked(self.grid.time(k));
        }
    }

    fn cost_of(&self, model: &[f64]) -> f64 {
        self.target.iter().zip(model).map(|(r, m)| (r - m) * (r - m)).sum::<f64>() * self.grid.dt
    }

    /// Jacobian of the model (not the residual), one column per parameter.
    fn jacobian(&self, x: &ParamVector, base: &[f64], rel_step: f64, cols: &mut [Vec<f64>]) {
        let iv = self.bounds.intervals();
        let m = base.len();
        let mut plus = vec![0.0; m];
        let mut minus = vec![0.0; m];
        for j in 0..PARAM_COUNT {
            let h = rel_step * x[j].abs().max(self.typical[j]);
            let can_up = x[j] + h <= iv[j].upper;
            let can_down = x[j] - h >= iv[j].lower;
            let col = &mut cols[j];
            match (can_up, can_down) {
                (true, true) => {
                    let mut xp = *x;
                    xp[j] += h;
                    let mut xm = *x;
                    xm[j] -= h;
                    self.model_into(&xp, &mut plus);
                    self.model_into(&xm, &mut minus);
                    for k in 0..m {
                        col[k] = (plus[k] - minus[k]) / (2.0 * h);
                    }
                }
                (true, false) => {
                    let mut xp = *x;
                    xp[j] += h;
                    self.model_into(&xp, &mut plus);
                    for k in 0..m {
                        col[k] = (plus[k] - base[k]) / h;
                    }
                }
                (false, true) => {
                    let mut xm = *x;
                    xm[j] -= h;
                    self.model_into(&xm, &mut minus);
                    for k in 0..m {
                        col[k] = (base[k] - minus[k]) / h;
                    }
                }
                (false, false) => col.iter_mut().for_each(|c| *c = 0.0),
            }
        }
    }
}

fn typical_scales(residual: &Signal, bounds: &Bounds) -> ParamVector {
    let t_rec = residual.grid().duration();
    let a = residual.max_abs();
    [
        if a > 0.0 { a } else { 1.0 },
        bounds.angular_frequency.lower,
        t_rec,
        t_rec,
        1e-2,
        1.0,
    ]
}

pub fn fit_single(residual: &Signal, start: &StartPoint, bounds: &Bounds) -> Result<FitResult> {
    fit_single_with(residual, start, bounds, &FitOptions::default())
}

/// Local Levenberg–Marquardt refinement from one start point.
///
/// A start whose objective or Jacobian is not finite is rejected with
/// [`ShockError::StartRejected`]. Running out of iterations is not an error:
/// the best point found is returned with `converged = false`.
pub fn fit_single_with(
    residual: &Signal,
    start: &StartPoint,
    bounds: &Bounds,
    options: &FitOptions,
) -> Result<FitResult> {
    let reject = |reason: &str| ShockError::StartRejected {
        start_index: start.index,
        reason: reason.to_string(),
    };
    if start.params.iter().any(|v| !v.is_finite()) {
        return Err(reject("start point is not finite"));
    }
    let problem = Problem {
        grid: residual.grid(),
        target: &residual.samples,
        bounds,
        typical: typical_scales(residual, bounds),
    };
    let m = residual.len();
    let dt = residual.dt;

    let mut x = bounds.clamp(&start.params);
    let mut model = vec![0.0; m];
    problem.model_into(&x, &mut model);
    let mut cost = problem.cost_of(&model);
    if !cost.is_finite() {
        return Err(reject("objective is not finite at the start point"));
    }

    let mut cols = vec![vec![0.0; m]; PARAM_COUNT];
    let mut trial = vec![0.0; m];
    // cost below this is indistinguishable from an exact fit
    let negligible = 1e-13 * problem.cost_of(&vec![0.0; m]);
    let mut history = Vec::with_capacity(options.max_iterations + 1);
    history.push(cost);
    let mut lambda = 1e-3;
    let mut nu = 2.0;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < options.max_iterations {
        if cost <= negligible {
            converged = true;
            break;
        }
        iterations += 1;
        problem.jacobian(&x, &model, options.difference_step, &mut cols);

        // normal equations for f = Σ (r - m)² dt: H = JᵀJ dt, g = -Jᵀ(r - m) dt
        let mut h = Matrix6::<f64>::zeros();
        let mut g = Vector6::<f64>::zeros();
        for a in 0..PARAM_COUNT {
            let ca = &cols[a];
            let mut ga = 0.0;
            for k in 0..m {
                ga += ca[k] * (residual.samples[k] - model[k]);
            }
            g[a] = -ga * dt;
            for b in a..PARAM_COUNT {
                let cb = &cols[b];
                let mut s = 0.0;
                for k in 0..m {
                    s += ca[k] * cb[k];
                }
                h[(a, b)] = s * dt;
                h[(b, a)] = s * dt;
            }
        }
        if !(h.iter().all(|v| v.is_finite()) && g.iter().all(|v| v.is_finite())) {
            return Err(reject("Jacobian is not finite"));
        }
        let max_diag = (0..PARAM_COUNT).map(|j| h[(j, j)]).fold(0.0_f64, f64::max);
        if max_diag == 0.0 {
            converged = true;
            break;
        }
        let diag: Vector6<f64> = Vector6::from_fn(|j, _| h[(j, j)].max(1e-12 * max_diag));

        // inner loop: raise damping until a step is accepted
        let mut accepted = false;
        let mut stop = false;
        while lambda < 1e16 {
            let mut a = h;
            for j in 0..PARAM_COUNT {
                a[(j, j)] += lambda * diag[j];
            }
            let delta = match a.cholesky() {
                Some(ch) => ch.solve(&(-g)),
                None => {
                    lambda *= nu;
                    nu *= 2.0;
                    continue;
                }
            };
            let proposal: ParamVector = std::array::from_fn(|j| x[j] + delta[j]);
            let x_new = bounds.clamp(&proposal);
            let step = Vector6::from_fn(|j, _| x_new[j] - x[j]);
            let scaled_step = (0..PARAM_COUNT)
                .map(|j| (step[j] / x[j].abs().max(problem.typical[j])).powi(2))
                .sum::<f64>()
                .sqrt();
            if scaled_step < options.step_tolerance {
                stop = true;
                break;
            }
            problem.model_into(&x_new, &mut trial);
            let new_cost = problem.cost_of(&trial);
            let predicted = -(2.0 * g.dot(&step) + step.dot(&(h * step)));
            let actual = cost - new_cost;
            if new_cost.is_finite() && actual > 0.0 && predicted > 0.0 {
                let rho = actual / predicted;
                lambda *= (1.0 / 3.0_f64).max(1.0 - (2.0 * rho - 1.0).powi(3));
                lambda = lambda.max(1e-15);
                nu = 2.0;
                x = x_new;
                std::mem::swap(&mut model, &mut trial);
                let rel = actual / cost;
                cost = new_cost;
                accepted = true;
                if rel < options.objective_tolerance {
                    stop = true;
                }
                break;
            }
            lambda *= nu;
            nu *= 2.0;
        }
        if stop || !accepted {
            converged = true;
            break;
        }
        history.push(cost);
        let w = options.stall_window;
        if w > 0 && history.len() > w {
            let before = history[history.len() - 1 - w];
            if before - cost <= options.stall_tolerance * before {
                break;
            }
        }
    }

    Ok(FitResult {
        params: from_vector(&x),
        residual_energy: cost,
        start_index: start.index,
        iterations,
        converged,
    })
}

/// Picks the lowest residual energy; results within 1e-12 relative of the
/// incumbent keep the earlier start.
pub fn best_of(results: impl IntoIterator<Item = FitResult>) -> Option<FitResult> {
    let mut best: Option<FitResult> = None;
    for r in results {
        best = match best {
            None => Some(r),
            Some(b) => {
                let better = r.residual_energy < b.residual_energy - 1e-12 * b.residual_energy.abs();
                let tie_earlier = !better
                    && (r.residual_energy - b.residual_energy).abs()
                        <= 1e-12 * b.residual_energy.abs()
                    && r.start_index < b.start_index;
                if better || tie_earlier {
                    Some(r)
                } else {
                    Some(b)
                }
            }
        };
    }
    best
}

pub fn fit_component(residual: &Signal, bounds: &Bounds) -> Result<FitResult> {
    fit_component_with(residual, bounds, GridDensity::Standard, &FitOptions::default())
}

/// Runs [`fit_single_with`] from every grid start and keeps the best.
/// Starts are independent and run in parallel; the winner does not depend
/// on scheduling.
pub fn fit_component_with(
    residual: &Signal,
    bounds: &Bounds,
    density: GridDensity,
    options: &FitOptions,
) -> Result<FitResult> {
    let starts = generate_starts_with(residual, bounds, density)?;
    let outcomes: Vec<Result<FitResult>> =
        starts.par_iter().map(|s| fit_single_with(residual, s, bounds, options)).collect();
    let mut reasons = Vec::new();
    let ok = outcomes.into_iter().filter_map(|o| match o {
        Ok(r) => Some(r),
        Err(e) => {
            reasons.push(e.to_string());
            None
        }
    });
    let best = best_of(ok.collect::<Vec<_>>());
    best.ok_or_else(|| ShockError::FittingFailed {
        starts: starts.len(),
        reason: reasons.first().cloned().unwrap_or_else(|| "no starting points".into()),
    })
}
