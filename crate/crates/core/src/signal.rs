use crate::error::{invalid_input, Result};
use crate::waveform::WaveformParams;

/// Uniform sampling grid: `start + k * dt` for `k` in `0..len`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub start: f64,
    pub dt: f64,
    pub len: usize,
}

impl TimeGrid {
    pub fn new(start: f64, dt: f64, len: usize) -> Result<Self> {
        if !start.is_finite() {
            return Err(invalid_input("grid start time must be finite"));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(invalid_input(format!("sample interval must be positive, got {dt}")));
        }
        if len < 2 {
            return Err(invalid_input(format!("a signal needs at least 2 samples, got {len}")));
        }
        Ok(Self { start, dt, len })
    }

    #[inline]
    pub fn time(&self, k: usize) -> f64 {
        self.start + k as f64 * self.dt
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len).map(move |k| self.time(k))
    }

    /// `len * dt`.
    pub fn duration(&self) -> f64 {
        self.len as f64 * self.dt
    }

    pub fn sample_rate(&self) -> f64 {
        1.0 / self.dt
    }
}

/// Uniformly sampled real acceleration history (m/s²).
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    pub start_time: f64,
    pub dt: f64,
    pub samples: Vec<f64>,
}

impl Signal {
    pub fn new(start_time: f64, dt: f64, samples: Vec<f64>) -> Result<Self> {
        TimeGrid::new(start_time, dt, samples.len())?;
        if let Some(k) = samples.iter().position(|v| !v.is_finite()) {
            return Err(invalid_input(format!("sample {k} is not finite")));
        }
        Ok(Self { start_time, dt, samples })
    }

    pub fn zeros(grid: TimeGrid) -> Self {
        Self { start_time: grid.start, dt: grid.dt, samples: vec![0.0; grid.len] }
    }

    pub fn from_fn(grid: TimeGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        let samples = grid.times().map(f).collect();
        Self::new(grid.start, grid.dt, samples)
    }

    /// Superposition of the real parts of `components` on a fresh grid.
    pub fn from_waveforms(
        start_time: f64,
        dt: f64,
        len: usize,
        components: &[WaveformParams],
    ) -> Result<Self> {
        let grid = TimeGrid::new(start_time, dt, len)?;
        let mut s = Self::zeros(grid);
        for w in components {
            w.add_real_to(&mut s, 1.0)?;
        }
        Ok(s)
    }

    pub fn grid(&self) -> TimeGrid {
        TimeGrid { start: self.start_time, dt: self.dt, len: self.samples.len() }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        self.start_time + k as f64 * self.dt
    }

    pub fn sample_rate(&self) -> f64 {
        1.0 / self.dt
    }

    /// Rectangle-rule energy `Σ s[k]² dt`.
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|v| v * v).sum::<f64>() * self.dt
    }

    /// Index and value of the sample with the largest magnitude (first on ties).
    pub fn peak(&self) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for (k, &v) in self.samples.iter().enumerate() {
            match best {
                Some((_, b)) if v.abs() <= b.abs() => {}
                _ => best = Some((k, v)),
            }
        }
        best
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn same_grid(&self, other: &Signal) -> bool {
        self.samples.len() == other.samples.len()
            && self.dt == other.dt
            && self.start_time == other.start_time
    }

    /// Element-wise `self - other`; grids must match.
    pub fn sub(&self, other: &Signal) -> Result<Signal> {
        if !self.same_grid(other) {
            return Err(invalid_input("signals are not on the same grid"));
        }
        let samples = self.samples.iter().zip(&other.samples).map(|(a, b)| a - b).collect();
        Ok(Signal { start_time: self.start_time, dt: self.dt, samples })
    }

    pub fn scaled(&self, factor: f64) -> Signal {
        Signal {
            start_time: self.start_time,
            dt: self.dt,
            samples: self.samples.iter().map(|v| v * factor).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_grids() {
        assert!(Signal::new(0.0, 0.0, vec![1.0, 2.0]).is_err());
        assert!(Signal::new(0.0, 1e-3, vec![1.0]).is_err());
        assert!(Signal::new(0.0, 1e-3, vec![1.0, f64::NAN]).is_err());
        assert!(Signal::new(-1.0, 1e-3, vec![1.0, 2.0]).is_ok());
    }

    #[test]
    fn constant_energy() {
        let grid = TimeGrid::new(0.0, 1e-3, 1000).unwrap();
        let s = Signal::from_fn(grid, |_| 1.0).unwrap();
        assert!((s.energy() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn peak_prefers_first_of_equal_magnitudes() {
        let s = Signal::new(0.0, 1.0, vec![0.0, -3.0, 3.0, 1.0]).unwrap();
        assert_eq!(s.peak(), Some((1, -3.0)));
    }
}
