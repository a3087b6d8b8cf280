//! Run configuration, loadable from TOML and overridable from flags.
//!
//! ```toml
//! input = "shock.csv"
//! tolerance = 0.1
//! max_components = 100
//! out = "results"
//!
//! [bounds]
//! frequency_hz = [100.0, 20000.0]
//! damping_ratio = [0.0, 10.0]
//!
//! [srs]
//! lo = 100.0
//! hi = 10000.0
//! per_octave = 12
//! q = 10.0
//! ```

use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;
use shockwave::fitting::Interval;
use shockwave::spectral::{srs_grid, DEFAULT_PER_OCTAVE, DEFAULT_Q};
use shockwave::{Bounds, Signal};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    /// Hz; overrides the rate inferred from timestamps.
    pub sample_rate: Option<f64>,
    pub tolerance: f64,
    pub max_components: usize,
    pub bounds: BoundsConfig,
    pub srs: SrsConfig,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            input: None,
            sample_rate: None,
            tolerance: 0.10,
            max_components: 100,
            bounds: BoundsConfig::default(),
            srs: SrsConfig::default(),
            out: PathBuf::from("shockwave-out"),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let cfg: Self = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0 && self.tolerance <= 1.0) {
            bail!("tolerance must lie in (0, 1], got {}", self.tolerance);
        }
        if let Some(fs) = self.sample_rate {
            if !(fs.is_finite() && fs > 0.0) {
                bail!("sample_rate must be positive, got {fs}");
            }
        }
        if !(self.srs.q > 0.5) {
            bail!("SRS Q must exceed 0.5, got {}", self.srs.q);
        }
        if self.srs.per_octave == 0 {
            bail!("SRS per_octave must be positive");
        }
        Ok(())
    }
}

/// Optional `[lower, upper]` pairs in display units; missing entries fall
/// back to limits derived from the record.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundsConfig {
    /// m/s².
    pub amplitude: Option<[f64; 2]>,
    pub frequency_hz: Option<[f64; 2]>,
    pub initial_time_ms: Option<[f64; 2]>,
    pub peak_offset_ms: Option<[f64; 2]>,
    pub damping_ratio: Option<[f64; 2]>,
    pub phase_rad: Option<[f64; 2]>,
}

impl BoundsConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn is_empty(&self) -> bool {
        *self == Self::default()
    }

    pub fn resolve(&self, signal: &Signal) -> Result<Bounds> {
        let mut b = Bounds::default_for(signal)?;
        let set = |iv: &mut Interval, v: Option<[f64; 2]>, scale: f64| {
            if let Some([lo, hi]) = v {
                *iv = Interval::new(lo * scale, hi * scale);
            }
        };
        set(&mut b.amplitude, self.amplitude, 1.0);
        set(&mut b.angular_frequency, self.frequency_hz, TAU);
        set(&mut b.initial_time, self.initial_time_ms, 1e-3);
        set(&mut b.peak_offset, self.peak_offset_ms, 1e-3);
        set(&mut b.damping_ratio, self.damping_ratio, 1.0);
        set(&mut b.phase, self.phase_rad, 1.0);
        b.validate()?;
        Ok(b)
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SrsConfig {
    /// Hz; 100 when absent.
    pub lo: Option<f64>,
    /// Hz; a quarter of the sample rate when absent.
    pub hi: Option<f64>,
    pub per_octave: u32,
    pub q: f64,
}

impl Default for SrsConfig {
    fn default() -> Self {
        Self { lo: None, hi: None, per_octave: DEFAULT_PER_OCTAVE, q: DEFAULT_Q }
    }
}

impl SrsConfig {
    /// Parses `lo:hi:per_octave`.
    pub fn parse_grid_flag(&mut self, spec: &str) -> Result<()> {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            bail!("SRS grid must look like lo:hi:per_octave, got `{spec}`");
        }
        let lo: f64 = parts[0].trim().parse().with_context(|| format!("bad SRS lo `{}`", parts[0]))?;
        let hi: f64 = parts[1].trim().parse().with_context(|| format!("bad SRS hi `{}`", parts[1]))?;
        let n: u32 =
            parts[2].trim().parse().with_context(|| format!("bad SRS per-octave `{}`", parts[2]))?;
        self.lo = Some(lo);
        self.hi = Some(hi);
        self.per_octave = n;
        Ok(())
    }

    pub fn grid(&self, sample_rate: f64) -> Result<Vec<f64>> {
        let lo = self.lo.unwrap_or(100.0);
        let hi = self.hi.unwrap_or(sample_rate / 4.0);
        Ok(srs_grid(lo, hi, self.per_octave)?)
    }
}
