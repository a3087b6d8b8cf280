use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;
use shockwave::select::{reconstruct, select, SelectionReport};
use shockwave::spectral::{
    band_pass, band_symmetry_error, bell_band, compare_with, dft_spectrum, ncc, srs,
};
use shockwave::waveform::classify;
use shockwave::{decompose, DecomposeOptions, Decomposition, Signal, Termination, WaveformParams};

use crate::config::{BoundsConfig, RunConfig};
use crate::io::{fmt_f64, read_signal, write_columns, write_signal, write_table, ACCEL_COLUMN};
use crate::report::{parse_rows, ComponentRow, ComponentsFile};
use crate::{EXIT_FIT_FAILED, EXIT_MAX_COMPONENTS, EXIT_OK};

/// Relative spectral level bounding a component's band in `analyze`.
pub const BAND_LEVEL: f64 = 0.01;

#[derive(Debug, Parser)]
#[command(name = "shockwave", version, about = "Shock waveform decomposition and analysis")]
pub struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extract waveform components and select the characteristic set.
    Decompose(DecomposeArgs),
    /// Sample a sum of components onto a uniform grid.
    Synth(SynthArgs),
    /// Spectrum, SRS, band-pass and comparison data for a record.
    Analyze(AnalyzeArgs),
    /// Shock distance category of a kappa value.
    Classify(ClassifyArgs),
}

#[derive(Debug, Args, Default)]
pub struct CommonArgs {
    /// Override the sample rate inferred from timestamps, Hz.
    #[arg(long)]
    pub sample_rate: Option<f64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// SRS grid as lo:hi:per_octave (Hz).
    #[arg(long)]
    pub srs_grid: Option<String>,
    /// SRS quality factor.
    #[arg(long)]
    pub srs_q: Option<f64>,
}

#[derive(Debug, Args)]
pub struct DecomposeArgs {
    /// Input CSV (`time_s,accel_ms2`).
    pub input: Option<PathBuf>,
    /// Residual energy ratio at which extraction stops.
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[arg(long)]
    pub max_components: Option<usize>,
    /// TOML file with per-parameter [lower, upper] bounds in display units.
    #[arg(long)]
    pub bounds: Option<PathBuf>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Component rows (`components.json` or a bare list of rows).
    #[arg(long)]
    pub components: PathBuf,
    /// Hz.
    #[arg(long)]
    pub sample_rate: f64,
    /// Record length, s.
    #[arg(long)]
    pub duration: f64,
    /// Time of the first sample, s.
    #[arg(long, default_value_t = 0.0)]
    pub start: f64,
    /// Output CSV; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    pub input: Option<PathBuf>,
    /// Components whose selected set (or all rows) forms the reconstruction.
    #[arg(long)]
    pub components: Option<PathBuf>,
    /// A reconstruction CSV on the same grid, used instead of `--components`.
    #[arg(long, conflicts_with = "components")]
    pub compare_with: Option<PathBuf>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    /// κ = τ f.
    #[arg(required_unless_present_all = ["tau_ms", "frequency_hz"])]
    pub kappa: Option<f64>,
    #[arg(long, requires = "frequency_hz", conflicts_with = "kappa")]
    pub tau_ms: Option<f64>,
    #[arg(long, requires = "tau_ms")]
    pub frequency_hz: Option<f64>,
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> Result<i32> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    match cli.command {
        Command::Decompose(a) => {
            apply_common(&mut cfg, &a.common)?;
            if let Some(p) = a.input {
                cfg.input = Some(p);
            }
            if let Some(t) = a.tolerance {
                cfg.tolerance = t;
            }
            if let Some(m) = a.max_components {
                cfg.max_components = m;
            }
            if let Some(b) = a.bounds {
                cfg.bounds = BoundsConfig::load(&b)?;
            }
            cfg.validate()?;
            cmd_decompose(&cfg)
        }
        Command::Synth(a) => cmd_synth(&a),
        Command::Analyze(a) => {
            apply_common(&mut cfg, &a.common)?;
            if let Some(p) = &a.input {
                cfg.input = Some(p.clone());
            }
            cfg.validate()?;
            cmd_analyze(&cfg, a.components.as_deref(), a.compare_with.as_deref())
        }
        Command::Classify(a) => {
            let kappa = match (a.kappa, a.tau_ms, a.frequency_hz) {
                (Some(k), _, _) => k,
                (None, Some(t), Some(f)) => t * 1e-3 * f,
                _ => bail!("give a kappa value or both --tau-ms and --frequency-hz"),
            };
            println!("{}", classify(kappa)?);
            Ok(EXIT_OK)
        }
    }
}

fn apply_common(cfg: &mut RunConfig, c: &CommonArgs) -> Result<()> {
    if let Some(fs) = c.sample_rate {
        cfg.sample_rate = Some(fs);
    }
    if let Some(o) = &c.out {
        cfg.out = o.clone();
    }
    if let Some(g) = &c.srs_grid {
        cfg.srs.parse_grid_flag(g)?;
    }
    if let Some(q) = c.srs_q {
        cfg.srs.q = q;
    }
    Ok(())
}

fn input_signal(cfg: &RunConfig) -> Result<Signal> {
    let path = cfg.input.as_ref().ok_or_else(|| anyhow!("no input file given"))?;
    read_signal(path, cfg.sample_rate)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

/// Decomposition plus selection, as the library sees it.
pub struct DecomposeOutcome {
    pub decomposition: Decomposition,
    pub selection: Option<SelectionReport>,
    pub file: ComponentsFile,
}

pub fn run_decomposition(signal: &Signal, cfg: &RunConfig) -> Result<DecomposeOutcome> {
    let bounds = if cfg.bounds.is_empty() { None } else { Some(cfg.bounds.resolve(signal)?) };
    let options = DecomposeOptions {
        tolerance: cfg.tolerance,
        max_components: cfg.max_components,
        bounds,
        ..Default::default()
    };
    let d = decompose(signal, &options)?;
    let selection = if d.termination == Termination::ToleranceMet {
        Some(select(&d, signal, cfg.tolerance)?)
    } else {
        None
    };
    let file = ComponentsFile::new(&d, selection.as_ref());
    Ok(DecomposeOutcome { decomposition: d, selection, file })
}

pub fn exit_code(t: Termination) -> i32 {
    match t {
        Termination::ToleranceMet => EXIT_OK,
        Termination::MaxComponents => EXIT_MAX_COMPONENTS,
        Termination::FitFailed { .. } => EXIT_FIT_FAILED,
    }
}

pub fn cmd_decompose(cfg: &RunConfig) -> Result<i32> {
    let signal = input_signal(cfg)?;
    let out = run_decomposition(&signal, cfg)?;
    let d = &out.decomposition;
    fs::create_dir_all(&cfg.out).with_context(|| format!("creating {}", cfg.out.display()))?;

    fs::write(cfg.out.join("components.json"), out.file.to_json()?)?;

    let trace: Vec<Vec<f64>> =
        d.residual_ratio_trace.iter().enumerate().map(|(i, &r)| vec![i as f64, r]).collect();
    write_table(create(&cfg.out.join("residual_trace.csv"))?, &["iteration", "residual_ratio"], &trace)?;

    let indices: Vec<usize> = match &out.selection {
        Some(s) => s.selected_set.clone(),
        None => (0..d.len()).collect(),
    };
    let rhat = reconstruct(d, &indices, &signal)?;
    let residual = signal.sub(&rhat)?;
    let time: Vec<f64> = (0..signal.len()).map(|k| signal.time(k)).collect();
    write_columns(
        create(&cfg.out.join("reconstruction.csv"))?,
        &time,
        &[
            (ACCEL_COLUMN, &signal.samples),
            ("reconstructed_ms2", &rhat.samples),
            ("residual_ms2", &residual.samples),
        ],
    )?;

    let mut text = String::new();
    writeln!(text, "termination {}", d.termination.label())?;
    if let Termination::FitFailed { iteration } = d.termination {
        writeln!(text, "failed_component {iteration}")?;
    }
    writeln!(text, "components {}", d.len())?;
    writeln!(text, "final_residual_ratio {}", fmt_f64(d.final_residual_ratio()))?;
    match &out.selection {
        Some(s) => {
            writeln!(text, "eta90 {}", s.eta90)?;
            writeln!(text, "energy_set {:?}", one_based(&s.energy_set))?;
            writeln!(text, "low_freq_set {:?}", one_based(&s.low_freq_set))?;
            writeln!(
                text,
                "selected_residual_ratio {}",
                fmt_f64(s.residual_ratio_of_reconstruction)
            )?;
        }
        None => writeln!(text, "eta90 none")?,
    }
    writeln!(text, "goodness_violations {:?}", d.goodness_violations())?;
    if let Some(first) = d.components.first() {
        writeln!(text, "dominant_kappa {}", fmt_f64(first.params.kappa()))?;
        writeln!(text, "dominant_category {}", classify(first.params.kappa())?)?;
    }
    fs::write(cfg.out.join("report.txt"), text)?;
    info!("wrote results to {}", cfg.out.display());
    Ok(exit_code(d.termination))
}

fn one_based(v: &[usize]) -> Vec<usize> {
    v.iter().map(|i| i + 1).collect()
}

/// Validated parameters of every row, in file order.
pub fn load_components(path: &Path) -> Result<Vec<(ComponentRow, WaveformParams)>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let rows = parse_rows(&text)?;
    rows.into_iter()
        .map(|r| {
            let p = r.to_params()?;
            Ok((r, p))
        })
        .collect()
}

pub fn synthesize(params: &[WaveformParams], sample_rate: f64, duration: f64, start: f64) -> Result<Signal> {
    if !(sample_rate > 0.0 && duration > 0.0) {
        bail!("sample rate and duration must be positive");
    }
    let n = (duration * sample_rate).round() as usize;
    Ok(Signal::from_waveforms(start, 1.0 / sample_rate, n, params)?)
}

pub fn cmd_synth(a: &SynthArgs) -> Result<i32> {
    let comps = load_components(&a.components)?;
    let params: Vec<WaveformParams> = comps.iter().map(|c| c.1).collect();
    let s = synthesize(&params, a.sample_rate, a.duration, a.start)?;
    match &a.out {
        Some(p) => write_signal(create(p)?, &s)?,
        None => write_signal(std::io::stdout().lock(), &s)?,
    }
    Ok(EXIT_OK)
}

pub fn cmd_analyze(cfg: &RunConfig, components: Option<&Path>, compare_path: Option<&Path>) -> Result<i32> {
    let signal = input_signal(cfg)?;
    fs::create_dir_all(&cfg.out).with_context(|| format!("creating {}", cfg.out.display()))?;

    let spectrum = dft_spectrum(&signal);
    let (freqs, values) = spectrum.one_sided();
    let rows: Vec<Vec<f64>> =
        freqs.iter().zip(&values).map(|(f, v)| vec![*f, v.re, v.im, v.norm()]).collect();
    write_table(
        create(&cfg.out.join("spectrum.csv"))?,
        &["frequency_hz", "re", "im", "magnitude"],
        &rows,
    )?;

    let comps = components.map(load_components).transpose()?;
    let rhat = match (&comps, compare_path) {
        (Some(c), _) => {
            let any_set = c.iter().any(|(r, _)| r.in_selected_set());
            let chosen: Vec<WaveformParams> =
                c.iter().filter(|(r, _)| !any_set || r.in_selected_set()).map(|(_, p)| *p).collect();
            let mut s = Signal::zeros(signal.grid());
            for p in &chosen {
                p.add_real_to(&mut s, 1.0)?;
            }
            Some(s)
        }
        (None, Some(p)) => {
            let other = read_signal(p, cfg.sample_rate)?;
            if other.len() != signal.len() {
                bail!("{} has {} samples, expected {}", p.display(), other.len(), signal.len());
            }
            Some(Signal::new(signal.start_time, signal.dt, other.samples)?)
        }
        (None, None) => None,
    };

    let grid = cfg.srs.grid(signal.sample_rate())?;
    let srs_r = srs(&signal, cfg.srs.q, &grid)?;
    let mut header = vec!["frequency_hz", "srs_ms2"];
    let srs_h = match &rhat {
        Some(h) => {
            header.push("srs_reconstructed_ms2");
            Some(srs(h, cfg.srs.q, &grid)?)
        }
        None => None,
    };
    let rows: Vec<Vec<f64>> = (0..grid.len())
        .map(|k| {
            let mut row = vec![grid[k], srs_r.values[k]];
            if let Some(h) = &srs_h {
                row.push(h.values[k]);
            }
            row
        })
        .collect();
    write_table(create(&cfg.out.join("srs.csv"))?, &header, &rows)?;

    let mut text = String::new();
    if let Some(h) = &rhat {
        let c = compare_with(&signal, h, &grid, cfg.srs.q)?;
        writeln!(text, "residual_energy_ratio {}", fmt_f64(c.residual_energy_ratio))?;
        writeln!(text, "ncc {}", fmt_f64(c.ncc))?;
        writeln!(text, "srs_max_abs_db_error {}", fmt_f64(c.srs_max_abs_db_error))?;
        writeln!(text, "spectrum_l2_error {}", fmt_f64(c.spectrum_l2_error))?;
    }
    if let Some(c) = &comps {
        let time: Vec<f64> = (0..signal.len()).map(|k| signal.time(k)).collect();
        for (row, p) in c {
            let (lo, hi) = bell_band(&spectrum, p.frequency_hz(), BAND_LEVEL)?;
            let hi = hi.max(lo + spectrum.resolution());
            let bp = band_pass(&signal, lo, hi.min(signal.sample_rate() / 2.0))?;
            let own = p.sample_real(signal.grid())?;
            let score = ncc(&bp.samples, &own.samples);
            let sym = band_symmetry_error(p, lo, hi);
            writeln!(
                text,
                "band {} lo_hz {} hi_hz {} ncc {} symmetry_error {}",
                row.index,
                fmt_f64(lo),
                fmt_f64(hi),
                fmt_f64(score),
                fmt_f64(sym)
            )?;
            write_columns(
                create(&cfg.out.join(format!("bandpass_{}.csv", row.index)))?,
                &time,
                &[("bandpassed_ms2", &bp.samples), ("component_ms2", &own.samples)],
            )?;
        }
    }
    if !text.is_empty() {
        fs::write(cfg.out.join("compare.txt"), text)?;
    }
    Ok(EXIT_OK)
}
