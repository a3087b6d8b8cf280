//! `components.json`: one row per fitted component in display units.

use std::io;

use anyhow::{anyhow, Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};
use shockwave::select::SelectionReport;
use shockwave::{Decomposition, WaveformParams};

/// Component parameters as written to and read from JSON. Derived columns
/// are optional on input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentRow {
    /// 1-based fit order.
    pub index: usize,
    /// m/s².
    pub amplitude: f64,
    pub frequency_hz: f64,
    pub initial_time_ms: f64,
    pub peak_offset_ms: f64,
    pub damping_ratio: f64,
    pub phase_rad: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energy_percent: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub real_energy_percent: Option<f64>,
    /// `E`, `L` or `none`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub set: Option<String>,
}

impl ComponentRow {
    pub fn from_params(index: usize, p: &WaveformParams) -> Self {
        let p = p.canonicalize();
        Self {
            index,
            amplitude: p.amplitude,
            frequency_hz: p.frequency_hz(),
            initial_time_ms: p.initial_time * 1e3,
            peak_offset_ms: p.peak_offset * 1e3,
            damping_ratio: p.damping_ratio,
            phase_rad: p.phase,
            kappa: Some(p.kappa()),
            energy_percent: None,
            real_energy_percent: None,
            set: None,
        }
    }

    pub fn to_params(&self) -> Result<WaveformParams> {
        WaveformParams::from_display(
            self.amplitude,
            self.frequency_hz,
            self.initial_time_ms,
            self.peak_offset_ms,
            self.damping_ratio,
            self.phase_rad,
        )
        .map_err(|e| anyhow!("component row {}: {e}", self.index))
    }

    pub fn in_selected_set(&self) -> bool {
        matches!(self.set.as_deref(), Some("E") | Some("L"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentsFile {
    pub termination: String,
    pub eta90: Option<usize>,
    pub tolerance: f64,
    /// (m/s²)²·s.
    pub original_energy: f64,
    pub residual_ratio: f64,
    pub components: Vec<ComponentRow>,
}

impl ComponentsFile {
    pub fn new(d: &Decomposition, selection: Option<&SelectionReport>) -> Self {
        let components = d
            .components
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let mut row = ComponentRow::from_params(i + 1, &c.params);
                row.energy_percent = Some(100.0 * c.energy_ratio);
                row.real_energy_percent = Some(100.0 * c.real_energy_ratio);
                let set = selection.and_then(|s| s.membership(i)).map_or("none", |k| k.code());
                row.set = Some(set.to_string());
                row
            })
            .collect();
        Self {
            termination: d.termination.label().to_string(),
            eta90: selection.map(|s| s.eta90),
            tolerance: d.tolerance,
            original_energy: d.original_energy,
            residual_ratio: d.final_residual_ratio(),
            components,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        to_json(self)
    }
}

/// Accepts either a full components file or a bare list of rows.
pub fn parse_rows(text: &str) -> Result<Vec<ComponentRow>> {
    if let Ok(file) = serde_json::from_str::<ComponentsFile>(text) {
        return Ok(file.components);
    }
    serde_json::from_str::<Vec<ComponentRow>>(text).context("parsing component rows")
}

/// Pretty printer that writes every float with 17 significant digits.
struct Fixed17<'a>(PrettyFormatter<'a>);

impl Formatter for Fixed17<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            write!(writer, "{value:.16e}")
        } else {
            writer.write_all(b"null")
        }
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Fixed17(PrettyFormatter::new()));
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf)?)
}
