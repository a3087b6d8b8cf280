//! Characteristic component sets and simplified reconstruction.
//!
//! The energy set holds the first η₉₀ components in fit order. The
//! low-frequency set adds later components whose carrier frequency is below
//! that of every component fitted before them. Indices are 0-based
//! positions in [`Decomposition::components`].

use crate::decompose::Decomposition;
use crate::error::{invalid_input, Result, ShockError};
use crate::signal::Signal;

/// Smallest component count whose residual energy ratio is at or below
/// `tolerance`.
pub fn eta_90(d: &Decomposition, tolerance: f64) -> Result<usize> {
    d.residual_ratio_trace
        .iter()
        .position(|&r| r <= tolerance)
        .ok_or(ShockError::NoEta { tolerance })
}

/// Components after the first `eta90` whose angular frequency is strictly
/// below that of all earlier components.
pub fn low_freq_set(d: &Decomposition, eta90: usize) -> Result<Vec<usize>> {
    if eta90 > d.len() {
        return Err(invalid_input(format!(
            "eta90 = {eta90} exceeds the {} fitted components",
            d.len()
        )));
    }
    let omegas: Vec<f64> = d.components.iter().map(|c| c.params.angular_frequency).collect();
    let mut floor = omegas[..eta90].iter().copied().fold(f64::INFINITY, f64::min);
    let mut out = Vec::new();
    for (i, &w) in omegas.iter().enumerate().skip(eta90) {
        if w < floor {
            out.push(i);
        }
        floor = floor.min(w);
    }
    Ok(out)
}

/// Sum of the real parts of the chosen components on `reference`'s grid.
/// An empty selection gives the zero signal.
pub fn reconstruct(d: &Decomposition, indices: &[usize], reference: &Signal) -> Result<Signal> {
    let mut out = Signal::zeros(reference.grid());
    for &i in indices {
        let c = d.components.get(i).ok_or_else(|| {
            invalid_input(format!("component index {i} out of range ({} fitted)", d.len()))
        })?;
        c.params.add_real_to(&mut out, 1.0)?;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionReport {
    pub eta90: usize,
    pub energy_set: Vec<usize>,
    pub low_freq_set: Vec<usize>,
    /// Union of both sets in fit order.
    pub selected_set: Vec<usize>,
    pub reconstructed: Signal,
    /// `E(r - r̂) / E(r)`.
    pub residual_ratio_of_reconstruction: f64,
}

impl SelectionReport {
    pub fn membership(&self, index: usize) -> Option<SetKind> {
        if self.energy_set.contains(&index) {
            Some(SetKind::Energy)
        } else if self.low_freq_set.contains(&index) {
            Some(SetKind::LowFrequency)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SetKind {
    Energy,
    LowFrequency,
}

impl SetKind {
    pub fn code(self) -> &'static str {
        match self {
            SetKind::Energy => "E",
            SetKind::LowFrequency => "L",
        }
    }
}

/// Builds both sets and reconstructs `r` from their union.
pub fn select(d: &Decomposition, r: &Signal, tolerance: f64) -> Result<SelectionReport> {
    let eta90 = eta_90(d, tolerance)?;
    let energy_set: Vec<usize> = (0..eta90).collect();
    let low = low_freq_set(d, eta90)?;
    let selected_set: Vec<usize> = energy_set.iter().chain(&low).copied().collect();
    let reconstructed = reconstruct(d, &selected_set, r)?;
    let residual = r.sub(&reconstructed)?;
    let e = r.energy();
    let ratio = if e > 0.0 { residual.energy() / e } else { 0.0 };
    Ok(SelectionReport {
        eta90,
        energy_set,
        low_freq_set: low,
        selected_set,
        reconstructed,
        residual_ratio_of_reconstruction: ratio,
    })
}
