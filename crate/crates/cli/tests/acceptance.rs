//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero when a criterion fails unexpectedly.

use std::f64::consts::TAU;
use std::sync::OnceLock;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use shockwave::decompose::goodness_check;
use shockwave::oracles::{
    advanced_prony, mdof_response, scale_to_energy_shares, taylor_term, AdvancedPronyParams,
    ModalSystem,
};
use shockwave::select::reconstruct;
use shockwave::spectral::{
    band_pass, band_symmetry_error, bell_band, dft_complex, dft_spectrum, ncc, srs, srs_grid,
};
use shockwave::waveform::classify;
use shockwave::{decompose, DecomposeOptions, FieldCategory, Signal, Termination, TimeGrid, WaveformParams};
use shockwave_cli::commands::{run_decomposition, DecomposeOutcome};
use shockwave_cli::config::RunConfig;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

// ---------------------------------------------------------------- tables

/// (table, row, τ ms, f Hz, printed κ)
const TABLE_ROWS: &[(u8, u8, f64, f64, f64)] = &[
    (3, 1, 0.15, 2077.0, 0.32),
    (3, 2, 0.08, 2534.0, 0.21),
    (3, 3, 0.02, 1543.0, 0.04),
    (3, 4, 0.22, 5469.0, 1.23),
    (3, 5, 13.03, 3987.0, 51.99),
    (3, 6, 0.00, 3289.0, 0.01),
    (3, 7, 3.66, 6056.0, 22.19),
    (3, 8, 0.17, 6512.0, 1.14),
    (3, 9, 0.18, 5896.0, 1.07),
    (3, 10, 0.12, 9444.0, 1.13),
    (3, 11, 12.09, 1016.0, 12.29),
    (3, 12, 0.04, 0.08, 0.00),
    (4, 1, 1.3, 4683.0, 6.11),
    (4, 2, 21.99, 4315.0, 94.89),
    (4, 3, 5.46, 22068.0, 120.69),
    (4, 4, 1.07, 4086.0, 4.39),
    (4, 5, 6.66, 16446.0, 109.63),
    (4, 6, 0.53, 4863.0, 2.60),
    (4, 7, 0.04, 16626.0, 0.71),
    (4, 8, 19.51, 5554.0, 108.40),
    (4, 9, 4.37, 20996.0, 91.91),
    (4, 10, 0.18, 3249.0, 0.59),
    (5, 1, 5.73, 4437.0, 25.45),
    (5, 2, 8.36, 2829.0, 23.66),
    (5, 3, 1.57, 702.0, 1.10),
    (5, 4, 67.21, 127.0, 8.57),
    (5, 5, 1.00, 90.0, 0.09),
];

/// Rows whose printed τ is too coarse for the ±0.06 window.
const KNOWN_KAPPA_MISSES: &[(u8, u8)] = &[(4, 3), (4, 5), (4, 9)];

fn kappa_of(tau_ms: f64, f_hz: f64) -> f64 {
    WaveformParams::from_display(1.0, f_hz, 0.0, tau_ms, 0.0, 0.0).unwrap().kappa()
}

fn criterion_1() -> Verdict {
    let mut misses = Vec::new();
    let mut checked = 0;
    for &(table, row, tau, f, printed) in TABLE_ROWS {
        if tau <= 0.01 {
            continue;
        }
        checked += 1;
        let k = kappa_of(tau, f);
        if (k - printed).abs() > 0.06 {
            misses.push(((table, row), k, printed));
        }
    }
    // supplementary: could the printed τ be a truncation of the true value?
    let truncation_ok = misses.iter().all(|&((t, r), _, printed)| {
        let &(_, _, tau, f, _) = TABLE_ROWS.iter().find(|x| x.0 == t && x.1 == r).unwrap();
        let lo = kappa_of(tau, f - 0.5);
        let hi = kappa_of(tau + 0.01, f + 0.5);
        printed >= lo - 0.005 && printed <= hi + 0.005
    });
    let detail = if misses.is_empty() {
        format!("{checked} rows within ±0.06")
    } else {
        let list: Vec<String> = misses
            .iter()
            .map(|((t, r), k, p)| format!("table {t} row {r}: {k:.2} vs {p:.2}"))
            .collect();
        format!(
            "{}/{checked} rows outside ±0.06 [{}]; printed κ reachable if τ was truncated: {truncation_ok}",
            misses.len(),
            list.join("; ")
        )
    };
    let mut found: Vec<(u8, u8)> = misses.iter().map(|m| m.0).collect();
    found.sort();
    KNOWN_FAILURES_MATCH.get_or_init(|| found == KNOWN_KAPPA_MISSES && truncation_ok);
    verdict(misses.is_empty(), detail)
}

static KNOWN_FAILURES_MATCH: OnceLock<bool> = OnceLock::new();

fn criterion_2() -> Verdict {
    use FieldCategory::*;
    let boundaries = [
        (0.0, NearField),
        (1.0 - 1e-12, NearField),
        (1.0, MidField),
        (10.0 - 1e-12, MidField),
        (10.0, FarField),
        (1e6, FarField),
    ];
    let mut ok = boundaries.iter().all(|&(k, c)| classify(k).unwrap() == c);
    let rows = [(0.32, NearField, 0.15, 2077.0), (6.11, MidField, 1.3, 4683.0), (25.45, FarField, 5.73, 4437.0)];
    for (printed, cat, tau, f) in rows {
        ok &= classify(printed).unwrap() == cat;
        ok &= classify(kappa_of(tau, f)).unwrap() == cat;
    }
    ok &= classify(-0.1).is_err();
    verdict(ok, "table boundaries and three dominant rows")
}

// ------------------------------------------------- spectrum vs closed form

fn criterion_3() -> Verdict {
    let f0 = 1000.0;
    let w = TAU * f0;
    let fs = 1.0e6;
    let mut worst: f64 = 0.0;
    let mut worst_case = String::new();
    for &zeta in &[0.01, 0.05, 0.5] {
        for &kappa in &[0.0, 1.0, 5.0, 25.0] {
            let tau = kappa / f0;
            let p = WaveformParams::new(1.0, w, zeta, tau, 0.7, 0.0).unwrap();
            let duration = 2.0 * tau + 15.0 / (zeta * w);
            let n = (duration * fs).ceil() as usize;
            let grid = TimeGrid::new(0.0, 1.0 / fs, n).unwrap();
            let spec = dft_complex(&p.sample_complex(grid).unwrap(), grid).unwrap();
            let (mut num, mut den) = (0.0, 0.0);
            for (f, v) in spec.frequencies.iter().zip(&spec.values) {
                let xi = TAU * f;
                if xi < w / 4.0 || xi > 4.0 * w {
                    continue;
                }
                let exact = p.spectrum(xi).unwrap();
                num += (v - exact).norm_sqr();
                den += exact.norm_sqr();
            }
            let err = (num / den).sqrt();
            if err > worst {
                worst = err;
                worst_case = format!("ζ={zeta}, κ={kappa}");
            }
        }
    }
    verdict(worst < 0.01, format!("worst relative L2 error {worst:.2e} ({worst_case}) over 12 cases"))
}

// --------------------------------------------------------- round trip

fn round_trip_truth() -> (Vec<WaveformParams>, Signal) {
    let grid = TimeGrid::new(0.0, 1e-5, 2000).unwrap();
    let shapes = [
        WaveformParams::new(1.0, TAU * 500.0, 0.06, 3.0e-3, 0.3, 1.0e-3).unwrap(),
        WaveformParams::new(1.0, TAU * 2000.0, 0.05, 2.0e-3, 2.0, 2.0e-3).unwrap(),
        WaveformParams::new(1.0, TAU * 8000.0, 0.04, 1.0e-3, 4.0, 3.0e-3).unwrap(),
    ];
    // third share sits above the 10% tolerance so that all three get fitted
    let comps = scale_to_energy_shares(&shapes, &[0.60, 0.28, 0.12], 1000.0, grid).unwrap();
    let s = Signal::from_waveforms(grid.start, grid.dt, grid.len, &comps).unwrap();
    (comps, s)
}

fn round_trip() -> &'static (Vec<WaveformParams>, Signal, DecomposeOutcome, f64) {
    static CELL: OnceLock<(Vec<WaveformParams>, Signal, DecomposeOutcome, f64)> = OnceLock::new();
    CELL.get_or_init(|| {
        let (truth, s) = round_trip_truth();
        let t = Instant::now();
        let out = run_decomposition(&s, &RunConfig::default()).unwrap();
        (truth, s, out, t.elapsed().as_secs_f64())
    })
}

fn criterion_4() -> Verdict {
    let (truth, _, out, secs) = round_trip();
    let d = &out.decomposition;
    let mut ok = d.termination == Termination::ToleranceMet && d.len() == 3;
    let mut worst_f: f64 = 0.0;
    let mut worst_a: f64 = 0.0;
    if d.len() == 3 {
        for w in truth {
            // components may come out in any order; match by frequency
            let c = d
                .components
                .iter()
                .min_by(|a, b| {
                    let da = (a.params.angular_frequency - w.angular_frequency).abs();
                    let db = (b.params.angular_frequency - w.angular_frequency).abs();
                    da.total_cmp(&db)
                })
                .unwrap();
            let fe = (c.params.angular_frequency - w.angular_frequency).abs() / w.angular_frequency;
            // (A, φ) and (-A, φ + π) are the same waveform
            let ae = (c.params.amplitude.abs() - w.amplitude.abs()).abs() / w.amplitude.abs();
            worst_f = worst_f.max(fe);
            worst_a = worst_a.max(ae);
        }
        ok &= worst_f < 0.01 && worst_a < 0.02;
    }
    ok &= *secs < 300.0;
    verdict(
        ok,
        format!(
            "{} components, {}, freq err {worst_f:.2e}, |A| err {worst_a:.2e}, {secs:.1} s",
            d.len(),
            d.termination.label()
        ),
    )
}

fn random_fixture(seed: u64) -> Signal {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = rng.gen_range(2..=4);
    let fs = 50e3;
    let grid = TimeGrid::new(0.0, 1.0 / fs, 1000).unwrap();
    let base = rng.gen_range(300.0..700.0);
    let mut freqs: Vec<f64> = (0..k).map(|j| base * 2.5f64.powi(j as i32)).collect();
    // energy order independent of frequency order
    for i in (1..freqs.len()).rev() {
        let j = rng.gen_range(0..=i);
        freqs.swap(i, j);
    }
    let mut shares: Vec<f64> =
        (0..k).map(|j| 0.55f64.powi(j as i32) * rng.gen_range(0.9..1.1)).collect();
    let total: f64 = shares.iter().sum();
    shares.iter_mut().for_each(|s| *s /= total);
    let shapes: Vec<WaveformParams> = freqs
        .iter()
        .map(|&f| {
            let kappa = rng.gen_range(0.5..4.0);
            WaveformParams::new(
                1.0,
                TAU * f,
                rng.gen_range(0.03..0.08),
                kappa / f,
                rng.gen_range(0.0..TAU),
                rng.gen_range(0.5e-3..3e-3),
            )
            .unwrap()
        })
        .collect();
    let comps = scale_to_energy_shares(&shapes, &shares, 100.0, grid).unwrap();
    Signal::from_waveforms(grid.start, grid.dt, grid.len, &comps).unwrap()
}

fn criterion_5() -> Verdict {
    let (_, _, out, _) = round_trip();
    let mut failures = Vec::new();
    let v = out.decomposition.goodness_violations();
    if !v.is_empty() {
        failures.push(format!("round trip {v:?}"));
    }
    let mut counts = Vec::new();
    for seed in 0..10u64 {
        let s = random_fixture(seed);
        let d = decompose(&s, &DecomposeOptions::default()).unwrap();
        counts.push(d.len());
        let v = goodness_check(&d.energy_ratios());
        if !v.is_empty() {
            failures.push(format!("seed {seed}: {v:?}"));
        }
    }
    verdict(
        failures.is_empty(),
        format!("component counts {counts:?}; violations: {}", if failures.is_empty() { "none".into() } else { failures.join(", ") }),
    )
}

fn criterion_6() -> Verdict {
    // (ζ, f, fs, T); the rectangle rule adds about ζω·dt, kept below 0.1%
    let cases = [(0.05, 100.0, 100e3, 1.0), (0.01, 1000.0, 200e3, 0.2), (0.2, 50.0, 100e3, 0.5), (0.5, 2000.0, 10e6, 0.004)];
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for (zeta, f, fs, duration) in cases {
        let w = TAU * f;
        assert!(zeta * w * duration >= 10.0);
        let p = WaveformParams::new(1.3, w, zeta, 0.0, 0.2, 0.0).unwrap();
        let grid = TimeGrid::new(0.0, 1.0 / fs, (duration * fs).round() as usize).unwrap();
        let e = p.complex_energy(grid).unwrap();
        let exact = p.amplitude * p.amplitude / (2.0 * zeta * w);
        let rel = (e - exact).abs() / exact;
        worst = worst.max(rel);
        ok &= rel < 0.005;
    }
    verdict(ok, format!("worst relative error {worst:.2e} over {} records", cases.len()))
}

fn criterion_7() -> Verdict {
    let fs = 50e3;
    let grid = TimeGrid::new(0.0, 1.0 / fs, 5000).unwrap();
    let bells = [
        WaveformParams::new(1.0, TAU * 1500.0, 0.02, 15.0 / 1500.0, 0.4, 1e-3).unwrap(),
        WaveformParams::new(0.7, TAU * 4000.0, 0.015, 20.0 / 4000.0, 2.2, 2e-3).unwrap(),
        WaveformParams::new(0.5, TAU * 9000.0, 0.01, 25.0 / 9000.0, 5.0, 3e-3).unwrap(),
    ];
    let s = Signal::from_waveforms(grid.start, grid.dt, grid.len, &bells).unwrap();
    let spec = dft_spectrum(&s);
    let mut ok = true;
    let mut parts = Vec::new();
    for p in &bells {
        let (lo, hi) = bell_band(&spec, p.frequency_hz(), 0.01).unwrap();
        let bp = band_pass(&s, lo, hi).unwrap();
        let own = p.sample_real(grid).unwrap();
        let c = ncc(&bp.samples, &own.samples);
        let sym = band_symmetry_error(p, lo, hi);
        ok &= c >= 0.95 && sym < 0.02;
        parts.push(format!("{:.0} Hz: ncc {c:.4}, symmetry {sym:.2e}", p.frequency_hz()));
    }
    verdict(ok, parts.join("; "))
}

/// Maximax absolute acceleration of a base-driven oscillator, RK4 with the
/// input interpolated linearly between samples, peak taken at sample times.
fn srs_rk4(s: &Signal, f_n: f64, q: f64) -> f64 {
    let wn = TAU * f_n;
    let zeta = 1.0 / (2.0 * q);
    let sub = 40;
    let h = s.dt / sub as f64;
    let rhs = |z: f64, v: f64, a: f64| (v, -2.0 * zeta * wn * v - wn * wn * z - a);
    let (mut z, mut v) = (0.0, 0.0);
    let mut peak = 0.0_f64;
    let mut prev = 0.0;
    for &x in &s.samples {
        // advance from the previous sample instant to this one
        for j in 0..sub {
            let a0 = prev + (x - prev) * (j as f64 / sub as f64);
            let am = prev + (x - prev) * ((j as f64 + 0.5) / sub as f64);
            let a1 = prev + (x - prev) * ((j + 1) as f64 / sub as f64);
            let k1 = rhs(z, v, a0);
            let k2 = rhs(z + 0.5 * h * k1.0, v + 0.5 * h * k1.1, am);
            let k3 = rhs(z + 0.5 * h * k2.0, v + 0.5 * h * k2.1, am);
            let k4 = rhs(z + h * k3.0, v + h * k3.1, a1);
            z += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
            v += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        }
        prev = x;
        peak = peak.max((2.0 * zeta * wn * v + wn * wn * z).abs());
    }
    peak
}

fn criterion_8() -> Verdict {
    let (_, r, out, _) = round_trip();
    let indices = match &out.selection {
        Some(sel) => sel.selected_set.clone(),
        None => return verdict(false, "no selection: tolerance not met"),
    };
    let rhat = reconstruct(&out.decomposition, &indices, r).unwrap();
    let grid = srs_grid(100.0, 10_000.0, 12).unwrap();
    let a = srs(r, 10.0, &grid).unwrap();
    let b = srs(&rhat, 10.0, &grid).unwrap();
    let worst_db = a
        .values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| (20.0 * (y / x).log10()).abs())
        .fold(0.0, f64::max);

    let spots = srs_grid(150.0, 9000.0, 2).unwrap();
    let spots: Vec<f64> = spots.into_iter().take(12).collect();
    let lib = srs(r, 10.0, &spots).unwrap();
    let worst_oracle = spots
        .iter()
        .zip(&lib.values)
        .map(|(&f, &v)| {
            let o = srs_rk4(r, f, 10.0);
            (v - o).abs() / o
        })
        .fold(0.0, f64::max);
    verdict(
        worst_db <= 3.0 && worst_oracle < 0.02 && spots.len() == 12,
        format!(
            "max |dB| {worst_db:.3} over {} grid points; recursive vs RK4 worst {worst_oracle:.2e} at {} spots",
            grid.len(),
            spots.len()
        ),
    )
}

/// Composite Simpson rule for `∫₀ᵗ P(t - x) G(x) dx`.
fn convolution_simpson(p: &AdvancedPronyParams, t: f64) -> Complex64 {
    let w = p.angular_frequency;
    let width = p.width * p.peak_time;
    let h_target = (t / 20_000.0).min(width / 40.0).min(TAU / w / 400.0);
    let mut n = (t / h_target).ceil() as usize;
    n += n % 2;
    let h = t / n as f64;
    let f = |x: f64| {
        let d = (x - p.peak_time) / width;
        let g = (-0.5 * d * d).exp();
        let u = t - x;
        p.amplitude * Complex64::new(-p.damping_ratio * w * u, w * u + p.phase).exp() * g
    };
    let mut acc = f(0.0) + f(t);
    for k in 1..n {
        let c = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += c * f(k as f64 * h);
    }
    acc * h / 3.0
}

fn criterion_9() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(0xA9);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let f = rng.gen_range(200.0..5000.0);
        let w = TAU * f;
        let tau = rng.gen_range(0.2e-3..5e-3);
        let y: f64 = rng.gen_range(0.2..2.5);
        let p = AdvancedPronyParams {
            amplitude: rng.gen_range(0.5..2.0),
            damping_ratio: rng.gen_range(0.005..0.2),
            angular_frequency: w,
            phase: rng.gen_range(0.0..TAU),
            peak_time: tau,
            width: y * 2f64.sqrt() / (tau * w),
        };
        let t = tau * rng.gen_range(0.5..4.0);
        let a = advanced_prony(&p, t).unwrap();
        let b = convolution_simpson(&p, t);
        worst = worst.max((a - b).norm() / b.norm());
    }
    let p0 = AdvancedPronyParams {
        amplitude: 1.0,
        damping_ratio: 0.05,
        angular_frequency: TAU * 1000.0,
        phase: 0.3,
        peak_time: 1e-3,
        width: 0.3,
    };
    let at_zero = advanced_prony(&p0, 0.0).unwrap();
    verdict(
        worst <= 1e-6 && at_zero == Complex64::new(0.0, 0.0),
        format!("worst relative difference {worst:.2e} over 50 draws; value at t=0 is {at_zero}"),
    )
}

fn criterion_10() -> Verdict {
    let wbar = TAU * 1000.0;
    let zeta = 0.05;
    let m = ModalSystem::narrow_band(
        vec![wbar * 0.98, wbar * 1.02],
        vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)],
        zeta,
        0.1,
    )
    .unwrap();
    let c1 = m.taylor_coefficient(1);
    let window = 0.2 / (zeta * wbar);
    let fs = 2e6;
    let grid = TimeGrid::new(0.0, 1.0 / fs, (window * fs).round() as usize + 1).unwrap();
    let r = mdof_response(&m, grid);
    let term: Vec<f64> = grid.times().map(|t| taylor_term(1, c1, wbar, zeta, t).re).collect();
    let c = ncc(&r.samples, &term);
    verdict(c >= 0.99, format!("ncc {c:.6} over [0, {:.3} ms]", window * 1e3))
}

fn criterion_11() -> Verdict {
    let (_, s, first, _) = round_trip();
    let second = run_decomposition(s, &RunConfig::default()).unwrap();
    let a = first.file.to_json().unwrap();
    let b = second.file.to_json().unwrap();
    verdict(a == b, format!("{} bytes, identical: {}", a.len(), a == b))
}

fn main() {
    // `cargo test -- <filter>` style arguments are accepted and ignored
    let criteria: [(u32, &str, fn() -> Verdict); 11] = [
        (1, "kappa arithmetic", criterion_1),
        (2, "classification", criterion_2),
        (3, "closed-form spectrum vs DFT", criterion_3),
        (4, "round-trip decomposition", criterion_4),
        (5, "energy ordering", criterion_5),
        (6, "Prony energy", criterion_6),
        (7, "band-pass equivalence", criterion_7),
        (8, "SRS fidelity", criterion_8),
        (9, "advanced Prony closed form", criterion_9),
        (10, "two-mode Taylor dominance", criterion_10),
        (11, "determinism", criterion_11),
    ];
    let mut unexpected = 0;
    for (id, name, check) in criteria {
        let t = Instant::now();
        let v = check();
        let tag = if v.pass { "PASS" } else { "FAIL" };
        println!("{tag} criterion {id:>2} ({name}): {} [{:.1} s]", v.detail, t.elapsed().as_secs_f64());
        if !v.pass {
            let known = id == 1 && *KNOWN_FAILURES_MATCH.get().unwrap_or(&false);
            if known {
                println!("     criterion 1 misses only the three rows whose printed τ is too coarse");
            } else {
                unexpected += 1;
            }
        }
    }
    if unexpected > 0 {
        println!("{unexpected} criteria failed");
        std::process::exit(1);
    }
}

