//! Helpers shared by the integration and acceptance suites.
#![allow(dead_code)] // each test crate uses its own subset

use chain_escape::model::{LatticeParams, LatticeState};
use chain_escape::{asymptotics, equilibrium, spectral};

pub fn reference() -> LatticeParams {
    LatticeParams::new(1.0, 1.0, 1.0, 1.0).unwrap()
}

pub fn free() -> LatticeParams {
    LatticeParams::new(1.0, 1.0, 1.0, 0.0).unwrap()
}

/// Unit displacement at site 0, everything else at rest.
pub fn single_site(half_width: i64) -> LatticeState {
    let mut s = LatticeState::zero(half_width);
    s.q[half_width as usize] = 1.0;
    s
}

/// The equilibrium profile as a lattice state at rest.
pub fn equilibrium_state(params: &LatticeParams, half_width: i64) -> LatticeState {
    let prof = equilibrium::profile(params, -half_width, half_width, None).unwrap();
    let width = prof.displacements.len();
    LatticeState::new(-half_width, half_width, 0.0, prof.displacements, vec![0.0; width]).unwrap()
}

/// `zeta_site(t)` over a set of times from one forward transform.
pub fn site_series(
    params: &LatticeParams,
    transformed: &spectral::SpectralState,
    site: i64,
    times: &[f64],
) -> Vec<f64> {
    times
        .iter()
        .map(|&t| asymptotics::site_value_at(transformed, params, site, t).unwrap())
        .collect()
}

/// Uniform grid `start, start + step, ..., <= end`.
pub fn time_grid(start: f64, end: f64, step: f64) -> Vec<f64> {
    let mut times = Vec::new();
    let mut i = 0u64;
    loop {
        let t = start + i as f64 * step;
        if t > end + 1e-9 {
            break;
        }
        times.push(t);
        i += 1;
    }
    times
}

/// Magnitude spectrum of a demeaned, uniformly sampled series by direct
/// summation. Returns the angular-frequency bin width and the local maxima
/// of the positive-frequency bins, sorted by magnitude, largest first.
pub fn spectrum_peaks(values: &[f64], step: f64) -> (f64, Vec<(f64, f64)>) {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let half = n / 2;
    let mut magnitude = Vec::with_capacity(half);
    for m in 1..=half {
        let mut re = 0.0;
        let mut im = 0.0;
        for (j, &x) in values.iter().enumerate() {
            let angle = -2.0 * std::f64::consts::PI * (j as f64) * (m as f64) / n as f64;
            re += (x - mean) * angle.cos();
            im += (x - mean) * angle.sin();
        }
        magnitude.push((re * re + im * im).sqrt());
    }
    let bin_width = 2.0 * std::f64::consts::PI / (n as f64 * step);
    let mut peaks: Vec<(f64, f64)> = (1..magnitude.len().saturating_sub(1))
        .filter(|&i| magnitude[i] > magnitude[i - 1] && magnitude[i] >= magnitude[i + 1])
        .map(|i| ((i as f64 + 1.0) * bin_width, magnitude[i]))
        .collect();
    peaks.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
    (bin_width, peaks)
}

/// Collects pass/fail sub-checks and prints one line per check plus a
/// summary line, failing the test if anything failed.
pub struct Gate {
    label: String,
    failures: Vec<String>,
}

impl Gate {
    pub fn new(label: &str) -> Self {
        Self {
            label: label.to_string(),
            failures: Vec::new(),
        }
    }

    pub fn check(&mut self, what: &str, pass: bool, detail: String) {
        println!(
            "  [{}] {}: {detail}",
            if pass { "pass" } else { "FAIL" },
            what
        );
        if !pass {
            self.failures.push(format!("{what}: {detail}"));
        }
    }

    pub fn finish(self) {
        let ok = self.failures.is_empty();
        println!("[{}] {}", if ok { "PASS" } else { "FAIL" }, self.label);
        assert!(
            ok,
            "{} failed:\n  {}",
            self.label,
            self.failures.join("\n  ")
        );
    }
}
