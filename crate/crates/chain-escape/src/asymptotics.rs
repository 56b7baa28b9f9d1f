//! Leading-order long-time behavior of the radiating part.
//!
//! Stationary-phase evaluation of the inversion integral leaves two ringing
//! tones, one per band edge, with a `t^{-1/2}` envelope:
//!
//! ```text
//! zeta_k(t) ~ t^{-1/2} [ C1 cos(t w_lo + pi/4) + (-1)^k C2 cos(t w_hi - pi/4)
//!                      + S1 sin(t w_lo + pi/4) + (-1)^k S2 sin(t w_hi - pi/4) ]
//! ```
//!
//! with a remainder of order `t^{-3/2}`. The amplitudes depend only on the
//! band-edge values `Q(0, 0)`, `Q(0, pi)`, `Qdot(0, 0)`, `Qdot(0, pi)` of
//! the initial data, which are plain alternating sums for finitely
//! supported windows.

use crate::model::{LatticeParams, LatticeState};
use crate::spectral::{self, SpectralState};
use crate::{ChainError, Result};

/// Amplitudes of the four band-edge carriers plus the two edge frequencies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticCoefficients {
    /// Cosine amplitude at the lower band edge (`C1`).
    pub cos_lower: f64,
    /// Cosine amplitude at the upper band edge (`C2`); carries the
    /// site-parity sign `(-1)^k`.
    pub cos_upper: f64,
    /// Sine amplitude at the lower band edge (`S1`).
    pub sin_lower: f64,
    /// Sine amplitude at the upper band edge (`S2`); carries `(-1)^k`.
    pub sin_upper: f64,
    /// `omega0`.
    pub band_lower: f64,
    /// `sqrt(4 omega^2 + omega0^2)`.
    pub band_upper: f64,
}

impl AsymptoticCoefficients {
    /// Upper bound for the ringing envelope `sqrt(t) |zeta_k(t)|`.
    pub fn envelope_bound(&self) -> f64 {
        self.cos_lower.abs() + self.cos_upper.abs() + self.sin_lower.abs() + self.sin_upper.abs()
    }
}

/// Closed forms for the carrier amplitudes from the band-edge data of the
/// homogeneous initial condition (real by conjugate symmetry):
/// `C1 = sqrt(omega0 / (2 pi omega^2)) Q(0, 0)`,
/// `C2 = sqrt(omega_max / (2 pi omega^2)) Q(0, pi)`,
/// `S1 = sqrt(1 / (2 pi omega omega0)) Qdot(0, 0)`,
/// `S2 = sqrt(1 / (2 pi omega omega_max)) Qdot(0, pi)`.
pub fn coefficients(
    params: &LatticeParams,
    amp_at_zero: f64,
    amp_at_pi: f64,
    vel_amp_at_zero: f64,
    vel_amp_at_pi: f64,
) -> AsymptoticCoefficients {
    let two_pi = 2.0 * std::f64::consts::PI;
    let w2 = params.omega * params.omega;
    let band_lower = params.omega0;
    let band_upper = params.omega_max();
    AsymptoticCoefficients {
        cos_lower: (band_lower / (two_pi * w2)).sqrt() * amp_at_zero,
        cos_upper: (band_upper / (two_pi * w2)).sqrt() * amp_at_pi,
        sin_lower: (1.0 / (two_pi * params.omega * band_lower)).sqrt() * vel_amp_at_zero,
        sin_upper: (1.0 / (two_pi * params.omega * band_upper)).sqrt() * vel_amp_at_pi,
        band_lower,
        band_upper,
    }
}

/// Band-edge transform values of finitely supported data by direct
/// summation: `Q(0,0) = sum zeta_k`, `Q(0,pi) = sum (-1)^k zeta_k` and the
/// same sums over the velocities. Summation avoids grid interpolation at
/// the two points the asymptotics depends on.
pub fn band_edge_amplitudes(initial: &LatticeState) -> (f64, f64, f64, f64) {
    let mut amp_zero = 0.0;
    let mut amp_pi = 0.0;
    let mut vel_zero = 0.0;
    let mut vel_pi = 0.0;
    for (i, k) in (initial.lo..=initial.hi).enumerate() {
        let sign = if k.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        amp_zero += initial.q[i];
        amp_pi += sign * initial.q[i];
        vel_zero += initial.v[i];
        vel_pi += sign * initial.v[i];
    }
    (amp_zero, amp_pi, vel_zero, vel_pi)
}

/// [`coefficients`] fed by [`band_edge_amplitudes`].
pub fn coefficients_for(params: &LatticeParams, initial: &LatticeState) -> AsymptoticCoefficients {
    let (a0, api, v0, vpi) = band_edge_amplitudes(initial);
    coefficients(params, a0, api, v0, vpi)
}

/// Leading-order prediction for `zeta_k(t)`, valid as `t` grows.
/// Only the upper-edge terms alternate with the site parity.
pub fn predict(coeffs: &AsymptoticCoefficients, site: i64, t: f64) -> Result<f64> {
    if !t.is_finite() || t <= 0.0 {
        return Err(ChainError::Domain(format!(
            "the expansion is a t -> infinity statement; t must be positive, got {t}"
        )));
    }
    let parity = if site.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    let lower_phase = t * coeffs.band_lower + std::f64::consts::FRAC_PI_4;
    let upper_phase = t * coeffs.band_upper - std::f64::consts::FRAC_PI_4;
    Ok((coeffs.cos_lower * lower_phase.cos()
        + parity * coeffs.cos_upper * upper_phase.cos()
        + coeffs.sin_lower * lower_phase.sin()
        + parity * coeffs.sin_upper * upper_phase.sin())
        / t.sqrt())
}

/// One row of a residual scan.
#[derive(Debug, Clone, Copy)]
pub struct ResidualSample {
    pub t: f64,
    /// `zeta_k(t)` from the spectral solution.
    pub exact: f64,
    /// Leading-order prediction.
    pub predicted: f64,
    /// `t^{3/2} |exact - predicted|`; bounded when the remainder carries
    /// the expected extra `1/t`.
    pub scaled_residual: f64,
}

/// Compares the exact evolution of homogeneous data against the prediction
/// at one site over a set of times. `initial` is the radiating part
/// (profile already removed).
pub fn residual_scan(
    params: &LatticeParams,
    initial: &LatticeState,
    site: i64,
    times: &[f64],
    nodes: usize,
) -> Result<Vec<ResidualSample>> {
    let coeffs = coefficients_for(params, initial);
    let transformed = spectral::forward_transform(initial, nodes)?;
    times
        .iter()
        .map(|&t| {
            let exact = site_value_at(&transformed, params, site, t)?;
            let predicted = predict(&coeffs, site, t)?;
            Ok(ResidualSample {
                t,
                exact,
                predicted,
                scaled_residual: t.powf(1.5) * (exact - predicted).abs(),
            })
        })
        .collect()
}

/// `zeta_site(t)` for a single `(site, t)` pair from a transformed state at
/// `t = 0`; `O(M)` per evaluation.
pub fn site_value_at(
    transformed: &SpectralState,
    params: &LatticeParams,
    site: i64,
    t: f64,
) -> Result<f64> {
    let advanced = spectral::evolve(transformed, params, t - transformed.t);
    Ok(spectral::site_values(&advanced, site)?.0)
}

/// Peak-picking envelope: the maximum of `|values|` over consecutive
/// windows of width `window_width` (one beat of the slow carrier when set
/// to `2 pi / omega0`). Returns `(t_at_peak, peak)` pairs.
pub fn envelope_peaks(times: &[f64], values: &[f64], window_width: f64) -> Vec<(f64, f64)> {
    assert_eq!(times.len(), values.len());
    let mut peaks = Vec::new();
    if times.is_empty() || !window_width.is_finite() || window_width <= 0.0 {
        return peaks;
    }
    let mut window_start = times[0];
    let mut best: Option<(f64, f64)> = None;
    for (&t, &x) in times.iter().zip(values) {
        if t >= window_start + window_width {
            if let Some(p) = best.take() {
                peaks.push(p);
            }
            window_start += window_width * ((t - window_start) / window_width).floor();
        }
        let mag = x.abs();
        if best.is_none_or(|(_, b)| mag > b) {
            best = Some((t, mag));
        }
    }
    if let Some(p) = best {
        peaks.push(p);
    }
    peaks
}

/// Least-squares slope of `ln y` against `ln x`; pairs with `y <= 0` are
/// skipped. A `t^{-1/2}` envelope fits to slope `-0.5`.
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    let n = logs.len() as f64;
    let mean_x: f64 = logs.iter().map(|(x, _)| x).sum::<f64>() / n;
    let mean_y: f64 = logs.iter().map(|(_, y)| y).sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in &logs {
        num += (x - mean_x) * (y - mean_y);
        den += (x - mean_x) * (x - mean_x);
    }
    num / den
}
