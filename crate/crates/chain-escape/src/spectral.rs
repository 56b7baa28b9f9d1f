//! Exact-in-time evolution through the Fourier propagator.
//!
//! Displacements split as `q(t) = xi + zeta(t)`: the static profile plus a
//! homogeneous part. On the band, each mode rotates independently:
//!
//! ```text
//! Q(t, phi)  =  Q(0, phi) cos(Omega t) + Qdot(0, phi) sin(Omega t) / Omega
//! Qdot(t, phi) = -Q(0, phi) Omega sin(Omega t) + Qdot(0, phi) cos(Omega t)
//! ```
//!
//! so time evolution is closed-form; numerical error lives only in the two
//! transforms. Transforms run over a uniform grid of `M` angles on
//! `[-pi, pi)`, which periodizes the chain with period `M`: windows must
//! satisfy `M >= 2 * width` and stay inside the wrap-around horizon.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::equilibrium;
use crate::model::{dispersion, LatticeParams, LatticeState};
use crate::{ChainError, Result};

/// Largest imaginary residue tolerated when reading real site values off a
/// spectral state; anything bigger signals lost conjugate symmetry.
pub const IMAG_TOLERANCE: f64 = 1e-10;

/// Sampled Fourier amplitudes of the homogeneous part on the `phi` grid.
#[derive(Debug, Clone)]
pub struct SpectralState {
    /// Time stamp.
    pub t: f64,
    /// Node count `M`.
    pub nodes: usize,
    /// Uniform grid `phi_j = -pi + 2 pi j / M`, symmetric under
    /// `phi -> -phi` modulo `2 pi`.
    pub phi: Vec<f64>,
    /// Amplitudes `Q(t, phi_j)`.
    pub q_hat: Vec<Complex64>,
    /// Velocity amplitudes `Qdot(t, phi_j)`.
    pub qdot_hat: Vec<Complex64>,
}

fn grid(nodes: usize) -> Vec<f64> {
    (0..nodes)
        .map(|j| -std::f64::consts::PI + 2.0 * std::f64::consts::PI * j as f64 / nodes as f64)
        .collect()
}

fn parity_sign(k: i64) -> f64 {
    if k.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

fn check_nodes(nodes: usize, width: usize) -> Result<()> {
    if nodes < 2 * width {
        return Err(ChainError::Aliasing(format!(
            "{nodes} nodes cannot carry a window of {width} sites; need at least {}",
            2 * width
        )));
    }
    Ok(())
}

/// Transforms homogeneous initial data: `Q(0, phi_j) = sum_k zeta_k e^{i k phi_j}`
/// and likewise for the velocities. The sums are finite, so the transform is
/// exact up to rounding; this implementation folds the window into an FFT.
pub fn forward_transform(initial: &LatticeState, nodes: usize) -> Result<SpectralState> {
    check_nodes(nodes, initial.width())?;
    let mut q_hat = vec![Complex64::new(0.0, 0.0); nodes];
    let mut qdot_hat = vec![Complex64::new(0.0, 0.0); nodes];
    for (i, k) in (initial.lo..=initial.hi).enumerate() {
        let sign = parity_sign(k);
        let slot = k.rem_euclid(nodes as i64) as usize;
        q_hat[slot].re += sign * initial.q[i];
        qdot_hat[slot].re += sign * initial.v[i];
    }
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_inverse(nodes);
    fft.process(&mut q_hat);
    fft.process(&mut qdot_hat);
    Ok(SpectralState {
        t: initial.t,
        nodes,
        phi: grid(nodes),
        q_hat,
        qdot_hat,
    })
}

/// Reference forward transform by direct summation; independent of the FFT
/// path and used to pin its accuracy.
pub fn forward_transform_reference(initial: &LatticeState, nodes: usize) -> Result<SpectralState> {
    check_nodes(nodes, initial.width())?;
    let phi = grid(nodes);
    let mut q_hat = vec![Complex64::new(0.0, 0.0); nodes];
    let mut qdot_hat = vec![Complex64::new(0.0, 0.0); nodes];
    for (j, &angle) in phi.iter().enumerate() {
        for (i, k) in (initial.lo..=initial.hi).enumerate() {
            let w = Complex64::from_polar(1.0, k as f64 * angle);
            q_hat[j] += initial.q[i] * w;
            qdot_hat[j] += initial.v[i] * w;
        }
    }
    Ok(SpectralState {
        t: initial.t,
        nodes,
        phi,
        q_hat,
        qdot_hat,
    })
}

/// Advances the amplitudes by `dt` with the exact per-node propagator.
/// The energy density `|Qdot|^2 + Omega^2 |Q|^2` is preserved pointwise.
/// `sin(Omega dt) / Omega` never degenerates because `Omega >= omega0 > 0`.
pub fn evolve(state: &SpectralState, params: &LatticeParams, dt: f64) -> SpectralState {
    debug_assert!(dt.is_finite());
    let mut q_hat = Vec::with_capacity(state.nodes);
    let mut qdot_hat = Vec::with_capacity(state.nodes);
    for j in 0..state.nodes {
        let om = dispersion(params, state.phi[j]);
        let (s, c) = (om * dt).sin_cos();
        let q = state.q_hat[j];
        let qd = state.qdot_hat[j];
        q_hat.push(q * c + qd * (s / om));
        qdot_hat.push(-q * (om * s) + qd * c);
    }
    SpectralState {
        t: state.t + dt,
        nodes: state.nodes,
        phi: state.phi.clone(),
        q_hat,
        qdot_hat,
    }
}

fn realize(label: &str, k: i64, z: Complex64) -> Result<f64> {
    if z.im.abs() > IMAG_TOLERANCE {
        return Err(ChainError::SymmetryViolation(format!(
            "{label} at site {k} has imaginary residue {:e}; spectral state is corrupted",
            z.im
        )));
    }
    Ok(z.re)
}

/// Inverts the transform onto `[lo, hi]`:
/// `zeta_k = (1/M) sum_j Q(t, phi_j) e^{-i k phi_j}` (trapezoid rule on the
/// periodic inversion integral, spectrally accurate). Imaginary residues
/// above [`IMAG_TOLERANCE`] are rejected, smaller ones discarded.
pub fn inverse_transform(state: &SpectralState, lo: i64, hi: i64) -> Result<LatticeState> {
    if lo > 0 || hi < 0 {
        return Err(ChainError::InvalidWindow(format!(
            "inversion window [{lo}, {hi}] must contain site 0"
        )));
    }
    let width = (hi - lo + 1) as usize;
    check_nodes(state.nodes, width)?;

    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(state.nodes);
    let mut q_spec = state.q_hat.clone();
    let mut v_spec = state.qdot_hat.clone();
    fft.process(&mut q_spec);
    fft.process(&mut v_spec);

    let scale = 1.0 / state.nodes as f64;
    let mut q = Vec::with_capacity(width);
    let mut v = Vec::with_capacity(width);
    for k in lo..=hi {
        let sign = parity_sign(k);
        let slot = k.rem_euclid(state.nodes as i64) as usize;
        q.push(realize("displacement", k, q_spec[slot] * (sign * scale))?);
        v.push(realize("velocity", k, v_spec[slot] * (sign * scale))?);
    }
    LatticeState::new(lo, hi, state.t, q, v)
}

/// Reference inversion by direct summation; independent of the FFT path.
pub fn inverse_transform_reference(state: &SpectralState, lo: i64, hi: i64) -> Result<LatticeState> {
    if lo > 0 || hi < 0 {
        return Err(ChainError::InvalidWindow(format!(
            "inversion window [{lo}, {hi}] must contain site 0"
        )));
    }
    check_nodes(state.nodes, (hi - lo + 1) as usize)?;
    let mut q = Vec::new();
    let mut v = Vec::new();
    for k in lo..=hi {
        let (qk, vk) = site_values(state, k)?;
        q.push(qk);
        v.push(vk);
    }
    LatticeState::new(lo, hi, state.t, q, v)
}

/// Single-site inversion, `O(M)`: the pair `(zeta_k, zetadot_k)` at `k`.
/// Handy for residual scans and long time series at a fixed site.
pub fn site_values(state: &SpectralState, k: i64) -> Result<(f64, f64)> {
    let mut q = Complex64::new(0.0, 0.0);
    let mut v = Complex64::new(0.0, 0.0);
    for j in 0..state.nodes {
        let w = Complex64::from_polar(1.0, -(k as f64) * state.phi[j]);
        q += state.q_hat[j] * w;
        v += state.qdot_hat[j] * w;
    }
    let scale = 1.0 / state.nodes as f64;
    Ok((
        realize("displacement", k, q * scale)?,
        realize("velocity", k, v * scale)?,
    ))
}

/// Full solver: splits off the equilibrium profile, propagates the
/// homogeneous part exactly, and reassembles `q(t) = xi + zeta(t)` on the
/// initial window. With `f = 0` this reduces to the free propagator.
pub fn solve(
    params: &LatticeParams,
    initial: &LatticeState,
    t: f64,
    nodes: usize,
) -> Result<LatticeState> {
    solve_onto(params, initial, t, nodes, initial.lo, initial.hi)
}

/// [`solve`] with the result inverted onto a possibly smaller window,
/// `[out_lo, out_hi]` inside the initial one; the transforms are over the
/// full initial support either way.
pub fn solve_onto(
    params: &LatticeParams,
    initial: &LatticeState,
    t: f64,
    nodes: usize,
    out_lo: i64,
    out_hi: i64,
) -> Result<LatticeState> {
    if !t.is_finite() || t < 0.0 {
        return Err(ChainError::Domain(format!(
            "evolution time must be finite and non-negative, got {t}"
        )));
    }
    if out_lo < initial.lo || out_hi > initial.hi {
        return Err(ChainError::InvalidWindow(format!(
            "output window [{out_lo}, {out_hi}] must lie inside the initial \
             window [{}, {}]",
            initial.lo, initial.hi
        )));
    }
    let profile = equilibrium::profile(params, initial.lo, initial.hi, None)?;
    let homogeneous = LatticeState {
        lo: initial.lo,
        hi: initial.hi,
        t: initial.t,
        q: initial
            .q
            .iter()
            .zip(&profile.displacements)
            .map(|(q, xi)| q - xi)
            .collect(),
        v: initial.v.clone(),
    };
    let transformed = forward_transform(&homogeneous, nodes)?;
    let advanced = evolve(&transformed, params, t);
    let radiated = inverse_transform(&advanced, out_lo, out_hi)?;
    LatticeState::new(
        out_lo,
        out_hi,
        initial.t + t,
        radiated
            .q
            .iter()
            .enumerate()
            .map(|(i, z)| {
                profile
                    .displacement_at(out_lo + i as i64)
                    .expect("output window is inside the profile window")
                    + z
            })
            .collect(),
        radiated.v,
    )
}
