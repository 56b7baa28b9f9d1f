//! Energy functionals and escape diagnostics.
//!
//! Per-particle energies split each bond in half, so summing `H_k` over the
//! window reassembles `T + 1/2 (V q, q) - f q_0` exactly (edge half-bonds
//! use boundary-policy neighbors). The escape diagnostic leans on
//! conservation: the energy that has left `[-N, N]` by time `t` is
//! `H(0) - H_[-N,N](t)`, which a finite window cannot measure by direct
//! tail summation.

use crate::equilibrium;
use crate::integrator::{safe_observation_radius, BoundaryPolicy, Trajectory};
use crate::model::{apply_v, LatticeParams, LatticeState};
use crate::{ChainError, Result};

/// Kinetic / potential / total energy of one particle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SiteEnergy {
    pub site: i64,
    pub kinetic: f64,
    pub potential: f64,
    pub total: f64,
}

fn neighbor(state: &LatticeState, k: i64, ghosts: (f64, f64)) -> f64 {
    if k < state.lo {
        ghosts.0
    } else if k > state.hi {
        ghosts.1
    } else {
        state.q[(k - state.lo) as usize]
    }
}

fn site_energy_with_ghosts(
    params: &LatticeParams,
    state: &LatticeState,
    k: i64,
    ghosts: (f64, f64),
) -> SiteEnergy {
    let i = (k - state.lo) as usize;
    let q_k = state.q[i];
    let left = neighbor(state, k - 1, ghosts);
    let right = neighbor(state, k + 1, ghosts);
    let w2 = params.omega * params.omega;
    let w02 = params.omega0 * params.omega0;
    let kinetic = 0.5 * state.v[i] * state.v[i];
    let mut potential = 0.25 * w2 * ((right - q_k) * (right - q_k) + (q_k - left) * (q_k - left))
        + 0.5 * w02 * q_k * q_k;
    if k == 0 {
        potential -= params.f * q_k; // may drive U_0 negative
    }
    SiteEnergy {
        site: k,
        kinetic,
        potential,
        total: kinetic + potential,
    }
}

/// Energy of particle `k`:
/// `T_k = v_k^2 / 2`,
/// `U_k = (omega^2/4)[(q_{k+1}-q_k)^2 + (q_k-q_{k-1})^2] + (omega0^2/2) q_k^2 - f q_0 [k=0]`.
pub fn particle_energy(
    params: &LatticeParams,
    state: &LatticeState,
    k: i64,
    boundary: &BoundaryPolicy,
) -> Result<SiteEnergy> {
    if !state.contains(k) {
        return Err(ChainError::IndexOutOfWindow {
            index: k,
            lo: state.lo,
            hi: state.hi,
        });
    }
    let ghosts = boundary.ghost_pair(params, state.lo, state.hi)?;
    Ok(site_energy_with_ghosts(params, state, k, ghosts))
}

/// `H_A = sum_{k in A} H_k` over `A = [m, n]`.
pub fn window_energy(
    params: &LatticeParams,
    state: &LatticeState,
    m: i64,
    n: i64,
    boundary: &BoundaryPolicy,
) -> Result<f64> {
    if m > n || !state.contains(m) || !state.contains(n) {
        return Err(ChainError::IndexOutOfWindow {
            index: if state.contains(m) { n } else { m },
            lo: state.lo,
            hi: state.hi,
        });
    }
    let ghosts = boundary.ghost_pair(params, state.lo, state.hi)?;
    Ok((m..=n)
        .map(|k| site_energy_with_ghosts(params, state, k, ghosts).total)
        .sum())
}

/// Total energy of the window, summed per particle.
pub fn total_energy(params: &LatticeParams, state: &LatticeState, boundary: &BoundaryPolicy) -> f64 {
    window_energy(params, state, state.lo, state.hi, boundary)
        .expect("full window is always a valid interval")
}

/// Second evaluation route for the total energy,
/// `T + 1/2 (V q, q) - f q_0`, kept independent of the per-particle sum.
pub fn total_energy_quadratic(
    params: &LatticeParams,
    state: &LatticeState,
    boundary: &BoundaryPolicy,
) -> Result<f64> {
    let kinetic: f64 = state.v.iter().map(|v| 0.5 * v * v).sum();
    let vq = apply_v(params, &state.q, state.lo, boundary)?;
    let quad: f64 = vq.iter().zip(&state.q).map(|(a, b)| a * b).sum();
    let driven = state.q_at(0).map_or(0.0, |q0| params.f * q0);
    // The per-particle split assigns the edge half-bonds to ghost
    // neighbors, while (V q, q) couples the edges to the ghosts linearly;
    // the two conventions differ by the quarter-square term below.
    let ghosts = boundary.ghost_pair(params, state.lo, state.hi)?;
    let w2 = params.omega * params.omega;
    let first = state.q[0];
    let last = state.q[state.width() - 1];
    let edge = 0.25
        * w2
        * (ghosts.0 * ghosts.0 + ghosts.1 * ghosts.1 - first * first - last * last);
    Ok(kinetic + 0.5 * quad - driven + edge)
}

/// `H_hom = H + C f^2`: the energy the homogeneous (force-free) system
/// assigns to the radiating part.
pub fn homogeneous_energy(
    params: &LatticeParams,
    state: &LatticeState,
    boundary: &BoundaryPolicy,
) -> f64 {
    total_energy(params, state, boundary)
        + equilibrium::escape_constant(params) * params.f * params.f
}

/// Second route for the homogeneous energy: subtract the equilibrium
/// profile and evaluate the force-free functional on `zeta = q - xi`
/// directly. Agrees with [`homogeneous_energy`] up to the profile's
/// quadrature accuracy and window truncation.
pub fn homogeneous_energy_direct(params: &LatticeParams, state: &LatticeState) -> Result<f64> {
    let profile = equilibrium::profile(params, state.lo, state.hi, None)?;
    let free = LatticeParams { f: 0.0, ..*params };
    let homogeneous = LatticeState {
        lo: state.lo,
        hi: state.hi,
        t: state.t,
        q: state
            .q
            .iter()
            .zip(&profile.displacements)
            .map(|(q, xi)| q - xi)
            .collect(),
        v: state.v.clone(),
    };
    Ok(total_energy(&free, &homogeneous, &BoundaryPolicy::ClampToZero))
}

/// One row of the escape diagnostic time series.
#[derive(Debug, Clone, Copy)]
pub struct EscapeSample {
    pub t: f64,
    /// `H_[-N,N](t)`.
    pub window: f64,
    /// Energy outside the window by conservation: `H(0) - H_[-N,N](t)`.
    pub tail: f64,
    /// Total window energy `H(t)` (drifts below `H(0)` once radiation
    /// reaches the trajectory boundary).
    pub total: f64,
    /// `H(t) + C f^2`.
    pub homogeneous: f64,
}

/// Escape series of a trajectory.
#[derive(Debug, Clone)]
pub struct EscapeSeries {
    pub samples: Vec<EscapeSample>,
    pub warnings: Vec<String>,
}

/// Escape rows for an already-sampled sequence of states. `H(0)` is taken
/// from the first state so integrator drift is not misread as escape.
pub fn escape_series_from_states(
    params: &LatticeParams,
    states: &[LatticeState],
    boundary: &BoundaryPolicy,
    n: i64,
) -> Result<Vec<EscapeSample>> {
    if n < 0 {
        return Err(ChainError::InvalidConfiguration(format!(
            "escape window half-width must be non-negative, got {n}"
        )));
    }
    let initial = states.first().ok_or_else(|| {
        ChainError::InvalidConfiguration("escape series needs at least one state".into())
    })?;
    if !initial.contains(-n) || !initial.contains(n) {
        return Err(ChainError::IndexOutOfWindow {
            index: n,
            lo: initial.lo,
            hi: initial.hi,
        });
    }
    let c_f2 = equilibrium::escape_constant(params) * params.f * params.f;
    let h0 = total_energy(params, initial, boundary);
    states
        .iter()
        .map(|sample| {
            let window = window_energy(params, sample, -n, n, boundary)?;
            let total = total_energy(params, sample, boundary);
            Ok(EscapeSample {
                t: sample.t,
                window,
                tail: h0 - window,
                total,
                homogeneous: total + c_f2,
            })
        })
        .collect()
}

/// Tracks `H_[-N,N](t)` and the escaped tail along a Verlet trajectory,
/// carrying over its padding warnings.
pub fn escape_series(params: &LatticeParams, trajectory: &Trajectory, n: i64) -> Result<EscapeSeries> {
    let initial = trajectory.initial();
    let mut warnings = trajectory.warnings.clone();
    let horizon = trajectory.last().t - initial.t;
    let safe = safe_observation_radius(params, initial.lo, initial.hi, horizon);
    if n > safe {
        warnings.push(format!(
            "escape window half-width {n} exceeds the reflection-free radius {safe} \
             for t_end = {horizon}; tail values past the horizon are contaminated"
        ));
    }
    let samples =
        escape_series_from_states(params, &trajectory.samples, &trajectory.boundary, n)?;
    Ok(EscapeSeries { samples, warnings })
}

/// Full energy accounting of one state.
#[derive(Debug, Clone)]
pub struct EnergyReport {
    pub t: f64,
    pub per_particle: Vec<SiteEnergy>,
    /// The interval `A` and its energy `H_A`.
    pub window: ((i64, i64), f64),
    pub total: f64,
    pub homogeneous: f64,
    /// `H - H_[-N,N]` for the configured tail half-width `N`.
    pub tail: f64,
}

pub fn energy_report(
    params: &LatticeParams,
    state: &LatticeState,
    window: (i64, i64),
    tail_half_width: i64,
    boundary: &BoundaryPolicy,
) -> Result<EnergyReport> {
    let ghosts = boundary.ghost_pair(params, state.lo, state.hi)?;
    let per_particle: Vec<SiteEnergy> = (window.0..=window.1)
        .map(|k| {
            if !state.contains(k) {
                return Err(ChainError::IndexOutOfWindow {
                    index: k,
                    lo: state.lo,
                    hi: state.hi,
                });
            }
            Ok(site_energy_with_ghosts(params, state, k, ghosts))
        })
        .collect::<Result<_>>()?;
    let window_sum = window_energy(params, state, window.0, window.1, boundary)?;
    let total = total_energy(params, state, boundary);
    let tail_window = window_energy(params, state, -tail_half_width, tail_half_width, boundary)?;
    Ok(EnergyReport {
        t: state.t,
        per_particle,
        window: (window, window_sum),
        total,
        homogeneous: total + equilibrium::escape_constant(params) * params.f * params.f,
        tail: total - tail_window,
    })
}
