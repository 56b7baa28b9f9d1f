//! Physical parameters, dispersion relation, the tridiagonal operator V and
//! the equations of motion.
//!
//! With `q_k = x_k - k a` the dynamics is `q'' = -V q + f e0`, where V is the
//! Toeplitz stencil `(-omega^2, 2 omega^2 + omega0^2, -omega^2)` and `e0` is
//! the unit vector at site 0. All functions here are pure and safe to call
//! from many threads.

use serde::{Deserialize, Serialize};

use crate::integrator::BoundaryPolicy;
use crate::{ChainError, Result};

/// Physical constants of the chain (unit particle mass).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeParams {
    /// Lattice spacing.
    pub a: f64,
    /// Nearest-neighbor coupling frequency.
    pub omega: f64,
    /// On-site pinning frequency; opens the spectral gap.
    pub omega0: f64,
    /// Constant external force on particle 0. May be zero or negative.
    pub f: f64,
}

impl LatticeParams {
    /// Validates `a > 0`, `omega > 0`, `omega0 > 0`; `f` is unrestricted.
    pub fn new(a: f64, omega: f64, omega0: f64, f: f64) -> Result<Self> {
        for (name, value) in [("a", a), ("omega", omega), ("omega0", omega0)] {
            if !value.is_finite() || value <= 0.0 {
                return Err(ChainError::InvalidParameters(format!(
                    "{name} must be strictly positive and finite, got {value}"
                )));
            }
        }
        if !f.is_finite() {
            return Err(ChainError::InvalidParameters(format!(
                "f must be finite, got {f}"
            )));
        }
        Ok(Self { a, omega, omega0, f })
    }

    /// Top of the phonon band, `sqrt(4 omega^2 + omega0^2)`.
    pub fn omega_max(&self) -> f64 {
        (4.0 * self.omega * self.omega + self.omega0 * self.omega0).sqrt()
    }
}

/// Frequency of the plane-wave mode with wavenumber `phi`:
/// `Omega(phi) = sqrt(4 omega^2 sin^2(phi/2) + omega0^2)`.
///
/// Ranges over the band `[omega0, sqrt(4 omega^2 + omega0^2)]`.
pub fn dispersion(params: &LatticeParams, phi: f64) -> f64 {
    let s = (0.5 * phi).sin();
    (4.0 * params.omega * params.omega * s * s + params.omega0 * params.omega0).sqrt()
}

/// Group velocity `dOmega/dphi = omega^2 sin(phi) / Omega(phi)` in sites per
/// unit time. Bounded in magnitude by `omega`; the bound sizes the window
/// padding needed to keep boundary reflections away from observed sites.
pub fn group_velocity(params: &LatticeParams, phi: f64) -> f64 {
    params.omega * params.omega * phi.sin() / dispersion(params, phi)
}

/// A finite window of the chain: displacements and velocities over
/// `[lo, hi]` with `lo <= 0 <= hi`, stamped with the time they refer to.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeState {
    pub lo: i64,
    pub hi: i64,
    /// Time stamp.
    pub t: f64,
    /// Displacements `q_k`, k = lo..=hi.
    pub q: Vec<f64>,
    /// Velocities `v_k`, k = lo..=hi.
    pub v: Vec<f64>,
}

impl LatticeState {
    pub fn new(lo: i64, hi: i64, t: f64, q: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if lo > 0 || hi < 0 {
            return Err(ChainError::InvalidWindow(format!(
                "window [{lo}, {hi}] must satisfy lo <= 0 <= hi"
            )));
        }
        let width = (hi - lo + 1) as usize;
        if q.len() != width || v.len() != width {
            return Err(ChainError::InvalidWindow(format!(
                "window [{lo}, {hi}] holds {width} sites but q has {} and v has {}",
                q.len(),
                v.len()
            )));
        }
        if !t.is_finite()
            || q.iter().any(|x| !x.is_finite())
            || v.iter().any(|x| !x.is_finite())
        {
            return Err(ChainError::InvalidWindow(
                "state entries must all be finite".into(),
            ));
        }
        Ok(Self { lo, hi, t, q, v })
    }

    /// All-zero state at `t = 0` on `[-half_width, half_width]`.
    pub fn zero(half_width: i64) -> Self {
        let width = (2 * half_width + 1) as usize;
        Self {
            lo: -half_width,
            hi: half_width,
            t: 0.0,
            q: vec![0.0; width],
            v: vec![0.0; width],
        }
    }

    pub fn width(&self) -> usize {
        (self.hi - self.lo + 1) as usize
    }

    pub fn contains(&self, k: i64) -> bool {
        self.lo <= k && k <= self.hi
    }

    /// Position of site `k` in the backing vectors.
    pub fn index_of(&self, k: i64) -> Option<usize> {
        self.contains(k).then(|| (k - self.lo) as usize)
    }

    pub fn q_at(&self, k: i64) -> Option<f64> {
        self.index_of(k).map(|i| self.q[i])
    }

    pub fn v_at(&self, k: i64) -> Option<f64> {
        self.index_of(k).map(|i| self.v[i])
    }
}

/// Stencil update shared by [`acceleration`] and the integrator:
/// `out_k = omega^2 (q_{k+1} - 2 q_k + q_{k-1}) - omega0^2 q_k + f [k = k0]`,
/// with `ghost_lo`/`ghost_hi` standing in for the missing neighbors.
pub(crate) fn acceleration_with_ghosts(
    params: &LatticeParams,
    q: &[f64],
    force_index: Option<usize>,
    ghost_lo: f64,
    ghost_hi: f64,
    out: &mut [f64],
) {
    debug_assert_eq!(q.len(), out.len());
    let w2 = params.omega * params.omega;
    let w02 = params.omega0 * params.omega0;
    let n = q.len();
    for k in 0..n {
        let left = if k == 0 { ghost_lo } else { q[k - 1] };
        let right = if k == n - 1 { ghost_hi } else { q[k + 1] };
        out[k] = w2 * (right - 2.0 * q[k] + left) - w02 * q[k];
    }
    if let Some(k0) = force_index {
        out[k0] += params.f;
    }
}

/// Right-hand side of the equations of motion on the state's window.
///
/// Out-of-window neighbors come from the boundary policy. Errors if the
/// window misses site 0 while `f != 0`, since the force has nowhere to act.
pub fn acceleration(
    params: &LatticeParams,
    state: &LatticeState,
    boundary: &BoundaryPolicy,
) -> Result<Vec<f64>> {
    let force_index = match state.index_of(0) {
        Some(i) => Some(i),
        None if params.f != 0.0 => {
            return Err(ChainError::InvalidWindow(format!(
                "window [{}, {}] does not contain the forced site 0 while f = {}",
                state.lo, state.hi, params.f
            )));
        }
        None => None,
    };
    let (ghost_lo, ghost_hi) = boundary.ghost_pair(params, state.lo, state.hi)?;
    let mut out = vec![0.0; state.width()];
    acceleration_with_ghosts(params, &state.q, force_index, ghost_lo, ghost_hi, &mut out);
    Ok(out)
}

/// Applies the operator V to a displacement window anchored at `lo`:
/// `(V q)_k = (2 omega^2 + omega0^2) q_k - omega^2 (q_{k+1} + q_{k-1})`.
///
/// `acceleration = -apply_v(q) + f e0` holds exactly in exact arithmetic.
pub fn apply_v(
    params: &LatticeParams,
    q: &[f64],
    lo: i64,
    boundary: &BoundaryPolicy,
) -> Result<Vec<f64>> {
    let hi = lo + q.len() as i64 - 1;
    let (ghost_lo, ghost_hi) = boundary.ghost_pair(params, lo, hi)?;
    let w2 = params.omega * params.omega;
    let diag = 2.0 * w2 + params.omega0 * params.omega0;
    let n = q.len();
    let mut out = vec![0.0; n];
    for k in 0..n {
        let left = if k == 0 { ghost_lo } else { q[k - 1] };
        let right = if k == n - 1 { ghost_hi } else { q[k + 1] };
        out[k] = diag * q[k] - w2 * (right + left);
    }
    Ok(out)
}

/// `q_k = x_k - k a` for a window of absolute positions anchored at `lo`.
pub fn positions_to_displacements(params: &LatticeParams, lo: i64, x: &[f64]) -> Vec<f64> {
    x.iter()
        .enumerate()
        .map(|(i, xi)| xi - (lo + i as i64) as f64 * params.a)
        .collect()
}

/// Inverse of [`positions_to_displacements`]: `x_k = q_k + k a`.
pub fn displacements_to_positions(params: &LatticeParams, lo: i64, q: &[f64]) -> Vec<f64> {
    q.iter()
        .enumerate()
        .map(|(i, qi)| qi + (lo + i as i64) as f64 * params.a)
        .collect()
}
