//! Static equilibrium profile of the driven chain.
//!
//! The profile solves `V xi = f e0` and is computed by three routes:
//! the band integral (canonical), a geometric closed form (cross-check) and
//! a tridiagonal solve on a truncated window (independent oracle). The
//! profile's potential energy is `-C f^2` with the escape constant
//! `C = 1 / (2 omega0 sqrt(4 omega^2 + omega0^2))`; the same `C f^2` is the
//! energy radiated to infinity from zero initial data.

use rayon::prelude::*;

use crate::model::LatticeParams;
use crate::{ChainError, Result};

/// The static profile `V xi = f e0` on a window, with its closed-form
/// constants.
#[derive(Debug, Clone)]
pub struct EquilibriumProfile {
    pub params: LatticeParams,
    pub lo: i64,
    pub hi: i64,
    /// Displacements over `[lo, hi]`; even in the site index and decaying
    /// geometrically away from the forced site.
    pub displacements: Vec<f64>,
    /// `C = 1 / (2 omega0 sqrt(4 omega^2 + omega0^2))`.
    pub escape_constant: f64,
    /// Potential energy of the profile, `-C f^2`.
    pub potential_energy: f64,
}

impl EquilibriumProfile {
    pub fn displacement_at(&self, k: i64) -> Option<f64> {
        (self.lo <= k && k <= self.hi).then(|| self.displacements[(k - self.lo) as usize])
    }

    /// Operator residual `(V xi - f e0)_k` per site, with the two missing
    /// neighbors evaluated by the same quadrature. Interior entries are at
    /// quadrature accuracy; there is no truncation term.
    pub fn residuals(&self) -> Result<Vec<f64>> {
        let p = &self.params;
        let ghost_lo = coefficient(p, self.lo - 1, default_nodes(self.lo - 1))?;
        let ghost_hi = coefficient(p, self.hi + 1, default_nodes(self.hi + 1))?;
        let w2 = p.omega * p.omega;
        let diag = 2.0 * w2 + p.omega0 * p.omega0;
        let n = self.displacements.len();
        let xi = &self.displacements;
        Ok((0..n)
            .map(|i| {
                let left = if i == 0 { ghost_lo } else { xi[i - 1] };
                let right = if i == n - 1 { ghost_hi } else { xi[i + 1] };
                let forcing = if self.lo + i as i64 == 0 { p.f } else { 0.0 };
                diag * xi[i] - w2 * (right + left) - forcing
            })
            .collect())
    }
}

/// `C = 1 / (2 omega0 sqrt(4 omega^2 + omega0^2))`, strictly positive.
pub fn escape_constant(params: &LatticeParams) -> f64 {
    1.0 / (2.0 * params.omega0 * params.omega_max())
}

/// Default trapezoid node count for site `k`: the integrand oscillates as
/// `cos(2 k phi)`, so the density grows with `|k|`.
pub fn default_nodes(k: i64) -> usize {
    (64 * k.unsigned_abs() as usize).max(512)
}

/// Profile coefficient by the band integral,
/// `xi_k = (1/pi) \int_{-pi/2}^{pi/2} f cos(2 k phi) / (4 omega^2 sin^2 phi + omega0^2) dphi`,
/// approximated by the composite trapezoid rule on `nodes` uniform
/// subintervals. The integrand is analytic and pi-periodic, so the rule
/// converges faster than any power of `1/nodes`.
pub fn coefficient(params: &LatticeParams, k: i64, nodes: usize) -> Result<f64> {
    if nodes < 16 || !nodes.is_multiple_of(2) {
        return Err(ChainError::InvalidConfiguration(format!(
            "quadrature nodes must be even and at least 16, got {nodes}"
        )));
    }
    if params.f == 0.0 {
        return Ok(0.0);
    }
    let w2_4 = 4.0 * params.omega * params.omega;
    let w02 = params.omega0 * params.omega0;
    let two_k = 2.0 * k as f64;
    let h = std::f64::consts::PI / nodes as f64;
    let integrand = |phi: f64| {
        let s = phi.sin();
        params.f * (two_k * phi).cos() / (w2_4 * s * s + w02)
    };
    let mut sum = 0.5 * (integrand(-std::f64::consts::FRAC_PI_2)
        + integrand(std::f64::consts::FRAC_PI_2));
    for i in 1..nodes {
        sum += integrand(-std::f64::consts::FRAC_PI_2 + i as f64 * h);
    }
    Ok(sum * h / std::f64::consts::PI)
}

/// Full profile on `[lo, hi]` via [`coefficient`], one quadrature per
/// distinct `|k|` (the profile is even in `k`). `nodes = None` picks
/// [`default_nodes`] per site. Coefficients are evaluated independently,
/// in parallel, so the result does not depend on the schedule.
pub fn profile(
    params: &LatticeParams,
    lo: i64,
    hi: i64,
    nodes: Option<usize>,
) -> Result<EquilibriumProfile> {
    if lo > 0 || hi < 0 {
        return Err(ChainError::InvalidWindow(format!(
            "profile window [{lo}, {hi}] must contain site 0"
        )));
    }
    let c = escape_constant(params);
    let max_abs = lo.unsigned_abs().max(hi.unsigned_abs()) as i64;
    let by_abs: Vec<f64> = if params.f == 0.0 {
        vec![0.0; max_abs as usize + 1]
    } else {
        (0..=max_abs)
            .into_par_iter()
            .map(|k| coefficient(params, k, nodes.unwrap_or_else(|| default_nodes(k))))
            .collect::<Result<Vec<f64>>>()?
    };
    let displacements = (lo..=hi).map(|k| by_abs[k.unsigned_abs() as usize]).collect();
    Ok(EquilibriumProfile {
        params: *params,
        lo,
        hi,
        displacements,
        escape_constant: c,
        potential_energy: -c * params.f * params.f,
    })
}

/// Independent oracle: solves the `(2N+1) x (2N+1)` tridiagonal system with
/// diagonal `2 omega^2 + omega0^2`, off-diagonal `-omega^2` and right-hand
/// side `f e0`, closing the chain with zero Dirichlet values beyond `+-N`.
///
/// Truncation makes the result differ from the infinite-chain profile by a
/// geometric boundary layer, so comparisons should stay in the bulk of the
/// window. Returns values over `[-N, N]`.
pub fn tridiagonal_oracle(params: &LatticeParams, half_width: i64) -> Result<Vec<f64>> {
    if half_width < 8 {
        return Err(ChainError::InvalidConfiguration(format!(
            "oracle half-width must be at least 8, got {half_width}"
        )));
    }
    let n = (2 * half_width + 1) as usize;
    let diag = 2.0 * params.omega * params.omega + params.omega0 * params.omega0;
    let off = -params.omega * params.omega;
    let mut rhs = vec![0.0; n];
    rhs[half_width as usize] = params.f;

    // Thomas algorithm; the matrix is strictly diagonally dominant.
    let mut c_prime = vec![0.0; n];
    c_prime[0] = off / diag;
    rhs[0] /= diag;
    for i in 1..n {
        let denom = diag - off * c_prime[i - 1];
        if i < n - 1 {
            c_prime[i] = off / denom;
        }
        rhs[i] = (rhs[i] - off * rhs[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= c_prime[i] * rhs[i + 1];
    }
    Ok(rhs)
}

/// Decay ratio of the profile: the root in `(0, 1)` of
/// `r + 1/r = 2 + omega0^2 / omega^2`.
pub fn decay_ratio(params: &LatticeParams) -> f64 {
    let b = 2.0 + (params.omega0 * params.omega0) / (params.omega * params.omega);
    (b - (b * b - 4.0).sqrt()) / 2.0
}

/// Third route, kept for cross-checks only: the off-site recurrence has the
/// geometric solution `xi_k = xi_0 r^|k|` with `xi_0 = f / (omega0 omega_max)`.
pub fn closed_form_displacement(params: &LatticeParams, k: i64) -> f64 {
    let center = params.f / (params.omega0 * params.omega_max());
    center * decay_ratio(params).powi(k.unsigned_abs().min(i32::MAX as u64) as i32)
}
