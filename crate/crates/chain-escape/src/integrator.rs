//! Velocity-Verlet evolution on a truncated window.
//!
//! The infinite chain is cut at the window edges; the missing neighbors are
//! supplied by a [`BoundaryPolicy`] so that truncation is an explicit,
//! testable choice. Disturbances travel at most `omega` sites per unit time
//! (see [`crate::model::group_velocity`]), so a window padded by
//! `omega * t_end` plus a small margin keeps boundary artifacts away from
//! the observed sites.

use crate::equilibrium;
use crate::model::{acceleration_with_ghosts, LatticeParams, LatticeState};
use crate::{ChainError, Result};

/// How out-of-window neighbor displacements are supplied.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryPolicy {
    /// Missing neighbors read as zero displacement.
    ClampToZero,
    /// Missing neighbors read as the static equilibrium profile, which is
    /// the long-time limit of the driven chain.
    ClampToEquilibrium,
}

impl BoundaryPolicy {
    /// The ghost displacements just outside `[lo, hi]`.
    pub fn ghost_pair(&self, params: &LatticeParams, lo: i64, hi: i64) -> Result<(f64, f64)> {
        match self {
            BoundaryPolicy::ClampToZero => Ok((0.0, 0.0)),
            BoundaryPolicy::ClampToEquilibrium => {
                if params.f == 0.0 {
                    return Ok((0.0, 0.0)); // the profile is identically zero
                }
                let below =
                    equilibrium::coefficient(params, lo - 1, equilibrium::default_nodes(lo - 1))?;
                let above =
                    equilibrium::coefficient(params, hi + 1, equilibrium::default_nodes(hi + 1))?;
                Ok((below, above))
            }
        }
    }

    /// Matches the `t -> infinity` limit of the dynamics: the equilibrium
    /// profile when driven, zero otherwise.
    pub fn default_for(params: &LatticeParams) -> Self {
        if params.f != 0.0 {
            BoundaryPolicy::ClampToEquilibrium
        } else {
            BoundaryPolicy::ClampToZero
        }
    }
}

/// Linear stability bound for the step size: `2 / omega_max`.
pub fn stability_limit(params: &LatticeParams) -> f64 {
    2.0 / params.omega_max()
}

/// Default step `0.1 / omega_max`, well inside the stability bound with
/// small phase error.
pub fn default_dt(params: &LatticeParams) -> f64 {
    0.1 / params.omega_max()
}

/// Largest site index that stays causally clean for an observation lasting
/// `t_end`: window edge minus the group-speed horizon minus a margin.
/// Negative means no site is safe.
pub fn safe_observation_radius(params: &LatticeParams, lo: i64, hi: i64, t_end: f64) -> i64 {
    let edge = (-lo).min(hi);
    edge - (params.omega * t_end).ceil() as i64 - 8
}

fn check_dt(params: &LatticeParams, dt: f64) -> Result<()> {
    let limit = stability_limit(params);
    if !dt.is_finite() || dt <= 0.0 || dt >= limit {
        return Err(ChainError::InvalidConfiguration(format!(
            "dt = {dt} outside the stability range (0, {limit})"
        )));
    }
    Ok(())
}

/// One kick-drift-kick step:
/// `v_half = v + dt/2 a(q)`, `q' = q + dt v_half`, `v' = v_half + dt/2 a(q')`.
///
/// The map is symplectic and exactly time-reversible; energy oscillates
/// within an `O(dt^2)` band instead of drifting.
pub fn verlet_step(
    params: &LatticeParams,
    state: &LatticeState,
    dt: f64,
    boundary: &BoundaryPolicy,
) -> Result<LatticeState> {
    check_dt(params, dt)?;
    let (ghost_lo, ghost_hi) = boundary.ghost_pair(params, state.lo, state.hi)?;
    let force_index = state.index_of(0);
    if force_index.is_none() && params.f != 0.0 {
        return Err(ChainError::InvalidWindow(format!(
            "window [{}, {}] does not contain the forced site 0",
            state.lo, state.hi
        )));
    }

    let n = state.width();
    let mut accel = vec![0.0; n];
    acceleration_with_ghosts(params, &state.q, force_index, ghost_lo, ghost_hi, &mut accel);

    let mut q = state.q.clone();
    let mut v_half = vec![0.0; n];
    for k in 0..n {
        v_half[k] = state.v[k] + 0.5 * dt * accel[k];
        q[k] += dt * v_half[k];
    }
    acceleration_with_ghosts(params, &q, force_index, ghost_lo, ghost_hi, &mut accel);
    let v: Vec<f64> = (0..n).map(|k| v_half[k] + 0.5 * dt * accel[k]).collect();

    Ok(LatticeState {
        lo: state.lo,
        hi: state.hi,
        t: state.t + dt,
        q,
        v,
    })
}

/// A sampled Verlet run. Samples share the window and are strictly ordered
/// in time; `warnings` records padding problems without aborting the run.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub params: LatticeParams,
    pub samples: Vec<LatticeState>,
    pub dt: f64,
    pub boundary: BoundaryPolicy,
    pub warnings: Vec<String>,
}

impl Trajectory {
    pub fn initial(&self) -> &LatticeState {
        &self.samples[0]
    }

    pub fn last(&self) -> &LatticeState {
        self.samples.last().expect("trajectory holds at least the initial sample")
    }
}

/// Runs `round(t_end / dt)` steps from `initial`, keeping every `stride`-th
/// state plus the initial and final ones.
pub fn evolve_verlet(
    params: &LatticeParams,
    initial: &LatticeState,
    t_end: f64,
    dt: f64,
    stride: usize,
    boundary: &BoundaryPolicy,
) -> Result<Trajectory> {
    check_dt(params, dt)?;
    if !t_end.is_finite() || t_end < 0.0 {
        return Err(ChainError::InvalidConfiguration(format!(
            "t_end must be finite and non-negative, got {t_end}"
        )));
    }
    if stride == 0 {
        return Err(ChainError::InvalidConfiguration(
            "sample stride must be at least 1".into(),
        ));
    }
    if initial.index_of(0).is_none() && params.f != 0.0 {
        return Err(ChainError::InvalidWindow(format!(
            "window [{}, {}] does not contain the forced site 0",
            initial.lo, initial.hi
        )));
    }

    let mut warnings = Vec::new();
    let safe = safe_observation_radius(params, initial.lo, initial.hi, t_end);
    if safe < 0 {
        warnings.push(format!(
            "window [{}, {}] has no reflection-free site over t_end = {t_end}; \
             results are boundary-contaminated",
            initial.lo, initial.hi
        ));
    }

    let n_steps = (t_end / dt).round() as u64;
    let (ghost_lo, ghost_hi) = boundary.ghost_pair(params, initial.lo, initial.hi)?;
    let force_index = initial.index_of(0);
    let n = initial.width();

    let mut samples = Vec::with_capacity((n_steps as usize / stride) + 2);
    samples.push(initial.clone());

    let mut q = initial.q.clone();
    let mut v = initial.v.clone();
    let mut accel = vec![0.0; n];
    acceleration_with_ghosts(params, &q, force_index, ghost_lo, ghost_hi, &mut accel);

    for step in 1..=n_steps {
        for k in 0..n {
            v[k] += 0.5 * dt * accel[k];
            q[k] += dt * v[k];
        }
        acceleration_with_ghosts(params, &q, force_index, ghost_lo, ghost_hi, &mut accel);
        for k in 0..n {
            v[k] += 0.5 * dt * accel[k];
        }
        if step % stride as u64 == 0 || step == n_steps {
            samples.push(LatticeState {
                lo: initial.lo,
                hi: initial.hi,
                t: initial.t + step as f64 * dt,
                q: q.clone(),
                v: v.clone(),
            });
        }
    }

    Ok(Trajectory {
        params: *params,
        samples,
        dt,
        boundary: *boundary,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral;

    fn reference() -> LatticeParams {
        LatticeParams::new(1.0, 1.0, 1.0, 1.0).unwrap()
    }

    fn free() -> LatticeParams {
        LatticeParams::new(1.0, 1.0, 1.0, 0.0).unwrap()
    }

    #[test]
    fn step_rejects_unstable_dt() {
        let p = reference();
        let state = LatticeState::zero(4);
        let limit = stability_limit(&p);
        assert!(verlet_step(&p, &state, limit, &BoundaryPolicy::ClampToZero).is_err());
        assert!(verlet_step(&p, &state, -0.1, &BoundaryPolicy::ClampToZero).is_err());
        assert!(verlet_step(&p, &state, 0.9 * limit, &BoundaryPolicy::ClampToZero).is_ok());
    }

    #[test]
    fn default_dt_sits_inside_the_stability_bound() {
        let p = LatticeParams::new(1.0, 2.0, 1.0, 1.0).unwrap();
        assert!((default_dt(&p) - 0.024253562503633298).abs() < 1e-18);
        assert!(default_dt(&p) < stability_limit(&p));
    }

    #[test]
    fn equilibrium_profile_is_a_fixed_point() {
        let p = reference();
        let prof = crate::equilibrium::profile(&p, -24, 24, None).unwrap();
        let state =
            LatticeState::new(-24, 24, 0.0, prof.displacements.clone(), vec![0.0; 49]).unwrap();
        let mut s = state.clone();
        for _ in 0..50 {
            s = verlet_step(&p, &s, 0.04, &BoundaryPolicy::ClampToEquilibrium).unwrap();
        }
        let max_q: f64 = s
            .q
            .iter()
            .zip(&state.q)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let max_v: f64 = s.v.iter().map(|v| v.abs()).fold(0.0, f64::max);
        assert!(max_q < 1e-12 && max_v < 1e-12, "drifted: dq {max_q}, dv {max_v}");
    }

    #[test]
    fn zero_state_stays_zero_without_force() {
        let p = free();
        let state = LatticeState::zero(8);
        let stepped = verlet_step(&p, &state, 0.1, &BoundaryPolicy::ClampToZero).unwrap();
        assert!(stepped.q.iter().all(|x| *x == 0.0));
        assert!(stepped.v.iter().all(|x| *x == 0.0));

        let traj = evolve_verlet(&p, &state, 3.0, 0.1, 5, &BoundaryPolicy::ClampToZero).unwrap();
        assert!(traj
            .samples
            .iter()
            .all(|s| s.q.iter().chain(&s.v).all(|x| *x == 0.0)));
    }

    #[test]
    fn one_step_error_is_third_order_in_phase_space() {
        // reference: exact spectral propagation of the same initial data
        let p = free();
        let mut state = LatticeState::zero(32);
        state.q[32] = 1.0;
        let b = BoundaryPolicy::ClampToZero;

        let gap_for = |dt: f64| {
            let stepped = verlet_step(&p, &state, dt, &b).unwrap();
            let s0 = spectral::forward_transform(&state, 256).unwrap();
            let st = spectral::evolve(&s0, &p, dt);
            let exact = spectral::inverse_transform(&st, -32, 32).unwrap();
            let gq = stepped
                .q
                .iter()
                .zip(&exact.q)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            let gv = stepped
                .v
                .iter()
                .zip(&exact.v)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            gq.max(gv)
        };

        let g1 = gap_for(0.1);
        let g2 = gap_for(0.05);
        let g3 = gap_for(0.025);
        let r1 = g1 / g2;
        let r2 = g2 / g3;
        assert!(
            (6.5..10.0).contains(&r1) && (6.5..10.0).contains(&r2),
            "one-step gap ratios {r1}, {r2} not ~8 (gaps {g1}, {g2}, {g3})"
        );
    }

    #[test]
    fn trajectory_sampling_includes_endpoints() {
        let p = free();
        let state = LatticeState::zero(8);
        let traj = evolve_verlet(&p, &state, 0.0, 0.1, 5, &BoundaryPolicy::ClampToZero).unwrap();
        assert_eq!(traj.samples.len(), 1);

        let traj = evolve_verlet(&p, &state, 1.02, 0.1, 4, &BoundaryPolicy::ClampToZero).unwrap();
        // rounds to 10 steps: samples at steps 0, 4, 8, 10
        assert_eq!(traj.samples.len(), 4);
        assert!((traj.last().t - 1.0).abs() < 1e-12);
        for pair in traj.samples.windows(2) {
            assert!(pair[1].t > pair[0].t);
        }
    }

    #[test]
    fn discrete_map_is_time_reversible() {
        let p = reference();
        let mut state = LatticeState::zero(24);
        state.q[24] = 0.7;
        state.q[20] = -0.3;
        let b = BoundaryPolicy::ClampToEquilibrium;
        let dt = 0.04;

        let mut s = state.clone();
        for _ in 0..500 {
            s = verlet_step(&p, &s, dt, &b).unwrap();
        }
        s.v.iter_mut().for_each(|v| *v = -*v);
        for _ in 0..500 {
            s = verlet_step(&p, &s, dt, &b).unwrap();
        }
        let max_gap = s
            .q
            .iter()
            .zip(&state.q)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(max_gap < 1e-9, "forward-backward mismatch {max_gap}");
    }

    #[test]
    fn boundary_policies_coincide_without_force() {
        let p = free();
        let mut state = LatticeState::zero(48);
        state.q[48] = 1.0;
        let t_zero =
            evolve_verlet(&p, &state, 10.0, 0.04, 50, &BoundaryPolicy::ClampToZero).unwrap();
        let t_eq =
            evolve_verlet(&p, &state, 10.0, 0.04, 50, &BoundaryPolicy::ClampToEquilibrium)
                .unwrap();
        for (a, b) in t_zero.samples.iter().zip(&t_eq.samples) {
            assert_eq!(a.q, b.q);
            assert_eq!(a.v, b.v);
        }
    }

    #[test]
    fn insufficient_padding_is_recorded_not_fatal() {
        let p = free();
        let state = LatticeState::zero(8);
        let traj = evolve_verlet(&p, &state, 50.0, 0.1, 100, &BoundaryPolicy::ClampToZero).unwrap();
        assert!(!traj.warnings.is_empty());
        assert!(safe_observation_radius(&p, -8, 8, 50.0) < 0);
        assert!(safe_observation_radius(&p, -512, 512, 200.0) >= 296);
    }

    #[test]
    fn energy_oscillation_stays_in_dt_squared_band() {
        use crate::energy::total_energy;
        let p = free();
        let mut state = LatticeState::zero(160);
        state.q[160] = 1.0;
        let b = BoundaryPolicy::ClampToZero;
        let dt = default_dt(&p);
        let h0 = total_energy(&p, &state, &b);
        let traj = evolve_verlet(&p, &state, 100.0, dt, 10, &b).unwrap();
        let max_drift = traj
            .samples
            .iter()
            .map(|s| (total_energy(&p, s, &b) - h0).abs())
            .fold(0.0f64, f64::max);
        assert!(
            max_drift <= 2.0 * dt * dt * h0,
            "drift {max_drift} vs band {}",
            2.0 * dt * dt * h0
        );
    }
}
