//! Normalised non-unitary evolution `psi(t) = e^{-iHt} psi0 / |e^{-iHt} psi0|`,
//! steady-state and collapse-revival detection.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::entanglement::concurrence_pure;
use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix4, StateVector4, C64};
use crate::model::{build_hamiltonian, SystemParams};
use crate::spectrum::spectrum;

pub const DEFAULT_DT: f64 = 1e-3;
/// Largest accepted `dt * max_row_sum(H)`.
pub const MAX_STEP_PRODUCT: f64 = 0.1;
pub const DEFAULT_ENVELOPE_WINDOW: f64 = 5.0;
pub const DEFAULT_COLLAPSE_FRACTION: f64 = 0.3;
/// Envelopes varying by less than this are treated as flat.
pub const MIN_ENVELOPE_SPAN: f64 = 1e-3;

/// Sampled evolution. `norm_log[k]` is `ln |e^{-iH t_k} psi0|`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<StateVector4>,
    pub norm_log: Vec<f64>,
    pub concurrence: Vec<f64>,
    pub coherence_x: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn max_concurrence(&self) -> f64 {
        self.concurrence.iter().copied().fold(0.0, f64::max)
    }

    /// First sample time with `C >= level`.
    pub fn first_time_reaching(&self, level: f64) -> Option<f64> {
        self.concurrence.iter().position(|&c| c >= level).map(|k| self.times[k])
    }

    fn push(&mut self, t: f64, psi: StateVector4, norm_log: f64) -> Result<()> {
        let c = concurrence_pure(&psi)?;
        self.times.push(t);
        self.states.push(psi);
        self.norm_log.push(norm_log);
        self.concurrence.push(c);
        self.coherence_x.push(psi.expectation(&ComplexMatrix4::SIGMA_X1).re);
        Ok(())
    }
}

/// Product state `(sin theta |0> + cos theta |1>) (x) |0>`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitialStateSpec {
    pub theta_init: f64,
}

pub fn initial_state(spec: InitialStateSpec) -> StateVector4 {
    let (s, c) = spec.theta_init.sin_cos();
    StateVector4::from_real([s, 0.0, c, 0.0])
}

/// One RK4 step of `psi' = A psi` for constant `A` is multiplication by the
/// degree-4 Taylor polynomial of `e^{A dt}`.
fn rk4_step_matrix(h: &ComplexMatrix4, dt: f64) -> ComplexMatrix4 {
    let a = *h * C64::new(0.0, -dt);
    let mut term = ComplexMatrix4::IDENTITY;
    let mut sum = ComplexMatrix4::IDENTITY;
    for k in 1..=4 {
        term = term * a * (1.0 / k as f64);
        sum = sum + term;
    }
    sum
}

fn check_inputs(h: &ComplexMatrix4, psi0: &StateVector4, t_max: f64, dt: f64) -> Result<()> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    if !(t_max >= dt && t_max.is_finite()) {
        return Err(Error::InvalidArgument(format!("t_max must be finite and >= dt, got {t_max}")));
    }
    psi0.check_normalized(1e-10)?;
    let product = dt * h.max_row_sum();
    if product > MAX_STEP_PRODUCT {
        return Err(Error::StepTooLarge { dt, product });
    }
    Ok(())
}

/// Fixed-step RK4 with renormalisation after every step; every step is recorded.
pub fn propagate(params: &SystemParams, psi0: &StateVector4, t_max: f64, dt: f64) -> Result<Trajectory> {
    propagate_strided(params, psi0, t_max, dt, 1)
}

/// As [`propagate`], recording only every `stride`-th step (and the last one).
pub fn propagate_strided(
    params: &SystemParams,
    psi0: &StateVector4,
    t_max: f64,
    dt: f64,
    stride: usize,
) -> Result<Trajectory> {
    let h = build_hamiltonian(params);
    check_inputs(&h, psi0, t_max, dt)?;
    let stride = stride.max(1);
    let step = rk4_step_matrix(&h, dt);
    let n_steps = (t_max / dt).round() as usize;

    let mut traj = Trajectory::default();
    let mut psi = *psi0;
    let mut log_norm = 0.0;
    traj.push(0.0, psi, 0.0)?;
    for k in 1..=n_steps {
        let next = step.apply(&psi);
        let n = next.norm();
        let t = k as f64 * dt;
        if !(n.is_finite() && n > 0.0 && next.is_finite()) {
            return Err(Error::NonFinite { time: t });
        }
        psi = next * (1.0 / n);
        log_norm += n.ln();
        if k % stride == 0 || k == n_steps {
            traj.push(t, psi, log_norm)?;
        }
    }
    Ok(traj)
}

/// Normalised `V e^{-i Lambda t} V^{-1} psi0` from the eigendecomposition.
/// Fails close to an EP, where `V` is singular.
pub fn propagate_spectral(params: &SystemParams, psi0: &StateVector4, t: f64) -> Result<StateVector4> {
    let s = spectrum(params)?;
    let v = ComplexMatrix4::from_columns(&s.eigenvectors);
    let coeffs = v.inverse()?.apply(psi0);
    // shift by the largest growth rate so nothing overflows
    let growth = s.eigenvalues.iter().map(|e| e.im).fold(f64::NEG_INFINITY, f64::max);
    let mut out = StateVector4::ZERO;
    for k in 0..4 {
        let phase = (C64::new(0.0, -t) * (s.eigenvalues[k] - C64::new(0.0, growth))).exp();
        out = out + s.eigenvectors[k] * (coeffs.0[k] * phase);
    }
    out.normalized()
}

/// Sliding extremum over `[k - back, k + fwd]` (clipped to the series).
fn sliding_extremum(values: &[f64], back: usize, fwd: usize, is_max: bool) -> Vec<f64> {
    let better = |a: f64, b: f64| if is_max { a >= b } else { a <= b };
    let mut out = Vec::with_capacity(values.len());
    let mut deque: VecDeque<usize> = VecDeque::new();
    let mut next = 0;
    for k in 0..values.len() {
        let hi = (k + fwd).min(values.len() - 1);
        while next <= hi {
            while let Some(&last) = deque.back() {
                if better(values[next], values[last]) {
                    deque.pop_back();
                } else {
                    break;
                }
            }
            deque.push_back(next);
            next += 1;
        }
        let lo = k.saturating_sub(back);
        while let Some(&first) = deque.front() {
            if first < lo {
                deque.pop_front();
            } else {
                break;
            }
        }
        out.push(values[*deque.front().unwrap()]);
    }
    out
}

fn samples_in(traj: &Trajectory, width: f64) -> usize {
    if traj.len() < 2 {
        return 0;
    }
    let dt = (traj.times[traj.len() - 1] - traj.times[0]) / (traj.len() - 1) as f64;
    (width / dt).round().max(0.0) as usize
}

/// Earliest `t_ss` after which every trailing window of width `window` has
/// concurrence range below `tol`. Returns `(t_ss, C at the last sample)`.
pub fn detect_steady_state(traj: &Trajectory, window: f64, tol: f64) -> Option<(f64, f64)> {
    let w = samples_in(traj, window);
    if traj.is_empty() || w == 0 || w >= traj.len() {
        return None;
    }
    let c = &traj.concurrence;
    let hi = sliding_extremum(c, w, 0, true);
    let lo = sliding_extremum(c, w, 0, false);
    let mut first_good = None;
    for k in (w..c.len()).rev() {
        if hi[k] - lo[k] < tol {
            first_good = Some(k);
        } else {
            break;
        }
    }
    first_good.map(|k| (traj.times[k - w], c[c.len() - 1]))
}

/// Centred sliding maximum of `|C|` over `window`.
pub fn concurrence_envelope(traj: &Trajectory, window: f64) -> Vec<f64> {
    let half = samples_in(traj, window) / 2;
    let abs: Vec<f64> = traj.concurrence.iter().map(|c| c.abs()).collect();
    sliding_extremum(&abs, half, half, true)
}

/// Revival times with the default collapse fraction.
pub fn detect_revivals(traj: &Trajectory, envelope_window: f64) -> Vec<f64> {
    detect_revivals_with(traj, envelope_window, DEFAULT_COLLAPSE_FRACTION)
}

/// Times of envelope maxima that follow a collapse.
///
/// The envelope is the centred sliding maximum of `|C|`. A local maximum at
/// height `p` counts when it rises at least a tenth of the envelope's full
/// span above its minimum `f`, and the envelope has dropped below
/// `f + fraction (p - f)` since the previous event (or since `t = 0`).
pub fn detect_revivals_with(traj: &Trajectory, envelope_window: f64, fraction: f64) -> Vec<f64> {
    if traj.len() < 3 {
        return Vec::new();
    }
    let env = concurrence_envelope(traj, envelope_window);
    let floor = env.iter().copied().fold(f64::INFINITY, f64::min);
    let top = env.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = top - floor;
    // sampling ripple on a flat envelope is not a collapse
    if span < MIN_ENVELOPE_SPAN {
        return Vec::new();
    }

    let mut events = Vec::new();
    let mut lowest_since_event = env[0];
    let mut k = 1;
    while k < env.len() - 1 {
        lowest_since_event = lowest_since_event.min(env[k]);
        // plateau [k, end]
        let mut end = k;
        while end + 1 < env.len() && env[end + 1] == env[k] {
            end += 1;
        }
        let is_peak = env[k - 1] < env[k] && end + 1 < env.len() && env[end + 1] < env[k];
        if is_peak {
            let peak = env[k];
            let collapsed = lowest_since_event < floor + fraction * (peak - floor);
            if peak - floor >= 0.1 * span && collapsed {
                events.push(0.5 * (traj.times[k] + traj.times[end]));
                lowest_since_event = peak;
            }
        }
        k = end + 1;
    }
    events
}

/// `rho_PT = e^{2 gamma t} rho_eff`: maps a purely lossy evolution onto the
/// balanced gain/loss one. The result is not renormalised.
pub fn passive_pt_map(rho_eff: &ComplexMatrix4, gamma: f64, t: f64) -> Result<ComplexMatrix4> {
    if !(t >= 0.0 && gamma >= 0.0) {
        return Err(Error::InvalidArgument(format!("need t >= 0 and gamma >= 0, got t={t}, gamma={gamma}")));
    }
    Ok(*rho_eff * (2.0 * gamma * t).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entanglement::eigenstate_concurrence;
    use crate::entanglement::Eigenstate;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, SQRT_2};

    fn ground() -> StateVector4 {
        StateVector4::basis(0)
    }

    fn series(times: Vec<f64>, c: Vec<f64>) -> Trajectory {
        let n = times.len();
        Trajectory { times, states: vec![ground(); n], norm_log: vec![0.0; n], concurrence: c, coherence_x: vec![0.0; n] }
    }

    #[test]
    fn initial_states() {
        assert_eq!(initial_state(InitialStateSpec { theta_init: FRAC_PI_2 }).0[0].re, 1.0);
        let s = initial_state(InitialStateSpec { theta_init: 0.0 });
        assert_eq!(s, StateVector4::basis(2));
        let s = initial_state(InitialStateSpec { theta_init: FRAC_PI_4 });
        assert!((s - StateVector4::from_real([1.0, 0.0, 1.0, 0.0]) * (1.0 / SQRT_2)).norm() < 1e-15);
    }

    #[test]
    fn hermitian_evolution_keeps_norm() {
        let p = SystemParams::with_gamma(1.5, 0.3, 0.0);
        let t = propagate_strided(&p, &ground(), 50.0, 1e-3, 1000).unwrap();
        assert!(t.norm_log.iter().all(|x| x.abs() < 1e-8), "{:?}", t.norm_log.last());
        assert_eq!(t.times.len(), 51);
    }

    #[test]
    fn rk4_matches_spectral_propagator() {
        for p in [SystemParams::new(2.0, 0.4), SystemParams::new(2.0, 0.7)] {
            let t = propagate_strided(&p, &ground(), 5.0, 1e-3, 5000).unwrap();
            let exact = propagate_spectral(&p, &ground(), 5.0).unwrap();
            let ov = t.states.last().unwrap().overlap(&exact);
            assert!(ov >= 1.0 - 1e-8, "overlap {ov}");
        }
    }

    #[test]
    fn broken_phase_reaches_steady_state() {
        let p = SystemParams::new(2.0, 0.7);
        let t = propagate_strided(&p, &ground(), 40.0, 1e-3, 10).unwrap();
        let (t_ss, c_ss) = detect_steady_state(&t, 5.0, 1e-3).expect("steady state");
        assert!(t_ss < 35.0);
        let c_dom = eigenstate_concurrence(&p, Eigenstate::Psi3).unwrap();
        assert!((c_ss - c_dom).abs() < 0.01, "{c_ss} vs {c_dom}");
    }

    #[test]
    fn symmetric_phase_keeps_oscillating() {
        let t = propagate_strided(&SystemParams::new(2.0, 0.4), &ground(), 40.0, 1e-3, 10).unwrap();
        assert!(detect_steady_state(&t, 5.0, 1e-3).is_none());
    }

    #[test]
    fn steady_state_of_constant_series() {
        let times: Vec<f64> = (0..100).map(|k| k as f64 * 0.1).collect();
        let t = series(times, vec![0.5; 100]);
        assert_eq!(detect_steady_state(&t, 1.0, 1e-6), Some((0.0, 0.5)));
    }

    #[test]
    fn flat_envelope_has_no_revivals() {
        let times: Vec<f64> = (0..20000).map(|k| k as f64 * 0.01).collect();
        let c = times.iter().map(|t: &f64| t.sin().abs()).collect();
        assert!(detect_revivals(&series(times, c), 5.0).is_empty());
    }

    #[test]
    fn beating_signal_revives_once_per_beat() {
        // envelope |cos(t/40)| collapses and revives with period 40 pi
        let times: Vec<f64> = (0..40000).map(|k| k as f64 * 0.01).collect();
        let c = times.iter().map(|t: &f64| (t.sin() * (t / 40.0).cos()).abs()).collect();
        let r = detect_revivals(&series(times, c), 5.0);
        assert!(!r.is_empty());
        assert!((r[0] - 40.0 * std::f64::consts::PI).abs() < 3.0, "{r:?}");
    }

    #[test]
    fn rejects_bad_steps() {
        let p = SystemParams::new(2.0, 0.7);
        assert!(matches!(propagate(&p, &ground(), 1.0, 0.1), Err(Error::StepTooLarge { .. })));
        assert!(matches!(propagate(&p, &(ground() * 2.0), 1.0, 1e-3), Err(Error::NotNormalized { .. })));
        assert!(propagate(&p, &ground(), 1.0, -1.0).is_err());
    }

    #[test]
    fn passive_map_scales_trace() {
        let rho = StateVector4::singlet().outer();
        assert_eq!(passive_pt_map(&rho, 1.0, 0.0).unwrap(), rho);
        assert_eq!(passive_pt_map(&rho, 0.0, 3.0).unwrap(), rho);
        let m = passive_pt_map(&rho, 1.0, 0.5).unwrap();
        assert!((m.trace().re - std::f64::consts::E).abs() < 1e-15);
        assert!(passive_pt_map(&rho, -1.0, 0.5).is_err());
    }
}
