//! Quantum Fisher information of the eigenstate `Psi3` and the sensitivity of
//! a `sigma_x` coherence measurement on the first qubit.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix4, StateVector4, C64};
use crate::model::SystemParams;
use crate::spectrum::{classify_phase_default, closed_form_eigenvalues_unchecked, triplet_eigenvector, Phase};

pub const DEFAULT_STEP: f64 = 1e-5;
/// Richardson agreement required between steps `h` and `h/2`.
pub const RICHARDSON_REL_TOL: f64 = 1e-3;
pub const MAX_HALVINGS: usize = 4;
pub const MIN_SLOPE: f64 = 1e-12;

/// The estimated parameter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Kappa {
    J,
    Omega,
}

impl Kappa {
    pub fn get(self, p: &SystemParams) -> f64 {
        match self {
            Kappa::J => p.j,
            Kappa::Omega => p.omega,
        }
    }

    pub fn set(self, p: &SystemParams, value: f64) -> SystemParams {
        match self {
            Kappa::J => p.with_j(value),
            Kappa::Omega => p.with_omega(value),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Kappa::J => "j",
            Kappa::Omega => "omega",
        }
    }
}

/// Global-phase convention applied to `Psi3(kappa)` before differencing.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Gauge {
    /// `|00>` amplitude real and positive (smooth in the parameters).
    Natural,
    /// Largest amplitude real and positive.
    LargestReal,
    /// Natural gauge times `e^{i c kappa}`.
    ExtraPhase(f64),
}

/// Normalised `Psi3` at `kappa`, following the eigenvalue closest to `track`.
fn psi3_tracked(base: &SystemParams, kappa: Kappa, value: f64, track: C64, gauge: Gauge) -> Result<StateVector4> {
    let p = kappa.set(base, value);
    let e = closed_form_eigenvalues_unchecked(&p)?;
    let nearest = (1..4).min_by(|&a, &b| (e[a] - track).norm().total_cmp(&(e[b] - track).norm())).unwrap();
    let psi = triplet_eigenvector(&p, e[nearest])?;
    Ok(match gauge {
        Gauge::Natural => psi,
        Gauge::LargestReal => psi.phase_fixed(),
        Gauge::ExtraPhase(c) => psi * C64::from_polar(1.0, c * value),
    })
}

/// `<sigma_x (x) I>` for a unit state.
pub fn coherence_expectation(psi: &StateVector4) -> Result<f64> {
    psi.check_normalized(1e-10)?;
    let v = psi.expectation(&ComplexMatrix4::SIGMA_X1);
    debug_assert!(v.im.abs() < 1e-12, "Hermitian expectation with imaginary part {}", v.im);
    Ok(v.re)
}

struct Local {
    center: f64,
    e3: C64,
}

/// Rejects points within reach of the EP for the requested step.
fn local_setup(params: &SystemParams, kappa: Kappa, h: f64) -> Result<Local> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidArgument(format!("step must be positive, got {h}")));
    }
    if params.omega.abs() <= 1e-12 {
        return Err(Error::OmegaSingular { omega: params.omega });
    }
    let e = closed_form_eigenvalues_unchecked(params)?;
    let gap = (e[2] - e[3]).norm();
    if gap < 10.0 * h {
        return Err(Error::EpTooClose { gap });
    }
    let center = kappa.get(params);
    let phase = classify_phase_default(params).phase;
    for v in [center - h, center + h] {
        if classify_phase_default(&kappa.set(params, v)).phase != phase {
            return Err(Error::EpTooClose { gap });
        }
    }
    Ok(Local { center, e3: e[2] })
}

/// Evaluate `f(h)` and `f(h/2)` until they agree to [`RICHARDSON_REL_TOL`],
/// halving `h` up to [`MAX_HALVINGS`] times. Returns the finer estimate.
fn richardson(h: f64, mut f: impl FnMut(f64) -> Result<f64>) -> Result<f64> {
    let mut step = h;
    let mut coarse = f(step)?;
    let mut change = f64::INFINITY;
    for _ in 0..=MAX_HALVINGS {
        let fine = f(0.5 * step)?;
        change = (fine - coarse).abs() / fine.abs().max(f64::MIN_POSITIVE);
        if change <= RICHARDSON_REL_TOL || (fine - coarse).abs() < 1e-300 {
            return Ok(fine);
        }
        step *= 0.5;
        coarse = fine;
    }
    Err(Error::NoDerivativeConvergence { relative_change: change })
}

/// `F = 4 (<d psi|d psi> - |<d psi|psi>|^2)` for `Psi3`, by central differences.
pub fn qfi(params: &SystemParams, kappa: Kappa, h: f64) -> Result<f64> {
    qfi_with(params, kappa, h, Gauge::Natural)
}

pub fn qfi_with(params: &SystemParams, kappa: Kappa, h: f64, gauge: Gauge) -> Result<f64> {
    let local = local_setup(params, kappa, h)?;
    let psi = psi3_tracked(params, kappa, local.center, local.e3, gauge)?;
    richardson(h, |step| {
        let plus = psi3_tracked(params, kappa, local.center + step, local.e3, gauge)?;
        let minus = psi3_tracked(params, kappa, local.center - step, local.e3, gauge)?;
        let d = (plus - minus) * (0.5 / step);
        Ok((4.0 * (d.norm_sqr() - d.inner(&psi).norm_sqr())).max(0.0))
    })
}

/// `<sigma_x^1>` on `Psi3` and its `kappa` derivative.
fn coherence_and_slope(params: &SystemParams, kappa: Kappa, h: f64) -> Result<(f64, f64)> {
    let local = local_setup(params, kappa, h)?;
    let sx = |v: f64| -> Result<f64> {
        coherence_expectation(&psi3_tracked(params, kappa, v, local.e3, Gauge::Natural)?)
    };
    let value = sx(local.center)?;
    let slope = richardson(h, |step| Ok((sx(local.center + step)? - sx(local.center - step)?) / (2.0 * step)))?;
    Ok((value, slope))
}

/// `d kappa^2 = (1 - <sx>^2) / (d<sx>/d kappa)^2` on `Psi3`.
pub fn sensitivity_variance(params: &SystemParams, kappa: Kappa, h: f64) -> Result<f64> {
    let (value, slope) = coherence_and_slope(params, kappa, h)?;
    if slope.abs() < MIN_SLOPE {
        return Err(Error::ZeroSlope { slope });
    }
    Ok((1.0 - value * value).max(0.0) / (slope * slope))
}

/// One grid point. Quantities that could not be computed are `None` and the
/// reason is in `flag` (an error kind such as `ep_too_close`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensingPoint {
    pub kappa: Kappa,
    pub value: f64,
    /// The EP lies between neighbouring points whose phases differ.
    pub phase: Phase,
    pub qfi: Option<f64>,
    pub variance_sq: Option<f64>,
    pub coherence: Option<f64>,
    /// `1 / sqrt(F)`
    pub cr_bound: Option<f64>,
    pub flag: Option<String>,
}

impl SensingPoint {
    pub fn is_flagged(&self) -> bool {
        self.flag.is_some()
    }

    /// `1 / d kappa^2`, where defined.
    pub fn inverse_variance(&self) -> Option<f64> {
        self.variance_sq.map(|v| 1.0 / v)
    }
}

/// Indices `i` such that the phase changes between sweep points `i` and `i + 1`.
pub fn phase_boundaries(sweep: &[SensingPoint]) -> Vec<usize> {
    (1..sweep.len()).filter(|&i| sweep[i].phase != sweep[i - 1].phase).map(|i| i - 1).collect()
}

pub fn sensing_point(params: &SystemParams, kappa: Kappa, h: f64) -> SensingPoint {
    let value = kappa.get(params);
    let mut flag = None;
    let qfi = qfi(params, kappa, h).map_err(|e| flag = Some(e.kind().to_string())).ok();
    let (coherence, variance_sq) = match coherence_and_slope(params, kappa, h) {
        Ok((c, slope)) if slope.abs() >= MIN_SLOPE => (Some(c), Some((1.0 - c * c).max(0.0) / (slope * slope))),
        Ok((c, slope)) => {
            flag.get_or_insert(Error::ZeroSlope { slope }.kind().to_string());
            (Some(c), None)
        }
        Err(e) => {
            flag.get_or_insert(e.kind().to_string());
            (None, None)
        }
    };
    let cr_bound = qfi.filter(|&f| f > 0.0).map(|f| 1.0 / f.sqrt());
    let phase = classify_phase_default(params).phase;
    SensingPoint { kappa, value, phase, qfi, variance_sq, coherence, cr_bound, flag }
}

/// Evenly spaced grid over `range` (both ends included), other parameter held
/// at `fixed_value`, `gamma` as given. Points run in parallel; order is the grid order.
pub fn sensing_sweep_with_gamma(
    kappa: Kappa,
    fixed_value: f64,
    range: (f64, f64),
    n: usize,
    gamma: f64,
) -> Result<Vec<SensingPoint>> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("sweep needs n >= 2, got {n}")));
    }
    let base = match kappa {
        Kappa::J => SystemParams::with_gamma(fixed_value, 0.0, gamma),
        Kappa::Omega => SystemParams::with_gamma(0.0, fixed_value, gamma),
    };
    let step = (range.1 - range.0) / (n - 1) as f64;
    Ok((0..n)
        .into_par_iter()
        .map(|i| {
            let v = if i + 1 == n { range.1 } else { range.0 + step * i as f64 };
            sensing_point(&kappa.set(&base, v), kappa, DEFAULT_STEP)
        })
        .collect())
}

pub fn sensing_sweep(kappa: Kappa, fixed_value: f64, range: (f64, f64), n: usize) -> Result<Vec<SensingPoint>> {
    sensing_sweep_with_gamma(kappa, fixed_value, range, n, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn coherence_reference_states() {
        assert_eq!(coherence_expectation(&StateVector4::singlet()).unwrap(), 0.0);
        assert_eq!(coherence_expectation(&StateVector4::basis(0)).unwrap(), 0.0);
        let plus = StateVector4::from_real([FRAC_1_SQRT_2, 0.0, FRAC_1_SQRT_2, 0.0]);
        assert!((coherence_expectation(&plus).unwrap() - 1.0).abs() < 1e-15);
        assert!(coherence_expectation(&StateVector4::from_real([1.0, 1.0, 0.0, 0.0])).is_err());
    }

    #[test]
    fn qfi_is_gauge_invariant() {
        let p = SystemParams::new(2.0, 0.4);
        for kappa in [Kappa::J, Kappa::Omega] {
            let f = qfi(&p, kappa, DEFAULT_STEP).unwrap();
            for g in [Gauge::LargestReal, Gauge::ExtraPhase(5.0)] {
                let fg = qfi_with(&p, kappa, DEFAULT_STEP, g).unwrap();
                assert!((fg - f).abs() <= 1e-6 * f, "{kappa:?} {g:?}: {fg} vs {f}");
            }
        }
    }

    #[test]
    fn qfi_grows_towards_the_ep() {
        let jc = 0.589_979_839_785_493_1;
        let f: Vec<f64> = [1e-1, 3e-2, 1e-2]
            .iter()
            .map(|d| qfi(&SystemParams::new(2.0, jc - d), Kappa::J, DEFAULT_STEP).unwrap())
            .collect();
        assert!(f[0] < f[1] && f[1] < f[2], "{f:?}");
    }

    #[test]
    fn cramer_rao_holds_pointwise() {
        for j in [0.2, 0.4, 0.55, 0.65, 0.8] {
            let p = sensing_point(&SystemParams::new(2.0, j), Kappa::J, DEFAULT_STEP);
            if let (Some(f), Some(inv)) = (p.qfi, p.inverse_variance()) {
                assert!(inv <= f * (1.0 + 1e-6), "j={j}: 1/var {inv} > F {f}");
            }
        }
    }

    #[test]
    fn ep_is_flagged() {
        let jc = 0.589_979_839_785_493_1;
        let err = qfi(&SystemParams::new(2.0, jc), Kappa::J, DEFAULT_STEP).unwrap_err();
        assert!(matches!(err, Error::EpTooClose { .. }));
        let p = sensing_point(&SystemParams::new(2.0, jc), Kappa::J, DEFAULT_STEP);
        assert_eq!(p.flag.as_deref(), Some("ep_too_close"));
        assert!(p.qfi.is_none());
    }

    #[test]
    fn two_point_sweep_in_one_phase() {
        let s = sensing_sweep(Kappa::J, 2.0, (0.2, 0.3), 2).unwrap();
        assert_eq!(s.len(), 2);
        assert!(s.iter().all(|p| !p.is_flagged() && p.qfi.unwrap() >= 0.0));
        assert_eq!((s[0].value, s[1].value), (0.2, 0.3));
        assert!(phase_boundaries(&s).is_empty());
        let s = sensing_sweep(Kappa::J, 2.0, (0.3, 0.9), 7).unwrap();
        assert_eq!(phase_boundaries(&s), vec![2]);
    }
}
