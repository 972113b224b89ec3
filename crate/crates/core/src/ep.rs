//! Exceptional points: where `E3` and `E4` and their eigenvectors coalesce.
//!
//! Points are located by bisecting on the PT phase label; the analytic
//! conditions `theta_y = 0`, `X = r^2` are kept as a certificate.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{StateVector4, C64};
use crate::model::{build_hamiltonian, SystemParams};
use crate::spectrum::{
    auxiliary_quantities, classify_phase, closed_form_eigenvalues_unchecked, triplet_vector, Phase, DEFAULT_TOL_GAP,
    DEFAULT_TOL_PHASE,
};

/// Tolerance on the EP certificate (residuals and `|E3 - E4|`).
pub const EP_TOL: f64 = 1e-6;
/// `E1`, `E2` must stay this far from the coalescing pair for a second-order EP.
pub const EP2_SEPARATION: f64 = 1e-3;

const MAX_BISECTIONS: usize = 200;

/// Which parameter is held fixed while the other is scanned.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum EpSlice {
    FixOmega(f64),
    FixJ(f64),
}

impl EpSlice {
    fn params(&self, swept: f64, gamma: f64) -> SystemParams {
        match *self {
            EpSlice::FixOmega(omega) => SystemParams::with_gamma(omega, swept, gamma),
            EpSlice::FixJ(j) => SystemParams::with_gamma(swept, j, gamma),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpPoint {
    pub j_c: f64,
    pub omega_c: f64,
    pub gamma: f64,
    /// `theta_y` at the point.
    pub residual_theta: f64,
    /// `X - r^2` at the point.
    pub residual_x: f64,
    /// `|E3 - E4|`.
    pub gap: f64,
    /// The common eigenvalue `(J - (X/r + r)/2) / 3`.
    pub e_degenerate: C64,
    /// Set when `E1` or `E2` also comes within [`EP2_SEPARATION`] of the pair.
    pub higher_order: bool,
}

impl EpPoint {
    pub fn params(&self) -> SystemParams {
        SystemParams::with_gamma(self.omega_c, self.j_c, self.gamma)
    }

    /// Certificate checks; `Err` carries a description of the first failure.
    pub fn check(&self) -> std::result::Result<(), String> {
        if self.residual_theta.abs() > EP_TOL {
            return Err(format!("|theta_y| = {:e}", self.residual_theta.abs()));
        }
        if self.residual_x.abs() > EP_TOL {
            return Err(format!("|X - r^2| = {:e}", self.residual_x.abs()));
        }
        if self.gap > EP_TOL {
            return Err(format!("|E3 - E4| = {:e}", self.gap));
        }
        if self.e_degenerate.im.abs() > 1e-8 {
            return Err(format!("Im E = {:e}", self.e_degenerate.im));
        }
        Ok(())
    }

    /// Evaluate the certificate at arbitrary parameters.
    pub fn evaluate(params: &SystemParams) -> Result<Self> {
        let aux = auxiliary_quantities(params);
        let e = closed_form_eigenvalues_unchecked(params)?;
        let e_deg = if aux.r == 0.0 {
            C64::new(f64::NAN, 0.0)
        } else {
            C64::new((params.j - 0.5 * (aux.x / aux.r + aux.r)) / 3.0, 0.0)
        };
        let pair = (e[2] + e[3]) * 0.5;
        let higher_order = (e[0] - pair).norm() <= EP2_SEPARATION || (e[1] - pair).norm() <= EP2_SEPARATION;
        Ok(EpPoint {
            j_c: params.j,
            omega_c: params.omega,
            gamma: params.gamma,
            residual_theta: aux.theta_y,
            residual_x: aux.x - aux.r * aux.r,
            gap: (e[2] - e[3]).norm(),
            e_degenerate: e_deg,
            higher_order,
        })
    }
}

/// `(theta_y, X - r^2)`; both vanish on the EP curve.
pub fn ep_residual(params: &SystemParams) -> (f64, f64) {
    let aux = auxiliary_quantities(params);
    (aux.theta_y, aux.x - aux.r * aux.r)
}

fn is_broken(p: &SystemParams) -> bool {
    classify_phase(p, DEFAULT_TOL_PHASE, DEFAULT_TOL_GAP).phase == Phase::PtBroken
}

/// Locate the EP on a one-parameter slice with `gamma = 1`.
pub fn locate_ep(slice: EpSlice, bracket: (f64, f64), tol: f64) -> Result<EpPoint> {
    locate_ep_with_gamma(slice, bracket, tol, 1.0)
}

/// Bisection on the phase label. The bracket is always refined to adjacent
/// floating-point numbers (`tol` is only an upper bound on the final width);
/// the returned point is the PT-symmetric end.
pub fn locate_ep_with_gamma(slice: EpSlice, bracket: (f64, f64), tol: f64, gamma: f64) -> Result<EpPoint> {
    let (a, b) = bracket;
    if !(a.is_finite() && b.is_finite() && tol > 0.0) {
        return Err(Error::InvalidArgument(format!("bad bracket {bracket:?} or tol {tol}")));
    }
    let (mut lo, mut hi) = (a.min(b), a.max(b));
    let broken_lo = is_broken(&slice.params(lo, gamma));
    if broken_lo == is_broken(&slice.params(hi, gamma)) {
        return Err(Error::NoSignChange { lo, hi });
    }
    let mut iterations = 0;
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if iterations == MAX_BISECTIONS {
            return Err(Error::NotConverged { reason: format!("bracket width {:e} after {iterations} steps", hi - lo) });
        }
        iterations += 1;
        if is_broken(&slice.params(mid, gamma)) == broken_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if hi - lo > tol {
        return Err(Error::NotConverged { reason: format!("bracket width {:e} exceeds tol {tol:e}", hi - lo) });
    }
    let symmetric_side = if broken_lo { hi } else { lo };
    let point = EpPoint::evaluate(&slice.params(symmetric_side, gamma))?;
    point.check().map_err(|reason| Error::NotConverged { reason: format!("certificate failed: {reason}") })?;
    Ok(point)
}

/// One sample of an EP curve; `ep` is `None` where location failed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpCurvePoint {
    pub omega: f64,
    pub ep: Option<EpPoint>,
    pub failure: Option<String>,
}

pub const DEFAULT_J_BRACKET: (f64, f64) = (0.0, 2.0);

/// EP curve `J_c(omega)` on an evenly spaced grid (ordered by `omega`).
/// A single-point grid uses the range start.
pub fn ep_curve(omega_range: (f64, f64), n_points: usize, j_bracket: (f64, f64)) -> Result<Vec<EpCurvePoint>> {
    if n_points == 0 {
        return Err(Error::InvalidArgument("n_points must be >= 1".into()));
    }
    let (w0, w1) = omega_range;
    let step = if n_points > 1 { (w1 - w0) / (n_points - 1) as f64 } else { 0.0 };
    let curve: Vec<EpCurvePoint> = (0..n_points)
        .into_par_iter()
        .map(|i| {
            let omega = if i + 1 == n_points && n_points > 1 { w1 } else { w0 + step * i as f64 };
            match locate_ep(EpSlice::FixOmega(omega), j_bracket, 1e-8) {
                Ok(ep) => EpCurvePoint { omega, ep: Some(ep), failure: None },
                Err(e) => EpCurvePoint { omega, ep: None, failure: Some(e.to_string()) },
            }
        })
        .collect();
    if curve.iter().all(|p| p.ep.is_none()) {
        return Err(Error::EmptyCurve);
    }
    Ok(curve)
}

/// `N(|00> + c1|01> + c1|10> + c0|11>)`, the single eigenvector left at the EP.
pub fn coalesced_eigenvector(ep: &EpPoint) -> Result<StateVector4> {
    ep.check().map_err(|reason| Error::NotAtEp { reason })?;
    let params = ep.params();
    if params.omega.abs() <= 1e-12 {
        return Err(Error::OmegaSingular { omega: params.omega });
    }
    triplet_vector(&params, ep.e_degenerate).normalized()
}

/// `||H v - E v||` for the coalesced pair.
pub fn coalesced_residual(ep: &EpPoint) -> Result<f64> {
    let v = coalesced_eigenvector(ep)?;
    Ok((build_hamiltonian(&ep.params()).apply(&v) - v * ep.e_degenerate).norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::closed_form_spectrum;
    use std::f64::consts::FRAC_PI_6;

    #[test]
    fn residuals_at_reference_points() {
        // the located EP sits at J = 0.58998; 1e-3 below it theta_y is still 1.6e-2
        let (t, x) = ep_residual(&SystemParams::new(2.0, 0.589));
        assert!(t.abs() < 2e-2 && x.abs() < 1e-2);
        let (t, x) = ep_residual(&SystemParams::new(2.0, 0.5899));
        assert!(t.abs() < 1e-2 && x.abs() < 1e-2);
        let (t, _) = ep_residual(&SystemParams::new(2.0, 0.0));
        assert!((t.abs() - FRAC_PI_6).abs() < 1e-12);
        let (t, x) = ep_residual(&SystemParams::new(0.0, 0.0));
        assert_eq!(t, 0.0);
        assert!((x + 6.0).abs() < 1e-12);
    }

    #[test]
    fn locate_fixed_omega() {
        let ep = locate_ep(EpSlice::FixOmega(2.0), (0.3, 0.9), 1e-8).unwrap();
        assert!((ep.j_c - 0.588).abs() <= 0.002, "{ep:?}");
        assert!(ep.check().is_ok());
        assert!(!ep.higher_order);
        // certificate agrees with the closed-form degenerate eigenvalue
        let e = closed_form_eigenvalues_unchecked(&ep.params()).unwrap();
        assert!((e[2] - ep.e_degenerate).norm() < 1e-6);
    }

    #[test]
    fn locate_fixed_j() {
        let ep = locate_ep(EpSlice::FixJ(0.3), (1.2, 2.2), 1e-8).unwrap();
        assert!((ep.omega_c - 1.649).abs() <= 0.002, "{ep:?}");
        let ep = locate_ep(EpSlice::FixOmega(1.7), (0.1, 0.6), 1e-8).unwrap();
        assert!((ep.j_c - 0.338).abs() <= 0.002, "{ep:?}");
    }

    #[test]
    fn bracket_without_transition() {
        let err = locate_ep(EpSlice::FixOmega(2.0), (0.1, 0.2), 1e-8).unwrap_err();
        assert!(matches!(err, Error::NoSignChange { .. }));
    }

    #[test]
    fn analytic_zero_agrees_with_bisection() {
        // theta_y^2 is linear in the distance to the EP; extrapolate its zero
        let ep = locate_ep(EpSlice::FixOmega(2.0), (0.3, 0.9), 1e-8).unwrap();
        let (d1, d2) = (1e-4, 2e-4);
        let t1 = ep_residual(&SystemParams::new(2.0, ep.j_c - d1)).0.powi(2);
        let t2 = ep_residual(&SystemParams::new(2.0, ep.j_c - d2)).0.powi(2);
        let zero = ep.j_c - d1 + t1 * (d2 - d1) / (t2 - t1);
        assert!((zero - ep.j_c).abs() < 1e-6, "zero {zero} vs {}", ep.j_c);
    }

    #[test]
    fn curve_endpoints_and_single_point() {
        let c = ep_curve((1.649, 2.0), 3, DEFAULT_J_BRACKET).unwrap();
        assert_eq!(c.len(), 3);
        let j: Vec<f64> = c.iter().map(|p| p.ep.unwrap().j_c).collect();
        assert!((j[0] - 0.3).abs() < 2e-3 && (j[2] - 0.588).abs() < 3e-3, "{j:?}");
        assert!(j[0] < j[1] && j[1] < j[2]);
        let c = ep_curve((1.9, 1.9), 1, DEFAULT_J_BRACKET).unwrap();
        assert!((c[0].ep.unwrap().j_c - 0.5).abs() < 2e-3);
    }

    #[test]
    fn curve_without_eps_is_empty() {
        assert_eq!(ep_curve((0.1, 0.2), 4, (0.0, 0.05)), Err(Error::EmptyCurve));
    }

    #[test]
    fn coalesced_vector_properties() {
        let ep = locate_ep(EpSlice::FixOmega(2.0), (0.3, 0.9), 1e-8).unwrap();
        let v = coalesced_eigenvector(&ep).unwrap();
        assert_eq!(v.0[1], v.0[2]);
        assert!(coalesced_residual(&ep).unwrap() <= 1e-6);
        for d in [-1e-4, 1e-4] {
            let s = closed_form_spectrum(&SystemParams::new(2.0, ep.j_c + d)).unwrap();
            assert!(s.eigenvectors[2].overlap(&s.eigenvectors[3]) >= 0.999);
            assert!(v.overlap(&s.eigenvectors[2]) > 0.999 && v.overlap(&s.eigenvectors[3]) > 0.999);
        }
    }

    #[test]
    fn off_curve_point_is_rejected() {
        let p = EpPoint::evaluate(&SystemParams::new(2.0, 0.4)).unwrap();
        assert!(matches!(coalesced_eigenvector(&p), Err(Error::NotAtEp { .. })));
    }
}
