//! Wootters concurrence, and the closed-form eigenstate concurrence kept
//! alongside it as a cross-check.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, singular_values, ComplexMatrix4, StateVector4, C64};
use crate::model::SystemParams;
use crate::spectrum::{eigenvalues_closed_form, eigenvector_coefficients, triplet_eigenvector};

pub const DENSITY_TOL: f64 = 1e-10;
/// Closed form and Wootters values further apart than this produce a report.
pub const DISCREPANCY_TOL: f64 = 1e-6;

/// A validated two-qubit density matrix.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityMatrix4(ComplexMatrix4);

impl DensityMatrix4 {
    /// Checks hermiticity, unit trace and positivity (all to [`DENSITY_TOL`]).
    pub fn new(m: ComplexMatrix4) -> Result<Self> {
        if !m.is_finite() {
            return Err(Error::InvalidDensity { reason: "non-finite entries".into() });
        }
        let herm = m.max_abs_diff(&m.adjoint());
        if herm > DENSITY_TOL {
            return Err(Error::InvalidDensity { reason: format!("not Hermitian (deviation {herm:e})") });
        }
        let tr = m.trace();
        if (tr - 1.0).norm() > DENSITY_TOL {
            return Err(Error::InvalidDensity { reason: format!("trace {tr} != 1") });
        }
        let (values, _) = hermitian_eigen(&m);
        if values[0] < -DENSITY_TOL {
            return Err(Error::InvalidDensity { reason: format!("negative eigenvalue {:e}", values[0]) });
        }
        Ok(Self(m))
    }

    pub fn from_pure(psi: &StateVector4) -> Result<Self> {
        psi.check_normalized(DENSITY_TOL)?;
        Self::new(psi.outer())
    }

    pub fn maximally_mixed() -> Self {
        Self(ComplexMatrix4::IDENTITY * 0.25)
    }

    pub fn matrix(&self) -> &ComplexMatrix4 {
        &self.0
    }

    /// `rho (sy sy) rho* (sy sy)`
    pub fn spin_flip_product(&self) -> ComplexMatrix4 {
        let yy = ComplexMatrix4::SIGMA_YY;
        self.0 * yy * self.0.conj() * yy
    }
}

fn hermitian_sqrt(m: &ComplexMatrix4) -> ComplexMatrix4 {
    let (values, v) = hermitian_eigen(m);
    let d = ComplexMatrix4::diagonal(values.map(|x| C64::new(x.max(0.0).sqrt(), 0.0)));
    v * d * v.adjoint()
}

/// `max(0, s1 - s2 - s3 - s4)` with `s_i` the square roots of the eigenvalues
/// of `rho (sy sy) rho* (sy sy)`.
///
/// The `s_i` are taken as singular values of `sqrt(rho) (sy sy) sqrt(rho)*`,
/// whose squares are exactly those eigenvalues; this avoids a non-Hermitian
/// eigenproblem and keeps small roots accurate.
pub fn concurrence_mixed(rho: &DensityMatrix4) -> f64 {
    let s = hermitian_sqrt(rho.matrix());
    let tau = s * ComplexMatrix4::SIGMA_YY * s.conj();
    let sv = singular_values(&tau);
    (sv[0] - sv[1] - sv[2] - sv[3]).clamp(0.0, 1.0)
}

/// `|<psi| sy sy |psi*>| = 2 |a00 a11 - a01 a10|`.
pub fn concurrence_pure(psi: &StateVector4) -> Result<f64> {
    psi.check_normalized(DENSITY_TOL)?;
    let a = &psi.0;
    Ok((2.0 * (a[0] * a[3] - a[1] * a[2]).norm()).min(1.0))
}

/// Which of the coalescing eigenstates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Eigenstate {
    Psi3,
    Psi4,
}

impl Eigenstate {
    pub fn index(self) -> usize {
        match self {
            Eigenstate::Psi3 => 2,
            Eigenstate::Psi4 => 3,
        }
    }

    pub fn from_label(s: u8) -> Result<Self> {
        match s {
            3 => Ok(Eigenstate::Psi3),
            4 => Ok(Eigenstate::Psi4),
            _ => Err(Error::InvalidArgument(format!("eigenstate label must be 3 or 4, got {s}"))),
        }
    }
}

/// Closed form and Wootters values disagree.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancyReport {
    pub params: SystemParams,
    pub state: Eigenstate,
    pub closed: f64,
    pub wootters: f64,
    pub difference: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenstateConcurrence {
    /// Value of the `sqrt(l1) - sqrt(l2)` closed form.
    pub closed: f64,
    /// Authoritative value from the eigenvector itself.
    pub wootters: f64,
    pub discrepancy: Option<DiscrepancyReport>,
}

/// The closed form in terms of `R1`, `R2` and `N`: with
/// `a = 2 Re R1 - 2|R2|^2`, `b = 2(|R2|^2 - Re R1)`,
/// `l1,2 = N^4/2 [(2 Re R1)^2 +- a^2 + 2b|R2|^2 - 4|R2|^2 Re R1]`, `C = sqrt(l1) - sqrt(l2)`.
/// Negative `l` are clamped to zero before the root.
pub fn closed_form_concurrence(r1: C64, r2: C64) -> f64 {
    let n4 = (1.0 + r1.norm_sqr() + 2.0 * r2.norm_sqr()).powi(-2);
    let (re1, m2) = (r1.re, r2.norm_sqr());
    let a = 2.0 * re1 - 2.0 * m2;
    let b = 2.0 * (m2 - re1);
    let common = (2.0 * re1).powi(2) + 2.0 * b * m2 - 4.0 * m2 * re1;
    let l1 = 0.5 * n4 * (common + a * a);
    let l2 = 0.5 * n4 * (common - a * a);
    l1.max(0.0).sqrt() - l2.max(0.0).sqrt()
}

/// Concurrence of `Psi3` or `Psi4` by both routes.
pub fn eigenstate_concurrence_closed(params: &SystemParams, state: Eigenstate) -> Result<EigenstateConcurrence> {
    if params.omega.abs() <= 1e-12 {
        return Err(Error::OmegaSingular { omega: params.omega });
    }
    let e = eigenvalues_closed_form(params)?[state.index()];
    let (r1, r2) = eigenvector_coefficients(params, e);
    let closed = closed_form_concurrence(r1, r2);
    let wootters = concurrence_pure(&triplet_eigenvector(params, e)?)?;
    let difference = (closed - wootters).abs();
    let discrepancy = (difference.is_nan() || difference > DISCREPANCY_TOL)
        .then_some(DiscrepancyReport { params: *params, state, closed, wootters, difference });
    Ok(EigenstateConcurrence { closed, wootters, discrepancy })
}

/// Concurrence of `Psi3` or `Psi4` (Wootters route).
pub fn eigenstate_concurrence(params: &SystemParams, state: Eigenstate) -> Result<f64> {
    Ok(eigenstate_concurrence_closed(params, state)?.wootters)
}
