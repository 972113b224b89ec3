//! Eigenvalues and right eigenvectors of the model Hamiltonian.
//!
//! The closed-form route goes through the triplet-sector cubic
//! `E^3 - J E^2 + (g^2 - J^2 - W^2) E + J (J^2 + g^2 + W^2) = 0` (`W = omega`,
//! `g = gamma`), written via the Cardano auxiliaries `X`, `Y`, `Z`. The singlet
//! `(|10> - |01>)/sqrt 2` always carries `E1 = -J`.
//!
//! Cube-root branch: for `Z >= 0` the radicand is real and `Y` is its real cube
//! root; for `Z < 0` the branch is the one continuous with that choice across
//! `Z = 0` (principal root times `e^{2 pi i/3}` when `J >= 0`). With this branch
//! `E3` and `E4` are the pair that coalesces on the exceptional-point curve.

mod oracle;

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, PI};

use serde::{Deserialize, Serialize};

pub use oracle::{eigensystem_oracle, eigenvalues_qr};

use crate::error::{Error, Result};
use crate::linalg::{StateVector4, C64};
use crate::model::{build_hamiltonian, SystemParams};

/// Residual tolerance for eigenpairs away from exceptional points.
pub const RESIDUAL_TOL: f64 = 1e-9;
/// Relaxed residual tolerance once the smallest eigenvalue gap drops below [`NEAR_EP_GAP`].
pub const NEAR_EP_RESIDUAL_TOL: f64 = 1e-6;
pub const NEAR_EP_GAP: f64 = 1e-4;

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// Cardano auxiliaries. `y = r e^{i theta_y}` with `theta_y` in `(-pi/2, pi/2]`
/// and `r` signed, so `theta_y = 0` and `x = r^2` exactly on the EP curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Auxiliaries {
    pub x: f64,
    pub z: f64,
    pub y: C64,
    pub r: f64,
    pub theta_y: f64,
    /// `X / Y`, evaluated as the conjugate Cardano term to avoid cancellation.
    pub x_over_y: C64,
    /// The radicand `-8J^3 - 9J(W^2 + 2g^2) + 3 sqrt3 sqrt Z`.
    pub radicand: C64,
}

/// Real cube root (sign preserving).
fn real_cbrt(x: f64) -> f64 {
    x.cbrt()
}

fn principal_cbrt(z: C64) -> C64 {
    if z.norm() == 0.0 {
        return z;
    }
    C64::from_polar(z.norm().cbrt(), z.arg() / 3.0)
}

pub fn auxiliary_quantities(params: &SystemParams) -> Auxiliaries {
    let SystemParams { omega, j, gamma } = *params;
    let (w2, j2, g2) = (omega * omega, j * j, gamma * gamma);
    let x = 4.0 * j2 + 3.0 * w2 - 3.0 * g2;
    let z = 16.0 * j2 * j2 * g2 + j2 * (8.0 * g2 * g2 + 20.0 * g2 * w2 - w2 * w2) + (g2 - w2).powi(3);
    let a = -8.0 * j2 * j - 9.0 * j * (w2 + 2.0 * g2);

    let (radicand, y, x_over_y) = if z >= 0.0 {
        let b = 3.0 * SQRT3 * z.sqrt();
        let (mut plus, mut minus) = (a + b, a - b);
        // (a + b)(a - b) = x^3; recover whichever factor cancelled
        let x3 = x * x * x;
        if plus.abs() < minus.abs() {
            plus = x3 / minus;
        } else if plus != 0.0 {
            minus = x3 / plus;
        }
        (C64::new(plus, 0.0), C64::new(real_cbrt(plus), 0.0), C64::new(real_cbrt(minus), 0.0))
    } else {
        let rad = C64::new(a, 3.0 * SQRT3 * (-z).sqrt());
        let mut y = principal_cbrt(rad);
        if j >= 0.0 {
            y *= C64::from_polar(1.0, 2.0 * FRAC_PI_3);
        }
        let v = if y.norm() == 0.0 { C64::new(0.0, 0.0) } else { x / y };
        (rad, y, v)
    };

    let (r, theta_y) = signed_polar(y);
    Auxiliaries { x, z, y, r, theta_y, x_over_y, radicand }
}

fn signed_polar(y: C64) -> (f64, f64) {
    let mag = y.norm();
    if mag == 0.0 {
        return (0.0, 0.0);
    }
    let arg = y.arg();
    if arg > FRAC_PI_2 {
        (-mag, arg - PI)
    } else if arg <= -FRAC_PI_2 {
        (-mag, arg + PI)
    } else {
        (mag, arg)
    }
}

/// Closed-form `(E1, E2, E3, E4)` without oracle verification.
pub fn closed_form_eigenvalues_unchecked(params: &SystemParams) -> Result<[C64; 4]> {
    let aux = auxiliary_quantities(params);
    let (u, v) = (aux.y, aux.x_over_y);
    if u.norm() < 1e-12 && v.norm() < 1e-12 {
        return Err(Error::DegenerateCubic { magnitude: u.norm() });
    }
    let j = C64::new(params.j, 0.0);
    let w = C64::from_polar(1.0, FRAC_PI_3);
    let wc = w.conj();
    let e1 = -j;
    let e2 = (j + v + u) / 3.0;
    let e3 = (j - v * w - u * wc) / 3.0;
    let e4 = (j - v * wc - u * w) / 3.0;
    Ok([e1, e2, e3, e4])
}

/// Best pairing of two eigenvalue lists: `perm[i]` is the index in `b`
/// matched to `a[i]`, minimising the largest distance.
pub fn match_eigenvalues(a: &[C64; 4], b: &[C64; 4]) -> ([usize; 4], f64) {
    let mut best = ([0, 1, 2, 3], f64::INFINITY);
    let mut perm = [0usize, 1, 2, 3];
    permute(&mut perm, 0, &mut |p| {
        let d = (0..4).map(|i| (a[i] - b[p[i]]).norm()).fold(0.0, f64::max);
        if d < best.1 {
            best = (*p, d);
        }
    });
    best
}

fn permute(p: &mut [usize; 4], k: usize, visit: &mut impl FnMut(&[usize; 4])) {
    if k == p.len() {
        visit(p);
        return;
    }
    for i in k..p.len() {
        p.swap(k, i);
        permute(p, k + 1, visit);
        p.swap(k, i);
    }
}

pub fn min_pairwise_gap(values: &[C64; 4]) -> f64 {
    let mut gap = f64::INFINITY;
    for i in 0..4 {
        for j in (i + 1)..4 {
            gap = gap.min((values[i] - values[j]).norm());
        }
    }
    gap
}

fn tolerance_for_gap(gap: f64) -> f64 {
    if gap < NEAR_EP_GAP {
        NEAR_EP_RESIDUAL_TOL
    } else {
        RESIDUAL_TOL
    }
}

/// Closed-form `(E1, E2, E3, E4)`, checked against [`eigensystem_oracle`].
///
/// The closed-form labels are kept; the oracle only certifies the multiset.
pub fn eigenvalues_closed_form(params: &SystemParams) -> Result<[C64; 4]> {
    let closed = closed_form_eigenvalues_unchecked(params)?;
    let oracle = eigenvalues_qr(&build_hamiltonian(params))?;
    let (_, distance) = match_eigenvalues(&closed, &oracle);
    let scale = closed.iter().map(|z| z.norm()).fold(1.0, f64::max);
    if distance > tolerance_for_gap(min_pairwise_gap(&closed)) * scale {
        return Err(Error::ClosedFormMismatch { distance });
    }
    Ok(closed)
}

/// Un-normalised triplet-sector eigenvector for eigenvalue `e`,
/// amplitudes `(1, R2, R2, R1)` on `|00>, |01>, |10>, |11>`.
pub(crate) fn triplet_vector(params: &SystemParams, e: C64) -> StateVector4 {
    let SystemParams { omega, j, gamma } = *params;
    let j = C64::new(j, 0.0);
    let shifted = j - e + C64::new(0.0, gamma);
    let r2 = -shifted / omega;
    let r1 = -(j + e) * shifted * 2.0 / (omega * omega) - 1.0;
    StateVector4([C64::new(1.0, 0.0), r2, r2, r1])
}

/// The coefficients `(R_{j1}, R_{j2})` for eigenvalue `e`.
pub fn eigenvector_coefficients(params: &SystemParams, e: C64) -> (C64, C64) {
    let v = triplet_vector(params, e);
    (v.0[3], v.0[1])
}

/// Unit eigenvector for a triplet eigenvalue with the `|00>` amplitude real
/// and positive (a gauge that is smooth in the parameters).
pub fn triplet_eigenvector(params: &SystemParams, e: C64) -> Result<StateVector4> {
    if params.omega.abs() <= 1e-12 {
        return Err(Error::OmegaSingular { omega: params.omega });
    }
    triplet_vector(params, e).normalized()
}

/// Closed-form right eigenvectors `(Psi1, Psi2, Psi3, Psi4)` for the given
/// eigenvalues, each phase-fixed (largest amplitude real-positive).
pub fn eigenvectors_closed_form(params: &SystemParams, eigenvalues: &[C64; 4]) -> Result<[StateVector4; 4]> {
    if params.omega.abs() <= 1e-12 {
        return Err(Error::OmegaSingular { omega: params.omega });
    }
    let h = build_hamiltonian(params);
    let tol = tolerance_for_gap(min_pairwise_gap(eigenvalues));
    let mut out = [StateVector4::singlet(); 4];
    for k in 1..4 {
        out[k] = triplet_eigenvector(params, eigenvalues[k])?.phase_fixed();
    }
    for k in 0..4 {
        let residual = (h.apply(&out[k]) - out[k] * eigenvalues[k]).norm();
        if residual > tol {
            return Err(Error::NearDefective { residual, tolerance: tol });
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpectrumSource {
    ClosedForm,
    Oracle,
}

/// Four eigenpairs. For [`SpectrumSource::ClosedForm`] index `k` carries label `E{k+1}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub eigenvalues: [C64; 4],
    pub eigenvectors: [StateVector4; 4],
    pub source: SpectrumSource,
    pub max_residual: f64,
}

impl Spectrum {
    pub fn max_imag(&self) -> f64 {
        self.eigenvalues.iter().map(|e| e.im.abs()).fold(0.0, f64::max)
    }

    pub fn min_gap(&self) -> f64 {
        min_pairwise_gap(&self.eigenvalues)
    }

    /// Index of the eigenvalue with the largest imaginary part.
    pub fn dominant_index(&self) -> usize {
        (0..4).max_by(|&a, &b| self.eigenvalues[a].im.total_cmp(&self.eigenvalues[b].im)).unwrap()
    }
}

/// Closed-form spectrum, verified against the oracle.
pub fn closed_form_spectrum(params: &SystemParams) -> Result<Spectrum> {
    let eigenvalues = eigenvalues_closed_form(params)?;
    let eigenvectors = eigenvectors_closed_form(params, &eigenvalues)?;
    let h = build_hamiltonian(params);
    let max_residual = (0..4)
        .map(|k| (h.apply(&eigenvectors[k]) - eigenvectors[k] * eigenvalues[k]).norm())
        .fold(0.0, f64::max);
    Ok(Spectrum { eigenvalues, eigenvectors, source: SpectrumSource::ClosedForm, max_residual })
}

pub fn oracle_spectrum(params: &SystemParams) -> Result<Spectrum> {
    eigensystem_oracle(&build_hamiltonian(params))
}

/// Closed-form spectrum where it is defined, the oracle otherwise.
pub fn spectrum(params: &SystemParams) -> Result<Spectrum> {
    match closed_form_spectrum(params) {
        Ok(s) => Ok(s),
        Err(Error::OmegaSingular { .. }) | Err(Error::DegenerateCubic { .. }) => oracle_spectrum(params),
        Err(e) => Err(e),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    PtSymmetric,
    PtBroken,
    NearEp,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseLabel {
    pub phase: Phase,
    pub max_imag: f64,
    /// `|E3 - E4|` (smallest pairwise gap when only the oracle is available).
    pub gap: f64,
}

pub const DEFAULT_TOL_PHASE: f64 = 1e-8;
pub const DEFAULT_TOL_GAP: f64 = 1e-6;

/// Eigenvalues used for phase decisions: closed form, oracle as fallback.
fn phase_eigenvalues(params: &SystemParams) -> Result<([C64; 4], f64)> {
    match closed_form_eigenvalues_unchecked(params) {
        Ok(e) => Ok((e, (e[2] - e[3]).norm())),
        Err(_) => {
            let e = eigenvalues_qr(&build_hamiltonian(params))?;
            Ok((e, min_pairwise_gap(&e)))
        }
    }
}

pub fn classify_phase(params: &SystemParams, tol_phase: f64, tol_gap: f64) -> PhaseLabel {
    let (values, gap) = match phase_eigenvalues(params) {
        Ok(v) => v,
        Err(_) => return PhaseLabel { phase: Phase::PtBroken, max_imag: f64::NAN, gap: f64::NAN },
    };
    let max_imag = values.iter().map(|e| e.im.abs()).fold(0.0, f64::max);
    let phase = if max_imag > tol_phase {
        Phase::PtBroken
    } else if gap <= tol_gap {
        Phase::NearEp
    } else {
        Phase::PtSymmetric
    };
    PhaseLabel { phase, max_imag, gap }
}

pub fn classify_phase_default(params: &SystemParams) -> PhaseLabel {
    classify_phase(params, DEFAULT_TOL_PHASE, DEFAULT_TOL_GAP)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_6, FRAC_1_SQRT_2};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn assert_multiset(got: &[C64; 4], want: &[C64; 4], tol: f64) {
        let (_, d) = match_eigenvalues(got, want);
        assert!(d < tol, "got {got:?}, want {want:?}, distance {d}");
    }

    #[test]
    fn auxiliaries_uncoupled_lossy() {
        let a = auxiliary_quantities(&SystemParams::new(0.0, 0.0));
        assert_eq!(a.x, -3.0);
        assert_eq!(a.z, 1.0);
        assert!((a.y - c(SQRT3, 0.0)).norm() < 1e-12);
        assert!(a.theta_y.abs() < 1e-15);
        assert!((a.r - SQRT3).abs() < 1e-12);
    }

    #[test]
    fn auxiliaries_uncoupled_symmetric_phase() {
        let a = auxiliary_quantities(&SystemParams::new(2.0, 0.0));
        assert_eq!(a.x, 9.0);
        assert_eq!(a.z, -27.0);
        assert!((a.radicand - c(0.0, 27.0)).norm() < 1e-12);
        // |Y| = 3; branch continuous with J > 0 puts Y at 5 pi / 6
        assert!((a.y - C64::from_polar(3.0, 5.0 * FRAC_PI_6)).norm() < 1e-12);
        assert!((a.r + 3.0).abs() < 1e-12);
        assert!((a.theta_y + FRAC_PI_6).abs() < 1e-12);
        assert!((a.y - C64::from_polar(a.r, a.theta_y)).norm() < 1e-12);
    }

    #[test]
    fn auxiliaries_vanish_near_quoted_ep() {
        // theta ~ sqrt(J_c - J), so 1e-3 below the EP leaves theta ~ 1.6e-2
        let a = auxiliary_quantities(&SystemParams::new(2.000, 0.589));
        assert!(a.theta_y.abs() < 3e-2, "theta {}", a.theta_y);
        assert!((a.x - a.r * a.r).abs() < 1e-12, "PTS keeps X = r^2");
        let b = auxiliary_quantities(&SystemParams::new(2.000, 0.5899));
        assert!(b.theta_y.abs() < 1e-2);
        assert!(b.theta_y.abs() < a.theta_y.abs());
    }

    #[test]
    fn eigenvalues_uncoupled_lossy() {
        let e = eigenvalues_closed_form(&SystemParams::new(0.0, 0.0)).unwrap();
        assert!((e[2] - c(0.0, 1.0)).norm() < 1e-12);
        assert!((e[3] - c(0.0, -1.0)).norm() < 1e-12);
        assert_multiset(&e, &[c(0.0, 0.0), c(0.0, 0.0), c(0.0, 1.0), c(0.0, -1.0)], 1e-12);
    }

    #[test]
    fn eigenvalues_decoupled_qubits() {
        let e = eigenvalues_closed_form(&SystemParams::new(2.0, 0.0)).unwrap();
        let s3 = 3f64.sqrt();
        assert_multiset(&e, &[c(0.0, 0.0), c(0.0, 0.0), c(s3, 0.0), c(-s3, 0.0)], 1e-12);
        // coalescing pair is the upper two
        assert!((e[2] - c(0.0, 0.0)).norm() < 1e-12 && (e[3] - c(s3, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn eigenvalues_diagonal_case() {
        let e = eigenvalues_closed_form(&SystemParams::new(0.0, 0.3)).unwrap();
        assert_multiset(&e, &[c(-0.3, 0.0), c(0.3, 1.0), c(0.3, -1.0), c(-0.3, 0.0)], 1e-12);
        assert_eq!(e[0], c(-0.3, 0.0));
    }

    #[test]
    fn singlet_is_always_an_eigenvector() {
        for &(w, j, g) in &[(2.0, 0.4, 1.0), (0.3, 1.1, 1.0), (1.5, 0.0, 0.0)] {
            let p = SystemParams::with_gamma(w, j, g);
            let psi = StateVector4::singlet();
            assert_eq!(psi.0.map(|z| z.re), [0.0, -FRAC_1_SQRT_2, FRAC_1_SQRT_2, 0.0]);
            let r = build_hamiltonian(&p).apply(&psi) - psi * c(-j, 0.0);
            assert!(r.norm() < 1e-15);
        }
    }

    #[test]
    fn closed_form_vectors_match_oracle_up_to_phase() {
        let p = SystemParams::new(2.0, 0.4);
        let s = closed_form_spectrum(&p).unwrap();
        assert!(s.max_residual < 1e-10);
        let o = oracle_spectrum(&p).unwrap();
        let (perm, d) = match_eigenvalues(&s.eigenvalues, &o.eigenvalues);
        assert!(d < 1e-9);
        for k in 0..4 {
            let ov = s.eigenvectors[k].overlap(&o.eigenvectors[perm[k]]);
            assert!((ov - 1.0).abs() < 1e-9, "k={k} overlap {ov}");
        }
    }

    #[test]
    fn hermitian_vectors_are_real() {
        let p = SystemParams::with_gamma(1.5, 0.01, 0.0);
        let s = closed_form_spectrum(&p).unwrap();
        for v in &s.eigenvectors {
            assert!(v.0.iter().all(|z| z.im.abs() < 1e-12), "{v:?}");
        }
    }

    #[test]
    fn omega_zero_is_singular_for_vectors() {
        let p = SystemParams::new(0.0, 0.3);
        let e = eigenvalues_closed_form(&p).unwrap();
        assert!(matches!(eigenvectors_closed_form(&p, &e), Err(Error::OmegaSingular { .. })));
        // the combined entry point falls back to the oracle
        let s = spectrum(&p).unwrap();
        assert_eq!(s.source, SpectrumSource::Oracle);
    }

    #[test]
    fn triple_degeneracy_is_reported() {
        let p = SystemParams::new(1.0, 0.0);
        assert!(matches!(closed_form_eigenvalues_unchecked(&p), Err(Error::DegenerateCubic { .. })));
    }

    #[test]
    fn oracle_agrees_on_reference_point() {
        let p = SystemParams::new(2.0, 0.4);
        let closed = eigenvalues_closed_form(&p).unwrap();
        let o = oracle_spectrum(&p).unwrap();
        assert_multiset(&closed, &o.eigenvalues, 1e-9);
    }

    #[test]
    fn hermitian_oracle_is_orthonormal() {
        let o = oracle_spectrum(&SystemParams::with_gamma(2.0, 0.4, 0.0)).unwrap();
        assert!(o.eigenvalues.iter().all(|e| e.im.abs() < 1e-12));
        let v = crate::linalg::ComplexMatrix4::from_columns(&o.eigenvectors);
        assert!((v.adjoint() * v).max_abs_diff(&crate::linalg::ComplexMatrix4::IDENTITY) < 1e-9);
    }

    #[test]
    fn phase_labels() {
        assert_eq!(classify_phase_default(&SystemParams::new(2.0, 0.4)).phase, Phase::PtSymmetric);
        assert_eq!(classify_phase_default(&SystemParams::new(2.0, 0.7)).phase, Phase::PtBroken);
        let l = classify_phase_default(&SystemParams::new(0.0, 0.5));
        assert_eq!(l.phase, Phase::PtBroken);
        assert!((l.max_imag - 1.0).abs() < 1e-12);
    }
}
