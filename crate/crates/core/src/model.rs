//! The two-qubit Hamiltonian with balanced gain/loss and Ising coupling.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix4, C64};

/// Rates `(omega, j, gamma)`; `gamma` sets the unit of energy and time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Coherent Rabi coupling of each qubit.
    pub omega: f64,
    /// Ising coupling between the qubits.
    pub j: f64,
    /// Balanced gain/loss rate. Zero is the Hermitian limit.
    pub gamma: f64,
}

impl Default for SystemParams {
    fn default() -> Self {
        Self { omega: 0.0, j: 0.0, gamma: 1.0 }
    }
}

impl SystemParams {
    /// Parameters in units of `gamma = 1`.
    pub fn new(omega: f64, j: f64) -> Self {
        Self { omega, j, gamma: 1.0 }
    }

    pub fn with_gamma(omega: f64, j: f64, gamma: f64) -> Self {
        Self { omega, j, gamma }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega.is_finite() && self.j.is_finite() && self.gamma.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite parameters {self:?}")));
        }
        if self.gamma < 0.0 {
            return Err(Error::InvalidArgument(format!("gamma must be >= 0, got {}", self.gamma)));
        }
        Ok(())
    }

    /// Negative couplings are accepted but fall outside the reproduction presets.
    pub fn is_out_of_preset(&self) -> bool {
        self.omega < 0.0 || self.j < 0.0
    }

    pub fn is_hermitian_limit(&self) -> bool {
        self.gamma == 0.0
    }

    pub fn with_omega(self, omega: f64) -> Self {
        Self { omega, ..self }
    }

    pub fn with_j(self, j: f64) -> Self {
        Self { j, ..self }
    }
}

/// `H = (omega sx1 - i gamma sz1)/2 + (omega sx2 - i gamma sz2)/2 + j sz1 sz2`.
pub fn build_hamiltonian(params: &SystemParams) -> ComplexMatrix4 {
    use ComplexMatrix4 as M;
    let flips = (M::SIGMA_X1 + M::SIGMA_X2) * (0.5 * params.omega);
    let gain_loss = (M::SIGMA_Z1 + M::SIGMA_Z2) * C64::new(0.0, -0.5 * params.gamma);
    flips + gain_loss + M::SIGMA_ZZ * params.j
}

/// Largest entry of `P conj(H) P - H` with `P = sx (x) sx`.
pub fn pt_residual(h: &ComplexMatrix4) -> f64 {
    let p = ComplexMatrix4::PARITY;
    (p * h.conj() * p - *h).max_abs()
}

pub fn pt_symmetry_residual(params: &SystemParams) -> f64 {
    pt_residual(&build_hamiltonian(params))
}

/// Largest entry of `SWAP H SWAP - H`.
pub fn exchange_residual(h: &ComplexMatrix4) -> f64 {
    let s = ComplexMatrix4::SWAP;
    (s * *h * s - *h).max_abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn ising_only_is_diagonal() {
        let h = build_hamiltonian(&SystemParams::new(0.0, 0.3));
        let expected = ComplexMatrix4::diagonal([c(0.3, 1.0), c(-0.3, 0.0), c(-0.3, 0.0), c(0.3, -1.0)]);
        assert!(h.max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn hermitian_limit_is_real_symmetric() {
        let h = build_hamiltonian(&SystemParams::with_gamma(1.5, 0.0, 0.0));
        assert!(h.max_abs_diff(&h.transpose()) == 0.0);
        for i in 0..4 {
            assert_eq!(h[(i, i)], c(0.0, 0.0));
            for j in 0..4 {
                assert_eq!(h[(i, j)].im, 0.0);
                // single flips differ in exactly one bit
                let one_flip = (i ^ j).count_ones() == 1;
                assert_eq!(h[(i, j)].re, if one_flip { 0.75 } else { 0.0 });
            }
        }
    }

    #[test]
    fn traceless_without_double_flips() {
        let h = build_hamiltonian(&SystemParams::new(2.0, 0.7));
        assert_eq!(h.trace(), c(0.0, 0.0));
        assert_eq!(h[(0, 3)], c(0.0, 0.0));
        assert_eq!(h[(3, 0)], c(0.0, 0.0));
    }

    #[test]
    fn pt_symmetry_holds() {
        assert!(pt_symmetry_residual(&SystemParams::new(2.0, 0.4)) <= 1e-14);
        assert!(pt_symmetry_residual(&SystemParams::new(0.0, 0.0)) <= 1e-14);
    }

    #[test]
    fn perturbed_diagonal_breaks_pt() {
        let mut h = build_hamiltonian(&SystemParams::new(2.0, 0.4));
        h[(1, 1)] += c(0.0, 0.1);
        // the perturbation appears at (1,1) and, conjugated through P, at (2,2)
        let r = pt_residual(&h);
        assert!((r - 0.1).abs() < 1e-15, "residual {r}");
        let p = ComplexMatrix4::PARITY;
        let diff = p * h.conj() * p - h;
        let abs_sum: f64 = diff.0.iter().flatten().map(|z| z.norm()).sum();
        assert!((abs_sum - 0.2).abs() < 1e-15);
    }

    #[test]
    fn exchange_symmetric() {
        let h = build_hamiltonian(&SystemParams::with_gamma(1.3, -0.2, 0.7));
        assert!(exchange_residual(&h) <= 1e-14);
    }

    #[test]
    fn validation() {
        assert!(SystemParams::new(f64::NAN, 0.0).validate().is_err());
        assert!(SystemParams::with_gamma(1.0, 0.0, -1.0).validate().is_err());
        assert!(SystemParams::new(-1.0, 0.2).is_out_of_preset());
        assert!(SystemParams::with_gamma(1.0, 0.2, 0.0).is_hermitian_limit());
    }
}
