//! Dense 4x4 complex matrices and 4-component state vectors.
//!
//! Basis order is fixed crate-wide: `|00>, |01>, |10>, |11>`, index `2*q1 + q2`,
//! with `sigma_z |1> = +|1>` and `sigma_z |0> = -|0>`.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

const O: C64 = C64::new(0.0, 0.0);
const P1: C64 = C64::new(1.0, 0.0);
const M1: C64 = C64::new(-1.0, 0.0);
const PI: C64 = C64::new(0.0, 1.0);
const MI: C64 = C64::new(0.0, -1.0);

pub const SQRT_HALF: f64 = std::f64::consts::FRAC_1_SQRT_2;

#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexMatrix4(pub [[C64; 4]; 4]);

impl ComplexMatrix4 {
    pub const ZERO: Self = Self([[O; 4]; 4]);
    pub const IDENTITY: Self = Self([[P1, O, O, O], [O, P1, O, O], [O, O, P1, O], [O, O, O, P1]]);

    /// `sigma_x (x) I`
    pub const SIGMA_X1: Self = Self([[O, O, P1, O], [O, O, O, P1], [P1, O, O, O], [O, P1, O, O]]);
    /// `I (x) sigma_x`
    pub const SIGMA_X2: Self = Self([[O, P1, O, O], [P1, O, O, O], [O, O, O, P1], [O, O, P1, O]]);
    /// `sigma_y (x) I` with `sigma_y = [[0, i], [-i, 0]]` in the `|0>, |1>` order.
    pub const SIGMA_Y1: Self = Self([[O, O, PI, O], [O, O, O, PI], [MI, O, O, O], [O, MI, O, O]]);
    /// `I (x) sigma_y`
    pub const SIGMA_Y2: Self = Self([[O, PI, O, O], [MI, O, O, O], [O, O, O, PI], [O, O, MI, O]]);
    /// `sigma_z (x) I`
    pub const SIGMA_Z1: Self = Self([[M1, O, O, O], [O, M1, O, O], [O, O, P1, O], [O, O, O, P1]]);
    /// `I (x) sigma_z`
    pub const SIGMA_Z2: Self = Self([[M1, O, O, O], [O, P1, O, O], [O, O, M1, O], [O, O, O, P1]]);
    /// `sigma_z (x) sigma_z`
    pub const SIGMA_ZZ: Self = Self([[P1, O, O, O], [O, M1, O, O], [O, O, M1, O], [O, O, O, P1]]);
    /// `sigma_y (x) sigma_y`, the spin-flip operator used by the concurrence.
    pub const SIGMA_YY: Self = Self([[O, O, O, M1], [O, O, P1, O], [O, P1, O, O], [M1, O, O, O]]);
    /// Parity `P = sigma_x (x) sigma_x`.
    pub const PARITY: Self = Self([[O, O, O, P1], [O, O, P1, O], [O, P1, O, O], [P1, O, O, O]]);
    /// Qubit exchange `|ab> -> |ba>`.
    pub const SWAP: Self = Self([[P1, O, O, O], [O, O, P1, O], [O, P1, O, O], [O, O, O, P1]]);

    pub fn from_fn(mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = Self::ZERO;
        for i in 0..4 {
            for j in 0..4 {
                m.0[i][j] = f(i, j);
            }
        }
        m
    }

    pub fn diagonal(d: [C64; 4]) -> Self {
        Self::from_fn(|i, j| if i == j { d[i] } else { O })
    }

    /// Kronecker product of two 2x2 matrices.
    pub fn kron(a: &[[C64; 2]; 2], b: &[[C64; 2]; 2]) -> Self {
        Self::from_fn(|i, j| a[i / 2][j / 2] * b[i % 2][j % 2])
    }

    pub fn scale(&self, s: C64) -> Self {
        Self::from_fn(|i, j| self.0[i][j] * s)
    }

    pub fn conj(&self) -> Self {
        Self::from_fn(|i, j| self.0[i][j].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(|i, j| self.0[j][i])
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(|i, j| self.0[j][i].conj())
    }

    pub fn trace(&self) -> C64 {
        (0..4).map(|i| self.0[i][i]).sum()
    }

    pub fn apply(&self, v: &StateVector4) -> StateVector4 {
        let mut out = [O; 4];
        for (i, row) in self.0.iter().enumerate() {
            out[i] = row.iter().zip(v.0.iter()).map(|(a, b)| a * b).sum();
        }
        StateVector4(out)
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Infinity norm (maximum absolute row sum).
    pub fn max_row_sum(&self) -> f64 {
        self.0
            .iter()
            .map(|row| row.iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (*self - *other).max_abs()
    }

    pub fn column(&self, j: usize) -> StateVector4 {
        StateVector4([self.0[0][j], self.0[1][j], self.0[2][j], self.0[3][j]])
    }

    pub fn from_columns(cols: &[StateVector4; 4]) -> Self {
        Self::from_fn(|i, j| cols[j].0[i])
    }

    /// Inverse by Gauss-Jordan elimination with partial pivoting.
    pub fn inverse(&self) -> Result<Self> {
        let mut a = self.0;
        let mut inv = Self::IDENTITY.0;
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        for col in 0..4 {
            let pivot = (col..4)
                .max_by(|&p, &q| a[p][col].norm().total_cmp(&a[q][col].norm()))
                .unwrap();
            if a[pivot][col].norm() <= 1e-14 * scale {
                return Err(Error::InvalidArgument("matrix is numerically singular".into()));
            }
            a.swap(col, pivot);
            inv.swap(col, pivot);
            let d = a[col][col].inv();
            for k in 0..4 {
                a[col][k] *= d;
                inv[col][k] *= d;
            }
            for r in 0..4 {
                if r != col {
                    let f = a[r][col];
                    if f != O {
                        for k in 0..4 {
                            a[r][k] -= f * a[col][k];
                            inv[r][k] -= f * inv[col][k];
                        }
                    }
                }
            }
        }
        Ok(Self(inv))
    }
}

impl Index<(usize, usize)> for ComplexMatrix4 {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.0[i][j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix4 {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.0[i][j]
    }
}

impl Add for ComplexMatrix4 {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::from_fn(|i, j| self.0[i][j] + rhs.0[i][j])
    }
}

impl Sub for ComplexMatrix4 {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::from_fn(|i, j| self.0[i][j] - rhs.0[i][j])
    }
}

impl Mul for ComplexMatrix4 {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        Self::from_fn(|i, j| (0..4).map(|k| self.0[i][k] * rhs.0[k][j]).sum())
    }
}

impl Mul<f64> for ComplexMatrix4 {
    type Output = Self;
    fn mul(self, rhs: f64) -> Self {
        Self::from_fn(|i, j| self.0[i][j] * rhs)
    }
}

impl Mul<C64> for ComplexMatrix4 {
    type Output = Self;
    fn mul(self, rhs: C64) -> Self {
        self.scale(rhs)
    }
}

impl fmt::Debug for ComplexMatrix4 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix4[")?;
        for row in &self.0 {
            write!(f, "  ")?;
            for z in row {
                write!(f, "{:>+.6}{:>+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateVector4(pub [C64; 4]);

impl StateVector4 {
    pub const ZERO: Self = Self([O; 4]);

    pub fn new(amplitudes: [C64; 4]) -> Self {
        Self(amplitudes)
    }

    pub fn from_real(amplitudes: [f64; 4]) -> Self {
        Self(amplitudes.map(|x| C64::new(x, 0.0)))
    }

    /// Computational basis state `index` (0 = |00>, ..., 3 = |11>).
    pub fn basis(index: usize) -> Self {
        let mut v = Self::ZERO;
        v.0[index] = P1;
        v
    }

    /// The singlet `(|10> - |01>) / sqrt(2)`.
    pub fn singlet() -> Self {
        Self::from_real([0.0, -SQRT_HALF, SQRT_HALF, 0.0])
    }

    /// `<self|other>`
    pub fn inner(&self, other: &Self) -> C64 {
        self.0.iter().zip(other.0.iter()).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn scale(&self, s: C64) -> Self {
        Self(self.0.map(|z| z * s))
    }

    pub fn conj(&self) -> Self {
        Self(self.0.map(|z| z.conj()))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::NotNormalized { norm: n });
        }
        Ok(self.scale(C64::new(1.0 / n, 0.0)))
    }

    /// Error unless `| |psi| - 1 | <= tol`.
    pub fn check_normalized(&self, tol: f64) -> Result<()> {
        let n = self.norm();
        if (n - 1.0).abs() > tol || !n.is_finite() {
            Err(Error::NotNormalized { norm: n })
        } else {
            Ok(())
        }
    }

    /// Rotates the global phase so the largest-magnitude amplitude is real
    /// and positive. Ties resolve to the lowest index.
    pub fn phase_fixed(&self) -> Self {
        let mut best = 0;
        for i in 1..4 {
            if self.0[i].norm() > self.0[best].norm() * (1.0 + 1e-12) {
                best = i;
            }
        }
        let a = self.0[best];
        if a.norm() == 0.0 {
            return *self;
        }
        self.scale(a.conj() / a.norm())
    }

    /// `|<self|other>|`
    pub fn overlap(&self, other: &Self) -> f64 {
        self.inner(other).norm()
    }

    /// `|psi><psi|`
    pub fn outer(&self) -> ComplexMatrix4 {
        ComplexMatrix4::from_fn(|i, j| self.0[i] * self.0[j].conj())
    }

    /// `<psi| A |psi>`
    pub fn expectation(&self, op: &ComplexMatrix4) -> C64 {
        self.inner(&op.apply(self))
    }
}

impl Index<usize> for StateVector4 {
    type Output = C64;
    fn index(&self, i: usize) -> &C64 {
        &self.0[i]
    }
}

impl Add for StateVector4 {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self([0, 1, 2, 3].map(|i| self.0[i] + rhs.0[i]))
    }
}

impl Sub for StateVector4 {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self([0, 1, 2, 3].map(|i| self.0[i] - rhs.0[i]))
    }
}

impl Neg for StateVector4 {
    type Output = Self;
    fn neg(self) -> Self {
        Self(self.0.map(|z| -z))
    }
}

impl Mul<C64> for StateVector4 {
    type Output = Self;
    fn mul(self, rhs: C64) -> Self {
        self.scale(rhs)
    }
}

impl Mul<f64> for StateVector4 {
    type Output = Self;
    fn mul(self, rhs: f64) -> Self {
        self.scale(C64::new(rhs, 0.0))
    }
}

/// Eigen-decomposition of a Hermitian matrix by cyclic complex Jacobi
/// rotations. Returns eigenvalues (ascending) and the unitary whose columns
/// are the matching eigenvectors.
pub fn hermitian_eigen(m: &ComplexMatrix4) -> ([f64; 4], ComplexMatrix4) {
    let mut a = m.0;
    // symmetrise away round-off
    for i in 0..4 {
        a[i][i] = C64::new(a[i][i].re, 0.0);
        for j in (i + 1)..4 {
            let avg = (a[i][j] + a[j][i].conj()) * 0.5;
            a[i][j] = avg;
            a[j][i] = avg.conj();
        }
    }
    let mut v = ComplexMatrix4::IDENTITY.0;
    for _sweep in 0..64 {
        let off: f64 = (0..4)
            .flat_map(|i| (0..4).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j].norm_sqr())
            .sum();
        let diag: f64 = (0..4).map(|i| a[i][i].norm_sqr()).sum();
        if off <= 1e-32 * diag.max(f64::MIN_POSITIVE) || off == 0.0 {
            break;
        }
        for p in 0..3 {
            for q in (p + 1)..4 {
                let apq = a[p][q];
                let mag = apq.norm();
                if mag == 0.0 {
                    continue;
                }
                // reduce to a real symmetric 2x2 rotation with phase e^{i phi}
                let phase = apq / mag;
                let app = a[p][p].re;
                let aqq = a[q][q].re;
                let theta = 0.5 * (2.0 * mag).atan2(aqq - app);
                let (s, c) = theta.sin_cos();
                // rotation acts on columns p, q: [c, s*phase; -s*conj(phase), c]
                let sp = phase * s;
                for row in a.iter_mut() {
                    let xp = row[p];
                    let xq = row[q];
                    row[p] = xp * c - xq * sp.conj();
                    row[q] = xp * sp + xq * c;
                }
                for k in 0..4 {
                    let xp = a[p][k];
                    let xq = a[q][k];
                    a[p][k] = xp * c - xq * sp;
                    a[q][k] = xp * sp.conj() + xq * c;
                }
                for row in v.iter_mut() {
                    let xp = row[p];
                    let xq = row[q];
                    row[p] = xp * c - xq * sp.conj();
                    row[q] = xp * sp + xq * c;
                }
                a[p][q] = O;
                a[q][p] = O;
            }
        }
    }
    let mut order = [0usize, 1, 2, 3];
    order.sort_by(|&i, &j| a[i][i].re.total_cmp(&a[j][j].re));
    let values = order.map(|k| a[k][k].re);
    let vecs = ComplexMatrix4::from_fn(|i, j| v[i][order[j]]);
    (values, vecs)
}

/// Singular values (descending) by one-sided Jacobi orthogonalisation.
/// Small singular values carry absolute error of order `eps * |M|`.
pub fn singular_values(m: &ComplexMatrix4) -> [f64; 4] {
    let mut cols: [[C64; 4]; 4] = [0, 1, 2, 3].map(|j| [0, 1, 2, 3].map(|i| m.0[i][j]));
    for _sweep in 0..64 {
        let mut rotated = false;
        for p in 0..3 {
            for q in (p + 1)..4 {
                let alpha: f64 = cols[p].iter().map(|z| z.norm_sqr()).sum();
                let beta: f64 = cols[q].iter().map(|z| z.norm_sqr()).sum();
                let gamma: C64 = cols[p].iter().zip(cols[q].iter()).map(|(a, b)| a.conj() * b).sum();
                let g = gamma.norm();
                if g <= 1e-15 * (alpha * beta).sqrt() || g == 0.0 {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for k in 0..4 {
                    let xp = cols[p][k];
                    let xq = cols[q][k];
                    cols[p][k] = xp * c - xq * phase.conj() * s;
                    cols[q][k] = xp * phase * s + xq * c;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv = cols.map(|c| c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt());
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

#[cfg(test)]
mod tests {
    use super::*;

    const SX: [[C64; 2]; 2] = [[O, P1], [P1, O]];
    const SY: [[C64; 2]; 2] = [[O, PI], [MI, O]];
    const SZ: [[C64; 2]; 2] = [[M1, O], [O, P1]];
    const ID: [[C64; 2]; 2] = [[P1, O], [O, P1]];

    #[test]
    fn pauli_constants_match_kronecker_products() {
        let cases = [
            (ComplexMatrix4::SIGMA_X1, ComplexMatrix4::kron(&SX, &ID)),
            (ComplexMatrix4::SIGMA_X2, ComplexMatrix4::kron(&ID, &SX)),
            (ComplexMatrix4::SIGMA_Y1, ComplexMatrix4::kron(&SY, &ID)),
            (ComplexMatrix4::SIGMA_Y2, ComplexMatrix4::kron(&ID, &SY)),
            (ComplexMatrix4::SIGMA_Z1, ComplexMatrix4::kron(&SZ, &ID)),
            (ComplexMatrix4::SIGMA_Z2, ComplexMatrix4::kron(&ID, &SZ)),
            (ComplexMatrix4::SIGMA_ZZ, ComplexMatrix4::kron(&SZ, &SZ)),
            (ComplexMatrix4::SIGMA_YY, ComplexMatrix4::kron(&SY, &SY)),
            (ComplexMatrix4::PARITY, ComplexMatrix4::kron(&SX, &SX)),
        ];
        for (constant, built) in cases {
            assert_eq!(constant, built);
        }
    }

    #[test]
    fn pauli_algebra_in_this_convention() {
        // sigma_x sigma_y = i sigma_z on each factor
        let lhs = ComplexMatrix4::SIGMA_X1 * ComplexMatrix4::SIGMA_Y1;
        let rhs = ComplexMatrix4::SIGMA_Z1.scale(PI);
        assert!(lhs.max_abs_diff(&rhs) < 1e-15);
        // sigma_z |1> = +|1> for the first qubit
        let one_zero = StateVector4::basis(2);
        let z = ComplexMatrix4::SIGMA_Z1.apply(&one_zero);
        assert_eq!(z, one_zero);
    }

    #[test]
    fn inverse_round_trips() {
        let m = ComplexMatrix4::from_fn(|i, j| C64::new((i * 3 + j) as f64 * 0.1 + if i == j { 2.0 } else { 0.0 }, (i as f64 - j as f64) * 0.3));
        let inv = m.inverse().unwrap();
        assert!((m * inv).max_abs_diff(&ComplexMatrix4::IDENTITY) < 1e-13);
        assert!(ComplexMatrix4::ZERO.inverse().is_err());
    }

    #[test]
    fn jacobi_diagonalises_hermitian() {
        let m = ComplexMatrix4::from_fn(|i, j| {
            let re = 1.0 / (1.0 + i as f64 + j as f64);
            let im = if i < j { 0.2 * (j - i) as f64 } else if i > j { -0.2 * (i - j) as f64 } else { 0.0 };
            C64::new(re, im)
        });
        let (vals, vecs) = hermitian_eigen(&m);
        for k in 0..4 {
            let v = vecs.column(k);
            let r = m.apply(&v) - v * vals[k];
            assert!(r.norm() < 1e-13, "residual {}", r.norm());
        }
        assert!((vecs.adjoint() * vecs).max_abs_diff(&ComplexMatrix4::IDENTITY) < 1e-13);
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn singular_values_of_rank_one_are_exact() {
        let psi = StateVector4::new([C64::new(0.3, 0.1), C64::new(-0.2, 0.5), C64::new(0.4, 0.0), C64::new(0.1, -0.6)]);
        let psi = psi.normalized().unwrap();
        let sv = singular_values(&psi.outer());
        assert!((sv[0] - 1.0).abs() < 1e-14);
        assert!(sv[1..].iter().all(|&s| s < 1e-15));
    }

    #[test]
    fn singular_values_of_diagonal() {
        let m = ComplexMatrix4::diagonal([C64::new(0.0, -3.0), C64::new(1.0, 0.0), C64::new(-2.0, 0.0), O]);
        let sv = singular_values(&m);
        assert_eq!(sv, [3.0, 2.0, 1.0, 0.0]);
    }

    #[test]
    fn phase_fix_makes_largest_amplitude_real_positive() {
        let v = StateVector4::new([C64::new(0.1, 0.0), C64::new(0.0, -0.9), C64::new(0.3, 0.3), O]);
        let f = v.phase_fixed();
        assert!(f.0[1].im.abs() < 1e-15 && f.0[1].re > 0.0);
        assert!((f.overlap(&v) - v.norm_sqr()).abs() < 1e-15);
    }
}
