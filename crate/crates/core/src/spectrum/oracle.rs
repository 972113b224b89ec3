//! Independent eigen-solver for general 4x4 complex matrices.
//!
//! Eigenvalues come from Householder reduction to Hessenberg form followed by
//! Wilkinson-shifted complex QR iteration; eigenvectors are extracted from the
//! null space of `H - lambda I` by Gaussian elimination with complete pivoting.
//! Nothing here knows about the model's closed forms.

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix4, StateVector4, C64};

use super::{Spectrum, SpectrumSource};

const MAX_ITER_PER_ROOT: usize = 60;

/// Eigenvalues of `m`, ordered by real part then imaginary part.
pub fn eigenvalues_qr(m: &ComplexMatrix4) -> Result<[C64; 4]> {
    if !m.is_finite() {
        return Err(Error::InvalidArgument("matrix has non-finite entries".into()));
    }
    let mut h = hessenberg(m);
    let mut out = [C64::new(0.0, 0.0); 4];
    let mut hi = 3usize;
    let mut iter = 0usize;
    let mut total = 0usize;
    loop {
        if hi == 0 {
            out[0] = h[0][0];
            break;
        }
        // look for a negligible subdiagonal entry in the active block
        let mut l = hi;
        while l > 0 {
            let s = h[l - 1][l - 1].norm() + h[l][l].norm();
            let s = if s == 0.0 { 1.0 } else { s };
            if h[l][l - 1].norm() <= f64::EPSILON * s {
                h[l][l - 1] = C64::new(0.0, 0.0);
                break;
            }
            l -= 1;
        }
        if l == hi {
            out[hi] = h[hi][hi];
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        total += 1;
        if iter > MAX_ITER_PER_ROOT {
            return Err(Error::NoConvergence { iterations: total });
        }
        let shift = if iter.is_multiple_of(11) {
            // exceptional shift
            h[hi][hi] + C64::new(0.75 * h[hi][hi - 1].norm(), 0.0)
        } else {
            wilkinson_shift(h[hi - 1][hi - 1], h[hi - 1][hi], h[hi][hi - 1], h[hi][hi])
        };
        qr_step(&mut h, l, hi, shift);
    }
    out.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(out)
}

fn hessenberg(m: &ComplexMatrix4) -> [[C64; 4]; 4] {
    let mut a = m.0;
    for k in 0..2 {
        let norm: f64 = (k + 1..4).map(|i| a[i][k].norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let x0 = a[k + 1][k];
        let phase = if x0.norm() == 0.0 { C64::new(1.0, 0.0) } else { x0 / x0.norm() };
        let alpha = -phase * norm;
        let mut v = [C64::new(0.0, 0.0); 4];
        for i in k + 1..4 {
            v[i] = a[i][k];
        }
        v[k + 1] -= alpha;
        let vnorm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        // A <- (I - 2 v v^H / |v|^2) A (I - 2 v v^H / |v|^2)
        for j in 0..4 {
            let dot: C64 = (k + 1..4).map(|i| v[i].conj() * a[i][j]).sum();
            let f = dot * (2.0 / vnorm2);
            for i in k + 1..4 {
                a[i][j] -= v[i] * f;
            }
        }
        for row in a.iter_mut() {
            let dot: C64 = (k + 1..4).map(|j| row[j] * v[j]).sum();
            let f = dot * (2.0 / vnorm2);
            for j in k + 1..4 {
                row[j] -= f * v[j].conj();
            }
        }
        for i in k + 2..4 {
            a[i][k] = C64::new(0.0, 0.0);
        }
    }
    a
}

fn wilkinson_shift(a: C64, b: C64, c: C64, d: C64) -> C64 {
    let half_tr = (a + d) * 0.5;
    let disc = ((a - d) * (a - d) * 0.25 + b * c).sqrt();
    let e1 = half_tr + disc;
    let e2 = half_tr - disc;
    if (e1 - d).norm() <= (e2 - d).norm() {
        e1
    } else {
        e2
    }
}

/// One explicit shifted QR step on the active block `[lo, hi]`.
fn qr_step(h: &mut [[C64; 4]; 4], lo: usize, hi: usize, shift: C64) {
    for i in lo..=hi {
        h[i][i] -= shift;
    }
    let mut rotations = Vec::with_capacity(hi - lo);
    for k in lo..hi {
        let (c, s) = givens(h[k][k], h[k + 1][k]);
        // rows k, k+1 <- G rows
        for j in k..=hi {
            let x = h[k][j];
            let y = h[k + 1][j];
            h[k][j] = x * c + s * y;
            h[k + 1][j] = -s.conj() * x + y * c;
        }
        rotations.push((c, s));
    }
    for (offset, &(c, s)) in rotations.iter().enumerate() {
        let k = lo + offset;
        // columns k, k+1 <- columns G^H
        for row in h.iter_mut().take(hi + 1).skip(lo) {
            let x = row[k];
            let y = row[k + 1];
            row[k] = x * c + y * s.conj();
            row[k + 1] = -x * s + y * c;
        }
    }
    for i in lo..=hi {
        h[i][i] += shift;
    }
}

/// Complex Givens rotation `[c, s; -conj(s), c]` (c real) mapping `(a, b)` to `(r, 0)`.
fn givens(a: C64, b: C64) -> (f64, C64) {
    let bn = b.norm();
    if bn == 0.0 {
        return (1.0, C64::new(0.0, 0.0));
    }
    let an = a.norm();
    if an == 0.0 {
        return (0.0, b.conj() / bn);
    }
    let r = an.hypot(bn);
    let c = an / r;
    let s = (a / an) * b.conj() / r;
    (c, s)
}

/// Basis of the `k`-dimensional null space of `a`, computed by `4 - k` steps of
/// Gaussian elimination with complete pivoting.
fn null_space(a: &ComplexMatrix4, k: usize) -> Vec<StateVector4> {
    let mut m = a.0;
    let mut col_perm = [0usize, 1, 2, 3];
    let rank = 4 - k;
    for step in 0..rank {
        let mut best = (step, step);
        let mut best_mag = -1.0;
        for (i, row) in m.iter().enumerate().skip(step) {
            for (j, z) in row.iter().enumerate().skip(step) {
                if z.norm() > best_mag {
                    best_mag = z.norm();
                    best = (i, j);
                }
            }
        }
        m.swap(step, best.0);
        for row in m.iter_mut() {
            row.swap(step, best.1);
        }
        col_perm.swap(step, best.1);
        let pivot = m[step][step];
        if pivot.norm() == 0.0 {
            continue;
        }
        for i in step + 1..4 {
            let f = m[i][step] / pivot;
            for j in step..4 {
                let t = m[step][j];
                m[i][j] -= f * t;
            }
        }
    }
    (rank..4)
        .map(|free| {
            let mut y = [C64::new(0.0, 0.0); 4];
            y[free] = C64::new(1.0, 0.0);
            for i in (0..rank).rev() {
                let s: C64 = (i + 1..4).map(|j| m[i][j] * y[j]).sum();
                y[i] = if m[i][i].norm() == 0.0 { C64::new(0.0, 0.0) } else { -s / m[i][i] };
            }
            let mut x = [C64::new(0.0, 0.0); 4];
            for (pos, &orig) in col_perm.iter().enumerate() {
                x[orig] = y[pos];
            }
            StateVector4(x)
        })
        .collect()
}

fn gram_schmidt(vs: &mut [StateVector4]) {
    for i in 0..vs.len() {
        for j in 0..i {
            let proj = vs[j].inner(&vs[i]);
            vs[i] = vs[i] - vs[j] * proj;
        }
        if let Ok(n) = vs[i].normalized() {
            vs[i] = n;
        }
    }
}

fn residual(h: &ComplexMatrix4, e: C64, v: &StateVector4) -> f64 {
    (h.apply(v) - *v * e).norm()
}

/// Eigenvalues and unit right eigenvectors of an arbitrary finite 4x4 matrix.
pub fn eigensystem_oracle(h: &ComplexMatrix4) -> Result<Spectrum> {
    let values = eigenvalues_qr(h)?;
    let scale = h.max_abs().max(1.0);
    let cluster_tol = 1e-9 * scale;

    let mut vectors = [StateVector4::ZERO; 4];
    let mut i = 0;
    while i < 4 {
        let mut end = i + 1;
        while end < 4 && (values[end] - values[i]).norm() <= cluster_tol {
            end += 1;
        }
        let k = end - i;
        let mean = values[i..end].iter().sum::<C64>() / k as f64;
        let shifted = *h - ComplexMatrix4::IDENTITY * mean;
        let mut basis = null_space(&shifted, k);
        gram_schmidt(&mut basis);
        let ok = basis
            .iter()
            .zip(&values[i..end])
            .all(|(v, &e)| v.norm() > 0.5 && residual(h, e, v) <= 1e-6 * scale);
        if !ok && k > 1 {
            // defective cluster: fall back to one vector per eigenvalue
            for (slot, &e) in (i..end).zip(&values[i..end]) {
                let shifted = *h - ComplexMatrix4::IDENTITY * e;
                basis[slot - i] = null_space(&shifted, 1)[0].normalized().unwrap_or(StateVector4::basis(0));
            }
        }
        for (slot, v) in (i..end).zip(basis) {
            vectors[slot] = v.normalized().map(|v| v.phase_fixed()).unwrap_or(v);
        }
        i = end;
    }

    let max_residual = (0..4).map(|k| residual(h, values[k], &vectors[k])).fold(0.0, f64::max);
    Ok(Spectrum { eigenvalues: values, eigenvectors: vectors, source: SpectrumSource::Oracle, max_residual })
}
