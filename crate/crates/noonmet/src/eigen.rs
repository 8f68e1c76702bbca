//! Complex Hermitian eigendecomposition by cyclic Jacobi rotations.
//!
//! nalgebra's symmetric eigensolver mis-pairs eigenvectors on complex
//! Hermitian matrices with degenerate spectra, which the probe states here
//! hit routinely (equal losses give equal weights). Jacobi is slower but
//! unconditionally accurate: every rotation is unitary by construction, so
//! orthonormality and the residual can only be as bad as roundoff.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 64;

fn off_norm(a: &DMatrix<Complex64>) -> f64 {
    let n = a.nrows();
    let mut sum = 0.0;
    for p in 0..n {
        for q in 0..n {
            if p != q {
                sum += a[(p, q)].norm_sqr();
            }
        }
    }
    sum.sqrt()
}

/// Eigenvalues (unsorted) and matching orthonormal eigenvector columns of a
/// Hermitian matrix. Fails only if the sweep budget runs out.
pub(crate) fn hermitian_eigen(
    m: &DMatrix<Complex64>,
) -> Result<(DVector<f64>, DMatrix<Complex64>)> {
    let n = m.nrows();
    let mut a = m.clone();
    let mut v: DMatrix<Complex64> = DMatrix::identity(n, n);
    let scale = a.map(|z| z.norm_sqr()).sum().sqrt().max(f64::MIN_POSITIVE);
    let target = scale * 1e-14;

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        if off_norm(&a) <= target {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let beta = a[(p, q)];
                let b = beta.norm();
                if b == 0.0 {
                    continue;
                }
                // Diagonalize the Hermitian 2x2 block [[alpha, beta],
                // [conj(beta), gamma]]: strip beta's phase, then rotate by
                // the smaller-angle root of the Jacobi quadratic.
                let alpha = a[(p, p)].re;
                let gamma = a[(q, q)].re;
                let tau = (gamma - alpha) / (2.0 * b);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let phase = beta / Complex64::from(b);

                // Column update: X <- X U with U_pp = c, U_qp = -s conj(phase),
                // U_pq = s, U_qq = c conj(phase).
                let sp = Complex64::from(s) * phase.conj();
                let cp = Complex64::from(c) * phase.conj();
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = Complex64::from(c) * akp - sp * akq;
                    a[(k, q)] = Complex64::from(s) * akp + cp * akq;
                }
                // Row update with the adjoint.
                let sp_c = sp.conj();
                let cp_c = cp.conj();
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = Complex64::from(c) * apk - sp_c * aqk;
                    a[(q, k)] = Complex64::from(s) * apk + cp_c * aqk;
                }
                a[(p, q)] = Complex64::ZERO;
                a[(q, p)] = Complex64::ZERO;
                a[(p, p)] = Complex64::from(a[(p, p)].re);
                a[(q, q)] = Complex64::from(a[(q, q)].re);

                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = Complex64::from(c) * vkp - sp * vkq;
                    v[(k, q)] = Complex64::from(s) * vkp + cp * vkq;
                }
            }
        }
    }
    if !converged && off_norm(&a) > target {
        return Err(Error::EigenFailure { dim: n });
    }
    let eigenvalues = DVector::from_iterator(n, (0..n).map(|i| a[(i, i)].re));
    Ok((eigenvalues, v))
}
