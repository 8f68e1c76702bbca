//! Channel-level state preparation: phase encoding, photon loss as a Kraus
//! map, and the lift of a mode-space unitary to the truncated Fock space.
//!
//! [`lossy_state_by_kraus`] prepares the probe by literally pushing the
//! encoded pure state through per-mode loss channels, without assuming
//! anything about the result's structure. [`crate::fockspace::build_lossy_state`]
//! writes the same state down directly; the two must agree.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::combin::binomial_f;
use crate::error::{Error, Result};
use crate::fockspace::{DensityMatrix, FockBasis};
use crate::model::{PhaseVector, Scenario, WeightVector};
use crate::tol;

/// `sum_j sqrt(p_j) |N e_j>` over the basis modes, before phase encoding.
pub fn noon_state(basis: &FockBasis, p: &WeightVector) -> Result<DVector<Complex64>> {
    if p.len() != basis.n_modes() {
        return Err(Error::DimensionMismatch {
            context: "weights for probe state",
            expected: basis.n_modes(),
            found: p.len(),
        });
    }
    let n = basis.max_total();
    let mut psi = DVector::zeros(basis.dim());
    for (j, &pj) in p.values().iter().enumerate() {
        psi[basis.single_mode_index(j, n)] = Complex64::from(pj.sqrt());
    }
    Ok(psi)
}

/// Diagonal of `exp(i sum_j phi_j n_j)` with mode 0 carrying no phase.
pub fn phase_diagonal(basis: &FockBasis, phases: &PhaseVector) -> Result<DVector<Complex64>> {
    if phases.len() + 1 != basis.n_modes() {
        return Err(Error::DimensionMismatch {
            context: "phases for diagonal encoding",
            expected: basis.n_modes() - 1,
            found: phases.len(),
        });
    }
    let mut diag = DVector::zeros(basis.dim());
    for i in 0..basis.dim() {
        let occ = basis.state(i);
        let angle: f64 = phases
            .values()
            .iter()
            .zip(&occ[1..])
            .map(|(&phi, &n)| phi * n as f64)
            .sum();
        diag[i] = Complex64::from_polar(1.0, angle);
    }
    Ok(diag)
}

/// Sends photons in one mode to the environment with probability `gamma`
/// each: `rho -> sum_k K_k rho K_k^dag` with
/// `K_k |n> = sqrt(C(n,k) (1-gamma)^(n-k) gamma^k) |n-k>`.
pub fn apply_mode_loss(
    basis: &FockBasis,
    rho: &DMatrix<Complex64>,
    mode: usize,
    gamma: f64,
) -> Result<DMatrix<Complex64>> {
    if mode >= basis.n_modes() {
        return Err(Error::DimensionMismatch {
            context: "loss mode index",
            expected: basis.n_modes(),
            found: mode,
        });
    }
    if !gamma.is_finite() || !(0.0..=1.0).contains(&gamma) {
        return Err(Error::LossOutOfRange { mode, value: gamma });
    }
    if rho.nrows() != basis.dim() || rho.ncols() != basis.dim() {
        return Err(Error::DimensionMismatch {
            context: "state for loss channel",
            expected: basis.dim(),
            found: rho.nrows().max(rho.ncols()),
        });
    }
    let mut out = DMatrix::zeros(basis.dim(), basis.dim());
    for k in 0..=basis.max_total() {
        // Images (source, target, amplitude) of K_k on basis states.
        let mut images: Vec<(usize, usize, f64)> = Vec::new();
        for i in 0..basis.dim() {
            let n = basis.state(i)[mode];
            if n < k {
                continue;
            }
            let c2 = binomial_f(n, k) * (1.0 - gamma).powi((n - k) as i32) * gamma.powi(k as i32);
            if c2 == 0.0 {
                continue;
            }
            let mut occ = basis.state(i).to_vec();
            occ[mode] = n - k;
            let j = basis.index_of(&occ).expect("loss stays inside the basis");
            images.push((i, j, c2.sqrt()));
        }
        for &(i1, j1, c1) in &images {
            for &(i2, j2, c2) in &images {
                out[(j1, j2)] += Complex64::from(c1 * c2) * rho[(i1, i2)];
            }
        }
    }
    Ok(out)
}

/// Lifts a mode-space matrix `V` to the truncated Fock space by
/// `a_j^dag -> sum_k V_kj a_k^dag`. Requires `V` unitary, which makes the
/// lift unitary on every photon-number sector.
pub fn lift_mode_unitary(basis: &FockBasis, v: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    let m = basis.n_modes();
    if v.nrows() != m || v.ncols() != m {
        return Err(Error::DimensionMismatch {
            context: "mode unitary",
            expected: m,
            found: v.nrows().max(v.ncols()),
        });
    }
    let gram = v.adjoint() * v;
    let mut residual = 0.0f64;
    for r in 0..m {
        for c in 0..m {
            let expected = if r == c { Complex64::ONE } else { Complex64::ZERO };
            residual = residual.max((gram[(r, c)] - expected).norm());
        }
    }
    if residual > tol::UNITARITY {
        return Err(Error::NotUnitary { residual });
    }

    let mut out = DMatrix::zeros(basis.dim(), basis.dim());
    for col in 0..basis.dim() {
        let occ = basis.state(col);
        // Expand prod_j (sum_k V_kj a_k^dag)^(n_j) |0> in normalized basis
        // states, dividing by sqrt(i) at the i-th application per mode so
        // the column of the identity stays exactly 1.
        let mut poly: HashMap<Vec<u32>, Complex64> = HashMap::new();
        poly.insert(vec![0u32; m], Complex64::ONE);
        for (j, &nj) in occ.iter().enumerate() {
            for step in 1..=nj {
                let mut next: HashMap<Vec<u32>, Complex64> = HashMap::with_capacity(poly.len() * m);
                let scale = 1.0 / (step as f64).sqrt();
                for (state, coeff) in &poly {
                    for k in 0..m {
                        let vkj = v[(k, j)];
                        if vkj == Complex64::ZERO {
                            continue;
                        }
                        let ladder = ((state[k] + 1) as f64).sqrt();
                        let mut bumped = state.clone();
                        bumped[k] += 1;
                        *next.entry(bumped).or_insert(Complex64::ZERO) +=
                            coeff * vkj * Complex64::from(ladder * scale);
                    }
                }
                poly = next;
            }
        }
        for (state, coeff) in poly {
            let row = basis
                .index_of(&state)
                .expect("photon number is conserved");
            out[(row, col)] = coeff;
        }
    }
    Ok(out)
}

/// Runs the preparation pipeline end to end: weighted single-mode
/// superposition, diagonal phase encoding, then one loss channel per mode.
pub fn lossy_state_by_kraus(s: &Scenario, p: &WeightVector) -> Result<DensityMatrix> {
    s.validate()?;
    let basis = std::sync::Arc::new(FockBasis::new(s.n_modes(), s.n_photons())?);
    let psi = noon_state(&basis, p)?;
    let diag = phase_diagonal(&basis, s.phases())?;
    let encoded = diag.component_mul(&psi);
    let mut rho = &encoded * encoded.adjoint();
    for (mode, &gamma) in s.loss().rates().iter().enumerate() {
        rho = apply_mode_loss(&basis, &rho, mode, gamma)?;
    }
    DensityMatrix::new(basis, rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fockspace::build_lossy_state;
    use crate::model::LossProfile;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn entrywise_max_diff(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
        (a - b).map(|z| z.norm()).max()
    }

    fn random_density(rng: &mut ChaCha8Rng, dim: usize) -> DMatrix<Complex64> {
        let a = DMatrix::from_fn(dim, dim, |_, _| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let m = &a * a.adjoint();
        let trace: f64 = (0..dim).map(|i| m[(i, i)].re).sum();
        m / Complex64::from(trace)
    }

    fn dft(n: usize) -> DMatrix<Complex64> {
        let scale = 1.0 / (n as f64).sqrt();
        DMatrix::from_fn(n, n, |r, c| {
            Complex64::from_polar(scale, 2.0 * PI * (r * c) as f64 / n as f64)
        })
    }

    #[test]
    fn noon_state_is_normalized() {
        let basis = FockBasis::new(3, 2).unwrap();
        let p = WeightVector::new(vec![0.5, 0.25, 0.25]).unwrap();
        let psi = noon_state(&basis, &p).unwrap();
        assert_abs_diff_eq!(psi.norm(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(
            psi[basis.single_mode_index(0, 2)].re,
            0.5f64.sqrt(),
            epsilon = 1e-15
        );
        assert_eq!(psi[basis.index_of(&[1, 1, 0]).unwrap()], Complex64::ZERO);
    }

    #[test]
    fn lift_of_identity_is_identity() {
        let basis = FockBasis::new(3, 2).unwrap();
        let v = DMatrix::identity(3, 3);
        let lifted = lift_mode_unitary(&basis, &v).unwrap();
        let diff = entrywise_max_diff(&lifted, &DMatrix::identity(basis.dim(), basis.dim()));
        assert!(diff < 1e-15);
    }

    #[test]
    fn lift_preserves_unitarity() {
        let basis = FockBasis::new(3, 3).unwrap();
        let lifted = lift_mode_unitary(&basis, &dft(3)).unwrap();
        let gram = lifted.adjoint() * &lifted;
        let diff = entrywise_max_diff(&gram, &DMatrix::identity(basis.dim(), basis.dim()));
        assert!(diff < 1e-12, "worst Gram residual {diff}");
    }

    #[test]
    fn lift_is_a_homomorphism() {
        let basis = FockBasis::new(3, 2).unwrap();
        let a = dft(3);
        let b = DMatrix::from_diagonal(&DVector::from_vec(vec![
            Complex64::from_polar(1.0, 0.3),
            Complex64::from_polar(1.0, -1.1),
            Complex64::from_polar(1.0, 2.2),
        ]));
        let product = lift_mode_unitary(&basis, &(&a * &b)).unwrap();
        let composed = lift_mode_unitary(&basis, &a).unwrap() * lift_mode_unitary(&basis, &b).unwrap();
        let diff = entrywise_max_diff(&product, &composed);
        assert!(diff < 1e-12, "worst composition residual {diff}");
    }

    #[test]
    fn lift_rejects_nonunitary_input() {
        let basis = FockBasis::new(2, 1).unwrap();
        let v = DMatrix::from_row_slice(2, 2, &[
            Complex64::ONE,
            Complex64::ONE,
            Complex64::ZERO,
            Complex64::ONE,
        ]);
        assert!(matches!(
            lift_mode_unitary(&basis, &v),
            Err(Error::NotUnitary { .. })
        ));
    }

    #[test]
    fn lift_splits_a_single_photon() {
        let basis = FockBasis::new(2, 1).unwrap();
        let s = 0.5f64.sqrt();
        let v = DMatrix::from_row_slice(2, 2, &[
            Complex64::from(s),
            Complex64::from(-s),
            Complex64::from(s),
            Complex64::from(s),
        ]);
        let lifted = lift_mode_unitary(&basis, &v).unwrap();
        let col = basis.index_of(&[1, 0]).unwrap();
        assert_abs_diff_eq!(lifted[(basis.index_of(&[1, 0]).unwrap(), col)].re, s, epsilon = 1e-15);
        assert_abs_diff_eq!(lifted[(basis.index_of(&[0, 1]).unwrap(), col)].re, s, epsilon = 1e-15);
    }

    #[test]
    fn mode_loss_preserves_trace() {
        let basis = FockBasis::new(2, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rho = random_density(&mut rng, basis.dim());
        let out = apply_mode_loss(&basis, &rho, 1, 0.37).unwrap();
        let trace: f64 = (0..out.nrows()).map(|i| out[(i, i)].re).sum();
        assert_abs_diff_eq!(trace, 1.0, epsilon = 1e-13);
    }

    #[test]
    fn zero_loss_is_the_identity_channel() {
        let basis = FockBasis::new(2, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let rho = random_density(&mut rng, basis.dim());
        let out = apply_mode_loss(&basis, &rho, 0, 0.0).unwrap();
        assert!(entrywise_max_diff(&out, &rho) < 1e-15);
    }

    #[test]
    fn loss_channels_compose_as_a_semigroup() {
        let basis = FockBasis::new(2, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rho = random_density(&mut rng, basis.dim());
        let (g1, g2) = (0.3, 0.45);
        let step = apply_mode_loss(&basis, &rho, 0, g1).unwrap();
        let two_steps = apply_mode_loss(&basis, &step, 0, g2).unwrap();
        let fused = 1.0 - (1.0 - g1) * (1.0 - g2);
        let direct = apply_mode_loss(&basis, &rho, 0, fused).unwrap();
        let diff = entrywise_max_diff(&two_steps, &direct);
        assert!(diff < 1e-12, "worst semigroup residual {diff}");
    }

    #[test]
    fn loss_commutes_with_phase_encoding() {
        let basis = FockBasis::new(3, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let rho = random_density(&mut rng, basis.dim());
        let phases = PhaseVector::new(vec![0.8, -0.4]).unwrap();
        let d = DMatrix::from_diagonal(&phase_diagonal(&basis, &phases).unwrap());
        let lost_then_phased = &d * apply_mode_loss(&basis, &rho, 1, 0.25).unwrap() * d.adjoint();
        let phased_then_lost =
            apply_mode_loss(&basis, &(&d * &rho * d.adjoint()), 1, 0.25).unwrap();
        let diff = entrywise_max_diff(&lost_then_phased, &phased_then_lost);
        assert!(diff < 1e-12, "worst commutation residual {diff}");
    }

    #[test]
    fn kraus_route_matches_direct_construction() {
        let cases: [(u32, Vec<f64>, Vec<f64>, Vec<f64>); 4] = [
            (2, vec![0.0, 0.0], vec![0.7], vec![0.5, 0.5]),
            (2, vec![0.5, 0.0, 0.0], vec![0.5, 0.7], vec![0.4, 0.3, 0.3]),
            (3, vec![0.2, 0.6, 0.1], vec![1.0, 0.2], vec![0.2, 0.5, 0.3]),
            (2, vec![0.0, 1.0], vec![0.3], vec![0.5, 0.5]),
        ];
        for (n, rates, phases, weights) in cases {
            let s = Scenario::new(
                n,
                phases.len(),
                LossProfile::new(rates).unwrap(),
                PhaseVector::new(phases).unwrap(),
                1,
            )
            .unwrap();
            let p = WeightVector::new(weights).unwrap();
            let direct = build_lossy_state(&s, &p).unwrap();
            let pushed = lossy_state_by_kraus(&s, &p).unwrap();
            let diff = entrywise_max_diff(direct.matrix(), pushed.matrix());
            assert!(diff < 1e-12, "worst state mismatch {diff}");
        }
    }
}
