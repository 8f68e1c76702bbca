//! Dense truncated-Fock reference computations.
//!
//! This module rebuilds the probe state as an explicit matrix and extracts
//! information quantities by numerical eigendecomposition. It shares no
//! algebra with [`crate::bounds`]; agreement between the two routes is what
//! the verification sweeps check.

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::combin::{binomial_f, binomial_u128};
use crate::error::{Error, Result};
use crate::model::{FisherKind, FisherMatrix, Scenario, WeightVector};
use crate::tol;

/// All photon-occupation tuples over `n_modes` modes with total `<=
/// max_total`, in ascending lexicographic order, with O(1) index lookup.
#[derive(Debug, Clone)]
pub struct FockBasis {
    n_modes: usize,
    max_total: u32,
    states: Vec<Vec<u32>>,
    totals: Vec<u32>,
    index: HashMap<Vec<u32>, usize>,
}

impl FockBasis {
    pub fn new(n_modes: usize, max_total: u32) -> Result<Self> {
        if n_modes < 1 {
            return Err(Error::ZeroCount { what: "mode count" });
        }
        let dim = binomial_u128(max_total as u64 + n_modes as u64, n_modes as u64);
        let entries = dim * dim;
        if entries > tol::FOCK_ENTRY_CAP {
            return Err(Error::BasisOverflow {
                required: entries,
                cap: tol::FOCK_ENTRY_CAP,
            });
        }
        let mut states = Vec::with_capacity(dim as usize);
        let mut current = vec![0u32; n_modes];
        fill(&mut states, &mut current, 0, max_total);
        debug_assert_eq!(states.len() as u128, dim);
        let totals = states.iter().map(|s| s.iter().sum()).collect();
        let index = states
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect();
        Ok(Self {
            n_modes,
            max_total,
            states,
            totals,
            index,
        })
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn max_total(&self) -> u32 {
        self.max_total
    }

    pub fn state(&self, i: usize) -> &[u32] {
        &self.states[i]
    }

    /// Total photon number of basis state `i`.
    pub fn total(&self, i: usize) -> u32 {
        self.totals[i]
    }

    pub fn index_of(&self, occupation: &[u32]) -> Option<usize> {
        self.index.get(occupation).copied()
    }

    /// Index of the state with `n` photons in `mode` and none elsewhere.
    pub fn single_mode_index(&self, mode: usize, n: u32) -> usize {
        let mut occ = vec![0u32; self.n_modes];
        occ[mode] = n;
        self.index[&occ]
    }
}

fn fill(out: &mut Vec<Vec<u32>>, current: &mut Vec<u32>, mode: usize, remaining: u32) {
    if mode + 1 == current.len() {
        for n in 0..=remaining {
            current[mode] = n;
            out.push(current.clone());
        }
        current[mode] = 0;
        return;
    }
    for n in 0..=remaining {
        current[mode] = n;
        fill(out, current, mode + 1, remaining - n);
    }
    current[mode] = 0;
}

pub(crate) use crate::eigen::hermitian_eigen;

fn hermiticity_residual(m: &DMatrix<Complex64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Validated Hermitian, unit-trace, positive-semidefinite operator on a
/// truncated Fock space.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    basis: Arc<FockBasis>,
    mat: DMatrix<Complex64>,
}

impl DensityMatrix {
    pub fn new(basis: Arc<FockBasis>, mat: DMatrix<Complex64>) -> Result<Self> {
        if mat.nrows() != basis.dim() || mat.ncols() != basis.dim() {
            return Err(Error::DimensionMismatch {
                context: "density matrix shape",
                expected: basis.dim(),
                found: mat.nrows().max(mat.ncols()),
            });
        }
        if mat.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite {
                what: "density matrix entry",
            });
        }
        let asym = hermiticity_residual(&mat);
        if asym > tol::DENSITY_HERMITIAN {
            return Err(Error::NotHermitian { residual: asym });
        }
        let trace: f64 = (0..mat.nrows()).map(|i| mat[(i, i)].re).sum();
        if (trace - 1.0).abs() > tol::DENSITY_TRACE {
            return Err(Error::TraceNotOne { trace });
        }
        let (eigenvalues, _) = hermitian_eigen(&mat)?;
        if let Some(&min) = eigenvalues.as_slice().iter().min_by(|a, b| a.total_cmp(b)) {
            if min < tol::DENSITY_EIGEN_FLOOR {
                return Err(Error::NotPositiveSemidefinite { eigenvalue: min });
            }
        }
        Ok(Self { basis, mat })
    }

    pub fn basis(&self) -> &FockBasis {
        &self.basis
    }

    pub fn basis_arc(&self) -> Arc<FockBasis> {
        Arc::clone(&self.basis)
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }
}

/// Hermitian logarithmic-derivative operator for one phase.
#[derive(Debug, Clone)]
pub struct SldOperator {
    phase_index: usize,
    mat: DMatrix<Complex64>,
}

impl SldOperator {
    pub fn new(phase_index: usize, mat: DMatrix<Complex64>) -> Result<Self> {
        let asym = hermiticity_residual(&mat);
        if asym > tol::SLD_HERMITIAN {
            return Err(Error::NotHermitian { residual: asym });
        }
        Ok(Self { phase_index, mat })
    }

    pub fn phase_index(&self) -> usize {
        self.phase_index
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.mat
    }
}

fn survival_weights(s: &Scenario, p: &WeightVector) -> Result<Vec<f64>> {
    if p.len() != s.n_modes() {
        return Err(Error::DimensionMismatch {
            context: "weight vector",
            expected: s.n_modes(),
            found: p.len(),
        });
    }
    let n = s.n_photons() as i32;
    Ok(p.values()
        .iter()
        .zip(s.loss().rates())
        .map(|(&pj, &gj)| pj * (1.0 - gj).powi(n))
        .collect())
}

/// Surviving coherent amplitude vector: entry `N e_j` is
/// `sqrt(w_j / W) exp(i N phi_j)` with `phi_0 = 0`. Zero vector when the
/// whole probe is lost.
fn coherent_vector(s: &Scenario, w: &[f64], basis: &FockBasis) -> DVector<Complex64> {
    let total: f64 = w.iter().sum();
    let mut psi = DVector::zeros(basis.dim());
    if total <= 0.0 {
        return psi;
    }
    let n = s.n_photons();
    for (j, &wj) in w.iter().enumerate() {
        let phase = if j == 0 {
            0.0
        } else {
            n as f64 * s.phases().values()[j - 1]
        };
        let idx = basis.single_mode_index(j, n);
        psi[idx] = Complex64::from_polar((wj / total).sqrt(), phase);
    }
    psi
}

/// Builds the post-loss probe state: a coherent `N`-photon block of weight
/// `W = sum_j p_j (1 - gamma_j)^N` plus a phase-independent diagonal rest
/// at lower photon numbers.
pub fn build_lossy_state(s: &Scenario, p: &WeightVector) -> Result<DensityMatrix> {
    s.validate()?;
    let w = survival_weights(s, p)?;
    let total: f64 = w.iter().sum();
    let basis = Arc::new(FockBasis::new(s.n_modes(), s.n_photons())?);
    let n = s.n_photons();
    let mut mat: DMatrix<Complex64> = DMatrix::zeros(basis.dim(), basis.dim());

    if total > 0.0 {
        let psi = coherent_vector(s, &w, &basis);
        for r in 0..basis.dim() {
            if psi[r] == Complex64::ZERO {
                continue;
            }
            for c in 0..basis.dim() {
                if psi[c] == Complex64::ZERO {
                    continue;
                }
                mat[(r, c)] += Complex64::from(total) * psi[r] * psi[c].conj();
            }
        }
    }

    for (j, (&pj, &gj)) in p.values().iter().zip(s.loss().rates()).enumerate() {
        if pj == 0.0 {
            continue;
        }
        for r in 1..=n {
            let weight = pj * binomial_f(n, r) * (1.0 - gj).powi((n - r) as i32) * gj.powi(r as i32);
            if weight == 0.0 {
                continue;
            }
            let idx = basis.single_mode_index(j, n - r);
            mat[(idx, idx)] += Complex64::from(weight);
        }
    }

    DensityMatrix::new(basis, mat)
}

/// Analytic phase derivatives of [`build_lossy_state`]'s output: only the
/// coherent block moves, picking up `i N` on the component of mode `a + 1`.
pub fn state_derivatives(
    s: &Scenario,
    p: &WeightVector,
    basis: &FockBasis,
) -> Result<Vec<DMatrix<Complex64>>> {
    if basis.n_modes() != s.n_modes() || basis.max_total() != s.n_photons() {
        return Err(Error::DimensionMismatch {
            context: "basis for state derivatives",
            expected: s.n_modes(),
            found: basis.n_modes(),
        });
    }
    let w = survival_weights(s, p)?;
    let total: f64 = w.iter().sum();
    let psi = coherent_vector(s, &w, basis);
    let n = s.n_photons() as f64;
    let dim = basis.dim();
    let mut derivs = Vec::with_capacity(s.n_phases());
    for a in 0..s.n_phases() {
        let idx = basis.single_mode_index(a + 1, s.n_photons());
        let dpsi_idx = Complex64::new(0.0, n) * psi[idx];
        let mut m: DMatrix<Complex64> = DMatrix::zeros(dim, dim);
        if total > 0.0 && dpsi_idx != Complex64::ZERO {
            for k in 0..dim {
                if psi[k] == Complex64::ZERO {
                    continue;
                }
                m[(idx, k)] += Complex64::from(total) * dpsi_idx * psi[k].conj();
                m[(k, idx)] += Complex64::from(total) * psi[k] * dpsi_idx.conj();
            }
        }
        derivs.push(m);
    }
    Ok(derivs)
}

struct EigenFrame {
    rho: DensityMatrix,
    eigenvalues: DVector<f64>,
    /// Derivatives rotated into the eigenbasis, one matrix per phase.
    m: Vec<DMatrix<Complex64>>,
    eigenvectors: DMatrix<Complex64>,
}

fn eigen_frame(s: &Scenario, p: &WeightVector) -> Result<EigenFrame> {
    let rho = build_lossy_state(s, p)?;
    let (eigenvalues, eigenvectors) = hermitian_eigen(rho.matrix())?;
    let derivs = state_derivatives(s, p, rho.basis())?;
    let vh = eigenvectors.adjoint();
    let m = derivs.iter().map(|d| &vh * d * &eigenvectors).collect();
    Ok(EigenFrame {
        rho,
        eigenvalues,
        m,
        eigenvectors,
    })
}

/// Fisher information from the numerical eigendecomposition of the state:
/// eigenvalue-gradient term, eigenvector-velocity term, and the
/// support-crossing correction, scaled by the repetition count.
pub fn qfim_oracle(s: &Scenario, p: &WeightVector) -> Result<FisherMatrix> {
    s.validate()?;
    let w = survival_weights(s, p)?;
    if w.iter().sum::<f64>() <= 0.0 {
        return Err(Error::SingularModel);
    }
    let frame = eigen_frame(s, p)?;
    let lam = &frame.eigenvalues;
    let dim = lam.len();
    let d = s.n_phases();

    // Eigenvector velocities by first-order perturbation theory. Gaps below
    // tol::EIGEN_GAP belong to degenerate subspaces, where the coupling
    // vanishes identically for this state family.
    let mut vel: Vec<DMatrix<Complex64>> = Vec::with_capacity(d);
    for a in 0..d {
        let ma = &frame.m[a];
        let mut da: DMatrix<Complex64> = DMatrix::zeros(dim, dim);
        for j in 0..dim {
            for k in 0..dim {
                if k == j {
                    continue;
                }
                let gap = lam[j] - lam[k];
                if gap.abs() > tol::EIGEN_GAP {
                    da[(k, j)] = ma[(k, j)] / Complex64::from(gap);
                }
            }
        }
        vel.push(da);
    }

    let mut f = DMatrix::zeros(d, d);
    for a in 0..d {
        for b in a..d {
            let ma = &frame.m[a];
            let mb = &frame.m[b];
            let da = &vel[a];
            let db = &vel[b];
            let mut value = 0.0;
            for j in 0..dim {
                if lam[j] > tol::SUPPORT_EPS {
                    value += ma[(j, j)].re * mb[(j, j)].re / lam[j];
                }
            }
            for j in 0..dim {
                if lam[j] <= tol::SUPPORT_EPS {
                    continue;
                }
                for k in 0..dim {
                    let overlap = (da[(k, j)].conj() * db[(k, j)]).re;
                    value += 4.0 * lam[j] * overlap;
                    if lam[k] > tol::SUPPORT_EPS {
                        value -= 8.0 * lam[j] * lam[k] / (lam[j] + lam[k]) * overlap;
                    }
                }
            }
            let scaled = value * s.repetitions() as f64;
            f[(a, b)] = scaled;
            f[(b, a)] = scaled;
        }
    }
    FisherMatrix::new(FisherKind::Quantum, f)
}

/// Logarithmic-derivative operators solved on the state's support.
pub fn sld_operators(s: &Scenario, p: &WeightVector) -> Result<Vec<SldOperator>> {
    s.validate()?;
    let frame = eigen_frame(s, p)?;
    sld_from_frame(&frame, s.n_phases())
}

fn sld_from_frame(frame: &EigenFrame, n_phases: usize) -> Result<Vec<SldOperator>> {
    let lam = &frame.eigenvalues;
    let dim = lam.len();
    let v = &frame.eigenvectors;
    let vh = v.adjoint();
    let mut out = Vec::with_capacity(n_phases);
    for a in 0..n_phases {
        let ma = &frame.m[a];
        let mut tilde: DMatrix<Complex64> = DMatrix::zeros(dim, dim);
        for k in 0..dim {
            for j in 0..dim {
                let denom = lam[k] + lam[j];
                if denom > tol::SUPPORT_EPS {
                    tilde[(k, j)] = Complex64::from(2.0) * ma[(k, j)] / Complex64::from(denom);
                }
            }
        }
        let l = v * tilde * &vh;
        let herm = (&l + l.adjoint()) * Complex64::from(0.5);
        out.push(SldOperator::new(a, herm)?);
    }
    Ok(out)
}

/// Second information route: assembles the Fisher matrix from the
/// logarithmic derivatives as `Re tr(rho L_a L_b)`, scaled by repetitions.
pub fn qfim_via_sld(s: &Scenario, p: &WeightVector) -> Result<FisherMatrix> {
    s.validate()?;
    let w = survival_weights(s, p)?;
    if w.iter().sum::<f64>() <= 0.0 {
        return Err(Error::SingularModel);
    }
    let frame = eigen_frame(s, p)?;
    let slds = sld_from_frame(&frame, s.n_phases())?;
    let d = s.n_phases();
    let rho = frame.rho.matrix();
    let mut f = DMatrix::zeros(d, d);
    for a in 0..d {
        for b in a..d {
            let prod = rho * slds[a].matrix() * slds[b].matrix();
            let mut trace = Complex64::ZERO;
            for i in 0..prod.nrows() {
                trace += prod[(i, i)];
            }
            let value = trace.re * s.repetitions() as f64;
            f[(a, b)] = value;
            f[(b, a)] = value;
        }
    }
    FisherMatrix::new(FisherKind::Quantum, f)
}

/// Largest `|tr(rho [L_a, L_b])|` over phase pairs; zero means the quantum
/// bound is attainable by one measurement for all phases at once.
pub fn attainability_check(s: &Scenario, p: &WeightVector) -> Result<f64> {
    s.validate()?;
    let frame = eigen_frame(s, p)?;
    let slds = sld_from_frame(&frame, s.n_phases())?;
    let rho = frame.rho.matrix();
    let mut worst = 0.0f64;
    for a in 0..slds.len() {
        for b in (a + 1)..slds.len() {
            let prod = rho * slds[a].matrix() * slds[b].matrix();
            let mut trace = Complex64::ZERO;
            for i in 0..prod.nrows() {
                trace += prod[(i, i)];
            }
            worst = worst.max(2.0 * trace.im.abs());
        }
    }
    Ok(worst)
}
