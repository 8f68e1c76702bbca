//! Linear-optical measurement stage: a rectangular mesh of two-mode
//! couplers, the scattering matrix it assembles to, and photon-counting
//! statistics of the surviving probe component behind it.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::combin::multinomial_sqrt;
use crate::error::{Error, Result};
use crate::fockspace::FockBasis;
use crate::model::{FisherKind, FisherMatrix, Scenario, WeightVector};
use crate::tol;

use std::f64::consts::{FRAC_PI_2, PI};

/// One two-mode coupler acting on the adjacent pair `(mode, mode + 1)`:
/// mixing angle `theta` in `[0, pi/2]` and phase `chi` in `[0, 2 pi)` on
/// the first input.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeshLayer {
    pub mode: usize,
    pub theta: f64,
    pub chi: f64,
}

#[derive(Serialize, Deserialize)]
struct MeshFile {
    layers: Vec<MeshLayer>,
}

/// A full rectangular mesh: `n (n - 1) / 2` couplers in a fixed layout,
/// enough to reach any scattering unitary up to detector phases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MeshFile", into = "MeshFile")]
pub struct MeshParams {
    n_modes: usize,
    layers: Vec<MeshLayer>,
}

impl MeshParams {
    pub fn new(n_modes: usize, layers: Vec<MeshLayer>) -> Result<Self> {
        if n_modes < 1 {
            return Err(Error::ZeroCount { what: "mode count" });
        }
        let expected = n_modes * (n_modes - 1) / 2;
        if layers.len() != expected {
            return Err(Error::DimensionMismatch {
                context: "mesh layer count",
                expected,
                found: layers.len(),
            });
        }
        for layer in &layers {
            if layer.mode + 1 >= n_modes {
                return Err(Error::DimensionMismatch {
                    context: "coupler mode index",
                    expected: n_modes - 1,
                    found: layer.mode,
                });
            }
            if !layer.theta.is_finite() || !(0.0..=FRAC_PI_2).contains(&layer.theta) {
                return Err(Error::AngleOutOfRange {
                    which: "coupler mixing angle",
                    value: layer.theta,
                });
            }
            if !layer.chi.is_finite() || !(0.0..2.0 * PI).contains(&layer.chi) {
                return Err(Error::AngleOutOfRange {
                    which: "coupler phase",
                    value: layer.chi,
                });
            }
        }
        Ok(Self { n_modes, layers })
    }

    /// Rectangular layout: pass `l` couples pairs starting at `l mod 2`,
    /// stepping by two. Every coupler starts balanced with zero phase.
    pub fn rectangular(n_modes: usize) -> Result<Self> {
        let mut layers = Vec::new();
        for pass in 0..n_modes {
            let mut m = pass % 2;
            while m + 1 < n_modes {
                layers.push(MeshLayer {
                    mode: m,
                    theta: FRAC_PI_2 / 2.0,
                    chi: 0.0,
                });
                m += 2;
            }
        }
        Self::new(n_modes, layers)
    }

    /// Rectangular layout with angles drawn uniformly from their ranges.
    pub fn random<R: rand::Rng + ?Sized>(n_modes: usize, rng: &mut R) -> Result<Self> {
        let mut mesh = Self::rectangular(n_modes)?;
        for layer in &mut mesh.layers {
            layer.theta = rng.gen_range(0.0..FRAC_PI_2);
            layer.chi = rng.gen_range(0.0..2.0 * PI);
        }
        Ok(mesh)
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn layers(&self) -> &[MeshLayer] {
        &self.layers
    }
}

impl TryFrom<MeshFile> for MeshParams {
    type Error = Error;

    fn try_from(file: MeshFile) -> Result<Self> {
        // Invert L = n (n - 1) / 2 to recover the mode count.
        let l = file.layers.len();
        let n = (1.0 + (1.0 + 8.0 * l as f64).sqrt()) / 2.0;
        let n = n.round() as usize;
        if n * (n - 1) / 2 != l {
            return Err(Error::DimensionMismatch {
                context: "mesh layer count",
                expected: n * (n - 1) / 2,
                found: l,
            });
        }
        Self::new(n, file.layers)
    }
}

impl From<MeshParams> for MeshFile {
    fn from(m: MeshParams) -> Self {
        MeshFile { layers: m.layers }
    }
}

/// Validated unitary mode-space scattering matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringMatrix {
    mat: DMatrix<Complex64>,
}

impl ScatteringMatrix {
    pub fn new(mat: DMatrix<Complex64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() || mat.nrows() == 0 {
            return Err(Error::DimensionMismatch {
                context: "scattering matrix shape",
                expected: mat.nrows().max(1),
                found: mat.ncols(),
            });
        }
        let gram = mat.adjoint() * &mat;
        let mut residual = 0.0f64;
        for r in 0..mat.nrows() {
            for c in 0..mat.ncols() {
                let expected = if r == c { Complex64::ONE } else { Complex64::ZERO };
                residual = residual.max((gram[(r, c)] - expected).norm());
            }
        }
        if residual > tol::UNITARITY {
            return Err(Error::NotUnitary { residual });
        }
        Ok(Self { mat })
    }

    pub fn identity(n_modes: usize) -> Self {
        Self {
            mat: DMatrix::identity(n_modes, n_modes),
        }
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }
}

/// Multiplies the couplers out in layer order: the first layer is the
/// stage the light meets first.
pub fn assemble_unitary(params: &MeshParams) -> Result<ScatteringMatrix> {
    let n = params.n_modes();
    let mut u: DMatrix<Complex64> = DMatrix::identity(n, n);
    for layer in params.layers() {
        let (c, s) = (layer.theta.cos(), layer.theta.sin());
        let phase = Complex64::from_polar(1.0, layer.chi);
        let mut t: DMatrix<Complex64> = DMatrix::identity(n, n);
        let m = layer.mode;
        t[(m, m)] = phase * c;
        t[(m, m + 1)] = Complex64::from(-s);
        t[(m + 1, m)] = phase * s;
        t[(m + 1, m + 1)] = Complex64::from(c);
        u = u * t;
    }
    ScatteringMatrix::new(u)
}

/// One measurement outcome: detector counts, its probability, and the
/// probability's gradient in the phases.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Outcome {
    pub counts: Vec<u32>,
    pub probability: f64,
    pub gradient: Vec<f64>,
}

/// Photon-counting statistics of the surviving component: every outcome
/// with the full photon number, plus the probability mass that left that
/// sector and carries no phase information.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutcomeDistribution {
    n_phases: usize,
    repetitions: u32,
    outcomes: Vec<Outcome>,
    residual_mass: f64,
}

impl OutcomeDistribution {
    pub fn new(
        n_phases: usize,
        repetitions: u32,
        outcomes: Vec<Outcome>,
        residual_mass: f64,
    ) -> Result<Self> {
        if n_phases < 1 {
            return Err(Error::ZeroCount { what: "n_phases" });
        }
        if repetitions < 1 {
            return Err(Error::ZeroCount {
                what: "repetitions",
            });
        }
        if !residual_mass.is_finite() || residual_mass < -tol::PROB_FLOOR {
            return Err(Error::NonFinite {
                what: "residual probability mass",
            });
        }
        let mut total = residual_mass;
        let mut gradient_sum = vec![0.0f64; n_phases];
        for outcome in &outcomes {
            if !outcome.probability.is_finite() || outcome.probability < -tol::PROB_FLOOR {
                return Err(Error::NonFinite {
                    what: "outcome probability",
                });
            }
            if outcome.gradient.len() != n_phases {
                return Err(Error::DimensionMismatch {
                    context: "outcome gradient length",
                    expected: n_phases,
                    found: outcome.gradient.len(),
                });
            }
            if outcome.gradient.iter().any(|g| !g.is_finite()) {
                return Err(Error::NonFinite {
                    what: "outcome gradient",
                });
            }
            total += outcome.probability;
            for (acc, g) in gradient_sum.iter_mut().zip(&outcome.gradient) {
                *acc += g;
            }
        }
        if (total - 1.0).abs() > tol::DISTRIBUTION_NORM {
            return Err(Error::TraceNotOne { trace: total });
        }
        if gradient_sum.iter().any(|g| g.abs() > tol::DISTRIBUTION_NORM) {
            return Err(Error::NonFinite {
                what: "gradient normalization",
            });
        }
        Ok(Self {
            n_phases,
            repetitions,
            outcomes,
            residual_mass,
        })
    }

    pub fn n_phases(&self) -> usize {
        self.n_phases
    }

    pub fn repetitions(&self) -> u32 {
        self.repetitions
    }

    pub fn outcomes(&self) -> &[Outcome] {
        &self.outcomes
    }

    /// Probability that loss removed at least one photon.
    pub fn residual_mass(&self) -> f64 {
        self.residual_mass
    }
}

/// Counting statistics of the probe behind the scattering matrix `u`.
///
/// The amplitude of detector pattern `l` is
/// `sqrt(N! / prod_k l_k!) sum_j c_j exp(i N phi_j) prod_k conj(u_jk)^(l_k)`
/// with `c_j = sqrt(p_j (1 - gamma_j)^N)`: rows of `u` index input modes,
/// columns index detectors.
pub fn outcome_distribution(
    s: &Scenario,
    p: &WeightVector,
    u: &ScatteringMatrix,
) -> Result<OutcomeDistribution> {
    s.validate()?;
    let modes = s.n_modes();
    if p.len() != modes {
        return Err(Error::DimensionMismatch {
            context: "weight vector",
            expected: modes,
            found: p.len(),
        });
    }
    if u.dim() != modes {
        return Err(Error::DimensionMismatch {
            context: "scattering matrix",
            expected: modes,
            found: u.dim(),
        });
    }
    let n = s.n_photons();
    let nf = n as f64;

    let sources: Vec<Complex64> = (0..modes)
        .map(|j| {
            let w = p.values()[j] * (1.0 - s.loss().rates()[j]).powi(n as i32);
            let phase = if j == 0 {
                0.0
            } else {
                nf * s.phases().values()[j - 1]
            };
            Complex64::from_polar(w.sqrt(), phase)
        })
        .collect();
    let survival: f64 = sources.iter().map(|c| c.norm_sqr()).sum();

    let basis = FockBasis::new(modes, n)?;
    let mut outcomes = Vec::new();
    for i in 0..basis.dim() {
        if basis.total(i) != n {
            continue;
        }
        let counts = basis.state(i).to_vec();
        let m_l = multinomial_sqrt(n, &counts);
        let terms: Vec<Complex64> = (0..modes)
            .map(|j| {
                let mut prod = Complex64::ONE;
                for (k, &lk) in counts.iter().enumerate() {
                    if lk > 0 {
                        prod *= u.matrix()[(j, k)].conj().powu(lk);
                    }
                }
                sources[j] * prod
            })
            .collect();
        let amplitude = Complex64::from(m_l) * terms.iter().sum::<Complex64>();
        let probability = amplitude.norm_sqr();
        let gradient: Vec<f64> = (0..s.n_phases())
            .map(|a| {
                let d_amp = Complex64::new(0.0, nf) * Complex64::from(m_l) * terms[a + 1];
                2.0 * (amplitude.conj() * d_amp).re
            })
            .collect();
        outcomes.push(Outcome {
            counts,
            probability,
            gradient,
        });
    }
    OutcomeDistribution::new(s.n_phases(), s.repetitions(), outcomes, 1.0 - survival)
}

/// Fisher information of the counting statistics, scaled by repetitions.
/// Outcomes at or below [`tol::PROB_FLOOR`] carry no usable information
/// and are skipped.
pub fn classical_fim(dist: &OutcomeDistribution) -> Result<FisherMatrix> {
    let d = dist.n_phases();
    let mut f = DMatrix::zeros(d, d);
    for outcome in dist.outcomes() {
        if outcome.probability <= tol::PROB_FLOOR {
            continue;
        }
        for a in 0..d {
            for b in a..d {
                let v = outcome.gradient[a] * outcome.gradient[b] / outcome.probability;
                f[(a, b)] += v;
                if a != b {
                    f[(b, a)] += v;
                }
            }
        }
    }
    f *= dist.repetitions() as f64;
    FisherMatrix::new(FisherKind::Classical, f)
}

/// Total-variance bound of the counting measurement itself.
pub fn crb(dist: &OutcomeDistribution) -> Result<f64> {
    classical_fim(dist)?.trace_inverse()
}
