//! Problem-instance value types shared by every other module.
//!
//! A [`Scenario`] fixes one estimation problem: an `N`-photon probe over
//! `d + 1` modes, `d` relative phases (mode 0 is the reference arm), one
//! loss rate per mode, and a repetition count. Every type here validates
//! on construction and is immutable afterwards.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tol;

/// Per-mode loss rates `gamma_j` with `0 <= gamma_j <= 1`. Index 0 is the
/// reference mode; indices `1..=d` are the signal modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LossProfile {
    rates: Vec<f64>,
}

impl LossProfile {
    pub fn new(rates: Vec<f64>) -> Result<Self> {
        if rates.is_empty() {
            return Err(Error::ZeroCount {
                what: "loss profile length",
            });
        }
        for (mode, &g) in rates.iter().enumerate() {
            if !g.is_finite() {
                return Err(Error::NonFinite { what: "loss rate" });
            }
            if !(0.0..=1.0).contains(&g) {
                return Err(Error::LossOutOfRange { mode, value: g });
            }
        }
        Ok(Self { rates })
    }

    /// Equal loss on all `n_modes` modes.
    pub fn uniform(n_modes: usize, gamma: f64) -> Result<Self> {
        Self::new(vec![gamma; n_modes])
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    /// Loss rate of the reference mode.
    pub fn reference(&self) -> f64 {
        self.rates[0]
    }

    /// Loss rates of the signal modes, in phase order.
    pub fn signal(&self) -> &[f64] {
        &self.rates[1..]
    }

    pub fn n_modes(&self) -> usize {
        self.rates.len()
    }
}

/// True values of the `d` relative phases, in radians. No wrapping is
/// applied; callers choose the branch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PhaseVector {
    values: Vec<f64>,
}

impl PhaseVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::ZeroCount {
                what: "phase count",
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "phase" });
        }
        Ok(Self { values })
    }

    /// Generic evaluation point `phi_j = 0.3 + 0.2 j` (j = 1..=d), spaced so
    /// no pair of phases coincides and none sits on a symmetry point.
    pub fn generic(n_phases: usize) -> Self {
        Self {
            values: (1..=n_phases).map(|j| 0.3 + 0.2 * j as f64).collect(),
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Input-state weights `p_j >= 0` over the `d + 1` modes, summing to 1
/// within [`tol::WEIGHT_SUM`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "Vec<f64>", try_from = "Vec<f64>")]
pub struct WeightVector {
    p: Vec<f64>,
}

impl WeightVector {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::ZeroCount {
                what: "weight count",
            });
        }
        for (index, &w) in p.iter().enumerate() {
            if !w.is_finite() {
                return Err(Error::NonFinite { what: "weight" });
            }
            if w < 0.0 {
                return Err(Error::NegativeWeight { index, value: w });
            }
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > tol::WEIGHT_SUM {
            return Err(Error::WeightSumInvalid { sum });
        }
        Ok(Self { p })
    }

    /// Normalizes nonnegative raw weights to the simplex.
    pub fn from_raw(raw: Vec<f64>) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::ZeroCount {
                what: "weight count",
            });
        }
        for (index, &w) in raw.iter().enumerate() {
            if !w.is_finite() {
                return Err(Error::NonFinite { what: "weight" });
            }
            if w < 0.0 {
                return Err(Error::NegativeWeight { index, value: w });
            }
        }
        let sum: f64 = raw.iter().sum();
        if sum <= 0.0 {
            return Err(Error::WeightSumInvalid { sum });
        }
        Ok(Self {
            p: raw.into_iter().map(|w| w / sum).collect(),
        })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        Self::from_raw(vec![1.0; n])
    }

    pub fn values(&self) -> &[f64] {
        &self.p
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }
}

impl TryFrom<Vec<f64>> for WeightVector {
    type Error = Error;

    fn try_from(p: Vec<f64>) -> Result<Self> {
        Self::new(p)
    }
}

impl From<WeightVector> for Vec<f64> {
    fn from(w: WeightVector) -> Self {
        w.p
    }
}

fn default_repetitions() -> u32 {
    1
}

#[derive(Serialize, Deserialize)]
struct RawScenario {
    n_photons: u32,
    n_phases: usize,
    gamma: Vec<f64>,
    phases: Vec<f64>,
    #[serde(default = "default_repetitions")]
    repetitions: u32,
}

/// One fully specified estimation problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawScenario", into = "RawScenario")]
pub struct Scenario {
    n_photons: u32,
    n_phases: usize,
    loss: LossProfile,
    phases: PhaseVector,
    repetitions: u32,
}

impl Scenario {
    pub fn new(
        n_photons: u32,
        n_phases: usize,
        loss: LossProfile,
        phases: PhaseVector,
        repetitions: u32,
    ) -> Result<Self> {
        let s = Self {
            n_photons,
            n_phases,
            loss,
            phases,
            repetitions,
        };
        s.validate()?;
        Ok(s)
    }

    /// Same scenario with the generic evaluation phases.
    pub fn with_generic_phases(
        n_photons: u32,
        n_phases: usize,
        loss: LossProfile,
    ) -> Result<Self> {
        Self::new(n_photons, n_phases, loss, PhaseVector::generic(n_phases), 1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_photons < 1 {
            return Err(Error::ZeroCount { what: "n_photons" });
        }
        if self.n_phases < 1 {
            return Err(Error::ZeroCount { what: "n_phases" });
        }
        if self.repetitions < 1 {
            return Err(Error::ZeroCount {
                what: "repetitions",
            });
        }
        if self.loss.n_modes() != self.n_phases + 1 {
            return Err(Error::DimensionMismatch {
                context: "loss profile",
                expected: self.n_phases + 1,
                found: self.loss.n_modes(),
            });
        }
        if self.phases.len() != self.n_phases {
            return Err(Error::DimensionMismatch {
                context: "phase vector",
                expected: self.n_phases,
                found: self.phases.len(),
            });
        }
        Ok(())
    }

    pub fn n_photons(&self) -> u32 {
        self.n_photons
    }

    pub fn n_phases(&self) -> usize {
        self.n_phases
    }

    /// Mode count `d + 1` including the reference mode.
    pub fn n_modes(&self) -> usize {
        self.n_phases + 1
    }

    pub fn loss(&self) -> &LossProfile {
        &self.loss
    }

    pub fn phases(&self) -> &PhaseVector {
        &self.phases
    }

    pub fn repetitions(&self) -> u32 {
        self.repetitions
    }
}

impl TryFrom<RawScenario> for Scenario {
    type Error = Error;

    fn try_from(raw: RawScenario) -> Result<Self> {
        Self::new(
            raw.n_photons,
            raw.n_phases,
            LossProfile::new(raw.gamma)?,
            PhaseVector::new(raw.phases)?,
            raw.repetitions,
        )
    }
}

impl From<Scenario> for RawScenario {
    fn from(s: Scenario) -> Self {
        RawScenario {
            n_photons: s.n_photons,
            n_phases: s.n_phases,
            gamma: s.loss.rates,
            phases: s.phases.values,
            repetitions: s.repetitions,
        }
    }
}

/// Checks every structural invariant of a scenario. Equivalent to the
/// checks run on construction; exposed for callers that deserialize or
/// assemble scenarios field by field.
pub fn validate_scenario(s: &Scenario) -> Result<()> {
    s.validate()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FisherKind {
    Quantum,
    Classical,
}

/// Symmetric positive-semidefinite information matrix over the `d` phases.
#[derive(Debug, Clone, PartialEq)]
pub struct FisherMatrix {
    kind: FisherKind,
    mat: DMatrix<f64>,
}

impl FisherMatrix {
    pub fn new(kind: FisherKind, mat: DMatrix<f64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() || mat.nrows() == 0 {
            return Err(Error::DimensionMismatch {
                context: "Fisher matrix shape",
                expected: mat.nrows().max(1),
                found: mat.ncols(),
            });
        }
        if mat.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "Fisher matrix entry",
            });
        }
        let mut worst = 0.0f64;
        for a in 0..mat.nrows() {
            for b in (a + 1)..mat.ncols() {
                worst = worst.max((mat[(a, b)] - mat[(b, a)]).abs());
            }
        }
        if worst > tol::FISHER_SYMMETRY {
            return Err(Error::NotSymmetric { residual: worst });
        }
        let sym = 0.5 * (&mat + mat.transpose());
        let eigen = sym.clone().symmetric_eigen();
        if let Some(&min) = eigen
            .eigenvalues
            .iter()
            .min_by(|a, b| a.total_cmp(b))
        {
            if min < tol::FISHER_EIGEN_FLOOR {
                return Err(Error::NotPositiveSemidefinite { eigenvalue: min });
            }
        }
        Ok(Self { kind, mat: sym })
    }

    pub fn kind(&self) -> FisherKind {
        self.kind
    }

    /// Number of phases the matrix refers to.
    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn entry(&self, a: usize, b: usize) -> f64 {
        self.mat[(a, b)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }

    /// Largest-over-smallest eigenvalue magnitude; infinite when the
    /// smallest eigenvalue is zero.
    pub fn condition(&self) -> f64 {
        let eig = self.mat.clone().symmetric_eigen().eigenvalues;
        let max = eig.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let min = eig.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
        if min == 0.0 {
            f64::INFINITY
        } else {
            max / min
        }
    }

    /// Trace of the matrix inverse, the scalar lower bound on total
    /// estimation variance. Fails when the matrix cannot be inverted
    /// reliably, i.e. some phase is unidentified.
    pub fn trace_inverse(&self) -> Result<f64> {
        let eig = self.mat.clone().symmetric_eigen().eigenvalues;
        let max = eig.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let min = eig.iter().fold(f64::INFINITY, |m, v| m.min(*v));
        if !(min > 0.0) || max / min > tol::FIM_CONDITION_LIMIT {
            return Err(Error::SingularFisherMatrix {
                condition: if min > 0.0 { max / min } else { f64::INFINITY },
            });
        }
        Ok(eig.iter().map(|v| 1.0 / v).sum())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenario_rejects_bad_shapes() {
        let loss = LossProfile::new(vec![0.1, 0.2]).unwrap();
        let phases = PhaseVector::new(vec![0.5]).unwrap();
        assert!(Scenario::new(1, 1, loss.clone(), phases.clone(), 1).is_ok());
        assert!(Scenario::new(0, 1, loss.clone(), phases.clone(), 1).is_err());
        let too_long = LossProfile::new(vec![0.1, 0.2, 0.3]).unwrap();
        assert!(Scenario::new(1, 1, too_long, phases.clone(), 1).is_err());
        let two_phases = PhaseVector::new(vec![0.5, 0.7]).unwrap();
        assert!(Scenario::new(1, 1, loss, two_phases, 1).is_err());
    }

    #[test]
    fn loss_profile_bounds() {
        assert!(LossProfile::new(vec![0.0, 1.0]).is_ok());
        assert!(LossProfile::new(vec![-0.1, 0.0]).is_err());
        assert!(LossProfile::new(vec![0.0, 1.1]).is_err());
        assert!(LossProfile::new(vec![f64::NAN, 0.0]).is_err());
    }

    #[test]
    fn weights_validate_simplex() {
        assert!(WeightVector::new(vec![0.5, 0.5]).is_ok());
        assert!(WeightVector::new(vec![0.5, 0.6]).is_err());
        assert!(WeightVector::new(vec![-0.1, 1.1]).is_err());
        let w = WeightVector::from_raw(vec![2.0, 6.0]).unwrap();
        assert!((w.values()[0] - 0.25).abs() < 1e-15);
        assert!((w.values().iter().sum::<f64>() - 1.0).abs() <= tol::WEIGHT_SUM);
    }

    #[test]
    fn scenario_round_trips_through_json() {
        let s = Scenario::new(
            2,
            3,
            LossProfile::new(vec![0.5, 0.0, 0.1, 0.2]).unwrap(),
            PhaseVector::new(vec![0.5, 0.7, 0.9]).unwrap(),
            4,
        )
        .unwrap();
        let text = serde_json::to_string(&s).unwrap();
        assert!(text.contains("\"gamma\""));
        let back: Scenario = serde_json::from_str(&text).unwrap();
        assert_eq!(s, back);
    }

    #[test]
    fn scenario_json_defaults_repetitions() {
        let s: Scenario = serde_json::from_str(
            r#"{"n_photons":2,"n_phases":1,"gamma":[0.0,0.0],"phases":[0.4]}"#,
        )
        .unwrap();
        assert_eq!(s.repetitions(), 1);
    }

    #[test]
    fn scenario_json_rejects_invalid() {
        let bad: std::result::Result<Scenario, _> = serde_json::from_str(
            r#"{"n_photons":2,"n_phases":1,"gamma":[0.0,1.5],"phases":[0.4]}"#,
        );
        assert!(bad.is_err());
    }

    #[test]
    fn fisher_matrix_validation() {
        let good = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let f = FisherMatrix::new(FisherKind::Quantum, good).unwrap();
        assert_eq!(f.dim(), 2);
        let asym = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.2, 1.0]);
        assert!(FisherMatrix::new(FisherKind::Quantum, asym).is_err());
        let indefinite = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(FisherMatrix::new(FisherKind::Quantum, indefinite).is_err());
    }

    #[test]
    fn trace_inverse_matches_hand_value() {
        let f = FisherMatrix::new(
            FisherKind::Quantum,
            DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 4.0]),
        )
        .unwrap();
        assert!((f.trace_inverse().unwrap() - 0.75).abs() < 1e-14);
    }

    #[test]
    fn singular_fisher_reports_error() {
        let f = FisherMatrix::new(
            FisherKind::Classical,
            DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]),
        )
        .unwrap();
        assert!(matches!(
            f.trace_inverse(),
            Err(Error::SingularFisherMatrix { .. })
        ));
    }

    #[test]
    fn generic_phases_are_distinct() {
        let p = PhaseVector::generic(4);
        assert_eq!(p.values(), &[0.5, 0.7, 0.9, 1.1]);
    }
}
