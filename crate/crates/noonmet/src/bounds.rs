//! Closed-form precision bounds for the lossy NOON probe and the coherent
//! benchmark, together with the weight choices that attain them.
//!
//! Everything here is O(d) arithmetic on survival factors; the dense
//! reference computations live in [`crate::fockspace`].

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{FisherKind, FisherMatrix, LossProfile, Scenario, WeightVector};
use crate::tol;

/// Input-weight selection for the NOON probe.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightScheme {
    /// Loss-adapted weights minimizing the quantum bound.
    Optimal,
    /// Lossless-case weights `(sqrt(d), 1, .., 1) / (sqrt(d) + d)`.
    Humphreys,
    /// Equal weight on every mode.
    Balanced,
    Custom(WeightVector),
}

impl WeightScheme {
    pub fn resolve(&self, s: &Scenario) -> Result<WeightVector> {
        match self {
            WeightScheme::Optimal => optimal_weights(s),
            WeightScheme::Humphreys => humphreys_weights(s.n_phases()),
            WeightScheme::Balanced => WeightVector::uniform(s.n_modes()),
            WeightScheme::Custom(w) => {
                if w.len() != s.n_modes() {
                    return Err(Error::DimensionMismatch {
                        context: "custom weights",
                        expected: s.n_modes(),
                        found: w.len(),
                    });
                }
                Ok(w.clone())
            }
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            WeightScheme::Optimal => "optimal",
            WeightScheme::Humphreys => "humphreys",
            WeightScheme::Balanced => "balanced",
            WeightScheme::Custom(_) => "custom",
        }
    }
}

/// Quantum bound, classical benchmark, and their gap for one scenario.
#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub qcrb_noon: f64,
    pub sql_coherent: f64,
    /// `1 - qcrb_noon / sql_coherent`; positive when the probe beats
    /// coherent light.
    pub advantage: f64,
    pub weights_used: WeightVector,
}

/// Which reference-mode loss a critical-loss scan assumes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReferenceLoss {
    /// Reference mode held at this rate while signal loss varies.
    Fixed(f64),
    /// Reference mode loses exactly as much as the signal modes.
    EqualToSignal,
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

/// Quantum Fisher information matrix of the lossy NOON probe for weights
/// `p`, scaled by the repetition count. Phase-independent.
pub fn qfim_noon(s: &Scenario, p: &WeightVector) -> Result<FisherMatrix> {
    s.validate()?;
    let w = survival_weights(s, p)?;
    let total: f64 = w.iter().sum();
    if total <= 0.0 {
        return Err(Error::SingularModel);
    }
    let d = s.n_phases();
    let scale = 4.0 * (s.n_photons() as f64).powi(2) * s.repetitions() as f64;
    let mut f = DMatrix::zeros(d, d);
    for a in 0..d {
        for b in 0..d {
            let delta = if a == b { w[a + 1] } else { 0.0 };
            f[(a, b)] = scale * (delta - w[a + 1] * w[b + 1] / total);
        }
    }
    FisherMatrix::new(FisherKind::Quantum, f)
}

/// Total-variance quantum bound `d / w_0 + sum_j 1 / w_j` over `4 N^2`,
/// with `w_j = p_j (1 - gamma_j)^N`, per repetition batch.
pub fn qcrb_noon(s: &Scenario, p: &WeightVector) -> Result<f64> {
    s.validate()?;
    let w = survival_weights(s, p)?;
    for (mode, &wj) in w.iter().enumerate() {
        if wj <= 0.0 {
            return Err(Error::UnidentifiablePhase { mode });
        }
    }
    let d = s.n_phases() as f64;
    let scale = 4.0 * (s.n_photons() as f64).powi(2) * s.repetitions() as f64;
    let sum: f64 = d / w[0] + w[1..].iter().map(|&wj| 1.0 / wj).sum::<f64>();
    Ok(sum / scale)
}

/// Lossless-optimal weights `(sqrt(d), 1, .., 1) / (sqrt(d) + d)`.
pub fn humphreys_weights(n_phases: usize) -> Result<WeightVector> {
    if n_phases < 1 {
        return Err(Error::ZeroCount { what: "n_phases" });
    }
    let root_d = (n_phases as f64).sqrt();
    let mut raw = vec![1.0; n_phases + 1];
    raw[0] = root_d;
    WeightVector::from_raw(raw)
}

/// Weights minimizing [`qcrb_noon`] for the scenario's loss profile:
/// `p_0 : p_j = sqrt(d) : ((1 - gamma_0) / (1 - gamma_j))^(N/2)`.
pub fn optimal_weights(s: &Scenario) -> Result<WeightVector> {
    s.validate()?;
    weights_for_exponent(s.loss(), s.n_phases(), s.n_photons() as f64)
}

/// Weights minimizing the coherent benchmark; same shape as
/// [`optimal_weights`] with the survival exponent 1 instead of `N`.
pub fn optimal_coherent_weights(s: &Scenario) -> Result<WeightVector> {
    s.validate()?;
    weights_for_exponent(s.loss(), s.n_phases(), 1.0)
}

fn weights_for_exponent(loss: &LossProfile, n_phases: usize, exponent: f64) -> Result<WeightVector> {
    for (mode, &g) in loss.rates().iter().enumerate() {
        if g >= 1.0 {
            return Err(Error::DegenerateEnvironment { mode });
        }
    }
    let g0 = loss.reference();
    let mut raw = Vec::with_capacity(n_phases + 1);
    raw.push((n_phases as f64).sqrt());
    for &gj in loss.signal() {
        raw.push(((1.0 - g0) / (1.0 - gj)).powf(0.5 * exponent));
    }
    WeightVector::from_raw(raw)
}

/// Best total variance achievable with coherent light and photon counting,
/// at explicit mode weights `q`, or at the optimal `q` when `None`.
pub fn sql_coherent(s: &Scenario, q: Option<&WeightVector>) -> Result<f64> {
    s.validate()?;
    let scale = 4.0 * s.n_photons() as f64 * s.repetitions() as f64;
    let d = s.n_phases() as f64;
    match q {
        Some(q) => {
            if q.len() != s.n_modes() {
                return Err(Error::DimensionMismatch {
                    context: "coherent weights",
                    expected: s.n_modes(),
                    found: q.len(),
                });
            }
            let mut sum = 0.0;
            for (mode, (&qj, &gj)) in q.values().iter().zip(s.loss().rates()).enumerate() {
                let surviving = qj * (1.0 - gj);
                if surviving <= 0.0 {
                    return Err(Error::UnidentifiablePhase { mode });
                }
                sum += if mode == 0 { d / surviving } else { 1.0 / surviving };
            }
            Ok(sum / scale)
        }
        None => {
            for (mode, &gj) in s.loss().rates().iter().enumerate() {
                if gj >= 1.0 {
                    return Err(Error::UnidentifiablePhase { mode });
                }
            }
            let g0 = s.loss().reference();
            let mut root = (d / (1.0 - g0)).sqrt();
            for &gj in s.loss().signal() {
                root += 1.0 / (1.0 - gj).sqrt();
            }
            Ok(root * root / scale)
        }
    }
}

/// Bound report at the loss-adapted optimal weights.
pub fn quantum_advantage(s: &Scenario) -> Result<BoundReport> {
    quantum_advantage_for_scheme(s, &WeightScheme::Optimal)
}

/// Bound report with the NOON probe weighted by `scheme`; the coherent
/// benchmark always uses its own optimal weights.
pub fn quantum_advantage_for_scheme(s: &Scenario, scheme: &WeightScheme) -> Result<BoundReport> {
    let weights = scheme.resolve(s)?;
    let qcrb = qcrb_noon(s, &weights)?;
    let sql = sql_coherent(s, None)?;
    Ok(BoundReport {
        qcrb_noon: qcrb,
        sql_coherent: sql,
        advantage: 1.0 - qcrb / sql,
        weights_used: weights,
    })
}

/// Signal loss rate at which the quantum advantage vanishes, with the
/// reference mode fixed at `gamma_ref` and optimal weights.
pub fn critical_loss(n_photons: u32, n_phases: usize, gamma_ref: f64) -> Result<f64> {
    critical_loss_for_scheme(
        n_photons,
        n_phases,
        ReferenceLoss::Fixed(gamma_ref),
        &WeightScheme::Optimal,
    )
}

/// Signal loss rate at which `advantage(gamma)` crosses zero for the given
/// weight scheme. Returns 0 when there is no advantage even lossless, and
/// the top of the search bracket when the advantage never turns negative.
pub fn critical_loss_for_scheme(
    n_photons: u32,
    n_phases: usize,
    reference: ReferenceLoss,
    scheme: &WeightScheme,
) -> Result<f64> {
    if n_photons < 1 {
        return Err(Error::ZeroCount { what: "n_photons" });
    }
    if n_phases < 1 {
        return Err(Error::ZeroCount { what: "n_phases" });
    }
    if let ReferenceLoss::Fixed(g) = reference {
        if !g.is_finite() {
            return Err(Error::NonFinite { what: "loss rate" });
        }
        if !(0.0..1.0).contains(&g) {
            return Err(Error::LossOutOfRange {
                mode: 0,
                value: g,
            });
        }
    }

    let advantage = |gamma: f64| -> Result<f64> {
        let g0 = match reference {
            ReferenceLoss::Fixed(g) => g,
            ReferenceLoss::EqualToSignal => gamma,
        };
        let mut rates = vec![gamma; n_phases + 1];
        rates[0] = g0;
        let s = Scenario::with_generic_phases(n_photons, n_phases, LossProfile::new(rates)?)?;
        Ok(quantum_advantage_for_scheme(&s, scheme)?.advantage)
    };

    // Locate the sign change on a coarse grid first; the advantage is
    // expected to fall monotonically with loss, and the scan keeps the
    // answer honest if a profile ever breaks that expectation.
    let top = tol::LOSS_BRACKET_TOP;
    let grid_points = 100usize;
    if advantage(0.0)? < 0.0 {
        return Ok(0.0);
    }
    let mut prev_gamma = 0.0;
    let mut bracket = None;
    for i in 1..=grid_points {
        let gamma = top * i as f64 / grid_points as f64;
        if advantage(gamma)? < 0.0 {
            bracket = Some((prev_gamma, gamma));
            break;
        }
        prev_gamma = gamma;
    }
    let (mut lo, mut hi) = match bracket {
        Some(b) => b,
        None => return Ok(top),
    };
    while hi - lo > tol::BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        if advantage(mid)? >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::PhaseVector;
    use approx::assert_abs_diff_eq;

    fn scenario(n: u32, rates: &[f64]) -> Scenario {
        Scenario::with_generic_phases(n, rates.len() - 1, LossProfile::new(rates.to_vec()).unwrap())
            .unwrap()
    }

    #[test]
    fn single_photon_lossless_qfim_is_one() {
        let s = scenario(1, &[0.0, 0.0]);
        let p = WeightVector::new(vec![0.5, 0.5]).unwrap();
        let f = qfim_noon(&s, &p).unwrap();
        assert_abs_diff_eq!(f.entry(0, 0), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn single_photon_equal_loss_qfim_shrinks_linearly() {
        for &g in &[0.0, 0.1, 0.3, 0.7] {
            let s = scenario(1, &[g, g]);
            let p = WeightVector::new(vec![0.5, 0.5]).unwrap();
            let f = qfim_noon(&s, &p).unwrap();
            assert_abs_diff_eq!(f.entry(0, 0), 1.0 - g, epsilon = 1e-14);
        }
    }

    #[test]
    fn humphreys_lossless_trace_inverse() {
        let s = scenario(2, &[0.0, 0.0, 0.0]);
        let p = humphreys_weights(2).unwrap();
        let f = qfim_noon(&s, &p).unwrap();
        let expected = (2.0f64.sqrt() + 2.0).powi(2) / 16.0;
        assert_abs_diff_eq!(f.trace_inverse().unwrap(), expected, epsilon = 1e-12);
        assert_abs_diff_eq!(qcrb_noon(&s, &p).unwrap(), expected, epsilon = 1e-12);
    }

    #[test]
    fn lossy_reference_qcrb_spot_value() {
        let s = scenario(2, &[0.5, 0.0, 0.0]);
        let p = optimal_weights(&s).unwrap();
        let expected = (2.0f64.sqrt() + 1.0).powi(2) / 4.0;
        assert_abs_diff_eq!(qcrb_noon(&s, &p).unwrap(), expected, epsilon = 1e-12);
    }

    #[test]
    fn balanced_lossless_qcrb() {
        let s = scenario(2, &[0.0, 0.0, 0.0]);
        let p = WeightVector::uniform(3).unwrap();
        assert_abs_diff_eq!(qcrb_noon(&s, &p).unwrap(), 0.75, epsilon = 1e-14);
    }

    #[test]
    fn optimal_weights_equal_loss_match_humphreys() {
        let s = scenario(2, &[0.3, 0.3, 0.3]);
        let opt = optimal_weights(&s).unwrap();
        let hum = humphreys_weights(2).unwrap();
        for (a, b) in opt.values().iter().zip(hum.values()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(opt.values()[0], 0.41421356, epsilon = 1e-7);
        assert_abs_diff_eq!(opt.values()[1], 0.29289322, epsilon = 1e-7);
    }

    #[test]
    fn optimal_weights_shift_toward_lossy_reference() {
        let s = scenario(2, &[0.5, 0.0, 0.0]);
        let w = optimal_weights(&s).unwrap();
        assert_abs_diff_eq!(w.values()[0], 0.58578644, epsilon = 1e-7);
        assert_abs_diff_eq!(w.values()[1], 0.20710678, epsilon = 1e-7);
        assert_abs_diff_eq!(w.values()[2], 0.20710678, epsilon = 1e-7);
    }

    #[test]
    fn coherent_benchmark_spot_values() {
        let lossless = scenario(2, &[0.0, 0.0, 0.0]);
        let expected = (2.0f64.sqrt() + 2.0).powi(2) / 8.0;
        assert_abs_diff_eq!(sql_coherent(&lossless, None).unwrap(), expected, epsilon = 1e-12);

        let lossy_ref = scenario(2, &[0.5, 0.0, 0.0]);
        assert_abs_diff_eq!(sql_coherent(&lossy_ref, None).unwrap(), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn explicit_coherent_weights_match_optimal_at_optimum() {
        let s = scenario(3, &[0.4, 0.1, 0.2, 0.0]);
        let q = optimal_coherent_weights(&s).unwrap();
        assert_abs_diff_eq!(
            sql_coherent(&s, Some(&q)).unwrap(),
            sql_coherent(&s, None).unwrap(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn advantage_spot_values() {
        let r = quantum_advantage(&scenario(2, &[0.0, 0.0, 0.0])).unwrap();
        assert_abs_diff_eq!(r.advantage, 0.5, epsilon = 1e-12);

        let r = quantum_advantage(&scenario(2, &[0.5, 0.5, 0.5])).unwrap();
        assert_abs_diff_eq!(r.advantage, 0.0, epsilon = 1e-12);

        let r = quantum_advantage(&scenario(2, &[0.5, 0.0, 0.0])).unwrap();
        assert_abs_diff_eq!(r.advantage, 1.0 - (2.0f64.sqrt() + 1.0).powi(2) / 8.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.advantage, 1.0 - r.qcrb_noon / r.sql_coherent, epsilon = 1e-15);
    }

    #[test]
    fn repetitions_scale_both_bounds() {
        let loss = LossProfile::new(vec![0.2, 0.1, 0.3]).unwrap();
        let one = Scenario::new(2, 2, loss.clone(), PhaseVector::generic(2), 1).unwrap();
        let four = Scenario::new(2, 2, loss, PhaseVector::generic(2), 4).unwrap();
        let p = optimal_weights(&one).unwrap();
        assert_abs_diff_eq!(
            qcrb_noon(&four, &p).unwrap(),
            qcrb_noon(&one, &p).unwrap() / 4.0,
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(
            sql_coherent(&four, None).unwrap(),
            sql_coherent(&one, None).unwrap() / 4.0,
            epsilon = 1e-14
        );
        let f1 = qfim_noon(&one, &p).unwrap();
        let f4 = qfim_noon(&four, &p).unwrap();
        assert_abs_diff_eq!(f4.entry(0, 0), 4.0 * f1.entry(0, 0), epsilon = 1e-12);
    }

    #[test]
    fn failure_modes_are_loud() {
        let s = scenario(2, &[0.0, 1.0, 0.0]);
        let p = WeightVector::uniform(3).unwrap();
        assert!(matches!(
            qcrb_noon(&s, &p),
            Err(Error::UnidentifiablePhase { mode: 1 })
        ));
        assert!(matches!(
            optimal_weights(&s),
            Err(Error::DegenerateEnvironment { mode: 1 })
        ));

        let zero_weight = WeightVector::new(vec![0.0, 0.5, 0.5]).unwrap();
        let lossless = scenario(2, &[0.0, 0.0, 0.0]);
        assert!(matches!(
            qcrb_noon(&lossless, &zero_weight),
            Err(Error::UnidentifiablePhase { mode: 0 })
        ));

        let all_lost = scenario(2, &[1.0, 1.0, 1.0]);
        assert!(matches!(qfim_noon(&all_lost, &p), Err(Error::SingularModel)));
    }

    #[test]
    fn critical_loss_equal_mode_root() {
        let g = critical_loss_for_scheme(2, 1, ReferenceLoss::EqualToSignal, &WeightScheme::Optimal)
            .unwrap();
        assert_abs_diff_eq!(g, 0.5, epsilon = 1e-9);
        // With equal loss everywhere the threshold is d-independent.
        let g5 = critical_loss_for_scheme(2, 5, ReferenceLoss::EqualToSignal, &WeightScheme::Optimal)
            .unwrap();
        assert_abs_diff_eq!(g5, 0.5, epsilon = 1e-9);
        // N = 3: (1 - g)^2 = 1/3.
        let g3 = critical_loss_for_scheme(3, 2, ReferenceLoss::EqualToSignal, &WeightScheme::Optimal)
            .unwrap();
        assert_abs_diff_eq!(g3, 1.0 - 3.0f64.powf(-0.5), epsilon = 1e-9);
    }

    #[test]
    fn critical_loss_zero_when_no_advantage() {
        // A hot reference mode at N = 6 erases the advantage before any
        // signal loss is applied.
        let g = critical_loss(6, 2, 0.5).unwrap();
        assert_abs_diff_eq!(g, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn critical_loss_sits_on_the_zero_crossing() {
        let n = 2;
        let d = 3;
        let gref = 0.5;
        let g = critical_loss(n, d, gref).unwrap();
        assert!(g > 0.0 && g < 1.0);
        let report = |gamma: f64| {
            let mut rates = vec![gamma; d + 1];
            rates[0] = gref;
            quantum_advantage(
                &Scenario::with_generic_phases(n as u32, d, LossProfile::new(rates).unwrap())
                    .unwrap(),
            )
            .unwrap()
            .advantage
        };
        assert!(report(g - 1e-6) > 0.0);
        assert!(report(g + 1e-6) < 0.0);
    }
}
