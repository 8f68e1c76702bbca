//! Systematic cross-validation sweep: closed-form information matrices
//! against the eigendecomposition route, logarithmic-derivative residuals,
//! and attainability witnesses, over a loss grid and random draws.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bounds;
use crate::combin::binomial_u128;
use crate::error::{Error, Result};
use crate::fockspace;
use crate::model::{FisherMatrix, LossProfile, Scenario, WeightVector};
use crate::tol;

/// Work-unit ceiling for one verification run, measured in (cases) x
/// (state dimension cubed). Keeps accidental `verify` invocations from
/// running for hours.
pub const WORK_BUDGET: u128 = 10_000_000_000;

/// Sweep ranges. The grid part scans equal-spaced loss rates in
/// `[0, 0.8]` over all modes at adapted weights; the random part draws
/// loss in `[0, 0.9)` and weights from a flat simplex density.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyOptions {
    pub max_photons: u32,
    pub max_phases: usize,
    pub grid: usize,
    pub random_weights: usize,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            max_photons: 3,
            max_phases: 3,
            grid: 5,
            random_weights: 50,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct VerifyReport {
    pub qfim_cases: usize,
    pub worst_qfim_residual: f64,
    pub worst_qfim_scenario: Option<String>,
    pub sld_cases: usize,
    pub worst_sld_residual: f64,
    pub dual_route_cases: usize,
    pub worst_dual_route_residual: f64,
    pub attainability_cases: usize,
    pub worst_commutator: f64,
    pub failures: Vec<String>,
    pub passed: bool,
}

fn estimated_work(opts: &VerifyOptions) -> u128 {
    let mut total: u128 = 0;
    for n in 1..=opts.max_photons {
        for d in 1..=opts.max_phases {
            let dim = binomial_u128(n as u64 + d as u64 + 1, d as u64 + 1);
            let cases = (opts.grid as u128)
                .saturating_pow(d as u32 + 1)
                .saturating_add(opts.random_weights as u128);
            total = total.saturating_add(cases.saturating_mul(dim.saturating_pow(3)));
        }
    }
    total
}

fn entrywise_residual(a: &FisherMatrix, b: &FisherMatrix) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..a.dim() {
        for j in 0..a.dim() {
            worst = worst.max((a.entry(i, j) - b.entry(i, j)).abs());
        }
    }
    worst
}

fn describe(s: &Scenario, p: &WeightVector) -> String {
    format!(
        "N={} d={} gamma={:?} p={:?}",
        s.n_photons(),
        s.n_phases(),
        s.loss().rates(),
        p.values()
    )
}

struct Tracker {
    report: VerifyReport,
}

impl Tracker {
    fn check_qfim(&mut self, s: &Scenario, p: &WeightVector) -> Result<()> {
        let closed = bounds::qfim_noon(s, p)?;
        let oracle = fockspace::qfim_oracle(s, p)?;
        let residual = entrywise_residual(&closed, &oracle);
        self.report.qfim_cases += 1;
        if residual > self.report.worst_qfim_residual {
            self.report.worst_qfim_residual = residual;
            self.report.worst_qfim_scenario = Some(describe(s, p));
        }
        if residual > tol::CROSS_ROUTE {
            self.report.failures.push(format!(
                "information-matrix routes disagree by {residual} at {}",
                describe(s, p)
            ));
        }
        Ok(())
    }

    fn check_sld(&mut self, s: &Scenario, p: &WeightVector) -> Result<()> {
        let rho = fockspace::build_lossy_state(s, p)?;
        let derivs = fockspace::state_derivatives(s, p, rho.basis())?;
        let slds = fockspace::sld_operators(s, p)?;
        let mut worst = 0.0f64;
        for (deriv, sld) in derivs.iter().zip(&slds) {
            let l = sld.matrix();
            let sym = (l * rho.matrix() + rho.matrix() * l) * Complex64::from(0.5);
            let residual = frobenius(&(deriv - sym));
            worst = worst.max(residual);
        }
        self.report.sld_cases += 1;
        self.report.worst_sld_residual = self.report.worst_sld_residual.max(worst);
        if worst > tol::CROSS_ROUTE {
            self.report.failures.push(format!(
                "logarithmic-derivative residual {worst} at {}",
                describe(s, p)
            ));
        }

        let via_sld = fockspace::qfim_via_sld(s, p)?;
        let oracle = fockspace::qfim_oracle(s, p)?;
        let dual = entrywise_residual(&via_sld, &oracle);
        self.report.dual_route_cases += 1;
        self.report.worst_dual_route_residual = self.report.worst_dual_route_residual.max(dual);
        if dual > tol::CROSS_ROUTE {
            self.report.failures.push(format!(
                "information assemblies disagree by {dual} at {}",
                describe(s, p)
            ));
        }

        let witness = fockspace::attainability_check(s, p)?;
        self.report.attainability_cases += 1;
        self.report.worst_commutator = self.report.worst_commutator.max(witness);
        if witness > tol::CROSS_ROUTE {
            self.report.failures.push(format!(
                "commutator witness {witness} at {}",
                describe(s, p)
            ));
        }
        Ok(())
    }
}

fn frobenius(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Runs the sweep. A report with `passed == false` lists every tolerance
/// violation; `Err` is reserved for requests that are malformed or too
/// large to attempt.
pub fn run(opts: &VerifyOptions) -> Result<VerifyReport> {
    if opts.max_photons < 1 {
        return Err(Error::ZeroCount { what: "max_photons" });
    }
    if opts.max_phases < 1 {
        return Err(Error::ZeroCount { what: "max_phases" });
    }
    if opts.grid < 2 {
        return Err(Error::ZeroCount {
            what: "grid points",
        });
    }
    let estimated = estimated_work(opts);
    if estimated > WORK_BUDGET {
        return Err(Error::WorkBudgetExceeded {
            estimated,
            budget: WORK_BUDGET,
        });
    }

    let mut tracker = Tracker {
        report: VerifyReport::default(),
    };

    for n in 1..=opts.max_photons {
        for d in 1..=opts.max_phases {
            let modes = d + 1;

            // Equal-spaced loss grid over all modes, adapted weights.
            let levels: Vec<f64> = (0..opts.grid)
                .map(|i| 0.8 * i as f64 / (opts.grid - 1) as f64)
                .collect();
            let mut odometer = vec![0usize; modes];
            loop {
                let rates: Vec<f64> = odometer.iter().map(|&i| levels[i]).collect();
                let s = Scenario::with_generic_phases(n, d, LossProfile::new(rates)?)?;
                let p = bounds::optimal_weights(&s)?;
                tracker.check_qfim(&s, &p)?;

                let mut carry = true;
                for slot in odometer.iter_mut() {
                    if !carry {
                        break;
                    }
                    *slot += 1;
                    if *slot == opts.grid {
                        *slot = 0;
                    } else {
                        carry = false;
                    }
                }
                if carry {
                    break;
                }
            }

            // Random loss and random weights, all checks.
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream((n as u64) << 32 | d as u64);
            for _ in 0..opts.random_weights {
                let rates: Vec<f64> = (0..modes).map(|_| rng.gen_range(0.0..0.9)).collect();
                let raw: Vec<f64> = (0..modes)
                    .map(|_| -rng.gen_range(f64::MIN_POSITIVE..1.0).ln())
                    .collect();
                let s = Scenario::with_generic_phases(n, d, LossProfile::new(rates)?)?;
                let p = WeightVector::from_raw(raw)?;
                tracker.check_qfim(&s, &p)?;
                tracker.check_sld(&s, &p)?;
            }
        }
    }

    let mut report = tracker.report;
    report.passed = report.failures.is_empty();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_sweep_passes_clean() {
        let opts = VerifyOptions {
            max_photons: 2,
            max_phases: 2,
            grid: 3,
            random_weights: 8,
            seed: 7,
        };
        let report = run(&opts).unwrap();
        assert!(report.passed, "failures: {:?}", report.failures);
        // 3 loss levels over (d + 1) modes plus the random draws, for each
        // of the four (N, d) pairs.
        assert_eq!(report.qfim_cases, (9 + 8) + (27 + 8) + (9 + 8) + (27 + 8));
        assert_eq!(report.sld_cases, 4 * 8);
        assert!(report.worst_qfim_residual <= tol::CROSS_ROUTE);
        assert!(report.worst_qfim_scenario.is_some());
    }

    #[test]
    fn oversized_requests_are_refused() {
        let opts = VerifyOptions {
            max_photons: 4,
            max_phases: 6,
            ..VerifyOptions::default()
        };
        assert!(matches!(
            run(&opts),
            Err(Error::WorkBudgetExceeded { .. })
        ));
    }

    #[test]
    fn work_estimate_scales_with_the_request() {
        let small = estimated_work(&VerifyOptions::default());
        assert!(small < WORK_BUDGET, "default sweep estimate {small}");
        let big = estimated_work(&VerifyOptions {
            max_photons: 4,
            max_phases: 6,
            ..VerifyOptions::default()
        });
        assert!(big > WORK_BUDGET, "oversized sweep estimate {big}");
    }
}
