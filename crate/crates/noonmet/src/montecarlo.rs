//! Randomized loss sweeps: how the precision bounds distribute when every
//! mode's loss rate is drawn independently.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds;
use crate::error::{Error, Result};
use crate::model::{LossProfile, Scenario};

/// Configuration of one randomized sweep. Loss rates are drawn uniformly
/// from `[gamma_min, gamma_max)` for all modes; `pin_reference` fixes the
/// reference mode's rate instead while leaving the signal draws unchanged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub n_photons: u32,
    pub n_phases: usize,
    pub gamma_min: f64,
    pub gamma_max: f64,
    pub instances: usize,
    pub seed: u64,
    #[serde(default)]
    pub pin_reference: Option<f64>,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_photons < 1 {
            return Err(Error::ZeroCount { what: "n_photons" });
        }
        if self.n_phases < 1 {
            return Err(Error::ZeroCount { what: "n_phases" });
        }
        if self.instances < 1 {
            return Err(Error::ZeroCount { what: "instances" });
        }
        let ok = self.gamma_min.is_finite()
            && self.gamma_max.is_finite()
            && 0.0 <= self.gamma_min
            && self.gamma_min <= self.gamma_max
            && self.gamma_max < 1.0;
        if !ok {
            return Err(Error::IntervalInvalid {
                what: "loss sweep",
                lo: self.gamma_min,
                hi: self.gamma_max,
            });
        }
        if let Some(pin) = self.pin_reference {
            if !pin.is_finite() || !(0.0..1.0).contains(&pin) {
                return Err(Error::LossOutOfRange {
                    mode: 0,
                    value: pin,
                });
            }
        }
        Ok(())
    }
}

/// Bounds for one random loss draw, all at a single probe use.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub instance: usize,
    pub gammas: Vec<f64>,
    pub gamma_mean: f64,
    /// Quantum bound at loss-adapted weights.
    pub qcrb_optimal: f64,
    /// Quantum bound at the lossless-design weights.
    pub qcrb_humphreys: f64,
    /// Classical benchmark at its own adapted weights.
    pub sql_coherent: f64,
}

/// Runs the sweep. Each instance draws from its own RNG stream, so rows
/// are reproducible and independent of how work is scheduled.
pub fn run_sweep(config: &SweepConfig) -> Result<Vec<SweepRow>> {
    config.validate()?;
    let humphreys = bounds::humphreys_weights(config.n_phases)?;
    (0..config.instances)
        .into_par_iter()
        .map(|instance| -> Result<SweepRow> {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(instance as u64);
            let mut rates: Vec<f64> = (0..=config.n_phases)
                .map(|_| {
                    if config.gamma_max > config.gamma_min {
                        rng.gen_range(config.gamma_min..config.gamma_max)
                    } else {
                        config.gamma_min
                    }
                })
                .collect();
            if let Some(pin) = config.pin_reference {
                rates[0] = pin;
            }
            let gamma_mean = rates.iter().sum::<f64>() / rates.len() as f64;
            let s = Scenario::with_generic_phases(
                config.n_photons,
                config.n_phases,
                LossProfile::new(rates.clone())?,
            )?;
            let p_opt = bounds::optimal_weights(&s)?;
            Ok(SweepRow {
                instance,
                gammas: rates,
                gamma_mean,
                qcrb_optimal: bounds::qcrb_noon(&s, &p_opt)?,
                qcrb_humphreys: bounds::qcrb_noon(&s, &humphreys)?,
                sql_coherent: bounds::sql_coherent(&s, None)?,
            })
        })
        .collect()
}

/// The three bound series a sweep reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Series {
    QcrbOptimal,
    QcrbHumphreys,
    SqlCoherent,
}

impl Series {
    pub const ALL: [Series; 3] = [
        Series::QcrbOptimal,
        Series::QcrbHumphreys,
        Series::SqlCoherent,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Series::QcrbOptimal => "qcrb_optimal",
            Series::QcrbHumphreys => "qcrb_humphreys",
            Series::SqlCoherent => "sql_coherent",
        }
    }

    pub fn value(self, row: &SweepRow) -> f64 {
        match self {
            Series::QcrbOptimal => row.qcrb_optimal,
            Series::QcrbHumphreys => row.qcrb_humphreys,
            Series::SqlCoherent => row.sql_coherent,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryStats {
    pub count: usize,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    /// Third standardized moment; 0 for a constant series.
    pub skewness: f64,
}

pub fn summary(rows: &[SweepRow], series: Series) -> Result<SummaryStats> {
    if rows.is_empty() {
        return Err(Error::ZeroCount {
            what: "sweep rows",
        });
    }
    let values: Vec<f64> = rows.iter().map(|r| series.value(r)).collect();
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let m2 = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let m3 = values.iter().map(|v| (v - mean).powi(3)).sum::<f64>() / n;
    let skewness = if m2 > 0.0 { m3 / m2.powf(1.5) } else { 0.0 };
    Ok(SummaryStats {
        count: values.len(),
        min: values.iter().copied().fold(f64::INFINITY, f64::min),
        max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        mean,
        skewness,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

/// Equal-width histogram over the series' own `[min, max]` range. The top
/// edge closes the last bin, so every value lands somewhere.
pub fn histogram(rows: &[SweepRow], series: Series, bins: usize) -> Result<Vec<HistogramBin>> {
    if bins == 0 {
        return Err(Error::ZeroCount {
            what: "histogram bins",
        });
    }
    if rows.is_empty() {
        return Err(Error::ZeroCount {
            what: "sweep rows",
        });
    }
    let values: Vec<f64> = rows.iter().map(|r| series.value(r)).collect();
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = (max - min) / bins as f64;
    let mut out: Vec<HistogramBin> = (0..bins)
        .map(|i| HistogramBin {
            lo: min + i as f64 * width,
            hi: if i + 1 == bins {
                max
            } else {
                min + (i + 1) as f64 * width
            },
            count: 0,
        })
        .collect();
    for v in values {
        let slot = if width > 0.0 {
            (((v - min) / width) as usize).min(bins - 1)
        } else {
            0
        };
        out[slot].count += 1;
    }
    Ok(out)
}
