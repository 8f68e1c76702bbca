//! Derivative-free search for good counting measurements: coupler angles
//! alone, or angles and input weights together.
//!
//! Angles live on bounded ranges, so the search runs in an unconstrained
//! vector space and maps into range: `theta = (pi/4)(1 + sin x)`, `chi = x
//! mod 2 pi`, and weights through a stabilized softmax. Every candidate the
//! simplex ever evaluates is tracked, and the best one wins.

use rayon::prelude::*;
use serde::Serialize;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use std::f64::consts::{FRAC_PI_4, PI};

use crate::bounds;
use crate::error::{Error, Result};
use crate::interferometer::{assemble_unitary, crb, outcome_distribution, MeshParams};
use crate::model::{Scenario, WeightVector};
use crate::tol;

/// Outcome of a multi-restart search.
#[derive(Debug, Clone, Serialize)]
pub struct OptimizationResult {
    /// Smallest total-variance bound found.
    pub best_crb: f64,
    pub best_weights: WeightVector,
    pub best_mesh: MeshParams,
    pub restarts_used: usize,
    /// Whether the winning restart's simplex collapsed before the
    /// evaluation budget ran out.
    pub converged: bool,
    /// `(iteration, best value so far)` for the winning restart.
    pub history: Vec<(usize, f64)>,
}

struct SimplexRun {
    best_x: Vec<f64>,
    best_f: f64,
    converged: bool,
    history: Vec<(usize, f64)>,
}

/// Downhill-simplex minimization with standard coefficients (reflect 1,
/// expand 2, contract 1/2, shrink 1/2). Stops when the simplex's value
/// spread falls below [`tol::SIMPLEX_SPREAD`] or after
/// [`tol::SIMPLEX_MAX_EVALS`] objective evaluations.
fn nelder_mead<F: FnMut(&[f64]) -> f64>(mut f: F, x0: &[f64], step: f64) -> SimplexRun {
    let n = x0.len();
    let mut evals = 0usize;
    let mut best_x = x0.to_vec();
    let mut best_f = f64::INFINITY;
    let mut history = Vec::new();

    let mut eval = |x: &[f64], evals: &mut usize, best_x: &mut Vec<f64>, best_f: &mut f64| {
        *evals += 1;
        let v = f(x);
        if v < *best_f {
            *best_f = v;
            best_x.clone_from_slice(x);
        }
        v
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let f0 = eval(x0, &mut evals, &mut best_x, &mut best_f);
    simplex.push((x0.to_vec(), f0));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += step;
        let v = eval(&x, &mut evals, &mut best_x, &mut best_f);
        simplex.push((x, v));
    }
    history.push((0, best_f));

    let mut converged = false;
    let mut iteration = 0usize;
    while evals < tol::SIMPLEX_MAX_EVALS {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread = simplex[n].1 - simplex[0].1;
        if spread.abs() < tol::SIMPLEX_SPREAD {
            converged = true;
            break;
        }

        let mut centroid = vec![0.0f64; n];
        for (x, _) in &simplex[..n] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / n as f64;
            }
        }
        let worst = simplex[n].clone();
        let reflected: Vec<f64> = centroid
            .iter()
            .zip(&worst.0)
            .map(|(c, w)| 2.0 * c - w)
            .collect();
        let fr = eval(&reflected, &mut evals, &mut best_x, &mut best_f);

        if fr < simplex[0].1 {
            let expanded: Vec<f64> = centroid
                .iter()
                .zip(&reflected)
                .map(|(c, r)| c + 2.0 * (r - c))
                .collect();
            let fe = eval(&expanded, &mut evals, &mut best_x, &mut best_f);
            simplex[n] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (reflected, fr);
        } else {
            let (candidate, reference) = if fr < worst.1 {
                // Outside contraction, toward the reflected point.
                let x: Vec<f64> = centroid
                    .iter()
                    .zip(&reflected)
                    .map(|(c, r)| c + 0.5 * (r - c))
                    .collect();
                (x, fr)
            } else {
                let x: Vec<f64> = centroid
                    .iter()
                    .zip(&worst.0)
                    .map(|(c, w)| c + 0.5 * (w - c))
                    .collect();
                (x, worst.1)
            };
            let fc = eval(&candidate, &mut evals, &mut best_x, &mut best_f);
            if fc < reference {
                simplex[n] = (candidate, fc);
            } else {
                let anchor = simplex[0].0.clone();
                for entry in simplex.iter_mut().skip(1) {
                    let shrunk: Vec<f64> = anchor
                        .iter()
                        .zip(&entry.0)
                        .map(|(a, x)| a + 0.5 * (x - a))
                        .collect();
                    let fv = eval(&shrunk, &mut evals, &mut best_x, &mut best_f);
                    *entry = (shrunk, fv);
                }
            }
        }

        iteration += 1;
        if history.last().map(|&(_, v)| v != best_f).unwrap_or(true) {
            history.push((iteration, best_f));
        }
    }

    SimplexRun {
        best_x,
        best_f,
        converged,
        history,
    }
}

fn mesh_from_vector(n_modes: usize, x: &[f64]) -> Result<MeshParams> {
    let template = MeshParams::rectangular(n_modes)?;
    let mut layers = template.layers().to_vec();
    debug_assert_eq!(x.len(), 2 * layers.len());
    for (i, layer) in layers.iter_mut().enumerate() {
        layer.theta = FRAC_PI_4 * (1.0 + x[2 * i].sin());
        let mut chi = x[2 * i + 1].rem_euclid(2.0 * PI);
        if chi >= 2.0 * PI {
            // rem_euclid can round up to the modulus itself.
            chi = 0.0;
        }
        layer.chi = chi;
    }
    MeshParams::new(n_modes, layers)
}

fn mesh_to_vector(mesh: &MeshParams) -> Vec<f64> {
    let mut x = Vec::with_capacity(2 * mesh.layers().len());
    for layer in mesh.layers() {
        x.push((layer.theta / FRAC_PI_4 - 1.0).clamp(-1.0, 1.0).asin());
        x.push(layer.chi);
    }
    x
}

fn weights_from_logits(logits: &[f64]) -> Result<WeightVector> {
    let max = logits.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    WeightVector::from_raw(logits.iter().map(|&v| (v - max).exp()).collect())
}

fn random_mesh_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    (0..dim / 2)
        .flat_map(|_| {
            let theta = rng.gen_range(-1.0f64..1.0).asin();
            let chi = rng.gen_range(0.0..2.0 * PI);
            [theta, chi]
        })
        .collect()
}

fn pick_best(runs: Vec<SimplexRun>) -> Result<SimplexRun> {
    let best = runs
        .into_iter()
        .enumerate()
        .min_by(|(i, a), (j, b)| a.best_f.total_cmp(&b.best_f).then(i.cmp(j)))
        .map(|(_, run)| run)
        .ok_or(Error::ZeroCount { what: "restarts" })?;
    if !best.best_f.is_finite() {
        return Err(Error::AllRestartsSingular);
    }
    Ok(best)
}

/// Searches coupler angles for the measurement minimizing the
/// total-variance bound at fixed input weights. Restarts run in parallel;
/// the reported result is independent of thread scheduling.
pub fn optimize_mesh_for_state(
    s: &Scenario,
    p: &WeightVector,
    restarts: usize,
    seed: u64,
) -> Result<OptimizationResult> {
    s.validate()?;
    if restarts == 0 {
        return Err(Error::ZeroCount { what: "restarts" });
    }
    let n_modes = s.n_modes();
    let dim = n_modes * (n_modes - 1);

    let objective = |x: &[f64]| -> f64 {
        let value = mesh_from_vector(n_modes, x)
            .and_then(|mesh| assemble_unitary(&mesh))
            .and_then(|u| outcome_distribution(s, p, &u))
            .and_then(|dist| crb(&dist));
        match value {
            Ok(v) if v.is_finite() => v,
            _ => f64::INFINITY,
        }
    };

    let runs: Vec<SimplexRun> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64 + 1);
            let x0 = random_mesh_vector(dim, &mut rng);
            nelder_mead(objective, &x0, 0.5)
        })
        .collect();

    let best = pick_best(runs)?;
    Ok(OptimizationResult {
        best_crb: best.best_f,
        best_weights: p.clone(),
        best_mesh: mesh_from_vector(n_modes, &best.best_x)?,
        restarts_used: restarts,
        converged: best.converged,
        history: best.history,
    })
}

/// Searches coupler angles and input weights together. The first restart
/// is seeded with the best angles-only solution at the loss-adapted
/// weights, so the joint result can only improve on it; the remaining
/// restarts start fresh.
pub fn optimize_joint(s: &Scenario, restarts: usize, seed: u64) -> Result<OptimizationResult> {
    s.validate()?;
    if restarts == 0 {
        return Err(Error::ZeroCount { what: "restarts" });
    }
    let start_weights = bounds::optimal_weights(s)?;
    let inner = optimize_mesh_for_state(s, &start_weights, restarts, seed)?;

    let n_modes = s.n_modes();
    let mesh_dim = n_modes * (n_modes - 1);

    let objective = |x: &[f64]| -> f64 {
        let value = weights_from_logits(&x[mesh_dim..]).and_then(|p| {
            let u = assemble_unitary(&mesh_from_vector(n_modes, &x[..mesh_dim])?)?;
            crb(&outcome_distribution(s, &p, &u)?)
        });
        match value {
            Ok(v) if v.is_finite() => v,
            _ => f64::INFINITY,
        }
    };

    let seeded_start: Vec<f64> = mesh_to_vector(&inner.best_mesh)
        .into_iter()
        .chain(start_weights.values().iter().map(|&p| p.ln()))
        .collect();

    let runs: Vec<SimplexRun> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            if r == 0 {
                nelder_mead(objective, &seeded_start, 0.25)
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream((restarts + 1 + r) as u64);
                let mut x0 = random_mesh_vector(mesh_dim, &mut rng);
                x0.extend((0..n_modes).map(|_| rng.gen_range(-1.0f64..1.0)));
                nelder_mead(objective, &x0, 0.25)
            }
        })
        .collect();

    let best = pick_best(runs)?;
    Ok(OptimizationResult {
        best_crb: best.best_f,
        best_weights: weights_from_logits(&best.best_x[mesh_dim..])?,
        best_mesh: mesh_from_vector(n_modes, &best.best_x[..mesh_dim])?,
        restarts_used: restarts,
        converged: best.converged,
        history: best.history,
    })
}
