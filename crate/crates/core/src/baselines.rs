//! Majority voting and Dawid-Skene EM.

use rand::Rng;

use crate::dataset::LabelSet;
use crate::error::{Error, Result};
use crate::math::{argmax, log_sum_exp, seeded_rng};
use crate::tensor::ConfusionTensor;

/// Additive pseudo-count applied to every confusion cell in the M-step.
pub const DEFAULT_SMOOTHING: f64 = 0.01;

/// Modal label per item (zero-based). Ties are broken uniformly at random.
///
/// Only tied items consume randomness, and the tie set is ordered by class,
/// so the result does not depend on worker order.
pub fn majority_vote(labels: &LabelSet, seed: u64) -> Result<Vec<usize>> {
    let empty = labels.unlabeled_items();
    if !empty.is_empty() {
        return Err(Error::UnlabeledItems(empty));
    }
    let mut rng = seeded_rng(seed);
    let mut counts = vec![0usize; labels.num_classes()];
    let mut out = Vec::with_capacity(labels.num_items());
    for i in 0..labels.num_items() {
        counts.iter_mut().for_each(|n| *n = 0);
        for &(_, c) in labels.workers_of(i) {
            counts[c] += 1;
        }
        let top = *counts.iter().max().unwrap();
        let tied: Vec<usize> = (0..counts.len()).filter(|&c| counts[c] == top).collect();
        let pick = if tied.len() == 1 {
            tied[0]
        } else {
            tied[rng.random_range(0..tied.len())]
        };
        out.push(pick);
    }
    Ok(out)
}

/// Per-item vote fractions over classes.
pub fn vote_fractions(labels: &LabelSet) -> Vec<Vec<f64>> {
    (0..labels.num_items())
        .map(|i| {
            let mut row = vec![0.0; labels.num_classes()];
            let n = labels.workers_of(i).len();
            for &(_, c) in labels.workers_of(i) {
                row[c] += 1.0 / n as f64;
            }
            row
        })
        .collect()
}

pub fn one_hot(classes: &[usize], num_classes: usize) -> Vec<Vec<f64>> {
    classes
        .iter()
        .map(|&c| {
            let mut row = vec![0.0; num_classes];
            row[c] = 1.0;
            row
        })
        .collect()
}

/// Dawid-Skene parameters: one confusion matrix per worker (a single-level
/// [`ConfusionTensor`]), class priors, and per-item posteriors.
#[derive(Debug, Clone, PartialEq)]
pub struct DsState {
    pub phi: ConfusionTensor,
    pub class_priors: Vec<f64>,
    pub posterior: Vec<Vec<f64>>,
}

impl DsState {
    pub fn predictions(&self) -> Vec<usize> {
        self.posterior.iter().map(|row| argmax(row)).collect()
    }
}

#[derive(Debug, Clone)]
pub struct EStep {
    pub posterior: Vec<Vec<f64>>,
    /// Observed-data log likelihood `sum_i log sum_t p_t prod_k phi`.
    pub log_likelihood: f64,
}

/// Posterior over each item's true class, computed in log space.
pub fn ds_e_step(labels: &LabelSet, phi: &ConfusionTensor, priors: &[f64]) -> EStep {
    let c = labels.num_classes();
    let log_priors: Vec<f64> = priors.iter().map(|p| p.ln()).collect();
    let mut log_likelihood = 0.0;
    let mut posterior = Vec::with_capacity(labels.num_items());
    let mut w = vec![0.0; c];
    for i in 0..labels.num_items() {
        w.copy_from_slice(&log_priors);
        for &(k, l) in labels.workers_of(i) {
            for (t, wt) in w.iter_mut().enumerate() {
                *wt += phi.get(k, 0, t, l).ln();
            }
        }
        let lse = log_sum_exp(&w);
        log_likelihood += lse;
        posterior.push(w.iter().map(|x| (x - lse).exp()).collect());
    }
    EStep {
        posterior,
        log_likelihood,
    }
}

/// Closed-form maximization given soft class assignments.
///
/// `phi[k][t][l] = (sum_i post[i][t] [L_ik = l] + s) / (sum_l' ...)` and
/// `p_t = sum_i post[i][t] / I`.
pub fn ds_m_step(
    labels: &LabelSet,
    posterior: &[Vec<f64>],
    smoothing: f64,
) -> (ConfusionTensor, Vec<f64>) {
    let c = labels.num_classes();
    let mut phi = ConfusionTensor::filled(labels.num_workers(), 1, c, smoothing);
    let mut priors = vec![0.0; c];
    for (i, post) in posterior.iter().enumerate() {
        for (t, p) in post.iter().enumerate() {
            priors[t] += p;
        }
        for &(k, l) in labels.workers_of(i) {
            for (t, p) in post.iter().enumerate() {
                phi.row_mut(k, 0, t)[l] += p;
            }
        }
    }
    for k in 0..labels.num_workers() {
        for t in 0..c {
            let row = phi.row_mut(k, 0, t);
            let total: f64 = row.iter().sum();
            if total > 0.0 {
                row.iter_mut().for_each(|x| *x /= total);
            } else {
                row.iter_mut().for_each(|x| *x = 1.0 / c as f64);
            }
        }
    }
    let n = posterior.len().max(1) as f64;
    priors.iter_mut().for_each(|p| *p /= n);
    (phi, priors)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DsOptions {
    pub max_iters: usize,
    /// Relative change of the objective below which EM stops.
    pub tol: f64,
    pub smoothing: f64,
}

impl Default for DsOptions {
    fn default() -> Self {
        Self {
            max_iters: 200,
            tol: 1e-6,
            smoothing: DEFAULT_SMOOTHING,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DsFit {
    pub state: DsState,
    /// Observed-data log likelihood after each iteration.
    pub log_likelihood: Vec<f64>,
    /// Log likelihood plus the log of the smoothing prior,
    /// `s * sum log phi`. This is the quantity EM with smoothing maximizes,
    /// and it never decreases.
    pub objective: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

fn smoothing_log_prior(phi: &ConfusionTensor, smoothing: f64) -> f64 {
    smoothing * phi.as_slice().iter().map(|x| x.ln()).sum::<f64>()
}

/// Dawid-Skene EM started from a hard labeling (usually majority vote).
pub fn ds_em(labels: &LabelSet, init: &[usize], opts: &DsOptions) -> Result<DsFit> {
    if init.len() != labels.num_items() {
        return Err(Error::config("initial labeling must cover every item"));
    }
    if opts.smoothing <= 0.0 {
        return Err(Error::config("smoothing must be positive"));
    }
    let mut posterior = one_hot(init, labels.num_classes());
    let mut log_likelihood = Vec::new();
    let mut objective: Vec<f64> = Vec::new();
    let mut converged = false;
    let mut phi;
    let mut priors;
    let mut iterations = 0;
    loop {
        (phi, priors) = ds_m_step(labels, &posterior, opts.smoothing);
        let e = ds_e_step(labels, &phi, &priors);
        posterior = e.posterior;
        let obj = e.log_likelihood + smoothing_log_prior(&phi, opts.smoothing);
        iterations += 1;
        log_likelihood.push(e.log_likelihood);
        if let Some(&prev) = objective.last() {
            if ((obj - prev) / prev.abs().max(1e-300)).abs() < opts.tol {
                converged = true;
            }
        }
        objective.push(obj);
        if converged || iterations >= opts.max_iters {
            break;
        }
    }
    Ok(DsFit {
        state: DsState {
            phi,
            class_priors: priors,
            posterior,
        },
        log_likelihood,
        objective,
        iterations,
        converged,
    })
}
