//! Preliminary prediction of true labels and item difficulty levels.
//!
//! Majority vote gives a first labeling. Each worker's agreement rate with it,
//! scaled by a constant, is taken as that worker's ability `a_k`. Item
//! easiness `eps_i >= 0` is then fitted under the logistic link
//!
//! ```text
//! p(correct | a_k, eps_i) = 1 / (1 + (C - 1) exp(-a_k eps_i))
//! ```
//!
//! with wrong answers sharing `1 - p` uniformly. Items are split into
//! equal-frequency difficulty groups by `1 / eps_i`.

use rand::Rng;

use crate::baselines::majority_vote;
use crate::dataset::LabelSet;
use crate::error::{Error, Result};
use crate::math::seeded_rng;

pub const DEFAULT_ABILITY_SCALE: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitOptions {
    /// Multiplier mapping a worker's correct-rate to its ability.
    pub ability_scale: f64,
    pub learning_rate: f64,
    pub max_iters: usize,
    pub max_easiness: f64,
    /// Seed for majority-vote tie breaking.
    pub seed: u64,
}

impl Default for InitOptions {
    fn default() -> Self {
        Self {
            ability_scale: DEFAULT_ABILITY_SCALE,
            learning_rate: 0.1,
            max_iters: 100,
            max_easiness: 1e3,
            seed: 0,
        }
    }
}

/// Starting point for the samplers and the variational fit.
#[derive(Debug, Clone, PartialEq)]
pub struct InitResult {
    /// Initial true class per item (zero-based).
    pub classes: Vec<usize>,
    /// Initial difficulty level per item, `0` easiest.
    pub levels: Vec<usize>,
    pub correct_rates: Vec<f64>,
    pub ability: Vec<f64>,
    /// Fitted easiness; the difficulty of item `i` is `1 / epsilon[i]`.
    pub epsilon: Vec<f64>,
    /// Items whose difficulty fit hit the iteration cap.
    pub unconverged: Vec<usize>,
}

/// Fraction of each worker's labels that agree with `classes`; `1 / C` for a
/// worker without labels.
pub fn worker_correct_rates(labels: &LabelSet, classes: &[usize]) -> Vec<f64> {
    (0..labels.num_workers())
        .map(|k| {
            let items = labels.items_of(k);
            if items.is_empty() {
                return 1.0 / labels.num_classes() as f64;
            }
            let agree = items.iter().filter(|&&(i, c)| classes[i] == c).count();
            agree as f64 / items.len() as f64
        })
        .collect()
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Probability that a worker of the given ability labels an item of the given
/// easiness correctly. Lies in `[1/C, 1)`.
pub fn label_correct_prob(ability: f64, easiness: f64, classes: usize) -> f64 {
    if classes < 2 {
        return 1.0;
    }
    sigmoid(ability * easiness - ((classes - 1) as f64).ln())
}

/// Log probability of one observed label: the correct class, or one specific
/// wrong class.
pub fn label_log_prob(ability: f64, easiness: f64, classes: usize, correct: bool) -> f64 {
    if classes < 2 {
        return if correct { 0.0 } else { f64::NEG_INFINITY };
    }
    let z = ((classes - 1) as f64).ln() - ability * easiness;
    if correct {
        -softplus(z)
    } else {
        -ability * easiness - softplus(z)
    }
}

/// Log likelihood of item `item`'s labels as a function of its easiness.
pub fn difficulty_objective(
    labels: &LabelSet,
    item: usize,
    class: usize,
    ability: &[f64],
    easiness: f64,
) -> f64 {
    let c = labels.num_classes();
    labels
        .workers_of(item)
        .iter()
        .map(|&(k, l)| label_log_prob(ability[k], easiness, c, l == class))
        .sum()
}

/// Derivative of [`difficulty_objective`] in the easiness.
pub fn difficulty_gradient(
    labels: &LabelSet,
    item: usize,
    class: usize,
    ability: &[f64],
    easiness: f64,
) -> f64 {
    let c = labels.num_classes();
    labels
        .workers_of(item)
        .iter()
        .map(|&(k, l)| {
            let p = label_correct_prob(ability[k], easiness, c);
            if l == class {
                ability[k] * (1.0 - p)
            } else {
                -ability[k] * p
            }
        })
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ItemFit {
    pub easiness: f64,
    pub converged: bool,
    /// Objective after each accepted step, starting with the initial point.
    pub objective_trace: Vec<f64>,
}

/// Projected gradient ascent with step halving on one item.
///
/// The objective is concave in the easiness, so a nonnegative derivative at
/// the upper bound puts the maximizer there and a nonpositive one at zero puts
/// it at zero. (For unanimous items the derivative at the bound underflows to
/// exactly zero.)
pub fn fit_item_difficulty(
    labels: &LabelSet,
    item: usize,
    class: usize,
    ability: &[f64],
    opts: &InitOptions,
) -> ItemFit {
    let f = |e: f64| difficulty_objective(labels, item, class, ability, e);
    let g = |e: f64| difficulty_gradient(labels, item, class, ability, e);
    let hi = opts.max_easiness;
    if g(0.0) <= 0.0 {
        return ItemFit {
            easiness: 0.0,
            converged: true,
            objective_trace: vec![f(0.0)],
        };
    }
    if g(hi) >= 0.0 {
        return ItemFit {
            easiness: hi,
            converged: true,
            objective_trace: vec![f(hi)],
        };
    }
    let mut eps = 1.0f64.min(hi);
    let mut value = f(eps);
    let mut trace = vec![value];
    let mut converged = false;
    for _ in 0..opts.max_iters {
        let grad = g(eps);
        if grad.abs() < 1e-10 {
            converged = true;
            break;
        }
        let mut step = opts.learning_rate;
        let mut next = eps;
        let mut next_value = value;
        while step > 1e-14 {
            let cand = (eps + step * grad).clamp(0.0, hi);
            let cand_value = f(cand);
            if cand_value >= value {
                next = cand;
                next_value = cand_value;
                break;
            }
            step *= 0.5;
        }
        let moved = (next - eps).abs();
        eps = next;
        value = next_value;
        trace.push(value);
        if moved < 1e-10 {
            converged = true;
            break;
        }
    }
    ItemFit {
        easiness: eps,
        converged,
        objective_trace: trace,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DifficultyFit {
    pub epsilon: Vec<f64>,
    pub unconverged: Vec<usize>,
}

/// Fits every item's easiness independently.
pub fn fit_difficulties(
    labels: &LabelSet,
    classes: &[usize],
    ability: &[f64],
    opts: &InitOptions,
) -> DifficultyFit {
    let mut epsilon = Vec::with_capacity(labels.num_items());
    let mut unconverged = Vec::new();
    for (i, &class) in classes.iter().enumerate().take(labels.num_items()) {
        let fit = fit_item_difficulty(labels, i, class, ability, opts);
        if !fit.converged {
            unconverged.push(i);
        }
        epsilon.push(fit.easiness);
    }
    if !unconverged.is_empty() {
        log::warn!(
            "difficulty fit did not converge for {} of {} items",
            unconverged.len(),
            labels.num_items()
        );
    }
    DifficultyFit {
        epsilon,
        unconverged,
    }
}

/// Equal-frequency split by difficulty `1 / eps` into `levels` groups.
///
/// Level `0` holds the easiest items; ties keep item order.
pub fn assign_levels(epsilon: &[f64], levels: usize) -> Result<Vec<usize>> {
    let n = epsilon.len();
    if levels == 0 {
        return Err(Error::config("number of levels must be at least 1"));
    }
    if levels > n {
        return Err(Error::config(format!(
            "{levels} difficulty levels requested for {n} items"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    // larger easiness = easier
    order.sort_by(|&a, &b| epsilon[b].total_cmp(&epsilon[a]).then(a.cmp(&b)));
    let mut out = vec![0; n];
    for (rank, &i) in order.iter().enumerate() {
        out[i] = rank * levels / n;
    }
    Ok(out)
}

/// Majority vote, worker abilities, difficulty fit, and level split.
pub fn preliminary_prediction(
    labels: &LabelSet,
    levels: usize,
    opts: &InitOptions,
) -> Result<InitResult> {
    let classes = majority_vote(labels, opts.seed)?;
    let correct_rates = worker_correct_rates(labels, &classes);
    let ability: Vec<f64> = correct_rates.iter().map(|r| opts.ability_scale * r).collect();
    let fit = fit_difficulties(labels, &classes, &ability, opts);
    let levels_0 = assign_levels(&fit.epsilon, levels)?;
    Ok(InitResult {
        classes,
        levels: levels_0,
        correct_rates,
        ability,
        epsilon: fit.epsilon,
        unconverged: fit.unconverged,
    })
}

/// Uniformly random classes and levels, for comparison against
/// [`preliminary_prediction`].
pub fn random_init(labels: &LabelSet, levels: usize, seed: u64) -> Result<InitResult> {
    if levels == 0 {
        return Err(Error::config("number of levels must be at least 1"));
    }
    let mut rng = seeded_rng(seed);
    let n = labels.num_items();
    let classes: Vec<usize> = (0..n)
        .map(|_| rng.random_range(0..labels.num_classes()))
        .collect();
    let levels_0 = (0..n).map(|_| rng.random_range(0..levels)).collect();
    let correct_rates = worker_correct_rates(labels, &classes);
    Ok(InitResult {
        classes,
        levels: levels_0,
        ability: vec![0.0; labels.num_workers()],
        correct_rates,
        epsilon: vec![0.0; n],
        unconverged: Vec::new(),
    })
}
