//! Moments of leave-one-out counts under the factorized variational
//! distribution, and the second-order approximation of `E[log(N + a)]`.
//!
//! A leave-one-out count is a sum of Bernoulli indicators, one per other
//! item `j`. For the level update of item `i` the indicator that `j` shares
//! item `i`'s class and sits at level `h` has mean `(lambda_j . lambda_i) rho_jh`;
//! for the class update the indicator that `j` shares item `i`'s level and has
//! class `t` has mean `(rho_j . rho_i) lambda_jt`. Indicators are treated as
//! independent, so the variance is `sum m (1 - m)`.

use super::VariationalState;
use crate::dataset::LabelSet;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moment {
    pub mean: f64,
    pub variance: f64,
}

impl Moment {
    #[inline]
    pub(crate) fn add_bernoulli(&mut self, p: f64) {
        self.mean += p;
        self.variance += p * (1.0 - p);
    }
}

/// Which coordinate update the moments serve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CountContext {
    /// Update of `rho_i`, evaluated at level `h`.
    Level(usize),
    /// Update of `lambda_i`, evaluated at class `t`.
    Class(usize),
}

/// Moments needed for one (item, worker, context) term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpectedCounts {
    /// Other items that worker `k` gave the same label as item `i`, matching
    /// on class and level.
    pub label: Moment,
    /// Other items labeled by worker `k` at all, matching on class and level.
    pub total: Moment,
    /// Other items at level `h` (level context) or of class `t` (class context).
    pub prior: Moment,
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Bernoulli mean of "item `other` matches item `item`" in the given context.
#[inline]
pub(crate) fn match_prob(state: &VariationalState, item: usize, other: usize, ctx: CountContext) -> f64 {
    match ctx {
        CountContext::Level(h) => dot(state.lambda(other), state.lambda(item)) * state.rho(other)[h],
        CountContext::Class(t) => dot(state.rho(other), state.rho(item)) * state.lambda(other)[t],
    }
}

/// `N_q^-i(h)` or `N_t^-i(t)`: a sum of independent indicators with means
/// `rho_jh` or `lambda_jt`.
pub fn prior_count_moment(state: &VariationalState, item: usize, ctx: CountContext) -> Moment {
    let mut m = Moment::default();
    for j in (0..state.num_items()).filter(|&j| j != item) {
        m.add_bernoulli(match ctx {
            CountContext::Level(h) => state.rho(j)[h],
            CountContext::Class(t) => state.lambda(j)[t],
        });
    }
    m
}

/// Moments for worker `worker`'s label on `item`; `None` if that worker did
/// not label the item.
pub fn count_moments(
    labels: &LabelSet,
    state: &VariationalState,
    item: usize,
    worker: usize,
    ctx: CountContext,
) -> Option<ExpectedCounts> {
    let observed = labels.label(item, worker)?;
    let mut label = Moment::default();
    let mut total = Moment::default();
    for &(j, c) in labels.items_of(worker) {
        if j == item {
            continue;
        }
        let p = match_prob(state, item, j, ctx);
        total.add_bernoulli(p);
        if c == observed {
            label.add_bernoulli(p);
        }
    }
    Some(ExpectedCounts {
        label,
        total,
        prior: prior_count_moment(state, item, ctx),
    })
}

/// `E[log(N + offset)] ~= log(E[N] + offset) - Var[N] / (2 (E[N] + offset)^2)`.
pub fn gaussian_log_expectation(mean: f64, variance: f64, offset: f64) -> Result<f64> {
    let shifted = mean + offset;
    if !(shifted > 0.0) {
        return Err(Error::config(format!(
            "log expectation needs mean + offset > 0, got {shifted}"
        )));
    }
    Ok(log_expectation(mean, variance, offset))
}

#[inline]
pub(crate) fn log_expectation(mean: f64, variance: f64, offset: f64) -> f64 {
    let shifted = mean + offset;
    shifted.ln() - variance / (2.0 * shifted * shifted)
}
