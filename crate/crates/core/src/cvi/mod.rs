//! Collapsed variational inference for the difficulty-aware model.
//!
//! `pi`, `alpha` and `beta` are integrated out exactly; the posterior over
//! `(T, Q)` is approximated by `prod_i q(T_i | lambda_i) q(Q_i | rho_i)` and
//! fitted by coordinate ascent. Each update exponentiates the expected log
//! collapsed conditional, with every `E[log(N + a)]` replaced by its
//! second-order expansion around the mean of `N`.

use crate::dataset::LabelSet;
use crate::error::{Error, Result};
use crate::gibbs::{Hyperparams, PosteriorSummary};
use crate::initpredict::InitResult;
use crate::math::{argmax, softmax};
use crate::tensor::ConfusionTensor;

mod collapsed;
mod moments;

pub use collapsed::{
    collapsed_conditional_class, collapsed_conditional_level, collapsed_joint,
    collapsed_joint_from_counts,
};
pub use moments::{
    count_moments, gaussian_log_expectation, prior_count_moment, CountContext, ExpectedCounts,
    Moment,
};

use moments::{dot, log_expectation};

/// Variational parameters: `lambda` (rows over classes) and `rho` (rows over
/// levels), one row per item.
#[derive(Debug, Clone, PartialEq)]
pub struct VariationalState {
    classes: usize,
    levels: usize,
    lambda: Vec<f64>,
    rho: Vec<f64>,
}

impl VariationalState {
    pub fn new(lambda: Vec<Vec<f64>>, rho: Vec<Vec<f64>>) -> Result<Self> {
        if lambda.len() != rho.len() {
            return Err(Error::config("lambda and rho must have one row per item"));
        }
        let classes = lambda.first().map_or(1, Vec::len);
        let levels = rho.first().map_or(1, Vec::len);
        for row in lambda.iter().chain(&rho) {
            if row.iter().any(|&x| !(0.0..=1.0).contains(&x))
                || (row.iter().sum::<f64>() - 1.0).abs() > 1e-9
            {
                return Err(Error::config(format!("row is not a distribution: {row:?}")));
            }
        }
        if lambda.iter().any(|r| r.len() != classes) || rho.iter().any(|r| r.len() != levels) {
            return Err(Error::config("ragged variational rows"));
        }
        Ok(Self {
            classes,
            levels,
            lambda: lambda.concat(),
            rho: rho.concat(),
        })
    }

    /// Point masses on `classes` / `levels` mixed with the uniform
    /// distribution: weight `w` on the point, `1 - w` spread evenly.
    pub fn softened(
        classes: &[usize],
        levels: &[usize],
        num_classes: usize,
        num_levels: usize,
        w: f64,
    ) -> Self {
        let soft = |idx: usize, n: usize| -> Vec<f64> {
            let mut row = vec![(1.0 - w) / n as f64; n];
            row[idx] += w;
            row
        };
        Self {
            classes: num_classes,
            levels: num_levels,
            lambda: classes.iter().flat_map(|&t| soft(t, num_classes)).collect(),
            rho: levels.iter().flat_map(|&h| soft(h, num_levels)).collect(),
        }
    }

    pub fn num_items(&self) -> usize {
        self.lambda.len() / self.classes
    }

    pub fn num_classes(&self) -> usize {
        self.classes
    }

    pub fn num_levels(&self) -> usize {
        self.levels
    }

    #[inline]
    pub fn lambda(&self, item: usize) -> &[f64] {
        &self.lambda[item * self.classes..(item + 1) * self.classes]
    }

    #[inline]
    pub fn rho(&self, item: usize) -> &[f64] {
        &self.rho[item * self.levels..(item + 1) * self.levels]
    }

    pub fn set_lambda(&mut self, item: usize, row: &[f64]) {
        let c = self.classes;
        self.lambda[item * c..(item + 1) * c].copy_from_slice(row);
    }

    pub fn set_rho(&mut self, item: usize, row: &[f64]) {
        let h = self.levels;
        self.rho[item * h..(item + 1) * h].copy_from_slice(row);
    }

    pub fn classes(&self) -> Vec<usize> {
        (0..self.num_items()).map(|i| argmax(self.lambda(i))).collect()
    }

    pub fn levels(&self) -> Vec<usize> {
        (0..self.num_items()).map(|i| argmax(self.rho(i))).collect()
    }

    /// Largest deviation of any row sum from one.
    pub fn max_row_deviation(&self) -> f64 {
        self.lambda
            .chunks(self.classes)
            .chain(self.rho.chunks(self.levels))
            .map(|r| (r.iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    fn max_abs_change(&self, other: &Self) -> f64 {
        self.lambda
            .iter()
            .zip(&other.lambda)
            .chain(self.rho.iter().zip(&other.rho))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Log-weights of `q(T_i = t)` given the leave-one-out class-count moments.
fn class_log_weights(
    labels: &LabelSet,
    state: &VariationalState,
    item: usize,
    hyper: &Hyperparams,
    prior: &[Moment],
) -> Vec<f64> {
    let c = state.classes;
    let cw = c as f64 * hyper.omega;
    let mut w: Vec<f64> = prior
        .iter()
        .map(|m| log_expectation(m.mean, m.variance, hyper.gamma_alpha))
        .collect();
    let mut label = vec![Moment::default(); c];
    let mut total = vec![Moment::default(); c];
    let rho_i = state.rho(item);
    for &(k, observed) in labels.workers_of(item) {
        label.iter_mut().for_each(|m| *m = Moment::default());
        total.iter_mut().for_each(|m| *m = Moment::default());
        for &(j, l) in labels.items_of(k) {
            if j == item {
                continue;
            }
            let same_level = dot(state.rho(j), rho_i);
            let lambda_j = state.lambda(j);
            for t in 0..c {
                let p = same_level * lambda_j[t];
                total[t].add_bernoulli(p);
                if l == observed {
                    label[t].add_bernoulli(p);
                }
            }
        }
        for t in 0..c {
            w[t] += log_expectation(label[t].mean, label[t].variance, hyper.omega)
                - log_expectation(total[t].mean, total[t].variance, cw);
        }
    }
    w
}

/// Log-weights of `q(Q_i = h)` given the leave-one-out level-count moments.
fn level_log_weights(
    labels: &LabelSet,
    state: &VariationalState,
    item: usize,
    hyper: &Hyperparams,
    prior: &[Moment],
) -> Vec<f64> {
    let h_count = state.levels;
    let cw = state.classes as f64 * hyper.omega;
    let mut w: Vec<f64> = prior
        .iter()
        .map(|m| log_expectation(m.mean, m.variance, hyper.gamma_beta))
        .collect();
    let mut label = vec![Moment::default(); h_count];
    let mut total = vec![Moment::default(); h_count];
    let lambda_i = state.lambda(item);
    for &(k, observed) in labels.workers_of(item) {
        label.iter_mut().for_each(|m| *m = Moment::default());
        total.iter_mut().for_each(|m| *m = Moment::default());
        for &(j, l) in labels.items_of(k) {
            if j == item {
                continue;
            }
            let same_class = dot(state.lambda(j), lambda_i);
            let rho_j = state.rho(j);
            for h in 0..h_count {
                let p = same_class * rho_j[h];
                total[h].add_bernoulli(p);
                if l == observed {
                    label[h].add_bernoulli(p);
                }
            }
        }
        for h in 0..h_count {
            w[h] += log_expectation(label[h].mean, label[h].variance, hyper.omega)
                - log_expectation(total[h].mean, total[h].variance, cw);
        }
    }
    w
}

/// New `lambda_i`, reading every other row from `state`.
pub fn update_lambda_row(
    labels: &LabelSet,
    state: &VariationalState,
    item: usize,
    hyper: &Hyperparams,
) -> Vec<f64> {
    let prior: Vec<Moment> = (0..state.classes)
        .map(|t| prior_count_moment(state, item, CountContext::Class(t)))
        .collect();
    softmax(&class_log_weights(labels, state, item, hyper, &prior))
}

/// New `rho_i`, reading every other row from `state`.
pub fn update_rho_row(
    labels: &LabelSet,
    state: &VariationalState,
    item: usize,
    hyper: &Hyperparams,
) -> Vec<f64> {
    let prior: Vec<Moment> = (0..state.levels)
        .map(|h| prior_count_moment(state, item, CountContext::Level(h)))
        .collect();
    softmax(&level_log_weights(labels, state, item, hyper, &prior))
}

/// Running column sums of `x` and `x^2` over all rows of `lambda` or `rho`,
/// so the leave-one-out prior moments cost `O(width)` per item.
struct ColumnSums {
    width: usize,
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
}

impl ColumnSums {
    fn new(rows: &[f64], width: usize) -> Self {
        let mut s = Self {
            width,
            sum: vec![0.0; width],
            sum_sq: vec![0.0; width],
        };
        for row in rows.chunks(width) {
            s.add(row, 1.0);
        }
        s
    }

    fn add(&mut self, row: &[f64], sign: f64) {
        for (x, (a, b)) in row.iter().zip(self.sum.iter_mut().zip(self.sum_sq.iter_mut())) {
            *a += sign * x;
            *b += sign * x * x;
        }
    }

    fn replace(&mut self, old: &[f64], new: &[f64]) {
        self.add(old, -1.0);
        self.add(new, 1.0);
    }

    fn leave_one_out(&self, own: &[f64]) -> Vec<Moment> {
        (0..self.width)
            .map(|x| {
                let mean = (self.sum[x] - own[x]).max(0.0);
                let sq = (self.sum_sq[x] - own[x] * own[x]).max(0.0);
                Moment {
                    mean,
                    variance: (mean - sq).max(0.0),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Schedule {
    /// Each update reads the newest values of all other rows.
    #[default]
    Sequential,
    /// All rows of a sweep are computed from the previous sweep's values.
    Simultaneous,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CviConfig {
    pub max_iters: usize,
    /// Stop once no entry of `lambda` or `rho` moved more than this in a sweep.
    pub tol: f64,
    /// Weight of the initial point mass; the rest is spread uniformly.
    pub init_weight: f64,
    pub schedule: Schedule,
}

impl Default for CviConfig {
    fn default() -> Self {
        Self {
            max_iters: 200,
            tol: 1e-4,
            init_weight: 0.9,
            schedule: Schedule::Sequential,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CviFit {
    pub state: VariationalState,
    /// Largest parameter change of each sweep.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Starts from softened point masses on the initial classes and levels.
pub fn run_cvi(
    labels: &LabelSet,
    init: &InitResult,
    hyper: &Hyperparams,
    cfg: &CviConfig,
) -> Result<CviFit> {
    if !(cfg.init_weight > 0.0 && cfg.init_weight <= 1.0) {
        return Err(Error::config("init_weight must lie in (0, 1]"));
    }
    if init.classes.len() != labels.num_items() || init.levels.len() != labels.num_items() {
        return Err(Error::config("initial assignment must cover every item"));
    }
    if init.levels.iter().any(|&h| h >= hyper.levels) {
        return Err(Error::config("initial levels exceed the number of levels"));
    }
    let state = VariationalState::softened(
        &init.classes,
        &init.levels,
        labels.num_classes(),
        hyper.levels,
        cfg.init_weight,
    );
    run_cvi_from(labels, state, hyper, cfg)
}

/// Coordinate ascent from an arbitrary starting state: each sweep updates
/// `lambda_i` then `rho_i` for every item in index order.
pub fn run_cvi_from(
    labels: &LabelSet,
    mut state: VariationalState,
    hyper: &Hyperparams,
    cfg: &CviConfig,
) -> Result<CviFit> {
    hyper.validate(crate::gibbs::Model::Idbla)?;
    if state.num_items() != labels.num_items()
        || state.classes != labels.num_classes()
        || state.levels != hyper.levels
    {
        return Err(Error::config("variational state does not match the data"));
    }
    let mut trace = Vec::new();
    let mut converged = false;
    for _ in 0..cfg.max_iters {
        let previous = state.clone();
        match cfg.schedule {
            Schedule::Sequential => sequential_sweep(labels, &mut state, hyper),
            Schedule::Simultaneous => {
                state = simultaneous_sweep(labels, &previous, hyper);
            }
        }
        let change = state.max_abs_change(&previous);
        trace.push(change);
        if change < cfg.tol {
            converged = true;
            break;
        }
    }
    Ok(CviFit {
        iterations: trace.len(),
        state,
        trace,
        converged,
    })
}

fn sequential_sweep(labels: &LabelSet, state: &mut VariationalState, hyper: &Hyperparams) {
    let mut lambda_sums = ColumnSums::new(&state.lambda, state.classes);
    let mut rho_sums = ColumnSums::new(&state.rho, state.levels);
    for i in 0..state.num_items() {
        let prior = lambda_sums.leave_one_out(state.lambda(i));
        let row = softmax(&class_log_weights(labels, state, i, hyper, &prior));
        lambda_sums.replace(state.lambda(i), &row);
        state.set_lambda(i, &row);

        let prior = rho_sums.leave_one_out(state.rho(i));
        let row = softmax(&level_log_weights(labels, state, i, hyper, &prior));
        rho_sums.replace(state.rho(i), &row);
        state.set_rho(i, &row);
    }
}

fn simultaneous_sweep(
    labels: &LabelSet,
    previous: &VariationalState,
    hyper: &Hyperparams,
) -> VariationalState {
    let lambda_sums = ColumnSums::new(&previous.lambda, previous.classes);
    let rho_sums = ColumnSums::new(&previous.rho, previous.levels);
    let mut next = previous.clone();
    for i in 0..previous.num_items() {
        let prior = lambda_sums.leave_one_out(previous.lambda(i));
        next.set_lambda(i, &softmax(&class_log_weights(labels, previous, i, hyper, &prior)));
        let prior = rho_sums.leave_one_out(previous.rho(i));
        next.set_rho(i, &softmax(&level_log_weights(labels, previous, i, hyper, &prior)));
    }
    next
}

/// Posterior-mean confusion matrices under `q`:
/// `(E[N_l(k,h,t,c)] + w) / (E[N_l(k,h,t,.)] + C w)`.
pub fn expected_confusion(
    labels: &LabelSet,
    state: &VariationalState,
    hyper: &Hyperparams,
) -> ConfusionTensor {
    let c = labels.num_classes();
    let mut pi = ConfusionTensor::filled(labels.num_workers(), state.levels, c, hyper.omega);
    for &(i, k, l) in labels.records() {
        let (lam, rho) = (state.lambda(i), state.rho(i));
        for (h, &r) in rho.iter().enumerate() {
            for (t, &p) in lam.iter().enumerate() {
                pi.row_mut(k, h, t)[l] += p * r;
            }
        }
    }
    for k in 0..labels.num_workers() {
        for h in 0..state.levels {
            for t in 0..c {
                let row = pi.row_mut(k, h, t);
                let total: f64 = row.iter().sum();
                row.iter_mut().for_each(|x| *x /= total);
            }
        }
    }
    pi
}

impl CviFit {
    /// Same shape as a Gibbs summary: marginals are the variational rows,
    /// `pi`, `alpha`, `beta` their posterior means under `q`.
    pub fn summary(&self, labels: &LabelSet, hyper: &Hyperparams) -> PosteriorSummary {
        let s = &self.state;
        let n = s.num_items() as f64;
        let class_marginals: Vec<Vec<f64>> =
            (0..s.num_items()).map(|i| s.lambda(i).to_vec()).collect();
        let level_marginals: Vec<Vec<f64>> =
            (0..s.num_items()).map(|i| s.rho(i).to_vec()).collect();
        let mean_of = |rows: &Vec<Vec<f64>>, width: usize, gamma: f64| -> Vec<f64> {
            (0..width)
                .map(|x| {
                    (rows.iter().map(|r| r[x]).sum::<f64>() + gamma)
                        / (n + width as f64 * gamma)
                })
                .collect()
        };
        let alpha = mean_of(&class_marginals, s.classes, hyper.gamma_alpha);
        let beta = mean_of(&level_marginals, s.levels, hyper.gamma_beta);
        PosteriorSummary::from_parts(
            class_marginals,
            level_marginals,
            expected_confusion(labels, s, hyper),
            alpha,
            beta,
            0,
        )
    }
}
