//! Gibbs samplers for the difficulty-aware label model and its variant with
//! two fixed, worker-independent confusion matrices.
//!
//! Generative model: `pi[k][h][t] ~ Dir(omega)`, `alpha ~ Dir(gamma_alpha)`,
//! `beta ~ Dir(gamma_beta)`; per item `T_i ~ Cat(alpha)`, `Q_i ~ Cat(beta)`,
//! and each label `L_ik ~ Cat(pi[k][Q_i][T_i])`. Every conditional is either
//! categorical (`T_i`, `Q_i`) or Dirichlet (`pi` rows, `alpha`, `beta`).

use std::fmt;
use std::str::FromStr;

use crate::dataset::LabelSet;
use crate::error::{Error, Result};
use crate::initpredict::InitResult;
use crate::math::{sample_categorical, sample_dirichlet, seeded_rng, softmax, SeededRng};
use crate::tensor::ConfusionTensor;

mod counts;
mod summary;

pub use counts::CountCache;
pub use summary::PosteriorSummary;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    /// Free confusion matrix for every (worker, level).
    Idbla,
    /// Levels `H-2` (easy) and `H-1` (hard) use fixed symmetric matrices shared
    /// by all workers; the remaining levels are free.
    FixedIdbla,
}

impl Model {
    /// Level indices ordered from easiest to hardest.
    pub fn levels_by_difficulty(self, levels: usize) -> Vec<usize> {
        match self {
            Model::Idbla => (0..levels).collect(),
            Model::FixedIdbla => {
                let mut order = vec![levels - 2];
                order.extend(0..levels - 2);
                order.push(levels - 1);
                order
            }
        }
    }

    pub fn is_fixed_level(self, level: usize, levels: usize) -> bool {
        self == Model::FixedIdbla && level + 2 >= levels
    }
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "idbla" => Ok(Model::Idbla),
            "fidbla" | "fixed-idbla" => Ok(Model::FixedIdbla),
            _ => Err(Error::config(format!("unknown model {s:?}"))),
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Model::Idbla => "idbla",
            Model::FixedIdbla => "fidbla",
        })
    }
}

/// Dirichlet concentrations, fixed-matrix constants, and the number of levels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyperparams {
    pub omega: f64,
    pub gamma_alpha: f64,
    pub gamma_beta: f64,
    /// Confusion-row concentration for the free levels of the fixed variant.
    pub psi: f64,
    /// Off-diagonal mass of the fixed easy matrix.
    pub nu: f64,
    /// Off-diagonal mass of the fixed hard matrix.
    pub delta: f64,
    pub levels: usize,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            omega: 1.0,
            gamma_alpha: 1.0,
            gamma_beta: 1.0,
            psi: 1.0,
            nu: 0.1,
            delta: 0.8,
            levels: 2,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self, model: Model) -> Result<()> {
        let positive = [
            ("omega", self.omega),
            ("gamma_alpha", self.gamma_alpha),
            ("gamma_beta", self.gamma_beta),
            ("psi", self.psi),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.levels == 0 {
            return Err(Error::config("at least one difficulty level is required"));
        }
        if model == Model::FixedIdbla {
            if self.levels < 3 {
                return Err(Error::config(
                    "the fixed-matrix model needs at least 3 levels",
                ));
            }
            for (name, v) in [("nu", self.nu), ("delta", self.delta)] {
                if !(v > 0.0 && v < 1.0) {
                    return Err(Error::config(format!("{name} must lie in (0, 1), got {v}")));
                }
            }
        }
        Ok(())
    }

    fn row_concentration(&self, model: Model) -> f64 {
        match model {
            Model::Idbla => self.omega,
            Model::FixedIdbla => self.psi,
        }
    }
}

fn symmetric_matrix(off_diagonal_mass: f64, classes: usize) -> Vec<Vec<f64>> {
    (0..classes)
        .map(|t| {
            (0..classes)
                .map(|c| {
                    if c == t {
                        1.0 - off_diagonal_mass
                    } else {
                        off_diagonal_mass / (classes - 1) as f64
                    }
                })
                .collect()
        })
        .collect()
}

/// The fixed easy (`1 - nu` on the diagonal) and hard (`1 - delta`) matrices.
pub fn fixed_pi_matrices(
    nu: f64,
    delta: f64,
    classes: usize,
) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    if classes < 2 {
        return Err(Error::config("fixed matrices need at least 2 classes"));
    }
    Ok((
        symmetric_matrix(nu, classes),
        symmetric_matrix(delta, classes),
    ))
}

/// Current values of every latent variable.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentState {
    pub classes: Vec<usize>,
    pub levels: Vec<usize>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub pi: ConfusionTensor,
}

/// One chain over `(T, Q, pi, alpha, beta)`.
pub struct GibbsSampler<'a> {
    labels: &'a LabelSet,
    model: Model,
    hyper: Hyperparams,
    state: LatentState,
    cache: CountCache,
    rng: SeededRng,
}

impl<'a> GibbsSampler<'a> {
    /// Starts a chain at the given classes and levels. `alpha` and `beta`
    /// start at the empirical frequencies, free `pi` rows at add-one smoothed
    /// count ratios, fixed rows at their constants.
    pub fn new(
        model: Model,
        labels: &'a LabelSet,
        classes: Vec<usize>,
        levels: Vec<usize>,
        hyper: Hyperparams,
        seed: u64,
    ) -> Result<Self> {
        hyper.validate(model)?;
        let n = labels.num_items();
        let c = labels.num_classes();
        let h_count = hyper.levels;
        if classes.len() != n || levels.len() != n {
            return Err(Error::config("initial assignment must cover every item"));
        }
        if classes.iter().any(|&t| t >= c) || levels.iter().any(|&h| h >= h_count) {
            return Err(Error::config("initial assignment out of range"));
        }
        let cache = CountCache::from_assignments(labels, &classes, &levels, h_count);
        let denom = n.max(1) as f64;
        let alpha = cache.class_counts().iter().map(|&x| x as f64 / denom).collect();
        let beta = cache.level_counts().iter().map(|&x| x as f64 / denom).collect();

        let mut pi = ConfusionTensor::zeros(labels.num_workers(), h_count, c);
        for k in 0..labels.num_workers() {
            for h in 0..h_count {
                for t in 0..c {
                    let total = cache.label_total(k, h, t) as f64 + c as f64;
                    let row: Vec<f64> = cache
                        .label_row(k, h, t)
                        .iter()
                        .map(|&x| (x as f64 + 1.0) / total)
                        .collect();
                    pi.set_row(k, h, t, &row);
                }
            }
        }
        if model == Model::FixedIdbla {
            let (easy, hard) = fixed_pi_matrices(hyper.nu, hyper.delta, c)?;
            pi.set_level_matrix(h_count - 2, &easy);
            pi.set_level_matrix(h_count - 1, &hard);
        }
        Ok(Self {
            labels,
            model,
            hyper,
            state: LatentState {
                classes,
                levels,
                alpha,
                beta,
                pi,
            },
            cache,
            rng: seeded_rng(seed),
        })
    }

    pub fn state(&self) -> &LatentState {
        &self.state
    }

    pub fn cache(&self) -> &CountCache {
        &self.cache
    }

    pub fn model(&self) -> Model {
        self.model
    }

    /// Replaces the continuous parameters, e.g. to probe a conditional.
    pub fn set_parameters(&mut self, alpha: Vec<f64>, beta: Vec<f64>, pi: ConfusionTensor) {
        self.state.alpha = alpha;
        self.state.beta = beta;
        self.state.pi = pi;
    }

    /// `p(T_i = t | rest)`, proportional to
    /// `alpha_t prod_{k in S_i} pi[k][Q_i][t][L_ik]`.
    pub fn class_conditional(&self, item: usize) -> Vec<f64> {
        let s = &self.state;
        let h = s.levels[item];
        let weights: Vec<f64> = (0..self.labels.num_classes())
            .map(|t| {
                s.alpha[t].ln()
                    + self
                        .labels
                        .workers_of(item)
                        .iter()
                        .map(|&(k, c)| s.pi.get(k, h, t, c).ln())
                        .sum::<f64>()
            })
            .collect();
        softmax(&weights)
    }

    /// `p(Q_i = h | rest)`, proportional to
    /// `beta_h prod_{k in S_i} pi[k][h][T_i][L_ik]`.
    pub fn level_conditional(&self, item: usize) -> Vec<f64> {
        let s = &self.state;
        let t = s.classes[item];
        let weights: Vec<f64> = (0..self.hyper.levels)
            .map(|h| {
                s.beta[h].ln()
                    + self
                        .labels
                        .workers_of(item)
                        .iter()
                        .map(|&(k, c)| s.pi.get(k, h, t, c).ln())
                        .sum::<f64>()
            })
            .collect();
        softmax(&weights)
    }

    pub fn sample_class(&mut self, item: usize) -> usize {
        let (t_old, h) = (self.state.classes[item], self.state.levels[item]);
        self.cache.remove_item(self.labels, item, t_old, h);
        let probs = self.class_conditional(item);
        let t = sample_categorical(&probs, &mut self.rng);
        self.state.classes[item] = t;
        self.cache.add_item(self.labels, item, t, h);
        t
    }

    pub fn sample_level(&mut self, item: usize) -> usize {
        let (t, h_old) = (self.state.classes[item], self.state.levels[item]);
        self.cache.remove_item(self.labels, item, t, h_old);
        let probs = self.level_conditional(item);
        let h = sample_categorical(&probs, &mut self.rng);
        self.state.levels[item] = h;
        self.cache.add_item(self.labels, item, t, h);
        h
    }

    /// Draw from `Dir(N_l(k, h, t, .) + omega)` (`psi` for the free levels of
    /// the fixed variant). Does not modify the state.
    pub fn sample_confusion_row(&mut self, worker: usize, level: usize, truth: usize) -> Result<Vec<f64>> {
        if self.model.is_fixed_level(level, self.hyper.levels) {
            return Err(Error::FixedLevel { level });
        }
        let conc = self.hyper.row_concentration(self.model);
        let shape: Vec<f64> = self
            .cache
            .label_row(worker, level, truth)
            .iter()
            .map(|&n| n as f64 + conc)
            .collect();
        Ok(sample_dirichlet(&shape, &mut self.rng))
    }

    /// Draw from `Dir(N_t + gamma_alpha)`.
    pub fn sample_alpha(&mut self) -> Vec<f64> {
        let shape: Vec<f64> = self
            .cache
            .class_counts()
            .iter()
            .map(|&n| n as f64 + self.hyper.gamma_alpha)
            .collect();
        sample_dirichlet(&shape, &mut self.rng)
    }

    /// Draw from `Dir(N_q + gamma_beta)`.
    pub fn sample_beta(&mut self) -> Vec<f64> {
        let shape: Vec<f64> = self
            .cache
            .level_counts()
            .iter()
            .map(|&n| n as f64 + self.hyper.gamma_beta)
            .collect();
        sample_dirichlet(&shape, &mut self.rng)
    }

    /// One systematic scan: every item's class then level in index order,
    /// then all free confusion rows, then `alpha` and `beta`.
    pub fn sweep(&mut self) {
        for i in 0..self.labels.num_items() {
            self.sample_class(i);
            self.sample_level(i);
        }
        let c = self.labels.num_classes();
        for k in 0..self.labels.num_workers() {
            for h in 0..self.hyper.levels {
                if self.model.is_fixed_level(h, self.hyper.levels) {
                    continue;
                }
                for t in 0..c {
                    let row = self
                        .sample_confusion_row(k, h, t)
                        .expect("free level");
                    self.state.pi.set_row(k, h, t, &row);
                }
            }
        }
        self.state.alpha = self.sample_alpha();
        self.state.beta = self.sample_beta();
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GibbsConfig {
    /// Post-burn-in sweeps that enter the summary.
    pub samples: usize,
    pub burn_in: usize,
    pub seed: u64,
}

impl Default for GibbsConfig {
    fn default() -> Self {
        Self {
            samples: 500,
            burn_in: 100,
            seed: 0,
        }
    }
}

/// Maps an initial level (`0` easiest group) onto the model's level indices.
fn initial_level(model: Model, group: usize, levels: usize) -> usize {
    model.levels_by_difficulty(levels)[group]
}

/// Runs one chain and summarizes the post-burn-in sweeps.
///
/// `init.levels` are difficulty groups ordered easiest first; for the fixed
/// variant the easiest group starts at the fixed easy level and the hardest at
/// the fixed hard level.
pub fn run_gibbs(
    model: Model,
    labels: &LabelSet,
    init: &InitResult,
    hyper: &Hyperparams,
    cfg: &GibbsConfig,
) -> Result<PosteriorSummary> {
    if cfg.samples < 1 {
        return Err(Error::config("at least one posterior sample is required"));
    }
    hyper.validate(model)?;
    if init.levels.iter().any(|&g| g >= hyper.levels) {
        return Err(Error::config("initial levels exceed the number of levels"));
    }
    let levels = init
        .levels
        .iter()
        .map(|&g| initial_level(model, g, hyper.levels))
        .collect();
    let mut sampler =
        GibbsSampler::new(model, labels, init.classes.clone(), levels, *hyper, cfg.seed)?;
    for _ in 0..cfg.burn_in {
        sampler.sweep();
    }

    let n = labels.num_items();
    let c = labels.num_classes();
    let h_count = hyper.levels;
    let mut class_hits = vec![vec![0.0; c]; n];
    let mut level_hits = vec![vec![0.0; h_count]; n];
    let mut pi_sum = ConfusionTensor::zeros(labels.num_workers(), h_count, c);
    let mut alpha_sum = vec![0.0; c];
    let mut beta_sum = vec![0.0; h_count];
    for _ in 0..cfg.samples {
        sampler.sweep();
        let s = sampler.state();
        for i in 0..n {
            class_hits[i][s.classes[i]] += 1.0;
            level_hits[i][s.levels[i]] += 1.0;
        }
        pi_sum
            .as_mut_slice()
            .iter_mut()
            .zip(s.pi.as_slice())
            .for_each(|(a, x)| *a += x);
        alpha_sum.iter_mut().zip(&s.alpha).for_each(|(a, x)| *a += x);
        beta_sum.iter_mut().zip(&s.beta).for_each(|(a, x)| *a += x);
    }
    let m = cfg.samples as f64;
    let scale_rows = |rows: &mut Vec<Vec<f64>>| {
        rows.iter_mut()
            .for_each(|r| r.iter_mut().for_each(|x| *x /= m))
    };
    scale_rows(&mut class_hits);
    scale_rows(&mut level_hits);
    pi_sum.as_mut_slice().iter_mut().for_each(|x| *x /= m);
    alpha_sum.iter_mut().for_each(|x| *x /= m);
    beta_sum.iter_mut().for_each(|x| *x /= m);
    Ok(PosteriorSummary::from_parts(
        class_hits, level_hits, pi_sum, alpha_sum, beta_sum, cfg.samples,
    ))
}
