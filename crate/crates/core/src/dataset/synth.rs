//! Synthetic crowd with imbalanced classes, sparse participation, and items of
//! varying difficulty.
//!
//! Each worker has a base correct-rate drawn from a Beta distribution. An
//! item's latent difficulty level shifts that rate for every worker. A wrong
//! answer is uniform over the other `C - 1` classes.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Beta, Distribution};

use super::{LabelSet, TruthMap};
use crate::error::{Error, Result};
use crate::math::{sample_categorical, seeded_rng};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub num_items: usize,
    pub num_workers: usize,
    pub num_classes: usize,
    pub class_probs: Vec<f64>,
    /// Explicit per-worker labeling probabilities; drawn when `None`.
    pub participation: Option<Vec<f64>>,
    /// Range for drawn participation probabilities.
    pub participation_range: (f64, f64),
    /// Participation of worker 0 when participation is drawn.
    pub participation_max: f64,
    /// Explicit per-worker base correct-rates; drawn when `None`.
    pub accuracies: Option<Vec<f64>>,
    pub accuracy_mean: f64,
    /// Beta concentration `a + b` of the base correct-rate distribution.
    pub accuracy_concentration: f64,
    /// Probability of each latent difficulty level, easiest first.
    pub difficulty_probs: Vec<f64>,
    /// Additive shift of the correct-rate at each difficulty level.
    pub difficulty_shifts: Vec<f64>,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            num_items: 1000,
            num_workers: 100,
            num_classes: 5,
            class_probs: vec![0.18, 0.27, 0.45, 0.05, 0.05],
            participation: None,
            participation_range: (0.03, 0.2),
            participation_max: 0.74,
            accuracies: None,
            accuracy_mean: 0.42,
            accuracy_concentration: 1.0,
            difficulty_probs: vec![0.5, 0.5],
            difficulty_shifts: vec![0.1, -0.1],
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub labels: LabelSet,
    pub truth: TruthMap,
    /// Latent difficulty level of each item (0 = easiest).
    pub difficulty: Vec<usize>,
    pub worker_accuracy: Vec<f64>,
    pub participation: Vec<f64>,
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let c = self.num_classes;
        if self.num_items == 0 || self.num_workers == 0 || c == 0 {
            return Err(Error::config("items, workers and classes must be positive"));
        }
        if self.class_probs.len() != c {
            return Err(Error::config(format!(
                "class_probs has {} entries for {c} classes",
                self.class_probs.len()
            )));
        }
        check_simplex("class_probs", &self.class_probs)?;
        if let Some(p) = &self.participation {
            if p.len() != self.num_workers {
                return Err(Error::config("participation length differs from workers"));
            }
            if p.iter().any(|x| !(0.0..=1.0).contains(x)) {
                return Err(Error::config("participation probabilities must lie in [0, 1]"));
            }
        }
        let (lo, hi) = self.participation_range;
        if !(0.0..=1.0).contains(&lo) || !(lo..=1.0).contains(&hi) {
            return Err(Error::config("participation_range must satisfy 0 <= lo <= hi <= 1"));
        }
        if !(0.0..=1.0).contains(&self.participation_max) {
            return Err(Error::config("participation_max must lie in [0, 1]"));
        }
        if let Some(a) = &self.accuracies {
            if a.len() != self.num_workers || a.iter().any(|x| !(0.0..=1.0).contains(x)) {
                return Err(Error::config("accuracies need one value in [0, 1] per worker"));
            }
        }
        if !(self.accuracy_mean > 0.0 && self.accuracy_mean < 1.0) {
            return Err(Error::config("accuracy_mean must lie in (0, 1)"));
        }
        if self.accuracy_concentration <= 0.0 {
            return Err(Error::config("accuracy_concentration must be positive"));
        }
        if self.difficulty_probs.is_empty()
            || self.difficulty_probs.len() != self.difficulty_shifts.len()
        {
            return Err(Error::config(
                "difficulty_probs and difficulty_shifts need the same, nonzero length",
            ));
        }
        check_simplex("difficulty_probs", &self.difficulty_probs)
    }

    /// Flat `key=value` form, as written to manifests.
    pub fn to_pairs(&self) -> Vec<(String, String)> {
        let mut out = vec![
            ("items".into(), self.num_items.to_string()),
            ("workers".into(), self.num_workers.to_string()),
            ("classes".into(), self.num_classes.to_string()),
            ("class_probs".into(), join(&self.class_probs)),
        ];
        if let Some(p) = &self.participation {
            out.push(("participation".into(), join(p)));
        }
        out.extend([
            ("participation_low".into(), self.participation_range.0.to_string()),
            ("participation_high".into(), self.participation_range.1.to_string()),
            ("participation_max".into(), self.participation_max.to_string()),
        ]);
        if let Some(a) = &self.accuracies {
            out.push(("accuracies".into(), join(a)));
        }
        out.extend([
            ("accuracy_mean".into(), self.accuracy_mean.to_string()),
            ("accuracy_concentration".into(), self.accuracy_concentration.to_string()),
            ("difficulty_probs".into(), join(&self.difficulty_probs)),
            ("difficulty_shifts".into(), join(&self.difficulty_shifts)),
            ("seed".into(), self.seed.to_string()),
        ]);
        out
    }

    /// Reads the keys written by [`SynthConfig::to_pairs`]; missing keys keep
    /// their defaults, unknown keys are rejected.
    pub fn from_pairs(pairs: &BTreeMap<String, String>) -> Result<Self> {
        let mut cfg = Self::default();
        for (key, value) in pairs {
            match key.as_str() {
                "items" => cfg.num_items = scalar(key, value)?,
                "workers" => cfg.num_workers = scalar(key, value)?,
                "classes" => cfg.num_classes = scalar(key, value)?,
                "class_probs" => cfg.class_probs = list(key, value)?,
                "participation" => cfg.participation = Some(list(key, value)?),
                "participation_low" => cfg.participation_range.0 = scalar(key, value)?,
                "participation_high" => cfg.participation_range.1 = scalar(key, value)?,
                "participation_max" => cfg.participation_max = scalar(key, value)?,
                "accuracies" => cfg.accuracies = Some(list(key, value)?),
                "accuracy_mean" => cfg.accuracy_mean = scalar(key, value)?,
                "accuracy_concentration" => cfg.accuracy_concentration = scalar(key, value)?,
                "difficulty_probs" => cfg.difficulty_probs = list(key, value)?,
                "difficulty_shifts" => cfg.difficulty_shifts = list(key, value)?,
                "seed" => cfg.seed = scalar(key, value)?,
                _ => return Err(Error::config(format!("unknown synthetic config key {key:?}"))),
            }
        }
        Ok(cfg)
    }
}

fn check_simplex(name: &str, p: &[f64]) -> Result<()> {
    if p.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
        return Err(Error::config(format!("{name} entries must lie in [0, 1]")));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::config(format!("{name} sums to {total}, not 1")));
    }
    Ok(())
}

fn join<T: Display>(xs: &[T]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn scalar<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::config(format!("bad value for {key}: {value:?}")))
}

fn list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value.split(',').map(|v| scalar(key, v)).collect()
}

/// Correct-rate for a worker with base rate `base` on an item whose level
/// shifts it by `shift`. Bounded below by chance and above by 0.99, except
/// that a worker configured above 0.99 keeps its own rate as the ceiling.
fn effective_accuracy(base: f64, shift: f64, classes: usize) -> f64 {
    let floor = 1.0 / classes as f64;
    let ceiling = base.max(0.99).min(1.0);
    (base + shift).clamp(floor.min(ceiling), ceiling)
}

fn draw_label<R: Rng>(truth: usize, accuracy: f64, classes: usize, rng: &mut R) -> usize {
    if classes == 1 || rng.random::<f64>() < accuracy {
        return truth;
    }
    let wrong = rng.random_range(0..classes - 1);
    if wrong >= truth {
        wrong + 1
    } else {
        wrong
    }
}

/// Generates labels and truth; deterministic for a given config and seed.
///
/// When no worker happens to label an item (and some worker participates at
/// all), one label is added from a worker chosen in proportion to
/// participation, so that every item stays labeled.
pub fn generate_synthetic(cfg: &SynthConfig) -> Result<SyntheticData> {
    cfg.validate()?;
    let mut rng = seeded_rng(cfg.seed);
    let c = cfg.num_classes;

    let worker_accuracy: Vec<f64> = match &cfg.accuracies {
        Some(a) => a.clone(),
        None => {
            let k = cfg.accuracy_concentration;
            let beta = Beta::new(cfg.accuracy_mean * k, (1.0 - cfg.accuracy_mean) * k)
                .map_err(|e| Error::config(format!("accuracy distribution: {e}")))?;
            (0..cfg.num_workers).map(|_| beta.sample(&mut rng)).collect()
        }
    };
    let participation: Vec<f64> = match &cfg.participation {
        Some(p) => p.clone(),
        None => {
            let (lo, hi) = cfg.participation_range;
            (0..cfg.num_workers)
                .map(|k| {
                    if k == 0 {
                        cfg.participation_max
                    } else if hi > lo {
                        rng.random_range(lo..hi)
                    } else {
                        lo
                    }
                })
                .collect()
        }
    };
    let total_participation: f64 = participation.iter().sum();
    let fallback: Vec<f64> = participation.iter().map(|p| p / total_participation).collect();

    let mut truth = Vec::with_capacity(cfg.num_items);
    let mut difficulty = Vec::with_capacity(cfg.num_items);
    let mut triples = Vec::new();
    for i in 0..cfg.num_items {
        let t = sample_categorical(&cfg.class_probs, &mut rng);
        let level = sample_categorical(&cfg.difficulty_probs, &mut rng);
        let shift = cfg.difficulty_shifts[level];
        let before = triples.len();
        for (k, &rho) in participation.iter().enumerate() {
            if rng.random::<f64>() < rho {
                let acc = effective_accuracy(worker_accuracy[k], shift, c);
                triples.push((i, k, draw_label(t, acc, c, &mut rng)));
            }
        }
        if triples.len() == before && total_participation > 0.0 {
            let k = sample_categorical(&fallback, &mut rng);
            let acc = effective_accuracy(worker_accuracy[k], shift, c);
            triples.push((i, k, draw_label(t, acc, c, &mut rng)));
        }
        truth.push(t);
        difficulty.push(level);
    }

    Ok(SyntheticData {
        labels: LabelSet::from_triples(cfg.num_items, cfg.num_workers, c, triples)?,
        truth: TruthMap::from_dense(&truth),
        difficulty,
        worker_accuracy,
        participation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid_and_round_trips() {
        let cfg = SynthConfig::default();
        cfg.validate().unwrap();
        let pairs: BTreeMap<_, _> = cfg.to_pairs().into_iter().collect();
        assert_eq!(SynthConfig::from_pairs(&pairs).unwrap(), cfg);
    }

    #[test]
    fn rejects_bad_class_probs() {
        let cfg = SynthConfig {
            class_probs: vec![0.5, 0.4, 0.05, 0.03, 0.01],
            ..SynthConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn no_participation_gives_no_labels() {
        let cfg = SynthConfig {
            num_items: 50,
            num_workers: 4,
            participation: Some(vec![0.0; 4]),
            ..SynthConfig::default()
        };
        let data = generate_synthetic(&cfg).unwrap();
        assert_eq!(data.labels.num_labels(), 0);
        assert_eq!(data.truth.len(), 50);
    }

    #[test]
    fn perfect_worker_reproduces_truth() {
        let cfg = SynthConfig {
            num_items: 200,
            num_workers: 3,
            participation: Some(vec![1.0, 0.3, 0.3]),
            accuracies: Some(vec![1.0, 0.4, 0.4]),
            difficulty_probs: vec![1.0],
            difficulty_shifts: vec![0.0],
            seed: 9,
            ..SynthConfig::default()
        };
        let data = generate_synthetic(&cfg).unwrap();
        for &(i, c) in data.labels.items_of(0) {
            assert_eq!(Some(c), data.truth.get(i));
        }
        assert_eq!(data.labels.items_of(0).len(), 200);
    }

    #[test]
    fn same_seed_same_data() {
        let cfg = SynthConfig {
            num_items: 100,
            seed: 4,
            ..SynthConfig::default()
        };
        let a = generate_synthetic(&cfg).unwrap();
        let b = generate_synthetic(&cfg).unwrap();
        assert_eq!(a.labels, b.labels);
        assert_eq!(a.truth, b.truth);
    }

    #[test]
    fn effective_accuracy_bounds() {
        assert_eq!(effective_accuracy(0.1, 0.0, 5), 0.2);
        assert_eq!(effective_accuracy(0.95, 0.2, 5), 0.99);
        assert_eq!(effective_accuracy(1.0, 0.0, 5), 1.0);
        assert!((effective_accuracy(0.5, -0.1, 5) - 0.4).abs() < 1e-12);
    }
}
