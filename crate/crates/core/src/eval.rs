//! Error rate, label likelihood, difficulty-prediction quality and selection
//! of the number of levels.

use crate::dataset::{LabelSet, TruthMap};
use crate::error::{Error, Result};
use crate::gibbs::CountCache;
use crate::runner::{run_method, Method, RunOptions};
use crate::tensor::ConfusionTensor;

/// Fraction of truth items whose prediction differs.
pub fn error_rate(predicted: &[usize], truth: &TruthMap) -> Result<f64> {
    if truth.is_empty() {
        return Err(Error::EmptyInput("ground truth has no items".into()));
    }
    let mut wrong = 0usize;
    for (i, t) in truth.iter() {
        let p = predicted.get(i).ok_or_else(|| {
            Error::Mismatch(format!("no prediction for truth item {i}"))
        })?;
        if *p != t {
            wrong += 1;
        }
    }
    Ok(wrong as f64 / truth.len() as f64)
}

pub fn accuracy(predicted: &[usize], truth: &TruthMap) -> Result<f64> {
    error_rate(predicted, truth).map(|e| 1.0 - e)
}

/// `-sum N_l(k,h,t,c) log pi[k][h][t][c]` at a hard assignment of classes and
/// levels.
pub fn nll_idbla(
    labels: &LabelSet,
    pi: &ConfusionTensor,
    classes: &[usize],
    levels: &[usize],
) -> Result<f64> {
    let n = labels.num_items();
    if classes.len() != n || levels.len() != n {
        return Err(Error::Mismatch("assignment length differs from item count".into()));
    }
    let c = labels.num_classes();
    if pi.workers() != labels.num_workers() || pi.classes() != c {
        return Err(Error::Mismatch("confusion tensor shape differs from the data".into()));
    }
    if levels.iter().any(|&h| h >= pi.levels()) || classes.iter().any(|&t| t >= c) {
        return Err(Error::Mismatch("assignment outside the tensor".into()));
    }
    let counts = CountCache::from_assignments(labels, classes, levels, pi.levels());
    let mut nll = 0.0;
    for (idx, (&count, &p)) in counts.label_counts().iter().zip(pi.as_slice()).enumerate() {
        if count == 0 {
            continue;
        }
        if p <= 0.0 {
            let row = idx / c;
            return Err(Error::ZeroProbability {
                worker: row / (pi.levels() * c),
                level: row / c % pi.levels(),
                truth: row % c,
                observed: idx % c,
            });
        }
        nll -= count as f64 * p.ln();
    }
    Ok(nll)
}

/// Label likelihood under one confusion matrix per worker (`phi.levels() == 1`).
pub fn nll_confusion(labels: &LabelSet, phi: &ConfusionTensor, classes: &[usize]) -> Result<f64> {
    if phi.levels() != 1 {
        return Err(Error::Mismatch("expected a single-level tensor".into()));
    }
    nll_idbla(labels, phi, classes, &vec![0; labels.num_items()])
}

/// `E_i`: share of item `i`'s labels that disagree with its true class.
/// `None` for items without truth or without labels.
pub fn item_error_rates(labels: &LabelSet, truth: &TruthMap) -> Vec<Option<f64>> {
    (0..labels.num_items())
        .map(|i| {
            let t = truth.get(i)?;
            let ws = labels.workers_of(i);
            if ws.is_empty() {
                return None;
            }
            let wrong = ws.iter().filter(|&&(_, l)| l != t).count();
            Some(wrong as f64 / ws.len() as f64)
        })
        .collect()
}

/// Mean `E_i` within each predicted level; `None` where a level holds no
/// evaluable item.
pub fn difficulty_quality(
    labels: &LabelSet,
    truth: &TruthMap,
    levels: &[usize],
    num_levels: usize,
) -> Vec<Option<f64>> {
    let mut sum = vec![0.0; num_levels];
    let mut count = vec![0usize; num_levels];
    for (e, &h) in item_error_rates(labels, truth).iter().zip(levels) {
        if let Some(e) = e {
            sum[h] += e;
            count[h] += 1;
        }
    }
    sum.iter()
        .zip(&count)
        .map(|(&s, &n)| (n > 0).then(|| s / n as f64))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub error_rate: f64,
    pub nll: Option<f64>,
    /// Mean labeling error per predicted level (empty when levels are unknown).
    pub level_error: Vec<Option<f64>>,
    /// Number of items with ground truth.
    pub evaluated: usize,
}

/// Scores predictions against truth. Per-level quality needs both the
/// labels and predicted levels.
pub fn evaluate(
    predicted: &[usize],
    truth: &TruthMap,
    labels: Option<&LabelSet>,
    levels: Option<(&[usize], usize)>,
    nll: Option<f64>,
) -> Result<EvalReport> {
    let error_rate = error_rate(predicted, truth)?;
    let level_error = match (labels, levels) {
        (Some(ls), Some((lv, h))) => difficulty_quality(ls, truth, lv, h),
        _ => Vec::new(),
    };
    Ok(EvalReport {
        error_rate,
        nll,
        level_error,
        evaluated: truth.len(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionRow {
    pub levels: usize,
    pub nll: f64,
    /// Present when truth was supplied; never used for the choice.
    pub error_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub chosen: usize,
    pub table: Vec<SelectionRow>,
}

/// Fits `method` once per candidate `H` and keeps the one with the smallest
/// plug-in NLL (posterior-mean `pi`, argmax classes and levels). Ties go to
/// the smaller `H`.
pub fn select_levels(
    labels: &LabelSet,
    candidates: &[usize],
    method: Method,
    opts: &RunOptions,
    seed: u64,
    truth: Option<&TruthMap>,
) -> Result<Selection> {
    if !method.has_levels() {
        return Err(Error::config(format!("{method} has no difficulty levels")));
    }
    if candidates.is_empty() {
        return Err(Error::config("no candidate level counts"));
    }
    let mut table = Vec::with_capacity(candidates.len());
    for &h in candidates {
        let mut o = opts.clone();
        o.hyper.levels = h;
        let out = run_method(method, labels, &o, seed)?;
        let error_rate = truth.map(|t| error_rate(&out.classes, t)).transpose()?;
        table.push(SelectionRow {
            levels: h,
            nll: out.nll,
            error_rate,
        });
    }
    let best = table
        .iter()
        .min_by(|a, b| a.nll.total_cmp(&b.nll).then(a.levels.cmp(&b.levels)))
        .expect("non-empty table");
    Ok(Selection {
        chosen: best.levels,
        table,
    })
}
