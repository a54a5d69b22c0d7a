//! Reference computations shared by the integration tests. Nothing here
//! calls into the library's inference code.

#![allow(dead_code)]

use idbla::{Hyperparams, LabelSet};

/// `log p(T, Q, L)` with `pi`, `alpha`, `beta` integrated out, computed as a
/// product of sequential predictive probabilities (Polya urn) rather than
/// through log-gamma functions.
pub fn urn_log_joint(labels: &LabelSet, classes: &[usize], levels: &[usize], hyper: &Hyperparams) -> f64 {
    let c = labels.num_classes();
    let h_count = hyper.levels;
    let mut lp = 0.0;

    let mut seen_t = vec![0.0; c];
    let mut seen_q = vec![0.0; h_count];
    for (i, (&t, &h)) in classes.iter().zip(levels).enumerate() {
        lp += ((seen_t[t] + hyper.gamma_alpha) / (i as f64 + c as f64 * hyper.gamma_alpha)).ln();
        lp += ((seen_q[h] + hyper.gamma_beta) / (i as f64 + h_count as f64 * hyper.gamma_beta)).ln();
        seen_t[t] += 1.0;
        seen_q[h] += 1.0;
    }

    // (worker, level, truth) -> counts over observed classes
    let mut rows: std::collections::HashMap<(usize, usize, usize), Vec<f64>> = Default::default();
    for &(i, k, l) in labels.records() {
        let row = rows.entry((k, levels[i], classes[i])).or_insert_with(|| vec![0.0; c]);
        let total: f64 = row.iter().sum();
        lp += ((row[l] + hyper.omega) / (total + c as f64 * hyper.omega)).ln();
        row[l] += 1.0;
    }
    lp
}

/// Every assignment of `n` variables over `base` values, in odometer order.
pub fn assignments(n: usize, base: usize) -> Vec<Vec<usize>> {
    let total = base.pow(n as u32);
    (0..total)
        .map(|mut code| {
            (0..n)
                .map(|_| {
                    let d = code % base;
                    code /= base;
                    d
                })
                .collect()
        })
        .collect()
}

/// Exact posterior over `(T, Q)` by enumeration.
pub fn exact_posterior(labels: &LabelSet, hyper: &Hyperparams) -> Vec<(Vec<usize>, Vec<usize>, f64)> {
    let n = labels.num_items();
    let mut states = Vec::new();
    for t in assignments(n, labels.num_classes()) {
        for q in assignments(n, hyper.levels) {
            let lp = urn_log_joint(labels, &t, &q, hyper);
            states.push((t.clone(), q, lp));
        }
    }
    let max = states.iter().map(|s| s.2).fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = states.iter().map(|s| (s.2 - max).exp()).sum();
    states.into_iter().map(|(t, q, lp)| (t, q, (lp - max).exp() / z)).collect()
}

pub fn tv(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Exact distribution of a sum of independent Bernoullis.
pub fn bernoulli_sum_pmf(ps: &[f64]) -> Vec<f64> {
    let mut pmf = vec![1.0];
    for &p in ps {
        let mut next = vec![0.0; pmf.len() + 1];
        for (n, &w) in pmf.iter().enumerate() {
            next[n] += w * (1.0 - p);
            next[n + 1] += w * p;
        }
        pmf = next;
    }
    pmf
}

/// Small random label set with every item labeled at least once.
pub fn random_labels(rng: &mut impl rand::Rng, items: usize, workers: usize, classes: usize) -> LabelSet {
    let mut triples = Vec::new();
    for i in 0..items {
        let first = rng.random_range(0..workers);
        for k in 0..workers {
            if k == first || rng.random::<f64>() < 0.5 {
                triples.push((i, k, rng.random_range(0..classes)));
            }
        }
    }
    LabelSet::from_triples(items, workers, classes, triples).unwrap()
}

/// Random probability row with all entries bounded away from zero.
pub fn random_row(rng: &mut impl rand::Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| 0.05 + rng.random::<f64>()).collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / s).collect()
}
