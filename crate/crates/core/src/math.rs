//! Small numeric helpers shared by the inference routines.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

pub use statrs::function::gamma::ln_gamma;

/// Random number generator used throughout; seeded runs are reproducible
/// across platforms.
pub type SeededRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Turns log-weights into a probability vector.
///
/// Panics when every weight is `-inf`; callers guarantee at least one finite
/// entry (positive Dirichlet draws or positive pseudo-counts).
pub fn softmax(log_weights: &[f64]) -> Vec<f64> {
    let lse = log_sum_exp(log_weights);
    assert!(lse.is_finite(), "all log-weights are -inf or NaN: {log_weights:?}");
    let mut probs: Vec<f64> = log_weights.iter().map(|w| (w - lse).exp()).collect();
    normalize_in_place(&mut probs);
    probs
}

pub fn normalize_in_place(v: &mut [f64]) {
    let total: f64 = v.iter().sum();
    for x in v.iter_mut() {
        *x /= total;
    }
}

/// Index of the largest entry; ties go to the smallest index.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

pub fn sample_categorical<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // u landed in the rounding gap above the cumulative sum
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1)
}

/// Dirichlet draw built from independent Gamma(shape, 1) variates.
///
/// `Gamma` switches to the boosted sampler for shapes below one.
pub fn sample_dirichlet<R: Rng + ?Sized>(concentration: &[f64], rng: &mut R) -> Vec<f64> {
    let mut draw: Vec<f64> = concentration
        .iter()
        .map(|&a| {
            debug_assert!(a > 0.0, "Dirichlet concentration must be positive");
            Gamma::new(a, 1.0).expect("positive shape").sample(rng)
        })
        .collect();
    let total: f64 = draw.iter().sum();
    if total > 0.0 && total.is_finite() {
        for x in &mut draw {
            *x /= total;
        }
        draw
    } else {
        // every gamma variate underflowed; fall back to the argmax of the shapes
        let mut point = vec![0.0; concentration.len()];
        point[argmax(concentration)] = 1.0;
        point
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n - 1 denominator); zero for fewer than two values.
pub fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}
