//! The model with `pi`, `alpha` and `beta` integrated out.

use crate::dataset::LabelSet;
use crate::gibbs::{CountCache, Hyperparams};
use crate::math::ln_gamma;

/// Unnormalized log posterior of a complete assignment `(T, Q)`:
///
/// ```text
/// sum_c lnG(N_t(c) + ga) - lnG(I + C ga)
///   + sum_h lnG(N_q(h) + gb) - lnG(I + H gb)
///   + sum_{k,h,t} [ sum_c lnG(N_l(k,h,t,c) + w) - lnG(N_l(k,h,t,.) + C w) ]
/// ```
pub fn collapsed_joint(
    labels: &LabelSet,
    classes: &[usize],
    levels: &[usize],
    hyper: &Hyperparams,
) -> f64 {
    let cache = CountCache::from_assignments(labels, classes, levels, hyper.levels);
    collapsed_joint_from_counts(&cache, labels.num_items(), labels.num_workers(), hyper)
}

pub fn collapsed_joint_from_counts(
    cache: &CountCache,
    num_items: usize,
    num_workers: usize,
    hyper: &Hyperparams,
) -> f64 {
    let c = cache.num_classes();
    let h_count = cache.num_levels();
    let n = num_items as f64;
    let (ga, gb, w) = (hyper.gamma_alpha, hyper.gamma_beta, hyper.omega);

    let mut total = cache
        .class_counts()
        .iter()
        .map(|&x| ln_gamma(x as f64 + ga))
        .sum::<f64>()
        - ln_gamma(n + c as f64 * ga);
    total += cache
        .level_counts()
        .iter()
        .map(|&x| ln_gamma(x as f64 + gb))
        .sum::<f64>()
        - ln_gamma(n + h_count as f64 * gb);
    for k in 0..num_workers {
        for h in 0..h_count {
            for t in 0..c {
                let row = cache.label_row(k, h, t);
                total += row.iter().map(|&x| ln_gamma(x as f64 + w)).sum::<f64>()
                    - ln_gamma(cache.label_total(k, h, t) as f64 + c as f64 * w);
            }
        }
    }
    total
}

fn cache_without(
    labels: &LabelSet,
    classes: &[usize],
    levels: &[usize],
    hyper: &Hyperparams,
    item: usize,
) -> CountCache {
    let mut cache = CountCache::from_assignments(labels, classes, levels, hyper.levels);
    cache.remove_item(labels, item, classes[item], levels[item]);
    cache
}

/// Product over the item's labels of `(N_l + w) / (N_l(.) + C w)` at
/// `(level, class)`, with counts that exclude the item.
fn label_ratio(
    labels: &LabelSet,
    cache: &CountCache,
    item: usize,
    level: usize,
    class: usize,
    omega: f64,
) -> f64 {
    let cw = labels.num_classes() as f64 * omega;
    labels
        .workers_of(item)
        .iter()
        .map(|&(k, l)| {
            (cache.label_count(k, level, class, l) as f64 + omega)
                / (cache.label_total(k, level, class) as f64 + cw)
        })
        .product()
}

/// Unnormalized `p(T_i = class | T^-i, Q, L)` in the collapsed model.
pub fn collapsed_conditional_class(
    labels: &LabelSet,
    classes: &[usize],
    levels: &[usize],
    hyper: &Hyperparams,
    item: usize,
    class: usize,
) -> f64 {
    let cache = cache_without(labels, classes, levels, hyper, item);
    (cache.class_counts()[class] as f64 + hyper.gamma_alpha)
        * label_ratio(labels, &cache, item, levels[item], class, hyper.omega)
}

/// Unnormalized `p(Q_i = level | T, Q^-i, L)` in the collapsed model.
pub fn collapsed_conditional_level(
    labels: &LabelSet,
    classes: &[usize],
    levels: &[usize],
    hyper: &Hyperparams,
    item: usize,
    level: usize,
) -> f64 {
    let cache = cache_without(labels, classes, levels, hyper, item);
    (cache.level_counts()[level] as f64 + hyper.gamma_beta)
        * label_ratio(labels, &cache, item, level, classes[item], hyper.omega)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_label_set_gives_constant() {
        let labels = LabelSet::from_triples(0, 1, 2, []).unwrap();
        let hyper = Hyperparams::default();
        let a = collapsed_joint(&labels, &[], &[], &hyper);
        let b = collapsed_joint(&labels, &[], &[], &hyper);
        assert_eq!(a, b);
        // lnG(1)*2 - lnG(2) twice, no confusion terms beyond lnG(w)^C - lnG(Cw)
        let expected = 2.0 * (2.0 * ln_gamma(1.0) - ln_gamma(2.0))
            + 2.0 * 2.0 * (2.0 * ln_gamma(1.0) - ln_gamma(2.0));
        assert!((a - expected).abs() < 1e-12);
    }

    #[test]
    fn item_without_labels_weights_by_class_counts() {
        let labels = LabelSet::from_triples(3, 1, 2, [(0, 0, 0), (1, 0, 1)]).unwrap();
        let hyper = Hyperparams {
            levels: 1,
            gamma_alpha: 0.5,
            ..Hyperparams::default()
        };
        let classes = [0, 0, 1];
        let levels = [0, 0, 0];
        let w0 = collapsed_conditional_class(&labels, &classes, &levels, &hyper, 2, 0);
        let w1 = collapsed_conditional_class(&labels, &classes, &levels, &hyper, 2, 1);
        assert!((w0 - 2.5).abs() < 1e-12 && (w1 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn symmetric_counts_give_equal_weights() {
        let labels = LabelSet::from_triples(3, 1, 2, [(0, 0, 0), (1, 0, 1), (2, 0, 0)]).unwrap();
        let hyper = Hyperparams {
            levels: 1,
            ..Hyperparams::default()
        };
        // the other two items: one of each class, each labeled as itself
        let classes = [0, 1, 0];
        let w0 = collapsed_conditional_class(&labels, &classes, &[0, 0, 0], &hyper, 2, 0);
        let w1 = collapsed_conditional_class(&labels, &classes, &[0, 0, 0], &hyper, 2, 1);
        assert!(w0 > w1);
        let labels = LabelSet::from_triples(3, 1, 2, [(0, 0, 0), (1, 0, 1)]).unwrap();
        let w0 = collapsed_conditional_class(&labels, &classes, &[0, 0, 0], &hyper, 2, 0);
        let w1 = collapsed_conditional_class(&labels, &classes, &[0, 0, 0], &hyper, 2, 1);
        assert!((w0 - w1).abs() < 1e-15);
    }

    #[test]
    fn swapping_identical_items_keeps_joint() {
        let labels =
            LabelSet::from_triples(3, 2, 2, [(0, 0, 1), (0, 1, 0), (1, 0, 1), (1, 1, 0), (2, 0, 0)])
                .unwrap();
        let hyper = Hyperparams::default();
        let a = collapsed_joint(&labels, &[0, 1, 1], &[1, 0, 0], &hyper);
        let b = collapsed_joint(&labels, &[1, 0, 1], &[0, 1, 0], &hyper);
        assert!((a - b).abs() < 1e-12);
    }
}
