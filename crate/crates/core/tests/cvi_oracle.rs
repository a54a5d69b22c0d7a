mod common;

use common::{assignments, bernoulli_sum_pmf, random_labels, random_row, urn_log_joint};
use idbla::cvi::{
    collapsed_conditional_class, collapsed_conditional_level, collapsed_joint, count_moments,
    gaussian_log_expectation, prior_count_moment, run_cvi, run_cvi_from, update_lambda_row,
    update_rho_row, CountContext, CviConfig, Schedule, VariationalState,
};
use idbla::initpredict::InitResult;
use idbla::math::seeded_rng;
use idbla::{Hyperparams, LabelSet};
use rand::Rng;
use rand_distr::{Distribution, Gamma};

fn hyper(levels: usize) -> Hyperparams {
    Hyperparams {
        levels,
        ..Hyperparams::default()
    }
}

#[test]
fn joint_agrees_with_the_urn_product() {
    let mut rng = seeded_rng(1);
    for _ in 0..100 {
        let n = rng.random_range(1..8);
        let c = rng.random_range(2..4);
        let h = rng.random_range(1..4);
        let workers = rng.random_range(1..4);
        let labels = random_labels(&mut rng, n, workers, c);
        let hp = Hyperparams {
            levels: h,
            omega: rng.random_range(0.2..3.0),
            gamma_alpha: rng.random_range(0.2..3.0),
            gamma_beta: rng.random_range(0.2..3.0),
            ..Hyperparams::default()
        };
        let t: Vec<usize> = (0..n).map(|_| rng.random_range(0..c)).collect();
        let q: Vec<usize> = (0..n).map(|_| rng.random_range(0..h)).collect();
        let a = collapsed_joint(&labels, &t, &q, &hp);
        let b = urn_log_joint(&labels, &t, &q, &hp);
        // the closed form drops the prior normalizers, which do not depend
        // on (T, Q); compare differences across two assignments
        let t2: Vec<usize> = (0..n).map(|_| rng.random_range(0..c)).collect();
        let q2: Vec<usize> = (0..n).map(|_| rng.random_range(0..h)).collect();
        let a2 = collapsed_joint(&labels, &t2, &q2, &hp);
        let b2 = urn_log_joint(&labels, &t2, &q2, &hp);
        assert!(((a - a2) - (b - b2)).abs() < 1e-9, "{a} {a2} {b} {b2}");
    }
}

#[test]
fn conditionals_are_ratios_of_the_joint() {
    let mut rng = seeded_rng(2);
    for _ in 0..100 {
        let n = rng.random_range(2..10);
        let c = rng.random_range(2..4);
        let h = rng.random_range(1..4);
        let workers = rng.random_range(1..5);
        let labels = random_labels(&mut rng, n, workers, c);
        let hp = hyper(h);
        let mut t: Vec<usize> = (0..n).map(|_| rng.random_range(0..c)).collect();
        let mut q: Vec<usize> = (0..n).map(|_| rng.random_range(0..h)).collect();
        let i = rng.random_range(0..n);

        let (a, b) = (rng.random_range(0..c), rng.random_range(0..c));
        let ratio = collapsed_conditional_class(&labels, &t, &q, &hp, i, a)
            / collapsed_conditional_class(&labels, &t, &q, &hp, i, b);
        t[i] = a;
        let ja = collapsed_joint(&labels, &t, &q, &hp);
        t[i] = b;
        let jb = collapsed_joint(&labels, &t, &q, &hp);
        assert!((ratio.ln() - (ja - jb)).abs() < 1e-10);

        let (a, b) = (rng.random_range(0..h), rng.random_range(0..h));
        let ratio = collapsed_conditional_level(&labels, &t, &q, &hp, i, a)
            / collapsed_conditional_level(&labels, &t, &q, &hp, i, b);
        q[i] = a;
        let ja = collapsed_joint(&labels, &t, &q, &hp);
        q[i] = b;
        let jb = collapsed_joint(&labels, &t, &q, &hp);
        assert!((ratio.ln() - (ja - jb)).abs() < 1e-10);
    }
}

#[test]
fn joint_matches_monte_carlo_over_parameters() {
    // I=2, K=1, C=2, H=1 with unit hyperparameters: every prior normalizer
    // is 1, so exp(joint) is the probability itself
    let labels = LabelSet::from_triples(2, 1, 2, [(0, 0, 0), (1, 0, 1)]).unwrap();
    let hp = hyper(1);
    let mut rng = seeded_rng(3);
    let g = Gamma::new(1.0, 1.0).unwrap();
    let beta_draw = |rng: &mut idbla::math::SeededRng| {
        let a: f64 = g.sample(rng);
        let b: f64 = g.sample(rng);
        a / (a + b)
    };
    let n = 1_000_000;
    for (t0, t1) in [(0, 0), (0, 1), (1, 1)] {
        let mut acc = 0.0;
        for _ in 0..n {
            let a0 = beta_draw(&mut rng);
            let alpha = [a0, 1.0 - a0];
            let p0 = beta_draw(&mut rng);
            let p1 = beta_draw(&mut rng);
            let pi = [[p0, 1.0 - p0], [p1, 1.0 - p1]];
            acc += alpha[t0] * alpha[t1] * pi[t0][0] * pi[t1][1];
        }
        let mc = acc / n as f64;
        let exact = collapsed_joint(&labels, &[t0, t1], &[0, 0], &hp).exp();
        assert!((mc - exact).abs() / exact < 0.01, "T=({t0},{t1}): {mc} vs {exact}");
    }
}

/// Exact moments of a leave-one-out count by enumerating every `(T, Q)`
/// weighted by the factorized distribution.
fn enumerate_moments(
    labels: &LabelSet,
    state: &VariationalState,
    item: usize,
    count: impl Fn(&[usize], &[usize]) -> f64,
    fix: (Option<usize>, Option<usize>),
) -> (f64, f64) {
    let n = state.num_items();
    let (mut m1, mut m2) = (0.0, 0.0);
    for t in assignments(n, state.num_classes()) {
        if fix.0.is_some_and(|x| t[item] != x) {
            continue;
        }
        for q in assignments(n, state.num_levels()) {
            if fix.1.is_some_and(|x| q[item] != x) {
                continue;
            }
            let mut p = 1.0;
            for j in 0..n {
                if fix.0.is_none() || j != item {
                    p *= state.lambda(j)[t[j]];
                }
                if fix.1.is_none() || j != item {
                    p *= state.rho(j)[q[j]];
                }
            }
            let x = count(&t, &q);
            m1 += p * x;
            m2 += p * x * x;
        }
    }
    let _ = labels;
    (m1, m2 - m1 * m1)
}

fn random_state(rng: &mut idbla::math::SeededRng, n: usize, c: usize, h: usize) -> VariationalState {
    VariationalState::new(
        (0..n).map(|_| random_row(rng, c)).collect(),
        (0..n).map(|_| random_row(rng, h)).collect(),
    )
    .unwrap()
}

fn point_row(n: usize, at: usize) -> Vec<f64> {
    let mut r = vec![0.0; n];
    r[at] = 1.0;
    r
}

#[test]
fn count_moments_match_enumeration() {
    let mut rng = seeded_rng(4);
    for round in 0..40 {
        let (n, c, h, workers) = (4, 2, 2, 2);
        let labels = random_labels(&mut rng, n, workers, c);
        let mut state = random_state(&mut rng, n, c, h);
        let item = rng.random_range(0..n);
        // every other round, make the item's own row a point mass
        let point = round % 2 == 1;
        if point {
            state.set_lambda(item, &point_row(c, rng.random_range(0..c)));
            state.set_rho(item, &point_row(h, rng.random_range(0..h)));
        }
        for k in 0..workers {
            let Some(observed) = labels.label(item, k) else {
                assert!(count_moments(&labels, &state, item, k, CountContext::Level(0)).is_none());
                continue;
            };
            let others: Vec<(usize, usize)> =
                labels.items_of(k).iter().copied().filter(|&(j, _)| j != item).collect();
            for lev in 0..h {
                let got = count_moments(&labels, &state, item, k, CountContext::Level(lev)).unwrap();
                let label_count = |t: &[usize], q: &[usize]| {
                    others
                        .iter()
                        .filter(|&&(j, l)| l == observed && t[j] == t[item] && q[j] == lev)
                        .count() as f64
                };
                let total_count = |t: &[usize], q: &[usize]| {
                    others.iter().filter(|&&(j, _)| t[j] == t[item] && q[j] == lev).count() as f64
                };
                let (m, v) = enumerate_moments(&labels, &state, item, label_count, (None, Some(lev)));
                assert!((got.label.mean - m).abs() < 1e-12);
                if point {
                    assert!((got.label.variance - v).abs() < 1e-12);
                }
                let (m, v) = enumerate_moments(&labels, &state, item, total_count, (None, Some(lev)));
                assert!((got.total.mean - m).abs() < 1e-12);
                if point {
                    assert!((got.total.variance - v).abs() < 1e-12);
                }
                let prior = |_: &[usize], q: &[usize]| (0..n).filter(|&j| j != item && q[j] == lev).count() as f64;
                let (m, v) = enumerate_moments(&labels, &state, item, prior, (None, Some(lev)));
                assert!((got.prior.mean - m).abs() < 1e-12);
                assert!((got.prior.variance - v).abs() < 1e-12);
            }
            for cls in 0..c {
                let got = count_moments(&labels, &state, item, k, CountContext::Class(cls)).unwrap();
                let label_count = |t: &[usize], q: &[usize]| {
                    others
                        .iter()
                        .filter(|&&(j, l)| l == observed && q[j] == q[item] && t[j] == cls)
                        .count() as f64
                };
                let (m, v) = enumerate_moments(&labels, &state, item, label_count, (Some(cls), None));
                assert!((got.label.mean - m).abs() < 1e-12);
                if point {
                    assert!((got.label.variance - v).abs() < 1e-12);
                }
                let prior = |t: &[usize], _: &[usize]| (0..n).filter(|&j| j != item && t[j] == cls).count() as f64;
                let (m, v) = enumerate_moments(&labels, &state, item, prior, (Some(cls), None));
                let p = prior_count_moment(&state, item, CountContext::Class(cls));
                assert!((p.mean - m).abs() < 1e-12 && (p.variance - v).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn shared_truth_makes_variance_approximate() {
    // documents the one inexact case: with lambda_i spread, indicators
    // share T_i and the independent-sum variance is off
    let labels = LabelSet::from_triples(3, 1, 2, [(0, 0, 0), (1, 0, 0), (2, 0, 0)]).unwrap();
    let state = VariationalState::new(
        vec![vec![0.5, 0.5], vec![1.0, 0.0], vec![1.0, 0.0]],
        vec![vec![1.0], vec![1.0], vec![1.0]],
    )
    .unwrap();
    let got = count_moments(&labels, &state, 0, 0, CountContext::Level(0)).unwrap();
    // count is 2 or 0 with equal odds: variance 1, the approximation gives 0.5
    assert!((got.label.mean - 1.0).abs() < 1e-12);
    assert!((got.label.variance - 0.5).abs() < 1e-12);
}

fn exact_log_expectation(ps: &[f64], offset: f64) -> f64 {
    bernoulli_sum_pmf(ps)
        .iter()
        .enumerate()
        .map(|(k, p)| p * (k as f64 + offset).ln())
        .sum()
}

#[test]
fn gaussian_log_expectation_is_close_for_ten_or_more_terms() {
    let mut rng = seeded_rng(5);
    for _ in 0..500 {
        let n = rng.random_range(10..60);
        let ps: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let offset = rng.random_range(1.0..5.0);
        let mean: f64 = ps.iter().sum();
        let var: f64 = ps.iter().map(|p| p * (1.0 - p)).sum();
        let approx = gaussian_log_expectation(mean, var, offset).unwrap();
        let exact = exact_log_expectation(&ps, offset);
        assert!((approx - exact).abs() <= 0.05, "n={n} offset={offset}: {approx} vs {exact}");
    }
}

#[test]
fn gaussian_log_expectation_error_shrinks() {
    let err = |n: usize| {
        let ps = vec![0.5; n];
        let approx = gaussian_log_expectation(n as f64 * 0.5, n as f64 * 0.25, 1.0).unwrap();
        (approx - exact_log_expectation(&ps, 1.0)).abs()
    };
    assert!(err(30) < err(3));
    // one fair Bernoulli, offset 1: E = 0.5 ln 2
    let one = gaussian_log_expectation(0.5, 0.25, 1.0).unwrap();
    assert!((one - 0.5 * 2f64.ln()).abs() < 0.01);
}

/// `exp E_q[log p(T, Q, L)]` over everything except the updated variable,
/// normalized over that variable's values.
fn exact_mean_field_row(
    labels: &LabelSet,
    state: &VariationalState,
    hp: &Hyperparams,
    item: usize,
    class_row: bool,
) -> Vec<f64> {
    let n = state.num_items();
    let width = if class_row { state.num_classes() } else { state.num_levels() };
    let mut logw = vec![0.0; width];
    for t in assignments(n, state.num_classes()) {
        for q in assignments(n, state.num_levels()) {
            let mut p = 1.0;
            for j in 0..n {
                if !(class_row && j == item) {
                    p *= state.lambda(j)[t[j]];
                }
                if !(!class_row && j == item) {
                    p *= state.rho(j)[q[j]];
                }
            }
            let x = if class_row { t[item] } else { q[item] };
            logw[x] += p * urn_log_joint(labels, &t, &q, hp);
        }
    }
    // every value of the updated variable saw each configuration of the rest once
    let max = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logw.iter().map(|x| (x - max).exp()).collect();
    let z: f64 = w.iter().sum();
    w.iter().map(|x| x / z).collect()
}

#[test]
fn row_updates_track_the_exact_mean_field_update() {
    let mut rng = seeded_rng(6);
    for _ in 0..20 {
        let labels = random_labels(&mut rng, 3, 3, 2);
        let hp = hyper(2);
        let state = random_state(&mut rng, 3, 2, 2);
        for item in 0..3 {
            let got = update_lambda_row(&labels, &state, item, &hp);
            let want = exact_mean_field_row(&labels, &state, &hp, item, true);
            assert!(common::tv(&got, &want) <= 0.05, "lambda {got:?} vs {want:?}");
            let got = update_rho_row(&labels, &state, item, &hp);
            let want = exact_mean_field_row(&labels, &state, &hp, item, false);
            assert!(common::tv(&got, &want) <= 0.05, "rho {got:?} vs {want:?}");
        }
    }
}

#[test]
fn point_mass_updates_equal_the_collapsed_conditional() {
    // with every other row a point mass, the moments have no variance and the
    // update is exactly the collapsed conditional
    let mut rng = seeded_rng(7);
    for _ in 0..30 {
        let n = 6;
        let labels = random_labels(&mut rng, n, 3, 3);
        let hp = hyper(2);
        let t: Vec<usize> = (0..n).map(|_| rng.random_range(0..3)).collect();
        let q: Vec<usize> = (0..n).map(|_| rng.random_range(0..2)).collect();
        let state = VariationalState::softened(&t, &q, 3, 2, 1.0);
        let item = rng.random_range(0..n);
        let got = update_lambda_row(&labels, &state, item, &hp);
        let w: Vec<f64> = (0..3)
            .map(|c| collapsed_conditional_class(&labels, &t, &q, &hp, item, c))
            .collect();
        let z: f64 = w.iter().sum();
        for c in 0..3 {
            assert!((got[c] - w[c] / z).abs() < 1e-10);
        }
        let got = update_rho_row(&labels, &state, item, &hp);
        let w: Vec<f64> = (0..2)
            .map(|h| collapsed_conditional_level(&labels, &t, &q, &hp, item, h))
            .collect();
        let z: f64 = w.iter().sum();
        for h in 0..2 {
            assert!((got[h] - w[h] / z).abs() < 1e-10);
        }
    }
}

fn init_from(classes: Vec<usize>, levels: Vec<usize>) -> InitResult {
    let n = classes.len();
    InitResult {
        classes,
        levels,
        correct_rates: Vec::new(),
        ability: Vec::new(),
        epsilon: vec![1.0; n],
        unconverged: Vec::new(),
    }
}

#[test]
fn converged_state_is_a_fixed_point() {
    let mut rng = seeded_rng(8);
    let labels = random_labels(&mut rng, 30, 5, 3);
    let hp = hyper(2);
    let init = init_from((0..30).map(|i| i % 3).collect(), (0..30).map(|i| i % 2).collect());
    let cfg = CviConfig {
        tol: 1e-9,
        max_iters: 2000,
        ..CviConfig::default()
    };
    let fit = run_cvi(&labels, &init, &hp, &cfg).unwrap();
    assert!(fit.converged);
    let again = run_cvi_from(&labels, fit.state.clone(), &hp, &CviConfig { max_iters: 1, ..cfg }).unwrap();
    assert!(again.trace[0] < 1e-8);
}

#[test]
fn rows_stay_on_the_simplex() {
    let mut rng = seeded_rng(9);
    for schedule in [Schedule::Sequential, Schedule::Simultaneous] {
        for _ in 0..10 {
            let n = rng.random_range(2..20);
            let workers = rng.random_range(1..6);
        let labels = random_labels(&mut rng, n, workers, 3);
            let hp = hyper(rng.random_range(1..4));
            let state = random_state(&mut rng, n, 3, hp.levels);
            let cfg = CviConfig {
                max_iters: 20,
                schedule,
                ..CviConfig::default()
            };
            let fit = run_cvi_from(&labels, state, &hp, &cfg).unwrap();
            assert!(fit.state.max_row_deviation() < 1e-9);
            assert_eq!(fit.iterations, fit.trace.len());
            for i in 0..n {
                assert!(fit.state.lambda(i).iter().chain(fit.state.rho(i)).all(|&x| (0.0..=1.0).contains(&x)));
            }
        }
    }
}

#[test]
fn single_level_rows_are_trivial_and_classes_follow_consensus() {
    let truth = [0, 1, 2, 0, 1, 2, 0, 1];
    let mut triples = Vec::new();
    for i in 0..8 {
        for k in 0..5 {
            // worker 4 is always wrong by one class
            let l = if k == 4 { (truth[i] + 1) % 3 } else { truth[i] };
            triples.push((i, k, l));
        }
    }
    let labels = LabelSet::from_triples(8, 5, 3, triples).unwrap();
    // start from the consensus with two items moved
    let mut start = truth.to_vec();
    start[1] = 0;
    start[5] = 1;
    let fit = run_cvi(&labels, &init_from(start, vec![0; 8]), &hyper(1), &CviConfig::default()).unwrap();
    assert_eq!(fit.state.classes(), truth);
    for i in 0..8 {
        assert_eq!(fit.state.rho(i), &[1.0]);
    }
}

#[test]
fn schedules_agree_on_clean_data() {
    let truth = [0, 1, 1, 0, 1, 0];
    let triples: Vec<_> = (0..6).flat_map(|i| (0..4).map(move |k| (i, k, truth[i]))).collect();
    let labels = LabelSet::from_triples(6, 4, 2, triples).unwrap();
    let init = init_from(truth.to_vec(), vec![0; 6]);
    for schedule in [Schedule::Sequential, Schedule::Simultaneous] {
        let cfg = CviConfig {
            schedule,
            ..CviConfig::default()
        };
        let fit = run_cvi(&labels, &init, &hyper(2), &cfg).unwrap();
        assert!(fit.converged);
        assert_eq!(fit.state.classes(), truth);
    }
}

#[test]
fn bad_configs_are_rejected() {
    let labels = LabelSet::from_triples(2, 1, 2, [(0, 0, 0), (1, 0, 1)]).unwrap();
    let init = init_from(vec![0, 1], vec![0, 0]);
    let bad_weight = CviConfig {
        init_weight: 0.0,
        ..CviConfig::default()
    };
    assert!(run_cvi(&labels, &init, &hyper(2), &bad_weight).is_err());
    assert!(run_cvi(&labels, &init_from(vec![0, 1], vec![0, 3]), &hyper(2), &CviConfig::default()).is_err());
    let wrong_shape = VariationalState::softened(&[0, 1], &[0, 0], 2, 3, 1.0);
    assert!(run_cvi_from(&labels, wrong_shape, &hyper(2), &CviConfig::default()).is_err());
    assert!(gaussian_log_expectation(-1.0, 0.0, 0.5).is_err());
}
