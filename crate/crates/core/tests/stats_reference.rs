//! t-test and p-values against statrs, plus the test/bootstrap invariants.

use coordlab::stats::{bootstrap_std_of_mean, special, t_test, Direction, Tails, TestKind};
use coordlab::Parallelism;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{Beta, ContinuousCDF, StudentsT};
use statrs::function::gamma::ln_gamma;

fn sample(rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = rng.random_range(2..40);
    let shift = rng.random_range(-1.0..1.0);
    let spread = rng.random_range(0.1..3.0);
    (0..n).map(|_| shift + spread * rng.random_range(-1.0..1.0)).collect()
}

fn moments(xs: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    (n, m, xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0))
}

/// Independent Student and Welch statistics, p-values from statrs.
fn reference(a: &[f64], b: &[f64], welch: bool) -> (f64, f64, f64) {
    let (na, ma, va) = moments(a);
    let (nb, mb, vb) = moments(b);
    let (t, df) = if welch {
        let se2 = va / na + vb / nb;
        let df = se2 * se2 / ((va / na).powi(2) / (na - 1.0) + (vb / nb).powi(2) / (nb - 1.0));
        ((ma - mb) / se2.sqrt(), df)
    } else {
        let df = na + nb - 2.0;
        let sp2 = ((na - 1.0) * va + (nb - 1.0) * vb) / df;
        ((ma - mb) / (sp2 * (1.0 / na + 1.0 / nb)).sqrt(), df)
    };
    let dist = StudentsT::new(0.0, 1.0, df).unwrap();
    (t, df, 2.0 * dist.cdf(-t.abs()))
}

#[test]
fn matches_reference_on_100_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for i in 0..100 {
        let a = sample(&mut rng);
        let b = sample(&mut rng);
        for (welch, kind) in [(false, TestKind::Student), (true, TestKind::Welch)] {
            let (t_ref, df_ref, p_ref) = reference(&a, &b, welch);
            let r = t_test(&a, &b, Tails::Two, None, kind).unwrap();
            assert!((r.t_stat - t_ref).abs() < 1e-6, "pair {i}: t {} vs {t_ref}", r.t_stat);
            assert!((r.df - df_ref).abs() < 1e-6);
            assert!((r.p_value - p_ref).abs() < 1e-6, "pair {i}: p {} vs {p_ref}", r.p_value);
            let one = t_test(&a, &b, Tails::One, Some(Direction::Greater), kind).unwrap();
            let p_greater = StudentsT::new(0.0, 1.0, df_ref).unwrap().sf(t_ref);
            assert!((one.p_value - p_greater).abs() < 1e-6);
        }
    }
}

#[test]
fn spec_examples() {
    let r = t_test(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0], Tails::One, Some(Direction::Greater), TestKind::Student).unwrap();
    assert_eq!(r.t_stat, 0.0);
    assert!((r.p_value - 0.5).abs() < 1e-12);
    let a = [2.0, 4.0, 6.0];
    let b = [1.0, 2.0, 3.0];
    let r = t_test(&a, &b, Tails::Two, None, TestKind::Student).unwrap();
    assert!((r.p_value - reference(&a, &b, false).2).abs() < 1e-6);
    let e = t_test(&[5.0, 5.0], &[5.0, 5.0], Tails::Two, None, TestKind::Student).unwrap_err();
    assert_eq!(e.kind(), "DegenerateSample");
}

#[test]
fn special_functions_match_reference_to_1e10() {
    for &x in &[0.1, 0.5, 1.0, 1.5, 2.5, 7.3, 20.0, 151.7] {
        assert!((special::ln_gamma(x) - ln_gamma(x)).abs() < 1e-10 * ln_gamma(x).abs().max(1.0), "{x}");
    }
    for &(a, b) in &[(0.5, 0.5), (1.0, 3.0), (2.5, 7.0), (15.0, 0.5), (40.0, 60.0)] {
        let beta = Beta::new(a, b).unwrap();
        for &x in &[0.01, 0.2, 0.5, 0.77, 0.99] {
            assert!((special::inc_beta(a, b, x) - beta.cdf(x)).abs() < 1e-10, "I({a},{b};{x})");
        }
    }
    for &df in &[1.0, 2.0, 5.5, 30.0, 400.0] {
        let d = StudentsT::new(0.0, 1.0, df).unwrap();
        for &t in &[-4.0, -1.0, 0.0, 0.3, 2.0, 9.0] {
            assert!((special::student_t_sf(t, df) - d.sf(t)).abs() < 1e-10, "sf({t}, {df})");
        }
    }
}

#[test]
fn bernoulli_mean_bootstrap_matches_analytic() {
    let xs: Vec<f64> = (0..100).map(|i| f64::from(i < 50)).collect();
    let est = bootstrap_std_of_mean(&xs, 10_000, 99, Parallelism::default());
    assert!((est - 0.05).abs() < 0.01, "{est}");
}

fn samples() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-100.0f64..100.0, 2..30).prop_filter("needs spread", |v| {
        v.iter().any(|x| (x - v[0]).abs() > 1e-6)
    })
}

proptest! {
    #[test]
    fn antisymmetric_under_swap(a in samples(), b in samples()) {
        let ab = t_test(&a, &b, Tails::Two, None, TestKind::Student).unwrap();
        let ba = t_test(&b, &a, Tails::Two, None, TestKind::Student).unwrap();
        prop_assert!((ab.t_stat + ba.t_stat).abs() <= 1e-9 * ab.t_stat.abs().max(1.0));
        prop_assert!((ab.p_value - ba.p_value).abs() < 1e-12);
    }

    #[test]
    fn one_tailed_directions_sum_to_one(a in samples(), b in samples()) {
        let g = t_test(&a, &b, Tails::One, Some(Direction::Greater), TestKind::Student).unwrap();
        let l = t_test(&a, &b, Tails::One, Some(Direction::Less), TestKind::Student).unwrap();
        prop_assert!((g.p_value + l.p_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bootstrap_is_order_invariant(mut xs in prop::collection::vec(-1.0f64..1.0, 1..40), seed in any::<u64>()) {
        let a = bootstrap_std_of_mean(&xs, 64, seed, Parallelism::Rayon);
        xs.sort_by(|x, y| y.total_cmp(x));
        let b = bootstrap_std_of_mean(&xs, 64, seed, Parallelism::Sequential);
        prop_assert_eq!(a.to_bits(), b.to_bits());
    }
}
