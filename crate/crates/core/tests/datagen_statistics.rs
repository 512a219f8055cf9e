//! Distributional checks of the synthetic pool generator.

use std::collections::BTreeSet;

use divsel_core::datagen::{
    gen_instance, gen_types, SatGenConfig, ScoreModel, LOW_INCOME, LOW_PARENTAL_EDUCATION, MINORITY,
};
use divsel_core::TypeId;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const DRAWS: usize = 100_000;

fn frequency(types: &[BTreeSet<TypeId>], t: TypeId) -> f64 {
    types.iter().filter(|s| s.contains(&t)).count() as f64 / types.len() as f64
}

#[test]
fn type_marginals() {
    let types = gen_types(2024, DRAWS);
    // marginals by total probability over the conditional draws
    let p1: f64 = 0.39;
    let p2 = p1 * 0.64 + (1.0 - p1) * 0.30;
    let both = p1 * 0.64;
    let neither = (1.0 - p1) * (1.0 - 0.30);
    let exactly_one = 1.0 - both - neither;
    let p3 = both * 0.30 + exactly_one * 0.26 + neither * 0.10;
    assert!((p2 - 0.4326).abs() < 1e-12);
    for (t, p) in [
        (MINORITY, p1),
        (LOW_PARENTAL_EDUCATION, p2),
        (LOW_INCOME, p3),
    ] {
        let f = frequency(&types, t);
        assert!((f - p).abs() < 0.01, "{t}: {f} vs {p}");
    }
}

#[test]
fn conditional_frequencies() {
    let types = gen_types(7, DRAWS);
    let minority: Vec<_> = types
        .iter()
        .filter(|s| s.contains(&MINORITY))
        .cloned()
        .collect();
    let majority: Vec<_> = types
        .iter()
        .filter(|s| !s.contains(&MINORITY))
        .cloned()
        .collect();
    assert!((frequency(&minority, LOW_PARENTAL_EDUCATION) - 0.64).abs() < 0.015);
    assert!((frequency(&majority, LOW_PARENTAL_EDUCATION) - 0.30).abs() < 0.015);
}

/// E[X | lo ≤ X ≤ hi] for X ~ N(mean, sd), by Simpson's rule.
fn truncated_normal_mean(mean: f64, sd: f64, lo: f64, hi: f64) -> f64 {
    let steps = 20_000;
    let h = (hi - lo) / steps as f64;
    let pdf = |x: f64| (-0.5 * ((x - mean) / sd).powi(2)).exp();
    let (mut mass, mut moment) = (0.0, 0.0);
    for i in 0..=steps {
        let x = lo + i as f64 * h;
        let w = if i == 0 || i == steps {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        mass += w * pdf(x);
        moment += w * x * pdf(x);
    }
    moment / mass
}

#[test]
fn score_mean_matches_truncated_normal() {
    let model = ScoreModel::default();
    // the cut at 1600 sits 2.2 sd above the mean and pulls it down by ~7.5
    let expected = truncated_normal_mean(1135.0, 211.0, 0.0, 1600.0);
    assert!(
        (expected - 1127.47).abs() < 0.01,
        "integrated mean {expected}"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let empty = BTreeSet::new();
    let sum: f64 = (0..DRAWS).map(|_| model.sample(&mut rng, &empty)).sum();
    let mean = sum / DRAWS as f64;
    assert!(
        (mean - expected).abs() < 3.0,
        "sample mean {mean} vs {expected}"
    );
}

#[test]
fn disadvantaged_mean_shift() {
    let model = ScoreModel::default();
    let all: BTreeSet<TypeId> = [MINORITY, LOW_PARENTAL_EDUCATION, LOW_INCOME].into();
    let expected = truncated_normal_mean(1135.0 - 287.0, 211.0, 0.0, 1600.0);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mean = (0..DRAWS)
        .map(|_| model.sample(&mut rng, &all))
        .sum::<f64>()
        / DRAWS as f64;
    assert!((mean - expected).abs() < 3.0, "{mean} vs {expected}");
}

#[test]
fn generated_pools_are_valid_and_sorted() {
    for seed in 0..20 {
        let inst =
            gen_instance(&SatGenConfig::new(100, 10 + 4 * seed as usize, seed, 1.0)).unwrap();
        inst.validate().unwrap();
        let scores = inst.scores().unwrap();
        assert!(scores.iter().all(|s| (0.0..=1600.0).contains(s)));
        let ordered: Vec<f64> = inst.priority().iter().map(|s| scores[s.0]).collect();
        assert!(ordered.windows(2).all(|w| w[0] >= w[1]));
    }
}

#[test]
fn same_seed_same_pool() {
    let c = SatGenConfig::new(100, 50, 7, 1.0);
    assert_eq!(gen_instance(&c).unwrap(), gen_instance(&c).unwrap());
    let d = SatGenConfig::new(100, 50, 8, 1.0);
    assert_ne!(gen_instance(&c).unwrap(), gen_instance(&d).unwrap());
}

#[test]
fn prefixes_share_students() {
    // per-student streams: a longer pool extends a shorter one
    assert_eq!(gen_types(3, 50)[..], gen_types(3, 200)[..50]);
}
