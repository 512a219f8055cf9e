//! Seeded synthetic applicant pools modelled on SAT test-taker statistics.
//!
//! Three diversity types are generated: t1 "disadvantaged minority", t2 "low
//! parental education", t3 "low income household". Reserves are fixed
//! fractions of the capacity, optionally scaled.
//!
//! Stream splitting: student `i` of a pool with seed `seed` draws from a
//! ChaCha8 generator seeded with `seed` on stream `i`. Each student consumes
//! three uniforms for its types and then normal variates for its score, so
//! students are independent of each other and of the pool size.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Instance, QuotaTable, Rank, StudentId, TypeId};

pub const MINORITY: TypeId = TypeId(1);
pub const LOW_PARENTAL_EDUCATION: TypeId = TypeId(2);
pub const LOW_INCOME: TypeId = TypeId(3);

pub const TYPE_NAMES: [&str; 3] = [
    "disadvantaged_minority",
    "low_parental_education",
    "low_income",
];

/// Baseline reserve fractions of capacity, per mille, for (t1, t2, t3).
/// ψ = 0.65·q_c at scale factor 1.
pub const RANK1_PERMILLE: [u32; 3] = [150, 100, 50];
pub const RANK2_PERMILLE: [u32; 3] = [200, 100, 50];

/// ψ scale factors giving ψ = 1.3, 1.5 and 1.7 times the capacity.
pub const PSI_1_3: f64 = 2.0;
pub const PSI_1_5: f64 = 1.5 / 0.65;
pub const PSI_1_7: f64 = 1.7 / 0.65;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreModel {
    pub base_mean: f64,
    pub sd: f64,
    pub min: f64,
    pub max: f64,
    /// Mean reductions for t1, t2, t3 (descending).
    pub penalties: [u32; 3],
}

impl Default for ScoreModel {
    fn default() -> Self {
        ScoreModel {
            base_mean: 1135.0,
            sd: 211.0,
            min: 0.0,
            max: 1600.0,
            penalties: [172, 171, 86],
        }
    }
}

impl ScoreModel {
    /// Mean after harmonic penalties: the k-th held type (in t1, t2, t3 order)
    /// lowers the mean by ⌈penalty / k⌉.
    pub fn mean(&self, types: &BTreeSet<TypeId>) -> f64 {
        let reduction: u32 = [MINORITY, LOW_PARENTAL_EDUCATION, LOW_INCOME]
            .iter()
            .zip(self.penalties)
            .filter(|(t, _)| types.contains(t))
            .enumerate()
            .map(|(k, (_, p))| p.div_ceil(k as u32 + 1))
            .sum();
        self.base_mean - reduction as f64
    }

    /// Rejection sampling from the untruncated normal.
    pub fn sample<R: Rng>(&self, rng: &mut R, types: &BTreeSet<TypeId>) -> f64 {
        let normal = Normal::new(self.mean(types), self.sd).expect("positive standard deviation");
        loop {
            let x = normal.sample(rng);
            if (self.min..=self.max).contains(&x) {
                return x;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SatGenConfig {
    pub n_students: usize,
    pub capacity: usize,
    pub seed: u64,
    pub psi_factor: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("n_students must be at least 1")]
    NoStudents,
    #[error("capacity {capacity} outside [1, {n_students}]")]
    Capacity { capacity: usize, n_students: usize },
    #[error("psi_factor must be positive and finite, got {0}")]
    PsiFactor(f64),
}

impl SatGenConfig {
    pub fn new(n_students: usize, capacity: usize, seed: u64, psi_factor: f64) -> Self {
        SatGenConfig {
            n_students,
            capacity,
            seed,
            psi_factor,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n_students == 0 {
            return Err(ConfigError::NoStudents);
        }
        if self.capacity == 0 || self.capacity > self.n_students {
            return Err(ConfigError::Capacity {
                capacity: self.capacity,
                n_students: self.n_students,
            });
        }
        if !(self.psi_factor.is_finite() && self.psi_factor > 0.0) {
            return Err(ConfigError::PsiFactor(self.psi_factor));
        }
        Ok(())
    }
}

fn student_rng(seed: u64, student: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(student as u64);
    rng
}

fn draw_types<R: Rng>(rng: &mut R) -> BTreeSet<TypeId> {
    let (u1, u2, u3): (f64, f64, f64) = (rng.random(), rng.random(), rng.random());
    let mut types = BTreeSet::new();
    let minority = u1 < 0.39;
    let low_education = u2 < if minority { 0.64 } else { 0.30 };
    let p_income = match (minority, low_education) {
        (true, true) => 0.30,
        (false, false) => 0.10,
        _ => 0.26,
    };
    if minority {
        types.insert(MINORITY);
    }
    if low_education {
        types.insert(LOW_PARENTAL_EDUCATION);
    }
    if u3 < p_income {
        types.insert(LOW_INCOME);
    }
    types
}

/// Type sets of `n` students.
pub fn gen_types(seed: u64, n: usize) -> Vec<BTreeSet<TypeId>> {
    (0..n)
        .map(|i| draw_types(&mut student_rng(seed, i)))
        .collect()
}

/// One score for a student with `types`, from a generator seeded with `seed`.
pub fn gen_score(seed: u64, types: &BTreeSet<TypeId>) -> f64 {
    ScoreModel::default().sample(&mut ChaCha8Rng::seed_from_u64(seed), types)
}

/// Baseline fractions × `psi_factor` × `capacity`, rounded half-up.
pub fn gen_quotas(capacity: usize, psi_factor: f64) -> QuotaTable {
    let round = |permille: u32| {
        let x = permille as f64 * capacity as f64 * psi_factor / 1000.0;
        // tolerance keeps exact halves from rounding down after scaling
        (x + 0.5 + 1e-9).floor() as usize
    };
    let mut q = QuotaTable::zeros(3);
    for (k, ty) in [MINORITY, LOW_PARENTAL_EDUCATION, LOW_INCOME]
        .into_iter()
        .enumerate()
    {
        q.set(Rank::First, ty, round(RANK1_PERMILLE[k]));
        q.set(Rank::Second, ty, round(RANK2_PERMILLE[k]));
    }
    q
}

/// A full pool: types, scores, quotas, and priority by descending score
/// (ties by student index).
pub fn gen_instance(config: &SatGenConfig) -> Result<Instance, ConfigError> {
    config.validate()?;
    let model = ScoreModel::default();
    let (types, scores): (Vec<_>, Vec<_>) = (0..config.n_students)
        .map(|i| {
            let mut rng = student_rng(config.seed, i);
            let t = draw_types(&mut rng);
            let score = model.sample(&mut rng, &t);
            (t, score)
        })
        .unzip();
    let mut priority: Vec<StudentId> = (0..config.n_students).map(StudentId).collect();
    priority.sort_by(|a, b| scores[b.0].total_cmp(&scores[a.0]).then(a.cmp(b)));
    let names = TYPE_NAMES.iter().map(|s| s.to_string()).collect();
    Ok(Instance::new(
        names,
        types,
        priority,
        config.capacity,
        gen_quotas(config.capacity, config.psi_factor),
    )
    .with_scores(Some(scores)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(ts: &[usize]) -> BTreeSet<TypeId> {
        ts.iter().map(|&t| TypeId(t)).collect()
    }

    #[test]
    fn harmonic_mean_reduction() {
        let m = ScoreModel::default();
        assert_eq!(m.mean(&set(&[1, 2, 3])), 1135.0 - 287.0);
        assert_eq!(m.mean(&set(&[])), 1135.0);
        assert_eq!(m.mean(&set(&[1])), 1135.0 - 172.0);
        // t2 and t3 without t1: 171 + ceil(86/2)
        assert_eq!(m.mean(&set(&[2, 3])), 1135.0 - 214.0);
    }

    #[test]
    fn quota_tables() {
        let q = gen_quotas(100, 1.0);
        assert_eq!(q.type_counts(Rank::First), &[15, 10, 5]);
        assert_eq!(q.type_counts(Rank::Second), &[20, 10, 5]);
        let q2 = gen_quotas(100, PSI_1_3);
        assert_eq!(q2.type_counts(Rank::First), &[30, 20, 10]);
        assert_eq!(q2.type_counts(Rank::Second), &[40, 20, 10]);
        let tiny = gen_quotas(1, 1.0);
        assert_eq!(
            tiny.rank_total(Rank::First) + tiny.rank_total(Rank::Second),
            0
        );
        // half-up: 0.05 * 30 = 1.5 -> 2
        assert_eq!(gen_quotas(30, 1.0).get(Rank::First, LOW_INCOME), 2);
    }

    #[test]
    fn instance_at_fifty() {
        let inst = gen_instance(&SatGenConfig::new(100, 50, 7, 1.0)).unwrap();
        // 7.5->8, 10, 5, 5, 2.5->3, 2.5->3
        assert_eq!(inst.total_reserves(), 34);
        assert_eq!(inst.validate(), Ok(()));
    }

    #[test]
    fn deterministic() {
        let cfg = SatGenConfig::new(100, 30, 42, 1.0);
        assert_eq!(gen_instance(&cfg).unwrap(), gen_instance(&cfg).unwrap());
        assert_eq!(gen_types(5, 20), gen_types(5, 20));
        assert_eq!(gen_score(9, &set(&[1])), gen_score(9, &set(&[1])));
        // per-student streams: a longer pool extends a shorter one
        assert_eq!(gen_types(5, 20)[..10], gen_types(5, 10)[..]);
    }

    #[test]
    fn instance_types_match_gen_types() {
        let cfg = SatGenConfig::new(50, 10, 3, 1.0);
        let inst = gen_instance(&cfg).unwrap();
        let types: Vec<_> = inst.students().iter().map(|s| s.types.clone()).collect();
        assert_eq!(types, gen_types(3, 50));
    }

    #[test]
    fn priority_sorted_by_score() {
        let inst = gen_instance(&SatGenConfig::new(100, 40, 1, 1.0)).unwrap();
        let scores = inst.scores().unwrap();
        for w in inst.priority().windows(2) {
            assert!(scores[w[0].0] >= scores[w[1].0]);
        }
        assert!(scores.iter().all(|s| (0.0..=1600.0).contains(s)));
    }

    #[test]
    fn config_errors() {
        assert_eq!(
            SatGenConfig::new(0, 1, 0, 1.0).validate(),
            Err(ConfigError::NoStudents)
        );
        assert!(matches!(
            SatGenConfig::new(10, 11, 0, 1.0).validate(),
            Err(ConfigError::Capacity { .. })
        ));
        assert!(matches!(
            SatGenConfig::new(10, 5, 0, 0.0).validate(),
            Err(ConfigError::PsiFactor(_))
        ));
    }
}
