//! Selection instances: students with overlapping diversity types, a strict
//! priority order, a capacity and a two-rank quota table.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Dense 0-based student ordinal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct StudentId(pub usize);

impl StudentId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for StudentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}", self.0 + 1)
    }
}

/// Diversity type ordinal. `TypeId(0)` is the universal type every student holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TypeId(pub usize);

impl TypeId {
    pub const UNIVERSAL: TypeId = TypeId(0);

    pub fn index(self) -> usize {
        self.0
    }

    pub fn is_universal(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for TypeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t{}", self.0)
    }
}

/// Seat rank. Ranks one and two carry the reserves; rank three belongs to the
/// universal type only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Rank {
    First,
    Second,
    Third,
}

impl Rank {
    pub const ALL: [Rank; 3] = [Rank::First, Rank::Second, Rank::Third];

    pub fn number(self) -> u8 {
        match self {
            Rank::First => 1,
            Rank::Second => 2,
            Rank::Third => 3,
        }
    }

    pub fn from_number(n: u8) -> Option<Rank> {
        match n {
            1 => Some(Rank::First),
            2 => Some(Rank::Second),
            3 => Some(Rank::Third),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Student {
    pub id: StudentId,
    /// Held types, never including the universal type.
    pub types: BTreeSet<TypeId>,
}

impl Student {
    pub fn has_type(&self, ty: TypeId) -> bool {
        ty.is_universal() || self.types.contains(&ty)
    }
}

/// Per-type reserve counts for ranks one and two, indexed by `TypeId`.
/// Slot 0 belongs to the universal type and must stay zero.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct QuotaTable {
    rank1: Vec<usize>,
    rank2: Vec<usize>,
}

impl QuotaTable {
    /// All-zero table over `num_types` non-universal types.
    pub fn zeros(num_types: usize) -> Self {
        QuotaTable {
            rank1: vec![0; num_types + 1],
            rank2: vec![0; num_types + 1],
        }
    }

    /// Builds a table from per-type counts of the non-universal types, i.e.
    /// `rank1[k]` is the rank-1 quota of `TypeId(k + 1)`.
    pub fn from_type_counts(rank1: &[usize], rank2: &[usize]) -> Self {
        let mut r1 = vec![0];
        r1.extend_from_slice(rank1);
        let mut r2 = vec![0];
        r2.extend_from_slice(rank2);
        QuotaTable {
            rank1: r1,
            rank2: r2,
        }
    }

    /// Raw table including the universal slot; used by validation tests.
    pub fn from_raw(rank1: Vec<usize>, rank2: Vec<usize>) -> Self {
        QuotaTable { rank1, rank2 }
    }

    pub fn num_types(&self) -> usize {
        self.rank1.len().max(self.rank2.len()).saturating_sub(1)
    }

    pub fn get(&self, rank: Rank, ty: TypeId) -> usize {
        let table = match rank {
            Rank::First => &self.rank1,
            Rank::Second => &self.rank2,
            Rank::Third => return 0,
        };
        table.get(ty.0).copied().unwrap_or(0)
    }

    pub fn set(&mut self, rank: Rank, ty: TypeId, count: usize) {
        let table = match rank {
            Rank::First => &mut self.rank1,
            Rank::Second => &mut self.rank2,
            Rank::Third => panic!("rank-3 seats are not quota-controlled"),
        };
        if table.len() <= ty.0 {
            table.resize(ty.0 + 1, 0);
        }
        table[ty.0] = count;
    }

    /// Counts of the non-universal types for one rank.
    pub fn type_counts(&self, rank: Rank) -> &[usize] {
        let table = match rank {
            Rank::First => &self.rank1,
            Rank::Second => &self.rank2,
            Rank::Third => return &[],
        };
        table.get(1..).unwrap_or(&[])
    }

    pub fn rank_total(&self, rank: Rank) -> usize {
        self.type_counts(rank).iter().sum()
    }

    /// Every quota multiplied by `factor`.
    pub fn scaled(&self, factor: usize) -> QuotaTable {
        QuotaTable {
            rank1: self.rank1.iter().map(|c| c * factor).collect(),
            rank2: self.rank2.iter().map(|c| c * factor).collect(),
        }
    }

    /// Rank-2 reserves dropped, rank-1 kept.
    pub fn first_rank_only(&self) -> QuotaTable {
        QuotaTable {
            rank1: self.rank1.clone(),
            rank2: vec![0; self.rank2.len()],
        }
    }

    /// Both ranks merged into rank 1.
    pub fn merged(&self) -> QuotaTable {
        let len = self.rank1.len().max(self.rank2.len());
        let rank1 = (0..len)
            .map(|t| {
                self.rank1.get(t).copied().unwrap_or(0) + self.rank2.get(t).copied().unwrap_or(0)
            })
            .collect();
        QuotaTable {
            rank1,
            rank2: vec![0; len],
        }
    }
}

/// A structural rule broken by an instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: &'static str,
    pub rule: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.rule)
    }
}

/// One school's selection problem.
///
/// Instances are immutable once built. The priority order is kept both as a
/// list (position 0 = highest priority) and as its inverse.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    type_names: Vec<String>,
    students: Vec<Student>,
    priority: Vec<StudentId>,
    position: Vec<usize>,
    capacity: usize,
    quotas: QuotaTable,
    acceptable_cutoff: Option<usize>,
    scores: Option<Vec<f64>>,
}

impl Instance {
    /// Builds an instance without checking it; see [`Instance::validate`].
    ///
    /// `student_types[i]` are the types of `StudentId(i)`.
    pub fn new(
        type_names: Vec<String>,
        student_types: Vec<BTreeSet<TypeId>>,
        priority: Vec<StudentId>,
        capacity: usize,
        quotas: QuotaTable,
    ) -> Self {
        let students: Vec<Student> = student_types
            .into_iter()
            .enumerate()
            .map(|(i, types)| Student {
                id: StudentId(i),
                types,
            })
            .collect();
        let mut position = vec![usize::MAX; students.len()];
        for (pos, s) in priority.iter().enumerate() {
            if let Some(slot) = position.get_mut(s.0) {
                if *slot == usize::MAX {
                    *slot = pos;
                }
            }
        }
        Instance {
            type_names,
            students,
            priority,
            position,
            capacity,
            quotas,
            acceptable_cutoff: None,
            scores: None,
        }
    }

    /// Convenience constructor where the student list is already in priority order.
    pub fn in_priority_order(
        type_names: Vec<String>,
        student_types: Vec<BTreeSet<TypeId>>,
        capacity: usize,
        quotas: QuotaTable,
    ) -> Self {
        let priority = (0..student_types.len()).map(StudentId).collect();
        Instance::new(type_names, student_types, priority, capacity, quotas)
    }

    /// Only the first `cutoff` students in priority order are acceptable.
    pub fn with_acceptable_cutoff(mut self, cutoff: Option<usize>) -> Self {
        self.acceptable_cutoff = cutoff;
        self
    }

    /// Attaches per-student scores, indexed by `StudentId`.
    pub fn with_scores(mut self, scores: Option<Vec<f64>>) -> Self {
        self.scores = scores;
        self
    }

    pub fn with_quotas(&self, quotas: QuotaTable) -> Instance {
        Instance {
            quotas,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<(), Vec<Violation>> {
        let mut out = Vec::new();
        let mut bad = |field: &'static str, rule: String| out.push(Violation { field, rule });

        if self.capacity < 1 {
            bad("capacity", "capacity ≥ 1 violated".into());
        }

        let n = self.students.len();
        let mut seen = vec![false; n];
        let mut permutation = self.priority.len() == n;
        for s in &self.priority {
            match seen.get_mut(s.0) {
                Some(flag) if !*flag => *flag = true,
                _ => permutation = false,
            }
        }
        if !permutation || seen.iter().any(|f| !f) {
            bad(
                "priority",
                "priority not a permutation of the students".into(),
            );
        }

        let num_types = self.type_names.len();
        for s in &self.students {
            for t in &s.types {
                if t.is_universal() {
                    bad(
                        "students",
                        format!("{} lists the universal type explicitly", s.id),
                    );
                } else if t.0 > num_types {
                    bad("students", format!("{} holds undeclared type {}", s.id, t));
                }
            }
        }

        if self.quotas.get(Rank::First, TypeId::UNIVERSAL) != 0
            || self.quotas.get(Rank::Second, TypeId::UNIVERSAL) != 0
        {
            bad(
                "quotas",
                "universal type must have zero rank-1 and rank-2 quota".into(),
            );
        }
        if self.quotas.num_types() > num_types {
            let extra = (num_types + 1..=self.quotas.num_types()).any(|t| {
                self.quotas.get(Rank::First, TypeId(t)) + self.quotas.get(Rank::Second, TypeId(t))
                    > 0
            });
            if extra {
                bad("quotas", "quota given for an undeclared type".into());
            }
        }

        if let Some(cut) = self.acceptable_cutoff {
            if cut > n {
                bad(
                    "acceptable",
                    format!("cutoff {cut} exceeds student count {n}"),
                );
            }
        }
        if let Some(scores) = &self.scores {
            if scores.len() != n {
                bad(
                    "scores",
                    format!("{} scores for {} students", scores.len(), n),
                );
            }
            if scores.iter().any(|x| !x.is_finite()) {
                bad("scores", "scores must be finite".into());
            }
        }

        if out.is_empty() {
            Ok(())
        } else {
            Err(out)
        }
    }

    pub fn type_names(&self) -> &[String] {
        &self.type_names
    }

    /// Number of non-universal types.
    pub fn num_types(&self) -> usize {
        self.type_names.len()
    }

    pub fn students(&self) -> &[Student] {
        &self.students
    }

    pub fn student(&self, id: StudentId) -> &Student {
        &self.students[id.0]
    }

    pub fn num_students(&self) -> usize {
        self.students.len()
    }

    pub fn priority(&self) -> &[StudentId] {
        &self.priority
    }

    /// 0-based priority position (0 = highest).
    pub fn position(&self, id: StudentId) -> usize {
        self.position[id.0]
    }

    pub fn student_at(&self, position: usize) -> StudentId {
        self.priority[position]
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn quotas(&self) -> &QuotaTable {
        &self.quotas
    }

    pub fn acceptable_cutoff(&self) -> Option<usize> {
        self.acceptable_cutoff
    }

    pub fn scores(&self) -> Option<&[f64]> {
        self.scores.as_deref()
    }

    pub fn is_acceptable(&self, id: StudentId) -> bool {
        match self.acceptable_cutoff {
            Some(cut) => self.position(id) < cut,
            None => true,
        }
    }

    /// Acceptable students, highest priority first.
    pub fn acceptable(&self) -> Vec<StudentId> {
        let cut = self.acceptable_cutoff.unwrap_or(self.priority.len());
        self.priority[..cut.min(self.priority.len())].to_vec()
    }

    /// ψ: the sum of all rank-1 and rank-2 reserves.
    pub fn total_reserves(&self) -> usize {
        total_reserves(self)
    }

    /// Relabels students so that `StudentId(i)` is the i-th in priority order.
    pub fn canonicalized(&self) -> Instance {
        let types = self
            .priority
            .iter()
            .map(|s| self.students[s.0].types.clone())
            .collect();
        let scores = self
            .scores
            .as_ref()
            .map(|sc| self.priority.iter().map(|s| sc[s.0]).collect());
        Instance::in_priority_order(
            self.type_names.clone(),
            types,
            self.capacity,
            self.quotas.clone(),
        )
        .with_acceptable_cutoff(self.acceptable_cutoff)
        .with_scores(scores)
    }
}

/// ψ = Σ_t (rank-1 + rank-2 quota), universal type excluded.
pub fn total_reserves(instance: &Instance) -> usize {
    instance.quotas.rank_total(Rank::First) + instance.quotas.rank_total(Rank::Second)
}

/// The six-student worked instance used throughout the tests and docs:
/// capacity 3, one rank-1 seat each for t1 and t2, one rank-2 seat each for
/// t3 and t4, priority s1 > s2 > ... > s6.
pub fn worked_example() -> Instance {
    let t = |ids: &[usize]| ids.iter().map(|&i| TypeId(i)).collect::<BTreeSet<_>>();
    let types = vec![t(&[]), t(&[4]), t(&[3]), t(&[1, 2, 3]), t(&[1]), t(&[2, 3])];
    Instance::in_priority_order(
        vec!["t1".into(), "t2".into(), "t3".into(), "t4".into()],
        types,
        3,
        QuotaTable::from_type_counts(&[1, 1, 0, 0], &[0, 0, 1, 1]),
    )
}
