//! Exhaustive reference implementations for small graphs.
//!
//! Nothing here touches the flow solver: matchings are enumerated by plain
//! backtracking over students in priority order.

use std::collections::BTreeSet;

use rand::Rng;
use thiserror::Error;

use crate::engine::{build_graph, Matching, RankSignature, ReservationGraph};
use crate::model::{Instance, QuotaTable, Rank, StudentId, TypeId};

/// Bounds for listing every matching explicitly.
pub const MAX_LIST_STUDENTS: usize = 10;
pub const MAX_LIST_SEATS: usize = 12;

/// Bounds for the signature search. Seats of one (rank, type) are
/// interchangeable, so the search only ever fills the lowest free index of
/// each group and explores one matching per seat relabeling class.
pub const MAX_SEARCH_STUDENTS: usize = 10;
pub const MAX_SEARCH_SEATS: usize = 32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("graph with {students} students and {seats} seats exceeds the oracle bounds")]
    SizeLimitExceeded { students: usize, seats: usize },
    #[error("no matching within the cap covers every forced student")]
    InfeasibleForced,
}

fn check_bounds(
    graph: &ReservationGraph,
    max_students: usize,
    max_seats: usize,
) -> Result<(), OracleError> {
    let (students, seats) = (graph.students().len(), graph.seats().len());
    if students > max_students || seats > max_seats {
        return Err(OracleError::SizeLimitExceeded { students, seats });
    }
    Ok(())
}

/// Every matching of size at most the cap, the empty one included.
pub fn enumerate_matchings(graph: &ReservationGraph) -> Result<Vec<Matching>, OracleError> {
    check_bounds(graph, MAX_LIST_STUDENTS, MAX_LIST_SEATS)?;
    let adjacency: Vec<Vec<usize>> = (0..graph.students().len())
        .map(|s| graph.neighbors(s).collect())
        .collect();
    let mut used = vec![false; graph.seats().len()];
    let mut current = Vec::new();
    let mut out = Vec::new();
    list(graph, &adjacency, 0, &mut used, &mut current, &mut out);
    Ok(out)
}

fn list(
    graph: &ReservationGraph,
    adjacency: &[Vec<usize>],
    slot: usize,
    used: &mut [bool],
    current: &mut Vec<(StudentId, usize)>,
    out: &mut Vec<Matching>,
) {
    if slot == adjacency.len() {
        let pairs = current
            .iter()
            .map(|&(s, p)| (s, graph.seats()[p]))
            .collect();
        out.push(Matching::new(pairs));
        return;
    }
    list(graph, adjacency, slot + 1, used, current, out);
    if current.len() == graph.cap() {
        return;
    }
    for &p in &adjacency[slot] {
        if used[p] {
            continue;
        }
        used[p] = true;
        current.push((graph.students()[slot], p));
        list(graph, adjacency, slot + 1, used, current, out);
        current.pop();
        used[p] = false;
    }
}

struct Search<'a> {
    graph: &'a ReservationGraph,
    adjacency: Vec<Vec<usize>>,
    forced: Vec<bool>,
    used: Vec<bool>,
    counts: [usize; 3],
    size: usize,
    best: Option<RankSignature>,
}

impl Search<'_> {
    fn run(&mut self, slot: usize) {
        if slot == self.adjacency.len() {
            let sig = RankSignature::new(self.counts[0], self.counts[1], self.counts[2]);
            if self.best.is_none_or(|b| sig > b) {
                self.best = Some(sig);
            }
            return;
        }
        if !self.forced[slot] {
            self.run(slot + 1);
        }
        if self.size == self.graph.cap() {
            return;
        }
        for i in 0..self.adjacency[slot].len() {
            let p = self.adjacency[slot][i];
            let seat = self.graph.seats()[p];
            // lowest free index of its group only
            if self.used[p] || (seat.index > 0 && !self.used[p - 1]) {
                continue;
            }
            let r = seat.rank.number() as usize - 1;
            self.used[p] = true;
            self.counts[r] += 1;
            self.size += 1;
            self.run(slot + 1);
            self.size -= 1;
            self.counts[r] -= 1;
            self.used[p] = false;
        }
    }
}

/// Lexicographically largest signature over all matchings within the cap
/// that cover every forced student.
pub fn oracle_rank_max_signature(
    graph: &ReservationGraph,
    forced: &[StudentId],
) -> Result<RankSignature, OracleError> {
    check_bounds(graph, MAX_SEARCH_STUDENTS, MAX_SEARCH_SEATS)?;
    let mut mask = vec![false; graph.students().len()];
    for &s in forced {
        match graph.slot(s) {
            Some(slot) => mask[slot] = true,
            None => return Err(OracleError::InfeasibleForced),
        }
    }
    let mut search = Search {
        graph,
        adjacency: (0..graph.students().len())
            .map(|s| graph.neighbors(s).collect())
            .collect(),
        forced: mask,
        used: vec![false; graph.seats().len()],
        counts: [0; 3],
        size: 0,
        best: None,
    };
    search.run(0);
    search.best.ok_or(OracleError::InfeasibleForced)
}

/// Brute-force compatibility: forcing `forced` keeps the optimal signature.
pub fn oracle_is_compatible(
    graph: &ReservationGraph,
    forced: &[StudentId],
) -> Result<bool, OracleError> {
    let free = oracle_rank_max_signature(graph, &[])?;
    match oracle_rank_max_signature(graph, forced) {
        Ok(sig) => Ok(sig == free),
        Err(OracleError::InfeasibleForced) => Ok(false),
        Err(e) => Err(e),
    }
}

/// Greedy priority scan with every compatibility test answered by brute force.
pub fn oracle_as_select(instance: &Instance) -> Result<Vec<StudentId>, OracleError> {
    let pool = instance.acceptable();
    let graph = build_graph(instance, &pool);
    let free = oracle_rank_max_signature(&graph, &[])?;
    let mut chosen = Vec::new();
    for &s in &pool {
        chosen.push(s);
        let keep = match oracle_rank_max_signature(&graph, &chosen) {
            Ok(sig) => sig == free,
            Err(OracleError::InfeasibleForced) => false,
            Err(e) => return Err(e),
        };
        if !keep {
            chosen.pop();
        }
    }
    Ok(chosen)
}

/// Parameters of the random small-instance generator.
#[derive(Debug, Clone, Copy)]
pub struct SmallInstanceConfig {
    pub max_students: usize,
    pub max_types: usize,
    pub max_quota: usize,
    pub max_capacity: usize,
    pub membership: f64,
}

impl Default for SmallInstanceConfig {
    fn default() -> Self {
        SmallInstanceConfig {
            max_students: 8,
            max_types: 4,
            max_quota: 2,
            max_capacity: 5,
            membership: 0.5,
        }
    }
}

/// Student count uniform in [1, max_students], type count in [1, max_types],
/// independent membership, quotas uniform in [0, max_quota] per (type, rank),
/// capacity uniform in [1, max_capacity]. Priority is a random permutation.
pub fn random_small_instance<R: Rng>(rng: &mut R, config: &SmallInstanceConfig) -> Instance {
    let n = rng.random_range(1..=config.max_students);
    let k = rng.random_range(1..=config.max_types);
    let types: Vec<BTreeSet<TypeId>> = (0..n)
        .map(|_| {
            (1..=k)
                .filter(|_| rng.random_bool(config.membership))
                .map(TypeId)
                .collect()
        })
        .collect();
    let mut quotas = QuotaTable::zeros(k);
    for t in 1..=k {
        for rank in [Rank::First, Rank::Second] {
            quotas.set(rank, TypeId(t), rng.random_range(0..=config.max_quota));
        }
    }
    let capacity = rng.random_range(1..=config.max_capacity);
    let mut priority: Vec<StudentId> = (0..n).map(StudentId).collect();
    rand::seq::SliceRandom::shuffle(priority.as_mut_slice(), rng);
    let names = (1..=k).map(|t| format!("t{t}")).collect();
    Instance::new(names, types, priority, capacity, quotas)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::Seat;
    use crate::model::worked_example;

    fn ids(xs: &[usize]) -> Vec<StudentId> {
        xs.iter().map(|&i| StudentId(i - 1)).collect()
    }

    fn seat(t: usize, r: Rank) -> Seat {
        Seat::new(TypeId(t), r, 0)
    }

    #[test]
    fn worked_example_contains_listed_optima() {
        let ex = worked_example();
        let g = build_graph(&ex, ex.priority());
        let all = enumerate_matchings(&g).unwrap();
        let s = |i: usize| StudentId(i - 1);
        let listed = [
            vec![
                (s(2), seat(4, Rank::Second)),
                (s(4), seat(2, Rank::First)),
                (s(5), seat(1, Rank::First)),
            ],
            vec![
                (s(2), seat(4, Rank::Second)),
                (s(4), seat(1, Rank::First)),
                (s(6), seat(2, Rank::First)),
            ],
            vec![
                (s(3), seat(3, Rank::Second)),
                (s(4), seat(2, Rank::First)),
                (s(5), seat(1, Rank::First)),
            ],
            vec![
                (s(3), seat(3, Rank::Second)),
                (s(4), seat(1, Rank::First)),
                (s(6), seat(2, Rank::First)),
            ],
            vec![
                (s(4), seat(3, Rank::Second)),
                (s(5), seat(1, Rank::First)),
                (s(6), seat(2, Rank::First)),
            ],
        ];
        for m in listed {
            assert!(all.contains(&Matching::new(m)));
        }
        // t1 by s4|s5, t2 by s4|s6, one rank-2 seat from the remaining
        // students: (s5,s4)+{s2,s3,s6}, (s4,s6)+{s2,s3}, (s5,s6)+{s2,s3,s4}
        let optimal: Vec<_> = all
            .iter()
            .filter(|m| m.signature() == RankSignature::new(2, 1, 0))
            .collect();
        assert_eq!(optimal.len(), 8);
        let unique: BTreeSet<_> = all.iter().map(|m| m.pairs().to_vec()).collect();
        assert_eq!(unique.len(), all.len());
        for m in &all {
            g.check_matching(m).unwrap();
        }
    }

    #[test]
    fn no_reserves_leaves_universal_matchings() {
        let ex = worked_example().with_quotas(QuotaTable::zeros(4));
        let g = build_graph(&ex, &ids(&[1, 2]));
        let all = enumerate_matchings(&g).unwrap();
        assert!(all.contains(&Matching::default()));
        assert!(all
            .iter()
            .all(|m| m.pairs().iter().all(|(_, s)| s.ty.is_universal())));
        // 1 empty + 2*3 singletons + 3*2 pairs
        assert_eq!(all.len(), 13);
    }

    #[test]
    fn complete_two_by_two() {
        // two students of one type, two rank-1 seats of it, cap 2; matchings
        // touching the universal seats are filtered out
        let inst = Instance::in_priority_order(
            vec!["a".into()],
            vec![
                [TypeId(1)].into_iter().collect(),
                [TypeId(1)].into_iter().collect(),
            ],
            2,
            QuotaTable::from_type_counts(&[2], &[0]),
        );
        let g = build_graph(&inst, inst.priority());
        let reserved_only: BTreeSet<_> = enumerate_matchings(&g)
            .unwrap()
            .into_iter()
            .filter(|m| m.pairs().iter().all(|(_, s)| !s.ty.is_universal()))
            .map(|m| m.pairs().to_vec())
            .collect();
        assert_eq!(reserved_only.len(), 7);
    }

    #[test]
    fn signature_examples() {
        let ex = worked_example();
        let g = build_graph(&ex, ex.priority());
        assert_eq!(
            oracle_rank_max_signature(&g, &[]).unwrap(),
            RankSignature::new(2, 1, 0)
        );
        assert_eq!(
            oracle_rank_max_signature(&g, &ids(&[1, 2, 3])).unwrap(),
            RankSignature::new(0, 2, 1)
        );
        assert_eq!(
            oracle_rank_max_signature(&g, &ids(&[1, 2, 3, 4])),
            Err(OracleError::InfeasibleForced)
        );
        let bare = ex.with_quotas(QuotaTable::zeros(4));
        let g = build_graph(&bare, &ids(&[1, 2]));
        assert_eq!(
            oracle_rank_max_signature(&g, &[]).unwrap(),
            RankSignature::new(0, 0, 2)
        );
    }

    #[test]
    fn as_select_examples() {
        assert_eq!(
            oracle_as_select(&worked_example()).unwrap(),
            ids(&[2, 4, 5])
        );
        let bare = worked_example().with_quotas(QuotaTable::zeros(4));
        assert_eq!(oracle_as_select(&bare).unwrap(), ids(&[1, 2, 3]));
    }

    #[test]
    fn bounds_enforced() {
        let inst = Instance::in_priority_order(
            vec!["a".into()],
            vec![BTreeSet::new(); 11],
            2,
            QuotaTable::zeros(1),
        );
        let g = build_graph(&inst, inst.priority());
        assert!(matches!(
            enumerate_matchings(&g),
            Err(OracleError::SizeLimitExceeded { .. })
        ));
        assert!(matches!(
            oracle_rank_max_signature(&g, &[]),
            Err(OracleError::SizeLimitExceeded { .. })
        ));
    }

    #[test]
    fn reduced_search_agrees_with_full_listing() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let cfg = SmallInstanceConfig {
            max_students: 6,
            max_types: 3,
            max_quota: 1,
            max_capacity: 3,
            membership: 0.5,
        };
        let mut checked = 0;
        while checked < 200 {
            let inst = random_small_instance(&mut rng, &cfg);
            let g = build_graph(&inst, inst.priority());
            let Ok(all) = enumerate_matchings(&g) else {
                continue;
            };
            let best = all.iter().map(|m| m.signature()).max().unwrap();
            assert_eq!(oracle_rank_max_signature(&g, &[]).unwrap(), best);
            checked += 1;
        }
    }
}
