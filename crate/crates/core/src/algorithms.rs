//! The six selection rules compared by the harness.
//!
//! | tag    | rule                                                            |
//! |--------|-----------------------------------------------------------------|
//! | `as`   | greedy priority scan keeping a rank-maximal matching reachable  |
//! | `ehyy` | three greedy passes: rank-1 seats, rank-2 seats, then capacity  |
//! | `sy1`  | `as` on rank-1 reserves only                                    |
//! | `sy2`  | `as` on rank-1 and rank-2 reserves merged into one rank         |
//! | `pog`  | top `q_c` by priority, seated greedily                          |
//! | `pos`  | top `q_c` by priority, seated rank-maximally                    |

use std::fmt;
use std::str::FromStr;

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::engine::{build_graph, Matching, RankMaximalSolver, RankSignature, Seat};
use crate::model::{Instance, Rank, StudentId, TypeId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Algorithm {
    As,
    Ehyy,
    Sy1,
    Sy2,
    Pog,
    Pos,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::As,
        Algorithm::Ehyy,
        Algorithm::Sy1,
        Algorithm::Sy2,
        Algorithm::Pog,
        Algorithm::Pos,
    ];

    /// Short lowercase tag used on the command line and in files.
    pub fn tag(self) -> &'static str {
        match self {
            Algorithm::As => "as",
            Algorithm::Ehyy => "ehyy",
            Algorithm::Sy1 => "sy1",
            Algorithm::Sy2 => "sy2",
            Algorithm::Pog => "pog",
            Algorithm::Pos => "pos",
        }
    }

    /// Display name used in tables.
    pub fn label(self) -> &'static str {
        match self {
            Algorithm::As => "A-S",
            Algorithm::Ehyy => "EHYY",
            Algorithm::Sy1 => "SY1",
            Algorithm::Sy2 => "SY2",
            Algorithm::Pog => "POG",
            Algorithm::Pos => "POS",
        }
    }

    pub fn run(self, instance: &Instance) -> Outcome {
        match self {
            Algorithm::As => a_s_select(instance),
            Algorithm::Ehyy => ehyy_select(instance),
            Algorithm::Sy1 => sy1_select(instance),
            Algorithm::Sy2 => sy2_select(instance),
            Algorithm::Pog => pog_select(instance),
            Algorithm::Pos => pos_select(instance),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown algorithm tag `{0}` (expected one of as, ehyy, sy1, sy2, pog, pos)")]
pub struct UnknownAlgorithm(pub String);

impl FromStr for Algorithm {
    type Err = UnknownAlgorithm;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        Algorithm::ALL
            .into_iter()
            .find(|a| a.tag() == lower || a.label().eq_ignore_ascii_case(&lower))
            .ok_or_else(|| UnknownAlgorithm(s.to_string()))
    }
}

/// Result of one selection rule on one instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub algorithm: Algorithm,
    /// Selected students, highest priority first.
    pub selected: Vec<StudentId>,
    pub matching: Matching,
}

impl Outcome {
    fn new(algorithm: Algorithm, instance: &Instance, matching: Matching) -> Self {
        let mut selected: Vec<StudentId> = matching.students().collect();
        selected.sort_by_key(|&s| instance.position(s));
        Outcome {
            algorithm,
            selected,
            matching,
        }
    }

    pub fn signature(&self) -> RankSignature {
        self.matching.signature()
    }
}

/// Scans the acceptable students by priority and keeps each one whose
/// addition still admits a rank-maximal matching covering everyone kept.
fn greedy_rank_maximal(instance: &Instance) -> (Vec<StudentId>, Matching) {
    let pool = instance.acceptable();
    let graph = build_graph(instance, &pool);
    let solver = RankMaximalSolver::new(&graph);
    let mut chosen: Vec<StudentId> = Vec::with_capacity(graph.cap());
    for &s in &pool {
        if chosen.len() == graph.cap() {
            break;
        }
        chosen.push(s);
        if !solver.is_compatible(&chosen) {
            chosen.pop();
        }
    }
    let matching = solver
        .solve(&chosen)
        .expect("selection never exceeds the cap");
    (chosen, matching)
}

/// Rank-maximal seating of exactly `chosen`.
fn seat_rank_maximally(instance: &Instance, chosen: &[StudentId]) -> Matching {
    let graph = build_graph(instance, chosen);
    RankMaximalSolver::new(&graph)
        .solve(chosen)
        .expect("selection never exceeds the cap")
}

pub fn a_s_select(instance: &Instance) -> Outcome {
    let (_, matching) = greedy_rank_maximal(instance);
    Outcome::new(Algorithm::As, instance, matching)
}

/// Seat choice when several types offer a free seat of the current rank.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieBreak {
    /// Lowest type id first.
    #[default]
    LowestType,
    /// Uniformly random among eligible types, seeded.
    Random(u64),
}

/// Free-seat bookkeeping shared by the greedy rules.
struct SeatPool {
    used: [Vec<usize>; 2],
    universal_used: usize,
}

impl SeatPool {
    fn new(instance: &Instance) -> Self {
        let n = instance.num_types() + 1;
        SeatPool {
            used: [vec![0; n], vec![0; n]],
            universal_used: 0,
        }
    }

    fn free_types(&self, instance: &Instance, student: StudentId, rank: Rank) -> Vec<TypeId> {
        let used = &self.used[rank.number() as usize - 1];
        instance
            .student(student)
            .types
            .iter()
            .copied()
            .filter(|t| used[t.0] < instance.quotas().get(rank, *t))
            .collect()
    }

    fn take(&mut self, rank: Rank, ty: TypeId) -> Seat {
        let used = &mut self.used[rank.number() as usize - 1][ty.0];
        let seat = Seat::new(ty, rank, *used);
        *used += 1;
        seat
    }

    fn take_universal(&mut self) -> Seat {
        let seat = Seat::new(TypeId::UNIVERSAL, Rank::Third, self.universal_used);
        self.universal_used += 1;
        seat
    }
}

fn pick_type(options: &[TypeId], rng: &mut Option<ChaCha8Rng>) -> Option<TypeId> {
    match rng {
        None => options.first().copied(),
        Some(r) => options.choose(r).copied(),
    }
}

pub fn ehyy_select(instance: &Instance) -> Outcome {
    ehyy_select_with(instance, TieBreak::LowestType)
}

/// EHYY with an explicit tie-breaking rule.
pub fn ehyy_select_with(instance: &Instance, tie_break: TieBreak) -> Outcome {
    let mut rng = match tie_break {
        TieBreak::LowestType => None,
        TieBreak::Random(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
    };
    let pool = instance.acceptable();
    let cap = instance.capacity();
    let mut seats = SeatPool::new(instance);
    let mut taken = vec![false; instance.num_students()];
    let mut pairs = Vec::new();

    for rank in [Rank::First, Rank::Second] {
        for &s in &pool {
            if pairs.len() == cap {
                break;
            }
            if taken[s.0] {
                continue;
            }
            let options = seats.free_types(instance, s, rank);
            if let Some(ty) = pick_type(&options, &mut rng) {
                taken[s.0] = true;
                pairs.push((s, seats.take(rank, ty)));
            }
        }
    }
    for &s in &pool {
        if pairs.len() == cap {
            break;
        }
        if !taken[s.0] {
            taken[s.0] = true;
            pairs.push((s, seats.take_universal()));
        }
    }
    Outcome::new(Algorithm::Ehyy, instance, Matching::new(pairs))
}

/// The reported matching uses only rank-1 and universal seats.
pub fn sy1_select(instance: &Instance) -> Outcome {
    let reduced = instance.with_quotas(instance.quotas().first_rank_only());
    let (_, matching) = greedy_rank_maximal(&reduced);
    Outcome::new(Algorithm::Sy1, instance, matching)
}

/// Selection on the merged reserves; the chosen students are then seated on
/// the original two-rank seats rank-maximally, which keeps the merged fill
/// and uses a type's rank-1 seats before its rank-2 seats.
pub fn sy2_select(instance: &Instance) -> Outcome {
    let merged = instance.with_quotas(instance.quotas().merged());
    let (chosen, _) = greedy_rank_maximal(&merged);
    let matching = seat_rank_maximally(instance, &chosen);
    Outcome::new(Algorithm::Sy2, instance, matching)
}

fn top_by_priority(instance: &Instance) -> Vec<StudentId> {
    let mut pool = instance.acceptable();
    pool.truncate(instance.capacity());
    pool
}

pub fn pog_select(instance: &Instance) -> Outcome {
    let mut seats = SeatPool::new(instance);
    let mut rng = None;
    let pairs = top_by_priority(instance)
        .into_iter()
        .map(|s| {
            let seat = [Rank::First, Rank::Second]
                .into_iter()
                .find_map(|rank| {
                    pick_type(&seats.free_types(instance, s, rank), &mut rng).map(|t| (rank, t))
                })
                .map(|(rank, ty)| seats.take(rank, ty))
                .unwrap_or_else(|| seats.take_universal());
            (s, seat)
        })
        .collect();
    Outcome::new(Algorithm::Pog, instance, Matching::new(pairs))
}

pub fn pos_select(instance: &Instance) -> Outcome {
    let chosen = top_by_priority(instance);
    let matching = seat_rank_maximally(instance, &chosen);
    Outcome::new(Algorithm::Pos, instance, matching)
}
