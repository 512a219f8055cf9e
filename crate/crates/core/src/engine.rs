//! Ranked reservation graphs and rank-maximal matchings under a global
//! cardinality cap, with optional forced students.
//!
//! Seats of the same (rank, type) are interchangeable, and so are students
//! holding the same type set. The solver therefore works on a compressed
//! network `source -> cap -> student class -> seat group -> sink` and expands
//! the resulting flow back into a seat-level matching with a fixed
//! tie-breaking rule: students are taken in priority order and seat groups in
//! (rank, type) order, seat indices handed out in priority order.

use std::collections::{BTreeSet, HashMap};
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::flow::{Cost, FlowNetwork};
use crate::model::{Instance, Rank, StudentId, TypeId};

/// One reserved seat `v^rank_{type,index}`; `index` is 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Seat {
    pub rank: Rank,
    pub ty: TypeId,
    pub index: usize,
}

impl Seat {
    pub fn new(ty: TypeId, rank: Rank, index: usize) -> Self {
        Seat { rank, ty, index }
    }
}

impl fmt::Display for Seat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}_{}_{}", self.rank.number(), self.ty, self.index + 1)
    }
}

/// Matched-seat counts per rank, ordered lexicographically.
#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct RankSignature {
    pub first: usize,
    pub second: usize,
    pub third: usize,
}

impl RankSignature {
    pub fn new(first: usize, second: usize, third: usize) -> Self {
        RankSignature {
            first,
            second,
            third,
        }
    }

    pub fn count(&self, rank: Rank) -> usize {
        match rank {
            Rank::First => self.first,
            Rank::Second => self.second,
            Rank::Third => self.third,
        }
    }

    /// Rank-1 plus rank-2 seats.
    pub fn reserved(&self) -> usize {
        self.first + self.second
    }

    pub fn total(&self) -> usize {
        self.first + self.second + self.third
    }

    fn bump(&mut self, rank: Rank, by: usize) {
        match rank {
            Rank::First => self.first += by,
            Rank::Second => self.second += by,
            Rank::Third => self.third += by,
        }
    }
}

impl fmt::Display for RankSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.first, self.second, self.third)
    }
}

/// A set of student-seat pairs, kept sorted by student id.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Matching {
    pairs: Vec<(StudentId, Seat)>,
}

impl Matching {
    pub fn new(mut pairs: Vec<(StudentId, Seat)>) -> Self {
        pairs.sort();
        Matching { pairs }
    }

    pub fn pairs(&self) -> &[(StudentId, Seat)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn students(&self) -> impl Iterator<Item = StudentId> + '_ {
        self.pairs.iter().map(|p| p.0)
    }

    pub fn seat_of(&self, student: StudentId) -> Option<Seat> {
        self.pairs
            .binary_search_by_key(&student, |p| p.0)
            .ok()
            .map(|i| self.pairs[i].1)
    }

    pub fn signature(&self) -> RankSignature {
        signature(self)
    }
}

/// Counts matched seats by rank; universal seats count as rank 3.
pub fn signature(matching: &Matching) -> RankSignature {
    let mut sig = RankSignature::default();
    for (_, seat) in &matching.pairs {
        sig.bump(seat.rank, 1);
    }
    sig
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct SeatGroup {
    rank: Rank,
    ty: TypeId,
    start: usize,
    len: usize,
}

/// Bipartite graph between a student subset and ranked seats, with a cap on
/// the matching size.
///
/// Seats are stored in (rank, type, index) order: all rank-1 seats, then
/// rank-2, then the `cap` rank-3 seats of the universal type.
#[derive(Debug, Clone)]
pub struct ReservationGraph {
    students: Vec<StudentId>,
    slot_of: HashMap<StudentId, usize>,
    seats: Vec<Seat>,
    groups: Vec<SeatGroup>,
    eligible: Vec<Vec<usize>>,
    cap: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("{forced} forced students exceed the matching cap {cap}")]
    InfeasibleForced { forced: usize, cap: usize },
    #[error("{0} is not a vertex of the graph")]
    UnknownStudent(StudentId),
}

/// Builds the ranked reservation graph of `instance` restricted to `subset`.
/// Students are ordered by the instance's priority; duplicates are ignored.
pub fn build_graph(instance: &Instance, subset: &[StudentId]) -> ReservationGraph {
    let mut students: Vec<StudentId> = subset
        .iter()
        .copied()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    students.sort_by_key(|&s| instance.position(s));

    let mut seats = Vec::new();
    let mut groups = Vec::new();
    for rank in [Rank::First, Rank::Second] {
        for t in 1..=instance.num_types() {
            let ty = TypeId(t);
            let len = instance.quotas().get(rank, ty);
            if len == 0 {
                continue;
            }
            groups.push(SeatGroup {
                rank,
                ty,
                start: seats.len(),
                len,
            });
            seats.extend((0..len).map(|i| Seat::new(ty, rank, i)));
        }
    }
    let cap = instance.capacity();
    groups.push(SeatGroup {
        rank: Rank::Third,
        ty: TypeId::UNIVERSAL,
        start: seats.len(),
        len: cap,
    });
    seats.extend((0..cap).map(|i| Seat::new(TypeId::UNIVERSAL, Rank::Third, i)));

    let eligible = students
        .iter()
        .map(|&s| {
            let st = instance.student(s);
            groups
                .iter()
                .enumerate()
                .filter(|(_, g)| st.has_type(g.ty))
                .map(|(gi, _)| gi)
                .collect()
        })
        .collect();
    let slot_of = students.iter().enumerate().map(|(i, &s)| (s, i)).collect();

    ReservationGraph {
        students,
        slot_of,
        seats,
        groups,
        eligible,
        cap,
    }
}

impl ReservationGraph {
    /// Students in priority order.
    pub fn students(&self) -> &[StudentId] {
        &self.students
    }

    pub fn seats(&self) -> &[Seat] {
        &self.seats
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn contains(&self, student: StudentId) -> bool {
        self.slot_of.contains_key(&student)
    }

    /// Seat positions (into [`ReservationGraph::seats`]) adjacent to the
    /// student at priority slot `slot`.
    pub fn neighbors(&self, slot: usize) -> impl Iterator<Item = usize> + '_ {
        self.eligible[slot].iter().flat_map(move |&g| {
            let grp = &self.groups[g];
            grp.start..grp.start + grp.len
        })
    }

    /// The 0-based position of the student within the graph's student list.
    pub fn slot(&self, student: StudentId) -> Option<usize> {
        self.slot_of.get(&student).copied()
    }

    pub fn seat_position(&self, seat: &Seat) -> Option<usize> {
        self.groups
            .iter()
            .find(|g| g.rank == seat.rank && g.ty == seat.ty)
            .filter(|g| seat.index < g.len)
            .map(|g| g.start + seat.index)
    }

    pub fn has_edge(&self, student: StudentId, seat: &Seat) -> bool {
        let Some(slot) = self.slot(student) else {
            return false;
        };
        self.eligible[slot].iter().any(|&g| {
            let grp = &self.groups[g];
            grp.rank == seat.rank && grp.ty == seat.ty && seat.index < grp.len
        })
    }

    pub fn edge_count(&self) -> usize {
        (0..self.students.len())
            .map(|s| self.neighbors(s).count())
            .sum()
    }

    /// Checks every matching invariant against this graph.
    pub fn check_matching(&self, matching: &Matching) -> Result<(), String> {
        if matching.len() > self.cap {
            return Err(format!("{} pairs exceed cap {}", matching.len(), self.cap));
        }
        let mut students = BTreeSet::new();
        let mut seats = BTreeSet::new();
        for (s, seat) in matching.pairs() {
            if !students.insert(*s) {
                return Err(format!("{s} matched twice"));
            }
            if !seats.insert(*seat) {
                return Err(format!("{seat} matched twice"));
            }
            if !self.has_edge(*s, seat) {
                return Err(format!("({s}, {seat}) is not an edge"));
            }
        }
        Ok(())
    }

    /// Debug dump: one `student seat rank` line per edge.
    pub fn edge_list(&self) -> String {
        let mut out = String::new();
        for (slot, s) in self.students.iter().enumerate() {
            for p in self.neighbors(slot) {
                let seat = &self.seats[p];
                let _ = writeln!(out, "{s} {seat} {}", seat.rank.number());
            }
        }
        out
    }
}

struct FlowPlan {
    signature: RankSignature,
    /// Per class: (forced matched, unforced matched, flow per eligible group).
    classes: Vec<(usize, usize, Vec<usize>)>,
}

/// Rank-maximal matching solver bound to one graph. Precomputes the student
/// classes and the unconstrained optimum so that repeated compatibility
/// queries stay cheap.
pub struct RankMaximalSolver<'g> {
    graph: &'g ReservationGraph,
    class_groups: Vec<Vec<usize>>,
    class_members: Vec<Vec<usize>>,
    class_of: Vec<usize>,
    best: RankSignature,
}

impl<'g> RankMaximalSolver<'g> {
    pub fn new(graph: &'g ReservationGraph) -> Self {
        let mut index: HashMap<&[usize], usize> = HashMap::new();
        let mut class_groups = Vec::new();
        let mut class_members: Vec<Vec<usize>> = Vec::new();
        let mut class_of = Vec::with_capacity(graph.students.len());
        for (slot, groups) in graph.eligible.iter().enumerate() {
            let c = *index.entry(groups.as_slice()).or_insert_with(|| {
                class_groups.push(groups.clone());
                class_members.push(Vec::new());
                class_groups.len() - 1
            });
            class_members[c].push(slot);
            class_of.push(c);
        }
        let mut solver = RankMaximalSolver {
            graph,
            class_groups,
            class_members,
            class_of,
            best: RankSignature::default(),
        };
        solver.best = solver.plan(&[]).signature;
        solver
    }

    pub fn graph(&self) -> &ReservationGraph {
        self.graph
    }

    /// Signature of the unconstrained rank-maximal matching.
    pub fn best_signature(&self) -> RankSignature {
        self.best
    }

    fn forced_counts(&self, forced: &[StudentId]) -> Result<Vec<usize>, EngineError> {
        let mut seen = BTreeSet::new();
        let mut counts = vec![0; self.class_groups.len()];
        for &s in forced {
            let slot = self.graph.slot(s).ok_or(EngineError::UnknownStudent(s))?;
            if seen.insert(slot) {
                counts[self.class_of[slot]] += 1;
            }
        }
        if seen.len() > self.graph.cap {
            return Err(EngineError::InfeasibleForced {
                forced: seen.len(),
                cap: self.graph.cap,
            });
        }
        Ok(counts)
    }

    fn plan(&self, forced_per_class: &[usize]) -> FlowPlan {
        let k = self.class_groups.len();
        let g = self.graph.groups.len();
        let (source, capped) = (0, 1);
        let class_node = |c: usize| 2 + c;
        let group_node = |gi: usize| 2 + k + gi;
        let sink = 2 + k + g;
        let mut net = FlowNetwork::new(sink + 1);
        net.add_arc(source, capped, self.graph.cap as i64, Cost::ZERO);

        let mut class_arcs = Vec::with_capacity(k);
        for c in 0..k {
            let size = self.class_members[c].len();
            let f = forced_per_class.get(c).copied().unwrap_or(0);
            let forced_arc =
                (f > 0).then(|| net.add_arc(capped, class_node(c), f as i64, -Cost::unit(0)));
            let free_arc = (size > f)
                .then(|| net.add_arc(capped, class_node(c), (size - f) as i64, Cost::ZERO));
            let to_groups: Vec<usize> = self.class_groups[c]
                .iter()
                .map(|&gi| net.add_arc(class_node(c), group_node(gi), size as i64, Cost::ZERO))
                .collect();
            class_arcs.push((forced_arc, free_arc, to_groups));
        }
        let group_arcs: Vec<usize> = self
            .graph
            .groups
            .iter()
            .enumerate()
            .map(|(gi, grp)| {
                let profit = Cost::unit(grp.rank.number() as usize);
                net.add_arc(group_node(gi), sink, grp.len as i64, -profit)
            })
            .collect();

        net.min_cost_flow(source, sink);

        let mut signature = RankSignature::default();
        for (gi, &a) in group_arcs.iter().enumerate() {
            signature.bump(self.graph.groups[gi].rank, net.flow(a) as usize);
        }
        let classes = class_arcs
            .into_iter()
            .map(|(fa, ua, to_groups)| {
                let forced = fa.map_or(0, |a| net.flow(a) as usize);
                let free = ua.map_or(0, |a| net.flow(a) as usize);
                let per_group = to_groups.iter().map(|&a| net.flow(a) as usize).collect();
                (forced, free, per_group)
            })
            .collect();
        FlowPlan { signature, classes }
    }

    /// Signature of the best matching that covers every forced student.
    pub fn signature_with(&self, forced: &[StudentId]) -> Result<RankSignature, EngineError> {
        let counts = self.forced_counts(forced)?;
        let plan = self.plan(&counts);
        debug_assert!(plan.classes.iter().zip(&counts).all(|(c, &f)| c.0 == f));
        Ok(plan.signature)
    }

    /// Whether some rank-maximal matching covers every forced student.
    pub fn is_compatible(&self, forced: &[StudentId]) -> bool {
        self.signature_with(forced)
            .is_ok_and(|sig| sig == self.best)
    }

    /// The canonical rank-maximal matching among those covering `forced`.
    pub fn solve(&self, forced: &[StudentId]) -> Result<Matching, EngineError> {
        let counts = self.forced_counts(forced)?;
        let forced_slots: BTreeSet<usize> =
            forced.iter().filter_map(|&s| self.graph.slot(s)).collect();
        let plan = self.plan(&counts);

        // (priority slot, group) for every matched student
        let mut chosen: Vec<(usize, usize)> = Vec::new();
        for (c, (_, free, per_group)) in plan.classes.iter().enumerate() {
            let mut free_left = *free;
            let matched: Vec<usize> = self.class_members[c]
                .iter()
                .copied()
                .filter(|slot| {
                    if forced_slots.contains(slot) {
                        true
                    } else if free_left > 0 {
                        free_left -= 1;
                        true
                    } else {
                        false
                    }
                })
                .collect();
            let mut targets = self.class_groups[c].iter().zip(per_group.iter().copied());
            let mut current = targets.next();
            for slot in matched {
                while let Some((_, 0)) = current {
                    current = targets.next();
                }
                let (&gi, left) = current.as_mut().expect("flow conservation at class node");
                *left -= 1;
                chosen.push((slot, gi));
            }
        }
        chosen.sort();

        let mut used = vec![0usize; self.graph.groups.len()];
        let pairs = chosen
            .into_iter()
            .map(|(slot, gi)| {
                let grp = &self.graph.groups[gi];
                let seat = Seat::new(grp.ty, grp.rank, used[gi]);
                used[gi] += 1;
                (self.graph.students[slot], seat)
            })
            .collect();
        Ok(Matching::new(pairs))
    }
}

/// Rank-maximal matching of size at most the graph cap that matches every
/// forced student. With no forced students this is the unconstrained optimum.
pub fn rank_maximal_matching(
    graph: &ReservationGraph,
    forced: &[StudentId],
) -> Result<Matching, EngineError> {
    RankMaximalSolver::new(graph).solve(forced)
}

/// True iff some matching of size at most the cap matches all of `forced` and
/// attains the unconstrained rank-maximal signature.
pub fn is_compatible(graph: &ReservationGraph, forced: &[StudentId]) -> bool {
    RankMaximalSolver::new(graph).is_compatible(forced)
}
