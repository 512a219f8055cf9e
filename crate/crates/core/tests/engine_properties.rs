//! Property tests: the flow-based engine against brute-force search on small
//! random instances.

use std::collections::BTreeSet;

use divsel_core::algorithms::a_s_select;
use divsel_core::oracle::{oracle_as_select, oracle_is_compatible, oracle_rank_max_signature};
use divsel_core::{
    build_graph, is_compatible, rank_maximal_matching, Instance, QuotaTable, Rank, StudentId,
    TypeId,
};
use proptest::prelude::*;

/// Up to 8 students, 4 types, quotas ≤ 2 per (type, rank), capacity ≤ 4.
fn small_instance() -> impl Strategy<Value = Instance> {
    (1usize..=8, 1usize..=4).prop_flat_map(|(n, k)| {
        (
            prop::collection::vec(0u8..(1 << k), n),
            prop::collection::vec(0usize..=2, 2 * k),
            1usize..=4,
            Just((0..n).map(StudentId).collect::<Vec<_>>()).prop_shuffle(),
        )
            .prop_map(move |(masks, q, capacity, priority)| {
                let types: Vec<BTreeSet<TypeId>> = masks
                    .iter()
                    .map(|m| {
                        (1..=k)
                            .filter(|t| m & (1 << (t - 1)) != 0)
                            .map(TypeId)
                            .collect()
                    })
                    .collect();
                let quotas = QuotaTable::from_type_counts(&q[..k], &q[k..]);
                let names = (1..=k).map(|t| format!("t{t}")).collect();
                Instance::new(names, types, priority, capacity, quotas)
            })
    })
}

/// An instance together with an arbitrary subset of its students.
fn instance_and_subset() -> impl Strategy<Value = (Instance, Vec<StudentId>)> {
    small_instance().prop_flat_map(|inst| {
        let n = inst.num_students();
        (Just(inst), prop::collection::vec(any::<bool>(), n)).prop_map(|(inst, pick)| {
            let subset = inst
                .priority()
                .iter()
                .copied()
                .filter(|s| pick[s.0])
                .collect();
            (inst, subset)
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn unconstrained_signature_matches_search(inst in small_instance()) {
        let g = build_graph(&inst, inst.priority());
        let m = rank_maximal_matching(&g, &[]).unwrap();
        prop_assert!(g.check_matching(&m).is_ok());
        prop_assert_eq!(m.signature(), oracle_rank_max_signature(&g, &[]).unwrap());
    }

    #[test]
    fn forced_signature_matches_search((inst, forced) in instance_and_subset()) {
        let g = build_graph(&inst, inst.priority());
        match rank_maximal_matching(&g, &forced) {
            Ok(m) => {
                prop_assert!(g.check_matching(&m).is_ok());
                for s in &forced {
                    prop_assert!(m.seat_of(*s).is_some(), "forced {} unmatched", s);
                }
                prop_assert_eq!(m.signature(), oracle_rank_max_signature(&g, &forced).unwrap());
            }
            Err(_) => prop_assert!(forced.len() > inst.capacity()),
        }
    }

    #[test]
    fn compatibility_matches_search((inst, forced) in instance_and_subset()) {
        let g = build_graph(&inst, inst.priority());
        prop_assert_eq!(is_compatible(&g, &forced), oracle_is_compatible(&g, &forced).unwrap());
    }

    #[test]
    fn forcing_never_improves_the_signature((inst, forced) in instance_and_subset()) {
        let g = build_graph(&inst, inst.priority());
        let free = rank_maximal_matching(&g, &[]).unwrap().signature();
        if let Ok(m) = rank_maximal_matching(&g, &forced) {
            prop_assert!(m.signature() <= free);
        }
    }

    #[test]
    fn compatibility_is_closed_under_subsets((inst, forced) in instance_and_subset()) {
        let g = build_graph(&inst, inst.priority());
        if is_compatible(&g, &forced) {
            for drop in 0..forced.len() {
                let mut fewer = forced.clone();
                fewer.remove(drop);
                prop_assert!(is_compatible(&g, &fewer));
            }
        }
    }

    #[test]
    fn a_s_matches_brute_force_scan(inst in small_instance()) {
        let out = a_s_select(&inst);
        prop_assert_eq!(&out.selected, &oracle_as_select(&inst).unwrap());
        let g = build_graph(&inst, inst.priority());
        prop_assert_eq!(out.signature(), oracle_rank_max_signature(&g, &[]).unwrap());
        prop_assert!(out.selected.len() <= inst.capacity());
    }

    #[test]
    fn subgraph_signatures_agree((inst, subset) in instance_and_subset()) {
        let g = build_graph(&inst, &subset);
        let m = rank_maximal_matching(&g, &[]).unwrap();
        prop_assert!(m.students().all(|s| subset.contains(&s)));
        prop_assert_eq!(m.signature(), oracle_rank_max_signature(&g, &[]).unwrap());
    }
}

#[test]
fn universal_seats_absorb_everyone_when_reserves_are_empty() {
    let types = vec![BTreeSet::new(); 5];
    let inst = Instance::in_priority_order(vec!["a".into()], types, 3, QuotaTable::zeros(1));
    let g = build_graph(&inst, inst.priority());
    let m = rank_maximal_matching(&g, &[]).unwrap();
    assert_eq!(
        (
            m.signature().first,
            m.signature().second,
            m.signature().third
        ),
        (0, 0, 3)
    );
    assert!(m.pairs().iter().all(|(_, seat)| seat.rank == Rank::Third));
}
