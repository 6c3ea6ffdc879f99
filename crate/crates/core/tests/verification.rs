use gossiplab_core::matrix::UpdateKind;
use gossiplab_core::sim::{replay, run_trials, Arithmetic};
use gossiplab_core::verify::*;
use gossiplab_core::*;

#[test]
fn odd_symmetric_products_never_reach_consensus() {
    let r = enumerate_products(3, 10, FamilyKind::M2Star, DEFAULT_CEILING).unwrap();
    assert!(r.passed(), "{:?}", r.violations);
    assert!(r.finite_consensus_chains.is_empty());
    assert_eq!(r.chains_checked, (1..=10).map(|d| 3u128.pow(d)).sum::<u128>());
    assert!(r.min_delta_seen > 0.0);
}

#[test]
fn four_nodes_admit_finite_consensus() {
    let r = enumerate_products(4, 6, FamilyKind::M2Star, DEFAULT_CEILING).unwrap();
    // even n: finite consensus is allowed and is reported, not counted as a violation
    assert!(r.passed());
    let witness = r.finite_consensus_chains.first().expect("a witness exists");
    assert_eq!(witness.len(), 4);
    assert_eq!(r.min_delta_seen, 0.0);

    // replaying the witness on arbitrary states reaches exact agreement at the average
    let ups: Vec<UpdateMatrix> = witness
        .iter()
        .map(|&k| match k {
            UpdateKind::Symmetric { i, j } => UpdateMatrix::symmetric(i, j, 4).unwrap(),
            other => panic!("unexpected {other:?}"),
        })
        .collect();
    let x0 = [0.125, -3.0, 7.5, 0.3];
    let states = replay(&x0, &ups, Arithmetic::Dyadic).unwrap();
    let last = states.last().unwrap();
    assert!(last.is_exact_consensus());
    assert_eq!(last.exact_sum(), states[0].exact_sum());
    assert!(states.iter().all(|s| s.sum_history_exact() == Some(true)));
}

#[test]
fn single_updates_have_unit_delta() {
    for family in [FamilyKind::M2Star, FamilyKind::M1, FamilyKind::M] {
        for n in [3, 4, 5] {
            let r = enumerate_products(n, 1, family, DEFAULT_CEILING).unwrap();
            assert_eq!(r.min_delta_seen, 1.0, "{family:?} n={n}");
        }
    }
}

#[test]
fn masquerading_asymmetric_update_is_caught() {
    let mut members = FamilyKind::M2Star.members(3).unwrap();
    members[1].actual = UpdateMatrix::asymmetric(0, 2, 3).unwrap();
    let r = enumerate_members(3, &members, 4, "m2_star+fault", DEFAULT_CEILING).unwrap();
    assert!(!r.passed());
    let v = r
        .violations
        .iter()
        .find(|v| v.kind == ViolationKind::NotDoublyStochastic)
        .expect("double stochasticity breaks");
    assert!(v.chain.contains(&members[1].claimed.kind));
    // the chain serializes as (kind, i, j) triples
    let json = serde_json::to_string(&v.chain).unwrap();
    assert!(json.starts_with("[[\"symmetric\","));
}

#[test]
fn ceiling_reports_inconclusive_not_failure() {
    let r = enumerate_products(5, 6, FamilyKind::M2Star, 1000).unwrap();
    assert!(matches!(r.status, EnumerationStatus::Inconclusive { .. }));
    assert!(r.violations.is_empty());
}

#[test]
fn counterexample_on_star_never_agrees() {
    let star = Digraph::new(3, [(0, 1), (0, 2)]).unwrap();
    let ce = prop1_counterexample(&star, 2000).unwrap();
    assert_eq!(ce.silent, SilentDirection::Plus);
    let results = run_trials(&ce.config, 200, 7, 1).unwrap();
    for r in &results {
        assert!(r.consensus_step.is_none());
        for &i in &ce.zero_group {
            assert_eq!(r.final_state[i], 0.0);
        }
        for &i in &ce.one_group {
            assert_eq!(r.final_state[i], 1.0);
        }
    }
    // node 0 does move: the run is not trivially frozen
    assert!(results.iter().any(|r| r.final_state[0] != 0.5));
}

#[test]
fn counterexample_when_plus_graph_fails() {
    // 1 -> 0 and 2 -> 0: node 0 has two unrelated sources under e+
    let g = Digraph::new(3, [(1, 0), (2, 0)]).unwrap();
    let ce = prop1_counterexample(&g, 1000).unwrap();
    assert_eq!(ce.silent, SilentDirection::Minus);
    let results = run_trials(&ce.config, 100, 8, 1).unwrap();
    assert!(results.iter().all(|r| r.consensus_step.is_none()));
}

#[test]
fn double_connected_graphs_have_no_counterexample() {
    assert_eq!(prop1_counterexample(&Digraph::cycle(3), 10), Err(Error::NoCounterexample));
    assert_eq!(prop1_counterexample(&Digraph::complete(4), 10), Err(Error::NoCounterexample));
}

#[test]
fn covering_blocks_scramble_on_complete_graph() {
    let r = scrambling_block_check(&SelectionMatrix::complete_uniform(3).unwrap(), 1000, 1).unwrap();
    assert_eq!(r.blocks_per_chain, 1);
    assert!(r.passed(), "{r:?}");
    assert!(r.max_lambda < 1.0);
}

#[test]
fn covering_blocks_scramble_on_rings() {
    for n in [3, 4, 5] {
        let a = SelectionMatrix::directed_ring(n).unwrap();
        let r = scrambling_block_check(&a, 300, 2).unwrap();
        assert_eq!(r.blocks_per_chain, 2 * (n - 1) - 1);
        assert!(r.passed(), "n={n}: {r:?}");
    }
}

#[test]
fn one_block_on_a_ring_may_not_scramble() {
    let a = SelectionMatrix::directed_ring(5).unwrap();
    let (count, example) = single_block_search(&a, 500, 3).unwrap();
    assert!(count > 0);
    assert!(example.is_some());
}

#[test]
fn random_chain_properties() {
    for a in [SelectionMatrix::complete_uniform(3).unwrap(), SelectionMatrix::directed_ring(4).unwrap()] {
        let r = chain_suite(&a, 1000, 12, 4).unwrap();
        assert!(r.passed(), "{r:?}");
    }
}

#[test]
fn stall_nodes_on_complete_graph() {
    let a = SelectionMatrix::complete_uniform(3).unwrap();
    assert_eq!(stall_nodes(&a).unwrap(), (0, 1));
}
