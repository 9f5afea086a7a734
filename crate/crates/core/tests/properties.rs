mod support;

use std::collections::BTreeSet;

use collabnet::analysis::{covariance, pca, FeatureMatrix};
use collabnet::dataset::Dataset;
use collabnet::dot::{export_dot, validate};
use collabnet::efficiency::payoff_report;
use collabnet::expansion::{expand_sequence, place_esr};
use collabnet::model::{delta_for, PayoffParams};
use collabnet::oracle::{exhaustive_expand, independent_choice, search_space_size, Objective};
use collabnet::paths::{
    all_pairs_shortest, mean_weighted_distance_with, weighted_shortest, MeanConvention,
};
use collabnet::run::{run_expand, RunFlags};
use collabnet::{Esr, EsrId, Exact, Network, Partner, PartnerId, PartnerKind, Roster};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use support::*;

fn ratio(n: i64) -> Exact {
    Exact::from_integer(n.into())
}

/// A connected starting network on `1..=n` plus a roster that extends it
/// with one fresh home per ESR.
#[derive(Debug, Clone)]
struct Instance {
    start: Network,
    roster: Roster,
    esrs: Vec<Esr>,
}

fn instance(seed: u64, start_nodes: u16, esr_count: u16) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = random_network(&mut rng, start_nodes, true, 0.3);
    let total = start_nodes + esr_count;
    let roster = Roster::new(
        (1..=total)
            .map(|i| Partner {
                id: p(i),
                kind: if rng.gen_bool(0.5) {
                    PartnerKind::Experimental
                } else {
                    PartnerKind::Computational
                },
                founding: i <= start_nodes,
            })
            .collect(),
    )
    .unwrap();
    let esrs = (1..=esr_count)
        .map(|k| {
            esr(
                100 + k,
                start_nodes + k,
                rng.gen_range(1..=12),
                rng.gen_range(1..=12),
            )
        })
        .collect();
    Instance { start, roster, esrs }
}

fn instances() -> impl Strategy<Value = Instance> {
    (any::<u64>(), 2u16..=4, 1u16..=3).prop_map(|(s, n, e)| instance(s, n, e))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn mean_conventions_are_proportional(seed in any::<u64>(), n in 2u16..=7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = random_network(&mut rng, n, true, 0.3);
        let r = random_roster(&mut rng, n);
        let (_, w) = weighted_shortest::<Exact>(&net, &r, &PayoffParams::default()).unwrap();
        let pairs = mean_weighted_distance_with(&w, MeanConvention::UnorderedPairs).unwrap();
        let cells = mean_weighted_distance_with(&w, MeanConvention::AllCells).unwrap();
        let n = n as i64;
        prop_assert_eq!(cells, pairs * Exact::new((n - 1).into(), n.into()));
    }

    #[test]
    fn greedy_choice_is_convention_invariant(inst in instances()) {
        let params = PayoffParams::<Exact>::default();
        let e = &inst.esrs[0];
        let mut best: [Option<(Exact, (PartnerId, PartnerId))>; 2] = [None, None];
        for a in collabnet::expansion::candidate_assignments(&inst.start, e).unwrap() {
            let mut g = inst.start.clone();
            let (x, y) = e.visits.unwrap();
            g.add_months(e.home, a.host_a, x).unwrap();
            g.add_months(e.home, a.host_b, y).unwrap();
            let (_, w) = weighted_shortest(&g, &inst.roster, &params).unwrap();
            for (slot, conv) in [MeanConvention::UnorderedPairs, MeanConvention::AllCells].iter().enumerate() {
                let m = mean_weighted_distance_with(&w, *conv).unwrap();
                let key = (m, a.hosts());
                if best[slot].as_ref().is_none_or(|b| key < *b) {
                    best[slot] = Some(key);
                }
            }
        }
        prop_assert_eq!(best[0].as_ref().map(|b| b.1), best[1].as_ref().map(|b| b.1));
    }

    #[test]
    fn equal_deltas_make_kinds_irrelevant(seed in any::<u64>(), n in 2u16..=7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = random_network(&mut rng, n, true, 0.4);
        let params = PayoffParams::unchecked(ratio(2), ratio(2), ratio(2), ratio(0));
        let a = random_roster(&mut rng, n);
        let b = random_roster(&mut rng, n);
        let va = payoff_report(&net, &a, &params).unwrap().value;
        let vb = payoff_report(&net, &b, &params).unwrap().value;
        prop_assert_eq!(va, vb);
    }

    #[test]
    fn payoffs_ignore_edge_insertion_order(seed in any::<u64>(), n in 2u16..=7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = random_network(&mut rng, n, true, 0.4);
        let r = random_roster(&mut rng, n);
        let mut edges: Vec<_> = net.edges().collect();
        edges.reverse();
        let mut rebuilt = Network::with_partners(net.partners().iter().rev().copied());
        for (a, b, m) in edges {
            rebuilt.add_months(b, a, m).unwrap();
        }
        let params = PayoffParams::<Exact>::default();
        prop_assert_eq!(
            payoff_report(&net, &r, &params).unwrap(),
            payoff_report(&rebuilt, &r, &params).unwrap()
        );
    }

    #[test]
    fn value_equals_pair_sum(seed in any::<u64>(), n in 2u16..=8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = random_network(&mut rng, n, true, 0.3);
        let r = random_roster(&mut rng, n);
        let params = PayoffParams::<Exact>::default();
        let d = all_pairs_shortest::<Exact>(&net);
        let mut total = ratio(0);
        for (i, j, v) in d.upper_pairs() {
            let delta = delta_for(r.kind(d.ids()[i]).unwrap(), r.kind(d.ids()[j]).unwrap(), &params);
            total += ratio(2) * delta / v.unwrap().clone();
        }
        total -= ratio(2 * net.edge_count() as i64) * params.cost.clone();
        prop_assert_eq!(payoff_report(&net, &r, &params).unwrap().value, total);
    }

    #[test]
    fn expansion_trace_matches_recomputation(inst in instances()) {
        let params = PayoffParams::<f64>::default();
        let plan = expand_sequence(&inst.start, &inst.esrs, &inst.roster, &params).unwrap();
        let mut net = inst.start.clone();
        for (step, e) in plan.steps.iter().zip(&inst.esrs) {
            let (x, y) = e.visits.unwrap();
            let before_home = net.degree(e.home);
            net.add_partner(e.home);
            net.add_months(e.home, step.assignment.host_a, x).unwrap();
            net.add_months(e.home, step.assignment.host_b, y).unwrap();
            let (_, w) = weighted_shortest(&net, &inst.roster, &params).unwrap();
            let mean = mean_weighted_distance_with(&w, MeanConvention::UnorderedPairs).unwrap();
            prop_assert!((mean - step.mean).abs() <= 1e-12);
            let added = net.degree(e.home) - before_home;
            prop_assert!(added <= 2);
        }
        prop_assert_eq!(&net, &plan.network);
        prop_assert!(all_pairs_shortest::<f64>(&plan.network).is_connected());
        for e in &inst.esrs {
            prop_assert!(plan.network.degree(e.home) >= 1);
        }
    }

    #[test]
    fn expansion_is_deterministic(inst in instances()) {
        let params = PayoffParams::<f64>::default();
        let a = expand_sequence(&inst.start, &inst.esrs, &inst.roster, &params).unwrap();
        let b = expand_sequence(&inst.start, &inst.esrs, &inst.roster, &params).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn each_step_matches_independent_enumeration(inst in instances()) {
        let params = PayoffParams::<Exact>::default();
        let mut net = inst.start.clone();
        for e in &inst.esrs {
            let placed = place_esr(&net, e, &inst.roster, &params).unwrap();
            prop_assert_eq!(Some(placed.assignment), independent_choice(&net, e, &inst.roster, &params));
            net = placed.network;
        }
    }

    #[test]
    fn oracle_dominates_and_is_complete(inst in instances()) {
        let params = PayoffParams::<f64>::default();
        for objective in [Objective::MinMeanWeightedDistance, Objective::MaxNetworkValue] {
            let r = exhaustive_expand(&inst.start, &inst.esrs, &inst.roster, &params, objective).unwrap();
            prop_assert_eq!(r.visited, r.search_space);
            prop_assert_eq!(r.search_space, search_space_size(&inst.start, &inst.esrs));
            match objective {
                Objective::MinMeanWeightedDistance => prop_assert!(r.best <= r.greedy + 1e-12),
                Objective::MaxNetworkValue => prop_assert!(r.best >= r.greedy - 1e-9),
            }
            prop_assert_eq!(&objective.evaluate(&r.network, &inst.roster, &params).unwrap(), &r.best);
        }
    }

    #[test]
    fn pca_reconstructs_at_full_rank(seed in any::<u64>(), rows in 5usize..=12, cols in 2usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = DMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-3.0..3.0));
        let f = labelled(values.clone());
        let r = pca(&f, cols).unwrap();
        prop_assert!((r.reconstruct() - values).abs().max() <= 1e-9);
    }

    #[test]
    fn pca_ignores_row_order(seed in any::<u64>(), rows in 5usize..=12, cols in 2usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = DMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-3.0..3.0));
        let mut perm: Vec<usize> = (0..rows).collect();
        perm.reverse();
        perm.rotate_left(seed as usize % rows);
        let shuffled = DMatrix::from_fn(rows, cols, |i, j| values[(perm[i], j)]);
        let a = pca(&labelled(values), 2).unwrap();
        let b = pca(&labelled(shuffled), 2).unwrap();
        for (x, y) in a.spectrum.iter().zip(&b.spectrum) {
            prop_assert!((x - y).abs() <= 1e-9);
        }
        let gap = a.spectrum[0] - a.spectrum[1];
        if gap > 1e-3 {
            let diff = (a.components.row(0) - b.components.row(0)).abs().max();
            prop_assert!(diff <= 1e-6);
        }
    }

    #[test]
    fn eigenpairs_satisfy_the_covariance(seed in any::<u64>(), rows in 5usize..=12, cols in 2usize..=5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = DMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-3.0..3.0));
        let k = (rows - 1).min(cols);
        let r = pca(&labelled(values.clone()), k).unwrap();
        let (cov, _) = covariance(&values);
        for i in 0..k {
            let v = r.components.row(i).transpose();
            let residual = (&cov * &v - &v * r.eigenvalues[i]).norm();
            prop_assert!(residual <= 1e-9);
        }
    }
}

fn labelled(values: DMatrix<f64>) -> FeatureMatrix<f64> {
    let (rows, cols) = values.shape();
    FeatureMatrix::new(
        (0..rows).map(|i| format!("r{i}")).collect(),
        (0..cols).map(|j| format!("c{j}")).collect(),
        values,
    )
    .unwrap()
}

#[test]
fn isotropic_cloud_has_flat_spectrum() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let cols = 4;
    let values = DMatrix::from_fn(10_000, cols, |_, _| rng.gen_range(-1.0..1.0));
    let r = pca(&labelled(values), cols).unwrap();
    for ratio in &r.explained_ratio {
        assert!((ratio - 1.0 / cols as f64).abs() < 0.1, "{ratio}");
    }
}

#[test]
fn founding_only_dataset_keeps_the_founding_value() {
    let json = r#"{
      "name": "founders",
      "partners": [
        { "id": 1, "kind": "experimental", "founding": true },
        { "id": 2, "kind": "experimental", "founding": true },
        { "id": 3, "kind": "experimental", "founding": true },
        { "id": 4, "kind": "computational", "founding": true }
      ],
      "founding_visits": [[0, 0, 8, 3], [2, 0, 16, 0], [8, 8, 0, 0], [15, 0, 3, 0]],
      "esrs": [],
      "payoffs": { "delta_ec": 3.0, "delta_ee": 2.0, "delta_cc": 1.0, "cost": 1.0 }
    }"#;
    let ds = Dataset::parse(json).unwrap();
    let outcome = run_expand(&ds, &RunFlags::default()).unwrap();
    assert!(outcome.plan.steps.is_empty());
    assert_eq!(outcome.plan.network, founding());
    assert!((outcome.payoffs.value - 384.78875).abs() < 1e-3);
}

#[test]
fn exported_network_is_valid_dot() {
    let flags = RunFlags {
        visit_overrides: vec![(EsrId(13), 18, 10)],
        ..RunFlags::default()
    };
    let outcome = run_expand(&Dataset::bundled(), &flags).unwrap();
    validate(&outcome.dot).unwrap();
    let text = export_dot(&outcome.plan.network, Some(&outcome.payoffs));
    assert_eq!(text, outcome.dot);
    let nodes: BTreeSet<&str> = text
        .lines()
        .filter(|l| l.contains("fillcolor") && !l.contains("--"))
        .filter_map(|l| l.split_whitespace().next())
        .collect();
    assert_eq!(nodes.len(), 14);
    let net = &outcome.plan.network;
    let max = net.partners().iter().map(|&x| net.degree(x)).max().unwrap();
    assert_eq!(net.degree(PartnerId(4)), max);
    assert_eq!(text.matches(" -- ").count(), net.edge_count());
}
