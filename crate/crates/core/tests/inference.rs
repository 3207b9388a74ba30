mod common;

use std::collections::{BTreeMap, VecDeque};

use common::{cbn_tables, joint_marginals, polytree, smart_home, with_cpts};
use dolearn::cbn::{fit_mle, CausalBayesianNetwork};
use dolearn::inference::{enumerate_posterior, is_polytree, posterior, propagate, Evidence};
use dolearn::model::{CausalDiagram, VariableId};
use dolearn::simulator::{sample_dataset, ScenarioOptions};
use dolearn::Error;
use proptest::prelude::*;

fn oracle(cbn: &CausalBayesianNetwork, e: &Evidence) -> Option<Vec<f64>> {
    let ev: BTreeMap<usize, bool> = e.values.iter().map(|(k, v)| (k.0, *v)).collect();
    joint_marginals(&cbn_tables(cbn), &ev)
}

fn diameter(d: &CausalDiagram) -> usize {
    let n = d.len();
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in d.arrows() {
        adj[a.0].push(b.0);
        adj[b.0].push(a.0);
    }
    let mut best = 0;
    for s in 0..n {
        let mut dist = vec![usize::MAX; n];
        dist[s] = 0;
        let mut q = VecDeque::from([s]);
        while let Some(v) = q.pop_front() {
            for &w in &adj[v] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    q.push_back(w);
                }
            }
        }
        best = best.max(
            dist.into_iter()
                .filter(|&x| x != usize::MAX)
                .max()
                .unwrap_or(0),
        );
    }
    best
}

fn fitted_living_room() -> CausalBayesianNetwork {
    let scm = smart_home(ScenarioOptions::default());
    fit_mle(scm.diagram(), &sample_dataset(&scm, 500, 42), 1.0).unwrap()
}

fn probs() -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(prop_oneof![Just(0.0), Just(1.0), 0.01f64..0.99], 1..64)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn propagation_matches_brute_force(
        d in polytree(12),
        rows in probs(),
        ev in proptest::collection::btree_map(0usize..12, any::<bool>(), 0..4),
    ) {
        let cbn = with_cpts(&d, &rows);
        let e: Evidence = ev.into_iter().filter(|(k, _)| *k < d.len()).map(|(k, v)| (VariableId(k), v)).collect();
        match oracle(&cbn, &e) {
            None => {
                prop_assert_eq!(propagate(&cbn, &e).unwrap_err(), Error::ZeroProbabilityEvidence);
                prop_assert_eq!(enumerate_posterior(&cbn, &e).unwrap_err(), Error::ZeroProbabilityEvidence);
            }
            Some(exact) => {
                let (bp, store) = propagate(&cbn, &e).unwrap();
                let en = enumerate_posterior(&cbn, &e).unwrap();
                for (i, p1) in exact.iter().enumerate() {
                    let [b0, b1] = bp.beliefs[i];
                    prop_assert!((b1 - p1).abs() < 1e-9, "bp {} vs {}", b1, p1);
                    prop_assert!((b0 + b1 - 1.0).abs() < 1e-9);
                    prop_assert!((en.beliefs[i][1] - p1).abs() < 1e-9);
                }
                for (k, v) in &e.values {
                    prop_assert_eq!(bp.get(*k), if *v { [0.0, 1.0] } else { [1.0, 0.0] });
                }
                prop_assert!(store.sweeps <= 2 * diameter(&d), "{} sweeps, diameter {}", store.sweeps, diameter(&d));
            }
        }
    }
}

#[test]
fn root_prior_passes_through() {
    let d = CausalDiagram::from_names(&[("X", true)], &[]).unwrap();
    let cbn = with_cpts(&d, &[0.3]);
    let (b, _) = propagate(&cbn, &Evidence::new()).unwrap();
    assert!((b.get(VariableId(0))[0] - 0.7).abs() < 1e-12);
    assert!((b.get(VariableId(0))[1] - 0.3).abs() < 1e-12);
}

#[test]
fn living_room_every_single_evidence() {
    let cbn = fitted_living_room();
    assert!(is_polytree(&cbn.structure));
    for i in 0..cbn.len() {
        for v in [false, true] {
            let e = Evidence::new().with(VariableId(i), v);
            let (bp, _) = propagate(&cbn, &e).unwrap();
            let exact = enumerate_posterior(&cbn, &e).unwrap();
            assert!(bp.max_abs_diff(&exact) < 1e-9);
        }
    }
}

#[test]
fn thermometer_hot_heater_off_explains_lamp() {
    let cbn = fitted_living_room();
    let s = &cbn.structure;
    let (t, h, l) = (
        s.id_of("T").unwrap(),
        s.id_of("H").unwrap(),
        s.id_of("L").unwrap(),
    );
    let e = Evidence::new().with(t, true).with(h, false);
    let (bp, _) = propagate(&cbn, &e).unwrap();
    assert!(bp.max_abs_diff(&enumerate_posterior(&cbn, &e).unwrap()) < 1e-9);
    // the lamp is not a cause of T in this room, so its belief stays put
    let (prior, _) = propagate(&cbn, &Evidence::new()).unwrap();
    assert!((bp.prob_true(l) - prior.prob_true(l)).abs() < 1e-9);
}

#[test]
fn predictive_evidence_moves_only_descendants() {
    let cbn = fitted_living_room();
    let s = &cbn.structure;
    let (prior, _) = propagate(&cbn, &Evidence::new()).unwrap();
    let (post, _) = propagate(&cbn, &Evidence::new().with(s.id_of("P").unwrap(), true)).unwrap();
    for name in ["Pr", "L", "Pow"] {
        let id = s.id_of(name).unwrap();
        assert!(post.prob_true(id) > prior.prob_true(id) + 1e-3, "{}", name);
    }
    for name in ["H", "W", "O", "T"] {
        let id = s.id_of(name).unwrap();
        assert!(
            (post.prob_true(id) - prior.prob_true(id)).abs() < 1e-9,
            "{}",
            name
        );
    }
}

#[test]
fn diagnostic_evidence_follows_bayes_rule() {
    let cbn = fitted_living_room();
    let s = &cbn.structure;
    let e = Evidence::new().with(s.id_of("L").unwrap(), false);
    let (post, _) = propagate(&cbn, &e).unwrap();
    let exact = oracle(&cbn, &e).unwrap();
    for (i, p) in exact.iter().enumerate() {
        assert!((post.beliefs[i][1] - p).abs() < 1e-9);
    }
    let (prior, _) = propagate(&cbn, &Evidence::new()).unwrap();
    let p = s.id_of("P").unwrap();
    assert!(post.get(p)[0] > prior.get(p)[0]);
}

#[test]
fn loops_fall_back_to_enumeration() {
    let d = CausalDiagram::from_names(
        &[("A", true), ("B", true), ("C", true), ("D", true)],
        &[("A", "B"), ("A", "C"), ("B", "D"), ("C", "D")],
    )
    .unwrap();
    let cbn = with_cpts(&d, &[0.3, 0.2, 0.9, 0.6, 0.1, 0.05, 0.5, 0.5, 0.95]);
    let e = Evidence::new().with(VariableId(3), true);
    assert_eq!(propagate(&cbn, &e).unwrap_err(), Error::NotPolytree);
    let b = posterior(&cbn, &e).unwrap();
    let exact = oracle(&cbn, &e).unwrap();
    for (i, p) in exact.iter().enumerate() {
        assert!((b.beliefs[i][1] - p).abs() < 1e-12);
    }
}

#[test]
fn bathroom_lamp_becomes_the_suspect() {
    let scm = smart_home(ScenarioOptions::default().with_proximity(true));
    let cbn = fit_mle(scm.diagram(), &sample_dataset(&scm, 500, 42), 1.0).unwrap();
    let s = &cbn.structure;
    assert!(!is_polytree(s));
    let (t, h, l) = (
        s.id_of("T").unwrap(),
        s.id_of("H").unwrap(),
        s.id_of("L").unwrap(),
    );
    let prior = posterior(&cbn, &Evidence::new()).unwrap();
    let post = posterior(&cbn, &Evidence::new().with(t, true).with(h, false)).unwrap();
    assert!(post.prob_true(l) > prior.prob_true(l));
}
