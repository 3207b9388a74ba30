mod common;

use std::collections::BTreeMap;

use common::{id, joint_marginals, scm_tables, smart_home};
use dolearn::io::dataset_to_string;
use dolearn::model::{mutilate, Intervention};
use dolearn::simulator::{sample_dataset, sample_under_do, ScenarioOptions};
use dolearn::stats::distributions_differ;
use proptest::prelude::*;

#[test]
fn default_marginals_match_enumeration() {
    let scm = smart_home(ScenarioOptions::default());
    let exact = joint_marginals(&scm_tables(&scm), &BTreeMap::new()).unwrap();
    let n = 10_000;
    let data = sample_dataset(&scm, n, 7);
    for (i, p) in exact.iter().enumerate() {
        let freq = data.records.iter().filter(|r| r.state.values[i]).count() as f64 / n as f64;
        let se = (p * (1.0 - p) / n as f64).sqrt();
        assert!(
            (freq - p).abs() <= 3.0 * se,
            "variable {} freq {} exact {}",
            i,
            freq,
            p
        );
    }
}

#[test]
fn do_light_leaves_person_alone() {
    let scm = smart_home(ScenarioOptions::default());
    let (p, l) = (id(&scm, "P"), id(&scm, "L"));
    let obs = sample_dataset(&scm, 500, 1);
    let forced = sample_under_do(&scm, &Intervention::single(l, true), 500, 2).unwrap();
    assert!(
        !distributions_differ(&obs, &forced, p, 0.05)
            .unwrap()
            .reject_independence
    );
}

#[test]
fn do_person_moves_light() {
    let scm = smart_home(ScenarioOptions::default());
    let (p, l) = (id(&scm, "P"), id(&scm, "L"));
    let off = sample_under_do(&scm, &Intervention::single(p, false), 20, 3).unwrap();
    let on = sample_under_do(&scm, &Intervention::single(p, true), 20, 4).unwrap();
    assert!(
        distributions_differ(&off, &on, l, 0.05)
            .unwrap()
            .reject_independence
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sampling_is_deterministic(n in 0usize..200, seed in any::<u64>()) {
        let scm = smart_home(ScenarioOptions::default());
        prop_assert_eq!(
            dataset_to_string(&sample_dataset(&scm, n, seed)),
            dataset_to_string(&sample_dataset(&scm, n, seed))
        );
    }

    #[test]
    fn do_records_match_mutilated_sampling(
        picks in proptest::collection::btree_map(0usize..8, any::<bool>(), 0..4),
        n in 0usize..100,
        seed in any::<u64>(),
    ) {
        let scm = smart_home(ScenarioOptions::default());
        let i: Intervention = picks.iter().map(|(k, v)| (dolearn::model::VariableId(*k), *v)).collect();
        let forced = sample_under_do(&scm, &i, n, seed).unwrap();
        let plain = sample_dataset(&mutilate(&scm, &i).unwrap(), n, seed);
        prop_assert_eq!(forced.len(), n);
        for (a, b) in forced.records.iter().zip(&plain.records) {
            prop_assert_eq!(&a.state, &b.state);
            for (id, v) in &i.assignments {
                prop_assert_eq!(a.state.get(*id), *v);
            }
        }
    }
}
