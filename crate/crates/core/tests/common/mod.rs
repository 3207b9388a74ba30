#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use dolearn::cbn::{CausalBayesianNetwork, Cpt, RowProvenance};
use dolearn::discovery::{CandidateGraph, EdgeEvidence, EvidenceKind};
use dolearn::model::{CausalDiagram, Mechanism, Scm, Variable, VariableId};
use dolearn::simulator::{
    build_scenario, sample_dataset, Dataset, ScenarioConfig, ScenarioOptions,
};
use proptest::prelude::*;

pub const NAMES: [&str; 8] = ["P", "Pr", "L", "Pow", "H", "W", "O", "T"];

pub fn smart_home(options: ScenarioOptions) -> Scm {
    build_scenario(&ScenarioConfig::smart_home(options)).unwrap()
}

pub fn id(scm: &Scm, name: &str) -> VariableId {
    scm.diagram().id_of(name).unwrap()
}

/// Marginals `P(x = 1)` by brute force over the full joint, conditioned on
/// `evidence`. `None` when the evidence has probability zero.
pub fn joint_marginals(
    cpts: &[(Vec<usize>, Vec<f64>)],
    evidence: &BTreeMap<usize, bool>,
) -> Option<Vec<f64>> {
    let n = cpts.len();
    let mut ones = vec![0.0; n];
    let mut total = 0.0;
    for state in 0u32..(1 << n) {
        let x = |i: usize| (state >> i) & 1 == 1;
        if evidence.iter().any(|(&i, &v)| x(i) != v) {
            continue;
        }
        let mut p = 1.0;
        for (i, (parents, rows)) in cpts.iter().enumerate() {
            let mut row = 0;
            for &q in parents {
                row = row * 2 + x(q) as usize;
            }
            p *= if x(i) { rows[row] } else { 1.0 - rows[row] };
        }
        total += p;
        for (i, o) in ones.iter_mut().enumerate() {
            if x(i) {
                *o += p;
            }
        }
    }
    if total == 0.0 {
        return None;
    }
    Some(ones.into_iter().map(|o| o / total).collect())
}

pub fn scm_tables(scm: &Scm) -> Vec<(Vec<usize>, Vec<f64>)> {
    scm.mechanisms()
        .iter()
        .map(|m| (m.parents.iter().map(|p| p.0).collect(), m.rows.clone()))
        .collect()
}

pub fn cbn_tables(cbn: &CausalBayesianNetwork) -> Vec<(Vec<usize>, Vec<f64>)> {
    cbn.cpts
        .iter()
        .map(|c| (c.parents.iter().map(|p| p.0).collect(), c.rows.clone()))
        .collect()
}

pub fn variables(n: usize) -> Vec<Variable> {
    (0..n)
        .map(|i| Variable {
            id: VariableId(i),
            name: format!("X{}", i),
            doable: true,
        })
        .collect()
}

/// A random DAG: arrows only from lower to higher index.
pub fn dag(max_nodes: usize) -> impl Strategy<Value = CausalDiagram> {
    (1..=max_nodes).prop_flat_map(|n| {
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
            .collect();
        let k = pairs.len();
        proptest::collection::vec(any::<bool>(), k).prop_map(move |keep| {
            let arrows = pairs
                .iter()
                .zip(keep)
                .filter(|(_, k)| *k)
                .map(|(&(a, b), _)| (VariableId(a), VariableId(b)));
            CausalDiagram::new(variables(n), arrows).unwrap()
        })
    })
}

/// A random polytree: each node after the first attaches to one earlier
/// node (in a random direction) or starts a new component.
pub fn polytree(max_nodes: usize) -> impl Strategy<Value = CausalDiagram> {
    (1..=max_nodes).prop_flat_map(|n| {
        proptest::collection::vec((any::<prop::sample::Index>(), 0..3u8), n).prop_map(
            move |links| {
                let mut arrows = Vec::new();
                for (i, (target, how)) in links.iter().enumerate().skip(1) {
                    let j = target.index(i);
                    match how {
                        0 => arrows.push((VariableId(j), VariableId(i))),
                        1 => arrows.push((VariableId(i), VariableId(j))),
                        _ => {}
                    }
                }
                CausalDiagram::new(variables(n), arrows).unwrap()
            },
        )
    })
}

/// CPTs for `d` with rows drawn from `probs` (cycled).
pub fn with_cpts(d: &CausalDiagram, probs: &[f64]) -> CausalBayesianNetwork {
    let mut next = probs.iter().cycle();
    let cpts = d
        .variables()
        .iter()
        .map(|v| {
            let parents = d.parents(v.id);
            let rows: Vec<f64> = (0..1usize << parents.len())
                .map(|_| *next.next().unwrap())
                .collect();
            Cpt {
                owner: v.id,
                provenance: vec![RowProvenance::Smoothed; rows.len()],
                parents,
                rows,
            }
        })
        .collect();
    CausalBayesianNetwork {
        structure: d.clone(),
        cpts,
    }
}

pub fn scm_from(d: &CausalDiagram, probs: &[f64]) -> Scm {
    let cbn = with_cpts(d, probs);
    let mechanisms = cbn
        .cpts
        .iter()
        .map(|c| Mechanism {
            parents: c.parents.clone(),
            rows: c.rows.clone(),
        })
        .collect();
    Scm::new(d.clone(), mechanisms).unwrap()
}

pub fn arrows(names: &[(&str, &str)]) -> BTreeSet<(String, String)> {
    names
        .iter()
        .map(|(a, b)| (a.to_string(), b.to_string()))
        .collect()
}

pub fn candidate_from(
    names: &[(&str, bool)],
    arrows: &[(&str, &str, EvidenceKind, f64)],
) -> CandidateGraph {
    let variables: Vec<Variable> = names
        .iter()
        .enumerate()
        .map(|(i, (n, d))| Variable {
            id: VariableId(i),
            name: n.to_string(),
            doable: *d,
        })
        .collect();
    let find = |n: &str| VariableId(names.iter().position(|(m, _)| *m == n).unwrap());
    let arrows: BTreeMap<_, _> = arrows
        .iter()
        .map(|&(a, b, kind, s)| {
            (
                (find(a), find(b)),
                EdgeEvidence {
                    kind,
                    best_statistic: s,
                    undirected: false,
                },
            )
        })
        .collect();
    CandidateGraph {
        variables,
        arrows,
        removed: BTreeMap::new(),
        arrow_counts: vec![],
        inconclusive_tests: 0,
    }
}

pub const FIG7_VARS: [(&str, bool); 8] = [
    ("P", true),
    ("Pr", false),
    ("L", true),
    ("Pow", false),
    ("H", true),
    ("W", true),
    ("O", true),
    ("T", false),
];

/// The published raw graph of the ND run, with made-up scores.
pub fn nd_candidate() -> CandidateGraph {
    use EvidenceKind::*;
    candidate_from(
        &FIG7_VARS,
        &[
            ("P", "Pr", DoConfirmed, 40.0),
            ("H", "Pow", DoConfirmed, 30.0),
            ("O", "T", DoConfirmed, 25.0),
            ("H", "T", DoConfirmed, 28.0),
            ("W", "T", DoConfirmed, 26.0),
            ("Pr", "P", NdCandidate, 35.0),
            ("T", "H", NdCandidate, 20.0),
            ("T", "W", NdCandidate, 18.0),
            ("T", "O", NdCandidate, 17.0),
            ("Pow", "T", NdCandidate, 6.0),
            ("T", "Pow", NdCandidate, 5.0),
            ("Pow", "H", NdCandidate, 22.0),
            ("Pow", "O", NdCandidate, 4.5),
            ("Pr", "L", NdCandidate, 50.0),
        ],
    )
}

pub fn living_room_truth() -> CausalDiagram {
    CausalDiagram::from_names(
        &FIG7_VARS,
        &[
            ("P", "Pr"),
            ("Pr", "L"),
            ("L", "Pow"),
            ("H", "Pow"),
            ("O", "T"),
            ("H", "T"),
            ("W", "T"),
        ],
    )
    .unwrap()
}

/// Observations from the ND living room, for the confounder check.
pub fn nd_observations() -> Dataset {
    let scm = smart_home(ScenarioOptions::default().with_nd(["Pr", "Pow", "T"]));
    sample_dataset(&scm, 500, 0)
}
