use std::collections::{BTreeMap, BTreeSet};

use super::{CandidateGraph, EdgeEvidence, EvidenceKind};
use crate::error::Result;
use crate::model::{Arrow, CausalDiagram, VariableId};
use crate::simulator::Dataset;
use crate::stats::cond_independent;

/// A DAG with the evidence behind each arrow.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnedGraph {
    pub diagram: CausalDiagram,
    pub evidence: BTreeMap<Arrow, EdgeEvidence>,
}

impl LearnedGraph {
    /// Treats every arrow of `diagram` as intervention-confirmed.
    pub fn from_diagram(diagram: CausalDiagram) -> Self {
        let evidence = diagram
            .arrows()
            .iter()
            .map(|&a| {
                (
                    a,
                    EdgeEvidence {
                        kind: EvidenceKind::DoConfirmed,
                        best_statistic: 0.0,
                        undirected: false,
                    },
                )
            })
            .collect();
        LearnedGraph { diagram, evidence }
    }

    pub fn flagged(&self) -> Vec<Arrow> {
        self.evidence
            .iter()
            .filter(|(_, e)| e.kind == EvidenceKind::Flagged)
            .map(|(a, _)| *a)
            .collect()
    }
}

fn reaches(adj: &[Vec<usize>], from: usize, to: usize) -> bool {
    let mut seen = vec![false; adj.len()];
    let mut stack = vec![from];
    while let Some(v) = stack.pop() {
        if v == to {
            return true;
        }
        if !std::mem::replace(&mut seen[v], true) {
            stack.extend(adj[v].iter().copied());
        }
    }
    false
}

enum Unit {
    Single(Arrow, EdgeEvidence),
    /// Opposite ND arrows between `lo < hi`.
    Pair(VariableId, VariableId, f64),
}

impl Unit {
    fn statistic(&self) -> f64 {
        match self {
            Unit::Single(_, e) => e.best_statistic,
            Unit::Pair(_, _, s) => *s,
        }
    }

    fn key(&self) -> Arrow {
        match self {
            Unit::Single(a, _) => *a,
            Unit::Pair(lo, hi, _) => (*lo, *hi),
        }
    }
}

fn by_significance(units: &mut [Unit]) {
    units.sort_by(|x, y| {
        y.statistic()
            .total_cmp(&x.statistic())
            .then_with(|| x.key().cmp(&y.key()))
    });
}

/// Post-processes a candidate graph into a DAG.
///
/// * An ND pair is dropped when an intervention-confirmed common cause
///   explains its correlation (needs `observations`).
/// * Arrows are then inserted from most to least significant, all
///   intervention-confirmed arrows before any ND arrow; an arrow that would
///   close a cycle is dropped.
/// * A pair of opposite ND arrows is oriented low id to high id, or the
///   other way when that is the only acyclic option.
/// * Surviving ND arrows come out [`EvidenceKind::Flagged`].
pub fn resolve_to_dag(
    candidate: &CandidateGraph,
    observations: Option<&Dataset>,
    alpha: f64,
) -> Result<LearnedGraph> {
    let n = candidate.variables.len();
    let is_nd = |e: &EdgeEvidence| e.kind != EvidenceKind::DoConfirmed;

    let mut dropped: BTreeSet<Arrow> = BTreeSet::new();
    if let Some(obs) = observations {
        let confirmed: BTreeSet<Arrow> = candidate
            .arrows
            .iter()
            .filter(|(_, e)| !is_nd(e))
            .map(|(a, _)| *a)
            .collect();
        let pairs: BTreeSet<(VariableId, VariableId)> = candidate
            .arrows
            .iter()
            .filter(|(_, e)| is_nd(e))
            .map(|(&(a, b), _)| (a.min(b), a.max(b)))
            .collect();
        for (a, b) in pairs {
            let confounded = (0..n)
                .map(VariableId)
                .filter(|&c| c != a && c != b)
                .try_fold(false, |found, c| -> Result<bool> {
                    if found || !(confirmed.contains(&(c, a)) && confirmed.contains(&(c, b))) {
                        return Ok(found);
                    }
                    Ok(cond_independent(obs, a, b, &[c], alpha)?.accepts_independence())
                })?;
            if confounded {
                for arrow in [(a, b), (b, a)] {
                    if candidate.arrows.get(&arrow).is_some_and(is_nd) {
                        dropped.insert(arrow);
                    }
                }
            }
        }
    }

    let mut confirmed_units = Vec::new();
    let mut nd_units = Vec::new();
    for (&(a, b), e) in &candidate.arrows {
        if dropped.contains(&(a, b)) {
            continue;
        }
        if !is_nd(e) {
            confirmed_units.push(Unit::Single((a, b), *e));
            continue;
        }
        let reverse = candidate
            .arrows
            .get(&(b, a))
            .filter(|r| is_nd(r) && !dropped.contains(&(b, a)));
        match reverse {
            Some(r) if a < b => {
                nd_units.push(Unit::Pair(a, b, e.best_statistic.max(r.best_statistic)))
            }
            Some(_) => {}
            None => nd_units.push(Unit::Single((a, b), *e)),
        }
    }
    by_significance(&mut confirmed_units);
    by_significance(&mut nd_units);

    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut kept: BTreeMap<Arrow, EdgeEvidence> = BTreeMap::new();
    let mut try_insert =
        |arrow: Arrow, evidence: EdgeEvidence, adj: &mut Vec<Vec<usize>>| -> bool {
            let (a, b) = arrow;
            if reaches(adj, b.0, a.0) {
                return false;
            }
            adj[a.0].push(b.0);
            kept.insert(arrow, evidence);
            true
        };
    for unit in confirmed_units.into_iter().chain(nd_units) {
        match unit {
            Unit::Single(arrow, e) => {
                let kind = if is_nd(&e) {
                    EvidenceKind::Flagged
                } else {
                    e.kind
                };
                try_insert(arrow, EdgeEvidence { kind, ..e }, &mut adj);
            }
            Unit::Pair(lo, hi, statistic) => {
                let evidence = EdgeEvidence {
                    kind: EvidenceKind::Flagged,
                    best_statistic: statistic,
                    undirected: true,
                };
                if !try_insert((lo, hi), evidence, &mut adj) {
                    try_insert((hi, lo), evidence, &mut adj);
                }
            }
        }
    }

    let diagram = CausalDiagram::new(candidate.variables.clone(), kept.keys().copied())?;
    Ok(LearnedGraph {
        diagram,
        evidence: kept,
    })
}
