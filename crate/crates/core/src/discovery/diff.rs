use std::collections::BTreeSet;

use super::{EvidenceKind, LearnedGraph};
use crate::error::{Error, Result};
use crate::model::CausalDiagram;

/// An arrow named by its endpoints, `(cause, effect)`.
pub type NamedArrow = (String, String);

/// Comparison of a learned graph against ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeDiff {
    pub correct: BTreeSet<NamedArrow>,
    pub missed: BTreeSet<NamedArrow>,
    pub added: BTreeSet<NamedArrow>,
    /// Added arrows that were flagged as potentially spurious.
    pub flagged_spurious: BTreeSet<NamedArrow>,
    /// Learned arrows oriented from an undirected ND pair.
    pub bidirectional: BTreeSet<NamedArrow>,
    pub precision: f64,
    pub recall: f64,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        1.0
    } else {
        num as f64 / den as f64
    }
}

/// Matches arrows by variable name; both graphs must declare the same names.
pub fn diff_graphs(learned: &LearnedGraph, truth: &CausalDiagram) -> Result<EdgeDiff> {
    let names = |d: &CausalDiagram| -> BTreeSet<String> {
        d.variables().iter().map(|v| v.name.clone()).collect()
    };
    if names(&learned.diagram) != names(truth) {
        return Err(Error::Structural(
            "learned and true graphs declare different variables".into(),
        ));
    }
    let named = |d: &CausalDiagram, a: &crate::model::Arrow| {
        (d.name(a.0).to_string(), d.name(a.1).to_string())
    };
    let learned_set: BTreeSet<NamedArrow> = learned
        .diagram
        .arrows()
        .iter()
        .map(|a| named(&learned.diagram, a))
        .collect();
    let truth_set: BTreeSet<NamedArrow> = truth.arrows().iter().map(|a| named(truth, a)).collect();

    let correct: BTreeSet<NamedArrow> = learned_set.intersection(&truth_set).cloned().collect();
    let missed: BTreeSet<NamedArrow> = truth_set.difference(&learned_set).cloned().collect();
    let added: BTreeSet<NamedArrow> = learned_set.difference(&truth_set).cloned().collect();
    let flagged_spurious = learned
        .evidence
        .iter()
        .filter(|(_, e)| e.kind == EvidenceKind::Flagged)
        .map(|(a, _)| named(&learned.diagram, a))
        .filter(|a| added.contains(a))
        .collect();
    let bidirectional = learned
        .evidence
        .iter()
        .filter(|(_, e)| e.undirected)
        .map(|(a, _)| named(&learned.diagram, a))
        .collect();
    Ok(EdgeDiff {
        precision: ratio(correct.len(), correct.len() + added.len()),
        recall: ratio(correct.len(), correct.len() + missed.len()),
        correct,
        missed,
        added,
        flagged_spurious,
        bidirectional,
    })
}
