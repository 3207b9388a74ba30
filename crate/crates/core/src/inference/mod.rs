//! Posterior queries on a [`CausalBayesianNetwork`]: exact enumeration and
//! Pearl's lambda/pi message passing on polytrees.

mod enumerate;
mod propagate;

use std::collections::BTreeMap;

use crate::cbn::CausalBayesianNetwork;
use crate::error::{Error, Result};
use crate::model::{CausalDiagram, VariableId};

pub use enumerate::{enumerate_posterior, MAX_ENUMERATION_VARIABLES};
pub use propagate::{propagate, MessageStore, CONVERGENCE_TOLERANCE};

/// Observed values.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Evidence {
    pub values: BTreeMap<VariableId, bool>,
}

impl Evidence {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, id: VariableId, value: bool) -> Self {
        self.values.insert(id, value);
        self
    }

    pub fn get(&self, id: VariableId) -> Option<bool> {
        self.values.get(&id).copied()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub(crate) fn check(&self, n: usize) -> Result<()> {
        match self.values.keys().find(|id| id.0 >= n) {
            Some(id) => Err(Error::Structural(format!(
                "evidence on unknown variable {}",
                id
            ))),
            None => Ok(()),
        }
    }
}

impl FromIterator<(VariableId, bool)> for Evidence {
    fn from_iter<I: IntoIterator<Item = (VariableId, bool)>>(iter: I) -> Self {
        Evidence {
            values: iter.into_iter().collect(),
        }
    }
}

/// `(P(x=0), P(x=1))` per variable, indexed by id.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefMap {
    pub beliefs: Vec<[f64; 2]>,
}

impl BeliefMap {
    pub fn get(&self, id: VariableId) -> [f64; 2] {
        self.beliefs[id.0]
    }

    pub fn prob_true(&self, id: VariableId) -> f64 {
        self.beliefs[id.0][1]
    }

    /// Largest componentwise difference.
    pub fn max_abs_diff(&self, other: &BeliefMap) -> f64 {
        self.beliefs
            .iter()
            .zip(&other.beliefs)
            .flat_map(|(a, b)| [(a[0] - b[0]).abs(), (a[1] - b[1]).abs()])
            .fold(0.0, f64::max)
    }
}

/// True iff the undirected skeleton is a forest.
pub fn is_polytree(structure: &CausalDiagram) -> bool {
    let mut parent: Vec<usize> = (0..structure.len()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for &(a, b) in structure.arrows() {
        let (ra, rb) = (find(&mut parent, a.0), find(&mut parent, b.0));
        if ra == rb {
            return false;
        }
        parent[ra] = rb;
    }
    true
}

/// Propagation on polytrees, enumeration otherwise.
pub fn posterior(cbn: &CausalBayesianNetwork, evidence: &Evidence) -> Result<BeliefMap> {
    if is_polytree(&cbn.structure) {
        propagate(cbn, evidence).map(|(b, _)| b)
    } else {
        enumerate_posterior(cbn, evidence)
    }
}
