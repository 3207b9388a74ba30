//! Boolean causal models: variables, causal diagrams, structural causal
//! models (one CPT per variable) and the do-operator.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};
use std::fmt;

use crate::error::{Error, Result};

/// Index of a variable inside a model. Ordering of ids is the tie-breaking
/// order used everywhere in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VariableId(pub usize);

impl VariableId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for VariableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Variable {
    pub id: VariableId,
    pub name: String,
    /// Whether the environment permits interventions on this variable.
    pub doable: bool,
}

/// A directed arrow `cause -> effect`.
pub type Arrow = (VariableId, VariableId);

/// Variables plus a set of arrows between them.
///
/// Construction rejects self-loops, dangling endpoints and duplicate names;
/// acyclicity is a separate check because discovery manipulates cyclic
/// intermediate graphs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CausalDiagram {
    variables: Vec<Variable>,
    arrows: BTreeSet<Arrow>,
}

impl CausalDiagram {
    pub fn new(variables: Vec<Variable>, arrows: impl IntoIterator<Item = Arrow>) -> Result<Self> {
        let mut names = BTreeSet::new();
        for (i, v) in variables.iter().enumerate() {
            if v.id.0 != i {
                return Err(Error::Structural(format!(
                    "variable '{}' has index {} at position {}",
                    v.name, v.id.0, i
                )));
            }
            if v.name.is_empty() {
                return Err(Error::Structural(format!(
                    "variable {} has an empty name",
                    i
                )));
            }
            if !names.insert(v.name.as_str()) {
                return Err(Error::Structural(format!(
                    "duplicate variable name '{}'",
                    v.name
                )));
            }
        }
        let n = variables.len();
        let mut set = BTreeSet::new();
        for (a, b) in arrows {
            if a.0 >= n || b.0 >= n {
                return Err(Error::Structural(format!(
                    "arrow {} -> {} references an undeclared variable",
                    a, b
                )));
            }
            if a == b {
                return Err(Error::Structural(format!(
                    "self-loop on '{}'",
                    variables[a.0].name
                )));
            }
            set.insert((a, b));
        }
        Ok(CausalDiagram {
            variables,
            arrows: set,
        })
    }

    /// Builds variables from `(name, doable)` pairs and arrows from name pairs.
    pub fn from_names(vars: &[(&str, bool)], arrows: &[(&str, &str)]) -> Result<Self> {
        let variables: Vec<Variable> = vars
            .iter()
            .enumerate()
            .map(|(i, (name, doable))| Variable {
                id: VariableId(i),
                name: name.to_string(),
                doable: *doable,
            })
            .collect();
        let lookup = |name: &str| {
            variables
                .iter()
                .find(|v| v.name == name)
                .map(|v| v.id)
                .ok_or_else(|| Error::Structural(format!("unknown variable '{}'", name)))
        };
        let arrows = arrows
            .iter()
            .map(|(a, b)| Ok((lookup(a)?, lookup(b)?)))
            .collect::<Result<Vec<_>>>()?;
        CausalDiagram::new(variables, arrows)
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    pub fn arrows(&self) -> &BTreeSet<Arrow> {
        &self.arrows
    }

    pub fn has_arrow(&self, a: VariableId, b: VariableId) -> bool {
        self.arrows.contains(&(a, b))
    }

    pub fn variable(&self, id: VariableId) -> &Variable {
        &self.variables[id.0]
    }

    pub fn name(&self, id: VariableId) -> &str {
        &self.variables[id.0].name
    }

    pub fn id_of(&self, name: &str) -> Option<VariableId> {
        self.variables.iter().find(|v| v.name == name).map(|v| v.id)
    }

    /// Parents in ascending id order.
    pub fn parents(&self, id: VariableId) -> Vec<VariableId> {
        self.arrows
            .iter()
            .filter(|(_, b)| *b == id)
            .map(|(a, _)| *a)
            .collect()
    }

    pub fn children(&self, id: VariableId) -> Vec<VariableId> {
        self.arrows
            .iter()
            .filter(|(a, _)| *a == id)
            .map(|(_, b)| *b)
            .collect()
    }

    pub fn with_arrows(&self, arrows: impl IntoIterator<Item = Arrow>) -> Result<Self> {
        CausalDiagram::new(self.variables.clone(), arrows)
    }

    pub fn with_doable(mut self, id: VariableId, doable: bool) -> Self {
        self.variables[id.0].doable = doable;
        self
    }

    pub fn arrow_label(&self, (a, b): Arrow) -> String {
        format!("{}->{}", self.name(a), self.name(b))
    }
}

/// Outcome of [`check_acyclic`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Acyclicity {
    Acyclic,
    /// A closed walk `v0, v1, ..., v0` following arrows.
    Cycle(Vec<VariableId>),
}

impl Acyclicity {
    pub fn is_acyclic(&self) -> bool {
        matches!(self, Acyclicity::Acyclic)
    }
}

/// Looks for a directed cycle over `n` nodes and `arrows`. Returns the first
/// one found by a DFS started from ascending node ids.
pub(crate) fn find_cycle(n: usize, arrows: &BTreeSet<Arrow>) -> Option<Vec<VariableId>> {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in arrows {
        adj[a.0].push(b.0);
    }
    // 0 = unvisited, 1 = on stack, 2 = done
    let mut state = vec![0u8; n];
    for root in 0..n {
        if state[root] != 0 {
            continue;
        }
        let mut stack: Vec<(usize, usize)> = vec![(root, 0)];
        state[root] = 1;
        while let Some(top) = stack.last_mut() {
            let node = top.0;
            if top.1 < adj[node].len() {
                let child = adj[node][top.1];
                top.1 += 1;
                match state[child] {
                    0 => {
                        state[child] = 1;
                        stack.push((child, 0));
                    }
                    1 => {
                        let pos = stack.iter().position(|&(v, _)| v == child).unwrap();
                        let mut walk: Vec<VariableId> =
                            stack[pos..].iter().map(|&(v, _)| VariableId(v)).collect();
                        walk.push(VariableId(child));
                        return Some(walk);
                    }
                    _ => {}
                }
            } else {
                state[node] = 2;
                stack.pop();
            }
        }
    }
    None
}

pub fn check_acyclic(diagram: &CausalDiagram) -> Acyclicity {
    match find_cycle(diagram.len(), diagram.arrows()) {
        None => Acyclicity::Acyclic,
        Some(c) => Acyclicity::Cycle(c),
    }
}

/// Kahn's algorithm, always releasing the smallest ready id first.
pub fn topological_order(diagram: &CausalDiagram) -> Result<Vec<VariableId>> {
    let n = diagram.len();
    let mut indegree = vec![0usize; n];
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in diagram.arrows() {
        indegree[b.0] += 1;
        adj[a.0].push(b.0);
    }
    let mut ready: BinaryHeap<Reverse<usize>> =
        (0..n).filter(|&i| indegree[i] == 0).map(Reverse).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(Reverse(i)) = ready.pop() {
        order.push(VariableId(i));
        for &c in &adj[i] {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                ready.push(Reverse(c));
            }
        }
    }
    if order.len() != n {
        return Err(Error::Structural(
            "diagram contains a directed cycle".into(),
        ));
    }
    Ok(order)
}

/// A do-assignment: every listed variable is forced to its value.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Intervention {
    pub assignments: BTreeMap<VariableId, bool>,
}

impl Intervention {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn single(id: VariableId, value: bool) -> Self {
        let mut i = Intervention::new();
        i.assignments.insert(id, value);
        i
    }

    pub fn with(mut self, id: VariableId, value: bool) -> Self {
        self.assignments.insert(id, value);
        self
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    pub fn get(&self, id: VariableId) -> Option<bool> {
        self.assignments.get(&id).copied()
    }
}

impl FromIterator<(VariableId, bool)> for Intervention {
    fn from_iter<I: IntoIterator<Item = (VariableId, bool)>>(iter: I) -> Self {
        Intervention {
            assignments: iter.into_iter().collect(),
        }
    }
}

/// Probability-of-true for each assignment of a variable's parents.
///
/// Row index packs parent values with the first parent as the most
/// significant bit, so row `0b01` of parents `[W, H]` is `W=0, H=1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mechanism {
    pub parents: Vec<VariableId>,
    pub rows: Vec<f64>,
}

impl Mechanism {
    pub fn root(p: f64) -> Self {
        Mechanism {
            parents: Vec::new(),
            rows: vec![p],
        }
    }

    pub fn row_index(&self, state: &[bool]) -> usize {
        self.parents
            .iter()
            .fold(0usize, |acc, p| (acc << 1) | state[p.0] as usize)
    }

    pub fn prob_true(&self, state: &[bool]) -> f64 {
        self.rows[self.row_index(state)]
    }
}

/// Decodes a row index into parent values, first parent first.
pub fn row_bits(row: usize, parents: usize) -> Vec<bool> {
    (0..parents)
        .map(|i| (row >> (parents - 1 - i)) & 1 == 1)
        .collect()
}

/// Formats a row index as the bit string used in scenario files.
pub fn row_label(row: usize, parents: usize) -> String {
    row_bits(row, parents)
        .into_iter()
        .map(|b| if b { '1' } else { '0' })
        .collect()
}

/// A Boolean structural causal model: an acyclic diagram and one CPT per
/// variable, whose parents are exactly the diagram's in-arrows.
#[derive(Debug, Clone, PartialEq)]
pub struct Scm {
    diagram: CausalDiagram,
    mechanisms: Vec<Mechanism>,
    order: Vec<VariableId>,
}

impl Scm {
    pub fn new(diagram: CausalDiagram, mechanisms: Vec<Mechanism>) -> Result<Self> {
        if mechanisms.len() != diagram.len() {
            return Err(Error::Structural(format!(
                "{} mechanisms for {} variables",
                mechanisms.len(),
                diagram.len()
            )));
        }
        for (i, m) in mechanisms.iter().enumerate() {
            let id = VariableId(i);
            let name = diagram.name(id);
            let mut declared: Vec<VariableId> = m.parents.clone();
            declared.sort();
            let before = declared.len();
            declared.dedup();
            if declared.len() != before {
                return Err(Error::Structural(format!(
                    "duplicate parent in mechanism of '{}'",
                    name
                )));
            }
            if declared != diagram.parents(id) {
                return Err(Error::Structural(format!(
                    "mechanism parents of '{}' do not match the diagram",
                    name
                )));
            }
            if m.rows.len() != 1usize << m.parents.len() {
                return Err(Error::Structural(format!(
                    "'{}' has {} CPT rows, expected {}",
                    name,
                    m.rows.len(),
                    1usize << m.parents.len()
                )));
            }
            if let Some(p) = m.rows.iter().find(|p| !(0.0..=1.0).contains(*p)) {
                return Err(Error::Structural(format!(
                    "probability {} out of [0,1] for '{}'",
                    p, name
                )));
            }
        }
        let order = topological_order(&diagram)?;
        Ok(Scm {
            diagram,
            mechanisms,
            order,
        })
    }

    pub fn diagram(&self) -> &CausalDiagram {
        &self.diagram
    }

    pub fn mechanisms(&self) -> &[Mechanism] {
        &self.mechanisms
    }

    pub fn mechanism(&self, id: VariableId) -> &Mechanism {
        &self.mechanisms[id.0]
    }

    pub fn order(&self) -> &[VariableId] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.diagram.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diagram.is_empty()
    }

    /// Copy with a different doability policy; mechanisms are untouched.
    pub fn with_doable(&self, id: VariableId, doable: bool) -> Scm {
        let mut out = self.clone();
        out.diagram = out.diagram.with_doable(id, doable);
        out
    }
}

/// The do-operator: cut every arrow into an assigned variable and pin it to
/// its value.
pub fn mutilate(scm: &Scm, intervention: &Intervention) -> Result<Scm> {
    let n = scm.len();
    if let Some(id) = intervention.assignments.keys().find(|id| id.0 >= n) {
        return Err(Error::Structural(format!(
            "intervention on unknown variable {}",
            id
        )));
    }
    if intervention.is_empty() {
        return Ok(scm.clone());
    }
    let arrows = scm
        .diagram
        .arrows()
        .iter()
        .copied()
        .filter(|(_, b)| intervention.get(*b).is_none());
    let diagram = scm.diagram.with_arrows(arrows)?;
    let mechanisms = scm
        .mechanisms
        .iter()
        .enumerate()
        .map(|(i, m)| match intervention.get(VariableId(i)) {
            Some(v) => Mechanism::root(if v { 1.0 } else { 0.0 }),
            None => m.clone(),
        })
        .collect();
    Scm::new(diagram, mechanisms)
}

/// One value per declared variable, indexed by [`VariableId`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WorldState {
    pub values: Vec<bool>,
}

impl WorldState {
    pub fn get(&self, id: VariableId) -> bool {
        self.values[id.0]
    }
}
