//! Causal structure learning from interventions, with an observational
//! fallback for variables that cannot be intervened on.
//!
//! [`run_discovery`] starts from the complete directed graph and prunes it by
//! increasing conditioning order. An arrow out of a doable variable `A` is
//! tested by forcing `A` to both values while holding a subset of `A`'s
//! neighbours fixed; it dies as soon as one held assignment shows no effect.
//! An arrow out of a non-doable variable can only be tested for
//! (conditional) correlation in the observational records.
//! [`resolve_to_dag`] then turns the survivors into a DAG.

mod diff;
mod resolve;

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::model::{Arrow, Intervention, Variable, VariableId};
use crate::simulator::{derive_seed, Dataset, Environment};
use crate::stats::{cond_independent, distributions_differ, TestOutcome};

pub use diff::{diff_graphs, EdgeDiff, NamedArrow};
pub use resolve::{resolve_to_dag, LearnedGraph};

const STREAM_OBSERVE: u64 = 0x6f62_7365_7276_6500;
const STREAM_INFLUENCE: u64 = 0x696e_666c_7565_6e00;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EvidenceKind {
    /// Survived every intervention test out of a doable variable.
    DoConfirmed,
    /// Out of a non-doable variable; only correlation supports it.
    NdCandidate,
    /// An ND arrow kept in the final DAG, potentially spurious.
    Flagged,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeEvidence {
    pub kind: EvidenceKind,
    /// Weakest conclusive chi-squared score seen while the arrow survived
    /// (0 when no test was conclusive). Lower means less significant.
    pub best_statistic: f64,
    /// Oriented from a pair of opposite ND arrows.
    pub undirected: bool,
}

/// How an arrow was eliminated during discovery.
#[derive(Debug, Clone, PartialEq)]
pub struct Removal {
    /// Conditioning order at which the arrow died.
    pub order: usize,
    /// True for an intervention test, false for an observational one.
    pub by_intervention: bool,
    /// Variables held fixed (or conditioned on) by the killing test, with
    /// the held values for intervention tests.
    pub witness: Intervention,
    pub conditioning: Vec<VariableId>,
    pub statistic: f64,
}

/// Working graph of the discovery loop.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateGraph {
    pub variables: Vec<Variable>,
    pub arrows: BTreeMap<Arrow, EdgeEvidence>,
    pub removed: BTreeMap<Arrow, Removal>,
    /// Arrow count after each conditioning order, starting with the
    /// complete graph.
    pub arrow_counts: Vec<usize>,
    /// Tests that could not conclude (small expected counts).
    pub inconclusive_tests: usize,
}

impl CandidateGraph {
    pub fn complete(variables: Vec<Variable>) -> Self {
        let n = variables.len();
        let mut arrows = BTreeMap::new();
        for a in 0..n {
            for b in 0..n {
                if a != b {
                    let kind = if variables[a].doable {
                        EvidenceKind::DoConfirmed
                    } else {
                        EvidenceKind::NdCandidate
                    };
                    arrows.insert(
                        (VariableId(a), VariableId(b)),
                        EdgeEvidence {
                            kind,
                            best_statistic: 0.0,
                            undirected: false,
                        },
                    );
                }
            }
        }
        let count = arrows.len();
        CandidateGraph {
            variables,
            arrows,
            removed: BTreeMap::new(),
            arrow_counts: vec![count],
            inconclusive_tests: 0,
        }
    }

    pub fn name(&self, id: VariableId) -> &str {
        &self.variables[id.0].name
    }

    pub fn id_of(&self, name: &str) -> Option<VariableId> {
        self.variables.iter().find(|v| v.name == name).map(|v| v.id)
    }

    pub fn has_arrow(&self, a: VariableId, b: VariableId) -> bool {
        self.arrows.contains_key(&(a, b))
    }

    /// Variables joined to `a` by a surviving arrow in either direction.
    pub fn neighbors(&self, a: VariableId) -> Vec<VariableId> {
        let set: BTreeSet<VariableId> = self
            .arrows
            .keys()
            .filter_map(|&(x, y)| {
                if x == a {
                    Some(y)
                } else if y == a {
                    Some(x)
                } else {
                    None
                }
            })
            .collect();
        set.into_iter().collect()
    }

    /// Pairs with ND arrows in both directions.
    pub fn undirected_pairs(&self) -> Vec<(VariableId, VariableId)> {
        self.arrows
            .iter()
            .filter(|(&(a, b), e)| {
                a < b
                    && e.kind == EvidenceKind::NdCandidate
                    && self
                        .arrows
                        .get(&(b, a))
                        .is_some_and(|r| r.kind == EvidenceKind::NdCandidate)
            })
            .map(|(&arrow, _)| arrow)
            .collect()
    }

    pub fn arrow_names(&self) -> BTreeSet<(String, String)> {
        self.arrows
            .keys()
            .map(|&(a, b)| (self.name(a).to_string(), self.name(b).to_string()))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscoveryConfig {
    pub alpha: f64,
    /// Samples drawn per arm (`do(a=0)` and `do(a=1)`) for each held
    /// assignment.
    pub interventions_per_assignment: usize,
    pub observational_samples: usize,
    /// Largest conditioning set size; `None` runs until no variable has
    /// enough neighbours.
    pub max_conditioning_order: Option<usize>,
    /// How many times an inconclusive intervention test may double its
    /// per-arm sample count before giving up (keeping the arrow).
    pub max_escalations: u32,
    /// Doublings a conclusive non-rejection must survive before it counts
    /// as "no influence". 0 decides on the first batch.
    pub confirmation_rounds: u32,
    pub seed: u64,
}

impl Default for DiscoveryConfig {
    fn default() -> Self {
        DiscoveryConfig {
            alpha: 0.05,
            interventions_per_assignment: 20,
            observational_samples: 500,
            max_conditioning_order: None,
            max_escalations: 4,
            confirmation_rounds: 1,
            seed: 0,
        }
    }
}

impl DiscoveryConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn validate(&self) -> Result<()> {
        crate::stats::critical_value(self.alpha)?;
        if self.interventions_per_assignment == 0 || self.observational_samples == 0 {
            return Err(Error::Config("sample counts must be positive".into()));
        }
        Ok(())
    }
}

/// Outcome of one held assignment within an [`influence_test`].
#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentOutcome {
    pub held: Intervention,
    pub outcome: TestOutcome,
    pub samples_per_arm: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InfluenceSummary {
    pub source: VariableId,
    pub target: VariableId,
    pub lock: Vec<VariableId>,
    pub assignments: Vec<AssignmentOutcome>,
}

impl InfluenceSummary {
    /// First held assignment under which the source shows no effect.
    pub fn blocked(&self) -> Option<&AssignmentOutcome> {
        self.assignments
            .iter()
            .find(|a| a.outcome.accepts_independence())
    }

    pub fn all_reject(&self) -> bool {
        self.assignments
            .iter()
            .all(|a| a.outcome.reject_independence)
    }

    /// Smallest conclusive statistic, if any.
    pub fn weakest_statistic(&self) -> Option<f64> {
        self.assignments
            .iter()
            .filter(|a| !a.outcome.inconclusive)
            .map(|a| a.outcome.statistic)
            .reduce(f64::min)
    }
}

/// Held values for assignment index `u` over `lock`, first lock variable as
/// the most significant bit.
fn held_assignment(lock: &[VariableId], u: usize) -> Intervention {
    lock.iter()
        .enumerate()
        .map(|(i, &v)| (v, (u >> (lock.len() - 1 - i)) & 1 == 1))
        .collect()
}

fn require_doable(vars: &[Variable], id: VariableId) -> Result<()> {
    let v = vars
        .get(id.0)
        .ok_or_else(|| Error::Structural(format!("unknown variable {}", id)))?;
    if !v.doable {
        return Err(Error::Policy(format!("'{}' is not doable", v.name)));
    }
    Ok(())
}

fn same_point_mass(a: &Dataset, b: &Dataset, target: VariableId) -> bool {
    let mut values = a
        .records
        .iter()
        .chain(&b.records)
        .map(|r| r.state.get(target));
    match values.next() {
        Some(first) => values.all(|v| v == first),
        None => false,
    }
}

/// Does forcing `a` change `b` while `lock` is held fixed? Runs one
/// two-arm comparison per assignment of `lock`.
pub fn influence_test<E: Environment + ?Sized>(
    env: &E,
    a: VariableId,
    b: VariableId,
    lock: &[VariableId],
    config: &DiscoveryConfig,
) -> Result<InfluenceSummary> {
    let vars = env.variables();
    if b.0 >= vars.len() {
        return Err(Error::Structural(format!("unknown variable {}", b)));
    }
    require_doable(vars, a)?;
    for &l in lock {
        require_doable(vars, l)?;
    }
    if a == b || lock.contains(&a) || lock.contains(&b) {
        return Err(Error::Structural(
            "source and target must be distinct and not held".into(),
        ));
    }
    let mut lock: Vec<VariableId> = lock.to_vec();
    lock.sort();
    lock.dedup();

    let mut assignments = Vec::with_capacity(1 << lock.len());
    for u in 0..1usize << lock.len() {
        let held = held_assignment(&lock, u);
        let mut key = vec![STREAM_INFLUENCE, a.0 as u64, b.0 as u64];
        for (id, v) in &held.assignments {
            key.push(id.0 as u64);
            key.push(*v as u64);
        }
        let base = derive_seed(config.seed, &key);
        let arms = [held.clone().with(a, false), held.clone().with(a, true)];

        let mut n = config.interventions_per_assignment;
        let mut data = Vec::with_capacity(2);
        for (arm, intervention) in arms.iter().enumerate() {
            data.push(env.intervene(intervention, n, derive_seed(base, &[arm as u64, 0]))?);
        }
        let mut outcome = distributions_differ(&data[0], &data[1], b, config.alpha)?;
        // A sparse target keeps doubling until the effect shows or the
        // budget runs out; a clean non-rejection is re-checked on a doubled
        // sample before it may remove an arrow.
        let limit = if outcome.inconclusive {
            config.max_escalations
        } else {
            config.confirmation_rounds
        };
        let mut round = 0;
        while !outcome.reject_independence && round < limit {
            round += 1;
            for (arm, intervention) in arms.iter().enumerate() {
                let extra = env.intervene(
                    intervention,
                    n,
                    derive_seed(base, &[arm as u64, round as u64]),
                )?;
                data[arm].extend(extra)?;
            }
            n *= 2;
            outcome = distributions_differ(&data[0], &data[1], b, config.alpha)?;
        }
        if outcome.inconclusive && same_point_mass(&data[0], &data[1], b) {
            // nothing left to learn: both arms pinned to one value
            outcome.inconclusive = false;
        }
        assignments.push(AssignmentOutcome {
            held,
            outcome,
            samples_per_arm: n,
        });
    }
    Ok(InfluenceSummary {
        source: a,
        target: b,
        lock,
        assignments,
    })
}

/// Observations used by [`run_discovery`] for a given config.
pub fn discovery_observations<E: Environment + ?Sized>(
    env: &E,
    config: &DiscoveryConfig,
) -> Result<Dataset> {
    env.observe(
        config.observational_samples,
        derive_seed(config.seed, &[STREAM_OBSERVE]),
    )
}

/// Runs the learning loop, drawing its observational records from `env`.
pub fn run_discovery<E: Environment + ?Sized>(
    env: &E,
    config: &DiscoveryConfig,
) -> Result<CandidateGraph> {
    config.validate()?;
    let obs = discovery_observations(env, config)?;
    run_discovery_with(env, &obs, config)
}

fn combinations(items: &[VariableId], k: usize) -> Vec<Vec<VariableId>> {
    fn rec(
        items: &[VariableId],
        k: usize,
        start: usize,
        cur: &mut Vec<VariableId>,
        out: &mut Vec<Vec<VariableId>>,
    ) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..items.len() {
            if items.len() - i < k - cur.len() {
                break;
            }
            cur.push(items[i]);
            rec(items, k, i + 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(items, k, 0, &mut Vec::with_capacity(k), &mut out);
    out
}

/// Runs the learning loop with caller-supplied observational records.
///
/// For a doable source whose conditioning subset contains a non-doable
/// variable the subset cannot be held by intervention; the arrow is then
/// tested for conditional independence in `observations` instead.
pub fn run_discovery_with<E: Environment + ?Sized>(
    env: &E,
    observations: &Dataset,
    config: &DiscoveryConfig,
) -> Result<CandidateGraph> {
    config.validate()?;
    let variables = env.variables().to_vec();
    let names: Vec<&str> = variables.iter().map(|v| v.name.as_str()).collect();
    if observations
        .variables
        .iter()
        .map(String::as_str)
        .ne(names.iter().copied())
    {
        return Err(Error::Structural(
            "observations do not match the environment's variables".into(),
        ));
    }
    let n = variables.len();
    let mut graph = CandidateGraph::complete(variables.clone());
    let mut support: BTreeMap<Arrow, f64> = BTreeMap::new();

    let mut k = 0usize;
    loop {
        if config.max_conditioning_order.is_some_and(|m| k > m) {
            break;
        }
        if !(0..n).any(|a| graph.neighbors(VariableId(a)).len() > k) {
            break;
        }
        for a in (0..n).map(VariableId) {
            let adjacent = graph.neighbors(a);
            if adjacent.len() <= k {
                continue;
            }
            for &b in &adjacent {
                if !graph.has_arrow(a, b) {
                    continue;
                }
                let others: Vec<VariableId> =
                    adjacent.iter().copied().filter(|&x| x != b).collect();
                for subset in combinations(&others, k) {
                    let removal = if variables[a.0].doable
                        && subset.iter().all(|s| variables[s.0].doable)
                    {
                        let summary = influence_test(env, a, b, &subset, config)?;
                        graph.inconclusive_tests += summary
                            .assignments
                            .iter()
                            .filter(|x| x.outcome.inconclusive)
                            .count();
                        if let Some(w) = summary.weakest_statistic() {
                            let s = support.entry((a, b)).or_insert(f64::INFINITY);
                            *s = s.min(w);
                        }
                        summary.blocked().map(|blocked| Removal {
                            order: k,
                            by_intervention: true,
                            witness: blocked.held.clone(),
                            conditioning: subset.clone(),
                            statistic: blocked.outcome.statistic,
                        })
                    } else {
                        let outcome = cond_independent(observations, a, b, &subset, config.alpha)?;
                        if outcome.inconclusive {
                            graph.inconclusive_tests += 1;
                        } else {
                            let s = support.entry((a, b)).or_insert(f64::INFINITY);
                            *s = s.min(outcome.statistic);
                        }
                        outcome.accepts_independence().then(|| Removal {
                            order: k,
                            by_intervention: false,
                            witness: Intervention::new(),
                            conditioning: subset.clone(),
                            statistic: outcome.statistic,
                        })
                    };
                    if let Some(r) = removal {
                        graph.arrows.remove(&(a, b));
                        graph.removed.insert((a, b), r);
                        break;
                    }
                }
            }
        }
        graph.arrow_counts.push(graph.arrows.len());
        k += 1;
    }

    for (arrow, evidence) in graph.arrows.iter_mut() {
        evidence.best_statistic = support
            .get(arrow)
            .copied()
            .filter(|s| s.is_finite())
            .unwrap_or(0.0);
    }
    Ok(graph)
}

/// Discovery followed by DAG resolution, sharing the same observations.
pub fn learn_structure<E: Environment + ?Sized>(
    env: &E,
    config: &DiscoveryConfig,
) -> Result<(CandidateGraph, LearnedGraph)> {
    config.validate()?;
    let obs = discovery_observations(env, config)?;
    let raw = run_discovery_with(env, &obs, config)?;
    let learned = resolve_to_dag(&raw, Some(&obs), config.alpha)?;
    Ok((raw, learned))
}
