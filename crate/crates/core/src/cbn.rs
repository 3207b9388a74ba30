//! Parameter learning for a fixed causal structure.

use crate::error::{Error, Result};
use crate::model::{
    check_acyclic, row_bits, CausalDiagram, Intervention, Mechanism, Scm, VariableId,
};
use crate::simulator::{derive_seed, Dataset, Environment};

/// Where a CPT row's probability came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowProvenance {
    /// Observational frequency over this many matching records.
    Estimated(usize),
    /// No matching records; 0.5 by symmetry.
    Smoothed,
    /// Re-estimated from this many records under `do(parents = row)`.
    InterventionAugmented(usize),
}

impl RowProvenance {
    pub fn count(self) -> usize {
        match self {
            RowProvenance::Estimated(n) | RowProvenance::InterventionAugmented(n) => n,
            RowProvenance::Smoothed => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cpt {
    pub owner: VariableId,
    /// Ordered parents; the first is the most significant row bit.
    pub parents: Vec<VariableId>,
    /// P(owner = 1 | parent assignment).
    pub rows: Vec<f64>,
    pub provenance: Vec<RowProvenance>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CausalBayesianNetwork {
    pub structure: CausalDiagram,
    pub cpts: Vec<Cpt>,
}

impl CausalBayesianNetwork {
    pub fn cpt(&self, id: VariableId) -> &Cpt {
        &self.cpts[id.0]
    }

    pub fn len(&self) -> usize {
        self.structure.len()
    }

    pub fn is_empty(&self) -> bool {
        self.structure.is_empty()
    }

    /// The network as a generative model (drops provenance).
    pub fn to_scm(&self) -> Result<Scm> {
        let mechanisms = self
            .cpts
            .iter()
            .map(|c| Mechanism {
                parents: c.parents.clone(),
                rows: c.rows.clone(),
            })
            .collect();
        Scm::new(self.structure.clone(), mechanisms)
    }

    /// Wraps a generative model; every row is treated as fully estimated.
    pub fn from_scm(scm: &Scm) -> Self {
        let cpts = scm
            .mechanisms()
            .iter()
            .enumerate()
            .map(|(i, m)| Cpt {
                owner: VariableId(i),
                parents: m.parents.clone(),
                rows: m.rows.clone(),
                provenance: vec![RowProvenance::Estimated(usize::MAX); m.rows.len()],
            })
            .collect();
        CausalBayesianNetwork {
            structure: scm.diagram().clone(),
            cpts,
        }
    }
}

fn row_of(parents: &[VariableId], state: &[bool]) -> usize {
    parents
        .iter()
        .fold(0usize, |acc, p| (acc << 1) | state[p.0] as usize)
}

/// Maximum-likelihood CPTs with additive smoothing:
/// `(N1 + c) / (N0 + N1 + 2c)` for pseudo-count `c`. Only observational
/// records are counted; rows without any record are 0.5 and `Smoothed`.
pub fn fit_mle(
    structure: &CausalDiagram,
    dataset: &Dataset,
    pseudo_count: f64,
) -> Result<CausalBayesianNetwork> {
    if pseudo_count < 0.0 || !pseudo_count.is_finite() {
        return Err(Error::Config(format!(
            "invalid pseudo-count {}",
            pseudo_count
        )));
    }
    if !check_acyclic(structure).is_acyclic() {
        return Err(Error::Structural("structure is cyclic".into()));
    }
    // dataset column for each structure variable
    let columns: Vec<usize> = structure
        .variables()
        .iter()
        .map(|v| {
            dataset
                .id_of(&v.name)
                .map(|id| id.0)
                .ok_or_else(|| Error::Structural(format!("dataset lacks variable '{}'", v.name)))
        })
        .collect::<Result<_>>()?;

    let n = structure.len();
    let parents: Vec<Vec<VariableId>> = (0..n).map(|i| structure.parents(VariableId(i))).collect();
    let mut counts: Vec<Vec<[usize; 2]>> =
        parents.iter().map(|p| vec![[0, 0]; 1 << p.len()]).collect();
    let mut projected = vec![false; n];
    for state in dataset.observational() {
        for (i, &c) in columns.iter().enumerate() {
            projected[i] = state.values[c];
        }
        for i in 0..n {
            let row = row_of(&parents[i], &projected);
            counts[i][row][projected[i] as usize] += 1;
        }
    }

    let cpts = (0..n)
        .map(|i| {
            let (rows, provenance) = counts[i]
                .iter()
                .map(|&[n0, n1]| {
                    let total = n0 + n1;
                    if total == 0 {
                        (0.5, RowProvenance::Smoothed)
                    } else {
                        let p = (n1 as f64 + pseudo_count) / (total as f64 + 2.0 * pseudo_count);
                        (p, RowProvenance::Estimated(total))
                    }
                })
                .unzip();
            Cpt {
                owner: VariableId(i),
                parents: parents[i].clone(),
                rows,
                provenance,
            }
        })
        .collect();
    Ok(CausalBayesianNetwork {
        structure: structure.clone(),
        cpts,
    })
}

/// Fills sparse CPT rows by experiment: every row seen fewer than
/// `min_count` times whose parents are all doable is re-estimated from
/// `samples` records drawn under `do(parents = row)`. All draws happen
/// before any row changes, so a failing environment leaves nothing half
/// updated.
pub fn augment_with_interventions<E: Environment + ?Sized>(
    cbn: &CausalBayesianNetwork,
    env: &E,
    min_count: usize,
    samples: usize,
    seed: u64,
) -> Result<CausalBayesianNetwork> {
    if min_count == 0 || samples == 0 {
        return Err(Error::Config(
            "min_count and samples must be at least 1".into(),
        ));
    }
    let env_vars = env.variables();
    let mut updates = Vec::new();
    for cpt in &cbn.cpts {
        let env_parents = cpt
            .parents
            .iter()
            .map(|p| {
                let name = cbn.structure.name(*p);
                env_vars.iter().find(|x| x.name == name).ok_or_else(|| {
                    Error::Environment(format!("environment lacks variable '{}'", name))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let all_doable = cpt
            .parents
            .iter()
            .zip(&env_parents)
            .all(|(p, e)| cbn.structure.variable(*p).doable && e.doable);
        if !all_doable {
            continue;
        }
        for (row, prov) in cpt.provenance.iter().enumerate() {
            if prov.count() >= min_count {
                continue;
            }
            let bits = row_bits(row, cpt.parents.len());
            let intervention: Intervention = env_parents.iter().map(|e| e.id).zip(bits).collect();
            let owner_name = cbn.structure.name(cpt.owner);
            let data = env
                .intervene(
                    &intervention,
                    samples,
                    derive_seed(seed, &[cpt.owner.0 as u64, row as u64]),
                )
                .map_err(|e| match e {
                    Error::Environment(_) => e,
                    other => Error::Environment(other.to_string()),
                })?;
            let column = data.id_of(owner_name).ok_or_else(|| {
                Error::Environment(format!("environment lacks variable '{}'", owner_name))
            })?;
            let ones = data.records.iter().filter(|r| r.state.get(column)).count();
            updates.push((cpt.owner, row, ones as f64 / data.len() as f64, data.len()));
        }
    }
    let mut out = cbn.clone();
    for (owner, row, p, n) in updates {
        out.cpts[owner.0].rows[row] = p;
        out.cpts[owner.0].provenance[row] = RowProvenance::InterventionAugmented(n);
    }
    Ok(out)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<String>,
    /// `(variable, row)` of rows that were never observed.
    pub smoothed_rows: Vec<(VariableId, usize)>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn validate_cbn(cbn: &CausalBayesianNetwork) -> ValidationReport {
    let mut report = ValidationReport::default();
    let s = &cbn.structure;
    if !check_acyclic(s).is_acyclic() {
        report.violations.push("structure is cyclic".into());
    }
    if cbn.cpts.len() != s.len() {
        report
            .violations
            .push(format!("{} CPTs for {} variables", cbn.cpts.len(), s.len()));
    }
    for (i, cpt) in cbn.cpts.iter().enumerate() {
        let Some(owner) = s.variables().get(cpt.owner.0) else {
            report
                .violations
                .push(format!("CPT {} owned by unknown variable {}", i, cpt.owner));
            continue;
        };
        let name = &owner.name;
        if cpt.owner.0 != i {
            report
                .violations
                .push(format!("CPT {} is owned by '{}'", i, name));
        }
        let mut parents = cpt.parents.clone();
        parents.sort();
        if parents != s.parents(cpt.owner) {
            report.violations.push(format!(
                "CPT parents of '{}' differ from the structure",
                name
            ));
        }
        let expected = 1usize << cpt.parents.len();
        if cpt.rows.len() != expected {
            report.violations.push(format!(
                "'{}' has {} rows, expected {}",
                name,
                cpt.rows.len(),
                expected
            ));
        }
        if cpt.provenance.len() != cpt.rows.len() {
            report
                .violations
                .push(format!("'{}' provenance does not cover every row", name));
        }
        for (row, p) in cpt.rows.iter().enumerate() {
            if !(0.0..=1.0).contains(p) {
                report
                    .violations
                    .push(format!("'{}' row {} has probability {}", name, row, p));
            }
        }
        for (row, prov) in cpt.provenance.iter().enumerate() {
            if *prov == RowProvenance::Smoothed {
                report.smoothed_rows.push((cpt.owner, row));
            }
        }
    }
    report
}
