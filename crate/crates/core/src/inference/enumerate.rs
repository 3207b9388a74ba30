use super::{BeliefMap, Evidence};
use crate::cbn::CausalBayesianNetwork;
use crate::error::{Error, Result};

pub const MAX_ENUMERATION_VARIABLES: usize = 25;

/// Exact marginals by summing the joint over every state consistent with
/// the evidence.
pub fn enumerate_posterior(cbn: &CausalBayesianNetwork, evidence: &Evidence) -> Result<BeliefMap> {
    let n = cbn.len();
    if n > MAX_ENUMERATION_VARIABLES {
        return Err(Error::Capacity {
            variables: n,
            limit: MAX_ENUMERATION_VARIABLES,
        });
    }
    evidence.check(n)?;
    let free: Vec<usize> = (0..n)
        .filter(|i| evidence.values.keys().all(|e| e.0 != *i))
        .collect();
    let mut state = vec![false; n];
    for (id, v) in &evidence.values {
        state[id.0] = *v;
    }
    let mut mass = vec![[0.0f64; 2]; n];
    let mut total = 0.0;
    for bits in 0u64..1u64 << free.len() {
        for (k, &i) in free.iter().enumerate() {
            state[i] = (bits >> k) & 1 == 1;
        }
        let joint: f64 = cbn
            .cpts
            .iter()
            .map(|cpt| {
                let row = cpt
                    .parents
                    .iter()
                    .fold(0usize, |acc, p| (acc << 1) | state[p.0] as usize);
                let p = cpt.rows[row];
                if state[cpt.owner.0] {
                    p
                } else {
                    1.0 - p
                }
            })
            .product();
        if joint == 0.0 {
            continue;
        }
        total += joint;
        for (i, m) in mass.iter_mut().enumerate() {
            m[state[i] as usize] += joint;
        }
    }
    if total <= 0.0 {
        return Err(Error::ZeroProbabilityEvidence);
    }
    Ok(BeliefMap {
        beliefs: mass
            .into_iter()
            .map(|[a, b]| [a / total, b / total])
            .collect(),
    })
}
