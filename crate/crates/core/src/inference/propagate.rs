use std::collections::BTreeMap;

use super::{is_polytree, BeliefMap, Evidence};
use crate::cbn::{CausalBayesianNetwork, Cpt};
use crate::error::{Error, Result};
use crate::model::Arrow;

/// Stop once no message moves by more than this.
pub const CONVERGENCE_TOLERANCE: f64 = 1e-12;

/// Messages keyed by the structure arrow `(parent, child)` they travel on.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MessageStore {
    /// `pi[(u, x)]`: what parent `u` tells child `x` about `u`.
    pub pi: BTreeMap<Arrow, [f64; 2]>,
    /// `lambda[(u, x)]`: what child `x` tells parent `u` about `u`.
    pub lambda: BTreeMap<Arrow, [f64; 2]>,
    /// Sweeps that changed at least one message.
    pub sweeps: usize,
}

fn normalize(v: [f64; 2]) -> Result<[f64; 2]> {
    let s = v[0] + v[1];
    if s <= 0.0 || !s.is_finite() {
        return Err(Error::ZeroProbabilityEvidence);
    }
    Ok([v[0] / s, v[1] / s])
}

fn indicator(evidence: &Evidence, x: usize) -> [f64; 2] {
    match evidence.get(crate::model::VariableId(x)) {
        Some(true) => [0.0, 1.0],
        Some(false) => [1.0, 0.0],
        None => [1.0, 1.0],
    }
}

/// `Σ_u P(x | u) Π_k w_k(u_k)` for both values of `x`, where parent `skip`
/// (if any) is clamped to `clamp` instead of weighted.
fn weighted_cpt(cpt: &Cpt, weights: &[[f64; 2]], skip: Option<(usize, bool)>) -> [f64; 2] {
    let k = cpt.parents.len();
    let mut out = [0.0; 2];
    for (row, &p) in cpt.rows.iter().enumerate() {
        let mut w = 1.0;
        for (i, weight) in weights.iter().enumerate() {
            let bit = (row >> (k - 1 - i)) & 1 == 1;
            match skip {
                Some((s, v)) if s == i => {
                    if bit != v {
                        w = 0.0;
                    }
                }
                _ => w *= weight[bit as usize],
            }
        }
        out[0] += w * (1.0 - p);
        out[1] += w * p;
    }
    out
}

/// Pearl's lambda/pi propagation, iterated to a fixed point. Exact on
/// polytrees; other structures are refused.
pub fn propagate(
    cbn: &CausalBayesianNetwork,
    evidence: &Evidence,
) -> Result<(BeliefMap, MessageStore)> {
    if !is_polytree(&cbn.structure) {
        return Err(Error::NotPolytree);
    }
    let n = cbn.len();
    evidence.check(n)?;
    let children: Vec<Vec<usize>> = (0..n)
        .map(|x| {
            cbn.structure
                .children(crate::model::VariableId(x))
                .into_iter()
                .map(|c| c.0)
                .collect()
        })
        .collect();

    let mut store = MessageStore::default();
    for &arrow in cbn.structure.arrows() {
        store.pi.insert(arrow, [0.5, 0.5]);
        store.lambda.insert(arrow, [0.5, 0.5]);
    }

    let incoming_pi = |store: &MessageStore, x: usize| -> Vec<[f64; 2]> {
        let cpt = &cbn.cpts[x];
        cpt.parents
            .iter()
            .map(|u| store.pi[&(*u, cpt.owner)])
            .collect()
    };
    // λ_e(x) Π_{children except `skip`} λ_{c→x}(x)
    let lambda_product = |store: &MessageStore, x: usize, skip: Option<usize>| -> [f64; 2] {
        let mut l = indicator(evidence, x);
        for &c in &children[x] {
            if Some(c) != skip {
                let m = store.lambda[&(cbn.cpts[x].owner, cbn.cpts[c].owner)];
                l = [l[0] * m[0], l[1] * m[1]];
            }
        }
        l
    };

    // A polytree settles within 2 * diameter <= 2n sweeps; the slack covers
    // the sweep that confirms convergence.
    let max_sweeps = 2 * n + 2;
    loop {
        let mut next = store.clone();
        let mut delta: f64 = 0.0;
        for &(u, x) in cbn.structure.arrows() {
            // π_{u→x}(u) = π(u) λ_e(u) Π_{other children} λ
            let pi_u = weighted_cpt(&cbn.cpts[u.0], &incoming_pi(&store, u.0), None);
            let l = lambda_product(&store, u.0, Some(x.0));
            let msg = normalize([pi_u[0] * l[0], pi_u[1] * l[1]])?;
            let old = store.pi[&(u, x)];
            delta = delta
                .max((msg[0] - old[0]).abs())
                .max((msg[1] - old[1]).abs());
            next.pi.insert((u, x), msg);

            // λ_{x→u}(u) = Σ_x λ(x) Σ_{other parents} P(x | ...) Π π
            let cpt = &cbn.cpts[x.0];
            let i = cpt
                .parents
                .iter()
                .position(|p| *p == u)
                .expect("parent in cpt");
            let weights = incoming_pi(&store, x.0);
            let lx = lambda_product(&store, x.0, None);
            let mut msg = [0.0; 2];
            for (v, slot) in msg.iter_mut().enumerate() {
                let px = weighted_cpt(cpt, &weights, Some((i, v == 1)));
                *slot = lx[0] * px[0] + lx[1] * px[1];
            }
            let msg = normalize(msg)?;
            let old = store.lambda[&(u, x)];
            delta = delta
                .max((msg[0] - old[0]).abs())
                .max((msg[1] - old[1]).abs());
            next.lambda.insert((u, x), msg);
        }
        store.pi = next.pi;
        store.lambda = next.lambda;
        if delta < CONVERGENCE_TOLERANCE {
            break;
        }
        store.sweeps += 1;
        if store.sweeps > max_sweeps {
            return Err(Error::Structural(
                "belief propagation did not converge".into(),
            ));
        }
    }

    let beliefs = (0..n)
        .map(|x| {
            let p = weighted_cpt(&cbn.cpts[x], &incoming_pi(&store, x), None);
            let l = lambda_product(&store, x, None);
            normalize([p[0] * l[0], p[1] * l[1]])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((BeliefMap { beliefs }, store))
}
