//! Browser bindings for the smart-home demo in `www/`.
//!
//! Every entry point takes and returns JSON text. The plain functions are
//! what the host tests call; the `wasm_bindgen` wrappers turn an `Err` into
//! a thrown JS error.

use std::collections::BTreeMap;

use dolearn::cbn::fit_mle;
use dolearn::discovery::{diff_graphs, learn_structure, DiscoveryConfig, EvidenceKind};
use dolearn::inference::{enumerate_posterior, is_polytree, propagate, Evidence};
use dolearn::io::render_learned;
use dolearn::model::CausalDiagram;
use dolearn::simulator::{
    build_scenario, sample_dataset, AuditingEnvironment, ScenarioConfig, ScenarioOptions,
    ScmEnvironment,
};
use dolearn::stats::{chi_squared, ContingencyTable};
use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

/// Which smart-home variant to simulate.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default)]
pub struct Scenario {
    pub nd: Vec<String>,
    pub proximity_edge: bool,
    /// Overrides for named strengths such as `light_power_effect`.
    pub effects: BTreeMap<String, f64>,
}

impl Scenario {
    fn config(&self) -> ScenarioConfig {
        let options = self.effects.iter().fold(
            ScenarioOptions::default()
                .with_nd(self.nd.iter().cloned())
                .with_proximity(self.proximity_edge),
            |o, (k, v)| o.with_effect(k, *v),
        );
        ScenarioConfig::smart_home(options)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default)]
pub struct DiscoverRequest {
    #[serde(flatten)]
    pub scenario: Scenario,
    pub seed: u64,
    pub alpha: f64,
    pub interventions: usize,
    pub observations: usize,
}

impl Default for DiscoverRequest {
    fn default() -> Self {
        let d = DiscoveryConfig::default();
        DiscoverRequest {
            scenario: Scenario::default(),
            seed: d.seed,
            alpha: d.alpha,
            interventions: d.interventions_per_assignment,
            observations: d.observational_samples,
        }
    }
}

#[derive(Debug, Serialize, PartialEq)]
pub struct Node {
    pub name: String,
    pub doable: bool,
}

/// `class` is one of confirmed, flagged, missed, and the edge appears in
/// the learned graph unless it is missed.
#[derive(Debug, Serialize, PartialEq)]
pub struct Edge {
    pub from: String,
    pub to: String,
    pub class: String,
    pub correct: bool,
}

#[derive(Debug, Serialize)]
pub struct DiscoverResponse {
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
    pub precision: f64,
    pub recall: f64,
    pub interventions: usize,
    pub nd_interventions: usize,
    pub dot: String,
}

fn to_json<T: Serialize>(value: &T) -> Result<String, String> {
    serde_json::to_string(value).map_err(|e| e.to_string())
}

fn from_json<'a, T: Deserialize<'a>>(text: &'a str) -> Result<T, String> {
    serde_json::from_str(text).map_err(|e| format!("bad request: {}", e))
}

/// Runs discovery against the simulated home and scores it against truth.
pub fn discover_json(request: &str) -> Result<String, String> {
    let req: DiscoverRequest = from_json(request)?;
    let scm = build_scenario(&req.scenario.config()).map_err(|e| e.to_string())?;
    let env = AuditingEnvironment::new(ScmEnvironment::new(scm.clone()));
    let config = DiscoveryConfig {
        alpha: req.alpha,
        interventions_per_assignment: req.interventions,
        observational_samples: req.observations,
        seed: req.seed,
        ..DiscoveryConfig::default()
    };
    let (_, learned) = learn_structure(&env, &config).map_err(|e| e.to_string())?;
    let diff = diff_graphs(&learned, scm.diagram()).map_err(|e| e.to_string())?;
    let d = &learned.diagram;
    let mut edges: Vec<Edge> = learned
        .evidence
        .iter()
        .map(|(&(a, b), e)| {
            let (from, to) = (d.name(a).to_string(), d.name(b).to_string());
            Edge {
                correct: diff.correct.contains(&(from.clone(), to.clone())),
                class: match e.kind {
                    EvidenceKind::Flagged => "flagged",
                    _ => "confirmed",
                }
                .into(),
                from,
                to,
            }
        })
        .collect();
    edges.extend(diff.missed.iter().map(|(a, b)| Edge {
        from: a.clone(),
        to: b.clone(),
        class: "missed".into(),
        correct: false,
    }));
    to_json(&DiscoverResponse {
        nodes: d
            .variables()
            .iter()
            .map(|v| Node {
                name: v.name.clone(),
                doable: v.doable,
            })
            .collect(),
        edges,
        precision: diff.precision,
        recall: diff.recall,
        interventions: env.interventions().len(),
        nd_interventions: env.policy_violations().len(),
        dot: render_learned(&learned),
    })
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default)]
pub struct InferRequest {
    #[serde(flatten)]
    pub scenario: Scenario,
    /// Structure to fit, as `[cause, effect]` pairs.
    pub edges: Vec<(String, String)>,
    /// Observations drawn to fit the CPTs.
    pub observations: usize,
    pub seed: u64,
    /// Observed values, `0` or `1`.
    pub evidence: BTreeMap<String, u8>,
}

impl Default for InferRequest {
    fn default() -> Self {
        InferRequest {
            scenario: Scenario::default(),
            edges: Vec::new(),
            observations: 500,
            seed: 0,
            evidence: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Belief {
    pub name: String,
    pub prior: f64,
    pub posterior: f64,
}

#[derive(Debug, Serialize)]
pub struct InferResponse {
    /// `propagation` on polytrees, `enumeration` otherwise.
    pub method: String,
    /// `P(x = 1)` without and with the evidence.
    pub beliefs: Vec<Belief>,
}

/// Fits CPTs for `edges` on simulated observations and compares priors
/// with posteriors under the evidence.
pub fn infer_json(request: &str) -> Result<String, String> {
    let req: InferRequest = from_json(request)?;
    let scm = build_scenario(&req.scenario.config()).map_err(|e| e.to_string())?;
    let vars = scm.diagram().variables().to_vec();
    let names: Vec<(&str, bool)> = vars.iter().map(|v| (v.name.as_str(), v.doable)).collect();
    let arrows: Vec<(&str, &str)> = req
        .edges
        .iter()
        .map(|(a, b)| (a.as_str(), b.as_str()))
        .collect();
    let structure = CausalDiagram::from_names(&names, &arrows).map_err(|e| e.to_string())?;
    let data = sample_dataset(&scm, req.observations, req.seed);
    let cbn = fit_mle(&structure, &data, 1.0).map_err(|e| e.to_string())?;
    let mut evidence = Evidence::new();
    for (name, v) in &req.evidence {
        let id = structure
            .id_of(name)
            .ok_or_else(|| format!("unknown variable '{}'", name))?;
        if *v > 1 {
            return Err(format!("evidence for '{}' must be 0 or 1", name));
        }
        evidence = evidence.with(id, *v == 1);
    }
    let polytree = is_polytree(&structure);
    let query = |e: &Evidence| {
        if polytree {
            propagate(&cbn, e).map(|(b, _)| b)
        } else {
            enumerate_posterior(&cbn, e)
        }
    };
    let prior = query(&Evidence::new()).map_err(|e| e.to_string())?;
    let posterior = query(&evidence).map_err(|e| e.to_string())?;
    to_json(&InferResponse {
        method: if polytree {
            "propagation"
        } else {
            "enumeration"
        }
        .into(),
        beliefs: vars
            .iter()
            .map(|v| Belief {
                name: v.name.clone(),
                prior: prior.prob_true(v.id),
                posterior: posterior.prob_true(v.id),
            })
            .collect(),
    })
}

#[derive(Debug, Deserialize)]
pub struct ChiSquaredRequest {
    /// `counts[x][y]`.
    pub counts: [[u64; 2]; 2],
    #[serde(default = "default_alpha")]
    pub alpha: f64,
}

fn default_alpha() -> f64 {
    0.05
}

#[derive(Debug, Serialize)]
pub struct ChiSquaredResponse {
    pub statistic: f64,
    pub critical_value: f64,
    pub expected: [[f64; 2]; 2],
    pub reject_independence: bool,
    pub inconclusive: bool,
}

/// Pearson test on one 2x2 table.
pub fn chi_squared_json(request: &str) -> Result<String, String> {
    let req: ChiSquaredRequest = from_json(request)?;
    let table = ContingencyTable::new(req.counts);
    let out = chi_squared(&table, req.alpha).map_err(|e| e.to_string())?;
    let n = table.total() as f64;
    let (r, c) = (table.row_totals(), table.column_totals());
    let e = |i: usize, j: usize| {
        if n == 0.0 {
            0.0
        } else {
            r[i] as f64 * c[j] as f64 / n
        }
    };
    to_json(&ChiSquaredResponse {
        statistic: out.statistic,
        critical_value: out.critical_value,
        expected: [[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]],
        reject_independence: out.reject_independence,
        inconclusive: out.inconclusive,
    })
}

#[wasm_bindgen]
pub fn discover(request: &str) -> Result<String, JsError> {
    discover_json(request).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn infer(request: &str) -> Result<String, JsError> {
    infer_json(request).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = chiSquared)]
pub fn chi_squared_test(request: &str) -> Result<String, JsError> {
    chi_squared_json(request).map_err(|e| JsError::new(&e))
}
