//! Smart-home ground truth and a seeded sampler standing in for the live
//! environment.
//!
//! Sampling uses ChaCha8 (`rand_chacha`) seeded with `seed_from_u64(seed)`.
//! Variables are drawn in [`Scm::order`]; a variable is true when the next
//! `f64` drawn from the generator is below its CPT row. One generator serves
//! a whole dataset, so record `i` of a dataset depends on records `0..i`.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Mutex;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{
    mutilate, CausalDiagram, Intervention, Mechanism, Scm, Variable, VariableId, WorldState,
};

/// Probability `1 - (1 - leak) * prod(1 - effect_i)` over active causes.
pub fn noisy_or(leak: f64, effects: &[f64], active: &[bool]) -> f64 {
    let off = effects
        .iter()
        .zip(active)
        .filter(|(_, on)| **on)
        .fold(1.0 - leak, |acc, (e, _)| acc * (1.0 - e));
    1.0 - off
}

/// Experimental knobs layered on top of a scenario.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScenarioOptions {
    /// Variables forced non-doable regardless of their declaration.
    pub nd_set: BTreeSet<String>,
    /// Light heats the thermometer (the bathroom layout).
    pub proximity_edge: bool,
    /// Overrides for the smart-home template's named strengths.
    pub effect_strengths: BTreeMap<String, f64>,
}

impl ScenarioOptions {
    pub fn with_nd<I, S>(mut self, names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.nd_set.extend(names.into_iter().map(Into::into));
        self
    }

    pub fn with_proximity(mut self, on: bool) -> Self {
        self.proximity_edge = on;
        self
    }

    pub fn with_effect(mut self, key: &str, value: f64) -> Self {
        self.effect_strengths.insert(key.to_string(), value);
        self
    }

    fn strength(&self, key: &str) -> f64 {
        self.effect_strengths
            .get(key)
            .copied()
            .unwrap_or_else(|| default_strength(key))
    }
}

/// One declared variable of a scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct VariableSpec {
    pub name: String,
    pub doable: bool,
    pub parents: Vec<String>,
    /// One probability-of-true per parent assignment, first parent as the
    /// most significant bit.
    pub rows: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScenarioConfig {
    pub variables: Vec<VariableSpec>,
    pub options: ScenarioOptions,
}

/// Named strengths of the smart-home template and their defaults.
pub const STRENGTHS: &[(&str, f64)] = &[
    ("leak", 0.05),
    ("person_prior", 0.5),
    ("heater_prior", 0.3),
    ("window_prior", 0.3),
    ("outdoor_prior", 0.3),
    ("presence_sensor_effect", 0.95),
    ("presence_light_effect", 0.9),
    ("light_power_effect", 0.9),
    ("heater_power_effect", 0.95),
    ("heater_temperature_effect", 0.9),
    ("window_temperature_effect", 0.9),
    ("outdoor_temperature_effect", 0.9),
    ("light_heat_effect", 0.9),
];

fn default_strength(key: &str) -> f64 {
    STRENGTHS
        .iter()
        .find(|(k, _)| *k == key)
        .map(|(_, v)| *v)
        .unwrap_or(0.0)
}

fn noisy_or_rows(leak: f64, effects: &[f64]) -> Vec<f64> {
    let k = effects.len();
    (0..1usize << k)
        .map(|row| {
            let bits = crate::model::row_bits(row, k);
            noisy_or(leak, effects, &bits)
        })
        .collect()
}

impl ScenarioConfig {
    /// The living-room ground truth: person `P`, presence sensor `Pr`, light
    /// `L`, power `Pow`, heater `H`, window `W`, outdoor `O`, thermometer `T`
    /// with arrows `P->Pr->L->Pow<-H->T<-{O,W}`. Every child is a noisy-OR
    /// of its parents. With `proximity_edge` the light also heats `T`.
    pub fn smart_home(options: ScenarioOptions) -> ScenarioConfig {
        let s = |k: &str| options.strength(k);
        let leak = s("leak");
        let root = |name: &str, prior: f64| VariableSpec {
            name: name.into(),
            doable: true,
            parents: vec![],
            rows: vec![prior],
        };
        let child = |name: &str, parents: &[&str], effects: &[f64]| VariableSpec {
            name: name.into(),
            doable: true,
            parents: parents.iter().map(|p| p.to_string()).collect(),
            rows: noisy_or_rows(leak, effects),
        };
        let thermometer = if options.proximity_edge {
            child(
                "T",
                &["L", "H", "W", "O"],
                &[
                    s("light_heat_effect"),
                    s("heater_temperature_effect"),
                    s("window_temperature_effect"),
                    s("outdoor_temperature_effect"),
                ],
            )
        } else {
            child(
                "T",
                &["H", "W", "O"],
                &[
                    s("heater_temperature_effect"),
                    s("window_temperature_effect"),
                    s("outdoor_temperature_effect"),
                ],
            )
        };
        let variables = vec![
            root("P", s("person_prior")),
            child("Pr", &["P"], &[s("presence_sensor_effect")]),
            child("L", &["Pr"], &[s("presence_light_effect")]),
            child(
                "Pow",
                &["L", "H"],
                &[s("light_power_effect"), s("heater_power_effect")],
            ),
            root("H", s("heater_prior")),
            root("W", s("window_prior")),
            root("O", s("outdoor_prior")),
            thermometer,
        ];
        ScenarioConfig { variables, options }
    }
}

/// Validates a scenario and turns it into an [`Scm`]; `nd_set` members come
/// out non-doable.
pub fn build_scenario(config: &ScenarioConfig) -> Result<Scm> {
    let mut index = BTreeMap::new();
    for (i, v) in config.variables.iter().enumerate() {
        if v.name.is_empty() {
            return Err(Error::Config(format!("variable {} has an empty name", i)));
        }
        if index.insert(v.name.as_str(), VariableId(i)).is_some() {
            return Err(Error::Config(format!("duplicate variable '{}'", v.name)));
        }
    }
    for nd in &config.options.nd_set {
        if !index.contains_key(nd.as_str()) {
            return Err(Error::Config(format!(
                "nd_set names unknown variable '{}'",
                nd
            )));
        }
    }
    let mut variables = Vec::with_capacity(config.variables.len());
    let mut arrows = Vec::new();
    let mut mechanisms = Vec::with_capacity(config.variables.len());
    for (i, v) in config.variables.iter().enumerate() {
        let id = VariableId(i);
        let mut parents = Vec::with_capacity(v.parents.len());
        for p in &v.parents {
            let pid = *index.get(p.as_str()).ok_or_else(|| {
                Error::Config(format!("'{}' lists unknown parent '{}'", v.name, p))
            })?;
            if parents.contains(&pid) {
                return Err(Error::Config(format!(
                    "'{}' lists parent '{}' twice",
                    v.name, p
                )));
            }
            parents.push(pid);
            arrows.push((pid, id));
        }
        let expected = 1usize << parents.len();
        if v.rows.len() != expected {
            return Err(Error::Config(format!(
                "'{}' has {} CPT rows, expected {}",
                v.name,
                v.rows.len(),
                expected
            )));
        }
        if let Some(p) = v.rows.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::Config(format!(
                "'{}' has probability {} outside [0,1]",
                v.name, p
            )));
        }
        variables.push(Variable {
            id,
            name: v.name.clone(),
            doable: v.doable && !config.options.nd_set.contains(&v.name),
        });
        mechanisms.push(Mechanism {
            parents,
            rows: v.rows.clone(),
        });
    }
    let diagram =
        CausalDiagram::new(variables, arrows).map_err(|e| Error::Config(e.to_string()))?;
    Scm::new(diagram, mechanisms).map_err(|e| Error::Config(e.to_string()))
}

/// Generating condition of a record.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Regime {
    Observational,
    Do(Intervention),
}

impl Regime {
    pub fn is_observational(&self) -> bool {
        matches!(self, Regime::Observational)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Record {
    pub regime: Regime,
    pub state: WorldState,
}

/// Boolean records over a fixed list of variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    pub variables: Vec<String>,
    pub records: Vec<Record>,
}

impl Dataset {
    pub fn empty(variables: Vec<String>) -> Self {
        Dataset {
            variables,
            records: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn id_of(&self, name: &str) -> Option<VariableId> {
        self.variables
            .iter()
            .position(|v| v == name)
            .map(VariableId)
    }

    pub fn observational(&self) -> impl Iterator<Item = &WorldState> {
        self.records
            .iter()
            .filter(|r| r.regime.is_observational())
            .map(|r| &r.state)
    }

    /// Appends `other`'s records; both must share the variable list.
    pub fn extend(&mut self, other: Dataset) -> Result<()> {
        if other.variables != self.variables {
            return Err(Error::Structural(
                "datasets cover different variables".into(),
            ));
        }
        self.records.extend(other.records);
        Ok(())
    }
}

fn variable_names(scm: &Scm) -> Vec<String> {
    scm.diagram()
        .variables()
        .iter()
        .map(|v| v.name.clone())
        .collect()
}

fn draw(scm: &Scm, rng: &mut ChaCha8Rng) -> WorldState {
    let mut values = vec![false; scm.len()];
    for &id in scm.order() {
        let p = scm.mechanism(id).prob_true(&values);
        values[id.0] = rng.gen::<f64>() < p;
    }
    WorldState { values }
}

/// Ancestral sample of one equilibrium state.
pub fn sample_state(scm: &Scm, seed: u64) -> WorldState {
    draw(scm, &mut ChaCha8Rng::seed_from_u64(seed))
}

pub fn sample_dataset(scm: &Scm, n: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let records = (0..n)
        .map(|_| Record {
            regime: Regime::Observational,
            state: draw(scm, &mut rng),
        })
        .collect();
    Dataset {
        variables: variable_names(scm),
        records,
    }
}

/// Samples from the mutilated model and tags every record with the
/// intervention. Doability is not checked here.
pub fn sample_under_do(
    scm: &Scm,
    intervention: &Intervention,
    n: usize,
    seed: u64,
) -> Result<Dataset> {
    let mutilated = mutilate(scm, intervention)?;
    let mut data = sample_dataset(&mutilated, n, seed);
    for r in &mut data.records {
        r.regime = Regime::Do(intervention.clone());
    }
    Ok(data)
}

/// Mixes `parts` into `base` with SplitMix64 finalizers. Used to give every
/// test, arm and batch its own reproducible stream.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    parts.iter().fold(mix(base), |acc, &p| mix(acc ^ mix(p)))
}

/// Something that can be watched and experimented on.
pub trait Environment {
    /// Declared variables, including the doability policy.
    fn variables(&self) -> &[Variable];
    fn observe(&self, n: usize, seed: u64) -> Result<Dataset>;
    fn intervene(&self, intervention: &Intervention, n: usize, seed: u64) -> Result<Dataset>;
}

/// Environment backed by a ground-truth [`Scm`].
#[derive(Debug, Clone)]
pub struct ScmEnvironment {
    scm: Scm,
}

impl ScmEnvironment {
    pub fn new(scm: Scm) -> Self {
        ScmEnvironment { scm }
    }

    pub fn scm(&self) -> &Scm {
        &self.scm
    }
}

impl Environment for ScmEnvironment {
    fn variables(&self) -> &[Variable] {
        self.scm.diagram().variables()
    }

    fn observe(&self, n: usize, seed: u64) -> Result<Dataset> {
        Ok(sample_dataset(&self.scm, n, seed))
    }

    fn intervene(&self, intervention: &Intervention, n: usize, seed: u64) -> Result<Dataset> {
        sample_under_do(&self.scm, intervention, n, seed)
    }
}

/// Wraps an environment and records every intervention it executes.
#[derive(Debug)]
pub struct AuditingEnvironment<E> {
    inner: E,
    log: Mutex<Vec<Intervention>>,
}

impl<E: Environment> AuditingEnvironment<E> {
    pub fn new(inner: E) -> Self {
        AuditingEnvironment {
            inner,
            log: Mutex::new(Vec::new()),
        }
    }

    pub fn interventions(&self) -> Vec<Intervention> {
        self.log.lock().unwrap().clone()
    }

    /// Logged interventions that touched a non-doable variable.
    pub fn policy_violations(&self) -> Vec<Intervention> {
        let vars = self.inner.variables();
        self.interventions()
            .into_iter()
            .filter(|i| i.assignments.keys().any(|id| !vars[id.0].doable))
            .collect()
    }

    pub fn into_inner(self) -> E {
        self.inner
    }
}

impl<E: Environment> Environment for AuditingEnvironment<E> {
    fn variables(&self) -> &[Variable] {
        self.inner.variables()
    }

    fn observe(&self, n: usize, seed: u64) -> Result<Dataset> {
        self.inner.observe(n, seed)
    }

    fn intervene(&self, intervention: &Intervention, n: usize, seed: u64) -> Result<Dataset> {
        self.log.lock().unwrap().push(intervention.clone());
        self.inner.intervene(intervention, n, seed)
    }
}
