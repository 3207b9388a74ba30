//! Line-oriented scenario documents.
//!
//! ```text
//! # comment
//! variable P doable
//! variable Pr nd
//! parents Pr: P
//! cpt P : 0.5
//! cpt Pr 0: 0.05
//! cpt Pr 1: 0.95
//! option nd_set Pr,T
//! ```
//!
//! `option template smart_home` expands the built-in living room instead of
//! explicit variables; `option proximity_edge true` and
//! `option effect.<strength> <p>` tune it. Outside the template those two
//! options are carried along but have no effect.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::cbn::{CausalBayesianNetwork, RowProvenance};
use crate::error::{Error, Result};
use crate::model::row_label;
use crate::simulator::{build_scenario, ScenarioConfig, ScenarioOptions, VariableSpec, STRENGTHS};

struct Pending {
    name: String,
    doable: bool,
    line: usize,
    parents: Option<Vec<String>>,
    rows: BTreeMap<usize, f64>,
}

fn parse_probability(line: usize, s: &str) -> Result<f64> {
    let p: f64 = s
        .parse()
        .map_err(|_| Error::parse(line, format!("'{}' is not a number", s)))?;
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::parse(
            line,
            format!("probability {} outside [0,1]", p),
        ));
    }
    Ok(p)
}

fn parse_bool(line: usize, s: &str) -> Result<bool> {
    match s {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::parse(line, format!("'{}' is not a boolean", s))),
    }
}

/// Parses a scenario document. Errors carry the 1-based line number.
pub fn parse_scenario(text: &str) -> Result<ScenarioConfig> {
    let mut vars: Vec<Pending> = Vec::new();
    let mut index: BTreeMap<String, usize> = BTreeMap::new();
    let mut options = ScenarioOptions::default();
    let mut template: Option<usize> = None;

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (head, tail) = match content.split_once(':') {
            Some((h, t)) => (h, Some(t)),
            None => (content, None),
        };
        let words: Vec<&str> = head.split_whitespace().collect();
        let lookup = |name: &str, index: &BTreeMap<String, usize>| {
            index
                .get(name)
                .copied()
                .ok_or_else(|| Error::parse(line, format!("variable '{}' is not declared", name)))
        };
        match (words[0], tail) {
            ("variable", None) => {
                let [_, name, kind] = words[..] else {
                    return Err(Error::parse(line, "expected 'variable <name> doable|nd'"));
                };
                let doable = match kind {
                    "doable" => true,
                    "nd" => false,
                    _ => {
                        return Err(Error::parse(
                            line,
                            format!("'{}' is neither doable nor nd", kind),
                        ))
                    }
                };
                if index.insert(name.to_string(), vars.len()).is_some() {
                    return Err(Error::parse(line, format!("duplicate variable '{}'", name)));
                }
                vars.push(Pending {
                    name: name.to_string(),
                    doable,
                    line,
                    parents: None,
                    rows: BTreeMap::new(),
                });
            }
            ("parents", Some(list)) => {
                let [_, name] = words[..] else {
                    return Err(Error::parse(
                        line,
                        "expected 'parents <name>: <p1> <p2> ...'",
                    ));
                };
                let v = lookup(name, &index)?;
                let mut parents = Vec::new();
                for p in list.split_whitespace() {
                    lookup(p, &index)?;
                    if parents.iter().any(|q| q == p) {
                        return Err(Error::parse(line, format!("parent '{}' listed twice", p)));
                    }
                    parents.push(p.to_string());
                }
                let var = &mut vars[v];
                if var.parents.is_some() {
                    return Err(Error::parse(
                        line,
                        format!("parents of '{}' given twice", name),
                    ));
                }
                if !var.rows.is_empty() {
                    return Err(Error::parse(
                        line,
                        format!("parents of '{}' must precede its cpt lines", name),
                    ));
                }
                var.parents = Some(parents);
            }
            ("cpt", Some(value)) => {
                let (name, bits) = match words[..] {
                    [_, name] => (name, ""),
                    [_, name, bits] => (name, bits),
                    _ => {
                        return Err(Error::parse(
                            line,
                            "expected 'cpt <name> <parent-bits>: <p>'",
                        ))
                    }
                };
                let v = lookup(name, &index)?;
                let var = &mut vars[v];
                let k = var.parents.as_ref().map_or(0, Vec::len);
                if bits.len() != k || !bits.chars().all(|c| c == '0' || c == '1') {
                    return Err(Error::parse(
                        line,
                        format!(
                            "'{}' is not an assignment of the {} parent(s) of '{}'",
                            bits, k, name
                        ),
                    ));
                }
                let row = bits
                    .chars()
                    .fold(0usize, |acc, c| (acc << 1) | (c == '1') as usize);
                let p = parse_probability(line, value.trim())?;
                if var.rows.insert(row, p).is_some() {
                    return Err(Error::parse(
                        line,
                        format!("duplicate cpt row '{}' for '{}'", bits, name),
                    ));
                }
            }
            ("option", None) => {
                let [_, key, value] = words[..] else {
                    return Err(Error::parse(line, "expected 'option <key> <value>'"));
                };
                match key {
                    "nd_set" => {
                        options.nd_set = value
                            .split(',')
                            .filter(|s| !s.is_empty())
                            .map(String::from)
                            .collect()
                    }
                    "proximity_edge" => options.proximity_edge = parse_bool(line, value)?,
                    "template" if value == "smart_home" => template = Some(line),
                    "template" => {
                        return Err(Error::parse(line, format!("unknown template '{}'", value)))
                    }
                    _ => match key.strip_prefix("effect.") {
                        Some(s) if STRENGTHS.iter().any(|(k, _)| *k == s) => {
                            options
                                .effect_strengths
                                .insert(s.to_string(), parse_probability(line, value)?);
                        }
                        _ => return Err(Error::parse(line, format!("unknown option '{}'", key))),
                    },
                }
            }
            (word, _) => {
                return Err(Error::parse(
                    line,
                    format!("unknown or malformed directive '{}'", word),
                ))
            }
        }
    }

    let config = match template {
        Some(line) if !vars.is_empty() => {
            return Err(Error::parse(
                line,
                "a template cannot be combined with variable declarations",
            ));
        }
        Some(_) => ScenarioConfig::smart_home(options),
        None => {
            let mut variables = Vec::with_capacity(vars.len());
            for v in vars {
                let parents = v.parents.unwrap_or_default();
                let expected = 1usize << parents.len();
                if let Some(missing) = (0..expected).find(|r| !v.rows.contains_key(r)) {
                    return Err(Error::parse(
                        v.line,
                        format!(
                            "'{}' is missing cpt row '{}'",
                            v.name,
                            row_label(missing, parents.len())
                        ),
                    ));
                }
                variables.push(VariableSpec {
                    name: v.name,
                    doable: v.doable,
                    parents,
                    rows: v.rows.into_values().collect(),
                });
            }
            ScenarioConfig { variables, options }
        }
    };
    build_scenario(&config)?;
    Ok(config)
}

/// Writes a config in explicit form; parsing the output gives the same config.
pub fn render_scenario(config: &ScenarioConfig) -> String {
    let rows: Vec<Vec<Option<usize>>> = config
        .variables
        .iter()
        .map(|v| vec![None; v.rows.len()])
        .collect();
    render(config, &rows)
}

fn render(config: &ScenarioConfig, counts: &[Vec<Option<usize>>]) -> String {
    let mut out = String::new();
    for v in &config.variables {
        let kind = if v.doable { "doable" } else { "nd" };
        let _ = writeln!(out, "variable {} {}", v.name, kind);
    }
    for v in config.variables.iter().filter(|v| !v.parents.is_empty()) {
        let _ = writeln!(out, "parents {}: {}", v.name, v.parents.join(" "));
    }
    for (v, counts) in config.variables.iter().zip(counts) {
        for (row, (p, count)) in v.rows.iter().zip(counts).enumerate() {
            let bits = row_label(row, v.parents.len());
            let _ = write!(out, "cpt {} {}: {}", v.name, bits, p);
            match count {
                Some(0) => out.push_str("  # smoothed"),
                Some(n) => {
                    let _ = write!(out, "  # n={}", n);
                }
                None => {}
            }
            out.push('\n');
        }
    }
    let o = &config.options;
    if !o.nd_set.is_empty() {
        let names: Vec<&str> = o.nd_set.iter().map(String::as_str).collect();
        let _ = writeln!(out, "option nd_set {}", names.join(","));
    }
    if o.proximity_edge {
        out.push_str("option proximity_edge true\n");
    }
    for (k, v) in &o.effect_strengths {
        let _ = writeln!(out, "option effect.{} {}", k, v);
    }
    out
}

/// Serializes a fitted network; row counts become trailing comments.
pub fn render_cbn(cbn: &CausalBayesianNetwork) -> String {
    let s = &cbn.structure;
    let variables = cbn
        .cpts
        .iter()
        .map(|c| VariableSpec {
            name: s.name(c.owner).to_string(),
            doable: s.variable(c.owner).doable,
            parents: c.parents.iter().map(|p| s.name(*p).to_string()).collect(),
            rows: c.rows.clone(),
        })
        .collect();
    let counts: Vec<Vec<Option<usize>>> = cbn
        .cpts
        .iter()
        .map(|c| {
            c.provenance
                .iter()
                .map(|p| match p {
                    RowProvenance::Estimated(n) if *n == usize::MAX => None,
                    RowProvenance::Smoothed => Some(0),
                    other => Some(other.count()),
                })
                .collect()
        })
        .collect();
    render(
        &ScenarioConfig {
            variables,
            options: ScenarioOptions::default(),
        },
        &counts,
    )
}

/// Reads a network written by [`render_cbn`] (or any scenario document).
pub fn parse_cbn(text: &str) -> Result<CausalBayesianNetwork> {
    let config = parse_scenario(text)?;
    Ok(CausalBayesianNetwork::from_scm(&build_scenario(&config)?))
}

/// Non-doable variable names, `nd_set` applied.
pub fn non_doable(config: &ScenarioConfig) -> BTreeSet<String> {
    config
        .variables
        .iter()
        .filter(|v| !v.doable || config.options.nd_set.contains(&v.name))
        .map(|v| v.name.clone())
        .collect()
}
