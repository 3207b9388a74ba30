//! Graphviz output and a reader for the subset this module writes.
//!
//! Doable variables are circles, non-doable ones filled rounded boxes.
//! Every edge carries a `class` attribute; diff classes are colored
//! green (correct), red (missed), yellow (added) and blue (bidirectional).

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::discovery::{CandidateGraph, EdgeDiff, EdgeEvidence, EvidenceKind, LearnedGraph};
use crate::error::{Error, Result};
use crate::model::{check_acyclic, Acyclicity, Arrow, CausalDiagram, Variable, VariableId};

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

fn node_line(v: &Variable) -> String {
    if v.doable {
        format!("  {} [shape=circle];\n", quote(&v.name))
    } else {
        format!(
            "  {} [shape=box, style=\"rounded,filled\", fillcolor=lightblue];\n",
            quote(&v.name)
        )
    }
}

fn edge_class(e: &EdgeEvidence) -> &'static str {
    match e.kind {
        EvidenceKind::DoConfirmed => "confirmed",
        EvidenceKind::NdCandidate => "candidate",
        EvidenceKind::Flagged => "flagged",
    }
}

fn edge_style(class: &str) -> &'static str {
    match class {
        "confirmed" => "style=solid",
        "candidate" => "style=dashed",
        "flagged" => "style=dashed, label=\"flagged\"",
        "correct" => "color=green",
        "missed" => "color=red",
        "added" => "color=yellow",
        "bidirectional" => "color=blue, dir=both",
        _ => "style=solid",
    }
}

fn render(variables: &[Variable], edges: &BTreeMap<Arrow, &str>) -> String {
    let mut out = String::from("digraph G {\n");
    for v in variables {
        out.push_str(&node_line(v));
    }
    for (&(a, b), class) in edges {
        let _ = writeln!(
            out,
            "  {} -> {} [class=\"{}\", {}];",
            quote(&variables[a.0].name),
            quote(&variables[b.0].name),
            class,
            edge_style(class)
        );
    }
    out.push_str("}\n");
    out
}

/// Plain diagram, every edge class `plain`.
pub fn render_diagram(d: &CausalDiagram) -> String {
    let edges = d.arrows().iter().map(|a| (*a, "plain")).collect();
    render(d.variables(), &edges)
}

pub fn render_learned(g: &LearnedGraph) -> String {
    let edges = g
        .evidence
        .iter()
        .map(|(a, e)| (*a, edge_class(e)))
        .collect();
    render(g.diagram.variables(), &edges)
}

/// The graph before resolution; may contain opposite arrows.
pub fn render_candidate(c: &CandidateGraph) -> String {
    let edges = c.arrows.iter().map(|(a, e)| (*a, edge_class(e))).collect();
    render(&c.variables, &edges)
}

/// Learned graph colored against ground truth; missed arrows are drawn
/// from the truth.
pub fn render_diff(learned: &LearnedGraph, diff: &EdgeDiff) -> String {
    let d = &learned.diagram;
    let id = |name: &str| {
        d.id_of(name)
            .expect("diff names come from the learned graph")
    };
    let mut edges: BTreeMap<Arrow, &str> = BTreeMap::new();
    for (set, class) in [
        (&diff.correct, "correct"),
        (&diff.missed, "missed"),
        (&diff.added, "added"),
        (&diff.bidirectional, "bidirectional"),
    ] {
        for (a, b) in set {
            edges.insert((id(a), id(b)), class);
        }
    }
    render(d.variables(), &edges)
}

fn parse_attrs(line: usize, s: &str) -> Result<BTreeMap<String, String>> {
    let mut attrs = BTreeMap::new();
    let mut rest = s.trim();
    while !rest.is_empty() {
        let (key, after) = rest
            .split_once('=')
            .ok_or_else(|| Error::parse(line, format!("malformed attribute list '{}'", s)))?;
        let after = after.trim_start();
        let (value, tail) = if let Some(q) = after.strip_prefix('"') {
            let end = q
                .find('"')
                .ok_or_else(|| Error::parse(line, "unterminated string"))?;
            (&q[..end], &q[end + 1..])
        } else {
            after.split_at(after.find(',').unwrap_or(after.len()))
        };
        attrs.insert(key.trim().to_string(), value.trim().to_string());
        rest = tail.trim_start().trim_start_matches(',').trim_start();
    }
    Ok(attrs)
}

/// One quoted or bare identifier at the start of `s`, and the remainder.
fn identifier(line: usize, s: &str) -> Result<(String, &str)> {
    let s = s.trim_start();
    if let Some(body) = s.strip_prefix('"') {
        let mut out = String::new();
        let mut chars = body.char_indices();
        while let Some((i, c)) = chars.next() {
            match c {
                '\\' => match chars.next() {
                    Some((_, e)) => out.push(e),
                    None => break,
                },
                '"' => return Ok((out, &body[i + 1..])),
                _ => out.push(c),
            }
        }
        Err(Error::parse(line, "unterminated identifier"))
    } else {
        let end = s
            .find(|c: char| !(c.is_alphanumeric() || c == '_'))
            .unwrap_or(s.len());
        if end == 0 {
            return Err(Error::parse(
                line,
                format!("expected an identifier at '{}'", s),
            ));
        }
        Ok((s[..end].to_string(), &s[end..]))
    }
}

/// Reads a graph written by this module. Nodes must be declared before
/// edges use them; `missed` edges (present only in diffs) are skipped.
pub fn parse_dot(text: &str) -> Result<LearnedGraph> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    match lines.find(|(_, l)| !l.is_empty()) {
        Some((_, l)) if l.starts_with("digraph") && l.ends_with('{') => {}
        Some((n, _)) => return Err(Error::parse(n, "expected 'digraph <name> {'")),
        None => return Err(Error::parse(1, "empty graph file")),
    }
    let mut variables: Vec<Variable> = Vec::new();
    let mut evidence: BTreeMap<Arrow, EdgeEvidence> = BTreeMap::new();
    let mut closed = false;
    for (n, l) in lines {
        if l.is_empty() || l.starts_with("//") {
            continue;
        }
        if l == "}" {
            closed = true;
            continue;
        }
        if closed {
            return Err(Error::parse(n, "content after closing brace"));
        }
        let body = l.strip_suffix(';').unwrap_or(l);
        let (first, rest) = identifier(n, body)?;
        let rest = rest.trim_start();
        let (second, rest) = match rest.strip_prefix("->") {
            Some(r) => {
                let (s, r) = identifier(n, r)?;
                (Some(s), r.trim_start())
            }
            None => (None, rest),
        };
        let attrs = match rest.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            Some(inner) => parse_attrs(n, inner)?,
            None if rest.is_empty() => BTreeMap::new(),
            None => return Err(Error::parse(n, format!("unexpected '{}'", rest))),
        };
        let find = |name: &str, vars: &[Variable]| {
            vars.iter()
                .position(|v| v.name == name)
                .map(VariableId)
                .ok_or_else(|| Error::parse(n, format!("edge uses undeclared node '{}'", name)))
        };
        match second {
            None => {
                if variables.iter().any(|v| v.name == first) {
                    return Err(Error::parse(n, format!("node '{}' declared twice", first)));
                }
                let doable = attrs.get("shape").map(String::as_str) != Some("box");
                variables.push(Variable {
                    id: VariableId(variables.len()),
                    name: first,
                    doable,
                });
            }
            Some(second) => {
                let class = attrs.get("class").map(String::as_str).unwrap_or("plain");
                if class == "missed" {
                    continue;
                }
                let arrow = (find(&first, &variables)?, find(&second, &variables)?);
                let kind = match class {
                    "flagged" | "added" => EvidenceKind::Flagged,
                    "candidate" => EvidenceKind::NdCandidate,
                    _ => EvidenceKind::DoConfirmed,
                };
                evidence.insert(
                    arrow,
                    EdgeEvidence {
                        kind,
                        best_statistic: 0.0,
                        undirected: class == "bidirectional",
                    },
                );
            }
        }
    }
    if !closed {
        return Err(Error::parse(text.lines().count(), "missing closing brace"));
    }
    let diagram = CausalDiagram::new(variables, evidence.keys().copied())?;
    if let Acyclicity::Cycle(walk) = check_acyclic(&diagram) {
        let names: Vec<&str> = walk.iter().map(|v| diagram.name(*v)).collect();
        return Err(Error::Structural(format!(
            "graph has a cycle: {}",
            names.join(" -> ")
        )));
    }
    Ok(LearnedGraph { diagram, evidence })
}
