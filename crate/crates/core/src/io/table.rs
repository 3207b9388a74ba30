use std::fmt::Write as _;

use crate::inference::BeliefMap;
use crate::model::CausalDiagram;

/// Fixed-point with `decimals` digits, ties to even. The value is first
/// snapped to a multiple of 1e-12 so that results agreeing to that
/// precision print identically.
pub fn format_probability(p: f64, decimals: usize) -> String {
    let snapped = (p * 1e12).round() / 1e12;
    // `{:.N}` rounds the exact binary value half to even
    format!("{:.*}", decimals, snapped)
}

/// `variable  P(=0)  P(=1)`, one row per variable in id order.
pub fn format_beliefs(structure: &CausalDiagram, beliefs: &BeliefMap) -> String {
    let width = structure
        .variables()
        .iter()
        .map(|v| v.name.len())
        .chain(["variable".len()])
        .max()
        .unwrap_or(0);
    let mut out = format!("{:<width$}  {:>6}  {:>6}\n", "variable", "P(=0)", "P(=1)");
    for v in structure.variables() {
        let [p0, p1] = beliefs.get(v.id);
        let _ = writeln!(
            out,
            "{:<width$}  {:>6}  {:>6}",
            v.name,
            format_probability(p0, 4),
            format_probability(p1, 4)
        );
    }
    out
}
