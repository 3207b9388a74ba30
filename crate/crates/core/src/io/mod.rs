//! File formats: scenario documents, dataset CSV, Graphviz and belief tables.

mod dataset;
mod dot;
mod scenario;
mod table;

pub use dataset::{dataset_from_str, dataset_to_string, read_dataset, write_dataset};
pub use dot::{parse_dot, render_candidate, render_diagram, render_diff, render_learned};
pub use scenario::{non_doable, parse_cbn, parse_scenario, render_cbn, render_scenario};
pub use table::{format_beliefs, format_probability};
