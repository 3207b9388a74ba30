use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use dolearn::cbn::{augment_with_interventions, fit_mle, CausalBayesianNetwork};
use dolearn::discovery::{diff_graphs, resolve_to_dag, run_discovery_with, DiscoveryConfig};
use dolearn::inference::{enumerate_posterior, is_polytree, propagate, BeliefMap, Evidence};
use dolearn::io;
use dolearn::simulator::{build_scenario, sample_dataset, ScenarioConfig, ScmEnvironment};

#[derive(Parser)]
#[command(
    name = "dolearn",
    version,
    about = "Learn and query causal Bayesian networks over Boolean variables"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample observational records from a scenario.
    GenData {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value_t = 500)]
        obs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Learn a causal diagram by observing and intervening on a scenario.
    Discover {
        #[arg(long)]
        scenario: PathBuf,
        /// Observational records to use instead of sampling fresh ones.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Extra non-doable variables, comma separated.
        #[arg(long, value_delimiter = ',')]
        nd: Vec<String>,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        /// Samples per intervention arm.
        #[arg(long, default_value_t = 20)]
        interventions: usize,
        /// Observations sampled when `--data` is absent.
        #[arg(long, default_value_t = 500)]
        obs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Also write the graph before DAG resolution.
        #[arg(long)]
        raw: Option<PathBuf>,
    },
    /// Estimate CPTs for a structure and write the network.
    Fit {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        structure: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        pseudo_count: f64,
        /// Re-estimate sparse rows by intervening on the scenario.
        #[arg(long)]
        augment: bool,
        /// Rows seen fewer times than this are augmented.
        #[arg(long, default_value_t = 5)]
        min_count: usize,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Posterior marginals given evidence.
    Infer {
        #[arg(long)]
        cbn: PathBuf,
        /// Comma separated `name=0|1` pairs; empty for priors.
        #[arg(long, default_value = "")]
        evidence: String,
        #[arg(long, value_enum, default_value_t = Method::Auto)]
        method: Method,
    },
    /// Compare a learned graph against a scenario's ground truth.
    Compare {
        #[arg(long)]
        learned: PathBuf,
        #[arg(long)]
        truth: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    /// Belief propagation; polytrees only.
    Bp,
    /// Exact enumeration.
    Enum,
    /// Propagation on polytrees, enumeration otherwise.
    Auto,
}

/// Failure with the exit code it maps to.
enum Failure {
    Usage(String),
    Data(String),
}

impl From<dolearn::Error> for Failure {
    fn from(e: dolearn::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Data(format!("{}: {}", path.display(), e)))
}

fn write(path: &Path, text: &str) -> Outcome {
    fs::write(path, text).map_err(|e| Failure::Data(format!("{}: {}", path.display(), e)))
}

/// Runs `f` and prefixes parse diagnostics with the file name.
fn in_file<T>(path: &Path, f: impl FnOnce(&str) -> dolearn::Result<T>) -> Result<T, Failure> {
    let text = read(path)?;
    f(&text).map_err(|e| Failure::Data(format!("{}: {}", path.display(), e)))
}

fn scenario(path: &Path) -> Result<ScenarioConfig, Failure> {
    in_file(path, io::parse_scenario)
}

fn parse_evidence(cbn: &CausalBayesianNetwork, text: &str) -> Result<Evidence, Failure> {
    let mut evidence = Evidence::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (name, value) = part
            .split_once('=')
            .ok_or_else(|| Failure::Usage(format!("evidence '{}' is not name=value", part)))?;
        let id = cbn
            .structure
            .id_of(name.trim())
            .ok_or_else(|| Failure::Data(format!("unknown variable '{}'", name.trim())))?;
        let value = match value.trim() {
            "0" => false,
            "1" => true,
            v => {
                return Err(Failure::Usage(format!(
                    "evidence value '{}' is not 0 or 1",
                    v
                )))
            }
        };
        if evidence.get(id).is_some_and(|old| old != value) {
            return Err(Failure::Usage(format!("'{}' given twice", name.trim())));
        }
        evidence = evidence.with(id, value);
    }
    Ok(evidence)
}

fn run(command: Command) -> Outcome {
    match command {
        Command::GenData {
            scenario: path,
            obs,
            seed,
            out,
        } => {
            let scm = build_scenario(&scenario(&path)?)?;
            write(
                &out,
                &io::dataset_to_string(&sample_dataset(&scm, obs, seed)),
            )?;
            eprintln!("wrote {} records to {}", obs, out.display());
        }
        Command::Discover {
            scenario: path,
            data,
            nd,
            alpha,
            interventions,
            obs,
            seed,
            out,
            raw,
        } => {
            let mut config = scenario(&path)?;
            config.options.nd_set.extend(nd);
            let scm = build_scenario(&config)?;
            let discovery = DiscoveryConfig {
                alpha,
                interventions_per_assignment: interventions,
                observational_samples: obs,
                seed,
                ..DiscoveryConfig::default()
            };
            let env = ScmEnvironment::new(scm.clone());
            let observations = match data {
                Some(p) => {
                    let d = in_file(&p, io::dataset_from_str)?;
                    let expected: Vec<&str> = scm
                        .diagram()
                        .variables()
                        .iter()
                        .map(|v| v.name.as_str())
                        .collect();
                    if d.variables != expected {
                        return Err(Failure::Data(format!(
                            "{}: columns {:?} do not match the scenario's {:?}",
                            p.display(),
                            d.variables,
                            expected
                        )));
                    }
                    d
                }
                None => dolearn::discovery::discovery_observations(&env, &discovery)?,
            };
            let candidate = run_discovery_with(&env, &observations, &discovery)?;
            let learned = resolve_to_dag(&candidate, Some(&observations), alpha)?;
            if let Some(raw) = raw {
                write(&raw, &io::render_candidate(&candidate))?;
            }
            write(&out, &io::render_learned(&learned))?;
            eprintln!(
                "{} arrows ({} flagged), {} before resolution",
                learned.diagram.arrows().len(),
                learned.flagged().len(),
                candidate.arrows.len()
            );
        }
        Command::Fit {
            scenario: path,
            structure,
            data,
            out,
            pseudo_count,
            augment,
            min_count,
            samples,
            seed,
        } => {
            let scm = build_scenario(&scenario(&path)?)?;
            let graph = in_file(&structure, io::parse_dot)?;
            let dataset = in_file(&data, io::dataset_from_str)?;
            let mut cbn = fit_mle(&graph.diagram, &dataset, pseudo_count)?;
            if augment {
                let env = ScmEnvironment::new(scm);
                cbn = augment_with_interventions(&cbn, &env, min_count, samples, seed)?;
            }
            write(&out, &io::render_cbn(&cbn))?;
        }
        Command::Infer {
            cbn,
            evidence,
            method,
        } => {
            let network = in_file(&cbn, io::parse_cbn)?;
            let evidence = parse_evidence(&network, &evidence)?;
            let beliefs: BeliefMap = match method {
                Method::Bp => propagate(&network, &evidence)?.0,
                Method::Enum => enumerate_posterior(&network, &evidence)?,
                Method::Auto if is_polytree(&network.structure) => {
                    propagate(&network, &evidence)?.0
                }
                Method::Auto => enumerate_posterior(&network, &evidence)?,
            };
            print!("{}", io::format_beliefs(&network.structure, &beliefs));
        }
        Command::Compare { learned, truth } => {
            let graph = in_file(&learned, io::parse_dot)?;
            let truth = build_scenario(&scenario(&truth)?)?;
            let diff = diff_graphs(&graph, truth.diagram())?;
            let list = |s: &std::collections::BTreeSet<(String, String)>| {
                s.iter()
                    .map(|(a, b)| format!("{}->{}", a, b))
                    .collect::<Vec<_>>()
                    .join(" ")
            };
            println!("correct        {}", list(&diff.correct));
            println!("missed         {}", list(&diff.missed));
            println!("added          {}", list(&diff.added));
            println!("flagged        {}", list(&diff.flagged_spurious));
            println!("bidirectional  {}", list(&diff.bidirectional));
            println!(
                "precision      {}",
                io::format_probability(diff.precision, 4)
            );
            println!("recall         {}", io::format_probability(diff.recall, 4));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {}", msg);
            ExitCode::from(1)
        }
        Err(Failure::Data(msg)) => {
            eprintln!("error: {}", msg);
            ExitCode::from(2)
        }
    }
}
