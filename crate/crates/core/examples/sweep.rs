//! Structure recovery over a range of seeds for one smart-home variant.
//!
//! `cargo run --release --example sweep -- [all|nd|weak|bathroom] [seeds] [strength=value ...]`

use std::time::Instant;

use dolearn::discovery::{diff_graphs, learn_structure, DiscoveryConfig};
use dolearn::simulator::{
    build_scenario, AuditingEnvironment, ScenarioConfig, ScenarioOptions, ScmEnvironment,
};

fn main() -> dolearn::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let variant = args.get(1).map(String::as_str).unwrap_or("all");
    let seeds: u64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(10);
    let options = match variant {
        "nd" => ScenarioOptions::default().with_nd(["Pr", "Pow", "T"]),
        "weak" => ScenarioOptions::default().with_effect("light_power_effect", 0.05),
        "bathroom" => ScenarioOptions::default().with_proximity(true),
        _ => ScenarioOptions::default(),
    };
    let options =
        args[3.min(args.len())..]
            .iter()
            .fold(options, |o, kv| match kv.split_once('=') {
                Some((k, v)) => o.with_effect(k, v.parse().expect("numeric strength")),
                None => o,
            });
    let scm = build_scenario(&ScenarioConfig::smart_home(options))?;
    let truth = scm.diagram().clone();
    for seed in 0..seeds {
        let env = AuditingEnvironment::new(ScmEnvironment::new(scm.clone()));
        let start = Instant::now();
        let (raw, learned) = learn_structure(&env, &DiscoveryConfig::default().with_seed(seed))?;
        let diff = diff_graphs(&learned, &truth)?;
        let fmt = |s: &std::collections::BTreeSet<(String, String)>| {
            s.iter()
                .map(|(a, b)| format!("{}->{}", a, b))
                .collect::<Vec<_>>()
                .join(" ")
        };
        println!(
            "seed {:>3}  {:>6.2}s  exact={}  missed=[{}]  added=[{}]  flagged={}  inconclusive={}  do-ops={}  violations={}",
            seed,
            start.elapsed().as_secs_f64(),
            diff.missed.is_empty() && diff.added.is_empty(),
            fmt(&diff.missed),
            fmt(&diff.added),
            learned.flagged().len(),
            raw.inconclusive_tests,
            env.interventions().len(),
            env.policy_violations().len()
        );
        for (a, b) in &diff.missed {
            let arrow = (truth.id_of(a).unwrap(), truth.id_of(b).unwrap());
            if let Some(r) = raw.removed.get(&arrow) {
                let held: Vec<String> = r
                    .witness
                    .assignments
                    .iter()
                    .map(|(id, v)| format!("{}={}", truth.name(*id), *v as u8))
                    .collect();
                println!(
                    "      {}->{} removed at order {} by {} under [{}], statistic {:.3}",
                    a,
                    b,
                    r.order,
                    if r.by_intervention {
                        "intervention"
                    } else {
                        "observation"
                    },
                    held.join(","),
                    r.statistic
                );
            }
        }
    }
    Ok(())
}
