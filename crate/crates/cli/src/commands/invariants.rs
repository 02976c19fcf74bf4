use std::path::PathBuf;

use clap::Args;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use topobench_core::baselines::LocalizerDecision;
use topobench_core::consistency::run_growth_invariant_harness;
use topobench_core::frame::SequenceRole;
use topobench_core::graph::{EvalScale, NodeId, UpdatePolicyParams};
use topobench_core::policy::{DecisionSource, FaultInjector, OracleSource};
use topobench_core::synthworld::{generate_world, WorldRouteOracle, WorldSpec};

use crate::{CliError, CliResult};

#[derive(Args)]
pub struct InvariantsArgs {
    /// World spec file (JSON); unset fields use built-in defaults.
    #[arg(long)]
    spec: PathBuf,
    /// Physical route-distance threshold in meters.
    #[arg(long, default_value_t = 8.0)]
    d: f64,
    /// Tolerance factor; certification requires epsilon <= 1/kappa.
    #[arg(long, default_value_t = 0.5)]
    epsilon: f64,
    /// Edge-length regularity bound of the update policy.
    #[arg(long, default_value_t = 2.0)]
    kappa: f64,
    /// Spatial threshold of the update policy, in meters.
    #[arg(long, default_value_t = 1.0)]
    spatial_threshold: f64,
    /// Ground-truth match radius of the oracle decisions, in meters.
    #[arg(long, default_value_t = 0.75)]
    match_radius: f64,
    /// How many trailing segments the growth walk revisits.
    #[arg(long, default_value_t = 3)]
    revisit: usize,
    /// Force a wrong accept (of the first node) at this step.
    #[arg(long)]
    inject_wrong_accept: Option<usize>,
    /// Print one line per growth step.
    #[arg(long)]
    trace: bool,
}

pub fn run(args: InvariantsArgs) -> CliResult<()> {
    let text = std::fs::read_to_string(&args.spec)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", args.spec.display())))?;
    let spec: WorldSpec = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("invalid world spec: {e}")))?;
    let world = generate_world(&spec)?;
    let oracle = WorldRouteOracle { world: &world };
    let walk = world.revisit_walk(args.revisit);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0xABCD);
    let seq = world.frames_along(&walk, SequenceRole::Map, spec.noise_sigma, &mut rng)?;

    let params = UpdatePolicyParams::new(args.spatial_threshold, 0.7, args.kappa)?;
    let scale = EvalScale::new(args.d, args.epsilon)?;

    let mut base = OracleSource::new(&oracle, args.match_radius);
    let mut injected;
    let source: &mut dyn DecisionSource = match args.inject_wrong_accept {
        Some(step) => {
            injected = FaultInjector {
                inner: base,
                overrides: std::collections::BTreeMap::from([(
                    step,
                    LocalizerDecision::accept(NodeId(0), 0.99),
                )]),
            };
            &mut injected
        }
        None => &mut base,
    };

    let trace = run_growth_invariant_harness(&seq, source, params, scale, &oracle)?;
    if args.trace {
        for step in &trace.steps {
            println!(
                "step {:4}  nodes {:4}  edges {:4}  precision {:.4}{}  recall {:.4}{}",
                step.step,
                step.report
                    .n
                    .map(|n| n.to_string())
                    .unwrap_or_else(|| "-".into()),
                step.report
                    .mu_e
                    .map(|m| format!("{m:.2}"))
                    .unwrap_or_else(|| "-".into()),
                step.report.precision,
                if step.report.precision_vacuous { "*" } else { " " },
                step.report.recall,
                if step.report.recall_vacuous { "*" } else { " " },
            );
        }
    }
    println!(
        "grew {} steps over {:?} ({} nodes, {} edges)",
        trace.steps.len(),
        spec.layout,
        trace.final_map.node_count(),
        trace.final_map.edge_count(),
    );
    if !trace.certified {
        println!(
            "certification refused: epsilon {} exceeds 1/kappa = {}; diagnostic run only",
            args.epsilon,
            1.0 / args.kappa
        );
        if let Some(step) = trace.first_violation {
            println!("first violation at step {step}");
        }
        return Err(CliError::Usage(
            "hypothesis violated: certification requires epsilon <= 1/kappa".into(),
        ));
    }
    match trace.first_violation {
        None => {
            println!("PASS: edge precision and recall held at 1.0 at every step");
            Ok(())
        }
        Some(step) => {
            let broken = trace.steps.iter().find(|s| s.step == step).unwrap();
            println!(
                "FAIL: first violation at step {step} (precision {:.4}, recall {:.4}, decision {:?})",
                broken.report.precision, broken.report.recall, broken.record.decision
            );
            Err(CliError::Invariant(format!(
                "consistency violated at step {step}"
            )))
        }
    }
}
