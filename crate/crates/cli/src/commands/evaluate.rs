use std::collections::BTreeSet;
use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};

use topobench_core::ambiguity::AmbiguityParams;
use topobench_core::baselines::{Method, MethodParams, PbuParams};
use topobench_core::consistency::consistency_report;
use topobench_core::graph::{EvalScale, UpdatePolicyParams};
use topobench_core::io::sweep_csv::{write_sweep_csv, SweepColumn};
use topobench_core::io::{load_dataset, trajectory};
use topobench_core::metrics::{
    reevaluate_operating_point, render_results_table, score_cases, select_operating_point,
    split_validation, sweep_from_scored, uniform_grid, OperatingPoint, OperatingPointKind,
    ResultsTable, SweepPoint,
};
use topobench_core::policy::{build_policy_map, edge_opportunities};
use topobench_core::reference;
use topobench_core::route::TraversalOracle;
use topobench_core::similarity::CosineSim;
use topobench_core::synthworld::CaseCounts;

use crate::{CliError, CliResult, DatasetArg};

#[derive(Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    dataset: DatasetArg,
    /// Output directory for sweeps, tables, and the evaluation report.
    #[arg(long)]
    out: PathBuf,
    /// Comma-separated methods: gm, sm-med, sm-all, pbu.
    #[arg(long, value_delimiter = ',', required = true)]
    methods: Vec<String>,
    /// Number of uniformly spaced thresholds over [0, 1].
    #[arg(long, default_value_t = 101)]
    tau_grid: usize,
    /// Physical route-distance threshold in meters.
    #[arg(long, default_value_t = 8.0)]
    d: f64,
    /// Tolerance factor converting d into a hop budget.
    #[arg(long, default_value_t = 0.5)]
    epsilon: f64,
    /// Edge-length regularity bound of the update policy.
    #[arg(long, default_value_t = 2.0)]
    kappa: f64,
    /// Spatial threshold of the update policy, in meters.
    #[arg(long, default_value_t = 1.0)]
    spatial_threshold: f64,
    /// Ground-truth match radius used when building maps, in meters.
    #[arg(long, default_value_t = 0.5)]
    match_radius: f64,
    /// Sequence-matching half window, in frames.
    #[arg(long, default_value_t = 2)]
    half_window: usize,
    /// Seed of the validation split.
    #[arg(long, default_value_t = 42)]
    split_seed: u64,
    /// Fraction of cases per stratum held out for threshold selection.
    #[arg(long, default_value_t = 0.2)]
    split_fraction: f64,
    /// Target rejection accuracy of the pinned operating point.
    #[arg(long, default_value_t = 0.9)]
    rho: f64,
}

/// Everything the run was configured with, echoed for provenance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalParams {
    pub d: f64,
    pub epsilon: f64,
    pub kappa: f64,
    pub spatial_threshold: f64,
    pub match_radius: f64,
    pub half_window: usize,
    pub pbu: PbuParams,
    pub tau_grid: usize,
    pub split_seed: u64,
    pub split_fraction: f64,
    pub rho: f64,
    pub ambiguity: AmbiguityParams,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MethodReport {
    pub method: String,
    /// The pinned-rejection operating point, when it resolved.
    pub at_rho: Option<OperatingPoint>,
    /// Why it did not resolve, when it did not.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub at_rho_error: Option<String>,
    pub bla_max: OperatingPoint,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MapConsistency {
    pub map_ref: String,
    pub precision: f64,
    pub recall: f64,
    pub n: Option<usize>,
    pub mu_e: Option<f64>,
    pub precision_vacuous: bool,
    pub recall_vacuous: bool,
    pub precision_violations: usize,
    pub recall_violations: usize,
}

/// Machine-readable output of an evaluation run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub dataset_id: String,
    pub methods: Vec<String>,
    pub params: EvalParams,
    pub counts: CaseCounts,
    pub per_method: Vec<MethodReport>,
    pub consistency: Vec<MapConsistency>,
    pub table: ResultsTable,
}

pub const EVAL_REPORT_FILENAME: &str = "eval_report.json";
pub const RESULTS_TABLE_FILENAME: &str = "results.txt";

pub fn run(args: EvaluateArgs) -> CliResult<()> {
    let root = args.dataset.resolve()?;
    if args.methods.is_empty() {
        return Err(CliError::Usage(
            "no methods given; valid names: gm, sm-med, sm-all, pbu".into(),
        ));
    }
    let mut methods = Vec::new();
    for name in &args.methods {
        let m: Method = name.parse()?;
        if !methods.contains(&m) {
            methods.push(m);
        }
    }
    if args.tau_grid < 2 {
        return Err(CliError::Usage("tau-grid needs at least 2 points".into()));
    }
    let dataset = load_dataset(&root)?;
    let policy = UpdatePolicyParams::new(args.spatial_threshold, 0.7, args.kappa)?;
    let scale = EvalScale::new(args.d, args.epsilon)?;
    let cases = dataset.to_test_cases(&policy, args.match_radius)?;
    if cases.iter().any(|c| c.label().is_none()) {
        return Err(CliError::Usage(
            "dataset has unlabeled cases; run `topobench classify` first".into(),
        ));
    }

    let grid = uniform_grid(0.0, 1.0, args.tau_grid);
    let (val_idx, _) = split_validation(&cases, args.split_fraction, args.split_seed);
    let val_set: BTreeSet<usize> = val_idx.iter().copied().collect();
    let method_params = MethodParams {
        half_window: args.half_window,
        pbu: PbuParams::default(),
    };

    let mut per_method = Vec::new();
    let mut sweeps: Vec<(String, Vec<SweepPoint>)> = Vec::new();
    let mut table_points = Vec::new();
    for &method in &methods {
        let scored = score_cases(&cases, method, &method_params, scale, &CosineSim, &TraversalOracle)?;
        let val_scored: Vec<_> = scored
            .iter()
            .filter(|s| val_set.contains(&s.case_index))
            .cloned()
            .collect();
        let sweep_val = sweep_from_scored(&grid, &val_scored)?;
        let sweep_full = sweep_from_scored(&grid, &scored)?;

        let (at_rho, at_rho_error) =
            match select_operating_point(&sweep_val, OperatingPointKind::AoAtRho { rho: args.rho }) {
                Ok(mut p) => {
                    reevaluate_operating_point(&mut p, &sweep_full)?;
                    (Some(p), None)
                }
                Err(e @ topobench_core::Error::NoOperatingPoint { .. }) => (None, Some(e.to_string())),
                Err(other) => return Err(other.into()),
            };
        let mut bla_max = select_operating_point(&sweep_val, OperatingPointKind::BlaMax)?;
        reevaluate_operating_point(&mut bla_max, &sweep_full)?;

        table_points.push((method, at_rho.clone(), Some(bla_max.clone())));
        per_method.push(MethodReport {
            method: method.name().to_string(),
            at_rho,
            at_rho_error,
            bla_max,
        });
        sweeps.push((method.name().to_string(), sweep_full));
    }

    // Consistency of each environment map under the policy that built it.
    let mut consistency = Vec::new();
    let mut seen_maps = BTreeSet::new();
    for mc in &dataset.manifest.cases {
        if !seen_maps.insert(mc.map_ref.clone()) {
            continue;
        }
        let map_seq = load_map_sequence(&root, &mc.map_ref)?;
        let (map, history) =
            build_policy_map(&map_seq, &policy, &TraversalOracle, args.match_radius)?;
        let omega = edge_opportunities(&map, scale, &history, &TraversalOracle)?;
        let report = consistency_report(&map, &omega, scale, &TraversalOracle)?;
        consistency.push(MapConsistency {
            map_ref: mc.map_ref.clone(),
            precision: report.precision,
            recall: report.recall,
            n: report.n,
            mu_e: report.mu_e,
            precision_vacuous: report.precision_vacuous,
            recall_vacuous: report.recall_vacuous,
            precision_violations: report.precision_violations.len(),
            recall_violations: report.recall_violations.len(),
        });
    }

    let table = render_results_table(&table_points, &reference::external_reference_rows(), args.rho);

    std::fs::create_dir_all(&args.out)
        .map_err(|e| CliError::Data(format!("cannot create {}: {e}", args.out.display())))?;
    for column in SweepColumn::ALL {
        let csv = write_sweep_csv(&sweeps, column)?;
        std::fs::write(args.out.join(format!("{}.csv", column.stem())), csv)
            .map_err(|e| CliError::Data(e.to_string()))?;
    }
    let text = table.to_text();
    std::fs::write(args.out.join(RESULTS_TABLE_FILENAME), &text)
        .map_err(|e| CliError::Data(e.to_string()))?;

    let report = EvalReport {
        dataset_id: dataset.manifest.dataset_id.clone(),
        methods: methods.iter().map(|m| m.name().to_string()).collect(),
        params: EvalParams {
            d: args.d,
            epsilon: args.epsilon,
            kappa: args.kappa,
            spatial_threshold: args.spatial_threshold,
            match_radius: args.match_radius,
            half_window: args.half_window,
            pbu: method_params.pbu,
            tau_grid: args.tau_grid,
            split_seed: args.split_seed,
            split_fraction: args.split_fraction,
            rho: args.rho,
            ambiguity: dataset.manifest.params,
        },
        counts: dataset.manifest.counts,
        per_method,
        consistency,
        table,
    };
    let mut json = serde_json::to_string_pretty(&report).map_err(|e| CliError::Data(e.to_string()))?;
    json.push('\n');
    std::fs::write(args.out.join(EVAL_REPORT_FILENAME), json)
        .map_err(|e| CliError::Data(e.to_string()))?;

    print!("{text}");
    for mc in &report.consistency {
        println!(
            "consistency {}: precision {:.4}{} recall {:.4}{}",
            mc.map_ref,
            mc.precision,
            if mc.precision_vacuous { " (vacuous)" } else { "" },
            mc.recall,
            if mc.recall_vacuous { " (vacuous)" } else { "" },
        );
    }
    for m in &report.per_method {
        if let Some(err) = &m.at_rho_error {
            println!("note: {}: pinned operating point unresolved: {err}", m.method);
        }
    }
    println!("wrote {}", args.out.join(EVAL_REPORT_FILENAME).display());
    Ok(())
}

fn load_map_sequence(
    root: &std::path::Path,
    stem: &str,
) -> topobench_core::Result<topobench_core::Sequence> {
    use topobench_core::frame::SequenceRole;
    let traj = trajectory::load_trajectory(&root.join(format!("{stem}.traj.csv")), SequenceRole::Map)?;
    let rows =
        topobench_core::io::descriptor::load_descriptors(&root.join(format!("{stem}.desc.bin")))?;
    let frames: Vec<_> = traj
        .frames()
        .iter()
        .cloned()
        .zip(rows)
        .map(|(mut f, row)| {
            f.descriptor = Some(row);
            f
        })
        .collect();
    topobench_core::Sequence::new(frames, SequenceRole::Map)
}
