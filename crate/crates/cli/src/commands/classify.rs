use std::path::PathBuf;

use clap::Args;

use topobench_core::ambiguity::{build_correspondence, classify_case, AmbiguityParams};
use topobench_core::frame::SequenceRole;
use topobench_core::io::manifest::BenchmarkManifest;
use topobench_core::io::{load_dataset, trajectory};
use topobench_core::similarity::CosineSim;

use crate::{CliResult, DatasetArg};

#[derive(Args)]
pub struct ClassifyArgs {
    #[command(flatten)]
    dataset: DatasetArg,
    /// Ambiguity ratio threshold; overrides the manifest value.
    #[arg(long)]
    alpha: Option<f64>,
    /// Visual-similarity threshold; overrides the manifest value.
    #[arg(long)]
    tau: Option<f64>,
    /// Window length in frames; overrides the manifest value.
    #[arg(long)]
    seq_len: Option<usize>,
    /// Where to write the relabeled manifest (default: in place).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load_sequence_pair(
    root: &std::path::Path,
    stem: &str,
    role: SequenceRole,
) -> topobench_core::Result<topobench_core::Sequence> {
    let traj = trajectory::load_trajectory(&root.join(format!("{stem}.traj.csv")), role)?;
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
    topobench_core::Sequence::new(frames, role)
}

pub fn run(args: ClassifyArgs) -> CliResult<()> {
    let root = args.dataset.resolve()?;
    let dataset = load_dataset(&root)?;
    let mut manifest = dataset.manifest.clone();

    // Parameter precedence: CLI flag > manifest > built-in default.
    let params = AmbiguityParams::new(
        args.tau.unwrap_or(manifest.params.tau),
        args.alpha.unwrap_or(manifest.params.alpha),
        args.seq_len.unwrap_or(manifest.params.seq_len),
    )?;

    let mut map_cache: std::collections::BTreeMap<String, topobench_core::Sequence> =
        std::collections::BTreeMap::new();
    for case in &mut manifest.cases {
        if !map_cache.contains_key(&case.map_ref) {
            let seq = load_sequence_pair(&root, &case.map_ref, SequenceRole::Map)?;
            map_cache.insert(case.map_ref.clone(), seq);
        }
        let map_seq = &map_cache[&case.map_ref];
        let test_seq = load_sequence_pair(&root, &case.test_ref, SequenceRole::Test)?;
        let corr = build_correspondence(&test_seq, map_seq, case.align_radius);
        let classification = classify_case(&test_seq, map_seq, &corr, &params, &CosineSim)?;
        case.classification = Some(classification);
    }
    manifest.params = params;
    manifest.counts = BenchmarkManifest::tally(&manifest.cases);

    let out_root = args.out.unwrap_or(root);
    std::fs::create_dir_all(&out_root)
        .map_err(|e| crate::CliError::Data(format!("cannot create output dir: {e}")))?;
    manifest.save(&out_root)?;

    println!(
        "classified {} cases across {} environments (alpha {}, tau {}, L {})",
        manifest.cases.len(),
        manifest.environments.len(),
        params.alpha,
        params.tau,
        params.seq_len
    );
    println!("label     count");
    println!("A+P       {}", manifest.counts.ambiguous_positive);
    println!("P.O.      {}", manifest.counts.positive_only);
    println!("A.O.      {}", manifest.counts.ambiguous_only);
    println!("NOVEL     {}", manifest.counts.novel_clean);
    Ok(())
}
