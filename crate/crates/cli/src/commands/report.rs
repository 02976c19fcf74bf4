use std::path::PathBuf;

use clap::Args;

use topobench_core::reference;

use crate::commands::evaluate::EvalReport;
use crate::{CliError, CliResult};

#[derive(Args)]
pub struct ReportArgs {
    /// Evaluation report (eval_report.json) to render.
    #[arg(long)]
    eval: Option<PathBuf>,
    /// Print the published reference results instead.
    #[arg(long)]
    published: bool,
}

pub fn run(args: ReportArgs) -> CliResult<()> {
    if args.published {
        print!("{}", reference::published_results_table().to_text());
        return Ok(());
    }
    let path = args.eval.ok_or_else(|| {
        CliError::Usage("give --eval <eval_report.json> or --published".into())
    })?;
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    let report: EvalReport =
        serde_json::from_str(&text).map_err(|e| CliError::Data(format!("bad report: {e}")))?;
    println!(
        "dataset {} | methods {}",
        report.dataset_id,
        report.methods.join(", ")
    );
    print!("{}", report.table.to_text());
    for m in &report.per_method {
        if let Some(err) = &m.at_rho_error {
            println!("note: {}: pinned operating point unresolved: {err}", m.method);
        }
    }
    Ok(())
}
