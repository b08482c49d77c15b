use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use shadowforge_core::metrics::{read_predictions_csv, GroupAccuracy, MetricsError};
use shadowforge_core::{grouped_accuracy, percent_change, top1_accuracy, PredictionRecord};

use crate::config::{read_input_bytes, resolved_config_path, write_json, ConfigFile};
use crate::{CliError, EvaluateArgs};

#[derive(Serialize)]
struct BaselineComparison {
    overall: f64,
    percent_change: f64,
    display: String,
}

#[derive(Serialize)]
struct EvaluateOutput {
    overall: f64,
    by_group: BTreeMap<String, GroupAccuracy>,
    #[serde(skip_serializing_if = "Option::is_none")]
    baseline: Option<BaselineComparison>,
}

#[derive(Serialize)]
struct ResolvedEvaluate {
    command: &'static str,
    predictions: String,
    group_by: Option<String>,
    baseline: Option<String>,
}

fn metrics_error(path: &Path, e: MetricsError) -> CliError {
    CliError::Usage(format!("{}: {e}", path.display()))
}

pub(crate) fn load_predictions(path: &Path) -> Result<Vec<PredictionRecord>, CliError> {
    let bytes = read_input_bytes(path)?;
    read_predictions_csv(bytes.as_slice()).map_err(|e| metrics_error(path, e))
}

pub(crate) fn run(args: EvaluateArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let cfg = ConfigFile::load(args.config.as_deref())?;
    let group_by = match args.group_by {
        Some(g) => Some(g),
        None => cfg.string("group_by")?,
    };
    let baseline_path = match args.baseline {
        Some(p) => Some(p),
        None => cfg.path("baseline")?,
    };

    let records = load_predictions(&args.predictions)?;
    let (overall, by_group) = match &group_by {
        Some(key) => {
            let report = grouped_accuracy(&records, key).map_err(|e| metrics_error(&args.predictions, e))?;
            (report.overall, report.by_group)
        }
        None => (
            top1_accuracy(&records).map_err(|e| metrics_error(&args.predictions, e))?,
            BTreeMap::new(),
        ),
    };

    let baseline = match &baseline_path {
        Some(path) => {
            let base = top1_accuracy(&load_predictions(path)?).map_err(|e| metrics_error(path, e))?;
            let change = percent_change(base, overall).map_err(|e| metrics_error(path, e))?;
            Some(BaselineComparison {
                overall: base,
                percent_change: change.value(),
                display: change.to_string(),
            })
        }
        None => None,
    };

    let _ = writeln!(stdout, "overall accuracy: {overall:.3} ({} records)", records.len());
    for (group, acc) in &by_group {
        let _ = writeln!(stdout, "  {group}: {:.3} (n={})", acc.accuracy, acc.count);
    }
    if let Some(b) = &baseline {
        let _ = writeln!(stdout, "baseline accuracy: {:.3}", b.overall);
        let _ = writeln!(stdout, "change vs baseline: {}", b.display);
    }

    write_json(
        &args.out,
        &EvaluateOutput {
            overall,
            by_group,
            baseline,
        },
    )?;
    write_json(
        &resolved_config_path(&args.out),
        &ResolvedEvaluate {
            command: "evaluate",
            predictions: args.predictions.display().to_string(),
            group_by,
            baseline: baseline_path.map(|p| p.display().to_string()),
        },
    )
}
