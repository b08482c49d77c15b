use std::io::Write;

use serde::Serialize;
use shadowforge_core::breakdown::format_degrees;
use shadowforge_core::chart::breakdown_svg;
use shadowforge_core::{average_breakdowns, curve_from_predictions, detect_breakdown, AccuracyCurve, BreakdownConfig, BreakdownResult};

use crate::config::{read_input, resolved_config_path, write_json, write_output, ConfigFile};
use crate::evaluate::load_predictions;
use crate::{AverageArgs, BreakdownArgs, CliError};

#[derive(Serialize)]
struct ResolvedBreakdown {
    command: &'static str,
    input: String,
    accuracy_floor: f64,
    drop_threshold: f64,
    svg: Option<String>,
    curve_out: Option<String>,
    title: String,
}

pub(crate) fn run_breakdown(args: BreakdownArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let cfg = ConfigFile::load(args.config.as_deref())?;
    let defaults = BreakdownConfig::default();
    let floor = match args.floor {
        Some(f) => f,
        None => cfg.f64("floor")?.unwrap_or(defaults.accuracy_floor),
    };
    let drop = match args.drop {
        Some(d) => d,
        None => cfg.f64("drop")?.unwrap_or(defaults.drop_threshold),
    };
    let svg_path = match args.svg {
        Some(p) => Some(p),
        None => cfg.path("svg")?,
    };
    let curve_out = match args.curve_out {
        Some(p) => Some(p),
        None => cfg.path("curve_out")?,
    };
    let title = match args.title {
        Some(t) => t,
        None => cfg.string("title")?.unwrap_or_else(|| "Accuracy vs. hand pose".into()),
    };
    let breakdown_cfg = BreakdownConfig::new(floor, drop).map_err(|e| CliError::Usage(e.to_string()))?;

    let text = read_input(&args.input)?;
    let in_err = |e: shadowforge_core::breakdown::BreakdownError| {
        CliError::Usage(format!("{}: {e}", args.input.display()))
    };
    let curve = if text.trim_start().starts_with("angle_deg,accuracy") {
        AccuracyCurve::read_csv(text.as_bytes()).map_err(in_err)?
    } else {
        curve_from_predictions(&load_predictions(&args.input)?).map_err(in_err)?
    };

    let result = detect_breakdown(&curve, &breakdown_cfg);
    write_json(&args.out, &result)?;
    if let Some(path) = &svg_path {
        write_output(path, breakdown_svg(&title, &curve, &result, &breakdown_cfg))?;
    }
    if let Some(path) = &curve_out {
        write_output(path, curve.to_csv())?;
    }
    write_json(
        &resolved_config_path(&args.out),
        &ResolvedBreakdown {
            command: "breakdown",
            input: args.input.display().to_string(),
            accuracy_floor: floor,
            drop_threshold: drop,
            svg: svg_path.map(|p| p.display().to_string()),
            curve_out: curve_out.map(|p| p.display().to_string()),
            title,
        },
    )?;

    let side = |angle: i32, triggered: bool| {
        if triggered {
            format!("{angle}")
        } else {
            format!("{angle} (none)")
        }
    };
    let _ = writeln!(
        stdout,
        "breakdown points: positive {}, negative {}",
        side(result.positive, result.positive_triggered),
        side(result.negative, result.negative_triggered)
    );
    Ok(())
}

#[derive(Serialize)]
struct AverageOutput {
    count: usize,
    mean_positive: f64,
    mean_negative: f64,
}

pub(crate) fn run_average(args: AverageArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let mut results = Vec::with_capacity(args.results.len());
    for path in &args.results {
        let r: BreakdownResult = serde_json::from_str(&read_input(path)?)
            .map_err(|e| CliError::Usage(format!("{}: invalid breakdown result: {e}", path.display())))?;
        results.push(r);
    }
    let (pos, neg) = average_breakdowns(&results).ok_or_else(|| CliError::Usage("no results given".into()))?;
    let _ = writeln!(
        stdout,
        "average breakdown points over {} results: (+) {}  (-) {}",
        results.len(),
        format_degrees(pos),
        format_degrees(neg.abs())
    );
    if let Some(out) = &args.out {
        write_json(
            out,
            &AverageOutput {
                count: results.len(),
                mean_positive: pos,
                mean_negative: neg,
            },
        )?;
    }
    Ok(())
}
