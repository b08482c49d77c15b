use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;
use shadowforge_core::pipeline::{augment_dataset, AugmentationPolicy, PipelineError, PRESET_NAMES};

use crate::config::{env_seed, read_input, write_json, ConfigFile};
use crate::{AugmentArgs, CliError};

/// Everything needed to rerun: pass it back with `--config`.
#[derive(Serialize)]
struct ResolvedAugment<'a> {
    command: &'static str,
    input: String,
    preset: Option<&'a str>,
    policy_file: Option<String>,
    master_seed: u64,
    policy: &'a AugmentationPolicy,
}

fn unknown_preset(name: &str) -> CliError {
    CliError::Usage(format!(
        "unknown preset {name:?}; available presets: {}",
        PRESET_NAMES.join(", ")
    ))
}

/// Parse policy JSON, reporting whether it pins its own master seed.
fn parse_policy(value: Value, origin: &str) -> Result<(AugmentationPolicy, bool), CliError> {
    let has_seed = value.get("master_seed").is_some();
    let policy = serde_json::from_value(value).map_err(|e| CliError::Usage(format!("{origin}: invalid policy: {e}")))?;
    Ok((policy, has_seed))
}

fn load_policy_file(path: &Path) -> Result<(AugmentationPolicy, bool), CliError> {
    let text = read_input(path)?;
    let invalid = |e: serde_json::Error| CliError::Usage(format!("{}: {e}", path.display()));
    // typed parse from text keeps line/column in the message
    let policy = serde_json::from_str(&text).map_err(invalid)?;
    let value: Value = serde_json::from_str(&text).map_err(invalid)?;
    Ok((policy, value.get("master_seed").is_some()))
}

pub(crate) fn run(args: AugmentArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let cfg = ConfigFile::load(args.config.as_deref())?;
    if !args.input.is_dir() {
        return Err(CliError::Usage(format!(
            "{}: input directory does not exist",
            args.input.display()
        )));
    }

    let mut preset_name = None;
    let mut policy_file = None;
    let (policy, pinned_seed) = if let Some(name) = &args.preset {
        preset_name = Some(name.clone());
        (AugmentationPolicy::preset(name, 0).ok_or_else(|| unknown_preset(name))?, false)
    } else if let Some(path) = &args.policy {
        policy_file = Some(path.display().to_string());
        load_policy_file(path)?
    } else if let Some(value) = cfg.value("policy") {
        match value {
            Value::String(path) => {
                policy_file = Some(path.clone());
                load_policy_file(Path::new(path))?
            }
            inline => parse_policy(inline.clone(), "config policy")?,
        }
    } else if let Some(name) = cfg.string("preset")? {
        let policy = AugmentationPolicy::preset(&name, 0).ok_or_else(|| unknown_preset(&name))?;
        preset_name = Some(name);
        (policy, false)
    } else {
        return Err(CliError::Usage(format!(
            "one of --preset or --policy is required; available presets: {}",
            PRESET_NAMES.join(", ")
        )));
    };

    let seed = match (args.seed, cfg.u64("seed")?.or(cfg.u64("master_seed")?)) {
        (Some(s), _) | (None, Some(s)) => s,
        (None, None) if pinned_seed => policy.master_seed,
        (None, None) => env_seed()?.unwrap_or(0),
    };
    let policy = policy.with_seed(seed);
    let workers = match args.workers {
        Some(n) => n,
        None => cfg.u64("workers")?.unwrap_or(0) as usize,
    };

    let manifest = augment_dataset(&args.input, &args.output, &policy, workers).map_err(|e| match e {
        PipelineError::Policy(m) => CliError::Usage(m),
        other => CliError::Io(other.to_string()),
    })?;

    write_json(
        &args.output.join("resolved-config.json"),
        &ResolvedAugment {
            command: "augment",
            input: args.input.display().to_string(),
            preset: preset_name.as_deref(),
            policy_file,
            master_seed: seed,
            policy: &policy,
        },
    )?;

    let fired = |op: &str| {
        manifest
            .entries
            .iter()
            .filter(|e| e.applied_ops.iter().any(|o| o.op == op))
            .count()
    };
    let _ = writeln!(
        stdout,
        "augmented {} images into {} (seed {seed}, {} skipped)",
        manifest.entries.len(),
        args.output.display(),
        manifest.skipped.len()
    );
    for op in ["flip", "shadow", "pole_shadow", "reduce_brightness", "jitter_brightness"] {
        let n = fired(op);
        if n > 0 {
            let _ = writeln!(stdout, "  {op}: {n}");
        }
    }
    Ok(())
}
