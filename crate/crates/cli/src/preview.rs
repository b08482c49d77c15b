use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use shadowforge_core::raster::side_by_side;
use shadowforge_core::shadow::{pole_to_polygon, preset_polygons, PoleShadowModel, ShadowFactor, ShadowSpec};
use shadowforge_core::{apply_shadow, decode_image, encode_image, EncodeFormat};

use crate::config::{read_input, read_input_bytes, resolved_config_path, write_json, write_output, ConfigFile};
use crate::{CliError, PreviewArgs};

const DEFAULT_FACTOR: f64 = 0.5;

#[derive(Serialize)]
struct ResolvedPreview {
    command: &'static str,
    image: String,
    polygon: Option<u8>,
    spec_file: Option<String>,
    pole: Option<PoleShadowModel>,
    spec: ShadowSpec,
}

fn compare_path(out: &Path) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "preview".into());
    out.with_file_name(format!("{stem}-compare.png"))
}

fn parse_json<T: serde::de::DeserializeOwned>(path: &Path, what: &str) -> Result<T, CliError> {
    serde_json::from_str(&read_input(path)?)
        .map_err(|e| CliError::Usage(format!("{}: invalid {what}: {e}", path.display())))
}

pub(crate) fn run(args: PreviewArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let cfg = ConfigFile::load(args.config.as_deref())?;
    let polygon = match args.polygon {
        Some(n) => Some(n as u64),
        None => cfg.u64("polygon")?,
    };
    let spec_file = args.spec.clone().map(Ok).or_else(|| cfg.path("spec").transpose()).transpose()?;
    let pole_file = args.pole.clone().map(Ok).or_else(|| cfg.path("pole").transpose()).transpose()?;
    let factor = match args.shadow_factor {
        Some(f) => f,
        None => cfg.f64("shadow_factor")?.unwrap_or(DEFAULT_FACTOR),
    };

    let mut pole = None;
    let (spec, polygon) = match (polygon, &spec_file, &pole_file) {
        (Some(n), None, None) => {
            let index = usize::try_from(n)
                .ok()
                .filter(|i| (1..=4).contains(i))
                .ok_or_else(|| CliError::Usage(format!("--polygon must be 1-4, got {n}")))?;
            let factor = ShadowFactor::new(factor).map_err(|e| CliError::Usage(e.to_string()))?;
            (ShadowSpec::new(preset_polygons()[index - 1], factor), Some(index as u8))
        }
        (None, Some(path), None) => (parse_json::<ShadowSpec>(path, "shadow spec")?, None),
        (None, None, Some(path)) => {
            let model: PoleShadowModel = parse_json(path, "pole model")?;
            pole = Some(model);
            (pole_to_polygon(&model), None)
        }
        (None, None, None) => {
            return Err(CliError::Usage(
                "one of --polygon, --spec or --pole is required".into(),
            ))
        }
        _ => {
            return Err(CliError::Usage(
                "--polygon, --spec and --pole are mutually exclusive".into(),
            ))
        }
    };

    let bytes = read_input_bytes(&args.image)?;
    let original =
        decode_image(&bytes).map_err(|e| CliError::Usage(format!("{}: {e}", args.image.display())))?;
    let augmented = apply_shadow(&original, &spec);
    let encode = |img| encode_image(img, EncodeFormat::Png).map_err(|e| CliError::Io(e.to_string()));

    write_output(&args.out, encode(&augmented)?)?;
    let both = side_by_side(&original, &augmented).map_err(|e| CliError::Io(e.to_string()))?;
    let compare = compare_path(&args.out);
    write_output(&compare, encode(&both)?)?;
    write_json(
        &resolved_config_path(&args.out),
        &ResolvedPreview {
            command: "preview",
            image: args.image.display().to_string(),
            polygon,
            spec_file: spec_file.map(|p| p.display().to_string()),
            pole,
            spec,
        },
    )?;

    let _ = writeln!(
        stdout,
        "wrote {} and {} (shadow factor {})",
        args.out.display(),
        compare.display(),
        spec.shadow_factor.get()
    );
    Ok(())
}
