//! Deterministic batch augmentation over a class-folder dataset.
//!
//! Every image gets its own generator seeded from the master seed and its
//! relative path, so output bytes depend only on the input tree and the
//! policy, never on traversal order or worker count.
//!
//! Deviate consumption per step is fixed: one uniform draw for the
//! Bernoulli gate, then (only if the gate fired) the step's parameter draws
//! in declaration order. Choice among `n` alternatives uses one draw `u`
//! mapped to `floor(u * n)`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::photometric::{reduce_brightness, BrightnessJitterRange};
use crate::raster::{decode_image, encode_image, horizontal_flip, EncodeFormat, ImageBuffer, ImageError};
use crate::shadow::{apply_pole_shadow, apply_shadow, preset_specs, PoleShadowModel, ShadowFactor, ShadowSpec};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: ImageError,
    },
    #[error("invalid policy: {0}")]
    Policy(String),
    #[error("failed to start worker pool: {0}")]
    Workers(String),
}

impl PipelineError {
    fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Self {
        let path = path.into();
        move |source| PipelineError::Io { path, source }
    }
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(FNV_OFFSET, |h, &b| (h ^ b as u64).wrapping_mul(FNV_PRIME))
}

/// splitmix64 finalizer
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// `mix(mix(fnv1a(path)) ^ master_seed)`.
///
/// `relative_path` uses `/` separators regardless of platform.
pub fn derive_image_seed(master_seed: u64, relative_path: &str) -> u64 {
    mix64(mix64(fnv1a64(relative_path.as_bytes())) ^ master_seed)
}

/// Probability in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Probability(f64);

impl Probability {
    pub const ALWAYS: Probability = Probability(1.0);
    pub const NEVER: Probability = Probability(0.0);

    pub fn new(p: f64) -> Result<Self, PipelineError> {
        if (0.0..=1.0).contains(&p) {
            Ok(Self(p))
        } else {
            Err(PipelineError::Policy(format!("probability {p} outside [0, 1]")))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Probability {
    type Error = PipelineError;

    fn try_from(p: f64) -> Result<Self, Self::Error> {
        Self::new(p)
    }
}

impl From<Probability> for f64 {
    fn from(p: Probability) -> f64 {
        p.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum PolicyStep {
    HorizontalFlip {
        prob: Probability,
    },
    /// One of `specs` chosen uniformly when the gate fires.
    Shadow {
        prob: Probability,
        specs: Vec<ShadowSpec>,
    },
    PoleShadow {
        prob: Probability,
        models: Vec<PoleShadowModel>,
    },
    ReduceBrightness {
        prob: Probability,
        factor: ShadowFactor,
    },
    JitterBrightness {
        prob: Probability,
        range: BrightnessJitterRange,
    },
}

impl PolicyStep {
    pub fn prob(&self) -> Probability {
        match self {
            PolicyStep::HorizontalFlip { prob }
            | PolicyStep::Shadow { prob, .. }
            | PolicyStep::PoleShadow { prob, .. }
            | PolicyStep::ReduceBrightness { prob, .. }
            | PolicyStep::JitterBrightness { prob, .. } => *prob,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PolicyFields")]
pub struct AugmentationPolicy {
    pub master_seed: u64,
    steps: Vec<PolicyStep>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PolicyFields {
    #[serde(default)]
    master_seed: u64,
    steps: Vec<PolicyStep>,
}

impl TryFrom<PolicyFields> for AugmentationPolicy {
    type Error = PipelineError;

    fn try_from(f: PolicyFields) -> Result<Self, Self::Error> {
        AugmentationPolicy::new(f.steps, f.master_seed)
    }
}

/// Named policies: the canonical shadow policy plus the brightness
/// comparison rows.
pub const PRESET_NAMES: [&str; 5] = [
    "paper-shadow",
    "baseline",
    "brightness50",
    "brightness50-p50",
    "jitter-025-1",
];

impl AugmentationPolicy {
    pub fn new(steps: Vec<PolicyStep>, master_seed: u64) -> Result<Self, PipelineError> {
        if steps.is_empty() {
            return Err(PipelineError::Policy("policy needs at least one step".into()));
        }
        for (i, step) in steps.iter().enumerate() {
            let empty = match step {
                PolicyStep::Shadow { specs, .. } => specs.is_empty(),
                PolicyStep::PoleShadow { models, .. } => models.is_empty(),
                _ => false,
            };
            if empty {
                return Err(PipelineError::Policy(format!("step {i} has no alternatives to choose from")));
            }
        }
        Ok(Self { master_seed, steps })
    }

    pub fn steps(&self) -> &[PolicyStep] {
        &self.steps
    }

    pub fn with_seed(mut self, master_seed: u64) -> Self {
        self.master_seed = master_seed;
        self
    }

    /// Look up one of [`PRESET_NAMES`].
    pub fn preset(name: &str, master_seed: u64) -> Option<Self> {
        let half = Probability(0.5);
        let factor = ShadowFactor::new(0.5).expect("0.5 is a valid factor");
        let steps = match name {
            "paper-shadow" => vec![
                PolicyStep::HorizontalFlip { prob: half },
                PolicyStep::Shadow {
                    prob: half,
                    specs: preset_specs(factor),
                },
            ],
            "baseline" => vec![PolicyStep::HorizontalFlip { prob: half }],
            "brightness50" => vec![PolicyStep::ReduceBrightness {
                prob: Probability::ALWAYS,
                factor,
            }],
            "brightness50-p50" => vec![PolicyStep::ReduceBrightness { prob: half, factor }],
            "jitter-025-1" => vec![PolicyStep::JitterBrightness {
                prob: Probability::ALWAYS,
                range: BrightnessJitterRange::new(0.25, 1.0).expect("valid range"),
            }],
            _ => return None,
        };
        Some(Self { master_seed, steps })
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// One executed augmentation with its resolved parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppliedOp {
    pub op: String,
    pub params: BTreeMap<String, Value>,
}

impl AppliedOp {
    fn new(op: &str, params: Value) -> Self {
        let params = match params {
            Value::Object(map) => map.into_iter().collect(),
            _ => BTreeMap::new(),
        };
        Self {
            op: op.to_string(),
            params,
        }
    }
}

fn choose(rng: &mut ChaCha8Rng, n: usize) -> usize {
    let u: f64 = rng.random();
    ((u * n as f64) as usize).min(n - 1)
}

/// Run `policy` over one image with a generator seeded by `image_seed`.
pub fn augment_image(
    img: &ImageBuffer,
    policy: &AugmentationPolicy,
    image_seed: u64,
) -> (ImageBuffer, Vec<AppliedOp>) {
    let mut rng = ChaCha8Rng::seed_from_u64(image_seed);
    let mut current = img.clone();
    let mut applied = Vec::new();

    for step in &policy.steps {
        let gate: f64 = rng.random();
        if gate >= step.prob().get() {
            continue;
        }
        match step {
            PolicyStep::HorizontalFlip { .. } => {
                current = horizontal_flip(&current);
                applied.push(AppliedOp::new("flip", json!({})));
            }
            PolicyStep::Shadow { specs, .. } => {
                let index = choose(&mut rng, specs.len());
                let spec = &specs[index];
                current = apply_shadow(&current, spec);
                applied.push(AppliedOp::new(
                    "shadow",
                    json!({
                        "index": index,
                        "vertices": spec.polygon(),
                        "shadow_factor": spec.shadow_factor,
                    }),
                ));
            }
            PolicyStep::PoleShadow { models, .. } => {
                let index = choose(&mut rng, models.len());
                let model = &models[index];
                current = apply_pole_shadow(&current, model);
                applied.push(AppliedOp::new(
                    "pole_shadow",
                    json!({
                        "index": index,
                        "alpha": model.alpha(),
                        "width_level": model.width_level(),
                        "rotation_deg": model.rotation_deg(),
                        "translation": model.translation(),
                        "shadow_factor": model.shadow_factor(),
                    }),
                ));
            }
            PolicyStep::ReduceBrightness { factor, .. } => {
                current = reduce_brightness(&current, *factor);
                applied.push(AppliedOp::new("reduce_brightness", json!({ "factor": factor })));
            }
            PolicyStep::JitterBrightness { range, .. } => {
                let draw: f64 = rng.random();
                let factor = range.factor_for(draw);
                current = reduce_brightness(&current, factor);
                applied.push(AppliedOp::new(
                    "jitter_brightness",
                    json!({ "draw": draw, "factor": factor }),
                ));
            }
        }
    }
    (current, applied)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub relative_path: String,
    pub class_label: String,
    pub image_seed: u64,
    pub applied_ops: Vec<AppliedOp>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub master_seed: u64,
    /// Absent for a bare scan.
    pub policy: Option<AugmentationPolicy>,
    pub entries: Vec<ManifestEntry>,
    /// Image files that could not be read or decoded.
    pub skipped: Vec<String>,
}

impl DatasetManifest {
    pub fn to_json(&self) -> String {
        crate::to_sorted_json(self)
    }
}

fn is_image_file(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .map(|e| matches!(e.to_ascii_lowercase().as_str(), "png" | "jpg" | "jpeg"))
        .unwrap_or(false)
}

fn sorted_dir(path: &Path) -> Result<Vec<fs::DirEntry>, PipelineError> {
    let mut entries = fs::read_dir(path)
        .map_err(PipelineError::io(path))?
        .collect::<Result<Vec<_>, _>>()
        .map_err(PipelineError::io(path))?;
    entries.sort_by_key(|e| e.file_name());
    Ok(entries)
}

/// `(relative_path, class_label)` pairs, and names that aren't valid UTF-8.
type Candidates = (Vec<(String, String)>, Vec<String>);

fn list_candidates(root: &Path) -> Result<Candidates, PipelineError> {
    let mut found = Vec::new();
    let mut skipped = Vec::new();
    for class_dir in sorted_dir(root)? {
        let class_path = class_dir.path();
        if !class_path.is_dir() {
            continue;
        }
        for file in sorted_dir(&class_path)? {
            let path = file.path();
            if !path.is_file() || !is_image_file(&path) {
                continue;
            }
            match (class_dir.file_name().to_str(), file.file_name().to_str()) {
                (Some(class), Some(name)) => found.push((format!("{class}/{name}"), class.to_string())),
                _ => skipped.push(
                    Path::new(&class_dir.file_name())
                        .join(file.file_name())
                        .to_string_lossy()
                        .into_owned(),
                ),
            }
        }
    }
    found.sort();
    Ok((found, skipped))
}

fn load(root: &Path, relative_path: &str) -> Result<ImageBuffer, PipelineError> {
    let path = root.join(relative_path);
    let bytes = fs::read(&path).map_err(PipelineError::io(&path))?;
    decode_image(&bytes).map_err(|source| PipelineError::Image { path, source })
}

/// List `root/<class>/<image>` files that decode, sorted by relative path.
pub fn scan_dataset(root: &Path) -> Result<DatasetManifest, PipelineError> {
    let (candidates, mut skipped) = list_candidates(root)?;
    let decoded: Vec<_> = candidates
        .into_par_iter()
        .map(|(rel, class)| {
            let ok = load(root, &rel).is_ok();
            (rel, class, ok)
        })
        .collect();

    let mut entries = Vec::with_capacity(decoded.len());
    for (relative_path, class_label, ok) in decoded {
        if ok {
            entries.push(ManifestEntry {
                relative_path,
                class_label,
                image_seed: 0,
                applied_ops: Vec::new(),
            });
        } else {
            skipped.push(relative_path);
        }
    }
    skipped.sort();
    Ok(DatasetManifest {
        master_seed: 0,
        policy: None,
        entries,
        skipped,
    })
}

/// Augment every image under `root` into `out` (PNG, same relative path)
/// and write `out/manifest.json`.
///
/// `workers == 0` uses the default thread count. On an I/O failure the run
/// stops and whatever was already written stays in `out`.
pub fn augment_dataset(
    root: &Path,
    out: &Path,
    policy: &AugmentationPolicy,
    workers: usize,
) -> Result<DatasetManifest, PipelineError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| PipelineError::Workers(e.to_string()))?;
    fs::create_dir_all(out).map_err(PipelineError::io(out))?;

    let (candidates, mut skipped) = list_candidates(root)?;
    let results: Vec<Result<Result<ManifestEntry, String>, PipelineError>> = pool.install(|| {
        candidates
            .into_par_iter()
            .map(|(relative_path, class_label)| {
                let img = match load(root, &relative_path) {
                    Ok(img) => img,
                    Err(PipelineError::Image { .. }) => return Ok(Err(relative_path)),
                    Err(e) => return Err(e),
                };
                let image_seed = derive_image_seed(policy.master_seed, &relative_path);
                let (augmented, applied_ops) = augment_image(&img, policy, image_seed);
                let target = out.join(&relative_path);
                if let Some(parent) = target.parent() {
                    fs::create_dir_all(parent).map_err(PipelineError::io(parent))?;
                }
                let bytes = encode_image(&augmented, EncodeFormat::Png).map_err(|source| {
                    PipelineError::Image {
                        path: target.clone(),
                        source,
                    }
                })?;
                fs::write(&target, bytes).map_err(PipelineError::io(&target))?;
                Ok(Ok(ManifestEntry {
                    relative_path,
                    class_label,
                    image_seed,
                    applied_ops,
                }))
            })
            .collect()
    });

    let mut entries = Vec::with_capacity(results.len());
    for r in results {
        match r? {
            Ok(entry) => entries.push(entry),
            Err(undecodable) => skipped.push(undecodable),
        }
    }
    skipped.sort();
    entries.sort_by(|a, b| a.relative_path.cmp(&b.relative_path));

    let manifest = DatasetManifest {
        master_seed: policy.master_seed,
        policy: Some(policy.clone()),
        entries,
        skipped,
    };
    let manifest_path = out.join("manifest.json");
    fs::write(&manifest_path, manifest.to_json()).map_err(PipelineError::io(&manifest_path))?;
    Ok(manifest)
}

/// SHA-256 over every regular file under `dir`: sorted `/`-joined relative
/// path, byte length, then contents. Hex encoded.
pub fn tree_hash(dir: &Path) -> Result<String, PipelineError> {
    fn walk(base: &Path, dir: &Path, files: &mut Vec<(String, PathBuf)>) -> Result<(), PipelineError> {
        for entry in sorted_dir(dir)? {
            let path = entry.path();
            if path.is_dir() {
                walk(base, &path, files)?;
            } else {
                let rel = path
                    .strip_prefix(base)
                    .expect("walk stays under base")
                    .components()
                    .map(|c| c.as_os_str().to_string_lossy().into_owned())
                    .collect::<Vec<_>>()
                    .join("/");
                files.push((rel, path));
            }
        }
        Ok(())
    }
    let mut files = Vec::new();
    walk(dir, dir, &mut files)?;
    files.sort();
    let mut hasher = Sha256::new();
    for (rel, path) in files {
        let bytes = fs::read(&path).map_err(PipelineError::io(&path))?;
        hasher.update(rel.as_bytes());
        hasher.update([0]);
        hasher.update((bytes.len() as u64).to_le_bytes());
        hasher.update(&bytes);
    }
    Ok(hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect())
}
