//! Shadow augmentation and robustness evaluation for image classifiers.
//!
//! * [`raster`] - RGB buffers, PNG/JPEG codecs, horizontal flip
//! * [`shadow`] - polygon rasterization, shadow compositing, occluder model
//! * [`photometric`] - whole-frame brightness baselines
//! * [`pipeline`] - seeded, order-independent dataset augmentation
//! * [`metrics`] - top-1 accuracy and percent change
//! * [`breakdown`] - accuracy-vs-pose curves and breakdown points
//! * [`chart`] - SVG rendering of breakdown curves

pub mod breakdown;
pub mod chart;
pub mod metrics;
pub mod photometric;
pub mod pipeline;
pub mod raster;
pub mod shadow;

pub use breakdown::{
    average_breakdowns, curve_from_predictions, detect_breakdown, AccuracyCurve, BreakdownConfig,
    BreakdownResult,
};
pub use metrics::{grouped_accuracy, percent_change, top1_accuracy, AccuracyReport, PredictionRecord};
pub use photometric::{jitter_brightness, reduce_brightness, BrightnessJitterRange};
pub use pipeline::{
    augment_dataset, augment_image, derive_image_seed, scan_dataset, AugmentationPolicy, DatasetManifest,
};
pub use raster::{decode_image, encode_image, horizontal_flip, EncodeFormat, ImageBuffer, PixelCoord};
pub use shadow::{
    apply_pole_shadow, apply_shadow, pole_to_polygon, preset_polygons, rasterize_polygon, PoleShadowModel,
    RegionMask, ShadowFactor, ShadowPolygon, ShadowSpec,
};

/// Pretty JSON with object keys sorted at every level, newline-terminated.
pub fn to_sorted_json<T: serde::Serialize + ?Sized>(value: &T) -> String {
    // serde_json::Value keeps objects in a BTreeMap, which sorts the keys
    let value = serde_json::to_value(value).expect("in-memory values serialize");
    let mut text = serde_json::to_string_pretty(&value).expect("Value always serializes");
    text.push('\n');
    text
}
