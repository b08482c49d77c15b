//! Python bindings: `import shadowforge`.
//!
//! Polygons cross the boundary as lists of `(x, y)` tuples in normalized
//! coordinates; policies and applied-op logs as JSON strings.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyBytes, PyDict};

use shadowforge_core::breakdown::{AccuracyCurve, BreakdownConfig, BreakdownResult};
use shadowforge_core::photometric::BrightnessJitterRange;
use shadowforge_core::shadow::{Point, PoleShadowModel, ShadowFactor, ShadowPolygon, ShadowSpec};
use shadowforge_core::{self as core, AugmentationPolicy, EncodeFormat, ImageBuffer, PredictionRecord};

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn polygon(vertices: Vec<(f64, f64)>) -> PyResult<ShadowPolygon> {
    let pts: Vec<Point> = vertices.into_iter().map(|(x, y)| Point::new(x, y)).collect();
    ShadowPolygon::from_slice(&pts).map_err(value_error)
}

fn coords(poly: &ShadowPolygon) -> Vec<(f64, f64)> {
    poly.vertices().iter().map(|p| (p.x, p.y)).collect()
}

fn factor(value: f64) -> PyResult<ShadowFactor> {
    ShadowFactor::new(value).map_err(value_error)
}

fn pole(alpha: f64, width_level: f64, rotation_deg: f64, translation: f64) -> PyResult<PoleShadowModel> {
    PoleShadowModel::new(alpha, width_level, rotation_deg, translation).map_err(value_error)
}

/// Packed 8-bit RGB image, row-major.
#[pyclass(name = "Image", module = "shadowforge", frozen, eq, skip_from_py_object)]
#[derive(Clone, PartialEq)]
pub struct PyImage(ImageBuffer);

#[pymethods]
impl PyImage {
    /// `data` holds `width * height * 3` bytes.
    #[new]
    fn new(width: u32, height: u32, data: &[u8]) -> PyResult<Self> {
        ImageBuffer::new(width, height, data.to_vec()).map(Self).map_err(value_error)
    }

    #[staticmethod]
    fn filled(width: u32, height: u32, rgb: (u8, u8, u8)) -> PyResult<Self> {
        ImageBuffer::filled(width, height, [rgb.0, rgb.1, rgb.2])
            .map(Self)
            .map_err(value_error)
    }

    /// PNG or JPEG bytes; alpha is composited over black.
    #[staticmethod]
    fn decode(data: &[u8]) -> PyResult<Self> {
        core::decode_image(data).map(Self).map_err(value_error)
    }

    fn encode_png<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyBytes>> {
        let bytes = core::encode_image(&self.0, EncodeFormat::Png).map_err(value_error)?;
        Ok(PyBytes::new(py, &bytes))
    }

    fn to_bytes<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, self.0.as_bytes())
    }

    #[getter]
    fn width(&self) -> u32 {
        self.0.width()
    }

    #[getter]
    fn height(&self) -> u32 {
        self.0.height()
    }

    fn pixel(&self, x: u32, y: u32) -> PyResult<(u8, u8, u8)> {
        let [r, g, b] = self
            .0
            .get(x, y)
            .ok_or_else(|| value_error(format!("({x}, {y}) is outside the image")))?;
        Ok((r, g, b))
    }

    fn __repr__(&self) -> String {
        format!("Image({}x{})", self.0.width(), self.0.height())
    }
}

#[pyfunction]
fn horizontal_flip(img: &PyImage) -> PyImage {
    PyImage(core::horizontal_flip(&img.0))
}

#[pyfunction]
fn apply_shadow(img: &PyImage, vertices: Vec<(f64, f64)>, shadow_factor: f64) -> PyResult<PyImage> {
    let spec = ShadowSpec::new(polygon(vertices)?, factor(shadow_factor)?);
    Ok(PyImage(core::apply_shadow(&img.0, &spec)))
}

/// Row-major membership flags of the pixels whose centers fall inside.
#[pyfunction]
fn rasterize_polygon(vertices: Vec<(f64, f64)>, width: u32, height: u32) -> PyResult<Vec<bool>> {
    if width == 0 || height == 0 {
        return Err(value_error("raster must be non-empty"));
    }
    Ok(core::rasterize_polygon(&polygon(vertices)?, width, height).bits().to_vec())
}

#[pyfunction]
fn preset_polygons() -> Vec<Vec<(f64, f64)>> {
    core::preset_polygons().iter().map(coords).collect()
}

/// `(vertices, shadow_factor)` of the occluder band.
#[pyfunction]
#[pyo3(signature = (alpha, width_level, rotation_deg = 0.0, translation = 0.0))]
fn pole_to_polygon(
    alpha: f64,
    width_level: f64,
    rotation_deg: f64,
    translation: f64,
) -> PyResult<(Vec<(f64, f64)>, f64)> {
    let spec = core::pole_to_polygon(&pole(alpha, width_level, rotation_deg, translation)?);
    Ok((coords(spec.polygon()), spec.shadow_factor.get()))
}

#[pyfunction]
#[pyo3(signature = (img, alpha, width_level, rotation_deg = 0.0, translation = 0.0))]
fn apply_pole_shadow(
    img: &PyImage,
    alpha: f64,
    width_level: f64,
    rotation_deg: f64,
    translation: f64,
) -> PyResult<PyImage> {
    let model = pole(alpha, width_level, rotation_deg, translation)?;
    Ok(PyImage(core::apply_pole_shadow(&img.0, &model)))
}

#[pyfunction]
fn reduce_brightness(img: &PyImage, factor_value: f64) -> PyResult<PyImage> {
    Ok(PyImage(core::reduce_brightness(&img.0, factor(factor_value)?)))
}

/// Scale by `low + draw * (high - low)`.
#[pyfunction]
fn jitter_brightness(img: &PyImage, low: f64, high: f64, draw: f64) -> PyResult<PyImage> {
    let range = BrightnessJitterRange::new(low, high).map_err(value_error)?;
    if !(0.0..=1.0).contains(&draw) {
        return Err(value_error(format!("draw must be in [0, 1], got {draw}")));
    }
    Ok(PyImage(core::jitter_brightness(&img.0, &range, draw)))
}

#[pyfunction]
fn derive_image_seed(master_seed: u64, relative_path: &str) -> u64 {
    core::derive_image_seed(master_seed, relative_path)
}

/// Policy JSON of a named preset.
#[pyfunction]
#[pyo3(signature = (name, master_seed = 0))]
fn preset_policy(name: &str, master_seed: u64) -> PyResult<String> {
    AugmentationPolicy::preset(name, master_seed)
        .map(|p| core::to_sorted_json(&p))
        .ok_or_else(|| value_error(format!("unknown preset {name:?}")))
}

/// Returns the augmented image and the applied-op log as JSON.
#[pyfunction]
fn augment_image(img: &PyImage, policy_json: &str, image_seed: u64) -> PyResult<(PyImage, String)> {
    let policy = AugmentationPolicy::from_json(policy_json).map_err(value_error)?;
    let (out, ops) = core::augment_image(&img.0, &policy, image_seed);
    Ok((PyImage(out), core::to_sorted_json(&ops)))
}

#[pyfunction]
fn top1_accuracy(true_labels: Vec<String>, predicted_labels: Vec<String>) -> PyResult<f64> {
    if true_labels.len() != predicted_labels.len() {
        return Err(value_error("label lists differ in length"));
    }
    let records: Vec<_> = true_labels
        .into_iter()
        .zip(predicted_labels)
        .enumerate()
        .map(|(i, (t, p))| PredictionRecord::new(i.to_string(), t, p))
        .collect();
    core::top1_accuracy(&records).map_err(value_error)
}

/// `(value, display)`, e.g. `(8.18..., "+8.2%")`.
#[pyfunction]
fn percent_change(baseline: f64, variant: f64) -> PyResult<(f64, String)> {
    let change = core::percent_change(baseline, variant).map_err(value_error)?;
    Ok((change.value(), change.to_string()))
}

fn result_dict<'py>(py: Python<'py>, r: &BreakdownResult) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("negative", r.negative)?;
    d.set_item("negative_triggered", r.negative_triggered)?;
    d.set_item("positive", r.positive)?;
    d.set_item("positive_triggered", r.positive_triggered)?;
    Ok(d)
}

/// `accuracies` covers -90..=90 degrees in 5 degree steps (37 values).
#[pyfunction]
#[pyo3(signature = (accuracies, accuracy_floor = 0.60, drop_threshold = 0.15))]
fn detect_breakdown<'py>(
    py: Python<'py>,
    accuracies: Vec<f64>,
    accuracy_floor: f64,
    drop_threshold: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let curve = AccuracyCurve::new(&accuracies).map_err(value_error)?;
    let cfg = BreakdownConfig::new(accuracy_floor, drop_threshold).map_err(value_error)?;
    result_dict(py, &core::detect_breakdown(&curve, &cfg))
}

/// Mean `(positive, negative)` over `(positive, negative)` angle pairs.
#[pyfunction]
fn average_breakdowns(points: Vec<(i32, i32)>) -> PyResult<(f64, f64)> {
    let results: Vec<_> = points
        .into_iter()
        .map(|(positive, negative)| BreakdownResult {
            positive,
            negative,
            ..BreakdownResult::NONE
        })
        .collect();
    core::average_breakdowns(&results).ok_or_else(|| value_error("no breakdown results"))
}

#[pymodule]
fn shadowforge(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyImage>()?;
    m.add_function(wrap_pyfunction!(horizontal_flip, m)?)?;
    m.add_function(wrap_pyfunction!(apply_shadow, m)?)?;
    m.add_function(wrap_pyfunction!(rasterize_polygon, m)?)?;
    m.add_function(wrap_pyfunction!(preset_polygons, m)?)?;
    m.add_function(wrap_pyfunction!(pole_to_polygon, m)?)?;
    m.add_function(wrap_pyfunction!(apply_pole_shadow, m)?)?;
    m.add_function(wrap_pyfunction!(reduce_brightness, m)?)?;
    m.add_function(wrap_pyfunction!(jitter_brightness, m)?)?;
    m.add_function(wrap_pyfunction!(derive_image_seed, m)?)?;
    m.add_function(wrap_pyfunction!(preset_policy, m)?)?;
    m.add_function(wrap_pyfunction!(augment_image, m)?)?;
    m.add_function(wrap_pyfunction!(top1_accuracy, m)?)?;
    m.add_function(wrap_pyfunction!(percent_change, m)?)?;
    m.add_function(wrap_pyfunction!(detect_breakdown, m)?)?;
    m.add_function(wrap_pyfunction!(average_breakdowns, m)?)?;
    Ok(())
}
