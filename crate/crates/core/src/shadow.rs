//! Polygonal shadow synthesis.
//!
//! A shadow is a 4-vertex region in normalized image coordinates
//! (`(0,0)` top-left, `(1,1)` bottom-right) whose pixels are scaled by a
//! shadow factor. A pixel belongs to the region when its center lies inside
//! the polygon under the even-odd rule; centers exactly on an edge count as
//! inside. There is no anti-aliasing.
//!
//! Shadows can also be generated from a [`PoleShadowModel`], a 2D stand-in
//! for a thin occluder between the light and the scene: the cast shadow is a
//! straight band whose width follows the occluder width and whose
//! transmittance is `1 - alpha`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::raster::ImageBuffer;

#[derive(Debug, Error, PartialEq)]
pub enum ShadowError {
    #[error("shadow factor {0} outside (0, 1]")]
    Factor(f64),
    #[error("polygon needs exactly 4 vertices, got {0}")]
    VertexCount(usize),
    #[error("polygon vertex {0} is not finite")]
    NonFinite(usize),
    #[error("polygon is self-intersecting")]
    SelfIntersecting,
    #[error("pole alpha {0} outside (0, 1)")]
    Alpha(f64),
    #[error("pole width level {0} outside (0, 0.5]")]
    WidthLevel(f64),
    #[error("pole translation {0} outside [-1, 1]")]
    Translation(f64),
    #[error("pole rotation {0} is not finite")]
    Rotation(f64),
}

/// Multiplicative darkening factor in `(0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct ShadowFactor(f64);

impl ShadowFactor {
    pub const IDENTITY: ShadowFactor = ShadowFactor(1.0);

    pub fn new(value: f64) -> Result<Self, ShadowError> {
        if value > 0.0 && value <= 1.0 {
            Ok(Self(value))
        } else {
            Err(ShadowError::Factor(value))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for ShadowFactor {
    type Error = ShadowError;

    fn try_from(value: f64) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl From<ShadowFactor> for f64 {
    fn from(f: ShadowFactor) -> f64 {
        f.0
    }
}

/// `round_half_away_from_zero(c * factor)`, clamped to the channel range.
#[inline]
pub(crate) fn scale_channel(c: u8, factor: f64) -> u8 {
    (c as f64 * factor).round().clamp(0.0, 255.0) as u8
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

impl From<[f64; 2]> for Point {
    fn from([x, y]: [f64; 2]) -> Self {
        Self { x, y }
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

/// Simple quadrilateral in normalized image coordinates.
///
/// Components are clamped into `[0, 1]` on construction. Zero-area
/// (collinear or collapsed) quads are accepted and rasterize to an empty
/// region; quads whose opposite edges properly cross are rejected.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(into = "Vec<Point>")]
pub struct ShadowPolygon {
    vertices: [Point; 4],
}

impl ShadowPolygon {
    pub fn new(vertices: [Point; 4]) -> Result<Self, ShadowError> {
        let mut clamped = vertices;
        for (i, v) in clamped.iter_mut().enumerate() {
            if !v.x.is_finite() || !v.y.is_finite() {
                return Err(ShadowError::NonFinite(i));
            }
            v.x = v.x.clamp(0.0, 1.0);
            v.y = v.y.clamp(0.0, 1.0);
        }
        let [a, b, c, d] = clamped;
        if segments_cross(a, b, c, d) || segments_cross(b, c, d, a) {
            return Err(ShadowError::SelfIntersecting);
        }
        Ok(Self { vertices: clamped })
    }

    pub fn from_slice(vertices: &[Point]) -> Result<Self, ShadowError> {
        let arr: [Point; 4] = vertices
            .try_into()
            .map_err(|_| ShadowError::VertexCount(vertices.len()))?;
        Self::new(arr)
    }

    pub fn from_coords(coords: [[f64; 2]; 4]) -> Result<Self, ShadowError> {
        Self::new(coords.map(Point::from))
    }

    /// The whole image.
    pub fn full_frame() -> Self {
        Self {
            vertices: [
                Point::new(0.0, 0.0),
                Point::new(1.0, 0.0),
                Point::new(1.0, 1.0),
                Point::new(0.0, 1.0),
            ],
        }
    }

    pub fn vertices(&self) -> &[Point; 4] {
        &self.vertices
    }

    /// Shoelace area in normalized units.
    pub fn area(&self) -> f64 {
        let v = &self.vertices;
        let twice: f64 = (0..4)
            .map(|i| {
                let j = (i + 1) % 4;
                v[i].x * v[j].y - v[j].x * v[i].y
            })
            .sum();
        twice.abs() / 2.0
    }
}

impl From<ShadowPolygon> for Vec<Point> {
    fn from(p: ShadowPolygon) -> Self {
        p.vertices.to_vec()
    }
}

impl<'de> Deserialize<'de> for ShadowPolygon {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let pts = Vec::<Point>::deserialize(d)?;
        ShadowPolygon::from_slice(&pts).map_err(serde::de::Error::custom)
    }
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

/// Distance, in normalized units, within which a pixel center counts as lying
/// on a polygon edge. Centers such as `1.5 / 10` and vertices such as `0.4`
/// are not exactly representable, so an exact zero test would make
/// grid-aligned edges hit or miss centers at random.
pub const EDGE_TOLERANCE: f64 = 1e-12;

/// `c` within [`EDGE_TOLERANCE`] of the line through `a` and `b` (`a != b`).
fn near_line(a: Point, b: Point, c: Point) -> bool {
    let len = (b.x - a.x).hypot(b.y - a.y);
    len > 0.0 && orient(a, b, c).abs() <= EDGE_TOLERANCE * len
}

/// Proper crossing only; touching and collinear overlap don't count.
fn segments_cross(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
}

/// Polygon plus darkening factor; JSON form is
/// `{"vertices": [[x, y], ...], "shadow_factor": f}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShadowSpec {
    pub vertices: ShadowPolygon,
    pub shadow_factor: ShadowFactor,
}

impl ShadowSpec {
    pub fn new(polygon: ShadowPolygon, shadow_factor: ShadowFactor) -> Self {
        Self {
            vertices: polygon,
            shadow_factor,
        }
    }

    pub fn polygon(&self) -> &ShadowPolygon {
        &self.vertices
    }
}

/// Per-pixel membership of a rasterized region.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionMask {
    width: u32,
    height: u32,
    bits: Vec<bool>,
}

impl RegionMask {
    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn contains(&self, x: u32, y: u32) -> bool {
        x < self.width && y < self.height && self.bits[y as usize * self.width as usize + x as usize]
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }
}

#[inline]
fn pixel_center(i: u32, extent: u32) -> f64 {
    (i as f64 + 0.5) / extent as f64
}

/// First index whose pixel center is `>= bound`.
fn first_center_at_or_after(bound: f64, extent: u32) -> u32 {
    // the estimate can be off by one either way from rounding; settle exactly
    let mut i = ((bound * extent as f64 - 0.5).floor().max(0.0) as u64).min(extent as u64) as u32;
    while i > 0 && pixel_center(i - 1, extent) >= bound {
        i -= 1;
    }
    while i < extent && pixel_center(i, extent) < bound {
        i += 1;
    }
    i
}

/// Scanline rasterization of `poly` onto a `width` x `height` grid.
///
/// Zero-area polygons give an empty mask, even where a collapsed edge runs
/// through pixel centers.
///
/// Interior parity comes from sorted edge crossings per row (half-open
/// vertical rule, so shared vertices are counted once); boundary pixels are
/// added by an on-segment test, within [`EDGE_TOLERANCE`], against each edge
/// that spans the row.
pub fn rasterize_polygon(poly: &ShadowPolygon, width: u32, height: u32) -> RegionMask {
    assert!(width > 0 && height > 0, "raster must be non-empty");
    let w = width as usize;
    let mut bits = vec![false; w * height as usize];
    if poly.area() == 0.0 {
        return RegionMask {
            width,
            height,
            bits,
        };
    }
    let v = poly.vertices;
    let mut crossings: Vec<f64> = Vec::with_capacity(4);

    for py in 0..height {
        let cy = pixel_center(py, height);
        let row = &mut bits[py as usize * w..(py as usize + 1) * w];

        crossings.clear();
        for i in 0..4 {
            let (a, b) = (v[i], v[(i + 3) % 4]);
            if (a.y > cy) != (b.y > cy) {
                crossings.push((b.x - a.x) * (cy - a.y) / (b.y - a.y) + a.x);
            }
        }
        crossings.sort_by(f64::total_cmp);
        for span in crossings.chunks_exact(2) {
            // inside when span[0] <= cx < span[1]
            let start = first_center_at_or_after(span[0], width);
            let end = first_center_at_or_after(span[1], width);
            for cell in &mut row[start as usize..end.max(start) as usize] {
                *cell = true;
            }
        }

        for i in 0..4 {
            let (a, b) = (v[i], v[(i + 1) % 4]);
            if cy < a.y.min(b.y) - EDGE_TOLERANCE || cy > a.y.max(b.y) + EDGE_TOLERANCE {
                continue;
            }
            let start = first_center_at_or_after(a.x.min(b.x) - EDGE_TOLERANCE, width);
            let hi = a.x.max(b.x) + EDGE_TOLERANCE;
            let mut px = start;
            while px < width {
                let cx = pixel_center(px, width);
                if cx > hi {
                    break;
                }
                if near_line(a, b, Point::new(cx, cy)) {
                    row[px as usize] = true;
                }
                px += 1;
            }
        }
    }

    RegionMask {
        width,
        height,
        bits,
    }
}

/// Scale every channel of the pixels inside `mask` by `factor`.
pub fn apply_mask(img: &ImageBuffer, mask: &RegionMask, factor: ShadowFactor) -> ImageBuffer {
    assert_eq!(
        (mask.width, mask.height),
        (img.width(), img.height()),
        "mask dimensions must match the image"
    );
    let mut out = img.clone();
    if factor.get() == 1.0 {
        return out;
    }
    for (px, &inside) in out.pixels_mut().zip(&mask.bits) {
        if inside {
            for c in px {
                *c = scale_channel(*c, factor.get());
            }
        }
    }
    out
}

pub fn apply_shadow(img: &ImageBuffer, spec: &ShadowSpec) -> ImageBuffer {
    let mask = rasterize_polygon(spec.polygon(), img.width(), img.height());
    apply_mask(img, &mask, spec.shadow_factor)
}

/// The four stock shadow regions: two axis-aligned bands and two diagonal
/// wedges.
///
/// | # | shape            | vertices (clockwise)                          |
/// |---|------------------|-----------------------------------------------|
/// | 1 | left band        | (0,0) (0.45,0) (0.45,1) (0,1)                 |
/// | 2 | bottom band      | (0,0.55) (1,0.55) (1,1) (0,1)                 |
/// | 3 | upper diagonal   | (0,0) (1,0) (1,0.35) (0,0.75)                 |
/// | 4 | lower diagonal   | (0,0.25) (1,0.65) (1,1) (0,1)                 |
pub fn preset_polygons() -> [ShadowPolygon; 4] {
    const PRESETS: [[[f64; 2]; 4]; 4] = [
        [[0.00, 0.00], [0.45, 0.00], [0.45, 1.00], [0.00, 1.00]],
        [[0.00, 0.55], [1.00, 0.55], [1.00, 1.00], [0.00, 1.00]],
        [[0.00, 0.00], [1.00, 0.00], [1.00, 0.35], [0.00, 0.75]],
        [[0.00, 0.25], [1.00, 0.65], [1.00, 1.00], [0.00, 1.00]],
    ];
    PRESETS.map(|c| ShadowPolygon::from_coords(c).expect("preset polygons are simple"))
}

/// Preset polygons paired with one shadow factor.
pub fn preset_specs(factor: ShadowFactor) -> Vec<ShadowSpec> {
    preset_polygons()
        .into_iter()
        .map(|p| ShadowSpec::new(p, factor))
        .collect()
}

/// Occluder opacity levels, light to heavy.
pub const ALPHA_LEVELS: [f64; 4] = [0.2, 0.4, 0.6, 0.8];
/// Occluder width levels, narrow to wide.
pub const WIDTH_LEVELS: [f64; 3] = [0.05, 0.10, 0.15];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PoleFields", into = "PoleFields")]
pub struct PoleShadowModel {
    alpha: f64,
    width_level: f64,
    rotation_deg: f64,
    translation: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PoleFields {
    alpha: f64,
    width_level: f64,
    #[serde(default)]
    rotation_deg: f64,
    #[serde(default)]
    translation: f64,
}

impl TryFrom<PoleFields> for PoleShadowModel {
    type Error = ShadowError;

    fn try_from(f: PoleFields) -> Result<Self, Self::Error> {
        PoleShadowModel::new(f.alpha, f.width_level, f.rotation_deg, f.translation)
    }
}

impl From<PoleShadowModel> for PoleFields {
    fn from(m: PoleShadowModel) -> Self {
        PoleFields {
            alpha: m.alpha,
            width_level: m.width_level,
            rotation_deg: m.rotation_deg,
            translation: m.translation,
        }
    }
}

impl PoleShadowModel {
    /// * `alpha` - occluder opacity in `(0, 1)`; higher is darker.
    /// * `width_level` - band half-width as a fraction of the image diagonal, `(0, 0.5]`.
    /// * `rotation_deg` - band axis relative to the image vertical.
    /// * `translation` - signed offset of the band center from the image
    ///   center, as a fraction of image width, `[-1, 1]`.
    pub fn new(
        alpha: f64,
        width_level: f64,
        rotation_deg: f64,
        translation: f64,
    ) -> Result<Self, ShadowError> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(ShadowError::Alpha(alpha));
        }
        if !(width_level > 0.0 && width_level <= 0.5) {
            return Err(ShadowError::WidthLevel(width_level));
        }
        if !rotation_deg.is_finite() {
            return Err(ShadowError::Rotation(rotation_deg));
        }
        if !(-1.0..=1.0).contains(&translation) {
            return Err(ShadowError::Translation(translation));
        }
        Ok(Self {
            alpha,
            width_level,
            rotation_deg,
            translation,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn width_level(&self) -> f64 {
        self.width_level
    }

    pub fn rotation_deg(&self) -> f64 {
        self.rotation_deg
    }

    pub fn translation(&self) -> f64 {
        self.translation
    }

    pub fn shadow_factor(&self) -> ShadowFactor {
        ShadowFactor::new(1.0 - self.alpha).expect("alpha in (0,1)")
    }
}

/// `(sin, cos)` of an angle in degrees, exact on multiples of 90.
fn sin_cos_deg(deg: f64) -> (f64, f64) {
    let r = deg.rem_euclid(360.0);
    if r == 0.0 {
        (0.0, 1.0)
    } else if r == 90.0 {
        (1.0, 0.0)
    } else if r == 180.0 {
        (0.0, -1.0)
    } else if r == 270.0 {
        (-1.0, 0.0)
    } else {
        r.to_radians().sin_cos()
    }
}

/// Project the occluder model to a quad shadow.
///
/// The band is `{p : dist(p, axis) <= width_level * sqrt(2)}` with the axis
/// through `(0.5 + translation / 2, 0.5)`. Its two boundary lines are cut at
/// the pair of opposite image borders the axis runs between (top/bottom when
/// within 45 degrees of vertical, left/right otherwise) and the four cut
/// points are clamped into the unit square. A band that misses the image
/// collapses onto a border and rasterizes to nothing.
pub fn pole_to_polygon(model: &PoleShadowModel) -> ShadowSpec {
    let (s, c) = sin_cos_deg(model.rotation_deg);
    let dir = Point::new(s, c);
    let normal = Point::new(c, -s);
    let center = Point::new(0.5 + model.translation * 0.5, 0.5);
    let half_width = model.width_level * std::f64::consts::SQRT_2;

    let boundary = |offset: f64| {
        Point::new(
            center.x + offset * normal.x,
            center.y + offset * normal.y,
        )
    };
    let (lo, hi) = (boundary(-half_width), boundary(half_width));

    let vertices = if c.abs() >= s.abs() {
        let at_y = |base: Point, y: f64| {
            let t = (y - base.y) / dir.y;
            Point::new(base.x + t * dir.x, y)
        };
        [at_y(lo, 0.0), at_y(hi, 0.0), at_y(hi, 1.0), at_y(lo, 1.0)]
    } else {
        let at_x = |base: Point, x: f64| {
            let t = (x - base.x) / dir.x;
            Point::new(x, base.y + t * dir.y)
        };
        [at_x(lo, 0.0), at_x(lo, 1.0), at_x(hi, 1.0), at_x(hi, 0.0)]
    };

    let polygon =
        ShadowPolygon::new(vertices).expect("parallel band boundaries never cross");
    ShadowSpec::new(polygon, model.shadow_factor())
}

pub fn apply_pole_shadow(img: &ImageBuffer, model: &PoleShadowModel) -> ImageBuffer {
    apply_shadow(img, &pole_to_polygon(model))
}
