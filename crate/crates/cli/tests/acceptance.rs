//! Acceptance checks, one PASS/FAIL line each. Tolerances and time limits
//! are fixed here; run with `cargo test --test acceptance`.

use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use shadowforge_core::breakdown::GRID_LEN;
use shadowforge_core::pipeline::{tree_hash, PolicyStep, Probability};
use shadowforge_core::shadow::{preset_specs, Point, ALPHA_LEVELS, WIDTH_LEVELS};
use shadowforge_core::{
    apply_pole_shadow, apply_shadow, detect_breakdown, encode_image, percent_change, pole_to_polygon,
    rasterize_polygon, reduce_brightness, to_sorted_json, AccuracyCurve, AugmentationPolicy,
    BreakdownConfig, BreakdownResult, EncodeFormat, ImageBuffer, PoleShadowModel, ShadowFactor,
    ShadowPolygon, ShadowSpec,
};
use tempfile::TempDir;

const PERCENT_TOLERANCE: f64 = 0.05;
const RATE_BAND: (f64, f64) = (0.48, 0.52);
const ALGEBRA_CASES: usize = 1000;
const BREAKDOWN_CURVES: usize = 1000;

struct Outcome {
    passed: bool,
    detail: String,
}

fn pass(detail: impl Into<String>) -> Outcome {
    Outcome {
        passed: true,
        detail: detail.into(),
    }
}

fn fail(detail: impl Into<String>) -> Outcome {
    Outcome {
        passed: false,
        detail: detail.into(),
    }
}

/// Run `check` and fail it if it exceeds `limit`.
fn timed(limit: Option<Duration>, check: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let mut out = check();
    let took = start.elapsed();
    out.detail = format!("{} [{:.2}s]", out.detail, took.as_secs_f64());
    if let Some(limit) = limit {
        if took > limit {
            out.passed = false;
            out.detail.push_str(&format!(" exceeded {}s", limit.as_secs()));
        }
    }
    out
}

fn random_image(rng: &mut ChaCha8Rng, w: u32, h: u32) -> ImageBuffer {
    let bytes = (0..w * h * 3).map(|_| rng.random()).collect();
    ImageBuffer::new(w, h, bytes).unwrap()
}

fn random_polygon(rng: &mut ChaCha8Rng) -> ShadowPolygon {
    loop {
        let pts: [Point; 4] =
            std::array::from_fn(|_| Point::new(rng.random_range(-0.1..1.1), rng.random_range(-0.1..1.1)));
        if let Ok(p) = ShadowPolygon::new(pts) {
            if p.area() > 0.0 {
                return p;
            }
        }
    }
}

// 1 ---------------------------------------------------------------------

const PUBLISHED: [(f64, f64, f64); 12] = [
    (0.665, 0.672, 1.1),
    (0.440, 0.476, 8.2),
    (0.304, 0.332, 9.2),
    (0.696, 0.701, 0.7),
    (0.436, 0.477, 9.4),
    (0.377, 0.478, 26.8),
    (0.695, 0.704, 1.3),
    (0.393, 0.463, 17.8),
    (0.532, 0.590, 10.9),
    (0.961, 0.964, 0.31),
    (0.281, 0.308, 9.6),
    (0.264, 0.291, 10.2),
];

fn percent_regression() -> Outcome {
    let mut worst: f64 = 0.0;
    for (base, variant, printed) in PUBLISHED {
        let got = match percent_change(base, variant) {
            Ok(c) => c.value(),
            Err(e) => return fail(format!("{base} -> {variant}: {e}")),
        };
        let err = (got - printed).abs();
        worst = worst.max(err);
        if err > PERCENT_TOLERANCE {
            return fail(format!("{base} -> {variant}: {got:.4} vs printed {printed}"));
        }
    }
    pass(format!("{} deltas, worst error {worst:.4} pp", PUBLISHED.len()))
}

// 2 ---------------------------------------------------------------------

/// Even-odd ray cast from each pixel center; centers within `EDGE_TOL`
/// of an edge count as inside.
fn brute_force(poly: &ShadowPolygon, w: u32, h: u32) -> Vec<bool> {
    const EDGE_TOL: f64 = 1e-12;
    let v = poly.vertices().map(|p| (p.x, p.y));
    let mut out = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let (px, py) = ((x as f64 + 0.5) / w as f64, (y as f64 + 0.5) / h as f64);
            let mut inside = false;
            let mut on_edge = false;
            for i in 0..4 {
                let ((xi, yi), (xj, yj)) = (v[i], v[(i + 3) % 4]);
                if (yi > py) != (yj > py) && px < (xj - xi) * (py - yi) / (yj - yi) + xi {
                    inside = !inside;
                }
                let len = (xj - xi).hypot(yj - yi);
                let cross = (xj - xi) * (py - yi) - (yj - yi) * (px - xi);
                on_edge |= len > 0.0
                    && cross.abs() / len <= EDGE_TOL
                    && (xi.min(xj) - EDGE_TOL..=xi.max(xj) + EDGE_TOL).contains(&px)
                    && (yi.min(yj) - EDGE_TOL..=yi.max(yj) + EDGE_TOL).contains(&py);
            }
            out.push(inside || on_edge);
        }
    }
    out
}

fn rasterizer_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let sizes = std::iter::repeat_n(64, 100).chain(std::iter::repeat_n(128, 10));
    let mut count = 0;
    for size in sizes {
        let poly = random_polygon(&mut rng);
        let expected = brute_force(&poly, size, size);
        if rasterize_polygon(&poly, size, size).bits() != expected.as_slice() {
            return fail(format!("mismatch at {size}x{size} for {:?}", poly.vertices()));
        }
        count += 1;
    }
    pass(format!("{count} random quads bit-exact (100 at 64x64, 10 at 128x128)"))
}

// 3 ---------------------------------------------------------------------

fn shadow_algebra() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for case in 0..ALGEBRA_CASES {
        let (w, h) = (rng.random_range(1..=24), rng.random_range(1..=24));
        let img = random_image(&mut rng, w, h);
        let poly = random_polygon(&mut rng);
        let mut f1: f64 = rng.random_range(0.01..=1.0);
        let mut f2: f64 = rng.random_range(0.01..=1.0);
        if f1 > f2 {
            std::mem::swap(&mut f1, &mut f2);
        }
        let spec = |f: f64| ShadowSpec::new(poly, ShadowFactor::new(f).unwrap());

        if apply_shadow(&img, &spec(1.0)) != img {
            return fail(format!("case {case}: s.f. 1 changed the image"));
        }
        let mask = rasterize_polygon(&poly, w, h);
        let dark = apply_shadow(&img, &spec(f1));
        let light = apply_shadow(&img, &spec(f2));
        for (i, ((a, b), o)) in dark.pixels().zip(light.pixels()).zip(img.pixels()).enumerate() {
            let (x, y) = (i as u32 % w, i as u32 / w);
            if !mask.contains(x, y) && (a != o || b != o) {
                return fail(format!("case {case}: outside pixel ({x},{y}) changed"));
            }
            if (0..3).any(|c| a[c] > b[c] || b[c] > o[c]) {
                return fail(format!("case {case}: not monotone at ({x},{y}) for {f1} <= {f2}"));
            }
        }
        let factor = ShadowFactor::new(f1).unwrap();
        let full = ShadowSpec::new(ShadowPolygon::full_frame(), factor);
        if reduce_brightness(&img, factor) != apply_shadow(&img, &full) {
            return fail(format!("case {case}: reduce_brightness differs from full-frame shadow"));
        }
    }
    pass(format!("{ALGEBRA_CASES} cases: identity, outside exactness, monotonicity, full-frame equivalence"))
}

// 4 ---------------------------------------------------------------------

fn write_fixture(root: &Path, count: usize, size: u32, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..count {
        let dir = root.join(format!("class_{}", i % 5));
        fs::create_dir_all(&dir).unwrap();
        let bytes = encode_image(&random_image(&mut rng, size, size), EncodeFormat::Png).unwrap();
        fs::write(dir.join(format!("img_{i:05}.png")), bytes).unwrap();
    }
}

fn cli(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_shadowforge"))
        .args(args)
        .env_remove("SHADOWFORGE_SEED")
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(String::from_utf8_lossy(&out.stderr).into_owned())
    }
}

fn determinism() -> Outcome {
    let tmp = TempDir::new().unwrap();
    let input = tmp.path().join("in");
    write_fixture(&input, 500, 32, 4);
    let input = input.to_str().unwrap();
    let mut hashes = Vec::new();
    for (name, workers) in [("run1", "1"), ("run2", "1"), ("workers8", "8")] {
        let out = tmp.path().join(name);
        let args = ["augment", input, out.to_str().unwrap(), "--preset", "paper-shadow", "--seed", "7"];
        if let Err(e) = cli(&[&args[..], &["--workers", workers]].concat()) {
            return fail(format!("{name}: {e}"));
        }
        hashes.push(tree_hash(&out).unwrap());
    }
    if hashes.windows(2).all(|w| w[0] == w[1]) {
        pass(format!("500 images, rerun and 1 vs 8 workers agree: {}", &hashes[0][..16]))
    } else {
        fail(format!("tree hashes differ: {hashes:?}"))
    }
}

// 5 ---------------------------------------------------------------------

fn application_rate() -> Outcome {
    let tmp = TempDir::new().unwrap();
    let input = tmp.path().join("in");
    write_fixture(&input, 10_000, 4, 5);
    let policy = AugmentationPolicy::new(
        vec![PolicyStep::Shadow {
            prob: Probability::new(0.5).unwrap(),
            specs: preset_specs(ShadowFactor::new(0.5).unwrap()),
        }],
        20_240_501,
    )
    .unwrap();
    let policy_path = tmp.path().join("policy.json");
    fs::write(&policy_path, to_sorted_json(&policy)).unwrap();
    let out = tmp.path().join("out");
    let args = ["augment", input.to_str().unwrap(), out.to_str().unwrap(), "--policy", policy_path.to_str().unwrap()];
    if let Err(e) = cli(&args) {
        return fail(e);
    }
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
    let entries = manifest["entries"].as_array().unwrap();
    let fired = entries
        .iter()
        .filter(|e| e["applied_ops"].as_array().unwrap().iter().any(|o| o["op"] == "shadow"))
        .count();
    let rate = fired as f64 / entries.len() as f64;
    let detail = format!("{fired}/{} fired = {rate:.4}, band [{}, {}]", entries.len(), RATE_BAND.0, RATE_BAND.1);
    if entries.len() == 10_000 && (RATE_BAND.0..=RATE_BAND.1).contains(&rate) {
        pass(detail)
    } else {
        fail(detail)
    }
}

// 6 ---------------------------------------------------------------------

/// Strict floor 600 and drop 150 in thousandths, integer arithmetic.
fn rule_scan(m: &[i32; GRID_LEN]) -> (i32, i32) {
    let at = |t: i32| m[((t + 90) / 5) as usize];
    if at(0) < 600 {
        return (0, 0);
    }
    let side = |sign: i32| {
        (1..=18)
            .map(|k| sign * 5 * k)
            .find(|&t| at(t) < 600 || at(t - sign * 5) - at(t) > 150)
            .unwrap_or(sign * 90)
    };
    (side(1), side(-1))
}

fn breakdown_suite() -> Outcome {
    let cfg = BreakdownConfig::default();
    let curve = |m: &[i32; GRID_LEN]| AccuracyCurve::new(&m.map(|k| k as f64 / 1000.0)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for n in 0..BREAKDOWN_CURVES {
        let mut m = [0i32; GRID_LEN];
        m[18] = rng.random_range(550..=1000);
        for dir in [1isize, -1] {
            let mut i = 18isize;
            for _ in 0..18 {
                let prev = m[i as usize];
                i += dir;
                let step = match rng.random_range(0..40) {
                    0 => 150,
                    1 => 151,
                    2 => prev - 600,
                    3 => prev - 599,
                    4..20 => -rng.random_range(0..20),
                    _ => rng.random_range(0..25),
                };
                m[i as usize] = (prev - step).clamp(0, 1000);
            }
        }
        let c = curve(&m);
        let r = detect_breakdown(&c, &cfg);
        if (r.positive, r.negative) != rule_scan(&m) {
            return fail(format!("curve {n}: got {r:?}, oracle {:?}", rule_scan(&m)));
        }
        let f = detect_breakdown(&c.mirrored(), &cfg);
        if (f.positive, f.negative) != (-r.negative, -r.positive) {
            return fail(format!("curve {n}: mirrored result {f:?} vs {r:?}"));
        }
    }

    let flat = |v: f64| AccuracyCurve::from_fn(|_| v).unwrap();
    let stairs = AccuracyCurve::from_fn(|t| [1.0, 0.85, 0.70][(t.unsigned_abs() / 5).min(2) as usize]).unwrap();
    for (name, c) in [("flat 0.60", flat(0.60)), ("exact 0.15 drops", stairs), ("flat 1.0", flat(1.0))] {
        let r = detect_breakdown(&c, &cfg);
        if r != BreakdownResult::NONE {
            return fail(format!("{name}: {r:?}, expected (+90, -90)"));
        }
    }
    pass(format!("{BREAKDOWN_CURVES} random curves and mirrors match; strictness cases and flat 1.0 give (+90, -90)"))
}

// 7 ---------------------------------------------------------------------

fn luminance(px: [u8; 3]) -> f64 {
    0.299 * px[0] as f64 + 0.587 * px[1] as f64 + 0.114 * px[2] as f64
}

fn pole_monotonicity() -> Outcome {
    let (w, h) = (96, 72);
    let img = ImageBuffer::from_fn(w, h, |p| [(60 + p.x * 2) as u8, (90 + p.y * 2) as u8, 200]).unwrap();
    for rotation in [0.0, 30.0, -60.0, 90.0] {
        for alpha in ALPHA_LEVELS {
            let mut last = 0;
            for width in WIDTH_LEVELS {
                let model = PoleShadowModel::new(alpha, width, rotation, 0.0).unwrap();
                let n = rasterize_polygon(pole_to_polygon(&model).polygon(), w, h).count();
                if n < last {
                    return fail(format!("rot {rotation} alpha {alpha}: width {width} covers {n} < {last}"));
                }
                last = n;
            }
        }
        for width in WIDTH_LEVELS {
            let mut last = f64::INFINITY;
            for alpha in ALPHA_LEVELS {
                let model = PoleShadowModel::new(alpha, width, rotation, 0.0).unwrap();
                let mask = rasterize_polygon(pole_to_polygon(&model).polygon(), w, h);
                let out = apply_pole_shadow(&img, &model);
                let band: Vec<f64> = out
                    .pixels()
                    .enumerate()
                    .filter(|(i, _)| mask.contains(*i as u32 % w, *i as u32 / w))
                    .map(|(_, px)| luminance(px))
                    .collect();
                let mean = band.iter().sum::<f64>() / band.len() as f64;
                if band.is_empty() || mean >= last {
                    return fail(format!("rot {rotation} width {width}: alpha {alpha} band mean {mean:.2} vs {last:.2}"));
                }
                last = mean;
            }
        }
    }
    pass("4x3 lattice at 4 rotations: coverage non-decreasing in width, band luminance decreasing in alpha")
}

// 8 ---------------------------------------------------------------------

fn scope_note() -> Outcome {
    let readme = fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../README.md")).unwrap_or_default();
    let required = ["## Out of scope", "not publicly available", "classifier"];
    match required.iter().find(|s| !readme.contains(*s)) {
        None => pass("README documents that trained-model accuracies are not reproduced (data and GPU training unavailable)"),
        Some(missing) => fail(format!("README lacks {missing:?}")),
    }
}

fn main() -> ExitCode {
    let secs = |s| Some(Duration::from_secs(s));
    let results = [
        ("1 percent-change regression", timed(secs(1), percent_regression)),
        ("2 rasterizer oracle", timed(secs(10), rasterizer_oracle)),
        ("3 shadow algebra", timed(secs(30), shadow_algebra)),
        ("4 augment determinism", timed(secs(60), determinism)),
        ("5 application rate", timed(None, application_rate)),
        ("6 breakdown rules", timed(None, breakdown_suite)),
        ("7 pole monotonicity", timed(None, pole_monotonicity)),
        ("8 scope note", timed(None, scope_note)),
    ];
    let mut failed = 0;
    for (name, outcome) in &results {
        let tag = if outcome.passed { "PASS" } else { "FAIL" };
        println!("{tag} {name}: {}", outcome.detail);
        failed += !outcome.passed as usize;
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
