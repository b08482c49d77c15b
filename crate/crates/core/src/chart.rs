//! Self-contained SVG plot of an accuracy curve with its breakdown points.
//! Output is byte-stable for identical inputs.

use std::fmt::Write as _;

use crate::breakdown::{AccuracyCurve, BreakdownConfig, BreakdownResult, MAX_ANGLE};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN_LEFT: f64 = 60.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 50.0;

const COLOR_CURVE: &str = "#1f77b4";
const COLOR_FLOOR: &str = "#7f7f7f";
const COLOR_BREAKDOWN: &str = "#d62728";
const COLOR_AXIS: &str = "#222222";
const COLOR_GRID: &str = "#e5e5e5";

fn x_pos(angle: f64) -> f64 {
    let plot = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    MARGIN_LEFT + (angle + MAX_ANGLE as f64) / (2.0 * MAX_ANGLE as f64) * plot
}

fn y_pos(acc: f64) -> f64 {
    let plot = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    MARGIN_TOP + (1.0 - acc) * plot
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

pub fn breakdown_svg(
    title: &str,
    curve: &AccuracyCurve,
    result: &BreakdownResult,
    cfg: &BreakdownConfig,
) -> String {
    let mut s = String::new();
    let (top, bottom) = (y_pos(1.0), y_pos(0.0));
    let (left, right) = (x_pos(-90.0), x_pos(90.0));

    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="24" text-anchor="middle" font-family="sans-serif" font-size="15">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );

    for i in 0..=5 {
        let acc = i as f64 / 5.0;
        let y = y_pos(acc);
        let _ = writeln!(
            s,
            r#"<line x1="{left:.2}" y1="{y:.2}" x2="{right:.2}" y2="{y:.2}" stroke="{COLOR_GRID}"/>"#
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end" font-family="sans-serif" font-size="11">{acc:.1}</text>"#,
            left - 6.0,
            y + 4.0
        );
    }
    for angle in (-90..=90).step_by(30) {
        let x = x_pos(angle as f64);
        let _ = writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{bottom:.2}" x2="{x:.2}" y2="{:.2}" stroke="{COLOR_AXIS}"/>"#,
            bottom + 5.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="11">{angle}</text>"#,
            bottom + 18.0
        );
    }
    let _ = writeln!(
        s,
        r#"<path d="M{left:.2},{top:.2} L{left:.2},{bottom:.2} L{right:.2},{bottom:.2}" fill="none" stroke="{COLOR_AXIS}"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="12">hand pose (degrees)</text>"#,
        (left + right) / 2.0,
        HEIGHT - 10.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="12" transform="rotate(-90 16 {:.2})">top-1 accuracy</text>"#,
        (top + bottom) / 2.0,
        (top + bottom) / 2.0
    );

    let floor_y = y_pos(cfg.accuracy_floor);
    let _ = writeln!(
        s,
        r#"<line class="floor" x1="{left:.2}" y1="{floor_y:.2}" x2="{right:.2}" y2="{floor_y:.2}" stroke="{COLOR_FLOOR}" stroke-dasharray="6,4"/>"#
    );

    let points: Vec<String> = curve
        .points()
        .map(|(a, acc)| format!("{:.2},{:.2}", x_pos(a as f64), y_pos(acc)))
        .collect();
    let _ = writeln!(
        s,
        r#"<polyline class="curve" points="{}" fill="none" stroke="{COLOR_CURVE}" stroke-width="2"/>"#,
        points.join(" ")
    );

    for (angle, triggered) in [
        (result.negative, result.negative_triggered),
        (result.positive, result.positive_triggered),
    ] {
        if !triggered {
            continue;
        }
        let x = x_pos(angle as f64);
        let _ = writeln!(
            s,
            r#"<line class="breakdown" x1="{x:.2}" y1="{top:.2}" x2="{x:.2}" y2="{bottom:.2}" stroke="{COLOR_BREAKDOWN}" stroke-width="1.5"/>"#
        );
        let _ = writeln!(
            s,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="11" fill="{COLOR_BREAKDOWN}">{angle}</text>"#,
            top - 4.0
        );
    }
    s.push_str("</svg>\n");
    s
}
