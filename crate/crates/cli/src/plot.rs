//! Standalone SVG line charts of cumulative regret.
//!
//! Each curve is one `<polyline class="curve">` drawn over one
//! `<polygon class="band">` covering mean ± standard error.

use std::fmt::Write;

use crate::error::CliError;
use crate::output::Curve;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 180.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
/// Points drawn per curve at most; the last round is always kept.
const MAX_POINTS: usize = 600;
const TICKS: usize = 5;
const PALETTE: [&str; 10] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn sample_rounds(horizon: usize) -> Vec<usize> {
    let step = horizon.div_ceil(MAX_POINTS).max(1);
    let mut idx: Vec<usize> = (0..horizon).step_by(step).collect();
    if idx.last() != Some(&(horizon - 1)) {
        idx.push(horizon - 1);
    }
    idx
}

/// Renders `curves`, which must share one horizon.
pub fn render_svg(curves: &[Curve], title: &str) -> Result<String, CliError> {
    let first = curves
        .first()
        .ok_or_else(|| CliError::Config("nothing to plot".to_string()))?;
    let horizon = first.mean.len();
    if let Some(c) = curves.iter().find(|c| c.mean.len() != horizon) {
        return Err(CliError::Config(format!(
            "{} has {} rounds but {} has {horizon}",
            c.label,
            c.mean.len(),
            first.label
        )));
    }
    let y_max = curves
        .iter()
        .flat_map(|c| c.mean.iter().zip(&c.stderr).map(|(m, s)| m + s))
        .fold(0.0f64, f64::max);
    let y_max = if y_max > 0.0 { y_max * 1.05 } else { 1.0 };
    let (plot_w, plot_h) = (WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM);
    let x_span = (horizon.max(2) - 1) as f64;
    let px = |i: usize| LEFT + plot_w * i as f64 / x_span;
    let py = |v: f64| TOP + plot_h * (1.0 - (v / y_max).clamp(0.0, 1.0));
    let rounds = sample_rounds(horizon);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="16">{}</text>"#,
        LEFT + plot_w / 2.0,
        escape(title)
    );
    // Axes, ticks and labels.
    let _ = writeln!(
        s,
        r#"<path class="axis" d="M{LEFT:.1},{TOP:.1} V{:.1} H{:.1}" fill="none" stroke="black"/>"#,
        TOP + plot_h,
        LEFT + plot_w
    );
    for k in 0..=TICKS {
        let v = y_max * k as f64 / TICKS as f64;
        let y = py(v);
        let _ = writeln!(
            s,
            r#"<line x1="{:.1}" y1="{y:.1}" x2="{LEFT:.1}" y2="{y:.1}" stroke="black"/><text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            LEFT - 5.0,
            LEFT - 8.0,
            y + 4.0,
            tick_label(v)
        );
        let i = ((horizon - 1) as f64 * k as f64 / TICKS as f64).round() as usize;
        let x = px(i);
        let _ = writeln!(
            s,
            r#"<line x1="{x:.1}" y1="{:.1}" x2="{x:.1}" y2="{:.1}" stroke="black"/><text x="{x:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            TOP + plot_h,
            TOP + plot_h + 5.0,
            TOP + plot_h + 20.0,
            i + 1
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">round t</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text transform="translate(20,{:.1}) rotate(-90)" text-anchor="middle">cumulative regret</text>"#,
        TOP + plot_h / 2.0
    );

    for (n, c) in curves.iter().enumerate() {
        let color = PALETTE[n % PALETTE.len()];
        let upper = rounds.iter().map(|&i| (px(i), py(c.mean[i] + c.stderr[i])));
        let lower = rounds.iter().rev().map(|&i| (px(i), py(c.mean[i] - c.stderr[i])));
        let band: Vec<String> = upper.chain(lower).map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
        let _ = writeln!(
            s,
            r#"<polygon class="band" points="{}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#,
            band.join(" ")
        );
        let line: Vec<String> = rounds.iter().map(|&i| format!("{:.2},{:.2}", px(i), py(c.mean[i]))).collect();
        let _ = writeln!(
            s,
            r#"<polyline class="curve" points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            line.join(" ")
        );
        let ly = TOP + 10.0 + 20.0 * n as f64;
        let lx = LEFT + plot_w + 15.0;
        let _ = writeln!(
            s,
            r#"<g class="legend"><line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="3"/><text x="{:.1}" y="{:.1}">{}</text></g>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            escape(&c.label)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn tick_label(v: f64) -> String {
    if v == 0.0 || (0.01..1e5).contains(&v.abs()) {
        let t = format!("{v:.2}");
        t.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.1e}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn downsampling_keeps_the_ends() {
        assert_eq!(sample_rounds(1), vec![0]);
        assert_eq!(sample_rounds(5), vec![0, 1, 2, 3, 4]);
        let r = sample_rounds(3000);
        assert_eq!((r[0], *r.last().unwrap()), (0, 2999));
        assert!(r.len() <= MAX_POINTS + 1);
    }

    #[test]
    fn labels_are_escaped() {
        let c = Curve {
            label: "a<b>&c".into(),
            mean: vec![0.0, 1.0],
            stderr: vec![0.0, 0.1],
        };
        let svg = render_svg(&[c], "t").unwrap();
        assert!(svg.contains("a&lt;b&gt;&amp;c"));
    }
}
