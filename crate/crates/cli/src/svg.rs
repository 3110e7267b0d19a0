//! Minimal hand-rolled SVG charts: line plots with solid medians and dashed
//! interval bounds, and grouped bar charts for discrete distributions.

use std::fmt::Write as _;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN_L: f64 = 64.0;
const MARGIN_R: f64 = 150.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 56.0;

pub const SERIES_COLORS: [&str; 6] =
    ["#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// One plotted model: a solid median line plus dashed companion lines.
pub struct LineSeries {
    pub label: String,
    pub color: String,
    pub median: Vec<(f64, f64)>,
    pub dashed: Vec<Vec<(f64, f64)>>,
}

struct Frame {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Frame {
    fn x(&self, v: f64) -> f64 {
        MARGIN_L + (v - self.x_min) / (self.x_max - self.x_min) * (WIDTH - MARGIN_L - MARGIN_R)
    }

    fn y(&self, v: f64) -> f64 {
        HEIGHT - MARGIN_B
            - (v - self.y_min) / (self.y_max - self.y_min) * (HEIGHT - MARGIN_T - MARGIN_B)
    }
}

fn open_svg(out: &mut String, title: &str) {
    let _ = write!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">
<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>
<text x="{:.1}" y="24" font-family="sans-serif" font-size="16" text-anchor="middle">{title}</text>
"#,
        (MARGIN_L + WIDTH - MARGIN_R) / 2.0,
    );
}

fn axes(out: &mut String, frame: &Frame, x_label: &str, y_label: &str) {
    let (x0, x1) = (MARGIN_L, WIDTH - MARGIN_R);
    let (y0, y1) = (HEIGHT - MARGIN_B, MARGIN_T);
    let _ = write!(
        out,
        r#"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>
<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>
"#
    );
    for i in 0..=5 {
        let fx = frame.x_min + (frame.x_max - frame.x_min) * i as f64 / 5.0;
        let fy = frame.y_min + (frame.y_max - frame.y_min) * i as f64 / 5.0;
        let px = frame.x(fx);
        let py = frame.y(fy);
        let _ = write!(
            out,
            r#"<line x1="{px:.1}" y1="{y0}" x2="{px:.1}" y2="{}" stroke="black"/>
<text x="{px:.1}" y="{}" font-family="sans-serif" font-size="11" text-anchor="middle">{fx:.2}</text>
<line x1="{x0}" y1="{py:.1}" x2="{}" y2="{py:.1}" stroke="black"/>
<text x="{}" y="{:.1}" font-family="sans-serif" font-size="11" text-anchor="end">{fy:.2}</text>
"#,
            y0 + 4.0,
            y0 + 18.0,
            x0 - 4.0,
            x0 - 8.0,
            py + 4.0,
        );
    }
    let _ = write!(
        out,
        r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="13" text-anchor="middle">{x_label}</text>
<text x="18" y="{:.1}" font-family="sans-serif" font-size="13" text-anchor="middle" transform="rotate(-90 18 {:.1})">{y_label}</text>
"#,
        (x0 + x1) / 2.0,
        HEIGHT - 14.0,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
    );
}

fn polyline(out: &mut String, frame: &Frame, pts: &[(f64, f64)], color: &str, dashed: bool) {
    if pts.is_empty() {
        return;
    }
    let coords: Vec<String> = pts
        .iter()
        .filter(|(_, y)| y.is_finite())
        .map(|&(x, y)| format!("{:.2},{:.2}", frame.x(x), frame.y(y)))
        .collect();
    if coords.is_empty() {
        return;
    }
    let dash = if dashed { r#" stroke-dasharray="6 4""# } else { "" };
    let _ = write!(
        out,
        "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.6\"{dash}/>\n",
        coords.join(" "),
    );
}

fn legend(out: &mut String, entries: &[(String, String)]) {
    let lx = WIDTH - MARGIN_R + 12.0;
    let mut ly = MARGIN_T + 8.0;
    for (label, color) in entries {
        let _ = write!(
            out,
            r#"<line x1="{lx}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="3"/>
<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="12">{label}</text>
"#,
            lx + 24.0,
            lx + 30.0,
            ly + 4.0,
        );
        ly += 20.0;
    }
}

/// Line chart of medians (solid) and interval bounds (dashed) against the
/// varied detection probability; `reference` draws a horizontal dotted line
/// at the true parameter value.
pub fn line_chart(
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[LineSeries],
    reference: Option<f64>,
) -> String {
    let xs: Vec<f64> = series
        .iter()
        .flat_map(|s| s.median.iter().map(|&(x, _)| x))
        .filter(|v| v.is_finite())
        .collect();
    let ys: Vec<f64> = series
        .iter()
        .flat_map(|s| {
            s.median
                .iter()
                .chain(s.dashed.iter().flatten())
                .map(|&(_, y)| y)
        })
        .chain(reference)
        .filter(|v| v.is_finite())
        .collect();
    let (x_min, x_max) = min_max(&xs, (0.0, 1.0));
    let (y_min, y_max) = pad_range(min_max(&ys, (0.0, 1.0)));
    let frame = Frame { x_min, x_max, y_min, y_max };

    let mut out = String::new();
    open_svg(&mut out, title);
    axes(&mut out, &frame, x_label, y_label);
    if let Some(r) = reference {
        let y = frame.y(r);
        let _ = write!(
            out,
            "<line x1=\"{MARGIN_L}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" stroke=\"gray\" stroke-dasharray=\"2 3\"/>\n",
            WIDTH - MARGIN_R,
        );
    }
    for s in series {
        polyline(&mut out, &frame, &s.median, &s.color, false);
        for d in &s.dashed {
            polyline(&mut out, &frame, d, &s.color, true);
        }
    }
    legend(
        &mut out,
        &series.iter().map(|s| (s.label.clone(), s.color.clone())).collect::<Vec<_>>(),
    );
    out.push_str("</svg>\n");
    out
}

/// One group of bars, e.g. a cluster-count distribution at one alpha.
pub struct BarGroup {
    pub label: String,
    pub color: String,
    /// (count, probability)
    pub values: Vec<(usize, f64)>,
}

/// Grouped bar chart over integer counts.
pub fn bar_chart(title: &str, x_label: &str, y_label: &str, groups: &[BarGroup]) -> String {
    let max_count = groups
        .iter()
        .flat_map(|g| g.values.iter().map(|&(c, _)| c))
        .max()
        .unwrap_or(1);
    let max_prob = groups
        .iter()
        .flat_map(|g| g.values.iter().map(|&(_, p)| p))
        .fold(0.0f64, f64::max)
        .max(1e-9);
    let frame = Frame {
        x_min: 0.5,
        x_max: max_count as f64 + 0.5,
        y_min: 0.0,
        y_max: max_prob * 1.08,
    };

    let mut out = String::new();
    open_svg(&mut out, title);
    axes(&mut out, &frame, x_label, y_label);
    let slot_width = (WIDTH - MARGIN_L - MARGIN_R) / max_count as f64;
    let bar_width = (slot_width * 0.8) / groups.len() as f64;
    for (gi, group) in groups.iter().enumerate() {
        for &(count, prob) in &group.values {
            let left =
                frame.x(count as f64) - slot_width * 0.4 + bar_width * gi as f64;
            let top = frame.y(prob);
            let height = frame.y(0.0) - top;
            let _ = write!(
                out,
                "<rect x=\"{left:.2}\" y=\"{top:.2}\" width=\"{bar_width:.2}\" height=\"{height:.2}\" fill=\"{}\" fill-opacity=\"0.85\"/>\n",
                group.color,
            );
        }
    }
    legend(
        &mut out,
        &groups.iter().map(|g| (g.label.clone(), g.color.clone())).collect::<Vec<_>>(),
    );
    out.push_str("</svg>\n");
    out
}

fn min_max(values: &[f64], fallback: (f64, f64)) -> (f64, f64) {
    if values.is_empty() {
        return fallback;
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

fn pad_range((lo, hi): (f64, f64)) -> (f64, f64) {
    let pad = (hi - lo) * 0.06;
    (lo - pad, hi + pad)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_chart_is_wellformed_svg() {
        let series = vec![LineSeries {
            label: "HOM".into(),
            color: "#d62728".into(),
            median: vec![(0.1, 0.6), (0.2, 0.65), (0.3, 0.7)],
            dashed: vec![
                vec![(0.1, 0.55), (0.2, 0.6), (0.3, 0.66)],
                vec![(0.1, 0.66), (0.2, 0.7), (0.3, 0.74)],
            ],
        }];
        let svg = line_chart("t", "p", "phi", &series, Some(0.7));
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 3);
        assert!(svg.contains("stroke-dasharray"));
    }

    #[test]
    fn bar_chart_draws_all_bars() {
        let groups = vec![
            BarGroup {
                label: "alpha=0.1".into(),
                color: "#1f77b4".into(),
                values: vec![(1, 0.8), (2, 0.15), (3, 0.05)],
            },
            BarGroup {
                label: "alpha=1".into(),
                color: "#2ca02c".into(),
                values: vec![(2, 0.2), (4, 0.5), (6, 0.3)],
            },
        ];
        let svg = bar_chart("t", "clusters", "probability", &groups);
        assert_eq!(svg.matches("<rect").count(), 7); // 6 bars + background
        assert!(svg.contains("alpha=0.1"));
    }

    #[test]
    fn empty_median_series_does_not_panic() {
        let series = vec![LineSeries {
            label: "x".into(),
            color: "#000".into(),
            median: vec![],
            dashed: vec![],
        }];
        let svg = line_chart("t", "p", "psi", &series, None);
        assert!(svg.contains("</svg>"));
    }
}
