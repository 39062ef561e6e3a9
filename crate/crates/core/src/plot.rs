//! Static SVG plots of mixing-scale decay.

use std::fmt::Write as _;

pub struct Curve {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];
const PANEL_W: f64 = 360.0;
const PANEL_H: f64 = 260.0;
const MARGIN: f64 = 50.0;

struct Panel {
    title: &'static str,
    log_x: bool,
    x0: f64,
}

fn bounds(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
        (a.min(v), b.max(v))
    });
    if !lo.is_finite() {
        return None;
    }
    Some(if hi > lo { (lo, hi) } else { (lo - 0.5, hi + 0.5) })
}

fn panel(out: &mut String, curves: &[Curve], spec: &Panel) {
    let pts: Vec<Vec<(f64, f64)>> = curves
        .iter()
        .map(|c| {
            c.points
                .iter()
                .filter(|(t, v)| *v > 0.0 && (!spec.log_x || *t > 0.0))
                .map(|(t, v)| (if spec.log_x { t.log10() } else { *t }, v.log10()))
                .collect()
        })
        .collect();
    let all = || pts.iter().flatten();
    let (x0, y0) = (spec.x0 + MARGIN, 20.0);
    let _ = writeln!(
        out,
        r#"<rect x="{x0}" y="{y0}" width="{PANEL_W}" height="{PANEL_H}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="14" text-anchor="middle" font-size="12">{}</text>"#,
        x0 + PANEL_W / 2.0,
        spec.title
    );
    let (Some((xl, xh)), Some((yl, yh))) = (bounds(all().map(|p| p.0)), bounds(all().map(|p| p.1)))
    else {
        return;
    };
    let sx = |x: f64| x0 + (x - xl) / (xh - xl) * PANEL_W;
    let sy = |y: f64| y0 + PANEL_H - (y - yl) / (yh - yl) * PANEL_H;
    let xlabel = if spec.log_x { "log10 t" } else { "t" };
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="11">{xlabel}  [{xl:.3}, {xh:.3}]</text>"#,
        x0 + PANEL_W / 2.0,
        y0 + PANEL_H + 18.0
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" font-size="11" transform="rotate(-90 {} {})" text-anchor="middle">log10 mix  [{yl:.3}, {yh:.3}]</text>"#,
        x0 - 12.0,
        y0 + PANEL_H / 2.0,
        x0 - 12.0,
        y0 + PANEL_H / 2.0
    );
    for (k, (curve, p)) in curves.iter().zip(&pts).enumerate() {
        let color = COLORS[k % COLORS.len()];
        let path: Vec<String> = p
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            path.join(" ")
        );
        for &(x, y) in p {
            let _ = writeln!(
                out,
                r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}"/>"#,
                sx(x),
                sy(y)
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-size="11" fill="{color}">{}</text>"#,
            x0 + PANEL_W - 60.0,
            y0 + 16.0 + 14.0 * k as f64,
            curve.name
        );
    }
}

/// Semi-log and log-log panels of the given decay curves.
pub fn decay_svg(curves: &[Curve], manifest_hash: &str) -> String {
    let width = 2.0 * (PANEL_W + MARGIN) + 20.0;
    let height = PANEL_H + 60.0;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    let _ = writeln!(out, "<!-- manifest-sha256: {manifest_hash} -->");
    panel(
        &mut out,
        curves,
        &Panel {
            title: "semi-log",
            log_x: false,
            x0: 0.0,
        },
    );
    panel(
        &mut out,
        curves,
        &Panel {
            title: "log-log",
            log_x: true,
            x0: PANEL_W + MARGIN,
        },
    );
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn svg_has_both_panels_and_hash() {
        let c = Curve {
            name: "G".into(),
            points: (0..5).map(|n| (n as f64, (-(n as f64)).exp2())).collect(),
        };
        let svg = decay_svg(&[c], "abc");
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("manifest-sha256: abc"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn empty_curves_still_render() {
        let svg = decay_svg(&[], "x");
        assert_eq!(svg.matches("<rect").count(), 2);
    }
}
