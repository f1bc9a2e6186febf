//! Figure rendering: a self-contained SVG line chart and a gnuplot script that
//! plots the same series from the CSV files.

use std::fmt::Write as _;

/// One curve. `using` is the gnuplot column spec for `file`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotSeries {
    pub label: String,
    pub file: String,
    pub using: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Figure {
    pub name: String,
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub series: Vec<PlotSeries>,
}

const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 190.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const MAX_POINTS: usize = 2000;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn transform(v: f64, log: bool) -> Option<f64> {
    match (log, v.is_finite()) {
        (_, false) => None,
        (true, _) if v <= 0.0 => None,
        (true, _) => Some(v.log10()),
        (false, _) => Some(v),
    }
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 * lo.abs().max(1.0) {
        let pad = 0.5 * lo.abs().max(1.0);
        return (lo - pad, hi + pad);
    }
    (lo, hi)
}

/// Tick positions in transformed coordinates with their labels.
fn ticks(lo: f64, hi: f64, log: bool) -> Vec<(f64, String)> {
    if log {
        let (a, b) = (lo.floor() as i64, hi.ceil() as i64);
        let step = ((b - a) / 8).max(1);
        return (a..=b)
            .filter(|k| (k - a) % step == 0)
            .map(|k| k as f64)
            .filter(|&k| k >= lo - 1e-9 && k <= hi + 1e-9)
            .map(|k| (k, format!("1e{k}")))
            .collect();
    }
    let raw = (hi - lo) / 6.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last)
        .map(|i| {
            let v = i as f64 * step;
            let label = format!("{:.*}", (-(step.log10().floor()) as i64).max(0) as usize, v);
            (v, label)
        })
        .collect()
}

pub fn render_svg(fig: &Figure) -> String {
    let series: Vec<Vec<(f64, f64)>> = fig
        .series
        .iter()
        .map(|s| {
            let stride = s.points.len().div_ceil(MAX_POINTS).max(1);
            s.points
                .iter()
                .enumerate()
                .filter(|(i, _)| i % stride == 0 || *i + 1 == s.points.len())
                .filter_map(|(_, &(x, y))| Some((transform(x, fig.log_x)?, transform(y, fig.log_y)?)))
                .collect()
        })
        .collect();
    let (x0, x1) = range(series.iter().flatten().map(|p| p.0));
    let (y0, y1) = range(series.iter().flatten().map(|p| p.1));
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + (y1 - y) / (y1 - y0) * ph;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
        LEFT + pw / 2.0,
        escape(&fig.title)
    );
    let _ = writeln!(out, r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
    for (v, label) in ticks(x0, x1, fig.log_x) {
        let x = sx(v);
        let _ = writeln!(
            out,
            r##"<line x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{:.2}" stroke="#ddd"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
            TOP + ph,
            TOP + ph + 18.0,
            escape(&label)
        );
    }
    for (v, label) in ticks(y0, y1, fig.log_y) {
        let y = sy(v);
        let _ = writeln!(
            out,
            r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
            LEFT + pw,
            LEFT - 6.0,
            y + 4.0,
            escape(&label)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 15.0,
        escape(&fig.x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="18" y="{:.1}" text-anchor="middle" transform="rotate(-90 18 {:.1})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(&fig.y_label)
    );
    for (i, (pts, s)) in series.iter().zip(&fig.series).enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        if !pts.is_empty() {
            let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
            let _ = writeln!(
                out,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                path.join(" ")
            );
        }
        let ly = TOP + 16.0 + 18.0 * i as f64;
        let lx = WIDTH - RIGHT + 12.0;
        let _ = writeln!(
            out,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
            lx + 22.0,
            lx + 28.0,
            ly + 4.0,
            escape(&s.label)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// gnuplot script writing `<figure name>.png` for every figure.
pub fn gnuplot_script(figures: &[Figure]) -> String {
    let mut out = String::from("# gnuplot plot.gp\nset datafile separator ','\nset key outside right\nset grid\n");
    out.push_str("set terminal pngcairo size 900,540\n");
    for fig in figures {
        let _ = writeln!(out, "\nset output '{}.png'", fig.name);
        let _ = writeln!(out, "set title \"{}\"", fig.title.replace('"', "'"));
        let _ = writeln!(out, "set xlabel \"{}\"", fig.x_label.replace('"', "'"));
        let _ = writeln!(out, "set ylabel \"{}\"", fig.y_label.replace('"', "'"));
        out.push_str(if fig.log_x { "set logscale x\n" } else { "unset logscale x\n" });
        out.push_str(if fig.log_y { "set logscale y\n" } else { "unset logscale y\n" });
        let parts: Vec<String> = fig
            .series
            .iter()
            .map(|s| format!("'{}' skip 1 using {} with lines title \"{}\"", s.file, s.using, s.label.replace('"', "'")))
            .collect();
        let _ = writeln!(out, "plot {}", parts.join(", \\\n     "));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig(log_y: bool) -> Figure {
        Figure {
            name: "f".into(),
            title: "decay <test>".into(),
            x_label: "t".into(),
            y_label: "E".into(),
            log_x: false,
            log_y,
            series: vec![PlotSeries {
                label: "a".into(),
                file: "a.csv".into(),
                using: "1:2".into(),
                points: (0..10).map(|i| (i as f64, (-(i as f64)).exp())).collect(),
            }],
        }
    }

    #[test]
    fn svg_is_well_formed_enough() {
        let s = render_svg(&fig(true));
        assert!(s.starts_with("<svg"));
        assert!(s.trim_end().ends_with("</svg>"));
        assert!(s.contains("&lt;test&gt;"));
        assert!(s.contains("<polyline"));
        assert!(s.contains("1e-3"));
    }

    #[test]
    fn log_axis_skips_non_positive() {
        let mut f = fig(true);
        f.series[0].points.push((10.0, 0.0));
        let s = render_svg(&f);
        assert!(!s.contains("NaN") && !s.contains("inf"));
    }

    #[test]
    fn linear_ticks_are_round() {
        let t = ticks(0.0, 1.0, false);
        assert_eq!(t.first().unwrap().1, "0.0");
        let labels: Vec<&str> = t.iter().map(|(_, l)| l.as_str()).collect();
        assert_eq!(labels, ["0.0", "0.2", "0.4", "0.6", "0.8", "1.0"]);
    }

    #[test]
    fn script_mentions_every_file() {
        let s = gnuplot_script(&[fig(true)]);
        assert!(s.contains("'a.csv' skip 1 using 1:2"));
        assert!(s.contains("set logscale y"));
    }
}
