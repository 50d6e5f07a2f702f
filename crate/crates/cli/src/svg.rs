//! Minimal SVG chart emitter: axes, polylines, scatter points and heatmap
//! cells.

use std::fmt::Write as _;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;

pub const PALETTE: &[&str] = &["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mark {
    Line,
    Points,
}

#[derive(Debug, Clone)]
pub struct Series {
    pub name: String,
    pub color: String,
    pub mark: Mark,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Copy)]
pub struct Cell {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Default)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    pub cells: Vec<Cell>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn tick_label(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

fn extent(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if lo > hi {
        (0.0, 1.0)
    } else if lo == hi {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

/// Blue-to-red ramp over `t` in [0, 1].
fn heat(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let r = (255.0 * t).round() as u8;
    let b = (255.0 * (1.0 - t)).round() as u8;
    format!("#{r:02x}40{b:02x}")
}

impl Chart {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Chart {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            ..Chart::default()
        }
    }

    pub fn line(mut self, name: &str, color: &str, points: Vec<(f64, f64)>) -> Self {
        self.series.push(Series { name: name.into(), color: color.into(), mark: Mark::Line, points });
        self
    }

    pub fn scatter(mut self, name: &str, color: &str, points: Vec<(f64, f64)>) -> Self {
        self.series.push(Series { name: name.into(), color: color.into(), mark: Mark::Points, points });
        self
    }

    pub fn heatmap(mut self, cells: Vec<Cell>) -> Self {
        self.cells = cells;
        self
    }

    pub fn render(&self) -> String {
        let xs = self
            .series
            .iter()
            .flat_map(|s| s.points.iter().map(|p| p.0))
            .chain(self.cells.iter().flat_map(|c| [c.x0, c.x1]));
        let ys = self
            .series
            .iter()
            .flat_map(|s| s.points.iter().map(|p| p.1))
            .chain(self.cells.iter().flat_map(|c| [c.y0, c.y1]));
        let (x_lo, x_hi) = extent(xs);
        let (y_lo, y_hi) = extent(ys);
        let pw = WIDTH - LEFT - RIGHT;
        let ph = HEIGHT - TOP - BOTTOM;
        let sx = |x: f64| LEFT + (x - x_lo) / (x_hi - x_lo) * pw;
        let sy = |y: f64| TOP + ph - (y - y_lo) / (y_hi - y_lo) * ph;

        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = writeln!(
            out,
            r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
            LEFT + pw / 2.0,
            escape(&self.title)
        );

        let v_max = self.cells.iter().map(|c| c.value).fold(0.0, f64::max);
        for c in &self.cells {
            let t = if v_max > 0.0 { c.value / v_max } else { 0.0 };
            let fill = if c.value == 0.0 { "#f4f4f4".to_string() } else { heat(t) };
            let (x0, x1) = (sx(c.x0), sx(c.x1));
            let (y0, y1) = (sy(c.y1), sy(c.y0));
            let _ = writeln!(
                out,
                r#"<rect x="{x0:.2}" y="{y0:.2}" width="{:.2}" height="{:.2}" fill="{fill}"><title>{}</title></rect>"#,
                (x1 - x0).max(0.0),
                (y1 - y0).max(0.0),
                tick_label(c.value)
            );
        }

        // axes and ticks
        let _ = writeln!(
            out,
            r##"<path d="M{LEFT} {TOP} V{} H{}" fill="none" stroke="#333"/>"##,
            TOP + ph,
            LEFT + pw
        );
        for i in 0..=5 {
            let f = i as f64 / 5.0;
            let xv = x_lo + f * (x_hi - x_lo);
            let yv = y_lo + f * (y_hi - y_lo);
            let _ = writeln!(
                out,
                r##"<text x="{:.2}" y="{}" text-anchor="middle" fill="#333">{}</text>"##,
                sx(xv),
                TOP + ph + 18.0,
                tick_label(xv)
            );
            let _ = writeln!(
                out,
                r##"<text x="{}" y="{:.2}" text-anchor="end" fill="#333">{}</text>"##,
                LEFT - 6.0,
                sy(yv) + 4.0,
                tick_label(yv)
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            LEFT + pw / 2.0,
            HEIGHT - 12.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            out,
            r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
            TOP + ph / 2.0,
            TOP + ph / 2.0,
            escape(&self.y_label)
        );

        for (i, s) in self.series.iter().enumerate() {
            match s.mark {
                Mark::Line => {
                    let pts: Vec<String> = s
                        .points
                        .iter()
                        .filter(|p| p.0.is_finite() && p.1.is_finite())
                        .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                        .collect();
                    let _ = writeln!(
                        out,
                        r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.5"/>"#,
                        pts.join(" "),
                        s.color
                    );
                }
                Mark::Points => {
                    for &(x, y) in s.points.iter().filter(|p| p.0.is_finite() && p.1.is_finite()) {
                        let _ = writeln!(
                            out,
                            r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{}" fill-opacity="0.6"/>"#,
                            sx(x),
                            sy(y),
                            s.color
                        );
                    }
                }
            }
            let ly = TOP + 10.0 + 18.0 * i as f64;
            let lx = WIDTH - RIGHT + 12.0;
            let _ = writeln!(
                out,
                r#"<rect x="{lx}" y="{}" width="12" height="12" fill="{}"/><text x="{}" y="{}">{}</text>"#,
                ly - 10.0,
                s.color,
                lx + 18.0,
                ly,
                escape(&s.name)
            );
        }
        out.push_str("</svg>\n");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_all_marks() {
        let svg = Chart::new("t <1>", "x", "y")
            .line("a", PALETTE[0], vec![(0.0, 0.0), (1.0, 2.0)])
            .scatter("b", PALETTE[1], vec![(0.5, 1.0)])
            .heatmap(vec![Cell { x0: 0.0, x1: 1.0, y0: 0.0, y1: 1.0, value: 3.0 }])
            .render();
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("<polyline") && svg.contains("<circle") && svg.contains("<title>3</title>"));
        assert!(svg.contains("t &lt;1&gt;"));
    }

    #[test]
    fn degenerate_ranges_do_not_produce_nan() {
        let svg = Chart::new("flat", "x", "y").line("c", PALETTE[0], vec![(1.0, 5.0), (1.0, 5.0)]).render();
        assert!(!svg.contains("NaN"));
        let empty = Chart::new("empty", "x", "y").render();
        assert!(!empty.contains("NaN"));
    }

    #[test]
    fn tick_labels() {
        assert_eq!(tick_label(2.0), "2");
        assert_eq!(tick_label(0.12345), "0.123");
        assert_eq!(tick_label(-0.0001), "0");
    }
}
