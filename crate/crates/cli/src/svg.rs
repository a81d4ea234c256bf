//! Minimal static line and point charts.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"];

#[derive(Debug, Clone)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    /// Vertical whiskers `(lower, upper)` per point.
    pub whiskers: Option<Vec<(f64, f64)>>,
    pub line: bool,
}

impl Series {
    pub fn line(name: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Series {
            name: name.into(),
            points,
            whiskers: None,
            line: true,
        }
    }

    pub fn points(name: impl Into<String>, points: Vec<(f64, f64)>, whiskers: Option<Vec<(f64, f64)>>) -> Self {
        Series {
            name: name.into(),
            points,
            whiskers,
            line: false,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    /// Category labels at given x positions; numeric ticks when empty.
    pub x_categories: Vec<(f64, String)>,
    pub series: Vec<Series>,
    /// Horizontal reference line.
    pub reference: Option<f64>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn label(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let mag = v.abs().log10().floor() as i32;
    let decimals = (2 - mag).clamp(0, 6) as usize;
    let s = format!("{v:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    (0..=4).map(|k| lo + (hi - lo) * k as f64 / 4.0).collect()
}

impl Chart {
    fn bounds(&self) -> ((f64, f64), (f64, f64)) {
        let mut xs: Vec<f64> = self.x_categories.iter().map(|c| c.0).collect();
        let mut ys: Vec<f64> = self.reference.into_iter().collect();
        for s in &self.series {
            for &(x, y) in &s.points {
                xs.push(x);
                ys.push(y);
            }
            for &(a, b) in s.whiskers.iter().flatten() {
                ys.push(a);
                ys.push(b);
            }
        }
        let span = |v: &[f64]| {
            let v: Vec<f64> = v.iter().copied().filter(|x| x.is_finite()).collect();
            let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if !lo.is_finite() {
                (0.0, 1.0)
            } else if hi - lo < 1e-12 {
                (lo - 0.5, hi + 0.5)
            } else {
                let pad = 0.05 * (hi - lo);
                (lo - pad, hi + pad)
            }
        };
        (span(&xs), span(&ys))
    }

    pub fn render(&self) -> String {
        let ((x0, x1), (y0, y1)) = self.bounds();
        let pw = WIDTH - LEFT - RIGHT;
        let ph = HEIGHT - TOP - BOTTOM;
        let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| TOP + (1.0 - (y - y0) / (y1 - y0)) * ph;

        let mut o = String::new();
        let _ = writeln!(
            o,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
        );
        let _ = writeln!(o, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = writeln!(
            o,
            r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
            LEFT + pw / 2.0,
            escape(&self.title)
        );
        let _ = writeln!(
            o,
            r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
        );
        for y in ticks(y0, y1) {
            let py = sy(y);
            let _ = writeln!(
                o,
                r##"<line x1="{LEFT}" x2="{:.1}" y1="{py:.1}" y2="{py:.1}" stroke="#ddd"/><text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"##,
                LEFT + pw,
                LEFT - 6.0,
                py + 4.0,
                label(y)
            );
        }
        let xt: Vec<(f64, String)> = if self.x_categories.is_empty() {
            ticks(x0, x1).into_iter().map(|x| (x, label(x))).collect()
        } else {
            self.x_categories.clone()
        };
        for (x, l) in xt {
            let _ = writeln!(
                o,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
                sx(x),
                TOP + ph + 16.0,
                escape(&l)
            );
        }
        let _ = writeln!(
            o,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            LEFT + pw / 2.0,
            HEIGHT - 12.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            o,
            r#"<text transform="translate(16 {:.1}) rotate(-90)" text-anchor="middle">{}</text>"#,
            TOP + ph / 2.0,
            escape(&self.y_label)
        );
        if let Some(r) = self.reference {
            let _ = writeln!(
                o,
                r#"<line x1="{LEFT}" x2="{:.1}" y1="{:.1}" y2="{:.1}" stroke="black" stroke-dasharray="4 3"/>"#,
                LEFT + pw,
                sy(r),
                sy(r)
            );
        }
        for (k, s) in self.series.iter().enumerate() {
            let color = PALETTE[k % PALETTE.len()];
            let pts: Vec<(f64, f64)> = s.points.iter().copied().filter(|p| p.0.is_finite() && p.1.is_finite()).collect();
            if s.line && pts.len() > 1 {
                let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.1},{:.1}", sx(x), sy(y))).collect();
                let _ = writeln!(
                    o,
                    r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
                    path.join(" ")
                );
            }
            if let Some(w) = &s.whiskers {
                for (&(x, _), &(a, b)) in s.points.iter().zip(w) {
                    if a.is_finite() && b.is_finite() {
                        let _ = writeln!(
                            o,
                            r#"<line x1="{0:.1}" x2="{0:.1}" y1="{1:.1}" y2="{2:.1}" stroke="{color}"/>"#,
                            sx(x),
                            sy(a),
                            sy(b)
                        );
                    }
                }
            }
            for &(x, y) in &pts {
                let _ = writeln!(o, r#"<circle cx="{:.1}" cy="{:.1}" r="2.5" fill="{color}"/>"#, sx(x), sy(y));
            }
            let ly = TOP + 12.0 + 16.0 * k as f64;
            let _ = writeln!(
                o,
                r#"<rect x="{:.1}" y="{:.1}" width="10" height="10" fill="{color}"/><text x="{:.1}" y="{:.1}">{}</text>"#,
                WIDTH - RIGHT + 12.0,
                ly - 9.0,
                WIDTH - RIGHT + 26.0,
                ly,
                escape(&s.name)
            );
        }
        o.push_str("</svg>\n");
        o
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_are_short() {
        assert_eq!(label(0.0), "0");
        assert_eq!(label(0.125), "0.125");
        assert_eq!(label(1234.6), "1235");
        assert_eq!(label(-0.00151), "-0.00151");
    }

    #[test]
    fn render_is_well_formed_and_stable() {
        let chart = Chart {
            title: "a < b".into(),
            series: vec![
                Series::line("one", vec![(1.0, 2.0), (2.0, 3.0)]),
                Series::points("two", vec![(1.5, f64::NAN)], Some(vec![(0.0, 1.0)])),
            ],
            reference: Some(0.0),
            ..Chart::default()
        };
        let a = chart.render();
        assert!(a.starts_with("<svg") && a.ends_with("</svg>\n"));
        assert!(a.contains("a &lt; b"));
        assert!(!a.contains("NaN"));
        assert_eq!(a, chart.render());
    }
}
