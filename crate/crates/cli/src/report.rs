//! CSV tables, pass/fail checks and log-log SVG plots.

use std::fmt::Write as _;
use std::path::Path;

use dec_green::fit::loglog_fit;

use crate::error::{io_err, CliError, CliResult};

/// Floats are written in shortest round-trip exponent form so reruns are byte-identical.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:e}")
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    /// File stem; the CSV is written to `<out_dir>/<name>.csv`.
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Table {
            name: name.to_string(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len(), "row width for {}", self.name);
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn to_csv(&self) -> CliResult<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| CliError::Io {
            path: self.name.clone(),
            source: e.into_error(),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

/// Scatter of positive `(x, y)` points on log-log axes with one fitted power law.
#[derive(Clone, Debug, PartialEq)]
pub struct LogLogPlot {
    pub name: String,
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub points: Vec<(f64, f64)>,
    /// `(slope, ln intercept)` of `y = e^b x^slope`; fitted to the points when absent.
    pub fit: Option<(f64, f64)>,
}

#[derive(Clone, Debug, Default)]
pub struct Outcome {
    pub tables: Vec<Table>,
    pub plots: Vec<LogLogPlot>,
    pub checks: Vec<Check>,
    /// Extra text artifacts as `(file name, contents)`.
    pub files: Vec<(String, String)>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    pub fn check(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check::new(name, passed, detail));
    }
}

pub fn write_csv(dir: &Path, table: &Table) -> CliResult<std::path::PathBuf> {
    let path = dir.join(format!("{}.csv", table.name));
    std::fs::write(&path, table.to_csv()?).map_err(io_err(&path))?;
    Ok(path)
}

pub fn write_svg(dir: &Path, plot: &LogLogPlot) -> CliResult<std::path::PathBuf> {
    let path = dir.join(format!("{}.svg", plot.name));
    std::fs::write(&path, render_loglog(plot)?).map_err(io_err(&path))?;
    Ok(path)
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 60.0;

pub fn render_loglog(plot: &LogLogPlot) -> CliResult<String> {
    let pts: Vec<(f64, f64)> = plot
        .points
        .iter()
        .copied()
        .filter(|&(x, y)| x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite())
        .collect();
    if pts.is_empty() {
        return Err(CliError::EmptyReport(plot.name.clone()));
    }
    let (slope, intercept) = match plot.fit {
        Some(f) => f,
        None if pts.len() >= 2 => {
            let (x, y): (Vec<f64>, Vec<f64>) = pts.iter().copied().unzip();
            let f = loglog_fit(&x, &y)?;
            (f.slope, f.intercept)
        }
        None => (0.0, pts[0].1.ln()),
    };

    let lx: Vec<f64> = pts.iter().map(|p| p.0.log10()).collect();
    let ly: Vec<f64> = pts.iter().map(|p| p.1.log10()).collect();
    let fit_at = |x: f64| (intercept + slope * x.ln()) / std::f64::consts::LN_10;
    let (x_lo, x_hi) = padded_range(&lx);
    let line_ends = [fit_at(10f64.powf(x_lo)), fit_at(10f64.powf(x_hi))];
    let (y_lo, y_hi) = padded_range(&ly.iter().chain(&line_ends).copied().collect::<Vec<_>>());
    let sx = |v: f64| MARGIN + (v - x_lo) / (x_hi - x_lo) * (WIDTH - 2.0 * MARGIN);
    let sy = |v: f64| HEIGHT - MARGIN - (v - y_lo) / (y_hi - y_lo) * (HEIGHT - 2.0 * MARGIN);

    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    )
    .unwrap();
    writeln!(s, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#).unwrap();
    writeln!(
        s,
        r#"<rect class="frame" x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    )
    .unwrap();
    writeln!(s, r#"<text x="{}" y="30" text-anchor="middle" font-size="16">{}</text>"#, WIDTH / 2.0, escape(&plot.title)).unwrap();
    for e in (x_lo.ceil() as i32)..=(x_hi.floor() as i32) {
        let x = sx(e as f64);
        writeln!(
            s,
            r#"<path class="tick" d="M{x:.2},{:.2}v6" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle" font-size="11">1e{e}</text>"#,
            HEIGHT - MARGIN,
            HEIGHT - MARGIN + 20.0
        )
        .unwrap();
    }
    for e in (y_lo.ceil() as i32)..=(y_hi.floor() as i32) {
        let y = sy(e as f64);
        writeln!(
            s,
            r#"<path class="tick" d="M{MARGIN},{y:.2}h-6" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end" font-size="11">1e{e}</text>"#,
            MARGIN - 8.0,
            y + 4.0
        )
        .unwrap();
    }
    writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="13">{}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 15.0,
        escape(&plot.x_label)
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="15" y="{}" text-anchor="middle" font-size="13" transform="rotate(-90 15 {})">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(&plot.y_label)
    )
    .unwrap();
    for (x, y) in lx.iter().zip(&ly) {
        writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="steelblue"/>"#, sx(*x), sy(*y)).unwrap();
    }
    writeln!(
        s,
        r#"<line class="fit" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="firebrick" stroke-width="2"/>"#,
        sx(x_lo),
        sy(line_ends[0]),
        sx(x_hi),
        sy(line_ends[1])
    )
    .unwrap();
    writeln!(
        s,
        r#"<text class="fit-label" x="{:.2}" y="{:.2}" text-anchor="end" font-size="13" fill="firebrick">slope = {slope:.4}</text>"#,
        WIDTH - MARGIN - 8.0,
        MARGIN + 20.0
    )
    .unwrap();
    s.push_str("</svg>\n");
    Ok(s)
}

fn padded_range(v: &[f64]) -> (f64, f64) {
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let pad = ((hi - lo) * 0.05).max(0.05);
    (lo - pad, hi + pad)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn decay_table() -> Table {
        let mut t = Table::new("decay", &["tag", "distance", "value"]);
        for (d, v) in [(0.1, 10.0), (0.2, 5.0), (0.4, 2.5)] {
            t.push(vec!["Thm1.1.i".into(), fmt_f64(d), fmt_f64(v)]);
        }
        t
    }

    #[test]
    fn three_rows_give_four_lines() {
        let bytes = decay_table().to_csv().unwrap();
        let text = String::from_utf8(bytes).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert_eq!(text.lines().next().unwrap(), "tag,distance,value");
        assert_eq!(text.lines().nth(1).unwrap(), "Thm1.1.i,1e-1,1e1");
    }

    #[test]
    fn same_rows_same_bytes() {
        assert_eq!(decay_table().to_csv().unwrap(), decay_table().to_csv().unwrap());
    }

    #[test]
    fn svg_has_exactly_one_fit_line() {
        let plot = LogLogPlot {
            name: "decay".into(),
            title: "kernel".into(),
            x_label: "d".into(),
            y_label: "|G|".into(),
            points: vec![(0.1, 10.0), (0.2, 5.0), (0.4, 2.5)],
            fit: None,
        };
        let svg = render_loglog(&plot).unwrap();
        assert_eq!(svg.matches("<line").count(), 1);
        assert_eq!(svg.matches("<circle").count(), 3);
        // points lie on y = x^{-1}
        assert!(svg.contains("slope = -1.0000"), "{svg}");
    }

    #[test]
    fn empty_plot_is_an_error() {
        let plot = LogLogPlot {
            name: "empty".into(),
            title: String::new(),
            x_label: String::new(),
            y_label: String::new(),
            points: vec![(0.0, 1.0), (1.0, -2.0)],
            fit: None,
        };
        assert!(matches!(render_loglog(&plot), Err(CliError::EmptyReport(_))));
    }

    #[test]
    fn float_format() {
        assert_eq!(fmt_f64(0.0), "0e0");
        assert_eq!(fmt_f64(-1.5e-12), "-1.5e-12");
        assert_eq!(fmt_f64(f64::INFINITY), "inf");
    }
}
