//! Results CSV and SVG figures.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{CovError, Result};
use crate::harness::{EstimatorKind, ResultRow};

pub const CSV_HEADER: [&str; 11] = [
    "estimator",
    "M",
    "N",
    "asf",
    "trial",
    "e_nf",
    "e_gd",
    "J",
    "r_hat",
    "runtime_ms",
    "converged",
];

/// Nine significant digits.
fn float(x: f64) -> String {
    format!("{x:.8e}")
}

pub fn to_csv(rows: &[ResultRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for r in rows {
        w.write_record([
            r.estimator.name().to_string(),
            r.m.to_string(),
            r.n.to_string(),
            r.asf.to_string(),
            r.trial.to_string(),
            float(r.e_nf),
            float(r.e_gd),
            r.j.to_string(),
            r.r_hat.to_string(),
            float(r.runtime_ms),
            r.converged.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
}

pub fn write_csv(rows: &[ResultRow], path: &Path) -> Result<()> {
    std::fs::write(path, to_csv(rows)).map_err(|e| CovError::io(path, e))
}

pub fn parse_csv(text: &str, path: &Path) -> Result<Vec<ResultRow>> {
    let bad = |reason: String| CovError::Format {
        path: path.to_path_buf(),
        reason,
    };
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| bad(e.to_string()))?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(bad(format!("unexpected header {:?}", header.iter().collect::<Vec<_>>())));
    }
    let mut rows = Vec::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let field = |i: usize| rec.get(i).unwrap_or("");
        let fail = |i: usize| bad(format!("record {}: cannot parse {} = {:?}", line + 1, CSV_HEADER[i], field(i)));
        let int = |i: usize| field(i).parse::<usize>().map_err(|_| fail(i));
        let real = |i: usize| field(i).parse::<f64>().map_err(|_| fail(i));
        rows.push(ResultRow {
            estimator: EstimatorKind::parse(field(0)).ok_or_else(|| fail(0))?,
            m: int(1)?,
            n: int(2)?,
            asf: int(3)?,
            trial: int(4)?,
            e_nf: real(5)?,
            e_gd: real(6)?,
            j: int(7)?,
            r_hat: int(8)?,
            runtime_ms: real(9)?,
            converged: field(10).parse::<bool>().map_err(|_| fail(10))?,
            note: None,
            outer_iterations: 0,
            descent_violations: 0,
        });
    }
    Ok(rows)
}

pub fn read_csv(path: &Path) -> Result<Vec<ResultRow>> {
    let text = std::fs::read_to_string(path).map_err(|e| CovError::io(path, e))?;
    parse_csv(&text, path)
}

/// Mean errors of one estimator at one `(M, N)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub estimator: EstimatorKind,
    pub m: usize,
    pub n: usize,
    pub mean_e_nf: f64,
    pub mean_e_gd: f64,
    /// Rows with finite metrics.
    pub count: usize,
    pub failures: usize,
}

impl Aggregate {
    pub fn ratio(&self) -> f64 {
        self.n as f64 / self.m as f64
    }
}

/// Group rows by estimator (first-appearance order), then `M` and `N` ascending.
/// Rows with non-finite metrics count as failures and are left out of the means.
pub fn aggregate(rows: &[ResultRow]) -> Vec<Aggregate> {
    let mut order: Vec<EstimatorKind> = Vec::new();
    for r in rows {
        if !order.contains(&r.estimator) {
            order.push(r.estimator);
        }
    }
    let mut out = Vec::new();
    for est in order {
        let mut keys: Vec<(usize, usize)> = rows.iter().filter(|r| r.estimator == est).map(|r| (r.m, r.n)).collect();
        keys.sort_unstable();
        keys.dedup();
        for (m, n) in keys {
            let group = rows.iter().filter(|r| r.estimator == est && r.m == m && r.n == n);
            let (mut s_nf, mut s_gd, mut count, mut failures) = (0.0, 0.0, 0usize, 0usize);
            for r in group {
                if r.e_nf.is_finite() && r.e_gd.is_finite() {
                    s_nf += r.e_nf;
                    s_gd += r.e_gd;
                    count += 1;
                } else {
                    failures += 1;
                }
            }
            let mean = |s: f64| if count > 0 { s / count as f64 } else { f64::NAN };
            out.push(Aggregate {
                estimator: est,
                m,
                n,
                mean_e_nf: mean(s_nf),
                mean_e_gd: mean(s_gd),
                count,
                failures,
            });
        }
    }
    out
}

const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
const PANEL_W: f64 = 420.0;
const PANEL_H: f64 = 300.0;
const MARGIN: f64 = 55.0;

struct Panel<'a> {
    title: &'a str,
    /// `(label, points)`; only positive finite `y` are drawn.
    series: Vec<(String, Vec<(f64, f64)>)>,
    log_y: bool,
    stems: bool,
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn draw_panel(svg: &mut String, panel: &Panel<'_>, x0: f64) {
    let valid = |y: f64| y.is_finite() && (!panel.log_y || y > 0.0);
    let pts: Vec<(f64, f64)> =
        panel.series.iter().flat_map(|(_, p)| p.iter().copied()).filter(|&(x, y)| x.is_finite() && valid(y)).collect();
    let ty = |y: f64| if panel.log_y { y.log10() } else { y };
    let (mut xmin, mut xmax) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.0), b.max(p.0)));
    let (mut ymin, mut ymax) =
        pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(ty(p.1)), b.max(ty(p.1))));
    if pts.is_empty() {
        (xmin, xmax, ymin, ymax) = (0.0, 1.0, 0.0, 1.0);
    }
    if panel.stems && !panel.log_y {
        ymin = ymin.min(0.0);
    }
    if panel.log_y {
        ymin = ymin.floor();
        ymax = ymax.ceil();
    }
    if xmax - xmin < 1e-12 {
        xmin -= 0.5;
        xmax += 0.5;
    }
    if ymax - ymin < 1e-12 {
        ymin -= 0.5;
        ymax += 0.5;
    }
    let (pw, ph) = (PANEL_W - 2.0 * MARGIN, PANEL_H - 2.0 * MARGIN);
    let sx = |x: f64| x0 + MARGIN + (x - xmin) / (xmax - xmin) * pw;
    let sy = |y: f64| MARGIN + (1.0 - (ty(y) - ymin) / (ymax - ymin)) * ph;
    let _ = writeln!(
        svg,
        r##"<rect x="{:.1}" y="{MARGIN:.1}" width="{pw:.1}" height="{ph:.1}" fill="none" stroke="#000"/>"##,
        x0 + MARGIN
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="14">{}</text>"#,
        x0 + PANEL_W / 2.0,
        MARGIN - 15.0,
        esc(panel.title)
    );
    // y ticks: decades on a log axis, five steps otherwise
    let ticks: Vec<f64> = if panel.log_y {
        (ymin as i32..=ymax as i32).map(|k| 10f64.powi(k)).collect()
    } else {
        (0..=4).map(|i| ymin + (ymax - ymin) * i as f64 / 4.0).collect()
    };
    for t in ticks {
        let y = sy(t);
        let _ = writeln!(
            svg,
            r##"<line x1="{:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#ccc"/><text x="{:.1}" y="{:.1}" text-anchor="end" font-size="10">{t:.3e}</text>"##,
            x0 + MARGIN,
            x0 + MARGIN + pw,
            x0 + MARGIN - 4.0,
            y + 3.0
        );
    }
    for i in 0..=4 {
        let x = xmin + (xmax - xmin) * i as f64 / 4.0;
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="10">{x:.3}</text>"#,
            sx(x),
            MARGIN + ph + 14.0
        );
    }
    for (k, (label, series)) in panel.series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let pts: Vec<(f64, f64)> = series.iter().copied().filter(|&(x, y)| x.is_finite() && valid(y)).collect();
        if panel.stems {
            let base = if panel.log_y { 10f64.powf(ymin) } else { 0.0 };
            for &(x, y) in &pts {
                let _ = writeln!(
                    svg,
                    r#"<line x1="{0:.1}" y1="{1:.1}" x2="{0:.1}" y2="{2:.1}" stroke="{color}"/><circle cx="{0:.1}" cy="{2:.1}" r="2.5" fill="{color}"/>"#,
                    sx(x),
                    sy(base),
                    sy(y)
                );
            }
        } else {
            let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.1},{:.1}", sx(x), sy(y))).collect();
            let _ = writeln!(svg, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, path.join(" "));
            for &(x, y) in &pts {
                let _ = writeln!(svg, r#"<circle cx="{:.1}" cy="{:.1}" r="3" fill="{color}"/>"#, sx(x), sy(y));
            }
        }
        let ly = MARGIN + 12.0 + 14.0 * k as f64;
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{ly:.1}" font-size="11" fill="{color}">{}</text>"#,
            x0 + MARGIN + pw - 60.0,
            esc(label)
        );
    }
}

fn render(panels: &[Panel<'_>], x_label: &str) -> String {
    let width = PANEL_W * panels.len() as f64;
    let mut svg = format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{:.0}" viewBox="0 0 {width:.0} {:.0}" font-family="sans-serif">
<rect width="100%" height="100%" fill="white"/>
"#,
        PANEL_H + 10.0,
        PANEL_H + 10.0
    );
    for (i, p) in panels.iter().enumerate() {
        draw_panel(&mut svg, p, PANEL_W * i as f64);
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="12">{}</text>"#,
            PANEL_W * i as f64 + PANEL_W / 2.0,
            PANEL_H - 12.0,
            esc(x_label)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Error-versus-`N/M` figure as an SVG document: mean `E_NF` and `E_GD`, log-scaled.
pub fn error_curves_svg(aggregates: &[Aggregate]) -> String {
    let mut order: Vec<EstimatorKind> = Vec::new();
    for a in aggregates {
        if !order.contains(&a.estimator) {
            order.push(a.estimator);
        }
    }
    let series = |pick: fn(&Aggregate) -> f64| -> Vec<(String, Vec<(f64, f64)>)> {
        order
            .iter()
            .map(|&e| {
                let pts = aggregates.iter().filter(|a| a.estimator == e).map(|a| (a.ratio(), pick(a))).collect();
                (e.name().to_string(), pts)
            })
            .collect()
    };
    render(
        &[
            Panel {
                title: "normalized Frobenius error",
                series: series(|a| a.mean_e_nf),
                log_y: true,
                stems: false,
            },
            Panel {
                title: "Grassmannian distance",
                series: series(|a| a.mean_e_gd),
                log_y: true,
                stems: false,
            },
        ],
        "N / M",
    )
}

pub fn plot_svg(aggregates: &[Aggregate], path: &Path) -> Result<()> {
    std::fs::write(path, error_curves_svg(aggregates)).map_err(|e| CovError::io(path, e))
}

/// Stem plot of eigenvalues against their index, one panel per series.
pub fn eigenvalues_svg(series: &[(String, Vec<f64>)]) -> String {
    let panels: Vec<Panel<'_>> = series
        .iter()
        .map(|(title, values)| Panel {
            title,
            series: vec![(String::new(), values.iter().enumerate().map(|(i, &v)| ((i + 1) as f64, v)).collect())],
            log_y: false,
            stems: true,
        })
        .collect();
    render(&panels, "index")
}

pub fn plot_eigenvalues_svg(series: &[(String, Vec<f64>)], path: &Path) -> Result<()> {
    std::fs::write(path, eigenvalues_svg(series)).map_err(|e| CovError::io(path, e))
}
