//! Report export: CSV tables, JSON summaries and SVG heatmaps/scatters.
//!
//! Output bytes depend only on the input results. Numbers are written in
//! shortest round-trip form so exported values equal the in-memory ones.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::answer::ScoreKind;
use crate::error::{Error, Result};
use crate::experiment::{Aggregate, CrossDomainResult, Matrix, SweepResult};

pub const SWEEP_FILE: &str = "sweep.json";
pub const CROSSDOMAIN_FILE: &str = "crossdomain.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Csv,
    Json,
    SvgHeatmap,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            "svg" | "svg_heatmap" => Ok(Self::SvgHeatmap),
            other => Err(Error::InvalidConfig(format!("unknown report format `{other}`"))),
        }
    }
}

/// Experiment output that a report can be rendered from.
#[derive(Debug, Clone, PartialEq)]
pub enum Results {
    Sweep(SweepResult),
    CrossDomain(Box<CrossDomainResult>),
}

/// Writes `value` as pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Reads every result file found in `dir`.
pub fn load_results(dir: &Path) -> Result<Vec<Results>> {
    let mut out = Vec::new();
    let sweep = dir.join(SWEEP_FILE);
    if sweep.exists() {
        out.push(Results::Sweep(serde_json::from_str(&fs::read_to_string(sweep)?)?));
    }
    let cross = dir.join(CROSSDOMAIN_FILE);
    if cross.exists() {
        out.push(Results::CrossDomain(Box::new(serde_json::from_str(&fs::read_to_string(cross)?)?)));
    }
    if out.is_empty() {
        return Err(Error::InvalidConfig(format!(
            "no {SWEEP_FILE} or {CROSSDOMAIN_FILE} in {}",
            dir.display()
        )));
    }
    Ok(out)
}

/// Renders `results` into `out_dir`; returns written paths in order.
pub fn emit_report(results: &[Results], format: ReportFormat, out_dir: &Path) -> Result<Vec<PathBuf>> {
    if results.is_empty() {
        return Err(Error::InvalidConfig("nothing to report".into()));
    }
    fs::create_dir_all(out_dir)?;
    let mut files: Vec<(String, Vec<u8>)> = Vec::new();
    for r in results {
        match (r, format) {
            (Results::Sweep(s), ReportFormat::Csv) => {
                files.push(("sweep.csv".into(), sweep_csv(&s.rows)?));
                files.push(("operating_points.csv".into(), operating_points_csv(&s.rows)?));
            }
            (Results::Sweep(s), ReportFormat::Json) => {
                files.push(("sweep_summary.json".into(), summary_json(&s.ssm_def, &s.rows)?));
            }
            (Results::Sweep(s), ReportFormat::SvgHeatmap) => {
                files.push(("operating_points.svg".into(), operating_points_svg(&s.rows).into_bytes()));
            }
            (Results::CrossDomain(c), ReportFormat::Csv) => {
                for (name, m) in named_matrices(c) {
                    files.push((format!("{name}.csv"), matrix_csv(&c.domains, &m)?));
                }
                files.push(("crossdomain_cells.csv".into(), sweep_csv(&c.cells)?));
            }
            (Results::CrossDomain(c), ReportFormat::Json) => {
                files.push(("crossdomain_summary.json".into(), summary_json(&c.ssm_def, &c.cells)?));
            }
            (Results::CrossDomain(c), ReportFormat::SvgHeatmap) => {
                for (name, m) in named_matrices(c) {
                    let svg = heatmap_svg(&name, &c.domains, &m, name.ends_with("_diff"));
                    files.push((format!("{name}.svg"), svg.into_bytes()));
                }
            }
        }
    }
    let mut written = Vec::with_capacity(files.len());
    for (name, bytes) in files {
        let path = out_dir.join(name);
        fs::write(&path, bytes)?;
        written.push(path);
    }
    Ok(written)
}

/// `(file stem, matrix)` pairs of a cross-domain result.
pub fn named_matrices(c: &CrossDomainResult) -> Vec<(String, Matrix)> {
    let mut out = vec![
        (format!("emr_{}", c.primary.score_kind), c.primary.emr.clone()),
        (format!("apss_{}", c.primary.score_kind), c.primary.apss.clone()),
    ];
    if c.comparator.score_kind != c.primary.score_kind {
        out.push((format!("emr_{}", c.comparator.score_kind), c.comparator.emr.clone()));
        out.push((format!("apss_{}", c.comparator.score_kind), c.comparator.apss.clone()));
        out.push(("emr_diff".into(), c.emr_diff.clone()));
        out.push(("apss_diff".into(), c.apss_diff.clone()));
    }
    out
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn finish_csv(w: csv::Writer<Vec<u8>>) -> Result<Vec<u8>> {
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

fn sweep_csv(rows: &[Aggregate]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "score_kind", "alpha", "cal_domain", "test_domain", "n_trials", "emr_mean", "emr_std", "apss_mean", "apss_std",
        "ssm_mean", "ssm_std", "risk_floor_mean", "fano_bound_mean", "alpha_below_floor_trials",
    ])
    .map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.score_kind.to_string(),
            num(r.alpha),
            r.cal_domain.clone(),
            r.test_domain.clone(),
            r.n_trials.to_string(),
            num(r.emr.mean),
            num(r.emr.std),
            num(r.apss.mean),
            num(r.apss.std),
            num(r.ssm.mean),
            num(r.ssm.std),
            num(r.risk_floor.mean),
            opt_num(r.fano_bound.map(|f| f.mean)),
            r.alpha_below_floor_trials.to_string(),
        ])
        .map_err(csv_err)?;
    }
    finish_csv(w)
}

fn operating_points_csv(rows: &[Aggregate]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["score_kind", "alpha", "emr", "apss"]).map_err(csv_err)?;
    for r in rows {
        w.write_record([r.score_kind.to_string(), num(r.alpha), num(r.emr.mean), num(r.apss.mean)])
            .map_err(csv_err)?;
    }
    finish_csv(w)
}

fn matrix_csv(domains: &[String], m: &Matrix) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["cal_domain", "test_domain", "value"]).map_err(csv_err)?;
    for (i, row) in m.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            w.write_record([domains[i].as_str(), domains[j].as_str(), &num(*v)]).map_err(csv_err)?;
        }
    }
    finish_csv(w)
}

fn summary_json(ssm_def: &str, rows: &[Aggregate]) -> Result<Vec<u8>> {
    #[derive(Serialize)]
    struct Summary<'a> {
        ssm_def: &'a str,
        rows: &'a [Aggregate],
    }
    let mut text = serde_json::to_string_pretty(&Summary { ssm_def, rows })?;
    text.push('\n');
    Ok(text.into_bytes())
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Sequential white-to-blue, or diverging blue-white-red when `diverging`.
fn color(v: f64, lo: f64, hi: f64, diverging: bool) -> String {
    let lerp = |a: f64, b: f64, t: f64| (a + (b - a) * t).round() as u8;
    if diverging {
        let span = lo.abs().max(hi.abs());
        let t = if span > 0.0 { (v / span).clamp(-1.0, 1.0) } else { 0.0 };
        let (r, g, b) = if t >= 0.0 {
            (lerp(255.0, 200.0, t), lerp(255.0, 40.0, t), lerp(255.0, 40.0, t))
        } else {
            (lerp(255.0, 40.0, -t), lerp(255.0, 90.0, -t), lerp(255.0, 200.0, -t))
        };
        format!("#{r:02x}{g:02x}{b:02x}")
    } else {
        let t = if hi > lo { ((v - lo) / (hi - lo)).clamp(0.0, 1.0) } else { 0.0 };
        format!("#{:02x}{:02x}{:02x}", lerp(247.0, 8.0, t), lerp(251.0, 69.0, t), lerp(255.0, 148.0, t))
    }
}

const CELL: usize = 64;
const MARGIN: usize = 110;

fn heatmap_svg(title: &str, domains: &[String], m: &Matrix, diverging: bool) -> String {
    let d = domains.len();
    let (lo, hi) = m
        .iter()
        .flatten()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let width = MARGIN + d * CELL + 20;
    let height = MARGIN + d * CELL + 20;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<title>{}</title>"#, escape(title));
    let _ = writeln!(s, r#"<text x="{}" y="18" font-size="14">{}</text>"#, MARGIN, escape(title));
    let _ = writeln!(s, r#"<text x="{}" y="40">test domain</text>"#, MARGIN);
    let _ = writeln!(s, r#"<text x="8" y="{}">cal domain</text>"#, MARGIN - 8);
    for (j, name) in domains.iter().enumerate() {
        let x = MARGIN + j * CELL + CELL / 2;
        let _ = writeln!(s, r#"<text x="{x}" y="{}" text-anchor="middle">{}</text>"#, MARGIN - 8, escape(name));
    }
    for (i, row) in m.iter().enumerate() {
        let y = MARGIN + i * CELL;
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, MARGIN - 8, y + CELL / 2 + 4, escape(&domains[i]));
        for (j, &v) in row.iter().enumerate() {
            let x = MARGIN + j * CELL;
            let _ = writeln!(
                s,
                r##"<rect class="cell" x="{x}" y="{y}" width="{CELL}" height="{CELL}" fill="{}" stroke="#ffffff" data-cal="{}" data-test="{}" data-value="{}"/>"##,
                color(v, lo, hi, diverging),
                escape(&domains[i]),
                escape(&domains[j]),
                num(v)
            );
            let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{v:.3}</text>"#, x + CELL / 2, y + CELL / 2 + 4);
        }
    }
    s.push_str("</svg>\n");
    s
}

fn kind_color(kind: ScoreKind) -> &'static str {
    match kind {
        ScoreKind::Layerwise => "#1f77b4",
        ScoreKind::FrequencyOnly => "#d62728",
        ScoreKind::EntropyBaseline => "#2ca02c",
    }
}

fn operating_points_svg(rows: &[Aggregate]) -> String {
    const W: f64 = 480.0;
    const H: f64 = 360.0;
    const PAD: f64 = 50.0;
    let max_emr = rows.iter().map(|r| r.emr.mean).fold(0.0, f64::max).max(1e-9) * 1.1;
    let max_apss = rows.iter().map(|r| r.apss.mean).fold(0.0, f64::max).max(1e-9) * 1.1;
    let px = |emr: f64| PAD + emr / max_emr * (W - 2.0 * PAD);
    let py = |apss: f64| H - PAD - apss / max_apss * (H - 2.0 * PAD);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, "<title>EMR-APSS operating points</title>");
    let _ = writeln!(s, r##"<line x1="{PAD}" y1="{}" x2="{}" y2="{}" stroke="#000"/>"##, H - PAD, W - PAD, H - PAD);
    let _ = writeln!(s, r##"<line x1="{PAD}" y1="{PAD}" x2="{PAD}" y2="{}" stroke="#000"/>"##, H - PAD);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">EMR</text>"#, W / 2.0, H - 12.0);
    let _ = writeln!(s, r#"<text x="14" y="{}" transform="rotate(-90 14 {})" text-anchor="middle">APSS</text>"#, H / 2.0, H / 2.0);
    for r in rows {
        let (x, y) = (px(r.emr.mean), py(r.apss.mean));
        let _ = writeln!(
            s,
            r#"<circle class="point" cx="{x:.2}" cy="{y:.2}" r="4" fill="{}" data-kind="{}" data-alpha="{}" data-emr="{}" data-apss="{}"/>"#,
            kind_color(r.score_kind),
            r.score_kind,
            num(r.alpha),
            num(r.emr.mean),
            num(r.apss.mean)
        );
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, x + 6.0, y - 4.0, num(r.alpha));
    }
    let mut legend_y = PAD;
    for kind in ScoreKind::ALL {
        if rows.iter().any(|r| r.score_kind == kind) {
            let _ = writeln!(s, r#"<circle cx="{}" cy="{legend_y}" r="4" fill="{}"/>"#, W - 150.0, kind_color(kind));
            let _ = writeln!(s, r#"<text x="{}" y="{}">{kind}</text>"#, W - 140.0, legend_y + 4.0);
            legend_y += 16.0;
        }
    }
    s.push_str("</svg>\n");
    s
}
