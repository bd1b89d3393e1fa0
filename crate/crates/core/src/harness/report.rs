use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{CellFailure, CellSummary, HarnessError, MatrixResult};
use crate::bcp::BoundReport;

/// Paths written by [`write_reports`].
#[derive(Debug, Clone, PartialEq)]
pub struct ReportFiles {
    pub results: PathBuf,
    pub summary_csv: PathBuf,
    pub summary_json: PathBuf,
    pub bound: PathBuf,
    pub plot: PathBuf,
    pub failures: Option<PathBuf>,
    pub traces: Vec<PathBuf>,
}

#[derive(Serialize)]
struct SummaryDoc<'a> {
    scenario: &'a str,
    seed: u64,
    bound: &'a BoundReport,
    cells: &'a [CellSummary],
    failures: &'a [CellFailure],
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| x.to_string())
}

pub fn results_csv(res: &MatrixResult) -> String {
    let mut s = String::from("scenario,policy,r,T,rep,seed,J,J_noburn");
    for i in 1..=res.num_resources {
        let _ = write!(s, ",W_avg_{i}");
    }
    s.push_str(",resA_sup,resS_avg,alloc_drift,wall_ms\n");
    for row in &res.rows {
        let _ = write!(
            s,
            "{},{},{},{},{},{},{},{}",
            row.scenario,
            row.policy,
            row.r,
            row.horizon,
            row.rep,
            row.seed,
            row.cost,
            row.cost_no_burn
        );
        for w in &row.workload_avg {
            let _ = write!(s, ",{w}");
        }
        let _ = writeln!(
            s,
            ",{},{},{},{}",
            row.res_a_sup, row.res_s_avg, row.alloc_drift, row.wall_ms
        );
    }
    s
}

pub fn summary_csv(res: &MatrixResult) -> String {
    let mut s = String::from("scenario,policy,r,T,n,mean_J,se,ci95,bound,gap,gap_se\n");
    for c in &res.summaries {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{}",
            res.scenario,
            c.policy,
            c.r,
            c.horizon,
            c.n,
            c.mean,
            c.se,
            c.ci95,
            opt(res.bound.bound_value),
            opt(c.gap),
            opt(c.gap_se)
        );
    }
    s
}

const COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

/// Mean cost against `r`, one polyline per policy, with the bound as a
/// dashed horizontal line.
pub fn render_svg(res: &MatrixResult) -> String {
    let (w, h) = (640.0, 420.0);
    let (left, right, top, bottom) = (70.0, 150.0, 40.0, 50.0);
    let pw = w - left - right;
    let ph = h - top - bottom;

    let mut policies: Vec<&str> = Vec::new();
    for c in &res.summaries {
        if !policies.contains(&c.policy.as_str()) {
            policies.push(&c.policy);
        }
    }
    let rs: Vec<f64> = res.summaries.iter().map(|c| f64::from(c.r)).collect();
    let mut ys: Vec<f64> = res
        .summaries
        .iter()
        .flat_map(|c| [c.mean - c.ci95, c.mean + c.ci95])
        .filter(|v| v.is_finite())
        .collect();
    if let Some(b) = res.bound.bound_value {
        ys.push(b);
    }
    let (mut x0, mut x1) = bounds(&rs);
    let (mut y0, mut y1) = bounds(&ys);
    y0 = y0.min(0.0);
    if x1 - x0 < 1e-12 {
        x0 -= 1.0;
        x1 += 1.0;
    }
    if y1 - y0 < 1e-12 {
        y1 = y0 + 1.0;
    }
    y1 += 0.05 * (y1 - y0);
    let sx = |x: f64| left + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| top + (1.0 - (y - y0) / (y1 - y0)) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}: mean J vs r</text>"#,
        left + pw / 2.0,
        escape(&res.scenario)
    );
    let _ = writeln!(
        s,
        r#"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for k in 0..=4 {
        let v = y0 + (y1 - y0) * f64::from(k) / 4.0;
        let y = sy(v);
        let _ = writeln!(
            s,
            r##"<line x1="{}" y1="{y:.2}" x2="{left}" y2="{y:.2}" stroke="black"/><text x="{}" y="{:.2}" text-anchor="end">{}</text>"##,
            left - 4.0,
            left - 6.0,
            y + 4.0,
            fmt_tick(v)
        );
    }
    let mut ticks: Vec<u32> = res.summaries.iter().map(|c| c.r).collect();
    ticks.sort_unstable();
    ticks.dedup();
    for r in ticks {
        let x = sx(f64::from(r));
        let _ = writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{}" x2="{x:.2}" y2="{}" stroke="black"/><text x="{x:.2}" y="{}" text-anchor="middle">{r}</text>"#,
            top + ph,
            top + ph + 4.0,
            top + ph + 18.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">r</text>"#,
        left + pw / 2.0,
        h - 10.0
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">mean J</text>"#,
        top + ph / 2.0,
        top + ph / 2.0
    );

    let mut legend_y = top + 10.0;
    let lx = left + pw + 15.0;
    if let Some(b) = res.bound.bound_value {
        let y = sy(b);
        let _ = writeln!(
            s,
            r#"<line x1="{left}" y1="{y:.2}" x2="{}" y2="{y:.2}" stroke="black" stroke-dasharray="6 4"/>"#,
            left + pw
        );
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{legend_y}" x2="{}" y2="{legend_y}" stroke="black" stroke-dasharray="6 4"/><text x="{}" y="{}">bound</text>"#,
            lx + 20.0,
            lx + 26.0,
            legend_y + 4.0
        );
        legend_y += 18.0;
    }
    for (k, p) in policies.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let pts: Vec<(f64, f64)> = res
            .summaries
            .iter()
            .filter(|c| c.policy == *p)
            .map(|c| (sx(f64::from(c.r)), sy(c.mean)))
            .collect();
        if pts.len() > 1 {
            let path: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
            let _ = writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
                path.join(" ")
            );
        }
        for (x, y) in &pts {
            let _ = writeln!(
                s,
                r#"<circle cx="{x:.2}" cy="{y:.2}" r="3.5" fill="{color}"/>"#
            );
        }
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{legend_y}" x2="{}" y2="{legend_y}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
            lx + 20.0,
            lx + 26.0,
            legend_y + 4.0,
            escape(p)
        );
        legend_y += 18.0;
    }
    s.push_str("</svg>\n");
    s
}

fn bounds(v: &[f64]) -> (f64, f64) {
    let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if lo.is_finite() && hi.is_finite() {
        (lo, hi)
    } else {
        (0.0, 1.0)
    }
}

fn fmt_tick(v: f64) -> String {
    if v.abs() >= 100.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Writes `results.csv`, `summary.csv`, `summary.json`, `bound.json`,
/// `plot.svg` and, when present, `failures.csv` and `traces/*.csv` into `dir`.
pub fn write_reports(res: &MatrixResult, dir: &Path) -> Result<ReportFiles, HarnessError> {
    if res.rows.is_empty() && res.failures.is_empty() {
        return Err(HarnessError::EmptyMatrix("no results"));
    }
    fs::create_dir_all(dir)?;
    let files = ReportFiles {
        results: dir.join("results.csv"),
        summary_csv: dir.join("summary.csv"),
        summary_json: dir.join("summary.json"),
        bound: dir.join("bound.json"),
        plot: dir.join("plot.svg"),
        failures: (!res.failures.is_empty()).then(|| dir.join("failures.csv")),
        traces: res
            .traces
            .iter()
            .map(|(p, r, _)| dir.join("traces").join(format!("{p}_r{r}.csv")))
            .collect(),
    };
    fs::write(&files.results, results_csv(res))?;
    fs::write(&files.summary_csv, summary_csv(res))?;
    let doc = SummaryDoc {
        scenario: &res.scenario,
        seed: res.seed,
        bound: &res.bound,
        cells: &res.summaries,
        failures: &res.failures,
    };
    fs::write(&files.summary_json, to_json(&doc)?)?;
    fs::write(&files.bound, to_json(&res.bound)?)?;
    fs::write(&files.plot, render_svg(res))?;
    if let Some(path) = &files.failures {
        let mut s = String::from("policy,r,rep,error\n");
        for f in &res.failures {
            let _ = writeln!(
                s,
                "{},{},{},\"{}\"",
                f.policy,
                f.r,
                f.rep,
                f.error.replace('"', "'")
            );
        }
        fs::write(path, s)?;
    }
    if !res.traces.is_empty() {
        fs::create_dir_all(dir.join("traces"))?;
        for ((_, _, csv), path) in res.traces.iter().zip(&files.traces) {
            fs::write(path, csv)?;
        }
    }
    Ok(files)
}

pub fn to_json<T: Serialize>(v: &T) -> Result<String, HarnessError> {
    serde_json::to_string_pretty(v)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| HarnessError::Io(std::io::Error::other(e)))
}
