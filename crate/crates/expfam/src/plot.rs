//! Plot data derived purely from report files, so every figure can be
//! regenerated without rerunning experiments.
//!
//! Two series come out of a report set: the measured regret against
//! the horizon, and each applicable bound against the horizon (the
//! report builders name bound rows `*_bound`, which is how they are
//! recognized here). Both are written as a plain CSV and as a small
//! self-contained SVG with one polyline per series.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::csvio::ReportRow;
use crate::error::{Error, Result};

pub type ReportSet = Vec<(Vec<ReportRow>, BTreeMap<String, String>)>;

struct Point {
    trials: f64,
    seed: u64,
    value: f64,
}

fn trials_of(meta: &BTreeMap<String, String>) -> Result<f64> {
    meta.get("trials")
        .and_then(|s| s.parse::<f64>().ok())
        .ok_or_else(|| Error::Precondition("report lacks usable `trials` metadata".into()))
}

fn seed_of(meta: &BTreeMap<String, String>) -> u64 {
    meta.get("seed").and_then(|s| s.parse().ok()).unwrap_or(0)
}

fn sort_points(points: &mut [Point]) {
    points.sort_by(|a, b| {
        a.trials
            .partial_cmp(&b.trials)
            .unwrap()
            .then(a.seed.cmp(&b.seed))
    });
}

/// Writes the series files for a nonempty report set and returns the
/// paths created: `<prefix>_regret_vs_trials.{csv,svg}` always, and
/// `<prefix>_bounds_vs_trials.{csv,svg}` when any bound row applies.
pub fn emit_plotdata(reports: &ReportSet, prefix: &Path) -> Result<Vec<PathBuf>> {
    if reports.is_empty() {
        return Err(Error::Precondition(
            "plotting needs at least one report".into(),
        ));
    }
    if let Some(dir) = prefix.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }

    let mut regret = Vec::new();
    let mut bounds: BTreeMap<String, Vec<Point>> = BTreeMap::new();
    for (rows, meta) in reports {
        let trials = trials_of(meta)?;
        let seed = seed_of(meta);
        for row in rows {
            if row.name == "regret" {
                regret.push(Point {
                    trials,
                    seed,
                    value: row.value,
                });
            } else if row.name.ends_with("_bound") && row.applicable && row.value.is_finite() {
                bounds.entry(row.name.clone()).or_default().push(Point {
                    trials,
                    seed,
                    value: row.value,
                });
            }
        }
    }
    if regret.is_empty() {
        return Err(Error::Precondition(
            "no regret rows found in the report set".into(),
        ));
    }
    sort_points(&mut regret);
    for series in bounds.values_mut() {
        sort_points(series);
    }

    let stem = |suffix: &str| {
        let mut name = prefix.file_name().unwrap_or_default().to_os_string();
        name.push(suffix);
        prefix.with_file_name(name)
    };
    let mut written = Vec::new();

    let mut csv = String::from("trials,regret\n");
    for p in &regret {
        csv.push_str(&format!("{},{:.16e}\n", p.trials, p.value));
    }
    let path = stem("_regret_vs_trials.csv");
    std::fs::write(&path, csv)?;
    written.push(path);
    let svg = render_svg(
        "regret vs horizon",
        &[("regret".to_string(), &regret)],
    );
    let path = stem("_regret_vs_trials.svg");
    std::fs::write(&path, svg)?;
    written.push(path);

    if !bounds.is_empty() {
        let mut csv = String::from("trials,name,value\n");
        for (name, series) in &bounds {
            for p in series {
                csv.push_str(&format!("{},{},{:.16e}\n", p.trials, name, p.value));
            }
        }
        let path = stem("_bounds_vs_trials.csv");
        std::fs::write(&path, csv)?;
        written.push(path);

        let mut series: Vec<(String, &[Point])> =
            vec![("regret".to_string(), regret.as_slice())];
        for (name, points) in &bounds {
            series.push((name.clone(), points.as_slice()));
        }
        let svg = render_svg(
            "regret and bounds vs horizon",
            &series
                .iter()
                .map(|(n, p)| (n.clone(), *p))
                .collect::<Vec<_>>(),
        );
        let path = stem("_bounds_vs_trials.svg");
        std::fs::write(&path, svg)?;
        written.push(path);
    }
    Ok(written)
}

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

const W: f64 = 640.0;
const H: f64 = 480.0;
const ML: f64 = 70.0; // left margin leaves room for y tick labels
const MR: f64 = 20.0;
const MT: f64 = 40.0;
const MB: f64 = 50.0;

fn tick_label(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        return format!("{v:.2e}");
    }
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s.is_empty() { "0".into() } else { s.into() }
}

fn render_svg(title: &str, series: &[(String, &[Point])]) -> String {
    let finite: Vec<(f64, f64)> = series
        .iter()
        .flat_map(|(_, pts)| pts.iter().map(|p| (p.trials, p.value)))
        .filter(|(x, y)| x.is_finite() && y.is_finite())
        .collect();
    let (mut x0, mut x1) = finite
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (x, _)| {
            (lo.min(*x), hi.max(*x))
        });
    let (mut y0, mut y1) = finite
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (_, y)| {
            (lo.min(*y), hi.max(*y))
        });
    if !x0.is_finite() {
        (x0, x1) = (0.0, 1.0);
    }
    if !y0.is_finite() {
        (y0, y1) = (0.0, 1.0);
    }
    if x0 == x1 {
        x1 = x0 + 1.0;
    }
    if y0 == y1 {
        y1 = y0 + 1.0;
    }
    let pad = 0.05 * (y1 - y0);
    let (y0, y1) = (y0 - pad, y1 + pad);
    let sx = |x: f64| ML + (x - x0) / (x1 - x0) * (W - ML - MR);
    let sy = |y: f64| H - MB - (y - y0) / (y1 - y0) * (H - MT - MB);

    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {W} {H}\" \
         font-family=\"sans-serif\" font-size=\"12\">\n\
         <rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n\
         <text x=\"{:.1}\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">{title}</text>\n",
        (ML + W - MR) / 2.0
    );
    // axes
    svg.push_str(&format!(
        "<line x1=\"{ML}\" y1=\"{MT}\" x2=\"{ML}\" y2=\"{:.1}\" stroke=\"black\"/>\n\
         <line x1=\"{ML}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"black\"/>\n",
        H - MB,
        H - MB,
        W - MR,
        H - MB
    ));
    for i in 0..=4 {
        let fx = x0 + (x1 - x0) * i as f64 / 4.0;
        let fy = y0 + (y1 - y0) * i as f64 / 4.0;
        svg.push_str(&format!(
            "<line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"black\"/>\n\
             <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>\n",
            sx(fx),
            H - MB,
            sx(fx),
            H - MB + 5.0,
            sx(fx),
            H - MB + 20.0,
            tick_label(fx)
        ));
        svg.push_str(&format!(
            "<line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{ML}\" y2=\"{:.1}\" stroke=\"black\"/>\n\
             <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{}</text>\n",
            ML - 5.0,
            sy(fy),
            sy(fy),
            ML - 8.0,
            sy(fy) + 4.0,
            tick_label(fy)
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">trials</text>\n",
        (ML + W - MR) / 2.0,
        H - 12.0
    ));
    for (i, (label, points)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let path: Vec<String> = points
            .iter()
            .filter(|p| p.trials.is_finite() && p.value.is_finite())
            .map(|p| format!("{:.1},{:.1}", sx(p.trials), sy(p.value)))
            .collect();
        if path.len() > 1 {
            svg.push_str(&format!(
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
                path.join(" ")
            ));
        }
        for p in &path {
            let (x, y) = p.split_once(',').unwrap();
            svg.push_str(&format!(
                "<circle cx=\"{x}\" cy=\"{y}\" r=\"2.5\" fill=\"{color}\"/>\n"
            ));
        }
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" fill=\"{color}\">{label}</text>\n",
            W - MR - 220.0,
            MT + 16.0 * i as f64 + 12.0
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ExperimentConfig;
    use crate::csvio;
    use crate::experiment;

    fn gaussian_boundary_report(trials: usize) -> (Vec<ReportRow>, BTreeMap<String, String>) {
        let mut c = ExperimentConfig::default();
        c.set("family", "gaussian").unwrap();
        c.set("mode", "forward").unwrap();
        c.set("eta_b_inv", "1").unwrap();
        c.set("sequence", "adversarial_boundary(2)").unwrap();
        c.set("seed", "3").unwrap();
        c.set("trials", &trials.to_string()).unwrap();
        let (_, report) = experiment::execute(&c).unwrap();
        (csvio::report_rows(&report), c.metadata())
    }

    #[test]
    fn empty_sets_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        match emit_plotdata(&Vec::new(), &dir.path().join("fig")) {
            Err(Error::Precondition(_)) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn one_report_yields_one_series() {
        let dir = tempfile::tempdir().unwrap();
        let reports = vec![gaussian_boundary_report(10)];
        let written = emit_plotdata(&reports, &dir.path().join("fig")).unwrap();
        let csv_path = &written[0];
        let text = std::fs::read_to_string(csv_path).unwrap();
        assert_eq!(text.lines().count(), 2, "{text}");
        assert!(text.starts_with("trials,regret\n10,"));
        let svg = std::fs::read_to_string(&written[1]).unwrap();
        assert!(svg.starts_with("<svg") && svg.contains("</svg>"));
    }

    #[test]
    fn bound_series_follows_the_log_curve() {
        // forward mode at w = 1 starts the schedule at 2, and boundary
        // examples fix X² = 4, so the logarithmic bound row must equal
        // (4/2)·ln(1 + T/(2−1)) exactly, growing with the horizon
        let dir = tempfile::tempdir().unwrap();
        let reports: ReportSet = [5usize, 10, 20, 40]
            .iter()
            .map(|&t| gaussian_boundary_report(t))
            .collect();
        let written = emit_plotdata(&reports, &dir.path().join("fig")).unwrap();
        assert_eq!(written.len(), 4, "{written:?}");
        let bounds = std::fs::read_to_string(&written[2]).unwrap();
        let mut curve = Vec::new();
        for line in bounds.lines().skip(1) {
            let cells: Vec<&str> = line.split(',').collect();
            if cells[1] == "gaussian_log_bound" {
                curve.push((
                    cells[0].parse::<f64>().unwrap(),
                    cells[2].parse::<f64>().unwrap(),
                ));
            }
        }
        assert_eq!(curve.len(), 4);
        for (t, v) in &curve {
            let expected = 2.0 * (1.0 + t).ln();
            assert!((v - expected).abs() < 1e-12, "T={t}: {v} vs {expected}");
        }
        assert!(curve.windows(2).all(|w| w[0].1 < w[1].1));
    }
}
