//! CSV artifacts and their readers.
//!
//! Every file starts with `# key = value` metadata, then a header row,
//! then data. Floats are written with 17 significant digits so a read
//! back reproduces the exact bits (`inf` and `NaN` round-trip too).
//! Writers emit `\n` line endings and ordered metadata, so a fixed
//! config and seed produce byte-identical files on every platform.

use std::collections::BTreeMap;

use crate::config::{parse_real, RateSpec};
use crate::error::{Error, Result};
use crate::families::{Example, ExpectationParam, Family};
use crate::linalg::Matrix;
use crate::online::{Mode, Trace, TraceRecord};
use crate::regression::{self, LabeledExample, RegressionTrace};
use crate::regret::{RegretReport, BOUND_SLACK, IDENTITY_TOLERANCE};

fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_reals(vs: &[f64]) -> String {
    vs.iter().map(|&v| fmt_real(v)).collect::<Vec<_>>().join(",")
}

fn fmt_matrix(m: &Matrix<f64>) -> String {
    (0..m.dim())
        .map(|i| fmt_reals(&(0..m.dim()).map(|j| m.get(i, j)).collect::<Vec<_>>()))
        .collect::<Vec<_>>()
        .join(";")
}

fn write_meta(out: &mut String, structural: &[(&str, String)], extra: &BTreeMap<String, String>) {
    for (k, v) in structural {
        out.push_str(&format!("# {k} = {v}\n"));
    }
    for (k, v) in extra {
        if structural.iter().all(|(s, _)| s != k) {
            out.push_str(&format!("# {k} = {v}\n"));
        }
    }
}

/// Metadata pairs, the header line, and data rows tagged with line numbers.
type FileSections = (BTreeMap<String, String>, String, Vec<(usize, String)>);

/// Splits a file into its sections.
fn split_csv(text: &str) -> Result<FileSections> {
    let mut meta = BTreeMap::new();
    let mut header = None;
    let mut rows = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let (k, v) = rest.split_once('=').ok_or_else(|| Error::Parse {
                line: i + 1,
                message: format!("metadata line {raw:?} is not `# key = value`"),
            })?;
            meta.insert(k.trim().to_string(), v.trim().to_string());
        } else if header.is_none() {
            header = Some(line.to_string());
        } else {
            rows.push((i + 1, line.to_string()));
        }
    }
    let header = header.ok_or_else(|| Error::Parse {
        line: 1,
        message: "file has no header row".into(),
    })?;
    Ok((meta, header, rows))
}

/// The `family` metadata value, read without committing to a schema;
/// callers dispatch between the density and regression parsers on it.
pub fn sniff_family(text: &str) -> Result<String> {
    let (meta, _, _) = split_csv(text)?;
    meta_field(&meta, "family").map(str::to_string)
}

fn meta_field<'a>(meta: &'a BTreeMap<String, String>, key: &str) -> Result<&'a str> {
    meta.get(key).map(|s| s.as_str()).ok_or_else(|| Error::Parse {
        line: 1,
        message: format!("missing metadata key {key:?}"),
    })
}

fn row_field(row: &[&str], idx: usize, line: usize, what: &str) -> Result<f64> {
    let cell = row.get(idx).ok_or_else(|| Error::Parse {
        line,
        message: format!("row too short, no {what} column"),
    })?;
    cell.trim().parse::<f64>().map_err(|_| Error::Parse {
        line,
        message: format!("bad {what} value {cell:?}"),
    })
}

fn expect_header(got: &str, want: &str) -> Result<()> {
    if got != want {
        return Err(Error::Parse {
            line: 1,
            message: format!("unexpected header {got:?}, expected {want:?}"),
        });
    }
    Ok(())
}

fn indexed(stem: &str, dim: usize) -> String {
    (0..dim)
        .map(|j| format!("{stem}_{j}"))
        .collect::<Vec<_>>()
        .join(",")
}

/// Density trace: config echo plus one row per trial.
pub fn density_trace_csv(trace: &Trace<f64>, extra: &BTreeMap<String, String>) -> String {
    let dim = trace.family().dim();
    let mut out = String::new();
    write_meta(
        &mut out,
        &[
            ("family", trace.family().name().to_string()),
            ("dim", dim.to_string()),
            ("mode", trace.mode().name().to_string()),
            ("mu1", fmt_reals(trace.mu1().as_slice())),
            ("eta_b_inv", fmt_real(trace.eta_b_inv())),
            ("final_mu", fmt_reals(trace.final_mu().as_slice())),
        ],
        extra,
    );
    out.push_str(&format!(
        "trial,{},{},loss,inv_rate\n",
        indexed("prediction", dim),
        indexed("example", dim)
    ));
    for r in trace.records() {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.trial,
            fmt_reals(r.prediction.as_slice()),
            fmt_reals(r.example.as_slice()),
            fmt_real(r.loss),
            fmt_real(r.inv_rate)
        ));
    }
    out
}

pub fn parse_density_trace(text: &str) -> Result<(Trace<f64>, BTreeMap<String, String>)> {
    let (meta, header, rows) = split_csv(text)?;
    let dim: usize = meta_field(&meta, "dim")?.parse().map_err(|_| Error::Parse {
        line: 1,
        message: "bad dim metadata".into(),
    })?;
    let family: Family<f64> = meta_field(&meta, "family")?
        .parse::<crate::config::FamilyChoice>()?
        .family(dim)?;
    let mode: Mode = meta_field(&meta, "mode")?.parse()?;
    let mu1 = ExpectationParam::new(parse_reals(meta_field(&meta, "mu1")?, "mu1")?);
    let eta_b_inv = parse_real(meta_field(&meta, "eta_b_inv")?, "eta_b_inv")?;
    let final_mu = ExpectationParam::new(parse_reals(meta_field(&meta, "final_mu")?, "final_mu")?);
    expect_header(
        &header,
        &format!(
            "trial,{},{},loss,inv_rate",
            indexed("prediction", dim),
            indexed("example", dim)
        ),
    )?;
    let mut records = Vec::with_capacity(rows.len());
    for (line, row) in rows {
        let cells: Vec<&str> = row.split(',').collect();
        if cells.len() != 2 * dim + 3 {
            return Err(Error::Parse {
                line,
                message: format!("expected {} columns, got {}", 2 * dim + 3, cells.len()),
            });
        }
        let trial = cells[0].trim().parse::<u64>().map_err(|_| Error::Parse {
            line,
            message: format!("bad trial index {:?}", cells[0]),
        })?;
        let mut prediction = Vec::with_capacity(dim);
        let mut example = Vec::with_capacity(dim);
        for j in 0..dim {
            prediction.push(row_field(&cells, 1 + j, line, "prediction")?);
            example.push(row_field(&cells, 1 + dim + j, line, "example")?);
        }
        records.push(TraceRecord {
            trial,
            prediction: ExpectationParam::new(prediction),
            example: Example::new(example),
            loss: row_field(&cells, 1 + 2 * dim, line, "loss")?,
            inv_rate: row_field(&cells, 2 + 2 * dim, line, "inv_rate")?,
        });
    }
    let trace = Trace::from_parts(family, mode, mu1, eta_b_inv, records, final_mu)?;
    Ok((trace, meta))
}

fn parse_reals(s: &str, what: &str) -> Result<Vec<f64>> {
    s.split(',').map(|v| parse_real(v, what)).collect()
}

/// Regression trace: prior and per-trial rows, labels last before the
/// derived columns.
pub fn regression_trace_csv(trace: &RegressionTrace<f64>, extra: &BTreeMap<String, String>) -> String {
    let dim = trace.dim();
    let mut out = String::new();
    write_meta(
        &mut out,
        &[
            ("family", "regression".to_string()),
            ("dim", dim.to_string()),
            ("mode", trace.mode().name().to_string()),
            ("prior", fmt_matrix(trace.prior())),
        ],
        extra,
    );
    out.push_str(&format!(
        "trial,prediction,{},label,loss,rate_quad,cross_quad\n",
        indexed("example", dim)
    ));
    for r in trace.records() {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.trial,
            fmt_real(r.prediction),
            fmt_reals(r.example.x()),
            fmt_real(r.example.y()),
            fmt_real(r.loss),
            fmt_real(r.rate_quad),
            fmt_real(r.cross_quad)
        ));
    }
    out
}

/// Rebuilds the run from the stored examples and cross-checks every
/// stored column against the recomputation, so a hand-edited file that
/// no longer describes a real run is rejected.
pub fn parse_regression_trace(
    text: &str,
) -> Result<(RegressionTrace<f64>, BTreeMap<String, String>)> {
    let (meta, header, rows) = split_csv(text)?;
    let dim: usize = meta_field(&meta, "dim")?.parse().map_err(|_| Error::Parse {
        line: 1,
        message: "bad dim metadata".into(),
    })?;
    let mode: Mode = meta_field(&meta, "mode")?.parse()?;
    let prior = meta_field(&meta, "prior")?.parse::<RateSpec>()?.matrix(dim)?;
    expect_header(
        &header,
        &format!(
            "trial,prediction,{},label,loss,rate_quad,cross_quad",
            indexed("example", dim)
        ),
    )?;
    let mut examples = Vec::with_capacity(rows.len());
    let mut stored = Vec::with_capacity(rows.len());
    for (line, row) in &rows {
        let cells: Vec<&str> = row.split(',').collect();
        if cells.len() != dim + 6 {
            return Err(Error::Parse {
                line: *line,
                message: format!("expected {} columns, got {}", dim + 6, cells.len()),
            });
        }
        let mut x = Vec::with_capacity(dim);
        for j in 0..dim {
            x.push(row_field(&cells, 2 + j, *line, "example")?);
        }
        let y = row_field(&cells, 2 + dim, *line, "label")?;
        examples.push(LabeledExample::new(x, y)?);
        stored.push([
            row_field(&cells, 1, *line, "prediction")?,
            row_field(&cells, 3 + dim, *line, "loss")?,
            row_field(&cells, 4 + dim, *line, "rate_quad")?,
            row_field(&cells, 5 + dim, *line, "cross_quad")?,
        ]);
    }
    let trace = regression::run(&prior, mode, &examples)?;
    for (r, s) in trace.records().iter().zip(&stored) {
        let recomputed = [r.prediction, r.loss, r.rate_quad, r.cross_quad];
        for (a, b) in recomputed.iter().zip(s) {
            if (a - b).abs() > 1e-9 * a.abs().max(1.0) {
                return Err(Error::Numerical(format!(
                    "stored trace disagrees with its own examples at trial {}: {b} vs {a}",
                    r.trial
                )));
            }
        }
    }
    Ok((trace, meta))
}

/// One line of a report file.
#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub name: String,
    pub value: f64,
    pub applicable: bool,
    pub pass: bool,
}

/// Flattens a report: three summary values, then one row per identity
/// (value = relative residual) and per bound (value = the bound, so
/// bound-versus-horizon plots read straight off the file).
pub fn report_rows(report: &RegretReport<f64>) -> Vec<ReportRow> {
    let mut rows = vec![
        ReportRow {
            name: "online_total".into(),
            value: report.online_total,
            applicable: true,
            pass: true,
        },
        ReportRow {
            name: "offline_optimum".into(),
            value: report.offline_optimum,
            applicable: true,
            pass: true,
        },
        ReportRow {
            name: "regret".into(),
            value: report.regret,
            applicable: true,
            pass: true,
        },
    ];
    for c in &report.identities {
        rows.push(ReportRow {
            name: c.name.to_string(),
            value: c.relative_residual(),
            applicable: c.applicable,
            pass: c.passes(IDENTITY_TOLERANCE),
        });
    }
    for b in &report.bounds {
        rows.push(ReportRow {
            name: b.name.to_string(),
            value: b.bound,
            applicable: b.applicable,
            pass: b.holds_with_relative_slack(BOUND_SLACK),
        });
    }
    rows
}

pub fn report_csv(rows: &[ReportRow], meta: &BTreeMap<String, String>) -> String {
    let mut out = String::new();
    write_meta(&mut out, &[], meta);
    out.push_str("name,value,applicable,pass\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.name,
            fmt_real(r.value),
            r.applicable,
            r.pass
        ));
    }
    out
}

pub fn parse_report(text: &str) -> Result<(Vec<ReportRow>, BTreeMap<String, String>)> {
    let (meta, header, raw_rows) = split_csv(text)?;
    expect_header(&header, "name,value,applicable,pass")?;
    let mut rows = Vec::with_capacity(raw_rows.len());
    for (line, row) in raw_rows {
        let cells: Vec<&str> = row.split(',').collect();
        if cells.len() != 4 {
            return Err(Error::Parse {
                line,
                message: format!("expected 4 columns, got {}", cells.len()),
            });
        }
        let flag = |cell: &str| -> Result<bool> {
            match cell.trim() {
                "true" => Ok(true),
                "false" => Ok(false),
                other => Err(Error::Parse {
                    line,
                    message: format!("bad flag {other:?}"),
                }),
            }
        };
        rows.push(ReportRow {
            name: cells[0].trim().to_string(),
            value: row_field(&cells, 1, line, "value")?,
            applicable: flag(cells[2])?,
            pass: flag(cells[3])?,
        });
    }
    Ok((rows, meta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::online;
    use crate::regret;

    fn same_bits(a: f64, b: f64) -> bool {
        a.to_bits() == b.to_bits()
    }

    #[test]
    fn density_trace_round_trips_bit_for_bit() {
        let family = Family::<f64>::gaussian(2).unwrap();
        let mu1 = ExpectationParam::new(vec![0.25, -0.5]);
        let examples: Vec<Example<f64>> = [[0.3, 0.7], [1.0, -2.0], [0.1, 0.1]]
            .iter()
            .map(|c| Example::new(c.to_vec()))
            .collect();
        let trace = online::run(&family, &mu1, 1.5, Mode::Forward, &examples).unwrap();
        let extra = BTreeMap::from([("seed".to_string(), "7".to_string())]);

        let text = density_trace_csv(&trace, &extra);
        assert_eq!(text, density_trace_csv(&trace, &extra), "deterministic");

        let (back, meta) = parse_density_trace(&text).unwrap();
        assert_eq!(meta.get("seed").map(String::as_str), Some("7"));
        assert_eq!(back.len(), trace.len());
        for (a, b) in back.records().iter().zip(trace.records()) {
            assert!(same_bits(a.loss, b.loss));
            assert!(same_bits(a.inv_rate, b.inv_rate));
            for j in 0..2 {
                assert!(same_bits(a.prediction.as_slice()[j], b.prediction.as_slice()[j]));
                assert!(same_bits(a.example.as_slice()[j], b.example.as_slice()[j]));
            }
        }
        let before = regret::report(&trace).unwrap();
        let after = regret::report(&back).unwrap();
        for (x, y) in before.identities.iter().zip(&after.identities) {
            assert_eq!(x.name, y.name);
            assert!((x.residual() - y.residual()).abs() <= 1e-12);
        }
    }

    #[test]
    fn infinite_losses_survive_the_trip() {
        let family = Family::<f64>::bernoulli();
        let mu1 = ExpectationParam::new(vec![0.5]);
        // w = 0 incremental: second prediction is exactly the first bit,
        // so the mismatched second bit costs +inf
        let examples = vec![Example::new(vec![1.0]), Example::new(vec![0.0])];
        let trace =
            online::run(&family, &mu1, 0.0, Mode::IncrementalOffline, &examples).unwrap();
        assert!(trace.records()[1].loss.is_infinite());
        let (back, _) = parse_density_trace(&density_trace_csv(&trace, &BTreeMap::new())).unwrap();
        assert!(back.records()[1].loss.is_infinite());
    }

    #[test]
    fn regression_trace_round_trips_and_rejects_tampering() {
        let prior = Matrix::scaled_identity(2, 1.5);
        let examples = vec![
            LabeledExample::new(vec![1.0, 0.0], 2.0).unwrap(),
            LabeledExample::new(vec![0.5, -0.5], -1.0).unwrap(),
            LabeledExample::new(vec![0.25, 1.0], 0.5).unwrap(),
        ];
        let trace = regression::run(&prior, Mode::IncrementalOffline, &examples).unwrap();
        let text = regression_trace_csv(&trace, &BTreeMap::new());
        let (back, meta) = parse_regression_trace(&text).unwrap();
        assert_eq!(meta.get("family").map(String::as_str), Some("regression"));
        assert_eq!(back.len(), 3);
        for (a, b) in back.records().iter().zip(trace.records()) {
            assert!(same_bits(a.prediction, b.prediction));
            assert!(same_bits(a.rate_quad, b.rate_quad));
            assert!(same_bits(a.cross_quad, b.cross_quad));
        }

        let tampered = text.replace(&fmt_real(trace.records()[1].loss), &fmt_real(99.0));
        match parse_regression_trace(&tampered) {
            Err(Error::Numerical(_)) => {}
            other => panic!("tampered file accepted: {other:?}"),
        }
    }

    #[test]
    fn report_round_trips_including_inapplicable_rows() {
        let family = Family::<f64>::gamma();
        let mu1 = ExpectationParam::new(vec![1.0]);
        let examples = vec![Example::new(vec![0.5]), Example::new(vec![2.0])];
        // forward mode leaves the Gamma chain rows inapplicable (NaN value)
        let trace = online::run(&family, &mu1, 1.0, Mode::Forward, &examples).unwrap();
        let report = regret::report(&trace).unwrap();
        let rows = report_rows(&report);
        assert!(rows.iter().any(|r| !r.applicable));

        let meta = BTreeMap::from([("trials".to_string(), "2".to_string())]);
        let text = report_csv(&rows, &meta);
        let (back, meta2) = parse_report(&text).unwrap();
        assert_eq!(meta2.get("trials").map(String::as_str), Some("2"));
        assert_eq!(back.len(), rows.len());
        for (a, b) in back.iter().zip(&rows) {
            assert_eq!(a.name, b.name);
            assert_eq!(a.applicable, b.applicable);
            assert_eq!(a.pass, b.pass);
            assert!(same_bits(a.value, b.value) || (a.value.is_nan() && b.value.is_nan()));
        }
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let text = "# family = gaussian\n# dim = 1\n# mode = forward\n# mu1 = 0\n\
                    # eta_b_inv = 1\n# final_mu = 0\n\
                    trial,prediction_0,example_0,loss,inv_rate\n1,0,1,0.5,1\n2,zero,1,0.5,2\n";
        match parse_density_trace(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 9),
            other => panic!("{other:?}"),
        }

        match parse_report("name,value,applicable,pass\nrow,1,yes,true\n") {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 2);
                assert!(message.contains("yes"));
            }
            other => panic!("{other:?}"),
        }
    }
}
