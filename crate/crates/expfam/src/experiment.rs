//! Experiment runner: wires generators, the online loops, and the
//! verifiers together, and owns the on-disk artifact layout.
//!
//! One run produces two files under the output directory, named by the
//! config key unless overridden: `<key>_trace.csv` with the per-trial
//! record and `<key>_report.csv` with the identity and bound rows.
//! Everything here is deterministic, so rerunning a config overwrites
//! its artifacts with identical bytes.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::config::{ExperimentConfig, FamilyChoice, RateSpec};
use crate::csvio::{self, ReportRow};
use crate::error::{Error, Result};
use crate::families::ExpectationParam;
use crate::generate;
use crate::online::{self, Mode, Trace};
use crate::regression::{self, RegressionTrace};
use crate::regret::{self, RegretReport, IDENTITY_TOLERANCE};

#[derive(Debug)]
pub enum RunData {
    Density(Trace<f64>),
    Regression(RegressionTrace<f64>),
}

/// Runs the configured experiment in memory.
pub fn execute(config: &ExperimentConfig) -> Result<(RunData, RegretReport<f64>)> {
    config.validate()?;
    match config.family {
        FamilyChoice::Regression => {
            let prior = config.rate.matrix(config.dim)?;
            let examples = generate::generate_labeled(
                config.dim,
                &config.sequence,
                config.seed,
                config.trials,
            )?;
            let trace = regression::run(&prior, config.mode, &examples)?;
            let report = regression::report(&trace)?;
            Ok((RunData::Regression(trace), report))
        }
        choice => {
            let family = choice.family(config.dim)?;
            let examples =
                generate::generate(&family, &config.sequence, config.seed, config.trials)?;
            let mu1 = ExpectationParam::new(config.mu1.clone());
            let trace = online::run(&family, &mu1, config.rate.scalar()?, config.mode, &examples)?;
            let report = regret::report(&trace)?;
            Ok((RunData::Density(trace), report))
        }
    }
}

fn identity_failures(report: &RegretReport<f64>) -> Vec<String> {
    report
        .identities
        .iter()
        .filter(|c| !c.passes(IDENTITY_TOLERANCE))
        .map(|c| format!("{}: relative residual {:.3e}", c.name, c.relative_residual()))
        .collect()
}

#[derive(Debug)]
pub struct RunOutcome {
    pub key: String,
    pub rows: Vec<ReportRow>,
    /// True when every applicable identity residual is within tolerance;
    /// this is what decides the process exit status.
    pub identities_pass: bool,
    pub failures: Vec<String>,
    pub trace_path: PathBuf,
    pub report_path: PathBuf,
}

pub fn run_experiment(config: &ExperimentConfig, out_dir: &Path) -> Result<RunOutcome> {
    let (data, report) = execute(config)?;
    std::fs::create_dir_all(out_dir)?;
    let meta = config.metadata();
    let trace_text = match &data {
        RunData::Density(t) => csvio::density_trace_csv(t, &meta),
        RunData::Regression(t) => csvio::regression_trace_csv(t, &meta),
    };
    let rows = csvio::report_rows(&report);
    let report_text = csvio::report_csv(&rows, &meta);
    let key = config.key();
    let trace_path = out_dir.join(
        config
            .trace_name
            .clone()
            .unwrap_or_else(|| format!("{key}_trace.csv")),
    );
    let report_path = out_dir.join(
        config
            .report_name
            .clone()
            .unwrap_or_else(|| format!("{key}_report.csv")),
    );
    std::fs::write(&trace_path, trace_text)?;
    std::fs::write(&report_path, report_text)?;
    let failures = identity_failures(&report);
    Ok(RunOutcome {
        key,
        rows,
        identities_pass: failures.is_empty(),
        failures,
        trace_path,
        report_path,
    })
}

#[derive(Debug)]
pub struct SweepLine {
    pub key: String,
    pub worst_residual: f64,
    pub pass: bool,
}

/// Built-in identity sweep: each density family in both modes across
/// horizons 1..=max_trials with varied priors, rates, and seeds. Runs
/// in memory and in parallel; the returned lines are key-ordered.
pub fn identity_sweep(max_trials: usize) -> Result<Vec<SweepLine>> {
    if max_trials == 0 {
        return Err(Error::Precondition("sweep needs at least one trial".into()));
    }
    let rates = [0.5, 1.0, 1.7, 2.5, 3.0];
    let mut configs = Vec::new();
    for (family, theta, mu1s) in [
        (FamilyChoice::Bernoulli, "iid(0.2)", [vec![0.5], vec![0.25]]),
        (FamilyChoice::Gaussian, "iid(0.4)", [vec![0.0], vec![0.3]]),
        (FamilyChoice::Gamma, "iid(-1.3)", [vec![1.0], vec![0.7]]),
    ] {
        for mode in [Mode::IncrementalOffline, Mode::Forward] {
            for trials in 1..=max_trials {
                let mut c = ExperimentConfig {
                    family,
                    mode,
                    mu1: mu1s[trials % 2].clone(),
                    rate: RateSpec::Scalar(rates[trials % rates.len()]),
                    seed: trials as u64 * 7919,
                    trials,
                    ..ExperimentConfig::default()
                };
                c.sequence = theta.parse()?;
                configs.push(c);
            }
        }
    }
    let mut lines = configs
        .par_iter()
        .map(|c| -> Result<SweepLine> {
            let (_, report) = execute(c)?;
            let worst = report
                .identities
                .iter()
                .map(|i| i.relative_residual())
                .fold(0.0, f64::max);
            Ok(SweepLine {
                key: c.key(),
                worst_residual: worst,
                pass: identity_failures(&report).is_empty(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    lines.sort_by(|a, b| a.key.cmp(&b.key));
    Ok(lines)
}

#[derive(Debug)]
pub struct SweepSummary {
    pub outcomes: Vec<RunOutcome>,
    pub merged_path: PathBuf,
    pub identities_pass: bool,
}

/// Grid over horizons and inverse rates around a base config. Each
/// cell runs as an independent parallel task owning its own files; the
/// merge into `sweep_summary.csv` is single-threaded in key order,
/// with a leading `config` column distinguishing the cells. (The name
/// avoids the `*_report.csv` pattern so globs for per-run reports do
/// not pick the merge up.)
pub fn sweep_grid(
    base: &ExperimentConfig,
    trials_grid: &[usize],
    rate_grid: &[RateSpec],
    out_dir: &Path,
) -> Result<SweepSummary> {
    if trials_grid.is_empty() {
        return Err(Error::Precondition(
            "sweep needs at least one trials value".into(),
        ));
    }
    let rates: Vec<RateSpec> = if rate_grid.is_empty() {
        vec![base.rate.clone()]
    } else {
        rate_grid.to_vec()
    };
    let mut configs = Vec::new();
    for &t in trials_grid {
        for r in &rates {
            let mut c = base.clone();
            c.trials = t;
            c.rate = r.clone();
            // per-cell files must not collide on a fixed override
            c.trace_name = None;
            c.report_name = None;
            c.validate()?;
            configs.push(c);
        }
    }
    std::fs::create_dir_all(out_dir)?;
    let mut outcomes = configs
        .par_iter()
        .map(|c| run_experiment(c, out_dir))
        .collect::<Result<Vec<_>>>()?;
    outcomes.sort_by(|a, b| a.key.cmp(&b.key));
    let mut merged = String::from("config,name,value,applicable,pass\n");
    for o in &outcomes {
        for r in &o.rows {
            merged.push_str(&format!(
                "{},{},{:.16e},{},{}\n",
                o.key, r.name, r.value, r.applicable, r.pass
            ));
        }
    }
    let merged_path = out_dir.join("sweep_summary.csv");
    std::fs::write(&merged_path, merged)?;
    let identities_pass = outcomes.iter().all(|o| o.identities_pass);
    Ok(SweepSummary {
        outcomes,
        merged_path,
        identities_pass,
    })
}

#[derive(Debug)]
pub struct TraceVerification {
    pub rows: Vec<ReportRow>,
    pub identities_pass: bool,
    /// None when no stored report was found next to the trace.
    pub stored_matches: Option<bool>,
    pub worst_gap: f64,
}

/// Reads a trace back, recomputes its report from the stored records,
/// and compares against the sibling report file when one exists. The
/// recomputation must reproduce stored values within 1e-12.
pub fn verify_trace_file(
    trace_path: &Path,
    report_path: Option<&Path>,
) -> Result<TraceVerification> {
    let text = std::fs::read_to_string(trace_path)?;
    let (rows, identities_pass) = if csvio::sniff_family(&text)? == "regression" {
        let (trace, _) = csvio::parse_regression_trace(&text)?;
        let report = regression::report(&trace)?;
        (
            csvio::report_rows(&report),
            identity_failures(&report).is_empty(),
        )
    } else {
        let (trace, _) = csvio::parse_density_trace(&text)?;
        let report = regret::report(&trace)?;
        (
            csvio::report_rows(&report),
            identity_failures(&report).is_empty(),
        )
    };
    let sibling = report_path.map(Path::to_path_buf).or_else(|| {
        let name = trace_path.file_name()?.to_str()?;
        let report = trace_path.with_file_name(name.replace("_trace.csv", "_report.csv"));
        (report != trace_path && report.exists()).then_some(report)
    });
    let (stored_matches, worst_gap) = match sibling {
        None => (None, 0.0),
        Some(path) => {
            let (stored, _) = csvio::parse_report(&std::fs::read_to_string(path)?)?;
            let mut ok = stored.len() == rows.len();
            let mut gap: f64 = 0.0;
            for (s, r) in stored.iter().zip(&rows) {
                if s.name != r.name || s.applicable != r.applicable || s.pass != r.pass {
                    ok = false;
                    continue;
                }
                if s.value.is_nan() && r.value.is_nan() {
                    continue;
                }
                let d = (s.value - r.value).abs();
                gap = gap.max(d);
                if !(d <= 1e-12 * r.value.abs().max(1.0)) {
                    ok = false;
                }
            }
            (Some(ok), gap)
        }
    };
    Ok(TraceVerification {
        rows,
        identities_pass,
        stored_matches,
        worst_gap,
    })
}
