use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use expfam::config::{ExperimentConfig, RateSpec};
use expfam::csvio;
use expfam::error::{Error, Result};
use expfam::experiment;
use expfam::plot;

/// On-line density estimation and ridge regression with exact regret
/// accounting. Exit status: 0 when every applicable identity check
/// passes, 1 on a tolerance failure, 2 on usage or config errors.
#[derive(Parser)]
#[command(name = "expfam", version, arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Run one experiment and write its trace and report CSVs
    Run {
        /// Flat `key = value` config file
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory (default: $EXPFAM_OUT_DIR, then ./out)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides applied after the file, same keys as the file
        #[arg(value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Identity checks: the built-in sweep, or a written trace file
    Verify {
        /// Trace to re-read; its report is recomputed from the records
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Stored report to compare against (default: the sibling file)
        #[arg(long, requires = "trace")]
        report: Option<PathBuf>,
        /// Largest horizon in the built-in sweep
        #[arg(long, default_value_t = 40)]
        max_trials: usize,
    },
    /// Grid over horizons and inverse rates around a base config
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Comma-separated horizons, e.g. 5,10,20
        #[arg(long)]
        trials: String,
        /// Inverse rate or prior spec; repeat the flag for a grid
        #[arg(long = "rate", value_name = "SPEC")]
        rates: Vec<String>,
        #[arg(value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Derive series CSVs and SVG figures from report files
    Plot {
        /// Output path prefix for the generated files
        #[arg(long)]
        out: PathBuf,
        /// Report CSVs produced by run or sweep
        #[arg(required = true)]
        reports: Vec<PathBuf>,
    },
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn load_config(path: Option<&PathBuf>, overrides: &[String]) -> Result<ExperimentConfig> {
    let mut config = match path {
        Some(p) => ExperimentConfig::from_file(p)?,
        None => ExperimentConfig::default(),
    };
    for pair in overrides {
        let (k, v) = pair.split_once('=').ok_or_else(|| {
            Error::Precondition(format!("override {pair:?} is not KEY=VALUE"))
        })?;
        config.set(k.trim(), v.trim())?;
    }
    config.validate()?;
    Ok(config)
}

fn out_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os("EXPFAM_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn print_rows(rows: &[csvio::ReportRow]) {
    for r in rows {
        let status = if !r.applicable {
            " n/a"
        } else if r.pass {
            "PASS"
        } else {
            "FAIL"
        };
        println!("{status} {:<40} {:.6e}", r.name, r.value);
    }
}

fn dispatch(cli: Cli) -> Result<bool> {
    match cli.verb {
        Verb::Run {
            config,
            out,
            overrides,
        } => {
            let config = load_config(config.as_ref(), &overrides)?;
            let outcome = experiment::run_experiment(&config, &out_dir(out))?;
            println!("wrote {}", outcome.trace_path.display());
            println!("wrote {}", outcome.report_path.display());
            print_rows(&outcome.rows);
            for f in &outcome.failures {
                eprintln!("identity failure: {f}");
            }
            Ok(outcome.identities_pass)
        }
        Verb::Verify {
            trace: Some(trace),
            report,
            ..
        } => {
            let v = experiment::verify_trace_file(&trace, report.as_deref())?;
            print_rows(&v.rows);
            let stored_ok = match v.stored_matches {
                Some(ok) => {
                    println!(
                        "stored report {} recomputation (worst gap {:.3e})",
                        if ok { "matches" } else { "DISAGREES with" },
                        v.worst_gap
                    );
                    ok
                }
                None => {
                    println!("no stored report found; recomputed only");
                    true
                }
            };
            Ok(v.identities_pass && stored_ok)
        }
        Verb::Verify {
            trace: None,
            max_trials,
            ..
        } => {
            let lines = experiment::identity_sweep(max_trials)?;
            let mut all = true;
            for l in &lines {
                let status = if l.pass { "PASS" } else { "FAIL" };
                println!("{status} {:<50} worst residual {:.3e}", l.key, l.worst_residual);
                all &= l.pass;
            }
            println!(
                "{} of {} configurations passed",
                lines.iter().filter(|l| l.pass).count(),
                lines.len()
            );
            Ok(all)
        }
        Verb::Sweep {
            config,
            out,
            trials,
            rates,
            overrides,
        } => {
            let base = load_config(config.as_ref(), &overrides)?;
            let trials_grid = trials
                .split(',')
                .map(|t| {
                    t.trim().parse::<usize>().map_err(|_| {
                        Error::Precondition(format!("bad trials value {t:?}"))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let rate_grid = rates
                .iter()
                .map(|r| r.parse::<RateSpec>())
                .collect::<Result<Vec<_>>>()?;
            let summary =
                experiment::sweep_grid(&base, &trials_grid, &rate_grid, &out_dir(out))?;
            for o in &summary.outcomes {
                let status = if o.identities_pass { "PASS" } else { "FAIL" };
                println!("{status} {}", o.key);
                for f in &o.failures {
                    eprintln!("  {f}");
                }
            }
            println!("merged report: {}", summary.merged_path.display());
            Ok(summary.identities_pass)
        }
        Verb::Plot { out, reports } => {
            let mut set = plot::ReportSet::new();
            for path in &reports {
                let text = std::fs::read_to_string(path)?;
                set.push(csvio::parse_report(&text)?);
            }
            for path in plot::emit_plotdata(&set, &out)? {
                println!("wrote {}", path.display());
            }
            Ok(true)
        }
    }
}
