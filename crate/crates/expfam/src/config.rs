//! Experiment configuration: a flat `key = value` text format plus
//! programmatic overrides, shared by every CLI verb.
//!
//! ```text
//! # density estimation run
//! family   = gaussian
//! dim      = 2
//! mode     = forward
//! mu1      = 0,0
//! eta_b_inv = 1.5
//! sequence = iid(0.3,-0.2)
//! seed     = 7
//! trials   = 40
//! ```
//!
//! `family = regression` switches to the linear-regression pipeline; its
//! `eta_b_inv` then takes a matrix spec, either `a*I` or explicit rows
//! like `2,0;0,1`, and `iid(...)` carries the true weight vector.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};
use crate::families::{Family, FamilyKind};
use crate::generate::GeneratorSpec;
use crate::linalg::Matrix;
use crate::online::Mode;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FamilyChoice {
    Bernoulli,
    Gaussian,
    Gamma,
    Regression,
}

impl FamilyChoice {
    pub fn name(self) -> &'static str {
        match self {
            FamilyChoice::Bernoulli => "bernoulli",
            FamilyChoice::Gaussian => "gaussian",
            FamilyChoice::Gamma => "gamma",
            FamilyChoice::Regression => "regression",
        }
    }

    /// The density family behind this choice; regression has none.
    pub fn family(self, dim: usize) -> Result<Family<f64>> {
        match self {
            FamilyChoice::Bernoulli => {
                if dim != 1 {
                    return Err(Error::Precondition(
                        "the Bernoulli family is one-dimensional".into(),
                    ));
                }
                Ok(Family::bernoulli())
            }
            FamilyChoice::Gaussian => Family::gaussian(dim),
            FamilyChoice::Gamma => {
                if dim != 1 {
                    return Err(Error::Precondition(
                        "the Gamma family is one-dimensional".into(),
                    ));
                }
                Ok(Family::gamma())
            }
            FamilyChoice::Regression => Err(Error::Precondition(
                "regression runs have no density family".into(),
            )),
         }
    }
}

impl fmt::Display for FamilyChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for FamilyChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "bernoulli" => Ok(FamilyChoice::Bernoulli),
            "gaussian" => Ok(FamilyChoice::Gaussian),
            "gamma" => Ok(FamilyChoice::Gamma),
            "regression" => Ok(FamilyChoice::Regression),
            other => Err(Error::Precondition(format!(
                "unknown family {other:?}; expected bernoulli, gaussian, gamma or regression"
            ))),
        }
    }
}

/// Inverse learning rate: a real for density runs, a matrix for
/// regression (`a*I` or explicit rows `r00,r01;r10,r11`).
#[derive(Clone, Debug, PartialEq)]
pub enum RateSpec {
    Scalar(f64),
    ScaledIdentity(f64),
    Explicit(Vec<Vec<f64>>),
}

impl RateSpec {
    pub fn scalar(&self) -> Result<f64> {
        match self {
            RateSpec::Scalar(v) => Ok(*v),
            other => Err(Error::Precondition(format!(
                "density runs need a plain real inverse rate, got {other:?}"
            ))),
        }
    }

    pub fn matrix(&self, dim: usize) -> Result<Matrix<f64>> {
        match self {
            RateSpec::Scalar(v) | RateSpec::ScaledIdentity(v) => {
                if !(*v > 0.0) {
                    return Err(Error::Precondition(format!(
                        "prior multiple must be positive, got {v}"
                    )));
                }
                Ok(Matrix::scaled_identity(dim, *v))
            }
            RateSpec::Explicit(rows) => {
                if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
                    return Err(Error::Dimension {
                        expected: dim,
                        got: rows.len(),
                    });
                }
                let flat: Vec<f64> = rows.iter().flatten().copied().collect();
                Matrix::from_row_major(dim, flat)
            }
        }
    }
}

impl fmt::Display for RateSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RateSpec::Scalar(v) => write!(f, "{v}"),
            RateSpec::ScaledIdentity(v) => write!(f, "{v}*I"),
            RateSpec::Explicit(rows) => {
                let body = rows
                    .iter()
                    .map(|r| {
                        r.iter()
                            .map(|v| v.to_string())
                            .collect::<Vec<_>>()
                            .join(",")
                    })
                    .collect::<Vec<_>>()
                    .join(";");
                f.write_str(&body)
            }
        }
    }
}

impl std::str::FromStr for RateSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(stem) = s.strip_suffix("*I") {
            let v = parse_real(stem, "inverse rate multiple")?;
            return Ok(RateSpec::ScaledIdentity(v));
        }
        if s.contains(';') {
            let rows = s
                .split(';')
                .map(|row| {
                    row.split(',')
                        .map(|v| parse_real(v, "matrix entry"))
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            return Ok(RateSpec::Explicit(rows));
        }
        Ok(RateSpec::Scalar(parse_real(s, "inverse rate")?))
    }
}

pub(crate) fn parse_real(s: &str, what: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::Precondition(format!("cannot parse {what} from {s:?}")))
}

pub(crate) fn parse_vector(s: &str, what: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|v| parse_real(v, what))
        .collect::<Result<Vec<_>>>()
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub family: FamilyChoice,
    pub dim: usize,
    pub mode: Mode,
    pub mu1: Vec<f64>,
    pub rate: RateSpec,
    pub sequence: GeneratorSpec,
    pub seed: u64,
    pub trials: usize,
    pub trace_name: Option<String>,
    pub report_name: Option<String>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            family: FamilyChoice::Gaussian,
            dim: 1,
            mode: Mode::Forward,
            mu1: vec![0.0],
            rate: RateSpec::Scalar(1.0),
            sequence: GeneratorSpec::Iid { theta_star: vec![0.0] },
            seed: 0,
            trials: 10,
            trace_name: None,
            report_name: None,
        }
    }
}

impl ExperimentConfig {
    /// Reads a flat `key = value` file. Later keys win; `#` starts a
    /// comment; unknown keys are errors so typos do not silently
    /// fall back to defaults.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut config = ExperimentConfig::default();
        let mut seen_mu1 = false;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: i + 1,
                message: format!("expected key = value, got {raw:?}"),
            })?;
            if key.trim() == "mu1" {
                seen_mu1 = true;
            }
            config.set(key.trim(), value.trim()).map_err(|e| Error::Parse {
                line: i + 1,
                message: e.to_string(),
            })?;
        }
        if !seen_mu1 && config.mu1.len() != config.dim {
            config.mu1 = config.default_mu1();
        }
        config.validate()?;
        Ok(config)
    }

    fn default_mu1(&self) -> Vec<f64> {
        match self.family {
            FamilyChoice::Bernoulli => vec![0.5],
            FamilyChoice::Gaussian => vec![0.0; self.dim],
            FamilyChoice::Gamma => vec![1.0],
            FamilyChoice::Regression => Vec::new(),
        }
    }

    /// Applies one key/value pair; the CLI reuses this for flag
    /// overrides so both layers accept the identical vocabulary.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "family" => {
                self.family = value.parse()?;
                if self.family == FamilyChoice::Bernoulli && self.mu1 == [0.0] {
                    self.mu1 = vec![0.5];
                }
                if self.family == FamilyChoice::Gamma && self.mu1 == [0.0] {
                    self.mu1 = vec![1.0];
                }
            }
            "dim" => {
                self.dim = value
                    .trim()
                    .parse::<usize>()
                    .map_err(|_| Error::Precondition(format!("bad dim {value:?}")))?;
            }
            "mode" => self.mode = value.parse()?,
            "mu1" => self.mu1 = parse_vector(value, "mu1 coordinate")?,
            "eta_b_inv" => self.rate = value.parse()?,
            "sequence" => self.sequence = value.parse()?,
            "seed" => {
                self.seed = value
                    .trim()
                    .parse::<u64>()
                    .map_err(|_| Error::Precondition(format!("bad seed {value:?}")))?;
            }
            "trials" => {
                self.trials = value
                    .trim()
                    .parse::<usize>()
                    .map_err(|_| Error::Precondition(format!("bad trials {value:?}")))?;
            }
            "trace" => self.trace_name = Some(value.to_string()),
            "report" => self.report_name = Some(value.to_string()),
            other => {
                return Err(Error::Precondition(format!(
                    "unknown configuration key {other:?}"
                )))
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::Precondition("dim must be at least 1".into()));
        }
        if self.trials == 0 {
            return Err(Error::Precondition("trials must be at least 1".into()));
        }
        match self.family {
            FamilyChoice::Regression => {
                self.rate.matrix(self.dim)?;
            }
            choice => {
                let family = choice.family(self.dim)?;
                if self.mu1.len() != self.dim {
                    return Err(Error::Dimension {
                        expected: self.dim,
                        got: self.mu1.len(),
                    });
                }
                family.check_expectation(&crate::families::ExpectationParam::new(
                    self.mu1.clone(),
                ))?;
                let w = self.rate.scalar()?;
                if !(w >= 0.0) || !w.is_finite() {
                    return Err(Error::Precondition(format!(
                        "eta_b_inv must be finite and nonnegative, got {w}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Stable label used for output file names and sweep ordering. The
    /// inverse rate is part of it: sweeps vary it at fixed T and seed.
    pub fn key(&self) -> String {
        let rate_tag: String = self
            .rate
            .to_string()
            .chars()
            .map(|c| match c {
                '.' => 'p',
                '-' => 'm',
                '*' => 'x',
                ',' | ';' => '_',
                c => c,
            })
            .collect();
        format!(
            "{}_{}_d{}_T{}_w{}_seed{}",
            self.family,
            self.mode.name(),
            self.dim,
            self.trials,
            rate_tag,
            self.seed
        )
    }

    /// Metadata echoed into every artifact this config produces.
    pub fn metadata(&self) -> BTreeMap<String, String> {
        let mut meta = BTreeMap::new();
        meta.insert("family".into(), self.family.to_string());
        meta.insert("dim".into(), self.dim.to_string());
        meta.insert("mode".into(), self.mode.name().to_string());
        if self.family != FamilyChoice::Regression {
            meta.insert(
                "mu1".into(),
                self.mu1
                    .iter()
                    .map(|v| v.to_string())
                    .collect::<Vec<_>>()
                    .join(","),
            );
        }
        meta.insert("eta_b_inv".into(), self.rate.to_string());
        meta.insert("sequence".into(), self.sequence.to_string());
        meta.insert("seed".into(), self.seed.to_string());
        meta.insert("trials".into(), self.trials.to_string());
        meta
    }

    pub fn kind(&self) -> Option<FamilyKind> {
        match self.family {
            FamilyChoice::Bernoulli => Some(FamilyKind::Bernoulli),
            FamilyChoice::Gaussian => Some(FamilyKind::Gaussian),
            FamilyChoice::Gamma => Some(FamilyKind::Gamma),
            FamilyChoice::Regression => None,
        }
    }
}
