//! The on-line estimator and its off-line counterpart.
//!
//! Given a family, an initial mean μ₁ and a prior strength η_B⁻¹ ≥ 0, the
//! learner predicts with its current mean μₜ, sees xₜ, pays the family
//! loss, and moves
//!
//! ```text
//! μ_{t+1} = μₜ − η_{t+1} (μₜ − xₜ),    ηₜ⁻¹ = η₁⁻¹ + t − 1.
//! ```
//!
//! The two modes differ only in the first inverse rate: the incremental
//! off-line learner uses η₁⁻¹ = η_B⁻¹ (after t examples it sits exactly on
//! the batch solution of those t examples), the forward learner uses
//! η₁⁻¹ = η_B⁻¹ + 1. Unrolling the recursion,
//!
//! ```text
//! μ_{t+1} = (η₁⁻¹ + t)⁻¹ (η₁⁻¹ μ₁ + Σ_{q ≤ t} x_q),
//! ```
//!
//! a weighted mean of μ₁ and the data: order-independent, and a convex
//! combination at every step. Inverse rates are stored as the initial real
//! plus an integer trial count, so η₁ = ∞ (the η_B⁻¹ = 0 incremental case)
//! never materializes; every divisor below has the form η₁⁻¹ + t ≥ 1.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::families::{Example, ExpectationParam, Family};
use crate::scalar::{count, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    IncrementalOffline,
    Forward,
}

impl Mode {
    /// What the mode adds to η_B⁻¹ to get η₁⁻¹.
    pub fn rate_shift(self) -> u64 {
        match self {
            Mode::IncrementalOffline => 0,
            Mode::Forward => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Mode::IncrementalOffline => "incremental_offline",
            Mode::Forward => "forward",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "incremental_offline" | "incremental-offline" | "incremental" => {
                Ok(Mode::IncrementalOffline)
            }
            "forward" => Ok(Mode::Forward),
            other => Err(Error::Precondition(format!(
                "unknown mode {other:?} (expected incremental_offline or forward)"
            ))),
        }
    }
}

/// The learner between trials: immutable; [`update`](Self::update) returns
/// the successor state.
#[derive(Clone, Debug)]
pub struct EstimatorState<S> {
    family: Family<S>,
    mode: Mode,
    mu: ExpectationParam<S>,
    mu1: ExpectationParam<S>,
    eta_b_inv: S,
    trial: u64,
}

impl<S: Scalar> EstimatorState<S> {
    /// State at trial 1, before any data.
    pub fn init(
        family: Family<S>,
        mu1: ExpectationParam<S>,
        eta_b_inv: S,
        mode: Mode,
    ) -> Result<Self> {
        family.check_expectation(&mu1)?;
        if !(eta_b_inv >= S::zero()) || !eta_b_inv.is_finite() {
            return Err(Error::Precondition(format!(
                "prior strength must be a finite nonnegative real, got {eta_b_inv}"
            )));
        }
        Ok(Self {
            family,
            mode,
            mu: mu1.clone(),
            mu1,
            eta_b_inv,
            trial: 1,
        })
    }

    pub fn family(&self) -> &Family<S> {
        &self.family
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn trial(&self) -> u64 {
        self.trial
    }

    pub fn mu1(&self) -> &ExpectationParam<S> {
        &self.mu1
    }

    pub fn eta_b_inv(&self) -> S {
        self.eta_b_inv
    }

    /// η₁⁻¹: the batch strength, shifted by one in forward mode.
    pub fn eta1_inv(&self) -> S {
        self.eta_b_inv + count(self.mode.rate_shift())
    }

    /// ηₜ⁻¹ at the current trial.
    pub fn inv_rate(&self) -> S {
        self.eta1_inv() + count(self.trial - 1)
    }

    /// The prediction μₜ.
    pub fn predict(&self) -> &ExpectationParam<S> {
        &self.mu
    }

    /// Consumes xₜ and steps to trial t+1.
    pub fn update(&self, x: &Example<S>) -> Result<Self> {
        self.family.check_example(x)?;
        // η_{t+1}⁻¹ = η₁⁻¹ + t ≥ 1, so the step is a convex combination
        let next_inv = self.eta1_inv() + count(self.trial);
        let mu = ExpectationParam::new(
            self.mu
                .iter()
                .zip(x.iter())
                .map(|(&m, &v)| m - (m - v) / next_inv)
                .collect(),
        );
        Ok(Self {
            family: self.family,
            mode: self.mode,
            mu,
            mu1: self.mu1.clone(),
            eta_b_inv: self.eta_b_inv,
            trial: self.trial + 1,
        })
    }
}

/// `(c + t)⁻¹ (c μ₁ + Σ x_q)`, the shared shape of the expanded on-line
/// solution and the batch solution.
fn weighted_mean<S: Scalar>(
    family: &Family<S>,
    mu1: &ExpectationParam<S>,
    strength: S,
    examples: &[Example<S>],
) -> Result<ExpectationParam<S>> {
    family.check_expectation(mu1)?;
    let mut sums = vec![S::zero(); family.dim()];
    for x in examples {
        family.check_example(x)?;
        for (s, &v) in sums.iter_mut().zip(x.iter()) {
            *s += v;
        }
    }
    let total = strength + count(examples.len() as u64);
    Ok(ExpectationParam::new(
        mu1.iter()
            .zip(sums.iter())
            .map(|(&m, &s)| (strength * m + s) / total)
            .collect(),
    ))
}

/// The unrolled on-line mean after consuming `examples` at first inverse
/// rate `eta1_inv`. Agrees with iterating [`EstimatorState::update`].
pub fn expanded_solution<S: Scalar>(
    family: &Family<S>,
    mu1: &ExpectationParam<S>,
    eta1_inv: S,
    examples: &[Example<S>],
) -> Result<ExpectationParam<S>> {
    if !(eta1_inv >= S::zero()) || !eta1_inv.is_finite() {
        return Err(Error::Precondition(format!(
            "first inverse rate must be a finite nonnegative real, got {eta1_inv}"
        )));
    }
    if eta1_inv == S::zero() && examples.is_empty() {
        return Err(Error::Undefined(
            "expanded solution needs eta1_inv + t > 0".into(),
        ));
    }
    weighted_mean(family, mu1, eta1_inv, examples)
}

/// The best off-line mean: minimizer of the prior-regularized total loss,
/// `μ_B = (η_B⁻¹ + T)⁻¹ (η_B⁻¹ μ₁ + Σ xₜ)`.
pub fn batch_solution<S: Scalar>(
    family: &Family<S>,
    mu1: &ExpectationParam<S>,
    eta_b_inv: S,
    examples: &[Example<S>],
) -> Result<ExpectationParam<S>> {
    if !(eta_b_inv >= S::zero()) || !eta_b_inv.is_finite() {
        return Err(Error::Precondition(format!(
            "prior strength must be a finite nonnegative real, got {eta_b_inv}"
        )));
    }
    if eta_b_inv == S::zero() && examples.is_empty() {
        return Err(Error::Undefined(
            "batch solution over zero examples with zero prior strength".into(),
        ));
    }
    weighted_mean(family, mu1, eta_b_inv, examples)
}

/// One completed trial: the prediction that was made, the example that
/// arrived, the loss paid, and the inverse rate ηₜ⁻¹ in force.
#[derive(Clone, Debug)]
pub struct TraceRecord<S> {
    pub trial: u64,
    pub prediction: ExpectationParam<S>,
    pub example: Example<S>,
    pub loss: S,
    pub inv_rate: S,
}

/// A full run: configuration, per-trial records, and the post-run mean
/// μ_{T+1}. Losses are extended reals; a Bernoulli boundary prediction
/// meeting the opposite bit contributes +∞ rather than aborting the run.
#[derive(Clone, Debug)]
pub struct Trace<S> {
    family: Family<S>,
    mode: Mode,
    mu1: ExpectationParam<S>,
    eta_b_inv: S,
    records: Vec<TraceRecord<S>>,
    final_mu: ExpectationParam<S>,
}

impl<S: Scalar> Trace<S> {
    /// Reassembles a trace from stored parts (the CSV reader needs this).
    /// No consistency checks beyond shapes; `verify` recomputes instead.
    pub fn from_parts(
        family: Family<S>,
        mode: Mode,
        mu1: ExpectationParam<S>,
        eta_b_inv: S,
        records: Vec<TraceRecord<S>>,
        final_mu: ExpectationParam<S>,
    ) -> Result<Self> {
        family.check_expectation(&mu1)?;
        for r in &records {
            if r.prediction.len() != family.dim() || r.example.len() != family.dim() {
                return Err(Error::Dimension {
                    expected: family.dim(),
                    got: r.prediction.len().max(r.example.len()),
                });
            }
        }
        if final_mu.len() != family.dim() {
            return Err(Error::Dimension {
                expected: family.dim(),
                got: final_mu.len(),
            });
        }
        Ok(Self {
            family,
            mode,
            mu1,
            eta_b_inv,
            records,
            final_mu,
        })
    }

    pub fn family(&self) -> &Family<S> {
        &self.family
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn mu1(&self) -> &ExpectationParam<S> {
        &self.mu1
    }

    pub fn eta_b_inv(&self) -> S {
        self.eta_b_inv
    }

    pub fn eta1_inv(&self) -> S {
        self.eta_b_inv + count(self.mode.rate_shift())
    }

    /// Number of trials T.
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[TraceRecord<S>] {
        &self.records
    }

    /// ηₜ⁻¹ for any 1-based trial index, valid through T+1 and beyond.
    pub fn inv_rate_at(&self, trial: u64) -> S {
        debug_assert!(trial >= 1);
        self.eta1_inv() + count(trial - 1)
    }

    /// μₜ for t in 1..=T+1.
    pub fn prediction_at(&self, trial: u64) -> &ExpectationParam<S> {
        let t = trial as usize;
        debug_assert!(t >= 1 && t <= self.records.len() + 1);
        if t == self.records.len() + 1 {
            &self.final_mu
        } else {
            &self.records[t - 1].prediction
        }
    }

    /// μ_{T+1}.
    pub fn final_mu(&self) -> &ExpectationParam<S> {
        &self.final_mu
    }

    /// η_{T+1}⁻¹.
    pub fn final_inv_rate(&self) -> S {
        self.inv_rate_at(self.records.len() as u64 + 1)
    }

    /// Σₜ Lₜ, an extended real.
    pub fn total_loss(&self) -> S {
        self.records.iter().map(|r| r.loss).sum()
    }

    pub fn examples(&self) -> Vec<Example<S>> {
        self.records.iter().map(|r| r.example.clone()).collect()
    }

    /// The batch mean over everything this trace consumed.
    pub fn batch_mu(&self) -> Result<ExpectationParam<S>> {
        batch_solution(&self.family, &self.mu1, self.eta_b_inv, &self.examples())
    }
}

/// Runs the full predict/loss/update loop over `examples`.
pub fn run<S: Scalar>(
    family: &Family<S>,
    mu1: &ExpectationParam<S>,
    eta_b_inv: S,
    mode: Mode,
    examples: &[Example<S>],
) -> Result<Trace<S>> {
    let mut state = EstimatorState::init(*family, mu1.clone(), eta_b_inv, mode)?;
    let mut records = Vec::with_capacity(examples.len());
    for x in examples {
        let prediction = state.predict().clone();
        let loss = family.loss(&prediction, x)?;
        records.push(TraceRecord {
            trial: state.trial(),
            prediction,
            example: x.clone(),
            loss,
            inv_rate: state.inv_rate(),
        });
        state = state.update(x)?;
    }
    Ok(Trace {
        family: *family,
        mode,
        mu1: mu1.clone(),
        eta_b_inv,
        records,
        final_mu: state.predict().clone(),
    })
}
