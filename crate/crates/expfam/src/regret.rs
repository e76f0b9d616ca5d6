//! Regret accounting: exact identities relating on-line loss to off-line
//! loss, and the family-specific bounds on their gap.
//!
//! Everything here consumes a [`Trace`] and recomputes both sides of each
//! statement independently, reporting the two values rather than a bare
//! boolean so failures carry diagnostics. Statements that need interior
//! parameters or a particular configuration are reported as not applicable
//! instead of erroring; a run whose predictions hit the Bernoulli boundary
//! still produces a report.
//!
//! The exact statements:
//!
//! * loss telescope: the on-line total rewritten through the dual
//!   potential,
//!   `Σ Lₜ = Σ η_{t+1}⁻¹ Δ_F(μ_{t+1}, μₜ) + η₁⁻¹F(μ₁) − η_{T+1}⁻¹F(μ_{T+1}) + Σ k(xₜ)`
//!   with k the example offset of the family;
//! * off-line closed form: the minimum of
//!   `η_B⁻¹ Δ_G(θ, θ₁) + Σ Lₜ(θ)` equals
//!   `η_B⁻¹F(μ₁) − (η_B⁻¹+T)F(μ_B) + Σ k(xₜ)` at the batch mean μ_B;
//! * regret decomposition:
//!   `regret = (η₁⁻¹−η_B⁻¹)Δ_G(θ_B,θ₁) − η_{T+1}⁻¹Δ_G(θ_B,θ_{T+1}) + Σ η_{t+1}⁻¹Δ_G(θₜ,θ_{t+1})`,
//!   whose first two terms vanish for the incremental off-line learner
//!   because it ends exactly on μ_B.
//!
//! The bounds: the Bernoulli forward learner with η_B⁻¹ = 0, μ₁ = 1/2 has
//! a Gamma-function closed form for its total loss and regret at most
//! `(1/2)ln(T+1) + 1`; the Gaussian with μ₁ = 0 has an exact excess
//! expression in the rate schedule that a logarithm dominates once
//! η₁⁻¹ > 1; the Gamma incremental learner's divergence sum is bounded
//! per-trial by `ηₜ(1 − xₜ/μₜ)²` and in total by `(X²/Z²) Σ ηₜ`.

use crate::bregman::{divergence_expectation, divergence_natural};
use crate::error::{Error, Result};
use crate::families::{Example, ExpectationParam, Family, FamilyKind};
use crate::online::{batch_solution, Mode, Trace};
use crate::scalar::{cast, count, Scalar};
use crate::special::ln_gamma;

/// Relative tolerance the report uses for its pass column: an identity
/// passes when `|lhs − rhs| < tol · max(1, |lhs|)`.
pub const IDENTITY_TOLERANCE: f64 = 1e-8;

/// Slack for the report's bound rows, relative to the bound's size.
pub const BOUND_SLACK: f64 = 1e-9;

/// Two independently computed sides of one exact statement.
#[derive(Clone, Copy, Debug)]
pub struct IdentityCheck<S> {
    pub name: &'static str,
    pub lhs: S,
    pub rhs: S,
    /// False when a precondition (interior parameters, mode, config)
    /// fails; the sides are NaN then and the check passes vacuously.
    pub applicable: bool,
}

impl<S: Scalar> IdentityCheck<S> {
    fn holds(name: &'static str, lhs: S, rhs: S) -> Self {
        Self {
            name,
            lhs,
            rhs,
            applicable: true,
        }
    }

    fn not_applicable(name: &'static str) -> Self {
        Self {
            name,
            lhs: S::nan(),
            rhs: S::nan(),
            applicable: false,
        }
    }

    pub fn residual(&self) -> S {
        if !self.applicable {
            return S::zero();
        }
        (self.lhs - self.rhs).abs()
    }

    /// Residual scaled by `max(1, |lhs|)`.
    pub fn relative_residual(&self) -> S {
        self.residual() / S::one().max(self.lhs.abs())
    }

    pub fn passes(&self, tol: S) -> bool {
        !self.applicable || self.relative_residual() < tol
    }
}

/// A one-sided statement `quantity ≤ bound`.
#[derive(Clone, Copy, Debug)]
pub struct BoundCheck<S> {
    pub name: &'static str,
    pub quantity: S,
    pub bound: S,
    pub applicable: bool,
}

impl<S: Scalar> BoundCheck<S> {
    fn holds(name: &'static str, quantity: S, bound: S) -> Self {
        Self {
            name,
            quantity,
            bound,
            applicable: true,
        }
    }

    fn not_applicable(name: &'static str) -> Self {
        Self {
            name,
            quantity: S::nan(),
            bound: S::nan(),
            applicable: false,
        }
    }

    pub fn holds_with_slack(&self, slack: S) -> bool {
        !self.applicable || self.quantity <= self.bound + slack
    }

    /// Slack scaled by `max(1, |bound|)`; infinite bounds always hold.
    pub fn holds_with_relative_slack(&self, slack: S) -> bool {
        if !self.applicable || self.bound == S::infinity() {
            return true;
        }
        self.quantity <= self.bound + slack * S::one().max(self.bound.abs())
    }
}

/// Everything the verifier knows about one run.
#[derive(Clone, Debug)]
pub struct RegretReport<S> {
    pub online_total: S,
    pub offline_optimum: S,
    pub regret: S,
    pub identities: Vec<IdentityCheck<S>>,
    pub bounds: Vec<BoundCheck<S>>,
}

impl<S: Scalar> RegretReport<S> {
    /// Pass/fail over every row at the module tolerances.
    pub fn all_pass(&self) -> bool {
        self.identities
            .iter()
            .all(|c| c.passes(cast(IDENTITY_TOLERANCE)))
            && self
                .bounds
                .iter()
                .all(|b| b.holds_with_relative_slack(cast(BOUND_SLACK)))
    }
}

fn interior_through<S: Scalar>(trace: &Trace<S>, last_trial: u64) -> bool {
    (1..=last_trial).all(|t| trace.family().is_interior(trace.prediction_at(t)))
}

/// Natural parameters θ₁..θ_{T+1} of a trace whose means are all interior.
fn natural_path<S: Scalar>(trace: &Trace<S>) -> Result<Vec<crate::families::NaturalParam<S>>> {
    (1..=trace.len() as u64 + 1)
        .map(|t| trace.family().inverse_link(trace.prediction_at(t)))
        .collect()
}

fn total_example_offset<S: Scalar>(family: &Family<S>, examples: &[Example<S>]) -> Result<S> {
    let mut acc = S::zero();
    for x in examples {
        acc += family.example_offset(x)?;
    }
    Ok(acc)
}

/// Minimum of the prior-regularized off-line objective, by its closed
/// form `η_B⁻¹F(μ₁) − (η_B⁻¹+T)F(μ_B) + Σ k(xₜ)`.
pub fn offline_objective_value<S: Scalar>(
    family: &Family<S>,
    mu1: &ExpectationParam<S>,
    eta_b_inv: S,
    examples: &[Example<S>],
) -> Result<S> {
    let mu_b = batch_solution(family, mu1, eta_b_inv, examples)?;
    let t = count::<S>(examples.len() as u64);
    Ok(eta_b_inv * family.dual(mu1)? - (eta_b_inv + t) * family.dual(&mu_b)?
        + total_example_offset(family, examples)?)
}

/// The off-line objective evaluated at an arbitrary interior mean:
/// `η_B⁻¹ Δ_G(f(μ), f(μ₁)) + Σ Lₜ(μ)`. Its minimum over μ is
/// [`offline_objective_value`].
pub fn offline_objective_at<S: Scalar>(
    family: &Family<S>,
    mu1: &ExpectationParam<S>,
    eta_b_inv: S,
    examples: &[Example<S>],
    mu: &ExpectationParam<S>,
) -> Result<S> {
    let theta = family.inverse_link(mu)?;
    let theta1 = family.inverse_link(mu1)?;
    let mut acc = eta_b_inv * divergence_natural(family, &theta, &theta1)?.value();
    for x in examples {
        acc += family.loss(mu, x)?;
    }
    Ok(acc)
}

/// On-line total rewritten through the dual potential. Applicable when
/// μ₁..μ_T are interior (μ_{T+1} may sit on a closure).
pub fn check_loss_telescope<S: Scalar>(trace: &Trace<S>) -> IdentityCheck<S> {
    const NAME: &str = "online_loss_telescope";
    let family = trace.family();
    let t_len = trace.len() as u64;
    if !interior_through(trace, t_len) {
        return IdentityCheck::not_applicable(NAME);
    }
    let compute = || -> Result<(S, S)> {
        let lhs = trace.total_loss();
        let mut rhs = trace.eta1_inv() * family.dual(trace.mu1())?
            - trace.final_inv_rate() * family.dual(trace.final_mu())?
            + total_example_offset(family, &trace.examples())?;
        for t in 1..=t_len {
            let div = divergence_expectation(
                family,
                trace.prediction_at(t + 1),
                trace.prediction_at(t),
            )?;
            rhs += trace.inv_rate_at(t + 1) * div.value();
        }
        Ok((lhs, rhs))
    };
    match compute() {
        Ok((lhs, rhs)) => IdentityCheck::holds(NAME, lhs, rhs),
        Err(_) => IdentityCheck::not_applicable(NAME),
    }
}

/// Closed form of the off-line minimum against direct evaluation at μ_B.
/// Applicable when μ₁ and μ_B are interior.
pub fn check_offline_closed_form<S: Scalar>(trace: &Trace<S>) -> IdentityCheck<S> {
    const NAME: &str = "offline_optimum_closed_form";
    let family = trace.family();
    let examples = trace.examples();
    let compute = || -> Result<(S, S)> {
        let mu_b = trace.batch_mu()?;
        if !family.is_interior(&mu_b) {
            return Err(Error::Precondition("batch mean on boundary".into()));
        }
        let lhs = offline_objective_at(family, trace.mu1(), trace.eta_b_inv(), &examples, &mu_b)?;
        let rhs = offline_objective_value(family, trace.mu1(), trace.eta_b_inv(), &examples)?;
        Ok((lhs, rhs))
    };
    match compute() {
        Ok((lhs, rhs)) => IdentityCheck::holds(NAME, lhs, rhs),
        Err(_) => IdentityCheck::not_applicable(NAME),
    }
}

/// The regret decomposition into divergences along the parameter path.
/// Applicable when every μₜ (including μ_{T+1}) and μ_B are interior.
pub fn check_regret_decomposition<S: Scalar>(trace: &Trace<S>) -> IdentityCheck<S> {
    const NAME: &str = "regret_decomposition";
    let family = trace.family();
    let t_len = trace.len() as u64;
    if !interior_through(trace, t_len + 1) {
        return IdentityCheck::not_applicable(NAME);
    }
    let compute = || -> Result<(S, S)> {
        let mu_b = trace.batch_mu()?;
        if !family.is_interior(&mu_b) {
            return Err(Error::Precondition("batch mean on boundary".into()));
        }
        let theta_b = family.inverse_link(&mu_b)?;
        let thetas = natural_path(trace)?;
        let examples = trace.examples();

        let offline =
            offline_objective_at(family, trace.mu1(), trace.eta_b_inv(), &examples, &mu_b)?;
        let lhs = trace.total_loss() - offline;

        // η₁⁻¹ − η_B⁻¹ is exactly the mode's integer shift
        let shift = count::<S>(trace.mode().rate_shift());
        let mut rhs = shift * divergence_natural(family, &theta_b, &thetas[0])?.value()
            - trace.final_inv_rate()
                * divergence_natural(family, &theta_b, &thetas[t_len as usize])?.value();
        for t in 1..=t_len {
            rhs += trace.inv_rate_at(t + 1)
                * divergence_natural(family, &thetas[t as usize - 1], &thetas[t as usize])?
                    .value();
        }
        Ok((lhs, rhs))
    };
    match compute() {
        Ok((lhs, rhs)) => IdentityCheck::holds(NAME, lhs, rhs),
        Err(_) => IdentityCheck::not_applicable(NAME),
    }
}

/// Incremental off-line runs end exactly on the batch solution; compares
/// θ_{T+1} against θ_B (falling back to means when a boundary makes θ
/// undefined). Not applicable in forward mode.
pub fn check_incremental_endpoint<S: Scalar>(trace: &Trace<S>) -> IdentityCheck<S> {
    const NAME: &str = "incremental_endpoint";
    if trace.mode() != Mode::IncrementalOffline {
        return IdentityCheck::not_applicable(NAME);
    }
    let family = trace.family();
    let compute = || -> Result<(S, S)> {
        let mu_b = trace.batch_mu()?;
        let final_mu = trace.final_mu();
        let gap = if family.is_interior(&mu_b) && family.is_interior(final_mu) {
            let theta_b = family.inverse_link(&mu_b)?;
            let theta_end = family.inverse_link(final_mu)?;
            theta_b
                .iter()
                .zip(theta_end.iter())
                .map(|(&a, &b)| (a - b).abs())
                .fold(S::zero(), S::max)
        } else {
            mu_b.iter()
                .zip(final_mu.iter())
                .map(|(&a, &b)| (a - b).abs())
                .fold(S::zero(), S::max)
        };
        Ok((gap, S::zero()))
    };
    match compute() {
        Ok((lhs, rhs)) => IdentityCheck::holds(NAME, lhs, rhs),
        Err(_) => IdentityCheck::not_applicable(NAME),
    }
}

/// Whether a trace is the closed-form Bernoulli configuration: forward
/// mode, η_B⁻¹ = 0, μ₁ = 1/2.
fn is_kt_configuration<S: Scalar>(trace: &Trace<S>) -> bool {
    trace.family().kind() == FamilyKind::Bernoulli
        && trace.mode() == Mode::Forward
        && trace.eta_b_inv() == S::zero()
        && trace.mu1()[0] == cast::<S>(0.5)
}

/// Closed form for the Bernoulli forward learner started at μ₁ = 1/2 with
/// η_B⁻¹ = 0: with k ones among T bits,
///
/// ```text
/// total  = ln Γ(T+1) − ln Γ(k+1/2) − ln Γ(T−k+1/2) + ln π
/// regret = total + T·F(μ_B)
/// ```
///
/// Returns `(total, regret)`.
pub fn bernoulli_closed_form<S: Scalar>(trace: &Trace<S>) -> Result<(S, S)> {
    if !is_kt_configuration(trace) {
        return Err(Error::Precondition(
            "closed form needs Bernoulli forward mode with eta_b_inv = 0 and mu1 = 1/2".into(),
        ));
    }
    let t_len = trace.len() as u64;
    if t_len == 0 {
        return Err(Error::Undefined(
            "regret over zero examples has no batch reference".into(),
        ));
    }
    let ones = trace
        .records()
        .iter()
        .filter(|r| r.example[0] == S::one())
        .count() as u64;
    let half = cast::<S>(0.5);
    let total = ln_gamma(count::<S>(t_len + 1))
        - ln_gamma(count::<S>(ones) + half)
        - ln_gamma(count::<S>(t_len - ones) + half)
        + S::PI().ln();
    let mu_b = trace.batch_mu()?;
    let regret = total + count::<S>(t_len) * trace.family().dual(&mu_b)?;
    Ok((total, regret))
}

/// The Bernoulli forward regret bound `(1/2) ln(T+1) + 1`.
pub fn bernoulli_regret_bound<S: Scalar>(t_len: u64) -> S {
    cast::<S>(0.5) * count::<S>(t_len + 1).ln() + S::one()
}

/// The Gaussian excess expression and its logarithmic bound, for runs
/// started at μ₁ = 0:
///
/// ```text
/// excess = Σ_{t=1}^{T} ηₜ‖xₜ‖²/2 − Σ_{t=1}^{T−1} ηₜ‖μ_{t+1}‖²/2
/// log bound = (X²/2) ln(1 + T/(η₁⁻¹ − 1)),   X = max ‖xₜ‖
/// ```
///
/// The excess dominates the regret in both modes and equals it for the
/// forward learner. For the incremental learner with η_B⁻¹ = 0 the η₁
/// terms of both sums are infinite, leaving the expression undefined, so
/// the excess is `None`; the log bound needs η₁⁻¹ > 1 and is `None`
/// otherwise.
pub fn gaussian_bound<S: Scalar>(trace: &Trace<S>) -> Result<(Option<S>, Option<S>)> {
    if trace.family().kind() != FamilyKind::Gaussian {
        return Err(Error::Precondition("gaussian_bound needs the Gaussian family".into()));
    }
    if trace.mu1().iter().any(|&m| m != S::zero()) {
        return Err(Error::Precondition("the excess expression assumes mu1 = 0".into()));
    }
    let sq = |p: &[S]| p.iter().map(|&v| v * v).sum::<S>();
    let t_len = trace.len() as u64;
    let any_data = trace.records().iter().any(|r| sq(&r.example) > S::zero());
    let excess = if trace.eta1_inv() == S::zero() && any_data {
        None
    } else {
        let mut acc = S::zero();
        for t in 1..=t_len {
            // with η₁⁻¹ = 0 every example is zero here, so the guards keep
            // the 0·∞ terms out
            let x2 = sq(&trace.records()[t as usize - 1].example);
            if x2 > S::zero() {
                acc += x2 / trace.inv_rate_at(t) / cast(2.0);
            }
            if t < t_len {
                let m2 = sq(trace.prediction_at(t + 1));
                if m2 > S::zero() {
                    acc -= m2 / trace.inv_rate_at(t) / cast(2.0);
                }
            }
        }
        Some(acc)
    };
    let log_bound = if trace.eta1_inv() > S::one() && t_len > 0 {
        let x_max = trace
            .records()
            .iter()
            .map(|r| sq(&r.example).sqrt())
            .fold(S::zero(), S::max);
        Some(
            x_max * x_max / cast::<S>(2.0)
                * S::ln_1p(count::<S>(t_len) / (trace.eta1_inv() - S::one())),
        )
    } else if trace.eta1_inv() > S::one() {
        Some(S::zero())
    } else {
        None
    };
    Ok((excess, log_bound))
}

fn require_gamma_incremental<S: Scalar>(trace: &Trace<S>) -> Result<()> {
    if trace.family().kind() != FamilyKind::Gamma {
        return Err(Error::Precondition("gamma bounds need the Gamma family".into()));
    }
    if trace.mode() != Mode::IncrementalOffline || trace.eta_b_inv() < S::one() {
        return Err(Error::Precondition(
            "gamma bounds need incremental off-line mode with eta_b_inv >= 1".into(),
        ));
    }
    Ok(())
}

/// Per-trial links of the Gamma chain: for each trial the pair
/// `(η_{t+1}⁻¹ Δ_F(μ_{t+1}, μₜ), ηₜ(1 − xₜ/μₜ)²)`; the first never
/// exceeds the second.
pub fn gamma_per_trial_chain<S: Scalar>(trace: &Trace<S>) -> Result<Vec<(S, S)>> {
    require_gamma_incremental(trace)?;
    let family = trace.family();
    let mut pairs = Vec::with_capacity(trace.len());
    for t in 1..=trace.len() as u64 {
        let record = &trace.records()[t as usize - 1];
        let div = divergence_expectation(family, trace.prediction_at(t + 1), &record.prediction)?;
        let lhs = trace.inv_rate_at(t + 1) * div.value();
        let ratio = record.example[0] / record.prediction[0];
        let gap = S::one() - ratio;
        let rhs = gap * gap / trace.inv_rate_at(t);
        pairs.push((lhs, rhs));
    }
    Ok(pairs)
}

/// Total Gamma bound `(X²/Z²) Σ ηₜ` with `X = max xₜ` and
/// `Z = min({xₜ} ∪ {μ₁})`. Dominates the divergence sum of the regret
/// decomposition, hence the regret itself.
pub fn gamma_bound<S: Scalar>(trace: &Trace<S>) -> Result<S> {
    require_gamma_incremental(trace)?;
    if trace.is_empty() {
        return Ok(S::zero());
    }
    let mut x_max = S::zero();
    let mut z_min = trace.mu1()[0];
    let mut rate_sum = S::zero();
    for t in 1..=trace.len() as u64 {
        let x = trace.records()[t as usize - 1].example[0];
        x_max = x_max.max(x);
        z_min = z_min.min(x);
        rate_sum += trace.inv_rate_at(t).recip();
    }
    Ok(x_max * x_max / (z_min * z_min) * rate_sum)
}

/// The divergence sum `Σ η_{t+1}⁻¹ Δ_G(θₜ, θ_{t+1})` along a trace with
/// interior means; for an incremental run this equals the regret.
pub fn divergence_sum<S: Scalar>(trace: &Trace<S>) -> Result<S> {
    let family = trace.family();
    let thetas = natural_path(trace)?;
    let mut acc = S::zero();
    for t in 1..=trace.len() as u64 {
        acc += trace.inv_rate_at(t + 1)
            * divergence_natural(family, &thetas[t as usize - 1], &thetas[t as usize])?.value();
    }
    Ok(acc)
}

/// Finds λ ∈ [0, 1] placing the second-order Taylor point of the dual
/// potential: μ̃ = λμₜ + (1−λ)μ_{t+1} with
/// `Δ_F(μ_{t+1}, μₜ) = (μ_{t+1}−μₜ)² F″(μ̃)/2`. One-dimensional families
/// only. The residual in λ is continuous but not monotone (the Bernoulli
/// F″ dips between symmetric endpoints), so a grid scan brackets a sign
/// change before bisecting.
pub fn taylor_mean_value_check<S: Scalar>(
    family: &Family<S>,
    mu_t: &ExpectationParam<S>,
    mu_next: &ExpectationParam<S>,
) -> Result<S> {
    if family.dim() != 1 {
        return Err(Error::Precondition(
            "the Taylor point search is one-dimensional".into(),
        ));
    }
    family.check_expectation(mu_t)?;
    family.check_expectation(mu_next)?;
    let a = mu_t[0];
    let b = mu_next[0];
    if a == b {
        return Err(Error::Precondition(
            "equal means: every interpolation point works".into(),
        ));
    }
    if family.kind() == FamilyKind::Gaussian {
        // F'' is constant, the identity holds for every λ
        return Ok(cast(0.5));
    }
    let delta = divergence_expectation(family, mu_next, mu_t)?.value();
    let d = b - a;
    let residual = |lam: S| -> Result<S> {
        let point = lam * a + (S::one() - lam) * b;
        let fpp = family
            .dual_hessian(&ExpectationParam::scalar(point))?
            .get(0, 0);
        Ok(d * d * fpp / cast(2.0) - delta)
    };

    let grid = 128u32;
    let mut lo = S::zero();
    let mut r_lo = residual(lo)?;
    if r_lo == S::zero() {
        return Ok(lo);
    }
    let mut bracket = None;
    for i in 1..=grid {
        let hi = count::<S>(i as u64) / count::<S>(grid as u64);
        let r_hi = residual(hi)?;
        if r_hi == S::zero() {
            return Ok(hi);
        }
        if (r_lo > S::zero()) != (r_hi > S::zero()) {
            bracket = Some((lo, r_lo, hi));
            break;
        }
        lo = hi;
        r_lo = r_hi;
    }
    let (mut lo, mut r_lo, mut hi) = bracket.ok_or_else(|| {
        Error::Numerical("no sign change in the Taylor residual; F must be strictly convex".into())
    })?;
    for _ in 0..200 {
        let mid = (lo + hi) / cast(2.0);
        if mid == lo || mid == hi {
            break;
        }
        let r_mid = residual(mid)?;
        if r_mid == S::zero() {
            return Ok(mid);
        }
        if (r_mid > S::zero()) == (r_lo > S::zero()) {
            lo = mid;
            r_lo = r_mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo + hi) / cast(2.0))
}

/// Builds the full report for one trace: totals, regret, every identity,
/// and whichever bounds the configuration supports.
pub fn report<S: Scalar>(trace: &Trace<S>) -> Result<RegretReport<S>> {
    let family = trace.family();
    let examples = trace.examples();
    let online_total = trace.total_loss();
    let offline_optimum =
        offline_objective_value(family, trace.mu1(), trace.eta_b_inv(), &examples)?;
    let regret = online_total - offline_optimum;

    let identities = vec![
        check_loss_telescope(trace),
        check_offline_closed_form(trace),
        check_regret_decomposition(trace),
        check_incremental_endpoint(trace),
    ];

    let mut identities = identities;
    let mut bounds = Vec::new();
    match family.kind() {
        FamilyKind::Bernoulli => {
            if is_kt_configuration(trace) && !trace.is_empty() {
                let (total, closed_regret) = bernoulli_closed_form(trace)?;
                identities.push(IdentityCheck::holds(
                    "bernoulli_closed_form_total",
                    online_total,
                    total,
                ));
                bounds.push(BoundCheck::holds(
                    "bernoulli_regret_log_bound",
                    closed_regret,
                    bernoulli_regret_bound(trace.len() as u64),
                ));
            } else {
                identities.push(IdentityCheck::not_applicable("bernoulli_closed_form_total"));
                bounds.push(BoundCheck::not_applicable("bernoulli_regret_log_bound"));
            }
        }
        FamilyKind::Gaussian => {
            if trace.mu1().iter().all(|&m| m == S::zero()) {
                let (excess, log_bound) = gaussian_bound(trace)?;
                match (trace.mode(), excess) {
                    (Mode::Forward, Some(e)) => identities.push(IdentityCheck::holds(
                        "gaussian_forward_excess_exact",
                        regret,
                        e,
                    )),
                    _ => identities.push(IdentityCheck::not_applicable(
                        "gaussian_forward_excess_exact",
                    )),
                }
                match excess {
                    Some(e) => {
                        bounds.push(BoundCheck::holds("gaussian_excess_bound", regret, e))
                    }
                    None => bounds.push(BoundCheck::not_applicable("gaussian_excess_bound")),
                }
                match (excess, log_bound) {
                    (Some(e), Some(lb)) => {
                        bounds.push(BoundCheck::holds("gaussian_log_bound", e, lb))
                    }
                    _ => bounds.push(BoundCheck::not_applicable("gaussian_log_bound")),
                }
            } else {
                identities.push(IdentityCheck::not_applicable(
                    "gaussian_forward_excess_exact",
                ));
                bounds.push(BoundCheck::not_applicable("gaussian_excess_bound"));
                bounds.push(BoundCheck::not_applicable("gaussian_log_bound"));
            }
        }
        FamilyKind::Gamma => {
            if require_gamma_incremental(trace).is_ok() {
                let pairs = gamma_per_trial_chain(trace)?;
                let worst = pairs
                    .iter()
                    .map(|&(lhs, rhs)| lhs - rhs)
                    .fold(S::neg_infinity(), S::max)
                    .max(S::zero() - S::one()); // empty trace: vacuous −1 ≤ 0
                bounds.push(BoundCheck::holds("gamma_per_trial_chain", worst, S::zero()));
                bounds.push(BoundCheck::holds(
                    "gamma_rate_sum_bound",
                    divergence_sum(trace)?,
                    gamma_bound(trace)?,
                ));
            } else {
                bounds.push(BoundCheck::not_applicable("gamma_per_trial_chain"));
                bounds.push(BoundCheck::not_applicable("gamma_rate_sum_bound"));
            }
        }
    }

    Ok(RegretReport {
        online_total,
        offline_optimum,
        regret,
        identities,
        bounds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::online::run;

    const LN_2: f64 = std::f64::consts::LN_2;

    fn bern() -> Family<f64> {
        Family::bernoulli()
    }

    fn gauss() -> Family<f64> {
        Family::gaussian(1).unwrap()
    }

    fn gamma() -> Family<f64> {
        Family::gamma()
    }

    fn exs(values: &[f64]) -> Vec<Example<f64>> {
        values.iter().map(|&v| Example::scalar(v)).collect()
    }

    fn mu(v: f64) -> ExpectationParam<f64> {
        ExpectationParam::scalar(v)
    }

    #[test]
    fn offline_value_examples() {
        let v = offline_objective_value(&gauss(), &mu(0.0), 1.0, &exs(&[1.0])).unwrap();
        assert!((v - 0.25).abs() < 1e-15);

        // all examples at mu1 with no prior term: just the losses
        let v = offline_objective_value(&gauss(), &mu(0.7), 0.0, &exs(&[0.7, 0.7])).unwrap();
        assert!(v.abs() < 1e-15);

        let v = offline_objective_value(&bern(), &mu(0.5), 0.0, &exs(&[1.0, 0.0])).unwrap();
        assert!((v - 2.0 * LN_2).abs() < 1e-15);
    }

    #[test]
    fn offline_closed_form_matches_direct_evaluation() {
        let examples = exs(&[0.6, 2.3, 1.1, 0.4]);
        let closed = offline_objective_value(&gamma(), &mu(1.0), 1.5, &examples).unwrap();
        let mu_b = batch_solution(&gamma(), &mu(1.0), 1.5, &examples).unwrap();
        let direct = offline_objective_at(&gamma(), &mu(1.0), 1.5, &examples, &mu_b).unwrap();
        assert!((closed - direct).abs() < 1e-12);

        // and the closed form sits below nearby evaluations
        for eps in [-1e-3, 1e-3] {
            let nudged = ExpectationParam::scalar(mu_b[0] + eps);
            let v = offline_objective_at(&gamma(), &mu(1.0), 1.5, &examples, &nudged).unwrap();
            assert!(v > closed);
        }
    }

    #[test]
    fn telescope_gaussian_hand_value() {
        let trace = run(&gauss(), &mu(0.0), 1.0, Mode::Forward, &exs(&[1.0])).unwrap();
        let check = check_loss_telescope(&trace);
        assert!(check.applicable);
        assert!((check.lhs - 0.5).abs() < 1e-15);
        assert!(check.residual() < 1e-10);
    }

    #[test]
    fn telescope_empty_trace() {
        let trace = run(&gauss(), &mu(0.3), 2.0, Mode::Forward, &[]).unwrap();
        let check = check_loss_telescope(&trace);
        assert!(check.applicable);
        assert_eq!(check.lhs, 0.0);
        assert!(check.residual() < 1e-15);
    }

    #[test]
    fn telescope_gamma_sequence() {
        let examples = exs(&[
            0.62, 1.4, 2.2, 0.9, 1.13, 3.4, 0.77, 1.9, 2.6, 1.05, 0.5, 1.7, 2.9, 0.81, 1.31,
            2.05, 0.93, 1.55, 2.35, 1.2,
        ]);
        let trace = run(&gamma(), &mu(1.0), 1.0, Mode::IncrementalOffline, &examples).unwrap();
        let check = check_loss_telescope(&trace);
        assert!(check.applicable);
        assert!(check.relative_residual() < 1e-8, "{:?}", check);
    }

    #[test]
    fn telescope_not_applicable_on_boundary() {
        let trace = run(
            &bern(),
            &mu(0.5),
            0.0,
            Mode::IncrementalOffline,
            &exs(&[1.0, 0.0]),
        )
        .unwrap();
        let check = check_loss_telescope(&trace);
        assert!(!check.applicable);
        assert!(check.passes(1e-8));
    }

    #[test]
    fn decomposition_gaussian_hand_value() {
        let trace = run(&gauss(), &mu(0.0), 1.0, Mode::IncrementalOffline, &exs(&[1.0]))
            .unwrap();
        let check = check_regret_decomposition(&trace);
        assert!(check.applicable);
        assert!((check.lhs - 0.25).abs() < 1e-12);
        assert!((check.rhs - 0.25).abs() < 1e-12);
    }

    #[test]
    fn decomposition_fixed_point_is_zero() {
        let trace = run(&gauss(), &mu(0.4), 1.0, Mode::IncrementalOffline, &exs(&[0.4]))
            .unwrap();
        let check = check_regret_decomposition(&trace);
        assert!(check.applicable);
        assert!(check.lhs.abs() < 1e-15);
        assert!(check.rhs.abs() < 1e-15);
    }

    #[test]
    fn decomposition_bernoulli_forward() {
        let bits = exs(&[1.0, 0.0, 0.0, 1.0, 1.0, 1.0, 0.0, 1.0, 0.0, 1.0]);
        let trace = run(&bern(), &mu(0.5), 1.0, Mode::Forward, &bits).unwrap();
        let check = check_regret_decomposition(&trace);
        assert!(check.applicable);
        assert!(check.relative_residual() < 1e-8, "{:?}", check);
    }

    #[test]
    fn incremental_ends_on_batch() {
        let examples = exs(&[0.3, 1.9, 0.8, 2.4]);
        let trace = run(&gamma(), &mu(1.2), 2.0, Mode::IncrementalOffline, &examples).unwrap();
        let check = check_incremental_endpoint(&trace);
        assert!(check.applicable);
        assert!(check.lhs < 1e-10);

        let fwd = run(&gamma(), &mu(1.2), 2.0, Mode::Forward, &examples).unwrap();
        assert!(!check_incremental_endpoint(&fwd).applicable);
    }

    #[test]
    fn bernoulli_closed_form_small_cases() {
        let trace = run(&bern(), &mu(0.5), 0.0, Mode::Forward, &exs(&[1.0])).unwrap();
        let (total, regret) = bernoulli_closed_form(&trace).unwrap();
        assert!((total - LN_2).abs() < 1e-12);
        assert!((regret - LN_2).abs() < 1e-12);
        assert!((trace.total_loss() - total).abs() < 1e-9);

        let trace = run(&bern(), &mu(0.5), 0.0, Mode::Forward, &exs(&[1.0, 0.0])).unwrap();
        let (total, regret) = bernoulli_closed_form(&trace).unwrap();
        assert!((total - 8.0f64.ln()).abs() < 1e-12);
        assert!((regret - LN_2).abs() < 1e-12);
        assert!((trace.total_loss() - total).abs() < 1e-9);
    }

    #[test]
    fn bernoulli_closed_form_all_zeros() {
        let trace = run(&bern(), &mu(0.5), 0.0, Mode::Forward, &exs(&[0.0; 6])).unwrap();
        let (total, _) = bernoulli_closed_form(&trace).unwrap();
        assert!((trace.total_loss() - total).abs() < 1e-9);
        // all-zero batch mean sits on the boundary: F(mu_B) = 0, so the
        // regret is the total itself, under the log bound
        let (_, regret) = bernoulli_closed_form(&trace).unwrap();
        assert!((regret - total).abs() < 1e-12);
        assert!(regret <= bernoulli_regret_bound::<f64>(6));
    }

    #[test]
    fn bernoulli_closed_form_rejects_other_configs() {
        let trace = run(&bern(), &mu(0.5), 1.0, Mode::Forward, &exs(&[1.0])).unwrap();
        assert!(bernoulli_closed_form(&trace).is_err());
        let trace = run(
            &bern(),
            &mu(0.5),
            0.0,
            Mode::IncrementalOffline,
            &exs(&[1.0]),
        )
        .unwrap();
        assert!(bernoulli_closed_form(&trace).is_err());
    }

    #[test]
    fn gaussian_bound_forward_single_example() {
        let trace = run(&gauss(), &mu(0.0), 1.0, Mode::Forward, &exs(&[1.0])).unwrap();
        let (excess, log_bound) = gaussian_bound(&trace).unwrap();
        let excess = excess.unwrap();
        assert!((excess - 0.25).abs() < 1e-15);
        let rep = report(&trace).unwrap();
        assert!((rep.regret - excess).abs() < 1e-12);
        // eta1_inv = 2 > 1: bound applies
        let lb = log_bound.unwrap();
        assert!((lb - 0.5 * 2.0f64.ln()).abs() < 1e-12);
        assert!(excess <= lb);
    }

    #[test]
    fn gaussian_bound_incremental_dominates() {
        for x in [0.5, -2.0, 3.7] {
            let trace = run(
                &gauss(),
                &mu(0.0),
                2.0,
                Mode::IncrementalOffline,
                &exs(&[x]),
            )
            .unwrap();
            let (excess, _) = gaussian_bound(&trace).unwrap();
            let excess = excess.unwrap();
            assert!((excess - x * x / 4.0).abs() < 1e-12);
            let rep = report(&trace).unwrap();
            assert!(rep.regret <= excess + 1e-12);
        }
    }

    #[test]
    fn gaussian_bound_zero_prior_incremental_is_undefined() {
        let trace = run(
            &gauss(),
            &mu(0.0),
            0.0,
            Mode::IncrementalOffline,
            &exs(&[1.0, 2.0]),
        )
        .unwrap();
        let (excess, log_bound) = gaussian_bound(&trace).unwrap();
        assert!(excess.is_none());
        assert!(log_bound.is_none());
        let rep = report(&trace).unwrap();
        assert!(rep
            .bounds
            .iter()
            .all(|b| b.name != "gaussian_excess_bound" || !b.applicable));

        // all-zero data keeps every term zero, so the expression survives
        let trace = run(
            &gauss(),
            &mu(0.0),
            0.0,
            Mode::IncrementalOffline,
            &exs(&[0.0, 0.0]),
        )
        .unwrap();
        let (excess, _) = gaussian_bound(&trace).unwrap();
        assert_eq!(excess.unwrap(), 0.0);
    }

    #[test]
    fn gaussian_bound_rejects_nonzero_start() {
        let trace = run(&gauss(), &mu(0.5), 1.0, Mode::Forward, &exs(&[1.0])).unwrap();
        assert!(gaussian_bound(&trace).is_err());
    }

    #[test]
    fn gamma_chain_fixed_point() {
        let trace = run(
            &gamma(),
            &mu(1.0),
            1.0,
            Mode::IncrementalOffline,
            &exs(&[1.0, 1.0]),
        )
        .unwrap();
        for (lhs, rhs) in gamma_per_trial_chain(&trace).unwrap() {
            assert_eq!(lhs, 0.0);
            assert!(rhs >= 0.0);
        }
        assert!(divergence_sum(&trace).unwrap().abs() < 1e-15);
    }

    #[test]
    fn gamma_chain_hand_value() {
        let trace = run(&gamma(), &mu(1.0), 1.0, Mode::IncrementalOffline, &exs(&[2.0]))
            .unwrap();
        let pairs = gamma_per_trial_chain(&trace).unwrap();
        assert_eq!(pairs.len(), 1);
        let (lhs, rhs) = pairs[0];
        // mu_2 = 3/2: 2·Δ_F(3/2, 1) = 2(1/2 − ln(3/2))
        assert!((lhs - 2.0 * (0.5 - 1.5f64.ln())).abs() < 1e-12);
        assert!((rhs - 1.0).abs() < 1e-15);
        assert!(lhs <= rhs);
    }

    #[test]
    fn gamma_total_bound_dominates_regret() {
        let examples = exs(&[1.3, 0.6, 2.7, 1.9, 0.8, 1.1, 3.2, 0.95, 1.6, 2.1]);
        let trace = run(&gamma(), &mu(1.0), 1.0, Mode::IncrementalOffline, &examples).unwrap();
        let rep = report(&trace).unwrap();
        let bound = gamma_bound(&trace).unwrap();
        assert!(rep.regret <= divergence_sum(&trace).unwrap() + 1e-12);
        assert!(divergence_sum(&trace).unwrap() <= bound);
    }

    #[test]
    fn gamma_bound_rejects_forward_and_weak_priors() {
        let trace = run(&gamma(), &mu(1.0), 1.0, Mode::Forward, &exs(&[2.0])).unwrap();
        assert!(gamma_bound(&trace).is_err());
        let trace = run(
            &gamma(),
            &mu(1.0),
            0.5,
            Mode::IncrementalOffline,
            &exs(&[2.0]),
        )
        .unwrap();
        assert!(gamma_bound(&trace).is_err());
    }

    #[test]
    fn taylor_point_examples() {
        let lam = taylor_mean_value_check(&gauss(), &mu(-1.0), &mu(2.0)).unwrap();
        assert_eq!(lam, 0.5);

        for (family, a, b) in [
            (bern(), 0.3, 0.6),
            (bern(), 0.3, 0.7), // symmetric endpoints: residual not monotone
            (gamma(), 1.0, 2.0),
        ] {
            let lam = taylor_mean_value_check(&family, &mu(a), &mu(b)).unwrap();
            assert!((0.0..=1.0).contains(&lam));
            let point = lam * a + (1.0 - lam) * b;
            let fpp = family.dual_hessian(&mu(point)).unwrap().get(0, 0);
            let delta = divergence_expectation(&family, &mu(b), &mu(a)).unwrap().value();
            let resid = (b - a) * (b - a) * fpp / 2.0 - delta;
            assert!(resid.abs() < 1e-9 * delta.max(1.0), "{}: {resid}", family.name());
        }

        assert!(taylor_mean_value_check(&bern(), &mu(0.4), &mu(0.4)).is_err());
    }

    #[test]
    fn report_collects_everything() {
        let trace = run(&bern(), &mu(0.5), 0.0, Mode::Forward, &exs(&[1.0, 0.0, 1.0]))
            .unwrap();
        let rep = report(&trace).unwrap();
        assert!(rep.all_pass());
        assert!((rep.regret - (rep.online_total - rep.offline_optimum)).abs() < 1e-15);
        assert!(rep.identities.iter().any(|c| c.name == "bernoulli_closed_form_total"
            && c.applicable));
        assert!(rep
            .bounds
            .iter()
            .any(|b| b.name == "bernoulli_regret_log_bound" && b.applicable));
    }

    #[test]
    fn report_survives_boundary_runs() {
        let trace = run(
            &bern(),
            &mu(0.5),
            0.0,
            Mode::IncrementalOffline,
            &exs(&[1.0, 0.0, 1.0]),
        )
        .unwrap();
        let rep = report(&trace).unwrap();
        assert_eq!(rep.online_total, f64::INFINITY);
        assert!(rep.all_pass()); // everything boundary-dependent flagged off
        assert!(rep.identities.iter().all(|c| c.name != "online_loss_telescope"
            || !c.applicable));
    }
}
