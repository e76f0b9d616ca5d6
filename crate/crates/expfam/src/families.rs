//! The three exponential families and the maps between their parameter
//! spaces.
//!
//! A family has densities `P(x|θ) = exp(θ·x − G(θ)) P₀(x)` with strictly
//! convex cumulant `G` on an open convex natural domain. The link
//! `g = ∇G` carries natural parameters θ to expectation parameters
//! `μ = E_θ[x]`; its inverse `f = g⁻¹` carries them back; the dual
//! potential `F(μ) = f(μ)·μ − G(f(μ))` is the Legendre conjugate of `G`
//! restricted to the mean range. Concretely:
//!
//! | family    | G(θ)          | μ = g(θ)        | F(μ)                     |
//! |-----------|---------------|-----------------|--------------------------|
//! | Bernoulli | ln(1 + e^θ)   | e^θ/(1+e^θ)     | μ ln μ + (1−μ) ln(1−μ)   |
//! | Gaussian  | ‖θ‖²/2        | θ               | ‖μ‖²/2                   |
//! | Gamma     | −ln(−θ)       | −1/θ            | −1 − ln μ                |
//!
//! Multi-dimensional variants are products of independent coordinates (the
//! Gaussian being the spherical unit-variance one), so every operation here
//! works coordinatewise.
//!
//! The per-example loss is the negative log-likelihood written in its
//! conventional display form: `−x ln μ − (1−x) ln(1−μ)` for Bernoulli,
//! `‖μ − x‖²/2` for the Gaussian, `ln μ + x/μ` per coordinate for the
//! Gamma. Constant normalizers are dropped; they cancel from every regret
//! quantity. For the Gaussian the display form keeps the example-only piece
//! `‖x‖²/2` of the base measure — [`Family::example_offset`] exposes it,
//! because the identities that compare on-line loss sums against dual
//! potentials need it on the potential side. [`Family::absolute_loss`]
//! re-adds the remaining constant (`(d/2) ln 2π` for the Gaussian, zero for
//! the other two) for absolute likelihood reporting.

use std::fmt;
use std::ops::Deref;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::{cast, Scalar};

/// Default width of the guard band around domain boundaries: membership
/// tests require this much slack inside every strict inequality.
pub const DOMAIN_MARGIN: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FamilyKind {
    Bernoulli,
    Gaussian,
    Gamma,
}

impl FamilyKind {
    pub fn name(self) -> &'static str {
        match self {
            FamilyKind::Bernoulli => "bernoulli",
            FamilyKind::Gaussian => "gaussian",
            FamilyKind::Gamma => "gamma",
        }
    }
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

macro_rules! param_vector {
    ($(#[$doc:meta])* $name:ident) => {
        $(#[$doc])*
        #[derive(Clone, Debug, PartialEq)]
        pub struct $name<S>(Vec<S>);

        impl<S: Scalar> $name<S> {
            pub fn new(values: Vec<S>) -> Self {
                Self(values)
            }

            pub fn scalar(value: S) -> Self {
                Self(vec![value])
            }

            pub fn as_slice(&self) -> &[S] {
                &self.0
            }

            pub fn into_vec(self) -> Vec<S> {
                self.0
            }
        }

        impl<S: Scalar> From<Vec<S>> for $name<S> {
            fn from(values: Vec<S>) -> Self {
                Self(values)
            }
        }

        impl<S> Deref for $name<S> {
            type Target = [S];

            fn deref(&self) -> &[S] {
                &self.0
            }
        }
    };
}

param_vector! {
    /// A point θ in the natural parameter space.
    NaturalParam
}
param_vector! {
    /// A point μ in the expectation parameter space.
    ExpectationParam
}
param_vector! {
    /// One observation xₜ.
    Example
}

/// One of the three families at a fixed dimension, plus the boundary margin
/// used by its domain checks. Values are immutable and `Copy`; all
/// operations are pure.
#[derive(Clone, Copy, Debug)]
pub struct Family<S> {
    kind: FamilyKind,
    dim: usize,
    margin: S,
}

impl<S: Scalar> Family<S> {
    pub fn new(kind: FamilyKind, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Precondition("family dimension must be >= 1".into()));
        }
        Ok(Self {
            kind,
            dim,
            margin: cast(DOMAIN_MARGIN),
        })
    }

    pub fn bernoulli() -> Self {
        Self::new(FamilyKind::Bernoulli, 1).expect("dim 1 is valid")
    }

    pub fn gaussian(dim: usize) -> Result<Self> {
        Self::new(FamilyKind::Gaussian, dim)
    }

    pub fn gamma() -> Self {
        Self::new(FamilyKind::Gamma, 1).expect("dim 1 is valid")
    }

    /// Overrides the domain margin. Mostly useful in tests that probe
    /// behaviour right at the boundary.
    pub fn with_margin(mut self, margin: S) -> Self {
        self.margin = margin;
        self
    }

    pub fn kind(&self) -> FamilyKind {
        self.kind
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn margin(&self) -> S {
        self.margin
    }

    pub fn natural_domain(&self) -> &'static str {
        match self.kind {
            FamilyKind::Bernoulli | FamilyKind::Gaussian => "all finite vectors",
            FamilyKind::Gamma => "every coordinate < 0",
        }
    }

    pub fn expectation_domain(&self) -> &'static str {
        match self.kind {
            FamilyKind::Bernoulli => "every coordinate in (0, 1)",
            FamilyKind::Gaussian => "all finite vectors",
            FamilyKind::Gamma => "every coordinate > 0",
        }
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                got: len,
            });
        }
        Ok(())
    }

    fn domain_err(&self, message: String) -> Error {
        Error::Domain {
            family: self.name(),
            message,
        }
    }

    /// θ must lie inside the open natural domain, with margin.
    pub fn check_natural(&self, theta: &NaturalParam<S>) -> Result<()> {
        self.check_len(theta.len())?;
        for (i, &t) in theta.iter().enumerate() {
            if !t.is_finite() {
                return Err(self.domain_err(format!("theta[{i}] = {t} is not finite")));
            }
            if self.kind == FamilyKind::Gamma && !(t < -self.margin) {
                return Err(self.domain_err(format!("theta[{i}] = {t} must be < 0")));
            }
        }
        Ok(())
    }

    /// μ must lie strictly inside the expectation domain, with margin.
    pub fn check_expectation(&self, mu: &ExpectationParam<S>) -> Result<()> {
        self.check_len(mu.len())?;
        for (i, &m) in mu.iter().enumerate() {
            if !m.is_finite() {
                return Err(self.domain_err(format!("mu[{i}] = {m} is not finite")));
            }
            match self.kind {
                FamilyKind::Bernoulli => {
                    if !(m > self.margin && S::one() - m > self.margin) {
                        return Err(
                            self.domain_err(format!("mu[{i}] = {m} must be inside (0, 1)"))
                        );
                    }
                }
                FamilyKind::Gaussian => {}
                FamilyKind::Gamma => {
                    if !(m > self.margin) {
                        return Err(self.domain_err(format!("mu[{i}] = {m} must be > 0")));
                    }
                }
            }
        }
        Ok(())
    }

    /// Like [`check_expectation`](Self::check_expectation) but admits the
    /// closure where the family has one: Bernoulli coordinates may sit on
    /// {0, 1}. The Gamma boundary μ = 0 stays excluded because no finite
    /// loss or potential extends there.
    pub fn check_expectation_closure(&self, mu: &ExpectationParam<S>) -> Result<()> {
        self.check_len(mu.len())?;
        for (i, &m) in mu.iter().enumerate() {
            if !m.is_finite() {
                return Err(self.domain_err(format!("mu[{i}] = {m} is not finite")));
            }
            match self.kind {
                FamilyKind::Bernoulli => {
                    if !(m >= S::zero() && m <= S::one()) {
                        return Err(self.domain_err(format!("mu[{i}] = {m} must be in [0, 1]")));
                    }
                }
                FamilyKind::Gaussian => {}
                FamilyKind::Gamma => {
                    if !(m > S::zero()) {
                        return Err(self.domain_err(format!("mu[{i}] = {m} must be > 0")));
                    }
                }
            }
        }
        Ok(())
    }

    /// Is μ inside the open domain (margin included)? Convenience for
    /// callers that downgrade boundary cases instead of erroring.
    pub fn is_interior(&self, mu: &ExpectationParam<S>) -> bool {
        self.check_expectation(mu).is_ok()
    }

    pub fn check_example(&self, x: &Example<S>) -> Result<()> {
        self.check_len(x.len())?;
        for (i, &v) in x.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::Example(format!("x[{i}] = {v} is not finite")));
            }
            match self.kind {
                FamilyKind::Bernoulli => {
                    if v != S::zero() && v != S::one() {
                        return Err(Error::Example(format!(
                            "bernoulli x[{i}] = {v} must be exactly 0 or 1"
                        )));
                    }
                }
                FamilyKind::Gaussian => {}
                FamilyKind::Gamma => {
                    if !(v > S::zero()) {
                        return Err(Error::Example(format!("gamma x[{i}] = {v} must be > 0")));
                    }
                }
            }
        }
        Ok(())
    }

    /// `G(θ)`, summed over coordinates.
    pub fn cumulant(&self, theta: &NaturalParam<S>) -> Result<S> {
        self.check_natural(theta)?;
        let mut acc = S::zero();
        for &t in theta.iter() {
            acc += match self.kind {
                FamilyKind::Bernoulli => softplus(t),
                FamilyKind::Gaussian => t * t / cast(2.0),
                FamilyKind::Gamma => -(-t).ln(),
            };
        }
        Ok(acc)
    }

    /// `μ = g(θ) = ∇G(θ)`.
    pub fn link(&self, theta: &NaturalParam<S>) -> Result<ExpectationParam<S>> {
        self.check_natural(theta)?;
        let mu = theta
            .iter()
            .map(|&t| match self.kind {
                FamilyKind::Bernoulli => sigmoid(t),
                FamilyKind::Gaussian => t,
                FamilyKind::Gamma => -t.recip(),
            })
            .collect();
        Ok(ExpectationParam::new(mu))
    }

    /// `θ = f(μ) = g⁻¹(μ)`.
    pub fn inverse_link(&self, mu: &ExpectationParam<S>) -> Result<NaturalParam<S>> {
        self.check_expectation(mu)?;
        let theta = mu
            .iter()
            .map(|&m| match self.kind {
                FamilyKind::Bernoulli => m.ln() - S::ln_1p(-m),
                FamilyKind::Gaussian => m,
                FamilyKind::Gamma => -m.recip(),
            })
            .collect();
        Ok(NaturalParam::new(theta))
    }

    /// The dual potential `F(μ)`. For the Bernoulli the value extends
    /// continuously to 0 at μ ∈ {0, 1}, and this accepts the closure.
    pub fn dual(&self, mu: &ExpectationParam<S>) -> Result<S> {
        self.check_expectation_closure(mu)?;
        let mut acc = S::zero();
        for &m in mu.iter() {
            acc += match self.kind {
                FamilyKind::Bernoulli => {
                    if m == S::zero() || m == S::one() {
                        S::zero()
                    } else {
                        m * m.ln() + (S::one() - m) * S::ln_1p(-m)
                    }
                }
                FamilyKind::Gaussian => m * m / cast(2.0),
                FamilyKind::Gamma => -S::one() - m.ln(),
            };
        }
        Ok(acc)
    }

    /// Hessian of the cumulant at θ: the Fisher information. Diagonal for
    /// all three families.
    pub fn cumulant_hessian(&self, theta: &NaturalParam<S>) -> Result<Matrix<S>> {
        self.check_natural(theta)?;
        let diag: Vec<S> = theta
            .iter()
            .map(|&t| match self.kind {
                FamilyKind::Bernoulli => {
                    let p = sigmoid(t);
                    p * (S::one() - p)
                }
                FamilyKind::Gaussian => S::one(),
                FamilyKind::Gamma => (t * t).recip(),
            })
            .collect();
        Ok(Matrix::diagonal(&diag))
    }

    /// Hessian of the dual potential at μ; the inverse of
    /// [`cumulant_hessian`](Self::cumulant_hessian) at θ = f(μ).
    pub fn dual_hessian(&self, mu: &ExpectationParam<S>) -> Result<Matrix<S>> {
        self.check_expectation(mu)?;
        let diag: Vec<S> = mu
            .iter()
            .map(|&m| match self.kind {
                FamilyKind::Bernoulli => (m * (S::one() - m)).recip(),
                FamilyKind::Gaussian => S::one(),
                FamilyKind::Gamma => (m * m).recip(),
            })
            .collect();
        Ok(Matrix::diagonal(&diag))
    }

    /// The variance function `V(μ) = cumulant_hessian(f(μ))`.
    pub fn variance(&self, mu: &ExpectationParam<S>) -> Result<Matrix<S>> {
        self.cumulant_hessian(&self.inverse_link(mu)?)
    }

    /// Per-example loss at expectation parameter μ, in display form (see
    /// the module docs). Returns +∞ at a Bernoulli boundary mismatch; μ may
    /// sit on the closure where one exists.
    pub fn loss(&self, mu: &ExpectationParam<S>, x: &Example<S>) -> Result<S> {
        self.check_expectation_closure(mu)?;
        self.check_example(x)?;
        let mut acc = S::zero();
        for (&m, &v) in mu.iter().zip(x.iter()) {
            acc += match self.kind {
                // branch on the exact bit so a boundary μ cannot produce 0·∞
                FamilyKind::Bernoulli => {
                    if v == S::one() {
                        -m.ln()
                    } else {
                        -S::ln_1p(-m)
                    }
                }
                FamilyKind::Gaussian => {
                    let d = m - v;
                    d * d / cast(2.0)
                }
                FamilyKind::Gamma => m.ln() + v / m,
            };
        }
        Ok(acc)
    }

    /// Same loss, taken at a natural parameter.
    pub fn loss_natural(&self, theta: &NaturalParam<S>, x: &Example<S>) -> Result<S> {
        self.loss(&self.link(theta)?, x)
    }

    /// The parameter-independent part of the loss: `‖x‖²/2` for the
    /// Gaussian, zero otherwise. Identities that rewrite loss sums through
    /// the dual potential add this per example.
    pub fn example_offset(&self, x: &Example<S>) -> Result<S> {
        self.check_example(x)?;
        Ok(match self.kind {
            FamilyKind::Gaussian => {
                x.iter().map(|&v| v * v).sum::<S>() / cast(2.0)
            }
            _ => S::zero(),
        })
    }

    /// The constant the display losses drop relative to the full negative
    /// log-density: `(d/2) ln 2π` for the Gaussian, zero for the other two.
    pub fn normalizing_constant(&self) -> S {
        match self.kind {
            FamilyKind::Gaussian => {
                let two_pi = S::PI() + S::PI();
                cast::<S>(self.dim as f64) * two_pi.ln() / cast(2.0)
            }
            _ => S::zero(),
        }
    }

    /// Full negative log-density: the display loss plus
    /// [`normalizing_constant`](Self::normalizing_constant).
    pub fn absolute_loss(&self, mu: &ExpectationParam<S>, x: &Example<S>) -> Result<S> {
        Ok(self.loss(mu, x)? + self.normalizing_constant())
    }
}

/// `ln(1 + e^t)` without overflow for large positive t.
fn softplus<S: Scalar>(t: S) -> S {
    if t > S::zero() {
        t + S::ln_1p((-t).exp())
    } else {
        S::ln_1p(t.exp())
    }
}

/// `e^t / (1 + e^t)` evaluated from the side that avoids overflow.
fn sigmoid<S: Scalar>(t: S) -> S {
    if t >= S::zero() {
        (S::one() + (-t).exp()).recip()
    } else {
        let e = t.exp();
        e / (S::one() + e)
    }
}
