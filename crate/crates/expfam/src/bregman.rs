//! Bregman divergences in both parametrizations.
//!
//! For a differentiable strictly convex G, the divergence
//! `Δ_G(a, b) = G(a) − G(b) − (a − b)·∇G(b)` is the remainder of G beyond
//! its linearization at b: nonnegative, zero only at a = b, convex in a,
//! and unchanged by affine shifts of G. Taking G to be a family's cumulant
//! gives Δ_G on natural parameters; taking its dual F gives Δ_F on
//! expectation parameters, and the two are linked by
//! `Δ_G(θ̃, θ) = Δ_F(g(θ), g(θ̃))` (note the argument swap). Either form is
//! the relative entropy between the corresponding family members.

use crate::error::{Error, Result};
use crate::families::{Example, ExpectationParam, Family, NaturalParam};
use crate::linalg::Matrix;
use crate::scalar::{cast, Scalar};

/// Below this ∞-norm separation of the arguments the divergence switches
/// from the value/gradient formula to the quadratic form in the Hessian at
/// the second argument. The direct formula subtracts nearly equal
/// quantities there and loses all significant digits; the quadratic form is
/// exact to third order in the separation.
pub const NEAR_EQUAL_WIDTH: f64 = 1e-8;

/// A computed divergence. Convexity makes the true value nonnegative, so
/// construction clamps the tiny negatives floating point can produce.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct DivergenceValue<S>(S);

impl<S: Scalar> DivergenceValue<S> {
    fn from_raw(raw: S) -> Self {
        Self(if raw < S::zero() { S::zero() } else { raw })
    }

    pub fn value(self) -> S {
        self.0
    }
}

/// A differentiable strictly convex function on a slice-shaped domain,
/// enough to evaluate its Bregman divergence. Implemented by the two
/// family potentials below; tests add shifted variants.
pub trait Potential<S: Scalar> {
    fn dim(&self) -> usize;
    fn value(&self, p: &[S]) -> Result<S>;
    fn gradient(&self, p: &[S]) -> Result<Vec<S>>;
    fn hessian(&self, p: &[S]) -> Result<Matrix<S>>;

    /// `Δ(a, b)` with the near-equal quadratic path (see
    /// [`NEAR_EQUAL_WIDTH`]).
    fn divergence(&self, a: &[S], b: &[S]) -> Result<DivergenceValue<S>> {
        if a.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: a.len(),
            });
        }
        if b.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: b.len(),
            });
        }
        let mut width = S::zero();
        for (&ai, &bi) in a.iter().zip(b.iter()) {
            width = width.max((ai - bi).abs());
        }
        let raw = if width < cast(NEAR_EQUAL_WIDTH) {
            let diff: Vec<S> = a.iter().zip(b.iter()).map(|(&ai, &bi)| ai - bi).collect();
            self.hessian(b)?.quad_form(&diff) / cast(2.0)
        } else {
            let grad_b = self.gradient(b)?;
            let mut linear = S::zero();
            for ((&ai, &bi), &gi) in a.iter().zip(b.iter()).zip(grad_b.iter()) {
                linear += (ai - bi) * gi;
            }
            self.value(a)? - self.value(b)? - linear
        };
        Ok(DivergenceValue::from_raw(raw))
    }
}

/// The cumulant G as a [`Potential`] on natural parameters.
#[derive(Clone, Copy, Debug)]
pub struct CumulantPotential<S> {
    family: Family<S>,
}

impl<S: Scalar> CumulantPotential<S> {
    pub fn new(family: Family<S>) -> Self {
        Self { family }
    }
}

impl<S: Scalar> Potential<S> for CumulantPotential<S> {
    fn dim(&self) -> usize {
        self.family.dim()
    }

    fn value(&self, p: &[S]) -> Result<S> {
        self.family.cumulant(&NaturalParam::new(p.to_vec()))
    }

    fn gradient(&self, p: &[S]) -> Result<Vec<S>> {
        Ok(self
            .family
            .link(&NaturalParam::new(p.to_vec()))?
            .into_vec())
    }

    fn hessian(&self, p: &[S]) -> Result<Matrix<S>> {
        self.family.cumulant_hessian(&NaturalParam::new(p.to_vec()))
    }
}

/// The dual F as a [`Potential`] on expectation parameters. Values extend
/// to the Bernoulli closure; gradients and Hessians stay interior.
#[derive(Clone, Copy, Debug)]
pub struct DualPotential<S> {
    family: Family<S>,
}

impl<S: Scalar> DualPotential<S> {
    pub fn new(family: Family<S>) -> Self {
        Self { family }
    }
}

impl<S: Scalar> Potential<S> for DualPotential<S> {
    fn dim(&self) -> usize {
        self.family.dim()
    }

    fn value(&self, p: &[S]) -> Result<S> {
        self.family.dual(&ExpectationParam::new(p.to_vec()))
    }

    fn gradient(&self, p: &[S]) -> Result<Vec<S>> {
        Ok(self
            .family
            .inverse_link(&ExpectationParam::new(p.to_vec()))?
            .into_vec())
    }

    fn hessian(&self, p: &[S]) -> Result<Matrix<S>> {
        self.family.dual_hessian(&ExpectationParam::new(p.to_vec()))
    }
}

/// `Δ_G(θ_new, θ_old)` over the family's cumulant.
pub fn divergence_natural<S: Scalar>(
    family: &Family<S>,
    theta_new: &NaturalParam<S>,
    theta_old: &NaturalParam<S>,
) -> Result<DivergenceValue<S>> {
    CumulantPotential::new(*family).divergence(theta_new, theta_old)
}

/// `Δ_F(mu_a, mu_b)` over the dual potential. The first argument may sit
/// on the Bernoulli closure (F extends there); the second must be interior
/// because the gradient f(mu_b) appears.
pub fn divergence_expectation<S: Scalar>(
    family: &Family<S>,
    mu_a: &ExpectationParam<S>,
    mu_b: &ExpectationParam<S>,
) -> Result<DivergenceValue<S>> {
    DualPotential::new(*family).divergence(mu_a, mu_b)
}

/// `Δ_F(x, mu)` with the example as first argument: the loss of μ on x in
/// excess of the best hindsight loss on x alone. Used by regret
/// accounting; for the Bernoulli this is finite even at x ∈ {0, 1}.
pub fn divergence_to_example<S: Scalar>(
    family: &Family<S>,
    x: &Example<S>,
    mu: &ExpectationParam<S>,
) -> Result<DivergenceValue<S>> {
    family.check_example(x)?;
    DualPotential::new(*family).divergence(x, mu)
}
