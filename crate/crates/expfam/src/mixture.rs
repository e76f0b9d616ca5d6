//! Bayes-mixture reference values for one-dimensional families:
//!
//! ```text
//! -(1/η) ln ∫ P₁(µ) exp(-η L(µ)) dµ
//! ```
//!
//! with `L(µ)` the total display loss of playing the fixed mean µ on the
//! whole sequence. The integral runs over the mean parameter and is
//! evaluated by adaptive quadrature in the log domain, so long sequences
//! whose `e^{-ηL}` underflows stay representable.
//!
//! Supported pairs: Bernoulli with a Beta prior (the integrand is mapped
//! through `µ = sin²φ`, which absorbs the Beta(1/2,1/2) endpoint
//! singularity) and one-dimensional Gaussian with a Gaussian prior. With
//! the Jeffreys prior Beta(1/2,1/2) and η = 1 the value coincides with
//! the forward algorithm's total loss on the same bits, which is the
//! comparison the verification suite drives.

use crate::error::{Error, Result};
use crate::families::{Example, ExpectationParam, Family, FamilyKind};
use crate::quadrature::integrate_log;
use crate::scalar::{cast, count, Scalar};
use crate::special::ln_beta;

const MAX_INTERVALS: usize = 2000;

/// Prior over the mean parameter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PriorSpec<S> {
    Beta { a: S, b: S },
    Gaussian { mean: S, variance: S },
}

impl<S: Scalar> PriorSpec<S> {
    pub fn beta(a: S, b: S) -> Result<Self> {
        if !(a > S::zero() && a.is_finite() && b > S::zero() && b.is_finite()) {
            return Err(Error::Precondition(format!(
                "Beta prior needs positive finite shapes, got ({a}, {b})"
            )));
        }
        Ok(PriorSpec::Beta { a, b })
    }

    pub fn gaussian(mean: S, variance: S) -> Result<Self> {
        if !mean.is_finite() || !(variance > S::zero() && variance.is_finite()) {
            return Err(Error::Precondition(format!(
                "Gaussian prior needs a finite mean and positive variance, got ({mean}, {variance})"
            )));
        }
        Ok(PriorSpec::Gaussian { mean, variance })
    }

    pub fn jeffreys() -> Self {
        PriorSpec::Beta {
            a: cast(0.5),
            b: cast(0.5),
        }
    }
}

fn check_setup<S: Scalar>(
    family: &Family<S>,
    prior: &PriorSpec<S>,
    eta: S,
    examples: &[Example<S>],
) -> Result<()> {
    if family.dim() != 1 {
        return Err(Error::Precondition(format!(
            "mixture values are defined here for one-dimensional families, got dim {}",
            family.dim()
        )));
    }
    if !(eta > S::zero() && eta.is_finite()) {
        return Err(Error::Precondition(format!(
            "mixture learning rate must be positive and finite, got {eta}"
        )));
    }
    match (family.kind(), prior) {
        (FamilyKind::Bernoulli, PriorSpec::Beta { .. }) => {}
        (FamilyKind::Gaussian, PriorSpec::Gaussian { .. }) => {}
        (FamilyKind::Gamma, _) => {
            return Err(Error::Precondition(
                "Gamma mixtures are not supported; use Bernoulli or Gaussian".into(),
            ))
        }
        (kind, prior) => {
            return Err(Error::Precondition(format!(
                "prior {prior:?} does not match family {kind}"
            )))
        }
    }
    for x in examples {
        family.check_example(x)?;
    }
    Ok(())
}

/// Total display loss of the constant mean µ over the sequence, summed
/// in presentation order.
fn total_loss_at<S: Scalar>(family: &Family<S>, mu: S, examples: &[Example<S>]) -> Result<S> {
    let mu = ExpectationParam::new(vec![mu]);
    let mut acc = S::zero();
    for x in examples {
        acc += family.loss(&mu, x)?;
    }
    Ok(acc)
}

/// `-(1/η) ln ∫ P₁(µ) e^{-η L(µ)} dµ` to about 1e-9 absolute (looser
/// once η drops below ~1e-4, where the log-domain tolerance floors out).
pub fn mixture_bound<S: Scalar>(
    family: &Family<S>,
    prior: &PriorSpec<S>,
    eta: S,
    examples: &[Example<S>],
) -> Result<S> {
    check_setup(family, prior, eta, examples)?;
    let log_tol = (eta * cast(1e-9)).min(cast(1e-10)).max(cast(5e-15));

    let log_mass = match *prior {
        PriorSpec::Beta { a, b } => {
            // µ = sin²φ on [0, π/2]: dµ = 2 sinφ cosφ dφ turns the
            // Beta density into 2 sin^{2a-1}φ cos^{2b-1}φ / B(a,b);
            // the exponents are attached only when nonzero so the
            // Jeffreys case never multiplies 0 by ln 0
            let ln_norm = cast::<S>(2.0).ln() - ln_beta(a, b);
            let sin_coef = cast::<S>(2.0) * a - S::one();
            let cos_coef = cast::<S>(2.0) * b - S::one();
            let logf = |phi: S| {
                let (sin, cos) = (phi.sin(), phi.cos());
                let mut acc = ln_norm;
                if sin_coef != S::zero() {
                    acc += sin_coef * sin.ln();
                }
                if cos_coef != S::zero() {
                    acc += cos_coef * cos.ln();
                }
                match total_loss_at(family, sin * sin, examples) {
                    Ok(loss) => acc - eta * loss,
                    Err(_) => S::nan(),
                }
            };
            integrate_log(logf, S::zero(), S::FRAC_PI_2(), log_tol, MAX_INTERVALS)?
        }
        PriorSpec::Gaussian { mean, variance } => {
            // the exponent is an exact downward parabola with curvature
            // A = 1/s² + ηT; a window of ±16 posterior deviations holds
            // all but e^{-128} of the mass
            let t_len = count::<S>(examples.len() as u64);
            let data_sum: S = examples.iter().map(|x| x.as_slice()[0]).sum();
            let curvature = variance.recip() + eta * t_len;
            let center = (mean / variance + eta * data_sum) / curvature;
            let halfwidth = cast::<S>(16.0) / curvature.sqrt();
            let ln_norm = -(cast::<S>(2.0) * S::PI() * variance).ln() / cast(2.0);
            let logf = |mu: S| {
                let dev = mu - mean;
                let prior_part = ln_norm - dev * dev / (cast::<S>(2.0) * variance);
                match total_loss_at(family, mu, examples) {
                    Ok(loss) => prior_part - eta * loss,
                    Err(_) => S::nan(),
                }
            };
            integrate_log(
                logf,
                center - halfwidth,
                center + halfwidth,
                log_tol,
                MAX_INTERVALS,
            )?
        }
    };
    Ok(-log_mass / eta)
}

/// Evaluates [`mixture_bound`] on every ordering of the sequence and
/// returns the spread `max - min`. In exact arithmetic the value is
/// order-free; this measures how far the evaluation pipeline drifts
/// from that.
pub fn permutation_invariance_check<S: Scalar>(
    family: &Family<S>,
    prior: &PriorSpec<S>,
    eta: S,
    examples: &[Example<S>],
) -> Result<S> {
    if examples.len() > 8 {
        return Err(Error::Precondition(format!(
            "permutation enumeration is factorial; {} examples is past the T = 8 cap",
            examples.len()
        )));
    }
    let mut order: Vec<Example<S>> = examples.to_vec();
    let mut lo = S::infinity();
    let mut hi = S::neg_infinity();
    let mut visit = |seq: &[Example<S>]| -> Result<()> {
        let v = mixture_bound(family, prior, eta, seq)?;
        lo = lo.min(v);
        hi = hi.max(v);
        Ok(())
    };

    // Heap's algorithm, iterative form
    visit(&order)?;
    let n = order.len();
    let mut c = vec![0usize; n];
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                order.swap(0, i);
            } else {
                order.swap(c[i], i);
            }
            visit(&order)?;
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    if n == 0 {
        return Ok(S::zero());
    }
    Ok(hi - lo)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::online::{self, Mode};

    fn bernoulli_bits(bits: &[u8]) -> Vec<Example<f64>> {
        bits.iter().map(|&b| Example::scalar(b as f64)).collect()
    }

    #[test]
    fn jeffreys_single_one_gives_ln2() {
        let family = Family::<f64>::bernoulli();
        let v = mixture_bound(&family, &PriorSpec::jeffreys(), 1.0, &bernoulli_bits(&[1]))
            .unwrap();
        assert!((v - std::f64::consts::LN_2).abs() < 1e-9, "{v}");
    }

    #[test]
    fn jeffreys_matches_forward_total_loss() {
        let family = Family::<f64>::bernoulli();
        let start = ExpectationParam::scalar(0.5);
        for bits in [
            &[0u8][..],
            &[1, 0, 1],
            &[1, 1, 1, 1],
            &[0, 1, 1, 0, 0, 1],
            &[1, 0, 0, 0, 0, 0, 1, 1],
        ] {
            let examples = bernoulli_bits(bits);
            let mix =
                mixture_bound(&family, &PriorSpec::jeffreys(), 1.0, &examples).unwrap();
            let trace = online::run(&family, &start, 0.0, Mode::Forward, &examples).unwrap();
            assert!(
                (mix - trace.total_loss()).abs() < 1e-7,
                "bits {bits:?}: mixture {mix} vs forward {}",
                trace.total_loss()
            );
        }
    }

    #[test]
    fn empty_sequence_bound_is_zero() {
        let family = Family::<f64>::bernoulli();
        let v = mixture_bound(&family, &PriorSpec::jeffreys(), 1.0, &[]).unwrap();
        assert!(v.abs() < 1e-9, "{v}");

        let family = Family::<f64>::gaussian(1).unwrap();
        let prior = PriorSpec::gaussian(0.3, 2.0).unwrap();
        let v = mixture_bound(&family, &prior, 0.7, &[]).unwrap();
        assert!(v.abs() < 1e-9, "{v}");
    }

    #[test]
    fn gaussian_matches_its_closed_form() {
        // completing the square: ln ∫ = B²/(2A) - C - ln(A s²)/2 with
        // A = 1/s² + ηT, B = m/s² + ηΣx, C = m²/(2s²) + ηΣx²/2
        let family = Family::<f64>::gaussian(1).unwrap();
        let (m, s2, eta) = (0.3, 2.5, 0.7);
        let data = [1.2, -0.4, 0.8];
        let prior = PriorSpec::gaussian(m, s2).unwrap();
        let examples: Vec<_> = data.iter().map(|&x| Example::scalar(x)).collect();
        let v = mixture_bound(&family, &prior, eta, &examples).unwrap();

        let t = data.len() as f64;
        let (sum, sum_sq) = (
            data.iter().sum::<f64>(),
            data.iter().map(|x| x * x).sum::<f64>(),
        );
        let a = 1.0 / s2 + eta * t;
        let b = m / s2 + eta * sum;
        let c = m * m / (2.0 * s2) + eta * sum_sq / 2.0;
        let expect = -(b * b / (2.0 * a) - c - 0.5 * (a * s2).ln()) / eta;
        assert!((v - expect).abs() < 1e-9, "{v} vs {expect}");
    }

    #[test]
    fn tight_gaussian_prior_on_true_mean_sends_bound_to_zero() {
        let family = Family::<f64>::gaussian(1).unwrap();
        let zeros = vec![Example::scalar(0.0); 10];
        let mut last = f64::INFINITY;
        for s2 in [1.0, 1e-2, 1e-4, 1e-6] {
            let prior = PriorSpec::gaussian(0.0, s2).unwrap();
            let v = mixture_bound(&family, &prior, 1.0, &zeros).unwrap();
            let expect = 0.5 * (1.0 + 10.0 * s2).ln();
            assert!((v - expect).abs() < 1e-9, "s2={s2}: {v} vs {expect}");
            assert!(v < last);
            last = v;
        }
        assert!(last < 1e-5);
    }

    #[test]
    fn mismatched_setups_are_rejected() {
        let bernoulli = Family::<f64>::bernoulli();
        let gaussian1 = Family::<f64>::gaussian(1).unwrap();
        let gaussian2 = Family::<f64>::gaussian(2).unwrap();
        let gamma = Family::<f64>::gamma();
        let beta = PriorSpec::jeffreys();
        let normal = PriorSpec::gaussian(0.0, 1.0).unwrap();

        assert!(mixture_bound(&gamma, &beta, 1.0, &[]).is_err());
        assert!(mixture_bound(&bernoulli, &normal, 1.0, &[]).is_err());
        assert!(mixture_bound(&gaussian1, &beta, 1.0, &[]).is_err());
        assert!(mixture_bound(&gaussian2, &normal, 1.0, &[]).is_err());
        assert!(mixture_bound(&bernoulli, &beta, 0.0, &[]).is_err());
        assert!(mixture_bound(&bernoulli, &beta, -1.0, &[]).is_err());
        assert!(
            mixture_bound(&bernoulli, &beta, 1.0, &[Example::scalar(0.5)]).is_err(),
            "non-binary example must be rejected"
        );
        assert!(PriorSpec::beta(0.0, 1.0).is_err());
        assert!(PriorSpec::gaussian(0.0, 0.0).is_err());
    }

    #[test]
    fn permutation_spread_is_negligible() {
        let bernoulli = Family::<f64>::bernoulli();
        let spread = permutation_invariance_check(
            &bernoulli,
            &PriorSpec::jeffreys(),
            1.0,
            &bernoulli_bits(&[1, 0, 1]),
        )
        .unwrap();
        assert!(spread < 1e-9, "{spread}");

        let spread = permutation_invariance_check(
            &bernoulli,
            &PriorSpec::jeffreys(),
            1.0,
            &bernoulli_bits(&[1]),
        )
        .unwrap();
        assert_eq!(spread, 0.0);

        let gaussian = Family::<f64>::gaussian(1).unwrap();
        let prior = PriorSpec::gaussian(0.0, 1.0).unwrap();
        let examples = [Example::scalar(1.0), Example::scalar(-1.0)];
        let spread =
            permutation_invariance_check(&gaussian, &prior, 1.0, &examples).unwrap();
        assert!(spread < 1e-9, "{spread}");
    }

    #[test]
    fn permutation_enumeration_is_capped() {
        let family = Family::<f64>::bernoulli();
        let nine = bernoulli_bits(&[1, 0, 1, 0, 1, 0, 1, 0, 1]);
        assert!(matches!(
            permutation_invariance_check(&family, &PriorSpec::jeffreys(), 1.0, &nine),
            Err(Error::Precondition(_))
        ));
    }
}
