//! Adaptive Gauss–Kronrod quadrature on finite intervals, with a
//! log-domain front end for integrands given as `exp(logf)` where the
//! exponent would under- or overflow.
//!
//! One interval is estimated by the 7/15 pair: the embedded 7-point
//! Gauss rule prices the 15-point Kronrod value, and the interval with
//! the worst error estimate is bisected until the total estimate drops
//! below the requested absolute tolerance.

use crate::error::{Error, Result};
use crate::scalar::{cast, Scalar};

// 15-point Kronrod abscissae on [-1,1], nonnegative half, descending.
// Odd positions (indices 1,3,5,7) are the embedded 7-point Gauss nodes.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.9914553711208126392,
    0.9491079123427585245,
    0.8648644233597690728,
    0.7415311855993944399,
    0.5860872354676911303,
    0.4058451513773971669,
    0.2077849550078984676,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022935322010529224964,
    0.063092092629978553291,
    0.104790010322250183840,
    0.140653259715525918745,
    0.169004726639267902827,
    0.190350578064785409913,
    0.204432940075298892414,
    0.209482141084727828013,
];

// weights of the embedded Gauss rule, matching XGK[1], XGK[3], XGK[5], XGK[7]
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129484966168869693271,
    0.279705391489276667901,
    0.381830050505118944950,
    0.417959183673469387755,
];

#[derive(Clone, Copy, Debug)]
struct Interval<S> {
    lo: S,
    hi: S,
    value: S,
    error: S,
}

/// Kronrod value and error estimate for one interval. The error follows
/// the classical scaling: the raw Gauss/Kronrod gap, damped through the
/// integrand's own variation so smooth integrands converge quickly.
fn kronrod<S: Scalar, F: Fn(S) -> S>(f: &F, lo: S, hi: S) -> Result<Interval<S>> {
    let center = (lo + hi) / cast(2.0);
    let half = (hi - lo) / cast(2.0);

    let mut fv = [S::zero(); 15];
    for (i, &xk) in XGK.iter().enumerate() {
        let offset = half * cast(xk);
        fv[i] = f(center + offset);
        if i < 7 {
            fv[14 - i] = f(center - offset);
        }
        if !fv[i].is_finite() || (i < 7 && !fv[14 - i].is_finite()) {
            return Err(Error::Numerical(format!(
                "integrand is not finite inside [{lo}, {hi}]"
            )));
        }
    }

    let mut resk = S::zero();
    for (i, &w) in WGK.iter().enumerate() {
        let pair = if i == 7 { fv[7] } else { fv[i] + fv[14 - i] };
        resk += cast::<S>(w) * pair;
    }
    let mut resg = S::zero();
    for (j, &w) in WG.iter().enumerate() {
        let i = 2 * j + 1;
        let pair = if i == 7 { fv[7] } else { fv[i] + fv[14 - i] };
        resg += cast::<S>(w) * pair;
    }

    let reskh = resk / cast(2.0);
    let mut resasc = S::zero();
    for (i, &w) in WGK.iter().enumerate() {
        let dev = if i == 7 {
            (fv[7] - reskh).abs()
        } else {
            (fv[i] - reskh).abs() + (fv[14 - i] - reskh).abs()
        };
        resasc += cast::<S>(w) * dev;
    }

    let raw = ((resk - resg) * half).abs();
    let scale = resasc * half.abs();
    let error = if scale > S::zero() && raw > S::zero() {
        let damped = (cast::<S>(200.0) * raw / scale).powf(cast(1.5));
        scale * damped.min(S::one())
    } else {
        raw
    };

    Ok(Interval {
        lo,
        hi,
        value: resk * half,
        error,
    })
}

/// Integrates `f` over `[lo, hi]`, bisecting until the summed error
/// estimate is at most `abs_tol`. Returns the value with the final
/// estimate. Fails when `max_intervals` subdivisions cannot reach the
/// tolerance or the integrand is not finite at a node.
pub fn integrate<S: Scalar, F: Fn(S) -> S>(
    f: F,
    lo: S,
    hi: S,
    abs_tol: S,
    max_intervals: usize,
) -> Result<(S, S)> {
    if !lo.is_finite() || !hi.is_finite() || lo > hi {
        return Err(Error::Precondition(format!(
            "integration interval [{lo}, {hi}] must be finite and ordered"
        )));
    }
    if !(abs_tol > S::zero()) {
        return Err(Error::Precondition("quadrature tolerance must be positive".into()));
    }
    if lo == hi {
        return Ok((S::zero(), S::zero()));
    }

    let mut intervals = vec![kronrod(&f, lo, hi)?];
    loop {
        let total_error: S = intervals.iter().map(|s| s.error).sum();
        if total_error <= abs_tol {
            let value = intervals.iter().map(|s| s.value).sum();
            return Ok((value, total_error));
        }
        if intervals.len() >= max_intervals {
            return Err(Error::Numerical(format!(
                "quadrature did not reach tolerance {abs_tol} within {max_intervals} \
                 intervals (error estimate {total_error})"
            )));
        }
        let worst = intervals
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.error.partial_cmp(&b.1.error).unwrap())
            .map(|(i, _)| i)
            .unwrap();
        let Interval { lo, hi, .. } = intervals.swap_remove(worst);
        let mid = (lo + hi) / cast(2.0);
        if mid <= lo || mid >= hi {
            // interval at floating-point resolution; keep its estimate
            intervals.push(kronrod(&f, lo, hi)?);
            return Err(Error::Numerical(
                "quadrature interval collapsed below floating-point resolution".into(),
            ));
        }
        intervals.push(kronrod(&f, lo, mid)?);
        intervals.push(kronrod(&f, mid, hi)?);
    }
}

/// Integrates `exp(logf)` over `[lo, hi]` and returns the log of the
/// integral with absolute accuracy about `log_tol`. The exponent is
/// shifted by its coarse-scan maximum so the actual quadrature runs on
/// values in [0, 1]; `logf` may return `-inf` where the integrand
/// vanishes.
pub fn integrate_log<S: Scalar, F: Fn(S) -> S>(
    logf: F,
    lo: S,
    hi: S,
    log_tol: S,
    max_intervals: usize,
) -> Result<S> {
    const SCAN_POINTS: usize = 257;
    if !lo.is_finite() || !hi.is_finite() || lo >= hi {
        return Err(Error::Precondition(format!(
            "integration interval [{lo}, {hi}] must be finite and ordered"
        )));
    }
    let width = hi - lo;
    let mut peak = S::neg_infinity();
    for i in 0..SCAN_POINTS {
        let x = lo + width * count_ratio(i, SCAN_POINTS - 1);
        let v = logf(x);
        if v.is_nan() {
            return Err(Error::Numerical(format!("log-integrand is NaN at {x}")));
        }
        if v > peak {
            peak = v;
        }
    }
    if peak == S::neg_infinity() {
        return Err(Error::Numerical(
            "log-integrand is -inf across the whole interval; integral vanishes".into(),
        ));
    }

    let shifted = |x: S| (logf(x) - peak).exp();
    // first pass bounds the mass, second pass converts the requested
    // accuracy of the log into an absolute tolerance on the mass
    let (rough, _) = integrate(shifted, lo, hi, cast(1e-6), max_intervals)?;
    if !(rough > S::zero()) {
        return Err(Error::Numerical(
            "integral vanishes after shifting; no mass inside the interval".into(),
        ));
    }
    let tol = (log_tol * rough / cast(2.0)).min(cast(1e-8));
    let (mass, _) = integrate(shifted, lo, hi, tol, max_intervals)?;
    if !(mass > S::zero()) || !mass.is_finite() {
        return Err(Error::Numerical(format!(
            "shifted integral evaluated to {mass}; cannot take its log"
        )));
    }
    Ok(peak + mass.ln())
}

fn count_ratio<S: Scalar>(i: usize, n: usize) -> S {
    cast::<S>(i as f64) / cast(n as f64)
}
