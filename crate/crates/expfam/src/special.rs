//! Log-Gamma, which the Bernoulli closed forms and the Beta prior need.
//!
//! Lanczos approximation with g = 7 and 9 terms, the standard coefficient
//! set. Relative accuracy is comfortably below 1e-13 on [0.5, 1e6]; the
//! tests pin values computed with 30-digit arithmetic. Arguments below 0.5
//! go through the reflection formula, although nothing in this crate calls
//! it there.

use crate::scalar::{cast, Scalar};

const LANCZOS_G: f64 = 7.0;
#[allow(clippy::excessive_precision)]
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

pub fn ln_gamma<S: Scalar>(x: S) -> S {
    if !x.is_finite() {
        return S::nan();
    }
    let half = cast::<S>(0.5);
    if x < half {
        // reflection: ln G(x) = ln(pi / sin(pi x)) - ln G(1 - x)
        let pi = S::PI();
        return (pi / (pi * x).sin()).ln() - ln_gamma(S::one() - x);
    }
    let z = x - S::one();
    let mut series = cast::<S>(LANCZOS[0]);
    for (k, &c) in LANCZOS.iter().enumerate().skip(1) {
        series += cast::<S>(c) / (z + count(k as u64));
    }
    let t = z + cast::<S>(LANCZOS_G) + half;
    let two_pi = S::PI() + S::PI();
    half * two_pi.ln() + (z + half) * t.ln() - t + series.ln()
}

fn count<S: Scalar>(n: u64) -> S {
    crate::scalar::count(n)
}

/// `ln B(a, b) = ln G(a) + ln G(b) - ln G(a + b)`
pub fn ln_beta<S: Scalar>(a: S, b: S) -> S {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}
