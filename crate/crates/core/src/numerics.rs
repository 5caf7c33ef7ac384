//! Special functions and statistical deviation terms shared by the rate model.
//!
//! Everything here is a pure function of its arguments. Quantities that are
//! products of many probabilities (binomial masses with exponents of order
//! 10^5) are handled in log space by the callers; this module only supplies
//! the log-domain building blocks.

use std::fmt;

use crate::error::{Error, Result};

/// A real number known to lie in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct Probability(f64);

impl Probability {
    pub const ZERO: Probability = Probability(0.0);
    pub const ONE: Probability = Probability(1.0);
    pub const HALF: Probability = Probability(0.5);

    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Probability(value))
        } else {
            Err(Error::OutOfRange {
                name: "probability",
                value,
                range: "[0, 1]",
            })
        }
    }

    /// Clamps into `[0, 1]`. NaN maps to zero.
    pub fn saturating(value: f64) -> Self {
        if value.is_nan() {
            Probability(0.0)
        } else {
            Probability(value.clamp(0.0, 1.0))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    #[inline]
    pub fn complement(self) -> Self {
        Probability(1.0 - self.0)
    }
}

impl fmt::Display for Probability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl TryFrom<f64> for Probability {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Probability::new(value)
    }
}

impl From<Probability> for f64 {
    fn from(p: Probability) -> f64 {
        p.0
    }
}

/// Binary Shannon entropy `h2(x)` in bits, with `0 log 0 = 0`.
pub fn binary_entropy(x: Probability) -> f64 {
    let x = x.value();
    if x == 0.0 || x == 1.0 {
        return 0.0;
    }
    let h = -x * x.log2() - (1.0 - x) * (1.0 - x).log2();
    h.clamp(0.0, 1.0)
}

/// Deviation `xi(eps, m) = sqrt((ln(1/eps) + 2 ln(m+1)) / (2m))` of an
/// empirical frequency estimated from `m` samples with failure probability `eps`.
///
/// `m` is real-valued; pulse counts such as `N_A * P_S` are generally not integers.
pub fn deviation_xi(epsilon: f64, m: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::OutOfRange {
            name: "epsilon",
            value: epsilon,
            range: "(0, 1)",
        });
    }
    if !(m > 0.0) {
        return Err(Error::OutOfRange {
            name: "m",
            value: m,
            range: "(0, inf)",
        });
    }
    if m.is_infinite() {
        return Ok(0.0);
    }
    Ok(((-epsilon.ln() + 2.0 * m.ln_1p()) / (2.0 * m)).sqrt())
}

#[inline]
pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

#[inline]
pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// Natural log of `|Gamma(x)|`.
#[inline]
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

// Below this n the coefficient is accumulated as a product, which avoids the
// cancellation between log-gamma values of size ~upper*ln(upper).
const PRODUCT_FORM_LIMIT: u64 = 64;

/// `ln C(upper, n)` for real `upper >= 0` and integer `n`, i.e.
/// `ln Gamma(upper+1) - ln Gamma(n+1) - ln Gamma(upper-n+1)`.
///
/// Returns `-inf` (a zero coefficient) when `n > upper`.
pub fn log_generalized_binomial(upper: f64, n: u64) -> f64 {
    debug_assert!(upper >= 0.0);
    let nf = n as f64;
    if nf > upper {
        return f64::NEG_INFINITY;
    }
    if n == 0 {
        return 0.0;
    }
    if n <= PRODUCT_FORM_LIMIT {
        (0..n)
            .map(|k| {
                let k = k as f64;
                ((upper - k) / (k + 1.0)).ln()
            })
            .sum()
    } else {
        ln_gamma(upper + 1.0) - ln_gamma(nf + 1.0) - ln_gamma(upper - nf + 1.0)
    }
}
