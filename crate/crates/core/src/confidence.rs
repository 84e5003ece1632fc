//! Clopper-Pearson bounds on class probabilities from Monte Carlo counts.
//!
//! The total failure probability `alpha` is split by a union bound: `alpha/2`
//! for the one-sided lower bound under `P` and `alpha/4` for each side of the
//! two-sided interval under `Q`.

use alloc::format;

use crate::error::{Error, Result};
use crate::special::beta_quantile;

/// Failure probability used when none is configured.
pub const DEFAULT_ALPHA: f64 = 0.001;
/// Samples per distribution used when none is configured.
pub const DEFAULT_NUM_SAMPLES: u64 = 50_000;

/// Confidence-bounded top-class probabilities under `P` and `Q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbBounds {
    pub pa_low: f64,
    pub qa_low: f64,
    pub qa_high: f64,
    pub alpha: f64,
    pub n: u64,
}

fn check(x: u64, n: u64, a: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::domain("number of trials must be positive"));
    }
    if x > n {
        return Err(Error::domain(format!("count {x} exceeds trials {n}")));
    }
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::domain(format!("confidence level must lie in (0, 1), got {a}")));
    }
    Ok(())
}

/// One-sided Clopper-Pearson lower bound: the `a`-quantile of
/// `Beta(x, n - x + 1)`, and 0 when `x = 0`.
pub fn cp_lower(x: u64, n: u64, a: f64) -> Result<f64> {
    check(x, n, a)?;
    if x == 0 {
        return Ok(0.0);
    }
    Ok(beta_quantile(x as f64, (n - x + 1) as f64, a))
}

/// One-sided Clopper-Pearson upper bound, `1 - cp_lower(n - x, n, a)`.
pub fn cp_upper(x: u64, n: u64, a: f64) -> Result<f64> {
    check(x, n, a)?;
    Ok(1.0 - cp_lower(n - x, n, a)?)
}

/// Bounds for double sampling: `pa_low` at level `alpha/2`, and the `Q`
/// interval at `alpha/4` per side.
pub fn double_sampling_bounds(count_p: u64, count_q: u64, n: u64, alpha: f64) -> Result<ProbBounds> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    Ok(ProbBounds {
        pa_low: cp_lower(count_p, n, alpha / 2.0)?,
        qa_low: cp_lower(count_q, n, alpha / 4.0)?,
        qa_high: cp_upper(count_q, n, alpha / 4.0)?,
        alpha,
        n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use libm::{exp, fabs, log, pow};

    /// `P(Bin(n, p) >= x)` by direct summation in log space.
    fn upper_tail(x: u64, n: u64, p: f64) -> f64 {
        let lnp = log(p);
        let lnq = libm::log1p(-p);
        let mut acc = 0.0;
        for j in x..=n {
            let lc = crate::special::ln_gamma(n as f64 + 1.0)
                - crate::special::ln_gamma(j as f64 + 1.0)
                - crate::special::ln_gamma((n - j) as f64 + 1.0);
            acc += exp(lc + j as f64 * lnp + (n - j) as f64 * lnq);
        }
        acc
    }

    #[test]
    fn zero_successes() {
        assert_eq!(cp_lower(0, 37, 0.01).unwrap(), 0.0);
        assert_eq!(cp_upper(37, 37, 0.01).unwrap(), 1.0);
    }

    #[test]
    fn all_successes_closed_form() {
        let v = cp_lower(100, 100, 0.001).unwrap();
        assert!(fabs(v - pow(0.001, 0.01)) < 1e-14);
        assert!(fabs(v - 0.933_254_300_796_991) < 1e-12);
        let u = cp_upper(0, 100, 0.001).unwrap();
        assert!(fabs(u - (1.0 - pow(0.001, 0.01))) < 1e-14);
    }

    #[test]
    fn matches_binomial_tail_bisection() {
        let (x, n, a) = (990, 1000, 0.0005);
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if upper_tail(x, n, mid) < a {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let got = cp_lower(x, n, a).unwrap();
        assert!(fabs(got - 0.5 * (lo + hi)) < 1e-6, "{got} vs {}", 0.5 * (lo + hi));
    }

    #[test]
    fn domain_errors() {
        assert!(cp_lower(5, 4, 0.1).is_err());
        assert!(cp_lower(0, 0, 0.1).is_err());
        assert!(cp_lower(1, 4, 0.0).is_err());
        assert!(cp_upper(1, 4, 1.0).is_err());
        assert!(double_sampling_bounds(3, 3, 10, 1.5).is_err());
    }

    #[test]
    fn double_sampling_all_hits() {
        let b = double_sampling_bounds(100, 100, 100, 0.001).unwrap();
        assert!(fabs(b.pa_low - pow(0.0005, 0.01)) < 1e-14);
        assert!(fabs(b.pa_low - 0.926_807_842_455_829_9) < 1e-12);
        assert_eq!(b.qa_high, 1.0);
        assert!(fabs(b.qa_low - pow(0.00025, 0.01)) < 1e-14);
    }

    #[test]
    fn zero_count_abstains() {
        let b = double_sampling_bounds(0, 4, 10, 0.001).unwrap();
        assert_eq!(b.pa_low, 0.0);
    }
}
