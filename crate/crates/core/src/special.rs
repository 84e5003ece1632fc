//! Special functions: log-gamma, regularized incomplete gamma and beta,
//! the normal and Student-t laws, and their inverses.
//!
//! Everything works in `f64`. Invalid arguments produce `NaN` rather than an
//! error so these can sit inside quadrature loops; callers validate first.

use libm::{exp, expm1, fabs, log, log1p};

const EPS: f64 = 1e-16;
const FPMIN: f64 = 1e-300;
const MAX_ITER: usize = 100_000;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

const STIRLING: [f64; 7] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
];

/// Natural log of the gamma function for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    if !(x > 0.0) || x.is_infinite() {
        return if x == f64::INFINITY { f64::INFINITY } else { f64::NAN };
    }
    if x < 0.5 {
        return ln_gamma(x + 1.0) - log(x);
    }
    if x >= 10.0 {
        // Stirling series; truncation error below 1e-16 for x >= 10.
        let inv = 1.0 / x;
        let inv2 = inv * inv;
        let mut series = 0.0;
        for c in STIRLING.iter().rev() {
            series = series * inv2 + c;
        }
        let series = series * inv;
        return (x - 0.5) * log(x) - x + LN_SQRT_2PI + series;
    }
    let z = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    LN_SQRT_2PI + (z + 0.5) * log(t) - t + log(acc)
}

/// `ln B(a, b)`.
pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Regularized incomplete gamma functions `(P(a, x), Q(a, x))`.
///
/// Series expansion below `x < a + 1`, Lentz continued fraction above, so
/// whichever of the pair is small is computed without cancellation.
pub fn gamma_pq(a: f64, x: f64) -> (f64, f64) {
    if !(a > 0.0) || x.is_nan() || x < 0.0 {
        return (f64::NAN, f64::NAN);
    }
    if x == 0.0 {
        return (0.0, 1.0);
    }
    if x == f64::INFINITY {
        return (1.0, 0.0);
    }
    let log_prefactor = a * log(x) - x - ln_gamma(a);
    if x < a + 1.0 {
        let mut ap = a;
        let mut term = 1.0 / a;
        let mut sum = term;
        for _ in 0..MAX_ITER {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if fabs(term) < fabs(sum) * EPS {
                break;
            }
        }
        let p = sum * exp(log_prefactor);
        let p = p.min(1.0);
        (p, 1.0 - p)
    } else {
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / FPMIN;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..MAX_ITER {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if fabs(d) < FPMIN {
                d = FPMIN;
            }
            c = b + an / c;
            if fabs(c) < FPMIN {
                c = FPMIN;
            }
            d = 1.0 / d;
            let del = d * c;
            h *= del;
            if fabs(del - 1.0) < EPS {
                break;
            }
        }
        let q = (exp(log_prefactor) * h).min(1.0);
        (1.0 - q, q)
    }
}

/// Regularized lower incomplete gamma `P(a, x)`.
pub fn gamma_p(a: f64, x: f64) -> f64 {
    gamma_pq(a, x).0
}

fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if fabs(d) < FPMIN {
        d = FPMIN;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if fabs(d) < FPMIN {
            d = FPMIN;
        }
        c = 1.0 + aa / c;
        if fabs(c) < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if fabs(d) < FPMIN {
            d = FPMIN;
        }
        c = 1.0 + aa / c;
        if fabs(c) < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if fabs(del - 1.0) < EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta `I_x(a, b)` together with its complement.
pub fn beta_inc_pair(a: f64, b: f64, x: f64) -> (f64, f64) {
    if !(a > 0.0) || !(b > 0.0) || !(0.0..=1.0).contains(&x) {
        return (f64::NAN, f64::NAN);
    }
    if x == 0.0 {
        return (0.0, 1.0);
    }
    if x == 1.0 {
        return (1.0, 0.0);
    }
    beta_inc_pair_with(a, b, x, ln_beta(a, b))
}

/// [`beta_inc_pair`] with a precomputed `ln B(a, b)`; `x` must lie in (0, 1).
pub(crate) fn beta_inc_pair_with(a: f64, b: f64, x: f64, ln_beta_ab: f64) -> (f64, f64) {
    let log_front = a * log(x) + b * log1p(-x) - ln_beta_ab;
    if x < (a + 1.0) / (a + b + 2.0) {
        let v = (exp(log_front) * beta_cf(a, b, x) / a).min(1.0);
        (v, 1.0 - v)
    } else {
        let v = (exp(log_front) * beta_cf(b, a, 1.0 - x) / b).min(1.0);
        (1.0 - v, v)
    }
}

/// Regularized incomplete beta `I_x(a, b)`.
pub fn beta_inc(a: f64, b: f64, x: f64) -> f64 {
    beta_inc_pair(a, b, x).0
}

/// Quantile of the Beta(a, b) law by bisection on [`beta_inc`].
pub fn beta_quantile(a: f64, b: f64, p: f64) -> f64 {
    if !(0.0..=1.0).contains(&p) || !(a > 0.0) || !(b > 0.0) {
        return f64::NAN;
    }
    if p == 0.0 {
        return 0.0;
    }
    if p == 1.0 {
        return 1.0;
    }
    bisect(0.0, 1.0, |x| beta_inc(a, b, x) - p)
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let q = gamma_pq(0.5, 0.5 * x * x).1;
    if x < 0.0 {
        0.5 * q
    } else {
        1.0 - 0.5 * q
    }
}

/// Standard normal quantile `Φ⁻¹(p)` by bracketed bisection.
pub fn normal_quantile(p: f64) -> f64 {
    if !(0.0..=1.0).contains(&p) {
        return f64::NAN;
    }
    if p == 0.0 {
        return f64::NEG_INFINITY;
    }
    if p == 1.0 {
        return f64::INFINITY;
    }
    if p == 0.5 {
        return 0.0;
    }
    if p > 0.5 {
        // 1 - p is exact here.
        return -normal_quantile(1.0 - p);
    }
    bisect(-39.0, 0.0, |x| normal_cdf(x) - p)
}

/// CDF of Student's t law with `nu` degrees of freedom.
pub fn student_t_cdf(t: f64, nu: f64) -> f64 {
    if t.is_nan() || !(nu > 0.0) {
        return f64::NAN;
    }
    let tail = 0.5 * beta_inc(0.5 * nu, 0.5, nu / (nu + t * t));
    if t < 0.0 {
        tail
    } else {
        1.0 - tail
    }
}

/// Quantile of Student's t law.
pub fn student_t_quantile(p: f64, nu: f64) -> f64 {
    if !(0.0..=1.0).contains(&p) || !(nu > 0.0) {
        return f64::NAN;
    }
    if p == 0.5 {
        return 0.0;
    }
    if p < 0.5 {
        return -student_t_quantile(1.0 - p, nu);
    }
    let mut hi = 1.0;
    while student_t_cdf(hi, nu) < p {
        hi *= 2.0;
        if hi > 1e300 {
            return f64::INFINITY;
        }
    }
    bisect(0.0, hi, |t| student_t_cdf(t, nu) - p)
}

/// Bisection for an increasing function with `f(lo) <= 0 <= f(hi)`, run to
/// floating-point resolution.
pub(crate) fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `ln(e^a + e^b)`.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if hi == f64::INFINITY {
        return f64::INFINITY;
    }
    hi + log1p(exp(lo - hi))
}

/// `ln(e^a - e^b)` for `a > b`; `-inf` when `a <= b`.
pub fn log_sub_exp(a: f64, b: f64) -> f64 {
    if !(a > b) {
        return f64::NEG_INFINITY;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let diff = b - a;
    // ln(1 - e^diff), switching forms at -ln 2 for accuracy.
    let l = if diff > -core::f64::consts::LN_2 {
        log(-expm1(diff))
    } else {
        log1p(-exp(diff))
    };
    a + l
}

#[cfg(test)]
mod tests {
    use super::*;
    use libm::sqrt;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        fabs(a - b) <= tol * (1.0 + fabs(b))
    }

    #[test]
    fn ln_gamma_integers() {
        let mut fact = 1.0f64;
        for n in 1..30u32 {
            assert!(close(ln_gamma(n as f64), log(fact), 1e-14), "n={n}");
            fact *= n as f64;
        }
        assert!(close(ln_gamma(0.5), 0.5 * log(core::f64::consts::PI), 1e-15));
    }

    #[test]
    fn gamma_p_exponential_case() {
        for &x in &[0.1, 1.0, 2.5, 10.0, 40.0] {
            assert!(close(gamma_p(1.0, x), -expm1(-x), 1e-14));
        }
        assert_eq!(gamma_pq(3.0, 0.0), (0.0, 1.0));
        assert!(gamma_p(-1.0, 1.0).is_nan());
    }

    #[test]
    fn beta_inc_symmetry_and_uniform() {
        assert!(close(beta_inc(1.0, 1.0, 0.3), 0.3, 1e-15));
        for &x in &[0.05, 0.3, 0.5, 0.77] {
            let (a, b) = (3.5, 9.25);
            let s = beta_inc(a, b, x) + beta_inc(b, a, 1.0 - x);
            assert!(close(s, 1.0, 1e-13));
        }
    }

    #[test]
    fn normal_quantile_inverts_cdf() {
        for &p in &[1e-300, 1e-12, 0.001, 0.2, 0.5, 0.9, 0.999_999] {
            let x = normal_quantile(p);
            assert!(close(normal_cdf(x), p, 1e-12), "p={p}");
        }
        assert_eq!(normal_quantile(0.0), f64::NEG_INFINITY);
        assert!(normal_quantile(1.5).is_nan());
    }

    #[test]
    fn student_t_known_quantile() {
        // t_{0.975, 2} = 2 * sqrt(2) * 0.975.. closed form: t = (2p-1) * sqrt(2 / (1 - (2p-1)^2))
        let p: f64 = 0.975;
        let a = 2.0 * p - 1.0;
        let exact = a * sqrt(2.0 / (1.0 - a * a));
        assert!(close(student_t_quantile(p, 2.0), exact, 1e-12));
    }

    #[test]
    fn log_space_helpers() {
        assert!(close(log_add_exp(log(2.0), log(3.0)), log(5.0), 1e-15));
        assert!(close(log_sub_exp(log(5.0), log(3.0)), log(2.0), 1e-15));
        assert_eq!(log_sub_exp(1.0, 1.0), f64::NEG_INFINITY);
        assert_eq!(log_add_exp(f64::NEG_INFINITY, f64::NEG_INFINITY), f64::NEG_INFINITY);
    }
}
