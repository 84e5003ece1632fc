//! Isotropic smoothing noise: the standard Gaussian and the generalized
//! Gaussian family with density proportional to `‖z‖^(-2k) exp(-‖z‖² / 2σ'²)`,
//! where `σ' = sqrt(d / (d - 2k)) σ`.
//!
//! Under either law `‖z‖² / σ'²` is gamma distributed with shape `d/2 - k` and
//! scale 2, and the direction `z / ‖z‖` is uniform on the sphere. Everything
//! downstream is expressed through that radial law and the law of one
//! coordinate of a uniform direction.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use libm::{exp, fabs, log, sqrt};
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::error::{Error, Result};
use crate::special::{self, beta_inc_pair_with, gamma_p, ln_beta, ln_gamma};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NoiseKind {
    StandardGaussian,
    GeneralGaussian,
}

impl NoiseKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NoiseKind::StandardGaussian => "standard-gaussian",
            NoiseKind::GeneralGaussian => "general-gaussian",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "standard-gaussian" | "standard" | "gaussian" => Some(NoiseKind::StandardGaussian),
            "general-gaussian" | "general" => Some(NoiseKind::GeneralGaussian),
            _ => None,
        }
    }
}

/// An isotropic noise distribution in `d` dimensions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    kind: NoiseKind,
    sigma: f64,
    k: u32,
    d: u32,
    sigma_prime: f64,
}

impl NoiseSpec {
    pub fn new(kind: NoiseKind, sigma: f64, k: u32, d: u32) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidSpec(format!("sigma must be positive and finite, got {sigma}")));
        }
        if d < 2 {
            return Err(Error::InvalidSpec(format!("dimension d must be at least 2, got {d}")));
        }
        let sigma_prime = match kind {
            NoiseKind::StandardGaussian => {
                if k != 0 {
                    return Err(Error::InvalidSpec(format!(
                        "standard-gaussian noise requires k = 0, got k = {k}"
                    )));
                }
                sigma
            }
            NoiseKind::GeneralGaussian => {
                if 2 * u64::from(k) >= u64::from(d) {
                    return Err(Error::InvalidSpec(format!(
                        "general-gaussian noise requires 2k < d, got k = {k}, d = {d}"
                    )));
                }
                sigma_prime(d, k, sigma)
            }
        };
        Ok(Self {
            kind,
            sigma,
            k,
            d,
            sigma_prime,
        })
    }

    pub fn standard(sigma: f64, d: u32) -> Result<Self> {
        Self::new(NoiseKind::StandardGaussian, sigma, 0, d)
    }

    pub fn general(sigma: f64, k: u32, d: u32) -> Result<Self> {
        Self::new(NoiseKind::GeneralGaussian, sigma, k, d)
    }

    /// Same family, exponent and dimension with a different scale.
    pub fn with_sigma(&self, sigma: f64) -> Result<Self> {
        Self::new(self.kind, sigma, self.k, self.d)
    }

    pub fn kind(&self) -> NoiseKind {
        self.kind
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn sigma_prime(&self) -> f64 {
        self.sigma_prime
    }

    /// Shape of the gamma law of `‖z‖² / (2σ'²)`.
    pub fn radial_shape(&self) -> f64 {
        0.5 * f64::from(self.d) - f64::from(self.k)
    }

    /// Log of the density normalizing constant.
    pub fn log_normalizer(&self) -> f64 {
        let half_d = 0.5 * f64::from(self.d);
        let m = self.radial_shape();
        ln_gamma(half_d) - half_d * log(PI) - m * log(2.0 * self.sigma_prime * self.sigma_prime)
            - ln_gamma(m)
    }

    /// Unchecked radial log-density used by the quadrature loops; `t >= 0`.
    #[inline]
    pub(crate) fn log_density_at(&self, log_norm: f64, t: f64) -> f64 {
        let quad = t * t / (2.0 * self.sigma_prime * self.sigma_prime);
        if self.k == 0 {
            log_norm - quad
        } else {
            log_norm - 2.0 * f64::from(self.k) * log(t) - quad
        }
    }
}

/// `σ' = sqrt(d / (d - 2k)) σ`.
pub fn sigma_prime(d: u32, k: u32, sigma: f64) -> f64 {
    let d = f64::from(d);
    sqrt(d / (d - 2.0 * f64::from(k))) * sigma
}

/// `ln f(t)` where `f` is the d-dimensional density at any point of norm `t`.
pub fn radial_log_density(spec: &NoiseSpec, t: f64) -> Result<f64> {
    if !t.is_finite() || t < 0.0 {
        return Err(Error::domain(format!("radius must be finite and non-negative, got {t}")));
    }
    if t == 0.0 && spec.k > 0 {
        return Err(Error::domain("density has a pole at t = 0 when k > 0"));
    }
    Ok(spec.log_density_at(spec.log_normalizer(), t))
}

/// `P(‖z‖ ≤ t)` under `spec`.
pub fn radial_cdf(spec: &NoiseSpec, t: f64) -> Result<f64> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::domain(format!("radius must be non-negative, got {t}")));
    }
    if t == f64::INFINITY {
        return Ok(1.0);
    }
    let sp = spec.sigma_prime;
    Ok(gamma_p(spec.radial_shape(), t * t / (2.0 * sp * sp)))
}

/// Inverse of [`radial_cdf`], by bracketed bisection on the log of the gamma
/// variable.
pub fn radial_quantile(spec: &NoiseSpec, p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(format!("probability must lie in (0, 1), got {p}")));
    }
    let x = gamma_quantile(spec.radial_shape(), p);
    let sp = spec.sigma_prime;
    Ok(sp * sqrt(2.0 * x))
}

/// Quantile of Gamma(shape, 1) for `p` in (0, 1).
pub(crate) fn gamma_quantile(shape: f64, p: f64) -> f64 {
    let f = |y: f64| gamma_p(shape, exp(y)) - p;
    let mut lo = log(shape) - 1.0;
    let mut hi = lo + 2.0;
    let mut step = 1.0;
    while f(lo) > 0.0 {
        lo -= step;
        step *= 2.0;
        if lo < -745.0 {
            lo = -745.0;
            break;
        }
    }
    step = 1.0;
    while f(hi) < 0.0 {
        hi += step;
        step *= 2.0;
        if hi > 709.0 {
            hi = 709.0;
            break;
        }
    }
    exp(special::bisect(lo, hi, f))
}

/// Law of one coordinate of a uniformly random unit vector in `d`
/// dimensions: density proportional to `(1 - c²)^((d-3)/2)` on `[-1, 1]`,
/// i.e. `(1 + c)/2 ~ Beta((d-1)/2, (d-1)/2)`.
#[derive(Debug, Clone, Copy)]
pub struct AngularLaw {
    half: f64,
    ln_beta: f64,
}

impl AngularLaw {
    pub fn new(d: u32) -> Self {
        let half = 0.5 * (f64::from(d) - 1.0);
        Self {
            half,
            ln_beta: ln_beta(half, half),
        }
    }

    /// `P(u₁ ≤ c)`, clamping `c` to `[-1, 1]`. Exactly antisymmetric:
    /// `cdf(c) + cdf(-c) = 1`.
    #[inline]
    pub fn cdf(&self, c: f64) -> f64 {
        if c <= -1.0 {
            return 0.0;
        }
        if c >= 1.0 {
            return 1.0;
        }
        if c == 0.0 {
            return 0.5;
        }
        let x = 0.5 * (1.0 - fabs(c));
        let tail = if x <= 0.0 {
            0.0
        } else {
            beta_inc_pair_with(self.half, self.half, x, self.ln_beta).0
        };
        if c < 0.0 {
            tail
        } else {
            1.0 - tail
        }
    }
}

/// `P(u₁ ≤ c)` for a uniform direction `u` on the unit sphere in `d` dims.
pub fn angular_cdf(d: u32, c: f64) -> Result<f64> {
    if d < 2 {
        return Err(Error::domain(format!("dimension must be at least 2, got {d}")));
    }
    if !(-1.0..=1.0).contains(&c) {
        return Err(Error::domain(format!("cosine must lie in [-1, 1], got {c}")));
    }
    Ok(AngularLaw::new(d).cdf(c))
}

/// Draw one noise vector. The radius comes from gamma sampling of the radial
/// law and the direction from a normalized standard-normal vector.
pub fn sample_noise<R: Rng + ?Sized>(spec: &NoiseSpec, rng: &mut R) -> Vec<f64> {
    let mut out = vec![0.0; spec.d as usize];
    sample_noise_into(spec, rng, &mut out);
    out
}

/// [`sample_noise`] writing into a caller-provided buffer of length `d`.
pub fn sample_noise_into<R: Rng + ?Sized>(spec: &NoiseSpec, rng: &mut R, out: &mut [f64]) {
    debug_assert_eq!(out.len(), spec.d as usize);
    // Shape is positive and finite for every valid spec.
    let gamma = Gamma::new(spec.radial_shape(), 1.0).expect("valid gamma shape");
    let g: f64 = gamma.sample(rng);
    let radius = spec.sigma_prime * sqrt(2.0 * g);
    loop {
        let mut norm2 = 0.0;
        for v in out.iter_mut() {
            let z: f64 = StandardNormal.sample(rng);
            *v = z;
            norm2 += z * z;
        }
        if norm2 > 0.0 {
            let scale = radius / sqrt(norm2);
            for v in out.iter_mut() {
                *v *= scale;
            }
            return;
        }
    }
}
