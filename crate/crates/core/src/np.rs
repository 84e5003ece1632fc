//! Neyman-Pearson certification: the worst case given only `pA`.

use alloc::format;

use crate::dsrs::{gaussian_np_value, Certifier, DEFAULT_RADIUS_TOL};
use crate::error::{Error, Result};
use crate::noise::NoiseSpec;
use crate::special::normal_quantile;

/// A single worst-case question: `pA` under `spec_p`, shift norm `radius`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertQuery {
    pub spec_p: NoiseSpec,
    pub pa: f64,
    pub radius: f64,
}

/// `max(0, σ Φ⁻¹(pA))`, the standard Gaussian radius.
pub fn np_radius_gaussian(sigma: f64, pa: f64) -> Result<f64> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::domain(format!("sigma must be positive and finite, got {sigma}")));
    }
    if !(pa > 0.0 && pa < 1.0) {
        return Err(Error::domain(format!("pA must lie in (0, 1), got {pa}")));
    }
    Ok((sigma * normal_quantile(pa)).max(0.0))
}

/// Smallest top-class probability at the shifted input over all classifiers
/// with `E_P f = pA`. Closed form for the standard Gaussian kind.
pub fn np_worst_case(query: &CertQuery) -> Result<f64> {
    Certifier::new(&query.spec_p, &query.spec_p)?.np_worst_case(query.pa, query.radius)
}

/// [`np_worst_case`] through the quadrature engine regardless of kind.
pub fn np_worst_case_quadrature(query: &CertQuery) -> Result<f64> {
    if query.radius == 0.0 {
        return Ok(query.pa);
    }
    Ok(Certifier::new(&query.spec_p, &query.spec_p)?
        .np_point(query.pa, query.radius)?
        .e_pdelta)
}

/// Largest radius whose Neyman-Pearson bound exceeds 1/2, to within `tol`
/// and capped at `10 σ'`. Zero when `pA <= 1/2`.
pub fn np_radius(spec_p: &NoiseSpec, pa: f64, tol: f64) -> Result<f64> {
    Certifier::new(spec_p, spec_p)?.np_radius(pa, tol)
}

/// [`np_radius`] at the default tolerance.
pub fn np_radius_default(spec_p: &NoiseSpec, pa: f64) -> Result<f64> {
    np_radius(spec_p, pa, DEFAULT_RADIUS_TOL)
}

/// `Φ(Φ⁻¹(pA) - r/σ)`.
pub fn gaussian_worst_case(sigma: f64, pa: f64, r: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::domain(format!("sigma must be positive, got {sigma}")));
    }
    if !(0.0..=1.0).contains(&pa) {
        return Err(Error::domain(format!("pA must lie in [0, 1], got {pa}")));
    }
    Ok(gaussian_np_value(sigma, pa, r))
}
