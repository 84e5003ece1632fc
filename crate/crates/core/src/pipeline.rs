//! From Monte Carlo counts to radii, and from radii to certified-accuracy
//! tables, average certified radius and ablation curves.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use libm::{round, sqrt};

use crate::confidence::{double_sampling_bounds, ProbBounds, DEFAULT_ALPHA};
use crate::dsrs::{Certifier, SolverSettings, DEFAULT_RADIUS_TOL};
use crate::error::{Error, Result};
use crate::noise::{radial_cdf, radial_quantile, NoiseKind, NoiseSpec};
use crate::np::np_radius_gaussian;
use crate::special::student_t_quantile;
use crate::synthetic::BallClassifier;

/// The smoothing pair `P`, `Q`: same kind, `k` and `d`, separate scales.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseConfig {
    pub kind: NoiseKind,
    pub sigma_p: f64,
    pub sigma_q: f64,
    pub k: u32,
    pub d: u32,
}

impl NoiseConfig {
    pub fn specs(&self) -> Result<(NoiseSpec, NoiseSpec)> {
        Ok((
            NoiseSpec::new(self.kind, self.sigma_p, self.k, self.d)?,
            NoiseSpec::new(self.kind, self.sigma_q, self.k, self.d)?,
        ))
    }
}

/// Prediction statistics of one example under `P` and `Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct CountRecord {
    pub example_id: String,
    pub label: u32,
    /// Top class from the selection draws.
    pub predicted: u32,
    pub n_selection: u64,
    pub count_p: u64,
    pub count_q: u64,
    /// Draws per distribution.
    pub n_samples: u64,
    pub noise: NoiseConfig,
    pub seed: u64,
}

impl CountRecord {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::domain("n_samples must be positive"));
        }
        if self.count_p > self.n_samples || self.count_q > self.n_samples {
            return Err(Error::domain(format!(
                "counts ({}, {}) exceed n_samples {}",
                self.count_p, self.count_q, self.n_samples
            )));
        }
        self.noise.specs().map(|_| ())
    }

    pub fn correct(&self) -> bool {
        self.predicted == self.label
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    Np,
    Dsrs,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Np => "np",
            Method::Dsrs => "dsrs",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "np" => Some(Method::Np),
            "dsrs" => Some(Method::Dsrs),
            _ => None,
        }
    }
}

/// Which certificates to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Np,
    Dsrs,
    Both,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Np => "np",
            Mode::Dsrs => "dsrs",
            Mode::Both => "both",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "np" => Some(Mode::Np),
            "dsrs" => Some(Mode::Dsrs),
            "both" => Some(Mode::Both),
            _ => None,
        }
    }

    pub fn methods(self) -> &'static [Method] {
        match self {
            Mode::Np => &[Method::Np],
            Mode::Dsrs => &[Method::Dsrs],
            Mode::Both => &[Method::Np, Method::Dsrs],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertResult {
    pub example_id: String,
    pub method: Method,
    pub radius: f64,
    pub abstained: bool,
    pub correct: bool,
    pub pa_low: f64,
    pub qa_low: f64,
    pub qa_high: f64,
    /// Seconds; left at zero here and filled in by callers that time work.
    pub wall_time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertifyConfig {
    pub mode: Mode,
    pub alpha: f64,
    pub tol: f64,
    pub settings: SolverSettings,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Both,
            alpha: DEFAULT_ALPHA,
            tol: DEFAULT_RADIUS_TOL,
            settings: SolverSettings::default(),
        }
    }
}

/// Radii for already-bounded probabilities, `(np, dsrs)`. Both are zero when
/// `pa_low <= 1/2`; the double-sampling radius is only computed when
/// `with_dsrs` is set (zero otherwise).
pub fn certify_bounds(
    p: &NoiseSpec,
    q: &NoiseSpec,
    bounds: &ProbBounds,
    tol: f64,
    settings: SolverSettings,
    with_dsrs: bool,
) -> Result<(f64, f64)> {
    let mut cert = Certifier::with_settings(p, q, settings)?;
    if with_dsrs {
        cert.radii(bounds.pa_low, bounds.qa_low, bounds.qa_high, tol)
    } else {
        Ok((cert.np_radius(bounds.pa_low, tol)?, 0.0))
    }
}

/// Certifies one record with every method of `cfg.mode`, in method order.
pub fn certify_record(record: &CountRecord, cfg: &CertifyConfig) -> Result<Vec<CertResult>> {
    record.validate()?;
    let (p, q) = record.noise.specs()?;
    let bounds = double_sampling_bounds(record.count_p, record.count_q, record.n_samples, cfg.alpha)?;
    let with_dsrs = cfg.mode != Mode::Np;
    let (np, ds) = certify_bounds(&p, &q, &bounds, cfg.tol, cfg.settings, with_dsrs)?;
    let abstained = bounds.pa_low <= 0.5;
    Ok(cfg
        .mode
        .methods()
        .iter()
        .map(|&method| CertResult {
            example_id: record.example_id.clone(),
            method,
            radius: match method {
                Method::Np => np,
                Method::Dsrs => ds,
            },
            abstained,
            correct: record.correct(),
            pa_low: bounds.pa_low,
            qa_low: bounds.qa_low,
            qa_high: bounds.qa_high,
            wall_time: 0.0,
        })
        .collect())
}

/// `0.25, 0.50, ..., 3.00`.
pub fn default_grid() -> Vec<f64> {
    radius_grid(0.25, 3.0, 0.25).expect("default grid is valid")
}

/// `start, start + step, ...` up to `stop` inclusive (with a small slack for
/// rounding). Points are computed as `start + i·step` to avoid drift.
pub fn radius_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(start.is_finite() && stop.is_finite() && step.is_finite()) || !(step > 0.0) || start < 0.0 || stop < start
    {
        return Err(Error::domain(format!("invalid radius grid {start}:{stop}:{step}")));
    }
    let n = ((stop - start) / step + 1e-9) as usize;
    Ok((0..=n).map(|i| start + i as f64 * step).collect())
}

/// Certified accuracy at one grid radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccuracyRow {
    pub radius: f64,
    /// Fraction in `[0, 1]`, averaged over runs.
    pub accuracy: f64,
    /// Half-width of the 95% Student-t interval across runs; `None` for a
    /// single run.
    pub half_width: Option<f64>,
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::domain("radius grid is empty"));
    }
    if grid.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::domain("radius grid must be sorted ascending"));
    }
    Ok(())
}

/// Fraction of results that are correct, not abstained and certified at
/// radius at least `r`. Zero for an empty slice.
pub fn accuracy_at(results: &[CertResult], r: f64) -> f64 {
    if results.is_empty() {
        return 0.0;
    }
    let hits = results.iter().filter(|c| c.correct && !c.abstained && c.radius >= r).count();
    hits as f64 / results.len() as f64
}

/// Certified accuracy along `grid`, with a Student-t interval when more than
/// one run is given. Each run is a list of results for one method.
pub fn certified_accuracy(runs: &[&[CertResult]], grid: &[f64]) -> Result<Vec<AccuracyRow>> {
    check_grid(grid)?;
    let n = runs.len();
    let t = if n > 1 {
        Some(student_t_quantile(0.975, (n - 1) as f64))
    } else {
        None
    };
    Ok(grid
        .iter()
        .map(|&r| {
            if n == 0 {
                return AccuracyRow { radius: r, accuracy: 0.0, half_width: None };
            }
            let acc: Vec<f64> = runs.iter().map(|run| accuracy_at(run, r)).collect();
            let mean = acc.iter().sum::<f64>() / n as f64;
            let half_width = t.map(|t| {
                let var = acc.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / (n - 1) as f64;
                t * sqrt(var / n as f64)
            });
            AccuracyRow { radius: r, accuracy: mean, half_width }
        })
        .collect())
}

/// Average certified radius: mean of `radius · 1{correct}` over all results.
pub fn acr(results: &[CertResult]) -> f64 {
    if results.is_empty() {
        return 0.0;
    }
    let total: f64 = results.iter().filter(|c| c.correct).map(|c| c.radius).sum();
    total / results.len() as f64
}

/// One point of an ablation or growth curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveRow {
    pub x: f64,
    pub np_value: f64,
    pub dsrs_value: f64,
}

fn method_acr(results: &[CertResult], method: Method) -> f64 {
    let picked: Vec<CertResult> = results.iter().filter(|c| c.method == method).cloned().collect();
    acr(&picked)
}

fn batch_curve_row(x: f64, records: &[CountRecord], cfg: &CertifyConfig) -> Result<CurveRow> {
    let cfg = CertifyConfig { mode: Mode::Both, ..*cfg };
    let mut results = Vec::with_capacity(2 * records.len());
    for rec in records {
        results.extend(certify_record(rec, &cfg)?);
    }
    Ok(CurveRow {
        x,
        np_value: method_acr(&results, Method::Np),
        dsrs_value: method_acr(&results, Method::Dsrs),
    })
}

/// `record` with its sample size changed to `n` and both counts rescaled
/// proportionally (rounded to nearest).
pub fn rescale_counts(record: &CountRecord, n: u64) -> Result<CountRecord> {
    if n == 0 {
        return Err(Error::domain("sample size must be positive"));
    }
    record.validate()?;
    let scale = |c: u64| -> u64 {
        let v = round(c as f64 * n as f64 / record.n_samples as f64) as u64;
        v.min(n)
    };
    Ok(CountRecord {
        count_p: scale(record.count_p),
        count_q: scale(record.count_q),
        n_samples: n,
        ..record.clone()
    })
}

/// ACR against the sample size: each record's counts are rescaled to every
/// `N` in `n_values` and recertified. Rows are `(N, acr_np, acr_dsrs)`.
pub fn ablation_n(records: &[CountRecord], n_values: &[u64], cfg: &CertifyConfig) -> Result<Vec<CurveRow>> {
    n_values
        .iter()
        .map(|&n| {
            let scaled = records.iter().map(|r| rescale_counts(r, n)).collect::<Result<Vec<_>>>()?;
            batch_curve_row(n as f64, &scaled, cfg)
        })
        .collect()
}

/// Radii against the generalized-Gaussian exponent at fixed probability
/// inputs. Rows are `(k, np_radius, dsrs_radius)`.
pub fn ablation_k(
    d: u32,
    sigma_p: f64,
    sigma_q: f64,
    k_values: &[u32],
    bounds: &ProbBounds,
    tol: f64,
    settings: SolverSettings,
) -> Result<Vec<CurveRow>> {
    k_values
        .iter()
        .map(|&k| {
            let noise = NoiseConfig { kind: NoiseKind::GeneralGaussian, sigma_p, sigma_q, k, d };
            let (p, q) = noise.specs()?;
            let (np, ds) = certify_bounds(&p, &q, bounds, tol, settings, true)?;
            Ok(CurveRow { x: k as f64, np_value: np, dsrs_value: ds })
        })
        .collect()
}

/// Count record for a ball classifier evaluated at its center, with counts
/// set to `round(N · probability)` instead of sampled.
pub fn expected_ball_record(
    id: &str,
    ball: &BallClassifier,
    label: u32,
    noise: NoiseConfig,
    n_samples: u64,
) -> Result<CountRecord> {
    let (p, q) = noise.specs()?;
    let (pa, qa) = ball.exact_probs(&p, &q)?;
    let count = |prob: f64| (round(prob * n_samples as f64) as u64).min(n_samples);
    Ok(CountRecord {
        example_id: id.into(),
        label,
        predicted: ball.target_class,
        n_selection: 0,
        count_p: count(pa),
        count_q: count(qa),
        n_samples,
        noise,
        seed: 0,
    })
}

/// ACR against `σ_Q` on a fixed batch of ball classifiers (each evaluated at
/// its center with expected counts). Rows are `(σ_Q, acr_np, acr_dsrs)`.
pub fn ablation_sigma(
    batch: &[(BallClassifier, u32)],
    base: NoiseConfig,
    sigma_q_values: &[f64],
    n_samples: u64,
    cfg: &CertifyConfig,
) -> Result<Vec<CurveRow>> {
    sigma_q_values
        .iter()
        .map(|&sigma_q| {
            let noise = NoiseConfig { sigma_q, ..base };
            let records = batch
                .iter()
                .enumerate()
                .map(|(i, (ball, label))| expected_ball_record(&format!("{i}"), ball, *label, noise, n_samples))
                .collect::<Result<Vec<_>>>()?;
            batch_curve_row(sigma_q, &records, cfg)
        })
        .collect()
}

/// Settings of the dimension-growth experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqrtDConfig {
    pub sigma: f64,
    /// `σ_Q / σ_P`.
    pub q_ratio: f64,
    /// `d/2 - k`.
    pub shape_offset: u32,
    /// `P`-probability inside the ball.
    pub p_inside: f64,
    pub tol: f64,
    pub settings: SolverSettings,
}

impl Default for SqrtDConfig {
    fn default() -> Self {
        Self {
            sigma: 0.5,
            q_ratio: 0.8,
            shape_offset: 8,
            p_inside: 0.999,
            tol: DEFAULT_RADIUS_TOL,
            settings: SolverSettings::default(),
        }
    }
}

/// For each `d`: the ball of `P`-mass `p_inside` at `k = d/2 - shape_offset`,
/// certified at its center with exact probabilities. Rows are
/// `(d, np_radius, dsrs_radius)`, where the Neyman-Pearson radius is the
/// standard Gaussian one at the same `σ` and `pA`.
pub fn sqrt_d_curve(dims: &[u32], cfg: &SqrtDConfig) -> Result<Vec<CurveRow>> {
    dims.iter()
        .map(|&d| {
            let k = (d / 2)
                .checked_sub(cfg.shape_offset)
                .filter(|_| d % 2 == 0)
                .ok_or_else(|| Error::domain(format!("d = {d} must be even and at least {}", 2 * cfg.shape_offset)))?;
            let noise = NoiseConfig {
                kind: NoiseKind::GeneralGaussian,
                sigma_p: cfg.sigma,
                sigma_q: cfg.q_ratio * cfg.sigma,
                k,
                d,
            };
            let (p, q) = noise.specs()?;
            let threshold = radial_quantile(&p, cfg.p_inside)?;
            let pa = radial_cdf(&p, threshold)?;
            let qa = radial_cdf(&q, threshold)?;
            let mut cert = Certifier::with_settings(&p, &q, cfg.settings)?;
            let ds = cert.radius(pa, qa, qa, cfg.tol)?;
            let np = np_radius_gaussian(cfg.sigma, pa)?;
            Ok(CurveRow { x: d as f64, np_value: np, dsrs_value: ds })
        })
        .collect()
}
