//! Double-sampling certification.
//!
//! Given the top-class probability `pA` under the smoothing law `P` and an
//! interval for the same probability under a concentric law `Q`, the smallest
//! possible top-class probability under `P` shifted by `δ` is attained by an
//! indicator
//!
//! ```text
//! f*(z) = 1{ p_δ(z) <= λ1 p(z) + λ2 q(z) }
//! ```
//!
//! with multipliers chosen so that `E_P f* = pA` and `E_Q f* = qA`. All three
//! densities depend on `z` only through `t = ‖z‖` and `s = ‖z - δ‖`, so each
//! expectation reduces to a one-dimensional radial integral (over quantiles
//! of the radial law) of the measure of acceptable direction cosines.
//!
//! Multipliers can be astronomically large in high dimension, so they are
//! carried as a sign and a log-magnitude ([`Multiplier`]) and every
//! acceptance test is done in log space.

use alloc::format;
use alloc::vec::Vec;

use libm::{exp, expm1, fabs, log, log1p, sqrt};

use crate::error::{Error, Result};
use crate::noise::{gamma_quantile, radial_quantile, AngularLaw, NoiseSpec};
use crate::quadrature::{UnitRule, DEFAULT_PANELS};
use crate::special::{gamma_pq, ln_gamma, log_add_exp, log_sub_exp, normal_cdf, normal_quantile};

/// Probability tolerance for matching the constraint targets.
pub const DEFAULT_PROB_TOL: f64 = 1e-6;
/// Input-space tolerance of radius searches.
pub const DEFAULT_RADIUS_TOL: f64 = 1e-4;
/// Successive quadrature refinements must agree to this before a value is
/// accepted.
pub const ADAPTIVE_TOL: f64 = 1e-7;
/// Largest composite rule used by the adaptive refinement (16384 nodes).
pub const MAX_PANELS: usize = 2048;
/// Radius searches stop at this multiple of `σ'`.
pub const RADIUS_CAP_SIGMAS: f64 = 10.0;

/// Multiplier brackets stop growing at coordinate 4096, i.e. `|λ| ≈ e^4096`
/// (see [`Multiplier::from_coord`]).
const COORD_LIMIT: f64 = 4096.0;
/// Grid points for isolating sign changes in the direction cosine.
const ROOT_GRID: usize = 64;
/// Up to this dimension the angular law has non-smooth ends (its density
/// behaves like `(1 - c²)^{(d-3)/2}`), so radial integrands get kinks where
/// the accepted cosine leaves `[-1, 1]`; those points become panel edges.
const KINK_DIM: u32 = 8;
/// Fallback scan resolution when the outer map is not monotone.
const SCAN_POINTS: usize = 256;
/// Targets this close to an extreme of the feasible `qA` range are treated as
/// the extreme itself.
const BOUNDARY_TOL: f64 = 1e-12;
/// Allowed slack when testing feasibility of the `qA` interval.
const FEASIBILITY_TOL: f64 = 1e-9;

/// A Lagrange multiplier stored as sign and log-magnitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Multiplier {
    sign: i8,
    ln_abs: f64,
}

impl Multiplier {
    pub const ZERO: Multiplier = Multiplier {
        sign: 0,
        ln_abs: f64::NEG_INFINITY,
    };

    pub fn from_value(v: f64) -> Self {
        if v == 0.0 || v.is_nan() {
            Self::ZERO
        } else {
            Self {
                sign: if v > 0.0 { 1 } else { -1 },
                ln_abs: log(fabs(v)),
            }
        }
    }

    pub fn from_log(sign: i8, ln_abs: f64) -> Self {
        if sign == 0 || ln_abs == f64::NEG_INFINITY {
            Self::ZERO
        } else {
            Self {
                sign: sign.signum(),
                ln_abs,
            }
        }
    }

    /// Monotone bijection `x -> sign(x) (e^|x| - 1)`, which keeps huge
    /// magnitudes representable.
    pub fn from_coord(x: f64) -> Self {
        if x == 0.0 || x.is_nan() {
            return Self::ZERO;
        }
        let a = fabs(x);
        let ln_abs = if a > 30.0 {
            a + log1p(-exp(-a))
        } else {
            log(expm1(a))
        };
        Self {
            sign: if x > 0.0 { 1 } else { -1 },
            ln_abs,
        }
    }

    pub fn coord(&self) -> f64 {
        if self.sign == 0 {
            0.0
        } else {
            f64::from(self.sign) * log_add_exp(0.0, self.ln_abs)
        }
    }

    pub fn sign(&self) -> i8 {
        self.sign
    }

    pub fn ln_abs(&self) -> f64 {
        self.ln_abs
    }

    /// The multiplier as a float; may overflow to infinity.
    pub fn value(&self) -> f64 {
        f64::from(self.sign) * exp(self.ln_abs)
    }
}

/// `ln(λ1 e^a + λ2 e^b)` for the positive part, `-inf` when non-positive.
#[inline]
fn signed_log_sum(m1: Multiplier, a: f64, m2: Multiplier, b: f64) -> f64 {
    let x = m1.ln_abs + a;
    let y = m2.ln_abs + b;
    match (m1.sign, m2.sign) {
        (1, 1) => log_add_exp(x, y),
        (1, 0) => x,
        (0, 1) => y,
        (1, -1) => log_sub_exp(x, y),
        (-1, 1) => log_sub_exp(y, x),
        _ => f64::NEG_INFINITY,
    }
}

/// Multipliers together with the three expectations of the indicator they
/// induce.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualPoint {
    pub lambda1: Multiplier,
    pub lambda2: Multiplier,
    pub e_p: f64,
    pub e_q: f64,
    pub e_pdelta: f64,
}

/// Mass left outside the integration range on each side of a radial law.
const TAIL_MASS: f64 = 8.881_784_197_001_252e-16; // 2^-50

/// A radial law discretized on `[lo, hi]`, with fixed nodes for the case
/// without an interior split.
#[derive(Debug, Clone)]
struct RadialLaw {
    lo: f64,
    hi: f64,
    // ln f_R(t) = log_const + power ln t - inv_two_var t²
    log_const: f64,
    power: f64,
    inv_two_var: f64,
    t: Vec<f64>,
    w: Vec<f64>,
    log_p: Vec<f64>,
    log_q: Vec<f64>,
}

/// Quadrature machinery for one `(P, Q)` pair at a fixed rule size. It does
/// not depend on the shift radius, so one instance serves a whole radius
/// search.
///
/// Radial integrals run over the norm `t` itself with graded composite
/// Gauss-Legendre rules. When the multipliers have opposite signs the
/// acceptance level drops to `-inf` at one norm, computed in closed form,
/// and the range is split there.
#[derive(Debug, Clone)]
pub struct Integrator {
    p: NoiseSpec,
    q: NoiseSpec,
    log_norm_p: f64,
    log_norm_q: f64,
    angular: AngularLaw,
    panels: usize,
    rule: UnitRule,
    law_p: RadialLaw,
    law_q: RadialLaw,
    grid: Vec<f64>,
}

impl Integrator {
    pub fn new(p: &NoiseSpec, q: &NoiseSpec, panels: usize) -> Result<Self> {
        check_pair(p, q)?;
        let log_norm_p = p.log_normalizer();
        let log_norm_q = q.log_normalizer();
        let rule = UnitRule::graded(panels);
        let build = |spec: &NoiseSpec| {
            let m = spec.radial_shape();
            let sp = spec.sigma_prime();
            let two_var = 2.0 * sp * sp;
            let lo = sp * sqrt(2.0 * gamma_quantile(m, TAIL_MASS));
            let hi = sp * sqrt(2.0 * gamma_quantile(m, 1.0 - TAIL_MASS));
            let mut law = RadialLaw {
                lo,
                hi,
                log_const: core::f64::consts::LN_2 - m * log(two_var) - ln_gamma(m),
                power: 2.0 * m - 1.0,
                inv_two_var: 1.0 / two_var,
                t: Vec::with_capacity(rule.len()),
                w: Vec::with_capacity(rule.len()),
                log_p: Vec::with_capacity(rule.len()),
                log_q: Vec::with_capacity(rule.len()),
            };
            let width = hi - lo;
            for (&v, &w) in rule.nodes.iter().zip(&rule.weights) {
                let t = lo + width * v;
                law.w.push(width * w * law.density(t));
                law.t.push(t);
                law.log_p.push(p.log_density_at(log_norm_p, t));
                law.log_q.push(q.log_density_at(log_norm_q, t));
            }
            law
        };
        let law_p = build(p);
        let law_q = build(q);

        let d = f64::from(p.d());
        let band = (8.0 / sqrt(d)).min(0.5);
        let mut grid = Vec::with_capacity(2 * ROOT_GRID + 2);
        for i in 0..=ROOT_GRID {
            grid.push(-1.0 + 2.0 * i as f64 / ROOT_GRID as f64);
            grid.push(-band + 2.0 * band * i as f64 / ROOT_GRID as f64);
        }
        grid.sort_by(|a, b| a.partial_cmp(b).expect("finite grid"));
        grid.dedup();

        Ok(Self {
            p: *p,
            q: *q,
            log_norm_p,
            log_norm_q,
            angular: AngularLaw::new(p.d()),
            panels,
            rule,
            law_p,
            law_q,
            grid,
        })
    }

    pub fn panels(&self) -> usize {
        self.panels
    }

    pub fn num_nodes(&self) -> usize {
        self.rule.len()
    }

    /// Norm where `λ1 p(t) + λ2 q(t)` changes sign, when the multipliers have
    /// opposite signs. The `t^{-2k}` factors cancel because both laws share
    /// `k`, leaving a closed form in `t²`.
    fn sign_change(&self, m1: Multiplier, m2: Multiplier) -> Option<f64> {
        if m1.sign * m2.sign != -1 {
            return None;
        }
        let sp = self.p.sigma_prime();
        let sq = self.q.sigma_prime();
        let curv = 0.5 / (sp * sp) - 0.5 / (sq * sq);
        if curv == 0.0 {
            return None;
        }
        let t2 = (m1.ln_abs - m2.ln_abs + self.log_norm_p - self.log_norm_q) / curv;
        (t2 > 0.0 && t2.is_finite()).then(|| sqrt(t2))
    }

    /// `∫ f(t, ln p(t), ln q(t)) dF(t)` under the given radial law, with
    /// the range split at every point of `breaks` that falls inside it.
    fn radial_integral(&self, law: &RadialLaw, breaks: &[f64], mut f: impl FnMut(f64, f64, f64) -> f64) -> f64 {
        let mut acc = 0.0;
        if breaks.iter().all(|&c| !(c > law.lo && c < law.hi)) {
            for i in 0..law.t.len() {
                acc += law.w[i] * f(law.t[i], law.log_p[i], law.log_q[i]);
            }
            return acc;
        }
        let mut a = law.lo;
        let inner = breaks.iter().copied().filter(|&c| c > law.lo && c < law.hi);
        for b in inner.chain(core::iter::once(law.hi)) {
            if b <= a {
                continue;
            }
            let width = b - a;
            for (&v, &w) in self.rule.nodes.iter().zip(&self.rule.weights) {
                let t = a + width * v;
                let lp = self.p.log_density_at(self.log_norm_p, t);
                let lq = self.q.log_density_at(self.log_norm_q, t);
                acc += width * w * law.density(t) * f(t, lp, lq);
            }
            a = b;
        }
        acc
    }

    /// Points where some component of `key` changes sign between adjacent
    /// fixed nodes, refined by bisection; sorted.
    fn breaks_from_nodes<const N: usize>(&self, law: &RadialLaw, key: impl Fn(f64, f64, f64) -> [f64; N]) -> Vec<f64> {
        let at = |t: f64| {
            let lp = self.p.log_density_at(self.log_norm_p, t);
            let lq = self.q.log_density_at(self.log_norm_q, t);
            key(t, lp, lq)
        };
        let mut out = Vec::new();
        let mut prev = key(law.t[0], law.log_p[0], law.log_q[0]);
        for i in 1..law.t.len() {
            let cur = key(law.t[i], law.log_p[i], law.log_q[i]);
            for j in 0..N {
                if (prev[j] >= 0.0) != (cur[j] >= 0.0) {
                    let (mut a, mut b) = (law.t[i - 1], law.t[i]);
                    let left = prev[j] >= 0.0;
                    for _ in 0..60 {
                        let mid = 0.5 * (a + b);
                        if mid <= a || mid >= b {
                            break;
                        }
                        if (at(mid)[j] >= 0.0) == left {
                            a = mid;
                        } else {
                            b = mid;
                        }
                    }
                    out.push(0.5 * (a + b));
                }
            }
            prev = cur;
        }
        out.sort_by(|x, y| x.total_cmp(y));
        out
    }

    /// Radius `s*` with `ln p(s*) = level` under `P`; `+inf` for `-inf` and 0
    /// when the level is at or above the density maximum.
    fn threshold_radius(&self, level: f64) -> f64 {
        if level == f64::NEG_INFINITY {
            return f64::INFINITY;
        }
        if level == f64::INFINITY {
            return 0.0;
        }
        let sp2 = self.p.sigma_prime() * self.p.sigma_prime();
        let rhs = self.log_norm_p - level;
        let k = f64::from(self.p.k());
        if k == 0.0 {
            return if rhs <= 0.0 { 0.0 } else { sqrt(2.0 * sp2 * rhs) };
        }
        // Solve 2k y + e^{2y} / (2σ'²) = rhs for y = ln s. The left side is
        // convex increasing, so Newton started right of the root converges
        // monotonically.
        let two_k = 2.0 * k;
        let mut y = rhs / two_k;
        if rhs > 0.0 {
            let yb = 0.5 * log(2.0 * sp2 * rhs);
            if yb >= 0.0 && yb < y {
                y = yb;
            }
        }
        for _ in 0..200 {
            let e = exp(2.0 * y);
            let g = two_k * y + e / (2.0 * sp2) - rhs;
            let dg = two_k + e / sp2;
            let step = g / dg;
            y -= step;
            if !(fabs(step) > 1e-15 * (1.0 + fabs(y))) {
                break;
            }
        }
        exp(y)
    }

    /// Threshold norm `s*` of the shifted density for a point at norm `t`:
    /// the point is accepted iff `‖z - δ‖ >= s*`.
    #[inline]
    fn threshold_at_norm(&self, log_p: f64, log_q: f64, m1: Multiplier, m2: Multiplier) -> f64 {
        self.threshold_radius(signed_log_sum(m1, log_p, m2, log_q))
    }

    /// Probability over the direction cosine that a point at norm `t` is
    /// accepted, for shift radius `r`.
    #[inline]
    fn accept_at_norm(&self, t: f64, log_p: f64, log_q: f64, r: f64, m1: Multiplier, m2: Multiplier) -> f64 {
        let s_star = self.threshold_at_norm(log_p, log_q, m1, m2);
        if s_star == 0.0 {
            return 1.0;
        }
        if s_star == f64::INFINITY {
            return 0.0;
        }
        if r == 0.0 {
            return if t >= s_star { 1.0 } else { 0.0 };
        }
        let c = (t * t + r * r - s_star * s_star) / (2.0 * t * r);
        self.angular.cdf(c)
    }

    /// `E_P f*` for the indicator induced by `(m1, m2)` at shift radius `r`.
    pub fn e_p(&self, r: f64, m1: Multiplier, m2: Multiplier) -> f64 {
        self.center_expectation(&self.law_p, r, m1, m2)
    }

    /// `E_Q f*`.
    pub fn e_q(&self, r: f64, m1: Multiplier, m2: Multiplier) -> f64 {
        self.center_expectation(&self.law_q, r, m1, m2)
    }

    fn center_expectation(&self, law: &RadialLaw, r: f64, m1: Multiplier, m2: Multiplier) -> f64 {
        let mut breaks = Vec::new();
        if self.p.d() <= KINK_DIM || r == 0.0 {
            // The accepted cosine leaves [-1, 1] where s* = |t - r| or t + r.
            breaks = self.breaks_from_nodes(law, |t, lp, lq| {
                let s = self.threshold_at_norm(lp, lq, m1, m2);
                if s == f64::INFINITY {
                    return [-1.0, -1.0];
                }
                [(t - r) * (t - r) - s * s, (t + r) * (t + r) - s * s]
            });
        }
        breaks.extend(self.sign_change(m1, m2));
        breaks.sort_by(|x, y| x.total_cmp(y));
        self.radial_integral(law, &breaks, |t, lp, lq| self.accept_at_norm(t, lp, lq, r, m1, m2))
            .clamp(0.0, 1.0)
    }

    /// `E_{P_δ} f*` with `‖δ‖ = r`.
    pub fn e_pdelta(&self, r: f64, m1: Multiplier, m2: Multiplier) -> f64 {
        let margin = |s: f64, own: f64, c: f64| {
            let t = sqrt((s * s + r * r + 2.0 * s * r * c).max(1e-300));
            let lp = self.p.log_density_at(self.log_norm_p, t);
            let lq = self.q.log_density_at(self.log_norm_q, t);
            signed_log_sum(m1, lp, m2, lq) - own
        };
        let mut breaks = if self.p.d() <= KINK_DIM || r == 0.0 {
            // Crossings enter or leave through the collinear points.
            self.breaks_from_nodes(&self.law_p, |s, own, _| [margin(s, own, -1.0), margin(s, own, 1.0)])
        } else {
            Vec::new()
        };
        if let Some(sb) = self.tangency(r, m1, m2) {
            breaks.push(sb);
            breaks.sort_by(|x, y| x.total_cmp(y));
        }
        if let Some(tc) = self.sign_change(m1, m2) {
            // The sphere ‖z‖ = tc, beyond which nothing is accepted, meets
            // the shifted shells for s between |tc - r| and tc + r.
            breaks.extend([fabs(tc - r), tc + r]);
            breaks.sort_by(|x, y| x.total_cmp(y));
        }
        let v = self.radial_integral(&self.law_p, &breaks, |s, own, own_q| {
            if r == 0.0 {
                let level = signed_log_sum(m1, own, m2, own_q);
                return if level >= own { 1.0 } else { 0.0 };
            }
            self.accepted_measure(|c| margin(s, own, c))
        });
        v.clamp(0.0, 1.0)
    }

    /// When the acceptance level `L(t)` has an interior maximum at `t_m`,
    /// shells of norm `s` with `ln p(s) = L(t_m)` touch the accepted set
    /// tangentially, and the accepted fraction has a square-root corner
    /// there. Returns that `s`.
    fn tangency(&self, r: f64, m1: Multiplier, m2: Multiplier) -> Option<f64> {
        if r == 0.0 || m1.sign * m2.sign != -1 {
            return None;
        }
        let law = &self.law_p;
        let level = |t: f64| {
            let lp = self.p.log_density_at(self.log_norm_p, t);
            let lq = self.q.log_density_at(self.log_norm_q, t);
            signed_log_sum(m1, lp, m2, lq)
        };
        let mut best = 0;
        let mut best_v = f64::NEG_INFINITY;
        for i in 0..law.t.len() {
            let v = signed_log_sum(m1, law.log_p[i], m2, law.log_q[i]);
            if v > best_v {
                best_v = v;
                best = i;
            }
        }
        if best == 0 || best + 1 == law.t.len() || best_v == f64::NEG_INFINITY {
            return None;
        }
        // Golden-section refinement of the peak.
        let g = 0.5 * (sqrt(5.0) - 1.0);
        let (mut a, mut b) = (law.t[best - 1], law.t[best + 1]);
        let mut x1 = b - g * (b - a);
        let mut x2 = a + g * (b - a);
        let (mut f1, mut f2) = (level(x1), level(x2));
        for _ in 0..80 {
            if f1 < f2 {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + g * (b - a);
                f2 = level(x2);
            } else {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - g * (b - a);
                f1 = level(x1);
            }
        }
        let peak = f1.max(f2);
        let s = self.threshold_radius(peak);
        (s > 0.0 && s.is_finite()).then_some(s)
    }

    /// Angular measure of `{c : phi(c) >= 0}`, by sign changes on the grid and
    /// bisection of each bracketed crossing.
    fn accepted_measure(&self, phi: impl Fn(f64) -> f64) -> f64 {
        let grid = &self.grid;
        let mut prev_c = grid[0];
        let mut prev_ok = phi(prev_c) >= 0.0;
        let mut start = if prev_ok { Some(-1.0) } else { None };
        let mut total = 0.0;
        for &c in &grid[1..] {
            let ok = phi(c) >= 0.0;
            if ok != prev_ok {
                let (mut a, mut b) = (prev_c, c);
                for _ in 0..60 {
                    let mid = 0.5 * (a + b);
                    if mid <= a || mid >= b {
                        break;
                    }
                    if (phi(mid) >= 0.0) == prev_ok {
                        a = mid;
                    } else {
                        b = mid;
                    }
                }
                let x = 0.5 * (a + b);
                if ok {
                    start = Some(x);
                } else if let Some(s0) = start.take() {
                    total += self.angular.cdf(x) - self.angular.cdf(s0);
                }
            }
            prev_c = c;
            prev_ok = ok;
        }
        if let Some(s0) = start {
            total += 1.0 - self.angular.cdf(s0);
        }
        total
    }

    /// All three expectations at one multiplier pair.
    pub fn evaluate(&self, r: f64, m1: Multiplier, m2: Multiplier) -> DualPoint {
        DualPoint {
            lambda1: m1,
            lambda2: m2,
            e_p: self.e_p(r, m1, m2),
            e_q: self.e_q(r, m1, m2),
            e_pdelta: self.e_pdelta(r, m1, m2),
        }
    }

    /// `P(‖w + δ‖ <= t_max)` for `w ~ P`, `‖δ‖ = r`; the complement when
    /// `inside` is false.
    pub fn ball_pdelta(&self, r: f64, t_max: f64, inside: bool) -> f64 {
        // The angular fraction saturates at s = |t_max - r| and s = t_max + r;
        // split there so the kinks sit on panel edges.
        let breaks = [(t_max - r).abs(), t_max + r];
        let v = self
            .radial_integral(&self.law_p, &breaks, |s, _, _| {
                if r == 0.0 {
                    return if s <= t_max { 1.0 } else { 0.0 };
                }
                self.angular.cdf((t_max * t_max - s * s - r * r) / (2.0 * s * r))
            })
            .clamp(0.0, 1.0);
        if inside {
            v
        } else {
            1.0 - v
        }
    }
}

impl RadialLaw {
    #[inline]
    fn density(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return if self.power == 0.0 { exp(self.log_const) } else { 0.0 };
        }
        exp(self.log_const + self.power * log(t) - self.inv_two_var * t * t)
    }
}

fn check_pair(p: &NoiseSpec, q: &NoiseSpec) -> Result<()> {
    if p.d() != q.d() {
        return Err(Error::domain(format!(
            "P and Q must share the dimension, got {} and {}",
            p.d(),
            q.d()
        )));
    }
    if p.k() != q.k() {
        return Err(Error::domain(format!(
            "P and Q must share the exponent k, got {} and {}",
            p.k(),
            q.k()
        )));
    }
    Ok(())
}

fn check_prob(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::domain(format!("{name} must lie in [0, 1], got {v}")));
    }
    Ok(())
}

fn check_radius(r: f64) -> Result<()> {
    if !(r >= 0.0) || !r.is_finite() {
        return Err(Error::domain(format!("radius must be finite and non-negative, got {r}")));
    }
    Ok(())
}

/// All three expectations for explicit multiplier values, refining the
/// quadrature until successive rules agree to [`ADAPTIVE_TOL`].
pub fn expectations(p: &NoiseSpec, q: &NoiseSpec, radius: f64, lambda1: f64, lambda2: f64) -> Result<DualPoint> {
    check_radius(radius)?;
    let (m1, m2) = (Multiplier::from_value(lambda1), Multiplier::from_value(lambda2));
    let mut panels = DEFAULT_PANELS;
    let mut prev = Integrator::new(p, q, panels)?.evaluate(radius, m1, m2);
    while panels < MAX_PANELS {
        panels *= 2;
        let next = Integrator::new(p, q, panels)?.evaluate(radius, m1, m2);
        if max_gap(&prev, &next) < ADAPTIVE_TOL {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::numeric(
        "expectations",
        format!(
            "quadrature did not settle at {} nodes: e_p={}, e_q={}, e_pdelta={}",
            panels * crate::quadrature::PANEL_ORDER,
            prev.e_p,
            prev.e_q,
            prev.e_pdelta
        ),
    ))
}

fn max_gap(a: &DualPoint, b: &DualPoint) -> f64 {
    fabs(a.e_p - b.e_p)
        .max(fabs(a.e_q - b.e_q))
        .max(fabs(a.e_pdelta - b.e_pdelta))
}

/// Solve `f(x) = target` for nondecreasing `f`, starting at `x0`, growing the
/// bracket geometrically up to `|x| <= limit`, then refining with the Illinois
/// variant of false position. Returns `None` when no bracket exists.
fn solve_increasing(
    mut f: impl FnMut(f64) -> Result<f64>,
    target: f64,
    x0: f64,
    limit: f64,
    tol: f64,
) -> Result<Option<(f64, f64)>> {
    let f0 = f(x0)? - target;
    if fabs(f0) <= tol {
        return Ok(Some((x0, f0)));
    }
    let (mut lo, mut flo, mut hi, mut fhi);
    let mut step = 1.0;
    if f0 < 0.0 {
        lo = x0;
        flo = f0;
        loop {
            let x = (lo + step).min(limit);
            let fx = f(x)? - target;
            if fabs(fx) <= tol {
                return Ok(Some((x, fx)));
            }
            if fx > 0.0 {
                hi = x;
                fhi = fx;
                break;
            }
            lo = x;
            flo = fx;
            if x >= limit {
                return Ok(None);
            }
            step *= 2.0;
        }
    } else {
        hi = x0;
        fhi = f0;
        loop {
            let x = (hi - step).max(-limit);
            let fx = f(x)? - target;
            if fabs(fx) <= tol {
                return Ok(Some((x, fx)));
            }
            if fx < 0.0 {
                lo = x;
                flo = fx;
                break;
            }
            hi = x;
            fhi = fx;
            if x <= -limit {
                return Ok(None);
            }
            step *= 2.0;
        }
    }
    refine_bracket(&mut f, target, (lo, flo), (hi, fhi), tol).map(Some)
}

fn refine_bracket(
    f: &mut impl FnMut(f64) -> Result<f64>,
    target: f64,
    (mut lo, mut flo): (f64, f64),
    (mut hi, mut fhi): (f64, f64),
    tol: f64,
) -> Result<(f64, f64)> {
    let mut side = 0i8;
    for iter in 0..400 {
        let mid = 0.5 * (lo + hi);
        let mut x = (lo * fhi - hi * flo) / (fhi - flo);
        // Every fourth step bisects to guarantee the bracket keeps shrinking.
        if !(x > lo && x < hi) || iter % 4 == 3 {
            x = mid;
        }
        if x <= lo || x >= hi {
            break;
        }
        let fx = f(x)? - target;
        if fabs(fx) <= tol {
            return Ok((x, fx));
        }
        if fx < 0.0 {
            lo = x;
            flo = fx;
            if side == -1 {
                fhi *= 0.5;
            }
            side = -1;
        } else {
            hi = x;
            fhi = fx;
            if side == 1 {
                flo *= 0.5;
            }
            side = 1;
        }
    }
    // Bracket collapsed without meeting the tolerance (a jump in `f`);
    // report the lower side.
    let fl = f(lo)? - target;
    let fh = f(hi)? - target;
    Ok(if fabs(fl) <= fabs(fh) { (lo, fl) } else { (hi, fh) })
}

/// Smallest and largest `E_Q f` over all `f` with `E_P f = pa`.
///
/// Both laws share `k`, so `q/p` is monotone in `‖z‖` and the extremes are
/// attained by a centered ball and the complement of one.
pub fn feasible_q_range(p: &NoiseSpec, q: &NoiseSpec, pa: f64) -> Result<(f64, f64)> {
    check_pair(p, q)?;
    check_prob("pA", pa)?;
    let (inner, outer) = extreme_regions(p, q, pa)?;
    Ok(if inner <= outer { (inner, outer) } else { (outer, inner) })
}

/// `(E_Q of the ball with P-mass pa, E_Q of the shell with P-mass pa)`.
fn extreme_regions(p: &NoiseSpec, q: &NoiseSpec, pa: f64) -> Result<(f64, f64)> {
    if pa <= 0.0 {
        return Ok((0.0, 0.0));
    }
    if pa >= 1.0 {
        return Ok((1.0, 1.0));
    }
    let t1 = radial_quantile(p, pa)?;
    let t0 = radial_quantile(p, 1.0 - pa)?;
    let sq = q.sigma_prime();
    let shape = q.radial_shape();
    let ball = gamma_pq(shape, t1 * t1 / (2.0 * sq * sq)).0;
    let shell = gamma_pq(shape, t0 * t0 / (2.0 * sq * sq)).1;
    Ok((ball, shell))
}

/// A double-sampling certification instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DsrsProblem {
    pub spec_p: NoiseSpec,
    pub spec_q: NoiseSpec,
    pub pa_low: f64,
    pub qa_low: f64,
    pub qa_high: f64,
    pub radius: f64,
}

impl DsrsProblem {
    pub fn validate(&self) -> Result<()> {
        check_pair(&self.spec_p, &self.spec_q)?;
        check_prob("pA", self.pa_low)?;
        check_prob("qA lower bound", self.qa_low)?;
        check_prob("qA upper bound", self.qa_high)?;
        if self.qa_low > self.qa_high {
            return Err(Error::domain(format!(
                "qA interval is empty: [{}, {}]",
                self.qa_low, self.qa_high
            )));
        }
        check_radius(self.radius)
    }

    /// Whether some `f` has `E_P f = pA` and `E_Q f` inside the interval.
    pub fn is_feasible(&self) -> Result<bool> {
        self.validate()?;
        let (lo, hi) = feasible_q_range(&self.spec_p, &self.spec_q, self.pa_low)?;
        Ok(self.qa_high >= lo - FEASIBILITY_TOL && self.qa_low <= hi + FEASIBILITY_TOL)
    }
}

/// How a worst-case value was obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WorstCaseSource {
    /// The Neyman-Pearson optimum already satisfies the `Q` interval.
    ConstraintInactive,
    /// Solved multipliers for an interior `qA` target.
    Dual(DualPoint),
    /// The target sits at an extreme of the feasible range, which pins the
    /// worst-case set to a centered ball or its complement.
    Boundary,
    /// The `Q` interval was infeasible or the dual solve failed; the value is
    /// the Neyman-Pearson bound.
    NpFallback,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorstCase {
    /// Lower bound on the top-class probability at the shifted input.
    pub value: f64,
    /// The Neyman-Pearson bound at the same `pA` and radius.
    pub np_value: f64,
    /// The `qA` target used, when one was.
    pub q_target: Option<f64>,
    pub source: WorstCaseSource,
}

/// Tunables for [`Certifier`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    pub panels: usize,
    pub max_panels: usize,
    pub prob_tol: f64,
    pub adaptive_tol: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            panels: DEFAULT_PANELS,
            max_panels: MAX_PANELS,
            prob_tol: DEFAULT_PROB_TOL,
            adaptive_tol: ADAPTIVE_TOL,
        }
    }
}

/// Certification state for one `(P, Q)` pair: cached quadrature rules and
/// warm starts for the multiplier searches. Not shared between threads; make
/// one per worker.
#[derive(Debug, Clone)]
pub struct Certifier {
    p: NoiseSpec,
    q: NoiseSpec,
    settings: SolverSettings,
    levels: Vec<Integrator>,
    level_floor: usize,
    warm_np: f64,
    warm_dual: (f64, f64),
}

impl Certifier {
    pub fn new(p: &NoiseSpec, q: &NoiseSpec) -> Result<Self> {
        Self::with_settings(p, q, SolverSettings::default())
    }

    pub fn with_settings(p: &NoiseSpec, q: &NoiseSpec, settings: SolverSettings) -> Result<Self> {
        check_pair(p, q)?;
        Ok(Self {
            p: *p,
            q: *q,
            settings,
            levels: Vec::new(),
            level_floor: 0,
            warm_np: 0.0,
            warm_dual: (0.0, 0.0),
        })
    }

    pub fn spec_p(&self) -> &NoiseSpec {
        &self.p
    }

    pub fn spec_q(&self) -> &NoiseSpec {
        &self.q
    }

    fn panels_at(&self, level: usize) -> usize {
        self.settings.panels << level
    }

    fn max_level(&self) -> usize {
        let mut level = 0;
        while self.panels_at(level + 1) <= self.settings.max_panels {
            level += 1;
        }
        level
    }

    fn integrator(&mut self, level: usize) -> Result<&Integrator> {
        while self.levels.len() <= level {
            let panels = self.panels_at(self.levels.len());
            self.levels.push(Integrator::new(&self.p, &self.q, panels)?);
        }
        Ok(&self.levels[level])
    }

    /// Run `solve` at increasing rule sizes until its result agrees with a
    /// re-evaluation on the next finer rule.
    fn adaptive(
        &mut self,
        context: &'static str,
        r: f64,
        mut solve: impl FnMut(&mut Self, usize) -> Result<DualPoint>,
    ) -> Result<DualPoint> {
        let top = self.max_level();
        let mut level = self.level_floor.min(top);
        loop {
            let point = solve(self, level)?;
            if level >= top {
                return Ok(point);
            }
            let finer = self.integrator(level + 1)?.evaluate(r, point.lambda1, point.lambda2);
            if max_gap(&point, &finer) < self.settings.adaptive_tol {
                return Ok(finer);
            }
            level += 1;
            self.level_floor = self.level_floor.max(level);
            if level >= top {
                // Last refinement: accept whatever the finest rule yields.
                let point = solve(self, level)?;
                if max_gap(&point, &finer) >= 1e3 * self.settings.adaptive_tol {
                    return Err(Error::numeric(
                        context,
                        format!(
                            "quadrature unsettled at {} panels: e_p={}, e_q={}, e_pdelta={}",
                            self.panels_at(level),
                            point.e_p,
                            point.e_q,
                            point.e_pdelta
                        ),
                    ));
                }
                return Ok(point);
            }
        }
    }

    /// Neyman-Pearson optimum (`λ2 = 0`) computed by quadrature for any kind.
    pub fn np_point(&mut self, pa: f64, r: f64) -> Result<DualPoint> {
        check_prob("pA", pa)?;
        check_radius(r)?;
        if pa <= 0.0 || pa >= 1.0 {
            let v = if pa >= 1.0 { 1.0 } else { 0.0 };
            return Ok(DualPoint {
                lambda1: Multiplier::ZERO,
                lambda2: Multiplier::ZERO,
                e_p: v,
                e_q: v,
                e_pdelta: v,
            });
        }
        if r == 0.0 {
            return Ok(unshifted_point(pa, pa));
        }
        self.adaptive("np_worst_case", r, |this, level| this.np_solve_at(pa, r, level))
    }

    fn np_solve_at(&mut self, pa: f64, r: f64, level: usize) -> Result<DualPoint> {
        let tol = self.settings.prob_tol;
        let x0 = self.warm_np;
        let integ = self.integrator(level)?;
        let found = solve_increasing(
            |x| Ok(integ.e_p(r, Multiplier::from_coord(x), Multiplier::ZERO)),
            pa,
            x0,
            COORD_LIMIT,
            tol,
        )?;
        let (x, _) = found.ok_or_else(|| {
            Error::numeric("np_worst_case", format!("no multiplier reaches pA = {pa} at r = {r}"))
        })?;
        let point = integ.evaluate(r, Multiplier::from_coord(x), Multiplier::ZERO);
        self.warm_np = x;
        Ok(point)
    }

    /// Neyman-Pearson lower bound on the shifted top-class probability. Closed
    /// form for the standard Gaussian, quadrature otherwise.
    pub fn np_worst_case(&mut self, pa: f64, r: f64) -> Result<f64> {
        check_prob("pA", pa)?;
        check_radius(r)?;
        if r == 0.0 {
            return Ok(pa);
        }
        match self.p.kind() {
            crate::noise::NoiseKind::StandardGaussian => Ok(gaussian_np_value(self.p.sigma(), pa, r)),
            crate::noise::NoiseKind::GeneralGaussian => Ok(self.np_point(pa, r)?.e_pdelta),
        }
    }

    /// Multipliers matching `E_P = pa` and `E_Q = q_target` at shift `r`.
    pub fn solve_duals(&mut self, pa: f64, q_target: f64, r: f64) -> Result<DualPoint> {
        check_prob("pA", pa)?;
        check_prob("q target", q_target)?;
        check_radius(r)?;
        let (lo, hi) = feasible_q_range(&self.p, &self.q, pa)?;
        if q_target < lo - FEASIBILITY_TOL || q_target > hi + FEASIBILITY_TOL {
            return Err(Error::Infeasible(format!(
                "qA = {q_target} outside the feasible range [{lo}, {hi}] for pA = {pa}"
            )));
        }
        if r == 0.0 {
            return Ok(unshifted_point(pa, q_target));
        }
        if self.warm_dual == (0.0, 0.0) {
            // Start from the Neyman-Pearson multiplier.
            if pa > 0.0 && pa < 1.0 {
                let np = self.np_point(pa, r)?;
                self.warm_dual = (np.lambda1.coord(), 0.0);
            }
        }
        // Near an end of the feasible range the worst case is steep in qA,
        // so the constraint is matched to a fraction of the remaining gap.
        let gap = (hi - q_target).min(q_target - lo);
        let q_tol = self.settings.prob_tol.min(0.1 * gap).max(1e-14);
        self.adaptive("solve_duals", r, |this, level| this.dual_solve_at(pa, q_target, q_tol, r, level))
    }

    fn dual_solve_at(&mut self, pa: f64, q_target: f64, q_tol: f64, r: f64, level: usize) -> Result<DualPoint> {
        let tol = self.settings.prob_tol;
        let (x1_start, x2_start) = self.warm_dual;
        let integ = self.integrator(level)?;
        let mut x2_warm = x2_start;

        let inner = |x1: f64, x2_warm: &mut f64| -> Result<(f64, f64)> {
            let m1 = Multiplier::from_coord(x1);
            let found = solve_increasing(
                |x2| Ok(integ.e_q(r, m1, Multiplier::from_coord(x2))),
                q_target,
                *x2_warm,
                COORD_LIMIT,
                q_tol,
            )?;
            let (x2, _) = found.ok_or_else(|| {
                Error::Infeasible(format!("no λ2 reaches qA = {q_target} at λ1 coordinate {x1}"))
            })?;
            *x2_warm = x2;
            Ok((x2, integ.e_p(r, m1, Multiplier::from_coord(x2))))
        };

        let outer = solve_increasing(
            |x1| Ok(inner(x1, &mut x2_warm)?.1),
            pa,
            x1_start,
            COORD_LIMIT,
            tol,
        );
        let (x1, x2) = match outer {
            Ok(Some((x1, _))) => {
                let (x2, _) = inner(x1, &mut x2_warm)?;
                (x1, x2)
            }
            Ok(None) | Err(Error::Infeasible(_)) => self.scan_outer(pa, q_target, q_tol, r, level)?,
            Err(e) => return Err(e),
        };
        let integ = self.integrator(level)?;
        let point = integ.evaluate(r, Multiplier::from_coord(x1), Multiplier::from_coord(x2));
        if fabs(point.e_p - pa) > 100.0 * tol || fabs(point.e_q - q_target) > (100.0 * q_tol).max(1e-12) {
            return Err(Error::numeric(
                "solve_duals",
                format!(
                    "constraints unmatched: e_p={} (target {pa}), e_q={} (target {q_target})",
                    point.e_p, point.e_q
                ),
            ));
        }
        self.warm_dual = (x1, x2);
        Ok(point)
    }

    /// Fallback when `E_P` after the inner solve is not monotone in `λ1`:
    /// scan, then refine the first bracketed crossing.
    fn scan_outer(&mut self, pa: f64, q_target: f64, q_tol: f64, r: f64, level: usize) -> Result<(f64, f64)> {
        let tol = self.settings.prob_tol;
        let integ = self.integrator(level)?;
        let span = 64.0;
        let mut x2_warm = 0.0;
        let mut eval = |x1: f64| -> Result<Option<(f64, f64)>> {
            let m1 = Multiplier::from_coord(x1);
            let found = solve_increasing(
                |x2| Ok(integ.e_q(r, m1, Multiplier::from_coord(x2))),
                q_target,
                x2_warm,
                COORD_LIMIT,
                q_tol,
            )?;
            Ok(found.map(|(x2, _)| {
                x2_warm = x2;
                (x2, integ.e_p(r, m1, Multiplier::from_coord(x2)) - pa)
            }))
        };
        let mut prev: Option<(f64, f64, f64)> = None;
        for i in 0..=SCAN_POINTS {
            let x1 = -span + 2.0 * span * i as f64 / SCAN_POINTS as f64;
            let Some((x2, g)) = eval(x1)? else { continue };
            if fabs(g) <= tol {
                return Ok((x1, x2));
            }
            if let Some((px1, _, pg)) = prev {
                if (pg < 0.0) != (g < 0.0) {
                    let (mut a, mut b) = (px1, x1);
                    let mut best = (x1, x2, g);
                    for _ in 0..100 {
                        let mid = 0.5 * (a + b);
                        let Some((mx2, mg)) = eval(mid)? else { break };
                        best = (mid, mx2, mg);
                        if fabs(mg) <= tol {
                            break;
                        }
                        if (mg < 0.0) == (pg < 0.0) {
                            a = mid;
                        } else {
                            b = mid;
                        }
                    }
                    return Ok((best.0, best.1));
                }
            }
            prev = Some((x1, x2, g));
        }
        Err(Error::Infeasible(format!(
            "no multiplier pair matches pA = {pa}, qA = {q_target} at r = {r}"
        )))
    }

    /// Worst-case top-class probability at shift `r` given `pA` and the `qA`
    /// interval.
    ///
    /// The optimum over `qA` in the interval is convex in `qA` and minimized
    /// by the Neyman-Pearson set's own `Q` mass, so the minimizing target is
    /// that mass clamped to the interval. The returned value is never below
    /// the Neyman-Pearson bound; both are valid bounds.
    pub fn worst_case(&mut self, pa: f64, qa_low: f64, qa_high: f64, r: f64) -> Result<WorstCase> {
        let problem = DsrsProblem {
            spec_p: self.p,
            spec_q: self.q,
            pa_low: pa,
            qa_low,
            qa_high,
            radius: r,
        };
        problem.validate()?;
        if r == 0.0 || pa <= 0.0 || pa >= 1.0 {
            let v = if r == 0.0 { pa } else if pa >= 1.0 { 1.0 } else { 0.0 };
            return Ok(WorstCase {
                value: v,
                np_value: v,
                q_target: None,
                source: WorstCaseSource::ConstraintInactive,
            });
        }
        let np = self.np_point(pa, r)?;
        let np_value = match self.p.kind() {
            crate::noise::NoiseKind::StandardGaussian => gaussian_np_value(self.p.sigma(), pa, r),
            crate::noise::NoiseKind::GeneralGaussian => np.e_pdelta,
        };
        let fallback = WorstCase {
            value: np_value,
            np_value,
            q_target: None,
            source: WorstCaseSource::NpFallback,
        };
        let (ball_q, shell_q) = extreme_regions(&self.p, &self.q, pa)?;
        let (lo, hi) = if ball_q <= shell_q { (ball_q, shell_q) } else { (shell_q, ball_q) };
        if qa_high < lo - FEASIBILITY_TOL || qa_low > hi + FEASIBILITY_TOL {
            return Ok(fallback);
        }
        let target = np.e_q.clamp(qa_low, qa_high);
        // A degenerate range means q/p is constant (Q = P), so the Q
        // constraint repeats the P constraint and only the NP set matters.
        if target == np.e_q || hi - lo <= BOUNDARY_TOL {
            return Ok(WorstCase {
                value: np_value,
                np_value,
                q_target: Some(target),
                source: WorstCaseSource::ConstraintInactive,
            });
        }
        let boundary = if target >= hi - BOUNDARY_TOL {
            Some(hi)
        } else if target <= lo + BOUNDARY_TOL {
            Some(lo)
        } else {
            None
        };
        if let Some(extreme) = boundary {
            // Ball {t <= t1} when its Q mass is the extreme, else shell {t >= t0}.
            let inside = extreme == ball_q;
            let edge = if inside {
                radial_quantile(&self.p, pa)?
            } else {
                radial_quantile(&self.p, 1.0 - pa)?
            };
            let v = self.ball_value(r, edge, inside)?;
            return Ok(WorstCase {
                value: v.max(np_value),
                np_value,
                q_target: Some(target),
                source: WorstCaseSource::Boundary,
            });
        }
        match self.solve_duals(pa, target, r) {
            Ok(point) => Ok(WorstCase {
                value: point.e_pdelta.max(np_value),
                np_value,
                q_target: Some(target),
                source: WorstCaseSource::Dual(point),
            }),
            Err(Error::Infeasible(_)) | Err(Error::NumericFailure { .. }) => {
                self.warm_dual = (0.0, 0.0);
                Ok(fallback)
            }
            Err(e) => Err(e),
        }
    }

    fn ball_value(&mut self, r: f64, edge: f64, inside: bool) -> Result<f64> {
        let top = self.max_level();
        let mut level = self.level_floor.min(top);
        let mut prev = self.integrator(level)?.ball_pdelta(r, edge, inside);
        while level < top {
            level += 1;
            let next = self.integrator(level)?.ball_pdelta(r, edge, inside);
            if fabs(next - prev) < self.settings.adaptive_tol {
                return Ok(next);
            }
            prev = next;
        }
        Ok(prev)
    }

    /// Largest radius whose Neyman-Pearson bound stays above 1/2.
    pub fn np_radius(&mut self, pa: f64, tol: f64) -> Result<f64> {
        check_prob("pA", pa)?;
        check_tol(tol)?;
        if pa <= 0.5 {
            return Ok(0.0);
        }
        let cap = RADIUS_CAP_SIGMAS * self.p.sigma_prime();
        if let crate::noise::NoiseKind::StandardGaussian = self.p.kind() {
            return Ok((self.p.sigma() * normal_quantile(pa)).min(cap));
        }
        let step = 0.125 * self.p.sigma_prime();
        self.search_radius(0.0, cap, step, tol, |this, r| this.np_worst_case(pa, r))
    }

    /// Largest radius whose double-sampling bound stays above 1/2; never below
    /// the Neyman-Pearson radius.
    pub fn radius(&mut self, pa: f64, qa_low: f64, qa_high: f64, tol: f64) -> Result<f64> {
        Ok(self.radii(pa, qa_low, qa_high, tol)?.1)
    }

    /// Neyman-Pearson and double-sampling radii for the same `pA`, sharing
    /// the former as the starting point of the latter's search.
    pub fn radii(&mut self, pa: f64, qa_low: f64, qa_high: f64, tol: f64) -> Result<(f64, f64)> {
        check_tol(tol)?;
        DsrsProblem {
            spec_p: self.p,
            spec_q: self.q,
            pa_low: pa,
            qa_low,
            qa_high,
            radius: 0.0,
        }
        .validate()?;
        if pa <= 0.5 {
            return Ok((0.0, 0.0));
        }
        let lo = self.np_radius(pa, tol)?;
        let cap = RADIUS_CAP_SIGMAS * self.p.sigma_prime();
        if lo >= cap {
            return Ok((lo, cap));
        }
        self.warm_dual = (0.0, 0.0);
        let r = self.search_radius(lo, cap, tol, tol, |this, r| {
            Ok(this.worst_case(pa, qa_low, qa_high, r)?.value)
        })?;
        Ok((lo, r))
    }

    /// Last radius in `[lo, cap]` with `value(r) > 1/2`, assuming
    /// `value(lo) > 1/2`: steps grow geometrically from `step` until the
    /// value drops, then bisection to `tol`. Large radii, where the solves
    /// are slowest, are only visited when the answer is large.
    fn search_radius(
        &mut self,
        mut lo: f64,
        cap: f64,
        mut step: f64,
        tol: f64,
        mut value: impl FnMut(&mut Self, f64) -> Result<f64>,
    ) -> Result<f64> {
        let mut hi;
        loop {
            hi = (lo + step).min(cap);
            if value(self, hi)? <= 0.5 {
                break;
            }
            lo = hi;
            if lo >= cap {
                return Ok(cap);
            }
            step *= 2.0;
        }
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if value(self, mid)? > 0.5 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(lo)
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol > 0.0) || !tol.is_finite() {
        return Err(Error::domain(format!("tolerance must be positive, got {tol}")));
    }
    Ok(())
}

/// Without a shift `p_δ = p`, so `λ1 = 1, λ2 = 0` makes every point a tie
/// and any `f` meeting the constraints (randomized on the tie set) is
/// optimal, with value `pa`.
fn unshifted_point(pa: f64, q: f64) -> DualPoint {
    DualPoint {
        lambda1: Multiplier::from_value(1.0),
        lambda2: Multiplier::ZERO,
        e_p: pa,
        e_q: q,
        e_pdelta: pa,
    }
}

/// `Φ(Φ⁻¹(pA) - r/σ)`.
pub(crate) fn gaussian_np_value(sigma: f64, pa: f64, r: f64) -> f64 {
    normal_cdf(normal_quantile(pa) - r / sigma)
}

/// Multipliers matching the targets; see [`Certifier::solve_duals`].
pub fn solve_duals(problem: &DsrsProblem, q_target: f64) -> Result<DualPoint> {
    problem.validate()?;
    Certifier::new(&problem.spec_p, &problem.spec_q)?.solve_duals(problem.pa_low, q_target, problem.radius)
}

/// See [`Certifier::worst_case`].
pub fn dsrs_worst_case(problem: &DsrsProblem) -> Result<WorstCase> {
    Certifier::new(&problem.spec_p, &problem.spec_q)?.worst_case(
        problem.pa_low,
        problem.qa_low,
        problem.qa_high,
        problem.radius,
    )
}

/// See [`Certifier::radius`]; `problem.radius` is ignored.
pub fn dsrs_radius(problem: &DsrsProblem, tol: f64) -> Result<f64> {
    Certifier::new(&problem.spec_p, &problem.spec_q)?.radius(
        problem.pa_low,
        problem.qa_low,
        problem.qa_high,
        tol,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::radial_cdf;

    fn pair(sp: f64, sq: f64, k: u32, d: u32) -> (NoiseSpec, NoiseSpec) {
        (NoiseSpec::general(sp, k, d).unwrap(), NoiseSpec::general(sq, k, d).unwrap())
    }

    #[test]
    fn multiplier_coordinates_round_trip() {
        for &x in &[-700.0, -31.0, -2.5, -1e-9, 0.0, 1e-9, 0.3, 29.0, 35.0, 4096.0] {
            let m = Multiplier::from_coord(x);
            assert!(fabs(m.coord() - x) <= 1e-12 * (1.0 + fabs(x)), "{x} -> {}", m.coord());
        }
        for &v in &[-3.5, -1e-200, 1e300, 2.0] {
            let m = Multiplier::from_value(v);
            // exp(ln|v|) carries the rounding of a log near 690.
            assert!(fabs(m.value() - v) <= 1e-12 * fabs(v));
        }
        assert_eq!(Multiplier::from_value(0.0), Multiplier::ZERO);
        assert_eq!(Multiplier::from_coord(0.0).value(), 0.0);
    }

    #[test]
    fn signed_log_sum_cases() {
        let two = Multiplier::from_value(2.0);
        let neg = Multiplier::from_value(-1.0);
        let close = |a: f64, b: f64| fabs(a - b) < 1e-14;
        assert!(close(signed_log_sum(two, 0.0, two, 0.0), log(4.0)));
        assert!(close(signed_log_sum(two, 0.0, neg, 0.0), 0.0));
        assert!(close(signed_log_sum(neg, 0.0, two, log(3.0)), log(5.0)));
        assert_eq!(signed_log_sum(neg, 0.0, two, -10.0), f64::NEG_INFINITY);
        assert_eq!(signed_log_sum(Multiplier::ZERO, 0.0, Multiplier::ZERO, 0.0), f64::NEG_INFINITY);
    }

    #[test]
    fn threshold_radius_inverts_log_density() {
        for &(k, d) in &[(0u32, 5u32), (1, 3), (380, 784)] {
            let (p, q) = pair(0.5, 0.4, k, d);
            let integ = Integrator::new(&p, &q, 4).unwrap();
            let ln_c = p.log_normalizer();
            for &s in &[1e-3, 0.2, 1.0, 3.0, 14.0, 40.0] {
                let level = p.log_density_at(ln_c, s);
                let got = integ.threshold_radius(level);
                assert!(fabs(got - s) < 1e-10 * s, "k={k} d={d}: {s} -> {got}");
            }
            assert_eq!(integ.threshold_radius(f64::NEG_INFINITY), f64::INFINITY);
        }
        let (p, q) = pair(1.0, 1.0, 0, 4);
        let integ = Integrator::new(&p, &q, 4).unwrap();
        assert_eq!(integ.threshold_radius(p.log_normalizer() + 1.0), 0.0);
    }

    #[test]
    fn sign_change_is_where_the_sum_vanishes() {
        let (p, q) = pair(1.0, 0.6, 1, 5);
        let integ = Integrator::new(&p, &q, 4).unwrap();
        let (m1, m2) = (Multiplier::from_value(1.2), Multiplier::from_value(-0.3));
        let t = integ.sign_change(m1, m2).unwrap();
        let lp = p.log_density_at(p.log_normalizer(), t);
        let lq = q.log_density_at(q.log_normalizer(), t);
        assert!(fabs((m1.ln_abs + lp) - (m2.ln_abs + lq)) < 1e-12);
        assert!(integ.sign_change(m1, Multiplier::from_value(0.3)).is_none());
    }

    #[test]
    fn trivial_expectations() {
        let (p, q) = pair(1.0, 0.6, 0, 2);
        let all = expectations(&p, &q, 0.8, 1e200, 1e200).unwrap();
        assert!(all.e_p > 1.0 - 1e-12 && all.e_q > 1.0 - 1e-12 && all.e_pdelta > 1.0 - 1e-12);
        let none = expectations(&p, &q, 0.8, 0.0, 0.0).unwrap();
        assert_eq!((none.e_p, none.e_q, none.e_pdelta), (0.0, 0.0, 0.0));
        assert!(expectations(&p, &q, -1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn zero_radius_identity() {
        let (p, q) = pair(0.5, 0.4, 380, 784);
        let mut c = Certifier::new(&p, &q).unwrap();
        let w = c.worst_case(0.87, 0.9, 0.95, 0.0).unwrap();
        assert_eq!(w.value, 0.87);
        let point = c.solve_duals(0.87, 0.93, 0.0).unwrap();
        assert!(fabs(point.e_pdelta - point.e_p) < 1e-8);
        assert!(fabs(point.e_p - 0.87) < 1e-6);
    }

    #[test]
    fn duplicated_constraint_matches_np() {
        let (p, _) = pair(0.5, 0.5, 380, 784);
        let mut c = Certifier::new(&p, &p).unwrap();
        let point = c.solve_duals(0.95, 0.95, 0.6).unwrap();
        assert!(fabs(point.e_p - 0.95) < 1e-6 && fabs(point.e_q - 0.95) < 1e-6);
        let np = c.np_worst_case(0.95, 0.6).unwrap();
        assert!(fabs(point.e_pdelta - np) < 1e-4);
        let (lo, hi) = feasible_q_range(&p, &p, 0.95).unwrap();
        assert!(fabs(lo - 0.95) < 1e-12 && fabs(hi - 0.95) < 1e-12);
    }

    #[test]
    fn feasible_range_extremes_are_ball_and_shell() {
        let (p, q) = pair(1.0, 0.5, 2, 10);
        let pa = 0.7;
        let (lo, hi) = feasible_q_range(&p, &q, pa).unwrap();
        let t1 = radial_quantile(&p, pa).unwrap();
        let t0 = radial_quantile(&p, 1.0 - pa).unwrap();
        assert!(fabs(hi - radial_cdf(&q, t1).unwrap()) < 1e-12);
        assert!(fabs(lo - (1.0 - radial_cdf(&q, t0).unwrap())) < 1e-12);
        assert!(lo < pa && pa < hi);
        let problem = DsrsProblem { spec_p: p, spec_q: q, pa_low: pa, qa_low: 0.5 * (hi + 1.0), qa_high: 1.0, radius: 0.5 };
        assert!(!problem.is_feasible().unwrap());
        let w = dsrs_worst_case(&problem).unwrap();
        assert_eq!(w.source, WorstCaseSource::NpFallback);
        assert_eq!(w.value, w.np_value);
    }

    #[test]
    fn vacuous_interval_is_neyman_pearson() {
        let (p, q) = pair(0.5, 0.4, 10, 30);
        let problem = DsrsProblem { spec_p: p, spec_q: q, pa_low: 0.9, qa_low: 0.0, qa_high: 1.0, radius: 0.7 };
        let w = dsrs_worst_case(&problem).unwrap();
        assert_eq!(w.source, WorstCaseSource::ConstraintInactive);
        assert!(fabs(w.value - w.np_value) < 1e-12);
    }

    #[test]
    fn validation_errors() {
        let (p, _) = pair(0.5, 0.4, 10, 30);
        let other = NoiseSpec::general(0.4, 11, 30).unwrap();
        assert!(Certifier::new(&p, &other).is_err());
        let mut problem = DsrsProblem { spec_p: p, spec_q: p, pa_low: 0.9, qa_low: 0.5, qa_high: 0.4, radius: 0.1 };
        assert!(problem.validate().is_err());
        problem.qa_high = 0.6;
        problem.radius = f64::NAN;
        assert!(problem.validate().is_err());
        assert!(dsrs_radius(&DsrsProblem { radius: 0.0, ..problem }, 0.0).is_err());
    }

    #[test]
    fn ball_value_at_zero_shift_is_radial_cdf() {
        let (p, q) = pair(1.0, 0.8, 3, 12);
        let integ = Integrator::new(&p, &q, DEFAULT_PANELS).unwrap();
        let t = radial_quantile(&p, 0.8).unwrap();
        assert!(fabs(integ.ball_pdelta(0.0, t, true) - 0.8) < 1e-9);
        assert!(fabs(integ.ball_pdelta(0.0, t, false) - 0.2) < 1e-9);
        // Shifting the ball's law away from its center loses mass.
        assert!(integ.ball_pdelta(1.0, t, true) < 0.8);
    }

    #[test]
    fn low_pa_abstains() {
        let (p, q) = pair(0.5, 0.4, 10, 30);
        let problem = DsrsProblem { spec_p: p, spec_q: q, pa_low: 0.5, qa_low: 0.3, qa_high: 0.6, radius: 0.0 };
        assert_eq!(dsrs_radius(&problem, 1e-4).unwrap(), 0.0);
    }
}
