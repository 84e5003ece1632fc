//! Brute-force references for low-dimensional worst-case problems: polar
//! cell discretizations and the linear program over cell indicators.
#![allow(dead_code)]

use std::f64::consts::PI;

/// Cell masses under `P`, `Q` and `P` shifted by `δ`.
pub struct Cells {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub shifted: Vec<f64>,
}

fn gauss2(sigma: f64, t: f64) -> f64 {
    (-t * t / (2.0 * sigma * sigma)).exp() / (2.0 * PI * sigma * sigma)
}

fn rayleigh_cdf(sigma: f64, t: f64) -> f64 {
    -(-t * t / (2.0 * sigma * sigma)).exp_m1()
}

/// Plane split into `n_t` rings by `n_theta` sectors over the upper half
/// (the problem is symmetric about the shift axis). `P` and `Q` are centered
/// Gaussians; their cell masses are exact, the shifted mass uses the midpoint
/// density.
pub fn cells_d2(sigma_p: f64, sigma_q: f64, r: f64, n_t: usize, n_theta: usize) -> Cells {
    let t_max = r + 9.0 * sigma_p.max(sigma_q);
    let dt = t_max / n_t as f64;
    let dth = PI / n_theta as f64;
    let mut cells = Cells { p: Vec::new(), q: Vec::new(), shifted: Vec::new() };
    for i in 0..n_t {
        let (t0, t1) = (i as f64 * dt, (i + 1) as f64 * dt);
        let tm = 0.5 * (t0 + t1);
        let ring_p = rayleigh_cdf(sigma_p, t1) - rayleigh_cdf(sigma_p, t0);
        let ring_q = rayleigh_cdf(sigma_q, t1) - rayleigh_cdf(sigma_q, t0);
        let area = 0.5 * (t1 * t1 - t0 * t0) * dth * 2.0;
        for j in 0..n_theta {
            let th = (j as f64 + 0.5) * dth;
            let s2 = tm * tm + r * r - 2.0 * tm * r * th.cos();
            cells.p.push(ring_p / n_theta as f64);
            cells.q.push(ring_q / n_theta as f64);
            cells.shifted.push(gauss2(sigma_p, s2.max(0.0).sqrt()) * area);
        }
    }
    cells
}

/// Three dimensions, `Q = P`, density `∝ ‖z‖^{-2} exp(-‖z‖²/(2σ'²))` with
/// `σ' = √3 σ`. Cells are rings in `t` times bands in the direction cosine.
pub fn cells_d3_k1(sigma: f64, r: f64, n_t: usize, n_c: usize) -> Cells {
    let sp = 3f64.sqrt() * sigma;
    // ∫ C t^-2 e^{-t²/2σ'²} 4π t² dt = C 4π σ' √(π/2) = 1
    let norm = 1.0 / (4.0 * PI * sp * (PI / 2.0).sqrt());
    let density = |t: f64| norm * (-t * t / (2.0 * sp * sp)).exp() / (t * t);
    // Radial law of ‖z‖ is half-normal with scale σ'.
    let radial_cdf = |t: f64| libm::erf(t / (sp * 2f64.sqrt()));
    let t_max = r + 9.0 * sp;
    let dt = t_max / n_t as f64;
    let dc = 2.0 / n_c as f64;
    let mut cells = Cells { p: Vec::new(), q: Vec::new(), shifted: Vec::new() };
    for i in 0..n_t {
        let (t0, t1) = (i as f64 * dt, (i + 1) as f64 * dt);
        let tm = 0.5 * (t0 + t1);
        let ring = radial_cdf(t1) - radial_cdf(t0);
        let vol_ring = 4.0 * PI * (t1.powi(3) - t0.powi(3)) / 3.0;
        for j in 0..n_c {
            let c = -1.0 + (j as f64 + 0.5) * dc;
            // In three dimensions the cosine is uniform on [-1, 1].
            let frac = dc / 2.0;
            let s2 = tm * tm + r * r - 2.0 * tm * r * c;
            cells.p.push(ring * frac);
            cells.q.push(ring * frac);
            cells.shifted.push(density(s2.max(1e-300).sqrt()) * vol_ring * frac);
        }
    }
    cells
}

/// `min Σ f c` subject to `Σ f a = pa`, `0 <= f <= 1`: fill cells in
/// increasing order of `c/a`.
fn greedy(a: &[f64], c: &[f64], pa: f64) -> f64 {
    let mut value = 0.0;
    let mut idx: Vec<usize> = Vec::with_capacity(a.len());
    for i in 0..a.len() {
        if a[i] > 0.0 {
            idx.push(i);
        } else if c[i] < 0.0 {
            value += c[i];
        }
    }
    idx.sort_unstable_by(|&i, &j| (c[i] / a[i]).total_cmp(&(c[j] / a[j])));
    let mut left = pa;
    for i in idx {
        if left <= 0.0 {
            break;
        }
        let take = (left / a[i]).min(1.0);
        value += take * c[i];
        left -= take * a[i];
    }
    value
}

/// Neyman-Pearson program on the cells.
pub fn lp_np(cells: &Cells, pa: f64) -> f64 {
    greedy(&cells.p, &cells.shifted, pa)
}

/// `min Σ f m_δ` subject to `Σ f m_P = pa` and `ql <= Σ f m_Q <= qu`, through
/// its Lagrangian dual in the `Q` multiplier `w`:
/// `h(w) = greedy(m_δ - w m_Q) + (w > 0 ? w ql : w qu)`, which is concave.
pub fn lp_dsrs(cells: &Cells, pa: f64, ql: f64, qu: f64) -> f64 {
    let mut cost = vec![0.0; cells.p.len()];
    let mut h = |x: f64| {
        let w = x.sinh();
        for i in 0..cost.len() {
            cost[i] = cells.shifted[i] - w * cells.q[i];
        }
        greedy(&cells.p, &cost, pa) + if w > 0.0 { w * ql } else { w * qu }
    };
    // Golden-section maximization over x with w = sinh(x).
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (-30.0f64, 30.0f64);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (h(x1), h(x2));
    for _ in 0..160 {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = h(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = h(x1);
        }
    }
    f1.max(f2).max(h(0.0))
}

/// `(E_P, E_Q, E_{P_δ})` of `1{p_δ <= λ1 p + λ2 q}` for two-dimensional
/// Gaussians, each integrated on its own equal-mass polar grid (`n` rings by
/// `n` sectors) with the indicator at cell midpoints.
pub fn brute_expectations_d2(sigma_p: f64, sigma_q: f64, r: f64, l1: f64, l2: f64, n: usize) -> (f64, f64, f64) {
    let accept = |x: f64, y: f64| {
        let t = (x * x + y * y).sqrt();
        let s = ((x - r) * (x - r) + y * y).sqrt();
        gauss2(sigma_p, s) <= l1 * gauss2(sigma_p, t) + l2 * gauss2(sigma_q, t)
    };
    let integrate = |sigma: f64, cx: f64| {
        let mut hits = 0usize;
        for i in 0..n {
            let u = (i as f64 + 0.5) / n as f64;
            let rho = sigma * (-2.0 * (-u).ln_1p()).sqrt();
            for j in 0..n {
                let th = 2.0 * PI * (j as f64 + 0.5) / n as f64;
                if accept(cx + rho * th.cos(), rho * th.sin()) {
                    hits += 1;
                }
            }
        }
        hits as f64 / (n * n) as f64
    };
    (integrate(sigma_p, 0.0), integrate(sigma_q, 0.0), integrate(sigma_p, r))
}
