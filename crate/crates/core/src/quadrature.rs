//! Composite Gauss-Legendre rules on the unit interval.

use alloc::vec::Vec;
use core::f64::consts::PI;

use libm::{cos, fabs};

/// Nodes per panel of the composite rule.
pub const PANEL_ORDER: usize = 8;
/// Panels in the default rule (`64 * 8 = 512` nodes).
pub const DEFAULT_PANELS: usize = 64;

/// Gauss-Legendre nodes and weights on `[-1, 1]`, by Newton iteration on the
/// Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = cos(PI * (i as f64 + 0.75) / (n as f64 + 0.5));
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=n {
                let j = j as f64;
                let p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else { p1 };
            let pn1 = if n == 0 { 0.0 } else { p0 };
            dp = n as f64 * (x * pn - pn1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if fabs(dx) < 1e-16 {
                break;
            }
        }
        nodes.push(x);
        weights.push(2.0 / ((1.0 - x * x) * dp * dp));
    }
    // Ascending order.
    nodes.reverse();
    weights.reverse();
    (nodes, weights)
}

/// A composite rule on `(0, 1)` with `panels` equal panels of
/// [`PANEL_ORDER`]-point Gauss-Legendre. Nodes never touch the endpoints.
#[derive(Debug, Clone)]
pub struct UnitRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl UnitRule {
    pub fn new(panels: usize) -> Self {
        let (gx, gw) = gauss_legendre(PANEL_ORDER);
        let h = 1.0 / panels as f64;
        let mut nodes = Vec::with_capacity(panels * PANEL_ORDER);
        let mut weights = Vec::with_capacity(panels * PANEL_ORDER);
        for p in 0..panels {
            let left = p as f64 * h;
            for (x, w) in gx.iter().zip(&gw) {
                nodes.push(left + 0.5 * h * (x + 1.0));
                weights.push(0.5 * h * w);
            }
        }
        Self { nodes, weights }
    }

    /// The composite rule pulled back through `u = 10v³ - 15v⁴ + 6v⁵`, whose
    /// first two derivatives vanish at both ends. Endpoint behavior like
    /// `u^γ` becomes `v^{3γ}`, so integrands with weak endpoint
    /// singularities keep close to the plain rule's smooth-case accuracy.
    pub fn graded(panels: usize) -> Self {
        let plain = Self::new(panels);
        let mut nodes = Vec::with_capacity(plain.len());
        let mut weights = Vec::with_capacity(plain.len());
        for (&v, &w) in plain.nodes.iter().zip(&plain.weights) {
            let v2 = v * v;
            let vc = 1.0 - v;
            // Evaluate from the nearer end so that nodes close to 1 keep
            // their distance to 1 exactly.
            let u = if v <= 0.5 {
                v2 * v * (10.0 - 15.0 * v + 6.0 * v2)
            } else {
                let c2 = vc * vc;
                1.0 - c2 * vc * (10.0 - 15.0 * vc + 6.0 * c2)
            };
            nodes.push(u);
            weights.push(w * 30.0 * v2 * vc * vc);
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}
