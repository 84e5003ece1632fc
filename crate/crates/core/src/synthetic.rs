//! Base classifiers with known smoothed behavior, and Monte Carlo counting.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::noise::{radial_cdf, radial_quantile, sample_noise_into, NoiseSpec};
use crate::pipeline::{CountRecord, NoiseConfig};

/// Selection draws used when none are configured.
pub const DEFAULT_N_SELECTION: u64 = 1000;

/// A hard classifier on `R^d`.
pub trait BaseClassifier {
    fn dim(&self) -> usize;
    fn predict(&self, x: &[f64]) -> u32;
}

/// Predicts `target_class` inside the closed ball `‖x - center‖ <= threshold`
/// and `other_class` outside.
#[derive(Debug, Clone, PartialEq)]
pub struct BallClassifier {
    pub center: Vec<f64>,
    pub threshold: f64,
    pub target_class: u32,
    pub other_class: u32,
}

impl BallClassifier {
    pub fn new(center: Vec<f64>, threshold: f64, target_class: u32, other_class: u32) -> Result<Self> {
        if !(threshold > 0.0) {
            return Err(Error::domain(format!("ball threshold must be positive, got {threshold}")));
        }
        if target_class == other_class {
            return Err(Error::domain("ball classes must differ"));
        }
        if center.iter().any(|c| !c.is_finite()) {
            return Err(Error::domain("ball center must be finite"));
        }
        Ok(Self { center, threshold, target_class, other_class })
    }

    /// Ball centered at the origin of `R^d`.
    pub fn centered(d: usize, threshold: f64, target_class: u32, other_class: u32) -> Result<Self> {
        Self::new(vec![0.0; d], threshold, target_class, other_class)
    }

    /// `(pA, qA)` at the center: the radial cdfs at the threshold. Exact, so
    /// the `Q` interval is the single point `qA`.
    pub fn exact_probs(&self, p: &NoiseSpec, q: &NoiseSpec) -> Result<(f64, f64)> {
        if p.d() as usize != self.center.len() || q.d() as usize != self.center.len() {
            return Err(Error::domain(format!(
                "noise dimension ({}, {}) does not match ball dimension {}",
                p.d(),
                q.d(),
                self.center.len()
            )));
        }
        Ok((radial_cdf(p, self.threshold)?, radial_cdf(q, self.threshold)?))
    }
}

impl BaseClassifier for BallClassifier {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn predict(&self, x: &[f64]) -> u32 {
        let d2: f64 = x.iter().zip(&self.center).map(|(a, c)| (a - c) * (a - c)).sum();
        if d2 <= self.threshold * self.threshold {
            self.target_class
        } else {
            self.other_class
        }
    }
}

/// Predicts `positive_class` when `w·x + b >= 0`, else `negative_class`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearClassifier {
    pub weight: Vec<f64>,
    pub bias: f64,
    pub positive_class: u32,
    pub negative_class: u32,
}

impl LinearClassifier {
    pub fn new(weight: Vec<f64>, bias: f64, positive_class: u32, negative_class: u32) -> Result<Self> {
        if weight.iter().all(|w| *w == 0.0) || weight.iter().any(|w| !w.is_finite()) || !bias.is_finite() {
            return Err(Error::domain("linear weight must be finite and nonzero"));
        }
        Ok(Self { weight, bias, positive_class, negative_class })
    }
}

impl BaseClassifier for LinearClassifier {
    fn dim(&self) -> usize {
        self.weight.len()
    }

    fn predict(&self, x: &[f64]) -> u32 {
        let s: f64 = self.weight.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.bias;
        if s >= 0.0 {
            self.positive_class
        } else {
            self.negative_class
        }
    }
}

/// Sampling sizes and seed for [`mc_counts`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McConfig {
    pub n_samples: u64,
    pub n_selection: u64,
    pub seed: u64,
}

/// Per-example seed from a batch seed (splitmix64 of the pair), so each
/// example has its own stream independent of scheduling.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Two-stage counting at `x`: `n_selection` draws under `P` pick the top
/// class (ties to the smallest label), then `n_samples` fresh draws under each
/// of `P` and `Q` count hits on that class. Deterministic given the seed.
pub fn mc_counts<C: BaseClassifier + ?Sized>(
    classifier: &C,
    x: &[f64],
    example_id: &str,
    label: u32,
    noise: NoiseConfig,
    mc: McConfig,
) -> Result<CountRecord> {
    let (p, q) = noise.specs()?;
    let d = noise.d as usize;
    if x.len() != d || classifier.dim() != d {
        return Err(Error::domain(format!(
            "dimension mismatch: input {}, classifier {}, noise {d}",
            x.len(),
            classifier.dim()
        )));
    }
    if mc.n_samples == 0 || mc.n_selection == 0 {
        return Err(Error::domain("sample counts must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(mc.seed);
    let mut noisy = vec![0.0; d];
    let draw = |spec: &NoiseSpec, rng: &mut ChaCha8Rng, noisy: &mut Vec<f64>| -> u32 {
        sample_noise_into(spec, rng, noisy);
        for (v, xi) in noisy.iter_mut().zip(x) {
            *v += xi;
        }
        classifier.predict(noisy)
    };

    let mut votes: BTreeMap<u32, u64> = BTreeMap::new();
    for _ in 0..mc.n_selection {
        *votes.entry(draw(&p, &mut rng, &mut noisy)).or_default() += 1;
    }
    // BTreeMap iterates in ascending label order; keep the first maximum.
    let mut predicted = 0;
    let mut best = 0;
    for (&class, &count) in &votes {
        if count > best {
            best = count;
            predicted = class;
        }
    }

    let mut count_p = 0;
    for _ in 0..mc.n_samples {
        count_p += u64::from(draw(&p, &mut rng, &mut noisy) == predicted);
    }
    let mut count_q = 0;
    for _ in 0..mc.n_samples {
        count_q += u64::from(draw(&q, &mut rng, &mut noisy) == predicted);
    }
    Ok(CountRecord {
        example_id: String::from(example_id),
        label,
        predicted,
        n_selection: mc.n_selection,
        count_p,
        count_q,
        n_samples: mc.n_samples,
        noise,
        seed: mc.seed,
    })
}

/// A deterministic batch of `n` centered ball classifiers whose `P`-mass
/// inside the ball runs evenly from 0.6 to 0.999. Class 0 is predicted
/// inside; every tenth example carries label 1, so it counts as misclassified.
/// Returns `(classifier, label)` pairs.
pub fn ball_batch(spec_p: &NoiseSpec, n: usize) -> Result<Vec<(BallClassifier, u32)>> {
    let (lo, hi) = (0.6, 0.999);
    (0..n)
        .map(|i| {
            let frac = if n > 1 { i as f64 / (n - 1) as f64 } else { 1.0 };
            let t = radial_quantile(spec_p, lo + (hi - lo) * frac)?;
            let label = u32::from(i % 10 == 9);
            Ok((BallClassifier::centered(spec_p.d() as usize, t, 0, 1)?, label))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::NoiseKind;
    use libm::{fabs, sqrt};

    fn noise(d: u32) -> NoiseConfig {
        NoiseConfig { kind: NoiseKind::StandardGaussian, sigma_p: 0.5, sigma_q: 0.4, k: 0, d }
    }

    #[test]
    fn exact_probs_round_trip() {
        let (p, q) = noise(10).specs().unwrap();
        let t = radial_quantile(&p, 0.9).unwrap();
        let ball = BallClassifier::centered(10, t, 0, 1).unwrap();
        let (pa, qa) = ball.exact_probs(&p, &q).unwrap();
        assert!(fabs(pa - 0.9) < 1e-10);
        assert!(qa > pa);
        let huge = BallClassifier::centered(10, 1e6, 0, 1).unwrap();
        assert_eq!(huge.exact_probs(&p, &q).unwrap(), (1.0, 1.0));
    }

    #[test]
    fn constructors_validate() {
        assert!(BallClassifier::centered(3, 0.0, 0, 1).is_err());
        assert!(BallClassifier::centered(3, 1.0, 2, 2).is_err());
        assert!(LinearClassifier::new(vec![0.0, 0.0], 1.0, 0, 1).is_err());
        let (p, q) = noise(4).specs().unwrap();
        assert!(BallClassifier::centered(3, 1.0, 0, 1).unwrap().exact_probs(&p, &q).is_err());
    }

    #[test]
    fn huge_ball_counts_everything() {
        let ball = BallClassifier::centered(8, 1e3, 3, 1).unwrap();
        let mc = McConfig { n_samples: 200, n_selection: 20, seed: 1 };
        let rec = mc_counts(&ball, &[0.0; 8], "c", 3, noise(8), mc).unwrap();
        assert_eq!((rec.predicted, rec.count_p, rec.count_q), (3, 200, 200));
        assert!(rec.correct());
    }

    #[test]
    fn seeded_counts_are_reproducible() {
        let lin = LinearClassifier::new(vec![1.0, -1.0, 0.5], 0.1, 1, 0).unwrap();
        let mc = McConfig { n_samples: 500, n_selection: 50, seed: 42 };
        let x = [0.2, 0.1, 0.0];
        let a = mc_counts(&lin, &x, "a", 1, noise(3), mc).unwrap();
        let b = mc_counts(&lin, &x, "a", 1, noise(3), mc).unwrap();
        assert_eq!(a, b);
        let c = mc_counts(&lin, &x, "a", 1, noise(3), McConfig { seed: 43, ..mc }).unwrap();
        assert_ne!((a.count_p, a.count_q), (c.count_p, c.count_q));
    }

    #[test]
    fn linear_boundary_is_even() {
        // On the hyperplane the hit rate is 1/2 under any symmetric noise.
        let lin = LinearClassifier::new(vec![0.6, 0.8], 0.0, 1, 0).unwrap();
        let n = 100_000;
        let mc = McConfig { n_samples: n, n_selection: 100, seed: 5 };
        let rec = mc_counts(&lin, &[0.8, -0.6], "b", 1, noise(2), mc).unwrap();
        let band = 3.0 * sqrt(0.25 / n as f64);
        assert!(fabs(rec.count_p as f64 / n as f64 - 0.5) <= band, "{}", rec.count_p);
        assert!(fabs(rec.count_q as f64 / n as f64 - 0.5) <= band, "{}", rec.count_q);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let ball = BallClassifier::centered(4, 1.0, 0, 1).unwrap();
        let mc = McConfig { n_samples: 10, n_selection: 10, seed: 0 };
        assert!(mc_counts(&ball, &[0.0; 3], "x", 0, noise(4), mc).is_err());
        assert!(mc_counts(&ball, &[0.0; 4], "x", 0, noise(4), McConfig { n_samples: 0, ..mc }).is_err());
    }

    #[test]
    fn seeds_differ_by_index() {
        let s: Vec<u64> = (0..64).map(|i| derive_seed(7, i)).collect();
        let mut sorted = s.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), 64);
        assert_ne!(derive_seed(7, 0), derive_seed(8, 0));
    }

    #[test]
    fn batch_shape() {
        let (p, _) = noise(6).specs().unwrap();
        let batch = ball_batch(&p, 20).unwrap();
        assert_eq!(batch.len(), 20);
        assert_eq!(batch.iter().filter(|(_, l)| *l == 1).count(), 2);
        assert!(batch.windows(2).all(|w| w[0].0.threshold < w[1].0.threshold));
        let top = radial_cdf(&p, batch[19].0.threshold).unwrap();
        assert!(fabs(top - 0.999) < 1e-10);
    }
}
