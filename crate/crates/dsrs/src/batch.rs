//! Parallel certification and synthetic count generation.

use std::time::Instant;

use dsrs_core::pipeline::{certify_record, CertResult, CertifyConfig, CountRecord, NoiseConfig};
use dsrs_core::special::normal_quantile;
use dsrs_core::synthetic::{ball_batch, derive_seed, mc_counts, LinearClassifier, McConfig};
use rayon::prelude::*;

use crate::error::{CliError, CliResult};

/// A record that could not be certified.
#[derive(Debug)]
pub struct RecordError {
    pub example_id: String,
    pub error: CliError,
}

pub fn pool(workers: usize) -> CliResult<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| CliError::validation(format!("cannot start worker pool: {e}")))
}

/// Certifies every record on `workers` threads. Results come back sorted by
/// example id (then method) regardless of completion order; each result's
/// `wall_time` is the time spent on its record.
pub fn certify_batch(
    records: &[CountRecord],
    cfg: &CertifyConfig,
    workers: usize,
) -> CliResult<(Vec<CertResult>, Vec<RecordError>)> {
    let outcomes: Vec<Result<Vec<CertResult>, RecordError>> = pool(workers)?.install(|| {
        records
            .par_iter()
            .map(|rec| {
                let start = Instant::now();
                let mut out = certify_record(rec, cfg)
                    .map_err(|e| RecordError { example_id: rec.example_id.clone(), error: e.into() })?;
                let secs = start.elapsed().as_secs_f64();
                for c in &mut out {
                    c.wall_time = secs;
                }
                Ok(out)
            })
            .collect()
    });
    let mut results = Vec::new();
    let mut errors = Vec::new();
    for o in outcomes {
        match o {
            Ok(r) => results.extend(r),
            Err(e) => errors.push(e),
        }
    }
    results.sort_by(|a, b| a.example_id.cmp(&b.example_id).then(a.method.cmp(&b.method)));
    errors.sort_by(|a, b| a.example_id.cmp(&b.example_id));
    Ok((results, errors))
}

/// Synthetic base classifier family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthModel {
    /// Centered balls of varying `P`-mass, evaluated at their centers.
    Ball,
    /// Halfspaces `x_1 >= -s` evaluated at the origin, with offsets chosen so
    /// the standard Gaussian hit rate runs from 0.6 to 0.999.
    Linear,
}

fn example_id(i: usize) -> String {
    format!("ex-{i:05}")
}

/// Monte Carlo counts for `n` synthetic examples. Example `i` samples with
/// seed `derive_seed(seed, i)`, so output does not depend on `workers`.
pub fn synth_records(
    model: SynthModel,
    noise: NoiseConfig,
    n: usize,
    n_samples: u64,
    n_selection: u64,
    seed: u64,
    workers: usize,
) -> CliResult<Vec<CountRecord>> {
    let (p, _) = noise.specs()?;
    let d = noise.d as usize;
    let origin = vec![0.0; d];
    let balls = match model {
        SynthModel::Ball => ball_batch(&p, n)?,
        SynthModel::Linear => Vec::new(),
    };
    let run = |i: usize| -> CliResult<CountRecord> {
        let mc = McConfig { n_samples, n_selection, seed: derive_seed(seed, i as u64) };
        let id = example_id(i);
        match model {
            SynthModel::Ball => {
                let (ball, label) = &balls[i];
                Ok(mc_counts(ball, &origin, &id, *label, noise, mc)?)
            }
            SynthModel::Linear => {
                let frac = if n > 1 { i as f64 / (n - 1) as f64 } else { 1.0 };
                let offset = noise.sigma_p * normal_quantile(0.6 + 0.399 * frac);
                let mut w = vec![0.0; d];
                w[0] = 1.0;
                let clf = LinearClassifier::new(w, offset, 1, 0)?;
                let label = u32::from(i % 10 != 9);
                Ok(mc_counts(&clf, &origin, &id, label, noise, mc)?)
            }
        }
    };
    pool(workers)?.install(|| (0..n).into_par_iter().map(run).collect())
}
