use std::io::BufReader;

use dsrs::counts::{write_counts, CountReader};
use dsrs::output::{read_results_csv, write_results, ResultsFormat};
use dsrs_core::pipeline::{CertResult, CountRecord, Method, NoiseConfig};
use dsrs_core::NoiseKind;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_record(rng: &mut ChaCha8Rng, i: usize) -> CountRecord {
    let d = rng.random_range(2..5000u32);
    let general = rng.random_bool(0.5);
    let n = rng.random_range(1..1_000_000u64);
    CountRecord {
        example_id: format!("r{i}-{}", rng.random::<u32>()),
        label: rng.random_range(0..1000),
        predicted: rng.random_range(0..1000),
        n_selection: rng.random_range(1..100_000),
        count_p: rng.random_range(0..=n),
        count_q: rng.random_range(0..=n),
        n_samples: n,
        noise: NoiseConfig {
            kind: if general { NoiseKind::GeneralGaussian } else { NoiseKind::StandardGaussian },
            sigma_p: rng.random_range(1e-3..10.0),
            sigma_q: rng.random::<f64>() * 5.0 + 1e-9,
            k: if general { rng.random_range(0..d.div_ceil(2)) } else { 0 },
            d,
        },
        seed: rng.random(),
    }
}

#[test]
fn thousand_record_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(1000);
    let records: Vec<CountRecord> = (0..1000).map(|i| random_record(&mut rng, i)).collect();
    let mut buf = Vec::new();
    write_counts(&mut buf, &records).unwrap();
    assert_eq!(buf.iter().filter(|&&b| b == b'\n').count(), 1000);
    let back: Vec<CountRecord> = CountReader::new(BufReader::new(buf.as_slice())).map(Result::unwrap).collect();
    assert_eq!(back, records);
}

#[test]
fn results_round_trip_is_lossless() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let results: Vec<CertResult> = (0..500)
        .map(|i| {
            let abstained = rng.random_bool(0.2);
            CertResult {
                example_id: format!("id \"{i}\", quoted"),
                method: if i % 2 == 0 { Method::Np } else { Method::Dsrs },
                radius: if abstained { 0.0 } else { rng.random::<f64>() * 5.0 },
                abstained,
                correct: rng.random_bool(0.7),
                pa_low: rng.random(),
                qa_low: rng.random(),
                qa_high: rng.random(),
                wall_time: 0.0,
            }
        })
        .collect();
    let mut buf = Vec::new();
    write_results(&mut buf, &results, ResultsFormat::Csv).unwrap();
    assert_eq!(read_results_csv(buf.as_slice()).unwrap(), results);
}
