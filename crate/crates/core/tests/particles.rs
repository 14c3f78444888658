use empowerment::channel::{blahut_arimoto, DiscreteChannel};
use empowerment::particles::{is_capacity, ISConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_channel(seed: u64, rows: usize, cols: usize) -> DiscreteChannel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<Vec<f64>> = (0..rows)
        .map(|_| {
            // Exponential draws normalize to a flat Dirichlet row.
            let raw: Vec<f64> = (0..cols).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
            let s: f64 = raw.iter().sum();
            raw.into_iter().map(|x| x / s).collect()
        })
        .collect();
    DiscreteChannel::from_rows(&rows).unwrap()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn median_error(futures: usize) -> f64 {
    let errors = (0..20u64)
        .map(|seed| {
            let ch = random_channel(seed, 6, 5);
            let cap = blahut_arimoto(&ch, 1e-12, 10_000).unwrap().capacity;
            let cfg = ISConfig {
                particles: 6,
                futures,
                iterations: 200,
                seed,
                exhaustive: true,
                analytic: false,
            };
            (is_capacity(&ch, &cfg).unwrap().estimate - cap).abs()
        })
        .collect();
    median(errors)
}

#[test]
fn sampled_estimates_approach_capacity() {
    let errs: Vec<f64> = [64, 128, 256].into_iter().map(median_error).collect();
    assert!(errs[0] < 0.05, "median error at J=64: {}", errs[0]);
    assert!(errs[1] <= errs[0] && errs[2] <= errs[1], "{errs:?}");
}

#[test]
fn analytic_mode_reaches_ba_capacity() {
    for seed in 0..5 {
        let ch = random_channel(100 + seed, 6, 5);
        let ba = blahut_arimoto(&ch, 1e-13, 100_000).unwrap();
        let cfg = ISConfig {
            particles: 6,
            futures: 1,
            iterations: ba.iterations + 1,
            seed,
            exhaustive: true,
            analytic: true,
        };
        let r = is_capacity(&ch, &cfg).unwrap();
        assert!((r.estimate - ba.capacity).abs() < 1e-9, "seed {seed}");
    }
}

