use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use shotnoise_qrng::stats::{autocorrelation, ks_uniformity, monobit_test, run_battery, BATTERY_TESTS};
use shotnoise_qrng::BitStream;

fn uniform_bits(n_bytes: usize, seed: u64) -> BitStream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    BitStream::from_whole_bytes((0..n_bytes).map(|_| rng.random()).collect())
}

#[test]
fn monobit_under_the_null() {
    // Under H0 p is Uniform(0,1): P(p > 0.01) = 0.99 per seed.
    let passes = (0..10)
        .filter(|&s| monobit_test(&uniform_bits(125_000, 100 + s)).unwrap() > 0.01)
        .count();
    assert!(passes >= 9, "{passes}/10");
}

#[test]
fn battery_pvalues_are_uniform_under_the_null() {
    let bits = uniform_bits(100 * 12_500, 77);
    let set = run_battery(&bits, 100).unwrap();
    for test in BATTERY_TESTS {
        let ps = set.values_for(test);
        assert_eq!(ps.len(), 100);
        let ks = ks_uniformity(&ps).unwrap();
        assert!(ks.p_value > 0.001, "{test}: KS p {}", ks.p_value);
    }
}

#[test]
fn uniform_bits_stay_inside_three_sigma() {
    // Monte-Carlo oracle: each rho(k) is ~N(0, 1/(n-k)), so about 0.27% of
    // lags exceed 3/sqrt(n).
    let bits = uniform_bits(625_000, 9);
    let r = autocorrelation(&bits, 1000).unwrap();
    assert_eq!(r.coefficients[0], 1.0);
    assert!(
        r.exceedances().len() <= 10,
        "{} exceedances",
        r.exceedances().len()
    );
}
