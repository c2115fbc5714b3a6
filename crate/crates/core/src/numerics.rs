//! Log-space helpers shared by the sampler, the joint probability and the
//! evaluation code.

use rand::Rng;

/// Counts at or below this use the ascending-factor product for rising
/// factorials; larger counts go through log-Gamma differences.
pub const RISING_PRODUCT_LIMIT: u64 = 32;

#[inline]
pub fn ln_gamma(x: f64) -> f64 {
    statrs::function::gamma::ln_gamma(x)
}

/// `ln Γ(x + n) - ln Γ(x)`, i.e. the log of the rising factorial x^(n).
#[inline]
pub fn log_rising(x: f64, n: u64) -> f64 {
    if n <= RISING_PRODUCT_LIMIT {
        log_rising_product(x, n)
    } else {
        log_rising_gamma(x, n)
    }
}

/// Sum of logs of the ascending factors x, x+1, ..., x+n-1.
#[inline]
pub fn log_rising_product(x: f64, n: u64) -> f64 {
    match n {
        0 => 0.0,
        1 => x.ln(),
        2 => (x * (x + 1.0)).ln(),
        _ => {
            let mut acc = 0.0;
            for i in 0..n {
                acc += (x + i as f64).ln();
            }
            acc
        }
    }
}

#[inline]
pub fn log_rising_gamma(x: f64, n: u64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    ln_gamma(x + n as f64) - ln_gamma(x)
}

/// Normalizes unnormalized log weights in place into probabilities using
/// max-subtraction. Returns the log normalizer.
pub fn normalize_log_weights(weights: &mut [f64]) -> f64 {
    let max = weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    debug_assert!(max.is_finite(), "log weights must contain a finite value");
    let mut total = 0.0;
    for w in weights.iter_mut() {
        *w = (*w - max).exp();
        total += *w;
    }
    for w in weights.iter_mut() {
        *w /= total;
    }
    max + total.ln()
}

/// Draws an index from unnormalized log weights. The slice is overwritten
/// with the unnormalized linear-scale weights.
pub fn sample_log_weights<R: Rng + ?Sized>(weights: &mut [f64], rng: &mut R) -> usize {
    let max = weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for w in weights.iter_mut() {
        *w = (*w - max).exp();
        total += *w;
    }
    let mut target = rng.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if target < *w {
            return i;
        }
        target -= *w;
    }
    // rounding can leave `target` marginally above the last weight
    weights.iter().rposition(|w| *w > 0.0).unwrap_or(weights.len() - 1)
}

/// Two-outcome version of [`sample_log_weights`].
#[inline]
pub fn sample_binary<R: Rng + ?Sized>(log_w0: f64, log_w1: f64, rng: &mut R) -> u8 {
    let p1 = binary_probability(log_w0, log_w1);
    u8::from(rng.random::<f64>() < p1)
}

/// Probability of outcome 1 given two unnormalized log weights.
#[inline]
pub fn binary_probability(log_w0: f64, log_w1: f64) -> f64 {
    // logistic of the log-odds, written to stay finite for large gaps
    let d = log_w1 - log_w0;
    if d >= 0.0 {
        1.0 / (1.0 + (-d).exp())
    } else {
        let e = d.exp();
        e / (1.0 + e)
    }
}

/// Pairwise summation; bit-stable for a fixed input order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 64;
    if values.len() <= BLOCK {
        values.iter().sum()
    } else {
        let mid = values.len() / 2;
        pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rising_routes_agree() {
        for &x in &[1e-5, 5e-5, 0.01, 0.5, 1.0, 3.7, 120.0, 5_000.0] {
            for n in 0..=RISING_PRODUCT_LIMIT {
                let a = log_rising_product(x, n);
                let b = log_rising_gamma(x, n);
                assert!(
                    (a - b).abs() <= 1e-10 * a.abs().max(1.0),
                    "x={x} n={n} product={a} gamma={b}"
                );
            }
        }
    }

    #[test]
    fn rising_of_one_is_factorial() {
        // 1^(5) = 5! = 120
        assert!((log_rising(1.0, 5) - 120f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn rising_finite_at_extreme_counts() {
        let beta = 50.0 / 1e6;
        assert!(log_rising(1e8 + beta, 1).is_finite());
        assert!(log_rising(beta, 100_000_000).is_finite());
        assert!(log_rising(1e8 + 50.0, 1_000).is_finite());
    }

    #[test]
    fn normalize_handles_huge_offsets() {
        let mut w = vec![-1e6, -1e6 + 2f64.ln()];
        normalize_log_weights(&mut w);
        assert!((w[0] - 1.0 / 3.0).abs() < 1e-9);
        assert!((w[1] - 2.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn binary_probability_extremes() {
        assert_eq!(binary_probability(0.0, 0.0), 0.5);
        assert!(binary_probability(0.0, 800.0) <= 1.0);
        assert!(binary_probability(800.0, 0.0) >= 0.0);
        assert!(binary_probability(800.0, 0.0).is_finite());
    }

    #[test]
    fn sampling_frequencies_follow_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let probs = [0.1, 0.6, 0.3];
        let mut counts = [0usize; 3];
        let n = 60_000;
        for _ in 0..n {
            let mut w: Vec<f64> = probs.iter().map(|p: &f64| p.ln() + 400.0).collect();
            counts[sample_log_weights(&mut w, &mut rng)] += 1;
        }
        for (c, p) in counts.iter().zip(probs) {
            let freq = *c as f64 / n as f64;
            let se = (p * (1.0 - p) / n as f64).sqrt();
            assert!((freq - p).abs() < 4.0 * se, "freq {freq} vs {p}");
        }
    }

    #[test]
    fn pairwise_matches_naive_closely() {
        let v: Vec<f64> = (0..1000).map(|i| (i as f64 * 0.37).sin()).collect();
        let naive: f64 = v.iter().sum();
        assert!((pairwise_sum(&v) - naive).abs() < 1e-10);
    }
}
