//! Reblocking analysis of serially correlated samples.

/// Mean and standard error of `data`. The samples are repeatedly averaged in
/// pairs; the reported error is taken at the smallest block size `B` with
/// `B^3 > 2 N (s_B / s_1)^4`, where `s_B` is the naive standard error at block
/// size `B`. If no level qualifies, the largest error seen is returned.
pub fn blocking_analysis(data: &[f64]) -> (f64, f64) {
    let n = data.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = data.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let mut level = data.to_vec();
    let mut errors: Vec<(usize, f64)> = Vec::new();
    let mut block = 1usize;
    while level.len() >= 2 {
        errors.push((block, naive_stderr(&level)));
        level = level.chunks_exact(2).map(|p| 0.5 * (p[0] + p[1])).collect();
        block *= 2;
    }
    let s1 = errors[0].1;
    if s1 == 0.0 {
        return (mean, 0.0);
    }
    for &(b, s) in &errors {
        let ratio = s / s1;
        if (b as f64).powi(3) > 2.0 * n as f64 * ratio.powi(4) {
            return (mean, s);
        }
    }
    (mean, errors.iter().map(|e| e.1).fold(0.0, f64::max))
}

fn naive_stderr(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0);
    (var / n).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn constant_series_has_zero_error() {
        assert_eq!(blocking_analysis(&[2.5; 64]), (2.5, 0.0));
        assert_eq!(blocking_analysis(&[1.0]), (1.0, 0.0));
    }

    #[test]
    fn independent_samples_match_naive_error() {
        let mut rng = crate::rng::stream(3, crate::rng::Domain::SubSeed, 0, 0);
        let x: Vec<f64> = (0..4096).map(|_| rng.sample(StandardNormal)).collect();
        let (_, e) = blocking_analysis(&x);
        let naive = naive_stderr(&x);
        assert!((e / naive - 1.0).abs() < 0.25, "{e} vs {naive}");
    }

    #[test]
    fn correlated_samples_inflate_error() {
        let mut rng = crate::rng::stream(4, crate::rng::Domain::SubSeed, 0, 0);
        let mut x = Vec::with_capacity(8192);
        let mut v = 0.0;
        for _ in 0..8192 {
            let z: f64 = rng.sample(StandardNormal);
            v = 0.95 * v + z;
            x.push(v);
        }
        let (_, e) = blocking_analysis(&x);
        // Integrated autocorrelation time (1 + rho)/(1 - rho) = 39.
        let expected = naive_stderr(&x) * 39f64.sqrt();
        assert!(e > 0.6 * expected && e < 1.4 * expected, "{e} vs {expected}");
    }
}
