//! Fourier components of periodic series and moments of distributions.

use std::f64::consts::PI;

use num_complex::Complex64;

/// Complex amplitude X̂_k of the k-th harmonic of a series sampled uniformly
/// over exactly one period, endpoint included (and ignored).
///
/// Normalized so that x(t) = X̂₀ + Σ_k Re(X̂_k e^{ikΩt}); for k = 0 this is
/// the period mean. Phases refer to absolute time.
pub fn harmonic(times: &[f64], values: &[f64], k: usize) -> Complex64 {
    assert_eq!(times.len(), values.len());
    assert!(times.len() >= 3, "need at least two cells");
    let n = times.len() - 1;
    let period = times[n] - times[0];
    let omega = 2.0 * PI / period;
    let sum: Complex64 = (0..n)
        .map(|i| values[i] * Complex64::from_polar(1.0, -(k as f64) * omega * times[i]))
        .sum();
    let norm = if k == 0 { 1.0 } else { 2.0 };
    sum * (norm / n as f64)
}

/// Mean of uniformly sampled values over one period (endpoint ignored).
pub fn period_mean(values: &[f64]) -> f64 {
    let n = values.len() - 1;
    values[..n].iter().sum::<f64>() / n as f64
}

/// First four cumulants of a distribution over consecutive integers
/// starting at `m_min`.
pub fn cumulants_of(m_min: i64, p: &[f64]) -> [f64; 4] {
    let total: f64 = p.iter().sum();
    let ms = || {
        p.iter()
            .enumerate()
            .map(|(i, &w)| ((m_min + i as i64) as f64, w / total))
    };
    let mean: f64 = ms().map(|(m, w)| m * w).sum();
    let central = |r: i32| ms().map(|(m, w)| (m - mean).powi(r) * w).sum::<f64>();
    let (mu2, mu3, mu4) = (central(2), central(3), central(4));
    [mean, mu2, mu3, mu4 - 3.0 * mu2 * mu2]
}
