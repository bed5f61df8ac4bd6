use crate::stats;

pub const DISTRIBUTION_NAMES: [&str; 3] = ["distr.skewness", "distr.kurtosis", "distr.peaks"];

/// Kernel bandwidth on min-max normalized objective values.
pub const PEAK_BANDWIDTH: f64 = 0.05;
/// Density grid resolution.
pub const PEAK_GRID: usize = 256;
/// Local maxima below this fraction of the global maximum are ignored.
pub const PEAK_MIN_FRACTION: f64 = 0.05;

/// Sample skewness, excess kurtosis, and number of modes of a fixed-bandwidth
/// Gaussian density estimate of `y`.
pub fn distribution_features(y: &[f64]) -> Vec<Option<f64>> {
    assert!(!y.is_empty(), "distribution: empty sample");
    let n = y.len() as f64;
    let mu = stats::mean(y);
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for v in y {
        let c = v - mu;
        let c2 = c * c;
        m2 += c2;
        m3 += c2 * c;
        m4 += c2 * c2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    let scale = y.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let degenerate = m2 <= (1e-13 * scale).powi(2) || m2 == 0.0;
    let (skew, kurt) = if degenerate {
        (None, None)
    } else {
        (Some(m3 / m2.powf(1.5)), Some(m4 / (m2 * m2) - 3.0))
    };
    vec![skew, kurt, Some(count_peaks(y) as f64)]
}

/// Number of modes of the density estimate.
pub fn count_peaks(y: &[f64]) -> usize {
    let lo = y.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    if !(span > 0.0) {
        return 1;
    }
    let z: Vec<f64> = y.iter().map(|v| (v - lo) / span).collect();
    let pad = 3.0 * PEAK_BANDWIDTH;
    let dens: Vec<f64> = (0..PEAK_GRID)
        .map(|k| {
            let g = -pad + (1.0 + 2.0 * pad) * k as f64 / (PEAK_GRID - 1) as f64;
            z.iter()
                .map(|v| {
                    let u = (g - v) / PEAK_BANDWIDTH;
                    (-0.5 * u * u).exp()
                })
                .sum::<f64>()
        })
        .collect();
    let top = dens.iter().cloned().fold(0.0, f64::max);
    let mut peaks = 0;
    for k in 0..PEAK_GRID {
        let left = if k == 0 { f64::NEG_INFINITY } else { dens[k - 1] };
        let right = if k + 1 == PEAK_GRID { f64::NEG_INFINITY } else { dens[k + 1] };
        if dens[k] > left && dens[k] >= right && dens[k] >= PEAK_MIN_FRACTION * top {
            peaks += 1;
        }
    }
    peaks
}
