//! Shape of the fitness distribution: skewness, excess kurtosis and the number
//! of modes of a Gaussian kernel density estimate.

use std::f64::consts::PI;

use super::{mean, sample_sd, FeatureValue, FeatureVector};
use crate::stats::quantile_sorted;
use crate::{Dataset, Error, Result};

pub const KDE_GRID: usize = 512;
/// Minimum probability mass between flanking minima for a mode to count.
pub const MODE_MIN_MASS: f64 = 0.01;

/// Features f5 (excess kurtosis), f6 (number of peaks) and f7 (skewness).
pub fn ela_distr(dataset: &Dataset) -> Result<FeatureVector> {
    let y = dataset.canonical().fitness();
    let m = y.len();
    if m < 4 {
        return Err(Error::InsufficientSamples(format!("distribution features need 4 samples, got {m}")));
    }
    let mut out = FeatureVector::default();
    if y.iter().all(|v| *v == y[0]) {
        out.set(5, FeatureValue::degenerate());
        out.set_value(6, 1.0);
        out.set(7, FeatureValue::degenerate());
        return Ok(out);
    }
    let mu = mean(&y);
    let central = |p: i32| y.iter().map(|v| (v - mu).powi(p)).sum::<f64>() / m as f64;
    let (m2, m3, m4) = (central(2), central(3), central(4));
    out.set_value(5, m4 / (m2 * m2) - 3.0);
    out.set_value(6, kde_peak_count(&y) as f64);
    out.set_value(7, m3 / m2.powf(1.5));
    Ok(out)
}

/// Silverman's rule-of-thumb bandwidth `0.9 min(sd, IQR / 1.34) m^(-1/5)`.
pub fn silverman_bandwidth(y: &[f64]) -> f64 {
    let mut sorted = y.to_vec();
    sorted.sort_by(f64::total_cmp);
    let sd = sample_sd(y);
    let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
    let mut spread = sd.min(iqr / 1.34);
    if spread <= 0.0 {
        spread = sd;
    }
    0.9 * spread * (y.len() as f64).powf(-0.2)
}

/// Modes of a Gaussian KDE evaluated on a 512-point grid over
/// `[min - 3h, max + 3h]`. The grid is cut at every local minimum and a
/// segment counts as a mode when it carries at least 1% of the mass.
pub fn kde_peak_count(y: &[f64]) -> usize {
    let h = silverman_bandwidth(y);
    if h.is_nan() || h <= 0.0 {
        return 1;
    }
    let lo = y.iter().copied().fold(f64::INFINITY, f64::min) - 3.0 * h;
    let hi = y.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 3.0 * h;
    let step = (hi - lo) / (KDE_GRID - 1) as f64;
    let norm = 1.0 / (y.len() as f64 * h * (2.0 * PI).sqrt());
    let density: Vec<f64> = (0..KDE_GRID)
        .map(|g| {
            let t = lo + g as f64 * step;
            norm * y.iter().map(|v| (-0.5 * ((t - v) / h).powi(2)).exp()).sum::<f64>()
        })
        .collect();

    // Compare on a 1e-12 relative lattice so rounding noise on flat stretches
    // does not register as minima.
    let top = density.iter().copied().fold(0.0, f64::max);
    let level: Vec<f64> = density.iter().map(|d| (d / top * 1e12).round()).collect();
    let mut cuts = vec![0];
    for i in 1..KDE_GRID - 1 {
        if level[i] < level[i - 1] && level[i] <= level[i + 1] {
            cuts.push(i);
        }
    }
    cuts.push(KDE_GRID - 1);
    cuts.windows(2)
        .filter(|w| {
            let mass: f64 = (w[0]..w[1])
                .map(|i| 0.5 * (density[i] + density[i + 1]) * step)
                .sum();
            mass >= MODE_MIN_MASS
        })
        .count()
        .max(1)
}
