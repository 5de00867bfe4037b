//! Latin hypercube and uniform sampling of a box.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::{Error, Genotype, Result, SplitRng};

/// Axis-aligned box `[lower[i], upper[i]]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Bounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(Error::InvalidArgument(
                "bounds need matching nonempty lower and upper vectors".into(),
            ));
        }
        for (i, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidArgument(format!(
                    "bounds dimension {i}: need finite lower < upper, got [{lo}, {hi}]"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// The cube `[lo, hi]^dim`.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; dim], vec![hi; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn width(&self, i: usize) -> f64 {
        self.upper[i] - self.lower[i]
    }

    /// Euclidean length of the box diagonal.
    pub fn diagonal(&self) -> f64 {
        (0..self.dim()).map(|i| self.width(i).powi(2)).sum::<f64>().sqrt()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (lo, hi))| *lo <= *v && *v <= *hi)
    }

    pub fn clip(&self, x: &mut [f64]) {
        for (v, (lo, hi)) in x.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            *v = v.clamp(*lo, *hi);
        }
    }
}

/// Plain random-permutation Latin hypercube design of `m` points.
///
/// In every dimension each of the `m` equal-width strata holds exactly one
/// point, positioned uniformly within its stratum.
pub fn lhs_sample(m: usize, bounds: &Bounds, rng: &mut SplitRng) -> Result<Vec<Genotype>> {
    if m == 0 {
        return Err(Error::InvalidArgument("lhs sample size must be at least 1".into()));
    }
    let d = bounds.dim();
    let mut points = vec![vec![0.0; d]; m];
    let mut perm: Vec<usize> = (0..m).collect();
    for i in 0..d {
        perm.shuffle(rng);
        let (lo, hi) = (bounds.lower[i], bounds.upper[i]);
        for (point, &stratum) in points.iter_mut().zip(&perm) {
            let u: f64 = rng.random();
            let mut v = lo + (stratum as f64 + u) / m as f64 * (hi - lo);
            // Rounding at a stratum edge can spill into the neighbour.
            if stratum_index(v, lo, hi, m) != stratum {
                v = lo + (stratum as f64 + 0.5) / m as f64 * (hi - lo);
            }
            point[i] = v.clamp(lo, hi);
        }
    }
    Ok(points.into_iter().map(Genotype::from_vec).collect())
}

/// Stratum of `v` among `m` equal-width strata of `[lo, hi]`; the upper edge belongs to the last.
pub fn stratum_index(v: f64, lo: f64, hi: f64, m: usize) -> usize {
    let s = ((v - lo) / (hi - lo) * m as f64).floor();
    if s < 0.0 {
        0
    } else {
        (s as usize).min(m - 1)
    }
}

/// `m` i.i.d. uniform points in the box.
pub fn uniform_sample(m: usize, bounds: &Bounds, rng: &mut SplitRng) -> Result<Vec<Genotype>> {
    if m == 0 {
        return Err(Error::InvalidArgument("uniform sample size must be at least 1".into()));
    }
    Ok((0..m).map(|_| uniform_point(bounds, rng)).collect())
}

pub(crate) fn uniform_point(bounds: &Bounds, rng: &mut SplitRng) -> Genotype {
    let x = bounds
        .lower
        .iter()
        .zip(&bounds.upper)
        .map(|(lo, hi)| rng.random_range(*lo..=*hi))
        .collect();
    Genotype::from_vec(x)
}
