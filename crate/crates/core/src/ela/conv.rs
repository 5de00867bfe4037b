//! Convexity features from random convex combinations of sample pairs.
//!
//! For a pair `(x1, y1), (x2, y2)` and `w ~ U(0,1)` the deviation is
//! `delta = (w y1 + (1 - w) y2) - f(w x1 + (1 - w) x2)` on the maximised
//! fitness scale. This equals the usual `f(combination) - chord` of the
//! underlying minimisation objective, so a convex cost (concave fitness)
//! gives `delta < 0`.

use rand::Rng;

use super::{mean, ElaBudget, FeatureVector};
use crate::{Dataset, Error, Result, SplitRng};

pub const CONV_EPS: f64 = 1e-10;

/// Features f1 (convex share), f2 (mean |delta|), f3 (mean delta) and
/// f4 (linear share). Spends exactly `conv_pairs` evaluations.
pub fn ela_conv<F>(dataset: &Dataset, objective: F, budget: &ElaBudget, rng: &mut SplitRng) -> Result<FeatureVector>
where
    F: Fn(&[f64]) -> f64,
{
    if budget.conv_pairs == 0 {
        return Err(Error::InvalidBudget("conv_pairs must be at least 1".into()));
    }
    let data = dataset.canonical();
    let m = data.len();
    if m < 2 {
        return Err(Error::InsufficientSamples(format!("convexity needs 2 samples, got {m}")));
    }
    let y = data.fitness();
    let mut deltas = Vec::with_capacity(budget.conv_pairs);
    let mut point = vec![0.0; data.dim()];
    for _ in 0..budget.conv_pairs {
        let i = rng.random_range(0..m);
        let mut j = rng.random_range(0..m - 1);
        if j >= i {
            j += 1;
        }
        let w: f64 = rng.random();
        for (p, (a, b)) in point.iter_mut().zip(data.x(i).iter().zip(data.x(j))) {
            *p = w * a + (1.0 - w) * b;
        }
        let chord = w * y[i] + (1.0 - w) * y[j];
        deltas.push(chord - objective(&point));
    }
    let n = deltas.len() as f64;
    let mut out = FeatureVector {
        evals_used: budget.conv_pairs as u64,
        ..Default::default()
    };
    out.set_value(1, deltas.iter().filter(|d| **d < -CONV_EPS).count() as f64 / n);
    out.set_value(2, deltas.iter().map(|d| d.abs()).sum::<f64>() / n);
    out.set_value(3, mean(&deltas));
    out.set_value(4, deltas.iter().filter(|d| d.abs() <= CONV_EPS).count() as f64 / n);
    Ok(out)
}
