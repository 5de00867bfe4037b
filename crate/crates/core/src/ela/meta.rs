//! Meta-model features: least-squares fits of linear and quadratic models.

use nalgebra::{DMatrix, DVector};

use super::{FeatureValue, FeatureVector};
use crate::{Dataset, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MetaModel {
    Linear,
    LinearInteract,
    Quadratic,
    QuadraticInteract,
}

impl MetaModel {
    fn has_squares(self) -> bool {
        matches!(self, MetaModel::Quadratic | MetaModel::QuadraticInteract)
    }

    fn has_interactions(self) -> bool {
        matches!(self, MetaModel::LinearInteract | MetaModel::QuadraticInteract)
    }

    /// Number of coefficients including the intercept.
    pub fn n_coefficients(self, d: usize) -> usize {
        let mut n = 1 + d;
        if self.has_squares() {
            n += d;
        }
        if self.has_interactions() {
            n += d * (d - 1) / 2;
        }
        n
    }
}

/// Result of one least-squares fit. Coefficients are ordered intercept,
/// linear terms, squares (if any), then pairwise products `x_i x_j` for
/// `i < j` (if any).
#[derive(Clone, Debug)]
pub struct ModelFit {
    pub coefficients: Vec<f64>,
    pub r2: f64,
    pub adj_r2: f64,
}

fn design(data: &Dataset, model: MetaModel) -> DMatrix<f64> {
    let d = data.dim();
    let cols = model.n_coefficients(d);
    DMatrix::from_fn(data.len(), cols, |r, c| {
        let x = data.x(r);
        if c == 0 {
            return 1.0;
        }
        let mut c = c - 1;
        if c < d {
            return x[c];
        }
        c -= d;
        if model.has_squares() {
            if c < d {
                return x[c] * x[c];
            }
            c -= d;
        }
        let (i, j) = pair_index(d, c);
        x[i] * x[j]
    })
}

/// The `k`-th pair `(i, j)`, `i < j`, in row-major order.
fn pair_index(d: usize, mut k: usize) -> (usize, usize) {
    for i in 0..d {
        let row = d - 1 - i;
        if k < row {
            return (i, i + 1 + k);
        }
        k -= row;
    }
    unreachable!("pair index out of range")
}

/// Minimum-norm least-squares fit of `model`.
pub fn fit_model(data: &Dataset, model: MetaModel) -> Result<ModelFit> {
    let m = data.len();
    let cols = model.n_coefficients(data.dim());
    if m <= cols {
        return Err(Error::InsufficientSamples(format!(
            "model with {cols} coefficients needs more than {cols} samples, got {m}"
        )));
    }
    let x = design(data, model);
    let y = DVector::from_vec(data.fitness());
    let svd = x.clone().svd(true, true);
    let max_sv = svd.singular_values.max();
    let tol = max_sv * m.max(cols) as f64 * f64::EPSILON;
    let beta = svd
        .solve(&y, tol)
        .map_err(|e| Error::DegenerateData(format!("least squares failed: {e}")))?;
    let residual = &y - &x * &beta;
    let ss_res = residual.norm_squared();
    let mean = y.mean();
    let ss_tot: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    if ss_tot <= 0.0 {
        return Err(Error::DegenerateData("fitness has zero variance".into()));
    }
    let r2 = 1.0 - ss_res / ss_tot;
    let p = (cols - 1) as f64;
    let adj_r2 = 1.0 - (1.0 - r2) * (m as f64 - 1.0) / (m as f64 - p - 1.0);
    Ok(ModelFit {
        coefficients: beta.iter().copied().collect(),
        r2,
        adj_r2,
    })
}

fn abs_ratio(values: &[f64]) -> (f64, f64, FeatureValue) {
    let max = values.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let min = values.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min);
    let ratio = if min == 0.0 {
        FeatureValue::degenerate()
    } else {
        FeatureValue::finite(max / min)
    };
    (max, min, ratio)
}

/// Features f24..f32.
pub fn ela_meta(dataset: &Dataset) -> Result<FeatureVector> {
    let data = dataset.canonical();
    let d = data.dim();
    let mut out = FeatureVector::default();
    let undefined = |e: &Error| match e {
        Error::InsufficientSamples(_) => FeatureValue::Undefined(super::UndefinedReason::InsufficientSamples),
        _ => FeatureValue::degenerate(),
    };

    match fit_model(&data, MetaModel::Linear) {
        Ok(fit) => {
            let slopes = &fit.coefficients[1..=d];
            let (max, min, ratio) = abs_ratio(slopes);
            out.set_value(24, fit.adj_r2);
            out.set_value(25, max);
            out.set(26, ratio);
            out.set_value(27, min);
            out.set_value(28, fit.coefficients[0]);
        }
        Err(e) => {
            for code in 24..=28 {
                out.set(code, undefined(&e));
            }
        }
    }
    let adj = |model| fit_model(&data, model).map(|f| f.adj_r2);
    out.set(29, adj(MetaModel::LinearInteract).map_or_else(|e| undefined(&e), FeatureValue::finite));
    match fit_model(&data, MetaModel::Quadratic) {
        Ok(fit) => {
            out.set_value(30, fit.adj_r2);
            out.set(31, abs_ratio(&fit.coefficients[1 + d..1 + 2 * d]).2);
        }
        Err(e) => {
            out.set(30, undefined(&e));
            out.set(31, undefined(&e));
        }
    }
    out.set(32, adj(MetaModel::QuadraticInteract).map_or_else(|e| undefined(&e), FeatureValue::finite));
    Ok(out)
}
