//! Level-set features: how well linear and quadratic discriminant analysis
//! separate samples below a fitness quantile from those above it, measured by
//! stratified cross-validation.

use nalgebra::{DMatrix, DVector};

use super::{ElaBudget, FeatureValue, FeatureVector, UndefinedReason};
use crate::stats::quantile_sorted;
use crate::{Dataset, Error, Result};

pub const LEVEL_QUANTILES: [f64; 3] = [0.10, 0.25, 0.50];
/// Ridge added to every covariance: `RIDGE_SCALE * trace / d`.
pub const RIDGE_SCALE: f64 = 1e-8;

/// Features f8..f16. Quantiles whose classes are too small for the fold count
/// are reported as insufficient samples.
pub fn ela_level(dataset: &Dataset, budget: &ElaBudget) -> Result<FeatureVector> {
    let folds = budget.level_folds;
    if folds < 2 {
        return Err(Error::InvalidBudget("level_folds must be at least 2".into()));
    }
    let data = dataset.canonical();
    let m = data.len();
    if m < 10 * folds {
        return Err(Error::InsufficientSamples(format!(
            "level features need {} samples, got {m}",
            10 * folds
        )));
    }
    let x: Vec<DVector<f64>> = (0..m).map(|i| DVector::from_column_slice(data.x(i))).collect();
    let y = data.fitness();
    let mut sorted = y.clone();
    sorted.sort_by(f64::total_cmp);

    let mut out = FeatureVector::default();
    for (qi, &q) in LEVEL_QUANTILES.iter().enumerate() {
        let threshold = quantile_sorted(&sorted, q);
        let labels: Vec<usize> = y.iter().map(|v| usize::from(*v > threshold)).collect();
        let (ratio_code, lda_code, qda_code) = (8 + qi as u8, 11 + qi as u8, 14 + qi as u8);
        match cross_validate(&x, &labels, folds) {
            Ok((lda, qda)) => {
                out.set_value(lda_code, lda);
                out.set_value(qda_code, qda);
                let ratio = if lda == 0.0 && qda == 0.0 {
                    FeatureValue::Value(1.0)
                } else {
                    FeatureValue::finite(lda / qda)
                };
                out.set(ratio_code, ratio);
            }
            Err(e) => {
                let reason = match e {
                    Error::InsufficientSamples(_) => UndefinedReason::InsufficientSamples,
                    _ => UndefinedReason::DegenerateData,
                };
                for code in [ratio_code, lda_code, qda_code] {
                    out.set(code, FeatureValue::Undefined(reason));
                }
            }
        }
    }
    Ok(out)
}

/// Mean per-fold misclassification error of LDA and QDA.
///
/// Folds are stratified: members of each class are dealt round-robin to the
/// folds in dataset order.
pub fn cross_validate(x: &[DVector<f64>], labels: &[usize], folds: usize) -> Result<(f64, f64)> {
    let mut fold_of = vec![0usize; labels.len()];
    for class in 0..2 {
        let members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if members.len() < folds {
            return Err(Error::InsufficientSamples(format!(
                "class {class} has {} members for {folds} folds",
                members.len()
            )));
        }
        for (k, &i) in members.iter().enumerate() {
            fold_of[i] = k % folds;
        }
    }
    let (mut lda_err, mut qda_err) = (0.0, 0.0);
    for fold in 0..folds {
        let train: Vec<usize> = (0..labels.len()).filter(|&i| fold_of[i] != fold).collect();
        let test: Vec<usize> = (0..labels.len()).filter(|&i| fold_of[i] == fold).collect();
        let model = Discriminant::fit(x, labels, &train)?;
        let (mut wrong_lda, mut wrong_qda) = (0usize, 0usize);
        for &i in &test {
            let (l, q) = model.predict(&x[i]);
            wrong_lda += usize::from(l != labels[i]);
            wrong_qda += usize::from(q != labels[i]);
        }
        lda_err += wrong_lda as f64 / test.len() as f64;
        qda_err += wrong_qda as f64 / test.len() as f64;
    }
    Ok((lda_err / folds as f64, qda_err / folds as f64))
}

struct Gaussian {
    mean: DVector<f64>,
    /// Lower Cholesky factor of the regularised covariance.
    chol: DMatrix<f64>,
    log_det: f64,
}

impl Gaussian {
    fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let d = cov.nrows();
        let ridge = RIDGE_SCALE * cov.trace() / d as f64;
        if ridge.is_nan() || ridge <= 0.0 {
            return Err(Error::DegenerateData("covariance has zero trace".into()));
        }
        let regular = cov + DMatrix::identity(d, d) * ridge;
        let chol = regular
            .cholesky()
            .ok_or_else(|| Error::DegenerateData("covariance is not positive definite".into()))?
            .unpack();
        let log_det = 2.0 * chol.diagonal().iter().map(|v| v.ln()).sum::<f64>();
        Ok(Self { mean, chol, log_det })
    }

    /// Squared Mahalanobis distance of `x`.
    fn mahalanobis(&self, x: &DVector<f64>) -> f64 {
        let diff = x - &self.mean;
        let z = self
            .chol
            .solve_lower_triangular(&diff)
            .expect("cholesky factor has a positive diagonal");
        z.norm_squared()
    }
}

struct Discriminant {
    log_prior: [f64; 2],
    /// Shared-covariance model; its mean is unused.
    pooled: Gaussian,
    per_class: [Gaussian; 2],
}

impl Discriminant {
    fn fit(x: &[DVector<f64>], labels: &[usize], train: &[usize]) -> Result<Self> {
        let d = x[0].len();
        let mut means = [DVector::zeros(d), DVector::zeros(d)];
        let mut counts = [0usize; 2];
        for &i in train {
            means[labels[i]] += &x[i];
            counts[labels[i]] += 1;
        }
        for c in 0..2 {
            means[c] /= counts[c] as f64;
        }
        let mut scatter = [DMatrix::zeros(d, d), DMatrix::zeros(d, d)];
        for &i in train {
            let diff = &x[i] - &means[labels[i]];
            scatter[labels[i]].ger(1.0, &diff, &diff, 1.0);
        }
        let n = train.len() as f64;
        let pooled_cov = (&scatter[0] + &scatter[1]) / (n - 2.0).max(1.0);
        let class_cov = |c: usize| &scatter[c] / (counts[c] as f64 - 1.0).max(1.0);
        let [s0, s1] = [class_cov(0), class_cov(1)];
        let [m0, m1] = means;
        Ok(Self {
            log_prior: [(counts[0] as f64 / n).ln(), (counts[1] as f64 / n).ln()],
            pooled: Gaussian::new(DVector::zeros(d), pooled_cov)?,
            per_class: [Gaussian::new(m0, s0)?, Gaussian::new(m1, s1)?],
        })
    }

    /// Predicted class under (LDA, QDA); ties go to class 0.
    fn predict(&self, x: &DVector<f64>) -> (usize, usize) {
        let lda_score = |c: usize| {
            let diff = x - &self.per_class[c].mean;
            let z = self
                .pooled
                .chol
                .solve_lower_triangular(&diff)
                .expect("cholesky factor has a positive diagonal");
            -0.5 * z.norm_squared() + self.log_prior[c]
        };
        let qda_score = |c: usize| {
            let g = &self.per_class[c];
            -0.5 * g.log_det - 0.5 * g.mahalanobis(x) + self.log_prior[c]
        };
        let pick = |s0: f64, s1: f64| usize::from(s1 > s0);
        (pick(lda_score(0), lda_score(1)), pick(qda_score(0), qda_score(1)))
    }
}
