//! Exploratory landscape features computed from a [`Dataset`].
//!
//! Thirty-seven features in six groups, addressed by the codes `f1`..`f37`:
//!
//! | group   | codes     | extra objective evaluations |
//! |---------|-----------|-----------------------------|
//! | `conv`  | f1..f4    | `conv_pairs`                |
//! | `distr` | f5..f7    | none                        |
//! | `level` | f8..f16   | none                        |
//! | `local` | f17..f23  | up to `local_starts * local_max_evals` |
//! | `meta`  | f24..f32  | none                        |
//! | `nbc`   | f33..f37  | none                        |
//!
//! Every group works on the canonical row order of the dataset, so results do
//! not depend on row order. Fitness is treated as maximised; "better" means
//! larger fitness.

pub mod conv;
pub mod distr;
pub mod level;
pub mod local;
pub mod meta;
pub mod nbc;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::problems::Problem;
use crate::{Dataset, Error, Result, SplitRng};

pub use conv::ela_conv;
pub use distr::ela_distr;
pub use level::ela_level;
pub use local::{ela_local, nelder_mead, NelderMeadResult};
pub use meta::ela_meta;
pub use nbc::nbc_features;

pub const NUM_FEATURES: u8 = 37;

/// Long names of the features, indexed by code number minus one.
pub const FEATURE_NAMES: [&str; NUM_FEATURES as usize] = [
    "ela_conv.conv_prob",
    "ela_conv.lin_dev_abs",
    "ela_conv.lin_dev_orig",
    "ela_conv.lin_prob",
    "ela_distr.kurtosis",
    "ela_distr.number_of_peaks",
    "ela_distr.skewness",
    "ela_level.lda_qda_10",
    "ela_level.lda_qda_25",
    "ela_level.lda_qda_50",
    "ela_level.mmce_lda_10",
    "ela_level.mmce_lda_25",
    "ela_level.mmce_lda_50",
    "ela_level.mmce_qda_10",
    "ela_level.mmce_qda_25",
    "ela_level.mmce_qda_50",
    "ela_local.basin_sizes.avg_best",
    "ela_local.basin_sizes.avg_non_best",
    "ela_local.basin_sizes.avg_worst",
    "ela_local.best2mean_contr.orig",
    "ela_local.best2mean_contr.ratio",
    "ela_local.n_loc_opt.abs",
    "ela_local.n_loc_opt.rel",
    "ela_meta.lin_simple.adj_r2",
    "ela_meta.lin_simple.coef.max",
    "ela_meta.lin_simple.coef.max_by_min",
    "ela_meta.lin_simple.coef.min",
    "ela_meta.lin_simple.intercept",
    "ela_meta.lin_w_interact.adj_r2",
    "ela_meta.quad_simple.adj_r2",
    "ela_meta.quad_simple.cond",
    "ela_meta.quad_w_interact.adj_r2",
    "nbc.dist_ratio.coeff_var",
    "nbc.nb_fitness.cor",
    "nbc.nn_nb.cor",
    "nbc.nn_nb.mean_ratio",
    "nbc.nn_nb.sd_ratio",
];

/// Feature code `f1`..`f37`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FeatureCode(u8);

impl FeatureCode {
    pub fn new(n: u8) -> Result<Self> {
        if (1..=NUM_FEATURES).contains(&n) {
            Ok(Self(n))
        } else {
            Err(Error::InvalidArgument(format!("feature number {n} outside 1..={NUM_FEATURES}")))
        }
    }

    #[cfg(test)]
    pub(crate) const fn of(n: u8) -> Self {
        Self(n)
    }

    pub fn number(self) -> u8 {
        self.0
    }

    pub fn name(self) -> &'static str {
        FEATURE_NAMES[self.0 as usize - 1]
    }

    pub fn all() -> impl Iterator<Item = FeatureCode> {
        (1..=NUM_FEATURES).map(FeatureCode)
    }

    pub fn group(self) -> FeatureGroup {
        FeatureGroup::ALL
            .into_iter()
            .find(|g| g.code_range().contains(&self.0))
            .expect("every code belongs to a group")
    }
}

impl fmt::Display for FeatureCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "f{}", self.0)
    }
}

impl FromStr for FeatureCode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let n = s
            .strip_prefix('f')
            .filter(|digits| !digits.starts_with('0'))
            .and_then(|digits| digits.parse::<u8>().ok())
            .ok_or_else(|| Error::InvalidArgument(format!("unknown feature code `{s}`")))?;
        FeatureCode::new(n).map_err(|_| Error::InvalidArgument(format!("unknown feature code `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureGroup {
    Conv,
    Distr,
    Level,
    Local,
    Meta,
    Nbc,
}

impl FeatureGroup {
    pub const ALL: [FeatureGroup; 6] = [
        FeatureGroup::Conv,
        FeatureGroup::Distr,
        FeatureGroup::Level,
        FeatureGroup::Local,
        FeatureGroup::Meta,
        FeatureGroup::Nbc,
    ];

    fn code_range(self) -> std::ops::RangeInclusive<u8> {
        match self {
            FeatureGroup::Conv => 1..=4,
            FeatureGroup::Distr => 5..=7,
            FeatureGroup::Level => 8..=16,
            FeatureGroup::Local => 17..=23,
            FeatureGroup::Meta => 24..=32,
            FeatureGroup::Nbc => 33..=37,
        }
    }

    pub fn codes(self) -> impl Iterator<Item = FeatureCode> {
        self.code_range().map(FeatureCode)
    }

    /// Whether the group spends extra objective evaluations.
    pub fn needs_objective(self) -> bool {
        matches!(self, FeatureGroup::Conv | FeatureGroup::Local)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureGroup::Conv => "conv",
            FeatureGroup::Distr => "distr",
            FeatureGroup::Level => "level",
            FeatureGroup::Local => "local",
            FeatureGroup::Meta => "meta",
            FeatureGroup::Nbc => "nbc",
        }
    }
}

impl fmt::Display for FeatureGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureGroup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FeatureGroup::ALL
            .into_iter()
            .find(|g| g.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown feature group `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UndefinedReason {
    InsufficientSamples,
    DegenerateData,
}

impl UndefinedReason {
    pub fn as_str(self) -> &'static str {
        match self {
            UndefinedReason::InsufficientSamples => "insufficient-samples",
            UndefinedReason::DegenerateData => "degenerate-data",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FeatureValue {
    Value(f64),
    Undefined(UndefinedReason),
}

impl FeatureValue {
    pub fn value(self) -> Option<f64> {
        match self {
            FeatureValue::Value(v) => Some(v),
            FeatureValue::Undefined(_) => None,
        }
    }

    pub fn status(self) -> &'static str {
        match self {
            FeatureValue::Value(_) => "ok",
            FeatureValue::Undefined(r) => r.as_str(),
        }
    }

    /// Finite values pass through; anything else is degenerate.
    pub(crate) fn finite(v: f64) -> Self {
        if v.is_finite() {
            FeatureValue::Value(v)
        } else {
            FeatureValue::Undefined(UndefinedReason::DegenerateData)
        }
    }

    pub(crate) fn degenerate() -> Self {
        FeatureValue::Undefined(UndefinedReason::DegenerateData)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct FeatureVector {
    pub values: BTreeMap<FeatureCode, FeatureValue>,
    /// Extra objective evaluations spent computing the features.
    pub evals_used: u64,
}

impl FeatureVector {
    pub fn get(&self, code: FeatureCode) -> Option<FeatureValue> {
        self.values.get(&code).copied()
    }

    /// Defined value of feature `n`, if any.
    pub fn value(&self, n: u8) -> Option<f64> {
        self.values.get(&FeatureCode(n)).and_then(|v| v.value())
    }

    pub(crate) fn set(&mut self, n: u8, v: FeatureValue) {
        self.values.insert(FeatureCode(n), v);
    }

    pub(crate) fn set_value(&mut self, n: u8, v: f64) {
        self.set(n, FeatureValue::finite(v));
    }

    fn merge(&mut self, other: FeatureVector) {
        self.values.extend(other.values);
        self.evals_used += other.evals_used;
    }

    fn undefined_group(group: FeatureGroup, reason: UndefinedReason) -> FeatureVector {
        FeatureVector {
            values: group.codes().map(|c| (c, FeatureValue::Undefined(reason))).collect(),
            evals_used: 0,
        }
    }
}

/// Extra-evaluation and cross-validation budget of the feature groups.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ElaBudget {
    pub conv_pairs: usize,
    /// `None` means `min(50 d, 400)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub local_starts: Option<usize>,
    pub local_max_evals: usize,
    pub level_folds: usize,
}

impl Default for ElaBudget {
    fn default() -> Self {
        Self {
            conv_pairs: 1000,
            local_starts: None,
            local_max_evals: 1000,
            level_folds: 10,
        }
    }
}

impl ElaBudget {
    pub fn local_starts_for(&self, dim: usize) -> usize {
        self.local_starts.unwrap_or_else(|| (50 * dim).min(400))
    }

    pub fn validate(&self) -> Result<()> {
        let check = |name: &str, v: usize, min: usize| {
            if v < min {
                Err(Error::InvalidBudget(format!("{name} must be at least {min}, got {v}")))
            } else {
                Ok(())
            }
        };
        check("conv_pairs", self.conv_pairs, 1)?;
        if let Some(s) = self.local_starts {
            check("local_starts", s, 2)?;
        }
        check("local_max_evals", self.local_max_evals, 1)?;
        check("level_folds", self.level_folds, 2)
    }
}

fn undefined_reason(err: &Error) -> UndefinedReason {
    match err {
        Error::InsufficientSamples(_) => UndefinedReason::InsufficientSamples,
        _ => UndefinedReason::DegenerateData,
    }
}

/// Computes the selected feature groups.
///
/// A group that fails contributes undefined markers for its codes; the other
/// groups are unaffected. `conv` and `local` evaluate `problem`'s fitness and
/// each draws from its own child of `rng`.
pub fn extract_all(
    dataset: &Dataset,
    problem: Option<&Problem>,
    budget: &ElaBudget,
    selector: &[FeatureGroup],
    rng: &SplitRng,
) -> Result<FeatureVector> {
    budget.validate()?;
    let mut groups = selector.to_vec();
    groups.sort();
    groups.dedup();
    let mut out = FeatureVector::default();
    for group in groups {
        let result = match group {
            FeatureGroup::Distr => ela_distr(dataset),
            FeatureGroup::Level => ela_level(dataset, budget),
            FeatureGroup::Meta => ela_meta(dataset),
            FeatureGroup::Nbc => nbc_features(dataset),
            FeatureGroup::Conv | FeatureGroup::Local => {
                let problem = problem.ok_or_else(|| {
                    Error::InvalidArgument(format!("feature group `{group}` needs an objective"))
                })?;
                if problem.dim() != dataset.dim() {
                    return Err(Error::InvalidArgument(format!(
                        "dataset dimension {} does not match problem dimension {}",
                        dataset.dim(),
                        problem.dim()
                    )));
                }
                let objective = |x: &[f64]| problem.fitness(x);
                let mut child = rng.derive(group.as_str());
                if group == FeatureGroup::Conv {
                    ela_conv(dataset, objective, budget, &mut child)
                } else {
                    ela_local(dataset, objective, problem.bounds(), budget, &mut child)
                }
            }
        };
        let part = match result {
            Ok(fv) => fv,
            Err(e @ (Error::InvalidArgument(_) | Error::InvalidBudget(_))) => return Err(e),
            Err(e) => FeatureVector::undefined_group(group, undefined_reason(&e)),
        };
        out.merge(part);
    }
    Ok(out)
}

/// Mean of a slice; callers guarantee it is nonempty.
pub(crate) fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sample standard deviation (denominator `n - 1`); zero for fewer than two values.
pub(crate) fn sample_sd(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

/// Pearson correlation; zero when either argument has zero variance.
pub(crate) fn pearson(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    if a.len() < 2 {
        return 0.0;
    }
    let (ma, mb) = (mean(a), mean(b));
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    if saa == 0.0 || sbb == 0.0 {
        return 0.0;
    }
    (sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0)
}
