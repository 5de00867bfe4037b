//! Experiment configuration: a TOML document whose keys are exactly the
//! fields of [`ExperimentConfig`]. Omitted optional keys take defaults and
//! [`ExperimentConfig::to_toml`] writes them all out.

use std::fmt;
use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ela::{ElaBudget, FeatureGroup};
use crate::problems::{make_problem, BehaviourKind, Domain, Problem};
use crate::qd::{OperatorConfig, RunSchedule, DEFAULT_GAUSSIAN_SIGMA, DEFAULT_ISO_SIGMA, DEFAULT_LINE_SIGMA};
use crate::{Error, Result, SplitRng};

pub const DIMS: [usize; 5] = [2, 4, 8, 16, 32];
pub const ARCHIVE_SIZES: [usize; 3] = [100, 1000, 10000];
pub const DEFAULT_BUDGET: u64 = 1_000_000;
pub const DEFAULT_BATCH: u64 = 100;
pub const DEFAULT_RUNS: u32 = 30;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sampler {
    Lhs,
    QdGaussian,
    QdIsolinedd,
}

impl Sampler {
    pub fn as_str(self) -> &'static str {
        match self {
            Sampler::Lhs => "lhs",
            Sampler::QdGaussian => "qd-gaussian",
            Sampler::QdIsolinedd => "qd-isolinedd",
        }
    }
}

impl fmt::Display for Sampler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Mutation scales as fractions of each coordinate's range. `sigma` drives the
/// Gaussian operator, `sigma1` and `sigma2` drive IsoLineDD.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OperatorParams {
    pub sigma: f64,
    pub sigma1: f64,
    pub sigma2: f64,
}

impl Default for OperatorParams {
    fn default() -> Self {
        Self {
            sigma: DEFAULT_GAUSSIAN_SIGMA,
            sigma1: DEFAULT_ISO_SIGMA,
            sigma2: DEFAULT_LINE_SIGMA,
        }
    }
}

/// As written by users; every optional key may be absent.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    domain: Domain,
    behaviour: Option<BehaviourKind>,
    dim: usize,
    archive_size: usize,
    sampler: Sampler,
    budget: Option<u64>,
    batch: Option<u64>,
    runs: Option<u32>,
    base_seed: Option<u64>,
    checkpoints: Option<Vec<u64>>,
    features: Option<Vec<FeatureGroup>>,
    #[serde(default)]
    operator: OperatorParams,
    #[serde(default)]
    ela: ElaBudget,
}

/// A fully resolved experiment. `ela.local_starts` is always `Some`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub domain: Domain,
    pub behaviour: BehaviourKind,
    pub dim: usize,
    pub archive_size: usize,
    pub sampler: Sampler,
    pub budget: u64,
    pub batch: u64,
    pub runs: u32,
    pub base_seed: u64,
    pub checkpoints: Vec<u64>,
    pub features: Vec<FeatureGroup>,
    pub operator: OperatorParams,
    pub ela: ElaBudget,
}

/// `batch`, then 1-2-5 steps up to `budget`, plus `archive_size` (when reachable)
/// and `budget`, each rounded up to a multiple of `batch`.
pub fn default_checkpoints(batch: u64, budget: u64, archive_size: u64) -> Vec<u64> {
    let round = |v: u64| v.div_ceil(batch) * batch;
    let mut out = vec![budget, batch.min(budget)];
    if archive_size <= budget {
        out.push(round(archive_size).min(budget));
    }
    let mut decade = 1u64;
    'ladder: loop {
        for step in [1, 2, 5] {
            let Some(v) = decade.checked_mul(step) else { break 'ladder };
            if v > budget {
                break 'ladder;
            }
            if v >= batch {
                out.push(round(v).min(budget));
            }
        }
        let Some(next) = decade.checked_mul(10) else { break };
        decade = next;
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// 1-based line of the first `key = ...` assignment in `text`.
fn key_line(text: &str, key: &str) -> Option<usize> {
    text.lines().position(|line| {
        line.trim_start()
            .strip_prefix(key)
            .is_some_and(|rest| rest.trim_start().starts_with('='))
    })
    .map(|i| i + 1)
}

fn offset_line(text: &str, span: Option<Range<usize>>) -> Option<usize> {
    span.map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
}

impl ExperimentConfig {
    /// Parses and validates a config document. Errors carry the line of the
    /// offending key where it can be found.
    pub fn from_toml(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config {
            line: offset_line(text, e.span()),
            message: e.message().to_string(),
        })?;
        let at = |key: &str, message: String| Error::Config {
            line: key_line(text, key),
            message,
        };

        let batch = raw.batch.unwrap_or(DEFAULT_BATCH);
        let budget = raw.budget.unwrap_or(DEFAULT_BUDGET);
        let mut features = raw.features.unwrap_or_else(|| FeatureGroup::ALL.to_vec());
        features.sort();
        features.dedup();
        let mut ela = raw.ela;
        ela.local_starts = Some(ela.local_starts_for(raw.dim));
        let cfg = ExperimentConfig {
            domain: raw.domain,
            behaviour: raw.behaviour.unwrap_or(raw.domain.default_behaviour()),
            dim: raw.dim,
            archive_size: raw.archive_size,
            sampler: raw.sampler,
            budget,
            batch,
            runs: raw.runs.unwrap_or(DEFAULT_RUNS),
            base_seed: raw.base_seed.unwrap_or(0),
            checkpoints: match raw.checkpoints {
                Some(c) => c,
                None if batch > 0 => default_checkpoints(batch, budget, raw.archive_size as u64),
                None => Vec::new(),
            },
            features,
            operator: raw.operator,
            ela,
        };
        cfg.check().map_err(|(key, message)| at(key, message))?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    /// The resolved document; parsing it back yields an equal config.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config {
            line: None,
            message: format!("cannot serialise config: {e}"),
        })
    }

    /// Validates field ranges and cross-field constraints.
    pub fn validate(&self) -> Result<()> {
        self.check().map_err(|(key, message)| Error::Config {
            line: None,
            message: format!("{key}: {message}"),
        })
    }

    fn check(&self) -> std::result::Result<(), (&'static str, String)> {
        if !DIMS.contains(&self.dim) {
            return Err(("dim", format!("dim must be one of {DIMS:?}, got {}", self.dim)));
        }
        if !ARCHIVE_SIZES.contains(&self.archive_size) {
            return Err((
                "archive_size",
                format!("archive_size must be one of {ARCHIVE_SIZES:?}, got {}", self.archive_size),
            ));
        }
        if self.runs == 0 {
            return Err(("runs", "runs must be at least 1".into()));
        }
        if self.features.is_empty() {
            return Err(("features", "select at least one feature group".into()));
        }
        if self.base_seed > i64::MAX as u64 {
            return Err(("base_seed", "base_seed must fit in a signed 64-bit integer".into()));
        }
        self.problem().map_err(|e| ("behaviour", e.to_string()))?;
        if self.sampler != Sampler::Lhs {
            let schedule = self.schedule();
            if schedule.batch == 0 {
                return Err(("batch", "batch must be at least 1".into()));
            }
            if let Err(e) = schedule.validate() {
                let key = if self.budget < self.batch || !self.budget.is_multiple_of(self.batch) {
                    "budget"
                } else {
                    "checkpoints"
                };
                return Err((key, e.to_string()));
            }
            if self.checkpoints.is_empty() {
                return Err(("checkpoints", "at least one checkpoint is required".into()));
            }
            self.operator_config().validate().map_err(|e| ("operator", e.to_string()))?;
        }
        self.ela.validate().map_err(|e| ("ela", e.to_string()))
    }

    /// Root stream of the experiment; runs, the tessellation and the problem
    /// projection are all derived from it.
    pub fn root_rng(&self) -> SplitRng {
        SplitRng::new(self.base_seed)
    }

    pub fn problem(&self) -> Result<Problem> {
        make_problem(self.domain, self.behaviour, self.dim, &self.root_rng().derive("problem"))
    }

    pub fn schedule(&self) -> RunSchedule {
        RunSchedule {
            budget: self.budget,
            batch: self.batch,
            checkpoints: self.checkpoints.clone(),
        }
    }

    /// Variation operator of a QD sampler. The LHS sampler has none and gets
    /// the Gaussian default.
    pub fn operator_config(&self) -> OperatorConfig {
        match self.sampler {
            Sampler::QdIsolinedd => OperatorConfig::IsoLineDd {
                sigma1: self.operator.sigma1,
                sigma2: self.operator.sigma2,
            },
            Sampler::QdGaussian | Sampler::Lhs => OperatorConfig::Gaussian {
                sigma: self.operator.sigma,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "domain = \"sphere\"\ndim = 8\narchive_size = 1000\nsampler = \"qd-isolinedd\"\n";

    #[test]
    fn minimal_config_takes_defaults() {
        let cfg = ExperimentConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(cfg.behaviour, BehaviourKind::Subset);
        assert_eq!((cfg.budget, cfg.batch, cfg.runs, cfg.base_seed), (1_000_000, 100, 30, 0));
        assert_eq!(cfg.features, FeatureGroup::ALL.to_vec());
        assert_eq!(cfg.ela.local_starts, Some(400));
        assert_eq!(cfg.operator, OperatorParams::default());
        assert_eq!(
            cfg.checkpoints,
            vec![100, 200, 500, 1000, 2000, 5000, 10_000, 20_000, 50_000, 100_000, 200_000, 500_000, 1_000_000]
        );
    }

    #[test]
    fn resolved_config_round_trips() {
        let cfg = ExperimentConfig::from_toml(MINIMAL).unwrap();
        let text = cfg.to_toml().unwrap();
        assert!(text.contains("budget = 1000000"));
        assert!(text.contains("local_starts = 400"));
        assert_eq!(ExperimentConfig::from_toml(&text).unwrap(), cfg);
    }

    #[test]
    fn ladder_includes_archive_size_and_budget() {
        assert_eq!(default_checkpoints(100, 3000, 1000), vec![100, 200, 500, 1000, 2000, 3000]);
        assert_eq!(default_checkpoints(300, 3000, 100), vec![300, 600, 1200, 2100, 3000]);
        assert_eq!(default_checkpoints(100, 50_000, 100_000), vec![100, 200, 500, 1000, 2000, 5000, 10_000, 20_000, 50_000]);
    }

    fn err_line(text: &str) -> Option<usize> {
        match ExperimentConfig::from_toml(text) {
            Err(Error::Config { line, .. }) => line,
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_key_is_rejected_with_line() {
        assert_eq!(err_line(&format!("{MINIMAL}colour = \"red\"\n")), Some(5));
        assert_eq!(err_line(&format!("{MINIMAL}[ela]\nlevel_folds = 5\nfolds = 3\n")), Some(7));
    }

    #[test]
    fn semantic_errors_point_at_their_key() {
        let text = MINIMAL.replace("dim = 8", "dim = 3");
        assert_eq!(err_line(&text), Some(2));
        let text = format!("{MINIMAL}budget = 1000\ncheckpoints = [100, 1500]\n");
        assert_eq!(err_line(&text), Some(6));
        let text = MINIMAL.replace("\"sphere\"", "\"arm\"") + "behaviour = \"subset\"\n";
        assert_eq!(err_line(&text), Some(5));
        assert_eq!(err_line("domain = \"sphere\"\ndim = [\n"), Some(2));
    }

    #[test]
    fn lhs_ignores_schedule() {
        let text = MINIMAL.replace("qd-isolinedd", "lhs") + "budget = 50\n";
        assert_eq!(ExperimentConfig::from_toml(&text).unwrap().sampler, Sampler::Lhs);
    }
}
