//! Experiment orchestration: replicate runs, checkpointed feature extraction,
//! persisted records, and the aggregation and comparison of trajectories.
//!
//! Seeds: the problem projection comes from `root.derive("problem")`, the
//! shared tessellation from `root.derive("cvt")` and run `r` from
//! `root.derive("run{r}")`. Within a run the sampler uses `"lhs"` or `"qd"`
//! and the features at checkpoint `e` use `"ela/{e}"`.

pub mod config;
pub mod records;

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

pub use config::{default_checkpoints, ExperimentConfig, OperatorParams, Sampler};
pub use records::{read_dataset, read_records, write_dataset, write_records, RunRecord};

use crate::ela::{extract_all, FeatureCode};
use crate::problems::Problem;
use crate::qd::{compute_centroids, run_map_elites_with, Centroids};
use crate::sampling::lhs_sample;
use crate::stats::{mann_whitney_u, median_iqr, Quartiles, TestResult};
use crate::{Dataset, Error, Result, SplitRng};

pub const RECORDS_FILE: &str = "records.csv";
pub const RESOLVED_CONFIG_FILE: &str = "config.resolved.toml";
const STAGING_DIR: &str = "staging";

/// Latin-hypercube dataset of `m` evaluated points.
pub fn lhs_dataset(problem: &Problem, m: usize, rng: &mut SplitRng) -> Result<Dataset> {
    let samples = lhs_sample(m, problem.bounds(), rng)?
        .into_iter()
        .map(|g| problem.evaluate(g))
        .collect();
    Dataset::new(samples)
}

fn staging_path(out_dir: &Path, run_id: u32) -> PathBuf {
    out_dir.join(STAGING_DIR).join(format!("run-{run_id:05}.csv"))
}

fn run_one(cfg: &ExperimentConfig, problem: &Problem, centroids: Option<&Centroids>, run_id: u32, stage: &Path) -> Result<()> {
    let rng = cfg.root_rng().derive(&format!("run{run_id}"));
    let mut file = File::create(stage)?;
    let mut emit = |data: &Dataset, eval_count: u64| -> Result<()> {
        let features = extract_all(
            data,
            Some(problem),
            &cfg.ela,
            &cfg.features,
            &rng.derive(&format!("ela/{eval_count}")),
        )?;
        records::append_records(&mut file, &records::records_from(run_id, eval_count, &features))
    };
    match (cfg.sampler, centroids) {
        (Sampler::Lhs, _) => {
            let data = lhs_dataset(problem, cfg.archive_size, &mut rng.derive("lhs"))?;
            emit(&data, cfg.archive_size as u64)
        }
        (_, Some(centroids)) => {
            run_map_elites_with(
                problem,
                centroids.clone(),
                cfg.operator_config(),
                &cfg.schedule(),
                &mut rng.derive("qd"),
                |archive| emit(&archive.to_dataset()?, archive.eval_count()),
            )?;
            Ok(())
        }
        (_, None) => unreachable!("QD samplers always get a tessellation"),
    }
}

/// Runs every replicate of `cfg` and writes `records.csv` and the resolved
/// config into `out_dir`. Each run appends to its own staging file after every
/// checkpoint; the staging files are merged, sorted by
/// `(run_id, eval_count, code)`, once all runs finish. `threads = None` uses
/// the machine's parallelism.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: &Path, threads: Option<usize>) -> Result<Vec<RunRecord>> {
    cfg.validate()?;
    let problem = cfg.problem()?;
    fs::create_dir_all(out_dir.join(STAGING_DIR))?;
    fs::write(out_dir.join(RESOLVED_CONFIG_FILE), cfg.to_toml()?)?;
    let centroids = match cfg.sampler {
        Sampler::Lhs => None,
        _ => Some(compute_centroids(cfg.archive_size, &mut cfg.root_rng().derive("cvt"))?),
    };

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        if n == 0 {
            return Err(Error::InvalidArgument("thread count must be at least 1".into()));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start worker threads: {e}")))?;
    pool.install(|| {
        (0..cfg.runs).into_par_iter().try_for_each(|r| {
            run_one(cfg, &problem, centroids.as_ref(), r, &staging_path(out_dir, r))
        })
    })?;

    let mut all = Vec::new();
    for r in 0..cfg.runs {
        let path = staging_path(out_dir, r);
        all.extend(records::read_staged(BufReader::new(File::open(&path)?))?);
    }
    all.sort_by_key(RunRecord::key);
    let tmp = out_dir.join(format!("{RECORDS_FILE}.tmp"));
    {
        let mut w = BufWriter::new(File::create(&tmp)?);
        write_records(&mut w, &all)?;
        w.flush()?;
    }
    fs::rename(&tmp, out_dir.join(RECORDS_FILE))?;
    fs::remove_dir_all(out_dir.join(STAGING_DIR))?;
    Ok(all)
}

/// Quartiles across runs at one checkpoint; `None` when no run has a value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AggregateRow {
    pub eval_count: u64,
    pub quartiles: Option<Quartiles>,
}

pub fn aggregate(records: &[RunRecord], code: FeatureCode) -> Result<Vec<AggregateRow>> {
    let mut mine: Vec<&RunRecord> = records.iter().filter(|r| r.code == code).collect();
    if mine.is_empty() {
        return Err(Error::InvalidArgument(format!("no records for {code}")));
    }
    mine.sort_by_key(|r| r.key());
    let mut evals: Vec<u64> = mine.iter().map(|r| r.eval_count).collect();
    evals.sort_unstable();
    evals.dedup();
    Ok(evals
        .into_iter()
        .map(|eval_count| {
            let values: Vec<Option<f64>> = mine
                .iter()
                .filter(|r| r.eval_count == eval_count)
                .map(|r| r.value.value())
                .collect();
            AggregateRow {
                eval_count,
                quartiles: median_iqr(&values),
            }
        })
        .collect())
}

pub const AGGREGATE_HEADER: &str = "eval_count,median,q1,q3";

/// `eval_count,median,q1,q3`; the three statistics are empty for an
/// all-undefined checkpoint.
pub fn aggregate_line(row: &AggregateRow) -> String {
    match row.quartiles {
        Some(q) => format!(
            "{},{},{},{}",
            row.eval_count,
            records::format_f64(q.median),
            records::format_f64(q.q1),
            records::format_f64(q.q3)
        ),
        None => format!("{},,,", row.eval_count),
    }
}

pub fn aggregate_csv(rows: &[AggregateRow]) -> String {
    let mut out = format!("{AGGREGATE_HEADER}\n");
    for row in rows {
        out.push_str(&aggregate_line(row));
        out.push('\n');
    }
    out
}

/// Defined per-run values of `code` at `eval_count`, in run order.
pub fn values_at(records: &[RunRecord], code: FeatureCode, eval_count: u64) -> Result<Vec<f64>> {
    let mut hits: Vec<&RunRecord> = records
        .iter()
        .filter(|r| r.code == code && r.eval_count == eval_count)
        .collect();
    if hits.is_empty() {
        return Err(Error::InvalidArgument(format!("no records for {code} at eval_count {eval_count}")));
    }
    hits.sort_by_key(|r| r.run_id);
    let values: Vec<f64> = hits.iter().filter_map(|r| r.value.value()).collect();
    if values.is_empty() {
        return Err(Error::InvalidArgument(format!("{code} is undefined in every run at eval_count {eval_count}")));
    }
    Ok(values)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Comparison {
    pub code: FeatureCode,
    pub test: TestResult,
    pub median_a: f64,
    pub median_b: f64,
}

/// Mann-Whitney test of `code` between `a` at `at_a` and `b` at `at_b`.
pub fn compare_at(a: &[RunRecord], at_a: u64, b: &[RunRecord], at_b: u64, code: FeatureCode) -> Result<Comparison> {
    let va = values_at(a, code, at_a)?;
    let vb = values_at(b, code, at_b)?;
    let median = |v: &[f64]| {
        let opts: Vec<Option<f64>> = v.iter().copied().map(Some).collect();
        median_iqr(&opts).expect("values are nonempty").median
    };
    Ok(Comparison {
        code,
        test: mann_whitney_u(&va, &vb)?,
        median_a: median(&va),
        median_b: median(&vb),
    })
}

/// Both sides at the same checkpoint.
pub fn compare(a: &[RunRecord], b: &[RunRecord], code: FeatureCode, eval_count: u64) -> Result<Comparison> {
    compare_at(a, eval_count, b, eval_count, code)
}
