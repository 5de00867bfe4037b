//! The CVT-MAP-Elites generational loop.

use rand::Rng;

use crate::problems::Problem;
use crate::qd::archive::Archive;
use crate::qd::cvt::{compute_centroids, Centroids};
use crate::qd::variation::{gaussian_variation, isolinedd_variation, OperatorConfig};
use crate::sampling::uniform_point;
use crate::{Error, Genotype, Result, SplitRng};

/// Evaluation schedule of a run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunSchedule {
    pub budget: u64,
    pub batch: u64,
    pub checkpoints: Vec<u64>,
}

impl RunSchedule {
    pub fn validate(&self) -> Result<()> {
        if self.batch == 0 {
            return Err(Error::InvalidArgument("batch must be at least 1".into()));
        }
        if self.budget < self.batch || !self.budget.is_multiple_of(self.batch) {
            return Err(Error::InvalidArgument(format!(
                "budget {} must be a positive multiple of batch {}",
                self.budget, self.batch
            )));
        }
        for w in self.checkpoints.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::InvalidArgument("checkpoints must be strictly increasing".into()));
            }
        }
        if let Some(bad) = self
            .checkpoints
            .iter()
            .find(|&&c| c < self.batch || c > self.budget || c % self.batch != 0)
        {
            return Err(Error::InvalidArgument(format!(
                "checkpoint {bad} is not a multiple of {} within [{}, {}]",
                self.batch, self.batch, self.budget
            )));
        }
        Ok(())
    }
}

/// Runs CVT-MAP-Elites over a given tessellation, handing the archive to
/// `on_checkpoint` after the insertions of every checkpoint generation.
///
/// Generation 0 evaluates `batch` uniform genotypes. Later generations pick
/// parents uniformly among occupied cells (IsoLineDD takes two distinct
/// parents when at least two elites exist) and insert children serially in
/// generation order.
pub fn run_map_elites_with<F>(
    problem: &Problem,
    centroids: Centroids,
    operator: OperatorConfig,
    schedule: &RunSchedule,
    rng: &mut SplitRng,
    mut on_checkpoint: F,
) -> Result<Archive>
where
    F: FnMut(&Archive) -> Result<()>,
{
    schedule.validate()?;
    operator.validate()?;
    let bounds = problem.bounds();
    let batch = schedule.batch as usize;
    let mut archive = Archive::new(centroids);
    let mut next_checkpoint = schedule.checkpoints.iter().peekable();
    let mut children: Vec<Genotype> = Vec::with_capacity(batch);

    while archive.eval_count() < schedule.budget {
        children.clear();
        if archive.eval_count() == 0 {
            children.extend((0..batch).map(|_| uniform_point(bounds, rng)));
        } else {
            let occupied = archive.occupied();
            for _ in 0..batch {
                let i = rng.random_range(0..occupied.len());
                let p1 = &archive.elite(occupied[i]).expect("occupied").genotype;
                let child = match operator {
                    OperatorConfig::Gaussian { sigma } => gaussian_variation(p1, sigma, bounds, rng),
                    OperatorConfig::IsoLineDd { sigma1, sigma2 } => {
                        let p2 = if occupied.len() >= 2 {
                            let mut j = rng.random_range(0..occupied.len() - 1);
                            if j >= i {
                                j += 1;
                            }
                            &archive.elite(occupied[j]).expect("occupied").genotype
                        } else {
                            p1
                        };
                        isolinedd_variation(p1, p2, sigma1, sigma2, bounds, rng)
                    }
                };
                children.push(child);
            }
        }
        for child in children.drain(..) {
            archive.insert(problem.evaluate(child))?;
        }
        archive.add_evals(schedule.batch);
        if next_checkpoint.peek() == Some(&&archive.eval_count()) {
            next_checkpoint.next();
            on_checkpoint(&archive)?;
        }
    }
    Ok(archive)
}

/// Builds a fresh tessellation of `k` cells from `rng` and returns the archive
/// snapshot at every checkpoint.
pub fn run_map_elites(
    problem: &Problem,
    k: usize,
    operator: OperatorConfig,
    schedule: &RunSchedule,
    rng: &mut SplitRng,
) -> Result<Vec<(u64, Archive)>> {
    let centroids = compute_centroids(k, &mut rng.derive("cvt"))?;
    let mut snapshots = Vec::with_capacity(schedule.checkpoints.len());
    run_map_elites_with(problem, centroids, operator, schedule, rng, |a| {
        snapshots.push((a.eval_count(), a.clone()));
        Ok(())
    })?;
    Ok(snapshots)
}
