//! Local-search features: Nelder-Mead restarts from dataset points, with the
//! resulting optima grouped into basins by single linkage.

use rand::seq::index;
use rand::Rng;

use super::{mean, ElaBudget, FeatureValue, FeatureVector};
use crate::sampling::Bounds;
use crate::{Dataset, Error, Result, SplitRng};

pub const NM_REFLECT: f64 = 1.0;
pub const NM_EXPAND: f64 = 2.0;
pub const NM_CONTRACT: f64 = 0.5;
pub const NM_SHRINK: f64 = 0.5;
/// Initial simplex edge as a fraction of each coordinate's range.
pub const NM_INITIAL_STEP: f64 = 0.05;
pub const NM_DIAMETER_TOL: f64 = 1e-8;
pub const NM_SPREAD_TOL: f64 = 1e-10;
/// Single-linkage merge distance as a fraction of the bounds diagonal.
pub const CLUSTER_SCALE: f64 = 0.01;
/// Clusters within this of the best (worst) cost are best (worst).
pub const CLUSTER_VALUE_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: u64,
}

/// Budget-capped objective; returns `None` once `max` calls have been made.
struct Counted<F> {
    f: F,
    used: u64,
    max: u64,
}

impl<F: FnMut(&[f64]) -> f64> Counted<F> {
    fn call(&mut self, x: &[f64]) -> Option<f64> {
        if self.used >= self.max {
            return None;
        }
        self.used += 1;
        Some((self.f)(x))
    }
}

fn affine(c: &[f64], toward: &[f64], t: f64, bounds: &Bounds) -> Vec<f64> {
    let mut x: Vec<f64> = c.iter().zip(toward).map(|(c, p)| c + t * (p - c)).collect();
    bounds.clip(&mut x);
    x
}

/// Minimises `f` from `x0` inside `bounds`, never calling it more than
/// `max_evals` times. Every vertex stays inside the bounds.
pub fn nelder_mead<F>(f: F, x0: &[f64], bounds: &Bounds, max_evals: u64) -> Result<NelderMeadResult>
where
    F: FnMut(&[f64]) -> f64,
{
    let d = x0.len();
    if d != bounds.dim() {
        return Err(Error::InvalidArgument(format!(
            "start has dimension {d}, bounds have {}",
            bounds.dim()
        )));
    }
    if max_evals == 0 {
        return Err(Error::InvalidBudget("local_max_evals must be at least 1".into()));
    }
    let mut f = Counted { f, used: 0, max: max_evals };
    let mut start = x0.to_vec();
    bounds.clip(&mut start);
    let f0 = f.call(&start).expect("budget is at least one evaluation");
    let mut simplex = vec![(start.clone(), f0)];
    for i in 0..d {
        let step = NM_INITIAL_STEP * bounds.width(i);
        let mut v = start.clone();
        v[i] += step;
        if v[i] > bounds.upper()[i] {
            v[i] = start[i] - step;
        }
        bounds.clip(&mut v);
        match f.call(&v) {
            Some(fv) => simplex.push((v, fv)),
            None => break,
        }
    }

    // a partial simplex means the budget ran out during setup
    while simplex.len() == d + 1 {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].clone();
        let spread = simplex[d].1 - best.1;
        let diameter = simplex[1..]
            .iter()
            .map(|(v, _)| v.iter().zip(&best.0).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        if diameter < NM_DIAMETER_TOL || spread < NM_SPREAD_TOL {
            break;
        }
        let mut centroid = vec![0.0; d];
        for (v, _) in &simplex[..d] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / d as f64;
            }
        }
        let (worst, f_worst) = simplex[d].clone();
        let f_second = simplex[d - 1].1;

        let xr = affine(&centroid, &worst, -NM_REFLECT, bounds);
        let Some(fr) = f.call(&xr) else { break };
        if fr < best.1 {
            let xe = affine(&centroid, &xr, NM_EXPAND, bounds);
            let Some(fe) = f.call(&xe) else {
                simplex[d] = (xr, fr);
                break;
            };
            simplex[d] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < f_second {
            simplex[d] = (xr, fr);
            continue;
        }
        let (xc, target) = if fr < f_worst {
            (affine(&centroid, &xr, NM_CONTRACT, bounds), fr)
        } else {
            (affine(&centroid, &worst, NM_CONTRACT, bounds), f_worst)
        };
        let Some(fc) = f.call(&xc) else { break };
        if fc < target || (fr < f_worst && fc <= target) {
            simplex[d] = (xc, fc);
            continue;
        }
        let mut exhausted = false;
        for vertex in simplex.iter_mut().skip(1) {
            let x = affine(&best.0, &vertex.0, NM_SHRINK, bounds);
            match f.call(&x) {
                Some(fx) => *vertex = (x, fx),
                None => {
                    exhausted = true;
                    break;
                }
            }
        }
        if exhausted {
            break;
        }
    }
    let (x, value) = simplex
        .into_iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("simplex holds the start");
    Ok(NelderMeadResult { x, value, evals: f.used })
}

/// Single-linkage labels: points closer than `threshold` share a label.
/// Labels are dense and ordered by first appearance.
fn single_linkage(points: &[Vec<f64>], threshold: f64) -> Vec<usize> {
    let n = points.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    let t2 = threshold * threshold;
    for i in 0..n {
        for j in i + 1..n {
            let d2: f64 = points[i].iter().zip(&points[j]).map(|(a, b)| (a - b).powi(2)).sum();
            if d2 <= t2 {
                let (a, b) = (root(&mut parent, i), root(&mut parent, j));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut label_of_root = vec![usize::MAX; n];
    let mut next = 0;
    (0..n)
        .map(|i| {
            let r = root(&mut parent, i);
            if label_of_root[r] == usize::MAX {
                label_of_root[r] = next;
                next += 1;
            }
            label_of_root[r]
        })
        .collect()
}

/// Features f17..f23. Costs are negated fitness, so every contrast is
/// non-negative.
pub fn ela_local<F>(
    dataset: &Dataset,
    objective: F,
    bounds: &Bounds,
    budget: &ElaBudget,
    rng: &mut SplitRng,
) -> Result<FeatureVector>
where
    F: Fn(&[f64]) -> f64,
{
    let d = dataset.dim();
    if bounds.dim() != d {
        return Err(Error::InvalidArgument(format!(
            "dataset dimension {d} does not match bounds dimension {}",
            bounds.dim()
        )));
    }
    let starts = budget.local_starts_for(d);
    if starts < 2 {
        return Err(Error::InvalidBudget("local_starts must be at least 2".into()));
    }
    let data = dataset.canonical();
    let m = data.len();
    let picks: Vec<usize> = if starts <= m {
        index::sample(rng, m, starts).into_vec()
    } else {
        (0..starts).map(|_| rng.random_range(0..m)).collect()
    };

    let mut optima = Vec::with_capacity(starts);
    let mut costs = Vec::with_capacity(starts);
    let mut evals_used = 0;
    for &i in &picks {
        let run = nelder_mead(|x| -objective(x), data.x(i), bounds, budget.local_max_evals as u64)?;
        evals_used += run.evals;
        optima.push(run.x);
        costs.push(run.value);
    }

    let labels = single_linkage(&optima, CLUSTER_SCALE * bounds.diagonal());
    let k = labels.iter().max().map_or(0, |l| l + 1);
    let mut size = vec![0usize; k];
    let mut value = vec![f64::INFINITY; k];
    for (&l, &c) in labels.iter().zip(&costs) {
        size[l] += 1;
        value[l] = value[l].min(c);
    }
    let basin: Vec<f64> = size.iter().map(|s| *s as f64 / starts as f64).collect();
    let best = value.iter().copied().fold(f64::INFINITY, f64::min);
    let worst = value.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let is_best: Vec<bool> = value.iter().map(|v| *v <= best + CLUSTER_VALUE_TOL).collect();
    let mean_basin = |keep: &dyn Fn(usize) -> bool| {
        let picked: Vec<f64> = (0..k).filter(|&c| keep(c)).map(|c| basin[c]).collect();
        if picked.is_empty() {
            FeatureValue::degenerate()
        } else {
            FeatureValue::finite(mean(&picked))
        }
    };

    let mut out = FeatureVector {
        evals_used,
        ..Default::default()
    };
    out.set(17, mean_basin(&|c| is_best[c]));
    out.set(18, mean_basin(&|c| !is_best[c]));
    out.set(19, mean_basin(&|c| value[c] >= worst - CLUSTER_VALUE_TOL));
    let contrast = (mean(&value) - best).max(0.0);
    out.set(20, FeatureValue::finite(contrast));
    out.set(
        21,
        // all clusters tie within tolerance
        if worst - best <= CLUSTER_VALUE_TOL {
            FeatureValue::Value(0.0)
        } else {
            FeatureValue::finite(contrast / (worst - best))
        },
    );
    out.set_value(22, k as f64);
    out.set_value(23, k as f64 / starts as f64);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::sphere_objective;
    use crate::sampling::uniform_sample;

    fn cloud(f: impl Fn(&[f64]) -> f64, m: usize, bounds: &Bounds, seed: u64) -> Dataset {
        let xs: Vec<Vec<f64>> = uniform_sample(m, bounds, &mut SplitRng::new(seed))
            .unwrap()
            .into_iter()
            .map(|g| g.into_inner())
            .collect();
        let y = xs.iter().map(|x| f(x)).collect();
        Dataset::from_rows(xs, y).unwrap()
    }

    #[test]
    fn nelder_mead_finds_shifted_quadratic() {
        let b = Bounds::cube(3, -5.0, 5.0).unwrap();
        let target = [1.0, -2.0, 0.5];
        let f = |x: &[f64]| x.iter().zip(target).map(|(a, t)| (a - t).powi(2)).sum::<f64>();
        let r = nelder_mead(f, &[4.0, 4.0, -4.0], &b, 5000).unwrap();
        for (a, t) in r.x.iter().zip(target) {
            assert!((a - t).abs() < 1e-3, "{:?}", r.x);
        }
        assert!(r.evals <= 5000);
    }

    #[test]
    fn nelder_mead_respects_bounds_and_budget() {
        let b = Bounds::cube(2, 0.0, 1.0).unwrap();
        let mut calls = 0;
        let r = nelder_mead(
            |x| {
                calls += 1;
                assert!(x.iter().all(|v| (0.0..=1.0).contains(v)));
                -x[0] - x[1]
            },
            &[0.5, 0.5],
            &b,
            17,
        )
        .unwrap();
        assert_eq!(calls, 17);
        assert_eq!(r.evals, 17);
        let r = nelder_mead(|x| -x[0] - x[1], &[0.5, 0.5], &b, 2000).unwrap();
        assert!((r.x[0] - 1.0).abs() < 1e-6 && (r.x[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn single_linkage_chains() {
        let pts = vec![vec![0.0], vec![0.9], vec![1.8], vec![5.0], vec![5.5]];
        assert_eq!(single_linkage(&pts, 1.0), vec![0, 0, 0, 1, 1]);
    }

    #[test]
    fn sphere_has_one_basin() {
        let b = Bounds::cube(2, -5.0, 5.0).unwrap();
        let data = cloud(sphere_objective, 100, &b, 1);
        let budget = ElaBudget { local_starts: Some(50), ..Default::default() };
        let fv = ela_local(&data, sphere_objective, &b, &budget, &mut SplitRng::new(2)).unwrap();
        assert_eq!(fv.value(22), Some(1.0));
        assert_eq!(fv.value(17), Some(1.0));
        assert_eq!(fv.value(19), Some(1.0));
        assert_eq!(fv.value(18), None);
        assert_eq!(fv.value(20), Some(0.0));
        assert_eq!(fv.value(21), Some(0.0));
        assert_eq!(fv.value(23), Some(1.0 / 50.0));
        assert!(fv.evals_used <= 50 * 1000);
    }

    #[test]
    fn double_well_has_two_even_basins() {
        // minima of the cost at (+-2, 0), equal depth
        let f = |x: &[f64]| -((x[0] * x[0] - 4.0).powi(2) + x[1] * x[1]);
        let b = Bounds::cube(2, -5.0, 5.0).unwrap();
        let data = cloud(f, 300, &b, 3);
        let budget = ElaBudget { local_starts: Some(200), ..Default::default() };
        let fv = ela_local(&data, f, &b, &budget, &mut SplitRng::new(4)).unwrap();
        assert_eq!(fv.value(22), Some(2.0));
        // both clusters tie for best, so each basin is both best and worst
        let best = fv.value(17).unwrap();
        assert!((best - 0.5).abs() < 1e-12);
        assert_eq!(fv.value(18), None);
        assert_eq!(fv.value(21), Some(0.0));
    }

    #[test]
    fn unequal_wells_split_best_and_worst() {
        // deeper well on the right
        let f = |x: &[f64]| -((x[0] * x[0] - 4.0).powi(2) - x[0]);
        let b = Bounds::cube(1, -5.0, 5.0).unwrap();
        let data = cloud(f, 200, &b, 5);
        let budget = ElaBudget { local_starts: Some(100), ..Default::default() };
        let fv = ela_local(&data, f, &b, &budget, &mut SplitRng::new(6)).unwrap();
        assert_eq!(fv.value(22), Some(2.0));
        let (b17, b18, b19) = (fv.value(17).unwrap(), fv.value(18).unwrap(), fv.value(19).unwrap());
        assert!((b17 + b19 - 1.0).abs() < 1e-12);
        assert_eq!(b18, b19);
        assert!((fv.value(21).unwrap() - 0.5).abs() < 1e-12);
        assert!(fv.value(20).unwrap() > 0.0);
    }

    #[test]
    fn more_starts_than_samples_reuses_points() {
        let b = Bounds::cube(2, -5.0, 5.0).unwrap();
        let data = cloud(sphere_objective, 5, &b, 7);
        let budget = ElaBudget { local_starts: Some(20), local_max_evals: 30, ..Default::default() };
        let fv = ela_local(&data, sphere_objective, &b, &budget, &mut SplitRng::new(8)).unwrap();
        assert!(fv.evals_used <= 20 * 30);
        let f23 = fv.value(23).unwrap();
        assert!(f23 > 0.0 && f23 <= 1.0);
    }
}
