//! Nearest-better clustering features from nearest-neighbour and
//! nearest-better-neighbour distances.

use super::{mean, pearson, sample_sd, FeatureValue, FeatureVector};
use crate::{Dataset, Error, Result};

/// Per-sample distances in canonical order. `nb[i]` and `nb_index[i]` are
/// `None` for samples with no strictly better sample.
#[derive(Clone, Debug, PartialEq)]
pub struct NearestBetter {
    pub nn: Vec<f64>,
    pub nb: Vec<Option<f64>>,
    pub nb_index: Vec<Option<usize>>,
}

/// Distances on `data` as ordered; distance ties go to the lowest index.
pub fn nearest_better(data: &Dataset) -> NearestBetter {
    let m = data.len();
    let y = data.fitness();
    let mut nn = vec![f64::INFINITY; m];
    let mut nb_d2 = vec![f64::INFINITY; m];
    let mut nb_index = vec![None; m];
    for i in 0..m {
        let xi = data.x(i);
        for j in 0..m {
            if i == j {
                continue;
            }
            let d2: f64 = xi.iter().zip(data.x(j)).map(|(a, b)| (a - b) * (a - b)).sum();
            nn[i] = nn[i].min(d2);
            if y[j] > y[i] && d2 < nb_d2[i] {
                nb_d2[i] = d2;
                nb_index[i] = Some(j);
            }
        }
    }
    NearestBetter {
        nn: nn.into_iter().map(f64::sqrt).collect(),
        nb: nb_index.iter().zip(&nb_d2).map(|(j, d2)| j.map(|_| d2.sqrt())).collect(),
        nb_index,
    }
}

/// `a / b` with `0 / 0 = 1`; any other non-finite quotient is degenerate.
fn ratio(a: f64, b: f64) -> FeatureValue {
    if a == 0.0 && b == 0.0 {
        FeatureValue::Value(1.0)
    } else {
        FeatureValue::finite(a / b)
    }
}

/// Features f33..f37. Two samples suffice.
pub fn nbc_features(dataset: &Dataset) -> Result<FeatureVector> {
    let data = dataset.canonical();
    let m = data.len();
    if m < 2 {
        return Err(Error::InsufficientSamples(format!("nbc needs 2 samples, got {m}")));
    }
    let y = data.fitness();
    if y.iter().all(|v| *v == y[0]) {
        return Err(Error::DegenerateData("all fitness values are equal".into()));
    }
    let nbr = nearest_better(&data);
    let (nn_def, nb_def): (Vec<f64>, Vec<f64>) = nbr
        .nn
        .iter()
        .zip(&nbr.nb)
        .filter_map(|(a, b)| b.map(|b| (*a, b)))
        .unzip();

    let ratios: Vec<f64> = nn_def
        .iter()
        .zip(&nb_def)
        .filter(|(nn, _)| **nn > 0.0)
        .map(|(nn, nb)| nb / nn)
        .collect();
    let coeff_var = if ratios.len() < 2 {
        FeatureValue::Value(0.0)
    } else {
        ratio(sample_sd(&ratios), mean(&ratios))
    };

    let mut indegree = vec![0.0; m];
    for j in nbr.nb_index.iter().flatten() {
        indegree[*j] += 1.0;
    }
    let sd = |v: &[f64]| if v.len() < 2 { 0.0 } else { sample_sd(v) };

    let mut out = FeatureVector::default();
    out.set(33, coeff_var);
    out.set_value(34, pearson(&y, &indegree));
    out.set_value(35, pearson(&nn_def, &nb_def));
    out.set(36, ratio(mean(&nbr.nn), mean(&nb_def)));
    out.set(37, ratio(sd(&nbr.nn), sd(&nb_def)));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::SplitRng;
    use proptest::prelude::*;
    use rand::Rng;

    fn line(points: &[f64], fitness: &[f64]) -> Dataset {
        Dataset::from_rows(points.iter().map(|p| vec![*p]).collect(), fitness.to_vec()).unwrap()
    }

    #[test]
    fn hand_computed_line() {
        let fv = nbc_features(&line(&[0.0, 1.0, 2.0, 3.0], &[0.0, 1.0, 2.0, 3.0])).unwrap();
        assert_eq!(fv.value(36), Some(1.0));
        assert_eq!(fv.value(33), Some(0.0));
        assert_eq!(fv.value(35), Some(0.0));
        assert!((fv.value(34).unwrap() - 0.6f64.sqrt()).abs() < 1e-12);
        assert_eq!(fv.value(37), Some(1.0));
    }

    #[test]
    fn two_points() {
        let data = line(&[0.0, 2.5], &[1.0, 0.0]);
        let nbr = nearest_better(&data.canonical());
        assert_eq!(nbr.nb, vec![None, Some(2.5)]);
        assert_eq!(nbr.nn, vec![2.5, 2.5]);
        assert_eq!(nbc_features(&data).unwrap().value(36), Some(1.0));
    }

    #[test]
    fn constant_fitness_is_degenerate() {
        assert!(matches!(
            nbc_features(&line(&[0.0, 1.0, 2.0], &[4.0; 3])),
            Err(Error::DegenerateData(_))
        ));
    }

    #[test]
    fn apex_attracts_indegree() {
        let mut rng = SplitRng::new(9);
        let apex = [0.3, -0.2, 0.1];
        let xs: Vec<Vec<f64>> = (0..200)
            .map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let y: Vec<f64> = xs
            .iter()
            .map(|x| -x.iter().zip(apex).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
            .collect();
        let fv = nbc_features(&Dataset::from_rows(xs, y).unwrap()).unwrap();
        assert!(fv.value(34).unwrap() > 0.0);
    }

    fn brute_force_nb(xs: &[Vec<f64>], y: &[f64]) -> Vec<Option<f64>> {
        (0..xs.len())
            .map(|i| {
                let mut best: Option<f64> = None;
                for j in 0..xs.len() {
                    if y[j] > y[i] {
                        let d = xs[i].iter().zip(&xs[j]).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                        best = Some(best.map_or(d, |b| b.min(d)));
                    }
                }
                best
            })
            .collect()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(50))]

        #[test]
        fn nb_matches_brute_force(seed in any::<u64>(), m in 2usize..200, d in 1usize..5) {
            let mut rng = SplitRng::new(seed);
            let xs: Vec<Vec<f64>> = (0..m).map(|_| (0..d).map(|_| rng.random::<f64>()).collect()).collect();
            // coarse fitness so ties occur
            let y: Vec<f64> = (0..m).map(|_| rng.random_range(0..10) as f64).collect();
            let data = Dataset::from_rows(xs, y).unwrap();
            let canon = data.canonical();
            let cx: Vec<Vec<f64>> = (0..canon.len()).map(|i| canon.x(i).to_vec()).collect();
            prop_assert_eq!(nearest_better(&canon).nb, brute_force_nb(&cx, &canon.fitness()));
        }

        #[test]
        fn features_in_range(seed in any::<u64>(), m in 3usize..80) {
            let mut rng = SplitRng::new(seed);
            let xs: Vec<Vec<f64>> = (0..m).map(|_| vec![rng.random::<f64>(), rng.random::<f64>()]).collect();
            let y: Vec<f64> = (0..m).map(|_| rng.random::<f64>()).collect();
            let fv = nbc_features(&Dataset::from_rows(xs, y).unwrap()).unwrap();
            for code in [34, 35] {
                let v = fv.value(code).unwrap();
                prop_assert!((-1.0..=1.0).contains(&v));
            }
            for code in [33, 36, 37] {
                if let Some(v) = fv.value(code) {
                    prop_assert!(v >= 0.0);
                }
            }
        }
    }
}
