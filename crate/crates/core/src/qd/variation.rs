//! Variation operators. Noise scales are fractions of each dimension's range;
//! children leaving the box are clipped componentwise.

use rand_distr::{Distribution, StandardNormal};

use crate::{Bounds, Error, Genotype, Result, SplitRng};

pub const DEFAULT_GAUSSIAN_SIGMA: f64 = 0.01;
pub const DEFAULT_ISO_SIGMA: f64 = 0.01;
pub const DEFAULT_LINE_SIGMA: f64 = 0.2;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OperatorConfig {
    /// Isotropic Gaussian mutation with per-dimension std `sigma * range`.
    Gaussian { sigma: f64 },
    /// Isotropic noise (`sigma1 * range`) plus noise along the parent line (`sigma2`).
    IsoLineDd { sigma1: f64, sigma2: f64 },
}

impl OperatorConfig {
    pub fn gaussian() -> Self {
        OperatorConfig::Gaussian {
            sigma: DEFAULT_GAUSSIAN_SIGMA,
        }
    }

    pub fn isolinedd() -> Self {
        OperatorConfig::IsoLineDd {
            sigma1: DEFAULT_ISO_SIGMA,
            sigma2: DEFAULT_LINE_SIGMA,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            OperatorConfig::Gaussian { sigma } => sigma.is_finite() && sigma >= 0.0,
            OperatorConfig::IsoLineDd { sigma1, sigma2 } => {
                sigma1.is_finite() && sigma2.is_finite() && sigma1 >= 0.0 && sigma2 >= 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("operator scales must be finite and >= 0: {self:?}")))
        }
    }

    pub fn parents_needed(&self) -> usize {
        match self {
            OperatorConfig::Gaussian { .. } => 1,
            OperatorConfig::IsoLineDd { .. } => 2,
        }
    }
}

pub fn gaussian_variation(
    parent: &Genotype,
    sigma: f64,
    bounds: &Bounds,
    rng: &mut SplitRng,
) -> Genotype {
    let mut child: Vec<f64> = parent.to_vec();
    if sigma > 0.0 {
        for (i, v) in child.iter_mut().enumerate() {
            let z: f64 = StandardNormal.sample(rng);
            *v += sigma * bounds.width(i) * z;
        }
    }
    bounds.clip(&mut child);
    Genotype::from_vec(child)
}

/// `clip(p1 + sigma1 * range * N(0, I) + sigma2 * N(0, 1) * (p2 - p1))`.
pub fn isolinedd_variation(
    p1: &Genotype,
    p2: &Genotype,
    sigma1: f64,
    sigma2: f64,
    bounds: &Bounds,
    rng: &mut SplitRng,
) -> Genotype {
    let line: f64 = StandardNormal.sample(rng);
    let mut child: Vec<f64> = p1
        .iter()
        .zip(p2.iter())
        .map(|(a, b)| a + sigma2 * line * (b - a))
        .collect();
    if sigma1 > 0.0 {
        for (i, v) in child.iter_mut().enumerate() {
            let z: f64 = StandardNormal.sample(rng);
            *v += sigma1 * bounds.width(i) * z;
        }
    }
    bounds.clip(&mut child);
    Genotype::from_vec(child)
}
