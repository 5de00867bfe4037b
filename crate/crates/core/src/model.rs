//! Shared value types: genotypes, behaviours, samples and datasets.

use std::cmp::Ordering;
use std::ops::Deref;

use crate::{Error, Result};

/// Decision vector in problem units.
#[derive(Clone, Debug, PartialEq)]
pub struct Genotype(Vec<f64>);

impl Genotype {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument("genotype must have at least one component".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("genotype components must be finite".into()));
        }
        Ok(Self(values))
    }

    pub(crate) fn from_vec(values: Vec<f64>) -> Self {
        debug_assert!(!values.is_empty());
        Self(values)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for Genotype {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Two-dimensional behaviour descriptor in the unit square.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Behaviour([f64; 2]);

impl Behaviour {
    pub fn new(b0: f64, b1: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&b0) || !(0.0..=1.0).contains(&b1) {
            return Err(Error::InvalidArgument(format!(
                "behaviour ({b0}, {b1}) outside [0,1]^2"
            )));
        }
        Ok(Self([b0, b1]))
    }

    /// Clamps into the unit square; used where rounding can push a value a ulp outside.
    pub(crate) fn clamped(b0: f64, b1: f64) -> Self {
        Self([b0.clamp(0.0, 1.0), b1.clamp(0.0, 1.0)])
    }

    pub fn values(&self) -> [f64; 2] {
        self.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub genotype: Genotype,
    pub fitness: f64,
    pub behaviour: Option<Behaviour>,
}

impl Sample {
    pub fn new(genotype: Genotype, fitness: f64, behaviour: Option<Behaviour>) -> Result<Self> {
        if !fitness.is_finite() {
            return Err(Error::InvalidArgument(format!("fitness {fitness} is not finite")));
        }
        Ok(Self {
            genotype,
            fitness,
            behaviour,
        })
    }
}

/// Nonempty collection of samples sharing one genotype dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    samples: Vec<Sample>,
    dim: usize,
}

impl Dataset {
    pub fn new(samples: Vec<Sample>) -> Result<Self> {
        let first = samples
            .first()
            .ok_or_else(|| Error::InvalidArgument("dataset needs at least one sample".into()))?;
        let dim = first.genotype.dim();
        if let Some(bad) = samples.iter().position(|s| s.genotype.dim() != dim) {
            return Err(Error::InvalidArgument(format!(
                "sample {bad} has dimension {} (expected {dim})",
                samples[bad].genotype.dim()
            )));
        }
        Ok(Self { samples, dim })
    }

    /// Builds a dataset from raw rows without behaviours.
    pub fn from_rows(xs: Vec<Vec<f64>>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::InvalidArgument("row and fitness counts differ".into()));
        }
        let samples = xs
            .into_iter()
            .zip(ys)
            .map(|(x, y)| Sample::new(Genotype::new(x)?, y, None))
            .collect::<Result<Vec<_>>>()?;
        Self::new(samples)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn x(&self, i: usize) -> &[f64] {
        &self.samples[i].genotype
    }

    pub fn fitness(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.fitness).collect()
    }

    /// Copy with rows in a canonical order (lexicographic on genotype, then
    /// fitness). Feature code operates on this order so results do not depend
    /// on how the rows were supplied.
    pub fn canonical(&self) -> Dataset {
        let mut samples = self.samples.clone();
        samples.sort_by(canonical_cmp);
        Dataset {
            samples,
            dim: self.dim,
        }
    }
}

fn canonical_cmp(a: &Sample, b: &Sample) -> Ordering {
    a.genotype
        .iter()
        .zip(b.genotype.iter())
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
        .then_with(|| a.fitness.total_cmp(&b.fitness))
}
