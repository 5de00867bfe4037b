//! Benchmark objectives, behaviour functions and bound problem instances.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::{Behaviour, Bounds, Error, Genotype, Result, Sample, SplitRng};

/// Total reach of the planar arm; the behaviour envelope is `[-ARM_REACH, ARM_REACH]^2`.
pub const ARM_REACH: f64 = 12.0;
/// Search range of the sphere and Rastrigin genotypes.
pub const BENCH_RANGE: (f64, f64) = (-5.0, 5.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Sphere,
    Rastrigin,
    Arm,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BehaviourKind {
    Subset,
    Sigmoid,
    Sine,
    Arm,
}

impl Domain {
    pub fn as_str(self) -> &'static str {
        match self {
            Domain::Sphere => "sphere",
            Domain::Rastrigin => "rastrigin",
            Domain::Arm => "arm",
        }
    }

    /// Behaviour used when none is given explicitly.
    pub fn default_behaviour(self) -> BehaviourKind {
        match self {
            Domain::Arm => BehaviourKind::Arm,
            _ => BehaviourKind::Subset,
        }
    }
}

impl BehaviourKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BehaviourKind::Subset => "subset",
            BehaviourKind::Sigmoid => "sigmoid",
            BehaviourKind::Sine => "sine",
            BehaviourKind::Arm => "arm",
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for BehaviourKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Domain {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sphere" => Ok(Domain::Sphere),
            "rastrigin" => Ok(Domain::Rastrigin),
            "arm" => Ok(Domain::Arm),
            other => Err(Error::InvalidProblem(format!("unknown domain `{other}`"))),
        }
    }
}

impl FromStr for BehaviourKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "subset" => Ok(BehaviourKind::Subset),
            "sigmoid" => Ok(BehaviourKind::Sigmoid),
            "sine" => Ok(BehaviourKind::Sine),
            "arm" => Ok(BehaviourKind::Arm),
            other => Err(Error::InvalidProblem(format!("unknown behaviour `{other}`"))),
        }
    }
}

/// Random `d x 2` projection used by the sigmoid and sine behaviours.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectionMatrix {
    rows: Vec<[f64; 2]>,
}

impl ProjectionMatrix {
    pub fn new(rows: Vec<[f64; 2]>) -> Result<Self> {
        if rows.is_empty() || rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidProblem(
                "projection matrix needs finite entries and at least one row".into(),
            ));
        }
        Ok(Self { rows })
    }

    /// Entries drawn i.i.d. from the standard normal.
    pub fn standard_normal(d: usize, rng: &mut SplitRng) -> Self {
        let rows = (0..d)
            .map(|_| [StandardNormal.sample(rng), StandardNormal.sample(rng)])
            .collect();
        Self { rows }
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    /// `x^T W`.
    pub fn project(&self, x: &[f64]) -> [f64; 2] {
        debug_assert_eq!(x.len(), self.rows.len());
        x.iter().zip(&self.rows).fold([0.0, 0.0], |acc, (xi, row)| {
            [acc[0] + xi * row[0], acc[1] + xi * row[1]]
        })
    }
}

/// Negated sphere: `-sum x_i^2`.
pub fn sphere_objective(x: &[f64]) -> f64 {
    -x.iter().map(|v| v * v).sum::<f64>()
}

/// Negated Rastrigin: `-(10 d + sum (x_i^2 - 10 cos 2 pi x_i))`.
pub fn rastrigin_objective(x: &[f64]) -> f64 {
    let d = x.len() as f64;
    -(10.0 * d
        + x.iter()
            .map(|v| v * v - 10.0 * (2.0 * PI * v).cos())
            .sum::<f64>())
}

/// End effector of a planar chain with cumulative joint angles.
pub fn arm_forward_kinematics(angles: &[f64], link_lengths: &[f64]) -> (f64, f64) {
    debug_assert_eq!(angles.len(), link_lengths.len());
    let mut heading = 0.0;
    let (mut ex, mut ey) = (0.0, 0.0);
    for (theta, len) in angles.iter().zip(link_lengths) {
        heading += theta;
        ex += len * heading.cos();
        ey += len * heading.sin();
    }
    (ex, ey)
}

/// Negative population variance of the joint angles.
pub fn arm_objective(angles: &[f64]) -> f64 {
    let n = angles.len() as f64;
    let mean = angles.iter().sum::<f64>() / n;
    -angles.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n
}

pub fn behaviour_subset(x: &[f64], bounds: &Bounds) -> Result<Behaviour> {
    if x.len() < 2 {
        return Err(Error::InvalidProblem(
            "subset behaviour needs at least two dimensions".into(),
        ));
    }
    let norm = |i: usize| (x[i] - bounds.lower()[i]) / bounds.width(i);
    Ok(Behaviour::clamped(norm(0), norm(1)))
}

pub fn behaviour_sigmoid(x: &[f64], w: &ProjectionMatrix) -> Behaviour {
    let [a, b] = w.project(x);
    let sig = |v: f64| 1.0 / (1.0 + (-v).exp());
    Behaviour::clamped(sig(a), sig(b))
}

pub fn behaviour_sine(x: &[f64], w: &ProjectionMatrix) -> Behaviour {
    let [a, b] = w.project(x);
    Behaviour::clamped((a.sin() + 1.0) / 2.0, (b.sin() + 1.0) / 2.0)
}

/// End effector of an arm with `d` equal links of total length [`ARM_REACH`],
/// mapped from `[-12, 12]^2` onto the unit square.
pub fn behaviour_arm(angles: &[f64]) -> Behaviour {
    let links = arm_links(angles.len());
    let (ex, ey) = arm_forward_kinematics(angles, &links);
    let map = |v: f64| (v + ARM_REACH) / (2.0 * ARM_REACH);
    Behaviour::clamped(map(ex), map(ey))
}

pub fn arm_links(d: usize) -> Vec<f64> {
    vec![ARM_REACH / d as f64; d]
}

#[derive(Clone, Debug)]
enum BehaviourFn {
    Subset,
    Sigmoid(ProjectionMatrix),
    Sine(ProjectionMatrix),
    Arm,
}

/// One benchmark instance. Immutable once built.
#[derive(Clone, Debug)]
pub struct Problem {
    domain: Domain,
    behaviour_kind: BehaviourKind,
    bounds: Bounds,
    behaviour: BehaviourFn,
}

impl Problem {
    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn behaviour_kind(&self) -> BehaviourKind {
        self.behaviour_kind
    }

    pub fn dim(&self) -> usize {
        self.bounds.dim()
    }

    pub fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    pub fn projection(&self) -> Option<&ProjectionMatrix> {
        match &self.behaviour {
            BehaviourFn::Sigmoid(w) | BehaviourFn::Sine(w) => Some(w),
            _ => None,
        }
    }

    /// Maximised fitness.
    pub fn fitness(&self, x: &[f64]) -> f64 {
        match self.domain {
            Domain::Sphere => sphere_objective(x),
            Domain::Rastrigin => rastrigin_objective(x),
            Domain::Arm => arm_objective(x),
        }
    }

    pub fn behaviour(&self, x: &[f64]) -> Behaviour {
        match &self.behaviour {
            // Dimension was checked at construction.
            BehaviourFn::Subset => behaviour_subset(x, &self.bounds).expect("d >= 2"),
            BehaviourFn::Sigmoid(w) => behaviour_sigmoid(x, w),
            BehaviourFn::Sine(w) => behaviour_sine(x, w),
            BehaviourFn::Arm => behaviour_arm(x),
        }
    }

    pub fn evaluate(&self, genotype: Genotype) -> Sample {
        let fitness = self.fitness(&genotype);
        let behaviour = self.behaviour(&genotype);
        Sample {
            genotype,
            fitness,
            behaviour: Some(behaviour),
        }
    }
}

/// Binds a domain, a behaviour and a dimension into a [`Problem`].
///
/// Sigmoid and sine behaviours draw their projection once from `config_rng`,
/// so every replicate built from the same configuration stream shares it.
pub fn make_problem(
    domain: Domain,
    behaviour: BehaviourKind,
    d: usize,
    config_rng: &SplitRng,
) -> Result<Problem> {
    if d == 0 {
        return Err(Error::InvalidProblem("dimension must be at least 1".into()));
    }
    let behaviour_fn = match (domain, behaviour) {
        (Domain::Arm, BehaviourKind::Arm) => BehaviourFn::Arm,
        (Domain::Arm, other) => {
            return Err(Error::InvalidProblem(format!(
                "arm domain only supports the arm behaviour, not `{other}`"
            )))
        }
        (_, BehaviourKind::Arm) => {
            return Err(Error::InvalidProblem(format!(
                "arm behaviour is not defined for `{domain}`"
            )))
        }
        (_, BehaviourKind::Subset) => {
            if d < 2 {
                return Err(Error::InvalidProblem(
                    "subset behaviour needs at least two dimensions".into(),
                ));
            }
            BehaviourFn::Subset
        }
        (_, BehaviourKind::Sigmoid) => BehaviourFn::Sigmoid(ProjectionMatrix::standard_normal(
            d,
            &mut config_rng.derive("projection"),
        )),
        (_, BehaviourKind::Sine) => BehaviourFn::Sine(ProjectionMatrix::standard_normal(
            d,
            &mut config_rng.derive("projection"),
        )),
    };
    let bounds = match domain {
        Domain::Arm => Bounds::cube(d, -PI, PI)?,
        _ => Bounds::cube(d, BENCH_RANGE.0, BENCH_RANGE.1)?,
    };
    Ok(Problem {
        domain,
        behaviour_kind: behaviour,
        bounds,
        behaviour: behaviour_fn,
    })
}
