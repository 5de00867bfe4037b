//! Quality-diversity optimisation paired with exploratory landscape analysis.
//!
//! The crate runs CVT-MAP-Elites and Latin-hypercube baselines on a small set
//! of benchmark problems, extracts landscape features (codes `f1`..`f37`) from
//! the elite archive at evaluation checkpoints and compares the resulting
//! feature trajectories with rank statistics.
//!
//! Fitness is always maximised. Minimisation benchmarks are negated where the
//! problem is constructed.

pub mod ela;
pub mod error;
pub mod harness;
pub mod model;
pub mod problems;
pub mod qd;
pub mod rng;
pub mod sampling;
pub mod stats;

pub use error::{Error, Result};
pub use model::{Behaviour, Dataset, Genotype, Sample};
pub use rng::SplitRng;
pub use sampling::Bounds;
