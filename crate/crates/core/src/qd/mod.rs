//! CVT-MAP-Elites: tessellation, archive, variation and the generational loop.

pub mod archive;
pub mod cvt;
pub mod map_elites;
pub mod variation;

pub use archive::{archive_insert, archive_to_dataset, Archive};
pub use cvt::{compute_centroids, nearest_centroid, Centroids};
pub use map_elites::{run_map_elites, run_map_elites_with, RunSchedule};
pub use variation::{
    gaussian_variation, isolinedd_variation, OperatorConfig, DEFAULT_GAUSSIAN_SIGMA, DEFAULT_ISO_SIGMA,
    DEFAULT_LINE_SIGMA,
};
