//! Abstraction-based runtime monitors for classification networks.
//!
//! Features observed at a network layer are clustered with k-means and each
//! cluster is abstracted by its tight bounding box. A monitor per output
//! class keeps boxes for correctly classified inputs and for inputs that were
//! wrongly classified into that class, and answers accept, reject or
//! uncertainty for new inputs.
//!
//! The clustering granularity is controlled by an inertia-improvement
//! threshold τ. To judge how much empty space a clustering removes, boxes
//! are measured on a resolution grid laid over the global box
//! ([`coverage`]), which gives cheap lower and upper bounds on the fraction
//! of grid cells the local boxes cover.
//!
//! See `examples/` for one runnable program per capability.

pub mod clustering;
pub mod commands;
pub mod coverage;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod geometry;
pub mod monitor;
pub mod synthetic;

pub use clustering::{
    kmeans_by_tau, kmeans_fixed_k, mean_coverage_at_tau, search_tau_max, search_tau_min, ClusteringConfig, KCache,
    Partition, TauSearch, TuneConfig,
};
pub use coverage::{
    clustering_coverage, exact_coverage_oracle, CoverageEstimate, CoveredSpace, ResolutionGrid,
};
pub use error::{Error, Result};
pub use evaluation::{classify_outcome, evaluate, metrics, sweep, Metrics, Nature, Outcome, OutcomeCounts, SweepConfig, SweepRow};
pub use features::FeatureFile;
pub use geometry::{Hyperbox, Interval, Vector};
pub use monitor::{
    build_class_monitor, deserialize_monitor, run_monitor, serialize_monitor, ClassMonitor, FeatureRecord, MonitorSet,
    Verdict, UNKNOWN_LABEL,
};
