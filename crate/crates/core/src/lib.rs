//! Mean-shift clustering with truncated polynomial kernels.
//!
//! Three update schemes share one state representation and objective:
//! the classic mean-shift ([`Algorithm::Ms`]), its blurring variant
//! ([`Algorithm::Bms`]) and the stochastic, one-point-at-a-time variant
//! ([`Algorithm::Sms`]).

pub mod affinity;
pub mod algorithms;
pub mod clustering;
pub mod error;
pub mod experiment;
pub mod io;
pub mod kernels;
pub mod metrics;
pub mod rng;
pub mod state;
pub mod synthdata;
pub mod theory;

pub use affinity::{knn_sms_run, spherical_normalize, PreprocessConfig, ScoreMatrix};
pub use algorithms::{
    bms_run, bms_sweep, ms_run, run, sms_run, sms_step, AlgoConfig, Algorithm, RunTrace, Snapshot, StepRecord,
    StochasticMeanShift, StopReason, TraceOptions,
};
pub use clustering::{extract_clusters, ClusterSummary, MergePolicy, Partition};
pub use error::{Error, Result};
pub use kernels::Profile;
pub use metrics::{ContingencyTable, MetricsReport};
pub use rng::{RandomIndexStream, SeededRng};
pub use state::{Bandwidth, State};
pub use synthdata::{generate, preset, GmmSpec, LabeledDataset, Preset};
pub use theory::{CheckResult, CheckStatus, SuiteConfig, TheoryReport};
