//! Fixtures shared by the criterion benches.

use sms_core::{generate, preset, AlgoConfig, Algorithm, Bandwidth, Preset, Profile, State};

/// Three-component sweep data with `per_cluster` points per component.
pub fn three_blobs(per_cluster: usize, seed: u64) -> State {
    generate(&preset(Preset::Complexity(per_cluster), seed).expect("valid preset"))
        .expect("valid spec")
        .points
}

/// Uniform-weight configuration with unit bandwidth, as in the experiments.
pub fn uniform(algorithm: Algorithm) -> AlgoConfig {
    AlgoConfig::new(algorithm, Profile::Epanechnikov, Bandwidth::new(1.0).expect("positive"))
}
