//! Seeded isotropic Gaussian mixtures and the experiment presets built on them.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{config, Error, Result};
use crate::rng::{SeededRng, DATA_STREAM, PRESET_STREAM};
use crate::state::State;

/// Component means shared by the three-cluster presets.
pub const THREE_MEANS: [[f64; 2]; 3] = [[1.0, 1.0], [-1.0, -1.0], [1.0, -1.0]];
/// Isotropic covariance scale of the four fixed sets.
pub const SET_COVARIANCE: f64 = 0.64;
/// Isotropic covariance scale of the sweep presets.
pub const SWEEP_COVARIANCE: f64 = 0.6;
/// Per-component size of the sweep presets.
pub const SWEEP_SIZE: usize = 250;

/// Mixture of isotropic Gaussians `N(means[r], covariance_scale * I)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmmSpec {
    pub means: Vec<Vec<f64>>,
    pub covariance_scale: f64,
    pub sizes: Vec<usize>,
    pub seed: u64,
}

impl GmmSpec {
    pub fn dim(&self) -> usize {
        self.means.first().map_or(0, Vec::len)
    }

    pub fn total(&self) -> usize {
        self.sizes.iter().sum()
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        if d == 0 || self.means.iter().any(|m| m.len() != d) {
            return Err(config("mixture means must share a positive dimension"));
        }
        if self.means.len() != self.sizes.len() {
            return Err(config("one size per mixture component is required"));
        }
        if self.sizes.contains(&0) {
            return Err(config("component sizes must be at least 1"));
        }
        if !(self.covariance_scale.is_finite() && self.covariance_scale >= 0.0) {
            return Err(config("covariance scale must be finite and non-negative"));
        }
        Ok(())
    }
}

/// Points with their generating component (labels start at 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    pub points: State,
    pub labels: Vec<u32>,
    pub spec: Option<GmmSpec>,
}

impl LabeledDataset {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn label_count(&self) -> usize {
        let mut l = self.labels.clone();
        l.sort_unstable();
        l.dedup();
        l.len()
    }
}

/// Draws `sizes[r]` points from component `r`, component by component.
/// Normals come from the polar method on the seed's data stream.
pub fn generate(spec: &GmmSpec) -> Result<LabeledDataset> {
    spec.validate()?;
    let d = spec.dim();
    let sd = spec.covariance_scale.sqrt();
    let mut rng = SeededRng::new(spec.seed, DATA_STREAM);
    let mut flat = Vec::with_capacity(spec.total() * d);
    let mut labels = Vec::with_capacity(spec.total());
    for (r, (mean, &size)) in spec.means.iter().zip(&spec.sizes).enumerate() {
        for _ in 0..size {
            for &m in mean {
                flat.push(m + sd * rng.normal());
            }
            labels.push(r as u32 + 1);
        }
    }
    Ok(LabeledDataset {
        points: State::new(flat, d)?,
        labels,
        spec: Some(spec.clone()),
    })
}

/// Named experiment configurations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Set1,
    Set2,
    Set3,
    Set4,
    /// Three components of this many points each.
    Complexity(usize),
    /// First component scaled by this ratio relative to the others.
    Imbalance(f64),
    /// Three components in this dimension.
    Dim(usize),
    /// This many components in the plane.
    NumClusters(usize),
}

impl Preset {
    pub const SETS: [Preset; 4] = [Preset::Set1, Preset::Set2, Preset::Set3, Preset::Set4];
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Preset::Set1 => f.write_str("set1"),
            Preset::Set2 => f.write_str("set2"),
            Preset::Set3 => f.write_str("set3"),
            Preset::Set4 => f.write_str("set4"),
            Preset::Complexity(m) => write!(f, "complexity:{m}"),
            Preset::Imbalance(r) => write!(f, "imbalance:{r}"),
            Preset::Dim(d) => write!(f, "dim:{d}"),
            Preset::NumClusters(r) => write!(f, "num-clusters:{r}"),
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let unknown = || Error::Unknown {
            kind: "preset",
            name: s.to_string(),
        };
        let lower = s.trim().to_ascii_lowercase();
        let (name, arg) = match lower.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (lower.as_str(), None),
        };
        let int = |a: Option<&str>| -> Result<usize> { a.and_then(|v| v.parse().ok()).ok_or_else(unknown) };
        let preset = match (name, arg) {
            ("set1", None) => Preset::Set1,
            ("set2", None) => Preset::Set2,
            ("set3", None) => Preset::Set3,
            ("set4", None) => Preset::Set4,
            ("complexity", a) => Preset::Complexity(int(a)?),
            ("imbalance", a) => Preset::Imbalance(a.and_then(|v| v.parse().ok()).ok_or_else(unknown)?),
            ("dim", a) => Preset::Dim(int(a)?),
            ("num-clusters" | "num_clusters" | "nbc", a) => Preset::NumClusters(int(a)?),
            _ => return Err(unknown()),
        };
        Ok(preset)
    }
}

fn three_means() -> Vec<Vec<f64>> {
    THREE_MEANS.iter().map(|m| m.to_vec()).collect()
}

/// Draws `count` distinct grid points, each coordinate uniform on `values`.
fn distinct_grid_means(rng: &mut SeededRng, values: &[f64], d: usize, count: usize) -> Vec<Vec<f64>> {
    let mut means: Vec<Vec<f64>> = Vec::with_capacity(count);
    while means.len() < count {
        let m: Vec<f64> = (0..d)
            .map(|_| values[rng.below(values.len() as u64) as usize])
            .collect();
        if !means.contains(&m) {
            means.push(m);
        }
    }
    means
}

/// The exact mixture specification of a preset. Random component means are
/// drawn from the seed's preset stream, so `(preset, seed)` fixes the data.
pub fn preset(name: Preset, seed: u64) -> Result<GmmSpec> {
    let fixed = |sizes: [usize; 3]| GmmSpec {
        means: three_means(),
        covariance_scale: SET_COVARIANCE,
        sizes: sizes.to_vec(),
        seed,
    };
    let spec = match name {
        Preset::Set1 => fixed([250, 250, 250]),
        Preset::Set2 => fixed([50, 50, 50]),
        Preset::Set3 => fixed([1500, 1500, 1500]),
        Preset::Set4 => fixed([100, 300, 50]),
        Preset::Complexity(m) => {
            if m == 0 {
                return Err(config("complexity preset needs at least one point per cluster"));
            }
            GmmSpec {
                means: three_means(),
                covariance_scale: SWEEP_COVARIANCE,
                sizes: vec![m; 3],
                seed,
            }
        }
        Preset::Imbalance(ratio) => {
            if !(ratio.is_finite() && ratio > 0.0) {
                return Err(config("imbalance ratio must be positive"));
            }
            let first = ((SWEEP_SIZE as f64 * ratio).round() as usize).max(1);
            GmmSpec {
                means: three_means(),
                covariance_scale: SWEEP_COVARIANCE,
                sizes: vec![first, SWEEP_SIZE, SWEEP_SIZE],
                seed,
            }
        }
        Preset::Dim(d) => {
            if d < 2 {
                return Err(config("dimension preset needs d >= 2"));
            }
            let mut rng = SeededRng::new(seed, PRESET_STREAM);
            GmmSpec {
                means: distinct_grid_means(&mut rng, &[-1.0, 1.0], d, 3),
                covariance_scale: SWEEP_COVARIANCE,
                sizes: vec![SWEEP_SIZE; 3],
                seed,
            }
        }
        Preset::NumClusters(r) => {
            if r < 1 {
                return Err(config("cluster-count preset needs at least one cluster"));
            }
            let half = r as f64 / 2.0;
            let values: Vec<f64> = ((-half).ceil() as i64..=half.floor() as i64)
                .map(|v| v as f64)
                .collect();
            let mut rng = SeededRng::new(seed, PRESET_STREAM);
            GmmSpec {
                means: distinct_grid_means(&mut rng, &values, 2, r),
                covariance_scale: SWEEP_COVARIANCE,
                sizes: vec![SWEEP_SIZE; r],
                seed,
            }
        }
    };
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_gaussian_returns_means() {
        let spec = GmmSpec {
            means: vec![vec![1.0, 2.0], vec![-3.0, 0.5]],
            covariance_scale: 0.0,
            sizes: vec![3, 2],
            seed: 9,
        };
        let data = generate(&spec).unwrap();
        assert_eq!(data.labels, vec![1, 1, 1, 2, 2]);
        for (i, x) in data.points.points().enumerate() {
            assert_eq!(x, spec.means[data.labels[i] as usize - 1].as_slice());
        }
    }

    #[test]
    fn singleton_components() {
        let spec = GmmSpec {
            sizes: vec![1, 1, 1],
            ..preset(Preset::Set1, 0).unwrap()
        };
        let data = generate(&spec).unwrap();
        assert_eq!(data.len(), 3);
        assert_eq!(data.labels, vec![1, 2, 3]);
    }

    #[test]
    fn set1_component_means() {
        let data = generate(&preset(Preset::Set1, 2024).unwrap()).unwrap();
        assert_eq!(data.len(), 750);
        let bound = 3.0 * (0.64f64 / 250.0).sqrt();
        for (r, mean) in THREE_MEANS.iter().enumerate() {
            let members: Vec<&[f64]> = data
                .points
                .points()
                .zip(&data.labels)
                .filter(|(_, &l)| l as usize == r + 1)
                .map(|(x, _)| x)
                .collect();
            assert_eq!(members.len(), 250);
            for c in 0..2 {
                let m = members.iter().map(|x| x[c]).sum::<f64>() / 250.0;
                assert!((m - mean[c]).abs() < bound, "component {r} coordinate {c}: {m}");
            }
        }
    }

    #[test]
    fn covariance_within_twenty_percent() {
        let data = generate(&preset(Preset::Set1, 5).unwrap()).unwrap();
        for r in 1..=3u32 {
            let xs: Vec<&[f64]> = data
                .points
                .points()
                .zip(&data.labels)
                .filter(|(_, &l)| l == r)
                .map(|(x, _)| x)
                .collect();
            let n = xs.len() as f64;
            let mean: Vec<f64> = (0..2).map(|c| xs.iter().map(|x| x[c]).sum::<f64>() / n).collect();
            let mut cov = [[0.0; 2]; 2];
            for x in &xs {
                for a in 0..2 {
                    for b in 0..2 {
                        cov[a][b] += (x[a] - mean[a]) * (x[b] - mean[b]) / (n - 1.0);
                    }
                }
            }
            // operator norm of cov - 0.64 I for a symmetric 2x2 matrix
            let (a, b, c) = (cov[0][0] - 0.64, cov[0][1], cov[1][1] - 0.64);
            let mid = (a + c) / 2.0;
            let rad = (((a - c) / 2.0).powi(2) + b * b).sqrt();
            let op = (mid + rad).abs().max((mid - rad).abs());
            assert!(op < 0.2 * 0.64, "component {r}: {op}");
        }
    }

    #[test]
    fn deterministic() {
        let spec = preset(Preset::Set2, 77).unwrap();
        assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
        let other = GmmSpec {
            seed: 78,
            ..spec.clone()
        };
        assert_ne!(generate(&spec).unwrap().points, generate(&other).unwrap().points);
    }

    #[test]
    fn preset_tables() {
        let s4 = preset(Preset::Set4, 0).unwrap();
        assert_eq!(s4.sizes, vec![100, 300, 50]);
        assert_eq!(s4.covariance_scale, 0.64);
        assert_eq!(s4.means, three_means());
        assert_eq!(preset(Preset::Set3, 0).unwrap().sizes, vec![1500; 3]);
        assert_eq!(preset(Preset::Set2, 0).unwrap().sizes, vec![50; 3]);

        let dim = preset(Preset::Dim(2), 3).unwrap();
        assert_eq!(dim.means.len(), 3);
        assert!(dim.means.iter().flatten().all(|&v| v == 1.0 || v == -1.0));
        assert_eq!(dim.covariance_scale, 0.6);
        assert_eq!(dim.sizes, vec![250; 3]);
        assert_eq!(preset(Preset::Dim(7), 3).unwrap().dim(), 7);

        assert_eq!(preset(Preset::Complexity(10), 0).unwrap().sizes, vec![10; 3]);
        assert_eq!(preset(Preset::Imbalance(0.1), 0).unwrap().sizes, vec![25, 250, 250]);
        assert_eq!(preset(Preset::Imbalance(1e-9), 0).unwrap().sizes[0], 1);

        let nbc = preset(Preset::NumClusters(20), 1).unwrap();
        assert_eq!(nbc.means.len(), 20);
        assert!(nbc.means.iter().flatten().all(|&v| (-10.0..=10.0).contains(&v)));
        let mut sorted = nbc.means.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        sorted.dedup();
        assert_eq!(sorted.len(), 20);
    }

    #[test]
    fn preset_names() {
        for p in [
            Preset::Set1,
            Preset::Set4,
            Preset::Complexity(10),
            Preset::Imbalance(0.5),
            Preset::Dim(3),
            Preset::NumClusters(4),
        ] {
            assert_eq!(p.to_string().parse::<Preset>().unwrap(), p);
        }
        assert!("set5".parse::<Preset>().is_err());
        assert!("complexity".parse::<Preset>().is_err());
        assert!("dim:x".parse::<Preset>().is_err());
    }

    #[test]
    fn invalid_specs() {
        assert!(preset(Preset::Complexity(0), 0).is_err());
        assert!(preset(Preset::Imbalance(-1.0), 0).is_err());
        assert!(preset(Preset::Dim(1), 0).is_err());
        let bad = GmmSpec {
            means: vec![vec![0.0]],
            covariance_scale: 1.0,
            sizes: vec![0],
            seed: 0,
        };
        assert!(generate(&bad).is_err());
    }
}
