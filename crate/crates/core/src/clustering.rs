//! Hard partitions extracted from converged positions.

use serde::{Deserialize, Serialize};

use crate::error::{config, Result};
use crate::state::{squared_distance, Bandwidth, State};

/// Cluster assignment of `n` points; ids run contiguously from 1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    assignment: Vec<u32>,
    clusters: usize,
}

impl Partition {
    /// Builds a partition from arbitrary ids, relabelling them `1..=M` by
    /// order of first appearance.
    pub fn from_labels<T: Copy + Eq + std::hash::Hash>(labels: &[T]) -> Self {
        let mut ids = std::collections::HashMap::new();
        let assignment = labels
            .iter()
            .map(|l| {
                let next = ids.len() as u32 + 1;
                *ids.entry(*l).or_insert(next)
            })
            .collect();
        Self {
            assignment,
            clusters: ids.len(),
        }
    }

    pub fn assignment(&self) -> &[u32] {
        &self.assignment
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn cluster_count(&self) -> usize {
        self.clusters
    }

    /// Member indices of every cluster, in id order.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.clusters];
        for (i, &c) in self.assignment.iter().enumerate() {
            out[c as usize - 1].push(i);
        }
        out
    }

    /// Same grouping regardless of labels.
    pub fn same_grouping(&self, other: &Partition) -> bool {
        self.len() == other.len()
            && Partition::from_labels(&self.assignment) == Partition::from_labels(&other.assignment)
    }
}

/// Merge radius as a fraction of the bandwidth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MergePolicy {
    merge_radius_factor: f64,
}

impl Default for MergePolicy {
    fn default() -> Self {
        Self {
            merge_radius_factor: 1.0 / 3.0,
        }
    }
}

impl MergePolicy {
    pub fn new(factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor < 0.5) {
            return Err(config(format!("merge factor must lie in (0, 0.5), got {factor}")));
        }
        Ok(Self {
            merge_radius_factor: factor,
        })
    }

    pub fn factor(&self) -> f64 {
        self.merge_radius_factor
    }

    pub fn radius(&self, h: Bandwidth) -> f64 {
        self.merge_radius_factor * h.get()
    }
}

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Connected components of the graph linking `i ~ j` when
/// `|pos_i - pos_j| <= radius`; ids follow first appearance.
pub fn link_components(positions: &State, radius: f64) -> Partition {
    let n = positions.len();
    let r2 = radius * radius;
    let mut sets = DisjointSet::new(n);
    for i in 0..n {
        for j in (i + 1)..n {
            if squared_distance(positions.point(i), positions.point(j)) <= r2 {
                sets.union(i, j);
            }
        }
    }
    let roots: Vec<usize> = (0..n).map(|i| sets.find(i)).collect();
    Partition::from_labels(&roots)
}

/// Single-linkage clusters at radius `policy.factor * h`.
pub fn extract_clusters(final_positions: &State, h: Bandwidth, policy: MergePolicy) -> Partition {
    link_components(final_positions, policy.radius(h))
}

pub fn cluster_count(p: &Partition) -> usize {
    p.cluster_count()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub id: u32,
    pub size: usize,
    pub centroid: Vec<f64>,
    pub diameter: f64,
}

/// Size, centroid and diameter of each cluster, measured on `positions`.
pub fn summarize(partition: &Partition, positions: &State) -> Vec<ClusterSummary> {
    partition
        .members()
        .into_iter()
        .enumerate()
        .map(|(c, members)| {
            let d = positions.dim();
            let mut centroid = vec![0.0; d];
            for &i in &members {
                for (acc, x) in centroid.iter_mut().zip(positions.point(i)) {
                    *acc += x;
                }
            }
            centroid.iter_mut().for_each(|x| *x /= members.len() as f64);
            ClusterSummary {
                id: c as u32 + 1,
                size: members.len(),
                centroid,
                diameter: diameter_of(positions, &members),
            }
        })
        .collect()
}

pub(crate) fn diameter_of(positions: &State, members: &[usize]) -> f64 {
    let mut best: f64 = 0.0;
    for (a, &i) in members.iter().enumerate() {
        for &j in &members[a + 1..] {
            best = best.max(squared_distance(positions.point(i), positions.point(j)));
        }
    }
    best.sqrt()
}

/// Largest intra-cluster diameter.
pub fn max_cluster_diameter(partition: &Partition, positions: &State) -> f64 {
    partition
        .members()
        .iter()
        .map(|m| diameter_of(positions, m))
        .fold(0.0, f64::max)
}

/// Pairs whose distance falls in the band `[tau, h - tau]`.
pub fn forbidden_band_pairs(positions: &State, h: Bandwidth, tau: f64) -> usize {
    let (lo, hi) = (tau, h.get() - tau);
    let mut count = 0;
    for i in 0..positions.len() {
        for j in (i + 1)..positions.len() {
            let dist = squared_distance(positions.point(i), positions.point(j)).sqrt();
            if dist >= lo && dist <= hi {
                count += 1;
            }
        }
    }
    count
}
