//! External evaluation of a partition against ground-truth labels.
//!
//! With `n_qr` the number of points in cluster `q` carrying label `r`:
//!
//! * `Pur(C, D) = (1/N) sum_q max_r n_qr`, `Pur(D, C) = (1/N) sum_r max_q n_qr`,
//!   `G = sqrt(Pur(C, D) Pur(D, C))`;
//! * `ACP = (1/Q) sum_q sum_r P(d_r | c_q)^2`,
//!   `ALP = (1/R) sum_r sum_q P(c_q | d_r)^2`, `K = sqrt(ACP ALP)`.
//!
//! ACP and ALP weight clusters and labels uniformly, not by size.

use serde::{Deserialize, Serialize};

use crate::clustering::Partition;
use crate::error::{domain, Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContingencyTable {
    counts: Vec<u64>,
    rows: usize,
    cols: usize,
}

impl ContingencyTable {
    /// Builds a table from row-major counts, dropping all-zero rows and
    /// columns.
    pub fn from_counts<R: AsRef<[u64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        if rows.iter().any(|r| r.as_ref().len() != cols) {
            return Err(domain("contingency rows have different lengths"));
        }
        let keep_rows: Vec<usize> = (0..rows.len())
            .filter(|&q| rows[q].as_ref().iter().any(|&c| c > 0))
            .collect();
        let keep_cols: Vec<usize> = (0..cols)
            .filter(|&r| rows.iter().any(|row| row.as_ref()[r] > 0))
            .collect();
        if keep_rows.is_empty() {
            return Err(domain("contingency table has no counts"));
        }
        let counts = keep_rows
            .iter()
            .flat_map(|&q| keep_cols.iter().map(move |&r| rows[q].as_ref()[r]))
            .collect();
        Ok(Self {
            counts,
            rows: keep_rows.len(),
            cols: keep_cols.len(),
        })
    }

    /// Number of clusters `Q`.
    pub fn clusters(&self) -> usize {
        self.rows
    }

    /// Number of labels `R`.
    pub fn labels(&self) -> usize {
        self.cols
    }

    pub fn get(&self, q: usize, r: usize) -> u64 {
        self.counts[q * self.cols + r]
    }

    pub fn row(&self, q: usize) -> &[u64] {
        &self.counts[q * self.cols..(q + 1) * self.cols]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn row_sums(&self) -> Vec<u64> {
        (0..self.rows).map(|q| self.row(q).iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<u64> {
        (0..self.cols)
            .map(|r| (0..self.rows).map(|q| self.get(q, r)).sum())
            .collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<u64>> {
        (0..self.rows).map(|q| self.row(q).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        let counts = (0..self.cols)
            .flat_map(|r| (0..self.rows).map(move |q| (q, r)))
            .map(|(q, r)| self.get(q, r))
            .collect();
        Self {
            counts,
            rows: self.cols,
            cols: self.rows,
        }
    }
}

/// Tabulates `partition` against `labels`. Label values are compacted in
/// ascending order.
pub fn contingency<L: Copy + Ord>(partition: &Partition, labels: &[L]) -> Result<ContingencyTable> {
    if labels.len() != partition.len() {
        return Err(Error::Shape {
            expected: partition.len(),
            actual: labels.len(),
        });
    }
    let mut distinct: Vec<L> = labels.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    let mut rows = vec![vec![0u64; distinct.len()]; partition.cluster_count()];
    for (&c, l) in partition.assignment().iter().zip(labels) {
        let r = distinct.binary_search(l).expect("label was collected above");
        rows[c as usize - 1][r] += 1;
    }
    ContingencyTable::from_counts(&rows)
}

pub fn purity_cd(t: &ContingencyTable) -> f64 {
    let hits: u64 = (0..t.clusters())
        .map(|q| t.row(q).iter().copied().max().unwrap_or(0))
        .sum();
    hits as f64 / t.total() as f64
}

pub fn purity_dc(t: &ContingencyTable) -> f64 {
    purity_cd(&t.transpose())
}

pub fn g_score(t: &ContingencyTable) -> f64 {
    (purity_cd(t) * purity_dc(t)).sqrt()
}

pub fn acp(t: &ContingencyTable) -> f64 {
    let sums = t.row_sums();
    let total: f64 = (0..t.clusters())
        .map(|q| {
            let size = sums[q] as f64;
            t.row(q).iter().map(|&c| (c as f64 / size).powi(2)).sum::<f64>()
        })
        .sum();
    total / t.clusters() as f64
}

pub fn alp(t: &ContingencyTable) -> f64 {
    acp(&t.transpose())
}

pub fn k_score(t: &ContingencyTable) -> f64 {
    (acp(t) * alp(t)).sqrt()
}

/// All scores for one clustering, in the JSON layout written by the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub acp: f64,
    pub alp: f64,
    pub k: f64,
    pub pur_cd: f64,
    pub pur_dc: f64,
    pub g: f64,
    pub num_clusters: usize,
    pub n: usize,
}

impl MetricsReport {
    pub fn from_table(t: &ContingencyTable) -> Self {
        Self {
            acp: acp(t),
            alp: alp(t),
            k: k_score(t),
            pur_cd: purity_cd(t),
            pur_dc: purity_dc(t),
            g: g_score(t),
            num_clusters: t.clusters(),
            n: t.total() as usize,
        }
    }

    pub fn evaluate<L: Copy + Ord>(partition: &Partition, labels: &[L]) -> Result<Self> {
        Ok(Self::from_table(&contingency(partition, labels)?))
    }
}
