//! The state `X = [x_1, ..., x_n]`, neighborhoods, the mean-shift operator and
//! the objective `L(X) = sum_{i <= j} K((x_i - x_j) / h)` with its gradients.
//!
//! Everything here is a pairwise reference implementation with no spatial
//! index: a query costs `O(n d)` and a full sweep `O(n^2 d)`. Sums run in
//! ascending index order so results are reproducible bit-for-bit.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::kernels::Profile;

/// An ordered set of `n` points in `R^d`, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct State {
    points: Vec<f64>,
    n: usize,
    d: usize,
}

impl State {
    pub fn new(points: Vec<f64>, d: usize) -> Result<Self> {
        if d == 0 {
            return Err(domain("dimension must be at least 1"));
        }
        if points.is_empty() || !points.len().is_multiple_of(d) {
            return Err(domain(format!(
                "expected a non-empty multiple of {d} coordinates, got {}",
                points.len()
            )));
        }
        if let Some(pos) = points.iter().position(|c| !c.is_finite()) {
            return Err(domain(format!("non-finite coordinate at point {}", pos / d)));
        }
        let n = points.len() / d;
        Ok(Self { points, n, d })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let d = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut flat = Vec::with_capacity(rows.len() * d);
        for row in rows {
            let row = row.as_ref();
            if row.len() != d {
                return Err(Error::Shape {
                    expected: d,
                    actual: row.len(),
                });
            }
            flat.extend_from_slice(row);
        }
        Self::new(flat, d)
    }

    /// Convenience constructor for 1-D data.
    pub fn from_scalars(values: &[f64]) -> Result<Self> {
        Self::new(values.to_vec(), 1)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.d..(i + 1) * self.d]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.points.chunks_exact(self.d)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.points
    }

    pub fn into_flat(self) -> Vec<f64> {
        self.points
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.points().map(<[f64]>::to_vec).collect()
    }

    /// Overwrite point `i`. Only the algorithm drivers mutate states.
    pub(crate) fn set_point(&mut self, i: usize, value: &[f64]) {
        self.points[i * self.d..(i + 1) * self.d].copy_from_slice(value);
    }

    pub(crate) fn flat_mut(&mut self) -> &mut [f64] {
        &mut self.points
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.n {
            return Err(Error::IndexOutOfRange { index: i, len: self.n });
        }
        Ok(())
    }

    fn check_query(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.d {
            return Err(Error::Shape {
                expected: self.d,
                actual: x.len(),
            });
        }
        if x.iter().any(|c| !c.is_finite()) {
            return Err(domain("query has non-finite coordinates"));
        }
        Ok(())
    }

    /// Largest pairwise Euclidean distance.
    pub fn diameter(&self) -> f64 {
        let mut best: f64 = 0.0;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                best = best.max(squared_distance(self.point(i), self.point(j)));
            }
        }
        best.sqrt()
    }
}

/// Kernel bandwidth `h > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Bandwidth(f64);

impl Bandwidth {
    pub fn new(h: f64) -> Result<Self> {
        if !(h.is_finite() && h > 0.0) {
            return Err(domain(format!("bandwidth must be positive and finite, got {h}")));
        }
        Ok(Self(h))
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }

    #[inline]
    pub(crate) fn inv_squared(self) -> f64 {
        1.0 / (self.0 * self.0)
    }
}

impl TryFrom<f64> for Bandwidth {
    type Error = Error;

    fn try_from(h: f64) -> Result<Self> {
        Self::new(h)
    }
}

impl From<Bandwidth> for f64 {
    fn from(h: Bandwidth) -> f64 {
        h.0
    }
}

/// Indices `i` with `|x - x_i| < h`, ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighborSet(pub Vec<usize>);

impl NeighborSet {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }
}

/// Result of applying the mean-shift operator to a query point.
#[derive(Debug, Clone, PartialEq)]
pub struct Shifted {
    pub position: Vec<f64>,
    /// `sum_i G((x - x_i) / h)`.
    pub weight_sum: f64,
    /// No sample lies strictly within `h` of the query; `position` is the query.
    pub isolated: bool,
}

#[inline]
pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

/// Writes the `G`-weighted mean of the sample around `x` into `out` and
/// returns the weight sum. `out` is left as `x` when the sum is zero.
#[inline]
pub(crate) fn weighted_mean_into(x: &[f64], s: &State, inv_h2: f64, p: Profile, out: &mut [f64]) -> f64 {
    out.iter_mut().for_each(|c| *c = 0.0);
    let mut total = 0.0;
    for xi in s.points() {
        let t = squared_distance(x, xi) * inv_h2;
        if t >= 1.0 {
            continue;
        }
        let w = p.weight(t);
        total += w;
        for ((o, c), x0) in out.iter_mut().zip(xi).zip(x) {
            *o += w * (c - x0);
        }
    }
    // accumulated as offsets from x so fixed points map exactly onto themselves
    for (o, x0) in out.iter_mut().zip(x) {
        *o = if total > 0.0 { x0 + *o / total } else { *x0 };
    }
    total
}

pub fn neighborhood(x: &[f64], s: &State, h: Bandwidth) -> Result<NeighborSet> {
    s.check_query(x)?;
    let h2 = h.get() * h.get();
    Ok(NeighborSet(
        s.points()
            .enumerate()
            .filter(|(_, xi)| squared_distance(x, xi) < h2)
            .map(|(i, _)| i)
            .collect(),
    ))
}

/// `S_h(x; X)`: the `G`-weighted average of the sample around `x`.
///
/// A query with an empty neighborhood is returned unchanged and flagged
/// `isolated` instead of failing.
pub fn mean_shift_operator(x: &[f64], s: &State, h: Bandwidth, p: Profile) -> Result<Shifted> {
    s.check_query(x)?;
    let mut position = vec![0.0; s.dim()];
    let weight_sum = weighted_mean_into(x, s, h.inv_squared(), p, &mut position);
    Ok(Shifted {
        position,
        weight_sum,
        isolated: weight_sum <= 0.0,
    })
}

/// `m_h(x; X) = S_h(x; X) - x`.
pub fn shift_vector(x: &[f64], s: &State, h: Bandwidth, p: Profile) -> Result<Vec<f64>> {
    let shifted = mean_shift_operator(x, s, h, p)?;
    Ok(shifted.position.iter().zip(x).map(|(m, c)| m - c).collect())
}

/// `L(X)` including the `n` diagonal terms `k(0)`, so that its maximum is
/// `n (n + 1) / 2 * k(0)`.
pub fn objective_l(s: &State, h: Bandwidth, p: Profile) -> f64 {
    let inv_h2 = h.inv_squared();
    let mut total = 0.0;
    for i in 0..s.len() {
        total += p.value(0.0);
        for j in (i + 1)..s.len() {
            total += p.value(squared_distance(s.point(i), s.point(j)) * inv_h2);
        }
    }
    total
}

/// Upper bound `n (n + 1) / 2 * k(0)` of the objective.
pub fn objective_upper_bound(n: usize, p: Profile) -> f64 {
    (n * (n + 1)) as f64 / 2.0 * p.at_zero()
}

/// `L(X') - L(X)` when only point `i` moves to `new_position`.
///
/// Each pair term is differenced through [`Profile::value_difference`], so the
/// result keeps its relative accuracy even for displacements near round-off,
/// where subtracting two evaluations of `L` would return noise.
pub fn objective_delta(s: &State, h: Bandwidth, p: Profile, i: usize, new_position: &[f64]) -> Result<f64> {
    s.check_index(i)?;
    s.check_query(new_position)?;
    Ok(objective_delta_unchecked(s, h.inv_squared(), p, i, new_position))
}

pub(crate) fn objective_delta_unchecked(s: &State, inv_h2: f64, p: Profile, i: usize, new_position: &[f64]) -> f64 {
    let old = s.point(i);
    let mut total = 0.0;
    for (j, xj) in s.points().enumerate() {
        if j == i {
            continue;
        }
        let t_old = squared_distance(old, xj) * inv_h2;
        let t_new = squared_distance(new_position, xj) * inv_h2;
        if t_old >= 1.0 && t_new >= 1.0 {
            continue;
        }
        // t_old - t_new = <old - new, old + new - 2 x_j> / h^2
        let gap: f64 = old
            .iter()
            .zip(new_position)
            .zip(xj)
            .map(|((a, b), c)| (a - b) * ((a - c) + (b - c)))
            .sum::<f64>()
            * inv_h2;
        total += p.value_difference(t_new, t_old, gap);
    }
    total
}

/// `grad_{x_i} L = (2 / h^2) sum_{j != i} G((x_i - x_j) / h) (x_j - x_i)`.
pub fn partial_gradient(s: &State, h: Bandwidth, p: Profile, i: usize) -> Result<Vec<f64>> {
    s.check_index(i)?;
    let mut out = vec![0.0; s.dim()];
    partial_gradient_into(s, h.inv_squared(), p, i, &mut out);
    Ok(out)
}

pub(crate) fn partial_gradient_into(s: &State, inv_h2: f64, p: Profile, i: usize, out: &mut [f64]) {
    out.iter_mut().for_each(|c| *c = 0.0);
    let xi = s.point(i);
    for (j, xj) in s.points().enumerate() {
        if j == i {
            continue;
        }
        let t = squared_distance(xi, xj) * inv_h2;
        if t >= 1.0 {
            continue;
        }
        let w = p.weight(t);
        for ((o, a), b) in out.iter_mut().zip(xj).zip(xi) {
            *o += w * (a - b);
        }
    }
    out.iter_mut().for_each(|c| *c *= 2.0 * inv_h2);
}

/// The full gradient of `L`, one `d`-vector per point.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    components: Vec<f64>,
    d: usize,
}

impl Gradient {
    pub fn component(&self, i: usize) -> &[f64] {
        &self.components[i * self.d..(i + 1) * self.d]
    }

    pub fn components(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.components.chunks_exact(self.d)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.components
    }

    /// `max_i |grad_i L|_2`.
    pub fn norm(&self) -> f64 {
        self.components().map(norm).fold(0.0, f64::max)
    }
}

pub fn full_gradient(s: &State, h: Bandwidth, p: Profile) -> Gradient {
    let d = s.dim();
    let inv_h2 = h.inv_squared();
    let mut components = vec![0.0; s.len() * d];
    for (i, out) in components.chunks_exact_mut(d).enumerate() {
        partial_gradient_into(s, inv_h2, p, i, out);
    }
    Gradient { components, d }
}

/// `f(x) = 1 / (n h^d) sum_i K((x - x_i) / h)`, unnormalized by kernel mass.
pub fn kde_value(x: &[f64], s: &State, h: Bandwidth, p: Profile) -> Result<f64> {
    s.check_query(x)?;
    let inv_h2 = h.inv_squared();
    let sum: f64 = s.points().map(|xi| p.value(squared_distance(x, xi) * inv_h2)).sum();
    Ok(sum / (s.len() as f64 * h.get().powi(s.dim() as i32)))
}
