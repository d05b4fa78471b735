//! SMS over a kNN neighborhood given by an external similarity matrix, and
//! the spherical normalization applied to embeddings before scoring.

use std::cmp::Ordering;
use std::io::{Read, Write};
use std::path::Path;
use std::time::Instant;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::algorithms::{
    timed_out, AlgoConfig, Algorithm, RunTrace, StopReason, StopTracker, TraceBuilder, TraceOptions,
};
use crate::error::{config, domain, Error, Result};
use crate::rng::RandomIndexStream;
use crate::state::{squared_distance, State};

/// Dense `n x n` similarity scores; entry `(j, i)` is `s(phi_j, phi_i)` and
/// larger means more similar. The diagonal is stored but never used.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    n: usize,
    scores: Vec<f64>,
}

impl ScoreMatrix {
    /// Row-major scores.
    pub fn new(n: usize, scores: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(domain("score matrix must not be empty"));
        }
        if scores.len() != n * n {
            return Err(Error::Shape {
                expected: n * n,
                actual: scores.len(),
            });
        }
        if let Some(at) = scores.iter().position(|s| !s.is_finite()) {
            return Err(domain(format!("non-finite score at row {}, column {}", at / n, at % n)));
        }
        Ok(Self { n, scores })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n = rows.len();
        let mut flat = Vec::with_capacity(n * n);
        for r in rows {
            let r = r.as_ref();
            if r.len() != n {
                return Err(Error::Shape {
                    expected: n,
                    actual: r.len(),
                });
            }
            flat.extend_from_slice(r);
        }
        Self::new(n, flat)
    }

    /// `-|x_j - x_i|^2`, the score under which kNN means nearest neighbors.
    pub fn negative_squared_distances(s: &State) -> Self {
        let n = s.len();
        let mut scores = vec![0.0; n * n];
        for j in 0..n {
            for i in 0..n {
                scores[j * n + i] = -squared_distance(s.point(j), s.point(i));
            }
        }
        Self { n, scores }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, j: usize, i: usize) -> f64 {
        self.scores[j * self.n + i]
    }

    pub fn set(&mut self, j: usize, i: usize, value: f64) {
        self.scores[j * self.n + i] = value;
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.scores
    }

    /// Headerless dense CSV, one row per line.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let row = rec
                .iter()
                .map(|f| {
                    f.parse::<f64>().map_err(|e| Error::Parse {
                        line: line + 1,
                        message: format!("`{f}`: {e}"),
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        Self::from_rows(&rows)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
        for row in self.scores.chunks_exact(self.n) {
            w.write_record(row.iter().map(|v| format!("{v:?}")))?;
        }
        w.flush()?;
        Ok(())
    }

    /// `n` as a little-endian `u64`, then `n^2` little-endian `f64`s.
    pub fn read_binary<R: Read>(mut reader: R) -> Result<Self> {
        let mut head = [0u8; 8];
        reader.read_exact(&mut head)?;
        let n = usize::try_from(u64::from_le_bytes(head)).map_err(|_| domain("score matrix too large"))?;
        let cells = n.checked_mul(n).ok_or_else(|| domain("score matrix too large"))?;
        let mut bytes = Vec::new();
        reader.read_to_end(&mut bytes)?;
        if bytes.len() != cells * 8 {
            return Err(Error::Shape {
                expected: cells * 8,
                actual: bytes.len(),
            });
        }
        let scores = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        Self::new(n, scores)
    }

    pub fn write_binary<W: Write>(&self, mut writer: W) -> Result<()> {
        writer.write_all(&(self.n as u64).to_le_bytes())?;
        for v in &self.scores {
            writer.write_all(&v.to_le_bytes())?;
        }
        writer.flush()?;
        Ok(())
    }

    /// Reads `.bin` files as binary and anything else as CSV.
    pub fn load(path: &Path) -> Result<Self> {
        let file = std::io::BufReader::new(std::fs::File::open(path)?);
        if path.extension().is_some_and(|e| e == "bin") {
            Self::read_binary(file)
        } else {
            Self::read_csv(file)
        }
    }

    /// The `k` indices `j != i` with the highest `s(phi_j, phi_i)`, ties to
    /// the lower index, in ranking order.
    pub fn top_k(&self, i: usize, k: usize) -> Vec<usize> {
        let mut candidates: Vec<usize> = (0..self.n).filter(|&j| j != i).collect();
        let rank = |a: &usize, b: &usize| {
            self.get(*b, i)
                .partial_cmp(&self.get(*a, i))
                .unwrap_or(Ordering::Equal)
                .then(a.cmp(b))
        };
        if k < candidates.len() {
            candidates.select_nth_unstable_by(k, rank);
            candidates.truncate(k);
        }
        candidates.sort_unstable_by(rank);
        candidates
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PreprocessConfig {
    /// Output dimension `q`.
    pub target_dim: usize,
    /// Whitening regularizer added to every retained eigenvalue.
    pub epsilon: f64,
}

impl PreprocessConfig {
    pub fn new(target_dim: usize, epsilon: f64) -> Result<Self> {
        if target_dim == 0 {
            return Err(config("target dimension must be at least 1"));
        }
        if !(epsilon.is_finite() && epsilon >= 0.0) {
            return Err(config("whitening regularizer must be non-negative"));
        }
        Ok(Self { target_dim, epsilon })
    }
}

fn unit_rows(rows: &mut [f64], d: usize, stage: &str) -> Result<()> {
    for (i, row) in rows.chunks_exact_mut(d).enumerate() {
        let len = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if len == 0.0 {
            return Err(domain(format!("row {i} has zero norm {stage}")));
        }
        row.iter_mut().for_each(|v| *v /= len);
    }
    Ok(())
}

/// Normalize rows, project the centred rows on the top-`q` principal
/// directions, whiten with `(lambda + epsilon)^(-1/2)` and normalize again.
pub fn spherical_normalize(points: &State, cfg: &PreprocessConfig) -> Result<State> {
    let (n, d, q) = (points.len(), points.dim(), cfg.target_dim);
    if q > d {
        return Err(config(format!("target dimension {q} exceeds input dimension {d}")));
    }
    if n < q {
        return Err(config(format!("need at least {q} points, got {n}")));
    }
    let mut y = points.as_flat().to_vec();
    unit_rows(&mut y, d, "in the input")?;

    let mut mean = vec![0.0; d];
    for row in y.chunks_exact(d) {
        mean.iter_mut().zip(row).for_each(|(m, v)| *m += v / n as f64);
    }
    y.chunks_exact_mut(d)
        .for_each(|row| row.iter_mut().zip(&mean).for_each(|(v, m)| *v -= m));
    let centred = DMatrix::from_row_slice(n, d, &y);
    let cov = centred.transpose() * &centred / n as f64;
    let eig = SymmetricEigen::new(cov);

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let top = &order[..q];
    let largest = eig.eigenvalues[order[0]].max(0.0);
    if largest == 0.0 {
        return Err(domain("all normalized rows are identical"));
    }
    let mut scales = Vec::with_capacity(q);
    for &c in top {
        let lambda = eig.eigenvalues[c].max(0.0);
        if cfg.epsilon == 0.0 && lambda <= 1e-12 * largest {
            return Err(Error::Singular(format!(
                "the top {q} principal directions span a rank-deficient subspace; use a positive whitening regularizer"
            )));
        }
        scales.push(1.0 / (lambda + cfg.epsilon).sqrt());
    }

    let basis: DMatrix<f64> = DMatrix::from_fn(d, q, |r, c| eig.eigenvectors[(r, top[c])]);
    let mut phi: Vec<f64> = Vec::with_capacity(n * q);
    let projected = centred * basis;
    for r in 0..n {
        for (c, s) in scales.iter().enumerate() {
            phi.push(projected[(r, c)] * s);
        }
    }
    unit_rows(&mut phi, q, "after projection")?;
    State::new(phi, q)
}

/// Refreshes scores after point `i` moved.
pub type ScoreRefresh<'a> = dyn FnMut(&State, usize, &mut ScoreMatrix) + 'a;

/// SMS where the drawn point `x_i` moves to the plain average of its `k`
/// best-scoring other points. Positions stay in the input space; scores are
/// static unless `refresh` is given. Stops by the same rule as `sms_run`.
pub fn knn_sms_run(
    points: &State,
    scores: &ScoreMatrix,
    k: usize,
    cfg: &AlgoConfig,
    opts: TraceOptions,
    mut refresh: Option<&mut ScoreRefresh<'_>>,
) -> Result<(State, RunTrace)> {
    let n = points.len();
    if scores.len() != n {
        return Err(Error::Shape {
            expected: n,
            actual: scores.len(),
        });
    }
    if k == 0 || k >= n {
        return Err(config(format!("k must lie in 1..={}, got {k}", n.saturating_sub(1))));
    }
    cfg.validate(n)?;
    let started = Instant::now();
    let opts = TraceOptions {
        objective: false,
        ..opts
    };
    let mut scores = scores.clone();
    let mut state = points.clone();
    let mut rng = RandomIndexStream::new(cfg.seed, n);
    let mut tracker = StopTracker::new(n, cfg.move_tolerance, cfg.sms_stop_fraction);
    let mut trace = TraceBuilder::new(opts, points, None);
    let d = state.dim();
    let mut buf = vec![0.0; d];
    let mut updates = 0u64;
    let reason = loop {
        if tracker.done() {
            break StopReason::Converged;
        }
        if updates >= cfg.max_updates {
            break StopReason::MaxUpdates;
        }
        if updates.is_multiple_of(1024) && timed_out(cfg, started) {
            break StopReason::TimeLimit;
        }
        let i = rng.next_index();
        buf.iter_mut().for_each(|v| *v = 0.0);
        for j in scores.top_k(i, k) {
            buf.iter_mut().zip(state.point(j)).for_each(|(b, x)| *b += x);
        }
        buf.iter_mut().for_each(|v| *v /= k as f64);
        let shift = squared_distance(state.point(i), &buf).sqrt();
        state.set_point(i, &buf);
        if let Some(f) = refresh.as_mut() {
            f(&state, i, &mut scores);
        }
        trace.push(updates, i, shift, None, &buf);
        updates += 1;
        tracker.observe(i, shift);
        trace.maybe_snapshot(updates, &state);
    };
    let trace = trace.finish(
        Algorithm::Sms,
        points.clone(),
        state.clone(),
        updates,
        0,
        0,
        started.elapsed(),
        reason,
    );
    Ok((state, trace))
}
