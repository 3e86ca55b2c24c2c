//! Temporal association between two spike trains.
//!
//! Turn differences become association strengths through an exponential
//! kernel, and a warping-style dynamic program accumulates the strongest
//! monotone alignment. The borders of the accumulation are plain running
//! sums; the interior takes the best of the three predecessors. The final
//! cell is squashed with a logistic sigmoid.

use crate::error::{Error, Result};
use crate::memory::SpikeTrain;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Wraps row-major `data`. Panics if the length is not `rows * cols`.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length");
        Self { rows, cols, data }
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// Builds a matrix from nested rows. Panics on ragged input.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged matrix");
        Self {
            rows: rows.len(),
            cols,
            data: rows.concat(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    /// Bottom-right entry.
    pub fn last(&self) -> f64 {
        self.data[self.data.len() - 1]
    }

    /// Entries in row-major order.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.cols).map(<[f64]>::to_vec).collect()
    }
}

/// Scalars used by the temporal association.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemporalParams {
    pub t_scale: f64,
    pub tau_scale: f64,
    /// Only the trailing `window` events of each train take part.
    pub window: Option<usize>,
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// `D(i, j) = t_scale * |t_a[i] - t_b[j]|`.
pub fn distance_matrix(a: &SpikeTrain, b: &SpikeTrain, t_scale: f64) -> Result<Matrix> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyTrain);
    }
    let (ta, tb) = (a.events(), b.events());
    Ok(Matrix::from_fn(ta.len(), tb.len(), |i, j| {
        t_scale * ta[i].turn.abs_diff(tb[j].turn) as f64
    }))
}

fn effective_tau(tau_a: f64, tau_b: f64, tau_scale: f64) -> Result<f64> {
    for t in [tau_a, tau_b] {
        if t.is_nan() || t <= 0.0 {
            return Err(Error::NonPositiveTau(t));
        }
    }
    let tau = tau_scale * 0.5 * (tau_a + tau_b);
    if tau.is_nan() || tau <= 0.0 {
        return Err(Error::NonPositiveTau(tau));
    }
    Ok(tau)
}

/// `W(i, j) = exp(-D(i, j) / tau_bar)` with `tau_bar = tau_scale * (tau_a + tau_b) / 2`.
pub fn strength_matrix(d: &Matrix, tau_a: f64, tau_b: f64, tau_scale: f64) -> Result<Matrix> {
    let tau = effective_tau(tau_a, tau_b, tau_scale)?;
    Ok(Matrix::from_fn(d.rows, d.cols, |i, j| (-d.get(i, j) / tau).exp()))
}

/// Cumulative association matrix.
pub fn cumulative_matrix(w: &Matrix) -> Matrix {
    let (n, m) = (w.rows, w.cols);
    assert!(n > 0 && m > 0, "cumulative matrix needs a non-empty input");
    // Filled in place: each cell still holds its strength when visited.
    let mut data = w.data.clone();
    for j in 1..m {
        data[j] += data[j - 1];
    }
    for i in 1..n {
        let (done, rest) = data.split_at_mut(i * m);
        let prev = &done[(i - 1) * m..];
        let row = &mut rest[..m];
        row[0] += prev[0];
        for j in 1..m {
            row[j] += larger(larger(prev[j], row[j - 1]), prev[j - 1]);
        }
    }
    Matrix { rows: n, cols: m, data }
}

// Strengths are never NaN, so the NaN handling of `f64::max` is not needed.
fn larger(a: f64, b: f64) -> f64 {
    if b > a {
        b
    } else {
        a
    }
}

/// Final cumulative score `L(n, m)` computed with a single rolling row.
///
/// Bit-identical to `cumulative_matrix(..).last()` for the same strengths.
pub fn cumulative_score(
    a: &SpikeTrain,
    tau_a: f64,
    b: &SpikeTrain,
    tau_b: f64,
    params: &TemporalParams,
) -> Result<f64> {
    let (ea, eb) = (a.tail(params.window), b.tail(params.window));
    if ea.is_empty() || eb.is_empty() {
        return Err(Error::EmptyTrain);
    }
    let tau = effective_tau(tau_a, tau_b, params.tau_scale)?;
    let strength = |i: usize, j: usize| {
        let d = params.t_scale * ea[i].turn.abs_diff(eb[j].turn) as f64;
        (-d / tau).exp()
    };

    let m = eb.len();
    let mut row = Vec::with_capacity(m);
    row.push(strength(0, 0));
    for j in 1..m {
        row.push(row[j - 1] + strength(0, j));
    }
    for i in 1..ea.len() {
        let mut diag = row[0];
        row[0] += strength(i, 0);
        for j in 1..m {
            let up = row[j];
            let best = up.max(row[j - 1]).max(diag);
            diag = up;
            row[j] = strength(i, j) + best;
        }
    }
    Ok(row[m - 1])
}

/// Temporal association score `sigmoid(L(n, m))`, in `[0.5, 1)`. The lower
/// end is reached only when every strength underflows to zero.
pub fn t_score(
    a: &SpikeTrain,
    tau_a: f64,
    b: &SpikeTrain,
    tau_b: f64,
    params: &TemporalParams,
) -> Result<f64> {
    cumulative_score(a, tau_a, b, tau_b, params).map(sigmoid)
}
