//! Switched linear systems, quadratic state costs and trajectory simulation.

use std::fmt;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Tolerance used for symmetry and semidefiniteness checks on cost matrices.
pub const COST_TOL: f64 = 1e-12;

/// Dense row-major real matrix.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn diag(d: &[f64]) -> Self {
        let n = d.len();
        let mut m = Self::zeros(n, n);
        for (i, &v) in d.iter().enumerate() {
            m.data[i * n + i] = v;
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Input(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from a list of rows; all rows must have equal length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Input("ragged matrix rows".into()));
        }
        Self::from_row_major(r, c, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.cols.max(1)).map(<[f64]>::to_vec).collect()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn matmul(&self, rhs: &Matrix) -> Self {
        assert_eq!(self.cols, rhs.rows, "matmul dimension mismatch");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..rhs.cols {
                    out.data[i * rhs.cols + j] += a * rhs.get(k, j);
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, x.len(), "matvec dimension mismatch");
        self.data
            .chunks(self.cols)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Largest entrywise absolute difference; `None` when shapes differ.
    pub fn max_abs_diff(&self, other: &Matrix) -> Option<f64> {
        if self.rows != other.rows || self.cols != other.cols {
            return None;
        }
        Some(
            self.data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max),
        )
    }

    pub(crate) fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.to_rows()).finish()
    }
}

/// Mode matrices `A_1, ..., A_m` of `x(t+1) = A_{sigma(t)} x(t)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SwitchedSystem {
    dim: usize,
    modes: Vec<Matrix>,
}

impl SwitchedSystem {
    pub fn new(modes: Vec<Matrix>) -> Result<Self> {
        let first = modes
            .first()
            .ok_or_else(|| Error::Input("a switched system needs at least one mode".into()))?;
        let dim = first.rows();
        if dim == 0 {
            return Err(Error::Input("state dimension must be positive".into()));
        }
        for (i, m) in modes.iter().enumerate() {
            if !m.is_square() || m.rows() != dim {
                return Err(Error::Input(format!(
                    "mode {i} is {}x{}, expected {dim}x{dim}",
                    m.rows(),
                    m.cols()
                )));
            }
            if m.as_slice().iter().any(|v| !v.is_finite()) {
                return Err(Error::Input(format!("mode {i} has non-finite entries")));
            }
        }
        Ok(Self { dim, modes })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_modes(&self) -> usize {
        self.modes.len()
    }

    pub fn modes(&self) -> &[Matrix] {
        &self.modes
    }

    pub fn mode(&self, i: usize) -> Result<&Matrix> {
        self.modes.get(i).ok_or_else(|| {
            Error::Input(format!(
                "mode index {i} out of range (system has {} modes)",
                self.modes.len()
            ))
        })
    }
}

/// Homogeneous degree-2 cost `c(x) = x^T Q x` with `Q` symmetric PSD.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticCost {
    q: Matrix,
}

impl QuadraticCost {
    pub fn new(q: Matrix) -> Result<Self> {
        if !q.is_square() || q.rows() == 0 {
            return Err(Error::Input("cost matrix must be square and nonempty".into()));
        }
        let n = q.rows();
        for i in 0..n {
            for j in 0..i {
                if (q.get(i, j) - q.get(j, i)).abs() > COST_TOL {
                    return Err(Error::Input(format!(
                        "cost matrix not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        if q.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("cost matrix has non-finite entries".into()));
        }
        let lmin = crate::jsr::symmetric_eigenvalues(&q)
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        if lmin < -COST_TOL {
            return Err(Error::Input(format!(
                "cost matrix not positive semidefinite (smallest eigenvalue {lmin:e})"
            )));
        }
        Ok(Self { q })
    }

    pub fn diag(d: &[f64]) -> Result<Self> {
        Self::new(Matrix::diag(d))
    }

    pub fn dim(&self) -> usize {
        self.q.rows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.q
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let n = self.dim();
        debug_assert_eq!(x.len(), n);
        let mut acc = 0.0;
        for i in 0..n {
            let mut row = 0.0;
            for j in 0..n {
                row += self.q.get(i, j) * x[j];
            }
            acc += x[i] * row;
        }
        // PSD rounding can produce -0 or a tiny negative value.
        acc.max(0.0)
    }

    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        Self::new(self.q.scale(lambda))
    }

    /// Largest eigenvalue of `Q`.
    pub fn max_eigenvalue(&self) -> f64 {
        crate::jsr::symmetric_eigenvalues(&self.q)
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// States and running cost along a finite prefix of a switching signal.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRecord {
    pub initial: Vec<f64>,
    pub signal: Vec<usize>,
    /// `states[t]` is `xi(t)`, `t = 0..=T`.
    pub states: Vec<Vec<f64>>,
    /// `running_cost[t] = sum_{s <= t} c(xi(s))`.
    pub running_cost: Vec<f64>,
}

impl TrajectoryRecord {
    pub fn total_cost(&self) -> f64 {
        *self.running_cost.last().expect("trajectory has at least one state")
    }
}

/// Simulates `horizon` steps of the system driven by `signal` (0-based mode
/// indices; only the first `horizon` entries are used).
pub fn simulate_trajectory(
    sys: &SwitchedSystem,
    cost: &QuadraticCost,
    x: &[f64],
    signal: &[usize],
    horizon: usize,
) -> Result<TrajectoryRecord> {
    let n = sys.dim();
    if x.len() != n || cost.dim() != n {
        return Err(Error::Input(format!(
            "dimension mismatch: system n={n}, state {}, cost {}",
            x.len(),
            cost.dim()
        )));
    }
    if signal.len() < horizon {
        return Err(Error::Input(format!(
            "signal has {} entries, horizon {horizon} needs that many",
            signal.len()
        )));
    }
    let signal = &signal[..horizon];
    let mut states = Vec::with_capacity(horizon + 1);
    let mut running = Vec::with_capacity(horizon + 1);
    let mut state = x.to_vec();
    let mut total = cost.eval(&state);
    states.push(state.clone());
    running.push(total);
    for &i in signal {
        state = sys.mode(i)?.matvec(&state);
        total += cost.eval(&state);
        states.push(state.clone());
        running.push(total);
    }
    Ok(TrajectoryRecord {
        initial: x.to_vec(),
        signal: signal.to_vec(),
        states,
        running_cost: running,
    })
}
