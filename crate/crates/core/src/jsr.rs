//! Brute-force joint spectral radius bounds and spectral helpers.
//!
//! For products of length `l` the classical three-member inequality gives
//!
//! ```text
//! max_P rho(P)^(1/l) <= jsr <= max_P ||P||^(1/l)
//! ```
//!
//! so the best lower bound is the max over all explored lengths and the best
//! upper bound the min over lengths.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Matrix, SwitchedSystem};

/// Upper limit on the number of products enumerated by [`jsr_bounds`].
pub const MAX_PRODUCTS: u64 = 1_000_000;

/// Entrywise tolerance for the scaled-isometry check `A^T A = rho^2 I`.
pub const ISOMETRY_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct JsrBounds {
    pub lower: f64,
    pub upper: f64,
    pub depth: usize,
}

impl JsrBounds {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Eigenvalues of a symmetric matrix, closed form for `n <= 2`.
pub fn symmetric_eigenvalues(m: &Matrix) -> Vec<f64> {
    match m.rows() {
        1 => vec![m.get(0, 0)],
        2 => {
            let (a, b, d) = (m.get(0, 0), 0.5 * (m.get(0, 1) + m.get(1, 0)), m.get(1, 1));
            let mean = 0.5 * (a + d);
            let r = (0.5 * (a - d)).hypot(b);
            vec![mean - r, mean + r]
        }
        _ => m.to_nalgebra().symmetric_eigenvalues().iter().copied().collect(),
    }
}

/// Largest eigenvalue modulus.
pub fn spectral_radius(m: &Matrix) -> f64 {
    match m.rows() {
        1 => m.get(0, 0).abs(),
        2 => {
            let (a, b, c, d) = (m.get(0, 0), m.get(0, 1), m.get(1, 0), m.get(1, 1));
            let half_tr = 0.5 * (a + d);
            let det = a * d - b * c;
            let disc = half_tr * half_tr - det;
            if disc >= 0.0 {
                let s = disc.sqrt();
                (half_tr + s).abs().max((half_tr - s).abs())
            } else {
                // complex pair, |lambda|^2 = det
                det.max(0.0).sqrt()
            }
        }
        _ => m
            .to_nalgebra()
            .complex_eigenvalues()
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max),
    }
}

/// Induced Euclidean norm, `sqrt(lambda_max(P^T P))`.
pub fn induced_norm(m: &Matrix) -> f64 {
    let gram = m.transpose().matmul(m);
    symmetric_eigenvalues(&gram)
        .into_iter()
        .fold(0.0, f64::max)
        .max(0.0)
        .sqrt()
}

fn product_count(modes: usize, depth: usize) -> u64 {
    let m = modes as u64;
    let mut total: u64 = 0;
    let mut level: u64 = 1;
    for _ in 0..depth {
        level = level.saturating_mul(m);
        total = total.saturating_add(level);
    }
    total
}

/// Bounds on the joint spectral radius from all products of length `<= depth`.
pub fn jsr_bounds(sys: &SwitchedSystem, depth: usize) -> Result<JsrBounds> {
    if depth == 0 {
        return Err(Error::Domain("jsr depth must be at least 1".into()));
    }
    let count = product_count(sys.num_modes(), depth);
    if count > MAX_PRODUCTS {
        return Err(Error::Resource(format!(
            "depth {depth} with {} modes enumerates {count} products (limit {MAX_PRODUCTS}); reduce the depth",
            sys.num_modes()
        )));
    }
    let mut lower = 0.0_f64;
    let mut upper = f64::INFINITY;
    let mut level: Vec<Matrix> = sys.modes().to_vec();
    for len in 1..=depth {
        let inv = 1.0 / len as f64;
        let mut max_norm = 0.0_f64;
        for p in &level {
            lower = lower.max(spectral_radius(p).powf(inv));
            max_norm = max_norm.max(induced_norm(p));
        }
        upper = upper.min(max_norm.powf(inv));
        if len < depth {
            level = level
                .iter()
                .flat_map(|p| sys.modes().iter().map(move |a| a.matmul(p)))
                .collect();
        }
    }
    Ok(JsrBounds {
        lower,
        upper,
        depth,
    })
}

/// Per mode: whether `A^T A = rho^2 I` entrywise within [`ISOMETRY_TOL`].
pub fn verify_scaled_isometry(sys: &SwitchedSystem, rho: f64) -> Vec<bool> {
    let target = Matrix::identity(sys.dim()).scale(rho * rho);
    sys.modes()
        .iter()
        .map(|a| {
            a.transpose()
                .matmul(a)
                .max_abs_diff(&target)
                .is_some_and(|d| d <= ISOMETRY_TOL)
        })
        .collect()
}
