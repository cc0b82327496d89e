//! Angular dynamic programming for planar switched systems with homogeneous
//! degree-2 costs.
//!
//! Homogeneity gives `J(r x(theta)) = r^2 Jt(theta)` and `J(-x) = J(x)`, so
//! the value function is determined by a pi-periodic profile `Jt`. Writing
//! `A_i x(theta) = ± s_i(theta) x(phi_i(theta))`, the Bellman equations
//! become
//!
//! ```text
//! Jt(theta) = ct(theta) + opt_i s_i(theta)^2 Jt(phi_i(theta))
//! ```
//!
//! which is solved on a uniform grid of `[0, pi)` with linear interpolation.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::angle::{polar_mod_pi, unit, wrap_pi};
use crate::construction::is_hat_form;
use crate::error::{Error, Result};
use crate::fmt17;
use crate::model::{QuadraticCost, SwitchedSystem};

pub const DEFAULT_GRID: usize = 65_536;
pub const MAX_GRID: usize = 1 << 24;
pub const MIN_GRID: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    /// Controlled switching: optimal value `J*`.
    Min,
    /// Arbitrary switching: worst-case value `J°`.
    Max,
}

impl Objective {
    /// Index of the optimizing candidate, ties to the lowest index.
    #[inline]
    pub fn select(self, candidates: impl IntoIterator<Item = f64>) -> (usize, f64) {
        let mut best = (usize::MAX, f64::NAN);
        for (i, v) in candidates.into_iter().enumerate() {
            let better = match self {
                Objective::Min => v < best.1,
                Objective::Max => v > best.1,
            };
            if best.0 == usize::MAX || better {
                best = (i, v);
            }
        }
        best
    }
}

/// Anything that can be evaluated as a pi-periodic angular value function.
pub trait AngularValue: Sync {
    fn angular(&self, theta: f64) -> f64;
}

impl<F: Fn(f64) -> f64 + Sync> AngularValue for F {
    fn angular(&self, theta: f64) -> f64 {
        self(theta)
    }
}

/// Grid samples `v_j = Jt(j pi / N)` with linear interpolation on the
/// wrapped grid.
#[derive(Clone, Debug, PartialEq)]
pub struct AngularProfile {
    values: Vec<f64>,
}

impl AngularProfile {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Input("profile needs at least one grid point".into()));
        }
        if let Some((j, v)) = values.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::Input(format!("profile value {v} at index {j} is not a finite nonnegative number")));
        }
        Ok(Self { values })
    }

    pub fn constant(n: usize, v: f64) -> Result<Self> {
        Self::new(vec![v; n])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn step(&self) -> f64 {
        PI / self.values.len() as f64
    }

    pub fn theta(&self, j: usize) -> f64 {
        grid_theta(j, self.values.len())
    }

    pub fn eval(&self, theta: f64) -> f64 {
        let n = self.values.len();
        let t = wrap_pi(theta) * (n as f64 / PI);
        let j = (t.floor() as usize).min(n - 1);
        let f = (t - j as f64).clamp(0.0, 1.0);
        let a = self.values[j];
        let b = self.values[(j + 1) % n];
        a + f * (b - a)
    }

    pub fn sup_distance(&self, other: &AngularProfile) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Largest slope between adjacent grid points, wrapping around.
    pub fn max_adjacent_slope(&self) -> f64 {
        let n = self.values.len();
        let h = self.step();
        (0..n)
            .map(|j| (self.values[(j + 1) % n] - self.values[j]).abs() / h)
            .fold(0.0, f64::max)
    }
}

impl AngularValue for AngularProfile {
    fn angular(&self, theta: f64) -> f64 {
        self.eval(theta)
    }
}

#[inline]
pub fn grid_theta(j: usize, n: usize) -> f64 {
    j as f64 * PI / n as f64
}

/// Linear interpolation error of an `M`-Lipschitz profile on an `N`-point grid.
pub fn interpolation_error_bound(lipschitz: f64, n: usize) -> f64 {
    lipschitz * (PI / n as f64) / 2.0
}

/// Per mode: `s_i(theta) = |A_i x(theta)|` and the image angle mod pi.
#[derive(Clone, Debug, PartialEq)]
pub struct AngularModeMap {
    pub scale: Vec<f64>,
    pub angle: Vec<f64>,
}

fn require_planar(sys: &SwitchedSystem, what: &'static str) -> Result<()> {
    if sys.dim() != 2 {
        return Err(Error::UnsupportedDimension {
            what,
            expected: 2,
            found: sys.dim(),
        });
    }
    Ok(())
}

pub fn angular_mode_maps(sys: &SwitchedSystem, theta: f64) -> Result<AngularModeMap> {
    require_planar(sys, "angular_mode_maps")?;
    let x = unit(theta);
    let (scale, angle) = sys
        .modes()
        .iter()
        .map(|a| {
            let y = a.matvec(&x);
            polar_mod_pi([y[0], y[1]])
        })
        .unzip();
    Ok(AngularModeMap { scale, angle })
}

/// Angular Bellman operator with the mode maps precomputed on a grid.
#[derive(Clone, Debug)]
pub struct AngularOperator {
    n: usize,
    modes: usize,
    cost: Vec<f64>,
    /// `(s_i^2, phi_i)` for grid point `j` and mode `i` at `j * modes + i`.
    maps: Vec<(f64, f64)>,
    gamma: f64,
}

impl AngularOperator {
    pub fn new(sys: &SwitchedSystem, cost: &QuadraticCost, n: usize) -> Result<Self> {
        require_planar(sys, "angular Bellman operator")?;
        if cost.dim() != 2 {
            return Err(Error::Input("cost dimension must match the planar system".into()));
        }
        if !(MIN_GRID..=MAX_GRID).contains(&n) {
            return Err(Error::Input(format!(
                "grid size {n} outside [{MIN_GRID}, {MAX_GRID}]"
            )));
        }
        let m = sys.num_modes();
        let rows: Vec<(f64, Vec<(f64, f64)>)> = (0..n)
            .into_par_iter()
            .map(|j| {
                let theta = grid_theta(j, n);
                let c = cost.eval(&unit(theta));
                let map = angular_mode_maps(sys, theta).expect("planar checked");
                let per_mode = map.scale.iter().zip(&map.angle).map(|(s, a)| (s * s, *a)).collect();
                (c, per_mode)
            })
            .collect();
        let mut costs = Vec::with_capacity(n);
        let mut maps = Vec::with_capacity(n * m);
        for (c, per_mode) in rows {
            costs.push(c);
            maps.extend(per_mode);
        }
        let gamma = maps.iter().map(|(s2, _)| *s2).fold(0.0, f64::max);
        Ok(Self {
            n,
            modes: m,
            cost: costs,
            maps,
            gamma,
        })
    }

    pub fn grid(&self) -> usize {
        self.n
    }

    /// `max_{theta, i} s_i(theta)^2` over the grid.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn cost_samples(&self) -> &[f64] {
        &self.cost
    }

    fn candidates<'a>(&'a self, p: &'a AngularProfile, j: usize) -> impl Iterator<Item = f64> + 'a {
        self.maps[j * self.modes..(j + 1) * self.modes]
            .iter()
            .map(move |(s2, phi)| s2 * p.eval(*phi))
    }

    fn check_grid(&self, p: &AngularProfile) -> Result<()> {
        if p.len() != self.n {
            return Err(Error::Input(format!(
                "profile has {} points, operator grid has {}",
                p.len(),
                self.n
            )));
        }
        Ok(())
    }

    pub fn apply(&self, p: &AngularProfile, objective: Objective) -> Result<AngularProfile> {
        self.check_grid(p)?;
        let values = (0..self.n)
            .into_par_iter()
            .map(|j| self.cost[j] + objective.select(self.candidates(p, j)).1)
            .collect();
        AngularProfile::new(values)
    }

    pub fn policy(&self, p: &AngularProfile, objective: Objective) -> Result<Vec<usize>> {
        self.check_grid(p)?;
        Ok((0..self.n)
            .into_par_iter()
            .map(|j| objective.select(self.candidates(p, j)).0)
            .collect())
    }
}

/// One application of the angular Bellman operator on the profile's grid.
pub fn bellman_apply(
    profile: &AngularProfile,
    sys: &SwitchedSystem,
    cost: &QuadraticCost,
    objective: Objective,
) -> Result<AngularProfile> {
    AngularOperator::new(sys, cost, profile.len())?.apply(profile, objective)
}

/// Optimizing mode (0-based) at each grid point, ties to the lowest index.
pub fn extract_policy(
    profile: &AngularProfile,
    sys: &SwitchedSystem,
    cost: &QuadraticCost,
    objective: Objective,
) -> Result<Vec<usize>> {
    AngularOperator::new(sys, cost, profile.len())?.policy(profile, objective)
}

/// Finite-horizon truncation for systems whose angular maps do not contract
/// in the Euclidean norm. `constant` and `rate` must satisfy
/// `|xi(t)| <= constant * rate^t |xi(0)|` (e.g. from a jsr upper bound).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FiniteHorizon {
    pub steps: usize,
    pub constant: f64,
    pub rate: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterationOptions {
    pub grid: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub horizon: Option<FiniteHorizon>,
}

impl Default for IterationOptions {
    fn default() -> Self {
        Self {
            grid: DEFAULT_GRID,
            tol: 1e-12,
            max_iter: 1000,
            horizon: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IterationReport {
    pub iterations: usize,
    /// Sup-norm of the last Bellman update.
    pub residual: f64,
    pub gamma: f64,
    /// Distance of the returned profile to the grid fixed point
    /// (`residual * gamma / (1 - gamma)`), or the tail bound of a
    /// finite-horizon run. `None` when neither is available.
    pub error_bound: Option<f64>,
    pub finite_horizon: bool,
}

/// Value iteration from the zero profile.
pub fn value_iterate(
    sys: &SwitchedSystem,
    cost: &QuadraticCost,
    objective: Objective,
    opts: &IterationOptions,
) -> Result<(AngularProfile, IterationReport)> {
    let op = AngularOperator::new(sys, cost, opts.grid)?;
    value_iterate_with(&op, objective, opts)
}

pub fn value_iterate_with(
    op: &AngularOperator,
    objective: Objective,
    opts: &IterationOptions,
) -> Result<(AngularProfile, IterationReport)> {
    let gamma = op.gamma();
    let mut p = AngularProfile::constant(op.grid(), 0.0)?;

    if let Some(h) = opts.horizon {
        if !(h.rate < 1.0 && h.rate >= 0.0 && h.constant >= 1.0) {
            return Err(Error::Stability { gamma });
        }
        let mut residual = 0.0;
        for _ in 0..h.steps {
            let next = op.apply(&p, objective)?;
            residual = next.sup_distance(&p);
            p = next;
        }
        let cmax = op.cost_samples().iter().copied().fold(0.0, f64::max);
        let r2 = h.rate * h.rate;
        let tail = cmax * h.constant * h.constant * r2.powi(h.steps as i32) / (1.0 - r2);
        return Ok((
            p,
            IterationReport {
                iterations: h.steps,
                residual,
                gamma,
                error_bound: Some(tail),
                finite_horizon: true,
            },
        ));
    }

    if gamma >= 1.0 {
        return Err(Error::Stability { gamma });
    }
    let mut residual = f64::INFINITY;
    for it in 1..=opts.max_iter {
        let next = op.apply(&p, objective)?;
        residual = next.sup_distance(&p);
        p = next;
        if residual <= opts.tol {
            return Ok((
                p,
                IterationReport {
                    iterations: it,
                    residual,
                    gamma,
                    error_bound: Some(residual * gamma / (1.0 - gamma)),
                    finite_horizon: false,
                },
            ));
        }
    }
    Err(Error::Convergence {
        iterations: opts.max_iter,
        residual,
    })
}

/// `J(x) = |p|^2 Jt(angle(p))` with `p = (x1, x2)`. With `embedding` set, `x`
/// is a state of that zero-padded system and only its first two coordinates
/// matter.
pub fn lift_value<V: AngularValue + ?Sized>(
    value: &V,
    x: &[f64],
    embedding: Option<&SwitchedSystem>,
) -> Result<f64> {
    match embedding {
        None if x.len() != 2 => {
            return Err(Error::UnsupportedDimension {
                what: "lift_value without embedding",
                expected: 2,
                found: x.len(),
            })
        }
        Some(sys) => {
            if !is_hat_form(sys) {
                return Err(Error::Structural(
                    "embedding requested but the system is not zero-padded planar".into(),
                ));
            }
            if x.len() != sys.dim() {
                return Err(Error::Input(format!(
                    "state has {} coordinates, system dimension is {}",
                    x.len(),
                    sys.dim()
                )));
            }
        }
        None => {}
    }
    let r2 = x[0] * x[0] + x[1] * x[1];
    if r2 == 0.0 {
        return Ok(0.0);
    }
    Ok(r2 * value.angular(x[1].atan2(x[0])))
}

/// CSV with header `theta,value,mode`, one row per grid point.
pub fn profile_csv(profile: &AngularProfile, policy: &[usize]) -> String {
    let mut out = String::from("theta,value,mode\n");
    for (j, v) in profile.values().iter().enumerate() {
        let mode = policy.get(j).copied().unwrap_or(0);
        writeln!(out, "{},{},{mode}", fmt17::format(profile.theta(j)), fmt17::format(*v))
            .expect("write to String");
    }
    out
}
