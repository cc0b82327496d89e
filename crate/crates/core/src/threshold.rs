//! Machine-precision evaluation of the optimal angular value function of the
//! scaled-rotation system under a threshold policy, and the fixed-point
//! solver for the switching angles `nu` and `omega`.
//!
//! Under the policy the closed loop on `R / pi Z` is the piecewise rotation
//!
//! ```text
//! theta -> theta + alpha   on (omega - pi, nu)
//! theta -> theta + beta    on [nu, omega)
//! ```
//!
//! and the value is the geometric orbit series
//! `Jt(theta) = sum_k rho^(2k) ct(theta_k)`. With `rho = 0.01` eight terms
//! already push the tail below `1e-35`.

use std::f64::consts::{FRAC_PI_2, PI};

use rayon::prelude::*;
use serde::Serialize;

use crate::angle::{lattice_offset, wrap_from};
use crate::bellman::{AngularValue, Objective};
use crate::construction::{ctilde, ctilde_derivative, RotationSystem};
use crate::error::{Error, Result};
use crate::lipschitz::value_lipschitz_constant;

pub const DEFAULT_DEPTH: usize = 8;
pub const DEFAULT_TOL: f64 = 1e-14;

/// Cost Lipschitz constant of `x1^2 + 2 x2^2` on the unit ball.
const COST_LIPSCHITZ: f64 = 4.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    /// Mode 0, rotation by `alpha`.
    Alpha,
    /// Mode 1, rotation by `beta`.
    Beta,
}

impl Branch {
    pub fn mode(self) -> usize {
        match self {
            Branch::Alpha => 0,
            Branch::Beta => 1,
        }
    }

    #[inline]
    pub fn counts(self) -> (i64, i64) {
        match self {
            Branch::Alpha => (1, 0),
            Branch::Beta => (0, 1),
        }
    }
}

/// Switching angles of the closed-loop mode map.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ThresholdPolicy {
    pub nu: f64,
    pub omega: f64,
}

impl ThresholdPolicy {
    pub fn new(nu: f64, omega: f64) -> Result<Self> {
        if !(omega - PI < nu && nu < omega) {
            return Err(Error::Domain(format!(
                "thresholds must satisfy omega - pi < nu < omega (nu = {nu}, omega = {omega})"
            )));
        }
        Ok(Self { nu, omega })
    }

    /// The policy centred on the windows of the construction,
    /// `(mu, mu + pi/2)`.
    pub fn centered(rot: &RotationSystem) -> Self {
        Self {
            nu: rot.mu,
            omega: rot.mu + FRAC_PI_2,
        }
    }

    /// Branch at `theta`: alpha on `(omega - pi, nu)`, beta on `[nu, omega)`,
    /// extended pi-periodically.
    #[inline]
    pub fn branch(&self, theta: f64) -> Branch {
        if wrap_from(theta, self.omega - PI) < self.nu {
            Branch::Alpha
        } else {
            Branch::Beta
        }
    }
}

/// Truncated orbit series.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SeriesEvaluation {
    pub value: f64,
    pub depth: usize,
    pub tail_bound: f64,
}

/// Bound on the neglected terms `k > depth`, using `ct <= 2`.
pub fn tail_bound(rho: f64, depth: usize) -> f64 {
    let r2 = rho * rho;
    r2.powi(depth as i32 + 1) * 2.0 / (1.0 - r2)
}

/// A point `base + p alpha + q beta` on the closed-loop orbit lattice.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LatticePoint {
    pub p: i64,
    pub q: i64,
}

impl LatticePoint {
    pub const ORIGIN: Self = Self { p: 0, q: 0 };

    #[inline]
    pub fn offset(self, rot: &RotationSystem) -> f64 {
        lattice_offset(self.p, rot.alpha, self.q, rot.beta)
    }

    #[inline]
    pub fn advance(self, b: Branch) -> Self {
        let (dp, dq) = b.counts();
        Self {
            p: self.p + dp,
            q: self.q + dq,
        }
    }

    #[inline]
    pub fn retreat(self, b: Branch) -> Self {
        let (dp, dq) = b.counts();
        Self {
            p: self.p - dp,
            q: self.q - dq,
        }
    }
}

/// Follows `depth` steps of the closed loop from `base + start`, letting
/// `choose(step, angle)` pick each branch. Returns the `depth + 1` visited
/// lattice points.
pub fn walk(
    rot: &RotationSystem,
    base: f64,
    start: LatticePoint,
    depth: usize,
    mut choose: impl FnMut(usize, f64) -> Branch,
) -> Vec<LatticePoint> {
    let mut pts = Vec::with_capacity(depth + 1);
    let mut cur = start;
    pts.push(cur);
    for step in 0..depth {
        let b = choose(step, base + cur.offset(rot));
        cur = cur.advance(b);
        pts.push(cur);
    }
    pts
}

/// `sum_k rho^(2k) f(theta_k)`, accumulated from the smallest term.
pub fn orbit_sum(
    rot: &RotationSystem,
    base: f64,
    pts: &[LatticePoint],
    f: impl Fn(f64) -> f64,
) -> f64 {
    let r2 = rot.rho_sq();
    let weights: Vec<f64> = pts
        .iter()
        .scan(1.0, |w, _| {
            let cur = *w;
            *w *= r2;
            Some(cur)
        })
        .collect();
    pts.iter()
        .zip(&weights)
        .rev()
        .map(|(pt, w)| w * f(base + pt.offset(rot)))
        .sum()
}

/// `Jt(theta)` under the policy, truncated after `depth` steps.
pub fn policy_value(
    theta: f64,
    policy: &ThresholdPolicy,
    rot: &RotationSystem,
    depth: usize,
) -> SeriesEvaluation {
    let pts = walk(rot, theta, LatticePoint::ORIGIN, depth, |_, t| policy.branch(t));
    SeriesEvaluation {
        value: orbit_sum(rot, theta, &pts, ctilde),
        depth,
        tail_bound: tail_bound(rot.rho, depth),
    }
}

/// Derivative of the policy series, valid where no orbit point sits on a
/// threshold.
pub fn policy_derivative(
    theta: f64,
    policy: &ThresholdPolicy,
    rot: &RotationSystem,
    depth: usize,
) -> f64 {
    let pts = walk(rot, theta, LatticePoint::ORIGIN, depth, |_, t| policy.branch(t));
    orbit_sum(rot, theta, &pts, ctilde_derivative)
}

/// `Jt(theta + alpha) - Jt(theta + beta)` under the policy.
pub fn delta_j(theta: f64, policy: &ThresholdPolicy, rot: &RotationSystem, depth: usize) -> f64 {
    policy_value(theta + rot.alpha, policy, rot, depth).value
        - policy_value(theta + rot.beta, policy, rot, depth).value
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ThresholdSolution {
    pub policy: ThresholdPolicy,
    /// Outer fixed-point sweeps.
    pub iterations: usize,
    /// `delta_j` at the returned `nu` and `omega`.
    pub residual_nu: f64,
    pub residual_omega: f64,
    pub tail_bound: f64,
}

/// Bisection for a sign change of `f` on `[lo, hi]`; `rising` selects
/// `f(lo) < 0 < f(hi)` versus the opposite.
fn bisect(mut lo: f64, mut hi: f64, tol: f64, rising: bool, f: impl Fn(f64) -> f64) -> Result<f64> {
    let sgn = if rising { 1.0 } else { -1.0 };
    let (flo, fhi) = (sgn * f(lo), sgn * f(hi));
    if !(flo < 0.0 && fhi > 0.0) {
        return Err(Error::ConstructionViolated(format!(
            "no sign change of delta J on [{lo}, {hi}] (values {}, {})",
            sgn * flo,
            sgn * fhi
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol || mid <= lo || mid >= hi {
            break;
        }
        if sgn * f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Self-consistent thresholds: starting from `(mu, mu + pi/2)`, alternately
/// bisect the zero of `delta_j` under the current policy in
/// `[mu - delta, mu + delta]` and `[mu + pi/2 - delta, mu + pi/2 + delta]`
/// until both angles move by less than `tol`.
pub fn solve_thresholds(rot: &RotationSystem, tol: f64, depth: usize) -> Result<ThresholdSolution> {
    if depth == 0 {
        return Err(Error::Domain("series depth must be at least 1".into()));
    }
    let m = value_lipschitz_constant(COST_LIPSCHITZ, rot.rho, 1.0)?;
    let margin = 0.019 - 2.0 * rot.rho_sq() * m;
    if margin <= 0.0 {
        return Err(Error::ConstructionViolated(format!(
            "rho = {} too large: 0.019 - 2 rho^2 M = {margin} <= 0",
            rot.rho
        )));
    }
    let tol = tol.max(0.0);
    let (d, mu) = (rot.delta, rot.mu);
    let mut policy = ThresholdPolicy::centered(rot);
    for it in 1..=64 {
        let nu = bisect(mu - d, mu + d, tol, true, |t| delta_j(t, &policy, rot, depth))?;
        let with_nu = ThresholdPolicy { nu, ..policy };
        let omega = bisect(mu + FRAC_PI_2 - d, mu + FRAC_PI_2 + d, tol, false, |t| {
            delta_j(t, &with_nu, rot, depth)
        })?;
        let moved = (nu - policy.nu).abs().max((omega - policy.omega).abs());
        policy = ThresholdPolicy::new(nu, omega)?;
        if moved < tol || (it > 1 && moved == 0.0) {
            return Ok(ThresholdSolution {
                policy,
                iterations: it,
                residual_nu: delta_j(nu, &policy, rot, depth),
                residual_omega: delta_j(omega, &policy, rot, depth),
                tail_bound: tail_bound(rot.rho, depth),
            });
        }
    }
    Err(Error::Convergence {
        iterations: 64,
        residual: delta_j(policy.nu, &policy, rot, depth).abs(),
    })
}

/// Pointwise `Jt*` samples.
pub fn optimal_profile_exact(
    rot: &RotationSystem,
    policy: &ThresholdPolicy,
    thetas: &[f64],
    depth: usize,
) -> Vec<f64> {
    thetas
        .par_iter()
        .map(|&t| policy_value(t, policy, rot, depth).value)
        .collect()
}

/// `3 / (1 - rho^2)`, the constant linking the worst-case and optimal profiles.
pub fn duality_constant(rot: &RotationSystem) -> f64 {
    3.0 / (1.0 - rot.rho_sq())
}

/// `Jt°(theta) = 3 / (1 - rho^2) - Jt*(theta + pi/2)`.
pub fn worst_case_profile(
    rot: &RotationSystem,
    policy: &ThresholdPolicy,
    thetas: &[f64],
    depth: usize,
) -> Vec<f64> {
    let k = duality_constant(rot);
    thetas
        .par_iter()
        .map(|&t| k - policy_value(t + FRAC_PI_2, policy, rot, depth).value)
        .collect()
}

/// Machine-precision angular value function of the construction.
#[derive(Clone, Copy, Debug)]
pub struct ExactValue {
    pub rot: RotationSystem,
    pub policy: ThresholdPolicy,
    pub objective: Objective,
    pub depth: usize,
}

impl ExactValue {
    pub fn optimal(rot: RotationSystem, policy: ThresholdPolicy) -> Self {
        Self {
            rot,
            policy,
            objective: Objective::Min,
            depth: DEFAULT_DEPTH,
        }
    }

    pub fn worst_case(rot: RotationSystem, policy: ThresholdPolicy) -> Self {
        Self {
            objective: Objective::Max,
            ..Self::optimal(rot, policy)
        }
    }

    /// Solves the thresholds with default settings.
    pub fn solve(rot: RotationSystem, objective: Objective) -> Result<Self> {
        let sol = solve_thresholds(&rot, DEFAULT_TOL, DEFAULT_DEPTH)?;
        Ok(Self {
            objective,
            ..Self::optimal(rot, sol.policy)
        })
    }

    pub fn tail_bound(&self) -> f64 {
        tail_bound(self.rot.rho, self.depth)
    }
}

impl AngularValue for ExactValue {
    fn angular(&self, theta: f64) -> f64 {
        match self.objective {
            Objective::Min => policy_value(theta, &self.policy, &self.rot, self.depth).value,
            Objective::Max => {
                duality_constant(&self.rot)
                    - policy_value(theta + FRAC_PI_2, &self.policy, &self.rot, self.depth).value
            }
        }
    }
}

/// One row of the angular overview table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProfileRow {
    pub theta: f64,
    pub ctilde: f64,
    pub jstar: f64,
    pub jworst: f64,
    pub delta_jstar: f64,
}

/// Rows at `theta_j = pi (2j - points) / points`, `j = 0..points`, covering
/// `[-pi, pi)` and containing `theta = 0` exactly.
pub fn profile_table(
    rot: &RotationSystem,
    policy: &ThresholdPolicy,
    points: usize,
    depth: usize,
) -> Result<Vec<ProfileRow>> {
    if points < 2 {
        return Err(Error::Input("profile needs at least two points".into()));
    }
    let c = duality_constant(rot);
    Ok((0..points)
        .into_par_iter()
        .map(|j| {
            let theta = PI * (2.0 * j as f64 - points as f64) / points as f64;
            ProfileRow {
                theta,
                ctilde: ctilde(theta),
                jstar: policy_value(theta, policy, rot, depth).value,
                jworst: c - policy_value(theta + FRAC_PI_2, policy, rot, depth).value,
                delta_jstar: delta_j(theta, policy, rot, depth),
            }
        })
        .collect())
}
