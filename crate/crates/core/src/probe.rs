//! Non-differentiability certification and empirical checks of the value
//! function properties.
//!
//! One-sided derivatives are obtained by differentiating the policy orbit
//! series term by term. At `theta = T^-k nu` the orbit reaches `nu` exactly
//! after `k` steps (the start is built from lattice offsets), and the two
//! sides of the kink differ only in the branch taken there: the left limit
//! follows `alpha`, the right limit `beta`. Every earlier term is shared, so
//! the gap is `rho^(2k)` times the gap at `nu` itself.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::angle::circular_distance_pi;
use crate::bellman::{lift_value, AngularValue, Objective};
use crate::construction::{ctilde, ctilde_derivative, ctilde_difference, RotationSystem};
use crate::error::{Error, Result};
use crate::iem::IemMap;
use crate::lipschitz::value_lipschitz_constant;
use crate::threshold::{delta_j, walk, Branch, LatticePoint, ThresholdPolicy};

/// Kinks whose predicted gap is below this multiple of machine epsilon
/// (relative to the derivative magnitude) are flagged.
pub const FLOOR_FACTOR: f64 = 100.0;
/// Free-angle probes closer than this to a threshold raise a precision error.
pub const BREAKPOINT_GUARD: f64 = 1e-12;
/// Step of the finite-difference confirmation.
pub const FD_STEP: f64 = 1e-5;
/// Deepest kink that receives a finite-difference confirmation.
pub const FD_MAX_DEPTH: usize = 2;
/// Extra series terms beyond the kink depth.
pub const MIN_EXTRA_TERMS: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Series,
    FiniteDifference,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KinkReport {
    /// Angle of the probe.
    pub location: f64,
    /// `k` when `location = T^-k nu`; `None` for a free angle.
    pub depth: Option<usize>,
    pub left_derivative: f64,
    pub right_derivative: f64,
    /// `D+ - D-`, accumulated term by term so it stays accurate even when
    /// it is far below the resolution of the two derivatives themselves.
    pub gap: f64,
    /// Closed form `rho^(2k+2) (ct'(nu + beta) - ct'(nu + alpha))`.
    pub predicted_gap: f64,
    pub method: Method,
    /// Richardson-extrapolated second difference of the value series.
    pub fd_gap: Option<f64>,
    /// `|fd_gap - gap| <= 0.1 |gap|`.
    pub fd_confirmed: Option<bool>,
    pub below_floating_floor: bool,
}

/// The point `T^-k nu` as a lattice offset from `nu`, with the branches that
/// lead forward from it back to `nu`.
fn orbit_start(
    policy: &ThresholdPolicy,
    rot: &RotationSystem,
    k: usize,
) -> Result<(LatticePoint, Vec<Branch>)> {
    if k == 0 {
        return Ok((LatticePoint::ORIGIN, Vec::new()));
    }
    let iem = IemMap::from_rotation(rot, policy.nu)?;
    let orbit = iem.backward_orbit(policy.nu, k)?;
    let forward = orbit.branches.iter().rev().copied().collect();
    Ok((orbit.offsets[k - 1], forward))
}

fn side_path(
    policy: &ThresholdPolicy,
    rot: &RotationSystem,
    start: LatticePoint,
    prefix: &[Branch],
    side: Side,
    depth: usize,
) -> Vec<LatticePoint> {
    let k = prefix.len();
    walk(rot, policy.nu, start, depth, |step, t| {
        if step < k {
            prefix[step]
        } else if step == k {
            match side {
                Side::Left => Branch::Alpha,
                Side::Right => Branch::Beta,
            }
        } else {
            policy.branch(t)
        }
    })
}

fn check_depth(k: usize, depth: usize) -> Result<()> {
    if depth < k + MIN_EXTRA_TERMS {
        return Err(Error::Precision(format!(
            "series depth {depth} < {} would mask the kink at orbit depth {k}",
            k + MIN_EXTRA_TERMS
        )));
    }
    Ok(())
}

fn weights(rho: f64, n: usize) -> Vec<f64> {
    let r2 = rho * rho;
    (0..n).scan(1.0, |w, _| {
        let cur = *w;
        *w *= r2;
        Some(cur)
    })
    .collect()
}

/// One-sided derivative of `Jt*` at `T^-k nu`.
pub fn one_sided_derivative(
    k: usize,
    side: Side,
    policy: &ThresholdPolicy,
    rot: &RotationSystem,
    depth: usize,
) -> Result<f64> {
    check_depth(k, depth)?;
    let (start, prefix) = orbit_start(policy, rot, k)?;
    let pts = side_path(policy, rot, start, &prefix, side, depth);
    Ok(crate::threshold::orbit_sum(rot, policy.nu, &pts, ctilde_derivative))
}

/// One-sided derivative at an arbitrary angle. Both sides follow the policy;
/// an orbit point within [`BREAKPOINT_GUARD`] of a threshold is reported as
/// a precision error because the side cannot be resolved numerically.
pub fn one_sided_derivative_at(
    theta: f64,
    _side: Side,
    policy: &ThresholdPolicy,
    rot: &RotationSystem,
    depth: usize,
) -> Result<f64> {
    let mut hit = None;
    let pts = walk(rot, theta, LatticePoint::ORIGIN, depth, |step, t| {
        if hit.is_none()
            && (circular_distance_pi(t, policy.nu) <= BREAKPOINT_GUARD
                || circular_distance_pi(t, policy.omega) <= BREAKPOINT_GUARD)
        {
            hit = Some(step);
        }
        policy.branch(t)
    });
    if let Some(step) = hit {
        return Err(Error::Precision(format!(
            "orbit of {theta} passes within {BREAKPOINT_GUARD:e} of a threshold at step {step}"
        )));
    }
    Ok(crate::threshold::orbit_sum(rot, theta, &pts, ctilde_derivative))
}

/// Leading-order kink gap at depth `k`; exact for this construction because
/// both one-sided orbits meet again at `nu + alpha + beta`.
pub fn predicted_gap(policy: &ThresholdPolicy, rot: &RotationSystem, k: usize) -> f64 {
    let nu = policy.nu;
    rot.rho_sq().powi(k as i32 + 1)
        * (ctilde_derivative(nu + rot.beta) - ctilde_derivative(nu + rot.alpha))
}

/// Term-wise `D+ - D-` at `T^-k nu`.
fn series_gap(
    policy: &ThresholdPolicy,
    rot: &RotationSystem,
    left: &[LatticePoint],
    right: &[LatticePoint],
) -> f64 {
    let w = weights(rot.rho, left.len());
    let nu = policy.nu;
    left.iter()
        .zip(right)
        .zip(&w)
        .rev()
        .map(|((l, r), w)| {
            if l == r {
                return 0.0;
            }
            let diff = LatticePoint {
                p: r.p - l.p,
                q: r.q - l.q,
            }
            .offset(rot);
            let sum = 2.0 * nu + l.offset(rot) + r.offset(rot);
            // sin 2a - sin 2b = 2 cos(a + b) sin(a - b)
            w * 2.0 * sum.cos() * diff.sin()
        })
        .sum()
}

/// `V(theta0 + h) - V(theta0)` for `theta0 = nu + start`, summed term by term
/// using `ct(a) - ct(b) = sin(a + b) sin(a - b)`.
fn value_increment(
    policy: &ThresholdPolicy,
    rot: &RotationSystem,
    start: LatticePoint,
    h: f64,
    depth: usize,
) -> f64 {
    let nu = policy.nu;
    let shifted = walk(rot, nu, start, depth, |_, t| policy.branch(t + h));
    let center = walk(rot, nu, start, depth, |_, t| policy.branch(t));
    let w = weights(rot.rho, depth + 1);
    shifted
        .iter()
        .zip(&center)
        .zip(&w)
        .rev()
        .map(|((a, b), w)| {
            let lattice_diff = LatticePoint {
                p: a.p - b.p,
                q: a.q - b.q,
            }
            .offset(rot);
            let minus = h + lattice_diff;
            let plus = 2.0 * nu + h + a.offset(rot) + b.offset(rot);
            w * ctilde_difference(plus, minus)
        })
        .sum()
}

/// Richardson-extrapolated symmetric second difference
/// `(V(t+h) - 2 V(t) + V(t-h)) / h`, which tends to `D+ - D-`.
fn finite_difference_gap(
    policy: &ThresholdPolicy,
    rot: &RotationSystem,
    start: LatticePoint,
    h: f64,
    depth: usize,
) -> f64 {
    let s = |h: f64| {
        (value_increment(policy, rot, start, h, depth) + value_increment(policy, rot, start, -h, depth)) / h
    };
    2.0 * s(0.5 * h) - s(h)
}

/// Series kink report at `T^-k nu`.
pub fn kink_at_depth(
    k: usize,
    policy: &ThresholdPolicy,
    rot: &RotationSystem,
    depth: usize,
) -> Result<KinkReport> {
    check_depth(k, depth)?;
    let (start, prefix) = orbit_start(policy, rot, k)?;
    let left = side_path(policy, rot, start, &prefix, Side::Left, depth);
    let right = side_path(policy, rot, start, &prefix, Side::Right, depth);
    let d_minus = crate::threshold::orbit_sum(rot, policy.nu, &left, ctilde_derivative);
    let d_plus = crate::threshold::orbit_sum(rot, policy.nu, &right, ctilde_derivative);
    let gap = series_gap(policy, rot, &left, &right);
    let predicted = predicted_gap(policy, rot, k);
    let scale = d_minus.abs().max(d_plus.abs()).max(1.0);
    let below = predicted.abs() < FLOOR_FACTOR * f64::EPSILON * scale;
    let (fd_gap, fd_confirmed) = if k <= FD_MAX_DEPTH {
        let fd = finite_difference_gap(policy, rot, start, FD_STEP, depth);
        (Some(fd), Some((fd - gap).abs() <= 0.1 * gap.abs()))
    } else {
        (None, None)
    };
    Ok(KinkReport {
        location: policy.nu + start.offset(rot),
        depth: Some(k),
        left_derivative: d_minus,
        right_derivative: d_plus,
        gap,
        predicted_gap: predicted,
        method: Method::Series,
        fd_gap,
        fd_confirmed,
        below_floating_floor: below,
    })
}

/// Kink reports for `k = 0..=max_depth`.
pub fn kink_ladder(
    policy: &ThresholdPolicy,
    rot: &RotationSystem,
    max_depth: usize,
) -> Result<Vec<KinkReport>> {
    let depth = max_depth + 2 * MIN_EXTRA_TERMS;
    (0..=max_depth)
        .into_par_iter()
        .map(|k| kink_at_depth(k, policy, rot, depth))
        .collect()
}

/// Report at an angle away from the backward orbit of `nu`.
pub fn probe_free_angle(
    theta: f64,
    policy: &ThresholdPolicy,
    rot: &RotationSystem,
    depth: usize,
) -> Result<KinkReport> {
    let d_minus = one_sided_derivative_at(theta, Side::Left, policy, rot, depth)?;
    let d_plus = one_sided_derivative_at(theta, Side::Right, policy, rot, depth)?;
    Ok(KinkReport {
        location: theta,
        depth: None,
        left_derivative: d_minus,
        right_derivative: d_plus,
        gap: d_plus - d_minus,
        predicted_gap: 0.0,
        method: Method::Series,
        fd_gap: None,
        fd_confirmed: None,
        below_floating_floor: false,
    })
}

/// Minimum distance of the policy orbit of `theta` (steps `0..=depth`) from
/// either threshold, modulo pi.
pub fn breakpoint_distance(
    theta: f64,
    policy: &ThresholdPolicy,
    rot: &RotationSystem,
    depth: usize,
) -> f64 {
    let mut best = f64::INFINITY;
    let pts = walk(rot, theta, LatticePoint::ORIGIN, depth, |_, t| policy.branch(t));
    for pt in pts {
        let t = theta + pt.offset(rot);
        best = best
            .min(circular_distance_pi(t, policy.nu))
            .min(circular_distance_pi(t, policy.omega));
    }
    best
}

fn unit_ball_point(rng: &mut ChaCha8Rng, radius: f64) -> [f64; 2] {
    let r = radius * rng.random::<f64>().sqrt();
    let a = rng.random_range(0.0..2.0 * PI);
    [r * a.cos(), r * a.sin()]
}

/// Largest difference quotient `|J(x) - J(y)| / |x - y|` over `samples`
/// pairs in the ball of radius `radius`. Half the pairs are independent, the
/// other half are within `1e-3` of each other to probe local slopes.
pub fn empirical_lipschitz<V: AngularValue + ?Sized>(
    value: &V,
    radius: f64,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    if samples < 2 {
        return Err(Error::Input("need at least two samples".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs: Vec<([f64; 2], [f64; 2])> = (0..samples)
        .map(|i| {
            let x = unit_ball_point(&mut rng, radius);
            let y = if i % 2 == 0 {
                unit_ball_point(&mut rng, radius)
            } else {
                let a = rng.random_range(0.0..2.0 * PI);
                let mut y = [x[0] + 1e-3 * a.cos(), x[1] + 1e-3 * a.sin()];
                let n = y[0].hypot(y[1]);
                if n > radius {
                    y = [y[0] * radius / n, y[1] * radius / n];
                }
                y
            };
            (x, y)
        })
        .collect();
    pairs
        .par_iter()
        .map(|(x, y)| {
            let d = (x[0] - y[0]).hypot(x[1] - y[1]);
            if d == 0.0 {
                return Ok(0.0);
            }
            Ok((lift_value(value, x, None)? - lift_value(value, y, None)?).abs() / d)
        })
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))
}

/// Largest relative violation `|J(lx) - l^2 J(x)| / (1 + l^2 J(x))` over
/// random `l in [-10, 10]` and `x` in the unit ball.
pub fn homogeneity_check<V: AngularValue + ?Sized>(value: &V, samples: usize, seed: u64) -> Result<f64> {
    if samples < 1 {
        return Err(Error::Input("need at least one sample".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws: Vec<(f64, [f64; 2])> = (0..samples)
        .map(|_| (rng.random_range(-10.0..=10.0), unit_ball_point(&mut rng, 1.0)))
        .collect();
    draws
        .par_iter()
        .map(|(l, x)| homogeneity_violation(value, *l, x))
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))
}

pub fn homogeneity_violation<V: AngularValue + ?Sized>(value: &V, lambda: f64, x: &[f64; 2]) -> Result<f64> {
    let jx = lift_value(value, x, None)?;
    let jlx = lift_value(value, &[lambda * x[0], lambda * x[1]], None)?;
    let target = lambda * lambda * jx;
    Ok((jlx - target).abs() / (1.0 + target))
}

/// `sup |Jt(t) - ct(t) - rho^2 opt(Jt(t + alpha), Jt(t + beta))|` over
/// `num_samples` uniform angles in `[0, pi)`.
pub fn bellman_residual_sup<V: AngularValue + ?Sized>(
    value: &V,
    rot: &RotationSystem,
    objective: Objective,
    num_samples: usize,
) -> f64 {
    let r2 = rot.rho_sq();
    (0..num_samples)
        .into_par_iter()
        .map(|i| {
            let t = PI * i as f64 / num_samples as f64;
            let a = value.angular(t + rot.alpha);
            let b = value.angular(t + rot.beta);
            let opt = match objective {
                Objective::Min => a.min(b),
                Objective::Max => a.max(b),
            };
            (value.angular(t) - ctilde(t) - r2 * opt).abs()
        })
        .reduce(|| 0.0, f64::max)
}

/// Sign and monotonicity structure of `delta_j` around the thresholds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SignStructure {
    /// `max delta_j` on `S- = [mu - pi/2 + delta, mu - delta]`.
    pub s_minus_max: f64,
    /// `min delta_j` on `S+ = [mu + delta, mu + pi/2 - delta]`.
    pub s_plus_min: f64,
    /// Smallest `(dJ(t2) - dJ(t1)) / ((1 - rho^2 M)(t2 - t1))` on `[mu - delta, mu + delta]`.
    pub increase_ratio: f64,
    /// Largest such ratio on `[mu + pi/2 - delta, mu + pi/2 + delta]`.
    pub decrease_ratio: f64,
    /// `delta_j < 0` everywhere sampled in `(omega - pi, nu)`.
    pub negative_before_nu: bool,
    /// `delta_j > 0` everywhere sampled in `(nu, omega)`.
    pub positive_after_nu: bool,
}

impl SignStructure {
    pub fn passes(&self) -> bool {
        self.s_minus_max < -0.018
            && self.s_plus_min > 0.018
            && self.increase_ratio >= 1.0 - 1e-3
            && self.decrease_ratio <= -(1.0 - 1e-3)
            && self.negative_before_nu
            && self.positive_after_nu
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

pub fn sign_structure(
    policy: &ThresholdPolicy,
    rot: &RotationSystem,
    samples: usize,
    depth: usize,
) -> Result<SignStructure> {
    let samples = samples.max(2);
    let m = value_lipschitz_constant(4.0, rot.rho, 1.0)?;
    let slope = 1.0 - rot.rho_sq() * m;
    let (mu, d) = (rot.mu, rot.delta);
    let dj = |ts: &[f64]| -> Vec<f64> { ts.par_iter().map(|&t| delta_j(t, policy, rot, depth)).collect() };

    let s_minus = dj(&linspace(mu - PI / 2.0 + d, mu - d, samples));
    let s_plus = dj(&linspace(mu + d, mu + PI / 2.0 - d, samples));
    let ratios = |ts: &[f64]| -> Vec<f64> {
        let v = dj(ts);
        ts.windows(2)
            .zip(v.windows(2))
            .map(|(t, v)| (v[1] - v[0]) / (slope * (t[1] - t[0])))
            .collect()
    };
    let inc = ratios(&linspace(mu - d, mu + d, samples));
    let dec = ratios(&linspace(mu + PI / 2.0 - d, mu + PI / 2.0 + d, samples));
    let before = dj(&linspace(policy.omega - PI + 1e-6, policy.nu - 1e-6, samples));
    let after = dj(&linspace(policy.nu + 1e-6, policy.omega - 1e-6, samples));
    Ok(SignStructure {
        s_minus_max: s_minus.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        s_plus_min: s_plus.iter().copied().fold(f64::INFINITY, f64::min),
        increase_ratio: inc.iter().copied().fold(f64::INFINITY, f64::min),
        decrease_ratio: dec.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        negative_before_nu: before.iter().all(|&v| v < 0.0),
        positive_after_nu: after.iter().all(|&v| v > 0.0),
    })
}
