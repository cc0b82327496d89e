//! The verification battery run by `swival verify`.
//!
//! Each check produces one row with a pass flag and a short measurement
//! summary; the battery never stops early so every row is reported.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::angle::circular_distance_pi;
use crate::bellman::{lift_value, value_iterate, AngularValue, IterationOptions, Objective};
use crate::construction::{
    build_irrational_variant, build_rational_variant, ctilde, embed, Construction, RotationSystem,
};
use crate::error::Result;
use crate::iem::{gap_statistics, IemMap};
use crate::jsr::jsr_bounds;
use crate::lipschitz::value_lipschitz_constant;
use crate::model::simulate_trajectory;
use crate::probe::{bellman_residual_sup, empirical_lipschitz, homogeneity_check, kink_ladder, sign_structure};
use crate::threshold::{
    duality_constant, policy_value, profile_table, solve_thresholds, Branch, ExactValue,
    ThresholdPolicy, DEFAULT_DEPTH, DEFAULT_TOL,
};

pub const SEED: u64 = 42;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckRow {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckRow {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.to_string(),
            passed,
            detail,
        }
    }

    fn from_result(name: &str, r: Result<(bool, String)>) -> Self {
        match r {
            Ok((passed, detail)) => Self::new(name, passed, detail),
            Err(e) => Self::new(name, false, format!("error: {e}")),
        }
    }
}

/// Formats rows as an aligned text table.
pub fn render_table(rows: &[CheckRow]) -> String {
    let w = rows.iter().map(|r| r.name.len()).max().unwrap_or(4).max(5);
    let mut out = format!("{:<w$}  result  detail\n", "check");
    for r in rows {
        let flag = if r.passed { "PASS" } else { "FAIL" };
        out.push_str(&format!("{:<w$}  {flag:<6}  {}\n", r.name, r.detail));
    }
    out
}

/// Truncated cost `sum_{t=0}^{len} rho^(2t) ct(theta_t)` of a switching prefix.
pub fn prefix_cost(theta: f64, rot: &RotationSystem, prefix: &[Branch]) -> f64 {
    let r2 = rot.rho_sq();
    let mut angles = Vec::with_capacity(prefix.len() + 1);
    let mut t = theta;
    angles.push(t);
    for b in prefix {
        t += match b {
            Branch::Alpha => rot.alpha,
            Branch::Beta => rot.beta,
        };
        angles.push(t);
    }
    let mut w = r2.powi(prefix.len() as i32);
    let mut total = 0.0;
    for a in angles.iter().rev() {
        total += w * ctilde(*a);
        w /= r2;
    }
    total
}

/// Minimum truncated cost over all `2^depth` prefixes and the minimizing
/// prefix (first in lexicographic order with `alpha < beta`).
pub fn brute_force_minimum(theta: f64, rot: &RotationSystem, depth: usize) -> (f64, Vec<Branch>) {
    let decode = |code: usize| -> Vec<Branch> {
        (0..depth)
            .map(|i| {
                if code >> (depth - 1 - i) & 1 == 0 {
                    Branch::Alpha
                } else {
                    Branch::Beta
                }
            })
            .collect()
    };
    let mut best = (f64::INFINITY, Vec::new());
    for code in 0..1usize << depth {
        let p = decode(code);
        let c = prefix_cost(theta, rot, &p);
        if c < best.0 {
            best = (c, p);
        }
    }
    best
}

/// Branches the threshold policy takes in the first `depth` steps from `theta`.
pub fn policy_prefix(theta: f64, policy: &ThresholdPolicy, rot: &RotationSystem, depth: usize) -> Vec<Branch> {
    let mut t = theta;
    (0..depth)
        .map(|_| {
            let b = policy.branch(t);
            t += match b {
                Branch::Alpha => rot.alpha,
                Branch::Beta => rot.beta,
            };
            b
        })
        .collect()
}

fn uniform_angles(n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * (i as f64 + 0.5) / n as f64).collect()
}

fn check_jsr() -> Result<(bool, String)> {
    let variants = [build_rational_variant(), build_irrational_variant(0.6)?];
    let mut worst: f64 = 0.0;
    for c in &variants {
        let b = jsr_bounds(&c.system, 3)?;
        worst = worst.max((b.lower - 0.01).abs()).max((b.upper - 0.01).abs());
    }
    Ok((worst <= 1e-10, format!("max |bound - 0.01| = {worst:.3e}")))
}

fn check_lipschitz(v: &ExactValue) -> Result<(bool, String)> {
    let m = value_lipschitz_constant(4.0, v.rot.rho, 1.0)?;
    let emp = empirical_lipschitz(v, 1.0, 100_000, SEED)?;
    let bound = m * (1.0 + 1e-2);
    Ok((emp <= bound, format!("empirical {emp:.6} <= {bound:.6}")))
}

fn check_homogeneity(v: &ExactValue) -> Result<(bool, String)> {
    let h = homogeneity_check(v, 10_000, SEED)?;
    Ok((h <= 1e-12, format!("max relative violation {h:.3e}")))
}

fn check_delta_ctilde(rot: &RotationSystem) -> (bool, String) {
    let dev = uniform_angles(10_000, -PI, PI)
        .into_iter()
        .map(|t| (rot.delta_ctilde(t) - (2.0 * (t - rot.mu)).sin()).abs())
        .fold(0.0, f64::max);
    (dev <= 1e-12, format!("max deviation {dev:.3e}"))
}

fn check_sign(rot: &RotationSystem, policy: &ThresholdPolicy) -> Result<(bool, String)> {
    let s = sign_structure(policy, rot, 10_000, DEFAULT_DEPTH)?;
    Ok((
        s.passes(),
        format!(
            "S- max {:.5}, S+ min {:.5}, increase ratio {:.6}, decrease ratio {:.6}",
            s.s_minus_max, s.s_plus_min, s.increase_ratio, s.decrease_ratio
        ),
    ))
}

fn check_thresholds(rot: &RotationSystem) -> Result<(bool, String)> {
    let sol = solve_thresholds(rot, DEFAULT_TOL, DEFAULT_DEPTH)?;
    let p = sol.policy;
    let ok = (p.nu - rot.mu).abs() < rot.delta
        && (p.omega - rot.mu - FRAC_PI_2).abs() < rot.delta
        && sol.residual_nu.abs() <= 1e-13;
    Ok((
        ok,
        format!(
            "nu - mu = {:.3e}, omega - mu - pi/2 = {:.3e}, residual {:.3e}",
            p.nu - rot.mu,
            p.omega - rot.mu - FRAC_PI_2,
            sol.residual_nu
        ),
    ))
}

fn grid_agreement(c: &Construction, exact: &ExactValue, objective: Objective) -> Result<(f64, f64, f64)> {
    let opts = IterationOptions::default();
    let (profile, report) = value_iterate(&c.system, &c.cost, objective, &opts)?;
    let m = value_lipschitz_constant(4.0, c.rotation.rho, 1.0)?;
    let bound = m * PI / opts.grid as f64;
    let diff = uniform_angles(10_000, 0.0, PI)
        .par_iter()
        .map(|&t| (profile.eval(t) - exact.angular(t)).abs())
        .reduce(|| 0.0, f64::max);
    Ok((report.residual, diff, bound))
}

fn check_bellman(c: &Construction, exact: &ExactValue) -> Result<(bool, String)> {
    let res = bellman_residual_sup(exact, &c.rotation, Objective::Min, 100_000);
    let (grid_res, diff, bound) = grid_agreement(c, exact, Objective::Min)?;
    Ok((
        res <= 1e-13 && grid_res <= 1e-12 && diff <= bound,
        format!("exact residual {res:.3e}, grid residual {grid_res:.3e}, grid vs exact {diff:.3e} <= {bound:.3e}"),
    ))
}

fn check_duality(c: &Construction, policy: &ThresholdPolicy) -> Result<(bool, String)> {
    let rot = &c.rotation;
    let worst = ExactValue::worst_case(*rot, *policy);
    let k = duality_constant(rot);
    let dev = uniform_angles(10_000, -PI, PI)
        .par_iter()
        .map(|&t| {
            let js = policy_value(t + FRAC_PI_2, policy, rot, DEFAULT_DEPTH).value;
            (worst.angular(t) + js - k).abs()
        })
        .reduce(|| 0.0, f64::max);
    let max_res = bellman_residual_sup(&worst, rot, Objective::Max, 100_000);
    let (_, diff, bound) = grid_agreement(c, &worst, Objective::Max)?;
    Ok((
        dev <= 1e-12 && max_res <= 1e-13 && diff <= bound,
        format!("identity {dev:.3e}, max residual {max_res:.3e}, grid vs exact {diff:.3e} <= {bound:.3e}"),
    ))
}

fn check_kinks(rot: &RotationSystem, policy: &ThresholdPolicy) -> Result<(bool, String)> {
    let ladder = kink_ladder(policy, rot, 4)?;
    let r2 = rot.rho_sq();
    let g: Vec<f64> = ladder.iter().map(|k| k.gap).collect();
    let ratio_ok = (0..2).all(|k| ((g[k + 1] / g[k]) / r2 - 1.0).abs() <= 1e-3);
    let fd_ok = ladder[..2].iter().all(|k| k.fd_confirmed == Some(true));
    let floor_ok = ladder[4].below_floating_floor;
    Ok((
        g[0].abs() >= r2 && ratio_ok && fd_ok && floor_ok,
        format!(
            "gap(0) {:.6e}, gap(1)/gap(0) {:.6e}, gap(2)/gap(1) {:.6e}, depth 4 flagged {floor_ok}",
            g[0],
            g[1] / g[0],
            g[2] / g[1]
        ),
    ))
}

fn check_orbit(rot: &RotationSystem, policy: &ThresholdPolicy) -> Result<(bool, String)> {
    let iem = IemMap::from_rotation(rot, policy.nu)?;
    let n = 10_000;
    let conj = (0..n)
        .map(|i| iem.lower() + iem.length() * i as f64 / n as f64)
        .all(|t| iem.conjugacy_check(t));
    let orbit = iem.backward_orbit(policy.nu, n)?;
    let stats = gap_statistics(&orbit)?;
    let dist = orbit.min_distance_to_nu();
    let max_allowed = 10.0 * FRAC_PI_2 / n as f64;
    Ok((
        conj && stats.max_gap < max_allowed && stats.distinct_count() <= 3 && dist > 1e-9,
        format!(
            "conjugacy {conj}, max gap {:.3e} < {max_allowed:.3e}, {} distinct gaps, min distance to nu {dist:.3e}",
            stats.max_gap,
            stats.distinct_count()
        ),
    ))
}

fn check_brute_force(rot: &RotationSystem, policy: &ThresholdPolicy) -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let thetas: Vec<f64> = (0..100).map(|_| rng.random_range(-PI..PI)).collect();
    let (floor_gap, attain_gap) = thetas
        .par_iter()
        .map(|&t| {
            let (min, _) = brute_force_minimum(t, rot, 8);
            let j = policy_value(t, policy, rot, 8).value;
            let own = prefix_cost(t, rot, &policy_prefix(t, policy, rot, 8));
            (j - min, own - min)
        })
        .reduce(|| (f64::NEG_INFINITY, f64::NEG_INFINITY), |a, b| (a.0.max(b.0), a.1.max(b.1)));
    (
        floor_gap <= 1e-13 && attain_gap <= 1e-15,
        format!("max J - min {floor_gap:.3e}, policy prefix excess {attain_gap:.3e}"),
    )
}

fn check_embedding(c: &Construction, exact: &ExactValue) -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for n in [3, 5] {
        let (sys, cost) = embed(&c.system, &c.cost, n)?;
        let mut rng = ChaCha8Rng::seed_from_u64(SEED + n as u64);
        for _ in 0..1000 {
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let lifted = lift_value(exact, &x, Some(&sys))?;
            let planar = lift_value(exact, &x[..2], None)?;
            // closed loop on the embedded system
            let mut state = x.clone();
            let mut signal = Vec::with_capacity(DEFAULT_DEPTH);
            for _ in 0..DEFAULT_DEPTH {
                let mode = exact.policy.branch(state[1].atan2(state[0])).mode();
                signal.push(mode);
                state = sys.mode(mode)?.matvec(&state);
            }
            let sim = simulate_trajectory(&sys, &cost, &x, &signal, DEFAULT_DEPTH)?.total_cost();
            worst = worst.max((lifted - planar).abs()).max((sim - planar).abs());
        }
    }
    Ok((worst <= 1e-12, format!("max deviation {worst:.3e} over n = 3, 5")))
}

fn check_figures() -> Result<(bool, String)> {
    let c = build_irrational_variant(0.6)?;
    let rot = c.rotation;
    let policy = solve_thresholds(&rot, DEFAULT_TOL, DEFAULT_DEPTH)?.policy;
    let rows = profile_table(&rot, &policy, 1000, DEFAULT_DEPTH)?;
    let step = 2.0 * PI / 1000.0;
    let (cmin, cmax) = rows
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), r| (a.min(r.ctilde), b.max(r.ctilde)));
    let range_ok = cmin >= 1.0 && cmax <= 2.0 && cmin < 1.0 + 1e-4 && cmax > 2.0 - 1e-4;
    let crossings: Vec<f64> = rows
        .windows(2)
        .filter(|w| (w[0].delta_jstar < 0.0) != (w[1].delta_jstar < 0.0))
        .map(|w| 0.5 * (w[0].theta + w[1].theta))
        .collect();
    let near = |t: f64, a: f64| circular_distance_pi(t, a) <= step;
    let crossings_ok = crossings.len() == 4
        && crossings.iter().all(|&t| near(t, policy.nu) || near(t, policy.omega))
        && crossings.iter().any(|&t| near(t, policy.nu))
        && crossings.iter().any(|&t| near(t, policy.omega));

    let iem = IemMap::new(0.1, 0.6, 0.6 - FRAC_PI_2)?;
    let orbit = iem.backward_orbit(0.1, 15)?;
    let first_ok = (orbit.points[0] + 0.5).abs() <= 1e-15;
    let inside = orbit.points.iter().all(|&t| iem.contains(t));
    Ok((
        range_ok && crossings_ok && first_ok && inside,
        format!(
            "ctilde range [{cmin:.6}, {cmax:.6}], {} sign changes, orbit first point {:.17}, all in I {inside}",
            crossings.len(),
            orbit.points[0]
        ),
    ))
}

/// The full battery on the given construction. Checks that concern the
/// two fixed reference systems (jsr of both variants, figure data at
/// `alpha = 0.6`) ignore `c`.
pub fn full_battery(c: &Construction) -> Vec<CheckRow> {
    let rot = c.rotation;
    let policy = match solve_thresholds(&rot, DEFAULT_TOL, DEFAULT_DEPTH) {
        Ok(s) => s.policy,
        Err(e) => {
            return vec![CheckRow::new("thresholds", false, format!("error: {e}"))];
        }
    };
    let exact = ExactValue::optimal(rot, policy);
    vec![
        CheckRow::from_result("jsr", check_jsr()),
        CheckRow::from_result("lipschitz", check_lipschitz(&exact)),
        CheckRow::from_result("homogeneity", check_homogeneity(&exact)),
        {
            let (p, d) = check_delta_ctilde(&rot);
            CheckRow::new("delta-cost", p, d)
        },
        CheckRow::from_result("sign-structure", check_sign(&rot, &policy)),
        CheckRow::from_result("thresholds", check_thresholds(&rot)),
        CheckRow::from_result("bellman", check_bellman(c, &exact)),
        CheckRow::from_result("duality", check_duality(c, &policy)),
        CheckRow::from_result("kinks", check_kinks(&rot, &policy)),
        CheckRow::from_result("orbit", check_orbit(&rot, &policy)),
        {
            let (p, d) = check_brute_force(&rot, &policy);
            CheckRow::new("brute-force", p, d)
        },
        CheckRow::from_result("embedding", check_embedding(c, &exact)),
        CheckRow::from_result("figures", check_figures()),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prefix_cost_of_empty_prefix() {
        let rot = build_rational_variant().rotation;
        assert_eq!(prefix_cost(0.3, &rot, &[]), ctilde(0.3));
    }

    #[test]
    fn brute_force_picks_cheaper_first_step() {
        let rot = build_rational_variant().rotation;
        let (min, p) = brute_force_minimum(0.0, &rot, 1);
        let a = prefix_cost(0.0, &rot, &[Branch::Alpha]);
        let b = prefix_cost(0.0, &rot, &[Branch::Beta]);
        assert_eq!(min, a.min(b));
        assert_eq!(p[0], if a <= b { Branch::Alpha } else { Branch::Beta });
    }

    #[test]
    fn table_rendering() {
        let rows = vec![CheckRow::new("a", true, "x".into()), CheckRow::new("long-name", false, "y".into())];
        let t = render_table(&rows);
        assert!(t.contains("PASS"));
        assert!(t.lines().nth(2).unwrap().starts_with("long-name  FAIL"));
    }
}
