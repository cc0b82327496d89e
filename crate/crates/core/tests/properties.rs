mod common;

use std::f64::consts::{FRAC_PI_2, PI};

use proptest::prelude::*;
use swival::bellman::{lift_value, AngularOperator, AngularProfile};
use swival::construction::{build_irrational_variant, build_rational_variant, ctilde, scaled_rotation};
use swival::iem::IemMap;
use swival::jsr::jsr_bounds;
use swival::model::{Matrix, QuadraticCost, SwitchedSystem};
use swival::threshold::{policy_value, solve_thresholds, ExactValue, DEFAULT_DEPTH, DEFAULT_TOL};
use swival::Objective;

const GRID: usize = 256;

fn operator() -> AngularOperator {
    let c = build_rational_variant();
    AngularOperator::new(&c.system, &c.cost, GRID).unwrap()
}

fn profile_strategy() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0..5.0f64, GRID)
}

fn small_system() -> impl Strategy<Value = SwitchedSystem> {
    prop::collection::vec(prop::collection::vec(-1.0..1.0f64, 4), 1..=3).prop_map(|ms| {
        SwitchedSystem::new(
            ms.into_iter()
                .map(|d| Matrix::from_row_major(2, 2, d).unwrap())
                .collect(),
        )
        .unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bellman_is_monotone(p in profile_strategy(), bump in prop::collection::vec(0.0..1.0f64, GRID)) {
        let op = operator();
        let q: Vec<f64> = p.iter().zip(&bump).map(|(a, b)| a + b).collect();
        let (p, q) = (AngularProfile::new(p).unwrap(), AngularProfile::new(q).unwrap());
        for obj in [Objective::Min, Objective::Max] {
            let (tp, tq) = (op.apply(&p, obj).unwrap(), op.apply(&q, obj).unwrap());
            for (a, b) in tp.values().iter().zip(tq.values()) {
                prop_assert!(a <= b);
            }
        }
    }

    #[test]
    fn bellman_contracts(p in profile_strategy(), q in profile_strategy()) {
        let op = operator();
        let (p, q) = (AngularProfile::new(p).unwrap(), AngularProfile::new(q).unwrap());
        for obj in [Objective::Min, Objective::Max] {
            let d = op.apply(&p, obj).unwrap().sup_distance(&op.apply(&q, obj).unwrap());
            prop_assert!(d <= op.gamma() * p.sup_distance(&q) * (1.0 + 1e-12) + 1e-15);
        }
    }

    #[test]
    fn min_never_exceeds_max(p in profile_strategy()) {
        let op = operator();
        let p = AngularProfile::new(p).unwrap();
        let lo = op.apply(&p, Objective::Min).unwrap();
        let hi = op.apply(&p, Objective::Max).unwrap();
        for (a, b) in lo.values().iter().zip(hi.values()) {
            prop_assert!(a <= b);
        }
    }

    #[test]
    fn policy_invariant_under_cost_scaling(p in profile_strategy(), s in 0.1..10.0f64) {
        let c = build_rational_variant();
        let op = AngularOperator::new(&c.system, &c.cost, GRID).unwrap();
        let scaled_cost = c.cost.scaled(s).unwrap();
        let ops = AngularOperator::new(&c.system, &scaled_cost, GRID).unwrap();
        let p = AngularProfile::new(p).unwrap();
        let ps = AngularProfile::new(p.values().iter().map(|v| v * s).collect()).unwrap();
        let a = op.policy(&p, Objective::Min).unwrap();
        let b = ops.policy(&ps, Objective::Min).unwrap();
        let ta = op.apply(&p, Objective::Min).unwrap();
        // ties can resolve differently after rounding; compare only clear decisions
        let maps: Vec<_> = (0..GRID).map(|j| swival::bellman::angular_mode_maps(&c.system, ta.theta(j)).unwrap()).collect();
        for j in 0..GRID {
            let v: Vec<f64> = maps[j].scale.iter().zip(&maps[j].angle).map(|(s2, t)| s2 * p.eval(*t)).collect();
            if (v[0] - v[1]).abs() > 1e-9 * v[0].abs().max(v[1].abs()).max(1e-300) {
                prop_assert_eq!(a[j], b[j]);
            }
        }
    }

    #[test]
    fn jsr_bounds_bracket_and_tighten(sys in small_system()) {
        let b1 = jsr_bounds(&sys, 1).unwrap();
        let b3 = jsr_bounds(&sys, 3).unwrap();
        prop_assert!(b1.lower <= b1.upper * (1.0 + 1e-12) + 1e-15);
        prop_assert!(b3.lower <= b3.upper * (1.0 + 1e-12) + 1e-15);
        prop_assert!(b3.lower >= b1.lower - 1e-15);
        prop_assert!(b3.upper <= b1.upper + 1e-15);
    }

    #[test]
    fn scaled_rotations_have_exact_jsr(alpha in 0.4..1.17f64, rho in 0.01..0.99f64) {
        let sys = SwitchedSystem::new(vec![scaled_rotation(rho, alpha), scaled_rotation(rho, alpha - FRAC_PI_2)]).unwrap();
        let b = jsr_bounds(&sys, 2).unwrap();
        prop_assert!((b.lower - rho).abs() <= 1e-12 && (b.upper - rho).abs() <= 1e-12);
    }

    #[test]
    fn cost_is_homogeneous_and_nonnegative(d in prop::collection::vec(0.0..3.0f64, 3), x in prop::collection::vec(-5.0..5.0f64, 3), l in -10.0..10.0f64) {
        let q = QuadraticCost::diag(&d).unwrap();
        let lx: Vec<f64> = x.iter().map(|v| l * v).collect();
        let (c, cl) = (q.eval(&x), q.eval(&lx));
        prop_assert!(c >= 0.0);
        prop_assert!((cl - l * l * c).abs() <= 1e-12 * (1.0 + cl.abs()));
    }

    #[test]
    fn ctilde_range(t in -100.0..100.0f64) {
        let c = ctilde(t);
        prop_assert!((1.0..=2.0).contains(&c));
    }

    #[test]
    fn exchange_map_is_a_bijection(alpha in 0.4..1.17f64, nu in -0.5..0.5f64, u in 0.0..1.0f64) {
        let iem = IemMap::new(nu, alpha, alpha - FRAC_PI_2).unwrap();
        let t = iem.lower() + u * iem.length();
        prop_assume!(iem.contains(t));
        let s = iem.step(t).unwrap();
        prop_assert!(iem.contains(s));
        // rounding can push the image to the other side of a branch point
        if (s - (nu + alpha + iem.beta)).abs() > 1e-12 {
            let back = iem.inverse_step(s).unwrap();
            prop_assert!((back - t).abs() <= 1e-14);
        }
        prop_assert!(iem.conjugacy_check(t));
    }

    #[test]
    fn exchange_map_preserves_length(alpha in 0.4..1.17f64, nu in -0.5..0.5f64, a in 0.0..1.0f64, w in 0.0..0.2f64) {
        // image of a subinterval is a union of at most two intervals of the same total length
        let iem = IemMap::new(nu, alpha, alpha - FRAC_PI_2).unwrap();
        let lo = iem.lower() + a * iem.length();
        let hi = (lo + w * iem.length()).min(iem.upper());
        let pieces = [(lo, hi.min(nu)), (lo.max(nu), hi)];
        let mut total = 0.0;
        for (x, y) in pieces {
            if y > x {
                let shift = if x < nu { alpha } else { iem.beta };
                total += (y + shift) - (x + shift);
            }
        }
        prop_assert!((total - (hi - lo)).abs() <= 1e-14);
    }

    #[test]
    fn lifted_value_is_homogeneous(x in -1.0..1.0f64, y in -1.0..1.0f64, l in -10.0..10.0f64) {
        let c = build_rational_variant();
        let pol = solve_thresholds(&c.rotation, DEFAULT_TOL, DEFAULT_DEPTH).unwrap().policy;
        let v = ExactValue::optimal(c.rotation, pol);
        let j = lift_value(&v, &[x, y], None).unwrap();
        let jl = lift_value(&v, &[l * x, l * y], None).unwrap();
        prop_assert!(j >= 0.0);
        prop_assert!((jl - l * l * j).abs() <= 1e-12 * (1.0 + l * l * j));
    }

    #[test]
    fn series_matches_float_oracle(t in -PI..PI) {
        let c = build_irrational_variant(0.6).unwrap();
        let r = c.rotation;
        let pol = solve_thresholds(&r, DEFAULT_TOL, DEFAULT_DEPTH).unwrap().policy;
        let a = policy_value(t, &pol, &r, DEFAULT_DEPTH).value;
        let b = common::series_value(t, pol.nu, pol.omega, r.alpha, r.beta, r.rho, DEFAULT_DEPTH);
        prop_assert!((a - b).abs() <= 1e-14);
    }
}
