//! Published and hand-derived values.

mod common;

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use approx::assert_relative_eq;
use swival::construction::build_rational_variant;
use swival::iem::{gap_statistics, IemMap};
use swival::lipschitz::value_lipschitz_constant;
use swival::probe::{kink_ladder, one_sided_derivative, Side};
use swival::threshold::{solve_thresholds, DEFAULT_DEPTH, DEFAULT_TOL};

#[test]
fn rational_entries() {
    let c = build_rational_variant();
    assert_eq!(c.system.mode(0).unwrap().to_rows(), vec![vec![0.008, -0.006], vec![0.006, 0.008]]);
    assert_eq!(c.system.mode(1).unwrap().to_rows(), vec![vec![0.006, 0.008], vec![-0.008, 0.006]]);
    assert_relative_eq!(c.rotation.mu, FRAC_PI_4 - 0.75_f64.atan(), max_relative = 1e-15);
}

#[test]
fn lipschitz_constant_of_the_construction() {
    assert_relative_eq!(value_lipschitz_constant(4.0, 0.01, 1.0).unwrap(), 4.0 / 0.99, max_relative = 1e-15);
}

#[test]
fn thresholds_are_quarter_turn_apart() {
    // delta J equals delta ct near both thresholds, so they sit at mu and mu + pi/2
    let c = build_rational_variant();
    let p = solve_thresholds(&c.rotation, DEFAULT_TOL, DEFAULT_DEPTH).unwrap().policy;
    assert!((p.nu - c.rotation.mu).abs() < 1e-13);
    assert!((p.omega - c.rotation.mu - FRAC_PI_2).abs() < 1e-13);
}

#[test]
fn kink_gap_closed_form() {
    // gap(k) = rho^(2k+2) (sin(2 nu + 2 beta) - sin(2 nu + 2 alpha)) = -2 rho^(2k+2) at nu = mu
    let c = build_rational_variant();
    let r = c.rotation;
    let p = solve_thresholds(&r, DEFAULT_TOL, DEFAULT_DEPTH).unwrap().policy;
    let ladder = kink_ladder(&p, &r, 3).unwrap();
    for (k, rep) in ladder.iter().enumerate() {
        let expected = -2.0 * r.rho_sq().powi(k as i32 + 1);
        assert_relative_eq!(rep.gap, expected, max_relative = 1e-9);
        assert_eq!(rep.below_floating_floor, k >= 3);
    }
    let d_minus = one_sided_derivative(0, Side::Left, &p, &r, 8).unwrap();
    let d_plus = one_sided_derivative(0, Side::Right, &p, &r, 8).unwrap();
    let (fd_minus, fd_plus) = common::one_sided_quotients(
        |t| common::series_value(t, p.nu, p.omega, r.alpha, r.beta, r.rho, 10),
        p.nu,
        1e-4,
    );
    assert!((fd_minus - d_minus).abs() < 1e-8);
    assert!((fd_plus - d_plus).abs() < 1e-8);
}

#[test]
fn backward_orbit_of_sample_point() {
    // nu = 0.1, alpha = 0.6: T^-1 nu = nu - alpha
    let iem = IemMap::new(0.1, 0.6, 0.6 - FRAC_PI_2).unwrap();
    let o = iem.backward_orbit(0.1, 15).unwrap();
    assert!((o.points[0] + 0.5).abs() < 1e-15);
    // float iteration of the inverse map as an oracle
    let mut t = 0.1;
    for p in &o.points {
        t = iem.inverse_step(t).unwrap();
        assert!((t - p).abs() < 1e-13);
    }
}

#[test]
fn three_gap_lengths_at_every_scale() {
    let c = build_rational_variant();
    let p = solve_thresholds(&c.rotation, DEFAULT_TOL, DEFAULT_DEPTH).unwrap().policy;
    let iem = IemMap::from_rotation(&c.rotation, p.nu).unwrap();
    for n in [10, 100, 1000, 10_000] {
        let s = gap_statistics(&iem.backward_orbit(p.nu, n).unwrap()).unwrap();
        assert!(s.distinct_count() <= 3, "N = {n}: {:?}", s.distinct_gaps);
        if s.distinct_count() == 3 {
            let g = &s.distinct_gaps;
            assert!((g[0] + g[1] - g[2]).abs() < 1e-9);
        }
    }
}

#[test]
fn differentiable_away_from_the_orbit() {
    use rand::{Rng, SeedableRng};
    use swival::probe::{breakpoint_distance, probe_free_angle};
    let c = build_rational_variant();
    let r = c.rotation;
    let p = solve_thresholds(&r, DEFAULT_TOL, DEFAULT_DEPTH).unwrap().policy;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
    let mut tested = 0;
    while tested < 1000 {
        let t = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
        if breakpoint_distance(t, &p, &r, DEFAULT_DEPTH) < 1e-3 {
            continue;
        }
        let rep = probe_free_angle(t, &p, &r, DEFAULT_DEPTH).unwrap();
        assert!(rep.gap.abs() <= 1e-12);
        let (dm, dp) = common::one_sided_quotients(
            |s| common::series_value(s, p.nu, p.omega, r.alpha, r.beta, r.rho, 10),
            t,
            1e-4,
        );
        assert!((dp - dm).abs() <= 1e-7, "theta {t}: {dm} vs {dp}");
        assert!((rep.left_derivative - dm).abs() <= 1e-7);
        tested += 1;
    }
}
