//! Reference implementations shared by the integration tests. They use
//! plain floating-point angles and direct matrix products so they share no
//! code path with the library's lattice bookkeeping.
#![allow(dead_code)]

use std::f64::consts::PI;

/// Truncated value of the threshold policy, iterating float angles.
pub fn series_value(theta: f64, nu: f64, omega: f64, alpha: f64, beta: f64, rho: f64, depth: usize) -> f64 {
    let mut t = theta;
    let mut w = 1.0;
    let mut sum = 0.0;
    for _ in 0..=depth {
        sum += w * (1.0 + t.sin().powi(2));
        w *= rho * rho;
        let lo = omega - PI;
        let r = t - PI * ((t - lo) / PI).floor();
        t += if r < nu { alpha } else { beta };
    }
    sum
}

/// Minimum of `sum_t x_t' Q x_t` over all `2^depth` mode prefixes, with
/// the dynamics applied as explicit 2x2 products.
pub fn brute_force_cost(x: [f64; 2], modes: &[[[f64; 2]; 2]; 2], q: [[f64; 2]; 2], depth: usize) -> (f64, usize) {
    let cost = |x: [f64; 2]| {
        x[0] * (q[0][0] * x[0] + q[0][1] * x[1]) + x[1] * (q[1][0] * x[0] + q[1][1] * x[1])
    };
    let mut best = (f64::INFINITY, 0);
    for code in 0..1usize << depth {
        let mut s = x;
        let mut c = cost(s);
        for i in 0..depth {
            let m = &modes[code >> (depth - 1 - i) & 1];
            s = [m[0][0] * s[0] + m[0][1] * s[1], m[1][0] * s[0] + m[1][1] * s[1]];
            c += cost(s);
        }
        if c < best.0 {
            best = (c, code);
        }
    }
    best
}

pub fn rotation(rho: f64, a: f64) -> [[f64; 2]; 2] {
    [[rho * a.cos(), -rho * a.sin()], [rho * a.sin(), rho * a.cos()]]
}

/// Richardson-extrapolated one-sided difference quotients `(D-, D+)` of `f` at `t`.
pub fn one_sided_quotients(f: impl Fn(f64) -> f64, t: f64, h: f64) -> (f64, f64) {
    let fwd = |h: f64| (f(t + h) - f(t)) / h;
    let bwd = |h: f64| (f(t) - f(t - h)) / h;
    (2.0 * bwd(h / 2.0) - bwd(h), 2.0 * fwd(h / 2.0) - fwd(h))
}
