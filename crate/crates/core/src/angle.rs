//! Angle helpers shared by the planar modules.

use std::f64::consts::PI;

/// `x(theta) = [cos theta, sin theta]`.
#[inline]
pub fn unit(theta: f64) -> [f64; 2] {
    let (s, c) = theta.sin_cos();
    [c, s]
}

/// Reduces `theta` into `[0, pi)`.
#[inline]
pub fn wrap_pi(theta: f64) -> f64 {
    let r = theta.rem_euclid(PI);
    // rem_euclid can return exactly PI for tiny negative inputs
    if r >= PI {
        0.0
    } else {
        r
    }
}

/// Reduces `theta` into `[start, start + pi)`.
#[inline]
pub fn wrap_from(theta: f64, start: f64) -> f64 {
    start + wrap_pi(theta - start)
}

/// Distance between `a` and `b` on the circle `R / pi Z`.
#[inline]
pub fn circular_distance_pi(a: f64, b: f64) -> f64 {
    let d = wrap_pi(a - b);
    d.min(PI - d)
}

/// Polar decomposition of a planar vector: `(radius, angle in [0, pi))`.
/// The sign is absorbed by pi-periodicity; the zero vector has angle 0.
#[inline]
pub fn polar_mod_pi(p: [f64; 2]) -> (f64, f64) {
    let r = p[0].hypot(p[1]);
    if r == 0.0 {
        (0.0, 0.0)
    } else {
        (r, wrap_pi(p[1].atan2(p[0])))
    }
}

/// Error-free transformation `a + b = s + e` (Knuth's TwoSum).
#[inline]
pub fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

/// `p * alpha + q * beta` evaluated with error-free products and a
/// compensated sum, accurate to about one ulp of the result.
pub fn lattice_offset(p: i64, alpha: f64, q: i64, beta: f64) -> f64 {
    let (pa, pa_err) = two_prod(p as f64, alpha);
    let (qb, qb_err) = two_prod(q as f64, beta);
    let (s, e) = two_sum(pa, qb);
    s + (e + pa_err + qb_err)
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrapping() {
        assert_eq!(wrap_pi(0.0), 0.0);
        assert!((wrap_pi(-0.25) - (PI - 0.25)).abs() < 1e-15);
        assert!(wrap_pi(-1e-300) < PI);
        assert!((wrap_from(3.0, -1.0) - (3.0 - PI)).abs() < 1e-15);
        assert!((circular_distance_pi(0.1, PI - 0.1) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn polar_absorbs_sign() {
        let (r, a) = polar_mod_pi([-1.0, -1.0]);
        assert!((r - 2f64.sqrt()).abs() < 1e-15);
        assert!((a - PI / 4.0).abs() < 1e-15);
        assert_eq!(polar_mod_pi([0.0, 0.0]), (0.0, 0.0));
    }

    #[test]
    fn lattice_offset_is_accurate() {
        let (a, b) = (0.6435011087932844, 0.6435011087932844 - PI / 2.0);
        // p*a + q*b with p = q cancels to p*(a+b) up to rounding of a+b
        let v = lattice_offset(100_000, a, -100_000, b);
        assert!((v - 100_000.0 * (a - b)).abs() < 1e-9);
        assert_eq!(lattice_offset(0, a, 0, b), 0.0);
        assert_eq!(lattice_offset(1, a, 0, b), a);
    }
}
