//! The two-interval exchange `T` on `I = [nu + beta, nu + alpha)` induced by
//! the threshold policy, and its conjugacy to the rotation by `alpha` on a
//! circle of length `pi/2`.
//!
//! Orbit points are kept as lattice offsets `p alpha + q beta` from the
//! starting angle, so the point reached after `k` inverse steps from `nu`
//! returns to `nu` exactly after `k` forward steps.

use std::f64::consts::FRAC_PI_2;
use std::fmt::Write as _;

use serde::Serialize;

use crate::construction::RotationSystem;
use crate::error::{Error, Result};
use crate::fmt17;
use crate::threshold::{Branch, LatticePoint};

/// Tolerance of the conjugacy check.
pub const CONJUGACY_TOL: f64 = 1e-12;
/// Gaps closer than this are counted as one length.
pub const GAP_MERGE_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IemMap {
    pub nu: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl IemMap {
    pub fn new(nu: f64, alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && beta < 0.0 && nu.is_finite()) {
            return Err(Error::Domain(format!(
                "exchange map needs alpha > 0 > beta (alpha = {alpha}, beta = {beta})"
            )));
        }
        Ok(Self { nu, alpha, beta })
    }

    pub fn from_rotation(rot: &RotationSystem, nu: f64) -> Result<Self> {
        Self::new(nu, rot.alpha, rot.beta)
    }

    /// Left end of `I`, also the base point `phi` of the conjugacy.
    pub fn lower(&self) -> f64 {
        self.nu + self.beta
    }

    pub fn upper(&self) -> f64 {
        self.nu + self.alpha
    }

    pub fn length(&self) -> f64 {
        self.alpha - self.beta
    }

    pub fn contains(&self, theta: f64) -> bool {
        theta >= self.lower() && theta < self.upper()
    }

    fn check(&self, theta: f64) -> Result<()> {
        if self.contains(theta) {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "angle {theta} outside I = [{}, {})",
                self.lower(),
                self.upper()
            )))
        }
    }

    /// `T(theta)`: `+alpha` on `I1 = [nu + beta, nu)`, `+beta` on `I2 = [nu, nu + alpha)`.
    pub fn step(&self, theta: f64) -> Result<f64> {
        self.check(theta)?;
        Ok(if theta < self.nu {
            theta + self.alpha
        } else {
            theta + self.beta
        })
    }

    /// `T^-1(theta)`: `-alpha` on `I1' = [nu + beta + alpha, nu + alpha)`,
    /// `-beta` on `I2' = [nu + beta, nu + alpha + beta)`.
    pub fn inverse_step(&self, theta: f64) -> Result<f64> {
        self.check(theta)?;
        Ok(if theta >= self.nu + self.alpha + self.beta {
            theta - self.alpha
        } else {
            theta - self.beta
        })
    }

    /// Circle rotation `S(x) = x + alpha mod pi/2` on `[0, pi/2)`.
    pub fn rotation(&self, x: f64) -> f64 {
        (x + self.alpha).rem_euclid(FRAC_PI_2)
    }

    /// Whether `T(theta) = S(theta - phi) + phi` within [`CONJUGACY_TOL`],
    /// `phi = nu + beta`. When `theta - phi + alpha` lies within the
    /// tolerance of the wrap point `pi/2`, either side of the wrap is accepted.
    pub fn conjugacy_check(&self, theta: f64) -> bool {
        let Ok(t) = self.step(theta) else {
            return false;
        };
        let phi = self.lower();
        let x = theta - phi;
        let s = self.rotation(x) + phi;
        if (t - s).abs() <= CONJUGACY_TOL {
            return true;
        }
        let y = x + self.alpha;
        if (y - FRAC_PI_2).abs() <= CONJUGACY_TOL {
            let other = if y >= FRAC_PI_2 { y } else { y - FRAC_PI_2 };
            return (t - (other + phi)).abs() <= CONJUGACY_TOL;
        }
        false
    }

    /// Backward orbit `T^-1 theta0, ..., T^-depth theta0`.
    pub fn backward_orbit(&self, theta0: f64, depth: usize) -> Result<OrbitRecord> {
        self.orbit(theta0, depth, Direction::Backward)
    }

    pub fn forward_orbit(&self, theta0: f64, depth: usize) -> Result<OrbitRecord> {
        self.orbit(theta0, depth, Direction::Forward)
    }

    fn orbit(&self, theta0: f64, depth: usize, direction: Direction) -> Result<OrbitRecord> {
        self.check(theta0)?;
        if depth == 0 {
            return Err(Error::Domain("orbit depth must be at least 1".into()));
        }
        // exact when theta0 == nu
        let d0 = theta0 - self.nu;
        let mut cur = LatticePoint::ORIGIN;
        let mut offsets = Vec::with_capacity(depth);
        let mut branches = Vec::with_capacity(depth);
        for _ in 0..depth {
            let b = match direction {
                Direction::Forward => {
                    let pos = d0 + cur_offset(cur, self.alpha, self.beta);
                    let b = if pos < 0.0 { Branch::Alpha } else { Branch::Beta };
                    cur = cur.advance(b);
                    b
                }
                Direction::Backward => {
                    // theta in I1' <=> theta - nu - alpha - beta >= 0
                    let pos = d0 + lattice_shift(cur, -1, -1, self.alpha, self.beta);
                    let b = if pos >= 0.0 { Branch::Alpha } else { Branch::Beta };
                    cur = cur.retreat(b);
                    b
                }
            };
            offsets.push(cur);
            branches.push(b);
        }
        let points = offsets
            .iter()
            .map(|&o| theta0 + cur_offset(o, self.alpha, self.beta))
            .collect();
        Ok(OrbitRecord {
            map: *self,
            start: theta0,
            direction,
            points,
            offsets,
            branches,
        })
    }
}

#[inline]
fn cur_offset(pt: LatticePoint, alpha: f64, beta: f64) -> f64 {
    crate::angle::lattice_offset(pt.p, alpha, pt.q, beta)
}

#[inline]
fn lattice_shift(pt: LatticePoint, dp: i64, dq: i64, alpha: f64, beta: f64) -> f64 {
    crate::angle::lattice_offset(pt.p + dp, alpha, pt.q + dq, beta)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
}

/// Orbit points `k = 1..=depth` with their lattice offsets from `start`.
#[derive(Clone, Debug, PartialEq)]
pub struct OrbitRecord {
    pub map: IemMap,
    pub start: f64,
    pub direction: Direction,
    pub points: Vec<f64>,
    pub offsets: Vec<LatticePoint>,
    /// Branch of `T` applied (forward) or undone (backward) at each step.
    pub branches: Vec<Branch>,
}

impl OrbitRecord {
    pub fn depth(&self) -> usize {
        self.points.len()
    }

    /// Position of point `k` (1-based) on the circle `[0, pi/2)` obtained by
    /// subtracting `phi = nu + beta`.
    pub fn circle_coordinate(&self, k: usize) -> f64 {
        let o = self.offsets[k - 1];
        let d0 = self.start - self.map.nu;
        let x = d0 + lattice_shift(o, 0, -1, self.map.alpha, self.map.beta);
        x.rem_euclid(FRAC_PI_2)
    }

    /// Smallest distance from `nu` over the orbit points.
    pub fn min_distance_to_nu(&self) -> f64 {
        let d0 = self.start - self.map.nu;
        self.offsets
            .iter()
            .map(|&o| (d0 + cur_offset(o, self.map.alpha, self.map.beta)).abs())
            .fold(f64::INFINITY, f64::min)
    }

    /// CSV with header `k,theta`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,theta\n");
        for (k, t) in self.points.iter().enumerate() {
            writeln!(out, "{},{}", k + 1, fmt17::format(*t)).expect("write to String");
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapStatistics {
    pub max_gap: f64,
    pub min_gap: f64,
    /// Distinct gap lengths after merging within [`GAP_MERGE_TOL`], ascending.
    pub distinct_gaps: Vec<f64>,
}

impl GapStatistics {
    pub fn distinct_count(&self) -> usize {
        self.distinct_gaps.len()
    }
}

/// Circular gaps between orbit points on the circle of length `pi/2`.
pub fn gap_statistics(orbit: &OrbitRecord) -> Result<GapStatistics> {
    if orbit.points.is_empty() {
        return Err(Error::Input("gap statistics need a nonempty orbit".into()));
    }
    let mut u: Vec<f64> = (1..=orbit.depth()).map(|k| orbit.circle_coordinate(k)).collect();
    u.sort_by(f64::total_cmp);
    let mut gaps: Vec<f64> = u.windows(2).map(|w| w[1] - w[0]).collect();
    gaps.push(u[0] + FRAC_PI_2 - u[u.len() - 1]);
    let max_gap = gaps.iter().copied().fold(0.0, f64::max);
    let min_gap = gaps.iter().copied().fold(f64::INFINITY, f64::min);
    gaps.sort_by(f64::total_cmp);
    let mut distinct: Vec<f64> = Vec::new();
    for g in gaps {
        match distinct.last() {
            Some(&last) if g - last <= GAP_MERGE_TOL => {}
            _ => distinct.push(g),
        }
    }
    Ok(GapStatistics {
        max_gap,
        min_gap,
        distinct_gaps: distinct,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig2() -> IemMap {
        IemMap::new(0.1, 0.6, 0.6 - FRAC_PI_2).unwrap()
    }

    #[test]
    fn interval_geometry() {
        let t = fig2();
        assert!((t.length() - FRAC_PI_2).abs() <= 1e-15);
        assert!(t.contains(t.lower()) && !t.contains(t.upper()));
        // I1' and I2' tile I
        assert!((t.lower() + t.alpha - (t.nu + t.beta + t.alpha)).abs() < 1e-12);
        assert!(((t.nu + t.alpha + t.beta) - t.lower() + (t.upper() - (t.nu + t.beta + t.alpha)) - t.length()).abs() < 1e-12);
    }

    #[test]
    fn step_at_breakpoints() {
        let t = fig2();
        assert_eq!(t.step(t.nu).unwrap(), t.nu + t.beta);
        assert_eq!(t.step(t.lower()).unwrap(), t.lower() + t.alpha);
        assert_eq!(t.inverse_step(t.nu).unwrap(), t.nu - t.alpha);
        assert!((t.inverse_step(t.lower()).unwrap() - t.nu).abs() < 1e-15);
        assert!(matches!(t.step(t.upper()), Err(Error::Domain(_))));
        assert!(t.inverse_step(10.0).is_err());
    }

    #[test]
    fn fig2_backward_orbit() {
        let t = fig2();
        let o = t.backward_orbit(t.nu, 15).unwrap();
        assert_eq!(o.depth(), 15);
        assert!((o.points[0] + 0.5).abs() < 1e-15);
        assert!(o.points.iter().all(|&p| t.contains(p)));
        // consecutive points related by T
        assert!((t.step(o.points[0]).unwrap() - t.nu).abs() < 1e-15);
        for w in o.points.windows(2) {
            assert!((t.step(w[1]).unwrap() - w[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn single_point_orbit_has_one_full_gap() {
        let t = fig2();
        let o = t.backward_orbit(0.3, 1).unwrap();
        assert_eq!(o.points.len(), 1);
        let g = gap_statistics(&o).unwrap();
        assert_eq!(g.distinct_count(), 1);
        assert!((g.max_gap - FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn conjugacy_at_special_points() {
        let t = fig2();
        assert!(t.conjugacy_check(t.nu));
        assert!(t.conjugacy_check(t.lower()));
        assert!(!t.conjugacy_check(t.upper()));
    }

    #[test]
    fn forward_orbit_matches_step() {
        let t = fig2();
        let o = t.forward_orbit(0.05, 50).unwrap();
        let mut x = 0.05;
        for p in &o.points {
            x = t.step(x).unwrap();
            assert!((x - p).abs() < 1e-12);
        }
    }
}
