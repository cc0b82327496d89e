//! Builders for the two-mode scaled-rotation system with cost
//! `c(x) = x1^2 + 2 x2^2`, its angular cost functions, and the zero-padded
//! embedding into higher dimensions.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_8};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Matrix, QuadraticCost, SwitchedSystem};

/// Default scaling factor of both modes.
pub const DEFAULT_RHO: f64 = 0.01;

/// Half-width of the localization windows around `mu` and `mu + pi/2`.
pub const DELTA: f64 = 0.01;

/// Parameters of the scaled-rotation pair `A1 = rho R(alpha)`,
/// `A2 = rho R(beta)` with `beta = alpha - pi/2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RotationSystem {
    pub alpha: f64,
    pub beta: f64,
    pub rho: f64,
    /// `pi/4 - alpha`, the zero of the one-step cost difference.
    pub mu: f64,
    pub delta: f64,
}

impl RotationSystem {
    /// `alpha` must lie in the open interval `(pi/8, 3pi/8)` and `rho` in `(0, 1)`.
    pub fn new(alpha: f64, rho: f64) -> Result<Self> {
        Self::with_beta(alpha, alpha - FRAC_PI_2, rho)
    }

    fn with_beta(alpha: f64, beta: f64, rho: f64) -> Result<Self> {
        if !(alpha > FRAC_PI_8 && alpha < 3.0 * FRAC_PI_8) {
            return Err(Error::Domain(format!(
                "alpha = {alpha} must lie in the open interval (pi/8, 3pi/8)"
            )));
        }
        if !(rho > 0.0 && rho < 1.0) {
            return Err(Error::Domain(format!("rho = {rho} must lie in (0, 1)")));
        }
        Ok(Self {
            alpha,
            beta,
            rho,
            mu: FRAC_PI_4 - alpha,
            delta: DELTA,
        })
    }

    pub fn rho_sq(&self) -> f64 {
        self.rho * self.rho
    }

    /// `ctilde(theta + alpha) - ctilde(theta + beta)`, which equals
    /// `sin(2 (theta - mu))`.
    pub fn delta_ctilde(&self, theta: f64) -> f64 {
        ctilde(theta + self.alpha) - ctilde(theta + self.beta)
    }

    pub fn system(&self) -> SwitchedSystem {
        SwitchedSystem::new(vec![
            scaled_rotation(self.rho, self.alpha),
            scaled_rotation(self.rho, self.beta),
        ])
        .expect("2x2 rotations form a valid system")
    }

    /// Recovers the rotation parameters from a (possibly embedded) system
    /// whose top-left 2x2 blocks are `rho R(alpha)` and `rho R(alpha - pi/2)`
    /// and whose cost is `diag(1, 2, 0, ...)`.
    pub fn from_system(sys: &SwitchedSystem, cost: &QuadraticCost) -> Result<Self> {
        const TOL: f64 = 1e-12;
        if sys.num_modes() != 2 || sys.dim() < 2 {
            return Err(Error::Structural(
                "expected a two-mode system of dimension >= 2".into(),
            ));
        }
        if sys.dim() > 2 && !is_hat_form(sys) {
            return Err(Error::Structural(
                "higher-dimensional system is not a zero-padded planar system".into(),
            ));
        }
        let mut expected_q = Matrix::zeros(sys.dim(), sys.dim());
        expected_q.set(0, 0, 1.0);
        expected_q.set(1, 1, 2.0);
        if cost.matrix().max_abs_diff(&expected_q).is_none_or(|d| d > TOL) {
            return Err(Error::Structural("cost is not x1^2 + 2 x2^2".into()));
        }
        let mut params = [(0.0, 0.0); 2];
        for (slot, a) in params.iter_mut().zip(sys.modes()) {
            let (c, s) = (a.get(0, 0), a.get(1, 0));
            if (a.get(1, 1) - c).abs() > TOL || (a.get(0, 1) + s).abs() > TOL {
                return Err(Error::Structural("mode is not a scaled rotation".into()));
            }
            *slot = (c.hypot(s), s.atan2(c));
        }
        let [(rho1, alpha), (rho2, beta)] = params;
        if (rho1 - rho2).abs() > TOL {
            return Err(Error::Structural("modes have different scalings".into()));
        }
        if (beta - (alpha - FRAC_PI_2)).abs() > TOL {
            return Err(Error::Structural("second angle is not alpha - pi/2".into()));
        }
        Self::with_beta(alpha, beta, rho1)
    }
}

/// A constructed counterexample: parameters, mode matrices and cost.
#[derive(Clone, Debug)]
pub struct Construction {
    pub rotation: RotationSystem,
    pub system: SwitchedSystem,
    pub cost: QuadraticCost,
}

pub fn scaled_rotation(rho: f64, angle: f64) -> Matrix {
    let (s, c) = angle.sin_cos();
    Matrix::from_row_major(2, 2, vec![rho * c, -rho * s, rho * s, rho * c])
        .expect("2x2 literal")
}

fn planar_cost() -> QuadraticCost {
    QuadraticCost::diag(&[1.0, 2.0]).expect("diag(1,2) is PSD")
}

/// Scaled rotations of angles `alpha` and `alpha - pi/2` with `rho = 0.01`.
///
/// The caller asserts that `alpha / pi` is irrational; that is not checkable
/// in floating point.
pub fn build_irrational_variant(alpha: f64) -> Result<Construction> {
    build_irrational_variant_with_rho(alpha, DEFAULT_RHO)
}

pub fn build_irrational_variant_with_rho(alpha: f64, rho: f64) -> Result<Construction> {
    let rotation = RotationSystem::new(alpha, rho)?;
    Ok(Construction {
        system: rotation.system(),
        cost: planar_cost(),
        rotation,
    })
}

/// The rational-entry pair from the 3-4-5 triangle, `alpha = atan(3/4)`.
pub fn build_rational_variant() -> Construction {
    let a1 = Matrix::from_row_major(2, 2, vec![0.008, -0.006, 0.006, 0.008]).expect("literal");
    let a2 = Matrix::from_row_major(2, 2, vec![0.006, 0.008, -0.008, 0.006]).expect("literal");
    let alpha = 0.75_f64.atan();
    let rotation = RotationSystem::new(alpha, DEFAULT_RHO).expect("atan(3/4) is in range");
    Construction {
        rotation,
        system: SwitchedSystem::new(vec![a1, a2]).expect("literal modes"),
        cost: planar_cost(),
    }
}

/// `ctilde(theta) = c(x(theta)) = 1 + sin^2(theta)`.
#[inline]
pub fn ctilde(theta: f64) -> f64 {
    let s = theta.sin();
    1.0 + s * s
}

#[inline]
pub fn ctilde_derivative(theta: f64) -> f64 {
    (2.0 * theta).sin()
}

/// `ctilde(a) - ctilde(b) = sin(a + b) sin(a - b)`, without cancellation.
#[inline]
pub fn ctilde_difference(a_plus_b: f64, a_minus_b: f64) -> f64 {
    a_plus_b.sin() * a_minus_b.sin()
}

/// Zero-pads a planar system and cost to dimension `n >= 3`.
pub fn embed(
    sys: &SwitchedSystem,
    cost: &QuadraticCost,
    n: usize,
) -> Result<(SwitchedSystem, QuadraticCost)> {
    if n < 3 {
        return Err(Error::Domain(format!("embedding dimension {n} must be >= 3")));
    }
    if sys.dim() != 2 || cost.dim() != 2 {
        return Err(Error::UnsupportedDimension {
            what: "embed",
            expected: 2,
            found: sys.dim(),
        });
    }
    let pad = |m: &Matrix| {
        let mut out = Matrix::zeros(n, n);
        for i in 0..2 {
            for j in 0..2 {
                out.set(i, j, m.get(i, j));
            }
        }
        out
    };
    let modes = sys.modes().iter().map(pad).collect();
    Ok((SwitchedSystem::new(modes)?, QuadraticCost::new(pad(cost.matrix()))?))
}

/// Whether every mode vanishes outside its top-left 2x2 block.
pub fn is_hat_form(sys: &SwitchedSystem) -> bool {
    let n = sys.dim();
    n >= 2
        && sys.modes().iter().all(|m| {
            (0..n).all(|i| (0..n).all(|j| (i < 2 && j < 2) || m.get(i, j) == 0.0))
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jsr::verify_scaled_isometry;
    use std::f64::consts::PI;

    #[test]
    fn alpha_window_is_open() {
        assert!(matches!(build_irrational_variant(PI / 8.0), Err(Error::Domain(_))));
        assert!(build_irrational_variant(3.0 * PI / 8.0).is_err());
        assert!(build_irrational_variant(PI / 8.0 + 1e-9).is_ok());
        assert!(RotationSystem::new(0.6, 1.0).is_err());
    }

    #[test]
    fn irrational_variant_matrices() {
        let c = build_irrational_variant(0.6).unwrap();
        let a1 = &c.system.modes()[0];
        assert_eq!(a1.get(0, 0), 0.01 * 0.6f64.cos());
        assert_eq!(a1.get(0, 1), -0.01 * 0.6f64.sin());
        let b = 0.6 - PI / 2.0;
        assert_eq!(c.system.modes()[1].get(1, 0), 0.01 * b.sin());
        assert_eq!(verify_scaled_isometry(&c.system, 0.01), vec![true, true]);
        assert_eq!(c.cost.matrix(), &Matrix::diag(&[1.0, 2.0]));
    }

    #[test]
    fn rational_variant_literals() {
        let c = build_rational_variant();
        assert_eq!(c.system.modes()[0].as_slice(), &[0.008, -0.006, 0.006, 0.008]);
        assert_eq!(c.system.modes()[1].as_slice(), &[0.006, 0.008, -0.008, 0.006]);
        assert!((c.rotation.alpha - 0.6435011087932844).abs() < 1e-16);
        assert_eq!(c.rotation.beta, c.rotation.alpha - PI / 2.0);
        // 3-4-5 rotation: det 1, orthogonal columns
        let r = c.system.modes()[0].scale(100.0);
        let det = r.get(0, 0) * r.get(1, 1) - r.get(0, 1) * r.get(1, 0);
        assert!((det - 1.0).abs() < 1e-12);
        assert!((r.get(0, 0) * r.get(0, 1) + r.get(1, 0) * r.get(1, 1)).abs() < 1e-12);
        assert_eq!(verify_scaled_isometry(&c.system, 0.01), vec![true, true]);
    }

    #[test]
    fn mu_consistency() {
        for alpha in [0.4, 0.6, 0.75_f64.atan(), 1.1] {
            let r = RotationSystem::new(alpha, 0.01).unwrap();
            assert!((r.mu - (-PI / 4.0 - r.beta)).abs() <= 1e-15);
        }
    }

    #[test]
    fn ctilde_values() {
        assert_eq!(ctilde(0.0), 1.0);
        assert_eq!(ctilde(PI / 2.0), 2.0);
        assert!((ctilde(PI / 4.0) - 1.5).abs() < 1e-15);
        assert!((ctilde_derivative(PI / 4.0) - 1.0).abs() < 1e-15);
        let r = build_rational_variant().rotation;
        assert!(r.delta_ctilde(r.mu).abs() < 1e-15);
        assert!((r.delta_ctilde(r.mu + PI / 4.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ctilde_derivative_bounds_on_threshold_windows() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        for i in 0..=1000 {
            let t = PI / 8.0 + (PI / 4.0) * i as f64 / 1000.0;
            assert!(ctilde_derivative(t) >= h - 1e-15);
            assert!(ctilde_derivative(-t) <= -h + 1e-15);
        }
    }

    #[test]
    fn delta_ctilde_negative_on_s_minus() {
        let r = build_rational_variant().rotation;
        for i in 0..=1000 {
            let t = r.mu - PI / 2.0 + r.delta + (PI / 2.0 - 2.0 * r.delta) * i as f64 / 1000.0;
            assert!(r.delta_ctilde(t) < -0.019);
        }
    }

    #[test]
    fn embedding_structure() {
        let c = build_rational_variant();
        let (sys3, cost3) = embed(&c.system, &c.cost, 3).unwrap();
        for m in sys3.modes() {
            assert!((0..3).all(|j| m.get(2, j) == 0.0 && m.get(j, 2) == 0.0));
        }
        assert!(is_hat_form(&sys3));
        assert_eq!(cost3.eval(&[0.3, -0.7, 11.0]), c.cost.eval(&[0.3, -0.7]));
        assert!(matches!(embed(&c.system, &c.cost, 2), Err(Error::Domain(_))));
        let back = RotationSystem::from_system(&sys3, &cost3).unwrap();
        assert!((back.alpha - c.rotation.alpha).abs() < 1e-15);
        assert!((back.rho - 0.01).abs() < 1e-17);
    }
}
