//! Lipschitz constants for costs and value functions.

use crate::error::{Error, Result};
use crate::model::QuadraticCost;

/// Lipschitz constant `M = kappa * L / (1 - rho)` of the optimal and
/// worst-case value functions, where `rho` is a contraction rate certified in
/// a norm of eccentricity `kappa` and `L` a Lipschitz constant of the cost on
/// the corresponding ball.
pub fn value_lipschitz_constant(cost_lipschitz: f64, rho: f64, kappa: f64) -> Result<f64> {
    if !(rho < 1.0) {
        return Err(Error::Domain(format!(
            "rho = {rho} >= 1: system not certified stable"
        )));
    }
    if !(rho >= 0.0) {
        return Err(Error::Domain(format!("rho = {rho} must be nonnegative")));
    }
    if !(kappa >= 1.0) {
        return Err(Error::Domain(format!("eccentricity kappa = {kappa} must be >= 1")));
    }
    if !(cost_lipschitz >= 0.0) || !cost_lipschitz.is_finite() {
        return Err(Error::Domain(format!(
            "cost Lipschitz constant {cost_lipschitz} must be finite and nonnegative"
        )));
    }
    Ok(kappa * cost_lipschitz / (1.0 - rho))
}

/// Lipschitz constant of `x^T Q x` on the closed Euclidean unit ball:
/// the gradient `2 Q x` has norm at most `2 lambda_max(Q)` there.
pub fn cost_lipschitz_unit_ball(cost: &QuadraticCost) -> f64 {
    2.0 * cost.max_eigenvalue().max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn value_constant_arithmetic() {
        let m = value_lipschitz_constant(4.0, 0.01, 1.0).unwrap();
        assert!((m - 4.0 / 0.99).abs() < 1e-15);
        assert!(m < 4.1);
        assert_eq!(value_lipschitz_constant(4.0, 0.5, 2.0).unwrap(), 16.0);
        assert_eq!(value_lipschitz_constant(1.0, 0.0, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn unstable_rate_is_a_domain_error() {
        assert!(matches!(value_lipschitz_constant(4.0, 1.0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(value_lipschitz_constant(4.0, 1.5, 1.0), Err(Error::Domain(_))));
        assert!(value_lipschitz_constant(4.0, f64::NAN, 1.0).is_err());
        assert!(value_lipschitz_constant(4.0, 0.5, 0.5).is_err());
    }

    #[test]
    fn cost_constants() {
        assert_eq!(cost_lipschitz_unit_ball(&QuadraticCost::diag(&[1.0, 2.0]).unwrap()), 4.0);
        assert_eq!(cost_lipschitz_unit_ball(&QuadraticCost::diag(&[0.0, 0.0]).unwrap()), 0.0);
        assert_eq!(cost_lipschitz_unit_ball(&QuadraticCost::diag(&[1.0, 1.0]).unwrap()), 2.0);
    }
}
