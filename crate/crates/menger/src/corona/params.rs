use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{theta_vertical, Line};
use crate::lattice::LatticeConfig;

/// Stopping-time thresholds. Every field has a default and may be overridden from JSON.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Params {
    /// Low-density threshold τ.
    pub tau: f64,
    /// High-density threshold A.
    pub a: f64,
    /// Angle threshold θ₀.
    pub theta0: f64,
    /// Balance parameter γ.
    pub gamma: f64,
    /// Beta threshold ε₀.
    pub eps0: f64,
    /// Permutation threshold α.
    pub alpha: f64,
    /// Truncation ratio δ.
    pub delta: f64,
    pub c0: f64,
    pub a0: f64,
    /// Lipschitz constant factor C_F in the slope rule.
    pub c_f: f64,
    /// Witness ball radius factor ρ′; defaults to γ/4.
    pub rho1: Option<f64>,
    /// Witness ball mass factor ρ″; defaults to γ².
    pub rho2: Option<f64>,
    /// Pointwise permutation cutoff c₂; defaults to ε₀τ²γ².
    pub c2: Option<f64>,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            tau: 0.1,
            a: 100.0,
            theta0: 0.05,
            gamma: 1e-3,
            eps0: 1e-2,
            alpha: 1e-3,
            delta: 1e-3,
            c0: 2.0,
            a0: 8.0,
            c_f: 1.0,
            rho1: None,
            rho2: None,
            c2: None,
        }
    }
}

/// The slope rule for a root: whether L_R is far from vertical, and the resulting angle θ(R).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeRule {
    pub in_t_vf: bool,
    pub theta: f64,
}

impl Params {
    /// Checks positivity and the orderings A⁻¹ ≤ τ² < 1 and γ ≤ τ³.
    pub fn validate(&self) -> Result<()> {
        let named = [
            ("tau", self.tau),
            ("a", self.a),
            ("theta0", self.theta0),
            ("gamma", self.gamma),
            ("eps0", self.eps0),
            ("alpha", self.alpha),
            ("delta", self.delta),
            ("c0", self.c0),
            ("a0", self.a0),
            ("c_f", self.c_f),
            ("rho1", self.rho_prime()),
            ("rho2", self.rho_dprime()),
            ("c2", self.c2()),
        ];
        for (name, v) in named {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if self.tau >= 1.0 {
            return Err(Error::InvalidParameter(format!("tau must be below 1, got {}", self.tau)));
        }
        if 1.0 / self.a > self.tau * self.tau {
            return Err(Error::InvalidParameter(format!("1/A = {} exceeds tau^2 = {}", 1.0 / self.a, self.tau * self.tau)));
        }
        if self.gamma > self.tau.powi(3) {
            return Err(Error::InvalidParameter(format!("gamma = {} exceeds tau^3 = {}", self.gamma, self.tau.powi(3))));
        }
        if self.delta >= 1.0 {
            return Err(Error::InvalidParameter(format!("delta must be below 1, got {}", self.delta)));
        }
        if self.c0 <= 1.0 || self.a0 <= 1.0 {
            return Err(Error::InvalidParameter("c0 and a0 must exceed 1".into()));
        }
        Ok(())
    }

    pub fn rho_prime(&self) -> f64 {
        self.rho1.unwrap_or(self.gamma / 4.0)
    }

    pub fn rho_dprime(&self) -> f64 {
        self.rho2.unwrap_or(self.gamma * self.gamma)
    }

    pub fn c2(&self) -> f64 {
        self.c2.unwrap_or(self.eps0 * self.tau * self.tau * self.gamma * self.gamma)
    }

    pub fn lattice_config(&self) -> LatticeConfig {
        LatticeConfig { c0: self.c0, a0: self.a0, k_max: None }
    }

    /// θ(R) = θ₀ when θ_V(L_R) ≥ (1 + C_F)θ₀, and 2(1 + C_F)θ₀ otherwise.
    pub fn theta_r(&self, line: &Line<f64>) -> SlopeRule {
        self.slope_rule(theta_vertical(line))
    }

    /// The slope rule for a line whose angle with the vertical is `theta_v`.
    pub fn slope_rule(&self, theta_v: f64) -> SlopeRule {
        let bound = (1.0 + self.c_f) * self.theta0;
        if theta_v >= bound {
            SlopeRule { in_t_vf: true, theta: self.theta0 }
        } else {
            SlopeRule { in_t_vf: false, theta: 2.0 * bound }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_satisfy_the_orderings() {
        Params::default().validate().unwrap();
    }

    #[test]
    fn orderings_are_enforced() {
        let p = Params { a: 50.0, ..Params::default() };
        assert!(p.validate().is_err());
        let p = Params { gamma: 2e-3, ..Params::default() };
        assert!(p.validate().is_err());
        let p = Params { alpha: 0.0, ..Params::default() };
        assert!(p.validate().is_err());
    }

    #[test]
    fn slope_rule_cases() {
        let p = Params::default();
        let h = p.theta_r(&Line::horizontal());
        assert!(h.in_t_vf);
        assert_eq!(h.theta, 0.05);
        let v = p.theta_r(&Line::vertical());
        assert!(!v.in_t_vf);
        assert!((v.theta - 0.2).abs() < 1e-15);
        let edge = (1.0 + p.c_f) * p.theta0;
        assert!(p.slope_rule(edge).in_t_vf);
        assert!(!p.slope_rule(edge - 1e-12).in_t_vf);
    }

    #[test]
    fn json_overrides_merge_with_defaults() {
        let p: Params = serde_json::from_str(r#"{"tau":0.05,"a":400}"#).unwrap();
        assert_eq!(p.tau, 0.05);
        assert_eq!(p.a, 400.0);
        assert_eq!(p.gamma, 1e-3);
    }
}
