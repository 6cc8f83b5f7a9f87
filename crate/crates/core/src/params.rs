//! LQG constants and the exponents derived from them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `γ = √(8/3)`, the only parameter whose dimension is known exactly.
pub const GAMMA_BROWNIAN: f64 = 1.632_993_161_855_452;

/// `d_γ` at `γ = √(8/3)`.
pub const D_GAMMA_BROWNIAN: f64 = 4.0;

fn check_gamma(name: &str, gamma: f64) -> Result<()> {
    if gamma.is_finite() && gamma > 0.0 && gamma < 2.0 {
        Ok(())
    } else {
        Err(Error::param(name, format!("{gamma} is outside (0, 2)")))
    }
}

/// The multifractal exponent `ψ_γ(p) = p − p(p−1)γ²/4`.
pub fn psi(gamma: f64, p: f64) -> Result<f64> {
    check_gamma("gamma", gamma)?;
    Ok(p - p * (p - 1.0) * gamma * gamma / 4.0)
}

/// `Q_γ = γ/2 + 2/γ`.
pub fn q_of(gamma: f64) -> f64 {
    gamma / 2.0 + 2.0 / gamma
}

/// The constants of a (γ, γ') experiment. Immutable once built.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LqgParams {
    pub gamma: f64,
    pub gamma_prime: f64,
    pub d_gamma: f64,
    /// `ξ = γ / d_γ`
    pub xi: f64,
    /// `Q = γ/2 + 2/γ`
    pub q: f64,
    /// `Q_{γ'}`
    pub q_prime: f64,
}

impl LqgParams {
    /// `d_gamma` must be supplied: there is no closed form away from `γ = √(8/3)`.
    pub fn new(gamma: f64, gamma_prime: f64, d_gamma: f64) -> Result<Self> {
        check_gamma("gamma", gamma)?;
        check_gamma("gamma_prime", gamma_prime)?;
        if !(d_gamma.is_finite() && d_gamma > 2.0) {
            return Err(Error::param("d_gamma", format!("{d_gamma} must exceed 2")));
        }
        Ok(LqgParams {
            gamma,
            gamma_prime,
            d_gamma,
            xi: gamma / d_gamma,
            q: q_of(gamma),
            q_prime: q_of(gamma_prime),
        })
    }

    /// Uses the built-in dimension, which only exists for `γ = √(8/3)`.
    pub fn with_known_dimension(gamma: f64, gamma_prime: f64) -> Result<Self> {
        if (gamma - GAMMA_BROWNIAN).abs() > 1e-12 {
            return Err(Error::param(
                "d_gamma",
                format!("no built-in dimension for gamma = {gamma}; supply d_gamma"),
            ));
        }
        LqgParams::new(GAMMA_BROWNIAN, gamma_prime, D_GAMMA_BROWNIAN)
    }

    /// `γ = γ' = √(8/3)`, `d_γ = 4`.
    pub fn brownian() -> Self {
        LqgParams::new(GAMMA_BROWNIAN, GAMMA_BROWNIAN, D_GAMMA_BROWNIAN).expect("valid constants")
    }

    /// `ψ_γ(γ'/γ)`, the scaling exponent of a single variation increment.
    pub fn increment_psi(&self) -> f64 {
        let p = self.gamma_prime / self.gamma;
        p - p * (p - 1.0) * self.gamma * self.gamma / 4.0
    }

    /// Largest moment of the γ'-boundary measure that is finite: `4/γ'²`.
    pub fn moment_threshold(&self) -> f64 {
        4.0 / (self.gamma_prime * self.gamma_prime)
    }
}

/// The variation exponent `γ'·d_γ / (2γ)`.
pub fn variation_exponent(params: &LqgParams) -> f64 {
    params.gamma_prime * params.d_gamma / (2.0 * params.gamma)
}

/// `1 − ψ_γ(γ'/γ)`; the variation sums at level `n` are scaled by `2^{-n·this}`.
/// Zero when `γ' = γ`, and of the sign of `γ − γ'` otherwise.
pub fn normalization_exponent(params: &LqgParams) -> f64 {
    1.0 - params.increment_psi()
}

/// Geometry of the coalescence proxy used to classify good points.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoalescenceConfig {
    pub alpha1: f64,
    pub alpha2: f64,
    /// Containment factor for geodesic segments around the coalescence disk.
    pub annulus_ratio: f64,
}

impl Default for CoalescenceConfig {
    fn default() -> Self {
        CoalescenceConfig {
            alpha1: 0.25,
            alpha2: 0.5,
            annulus_ratio: 2.0,
        }
    }
}

impl CoalescenceConfig {
    pub fn new(alpha1: f64, alpha2: f64, annulus_ratio: f64) -> Result<Self> {
        let cfg = CoalescenceConfig { alpha1, alpha2, annulus_ratio };
        cfg.check_order()?;
        Ok(cfg)
    }

    fn check_order(&self) -> Result<()> {
        if !(self.alpha1 > 0.0 && self.alpha1 < self.alpha2 && self.alpha2 < 1.0) {
            return Err(Error::param(
                "alpha2",
                format!("need 0 < alpha1 < alpha2 < 1, got alpha1 = {}, alpha2 = {}", self.alpha1, self.alpha2),
            ));
        }
        if !(self.annulus_ratio.is_finite() && self.annulus_ratio > 1.0) {
            return Err(Error::param("annulus_ratio", format!("{} must exceed 1", self.annulus_ratio)));
        }
        Ok(())
    }

    /// Radius `2^{-n(1-α₂)}` within which a coalescence point makes `u` good.
    pub fn outer_radius(&self, n: u32) -> f64 {
        (-(n as f64) * (1.0 - self.alpha2)).exp2()
    }

    /// Radius `2^{-n(1-α₁)}` of the disk containing the probed pair.
    pub fn inner_radius(&self, n: u32) -> f64 {
        (-(n as f64) * (1.0 - self.alpha1)).exp2()
    }
}

/// Whether `(1-α₂)·γ'd_γ/(2γ) − α₂·ψ_γ(γ'/γ) > 0`.
pub fn check_alpha(cfg: &CoalescenceConfig, params: &LqgParams) -> Result<bool> {
    cfg.check_order()?;
    let lhs = (1.0 - cfg.alpha2) * variation_exponent(params) - cfg.alpha2 * params.increment_psi();
    Ok(lhs > 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn psi_examples() {
        for g in [0.3, 1.0, GAMMA_BROWNIAN, 1.9] {
            assert_eq!(psi(g, 1.0).unwrap(), 1.0);
            assert_eq!(psi(g, 0.0).unwrap(), 0.0);
        }
        for g in [0.5_f64, 1.0, 1.5] {
            assert!((psi(g, 4.0 / (g * g)).unwrap() - 1.0).abs() < 1e-12);
        }
        assert!(psi(2.0, 1.0).is_err());
        assert!(psi(0.0, 1.0).is_err());
        assert!(psi(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn variation_exponent_examples() {
        assert!((variation_exponent(&LqgParams::brownian()) - 2.0).abs() < 1e-12);
        let p = LqgParams::new(1.2, 1.2, 3.1).unwrap();
        assert!((variation_exponent(&p) - 3.1 / 2.0).abs() < 1e-12);
        let p = LqgParams::new(1.0, 0.5, 2.5).unwrap();
        assert!((variation_exponent(&p) - 0.625).abs() < 1e-12);
    }

    #[test]
    fn normalization_exponent_examples() {
        assert_eq!(normalization_exponent(&LqgParams::brownian()), 0.0);
        let p = LqgParams::new(1.0, 0.5, 2.5).unwrap();
        assert!((normalization_exponent(&p) - 0.4375).abs() < 1e-12);
        let p = LqgParams::new(1.3, 0.7, 2.8).unwrap();
        let expect = p.gamma_prime * (p.q_prime - p.q) / 2.0;
        assert!((normalization_exponent(&p) - expect).abs() < 1e-12);
    }

    #[test]
    fn known_dimension_only_at_brownian_gamma() {
        let p = LqgParams::with_known_dimension(GAMMA_BROWNIAN, 1.0).unwrap();
        assert_eq!(p.d_gamma, 4.0);
        assert!((p.xi - GAMMA_BROWNIAN / 4.0).abs() < 1e-15);
        assert!(LqgParams::with_known_dimension(1.0, 1.0).is_err());
        assert!(LqgParams::new(1.0, 1.0, 2.0).is_err());
        assert!(LqgParams::new(1.0, 2.0, 3.0).is_err());
    }

    #[test]
    fn check_alpha_examples() {
        let p = LqgParams::brownian();
        assert!(check_alpha(&CoalescenceConfig::new(0.25, 0.5, 2.0).unwrap(), &p).unwrap());
        assert!(!check_alpha(&CoalescenceConfig::new(0.25, 0.7, 2.0).unwrap(), &p).unwrap());
        assert!(check_alpha(&CoalescenceConfig::default(), &p).unwrap());
        let bad = CoalescenceConfig { alpha1: 0.6, alpha2: 0.5, annulus_ratio: 2.0 };
        assert!(check_alpha(&bad, &p).is_err());
        assert!(CoalescenceConfig::new(0.2, 0.5, 1.0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]

        #[test]
        fn increment_psi_identities(g in 0.001f64..1.999, gp in 0.001f64..1.999) {
            let p = LqgParams::new(g, gp, 3.0).unwrap();
            let lhs = psi(g, gp / g).unwrap();
            prop_assert!((lhs - (gp * p.q / 2.0 - gp * gp / 4.0)).abs() <= 1e-12);
            prop_assert!((1.0 - lhs - gp * (p.q_prime - p.q) / 2.0).abs() <= 1e-12);
            prop_assert!(lhs > 0.0);
            let norm = normalization_exponent(&p);
            if gp < g { prop_assert!(norm > 0.0) } else if gp > g { prop_assert!(norm < 0.0) }
        }

        #[test]
        fn moment_coefficient_positive(gp in 0.01f64..1.99, t in 0.001f64..0.999) {
            let upper = 4.0 / (gp * gp);
            let p = 1.0 + t * (upper - 1.0);
            prop_assert!(psi(gp, p).unwrap() - 1.0 > 0.0);
        }

        #[test]
        fn small_alpha2_always_admissible(g in 0.05f64..1.95, gp in 0.05f64..1.95, d in 2.01f64..10.0) {
            let p = LqgParams::new(g, gp, d).unwrap();
            let cfg = CoalescenceConfig::new(1e-7, 2e-7, 2.0).unwrap();
            prop_assert!(check_alpha(&cfg, &p).unwrap());
        }
    }
}
