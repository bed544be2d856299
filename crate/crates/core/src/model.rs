//! Model parameters and closed-form quantities: the critical exponent, the
//! singular stationary amplitude, the Laplace fundamental solution, the
//! algebraic sub-solution family, the root thresholds controlling it, and the
//! double-exponential weight entering the profile energy.

use crate::error::{Error, Result};

/// Critical exponent below which the absorption power admits singular
/// stationary states: infinite for d = 2, d/(d-2) for d >= 3.
pub fn serrin_exponent(d: u32) -> Result<f64> {
    match d {
        0 | 1 => Err(Error::domain("serrin_exponent", "dimension must be >= 2")),
        2 => Ok(f64::INFINITY),
        _ => Ok(f64::from(d) / f64::from(d - 2)),
    }
}

/// Surface area of the unit sphere in d dimensions, |S^{d-1}|.
pub fn sphere_area(d: u32) -> f64 {
    let half_d = f64::from(d) / 2.0;
    (std::f64::consts::LN_2
        + std::f64::consts::PI.ln() * half_d
        - crate::specialfn::ln_gamma(half_d))
    .exp()
}

/// Problem parameters: dimension, absorption power, source strength.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    d: u32,
    p: f64,
    alpha: f64,
}

impl ModelParams {
    /// Validates admissibility: d >= 2, p > 1, p strictly below the critical
    /// exponent, alpha >= 0.
    pub fn new(d: u32, p: f64, alpha: f64) -> Result<Self> {
        if d < 2 {
            return Err(Error::domain("ModelParams", format!("dimension d = {d} must be >= 2")));
        }
        if !(p > 1.0) || !p.is_finite() {
            return Err(Error::domain("ModelParams", format!("absorption power p = {p} must be > 1")));
        }
        let p_star = serrin_exponent(d)?;
        if p >= p_star {
            return Err(Error::domain(
                "ModelParams",
                format!("p = {p} must be strictly below the critical exponent {p_star} for d = {d}"),
            ));
        }
        if !(alpha >= 0.0) || !alpha.is_finite() {
            return Err(Error::domain("ModelParams", format!("source strength alpha = {alpha} must be >= 0")));
        }
        Ok(ModelParams { d, p, alpha })
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        ModelParams::new(self.d, self.p, alpha)
    }
}

/// Amplitude c(p, d) of the singular stationary state c(p,d) r^{-2/(p-1)}.
pub fn singular_amplitude(p: f64, d: u32) -> Result<f64> {
    if d < 2 || !(p > 1.0) {
        return Err(Error::domain("singular_amplitude", format!("need d >= 2 and p > 1, got d = {d}, p = {p}")));
    }
    let bracket = 2.0 / (p - 1.0) * (2.0 * p / (p - 1.0) - f64::from(d));
    if bracket <= 0.0 {
        return Err(Error::domain(
            "singular_amplitude",
            format!("p = {p} is at or above the critical exponent for d = {d}"),
        ));
    }
    Ok(bracket.powf(1.0 / (p - 1.0)))
}

/// Fundamental solution of the Laplacian: log for d = 2, power law for d >= 3.
pub fn fundamental_solution(r: f64, d: u32) -> Result<f64> {
    if r <= 0.0 {
        return Err(Error::domain("fundamental_solution", format!("r = {r} must be positive")));
    }
    if d < 2 {
        return Err(Error::domain("fundamental_solution", "dimension must be >= 2"));
    }
    if d == 2 {
        Ok((1.0 / r).ln() / (2.0 * std::f64::consts::PI))
    } else {
        let df = f64::from(d);
        Ok(r.powf(2.0 - df) / ((df - 2.0) * sphere_area(d)))
    }
}

/// The singular stationary state v_inf(r) = c(p,d) r^{-2/(p-1)}, the upper
/// envelope of all stationary states.
pub fn v_infinity(r: f64, params: &ModelParams) -> Result<f64> {
    if r <= 0.0 {
        return Err(Error::domain("v_infinity", format!("r = {r} must be positive")));
    }
    let c = singular_amplitude(params.p(), params.d())?;
    Ok(c * r.powf(-2.0 / (params.p() - 1.0)))
}

/// Shape parameters (gamma, b) of the algebraic sub-solution family
/// c(p,d) / (r + b r^gamma)^{2/(p-1)}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubsolutionShape {
    pub gamma: f64,
    pub b: f64,
}

impl SubsolutionShape {
    /// Validates gamma in [gamma_bar, 1) and b >= 0.
    pub fn new(params: &ModelParams, gamma: f64, b: f64) -> Result<Self> {
        let th = gamma_thresholds(params.p(), params.d())?;
        if !(gamma < 1.0) || gamma < th.gamma_bar {
            return Err(Error::domain(
                "SubsolutionShape",
                format!("gamma = {gamma} must lie in [{}, 1)", th.gamma_bar),
            ));
        }
        if !(b >= 0.0) {
            return Err(Error::domain("SubsolutionShape", format!("b = {b} must be >= 0")));
        }
        Ok(SubsolutionShape { gamma, b })
    }
}

/// The sub-solution v_0(r) = c(p,d)/(r + b r^gamma)^{2/(p-1)}.
pub fn subsolution_v0(r: f64, params: &ModelParams, shape: &SubsolutionShape) -> Result<f64> {
    if r <= 0.0 {
        return Err(Error::domain("subsolution_v0", format!("r = {r} must be positive")));
    }
    let c = singular_amplitude(params.p(), params.d())?;
    Ok(c * (r + shape.b * r.powf(shape.gamma)).powf(-2.0 / (params.p() - 1.0)))
}

/// Thresholds controlling when the algebraic family is a sub-solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaThresholds {
    /// (d-2)(p-1)/2; zero in two dimensions.
    pub gamma1: f64,
    /// Smallest root of s(gamma) = gamma^2 - (4p/(p-1) - d) gamma + d - 1.
    pub gamma2: f64,
    /// max(gamma1, gamma2).
    pub gamma_bar: f64,
}

/// The quadratic s(gamma) whose sign decides the sub-solution inequality.
pub fn s_quadratic(gamma: f64, p: f64, d: u32) -> f64 {
    gamma * gamma - (4.0 * p / (p - 1.0) - f64::from(d)) * gamma + f64::from(d) - 1.0
}

pub fn gamma_thresholds(p: f64, d: u32) -> Result<GammaThresholds> {
    // Validity of (p, d) piggybacks on the amplitude bracket.
    singular_amplitude(p, d)?;
    let gamma1 = f64::from(d - 2) * (p - 1.0) / 2.0;
    // Roots of gamma^2 - s1 gamma + s0 via the q-form, which stays accurate
    // when s1 is large (p near 1).
    let s1 = 4.0 * p / (p - 1.0) - f64::from(d);
    let s0 = f64::from(d) - 1.0;
    let disc = s1 * s1 - 4.0 * s0;
    if disc < 0.0 {
        return Err(Error::domain("gamma_thresholds", "discriminant negative; parameters inadmissible"));
    }
    let q = 0.5 * (s1 + disc.sqrt());
    let gamma2 = s0 / q;
    let gamma_bar = gamma1.max(gamma2);
    Ok(GammaThresholds {
        gamma1,
        gamma2,
        gamma_bar,
    })
}

/// Coefficient K(d) appearing in the rewritten profile energy: 1 for d = 2,
/// (p*+1)/(p*-1) for d >= 3.
pub fn k_coefficient(d: u32) -> Result<f64> {
    if d < 2 {
        return Err(Error::domain("k_coefficient", "dimension must be >= 2"));
    }
    if d == 2 {
        Ok(1.0)
    } else {
        let p_star = serrin_exponent(d)?;
        Ok((p_star + 1.0) / (p_star - 1.0))
    }
}

/// log of the weight rho(zeta) = exp(e^{2 zeta}/4 - chi zeta), where
/// chi = (p+3)/(p-1) - d + 1. Callers forming products should stay in
/// log space: rho itself overflows near zeta ~ 3.5.
pub fn log_weight_rho(zeta: f64, params: &ModelParams) -> f64 {
    let chi = (params.p() + 3.0) / (params.p() - 1.0) - f64::from(params.d()) + 1.0;
    (2.0 * zeta).exp() / 4.0 - chi * zeta
}

/// The weight itself; prefer `log_weight_rho` inside integrals.
pub fn weight_rho(zeta: f64, params: &ModelParams) -> f64 {
    log_weight_rho(zeta, params).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn serrin_values() {
        assert_eq!(serrin_exponent(2).unwrap(), f64::INFINITY);
        assert_eq!(serrin_exponent(3).unwrap(), 3.0);
        assert_eq!(serrin_exponent(4).unwrap(), 2.0);
        assert!(serrin_exponent(1).is_err());
    }

    #[test]
    fn amplitude_values() {
        assert!((singular_amplitude(2.0, 2).unwrap() - 4.0).abs() < 1e-14);
        assert!((singular_amplitude(2.0, 3).unwrap() - 2.0).abs() < 1e-14);
        assert!(singular_amplitude(3.0, 3).is_err(), "bracket vanishes at the critical power");
    }

    #[test]
    fn amplitude_positive_iff_below_critical() {
        for d in [3u32, 4, 5] {
            let p_star = serrin_exponent(d).unwrap();
            for k in 1..40 {
                let p = 1.0 + k as f64 * 0.1;
                let res = singular_amplitude(p, d);
                if p < p_star {
                    assert!(res.unwrap() > 0.0, "p={p} d={d}");
                } else {
                    assert!(res.is_err(), "p={p} d={d}");
                }
            }
        }
    }

    #[test]
    fn fundamental_solution_values() {
        assert_eq!(fundamental_solution(1.0, 2).unwrap(), 0.0);
        let v = fundamental_solution(1.0, 3).unwrap();
        assert!((v - 1.0 / (4.0 * std::f64::consts::PI)).abs() < 1e-15);
        let r = (-2.0 * std::f64::consts::PI).exp();
        assert!((fundamental_solution(r, 2).unwrap() - 1.0).abs() < 1e-12);
        assert!(fundamental_solution(0.0, 3).is_err());
    }

    #[test]
    fn v_infinity_values() {
        let params = ModelParams::new(2, 2.0, 1.0).unwrap();
        assert!((v_infinity(1.0, &params).unwrap() - 4.0).abs() < 1e-13);
        assert!((v_infinity(2.0, &params).unwrap() - 1.0).abs() < 1e-13);
    }

    proptest! {
        #[test]
        fn v_infinity_scaling_law(lambda in 0.01f64..100.0, r in 0.01f64..50.0) {
            let params = ModelParams::new(3, 2.0, 1.0).unwrap();
            let lhs = v_infinity(lambda * r, &params).unwrap();
            let rhs = lambda.powf(-2.0 / (params.p() - 1.0)) * v_infinity(r, &params).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-11 * rhs.abs());
        }

        #[test]
        fn subsolution_below_envelope_and_decreasing_in_b(
            r in 0.05f64..20.0, b1 in 0.001f64..5.0, db in 0.001f64..5.0
        ) {
            let params = ModelParams::new(2, 2.0, 1.0).unwrap();
            let shape1 = SubsolutionShape::new(&params, 0.5, b1).unwrap();
            let shape2 = SubsolutionShape::new(&params, 0.5, b1 + db).unwrap();
            let env = v_infinity(r, &params).unwrap();
            let v1 = subsolution_v0(r, &params, &shape1).unwrap();
            let v2 = subsolution_v0(r, &params, &shape2).unwrap();
            prop_assert!(v1 < env);
            prop_assert!(v2 < v1);
        }
    }

    #[test]
    fn subsolution_reduces_to_envelope_at_b_zero() {
        let params = ModelParams::new(3, 2.0, 1.0).unwrap();
        let shape = SubsolutionShape::new(&params, 0.6, 0.0).unwrap();
        for &r in &[0.1, 1.0, 7.0] {
            let v0 = subsolution_v0(r, &params, &shape).unwrap();
            let vi = v_infinity(r, &params).unwrap();
            assert!((v0 - vi).abs() < 1e-13 * vi);
        }
        // Hand value: 4/(1+1)^2 = 1 at r = 1, p = 2, d = 2, gamma = 0.5, b = 1.
        let params2 = ModelParams::new(2, 2.0, 1.0).unwrap();
        let s = SubsolutionShape::new(&params2, 0.5, 1.0).unwrap();
        assert!((subsolution_v0(1.0, &params2, &s).unwrap() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn gamma_threshold_values() {
        for &p in &[1.3, 2.0, 5.0, 20.0] {
            let th = gamma_thresholds(p, 2).unwrap();
            assert_eq!(th.gamma1, 0.0, "gamma1 vanishes in two dimensions");
        }
        let th = gamma_thresholds(2.0, 3).unwrap();
        assert!((th.gamma1 - 0.5).abs() < 1e-14);
        assert!((th.gamma2 - (5.0 - 17.0f64.sqrt()) / 2.0).abs() < 1e-13);
        assert!((th.gamma_bar - 0.5).abs() < 1e-14);
    }

    #[test]
    fn s_at_one_identity() {
        // s(1) = -(2d/(p-1)) (1 - p/p*), with p/p* = 0 understood for d = 2.
        for &(p, d) in &[(2.0, 3u32), (1.5, 2), (2.5, 3), (1.5, 4), (1.2, 5)] {
            let s1 = s_quadratic(1.0, p, d);
            let p_star = serrin_exponent(d).unwrap();
            let want = -(2.0 * f64::from(d) / (p - 1.0)) * (1.0 - p / p_star);
            assert!((s1 - want).abs() < 1e-12, "(p,d)=({p},{d}): {s1} vs {want}");
            assert!(s1 < 0.0);
        }
        let s1 = s_quadratic(1.0, 2.0, 3);
        assert!((s1 + 2.0).abs() < 1e-14);
    }

    #[test]
    fn gamma_bar_band_satisfies_both_conditions() {
        for &(p, d) in &[(2.0, 2u32), (2.0, 3), (1.5, 2), (2.5, 3), (1.9, 4)] {
            let th = gamma_thresholds(p, d).unwrap();
            assert!(th.gamma_bar >= 0.0 && th.gamma_bar < 1.0);
            let mut gamma = th.gamma_bar;
            while gamma < 1.0 {
                assert!(s_quadratic(gamma, p, d) <= 1e-12, "s > 0 at gamma={gamma} (p,d)=({p},{d})");
                assert!(gamma >= th.gamma1 - 1e-15);
                gamma += (1.0 - th.gamma_bar) / 57.0;
            }
        }
    }

    #[test]
    fn k_values() {
        assert_eq!(k_coefficient(2).unwrap(), 1.0);
        assert!((k_coefficient(3).unwrap() - 2.0).abs() < 1e-14);
        assert!((k_coefficient(4).unwrap() - 3.0).abs() < 1e-14);
    }

    #[test]
    fn weight_values() {
        let params = ModelParams::new(2, 2.0, 1.0).unwrap();
        assert!((weight_rho(0.0, &params) - 0.25f64.exp()).abs() < 1e-14);
        // Exponent coefficient (p+3)/(p-1) - d + 1 = 4 at (2, 2).
        let lw = log_weight_rho(-10.0, &params);
        assert!((lw - (40.0 + (-20.0f64).exp() / 4.0)).abs() < 1e-10);
        // Dominant growth: log rho >= e^{2 zeta}/8 once zeta is large.
        for &z in &[2.5, 3.0, 3.5] {
            assert!(log_weight_rho(z, &params) >= (2.0 * z).exp() / 8.0);
        }
    }

    #[test]
    fn params_admissibility() {
        assert!(ModelParams::new(3, 3.0, 1.0).is_err());
        assert!(ModelParams::new(2, 7.0, 1.0).is_ok());
        assert!(ModelParams::new(3, 2.9, 1.0).is_ok());
        assert!(ModelParams::new(2, 1.0, 1.0).is_err());
        assert!(ModelParams::new(2, 2.0, -0.1).is_err());
        assert!(ModelParams::new(1, 2.0, 1.0).is_err());
    }

    #[test]
    fn sphere_areas() {
        assert!((sphere_area(2) - 2.0 * std::f64::consts::PI).abs() < 1e-12);
        assert!((sphere_area(3) - 4.0 * std::f64::consts::PI).abs() < 1e-12);
        assert!((sphere_area(4) - 2.0 * std::f64::consts::PI * std::f64::consts::PI).abs() < 1e-11);
    }
}
