//! Shared oracles for the acceptance suite: adaptive-quadrature evaluation of
//! the incomplete gamma integral, and the exact linear solution convolved
//! with the mollifier (the reference the linear-mode solver is held to).

use sourcesink::mollifier::Mollifier;
use sourcesink::quad::{adaptive_simpson, adaptive_simpson_rel};
use sourcesink::specialfn;

/// Gamma(a, x) as the log-substituted defining integral, independent of the
/// series/continued-fraction implementation.
pub fn gamma_oracle(a: f64, x: f64) -> f64 {
    let integrand = |w: f64| (a * w - w.exp()).exp();
    let lo = x.ln();
    let hi = 9.0f64.max(lo + 1.0);
    adaptive_simpson_rel(&integrand, lo, hi, 1e-13)
}

/// Exact solution of the mollified linear problem: the point-source solution
/// I(., t) convolved with g_n, reduced to one- (d=3) or two-dimensional
/// (d=2) quadrature over the mollifier support. Requires r > 1/n.
pub fn linear_oracle_convolved(r: f64, t: f64, d: u32, alpha: f64, moll: &Mollifier) -> f64 {
    assert!(r > moll.support_radius());
    match d {
        3 => {
            // (I * g)(r) = (1/2r) int rho g(rho) [P(r+rho) - P(r-rho)] drho,
            // with P an antiderivative of erfc(a s) and a = 1/(2 sqrt t).
            let a = 1.0 / (2.0 * t.sqrt());
            let p = |s: f64| s * libm::erfc(a * s) - (-a * a * s * s).exp() / (a * std::f64::consts::PI.sqrt());
            let integrand = |rho: f64| {
                if rho <= 0.0 {
                    0.0
                } else {
                    rho * moll.eval(rho) * (p(r + rho) - p(r - rho))
                }
            };
            let val = adaptive_simpson(&integrand, 0.0, moll.support_radius(), 1e-14, 30);
            alpha * val / (2.0 * r)
        }
        2 => {
            // Angular average of I(|x - y|) over the support.
            let kernel = |s: f64| specialfn::exponential_integral_e1(s * s / (4.0 * t)) / (4.0 * std::f64::consts::PI);
            let inner = |rho: f64| {
                adaptive_simpson(
                    &|theta: f64| {
                        let s = (r * r + rho * rho - 2.0 * r * rho * theta.cos()).sqrt();
                        kernel(s)
                    },
                    0.0,
                    std::f64::consts::PI,
                    1e-12,
                    22,
                ) * 2.0
            };
            let val = adaptive_simpson(
                &|rho: f64| if rho <= 0.0 { 0.0 } else { rho * moll.eval(rho) * inner(rho) },
                0.0,
                moll.support_radius(),
                1e-12,
                18,
            );
            alpha * val
        }
        _ => unimplemented!("oracle implemented for d = 2, 3"),
    }
}

/// Deterministic pseudo-random stream (SplitMix64) for candidate generation.
pub struct SplitMix64(pub u64);

impl SplitMix64 {
    pub fn next_f64(&mut self) -> f64 {
        self.0 = self.0.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^= z >> 31;
        (z >> 11) as f64 / (1u64 << 53) as f64
    }
}
