//! The weighted profile energy, its gradient and banded Hessian.
//!
//! The integrand is
//!   { (phi')^2/2 + C1 eta - C2 phi^2 (p+1 - 2 phi^{p-1}) } rho(zeta),
//! with rho the double-exponential weight. rho is only ever touched in log
//! space: node contributions are assembled as sign * exp(log rho + ln|term|),
//! skipped entirely when that exponent is below the underflow floor, and
//! rejected as inadmissible when it approaches overflow (a candidate whose
//! tail fails to decay where rho is astronomically large).

use crate::error::{Error, Result};
use crate::grid::ZetaGrid;
use crate::linalg::Banded;
use crate::model::{log_weight_rho, ModelParams};

/// Node contributions with exponent below this are exact zeros in f64.
const UNDERFLOW_FLOOR: f64 = -745.0;
/// Exponents above this signal a candidate violating tail decay: genuine
/// profiles never push log rho + ln|integrand| past a few tens.
const OVERFLOW_GUARD: f64 = 500.0;

/// Precomputed per-grid data for energy evaluations.
pub struct EnergyModel {
    h: f64,
    p: f64,
    /// C2 = beta / ((p-1)(p+1)); C1 is represented exactly as (p-1) C2 so the
    /// plateau integrand cancels to zero in floating point.
    c2: f64,
    log_rho: Vec<f64>,
    eta: Vec<f64>,
    weights: Vec<f64>,
}

impl EnergyModel {
    pub fn new(grid: &ZetaGrid, params: &ModelParams) -> Self {
        let p = params.p();
        let beta = (p + 1.0) / (p - 1.0) - f64::from(params.d()) + 1.0;
        let c2 = beta / ((p - 1.0) * (p + 1.0));
        let n = grid.len();
        let h = grid.h();
        let log_rho = grid.nodes().iter().map(|&z| log_weight_rho(z, params)).collect();
        let eta = grid.nodes().iter().map(|&z| super::cutoff_eta(z)).collect();
        let mut weights = vec![h; n];
        weights[0] = 0.5 * h;
        weights[n - 1] = 0.5 * h;
        EnergyModel {
            h,
            p,
            c2,
            log_rho,
            eta,
            weights,
        }
    }

    /// Potential part V(phi) = phi^2 (p+1 - 2 |phi|^{p-1}).
    fn v(&self, phi: f64) -> f64 {
        (self.p + 1.0) * phi * phi - 2.0 * phi.abs().powf(self.p - 1.0) * phi * phi
    }

    fn v_prime(&self, phi: f64) -> f64 {
        2.0 * (self.p + 1.0) * (phi - phi.abs().powf(self.p - 1.0) * phi)
    }

    fn v_second(&self, phi: f64) -> f64 {
        2.0 * (self.p + 1.0) * (1.0 - self.p * phi.abs().powf(self.p - 1.0))
    }

    /// Finite differences of the candidate: centered inside, one-sided
    /// second-order at the two ends.
    fn derivative(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        let h = self.h;
        let mut d = vec![0.0; n];
        d[0] = (-3.0 * x[0] + 4.0 * x[1] - x[2]) / (2.0 * h);
        d[n - 1] = (3.0 * x[n - 1] - 4.0 * x[n - 2] + x[n - 3]) / (2.0 * h);
        for i in 1..n - 1 {
            d[i] = (x[i + 1] - x[i - 1]) / (2.0 * h);
        }
        d
    }

    /// The weighted bracket at node i and the guard exponent for its
    /// magnitude.
    fn node_term(&self, i: usize, x: f64, dx: f64) -> Result<f64> {
        // (p-1) eta - V(phi) vanishes identically on the plateau; keeping C1
        // as (p-1) C2 preserves that cancellation in floating point.
        let bracket = 0.5 * dx * dx + self.c2 * ((self.p - 1.0) * self.eta[i] - self.v(x));
        if bracket == 0.0 {
            return Ok(0.0);
        }
        let magnitude = x.abs().max(dx.abs()).max(self.eta[i]).max(1e-320);
        if self.log_rho[i] + 2.0 * magnitude.ln() < UNDERFLOW_FLOOR {
            return Ok(0.0);
        }
        let exponent = self.log_rho[i] + bracket.abs().ln();
        if exponent > OVERFLOW_GUARD {
            return Err(Error::EnergyOverflow(format!(
                "node {i}: log rho + ln|integrand| = {exponent:.1} exceeds the guard; candidate tail does not decay"
            )));
        }
        if exponent < UNDERFLOW_FLOOR {
            return Ok(0.0);
        }
        Ok(bracket.signum() * exponent.exp())
    }

    /// Trapezoidal energy of a candidate.
    pub fn energy(&self, x: &[f64]) -> Result<f64> {
        assert_eq!(x.len(), self.log_rho.len());
        let d = self.derivative(x);
        let mut acc = 0.0;
        for i in 0..x.len() {
            acc += self.weights[i] * self.node_term(i, x[i], d[i])?;
        }
        Ok(acc)
    }

    /// Analytic gradient of `energy` with respect to the nodal values.
    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let n = x.len();
        let d = self.derivative(x);
        let mut g = vec![0.0; n];
        // rho_i w_i D_i, guarded; zero when the node is underflow-excluded.
        let mut rho_w_d = vec![0.0; n];
        for i in 0..n {
            let magnitude = x[i].abs().max(d[i].abs()).max(self.eta[i]).max(1e-320);
            if self.log_rho[i] + 2.0 * magnitude.ln() < UNDERFLOW_FLOOR || d[i] == 0.0 {
                continue;
            }
            let exponent = self.log_rho[i] + d[i].abs().ln();
            if exponent > OVERFLOW_GUARD {
                return Err(Error::EnergyOverflow(format!(
                    "node {i}: gradient term overflows (exponent {exponent:.1})"
                )));
            }
            if exponent > UNDERFLOW_FLOOR {
                rho_w_d[i] = self.weights[i] * d[i].signum() * exponent.exp();
            }
        }
        let inv2h = 1.0 / (2.0 * self.h);
        // Derivative stencil adjoint.
        g[0] += -3.0 * inv2h * rho_w_d[0];
        g[1] += 4.0 * inv2h * rho_w_d[0];
        g[2] += -inv2h * rho_w_d[0];
        g[n - 1] += 3.0 * inv2h * rho_w_d[n - 1];
        g[n - 2] += -4.0 * inv2h * rho_w_d[n - 1];
        g[n - 3] += inv2h * rho_w_d[n - 1];
        for i in 1..n - 1 {
            g[i + 1] += inv2h * rho_w_d[i];
            g[i - 1] -= inv2h * rho_w_d[i];
        }
        // Potential part.
        for i in 0..n {
            let vp = self.v_prime(x[i]);
            if vp == 0.0 {
                continue;
            }
            let magnitude = x[i].abs().max(d[i].abs()).max(self.eta[i]).max(1e-320);
            if self.log_rho[i] + 2.0 * magnitude.ln() < UNDERFLOW_FLOOR {
                continue;
            }
            let exponent = self.log_rho[i] + vp.abs().ln();
            if exponent > OVERFLOW_GUARD {
                return Err(Error::EnergyOverflow(format!(
                    "node {i}: potential gradient overflows (exponent {exponent:.1})"
                )));
            }
            if exponent > UNDERFLOW_FLOOR {
                g[i] -= self.weights[i] * self.c2 * vp.signum() * exponent.exp();
            }
        }
        Ok(g)
    }

    /// Banded Hessian (bandwidth 2 from the one-sided end stencils) with an
    /// optional Levenberg shift lambda * w_i rho_i on the diagonal.
    pub fn hessian(&self, x: &[f64], lambda: f64) -> Banded {
        let n = x.len();
        let inv2h = 1.0 / (2.0 * self.h);
        let mut hess = Banded::new(n, 2, 2);
        let rho_w: Vec<f64> = (0..n)
            .map(|i| {
                if self.log_rho[i] > OVERFLOW_GUARD {
                    0.0
                } else {
                    self.weights[i] * self.log_rho[i].exp()
                }
            })
            .collect();
        // D-part: sum_i rho_i w_i (dD_i/dphi_j)(dD_i/dphi_k).
        let mut stencil = |i: usize, cols: &[(usize, f64)]| {
            for &(j, cj) in cols {
                for &(k, ck) in cols {
                    if j.max(k) - j.min(k) <= 2 {
                        hess.add(j, k, rho_w[i] * cj * ck);
                    }
                }
            }
        };
        stencil(0, &[(0, -3.0 * inv2h), (1, 4.0 * inv2h), (2, -inv2h)]);
        stencil(
            n - 1,
            &[(n - 1, 3.0 * inv2h), (n - 2, -4.0 * inv2h), (n - 3, inv2h)],
        );
        for i in 1..n - 1 {
            stencil(i, &[(i - 1, -inv2h), (i + 1, inv2h)]);
        }
        for i in 0..n {
            hess.add(i, i, -rho_w[i] * self.c2 * self.v_second(x[i]) + lambda * rho_w[i]);
        }
        hess
    }

    /// Scale w_i rho_i used to express the gradient as a per-node
    /// Euler-Lagrange residual.
    pub fn residual_scale(&self, i: usize) -> f64 {
        self.weights[i] * self.log_rho[i].min(700.0).exp()
    }
}

/// Trapezoidal discretization of the profile energy of `values` on `grid`.
pub fn energy(values: &[f64], grid: &ZetaGrid, params: &ModelParams) -> Result<f64> {
    EnergyModel::new(grid, params).energy(values)
}

/// Analytic gradient of [`energy`] with respect to the nodal values.
pub fn energy_gradient(values: &[f64], grid: &ZetaGrid, params: &ModelParams) -> Result<Vec<f64>> {
    EnergyModel::new(grid, params).gradient(values)
}
