//! Weak-form residual of the distributional formulation with zero initial
//! data: quadrature of
//!   ∫∫ u (phi_t + Δphi - u^{p-1} phi) dx dt + alpha ∫ phi(0, t) dt
//! over a recorded trace, for smooth compactly supported space-time test
//! functions with analytically coded derivatives (differentiating quadrature
//! data would wreck the convergence order being measured).

use crate::error::{Error, Result};
use crate::evolve::{fv_geometry, EvolutionTrace};
use crate::model::{sphere_area, ModelParams};
use crate::par;
use crate::quad::adaptive_simpson;

/// Tensor-product bump psi(r) chi(t). `r_lo = 0` selects the even at-axis
/// bump psi(r) = B(r/r_hi); positive `r_lo` an annular bump vanishing at both
/// radial ends.
#[derive(Debug, Clone, Copy)]
pub struct TestFunction {
    pub r_lo: f64,
    pub r_hi: f64,
    pub t_lo: f64,
    pub t_hi: f64,
}

fn bump(s: f64) -> f64 {
    if s.abs() < 1.0 {
        (-1.0 / (1.0 - s * s)).exp()
    } else {
        0.0
    }
}

fn bump_d1(s: f64) -> f64 {
    if s.abs() < 1.0 {
        let w = 1.0 - s * s;
        bump(s) * (-2.0 * s / (w * w))
    } else {
        0.0
    }
}

fn bump_d2(s: f64) -> f64 {
    if s.abs() < 1.0 {
        let w = 1.0 - s * s;
        let g1 = -2.0 * s / (w * w);
        let g2 = -(2.0 + 6.0 * s * s) / (w * w * w);
        bump(s) * (g1 * g1 + g2)
    } else {
        0.0
    }
}

impl TestFunction {
    pub fn new(r_lo: f64, r_hi: f64, t_lo: f64, t_hi: f64) -> Result<Self> {
        if r_lo < 0.0 || r_hi <= r_lo || t_lo < 0.0 || t_hi <= t_lo {
            return Err(Error::domain("TestFunction", "need 0 <= r_lo < r_hi and 0 <= t_lo < t_hi"));
        }
        Ok(TestFunction {
            r_lo,
            r_hi,
            t_lo,
            t_hi,
        })
    }

    fn radial(&self, r: f64) -> (f64, f64, f64) {
        if self.r_lo == 0.0 {
            let s = r / self.r_hi;
            let ds = 1.0 / self.r_hi;
            (bump(s), bump_d1(s) * ds, bump_d2(s) * ds * ds)
        } else {
            let half = 0.5 * (self.r_hi - self.r_lo);
            let s = (r - 0.5 * (self.r_lo + self.r_hi)) / half;
            let ds = 1.0 / half;
            (bump(s), bump_d1(s) * ds, bump_d2(s) * ds * ds)
        }
    }

    pub fn value(&self, r: f64, t: f64) -> f64 {
        self.radial(r).0 * self.temporal(t).0
    }

    pub fn dt(&self, r: f64, t: f64) -> f64 {
        self.radial(r).0 * self.temporal(t).1
    }

    /// Radial Laplacian psi'' + (d-1)/r psi' (times chi); the axis limit is
    /// d psi''(0).
    pub fn laplacian(&self, r: f64, t: f64, d: u32) -> f64 {
        let (_, p1, p2) = self.radial(r);
        let chi = self.temporal(t).0;
        if r == 0.0 {
            f64::from(d) * p2 * chi
        } else {
            (p2 + f64::from(d - 1) / r * p1) * chi
        }
    }

    fn temporal(&self, t: f64) -> (f64, f64) {
        let half = 0.5 * (self.t_hi - self.t_lo);
        let s = (t - 0.5 * (self.t_lo + self.t_hi)) / half;
        (bump(s), bump_d1(s) / half)
    }

    /// ∫ chi(t) dt over the support, by adaptive quadrature of the analytic
    /// bump.
    pub fn temporal_mass(&self) -> f64 {
        adaptive_simpson(&|t| self.temporal(t).0, self.t_lo, self.t_hi, 1e-13, 40)
    }

    pub fn value_at_axis(&self) -> f64 {
        self.radial(0.0).0
    }
}

/// Absolute weak-form residual of a trace against a test function. Expected
/// magnitude is O(h^2 + dt + mollifier width); exactly zero for the zero
/// solution.
pub fn weak_form_residual(
    trace: &EvolutionTrace,
    test: &TestFunction,
    params: &ModelParams,
) -> Result<f64> {
    if test.t_hi >= *trace.times.last().unwrap_or(&0.0) {
        return Err(Error::domain(
            "weak_form_residual",
            "test function support must end before the last recorded snapshot",
        ));
    }
    if test.r_hi >= trace.grid.r_out() {
        return Err(Error::domain(
            "weak_form_residual",
            "test function support must sit inside the resolved radius",
        ));
    }
    let geom = fv_geometry(&trace.grid);
    let area = sphere_area(params.d());
    let p = params.p();
    let d = params.d();
    let nodes = trace.grid.nodes().to_vec();

    // Spatial integral at each snapshot (finite-volume weights), in parallel.
    let indices: Vec<usize> = (0..trace.times.len()).collect();
    let space_integrals = par::map_collect(&indices, |&k| {
        let t = trace.times[k];
        if t <= test.t_lo || t >= test.t_hi {
            return 0.0;
        }
        let field = &trace.fields[k];
        let mut acc = 0.0;
        for (i, &r) in nodes.iter().enumerate() {
            if r >= test.r_hi {
                break;
            }
            let u = field[i];
            if u == 0.0 {
                continue;
            }
            let phi_t = test.dt(r, t);
            let lap = test.laplacian(r, t, d);
            let phi = test.value(r, t);
            acc += geom.volumes[i] * u * (phi_t + lap - u.powf(p - 1.0) * phi);
        }
        acc * area
    });

    let time_integral = integrate_time(&trace.times, &space_integrals);
    let source_term = params.alpha() * test.value_at_axis() * test.temporal_mass();
    Ok((time_integral + source_term).abs())
}

/// Composite quadrature over the snapshot times: Simpson on uniform spacing,
/// trapezoid otherwise.
fn integrate_time(ts: &[f64], vals: &[f64]) -> f64 {
    let n = ts.len();
    if n < 2 {
        return 0.0;
    }
    let h = ts[1] - ts[0];
    let uniform = ts.windows(2).all(|w| ((w[1] - w[0]) - h).abs() < 1e-9 * h.max(1e-12));
    if uniform && n >= 3 {
        let mut acc = 0.0;
        let mut i = 0;
        while i + 2 < n {
            acc += h / 3.0 * (vals[i] + 4.0 * vals[i + 1] + vals[i + 2]);
            i += 2;
        }
        if i + 1 < n {
            acc += 0.5 * h * (vals[i] + vals[i + 1]);
        }
        acc
    } else {
        let mut acc = 0.0;
        for i in 0..n - 1 {
            acc += 0.5 * (ts[i + 1] - ts[i]) * (vals[i] + vals[i + 1]);
        }
        acc
    }
}
