//! The smooth unit-mass bump replacing the point source, and the truncated
//! absorption nonlinearity that keeps the reaction Lipschitz.

use crate::error::{Error, Result};
use crate::grid::RadialGrid;
use crate::model::sphere_area;
use crate::quad::{adaptive_simpson, gauss5};

/// Smooth radial bump g_n(r) = n^d g(n r), where g is the standard
/// compactly supported bump normalized to unit mass over R^d.
#[derive(Debug, Clone)]
pub struct Mollifier {
    n: u32,
    d: u32,
    amplitude: f64,
}

fn raw_bump(s: f64) -> f64 {
    if s.abs() < 1.0 {
        (-1.0 / (1.0 - s * s)).exp()
    } else {
        0.0
    }
}

impl Mollifier {
    /// Build the width-1/n mollifier in dimension d. The normalizing
    /// amplitude is computed once by quadrature.
    pub fn new(n: u32, d: u32) -> Result<Self> {
        if n < 1 {
            return Err(Error::domain("Mollifier", "inverse width n must be >= 1"));
        }
        if d < 2 {
            return Err(Error::domain("Mollifier", "dimension must be >= 2"));
        }
        let df = f64::from(d);
        let radial_mass = adaptive_simpson(&|r: f64| raw_bump(r) * r.powf(df - 1.0), 0.0, 1.0, 1e-14, 40);
        let amplitude = 1.0 / (sphere_area(d) * radial_mass);
        Ok(Mollifier { n, d, amplitude })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    /// Support radius 1/n.
    pub fn support_radius(&self) -> f64 {
        1.0 / f64::from(self.n)
    }

    /// g_n(r) = n^d g(n r); zero outside the support.
    pub fn eval(&self, r: f64) -> f64 {
        let nf = f64::from(self.n);
        nf.powi(self.d as i32) * self.amplitude * raw_bump(nf * r)
    }

    /// Peak value ||g_n||_inf = n^d g(0).
    pub fn sup_norm(&self) -> f64 {
        f64::from(self.n).powi(self.d as i32) * self.amplitude * (-1.0f64).exp()
    }

    /// Cell-averaged samples of g_n on a radial mesh, in the finite-volume
    /// sense: the i-th entry is the mean of g_n over the i-th dual cell with
    /// respect to the r^{d-1} dr measure. Cell averages (rather than nodal
    /// values) keep the discrete source mass at unity to quadrature accuracy.
    pub fn cell_averages(&self, grid: &RadialGrid) -> Vec<f64> {
        let nodes = grid.nodes();
        let m = nodes.len();
        let df = f64::from(self.d);
        let support = self.support_radius();
        let mut out = vec![0.0; m];
        for i in 0..m {
            let left = if i == 0 { 0.0 } else { 0.5 * (nodes[i - 1] + nodes[i]) };
            let right = if i + 1 == m {
                nodes[m - 1]
            } else {
                0.5 * (nodes[i] + nodes[i + 1])
            };
            if left >= support || right <= left {
                continue;
            }
            let hi = right.min(support);
            let vol = (right.powf(df) - left.powf(df)) / df;
            if vol <= 0.0 {
                continue;
            }
            // Two panels of Gauss keep the bump's curvature resolved even on
            // cells comparable to the support width.
            let mid = 0.5 * (left + hi);
            let f = |r: f64| self.eval(r) * r.powf(df - 1.0);
            let mass = gauss5(&f, left, mid) + gauss5(&f, mid, hi);
            out[i] = mass / vol;
        }
        out
    }

    /// Discrete mass of the cell-averaged source on a grid (should be 1).
    pub fn mass_on_grid(&self, grid: &RadialGrid) -> f64 {
        let nodes = grid.nodes();
        let m = nodes.len();
        let df = f64::from(self.d);
        let avgs = self.cell_averages(grid);
        let mut mass = 0.0;
        for (i, g) in avgs.iter().enumerate() {
            let left = if i == 0 { 0.0 } else { 0.5 * (nodes[i - 1] + nodes[i]) };
            let right = if i + 1 == m {
                nodes[m - 1]
            } else {
                0.5 * (nodes[i] + nodes[i + 1])
            };
            let vol = (right.powf(df) - left.powf(df)) / df;
            mass += g * vol;
        }
        mass * sphere_area(self.d)
    }
}

/// Absorption law u^p capped at the level ubar = (alpha ||g_n||_inf)^{1/p},
/// extended by zero below u = 0. Lipschitz and non-decreasing.
#[derive(Debug, Clone, Copy)]
pub struct TruncatedNonlinearity {
    ubar: f64,
    p: f64,
}

impl TruncatedNonlinearity {
    pub fn new(alpha: f64, p: f64, moll: &Mollifier) -> Self {
        let ubar = (alpha * moll.sup_norm()).powf(1.0 / p);
        TruncatedNonlinearity { ubar, p }
    }

    /// Truncation level ubar_n.
    pub fn ubar(&self) -> f64 {
        self.ubar
    }

    pub fn eval(&self, u: f64) -> f64 {
        if u <= 0.0 {
            0.0
        } else if u <= self.ubar {
            u.powf(self.p)
        } else {
            self.ubar.powf(self.p)
        }
    }

    /// One-sided derivative; zero outside (0, ubar).
    pub fn deriv(&self, u: f64) -> f64 {
        if u <= 0.0 || u > self.ubar {
            0.0
        } else {
            self.p * u.powf(self.p - 1.0)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vanishes_outside_support() {
        let m = Mollifier::new(16, 3).unwrap();
        assert_eq!(m.eval(2.0 / 16.0), 0.0);
        assert!(m.eval(0.5 / 16.0) > 0.0);
    }

    #[test]
    fn unit_mass_on_grid() {
        for d in [2u32, 3] {
            let m = Mollifier::new(64, d).unwrap();
            let grid = RadialGrid::graded(d, 1024, 10.0, 1.0 / (12.0 * 64.0)).unwrap();
            let mass = m.mass_on_grid(&grid);
            assert!((mass - 1.0).abs() < 1e-8, "d={d}: mass {mass}");
        }
    }

    #[test]
    fn continuum_mass_is_one() {
        let m = Mollifier::new(8, 2).unwrap();
        let df = 2.0;
        let radial = adaptive_simpson(
            &|r: f64| m.eval(r) * r.powf(df - 1.0),
            0.0,
            m.support_radius(),
            1e-14,
            40,
        );
        assert!((radial * sphere_area(2) - 1.0).abs() < 1e-11);
    }

    #[test]
    fn truncation_level_consistency() {
        let m = Mollifier::new(32, 3).unwrap();
        let alpha = 1.7;
        let p = 2.0;
        let f = TruncatedNonlinearity::new(alpha, p, &m);
        // ubar = (alpha n^d g(0))^{1/p} with n^d g(0) = g_n(0) = sup g_n.
        let direct = (alpha * m.eval(0.0)).powf(1.0 / p);
        assert!((f.ubar() - direct).abs() < 1e-12 * direct);
        assert!((m.sup_norm() - m.eval(0.0)).abs() < 1e-12 * m.sup_norm());
    }

    #[test]
    fn nonlinearity_branches() {
        let m = Mollifier::new(4, 2).unwrap();
        let f = TruncatedNonlinearity::new(1.0, 2.0, &m);
        assert_eq!(f.eval(-1.0), 0.0);
        let u = 0.5 * f.ubar();
        assert!((f.eval(u) - u * u).abs() < 1e-14);
        assert_eq!(f.eval(f.ubar() * 2.0), f.ubar().powi(2));
        assert_eq!(f.deriv(f.ubar() * 2.0), 0.0);
        // Non-decreasing across the cap.
        assert!(f.eval(f.ubar() * 1.01) >= f.eval(f.ubar() * 0.99));
    }
}
