//! Discretization grids: the uniform similarity-coordinate grid for the
//! profile solvers and the graded radial mesh for the evolution and
//! stationary solvers.

use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Uniform grid in the similarity coordinate zeta = ln(r/sqrt(t)).
#[derive(Debug, Clone)]
pub struct ZetaGrid {
    nodes: Vec<f64>,
}

/// Largest admissible right endpoint: log rho must stay representable, so
/// e^{2 zeta_max}/4 <= 700.
pub fn zeta_max_ceiling() -> f64 {
    0.5 * (4.0 * 700.0f64).ln()
}

impl ZetaGrid {
    /// Uniform grid with `n` nodes on [zeta_min, zeta_max].
    ///
    /// Requires zeta_min <= -6 (inside the plateau) and e^{2 zeta_max}/4 <= 700
    /// (weight representable in log space).
    pub fn uniform(zeta_min: f64, zeta_max: f64, n: usize) -> Result<Self> {
        if n < 16 {
            return Err(Error::domain("ZetaGrid", format!("need at least 16 nodes, got {n}")));
        }
        if zeta_min > -6.0 {
            return Err(Error::domain(
                "ZetaGrid",
                format!("zeta_min = {zeta_min} must be <= -6 to sit in the plateau"),
            ));
        }
        if zeta_max > zeta_max_ceiling() + 1e-12 {
            return Err(Error::domain(
                "ZetaGrid",
                format!("zeta_max = {zeta_max} exceeds the representable ceiling {:.4}", zeta_max_ceiling()),
            ));
        }
        if zeta_max <= zeta_min {
            return Err(Error::domain("ZetaGrid", "zeta_max must exceed zeta_min"));
        }
        let h = (zeta_max - zeta_min) / (n - 1) as f64;
        let nodes = (0..n).map(|i| zeta_min + h * i as f64).collect();
        Ok(ZetaGrid { nodes })
    }

    /// Default grid for a parameter set: the left endpoint is pushed deep
    /// enough that the plateau closure error e^{lambda_+ zeta_min} is
    /// negligible, where lambda_+ is the linearized approach rate at phi = 1.
    pub fn recommended(params: &ModelParams, n: usize) -> Result<Self> {
        let lambda = plateau_rate(params);
        let zeta_min = (-16.0 / lambda).min(-8.0);
        ZetaGrid::uniform(zeta_min, 2.5, n)
    }

    /// Deep-tail variant used when the decay asymptote itself is under test;
    /// extends as far right as the weight stays representable.
    pub fn recommended_deep(params: &ModelParams, n: usize) -> Result<Self> {
        let lambda = plateau_rate(params);
        let zeta_min = (-16.0 / lambda).min(-8.0);
        ZetaGrid::uniform(zeta_min, 0.5 * (4.0 * 600.0f64).ln(), n)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn zeta_min(&self) -> f64 {
        self.nodes[0]
    }

    pub fn zeta_max(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    /// Uniform spacing.
    pub fn h(&self) -> f64 {
        (self.zeta_max() - self.zeta_min()) / (self.len() - 1) as f64
    }
}

/// Exponential rate at which the profile approaches its left plateau,
/// from the linearization of the profile equation at phi = 1.
pub fn plateau_rate(params: &ModelParams) -> f64 {
    let p = params.p();
    let chi = (p + 3.0) / (p - 1.0) - f64::from(params.d()) + 1.0;
    let beta = (p + 1.0) / (p - 1.0) - f64::from(params.d()) + 1.0;
    let b_coeff = 2.0 / (p - 1.0) * beta;
    0.5 * (chi + (chi * chi + 4.0 * b_coeff * (p - 1.0)).sqrt())
}

/// Radial mesh starting at the axis r = 0, graded geometrically near the
/// origin (to resolve the mollified source) and uniform in the far field.
#[derive(Debug, Clone)]
pub struct RadialGrid {
    nodes: Vec<f64>,
    d: u32,
}

impl RadialGrid {
    /// Two-zone mesh: spacing starts at `h0`, grows by the fixed ratio `q`
    /// until it reaches the uniform far-field spacing chosen so that exactly
    /// `n` nodes cover [0, r_out].
    pub fn graded(d: u32, n: usize, r_out: f64, h0: f64) -> Result<Self> {
        if d < 2 {
            return Err(Error::domain("RadialGrid", "dimension must be >= 2"));
        }
        if n < 32 {
            return Err(Error::domain("RadialGrid", format!("need at least 32 nodes, got {n}")));
        }
        if !(r_out > 0.0) || !(h0 > 0.0) || h0 * 8.0 > r_out {
            return Err(Error::domain(
                "RadialGrid",
                format!("need 0 < h0 << r_out, got h0 = {h0}, r_out = {r_out}"),
            ));
        }
        let q: f64 = 1.03;
        let steps = n - 1;
        let uniform_h = r_out / steps as f64;
        if h0 >= uniform_h {
            // Already coarse enough: plain uniform mesh.
            let nodes = (0..n).map(|i| r_out * i as f64 / steps as f64).collect();
            return Ok(RadialGrid { nodes, d });
        }
        // Fixed point for the far-field spacing given the geometric ramp.
        let mut h_far = uniform_h;
        let mut ramp_steps = 0usize;
        for _ in 0..64 {
            let k = ((h_far / h0).ln() / q.ln()).ceil().max(0.0) as usize;
            if k + 2 > steps {
                return Err(Error::domain(
                    "RadialGrid",
                    format!("cannot fit ramp from h0 = {h0} within {n} nodes out to {r_out}"),
                ));
            }
            let ramp_len = h0 * (q.powi(k as i32) - 1.0) / (q - 1.0);
            if ramp_len >= 0.5 * r_out {
                return Err(Error::domain(
                    "RadialGrid",
                    "geometric ramp would consume most of the domain; increase nodes or h0",
                ));
            }
            let new_h_far = (r_out - ramp_len) / (steps - k) as f64;
            ramp_steps = k;
            if (new_h_far - h_far).abs() < 1e-14 * h_far {
                h_far = new_h_far;
                break;
            }
            h_far = new_h_far;
        }
        let mut nodes = Vec::with_capacity(n);
        nodes.push(0.0);
        let mut h = h0;
        for i in 0..steps {
            let spacing = if i < ramp_steps { h } else { h_far };
            nodes.push(nodes[i] + spacing);
            h *= q;
        }
        // Pin the outer boundary exactly.
        let last = nodes.len() - 1;
        nodes[last] = r_out;
        let grid = RadialGrid { nodes, d };
        grid.check_strictly_increasing()?;
        Ok(grid)
    }

    /// Plain uniform mesh (used by refinement studies and small tests).
    pub fn uniform(d: u32, n: usize, r_out: f64) -> Result<Self> {
        RadialGrid::graded(d, n, r_out, r_out / (n - 1) as f64)
    }

    fn check_strictly_increasing(&self) -> Result<()> {
        for w in self.nodes.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::invariant("RadialGrid", "nodes must be strictly increasing"));
            }
        }
        Ok(())
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn r_out(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    /// Number of nodes inside the closed ball of radius `radius`.
    pub fn nodes_within(&self, radius: f64) -> usize {
        self.nodes.iter().take_while(|&&r| r <= radius).count()
    }

    /// Mesh invariant for a mollifier of width 1/n: at least 8 nodes inside
    /// the support.
    pub fn resolves_mollifier(&self, n_mollifier: u32) -> bool {
        self.nodes_within(1.0 / f64::from(n_mollifier)) >= 8
    }
}
