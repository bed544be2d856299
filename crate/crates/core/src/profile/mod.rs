//! The self-similar profile phi(zeta): the decreasing connection between the
//! plateau phi = 1 at zeta -> -infinity and double-exponential decay at
//! zeta -> +infinity, computed by two independent routes (nonlinear
//! collocation and weighted-energy minimization) that are cross-validated
//! against each other.

mod collocation;
mod energy;
mod variational;

pub use collocation::solve_collocation;
pub use energy::{energy, energy_gradient, EnergyModel};
pub use variational::solve_variational;

use crate::error::{Error, Result};
use crate::grid::ZetaGrid;
use crate::interp::MonotoneCubic;
use crate::model::ModelParams;

/// Coefficients of the profile equation
///   phi'' + drift(zeta) phi' + reaction (phi - phi^p) = 0.
#[derive(Debug, Clone, Copy)]
pub struct OdeCoefficients {
    pub drift: f64,
    pub reaction: f64,
}

/// drift(zeta) = e^{2 zeta}/2 - (p+3)/(p-1) + d - 1 and the constant
/// reaction coefficient B = 2/(p-1) ((p+1)/(p-1) - d + 1), positive for all
/// admissible parameters.
pub fn ode_coefficients(zeta: f64, params: &ModelParams) -> OdeCoefficients {
    OdeCoefficients {
        drift: (2.0 * zeta).exp() / 2.0 - (params.p() + 3.0) / (params.p() - 1.0)
            + f64::from(params.d())
            - 1.0,
        reaction: reaction_coefficient(params),
    }
}

pub fn reaction_coefficient(params: &ModelParams) -> f64 {
    let p = params.p();
    2.0 / (p - 1.0) * ((p + 1.0) / (p - 1.0) - f64::from(params.d()) + 1.0)
}

/// log of the decay asymptote (up to an additive constant fitted from data):
///   ln tail = -e^{2 zeta}/4 + ((5-p)/(p-1) - d + 1) zeta.
pub fn tail_log(zeta: f64, params: &ModelParams) -> f64 {
    let tau = (5.0 - params.p()) / (params.p() - 1.0) - f64::from(params.d()) + 1.0;
    -(2.0 * zeta).exp() / 4.0 + tau * zeta
}

/// d(ln tail)/d zeta, the logarithmic slope used for the right boundary
/// closure.
pub fn tail_log_slope(zeta: f64, params: &ModelParams) -> f64 {
    let tau = (5.0 - params.p()) / (params.p() - 1.0) - f64::from(params.d()) + 1.0;
    -(2.0 * zeta).exp() / 2.0 + tau
}

/// The smooth cutoff eta: identically 1 on (-inf, 0], identically 0 on
/// [1, inf), C-infinity in between. This is the admissibility anchor of the
/// energy and (shifted) the initial guess for both solvers.
pub fn cutoff_eta(zeta: f64) -> f64 {
    if zeta <= 0.0 {
        1.0
    } else if zeta >= 1.0 {
        0.0
    } else {
        let q = |s: f64| (-1.0 / s).exp();
        q(1.0 - zeta) / (q(zeta) + q(1.0 - zeta))
    }
}

/// Initial iterate: the cutoff shifted to put its transition at zeta = 0,
/// floored by the decay asymptote so every node starts strictly positive
/// (a zero tail would pin the variational iterate to the box boundary).
pub fn initial_guess(grid: &ZetaGrid, params: &ModelParams) -> Vec<f64> {
    grid.nodes()
        .iter()
        .map(|&z| {
            let eta = cutoff_eta(z + 0.5);
            let floor = tail_log(z, params).min(0.4f64.ln()).exp();
            eta.max(floor).min(1.0)
        })
        .collect()
}

/// Strictness threshold: below 1 - TIE_REGION the profile must be strictly
/// decreasing; closer to 1 double precision saturates (the true values differ
/// by less than one ulp) and ties are permitted.
const TIE_REGION: f64 = 1e-13;

/// A solved self-similar profile on a zeta grid.
#[derive(Debug, Clone)]
pub struct Profile {
    grid: ZetaGrid,
    values: Vec<f64>,
    derivative: Vec<f64>,
    tail_matched: bool,
    tail_offset: f64,
    log_interp: MonotoneCubic,
}

impl Profile {
    /// Wrap solved nodal values, differentiating, fitting the tail offset, and
    /// checking every profile invariant.
    pub fn from_values(
        grid: ZetaGrid,
        values: Vec<f64>,
        params: &ModelParams,
        tail_matched: bool,
    ) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::invariant("Profile", "value count differs from grid"));
        }
        let n = values.len();
        let h = grid.h();
        let mut derivative = vec![0.0; n];
        derivative[0] = (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * h);
        derivative[n - 1] = (3.0 * values[n - 1] - 4.0 * values[n - 2] + values[n - 3]) / (2.0 * h);
        for i in 1..n - 1 {
            derivative[i] = (values[i + 1] - values[i - 1]) / (2.0 * h);
        }

        validate(&grid, &values, &derivative)?;

        // Fit the undetermined multiplicative constant of the decay asymptote
        // over the right-most nodes that are safely in the tail.
        let mut offsets = Vec::new();
        for (i, &z) in grid.nodes().iter().enumerate() {
            if values[i] < 1e-8 && values[i] > 1e-280 {
                offsets.push(values[i].ln() - tail_log(z, params));
            }
        }
        let tail_offset = if offsets.is_empty() {
            0.0
        } else {
            // Median is robust against the onset region.
            offsets.sort_by(|a, b| a.partial_cmp(b).unwrap());
            offsets[offsets.len() / 2]
        };

        let log_values: Vec<f64> = values.iter().map(|v| v.ln()).collect();
        let log_interp = MonotoneCubic::new(grid.nodes().to_vec(), log_values);

        Ok(Profile {
            grid,
            values,
            derivative,
            tail_matched,
            tail_offset,
            log_interp,
        })
    }

    pub fn grid(&self) -> &ZetaGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn derivative(&self) -> &[f64] {
        &self.derivative
    }

    pub fn tail_matched(&self) -> bool {
        self.tail_matched
    }

    /// Fitted additive constant of ln phi - ln tail.
    pub fn tail_offset(&self) -> f64 {
        self.tail_offset
    }

    /// Evaluate phi anywhere: plateau value 1 left of the grid, fitted decay
    /// asymptote right of it, monotone-cubic interpolation of ln phi inside.
    pub fn eval(&self, zeta: f64, params: &ModelParams) -> f64 {
        if zeta <= self.grid.zeta_min() {
            1.0
        } else if zeta >= self.grid.zeta_max() {
            (tail_log(zeta, params) + self.tail_offset).exp()
        } else {
            self.log_interp.eval(zeta).exp()
        }
    }

    /// Discrete residual of the profile equation at every node: interior
    /// nodes carry the centered second-order stencil, the first node the
    /// plateau closure, the last node the asymptote-slope (Robin) closure.
    pub fn node_residuals(&self, params: &ModelParams) -> Vec<f64> {
        discrete_residual(&self.grid, &self.values, params)
    }

    /// Largest interior residual magnitude.
    pub fn max_interior_residual(&self, params: &ModelParams) -> f64 {
        let res = self.node_residuals(params);
        res[1..res.len() - 1]
            .iter()
            .fold(0.0f64, |acc, r| acc.max(r.abs()))
    }

    /// Smallest grid node zeta0 >= 0 such that phi <= |phi'| at every node to
    /// its right.
    pub fn zeta0_threshold(&self) -> Result<f64> {
        let nodes = self.grid.nodes();
        let n = nodes.len();
        let mut holds_from = n; // first index such that the bound holds from there on
        for i in (0..n).rev() {
            if self.values[i] <= self.derivative[i].abs() {
                holds_from = i;
            } else {
                break;
            }
        }
        for i in holds_from..n {
            if nodes[i] >= 0.0 {
                return Ok(nodes[i]);
            }
        }
        Err(Error::NotFound(
            "no node zeta0 >= 0 with phi <= |phi'| through the right edge; grid too short".into(),
        ))
    }

    /// Plateau constants on [zeta_min, zeta0]: k1 = min phi, k2 = max |phi'|.
    pub fn plateau_constants(&self, zeta0: f64) -> (f64, f64) {
        let mut k1 = f64::INFINITY;
        let mut k2 = 0.0f64;
        for (i, &z) in self.grid.nodes().iter().enumerate() {
            if z <= zeta0 {
                k1 = k1.min(self.values[i]);
                k2 = k2.max(self.derivative[i].abs());
            }
        }
        (k1, k2)
    }
}

/// Shared discrete residual used by the collocation solver, the CSV emitter,
/// and the acceptance checks.
pub(crate) fn discrete_residual(grid: &ZetaGrid, x: &[f64], params: &ModelParams) -> Vec<f64> {
    let n = x.len();
    let h = grid.h();
    let p = params.p();
    let b = reaction_coefficient(params);
    let mut g = vec![0.0; n];
    g[0] = x[0] - 1.0;
    for i in 1..n - 1 {
        let a = ode_coefficients(grid.nodes()[i], params).drift;
        g[i] = (x[i + 1] - 2.0 * x[i] + x[i - 1]) / (h * h)
            + a * (x[i + 1] - x[i - 1]) / (2.0 * h)
            + b * (x[i] - signed_power(x[i], p));
    }
    let sigma = tail_log_slope(grid.zeta_max(), params);
    g[n - 1] = (3.0 * x[n - 1] - 4.0 * x[n - 2] + x[n - 3]) / (2.0 * h) - sigma * x[n - 1];
    g
}

/// Odd extension |x|^{p-1} x of the power law, so Newton iterates that
/// transiently dip below zero stay evaluable for non-integer p.
pub(crate) fn signed_power(x: f64, p: f64) -> f64 {
    x.abs().powf(p - 1.0) * x
}

pub(crate) fn signed_power_deriv(x: f64, p: f64) -> f64 {
    p * x.abs().powf(p - 1.0)
}

/// The discrete plateau equals 1 only up to linear-solver round-off; values a
/// few ulps above 1 are saturation artifacts and are snapped down. Anything
/// larger is a genuine failure.
pub(crate) fn saturate_plateau(x: &mut [f64], what: &'static str) -> Result<()> {
    for (i, v) in x.iter_mut().enumerate() {
        if *v > 1.0 {
            if *v > 1.0 + 1e-12 {
                return Err(Error::invariant(
                    what,
                    format!("phi overshoots 1 beyond round-off at node {i}: {v}"),
                ));
            }
            *v = 1.0;
        }
    }
    Ok(())
}

/// Below ~1e-13 the tail sits under the round-off floor of the O(1) plateau
/// rows and the discrete values can lose monotonicity or sign. When that
/// happens, the decay asymptote (matched at the last reliable node) closes
/// the tail; above the floor the solver's values are kept untouched.
pub(crate) fn close_tail(
    x: &mut [f64],
    grid: &ZetaGrid,
    params: &ModelParams,
    what: &'static str,
) -> Result<()> {
    let n = x.len();
    let floor = 1e-13;
    let Some(i0) = x.iter().position(|&v| v < floor) else {
        return Ok(());
    };
    if i0 < 8 {
        return Err(Error::invariant(
            what,
            "solution collapsed: values below round-off start near the plateau",
        ));
    }
    let noisy = (i0..n).any(|j| x[j] <= 0.0 || (j > i0 && x[j] >= x[j - 1]));
    if !noisy {
        return Ok(());
    }
    let anchor = i0 - 1;
    let log_anchor = tail_log(grid.nodes()[anchor], params);
    for j in i0..n {
        x[j] = x[anchor] * (tail_log(grid.nodes()[j], params) - log_anchor).exp();
    }
    Ok(())
}

fn validate(grid: &ZetaGrid, values: &[f64], derivative: &[f64]) -> Result<()> {
    let n = values.len();
    if values[0] < 1.0 - 1e-6 {
        return Err(Error::invariant(
            "Profile",
            format!("plateau not reached: phi(zeta_min) = {}", values[0]),
        ));
    }
    for (i, &v) in values.iter().enumerate() {
        if !(v > 0.0) {
            return Err(Error::invariant(
                "Profile",
                format!("phi must stay positive; node {i} has {v}"),
            ));
        }
        if v > 1.0 {
            return Err(Error::invariant(
                "Profile",
                format!("phi must stay <= 1; node {i} has {v}"),
            ));
        }
    }
    for i in 0..n - 1 {
        if values[i + 1] > values[i] {
            return Err(Error::invariant(
                "Profile",
                format!("phi must be non-increasing; nodes {i}..{} rise", i + 1),
            ));
        }
        // Strict decrease is required once the plateau stops saturating
        // double precision.
        if values[i] < 1.0 - TIE_REGION && values[i + 1] >= values[i] {
            return Err(Error::invariant(
                "Profile",
                format!("phi must be strictly decreasing below the plateau; tie at node {i}"),
            ));
        }
    }
    for i in 1..n - 1 {
        if values[i] < 1.0 - TIE_REGION && derivative[i] >= 0.0 {
            return Err(Error::invariant(
                "Profile",
                format!("phi' must be negative below the plateau; node {i} has {}", derivative[i]),
            ));
        }
        if derivative[i] > 0.0 {
            return Err(Error::invariant(
                "Profile",
                format!("phi' must be non-positive; node {i} has {}", derivative[i]),
            ));
        }
    }
    let _ = grid;
    Ok(())
}
