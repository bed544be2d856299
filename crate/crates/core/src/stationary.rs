//! The mollified stationary problem -Δv + v^p = alpha g_n and the
//! sub-solution parameter selection used by the sandwich audits.

use crate::error::{Error, Result};
use crate::evolve::fv_geometry;
use crate::grid::RadialGrid;
use crate::interp::MonotoneCubic;
use crate::linalg::tridiag_solve;
use crate::model::{
    gamma_thresholds, singular_amplitude, v_infinity, ModelParams, SubsolutionShape,
};
use crate::mollifier::Mollifier;
use crate::profile::{signed_power, signed_power_deriv};

/// A solved stationary field on a radial mesh.
#[derive(Debug, Clone)]
pub struct StationaryField {
    pub grid: RadialGrid,
    pub values: Vec<f64>,
    /// Fitted constant of the algebraic envelope v <= C r^{-2/(p-1)}.
    pub fitted_envelope_c: f64,
}

impl StationaryField {
    pub fn interpolant(&self) -> MonotoneCubic {
        MonotoneCubic::new(self.grid.nodes().to_vec(), self.values.clone())
    }

    /// Value at the probe radius by monotone-cubic interpolation.
    pub fn at(&self, r: f64) -> f64 {
        self.interpolant().eval(r)
    }
}

const MAX_NEWTON: usize = 60;

/// Damped-Newton solve of the finite-volume discretization of
/// -Δ_r v + v^p = alpha g_n with symmetry at the axis and the decay-matched
/// Robin condition v_r = -(2/(p-1)) v/r at the outer boundary (the true tail
/// is algebraic, and a Dirichlet wall pollutes the field far inside). Falls
/// back to pseudo-transient continuation (a few implicit diffusion steps)
/// when cold-start Newton stalls.
pub fn solve_stationary(
    params: &ModelParams,
    grid: &RadialGrid,
    moll: &Mollifier,
    tol: f64,
) -> Result<StationaryField> {
    if grid.d() != params.d() || moll.d() != params.d() {
        return Err(Error::domain("solve_stationary", "dimension mismatch"));
    }
    if !grid.resolves_mollifier(moll.n()) {
        return Err(Error::invariant(
            "solve_stationary",
            format!("mesh must resolve the mollifier support 1/{}", moll.n()),
        ));
    }
    let nodes = grid.nodes();
    let m = nodes.len();
    let n_unknown = m;
    let geom = fv_geometry(grid);
    let alpha = params.alpha();
    let p = params.p();
    let robin = grid.r_out().powf(f64::from(grid.d()) - 2.0) * 2.0 / (p - 1.0);
    let source: Vec<f64> = moll.cell_averages(grid).iter().map(|g| alpha * g).collect();

    let residual = |v: &[f64]| -> Vec<f64> {
        let mut res = vec![0.0; n_unknown];
        for i in 0..n_unknown {
            let left = if i == 0 { 0.0 } else { geom.faces[i - 1] * (v[i] - v[i - 1]) };
            let right = if i + 1 < n_unknown {
                geom.faces[i] * (v[i + 1] - v[i])
            } else {
                -robin * v[i]
            };
            res[i] = (right - left) / geom.volumes[i] - signed_power(v[i], p) + source[i];
        }
        res
    };
    let resnorm =
        |r: &[f64]| -> f64 { r.iter().map(|x| x * x).sum::<f64>().sqrt() / (n_unknown as f64).sqrt() };

    let mut v = vec![0.0; n_unknown];
    let mut res = residual(&v);
    let mut rnorm = resnorm(&res);
    let mut iterations = 0usize;
    let mut ptc_budget = 3usize;

    // Backward-error convergence: each row's residual must be small relative
    // to the magnitudes entering that row (source peaks like alpha n^d near
    // the origin, flux terms like v/h^2 on fine cells), since no iteration
    // can push a residual below the floating-point noise of its own terms.
    let converged = |res: &[f64], v: &[f64]| -> bool {
        res.iter().enumerate().all(|(i, r)| {
            let f_left = if i == 0 { 0.0 } else { geom.faces[i - 1] };
            let f_right = if i + 1 < n_unknown { geom.faces[i] } else { robin };
            let row = 1.0 + source[i] + v[i].abs() * (f_left + f_right) / geom.volumes[i];
            r.abs() <= tol * row
        })
    };

    loop {
        if converged(&res, &v) {
            break;
        }
        if iterations >= MAX_NEWTON {
            return Err(Error::Convergence {
                solver: "solve_stationary",
                iterations,
                residual: rnorm,
            });
        }
        iterations += 1;
        let mut sub = vec![0.0; n_unknown];
        let mut diag = vec![0.0; n_unknown];
        let mut sup = vec![0.0; n_unknown];
        for i in 0..n_unknown {
            let f_left = if i == 0 { 0.0 } else { geom.faces[i - 1] };
            let f_right = if i + 1 < n_unknown { geom.faces[i] } else { robin };
            sub[i] = -f_left / geom.volumes[i];
            sup[i] = if i + 1 < n_unknown { -f_right / geom.volumes[i] } else { 0.0 };
            diag[i] = (f_left + f_right) / geom.volumes[i] + signed_power_deriv(v[i], p);
        }
        let mut step = res.clone();
        tridiag_solve(&sub, &diag, &sup, &mut step)?;

        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let trial: Vec<f64> = v
                .iter()
                .zip(step.iter())
                .map(|(vi, si)| vi + lambda * si)
                .collect();
            let tres = residual(&trial);
            let tnorm = resnorm(&tres);
            if tnorm < rnorm * (1.0 - 1e-4 * lambda) {
                v = trial;
                res = tres;
                rnorm = tnorm;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            // Line searches bottom out at the floating-point floor of the
            // residual; the backward-error criterion decides whether that
            // floor is acceptance or failure.
            if converged(&res, &v) {
                break;
            }
            if ptc_budget == 0 {
                return Err(Error::Convergence {
                    solver: "solve_stationary",
                    iterations,
                    residual: rnorm,
                });
            }
            ptc_budget -= 1;
            // Pseudo-transient continuation: implicit diffusion-reaction
            // steps pull the iterate into the Newton basin.
            let mut dt = 1e-3;
            for _ in 0..40 {
                for i in 0..n_unknown {
                    let f_left = if i == 0 { 0.0 } else { geom.faces[i - 1] };
                    let f_right = if i + 1 < n_unknown { geom.faces[i] } else { robin };
                    let fprime = signed_power_deriv(v[i], p);
                    sub[i] = -f_left;
                    sup[i] = if i + 1 < n_unknown { -f_right } else { 0.0 };
                    diag[i] = geom.volumes[i] / dt + f_left + f_right + geom.volumes[i] * fprime;
                }
                let mut rhs: Vec<f64> = (0..n_unknown)
                    .map(|i| {
                        geom.volumes[i]
                            * (v[i] / dt + source[i] + signed_power_deriv(v[i], p) * v[i]
                                - signed_power(v[i], p))
                    })
                    .collect();
                tridiag_solve(&sub, &diag, &sup, &mut rhs)?;
                v = rhs;
                dt *= 1.6;
            }
            res = residual(&v);
            rnorm = resnorm(&res);
        }
    }

    let values = v;
    validate_field(grid, &values, params)?;
    let two_over = 2.0 / (p - 1.0);
    let fitted_envelope_c = nodes
        .iter()
        .zip(values.iter())
        .filter(|(r, _)| **r > 0.0)
        .fold(0.0f64, |mx, (r, v)| mx.max(v * r.powf(two_over)));
    Ok(StationaryField {
        grid: grid.clone(),
        values,
        fitted_envelope_c,
    })
}

fn validate_field(grid: &RadialGrid, values: &[f64], params: &ModelParams) -> Result<()> {
    let nodes = grid.nodes();
    let m = nodes.len();
    if params.alpha() == 0.0 {
        // v = 0 is the unique non-negative solution.
        if values.iter().any(|&v| v != 0.0) {
            return Err(Error::invariant("StationaryField", "alpha = 0 must give v = 0"));
        }
        return Ok(());
    }
    for i in 0..m {
        if !(values[i] > 0.0) {
            return Err(Error::invariant(
                "StationaryField",
                format!("v must be positive; node {i} has {}", values[i]),
            ));
        }
        if i > 0 && values[i] >= values[i - 1] {
            return Err(Error::invariant(
                "StationaryField",
                format!("v must decrease in r; nodes {}..{i} rise", i - 1),
            ));
        }
    }
    // The envelope check carries slack on two scales: relative, because the
    // margin v_inf - v closes as r grows, and absolute, because the solver
    // has an error floor (origin-region truncation spreading outward) that
    // any fast-decaying envelope eventually crosses.
    let floor = 1e-8 * values[0];
    for (i, &r) in nodes.iter().enumerate().skip(1) {
        let cap = v_infinity(r, params)?;
        if values[i] > cap * (1.0 + 1e-2) + floor {
            return Err(Error::invariant(
                "StationaryField",
                format!("v({r}) = {} exceeds the singular envelope {cap}", values[i]),
            ));
        }
    }
    Ok(())
}

/// Closed-form sub-solution shape through half the stationary value at R:
/// gamma = gamma_bar (the smallest exponent keeping M[v_0] <= 0) and
/// b = R^{-gamma} [ (2c/v(R))^{(p-1)/2} - R ], so v_0(R) = v(R)/2 exactly.
pub fn choose_subsolution_params(
    r_anchor: f64,
    v_at_r: f64,
    params: &ModelParams,
) -> Result<SubsolutionShape> {
    let vinf = v_infinity(r_anchor, params)?;
    if !(v_at_r > 0.0) || v_at_r >= vinf {
        return Err(Error::Infeasible(format!(
            "v(R) = {v_at_r} must lie in (0, v_inf(R) = {vinf})"
        )));
    }
    let th = gamma_thresholds(params.p(), params.d())?;
    let gamma = if th.gamma_bar > 0.0 {
        th.gamma_bar
    } else {
        // Unreachable in practice (gamma2 > 0 for every admissible pair);
        // kept as the midpoint fallback.
        0.5
    };
    let b = subsolution_b_for_half_value(r_anchor, v_at_r, gamma, params)?;
    SubsolutionShape::new(params, gamma, b)
}

/// b solving v_0(R) = v_at_r/2 for a given gamma.
pub fn subsolution_b_for_half_value(
    r_anchor: f64,
    v_at_r: f64,
    gamma: f64,
    params: &ModelParams,
) -> Result<f64> {
    let c = singular_amplitude(params.p(), params.d())?;
    let b = r_anchor.powf(-gamma)
        * ((2.0 * c / v_at_r).powf((params.p() - 1.0) / 2.0) - r_anchor);
    if !(b > 0.0) {
        return Err(Error::Infeasible(format!(
            "computed b = {b} <= 0; target value too large at R = {r_anchor}"
        )));
    }
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolve::{evolve, TimeStepPolicy};
    use crate::model::subsolution_v0;

    #[test]
    fn zero_alpha_gives_zero() {
        let params = ModelParams::new(2, 2.0, 0.0).unwrap();
        let moll = Mollifier::new(16, 2).unwrap();
        let grid = RadialGrid::graded(2, 256, 8.0, 1.0 / (12.0 * 16.0)).unwrap();
        let v = solve_stationary(&params, &grid, &moll, 1e-10).unwrap();
        assert!(v.values.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn near_origin_shape_follows_fundamental_solution() {
        let params = ModelParams::new(3, 2.0, 1.0).unwrap();
        let moll = Mollifier::new(256, 3).unwrap();
        let grid = RadialGrid::graded(3, 4096, 12.0, 1.0 / (12.0 * 256.0)).unwrap();
        let v = solve_stationary(&params, &grid, &moll, 1e-9).unwrap();
        for (i, &r) in grid.nodes().iter().enumerate() {
            if r >= 4.0 / 256.0 && r <= 0.05 {
                let phi = crate::model::fundamental_solution(r, 3).unwrap();
                let ratio = v.values[i] / phi;
                assert!((0.9..=1.1).contains(&ratio), "r={r}: ratio {ratio}");
            }
        }
    }

    #[test]
    fn monotone_in_alpha() {
        let moll = Mollifier::new(16, 2).unwrap();
        let grid = RadialGrid::graded(2, 320, 8.0, 1.0 / (12.0 * 16.0)).unwrap();
        let v1 = solve_stationary(&ModelParams::new(2, 2.0, 1.0).unwrap(), &grid, &moll, 1e-10).unwrap();
        let v2 = solve_stationary(&ModelParams::new(2, 2.0, 2.0).unwrap(), &grid, &moll, 1e-10).unwrap();
        for i in 0..grid.len() - 1 {
            assert!(v2.values[i] > v1.values[i], "node {i}");
        }
    }

    #[test]
    fn large_alpha_needs_globalization() {
        let params = ModelParams::new(2, 2.0, 100.0).unwrap();
        let moll = Mollifier::new(16, 2).unwrap();
        let grid = RadialGrid::graded(2, 512, 10.0, 1.0 / (12.0 * 16.0)).unwrap();
        let v = solve_stationary(&params, &grid, &moll, 1e-8).unwrap();
        assert!(v.values[0] > 1.0);
    }

    #[test]
    fn agrees_with_long_time_evolution() {
        let params = ModelParams::new(2, 2.0, 1.0).unwrap();
        let moll = Mollifier::new(16, 2).unwrap();
        let grid = RadialGrid::graded(2, 512, 40.0, 1.0 / (12.0 * 16.0)).unwrap();
        let v = solve_stationary(&params, &grid, &moll, 1e-10).unwrap();
        let policy = TimeStepPolicy::new(1e-4, 0.05).unwrap();
        let trace = evolve(&params, &grid, &moll, 30.0, &policy, &[30.0], 1.0, false).unwrap();
        let (_, u_end) = trace.snapshot_at(30.0).unwrap();
        // Compare where the transient has passed (r well inside sqrt(t));
        // the gap is dominated by the first-order time integration.
        for (i, &r) in grid.nodes().iter().enumerate() {
            if r <= 1.0 {
                let diff = (v.values[i] - u_end[i]).abs();
                assert!(diff < 5e-3 * v.values[i].max(0.5), "r={r}: {diff}");
                assert!(u_end[i] <= v.values[i] + 1e-9, "approach from below at r={r}");
            }
        }
    }

    #[test]
    fn subsolution_selection_half_value() {
        // Hand value: p=2, d=2, R=1, v(R)=2 -> b = (2*4/2)^{1/2} - 1 = 1.
        let params = ModelParams::new(2, 2.0, 1.0).unwrap();
        let b = subsolution_b_for_half_value(1.0, 2.0, 0.5, &params).unwrap();
        assert!((b - 1.0).abs() < 1e-12);
        let shape = choose_subsolution_params(1.0, 2.0, &params).unwrap();
        let v0 = subsolution_v0(1.0, &params, &shape).unwrap();
        assert!((v0 - 1.0).abs() < 1e-12, "v0(R) = v(R)/2, got {v0}");
        // Infeasible above the envelope.
        assert!(choose_subsolution_params(1.0, 5.0, &params).is_err());
    }
}
