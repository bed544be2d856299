//! Damped-Newton collocation for the profile equation.
//!
//! Second-order centered differences on the uniform zeta grid; the left
//! boundary pins phi = 1 (plateau closure), the right boundary imposes the
//! Robin condition phi'/phi = d(ln tail)/d zeta, matching the logarithmic
//! slope of the decay asymptote (the decay itself underflows long before the
//! grid ends, the slope stays well conditioned).

use super::{
    discrete_residual, initial_guess, ode_coefficients, reaction_coefficient, signed_power_deriv,
    tail_log_slope, Profile,
};
use crate::error::{Error, Result};
use crate::grid::ZetaGrid;
use crate::linalg::Banded;
use crate::model::ModelParams;

const MAX_NEWTON: usize = 80;
const MAX_HALVINGS: usize = 30;

/// Solve the profile equation by damped Newton on the collocation system.
///
/// `tol` bounds the largest interior residual of the returned profile.
pub fn solve_collocation(params: &ModelParams, grid: &ZetaGrid, tol: f64) -> Result<Profile> {
    let x = initial_guess(grid, params);
    let mut x = newton(params, grid, x, tol)?;
    super::saturate_plateau(&mut x, "profile_collocation")?;
    super::close_tail(&mut x, grid, params, "profile_collocation")?;
    Profile::from_values(grid.clone(), x, params, true)
}

/// Newton iteration with backtracking line search (factor 1/2) on the
/// residual norm. The reaction term phi - phi^p is non-monotone on [0, 1],
/// so undamped steps can overshoot early on.
fn newton(params: &ModelParams, grid: &ZetaGrid, mut x: Vec<f64>, tol: f64) -> Result<Vec<f64>> {
    let n = x.len();
    let h = grid.h();
    let p = params.p();
    let b = reaction_coefficient(params);
    let sigma = tail_log_slope(grid.zeta_max(), params);

    let mut g = discrete_residual(grid, &x, params);
    let mut gnorm = norm2(&g);
    for iter in 0..MAX_NEWTON {
        if converged(&g, tol, sigma) {
            return Ok(x);
        }
        let mut jac = Banded::new(n, 2, 1);
        jac.set(0, 0, 1.0);
        for i in 1..n - 1 {
            let a = ode_coefficients(grid.nodes()[i], params).drift;
            jac.set(i, i - 1, 1.0 / (h * h) - a / (2.0 * h));
            jac.set(i, i, -2.0 / (h * h) + b * (1.0 - signed_power_deriv(x[i], p)));
            jac.set(i, i + 1, 1.0 / (h * h) + a / (2.0 * h));
        }
        jac.set(n - 1, n - 3, 1.0 / (2.0 * h));
        jac.set(n - 1, n - 2, -2.0 / h);
        jac.set(n - 1, n - 1, 3.0 / (2.0 * h) - sigma);

        let mut step: Vec<f64> = g.iter().map(|v| -v).collect();
        jac.solve(&mut step)?;

        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..MAX_HALVINGS {
            let trial: Vec<f64> = x
                .iter()
                .zip(step.iter())
                .map(|(xi, si)| xi + lambda * si)
                .collect();
            let gt = discrete_residual(grid, &trial, params);
            let gt_norm = norm2(&gt);
            if gt_norm < gnorm * (1.0 - 1e-4 * lambda) || gt_norm < tol * 1e-3 {
                x = trial;
                g = gt;
                gnorm = gt_norm;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            return Err(Error::Convergence {
                solver: "profile_collocation",
                iterations: iter,
                residual: gnorm,
            });
        }
    }
    if converged(&g, tol, sigma) {
        return Ok(x);
    }
    Err(Error::Convergence {
        solver: "profile_collocation",
        iterations: MAX_NEWTON,
        residual: gnorm,
    })
}

fn converged(g: &[f64], tol: f64, sigma: f64) -> bool {
    let n = g.len();
    let interior = g[1..n - 1].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    // The Robin row carries the (large) slope sigma; scale its tolerance.
    interior <= tol && g[0].abs() <= tol && g[n - 1].abs() <= tol * sigma.abs().max(1.0)
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::{tail_log, tail_log_slope};

    #[test]
    fn reference_case_solves_and_validates() {
        let params = ModelParams::new(2, 2.0, 1.0).unwrap();
        let grid = ZetaGrid::uniform(-8.0, 2.5, 800).unwrap();
        let prof = solve_collocation(&params, &grid, 1e-9).unwrap();
        assert!(prof.max_interior_residual(&params) <= 1e-9);
        assert!(prof.values()[0] >= 1.0 - 1e-6);
        assert!(*prof.values().last().unwrap() <= 1e-6);
        assert!(prof.tail_matched());
    }

    #[test]
    fn limit_behavior_on_default_grid() {
        let params = ModelParams::new(2, 2.0, 1.0).unwrap();
        let grid = ZetaGrid::uniform(-8.0, 2.5, 1200).unwrap();
        let prof = solve_collocation(&params, &grid, 1e-9).unwrap();
        assert!(prof.values()[0] >= 1.0 - 1e-6, "plateau");
        assert!(*prof.values().last().unwrap() <= 1e-6, "decay");
    }

    #[test]
    fn grid_refinement_is_second_order() {
        let params = ModelParams::new(2, 2.0, 1.0).unwrap();
        let mut sols = Vec::new();
        for n in [251usize, 501, 1001] {
            let grid = ZetaGrid::uniform(-8.0, 2.5, n).unwrap();
            sols.push(solve_collocation(&params, &grid, 1e-10).unwrap());
        }
        // Coarse nodes are a subset of the finer grids (250 | 500 | 1000).
        let d1 = max_diff_on_coarse(&sols[0], &sols[1]);
        let d2 = max_diff_on_coarse(&sols[1], &sols[2]);
        let rate = (d1 / d2).log2();
        assert!((1.6..=2.4).contains(&rate), "order {rate}, diffs {d1:.3e}/{d2:.3e}");
    }

    fn max_diff_on_coarse(coarse: &Profile, fine: &Profile) -> f64 {
        let mut worst = 0.0f64;
        for (i, &z) in coarse.grid().nodes().iter().enumerate() {
            let j = ((z - fine.grid().zeta_min()) / fine.grid().h()).round() as usize;
            worst = worst.max((coarse.values()[i] - fine.values()[j]).abs());
        }
        worst
    }

    #[test]
    fn parameter_continuity() {
        let grid = ZetaGrid::uniform(-8.0, 2.5, 600).unwrap();
        let p1 = ModelParams::new(2, 2.0, 1.0).unwrap();
        let p2 = ModelParams::new(2, 2.001, 1.0).unwrap();
        let a = solve_collocation(&p1, &grid, 1e-10).unwrap();
        let b = solve_collocation(&p2, &grid, 1e-10).unwrap();
        let sup = a
            .values()
            .iter()
            .zip(b.values())
            .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        assert!(sup > 0.0);
        assert!(sup < 5e-3, "continuity jump {sup}");
    }

    #[test]
    fn tail_tracks_asymptote_slope() {
        let params = ModelParams::new(2, 2.0, 1.0).unwrap();
        let grid = ZetaGrid::recommended_deep(&params, 2400).unwrap();
        let prof = solve_collocation(&params, &grid, 1e-8).unwrap();
        // ln phi - ln tail constant over the last resolvable decade.
        let nodes = prof.grid().nodes();
        let mut offsets = Vec::new();
        let zu = nodes
            .iter()
            .enumerate()
            .rev()
            .find(|(i, _)| prof.values()[*i] >= 1e-250)
            .map(|(_, z)| *z)
            .unwrap()
            .min(prof.grid().zeta_max() - 0.15);
        for (i, &z) in nodes.iter().enumerate() {
            if z >= zu - 1.0 && z <= zu {
                offsets.push(prof.values()[i].ln() - tail_log(z, &params));
            }
        }
        let spread = offsets.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - offsets.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(spread < 0.05, "offset drift {spread}");
        // Numerical log-slope matches the asymptote derivative within 2%.
        let h = prof.grid().h();
        for (i, &z) in nodes.iter().enumerate() {
            if z >= zu - 1.0 && z <= zu - 2.0 * h {
                let num = (prof.values()[i + 1].ln() - prof.values()[i - 1].ln()) / (2.0 * h);
                let want = tail_log_slope(z, &params);
                assert!(
                    ((num - want) / want).abs() < 0.02,
                    "slope {num} vs {want} at zeta={z}"
                );
            }
        }
    }
}
