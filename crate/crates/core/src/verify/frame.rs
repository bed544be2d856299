//! The similarity frame F(zeta, t) = u(r, t)/v_alpha(r) with r = sqrt(t) e^zeta,
//! and the sup-distance convergence metric |F - phi|.

use crate::error::{Error, Result};
use crate::evolve::EvolutionTrace;
use crate::model::ModelParams;
use crate::par;
use crate::profile::Profile;
use crate::stationary::StationaryField;

/// One time slice of the solution resampled onto the similarity coordinate.
#[derive(Debug, Clone)]
pub struct SimilarityFrame {
    pub t: f64,
    pub zeta_nodes: Vec<f64>,
    pub f_values: Vec<f64>,
}

impl SimilarityFrame {
    /// Invariant check valid once t exceeds the sub-solution onset time:
    /// 0 < F < 1 everywhere (the solution sits strictly between zero and its
    /// stationary limit).
    pub fn check_bounds(&self) -> Result<()> {
        for (i, &f) in self.f_values.iter().enumerate() {
            if !(f > 0.0 && f < 1.0) {
                return Err(Error::invariant(
                    "SimilarityFrame",
                    format!("F = {f} outside (0,1) at zeta = {}", self.zeta_nodes[i]),
                ));
            }
        }
        Ok(())
    }
}

/// Build the frame at the snapshot closest to `t`, resampling both the
/// solution and the stationary state by monotone-cubic interpolation in r.
/// The window must map into the resolved radial range
/// [probe radius, r_out/2].
pub fn similarity_frame(
    trace: &EvolutionTrace,
    v_alpha: &StationaryField,
    t: f64,
    window: (f64, f64),
    count: usize,
) -> Result<SimilarityFrame> {
    if count < 2 {
        return Err(Error::domain("similarity_frame", "need at least two window nodes"));
    }
    let (t_snap, field) = trace.snapshot_at(t)?;
    let r_lo = t_snap.sqrt() * window.0.exp();
    let r_hi = t_snap.sqrt() * window.1.exp();
    if r_lo < trace.probe_radius || r_hi > trace.grid.r_out() / 2.0 {
        return Err(Error::domain(
            "similarity_frame",
            format!(
                "window maps to r in [{r_lo:.3}, {r_hi:.3}], outside the resolved range [{}, {}]",
                trace.probe_radius,
                trace.grid.r_out() / 2.0
            ),
        ));
    }
    let u = crate::interp::MonotoneCubic::new(trace.grid.nodes().to_vec(), field.to_vec());
    let v = v_alpha.interpolant();
    let zeta_nodes: Vec<f64> = (0..count)
        .map(|i| window.0 + (window.1 - window.0) * i as f64 / (count - 1) as f64)
        .collect();
    let f_values = zeta_nodes
        .iter()
        .map(|&z| {
            let r = t_snap.sqrt() * z.exp();
            u.eval(r) / v.eval(r)
        })
        .collect();
    Ok(SimilarityFrame {
        t: t_snap,
        zeta_nodes,
        f_values,
    })
}

fn frame_metric(frame: &SimilarityFrame, profile: &Profile, params: &ModelParams, window: (f64, f64)) -> f64 {
    frame
        .zeta_nodes
        .iter()
        .zip(frame.f_values.iter())
        .filter(|(z, _)| (window.0..=window.1).contains(*z))
        .map(|(&z, &f)| (f - profile.eval(z, params)).abs())
        .fold(0.0, f64::max)
}

/// sup over the window of |F(zeta, t) - phi(zeta)|, one value per frame
/// (parallel over frames).
pub fn convergence_metric(
    frames: &[SimilarityFrame],
    profile: &Profile,
    params: &ModelParams,
    window: (f64, f64),
) -> Vec<f64> {
    par::map_collect(frames, |f| frame_metric(f, profile, params, window))
}

/// Sequential reference of [`convergence_metric`].
pub fn convergence_metric_seq(
    frames: &[SimilarityFrame],
    profile: &Profile,
    params: &ModelParams,
    window: (f64, f64),
) -> Vec<f64> {
    par::map_collect_seq(frames, |f| frame_metric(f, profile, params, window))
}
