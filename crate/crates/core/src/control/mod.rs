//! Outer optimal-control iterations: the two segregation loops, the
//! coarse-to-fine hierarchy and forward/backward averaging.

mod config;
mod loops;

pub use config::{LambdaSchedule, LoopKind, RunConfig, LEVEL_RATIO_BOUNDS};
pub use loops::{
    adjoint_terminal, control_rhs, cost, regularization, run_loop, segregation_loop_i, segregation_loop_ii,
    IterationRecord, LoopContext, LoopOutcome, LoopState,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{build_pyramid, upsample_flow_bicubic, ScalarField, TimeFlow, MIN_DOWNSAMPLE_DIM};
use crate::scalar::Real;
use crate::transport::Transport;

/// Result of a coarse-to-fine solve.
#[derive(Clone, Debug)]
pub struct HierarchyOutcome<T> {
    /// Flow on the finest (input) grid.
    pub flow: TimeFlow<T>,
    /// Iteration histories, coarsest level first.
    pub levels: Vec<LevelReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelReport {
    pub level: usize,
    pub width: usize,
    pub height: usize,
    pub lambda: f64,
    pub history: Vec<IterationRecord>,
}

impl<T: Real> HierarchyOutcome<T> {
    /// Terminal mismatch of the final flow on the finest grid.
    pub fn final_mismatch(&self) -> Option<f64> {
        self.levels
            .last()
            .and_then(|l| l.history.last())
            .map(|r| r.terminal_mismatch)
    }

    pub fn max_div_residual(&self) -> f64 {
        self.levels
            .iter()
            .flat_map(|l| l.history.iter().map(|r| r.div_residual))
            .fold(0.0, f64::max)
    }
}

/// Number of levels actually usable for an image: each downsampling needs
/// at least `MIN_DOWNSAMPLE_DIM` pixels per side.
pub fn effective_levels(width: usize, height: usize, requested: usize) -> usize {
    let (mut w, mut h) = (width, height);
    let mut levels = 0;
    while levels < requested && w >= MIN_DOWNSAMPLE_DIM && h >= MIN_DOWNSAMPLE_DIM {
        w = w.div_ceil(2);
        h = h.div_ceil(2);
        levels += 1;
    }
    levels
}

/// Runs the chosen loop from the coarsest pyramid level (zero initial flow)
/// to the finest, seeding each level with the upsampled flow of the one below.
pub fn hierarchical_solve<T: Real>(
    u0: &ScalarField<T>,
    ut: &ScalarField<T>,
    cfg: &RunConfig,
    kind: LoopKind,
) -> Result<HierarchyOutcome<T>> {
    cfg.validate()?;
    u0.ensure_same_dims(ut)?;
    let levels = effective_levels(u0.width(), u0.height(), cfg.pyramid_levels);
    let p0 = build_pyramid(u0, levels)?;
    let pt = build_pyramid(ut, levels)?;
    let horizon = T::lit(cfg.horizon);

    let mut reports = Vec::with_capacity(levels + 1);
    let mut flow: Option<TimeFlow<T>> = None;
    for level in (0..=levels).rev() {
        let (a, b) = (&p0[level], &pt[level]);
        let (w, h) = a.dims();
        let init = match flow.take() {
            None => TimeFlow::zeros(w, h, horizon, cfg.n_t)?,
            Some(coarse) => coarse.map_samples(|s| upsample_flow_bicubic(s, w, h))?,
        };
        let ctx = LoopContext::new(w, h, a.spacing(), cfg)?;
        let lambda = cfg.level_lambda(level, levels);
        let out = run_loop(kind, &ctx, a, b, cfg, T::lit(lambda), init)?;
        reports.push(LevelReport {
            level,
            width: w,
            height: h,
            lambda,
            history: out.history.iter().map(LoopState::record).collect(),
        });
        flow = Some(out.flow);
    }
    Ok(HierarchyOutcome {
        flow: flow.expect("at least one level"),
        levels: reports,
    })
}

/// `0.5 [u0 transported by flow_fwd to t + uT transported by flow_bwd to T - t]`,
/// where `flow_bwd` was estimated from the swapped pair `(uT, u0)`.
pub fn interpolate_at<T: Real>(
    transport: &Transport<T>,
    u0: &ScalarField<T>,
    ut: &ScalarField<T>,
    flow_fwd: &TimeFlow<T>,
    flow_bwd: &TimeFlow<T>,
    t: T,
) -> Result<ScalarField<T>> {
    let horizon = flow_fwd.horizon();
    check_time(t, horizon)?;
    let (a, b) = rayon::join(
        || transport.forward(u0, flow_fwd, &[t]),
        || transport.forward(ut, flow_bwd, &[(horizon - t).max(T::zero())]),
    );
    let a = a?.pop().expect("one state");
    let b = b?.pop().expect("one state");
    a.average(&b)
}

/// One-sided interpolation `u0` transported by `flow` to `t`.
pub fn interpolate_one_sided<T: Real>(
    transport: &Transport<T>,
    u0: &ScalarField<T>,
    flow: &TimeFlow<T>,
    t: T,
) -> Result<ScalarField<T>> {
    check_time(t, flow.horizon())?;
    Ok(transport.forward(u0, flow, &[t])?.pop().expect("one state"))
}

fn check_time<T: Real>(t: T, horizon: T) -> Result<()> {
    if !(t >= T::zero() && t <= horizon) {
        return Err(Error::InvalidTime {
            t: t.as_f64(),
            horizon: horizon.as_f64(),
        });
    }
    Ok(())
}

pub fn transport_for<T: Real>(cfg: &RunConfig) -> Result<Transport<T>> {
    Ok(Transport {
        scheme: cfg.scheme,
        cfl: crate::transport::CflPolicy::new(T::lit(cfg.sigma_cfl))?,
        dt_ode: T::lit(cfg.dt_ode),
    })
}

/// Frames and flows produced by [`interpolate_frames`].
#[derive(Clone, Debug)]
pub struct Interpolation<T> {
    pub times: Vec<T>,
    pub frames: Vec<ScalarField<T>>,
    pub forward: HierarchyOutcome<T>,
    /// Flow estimated from the swapped pair; absent for one-sided runs.
    pub backward: Option<HierarchyOutcome<T>>,
}

/// Complete pipeline: estimates the forward flow (and, when averaging, the
/// backward flow from the swapped pair) and synthesizes frames at `times`.
pub fn interpolate_frames<T: Real>(
    u0: &ScalarField<T>,
    ut: &ScalarField<T>,
    cfg: &RunConfig,
    kind: LoopKind,
    times: &[T],
    average: bool,
) -> Result<Interpolation<T>> {
    let horizon = T::lit(cfg.horizon);
    for &t in times {
        check_time(t, horizon)?;
    }
    let transport = transport_for::<T>(cfg)?;
    let (forward, backward) = if average {
        let (f, b) = rayon::join(
            || hierarchical_solve(u0, ut, cfg, kind),
            || hierarchical_solve(ut, u0, cfg, kind),
        );
        (f?, Some(b?))
    } else {
        (hierarchical_solve(u0, ut, cfg, kind)?, None)
    };
    let frames = times
        .iter()
        .map(|&t| match &backward {
            Some(b) => interpolate_at(&transport, u0, ut, &forward.flow, &b.flow, t),
            None => interpolate_one_sided(&transport, u0, &forward.flow, t),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Interpolation {
        times: times.to_vec(),
        frames,
        forward,
        backward,
    })
}
