use serde::{Deserialize, Serialize};

use super::config::{LoopKind, RunConfig};
use crate::error::{Error, Result};
use crate::grid::{ScalarField, TimeFlow, VectorField};
use crate::scalar::Real;
use crate::stokes::StokesSolver;
use crate::transport::{CflPolicy, Transport};

/// Terminal condition of the adjoint: `-(u(T) - u_T)`.
pub fn adjoint_terminal<T: Real>(ut_computed: &ScalarField<T>, ut_given: &ScalarField<T>) -> Result<ScalarField<T>> {
    ut_computed.zip_map(ut_given, |a, b| -(a - b))
}

/// Three-point gradient: centred inside, one-sided on the first and last
/// sample of each line.
fn gradient<T: Real>(u: &ScalarField<T>) -> (Vec<T>, Vec<T>) {
    let (w, h) = u.dims();
    let inv = T::one() / u.spacing();
    let half = T::lit(0.5) * inv;
    let mut gx = vec![T::zero(); w * h];
    let mut gy = vec![T::zero(); w * h];
    for y in 0..h {
        for x in 0..w {
            gx[y * w + x] = if x == 0 {
                (u.get(1, y) - u.get(0, y)) * inv
            } else if x == w - 1 {
                (u.get(w - 1, y) - u.get(w - 2, y)) * inv
            } else {
                (u.get(x + 1, y) - u.get(x - 1, y)) * half
            };
            gy[y * w + x] = if y == 0 {
                (u.get(x, 1) - u.get(x, 0)) * inv
            } else if y == h - 1 {
                (u.get(x, h - 1) - u.get(x, h - 2)) * inv
            } else {
                (u.get(x, y + 1) - u.get(x, y - 1)) * half
            };
        }
    }
    (gx, gy)
}

/// Control right-hand side `p grad u`, boundary ring zeroed.
pub fn control_rhs<T: Real>(p: &ScalarField<T>, u: &ScalarField<T>) -> Result<VectorField<T>> {
    p.ensure_same_dims(u)?;
    let (gx, gy) = gradient(u);
    let v = p.values().iter().zip(&gx).map(|(&a, &g)| a * g).collect();
    let w = p.values().iter().zip(&gy).map(|(&a, &g)| a * g).collect();
    Ok(VectorField::new(u.width(), u.height(), v, w)?.with_spacing(u.spacing()))
}

/// Snapshot of one segregation iteration: the flow `b^n` and the terminal
/// mismatch it produces.
#[derive(Clone, Debug)]
pub struct LoopState<T> {
    pub iteration: usize,
    pub flow: TimeFlow<T>,
    /// `|u^n(T) - u_T|` in `L2`.
    pub terminal_mismatch: T,
    /// `0.5 |u^n(T) - u_T|^2`.
    pub data_term: T,
    /// `lambda / 2 * int |grad b|^2 dt`.
    pub reg_term: T,
    /// Weight used for the regularization term.
    pub lambda: T,
    /// Largest relative weak divergence of the Stokes solves that built `b^n`.
    pub div_residual: T,
}

/// Serializable summary of a [`LoopState`] (without the flow).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub terminal_mismatch: f64,
    pub data_term: f64,
    pub reg_term: f64,
    pub cost: f64,
    pub lambda: f64,
    pub div_residual: f64,
}

impl<T: Real> LoopState<T> {
    pub fn cost(&self) -> T {
        self.data_term + self.reg_term
    }

    pub fn record(&self) -> IterationRecord {
        IterationRecord {
            iteration: self.iteration,
            terminal_mismatch: self.terminal_mismatch.as_f64(),
            data_term: self.data_term.as_f64(),
            reg_term: self.reg_term.as_f64(),
            cost: self.cost().as_f64(),
            lambda: self.lambda.as_f64(),
            div_residual: self.div_residual.as_f64(),
        }
    }
}

/// `lambda / 2 * sum_k dt_k h^2 sum |grad b_k|^2` with forward differences.
pub fn regularization<T: Real>(flow: &TimeFlow<T>, lambda: T) -> T {
    let n = T::from_usize_lossy(flow.len());
    let dt = flow.horizon() / n;
    let mut total = T::zero();
    for b in flow.samples() {
        let (w, h) = b.dims();
        let mut s = T::zero();
        for comp in [b.v(), b.w()] {
            for y in 0..h {
                for x in 0..w {
                    let c = comp[y * w + x];
                    if x + 1 < w {
                        s += (comp[y * w + x + 1] - c).powi(2);
                    }
                    if y + 1 < h {
                        s += (comp[(y + 1) * w + x] - c).powi(2);
                    }
                }
            }
        }
        // (difference / h)^2 h^2: the spacing cancels
        total += dt * s;
    }
    T::lit(0.5) * lambda * total
}

/// Cost `0.5 |u(T) - u_T|^2 + lambda / 2 int |grad b|^2 dt` of a state.
pub fn cost<T: Real>(state: &LoopState<T>, flow: &TimeFlow<T>, lambda: T) -> T {
    state.data_term + regularization(flow, lambda)
}

/// Output of one segregation loop.
#[derive(Clone, Debug)]
pub struct LoopOutcome<T> {
    pub flow: TimeFlow<T>,
    /// States for `b^0 = b_init, b^1, ...`; the last entry belongs to `flow`.
    pub history: Vec<LoopState<T>>,
}

/// Per-grid resources shared by the iterations of a loop.
pub struct LoopContext<T> {
    pub stokes: StokesSolver<T>,
    pub transport: Transport<T>,
}

impl<T: Real> LoopContext<T> {
    pub fn new(width: usize, height: usize, spacing: T, cfg: &RunConfig) -> Result<Self> {
        cfg.validate()?;
        let mut stokes = StokesSolver::for_grid(width, height, spacing)?;
        stokes.tol = T::lit(cfg.stokes_tol);
        Ok(Self {
            stokes,
            transport: Transport {
                scheme: cfg.scheme,
                cfl: CflPolicy::new(T::lit(cfg.sigma_cfl))?,
                dt_ode: T::lit(cfg.dt_ode),
            },
        })
    }
}

struct Evaluation<T> {
    /// States at the interval midpoints.
    u_mid: Vec<ScalarField<T>>,
    u_final: ScalarField<T>,
    mismatch: T,
}

fn evaluate<T: Real>(
    ctx: &LoopContext<T>,
    u0: &ScalarField<T>,
    ut: &ScalarField<T>,
    flow: &TimeFlow<T>,
) -> Result<Evaluation<T>> {
    let mut times: Vec<T> = (0..flow.len()).map(|k| flow.midpoint(k)).collect();
    times.push(flow.horizon());
    let mut states = ctx.transport.forward(u0, flow, &times)?;
    let u_final = states.pop().expect("terminal state");
    let mismatch = u_final.sub(ut)?.l2_norm();
    if !mismatch.is_finite() {
        return Err(Error::NonFinite("terminal mismatch".into()));
    }
    Ok(Evaluation {
        u_mid: states,
        u_final,
        mismatch,
    })
}

/// Stokes solves for `p grad u` at every interval midpoint; returns the
/// velocity samples and the worst divergence residual.
fn control_update<T: Real>(
    ctx: &LoopContext<T>,
    ut: &ScalarField<T>,
    flow: &TimeFlow<T>,
    eval: &Evaluation<T>,
    lambda: T,
) -> Result<(Vec<VectorField<T>>, T)> {
    let p_terminal = adjoint_terminal(&eval.u_final, ut)?;
    let mids: Vec<T> = (0..flow.len()).map(|k| flow.midpoint(k)).collect();
    let p_mid = ctx.transport.backward(&p_terminal, flow, &mids)?;
    let mut out = Vec::with_capacity(flow.len());
    let mut div = T::zero();
    for (p, u) in p_mid.iter().zip(&eval.u_mid) {
        let rhs = control_rhs(p, u)?;
        let sol = ctx.stokes.solve(&rhs, lambda)?;
        div = div.max(sol.div_residual);
        out.push(sol.b);
    }
    Ok((out, div))
}

fn state<T: Real>(iteration: usize, flow: &TimeFlow<T>, mismatch: T, lambda: T, div: T) -> LoopState<T> {
    LoopState {
        iteration,
        flow: flow.clone(),
        terminal_mismatch: mismatch,
        data_term: T::lit(0.5) * mismatch * mismatch,
        reg_term: regularization(flow, lambda),
        lambda,
        div_residual: div,
    }
}

fn check_inputs<T: Real>(u0: &ScalarField<T>, ut: &ScalarField<T>, b_init: &TimeFlow<T>) -> Result<()> {
    u0.ensure_same_dims(ut)?;
    if b_init.dims() != u0.dims() {
        return Err(Error::DimensionMismatch {
            expected: u0.dims(),
            found: b_init.dims(),
        });
    }
    Ok(())
}

/// Loop I: `b^n` is the Stokes solution for `p^{n-1} grad u^{n-1}` with the
/// decreasing weight `lambda^n`; `lambda` is the final weight.
pub fn segregation_loop_i<T: Real>(
    ctx: &LoopContext<T>,
    u0: &ScalarField<T>,
    ut: &ScalarField<T>,
    cfg: &RunConfig,
    lambda: T,
    b_init: TimeFlow<T>,
) -> Result<LoopOutcome<T>> {
    check_inputs(u0, ut, &b_init)?;
    let mut flow = b_init;
    let mut history = Vec::with_capacity(cfg.n_loop + 1);
    let mut lam_prev = T::lit(cfg.iteration_lambda(lambda.as_f64(), 1));
    let mut div_prev = T::zero();
    for n in 1..=cfg.n_loop + 1 {
        let eval = evaluate(ctx, u0, ut, &flow)?;
        history.push(state(n - 1, &flow, eval.mismatch, lam_prev, div_prev));
        if n > cfg.n_loop {
            break;
        }
        let lam = T::lit(cfg.iteration_lambda(lambda.as_f64(), n));
        let (samples, div) = control_update(ctx, ut, &flow, &eval, lam)?;
        flow = TimeFlow::new(flow.horizon(), samples)?;
        lam_prev = lam;
        div_prev = div;
    }
    Ok(LoopOutcome { flow, history })
}

/// Loop II: `b^n = b^{n-1} + delta b` with `delta b` the Stokes solution at
/// fixed weight. Stops when the mismatch vanishes or its relative change
/// stays below `stop_tol` for two successive iterations.
pub fn segregation_loop_ii<T: Real>(
    ctx: &LoopContext<T>,
    u0: &ScalarField<T>,
    ut: &ScalarField<T>,
    cfg: &RunConfig,
    lambda: T,
    b_init: TimeFlow<T>,
) -> Result<LoopOutcome<T>> {
    check_inputs(u0, ut, &b_init)?;
    let stop_tol = T::lit(cfg.stop_tol);
    let mut flow = b_init;
    let mut history: Vec<LoopState<T>> = Vec::with_capacity(cfg.n_loop + 1);
    let mut div_max = T::zero();
    let mut stagnant = 0usize;
    for n in 1..=cfg.n_loop + 1 {
        let eval = evaluate(ctx, u0, ut, &flow)?;
        if let Some(prev) = history.last() {
            let prev = prev.terminal_mismatch;
            let change = if prev > T::zero() {
                (eval.mismatch - prev).abs() / prev
            } else {
                T::zero()
            };
            stagnant = if change < stop_tol { stagnant + 1 } else { 0 };
        }
        history.push(state(n - 1, &flow, eval.mismatch, lambda, div_max));
        if n > cfg.n_loop || eval.mismatch.is_zero() || stagnant >= 2 {
            break;
        }
        let (delta, div) = control_update(ctx, ut, &flow, &eval, lambda)?;
        let samples = flow
            .samples()
            .iter()
            .zip(&delta)
            .map(|(b, d)| b.add(d))
            .collect::<Result<Vec<_>>>()?;
        flow = TimeFlow::new(flow.horizon(), samples)?;
        div_max = div_max.max(div);
    }
    Ok(LoopOutcome { flow, history })
}

/// Dispatches to the selected loop.
pub fn run_loop<T: Real>(
    kind: LoopKind,
    ctx: &LoopContext<T>,
    u0: &ScalarField<T>,
    ut: &ScalarField<T>,
    cfg: &RunConfig,
    lambda: T,
    b_init: TimeFlow<T>,
) -> Result<LoopOutcome<T>> {
    match kind {
        LoopKind::One => segregation_loop_i(ctx, u0, ut, cfg, lambda, b_init),
        LoopKind::Two => segregation_loop_ii(ctx, u0, ut, cfg, lambda, b_init),
    }
}
