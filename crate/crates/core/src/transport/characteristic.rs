//! Semi-Lagrangian solution `u(t, x) = u0(Phi^{-1}(t, x))` by RK4 backtracing.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{sample_flow_bilinear, warp, BacktraceMap, ScalarField, TimeFlow, VectorField};
use crate::scalar::Real;

/// Default RK4 step for characteristic backtracing.
pub const DEFAULT_DT_ODE: f64 = 0.1;

#[inline]
fn rk4_back<T: Real>(b: &VectorField<T>, x: T, y: T, h: T, xmax: T, ymax: T) -> (T, T) {
    let half = T::lit(0.5);
    let sixth = T::lit(1.0 / 6.0);
    let two = T::lit(2.0);
    let (k1x, k1y) = sample_flow_bilinear(b, x, y);
    let (k2x, k2y) = sample_flow_bilinear(b, x - half * h * k1x, y - half * h * k1y);
    let (k3x, k3y) = sample_flow_bilinear(b, x - half * h * k2x, y - half * h * k2y);
    let (k4x, k4y) = sample_flow_bilinear(b, x - h * k3x, y - h * k3y);
    let nx = x - h * sixth * (k1x + two * k2x + two * k3x + k4x);
    let ny = y - h * sixth * (k1y + two * k2y + two * k3y + k4y);
    (nx.max(T::zero()).min(xmax), ny.max(T::zero()).min(ymax))
}

/// Integrates `dPhi/ds = b(s, Phi)` from `s = t` down to `s = 0` for every
/// pixel, starting at the pixel itself. Each constant-in-time piece of the
/// flow is covered by equal RK4 steps no longer than `dt_ode`.
pub fn backtrace_rk4<T: Real>(flow: &TimeFlow<T>, t: T, dt_ode: T) -> Result<BacktraceMap<T>> {
    let horizon = flow.horizon();
    if !(t >= T::zero() && t <= horizon * (T::one() + T::lit(1e-12))) {
        return Err(Error::InvalidTime {
            t: t.as_f64(),
            horizon: horizon.as_f64(),
        });
    }
    if !(dt_ode > T::zero()) {
        return Err(Error::InvalidConfig(format!("RK4 step must be positive, got {dt_ode}")));
    }
    let (w, h) = flow.dims();
    let eps = T::lit(1e-12) * horizon;

    // (sample index, duration, number of steps) from t downwards.
    let mut segments = Vec::new();
    let top = flow.index_at(t.min(horizon));
    for k in (0..=top).rev() {
        let (a, b) = flow.interval(k);
        let end = b.min(t);
        let len = end - a;
        if len <= eps || flow.samples()[k].is_zero() {
            continue;
        }
        let steps = (len / dt_ode - T::lit(1e-9)).ceil().to_usize().unwrap_or(1).max(1);
        segments.push((k, len / T::from_usize_lossy(steps), steps));
    }
    if segments.is_empty() {
        return BacktraceMap::identity(w, h);
    }

    let xmax = T::from_usize_lossy(w - 1);
    let ymax = T::from_usize_lossy(h - 1);
    let mut xs = vec![T::zero(); w * h];
    let mut ys = vec![T::zero(); w * h];
    xs.par_chunks_mut(w)
        .zip(ys.par_chunks_mut(w))
        .enumerate()
        .for_each(|(j, (xrow, yrow))| {
            for i in 0..w {
                let mut x = T::from_usize_lossy(i);
                let mut y = T::from_usize_lossy(j);
                for &(k, step, n) in &segments {
                    let b = &flow.samples()[k];
                    for _ in 0..n {
                        (x, y) = rk4_back(b, x, y, step, xmax, ymax);
                    }
                }
                xrow[i] = x;
                yrow[i] = y;
            }
        });
    BacktraceMap::new(w, h, xs, ys)
}

/// `u(t) = u0 o Phi^{-1}(t, .)`: warp of `u0` through the RK4 foot points.
pub fn solve_transport_characteristic<T: Real>(
    u0: &ScalarField<T>,
    flow: &TimeFlow<T>,
    t: T,
    dt_ode: T,
) -> Result<ScalarField<T>> {
    if u0.dims() != flow.dims() {
        return Err(Error::DimensionMismatch {
            expected: u0.dims(),
            found: flow.dims(),
        });
    }
    let map = backtrace_rk4(flow, t, dt_ode)?;
    warp(u0, &map)
}

/// Backward problem `p_t + b . grad p = 0`, `p(T) = p_terminal`, evaluated
/// at time `t` via the reversed, negated flow.
pub fn solve_backward_characteristic<T: Real>(
    p_terminal: &ScalarField<T>,
    flow: &TimeFlow<T>,
    t: T,
    dt_ode: T,
) -> Result<ScalarField<T>> {
    let reversed = flow.reversed_negated();
    solve_transport_characteristic(p_terminal, &reversed, (flow.horizon() - t).max(T::zero()), dt_ode)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_flow_gives_identity_map() {
        let flow = TimeFlow::<f64>::zeros(8, 6, 1.0, 2).unwrap();
        let m = backtrace_rk4(&flow, 1.0, 0.1).unwrap();
        assert_eq!(m, BacktraceMap::identity(8, 6).unwrap());
    }

    #[test]
    fn constant_flow_shifts_foot_points() {
        let flow = TimeFlow::stationary(5.0, VectorField::uniform(32, 16, 1.0, 0.0).unwrap()).unwrap();
        let m = backtrace_rk4(&flow, 5.0, 0.1).unwrap();
        for j in 2..14 {
            for i in 7..31 {
                let (x, y) = m.get(i, j);
                assert!((x - (i as f64 - 5.0)).abs() < 1e-10, "({i},{j}) -> {x}");
                assert_eq!(y, j as f64);
            }
        }
    }

    #[test]
    fn time_zero_is_identity() {
        let u = ScalarField::from_fn(8, 8, |x, y| (x + 3 * y) as f64).unwrap();
        let flow = TimeFlow::stationary(1.0, VectorField::uniform(8, 8, 0.7, -0.2).unwrap()).unwrap();
        assert_eq!(solve_transport_characteristic(&u, &flow, 0.0, 0.1).unwrap(), u);
    }

    #[test]
    fn rejects_time_outside_horizon() {
        let flow = TimeFlow::<f64>::zeros(8, 8, 1.0, 1).unwrap();
        assert!(backtrace_rk4(&flow, 1.5, 0.1).is_err());
    }
}
