//! Preconditioned MINRES for symmetric (possibly indefinite) systems.
//!
//! Lanczos recurrence in the inner product induced by an SPD
//! preconditioner `M`, with Givens-rotation updates of the iterate. The
//! residual estimate `|eta|` is the `M^{-1}`-norm of the true residual in
//! exact arithmetic.

use super::sparse::dot;
use crate::scalar::Real;

#[derive(Clone, Debug)]
pub struct MinresOutcome<T> {
    pub x: Vec<T>,
    pub iterations: usize,
    /// Preconditioned residual norm relative to the initial one.
    pub relative_residual: T,
    pub converged: bool,
}

/// Solves `K x = rhs` from `x = 0`.
///
/// `apply_k(x, y)` must compute `y = K x` and `apply_m(r, z)` must compute
/// `z = M^{-1} r` for a symmetric positive-definite `M`.
pub fn minres<T, K, M>(apply_k: K, apply_m: M, rhs: &[T], tol: T, max_iter: usize) -> MinresOutcome<T>
where
    T: Real,
    K: Fn(&[T], &mut [T]),
    M: Fn(&[T], &mut [T]),
{
    let n = rhs.len();
    let mut x = vec![T::zero(); n];

    let mut v_prev = vec![T::zero(); n];
    let mut v = rhs.to_vec();
    let mut z = vec![T::zero(); n];
    apply_m(&v, &mut z);
    let gamma1 = dot(&z, &v).max(T::zero()).sqrt();
    if gamma1.is_zero() {
        return MinresOutcome {
            x,
            iterations: 0,
            relative_residual: T::zero(),
            converged: true,
        };
    }

    let mut gamma_prev = T::one();
    let mut gamma = gamma1;
    let mut eta = gamma1;
    let (mut s_prev, mut s) = (T::zero(), T::zero());
    let (mut c_prev, mut c) = (T::one(), T::one());
    let mut w_prev = vec![T::zero(); n];
    let mut w = vec![T::zero(); n];
    let mut kz = vec![T::zero(); n];
    let mut z_next = vec![T::zero(); n];

    let mut rel = T::one();
    let mut it = 0;
    while it < max_iter {
        it += 1;
        z.iter_mut().for_each(|e| *e /= gamma);
        apply_k(&z, &mut kz);
        let delta = dot(&kz, &z);

        // v_next = K z - (delta / gamma) v - (gamma / gamma_prev) v_prev
        let a = delta / gamma;
        let b = gamma / gamma_prev;
        for i in 0..n {
            let vn = kz[i] - a * v[i] - b * v_prev[i];
            v_prev[i] = v[i];
            v[i] = vn;
        }
        apply_m(&v, &mut z_next);
        let gamma_next = dot(&z_next, &v).max(T::zero()).sqrt();

        let alpha0 = c * delta - c_prev * s * gamma;
        let alpha1 = (alpha0 * alpha0 + gamma_next * gamma_next).sqrt();
        let alpha2 = s * delta + c_prev * c * gamma;
        let alpha3 = s_prev * gamma;
        if alpha1.is_zero() {
            break;
        }
        let c_next = alpha0 / alpha1;
        let s_next = gamma_next / alpha1;

        let step = c_next * eta;
        for i in 0..n {
            let wn = (z[i] - alpha3 * w_prev[i] - alpha2 * w[i]) / alpha1;
            w_prev[i] = w[i];
            w[i] = wn;
            x[i] += step * wn;
        }
        eta = -s_next * eta;
        rel = eta.abs() / gamma1;

        gamma_prev = gamma;
        gamma = gamma_next;
        s_prev = s;
        s = s_next;
        c_prev = c;
        c = c_next;
        std::mem::swap(&mut z, &mut z_next);

        if rel <= tol || gamma.is_zero() {
            return MinresOutcome {
                x,
                iterations: it,
                relative_residual: rel,
                converged: true,
            };
        }
    }
    MinresOutcome {
        x,
        iterations: it,
        relative_residual: rel,
        converged: rel <= tol,
    }
}
