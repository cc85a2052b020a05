use crate::scalar::Real;

/// Superbee flux limiter, `max(0, min(2r, 1), min(r, 2))`.
#[inline]
pub fn superbee<T: Real>(r: T) -> T {
    let two = T::lit(2.0);
    T::zero().max((two * r).min(T::one())).max(r.min(two))
}

/// `chi(r) / r`, taken as 0 for `r <= 0` where the limiter vanishes.
#[inline]
pub(crate) fn superbee_over_r<T: Real>(r: T) -> T {
    if r <= T::zero() {
        T::zero()
    } else if r <= T::lit(0.5) {
        T::lit(2.0)
    } else {
        superbee(r) / r
    }
}

/// Denominators smaller than this are treated as zero.
pub(crate) const RATIO_EPS: f64 = 1e-12;

/// Flux-difference ratio `num / den`; a vanishing denominator saturates
/// the ratio to `sign(num) * 1e12`, which reverts the scheme to
/// first-order upwinding locally.
#[inline]
pub(crate) fn flux_ratio<T: Real>(num: T, den: T) -> T {
    if den.abs() < T::lit(RATIO_EPS) {
        num.signum() * T::lit(1.0 / RATIO_EPS)
    } else {
        num / den
    }
}
