//! Field containers, pyramid resampling and coordinate warping.

mod field;
mod resample;
mod spline;

pub use field::{sample_flow_bilinear, BacktraceMap, ScalarField, TimeFlow, VectorField, MIN_DIM};
pub use resample::{
    build_pyramid, coarse_len, cubic_kernel, downsample_bicubic, upsample_flow_bicubic, MIN_DOWNSAMPLE_DIM,
};
pub use spline::{warp, CubicSpline2d};
