//! Float intrinsics routed through `libm` so results are identical with and
//! without `std`.

pub(crate) use core::f64::consts::PI;
pub(crate) use libm::{cos, exp, fabs as abs, log, pow, sin, sqrt};

#[inline]
pub(crate) fn sq(x: f64) -> f64 {
    x * x
}
