//! Dormand–Prince 5(4) integrator with mixed absolute/relative error control.
//!
//! Integration always runs over one smooth segment `[a, b]`; callers split at
//! coefficient breakpoints so the right-hand side never straddles a jump.

use crate::math::abs;
use crate::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// 5th-order minus embedded 4th-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Counters from one integration.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

/// Adaptive integrator state carried across consecutive segments.
#[derive(Debug, Clone)]
pub struct DormandPrince {
    atol: f64,
    rtol: f64,
    h: f64,
    pub stats: Stats,
}

impl DormandPrince {
    /// Same absolute and relative tolerance.
    pub fn new(tol: f64) -> Self {
        Self::with_tolerances(tol, tol)
    }

    pub fn with_tolerances(atol: f64, rtol: f64) -> Self {
        DormandPrince {
            atol,
            rtol,
            h: 0.0,
            stats: Stats::default(),
        }
    }

    /// Upper bound for the next step.
    pub fn limit_step(&mut self, h_max: f64) {
        if self.h > h_max {
            self.h = h_max;
        }
    }

    /// Advance `y` from `a` to `b`, landing exactly on `b`.
    pub fn integrate<const N: usize, F>(&mut self, f: F, a: f64, b: f64, y: &mut [f64; N]) -> Result<()>
    where
        F: Fn(f64, &[f64; N]) -> [f64; N],
    {
        let span = b - a;
        if span <= 0.0 {
            return Ok(());
        }
        let mut x = a;
        let mut k1 = f(x, y);
        self.stats.evaluations += 1;
        if self.h <= 0.0 {
            let mut scale = 0.0f64;
            for v in k1.iter() {
                scale = scale.max(abs(*v));
            }
            self.h = (0.05 / (1.0 + scale)).min(span);
        }
        let h_min = 1e-14 * (1.0 + abs(b));
        loop {
            let remaining = b - x;
            if remaining <= 1e-15 * (1.0 + abs(b)) {
                break;
            }
            let mut h = self.h.min(remaining);
            let last = h >= remaining;
            if last {
                h = remaining;
            }
            let mut tmp = [0.0; N];
            for i in 0..N {
                tmp[i] = y[i] + h * A21 * k1[i];
            }
            let k2 = f(x + C2 * h, &tmp);
            for i in 0..N {
                tmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
            }
            let k3 = f(x + C3 * h, &tmp);
            for i in 0..N {
                tmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
            }
            let k4 = f(x + C4 * h, &tmp);
            for i in 0..N {
                tmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
            }
            let k5 = f(x + C5 * h, &tmp);
            for i in 0..N {
                tmp[i] = y[i]
                    + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
            }
            let x_new = if last { b } else { x + h };
            let k6 = f(x_new, &tmp);
            let mut y_new = [0.0; N];
            for i in 0..N {
                y_new[i] = y[i]
                    + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]);
            }
            let k7 = f(x_new, &y_new);
            self.stats.evaluations += 6;
            let mut err = 0.0f64;
            for i in 0..N {
                let e = h
                    * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i]
                        + E7 * k7[i]);
                let sc = self.atol + self.rtol * abs(y[i]).max(abs(y_new[i]));
                let r = abs(e) / sc;
                if !r.is_finite() || !y_new[i].is_finite() {
                    err = f64::INFINITY;
                } else {
                    err = err.max(r);
                }
            }
            if !err.is_finite() {
                self.stats.rejected += 1;
                self.h = 0.2 * h;
                if self.h < h_min {
                    return Err(Error::Integration { x, step: self.h });
                }
                continue;
            }
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * libm::pow(err, -0.2)).clamp(0.2, 5.0)
            };
            if err <= 1.0 {
                self.stats.accepted += 1;
                *y = y_new;
                k1 = k7;
                x = x_new;
                // Do not let a short final step shrink the carried step size.
                if !last || factor > 1.0 {
                    self.h = h * factor;
                }
            } else {
                self.stats.rejected += 1;
                self.h = h * factor.min(1.0);
                if self.h < h_min {
                    return Err(Error::Integration { x, step: self.h });
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{cos, exp, sin};

    #[test]
    fn harmonic_oscillator_matches_closed_form() {
        let mut dp = DormandPrince::new(1e-11);
        let mut y = [1.0, 0.0];
        dp.integrate(|_, y| [y[1], -4.0 * y[0]], 0.0, 3.0, &mut y).unwrap();
        assert!((y[0] - cos(6.0)).abs() < 1e-8);
        assert!((y[1] + 2.0 * sin(6.0)).abs() < 1e-8);
    }

    #[test]
    fn segments_chain_without_losing_accuracy() {
        let mut dp = DormandPrince::new(1e-12);
        let mut y = [1.0];
        for k in 0..10 {
            let a = k as f64 * 0.1;
            dp.integrate(|_, y| [-y[0]], a, a + 0.1, &mut y).unwrap();
        }
        assert!((y[0] - exp(-1.0)).abs() < 1e-11);
    }

    #[test]
    fn blow_up_reports_underflow() {
        let mut dp = DormandPrince::new(1e-10);
        let mut y = [1.0];
        let r = dp.integrate(|_, y| [y[0] * y[0]], 0.0, 2.0, &mut y);
        assert!(matches!(r, Err(Error::Integration { .. })));
    }
}
