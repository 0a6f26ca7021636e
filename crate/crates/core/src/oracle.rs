//! Second-order finite-difference reference solvers.
//!
//! `fd_eigen` discretizes the symmetric form `-z'' + (p²/4 - p'/2 + q) z`;
//! a jump of height `h` in `ν` becomes `h/Δx` on the nearest node.
//! `fd_wave` runs leapfrog on the original form
//! `u_tt = u_xx - p u_x - q u + f`, so it never sees the substitution used by
//! the spectral pipeline.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::coefficients::CoefficientSet;
use crate::math::{abs, sqrt, PI};
use crate::{Error, Result};

fn oracle(msg: impl Into<String>) -> Error {
    Error::Oracle(msg.into())
}

/// Symmetric tridiagonal matrix with constant off-diagonal `off`.
struct Tridiagonal {
    diag: Vec<f64>,
    off: f64,
}

impl Tridiagonal {
    /// Eigenvalues strictly below `sigma` (Sylvester inertia of `T - σI`).
    fn count_below(&self, sigma: f64) -> usize {
        let mut count = 0;
        let mut d = 1.0;
        for (i, &a) in self.diag.iter().enumerate() {
            d = if i == 0 {
                a - sigma
            } else {
                a - sigma - self.off * self.off / d
            };
            if d == 0.0 {
                d = -f64::EPSILON * (abs(a) + abs(sigma)).max(1.0);
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// Solves `(T - σI) x = b` by elimination without pivoting.
    fn solve_shifted(&self, sigma: f64, b: &[f64]) -> Option<Vec<f64>> {
        let n = self.diag.len();
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let mut denom = self.diag[0] - sigma;
        if denom == 0.0 {
            denom = 1e-300;
        }
        c[0] = self.off / denom;
        d[0] = b[0] / denom;
        for i in 1..n {
            let mut denom = self.diag[i] - sigma - self.off * c[i - 1];
            if denom == 0.0 {
                denom = 1e-300;
            }
            c[i] = self.off / denom;
            d[i] = (b[i] - self.off * d[i - 1]) / denom;
        }
        for i in (0..n - 1).rev() {
            d[i] -= c[i] * d[i + 1];
        }
        d.iter().all(|v| v.is_finite()).then_some(d)
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        (0..n)
            .map(|i| {
                let mut v = self.diag[i] * x[i];
                if i > 0 {
                    v += self.off * x[i - 1];
                }
                if i + 1 < n {
                    v += self.off * x[i + 1];
                }
                v
            })
            .collect()
    }
}

fn potential_matrix(cs: &CoefficientSet, m: usize) -> Result<Tridiagonal> {
    cs.require_classical("finite-difference eigenvalues")?;
    if m < 4 {
        return Err(Error::param("finite-difference mesh needs at least 4 intervals"));
    }
    let h = 1.0 / m as f64;
    let mut diag: Vec<f64> = (1..m)
        .map(|i| {
            let x = i as f64 * h;
            let p = cs.p().value(x);
            let dp = cs.p_prime().value(x);
            let q = match cs.q() {
                Some(q) => q.value(x),
                None => cs.nu().derivative(x),
            };
            2.0 / (h * h) + 0.25 * p * p - 0.5 * dp + q
        })
        .collect();
    if cs.q().is_none() {
        for j in cs.nu().jumps() {
            let node = libm::round(j.at / h) as usize;
            if node >= 1 && node < m {
                diag[node - 1] += j.height / h;
            }
        }
    }
    if let Some(i) = diag.iter().position(|v| !v.is_finite()) {
        return Err(Error::Evaluation {
            what: "finite-difference potential",
            x: (i + 1) as f64 * h,
        });
    }
    Ok(Tridiagonal {
        diag,
        off: -1.0 / (h * h),
    })
}

/// `count` lowest eigenvalues of the discretized operator on `m` intervals.
pub fn fd_eigen(cs: &CoefficientSet, count: usize, m: usize) -> Result<Vec<f64>> {
    let t = potential_matrix(cs, m)?;
    if count == 0 || count >= m - 1 {
        return Err(Error::param(format!("cannot extract {count} eigenvalues from {} unknowns", m - 1)));
    }
    let bound = t
        .diag
        .iter()
        .map(|d| abs(*d) + 2.0 * abs(t.off))
        .fold(0.0, f64::max);
    let mut out = Vec::with_capacity(count);
    for n in 1..=count {
        let seed = PI * PI * (n * n) as f64;
        let lambda = match inverse_iteration(&t, seed, bound) {
            Some(l) if is_nth(&t, l, n) => l,
            _ => {
                let (lo, hi) = isolate(&t, n, -bound, bound);
                inverse_iteration(&t, 0.5 * (lo + hi), bound)
                    .filter(|&l| is_nth(&t, l, n))
                    .ok_or_else(|| oracle(format!("inverse iteration did not converge for n = {n}")))?
            }
        };
        out.push(lambda);
    }
    Ok(out)
}

fn is_nth(t: &Tridiagonal, lambda: f64, n: usize) -> bool {
    let d = 1e-9 * (1.0 + abs(lambda));
    t.count_below(lambda - d) == n - 1 && t.count_below(lambda + d) == n
}

/// Bisection on the Sturm count down to a bracket of relative width 1e-6.
fn isolate(t: &Tridiagonal, n: usize, mut lo: f64, mut hi: f64) -> (f64, f64) {
    for _ in 0..200 {
        if hi - lo <= 1e-6 * (1.0 + abs(lo) + abs(hi)) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if t.count_below(mid) >= n {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (lo, hi)
}

/// Rayleigh-quotient inverse iteration from `sigma`; `scale` bounds `‖T‖`.
fn inverse_iteration(t: &Tridiagonal, mut sigma: f64, scale: f64) -> Option<f64> {
    let n = t.diag.len();
    // Deterministic pseudo-random start so every mode has a component.
    let mut state: u64 = 0x9e37_79b9_7f4a_7c15;
    let mut x: Vec<f64> = (0..n)
        .map(|_| {
            state = state.wrapping_mul(6_364_136_223_846_793_005).wrapping_add(1_442_695_040_888_963_407);
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        })
        .collect();
    let mut last = f64::NAN;
    for it in 0..100 {
        // A singular shift means `sigma` already is an eigenvalue to round-off.
        let Some(y) = t.solve_shifted(sigma, &x) else {
            return last.is_finite().then_some(sigma);
        };
        let norm = sqrt(y.iter().map(|v| v * v).sum());
        if !(norm.is_finite() && norm > 0.0) {
            return last.is_finite().then_some(sigma);
        }
        x = y.iter().map(|v| v / norm).collect();
        let tx = t.apply(&x);
        let rq: f64 = x.iter().zip(&tx).map(|(a, b)| a * b).sum();
        let resid = sqrt(tx.iter().zip(&x).map(|(a, b)| (a - rq * b) * (a - rq * b)).sum());
        if resid <= 1e-13 * scale || abs(rq - last) <= 1e-13 * abs(rq).max(1.0) {
            return Some(rq);
        }
        last = rq;
        // Plain inverse iteration first; Rayleigh shifts once the vector settles.
        if it >= 3 {
            sigma = rq;
        }
    }
    None
}

/// Initial data, source and snapshot times for [`fd_wave`].
pub struct WaveProblem<'a> {
    pub u0: &'a dyn Fn(f64) -> f64,
    pub u1: &'a dyn Fn(f64) -> f64,
    pub f: Option<&'a dyn Fn(f64, f64) -> f64>,
    pub t_end: f64,
    pub snapshots: &'a [f64],
}

/// Leapfrog field snapshots.
#[derive(Debug, Clone, PartialEq)]
pub struct FdSolution {
    pub h: f64,
    pub k: f64,
    pub scheme: &'static str,
    pub nodes: Vec<f64>,
    /// `(t, u(t, x_i))`
    pub snapshots: Vec<(f64, Vec<f64>)>,
}

impl FdSolution {
    /// Piecewise-linear interpolation of snapshot `j` at `x`.
    pub fn interpolate(&self, j: usize, x: f64) -> f64 {
        let u = &self.snapshots[j].1;
        let m = u.len() - 1;
        let s = (x / self.h).clamp(0.0, m as f64);
        let i = (s as usize).min(m - 1);
        let r = s - i as f64;
        u[i] * (1.0 - r) + u[i + 1] * r
    }

    /// Snapshot `j` resampled at `xs`.
    pub fn resample(&self, j: usize, xs: &[f64]) -> Vec<f64> {
        xs.iter().map(|&x| self.interpolate(j, x)).collect()
    }
}

/// Largest admissible `k/h`.
pub const CFL: f64 = 0.9;

pub fn fd_wave(cs: &CoefficientSet, problem: &WaveProblem<'_>, h: f64, k: f64) -> Result<FdSolution> {
    cs.require_classical("finite-difference wave solver")?;
    let q = cs
        .q()
        .ok_or_else(|| Error::capability("finite-difference wave solver needs q = ν' as a function"))?;
    if !(h > 0.0 && k > 0.0) {
        return Err(Error::param("mesh and time steps must be positive"));
    }
    if k > CFL * h * (1.0 + 1e-12) {
        return Err(Error::param(format!("time step {k} violates k <= {CFL}·h = {}", CFL * h)));
    }
    let t_end = problem.t_end;
    if !(t_end > 0.0) {
        return Err(Error::param("time horizon must be positive"));
    }
    let m = libm::round(1.0 / h) as usize;
    if m < 4 {
        return Err(Error::param("mesh needs at least 4 intervals"));
    }
    let h = 1.0 / m as f64;
    let steps = libm::ceil(t_end / k - 1e-9) as usize;
    let k = t_end / steps as f64;
    let nodes: Vec<f64> = (0..=m).map(|i| i as f64 * h).collect();
    let p: Vec<f64> = nodes.iter().map(|&x| cs.p().value(x)).collect();
    let qv: Vec<f64> = nodes.iter().map(|&x| q.value(x)).collect();
    let source = |t: f64, x: f64| problem.f.map_or(0.0, |f| f(t, x));

    let accel = |u: &[f64], t: f64, out: &mut [f64]| {
        out[0] = 0.0;
        out[m] = 0.0;
        for i in 1..m {
            let uxx = (u[i + 1] - 2.0 * u[i] + u[i - 1]) / (h * h);
            let ux = (u[i + 1] - u[i - 1]) / (2.0 * h);
            out[i] = uxx - p[i] * ux - qv[i] * u[i] + source(t, nodes[i]);
        }
    };

    let mut prev: Vec<f64> = nodes.iter().map(|&x| (problem.u0)(x)).collect();
    prev[0] = 0.0;
    prev[m] = 0.0;
    let v0: Vec<f64> = nodes.iter().map(|&x| (problem.u1)(x)).collect();
    let mut a = vec![0.0; m + 1];
    accel(&prev, 0.0, &mut a);
    let mut cur: Vec<f64> = (0..=m)
        .map(|i| prev[i] + k * v0[i] + 0.5 * k * k * a[i])
        .collect();
    cur[0] = 0.0;
    cur[m] = 0.0;

    let scale = prev
        .iter()
        .chain(&v0)
        .map(|v| abs(*v))
        .fold(0.0, f64::max)
        .max(cur.iter().map(|v| abs(*v)).fold(0.0, f64::max) / k)
        .max(1e-12);
    let limit = 1e6 * scale;

    let mut wanted: Vec<(usize, f64)> = problem.snapshots.iter().copied().enumerate().collect();
    for &(_, t) in &wanted {
        if !(0.0..=t_end * (1.0 + 1e-12)).contains(&t) {
            return Err(Error::param(format!("snapshot time {t} outside [0, {t_end}]")));
        }
    }
    wanted.sort_by(|a, b| a.1.total_cmp(&b.1));
    let mut snaps: Vec<Option<Vec<f64>>> = vec![None; problem.snapshots.len()];
    let mut w = 0;
    // levels (n-1, n, n+1) are kept so non-grid times can use a quadratic.
    let mut next = vec![0.0; m + 1];
    let mut take = |level: usize, older: &[f64], mid: &[f64], newer: Option<&[f64]>, w: &mut usize| {
        while *w < wanted.len() {
            let (idx, t) = wanted[*w];
            let s = t / k;
            let lvl = level as f64;
            if abs(s - lvl) <= 1e-9 {
                snaps[idx] = Some(mid.to_vec());
            } else if s < lvl + 1.0 {
                let Some(newer) = newer else { break };
                let r = s - lvl;
                snaps[idx] = Some(
                    (0..=m)
                        .map(|i| {
                            let (a, b, c) = (older[i], mid[i], newer[i]);
                            b + 0.5 * r * (c - a) + 0.5 * r * r * (c - 2.0 * b + a)
                        })
                        .collect(),
                );
            } else {
                break;
            }
            *w += 1;
        }
    };

    take(0, &prev, &prev, Some(&cur), &mut w);
    for n in 1..=steps {
        if n < steps || w < wanted.len() {
            let t = n as f64 * k;
            accel(&cur, t, &mut a);
            for i in 0..=m {
                next[i] = 2.0 * cur[i] - prev[i] + k * k * a[i];
            }
            next[0] = 0.0;
            next[m] = 0.0;
            if next.iter().any(|v| !v.is_finite() || abs(*v) > limit) {
                return Err(oracle(format!("leapfrog unstable at t = {t}")));
            }
        }
        take(n, &prev, &cur, Some(&next), &mut w);
        core::mem::swap(&mut prev, &mut cur);
        core::mem::swap(&mut cur, &mut next);
    }
    let snapshots = wanted_order(problem.snapshots, snaps)?;
    Ok(FdSolution {
        h,
        k,
        scheme: "leapfrog-centered",
        nodes,
        snapshots,
    })
}

fn wanted_order(times: &[f64], snaps: Vec<Option<Vec<f64>>>) -> Result<Vec<(f64, Vec<f64>)>> {
    times
        .iter()
        .zip(snaps)
        .map(|(&t, s)| s.map(|u| (t, u)).ok_or_else(|| oracle(format!("snapshot at t = {t} was not reached"))))
        .collect()
}
