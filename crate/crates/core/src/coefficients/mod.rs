//! Coefficients `p`, `ν` (with `q = ν'`), the weight `g`, and sampling grids.
//!
//! Every coefficient is a [`PiecewiseSmoothFn`]: an ordered list of
//! breakpoints in `(0, 1)` and one smooth [`Profile`] per sub-interval. Jumps
//! live only at breakpoints, so integrators can split there and recover
//! smooth-piece accuracy.

mod mollify;
mod profile;

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::math::{abs, exp};
use crate::quadrature::{adaptive_simpson, simpson_weights};
use crate::{Error, Result};

pub use mollify::{
    mollify, mollify_samples, CoefficientDescriptor, Jump, KernelKind, MollifiedSamples,
    MollifierSpec, SingularDescriptor,
};
pub use profile::{Constant, DerivativeOf, FnProfile, HermiteTable, LinearCombination, Profile};

/// Breakpoints closer than this are treated as the same point.
pub const BREAKPOINT_TOL: f64 = 1e-14;

/// Jumps smaller than this are treated as continuity.
pub const JUMP_TOL: f64 = 1e-12;

/// Uniform grid `x_i = i/m` on `[0, 1]` with composite Simpson weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    m: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Grid {
    /// `m` must be even and at least 2.
    pub fn uniform(m: usize) -> Result<Self> {
        if m < 2 || m % 2 != 0 {
            return Err(Error::param(alloc::format!(
                "grid intervals must be even and >= 2, got {m}"
            )));
        }
        let h = 1.0 / m as f64;
        let nodes = (0..=m).map(|i| i as f64 / m as f64).collect();
        let weights = simpson_weights(m, h);
        Ok(Grid { m, nodes, weights })
    }

    /// Number of intervals.
    pub fn intervals(&self) -> usize {
        self.m
    }

    /// Number of nodes (`m + 1`).
    pub fn len(&self) -> usize {
        self.m + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn h(&self) -> f64 {
        1.0 / self.m as f64
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Grid with `factor` times as many intervals.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        Grid::uniform(self.m * factor.max(1))
    }

    pub fn sample<F: FnMut(f64) -> f64>(&self, mut f: F) -> Vec<f64> {
        self.nodes.iter().map(|&x| f(x)).collect()
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.len());
        values.iter().zip(&self.weights).map(|(v, w)| v * w).sum()
    }

    pub fn dot(&self, a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), self.len());
        debug_assert_eq!(b.len(), self.len());
        a.iter()
            .zip(b)
            .zip(&self.weights)
            .map(|((x, y), w)| x * y * w)
            .sum()
    }

    pub fn l2_norm(&self, values: &[f64]) -> f64 {
        libm::sqrt(self.dot(values, values).max(0.0))
    }

    pub fn l1_norm(&self, values: &[f64]) -> f64 {
        values
            .iter()
            .zip(&self.weights)
            .map(|(v, w)| abs(*v) * w)
            .sum()
    }

    pub(crate) fn check_len(&self, values: &[f64], what: &str) -> Result<()> {
        if values.len() != self.len() {
            return Err(Error::usage(alloc::format!(
                "{what} has {} samples but the grid has {} nodes",
                values.len(),
                self.len()
            )));
        }
        Ok(())
    }
}

/// Piecewise-smooth function on `(0, 1)`.
///
/// Evaluation at a breakpoint is right-continuous; use [`Self::value_on`] to
/// pick a side explicitly.
#[derive(Clone)]
pub struct PiecewiseSmoothFn {
    breakpoints: Vec<f64>,
    pieces: Vec<Arc<dyn Profile>>,
}

impl core::fmt::Debug for PiecewiseSmoothFn {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("PiecewiseSmoothFn")
            .field("breakpoints", &self.breakpoints)
            .field("pieces", &self.pieces.len())
            .finish()
    }
}

impl PiecewiseSmoothFn {
    pub fn new(breakpoints: Vec<f64>, pieces: Vec<Arc<dyn Profile>>) -> Result<Self> {
        if pieces.len() != breakpoints.len() + 1 {
            return Err(Error::param(alloc::format!(
                "{} breakpoints need {} pieces, got {}",
                breakpoints.len(),
                breakpoints.len() + 1,
                pieces.len()
            )));
        }
        for (i, &b) in breakpoints.iter().enumerate() {
            if !(b > 0.0 && b < 1.0) {
                return Err(Error::param(alloc::format!(
                    "breakpoint {b} is not inside (0, 1)"
                )));
            }
            if i > 0 && b <= breakpoints[i - 1] {
                return Err(Error::param("breakpoints must be strictly increasing"));
            }
        }
        Ok(PiecewiseSmoothFn {
            breakpoints,
            pieces,
        })
    }

    pub fn smooth(profile: impl Profile + 'static) -> Self {
        PiecewiseSmoothFn {
            breakpoints: Vec::new(),
            pieces: vec![Arc::new(profile)],
        }
    }

    pub fn from_arc(profile: Arc<dyn Profile>) -> Self {
        PiecewiseSmoothFn {
            breakpoints: Vec::new(),
            pieces: vec![profile],
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::smooth(Constant(c))
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    /// `height · H(x - at)`.
    pub fn heaviside(at: f64, height: f64) -> Result<Self> {
        Self::new(
            vec![at],
            vec![Arc::new(Constant(0.0)), Arc::new(Constant(height))],
        )
    }

    /// Smooth function from a value closure and its derivative.
    pub fn from_fns<F, D>(f: F, df: D) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::smooth(FnProfile::new(f, df))
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn piece_count(&self) -> usize {
        self.pieces.len()
    }

    pub fn piece(&self, k: usize) -> &Arc<dyn Profile> {
        &self.pieces[k]
    }

    /// Index of the piece containing `x` (right-continuous at breakpoints).
    pub fn piece_index(&self, x: f64) -> usize {
        self.breakpoints.partition_point(|&b| b <= x)
    }

    pub fn value(&self, x: f64) -> f64 {
        self.pieces[self.piece_index(x)].value(x)
    }

    pub fn derivative(&self, x: f64) -> f64 {
        self.pieces[self.piece_index(x)].derivative(x)
    }

    pub fn value_on(&self, k: usize, x: f64) -> f64 {
        self.pieces[k].value(x)
    }

    pub fn derivative_on(&self, k: usize, x: f64) -> f64 {
        self.pieces[k].derivative(x)
    }

    /// `(location, f(b+) - f(b-))` for every breakpoint.
    pub fn jumps(&self) -> Vec<Jump> {
        self.breakpoints
            .iter()
            .enumerate()
            .map(|(k, &b)| Jump {
                at: b,
                height: self.value_on(k + 1, b) - self.value_on(k, b),
            })
            .collect()
    }

    pub fn is_continuous(&self) -> bool {
        self.jumps().iter().all(|j| abs(j.height) <= JUMP_TOL)
    }

    pub fn scaled(&self, a: f64) -> Self {
        PiecewiseSmoothFn {
            breakpoints: self.breakpoints.clone(),
            pieces: self
                .pieces
                .iter()
                .map(|p| {
                    Arc::new(LinearCombination::new(vec![(a, p.clone())], 0.0)) as Arc<dyn Profile>
                })
                .collect(),
        }
    }

    /// Pointwise sum; breakpoints are merged.
    pub fn add(&self, other: &Self) -> Self {
        self.combine(1.0, other, 1.0)
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Self {
        let breakpoints = merge_points(&[&self.breakpoints, &other.breakpoints]);
        let pieces = segments_between(&breakpoints)
            .map(|(lo, hi)| {
                let mid = 0.5 * (lo + hi);
                let terms = vec![
                    (a, self.pieces[self.piece_index(mid)].clone()),
                    (b, other.pieces[other.piece_index(mid)].clone()),
                ];
                Arc::new(LinearCombination::new(terms, 0.0)) as Arc<dyn Profile>
            })
            .collect();
        PiecewiseSmoothFn {
            breakpoints,
            pieces,
        }
    }

    /// Piecewise derivative, jumps discarded.
    pub fn derivative_fn(&self) -> Self {
        PiecewiseSmoothFn {
            breakpoints: self.breakpoints.clone(),
            pieces: self
                .pieces
                .iter()
                .map(|p| Arc::new(DerivativeOf::new(p.clone())) as Arc<dyn Profile>)
                .collect(),
        }
    }

    /// Sup of `|f|` over grid nodes and both one-sided limits at breakpoints.
    pub fn sup_norm(&self, grid: &Grid) -> f64 {
        let mut m = grid
            .nodes()
            .iter()
            .map(|&x| abs(self.value(x)))
            .fold(0.0, f64::max);
        for (k, &b) in self.breakpoints.iter().enumerate() {
            m = m.max(abs(self.value_on(k, b))).max(abs(self.value_on(k + 1, b)));
        }
        m
    }
}

/// Sorted union of point lists, deduplicated within [`BREAKPOINT_TOL`].
pub(crate) fn merge_points(lists: &[&[f64]]) -> Vec<f64> {
    let mut all: Vec<f64> = lists.iter().flat_map(|l| l.iter().copied()).collect();
    all.sort_by(|a, b| a.total_cmp(b));
    let mut out: Vec<f64> = Vec::with_capacity(all.len());
    for x in all {
        match out.last() {
            Some(&last) if abs(x - last) <= BREAKPOINT_TOL => {}
            _ => out.push(x),
        }
    }
    out
}

/// Consecutive `(lo, hi)` pairs of `[0, b_1, ..., b_k, 1]`.
pub(crate) fn segments_between(points: &[f64]) -> impl Iterator<Item = (f64, f64)> + '_ {
    let n = points.len();
    (0..=n).map(move |i| {
        let lo = if i == 0 { 0.0 } else { points[i - 1] };
        let hi = if i == n { 1.0 } else { points[i] };
        (lo, hi)
    })
}

/// Whether `p'` may be treated as a function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum RegularityClass {
    /// `p` continuous with piecewise `p'`; `ν` bounded (possibly with jumps).
    Classical,
    /// `p` itself jumps, so `p'` carries Dirac masses; regularize first.
    Singular,
}

/// The pair `(p, ν)` with `p'` and, when `ν` is continuous, `q = ν'`.
#[derive(Debug, Clone)]
pub struct CoefficientSet {
    p: PiecewiseSmoothFn,
    p_prime: PiecewiseSmoothFn,
    nu: PiecewiseSmoothFn,
    q: Option<PiecewiseSmoothFn>,
    class: RegularityClass,
}

/// One smooth stretch between merged breakpoints, with the piece index of
/// each coefficient on it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub a: f64,
    pub b: f64,
    pub p_piece: usize,
    pub p_prime_piece: usize,
    pub nu_piece: usize,
}

impl CoefficientSet {
    /// `p'` is the piecewise derivative of `p`; `q` is derived when `ν` has
    /// no jumps.
    pub fn new(p: PiecewiseSmoothFn, nu: PiecewiseSmoothFn) -> Self {
        let p_prime = p.derivative_fn();
        let q = nu.is_continuous().then(|| nu.derivative_fn());
        Self::with_derivatives(p, p_prime, nu, q)
    }

    /// Explicit `p'` and `q`.
    pub fn with_derivatives(
        p: PiecewiseSmoothFn,
        p_prime: PiecewiseSmoothFn,
        nu: PiecewiseSmoothFn,
        q: Option<PiecewiseSmoothFn>,
    ) -> Self {
        let class = if p.is_continuous() {
            RegularityClass::Classical
        } else {
            RegularityClass::Singular
        };
        let q = if nu.is_continuous() { q } else { None };
        CoefficientSet {
            p,
            p_prime,
            nu,
            q,
            class,
        }
    }

    /// `p = 0`, `ν = 0`.
    pub fn free() -> Self {
        Self::new(PiecewiseSmoothFn::zero(), PiecewiseSmoothFn::zero())
    }

    pub fn p(&self) -> &PiecewiseSmoothFn {
        &self.p
    }

    pub fn p_prime(&self) -> &PiecewiseSmoothFn {
        &self.p_prime
    }

    pub fn nu(&self) -> &PiecewiseSmoothFn {
        &self.nu
    }

    /// `q = ν'` when it is a function.
    pub fn q(&self) -> Option<&PiecewiseSmoothFn> {
        self.q.as_ref()
    }

    pub fn class(&self) -> RegularityClass {
        self.class
    }

    pub fn require_classical(&self, what: &str) -> Result<()> {
        match self.class {
            RegularityClass::Classical => Ok(()),
            RegularityClass::Singular => Err(Error::capability(alloc::format!(
                "{what} needs p without jumps; mollify the coefficients first"
            ))),
        }
    }

    /// Verifies `p'` against central differences of `p` inside each piece.
    pub fn check_p_prime_consistency(&self, tol: f64) -> Result<()> {
        let h = 1e-6;
        for (lo, hi) in segments_between(&merge_points(&[
            self.p.breakpoints(),
            self.p_prime.breakpoints(),
        ])) {
            let mid = 0.5 * (lo + hi);
            let kp = self.p.piece_index(mid);
            let kd = self.p_prime.piece_index(mid);
            for j in 1..8 {
                let x = lo + (hi - lo) * j as f64 / 8.0;
                if x - h <= lo || x + h >= hi {
                    continue;
                }
                let fd = (self.p.value_on(kp, x + h) - self.p.value_on(kp, x - h)) / (2.0 * h);
                let d = self.p_prime.value_on(kd, x);
                if abs(fd - d) > tol * (1.0 + abs(d)) {
                    return Err(Error::param(alloc::format!(
                        "p' disagrees with the derivative of p at x = {x}: {d} vs {fd}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Smooth stretches for ODE integration.
    pub fn segments(&self) -> Vec<Segment> {
        let points = merge_points(&[
            self.p.breakpoints(),
            self.p_prime.breakpoints(),
            self.nu.breakpoints(),
        ]);
        segments_between(&points)
            .filter(|(a, b)| b > a)
            .map(|(a, b)| {
                let mid = 0.5 * (a + b);
                Segment {
                    a,
                    b,
                    p_piece: self.p.piece_index(mid),
                    p_prime_piece: self.p_prime.piece_index(mid),
                    nu_piece: self.nu.piece_index(mid),
                }
            })
            .collect()
    }

    /// `(ν, ν² - p²/4 + p'/2)` on a segment.
    #[inline]
    pub fn prufer_terms(&self, seg: &Segment, x: f64) -> (f64, f64) {
        let p = self.p.value_on(seg.p_piece, x);
        let dp = self.p_prime.value_on(seg.p_prime_piece, x);
        let nu = self.nu.value_on(seg.nu_piece, x);
        (nu, nu * nu - 0.25 * p * p + 0.5 * dp)
    }

    /// Norms of the coefficients sampled on `grid`.
    pub fn norms(&self, grid: &Grid) -> CoefficientNorms {
        let p = grid.sample(|x| self.p.value(x));
        let dp = grid.sample(|x| self.p_prime.value(x));
        let nu = grid.sample(|x| self.nu.value(x));
        let g = compute_weight(self, grid).ok();
        CoefficientNorms {
            p_l1: grid.l1_norm(&p),
            p_l2: grid.l2_norm(&p),
            p_linf: self.p.sup_norm(grid),
            dp_l1: grid.l1_norm(&dp),
            dp_l2: grid.l2_norm(&dp),
            dp_linf: self.p_prime.sup_norm(grid),
            nu_l1: grid.l1_norm(&nu),
            nu_l2: grid.l2_norm(&nu),
            nu_linf: self.nu.sup_norm(grid),
            q_linf: self.q.as_ref().map(|q| q.sup_norm(grid)),
            g_linf: g
                .map(|w| w.g.iter().copied().fold(0.0, f64::max))
                .unwrap_or(f64::NAN),
        }
    }
}

/// Sorted union of the breakpoints of `p` and `ν`.
pub fn merged_breakpoints(cs: &CoefficientSet) -> Vec<f64> {
    merge_points(&[cs.p().breakpoints(), cs.nu().breakpoints()])
}

/// Norms of `p`, `p'`, `ν`, `q` and `g` entering the energy estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct CoefficientNorms {
    pub p_l1: f64,
    pub p_l2: f64,
    pub p_linf: f64,
    pub dp_l1: f64,
    pub dp_l2: f64,
    pub dp_linf: f64,
    pub nu_l1: f64,
    pub nu_l2: f64,
    pub nu_linf: f64,
    pub q_linf: Option<f64>,
    pub g_linf: f64,
}

/// `g(x) = exp(-½∫₀ˣ p)` and `g²` on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSamples {
    pub g: Vec<f64>,
    pub g_sq: Vec<f64>,
}

/// Samples the weight by piecewise adaptive Simpson between nodes and
/// breakpoints of `p`.
pub fn compute_weight(cs: &CoefficientSet, grid: &Grid) -> Result<WeightSamples> {
    let p = cs.p();
    for &x in grid.nodes() {
        if !p.value(x).is_finite() {
            return Err(Error::Evaluation { what: "p", x });
        }
    }
    let nodes = grid.nodes();
    let bps = p.breakpoints();
    let tol = 1e-12 * grid.h();
    let mut integral = 0.0;
    let mut g = Vec::with_capacity(nodes.len());
    g.push(1.0);
    for w in nodes.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let mut a = lo;
        let start = bps.partition_point(|&b| b <= lo);
        for &b in bps[start..].iter().take_while(|&&b| b < hi) {
            let k = p.piece_index(0.5 * (a + b));
            integral += adaptive_simpson(|x| p.value_on(k, x), a, b, tol);
            a = b;
        }
        let k = p.piece_index(0.5 * (a + hi));
        integral += adaptive_simpson(|x| p.value_on(k, x), a, hi, tol);
        let v = exp(-0.5 * integral);
        if !v.is_finite() || v <= 0.0 {
            return Err(Error::Evaluation { what: "g", x: hi });
        }
        g.push(v);
    }
    let g_sq = g.iter().map(|v| v * v).collect();
    Ok(WeightSamples { g, g_sq })
}
