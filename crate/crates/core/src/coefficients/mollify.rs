//! Friedrichs mollification of piecewise-smooth functions extended by zero
//! outside `(0, 1)`.
//!
//! For `f` with jumps `J_b` at `b` (including `J_0 = f(0+)` and
//! `J_1 = -f(1-)` from the zero extension),
//!
//! ```text
//! f_ε   = ∫ f(x - εs) ψ(s) ds
//! f_ε'  = ∫ f'(x - εs) ψ(s) ds + Σ J_b ψ_ε(x - b)
//! f_ε'' = ε⁻¹ ∫ f'(x - εs) ψ'(s) ds + Σ J_b ψ_ε'(x - b)
//! ```
//!
//! with `f'` the piecewise derivative. The three channels are tabulated at
//! grid nodes and turned back into functions by cubic Hermite interpolation.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use super::{CoefficientSet, Grid, HermiteTable, PiecewiseSmoothFn, Profile};
use crate::math::{abs, exp};
use crate::quadrature::GaussLegendre;
use crate::{Error, Result};

/// Gauss points per panel and panels per unit of `s`.
const GL_POINTS: usize = 20;
const PANELS_PER_UNIT: f64 = 8.0;

/// Smallest admissible `ε·m`: a mollified jump must span this many cells.
pub const MIN_CELLS_PER_EPS: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum KernelKind {
    /// `exp(-1/(1 - s²))`
    Bump,
    /// `exp(-2/(1 - s²))`
    SquaredBump,
}

impl KernelKind {
    fn exponent(self) -> f64 {
        match self {
            KernelKind::Bump => 1.0,
            KernelKind::SquaredBump => 2.0,
        }
    }

    pub fn id(self) -> &'static str {
        match self {
            KernelKind::Bump => "bump",
            KernelKind::SquaredBump => "squared-bump",
        }
    }
}

/// Normalized kernel `ψ` supported in `(-1, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MollifierSpec {
    pub kind: KernelKind,
    /// `c` such that `c·∫exp(-a/(1-s²)) ds = 1`.
    pub normalization: f64,
}

impl MollifierSpec {
    pub fn new(kind: KernelKind) -> Self {
        let a = kind.exponent();
        let raw = |s: f64| unnormalized(a, s);
        let mass = GaussLegendre::new(GL_POINTS).integrate(raw, -1.0, 1.0, 64);
        MollifierSpec {
            kind,
            normalization: 1.0 / mass,
        }
    }

    pub fn bump() -> Self {
        Self::new(KernelKind::Bump)
    }

    pub fn squared_bump() -> Self {
        Self::new(KernelKind::SquaredBump)
    }

    /// Accepts `bump` and `squared-bump`.
    pub fn from_id(id: &str) -> Result<Self> {
        match id {
            "bump" => Ok(Self::bump()),
            "squared-bump" => Ok(Self::squared_bump()),
            other => Err(Error::param(alloc::format!("unknown kernel id '{other}'"))),
        }
    }

    pub fn id(&self) -> &'static str {
        self.kind.id()
    }

    #[inline]
    pub fn value(&self, s: f64) -> f64 {
        self.normalization * unnormalized(self.kind.exponent(), s)
    }

    #[inline]
    pub fn derivative(&self, s: f64) -> f64 {
        if abs(s) >= 1.0 {
            return 0.0;
        }
        let a = self.kind.exponent();
        let w = 1.0 - s * s;
        self.value(s) * (-2.0 * a * s / (w * w))
    }

    /// `ψ(0)`.
    pub fn peak(&self) -> f64 {
        self.value(0.0)
    }

    /// `∫ψ` with the rule used for convolutions.
    pub fn mass(&self) -> f64 {
        GaussLegendre::new(GL_POINTS).integrate(
            |s| self.value(s),
            -1.0,
            1.0,
            (2.0 * PANELS_PER_UNIT) as usize,
        )
    }

    /// `∫ψ_ε = ∫ ε⁻¹ψ(y/ε) dy` over `[-ε, ε]`, same panel density.
    pub fn scaled_mass(&self, eps: f64) -> f64 {
        GaussLegendre::new(GL_POINTS).integrate(
            |y| self.value(y / eps) / eps,
            -eps,
            eps,
            (2.0 * PANELS_PER_UNIT) as usize,
        )
    }
}

impl Default for MollifierSpec {
    fn default() -> Self {
        Self::bump()
    }
}

#[inline]
fn unnormalized(a: f64, s: f64) -> f64 {
    if abs(s) >= 1.0 {
        0.0
    } else {
        exp(-a / (1.0 - s * s))
    }
}

/// Jump `f(at+) - f(at-)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Jump {
    pub at: f64,
    pub height: f64,
}

/// A function given as a piecewise-smooth part plus declared jumps
/// `Σ hⱼ H(x - aⱼ)`.
///
/// For `ν` the jumps are Dirac masses in `q`; for `p` they are Dirac masses
/// in `p'`.
#[derive(Debug, Clone)]
pub struct SingularDescriptor {
    pub jumps: Vec<Jump>,
    pub smooth_part: PiecewiseSmoothFn,
}

impl SingularDescriptor {
    pub fn new(jumps: Vec<Jump>, smooth_part: PiecewiseSmoothFn) -> Result<Self> {
        for j in &jumps {
            if !(j.at > 0.0 && j.at < 1.0) {
                return Err(Error::param(alloc::format!(
                    "jump location {} is not inside (0, 1)",
                    j.at
                )));
            }
            if !j.height.is_finite() || j.height == 0.0 {
                return Err(Error::param(alloc::format!(
                    "jump height at {} must be finite and nonzero",
                    j.at
                )));
            }
        }
        Ok(SingularDescriptor { jumps, smooth_part })
    }

    pub fn smooth(f: PiecewiseSmoothFn) -> Self {
        SingularDescriptor {
            jumps: Vec::new(),
            smooth_part: f,
        }
    }

    pub fn zero() -> Self {
        Self::smooth(PiecewiseSmoothFn::zero())
    }

    /// `smooth_part + Σ hⱼ H(x - aⱼ)` as one piecewise function.
    pub fn function(&self) -> PiecewiseSmoothFn {
        self.jumps.iter().fold(self.smooth_part.clone(), |acc, j| {
            acc.add(&PiecewiseSmoothFn::heaviside(j.at, j.height).expect("validated location"))
        })
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Self {
        let mut jumps: Vec<Jump> = self
            .jumps
            .iter()
            .map(|j| Jump {
                at: j.at,
                height: a * j.height,
            })
            .collect();
        jumps.extend(other.jumps.iter().map(|j| Jump {
            at: j.at,
            height: b * j.height,
        }));
        jumps.retain(|j| j.height != 0.0);
        SingularDescriptor {
            jumps,
            smooth_part: self.smooth_part.combine(a, &other.smooth_part, b),
        }
    }

    /// Total declared jump height.
    pub fn total_jump(&self) -> f64 {
        self.jumps.iter().map(|j| j.height).sum()
    }

    /// Largest `ε` keeping every declared jump's support inside `(0, 1)`.
    pub fn eps_max(&self) -> f64 {
        self.jumps
            .iter()
            .map(|j| j.at.min(1.0 - j.at))
            .fold(0.5, f64::min)
    }
}

/// Descriptors for `p` and `ν`.
#[derive(Debug, Clone)]
pub struct CoefficientDescriptor {
    pub p: SingularDescriptor,
    pub nu: SingularDescriptor,
}

impl CoefficientDescriptor {
    pub fn new(p: SingularDescriptor, nu: SingularDescriptor) -> Self {
        CoefficientDescriptor { p, nu }
    }

    /// Unregularized coefficients; classical iff `p` has no jumps.
    pub fn exact(&self) -> CoefficientSet {
        CoefficientSet::new(self.p.function(), self.nu.function())
    }

    pub fn eps_max(&self) -> f64 {
        self.p.eps_max().min(self.nu.eps_max())
    }

    pub fn mollify(&self, eps: f64, kernel: &MollifierSpec, grid: &Grid) -> Result<CoefficientSet> {
        mollify(self, eps, kernel, grid)
    }
}

/// `f_ε`, `f_ε'`, `f_ε''` at grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct MollifiedSamples {
    pub values: Vec<f64>,
    pub first: Vec<f64>,
    pub second: Vec<f64>,
}

impl MollifiedSamples {
    /// `f_ε` interpolated from `(f_ε, f_ε')`.
    pub fn function(&self) -> PiecewiseSmoothFn {
        table(self.values.clone(), self.first.clone())
    }

    /// `f_ε'` interpolated from `(f_ε', f_ε'')`.
    pub fn derivative_function(&self) -> PiecewiseSmoothFn {
        table(self.first.clone(), self.second.clone())
    }
}

fn table(v: Vec<f64>, d: Vec<f64>) -> PiecewiseSmoothFn {
    PiecewiseSmoothFn::from_arc(Arc::new(HermiteTable::new(v, d)) as Arc<dyn Profile>)
}

fn check_eps(eps: f64, eps_max: f64, grid: &Grid) -> Result<()> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::param(alloc::format!("eps must be positive, got {eps}")));
    }
    if eps > eps_max {
        return Err(Error::param(alloc::format!(
            "eps = {eps} moves a mollified jump outside (0, 1) (largest admissible {eps_max})"
        )));
    }
    let cells = eps * grid.intervals() as f64;
    if cells < MIN_CELLS_PER_EPS {
        return Err(Error::param(alloc::format!(
            "eps = {eps} is below the resolution limit of a {}-interval grid (needs eps*m >= {MIN_CELLS_PER_EPS})",
            grid.intervals()
        )));
    }
    Ok(())
}

/// Mollifies `f` (extended by zero) and samples three channels on `grid`.
pub fn mollify_samples(
    f: &PiecewiseSmoothFn,
    eps: f64,
    kernel: &MollifierSpec,
    grid: &Grid,
) -> Result<MollifiedSamples> {
    check_eps(eps, 0.5, grid)?;
    let gl = GaussLegendre::new(GL_POINTS);

    let bps = f.breakpoints();
    let mut jumps: Vec<(f64, f64)> = Vec::with_capacity(bps.len() + 2);
    jumps.push((0.0, f.value_on(0, 0.0)));
    jumps.extend(f.jumps().iter().map(|j| (j.at, j.height)));
    jumps.push((1.0, -f.value_on(f.piece_count() - 1, 1.0)));

    let n = grid.len();
    let mut out = MollifiedSamples {
        values: vec![0.0; n],
        first: vec![0.0; n],
        second: vec![0.0; n],
    };
    let mut cuts: Vec<f64> = Vec::with_capacity(bps.len() + 4);
    for (i, &x) in grid.nodes().iter().enumerate() {
        // y = x - εs ∈ (0, 1) and s ∈ (-1, 1)
        let lo = ((x - 1.0) / eps).max(-1.0);
        let hi = (x / eps).min(1.0);
        cuts.clear();
        cuts.push(lo);
        for &b in bps {
            let s = (x - b) / eps;
            if s > lo && s < hi {
                cuts.push(s);
            }
        }
        cuts.push(hi);
        cuts.sort_by(|a, b| a.total_cmp(b));

        let (mut v, mut d1, mut d2) = (0.0, 0.0, 0.0);
        for w in cuts.windows(2) {
            let (s0, s1) = (w[0], w[1]);
            if s1 <= s0 {
                continue;
            }
            let k = f.piece_index(x - eps * 0.5 * (s0 + s1));
            let panels = libm::ceil(PANELS_PER_UNIT * (s1 - s0)).max(1.0) as usize;
            let width = (s1 - s0) / panels as f64;
            for j in 0..panels {
                let a = s0 + j as f64 * width;
                let c = a + 0.5 * width;
                let r = 0.5 * width;
                for (t, wt) in gl.nodes.iter().zip(&gl.weights) {
                    let s = c + r * t;
                    let y = x - eps * s;
                    let fy = f.value_on(k, y);
                    let dfy = f.derivative_on(k, y);
                    let ker = kernel.value(s);
                    let dker = kernel.derivative(s);
                    v += r * wt * fy * ker;
                    d1 += r * wt * dfy * ker;
                    d2 += r * wt * dfy * dker;
                }
            }
        }
        d2 /= eps;
        for &(b, jmp) in &jumps {
            let s = (x - b) / eps;
            if abs(s) < 1.0 {
                d1 += jmp * kernel.value(s) / eps;
                d2 += jmp * kernel.derivative(s) / (eps * eps);
            }
        }
        if !(v.is_finite() && d1.is_finite() && d2.is_finite()) {
            return Err(Error::Evaluation {
                what: "mollified coefficient",
                x,
            });
        }
        out.values[i] = v;
        out.first[i] = d1;
        out.second[i] = d2;
    }
    Ok(out)
}

/// Classical regularization `(p_ε, p_ε', ν_ε, q_ε = ν_ε')` tabulated on
/// `grid`.
pub fn mollify(
    desc: &CoefficientDescriptor,
    eps: f64,
    kernel: &MollifierSpec,
    grid: &Grid,
) -> Result<CoefficientSet> {
    check_eps(eps, desc.eps_max(), grid)?;
    let p = mollify_samples(&desc.p.function(), eps, kernel, grid)?;
    let nu = mollify_samples(&desc.nu.function(), eps, kernel, grid)?;
    Ok(CoefficientSet::with_derivatives(
        p.function(),
        p.derivative_function(),
        nu.function(),
        Some(nu.derivative_function()),
    ))
}
