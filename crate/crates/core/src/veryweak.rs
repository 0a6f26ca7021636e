//! Nets of regularized problems over a dyadic ε-ladder.
//!
//! Each ε gets mollified coefficients (and optionally mollified data), its own
//! spectral basis and a homogeneous series solution. Norms of the net are
//! fitted as `log‖·‖ ≈ log C + N log(1/ε)` (or against `log|log ε|` for
//! log-moderate nets).

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::coefficients::{mollify_samples, CoefficientDescriptor, CoefficientSet, Grid, MollifierSpec, PiecewiseSmoothFn};
use crate::eigensolver::build_basis;
use crate::evolution::{solve_homogeneous, Channel, InitialData, SeriesSolution};
use crate::math::{abs, log, pow, sin, sqrt, PI};
use crate::{Error, Result};

/// Inclusive range of `k` with `ε_k = 2^{-k}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Ladder {
    pub k_min: u32,
    pub k_max: u32,
}

impl Ladder {
    pub fn new(k_min: u32, k_max: u32) -> Result<Self> {
        if k_min == 0 {
            return Err(Error::param("ladder must start at k >= 1 (eps <= 1/2)"));
        }
        if k_min > k_max {
            return Err(Error::param(format!("empty ladder {k_min}..{k_max}")));
        }
        Ok(Ladder { k_min, k_max })
    }

    pub fn eps(&self) -> Vec<f64> {
        (self.k_min..=self.k_max)
            .map(|k| libm::ldexp(1.0, -(k as i32)))
            .collect()
    }

    pub fn len(&self) -> usize {
        (self.k_max - self.k_min + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

impl Default for Ladder {
    fn default() -> Self {
        Ladder { k_min: 2, k_max: 8 }
    }
}

/// A problem with possibly singular coefficients and data, plus the numerics
/// used for every ε.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub coefficients: CoefficientDescriptor,
    pub u0: PiecewiseSmoothFn,
    pub u1: PiecewiseSmoothFn,
    pub modes: usize,
    pub grid: Grid,
    pub tol: f64,
    pub t_end: f64,
    pub t_samples: usize,
    pub regularize_coefficients: bool,
    pub regularize_data: bool,
}

impl ProblemSpec {
    pub fn new(coefficients: CoefficientDescriptor, u0: PiecewiseSmoothFn, u1: PiecewiseSmoothFn) -> Result<Self> {
        Ok(ProblemSpec {
            coefficients,
            u0,
            u1,
            modes: 16,
            grid: Grid::uniform(4096)?,
            tol: 1e-10,
            t_end: 1.0,
            t_samples: 33,
            regularize_coefficients: true,
            regularize_data: true,
        })
    }

    fn times(&self) -> Vec<f64> {
        let n = self.t_samples.max(2);
        (0..n)
            .map(|j| self.t_end * j as f64 / (n - 1) as f64)
            .collect()
    }

    fn data(&self, eps: f64, kernel: &MollifierSpec) -> Result<InitialData> {
        let sample = |f: &PiecewiseSmoothFn| -> Result<Vec<f64>> {
            if self.regularize_data {
                Ok(mollify_samples(f, eps, kernel, &self.grid)?.values)
            } else {
                Ok(self.grid.sample(|x| f.value(x)))
            }
        };
        Ok(InitialData::new(sample(&self.u0)?, sample(&self.u1)?))
    }

    fn coefficient_set(&self, eps: f64, kernel: &MollifierSpec) -> Result<CoefficientSet> {
        if self.regularize_coefficients {
            self.coefficients.mollify(eps, kernel, &self.grid)
        } else {
            Ok(self.coefficients.exact())
        }
    }

    fn solve(&self, cs: &CoefficientSet, data: &InitialData) -> Result<SeriesSolution> {
        let basis = Arc::new(build_basis(cs, self.modes, &self.grid, self.tol)?);
        solve_homogeneous(basis, data, self.t_end)
    }
}

/// One regularized problem and its solution.
#[derive(Debug, Clone)]
pub struct NetEntry {
    pub eps: f64,
    pub coefficients: CoefficientSet,
    pub data: InitialData,
    pub solution: SeriesSolution,
    pub tail_fraction: f64,
}

/// Solved nets in ladder order.
#[derive(Debug, Clone)]
pub struct RegularizationNet {
    pub kernel: MollifierSpec,
    pub ladder: Ladder,
    pub entries: Vec<NetEntry>,
    times: Vec<f64>,
    grid: Grid,
}

fn at_eps(eps: f64) -> impl Fn(Error) -> Error {
    move |e| Error::Net {
        eps,
        source: alloc::boxed::Box::new(e),
    }
}

pub fn build_net(problem: &ProblemSpec, ladder: &Ladder, kernel: &MollifierSpec) -> Result<RegularizationNet> {
    let ladder = Ladder::new(ladder.k_min, ladder.k_max)?;
    let mut entries = Vec::with_capacity(ladder.len());
    for eps in ladder.eps() {
        let entry = (|| -> Result<NetEntry> {
            let cs = problem.coefficient_set(eps, kernel)?;
            let data = problem.data(eps, kernel)?;
            let solution = problem.solve(&cs, &data)?;
            Ok(NetEntry {
                eps,
                tail_fraction: solution.tail_fraction(),
                coefficients: cs,
                data,
                solution,
            })
        })()
        .map_err(at_eps(eps))?;
        entries.push(entry);
    }
    Ok(RegularizationNet {
        kernel: *kernel,
        ladder,
        entries,
        times: problem.times(),
        grid: problem.grid.clone(),
    })
}

/// Norms of a net member that can be fitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum NetNorm {
    /// `‖p_ε‖_{L^∞}`; fitted as log-moderate.
    PSup,
    /// `‖p_ε'‖_{L^∞}`
    PPrimeSup,
    /// `‖ν_ε‖_{L^∞}`
    NuSup,
    /// `‖ν_ε'‖_{L^∞}`
    NuPrimeSup,
    /// `sup_t ‖u_ε(t)‖_{L²}`
    SolutionL2,
    /// `sup_t ‖∂_x u_ε(t)‖_{L²}`
    SolutionDxL2,
}

impl NetNorm {
    pub const ALL: [NetNorm; 6] = [
        NetNorm::PSup,
        NetNorm::PPrimeSup,
        NetNorm::NuSup,
        NetNorm::NuPrimeSup,
        NetNorm::SolutionL2,
        NetNorm::SolutionDxL2,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            NetNorm::PSup => "p_sup",
            NetNorm::PPrimeSup => "p_prime_sup",
            NetNorm::NuSup => "nu_sup",
            NetNorm::NuPrimeSup => "nu_prime_sup",
            NetNorm::SolutionL2 => "solution_l2",
            NetNorm::SolutionDxL2 => "solution_dx_l2",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| Error::param(format!("unknown net norm '{s}'")))
    }

    /// Whether the fit is against `log|log ε|`.
    pub fn is_log_moderate(self) -> bool {
        matches!(self, NetNorm::PSup)
    }

    fn value(self, e: &NetEntry, grid: &Grid, times: &[f64]) -> Result<f64> {
        let cs = &e.coefficients;
        Ok(match self {
            NetNorm::PSup => cs.p().sup_norm(grid),
            NetNorm::PPrimeSup => cs.p_prime().sup_norm(grid),
            NetNorm::NuSup => cs.nu().sup_norm(grid),
            NetNorm::NuPrimeSup => cs
                .q()
                .ok_or_else(|| Error::capability("ν' is not a function for this net member"))?
                .sup_norm(grid),
            NetNorm::SolutionL2 => sup_over_times(&e.solution, times, Channel::U)?,
            NetNorm::SolutionDxL2 => sup_over_times(&e.solution, times, Channel::DuDx)?,
        })
    }
}

fn sup_over_times(sol: &SeriesSolution, times: &[f64], ch: Channel) -> Result<f64> {
    let grid = sol.basis().grid();
    let mut best = 0.0f64;
    for &t in times {
        let snap = sol.evaluate(t, &[ch])?;
        let v = match ch {
            Channel::U => snap.u,
            Channel::DuDx => snap.du_dx,
            Channel::DuDt => snap.du_dt,
            Channel::D2uDx2 => snap.d2u_dx2,
        }
        .expect("requested channel");
        best = best.max(grid.l2_norm(&v));
    }
    Ok(best)
}

/// `log y ≈ log C + N·s(ε)` with `s = log(1/ε)` or `log|log ε|`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ModerationReport {
    pub norm: String,
    pub log_moderate: bool,
    pub eps: Vec<f64>,
    pub values: Vec<f64>,
    pub c: f64,
    pub n: f64,
    /// RMS of the residuals in `log y`.
    pub residual: f64,
}

/// Minimum ladder points for a fit.
pub const MIN_FIT_POINTS: usize = 4;

/// Least-squares fit of `log y` against `log(1/ε)` (or `log|log ε|`).
pub fn fit_power_law(name: &str, eps: &[f64], values: &[f64], log_moderate: bool) -> Result<ModerationReport> {
    if eps.len() != values.len() {
        return Err(Error::Fit("ladder and value counts differ".into()));
    }
    if eps.len() < MIN_FIT_POINTS {
        return Err(Error::Fit(format!(
            "{name}: {} ladder points, at least {MIN_FIT_POINTS} needed",
            eps.len()
        )));
    }
    if let Some(i) = values.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::Fit(format!(
            "{name}: value {} at eps = {} cannot be fitted on a log scale",
            values[i], eps[i]
        )));
    }
    let xs: Vec<f64> = eps
        .iter()
        .map(|&e| if log_moderate { log(abs(log(e))) } else { -log(e) })
        .collect();
    let ys: Vec<f64> = values.iter().map(|&v| log(v)).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Fit(format!("{name}: ladder points are not distinct")));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = sqrt(
        xs.iter()
            .zip(&ys)
            .map(|(x, y)| {
                let r = y - intercept - slope * x;
                r * r
            })
            .sum::<f64>()
            / n,
    );
    Ok(ModerationReport {
        norm: name.into(),
        log_moderate,
        eps: eps.to_vec(),
        values: values.to_vec(),
        c: libm::exp(intercept),
        n: slope,
        residual,
    })
}

impl RegularizationNet {
    pub fn eps(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.eps).collect()
    }

    pub fn norm_values(&self, norm: NetNorm) -> Result<Vec<f64>> {
        self.entries
            .iter()
            .map(|e| norm.value(e, &self.grid, &self.times).map_err(at_eps(e.eps)))
            .collect()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }
}

pub fn fit_moderateness(net: &RegularizationNet, norm: NetNorm) -> Result<ModerationReport> {
    let values = net.norm_values(norm)?;
    fit_power_law(norm.as_str(), &net.eps(), &values, norm.is_log_moderate())
}

/// Input and output decay for two nets that should agree up to negligible terms.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct DecayFit {
    pub eps: Vec<f64>,
    /// `sup_t ‖u_ε - ũ_ε‖_{L²}`
    pub differences: Vec<f64>,
    /// Every difference is exactly zero.
    pub identical: bool,
    /// `M_out`, the decay order of the differences (`None` when identical).
    pub m_out: Option<f64>,
    pub residual: Option<f64>,
    /// Decay orders of the input differences, by name.
    pub input_slopes: Vec<(String, f64)>,
    /// Growth order of `sup_t ‖S_ε φ‖ / ‖φ‖` for `φ = sin(πx)`.
    pub n_amp: f64,
    /// `min(input slopes) - N_amp - 1`.
    pub bound: f64,
    pub note: String,
}

impl DecayFit {
    /// `M_out ≥ bound` (trivially true for identical nets).
    pub fn bound_holds(&self) -> bool {
        self.m_out.map_or(true, |m| m >= self.bound)
    }
}

fn sup_distance(a: &SeriesSolution, b: &SeriesSolution, times: &[f64]) -> Result<f64> {
    let grid = a.basis().grid();
    let mut best = 0.0f64;
    for &t in times {
        let ua = a.u(t)?;
        let ub = b.u(t)?;
        let d: Vec<f64> = ua.iter().zip(&ub).map(|(x, y)| x - y).collect();
        best = best.max(grid.l2_norm(&d));
    }
    Ok(best)
}

/// Decay order fitted from `y ≈ C ε^M`; `None` if some value is zero.
fn decay_order(name: &str, eps: &[f64], values: &[f64]) -> Result<Option<(f64, f64)>> {
    if values.iter().all(|&v| v == 0.0) {
        return Ok(None);
    }
    let r = fit_power_law(name, eps, values, false)?;
    Ok(Some((-r.n, r.residual)))
}

/// Solves the problem with `kernel_a`, and again with `kernel_b` and data
/// perturbed by `ε^M sin(πx)`; fits the decay of the difference.
pub fn uniqueness_experiment(
    problem: &ProblemSpec,
    ladder: &Ladder,
    kernel_a: &MollifierSpec,
    kernel_b: &MollifierSpec,
    order: f64,
) -> Result<DecayFit> {
    let ladder = Ladder::new(ladder.k_min, ladder.k_max)?;
    let eps = ladder.eps();
    let times = problem.times();
    let grid = &problem.grid;
    let bump = grid.sample(|x| sin(PI * x));
    let bump_norm = grid.l2_norm(&bump);

    let mut differences = Vec::with_capacity(eps.len());
    let mut amplification = Vec::with_capacity(eps.len());
    let (mut dp, mut dnu, mut dq) = (Vec::new(), Vec::new(), Vec::new());
    let mut data_diff = Vec::with_capacity(eps.len());
    for &e in &eps {
        let step = (|| -> Result<()> {
            let cs_a = problem.coefficient_set(e, kernel_a)?;
            let cs_b = problem.coefficient_set(e, kernel_b)?;
            let data_a = problem.data(e, kernel_a)?;
            let mut data_b = problem.data(e, kernel_b)?;
            let delta = pow(e, order);
            for (i, s) in bump.iter().enumerate() {
                data_b.u0[i] += delta * s;
                data_b.u1[i] += delta * s;
            }
            let sol_a = problem.solve(&cs_a, &data_a)?;
            let sol_b = problem.solve(&cs_b, &data_b)?;
            differences.push(sup_distance(&sol_a, &sol_b, &times)?);

            let basis_b = sol_b.basis().clone();
            let zero = alloc::vec![0.0; grid.len()];
            let s0 = solve_homogeneous(basis_b.clone(), &InitialData::new(bump.clone(), zero.clone()), problem.t_end)?;
            let s1 = solve_homogeneous(basis_b, &InitialData::new(zero, bump.clone()), problem.t_end)?;
            let amp = sup_over_times(&s0, &times, Channel::U)?.max(sup_over_times(&s1, &times, Channel::U)?);
            amplification.push(amp / bump_norm);

            let sup_diff = |f: &PiecewiseSmoothFn, g: &PiecewiseSmoothFn| f.combine(1.0, g, -1.0).sup_norm(grid);
            dp.push(sup_diff(cs_a.p(), cs_b.p()));
            dnu.push(sup_diff(cs_a.nu(), cs_b.nu()));
            if let (Some(qa), Some(qb)) = (cs_a.q(), cs_b.q()) {
                dq.push(sup_diff(qa, qb));
            }
            let data_gap = data_a
                .u0
                .iter()
                .zip(&data_b.u0)
                .map(|(a, b)| a - b)
                .collect::<Vec<f64>>();
            data_diff.push(grid.l2_norm(&data_gap));
            Ok(())
        })();
        step.map_err(at_eps(e))?;
    }

    let mut input_slopes: Vec<(String, f64)> = Vec::new();
    for (name, vals) in [
        ("data_u0_l2", &data_diff),
        ("p_sup", &dp),
        ("nu_sup", &dnu),
        ("q_sup", &dq),
    ] {
        if vals.len() == eps.len() {
            if let Some((m, _)) = decay_order(name, &eps, vals)? {
                input_slopes.push((name.into(), m));
            }
        }
    }
    let n_amp = fit_power_law("amplification", &eps, &amplification, false)?.n;
    let identical = differences.iter().all(|&d| d == 0.0);
    let (m_out, residual) = match decay_order("difference", &eps, &differences)? {
        Some((m, r)) => (Some(m), Some(r)),
        None => (None, None),
    };
    let min_input = input_slopes
        .iter()
        .map(|(_, m)| *m)
        .fold(f64::INFINITY, f64::min);
    let bound = min_input - n_amp - 1.0;
    let note = String::from(
        "negligibility is tested at one constructed order; the bound uses the smallest measured input decay order",
    );
    Ok(DecayFit {
        eps,
        differences,
        identical,
        m_out,
        residual,
        input_slopes,
        n_amp,
        bound,
        note,
    })
}

/// `sup_t ‖u - u_ε‖_{L²}` per ladder point.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ConsistencyTable {
    pub eps: Vec<f64>,
    pub distances: Vec<f64>,
    pub tail_fractions: Vec<f64>,
    pub reference_tail_fraction: f64,
}

impl ConsistencyTable {
    pub fn strictly_decreasing(&self) -> bool {
        self.distances.windows(2).all(|w| w[1] < w[0])
    }
}

/// Compares every regularized solution with the solution for the exact
/// coefficients and data.
pub fn consistency_experiment(problem: &ProblemSpec, ladder: &Ladder, kernel: &MollifierSpec) -> Result<ConsistencyTable> {
    let exact = problem.coefficients.exact();
    exact.require_classical("consistency experiment")?;
    let data = InitialData::new(
        problem.grid.sample(|x| problem.u0.value(x)),
        problem.grid.sample(|x| problem.u1.value(x)),
    );
    let reference = problem.solve(&exact, &data)?;
    let net = build_net(problem, ladder, kernel)?;
    let times = problem.times();
    let mut distances = Vec::with_capacity(net.entries.len());
    for e in &net.entries {
        distances.push(sup_distance(&reference, &e.solution, &times).map_err(at_eps(e.eps))?);
    }
    Ok(ConsistencyTable {
        eps: net.eps(),
        distances,
        tail_fractions: net.entries.iter().map(|e| e.tail_fraction).collect(),
        reference_tail_fraction: reference.tail_fraction(),
    })
}
