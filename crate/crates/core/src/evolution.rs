//! Series solution `u(t, x) = Σ v_n(t) φ_n(x)` of
//! `u_tt - u_xx + p u_x + q u = f` with Dirichlet conditions.
//!
//! Each mode solves `v'' + λ_n v = (gf)_n` with `v(0) = A_n`, `v'(0) = B_n`:
//!
//! ```text
//! v_n(t) = A cos ωt + (B/ω) sin ωt + ω⁻¹ (sin ωt · I_c(t) - cos ωt · I_s(t))
//! I_s(t) = ∫₀ᵗ sin(ωs) (gf)_n(s) ds,   I_c(t) = ∫₀ᵗ cos(ωs) (gf)_n(s) ds
//! ```

use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::eigensolver::{EigenPair, SpectralBasis};
use crate::math::{cos, sin, sqrt, PI};
use crate::quadrature::GaussLegendre;
use crate::spectral::{forward, SpectralCoefficients};
use crate::{Error, Result};

/// Initial displacement and velocity on the basis grid, with optional
/// derivative samples for the estimates that need them.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct InitialData {
    pub u0: Vec<f64>,
    pub u1: Vec<f64>,
    pub u0_d1: Option<Vec<f64>>,
    pub u0_d2: Option<Vec<f64>>,
    pub u1_d1: Option<Vec<f64>>,
    pub u1_d2: Option<Vec<f64>>,
}

impl InitialData {
    pub fn new(u0: Vec<f64>, u1: Vec<f64>) -> Self {
        InitialData {
            u0,
            u1,
            ..Default::default()
        }
    }

    pub fn zero(len: usize) -> Self {
        Self::new(vec![0.0; len], vec![0.0; len])
    }

    pub fn with_u0_derivatives(mut self, d1: Vec<f64>, d2: Vec<f64>) -> Self {
        self.u0_d1 = Some(d1);
        self.u0_d2 = Some(d2);
        self
    }

    pub fn with_u1_derivatives(mut self, d1: Vec<f64>, d2: Vec<f64>) -> Self {
        self.u1_d1 = Some(d1);
        self.u1_d2 = Some(d2);
        self
    }

    /// Every sample multiplied by `a`.
    pub fn scaled(&self, a: f64) -> Self {
        let s = |v: &Vec<f64>| v.iter().map(|x| a * x).collect::<Vec<f64>>();
        InitialData {
            u0: s(&self.u0),
            u1: s(&self.u1),
            u0_d1: self.u0_d1.as_ref().map(s),
            u0_d2: self.u0_d2.as_ref().map(s),
            u1_d1: self.u1_d1.as_ref().map(s),
            u1_d2: self.u1_d2.as_ref().map(s),
        }
    }
}

type SourceFn = dyn Fn(f64, f64) -> f64 + Send + Sync;

/// How the Duhamel time grid is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeStep {
    /// `min(dt_base, 2π/(20 ω_N))`.
    Auto { dt_base: f64 },
    /// Fixed step; modes it under-resolves are rejected.
    Fixed(f64),
}

/// Source `f(t, x)` and its time-quadrature settings.
#[derive(Clone)]
pub struct ForcingTerm {
    f: Arc<SourceFn>,
    step: TimeStep,
    max_nodes: usize,
    scale: f64,
}

impl core::fmt::Debug for ForcingTerm {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("ForcingTerm")
            .field("step", &self.step)
            .field("scale", &self.scale)
            .finish()
    }
}

/// Time nodes per mode period.
pub const POINTS_PER_PERIOD: f64 = 20.0;

impl ForcingTerm {
    pub fn new<F>(f: F) -> Self
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        ForcingTerm {
            f: Arc::new(f),
            step: TimeStep::Auto { dt_base: 1e-2 },
            max_nodes: 1 << 20,
            scale: 1.0,
        }
    }

    pub fn zero() -> Self {
        Self::new(|_, _| 0.0)
    }

    pub fn with_step(mut self, step: TimeStep) -> Self {
        self.step = step;
        self
    }

    pub fn with_max_nodes(mut self, n: usize) -> Self {
        self.max_nodes = n;
        self
    }

    /// `a·f`.
    pub fn scaled(&self, a: f64) -> Self {
        let mut out = self.clone();
        out.scale *= a;
        out
    }

    pub fn eval(&self, t: f64, x: f64) -> f64 {
        self.scale * (self.f)(t, x)
    }
}

/// Duhamel tables for every mode on a uniform time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ForcedModes {
    /// Uniform, even number of panels, `t_0 = 0`, last node `T`.
    pub time_grid: Vec<f64>,
    /// `(gf)_n(t_j)`, indexed `[n-1][j]`.
    pub gf: Vec<Vec<f64>>,
    /// `I_s` and `I_c` at even nodes, indexed `[n-1][j/2]`.
    i_s: Vec<Vec<f64>>,
    i_c: Vec<Vec<f64>>,
    /// `max_j ‖f(t_j)‖_{L²}`.
    pub f_sup_l2: f64,
}

impl ForcedModes {
    pub fn dt(&self) -> f64 {
        self.time_grid[1] - self.time_grid[0]
    }
}

/// Solution channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Channel {
    U,
    DuDt,
    DuDx,
    D2uDx2,
}

impl Channel {
    pub const ALL: [Channel; 4] = [Channel::U, Channel::DuDt, Channel::DuDx, Channel::D2uDx2];
}

/// Channels of one time slice on the basis grid.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Snapshot {
    pub t: f64,
    pub u: Option<Vec<f64>>,
    pub du_dt: Option<Vec<f64>>,
    pub du_dx: Option<Vec<f64>>,
    pub d2u_dx2: Option<Vec<f64>>,
}

/// Mode coefficients plus optional Duhamel data; evaluable on `[0, T]`.
#[derive(Debug, Clone)]
pub struct SeriesSolution {
    basis: Arc<SpectralBasis>,
    pub a: SpectralCoefficients,
    pub b: SpectralCoefficients,
    forced: Option<ForcedModes>,
    t_end: f64,
}

fn check_horizon(t_end: f64) -> Result<()> {
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::param(format!("time horizon must be positive, got {t_end}")));
    }
    Ok(())
}

pub fn solve_homogeneous(basis: Arc<SpectralBasis>, data: &InitialData, t_end: f64) -> Result<SeriesSolution> {
    check_horizon(t_end)?;
    let a = forward(&basis, &data.u0)?;
    let b = forward(&basis, &data.u1)?;
    Ok(SeriesSolution {
        basis,
        a,
        b,
        forced: None,
        t_end,
    })
}

pub fn solve_forced(
    basis: Arc<SpectralBasis>,
    data: &InitialData,
    f: &ForcingTerm,
    t_end: f64,
) -> Result<SeriesSolution> {
    let mut sol = solve_homogeneous(basis, data, t_end)?;
    sol.forced = Some(duhamel_tables(&sol.basis, f, t_end)?);
    Ok(sol)
}

fn duhamel_tables(basis: &SpectralBasis, f: &ForcingTerm, t_end: f64) -> Result<ForcedModes> {
    let omegas: Vec<f64> = basis.pairs().iter().map(|p| sqrt(p.lambda)).collect();
    let omega_max = omegas.iter().copied().fold(0.0, f64::max);
    let required = 2.0 * PI / (POINTS_PER_PERIOD * omega_max);
    let dt_wanted = match f.step {
        TimeStep::Auto { dt_base } => {
            if !(dt_base > 0.0) {
                return Err(Error::param("time step must be positive"));
            }
            dt_base.min(required)
        }
        TimeStep::Fixed(dt) => {
            if !(dt > 0.0) {
                return Err(Error::param("time step must be positive"));
            }
            if let Some(n) = omegas.iter().position(|&w| dt > 2.0 * PI / (POINTS_PER_PERIOD * w)) {
                return Err(Error::Resolution {
                    mode: n + 1,
                    required_step: 2.0 * PI / (POINTS_PER_PERIOD * omegas[n]),
                    step: dt,
                });
            }
            dt
        }
    };
    let mut panels = libm::ceil(t_end / dt_wanted) as usize;
    panels += panels % 2;
    panels = panels.max(2);
    if panels + 1 > f.max_nodes {
        return Err(Error::Resolution {
            mode: basis.len(),
            required_step: required,
            step: t_end / (f.max_nodes.saturating_sub(1)).max(1) as f64,
        });
    }
    let dt = t_end / panels as f64;
    let time_grid: Vec<f64> = (0..=panels).map(|j| j as f64 * dt).collect();

    let grid = basis.grid();
    let g = &basis.weight().g;
    let modes = basis.len();
    let mut gf = vec![vec![0.0; panels + 1]; modes];
    let mut f_sup_l2 = 0.0f64;
    let mut weighted = vec![0.0; grid.len()];
    for (j, &t) in time_grid.iter().enumerate() {
        let mut l2 = 0.0;
        for (i, &x) in grid.nodes().iter().enumerate() {
            let v = f.eval(t, x);
            if !v.is_finite() {
                return Err(Error::Evaluation { what: "forcing", x });
            }
            l2 += grid.weights()[i] * v * v;
            weighted[i] = v * g[i];
        }
        f_sup_l2 = f_sup_l2.max(sqrt(l2));
        for (n, pair) in basis.pairs().iter().enumerate() {
            gf[n][j] = grid.dot(&weighted, &pair.psi);
        }
    }

    let half = panels / 2;
    let mut i_s = vec![vec![0.0; half + 1]; modes];
    let mut i_c = vec![vec![0.0; half + 1]; modes];
    for n in 0..modes {
        let w = omegas[n];
        let (mut s, mut c) = (0.0, 0.0);
        for k in 0..half {
            let j = 2 * k;
            let (t0, t1, t2) = (time_grid[j], time_grid[j + 1], time_grid[j + 2]);
            let (g0, g1, g2) = (gf[n][j], gf[n][j + 1], gf[n][j + 2]);
            s += dt / 3.0 * (sin(w * t0) * g0 + 4.0 * sin(w * t1) * g1 + sin(w * t2) * g2);
            c += dt / 3.0 * (cos(w * t0) * g0 + 4.0 * cos(w * t1) * g1 + cos(w * t2) * g2);
            i_s[n][k + 1] = s;
            i_c[n][k + 1] = c;
        }
    }
    Ok(ForcedModes {
        time_grid,
        gf,
        i_s,
        i_c,
        f_sup_l2,
    })
}

impl SeriesSolution {
    pub fn basis(&self) -> &Arc<SpectralBasis> {
        &self.basis
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn forced(&self) -> Option<&ForcedModes> {
        self.forced.as_ref()
    }

    pub fn is_forced(&self) -> bool {
        self.forced.is_some()
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if !(t >= 0.0 && t <= self.t_end * (1.0 + 1e-12)) {
            return Err(Error::param(format!(
                "t = {t} is outside [0, {}]",
                self.t_end
            )));
        }
        Ok(())
    }

    /// `(I_s(t), I_c(t))` for mode index `n` (0-based).
    fn duhamel_at(&self, fm: &ForcedModes, n: usize, t: f64) -> (f64, f64) {
        let dt = fm.dt();
        let last = fm.i_s[n].len() - 1;
        let k = ((t / (2.0 * dt)) as usize).min(last);
        let (mut s, mut c) = (fm.i_s[n][k], fm.i_c[n][k]);
        if k == last {
            return (s, c);
        }
        let t0 = fm.time_grid[2 * k];
        if t <= t0 {
            return (s, c);
        }
        let (g0, g1, g2) = (fm.gf[n][2 * k], fm.gf[n][2 * k + 1], fm.gf[n][2 * k + 2]);
        // Quadratic through the three nodes of the panel pair.
        let quad = |tau: f64| {
            let r = (tau - t0) / dt;
            g0 * (r - 1.0) * (r - 2.0) * 0.5 - g1 * r * (r - 2.0) + g2 * r * (r - 1.0) * 0.5
        };
        let w = sqrt(self.basis.pairs()[n].lambda);
        let gl = GaussLegendre::new(10);
        s += gl.integrate(|tau| sin(w * tau) * quad(tau), t0, t, 1);
        c += gl.integrate(|tau| cos(w * tau) * quad(tau), t0, t, 1);
        (s, c)
    }

    /// `(v_n(t), v_n'(t))` for every mode.
    pub fn mode_amplitudes(&self, t: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_time(t)?;
        let modes = self.basis.len();
        let mut v = vec![0.0; modes];
        let mut dv = vec![0.0; modes];
        for n in 0..modes {
            let w = sqrt(self.basis.pairs()[n].lambda);
            let (a, b) = (self.a.values[n], self.b.values[n]);
            let (sn, cs) = (sin(w * t), cos(w * t));
            v[n] = a * cs + b / w * sn;
            dv[n] = -a * w * sn + b * cs;
            if let Some(fm) = &self.forced {
                let (is, ic) = self.duhamel_at(fm, n, t);
                v[n] += (sn * ic - cs * is) / w;
                dv[n] += cs * ic + sn * is;
            }
        }
        Ok((v, dv))
    }

    /// Requested channels at time `t`.
    pub fn evaluate(&self, t: f64, channels: &[Channel]) -> Result<Snapshot> {
        let want = |c: Channel| channels.contains(&c);
        if want(Channel::D2uDx2) && self.basis.q_samples().is_none() {
            return Err(Error::capability(
                "d2u_dx2 needs q = ν' as a function; ν has jumps",
            ));
        }
        let (v, dv) = self.mode_amplitudes(t)?;
        let len = self.basis.grid().len();
        let sum = |coef: &[f64], field: fn(&EigenPair) -> &[f64]| {
            let mut out = vec![0.0; len];
            for (pair, &c) in self.basis.pairs().iter().zip(coef) {
                if c == 0.0 {
                    continue;
                }
                for (o, s) in out.iter_mut().zip(field(pair)) {
                    *o += c * s;
                }
            }
            out
        };
        let pairs = self.basis.pairs();
        let mut snap = Snapshot {
            t,
            ..Default::default()
        };
        if want(Channel::U) {
            snap.u = Some(sum(&v, |p| &p.phi));
        }
        if want(Channel::DuDt) {
            snap.du_dt = Some(sum(&dv, |p| &p.phi));
        }
        if want(Channel::DuDx) {
            snap.du_dx = Some(sum(&v, |p| &p.phi_prime));
        }
        if want(Channel::D2uDx2) {
            let p = self.basis.p_samples();
            let q = self.basis.q_samples().expect("checked above");
            let mut out = vec![0.0; len];
            for (n, &c) in v.iter().enumerate() {
                if c == 0.0 {
                    continue;
                }
                let pair = &pairs[n];
                for i in 0..len {
                    out[i] += c * (p[i] * pair.phi_prime[i] + (q[i] - pair.lambda) * pair.phi[i]);
                }
            }
            snap.d2u_dx2 = Some(out);
        }
        Ok(snap)
    }

    /// `u(t, ·)`.
    pub fn u(&self, t: f64) -> Result<Vec<f64>> {
        Ok(self.evaluate(t, &[Channel::U])?.u.expect("requested"))
    }

    /// `Σ (v_n'² + λ_n v_n²)`; homogeneous solutions only.
    pub fn spectral_energy(&self, t: f64) -> Result<f64> {
        if self.forced.is_some() {
            return Err(Error::capability("spectral energy is defined for homogeneous solutions only"));
        }
        let (v, dv) = self.mode_amplitudes(t)?;
        Ok(self
            .basis
            .pairs()
            .iter()
            .zip(v.iter().zip(&dv))
            .map(|(p, (v, dv))| dv * dv + p.lambda * v * v)
            .sum())
    }

    /// `Σ (B_n² + λ_n A_n²)`.
    pub fn energy_invariant(&self) -> f64 {
        self.mode_energies().iter().sum()
    }

    fn mode_energies(&self) -> Vec<f64> {
        self.basis
            .pairs()
            .iter()
            .zip(self.a.values.iter().zip(&self.b.values))
            .map(|(p, (a, b))| b * b + p.lambda * a * a)
            .collect()
    }

    /// Share of `Σ (B_n² + λ_n A_n²)` carried by the last four modes.
    pub fn tail_fraction(&self) -> f64 {
        let e = self.mode_energies();
        let total: f64 = e.iter().sum();
        if total == 0.0 {
            return 0.0;
        }
        let start = e.len().saturating_sub(4);
        e[start..].iter().sum::<f64>() / total
    }

    /// `max_j ‖f(t_j)‖_{L²}` over the Duhamel grid, zero when unforced.
    pub fn forcing_sup_l2(&self) -> f64 {
        self.forced.as_ref().map_or(0.0, |f| f.f_sup_l2)
    }
}
