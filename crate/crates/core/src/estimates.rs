//! Both sides of the energy inequalities for the homogeneous and forced wave
//! problems, with every hidden constant set to 1.
//!
//! Shorthand used below (`X⁽ᵏ⁾ = ‖gu_0‖²_{W^k} + ‖gu_1‖²_{W^{k-1}}`):
//!
//! ```text
//! R  = 1 + ‖ν‖₂² (‖ν‖₂² + ‖p‖₂² + ‖p'‖₁²)
//! S  = ‖p‖∞² + ‖ν‖∞²
//! Q  = ‖p‖∞⁴ + ‖p'‖∞² + ‖q‖∞²
//! D₀ = ‖u_0''‖² + ‖p‖∞² ‖u_0'‖² + Q ‖u_0‖² + ‖u_1‖²
//! F  = 2T² ‖g‖∞² ‖f‖²_{C([0,T], L²)}
//! ```
//!
//! Weighted Sobolev norms are spectral: `‖gu_0‖²_{W^k} = Σ λ_n^k A_n²`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::coefficients::CoefficientNorms;
use crate::evolution::{Channel, ForcingTerm, InitialData, SeriesSolution};
use crate::math::{exp, pow, sq};
use crate::spectral::sobolev_norm;
use crate::{Error, Result};

/// The inequalities evaluated by [`evaluate_estimate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum EstimateId {
    Est1,
    Est2,
    Est3,
    Est4,
    Est5,
    Ec1,
    Ec2,
    Ec3,
    Ec4,
    EsNh1,
    EsNh2,
    EsNh3,
    EsNh4,
    EsNh5,
    EcNh1,
    EcNh2,
    EcNh3,
    EcNh4,
}

impl EstimateId {
    pub const ALL: [EstimateId; 18] = [
        EstimateId::Est1,
        EstimateId::Est2,
        EstimateId::Est3,
        EstimateId::Est4,
        EstimateId::Est5,
        EstimateId::Ec1,
        EstimateId::Ec2,
        EstimateId::Ec3,
        EstimateId::Ec4,
        EstimateId::EsNh1,
        EstimateId::EsNh2,
        EstimateId::EsNh3,
        EstimateId::EsNh4,
        EstimateId::EsNh5,
        EstimateId::EcNh1,
        EstimateId::EcNh2,
        EstimateId::EcNh3,
        EstimateId::EcNh4,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EstimateId::Est1 => "est1",
            EstimateId::Est2 => "est2",
            EstimateId::Est3 => "est3",
            EstimateId::Est4 => "est4",
            EstimateId::Est5 => "est5",
            EstimateId::Ec1 => "ec1",
            EstimateId::Ec2 => "ec2",
            EstimateId::Ec3 => "ec3",
            EstimateId::Ec4 => "ec4",
            EstimateId::EsNh1 => "es-nh1",
            EstimateId::EsNh2 => "es-nh2",
            EstimateId::EsNh3 => "es-nh3",
            EstimateId::EsNh4 => "es-nh4",
            EstimateId::EsNh5 => "es-nh5",
            EstimateId::EcNh1 => "ec-nh1",
            EstimateId::EcNh2 => "ec-nh2",
            EstimateId::EcNh3 => "ec-nh3",
            EstimateId::EcNh4 => "ec-nh4",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| Error::param(format!("unknown estimate id '{s}'")))
    }

    /// Estimates for the equation without source.
    pub fn is_homogeneous(self) -> bool {
        matches!(
            self,
            EstimateId::Est1
                | EstimateId::Est2
                | EstimateId::Est3
                | EstimateId::Est4
                | EstimateId::Est5
                | EstimateId::Ec1
                | EstimateId::Ec2
                | EstimateId::Ec3
                | EstimateId::Ec4
        )
    }

    fn needs_data_derivatives(self) -> bool {
        matches!(
            self,
            EstimateId::Ec2
                | EstimateId::Ec3
                | EstimateId::Ec4
                | EstimateId::EcNh2
                | EstimateId::EcNh3
                | EstimateId::EcNh4
        )
    }

    fn lhs_channel(self) -> LhsKind {
        use EstimateId::*;
        match self {
            Est1 | Ec1 | EsNh1 | EcNh1 => LhsKind::Channel(Channel::U),
            Est2 | Ec2 | EsNh2 | EcNh2 => LhsKind::Channel(Channel::DuDt),
            Est3 | Ec3 | EsNh3 | EcNh3 => LhsKind::Channel(Channel::DuDx),
            Est4 | Ec4 | EsNh4 | EcNh4 => LhsKind::Channel(Channel::D2uDx2),
            Est5 | EsNh5 => LhsKind::Sobolev,
        }
    }
}

impl core::fmt::Display for EstimateId {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

enum LhsKind {
    Channel(Channel),
    Sobolev,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateOptions {
    /// Equispaced samples of `[0, T]`.
    pub t_samples: usize,
    /// Order `k` for est5 and es-nh5.
    pub k: f64,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        EstimateOptions { t_samples: 33, k: 1.0 }
    }
}

/// Sampled left-hand side, assembled right-hand side and their ratio.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct EstimateReport {
    pub estimate_id: EstimateId,
    pub k: Option<f64>,
    pub t_samples: Vec<f64>,
    pub lhs: Vec<f64>,
    pub rhs: f64,
    pub ratio_max: f64,
    pub norm_inventory: Vec<(String, f64)>,
}

/// Data and coefficient norms entering the right-hand sides.
#[derive(Debug, Clone, PartialEq)]
struct Inventory {
    entries: Vec<(String, f64)>,
}

impl Inventory {
    fn put(&mut self, name: &str, v: f64) -> f64 {
        if !self.entries.iter().any(|(n, _)| n == name) {
            self.entries.push((name.into(), v));
        }
        v
    }
}

fn l2_sq(grid: &crate::Grid, v: &[f64]) -> f64 {
    grid.dot(v, v)
}

fn data_derivative<'a>(v: &'a Option<Vec<f64>>, id: EstimateId, what: &str) -> Result<&'a [f64]> {
    v.as_deref().ok_or_else(|| {
        Error::capability(format!("{id} needs samples of {what}"))
    })
}

/// `max_t (‖f‖ + ‖∂_t f‖)` on the Duhamel time grid, `∂_t` by central differences.
fn forcing_c1(sol: &SeriesSolution, f: &ForcingTerm) -> f64 {
    let Some(fm) = sol.forced() else { return 0.0 };
    let grid = sol.basis().grid();
    let t_end = sol.t_end();
    let delta = 1e-5 * t_end;
    let mut best = 0.0f64;
    for &t in &fm.time_grid {
        let (ta, tb) = ((t - delta).max(0.0), (t + delta).min(t_end));
        let (mut a, mut d) = (0.0, 0.0);
        for (i, &x) in grid.nodes().iter().enumerate() {
            let w = grid.weights()[i];
            let v = f.eval(t, x);
            let dv = (f.eval(tb, x) - f.eval(ta, x)) / (tb - ta);
            a += w * v * v;
            d += w * dv * dv;
        }
        best = best.max(libm::sqrt(a) + libm::sqrt(d));
    }
    best
}

/// `max_j ‖g f(t_j)‖_{W^s}` from the Duhamel tables.
fn forcing_sobolev(sol: &SeriesSolution, s: f64) -> f64 {
    let Some(fm) = sol.forced() else { return 0.0 };
    let lambdas = sol.basis().lambdas();
    (0..fm.time_grid.len())
        .map(|j| {
            libm::sqrt(
                lambdas
                    .iter()
                    .zip(&fm.gf)
                    .map(|(l, g)| pow(*l, s) * g[j] * g[j])
                    .sum(),
            )
        })
        .fold(0.0, f64::max)
}

/// Evaluates one inequality on a solved problem.
///
/// `data` must be the data the solution was built from; `forcing` is needed
/// only by the ids containing `‖f‖_{C¹}`.
pub fn evaluate_estimate(
    id: EstimateId,
    sol: &SeriesSolution,
    data: &InitialData,
    forcing: Option<&ForcingTerm>,
    opts: &EstimateOptions,
) -> Result<EstimateReport> {
    if id.is_homogeneous() && sol.is_forced() {
        return Err(Error::capability(format!(
            "{id} applies to the equation without source"
        )));
    }
    if opts.t_samples < 2 {
        return Err(Error::param("at least two time samples are needed"));
    }
    let basis = sol.basis();
    let grid = basis.grid();
    let cs = basis.coefficients();
    let norms: CoefficientNorms = cs.norms(grid);
    let needs_q = matches!(id, EstimateId::Est4 | EstimateId::EsNh4)
        || id.needs_data_derivatives()
        || matches!(id, EstimateId::Ec4 | EstimateId::EcNh4);
    let q_inf = match (needs_q, norms.q_linf) {
        (true, None) => {
            return Err(Error::capability(format!(
                "{id} needs q = ν' as a bounded function"
            )))
        }
        (_, q) => q.unwrap_or(f64::NAN),
    };

    let mut inv = Inventory { entries: Vec::new() };
    let t_end = sol.t_end();
    let p_l1 = inv.put("p_L1", norms.p_l1);
    let e1 = exp(p_l1);
    let e2 = exp(2.0 * p_l1);
    let r = inv.put(
        "R",
        1.0 + sq(norms.nu_l2) * (sq(norms.nu_l2) + sq(norms.p_l2) + sq(norms.dp_l1)),
    );
    let s = inv.put("S", sq(norms.p_linf) + sq(norms.nu_linf));

    let k = opts.k;
    let w = |c, order: f64| sobolev_norm(basis, c, order).map(sq);
    let a = &sol.a;
    let b = &sol.b;

    let homogeneous_x0 = |inv: &mut Inventory| -> Result<f64> {
        let u0 = inv.put("gu0_L2^2", w(a, 0.0)?);
        let u1 = inv.put("gu1_W-1^2", w(b, -1.0)?);
        Ok(u0 + u1)
    };
    let homogeneous_x1 = |inv: &mut Inventory| -> Result<f64> {
        let u0 = inv.put("gu0_W1^2", w(a, 1.0)?);
        let u1 = inv.put("gu1_L2^2", w(b, 0.0)?);
        Ok(u0 + u1)
    };
    let forcing_f = |inv: &mut Inventory, with_g: bool| -> f64 {
        let f = inv.put("f_C(L2)", sol.forcing_sup_l2());
        let g2 = if with_g { sq(inv.put("g_Linf", norms.g_linf)) } else { 1.0 };
        inv.put("T", t_end);
        2.0 * t_end * t_end * g2 * f * f
    };

    let plain = |inv: &mut Inventory| -> Result<(f64, f64, f64, f64, f64, f64)> {
        let u0 = inv.put("u0_L2^2", l2_sq(grid, &data.u0));
        let u1 = inv.put("u1_L2^2", l2_sq(grid, &data.u1));
        let u0d1 = data_derivative(&data.u0_d1, id, "u0'")?;
        let u0d2 = data_derivative(&data.u0_d2, id, "u0''")?;
        let u0p = inv.put("u0'_L2^2", l2_sq(grid, u0d1));
        let u0pp = inv.put("u0''_L2^2", l2_sq(grid, u0d2));
        let (u1p, u1pp) = match (&data.u1_d1, &data.u1_d2) {
            (Some(d1), Some(d2)) => (
                inv.put("u1'_L2^2", l2_sq(grid, d1)),
                inv.put("u1''_L2^2", l2_sq(grid, d2)),
            ),
            _ => (f64::NAN, f64::NAN),
        };
        Ok((u0, u1, u0p, u0pp, u1p, u1pp))
    };
    let q_big = sq(sq(norms.p_linf)) + sq(norms.dp_linf) + sq(q_inf);
    let p_inf2 = sq(norms.p_linf);

    use EstimateId::*;
    let rhs = match id {
        Est1 => e1 * homogeneous_x0(&mut inv)?,
        Est2 => e1 * homogeneous_x1(&mut inv)?,
        Est3 => e1 * (r * homogeneous_x1(&mut inv)? + s * homogeneous_x0(&mut inv)?),
        Est4 => {
            inv.put("q_Linf", q_inf);
            let x1 = homogeneous_x1(&mut inv)?;
            let x0 = homogeneous_x0(&mut inv)?;
            let w2 = inv.put("gu0_W2^2", w(a, 2.0)?);
            let w1 = inv.put("gu1_W1^2", w(b, 1.0)?);
            e1 * (p_inf2 * (r * x1 + s * x0) + sq(q_inf) * x0 + w2 + w1)
        }
        Est5 => {
            let u0 = inv.put("gu0_Wk^2", w(a, k)?);
            let u1 = inv.put("gu1_Wk-1^2", w(b, k - 1.0)?);
            e1 * (u0 + u1)
        }
        Ec1 => {
            let u0 = inv.put("u0_L2^2", l2_sq(grid, &data.u0));
            let u1 = inv.put("u1_L2^2", l2_sq(grid, &data.u1));
            e2 * (u0 + u1)
        }
        Ec2 | Ec3 | Ec4 | EcNh2 | EcNh3 | EcNh4 => {
            inv.put("q_Linf", q_inf);
            inv.put("Q", q_big);
            let (u0, u1, u0p, u0pp, u1p, u1pp) = plain(&mut inv)?;
            let d0 = inv.put("D0", u0pp + p_inf2 * u0p + q_big * u0 + u1);
            let base = match id {
                Ec2 | EcNh2 => d0,
                Ec3 | EcNh3 => r * d0 + s * (u0 + u1),
                _ => {
                    if u1p.is_nan() {
                        return Err(Error::capability(format!("{id} needs samples of u1' and u1''")));
                    }
                    r * d0 + s * (u0 + u1) + u0pp + u1pp + p_inf2 * (u0p + u1p) + q_big * (u0 + u1)
                }
            };
            let extra = match id {
                EcNh2 => forcing_f(&mut inv, true),
                EcNh3 => (r + s) * forcing_f(&mut inv, false),
                EcNh4 => {
                    let c1 = forcing.map(|f| forcing_c1(sol, f)).ok_or_else(|| {
                        Error::capability(format!("{id} needs the forcing term for its C¹ norm"))
                    })?;
                    inv.put("f_C1(L2)", c1);
                    (p_inf2 * (r + s) + sq(q_inf)) * forcing_f(&mut inv, false)
                        + t_end * t_end * c1 * c1
                }
                _ => 0.0,
            };
            e2 * (base + extra)
        }
        EsNh1 => e1 * (homogeneous_x0(&mut inv)? + forcing_f(&mut inv, true)),
        EsNh2 => e1 * (homogeneous_x1(&mut inv)? + forcing_f(&mut inv, true)),
        EsNh3 => {
            let x1 = homogeneous_x1(&mut inv)?;
            let x0 = homogeneous_x0(&mut inv)?;
            e1 * (r * x1 + s * x0 + (r + s) * forcing_f(&mut inv, true))
        }
        EsNh4 => {
            inv.put("q_Linf", q_inf);
            let x1 = homogeneous_x1(&mut inv)?;
            let x0 = homogeneous_x0(&mut inv)?;
            let w2 = inv.put("gu0_W2^2", w(a, 2.0)?);
            let w1 = inv.put("gu1_W1^2", w(b, 1.0)?);
            let c1 = match (sol.is_forced(), forcing) {
                (false, _) => 0.0,
                (true, Some(f)) => inv.put("f_C1(L2)", forcing_c1(sol, f)),
                (true, None) => {
                    return Err(Error::capability(format!(
                        "{id} needs the forcing term for its C¹ norm"
                    )))
                }
            };
            let f = inv.put("f_C(L2)", sol.forcing_sup_l2());
            let g2 = sq(inv.put("g_Linf", norms.g_linf));
            e1 * (p_inf2 * (r * x1 + s * x0)
                + sq(q_inf) * x0
                + w2
                + w1
                + (p_inf2 * (r + s) + sq(q_inf))
                    * g2
                    * (2.0 * t_end * t_end * f * f + t_end * t_end * c1 * c1))
        }
        EsNh5 => {
            let u0 = inv.put("gu0_Wk^2", w(a, k)?);
            let u1 = inv.put("gu1_Wk-1^2", w(b, k - 1.0)?);
            let gf = inv.put("gf_C(Wk-1)", forcing_sobolev(sol, k - 1.0));
            e1 * (u0 + u1 + 2.0 * t_end * t_end * gf * gf)
        }
        EcNh1 => {
            let u0 = inv.put("u0_L2^2", l2_sq(grid, &data.u0));
            let u1 = inv.put("u1_L2^2", l2_sq(grid, &data.u1));
            e2 * (u0 + u1 + forcing_f(&mut inv, false))
        }
    };

    let n_t = opts.t_samples;
    let t_samples: Vec<f64> = (0..n_t)
        .map(|j| t_end * j as f64 / (n_t - 1) as f64)
        .collect();
    let mut lhs = Vec::with_capacity(n_t);
    for &t in &t_samples {
        let value = match id.lhs_channel() {
            LhsKind::Channel(ch) => {
                let snap = sol.evaluate(t, &[ch])?;
                let v = match ch {
                    Channel::U => snap.u,
                    Channel::DuDt => snap.du_dt,
                    Channel::DuDx => snap.du_dx,
                    Channel::D2uDx2 => snap.d2u_dx2,
                }
                .expect("requested channel");
                l2_sq(grid, &v)
            }
            LhsKind::Sobolev => {
                let (v, _) = sol.mode_amplitudes(t)?;
                let mut field = alloc::vec![0.0; grid.len()];
                for (pair, vn) in basis.pairs().iter().zip(&v) {
                    let c = pow(pair.lambda, 0.5 * k) * vn;
                    for (o, phi) in field.iter_mut().zip(&pair.phi) {
                        *o += c * phi;
                    }
                }
                l2_sq(grid, &field)
            }
        };
        lhs.push(value);
    }
    let lhs_max = lhs.iter().copied().fold(0.0, f64::max);
    let ratio_max = if rhs > 0.0 {
        lhs_max / rhs
    } else if lhs_max == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    if !ratio_max.is_finite() {
        return Err(Error::Fit(format!("{id}: ratio is not finite (rhs = {rhs})")));
    }
    Ok(EstimateReport {
        estimate_id: id,
        k: matches!(id, Est5 | EsNh5).then_some(k),
        t_samples,
        lhs,
        rhs,
        ratio_max,
        norm_inventory: inv.entries,
    })
}
