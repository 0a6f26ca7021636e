//! The subcommand pipelines.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use serde::Serialize;
use slwave_core::estimates::{evaluate_estimate, EstimateId, EstimateOptions, EstimateReport};
use slwave_core::oracle::{fd_eigen, fd_wave, WaveProblem, CFL};
use slwave_core::veryweak::{
    build_net, consistency_experiment, fit_moderateness, uniqueness_experiment, ConsistencyTable,
    DecayFit, Ladder, ModerationReport, NetNorm,
};
use slwave_core::{
    build_basis, solve_forced, solve_homogeneous, Channel, Error, SeriesSolution, SpectralBasis,
};

use crate::config::expand_preset;
use crate::output::{Csv, Writer};
use crate::problem::Setup;

#[derive(Debug)]
pub enum Failure {
    Numerical(Error),
    Io(std::io::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Numerical(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

pub type Outcome = Result<(), Failure>;

fn basis(s: &Setup) -> Result<Arc<SpectralBasis>, Error> {
    let n = &s.config.numerics;
    Ok(Arc::new(build_basis(&s.coefficients(), n.modes, &s.grid, n.tol)?))
}

#[derive(Serialize)]
struct EigenRow {
    n: usize,
    lambda: f64,
    sqrt_lambda_minus_pin: f64,
    gram_deviation: f64,
    small_norm: bool,
}

#[derive(Serialize)]
struct EigenReport {
    modes: usize,
    gram_deviation: f64,
    eigenvalues: Vec<EigenRow>,
}

pub fn eigen(s: &Setup, w: &mut Writer) -> Outcome {
    let b = basis(s)?;
    let grid = b.grid();
    let rows: Vec<EigenRow> = b
        .pairs()
        .iter()
        .map(|p| {
            let dev = b
                .pairs()
                .iter()
                .map(|q| {
                    let target = if p.n == q.n { 1.0 } else { 0.0 };
                    (grid.dot(&p.psi, &q.psi) - target).abs()
                })
                .fold(0.0, f64::max);
            EigenRow {
                n: p.n,
                lambda: p.lambda,
                sqrt_lambda_minus_pin: (p.lambda.sqrt() - PI * p.n as f64).abs(),
                gram_deviation: dev,
                small_norm: p.small_norm,
            }
        })
        .collect();
    let mut csv = Csv::new(&["n", "lambda_n", "sqrt_lambda_minus_pin", "gram_deviation"]);
    for r in &rows {
        csv.row(vec![r.n.into(), r.lambda.into(), r.sqrt_lambda_minus_pin.into(), r.gram_deviation.into()]);
    }
    w.csv("eigen.csv", &csv)?;
    w.json(
        "eigen.json",
        &EigenReport {
            modes: b.len(),
            gram_deviation: b.gram_deviation(),
            eigenvalues: rows,
        },
    )?;
    Ok(())
}

#[derive(Serialize)]
struct SnapshotSummary {
    t: f64,
    u_l2: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    spectral_energy: Option<f64>,
}

#[derive(Serialize)]
struct SolveReport {
    forced: bool,
    lambdas: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    energy_invariant: Option<f64>,
    tail_fraction: f64,
    snapshots: Vec<SnapshotSummary>,
}

fn field_dump(s: &Setup, sol: &SeriesSolution, w: &mut Writer) -> Outcome {
    let grid = &s.grid;
    let mut csv = Csv::new(&["t", "x", "u", "du_dt", "du_dx"]);
    let mut summaries = Vec::new();
    for t in s.config.snapshot_times() {
        let snap = sol.evaluate(t, &[Channel::U, Channel::DuDt, Channel::DuDx])?;
        let (u, ut, ux) = (
            snap.u.expect("requested"),
            snap.du_dt.expect("requested"),
            snap.du_dx.expect("requested"),
        );
        for (i, &x) in grid.nodes().iter().enumerate() {
            csv.row(vec![t.into(), x.into(), u[i].into(), ut[i].into(), ux[i].into()]);
        }
        summaries.push(SnapshotSummary {
            t,
            u_l2: grid.l2_norm(&u),
            spectral_energy: if sol.is_forced() { None } else { Some(sol.spectral_energy(t)?) },
        });
    }
    w.csv("field.csv", &csv)?;
    w.json(
        "solve.json",
        &SolveReport {
            forced: sol.is_forced(),
            lambdas: sol.basis().lambdas(),
            energy_invariant: (!sol.is_forced()).then(|| sol.energy_invariant()),
            tail_fraction: sol.tail_fraction(),
            snapshots: summaries,
        },
    )?;
    Ok(())
}

pub fn solve(s: &Setup, w: &mut Writer) -> Outcome {
    let sol = solve_homogeneous(basis(s)?, &s.data(), s.config.numerics.t_end)?;
    field_dump(s, &sol, w)
}

pub fn solve_forced_cmd(s: &Setup, w: &mut Writer) -> Outcome {
    let sol = solve_forced(basis(s)?, &s.data(), &s.forcing(), s.config.numerics.t_end)?;
    field_dump(s, &sol, w)
}

#[derive(Serialize)]
struct EstimateEntry {
    estimate_id: &'static str,
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    reason: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    k: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rhs: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ratio_max: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    lhs_curve: Vec<[f64; 2]>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    norm_inventory: BTreeMap<String, f64>,
}

impl EstimateEntry {
    fn ok(r: EstimateReport) -> Self {
        EstimateEntry {
            estimate_id: r.estimate_id.as_str(),
            status: "ok",
            reason: None,
            k: r.k,
            rhs: Some(r.rhs),
            ratio_max: Some(r.ratio_max),
            lhs_curve: r.t_samples.iter().zip(&r.lhs).map(|(t, l)| [*t, *l]).collect(),
            norm_inventory: r.norm_inventory.into_iter().collect(),
        }
    }

    fn skipped(id: EstimateId, reason: String) -> Self {
        EstimateEntry {
            estimate_id: id.as_str(),
            status: "skipped",
            reason: Some(reason),
            k: None,
            rhs: None,
            ratio_max: None,
            lhs_curve: Vec::new(),
            norm_inventory: BTreeMap::new(),
        }
    }
}

#[derive(Serialize)]
struct EstimatesReport {
    estimates: Vec<EstimateEntry>,
}

pub fn estimates(s: &Setup, w: &mut Writer) -> Outcome {
    let n = &s.config.numerics;
    let ids: Vec<EstimateId> = if n.estimates.iter().any(|i| i == "all") {
        EstimateId::ALL.to_vec()
    } else {
        n.estimates.iter().map(|i| EstimateId::parse(i)).collect::<Result<_, _>>()?
    };
    let b = basis(s)?;
    let data = s.data();
    let f = s.forcing();
    let hom = solve_homogeneous(b.clone(), &data, n.t_end)?;
    let forced = if ids.iter().any(|i| !i.is_homogeneous()) {
        Some(solve_forced(b, &data, &f, n.t_end)?)
    } else {
        None
    };
    let opts = EstimateOptions {
        t_samples: n.t_samples,
        k: n.estimate_k,
    };
    let mut entries = Vec::new();
    let mut csv = Csv::new(&["estimate_id", "k", "rhs", "ratio_max"]);
    for id in ids {
        let sol = if id.is_homogeneous() { &hom } else { forced.as_ref().expect("solved") };
        match evaluate_estimate(id, sol, &data, Some(&f), &opts) {
            Ok(r) => {
                csv.row(vec![
                    id.as_str().into(),
                    r.k.unwrap_or(f64::NAN).into(),
                    r.rhs.into(),
                    r.ratio_max.into(),
                ]);
                entries.push(EstimateEntry::ok(r));
            }
            Err(Error::Capability(m)) => entries.push(EstimateEntry::skipped(id, m)),
            Err(e) => return Err(e.into()),
        }
    }
    w.csv("estimates.csv", &csv)?;
    w.json("estimates.json", &EstimatesReport { estimates: entries })?;
    Ok(())
}

#[derive(Serialize)]
struct EigenComparison {
    n: usize,
    spectral: f64,
    finite_difference: f64,
    relative: f64,
}

#[derive(Serialize)]
struct FieldComparison {
    t: f64,
    l2_distance: f64,
}

#[derive(Serialize)]
struct OracleReport {
    fd_h: f64,
    fd_k: f64,
    scheme: &'static str,
    forced: bool,
    eigenvalues: Vec<EigenComparison>,
    snapshots: Vec<FieldComparison>,
    sup_l2_distance: f64,
}

pub fn oracle_compare(s: &Setup, w: &mut Writer) -> Outcome {
    let n = &s.config.numerics;
    let cs = s.coefficients();
    let b = basis(s)?;
    let m = (1.0 / n.fd_h).round().max(4.0) as usize;
    let fd = fd_eigen(&cs, b.len(), m)?;
    let eigenvalues = b
        .pairs()
        .iter()
        .zip(&fd)
        .map(|(p, l)| EigenComparison {
            n: p.n,
            spectral: p.lambda,
            finite_difference: *l,
            relative: (p.lambda - l).abs() / p.lambda.abs(),
        })
        .collect();

    let forced = expand_preset(&s.config.problem.f).map_or(true, |e| e != "0");
    let data = s.data();
    let forcing = s.forcing();
    let sol = if forced {
        solve_forced(b, &data, &forcing, n.t_end)?
    } else {
        solve_homogeneous(b, &data, n.t_end)?
    };
    let times = s.config.snapshot_times();
    let u0 = |x: f64| s.u0.value(x);
    let u1 = |x: f64| s.u1.value(x);
    let f = |t: f64, x: f64| forcing.eval(t, x);
    let problem = WaveProblem {
        u0: &u0,
        u1: &u1,
        f: if forced { Some(&f) } else { None },
        t_end: n.t_end,
        snapshots: &times,
    };
    let fd_sol = fd_wave(&cs, &problem, n.fd_h, CFL * n.fd_h)?;
    let grid = &s.grid;
    let mut csv = Csv::new(&["t", "l2_distance"]);
    let mut snapshots = Vec::new();
    for (j, &t) in times.iter().enumerate() {
        let u = sol.u(t)?;
        let r = fd_sol.resample(j, grid.nodes());
        let d: Vec<f64> = u.iter().zip(&r).map(|(a, b)| a - b).collect();
        let l2 = grid.l2_norm(&d);
        csv.row(vec![t.into(), l2.into()]);
        snapshots.push(FieldComparison { t, l2_distance: l2 });
    }
    let sup = snapshots.iter().map(|c| c.l2_distance).fold(0.0, f64::max);
    w.csv("oracle.csv", &csv)?;
    w.json(
        "oracle.json",
        &OracleReport {
            fd_h: fd_sol.h,
            fd_k: fd_sol.k,
            scheme: fd_sol.scheme,
            forced,
            eigenvalues,
            snapshots,
            sup_l2_distance: sup,
        },
    )?;
    Ok(())
}

#[derive(Serialize)]
struct LadderInfo {
    k_min: u32,
    k_max: u32,
}

impl From<&Ladder> for LadderInfo {
    fn from(l: &Ladder) -> Self {
        LadderInfo {
            k_min: l.k_min,
            k_max: l.k_max,
        }
    }
}

#[derive(Serialize)]
#[serde(untagged)]
enum FitEntry {
    Ok(ModerationReport),
    Failed { norm: &'static str, error: String },
}

#[derive(Serialize)]
struct ModerateReport {
    kernel: &'static str,
    ladder: LadderInfo,
    eps: Vec<f64>,
    tail_fractions: Vec<f64>,
    norms: BTreeMap<&'static str, Vec<f64>>,
    fits: Vec<FitEntry>,
}

pub fn vws_moderate(s: &Setup, w: &mut Writer) -> Outcome {
    let ladder = s.ladder()?;
    let kernel = s.kernel()?;
    let net = build_net(&s.problem_spec()?, &ladder, &kernel)?;
    let eps = net.eps();
    let tails: Vec<f64> = net.entries.iter().map(|e| e.tail_fraction).collect();
    let mut norms = BTreeMap::new();
    let mut fits = Vec::new();
    let mut columns = Vec::new();
    for norm in NetNorm::ALL {
        let values = net.norm_values(norm)?;
        fits.push(match fit_moderateness(&net, norm) {
            Ok(r) => FitEntry::Ok(r),
            Err(Error::Fit(m)) => FitEntry::Failed {
                norm: norm.as_str(),
                error: m,
            },
            Err(e) => return Err(e.into()),
        });
        columns.push(values.clone());
        norms.insert(norm.as_str(), values);
    }
    let mut header = vec!["eps", "tail_fraction"];
    header.extend(NetNorm::ALL.iter().map(|n| n.as_str()));
    let mut csv = Csv::new(&header);
    for (i, e) in eps.iter().enumerate() {
        let mut row = vec![(*e).into(), tails[i].into()];
        row.extend(columns.iter().map(|c| c[i].into()));
        csv.row(row);
    }
    w.csv("moderate.csv", &csv)?;
    w.json(
        "moderate.json",
        &ModerateReport {
            kernel: kernel.id(),
            ladder: (&ladder).into(),
            eps,
            tail_fractions: tails,
            norms,
            fits,
        },
    )?;
    Ok(())
}

#[derive(Serialize)]
struct UniqueReport {
    kernel_a: &'static str,
    kernel_b: &'static str,
    order: f64,
    ladder: LadderInfo,
    fit: DecayFit,
    bound_holds: bool,
}

pub fn vws_unique(s: &Setup, w: &mut Writer) -> Outcome {
    let ladder = s.ladder()?;
    let (ka, kb) = (s.kernel()?, s.kernel_b()?);
    let order = s.config.vws.order;
    let fit = uniqueness_experiment(&s.problem_spec()?, &ladder, &ka, &kb, order)?;
    let mut csv = Csv::new(&["eps", "difference"]);
    for (e, d) in fit.eps.iter().zip(&fit.differences) {
        csv.row(vec![(*e).into(), (*d).into()]);
    }
    w.csv("unique.csv", &csv)?;
    w.json(
        "unique.json",
        &UniqueReport {
            kernel_a: ka.id(),
            kernel_b: kb.id(),
            order,
            ladder: (&ladder).into(),
            bound_holds: fit.bound_holds(),
            fit,
        },
    )?;
    Ok(())
}

#[derive(Serialize)]
struct ConsistentReport {
    kernel: &'static str,
    ladder: LadderInfo,
    strictly_decreasing: bool,
    table: ConsistencyTable,
}

pub fn vws_consistent(s: &Setup, w: &mut Writer) -> Outcome {
    let ladder = s.ladder()?;
    let kernel = s.kernel()?;
    let table = consistency_experiment(&s.problem_spec()?, &ladder, &kernel)?;
    let mut csv = Csv::new(&["eps", "distance", "tail_fraction"]);
    for i in 0..table.eps.len() {
        csv.row(vec![table.eps[i].into(), table.distances[i].into(), table.tail_fractions[i].into()]);
    }
    w.csv("consistent.csv", &csv)?;
    w.json(
        "consistent.json",
        &ConsistentReport {
            kernel: kernel.id(),
            ladder: (&ladder).into(),
            strictly_decreasing: table.strictly_decreasing(),
            table,
        },
    )?;
    Ok(())
}
