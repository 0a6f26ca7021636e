use std::f64::consts::PI;

use slwave_core::coefficients::PiecewiseSmoothFn;
use slwave_core::veryweak::{
    build_net, consistency_experiment, fit_moderateness, fit_power_law, uniqueness_experiment,
    Ladder, NetNorm, ProblemSpec,
};
use slwave_core::{CoefficientDescriptor, Error, Grid, Jump, MollifierSpec, SingularDescriptor};

/// Peak of the normalized bump `c·exp(-1/(1-s²))`, by composite Simpson.
fn bump_peak() -> f64 {
    let n = 200_000;
    let h = 2.0 / n as f64;
    let f = |s: f64| if s.abs() < 1.0 { (-1.0 / (1.0 - s * s)).exp() } else { 0.0 };
    let mut acc = f(-1.0) + f(1.0);
    for i in 1..n {
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(-1.0 + i as f64 * h);
    }
    (-1.0f64).exp() / (acc * h / 3.0)
}

fn smooth_fn(f: fn(f64) -> f64, df: fn(f64) -> f64) -> PiecewiseSmoothFn {
    PiecewiseSmoothFn::from_fns(f, df)
}

fn smooth_coefficients() -> CoefficientDescriptor {
    CoefficientDescriptor::new(
        SingularDescriptor::smooth(smooth_fn(|x| 0.5 * (2.0 * PI * x).sin(), |x| PI * (2.0 * PI * x).cos())),
        SingularDescriptor::smooth(smooth_fn(|x| 0.3 * (2.0 * PI * x).cos(), |x| -0.6 * PI * (2.0 * PI * x).sin())),
    )
}

fn delta_coefficients() -> CoefficientDescriptor {
    CoefficientDescriptor::new(
        SingularDescriptor::zero(),
        SingularDescriptor::new(vec![Jump { at: 0.5, height: 1.0 }], PiecewiseSmoothFn::zero()).unwrap(),
    )
}

fn sine_data() -> PiecewiseSmoothFn {
    smooth_fn(|x| (PI * x).sin(), |x| PI * (PI * x).cos())
}

#[test]
fn delta_net_is_moderate() {
    let problem = ProblemSpec::new(delta_coefficients(), sine_data(), PiecewiseSmoothFn::zero()).unwrap();
    let ladder = Ladder::new(2, 7).unwrap();
    let net = build_net(&problem, &ladder, &MollifierSpec::bump()).unwrap();
    let nu = fit_moderateness(&net, NetNorm::NuPrimeSup).unwrap();
    assert!((0.95..=1.05).contains(&nu.n), "{nu:?}");
    assert!(nu.residual <= 0.05);
    assert!((nu.c - bump_peak()).abs() < 1e-3 * bump_peak(), "{} vs {}", nu.c, bump_peak());
    let sol = fit_moderateness(&net, NetNorm::SolutionL2).unwrap();
    assert!(sol.n <= 0.1, "{sol:?}");
    let dx = fit_moderateness(&net, NetNorm::SolutionDxL2).unwrap();
    assert!(dx.n.is_finite() && dx.n <= nu.n + 1.0);

    let l1: Vec<f64> = net.entries.iter().map(|e| e.solution.basis().lambdas()[0]).collect();
    assert!((l1.last().unwrap() - 11.771_859_163_750_688).abs() < 1e-2, "{l1:?}");
    // The approach is not monotone over the whole ladder: the central jump and
    // the zero-extension layer at x = 1 pull in opposite directions.
    let err: Vec<f64> = l1.iter().map(|l| (l - 11.771_859_163_750_688).abs()).collect();
    assert!(err[err.len() - 1] < err[0] && err[err.len() - 1] <= err[err.len() - 2], "{l1:?}");
}

#[test]
fn smooth_net_is_bounded_and_converges() {
    let mut problem = ProblemSpec::new(smooth_coefficients(), sine_data(), PiecewiseSmoothFn::zero()).unwrap();
    problem.modes = 8;
    let net = build_net(&problem, &Ladder::default(), &MollifierSpec::bump()).unwrap();
    let fit = fit_moderateness(&net, NetNorm::NuSup).unwrap();
    assert!(fit.n <= 0.05, "{fit:?}");
    let grid = &problem.grid;
    let nu = smooth_coefficients().exact().nu().clone();
    let gap = |e: &slwave_core::veryweak::NetEntry, delta: f64| {
        grid.nodes()
            .iter()
            .zip(grid.weights())
            .filter(|(x, _)| **x >= delta && **x <= 1.0 - delta)
            .map(|(x, w)| w * (e.coefficients.nu().value(*x) - nu.value(*x)).powi(2))
            .sum::<f64>()
            .sqrt()
    };
    let global: Vec<f64> = net.entries.iter().map(|e| gap(e, 0.0)).collect();
    assert!(global.windows(2).all(|w| w[1] < w[0]), "{global:?}");
    let interior: Vec<f64> = net.entries[1..].iter().map(|e| gap(e, 2.0 * e.eps)).collect();
    assert!(interior.windows(2).all(|w| w[1] < w[0]), "{interior:?}");
}

#[test]
fn empty_ladder_is_rejected() {
    assert!(matches!(Ladder::new(5, 3), Err(Error::Parameter(_))));
    assert!(Ladder::new(0, 3).is_err());
}

#[test]
fn fit_needs_four_points() {
    assert!(matches!(
        fit_power_law("x", &[0.5, 0.25, 0.125], &[1.0, 2.0, 4.0], false),
        Err(Error::Fit(_))
    ));
    let r = fit_power_law("x", &[0.5, 0.25, 0.125, 0.0625], &[2.0, 4.0, 8.0, 16.0], false).unwrap();
    assert!((r.n - 1.0).abs() < 1e-12 && (r.c - 1.0).abs() < 1e-12 && r.residual < 1e-12);
    assert!(fit_power_law("x", &[0.5, 0.25, 0.125, 0.0625], &[1.0, f64::NAN, 1.0, 1.0], false).is_err());
}

#[test]
fn identical_pipelines_give_zero_difference() {
    let mut problem = ProblemSpec::new(smooth_coefficients(), sine_data(), PiecewiseSmoothFn::zero()).unwrap();
    problem.grid = Grid::uniform(1024).unwrap();
    problem.modes = 8;
    let k = MollifierSpec::bump();
    let ladder = Ladder::new(2, 5).unwrap();
    let a = build_net(&problem, &ladder, &k).unwrap();
    let b = build_net(&problem, &ladder, &k).unwrap();
    for (x, y) in a.entries.iter().zip(&b.entries) {
        assert_eq!(x.solution.u(0.7).unwrap(), y.solution.u(0.7).unwrap());
    }
}

#[test]
fn constructed_negligible_inputs_decay() {
    let problem = ProblemSpec::new(smooth_coefficients(), sine_data(), PiecewiseSmoothFn::zero()).unwrap();
    let ladder = Ladder::new(2, 6).unwrap();
    let k = MollifierSpec::bump();
    let fit = uniqueness_experiment(&problem, &ladder, &k, &k, 6.0).unwrap();
    let m_out = fit.m_out.unwrap();
    assert!(m_out >= 5.0, "{fit:?}");
    assert!(fit.n_amp <= 1.0);
    assert!(fit.bound_holds());
}

#[test]
fn delta_with_two_kernels_satisfies_measured_bookkeeping() {
    let mut problem = ProblemSpec::new(delta_coefficients(), sine_data(), PiecewiseSmoothFn::zero()).unwrap();
    problem.regularize_data = false;
    let ladder = Ladder::new(2, 6).unwrap();
    let fit = uniqueness_experiment(&problem, &ladder, &MollifierSpec::bump(), &MollifierSpec::squared_bump(), 6.0)
        .unwrap();
    assert!(fit.m_out.is_some());
    assert!(fit.bound_holds(), "{fit:?}");
}

#[test]
fn consistency_for_zero_coefficients() {
    let mut problem = ProblemSpec::new(
        CoefficientDescriptor::new(SingularDescriptor::zero(), SingularDescriptor::zero()),
        sine_data(),
        PiecewiseSmoothFn::zero(),
    )
    .unwrap();
    problem.regularize_data = false;
    let table = consistency_experiment(&problem, &Ladder::new(2, 5).unwrap(), &MollifierSpec::bump()).unwrap();
    assert!(table.distances.iter().all(|d| *d <= 1e-6), "{table:?}");
}

#[test]
fn consistency_for_smooth_coefficients() {
    let mut problem = ProblemSpec::new(smooth_coefficients(), sine_data(), PiecewiseSmoothFn::zero()).unwrap();
    problem.regularize_data = false;
    let table = consistency_experiment(&problem, &Ladder::new(2, 6).unwrap(), &MollifierSpec::bump()).unwrap();
    assert!(table.strictly_decreasing(), "{table:?}");
    assert!(*table.distances.last().unwrap() <= 1e-3, "{table:?}");
}

#[test]
fn consistency_for_kinked_data() {
    let kink = PiecewiseSmoothFn::new(
        vec![0.5],
        vec![
            std::sync::Arc::new(slwave_core::coefficients::FnProfile::new(|x| x, |_| 1.0)),
            std::sync::Arc::new(slwave_core::coefficients::FnProfile::new(|x| 1.0 - x, |_| -1.0)),
        ],
    )
    .unwrap();
    let mut problem = ProblemSpec::new(smooth_coefficients(), kink, PiecewiseSmoothFn::zero()).unwrap();
    problem.regularize_coefficients = false;
    let table = consistency_experiment(&problem, &Ladder::new(2, 6).unwrap(), &MollifierSpec::bump()).unwrap();
    assert!(table.strictly_decreasing(), "{table:?}");
}
