use std::f64::consts::PI;
use std::time::Instant;

use slwave_core::coefficients::PiecewiseSmoothFn;
use slwave_core::{
    build_basis, eigenpair, eigenvalue, merged_breakpoints, prufer_integrate, CoefficientSet,
    Grid,
};

/// Root of `tan(s/2) = -2s` in `(π, 3π/2)` by plain bisection on
/// `sin(s/2) + 2s cos(s/2)`.
fn delta_well_root() -> f64 {
    let h = |s: f64| (s / 2.0).sin() + 2.0 * s * (s / 2.0).cos();
    let (mut a, mut b) = (PI + 1e-9, 1.5 * PI - 1e-9);
    assert!(h(a) * h(b) < 0.0);
    for _ in 0..200 {
        let c = 0.5 * (a + b);
        if h(a) * h(c) <= 0.0 {
            b = c;
        } else {
            a = c;
        }
    }
    0.5 * (a + b)
}

fn delta_set() -> CoefficientSet {
    CoefficientSet::new(
        PiecewiseSmoothFn::zero(),
        PiecewiseSmoothFn::heaviside(0.5, 1.0).unwrap(),
    )
}

fn smooth_set() -> CoefficientSet {
    CoefficientSet::new(
        PiecewiseSmoothFn::from_fns(|x| 0.5 * (2.0 * PI * x).sin(), |x| PI * (2.0 * PI * x).cos()),
        PiecewiseSmoothFn::from_fns(
            |x| 0.3 * (2.0 * PI * x).cos(),
            |x| -0.6 * PI * (2.0 * PI * x).sin(),
        ),
    )
}

/// Classical RK4 for the Prüfer phase with `p = 0`; `ν` constant on each
/// half of `[0, 1]`.
fn rk4_theta_end(lambda: f64, nu_left: f64, nu_right: f64, h: f64) -> f64 {
    let k = lambda.sqrt();
    let rhs = |nu: f64, th: f64| k + nu * (2.0 * th).sin() + nu * nu * th.sin().powi(2) / k;
    let mut th = 0.0;
    for nu in [nu_left, nu_right] {
        let steps = (0.5 / h).round() as usize;
        let dx = 0.5 / steps as f64;
        for _ in 0..steps {
            let a = rhs(nu, th);
            let b = rhs(nu, th + 0.5 * dx * a);
            let c = rhs(nu, th + 0.5 * dx * b);
            let d = rhs(nu, th + dx * c);
            th += dx / 6.0 * (a + 2.0 * b + 2.0 * c + d);
        }
    }
    th
}

#[test]
fn free_spectrum_is_exact() {
    let cs = CoefficientSet::free();
    let start = Instant::now();
    for n in 1..=32 {
        let l = eigenvalue(&cs, n, 1e-10).unwrap();
        let exact = (PI * n as f64).powi(2);
        assert!((l - exact).abs() / exact <= 1e-8, "n={n} λ={l}");
    }
    assert!(start.elapsed().as_secs_f64() < 2.0);
}

#[test]
fn delta_well_eigenvalues() {
    let cs = delta_set();
    let s = delta_well_root();
    let l1 = eigenvalue(&cs, 1, 1e-10).unwrap();
    assert!((l1 - s * s).abs() / (s * s) <= 1e-6, "λ1={l1} oracle={}", s * s);
    let l2 = eigenvalue(&cs, 2, 1e-10).unwrap();
    assert!((l2 - 4.0 * PI * PI).abs() / (4.0 * PI * PI) <= 1e-8);
}

#[test]
fn delta_well_eigenfunction_samples() {
    let cs = delta_set();
    let s = delta_well_root();
    let grid = Grid::uniform(4096).unwrap();
    let pair = eigenpair(&cs, 1, &grid, 1e-10).unwrap();
    let shape = |x: f64| if x <= 0.5 { (s * x).sin() } else { (s * (1.0 - x)).sin() };
    let samples = grid.sample(shape);
    let norm = grid.l2_norm(&samples);
    for (x, i) in [(0.25, 1024), (0.5, 2048), (0.75, 3072)] {
        let want = shape(x) / norm;
        assert!((pair.psi[i] - want).abs() < 1e-6, "x={x}");
    }
}

#[test]
fn prufer_matches_fixed_step_rk4() {
    let cs = delta_set();
    let grid = Grid::uniform(1024).unwrap();
    let tr = prufer_integrate(&cs, 100.0, 1e-12, &grid).unwrap();
    let oracle = rk4_theta_end(100.0, 0.0, 1.0, 1e-6);
    assert!((tr.theta_end() - oracle).abs() < 1e-7, "{} vs {oracle}", tr.theta_end());
}

#[test]
fn free_phase_has_no_perturbation() {
    let grid = Grid::uniform(256).unwrap();
    let tr = prufer_integrate(&CoefficientSet::free(), 9.0 * PI * PI, 1e-12, &grid).unwrap();
    assert!((tr.theta_end() - 3.0 * PI).abs() < 1e-10);
    assert!(tr.eta.iter().all(|e| e.abs() < 1e-10));
    assert!(tr.log_r.iter().all(|r| r.abs() < 1e-10));
}

#[test]
fn gram_deviation_free_and_delta() {
    let grid = Grid::uniform(4096).unwrap();
    for cs in [CoefficientSet::free(), delta_set()] {
        let b = build_basis(&cs, 16, &grid, 1e-10).unwrap();
        assert!(b.gram_deviation() <= 1e-6, "{}", b.gram_deviation());
    }
    let b = build_basis(&CoefficientSet::free(), 8, &grid, 1e-10).unwrap();
    assert!(b.gram_deviation() <= 1e-10);
}

#[test]
fn delta_spectrum_interlaces() {
    let grid = Grid::uniform(1024).unwrap();
    let b = build_basis(&delta_set(), 8, &grid, 1e-10).unwrap();
    for (i, l) in b.lambdas().iter().enumerate() {
        let n = (i + 1) as f64;
        if (i + 1) % 2 == 0 {
            assert!((l - (PI * n).powi(2)).abs() / l < 1e-8);
        } else {
            assert!(*l > (PI * n).powi(2) && *l < (PI * (n + 1.0)).powi(2));
        }
    }
}

#[test]
fn merged_breakpoints_dedup() {
    let cs = CoefficientSet::new(
        PiecewiseSmoothFn::heaviside(0.3, 1.0).unwrap(),
        PiecewiseSmoothFn::heaviside(0.3 + 1e-16, 1.0).unwrap(),
    );
    assert_eq!(merged_breakpoints(&cs), vec![0.3]);
}

#[test]
fn asymptotic_trend_smooth_case() {
    let cs = smooth_set();
    let grid = Grid::uniform(64 * 64).unwrap();
    let mut gaps = Vec::new();
    let mut sups = Vec::new();
    for n in [16usize, 32, 64] {
        let pair = eigenpair(&cs, n, &grid, 1e-10).unwrap();
        gaps.push((pair.lambda.sqrt() - PI * n as f64).abs());
        let sup = grid
            .nodes()
            .iter()
            .zip(&pair.psi_tilde)
            .map(|(x, v)| (v - (PI * n as f64 * x).sin()).abs())
            .fold(0.0, f64::max);
        sups.push(sup);
    }
    assert!(gaps[0] >= gaps[1] && gaps[1] >= gaps[2], "{gaps:?}");
    assert!(gaps.iter().all(|g| *g < 0.1), "{gaps:?}");
    assert!(sups[0] >= sups[1] && sups[1] >= sups[2], "{sups:?}");
}

#[test]
fn smooth_case_eigenvalues_match_rk4_phase() {
    // Phase at the returned eigenvalue, recomputed with an independent
    // fixed-step RK4 of the full Prüfer system.
    let cs = smooth_set();
    let p = |x: f64| 0.5 * (2.0 * PI * x).sin();
    let dp = |x: f64| PI * (2.0 * PI * x).cos();
    let nu = |x: f64| 0.3 * (2.0 * PI * x).cos();
    for n in [1usize, 8, 24] {
        let l = eigenvalue(&cs, n, 1e-10).unwrap();
        let k = l.sqrt();
        let rhs = |x: f64, th: f64| {
            let w = nu(x).powi(2) - p(x).powi(2) / 4.0 + dp(x) / 2.0;
            k + nu(x) * (2.0 * th).sin() + w * th.sin().powi(2) / k
        };
        let steps = 200_000;
        let h = 1.0 / steps as f64;
        let mut th = 0.0;
        for i in 0..steps {
            let x = i as f64 * h;
            let a = rhs(x, th);
            let b = rhs(x + 0.5 * h, th + 0.5 * h * a);
            let c = rhs(x + 0.5 * h, th + 0.5 * h * b);
            let d = rhs(x + h, th + h * c);
            th += h / 6.0 * (a + 2.0 * b + 2.0 * c + d);
        }
        assert!((th - PI * n as f64).abs() < 1e-7, "n={n} θ(1)={th}");
    }
}

#[test]
fn eigenfunction_invariants() {
    let cs = smooth_set();
    let grid = Grid::uniform(2048).unwrap();
    let b = build_basis(&cs, 8, &grid, 1e-10).unwrap();
    let g = &b.weight().g;
    let norms = cs.norms(&grid);
    for pair in b.pairs() {
        assert!((grid.l2_norm(&pair.psi) - 1.0).abs() < 1e-10);
        assert!(pair.psi[0].abs() < 1e-12);
        assert!(pair.psi[grid.len() - 1].abs() < 1e-7);
        for i in 0..grid.len() {
            assert!((g[i] * pair.phi[i] - pair.psi[i]).abs() < 1e-13);
        }
        let bound_tilde = (norms.nu_l1
            + (norms.nu_l2.powi(2) + norms.p_l2.powi(2) + norms.dp_l1) / pair.lambda.sqrt())
        .exp();
        assert!(pair.norm_tilde <= bound_tilde);
        assert!(grid.l2_norm(&pair.phi).powi(2) <= norms.p_l1.exp());
    }
}

#[test]
fn quasi_derivative_residual() {
    // z1 = √λ r cos θ satisfies z1' = -ν z1 - (w + λ) z with z = r sin θ.
    let cs = smooth_set();
    let grid = Grid::uniform(8192).unwrap();
    let tol = 1e-10;
    let pair = eigenpair(&cs, 3, &grid, tol).unwrap();
    let h = grid.h();
    let lam = pair.lambda;
    let z1 = &pair.psi_quasi;
    let z = &pair.psi_tilde;
    let mut worst = 0.0f64;
    for i in 2..grid.len() - 2 {
        let x = grid.nodes()[i];
        let nu = 0.3 * (2.0 * PI * x).cos();
        let p = 0.5 * (2.0 * PI * x).sin();
        let dp = PI * (2.0 * PI * x).cos();
        let w = nu * nu - p * p / 4.0 + dp / 2.0;
        let d = (8.0 * (z1[i + 1] - z1[i - 1]) - (z1[i + 2] - z1[i - 2])) / (12.0 * h);
        let res = d + nu * z1[i] + (w + lam) * z[i];
        worst = worst.max(res.abs() / lam);
    }
    assert!(worst <= 100.0 * tol, "{worst}");
}

#[test]
fn constant_drift_spectrum_shift() {
    let cs = CoefficientSet::new(PiecewiseSmoothFn::constant(2.0), PiecewiseSmoothFn::zero());
    let grid = Grid::uniform(1024).unwrap();
    let pair = eigenpair(&cs, 1, &grid, 1e-10).unwrap();
    assert!((pair.lambda - (PI * PI + 1.0)).abs() < 1e-7);
    for (i, x) in grid.nodes().iter().enumerate() {
        let want = 2f64.sqrt() * (PI * x).sin();
        assert!((pair.psi[i] - want).abs() < 1e-8);
        assert!((pair.phi[i] - x.exp() * want).abs() < 1e-7);
    }
}
