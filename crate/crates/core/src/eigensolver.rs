//! Eigenpairs of `L = -d² + p d + q`, `q = ν'`, with Dirichlet conditions.
//!
//! The substitution `y = exp(½∫p) z` gives `-z'' + (p²/4 - p'/2 + q) z = λz`.
//! With the quasi-derivative `z⁽¹⁾ = z' - νz` and the polar form
//! `z = r sin θ`, `z⁽¹⁾ = √λ r cos θ` one gets, for `w = ν² - p²/4 + p'/2`,
//!
//! ```text
//! θ'     = √λ + ν sin 2θ + λ^{-1/2} w sin²θ
//! (ln r)' = -(ν cos 2θ + ½ λ^{-1/2} w sin 2θ)
//! ```
//!
//! Neither right-hand side involves `ν'`, so a jump in `ν` (a Dirac mass in
//! `q`) only splits the integration. Eigenvalues solve `θ(1, λ) = πn`.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::coefficients::{compute_weight, CoefficientSet, Grid, Segment, WeightSamples};
use crate::math::{abs, cos, exp, sin, sqrt, PI};
use crate::ode::DormandPrince;
use crate::{Error, Result};

/// Eigenvalues below this are outside the Prüfer regime used here.
pub const LAMBDA_MIN: f64 = 1.0;

/// `‖ψ̃_n‖` below this is flagged.
pub const SMALL_NORM: f64 = 0.1;

/// Phase, log-amplitude and `η = θ - √λ x` sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct PruferTrace {
    pub lambda: f64,
    pub theta: Vec<f64>,
    pub log_r: Vec<f64>,
    pub eta: Vec<f64>,
}

impl PruferTrace {
    pub fn theta_end(&self) -> f64 {
        *self.theta.last().expect("non-empty trace")
    }
}

fn rhs(cs: &CoefficientSet, seg: &Segment, sl: f64, x: f64, y: &[f64; 2]) -> [f64; 2] {
    let (nu, w) = cs.prufer_terms(seg, x);
    let (s, c) = (sin(y[0]), cos(y[0]));
    let s2 = 2.0 * s * c;
    let c2 = c * c - s * s;
    [
        sl + nu * s2 + w * s * s / sl,
        -(nu * c2 + 0.5 * w * s2 / sl),
    ]
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda >= LAMBDA_MIN && lambda.is_finite()) {
        return Err(Error::param(format!(
            "spectral parameter must be finite and >= {LAMBDA_MIN}, got {lambda}"
        )));
    }
    Ok(())
}

fn integrator(tol: f64) -> DormandPrince {
    DormandPrince::with_tolerances(0.1 * tol, 0.0)
}

/// `(θ(1, λ), ln r(1, λ))` with free adaptive steps.
pub fn prufer_endpoint(cs: &CoefficientSet, lambda: f64, tol: f64) -> Result<(f64, f64)> {
    cs.require_classical("Prüfer integration")?;
    check_lambda(lambda)?;
    let sl = sqrt(lambda);
    let mut dp = integrator(tol);
    dp.limit_step(0.5 / sl);
    let mut y = [0.0, 0.0];
    for seg in cs.segments() {
        dp.integrate(|x, y| rhs(cs, &seg, sl, x, y), seg.a, seg.b, &mut y)?;
    }
    Ok((y[0], y[1]))
}

/// Integrates the Prüfer system node to node over `grid`, splitting at
/// coefficient breakpoints.
pub fn prufer_integrate(cs: &CoefficientSet, lambda: f64, tol: f64, grid: &Grid) -> Result<PruferTrace> {
    cs.require_classical("Prüfer integration")?;
    check_lambda(lambda)?;
    let sl = sqrt(lambda);
    let segments = cs.segments();
    let nodes = grid.nodes();
    let mut dp = integrator(tol);
    dp.limit_step(0.5 / sl);
    let mut y = [0.0, 0.0];
    let mut theta = Vec::with_capacity(nodes.len());
    let mut log_r = Vec::with_capacity(nodes.len());
    theta.push(0.0);
    log_r.push(0.0);
    let mut si = 0;
    for w in nodes.windows(2) {
        let (mut a, b) = (w[0], w[1]);
        while a < b {
            while si + 1 < segments.len() && segments[si].b <= a {
                si += 1;
            }
            let seg = &segments[si];
            let end = seg.b.min(b);
            dp.integrate(|x, y| rhs(cs, seg, sl, x, y), a, end, &mut y)?;
            a = end;
            if end < b {
                si += 1;
            }
        }
        theta.push(y[0]);
        log_r.push(y[1]);
    }
    let eta = theta
        .iter()
        .zip(nodes)
        .map(|(t, x)| t - sl * x)
        .collect();
    Ok(PruferTrace {
        lambda,
        theta,
        log_r,
        eta,
    })
}

/// `λ_n` from `θ(1, λ) = πn`, relative accuracy `tol`.
pub fn eigenvalue(cs: &CoefficientSet, n: usize, tol: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::param("mode index starts at 1"));
    }
    cs.require_classical("eigenvalue")?;
    let target = PI * n as f64;
    let phase = |lambda: f64| -> Result<f64> { Ok(prufer_endpoint(cs, lambda, tol)?.0 - target) };
    let spectral = |reason: alloc::string::String| Error::Spectral { n, reason };

    let mut lo = PI * PI * (n as f64 - 0.5) * (n as f64 - 0.5);
    lo = lo.max(LAMBDA_MIN);
    let mut f_lo = phase(lo)?;
    while f_lo > 0.0 {
        if lo <= LAMBDA_MIN {
            return Err(spectral(format!(
                "θ(1, {LAMBDA_MIN}) exceeds {n}π: eigenvalue lies below the Prüfer regime"
            )));
        }
        lo = (0.5 * lo).max(LAMBDA_MIN);
        f_lo = phase(lo)?;
    }
    let hi_cap = 4.0 * target * target + 1e4;
    let mut hi = PI * PI * (n as f64 + 0.5) * (n as f64 + 0.5);
    let mut f_hi = phase(hi)?;
    while f_hi < 0.0 {
        if hi >= hi_cap {
            return Err(spectral(format!("no sign change of θ(1, λ) - {n}π below λ = {hi_cap}")));
        }
        lo = hi;
        f_lo = f_hi;
        hi = (2.0 * hi).min(hi_cap);
        f_hi = phase(hi)?;
    }
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    brent(phase, lo, hi, f_lo, f_hi, 0.5 * tol).map_err(|e| match e {
        Error::Fit(reason) => spectral(reason),
        other => other,
    })
}

/// Brent's method; stops when the bracket is below `rtol·|x|`.
fn brent<F: Fn(f64) -> Result<f64>>(
    f: F,
    mut a: f64,
    mut b: f64,
    mut fa: f64,
    mut fb: f64,
    rtol: f64,
) -> Result<f64> {
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..200 {
        if (fb > 0.0) == (fc > 0.0) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if abs(fc) < abs(fb) {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * abs(b) + 0.5 * rtol * abs(b);
        let xm = 0.5 * (c - b);
        if abs(xm) <= tol1 || fb == 0.0 {
            return Ok(b);
        }
        if abs(e) >= tol1 && abs(fa) > abs(fb) {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = abs(p);
            if 2.0 * p < (3.0 * xm * q - abs(tol1 * q)).min(abs(e * q)) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if abs(d) > tol1 {
            d
        } else if xm > 0.0 {
            tol1
        } else {
            -tol1
        };
        fb = f(b)?;
    }
    Err(Error::Fit("root refinement did not converge".into()))
}

/// One eigenpair sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct EigenPair {
    pub n: usize,
    pub lambda: f64,
    pub trace: PruferTrace,
    /// `r sin θ`
    pub psi_tilde: Vec<f64>,
    /// `ψ̃ / ‖ψ̃‖`
    pub psi: Vec<f64>,
    /// `√λ r cos θ`, so that `ψ̃' = psi_quasi + ν ψ̃`.
    pub psi_quasi: Vec<f64>,
    /// `ψ / g`
    pub phi: Vec<f64>,
    /// `g⁻¹ (psi_quasi/‖ψ̃‖ + (p/2 + ν) ψ)`
    pub phi_prime: Vec<f64>,
    pub norm_tilde: f64,
    /// `‖ψ̃‖ < 0.1`
    pub small_norm: bool,
}

fn assemble(
    cs: &CoefficientSet,
    n: usize,
    lambda: f64,
    grid: &Grid,
    weight: &WeightSamples,
    tol: f64,
) -> Result<EigenPair> {
    let trace = prufer_integrate(cs, lambda, tol, grid)?;
    let sl = sqrt(lambda);
    let r: Vec<f64> = trace.log_r.iter().map(|&l| exp(l)).collect();
    let psi_tilde: Vec<f64> = r.iter().zip(&trace.theta).map(|(r, t)| r * sin(*t)).collect();
    let psi_quasi: Vec<f64> = r
        .iter()
        .zip(&trace.theta)
        .map(|(r, t)| sl * r * cos(*t))
        .collect();
    let norm_tilde = grid.l2_norm(&psi_tilde);
    if !(norm_tilde > 0.0 && norm_tilde.is_finite()) {
        return Err(Error::Spectral {
            n,
            reason: format!("eigenfunction norm is {norm_tilde}"),
        });
    }
    let psi: Vec<f64> = psi_tilde.iter().map(|v| v / norm_tilde).collect();
    let phi: Vec<f64> = psi.iter().zip(&weight.g).map(|(v, g)| v / g).collect();
    let phi_prime = grid
        .nodes()
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let half_p = 0.5 * cs.p().value(x);
            let nu = cs.nu().value(x);
            (psi_quasi[i] / norm_tilde + (half_p + nu) * psi[i]) / weight.g[i]
        })
        .collect();
    Ok(EigenPair {
        n,
        lambda,
        trace,
        psi_tilde,
        psi,
        psi_quasi,
        phi,
        phi_prime,
        norm_tilde,
        small_norm: norm_tilde < SMALL_NORM,
    })
}

pub fn eigenpair(cs: &CoefficientSet, n: usize, grid: &Grid, tol: f64) -> Result<EigenPair> {
    let lambda = eigenvalue(cs, n, tol)?;
    let weight = compute_weight(cs, grid)?;
    assemble(cs, n, lambda, grid, &weight, tol)
}

/// Eigenpairs `n = 1..=N` on a common grid with their diagnostics.
#[derive(Clone)]
pub struct SpectralBasis {
    coefficients: CoefficientSet,
    grid: Grid,
    weight: WeightSamples,
    pairs: Vec<EigenPair>,
    gram_deviation: f64,
    tol: f64,
    id: u64,
    p_samples: Vec<f64>,
    nu_samples: Vec<f64>,
    q_samples: Option<Vec<f64>>,
}

impl core::fmt::Debug for SpectralBasis {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("SpectralBasis")
            .field("N", &self.pairs.len())
            .field("m", &self.grid.intervals())
            .field("gram_deviation", &self.gram_deviation)
            .field("id", &self.id)
            .finish()
    }
}

/// Minimum grid intervals per mode for normalization quadrature.
pub const INTERVALS_PER_MODE: usize = 64;

pub fn build_basis(cs: &CoefficientSet, modes: usize, grid: &Grid, tol: f64) -> Result<SpectralBasis> {
    if modes == 0 {
        return Err(Error::param("truncation order must be at least 1"));
    }
    if grid.intervals() < INTERVALS_PER_MODE * modes {
        return Err(Error::param(format!(
            "{modes} modes need at least {} grid intervals, got {}",
            INTERVALS_PER_MODE * modes,
            grid.intervals()
        )));
    }
    cs.require_classical("spectral basis")?;
    let weight = compute_weight(cs, grid)?;
    let mut pairs = Vec::with_capacity(modes);
    for n in 1..=modes {
        let pair = eigenvalue(cs, n, tol)
            .and_then(|lambda| assemble(cs, n, lambda, grid, &weight, tol))
            .map_err(|e| Error::Mode {
                n,
                source: alloc::boxed::Box::new(e),
            })?;
        if let Some(prev) = pairs.last() {
            let prev: &EigenPair = prev;
            if pair.lambda <= prev.lambda {
                return Err(Error::Spectral {
                    n,
                    reason: format!("λ_{n} = {} does not exceed λ_{} = {}", pair.lambda, n - 1, prev.lambda),
                });
            }
        }
        pairs.push(pair);
    }
    let mut gram_deviation = 0.0f64;
    for i in 0..modes {
        for j in i..modes {
            let gij = grid.dot(&pairs[i].psi, &pairs[j].psi);
            let target = if i == j { 1.0 } else { 0.0 };
            gram_deviation = gram_deviation.max(abs(gij - target));
        }
    }
    let p_samples = grid.sample(|x| cs.p().value(x));
    let nu_samples = grid.sample(|x| cs.nu().value(x));
    let q_samples = cs.q().map(|q| grid.sample(|x| q.value(x)));
    let id = fingerprint(grid, &pairs, &p_samples, &nu_samples);
    Ok(SpectralBasis {
        coefficients: cs.clone(),
        grid: grid.clone(),
        weight,
        pairs,
        gram_deviation,
        tol,
        id,
        p_samples,
        nu_samples,
        q_samples,
    })
}

fn fingerprint(grid: &Grid, pairs: &[EigenPair], p: &[f64], nu: &[f64]) -> u64 {
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut feed = |bits: u64| {
        for b in bits.to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(PRIME);
        }
    };
    feed(grid.intervals() as u64);
    feed(pairs.len() as u64);
    for pair in pairs {
        feed(pair.lambda.to_bits());
    }
    let stride = (p.len() / 64).max(1);
    for i in (0..p.len()).step_by(stride) {
        feed(p[i].to_bits());
        feed(nu[i].to_bits());
    }
    h
}

impl SpectralBasis {
    pub fn coefficients(&self) -> &CoefficientSet {
        &self.coefficients
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn weight(&self) -> &WeightSamples {
        &self.weight
    }

    pub fn pairs(&self) -> &[EigenPair] {
        &self.pairs
    }

    pub fn pair(&self, n: usize) -> &EigenPair {
        &self.pairs[n - 1]
    }

    /// Truncation order `N`.
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn lambdas(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.lambda).collect()
    }

    /// `max |∫ψ_mψ_n - δ_mn|`.
    pub fn gram_deviation(&self) -> f64 {
        self.gram_deviation
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn p_samples(&self) -> &[f64] {
        &self.p_samples
    }

    pub fn nu_samples(&self) -> &[f64] {
        &self.nu_samples
    }

    pub fn q_samples(&self) -> Option<&[f64]> {
        self.q_samples.as_deref()
    }

    pub fn into_shared(self) -> Arc<Self> {
        Arc::new(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::PiecewiseSmoothFn;

    const S_DELTA: f64 = 3.43101430538415094643;
    const LAMBDA1_DELTA: f64 = 11.7718591637506878101;

    fn delta() -> CoefficientSet {
        CoefficientSet::new(
            PiecewiseSmoothFn::zero(),
            PiecewiseSmoothFn::heaviside(0.5, 1.0).unwrap(),
        )
    }

    #[test]
    fn free_phase_is_linear() {
        let grid = Grid::uniform(64).unwrap();
        let cs = CoefficientSet::free();
        let t = prufer_integrate(&cs, PI * PI, 1e-10, &grid).unwrap();
        assert_eq!(t.theta[0], 0.0);
        assert_eq!(t.log_r[0], 0.0);
        assert!((t.theta_end() - PI).abs() < 1e-12);
        assert!(t.log_r.iter().all(|l| l.abs() < 1e-12));
        let t = prufer_integrate(&cs, 9.0 * PI * PI, 1e-10, &grid).unwrap();
        assert!((t.theta_end() - 3.0 * PI).abs() < 1e-12);
        assert!(t.eta.iter().all(|e| e.abs() < 1e-12));
    }

    #[test]
    fn endpoint_and_trace_agree() {
        let grid = Grid::uniform(512).unwrap();
        let cs = delta();
        let (th, lr) = prufer_endpoint(&cs, 100.0, 1e-11).unwrap();
        let t = prufer_integrate(&cs, 100.0, 1e-11, &grid).unwrap();
        assert!((th - t.theta_end()).abs() < 1e-9);
        assert!((lr - t.log_r.last().unwrap()).abs() < 1e-9);
    }

    #[test]
    fn lambda_below_regime_is_rejected() {
        assert!(prufer_endpoint(&CoefficientSet::free(), 0.5, 1e-10).is_err());
        assert!(eigenvalue(&CoefficientSet::free(), 0, 1e-10).is_err());
    }

    #[test]
    fn free_and_delta_eigenvalues() {
        let free = CoefficientSet::free();
        let l5 = eigenvalue(&free, 5, 1e-10).unwrap();
        assert!((l5 / (25.0 * PI * PI) - 1.0).abs() < 1e-8);
        let cs = delta();
        let l2 = eigenvalue(&cs, 2, 1e-10).unwrap();
        assert!((l2 / (4.0 * PI * PI) - 1.0).abs() < 1e-8);
        let l1 = eigenvalue(&cs, 1, 1e-10).unwrap();
        assert!((l1 / LAMBDA1_DELTA - 1.0).abs() < 1e-8, "{l1}");
        assert!((sqrt(l1) - S_DELTA).abs() < 1e-8);
    }

    #[test]
    fn constant_drift_shifts_spectrum() {
        let grid = Grid::uniform(1024).unwrap();
        let cs = CoefficientSet::new(PiecewiseSmoothFn::constant(2.0), PiecewiseSmoothFn::zero());
        let pair = eigenpair(&cs, 1, &grid, 1e-10).unwrap();
        assert!((pair.lambda - (PI * PI + 1.0)).abs() < 1e-7);
        for (i, &x) in grid.nodes().iter().enumerate() {
            let psi = core::f64::consts::SQRT_2 * sin(PI * x);
            assert!((pair.psi[i] - psi).abs() < 1e-8);
            assert!((pair.phi[i] - exp(x) * psi).abs() < 1e-7);
        }
    }

    #[test]
    fn eigenvalue_below_regime_is_a_spectral_error() {
        // q = -30 pushes λ_1 = π² - 30 below 1.
        let cs = CoefficientSet::new(
            PiecewiseSmoothFn::zero(),
            PiecewiseSmoothFn::from_fns(|x| -30.0 * x, |_| -30.0),
        );
        match eigenvalue(&cs, 1, 1e-10) {
            Err(Error::Spectral { n: 1, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn singular_class_is_refused() {
        let cs = CoefficientSet::new(
            PiecewiseSmoothFn::heaviside(0.5, 1.0).unwrap(),
            PiecewiseSmoothFn::zero(),
        );
        assert!(matches!(eigenvalue(&cs, 1, 1e-10), Err(Error::Capability(_))));
    }

    #[test]
    fn basis_requires_resolution() {
        let grid = Grid::uniform(256).unwrap();
        assert!(build_basis(&CoefficientSet::free(), 8, &grid, 1e-10).is_err());
        assert!(build_basis(&CoefficientSet::free(), 4, &grid, 1e-10).is_ok());
    }
}
