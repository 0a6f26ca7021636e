//! Numerical objects built from a [`RunConfig`].

use std::sync::Arc;

use slwave_core::coefficients::PiecewiseSmoothFn;
use slwave_core::veryweak::{Ladder, ProblemSpec};
use slwave_core::{
    CoefficientDescriptor, CoefficientSet, ForcingTerm, Grid, InitialData, Jump, MollifierSpec,
    Result, SingularDescriptor,
};

use crate::config::{tx_function, x_function, RunConfig};
use crate::expr::XFunction;

/// Jumps below this are treated as continuity points.
const JUMP_FLOOR: f64 = 1e-13;

/// Splits a piecewise function into declared jumps and a continuous rest.
pub fn singular_descriptor(f: &PiecewiseSmoothFn) -> Result<SingularDescriptor> {
    let jumps: Vec<Jump> = f
        .jumps()
        .into_iter()
        .filter(|j| j.height.abs() > JUMP_FLOOR)
        .collect();
    let steps = jumps.iter().try_fold(PiecewiseSmoothFn::zero(), |acc, j| {
        Ok::<_, slwave_core::Error>(acc.add(&PiecewiseSmoothFn::heaviside(j.at, j.height)?))
    })?;
    SingularDescriptor::new(jumps, f.combine(1.0, &steps, -1.0))
}

/// Everything a subcommand needs, resolved once.
pub struct Setup {
    pub config: RunConfig,
    pub p: XFunction,
    pub nu: XFunction,
    pub u0: XFunction,
    pub u1: XFunction,
    pub grid: Grid,
}

impl Setup {
    pub fn new(config: RunConfig) -> std::result::Result<Self, String> {
        let pr = &config.problem;
        let grid = Grid::uniform(config.numerics.grid).map_err(|e| e.to_string())?;
        Ok(Setup {
            p: x_function(&pr.p)?,
            nu: x_function(&pr.nu)?,
            u0: x_function(&pr.u0)?,
            u1: x_function(&pr.u1)?,
            grid,
            config,
        })
    }

    pub fn descriptor(&self) -> Result<CoefficientDescriptor> {
        Ok(CoefficientDescriptor::new(
            singular_descriptor(&self.p.to_piecewise())?,
            singular_descriptor(&self.nu.to_piecewise())?,
        ))
    }

    /// Unregularized coefficients.
    pub fn coefficients(&self) -> CoefficientSet {
        CoefficientSet::new(self.p.to_piecewise(), self.nu.to_piecewise())
    }

    /// Data samples with first and second derivatives.
    pub fn data(&self) -> InitialData {
        let g = &self.grid;
        InitialData::new(g.sample(|x| self.u0.value(x)), g.sample(|x| self.u1.value(x)))
            .with_u0_derivatives(g.sample(|x| self.u0.first(x)), g.sample(|x| self.u0.second(x)))
            .with_u1_derivatives(g.sample(|x| self.u1.first(x)), g.sample(|x| self.u1.second(x)))
    }

    pub fn forcing(&self) -> ForcingTerm {
        let e = Arc::new(tx_function(&self.config.problem.f).expect("validated"));
        ForcingTerm::new(move |t, x| e.eval(t, x))
    }

    pub fn ladder(&self) -> Result<Ladder> {
        Ladder::new(self.config.vws.k_min, self.config.vws.k_max)
    }

    pub fn kernel(&self) -> Result<MollifierSpec> {
        MollifierSpec::from_id(&self.config.vws.kernel)
    }

    pub fn kernel_b(&self) -> Result<MollifierSpec> {
        MollifierSpec::from_id(&self.config.vws.kernel_b)
    }

    pub fn problem_spec(&self) -> Result<ProblemSpec> {
        let n = &self.config.numerics;
        let mut spec = ProblemSpec::new(self.descriptor()?, self.u0.to_piecewise(), self.u1.to_piecewise())?;
        spec.modes = n.modes;
        spec.grid = self.grid.clone();
        spec.tol = n.tol;
        spec.t_end = n.t_end;
        spec.t_samples = n.t_samples;
        spec.regularize_coefficients = self.config.vws.regularize_coefficients;
        spec.regularize_data = self.config.vws.regularize_data;
        Ok(spec)
    }
}
