//! Weighted transforms `c_n = ∫ f g ψ_n` and `f = Σ c_n φ_n`, and the
//! spectral Sobolev scale `‖c‖_{W^k} = (Σ λ_n^k c_n²)^{1/2}`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::eigensolver::SpectralBasis;
use crate::math::{pow, sqrt};
use crate::{Error, Result};

/// Mode coefficients tied to the basis that produced them.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct SpectralCoefficients {
    pub values: Vec<f64>,
    pub basis_id: u64,
}

impl SpectralCoefficients {
    pub fn zeros(basis: &SpectralBasis) -> Self {
        SpectralCoefficients {
            values: vec![0.0; basis.len()],
            basis_id: basis.id(),
        }
    }

    /// Unit vector `e_n` (1-based).
    pub fn unit(basis: &SpectralBasis, n: usize) -> Self {
        let mut c = Self::zeros(basis);
        c.values[n - 1] = 1.0;
        c
    }

    pub fn from_values(basis: &SpectralBasis, values: Vec<f64>) -> Result<Self> {
        if values.len() != basis.len() {
            return Err(Error::usage(format!(
                "{} coefficients for a basis of {} modes",
                values.len(),
                basis.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::param(format!("coefficient {} is not finite", i + 1)));
        }
        Ok(SpectralCoefficients {
            values,
            basis_id: basis.id(),
        })
    }

    pub fn scaled(&self, a: f64) -> Self {
        SpectralCoefficients {
            values: self.values.iter().map(|v| a * v).collect(),
            basis_id: self.basis_id,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn check_basis(basis: &SpectralBasis, c: &SpectralCoefficients) -> Result<()> {
    if c.basis_id != basis.id() || c.values.len() != basis.len() {
        return Err(Error::usage("coefficients belong to a different basis"));
    }
    Ok(())
}

/// `c_n = ∫₀¹ f g ψ_n` by composite Simpson on the basis grid.
pub fn forward(basis: &SpectralBasis, f: &[f64]) -> Result<SpectralCoefficients> {
    let grid = basis.grid();
    grid.check_len(f, "sampled function")?;
    if let Some(i) = f.iter().position(|v| !v.is_finite()) {
        return Err(Error::Evaluation {
            what: "sampled function",
            x: grid.nodes()[i],
        });
    }
    let gf: Vec<f64> = f.iter().zip(&basis.weight().g).map(|(a, g)| a * g).collect();
    let values = basis.pairs().iter().map(|pair| grid.dot(&gf, &pair.psi)).collect();
    Ok(SpectralCoefficients {
        values,
        basis_id: basis.id(),
    })
}

/// `Σ c_n φ_n` on the basis grid.
pub fn inverse(basis: &SpectralBasis, c: &SpectralCoefficients) -> Result<Vec<f64>> {
    check_basis(basis, c)?;
    let mut out = vec![0.0; basis.grid().len()];
    for (pair, &cn) in basis.pairs().iter().zip(&c.values) {
        if cn == 0.0 {
            continue;
        }
        for (o, phi) in out.iter_mut().zip(&pair.phi) {
            *o += cn * phi;
        }
    }
    Ok(out)
}

/// `(Σ λ_n^k c_n²)^{1/2}`.
pub fn sobolev_norm(basis: &SpectralBasis, c: &SpectralCoefficients, k: f64) -> Result<f64> {
    check_basis(basis, c)?;
    let lambdas = basis.lambdas();
    if k < 0.0 && lambdas[0] <= 0.0 {
        return Err(Error::Spectral {
            n: 1,
            reason: format!("negative-order norm needs λ_1 > 0, got {}", lambdas[0]),
        });
    }
    let s: f64 = lambdas
        .iter()
        .zip(&c.values)
        .map(|(l, v)| pow(*l, k) * v * v)
        .sum();
    Ok(sqrt(s))
}
