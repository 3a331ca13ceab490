//! Perturbed Dirichlet functionals `F(v, U) = Q(A, v, U) − ⟨f, v⟩` and the
//! discrete `H⁻¹(U)` dual norm.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fem::{
    pair_source, quadratic_energy, solve_dirichlet, CoefficientField, DiscreteField, SolveStats, SolverOptions,
    SourceTerm,
};
use crate::region::Region;
use crate::scalar::Real;

/// `F(v, U) = ½ ∫_U A∇v·∇v − ⟨f, v⟩`.
#[derive(Debug, Clone)]
pub struct PerturbedFunctional<T> {
    coeff: CoefficientField<T>,
    source: SourceTerm<T>,
    region: Region<T>,
}

impl<T: Real> PerturbedFunctional<T> {
    pub fn new(coeff: CoefficientField<T>, source: SourceTerm<T>, region: Region<T>) -> Result<Self> {
        if !coeff.mesh().same_as(region.mesh()) || !source.mesh().same_as(region.mesh()) {
            return Err(Error::MeshMismatch);
        }
        Ok(PerturbedFunctional { coeff, source, region })
    }

    pub fn coefficient(&self) -> &CoefficientField<T> {
        &self.coeff
    }

    pub fn source(&self) -> &SourceTerm<T> {
        &self.source
    }

    pub fn region(&self) -> &Region<T> {
        &self.region
    }

    /// The minimizer over `V_h(U)` and its value `−½⟨f, u⟩`.
    pub fn minimize(&self, opts: &SolverOptions) -> Result<(DiscreteField<T>, T, SolveStats)> {
        let sol = solve_dirichlet(&self.coeff, &self.source, &self.region, opts)?;
        let value = total_energy(self, &sol.field)?;
        Ok((sol.field, value, sol.stats))
    }
}

pub fn total_energy<T: Real>(f: &PerturbedFunctional<T>, v: &DiscreteField<T>) -> Result<T> {
    let q = quadratic_energy(&f.coeff, v, &f.region)?;
    let p = pair_source(&f.source, v, &f.region)?;
    Ok(q - p)
}

#[derive(Debug, Clone)]
pub struct DualNormResult<T> {
    /// `‖f‖_{H⁻¹(U)} = |u_f|_{H¹₀(U)}`.
    pub norm: T,
    /// Riesz representative `u_f`, solving `−Δu_f = f` in `U`.
    pub representative: DiscreteField<T>,
    pub stats: SolveStats,
}

impl<T: Real> DualNormResult<T> {
    pub fn norm_sq(&self) -> T {
        self.norm * self.norm
    }
}

/// Discrete `H⁻¹(U)` norm with respect to the gradient norm on `H¹₀(U)`.
pub fn h_minus_one_norm<T: Real>(f: &SourceTerm<T>, region: &Region<T>, opts: &SolverOptions) -> Result<DualNormResult<T>> {
    let identity = CoefficientField::identity(region.mesh().clone());
    let sol = solve_dirichlet(&identity, f, region, opts)?;
    let norm = sol.field.h1_seminorm_sq().sqrt();
    Ok(DualNormResult { norm, representative: sol.field, stats: sol.stats })
}

/// `(f₁, f₂)_{H⁻¹(U)} = ⟨f₁, u_{f₂}⟩`.
pub fn h_minus_one_inner<T: Real>(
    f1: &SourceTerm<T>,
    f2: &SourceTerm<T>,
    region: &Region<T>,
    opts: &SolverOptions,
) -> Result<T> {
    let rep = h_minus_one_norm(f2, region, opts)?;
    pair_source(f1, &rep.representative, region)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct MinEnergyCheck {
    /// `|E(u_f) + ½‖f‖²|` with `E(v) = ½|v|² − ⟨f, v⟩`.
    pub residual: f64,
    pub norm_sq: f64,
    /// `residual / ‖f‖²`, zero when `f = 0`.
    pub relative: f64,
}

impl MinEnergyCheck {
    /// The contract `residual ≤ 10·tol·‖f‖²`.
    pub fn within(&self, tolerance: f64) -> bool {
        self.residual <= 10.0 * tolerance * self.norm_sq
    }
}

/// Evaluates the minimum-energy identity `min E = −½‖f‖²_{H⁻¹(U)}` at `u_f`.
pub fn check_min_energy_identity<T: Real>(
    f: &SourceTerm<T>,
    region: &Region<T>,
    opts: &SolverOptions,
) -> Result<MinEnergyCheck> {
    let rep = h_minus_one_norm(f, region, opts)?;
    let u = &rep.representative;
    let norm_sq = rep.norm_sq();
    let energy = norm_sq * T::lit(0.5) - pair_source(f, u, region)?;
    let residual = (energy + norm_sq * T::lit(0.5)).abs().as_f64();
    let norm_sq = norm_sq.as_f64();
    let relative = if norm_sq > 0.0 { residual / norm_sq } else { 0.0 };
    Ok(MinEnergyCheck { residual, norm_sq, relative })
}
