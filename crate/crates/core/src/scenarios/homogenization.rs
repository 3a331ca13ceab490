use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{enforce_resolution, oscillation_issue, ExpectedGap, Scenario};
use crate::error::{Error, Result};
use crate::fem::{
    conjugate_gradient, BuiltPreconditioner, CoefficientField, CsrMatrix, Preconditioner, SolverOptions, SourceTerm,
    SymMatrix,
};
use crate::gap::{LazySequence, SequenceSpec, SequenceTerm};
use crate::mesh::{build_mesh, Mesh};
use crate::scalar::Real;

/// Scalar periodic coefficients on the unit cell `[0, 1)^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PeriodicPattern {
    Constant { value: f64 },
    /// `a` where the `axis` coordinate lies in `[0, fraction)`, `b` elsewhere.
    Laminate {
        a: f64,
        b: f64,
        #[serde(default)]
        axis: usize,
        #[serde(default = "half")]
        fraction: f64,
    },
    /// `a` on the squares `[0,½)²` and `[½,1)²`, `b` on the other two.
    Checkerboard { a: f64, b: f64 },
}

fn half() -> f64 {
    0.5
}

impl PeriodicPattern {
    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            PeriodicPattern::Constant { value } => (value, value),
            PeriodicPattern::Laminate { a, b, .. } | PeriodicPattern::Checkerboard { a, b } => (a.min(b), a.max(b)),
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        let (lo, _) = self.bounds();
        if !(lo > 0.0) {
            return Err(Error::InvalidParameter("periodic pattern values must be positive".into()));
        }
        match *self {
            PeriodicPattern::Laminate { axis, fraction, .. } => {
                if axis >= dim {
                    return Err(Error::InvalidParameter(format!("laminate axis {axis} out of range for dimension {dim}")));
                }
                if !(fraction > 0.0 && fraction < 1.0) {
                    return Err(Error::InvalidParameter("laminate fraction must lie in (0, 1)".into()));
                }
            }
            PeriodicPattern::Checkerboard { .. } if dim != 2 => {
                return Err(Error::InvalidParameter("checkerboard needs dimension 2".into()));
            }
            _ => {}
        }
        Ok(())
    }

    /// Value at a point of the plane (reduced modulo the unit cell).
    pub fn value(&self, y: &[f64]) -> f64 {
        let frac = |t: f64| t - t.floor();
        match *self {
            PeriodicPattern::Constant { value } => value,
            PeriodicPattern::Laminate { a, b, axis, fraction } => {
                if frac(y[axis]) < fraction {
                    a
                } else {
                    b
                }
            }
            PeriodicPattern::Checkerboard { a, b } => {
                let q = |t: f64| (frac(t) >= 0.5) as u8;
                if (q(y[0]) + q(y[1])) % 2 == 0 {
                    a
                } else {
                    b
                }
            }
        }
    }
}

/// Effective tensor of a periodic pattern from `d` corrector problems on a
/// `cell_resolution^d` periodic P1 mesh.
pub fn effective_tensor<T: Real>(pattern: &PeriodicPattern, dim: usize, cell_resolution: usize) -> Result<SymMatrix<T>> {
    pattern.validate(dim)?;
    let (lo, hi) = pattern.bounds();
    effective_tensor_fn(dim, cell_resolution, T::lit(lo), T::lit(hi), |y: &[T]| {
        let p: Vec<f64> = y.iter().map(|v| v.as_f64()).collect();
        SymMatrix::scalar(dim, T::lit(pattern.value(&p)))
    })
}

/// Effective tensor of a general periodic field `a(y)` on `[0,1)^d`:
/// `A*_ij = ∫ (e_i + ∇χ_i)·a(e_j + ∇χ_j)` with mean-zero periodic correctors
/// solving `−div(a(e_i + ∇χ_i)) = 0`.
pub fn effective_tensor_fn<T: Real>(
    dim: usize,
    cell_resolution: usize,
    alpha: T,
    beta: T,
    a: impl Fn(&[T]) -> SymMatrix<T>,
) -> Result<SymMatrix<T>> {
    if cell_resolution < 16 {
        return Err(Error::InvalidParameter(format!(
            "cell resolution must be at least 16, got {cell_resolution}"
        )));
    }
    let n = cell_resolution;
    let bounds = vec![(T::zero(), T::one()); dim];
    let mesh = Arc::new(build_mesh(dim, &bounds, &vec![n; dim])?);
    let coeff = CoefficientField::from_fn(mesh.clone(), alpha, beta, a)?;
    let dof = |node: usize| -> usize {
        let [i, j] = mesh.grid_index(node);
        if dim == 1 {
            i % n
        } else {
            (j % n) * n + i % n
        }
    };
    let ndof = n.pow(dim as u32);
    let mut rows = vec![Vec::new(); ndof];
    for e in 0..mesh.num_elements() {
        let nodes = mesh.element_nodes(e);
        for &p in nodes {
            for &q in nodes {
                rows[dof(p)].push(dof(q));
            }
        }
    }
    for r in &mut rows {
        r.sort_unstable();
        r.dedup();
    }
    let mut k = CsrMatrix::with_pattern(rows);
    let mut loads = vec![vec![T::zero(); ndof]; dim];
    for e in 0..mesh.num_elements() {
        let nodes = mesh.element_nodes(e);
        let g = mesh.element_grads(e);
        let m = coeff.matrix(e);
        let vol = mesh.volume(e);
        for (a_idx, &p) in nodes.iter().enumerate() {
            let ga = &g[a_idx * dim..(a_idx + 1) * dim];
            for (b_idx, &q) in nodes.iter().enumerate() {
                let gb = &g[b_idx * dim..(b_idx + 1) * dim];
                k.add_to(dof(p), dof(q), vol * m.bilinear(ga, gb));
            }
            for (i, load) in loads.iter_mut().enumerate() {
                let mut ei = [T::zero(); 2];
                ei[i] = T::one();
                load[dof(p)] -= vol * m.bilinear(&ei[..dim], ga);
            }
        }
    }
    let opts = SolverOptions { tolerance: 1e-12, max_iterations: 100 * ndof, preconditioner: Preconditioner::Diagonal };
    let pre = BuiltPreconditioner::build(&k, Preconditioner::Diagonal);
    let mut correctors = Vec::with_capacity(dim);
    for load in &loads {
        let (chi, _) = conjugate_gradient(&k, &pre, load, &opts, true)
            .map_err(|e| Error::Singular(format!("cell problem: {e}")))?;
        correctors.push(chi);
    }
    // ∫ (e_i + ∇χ_i) · A (e_j + ∇χ_j)
    let mut eff = [[T::zero(); 2]; 2];
    for e in 0..mesh.num_elements() {
        let nodes = mesh.element_nodes(e);
        let g = mesh.element_grads(e);
        let m = coeff.matrix(e);
        let vol = mesh.volume(e);
        let mut grads = [[T::zero(); 2]; 2];
        for (i, chi) in correctors.iter().enumerate() {
            grads[i][i] = T::one();
            for (a_idx, &p) in nodes.iter().enumerate() {
                for c in 0..dim {
                    grads[i][c] += chi[dof(p)] * g[a_idx * dim + c];
                }
            }
        }
        for i in 0..dim {
            for j in 0..dim {
                eff[i][j] += vol * m.bilinear(&grads[i][..dim], &grads[j][..dim]);
            }
        }
    }
    let result = if dim == 1 {
        SymMatrix::scalar(1, eff[0][0])
    } else {
        SymMatrix::new_2d(eff[0][0], (eff[0][1] + eff[1][0]) * T::lit(0.5), eff[1][1])
    };
    let (lo, hi) = result.eigen_bounds();
    let slack = T::lit(1e-8);
    if lo < alpha * (T::one() - slack) || hi > beta * (T::one() + slack) {
        return Err(Error::Singular(format!(
            "effective tensor eigenvalues [{lo}, {hi}] outside [{alpha}, {beta}]"
        )));
    }
    Ok(result)
}

/// `A_k(x) = A(kx)` with a fixed source `f`; the limit pair is
/// `(A*, f)` with `A*` the effective tensor, and the expected gap is zero.
pub fn homogenization_sequence<T: Real>(
    mesh: Arc<Mesh<T>>,
    pattern: PeriodicPattern,
    cell_resolution: usize,
    source: SourceTerm<T>,
    indices: Vec<usize>,
    allow_aliasing: bool,
) -> Result<Scenario<T>> {
    let dim = mesh.dim();
    pattern.validate(dim)?;
    if !source.mesh().same_as(&mesh) {
        return Err(Error::MeshMismatch);
    }
    enforce_resolution(&mesh, &indices, allow_aliasing)?;
    let (lo, hi) = pattern.bounds();
    let (alpha, beta) = (T::lit(lo), T::lit(hi));
    let effective = effective_tensor::<T>(&pattern, dim, cell_resolution)?;
    let limit_coeff = CoefficientField::constant(mesh.clone(), effective, alpha, beta)?;
    let source = Arc::new(source);
    let limit = SequenceTerm::shared(Arc::new(limit_coeff), source.clone())?;
    let m = mesh.clone();
    let h = mesh.h().as_f64();
    let gen = LazySequence::new(mesh.clone(), move |k| {
        let kf = k as f64;
        let coeff = CoefficientField::from_fn(m.clone(), alpha, beta, |x| {
            let y: Vec<f64> = x.iter().map(|v| kf * v.as_f64()).collect();
            SymMatrix::scalar(dim, T::lit(pattern.value(&y)))
        })?;
        SequenceTerm::shared(Arc::new(coeff), source.clone())
    })
    .with_resolution_rule(move |k| oscillation_issue(h, k));
    Ok(Scenario {
        name: "homogenization".into(),
        alpha,
        beta,
        sequence: SequenceSpec::new(indices, Arc::new(gen), limit)?,
        expected: ExpectedGap::Zero,
        resolution_rule: "h <= 1/(16k)".into(),
    })
}
