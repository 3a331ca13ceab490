use log::{debug, warn};
use serde::{Deserialize, Serialize};

use super::coefficient::CoefficientField;
use super::field::DiscreteField;
use super::source::SourceTerm;
use super::sparse::CsrMatrix;
use crate::error::{Error, Result};
use crate::region::Region;
use crate::scalar::{dot, norm2, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Preconditioner {
    None,
    #[default]
    Diagonal,
    /// Zero fill-in incomplete Cholesky. Exact for the tridiagonal 1D systems.
    IncompleteCholesky,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    /// Target for `‖r‖ / ‖b‖`.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub preconditioner: Preconditioner,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tolerance: 1e-10,
            max_iterations: 200_000,
            preconditioner: Preconditioner::Diagonal,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0 && self.tolerance < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "solver tolerance must lie in (0, 1), got {}",
                self.tolerance
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter("max_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolveStats {
    pub iterations: usize,
    pub relative_residual: f64,
    pub dofs: usize,
}

#[derive(Debug, Clone)]
pub struct Solution<T> {
    pub field: DiscreteField<T>,
    pub stats: SolveStats,
}

enum Factor<T> {
    Identity,
    Jacobi(Vec<T>),
    /// Lower factor stored by rows; the diagonal is the last entry of each row.
    Cholesky(CsrMatrix<T>),
}

/// A preconditioner built for a specific matrix.
pub struct BuiltPreconditioner<T> {
    factor: Factor<T>,
}

impl<T: Real> BuiltPreconditioner<T> {
    pub fn build(a: &CsrMatrix<T>, kind: Preconditioner) -> Self {
        let factor = match kind {
            Preconditioner::None => Factor::Identity,
            Preconditioner::Diagonal => Self::jacobi(a),
            Preconditioner::IncompleteCholesky => match incomplete_cholesky(a) {
                Some(l) => Factor::Cholesky(l),
                None => {
                    warn!("incomplete Cholesky broke down, falling back to diagonal scaling");
                    Self::jacobi(a)
                }
            },
        };
        BuiltPreconditioner { factor }
    }

    fn jacobi(a: &CsrMatrix<T>) -> Factor<T> {
        Factor::Jacobi(
            a.diagonal()
                .into_iter()
                .map(|d| if d > T::zero() { T::one() / d } else { T::one() })
                .collect(),
        )
    }

    pub fn apply(&self, r: &[T], z: &mut [T]) {
        match &self.factor {
            Factor::Identity => z.copy_from_slice(r),
            Factor::Jacobi(inv) => {
                for i in 0..r.len() {
                    z[i] = r[i] * inv[i];
                }
            }
            Factor::Cholesky(l) => {
                let n = r.len();
                for i in 0..n {
                    let (cols, vals) = l.row(i);
                    let last = cols.len() - 1;
                    let mut s = r[i];
                    for k in 0..last {
                        s -= vals[k] * z[cols[k]];
                    }
                    z[i] = s / vals[last];
                }
                for i in (0..n).rev() {
                    let (cols, vals) = l.row(i);
                    let last = cols.len() - 1;
                    z[i] /= vals[last];
                    let zi = z[i];
                    for k in 0..last {
                        z[cols[k]] -= vals[k] * zi;
                    }
                }
            }
        }
    }
}

fn incomplete_cholesky<T: Real>(a: &CsrMatrix<T>) -> Option<CsrMatrix<T>> {
    let n = a.dim();
    let rows: Vec<Vec<usize>> = (0..n)
        .map(|i| a.row(i).0.iter().copied().filter(|&j| j <= i).collect())
        .collect();
    let mut l = CsrMatrix::with_pattern(rows);
    for i in 0..n {
        let (cols_i, vals_a) = a.row(i);
        let lower: Vec<(usize, T)> = cols_i
            .iter()
            .zip(vals_a)
            .filter(|(&j, _)| j <= i)
            .map(|(&j, &v)| (j, v))
            .collect();
        let mut li: Vec<T> = Vec::with_capacity(lower.len());
        for (pos, &(k, aik)) in lower.iter().enumerate() {
            if k == i {
                let diag_sq = aik - li.iter().map(|&v| v * v).sum::<T>();
                if !(diag_sq > T::zero()) {
                    return None;
                }
                li.push(diag_sq.sqrt());
                break;
            }
            // L_ik = (A_ik − Σ_{j<k} L_ij L_kj) / L_kk over the shared pattern
            let (cols_k, vals_k) = l.row(k);
            let last = cols_k.len() - 1;
            let mut s = aik;
            let (mut p, mut q) = (0, 0);
            while p < pos && q < last {
                match lower[p].0.cmp(&cols_k[q]) {
                    std::cmp::Ordering::Equal => {
                        s -= li[p] * vals_k[q];
                        p += 1;
                        q += 1;
                    }
                    std::cmp::Ordering::Less => p += 1,
                    std::cmp::Ordering::Greater => q += 1,
                }
            }
            li.push(s / vals_k[last]);
        }
        if li.len() != lower.len() {
            return None;
        }
        for (&(j, _), &v) in lower.iter().zip(&li) {
            l.add_to(i, j, v);
        }
    }
    Some(l)
}

/// Preconditioned conjugate gradients from `x = 0`.
///
/// With `zero_mean` the iterates and residuals are projected onto mean-zero
/// vectors, which turns a singular system with a constant kernel into a
/// well-posed one.
pub fn conjugate_gradient<T: Real>(
    a: &CsrMatrix<T>,
    pre: &BuiltPreconditioner<T>,
    b: &[T],
    opts: &SolverOptions,
    zero_mean: bool,
) -> Result<(Vec<T>, SolveStats)> {
    let n = a.dim();
    let mut x = vec![T::zero(); n];
    let mut r = b.to_vec();
    if zero_mean {
        project_mean(&mut r);
    }
    let b_norm = norm2(&r);
    let stats = |iterations, res: T| SolveStats { iterations, relative_residual: res.as_f64(), dofs: n };
    if b_norm.is_zero() {
        return Ok((x, stats(0, T::zero())));
    }
    let tol = T::lit(opts.tolerance);
    let mut z = vec![T::zero(); n];
    pre.apply(&r, &mut z);
    if zero_mean {
        project_mean(&mut z);
    }
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![T::zero(); n];
    let mut rel = T::one();
    for it in 1..=opts.max_iterations {
        a.matvec(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > T::zero()) {
            return Err(Error::Singular(format!("non-positive curvature {pap} at iteration {it}")));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        rel = norm2(&r) / b_norm;
        if rel <= tol {
            if zero_mean {
                project_mean(&mut x);
            }
            debug!("cg converged: n = {n}, {it} iterations, residual {:e}", rel.as_f64());
            return Ok((x, stats(it, rel)));
        }
        pre.apply(&r, &mut z);
        if zero_mean {
            project_mean(&mut z);
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::NotConverged { iterations: opts.max_iterations, residual: rel.as_f64() })
}

fn project_mean<T: Real>(v: &mut [T]) {
    let mean = v.iter().copied().sum::<T>() / T::from_usize_lossy(v.len());
    v.iter_mut().for_each(|x| *x -= mean);
}

fn check_same_mesh<T: Real>(coeff: &CoefficientField<T>, region: &Region<T>) -> Result<()> {
    if coeff.mesh().same_as(region.mesh()) {
        Ok(())
    } else {
        Err(Error::MeshMismatch)
    }
}

/// Stiffness matrix of `A` restricted to the interior nodes of `region`
/// (Dirichlet conditions by elimination).
pub fn assemble_stiffness<T: Real>(coeff: &CoefficientField<T>, region: &Region<T>) -> Result<CsrMatrix<T>> {
    check_same_mesh(coeff, region)?;
    let mesh = region.mesh();
    let d = mesh.dim();
    let rows: Vec<Vec<usize>> = region
        .interior_nodes()
        .iter()
        .map(|&n| {
            let mut cols: Vec<usize> = mesh
                .node_elements(n)
                .iter()
                .flat_map(|&e| mesh.element_nodes(e).iter().filter_map(|&m| region.dof_of(m)))
                .collect();
            cols.sort_unstable();
            cols.dedup();
            cols
        })
        .collect();
    let mut k = CsrMatrix::with_pattern(rows);
    let mut dofs = [usize::MAX; 3];
    for e in 0..mesh.num_elements() {
        if !region.contains_element(e) {
            continue;
        }
        let nodes = mesh.element_nodes(e);
        let mut any = false;
        for (a, &n) in nodes.iter().enumerate() {
            dofs[a] = region.dof_of(n).unwrap_or(usize::MAX);
            any |= dofs[a] != usize::MAX;
        }
        if !any {
            continue;
        }
        let g = mesh.element_grads(e);
        let m = coeff.matrix(e);
        let vol = mesh.volume(e);
        for a in 0..=d {
            if dofs[a] == usize::MAX {
                continue;
            }
            for b in 0..=d {
                if dofs[b] == usize::MAX {
                    continue;
                }
                let v = vol * m.bilinear(&g[a * d..(a + 1) * d], &g[b * d..(b + 1) * d]);
                k.add_to(dofs[a], dofs[b], v);
            }
        }
    }
    Ok(k)
}

/// Load vector `b_i = ⟨f, φ_i⟩` over the interior nodes of `region`.
pub fn assemble_load<T: Real>(source: &SourceTerm<T>, region: &Region<T>) -> Result<Vec<T>> {
    if !source.mesh().same_as(region.mesh()) {
        return Err(Error::MeshMismatch);
    }
    let mesh = region.mesh();
    let d = mesh.dim();
    let share = T::one() / T::from_usize_lossy(d + 1);
    let mut b = vec![T::zero(); region.num_dofs()];
    for e in 0..mesh.num_elements() {
        if !region.contains_element(e) {
            continue;
        }
        let g = source.density()[e];
        let h = source.flux_at(e);
        let vol = mesh.volume(e);
        let grads = mesh.element_grads(e);
        for (a, &n) in mesh.element_nodes(e).iter().enumerate() {
            if let Some(i) = region.dof_of(n) {
                let hg = dot(h, &grads[a * d..(a + 1) * d]);
                b[i] += vol * (g * share - hg);
            }
        }
    }
    Ok(b)
}

/// `⟨f, v⟩ = ∫ g v − ∫ h·∇v`, exact for element-wise constant `g, h`.
/// `v` must be supported in `region`.
pub fn pair_source<T: Real>(source: &SourceTerm<T>, v: &DiscreteField<T>, region: &Region<T>) -> Result<T> {
    if !source.mesh().same_as(region.mesh()) {
        return Err(Error::MeshMismatch);
    }
    v.check_supported_in(region)?;
    let mesh = region.mesh();
    let d = mesh.dim();
    let share = T::one() / T::from_usize_lossy(d + 1);
    let mut total = T::zero();
    for e in 0..mesh.num_elements() {
        let nodes = mesh.element_nodes(e);
        let sum: T = nodes.iter().map(|&n| v.value(n)).sum();
        let grad = v.gradient(e);
        if sum.is_zero() && grad.iter().all(|x| x.is_zero()) {
            continue;
        }
        let hg = dot(source.flux_at(e), &grad[..d]);
        total += mesh.volume(e) * (source.density()[e] * share * sum - hg);
    }
    Ok(total)
}

/// `½ ∫ A∇v·∇v` over `region`; `v` must be supported in `region`.
pub fn quadratic_energy<T: Real>(coeff: &CoefficientField<T>, v: &DiscreteField<T>, region: &Region<T>) -> Result<T> {
    check_same_mesh(coeff, region)?;
    v.check_supported_in(region)?;
    let mesh = region.mesh();
    let d = mesh.dim();
    let mut total = T::zero();
    for e in 0..mesh.num_elements() {
        if !region.contains_element(e) {
            continue;
        }
        let g = v.gradient(e);
        total += mesh.volume(e) * coeff.matrix(e).bilinear(&g[..d], &g[..d]);
    }
    Ok(total * T::lit(0.5))
}

/// Assembled and preconditioned Dirichlet system, reusable across sources.
pub struct DirichletSystem<T> {
    region: Region<T>,
    matrix: CsrMatrix<T>,
    pre: BuiltPreconditioner<T>,
    opts: SolverOptions,
}

impl<T: Real> DirichletSystem<T> {
    pub fn assemble(coeff: &CoefficientField<T>, region: &Region<T>, opts: &SolverOptions) -> Result<Self> {
        opts.validate()?;
        if region.num_dofs() == 0 {
            return Err(Error::EmptyRegion(format!("{} elements", region.num_elements())));
        }
        let matrix = assemble_stiffness(coeff, region)?;
        let pre = BuiltPreconditioner::build(&matrix, opts.preconditioner);
        Ok(DirichletSystem { region: region.clone(), matrix, pre, opts: *opts })
    }

    pub fn region(&self) -> &Region<T> {
        &self.region
    }

    pub fn matrix(&self) -> &CsrMatrix<T> {
        &self.matrix
    }

    pub fn solve_load(&self, b: &[T]) -> Result<Solution<T>> {
        let (x, stats) = conjugate_gradient(&self.matrix, &self.pre, b, &self.opts, false)?;
        Ok(Solution { field: DiscreteField::from_dofs(&self.region, &x)?, stats })
    }

    pub fn solve(&self, source: &SourceTerm<T>) -> Result<Solution<T>> {
        let b = assemble_load(source, &self.region)?;
        self.solve_load(&b)
    }

    /// `½ xᵀ K x` for a field supported in the system's region.
    pub fn energy(&self, v: &DiscreteField<T>) -> Result<T> {
        v.check_supported_in(&self.region)?;
        Ok(self.matrix.quadratic_form(&v.dofs()) * T::lit(0.5))
    }
}

/// Solves `−div(A∇u) = f` in `region`, `u = 0` on its boundary.
pub fn solve_dirichlet<T: Real>(
    coeff: &CoefficientField<T>,
    source: &SourceTerm<T>,
    region: &Region<T>,
    opts: &SolverOptions,
) -> Result<Solution<T>> {
    DirichletSystem::assemble(coeff, region, opts)?.solve(source)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::mesh::build_mesh;

    fn unit_interval(n: usize) -> Region<f64> {
        Region::full(Arc::new(build_mesh(1, &[(0.0, 1.0)], &[n]).unwrap()))
    }

    #[test]
    fn one_dimensional_stiffness_is_tridiagonal() {
        let region = unit_interval(4);
        let k = assemble_stiffness(&CoefficientField::identity(region.mesh().clone()), &region).unwrap();
        assert_eq!(k.dim(), 3);
        assert!((k.get(0, 0) - 8.0).abs() < 1e-12);
        assert!((k.get(0, 1) + 4.0).abs() < 1e-12);
        assert_eq!(k.get(0, 2), 0.0);
    }

    #[test]
    fn nodal_exactness_in_one_dimension() {
        // −u'' = 1 on (0,1): P1 Galerkin is nodally exact, u = x(1−x)/2
        for pre in [Preconditioner::None, Preconditioner::Diagonal, Preconditioner::IncompleteCholesky] {
            let region = unit_interval(16);
            let mesh = region.mesh().clone();
            let opts = SolverOptions { tolerance: 1e-13, preconditioner: pre, ..Default::default() };
            let sol = solve_dirichlet(
                &CoefficientField::identity(mesh.clone()),
                &SourceTerm::constant_density(mesh.clone(), 1.0),
                &region,
                &opts,
            )
            .unwrap();
            for n in 0..mesh.num_nodes() {
                let x = mesh.node(n)[0];
                assert!((sol.field.value(n) - x * (1.0 - x) / 2.0).abs() < 1e-12);
            }
            if pre == Preconditioner::IncompleteCholesky {
                assert_eq!(sol.stats.iterations, 1);
            }
        }
    }

    #[test]
    fn incomplete_cholesky_solves_two_dimensional_problem() {
        let mesh = Arc::new(build_mesh::<f64>(2, &[(0.0, 1.0), (0.0, 1.0)], &[24, 24]).unwrap());
        let region = Region::full(mesh.clone());
        let coeff = CoefficientField::identity(mesh.clone());
        let f = SourceTerm::constant_density(mesh.clone(), 1.0);
        let tight = |p| SolverOptions { tolerance: 1e-12, preconditioner: p, ..Default::default() };
        let a = solve_dirichlet(&coeff, &f, &region, &tight(Preconditioner::Diagonal)).unwrap();
        let b = solve_dirichlet(&coeff, &f, &region, &tight(Preconditioner::IncompleteCholesky)).unwrap();
        assert!(b.stats.iterations < a.stats.iterations);
        for n in 0..mesh.num_nodes() {
            assert!((a.field.value(n) - b.field.value(n)).abs() < 1e-10);
        }
    }

    #[test]
    fn flux_source_pairs_consistently() {
        let region = unit_interval(10);
        let mesh = region.mesh().clone();
        let f = SourceTerm::from_fn(mesh.clone(), |x| (x[0], [x[0] * x[0], 0.0])).unwrap();
        let b = assemble_load(&f, &region).unwrap();
        let v = DiscreteField::interpolate(&region, |x| (3.0 * x[0]).sin());
        let direct = pair_source(&f, &v, &region).unwrap();
        let via_load = dot(&b, &v.dofs());
        assert!((direct - via_load).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_options() {
        assert!(SolverOptions { tolerance: 0.0, ..Default::default() }.validate().is_err());
        assert!(SolverOptions { tolerance: 1.0, ..Default::default() }.validate().is_err());
        assert!(SolverOptions { max_iterations: 0, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn reports_non_convergence() {
        let region = unit_interval(64);
        let mesh = region.mesh().clone();
        let opts = SolverOptions { tolerance: 1e-12, max_iterations: 2, preconditioner: Preconditioner::None };
        let err = solve_dirichlet(
            &CoefficientField::identity(mesh.clone()),
            &SourceTerm::constant_density(mesh, 1.0),
            &region,
            &opts,
        )
        .unwrap_err();
        assert!(matches!(err, Error::NotConverged { iterations: 2, .. }));
    }
}
