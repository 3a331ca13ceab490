use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::scalar::Real;

/// Symmetric `d × d` matrix stored by its upper triangle:
/// `[a]` in 1D, `[a11, a12, a22]` in 2D.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymMatrix<T> {
    dim: usize,
    upper: [T; 3],
}

impl<T: Real> SymMatrix<T> {
    pub fn scalar(dim: usize, a: T) -> Self {
        if dim == 1 {
            SymMatrix { dim, upper: [a, T::zero(), T::zero()] }
        } else {
            SymMatrix { dim, upper: [a, T::zero(), a] }
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::scalar(dim, T::one())
    }

    pub fn new_2d(a11: T, a12: T, a22: T) -> Self {
        SymMatrix { dim: 2, upper: [a11, a12, a22] }
    }

    pub fn diag(entries: &[T]) -> Self {
        match entries.len() {
            1 => Self::scalar(1, entries[0]),
            _ => Self::new_2d(entries[0], T::zero(), entries[1]),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn upper(&self) -> &[T] {
        if self.dim == 1 {
            &self.upper[..1]
        } else {
            &self.upper
        }
    }

    /// Entry `(i, j)`.
    pub fn get(&self, i: usize, j: usize) -> T {
        match (self.dim, i.min(j), i.max(j)) {
            (1, _, _) => self.upper[0],
            (_, 0, 0) => self.upper[0],
            (_, 0, 1) => self.upper[1],
            _ => self.upper[2],
        }
    }

    pub fn scale(&self, c: T) -> Self {
        SymMatrix {
            dim: self.dim,
            upper: [self.upper[0] * c, self.upper[1] * c, self.upper[2] * c],
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        SymMatrix {
            dim: self.dim,
            upper: [
                self.upper[0] + other.upper[0],
                self.upper[1] + other.upper[1],
                self.upper[2] + other.upper[2],
            ],
        }
    }

    /// `x · A y`.
    pub fn bilinear(&self, x: &[T], y: &[T]) -> T {
        if self.dim == 1 {
            x[0] * self.upper[0] * y[0]
        } else {
            let [a, b, c] = self.upper;
            x[0] * (a * y[0] + b * y[1]) + x[1] * (b * y[0] + c * y[1])
        }
    }

    /// Smallest and largest eigenvalue (closed form via trace and determinant in 2D).
    pub fn eigen_bounds(&self) -> (T, T) {
        if self.dim == 1 {
            return (self.upper[0], self.upper[0]);
        }
        let [a, b, c] = self.upper;
        let half_tr = (a + c) * T::lit(0.5);
        let det = a * c - b * b;
        let disc = (half_tr * half_tr - det).max(T::zero()).sqrt();
        (half_tr - disc, half_tr + disc)
    }
}

/// Element-wise constant symmetric coefficient field with declared
/// ellipticity bounds `alpha ≤ A ≤ beta`.
#[derive(Debug, Clone)]
pub struct CoefficientField<T> {
    mesh: Arc<Mesh<T>>,
    entries: Vec<SymMatrix<T>>,
    alpha: T,
    beta: T,
}

impl<T: Real> CoefficientField<T> {
    pub fn new(mesh: Arc<Mesh<T>>, entries: Vec<SymMatrix<T>>, alpha: T, beta: T) -> Result<Self> {
        if entries.len() != mesh.num_elements() {
            return Err(Error::InvalidParameter(format!(
                "coefficient has {} entries for {} elements",
                entries.len(),
                mesh.num_elements()
            )));
        }
        if !(alpha > T::zero() && beta >= alpha) {
            return Err(Error::InvalidParameter(format!(
                "ellipticity bounds must satisfy 0 < alpha <= beta, got ({alpha}, {beta})"
            )));
        }
        let slack = T::lit(T::ROUNDING);
        for (e, m) in entries.iter().enumerate() {
            if m.dim() != mesh.dim() {
                return Err(Error::InvalidParameter(format!(
                    "coefficient on element {e} has dimension {}, mesh has {}",
                    m.dim(),
                    mesh.dim()
                )));
            }
            let (lo, hi) = m.eigen_bounds();
            let ok = lo.is_finite()
                && hi.is_finite()
                && lo >= alpha * (T::one() - slack)
                && hi <= beta * (T::one() + slack);
            if !ok {
                return Err(Error::Ellipticity {
                    element: e,
                    min: lo.as_f64(),
                    max: hi.as_f64(),
                    alpha: alpha.as_f64(),
                    beta: beta.as_f64(),
                });
            }
        }
        Ok(CoefficientField { mesh, entries, alpha, beta })
    }

    pub fn constant(mesh: Arc<Mesh<T>>, m: SymMatrix<T>, alpha: T, beta: T) -> Result<Self> {
        let n = mesh.num_elements();
        Self::new(mesh, vec![m; n], alpha, beta)
    }

    pub fn identity(mesh: Arc<Mesh<T>>) -> Self {
        let d = mesh.dim();
        Self::constant(mesh, SymMatrix::identity(d), T::one(), T::one())
            .expect("identity is elliptic")
    }

    /// Samples `f` at element barycenters.
    pub fn from_fn(
        mesh: Arc<Mesh<T>>,
        alpha: T,
        beta: T,
        f: impl Fn(&[T]) -> SymMatrix<T>,
    ) -> Result<Self> {
        let entries = (0..mesh.num_elements()).map(|e| f(mesh.barycenter(e))).collect();
        Self::new(mesh, entries, alpha, beta)
    }

    /// `c · A` with bounds scaled accordingly.
    pub fn scaled(&self, c: T) -> Result<Self> {
        if c <= T::zero() {
            return Err(Error::InvalidParameter("coefficient scale must be positive".into()));
        }
        Ok(CoefficientField {
            mesh: self.mesh.clone(),
            entries: self.entries.iter().map(|m| m.scale(c)).collect(),
            alpha: self.alpha * c,
            beta: self.beta * c,
        })
    }

    pub fn mesh(&self) -> &Arc<Mesh<T>> {
        &self.mesh
    }

    pub fn matrix(&self, e: usize) -> &SymMatrix<T> {
        &self.entries[e]
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    pub fn beta(&self) -> T {
        self.beta
    }

    /// True when every element carries the same matrix.
    pub fn is_uniform(&self) -> bool {
        self.entries.windows(2).all(|w| w[0] == w[1])
    }
}
