use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::region::Region;
use crate::scalar::Real;

/// An `H⁻¹` element `f = g + div(h)` with element-wise constant density `g`
/// and flux `h`. It acts on test functions as `⟨f, v⟩ = ∫ g v − ∫ h·∇v`.
#[derive(Debug, Clone)]
pub struct SourceTerm<T> {
    mesh: Arc<Mesh<T>>,
    density: Vec<T>,
    flux: Vec<T>,
}

impl<T: Real> SourceTerm<T> {
    pub fn zero(mesh: Arc<Mesh<T>>) -> Self {
        let ne = mesh.num_elements();
        let d = mesh.dim();
        SourceTerm { mesh, density: vec![T::zero(); ne], flux: vec![T::zero(); ne * d] }
    }

    pub fn new(mesh: Arc<Mesh<T>>, density: Vec<T>, flux: Vec<T>) -> Result<Self> {
        let ne = mesh.num_elements();
        if density.len() != ne || flux.len() != ne * mesh.dim() {
            return Err(Error::InvalidParameter(format!(
                "source arrays have lengths {} and {}, expected {} and {}",
                density.len(),
                flux.len(),
                ne,
                ne * mesh.dim()
            )));
        }
        if density.iter().chain(&flux).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("source term has non-finite values".into()));
        }
        Ok(SourceTerm { mesh, density, flux })
    }

    /// Constant density `g` everywhere.
    pub fn constant_density(mesh: Arc<Mesh<T>>, g: T) -> Self {
        let mut s = Self::zero(mesh);
        s.density.iter_mut().for_each(|v| *v = g);
        s
    }

    /// Density `value · χ_region`.
    pub fn indicator(region: &Region<T>, value: T) -> Self {
        let mut s = Self::zero(region.mesh().clone());
        for (d, &m) in s.density.iter_mut().zip(region.mask()) {
            if m {
                *d = value;
            }
        }
        s
    }

    /// Samples density and flux at element barycenters.
    pub fn from_fn(mesh: Arc<Mesh<T>>, f: impl Fn(&[T]) -> (T, [T; 2])) -> Result<Self> {
        let d = mesh.dim();
        let ne = mesh.num_elements();
        let mut density = Vec::with_capacity(ne);
        let mut flux = Vec::with_capacity(ne * d);
        for e in 0..ne {
            let (g, h) = f(mesh.barycenter(e));
            density.push(g);
            flux.extend_from_slice(&h[..d]);
        }
        Self::new(mesh, density, flux)
    }

    pub fn mesh(&self) -> &Arc<Mesh<T>> {
        &self.mesh
    }

    pub fn density(&self) -> &[T] {
        &self.density
    }

    pub fn flux(&self) -> &[T] {
        &self.flux
    }

    pub fn flux_at(&self, e: usize) -> &[T] {
        let d = self.mesh.dim();
        &self.flux[e * d..(e + 1) * d]
    }

    pub fn density_mut(&mut self) -> &mut [T] {
        &mut self.density
    }

    pub fn flux_mut(&mut self) -> &mut [T] {
        &mut self.flux
    }

    pub fn scaled(&self, c: T) -> Self {
        SourceTerm {
            mesh: self.mesh.clone(),
            density: self.density.iter().map(|&v| v * c).collect(),
            flux: self.flux.iter().map(|&v| v * c).collect(),
        }
    }

    pub fn plus(&self, other: &SourceTerm<T>) -> Result<Self> {
        if !self.mesh.same_as(&other.mesh) {
            return Err(Error::MeshMismatch);
        }
        Ok(SourceTerm {
            mesh: self.mesh.clone(),
            density: self.density.iter().zip(&other.density).map(|(a, b)| *a + *b).collect(),
            flux: self.flux.iter().zip(&other.flux).map(|(a, b)| *a + *b).collect(),
        })
    }

    pub fn is_zero(&self) -> bool {
        self.density.iter().chain(&self.flux).all(|v| v.is_zero())
    }

    /// Elements where either part is non-zero.
    pub fn support(&self) -> Vec<bool> {
        let d = self.mesh.dim();
        (0..self.mesh.num_elements())
            .map(|e| {
                !self.density[e].is_zero() || self.flux[e * d..(e + 1) * d].iter().any(|v| !v.is_zero())
            })
            .collect()
    }
}
