use crate::error::{Error, Result};
use crate::region::Region;
use crate::scalar::Real;

/// Nodal P1 function on the whole mesh that vanishes off the interior nodes
/// of its region (the discrete `H¹₀(U)` constraint).
#[derive(Debug, Clone)]
pub struct DiscreteField<T> {
    region: Region<T>,
    values: Vec<T>,
}

impl<T: Real> DiscreteField<T> {
    pub fn zero(region: &Region<T>) -> Self {
        DiscreteField {
            region: region.clone(),
            values: vec![T::zero(); region.mesh().num_nodes()],
        }
    }

    /// Builds a field from values on the interior nodes of `region`, in dof order.
    pub fn from_dofs(region: &Region<T>, dofs: &[T]) -> Result<Self> {
        if dofs.len() != region.num_dofs() {
            return Err(Error::RegionMismatch(format!(
                "{} dof values for {} interior nodes",
                dofs.len(),
                region.num_dofs()
            )));
        }
        let mut f = Self::zero(region);
        for (&n, &v) in region.interior_nodes().iter().zip(dofs) {
            f.values[n] = v;
        }
        Ok(f)
    }

    /// Full nodal array; must vanish off the interior nodes of `region`.
    pub fn from_values(region: &Region<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != region.mesh().num_nodes() {
            return Err(Error::RegionMismatch("nodal array length".into()));
        }
        if let Some(n) = (0..values.len()).find(|&n| !values[n].is_zero() && region.dof_of(n).is_none()) {
            return Err(Error::RegionMismatch(format!("field is non-zero at node {n} outside the region")));
        }
        Ok(DiscreteField { region: region.clone(), values })
    }

    /// Samples `f` at the interior nodes of `region`.
    pub fn interpolate(region: &Region<T>, f: impl Fn(&[T]) -> T) -> Self {
        let mesh = region.mesh();
        let mut field = Self::zero(region);
        for &n in region.interior_nodes() {
            field.values[n] = f(mesh.node(n));
        }
        field
    }

    pub fn region(&self) -> &Region<T> {
        &self.region
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn value(&self, node: usize) -> T {
        self.values[node]
    }

    /// Values on the interior nodes in dof order.
    pub fn dofs(&self) -> Vec<T> {
        self.region.interior_nodes().iter().map(|&n| self.values[n]).collect()
    }

    pub fn scaled(&self, c: T) -> Self {
        DiscreteField {
            region: self.region.clone(),
            values: self.values.iter().map(|&v| v * c).collect(),
        }
    }

    /// Sum of two fields; the result lives on `self`'s region and both
    /// inputs must be supported there.
    pub fn plus(&self, other: &DiscreteField<T>) -> Result<Self> {
        other.check_supported_in(&self.region)?;
        Ok(DiscreteField {
            region: self.region.clone(),
            values: self.values.iter().zip(&other.values).map(|(a, b)| *a + *b).collect(),
        })
    }

    /// Errors unless the field vanishes off the interior nodes of `region`.
    pub fn check_supported_in(&self, region: &Region<T>) -> Result<()> {
        if !self.region.same_mesh(region) {
            return Err(Error::MeshMismatch);
        }
        if self.region.is_subset_of(region) {
            return Ok(());
        }
        match (0..self.values.len()).find(|&n| !self.values[n].is_zero() && region.dof_of(n).is_none()) {
            Some(n) => Err(Error::RegionMismatch(format!("field is non-zero at node {n} outside the region"))),
            None => Ok(()),
        }
    }

    /// Element gradient (constant on each simplex).
    pub fn gradient(&self, e: usize) -> [T; 2] {
        let mesh = self.region.mesh();
        let d = mesh.dim();
        let g = mesh.element_grads(e);
        let mut out = [T::zero(); 2];
        for (a, &n) in mesh.element_nodes(e).iter().enumerate() {
            let v = self.values[n];
            for k in 0..d {
                out[k] += v * g[a * d + k];
            }
        }
        out
    }

    /// Exact `∫ v²` for the P1 interpolant.
    pub fn l2_norm_sq(&self) -> T {
        let mesh = self.region.mesh();
        let d = mesh.dim();
        let weight = T::lit(2.0) / T::from_usize_lossy((d + 1) * (d + 2));
        let mut total = T::zero();
        for e in 0..mesh.num_elements() {
            let nodes = mesh.element_nodes(e);
            let mut sq = T::zero();
            let mut sum = T::zero();
            for &n in nodes {
                let v = self.values[n];
                sq += v * v;
                sum += v;
            }
            if sq.is_zero() {
                continue;
            }
            // Σ v_i² + Σ_{i<j} v_i v_j = (Σ v_i² + (Σ v_i)²) / 2
            total += mesh.volume(e) * weight * (sq + sum * sum) * T::lit(0.5);
        }
        total
    }

    /// `|v|²_{H¹₀} = ∫ |∇v|²`.
    pub fn h1_seminorm_sq(&self) -> T {
        let mesh = self.region.mesh();
        let d = mesh.dim();
        (0..mesh.num_elements())
            .map(|e| {
                let g = self.gradient(e);
                mesh.volume(e) * (0..d).map(|k| g[k] * g[k]).sum::<T>()
            })
            .sum()
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }
}
