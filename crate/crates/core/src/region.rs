//! Open subsets of the mesh box approximated by element masks.

use std::collections::VecDeque;
use std::fmt::Write as _;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::scalar::Real;

const NO_DOF: usize = usize::MAX;

#[derive(Debug)]
struct RegionData {
    mask: Vec<bool>,
    interior: Vec<usize>,
    dof_of_node: Vec<usize>,
}

/// An element mask on a shared mesh together with its interior-node set.
///
/// Interior nodes are the nodes all of whose incident elements lie in the
/// mask, excluding nodes on the box boundary. They carry the degrees of
/// freedom of the discrete `H¹₀(U)`. Cloning is cheap.
#[derive(Debug, Clone)]
pub struct Region<T> {
    mesh: Arc<Mesh<T>>,
    data: Arc<RegionData>,
}

/// Outcome of a compact-containment test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Containment {
    pub holds: bool,
    /// False when the margin is below one cell and the test is unreliable.
    pub reliable: bool,
}

impl<T: Real> Region<T> {
    pub fn from_mask(mesh: Arc<Mesh<T>>, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != mesh.num_elements() {
            return Err(Error::RegionMismatch(format!(
                "mask has {} entries, mesh has {} elements",
                mask.len(),
                mesh.num_elements()
            )));
        }
        let mut dof_of_node = vec![NO_DOF; mesh.num_nodes()];
        let mut interior = Vec::new();
        for n in 0..mesh.num_nodes() {
            if mesh.is_boundary_node(n) {
                continue;
            }
            if mesh.node_elements(n).iter().all(|&e| mask[e]) {
                dof_of_node[n] = interior.len();
                interior.push(n);
            }
        }
        Ok(Region {
            mesh,
            data: Arc::new(RegionData {
                mask,
                interior,
                dof_of_node,
            }),
        })
    }

    pub fn full(mesh: Arc<Mesh<T>>) -> Self {
        let n = mesh.num_elements();
        Self::from_mask(mesh, vec![true; n]).expect("mask length matches")
    }

    pub fn empty(mesh: Arc<Mesh<T>>) -> Self {
        let n = mesh.num_elements();
        Self::from_mask(mesh, vec![false; n]).expect("mask length matches")
    }

    pub fn mesh(&self) -> &Arc<Mesh<T>> {
        &self.mesh
    }

    pub fn mask(&self) -> &[bool] {
        &self.data.mask
    }

    pub fn contains_element(&self, e: usize) -> bool {
        self.data.mask[e]
    }

    pub fn interior_nodes(&self) -> &[usize] {
        &self.data.interior
    }

    pub fn num_dofs(&self) -> usize {
        self.data.interior.len()
    }

    pub fn dof_of(&self, node: usize) -> Option<usize> {
        match self.data.dof_of_node[node] {
            NO_DOF => None,
            d => Some(d),
        }
    }

    /// True when the mask selects no element.
    pub fn is_empty(&self) -> bool {
        !self.data.mask.iter().any(|&b| b)
    }

    pub fn num_elements(&self) -> usize {
        self.data.mask.iter().filter(|&&b| b).count()
    }

    /// Summed volume of the masked elements.
    pub fn volume(&self) -> T {
        self.data
            .mask
            .iter()
            .zip(self.mesh.volumes())
            .filter(|(m, _)| **m)
            .map(|(_, &v)| v)
            .sum()
    }

    pub fn same_mesh(&self, other: &Region<T>) -> bool {
        self.mesh.same_as(&other.mesh)
    }

    /// Mask equality on the same mesh.
    pub fn same_set(&self, other: &Region<T>) -> bool {
        self.same_mesh(other) && self.data.mask == other.data.mask
    }

    /// True when `self`'s mask is a subset of `other`'s.
    pub fn is_subset_of(&self, other: &Region<T>) -> bool {
        self.same_mesh(other)
            && self
                .data
                .mask
                .iter()
                .zip(&other.data.mask)
                .all(|(&a, &b)| !a || b)
    }

    pub fn is_disjoint_from(&self, other: &Region<T>) -> bool {
        self.same_mesh(other)
            && self
                .data
                .mask
                .iter()
                .zip(&other.data.mask)
                .all(|(&a, &b)| !(a && b))
    }

    fn combine(&self, other: &Region<T>, op: impl Fn(bool, bool) -> bool) -> Result<Region<T>> {
        if !self.same_mesh(other) {
            return Err(Error::MeshMismatch);
        }
        let mask = self
            .data
            .mask
            .iter()
            .zip(&other.data.mask)
            .map(|(&a, &b)| op(a, b))
            .collect();
        Region::from_mask(self.mesh.clone(), mask)
    }

    pub fn union(&self, other: &Region<T>) -> Result<Region<T>> {
        self.combine(other, |a, b| a || b)
    }

    pub fn intersection(&self, other: &Region<T>) -> Result<Region<T>> {
        self.combine(other, |a, b| a && b)
    }

    pub fn difference(&self, other: &Region<T>) -> Result<Region<T>> {
        self.combine(other, |a, b| a && !b)
    }

    /// Complement in the mesh box.
    pub fn complement(&self) -> Region<T> {
        let mask = self.data.mask.iter().map(|&b| !b).collect();
        Region::from_mask(self.mesh.clone(), mask).expect("mask length matches")
    }

    /// Adds every element sharing a node with the mask (one element layer).
    pub fn dilate(&self) -> Region<T> {
        let mesh = &self.mesh;
        let mut mask = self.data.mask.clone();
        for n in 0..mesh.num_nodes() {
            let elems = mesh.node_elements(n);
            if elems.iter().any(|&e| self.data.mask[e]) {
                for &e in elems {
                    mask[e] = true;
                }
            }
        }
        Region::from_mask(mesh.clone(), mask).expect("mask length matches")
    }

    /// Element-graph distance (vertex adjacency) from each element to the
    /// complement of the mask. Complement elements get 0; elements touching
    /// the box boundary are at most 1, as if a ghost layer of complement
    /// surrounded the box.
    pub fn hops_to_complement(&self) -> Vec<usize> {
        let mesh = &self.mesh;
        let ne = mesh.num_elements();
        let mut dist = vec![usize::MAX; ne];
        let mut queue = VecDeque::new();
        for e in 0..ne {
            if !self.data.mask[e] {
                dist[e] = 0;
                queue.push_back(e);
            }
        }
        // Queue stays sorted by distance: all zero seeds precede the ghost-layer seeds.
        for e in 0..ne {
            if self.data.mask[e] && mesh.touches_boundary(e) {
                dist[e] = 1;
                queue.push_back(e);
            }
        }
        let mut neighbors = Vec::new();
        while let Some(e) = queue.pop_front() {
            let de = dist[e];
            mesh.element_neighbors(e, &mut neighbors);
            for &f in &neighbors {
                if dist[f] > de + 1 {
                    dist[f] = de + 1;
                    queue.push_back(f);
                }
            }
        }
        dist
    }

    /// Elements whose distance to the complement is at least `margin`
    /// (element-graph hops × h). Inverse of the containment metric.
    pub fn erode(&self, margin: T) -> Region<T> {
        let h = self.mesh.h();
        let hops = self.hops_to_complement();
        let mask = hops
            .iter()
            .map(|&d| d >= 1 && T::from_usize_lossy(d - 1) * h >= margin)
            .collect();
        Region::from_mask(self.mesh.clone(), mask).expect("mask length matches")
    }

    /// ASCII portable-graymap dump of a 2D mask (`P2`, one row per grid row,
    /// top row first; a square is white when both of its triangles are in
    /// the mask, grey when one is). 1D masks are written as a single row.
    pub fn to_pgm(&self) -> String {
        let res = self.mesh.resolution();
        let mut out = String::new();
        if self.mesh.dim() == 1 {
            let _ = writeln!(out, "P2\n{} 1\n2", res[0]);
            let row: Vec<String> = self
                .data
                .mask
                .iter()
                .map(|&b| if b { "2" } else { "0" }.to_string())
                .collect();
            let _ = writeln!(out, "{}", row.join(" "));
            return out;
        }
        let (nx, ny) = (res[0], res[1]);
        let _ = writeln!(out, "P2\n{nx} {ny}\n2");
        for j in (0..ny).rev() {
            let row: Vec<String> = (0..nx)
                .map(|i| {
                    let s = j * nx + i;
                    let v = self.data.mask[2 * s] as u8 + self.data.mask[2 * s + 1] as u8;
                    v.to_string()
                })
                .collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
        out
    }
}

/// Tests `V ⊂⊂ U` with an explicit clearance: every element of `V` lies in
/// `U` and its element-graph distance to the complement of `U`, measured as
/// `(hops - 1) × h`, is at least `margin`.
pub fn compactly_contained<T: Real>(v: &Region<T>, u: &Region<T>, margin: T) -> Result<Containment> {
    if !v.same_mesh(u) {
        return Err(Error::MeshMismatch);
    }
    let h = u.mesh().h();
    let reliable = margin >= h;
    if v.is_empty() {
        return Ok(Containment { holds: true, reliable });
    }
    let hops = u.hops_to_complement();
    let holds = v.mask().iter().enumerate().filter(|(_, &m)| m).all(|(e, _)| {
        let d = hops[e];
        d >= 1 && T::from_usize_lossy(d - 1) * h >= margin
    });
    if !reliable {
        log::warn!("containment margin below mesh size; result is unreliable");
    }
    Ok(Containment { holds, reliable })
}
