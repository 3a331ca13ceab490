//! Structured simplicial meshes on axis-aligned boxes in one and two dimensions.
//!
//! Nodes are numbered lexicographically with the first axis running fastest.
//! In 2D every grid square `(i, j)` is split along the diagonal from
//! `(i, j)` to `(i + 1, j + 1)` into the triangles `2s` and `2s + 1`, where
//! `s = j * nx + i`.

use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Error, Result};
use crate::scalar::Real;

static NEXT_MESH_ID: AtomicU64 = AtomicU64::new(1);

#[derive(Debug)]
pub struct Mesh<T> {
    id: u64,
    dim: usize,
    lower: [T; 2],
    upper: [T; 2],
    resolution: [usize; 2],
    spacing: [T; 2],
    coords: Vec<T>,
    conn: Vec<usize>,
    volumes: Vec<T>,
    grads: Vec<T>,
    barycenters: Vec<T>,
    boundary: Vec<bool>,
    node_elem_offsets: Vec<usize>,
    node_elems: Vec<usize>,
}

/// Per-axis closed interval `[lower, upper]`.
pub type Bounds<T> = (T, T);

/// Builds a structured mesh of `dimension` ∈ {1, 2} on `bounds` with
/// `resolution[i]` cells along axis `i`.
pub fn build_mesh<T: Real>(
    dimension: usize,
    bounds: &[Bounds<T>],
    resolution: &[usize],
) -> Result<Mesh<T>> {
    Mesh::new(dimension, bounds, resolution)
}

impl<T: Real> Mesh<T> {
    pub fn new(dimension: usize, bounds: &[Bounds<T>], resolution: &[usize]) -> Result<Self> {
        if !(1..=2).contains(&dimension) {
            return Err(Error::InvalidMesh(format!(
                "dimension must be 1 or 2, got {dimension}"
            )));
        }
        if bounds.len() != dimension || resolution.len() != dimension {
            return Err(Error::InvalidMesh(format!(
                "expected {dimension} bounds and resolutions, got {} and {}",
                bounds.len(),
                resolution.len()
            )));
        }
        for (axis, (&(lo, hi), &n)) in bounds.iter().zip(resolution).enumerate() {
            if !(lo.is_finite() && hi.is_finite()) || hi <= lo {
                return Err(Error::InvalidMesh(format!("degenerate box on axis {axis}")));
            }
            if n == 0 {
                return Err(Error::InvalidMesh(format!("zero resolution on axis {axis}")));
            }
            if n < 2 {
                return Err(Error::InvalidMesh(format!(
                    "resolution must be at least 2 on axis {axis}"
                )));
            }
        }

        let mut lower = [T::zero(); 2];
        let mut upper = [T::zero(); 2];
        let mut res = [1usize; 2];
        let mut spacing = [T::one(); 2];
        for a in 0..dimension {
            lower[a] = bounds[a].0;
            upper[a] = bounds[a].1;
            res[a] = resolution[a];
            spacing[a] = (upper[a] - lower[a]) / T::from_usize_lossy(res[a]);
        }

        let mut mesh = Mesh {
            id: NEXT_MESH_ID.fetch_add(1, Ordering::Relaxed),
            dim: dimension,
            lower,
            upper,
            resolution: res,
            spacing,
            coords: Vec::new(),
            conn: Vec::new(),
            volumes: Vec::new(),
            grads: Vec::new(),
            barycenters: Vec::new(),
            boundary: Vec::new(),
            node_elem_offsets: Vec::new(),
            node_elems: Vec::new(),
        };
        match dimension {
            1 => mesh.fill_1d(),
            _ => mesh.fill_2d(),
        }
        mesh.fill_geometry()?;
        mesh.fill_node_elements();
        Ok(mesh)
    }

    fn grid_coord(&self, axis: usize, i: usize) -> T {
        if i == self.resolution[axis] {
            self.upper[axis]
        } else {
            self.lower[axis] + self.spacing[axis] * T::from_usize_lossy(i)
        }
    }

    fn fill_1d(&mut self) {
        let n = self.resolution[0];
        self.coords = (0..=n).map(|i| self.grid_coord(0, i)).collect();
        self.boundary = (0..=n).map(|i| i == 0 || i == n).collect();
        self.conn = (0..n).flat_map(|e| [e, e + 1]).collect();
    }

    fn fill_2d(&mut self) {
        let (nx, ny) = (self.resolution[0], self.resolution[1]);
        let stride = nx + 1;
        self.coords = Vec::with_capacity(2 * stride * (ny + 1));
        self.boundary = Vec::with_capacity(stride * (ny + 1));
        for j in 0..=ny {
            for i in 0..=nx {
                self.coords.push(self.grid_coord(0, i));
                self.coords.push(self.grid_coord(1, j));
                self.boundary.push(i == 0 || i == nx || j == 0 || j == ny);
            }
        }
        self.conn = Vec::with_capacity(6 * nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let n00 = j * stride + i;
                let n10 = n00 + 1;
                let n01 = n00 + stride;
                let n11 = n01 + 1;
                self.conn.extend_from_slice(&[n00, n10, n11]);
                self.conn.extend_from_slice(&[n00, n11, n01]);
            }
        }
    }

    fn fill_geometry(&mut self) -> Result<()> {
        let d = self.dim;
        let ne = self.num_elements();
        self.volumes = Vec::with_capacity(ne);
        self.grads = Vec::with_capacity(ne * (d + 1) * d);
        self.barycenters = Vec::with_capacity(ne * d);
        for e in 0..ne {
            let nodes = &self.conn[e * (d + 1)..(e + 1) * (d + 1)];
            if d == 1 {
                let (x0, x1) = (self.coords[nodes[0]], self.coords[nodes[1]]);
                let len = x1 - x0;
                if len <= T::zero() {
                    return Err(Error::InvalidMesh(format!("element {e} has non-positive length")));
                }
                self.volumes.push(len);
                self.grads.push(-T::one() / len);
                self.grads.push(T::one() / len);
                self.barycenters.push((x0 + x1) * T::lit(0.5));
            } else {
                let p = |k: usize| (self.coords[2 * nodes[k]], self.coords[2 * nodes[k] + 1]);
                let (p0, p1, p2) = (p(0), p(1), p(2));
                let (ax, ay) = (p1.0 - p0.0, p1.1 - p0.1);
                let (bx, by) = (p2.0 - p0.0, p2.1 - p0.1);
                let det = ax * by - ay * bx;
                if det <= T::zero() {
                    return Err(Error::InvalidMesh(format!("element {e} has non-positive area")));
                }
                self.volumes.push(det * T::lit(0.5));
                // Barycentric gradients: rows of the inverse Jacobian.
                let g1 = (by / det, -bx / det);
                let g2 = (-ay / det, ax / det);
                let g0 = (-g1.0 - g2.0, -g1.1 - g2.1);
                self.grads.extend_from_slice(&[g0.0, g0.1, g1.0, g1.1, g2.0, g2.1]);
                let third = T::one() / T::lit(3.0);
                self.barycenters.push((p0.0 + p1.0 + p2.0) * third);
                self.barycenters.push((p0.1 + p1.1 + p2.1) * third);
            }
        }
        Ok(())
    }

    fn fill_node_elements(&mut self) {
        let nn = self.num_nodes();
        let k = self.dim + 1;
        let mut counts = vec![0usize; nn + 1];
        for &n in &self.conn {
            counts[n + 1] += 1;
        }
        for i in 0..nn {
            counts[i + 1] += counts[i];
        }
        let mut fill = counts.clone();
        let mut elems = vec![0usize; self.conn.len()];
        for (idx, &n) in self.conn.iter().enumerate() {
            elems[fill[n]] = idx / k;
            fill[n] += 1;
        }
        self.node_elem_offsets = counts;
        self.node_elems = elems;
    }

    /// Unique identity used for mesh-mismatch checks.
    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_nodes(&self) -> usize {
        self.boundary.len()
    }

    pub fn num_elements(&self) -> usize {
        self.conn.len() / (self.dim + 1)
    }

    pub fn resolution(&self) -> &[usize] {
        &self.resolution[..self.dim]
    }

    pub fn lower(&self) -> &[T] {
        &self.lower[..self.dim]
    }

    pub fn upper(&self) -> &[T] {
        &self.upper[..self.dim]
    }

    /// Cell size per axis.
    pub fn spacing(&self) -> &[T] {
        &self.spacing[..self.dim]
    }

    /// Largest cell size over the axes; the `h` of resolution rules.
    pub fn h(&self) -> T {
        self.spacing().iter().copied().fold(T::zero(), T::max)
    }

    pub fn box_volume(&self) -> T {
        (0..self.dim)
            .map(|a| self.upper[a] - self.lower[a])
            .fold(T::one(), |acc, l| acc * l)
    }

    pub fn node(&self, n: usize) -> &[T] {
        &self.coords[n * self.dim..(n + 1) * self.dim]
    }

    pub fn element_nodes(&self, e: usize) -> &[usize] {
        let k = self.dim + 1;
        &self.conn[e * k..(e + 1) * k]
    }

    pub fn volume(&self, e: usize) -> T {
        self.volumes[e]
    }

    pub fn volumes(&self) -> &[T] {
        &self.volumes
    }

    /// Gradients of the barycentric basis on element `e`, laid out as
    /// `(dim + 1)` consecutive vectors of length `dim`.
    pub fn element_grads(&self, e: usize) -> &[T] {
        let s = (self.dim + 1) * self.dim;
        &self.grads[e * s..(e + 1) * s]
    }

    pub fn barycenter(&self, e: usize) -> &[T] {
        &self.barycenters[e * self.dim..(e + 1) * self.dim]
    }

    pub fn is_boundary_node(&self, n: usize) -> bool {
        self.boundary[n]
    }

    pub fn node_elements(&self, n: usize) -> &[usize] {
        &self.node_elems[self.node_elem_offsets[n]..self.node_elem_offsets[n + 1]]
    }

    /// Elements sharing at least one node with `e` (excluding `e`).
    pub fn element_neighbors(&self, e: usize, out: &mut Vec<usize>) {
        out.clear();
        for &n in self.element_nodes(e) {
            for &f in self.node_elements(n) {
                if f != e && !out.contains(&f) {
                    out.push(f);
                }
            }
        }
    }

    /// True when `e` has a node on the box boundary.
    pub fn touches_boundary(&self, e: usize) -> bool {
        self.element_nodes(e).iter().any(|&n| self.boundary[n])
    }

    /// Grid coordinates `(i, j)` of node `n`.
    pub fn grid_index(&self, n: usize) -> [usize; 2] {
        if self.dim == 1 {
            [n, 0]
        } else {
            let stride = self.resolution[0] + 1;
            [n % stride, n / stride]
        }
    }

    /// Node closest to `p` (componentwise rounding to the grid).
    pub fn nearest_node(&self, p: &[T]) -> usize {
        let mut idx = [0usize; 2];
        for a in 0..self.dim {
            let t = ((p[a] - self.lower[a]) / self.spacing[a]).round();
            let t = t.max(T::zero()).min(T::from_usize_lossy(self.resolution[a]));
            idx[a] = t.to_usize().unwrap_or(0);
        }
        if self.dim == 1 {
            idx[0]
        } else {
            idx[1] * (self.resolution[0] + 1) + idx[0]
        }
    }

    pub fn same_as(&self, other: &Mesh<T>) -> bool {
        self.id == other.id
    }
}
