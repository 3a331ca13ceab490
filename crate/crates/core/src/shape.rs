//! Constructive geometry over balls, boxes and half-spaces.
//!
//! Expressions deserialize from the externally tagged JSON form used in
//! experiment configurations, e.g.
//! `{"difference": [{"box": {"lower": [0, 0], "upper": [1, 1]}}, {"ball": {"center": [0.5, 0.5], "radius": 0.1}}]}`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::mesh::Mesh;
use crate::region::Region;
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeExpr<T> {
    /// The whole mesh box.
    Full,
    Empty,
    /// Open ball `|x - center| < radius`.
    Ball { center: Vec<T>, radius: T },
    /// Open box `lower < x < upper` componentwise.
    Box { lower: Vec<T>, upper: Vec<T> },
    /// Open half-space `normal · x < offset`.
    HalfSpace { normal: Vec<T>, offset: T },
    Union(Vec<ShapeExpr<T>>),
    Intersection(Vec<ShapeExpr<T>>),
    /// Complement in the mesh box.
    Complement(Box<ShapeExpr<T>>),
    Difference(Box<ShapeExpr<T>>, Box<ShapeExpr<T>>),
}

impl<T: Real> ShapeExpr<T> {
    pub fn ball(center: Vec<T>, radius: T) -> Self {
        ShapeExpr::Ball { center, radius }
    }

    pub fn cube(lower: Vec<T>, upper: Vec<T>) -> Self {
        ShapeExpr::Box { lower, upper }
    }

    pub fn union(self, other: Self) -> Self {
        ShapeExpr::Union(vec![self, other])
    }

    pub fn minus(self, other: Self) -> Self {
        ShapeExpr::Difference(Box::new(self), Box::new(other))
    }

    pub fn contains(&self, p: &[T]) -> bool {
        match self {
            ShapeExpr::Full => true,
            ShapeExpr::Empty => false,
            ShapeExpr::Ball { center, radius } => {
                let d2: T = p
                    .iter()
                    .zip(center)
                    .map(|(&x, &c)| (x - c) * (x - c))
                    .sum();
                d2 < *radius * *radius
            }
            ShapeExpr::Box { lower, upper } => p
                .iter()
                .zip(lower.iter().zip(upper))
                .all(|(&x, (&lo, &hi))| lo < x && x < hi),
            ShapeExpr::HalfSpace { normal, offset } => {
                let s: T = p.iter().zip(normal).map(|(&x, &n)| x * n).sum();
                s < *offset
            }
            ShapeExpr::Union(parts) => parts.iter().any(|s| s.contains(p)),
            ShapeExpr::Intersection(parts) => parts.iter().all(|s| s.contains(p)),
            ShapeExpr::Complement(inner) => !inner.contains(p),
            ShapeExpr::Difference(a, b) => a.contains(p) && !b.contains(p),
        }
    }

    /// Checks that every primitive has coordinates of the given dimension.
    pub fn check_dimension(&self, dim: usize) -> Result<(), String> {
        match self {
            ShapeExpr::Full | ShapeExpr::Empty => Ok(()),
            ShapeExpr::Ball { center, radius } => {
                if center.len() != dim {
                    return Err(format!("ball center has {} coordinates, expected {dim}", center.len()));
                }
                if *radius < T::zero() {
                    return Err("ball radius is negative".into());
                }
                Ok(())
            }
            ShapeExpr::Box { lower, upper } => {
                if lower.len() != dim || upper.len() != dim {
                    return Err(format!("box corners must have {dim} coordinates"));
                }
                Ok(())
            }
            ShapeExpr::HalfSpace { normal, .. } => {
                if normal.len() != dim {
                    return Err(format!("half-space normal must have {dim} coordinates"));
                }
                Ok(())
            }
            ShapeExpr::Union(parts) | ShapeExpr::Intersection(parts) => {
                parts.iter().try_for_each(|s| s.check_dimension(dim))
            }
            ShapeExpr::Complement(inner) => inner.check_dimension(dim),
            ShapeExpr::Difference(a, b) => {
                a.check_dimension(dim)?;
                b.check_dimension(dim)
            }
        }
    }

    /// Barycenter rule: the mask holds exactly the elements whose barycenter
    /// satisfies the predicate.
    pub fn region(&self, mesh: &Arc<Mesh<T>>) -> Region<T> {
        let mask = (0..mesh.num_elements())
            .map(|e| self.contains(mesh.barycenter(e)))
            .collect();
        Region::from_mask(mesh.clone(), mask).expect("mask length matches")
    }
}

/// Evaluates `shape` on `mesh` with the barycenter rule.
pub fn region_from_shape<T: Real>(mesh: &Arc<Mesh<T>>, shape: &ShapeExpr<T>) -> Region<T> {
    shape.region(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_mesh;

    fn square(n: usize) -> Arc<Mesh<f64>> {
        Arc::new(build_mesh(2, &[(0.0, 1.0), (0.0, 1.0)], &[n, n]).unwrap())
    }

    #[test]
    fn full_box_selects_everything() {
        let m = square(8);
        let r = ShapeExpr::cube(vec![-1.0, -1.0], vec![2.0, 2.0]).region(&m);
        assert!(r.mask().iter().all(|&b| b));
        assert!(ShapeExpr::Full.region(&m).mask().iter().all(|&b| b));
    }

    #[test]
    fn zero_radius_ball_is_empty() {
        let m = square(8);
        assert!(ShapeExpr::ball(vec![0.5, 0.5], 0.0).region(&m).is_empty());
    }

    #[test]
    fn disc_area_converges() {
        // area of the barycenter-rule disc vs πr², h ≤ r/32
        let r = 0.25;
        let m = square(128);
        let area = ShapeExpr::ball(vec![0.5, 0.5], r).region(&m).volume();
        let exact = std::f64::consts::PI * r * r;
        assert!(((area - exact) / exact).abs() < 0.02, "{area} vs {exact}");
    }

    #[test]
    fn json_round_trip() {
        let s: ShapeExpr<f64> = serde_json::from_str(
            r#"{"difference": [{"box": {"lower": [0, 0], "upper": [1, 1]}},
                                {"ball": {"center": [0.5, 0.5], "radius": 0.1}}]}"#,
        )
        .unwrap();
        assert!(s.contains(&[0.1, 0.1]));
        assert!(!s.contains(&[0.5, 0.55]));
        let back: ShapeExpr<f64> = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(back, s);
        let full: ShapeExpr<f64> = serde_json::from_str(r#""full""#).unwrap();
        assert_eq!(full, ShapeExpr::Full);
    }

    #[test]
    fn dimension_check() {
        let s = ShapeExpr::ball(vec![0.5], 0.2);
        assert!(s.check_dimension(1).is_ok());
        assert!(s.check_dimension(2).is_err());
    }
}
