use std::collections::BTreeMap;
use std::sync::Arc;

use log::{info, warn};
use serde::{Deserialize, Serialize};

use super::{ExpectedGap, Scenario};
use crate::energy::h_minus_one_norm;
use crate::error::{Error, Result};
use crate::fem::{CoefficientField, SolverOptions, SourceTerm};
use crate::gap::{SequenceSpec, SequenceTerm, TabulatedSequence};
use crate::mesh::Mesh;
use crate::region::Region;
use crate::scalar::Real;
use crate::shape::ShapeExpr;

/// Radii `r_k` of the concentrating balls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RadiusSchedule {
    /// `r_k = R · 2^{−(k+2)}`.
    Dyadic,
    /// `r_k = first · ratio^{k−1}`.
    Geometric { first: f64, ratio: f64 },
    /// `r_k = radii[k − 1]`.
    Explicit { radii: Vec<f64> },
}

impl RadiusSchedule {
    pub fn radius(&self, outer: f64, k: usize) -> Option<f64> {
        match self {
            RadiusSchedule::Dyadic => Some(outer * 2f64.powi(-(k as i32 + 2))),
            RadiusSchedule::Geometric { first, ratio } => Some(first * ratio.powi(k as i32 - 1)),
            RadiusSchedule::Explicit { radii } => k.checked_sub(1).and_then(|i| radii.get(i).copied()),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match self {
            RadiusSchedule::Dyadic => true,
            RadiusSchedule::Geometric { first, ratio } => *first > 0.0 && *ratio > 0.0 && *ratio < 1.0,
            RadiusSchedule::Explicit { radii } => {
                radii.iter().all(|&r| r > 0.0) && radii.windows(2).all(|w| w[0] > w[1])
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter("radius schedule must be positive and strictly decreasing".into()))
        }
    }
}

/// How the ball centers `x_k` are chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum Placement {
    /// `x_k = x₀ + (R_k + 2h)·n`, pushed further inward until
    /// `B(x_k, R_k) ⊂⊂ U₀`.
    #[default]
    Normal,
    /// Greedy non-overlapping placement from the largest index outward, so
    /// that later balls sit closest to `x₀`. With `alternate_sides` the balls
    /// at odd and even positions of the retained list go to opposite sides
    /// (`+n` and `−n`). Directions within `max_angle_deg` of the side normal
    /// are tried in steps of 5 degrees.
    Disjoint {
        clearance: f64,
        #[serde(default)]
        alternate_sides: bool,
        #[serde(default)]
        max_angle_deg: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationParams<T> {
    pub x0: [f64; 2],
    pub inward_normal: [f64; 2],
    pub u0: ShapeExpr<T>,
    /// `R`, with `B(x₀, 2R) ⊂⊂ Ω`.
    pub outer_radius: f64,
    pub schedule: RadiusSchedule,
    #[serde(default)]
    pub placement: Placement,
    pub indices: Vec<usize>,
    /// Indices are retained only when `r_k ≥ min_cells_per_radius · h`.
    #[serde(default = "eight")]
    pub min_cells_per_radius: f64,
}

fn eight() -> f64 {
    8.0
}

/// Derived data for one index.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcentrationTerm {
    pub k: usize,
    pub r: f64,
    /// `c_k = √2 / ‖χ_{B(0,r_k)}‖_{H⁻¹(B(0,2R))}`.
    pub c: Option<f64>,
    pub chi_norm: Option<f64>,
    /// `∫ u_{g_k}²` over `B(0, 2R)`.
    pub u_l2_sq: Option<f64>,
    /// `R_k = r_k + 1/k + (∫ u_{g_k}²)^{1/4}`.
    pub big_r: Option<f64>,
    pub center: Option<[f64; 2]>,
    /// `‖f_k‖²_{H⁻¹(B(x_k, 2R))}` at the placed center.
    pub normalization: Option<f64>,
    pub retained: bool,
    pub note: String,
}

pub struct Concentration<T> {
    pub scenario: Scenario<T>,
    pub terms: Vec<ConcentrationTerm>,
    pub u0: Region<T>,
    pub x0: [f64; 2],
    pub outer_radius: f64,
}

impl<T: Real> Concentration<T> {
    pub fn retained(&self) -> Vec<&ConcentrationTerm> {
        self.terms.iter().filter(|t| t.retained).collect()
    }
}

fn ball<T: Real>(c: [f64; 2], r: f64) -> ShapeExpr<T> {
    ShapeExpr::ball(vec![T::lit(c[0]), T::lit(c[1])], T::lit(r))
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

fn snap<T: Real>(mesh: &Mesh<T>, p: [f64; 2]) -> [f64; 2] {
    let n = mesh.nearest_node(&[T::lit(p[0]), T::lit(p[1])]);
    let x = mesh.node(n);
    [x[0].as_f64(), x[1].as_f64()]
}

/// Elements whose barycenter lies in the open ball, found by scanning the
/// bounding box of grid squares.
fn elements_in_ball<T: Real>(mesh: &Mesh<T>, c: [f64; 2], r: f64) -> Vec<usize> {
    let res = mesh.resolution();
    let (lo, sp) = (mesh.lower(), mesh.spacing());
    let range = |a: usize| {
        let l = lo[a].as_f64();
        let s = sp[a].as_f64();
        let i0 = (((c[a] - r - l) / s).floor().max(0.0)) as usize;
        let i1 = ((((c[a] + r - l) / s).ceil()) as usize).min(res[a]);
        i0..i1
    };
    let mut out = Vec::new();
    for j in range(1) {
        for i in range(0) {
            let s = j * res[0] + i;
            for e in [2 * s, 2 * s + 1] {
                let b = mesh.barycenter(e);
                if dist([b[0].as_f64(), b[1].as_f64()], c) < r {
                    out.push(e);
                }
            }
        }
    }
    out
}

struct Placer<'a, T> {
    mesh: &'a Mesh<T>,
    /// Containment metric of `U₀` per element.
    hops: Vec<usize>,
    x0: [f64; 2],
    limit: f64,
}

impl<T: Real> Placer<'_, T> {
    /// `B(c, r) ⊂⊂ U₀` with a clearance of one cell.
    fn inside(&self, c: [f64; 2], r: f64) -> bool {
        let elems = elements_in_ball(self.mesh, c, r);
        !elems.is_empty() && elems.iter().all(|&e| self.hops[e] >= 2)
    }

    /// First snapped center along direction `dir` at distance ≥ `start` from
    /// `x₀` accepted by `ok`.
    fn along(&self, dir: [f64; 2], start: f64, ok: impl Fn([f64; 2]) -> bool) -> Option<([f64; 2], f64)> {
        let h = self.mesh.h().as_f64();
        let mut d = start;
        while d <= self.limit {
            let c = snap(self.mesh, [self.x0[0] + d * dir[0], self.x0[1] + d * dir[1]]);
            if dist(c, self.x0) >= start - 1e-9 * h && ok(c) {
                return Some((c, d));
            }
            d += h;
        }
        None
    }
}

fn rotate(v: [f64; 2], deg: f64) -> [f64; 2] {
    let (s, c) = deg.to_radians().sin_cos();
    [c * v[0] - s * v[1], s * v[0] + c * v[1]]
}

/// Builds the concentrating sequence `f_k = c_k·χ_{B(x_k, r_k)}` with limit
/// pair `(I, 0)`. Indices whose radius is unresolved, whose `R_k` reaches
/// `R`, or whose ball cannot be placed are kept in `terms` with a note but
/// left out of the sequence.
pub fn build_concentration<T: Real>(
    mesh: Arc<Mesh<T>>,
    params: &ConcentrationParams<T>,
    solver: &SolverOptions,
) -> Result<Concentration<T>> {
    if mesh.dim() != 2 {
        return Err(Error::InvalidParameter("the concentration scenario needs a 2D mesh".into()));
    }
    params.schedule.validate()?;
    params.u0.check_dimension(2).map_err(Error::InvalidParameter)?;
    let big_r = params.outer_radius;
    let h = mesh.h().as_f64();
    let n = params.inward_normal;
    let n_len = (n[0] * n[0] + n[1] * n[1]).sqrt();
    if !(n_len > 0.0) || !(big_r > 0.0) {
        return Err(Error::InvalidParameter("inward normal and outer radius must be non-zero".into()));
    }
    let normal = [n[0] / n_len, n[1] / n_len];
    if params.indices.is_empty() || params.indices[0] == 0 || params.indices.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("indices must be positive and strictly increasing".into()));
    }
    let x0 = params.x0;
    for a in 0..2 {
        let (lo, hi) = (mesh.lower()[a].as_f64(), mesh.upper()[a].as_f64());
        if x0[a] - 2.0 * big_r < lo + h || x0[a] + 2.0 * big_r > hi - h {
            return Err(Error::Infeasible(format!(
                "B(x0, 2R) with R = {big_r} is not compactly contained in the mesh box"
            )));
        }
    }

    let reference = snap(&mesh, x0);
    let outer = ball::<T>(reference, 2.0 * big_r).region(&mesh);
    let mut terms = Vec::with_capacity(params.indices.len());
    for &k in &params.indices {
        let mut t = ConcentrationTerm {
            k,
            r: params.schedule.radius(big_r, k).unwrap_or(f64::NAN),
            c: None,
            chi_norm: None,
            u_l2_sq: None,
            big_r: None,
            center: None,
            normalization: None,
            retained: false,
            note: String::new(),
        };
        if !(t.r >= params.min_cells_per_radius * h) {
            t.note = format!("r_k = {:.4e} below {} cells", t.r, params.min_cells_per_radius);
            terms.push(t);
            continue;
        }
        let chi = SourceTerm::indicator(&ball::<T>(reference, t.r).region(&mesh), T::one());
        let dual = h_minus_one_norm(&chi, &outer, solver)?;
        let norm = dual.norm.as_f64();
        let c = 2f64.sqrt() / norm;
        let l2 = c * c * dual.representative.l2_norm_sq().as_f64();
        let rk = t.r + 1.0 / k as f64 + l2.powf(0.25);
        t.c = Some(c);
        t.chi_norm = Some(norm);
        t.u_l2_sq = Some(l2);
        t.big_r = Some(rk);
        if rk >= big_r {
            t.note = format!("R_k = {rk:.4e} is not below R = {big_r}");
        } else {
            t.retained = true;
        }
        terms.push(t);
    }

    let u0 = params.u0.region(&mesh);
    let placer = Placer { mesh: &mesh, hops: u0.hops_to_complement(), x0, limit: 2.0 * big_r };
    place(&placer, &mut terms, &params.placement, normal, h);

    let identity = Arc::new(CoefficientField::identity(mesh.clone()));
    let mut table = BTreeMap::new();
    for t in terms.iter_mut().filter(|t| t.retained) {
        let center = t.center.expect("retained terms are placed");
        let support = ball::<T>(center, t.r).region(&mesh);
        let source = SourceTerm::indicator(&support, T::lit(t.c.expect("retained terms carry c_k")));
        let check = h_minus_one_norm(&source, &ball::<T>(center, 2.0 * big_r).region(&mesh), solver)?;
        t.normalization = Some(check.norm_sq().as_f64());
        table.insert(t.k, SequenceTerm::shared(identity.clone(), Arc::new(source))?);
    }
    if table.is_empty() {
        return Err(Error::Infeasible(format!(
            "no index retained (mesh h = {h}, R = {big_r}); {}",
            terms.iter().map(|t| format!("k={}: {}", t.k, t.note)).collect::<Vec<_>>().join("; ")
        )));
    }
    for t in &terms {
        if t.retained {
            info!("concentration k = {}: r = {:.4}, R_k = {:.4}, x_k = {:?}", t.k, t.r, t.big_r.unwrap_or(0.0), t.center);
        } else {
            warn!("concentration k = {} dropped: {}", t.k, t.note);
        }
    }
    let indices: Vec<usize> = table.keys().copied().collect();
    let gen = TabulatedSequence::new(mesh.clone(), table)?;
    let limit = SequenceTerm::shared(identity, Arc::new(SourceTerm::zero(mesh.clone())))?;
    let scenario = Scenario {
        name: "concentration".into(),
        alpha: T::one(),
        beta: T::one(),
        sequence: SequenceSpec::new(indices, Arc::new(gen), limit)?,
        expected: ExpectedGap::PointMass { center: x0.to_vec(), weight: 1.0 },
        resolution_rule: format!("r_k >= {} h", params.min_cells_per_radius),
    };
    Ok(Concentration { scenario, terms, u0, x0, outer_radius: big_r })
}

fn place<T: Real>(placer: &Placer<'_, T>, terms: &mut [ConcentrationTerm], placement: &Placement, normal: [f64; 2], h: f64) {
    match placement {
        Placement::Normal => {
            for t in terms.iter_mut().filter(|t| t.retained) {
                let rk = t.big_r.expect("retained terms carry R_k");
                match placer.along(normal, rk + 2.0 * h, |c| placer.inside(c, rk)) {
                    Some((c, _)) => t.center = Some(c),
                    None => {
                        t.retained = false;
                        t.note = "ball placement infeasible inside U0".into();
                    }
                }
            }
        }
        Placement::Disjoint { clearance, alternate_sides, max_angle_deg } => {
            let positions: Vec<usize> = (0..terms.len()).filter(|&i| terms[i].retained).collect();
            let mut placed: Vec<([f64; 2], f64)> = Vec::new();
            for (pos, &i) in positions.iter().enumerate().rev() {
                let rk = terms[i].big_r.expect("retained terms carry R_k");
                let side = if *alternate_sides && pos % 2 == 1 { [-normal[0], -normal[1]] } else { normal };
                let steps = (max_angle_deg / 5.0).floor().max(0.0) as i32;
                let mut best: Option<([f64; 2], f64)> = None;
                for s in 0..=2 * steps {
                    let angle = if s % 2 == 0 { (s / 2) as f64 * 5.0 } else { -((s + 1) / 2) as f64 * 5.0 };
                    let dir = rotate(side, angle);
                    let found = placer.along(dir, rk + clearance, |c| {
                        placed.iter().all(|&(p, rp)| dist(c, p) > rk + rp + clearance) && placer.inside(c, rk)
                    });
                    if let Some((c, d)) = found {
                        if best.is_none_or(|(_, bd)| d < bd - 1e-9) {
                            best = Some((c, d));
                        }
                    }
                }
                match best {
                    Some((c, _)) => {
                        terms[i].center = Some(c);
                        placed.push((c, rk));
                    }
                    None => {
                        terms[i].retained = false;
                        terms[i].note = "no disjoint placement found".into();
                    }
                }
            }
        }
    }
}

/// Trap set `U = Ω ∖ C` with `C` the union of the closed balls
/// `B(x_k, R_k)` at odd positions of the disjoint retained subsequence.
pub struct TrapSet<T> {
    pub region: Region<T>,
    pub removed: Region<T>,
    /// Disjoint retained indices, increasing.
    pub kept: Vec<usize>,
    /// Positions 2, 4, … of `kept`: balls inside `U`.
    pub even: Vec<usize>,
    /// Positions 1, 3, … of `kept`: balls removed from `U`.
    pub odd: Vec<usize>,
    pub sequence: SequenceSpec<T>,
}

pub fn build_trap_set<T: Real>(conc: &Concentration<T>) -> Result<TrapSet<T>> {
    let mesh = conc.scenario.mesh().clone();
    let h = mesh.h().as_f64();
    let mut kept: Vec<&ConcentrationTerm> = Vec::new();
    for t in conc.retained() {
        let (c, r) = (t.center.expect("placed"), t.big_r.expect("R_k"));
        // closed balls dilated by one layer must stay apart
        if kept.iter().all(|o| dist(c, o.center.expect("placed")) > r + o.big_r.expect("R_k") + 2.0 * h) {
            kept.push(t);
        } else {
            info!("trap set skips k = {} (overlapping ball)", t.k);
        }
    }
    if kept.len() < 4 {
        return Err(Error::Infeasible(format!(
            "trap set needs at least 4 disjoint balls, found {}",
            kept.len()
        )));
    }
    let mut removed = Region::empty(mesh.clone());
    let (mut even, mut odd) = (Vec::new(), Vec::new());
    for (pos, t) in kept.iter().enumerate() {
        if pos % 2 == 0 {
            let b = ball::<T>(t.center.expect("placed"), t.big_r.expect("R_k")).region(&mesh);
            removed = removed.union(&b.dilate())?;
            odd.push(t.k);
        } else {
            even.push(t.k);
        }
    }
    let region = removed.complement();
    let kept_idx: Vec<usize> = kept.iter().map(|t| t.k).collect();
    let sequence = conc.scenario.sequence.subsequence(kept_idx.clone())?;
    Ok(TrapSet { region, removed, kept: kept_idx, even, odd, sequence })
}
