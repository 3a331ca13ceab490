use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gap::{check_subadditivity, check_superadditivity, AdditivityCheck, GapOptions, SequenceSpec};
use crate::mesh::Mesh;
use crate::shape::ShapeExpr;

/// One randomly drawn configuration: disjoint boxes `V`, `W` and `V′ ⊂⊂ V`.
#[derive(Debug, Clone, Serialize)]
pub struct BoxSample {
    pub v: ShapeExpr<f64>,
    pub v_inner: ShapeExpr<f64>,
    pub w: ShapeExpr<f64>,
    /// Containment margin used for `V′ ⊂⊂ V`.
    pub margin: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SampledCheck {
    pub sample: usize,
    pub boxes: BoxSample,
    pub superadditivity: AdditivityCheck,
    pub subadditivity: AdditivityCheck,
}

/// Draws `n` box configurations on the mesh box. `V` and `W` sit on either
/// side of a random cut along the first axis; `V′` is `V` shrunk by `3h`.
pub fn sample_boxes(mesh: &Mesh<f64>, n: usize, seed: u64) -> Result<Vec<BoxSample>> {
    let h = mesh.h();
    let dim = mesh.dim();
    let (lo, hi): (Vec<f64>, Vec<f64>) = (mesh.lower().to_vec(), mesh.upper().to_vec());
    let len: Vec<f64> = (0..dim).map(|a| hi[a] - lo[a]).collect();
    if len.iter().any(|&l| l < 64.0 * h) {
        return Err(Error::InvalidParameter("sampled audit needs at least 64 cells per axis".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let cut = lo[0] + len[0] * rng.gen_range(0.3..0.7);
        let (mut vl, mut vu, mut wl, mut wu) = (vec![0.0; dim], vec![0.0; dim], vec![0.0; dim], vec![0.0; dim]);
        vl[0] = lo[0] + len[0] * rng.gen_range(0.0..0.1);
        vu[0] = cut - h - len[0] * rng.gen_range(0.0..0.02);
        wl[0] = cut + h + len[0] * rng.gen_range(0.0..0.02);
        wu[0] = hi[0] - len[0] * rng.gen_range(0.0..0.1);
        for a in 1..dim {
            vl[a] = lo[a] + len[a] * rng.gen_range(0.0..0.3);
            vu[a] = hi[a] - len[a] * rng.gen_range(0.0..0.3);
            wl[a] = lo[a] + len[a] * rng.gen_range(0.0..0.3);
            wu[a] = hi[a] - len[a] * rng.gen_range(0.0..0.3);
        }
        let il: Vec<f64> = vl.iter().map(|x| x + 3.0 * h).collect();
        let iu: Vec<f64> = vu.iter().map(|x| x - 3.0 * h).collect();
        out.push(BoxSample {
            v: ShapeExpr::cube(vl, vu),
            v_inner: ShapeExpr::cube(il, iu),
            w: ShapeExpr::cube(wl, wu),
            margin: h,
        });
    }
    Ok(out)
}

/// Runs both additivity inequalities on every sampled configuration.
pub fn sampled_additivity(
    seq: &SequenceSpec<f64>,
    samples: usize,
    seed: u64,
    tol: f64,
    opts: &GapOptions,
) -> Result<Vec<SampledCheck>> {
    let mesh = seq.mesh();
    sample_boxes(mesh, samples, seed)?
        .into_iter()
        .enumerate()
        .map(|(i, b)| {
            let (v, vi, w) = (b.v.region(mesh), b.v_inner.region(mesh), b.w.region(mesh));
            let superadditivity = check_superadditivity(seq, &v, &w, tol, opts)?;
            let subadditivity = check_subadditivity(seq, &vi, &v, &w, b.margin, tol, opts)?;
            Ok(SampledCheck { sample: i, boxes: b, superadditivity, subadditivity })
        })
        .collect()
}
