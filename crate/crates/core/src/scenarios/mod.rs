//! Concrete sequences `(A_k, f_k)` with known limit pairs and expected gap
//! measures.

mod concentration;
mod homogenization;

use std::sync::Arc;

use log::warn;
use serde::{Deserialize, Serialize};

pub use concentration::{
    build_concentration, build_trap_set, Concentration, ConcentrationParams, ConcentrationTerm, Placement,
    RadiusSchedule, TrapSet,
};
pub use homogenization::{effective_tensor, effective_tensor_fn, homogenization_sequence, PeriodicPattern};

use crate::error::{Error, Result};
use crate::fem::{CoefficientField, SourceTerm, SymMatrix};
use crate::gap::{LazySequence, SequenceSpec, SequenceTerm, TabulatedSequence};
use crate::mesh::Mesh;
use crate::scalar::Real;

/// What the gap measure of a scenario is expected to be. Only consumed by
/// tests and reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpectedGap {
    Zero,
    /// `density · |U|`.
    Lebesgue { density: f64 },
    /// `weight` if the point lies in `U`, else zero.
    PointMass { center: Vec<f64>, weight: f64 },
    Custom(String),
}

impl ExpectedGap {
    pub fn describe(&self) -> String {
        match self {
            ExpectedGap::Zero => "zero".into(),
            ExpectedGap::Lebesgue { density } => format!("{density} x Lebesgue"),
            ExpectedGap::PointMass { center, weight } => format!("{weight} x point mass at {center:?}"),
            ExpectedGap::Custom(s) => s.clone(),
        }
    }
}

pub struct Scenario<T> {
    pub name: String,
    /// Declared ellipticity bounds of every generated coefficient.
    pub alpha: T,
    pub beta: T,
    pub sequence: SequenceSpec<T>,
    pub expected: ExpectedGap,
    /// Human-readable form of the mesh resolution rule.
    pub resolution_rule: String,
}

impl<T: Real> Scenario<T> {
    pub fn mesh(&self) -> &Arc<Mesh<T>> {
        self.sequence.mesh()
    }
}

/// Fails (or warns, with `allow_aliasing`) when some index breaks the
/// resolution rule `h ≤ 1/(16k)`.
fn enforce_resolution<T: Real>(mesh: &Mesh<T>, indices: &[usize], allow_aliasing: bool) -> Result<()> {
    for &k in indices {
        if let Some(issue) = oscillation_issue(mesh.h().as_f64(), k) {
            if allow_aliasing {
                warn!("{issue}");
            } else {
                return Err(Error::Aliasing(issue));
            }
        }
    }
    Ok(())
}

fn oscillation_issue(h: f64, k: usize) -> Option<String> {
    let limit = 1.0 / (16.0 * k as f64);
    (h > limit * (1.0 + 1e-12)).then(|| format!("k = {k} needs h <= {limit:.6e}, mesh has h = {h:.6e}"))
}

/// Stationary control: `A_k = A`, `f_k = f` for every index.
pub fn control_strong<T: Real>(coeff: CoefficientField<T>, source: SourceTerm<T>, indices: Vec<usize>) -> Result<Scenario<T>> {
    let (alpha, beta) = (coeff.alpha(), coeff.beta());
    let term = SequenceTerm::new(coeff, source)?;
    let gen = TabulatedSequence::stationary(term.clone(), &indices)?;
    Ok(Scenario {
        name: "control_strong".into(),
        alpha,
        beta,
        sequence: SequenceSpec::new(indices, Arc::new(gen), term)?,
        expected: ExpectedGap::Zero,
        resolution_rule: "none".into(),
    })
}

/// Cell averages of `amplitude · sin(k x)` on a 1D mesh.
fn oscillating_flux<T: Real>(mesh: &Arc<Mesh<T>>, amplitude: f64, k: usize) -> Result<SourceTerm<T>> {
    let kf = k as f64;
    let flux = (0..mesh.num_elements())
        .map(|e| {
            let nodes = mesh.element_nodes(e);
            let (a, b) = (mesh.node(nodes[0])[0].as_f64(), mesh.node(nodes[1])[0].as_f64());
            T::lit(amplitude * ((kf * a).cos() - (kf * b).cos()) / (kf * (b - a)))
        })
        .collect();
    SourceTerm::new(mesh.clone(), vec![T::zero(); mesh.num_elements()], flux)
}

fn oscillating_sequence<T: Real>(
    mesh: &Arc<Mesh<T>>,
    amplitude: f64,
    coeff_for: impl Fn(usize) -> Result<Arc<CoefficientField<T>>> + Send + Sync + 'static,
    shared: Option<Arc<CoefficientField<T>>>,
) -> LazySequence<T> {
    let m = mesh.clone();
    let h = mesh.h().as_f64();
    let seq = LazySequence::new(mesh.clone(), move |k| {
        SequenceTerm::shared(coeff_for(k)?, Arc::new(oscillating_flux(&m, amplitude, k)?))
    })
    .with_resolution_rule(move |k| oscillation_issue(h, k));
    match shared {
        Some(c) => seq.with_shared_coefficient(c),
        None => seq,
    }
}

fn require_1d<T: Real>(mesh: &Mesh<T>, what: &str) -> Result<()> {
    if mesh.dim() != 1 {
        return Err(Error::InvalidParameter(format!("{what} needs a 1D mesh, got dimension {}", mesh.dim())));
    }
    Ok(())
}

/// `A_k = 1`, `f_k = div(a·sin(kx))`; the limit pair is `(1, 0)` and the gap
/// measure is `(a²/4)·Lebesgue`.
pub fn oscillation_1d<T: Real>(
    mesh: Arc<Mesh<T>>,
    amplitude: f64,
    indices: Vec<usize>,
    allow_aliasing: bool,
) -> Result<Scenario<T>> {
    require_1d(&mesh, "oscillation_1d")?;
    if !amplitude.is_finite() {
        return Err(Error::InvalidParameter("amplitude must be finite".into()));
    }
    enforce_resolution(&mesh, &indices, allow_aliasing)?;
    let identity = Arc::new(CoefficientField::identity(mesh.clone()));
    let c = identity.clone();
    let gen = oscillating_sequence(&mesh, amplitude, move |_| Ok(c.clone()), Some(identity.clone()));
    let limit = SequenceTerm::shared(identity, Arc::new(SourceTerm::zero(mesh.clone())))?;
    Ok(Scenario {
        name: "oscillation_1d".into(),
        alpha: T::one(),
        beta: T::one(),
        sequence: SequenceSpec::new(indices, Arc::new(gen), limit)?,
        expected: ExpectedGap::Lebesgue { density: amplitude * amplitude / 4.0 },
        resolution_rule: "h <= 1/(16k)".into(),
    })
}

/// Pointwise-convergent coefficients `A_k = A + I/k` with the oscillating
/// sources of [`oscillation_1d`]. The limit source is the weak limit `0` of
/// `f_k`, so the gap measure is `(a²/(4A))·Lebesgue`.
pub fn pointwise_control<T: Real>(
    mesh: Arc<Mesh<T>>,
    base: f64,
    amplitude: f64,
    indices: Vec<usize>,
    allow_aliasing: bool,
) -> Result<Scenario<T>> {
    require_1d(&mesh, "pointwise_control")?;
    if !(base > 0.0) {
        return Err(Error::InvalidParameter("base coefficient must be positive".into()));
    }
    if indices.first() == Some(&0) {
        return Err(Error::InvalidParameter("pointwise_control indices start at 1".into()));
    }
    enforce_resolution(&mesh, &indices, allow_aliasing)?;
    let (alpha, beta) = (T::lit(base), T::lit(base + 1.0));
    let limit_coeff = Arc::new(CoefficientField::constant(mesh.clone(), SymMatrix::scalar(1, alpha), alpha, beta)?);
    let m = mesh.clone();
    let gen = oscillating_sequence(
        &mesh,
        amplitude,
        move |k| {
            let a = T::lit(base + 1.0 / k as f64);
            Ok(Arc::new(CoefficientField::constant(m.clone(), SymMatrix::scalar(1, a), alpha, beta)?))
        },
        None,
    );
    let limit = SequenceTerm::shared(limit_coeff, Arc::new(SourceTerm::zero(mesh.clone())))?;
    Ok(Scenario {
        name: "pointwise_control".into(),
        alpha,
        beta,
        sequence: SequenceSpec::new(indices, Arc::new(gen), limit)?,
        expected: ExpectedGap::Lebesgue { density: amplitude * amplitude / (4.0 * base) },
        resolution_rule: "h <= 1/(16k)".into(),
    })
}

/// Closed form of `α_k` for [`oscillation_1d`] on `U = (x₀, x₁)` with
/// continuous data: `½∫(h − c)²` with `h = a sin(kx)` and `c` its mean.
pub fn oscillation_alpha_exact(amplitude: f64, k: usize, x0: f64, x1: f64) -> f64 {
    let kf = k as f64;
    let len = x1 - x0;
    let mean_sin = ((kf * x0).cos() - (kf * x1).cos()) / (kf * len);
    let int_sin_sq = len / 2.0 - ((2.0 * kf * x1).sin() - (2.0 * kf * x0).sin()) / (4.0 * kf);
    0.5 * amplitude * amplitude * (int_sin_sq - len * mean_sin * mean_sin)
}

/// One entry of the scenario catalog.
pub struct CatalogEntry {
    pub name: &'static str,
    pub parameters: &'static str,
    pub expected: &'static str,
    pub reproduces: &'static str,
}

pub const CATALOG: &[CatalogEntry] = &[
    CatalogEntry {
        name: "control_strong",
        parameters: "coefficient (scalar or 2x2), source density, indices",
        expected: "zero",
        reproduces: "strong convergence of f_k gives a trivial gap (control case)",
    },
    CatalogEntry {
        name: "oscillation_1d",
        parameters: "amplitude a, indices k with h <= 1/(16k)",
        expected: "(a^2/4) x Lebesgue",
        reproduces: "one-dimensional weakly converging divergence-form sources",
    },
    CatalogEntry {
        name: "pointwise_control",
        parameters: "base coefficient A, amplitude a, indices k",
        expected: "(a^2/(4A)) x Lebesgue",
        reproduces: "pointwise convergent A_k leaves the limit source equal to the weak limit of f_k",
    },
    CatalogEntry {
        name: "concentration",
        parameters: "x0, inward normal, U0, outer radius R, radius schedule r_k, placement, indices",
        expected: "point mass of weight 1 at x0",
        reproduces: "concentration counterexample: gap 0 away from x0, 1 near x0, and nu(U0) = 0 < 1 = nu''(U0)",
    },
    CatalogEntry {
        name: "trap_set",
        parameters: "concentration parameters with disjoint placement",
        expected: "even split 1, odd split 0 on U = box minus odd balls",
        reproduces: "trap set on which no subsequence Gamma-converges",
    },
    CatalogEntry {
        name: "homogenization",
        parameters: "periodic pattern (constant, laminate, checkerboard), cell resolution, indices k, source density",
        expected: "zero, limit coefficient = effective tensor",
        reproduces: "periodic homogenization through cell problems (G-convergence of A(kx))",
    },
];

/// Stable, human-readable catalog listing.
pub fn catalog_text() -> String {
    let mut out = String::new();
    for e in CATALOG {
        out.push_str(&format!(
            "{}\n  parameters: {}\n  expected gap: {}\n  reproduces: {}\n",
            e.name, e.parameters, e.expected, e.reproduces
        ));
    }
    out
}
