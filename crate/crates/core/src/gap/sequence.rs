use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fem::{CoefficientField, SourceTerm};
use crate::mesh::Mesh;
use crate::scalar::Real;

/// One pair `(A_k, f_k)` (or the limit pair `(A, g)`).
#[derive(Debug, Clone)]
pub struct SequenceTerm<T> {
    pub coeff: Arc<CoefficientField<T>>,
    pub source: Arc<SourceTerm<T>>,
}

impl<T: Real> SequenceTerm<T> {
    pub fn new(coeff: CoefficientField<T>, source: SourceTerm<T>) -> Result<Self> {
        Self::shared(Arc::new(coeff), Arc::new(source))
    }

    pub fn shared(coeff: Arc<CoefficientField<T>>, source: Arc<SourceTerm<T>>) -> Result<Self> {
        if !coeff.mesh().same_as(source.mesh()) {
            return Err(Error::MeshMismatch);
        }
        Ok(SequenceTerm { coeff, source })
    }

    pub fn mesh(&self) -> &Arc<Mesh<T>> {
        self.coeff.mesh()
    }
}

/// Produces `(A_k, f_k)` on demand.
pub trait SequenceGenerator<T: Real>: Send + Sync {
    fn mesh(&self) -> &Arc<Mesh<T>>;

    fn term(&self, k: usize) -> Result<SequenceTerm<T>>;

    /// Describes why the mesh cannot resolve index `k`, if it cannot.
    fn resolution_issue(&self, _k: usize) -> Option<String> {
        None
    }

    /// When every `A_k` is this one field, a single assembled system per
    /// region serves all indices.
    fn shared_coefficient(&self) -> Option<Arc<CoefficientField<T>>> {
        None
    }
}

/// Precomputed terms keyed by index.
pub struct TabulatedSequence<T> {
    mesh: Arc<Mesh<T>>,
    terms: BTreeMap<usize, SequenceTerm<T>>,
    shared: Option<Arc<CoefficientField<T>>>,
}

impl<T: Real> TabulatedSequence<T> {
    pub fn new(mesh: Arc<Mesh<T>>, terms: BTreeMap<usize, SequenceTerm<T>>) -> Result<Self> {
        if terms.values().any(|t| !t.mesh().same_as(&mesh)) {
            return Err(Error::MeshMismatch);
        }
        let shared = terms.values().next().map(|t| t.coeff.clone()).filter(|first| {
            terms.values().all(|t| Arc::ptr_eq(&t.coeff, first))
        });
        Ok(TabulatedSequence { mesh, terms, shared })
    }

    /// `A_k = A`, `f_k = f` for every listed index.
    pub fn stationary(term: SequenceTerm<T>, indices: &[usize]) -> Result<Self> {
        let mesh = term.mesh().clone();
        Self::new(mesh, indices.iter().map(|&k| (k, term.clone())).collect())
    }

    pub fn indices(&self) -> Vec<usize> {
        self.terms.keys().copied().collect()
    }
}

impl<T: Real> SequenceGenerator<T> for TabulatedSequence<T> {
    fn mesh(&self) -> &Arc<Mesh<T>> {
        &self.mesh
    }

    fn term(&self, k: usize) -> Result<SequenceTerm<T>> {
        self.terms
            .get(&k)
            .cloned()
            .ok_or_else(|| Error::InvalidParameter(format!("sequence has no term for index {k}")))
    }

    fn shared_coefficient(&self) -> Option<Arc<CoefficientField<T>>> {
        self.shared.clone()
    }
}

type TermFn<T> = dyn Fn(usize) -> Result<SequenceTerm<T>> + Send + Sync;
type CheckFn = dyn Fn(usize) -> Option<String> + Send + Sync;

/// Terms built lazily by a closure, with an optional resolution rule.
pub struct LazySequence<T> {
    mesh: Arc<Mesh<T>>,
    build: Box<TermFn<T>>,
    rule: Option<Box<CheckFn>>,
    shared: Option<Arc<CoefficientField<T>>>,
}

impl<T: Real> LazySequence<T> {
    pub fn new(
        mesh: Arc<Mesh<T>>,
        build: impl Fn(usize) -> Result<SequenceTerm<T>> + Send + Sync + 'static,
    ) -> Self {
        LazySequence { mesh, build: Box::new(build), rule: None, shared: None }
    }

    pub fn with_resolution_rule(mut self, rule: impl Fn(usize) -> Option<String> + Send + Sync + 'static) -> Self {
        self.rule = Some(Box::new(rule));
        self
    }

    pub fn with_shared_coefficient(mut self, coeff: Arc<CoefficientField<T>>) -> Self {
        self.shared = Some(coeff);
        self
    }
}

impl<T: Real> SequenceGenerator<T> for LazySequence<T> {
    fn mesh(&self) -> &Arc<Mesh<T>> {
        &self.mesh
    }

    fn term(&self, k: usize) -> Result<SequenceTerm<T>> {
        let t = (self.build)(k)?;
        if !t.mesh().same_as(&self.mesh) {
            return Err(Error::MeshMismatch);
        }
        Ok(t)
    }

    fn resolution_issue(&self, k: usize) -> Option<String> {
        self.rule.as_ref().and_then(|r| r(k))
    }

    fn shared_coefficient(&self) -> Option<Arc<CoefficientField<T>>> {
        self.shared.clone()
    }
}

/// Indices `k₁ < … < k_m`, a generator for `(A_k, f_k)` and the explicit
/// limit pair `(A, g)`.
#[derive(Clone)]
pub struct SequenceSpec<T> {
    indices: Vec<usize>,
    generator: Arc<dyn SequenceGenerator<T>>,
    limit: SequenceTerm<T>,
}

impl<T: Real> SequenceSpec<T> {
    pub fn new(indices: Vec<usize>, generator: Arc<dyn SequenceGenerator<T>>, limit: SequenceTerm<T>) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidParameter("index list is empty".into()));
        }
        if let Some(w) = indices.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(format!(
                "index list must be strictly increasing, found {} then {}",
                w[0], w[1]
            )));
        }
        if !limit.mesh().same_as(generator.mesh()) {
            return Err(Error::MeshMismatch);
        }
        Ok(SequenceSpec { indices, generator, limit })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn generator(&self) -> &Arc<dyn SequenceGenerator<T>> {
        &self.generator
    }

    pub fn limit(&self) -> &SequenceTerm<T> {
        &self.limit
    }

    pub fn mesh(&self) -> &Arc<Mesh<T>> {
        self.generator.mesh()
    }

    /// The same sequence along a sub-list of indices.
    pub fn subsequence(&self, indices: Vec<usize>) -> Result<Self> {
        if let Some(k) = indices.iter().find(|k| !self.indices.contains(k)) {
            return Err(Error::InvalidParameter(format!("index {k} is not part of the sequence")));
        }
        Self::new(indices, self.generator.clone(), self.limit.clone())
    }
}
