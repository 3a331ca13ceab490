use std::fmt;
use std::sync::Arc;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sequence::{SequenceSpec, SequenceTerm};
use crate::error::{Error, Result};
use crate::fem::{assemble_load, CoefficientField, DirichletSystem, SolverOptions};
use crate::region::Region;
use crate::scalar::{dot, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Converged,
    NonConverged,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Converged => "converged",
            Verdict::NonConverged => "non-converged",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GapOptions {
    pub solver: SolverOptions,
    /// Number of trailing indices used for the limsup/liminf estimates;
    /// `None` means the last half of the index list (rounded up).
    pub tail_window: Option<usize>,
    pub tau_spread: f64,
}

impl Default for GapOptions {
    fn default() -> Self {
        GapOptions { solver: SolverOptions::default(), tail_window: None, tau_spread: 0.05 }
    }
}

impl GapOptions {
    pub fn window_for(&self, m: usize) -> usize {
        self.tail_window.unwrap_or(m.div_ceil(2)).clamp(1, m.max(1))
    }
}

/// Outcome of the solve at one index.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapEntry {
    pub k: usize,
    /// `α_k = Q_k(u_k^U, U)`.
    pub alpha_k: Option<f64>,
    /// `F_k(u_k^U, U)`, which equals `−α_k` up to solver tolerance.
    pub min_energy: Option<f64>,
    pub iterations: Option<usize>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapReport {
    pub region: String,
    pub entries: Vec<GapEntry>,
    /// `α = Q(u^U, U)` for the limit pair.
    pub alpha: Option<f64>,
    pub window: usize,
    /// `max` and `min` of `α_k − α` over the tail, before clamping at zero.
    pub nu_hi_raw: Option<f64>,
    pub nu_lo_raw: Option<f64>,
    /// `ν′` and `ν″` estimates, clamped so that `0 ≤ ν″ ≤ ν′`.
    pub nu_hi: Option<f64>,
    pub nu_lo: Option<f64>,
    pub spread: Option<f64>,
    pub verdict: Verdict,
    pub tau_spread: f64,
    pub aliasing: Vec<String>,
    pub failure: Option<String>,
}

impl GapReport {
    pub fn is_complete(&self) -> bool {
        self.failure.is_none() && self.nu_hi.is_some()
    }

    /// `α_k − α` over all indices, when every solve succeeded.
    pub fn gaps(&self) -> Option<Vec<f64>> {
        let alpha = self.alpha?;
        self.entries.iter().map(|e| e.alpha_k.map(|a| a - alpha)).collect()
    }

    fn tail_gaps(&self) -> Option<Vec<f64>> {
        let gaps = self.gaps()?;
        Some(gaps[gaps.len() - self.window..].to_vec())
    }

    pub fn nu_hi_value(&self) -> Result<f64> {
        self.nu_hi.ok_or_else(|| self.incomplete())
    }

    pub fn nu_lo_value(&self) -> Result<f64> {
        self.nu_lo.ok_or_else(|| self.incomplete())
    }

    fn incomplete(&self) -> Error {
        Error::Precondition(format!(
            "gap report for `{}` is incomplete: {}",
            self.region,
            self.failure.as_deref().unwrap_or("no estimates")
        ))
    }

    fn finish(&mut self) {
        if let Some(tail) = self.tail_gaps() {
            let hi = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lo = tail.iter().copied().fold(f64::INFINITY, f64::min);
            self.nu_hi_raw = Some(hi);
            self.nu_lo_raw = Some(lo);
            let (hi, lo) = (hi.max(0.0), lo.max(0.0));
            self.nu_hi = Some(hi);
            self.nu_lo = Some(lo);
            self.spread = Some(hi - lo);
        }
        self.verdict = gamma_verdict(self, self.tau_spread);
    }
}

/// Solver failure at some index: the error plus everything measured before it.
#[derive(Debug)]
pub struct GapFailure {
    pub partial: Box<GapReport>,
    pub error: Error,
}

impl fmt::Display for GapFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "region `{}`: {}", self.partial.region, self.error)
    }
}

impl std::error::Error for GapFailure {}

impl From<GapFailure> for Error {
    fn from(f: GapFailure) -> Error {
        f.error
    }
}

struct Measured {
    alpha: f64,
    min_energy: f64,
    iterations: usize,
}

fn measure<T: Real>(
    system: &DirichletSystem<T>,
    term: &SequenceTerm<T>,
) -> Result<Measured> {
    let b = assemble_load(&term.source, system.region())?;
    let sol = system.solve_load(&b)?;
    let x = sol.field.dofs();
    let alpha = system.energy(&sol.field)?;
    let pairing = dot(&b, &x);
    Ok(Measured {
        alpha: alpha.as_f64(),
        min_energy: (alpha - pairing).as_f64(),
        iterations: sol.stats.iterations,
    })
}

fn measure_term<T: Real>(
    shared: Option<&(Arc<CoefficientField<T>>, DirichletSystem<T>)>,
    term: &SequenceTerm<T>,
    region: &Region<T>,
    solver: &SolverOptions,
) -> Result<Measured> {
    match shared {
        Some((coeff, system)) if Arc::ptr_eq(coeff, &term.coeff) => measure(system, term),
        _ => measure(&DirichletSystem::assemble(&term.coeff, region, solver)?, term),
    }
}

/// `α_k = Q_k(u_k^U, U)` for one term.
pub fn measure_alpha<T: Real>(term: &SequenceTerm<T>, region: &Region<T>, solver: &SolverOptions) -> Result<f64> {
    measure_term(None, term, region, solver).map(|m| m.alpha)
}

/// Solves every `(A_k, f_k)` and the limit pair on `region` and fills the
/// `ν′`/`ν″` estimates. Index solves run in parallel on the current rayon
/// pool; the report is ordered by index regardless of completion order.
pub fn energy_gap<T: Real>(
    seq: &SequenceSpec<T>,
    region: &Region<T>,
    label: &str,
    opts: &GapOptions,
) -> Result<GapReport, GapFailure> {
    let indices = seq.indices();
    let mut report = GapReport {
        region: label.to_string(),
        entries: Vec::with_capacity(indices.len()),
        alpha: None,
        window: opts.window_for(indices.len()),
        nu_hi_raw: None,
        nu_lo_raw: None,
        nu_hi: None,
        nu_lo: None,
        spread: None,
        verdict: Verdict::Inconclusive,
        tau_spread: opts.tau_spread,
        aliasing: Vec::new(),
        failure: None,
    };
    let fail = |mut report: GapReport, error: Error| {
        report.failure = Some(error.to_string());
        report.verdict = Verdict::Inconclusive;
        Err(GapFailure { partial: Box::new(report), error })
    };
    if !region.mesh().same_as(seq.mesh()) {
        return fail(report, Error::MeshMismatch);
    }
    if region.num_dofs() == 0 {
        return fail(report, Error::EmptyRegion(label.to_string()));
    }
    for &k in indices {
        if let Some(issue) = seq.generator().resolution_issue(k) {
            warn!("region `{label}`, index {k}: {issue}");
            report.aliasing.push(format!("k = {k}: {issue}"));
        }
    }

    let shared = match seq.generator().shared_coefficient() {
        Some(coeff) => match DirichletSystem::assemble(&coeff, region, &opts.solver) {
            Ok(system) => Some((coeff, system)),
            Err(e) => return fail(report, e),
        },
        None => None,
    };
    let generator = seq.generator();
    let results: Vec<Result<Measured>> = indices
        .par_iter()
        .map(|&k| {
            let term = generator.term(k)?;
            measure_term(shared.as_ref(), &term, region, &opts.solver)
        })
        .collect();
    let limit = measure_term(shared.as_ref(), seq.limit(), region, &opts.solver);

    let mut first_error = None;
    for (&k, r) in indices.iter().zip(results) {
        let entry = match r {
            Ok(m) => GapEntry {
                k,
                alpha_k: Some(m.alpha),
                min_energy: Some(m.min_energy),
                iterations: Some(m.iterations),
                error: None,
            },
            Err(e) => {
                let entry = GapEntry {
                    k,
                    alpha_k: None,
                    min_energy: None,
                    iterations: None,
                    error: Some(e.to_string()),
                };
                first_error.get_or_insert(e);
                entry
            }
        };
        report.entries.push(entry);
    }
    match limit {
        Ok(m) => report.alpha = Some(m.alpha),
        Err(e) => {
            first_error.get_or_insert(e);
        }
    }
    if let Some(e) = first_error {
        return fail(report, e);
    }
    report.finish();
    Ok(report)
}

/// Converged iff the tail window has at least two entries, `spread ≤ τ` and
/// successive tail values change by at most `τ`. Non-converged iff the tails
/// of the even- and odd-position subsequences are separated by at least `3τ`.
/// Everything else, including incomplete reports, is inconclusive.
pub fn gamma_verdict(report: &GapReport, tau_spread: f64) -> Verdict {
    let Some(gaps) = report.gaps() else {
        return Verdict::Inconclusive;
    };
    let even: Vec<f64> = gaps.iter().step_by(2).copied().collect();
    let odd: Vec<f64> = gaps.iter().skip(1).step_by(2).copied().collect();
    if !even.is_empty() && !odd.is_empty() {
        let tail = |v: &[f64]| v[v.len() - v.len().div_ceil(2)..].to_vec();
        let (e, o) = (tail(&even), tail(&odd));
        let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
        let max = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let separation = (min(&e) - max(&o)).max(min(&o) - max(&e));
        if separation >= 3.0 * tau_spread {
            return Verdict::NonConverged;
        }
    }
    let tail = &gaps[gaps.len() - report.window.min(gaps.len())..];
    if tail.len() < 2 {
        return Verdict::Inconclusive;
    }
    let spread = report.spread.unwrap_or(f64::INFINITY);
    let flat = tail.windows(2).all(|w| (w[1] - w[0]).abs() <= tau_spread);
    if spread <= tau_spread && flat {
        Verdict::Converged
    } else {
        Verdict::Inconclusive
    }
}
