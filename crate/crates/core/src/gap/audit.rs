use serde::Serialize;

use super::report::{energy_gap, GapOptions};
use super::sequence::SequenceSpec;
use crate::error::{Error, Result};
use crate::region::{compactly_contained, Region};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AdditivityKind {
    Superadditivity,
    Subadditivity,
}

/// One inequality check with the values on both sides.
#[derive(Debug, Clone, Serialize)]
pub struct AdditivityCheck {
    pub kind: AdditivityKind,
    /// Superadditivity: `ν″(V∪W)`; subadditivity: `ν′(V′∪W)`.
    pub union_value: f64,
    /// The two single-region values on the other side of the inequality.
    pub parts: [f64; 2],
    pub tol: f64,
    pub pass: bool,
}

impl AdditivityCheck {
    /// Signed amount by which the inequality holds (negative on failure, before `tol`).
    pub fn slack(&self) -> f64 {
        let sum = self.parts[0] + self.parts[1];
        match self.kind {
            AdditivityKind::Superadditivity => self.union_value - sum,
            AdditivityKind::Subadditivity => sum - self.union_value,
        }
    }
}

fn lo<T: Real>(seq: &SequenceSpec<T>, r: &Region<T>, label: &str, opts: &GapOptions) -> Result<f64> {
    energy_gap(seq, r, label, opts).map_err(|f| f.error)?.nu_lo_value()
}

fn hi<T: Real>(seq: &SequenceSpec<T>, r: &Region<T>, label: &str, opts: &GapOptions) -> Result<f64> {
    energy_gap(seq, r, label, opts).map_err(|f| f.error)?.nu_hi_value()
}

/// `ν″(V∪W) ≥ ν″(V) + ν″(W) − tol` for disjoint `V`, `W`.
pub fn check_superadditivity<T: Real>(
    seq: &SequenceSpec<T>,
    v: &Region<T>,
    w: &Region<T>,
    tol: f64,
    opts: &GapOptions,
) -> Result<AdditivityCheck> {
    if !v.is_disjoint_from(w) {
        return Err(Error::Precondition("superadditivity needs disjoint regions".into()));
    }
    let union = v.union(w)?;
    let parts = [lo(seq, v, "V", opts)?, lo(seq, w, "W", opts)?];
    let union_value = lo(seq, &union, "V+W", opts)?;
    let pass = union_value >= parts[0] + parts[1] - tol;
    Ok(AdditivityCheck { kind: AdditivityKind::Superadditivity, union_value, parts, tol, pass })
}

/// `ν′(V′∪W) ≤ ν′(V) + ν′(W) + tol` for `V′ ⊂⊂ V` with the given margin.
pub fn check_subadditivity<T: Real>(
    seq: &SequenceSpec<T>,
    v_inner: &Region<T>,
    v: &Region<T>,
    w: &Region<T>,
    margin: T,
    tol: f64,
    opts: &GapOptions,
) -> Result<AdditivityCheck> {
    if !compactly_contained(v_inner, v, margin)?.holds {
        return Err(Error::Precondition(format!(
            "subadditivity needs V' compactly contained in V with margin {margin}"
        )));
    }
    let union = v_inner.union(w)?;
    let parts = [hi(seq, v, "V", opts)?, hi(seq, w, "W", opts)?];
    let union_value = hi(seq, &union, "V'+W", opts)?;
    let pass = union_value <= parts[0] + parts[1] + tol;
    Ok(AdditivityCheck { kind: AdditivityKind::Subadditivity, union_value, parts, tol, pass })
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanRow {
    pub t: f64,
    pub nu_hi: f64,
    pub nu_lo: f64,
    pub spread: f64,
    /// `spread > τ`: a candidate member outside the rich family.
    pub flagged: bool,
}

/// Gap estimates along a monotone family `U_t`. Successive members must be
/// compactly contained in each other with at least `margin`.
pub fn scan_monotone_family<T: Real>(
    seq: &SequenceSpec<T>,
    family: &[(f64, Region<T>)],
    margin: T,
    opts: &GapOptions,
) -> Result<Vec<ScanRow>> {
    let mut sorted: Vec<&(f64, Region<T>)> = family.iter().collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    for pair in sorted.windows(2) {
        if !compactly_contained(&pair[0].1, &pair[1].1, margin)?.holds {
            return Err(Error::Precondition(format!(
                "non-monotone family: U_{} is not compactly contained in U_{}",
                pair[0].0, pair[1].0
            )));
        }
    }
    sorted
        .iter()
        .map(|(t, region)| {
            let report = energy_gap(seq, region, &format!("t={t}"), opts).map_err(|f| f.error)?;
            let (nu_hi, nu_lo) = (report.nu_hi_value()?, report.nu_lo_value()?);
            let spread = nu_hi - nu_lo;
            Ok(ScanRow { t: *t, nu_hi, nu_lo, spread, flagged: spread > opts.tau_spread })
        })
        .collect()
}
