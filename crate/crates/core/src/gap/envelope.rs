use serde::Serialize;

use super::report::{energy_gap, GapFailure, GapOptions, GapReport};
use super::sequence::SequenceSpec;
use crate::error::{Error, Result};
use crate::region::{compactly_contained, Region};
use crate::scalar::Real;

/// How the family `V₁ ⊂⊂ … ⊂⊂ V_p ⊂⊂ U` is produced.
pub enum ShrinkPolicy<T> {
    /// `V_i = U` eroded by `margins[i]`; margins strictly decreasing.
    Erosion { margins: Vec<T> },
    /// Caller-supplied regions, innermost first, each compactly contained in
    /// the next (and the last in `U`) with the given margin.
    Explicit { regions: Vec<(String, Region<T>)>, margin: T },
}

#[derive(Debug, Clone, Serialize)]
pub struct EnvelopeMember {
    pub label: String,
    /// Clearance of this member inside `U`.
    pub margin: f64,
    pub report: GapReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct EnvelopeReport {
    pub target: GapReport,
    pub members: Vec<EnvelopeMember>,
    /// `max_i ν′est(V_i)`.
    pub envelope: f64,
    /// `ν″est(U) − envelope`.
    pub defect: f64,
}

fn check_chain<T: Real>(chain: &[(String, Region<T>, T)], u: &Region<T>, step: &[T]) -> Result<()> {
    for (i, (label, v, margin)) in chain.iter().enumerate() {
        if v.num_dofs() == 0 {
            return Err(Error::Precondition(format!("shrink family degenerate: `{label}` is empty")));
        }
        if !compactly_contained(v, u, *margin)?.holds {
            return Err(Error::Precondition(format!(
                "`{label}` is not compactly contained in the target with margin {margin}"
            )));
        }
        if let Some((next_label, next, _)) = chain.get(i + 1) {
            if !compactly_contained(v, next, step[i])?.holds {
                return Err(Error::Precondition(format!(
                    "`{label}` is not compactly contained in `{next_label}` with margin {}",
                    step[i]
                )));
            }
        }
    }
    Ok(())
}

/// Inner regular envelope `ν(U) ≈ max ν′est(V)` over a shrink family.
pub fn inner_envelope<T: Real>(
    seq: &SequenceSpec<T>,
    u: &Region<T>,
    label: &str,
    policy: &ShrinkPolicy<T>,
    opts: &GapOptions,
) -> Result<EnvelopeReport> {
    let h = u.mesh().h();
    let (chain, step): (Vec<(String, Region<T>, T)>, Vec<T>) = match policy {
        ShrinkPolicy::Erosion { margins } => {
            if margins.len() < 3 {
                return Err(Error::Precondition(format!(
                    "shrink family needs at least 3 members, got {}",
                    margins.len()
                )));
            }
            if margins.iter().any(|&m| m <= T::zero()) || margins.windows(2).any(|w| w[0] <= w[1]) {
                return Err(Error::Precondition("erosion margins must be positive and strictly decreasing".into()));
            }
            let chain = margins
                .iter()
                .enumerate()
                .map(|(i, &m)| (format!("{label}/V{}", i + 1), u.erode(m), m))
                .collect();
            // Erosion by m_i and m_{i+1} leaves at least m_i − m_{i+1} − h between the layers.
            let step = margins.windows(2).map(|w| (w[0] - w[1] - h).max(T::zero())).collect();
            (chain, step)
        }
        ShrinkPolicy::Explicit { regions, margin } => {
            if regions.len() < 3 {
                return Err(Error::Precondition(format!(
                    "shrink family needs at least 3 members, got {}",
                    regions.len()
                )));
            }
            let chain = regions.iter().map(|(l, r)| (l.clone(), r.clone(), *margin)).collect();
            (chain, vec![*margin; regions.len() - 1])
        }
    };
    check_chain(&chain, u, &step)?;

    let target = energy_gap(seq, u, label, opts).map_err(|f: GapFailure| f.error)?;
    let mut members = Vec::with_capacity(chain.len());
    for (l, v, m) in chain {
        let report = energy_gap(seq, &v, &l, opts).map_err(|f| f.error)?;
        members.push(EnvelopeMember { label: l, margin: m.as_f64(), report });
    }
    let envelope = members
        .iter()
        .map(|m| m.report.nu_hi_value())
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let defect = target.nu_lo_value()? - envelope;
    Ok(EnvelopeReport { target, members, envelope, defect })
}
