//! Set-function estimates `ν′`, `ν″` through the identity
//! `ν′(U) = limsup α_k − α`, `ν″(U) = liminf α_k − α` with
//! `α_k = Q_k(u_k^U, U)`, plus verdicts, inner envelopes and additivity audits.

mod audit;
mod envelope;
mod report;
mod sequence;

pub use audit::{check_subadditivity, check_superadditivity, scan_monotone_family, AdditivityCheck, AdditivityKind, ScanRow};
pub use envelope::{inner_envelope, EnvelopeMember, EnvelopeReport, ShrinkPolicy};
pub use report::{energy_gap, gamma_verdict, measure_alpha, GapEntry, GapFailure, GapOptions, GapReport, Verdict};
pub use sequence::{LazySequence, SequenceGenerator, SequenceSpec, SequenceTerm, TabulatedSequence};

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::fem::{CoefficientField, SourceTerm};
    use crate::mesh::build_mesh;
    use crate::region::Region;
    use crate::shape::ShapeExpr;

    fn stationary() -> SequenceSpec<f64> {
        let mesh = Arc::new(build_mesh::<f64>(2, &[(0.0, 1.0), (0.0, 1.0)], &[16, 16]).unwrap());
        let term = SequenceTerm::new(
            CoefficientField::identity(mesh.clone()),
            SourceTerm::constant_density(mesh, 1.0),
        )
        .unwrap();
        let gen = TabulatedSequence::stationary(term.clone(), &[1, 2, 3, 4]).unwrap();
        assert!(gen.shared_coefficient().is_some());
        SequenceSpec::new(vec![1, 2, 3, 4], Arc::new(gen), term).unwrap()
    }

    fn fake_report(gaps: &[f64], window: usize) -> GapReport {
        let entries = gaps
            .iter()
            .enumerate()
            .map(|(i, &g)| GapEntry { k: i + 1, alpha_k: Some(g), min_energy: Some(-g), iterations: Some(1), error: None })
            .collect();
        let tail = &gaps[gaps.len() - window..];
        let hi = tail.iter().copied().fold(f64::MIN, f64::max).max(0.0);
        let lo = tail.iter().copied().fold(f64::MAX, f64::min).max(0.0);
        GapReport {
            region: "R".into(),
            entries,
            alpha: Some(0.0),
            window,
            nu_hi_raw: Some(hi),
            nu_lo_raw: Some(lo),
            nu_hi: Some(hi),
            nu_lo: Some(lo),
            spread: Some(hi - lo),
            verdict: Verdict::Inconclusive,
            tau_spread: 0.05,
            aliasing: vec![],
            failure: None,
        }
    }

    #[test]
    fn stationary_sequence_has_zero_gap() {
        let seq = stationary();
        let region = Region::full(seq.mesh().clone());
        let r = energy_gap(&seq, &region, "box", &GapOptions::default()).unwrap();
        assert_eq!(r.window, 2);
        assert!(r.nu_hi.unwrap() < 1e-12 && r.spread.unwrap() < 1e-12);
        assert_eq!(r.verdict, Verdict::Converged);
        for e in &r.entries {
            let (a, m) = (e.alpha_k.unwrap(), e.min_energy.unwrap());
            assert!((a + m).abs() < 1e-9 * a);
        }
    }

    #[test]
    fn verdict_policy() {
        assert_eq!(gamma_verdict(&fake_report(&[1.0, 0.0, 1.0, 0.0, 1.0, 0.0], 3), 0.05), Verdict::NonConverged);
        assert_eq!(gamma_verdict(&fake_report(&[0.5, 0.5, 0.5, 0.5], 2), 0.05), Verdict::Converged);
        assert_eq!(gamma_verdict(&fake_report(&[0.5], 1), 0.05), Verdict::Inconclusive);
        // slowly drifting tail, spread 0.08 > τ
        assert_eq!(gamma_verdict(&fake_report(&[0.3, 0.34, 0.38, 0.42], 3), 0.05), Verdict::Inconclusive);
    }

    #[test]
    fn envelope_of_stationary_sequence_vanishes() {
        let seq = stationary();
        let u = ShapeExpr::ball(vec![0.5, 0.5], 0.45).region(seq.mesh());
        let policy = ShrinkPolicy::Erosion { margins: vec![0.25, 0.15, 0.0625] };
        let env = inner_envelope(&seq, &u, "ball", &policy, &GapOptions::default()).unwrap();
        assert_eq!(env.members.len(), 3);
        assert!(env.envelope.abs() < 1e-12 && env.defect.abs() < 1e-12);
    }

    #[test]
    fn degenerate_family_is_rejected() {
        let seq = stationary();
        let u = ShapeExpr::ball(vec![0.5, 0.5], 0.2).region(seq.mesh());
        let policy = ShrinkPolicy::Erosion { margins: vec![0.5, 0.3, 0.1] };
        assert!(inner_envelope(&seq, &u, "ball", &policy, &GapOptions::default()).is_err());
        let short = ShrinkPolicy::Erosion { margins: vec![0.1, 0.05] };
        assert!(inner_envelope(&seq, &u, "ball", &short, &GapOptions::default()).is_err());
    }

    #[test]
    fn additivity_checks_on_stationary_sequence() {
        let seq = stationary();
        let m = seq.mesh();
        let v = ShapeExpr::cube(vec![0.0, 0.0], vec![0.5, 1.0]).region(m);
        let w = ShapeExpr::cube(vec![0.5, 0.0], vec![1.0, 1.0]).region(m);
        let opts = GapOptions::default();
        assert!(check_superadditivity(&seq, &v, &w, 0.02, &opts).unwrap().pass);
        assert!(check_superadditivity(&seq, &v, &v, 0.02, &opts).is_err());
        let inner = v.erode(0.125);
        assert!(check_subadditivity(&seq, &inner, &v, &w, 0.0625, 0.02, &opts).unwrap().pass);
        assert!(check_subadditivity(&seq, &v, &v, &w, 0.0625, 0.02, &opts).is_err());
    }

    #[test]
    fn scan_rejects_non_monotone_family() {
        let seq = stationary();
        let m = seq.mesh();
        let family = vec![
            (0.2, ShapeExpr::ball(vec![0.5, 0.5], 0.2).region(m)),
            (0.4, ShapeExpr::ball(vec![0.5, 0.5], 0.4).region(m)),
        ];
        let rows = scan_monotone_family(&seq, &family, 0.0625, &GapOptions::default()).unwrap();
        assert!(rows.iter().all(|r| !r.flagged));
        let bad = vec![(0.2, family[1].1.clone()), (0.4, family[0].1.clone())];
        assert!(scan_monotone_family(&seq, &bad, 0.0625, &GapOptions::default()).is_err());
    }

    #[test]
    fn failed_solve_yields_partial_report() {
        let seq = stationary();
        let region = Region::full(seq.mesh().clone());
        let mut opts = GapOptions::default();
        opts.solver.max_iterations = 1;
        opts.solver.preconditioner = crate::fem::Preconditioner::None;
        let f = energy_gap(&seq, &region, "box", &opts).unwrap_err();
        assert_eq!(f.partial.entries.len(), 4);
        assert!(f.partial.entries.iter().all(|e| e.error.is_some()));
        assert!(f.partial.nu_hi.is_none());
    }
}
