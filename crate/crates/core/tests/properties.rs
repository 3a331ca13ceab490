use std::sync::Arc;

use ggl::energy::{h_minus_one_inner, h_minus_one_norm, total_energy, PerturbedFunctional};
use ggl::fem::{
    pair_source, quadratic_energy, solve_dirichlet, CoefficientField, DiscreteField, SolverOptions, SourceTerm, SymMatrix,
};
use ggl::gap::{energy_gap, GapOptions, SequenceSpec, SequenceTerm, TabulatedSequence};
use ggl::mesh::{build_mesh, Mesh};
use ggl::region::{compactly_contained, Region};
use ggl::shape::ShapeExpr;
use proptest::prelude::*;

const N: usize = 12;

fn mesh() -> Arc<Mesh<f64>> {
    Arc::new(build_mesh(2, &[(0.0, 1.0), (0.0, 1.0)], &[N, N]).unwrap())
}

fn opts() -> SolverOptions {
    SolverOptions { tolerance: 1e-12, ..Default::default() }
}

fn source(m: &Arc<Mesh<f64>>, density: &[f64], flux: &[f64]) -> SourceTerm<f64> {
    let ne = m.num_elements();
    SourceTerm::new(m.clone(), density[..ne].to_vec(), flux[..2 * ne].to_vec()).unwrap()
}

fn coefficient(m: &Arc<Mesh<f64>>, diag: &[f64], off: &[f64]) -> CoefficientField<f64> {
    let entries = (0..m.num_elements())
        .map(|e| SymMatrix::new_2d(1.0 + diag[2 * e], 0.45 * off[e], 1.0 + diag[2 * e + 1]))
        .collect();
    CoefficientField::new(m.clone(), entries, 0.5, 4.0).unwrap()
}

fn ne() -> usize {
    2 * N * N
}

fn data() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (prop::collection::vec(-3.0..3.0f64, ne()), prop::collection::vec(-1.0..1.0f64, 2 * ne()))
}

fn coeff_data() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (prop::collection::vec(0.0..2.0f64, 2 * ne()), prop::collection::vec(-1.0..1.0f64, ne()))
}

fn shape() -> impl Strategy<Value = ShapeExpr<f64>> {
    (0.2..0.8f64, 0.2..0.8f64, 0.15..0.45f64).prop_map(|(x, y, r)| ShapeExpr::ball(vec![x, y], r))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn galerkin_orthogonality((g, h) in data(), (d, o) in coeff_data(), test in prop::collection::vec(-1.0..1.0f64, (N - 1) * (N - 1))) {
        let m = mesh();
        let region = Region::full(m.clone());
        let coeff = coefficient(&m, &d, &o);
        let f = source(&m, &g, &h);
        let u = solve_dirichlet(&coeff, &f, &region, &opts()).unwrap().field;
        let v = DiscreteField::from_dofs(&region, &test[..region.num_dofs()]).unwrap();
        // a(u, v) from the polarization of the quadratic form
        let q = |w: &DiscreteField<f64>| quadratic_energy(&coeff, w, &region).unwrap();
        let a_uv = q(&u.plus(&v).unwrap()) - q(&u) - q(&v);
        let rhs = pair_source(&f, &v, &region).unwrap();
        prop_assert!((a_uv - rhs).abs() <= 1e-8 * (1.0 + rhs.abs()), "{a_uv} vs {rhs}");
    }

    #[test]
    fn minimizer_beats_perturbations((g, h) in data(), (d, o) in coeff_data(), t in -1.0..1.0f64) {
        let m = mesh();
        let region = Region::full(m.clone());
        let func = PerturbedFunctional::new(coefficient(&m, &d, &o), source(&m, &g, &h), region.clone()).unwrap();
        let (u, value, _) = func.minimize(&opts()).unwrap();
        let bump = DiscreteField::interpolate(&region, |x| t * (x[0] * (1.0 - x[0]) * x[1] * (1.0 - x[1])));
        let other = total_energy(&func, &u.plus(&bump).unwrap()).unwrap();
        prop_assert!(value <= other + 1e-12 * value.abs().max(1.0));
    }

    #[test]
    fn stiffness_scales_with_the_coefficient((g, h) in data(), c in 0.25..8.0f64) {
        let m = mesh();
        let region = Region::full(m.clone());
        let f = source(&m, &g, &h);
        let id = CoefficientField::identity(m.clone());
        let scaled = CoefficientField::constant(m.clone(), SymMatrix::scalar(2, c), c, c).unwrap();
        let u1 = solve_dirichlet(&id, &f, &region, &opts()).unwrap().field;
        let uc = solve_dirichlet(&scaled, &f, &region, &opts()).unwrap().field;
        let diff = u1.scaled(1.0 / c).plus(&uc.scaled(-1.0)).unwrap().max_abs();
        prop_assert!(diff <= 1e-8 * u1.max_abs().max(1e-12) / c);
        let q1 = quadratic_energy(&id, &u1, &region).unwrap();
        let qc = quadratic_energy(&scaled, &uc, &region).unwrap();
        prop_assert!((q1 - c * qc).abs() <= 1e-8 * q1.max(1e-300));
    }

    #[test]
    fn energy_lies_within_ellipticity_bounds((d, o) in coeff_data(), test in prop::collection::vec(-1.0..1.0f64, (N - 1) * (N - 1))) {
        let m = mesh();
        let region = Region::full(m.clone());
        let coeff = coefficient(&m, &d, &o);
        let v = DiscreteField::from_dofs(&region, &test[..region.num_dofs()]).unwrap();
        let q = quadratic_energy(&coeff, &v, &region).unwrap();
        let grad = 0.5 * v.h1_seminorm_sq();
        prop_assert!(q >= 0.5 * grad * (1.0 - 1e-12) && q <= 4.0 * grad * (1.0 + 1e-12));
    }

    #[test]
    fn dual_norm_parallelogram((g1, h1) in data(), (g2, h2) in data(), s in shape()) {
        let m = mesh();
        let region = s.region(&m);
        prop_assume!(region.num_dofs() > 0);
        let (f1, f2) = (source(&m, &g1, &h1), source(&m, &g2, &h2));
        let sq = |f: &SourceTerm<f64>| h_minus_one_norm(f, &region, &opts()).unwrap().norm_sq();
        let lhs = sq(&f1.plus(&f2).unwrap()) + sq(&f1.plus(&f2.scaled(-1.0)).unwrap());
        let rhs = 2.0 * sq(&f1) + 2.0 * sq(&f2);
        prop_assert!((lhs - rhs).abs() <= 1e-8 * rhs.max(1e-12));
        let i12 = h_minus_one_inner(&f1, &f2, &region, &opts()).unwrap();
        let i21 = h_minus_one_inner(&f2, &f1, &region, &opts()).unwrap();
        prop_assert!((i12 - i21).abs() <= 1e-8 * rhs.max(1e-12));
    }

    #[test]
    fn dual_norm_is_monotone_in_the_region((g, h) in data(), s in shape(), extra in shape()) {
        let m = mesh();
        let small = s.region(&m);
        let big = small.union(&extra.region(&m)).unwrap();
        let f = source(&m, &g, &h);
        let a = h_minus_one_norm(&f, &small, &opts()).unwrap().norm;
        let b = h_minus_one_norm(&f, &big, &opts()).unwrap().norm;
        prop_assert!(a <= b * (1.0 + 1e-9) + 1e-12);
    }

    #[test]
    fn region_algebra(a in shape(), b in shape()) {
        let m = mesh();
        let (u, v) = (a.region(&m), b.region(&m));
        let lhs = u.union(&v).unwrap().complement();
        let rhs = u.complement().intersection(&v.complement()).unwrap();
        prop_assert!(lhs.same_set(&rhs));
        prop_assert!(u.difference(&v).unwrap().is_disjoint_from(&v));
        prop_assert!(u.is_subset_of(&u.dilate()));
        let inner = u.erode(2.0 / N as f64);
        prop_assert!(inner.is_subset_of(&u));
        if inner.num_elements() > 0 {
            prop_assert!(compactly_contained(&inner, &u, 2.0 / N as f64).unwrap().holds);
        }
    }

    #[test]
    fn gap_estimates_are_ordered(scales in prop::collection::vec(0.1..3.0f64, 2..8), s in shape()) {
        let m = mesh();
        let region = s.region(&m);
        prop_assume!(region.num_dofs() > 0);
        let identity = Arc::new(CoefficientField::identity(m.clone()));
        let table = scales
            .iter()
            .enumerate()
            .map(|(i, &c)| (i + 1, SequenceTerm::shared(identity.clone(), Arc::new(SourceTerm::constant_density(m.clone(), c))).unwrap()))
            .collect();
        let gen = TabulatedSequence::new(m.clone(), table).unwrap();
        let limit = SequenceTerm::shared(identity, Arc::new(SourceTerm::constant_density(m.clone(), 1.0))).unwrap();
        let seq = SequenceSpec::new((1..=scales.len()).collect(), Arc::new(gen), limit).unwrap();
        let r = energy_gap(&seq, &region, "U", &GapOptions::default()).unwrap();
        let (lo, hi) = (r.nu_lo.unwrap(), r.nu_hi.unwrap());
        prop_assert!(0.0 <= lo && lo <= hi);
        prop_assert!(r.nu_lo_raw.unwrap() <= r.nu_hi_raw.unwrap());
    }
}
