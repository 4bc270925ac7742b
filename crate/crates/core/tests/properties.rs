use std::f64::consts::PI;

use modlab_core::algebra::{bicommutant, commutant, is_cyclic, is_separating, AlgebraModel, AlgebraSpec};
use modlab_core::contour::{contour_apply, pole_sum, spectral_oracle, ContourSpec, QUAD_TOL};
use modlab_core::fixture::{generate_fixture, Fixture};
use modlab_core::flow::{analytic_flow, modular_flow, relative_commutator};
use modlab_core::linalg::{
    c, complex_power, conj, frobenius, hermitian_eig, inner, matrix_function, op_norm, AntilinearMap, ComplexMatrix,
    ComplexVector, Complex64,
};
use modlab_core::tidy::{operator_from_vector, TidyEngine, Window};
use modlab_core::tomita::{antiunitarity_residual, spectral_symmetry_residual};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn gaussian(rng: &mut ChaCha8Rng) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    c(re, im)
}

fn random_matrix(d: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    ComplexMatrix::from_fn(d, d, |_, _| gaussian(rng))
}

fn random_vector(d: usize, rng: &mut ChaCha8Rng) -> ComplexVector {
    ComplexVector::from_fn(d, |_, _| gaussian(rng))
}

fn random_element(basis: &[ComplexMatrix], rng: &mut ChaCha8Rng) -> ComplexMatrix {
    let d = basis[0].nrows();
    basis.iter().fold(ComplexMatrix::zeros(d, d), |acc, b| acc + b * gaussian(rng))
}

fn model_for(choice: u8) -> AlgebraModel {
    match choice % 6 {
        0 => AlgebraModel::StandardFactor { n: 2 },
        1 => AlgebraModel::StandardFactor { n: 3 },
        2 => AlgebraModel::MaximalAbelian { d: 4 },
        3 => AlgebraModel::MaximalAbelian { d: 6 },
        4 => AlgebraModel::DirectSum { blocks: vec![(2, 2), (1, 1)] },
        _ => AlgebraModel::DirectSum { blocks: vec![(1, 1), (1, 1), (2, 2)] },
    }
}

fn fixture(choice: u8, seed: u64) -> Fixture {
    generate_fixture(&AlgebraSpec { model: model_for(choice), seed }, 0.01).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn antilinear_composition_is_exact(seed in any::<u64>(), d in 2usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tn = AntilinearMap::new(random_matrix(d, &mut rng)).unwrap();
        let tm = AntilinearMap::new(random_matrix(d, &mut rng)).unwrap();
        let composed = tn.compose(&tm);
        for _ in 0..100 {
            let psi = random_vector(d, &mut rng);
            let chained = tn.apply(&tm.apply(&psi));
            prop_assert_eq!(&chained, &(&tn.matrix * (conj(&tm.matrix) * &psi)));
            prop_assert!((&chained - &composed * &psi).norm() <= 1e-14 * op_norm(&composed) * psi.norm() * d as f64);
        }
    }

    #[test]
    fn antilinear_adjoint_relation(seed in any::<u64>(), d in 2usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = AntilinearMap::new(random_matrix(d, &mut rng)).unwrap();
        let ta = t.adjoint();
        for _ in 0..100 {
            let psi = random_vector(d, &mut rng);
            let phi = random_vector(d, &mut rng);
            // ⟨φ, Tψ⟩ = ⟨ψ, T*φ⟩
            let lhs = inner(&phi, &t.apply(&psi));
            let rhs = inner(&psi, &ta.apply(&phi));
            prop_assert!((lhs - rhs).norm() <= 1e-12 * op_norm(&t.matrix) * psi.norm() * phi.norm());
        }
    }

    #[test]
    fn eig_identity_function_reconstructs(seed in any::<u64>(), d in 1usize..9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_matrix(d, &mut rng);
        let h = &g + g.adjoint();
        let back = matrix_function(&hermitian_eig(&h).unwrap(), |x| c(x, 0.0)).unwrap();
        prop_assert!(frobenius(&(back - &h)) <= 1e-12 * op_norm(&h) * d as f64);
    }

    #[test]
    fn complex_power_is_additive(seed in any::<u64>(), d in 1usize..6, r1 in -4.0f64..4.0, i1 in -5.0f64..5.0, r2 in -4.0f64..4.0, i2 in -5.0f64..5.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_matrix(d, &mut rng);
        let spec = hermitian_eig(&(&g * g.adjoint() + ComplexMatrix::identity(d, d).scale(0.5))).unwrap();
        let z1 = c(r1, i1);
        let z2 = c(r2, i2);
        let lhs = complex_power(&spec, z1).unwrap() * complex_power(&spec, z2).unwrap();
        let rhs = complex_power(&spec, z1 + z2).unwrap();
        let scale = op_norm(&complex_power(&spec, c(r1, 0.0)).unwrap()) * op_norm(&complex_power(&spec, c(r2, 0.0)).unwrap());
        prop_assert!(frobenius(&(lhs - rhs)) <= 1e-10 * scale);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn commutant_invariants(choice in 0u8..6, seed in any::<u64>()) {
        let f = fixture(choice, seed);
        let a = &f.algebra;
        prop_assert!(bicommutant(a).mutual_residual(a) <= 1e-9);
        let ap = commutant(a);
        prop_assert!(commutant(&commutant(&ap)).mutual_residual(&ap) <= 1e-9);
        prop_assert_eq!(a.dim(), f.dim());
        if matches!(f.spec.model, AlgebraModel::MaximalAbelian { .. }) {
            prop_assert!(ap.mutual_residual(a) <= 1e-9);
        }
    }

    #[test]
    fn cyclic_iff_commutant_separating(choice in 0u8..6, seed in any::<u64>()) {
        let model = model_for(choice);
        let a = model.algebra();
        let ap = commutant(&a);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let omega = if rng.random::<bool>() {
            random_vector(model.dim(), &mut rng)
        } else {
            // rank-deficient Schmidt vector
            let mut v = ComplexVector::zeros(model.dim());
            v[0] = c(1.0, 0.0);
            v
        };
        prop_assert_eq!(is_cyclic(&a, &omega).0, is_separating(&ap, &omega).0);
        prop_assert_eq!(is_separating(&a, &omega).0, is_cyclic(&ap, &omega).0);
    }

    #[test]
    fn tomita_invariants(choice in 0u8..6, seed in any::<u64>()) {
        let f = fixture(choice, seed);
        let m = &f.modular;
        let d = f.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let pairs: Vec<(ComplexVector, ComplexVector)> =
            (0..100).map(|_| (random_vector(d, &mut rng), random_vector(d, &mut rng))).collect();
        prop_assert!(antiunitarity_residual(&m.j, &pairs) <= 1e-10);
        prop_assert!(spectral_symmetry_residual(m) <= 1e-9);
        for x in &f.algebra.basis {
            let lhs = m.s.apply(&(x * &m.omega));
            prop_assert!((lhs - x.adjoint() * &m.omega).norm() <= m.tolerance(1e-9));
        }
    }

    #[test]
    fn flow_invariants(choice in 0u8..6, seed in any::<u64>(), s in -10.0f64..10.0, t in -10.0f64..10.0) {
        let f = fixture(choice, seed);
        let m = &f.modular;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 2);
        let x = random_matrix(f.dim(), &mut rng);
        let twice = modular_flow(m, &modular_flow(m, &x, s).unwrap(), t).unwrap();
        let once = modular_flow(m, &x, s + t).unwrap();
        prop_assert!(frobenius(&(twice - once)) <= 1e-10 * frobenius(&x) * m.kappa.sqrt());
        let g = modular_flow(m, &x, t).unwrap();
        let lhs = inner(&m.omega, &(&g * &m.omega));
        let rhs = inner(&m.omega, &(&x * &m.omega));
        prop_assert!((lhs - rhs).norm() <= 1e-10 * op_norm(&x));
    }

    #[test]
    fn analytic_flow_commutes_with_commutant(choice in 0u8..6, seed in any::<u64>(), re in -3.0f64..3.0, im in -6.0f64..6.0) {
        let f = fixture(choice, seed);
        let m = &f.modular;
        let e = TidyEngine::new(m, &f.algebra, &f.commutant).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 3);
        let src = random_element(&f.algebra.basis, &mut rng);
        let tidy = e.make_tidy(&src, m.delta_spec.min_eigenvalue() / 2.0, m.delta_spec.max_eigenvalue() * 2.0, 0).unwrap();
        let tol = m.tolerance(1e-9);
        for n in 0..=6 {
            for b in &f.commutant.basis {
                prop_assert!(relative_commutator(m, &tidy.a, b, c(n as f64, 0.0)).unwrap() <= tol);
            }
        }
        let sample = analytic_flow(m, &f.algebra, &tidy.a, c(re, im)).unwrap();
        prop_assert!(sample.membership_residual <= tol * m.kappa.powf(re.abs()));
        for b in &f.commutant.basis {
            prop_assert!(relative_commutator(m, &tidy.a, b, c(re, im)).unwrap() <= tol);
        }
    }

    #[test]
    fn tidy_paths_agree(choice in 0u8..6, seed in any::<u64>()) {
        let f = fixture(choice, seed);
        let m = &f.modular;
        let e = TidyEngine::new(m, &f.algebra, &f.commutant).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 4);
        let x = random_element(&f.algebra.basis, &mut rng);
        let back = operator_from_vector(&(&x * &m.omega), &f.algebra, &m.omega).unwrap();
        prop_assert!(frobenius(&(back - &x)) <= 1e-10 * frobenius(&x) * m.kappa.sqrt());

        let spec = &m.delta_spec;
        let w = Window::new(spec.min_eigenvalue() * 0.9, (spec.min_eigenvalue() * spec.max_eigenvalue()).sqrt().max(spec.min_eigenvalue() * 1.1)).unwrap();
        let tidy = e.make_tidy(&x, w.lo, w.hi, 1).unwrap();
        let scale = tidy.vector.norm().max(1e-300) * m.tolerance(1e-9);
        prop_assert!((&tidy.a * &m.omega - &tidy.vector).norm() <= scale);
        prop_assert!((&tidy.a_prime * &m.omega - &tidy.vector).norm() <= scale);
        prop_assert!(f.algebra.residual(&tidy.a) <= 1e-9 || frobenius(&tidy.a) < 1e-12);
        prop_assert!(f.commutant.residual(&tidy.a_prime) <= 1e-9 || frobenius(&tidy.a_prime) < 1e-12);
    }

    #[test]
    fn resolvent_bound_off_axis(choice in 0u8..6, seed in any::<u64>(), r in 0.05f64..20.0, theta in 0.01f64..(2.0 * PI - 0.01)) {
        let f = fixture(choice, seed);
        let e = TidyEngine::new(&f.modular, &f.algebra, &f.commutant).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 5);
        let ap = random_element(&f.commutant.basis, &mut rng);
        let z = Complex64::from_polar(r, theta);
        let (a, check) = e.resolvent_transfer(&ap, z).unwrap();
        prop_assert!(check.pass, "{:?}", check);
        prop_assert!(f.algebra.residual(&a) <= 1e-9);
        let src = random_element(&f.algebra.basis, &mut rng);
        let (_, mirrored) = e.resolvent_transfer_mirrored(&src, z).unwrap();
        prop_assert!(mirrored.pass, "{:?}", mirrored);
    }

    #[test]
    fn residue_closure(choice in 0u8..2, seed in any::<u64>(), n in 0u32..3, kexp in 0u32..4) {
        let f = fixture(choice, seed);
        let spec = &f.modular.delta_spec;
        let k = 1 << kexp;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 6);
        let psi = random_vector(f.dim(), &mut rng);
        let psi = psi.unscale(psi.norm());
        let lambda = 1.0 + 0.37 * rng.random::<f64>();
        let cs = ContourSpec::for_problem(spec, n, k, lambda, 2.0 * PI, QUAD_TOL).unwrap();
        let r = contour_apply(spec, n, k, lambda, &psi, &cs, QUAD_TOL).unwrap();
        let target = spectral_oracle(spec, n, k, lambda, &psi).unwrap() + pole_sum(spec, n, k, lambda, &psi, &cs).unwrap().0;
        prop_assert!((r.value - target).norm() <= 10.0 * QUAD_TOL);
    }
}
