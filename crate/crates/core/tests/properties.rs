use approx::assert_relative_eq;
use eqo::matrix::{eigenvalues, expm, logm, sqrtm};
use eqo::oracle::{apply_factorization, apply_heat, apply_shift, evolve_generator, GaussianState};
use eqo::reorder::{
    decompose, gauss_decompose, reconstruct_residual, symplectic_residual, transfer_matrix, QuadraticGenerator,
};
use eqo::{wire, ComplexMatrix};
use num_complex::Complex64;
use proptest::prelude::*;

fn complex(scale: f64) -> impl Strategy<Value = Complex64> {
    (-scale..scale, -scale..scale).prop_map(|(re, im)| Complex64::new(re, im))
}

fn matrix(n: usize, scale: f64) -> impl Strategy<Value = ComplexMatrix> {
    prop::collection::vec(complex(scale), n * n).prop_map(move |v| ComplexMatrix::new(n, n, v).unwrap())
}

fn generator(max_modes: usize, norm: f64) -> impl Strategy<Value = QuadraticGenerator> {
    (1..=max_modes)
        .prop_flat_map(|n| (matrix(n, 1.0), matrix(n, 1.0), matrix(n, 1.0)))
        .prop_map(move |(d1, f, d2)| {
            let g = QuadraticGenerator::new(d1.symmetrized(), f, d2.symmetrized()).unwrap();
            let r = g.r().norm_fro();
            if r > norm {
                g.scaled(Complex64::new(norm / r, 0.0))
            } else {
                g
            }
        })
}

fn has_healthy_t22(g: &QuadraticGenerator) -> bool {
    let t = transfer_matrix(g).unwrap();
    t.t22.det().unwrap().norm() > 0.05
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn logm_inverts_expm_near_zero(a in (1usize..=4).prop_flat_map(|n| matrix(n, 0.3))) {
        let back = logm(&expm(&a).unwrap()).unwrap();
        prop_assert!((&back - &a).max_abs() < 1e-12);
    }

    #[test]
    fn sqrtm_squares_back(a in (1usize..=4).prop_flat_map(|n| matrix(n, 0.2))) {
        let m = &ComplexMatrix::identity(a.rows()) + &a;
        let s = sqrtm(&m).unwrap();
        prop_assert!((&(&s * &s) - &m).max_abs() < 1e-12);
        // Principal root: spectrum in the open right half-plane.
        for l in eigenvalues(&s).unwrap() {
            prop_assert!(l.re > 0.0);
        }
    }

    #[test]
    fn transfer_matrix_is_symplectic(g in generator(3, 2.0)) {
        let t = transfer_matrix(&g).unwrap();
        prop_assert!(symplectic_residual(&t) < 1e-12);
    }

    #[test]
    fn decomposition_reconstructs(g in generator(3, 1.5).prop_filter("singular T22", has_healthy_t22)) {
        let t = transfer_matrix(&g).unwrap();
        let f = gauss_decompose(&t).unwrap();
        prop_assert!(reconstruct_residual(&f, &t).unwrap() < 1e-9);
        prop_assert!(f.w.asymmetry() < 1e-12 && f.z.asymmetry() < 1e-12);
        // exp(-tr Y) = det T22, so prefactor^2 det T22 = 1.
        let det = t.t22.det().unwrap();
        assert_relative_eq!((f.prefactor * f.prefactor * det).re, 1.0, epsilon = 1e-9);
        prop_assert!((f.prefactor * f.prefactor * det).im.abs() < 1e-9);
    }

    #[test]
    fn inverse_generator_undoes_the_factorization(g in generator(2, 0.6)) {
        let inv = g.scaled(Complex64::new(-1.0, 0.0));
        let start = GaussianState::vacuum(g.modes());
        let there = apply_factorization(&decompose(&g).unwrap(), &start).unwrap();
        let back = apply_factorization(&decompose(&inv).unwrap(), &there).unwrap();
        prop_assert!(back.distance(&start) < 1e-9);
    }

    #[test]
    fn factored_action_matches_the_flow(g in generator(2, 0.5)) {
        let start = GaussianState::vacuum(g.modes());
        let factored = apply_factorization(&decompose(&g).unwrap(), &start).unwrap();
        let flowed = evolve_generator(&g, &start, 400).unwrap();
        prop_assert!(factored.distance(&flowed) < 1e-8);
    }

    #[test]
    fn heat_kernels_compose(z1 in matrix(2, 0.2), z2 in matrix(2, 0.2)) {
        let (z1, z2) = (z1.symmetrized(), z2.symmetrized());
        let start = GaussianState::vacuum(2);
        let stepwise = apply_heat(&z2, &apply_heat(&z1, &start).unwrap()).unwrap();
        let direct = apply_heat(&(&z1 + &z2), &start).unwrap();
        prop_assert!(stepwise.distance(&direct) < 1e-12);
    }

    #[test]
    fn shift_translates_the_wavefunction(s in prop::collection::vec(complex(0.5), 2), x in prop::collection::vec(complex(0.5), 2)) {
        let start = GaussianState::vacuum(2);
        let shifted = apply_shift(&s, &start);
        let moved: Vec<Complex64> = x.iter().zip(&s).map(|(a, b)| a + b).collect();
        let (lhs, rhs) = (shifted.evaluate(&x), start.evaluate(&moved));
        prop_assert!((lhs - rhs).norm() < 1e-13 * rhs.norm().max(1.0));
    }

    #[test]
    fn wire_matrices_round_trip(m in (1usize..=3).prop_flat_map(|n| matrix(n, 10.0))) {
        let text = serde_json::to_string(&wire::matrix_to_json(&m)).unwrap();
        let value: serde_json::Value = serde_json::from_str(&text).unwrap();
        let back = wire::matrix_from_json(&value, "m").unwrap();
        // serde_json float parsing is within an ulp or so.
        prop_assert!((&back - &m).max_abs() <= 1e-15 * m.max_abs().max(1.0));
    }
}
