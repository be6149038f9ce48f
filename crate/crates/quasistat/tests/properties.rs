//! Property-based checks of the algebraic invariants: spectral resolution,
//! the block projection as an orthogonal projection, KMS symmetry of the
//! spectral densities, trace annihilation and Hermiticity preservation of
//! the generators, and detailed balance of random thermal scenarios.

use ndarray::Array2;
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use quasistat::lindblad::{spectral_density, Generators};
use quasistat::linalg::{hs_inner, max_abs, random_hermitian, trace};
use quasistat::model::{
    block_diag_project, build_atom, default_level_tol, gibbs_state, populations, CouplingSpec,
    SpectralForm,
};
use quasistat::scenarios::random_scenario;

fn hermitian(seed: u64, d: usize) -> Array2<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_hermitian(&mut rng, d)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn spectral_resolution_reconstructs_the_hamiltonian(seed in any::<u64>(), d in 2usize..6) {
        let h = hermitian(seed, d);
        let atom = build_atom(&h, default_level_tol(&h)).unwrap();
        let err = max_abs(&(&atom.hamiltonian() - &h));
        prop_assert!(err <= 1e-10 * (1.0 + max_abs(&h)));
        for j in 0..atom.level_count() {
            for k in 0..atom.level_count() {
                let prod = atom.projectors[j].dot(&atom.projectors[k]);
                let expect = if j == k {
                    atom.projectors[k].clone()
                } else {
                    Array2::zeros((d, d))
                };
                prop_assert!(max_abs(&(&prod - &expect)) < 1e-12);
            }
        }
    }

    #[test]
    fn block_projection_is_hs_orthogonal(seed in any::<u64>()) {
        let h = hermitian(seed, 4);
        let atom = build_atom(&h, default_level_tol(&h)).unwrap();
        let a = hermitian(seed.wrapping_add(1), 4);
        let b = hermitian(seed.wrapping_add(2), 4);
        let pa = block_diag_project(&a, &atom);
        let pb = block_diag_project(&b, &atom);
        // self-adjointness in the Hilbert-Schmidt inner product
        let lhs = hs_inner(&pa, &b);
        let rhs = hs_inner(&a, &pb);
        prop_assert!((lhs - rhs).norm() < 1e-12 * (1.0 + lhs.norm()));
        // idempotence and population preservation
        prop_assert!(max_abs(&(&block_diag_project(&pa, &atom) - &pa)) < 1e-13);
        let p0 = populations(&a, &atom);
        let p1 = populations(&pa, &atom);
        for (x, y) in p0.iter().zip(p1.iter()) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn spectral_density_satisfies_kms(
        c in 0.05f64..0.5,
        a in 0.2f64..1.5,
        beta in 0.1f64..3.0,
        x in -4.0f64..4.0,
    ) {
        let coupling = CouplingSpec::new(
            vec![Array2::eye(2)],
            vec![SpectralForm::ExpRadial { c, a }],
            beta,
        )
        .unwrap();
        let fp = spectral_density(&coupling, 0, x).unwrap();
        let fm = spectral_density(&coupling, 0, -x).unwrap();
        prop_assert!(fp >= 0.0);
        prop_assert!((fm - (-beta * x).exp() * fp).abs() < 1e-12 * (1.0 + fp + fm));
    }

    #[test]
    fn generators_annihilate_trace_and_preserve_hermiticity(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scenario = random_scenario(&mut rng, 3);
        let gens = Generators::build(&scenario).unwrap();
        for l in [&gens.free, &gens.pump, &gens.reservoir] {
            let scale = 1.0 + l.norm();
            prop_assert!(l.trace_annihilation_residual() < 1e-11 * scale);
            prop_assert!(l.hermiticity_preservation_residual() < 1e-11 * scale);
        }
        let x = random_hermitian(&mut rng, 3);
        prop_assert!(trace(&gens.reservoir.apply(&x)).norm() < 1e-11 * (1.0 + max_abs(&x)));
    }

    #[test]
    fn gibbs_state_is_stationary_for_the_reservoir(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scenario = random_scenario(&mut rng, 4);
        let gens = Generators::build(&scenario).unwrap();
        let rho_g = gibbs_state(&scenario.atom, scenario.coupling.beta);
        prop_assert!(max_abs(&gens.reservoir.apply(rho_g.matrix())) < 1e-10);
    }

    #[test]
    fn commutant_dimension_is_invariant_under_basis_change(seed in any::<u64>()) {
        use quasistat::lindblad::{Jump, JumpFamily};
        use quasistat::verify::{spohn_irreducibility, Witness};
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scenario = random_scenario(&mut rng, 3);
        let gens = Generators::build(&scenario).unwrap();
        let h = random_hermitian(&mut rng, 3);
        let u = quasistat::linalg::expm(&h.mapv(|z| z * C64::new(0.0, 1.0)));
        let rotated = JumpFamily {
            jumps: gens
                .jumps
                .jumps
                .iter()
                .map(|j| Jump {
                    v: u.dot(&j.v).dot(&quasistat::linalg::dagger(&u)),
                    ..j.clone()
                })
                .collect(),
            dim: 3,
            level_count: gens.jumps.level_count,
        };
        let d0 = match spohn_irreducibility(&gens.jumps).witness {
            Witness::CommutantDimension(d) => d,
            _ => unreachable!(),
        };
        let d1 = match spohn_irreducibility(&rotated).witness {
            Witness::CommutantDimension(d) => d,
            _ => unreachable!(),
        };
        prop_assert_eq!(d0, d1);
    }
}
