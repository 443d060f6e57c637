//! Seeded property checks. Proptest picks seeds and shapes; the systems are
//! built from those seeds so every failure can be replayed exactly.

mod common;

use common::*;
use lticlass::canonical::topological_canonical;
use lticlass::equivalence::{
    invariant_signature, is_nonsingular, linear_equivalent, topologically_equivalent, witness_residuals_ok,
};
use lticlass::linalg::{
    block_diag, expm, hcat, inverse, rank_with_tolerance, real_schur, reorder_schur, solve_affine_matrix_equation,
    solve_sylvester, Matrix, ToleranceConfig, Vector,
};
use lticlass::observability::{kalman_decompose, kalman_rank, observability_matrix};
use lticlass::spectral::spectral_split;
use lticlass::trajectory::{check_linear_witness, simulate_observation, uniform_grid};
use proptest::prelude::*;
use rand::Rng;

fn cfg() -> ToleranceConfig {
    ToleranceConfig::default()
}

fn shape() -> impl Strategy<Value = (u64, usize, usize)> {
    (any::<u64>(), 1usize..=5, 1usize..=2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn rank_survives_similarity((seed, n, _p) in shape()) {
        let mut rng = rng(seed);
        let k = rng.random_range(0..=n);
        let m = random_int_matrix(&mut rng, n, k, 3) * random_int_matrix(&mut rng, k, n, 3);
        let r = well_conditioned(&mut rng, n, 20.0);
        let conj = &r * &m * inverse(&r).unwrap();
        prop_assert_eq!(rank_with_tolerance(&conj, &cfg()), rank_with_tolerance(&m, &cfg()));
    }

    #[test]
    fn reordered_schur_keeps_factorization((seed, n, _p) in shape()) {
        let mut rng = rng(seed);
        let a = random_matrix(&mut rng, n + 1, n + 1, 2.0);
        let s = real_schur(&a).unwrap();
        let r = reorder_schur(&s, |b| if b.re > 0.0 { 0 } else { 1 }).unwrap();
        prop_assert!((r.reassemble() - &a).norm() <= 1e-12 * a.norm().max(1.0));
        let key = |e: &(f64, f64)| ((e.0 * 1e8).round() as i64, (e.1.abs() * 1e8).round() as i64);
        let mut before: Vec<_> = s.eigenvalues().iter().map(key).collect();
        let mut after: Vec<_> = r.eigenvalues().iter().map(key).collect();
        before.sort();
        after.sort();
        prop_assert_eq!(before, after);
        // Positive real parts first.
        let signs: Vec<bool> = r.blocks.iter().map(|b| b.re > 0.0).collect();
        prop_assert!(signs.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn homogeneous_sylvester_has_only_zero_solution((seed, n, p) in shape()) {
        let mut rng = rng(seed);
        let s1 = random_matrix(&mut rng, n, n, 1.0) + Matrix::identity(n, n) * 3.0;
        let s2 = random_matrix(&mut rng, p, p, 1.0) - Matrix::identity(p, p) * 3.0;
        let x = solve_sylvester(&s1, &s2, &Matrix::zeros(p, n), &cfg()).unwrap();
        prop_assert!(x.norm() <= cfg().tol_residual);
    }

    #[test]
    fn exponential_semigroup((seed, n, _p) in shape()) {
        let mut rng = rng(seed);
        let a = random_matrix(&mut rng, n, n, 1.5);
        let (s, t) = (rng.random_range(0.0..2.0), rng.random_range(0.0..2.0));
        let lhs = expm(&a, s) * expm(&a, t);
        let rhs = expm(&a, s + t);
        prop_assert!((lhs - &rhs).norm() <= 1e-8 * rhs.norm().max(1.0));
    }

    #[test]
    fn affine_solutions_satisfy_both_equations((seed, n, p) in shape()) {
        let mut rng = rng(seed);
        let base = block_system(&mut rng, n, p, ANY, 0.3);
        let r = well_conditioned(&mut rng, n, 20.0);
        let other = conjugate(&base, &r);
        let sol = solve_affine_matrix_equation(base.a(), other.a(), base.c(), other.c(), &cfg()).unwrap();
        prop_assert!(sol.particular.is_some());
        for _ in 0..100 {
            let coeffs: Vec<f64> = sol.null_basis.iter().map(|_| rng.random_range(-2.0..2.0)).collect();
            let pc = sol.combine(&coeffs).unwrap();
            let ra = (base.a() * &pc - &pc * other.a()).norm();
            let rc = (base.c() * &pc - other.c()).norm();
            let scale = pc.norm().max(1.0) * (base.a().norm() + other.a().norm()).max(1.0);
            prop_assert!(ra <= cfg().tol_residual * scale, "A residual {}", ra);
            prop_assert!(rc <= cfg().tol_residual * scale, "C residual {}", rc);
        }
    }

    #[test]
    fn observability_rank_is_additive_over_separated_blocks((seed, n, p) in shape()) {
        let mut rng = rng(seed);
        let n2 = rng.random_range(1..=3);
        let s1 = random_system(&mut rng, n, p, HYPERBOLIC, 0.4);
        let mut s2 = random_system(&mut rng, n2, p, HYPERBOLIC, 0.4);
        // Shift the second spectrum well away from the first.
        s2 = sys(s2.a() + Matrix::identity(n2, n2) * 10.0, s2.c().clone());
        let joint = sys(block_diag(&[s1.a(), s2.a()]), hcat(p, &[s1.c(), s2.c()]));
        prop_assert_eq!(kalman_rank(&joint, &cfg()), kalman_rank(&s1, &cfg()) + kalman_rank(&s2, &cfg()));
    }

    #[test]
    fn decomposition_isolates_observable_part((seed, n, p) in shape()) {
        let mut rng = rng(seed);
        let s = random_system(&mut rng, n, p, ANY, 0.4);
        let d = kalman_decompose(&s, &cfg());
        let obs = d.observable_part().unwrap();
        prop_assert_eq!(kalman_rank(&obs, &cfg()), d.k);
        prop_assert_eq!(observability_matrix(&obs).nrows(), p * d.k);
        let at = d.t.transpose() * s.a() * &d.t;
        let coupling = at.view((0, d.k), (d.k, n - d.k)).norm();
        prop_assert!(coupling <= cfg().tol_residual * s.a().norm().max(1.0), "coupling {}", coupling);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn split_reassembles_and_counts_survive_similarity((seed, n, p) in shape()) {
        let mut rng = rng(seed);
        let s = random_system(&mut rng, n, p, ANY, 0.3);
        let split = spectral_split(&s, &cfg()).unwrap();
        let a = s.a();
        let rebuilt = &split.p * split.block_diagonal() * &split.p_inv;
        prop_assert!((rebuilt - a).norm() <= cfg().tol_residual * a.norm().max(1.0));
        let c_blocks = hcat(p, &[&split.c0, &split.c_plus, &split.c_minus]);
        prop_assert!((s.c() * &split.p - c_blocks).norm() <= cfg().tol_residual * s.c().norm().max(1.0));

        let r = well_conditioned(&mut rng, n, 20.0);
        let moved = spectral_split(&conjugate(&s, &r), &cfg()).unwrap();
        prop_assert_eq!(moved.counts, split.counts);
    }

    #[test]
    fn kalman_rank_survives_similarity((seed, n, p) in shape()) {
        let mut rng = rng(seed);
        let s = random_system(&mut rng, n, p, ANY, 0.3);
        let r = well_conditioned(&mut rng, n, 20.0);
        prop_assert_eq!(kalman_rank(&conjugate(&s, &r), &cfg()), kalman_rank(&s, &cfg()));
    }

    #[test]
    fn signature_is_additive_and_similarity_invariant((seed, n, p) in shape()) {
        let mut rng = rng(seed);
        let s = random_system(&mut rng, n, p, ANY, 0.3);
        let sig = invariant_signature(&s, &cfg()).unwrap();
        prop_assert_eq!(sig.k_obs, sig.k0 + sig.k_plus + sig.k_minus);
        prop_assert_eq!(sig.n0 + sig.n_plus + sig.n_minus, n);
        let r = well_conditioned(&mut rng, n, 20.0);
        prop_assert_eq!(invariant_signature(&conjugate(&s, &r), &cfg()).unwrap(), sig);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn both_relations_are_reflexive_and_symmetric((seed, n, p) in shape()) {
        let mut rng = rng(seed);
        let s = random_system(&mut rng, n, p, ANY, 0.3);
        prop_assert!(linear_equivalent(&s, &s, &cfg()).unwrap().equivalent);
        prop_assert!(topologically_equivalent(&s, &s, &cfg()).unwrap().equivalent);

        let t = conjugate(&s, &well_conditioned(&mut rng, n, 20.0));
        for (x, y) in [(&s, &t), (&t, &s)] {
            prop_assert!(linear_equivalent(x, y, &cfg()).unwrap().equivalent);
            prop_assert!(topologically_equivalent(x, y, &cfg()).unwrap().equivalent);
        }
    }

    #[test]
    fn both_relations_are_transitive_on_chains((seed, n, p) in shape()) {
        let mut rng = rng(seed);
        let s = random_system(&mut rng, n, p, ANY, 0.3);
        let t = conjugate(&s, &well_conditioned(&mut rng, n, 10.0));
        let u = conjugate(&t, &well_conditioned(&mut rng, n, 10.0));
        let lin = |x, y| linear_equivalent(x, y, &cfg()).unwrap().equivalent;
        let top = |x, y| topologically_equivalent(x, y, &cfg()).unwrap().equivalent;
        prop_assert!(lin(&s, &t) && lin(&t, &u) && lin(&s, &u));
        prop_assert!(top(&s, &t) && top(&t, &u) && top(&s, &u));
    }

    #[test]
    fn witnesses_are_sound_and_reproduce_outputs((seed, n, p) in shape()) {
        let mut rng = rng(seed);
        let s = random_system(&mut rng, n, p, ANY, 0.3);
        let t = conjugate(&s, &well_conditioned(&mut rng, n, 20.0));
        let v = linear_equivalent(&s, &t, &cfg()).unwrap();
        let w = v.witness.expect("conjugate pair has a witness");
        prop_assert!(is_nonsingular(&w));
        prop_assert!(witness_residuals_ok(s.a(), t.a(), s.c(), t.c(), &w, &cfg()));
        let x0s: Vec<Vector> = (0..n).map(|i| Vector::from_fn(n, |j, _| if i == j { 1.0 } else { 0.0 })).collect();
        let check = check_linear_witness(&s, &t, &w, &x0s, &uniform_grid(2.0, 33), &cfg()).unwrap();
        prop_assert!(check.passed, "relative discrepancy {}", check.max_rel_discrepancy);
    }

    #[test]
    fn linear_implies_topological_and_equal_signatures((seed, n, p) in shape()) {
        let mut rng = rng(seed);
        let s = random_system(&mut rng, n, p, ANY, 0.3);
        let t = if rng.random_bool(0.5) {
            conjugate(&s, &well_conditioned(&mut rng, n, 20.0))
        } else {
            random_system(&mut rng, n, p, ANY, 0.3)
        };
        let lin = linear_equivalent(&s, &t, &cfg()).unwrap();
        let top = topologically_equivalent(&s, &t, &cfg()).unwrap();
        prop_assert!(!lin.equivalent || top.equivalent);
        if top.equivalent {
            prop_assert_eq!(invariant_signature(&s, &cfg()).unwrap(), invariant_signature(&t, &cfg()).unwrap());
        }
    }

    #[test]
    fn deciders_agree_on_center_only_pairs((seed, n, p) in shape()) {
        let mut rng = rng(seed);
        let s = random_system(&mut rng, n, p, CENTER, 0.3);
        let t = conjugate(&s, &well_conditioned(&mut rng, n, 20.0));
        let other = random_system(&mut rng, n, p, CENTER, 0.3);
        for u in [&t, &other] {
            let lin = linear_equivalent(&s, u, &cfg()).unwrap();
            let top = topologically_equivalent(&s, u, &cfg()).unwrap();
            prop_assert_eq!(lin.equivalent, top.equivalent);
        }
    }

    #[test]
    fn canonical_form_is_idempotent((seed, n, p) in shape()) {
        let mut rng = rng(seed);
        let s = random_system(&mut rng, n, p, ANY, 0.3);
        let form = topological_canonical(&s, &cfg()).unwrap();
        // Unstable entries of Ê come first.
        let diag: Vec<f64> = form.ehat.diagonal().iter().copied().collect();
        prop_assert!(diag.windows(2).all(|w| w[0] >= w[1]));
        if form.center_is_canonical {
            let again = topological_canonical(&form.assembled().unwrap(), &cfg()).unwrap();
            let tol = cfg().tol_residual;
            let a_scale = form.assembled_a.amax().max(1.0);
            prop_assert!((&again.assembled_a - &form.assembled_a).amax() <= tol * a_scale);
            prop_assert!((&again.assembled_c - &form.assembled_c).amax() <= tol * form.assembled_c.amax().max(1.0));
        }
    }
}

#[test]
fn restarted_simulation_matches_direct_run() {
    let mut rng = rng(77);
    for _ in 0..30 {
        let n = rng.random_range(1..=4);
        let s = random_system(&mut rng, n, 2, ANY, 0.0);
        let x0 = Vector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let direct = simulate_observation(&s, &x0, &uniform_grid(2.0, 21)).unwrap();
        let first = simulate_observation(&s, &x0, &uniform_grid(1.0, 11)).unwrap();
        let restart = first.states.last().unwrap().clone();
        let second = simulate_observation(&s, &restart, &uniform_grid(1.0, 11)).unwrap();
        let pieced: Vec<&Vector> = first.outputs.iter().chain(second.outputs.iter().skip(1)).collect();
        for (a, b) in direct.outputs.iter().zip(pieced) {
            assert!((a - b).amax() <= 1e-8 * a.amax().max(1.0));
        }
    }
}
