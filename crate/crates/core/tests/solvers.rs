mod common;

use common::{grid_neighbors, lawson_hanson, random_nonneg_matrix, reference_objective, sq_residual};
use gfra::solvers::{
    kkt_residual, nnls_solve, objective, prox_group_l2, regularized_solve, subgradient_oracle, RegularizedSolver,
    RegularizerKind, RegularizerSpec, SolverOptions,
};
use gfra::Error;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn tight() -> SolverOptions {
    SolverOptions {
        max_iters: 500_000,
        rel_tol: 1e-10,
        abs_tol: 1e-14,
        ..SolverOptions::default()
    }
}

fn instance(seed: u64, m: usize, n: usize) -> (DMatrix<f64>, DVector<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = random_nonneg_matrix(&mut rng, m, n, 0.4);
    let y = DVector::from_fn(m, |_, _| rng.random::<f64>() * 2.0);
    (a, y)
}

#[test]
fn nnls_trivial_examples() {
    let a = DMatrix::identity(3, 3);
    let y = DVector::from_vec(vec![1.0, -2.0, 0.5]);
    let r = nnls_solve(&a, &y, &tight()).unwrap();
    approx::assert_abs_diff_eq!(r.alpha_hat.as_slice(), [1.0, 0.0, 0.5].as_slice(), epsilon = 1e-9);
    approx::assert_abs_diff_eq!(r.objective, 4.0, epsilon = 1e-9);

    let zero = nnls_solve(&a, &DVector::zeros(3), &tight()).unwrap();
    assert!(zero.alpha_hat.iter().all(|&v| v == 0.0));
    assert_eq!(zero.objective, 0.0);
}

#[test]
fn nnls_matches_active_set_on_overdetermined_problems() {
    for seed in 0..20 {
        let (a, y) = instance(seed, 12, 6);
        let r = nnls_solve(&a, &y, &tight()).unwrap();
        let x = lawson_hanson(&a, &y);
        let want = sq_residual(&a, &x, &y);
        assert!((r.objective - want).abs() <= 1e-8 * want.max(1e-12), "seed {seed}");
        for (p, q) in r.alpha_hat.iter().zip(x.iter()) {
            assert!((p - q).abs() < 1e-6, "seed {seed}: {p} vs {q}");
        }
    }
}

#[test]
fn regularized_with_zero_lambda_is_nnls() {
    let (a, y) = instance(3, 6, 9);
    let nnls = nnls_solve(&a, &y, &tight()).unwrap();
    for reg in [
        RegularizerSpec::tv(grid_neighbors(3, false), 0.0),
        RegularizerSpec::glasso(grid_neighbors(3, true), 0.0),
    ] {
        let r = regularized_solve(&a, &y, &reg, &tight()).unwrap();
        assert_eq!(r.alpha_hat, nnls.alpha_hat);
    }
}

#[test]
fn regularized_matches_subgradient_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for seed in 0..4 {
        let (a, y) = instance(100 + seed, 6, 9);
        for reg in [
            RegularizerSpec::tv(grid_neighbors(3, false), 0.2),
            RegularizerSpec::glasso(grid_neighbors(3, false), 0.2),
        ] {
            let r = regularized_solve(&a, &y, &reg, &tight()).unwrap();
            let o = subgradient_oracle(&a, &y, &reg, 100_000, &mut rng).unwrap();
            let ours = reference_objective(&a, &y, &reg, &r.alpha_hat);
            let theirs = reference_objective(&a, &y, &reg, &o.alpha_hat);
            assert!(ours <= theirs * (1.0 + 1e-6), "{ours} vs {theirs}");
            assert!((ours - theirs).abs() <= 1e-3 * theirs);
            approx::assert_relative_eq!(ours, r.objective, max_relative = 1e-9);
            assert!(kkt_residual(&a, &y, &reg, &r.alpha_hat).unwrap() < 1e-5);
        }
    }
}

#[test]
fn huge_glasso_lambda_gives_zero() {
    let (a, y) = instance(5, 6, 9);
    let reg = RegularizerSpec::glasso(grid_neighbors(3, false), 1e6);
    let r = regularized_solve(&a, &y, &reg, &SolverOptions::default()).unwrap();
    assert!(r.alpha_hat.iter().all(|&v| v.abs() < 1e-6), "{:?}", r.alpha_hat);
}

#[test]
fn huge_tv_lambda_gives_constant_vector() {
    let (a, y) = instance(6, 6, 9);
    let reg = RegularizerSpec::tv(grid_neighbors(3, true), 1e4);
    let r = regularized_solve(&a, &y, &reg, &tight()).unwrap();
    // Best non-negative constant: c = max(0, 1^T A^T y / ||A 1||^2).
    let ones = DVector::from_element(9, 1.0);
    let a1 = &a * &ones;
    let c = (a1.dot(&y) / a1.norm_squared()).max(0.0);
    for v in &r.alpha_hat {
        assert!((v - c).abs() < 1e-4, "{v} vs {c}");
    }
}

#[test]
fn invalid_inputs_are_rejected() {
    let (a, y) = instance(7, 4, 5);
    let bad_y = DVector::zeros(3);
    assert!(matches!(nnls_solve(&a, &bad_y, &tight()), Err(Error::DimensionMismatch(_))));
    let neg = RegularizerSpec::tv(grid_neighbors(1, false), -1.0);
    assert!(matches!(neg.validate(1), Err(Error::InvalidRegularizer(_))));
    let mut weights = RegularizerSpec::glasso(vec![vec![0, 1], vec![2, 3, 4]], 0.1);
    weights.weights = vec![1.0, 0.0];
    assert!(matches!(
        regularized_solve(&a, &y, &weights, &tight()),
        Err(Error::InvalidRegularizer(_))
    ));
    let out_of_range = RegularizerSpec::glasso(vec![vec![0, 9]], 0.1);
    assert!(out_of_range.validate(5).is_err());
    let mut nan_y = y.clone();
    nan_y[0] = f64::NAN;
    assert!(nnls_solve(&a, &nan_y, &tight()).is_err());
}

#[test]
fn prox_examples() {
    approx::assert_relative_eq!(prox_group_l2(&[3.0, 4.0], 1.0).as_slice(), [2.4, 3.2].as_slice(), max_relative = 1e-15);
    assert_eq!(prox_group_l2(&[0.3, 0.4], 1.0), vec![0.0, 0.0]);
}

#[test]
fn history_is_recorded_and_exported() {
    let (a, y) = instance(8, 6, 9);
    let opts = SolverOptions {
        record_history: true,
        ..tight()
    };
    let reg = RegularizerSpec::tv(grid_neighbors(3, false), 0.1);
    let r = regularized_solve(&a, &y, &reg, &opts).unwrap();
    assert_eq!(r.history.len(), r.iterations);
    let mut buf = Vec::new();
    r.write_history_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("iteration,objective,residual\n"));
    assert_eq!(text.lines().count(), r.iterations + 1);
}

#[test]
fn factored_solver_reuses_structure_across_lambdas() {
    let (a, y) = instance(9, 6, 16);
    let spec = RegularizerSpec::tv(grid_neighbors(4, false), 0.0);
    let solver = RegularizedSolver::new(&a, &spec, &tight()).unwrap();
    for lambda in [0.05, 0.3] {
        let shared = solver.solve(&y, lambda, &tight()).unwrap();
        let fresh = regularized_solve(&a, &y, &spec.with_lambda(lambda), &tight()).unwrap();
        approx::assert_relative_eq!(shared.objective, fresh.objective, max_relative = 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn nnls_agrees_with_active_set(seed in any::<u64>(), m in 3usize..10, n in 3usize..14) {
        let (a, y) = instance(seed, m, n);
        let r = nnls_solve(&a, &y, &tight()).unwrap();
        let want = sq_residual(&a, &lawson_hanson(&a, &y), &y);
        prop_assert!(r.alpha_hat.iter().all(|&v| v >= 0.0));
        prop_assert!((r.objective - want).abs() <= 1e-6 * want.max(1e-12 * (1.0 + y.norm_squared())));
    }

    /// Scaling (A, y) by (c, c) scales the NNLS objective by c^2 and leaves
    /// the solution unchanged.
    #[test]
    fn nnls_scale_invariance(seed in any::<u64>(), c in 0.01f64..100.0) {
        let (a, y) = instance(seed, 8, 5);
        let r1 = nnls_solve(&a, &y, &tight()).unwrap();
        let r2 = nnls_solve(&(&a * c), &(&y * c), &tight()).unwrap();
        for (p, q) in r1.alpha_hat.iter().zip(&r2.alpha_hat) {
            prop_assert!((p - q).abs() <= 1e-6 * (1.0 + p.abs()));
        }
        prop_assert!((r2.objective - c * c * r1.objective).abs() <= 1e-6 * (1e-12 + c * c * r1.objective));
    }

    /// Along a lambda path the penalty of the minimizer cannot increase.
    #[test]
    fn penalty_is_nonincreasing_in_lambda(seed in any::<u64>(), glasso in any::<bool>()) {
        let (a, y) = instance(seed, 6, 9);
        let nb = grid_neighbors(3, false);
        let spec = if glasso { RegularizerSpec::glasso(nb, 0.0) } else { RegularizerSpec::tv(nb, 0.0) };
        let solver = RegularizedSolver::new(&a, &spec, &tight()).unwrap();
        let mut last = f64::INFINITY;
        for lambda in [0.01, 0.05, 0.2, 1.0] {
            let r = solver.solve(&y, lambda, &tight()).unwrap();
            let pen = spec.value(&r.alpha_hat).unwrap();
            prop_assert!(pen <= last * (1.0 + 1e-4) + 1e-7, "lambda {lambda}: {pen} > {last}");
            last = pen;
        }
    }

    #[test]
    fn objective_matches_direct_formula(seed in any::<u64>(), lambda in 0.0f64..2.0) {
        let (a, y) = instance(seed, 5, 9);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..9).map(|_| rng.random::<f64>()).collect();
        for spec in [
            RegularizerSpec::tv(grid_neighbors(3, true), lambda),
            RegularizerSpec::glasso(grid_neighbors(3, false), lambda),
        ] {
            let got = objective(&a, &y, &spec, &x).unwrap();
            let want = reference_objective(&a, &y, &spec, &x);
            prop_assert!((got - want).abs() <= 1e-10 * (1.0 + want));
        }
    }

    #[test]
    fn regularized_solution_is_nonnegative(seed in any::<u64>(), lambda in 0.0f64..1.0) {
        let (a, y) = instance(seed, 5, 9);
        for kind in [RegularizerKind::Tv, RegularizerKind::Glasso] {
            let nb = grid_neighbors(3, false);
            let spec = match kind {
                RegularizerKind::Tv => RegularizerSpec::tv(nb, lambda),
                _ => RegularizerSpec::glasso(nb, lambda),
            };
            let r = regularized_solve(&a, &y, &spec, &SolverOptions::default()).unwrap();
            prop_assert!(r.alpha_hat.iter().all(|&v| v >= 0.0));
        }
    }
}
