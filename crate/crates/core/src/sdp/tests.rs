use approx::assert_abs_diff_eq;
use num_complex::Complex;
use proptest::prelude::*;

use super::*;
use crate::linalg::ComplexMatrix;

fn unit(n: usize, i: usize, j: usize) -> HermitianOperator<f64> {
    let mut e = vec![0.0; n * n];
    e[i * n + j] = 1.0;
    HermitianOperator::from_real(n, &e).unwrap()
}

fn trace_problem() -> BlockSdpProblem<f64> {
    let mut p = BlockSdpProblem::new(vec![BlockSpec::psd(2)]);
    p.add_objective(0, HermitianOperator::identity(2));
    p.add_constraint(vec![Term::new(0, unit(2, 0, 0))], 1.0);
    p.add_constraint(vec![Term::new(0, unit(2, 1, 1))], 2.0);
    p
}

fn assert_certified_optimal(sol: &SdpSolution<f64>) {
    assert_eq!(sol.status, SdpStatus::Optimal);
    assert!(sol.gap <= 1e-8, "gap {}", sol.gap);
    assert!(sol.primal_residual <= 1e-8);
    assert!(sol.dual_residual <= 1e-8);
}

#[test]
fn diagonal_forced_trace() {
    let sol = solve(&trace_problem()).unwrap();
    assert_certified_optimal(&sol);
    assert_abs_diff_eq!(sol.objective_value, 3.0, epsilon = 1e-7);
    assert_abs_diff_eq!(sol.blocks[0].get(0, 0).re, 1.0, epsilon = 1e-7);
    assert_abs_diff_eq!(sol.blocks[0].get(1, 1).re, 2.0, epsilon = 1e-7);
    assert!(sol.blocks[0].min_eigenvalue().unwrap() >= -1e-8);
}

#[test]
fn eigenvalue_extremum() {
    let mut p = BlockSdpProblem::new(vec![BlockSpec::psd(2)]);
    p.add_objective(0, HermitianOperator::diag(&[1.0, -1.0]));
    p.add_constraint(vec![Term::new(0, HermitianOperator::identity(2))], 1.0);
    let sol = solve(&p).unwrap();
    assert_certified_optimal(&sol);
    assert_abs_diff_eq!(sol.objective_value, 1.0, epsilon = 1e-7);
    assert!(sol.blocks[0].max_abs_diff(&HermitianOperator::diag(&[1.0, 0.0])) < 1e-4);
}

#[test]
fn contradictory_traces_are_certified_infeasible() {
    let mut p = BlockSdpProblem::new(vec![BlockSpec::psd(2)]);
    p.add_objective(0, HermitianOperator::identity(2));
    p.add_constraint(vec![Term::new(0, HermitianOperator::identity(2))], 1.0);
    p.add_constraint(vec![Term::new(0, HermitianOperator::identity(2))], 2.0);
    let sol = solve(&p).unwrap();
    assert_eq!(sol.status, SdpStatus::PrimalInfeasible);
    let cert = sol.certificate.expect("certificate");
    assert!(cert.margin() > 1e-8);
}

#[test]
fn negative_trace_is_infeasible_by_conic_farkas() {
    let mut p = BlockSdpProblem::new(vec![BlockSpec::psd(3)]);
    p.add_constraint(vec![Term::new(0, HermitianOperator::identity(3))], -1.0);
    let sol = solve(&p).unwrap();
    assert_eq!(sol.status, SdpStatus::PrimalInfeasible);
    let Some(Certificate::Farkas { y, margin, .. }) = sol.certificate else {
        panic!("expected Farkas certificate");
    };
    assert!(margin > 1e-8);
    // y * I must be negative semidefinite
    assert!(y[0] < 0.0);
}

#[test]
fn unbounded_trace_gives_improving_ray() {
    let mut p = BlockSdpProblem::new(vec![BlockSpec::psd(2)]);
    p.add_objective(0, HermitianOperator::identity(2));
    p.add_constraint(vec![Term::new(0, unit(2, 0, 0))], 1.0);
    let sol = solve(&p).unwrap();
    assert_eq!(sol.status, SdpStatus::DualInfeasible);
    let Some(Certificate::ImprovingRay { blocks, margin, .. }) = sol.certificate else {
        panic!("expected ray");
    };
    assert!(margin > 1e-8);
    assert!(blocks[0].min_eigenvalue().unwrap() >= -1e-8);
    assert!(blocks[0].get(0, 0).re.abs() < 1e-6);
}

#[test]
fn free_block_equalities() {
    // maximize <diag(1,-1), X> + tr(F) with X PSD, tr X = 1, F free with F = diag(2, 3)
    let mut p = BlockSdpProblem::new(vec![BlockSpec::psd(2), BlockSpec::free(2)]);
    p.add_objective(0, HermitianOperator::diag(&[1.0, -1.0]));
    p.add_objective(1, HermitianOperator::identity(2));
    p.add_constraint(vec![Term::new(0, HermitianOperator::identity(2))], 1.0);
    for (k, &v) in [2.0, 3.0].iter().enumerate() {
        p.add_constraint(vec![Term::new(1, unit(2, k, k))], v);
    }
    let off = HermitianOperator::from_real(2, &[0.0, 1.0, 1.0, 0.0]).unwrap();
    p.add_constraint(vec![Term::new(1, off)], 0.0);
    let im = HermitianOperator::new(
        ComplexMatrix::from_vec(
            2,
            2,
            vec![Complex::new(0.0, 0.0), Complex::new(0.0, -1.0), Complex::new(0.0, 1.0), Complex::new(0.0, 0.0)],
        )
        .unwrap(),
    )
    .unwrap();
    p.add_constraint(vec![Term::new(1, im)], 0.0);
    let sol = solve(&p).unwrap();
    assert_certified_optimal(&sol);
    assert_abs_diff_eq!(sol.objective_value, 6.0, epsilon = 1e-7);
    assert!(sol.blocks[1].max_abs_diff(&HermitianOperator::diag(&[2.0, 3.0])) < 1e-7);
}

#[test]
fn free_block_seen_only_through_its_trace() {
    // Three of F's four coordinates never enter a row, so the free columns
    // cannot be eliminated and the augmented system is solved instead.
    let mut p = BlockSdpProblem::new(vec![BlockSpec::psd(2), BlockSpec::free(2)]);
    p.add_objective(0, HermitianOperator::diag(&[1.0, -1.0]));
    p.add_objective(1, HermitianOperator::identity(2).scale(-1.0));
    p.add_constraint(vec![Term::new(0, HermitianOperator::identity(2))], 1.0);
    p.add_constraint(
        vec![Term::new(1, HermitianOperator::identity(2)), Term::new(0, HermitianOperator::identity(2).scale(-1.0))],
        0.0,
    );
    let sol = solve(&p).unwrap();
    assert_certified_optimal(&sol);
    assert_abs_diff_eq!(sol.objective_value, 0.0, epsilon = 1e-7);
    assert_abs_diff_eq!(sol.blocks[1].trace(), 1.0, epsilon = 1e-7);
}

#[test]
fn complex_coefficients_are_honoured() {
    // maximize <Y, X> with Y = sigma_y, tr X = 1: optimum is the top eigenvalue 1
    let y = HermitianOperator::new(
        ComplexMatrix::from_vec(
            2,
            2,
            vec![Complex::new(0.0, 0.0), Complex::new(0.0, -1.0), Complex::new(0.0, 1.0), Complex::new(0.0, 0.0)],
        )
        .unwrap(),
    )
    .unwrap();
    let mut p = BlockSdpProblem::new(vec![BlockSpec::psd(2)]);
    p.add_objective(0, y.clone());
    p.add_constraint(vec![Term::new(0, HermitianOperator::identity(2))], 1.0);
    let sol = solve(&p).unwrap();
    assert_certified_optimal(&sol);
    assert_abs_diff_eq!(sol.objective_value, 1.0, epsilon = 1e-7);
    assert_abs_diff_eq!(sol.blocks[0].inner(&y), 1.0, epsilon = 1e-6);
}

#[test]
fn duplicated_rows_are_tolerated() {
    let mut p = trace_problem();
    p.add_constraint(vec![Term::new(0, unit(2, 0, 0).scale(2.0))], 2.0);
    let sol = solve(&p).unwrap();
    assert_certified_optimal(&sol);
    assert_abs_diff_eq!(sol.objective_value, 3.0, epsilon = 1e-7);
    assert_eq!(sol.dual.len(), 3);
}

#[test]
fn scaling_preserves_status_and_scales_objective() {
    let base = trace_problem();
    let a = solve(&base).unwrap();
    let b = solve(&base.scaled(10.0)).unwrap();
    assert_eq!(a.status, b.status);
    // both b and C scale, so the optimum scales by the square
    assert_abs_diff_eq!(b.objective_value / 100.0, a.objective_value, epsilon = 1e-7);
}

#[test]
fn weak_duality_on_reported_solution() {
    let sol = solve(&trace_problem()).unwrap();
    assert!(sol.dual_bound >= sol.objective_value - 1e-9);
}

#[test]
fn json_round_trip() {
    let p = trace_problem();
    let doc = ProblemDocument::from_problem(&p);
    let text = serde_json::to_string(&doc).unwrap();
    let back: ProblemDocument = serde_json::from_str(&text).unwrap();
    assert_eq!(back.to_problem::<f64>().unwrap(), p);
    let sol = SolutionDocument::from_solution(&solve(&p).unwrap());
    let v = serde_json::to_value(&sol).unwrap();
    assert_eq!(v["status"], "optimal");
}

#[test]
fn single_precision_smoke() {
    let mut p = BlockSdpProblem::<f32>::new(vec![BlockSpec::psd(2)]);
    p.add_objective(0, HermitianOperator::diag(&[1.0, -1.0]));
    p.add_constraint(vec![Term::new(0, HermitianOperator::identity(2))], 1.0);
    let settings = SolverSettings {
        feasibility_tol: 1e-5,
        gap_tol: 1e-5,
        infeasibility_tol: 1e-5,
        rank_tol: 1e-5,
        ..SolverSettings::default()
    };
    let sol = solve_with(&p, &settings).unwrap();
    assert_eq!(sol.status, SdpStatus::Optimal);
    assert!((sol.objective_value - 1.0).abs() < 1e-4);
}

#[test]
fn rejects_mismatched_coefficients() {
    let mut p = BlockSdpProblem::new(vec![BlockSpec::psd(2)]);
    p.add_constraint(vec![Term::new(0, HermitianOperator::identity(3))], 1.0);
    assert!(solve(&p).is_err());
    let mut q = BlockSdpProblem::new(vec![BlockSpec::psd(2)]);
    q.add_constraint(vec![Term::new(1, HermitianOperator::identity(2))], 1.0);
    assert!(solve(&q).is_err());
}

fn hermitian(n: usize) -> impl Strategy<Value = HermitianOperator<f64>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), n * n).prop_map(move |v| {
        let m = ComplexMatrix::from_vec(n, n, v.into_iter().map(|(a, b)| Complex::new(a, b)).collect()).unwrap();
        HermitianOperator::new(m.add(&m.adjoint()).scale(0.5)).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn realification_preserves_spectrum(h in (1usize..5).prop_flat_map(hermitian)) {
        let direct = h.min_eigenvalue().unwrap();
        let real = h.realify().symmetric_eigenvalues().unwrap();
        prop_assert!((real[0] - direct).abs() < 1e-12);
        prop_assert!((real[0] - real[1]).abs() < 1e-12);
    }

    #[test]
    fn top_eigenvalue_by_sdp(h in (2usize..5).prop_flat_map(hermitian)) {
        let n = h.dim();
        let mut p = BlockSdpProblem::new(vec![BlockSpec::psd(n)]);
        p.add_objective(0, h.clone());
        p.add_constraint(vec![Term::new(0, HermitianOperator::identity(n))], 1.0);
        let sol = solve(&p).unwrap();
        prop_assert_eq!(sol.status, SdpStatus::Optimal);
        let top = *h.eigenvalues().unwrap().last().unwrap();
        prop_assert!((sol.objective_value - top).abs() < 1e-7);
        prop_assert!(sol.dual_bound >= sol.objective_value - 1e-9);
    }
}
