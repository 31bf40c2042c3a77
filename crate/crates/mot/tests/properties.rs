//! Cross-module invariants on randomized instances: weak duality, gauge
//! freedom, gluing, the splitting/monotonicity/optimality triangle, shift
//! covariance of the simplex, and determinism of the CLI reports.

use mot::certify::{check_cyclical_monotonicity, check_splitting, duality_gap, extract_support, GapVerdict};
use mot::conjugacy::improve_sweep;
use mot::fixtures::{random_admissible_family, random_coupled, random_instance_with_dims};
use mot::lp::{build_lp, enumerate_vertices, solve_instance, solve_primal, SolveOptions};
use mot::potential::{eval_dual_value, slack_tensor};
use mot::scalar::{Rational, Scalar};
use mot::tensor::eval_primal_cost;
use mot::truncation::{glue, restrict_renormalize, select_core_sets};
use mot::CostTensor;
use num::Zero;
use proptest::prelude::*;

fn small_dims() -> impl Strategy<Value = Vec<usize>> {
    proptest::collection::vec(2usize..4, 3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Any admissible family is outvalued by any coupling with the right
    /// marginals, with no tolerance: exact rationals, exact inequality.
    #[test]
    fn weak_duality_holds_exactly(seed in 0u64..100_000, dims in small_dims()) {
        let (coupling, measures) = random_coupled::<Rational>(seed, &dims);
        let cost = random_instance_with_dims::<Rational>(seed ^ 0xa5a5, &dims).1;
        let family = random_admissible_family::<Rational>(seed, &cost);
        let dual = eval_dual_value(&family, &measures).unwrap();
        let primal = eval_primal_cost(&coupling, &cost).unwrap();
        prop_assert!(dual <= primal, "J = {dual} exceeded I = {primal}");
    }

    /// Shifting the potentials by constants that sum to zero changes
    /// neither the dual value nor any slack entry.
    #[test]
    fn gauge_shifts_are_invisible(
        seed in 0u64..100_000,
        dims in small_dims(),
        p1 in -9i64..10, q1 in 1i64..6,
        p2 in -9i64..10, q2 in 1i64..6,
    ) {
        let (measures, cost) = random_instance_with_dims::<Rational>(seed, &dims);
        let family = random_admissible_family::<Rational>(seed, &cost);
        let t1 = Rational::ratio(p1, q1);
        let t2 = Rational::ratio(p2, q2);
        let t3 = Rational::zero() - &t1 - &t2;
        let shifted = family.shifted(&[t1, t2, t3]);

        let j0 = eval_dual_value(&family, &measures).unwrap();
        let j1 = eval_dual_value(&shifted, &measures).unwrap();
        prop_assert_eq!(j0, j1);
        prop_assert_eq!(slack_tensor(&family, &cost), slack_tensor(&shifted, &cost));
    }

    /// Restricting a plan to its high-mass core and gluing the rescaled
    /// core plan back over it reproduces the original marginals exactly.
    #[test]
    fn gluing_preserves_marginals(seed in 0u64..100_000, dims in small_dims(), denom in 4i64..12) {
        let (pi, measures) = random_coupled::<Rational>(seed, &dims);
        let eps = Rational::ratio(1, denom);
        let core = select_core_sets(&measures, &eps).unwrap();
        let (core_plan, _) = restrict_renormalize(&pi, &core, &measures).unwrap();
        let glued = glue(&core_plan, &pi, &core).unwrap();
        prop_assert!(glued.check_marginals(&measures, &Rational::zero()).is_ok());
    }

    /// A splitting set never admits an improving rearrangement: the
    /// support of a certified plan passes the monotonicity sweep.
    #[test]
    fn splitting_sets_are_cyclically_monotone(seed in 0u64..100_000, dims in small_dims()) {
        let (measures, cost) = random_instance_with_dims::<Rational>(seed, &dims);
        let solution = solve_instance(&measures, &cost, &SolveOptions::default()).unwrap();
        let improved = improve_sweep(&solution.duals, &cost, &measures).unwrap();
        let support = extract_support(&solution.coupling, &Rational::zero());

        prop_assert!(check_splitting(&support, &improved.family, &cost, &Rational::zero()).is_ok());
        let witness = check_cyclical_monotonicity(&support, &cost, 2).unwrap();
        prop_assert!(witness.is_none(), "witness on a certified support: {witness:?}");
    }

    /// Against a fixed optimal family, a vertex is optimal exactly when
    /// its support is a splitting set, and the duality gap agrees.
    #[test]
    fn vertex_optimality_is_equivalent_to_splitting(seed in 0u64..100_000) {
        let dims = vec![2, 2, 2];
        let (measures, cost) = random_instance_with_dims::<Rational>(seed, &dims);
        let lp = build_lp(&measures, &cost, 1_000).unwrap();
        let solution = solve_primal(&lp, &SolveOptions::default()).unwrap();
        let improved = improve_sweep(&solution.duals, &cost, &measures).unwrap();

        for vertex in enumerate_vertices(&lp, 16).unwrap() {
            let value = eval_primal_cost(&vertex, &cost).unwrap();
            let optimal = value == solution.value;
            let support = extract_support(&vertex, &Rational::zero());
            let splitting = check_splitting(&support, &improved.family, &cost, &Rational::zero());
            prop_assert_eq!(optimal, splitting.is_ok());

            let gap = duality_gap(&vertex, &improved.family, &cost).unwrap();
            match gap.verdict {
                GapVerdict::Optimal => prop_assert!(optimal),
                GapVerdict::Suboptimal => {
                    prop_assert!(!optimal);
                    prop_assert!(gap.gap > Rational::zero());
                }
                GapVerdict::InfeasibleDual { .. } => prop_assert!(false, "improved family must stay admissible"),
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Adding a constant to the cost shifts the optimal value by exactly
    /// that constant and leaves the optimal basis untouched.
    #[test]
    fn constant_cost_shifts_move_the_value_and_nothing_else(seed in 0u64..100_000, dims in small_dims()) {
        let (measures, cost) = random_instance_with_dims::<Rational>(seed, &dims);
        let shift = cost.sup_norm().clone();
        let shifted_entries: Vec<Rational> =
            cost.entries().iter().map(|e| e.clone() + &shift).collect();
        let shifted = CostTensor::new(cost.shape().clone(), shifted_entries).unwrap();

        let options = SolveOptions::default();
        let base = solve_instance(&measures, &cost, &options).unwrap();
        let moved = solve_instance(&measures, &shifted, &options).unwrap();

        prop_assert_eq!(moved.value, base.value.clone() + &shift);
        prop_assert_eq!(&moved.basis, &base.basis);
        prop_assert_eq!(moved.pivots, base.pivots);
        prop_assert_eq!(moved.coupling.entries(), base.coupling.entries());
    }
}

fn run_cli(args: &[&str]) -> std::process::Output {
    std::process::Command::new(env!("CARGO_BIN_EXE_mot"))
        .args(args)
        .output()
        .expect("binary runs")
}

#[test]
fn cli_reports_are_identical_across_runs_modulo_timing() {
    let args = ["solve", "--seed", "12", "--shape", "2,3,2"];
    let first = run_cli(&args);
    let second = run_cli(&args);
    assert!(first.status.success());

    let mut a: serde_json::Value = serde_json::from_slice(&first.stdout).unwrap();
    let mut b: serde_json::Value = serde_json::from_slice(&second.stdout).unwrap();
    a["timing_ms"] = 0.into();
    b["timing_ms"] = 0.into();
    assert_eq!(a, b, "reports must be deterministic apart from timing");
}

#[test]
fn cli_exit_codes_follow_the_failure_section() {
    let good = run_cli(&["certify", "--seed", "7", "--shape", "2x2x2"]);
    assert_eq!(good.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&good.stdout).unwrap();
    assert!(report.get("failures").is_none());

    let bad = run_cli(&["truncate", "--seed", "7", "--eps", "0.5"]);
    assert_eq!(bad.status.code(), Some(1));
    let report: serde_json::Value = serde_json::from_slice(&bad.stdout).unwrap();
    assert!(!report["failures"].as_array().unwrap().is_empty());
}
