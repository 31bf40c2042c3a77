//! Certify an optimal plan twice over: its support is a splitting set for
//! the improved potentials, and no rearrangement of support tuples lowers
//! the cost. Then break the plan on purpose to see both certificates fail.

use mot::certify::{
    check_cyclical_monotonicity, check_splitting, duality_gap, extract_support, GapVerdict,
};
use mot::conjugacy::improve_sweep;
use mot::fixtures::random_instance_with_dims;
use mot::lp::{solve_instance, SolveOptions};
use mot::scalar::{Rational, Scalar};
use mot::{CostTensor, Shape};
use num::Zero;

fn main() {
    let (measures, cost) = random_instance_with_dims::<Rational>(7, &[2, 3, 2]);
    let solution = solve_instance(&measures, &cost, &SolveOptions::default()).unwrap();
    let improved = improve_sweep(&solution.duals, &cost, &measures).unwrap();
    let support = extract_support(&solution.coupling, &Rational::zero());

    let certificate =
        check_splitting(&support, &improved.family, &cost, &Rational::zero()).unwrap();
    println!(
        "splitting set of size {}: min slack {}, max equality gap {}",
        certificate.set_size,
        certificate.min_slack.format_exact(),
        certificate.max_equality_gap.format_exact()
    );

    let witness = check_cyclical_monotonicity(&support, &cost, 3).unwrap();
    assert!(witness.is_none());
    println!("no improving rearrangement among tuple families of size <= 3");

    let gap = duality_gap(&solution.coupling, &improved.family, &cost).unwrap();
    assert!(matches!(gap.verdict, GapVerdict::Optimal));
    println!("duality gap {}", gap.gap.format_exact());

    // A cost that rewards the antidiagonal makes the diagonal pair
    // non-monotone: swapping the second and third coordinates is cheaper.
    let entries: Vec<Rational> = (0..8)
        .map(|flat| {
            let x1 = (flat >> 2) & 1;
            let x2 = (flat >> 1) & 1;
            let x3 = flat & 1;
            Rational::from_int(((x1 + x2 + x3) * (x1 + x2 + x3)) as i64)
        })
        .collect();
    let square_cost = CostTensor::new(Shape::new(vec![2, 2, 2]).unwrap(), entries).unwrap();
    let diagonal = vec![vec![0, 0, 0], vec![1, 1, 1]];
    let witness = check_cyclical_monotonicity(&diagonal, &square_cost, 2)
        .unwrap()
        .expect("the diagonal pair is not cyclically monotone for a convex cost");
    println!(
        "counterexample: tuples {:?} rearranged by {:?} drop the cost {} -> {}",
        witness.tuples,
        witness.permutations,
        witness.lhs.format_exact(),
        witness.rhs.format_exact()
    );
    assert!(witness.rhs < witness.lhs);
}
