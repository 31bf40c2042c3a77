//! Solve a three-marginal instance exactly and print the plan, the dual
//! potentials, and the (identically zero) duality gap.

use mot::certify::{duality_gap, extract_support};
use mot::conjugacy::improve_sweep;
use mot::fixtures::random_instance_with_dims;
use mot::lp::{solve_instance, SolveOptions};
use mot::scalar::{Rational, Scalar};
use num::Zero;

fn main() {
    let (measures, cost) = random_instance_with_dims::<Rational>(42, &[3, 4, 2]);
    println!("instance: shape {:?}, |c|_sup = {}", cost.shape().dims(), cost.sup_norm());

    let solution = solve_instance(&measures, &cost, &SolveOptions::default()).unwrap();
    println!(
        "optimal value {} = {:.6} after {} pivots",
        solution.value.format_exact(),
        solution.value.to_f64(),
        solution.pivots
    );

    let support = extract_support(&solution.coupling, &Rational::zero());
    println!("plan support ({} entries):", support.len());
    for index in &support {
        println!("  pi{index:?} = {}", solution.coupling.at(index).format_exact());
    }

    // One conjugation sweep turns the simplex multipliers into potentials
    // that are fixed points of the conjugation in every coordinate.
    let improved = improve_sweep(&solution.duals, &cost, &measures).unwrap();
    for (k, f) in improved.family.vectors().iter().enumerate() {
        let rendered: Vec<String> = f.iter().map(Rational::format_exact).collect();
        println!("f_{} = [{}]", k + 1, rendered.join(", "));
    }
    assert!(improved.fixed_point.iter().all(|&b| b));

    let gap = duality_gap(&solution.coupling, &improved.family, &cost).unwrap();
    println!(
        "primal {} dual {} gap {}",
        gap.primal_value.format_exact(),
        gap.dual_value.format_exact(),
        gap.gap.format_exact()
    );
    assert!(gap.gap.is_zero(), "strong duality is exact in rational mode");
}
