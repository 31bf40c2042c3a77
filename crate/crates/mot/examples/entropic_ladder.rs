//! Walk a Sinkhorn ladder down to small regularization and watch the
//! entropic plans approach the exact optimum from above, inside the
//! eps * sum_k log n_k entropy bracket.

use mot::entropic::entropic_ladder;
use mot::fixtures::random_instance_with_dims;
use mot::lp::{solve_instance, SolveOptions};
use mot::scalar::{Rational, Scalar};
use mot::tensor::eval_primal_cost;

fn main() {
    let seed = 21u64;
    let dims = [3usize, 3, 3];
    let (measures, cost) = random_instance_with_dims::<Rational>(seed, &dims);
    let exact = solve_instance(&measures, &cost, &SolveOptions::default()).unwrap();
    let exact_value = exact.value.to_f64();
    println!(
        "exact optimum {} = {exact_value:.8}",
        exact.value.format_exact()
    );

    let (measures_f, cost_f) = random_instance_with_dims::<f64>(seed, &dims);
    let sup = *cost_f.sup_norm();
    let rungs: Vec<f64> = [1.0, 0.3, 0.1, 0.03].iter().map(|s| s * sup).collect();
    let entropy_rate: f64 = dims.iter().map(|&n| (n as f64).ln()).sum();

    println!(
        "{:>10} {:>8} {:>12} {:>12} {:>12}",
        "eps", "sweeps", "value", "gap", "bound"
    );
    let runs = entropic_ladder(&measures_f, &cost_f, &rungs, 20_000, 1e-10).unwrap();
    for (state, plan) in &runs {
        let value = eval_primal_cost(plan, &cost_f).unwrap();
        let gap = value - exact_value;
        let bound = state.epsilon * entropy_rate;
        println!(
            "{:>10.4} {:>8} {:>12.8} {:>12.3e} {:>12.3e}",
            state.epsilon, state.iterations, value, gap, bound
        );
        assert!(state.converged, "eps {} did not converge", state.epsilon);
        assert!(gap >= -1e-8, "an entropic plan cannot beat the optimum");
        assert!(gap <= bound + 1e-8, "gap must respect the entropy bound");
    }
    println!("gap shrinks with eps and never crosses the entropy bound");
}
