//! Cross-check the simplex solver against brute force: enumerate every
//! vertex of a small transportation polytope and compare the cheapest one
//! with the solver's optimum.

use mot::fixtures::random_instance_with_dims;
use mot::lp::{build_lp, enumerate_vertices, solve_primal, SolveOptions, DEFAULT_VERTEX_GUARD};
use mot::scalar::{Rational, Scalar};
use mot::tensor::eval_primal_cost;

fn main() {
    for seed in [1u64, 2, 3] {
        let (measures, cost) = random_instance_with_dims::<Rational>(seed, &[2, 2, 2]);
        let lp = build_lp(&measures, &cost, 1_000).unwrap();
        let solution = solve_primal(&lp, &SolveOptions::default()).unwrap();

        let vertices = enumerate_vertices(&lp, DEFAULT_VERTEX_GUARD).unwrap();
        let minimum = vertices
            .iter()
            .map(|v| eval_primal_cost(v, &cost).unwrap())
            .min_by(|a, b| a.partial_cmp(b).unwrap())
            .unwrap();

        println!(
            "seed {seed}: {} vertices, vertex minimum {}, solver value {}",
            vertices.len(),
            minimum.format_exact(),
            solution.value.format_exact()
        );
        assert_eq!(minimum, solution.value, "solver must match the vertex oracle");
    }
    println!("solver agrees with exhaustive enumeration on every instance");
}
