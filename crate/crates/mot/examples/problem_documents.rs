//! Round-trip a problem through the document layer: fraction weights stay
//! exact, pairwise-sum costs expand to the full tensor, and the digest
//! pins the instance across arithmetic modes.

use mot::document::{parse_problem, ProblemDocument};
use mot::fixtures::random_instance_with_dims;
use mot::scalar::{Rational, Scalar};

const DOCUMENT: &str = r#"{
  "version": "1",
  "k": 3,
  "marginals": [
    { "labels": ["a", "b"], "weights": ["1/4", "3/4"] },
    { "weights": ["0.5", "0.5"] },
    { "weights": ["2/5", "3/5"] }
  ],
  "cost": {
    "kind": "pairwise-sum",
    "matrices": [
      { "first": 0, "second": 1, "entries": [["0", "1"], ["1", "0"]] },
      { "first": 1, "second": 2, "entries": [["0", "2"], ["2", "0"]] }
    ]
  }
}"#;

fn main() {
    let doc = parse_problem(DOCUMENT).unwrap();
    println!("document digest {}", doc.digest());

    // Rational mode parses "0.5" and "1/4" exactly; float mode reads the
    // same strings into doubles. Both see the same expanded cost tensor.
    let (measures, cost, warnings) = doc.instance::<Rational>(1_000_000).unwrap();
    assert!(warnings.is_empty());
    println!(
        "marginal 0 weights: {:?}",
        measures[0]
            .weights()
            .iter()
            .map(Rational::format_exact)
            .collect::<Vec<_>>()
    );
    println!("expanded cost tensor over shape {:?}:", cost.shape().dims());
    for (flat, value) in cost.entries().iter().enumerate() {
        print!("{}{}", value.format_exact(), if flat % 4 == 3 { "\n" } else { " " });
    }

    let (measures_f, _cost_f, _) = doc.instance::<f64>(1_000_000).unwrap();
    assert_eq!(measures_f[0].weights()[0], 0.25);

    // Any instance renders back into a document with exact number strings;
    // re-parsing reproduces the instance and the digest verbatim.
    let (gen_measures, gen_cost) = random_instance_with_dims::<Rational>(3, &[2, 3, 2]);
    let rendered = ProblemDocument::from_instance(&gen_measures, &gen_cost);
    let text = rendered.to_json();
    let reparsed = parse_problem(&text).unwrap();
    assert_eq!(reparsed.digest(), rendered.digest());
    let (back_measures, back_cost, _) = reparsed.instance::<Rational>(1_000_000).unwrap();
    assert_eq!(back_cost.entries(), gen_cost.entries());
    assert_eq!(back_measures[1].weights(), gen_measures[1].weights());
    println!(
        "generated instance round-trips with digest {}",
        rendered.digest()
    );
}
