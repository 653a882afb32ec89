//! Consistent-set geometry over the truncated linear classes: with the
//! bias direction spanned by the reduced inputs, one class holds every
//! consistent hypothesis (q^{n+1-k} of them) and the others hold none;
//! off the span, all q classes hold q^{n-k} each.
//!
//! ```bash
//! cargo run --release --example consistent_sets
//! ```

use estimlab::ffmat::{FieldMatrix, FieldVector, PrimeField};
use estimlab::linclass::{
    consistent_count, enumerate_consistent, sample_consistent, LabeledSample, SubclassSpec,
};
use estimlab::expharness::trial_rng;

fn main() {
    let q = 3u64;
    let (d, n) = (6usize, 2usize);
    let field = PrimeField::new(q).expect("prime");
    let mut rng = trial_rng(77, 0);

    // truth from the class with first window coordinate = 1
    let truth_class = 1u64;
    let bias = SubclassSpec::truncated_class(d, n, truth_class);
    let truth = sample_consistent(
        field,
        &LabeledSample::new(FieldMatrix::zeros(field, 1, d), FieldVector::zeros(field, 1))
            .expect("dims"),
        &bias,
        &mut rng,
    )
    .expect("empty sample is consistent with the whole class");
    println!("truth drawn from class {truth_class}: coefficients {}", truth.digest());

    for trial in 0..4 {
        let inputs = FieldMatrix::random(field, n, d, &mut rng);
        let sample = LabeledSample::generate(inputs.clone(), &truth).expect("dims");
        let window: Vec<usize> = (0..=n).collect();
        let reduced = inputs.select_cols(&window);
        let k = reduced.rank();
        let e1 = FieldVector::basis(field, n + 1, 0);
        let spanned = reduced.in_row_span(&e1).expect("dims");
        println!(
            "\ntrial {trial}: reduced rank k = {k}, bias direction {} the row span",
            if spanned { "IN" } else { "NOT in" }
        );
        for class in 0..q {
            let spec = SubclassSpec::truncated_class(d, n, class);
            let count = consistent_count(field, &sample, &spec).expect("realizable");
            let listed = enumerate_consistent(field, &sample, &spec, 1 << 16).expect("guarded");
            println!(
                "  class {class}: {count} consistent (enumeration agrees: {})",
                listed.len() == count.to_string().parse::<usize>().unwrap_or(usize::MAX)
            );
        }
    }
}
