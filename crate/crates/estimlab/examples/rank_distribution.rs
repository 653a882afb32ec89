//! Exact rank distribution of uniform random matrices over F_q, checked
//! against a Monte-Carlo census.
//!
//! ```bash
//! cargo run --release --example rank_distribution
//! ```

use estimlab::exactprob::{decimal_string, fraction_string, full_rank_prob, rank_prob, to_f64};
use estimlab::expharness::{trial_rng, wilson_interval};
use estimlab::ffmat::{FieldMatrix, PrimeField};

fn main() {
    let (q, n1, n2) = (3u64, 4u64, 5u64);
    let trials = 200_000u64;
    let field = PrimeField::new(q).expect("q is prime");

    println!("rank distribution of a uniform {n1} x {n2} matrix over F_{q}");
    println!("{trials} Monte-Carlo draws vs the exact closed form\n");

    let mut counts = vec![0u64; (n1.min(n2) + 1) as usize];
    let mut rng = trial_rng(20_240, 0);
    for _ in 0..trials {
        let m = FieldMatrix::random(field, n1 as usize, n2 as usize, &mut rng);
        counts[m.rank()] += 1;
    }

    println!("{:>4}  {:>22}  {:>14}  {:>10}  {:>22}", "rank", "exact", "decimal", "empirical", "wilson 95%");
    for r in 0..=n1.min(n2) {
        let exact = rank_prob(q, n1, n2, r);
        let c = counts[r as usize];
        let rate = c as f64 / trials as f64;
        let (lo, hi) = wilson_interval(c, trials, 1.96);
        let inside = to_f64(&exact) >= lo && to_f64(&exact) <= hi;
        println!(
            "{:>4}  {:>22}  {:>14}  {:>10.6}  [{:.6}, {:.6}] {}",
            r,
            fraction_string(&exact),
            decimal_string(&exact, 12),
            rate,
            lo,
            hi,
            if inside { "ok" } else { "OUTSIDE" }
        );
    }

    let full = full_rank_prob(q, n1, n2);
    println!(
        "\nfull-rank product form agrees with the sum form: {} = {}",
        fraction_string(&full),
        fraction_string(&rank_prob(q, n1, n2, n1.min(n2)))
    );
}
