//! The exact eta = F(q, n) level: the probability with which any loss
//! estimator must miss a linearly biased ERM by at least (q-1)/2q.
//! For q > 10 the level exceeds 0.4, and it approaches 1/2 - 1/q as q
//! grows, which is the performance of a blind random guess.
//!
//! ```bash
//! cargo run --release --example eta_table
//! ```

use estimlab::exactprob::{decimal_string, eta_f, fraction_string, q_pow, ratio};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Signed;

fn main() {
    println!("eta = F(q, n): the unavoidable estimator-failure level\n");
    println!(
        "{:>4} {:>4}  {:>14}  {:>14}  {:>6}",
        "q", "n", "eta", "1/2 - 1/q", "q>10"
    );
    let threshold = ratio(2, 5);
    for q in [2u64, 3, 11, 31, 101] {
        for n in [1u64, 2, 4, 10, 20] {
            let eta = eta_f(q, n);
            let reference = ratio(1, 2) - q_pow(q, -1);
            let flag = if q > 10 {
                if eta > threshold {
                    "pass"
                } else {
                    "FAIL"
                }
            } else {
                ""
            };
            println!(
                "{:>4} {:>4}  {:>14}  {:>14}  {:>6}",
                q,
                n,
                decimal_string(&eta, 10),
                decimal_string(&reference, 10),
                flag
            );
        }
    }

    println!("\nscaled deviation q * |eta(q, 10) - (1/2 - 1/q)| shrinks with q:");
    for q in [11u64, 31, 101] {
        let reference = ratio(1, 2) - q_pow(q, -1);
        let err = (eta_f(q, 10) - reference).abs() * BigRational::from_integer(BigInt::from(q));
        println!("  q = {:>3}: {}", q, decimal_string(&err, 8));
    }

    println!("\nat q = 2 the level is small (exact values):");
    for n in [1u64, 2, 3, 5, 10, 20] {
        let eta = eta_f(2, n);
        println!(
            "  eta_f(2, {:>2}) = {} = {}",
            n,
            fraction_string(&eta),
            decimal_string(&eta, 8)
        );
    }
    println!("which is why parities get the dedicated analysis in the parity_estimators example");
}
