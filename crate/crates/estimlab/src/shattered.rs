//! A shattered domain of size d: every one of the 2^d labelings is
//! realizable, the marginal over the domain is uniform, and the exact loss
//! of a labeling is its normalized Hamming distance from the truth.
//!
//! The 2^d hypotheses are never materialized: drawing the distribution
//! index uniformly is the same as drawing d fair label bits.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::Rng;

use crate::error::{Error, Result};

/// A labeling of the d domain points (the truth table of one hypothesis).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Labeling {
    bits: Vec<bool>,
}

impl Labeling {
    pub fn new(bits: Vec<bool>) -> Self {
        Labeling { bits }
    }

    pub fn random<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Self {
        Labeling {
            bits: (0..d).map(|_| rng.random::<bool>()).collect(),
        }
    }

    /// Decode index bits little-endian: point i gets bit i of `index`.
    pub fn from_index(d: usize, index: u64) -> Self {
        Labeling {
            bits: (0..d).map(|i| (index >> i) & 1 == 1).collect(),
        }
    }

    pub fn d(&self) -> usize {
        self.bits.len()
    }

    pub fn bit(&self, i: usize) -> bool {
        self.bits[i]
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Number of points labeled 1.
    pub fn weight(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn hamming(&self, other: &Labeling) -> usize {
        assert_eq!(self.d(), other.d(), "labelings of different domains");
        self.bits
            .iter()
            .zip(&other.bits)
            .filter(|(a, b)| a != b)
            .count()
    }

    pub fn complement(&self) -> Labeling {
        Labeling {
            bits: self.bits.iter().map(|b| !b).collect(),
        }
    }

    /// Compact stable text form for trial records.
    pub fn digest(&self) -> String {
        let mut s = String::with_capacity(self.d());
        for &b in &self.bits {
            s.push(if b { '1' } else { '0' });
        }
        s
    }
}

/// A sample of domain points (with repetition) and their labels.
#[derive(Debug, Clone)]
pub struct DomainSample {
    points: Vec<usize>,
    labels: Vec<bool>,
}

impl DomainSample {
    pub fn new(points: Vec<usize>, labels: Vec<bool>) -> Result<Self> {
        if points.len() != labels.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} points vs {} labels",
                points.len(),
                labels.len()
            )));
        }
        Ok(DomainSample { points, labels })
    }

    pub fn points(&self) -> &[usize] {
        &self.points
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Number of distinct sampled points.
    pub fn distinct_points(&self) -> usize {
        let mut seen: Vec<usize> = self.points.clone();
        seen.sort_unstable();
        seen.dedup();
        seen.len()
    }

    /// The label each seen point carries, or an error on contradiction.
    pub fn seen_labels(&self, d: usize) -> Result<Vec<Option<bool>>> {
        let mut seen: Vec<Option<bool>> = vec![None; d];
        for (&p, &y) in self.points.iter().zip(&self.labels) {
            match seen[p] {
                None => seen[p] = Some(y),
                Some(prev) if prev != y => {
                    return Err(Error::ContradictorySample { point: p })
                }
                _ => {}
            }
        }
        Ok(seen)
    }

    /// Exact empirical 0-1 loss of a labeling on this sample.
    pub fn empirical_loss(&self, h: &Labeling) -> BigRational {
        if self.is_empty() {
            return BigRational::zero();
        }
        let wrong = self
            .points
            .iter()
            .zip(&self.labels)
            .filter(|(&p, &y)| h.bit(p) != y)
            .count();
        BigRational::new(BigInt::from(wrong), BigInt::from(self.len()))
    }
}

/// Draw one instance: a uniform labeling (d fair coins) and n i.i.d.
/// uniform domain points labeled by it. The labeling is drawn first, then
/// the points, so the stream layout is stable.
pub fn draw_instance<R: Rng + ?Sized>(d: usize, n: usize, rng: &mut R) -> (Labeling, DomainSample) {
    assert!(d >= 1);
    let truth = Labeling::random(d, rng);
    let points: Vec<usize> = (0..n).map(|_| rng.random_range(0..d)).collect();
    let labels: Vec<bool> = points.iter().map(|&p| truth.bit(p)).collect();
    (truth, DomainSample { points, labels })
}

/// Exact loss of `h` against `truth` under the uniform marginal:
/// Hamming distance divided by d.
pub fn true_loss(h: &Labeling, truth: &Labeling) -> BigRational {
    BigRational::new(
        BigInt::from(h.hamming(truth)),
        BigInt::from(truth.d() as u64),
    )
}

/// The uniform random ERM: agrees with the sample on every seen point and
/// flips an independent fair coin on each unseen point. This realizes the
/// posterior-matched random ERM for this family.
pub fn erm_uniform<R: Rng + ?Sized>(sample: &DomainSample, d: usize, rng: &mut R) -> Result<Labeling> {
    let seen = sample.seen_labels(d)?;
    let bits = seen
        .into_iter()
        .map(|s| match s {
            Some(b) => b,
            None => rng.random::<bool>(),
        })
        .collect();
    Ok(Labeling::new(bits))
}

/// Exact expected loss of the uniform ERM conditioned on m distinct seen
/// points: (d - m) / (2d).
pub fn expected_erm_loss(d: usize, m: usize) -> BigRational {
    assert!(m <= d);
    BigRational::new(BigInt::from((d - m) as u64), BigInt::from(2 * d as u64))
}

/// Outcome of the exhaustive two-measure comparison.
#[derive(Debug, Clone)]
pub struct P1P2Report {
    /// whether the two joint measures over (sample, hypothesis) coincide
    pub equal: bool,
    /// largest absolute pointwise discrepancy
    pub max_discrepancy: BigRational,
    /// number of (sample, hypothesis) states inspected
    pub states: u64,
}

/// Default guard on the exhaustive state count 2^d * d^n * 2^d
/// (covers d <= 4, n <= 3).
pub const DEFAULT_P1P2_GUARD: u64 = 16_384;

/// Exhaustively compare, as exact rationals, the joint measure of
/// (sample, truth labeling) with the joint measure of (sample, ERM output)
/// where the ERM labels unseen points 1 with probability `one_weight`.
///
/// `one_weight = 1/2` is the uniform ERM and makes the measures equal;
/// any other weight is a negative control and produces a discrepancy.
pub fn p1_p2_discrepancy(
    d: usize,
    n: usize,
    one_weight: &BigRational,
    guard: u64,
) -> Result<P1P2Report> {
    assert!((1..32).contains(&d));
    let states: u128 = (1u128 << d) * (d as u128).pow(n as u32) * (1u128 << d);
    if states > guard as u128 {
        return Err(Error::GuardExceeded {
            size: states.to_string(),
            guard,
        });
    }
    let zero_weight = BigRational::one() - one_weight.clone();
    // P(one point tuple) = d^-n; P(one labeling) = 2^-d
    let p_points = BigRational::new(BigInt::one(), BigInt::from(d as u64).pow(n as u32));
    let p_label = BigRational::new(BigInt::one(), BigInt::from(2u64).pow(d as u32));

    let mut max_disc = BigRational::zero();
    let mut sum_p1 = BigRational::zero();
    let mut sum_p2 = BigRational::zero();
    let mut states_seen = 0u64;

    // enumerate point tuples by odometer
    let tuples = (d as u64).pow(n as u32);
    for t in 0..tuples {
        let mut points = Vec::with_capacity(n);
        let mut rest = t;
        for _ in 0..n {
            points.push((rest % d as u64) as usize);
            rest /= d as u64;
        }
        let mut seen_mask = 0u32;
        for &p in &points {
            seen_mask |= 1 << p;
        }
        let m = seen_mask.count_ones() as usize;
        // enumerate realizable label assignments: one bit per distinct point
        // (walk all truths; samples repeat 2^(d-m) times, handled by weights)
        let mut sample_labelings = std::collections::HashSet::new();
        for truth_idx in 0..(1u64 << d) {
            let truth = Labeling::from_index(d, truth_idx);
            let labels: Vec<bool> = points.iter().map(|&p| truth.bit(p)).collect();
            sample_labelings.insert(labels);
        }
        for labels in sample_labelings {
            // #consistent labelings = 2^(d-m)
            let consistent_total = BigInt::from(2u64).pow((d - m) as u32);
            for h_idx in 0..(1u64 << d) {
                let h = Labeling::from_index(d, h_idx);
                let consistent = points
                    .iter()
                    .zip(&labels)
                    .all(|(&p, &y)| h.bit(p) == y);
                // P1: choose truth = h (prob 2^-d), draw these points, see
                // exactly these labels
                let p1 = if consistent {
                    &p_label * &p_points
                } else {
                    BigRational::zero()
                };
                // P2: any consistent truth produces this sample; the ERM
                // then emits h with the product of per-unseen-point weights
                let p2 = if consistent {
                    let mut emit = BigRational::one();
                    for i in 0..d {
                        if seen_mask & (1 << i) == 0 {
                            emit *= if h.bit(i) {
                                one_weight.clone()
                            } else {
                                zero_weight.clone()
                            };
                        }
                    }
                    &p_label
                        * &p_points
                        * BigRational::from_integer(consistent_total.clone())
                        * emit
                } else {
                    BigRational::zero()
                };
                let disc = (&p1 - &p2).abs();
                if disc > max_disc {
                    max_disc = disc;
                }
                sum_p1 += p1;
                sum_p2 += p2;
                states_seen += 1;
            }
        }
    }
    // both columns are probability measures
    assert_eq!(sum_p1, BigRational::one());
    assert_eq!(sum_p2, BigRational::one());
    Ok(P1P2Report {
        equal: max_disc.is_zero(),
        max_discrepancy: max_disc,
        states: states_seen,
    })
}

/// Exhaustive check that pairing a uniform truth with its sample is the
/// same measure as pairing the sample with a uniform-ERM output.
pub fn verify_p1_equals_p2(d: usize, n: usize) -> Result<P1P2Report> {
    p1_p2_discrepancy(
        d,
        n,
        &BigRational::new(BigInt::one(), BigInt::from(2)),
        DEFAULT_P1P2_GUARD,
    )
}
