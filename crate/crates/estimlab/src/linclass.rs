//! The hypothesis class of linear functionals over F_q^d, its biased
//! subclasses, exact two-point risks, and consistent-set computations.
//!
//! A hypothesis is a coefficient vector `a`; it labels an input `x` with
//! `sum_i a_i x_i mod q`. Subclasses restrict the support to an active
//! coordinate window and optionally impose one linear constraint
//! `sigma . a = kappa` on the window; the canonical biased class pins the
//! first window coordinate (`sigma = e1`).

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exactprob::q_pow;
use crate::ffmat::{FieldElem, FieldMatrix, FieldVector, PrimeField};

/// Default cap on explicit enumeration of consistent sets.
pub const DEFAULT_ENUM_GUARD: u64 = 1 << 20;

/// A linear functional `f_a(x) = a . x mod q`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LinearHypothesis {
    coeffs: FieldVector,
}

impl LinearHypothesis {
    pub fn new(coeffs: FieldVector) -> Self {
        LinearHypothesis { coeffs }
    }

    pub fn zero(field: PrimeField, d: usize) -> Self {
        LinearHypothesis {
            coeffs: FieldVector::zeros(field, d),
        }
    }

    pub fn coeffs(&self) -> &FieldVector {
        &self.coeffs
    }

    pub fn dim(&self) -> usize {
        self.coeffs.dim()
    }

    pub fn field(&self) -> PrimeField {
        self.coeffs.field()
    }

    /// Number of nonzero coefficients.
    pub fn weight(&self) -> usize {
        self.coeffs.weight()
    }

    /// Compact stable text form, used in trial records.
    pub fn digest(&self) -> String {
        let parts: Vec<String> = self.coeffs.entries().iter().map(|v| v.to_string()).collect();
        parts.join(",")
    }

    /// Exact evaluation `a . x mod q`.
    pub fn evaluate(&self, x: &FieldVector) -> Result<FieldElem> {
        self.coeffs.dot(x)
    }
}

/// Exact 0-1 population risk of `h` under the distribution labeled by `f`
/// with uniform marginal: 0 when the hypotheses coincide, else `1 - 1/q`
/// (two distinct linear functionals agree on exactly a 1/q fraction of the
/// space).
pub fn population_risk(f: &LinearHypothesis, h: &LinearHypothesis) -> BigRational {
    assert_eq!(f.dim(), h.dim(), "hypotheses of different dimension");
    assert_eq!(f.field(), h.field(), "hypotheses over different fields");
    if f == h {
        BigRational::zero()
    } else {
        BigRational::one() - q_pow(f.field().q(), -1)
    }
}

/// A labeled sample: inputs stacked as rows of an `n x d` matrix plus a
/// label vector of length n.
#[derive(Debug, Clone)]
pub struct LabeledSample {
    inputs: FieldMatrix,
    labels: FieldVector,
}

impl LabeledSample {
    pub fn new(inputs: FieldMatrix, labels: FieldVector) -> Result<Self> {
        if inputs.rows() != labels.dim() {
            return Err(Error::DimensionMismatch(format!(
                "{} input rows vs {} labels",
                inputs.rows(),
                labels.dim()
            )));
        }
        Ok(LabeledSample { inputs, labels })
    }

    /// Sample generated by `f` on the given inputs.
    pub fn generate(inputs: FieldMatrix, f: &LinearHypothesis) -> Result<Self> {
        let labels = inputs.mul_vec(f.coeffs())?;
        Ok(LabeledSample { inputs, labels })
    }

    pub fn inputs(&self) -> &FieldMatrix {
        &self.inputs
    }

    pub fn labels(&self) -> &FieldVector {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.dim()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Fraction of sample points mislabeled by `h`, as an exact rational.
    pub fn empirical_loss(&self, h: &LinearHypothesis) -> Result<BigRational> {
        let predicted = self.inputs.mul_vec(h.coeffs())?;
        let wrong = predicted
            .entries()
            .iter()
            .zip(self.labels.entries())
            .filter(|(p, y)| p != y)
            .count();
        if self.is_empty() {
            return Ok(BigRational::zero());
        }
        Ok(BigRational::new(BigInt::from(wrong), BigInt::from(self.len())))
    }
}

/// A subclass of the linear functionals over F_q^d.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum SubclassSpec {
    /// All q^d linear functionals.
    Full { d: usize },
    /// Functionals supported on `active` (coefficients elsewhere zero);
    /// cardinality q^|active|.
    Window { d: usize, active: Vec<usize> },
    /// Window functionals additionally satisfying `sigma . a = kappa` on
    /// the window (`sigma` nonzero, length |active|); cardinality
    /// q^(|active| - 1).
    Constrained {
        d: usize,
        active: Vec<usize>,
        sigma: Vec<u64>,
        kappa: u64,
    },
}

impl SubclassSpec {
    /// The ambient truncated class with active window = first
    /// `min(n+1, d)` coordinates.
    pub fn truncated(d: usize, n: usize) -> Self {
        let w = (n + 1).min(d);
        SubclassSpec::Window {
            d,
            active: (0..w).collect(),
        }
    }

    /// The canonical biased class: first window coordinate pinned to
    /// `class`, coordinates beyond the window zero.
    pub fn truncated_class(d: usize, n: usize, class: u64) -> Self {
        let w = (n + 1).min(d);
        let mut sigma = vec![0; w];
        sigma[0] = 1;
        SubclassSpec::Constrained {
            d,
            active: (0..w).collect(),
            sigma,
            kappa: class,
        }
    }

    /// The untruncated class with first coordinate pinned to `class`.
    pub fn class(d: usize, class: u64) -> Self {
        let mut sigma = vec![0; d];
        sigma[0] = 1;
        SubclassSpec::Constrained {
            d,
            active: (0..d).collect(),
            sigma,
            kappa: class,
        }
    }

    /// A general bias `sigma . a = kappa` over an arbitrary active window.
    pub fn general_bias(d: usize, active: Vec<usize>, sigma: Vec<u64>, kappa: u64) -> Result<Self> {
        if sigma.len() != active.len() {
            return Err(Error::DimensionMismatch(format!(
                "sigma length {} vs window width {}",
                sigma.len(),
                active.len()
            )));
        }
        if sigma.iter().all(|&s| s == 0) {
            return Err(Error::InvalidConfig(
                "bias direction sigma must be nonzero".into(),
            ));
        }
        if active.iter().any(|&i| i >= d) {
            return Err(Error::InvalidConfig(
                "active coordinate outside [0, d)".into(),
            ));
        }
        Ok(SubclassSpec::Constrained {
            d,
            active,
            sigma,
            kappa,
        })
    }

    pub fn d(&self) -> usize {
        match self {
            SubclassSpec::Full { d } => *d,
            SubclassSpec::Window { d, .. } => *d,
            SubclassSpec::Constrained { d, .. } => *d,
        }
    }

    /// Active coordinates (all of them for `Full`).
    pub fn active(&self) -> Vec<usize> {
        match self {
            SubclassSpec::Full { d } => (0..*d).collect(),
            SubclassSpec::Window { active, .. } => active.clone(),
            SubclassSpec::Constrained { active, .. } => active.clone(),
        }
    }

    /// The constraint `(sigma, kappa)` if any.
    pub fn constraint(&self) -> Option<(&[u64], u64)> {
        match self {
            SubclassSpec::Constrained { sigma, kappa, .. } => Some((sigma, *kappa)),
            _ => None,
        }
    }

    /// Dimension of the subclass as an affine space of coefficient vectors.
    pub fn dim(&self) -> usize {
        match self {
            SubclassSpec::Full { d } => *d,
            SubclassSpec::Window { active, .. } => active.len(),
            SubclassSpec::Constrained { active, .. } => active.len() - 1,
        }
    }

    /// Number of hypotheses: q^dim.
    pub fn cardinality(&self, q: u64) -> BigInt {
        BigInt::from(q).pow(self.dim() as u32)
    }

    /// The unconstrained window class this subclass lives in.
    pub fn ambient(&self) -> SubclassSpec {
        match self {
            SubclassSpec::Full { d } => SubclassSpec::Full { d: *d },
            SubclassSpec::Window { .. } => self.clone(),
            SubclassSpec::Constrained { d, active, .. } => SubclassSpec::Window {
                d: *d,
                active: active.clone(),
            },
        }
    }

    /// Membership test.
    pub fn contains(&self, h: &LinearHypothesis) -> bool {
        let d = self.d();
        if h.dim() != d {
            return false;
        }
        match self {
            SubclassSpec::Full { .. } => true,
            SubclassSpec::Window { active, .. } => {
                let active_set: std::collections::HashSet<usize> = active.iter().copied().collect();
                (0..d).all(|i| active_set.contains(&i) || h.coeffs().get(i) == 0)
            }
            SubclassSpec::Constrained {
                active,
                sigma,
                kappa,
                ..
            } => {
                let window = SubclassSpec::Window {
                    d,
                    active: active.clone(),
                };
                if !window.contains(h) {
                    return false;
                }
                let f = h.field();
                let mut acc = 0u64;
                for (&i, &s) in active.iter().zip(sigma) {
                    acc = f.add_raw(acc, f.mul_raw(s % f.q(), h.coeffs().get(i)));
                }
                acc == *kappa % f.q()
            }
        }
    }

    /// Embed window coefficients into a full-length hypothesis.
    fn embed(&self, field: PrimeField, window_coeffs: &FieldVector) -> LinearHypothesis {
        let mut full = FieldVector::zeros(field, self.d());
        for (slot, &coord) in self.active().iter().enumerate() {
            full.set(coord, window_coeffs.get(slot));
        }
        LinearHypothesis::new(full)
    }

    /// The linear system over window coefficients whose solutions are the
    /// hypotheses of this subclass consistent with `sample`: restricted
    /// input matrix rows, plus the constraint row if any.
    fn consistency_system(
        &self,
        field: PrimeField,
        sample: &LabeledSample,
    ) -> Result<(FieldMatrix, FieldVector)> {
        let active = self.active();
        if sample.inputs().cols() != self.d() {
            return Err(Error::DimensionMismatch(format!(
                "sample over {} coordinates vs class over {}",
                sample.inputs().cols(),
                self.d()
            )));
        }
        let w = active.len();
        let n = sample.len();
        let mut rows: Vec<Vec<u64>> = Vec::with_capacity(n + 1);
        let mut rhs: Vec<u64> = Vec::with_capacity(n + 1);
        for r in 0..n {
            rows.push(active.iter().map(|&c| sample.inputs().at(r, c)).collect());
            rhs.push(sample.labels().get(r));
        }
        if let Some((sigma, kappa)) = self.constraint() {
            rows.push(sigma.to_vec());
            rhs.push(kappa);
        }
        if rows.is_empty() {
            // empty sample, unconstrained: represent as the zero system
            rows.push(vec![0; w]);
            rhs.push(0);
        }
        Ok((
            FieldMatrix::from_rows(field, &rows),
            FieldVector::new(field, rhs),
        ))
    }

    /// Realizability of the sample over the ambient window class.
    fn realizable(&self, field: PrimeField, sample: &LabeledSample) -> Result<bool> {
        let (m, y) = self.ambient().consistency_system(field, sample)?;
        Ok(m.solve_particular(&y).is_some())
    }
}

/// Exact number of hypotheses in `subclass` consistent with `sample`.
///
/// Errors if the sample is not realizable over the subclass's ambient
/// window class; a bias constraint may still force the count to 0.
pub fn consistent_count(
    field: PrimeField,
    sample: &LabeledSample,
    subclass: &SubclassSpec,
) -> Result<BigInt> {
    if !subclass.realizable(field, sample)? {
        return Err(Error::UnrealizableSample);
    }
    let (m, y) = subclass.consistency_system(field, sample)?;
    if m.solve_particular(&y).is_none() {
        return Ok(BigInt::zero());
    }
    let free = m.cols() - m.rank();
    Ok(BigInt::from(field.q()).pow(free as u32))
}

/// Explicit list of the consistent hypotheses, via a particular solution
/// plus the full null-space coset. Errors if the set exceeds `guard`.
pub fn enumerate_consistent(
    field: PrimeField,
    sample: &LabeledSample,
    subclass: &SubclassSpec,
    guard: u64,
) -> Result<Vec<LinearHypothesis>> {
    let count = consistent_count(field, sample, subclass)?;
    if count > BigInt::from(guard) {
        return Err(Error::GuardExceeded {
            size: count.to_string(),
            guard,
        });
    }
    if count.is_zero() {
        return Ok(Vec::new());
    }
    let (m, y) = subclass.consistency_system(field, sample)?;
    let particular = m.solve_particular(&y).expect("count is nonzero");
    let basis = m.null_space_basis();
    let q = field.q();
    let w = m.cols();
    let mut out = Vec::new();
    let mut coeffs = vec![0u64; basis.len()];
    loop {
        let mut v = particular.clone();
        for (c, b) in coeffs.iter().zip(&basis) {
            for i in 0..w {
                v.set(i, field.add_raw(v.get(i), field.mul_raw(*c, b.get(i))));
            }
        }
        out.push(subclass.embed(field, &v));
        // odometer over null-space coefficients
        let mut carry = true;
        for c in coeffs.iter_mut() {
            *c += 1;
            if *c == q {
                *c = 0;
            } else {
                carry = false;
                break;
            }
        }
        if carry {
            break;
        }
    }
    debug_assert_eq!(BigInt::from(out.len()), count);
    Ok(out)
}

/// A uniformly random consistent hypothesis: particular solution plus a
/// uniformly random null-space combination. Exact uniformity over the
/// affine solution coset; no rejection.
pub fn sample_consistent<R: Rng + ?Sized>(
    field: PrimeField,
    sample: &LabeledSample,
    subclass: &SubclassSpec,
    rng: &mut R,
) -> Result<LinearHypothesis> {
    let (m, y) = subclass.consistency_system(field, sample)?;
    let Some(particular) = m.solve_particular(&y) else {
        if !subclass.realizable(field, sample)? {
            return Err(Error::UnrealizableSample);
        }
        return Err(Error::EmptyConsistentSet);
    };
    let basis = m.null_space_basis();
    let q = field.q();
    let w = m.cols();
    let mut v = particular;
    for b in &basis {
        let c = rng.random_range(0..q);
        if c != 0 {
            for i in 0..w {
                v.set(i, field.add_raw(v.get(i), field.mul_raw(c, b.get(i))));
            }
        }
    }
    Ok(subclass.embed(field, &v))
}

/// Brute-force enumeration of the whole subclass (guarded), independent of
/// the solver path. Intended for oracles and the self-test ledger.
pub fn enumerate_hypotheses(
    field: PrimeField,
    subclass: &SubclassSpec,
    guard: u64,
) -> Result<Vec<LinearHypothesis>> {
    let card = subclass.cardinality(field.q());
    if card > BigInt::from(guard) {
        return Err(Error::GuardExceeded {
            size: card.to_string(),
            guard,
        });
    }
    let active = subclass.active();
    let q = field.q();
    let w = active.len();
    let mut out = Vec::new();
    let mut window = vec![0u64; w];
    loop {
        let v = FieldVector::new(field, window.clone());
        let h = subclass.embed(field, &v);
        if subclass.contains(&h) {
            out.push(h);
        }
        let mut carry = true;
        for c in window.iter_mut() {
            *c += 1;
            if *c == q {
                *c = 0;
            } else {
                carry = false;
                break;
            }
        }
        if carry {
            break;
        }
    }
    debug_assert_eq!(BigInt::from(out.len()), card);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn f(q: u64) -> PrimeField {
        PrimeField::new(q).unwrap()
    }

    fn hyp(field: PrimeField, coeffs: Vec<u64>) -> LinearHypothesis {
        LinearHypothesis::new(FieldVector::new(field, coeffs))
    }

    #[test]
    fn evaluate_cases() {
        let f3 = f(3);
        let zero = LinearHypothesis::zero(f3, 2);
        let x = FieldVector::new(f3, vec![2, 2]);
        assert_eq!(zero.evaluate(&x).unwrap().value(), 0);
        let e1 = hyp(f3, vec![1, 0]);
        assert_eq!(e1.evaluate(&x).unwrap().value(), 2);
        // (1,2) . (2,2) = 2 + 4 = 6 = 0 mod 3
        let h = hyp(f3, vec![1, 2]);
        assert_eq!(h.evaluate(&x).unwrap().value(), 0);
        // dimension mismatch errors
        let bad = FieldVector::new(f3, vec![1]);
        assert!(h.evaluate(&bad).is_err());
    }

    #[test]
    fn risk_is_two_point() {
        let f3 = f(3);
        let a = hyp(f3, vec![1, 0]);
        let b = hyp(f3, vec![1, 1]);
        assert!(population_risk(&a, &a).is_zero());
        assert_eq!(population_risk(&a, &b), BigRational::new(2.into(), 3.into()));
    }

    #[test]
    fn risk_matches_pointwise_enumeration() {
        // pointwise oracle: enumerate all of F_3^2; distinct functionals
        // agree on exactly 3 of the 9 points.
        use crate::ffmat::enumerate_vectors;
        let f3 = f(3);
        let all = enumerate_hypotheses(f3, &SubclassSpec::Full { d: 2 }, 1 << 10).unwrap();
        assert_eq!(all.len(), 9);
        for a in &all {
            for b in &all {
                let mut agree = 0u64;
                let mut total = 0u64;
                enumerate_vectors(f3, 2, |x| {
                    if a.evaluate(x).unwrap() == b.evaluate(x).unwrap() {
                        agree += 1;
                    }
                    total += 1;
                });
                let disagreement = BigRational::new(
                    BigInt::from(total - agree),
                    BigInt::from(total),
                );
                assert_eq!(population_risk(a, b), disagreement);
                if a != b {
                    assert_eq!(agree, 3);
                }
            }
        }
    }

    #[test]
    fn subclass_cardinalities_by_enumeration() {
        let f2 = f(2);
        // the truncated biased classes at d=3, n=1 hold q^n = 2 functions each
        for class in 0..2 {
            let spec = SubclassSpec::truncated_class(3, 1, class);
            let hyps = enumerate_hypotheses(f2, &spec, 1 << 10).unwrap();
            assert_eq!(hyps.len(), 2);
            for h in &hyps {
                assert!(spec.contains(h));
                assert_eq!(h.coeffs().get(0), class);
                assert_eq!(h.coeffs().get(2), 0);
            }
        }
        let window = SubclassSpec::truncated(3, 1);
        assert_eq!(enumerate_hypotheses(f2, &window, 1 << 10).unwrap().len(), 4);
    }

    #[test]
    fn consistent_count_empty_sample_is_whole_class() {
        // represent the empty sample as a 1-row zero input with label 0;
        // every window hypothesis is consistent with it
        let f2 = f(2);
        let inputs = FieldMatrix::zeros(f2, 1, 3);
        let labels = FieldVector::zeros(f2, 1);
        let sample = LabeledSample::new(inputs, labels).unwrap();
        let spec = SubclassSpec::truncated_class(3, 1, 0);
        assert_eq!(
            consistent_count(f2, &sample, &spec).unwrap(),
            BigInt::from(2)
        );
    }

    #[test]
    fn consistent_count_span_dichotomy_examples() {
        let f2 = f(2);
        // sample {((1,0,0), 0)}: e1 spanned, k = 1 -> 2 consistent in class
        // 0 and none in class 1
        let inputs = FieldMatrix::from_rows(f2, &[vec![1, 0, 0]]);
        let labels = FieldVector::new(f2, vec![0]);
        let sample = LabeledSample::new(inputs, labels).unwrap();
        let c0 = SubclassSpec::truncated_class(3, 1, 0);
        let c1 = SubclassSpec::truncated_class(3, 1, 1);
        assert_eq!(consistent_count(f2, &sample, &c0).unwrap(), BigInt::from(2));
        assert_eq!(consistent_count(f2, &sample, &c1).unwrap(), BigInt::zero());

        // sample {((0,1,0), 1)}: e1 not spanned, k = 1 -> 1 in each class
        let inputs = FieldMatrix::from_rows(f2, &[vec![0, 1, 0]]);
        let labels = FieldVector::new(f2, vec![1]);
        let sample = LabeledSample::new(inputs, labels).unwrap();
        assert_eq!(consistent_count(f2, &sample, &c0).unwrap(), BigInt::one());
        assert_eq!(consistent_count(f2, &sample, &c1).unwrap(), BigInt::one());
    }

    #[test]
    fn unrealizable_sample_errors() {
        let f2 = f(2);
        // x = 0 with label 1 cannot come from any linear functional
        let inputs = FieldMatrix::zeros(f2, 1, 3);
        let labels = FieldVector::new(f2, vec![1]);
        let sample = LabeledSample::new(inputs, labels).unwrap();
        let spec = SubclassSpec::truncated_class(3, 1, 0);
        assert!(matches!(
            consistent_count(f2, &sample, &spec),
            Err(Error::UnrealizableSample)
        ));
        assert!(matches!(
            sample_consistent(f2, &sample, &spec, &mut ChaCha8Rng::seed_from_u64(0)),
            Err(Error::UnrealizableSample)
        ));
    }

    #[test]
    fn empty_constrained_set_errors_on_sampling() {
        let f2 = f(2);
        // realizable over the window, but the wrong class
        let inputs = FieldMatrix::from_rows(f2, &[vec![1, 0, 0]]);
        let labels = FieldVector::new(f2, vec![0]);
        let sample = LabeledSample::new(inputs, labels).unwrap();
        let c1 = SubclassSpec::truncated_class(3, 1, 1);
        assert!(enumerate_consistent(f2, &sample, &c1, 1 << 10)
            .unwrap()
            .is_empty());
        assert!(matches!(
            sample_consistent(f2, &sample, &c1, &mut ChaCha8Rng::seed_from_u64(0)),
            Err(Error::EmptyConsistentSet)
        ));
    }

    #[test]
    fn enumerate_guard_is_enforced() {
        let f2 = f(2);
        let inputs = FieldMatrix::zeros(f2, 1, 30);
        let labels = FieldVector::zeros(f2, 1);
        let sample = LabeledSample::new(inputs, labels).unwrap();
        let spec = SubclassSpec::Full { d: 30 };
        assert!(matches!(
            enumerate_consistent(f2, &sample, &spec, 1 << 20),
            Err(Error::GuardExceeded { .. })
        ));
    }

    /// Counting law on random realizable instances: the solver-based count,
    /// the coset enumeration, and brute-force filtering all agree, and the
    /// span dichotomy holds (either one class holds all consistent
    /// functions, or every class holds equally many).
    #[test]
    fn counting_law_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let mut checked = 0;
        while checked < 1000 {
            let q = if checked % 2 == 0 { 2 } else { 3 };
            let field = f(q);
            let d = rng.random_range(2..=6usize);
            let n = rng.random_range(1..=4usize.min(d - 1));
            let class = rng.random_range(0..q);
            let spec = SubclassSpec::truncated_class(d, n, class);
            // generating function from the biased class
            let gen = {
                let hyps = enumerate_hypotheses(field, &spec, 1 << 16).unwrap();
                hyps[rng.random_range(0..hyps.len())].clone()
            };
            let inputs = FieldMatrix::random(field, n, d, &mut rng);
            let sample = LabeledSample::generate(inputs, &gen).unwrap();

            let mut counts = Vec::new();
            for j in 0..q {
                let cj = SubclassSpec::truncated_class(d, n, j);
                let count = consistent_count(field, &sample, &cj).unwrap();
                let listed = enumerate_consistent(field, &sample, &cj, 1 << 16).unwrap();
                assert_eq!(BigInt::from(listed.len()), count);
                for h in &listed {
                    assert!(cj.contains(h));
                    assert!(sample.empirical_loss(h).unwrap().is_zero());
                }
                // brute-force oracle: filter the whole subclass by evaluation
                let brute = enumerate_hypotheses(field, &cj, 1 << 16)
                    .unwrap()
                    .into_iter()
                    .filter(|h| sample.empirical_loss(h).unwrap().is_zero())
                    .count();
                assert_eq!(BigInt::from(brute), count);
                counts.push(count);
            }
            // dichotomy
            let nonzero: Vec<_> = counts.iter().filter(|c| !c.is_zero()).collect();
            if nonzero.len() == 1 {
                // single class holds everything
            } else {
                assert_eq!(nonzero.len(), q as usize);
                assert!(counts.windows(2).all(|w| w[0] == w[1]));
            }
            // the generating class is never empty
            assert!(!counts[class as usize].is_zero());
            checked += 1;
        }
    }

    #[test]
    fn sampling_is_uniform_over_small_cosets() {
        let f2 = f(2);
        // two consistent functions in class 0 (rank-deficient reduced input)
        let inputs = FieldMatrix::from_rows(f2, &[vec![0, 0, 0, 0]]);
        let labels = FieldVector::new(f2, vec![0]);
        let sample = LabeledSample::new(inputs, labels).unwrap();
        let spec = SubclassSpec::truncated_class(4, 1, 0);
        let listed = enumerate_consistent(f2, &sample, &spec, 1 << 10).unwrap();
        assert_eq!(listed.len(), 2);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut counts = std::collections::HashMap::new();
        let draws = 10_000;
        for _ in 0..draws {
            let h = sample_consistent(f2, &sample, &spec, &mut rng).unwrap();
            assert!(sample.empirical_loss(&h).unwrap().is_zero());
            *counts.entry(h.digest()).or_insert(0u64) += 1;
        }
        assert_eq!(counts.len(), 2);
        for &c in counts.values() {
            let freq = c as f64 / draws as f64;
            assert!((0.47..=0.53).contains(&freq), "freq {freq}");
        }
    }

    #[test]
    fn singleton_consistent_set_is_deterministic() {
        let f3 = f(3);
        // full-rank reduced system pins the hypothesis uniquely
        let gen = hyp(f3, vec![0, 2, 1, 0]);
        let inputs = FieldMatrix::from_rows(
            f3,
            &[vec![0, 1, 0, 2], vec![0, 0, 1, 1], vec![1, 1, 1, 0]],
        );
        let sample = LabeledSample::generate(inputs, &gen).unwrap();
        let spec = SubclassSpec::truncated_class(4, 2, 0);
        let count = consistent_count(f3, &sample, &spec).unwrap();
        if count == BigInt::one() {
            let mut rng = ChaCha8Rng::seed_from_u64(1);
            for _ in 0..20 {
                let h = sample_consistent(f3, &sample, &spec, &mut rng).unwrap();
                assert_eq!(h, gen);
            }
        }
    }

    #[test]
    fn general_bias_membership() {
        let f3 = f(3);
        // sigma = (1, 2, 0), kappa = 1 over window {0, 1, 2} of d = 4
        let spec =
            SubclassSpec::general_bias(4, vec![0, 1, 2], vec![1, 2, 0], 1).unwrap();
        let hyps = enumerate_hypotheses(f3, &spec, 1 << 10).unwrap();
        assert_eq!(hyps.len(), 9); // q^(w-1)
        for h in &hyps {
            let a = h.coeffs();
            assert_eq!((a.get(0) + 2 * a.get(1)) % 3, 1);
            assert_eq!(a.get(3), 0);
        }
        // zero sigma is rejected
        assert!(SubclassSpec::general_bias(4, vec![0, 1], vec![0, 0], 1).is_err());
    }
}
