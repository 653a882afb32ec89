//! Loss estimators: functions that look at (algorithm, output, sample) and
//! guess the population loss. Includes the exact-rational parity-optimal
//! estimators built from the reduced input matrix, plus the baselines they
//! are measured against.
//!
//! Estimates are exact rationals so that failure comparisons at a rational
//! accuracy threshold never suffer float doubt. `RandomGuess` draws a
//! dyadic rational from [0, 1).

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linclass::{LabeledSample, LinearHypothesis};
use crate::shattered::{DomainSample, Labeling};

/// Which trial observables an estimator consumes. Variants that ignore the
/// algorithm descriptor fit the algorithm-independent signature; the
/// parity-optimal variants read it (they are tuned to the learner's bias
/// window) and fit the algorithm-dependent signature.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InputsRead {
    pub algorithm: bool,
    pub hypothesis: bool,
    pub sample: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum EstimatorSpec {
    /// the empirical 0-1 loss of the output hypothesis on the sample
    EmpiricalLoss,
    /// a fixed value in [0, 1]
    ConstantValue { c: BigRational },
    /// 0 when the reduced input matrix has the largest rank the sample
    /// allows, else `c_nu` (the optimal deterministic assignment for a
    /// biased ERM over parities at error level 1/4)
    ParityOptimalDet { c_nu: BigRational },
    /// 0 exactly on the event "reduced matrix has full row rank but does
    /// not span the bias direction", else `c_nu`
    ParityOptimalRand { c_nu: BigRational },
    /// uniform on [0, 1)
    RandomGuess,
}

impl EstimatorSpec {
    pub fn constant(num: i64, den: i64) -> Self {
        let c = BigRational::new(BigInt::from(num), BigInt::from(den));
        assert!(c >= BigRational::zero() && c <= BigRational::from_integer(BigInt::from(1)));
        EstimatorSpec::ConstantValue { c }
    }

    /// The parity-optimal deterministic estimator with the default
    /// assignment c_nu = 1/2.
    pub fn parity_opt_det() -> Self {
        EstimatorSpec::ParityOptimalDet {
            c_nu: BigRational::new(BigInt::from(1), BigInt::from(2)),
        }
    }

    /// The parity-optimal randomized-learner estimator with c_nu = 1/2.
    pub fn parity_opt_rand() -> Self {
        EstimatorSpec::ParityOptimalRand {
            c_nu: BigRational::new(BigInt::from(1), BigInt::from(2)),
        }
    }

    pub fn inputs_read(&self) -> InputsRead {
        match self {
            EstimatorSpec::EmpiricalLoss => InputsRead {
                algorithm: false,
                hypothesis: true,
                sample: true,
            },
            EstimatorSpec::ConstantValue { .. } | EstimatorSpec::RandomGuess => InputsRead {
                algorithm: false,
                hypothesis: false,
                sample: false,
            },
            EstimatorSpec::ParityOptimalDet { .. } | EstimatorSpec::ParityOptimalRand { .. } => {
                InputsRead {
                    algorithm: true,
                    hypothesis: false,
                    sample: true,
                }
            }
        }
    }

    pub fn name(&self) -> String {
        match self {
            EstimatorSpec::EmpiricalLoss => "empirical".into(),
            EstimatorSpec::ConstantValue { c } => format!("const:{}", c),
            EstimatorSpec::ParityOptimalDet { .. } => "parity-opt-det".into(),
            EstimatorSpec::ParityOptimalRand { .. } => "parity-opt-rand".into(),
            EstimatorSpec::RandomGuess => "random".into(),
        }
    }
}

/// Observables of one linear-setting trial, as an estimator sees them.
pub struct LinTrialContext<'a> {
    pub hypothesis: &'a LinearHypothesis,
    pub sample: &'a LabeledSample,
    /// sample size
    pub n: usize,
    /// width of the learner's active coordinate window
    pub window_width: usize,
    /// rank of the sample inputs restricted to the window
    pub reduced_rank: usize,
    /// whether the learner's bias direction lies in the reduced row span
    pub sigma_spanned: bool,
}

/// Observables of one shattered-setting trial.
pub struct ShatteredTrialContext<'a> {
    pub hypothesis: &'a Labeling,
    pub sample: &'a DomainSample,
}

fn dyadic_unit<R: Rng + ?Sized>(rng: &mut R) -> BigRational {
    const BITS: u32 = 53;
    BigRational::new(
        BigInt::from(rng.random_range(0..(1u64 << BITS))),
        BigInt::from(1u64 << BITS),
    )
}

/// Estimate the population loss in the linear setting. Always in [0, 1].
pub fn estimate_lin<R: Rng + ?Sized>(
    spec: &EstimatorSpec,
    ctx: &LinTrialContext<'_>,
    rng: &mut R,
) -> BigRational {
    match spec {
        EstimatorSpec::EmpiricalLoss => ctx
            .sample
            .empirical_loss(ctx.hypothesis)
            .expect("hypothesis and sample share a dimension"),
        EstimatorSpec::ConstantValue { c } => c.clone(),
        EstimatorSpec::ParityOptimalDet { c_nu } => {
            if ctx.reduced_rank == ctx.n.min(ctx.window_width) {
                BigRational::zero()
            } else {
                c_nu.clone()
            }
        }
        EstimatorSpec::ParityOptimalRand { c_nu } => {
            if ctx.reduced_rank == ctx.n && !ctx.sigma_spanned {
                BigRational::zero()
            } else {
                c_nu.clone()
            }
        }
        EstimatorSpec::RandomGuess => dyadic_unit(rng),
    }
}

/// Estimate the population loss in the shattered setting. The
/// parity-optimal variants read a linear reduction that does not exist
/// here, so they are rejected.
pub fn estimate_shattered<R: Rng + ?Sized>(
    spec: &EstimatorSpec,
    ctx: &ShatteredTrialContext<'_>,
    rng: &mut R,
) -> Result<BigRational> {
    match spec {
        EstimatorSpec::EmpiricalLoss => Ok(ctx.sample.empirical_loss(ctx.hypothesis)),
        EstimatorSpec::ConstantValue { c } => Ok(c.clone()),
        EstimatorSpec::RandomGuess => Ok(dyadic_unit(rng)),
        EstimatorSpec::ParityOptimalDet { .. } | EstimatorSpec::ParityOptimalRand { .. } => {
            Err(Error::InvalidConfig(format!(
                "estimator {} reads a linear reduction and does not apply to the shattered setting",
                spec.name()
            )))
        }
    }
}

/// The failure event that defines (epsilon, delta, n)-estimability:
/// the estimate misses the true loss by at least epsilon.
pub fn failure_indicator(
    estimate: &BigRational,
    true_loss: &BigRational,
    epsilon: &BigRational,
) -> bool {
    (estimate - true_loss).abs() >= *epsilon
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactprob::ratio;
    use crate::ffmat::{FieldMatrix, FieldVector, PrimeField};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn lin_ctx_parts(
        q: u64,
        rows: Vec<Vec<u64>>,
        truth: Vec<u64>,
    ) -> (LinearHypothesis, LabeledSample, usize, usize) {
        let field = PrimeField::new(q).unwrap();
        let h = LinearHypothesis::new(FieldVector::new(field, truth));
        let inputs = FieldMatrix::from_rows(field, &rows);
        let n = inputs.rows();
        let d = inputs.cols();
        let sample = LabeledSample::generate(inputs, &h).unwrap();
        (h, sample, n, d)
    }

    #[test]
    fn empirical_loss_is_zero_for_erm_outputs() {
        let (h, sample, n, _d) = lin_ctx_parts(2, vec![vec![1, 0, 1], vec![0, 1, 1]], vec![1, 1, 0]);
        let ctx = LinTrialContext {
            hypothesis: &h,
            sample: &sample,
            n,
            window_width: 3,
            reduced_rank: 2,
            sigma_spanned: true,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let est = estimate_lin(&EstimatorSpec::EmpiricalLoss, &ctx, &mut rng);
        assert!(est.is_zero());
    }

    #[test]
    fn parity_opt_det_rank_dichotomy() {
        let (h, sample, n, _) = lin_ctx_parts(2, vec![vec![1, 0, 0], vec![0, 1, 0]], vec![0, 1, 0]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        // full reduced rank -> 0
        let ctx = LinTrialContext {
            hypothesis: &h,
            sample: &sample,
            n,
            window_width: 3,
            reduced_rank: 2,
            sigma_spanned: true,
        };
        assert!(estimate_lin(&EstimatorSpec::parity_opt_det(), &ctx, &mut rng).is_zero());
        // rank deficient -> c_nu = 1/2
        let ctx = LinTrialContext {
            hypothesis: &h,
            sample: &sample,
            n,
            window_width: 3,
            reduced_rank: 1,
            sigma_spanned: false,
        };
        assert_eq!(
            estimate_lin(&EstimatorSpec::parity_opt_det(), &ctx, &mut rng),
            ratio(1, 2)
        );
    }

    #[test]
    fn parity_opt_rand_fires_only_off_span() {
        let (h, sample, n, _) = lin_ctx_parts(2, vec![vec![0, 1, 0]], vec![0, 1, 0]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mk = |rank, spanned| LinTrialContext {
            hypothesis: &h,
            sample: &sample,
            n,
            window_width: 2,
            reduced_rank: rank,
            sigma_spanned: spanned,
        };
        let spec = EstimatorSpec::parity_opt_rand();
        assert!(estimate_lin(&spec, &mk(1, false), &mut rng).is_zero());
        assert_eq!(estimate_lin(&spec, &mk(1, true), &mut rng), ratio(1, 2));
        assert_eq!(estimate_lin(&spec, &mk(0, false), &mut rng), ratio(1, 2));
    }

    #[test]
    fn failure_indicator_cases() {
        let quarter = ratio(1, 4);
        assert!(!failure_indicator(&ratio(1, 2), &ratio(1, 2), &quarter));
        // learner right but estimator says 1/2
        assert!(failure_indicator(&ratio(1, 2), &ratio(0, 1), &quarter));
        // learner wrong (loss 1/2) but estimator says 0
        assert!(failure_indicator(&ratio(0, 1), &ratio(1, 2), &quarter));
        // boundary counts as failure
        assert!(failure_indicator(&ratio(1, 4), &ratio(0, 1), &quarter));
    }

    #[test]
    fn estimates_stay_in_unit_interval() {
        let (h, sample, n, _) = lin_ctx_parts(3, vec![vec![1, 2, 0], vec![2, 0, 1]], vec![1, 0, 2]);
        let ctx = LinTrialContext {
            hypothesis: &h,
            sample: &sample,
            n,
            window_width: 3,
            reduced_rank: 2,
            sigma_spanned: false,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let specs = [
            EstimatorSpec::EmpiricalLoss,
            EstimatorSpec::constant(2, 5),
            EstimatorSpec::parity_opt_det(),
            EstimatorSpec::parity_opt_rand(),
            EstimatorSpec::RandomGuess,
        ];
        for _ in 0..200 {
            for spec in &specs {
                let e = estimate_lin(spec, &ctx, &mut rng);
                assert!(e >= ratio(0, 1) && e <= ratio(1, 1), "{}", spec.name());
            }
        }
    }

    #[test]
    fn shattered_rejects_parity_estimators() {
        let truth = Labeling::new(vec![true, false, true]);
        let sample = DomainSample::new(vec![0, 2], vec![true, true]).unwrap();
        let ctx = ShatteredTrialContext {
            hypothesis: &truth,
            sample: &sample,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(estimate_shattered(&EstimatorSpec::parity_opt_det(), &ctx, &mut rng).is_err());
        assert!(
            estimate_shattered(&EstimatorSpec::EmpiricalLoss, &ctx, &mut rng)
                .unwrap()
                .is_zero()
        );
    }

    #[test]
    fn inputs_read_split_by_signature() {
        assert!(!EstimatorSpec::EmpiricalLoss.inputs_read().algorithm);
        assert!(!EstimatorSpec::constant(1, 2).inputs_read().algorithm);
        assert!(EstimatorSpec::parity_opt_det().inputs_read().algorithm);
        assert!(EstimatorSpec::parity_opt_rand().inputs_read().algorithm);
    }

    /// Dominance of the deterministic parity-optimal estimator: on one
    /// fixed trial set (identical across estimators by seed determinism)
    /// at accuracy 1/4 and q = 2, its failure count never exceeds the
    /// empirical-loss baseline or any constant baseline.
    ///
    /// Over the full class at n = d every margin is strict. Over the
    /// two-class family at n < d the constants in {0.3, 0.4, 0.5} tie it
    /// exactly in expectation (both fail on equal-mass events), so that
    /// leg compares against the low constants and the empirical baseline.
    #[test]
    fn parity_opt_det_dominates_baselines() {
        use crate::expharness::{
            run_experiment, EstimatorChoice, ExperimentConfig, Family, LearnerChoice, Setting,
        };
        let failures = |setting: &Setting, estimator: EstimatorChoice| {
            let cfg = ExperimentConfig {
                setting: setting.clone(),
                learner: LearnerChoice::BiasedErm,
                estimator,
                epsilon: ratio(1, 4),
                trials: 20_000,
                master_seed: 4242,
                workers: 0,
            };
            run_experiment(&cfg).unwrap().0.failure.count
        };
        let grid = |deciles: &[i64]| -> Vec<EstimatorChoice> {
            let mut v = vec![EstimatorChoice::Empirical];
            v.extend(deciles.iter().map(|&c| EstimatorChoice::Constant {
                value: ratio(c, 10),
            }));
            v
        };

        let full = Setting::Lin {
            q: 2,
            d: 8,
            n: 8,
            family: Family::Full,
        };
        let det = failures(&full, EstimatorChoice::ParityOptDet { c_nu: None });
        for baseline in grid(&[0, 1, 2, 3, 4, 5]) {
            let b = failures(&full, baseline.clone());
            assert!(
                det <= b,
                "full family: det {det} vs {} {b}",
                baseline.name()
            );
        }

        let two_class = Setting::Lin {
            q: 2,
            d: 8,
            n: 4,
            family: Family::D0D1,
        };
        let det = failures(&two_class, EstimatorChoice::ParityOptDet { c_nu: None });
        for baseline in grid(&[0, 1, 2]) {
            let b = failures(&two_class, baseline.clone());
            assert!(
                det <= b,
                "two-class family: det {det} vs {} {b}",
                baseline.name()
            );
        }
    }

    #[test]
    fn random_guess_failure_geometry() {
        // against a two-point loss, the failure probability per trial is
        // one minus the mass of [0,1) within epsilon of the realized loss
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (h, sample, n, _) = lin_ctx_parts(11, vec![vec![1, 0, 0]], vec![1, 0, 0]);
        let ctx = LinTrialContext {
            hypothesis: &h,
            sample: &sample,
            n,
            window_width: 2,
            reduced_rank: 1,
            sigma_spanned: true,
        };
        let eps = ratio(45, 100);
        let trials = 100_000u64;
        // simulate both loss branches explicitly
        for loss in [ratio(0, 1), ratio(10, 11)] {
            let mut failures = 0u64;
            for _ in 0..trials {
                let est = estimate_lin(&EstimatorSpec::RandomGuess, &ctx, &mut rng);
                if failure_indicator(&est, &loss, &eps) {
                    failures += 1;
                }
            }
            use num_traits::ToPrimitive;
            let l = loss.to_f64().unwrap();
            let overlap = (l + 0.45).min(1.0) - (l - 0.45).max(0.0);
            let p = 1.0 - overlap;
            let sigma = (p * (1.0 - p) / trials as f64).sqrt();
            let rate = failures as f64 / trials as f64;
            assert!((rate - p).abs() < 3.0 * sigma, "loss {l}: {rate} vs {p}");
            // the headline sanity: accuracy 0.45 is achieved with
            // probability roughly 0.5 either way
            assert!((rate - 0.5).abs() < 0.06);
        }
    }
}
