//! Seeded Monte-Carlo experiment driver.
//!
//! A run draws (distribution, sample, learner output, estimate) trials,
//! aggregates failure rates with Wilson intervals, and attaches the exact
//! closed-form prediction whenever one applies. Per-trial randomness comes
//! from a ChaCha stream keyed by (master seed, trial index), so results are
//! bit-identical for a fixed seed regardless of the worker count, and true
//! losses come from closed forms rather than held-out sampling.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::estimators::{
    estimate_lin, estimate_shattered, failure_indicator, EstimatorSpec, LinTrialContext,
    ShatteredTrialContext,
};
use crate::exactprob::{
    beta_nonlearn, decimal_string, delta_learn, fraction_string, gamma_tv,
    parity_estimator_fail, ratio, to_f64,
};
use crate::ffmat::{FieldMatrix, FieldVector, PrimeField};
use crate::learners::{ComplexityFn, LinLearner, ShatteredLearner};
use crate::linclass::{population_risk, LabeledSample, LinearHypothesis, SubclassSpec};
use crate::shattered::{draw_instance, expected_erm_loss, true_loss};

/// Serialize exact rationals as "p/q" text in configs.
pub mod rational_text {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&fraction_string(x))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<BigRational, D::Error> {
        let s = String::deserialize(d)?;
        crate::exactprob::parse_rational(&s).map_err(serde::de::Error::custom)
    }
}

mod rational_text_opt {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(
        x: &Option<BigRational>,
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        match x {
            Some(v) => s.serialize_some(&fraction_string(v)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Option<BigRational>, D::Error> {
        let s: Option<String> = Option::deserialize(d)?;
        match s {
            None => Ok(None),
            Some(s) => crate::exactprob::parse_rational(&s)
                .map(Some)
                .map_err(serde::de::Error::custom),
        }
    }
}

/// Which slice of the linear distribution family a run draws from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// the bias-matched class only
    D0,
    /// the bias class and its shifted sibling, mixed evenly
    D0D1,
    /// the whole truncated window class
    Full,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::D0 => "d0",
            Family::D0D1 => "d0d1",
            Family::Full => "full",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Setting {
    /// linear functionals over F_q^d with i.i.d. uniform inputs
    Lin {
        q: u64,
        d: usize,
        n: usize,
        family: Family,
    },
    /// a shattered domain of size d with uniform marginal
    Shattered { d: usize, n: usize },
}

impl Setting {
    pub fn name(&self) -> String {
        match self {
            Setting::Lin { q, d, n, family } => {
                format!("lin[q={q},d={d},n={n},family={}]", family.name())
            }
            Setting::Shattered { d, n } => format!("shattered[d={d},n={n}]"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundChoice {
    Zero,
    One,
    Weight,
}

impl BoundChoice {
    pub fn to_fn(self) -> ComplexityFn {
        match self {
            BoundChoice::Zero => ComplexityFn::Zero,
            BoundChoice::One => ComplexityFn::constant(1.0),
            BoundChoice::Weight => ComplexityFn::Weight,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            BoundChoice::Zero => "zero",
            BoundChoice::One => "one",
            BoundChoice::Weight => "weight",
        }
    }

    pub fn from_name(s: &str) -> Result<Self> {
        match s {
            "zero" => Ok(BoundChoice::Zero),
            "one" => Ok(BoundChoice::One),
            "weight" => Ok(BoundChoice::Weight),
            other => Err(Error::InvalidConfig(format!(
                "unknown bound '{other}': built-ins are zero, one, weight"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LearnerChoice {
    /// the canonical biased ERM: first window coordinate pinned to 0
    BiasedErm,
    /// a biased ERM with general constraint sigma . a = kappa over the
    /// canonical window
    GeneralBiasErm { sigma: Vec<u64>, kappa: u64 },
    /// the constant ERM matched to each trial's drawn distribution
    MatchedConstant,
    /// uniform over the consistent set (the posterior-matched random ERM)
    UniformErm,
    /// deterministic complexity-minimizing ERM
    BoundMinErm { bound: BoundChoice },
}

impl LearnerChoice {
    pub fn name(&self) -> String {
        match self {
            LearnerChoice::BiasedErm => "a0".into(),
            LearnerChoice::GeneralBiasErm { sigma, kappa } => {
                let s: Vec<String> = sigma.iter().map(|v| v.to_string()).collect();
                format!("bias:{}:{}", s.join(","), kappa)
            }
            LearnerChoice::MatchedConstant => "constant".into(),
            LearnerChoice::UniformErm => "uniform".into(),
            LearnerChoice::BoundMinErm { bound } => format!("bound-min:{}", bound.name()),
        }
    }

    fn is_biased(&self) -> bool {
        matches!(
            self,
            LearnerChoice::BiasedErm | LearnerChoice::GeneralBiasErm { .. }
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EstimatorChoice {
    Empirical,
    Constant {
        #[serde(with = "rational_text")]
        value: BigRational,
    },
    ParityOptDet {
        #[serde(default, with = "rational_text_opt")]
        c_nu: Option<BigRational>,
    },
    ParityOptRand {
        #[serde(default, with = "rational_text_opt")]
        c_nu: Option<BigRational>,
    },
    RandomGuess,
}

impl EstimatorChoice {
    pub fn to_spec(&self) -> EstimatorSpec {
        let half = ratio(1, 2);
        match self {
            EstimatorChoice::Empirical => EstimatorSpec::EmpiricalLoss,
            EstimatorChoice::Constant { value } => EstimatorSpec::ConstantValue {
                c: value.clone(),
            },
            EstimatorChoice::ParityOptDet { c_nu } => EstimatorSpec::ParityOptimalDet {
                c_nu: c_nu.clone().unwrap_or(half),
            },
            EstimatorChoice::ParityOptRand { c_nu } => EstimatorSpec::ParityOptimalRand {
                c_nu: c_nu.clone().unwrap_or(half),
            },
            EstimatorChoice::RandomGuess => EstimatorSpec::RandomGuess,
        }
    }

    pub fn name(&self) -> String {
        self.to_spec().name()
    }

    fn has_default_assignment(&self) -> bool {
        match self {
            EstimatorChoice::ParityOptDet { c_nu } | EstimatorChoice::ParityOptRand { c_nu } => {
                c_nu.as_ref().map(|v| *v == ratio(1, 2)).unwrap_or(true)
            }
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub setting: Setting,
    pub learner: LearnerChoice,
    pub estimator: EstimatorChoice,
    #[serde(with = "rational_text")]
    pub epsilon: BigRational,
    pub trials: u64,
    pub master_seed: u64,
    /// worker threads; 0 lets the pool pick. Never affects results.
    #[serde(default)]
    pub workers: usize,
}

/// One experiment draw, as written to the optional JSONL trial log.
#[derive(Debug, Clone, Serialize)]
pub struct TrialRecord {
    pub trial: u64,
    /// digest of the drawn distribution's labeling function
    pub dist: String,
    /// digest of the learner's output
    pub output: String,
    /// rank of the window-reduced input matrix (linear setting)
    pub reduced_rank: Option<usize>,
    /// whether the bias direction lies in the reduced row span
    pub sigma_spanned: Option<bool>,
    /// number of distinct sampled points (shattered setting)
    pub distinct_points: Option<usize>,
    pub learner_error: bool,
    pub true_loss: f64,
    pub true_loss_exact: String,
    pub estimate: f64,
    pub estimate_exact: String,
    pub failure: bool,
}

struct TrialOutcome {
    record: TrialRecord,
    loss: BigRational,
    /// (d - m) / (2d) for the trial's m, shattered runs only
    conditional_mean: Option<BigRational>,
    /// Var(loss | m) for the uniform ERM, shattered runs only
    conditional_var: f64,
}

/// A binomial statistic with its Wilson 95% interval and, when a closed
/// form applies, the exact prediction and a z-score against it.
#[derive(Debug, Clone, Serialize)]
pub struct RateStats {
    pub count: u64,
    pub trials: u64,
    pub rate: f64,
    pub wilson_lo: f64,
    pub wilson_hi: f64,
    pub theory: Option<f64>,
    pub theory_exact: Option<String>,
    pub z: Option<f64>,
}

impl RateStats {
    fn new(count: u64, trials: u64, theory: Option<BigRational>) -> Self {
        let rate = count as f64 / trials as f64;
        let (wilson_lo, wilson_hi) = wilson_interval(count, trials, 1.96);
        let theory_f = theory.as_ref().map(to_f64);
        let z = theory_f.and_then(|t| {
            let var = t * (1.0 - t) / trials as f64;
            if var > 0.0 {
                Some((rate - t) / var.sqrt())
            } else {
                None
            }
        });
        RateStats {
            count,
            trials,
            rate,
            wilson_lo,
            wilson_hi,
            theory: theory_f,
            theory_exact: theory.as_ref().map(fraction_string),
            z,
        }
    }

    /// Whether the exact prediction sits inside the z-sigma Wilson band.
    pub fn theory_within(&self, z: f64) -> Option<bool> {
        self.theory.map(|t| {
            let (lo, hi) = wilson_interval(self.count, self.trials, z);
            t >= lo && t <= hi
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub setting: String,
    pub learner: String,
    pub estimator: String,
    pub epsilon: String,
    pub trials: u64,
    /// the estimability failure event |estimate - loss| >= epsilon
    pub failure: RateStats,
    /// learner misses the generating function
    pub learner_error: RateStats,
    /// bias direction spanned by the reduced inputs (linear runs)
    pub sigma_spanned: Option<RateStats>,
    pub mean_true_loss: f64,
    pub mean_true_loss_exact: String,
    /// mixture over trials of the conditional mean loss (uniform-ERM
    /// shattered runs)
    pub mixture_expected_loss: Option<f64>,
    /// z-score of the mean loss against the mixture expectation
    pub loss_z: Option<f64>,
}

/// The per-trial RNG: one ChaCha stream per (master seed, trial index).
pub fn trial_rng(master_seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trial);
    rng
}

fn with_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if workers == 0 {
        Ok(f())
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("worker pool: {e}")))?;
        Ok(pool.install(f))
    }
}

fn validate(cfg: &ExperimentConfig) -> Result<()> {
    if cfg.trials == 0 {
        return Err(Error::InvalidConfig("trials must be >= 1".into()));
    }
    if cfg.epsilon <= BigRational::zero() || cfg.epsilon >= BigRational::one() {
        return Err(Error::InvalidConfig("epsilon must lie in (0, 1)".into()));
    }
    match &cfg.setting {
        Setting::Lin { q, d, n, .. } => {
            PrimeField::new(*q)?;
            if *n < 1 || *n > *d {
                return Err(Error::InvalidConfig(format!(
                    "need 1 <= n <= d, got n={n}, d={d}"
                )));
            }
            if let LearnerChoice::GeneralBiasErm { sigma, .. } = &cfg.learner {
                let w = (*n + 1).min(*d);
                if sigma.len() != w {
                    return Err(Error::InvalidConfig(format!(
                        "general bias sigma must have window length {w}, got {}",
                        sigma.len()
                    )));
                }
                if sigma.iter().all(|&s| s % q == 0) {
                    return Err(Error::InvalidConfig(
                        "general bias sigma must be nonzero mod q".into(),
                    ));
                }
            }
        }
        Setting::Shattered { d, .. } => {
            if *d < 1 {
                return Err(Error::InvalidConfig("shattered domain needs d >= 1".into()));
            }
            match &cfg.learner {
                LearnerChoice::BiasedErm | LearnerChoice::GeneralBiasErm { .. } => {
                    return Err(Error::InvalidConfig(
                        "biased ERMs read a linear window and do not apply to the shattered setting"
                            .into(),
                    ));
                }
                _ => {}
            }
            match &cfg.estimator {
                EstimatorChoice::ParityOptDet { .. } | EstimatorChoice::ParityOptRand { .. } => {
                    return Err(Error::InvalidConfig(
                        "parity-optimal estimators read a linear reduction and do not apply to the shattered setting".into(),
                    ));
                }
                _ => {}
            }
        }
    }
    Ok(())
}

/// Closed-form predictions that apply to this configuration.
struct Theories {
    failure: Option<BigRational>,
    learner_error: Option<BigRational>,
    span: Option<BigRational>,
}

fn theories(cfg: &ExperimentConfig) -> Theories {
    match &cfg.setting {
        Setting::Lin { q, d, n, family } => {
            let (q64, n64, d64) = (*q, *n as u64, *d as u64);
            // the delta/beta closed forms are stated for the (n+1)-wide
            // reduced window, i.e. n < d
            let learner_error = if cfg.learner.is_biased() && *n < *d {
                match family {
                    Family::D0 => Some(delta_learn(q64, n64)),
                    Family::D0D1 => Some(beta_nonlearn(q64, n64)),
                    Family::Full => None,
                }
            } else if matches!(cfg.learner, LearnerChoice::MatchedConstant) {
                Some(BigRational::zero())
            } else {
                None
            };
            let span = if *n < *d {
                Some(BigRational::one() - gamma_tv(q64, n64))
            } else {
                None
            };
            let quarter = ratio(1, 4);
            let failure = if matches!(cfg.estimator, EstimatorChoice::ParityOptDet { .. })
                && cfg.estimator.has_default_assignment()
                && *q == 2
                && cfg.epsilon == quarter
                && cfg.learner.is_biased()
            {
                match family {
                    Family::D0D1 if *n < *d => Some(parity_estimator_fail(d64, n64)),
                    Family::Full if *n == *d => Some(parity_estimator_fail(d64, d64)),
                    _ => None,
                }
            } else if matches!(cfg.learner, LearnerChoice::MatchedConstant)
                && matches!(cfg.estimator, EstimatorChoice::Empirical)
            {
                Some(BigRational::zero())
            } else {
                None
            };
            Theories {
                failure,
                learner_error,
                span,
            }
        }
        Setting::Shattered { .. } => {
            let matched = matches!(cfg.learner, LearnerChoice::MatchedConstant);
            Theories {
                failure: if matched && matches!(cfg.estimator, EstimatorChoice::Empirical) {
                    Some(BigRational::zero())
                } else {
                    None
                },
                learner_error: if matched { Some(BigRational::zero()) } else { None },
                span: None,
            }
        }
    }
}

struct LinRun {
    field: PrimeField,
    d: usize,
    n: usize,
    w: usize,
    active: Vec<usize>,
    sigma: FieldVector,
    kappa: u64,
    family: Family,
    learner: Option<LinLearner>,
    estimator: EstimatorSpec,
    epsilon: BigRational,
}

impl LinRun {
    fn lower(cfg: &ExperimentConfig) -> Result<LinRun> {
        let Setting::Lin { q, d, n, family } = &cfg.setting else {
            unreachable!("caller dispatched on setting");
        };
        let field = PrimeField::new(*q)?;
        let w = (*n + 1).min(*d);
        let active: Vec<usize> = (0..w).collect();
        let (sigma_raw, kappa) = match &cfg.learner {
            LearnerChoice::GeneralBiasErm { sigma, kappa } => (sigma.clone(), *kappa % q),
            _ => {
                let mut s = vec![0u64; w];
                s[0] = 1;
                (s, 0)
            }
        };
        let bias = SubclassSpec::general_bias(*d, active.clone(), sigma_raw.clone(), kappa)?;
        let window = SubclassSpec::Window {
            d: *d,
            active: active.clone(),
        };
        let learner = match &cfg.learner {
            LearnerChoice::BiasedErm | LearnerChoice::GeneralBiasErm { .. } => {
                Some(LinLearner::BiasedErm { bias: bias.clone() })
            }
            LearnerChoice::UniformErm => Some(LinLearner::UniformErm {
                class: window.clone(),
            }),
            LearnerChoice::BoundMinErm { bound } => Some(LinLearner::BoundMin {
                class: window.clone(),
                bound: bound.to_fn(),
            }),
            LearnerChoice::MatchedConstant => None,
        };
        Ok(LinRun {
            field,
            d: *d,
            n: *n,
            w,
            active,
            sigma: FieldVector::new(field, sigma_raw),
            kappa,
            family: *family,
            learner,
            estimator: cfg.estimator.to_spec(),
            epsilon: cfg.epsilon.clone(),
        })
    }

    fn embed_window(&self, window_coeffs: &[u64]) -> LinearHypothesis {
        let mut full = FieldVector::zeros(self.field, self.d);
        for (slot, &coord) in self.active.iter().enumerate() {
            full.set(coord, window_coeffs[slot]);
        }
        LinearHypothesis::new(full)
    }

    /// Uniform draw from {a on window : sigma . a = class}: all free
    /// coordinates uniform, the pivot solved.
    fn draw_in_class(&self, class: u64, rng: &mut ChaCha8Rng) -> LinearHypothesis {
        use rand::Rng;
        let q = self.field.q();
        let pivot = self
            .sigma
            .entries()
            .iter()
            .position(|&s| s != 0)
            .expect("sigma is nonzero");
        let mut coeffs = vec![0u64; self.w];
        for (j, c) in coeffs.iter_mut().enumerate() {
            if j != pivot {
                *c = rng.random_range(0..q);
            }
        }
        let mut rest = 0u64;
        for (j, &c) in coeffs.iter().enumerate() {
            if j != pivot {
                rest = self
                    .field
                    .add_raw(rest, self.field.mul_raw(self.sigma.get(j), c));
            }
        }
        let sigma_pivot_inv = self
            .field
            .inv_raw(self.sigma.get(pivot))
            .expect("pivot entry is nonzero");
        coeffs[pivot] = self
            .field
            .mul_raw(sigma_pivot_inv, self.field.sub_raw(class % q, rest));
        self.embed_window(&coeffs)
    }

    fn draw_truth(&self, rng: &mut ChaCha8Rng) -> LinearHypothesis {
        use rand::Rng;
        match self.family {
            Family::D0 => self.draw_in_class(self.kappa, rng),
            Family::D0D1 => {
                let shift = rng.random_range(0..2u64);
                self.draw_in_class((self.kappa + shift) % self.field.q(), rng)
            }
            Family::Full => {
                let q = self.field.q();
                let coeffs: Vec<u64> = (0..self.w).map(|_| rng.random_range(0..q)).collect();
                self.embed_window(&coeffs)
            }
        }
    }

    fn trial(&self, index: u64, master_seed: u64) -> Result<TrialOutcome> {
        let mut rng = trial_rng(master_seed, index);
        let truth = self.draw_truth(&mut rng);
        let inputs = FieldMatrix::random(self.field, self.n, self.d, &mut rng);
        let sample = LabeledSample::generate(inputs, &truth)?;
        let x_act = sample.inputs().select_cols(&self.active);
        let reduced_rank = x_act.rank();
        let sigma_spanned = x_act.stack_row(&self.sigma)?.rank() == reduced_rank;

        let output = match &self.learner {
            Some(l) => l.learn(self.field, &sample, &mut rng)?,
            None => truth.clone(), // matched constant ERM
        };
        let loss = population_risk(&truth, &output);
        let ctx = LinTrialContext {
            hypothesis: &output,
            sample: &sample,
            n: self.n,
            window_width: self.w,
            reduced_rank,
            sigma_spanned,
        };
        let estimate = estimate_lin(&self.estimator, &ctx, &mut rng);
        let failure = failure_indicator(&estimate, &loss, &self.epsilon);
        let record = TrialRecord {
            trial: index,
            dist: truth.digest(),
            output: output.digest(),
            reduced_rank: Some(reduced_rank),
            sigma_spanned: Some(sigma_spanned),
            distinct_points: None,
            learner_error: output != truth,
            true_loss: to_f64(&loss),
            true_loss_exact: fraction_string(&loss),
            estimate: to_f64(&estimate),
            estimate_exact: fraction_string(&estimate),
            failure,
        };
        Ok(TrialOutcome {
            record,
            loss,
            conditional_mean: None,
            conditional_var: 0.0,
        })
    }
}

struct ShatteredRun {
    d: usize,
    n: usize,
    learner: ShatteredLearner,
    is_uniform: bool,
    estimator: EstimatorSpec,
    epsilon: BigRational,
}

impl ShatteredRun {
    fn lower(cfg: &ExperimentConfig) -> Result<ShatteredRun> {
        let Setting::Shattered { d, n } = &cfg.setting else {
            unreachable!("caller dispatched on setting");
        };
        let learner = match &cfg.learner {
            LearnerChoice::MatchedConstant => ShatteredLearner::MatchedConstant,
            LearnerChoice::UniformErm => ShatteredLearner::UniformErm,
            LearnerChoice::BoundMinErm { bound } => ShatteredLearner::BoundMin {
                bound: bound.to_fn(),
            },
            _ => unreachable!("validated earlier"),
        };
        Ok(ShatteredRun {
            d: *d,
            n: *n,
            is_uniform: matches!(cfg.learner, LearnerChoice::UniformErm),
            learner,
            estimator: cfg.estimator.to_spec(),
            epsilon: cfg.epsilon.clone(),
        })
    }

    fn trial(&self, index: u64, master_seed: u64) -> Result<TrialOutcome> {
        let mut rng = trial_rng(master_seed, index);
        let (truth, sample) = draw_instance(self.d, self.n, &mut rng);
        let m = sample.distinct_points();
        let output = self.learner.learn(&sample, self.d, &truth, &mut rng)?;
        let loss = true_loss(&output, &truth);
        let ctx = ShatteredTrialContext {
            hypothesis: &output,
            sample: &sample,
        };
        let estimate = estimate_shattered(&self.estimator, &ctx, &mut rng)?;
        let failure = failure_indicator(&estimate, &loss, &self.epsilon);
        let record = TrialRecord {
            trial: index,
            dist: truth.digest(),
            output: output.digest(),
            reduced_rank: None,
            sigma_spanned: None,
            distinct_points: Some(m),
            learner_error: output != truth,
            true_loss: to_f64(&loss),
            true_loss_exact: fraction_string(&loss),
            estimate: to_f64(&estimate),
            estimate_exact: fraction_string(&estimate),
            failure,
        };
        Ok(TrialOutcome {
            record,
            loss,
            conditional_mean: self.is_uniform.then(|| expected_erm_loss(self.d, m)),
            conditional_var: if self.is_uniform {
                (self.d - m) as f64 / (4.0 * (self.d * self.d) as f64)
            } else {
                0.0
            },
        })
    }
}

/// Run every trial of the configured experiment. Returns the aggregate
/// summary and the ordered per-trial records; both are bit-identical for a
/// fixed (config, master seed) at any worker count.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<(Summary, Vec<TrialRecord>)> {
    validate(cfg)?;
    let outcomes: Vec<TrialOutcome> = match &cfg.setting {
        Setting::Lin { .. } => {
            let run = LinRun::lower(cfg)?;
            let seed = cfg.master_seed;
            let trials = cfg.trials;
            with_pool(cfg.workers, move || {
                (0..trials)
                    .into_par_iter()
                    .map(|i| run.trial(i, seed))
                    .collect::<Result<Vec<_>>>()
            })??
        }
        Setting::Shattered { .. } => {
            let run = ShatteredRun::lower(cfg)?;
            let seed = cfg.master_seed;
            let trials = cfg.trials;
            with_pool(cfg.workers, move || {
                (0..trials)
                    .into_par_iter()
                    .map(|i| run.trial(i, seed))
                    .collect::<Result<Vec<_>>>()
            })??
        }
    };
    let summary = aggregate(cfg, &outcomes);
    let records = outcomes.into_iter().map(|o| o.record).collect();
    Ok((summary, records))
}

fn aggregate(cfg: &ExperimentConfig, outcomes: &[TrialOutcome]) -> Summary {
    let trials = outcomes.len() as u64;
    let th = theories(cfg);
    let failures = outcomes.iter().filter(|o| o.record.failure).count() as u64;
    let learner_errors = outcomes.iter().filter(|o| o.record.learner_error).count() as u64;
    let span_count = outcomes
        .iter()
        .filter(|o| o.record.sigma_spanned == Some(true))
        .count() as u64;
    let has_span = outcomes
        .first()
        .map(|o| o.record.sigma_spanned.is_some())
        .unwrap_or(false);

    let mut loss_sum = BigRational::zero();
    let mut cond_sum = BigRational::zero();
    let mut has_cond = false;
    let mut var_sum = 0f64;
    for o in outcomes {
        loss_sum += &o.loss;
        if let Some(c) = &o.conditional_mean {
            cond_sum += c;
            has_cond = true;
        }
        var_sum += o.conditional_var;
    }
    let trials_r = BigRational::from_integer(BigInt::from(trials));
    let mean_loss = &loss_sum / &trials_r;
    let mixture = has_cond.then(|| &cond_sum / &trials_r);
    let loss_z = mixture.as_ref().and_then(|mix| {
        let sigma_mean = var_sum.sqrt() / trials as f64;
        if sigma_mean > 0.0 {
            Some((to_f64(&mean_loss) - to_f64(mix)) / sigma_mean)
        } else {
            None
        }
    });

    Summary {
        setting: cfg.setting.name(),
        learner: cfg.learner.name(),
        estimator: cfg.estimator.name(),
        epsilon: fraction_string(&cfg.epsilon),
        trials,
        failure: RateStats::new(failures, trials, th.failure),
        learner_error: RateStats::new(learner_errors, trials, th.learner_error),
        sigma_spanned: has_span.then(|| RateStats::new(span_count, trials, th.span)),
        mean_true_loss: to_f64(&mean_loss),
        mean_true_loss_exact: decimal_string(&mean_loss, 12),
        mixture_expected_loss: mixture.as_ref().map(to_f64),
        loss_z,
    }
}

/// Standard Wilson score interval, clamped to [0, 1]. The lower bound is
/// exactly 0 at zero successes and the upper exactly 1 at full successes
/// (algebraically true; enforced against float rounding).
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    assert!(trials >= 1 && successes <= trials);
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = p + z2 / (2.0 * n);
    let margin = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let lo = if successes == 0 {
        0.0
    } else {
        ((center - margin) / denom).clamp(0.0, 1.0)
    };
    let hi = if successes == trials {
        1.0
    } else {
        ((center + margin) / denom).clamp(0.0, 1.0)
    };
    (lo, hi)
}

/// Exact Binomial(n, 1/2) point mass.
pub fn binomial_half_pmf(n: u64, k: u64) -> BigRational {
    if k > n {
        return BigRational::zero();
    }
    let mut c = BigInt::one();
    for i in 0..k {
        c = c * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    BigRational::new(c, BigInt::from(2u8).pow(n as u32))
}

#[derive(Debug, Clone)]
pub struct ChiSquareOutcome {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Pearson chi-square of observed counts against Binomial(n, 1/2), with
/// adjacent bins merged until every expected count reaches 5. Returns
/// `None` when fewer than two merged bins remain.
pub fn chi_square_binomial_half(
    observed: &BTreeMap<u64, u64>,
    n_param: u64,
) -> Option<ChiSquareOutcome> {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    let total: u64 = observed.values().sum();
    if total == 0 {
        return None;
    }
    // expected and observed across the full support 0..=n
    let mut bins: Vec<(f64, f64)> = (0..=n_param)
        .map(|k| {
            let e = to_f64(&binomial_half_pmf(n_param, k)) * total as f64;
            let o = *observed.get(&k).unwrap_or(&0) as f64;
            (o, e)
        })
        .collect();
    // merge small-expectation bins left to right
    let mut merged: Vec<(f64, f64)> = Vec::new();
    let mut acc = (0.0, 0.0);
    for (o, e) in bins.drain(..) {
        acc.0 += o;
        acc.1 += e;
        if acc.1 >= 5.0 {
            merged.push(acc);
            acc = (0.0, 0.0);
        }
    }
    if acc.1 > 0.0 {
        if let Some(last) = merged.last_mut() {
            last.0 += acc.0;
            last.1 += acc.1;
        } else {
            merged.push(acc);
        }
    }
    if merged.len() < 2 {
        return None;
    }
    let statistic: f64 = merged
        .iter()
        .map(|(o, e)| (o - e) * (o - e) / e)
        .sum();
    let dof = merged.len() - 1;
    let dist = ChiSquared::new(dof as f64).expect("dof >= 1");
    Some(ChiSquareOutcome {
        statistic,
        dof,
        p_value: 1.0 - dist.cdf(statistic),
    })
}

/// One side of a trade-off report.
#[derive(Debug, Clone, Serialize)]
pub struct ItemOutcome {
    pub label: String,
    pub learner: String,
    pub count: u64,
    pub trials: u64,
    pub rate: f64,
    pub threshold: f64,
    pub threshold_exact: String,
    /// empirical rate stays clear of the threshold (3-sigma slack)
    pub holds: bool,
}

fn item_outcome(
    label: &str,
    learner: &str,
    stats: &RateStats,
    threshold: &BigRational,
) -> ItemOutcome {
    let t = to_f64(threshold);
    let sigma = (t * (1.0 - t) / stats.trials as f64).sqrt();
    // the item is VIOLATED when the empirical failure reaches the
    // threshold minus the 3-sigma sampling band
    let violated = stats.rate >= t - 3.0 * sigma;
    ItemOutcome {
        label: label.to_string(),
        learner: learner.to_string(),
        count: stats.count,
        trials: stats.trials,
        rate: stats.rate,
        threshold: t,
        threshold_exact: fraction_string(threshold),
        holds: !violated,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TradeoffReport {
    pub setting: String,
    pub estimator: String,
    pub epsilon: String,
    pub item1: ItemOutcome,
    pub item2: ItemOutcome,
    /// at least one item's empirical failure exceeds its threshold
    pub violated: bool,
}

/// Build the canonical config pair for a trade-off run over one setting
/// and estimator.
pub fn tradeoff_pair(
    setting: &Setting,
    estimator: &EstimatorChoice,
    epsilon: &BigRational,
    trials: u64,
    master_seed: u64,
    workers: usize,
) -> (ExperimentConfig, ExperimentConfig) {
    let mk = |setting: Setting, learner: LearnerChoice, seed: u64| ExperimentConfig {
        setting,
        learner,
        estimator: estimator.clone(),
        epsilon: epsilon.clone(),
        trials,
        master_seed: seed,
        workers,
    };
    match setting {
        Setting::Shattered { .. } => (
            mk(
                setting.clone(),
                LearnerChoice::MatchedConstant,
                master_seed,
            ),
            mk(setting.clone(), LearnerChoice::UniformErm, master_seed + 1),
        ),
        Setting::Lin { q, d, n, .. } => {
            let d0 = Setting::Lin {
                q: *q,
                d: *d,
                n: *n,
                family: Family::D0,
            };
            let d0d1 = Setting::Lin {
                q: *q,
                d: *d,
                n: *n,
                family: Family::D0D1,
            };
            (
                mk(d0, LearnerChoice::BiasedErm, master_seed),
                mk(d0d1, LearnerChoice::BiasedErm, master_seed + 1),
            )
        }
    }
}

/// Run the two-sided trade-off: in the shattered setting, the estimator is
/// scored against the matched constant ERM (item 1) and the uniform ERM
/// (item 2), both at the same accuracy, with both thresholds 1/2; in the
/// linear setting, item 1 is the biased learner's error on its matched
/// family against delta, and item 2 is the estimator's failure over the
/// two-class family against eta. The verdict says whether at least one
/// item is violated.
pub fn tradeoff_report(
    item1_cfg: &ExperimentConfig,
    item2_cfg: &ExperimentConfig,
) -> Result<TradeoffReport> {
    if item1_cfg.estimator != item2_cfg.estimator {
        return Err(Error::InvalidConfig(
            "trade-off items must share the estimator".into(),
        ));
    }
    if item1_cfg.epsilon != item2_cfg.epsilon {
        return Err(Error::InvalidConfig(
            "trade-off items must share epsilon".into(),
        ));
    }
    match (&item1_cfg.setting, &item2_cfg.setting) {
        (Setting::Shattered { d: d1, n: n1 }, Setting::Shattered { d: d2, n: n2 }) => {
            if (d1, n1) != (d2, n2) {
                return Err(Error::InvalidConfig(
                    "trade-off items must share the setting parameters".into(),
                ));
            }
            if !matches!(item1_cfg.learner, LearnerChoice::MatchedConstant)
                || !matches!(item2_cfg.learner, LearnerChoice::UniformErm)
            {
                return Err(Error::InvalidConfig(
                    "shattered trade-off pairs the matched constant ERM with the uniform ERM"
                        .into(),
                ));
            }
            let (s1, _) = run_experiment(item1_cfg)?;
            let (s2, _) = run_experiment(item2_cfg)?;
            let half = ratio(1, 2);
            let item1 = item_outcome("matched-constant-estimation", "constant", &s1.failure, &half);
            let item2 = item_outcome("uniform-erm-estimation", "uniform", &s2.failure, &half);
            let violated = !item1.holds || !item2.holds;
            Ok(TradeoffReport {
                setting: item1_cfg.setting.name(),
                estimator: item1_cfg.estimator.name(),
                epsilon: fraction_string(&item1_cfg.epsilon),
                item1,
                item2,
                violated,
            })
        }
        (
            Setting::Lin {
                q: q1,
                d: d1,
                n: n1,
                family: f1,
            },
            Setting::Lin {
                q: q2,
                d: d2,
                n: n2,
                family: f2,
            },
        ) => {
            if (q1, d1, n1) != (q2, d2, n2) {
                return Err(Error::InvalidConfig(
                    "trade-off items must share q, d, n".into(),
                ));
            }
            if (*f1, *f2) != (Family::D0, Family::D0D1) {
                return Err(Error::InvalidConfig(
                    "linear trade-off pairs family d0 (item 1) with d0d1 (item 2)".into(),
                ));
            }
            if !item1_cfg.learner.is_biased()
                || item1_cfg.learner != item2_cfg.learner
            {
                return Err(Error::InvalidConfig(
                    "linear trade-off runs one biased ERM on both families".into(),
                ));
            }
            let (s1, _) = run_experiment(item1_cfg)?;
            let (s2, _) = run_experiment(item2_cfg)?;
            let delta = delta_learn(*q1, *n1 as u64);
            let eta = crate::exactprob::eta_f(*q1, *n1 as u64);
            // item 1: the learner (0, delta)-learns its matched family;
            // holds when the error stays at/below delta
            let e1 = &s1.learner_error;
            let sigma1 = {
                let t = to_f64(&delta);
                (t * (1.0 - t) / e1.trials as f64).sqrt()
            };
            let item1 = ItemOutcome {
                label: "biased-erm-learning-d0".into(),
                learner: item1_cfg.learner.name(),
                count: e1.count,
                trials: e1.trials,
                rate: e1.rate,
                threshold: to_f64(&delta),
                threshold_exact: fraction_string(&delta),
                holds: e1.rate <= to_f64(&delta) + 3.0 * sigma1,
            };
            let item2 = item_outcome(
                "biased-erm-estimation-d0d1",
                &item2_cfg.learner.name(),
                &s2.failure,
                &eta,
            );
            let violated = !item1.holds || !item2.holds;
            Ok(TradeoffReport {
                setting: item2_cfg.setting.name(),
                estimator: item1_cfg.estimator.name(),
                epsilon: fraction_string(&item1_cfg.epsilon),
                item1,
                item2,
                violated,
            })
        }
        _ => Err(Error::InvalidConfig(
            "trade-off items must share the setting kind".into(),
        )),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LoosenessStats {
    pub min: f64,
    pub p25: f64,
    pub p50: f64,
    pub p75: f64,
    pub max: f64,
    pub mean: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AuditReport {
    pub bound: String,
    pub setting: String,
    pub trials: u64,
    /// the overparameterization loss level the audit scores against
    pub alpha: f64,
    pub alpha_exact: String,
    /// fraction of trials where loss < empirical + C for the
    /// bound-minimizing ERM
    pub validity_rate: f64,
    pub violation_count: u64,
    /// fraction of trials where the bound-minimizing ERM's loss exceeds
    /// alpha
    pub overfit_rate: f64,
    pub mean_bound_min_loss: f64,
    /// distribution of C(truth, S) minus the (zero) generalization gap of
    /// the matched constant ERM
    pub looseness: LoosenessStats,
}

/// Audit one complexity term: (a) how often the generic bound inequality
/// `loss < empirical + C` holds for the ERM that minimizes C; (b) how
/// often that ERM's loss exceeds the overparameterization level alpha;
/// (c) how loose the bound is on the matched constant ERM, whose
/// generalization gap is exactly zero.
pub fn audit_bound(
    bound: BoundChoice,
    setting: &Setting,
    trials: u64,
    master_seed: u64,
    workers: usize,
) -> Result<AuditReport> {
    if trials == 0 {
        return Err(Error::InvalidConfig("trials must be >= 1".into()));
    }
    let cfn = bound.to_fn();
    let alpha: BigRational = match setting {
        Setting::Shattered { d, n } => {
            BigRational::new(BigInt::from((*d - *n.min(d)) as u64), BigInt::from(2 * *d as u64))
        }
        Setting::Lin { q, .. } => {
            ratio(*q as i64 - 1, 2 * *q as i64)
        }
    };

    struct AuditTrial {
        valid: bool,
        overfit: bool,
        loss: BigRational,
        gap: f64,
    }

    let per_trial: Vec<AuditTrial> = match setting {
        Setting::Shattered { d, n } => {
            let (d, n) = (*d, *n);
            let learner = ShatteredLearner::BoundMin { bound: cfn.clone() };
            let alpha = alpha.clone();
            let cfn = cfn.clone();
            with_pool(workers, move || {
                (0..trials)
                    .into_par_iter()
                    .map(|i| {
                        let mut rng = trial_rng(master_seed, i);
                        let (truth, sample) = draw_instance(d, n, &mut rng);
                        let h = learner.learn(&sample, d, &truth, &mut rng)?;
                        let emp = sample.empirical_loss(&h);
                        let loss = true_loss(&h, &truth);
                        let c = cfn.eval_shattered(&h, &sample);
                        let valid = to_f64(&loss) < to_f64(&emp) + c;
                        let overfit = loss > alpha;
                        let gap = cfn.eval_shattered(&truth, &sample);
                        Ok(AuditTrial {
                            valid,
                            overfit,
                            loss,
                            gap,
                        })
                    })
                    .collect::<Result<Vec<_>>>()
            })??
        }
        Setting::Lin { .. } => {
            let base = ExperimentConfig {
                setting: setting.clone(),
                learner: LearnerChoice::BoundMinErm { bound },
                estimator: EstimatorChoice::Empirical,
                epsilon: ratio(1, 4),
                trials,
                master_seed,
                workers,
            };
            validate(&base)?;
            let run = LinRun::lower(&base)?;
            let alpha = alpha.clone();
            let cfn = cfn.clone();
            with_pool(workers, move || {
                (0..trials)
                    .into_par_iter()
                    .map(|i| {
                        let mut rng = trial_rng(master_seed, i);
                        let truth = run.draw_truth(&mut rng);
                        let inputs = FieldMatrix::random(run.field, run.n, run.d, &mut rng);
                        let sample = LabeledSample::generate(inputs, &truth)?;
                        let h = run
                            .learner
                            .as_ref()
                            .expect("bound-min learner")
                            .learn(run.field, &sample, &mut rng)?;
                        let emp = sample.empirical_loss(&h)?;
                        let loss = population_risk(&truth, &h);
                        let c = cfn.eval_lin(&h, &sample);
                        let valid = to_f64(&loss) < to_f64(&emp) + c;
                        let overfit = loss > alpha;
                        let gap = cfn.eval_lin(&truth, &sample);
                        Ok(AuditTrial {
                            valid,
                            overfit,
                            loss,
                            gap,
                        })
                    })
                    .collect::<Result<Vec<_>>>()
            })??
        }
    };

    let valid_count = per_trial.iter().filter(|t| t.valid).count() as u64;
    let overfit_count = per_trial.iter().filter(|t| t.overfit).count() as u64;
    let mut gaps: Vec<f64> = per_trial.iter().map(|t| t.gap).collect();
    gaps.sort_by(|a, b| a.partial_cmp(b).expect("finite gaps"));
    let mut loss_sum = BigRational::zero();
    for t in &per_trial {
        loss_sum += &t.loss;
    }
    let quantile = |q: f64| gaps[(((gaps.len() - 1) as f64) * q).round() as usize];
    Ok(AuditReport {
        bound: bound.name().into(),
        setting: setting.name(),
        trials,
        alpha: to_f64(&alpha),
        alpha_exact: fraction_string(&alpha),
        validity_rate: valid_count as f64 / trials as f64,
        violation_count: trials - valid_count,
        overfit_rate: overfit_count as f64 / trials as f64,
        mean_bound_min_loss: to_f64(&loss_sum) / trials as f64,
        looseness: LoosenessStats {
            min: gaps[0],
            p25: quantile(0.25),
            p50: quantile(0.5),
            p75: quantile(0.75),
            max: gaps[gaps.len() - 1],
            mean: gaps.iter().sum::<f64>() / gaps.len() as f64,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lin_cfg(q: u64, d: usize, n: usize, family: Family) -> ExperimentConfig {
        ExperimentConfig {
            setting: Setting::Lin { q, d, n, family },
            learner: LearnerChoice::BiasedErm,
            estimator: EstimatorChoice::Empirical,
            epsilon: ratio(1, 4),
            trials: 2_000,
            master_seed: 99,
            workers: 0,
        }
    }

    #[test]
    fn wilson_examples() {
        let (lo, _) = wilson_interval(0, 100, 1.96);
        assert_eq!(lo, 0.0);
        let (_, hi) = wilson_interval(100, 100, 1.96);
        assert_eq!(hi, 1.0);
        let (lo, hi) = wilson_interval(50, 100, 1.96);
        assert!((lo + hi - 1.0).abs() < 1e-9, "symmetric about 0.5");
        let width = hi - lo;
        assert!((width - 0.19).abs() < 0.01, "width {width}");
    }

    #[test]
    fn identical_seeds_are_bit_identical_across_worker_counts() {
        let mut cfg = lin_cfg(3, 5, 2, Family::D0D1);
        cfg.estimator = EstimatorChoice::RandomGuess;
        let mut outputs = Vec::new();
        for workers in [1usize, 4, 16] {
            cfg.workers = workers;
            let (summary, records) = run_experiment(&cfg).unwrap();
            outputs.push((
                serde_json::to_string(&summary).unwrap(),
                serde_json::to_string(&records).unwrap(),
            ));
        }
        assert_eq!(outputs[0], outputs[1]);
        assert_eq!(outputs[1], outputs[2]);
    }

    #[test]
    fn lin_losses_obey_the_two_point_law() {
        let cfg = lin_cfg(3, 5, 2, Family::Full);
        let (_, records) = run_experiment(&cfg).unwrap();
        for r in &records {
            assert!(
                r.true_loss_exact == "0" || r.true_loss_exact == "2/3",
                "loss {}",
                r.true_loss_exact
            );
        }
    }

    #[test]
    fn matched_constant_never_fails_with_empirical_estimator() {
        let mut cfg = lin_cfg(2, 6, 3, Family::Full);
        cfg.learner = LearnerChoice::MatchedConstant;
        let (summary, _) = run_experiment(&cfg).unwrap();
        assert_eq!(summary.failure.count, 0);
        assert_eq!(summary.learner_error.count, 0);
        assert_eq!(summary.failure.theory, Some(0.0));
        assert_eq!(summary.failure.theory_within(3.0), Some(true));

        let shattered = ExperimentConfig {
            setting: Setting::Shattered { d: 12, n: 6 },
            learner: LearnerChoice::MatchedConstant,
            estimator: EstimatorChoice::Empirical,
            epsilon: ratio(1, 8),
            trials: 2_000,
            master_seed: 5,
            workers: 0,
        };
        let (summary, _) = run_experiment(&shattered).unwrap();
        assert_eq!(summary.failure.count, 0);
        assert!(summary.mean_true_loss == 0.0);
    }

    #[test]
    fn learner_error_tracks_delta_learn_on_d0() {
        let mut cfg = lin_cfg(2, 5, 2, Family::D0);
        cfg.trials = 50_000;
        let (summary, _) = run_experiment(&cfg).unwrap();
        assert!(summary.learner_error.theory.is_some());
        assert_eq!(summary.learner_error.theory_within(3.0), Some(true));
        // span statistic tracks its closed form too
        let span = summary.sigma_spanned.expect("lin run records span");
        assert_eq!(span.theory_within(3.0), Some(true));
    }

    #[test]
    fn validation_rejects_bad_configs() {
        let mut cfg = lin_cfg(4, 5, 2, Family::D0);
        assert!(matches!(
            run_experiment(&cfg),
            Err(Error::CompositeModulus(4))
        ));
        cfg = lin_cfg(2, 5, 2, Family::D0);
        cfg.trials = 0;
        assert!(run_experiment(&cfg).is_err());
        cfg = lin_cfg(2, 5, 2, Family::D0);
        cfg.epsilon = ratio(5, 4);
        assert!(run_experiment(&cfg).is_err());
        cfg = lin_cfg(2, 5, 8, Family::D0);
        assert!(run_experiment(&cfg).is_err());
        // parity estimators cannot run on the shattered setting
        let bad = ExperimentConfig {
            setting: Setting::Shattered { d: 8, n: 4 },
            learner: LearnerChoice::UniformErm,
            estimator: EstimatorChoice::ParityOptDet { c_nu: None },
            epsilon: ratio(1, 4),
            trials: 10,
            master_seed: 0,
            workers: 0,
        };
        assert!(run_experiment(&bad).is_err());
        // biased learners cannot run on the shattered setting
        let bad = ExperimentConfig {
            setting: Setting::Shattered { d: 8, n: 4 },
            learner: LearnerChoice::BiasedErm,
            estimator: EstimatorChoice::Empirical,
            epsilon: ratio(1, 4),
            trials: 10,
            master_seed: 0,
            workers: 0,
        };
        assert!(run_experiment(&bad).is_err());
    }

    #[test]
    fn binomial_pmf_sums_to_one() {
        for n in [1u64, 5, 12] {
            let mut sum = BigRational::zero();
            for k in 0..=n {
                sum += binomial_half_pmf(n, k);
            }
            assert_eq!(sum, BigRational::one());
        }
        assert_eq!(binomial_half_pmf(4, 2), ratio(6, 16));
    }

    #[test]
    fn chi_square_accepts_binomial_counts() {
        use rand::Rng;
        let mut rng = trial_rng(7, 0);
        let n_param = 12u64;
        let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
        for _ in 0..20_000 {
            let x: u64 = (0..n_param).map(|_| rng.random_range(0..2u64)).sum();
            *counts.entry(x).or_insert(0) += 1;
        }
        let outcome = chi_square_binomial_half(&counts, n_param).unwrap();
        assert!(outcome.p_value > 0.01, "p = {}", outcome.p_value);
        // a clearly non-binomial pile fails
        let mut bad: BTreeMap<u64, u64> = BTreeMap::new();
        bad.insert(0, 20_000);
        let outcome = chi_square_binomial_half(&bad, n_param).unwrap();
        assert!(outcome.p_value < 1e-6);
    }

    #[test]
    fn tradeoff_requires_matching_pairs() {
        let (c1, c2) = tradeoff_pair(
            &Setting::Shattered { d: 8, n: 4 },
            &EstimatorChoice::Empirical,
            &ratio(1, 8),
            500,
            3,
            0,
        );
        assert!(tradeoff_report(&c1, &c2).is_ok());
        // mismatched estimator
        let mut c2_bad = c2.clone();
        c2_bad.estimator = EstimatorChoice::RandomGuess;
        assert!(tradeoff_report(&c1, &c2_bad).is_err());
        // mismatched setting
        let mut c2_bad = c2.clone();
        c2_bad.setting = Setting::Shattered { d: 9, n: 4 };
        assert!(tradeoff_report(&c1, &c2_bad).is_err());
    }

    /// At q = 11 the learnability side holds at its exact delta while
    /// every built-in estimator's failure over the two-class family
    /// reaches the exact eta level, which exceeds 0.4.
    #[test]
    fn lin_tradeoff_confirms_non_estimability_at_q11() {
        use crate::exactprob::eta_f;
        let setting = Setting::Lin {
            q: 11,
            d: 8,
            n: 4,
            family: Family::D0D1,
        };
        assert!(eta_f(11, 4) > ratio(2, 5));
        let nu = ratio(5, 11); // (q - 1) / 2q
        for (i, est) in [
            EstimatorChoice::Empirical,
            EstimatorChoice::Constant { value: ratio(0, 1) },
            EstimatorChoice::RandomGuess,
        ]
        .iter()
        .enumerate()
        {
            let (c1, c2) = tradeoff_pair(&setting, est, &nu, 20_000, 900 + i as u64, 0);
            let report = tradeoff_report(&c1, &c2).unwrap();
            assert!(
                report.item1.holds,
                "{}: learning item should hold (rate {} vs delta {})",
                report.estimator, report.item1.rate, report.item1.threshold_exact
            );
            assert!(
                !report.item2.holds,
                "{}: estimation item should be violated (rate {} vs eta {})",
                report.estimator, report.item2.rate, report.item2.threshold_exact
            );
            assert!(report.violated);
        }
    }

    #[test]
    fn audit_constant_bounds_behave() {
        let setting = Setting::Shattered { d: 10, n: 5 };
        // C = 1 is always valid and exactly 1 loose on matched constants
        let one = audit_bound(BoundChoice::One, &setting, 2_000, 11, 0).unwrap();
        assert_eq!(one.validity_rate, 1.0);
        assert_eq!(one.looseness.min, 1.0);
        assert_eq!(one.looseness.max, 1.0);
        // C = 0 is violated exactly when the bound-min ERM has positive loss
        let zero = audit_bound(BoundChoice::Zero, &setting, 2_000, 11, 0).unwrap();
        assert!(zero.violation_count > 0);
        assert_eq!(zero.looseness.max, 0.0);
    }
}
