//! Command-line front end: argument parsing, config-file merging,
//! provenance headers, CSV/JSONL emission, and the self-test ledger.
//!
//! Exit codes are a stable contract: 0 success, 1 check failure,
//! 2 configuration error.

use clap::{Args, Parser, Subcommand};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::exactprob::{
    decimal_string, eta_f, fraction_string, gaussian_coeff_int, parse_rational, q_pow, rank_prob,
    ratio, to_f64,
};
use crate::expharness::{
    audit_bound, run_experiment, tradeoff_pair, tradeoff_report, wilson_interval, BoundChoice,
    EstimatorChoice, ExperimentConfig, Family, LearnerChoice, Setting, Summary, TrialRecord,
};
use crate::ffmat::{enumerate_matrices, enumerate_vectors, FieldMatrix, PrimeField};
use crate::linclass::{
    consistent_count, enumerate_consistent, enumerate_hypotheses, population_risk, LabeledSample,
    SubclassSpec,
};
use crate::shattered::p1_p2_discrepancy;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

const SEED_ENV: &str = "ESTIMLAB_SEED";

#[derive(Parser, Debug)]
#[command(
    name = "estimlab",
    version,
    about = "Exact and Monte-Carlo laboratory for the limits of loss estimation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exact rank distribution of uniform random matrices over F_q, with
    /// an optional Monte-Carlo cross-check
    RankDist(RankDistArgs),
    /// Exact eta = F(q, n) table with the 1/2 - 1/q reference column
    EtaTable(EtaTableArgs),
    /// Run a seeded (distribution, learner, estimator) experiment
    #[command(subcommand)]
    Simulate(SimulateCmd),
    /// Run the two-item trade-off report for one estimator
    Tradeoff(TradeoffArgs),
    /// Audit a complexity bound: validity, overfitting, and looseness
    Audit(AuditArgs),
    /// Run every brute-force oracle check and print the ledger
    Selftest,
}

#[derive(Args, Debug)]
struct RankDistArgs {
    #[arg(long)]
    q: u64,
    #[arg(long)]
    n1: u64,
    #[arg(long)]
    n2: u64,
    /// add an empirical column from this many Monte-Carlo draws
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EtaTableArgs {
    /// comma-separated prime moduli
    #[arg(long, value_delimiter = ',', default_value = "2,3,11,31,101")]
    q: Vec<u64>,
    /// comma-separated sample sizes
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5,6,10,20,50")]
    n: Vec<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum SimulateCmd {
    /// linear functionals over F_q^d
    Lin(SimulateArgs),
    /// shattered domain of size d
    Shattered(SimulateArgs),
}

#[derive(Args, Debug, Default)]
struct SimulateArgs {
    /// JSON config file; explicit flags override its fields
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    q: Option<u64>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    /// d0 | d0d1 | full
    #[arg(long)]
    family: Option<String>,
    /// a0 | bias:<sigma-csv>:<kappa> | constant | uniform | bayes | bound-min
    #[arg(long)]
    learner: Option<String>,
    /// empirical | const:<value> | parity-opt-det | parity-opt-rand | random
    #[arg(long)]
    estimator: Option<String>,
    /// bound for the bound-min learner: zero | one | weight
    #[arg(long)]
    bound: Option<String>,
    /// accuracy threshold, e.g. 0.25 or 1/4
    #[arg(long)]
    epsilon: Option<String>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    /// summary CSV path (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv (summary only) | jsonl (summary + per-trial log next to it)
    #[arg(long)]
    format: Option<String>,
}

/// The config-file mirror of the simulate flags. Flags win over file
/// fields; defaults fill the rest.
#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimulateFileConfig {
    q: Option<u64>,
    d: Option<usize>,
    n: Option<usize>,
    family: Option<String>,
    learner: Option<String>,
    estimator: Option<String>,
    bound: Option<String>,
    epsilon: Option<String>,
    trials: Option<u64>,
    seed: Option<u64>,
    workers: Option<usize>,
    out: Option<String>,
    format: Option<String>,
}

#[derive(Args, Debug)]
struct TradeoffArgs {
    /// lin | shattered
    #[arg(long)]
    setting: String,
    #[arg(long)]
    q: Option<u64>,
    #[arg(long)]
    d: usize,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    estimator: String,
    /// defaults to (q-1)/2q for lin, (d-n)/4d for shattered
    #[arg(long)]
    epsilon: Option<String>,
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 0)]
    workers: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct AuditArgs {
    /// zero | one | weight
    #[arg(long)]
    bound: String,
    /// lin | shattered
    #[arg(long)]
    setting: String,
    #[arg(long)]
    q: Option<u64>,
    #[arg(long)]
    d: usize,
    #[arg(long)]
    n: usize,
    /// family for lin audits: d0 | d0d1 | full
    #[arg(long)]
    family: Option<String>,
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 0)]
    workers: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Entry point used by the binary: parse the process arguments and run.
pub fn main_entry() -> i32 {
    run_from(std::env::args())
}

/// Parse and run from an explicit argument list (testable).
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_CONFIG,
            };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::CompositeModulus(_)
                | Error::ModulusOutOfRange(_)
                | Error::InvalidConfig(_)
                | Error::DimensionMismatch(_) => EXIT_CONFIG,
                _ => EXIT_CHECK_FAILED,
            }
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::RankDist(args) => cmd_rank_dist(args),
        Command::EtaTable(args) => cmd_eta_table(args),
        Command::Simulate(SimulateCmd::Lin(args)) => cmd_simulate(args, true),
        Command::Simulate(SimulateCmd::Shattered(args)) => cmd_simulate(args, false),
        Command::Tradeoff(args) => cmd_tradeoff(args),
        Command::Audit(args) => cmd_audit(args),
        Command::Selftest => Ok(cmd_selftest()),
    }
}

fn resolve_seed(flag: Option<u64>) -> u64 {
    flag.or_else(|| {
        std::env::var(SEED_ENV)
            .ok()
            .and_then(|s| s.parse::<u64>().ok())
    })
    .unwrap_or(0)
}

fn provenance(config_json: &str, seed: u64) -> String {
    format!(
        "# estimlab {}\n# config: {}\n# seed: {}\n",
        env!("CARGO_PKG_VERSION"),
        config_json,
        seed
    )
}

fn emit(out: &Option<PathBuf>, content: &str) -> Result<()> {
    match out {
        Some(path) => {
            let mut f = std::fs::File::create(path)?;
            f.write_all(content.as_bytes())?;
            Ok(())
        }
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

// ---------------------------------------------------------------- rank-dist

fn cmd_rank_dist(args: RankDistArgs) -> Result<i32> {
    let field = PrimeField::new(args.q)?;
    if args.n1 < 1 || args.n2 < 1 {
        return Err(Error::InvalidConfig("need n1, n2 >= 1".into()));
    }
    let seed = resolve_seed(args.seed);
    let config_json = format!(
        "{{\"cmd\":\"rank-dist\",\"q\":{},\"n1\":{},\"n2\":{},\"trials\":{}}}",
        args.q,
        args.n1,
        args.n2,
        args.trials.map_or("null".into(), |t| t.to_string())
    );
    let mut csv = provenance(&config_json, seed);
    csv.push_str("rank,exact,decimal,empirical,wilson_lo,wilson_hi,z\n");

    let empirical = args.trials.map(|trials| {
        let mut rng = crate::expharness::trial_rng(seed, 0);
        let mut counts = vec![0u64; (args.n1.min(args.n2) + 1) as usize];
        for _ in 0..trials {
            let m = FieldMatrix::random(field, args.n1 as usize, args.n2 as usize, &mut rng);
            counts[m.rank()] += 1;
        }
        (counts, trials)
    });

    let mut sum = BigRational::zero();
    for r in 0..=args.n1.min(args.n2) {
        let exact = rank_prob(args.q, args.n1, args.n2, r);
        sum += &exact;
        let mut row = format!(
            "{},{},{}",
            r,
            fraction_string(&exact),
            decimal_string(&exact, 12)
        );
        match &empirical {
            Some((counts, trials)) => {
                let c = counts[r as usize];
                let rate = c as f64 / *trials as f64;
                let (lo, hi) = wilson_interval(c, *trials, 1.96);
                let t = to_f64(&exact);
                let var = t * (1.0 - t) / *trials as f64;
                let z = if var > 0.0 {
                    format!("{:.4}", (rate - t) / var.sqrt())
                } else {
                    String::new()
                };
                row.push_str(&format!(",{rate},{lo},{hi},{z}"));
            }
            None => row.push_str(",,,,"),
        }
        row.push('\n');
        csv.push_str(&row);
    }
    assert!(sum.is_one(), "rank probabilities must sum to 1");
    emit(&args.out, &csv)?;
    Ok(EXIT_OK)
}

// ---------------------------------------------------------------- eta-table

fn cmd_eta_table(args: EtaTableArgs) -> Result<i32> {
    for &q in &args.q {
        PrimeField::new(q)?;
    }
    let config_json = format!(
        "{{\"cmd\":\"eta-table\",\"q\":{:?},\"n\":{:?}}}",
        args.q, args.n
    );
    let mut csv = provenance(&config_json, 0);
    csv.push_str("q,n,eta,eta_decimal,ref_half_minus_inv_q,flag\n");
    let threshold = ratio(2, 5);
    for &q in &args.q {
        for &n in &args.n {
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
            csv.push_str(&format!(
                "{q},{n},{},{},{},{flag}\n",
                fraction_string(&eta),
                decimal_string(&eta, 12),
                decimal_string(&reference, 12),
            ));
        }
    }
    emit(&args.out, &csv)?;
    let any_fail = csv.lines().any(|l| l.ends_with(",FAIL"));
    Ok(if any_fail { EXIT_CHECK_FAILED } else { EXIT_OK })
}

// ---------------------------------------------------------------- simulate

fn parse_family(s: &str) -> Result<Family> {
    match s {
        "d0" => Ok(Family::D0),
        "d0d1" => Ok(Family::D0D1),
        "full" => Ok(Family::Full),
        other => Err(Error::InvalidConfig(format!(
            "unknown family '{other}': expected d0, d0d1, or full"
        ))),
    }
}

fn parse_learner(s: &str, bound: Option<&str>) -> Result<LearnerChoice> {
    match s {
        "a0" => Ok(LearnerChoice::BiasedErm),
        "constant" => Ok(LearnerChoice::MatchedConstant),
        "uniform" | "bayes" => Ok(LearnerChoice::UniformErm),
        "bound-min" => Ok(LearnerChoice::BoundMinErm {
            bound: BoundChoice::from_name(bound.unwrap_or("weight"))?,
        }),
        other => {
            if let Some(rest) = other.strip_prefix("bias:") {
                let (sigma_csv, kappa) = rest.rsplit_once(':').ok_or_else(|| {
                    Error::InvalidConfig("bias learner format is bias:<sigma-csv>:<kappa>".into())
                })?;
                let sigma: std::result::Result<Vec<u64>, _> =
                    sigma_csv.split(',').map(|v| v.trim().parse()).collect();
                let sigma = sigma.map_err(|_| {
                    Error::InvalidConfig("bias sigma must be comma-separated integers".into())
                })?;
                let kappa: u64 = kappa
                    .trim()
                    .parse()
                    .map_err(|_| Error::InvalidConfig("bias kappa must be an integer".into()))?;
                Ok(LearnerChoice::GeneralBiasErm { sigma, kappa })
            } else {
                Err(Error::InvalidConfig(format!(
                    "unknown learner '{other}': expected a0, bias:<sigma>:<kappa>, constant, uniform, bayes, or bound-min"
                )))
            }
        }
    }
}

fn parse_estimator(s: &str) -> Result<EstimatorChoice> {
    match s {
        "empirical" => Ok(EstimatorChoice::Empirical),
        "parity-opt-det" => Ok(EstimatorChoice::ParityOptDet { c_nu: None }),
        "parity-opt-rand" => Ok(EstimatorChoice::ParityOptRand { c_nu: None }),
        "random" => Ok(EstimatorChoice::RandomGuess),
        other => {
            if let Some(v) = other.strip_prefix("const:") {
                let value = parse_rational(v)?;
                if value < BigRational::zero() || value > BigRational::one() {
                    return Err(Error::InvalidConfig(
                        "constant estimates must lie in [0, 1]".into(),
                    ));
                }
                Ok(EstimatorChoice::Constant { value })
            } else {
                Err(Error::InvalidConfig(format!(
                    "unknown estimator '{other}': expected empirical, const:<v>, parity-opt-det, parity-opt-rand, or random"
                )))
            }
        }
    }
}

fn merge_simulate(args: SimulateArgs) -> Result<(SimulateArgs, Option<PathBuf>, Option<String>)> {
    let mut merged = args;
    if let Some(path) = &merged.config {
        let text = std::fs::read_to_string(path)?;
        let file: SimulateFileConfig = serde_json::from_str(&text)?;
        merged.q = merged.q.or(file.q);
        merged.d = merged.d.or(file.d);
        merged.n = merged.n.or(file.n);
        merged.family = merged.family.or(file.family);
        merged.learner = merged.learner.or(file.learner);
        merged.estimator = merged.estimator.or(file.estimator);
        merged.bound = merged.bound.or(file.bound);
        merged.epsilon = merged.epsilon.or(file.epsilon);
        merged.trials = merged.trials.or(file.trials);
        merged.seed = merged.seed.or(file.seed);
        merged.workers = merged.workers.or(file.workers);
        if merged.out.is_none() {
            merged.out = file.out.map(PathBuf::from);
        }
        merged.format = merged.format.or(file.format);
    }
    let out = merged.out.clone();
    let format = merged.format.clone();
    Ok((merged, out, format))
}

fn build_experiment(args: &SimulateArgs, lin: bool) -> Result<ExperimentConfig> {
    let seed = resolve_seed(args.seed);
    let trials = args.trials.unwrap_or(100_000);
    let workers = args.workers.unwrap_or(0);
    let setting = if lin {
        let q = args
            .q
            .ok_or_else(|| Error::InvalidConfig("simulate lin requires --q".into()))?;
        let d = args
            .d
            .ok_or_else(|| Error::InvalidConfig("simulate lin requires --d".into()))?;
        let n = args
            .n
            .ok_or_else(|| Error::InvalidConfig("simulate lin requires --n".into()))?;
        let family = parse_family(args.family.as_deref().unwrap_or("d0d1"))?;
        Setting::Lin { q, d, n, family }
    } else {
        let d = args
            .d
            .ok_or_else(|| Error::InvalidConfig("simulate shattered requires --d".into()))?;
        let n = args
            .n
            .ok_or_else(|| Error::InvalidConfig("simulate shattered requires --n".into()))?;
        Setting::Shattered { d, n }
    };
    let learner = parse_learner(
        args.learner
            .as_deref()
            .unwrap_or(if lin { "a0" } else { "uniform" }),
        args.bound.as_deref(),
    )?;
    let estimator = parse_estimator(args.estimator.as_deref().unwrap_or("empirical"))?;
    let epsilon = match &args.epsilon {
        Some(e) => parse_rational(e)?,
        None => match &setting {
            Setting::Lin { .. } => ratio(1, 4),
            Setting::Shattered { d, n } => {
                // (d - n) / 4d, floored at 1/(4d) for n >= d
                let num = (*d as i64 - *n as i64).max(1);
                ratio(num, 4 * *d as i64)
            }
        },
    };
    Ok(ExperimentConfig {
        setting,
        learner,
        estimator,
        epsilon,
        trials,
        master_seed: seed,
        workers,
    })
}

/// The config as echoed into provenance headers: the worker count is
/// dropped because it never affects results, and output bytes must be
/// identical at any worker count.
fn echo_config(cfg: &ExperimentConfig) -> String {
    let mut echo = cfg.clone();
    echo.workers = 0;
    serde_json::to_string(&echo).expect("config serializes")
}

fn summary_csv(cfg: &ExperimentConfig, summary: &Summary) -> String {
    let mut csv = provenance(&echo_config(cfg), cfg.master_seed);
    csv.push_str("setting,learner,estimator,epsilon,trials,failures,rate,wilson_lo,wilson_hi,theory,z\n");
    let f = &summary.failure;
    csv.push_str(&format!(
        "{},{},{},{},{},{},{},{},{},{},{}\n",
        summary.setting,
        summary.learner,
        summary.estimator,
        summary.epsilon,
        summary.trials,
        f.count,
        f.rate,
        f.wilson_lo,
        f.wilson_hi,
        f.theory_exact.clone().unwrap_or_default(),
        f.z.map(|z| format!("{z:.4}")).unwrap_or_default(),
    ));
    csv
}

fn trial_log_jsonl(cfg: &ExperimentConfig, records: &[TrialRecord]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{{\"provenance\":{{\"tool\":\"estimlab {}\",\"config\":{},\"seed\":{}}}}}\n",
        env!("CARGO_PKG_VERSION"),
        echo_config(cfg),
        cfg.master_seed
    ));
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("record serializes"));
        out.push('\n');
    }
    out
}

struct CheckLine {
    name: String,
    pass: bool,
    detail: String,
}

fn theory_checks(summary: &Summary) -> Vec<CheckLine> {
    let mut checks = Vec::new();
    let mut push_rate = |name: &str, stats: &crate::expharness::RateStats| {
        if let Some(pass) = stats.theory_within(3.0) {
            checks.push(CheckLine {
                name: name.into(),
                pass,
                detail: format!(
                    "rate {} vs theory {} (z {})",
                    stats.rate,
                    stats.theory_exact.clone().unwrap_or_default(),
                    stats.z.map(|z| format!("{z:.3}")).unwrap_or_default()
                ),
            });
        }
    };
    push_rate("estimator-failure", &summary.failure);
    push_rate("learner-error", &summary.learner_error);
    if let Some(span) = &summary.sigma_spanned {
        push_rate("sigma-span", span);
    }
    if let (Some(mix), Some(z)) = (summary.mixture_expected_loss, summary.loss_z) {
        checks.push(CheckLine {
            name: "mean-loss-vs-mixture".into(),
            pass: z.abs() <= 3.0,
            detail: format!(
                "mean {} vs mixture {mix} (z {z:.3})",
                summary.mean_true_loss
            ),
        });
    }
    checks
}

fn cmd_simulate(args: SimulateArgs, lin: bool) -> Result<i32> {
    let (merged, out, format) = merge_simulate(args)?;
    let cfg = build_experiment(&merged, lin)?;
    let want_jsonl = match format.as_deref() {
        None | Some("csv") => false,
        Some("jsonl") => true,
        Some(other) => {
            return Err(Error::InvalidConfig(format!(
                "unknown format '{other}': expected csv or jsonl"
            )))
        }
    };
    if want_jsonl && out.is_none() {
        return Err(Error::InvalidConfig(
            "--format jsonl requires --out to name the log location".into(),
        ));
    }
    let (summary, records) = run_experiment(&cfg)?;
    emit(&out, &summary_csv(&cfg, &summary))?;
    if want_jsonl {
        let out_path = out.as_ref().expect("checked above");
        let log_path = out_path.with_extension("trials.jsonl");
        std::fs::write(&log_path, trial_log_jsonl(&cfg, &records))?;
        eprintln!("trial log: {}", log_path.display());
    }
    let checks = theory_checks(&summary);
    let mut all_pass = true;
    for c in &checks {
        eprintln!(
            "check {}: {} ({})",
            c.name,
            if c.pass { "PASS" } else { "FAIL" },
            c.detail
        );
        all_pass &= c.pass;
    }
    Ok(if all_pass { EXIT_OK } else { EXIT_CHECK_FAILED })
}

// ---------------------------------------------------------------- tradeoff

fn cmd_tradeoff(args: TradeoffArgs) -> Result<i32> {
    let seed = resolve_seed(args.seed);
    let setting = match args.setting.as_str() {
        "lin" => {
            let q = args
                .q
                .ok_or_else(|| Error::InvalidConfig("tradeoff lin requires --q".into()))?;
            Setting::Lin {
                q,
                d: args.d,
                n: args.n,
                family: Family::D0D1,
            }
        }
        "shattered" => Setting::Shattered {
            d: args.d,
            n: args.n,
        },
        other => {
            return Err(Error::InvalidConfig(format!(
                "unknown setting '{other}': expected lin or shattered"
            )))
        }
    };
    let estimator = parse_estimator(&args.estimator)?;
    let epsilon = match &args.epsilon {
        Some(e) => parse_rational(e)?,
        None => match &setting {
            Setting::Lin { q, .. } => ratio(*q as i64 - 1, 2 * *q as i64),
            Setting::Shattered { d, n } => ratio((*d as i64 - *n as i64).max(1), 4 * *d as i64),
        },
    };
    let (c1, c2) = tradeoff_pair(&setting, &estimator, &epsilon, args.trials, seed, args.workers);
    let report = tradeoff_report(&c1, &c2)?;

    let config_json = format!(
        "{{\"cmd\":\"tradeoff\",\"setting\":{:?},\"estimator\":{:?},\"epsilon\":{:?},\"trials\":{}}}",
        report.setting, report.estimator, report.epsilon, args.trials
    );
    let mut csv = provenance(&config_json, seed);
    csv.push_str("item,label,learner,count,trials,rate,threshold,holds\n");
    for (idx, item) in [&report.item1, &report.item2].iter().enumerate() {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            idx + 1,
            item.label,
            item.learner,
            item.count,
            item.trials,
            item.rate,
            item.threshold_exact,
            item.holds
        ));
    }
    emit(&args.out, &csv)?;
    eprintln!(
        "verdict: {}",
        if report.violated {
            "at least one item violated (trade-off confirmed)"
        } else {
            "both items hold (trade-off NOT confirmed)"
        }
    );
    Ok(if report.violated {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    })
}

// ---------------------------------------------------------------- audit

fn cmd_audit(args: AuditArgs) -> Result<i32> {
    let bound = BoundChoice::from_name(&args.bound)?;
    let seed = resolve_seed(args.seed);
    let setting = match args.setting.as_str() {
        "lin" => {
            let q = args
                .q
                .ok_or_else(|| Error::InvalidConfig("audit lin requires --q".into()))?;
            let family = parse_family(args.family.as_deref().unwrap_or("full"))?;
            Setting::Lin {
                q,
                d: args.d,
                n: args.n,
                family,
            }
        }
        "shattered" => Setting::Shattered {
            d: args.d,
            n: args.n,
        },
        other => {
            return Err(Error::InvalidConfig(format!(
                "unknown setting '{other}': expected lin or shattered"
            )))
        }
    };
    let report = audit_bound(bound, &setting, args.trials, seed, args.workers)?;
    let config_json = format!(
        "{{\"cmd\":\"audit\",\"bound\":{:?},\"setting\":{:?},\"trials\":{}}}",
        report.bound, report.setting, args.trials
    );
    let mut csv = provenance(&config_json, seed);
    csv.push_str("bound,setting,trials,alpha,validity_rate,violation_count,overfit_rate,mean_bound_min_loss,loose_min,loose_p25,loose_p50,loose_p75,loose_max,loose_mean\n");
    csv.push_str(&format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
        report.bound,
        report.setting,
        report.trials,
        report.alpha_exact,
        report.validity_rate,
        report.violation_count,
        report.overfit_rate,
        report.mean_bound_min_loss,
        report.looseness.min,
        report.looseness.p25,
        report.looseness.p50,
        report.looseness.p75,
        report.looseness.max,
        report.looseness.mean,
    ));
    emit(&args.out, &csv)?;
    eprintln!(
        "audit {}: validity {} ({} violations), overfit rate {} at alpha {}, looseness median {}",
        report.bound,
        report.validity_rate,
        report.violation_count,
        report.overfit_rate,
        report.alpha_exact,
        report.looseness.p50
    );
    Ok(EXIT_OK)
}

// ---------------------------------------------------------------- selftest

/// Fault injection for the self-test negative control: exercised only by
/// tests, never reachable from the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelftestFault {
    None,
    /// report gaussian coefficients one too large
    GaussianOffByOne,
}

pub struct SelftestCheck {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

/// Run every brute-force oracle check. All exact; no Monte Carlo.
pub fn selftest_checks(fault: SelftestFault) -> Vec<SelftestCheck> {
    let mut checks = Vec::new();

    // 1. gaussian coefficients against line counting
    {
        let mut pass = true;
        let mut detail = String::new();
        for (q, dim) in [(2u64, 2usize), (2, 3), (2, 4), (3, 2), (3, 3), (5, 2)] {
            let field = PrimeField::new(q).expect("prime");
            let mut spans = std::collections::HashSet::new();
            enumerate_vectors(field, dim, |v| {
                if v.is_zero() {
                    return;
                }
                let lead = v.entries().iter().find(|&&e| e != 0).copied().unwrap();
                let inv = field.elem(lead).inv().unwrap().value();
                let canon: Vec<u64> = v.entries().iter().map(|&e| (e * inv) % q).collect();
                spans.insert(canon);
            });
            let mut coeff = gaussian_coeff_int(dim as u64, 1, q);
            if fault == SelftestFault::GaussianOffByOne {
                coeff += BigInt::one();
            }
            if coeff != BigInt::from(spans.len()) {
                pass = false;
                detail = format!(
                    "lines in F_{q}^{dim}: counted {} vs coefficient {coeff}",
                    spans.len()
                );
                break;
            }
        }
        if pass {
            detail = "line counts match in 6 spaces".into();
        }
        checks.push(SelftestCheck {
            name: "gaussian-coefficients".into(),
            pass,
            detail,
        });
    }

    // 2. rank distribution against exhaustive enumeration
    {
        let mut pass = true;
        let mut cells = 0;
        'outer: for (q, max1, max2) in [(2u64, 3u64, 3u64), (3, 2, 2)] {
            let field = PrimeField::new(q).expect("prime");
            for n1 in 1..=max1 {
                for n2 in 1..=max2 {
                    let mut counts = vec![0u64; (n1.min(n2) + 1) as usize];
                    let mut total = 0u64;
                    enumerate_matrices(field, n1 as usize, n2 as usize, |m| {
                        counts[m.rank()] += 1;
                        total += 1;
                    });
                    for (r, &c) in counts.iter().enumerate() {
                        cells += 1;
                        if rank_prob(q, n1, n2, r as u64)
                            != BigRational::new(BigInt::from(c), BigInt::from(total))
                        {
                            pass = false;
                            break 'outer;
                        }
                    }
                }
            }
        }
        checks.push(SelftestCheck {
            name: "rank-distribution-enumeration".into(),
            pass,
            detail: format!("{cells} exact cells"),
        });
    }

    // 3. rank distribution normalization
    {
        let mut pass = true;
        for q in [2u64, 3, 5, 11] {
            for n1 in 1..=8u64 {
                for n2 in 1..=8u64 {
                    let mut sum = BigRational::zero();
                    for r in 0..=n1.min(n2) {
                        sum += rank_prob(q, n1, n2, r);
                    }
                    pass &= sum.is_one();
                }
            }
        }
        checks.push(SelftestCheck {
            name: "rank-distribution-normalization".into(),
            pass,
            detail: "q in {2,3,5,11}, shapes up to 8x8".into(),
        });
    }

    // 4. two-point risk by enumeration over Lin_3(2)
    {
        let field = PrimeField::new(3).expect("prime");
        let all = enumerate_hypotheses(field, &SubclassSpec::Full { d: 2 }, 1 << 10)
            .expect("small class");
        let mut pass = all.len() == 9;
        let expected = BigRational::new(BigInt::from(2), BigInt::from(3));
        for a in &all {
            for b in &all {
                let mut agree = 0u64;
                enumerate_vectors(field, 2, |x| {
                    if a.evaluate(x).unwrap() == b.evaluate(x).unwrap() {
                        agree += 1;
                    }
                });
                if a == b {
                    pass &= agree == 9 && population_risk(a, b).is_zero();
                } else {
                    pass &= agree == 3 && population_risk(a, b) == expected;
                }
            }
        }
        checks.push(SelftestCheck {
            name: "two-point-risk-enumeration".into(),
            pass,
            detail: "all 81 pairs over Lin_3(2)".into(),
        });
    }

    // 5. consistent-set counting vs coset enumeration vs brute filtering
    {
        use rand::SeedableRng;
        let mut rng = ChaCha8Rng::seed_from_u64(1234);
        let mut pass = true;
        let mut inspected = 0;
        'outer: for i in 0..1000 {
            let q = if i % 2 == 0 { 2u64 } else { 3 };
            let field = PrimeField::new(q).expect("prime");
            let d = rng.random_range(2..=6usize);
            let n = rng.random_range(1..=4usize.min(d - 1));
            let class = rng.random_range(0..q);
            let spec = SubclassSpec::truncated_class(d, n, class);
            let hyps = enumerate_hypotheses(field, &spec, 1 << 16).expect("small class");
            let truth = hyps[rng.random_range(0..hyps.len())].clone();
            let inputs = FieldMatrix::random(field, n, d, &mut rng);
            let sample = LabeledSample::generate(inputs, &truth).expect("dims match");
            for j in 0..q {
                let cj = SubclassSpec::truncated_class(d, n, j);
                let count = consistent_count(field, &sample, &cj).expect("realizable");
                let coset = enumerate_consistent(field, &sample, &cj, 1 << 16)
                    .expect("under guard")
                    .len();
                let brute = enumerate_hypotheses(field, &cj, 1 << 16)
                    .expect("small class")
                    .into_iter()
                    .filter(|h| sample.empirical_loss(h).unwrap().is_zero())
                    .count();
                inspected += 1;
                if BigInt::from(coset) != count || BigInt::from(brute) != count {
                    pass = false;
                    break 'outer;
                }
            }
        }
        checks.push(SelftestCheck {
            name: "consistent-set-counting".into(),
            pass,
            detail: format!("{inspected} class counts on 1000 random instances"),
        });
    }

    // 6. joint-measure identity and its negative control
    {
        let mut pass = true;
        let mut detail = String::new();
        for (d, n) in [(2usize, 1usize), (2, 2), (3, 1), (3, 2)] {
            match p1_p2_discrepancy(d, n, &ratio(1, 2), crate::shattered::DEFAULT_P1P2_GUARD) {
                Ok(report) => {
                    if !report.equal {
                        pass = false;
                    }
                    detail = format!(
                        "P1=P2 (d={d},n={n}): max discrepancy {}",
                        fraction_string(&report.max_discrepancy)
                    );
                }
                Err(_) => pass = false,
            }
        }
        let control = p1_p2_discrepancy(3, 2, &ratio(3, 5), crate::shattered::DEFAULT_P1P2_GUARD);
        match control {
            Ok(report) if !report.equal => {}
            _ => pass = false,
        }
        checks.push(SelftestCheck {
            name: "p1-p2-identity".into(),
            pass,
            detail,
        });
    }

    checks
}

fn cmd_selftest() -> i32 {
    let checks = selftest_checks(SelftestFault::None);
    let mut all_pass = true;
    for c in &checks {
        println!(
            "check {}: {} ({})",
            c.name,
            if c.pass { "ok" } else { "FAILED" },
            c.detail
        );
        all_pass &= c.pass;
    }
    if all_pass {
        println!("selftest: all {} checks passed", checks.len());
        EXIT_OK
    } else {
        println!("selftest: FAILURES present");
        EXIT_CHECK_FAILED
    }
}

// ----------------------------------------------------------------- helpers

/// Render the summary CSV for an already-run experiment (exposed for the
/// examples and tests).
pub fn render_summary_csv(cfg: &ExperimentConfig, summary: &Summary) -> String {
    summary_csv(cfg, summary)
}

/// Render the JSONL trial log (exposed for the examples and tests).
pub fn render_trial_log(cfg: &ExperimentConfig, records: &[TrialRecord]) -> String {
    trial_log_jsonl(cfg, records)
}

/// Write string content to a path, creating parent directories.
pub fn write_output(path: &Path, content: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(path, content)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn learner_and_estimator_parsing() {
        assert_eq!(parse_learner("a0", None).unwrap(), LearnerChoice::BiasedErm);
        assert_eq!(
            parse_learner("bayes", None).unwrap(),
            LearnerChoice::UniformErm
        );
        assert_eq!(
            parse_learner("bias:1,2,0:1", None).unwrap(),
            LearnerChoice::GeneralBiasErm {
                sigma: vec![1, 2, 0],
                kappa: 1
            }
        );
        assert!(parse_learner("sgd", None).is_err());
        assert_eq!(
            parse_estimator("const:0.25").unwrap(),
            EstimatorChoice::Constant {
                value: ratio(1, 4)
            }
        );
        assert!(parse_estimator("oracle").is_err());
        assert!(parse_estimator("const:1.5").is_err());
    }

    #[test]
    fn selftest_passes_clean_and_fails_with_injected_fault() {
        let clean = selftest_checks(SelftestFault::None);
        assert!(clean.iter().all(|c| c.pass), "clean selftest must pass");
        assert!(clean
            .iter()
            .any(|c| c.detail.contains("max discrepancy 0")));
        let faulty = selftest_checks(SelftestFault::GaussianOffByOne);
        assert!(faulty.iter().any(|c| !c.pass), "fault must be detected");
    }

    #[test]
    fn rank_dist_rejects_composite_modulus() {
        let code = run_from(["estimlab", "rank-dist", "--q", "4", "--n1", "2", "--n2", "2"]);
        assert_eq!(code, EXIT_CONFIG);
    }

    #[test]
    fn help_exits_zero() {
        assert_eq!(run_from(["estimlab", "--help"]), EXIT_OK);
    }

    #[test]
    fn rank_dist_emits_exact_rows_with_provenance() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("rank.csv");
        let code = run_from([
            "estimlab", "rank-dist", "--q", "2", "--n1", "2", "--n2", "2",
            "--out", out.to_str().unwrap(),
        ]);
        assert_eq!(code, EXIT_OK);
        let text = std::fs::read_to_string(&out).unwrap();
        assert!(text.starts_with("# estimlab "));
        assert!(text.contains("# config:"));
        assert!(text.contains("# seed:"));
        assert!(text.contains("0,1/16,0.0625"));
        assert!(text.contains("1,9/16,0.5625"));
        assert!(text.contains("2,3/8,0.375"));
    }

    #[test]
    fn eta_table_flags_only_large_moduli() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("eta.csv");
        let code = run_from([
            "estimlab", "eta-table", "--q", "2,11", "--n", "1,3",
            "--out", out.to_str().unwrap(),
        ]);
        assert_eq!(code, EXIT_OK);
        let text = std::fs::read_to_string(&out).unwrap();
        for line in text.lines().filter(|l| l.starts_with("2,")) {
            assert!(line.ends_with(','), "q=2 rows carry no flag: {line}");
        }
        for line in text.lines().filter(|l| l.starts_with("11,")) {
            assert!(line.ends_with(",pass"), "q=11 rows pass the 0.4 bound: {line}");
        }
    }

    #[test]
    fn simulate_config_file_merges_with_flag_priority() {
        let dir = tempfile::tempdir().unwrap();
        let cfg_path = dir.path().join("run.json");
        std::fs::write(
            &cfg_path,
            r#"{"q": 2, "d": 6, "n": 3, "family": "d0", "trials": 500, "seed": 3, "epsilon": "1/4"}"#,
        )
        .unwrap();
        let out_a = dir.path().join("a.csv");
        // pure file config
        let code = run_from([
            "estimlab", "simulate", "lin",
            "--config", cfg_path.to_str().unwrap(),
            "--out", out_a.to_str().unwrap(),
        ]);
        assert_eq!(code, EXIT_OK);
        let text_a = std::fs::read_to_string(&out_a).unwrap();
        assert!(text_a.contains("lin[q=2,d=6,n=3,family=d0]"));
        assert!(text_a.contains(",500,"));
        // the --trials flag wins over the file value
        let out_b = dir.path().join("b.csv");
        let code = run_from([
            "estimlab", "simulate", "lin",
            "--config", cfg_path.to_str().unwrap(),
            "--trials", "700",
            "--out", out_b.to_str().unwrap(),
        ]);
        assert_eq!(code, EXIT_OK);
        let text_b = std::fs::read_to_string(&out_b).unwrap();
        assert!(text_b.contains(",700,"));
    }

    #[test]
    fn audit_unknown_bound_lists_builtins() {
        let code = run_from([
            "estimlab", "audit", "--bound", "vc-dimension", "--setting", "shattered",
            "--d", "8", "--n", "4",
        ]);
        assert_eq!(code, EXIT_CONFIG);
        assert!(BoundChoice::from_name("vc-dimension")
            .unwrap_err()
            .to_string()
            .contains("zero, one, weight"));
    }

    #[test]
    fn audit_runs_and_reports() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("audit.csv");
        let code = run_from([
            "estimlab", "audit", "--bound", "weight", "--setting", "shattered",
            "--d", "16", "--n", "8", "--trials", "2000", "--seed", "5",
            "--out", out.to_str().unwrap(),
        ]);
        assert_eq!(code, EXIT_OK);
        let text = std::fs::read_to_string(&out).unwrap();
        assert!(text.starts_with("# estimlab "));
        assert!(text.contains("weight,shattered[d=16,n=8],2000,1/4,"));
    }

    #[test]
    fn tradeoff_cli_confirms_violation() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("tradeoff.csv");
        let code = run_from([
            "estimlab", "tradeoff", "--setting", "shattered", "--d", "20", "--n", "10",
            "--estimator", "const:0", "--trials", "4000", "--seed", "2",
            "--out", out.to_str().unwrap(),
        ]);
        assert_eq!(code, EXIT_OK, "the trade-off should be confirmed");
        let text = std::fs::read_to_string(&out).unwrap();
        assert!(text.contains("matched-constant-estimation"));
        assert!(text.contains("uniform-erm-estimation"));
    }

    #[test]
    fn env_seed_is_the_fallback() {
        // resolve_seed reads the env var only when no flag is given
        std::env::set_var(SEED_ENV, "12345");
        assert_eq!(resolve_seed(None), 12345);
        assert_eq!(resolve_seed(Some(9)), 9);
        std::env::remove_var(SEED_ENV);
        assert_eq!(resolve_seed(None), 0);
    }
}
