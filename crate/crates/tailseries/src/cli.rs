//! Command-line experiment harness: evaluate tail asymptotics, compare two
//! weight sequences at matched thresholds, check comparison hypotheses, run
//! the Monte Carlo oracle, fit empirical decay slopes, and verify the proof
//! inequalities. One JSON config file per run plus flag overrides; every
//! report embeds the fully resolved config so any row can be reproduced
//! from the report alone. Output is deterministic byte-for-byte.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::conditions::{
    self, CheckOptions, ConvergenceVerdict, DeviationForm, RatioSequence, WermuthReport,
};
use crate::error::Error;
use crate::gauss::{self, GaussianParams};
use crate::ldp::{self, TailLaw};
use crate::mc::{self, Estimate, NaiveCi, SamplerConfig};
use crate::proofcheck;
use crate::seqspec::SequenceSpec;

/// Environment variable that overrides the built-in default seed.
pub const SEED_ENV_VAR: &str = "TAILSERIES_SEED";

pub const EXIT_OK: i32 = 0;
pub const EXIT_HYPOTHESIS_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "tailseries", version, about = "Upper-tail probabilities of weighted random series: asymptotics, comparisons, and a Monte Carlo oracle")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Log-tail values per method over the r grid, at raw thresholds
    Eval(RunArgs),
    /// Tail comparison of two sequences at matched scaled thresholds
    Compare(RunArgs),
    /// Convergence checks for the comparison hypotheses
    Check(RunArgs),
    /// Monte Carlo estimates (naive and importance sampling)
    Simulate(RunArgs),
    /// Least-squares fit of the empirical log-tail decay constant
    Slope(RunArgs),
    /// Grid verification of the proof inequalities
    Proofcheck(ProofArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// JSON experiment config
    #[arg(long)]
    pub config: PathBuf,
    /// Override the r grid, comma separated
    #[arg(long)]
    pub r: Option<String>,
    /// Override the random seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// Override the Monte Carlo sample count
    #[arg(long)]
    pub samples: Option<u64>,
    /// Override the worker count
    #[arg(long)]
    pub workers: Option<u32>,
    /// Write the report here instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Report format
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
    /// Dump raw per-worker sums to this CSV file (simulate only)
    #[arg(long)]
    pub audit: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ProofArgs {
    /// Which inequality to check
    #[arg(long)]
    pub inequality: InequalityId,
    /// Optional JSON config with custom grids
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InequalityId {
    WeightedTail,
    Bernoulli,
    TwoSided,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Lifshits,
    McIs,
    McNaive,
    Ldp,
}

impl Method {
    fn name(&self) -> &'static str {
        match self {
            Method::Lifshits => "lifshits",
            Method::McIs => "mc_is",
            Method::McNaive => "mc_naive",
            Method::Ldp => "ldp",
        }
    }
}

/// Law section of the config; `gaussian` doubles as the parameter set of the
/// exact-level evaluator and as the folded law of the sampler.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LawConfig {
    Gaussian {
        #[serde(default)]
        alpha: f64,
        #[serde(default = "one")]
        beta: f64,
    },
    Exponential { rate: f64 },
    WeibullType { p: f64, c: f64 },
}

fn one() -> f64 {
    1.0
}

impl LawConfig {
    fn tail_law(&self) -> Result<TailLaw, Error> {
        match self {
            LawConfig::Gaussian { alpha, beta } => TailLaw::folded_gaussian(*alpha, *beta),
            LawConfig::Exponential { rate } => TailLaw::exponential(*rate),
            LawConfig::WeibullType { p, c } => TailLaw::weibull_type(*p, *c),
        }
    }

    fn gaussian_params(&self) -> Option<GaussianParams> {
        match self {
            LawConfig::Gaussian { alpha, beta } => GaussianParams::new(*alpha, *beta).ok(),
            _ => None,
        }
    }
}

/// On-disk experiment config. Optional sections are validated per command.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<SequenceSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<SequenceSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub law: Option<LawConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub methods: Option<Vec<Method>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lifshits_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deviation: Option<DeviationForm>,
    /// Power exponent for the p-power comparison condition.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clopper_pearson: Option<bool>,
    // Proofcheck grids.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instances: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<OutputFormat>,
}

/// Fully resolved parameters, embedded verbatim in every report.
#[derive(Debug, Clone, Serialize)]
pub struct ResolvedConfig {
    pub command: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<SequenceSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<SequenceSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub law: Option<LawConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_grid: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub methods: Option<Vec<Method>>,
    pub seed: u64,
    pub samples: u64,
    pub workers: u32,
    pub truncation_tol: f64,
    pub lifshits_tol: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncation_index_a: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncation_index_b: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deviation: Option<DeviationForm>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    pub horizon: u64,
    pub window: u64,
    pub eps: f64,
    pub format: OutputFormat,
}

/// One row of an eval/compare/simulate/slope report. Unused columns stay
/// `None` and serialize as nulls / empty CSV cells.
#[derive(Debug, Clone, Serialize)]
pub struct Row {
    pub r: f64,
    pub method: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold_b: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub log_p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub log_p_b: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ci_low: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ci_high: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prob_ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub log_ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio_ci_low: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio_ci_high: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<String>,
}

impl Row {
    fn new(r: f64, method: &str) -> Self {
        Row {
            r,
            method: method.to_string(),
            threshold: None,
            threshold_b: None,
            log_p: None,
            log_p_b: None,
            ci_low: None,
            ci_high: None,
            prob_ratio: None,
            log_ratio: None,
            ratio_ci_low: None,
            ratio_ci_high: None,
            verdict: None,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub command: &'static str,
    pub config: ResolvedConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hypothesis_note: Option<String>,
    pub rows: Vec<Row>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdicts: Option<VerdictBundle>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slope: Option<mc::SlopeFit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slope_target: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub proofcheck: Option<ProofcheckReport>,
}

#[derive(Debug, Serialize)]
pub struct VerdictBundle {
    /// Product condition, both directions.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub product_forward: Option<ConvergenceVerdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub product_backward: Option<ConvergenceVerdict>,
    /// Series condition and its squares.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub series: Option<ConvergenceVerdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub series_squares: Option<ConvergenceVerdict>,
    /// Absolute-series condition for the p-power comparison.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub abs_power: Option<ConvergenceVerdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wermuth: Option<WermuthReport>,
}

impl VerdictBundle {
    fn any_divergent(&self) -> bool {
        use conditions::Status::Diverges;
        let is_div = |v: &Option<ConvergenceVerdict>| {
            v.as_ref().map(|x| x.status == Diverges).unwrap_or(false)
        };
        is_div(&self.product_forward)
            || is_div(&self.product_backward)
            || is_div(&self.series)
            || is_div(&self.series_squares)
            || is_div(&self.abs_power)
            || self
                .wermuth
                .as_ref()
                .map(|w| w.consistency_flag)
                .unwrap_or(false)
    }
}

#[derive(Debug, Serialize)]
pub struct ProofcheckReport {
    pub inequality: InequalityId,
    pub violations: Vec<proofcheck::Violation>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_hat: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub instances_checked: Option<u64>,
    /// Indices of randomized instances that failed (weighted-tail runs).
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub failed_instances: Vec<u64>,
    pub clean: bool,
}

/// Errors split by exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Module(Error),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "config error: {m}"),
            CliError::Module(e) => write!(f, "error: {e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Module(e)
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Entry point used by the binary; returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{e}");
            EXIT_USAGE
        }
    }
}

fn execute(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Eval(args) => {
            let ctx = Context::load("eval", &args)?;
            let report = cmd_eval(&ctx)?;
            emit(&ctx, report)?;
            Ok(EXIT_OK)
        }
        Command::Compare(args) => {
            let ctx = Context::load("compare", &args)?;
            let report = cmd_compare(&ctx)?;
            emit(&ctx, report)?;
            Ok(EXIT_OK)
        }
        Command::Check(args) => {
            let ctx = Context::load("check", &args)?;
            let report = cmd_check(&ctx)?;
            let failed = report
                .verdicts
                .as_ref()
                .map(|v| v.any_divergent())
                .unwrap_or(false);
            emit(&ctx, report)?;
            Ok(if failed { EXIT_HYPOTHESIS_FAILED } else { EXIT_OK })
        }
        Command::Simulate(args) => {
            let ctx = Context::load("simulate", &args)?;
            let report = cmd_simulate(&ctx)?;
            emit(&ctx, report)?;
            Ok(EXIT_OK)
        }
        Command::Slope(args) => {
            let ctx = Context::load("slope", &args)?;
            let report = cmd_slope(&ctx)?;
            emit(&ctx, report)?;
            Ok(EXIT_OK)
        }
        Command::Proofcheck(args) => {
            let (ctx, report) = cmd_proofcheck(&args)?;
            let clean = report.proofcheck.as_ref().map(|p| p.clean).unwrap_or(true);
            emit(&ctx, report)?;
            Ok(if clean { EXIT_OK } else { EXIT_HYPOTHESIS_FAILED })
        }
    }
}

/// Resolved runtime context for one command invocation.
struct Context {
    command: &'static str,
    cfg: ExperimentConfig,
    seed: u64,
    samples: u64,
    workers: u32,
    truncation_tol: f64,
    lifshits_tol: f64,
    r_grid: Vec<f64>,
    methods: Vec<Method>,
    check_opts: CheckOptions,
    out: Option<PathBuf>,
    format: OutputFormat,
    audit: Option<PathBuf>,
}

fn env_seed() -> Option<u64> {
    std::env::var(SEED_ENV_VAR).ok().and_then(|v| v.parse().ok())
}

impl Context {
    fn load(command: &'static str, args: &RunArgs) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(&args.config)
            .map_err(|e| usage(format!("cannot read {}: {e}", args.config.display())))?;
        let cfg: ExperimentConfig =
            serde_json::from_str(&text).map_err(|e| usage(format!("bad config: {e}")))?;
        Self::resolve(command, cfg, args)
    }

    fn resolve(
        command: &'static str,
        cfg: ExperimentConfig,
        args: &RunArgs,
    ) -> Result<Self, CliError> {
        let r_grid = if let Some(spec) = &args.r {
            spec.split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| usage(format!("bad --r value: {e}")))?
        } else {
            cfg.r_grid.clone().unwrap_or_default()
        };
        let needs_grid = matches!(command, "eval" | "compare" | "simulate" | "slope");
        if needs_grid {
            if r_grid.is_empty() {
                return Err(usage("r_grid must be non-empty"));
            }
            if r_grid.windows(2).any(|w| w[0] >= w[1]) {
                return Err(usage("r_grid must be strictly increasing"));
            }
        }
        let methods = cfg.methods.clone().unwrap_or_else(|| match command {
            "simulate" => vec![Method::McNaive, Method::McIs],
            _ => vec![],
        });
        if matches!(command, "eval" | "compare") && methods.is_empty() {
            return Err(usage("at least one method is required"));
        }
        let seed = args
            .seed
            .or(cfg.seed)
            .or_else(env_seed)
            .unwrap_or(0);
        let check_opts = CheckOptions {
            horizon: cfg.horizon.unwrap_or(conditions::DEFAULT_HORIZON),
            window: cfg.window.unwrap_or(conditions::DEFAULT_WINDOW),
            eps: cfg.eps.unwrap_or(conditions::DEFAULT_EPS),
        };
        Ok(Context {
            command,
            seed,
            samples: args.samples.or(cfg.samples).unwrap_or(100_000),
            workers: args.workers.or(cfg.workers).unwrap_or(1),
            truncation_tol: cfg.truncation_tol.unwrap_or(1e-6),
            lifshits_tol: cfg.lifshits_tol.unwrap_or(1e-8),
            r_grid,
            methods,
            check_opts,
            out: args.out.clone().or_else(|| cfg.out.clone()),
            format: args.format.or(cfg.format).unwrap_or_default(),
            audit: args.audit.clone(),
            cfg,
        })
    }

    fn sampler_config(&self) -> SamplerConfig {
        SamplerConfig {
            n_samples: self.samples,
            seed: self.seed,
            n_workers: self.workers,
            truncation_tol: self.truncation_tol,
            naive_ci: if self.cfg.clopper_pearson.unwrap_or(false) {
                NaiveCi::ClopperPearson
            } else {
                NaiveCi::LogNormal
            },
            ..SamplerConfig::default()
        }
    }

    fn spec_a(&self) -> Result<&SequenceSpec, CliError> {
        self.cfg.a.as_ref().ok_or_else(|| usage("sequence `a` is required"))
    }

    fn spec_b(&self) -> Result<&SequenceSpec, CliError> {
        self.cfg.b.as_ref().ok_or_else(|| usage("sequence `b` is required"))
    }

    fn law(&self) -> Result<LawConfig, CliError> {
        self.cfg.law.ok_or_else(|| usage("a `law` section is required"))
    }

    fn resolved(&self) -> Result<ResolvedConfig, CliError> {
        let trunc = |spec: &Option<SequenceSpec>| -> Option<u64> {
            spec.as_ref()
                .and_then(|s| s.truncation_index(self.truncation_tol, 1.0).ok())
        };
        Ok(ResolvedConfig {
            command: self.command,
            a: self.cfg.a.clone(),
            b: self.cfg.b.clone(),
            law: self.cfg.law,
            r_grid: if self.r_grid.is_empty() { None } else { Some(self.r_grid.clone()) },
            methods: if self.methods.is_empty() { None } else { Some(self.methods.clone()) },
            seed: self.seed,
            samples: self.samples,
            workers: self.workers,
            truncation_tol: self.truncation_tol,
            lifshits_tol: self.lifshits_tol,
            truncation_index_a: trunc(&self.cfg.a),
            truncation_index_b: trunc(&self.cfg.b),
            deviation: self.cfg.deviation.clone(),
            p: self.cfg.p,
            horizon: self.check_opts.horizon,
            window: self.check_opts.window,
            eps: self.check_opts.eps,
            format: self.format,
        })
    }

    fn base_report(&self) -> Result<Report, CliError> {
        Ok(Report {
            command: self.command,
            config: self.resolved()?,
            hypothesis_note: None,
            rows: Vec::new(),
            verdicts: None,
            slope: None,
            slope_target: None,
            proofcheck: None,
        })
    }
}

fn estimate_into_row(row: &mut Row, est: &Estimate) {
    row.log_p = Some(est.log_p_hat);
    row.ci_low = Some(est.ci_low);
    row.ci_high = Some(est.ci_high);
}

fn cmd_eval(ctx: &Context) -> Result<Report, CliError> {
    let a = ctx.spec_a()?;
    let law_cfg = ctx.law()?;
    let law = law_cfg.tail_law()?;
    let mccfg = ctx.sampler_config();
    let mut report = ctx.base_report()?;
    for &r in &ctx.r_grid {
        for m in &ctx.methods {
            let mut row = Row::new(r, m.name());
            row.threshold = Some(r);
            match m {
                Method::Lifshits => {
                    let params = law_cfg
                        .gaussian_params()
                        .ok_or_else(|| usage("the lifshits method needs a gaussian law"))?;
                    let lp = gauss::lifshits_log_tail(a, &params, r, ctx.lifshits_tol)?;
                    row.log_p = Some(lp.value);
                }
                Method::Ldp => {
                    row.log_p = Some(ldp::log_tail_asymptote(a, &law, r)?);
                }
                Method::McNaive => {
                    let est = mc::sample_naive(&law, a, r, &mccfg)?;
                    estimate_into_row(&mut row, &est);
                }
                Method::McIs => {
                    let est = mc::sample_is(&law, a, r, &mccfg)?;
                    estimate_into_row(&mut row, &est);
                }
            }
            report.rows.push(row);
        }
    }
    Ok(report)
}

/// Matched thresholds per method: the exact-level evaluator and the sampler
/// under a Gaussian law use `r ||.||_2 beta + |alpha| sum a_n`; everything
/// else scales by the law's conjugate norm `r ||.||_q`.
fn thresholds_for(
    m: Method,
    law_cfg: &LawConfig,
    law: &TailLaw,
    a: &SequenceSpec,
    b: &SequenceSpec,
    r: f64,
) -> Result<(f64, f64), CliError> {
    let gaussian_scaled = matches!(law_cfg, LawConfig::Gaussian { .. })
        && matches!(m, Method::Lifshits | Method::McIs | Method::McNaive);
    if gaussian_scaled {
        let params = law_cfg.gaussian_params().expect("checked above");
        Ok((
            gauss::scaled_threshold(a, &params, r)?,
            gauss::scaled_threshold(b, &params, r)?,
        ))
    } else {
        let q = law.tail_exponent().conjugate_q();
        Ok((r * a.norm(q)?, r * b.norm(q)?))
    }
}

fn cmd_compare(ctx: &Context) -> Result<Report, CliError> {
    let a = ctx.spec_a()?;
    let b = ctx.spec_b()?;
    let law_cfg = ctx.law()?;
    let law = law_cfg.tail_law()?;
    let mccfg = ctx.sampler_config();
    let mut report = ctx.base_report()?;
    report.hypothesis_note = Some(match law_cfg {
        LawConfig::Gaussian { .. } => {
            "verdicts cover the exact-level Gaussian comparison hypotheses: \
             the two-sided product condition and the series-plus-squares condition \
             on the normalized ratio"
                .to_string()
        }
        _ => "verdicts describe the normalized-ratio relation; the log-level \
              comparison itself needs only the summability hypothesis"
            .to_string(),
    });

    // Condition verdicts for the pair.
    let rs = RatioSequence::from_specs(a.clone(), b.clone())?;
    let (pf, pb) = conditions::check_product_condition(&rs, &ctx.check_opts)?;
    let (series, squares) = conditions::check_series_condition(&rs, &ctx.check_opts)?;
    let abs_power = match ctx.cfg.p {
        Some(p) => {
            let beta = match law_cfg {
                LawConfig::Gaussian { beta, .. } => beta,
                _ => 1.0,
            };
            Some(conditions::check_power_condition(a, b, p, beta, &ctx.check_opts)?)
        }
        None => None,
    };
    report.verdicts = Some(VerdictBundle {
        product_forward: Some(pf),
        product_backward: Some(pb),
        series: Some(series),
        series_squares: Some(squares),
        abs_power,
        wermuth: None,
    });

    for &r in &ctx.r_grid {
        for m in &ctx.methods {
            let (ta, tb) = thresholds_for(*m, &law_cfg, &law, a, b, r)?;
            let mut row = Row::new(r, m.name());
            row.threshold = Some(ta);
            row.threshold_b = Some(tb);
            match m {
                Method::Lifshits => {
                    let params = law_cfg
                        .gaussian_params()
                        .ok_or_else(|| usage("the lifshits method needs a gaussian law"))?;
                    let la = gauss::lifshits_log_tail(a, &params, ta, ctx.lifshits_tol)?.value;
                    let lb = gauss::lifshits_log_tail(b, &params, tb, ctx.lifshits_tol)?.value;
                    row.log_p = Some(la);
                    row.log_p_b = Some(lb);
                    row.prob_ratio = Some((la - lb).exp());
                    row.log_ratio = Some(la / lb);
                }
                Method::Ldp => {
                    let la = ldp::log_tail_asymptote(a, &law, ta)?;
                    let lb = ldp::log_tail_asymptote(b, &law, tb)?;
                    row.log_p = Some(la);
                    row.log_p_b = Some(lb);
                    row.prob_ratio = Some((la - lb).exp());
                    row.log_ratio = Some(la / lb);
                }
                Method::McNaive | Method::McIs => {
                    let sample = |spec: &SequenceSpec, t: f64| -> Result<Estimate, Error> {
                        match m {
                            Method::McNaive => mc::sample_naive(&law, spec, t, &mccfg),
                            _ => mc::sample_is(&law, spec, t, &mccfg),
                        }
                    };
                    let ea = sample(a, ta)?;
                    let eb = sample(b, tb)?;
                    row.log_p = Some(ea.log_p_hat);
                    row.log_p_b = Some(eb.log_p_hat);
                    row.prob_ratio = Some((ea.log_p_hat - eb.log_p_hat).exp());
                    row.log_ratio = Some(ea.log_p_hat / eb.log_p_hat);
                    // Interval arithmetic over the two log CIs.
                    let mut lo = f64::INFINITY;
                    let mut hi = f64::NEG_INFINITY;
                    for la in [ea.ci_low, ea.ci_high] {
                        for lb in [eb.ci_low, eb.ci_high] {
                            let v = la / lb;
                            lo = lo.min(v);
                            hi = hi.max(v);
                        }
                    }
                    row.ratio_ci_low = Some(lo);
                    row.ratio_ci_high = Some(hi);
                }
            }
            report.rows.push(row);
        }
    }
    Ok(report)
}

fn cmd_check(ctx: &Context) -> Result<Report, CliError> {
    let mut report = ctx.base_report()?;
    let mut bundle = VerdictBundle {
        product_forward: None,
        product_backward: None,
        series: None,
        series_squares: None,
        abs_power: None,
        wermuth: None,
    };
    match (&ctx.cfg.a, &ctx.cfg.b, &ctx.cfg.deviation) {
        (Some(a), Some(b), None) => {
            let rs = RatioSequence::from_specs(a.clone(), b.clone())?;
            let (pf, pb) = conditions::check_product_condition(&rs, &ctx.check_opts)?;
            let (series, squares) = conditions::check_series_condition(&rs, &ctx.check_opts)?;
            bundle.product_forward = Some(pf);
            bundle.product_backward = Some(pb);
            bundle.series = Some(series);
            bundle.series_squares = Some(squares);
            if let Some(p) = ctx.cfg.p {
                let beta = ctx
                    .cfg
                    .law
                    .and_then(|l| l.gaussian_params())
                    .map(|g| g.beta)
                    .unwrap_or(1.0);
                bundle.abs_power =
                    Some(conditions::check_power_condition(a, b, p, beta, &ctx.check_opts)?);
            }
        }
        (_, _, Some(form)) => {
            let rs = RatioSequence::from_deviation(form.clone());
            let (pf, pb) = conditions::check_product_condition(&rs, &ctx.check_opts)?;
            let (series, squares) = conditions::check_series_condition(&rs, &ctx.check_opts)?;
            bundle.product_forward = Some(pf);
            bundle.product_backward = Some(pb);
            bundle.series = Some(series);
            bundle.series_squares = Some(squares);
            if ctx.cfg.p.is_some() {
                bundle.abs_power =
                    Some(conditions::check_power_condition_deviation(form, &ctx.check_opts)?);
            }
            bundle.wermuth = Some(conditions::wermuth_relations(form, &ctx.check_opts)?);
        }
        _ => {
            return Err(usage("check needs either sequences `a` and `b` or a `deviation`"));
        }
    }
    // Summary rows for the CSV view.
    let mut push = |name: &str, v: &Option<ConvergenceVerdict>| {
        if let Some(v) = v {
            let mut row = Row::new(0.0, name);
            row.verdict = Some(format!("{:?}", v.status).to_lowercase());
            report.rows.push(row);
        }
    };
    push("product_forward", &bundle.product_forward);
    push("product_backward", &bundle.product_backward);
    push("series", &bundle.series);
    push("series_squares", &bundle.series_squares);
    push("abs_power", &bundle.abs_power);
    if let Some(w) = &bundle.wermuth {
        let mut row = Row::new(0.0, "wermuth_consistency");
        row.verdict = Some(if w.consistency_flag { "flagged".into() } else { "clear".into() });
        report.rows.push(row);
    }
    report.verdicts = Some(bundle);
    Ok(report)
}

fn cmd_simulate(ctx: &Context) -> Result<Report, CliError> {
    let a = ctx.spec_a()?;
    let law = ctx.law()?.tail_law()?;
    let mccfg = ctx.sampler_config();
    let mut report = ctx.base_report()?;
    let methods: Vec<Method> = ctx
        .methods
        .iter()
        .copied()
        .filter(|m| matches!(m, Method::McIs | Method::McNaive))
        .collect();
    if methods.is_empty() {
        return Err(usage("simulate needs mc_naive and/or mc_is in `methods`"));
    }
    let mut audit_lines = String::from("r,method,worker,n_samples,sum_w,sum_w2,hits\n");
    for &r in &ctx.r_grid {
        for m in &methods {
            let (est, workers) = match m {
                Method::McNaive => mc::sample_naive_with_audit(&law, a, r, &mccfg)?,
                _ => mc::sample_is_with_audit(&law, a, r, &mccfg)?,
            };
            if ctx.audit.is_some() {
                for w in &workers {
                    audit_lines.push_str(&format!(
                        "{},{},{},{},{},{},{}\n",
                        csv_num(Some(r)),
                        m.name(),
                        w.worker,
                        w.n_samples,
                        csv_num(Some(w.sum_w)),
                        csv_num(Some(w.sum_w2)),
                        w.hits,
                    ));
                }
            }
            let mut row = Row::new(r, m.name());
            row.threshold = Some(r);
            estimate_into_row(&mut row, &est);
            report.rows.push(row);
        }
    }
    if let Some(path) = &ctx.audit {
        std::fs::write(path, audit_lines)
            .map_err(|e| usage(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(report)
}

fn cmd_slope(ctx: &Context) -> Result<Report, CliError> {
    let a = ctx.spec_a()?;
    let law = ctx.law()?.tail_law()?;
    let mccfg = ctx.sampler_config();
    let mut report = ctx.base_report()?;
    let fit = mc::empirical_log_slope(&law, a, &ctx.r_grid, &mccfg)?;
    let te = law.tail_exponent();
    let target = a
        .norm(te.conjugate_q())
        .ok()
        .map(|nq| te.c * nq.powf(-te.p));
    for p in &fit.points {
        let mut row = Row::new(p.r, "mc_is");
        row.log_p = Some(p.log_p);
        row.ci_low = Some(p.ci_low);
        row.ci_high = Some(p.ci_high);
        report.rows.push(row);
    }
    report.slope_target = target;
    report.slope = Some(fit);
    Ok(report)
}

fn cmd_proofcheck(args: &ProofArgs) -> Result<(Context, Report), CliError> {
    let cfg: ExperimentConfig = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
            serde_json::from_str(&text).map_err(|e| usage(format!("bad config: {e}")))?
        }
        None => ExperimentConfig::default(),
    };
    let run_args = RunArgs {
        config: PathBuf::new(),
        r: None,
        seed: args.seed,
        samples: None,
        workers: None,
        out: args.out.clone(),
        format: args.format,
        audit: None,
    };
    let ctx = Context::resolve("proofcheck", cfg, &run_args)?;
    let mut report = ctx.base_report()?;

    let pc = match args.inequality {
        InequalityId::Bernoulli => {
            let a_grid = ctx.cfg.a_grid.clone().unwrap_or_else(proofcheck::default_a_grid);
            let d_grid = ctx
                .cfg
                .delta_grid
                .clone()
                .unwrap_or_else(proofcheck::default_delta_grid);
            let violations = proofcheck::check_bernoulli_bound(&a_grid, &d_grid);
            ProofcheckReport {
                inequality: args.inequality,
                clean: violations.is_empty(),
                violations,
                lambda_hat: None,
                instances_checked: None,
                failed_instances: Vec::new(),
            }
        }
        InequalityId::TwoSided => {
            let sigma = ctx.cfg.sigma.unwrap_or(1.0);
            let a_grid = ctx
                .cfg
                .a_grid
                .clone()
                .unwrap_or_else(|| proofcheck::symmetric_a_grid(sigma));
            let d_grid = ctx.cfg.delta_grid.clone().unwrap_or_else(|| {
                (0..=1000).map(|i| -0.5 + 1e-3 * i as f64).collect()
            });
            let g_grid = ctx
                .cfg
                .gamma_grid
                .clone()
                .unwrap_or_else(proofcheck::default_gamma_grid);
            let out = proofcheck::check_two_sided_bound(sigma, &a_grid, &d_grid, &g_grid)?;
            ProofcheckReport {
                inequality: args.inequality,
                clean: out.lambda_hat > 0.0,
                violations: out.binding.into_iter().collect(),
                lambda_hat: Some(out.lambda_hat),
                instances_checked: None,
                failed_instances: Vec::new(),
            }
        }
        InequalityId::WeightedTail => {
            let instances = ctx.cfg.instances.unwrap_or(1000);
            let mut failed = Vec::new();
            let mut rng = ChaCha12Rng::seed_from_u64(ctx.seed);
            for i in 0..instances {
                let n = rng.random_range(50..500usize);
                let decay: f64 = rng.random_range(1.05..2.0);
                let c: Vec<f64> = (1..=n)
                    .map(|k| {
                        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                        sign * (k as f64).powf(-decay)
                    })
                    .collect();
                let d: Vec<f64> = (1..=n).map(|k| 1.0 / k as f64).collect();
                let segs = rng.random_range(2..=20usize);
                let mut nodes = vec![(0.0, rng.random_range(-1.0..1.0))];
                for s in 1..=segs {
                    nodes.push((2.0 * s as f64 / segs as f64, rng.random_range(-1.0..1.0)));
                }
                let g = proofcheck::PiecewiseLinear::new(nodes).expect("valid nodes");
                let start = rng.random_range(1..=n / 2);
                let out = proofcheck::check_weighted_tail_bound(&c, &g, &d, start)?;
                if !out.holds {
                    failed.push(i);
                }
            }
            ProofcheckReport {
                inequality: args.inequality,
                clean: failed.is_empty(),
                violations: Vec::new(),
                lambda_hat: None,
                instances_checked: Some(instances),
                failed_instances: failed,
            }
        }
    };
    if let Some(l) = pc.lambda_hat {
        let mut row = Row::new(0.0, "lambda_hat");
        row.log_p = Some(l);
        report.rows.push(row);
    }
    let mut row = Row::new(0.0, "proofcheck");
    row.verdict = Some(if pc.clean { "clean".into() } else { "violations".into() });
    report.rows.push(row);
    report.proofcheck = Some(pc);
    Ok((ctx, report))
}

// ---------------------------------------------------------------------------
// Output
// ---------------------------------------------------------------------------

/// Formats a float exactly as the JSON emitter does, so CSV and JSON carry
/// identical numbers; non-finite values become empty cells (null in JSON).
fn csv_num(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_finite() => serde_json::to_string(&x).expect("finite float"),
        _ => String::new(),
    }
}

fn to_csv(report: &Report) -> String {
    let mut out = String::new();
    let config_json = serde_json::to_string(&report.config).expect("config serializes");
    out.push_str(&format!("# {config_json}\n"));
    out.push_str("r,method,log_p,ci_low,ci_high,ratio,verdict\n");
    for row in &report.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            csv_num(Some(row.r)),
            row.method,
            csv_num(row.log_p),
            csv_num(row.ci_low),
            csv_num(row.ci_high),
            csv_num(row.log_ratio.or(row.prob_ratio)),
            row.verdict.clone().unwrap_or_default(),
        ));
    }
    out
}

fn emit(ctx: &Context, report: Report) -> Result<(), CliError> {
    let text = match ctx.format {
        OutputFormat::Json => {
            let mut s = serde_json::to_string_pretty(&report).expect("report serializes");
            s.push('\n');
            s
        }
        OutputFormat::Csv => to_csv(&report),
    };
    match &ctx.out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| usage(format!("cannot write {}: {e}", path.display())))?,
        None => print!("{text}"),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_parses_spec_families() {
        let text = r#"{
            "a": {"family": "geometric", "rho": 0.5},
            "b": {"family": "perturbed",
                  "base": {"family": "geometric", "rho": 0.5},
                  "deviation": {"kind": "inverse_square", "scale": 1.0}},
            "law": {"kind": "gaussian", "alpha": 0.0, "beta": 1.0},
            "r_grid": [4.0, 6.0],
            "methods": ["lifshits"]
        }"#;
        let cfg: ExperimentConfig = serde_json::from_str(text).unwrap();
        assert!(cfg.a.is_some() && cfg.b.is_some());
        assert_eq!(cfg.methods.as_ref().unwrap().len(), 1);
    }

    #[test]
    fn config_rejects_unknown_fields() {
        let text = r#"{"unknown_field": 1}"#;
        assert!(serde_json::from_str::<ExperimentConfig>(text).is_err());
    }

    #[test]
    fn invalid_spec_params_fail_deserialization() {
        let text = r#"{"a": {"family": "geometric", "rho": 1.5}}"#;
        assert!(serde_json::from_str::<ExperimentConfig>(text).is_err());
    }

    fn ctx_from(cfg: ExperimentConfig, command: &'static str) -> Context {
        let args = RunArgs {
            config: PathBuf::new(),
            r: None,
            seed: None,
            samples: None,
            workers: None,
            out: None,
            format: None,
            audit: None,
        };
        Context::resolve(command, cfg, &args).unwrap()
    }

    #[test]
    fn eval_single_term_matches_closed_form() {
        let cfg: ExperimentConfig = serde_json::from_str(
            r#"{
            "a": {"family": "explicit", "terms": [1.0]},
            "law": {"kind": "gaussian"},
            "r_grid": [6.0],
            "methods": ["lifshits"]
        }"#,
        )
        .unwrap();
        let ctx = ctx_from(cfg, "eval");
        let report = cmd_eval(&ctx).unwrap();
        let want = (2.0 * gauss::phi_cdf(6.0)).ln() + gauss::log_one_minus_phi(6.0);
        let got = report.rows[0].log_p.unwrap();
        assert!((got - want).abs() < 1e-9);
    }

    #[test]
    fn eval_ldp_single_term_exponential() {
        let cfg: ExperimentConfig = serde_json::from_str(
            r#"{
            "a": {"family": "explicit", "terms": [1.0]},
            "law": {"kind": "exponential", "rate": 1.0},
            "r_grid": [10.0],
            "methods": ["ldp"]
        }"#,
        )
        .unwrap();
        let ctx = ctx_from(cfg, "eval");
        let report = cmd_eval(&ctx).unwrap();
        assert!((report.rows[0].log_p.unwrap() + 10.0).abs() < 1e-12);
    }

    #[test]
    fn empty_r_grid_is_usage_error() {
        let cfg: ExperimentConfig = serde_json::from_str(
            r#"{
            "a": {"family": "explicit", "terms": [1.0]},
            "law": {"kind": "gaussian"},
            "r_grid": [],
            "methods": ["lifshits"]
        }"#,
        )
        .unwrap();
        let args = RunArgs {
            config: PathBuf::new(),
            r: None,
            seed: None,
            samples: None,
            workers: None,
            out: None,
            format: None,
            audit: None,
        };
        assert!(matches!(
            Context::resolve("eval", cfg, &args),
            Err(CliError::Usage(_))
        ));
    }

    #[test]
    fn compare_identical_sequences_has_unit_ratio() {
        let cfg: ExperimentConfig = serde_json::from_str(
            r#"{
            "a": {"family": "geometric", "rho": 0.5},
            "b": {"family": "geometric", "rho": 0.5},
            "law": {"kind": "gaussian"},
            "r_grid": [4.0],
            "methods": ["lifshits"],
            "horizon": 10000, "window": 100
        }"#,
        )
        .unwrap();
        let ctx = ctx_from(cfg, "compare");
        let report = cmd_compare(&ctx).unwrap();
        let row = &report.rows[0];
        assert!((row.prob_ratio.unwrap() - 1.0).abs() < 1e-12);
        assert!((row.log_ratio.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn check_alternating_harmonic_deviation() {
        let cfg: ExperimentConfig = serde_json::from_str(
            r#"{
            "deviation": {"kind": "alternating_power_law", "coeff": 1.0, "s": 1.0},
            "horizon": 100000, "window": 200
        }"#,
        )
        .unwrap();
        let ctx = ctx_from(cfg, "check");
        let report = cmd_check(&ctx).unwrap();
        let bundle = report.verdicts.unwrap();
        assert!(bundle.series.unwrap().converges());
        assert!(bundle.series_squares.unwrap().converges());
        assert!(!bundle.wermuth.unwrap().consistency_flag);
        assert!(!report.rows.is_empty());
    }

    #[test]
    fn check_without_inputs_is_usage_error() {
        let ctx = ctx_from(ExperimentConfig::default(), "check");
        assert!(matches!(cmd_check(&ctx), Err(CliError::Usage(_))));
    }

    #[test]
    fn csv_numbers_match_json_numbers() {
        let cfg: ExperimentConfig = serde_json::from_str(
            r#"{
            "a": {"family": "explicit", "terms": [1.0]},
            "law": {"kind": "exponential", "rate": 1.0},
            "r_grid": [2.0, 4.0],
            "methods": ["ldp"],
            "format": "csv"
        }"#,
        )
        .unwrap();
        let ctx = ctx_from(cfg, "eval");
        let report = cmd_eval(&ctx).unwrap();
        let csv = to_csv(&report);
        let json = serde_json::to_string(&report).unwrap();
        // Every numeric CSV cell reappears verbatim in the JSON.
        for line in csv.lines().skip(2) {
            let log_p = line.split(',').nth(2).unwrap();
            assert!(json.contains(log_p), "{log_p} not in JSON");
        }
    }
}
