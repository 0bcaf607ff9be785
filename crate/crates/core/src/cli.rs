//! The `fsdp` command line.
//!
//! Every subcommand prints a JSON report to stdout and, with `--out DIR`,
//! also writes it to `DIR/<subcommand>.json` next to any CSV tables. Reports
//! embed the crate version and the fully resolved configuration, and carry
//! no timestamps, so equal inputs give byte-identical files.
//!
//! Randomness comes from `--seed`. Single releases use the stream
//! `rng_from_seed(seed)`; attack trial `t` uses `child_rng(seed, t)`.
//!
//! Exit codes: 0 on success, 1 on invalid input, 2 when a computation is
//! refused for exceeding an enumeration budget. `FSDP_BUDGET` replaces the
//! default domain, search and grid budgets; explicit flags win over it.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::attack::{attack_experiment, build_family_with_budget, AttackReport, TrialRecord};
use crate::calibration::{C_M, C_U};
use crate::data::{max_error, Database, QueryClass, SparseSyntheticDatabase};
use crate::error::{Error, Result};
use crate::fsd::{choose_m, fsd_with_budget, ShatteringWitness, DEFAULT_NODE_BUDGET};
use crate::io::{read_class, read_database};
use crate::mechanisms::{
    check_domain_budget, exponential_release_exact, exponential_release_mcmc, laplace_histogram,
    utility_threshold, ExactConfig, ExponentRule, L1Handling, McmcConfig, PrivacyParams,
    ReleaseOutput, DEFAULT_DOMAIN_BUDGET,
};
use crate::oracle::{
    best_sparse_db, exact_output_distribution, misscaled_certificate, real_neighbor_probe,
    PrivacyCertificate,
};
use crate::rng::rng_from_seed;

const VERSION: &str = env!("CARGO_PKG_VERSION");
const BUDGET_ENV: &str = "FSDP_BUDGET";
const DEFAULT_GRID_BUDGET: u128 = 50_000_000;

#[derive(Debug, Parser)]
#[command(
    name = "fsdp",
    version,
    about = "Private linear-query release over sparse synthetic databases"
)]
struct Cli {
    /// Directory for JSON and CSV artifacts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Release a synthetic database with the exponential mechanism.
    Release(ReleaseArgs),
    /// Fat-shattering dimension of a query class.
    Fsd(FsdArgs),
    /// Run the reconstruction attack against a mechanism.
    Attack(AttackArgs),
    /// Certify the privacy ratio over a grid of integer neighbors.
    VerifyPrivacy(VerifyArgs),
    /// Exact output distribution and best sparse approximation of one database.
    Oracle(OracleArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Sampler {
    Exact,
    Mcmc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Exponent {
    /// Divisor 4.
    #[value(alias = "paper")]
    Quarter,
    /// Divisor 2(1 + 1/m).
    Tight,
}

impl From<Exponent> for ExponentRule {
    fn from(e: Exponent) -> Self {
        match e {
            Exponent::Quarter => ExponentRule::Quarter,
            Exponent::Tight => ExponentRule::TightSensitivity,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum MechanismKind {
    Exact,
    Mcmc,
    Laplace,
    Identity,
}

fn parse_l1(s: &str) -> std::result::Result<L1Handling, String> {
    match s {
        "public" => Ok(L1Handling::PublicTrue),
        "private" => Ok(L1Handling::PrivateEstimate),
        _ => match s.parse::<f64>() {
            Ok(v) if v.is_finite() && v >= 0.0 => Ok(L1Handling::Supplied(v)),
            _ => Err(format!(
                "expected `public`, `private` or a nonnegative number, got `{s}`"
            )),
        },
    }
}

#[derive(Debug, Args, Serialize)]
struct ReleaseArgs {
    #[arg(long)]
    db: PathBuf,
    #[arg(long)]
    class: PathBuf,
    #[arg(long)]
    alpha: f64,
    /// Target relative accuracy; with `--gamma` it selects `m` when `--m` is absent.
    #[arg(long)]
    eta: Option<f64>,
    /// Scale for the shattering search; defaults to η/5.
    #[arg(long)]
    gamma: Option<f64>,
    /// Size of the sparse domain; overrides the choice from η.
    #[arg(long)]
    m: Option<u64>,
    #[arg(long, value_enum, default_value_t = Sampler::Exact)]
    sampler: Sampler,
    /// Metropolis steps for the MCMC sampler.
    #[arg(long, default_value_t = 10_000)]
    steps: u64,
    #[arg(long, value_enum, default_value_t = Exponent::Quarter)]
    exponent: Exponent,
    /// `public`, `private` or a fixed nonnegative value.
    #[arg(long, value_parser = parse_l1, default_value = "public")]
    l1: L1Handling,
    #[arg(long, default_value_t = PrivacyParams::DEFAULT_DELTA_UTIL)]
    delta: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Largest shattered set to search for; defaults to min(n, log2 k).
    #[arg(long)]
    dmax: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
struct FsdArgs {
    #[arg(long)]
    class: PathBuf,
    #[arg(long)]
    gamma: f64,
    #[arg(long)]
    dmax: Option<usize>,
    /// Search-node budget.
    #[arg(long)]
    budget: Option<u64>,
}

#[derive(Debug, Args, Serialize)]
struct AttackArgs {
    #[arg(long)]
    class: PathBuf,
    #[arg(long)]
    gamma: f64,
    #[arg(long)]
    alpha: f64,
    #[arg(long, value_enum, default_value_t = MechanismKind::Exact)]
    mechanism: MechanismKind,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    dmax: Option<usize>,
    /// Sparse-domain size for the exponential mechanism; defaults to d/2.
    #[arg(long)]
    m: Option<u64>,
    #[arg(long, default_value_t = 1000)]
    steps: u64,
    #[arg(long, value_enum, default_value_t = Exponent::Quarter)]
    exponent: Exponent,
}

#[derive(Debug, Args, Serialize)]
struct VerifyArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    entry_cap: u32,
    /// Query class; defaults to the `n` point indicators.
    #[arg(long)]
    class: Option<PathBuf>,
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    m: u64,
    #[arg(long, value_enum, default_value_t = Exponent::Quarter)]
    exponent: Exponent,
    /// Random real-valued neighbor pairs checked besides the integer grid.
    #[arg(long, default_value_t = 100)]
    probes: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Multiplies the score inside the exponent; values above 1 miscalibrate
    /// the mechanism on purpose.
    #[arg(long, default_value_t = 1.0)]
    score_multiplier: f64,
}

#[derive(Debug, Args, Serialize)]
struct OracleArgs {
    #[arg(long)]
    db: PathBuf,
    #[arg(long)]
    class: PathBuf,
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    m: u64,
    #[arg(long, value_enum, default_value_t = Exponent::Quarter)]
    exponent: Exponent,
}

/// Enumeration limits in force for a run.
#[derive(Debug, Clone, Copy, Serialize)]
struct Budgets {
    domain: u128,
    nodes: u64,
    grid: u128,
}

impl Budgets {
    fn from_env() -> Result<Self> {
        match std::env::var(BUDGET_ENV) {
            Err(_) => Ok(Self {
                domain: DEFAULT_DOMAIN_BUDGET,
                nodes: DEFAULT_NODE_BUDGET,
                grid: DEFAULT_GRID_BUDGET,
            }),
            Ok(text) => {
                let v: u64 = text.trim().parse().map_err(|_| Error::Parse {
                    path: BUDGET_ENV.into(),
                    line: 0,
                    message: format!("`{text}` is not a nonnegative integer"),
                })?;
                Ok(Self {
                    domain: v.into(),
                    nodes: v,
                    grid: v.into(),
                })
            }
        }
    }
}

#[derive(Serialize)]
struct Report<'a, C, R> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    config: &'a C,
    budgets: Budgets,
    result: R,
}

/// A CSV table written next to the JSON report.
struct Table {
    name: String,
    body: Vec<u8>,
}

struct Outcome {
    json: String,
    tables: Vec<Table>,
}

fn check_finite(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be finite",
        })
    }
}

fn default_dmax(class: &QueryClass) -> usize {
    (class.len().ilog2() as usize).min(class.dim())
}

fn render<C: Serialize, R: Serialize>(
    command: &'static str,
    config: &C,
    budgets: Budgets,
    result: R,
) -> Result<String> {
    let report = Report {
        tool: "fsdp",
        version: VERSION,
        command,
        config,
        budgets,
        result,
    };
    Ok(serde_json::to_string_pretty(&report).expect("reports serialize") + "\n")
}

fn csv_table<T: Serialize>(
    name: &str,
    command: &str,
    config_json: &str,
    rows: &[T],
) -> Result<Table> {
    let mut body = format!("# fsdp {VERSION} {command} {config_json}\n").into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut body);
        for row in rows {
            w.serialize(row)
                .map_err(|e| std::io::Error::other(e.to_string()))?;
        }
        w.flush()?;
    }
    Ok(Table {
        name: name.to_string(),
        body,
    })
}

fn compact<C: Serialize>(config: &C) -> String {
    serde_json::to_string(config).expect("configs serialize")
}

#[derive(Serialize)]
struct FsdSummary {
    gamma: f64,
    d: usize,
    exact: bool,
    nodes_explored: u64,
}

#[derive(Serialize)]
struct QueryError {
    query: usize,
    true_answer: f64,
    released_answer: f64,
    abs_error: f64,
}

#[derive(Serialize)]
struct ReleaseResult {
    m: u64,
    fsd: Option<FsdSummary>,
    sampler: Sampler,
    d_out: Database,
    d_prime: SparseSyntheticDatabase,
    score: f64,
    exponent_rule: ExponentRule,
    l1_used: f64,
    alpha_used: f64,
    approximate: bool,
    max_error: f64,
    relative_error: f64,
    utility_threshold: Option<f64>,
    answers: Vec<QueryError>,
}

fn release(args: &ReleaseArgs, budgets: Budgets) -> Result<Outcome> {
    let db = read_database(&args.db)?;
    let class = read_class(&args.class)?;
    let params = PrivacyParams::new(args.alpha, args.delta)?;
    let (m, fsd) = match (args.m, args.eta) {
        (Some(m), _) => (m, None),
        (None, Some(eta)) => {
            let gamma = args.gamma.unwrap_or(eta / 5.0);
            let found = fsd_with_budget(
                &class,
                gamma,
                args.dmax.unwrap_or_else(|| default_dmax(&class)),
                budgets.nodes,
            )?;
            let m = choose_m(eta, found.d, C_M)?;
            let summary = FsdSummary {
                gamma,
                d: found.d,
                exact: found.exact,
                nodes_explored: found.nodes_explored,
            };
            (m, Some(summary))
        }
        (None, None) => {
            return Err(Error::InvalidParameter {
                name: "eta",
                value: f64::NAN,
                reason: "required when --m is not given",
            })
        }
    };
    let mut rng = rng_from_seed(args.seed);
    let out: ReleaseOutput = match args.sampler {
        Sampler::Exact => {
            let config = ExactConfig::new(m)
                .rule(args.exponent.into())
                .l1(args.l1)
                .domain_budget(budgets.domain);
            exponential_release_exact(&db, &class, &params, &config, &mut rng)?
        }
        Sampler::Mcmc => {
            let config = McmcConfig::new(m, args.steps)
                .rule(args.exponent.into())
                .l1(args.l1);
            exponential_release_mcmc(&db, &class, &params, &config, &mut rng)?
        }
    };
    let truth = class.answers(&db)?;
    let released = class.answers(&out.d_out)?;
    let answers: Vec<QueryError> = truth
        .iter()
        .zip(&released)
        .enumerate()
        .map(|(query, (&t, &r))| QueryError {
            query,
            true_answer: t,
            released_answer: r,
            abs_error: (t - r).abs(),
        })
        .collect();
    let err = max_error(&class, &db, &out.d_out)?;
    let norm = db.l1_norm();
    let result = ReleaseResult {
        m,
        fsd,
        sampler: args.sampler,
        d_out: out.d_out,
        d_prime: out.d_prime,
        score: out.score,
        exponent_rule: out.exponent_rule,
        l1_used: out.l1_used,
        alpha_used: out.alpha_used,
        approximate: out.approximate,
        max_error: err,
        relative_error: if norm > 0.0 { err / norm } else { 0.0 },
        utility_threshold: args
            .eta
            .map(|eta| utility_threshold(m, db.dim(), eta, args.alpha, C_U)),
        answers,
    };
    let table = csv_table(
        "release_errors.csv",
        "release",
        &compact(args),
        &result.answers,
    )?;
    Ok(Outcome {
        json: render("release", args, budgets, result)?,
        tables: vec![table],
    })
}

#[derive(Serialize)]
struct FsdOutput {
    d: usize,
    witness: Option<ShatteringWitness>,
    nodes_explored: u64,
    exact: bool,
}

fn fsd_command(args: &FsdArgs, budgets: Budgets) -> Result<Outcome> {
    let class = read_class(&args.class)?;
    let nodes = args.budget.unwrap_or(budgets.nodes);
    let found = fsd_with_budget(&class, args.gamma, args.dmax.unwrap_or(class.dim()), nodes)?;
    let result = FsdOutput {
        d: found.d,
        witness: found.witness,
        nodes_explored: found.nodes_explored,
        exact: found.exact,
    };
    let budgets = Budgets { nodes, ..budgets };
    Ok(Outcome {
        json: render("fsd", args, budgets, result)?,
        tables: Vec::new(),
    })
}

#[derive(Serialize)]
struct FamilySummary {
    d: usize,
    j_star: usize,
    bucket: Vec<usize>,
    thresholds: Vec<f64>,
    subsets: usize,
    family_queries: Vec<usize>,
    min_gap_slack: f64,
}

#[derive(Serialize)]
struct AttackOutput {
    family: FamilySummary,
    m: Option<u64>,
    report: AttackReport,
}

fn attack(args: &AttackArgs, budgets: Budgets) -> Result<Outcome> {
    let class = read_class(&args.class)?;
    let params = PrivacyParams::with_alpha(args.alpha)?;
    let dmax = args.dmax.unwrap_or_else(|| default_dmax(&class));
    let family = build_family_with_budget(&class, args.gamma, dmax, budgets.nodes)?;
    let d = family.d();
    let rule: ExponentRule = args.exponent.into();
    let m = match args.mechanism {
        MechanismKind::Exact | MechanismKind::Mcmc => Some(args.m.unwrap_or(d as u64 / 2)),
        _ => None,
    };
    if args.mechanism == MechanismKind::Exact {
        check_domain_budget(class.dim(), m.unwrap_or(1), budgets.domain)?;
    }
    let report = match args.mechanism {
        MechanismKind::Identity => attack_experiment(
            |db, _| Ok(db.clone()),
            &family,
            args.alpha,
            args.trials,
            args.seed,
        )?,
        MechanismKind::Laplace => attack_experiment(
            |db, rng| laplace_histogram(db, args.alpha, rng),
            &family,
            args.alpha,
            args.trials,
            args.seed,
        )?,
        MechanismKind::Exact => {
            let config = ExactConfig::new(m.unwrap_or(1))
                .rule(rule)
                .domain_budget(budgets.domain);
            attack_experiment(
                |db, rng| Ok(exponential_release_exact(db, &class, &params, &config, rng)?.d_out),
                &family,
                args.alpha,
                args.trials,
                args.seed,
            )?
        }
        MechanismKind::Mcmc => {
            let config = McmcConfig::new(m.unwrap_or(1), args.steps).rule(rule);
            attack_experiment(
                |db, rng| Ok(exponential_release_mcmc(db, &class, &params, &config, rng)?.d_out),
                &family,
                args.alpha,
                args.trials,
                args.seed,
            )?
        }
    };
    let table = csv_table::<TrialRecord>(
        "attack_trials.csv",
        "attack",
        &compact(args),
        &report.records,
    )?;
    let result = AttackOutput {
        family: FamilySummary {
            d,
            j_star: family.j_star(),
            bucket: family.bucket().to_vec(),
            thresholds: family.thresholds(),
            subsets: family.subset_masks().len(),
            family_queries: family.family_queries(),
            min_gap_slack: family.min_gap_slack(),
        },
        m,
        report,
    };
    Ok(Outcome {
        json: render("attack", args, budgets, result)?,
        tables: vec![table],
    })
}

#[derive(Serialize)]
struct VerifyOutput {
    max_ratio: f64,
    bound: f64,
    pass: bool,
    witness_pair: Option<crate::oracle::WitnessPair<Vec<u64>>>,
    grid: PrivacyCertificate<Vec<u64>>,
    real_probes: PrivacyCertificate<Vec<u64>>,
}

fn indicator_class(n: usize) -> Result<QueryClass> {
    QueryClass::from_rows((0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()))
}

fn verify_privacy(args: &VerifyArgs, budgets: Budgets) -> Result<Outcome> {
    let class = match &args.class {
        Some(path) => read_class(path)?,
        None => indicator_class(args.n)?,
    };
    check_finite("score_multiplier", args.score_multiplier)?;
    let params = PrivacyParams::with_alpha(args.alpha)?;
    let rule: ExponentRule = args.exponent.into();
    let grid = misscaled_certificate(
        args.n,
        args.entry_cap,
        &class,
        &params,
        args.m,
        rule,
        args.score_multiplier,
        budgets.grid,
    )?;
    let real_probes = if args.score_multiplier == 1.0 {
        let mut rng = rng_from_seed(args.seed);
        real_neighbor_probe(
            args.n,
            args.entry_cap.max(1),
            &class,
            &params,
            args.m,
            rule,
            args.probes,
            budgets.domain,
            &mut rng,
        )?
    } else {
        PrivacyCertificate {
            max_ratio: 1.0,
            bound: params.alpha.exp(),
            pass: true,
            pairs_checked: 0,
            witness_pair: None,
        }
    };
    let combined = grid.clone().merge(real_probes.clone());
    let result = VerifyOutput {
        max_ratio: combined.max_ratio,
        bound: combined.bound,
        pass: combined.pass,
        witness_pair: combined.witness_pair,
        grid,
        real_probes,
    };
    Ok(Outcome {
        json: render("verify-privacy", args, budgets, result)?,
        tables: Vec::new(),
    })
}

#[derive(Serialize)]
struct Outcomeprob {
    counts: Vec<u64>,
    probability: f64,
}

#[derive(Serialize)]
struct OracleOutput {
    distribution: Vec<Outcomeprob>,
    best_sparse: SparseSyntheticDatabase,
    best_relative_error: f64,
}

fn oracle_command(args: &OracleArgs, budgets: Budgets) -> Result<Outcome> {
    let db = read_database(&args.db)?;
    let class = read_class(&args.class)?;
    let params = PrivacyParams::with_alpha(args.alpha)?;
    let dist = exact_output_distribution(
        &db,
        &class,
        &params,
        args.m,
        args.exponent.into(),
        budgets.domain,
    )?;
    let (best_sparse, best_relative_error) = best_sparse_db(&db, &class, args.m, budgets.domain)?;
    let result = OracleOutput {
        distribution: dist
            .into_iter()
            .map(|(o, p)| Outcomeprob {
                counts: o.counts().to_vec(),
                probability: p,
            })
            .collect(),
        best_sparse,
        best_relative_error,
    };
    Ok(Outcome {
        json: render("oracle", args, budgets, result)?,
        tables: Vec::new(),
    })
}

fn write_artifacts(dir: &Path, command: &str, outcome: &Outcome) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(format!("{command}.json")), &outcome.json)?;
    for t in &outcome.tables {
        fs::write(dir.join(&t.name), &t.body)?;
    }
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<()> {
    let budgets = Budgets::from_env()?;
    let (name, outcome) = match &cli.command {
        Command::Release(a) => ("release", release(a, budgets)?),
        Command::Fsd(a) => ("fsd", fsd_command(a, budgets)?),
        Command::Attack(a) => ("attack", attack(a, budgets)?),
        Command::VerifyPrivacy(a) => ("verify-privacy", verify_privacy(a, budgets)?),
        Command::Oracle(a) => ("oracle", oracle_command(a, budgets)?),
    };
    if let Some(dir) = &cli.out {
        write_artifacts(dir, name, &outcome)?;
    }
    print!("{}", outcome.json);
    Ok(())
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_budget_refusal() {
                2
            } else {
                1
            }
        }
    }
}
