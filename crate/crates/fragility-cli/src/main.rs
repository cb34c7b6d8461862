//! Command-line front end for block fragility analysis.
//!
//! Four subcommands cover the whole pipeline: `theoretical` evaluates closed
//! forms for a configured dependence model, `estimate` runs the rank-based
//! estimators on a CSV dataset, `simulate` samples a model to CSV, and
//! `mc-check` verifies closed forms against simulation.
//!
//! Exit codes: 1 for configuration problems, 2 for data problems, 3 for
//! numeric failures.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::exit;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use fragility::asympt::{eta_bounds, eta_report_gaussian, Association, EtaBoundsReport, EtaReport};
use fragility::error::{Error, Result};
use fragility::estimation::{eta_reports_hat, fi_hat, pit_transform, EstimatorConfig};
use fragility::fragility::{fragility_report, ExtremalCoefficientSet, FragilityReport};
use fragility::io::{block_maxima, load_csv, monthly_block_maxima, neg_log_returns};
use fragility::models::MevModel;
use fragility::montecarlo::{mc_check, McCheckReport, McCheckSpec};
use fragility::taildep::TailDependenceSet;
use fragility::{Dataset, Partition, PartitionConfig};

#[derive(Parser)]
#[command(
    name = "fragility",
    version,
    about = "Block fragility index: closed forms, estimation, simulation",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form fragility, tail-dependence and eta indices for a model
    Theoretical(TheoreticalArgs),
    /// Estimate the indices from a CSV dataset
    Estimate(EstimateArgs),
    /// Sample a model and write the rows as CSV
    Simulate(SimulateArgs),
    /// Compare closed forms against a fresh simulation
    McCheck(McCheckArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Args)]
struct OutputArgs {
    /// Report format
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Write the report to this file instead of stdout
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TheoreticalArgs {
    /// Model JSON ({"family": "logistic", "d": 4, "alpha": 0.5}, ...)
    #[arg(long, value_name = "PATH")]
    model: PathBuf,
    /// Partition JSON; members reference the coordinate labels X1..Xd.
    /// Defaults to one block per coordinate.
    #[arg(long, value_name = "PATH")]
    partition: Option<PathBuf>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct EstimateArgs {
    /// CSV dataset: header row, optional leading "date" column (YYYY-MM-DD)
    #[arg(long, value_name = "PATH")]
    data: PathBuf,
    /// Partition JSON; members reference CSV column labels.
    /// Defaults to one block per column.
    #[arg(long, value_name = "PATH")]
    partition: Option<PathBuf>,
    /// Turn price levels into negative log-returns first
    #[arg(long)]
    neg_log_returns: bool,
    /// Reduce to per-calendar-month componentwise maxima (needs dates)
    #[arg(long)]
    monthly_maxima: bool,
    /// Minimum usable rows for a calendar month to be kept
    #[arg(long, value_name = "N", default_value_t = 10)]
    min_obs: usize,
    /// Reduce to componentwise maxima of consecutive runs of N rows
    /// (the dateless counterpart of --monthly-maxima)
    #[arg(long, value_name = "N", conflicts_with = "monthly_maxima")]
    block_maxima: Option<usize>,
    /// Top order statistics for the Hill eta estimates (default: sqrt(n))
    #[arg(long, value_name = "N")]
    k: Option<usize>,
    /// Report raw extremal coefficients without clamping to [1, |A|]
    #[arg(long)]
    no_clamp: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct SimulateArgs {
    /// Model JSON
    #[arg(long, value_name = "PATH")]
    model: PathBuf,
    /// Number of rows to sample
    #[arg(short = 'n', long = "rows", value_name = "N")]
    n: usize,
    /// RNG seed; omitted, one is drawn from the clock and echoed to stderr
    #[arg(long, value_name = "SEED")]
    seed: Option<u64>,
    /// Write the CSV to this file instead of stdout
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct McCheckArgs {
    /// Model JSON
    #[arg(long, value_name = "PATH")]
    model: PathBuf,
    /// Partition JSON; members reference X1..Xd. Defaults to one block
    /// per coordinate.
    #[arg(long, value_name = "PATH")]
    partition: Option<PathBuf>,
    /// RNG seed (required: mc-check runs must be reproducible)
    #[arg(long, value_name = "SEED")]
    seed: u64,
    /// Sample size per replicate
    #[arg(short = 'n', long = "rows", value_name = "N", default_value_t = 100_000)]
    n: usize,
    /// Marginal rank quantiles to evaluate at
    #[arg(long, value_name = "Q1,Q2", value_delimiter = ',', default_values_t = [0.95, 0.99])]
    u: Vec<f64>,
    #[command(flatten)]
    output: OutputArgs,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let benign = matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            );
            let _ = e.print();
            exit(if benign { 0 } else { 1 });
        }
    };
    if let Err(err) = run(cli) {
        eprintln!("error: {err}");
        exit(exit_code(&err));
    }
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidArgument(_)
        | Error::Config(_)
        | Error::MissingCoefficient(_)
        | Error::Unsupported(_) => 1,
        Error::Data(_) => 2,
        Error::InconsistentCoefficients(_) | Error::UndefinedLimit(_) | Error::Numeric(_) => 3,
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Theoretical(args) => run_theoretical(args),
        Command::Estimate(args) => run_estimate(args),
        Command::Simulate(args) => run_simulate(args),
        Command::McCheck(args) => run_mc_check(args),
    }
}

fn read_text(path: &Path, what: &str) -> Result<String> {
    fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {what} {}: {e}", path.display())))
}

fn load_model(path: &Path) -> Result<MevModel> {
    MevModel::from_json(&read_text(path, "model config")?)
}

/// Resolves a partition config against column labels, or builds the finest
/// partition named by those labels when no config is given.
fn load_partition(path: Option<&PathBuf>, labels: &[String]) -> Result<Partition> {
    match path {
        Some(p) => PartitionConfig::from_json(&read_text(p, "partition config")?)?.resolve(labels),
        None => Partition::new(
            labels.len(),
            labels
                .iter()
                .enumerate()
                .map(|(i, l)| (l.clone(), vec![i + 1]))
                .collect(),
        ),
    }
}

fn coordinate_labels(d: usize) -> Vec<String> {
    (1..=d).map(|i| format!("X{i}")).collect()
}

fn emit(out: Option<&Path>, content: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, content)
            .map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn json_pretty<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| Error::Config(format!("cannot serialize report: {e}")))
}

fn f9(v: f64) -> String {
    format!("{v:.9}")
}

fn block_summary(partition: &Partition) -> String {
    partition
        .blocks()
        .iter()
        .map(|b| {
            let members = b
                .members
                .indices()
                .iter()
                .map(|i| i.to_string())
                .collect::<Vec<_>>()
                .join(",");
            format!("{}{{{members}}}", b.name)
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Width of the left name column shared by the coefficient and eta tables.
fn name_width<'a>(names: impl Iterator<Item = &'a str>) -> usize {
    names
        .map(str::len)
        .chain(["Global".len(), "eta(X,D)".len()])
        .max()
        .unwrap_or(8)
        + 2
}

/// The per-block/Global coefficient table: one row per block with its
/// (estimated or theoretical) extremal coefficient and within-block
/// fragility index, then the whole-vector row.
fn coefficient_table(
    report: &FragilityReport,
    per_block_fi: &[f64],
    global_fi: f64,
    width: usize,
    eps_header: &str,
    fi_header: &str,
) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<width$}{:>15}{:>15}", "", eps_header, fi_header);
    for ((block, eps), fi) in report
        .partition
        .iter()
        .zip(&report.eps_blocks)
        .zip(per_block_fi)
    {
        let _ = writeln!(
            out,
            "{:<width$}{:>15}{:>15}",
            block.name,
            f9(*eps),
            f9(*fi)
        );
    }
    let _ = writeln!(
        out,
        "{:<width$}{:>15}{:>15}",
        "Global",
        f9(report.eps_d),
        f9(global_fi)
    );
    out
}

fn eta_table(report: &EtaReport, block_names: &[String], width: usize) -> String {
    let mut out = String::new();
    match report.k {
        Some(k) => {
            let _ = writeln!(out, "eta (k = {k})");
        }
        None => {
            let _ = writeln!(out, "eta");
        }
    }
    let _ = writeln!(out, "{:<width$}{:>15}", "eta_D", f9(report.eta_d));
    for (name, eta) in block_names.iter().zip(&report.eta_blocks) {
        let _ = writeln!(out, "{:<width$}{:>15}", name, f9(*eta));
    }
    let _ = writeln!(
        out,
        "{:<width$}{:>15}",
        "eta(X,D)",
        f9(report.eta_block_aifi)
    );
    if let Some(comb) = report.eta_combination {
        let _ = writeln!(out, "{:<width$}{:>15}", "eta_comb", f9(comb));
    }
    out
}

fn per_block_fi(report: &FragilityReport) -> Vec<f64> {
    report
        .partition
        .iter()
        .zip(&report.eps_blocks)
        .map(|(block, eps)| block.members.len() as f64 / eps)
        .collect()
}

// ---------------------------------------------------------------------------
// theoretical

#[derive(Serialize)]
struct TheoreticalOutput {
    family: String,
    dimension: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    fragility: Option<FragilityReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    per_block_fi: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    global_fi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tail_dependence: Option<TailDependenceSet>,
    #[serde(skip_serializing_if = "Option::is_none")]
    eta: Option<EtaReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    eta_bounds: Option<EtaBoundsReport>,
}

fn run_theoretical(args: TheoreticalArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let d = model.dimension();
    let labels = coordinate_labels(d);
    let partition = load_partition(args.partition.as_ref(), &labels)?;

    let mut output = TheoreticalOutput {
        family: model.family_name().to_string(),
        dimension: d,
        fragility: None,
        per_block_fi: None,
        global_fi: None,
        tail_dependence: None,
        eta: None,
        eta_bounds: None,
    };

    if model.is_max_stable() {
        let eps = ExtremalCoefficientSet::from_model(&model, &partition)?;
        let report = fragility_report(&eps, &partition)?;
        output.per_block_fi = Some(per_block_fi(&report));
        output.global_fi = Some(d as f64 / report.eps_d);
        output.tail_dependence = Some(TailDependenceSet::from_model(&model, &partition)?);
        output.fragility = Some(report);
    } else if let MevModel::Gaussian(gaussian) = &model {
        let report = eta_report_gaussian(gaussian.sigma(), &partition)?;
        let association = Association::from_correlation(gaussian.sigma());
        output.eta_bounds = Some(eta_bounds(
            report.eta_d,
            &report.eta_blocks,
            d,
            association,
        )?);
        output.eta = Some(report);
    }

    let content = match args.output.format {
        Format::Json => json_pretty(&output)?,
        Format::Text => render_theoretical_text(&output, &partition),
    };
    emit(args.output.out.as_deref(), &content)
}

fn render_theoretical_text(output: &TheoreticalOutput, partition: &Partition) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "family: {}  d = {}  blocks = {}",
        output.family,
        output.dimension,
        block_summary(partition)
    );
    let width = name_width(partition.blocks().iter().map(|b| b.name.as_str()));

    if let (Some(report), Some(fis), Some(global)) = (
        &output.fragility,
        &output.per_block_fi,
        output.global_fi,
    ) {
        let _ = writeln!(out);
        out.push_str(&coefficient_table(report, fis, global, width, "eps", "fi"));
        let _ = writeln!(out);
        let _ = writeln!(out, "FI(X,D) = {}", f9(report.fi));
        let _ = writeln!(out);
        let _ = writeln!(out, "P(N = k | N > 0)");
        for (k, p) in report.exceedance_probs.iter().enumerate() {
            let _ = writeln!(out, "p[{}] = {}", k + 1, f9(*p));
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "bounds");
        let b = &report.bounds;
        let _ = writeln!(
            out,
            "inter: 1 <= FI <= {}{}",
            f9(b.inter_upper),
            if b.blocks_totally_dependent {
                "   [upper attained: blocks totally dependent]"
            } else if b.blocks_independent {
                "   [lower attained: blocks independent]"
            } else {
                ""
            }
        );
        let _ = writeln!(
            out,
            "intra: {} <= FI <= {}{}",
            f9(b.intra_lower),
            f9(b.intra_upper),
            if b.within_blocks_totally_dependent {
                "   [lower attained: within-block total dependence]"
            } else if b.within_blocks_independent {
                "   [upper attained: within-block independence]"
            } else {
                ""
            }
        );
    }

    if let Some(tds) = &output.tail_dependence {
        let _ = writeln!(out);
        let _ = writeln!(out, "lambda / tau by block subset");
        for (subset, lambda) in tds.lambdas() {
            let label = format!(
                "{{{}}}",
                subset
                    .iter()
                    .map(|j| j.to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            );
            let tau = tds
                .taus()
                .get(subset)
                .map(|t| format!("   tau = {}", f9(*t)))
                .unwrap_or_default();
            let _ = writeln!(out, "{label:<width$}lambda = {}{tau}", f9(*lambda));
        }
    }

    if let Some(eta) = &output.eta {
        let names: Vec<String> = partition
            .blocks()
            .iter()
            .map(|b| b.name.clone())
            .collect();
        let _ = writeln!(out);
        out.push_str(&eta_table(eta, &names, width));
        if let Some(bounds) = &output.eta_bounds {
            let _ = writeln!(out);
            let _ = writeln!(
                out,
                "association: {}",
                format!("{:?}", bounds.association).to_lowercase()
            );
            let _ = writeln!(
                out,
                "eta(X,D) bounds: [{}, {}]",
                f9(bounds.lower),
                f9(bounds.upper)
            );
            let mut attained: Vec<&str> = Vec::new();
            if bounds.at_block_independence {
                attained.push("block independence");
            }
            if bounds.at_block_total_dependence {
                attained.push("block total dependence");
            }
            if bounds.at_within_independence {
                attained.push("within-block independence");
            }
            if bounds.at_within_total_dependence {
                attained.push("within-block total dependence");
            }
            if !attained.is_empty() {
                let _ = writeln!(out, "boundary regimes: {}", attained.join(", "));
            }
        }
    }

    out
}

// ---------------------------------------------------------------------------
// estimate

#[derive(Serialize)]
struct PreprocessingSummary {
    rows_loaded: usize,
    rows_dropped_unparseable: usize,
    neg_log_returns: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    months_dropped: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    maxima_block_len: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    trailing_rows_dropped: Option<usize>,
    rows_used: usize,
}

#[derive(Serialize)]
struct EstimateOutput {
    preprocessing: PreprocessingSummary,
    fragility: FragilityReport,
    per_block_fi: Vec<f64>,
    global_fi: f64,
    eta: EtaReport,
}

fn run_estimate(args: EstimateArgs) -> Result<()> {
    let (mut data, dropped) = load_csv(&args.data)?;
    if dropped > 0 {
        eprintln!("note: dropped {dropped} rows with unparseable cells");
    }
    let mut preprocessing = PreprocessingSummary {
        rows_loaded: data.n_rows(),
        rows_dropped_unparseable: dropped,
        neg_log_returns: args.neg_log_returns,
        months_dropped: None,
        maxima_block_len: None,
        trailing_rows_dropped: None,
        rows_used: 0,
    };

    if args.neg_log_returns {
        data = neg_log_returns(&data)?;
    }
    if args.monthly_maxima {
        let (maxima, dropped_months) = monthly_block_maxima(&data, args.min_obs)?;
        if dropped_months > 0 {
            eprintln!(
                "note: dropped {dropped_months} months with fewer than {} rows",
                args.min_obs.max(1)
            );
        }
        preprocessing.months_dropped = Some(dropped_months);
        data = maxima;
    }
    if let Some(block_len) = args.block_maxima {
        let (maxima, trailing) = block_maxima(&data, block_len)?;
        preprocessing.maxima_block_len = Some(block_len);
        preprocessing.trailing_rows_dropped = Some(trailing);
        data = maxima;
    }
    preprocessing.rows_used = data.n_rows();

    let partition = load_partition(args.partition.as_ref(), data.labels())?;
    let config = EstimatorConfig {
        k: args.k,
        clamp_eps: !args.no_clamp,
    };
    let pit = pit_transform(&data)?;
    let fragility = fi_hat(&pit, &partition, &config)?;
    let eta = eta_reports_hat(&pit, &partition, &config)?;
    for line in fragility.diagnostics.iter().chain(&eta.diagnostics) {
        eprintln!("note: {line}");
    }

    let output = EstimateOutput {
        preprocessing,
        per_block_fi: per_block_fi(&fragility),
        global_fi: partition.dimension() as f64 / fragility.eps_d,
        fragility,
        eta,
    };

    let content = match args.output.format {
        Format::Json => json_pretty(&output)?,
        Format::Text => render_estimate_text(&output, &partition),
    };
    emit(args.output.out.as_deref(), &content)
}

fn render_estimate_text(output: &EstimateOutput, partition: &Partition) -> String {
    let width = name_width(partition.blocks().iter().map(|b| b.name.as_str()));
    let mut out = coefficient_table(
        &output.fragility,
        &output.per_block_fi,
        output.global_fi,
        width,
        "eps_hat",
        "fi_hat",
    );
    let _ = writeln!(out);
    let _ = writeln!(out, "FI(X,D) = {}", f9(output.fragility.fi));
    let _ = writeln!(out);
    let names: Vec<String> = partition
        .blocks()
        .iter()
        .map(|b| b.name.clone())
        .collect();
    out.push_str(&eta_table(&output.eta, &names, width));
    out
}

// ---------------------------------------------------------------------------
// simulate

fn run_simulate(args: SimulateArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let seed = match args.seed {
        Some(seed) => seed,
        None => SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_nanos() as u64)
            .unwrap_or(0x9e37_79b9_7f4a_7c15),
    };
    eprintln!("seed: {seed}");
    let sample = model.sample(args.n, seed)?;
    emit(args.out.as_deref(), &render_csv(&sample))
}

fn render_csv(data: &Dataset) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{}", data.labels().join(","));
    for i in 0..data.n_rows() {
        let row = data
            .row(i)
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(",");
        let _ = writeln!(out, "{row}");
    }
    out
}

// ---------------------------------------------------------------------------
// mc-check

fn run_mc_check(args: McCheckArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let labels = coordinate_labels(model.dimension());
    let partition = load_partition(args.partition.as_ref(), &labels)?;
    let mut spec = McCheckSpec::new(model, partition, args.seed);
    spec.n = args.n;
    spec.quantiles = args.u.clone();
    let report = mc_check(&spec)?;

    let content = match args.output.format {
        Format::Json => json_pretty(&report)?,
        Format::Text => render_mc_text(&report),
    };
    emit(args.output.out.as_deref(), &content)
}

fn render_mc_text(report: &McCheckReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "mc-check: family = {}  d = {}  n = {}  seed = {}  replicates = {}  tolerance = {}",
        report.model_family,
        report.dimension,
        report.n,
        report.seed,
        report.replicates,
        report.tolerance
    );
    let width = report
        .checks
        .iter()
        .map(|c| c.name.len())
        .chain(["quantity".len()])
        .max()
        .unwrap_or(8)
        + 2;

    let mut header = format!("{:<width$}{:>15}", "quantity", "closed_form");
    for u in &report.quantiles {
        let _ = write!(header, "{:>15}", format!("u={u}"));
    }
    let _ = write!(header, "{:>15}{:>8}", "abs_error", "result");
    let _ = writeln!(out);
    let _ = writeln!(out, "{header}");
    for check in &report.checks {
        let mut line = format!("{:<width$}{:>15}", check.name, f9(check.closed_form));
        for point in &check.empirical_by_u {
            let _ = write!(line, "{:>15}", f9(point.value));
        }
        let _ = write!(
            line,
            "{:>15}{:>8}",
            f9(check.abs_error),
            if check.pass { "PASS" } else { "FAIL" }
        );
        if check.converging == Some(false) {
            let _ = write!(line, "   [error not shrinking in u]");
        }
        let _ = writeln!(out, "{line}");
    }
    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "overall: {}",
        if report.pass { "PASS" } else { "FAIL" }
    );
    for note in &report.notes {
        let _ = writeln!(out, "note: {note}");
    }
    out
}
