//! Command-line front end: calibration, verification, slack computation,
//! accuracy reports, sanitised release, query answering, functional
//! certification, and the rectangle decomposition.
//!
//! Exit codes: 0 = success / DP holds, 1 = a DP violation was found (or a
//! slack target was exceeded), 2 = usage, I/O, or capacity errors.

mod formats;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use metricdp_core::accuracy::{expected_error, ErrorReport};
use metricdp_core::functional::{
    certify_projection_dp, functional_laplace_scale, sanitize_function, GridFunctionSpace,
    ProjectionCertificate,
};
use metricdp_core::mechanism::{laplace_scale, rr_min_p, PrivacyParams, ProductMechanism};
use metricdp_core::rng::stream;
use metricdp_core::verifier::{
    check_dp_1d_exhaustive, check_dp_product_bruteforce, check_query_dp, decompose_rectangles,
    delta_slack_closed_form, pure_dp_epsilon, RectangleDecomposition, VerificationReport,
    DEFAULT_TOLERANCE,
};

#[derive(Parser)]
#[command(
    name = "metricdp",
    version,
    about = "Differentially private sanitisation over finite metric spaces"
)]
struct Cli {
    /// Output format. JSON has stable key order and is the compatibility
    /// surface; text is for humans.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// Calibrate a mechanism to a privacy target.
    Calibrate {
        #[command(subcommand)]
        mechanism: CalibrateCommand,
    },
    /// Verify (epsilon, delta)-DP of a finite kernel exhaustively.
    Verify(VerifyArgs),
    /// The minimal delta making a kernel (epsilon, delta)-DP.
    Slack(SlackArgs),
    /// Expected-error report with both lower bounds.
    Error(ErrorArgs),
    /// Release a sanitised database (finite or functional).
    Sanitize(SanitizeArgs),
    /// The response law of a query over the sanitised database.
    Query(QueryArgs),
    /// Certify projections of the per-coordinate Laplace sanitiser.
    CertifyFunctional(CertifyFunctionalArgs),
    /// Rewrite a union of rectangles with disjoint second factors.
    Decompose(DecomposeArgs),
}

#[derive(Subcommand)]
enum CalibrateCommand {
    /// Randomized response: p = (1 - delta)/(m + e^epsilon).
    Rr {
        /// m = |D| - 1, the number of alternative values.
        #[arg(long)]
        m: usize,
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        delta: f64,
    },
    /// Laplace scale: b = diam/(epsilon - log(1 - delta)).
    Laplace {
        /// Diameter of the bounded data interval.
        #[arg(long, conflicts_with_all = ["lo", "hi"])]
        diam: Option<f64>,
        #[arg(long, requires = "hi")]
        lo: Option<f64>,
        #[arg(long, requires = "lo")]
        hi: Option<f64>,
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        delta: f64,
    },
    /// Per-coordinate Laplace scale for k-point grid records:
    /// b = k*(hi - lo)/(epsilon - log(1 - delta)).
    Functional {
        /// Number of grid points per record.
        #[arg(long)]
        k: usize,
        #[arg(long)]
        lo: f64,
        #[arg(long)]
        hi: f64,
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        delta: f64,
    },
}

#[derive(Args)]
struct VerifyArgs {
    /// Kernel spec (JSON).
    #[arg(long)]
    kernel: PathBuf,
    #[arg(long)]
    epsilon: f64,
    #[arg(long)]
    delta: f64,
    #[arg(long, value_enum, default_value_t = VerifyMode::Exhaustive)]
    mode: VerifyMode,
    /// Database rows for product / query modes.
    #[arg(long)]
    n: Option<usize>,
    /// Query spec (JSON), for query mode.
    #[arg(long)]
    query: Option<PathBuf>,
    /// Slack allowed on the DP inequality.
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    tolerance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, ValueEnum)]
enum VerifyMode {
    /// One-row kernel, all pairs x all output subsets.
    Exhaustive,
    /// Product mechanism over D^n, all neighbour pairs x all subsets of U^n.
    Product,
    /// Pushforward laws of a query for all neighbour pairs.
    Query,
}

#[derive(Args)]
struct SlackArgs {
    #[arg(long)]
    kernel: PathBuf,
    #[arg(long)]
    epsilon: f64,
    /// Target delta; exit code 1 when the slack exceeds it.
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    tolerance: f64,
}

#[derive(Args)]
struct ErrorArgs {
    #[arg(long)]
    kernel: PathBuf,
    /// Metric space (JSON) the error is measured in; must contain every
    /// input and output label of the kernel.
    #[arg(long)]
    space: PathBuf,
    /// Privacy parameters for the bounds. When omitted, the kernel's own
    /// tight parameters are used: the smallest epsilon at which it is
    /// (epsilon, 0)-DP.
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, requires = "epsilon")]
    delta: Option<f64>,
}

#[derive(Args)]
struct SanitizeArgs {
    /// Kernel spec (finite mode). Mutually exclusive with --functional-db.
    #[arg(long, conflicts_with = "functional_db")]
    kernel: Option<PathBuf>,
    /// Database CSV (finite mode).
    #[arg(long, requires = "kernel")]
    db: Option<PathBuf>,
    /// Functional database CSV: grid times first, one record per row.
    #[arg(long)]
    functional_db: Option<PathBuf>,
    /// Per-sample bounds for functional records (values are clipped).
    #[arg(long, requires = "functional_db")]
    lo: Option<f64>,
    #[arg(long, requires = "functional_db")]
    hi: Option<f64>,
    /// Explicit noise scale; otherwise calibrated from --epsilon/--delta.
    #[arg(long, requires = "functional_db")]
    scale: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    /// Seed for the release; generated (and reported) when omitted.
    #[arg(long)]
    seed: Option<u64>,
    /// Also write the released rows as CSV to this path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct QueryArgs {
    #[arg(long)]
    kernel: PathBuf,
    #[arg(long)]
    db: PathBuf,
    #[arg(long)]
    query: PathBuf,
    /// Monte Carlo sample count; exact enumeration when omitted.
    #[arg(long)]
    samples: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct CertifyFunctionalArgs {
    /// Number of grid points per record.
    #[arg(long)]
    k: usize,
    #[arg(long)]
    lo: f64,
    #[arg(long)]
    hi: f64,
    #[arg(long)]
    epsilon: f64,
    #[arg(long)]
    delta: f64,
    /// Noise scale to certify; the calibrated scale when omitted.
    #[arg(long)]
    scale: Option<f64>,
    /// 1-based grid indices of the projection, e.g. "1,3,4"; the full grid
    /// when omitted.
    #[arg(long)]
    indices: Option<String>,
}

#[derive(Args)]
struct DecomposeArgs {
    /// JSON file {"pairs": [{"a": [...], "b": [...]}, ...]}.
    #[arg(long)]
    pairs: PathBuf,
}

// --- outputs ---------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct CalibrateRrOutput {
    mechanism: &'static str,
    m: usize,
    epsilon: f64,
    delta: f64,
    p: f64,
}

#[derive(Serialize, Deserialize)]
struct CalibrateLaplaceOutput {
    mechanism: &'static str,
    diam: f64,
    epsilon: f64,
    delta: f64,
    b: f64,
}

#[derive(Serialize, Deserialize)]
struct CalibrateFunctionalOutput {
    mechanism: &'static str,
    k: usize,
    lo: f64,
    hi: f64,
    epsilon: f64,
    delta: f64,
    b: f64,
}

#[derive(Serialize, Deserialize)]
struct VerifyOutput {
    mode: String,
    epsilon: f64,
    delta: f64,
    tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    query: Option<String>,
    #[serde(flatten)]
    report: VerificationReport,
}

#[derive(Serialize, Deserialize)]
struct SlackOutput {
    epsilon: f64,
    delta_slack: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    target_delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    within_target: Option<bool>,
}

#[derive(Serialize, Deserialize)]
struct ErrorOutput {
    epsilon_inferred: bool,
    #[serde(flatten)]
    report: ErrorReport,
}

#[derive(Serialize, Deserialize)]
struct SanitizeOutput {
    seed: u64,
    rows: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct FunctionalSanitizeOutput {
    seed: u64,
    b: f64,
    grid: Vec<f64>,
    rows: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct QueryExactOutput {
    query: String,
    mode: &'static str,
    entries: Vec<(String, f64)>,
}

#[derive(Serialize, Deserialize)]
struct QueryMonteCarloOutput {
    query: String,
    mode: &'static str,
    samples: u64,
    seed: u64,
    /// (response, empirical frequency, binomial standard error).
    entries: Vec<(String, f64, f64)>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn emit<T: Serialize>(format: Format, value: &T, text: String) -> Result<()> {
    match format {
        Format::Json => println!("{}", serde_json::to_string_pretty(value)?),
        Format::Text => println!("{text}"),
    }
    Ok(())
}

fn generated_seed() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_nanos() as u64)
        .unwrap_or(0)
        ^ u64::from(std::process::id())
}

fn run(cli: Cli) -> Result<u8> {
    let format = cli.format;
    match cli.command {
        Command::Calibrate { mechanism } => run_calibrate(format, mechanism),
        Command::Verify(args) => run_verify(format, args),
        Command::Slack(args) => run_slack(format, args),
        Command::Error(args) => run_error(format, args),
        Command::Sanitize(args) => run_sanitize(format, args),
        Command::Query(args) => run_query(format, args),
        Command::CertifyFunctional(args) => run_certify_functional(format, args),
        Command::Decompose(args) => run_decompose(format, args),
    }
}

fn run_calibrate(format: Format, mechanism: CalibrateCommand) -> Result<u8> {
    match mechanism {
        CalibrateCommand::Rr { m, epsilon, delta } => {
            let params = PrivacyParams::new(epsilon, delta)?;
            let p = rr_min_p(m, &params)?;
            let out = CalibrateRrOutput {
                mechanism: "randomized-response",
                m,
                epsilon,
                delta,
                p,
            };
            emit(format, &out, format!("p = {p}"))?;
        }
        CalibrateCommand::Laplace {
            diam,
            lo,
            hi,
            epsilon,
            delta,
        } => {
            let diam = match (diam, lo, hi) {
                (Some(d), _, _) => d,
                (None, Some(lo), Some(hi)) => hi - lo,
                _ => bail!("pass --diam or both --lo and --hi"),
            };
            let params = PrivacyParams::new(epsilon, delta)?;
            let b = laplace_scale(diam, &params)?;
            let out = CalibrateLaplaceOutput {
                mechanism: "laplace",
                diam,
                epsilon,
                delta,
                b,
            };
            emit(format, &out, format!("b = {b}"))?;
        }
        CalibrateCommand::Functional {
            k,
            lo,
            hi,
            epsilon,
            delta,
        } => {
            let space = GridFunctionSpace::uniform(k, lo, hi)?;
            let params = PrivacyParams::new(epsilon, delta)?;
            let b = functional_laplace_scale(&space, &params)?;
            let out = CalibrateFunctionalOutput {
                mechanism: "functional-laplace",
                k,
                lo,
                hi,
                epsilon,
                delta,
                b,
            };
            emit(format, &out, format!("b = {b}"))?;
        }
    }
    Ok(0)
}

fn run_verify(format: Format, args: VerifyArgs) -> Result<u8> {
    let kernel = formats::load_kernel(&args.kernel)?;
    let params = PrivacyParams::new(args.epsilon, args.delta)?;
    let (report, mode, n, query_name) = match args.mode {
        VerifyMode::Exhaustive => {
            let report = check_dp_1d_exhaustive(&kernel, &params, args.tolerance)?;
            (report, "exhaustive", None, None)
        }
        VerifyMode::Product => {
            let n = args.n.context("product mode needs --n")?;
            let mech = ProductMechanism::new(kernel, n)?;
            let report = check_dp_product_bruteforce(&mech, &params, args.tolerance)?;
            (report, "product", Some(n), None)
        }
        VerifyMode::Query => {
            let n = args.n.context("query mode needs --n")?;
            let query_path = args.query.as_ref().context("query mode needs --query")?;
            let query = formats::load_query(query_path, kernel.output_space())?;
            let mech = ProductMechanism::new(kernel, n)?;
            let report = check_query_dp(&mech, &query, &params, args.tolerance)?;
            (report, "query", Some(n), Some(query.name().to_string()))
        }
    };
    let code = u8::from(!report.passed);
    let text = render_verification(&report);
    let out = VerifyOutput {
        mode: mode.to_string(),
        epsilon: args.epsilon,
        delta: args.delta,
        tolerance: args.tolerance,
        n,
        query: query_name,
        report,
    };
    emit(format, &out, text)?;
    Ok(code)
}

fn render_verification(report: &VerificationReport) -> String {
    let mut text = format!(
        "{}  max_violation = {}  ({} pairs, {} events)",
        if report.passed { "PASS" } else { "FAIL" },
        report.max_violation,
        report.pairs_checked,
        report.events_checked,
    );
    if let Some(w) = &report.witness {
        text.push_str(&format!(
            "\nwitness: d = ({}), d' = ({}), A = {{{}}}, lhs = {} > rhs = {}",
            w.d.join(","),
            w.d_prime.join(","),
            w.event_labels.join(", "),
            w.lhs,
            w.rhs,
        ));
    }
    text
}

fn run_slack(format: Format, args: SlackArgs) -> Result<u8> {
    let kernel = formats::load_kernel(&args.kernel)?;
    if let Some(target) = args.delta {
        // Validate the target like any other delta.
        PrivacyParams::new(args.epsilon, target)?;
    }
    let slack = delta_slack_closed_form(&kernel, args.epsilon)?;
    let within = args.delta.map(|target| slack <= target + args.tolerance);
    let out = SlackOutput {
        epsilon: args.epsilon,
        delta_slack: slack,
        target_delta: args.delta,
        within_target: within,
    };
    let text = match within {
        Some(true) => format!("delta_slack = {slack}  (within target)"),
        Some(false) => format!("delta_slack = {slack}  (EXCEEDS target)"),
        None => format!("delta_slack = {slack}"),
    };
    emit(format, &out, text)?;
    Ok(u8::from(within == Some(false)))
}

fn run_error(format: Format, args: ErrorArgs) -> Result<u8> {
    let kernel = formats::load_kernel(&args.kernel)?;
    let space = formats::load_space(&args.space)?;
    let (epsilon, delta, inferred) = match (args.epsilon, args.delta) {
        (Some(e), Some(d)) => (e, d, false),
        (Some(e), None) => (e, 0.0, false),
        (None, _) => {
            let e = pure_dp_epsilon(&kernel);
            if !e.is_finite() {
                bail!(
                    "kernel admits no finite pure-DP epsilon (some output is unreachable \
                     from one input); pass --epsilon and --delta explicitly"
                );
            }
            (e, 0.0, true)
        }
    };
    let params = PrivacyParams::new(epsilon, delta)?;
    let report = expected_error(&kernel, &space, &params)?;
    let text = format!(
        "max_error = {}  bound_general = {}  bound_finite = {}  tight = {}",
        report.max_error, report.bound_general, report.bound_finite, report.tight,
    );
    emit(
        format,
        &ErrorOutput {
            epsilon_inferred: inferred,
            report,
        },
        text,
    )?;
    Ok(0)
}

fn run_sanitize(format: Format, args: SanitizeArgs) -> Result<u8> {
    let seed = args.seed.unwrap_or_else(generated_seed);
    match (&args.kernel, &args.functional_db) {
        (Some(kernel_path), None) => {
            let db_path = args.db.as_ref().context("finite sanitize needs --db")?;
            let kernel = formats::load_kernel(kernel_path)?;
            let db = formats::load_database(db_path, kernel.input_space())?;
            let mech = ProductMechanism::new(kernel, db.len())?;
            let released = mech.sample(&db, seed)?;
            let csv = formats::render_database(&released, mech.base().output_space())?;
            if let Some(out_path) = &args.out {
                std::fs::write(out_path, &csv)
                    .with_context(|| format!("cannot write {}", out_path.display()))?;
            }
            let rows = released.label_vec(mech.base().output_space())?;
            emit(
                format,
                &SanitizeOutput { seed, rows },
                format!("seed = {seed}\n{csv}"),
            )?;
        }
        (None, Some(functional_path)) => {
            let data = formats::load_functional(functional_path)?;
            let lo = args.lo.context("functional sanitize needs --lo")?;
            let hi = args.hi.context("functional sanitize needs --hi")?;
            let space = GridFunctionSpace::new(normalize_grid(&data.grid), lo, hi)?;
            let b = match args.scale {
                Some(b) => b,
                None => {
                    let epsilon = args.epsilon.context("pass --scale or --epsilon/--delta")?;
                    let delta = args.delta.context("pass --scale or --epsilon/--delta")?;
                    functional_laplace_scale(&space, &PrivacyParams::new(epsilon, delta)?)?
                }
            };
            let mut rows = Vec::with_capacity(data.records.len());
            for (r, record) in data.records.iter().enumerate() {
                let f = space.ingest(record.clone())?;
                let record_seed = stream(seed, r as u64).next_u64();
                rows.push(sanitize_function(&f, b, record_seed)?);
            }
            let csv = formats::render_functional(&data.grid, &rows);
            if let Some(out_path) = &args.out {
                std::fs::write(out_path, &csv)
                    .with_context(|| format!("cannot write {}", out_path.display()))?;
            }
            let out = FunctionalSanitizeOutput {
                seed,
                b,
                grid: data.grid,
                rows,
            };
            emit(format, &out, format!("seed = {seed}  b = {b}\n{csv}"))?;
        }
        _ => bail!("pass either --kernel with --db, or --functional-db"),
    }
    Ok(0)
}

/// Affinely maps grid times into [0,1] when they fall outside it; grids
/// already inside the unit interval pass through unchanged.
fn normalize_grid(grid: &[f64]) -> Vec<f64> {
    let inside = grid.iter().all(|&t| (0.0..=1.0).contains(&t));
    if inside || grid.is_empty() {
        return grid.to_vec();
    }
    let (min, max) = (grid[0], grid[grid.len() - 1]);
    if max == min {
        return vec![0.0];
    }
    grid.iter().map(|&t| (t - min) / (max - min)).collect()
}

fn run_query(format: Format, args: QueryArgs) -> Result<u8> {
    let kernel = formats::load_kernel(&args.kernel)?;
    let db = formats::load_database(&args.db, kernel.input_space())?;
    let query = formats::load_query(&args.query, kernel.output_space())?;
    let mech = ProductMechanism::new(kernel, db.len())?;
    match args.samples {
        None => {
            let distribution = mech.pushforward(&db, &query)?;
            let text = distribution
                .entries
                .iter()
                .map(|(r, p)| format!("{r}: {p}"))
                .collect::<Vec<_>>()
                .join("\n");
            let out = QueryExactOutput {
                query: query.name().to_string(),
                mode: "exact",
                entries: distribution.entries,
            };
            emit(format, &out, text)?;
        }
        Some(samples) => {
            let seed = args.seed.unwrap_or_else(generated_seed);
            let estimate = mech.pushforward_monte_carlo(&db, &query, samples, seed)?;
            let text = estimate
                .entries
                .iter()
                .map(|(r, p, se)| format!("{r}: {p} (se {se})"))
                .collect::<Vec<_>>()
                .join("\n");
            let out = QueryMonteCarloOutput {
                query: query.name().to_string(),
                mode: "monte-carlo",
                samples,
                seed,
                entries: estimate.entries,
            };
            emit(format, &out, text)?;
        }
    }
    Ok(0)
}

fn run_certify_functional(format: Format, args: CertifyFunctionalArgs) -> Result<u8> {
    let space = GridFunctionSpace::uniform(args.k, args.lo, args.hi)?;
    let params = PrivacyParams::new(args.epsilon, args.delta)?;
    let b = match args.scale {
        Some(b) => b,
        None => functional_laplace_scale(&space, &params)?,
    };
    let indices = match &args.indices {
        Some(raw) => parse_indices(raw)?,
        None => (1..=args.k).collect(),
    };
    let cert: ProjectionCertificate = certify_projection_dp(&space, b, &params, &indices)?;
    let text = format!(
        "{}  worst_case_ratio = {}  threshold = {}",
        if cert.certified {
            "CERTIFIED"
        } else {
            "NOT CERTIFIED"
        },
        cert.worst_case_ratio,
        cert.threshold,
    );
    emit(format, &cert, text)?;
    Ok(0)
}

fn parse_indices(raw: &str) -> Result<Vec<usize>> {
    raw.split(',')
        .map(|part| {
            part.trim()
                .parse::<usize>()
                .with_context(|| format!("invalid projection index {part:?}"))
        })
        .collect()
}

fn run_decompose(format: Format, args: DecomposeArgs) -> Result<u8> {
    let pairs = formats::load_rectangle_pairs(&args.pairs)?;
    let decomposition: RectangleDecomposition<String> = decompose_rectangles(&pairs)?;
    let text = decomposition
        .parts
        .iter()
        .map(|part| {
            let a: Vec<&str> = part.a.iter().map(String::as_str).collect();
            let b: Vec<&str> = part.b.iter().map(String::as_str).collect();
            format!("A = {{{}}} x B = {{{}}}", a.join(", "), b.join(", "))
        })
        .collect::<Vec<_>>()
        .join("\n");
    emit(format, &decomposition, text)?;
    Ok(0)
}
