//! `mvt`: exact verification of moment varieties, homotopy-based degree
//! counts, and method-of-moments estimation for mixtures.

mod commands;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mvt_core::Error;
use serde_json::{json, Value};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

pub const SCHEMA: u32 = 1;

const EXACT_NOTE: &str = "Tolerances: none. All arithmetic is exact over the rationals.";

const TRACKER_NOTE: &str = "Tolerance defaults: --tol-corrector 1e-9 (relative Newton update), \
--tol-dedup 1e-8 (endpoint merge distance); fixed: residual cap 1e-8, condition cap 1e10, \
divergence norm 1e8, step range [1e-13, 0.1].";

const ESTIMATE_NOTE: &str = "Tolerance defaults: --tol-corrector 1e-9, --tol-dedup 1e-8, \
--reality-tol 1e-6 (|Im| < tol (1 + |Re|)), --positivity-margin 1e-9; \
Levenberg-Marquardt runs at most 200 iterations.";

const SAMPLE_NOTE: &str = "Tolerances: weights must sum to 1 within 1e-12.";

#[derive(Parser, Debug)]
#[command(name = "mvt", version, about = "Moment varieties: exact checks, degree counts and mixture estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,

    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Omit the timestamp from JSON reports, for byte-identical reruns.
    #[arg(long, global = true)]
    no_timestamp: bool,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Moment (or cumulant) polynomials m_0..m_d in the family's parameters.
    #[command(after_help = EXACT_NOTE)]
    Moments(FamilyD),
    /// The determinantal matrix whose maximal minors cut out the variety.
    #[command(after_help = EXACT_NOTE)]
    Matrix(FamilyD),
    /// Maximal minors of the matrix, as canonical polynomial strings.
    #[command(after_help = EXACT_NOTE)]
    Generators(FamilyD),
    /// Kernel and vanishing checks; exit 1 if any fails.
    #[command(after_help = EXACT_NOTE)]
    Verify(Verify),
    /// Closed-form Hilbert series and degree, with the initial-ideal check
    /// for ig and gamma.
    #[command(after_help = EXACT_NOTE)]
    Hilbert(Sweep),
    /// Jacobian rank of the generators at points of each stratum.
    #[command(after_help = EXACT_NOTE)]
    Singular(Singular),
    /// Secant nondefectiveness sweep; exit 1 on any defective cell.
    #[command(after_help = EXACT_NOTE)]
    Defect(Defect),
    /// Euclidean distance degree of the d = 3 surface by total-degree homotopy.
    #[command(after_help = TRACKER_NOTE)]
    Eddeg(Eddeg),
    /// Identifiability degree of k-mixtures by monodromy.
    #[command(after_help = TRACKER_NOTE)]
    Iddeg(Iddeg),
    /// Draw from a mixture; one value per line.
    #[command(after_help = SAMPLE_NOTE)]
    Sample(Sample),
    /// Method-of-moments estimates from data.
    #[command(after_help = ESTIMATE_NOTE)]
    Estimate(Estimate),
}

#[derive(Args, Debug)]
struct FamilyD {
    /// ig, gamma, gaussian, exp, chi2, cum-ig or cum-gamma.
    #[arg(long)]
    family: String,
    #[arg(long)]
    d: usize,
}

#[derive(Args, Debug)]
struct Verify {
    /// All families when omitted.
    #[arg(long)]
    family: Option<String>,
    /// A single order; otherwise every order from the family minimum to --dmax.
    #[arg(long)]
    d: Option<usize>,
    #[arg(long, default_value_t = 10)]
    dmax: usize,
}

#[derive(Args, Debug)]
struct Sweep {
    #[arg(long)]
    family: String,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long, default_value_t = 12)]
    dmax: usize,
}

#[derive(Args, Debug)]
struct Singular {
    #[arg(long)]
    family: String,
    #[arg(long, default_value_t = 5)]
    d: usize,
    /// smooth-random, l1-line, l2-line, apex-point-0 or apex-point-d; all
    /// when omitted.
    #[arg(long)]
    stratum: Option<String>,
    /// Seeded points per stratum.
    #[arg(long, default_value_t = 5)]
    points: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct Defect {
    #[arg(long)]
    family: String,
    #[arg(long, default_value_t = 20)]
    dmax: usize,
    #[arg(long, default_value_t = 6)]
    kmax: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
pub struct TolArgs {
    #[arg(long, default_value_t = 1e-9)]
    tol_corrector: f64,
    #[arg(long, default_value_t = 1e-8)]
    tol_dedup: f64,
}

#[derive(Args, Debug)]
struct Eddeg {
    #[arg(long)]
    family: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    tol: TolArgs,
}

#[derive(Args, Debug)]
struct Iddeg {
    #[arg(long)]
    family: String,
    #[arg(long, default_value_t = 2)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Stop after this many consecutive loops without a new solution.
    #[arg(long, default_value_t = 10)]
    stall_loops: usize,
    #[arg(long, default_value_t = 200)]
    max_loops: usize,
    #[command(flatten)]
    tol: TolArgs,
}

#[derive(Args, Debug)]
struct Sample {
    #[arg(long)]
    family: String,
    /// Natural parameters per component, components separated by `;`,
    /// e.g. `1,5;2,20` for ig (mu, lambda).
    #[arg(long)]
    params: String,
    /// Mixture weights, e.g. `0.4,0.6`; equal weights when omitted.
    #[arg(long)]
    weights: Option<String>,
    #[arg(long, default_value_t = 1_000_000)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct Estimate {
    #[arg(long)]
    family: String,
    #[arg(long, default_value_t = 1)]
    k: usize,
    /// Moments used; defaults to one more than the square system needs.
    #[arg(long)]
    d: Option<usize>,
    /// One observation per line; standard input when omitted or `-`.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Start-set cache directory.
    #[arg(long, env = "MVT_CACHE_DIR")]
    cache_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Weight moment residuals by the inverse sample covariance of the powers.
    #[arg(long)]
    efficient_weights: bool,
    /// Fit by least squares when no real admissible solution exists.
    #[arg(long)]
    least_squares_fallback: bool,
    #[arg(long, default_value_t = 1e-6)]
    reality_tol: f64,
    #[arg(long, default_value_t = 1e-9)]
    positivity_margin: f64,
    #[command(flatten)]
    tol: TolArgs,
}

/// A finished command: its JSON body, text rendering and verdict.
pub struct Outcome {
    pub json: Value,
    pub text: String,
    pub ok: bool,
}

impl Outcome {
    pub fn ok(json: Value, text: String) -> Self {
        Self { json, text, ok: true }
    }
}

fn run(cli: &Cli) -> Result<Outcome, Error> {
    match &cli.command {
        Command::Moments(a) => commands::moments(&a.family, a.d),
        Command::Matrix(a) => commands::matrix(&a.family, a.d),
        Command::Generators(a) => commands::generators(&a.family, a.d),
        Command::Verify(a) => commands::verify(a.family.as_deref(), a.d, a.dmax),
        Command::Hilbert(a) => commands::hilbert(&a.family, a.d, a.dmax),
        Command::Singular(a) => commands::singular(&a.family, a.d, a.stratum.as_deref(), a.points, a.seed),
        Command::Defect(a) => commands::defect(&a.family, a.dmax, a.kmax, a.seed),
        Command::Eddeg(a) => commands::eddeg(&a.family, a.seed, &a.tol),
        Command::Iddeg(a) => commands::iddeg(&a.family, a.k, a.seed, a.stall_loops, a.max_loops, &a.tol),
        Command::Sample(a) => commands::sample(&a.family, &a.params, a.weights.as_deref(), a.n, a.seed),
        Command::Estimate(a) => commands::estimate(&commands::EstimateArgs {
            family: &a.family,
            k: a.k,
            d: a.d,
            input: a.input.as_deref(),
            cache_dir: a.cache_dir.clone(),
            seed: a.seed,
            efficient_weights: a.efficient_weights,
            least_squares_fallback: a.least_squares_fallback,
            reality_tol: a.reality_tol,
            positivity_margin: a.positivity_margin,
            tol: &a.tol,
        }),
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Moments(_) => "moments",
        Command::Matrix(_) => "matrix",
        Command::Generators(_) => "generators",
        Command::Verify(_) => "verify",
        Command::Hilbert(_) => "hilbert",
        Command::Singular(_) => "singular",
        Command::Defect(_) => "defect",
        Command::Eddeg(_) => "eddeg",
        Command::Iddeg(_) => "iddeg",
        Command::Sample(_) => "sample",
        Command::Estimate(_) => "estimate",
    }
}

fn render(cli: &Cli, outcome: &Outcome) -> String {
    match cli.format {
        Format::Text => outcome.text.clone(),
        Format::Json => {
            let mut body = match &outcome.json {
                Value::Object(map) => map.clone(),
                other => {
                    let mut map = serde_json::Map::new();
                    map.insert("result".into(), other.clone());
                    map
                }
            };
            body.insert("schema".into(), json!(SCHEMA));
            body.insert("command".into(), json!(command_name(&cli.command)));
            body.insert("ok".into(), json!(outcome.ok));
            if !cli.no_timestamp {
                let now = std::time::SystemTime::now()
                    .duration_since(std::time::UNIX_EPOCH)
                    .map(|d| d.as_secs())
                    .unwrap_or(0);
                body.insert("timestamp".into(), json!(now));
            }
            let mut s = serde_json::to_string_pretty(&Value::Object(body)).expect("values are serializable");
            s.push('\n');
            s
        }
    }
}

fn write_out(cli: &Cli, text: &str) -> std::io::Result<()> {
    match &cli.out {
        Some(path) => std::fs::write(path, text),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot start {n} worker threads: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(outcome) => {
            if let Err(e) = write_out(&cli, &render(&cli, &outcome)) {
                eprintln!("error: cannot write report: {e}");
                return ExitCode::from(2);
            }
            if outcome.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Verification(_) | Error::Numerical(_) => ExitCode::from(1),
                _ => ExitCode::from(2),
            }
        }
    }
}
