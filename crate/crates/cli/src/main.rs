use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use qperp_core::perpetuity::levy_exponent;
use qperp_core::qcalc::{q_exponential, q_gamma, qpochhammer_finite, qpochhammer_inf, PochhammerConvention};
use qperp_core::samplers::{format_number, QGammaMethod};
use qperp_core::scaling::{dufresne_limit_study, limit_rows_to_csv, psi_q};
use qperp_core::verify::{run_suite, Suite, VerifyOptions};
use qperp_core::{
    Error, MellinForm, PerpetuityLaw, QGammaLaw, QParams, RngState, SampleBatch, SamplerConfig, SamplerId,
    SeriesTolerance,
};

const EXIT_VERIFY_FAILED: u8 = 1;
const EXIT_USAGE: u8 = 2;

/// Laws, samplers and checks for the perpetuity of a +/-1 compound Poisson process.
///
/// Exit codes: 0 on success, 1 when a verification suite fails, 2 on usage,
/// domain or I/O errors. Set QPERP_THREADS to cap the worker threads used
/// for batch sampling; output does not depend on it.
#[derive(Parser, Debug)]
#[command(name = "qperp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate one special function and print it.
    Eval(EvalArgs),
    /// Draw a batch from one sampler as CSV or JSON.
    Sample(SampleArgs),
    /// Run a verification suite and write a JSON report.
    Verify(VerifyArgs),
    /// KS distance of (1-q)^2 I to the inverse gamma law along a q grid.
    Limit(LimitArgs),
}

#[derive(Copy, Clone, Debug, ValueEnum)]
#[value(rename_all = "snake_case")]
enum Function {
    /// (a;q)_n, or (a;q)_inf without --n. Needs --a, --q.
    Qpoch,
    /// q-gamma function at --x. Needs --q.
    QgammaFn,
    /// q-exponential E_q(x) = 1/((1-q)x;q)_inf. Needs --q, --x.
    Qexp,
    /// Levy exponent psi(s). Needs --q, --mu, --s.
    Psi,
    /// Rescaled exponent psi_q(s). Needs --q, --mu, --s.
    PsiQ,
    /// Mellin transform E[I^s]. Needs --q, --mu, --s.
    Mellin,
    /// Density of I at --x. Needs --q, --mu.
    Density,
    /// P(I <= x). Needs --q, --mu, --x.
    Cdf,
    /// q-gamma pmf at index --n. Needs --a, --q.
    Pmf,
}

#[derive(Args, Debug)]
struct EvalArgs {
    function: Function,
    /// Base of the q-deformation, 0 < q < 1.
    #[arg(long)]
    q: Option<f64>,
    /// Drift parameter; the down-jump rate is z = q^mu. `inf` gives z = 0.
    #[arg(long)]
    mu: Option<f64>,
    /// Real part of the transform argument.
    #[arg(long, allow_hyphen_values = true)]
    s: Option<f64>,
    /// Imaginary part of the transform argument; complex results print as `re,im`.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    s_im: f64,
    /// Point of evaluation.
    #[arg(long, allow_hyphen_values = true)]
    x: Option<f64>,
    /// Pochhammer base point or q-gamma parameter.
    #[arg(long, allow_hyphen_values = true)]
    a: Option<f64>,
    /// Finite Pochhammer length or pmf index.
    #[arg(long)]
    n: Option<u64>,
    /// Absolute tolerance for series truncation.
    #[arg(long, default_value_t = SeriesTolerance::DEFAULT_EPS)]
    tol: f64,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum Method {
    Invcdf,
    Geomsum,
}

#[derive(Args, Debug)]
struct SampleArgs {
    /// Sampler: path, series, factorization or qgamma.
    sampler: SamplerId,
    /// Base of the q-deformation, 0 < q < 1.
    #[arg(long)]
    q: f64,
    /// Drift parameter (all samplers except qgamma).
    #[arg(long)]
    mu: Option<f64>,
    /// q-gamma parameter in [0, 1) (qgamma only).
    #[arg(long)]
    a: Option<f64>,
    /// Number of draws.
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Truncation tolerance: tail probability for path and series, series
    /// remainder for factorization. Ignored by qgamma.
    #[arg(long)]
    tol: Option<f64>,
    /// q-gamma sampling method.
    #[arg(long, value_enum, default_value_t = Method::Invcdf)]
    method: Method,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Suite: analytic, distributional or all.
    suite: Suite,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Report file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Timestamp recorded in the report. Fixed by default so reports are reproducible.
    #[arg(long, default_value = "1970-01-01T00:00:00Z")]
    timestamp: String,
    #[arg(long, hide = true)]
    negative_control: bool,
}

#[derive(Args, Debug)]
struct LimitArgs {
    #[arg(long)]
    mu: f64,
    /// Comma-separated, strictly increasing q values.
    #[arg(long, default_value = "0.9,0.99,0.999")]
    q_grid: String,
    /// Draws per grid point.
    #[arg(long, default_value_t = 100_000)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Verification,
    Usage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

type CmdResult = Result<(), Failure>;

fn usage<T>(msg: impl Into<String>) -> Result<T, Failure> {
    Err(Failure::Usage(msg.into()))
}

fn required<T>(value: Option<T>, flag: &str, function: &str) -> Result<T, Failure> {
    match value {
        Some(v) => Ok(v),
        None => usage(format!("{function} requires --{flag}")),
    }
}

fn emit(out: &Option<PathBuf>, text: &str) -> CmdResult {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn print_complex(v: Complex64) {
    if v.im == 0.0 {
        println!("{}", format_number(v.re));
    } else {
        println!("{},{}", format_number(v.re), format_number(v.im));
    }
}

fn cmd_eval(args: EvalArgs) -> CmdResult {
    let tol = SeriesTolerance::new(args.tol, SeriesTolerance::DEFAULT_MAX_TERMS)?;
    let name = format!("{:?}", args.function).to_lowercase();
    let q = || required(args.q, "q", &name);
    let params = || -> Result<QParams, Failure> { Ok(QParams::new(q()?, required(args.mu, "mu", &name)?)?) };
    let s = || -> Result<Complex64, Failure> { Ok(Complex64::new(required(args.s, "s", &name)?, args.s_im)) };
    match args.function {
        Function::Qpoch => {
            let a = Complex64::new(required(args.a, "a", &name)?, 0.0);
            let q = q()?;
            if !(q > 0.0 && q < 1.0) {
                return usage(format!("q must lie in (0, 1), got {q}"));
            }
            match args.n {
                Some(n) => print_complex(qpochhammer_finite(a, q, n as usize)),
                None => print_complex(qpochhammer_inf(a, q, &tol)?.0),
            }
        }
        Function::QgammaFn => println!("{}", format_number(q_gamma(required(args.x, "x", &name)?, q()?, &tol)?)),
        Function::Qexp => {
            let x = Complex64::new(required(args.x, "x", &name)?, 0.0);
            print_complex(q_exponential(x, q()?, &tol)?.0)
        }
        Function::Psi => print_complex(levy_exponent(&params()?, s()?)),
        Function::PsiQ => print_complex(psi_q(&params()?, s()?)),
        Function::Mellin => {
            let law = PerpetuityLaw::new(params()?, tol)?;
            print_complex(law.mellin(s()?, MellinForm::Pochhammer)?)
        }
        Function::Density => {
            let law = PerpetuityLaw::new(params()?, tol)?;
            println!("{}", format_number(law.density(required(args.x, "x", &name)?)?.0))
        }
        Function::Cdf => {
            let law = PerpetuityLaw::new(params()?, tol)?;
            println!("{}", format_number(law.cdf(required(args.x, "x", &name)?)?.0))
        }
        Function::Pmf => {
            let law = QGammaLaw::new(required(args.a, "a", &name)?, q()?)?;
            println!("{}", format_number(law.pmf(required(args.n, "n", &name)?)))
        }
    }
    Ok(())
}

fn cmd_sample(args: SampleArgs) -> CmdResult {
    let params = match args.sampler {
        SamplerId::QGamma => {
            if args.mu.is_some() {
                return usage("qgamma takes --a, not --mu");
            }
            QParams::from_z(args.q, required(args.a, "a", "qgamma")?)?
        }
        other => {
            if args.a.is_some() {
                return usage(format!("{other} takes --mu, not --a"));
            }
            QParams::new(args.q, required(args.mu, "mu", other.as_str())?)?
        }
    };
    let mut config = SamplerConfig {
        qgamma_method: match args.method {
            Method::Invcdf => QGammaMethod::InverseCdf,
            Method::Geomsum => QGammaMethod::GeometricSum,
        },
        ..SamplerConfig::default()
    };
    if let Some(tol) = args.tol {
        if !(tol > 0.0 && tol < 1.0) {
            return usage(format!("--tol must lie in (0, 1), got {tol}"));
        }
        match args.sampler {
            SamplerId::Path | SamplerId::Series => config.eps_tail = tol,
            SamplerId::Factorization => config.eps_series = tol,
            SamplerId::QGamma => {}
        }
    }
    let batch = SampleBatch::generate(args.sampler, params, args.seed, args.n, &config)?;
    let text = match args.format {
        Format::Csv => batch.to_csv(),
        Format::Json => batch.to_json()?,
    };
    emit(&args.out, &text)
}

fn cmd_verify(args: VerifyArgs) -> CmdResult {
    let opts = VerifyOptions {
        seed: args.seed,
        timestamp: args.timestamp,
        convention: if args.negative_control { PochhammerConvention::Inclusive } else { PochhammerConvention::Standard },
    };
    let report = run_suite(args.suite, &opts)?;
    emit(&args.out, &report.to_json()?)?;
    let failed: Vec<_> = report.failures().collect();
    eprintln!("{}: {}/{} cases passed", report.suite_name, report.cases.len() - failed.len(), report.cases.len());
    for case in &failed {
        eprintln!("FAIL {}: observed {}, tolerance {}", case.name, format_number(case.observed), format_number(case.tolerance));
    }
    if report.overall_pass {
        Ok(())
    } else {
        Err(Failure::Verification)
    }
}

fn cmd_limit(args: LimitArgs) -> CmdResult {
    let grid = args
        .q_grid
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|e| Failure::Usage(format!("bad q value '{t}': {e}"))))
        .collect::<Result<Vec<_>, _>>()?;
    let rows = dufresne_limit_study(args.mu, &grid, args.n, &mut RngState::new(args.seed))?;
    emit(&args.out, &limit_rows_to_csv(&rows))
}

fn configure_threads() -> CmdResult {
    let Ok(raw) = std::env::var("QPERP_THREADS") else {
        return Ok(());
    };
    let threads = match raw.trim().parse::<usize>() {
        Ok(t) if t > 0 => t,
        _ => return usage(format!("QPERP_THREADS must be a positive integer, got '{raw}'")),
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::Usage(format!("thread pool: {e}")))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match cli.command {
        Command::Eval(a) => cmd_eval(a),
        Command::Sample(a) => cmd_sample(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Limit(a) => cmd_limit(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification) => ExitCode::from(EXIT_VERIFY_FAILED),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
