//! Command-line front end: compute operations on series documents, run the
//! verification suites, and calibrate the convention tuple.
//!
//! Exit codes: 0 success, 1 internal failure, 2 bad input or configuration,
//! 3 a check suite or calibration did not pass.

use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{Map, Value};

use hida_star_core::io::{self, ModelTag, SeriesDocument};
use hida_star_core::{
    calibrate, continuity_probe, norms, star, star_a, suite, t_prime, wick_exponential,
    CoreError, DiagonalOperator, FockSeries, NormParams, ProbeOp, SampleSpec, Scalar,
    ScalarMode, StarConvention, SuiteReport, SymplecticModel, Tamper,
};

#[derive(Parser)]
#[command(
    name = "hida-star",
    version,
    about = "Sparse algebra on weighted Fock series: products, brackets, deformations, diagnostics",
    after_help = "Exit codes: 0 success, 1 internal failure, 2 bad input, 3 failed checks.\n\
                  HIDA_STAR_THREADS caps the worker thread count."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate one operation on input documents and write the result.
    Compute {
        #[arg(value_enum)]
        op: ComputeOp,
        #[command(flatten)]
        opts: CommonOpts,
    },
    /// Run a named verification suite and emit its report.
    Check {
        #[arg(value_enum)]
        suite: SuiteArg,
        #[command(flatten)]
        opts: CommonOpts,
    },
    /// Determine the convention tuple from the gauge and exchange batteries.
    Calibrate {
        #[command(flatten)]
        opts: CommonOpts,
        /// Deliberately corrupt one exchange weight to demonstrate detection.
        #[arg(long)]
        tamper: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ComputeOp {
    Wick,
    Bracket,
    Star,
    StarA,
    Tprime,
    Wickexp,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Axioms,
    Oracle,
    Gauge,
    Exchange,
    Norms,
    Probe,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Exact,
    Float,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Args)]
struct CommonOpts {
    /// Input series document (repeat for binary operations).
    #[arg(long = "in", value_name = "PATH")]
    input: Vec<PathBuf>,

    /// Output path; stdout when omitted.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Model document (loop or cotangent).
    #[arg(long, value_name = "PATH")]
    model: Option<PathBuf>,

    /// Diagonal operator document for the perturbed product and transforms.
    #[arg(long, value_name = "PATH")]
    lambda: Option<PathBuf>,

    /// Deformation order L.
    #[arg(long)]
    order: Option<usize>,

    /// Degree cap D applied to inputs.
    #[arg(long)]
    degree: Option<u32>,

    /// Convention tuple: paper, bracket-normalized, or file:<path>.
    #[arg(long, value_name = "NAME")]
    convention: Option<String>,

    /// Coefficient arithmetic.
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,

    /// Seed for randomized suites and probes.
    #[arg(long)]
    seed: Option<u64>,

    /// Trial count for randomized suites and probes.
    #[arg(long)]
    trials: Option<usize>,

    /// Target-space norm exponent.
    #[arg(long)]
    r: Option<f64>,

    /// Target-space base constant.
    #[arg(long = "C")]
    big_c: Option<f64>,

    /// Frequency weight constant in Ck^2 + 1.
    #[arg(long = "C1")]
    c1: Option<f64>,

    /// Largest retained frequency for norm sums and probes.
    #[arg(long)]
    kmax: Option<u32>,

    /// Source-space norm exponent for continuity probes.
    #[arg(long = "source-r")]
    source_r: Option<f64>,

    /// Source-space base constant for continuity probes.
    #[arg(long = "source-C")]
    source_c: Option<f64>,

    /// Report format; csv is available for norm and probe tables.
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
}

const DEFAULT_SEED: u64 = 42;
const DEFAULT_ORDER: usize = 4;
const GAUGE_SUITE_ORDER: usize = 3;
const GAUGE_SUITE_DEGREE: u32 = 4;
const EXCHANGE_SUITE_DEGREE: u32 = 4;
const EXCHANGE_SUITE_ORDER: usize = 3;

enum Failure {
    Input(String),
    Internal(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 2,
            Failure::Internal(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Input(m) | Failure::Internal(m) => m,
        }
    }
}

impl From<CoreError> for Failure {
    fn from(e: CoreError) -> Self {
        Failure::Input(e.to_string())
    }
}

type CliResult<T> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_threads();
    let outcome = panic::catch_unwind(AssertUnwindSafe(|| dispatch(cli)));
    match outcome {
        Ok(Ok(code)) => ExitCode::from(code),
        Ok(Err(f)) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
        Err(_) => {
            eprintln!("error: internal failure");
            ExitCode::from(1)
        }
    }
}

fn init_threads() {
    if let Ok(v) = std::env::var("HIDA_STAR_THREADS") {
        if let Ok(n) = v.trim().parse::<usize>() {
            if n > 0 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

fn dispatch(cli: Cli) -> CliResult<u8> {
    match cli.command {
        Command::Compute { op, opts } => cmd_compute(op, &opts),
        Command::Check { suite, opts } => cmd_check(suite, &opts),
        Command::Calibrate { opts, tamper } => cmd_calibrate(&opts, tamper),
    }
}

fn read_file(path: &Path) -> CliResult<String> {
    fs::read_to_string(path)
        .map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))
}

fn write_output(opts: &CommonOpts, text: &str) -> CliResult<()> {
    match &opts.out {
        Some(path) => fs::write(path, text)
            .map_err(|e| Failure::Internal(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_series_docs(opts: &CommonOpts, arity: usize, op: &str) -> CliResult<Vec<SeriesDocument>> {
    if opts.input.len() != arity {
        return Err(Failure::Input(format!(
            "{op} expects {arity} --in document(s), got {}",
            opts.input.len()
        )));
    }
    let mut docs = Vec::with_capacity(arity);
    for path in &opts.input {
        let text = read_file(path)?;
        let doc = io::series_from_value(&io::parse_json(&text)?)?;
        docs.push(doc);
    }
    if let Some(first) = docs.first() {
        for d in &docs[1..] {
            if (d.tag, d.dimension) != (first.tag, first.dimension) {
                return Err(Failure::Input(
                    "input documents disagree on model or dimension".into(),
                ));
            }
        }
    }
    Ok(docs)
}

fn scalar_mode(opts: &CommonOpts) -> ScalarMode {
    match opts.mode {
        Some(ModeArg::Float) => ScalarMode::Float,
        _ => ScalarMode::Exact,
    }
}

/// Input payloads unified into one scalar mode. EXACT refuses float
/// documents; FLOAT converts exact ones.
enum Loaded {
    Exact(Vec<FockSeries<hida_star_core::ExactScalar>>),
    Float(Vec<FockSeries<hida_star_core::FloatScalar>>),
}

fn unify_mode(docs: Vec<SeriesDocument>, mode: ScalarMode) -> CliResult<Loaded> {
    match mode {
        ScalarMode::Exact => {
            let mut out = Vec::with_capacity(docs.len());
            for d in docs {
                out.push(d.payload.expect_exact()?);
            }
            Ok(Loaded::Exact(out))
        }
        ScalarMode::Float => {
            Ok(Loaded::Float(docs.iter().map(|d| d.payload.to_float()).collect()))
        }
    }
}

fn apply_cap<S: Scalar>(fs: Vec<FockSeries<S>>, degree: Option<u32>) -> Vec<FockSeries<S>> {
    match degree {
        Some(d) => fs.into_iter().map(|f| f.with_cap(Some(d))).collect(),
        None => fs,
    }
}

fn load_model(opts: &CommonOpts) -> CliResult<SymplecticModel> {
    match &opts.model {
        Some(path) => {
            let text = read_file(path)?;
            Ok(io::model_from_value(&io::parse_json(&text)?)?)
        }
        None => Ok(SymplecticModel::default_loop()),
    }
}

fn load_diagonal(opts: &CommonOpts) -> CliResult<DiagonalOperator> {
    if let Some(path) = &opts.lambda {
        let text = read_file(path)?;
        return Ok(io::diagonal_from_value(&io::parse_json(&text)?)?);
    }
    if let Some(path) = &opts.model {
        let text = read_file(path)?;
        let m = io::model_from_value(&io::parse_json(&text)?)?;
        if let SymplecticModel::Cotangent { a } = m {
            return Ok(a);
        }
        return Err(Failure::Input(
            "this operation needs a diagonal operator: pass --lambda or a cotangent --model".into(),
        ));
    }
    Ok(DiagonalOperator::example())
}

fn load_convention(opts: &CommonOpts) -> CliResult<StarConvention> {
    match opts.convention.as_deref() {
        None => Ok(StarConvention::calibrated()),
        Some("paper") => Ok(StarConvention::paper()),
        Some("bracket-normalized") => Ok(StarConvention::bracket_normalized()),
        Some(s) => match s.strip_prefix("file:") {
            Some(path) => {
                let text = read_file(Path::new(path))?;
                Ok(io::convention_from_value(&io::parse_json(&text)?)?)
            }
            None => Err(Failure::Input(format!(
                "unknown convention {s:?}: use paper, bracket-normalized, or file:<path>"
            ))),
        },
    }
}

fn check_model_matches(doc_tag: ModelTag, doc_dim: u16, m: &SymplecticModel) -> CliResult<()> {
    let (tag, dim) = ModelTag::of(m);
    if (doc_tag, doc_dim) != (tag, dim) {
        return Err(Failure::Input(format!(
            "input documents are {}-dimension-{} but the model is {}-dimension-{}",
            doc_tag.as_str(),
            doc_dim,
            tag.as_str(),
            dim
        )));
    }
    Ok(())
}

fn render_series_output<S: Scalar>(
    f: &FockSeries<S>,
    tag: ModelTag,
    dim: u16,
    opts: &CommonOpts,
) -> CliResult<()> {
    reject_csv(opts)?;
    write_output(opts, &io::render_json(&io::series_to_value(f, tag, dim)))
}

fn reject_csv(opts: &CommonOpts) -> CliResult<()> {
    if matches!(opts.format, Some(FormatArg::Csv)) {
        return Err(Failure::Input(
            "csv output is available for norm and probe tables only".into(),
        ));
    }
    Ok(())
}

fn cmd_compute(op: ComputeOp, opts: &CommonOpts) -> CliResult<u8> {
    let mode = scalar_mode(opts);
    match op {
        ComputeOp::Wick => {
            let docs = load_series_docs(opts, 2, "compute wick")?;
            let (tag, dim) = (docs[0].tag, docs[0].dimension);
            match unify_mode(docs, mode)? {
                Loaded::Exact(fs) => {
                    let fs = apply_cap(fs, opts.degree);
                    render_series_output(&fs[0].wick_product(&fs[1]), tag, dim, opts)?;
                }
                Loaded::Float(fs) => {
                    let fs = apply_cap(fs, opts.degree);
                    render_series_output(&fs[0].wick_product(&fs[1]), tag, dim, opts)?;
                }
            }
            Ok(0)
        }
        ComputeOp::Bracket => {
            let docs = load_series_docs(opts, 2, "compute bracket")?;
            let (tag, dim) = (docs[0].tag, docs[0].dimension);
            let m = load_model(opts)?;
            check_model_matches(tag, dim, &m)?;
            match unify_mode(docs, mode)? {
                Loaded::Exact(fs) => {
                    let fs = apply_cap(fs, opts.degree);
                    let out = hida_star_core::poisson_bracket(&fs[0], &fs[1], &m);
                    render_series_output(&out, tag, dim, opts)?;
                }
                Loaded::Float(fs) => {
                    let fs = apply_cap(fs, opts.degree);
                    let out = hida_star_core::poisson_bracket(&fs[0], &fs[1], &m);
                    render_series_output(&out, tag, dim, opts)?;
                }
            }
            Ok(0)
        }
        ComputeOp::Star => {
            let docs = load_series_docs(opts, 2, "compute star")?;
            let (tag, dim) = (docs[0].tag, docs[0].dimension);
            let m = load_model(opts)?;
            check_model_matches(tag, dim, &m)?;
            let conv = load_convention(opts)?;
            let order = opts.order.unwrap_or(DEFAULT_ORDER);
            reject_csv(opts)?;
            match unify_mode(docs, mode)? {
                Loaded::Exact(fs) => {
                    let fs = apply_cap(fs, opts.degree);
                    let s = star(&fs[0], &fs[1], order, &m, &conv)?;
                    write_output(
                        opts,
                        &io::render_json(&io::deformation_to_value(&s, tag, dim, &conv)),
                    )?;
                }
                Loaded::Float(fs) => {
                    let fs = apply_cap(fs, opts.degree);
                    let s = star(&fs[0], &fs[1], order, &m, &conv)?;
                    write_output(
                        opts,
                        &io::render_json(&io::deformation_to_value(&s, tag, dim, &conv)),
                    )?;
                }
            }
            Ok(0)
        }
        ComputeOp::StarA => {
            let docs = load_series_docs(opts, 2, "compute star-a")?;
            let (tag, dim) = (docs[0].tag, docs[0].dimension);
            if tag != ModelTag::Cotangent {
                return Err(Failure::Input(
                    "compute star-a needs cotangent-model input documents".into(),
                ));
            }
            let a = load_diagonal(opts)?;
            let order = opts.order.unwrap_or(DEFAULT_ORDER);
            reject_csv(opts)?;
            let conv = StarConvention::calibrated();
            match unify_mode(docs, mode)? {
                Loaded::Exact(fs) => {
                    let fs = apply_cap(fs, opts.degree);
                    let s = star_a(&fs[0], &fs[1], order, &a)?;
                    write_output(
                        opts,
                        &io::render_json(&io::deformation_to_value(&s, tag, dim, &conv)),
                    )?;
                }
                Loaded::Float(fs) => {
                    let fs = apply_cap(fs, opts.degree);
                    let s = star_a(&fs[0], &fs[1], order, &a)?;
                    write_output(
                        opts,
                        &io::render_json(&io::deformation_to_value(&s, tag, dim, &conv)),
                    )?;
                }
            }
            Ok(0)
        }
        ComputeOp::Tprime => {
            let docs = load_series_docs(opts, 1, "compute tprime")?;
            let (tag, dim) = (docs[0].tag, docs[0].dimension);
            if tag != ModelTag::Cotangent {
                return Err(Failure::Input(
                    "compute tprime needs a cotangent-model input document".into(),
                ));
            }
            let a = load_diagonal(opts)?;
            let order = opts.order.unwrap_or(DEFAULT_ORDER);
            reject_csv(opts)?;
            let conv = StarConvention::calibrated();
            match unify_mode(docs, mode)? {
                Loaded::Exact(fs) => {
                    let fs = apply_cap(fs, opts.degree);
                    let s = t_prime(&fs[0], &a, order)?;
                    write_output(
                        opts,
                        &io::render_json(&io::deformation_to_value(&s, tag, dim, &conv)),
                    )?;
                }
                Loaded::Float(fs) => {
                    let fs = apply_cap(fs, opts.degree);
                    let s = t_prime(&fs[0], &a, order)?;
                    write_output(
                        opts,
                        &io::render_json(&io::deformation_to_value(&s, tag, dim, &conv)),
                    )?;
                }
            }
            Ok(0)
        }
        ComputeOp::Wickexp => {
            let docs = load_series_docs(opts, 1, "compute wickexp")?;
            let (tag, dim) = (docs[0].tag, docs[0].dimension);
            let degree = opts.degree.unwrap_or(GAUGE_SUITE_DEGREE);
            match unify_mode(docs, mode)? {
                Loaded::Exact(fs) => {
                    render_series_output(&wick_exponential(&fs[0], degree)?, tag, dim, opts)?;
                }
                Loaded::Float(fs) => {
                    render_series_output(&wick_exponential(&fs[0], degree)?, tag, dim, opts)?;
                }
            }
            Ok(0)
        }
    }
}

fn timestamp() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

fn wrap_report(command: &str, seed: Option<u64>, report: Value) -> Value {
    let mut header = Map::new();
    header.insert("command".into(), Value::String(command.into()));
    header.insert("tool".into(), Value::String("hida-star".into()));
    header.insert(
        "version".into(),
        Value::String(env!("CARGO_PKG_VERSION").into()),
    );
    if let Some(s) = seed {
        header.insert("seed".into(), Value::from(s));
    }
    header.insert("timestamp".into(), Value::from(timestamp()));
    let mut doc = Map::new();
    doc.insert("header".into(), Value::Object(header));
    doc.insert("report".into(), report);
    Value::Object(doc)
}

fn emit_suite_report(
    name: &str,
    report: &SuiteReport,
    opts: &CommonOpts,
) -> CliResult<u8> {
    reject_csv(opts)?;
    let wrapped = wrap_report(name, Some(report.seed), io::suite_to_value(report));
    write_output(opts, &io::render_json(&wrapped))?;
    Ok(if report.passed() { 0 } else { 3 })
}

fn cmd_check(which: SuiteArg, opts: &CommonOpts) -> CliResult<u8> {
    let seed = opts.seed.unwrap_or(DEFAULT_SEED);
    match which {
        SuiteArg::Axioms => {
            let trials = opts.trials.unwrap_or(100);
            let report = suite::axioms_suite(seed, trials, DEFAULT_ORDER)?;
            emit_suite_report("check axioms", &report, opts)
        }
        SuiteArg::Oracle => {
            let trials = opts.trials.unwrap_or(200);
            let report = suite::oracle_suite(seed, trials)?;
            emit_suite_report("check oracle", &report, opts)
        }
        SuiteArg::Gauge => {
            let a = load_diagonal(opts)?;
            let poly = opts.trials.unwrap_or(100);
            let exps = (poly / 5).max(1);
            let order = opts.order.unwrap_or(GAUGE_SUITE_ORDER);
            let report =
                suite::gauge_suite(seed, poly, exps, order, GAUGE_SUITE_DEGREE, &a)?;
            emit_suite_report("check gauge", &report, opts)
        }
        SuiteArg::Exchange => {
            let a = load_diagonal(opts)?;
            let trials = opts.trials.unwrap_or(20);
            let order = opts.order.unwrap_or(EXCHANGE_SUITE_ORDER);
            let report =
                suite::exchange_suite(seed, trials, EXCHANGE_SUITE_DEGREE, order, &a)?;
            emit_suite_report("check exchange", &report, opts)
        }
        SuiteArg::Norms => {
            if matches!(opts.format, Some(FormatArg::Csv)) {
                let p = NormParams::new(4.0, 0.5, 1.0)?;
                let kmax = opts.kmax.unwrap_or(50);
                let nuc = norms::nuclearity_sum(&p, kmax, 2, 8)?;
                let strong = NormParams::new(6.0, 1.0, 1.0)?;
                let weak = NormParams::new(2.0, 0.25, 1.0)?;
                let hs = norms::hs_embedding_norm(&strong, &weak, kmax, 2, 8)?;
                let mut text = io::summability_to_csv(&nuc);
                text.push_str(&io::summability_to_csv(&hs));
                write_output(opts, &text)?;
                return Ok(0);
            }
            let report = suite::norms_suite(seed)?;
            emit_suite_report("check norms", &report, opts)
        }
        SuiteArg::Probe => {
            let m = SymplecticModel::default_loop();
            let target = NormParams::new(
                opts.r.unwrap_or(2.0),
                opts.big_c.unwrap_or(1.0),
                opts.c1.unwrap_or(1.0),
            )?;
            let source = NormParams::new(
                opts.source_r.unwrap_or(6.0),
                opts.source_c.unwrap_or(4.0),
                opts.c1.unwrap_or(1.0),
            )?;
            let spec = SampleSpec {
                count: opts.trials.unwrap_or(500),
                seed,
                degree: opts.degree.unwrap_or(4),
                terms: 12,
                kmax: opts.kmax.unwrap_or(3) as i32,
            };
            let op = ProbeOp::Bracket(&m);
            let report = continuity_probe(&op, &target, &source, &spec)?;
            if matches!(opts.format, Some(FormatArg::Csv)) {
                write_output(opts, &io::probe_to_csv(&report))?;
            } else {
                let wrapped =
                    wrap_report("check probe", Some(seed), io::probe_to_value(&report));
                write_output(opts, &io::render_json(&wrapped))?;
            }
            Ok(if report.k_hat.is_finite() { 0 } else { 3 })
        }
    }
}

fn cmd_calibrate(opts: &CommonOpts, tamper: bool) -> CliResult<u8> {
    reject_csv(opts)?;
    let a = load_diagonal(opts)?;
    let seed = opts.seed.unwrap_or(DEFAULT_SEED);
    let tamper = if tamper { Tamper::FlipExchangeWeight } else { Tamper::None };
    let outcome = calibrate(&a, seed, tamper)?;

    let mut report = Map::new();
    report.insert(
        "survivors".into(),
        Value::Array(outcome.survivors.iter().map(io::convention_to_value).collect()),
    );
    report.insert(
        "candidates".into(),
        Value::Array(
            outcome
                .candidates
                .iter()
                .map(|(conv, residual)| {
                    let mut row = Map::new();
                    row.insert("convention".into(), io::convention_to_value(conv));
                    row.insert(
                        "worst_residual".into(),
                        serde_json::Number::from_f64(*residual)
                            .map(Value::Number)
                            .unwrap_or(Value::Null),
                    );
                    Value::Object(row)
                })
                .collect(),
        ),
    );
    let unique = outcome.unique().cloned();
    report.insert(
        "unique".into(),
        unique.as_ref().map(io::convention_to_value).unwrap_or(Value::Null),
    );
    let wrapped = wrap_report("calibrate", Some(seed), Value::Object(report));
    write_output(opts, &io::render_json(&wrapped))?;

    match unique {
        Some(conv) => {
            let path = PathBuf::from("conventions.json");
            fs::write(&path, io::render_json(&io::convention_to_value(&conv))).map_err(|e| {
                Failure::Internal(format!("cannot write {}: {e}", path.display()))
            })?;
            Ok(0)
        }
        None => {
            eprintln!(
                "calibration did not isolate a unique convention ({} survivors)",
                outcome.survivors.len()
            );
            Ok(3)
        }
    }
}
