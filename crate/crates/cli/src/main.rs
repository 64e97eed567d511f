//! `tracelab`: run the library's operations on JSON input and print JSON
//! reports.
//!
//! Exit status is 0 on success, 1 on bad input or a domain error, and 2 when
//! a certification or theorem check fails.

use std::fs;
use std::io::{self, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use tracelab::algebra::spectrum;
use tracelab::commutator::{decompose_element, rank_one_commutator};
use tracelab::functional::{characterize, Functional, FUNCTIONAL_TOL};
use tracelab::rank::spectral_rank;
use tracelab::riesz::{diagonalize_maximal, riesz_projection, spectral_trace};
use tracelab::socle::{classify, verify_theorems};
use tracelab::{AlgebraSpec, Element, LabConfig, LabError};

#[derive(Parser, Debug)]
#[command(name = "tracelab", version, about, allow_negative_numbers = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    options: Options,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Distinct eigenvalues with multiplicities. Input: element.
    Spectrum,
    /// Rank as the maximum of #sigma'(xa) over random x. Input: element.
    Rank,
    /// Sum of spectral values weighted by multiplicity. Input: element.
    Trace,
    /// Riesz projection onto chosen spectral values. Input: {"element", "targets"}.
    Riesz,
    /// a = sum lambda_i p_i for a maximal finite-rank element. Input: element.
    Diagonalize,
    /// Commutator expansion of a blockwise traceless element. Input: element.
    Commutator,
    /// P - Q = ST - TS for rank-one P = x f, Q = y g. Input: {"x", "f", "y", "g"}.
    RankOneCommutator,
    /// Decide the trace-characterizing conditions. Input: {"weights"}.
    CheckFunctional,
    /// Ideal structure and compressed-algebra checks. Input: algebra spec.
    Classify,
    /// Full verification suite. Input: algebra spec.
    Verify,
}

#[derive(Args, Debug)]
struct Options {
    /// Algebra spec as inline JSON, e.g. '{"block_sizes":[2,2]}'; used
    /// instead of --input by classify and verify.
    #[arg(long, global = true)]
    spec: Option<String>,
    /// Input JSON file; standard input when absent or "-".
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    /// Output file; standard output when absent or "-".
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Random probes for rank and multiplicity.
    #[arg(long, global = true)]
    probes: Option<usize>,
    /// Trials for sampled checks.
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Quadrature nodes per contour.
    #[arg(long, global = true)]
    nodes: Option<usize>,
    /// Eigenvalue merge radius, relative to max(rho, 1).
    #[arg(long = "tol-cluster", global = true, allow_hyphen_values = true)]
    tol_cluster: Option<f64>,
    /// Singular-value cutoff for classical rank, relative to the largest.
    #[arg(long = "tol-rank", global = true, allow_hyphen_values = true)]
    tol_rank: Option<f64>,
    /// Accepted idempotency defect for projections.
    #[arg(long = "tol-idem", global = true, allow_hyphen_values = true)]
    tol_idem: Option<f64>,
}

const DEFAULT_VERIFY_TRIALS: usize = 50;
const DEFAULT_SAMPLE_TRIALS: usize = 16;

impl Options {
    fn config(&self) -> Result<LabConfig, Failure> {
        let mut cfg = LabConfig::default().with_seed(self.seed);
        if let Some(p) = self.probes {
            cfg.probes = p;
        }
        if let Some(n) = self.nodes {
            cfg.nodes = n;
        }
        if let Some(t) = self.tol_cluster {
            cfg.cluster_tol = t;
        }
        if let Some(t) = self.tol_rank {
            cfg.rank_tol = t;
        }
        if let Some(t) = self.tol_idem {
            cfg.idempotency_tol = t;
        }
        if self.trials == Some(0) {
            return Err(LabError::InvalidParameter("trials must be at least 1".into()).into());
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RieszInput {
    element: Element,
    targets: Vec<Complex64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RankOneInput {
    x: Vec<Complex64>,
    f: Vec<Complex64>,
    y: Vec<Complex64>,
    g: Vec<Complex64>,
}

enum Failure {
    Lab(LabError),
    Parse(String),
    Io(String),
}

impl From<LabError> for Failure {
    fn from(e: LabError) -> Self {
        Failure::Lab(e)
    }
}

impl Failure {
    fn kind(&self) -> &'static str {
        match self {
            Failure::Lab(e) => e.kind(),
            Failure::Parse(_) => "parse_error",
            Failure::Io(_) => "io_error",
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Lab(e) => e.to_string(),
            Failure::Parse(m) | Failure::Io(m) => m.clone(),
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            Failure::Lab(e) if e.is_certification_failure() => 2,
            _ => 1,
        }
    }
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    kind: &'a str,
    message: String,
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    error: ErrorBody<'a>,
}

fn read_input(path: Option<&PathBuf>) -> Result<String, Failure> {
    match path {
        Some(p) if p.as_os_str() != "-" => {
            fs::read_to_string(p).map_err(|e| Failure::Io(format!("reading {}: {e}", p.display())))
        }
        _ => {
            let mut s = String::new();
            io::stdin()
                .read_to_string(&mut s)
                .map_err(|e| Failure::Io(format!("reading standard input: {e}")))?;
            Ok(s)
        }
    }
}

/// Parses `text`, naming the offending field path on failure.
fn parse<T: DeserializeOwned>(text: &str, what: &str) -> Result<T, Failure> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if path == "." {
            Failure::Parse(format!("{what}: {inner}"))
        } else {
            Failure::Parse(format!("{what} at {path}: {inner}"))
        }
    })
}

fn to_json<T: Serialize>(value: &T) -> Result<String, Failure> {
    serde_json::to_string_pretty(value).map_err(|e| Failure::Io(format!("serializing report: {e}")))
}

fn run(command: Command, opts: &Options) -> Result<String, Failure> {
    let cfg = opts.config()?;
    let spec_input = || -> Result<AlgebraSpec, Failure> {
        match &opts.spec {
            Some(s) => parse(s, "--spec"),
            None => parse(&read_input(opts.input.as_ref())?, "input"),
        }
    };
    let element_input =
        || -> Result<Element, Failure> { parse(&read_input(opts.input.as_ref())?, "input") };
    match command {
        Command::Spectrum => to_json(&spectrum(&element_input()?, cfg.cluster_tol)?),
        Command::Rank => to_json(&spectral_rank(&element_input()?, &cfg)?),
        Command::Trace => to_json(&spectral_trace(&element_input()?, &cfg)?),
        Command::Riesz => {
            let input: RieszInput = parse(&read_input(opts.input.as_ref())?, "input")?;
            to_json(&riesz_projection(&input.element, &input.targets, &cfg)?)
        }
        Command::Diagonalize => to_json(&diagonalize_maximal(&element_input()?, &cfg)?),
        Command::Commutator => to_json(&decompose_element(&element_input()?)?),
        Command::RankOneCommutator => {
            let i: RankOneInput = parse(&read_input(opts.input.as_ref())?, "input")?;
            to_json(&rank_one_commutator(&i.x, &i.f, &i.y, &i.g)?)
        }
        Command::CheckFunctional => {
            let f: Functional = parse(&read_input(opts.input.as_ref())?, "input")?;
            let trials = opts.trials.unwrap_or(DEFAULT_SAMPLE_TRIALS);
            to_json(&characterize(&f, FUNCTIONAL_TOL, trials, cfg.seed)?)
        }
        Command::Classify => {
            let trials = opts.trials.unwrap_or(DEFAULT_SAMPLE_TRIALS);
            to_json(&classify(&spec_input()?, trials, cfg.seed, &cfg)?)
        }
        Command::Verify => {
            let trials = opts.trials.unwrap_or(DEFAULT_VERIFY_TRIALS);
            to_json(&verify_theorems(&spec_input()?, trials, cfg.seed, &cfg)?)
        }
    }
}

fn write_output(path: Option<&PathBuf>, text: &str) -> io::Result<()> {
    match path {
        Some(p) if p.as_os_str() != "-" => fs::write(p, text),
        _ => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let (document, code) = match run(cli.command, &cli.options) {
        Ok(value) => (value, 0),
        Err(failure) => {
            eprintln!("tracelab: {}", failure.message());
            let report = ErrorReport {
                error: ErrorBody {
                    kind: failure.kind(),
                    message: failure.message(),
                },
            };
            (
                serde_json::to_string_pretty(&report).expect("error report serializes"),
                failure.exit_code(),
            )
        }
    };
    let text = document + "\n";
    if let Err(e) = write_output(cli.options.output.as_ref(), &text) {
        eprintln!("tracelab: writing output: {e}");
        return ExitCode::from(1);
    }
    ExitCode::from(code)
}
