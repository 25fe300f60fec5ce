//! Command-line surface for the fockcoh library: state construction,
//! coherence evaluation, free-set membership tests, distillation rates,
//! protocol simulation, angle/exponent sweeps, and a fixed-schema rate
//! table for plotting.
//!
//! Output contract: every JSON document is an envelope
//! `{version, command, seed, parameters, result}`. CSV payloads carry the
//! same metadata as leading `#` comment lines, then an RFC 4180 header row
//! and records. Identical argv (seed included) produces byte-identical
//! output.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use fockcoh::coherence::{sector_coherence, total_coherence, weighted_coherence};
use fockcoh::distill::{phi_indefinite_rate, rate_bec, rate_indefinite, rate_mc_from_pure};
use fockcoh::fock::{apply_beamsplitter, partial_trace, DensitySchema, StateSchema};
use fockcoh::freesets::{is_delta_a, is_delta_b, kraus_in_e_a, pure_in_delta_b};
use fockcoh::linalg::CMat;
use fockcoh::optimize::{sweep_psi, verify_kkt};
use fockcoh::protocol::{simulate, SimulateOptions};
use fockcoh::states::{hom_phi, parse_named_state, psi, PsiParams};
use fockcoh::{DensityMatrix, FockSpaceState, FockcohError, OccupationVector, Result};

#[derive(Parser)]
#[command(name = "fockcoh", version, about = "Coherence and distillation tools for two-mode Fock states")]
struct Cli {
    /// RNG seed; recorded in every output, consumed by randomized commands.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Worker threads for grid evaluation (default: one per core).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Write output to this file instead of the standard output stream.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Construct a named state and emit its JSON representation.
    State(StateArgs),
    /// Evaluate a coherence measure on a state or density.
    Coherence(CoherenceArgs),
    /// Test a state, density, or Kraus set against a free class.
    Membership(MembershipArgs),
    /// Distillation rates for the built-in protocols.
    Rate(RateArgs),
    /// Run the type-class protocol, exactly or by Monte-Carlo sampling.
    Simulate(SimulateArgs),
    /// Coherence sweep over the two-mode interference family at fixed N.
    Sweep(SweepArgs),
    /// Fixed-schema rate table over N: the three sweep curves at theta =
    /// pi/4 plus the indefinite-number inset column.
    Fig2(Fig2Args),
    /// Send one arm of a two-mode single-photon superposition through a
    /// balanced beamsplitter against a photon ancilla and report the
    /// output block structure.
    HomCheck(HomCheckArgs),
    /// Cross-check the constrained entropy maximizer against its closed
    /// form via two independent solvers.
    KktVerify(KktVerifyArgs),
}

#[derive(Args)]
struct StateArgs {
    /// State spec, e.g. "bec(n=2,pairs=1)", "phi(n=10)",
    /// "psi(theta=0.7853981633974483,m=8,n=16)".
    #[arg(long)]
    name: String,
}

#[derive(Clone, Copy, ValueEnum)]
enum Measure {
    /// In-sector coherence; requires --sector.
    #[value(name = "CN")]
    Cn,
    /// Sector-weighted average of CN over occupied sectors.
    #[value(name = "C")]
    C,
    /// Full dephasing coherence (entropy gap to the dephased state).
    #[value(name = "CA")]
    Ca,
}

impl Measure {
    fn label(self) -> &'static str {
        match self {
            Measure::Cn => "CN",
            Measure::C => "C",
            Measure::Ca => "CA",
        }
    }
}

#[derive(Args)]
struct CoherenceArgs {
    /// Named state spec or path to a JSON state/density file.
    #[arg(long)]
    state: String,

    #[arg(long, value_enum)]
    measure: Measure,

    /// Particle sector, required for --measure CN.
    #[arg(long)]
    sector: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MembershipTest {
    /// Diagonal density in the occupation basis.
    #[value(name = "deltaA")]
    DeltaA,
    /// Diagonal in the occupation basis of some single-particle mode pair
    /// (pure states: a spin-axis eigenbasis per sector).
    #[value(name = "deltaB")]
    DeltaB,
    /// Kraus set mapping diagonal states to diagonal states.
    #[value(name = "krausA")]
    KrausA,
}

#[derive(Args)]
struct MembershipArgs {
    #[arg(long, value_enum)]
    test: MembershipTest,

    /// Input file (JSON state, density, or Kraus schema) or named state.
    #[arg(long = "in")]
    input: String,

    /// Numerical tolerance for the verdict.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Protocol {
    /// Split-condensate input, sector-N maximally coherent target.
    Bec,
    /// Arbitrary pure input from --state, sector-N target.
    Pure,
    /// Indefinite-number target; defaults to the canonical tail state.
    Indefinite,
}

#[derive(Args)]
struct RateArgs {
    #[arg(long, value_enum)]
    protocol: Protocol,

    /// Particle number(s); comma separated for tables.
    #[arg(long = "N", value_delimiter = ',')]
    n: Vec<u64>,

    /// Pure input state (required for --protocol pure, optional override
    /// for --protocol indefinite).
    #[arg(long)]
    state: Option<String>,

    /// Emit a CSV table, one row per N, instead of JSON.
    #[arg(long)]
    csv: bool,
}

#[derive(Args)]
struct SimulateArgs {
    /// Named state spec or path to a JSON state file.
    #[arg(long)]
    state: String,

    /// Copies per run; comma separated for tables.
    #[arg(long, value_delimiter = ',')]
    n: Vec<u64>,

    /// Monte-Carlo shots; ignored with --exact.
    #[arg(long, default_value_t = 10_000)]
    shots: u64,

    /// Target register dimension.
    #[arg(long, default_value_t = 2)]
    target_dim: u64,

    /// Average over all types exactly instead of sampling.
    #[arg(long)]
    exact: bool,

    /// Emit a CSV table, one row per copy count, instead of JSON.
    #[arg(long)]
    csv: bool,
}

#[derive(Args)]
struct SweepArgs {
    /// Total particle number.
    #[arg(long = "N")]
    n: u64,

    /// "all" for m = 0..=N, or a comma-separated list of exponents.
    #[arg(long, default_value = "all")]
    m: String,

    /// Uniform angle grid size on [0, pi/4]; at least 2 points.
    #[arg(long, default_value_t = 33)]
    theta_points: usize,
}

#[derive(Args)]
struct Fig2Args {
    /// Largest particle number; rows run N = step, 2*step, ..., Nmax.
    #[arg(long = "Nmax")]
    n_max: u64,

    /// Row spacing; even and at least 4 so every row has three distinct
    /// exponents.
    #[arg(long, default_value_t = 100)]
    step: u64,
}

#[derive(Args)]
struct HomCheckArgs {
    /// Amplitude on the first mode.
    #[arg(long)]
    c1: f64,

    /// Amplitude on the second mode; |c1|^2 + |c2|^2 must be 1.
    #[arg(long)]
    c2: f64,
}

#[derive(Args)]
struct KktVerifyArgs {
    /// Mean particle-number constraint.
    #[arg(long = "N")]
    n: f64,

    /// Support truncation for both solvers.
    #[arg(long, default_value_t = 500)]
    kmax: usize,

    /// Agreement tolerance between the two solver routes.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        // The global pool can only be configured once; a second attempt in
        // the same process is harmless.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(match err {
                FockcohError::InvalidArguments(_) => 2,
                FockcohError::ResourceLimit(_) => 3,
                _ => 1,
            })
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::State(args) => cmd_state(cli, args),
        Command::Coherence(args) => cmd_coherence(cli, args),
        Command::Membership(args) => cmd_membership(cli, args),
        Command::Rate(args) => cmd_rate(cli, args),
        Command::Simulate(args) => cmd_simulate(cli, args),
        Command::Sweep(args) => cmd_sweep(cli, args),
        Command::Fig2(args) => cmd_fig2(cli, args),
        Command::HomCheck(args) => cmd_hom_check(cli, args),
        Command::KktVerify(args) => cmd_kkt_verify(cli, args),
    }
}

// ---------------------------------------------------------------------------
// Output plumbing

#[derive(Serialize)]
struct Envelope<T: Serialize> {
    version: &'static str,
    command: &'static str,
    seed: u64,
    parameters: serde_json::Value,
    result: T,
}

fn emit_json<T: Serialize>(
    cli: &Cli,
    command: &'static str,
    parameters: serde_json::Value,
    result: T,
) -> Result<()> {
    let envelope = Envelope {
        version: env!("CARGO_PKG_VERSION"),
        command,
        seed: cli.seed,
        parameters,
        result,
    };
    let mut text = serde_json::to_string_pretty(&envelope)
        .map_err(|e| FockcohError::Internal(format!("serialization failed: {e}")))?;
    text.push('\n');
    write_output(cli.out.as_deref(), &text)
}

fn emit_csv(
    cli: &Cli,
    command: &str,
    parameters: &serde_json::Value,
    units: &str,
    extra_meta: &[String],
    header: &str,
    rows: &[String],
) -> Result<()> {
    let mut text = String::new();
    text.push_str(&format!("# fockcoh {}\n", env!("CARGO_PKG_VERSION")));
    text.push_str(&format!("# command: {command}\n"));
    text.push_str(&format!("# seed: {}\n", cli.seed));
    text.push_str(&format!("# parameters: {parameters}\n"));
    text.push_str(&format!("# units: {units}\n"));
    for line in extra_meta {
        text.push_str(&format!("# {line}\n"));
    }
    text.push_str(header);
    text.push('\n');
    for row in rows {
        text.push_str(row);
        text.push('\n');
    }
    write_output(cli.out.as_deref(), &text)
}

fn write_output(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| {
            FockcohError::InvalidArguments(format!("cannot write '{}': {e}", path.display()))
        }),
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(text.as_bytes())
                .and_then(|()| lock.flush())
                .map_err(|e| FockcohError::Internal(format!("stdout write failed: {e}")))
        }
    }
}

// ---------------------------------------------------------------------------
// Input plumbing

/// Kraus sets on file: row-major matrices of [re, im] pairs, all square and
/// of equal dimension.
#[derive(Deserialize)]
struct KrausSchema {
    kraus: Vec<Vec<Vec<[f64; 2]>>>,
}

enum LoadedInput {
    State(FockSpaceState),
    Density(DensityMatrix),
    Kraus(Vec<CMat>),
}

impl LoadedInput {
    fn kind(&self) -> &'static str {
        match self {
            LoadedInput::State(_) => "state",
            LoadedInput::Density(_) => "density",
            LoadedInput::Kraus(_) => "kraus set",
        }
    }
}

/// Accepts a named-state spec or a path to a JSON document holding a state
/// schema, a density schema, a Kraus schema, or an envelope wrapping one.
fn load_input(spec: &str) -> Result<LoadedInput> {
    let path = Path::new(spec);
    if !path.is_file() {
        return Ok(LoadedInput::State(parse_named_state(spec)?));
    }
    let text = fs::read_to_string(path)
        .map_err(|e| FockcohError::InvalidArguments(format!("cannot read '{spec}': {e}")))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| FockcohError::InvalidArguments(format!("'{spec}' is not JSON: {e}")))?;
    // Documents written by this binary wrap the payload in an envelope.
    let payload = value.get("result").cloned().unwrap_or(value);
    if payload.get("sectors").is_some() {
        let schema: StateSchema = serde_json::from_value(payload).map_err(|e| {
            FockcohError::InvalidArguments(format!("'{spec}' is not a valid state file: {e}"))
        })?;
        Ok(LoadedInput::State(FockSpaceState::from_schema(&schema)?))
    } else if payload.get("matrix").is_some() {
        let schema: DensitySchema = serde_json::from_value(payload).map_err(|e| {
            FockcohError::InvalidArguments(format!("'{spec}' is not a valid density file: {e}"))
        })?;
        Ok(LoadedInput::Density(DensityMatrix::from_schema(&schema)?))
    } else if payload.get("kraus").is_some() {
        let schema: KrausSchema = serde_json::from_value(payload).map_err(|e| {
            FockcohError::InvalidArguments(format!("'{spec}' is not a valid Kraus file: {e}"))
        })?;
        Ok(LoadedInput::Kraus(parse_kraus(&schema)?))
    } else {
        Err(FockcohError::InvalidArguments(format!(
            "'{spec}' has none of the recognized keys (sectors, matrix, kraus)"
        )))
    }
}

fn parse_kraus(schema: &KrausSchema) -> Result<Vec<CMat>> {
    if schema.kraus.is_empty() {
        return Err(FockcohError::InvalidArguments("empty Kraus set".into()));
    }
    let dim = schema.kraus[0].len();
    let mut out = Vec::with_capacity(schema.kraus.len());
    for (idx, rows) in schema.kraus.iter().enumerate() {
        if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
            return Err(FockcohError::InvalidArguments(format!(
                "Kraus operator {idx} is not square of dimension {dim}"
            )));
        }
        let mut mat = CMat::zeros(dim);
        for (i, row) in rows.iter().enumerate() {
            for (j, &[re, im]) in row.iter().enumerate() {
                mat.set(i, j, Complex64::new(re, im));
            }
        }
        out.push(mat);
    }
    Ok(out)
}

fn load_state(spec: &str) -> Result<FockSpaceState> {
    match load_input(spec)? {
        LoadedInput::State(s) => Ok(s),
        other => Err(FockcohError::InvalidArguments(format!(
            "expected a pure state, got a {}",
            other.kind()
        ))),
    }
}

// ---------------------------------------------------------------------------
// Commands

fn cmd_state(cli: &Cli, args: &StateArgs) -> Result<()> {
    let state = parse_named_state(&args.name)?;
    let schema = state.to_schema()?;
    emit_json(cli, "state", json!({ "name": args.name }), schema)
}

fn cmd_coherence(cli: &Cli, args: &CoherenceArgs) -> Result<()> {
    let input = load_input(&args.state)?;
    let value_bits = match (args.measure, &input) {
        (Measure::Cn, _) => {
            let sector = args.sector.ok_or_else(|| {
                FockcohError::InvalidArguments("--measure CN requires --sector".into())
            })?;
            match &input {
                LoadedInput::State(s) => sector_coherence(s, sector)?,
                LoadedInput::Density(r) => sector_coherence(r, sector)?,
                LoadedInput::Kraus(_) => {
                    return Err(FockcohError::InvalidArguments(
                        "coherence needs a state or density, got a Kraus set".into(),
                    ))
                }
            }
        }
        (Measure::C, LoadedInput::State(s)) => weighted_coherence(s)?,
        (Measure::C, LoadedInput::Density(r)) => weighted_coherence(r)?,
        (Measure::Ca, LoadedInput::State(s)) => total_coherence(s)?,
        (Measure::Ca, LoadedInput::Density(r)) => total_coherence(r)?,
        (_, LoadedInput::Kraus(_)) => {
            return Err(FockcohError::InvalidArguments(
                "coherence needs a state or density, got a Kraus set".into(),
            ))
        }
    };
    let mut result = json!({ "measure": args.measure.label(), "value_bits": value_bits });
    if let Some(sector) = args.sector {
        result["sector"] = json!(sector);
    }
    emit_json(
        cli,
        "coherence",
        json!({ "state": args.state, "measure": args.measure.label(), "sector": args.sector }),
        result,
    )
}

fn cmd_membership(cli: &Cli, args: &MembershipArgs) -> Result<()> {
    let input = load_input(&args.input)?;
    let report = match (args.test, &input) {
        (MembershipTest::DeltaA, LoadedInput::State(s)) => {
            is_delta_a(&DensityMatrix::from_pure(s)?, args.tol)
        }
        (MembershipTest::DeltaA, LoadedInput::Density(r)) => is_delta_a(r, args.tol),
        (MembershipTest::DeltaB, LoadedInput::State(s)) => pure_in_delta_b(s, args.tol)?,
        (MembershipTest::DeltaB, LoadedInput::Density(r)) => is_delta_b(r, args.tol)?,
        (MembershipTest::KrausA, LoadedInput::Kraus(set)) => kraus_in_e_a(set, args.tol)?,
        (MembershipTest::KrausA, other) => {
            return Err(FockcohError::InvalidArguments(format!(
                "krausA needs a Kraus file, got a {}",
                other.kind()
            )))
        }
        (_, LoadedInput::Kraus(_)) => {
            return Err(FockcohError::InvalidArguments(
                "this test needs a state or density, got a Kraus set".into(),
            ))
        }
    };
    let test_label = match args.test {
        MembershipTest::DeltaA => "deltaA",
        MembershipTest::DeltaB => "deltaB",
        MembershipTest::KrausA => "krausA",
    };
    emit_json(
        cli,
        "membership",
        json!({ "test": test_label, "in": args.input, "tol": args.tol }),
        report,
    )
}

fn cmd_rate(cli: &Cli, args: &RateArgs) -> Result<()> {
    if args.n.is_empty() {
        return Err(FockcohError::InvalidArguments(
            "--N requires at least one particle number".into(),
        ));
    }
    let (protocol_label, state) = match args.protocol {
        Protocol::Bec => {
            if args.state.is_some() {
                return Err(FockcohError::InvalidArguments(
                    "--protocol bec takes no --state".into(),
                ));
            }
            ("bec", None)
        }
        Protocol::Pure => {
            let spec = args.state.as_deref().ok_or_else(|| {
                FockcohError::InvalidArguments("--protocol pure requires --state".into())
            })?;
            ("pure", Some(load_state(spec)?))
        }
        Protocol::Indefinite => (
            "indefinite",
            args.state.as_deref().map(load_state).transpose()?,
        ),
    };

    let mut reports = Vec::with_capacity(args.n.len());
    for &n in &args.n {
        let report = match (args.protocol, &state) {
            (Protocol::Bec, _) => rate_bec(n)?,
            (Protocol::Pure, Some(s)) => rate_mc_from_pure(s, n)?,
            (Protocol::Indefinite, Some(s)) => rate_indefinite(s, n)?,
            (Protocol::Indefinite, None) => phi_indefinite_rate(n)?,
            (Protocol::Pure, None) => unreachable!("validated above"),
        };
        reports.push((n, report));
    }

    let parameters = json!({
        "protocol": protocol_label,
        "N": args.n,
        "state": args.state,
    });
    if args.csv {
        let rows: Vec<String> = reports
            .iter()
            .map(|(n, r)| {
                format!(
                    "{n},{:.12},{:.12},{:.12}",
                    r.rate, r.numerator_bits, r.denominator_bits
                )
            })
            .collect();
        emit_csv(
            cli,
            "rate",
            &parameters,
            "N count, rate dimensionless (target registers per input copy), *_bits bits",
            &[],
            "N,rate,numerator_bits,denominator_bits",
            &rows,
        )
    } else if reports.len() == 1 {
        emit_json(cli, "rate", parameters, &reports[0].1)
    } else {
        let list: Vec<serde_json::Value> = reports
            .iter()
            .map(|(n, r)| json!({ "N": n, "report": r }))
            .collect();
        emit_json(cli, "rate", parameters, list)
    }
}

fn cmd_simulate(cli: &Cli, args: &SimulateArgs) -> Result<()> {
    if args.n.is_empty() {
        return Err(FockcohError::InvalidArguments(
            "--n requires at least one copy count".into(),
        ));
    }
    let state = load_state(&args.state)?;
    let mut reports = Vec::with_capacity(args.n.len());
    for &copies in &args.n {
        let options = SimulateOptions {
            input_copies: copies,
            shots: if args.exact { 0 } else { args.shots },
            target_dim: args.target_dim,
            seed: cli.seed,
            exact: args.exact,
        };
        reports.push(simulate(&state, &options)?);
    }

    let parameters = json!({
        "state": args.state,
        "n": args.n,
        "shots": args.shots,
        "target_dim": args.target_dim,
        "exact": args.exact,
    });
    if args.csv {
        let rows: Vec<String> = reports
            .iter()
            .map(|r| {
                format!(
                    "{},{:.12},{:.12},{:.12},{:.12}",
                    r.input_copies,
                    r.mean_copies_per_input,
                    r.stderr_copies_per_input,
                    r.analytic_rate,
                    r.mean_success_probability
                )
            })
            .collect();
        emit_csv(
            cli,
            "simulate",
            &parameters,
            "n_copies count, rates dimensionless (target registers per input copy), \
             mean_success dimensionless probability",
            &[],
            "n_copies,empirical_rate,stderr,analytic_rate,mean_success",
            &rows,
        )
    } else {
        let to_value = |r: &fockcoh::protocol::SimulationReport| {
            json!({
                "analytic_rate": r.analytic_rate,
                "empirical_rate": r.mean_copies_per_input,
                "stderr": r.stderr_copies_per_input,
                "mean_success": r.mean_success_probability,
                "report": r,
            })
        };
        if reports.len() == 1 {
            emit_json(cli, "simulate", parameters, to_value(&reports[0]))
        } else {
            let list: Vec<serde_json::Value> = reports.iter().map(to_value).collect();
            emit_json(cli, "simulate", parameters, list)
        }
    }
}

fn cmd_sweep(cli: &Cli, args: &SweepArgs) -> Result<()> {
    if args.theta_points < 2 {
        return Err(FockcohError::InvalidArguments(
            "--theta-points must be at least 2".into(),
        ));
    }
    let last = (args.theta_points - 1) as f64;
    let thetas: Vec<f64> = (0..args.theta_points)
        .map(|i| std::f64::consts::FRAC_PI_4 * i as f64 / last)
        .collect();
    let m_values: Vec<u64> = if args.m.trim() == "all" {
        (0..=args.n).collect()
    } else {
        args.m
            .split(',')
            .map(|part| {
                part.trim().parse::<u64>().map_err(|_| {
                    FockcohError::InvalidArguments(format!(
                        "--m expects 'all' or a comma-separated list of integers, got '{}'",
                        args.m
                    ))
                })
            })
            .collect::<Result<Vec<u64>>>()?
    };

    let sweep = sweep_psi(args.n, &thetas, &m_values)?;
    let rows: Vec<String> = sweep
        .grid
        .iter()
        .map(|p| {
            format!(
                "{},{:.12},{},{:.12},{:.12}",
                args.n, p.theta, p.m, p.coherence_bits, p.rate
            )
        })
        .collect();
    let parameters = json!({ "N": args.n, "m": args.m, "theta_points": args.theta_points });
    let meta = vec![
        format!("argmax: theta={:.12}, m={}", sweep.argmax.0, sweep.argmax.1),
        format!(
            "refined: theta={:.12}, C_bits={:.12}",
            sweep.refined_theta, sweep.refined_coherence_bits
        ),
    ];
    emit_csv(
        cli,
        "sweep",
        &parameters,
        "N count, theta_rad radians, m count, C_bits bits, rate dimensionless \
         (target registers per input copy)",
        &meta,
        "N,theta_rad,m,C_bits,rate",
        &rows,
    )
}

fn cmd_fig2(cli: &Cli, args: &Fig2Args) -> Result<()> {
    if args.step < 4 || args.step % 2 != 0 {
        return Err(FockcohError::InvalidArguments(format!(
            "--step must be an even integer of at least 4 so each row has three \
             distinct exponents, got {}",
            args.step
        )));
    }
    if args.n_max < args.step {
        return Err(FockcohError::InvalidArguments(format!(
            "--Nmax {} is below --step {}",
            args.n_max, args.step
        )));
    }

    let ns: Vec<u64> = (1..=args.n_max / args.step).map(|i| i * args.step).collect();
    let rate_at = |n: u64, m: u64| -> Result<f64> {
        let state = psi(PsiParams { theta: std::f64::consts::FRAC_PI_4, m, n })?;
        Ok(rate_mc_from_pure(&state, n)?.rate)
    };
    let rows: Vec<String> = ns
        .par_iter()
        .map(|&n| -> Result<String> {
            let half = n / 2;
            let row = format!(
                "{n},{:.12},{:.12},{:.12},{:.12}",
                rate_at(n, 0)?,
                rate_at(n, half)?,
                rate_at(n, half - 1)?,
                phi_indefinite_rate(n)?.rate
            );
            Ok(row)
        })
        .collect::<Result<Vec<String>>>()?;

    let parameters = json!({ "Nmax": args.n_max, "step": args.step });
    emit_csv(
        cli,
        "fig2",
        &parameters,
        "N count, rate_* dimensionless (target registers per input copy); \
         curve columns at theta = pi/4, inset from the indefinite-number protocol",
        &[],
        "N,rate_m0,rate_mN2,rate_mN2m1,rate_phi_inset",
        &rows,
    )
}

fn cmd_hom_check(cli: &Cli, args: &HomCheckArgs) -> Result<()> {
    let norm = args.c1 * args.c1 + args.c2 * args.c2;
    if (norm - 1.0).abs() > 1e-9 {
        return Err(FockcohError::InvalidArguments(format!(
            "|c1|^2 + |c2|^2 must be 1, got {norm}"
        )));
    }
    let a1 = Complex64::new(args.c1, 0.0);
    let a2 = Complex64::new(args.c2, 0.0);
    let input = FockSpaceState::from_components(
        2,
        [
            (OccupationVector::new(vec![1, 0]), a1),
            (OccupationVector::new(vec![0, 1]), a2),
        ],
        0.0,
    );
    let ancilla = FockSpaceState::basis_state(OccupationVector::new(vec![1]));
    let mixed = apply_beamsplitter(
        &input.tensor(&ancilla),
        0,
        2,
        std::f64::consts::FRAC_PI_4,
        0.0,
    )?;
    let rho = partial_trace(&mixed, &[0, 1])?;

    let weights = rho.sector_weights();
    let w0 = weights.get(&0).copied().unwrap_or(0.0);
    let w1 = weights.get(&1).copied().unwrap_or(0.0);
    let w2 = weights.get(&2).copied().unwrap_or(0.0);

    // Sup deviation of the two-particle conditional block from the
    // interference projector it should equal.
    let projector = hom_phi(a1, a2)?;
    let (labels, block, _mass) = rho.sector_conditional(2)?;
    let mut block_deviation = 0.0f64;
    for (i, la) in labels.iter().enumerate() {
        for (j, lb) in labels.iter().enumerate() {
            let expect = projector.amplitude(la) * projector.amplitude(lb).conj();
            block_deviation = block_deviation.max((block.get(i, j) - expect).norm());
        }
    }
    let membership = pure_in_delta_b(&projector, 1e-6)?;

    let result = json!({
        "weights": { "vacuum": w0, "one_particle": w1, "two_particle": w2 },
        "expected_weights": {
            "vacuum": 0.5 * args.c1 * args.c1,
            "one_particle": 0.5 * args.c2 * args.c2,
            "two_particle": 0.5,
        },
        "two_particle_block_deviation": block_deviation,
        "two_particle_block_free": membership.verdict,
        "membership": membership,
    });
    emit_json(cli, "hom-check", json!({ "c1": args.c1, "c2": args.c2 }), result)
}

fn cmd_kkt_verify(cli: &Cli, args: &KktVerifyArgs) -> Result<()> {
    let report = verify_kkt(args.n, args.kmax, args.tol)?;
    emit_json(
        cli,
        "kkt-verify",
        json!({ "N": args.n, "kmax": args.kmax, "tol": args.tol }),
        report,
    )
}
