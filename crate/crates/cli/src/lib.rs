//! Command-line runner for the `mpqc` simulator.
//!
//! Every command prints one JSON object with the keys `command`, `inputs`,
//! `output`, `counters`, `seed` and `elapsed_ms`, in that order.

use std::collections::BTreeSet;
use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mpqc_core::factorint::{factorize, is_prime};
use mpqc_core::mpqc::{
    gcd_protocol, lcm_protocol, leakage_audit, psi_protocol, psu_protocol, with_injected, Engine,
    Label, Message, MessageKind, Payload, ProtocolConfig, ProtocolResult, ProtocolSecrets,
    Recipient,
};
use mpqc_core::periodfind::{
    fourier_call_bound, fourier_marginal, fourier_sample, qpa_from_marginal, Backend, Eqpa,
    PeriodicFunction,
};
use mpqc_core::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_REJECT: i32 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "mpqc",
    version,
    about = "Exact period finding and multiparty protocol simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Seed for every random choice of the run.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Also write the result JSON to this file.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Write the protocol transcript as JSON lines to this file.
    #[arg(long, global = true)]
    pub transcript: Option<PathBuf>,

    /// Include per-step traces in the output.
    #[arg(long, global = true)]
    pub trace: bool,

    /// Report wall-clock time; output is no longer byte-reproducible.
    #[arg(long, global = true)]
    pub timing: bool,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Exact period of x mod r over Z_m.
    Eqpa {
        #[arg(long)]
        r: u64,
        #[arg(long)]
        m: u64,
        #[arg(long, value_enum, default_value_t = BackendArg::Statevector)]
        backend: BackendArg,
    },
    /// Success rates of exact and single-sample standard period finding.
    QpaCompare {
        #[arg(long)]
        r: u64,
        #[arg(long)]
        m: u64,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
    },
    /// Prime factorization with simulated order finding.
    Factor {
        #[arg(long)]
        n: u64,
    },
    /// Multiparty least common multiple
    Lcm(IntegerProtocol),
    /// Multiparty greatest common divisor
    Gcd(IntegerProtocol),
    /// Private set union
    Psu(SetProtocol),
    /// Private set intersection
    Psi(SetProtocol),
    /// Runs a protocol and audits its transcript for leaked secrets.
    Audit {
        #[arg(long, value_enum)]
        protocol: ProtocolArg,
        #[arg(long, value_delimiter = ',')]
        inputs: Option<Vec<u64>>,
        #[arg(long, default_value_t = 5)]
        bits: u32,
        #[arg(long, value_parser = parse_sets)]
        sets: Option<SetList>,
        #[arg(long, default_value_t = 4)]
        universe: u64,
        /// Append a message carrying party 1's raw input before auditing.
        #[arg(long)]
        inject_raw_secret: bool,
    },
    /// Exact period finding on random (r, m) pairs against the call bound.
    Bench {
        #[arg(long, default_value_t = 20)]
        pairs: u64,
        #[arg(long, default_value_t = 256)]
        max_r: u64,
        #[arg(long, default_value_t = 4096)]
        max_m: u64,
        #[arg(long, value_enum, default_value_t = BackendArg::Statevector)]
        backend: BackendArg,
    },
}

#[derive(Args, Debug)]
pub struct IntegerProtocol {
    /// Comma-separated secrets, one per party.
    #[arg(long, value_delimiter = ',', required = true)]
    pub inputs: Vec<u64>,
    /// Secrets lie in [1, 2^bits).
    #[arg(long, default_value_t = 5)]
    pub bits: u32,
    #[arg(long, value_enum, default_value_t = EngineArg::Subspace)]
    pub engine: EngineArg,
}

#[derive(Args, Debug)]
pub struct SetProtocol {
    /// Sets separated by `;`, elements by `,`, e.g. `1,2;2,3;` (trailing empty set).
    #[arg(long, value_parser = parse_sets)]
    pub sets: SetList,
    #[arg(long)]
    pub universe: u64,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum BackendArg {
    Statevector,
    Subspace,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum EngineArg {
    Subspace,
    Statevector,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ProtocolArg {
    Lcm,
    Gcd,
    Psu,
    Psi,
}

impl From<BackendArg> for Backend {
    fn from(b: BackendArg) -> Self {
        match b {
            BackendArg::Statevector => Backend::Statevector,
            BackendArg::Subspace => Backend::Subspace,
        }
    }
}

impl From<EngineArg> for Engine {
    fn from(e: EngineArg) -> Self {
        match e {
            EngineArg::Subspace => Engine::Subspace,
            EngineArg::Statevector => Engine::Statevector,
        }
    }
}

/// Sets separated by `;`, elements by `,`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SetList(pub Vec<BTreeSet<u64>>);

fn parse_sets(s: &str) -> Result<SetList, String> {
    s.split(';')
        .map(|part| {
            part.split(',')
                .map(str::trim)
                .filter(|e| !e.is_empty())
                .map(|e| e.parse::<u64>().map_err(|err| format!("`{e}`: {err}")))
                .collect()
        })
        .collect::<Result<_, _>>()
        .map(SetList)
}

#[derive(Serialize, Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct Counters {
    pub fourier_calls: u64,
    pub oracle_passes: u64,
    pub rounds: u64,
}

#[derive(Serialize, Debug)]
pub struct Report {
    pub command: &'static str,
    pub inputs: Value,
    pub output: Value,
    pub counters: Counters,
    pub seed: u64,
    pub elapsed_ms: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub details: Option<Value>,
}

/// Result JSON plus exit code.
#[derive(Debug)]
pub struct Outcome {
    pub report: Report,
    pub transcript: Option<String>,
    pub exit_code: i32,
}

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Rejected(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Rejected(_) => EXIT_REJECT,
            _ => EXIT_INPUT,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Rejected(m) => write!(f, "rejected: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Rejected(m) => CliError::Rejected(m),
            other => CliError::Input(other.to_string()),
        }
    }
}

fn protocol_counters(r: &ProtocolResult) -> Counters {
    Counters {
        fourier_calls: r.counters.fourier_calls,
        oracle_passes: r.counters.oracle_passes,
        rounds: r.counters.rounds,
    }
}

fn protocol_outcome(
    command: &'static str,
    inputs: Value,
    result: ProtocolResult,
    cli: &Cli,
) -> Outcome {
    let details = cli.trace.then(|| {
        json!({
            "classical_rounds": result.counters.classical_rounds,
            "repetitions": result.repetitions,
            "messages": result.transcript.len(),
            "views": result.views,
        })
    });
    let exit_code = if result.accepted {
        EXIT_OK
    } else {
        EXIT_REJECT
    };
    Outcome {
        report: Report {
            command,
            inputs,
            output: json!(result.output),
            counters: protocol_counters(&result),
            seed: cli.seed,
            elapsed_ms: None,
            details,
        },
        transcript: Some(result.transcript.to_jsonl()),
        exit_code,
    }
}

fn report(
    command: &'static str,
    inputs: Value,
    output: Value,
    counters: Counters,
    cli: &Cli,
) -> Outcome {
    Outcome {
        report: Report {
            command,
            inputs,
            output,
            counters,
            seed: cli.seed,
            elapsed_ms: None,
            details: None,
        },
        transcript: None,
        exit_code: EXIT_OK,
    }
}

fn periodic(r: u64, m: u64) -> Result<PeriodicFunction, CliError> {
    if r == 0 || m == 0 {
        return Err(CliError::Input("r and m must be positive".into()));
    }
    Ok(PeriodicFunction::modular(r, m)?)
}

fn run_protocol(
    protocol: ProtocolArg,
    inputs: Option<&[u64]>,
    bits: u32,
    sets: Option<&[BTreeSet<u64>]>,
    universe: u64,
    config: &ProtocolConfig,
) -> Result<(ProtocolResult, ProtocolSecrets), CliError> {
    let need_ints = || inputs.ok_or_else(|| CliError::Input("--inputs is required".into()));
    let need_sets = || sets.ok_or_else(|| CliError::Input("--sets is required".into()));
    Ok(match protocol {
        ProtocolArg::Lcm => {
            let v = need_ints()?;
            (
                lcm_protocol(v, bits, config)?,
                ProtocolSecrets::Integers(v.to_vec()),
            )
        }
        ProtocolArg::Gcd => {
            let v = need_ints()?;
            (
                gcd_protocol(v, bits, config)?,
                ProtocolSecrets::Integers(v.to_vec()),
            )
        }
        ProtocolArg::Psu => {
            let s = need_sets()?;
            (
                psu_protocol(s, universe, config)?,
                ProtocolSecrets::Sets(s.to_vec()),
            )
        }
        ProtocolArg::Psi => {
            let s = need_sets()?;
            (
                psi_protocol(s, universe, config)?,
                ProtocolSecrets::Sets(s.to_vec()),
            )
        }
    })
}

/// Runs one parsed command without touching the file system.
pub fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    let seed = cli.seed;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let outcome = match &cli.command {
        Command::Eqpa { r, m, backend } => {
            let f = periodic(*r, *m)?;
            let out = Eqpa::new(&f, (*backend).into())?.run(&mut rng)?;
            let c = out.trace.counters;
            let mut o = report(
                "eqpa",
                json!({"r": r, "m": m, "backend": format!("{backend:?}").to_lowercase()}),
                json!(out.period),
                Counters {
                    fourier_calls: c.fourier_calls,
                    oracle_passes: c.forward_runs + c.inverse_runs,
                    rounds: out.trace.sweeps as u64,
                },
                cli,
            );
            o.report.details = cli.trace.then(|| {
                json!({
                    "fourier_call_bound": fourier_call_bound(*m, out.period),
                    "records": out.trace.records,
                })
            });
            o
        }
        Command::QpaCompare { r, m, trials } => {
            let f = periodic(*r, *m)?;
            let mut engine = Eqpa::new(&f, Backend::Statevector)?;
            let marginal = fourier_marginal(&fourier_sample(f.function())?)?;
            let (mut eqpa_ok, mut qpa_ok, mut calls, mut max_calls) = (0u64, 0u64, 0u64, 0u64);
            for t in 0..*trials {
                let mut trial_rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(t));
                let out = engine.run(&mut trial_rng)?;
                eqpa_ok += (out.period == *r) as u64;
                calls += out.trace.counters.fourier_calls;
                max_calls = max_calls.max(out.trace.counters.fourier_calls);
                qpa_ok += (qpa_from_marginal(&marginal, *m, &mut trial_rng, 1) == *r) as u64;
            }
            let rate = |k: u64| {
                if *trials == 0 {
                    0.0
                } else {
                    k as f64 / *trials as f64
                }
            };
            report(
                "qpa-compare",
                json!({"r": r, "m": m, "trials": trials}),
                json!({
                    "eqpa_success_rate": rate(eqpa_ok),
                    "qpa_single_sample_success_rate": rate(qpa_ok),
                    "fourier_calls_each": {
                        "eqpa_mean": if *trials == 0 { 0.0 } else { calls as f64 / *trials as f64 },
                        "eqpa_max": max_calls,
                        "qpa": 1,
                    },
                }),
                Counters {
                    fourier_calls: calls + trials,
                    ..Counters::default()
                },
                cli,
            )
        }
        Command::Factor { n } => {
            if *n == 0 {
                return Err(CliError::Input("n must be positive".into()));
            }
            let res = factorize(*n, &mut rng)?;
            let mut o = report(
                "factor",
                json!({"n": n}),
                json!({"factors": res.factors, "methods": res.methods, "prime": is_prime(*n)}),
                Counters {
                    fourier_calls: res.fourier_calls,
                    ..Counters::default()
                },
                cli,
            );
            o.report.details = cli.trace.then(|| json!({"trials": res.trials}));
            o
        }
        Command::Lcm(p) | Command::Gcd(p) => {
            let config = ProtocolConfig {
                seed,
                engine: p.engine.into(),
            };
            let (name, protocol) = match cli.command {
                Command::Lcm(_) => ("lcm", ProtocolArg::Lcm),
                _ => ("gcd", ProtocolArg::Gcd),
            };
            let (result, _) = run_protocol(protocol, Some(&p.inputs), p.bits, None, 0, &config)?;
            protocol_outcome(
                name,
                json!({"inputs": p.inputs, "bits": p.bits}),
                result,
                cli,
            )
        }
        Command::Psu(p) | Command::Psi(p) => {
            let (name, protocol) = match cli.command {
                Command::Psu(_) => ("psu", ProtocolArg::Psu),
                _ => ("psi", ProtocolArg::Psi),
            };
            let config = ProtocolConfig::seeded(seed);
            let (result, _) =
                run_protocol(protocol, None, 0, Some(&p.sets.0), p.universe, &config)?;
            protocol_outcome(
                name,
                json!({"sets": p.sets.0, "universe": p.universe}),
                result,
                cli,
            )
        }
        Command::Audit {
            protocol,
            inputs,
            bits,
            sets,
            universe,
            inject_raw_secret,
        } => {
            let config = ProtocolConfig::seeded(seed);
            let (mut result, secrets) = run_protocol(
                *protocol,
                inputs.as_deref(),
                *bits,
                sets.as_ref().map(|s| s.0.as_slice()),
                *universe,
                &config,
            )?;
            if *inject_raw_secret {
                result = inject(&result, &secrets);
            }
            let audit = leakage_audit(&result, &secrets);
            let mut o = protocol_outcome(
                "audit",
                json!({
                    "protocol": format!("{protocol:?}").to_lowercase(),
                    "inputs": inputs,
                    "sets": sets.as_ref().map(|s| &s.0),
                    "inject_raw_secret": inject_raw_secret,
                }),
                result,
                cli,
            );
            o.report.output = json!({"protocol_output": o.report.output, "audit": audit});
            if !audit.passed {
                o.exit_code = EXIT_REJECT;
            }
            o
        }
        Command::Bench {
            pairs,
            max_r,
            max_m,
            backend,
        } => {
            if *max_r == 0 || max_m < max_r {
                return Err(CliError::Input("need 1 <= max-r <= max-m".into()));
            }
            let (mut ok, mut within, mut calls) = (0u64, 0u64, 0u64);
            for _ in 0..*pairs {
                let r = rng.gen_range(1..=*max_r);
                let m = r * rng.gen_range(1..=max_m / r);
                let f = periodic(r, m)?;
                let out = Eqpa::new(&f, (*backend).into())?.run(&mut rng)?;
                ok += (out.period == r) as u64;
                within += (out.trace.counters.fourier_calls <= fourier_call_bound(m, r)) as u64;
                calls += out.trace.counters.fourier_calls;
            }
            report(
                "bench",
                json!({"pairs": pairs, "max_r": max_r, "max_m": max_m}),
                json!({"correct": ok, "within_bound": within}),
                Counters {
                    fourier_calls: calls,
                    ..Counters::default()
                },
                cli,
            )
        }
    };
    Ok(outcome)
}

/// A copy of `result` with party 1's raw input sent as a masked multiple.
fn inject(result: &ProtocolResult, secrets: &ProtocolSecrets) -> ProtocolResult {
    let raw = match secrets {
        ProtocolSecrets::Integers(v) => v[1],
        ProtocolSecrets::Sets(s) => mpqc_core::factorint::encode_set(&s[1]).unwrap_or(1),
    };
    let last = result.transcript.messages().last();
    let message = Message {
        round: last.map_or(1, |m| m.round + 1),
        from: 1,
        to: Recipient::Party(0),
        kind: MessageKind::ClassicalInteger,
        payload: Payload {
            label: Label::MaskedMultiple,
            phase: "lcm".into(),
            value: Some(raw),
            register: None,
        },
        counters: last.map(|m| m.counters).unwrap_or_default(),
    };
    with_injected(result, message)
}

/// Parses, runs and writes outputs; returns the process exit code.
pub fn main_with_args<I, T>(
    args: I,
    stdout: &mut dyn std::io::Write,
    stderr: &mut dyn std::io::Write,
) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let start = Instant::now();
    let result = execute(&cli).and_then(|mut o| {
        if cli.timing {
            o.report.elapsed_ms = Some(start.elapsed().as_secs_f64() * 1e3);
        }
        write_files(&cli, &o)?;
        Ok(o)
    });
    match result {
        Ok(o) => {
            let json = serde_json::to_string(&o.report).expect("report serializes");
            let _ = writeln!(stdout, "{json}");
            o.exit_code
        }
        Err(e) => {
            let _ = writeln!(stderr, "{e}");
            e.exit_code()
        }
    }
}

fn write_files(cli: &Cli, o: &Outcome) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io(e.to_string());
    if let Some(path) = &cli.out {
        let json = serde_json::to_string_pretty(&o.report).expect("report serializes");
        fs::write(path, json + "\n").map_err(io)?;
    }
    if let Some(path) = &cli.transcript {
        fs::write(path, o.transcript.as_deref().unwrap_or("")).map_err(io)?;
    }
    Ok(())
}
