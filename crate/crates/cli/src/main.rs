//! Command-line front end: resolves an experiment config from flags, an
//! optional key=value config file, and environment fallbacks, then
//! dispatches to the harness and writes CSV.
//!
//! Exit codes: 0 success, 1 runtime or I/O failure, 2 invalid arguments.

mod selftest;

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use fg_mimo_core::efaa::EcvCoefficient;
use fg_mimo_core::harness::{emit_csv, run_experiment, ExperimentConfig, ExperimentKind};
use fg_mimo_core::ModulationScheme;

#[derive(Parser)]
#[command(
    name = "fg-mimo",
    version,
    about = "Factor-graph iterative MIMO detection: Monte-Carlo and mutual-information sweeps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mutual-information trace over iterations at each SNR
    #[command(name = "ami-vs-iter")]
    AmiVsIter(RunArgs),
    /// Detector bit error rate over iterations at each SNR
    #[command(name = "ber-vs-iter")]
    BerVsIter(RunArgs),
    /// Final-iteration mutual information per SNR
    #[command(name = "ami-vs-snr")]
    AmiVsSnr(RunArgs),
    /// Final-iteration bit error rate per SNR
    #[command(name = "ber-vs-snr")]
    BerVsSnr(RunArgs),
    /// Mutual information and bit error rate side by side
    #[command(name = "overlay")]
    Overlay(RunArgs),
    /// Run the built-in oracle and invariant suites
    #[command(name = "selftest")]
    Selftest,
}

#[derive(Args, Debug, Default)]
struct RunArgs {
    /// Transmit antennas
    #[arg(long)]
    nt: Option<usize>,
    /// Receive antennas
    #[arg(long)]
    nr: Option<usize>,
    /// Modulation: bpsk or qpsk
    #[arg(long = "mod")]
    modulation: Option<String>,
    /// SNR in dB: a single value A or a range A:S:B
    #[arg(long)]
    snr: Option<String>,
    /// Detector / recursion iterations
    #[arg(long)]
    iters: Option<usize>,
    /// Bit budget per SNR point
    #[arg(long)]
    trials: Option<usize>,
    /// Channel ensemble size
    #[arg(long)]
    channels: Option<usize>,
    /// Master seed (falls back to FG_MIMO_SEED, then 1)
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV path (default: the subcommand name plus .csv)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads, 0 = auto
    #[arg(long)]
    workers: Option<usize>,
    /// key=value config file; explicit flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    /// Print the fully resolved config and exit
    #[arg(long)]
    print_config: bool,
    /// ECV coefficient form: lemma1 or theorem3 (default theorem3)
    #[arg(long = "ecv-coefficient-override")]
    ecv_coefficient_override: Option<String>,
}

/// Failure that maps onto a process exit code.
struct CliError {
    code: i32,
    message: String,
}

impl CliError {
    fn invalid(message: String) -> Self {
        Self { code: 2, message }
    }
}

struct Resolved {
    config: ExperimentConfig,
    out: PathBuf,
    snr_text: String,
    print_config: bool,
}

fn parse_modulation(text: &str) -> Result<ModulationScheme, String> {
    match text {
        "bpsk" => Ok(ModulationScheme::Bpsk),
        "qpsk" => Ok(ModulationScheme::Qpsk),
        other => Err(format!("expected bpsk or qpsk, got `{other}`")),
    }
}

fn parse_coefficient(text: &str) -> Result<EcvCoefficient, String> {
    match text {
        "lemma1" => Ok(EcvCoefficient::Full),
        "theorem3" => Ok(EcvCoefficient::Halved),
        other => Err(format!("expected lemma1 or theorem3, got `{other}`")),
    }
}

/// Parses `A` or `A:S:B` into an inclusive SNR grid in dB.
fn parse_snr(text: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = text.split(':').collect();
    let number = |p: &str| {
        p.parse::<f64>()
            .map_err(|_| format!("`{p}` is not a number"))
    };
    match parts.as_slice() {
        [single] => Ok(vec![number(single)?]),
        [start, step, stop] => {
            let (a, s, b) = (number(start)?, number(step)?, number(stop)?);
            if s <= 0.0 {
                return Err(format!("step must be positive, got {s}"));
            }
            if b < a {
                return Err(format!("stop {b} is below start {a}"));
            }
            let count = ((b - a) / s + 1e-9).floor() as usize + 1;
            Ok((0..count).map(|k| a + k as f64 * s).collect())
        }
        _ => Err("expected A or A:S:B".to_string()),
    }
}

/// Reads a key=value config file; `#` starts a comment line.
fn read_config_file(path: &PathBuf) -> Result<HashMap<String, String>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError {
        code: 2,
        message: format!("--config: cannot read {}: {e}", path.display()),
    })?;
    let known = [
        "nt", "nr", "mod", "snr", "iters", "trials", "channels", "seed", "out", "workers",
        "ecv-coefficient-override",
    ];
    let mut map = HashMap::new();
    for (index, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::invalid(format!(
                "--config: line {} is not key=value: `{line}`",
                index + 1
            )));
        };
        let key = key.trim();
        if !known.contains(&key) {
            return Err(CliError::invalid(format!(
                "--config: unknown key `{key}` on line {}",
                index + 1
            )));
        }
        map.insert(key.to_string(), value.trim().to_string());
    }
    Ok(map)
}

/// Picks a field value with flag > config file precedence, parsing the
/// file text with the same parser as the flag.
fn pick<T>(
    flag_name: &str,
    flag: Option<T>,
    file: &HashMap<String, String>,
    file_key: &str,
    parse: impl Fn(&str) -> Result<T, String>,
) -> Result<Option<T>, CliError> {
    if flag.is_some() {
        return Ok(flag);
    }
    match file.get(file_key) {
        Some(text) => parse(text)
            .map(Some)
            .map_err(|e| CliError::invalid(format!("invalid value for {flag_name} (from config file): {e}"))),
        None => Ok(None),
    }
}

fn parse_count(text: &str) -> Result<usize, String> {
    text.parse()
        .map_err(|_| format!("`{text}` is not a nonnegative integer"))
}

fn required<T>(name: &str, value: Option<T>) -> Result<T, CliError> {
    value.ok_or_else(|| CliError::invalid(format!("missing required flag {name}")))
}

fn resolve(kind: ExperimentKind, args: RunArgs) -> Result<Resolved, CliError> {
    let file = match &args.config {
        Some(path) => read_config_file(path)?,
        None => HashMap::new(),
    };

    let nt = required("--nt", pick("--nt", args.nt, &file, "nt", parse_count)?)?;
    let nr = required("--nr", pick("--nr", args.nr, &file, "nr", parse_count)?)?;

    let modulation = args
        .modulation
        .as_deref()
        .map(parse_modulation)
        .transpose()
        .map_err(|e| CliError::invalid(format!("invalid value for --mod: {e}")))?;
    let scheme = required("--mod", pick("--mod", modulation, &file, "mod", parse_modulation)?)?;

    let snr_flag = args
        .snr
        .as_deref()
        .map(|t| parse_snr(t).map(|grid| (t.to_string(), grid)))
        .transpose()
        .map_err(|e| CliError::invalid(format!("invalid value for --snr: {e}")))?;
    let (snr_text, snr_db_grid) = required(
        "--snr",
        pick("--snr", snr_flag, &file, "snr", |t| {
            parse_snr(t).map(|grid| (t.to_string(), grid))
        })?,
    )?;

    let coefficient_flag = args
        .ecv_coefficient_override
        .as_deref()
        .map(parse_coefficient)
        .transpose()
        .map_err(|e| {
            CliError::invalid(format!("invalid value for --ecv-coefficient-override: {e}"))
        })?;
    let ecv_coefficient = pick(
        "--ecv-coefficient-override",
        coefficient_flag,
        &file,
        "ecv-coefficient-override",
        parse_coefficient,
    )?
    .unwrap_or_default();

    let seed = match pick("--seed", args.seed, &file, "seed", |t| {
        t.parse().map_err(|_| format!("`{t}` is not a u64"))
    })? {
        Some(seed) => seed,
        None => match std::env::var("FG_MIMO_SEED") {
            Ok(text) => text.parse().map_err(|_| {
                CliError::invalid(format!("FG_MIMO_SEED is not a u64: `{text}`"))
            })?,
            Err(_) => 1,
        },
    };

    let defaults = ExperimentConfig::default();
    let config = ExperimentConfig {
        nt,
        nr,
        scheme,
        snr_db_grid,
        max_iterations: pick("--iters", args.iters, &file, "iters", parse_count)?
            .unwrap_or(defaults.max_iterations),
        channel_ensemble: pick("--channels", args.channels, &file, "channels", parse_count)?
            .unwrap_or(defaults.channel_ensemble),
        bit_trials_per_point: pick("--trials", args.trials, &file, "trials", parse_count)?
            .unwrap_or(defaults.bit_trials_per_point),
        seed,
        experiment_kind: kind,
        output_path: String::new(),
        workers: pick("--workers", args.workers, &file, "workers", parse_count)?
            .unwrap_or(defaults.workers),
        ecv_coefficient,
    };
    config
        .validate()
        .map_err(|e| CliError::invalid(format!("invalid arguments: {e}")))?;

    let out = match pick("--out", args.out, &file, "out", |t| Ok(PathBuf::from(t)))? {
        Some(path) => path,
        None => PathBuf::from(format!("{}.csv", kind.name())),
    };

    Ok(Resolved {
        config,
        out,
        snr_text,
        print_config: args.print_config,
    })
}

fn coefficient_token(coefficient: EcvCoefficient) -> &'static str {
    match coefficient {
        EcvCoefficient::Halved => "theorem3",
        EcvCoefficient::Full => "lemma1",
    }
}

/// Renders the resolved config in the config-file key=value format.
fn render_config(resolved: &Resolved) -> String {
    let c = &resolved.config;
    let mut text = String::new();
    let _ = writeln!(text, "subcommand={}", c.experiment_kind.name());
    let _ = writeln!(text, "nt={}", c.nt);
    let _ = writeln!(text, "nr={}", c.nr);
    let _ = writeln!(text, "mod={}", c.scheme.name());
    let _ = writeln!(text, "snr={}", resolved.snr_text);
    let _ = writeln!(text, "iters={}", c.max_iterations);
    let _ = writeln!(text, "trials={}", c.bit_trials_per_point);
    let _ = writeln!(text, "channels={}", c.channel_ensemble);
    let _ = writeln!(text, "seed={}", c.seed);
    let _ = writeln!(text, "workers={}", c.workers);
    let _ = writeln!(text, "ecv-coefficient-override={}", coefficient_token(c.ecv_coefficient));
    let _ = writeln!(text, "out={}", resolved.out.display());
    text
}

/// Stable 64-bit FNV-1a digest of the rendered config.
fn config_digest(rendered: &str) -> u64 {
    let mut hash = 0xCBF2_9CE4_8422_2325_u64;
    for byte in rendered.bytes() {
        hash ^= u64::from(byte);
        hash = hash.wrapping_mul(0x0000_0100_0000_01B3);
    }
    hash
}

fn execute(kind: ExperimentKind, args: RunArgs) -> i32 {
    let resolved = match resolve(kind, args) {
        Ok(resolved) => resolved,
        Err(e) => {
            eprintln!("error: {}", e.message);
            return e.code;
        }
    };
    let rendered = render_config(&resolved);
    if resolved.print_config {
        print!("{rendered}");
        return 0;
    }
    let started = Instant::now();
    let written = run_experiment(&resolved.config)
        .and_then(|rows| emit_csv(&rows, &resolved.out).map(|()| rows.len()));
    match written {
        Ok(rows) => {
            println!(
                "wrote {rows} rows to {} in {:.2} s (config digest {:016x})",
                resolved.out.display(),
                started.elapsed().as_secs_f64(),
                config_digest(&rendered)
            );
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn main() {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::AmiVsIter(args) => execute(ExperimentKind::AmiVsIter, args),
        Command::BerVsIter(args) => execute(ExperimentKind::BerVsIter, args),
        Command::AmiVsSnr(args) => execute(ExperimentKind::AmiVsSnr, args),
        Command::BerVsSnr(args) => execute(ExperimentKind::BerVsSnr, args),
        Command::Overlay(args) => execute(ExperimentKind::Overlay, args),
        Command::Selftest => selftest::run(),
    };
    std::process::exit(code);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snr_specs_parse() {
        assert_eq!(parse_snr("9").unwrap(), vec![9.0]);
        assert_eq!(parse_snr("-3.5").unwrap(), vec![-3.5]);
        assert_eq!(parse_snr("0:0.5:1").unwrap(), vec![0.0, 0.5, 1.0]);
        let grid = parse_snr("0:0.5:24").unwrap();
        assert_eq!(grid.len(), 49);
        assert!((grid[48] - 24.0).abs() < 1e-9);
        assert!(parse_snr("1:0:2").is_err());
        assert!(parse_snr("5:1:2").is_err());
        assert!(parse_snr("a").is_err());
        assert!(parse_snr("1:2").is_err());
    }

    #[test]
    fn modulation_and_coefficient_tokens_parse() {
        assert_eq!(parse_modulation("bpsk").unwrap(), ModulationScheme::Bpsk);
        assert_eq!(parse_modulation("qpsk").unwrap(), ModulationScheme::Qpsk);
        assert!(parse_modulation("qam").is_err());
        assert_eq!(parse_coefficient("lemma1").unwrap(), EcvCoefficient::Full);
        assert_eq!(parse_coefficient("theorem3").unwrap(), EcvCoefficient::Halved);
        assert!(parse_coefficient("other").is_err());
    }

    #[test]
    fn digest_is_stable_and_content_sensitive() {
        let a = config_digest("nt=4\nnr=4\n");
        assert_eq!(a, config_digest("nt=4\nnr=4\n"));
        assert_ne!(a, config_digest("nt=4\nnr=8\n"));
    }
}
