//! Monte-Carlo experiment harness and CSV emission.
//!
//! Everything here is seed-deterministic: every random stream is derived
//! from the master seed, a stream class, the SNR index, and the unit index
//! (channel or trial number), so results are bit-identical across runs and
//! across worker counts. BER trials fan out to a worker pool and aggregate
//! integer error counts, which are order-insensitive; AMI ensemble means
//! are reduced in channel order.
//!
//! Experiments operate on `f64` throughout.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::{ChannelRealization, RealChannel};
use crate::detector::{detect, DetectorConfig};
use crate::efaa::{run_efaa, EcvCoefficient};
use crate::error::{Error, Result};
use crate::modem::{hard_decide, llrs_in_bit_order, modulate, ModulationScheme};

/// Hard cap multiplier on the per-point bit budget: extension stops at ten
/// times the configured budget even if the error target is not met.
const BIT_CAP_FACTOR: u64 = 10;

/// Error target that ends adaptive bit-budget extension.
const TARGET_ERRORS: u64 = 100;

/// Interpolation resolution of convergence-SNR extraction, in dB.
const SNR_RESOLUTION_DB: f64 = 0.25;

/// What a sweep varies and which columns it fills.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    /// AMI trace over iterations at each SNR.
    AmiVsIter,
    /// Detector BER over iterations at each SNR.
    BerVsIter,
    /// Final-iteration AMI per SNR.
    AmiVsSnr,
    /// Final-iteration BER per SNR.
    BerVsSnr,
    /// AMI and BER side by side over iterations at each SNR.
    Overlay,
}

impl ExperimentKind {
    /// Token used in the CSV `experiment` column and on the command line.
    pub fn name(self) -> &'static str {
        match self {
            Self::AmiVsIter => "ami-vs-iter",
            Self::BerVsIter => "ber-vs-iter",
            Self::AmiVsSnr => "ami-vs-snr",
            Self::BerVsSnr => "ber-vs-snr",
            Self::Overlay => "overlay",
        }
    }

    /// Whether only the final iteration is reported.
    fn final_iteration_only(self) -> bool {
        matches!(self, Self::AmiVsSnr | Self::BerVsSnr)
    }

    /// Whether detector BER columns are produced.
    fn wants_ber(self) -> bool {
        matches!(self, Self::BerVsIter | Self::BerVsSnr | Self::Overlay)
    }

    /// Whether AMI columns are produced.
    fn wants_ami(self) -> bool {
        matches!(self, Self::AmiVsIter | Self::AmiVsSnr | Self::Overlay)
    }
}

/// Full description of one experiment run.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub nt: usize,
    pub nr: usize,
    pub scheme: ModulationScheme,
    pub snr_db_grid: Vec<f64>,
    pub max_iterations: usize,
    pub channel_ensemble: usize,
    pub bit_trials_per_point: usize,
    pub seed: u64,
    pub experiment_kind: ExperimentKind,
    pub output_path: String,
    pub workers: usize,
    pub ecv_coefficient: EcvCoefficient,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            nt: 4,
            nr: 4,
            scheme: ModulationScheme::Qpsk,
            snr_db_grid: vec![10.0],
            max_iterations: 10,
            channel_ensemble: 200,
            bit_trials_per_point: 1_000_000,
            seed: 1,
            experiment_kind: ExperimentKind::Overlay,
            output_path: String::new(),
            workers: 0,
            ecv_coefficient: EcvCoefficient::default(),
        }
    }
}

impl ExperimentConfig {
    /// Checks the count and grid invariants.
    pub fn validate(&self) -> Result<()> {
        if self.nt == 0 || self.nr == 0 {
            return Err(Error::InvalidArgument("antenna counts must be >= 1".into()));
        }
        if self.snr_db_grid.is_empty() {
            return Err(Error::InvalidArgument("SNR grid must be nonempty".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidArgument("iteration count must be >= 1".into()));
        }
        if self.channel_ensemble == 0 {
            return Err(Error::InvalidArgument("channel ensemble must be >= 1".into()));
        }
        if self.bit_trials_per_point == 0 {
            return Err(Error::InvalidArgument("bit budget must be >= 1".into()));
        }
        Ok(())
    }

    /// Bits carried per transmitted vector.
    fn bits_per_trial(&self) -> usize {
        self.nt * self.scheme.bits_per_symbol()
    }
}

/// One (SNR, iteration) row of a BER sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct BerRecord {
    pub snr_db: f64,
    pub iteration: usize,
    pub trials: u64,
    pub bit_errors: u64,
    pub bits_total: u64,
    pub ber: f64,
    pub ami: Option<f64>,
}

/// Ensemble-mean AMI trace at one SNR point.
#[derive(Debug, Clone, PartialEq)]
pub struct AmiPoint {
    pub snr_db: f64,
    /// Mean `I_L` after each iteration, averaged over the channel ensemble.
    pub mean_trace: Vec<f64>,
}

/// Outcome of a convergence-SNR search.
#[derive(Debug, Clone, PartialEq)]
pub enum ConvergenceOutcome {
    /// Threshold reached; SNR refined to 0.25 dB between grid points.
    Converged { snr_db: f64 },
    /// Threshold never reached on the configured grid.
    NotConvergedOnGrid { max_final_ami: f64 },
}

/// Independent random-stream classes hanging off the master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamClass {
    /// Channel realizations (shared between BER and AMI runs).
    Channel = 1,
    /// Transmitted bit vectors.
    Bits = 2,
    /// Receiver noise draws.
    Noise = 3,
}

fn splitmix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the seed of one random stream unit.
///
/// Pure function of its arguments, so any worker can seed any unit without
/// coordination and execution order cannot change results.
pub fn derive_seed(master: u64, class: StreamClass, snr_index: u64, unit_index: u64) -> u64 {
    let mut state = splitmix(master ^ 0x9E37_79B9_7F4A_7C15);
    state = splitmix(state ^ (class as u64).wrapping_mul(0xD1B5_4A32_D192_ED03));
    state = splitmix(state ^ snr_index.wrapping_mul(0xA24B_AED4_963E_E407));
    splitmix(state ^ unit_index.wrapping_mul(0x9FB2_1C65_1E98_DF25))
}

fn build_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot build worker pool: {e}")))
}

fn real_domain(ch: &ChannelRealization<f64>, scheme: ModulationScheme) -> RealChannel<f64> {
    match scheme {
        ModulationScheme::Bpsk => ch.to_bpsk_real(),
        ModulationScheme::Qpsk => ch.to_real_domain(),
    }
}

fn sample_ensemble(
    config: &ExperimentConfig,
    snr_index: usize,
    snr_db: f64,
) -> Result<Vec<ChannelRealization<f64>>> {
    (0..config.channel_ensemble)
        .map(|c| {
            let seed = derive_seed(config.seed, StreamClass::Channel, snr_index as u64, c as u64);
            ChannelRealization::sample(config.nt, config.nr, snr_db, &mut ChaCha8Rng::seed_from_u64(seed))
        })
        .collect()
}

/// One detector trial: returns per-iteration bit-error counts.
fn ber_trial(
    config: &ExperimentConfig,
    channels: &[RealChannel<f64>],
    snr_index: usize,
    trial_index: u64,
) -> Result<Vec<u64>> {
    let channel = &channels[(trial_index % channels.len() as u64) as usize];
    let mut bits_rng = ChaCha8Rng::seed_from_u64(derive_seed(
        config.seed,
        StreamClass::Bits,
        snr_index as u64,
        trial_index,
    ));
    let mut noise_rng = ChaCha8Rng::seed_from_u64(derive_seed(
        config.seed,
        StreamClass::Noise,
        snr_index as u64,
        trial_index,
    ));
    let bits: Vec<u8> = (0..config.bits_per_trial())
        .map(|_| u8::from(bits_rng.random_bool(0.5)))
        .collect();
    let x = modulate::<f64>(&bits, config.scheme)?;
    let y = channel.transmit(&x, &mut noise_rng)?;
    let detector_config = DetectorConfig {
        max_iterations: config.max_iterations,
        ..DetectorConfig::default()
    };
    let result = detect(channel, &y, config.scheme, &detector_config)?;
    let mut errors = Vec::with_capacity(config.max_iterations);
    for llr in &result.per_iteration_llr {
        let decided = hard_decide(&llrs_in_bit_order(llr, config.scheme)?);
        let wrong = decided.iter().zip(&bits).filter(|(a, b)| a != b).count();
        errors.push(wrong as u64);
    }
    Ok(errors)
}

/// Monte-Carlo BER sweep over the SNR grid.
///
/// Each point starts from the configured bit budget and extends in
/// whole batches until the final iteration has accumulated at least 100
/// errors or ten times the budget has been spent. Extension decisions use
/// aggregated counts only, so they are deterministic for a given seed.
pub fn run_ber(config: &ExperimentConfig) -> Result<Vec<BerRecord>> {
    config.validate()?;
    let pool = build_pool(config.workers)?;
    let bits_per_trial = config.bits_per_trial() as u64;
    let batch_trials = (config.bit_trials_per_point as u64).div_ceil(bits_per_trial).max(1);
    let cap_trials = batch_trials * BIT_CAP_FACTOR;

    let mut records = Vec::new();
    for (snr_index, &snr_db) in config.snr_db_grid.iter().enumerate() {
        let channels: Vec<RealChannel<f64>> = sample_ensemble(config, snr_index, snr_db)?
            .iter()
            .map(|ch| real_domain(ch, config.scheme))
            .collect();

        let mut errors_per_iteration = vec![0_u64; config.max_iterations];
        let mut trials_done = 0_u64;
        loop {
            let batch = batch_trials.min(cap_trials - trials_done);
            let batch_errors = pool.install(|| {
                (trials_done..trials_done + batch)
                    .into_par_iter()
                    .map(|t| ber_trial(config, &channels, snr_index, t))
                    .try_reduce(
                        || vec![0_u64; config.max_iterations],
                        |mut acc, item| {
                            for (a, b) in acc.iter_mut().zip(&item) {
                                *a += b;
                            }
                            Ok(acc)
                        },
                    )
            })?;
            for (a, b) in errors_per_iteration.iter_mut().zip(&batch_errors) {
                *a += b;
            }
            trials_done += batch;
            let final_errors = *errors_per_iteration.last().expect("at least one iteration");
            if final_errors >= TARGET_ERRORS || trials_done >= cap_trials {
                break;
            }
        }

        let bits_total = trials_done * bits_per_trial;
        for (k, &bit_errors) in errors_per_iteration.iter().enumerate() {
            records.push(BerRecord {
                snr_db,
                iteration: k + 1,
                trials: trials_done,
                bit_errors,
                bits_total,
                ber: bit_errors as f64 / bits_total as f64,
                ami: None,
            });
        }
    }
    Ok(records)
}

/// Ensemble-mean AMI traces over the SNR grid.
///
/// Channel draws reuse the same derived seeds as [`run_ber`], so overlay
/// experiments see identical channel ensembles on both sides.
pub fn run_ami(config: &ExperimentConfig) -> Result<Vec<AmiPoint>> {
    config.validate()?;
    let pool = build_pool(config.workers)?;
    let mut points = Vec::with_capacity(config.snr_db_grid.len());
    for (snr_index, &snr_db) in config.snr_db_grid.iter().enumerate() {
        let traces: Vec<Vec<f64>> = pool.install(|| {
            (0..config.channel_ensemble)
                .into_par_iter()
                .map(|c| {
                    let seed =
                        derive_seed(config.seed, StreamClass::Channel, snr_index as u64, c as u64);
                    let ch = ChannelRealization::sample(
                        config.nt,
                        config.nr,
                        snr_db,
                        &mut ChaCha8Rng::seed_from_u64(seed),
                    )?;
                    let mut trace = run_efaa(
                        &ch,
                        config.scheme,
                        config.max_iterations,
                        config.ecv_coefficient,
                    )?;
                    trace.channel_id = c as u64;
                    Ok(trace.per_iteration_i_l)
                })
                .collect::<Result<Vec<_>>>()
        })?;
        let mut mean_trace = vec![0.0; config.max_iterations];
        for trace in &traces {
            for (acc, v) in mean_trace.iter_mut().zip(trace) {
                *acc += v;
            }
        }
        for v in &mut mean_trace {
            *v /= config.channel_ensemble as f64;
        }
        points.push(AmiPoint { snr_db, mean_trace });
    }
    Ok(points)
}

/// Smallest SNR, at 0.25 dB resolution, where the final-iteration
/// ensemble-mean AMI reaches the threshold.
pub fn convergence_snr(config: &ExperimentConfig, ami_threshold: f64) -> Result<ConvergenceOutcome> {
    if !(0.0..1.0).contains(&ami_threshold) {
        return Err(Error::InvalidArgument(format!(
            "AMI threshold must lie in [0, 1), got {ami_threshold}"
        )));
    }
    if config.snr_db_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(
            "SNR grid must be strictly ascending for convergence search".into(),
        ));
    }
    let points = run_ami(config)?;
    let finals: Vec<f64> = points
        .iter()
        .map(|p| *p.mean_trace.last().expect("nonempty trace"))
        .collect();
    let Some(k) = finals.iter().position(|&v| v >= ami_threshold) else {
        let max_final_ami = finals.iter().copied().fold(0.0, f64::max);
        return Ok(ConvergenceOutcome::NotConvergedOnGrid { max_final_ami });
    };
    if k == 0 {
        return Ok(ConvergenceOutcome::Converged {
            snr_db: config.snr_db_grid[0],
        });
    }
    let (s0, s1) = (config.snr_db_grid[k - 1], config.snr_db_grid[k]);
    let (f0, f1) = (finals[k - 1], finals[k]);
    let crossing = s0 + (ami_threshold - f0) * (s1 - s0) / (f1 - f0);
    let quantized = (crossing / SNR_RESOLUTION_DB).ceil() * SNR_RESOLUTION_DB;
    Ok(ConvergenceOutcome::Converged {
        snr_db: quantized.min(s1),
    })
}

/// First 1-based iteration from which successive absolute changes all stay
/// below `tol`. `None` if the trace never settles (or is too short).
pub fn plateau_onset_absolute(trace: &[f64], tol: f64) -> Option<usize> {
    let diffs: Vec<f64> = trace.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    (0..diffs.len())
        .find(|&t| diffs[t..].iter().all(|&d| d < tol))
        .map(|t| t + 2)
}

/// First 1-based iteration from which successive relative changes all stay
/// below `rel_tol`. A step from zero to a nonzero value counts as a change.
pub fn plateau_onset_relative(trace: &[f64], rel_tol: f64) -> Option<usize> {
    let diffs: Vec<f64> = trace
        .windows(2)
        .map(|w| {
            if w[0] > 0.0 {
                (w[1] - w[0]).abs() / w[0]
            } else if w[1] == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        })
        .collect();
    (0..diffs.len())
        .find(|&t| diffs[t..].iter().all(|&d| d < rel_tol))
        .map(|t| t + 2)
}

/// Bit-exact CSV header.
pub const CSV_HEADER: &str =
    "experiment,scheme,nt,nr,snr_db,iteration,trials,bits_total,bit_errors,ber,ami,seed";

/// One CSV output row; `None` renders as an empty field.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub experiment: String,
    pub scheme: String,
    pub nt: usize,
    pub nr: usize,
    pub snr_db: f64,
    pub iteration: usize,
    pub trials: Option<u64>,
    pub bits_total: Option<u64>,
    pub bit_errors: Option<u64>,
    pub ber: Option<f64>,
    pub ami: Option<f64>,
    pub seed: u64,
}

/// Formats a float with at most the given number of significant digits,
/// positional where compact and exponent notation otherwise.
pub fn format_sig(value: f64, significant: usize) -> String {
    assert!(significant >= 1);
    if value == 0.0 {
        return "0".to_string();
    }
    if !value.is_finite() {
        return value.to_string();
    }
    let exponential = format!("{:.*e}", significant - 1, value);
    let (mantissa, exp_text) = exponential.split_once('e').expect("exponential form");
    let exp: i32 = exp_text.parse().expect("exponent");
    let negative = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(char::is_ascii_digit).collect();
    let digits = digits.trim_end_matches('0');
    let digits = if digits.is_empty() { "0" } else { digits };
    let body = if exp >= -4 && (exp as i64) < significant as i64 {
        let point = exp + 1;
        if point <= 0 {
            format!("0.{}{}", "0".repeat(point.unsigned_abs() as usize), digits)
        } else if point as usize >= digits.len() {
            format!("{}{}", digits, "0".repeat(point as usize - digits.len()))
        } else {
            format!("{}.{}", &digits[..point as usize], &digits[point as usize..])
        }
    } else if digits.len() > 1 {
        format!("{}.{}e{exp}", &digits[..1], &digits[1..])
    } else {
        format!("{digits}e{exp}")
    };
    if negative {
        format!("-{body}")
    } else {
        body
    }
}

fn opt_u64(value: Option<u64>) -> String {
    value.map(|v| v.to_string()).unwrap_or_default()
}

fn opt_float(value: Option<f64>) -> String {
    value.map(|v| format_sig(v, 9)).unwrap_or_default()
}

/// Serializes rows to `path`: fixed header, LF endings, UTF-8, floats at
/// nine significant digits.
pub fn emit_csv(rows: &[CsvRow], path: &Path) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::InvalidArgument(
            "refusing to write an empty record set".into(),
        ));
    }
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for row in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            row.experiment,
            row.scheme,
            row.nt,
            row.nr,
            format_sig(row.snr_db, 9),
            row.iteration,
            opt_u64(row.trials),
            opt_u64(row.bits_total),
            opt_u64(row.bit_errors),
            opt_float(row.ber),
            opt_float(row.ami),
            row.seed
        );
    }
    fs::write(path, out).map_err(|e| {
        Error::Io(io::Error::new(
            e.kind(),
            format!("writing {}: {e}", path.display()),
        ))
    })
}

fn parse_field<T: std::str::FromStr>(field: &str, name: &str, line: usize) -> Result<T> {
    field
        .parse()
        .map_err(|_| Error::Parse(format!("line {line}: bad `{name}` value `{field}`")))
}

fn parse_opt<T: std::str::FromStr>(field: &str, name: &str, line: usize) -> Result<Option<T>> {
    if field.is_empty() {
        Ok(None)
    } else {
        parse_field(field, name, line).map(Some)
    }
}

/// Parses CSV text produced by [`emit_csv`].
pub fn parse_csv(text: &str) -> Result<Vec<CsvRow>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == CSV_HEADER => {}
        Some((_, header)) => {
            return Err(Error::Parse(format!("unexpected header `{header}`")));
        }
        None => return Err(Error::Parse("empty input".into())),
    }
    let mut rows = Vec::new();
    for (index, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 12 {
            return Err(Error::Parse(format!(
                "line {}: expected 12 fields, got {}",
                index + 1,
                fields.len()
            )));
        }
        let n = index + 1;
        rows.push(CsvRow {
            experiment: fields[0].to_string(),
            scheme: fields[1].to_string(),
            nt: parse_field(fields[2], "nt", n)?,
            nr: parse_field(fields[3], "nr", n)?,
            snr_db: parse_field(fields[4], "snr_db", n)?,
            iteration: parse_field(fields[5], "iteration", n)?,
            trials: parse_opt(fields[6], "trials", n)?,
            bits_total: parse_opt(fields[7], "bits_total", n)?,
            bit_errors: parse_opt(fields[8], "bit_errors", n)?,
            ber: parse_opt(fields[9], "ber", n)?,
            ami: parse_opt(fields[10], "ami", n)?,
            seed: parse_field(fields[11], "seed", n)?,
        });
    }
    Ok(rows)
}

fn base_row(config: &ExperimentConfig, snr_db: f64, iteration: usize) -> CsvRow {
    CsvRow {
        experiment: config.experiment_kind.name().to_string(),
        scheme: config.scheme.name().to_string(),
        nt: config.nt,
        nr: config.nr,
        snr_db,
        iteration,
        trials: None,
        bits_total: None,
        bit_errors: None,
        ber: None,
        ami: None,
        seed: config.seed,
    }
}

/// Runs whichever sweep the config describes and renders CSV rows.
///
/// Rows are ordered by SNR grid position, then iteration; `*-vs-snr` kinds
/// keep only the final iteration per SNR point.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<CsvRow>> {
    config.validate()?;
    let kind = config.experiment_kind;
    let ber_records = if kind.wants_ber() {
        Some(run_ber(config)?)
    } else {
        None
    };
    let ami_points = if kind.wants_ami() {
        Some(run_ami(config)?)
    } else {
        None
    };

    let mut rows = Vec::new();
    for (snr_index, &snr_db) in config.snr_db_grid.iter().enumerate() {
        for iteration in 1..=config.max_iterations {
            if kind.final_iteration_only() && iteration != config.max_iterations {
                continue;
            }
            let mut row = base_row(config, snr_db, iteration);
            if let Some(records) = &ber_records {
                let record = &records[snr_index * config.max_iterations + (iteration - 1)];
                row.trials = Some(record.trials);
                row.bits_total = Some(record.bits_total);
                row.bit_errors = Some(record.bit_errors);
                row.ber = Some(record.ber);
            }
            if let Some(points) = &ami_points {
                row.ami = Some(points[snr_index].mean_trace[iteration - 1]);
                if row.trials.is_none() {
                    row.trials = Some(config.channel_ensemble as u64);
                }
            }
            rows.push(row);
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config() -> ExperimentConfig {
        ExperimentConfig {
            nt: 2,
            nr: 2,
            scheme: ModulationScheme::Qpsk,
            snr_db_grid: vec![8.0, 12.0],
            max_iterations: 3,
            channel_ensemble: 4,
            bit_trials_per_point: 2_000,
            seed: 42,
            experiment_kind: ExperimentKind::Overlay,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn derived_seeds_are_stable_and_distinct() {
        let a = derive_seed(1, StreamClass::Bits, 0, 0);
        assert_eq!(a, derive_seed(1, StreamClass::Bits, 0, 0));
        assert_ne!(a, derive_seed(1, StreamClass::Noise, 0, 0));
        assert_ne!(a, derive_seed(1, StreamClass::Bits, 1, 0));
        assert_ne!(a, derive_seed(1, StreamClass::Bits, 0, 1));
        assert_ne!(a, derive_seed(2, StreamClass::Bits, 0, 0));
    }

    #[test]
    fn format_sig_reference_cases() {
        assert_eq!(format_sig(0.0, 9), "0");
        assert_eq!(format_sig(24.0, 9), "24");
        assert_eq!(format_sig(6.0206, 9), "6.0206");
        assert_eq!(format_sig(-1.5, 9), "-1.5");
        assert_eq!(format_sig(0.004677734981047265, 9), "0.00467773498");
        assert_eq!(format_sig(1.5374597944280351e-12, 9), "1.53745979e-12");
        assert_eq!(format_sig(10_000_000.0, 9), "10000000");
        assert_eq!(format_sig(1e10, 9), "1e10");
        assert_eq!(format_sig(0.5, 9), "0.5");
        assert_eq!(format_sig(0.12345678949, 9), "0.123456789");
        assert_eq!(format_sig(0.9999999999, 9), "1");
    }

    #[test]
    fn plateau_onset_detects_settling() {
        let trace = [0.1, 0.5, 0.8, 0.9005, 0.901, 0.9012];
        assert_eq!(plateau_onset_absolute(&trace, 1e-3), Some(5));
        assert_eq!(plateau_onset_absolute(&[1.0, 1.0], 1e-3), Some(2));
        assert_eq!(plateau_onset_absolute(&[0.0, 0.5, 1.0], 1e-3), None);

        let bers = [0.5, 0.1, 0.02, 0.0199, 0.0198];
        assert_eq!(plateau_onset_relative(&bers, 0.05), Some(4));
        assert_eq!(plateau_onset_relative(&[0.0, 0.0, 0.1], 0.05), None);
        assert_eq!(plateau_onset_relative(&[0.1, 0.0, 0.0], 0.05), Some(3));
    }

    #[test]
    fn ber_runs_are_deterministic_across_worker_counts() {
        let mut config = tiny_config();
        config.experiment_kind = ExperimentKind::BerVsIter;
        let one = run_ber(&config).unwrap();
        let again = run_ber(&config).unwrap();
        assert_eq!(one, again);

        config.workers = 3;
        let parallel = run_ber(&config).unwrap();
        assert_eq!(one, parallel);
    }

    #[test]
    fn noiseless_ber_is_zero() {
        let mut config = tiny_config();
        config.nr = 4;
        config.snr_db_grid = vec![600.0];
        config.bit_trials_per_point = 400;
        let records = run_ber(&config).unwrap();
        assert!(records.iter().all(|r| r.bit_errors == 0));
        // The error target is unreachable, so extension must stop at the cap.
        let expected_trials = 100 * BIT_CAP_FACTOR;
        assert!(records.iter().all(|r| r.trials == expected_trials));
    }

    #[test]
    fn ber_decreases_with_snr_at_final_iteration() {
        let mut config = tiny_config();
        config.snr_db_grid = vec![0.0, 10.0, 20.0];
        config.bit_trials_per_point = 20_000;
        let records = run_ber(&config).unwrap();
        let finals: Vec<f64> = records
            .iter()
            .filter(|r| r.iteration == config.max_iterations)
            .map(|r| r.ber)
            .collect();
        assert!(finals[0] > finals[1] && finals[1] > finals[2]);
    }

    #[test]
    fn ami_run_matches_direct_recursion() {
        let mut config = tiny_config();
        config.channel_ensemble = 1;
        config.snr_db_grid = vec![12.0];
        let points = run_ami(&config).unwrap();

        let seed = derive_seed(config.seed, StreamClass::Channel, 0, 0);
        let ch = ChannelRealization::sample(
            config.nt,
            config.nr,
            12.0,
            &mut ChaCha8Rng::seed_from_u64(seed),
        )
        .unwrap();
        let trace = run_efaa(
            &ch,
            config.scheme,
            config.max_iterations,
            config.ecv_coefficient,
        )
        .unwrap();
        assert_eq!(points[0].mean_trace, trace.per_iteration_i_l);
    }

    #[test]
    fn convergence_search_handles_all_outcomes() {
        let mut config = tiny_config();
        config.nt = 4;
        config.nr = 4;
        config.channel_ensemble = 20;
        config.max_iterations = 10;
        config.snr_db_grid = vec![14.0, 18.0, 22.0, 26.0];

        match convergence_snr(&config, 0.0).unwrap() {
            ConvergenceOutcome::Converged { snr_db } => assert_eq!(snr_db, 14.0),
            other => panic!("expected convergence at the first point, got {other:?}"),
        }

        match convergence_snr(&config, 0.99).unwrap() {
            ConvergenceOutcome::Converged { snr_db } => {
                assert!((14.0..=26.0).contains(&snr_db));
                let steps = snr_db / SNR_RESOLUTION_DB;
                assert!((steps - steps.round()).abs() < 1e-9);
            }
            other => panic!("expected convergence on the grid, got {other:?}"),
        }

        config.snr_db_grid = vec![-20.0, -15.0];
        match convergence_snr(&config, 0.999).unwrap() {
            ConvergenceOutcome::NotConvergedOnGrid { max_final_ami } => {
                assert!(max_final_ami < 0.999);
            }
            other => panic!("expected the not-converged sentinel, got {other:?}"),
        }

        config.snr_db_grid = vec![3.0, 2.0];
        assert!(convergence_snr(&config, 0.5).is_err());
    }

    #[test]
    fn csv_round_trips_canonically() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rows.csv");
        let mut config = tiny_config();
        config.bit_trials_per_point = 1_000;
        let rows = run_experiment(&config).unwrap();
        emit_csv(&rows, &path).unwrap();

        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with(CSV_HEADER));
        assert!(!text.contains('\r'));

        let parsed = parse_csv(&text).unwrap();
        assert_eq!(parsed.len(), rows.len());
        for (a, b) in parsed.iter().zip(&rows) {
            assert_eq!(a.experiment, b.experiment);
            assert_eq!(a.scheme, b.scheme);
            assert_eq!((a.nt, a.nr, a.iteration, a.seed), (b.nt, b.nr, b.iteration, b.seed));
            assert_eq!(a.trials, b.trials);
            assert_eq!(a.bits_total, b.bits_total);
            assert_eq!(a.bit_errors, b.bit_errors);
        }

        let second = dir.path().join("rows2.csv");
        emit_csv(&parsed, &second).unwrap();
        let reparsed = parse_csv(&fs::read_to_string(&second).unwrap()).unwrap();
        let resecond = dir.path().join("rows3.csv");
        emit_csv(&reparsed, &resecond).unwrap();
        assert_eq!(
            fs::read_to_string(&second).unwrap(),
            fs::read_to_string(&resecond).unwrap()
        );
    }

    #[test]
    fn emit_rejects_empty_and_bad_paths() {
        assert!(emit_csv(&[], Path::new("/tmp/should-not-exist.csv")).is_err());
        let rows = vec![base_row(&tiny_config(), 1.0, 1)];
        let err = emit_csv(&rows, Path::new("/nonexistent-dir/x.csv")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent-dir/x.csv"));
    }

    #[test]
    fn parse_rejects_malformed_input() {
        assert!(parse_csv("").is_err());
        assert!(parse_csv("wrong,header\n").is_err());
        let bad_row = format!("{CSV_HEADER}\noverlay,qpsk,4\n");
        assert!(parse_csv(&bad_row).is_err());
        let bad_value = format!("{CSV_HEADER}\noverlay,qpsk,x,4,10,1,,,,,,1\n");
        assert!(parse_csv(&bad_value).is_err());
    }

    #[test]
    fn experiment_kinds_shape_their_rows() {
        let mut config = tiny_config();
        config.bit_trials_per_point = 500;

        config.experiment_kind = ExperimentKind::AmiVsIter;
        let ami_rows = run_experiment(&config).unwrap();
        assert_eq!(ami_rows.len(), 2 * config.max_iterations);
        assert!(ami_rows.iter().all(|r| r.ber.is_none() && r.ami.is_some()));

        config.experiment_kind = ExperimentKind::BerVsSnr;
        let ber_rows = run_experiment(&config).unwrap();
        assert_eq!(ber_rows.len(), 2);
        assert!(ber_rows
            .iter()
            .all(|r| r.iteration == config.max_iterations && r.ami.is_none() && r.ber.is_some()));

        config.experiment_kind = ExperimentKind::Overlay;
        let overlay_rows = run_experiment(&config).unwrap();
        assert!(overlay_rows.iter().all(|r| r.ber.is_some() && r.ami.is_some()));
    }

    #[test]
    fn config_validation_catches_degenerate_setups() {
        let mut config = tiny_config();
        config.snr_db_grid.clear();
        assert!(config.validate().is_err());
        let mut config = tiny_config();
        config.channel_ensemble = 0;
        assert!(config.validate().is_err());
        let mut config = tiny_config();
        config.max_iterations = 0;
        assert!(config.validate().is_err());
    }
}
