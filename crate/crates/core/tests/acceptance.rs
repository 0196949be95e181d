//! Acceptance gate: one test per criterion, each printing a single
//! PASS/FAIL line with the measured quantities before asserting.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the
//! verdict lines for passing criteria too.

use std::time::Instant;

use fg_mimo_core::channel::{realify, ChannelRealization};
use fg_mimo_core::detector::{detect, DetectorConfig};
use fg_mimo_core::efaa::{ecv_update, symbol_variance, var_psi_update, EcvCoefficient};
use fg_mimo_core::grid::Grid;
use fg_mimo_core::harness::{
    convergence_snr, derive_seed, emit_csv, plateau_onset_absolute, plateau_onset_relative,
    run_ami, run_ber, run_experiment, ConvergenceOutcome, ExperimentConfig, ExperimentKind,
    StreamClass,
};
use fg_mimo_core::modem::{hard_decide, llrs_in_bit_order, modulate, modulate_complex};
use fg_mimo_core::numerics::{
    erf, erfc, gauss_legendre_nodes, j_function, mutual_information_quadrature, QuadratureSpec,
};
use fg_mimo_core::ModulationScheme;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(number: usize, name: &str, pass: bool, details: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!("criterion {number} ({name}): {verdict} - {details}");
    assert!(pass, "criterion {number} ({name}) failed: {details}");
}

#[test]
fn c1_j_function_fidelity() {
    let start = Instant::now();
    let spec = QuadratureSpec::default();
    let mut worst = 0.0_f64;
    let mut worst_sigma = 0.0_f64;
    for k in 1..=100 {
        let sigma = 0.1 * k as f64;
        let fitted = j_function(sigma).unwrap();
        let reference = mutual_information_quadrature(sigma * sigma, &spec).unwrap();
        let err = (fitted - reference).abs();
        if err > worst {
            worst = err;
            worst_sigma = sigma;
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let pass = worst <= 5e-3 && elapsed < 5.0;
    report(
        1,
        "j-function fidelity",
        pass,
        &format!(
            "max |fit - quadrature| = {worst:.2e} at sigma = {worst_sigma:.1} \
             (tol 5e-3) over 100 points in {elapsed:.2} s (budget 5 s)"
        ),
    );
}

/// Integrates `f` over `[a, b]` with the supplied Gauss-Legendre rule.
fn gl_integral(rule: &(Vec<f64>, Vec<f64>), f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    rule.0
        .iter()
        .zip(&rule.1)
        .map(|(&x, &w)| w * f(mid + half * x))
        .sum::<f64>()
        * half
}

#[test]
fn c2_decision_integral_closed_forms() {
    let start = Instant::now();
    let rule = gauss_legendre_nodes(4001);
    let mut worst = 0.0_f64;
    for &v in &[0.5_f64, 2.0, 8.0, 32.0] {
        let arg = (v / 8.0).sqrt();
        let right = 0.25 * (1.0 + erf(arg).unwrap());
        let wrong = 0.25 * erfc(arg).unwrap();
        let sd = v.sqrt();
        let reach = 45.0 * sd;
        for &(mean, lo, hi, closed) in &[
            (v / 2.0, 0.0, v / 2.0 + reach, right),
            (v / 2.0, v / 2.0 - reach, 0.0, wrong),
            (-v / 2.0, -v / 2.0 - reach, 0.0, right),
            (-v / 2.0, 0.0, -v / 2.0 + reach, wrong),
        ] {
            let norm = 1.0 / (2.0 * (2.0 * std::f64::consts::PI * v).sqrt());
            let numeric = gl_integral(
                &rule,
                |x| norm * (-(x - mean) * (x - mean) / (2.0 * v)).exp(),
                lo,
                hi,
            );
            worst = worst.max((numeric - closed).abs());
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let pass = worst <= 1e-9 && elapsed < 1.0;
    report(
        2,
        "decision integral closed forms",
        pass,
        &format!(
            "max |quadrature - closed form| = {worst:.2e} (tol 1e-9) across 16 \
             integrals in {elapsed:.2} s (budget 1 s)"
        ),
    );
}

#[test]
fn c3_real_domain_equivalence() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0_f64;
    for _ in 0..1000 {
        let nt = rng.random_range(1..=16);
        let nr = rng.random_range(1..=16);
        let ch = ChannelRealization::<f64>::sample(nt, nr, 10.0, &mut rng).unwrap();
        let bits: Vec<u8> = (0..2 * nt).map(|_| u8::from(rng.random_bool(0.5))).collect();
        let x = modulate_complex::<f64>(&bits).unwrap();
        let complex_y = ch.propagate(&x).unwrap();
        let real = ch.to_real_domain();
        let real_y = real.propagate(&realify(&x)).unwrap();
        for (a, b) in realify(&complex_y).iter().zip(&real_y) {
            worst = worst.max((a - b).abs());
        }
    }
    let pass = worst <= 1e-12;
    report(
        3,
        "real-domain equivalence",
        pass,
        &format!("max |complex - real| = {worst:.2e} (tol 1e-12) over 1000 random systems"),
    );
}

#[test]
fn c4_mid_size_convergence() {
    let mut pass = true;
    let mut details = Vec::new();
    for &n in &[4_usize, 16] {
        let config = ExperimentConfig {
            nt: n,
            nr: n,
            scheme: ModulationScheme::Qpsk,
            snr_db_grid: vec![24.0],
            max_iterations: 10,
            channel_ensemble: 200,
            bit_trials_per_point: 1_000_000,
            seed: 1,
            ..ExperimentConfig::default()
        };

        let ami = run_ami(&config).unwrap();
        let i5 = ami[0].mean_trace[4];
        let ami_ok = i5 >= 0.99;

        let records = run_ber(&config).unwrap();
        let at = |iter: usize| records.iter().find(|r| r.iteration == iter).unwrap();
        let (r5, r10) = (at(5), at(10));
        let bits = r5.bits_total as f64;
        let sigma = (r5.ber * (1.0 - r5.ber) / bits).sqrt();
        let gap = (r5.ber - r10.ber).abs();
        let ber_ok = gap <= 2.0 * sigma;

        pass &= ami_ok && ber_ok;
        details.push(format!(
            "{n}x{n}: I_L@5 = {i5:.4} (>= 0.99 {}), BER@5 = {:.3e} vs BER@10 = {:.3e}, \
             |gap| = {:.1} binomial sigma (<= 2 {})",
            if ami_ok { "ok" } else { "violated" },
            r5.ber,
            r10.ber,
            gap / sigma,
            if ber_ok { "ok" } else { "violated" },
        ));
    }
    report(4, "mid-size convergence", pass, &details.join("; "));
}

#[test]
fn c5_massive_mimo_plateau_alignment() {
    let config_128 = ExperimentConfig {
        nt: 128,
        nr: 128,
        scheme: ModulationScheme::Qpsk,
        snr_db_grid: vec![9.0],
        max_iterations: 25,
        channel_ensemble: 200,
        bit_trials_per_point: 100_000,
        seed: 1,
        ..ExperimentConfig::default()
    };

    let ami = run_ami(&config_128).unwrap();
    let ami_onset = plateau_onset_absolute(&ami[0].mean_trace, 1e-3);
    let ami_ok = ami_onset.is_some_and(|t| (13..=19).contains(&t));

    let records = run_ber(&config_128).unwrap();
    let ber_trace: Vec<f64> = records.iter().map(|r| r.ber).collect();
    let ber_onset = plateau_onset_relative(&ber_trace, 0.05);
    let aligned = match (ami_onset, ber_onset) {
        (Some(a), Some(b)) => a.abs_diff(b) <= 3,
        _ => false,
    };

    let smoke_start = Instant::now();
    let config_64 = ExperimentConfig {
        nt: 64,
        nr: 64,
        ..config_128.clone()
    };
    run_ami(&config_64).unwrap();
    run_ber(&config_64).unwrap();
    let smoke = smoke_start.elapsed().as_secs_f64();
    let smoke_ok = smoke < 300.0;

    let pass = ami_ok && aligned && smoke_ok;
    report(
        5,
        "massive-mimo plateau alignment",
        pass,
        &format!(
            "128x128 @ 9 dB: AMI onset = {ami_onset:?} (window 13..=19), BER onset = \
             {ber_onset:?} (within 3 of AMI: {aligned}), 64x64 smoke = {smoke:.0} s (budget 300 s)"
        ),
    );
}

#[test]
fn c6_convergence_snr_targets() {
    let rows: [(usize, f64, f64, f64, f64); 4] = [
        (256, 3.0, 13.0, 4.5, 1.0),
        (128, 5.0, 13.0, 7.0, 1.0),
        (16, 11.0, 17.0, 14.0, 1.5),
        (4, 13.0, 20.0, 17.0, 1.5),
    ];
    let mut pass = true;
    let mut details = Vec::new();
    for (n, lo, hi, target, tol) in rows {
        let steps = ((hi - lo).round() as usize) + 1;
        let config = ExperimentConfig {
            nt: n,
            nr: n,
            scheme: ModulationScheme::Qpsk,
            snr_db_grid: (0..steps).map(|k| lo + k as f64).collect(),
            max_iterations: 40,
            channel_ensemble: 200,
            seed: 1,
            ..ExperimentConfig::default()
        };
        let outcome = convergence_snr(&config, 0.999).unwrap();
        let (ok, measured) = match outcome {
            ConvergenceOutcome::Converged { snr_db } => {
                ((snr_db - target).abs() <= tol, format!("{snr_db:.2} dB"))
            }
            ConvergenceOutcome::NotConvergedOnGrid { max_final_ami } => (
                false,
                format!("not converged on [{lo}, {hi}] dB (max AMI {max_final_ami:.4})"),
            ),
        };
        pass &= ok;
        details.push(format!(
            "{n} antennas: {measured} vs {target} +/- {tol} dB ({})",
            if ok { "ok" } else { "violated" }
        ));
    }
    report(6, "convergence-snr targets", pass, &details.join("; "));
}

/// Mean over columns of the output-LLR variance predicted by the
/// recursion, captured after the requested iterations.
fn efaa_output_variances(
    ch: &ChannelRealization<f64>,
    capture: &[usize],
    max_iterations: usize,
) -> Vec<f64> {
    let real = ch.to_real_domain();
    let (rows, cols) = (real.rows(), real.cols());
    let mut h_abs_sq = Grid::zeros(rows, cols);
    for i in 0..rows {
        for l in 0..cols {
            let h = real.hr.at(i, l);
            *h_abs_sq.at_mut(i, l) = h * h;
        }
    }
    let mut var_psi = Grid::zeros(rows, cols);
    let mut symbol_var = Grid::zeros(rows, cols);
    let mut captured = Vec::new();
    for t in 1..=max_iterations {
        for i in 0..rows {
            for l in 0..cols {
                *symbol_var.at_mut(i, l) =
                    symbol_variance(var_psi.at(i, l), ModulationScheme::Qpsk, t);
            }
        }
        let var_omega = ecv_update(
            &h_abs_sq,
            real.sigma_real_sq,
            &symbol_var,
            ModulationScheme::Qpsk,
            EcvCoefficient::default(),
        );
        if capture.contains(&t) {
            let sums = var_omega.col_sums();
            captured.push(sums.iter().sum::<f64>() / cols as f64);
        }
        var_psi = var_psi_update(&var_omega);
    }
    captured
}

#[test]
fn c7_variance_cross_validation() {
    const CHANNELS: usize = 2000;
    const TRIALS: usize = 10;
    const ITERATIONS: usize = 10;
    let capture = [1, ITERATIONS];
    let detector_config = DetectorConfig {
        max_iterations: ITERATIONS,
        ..DetectorConfig::default()
    };

    let mut pass = true;
    let mut details = Vec::new();
    for (snr_index, &snr_db) in [8.0, 16.0, 24.0].iter().enumerate() {
        let mut predicted = [0.0_f64; 2];
        let mut measured = [0.0_f64; 2];
        for c in 0..CHANNELS {
            let channel_seed = derive_seed(7, StreamClass::Channel, snr_index as u64, c as u64);
            let ch = ChannelRealization::<f64>::sample(
                4,
                4,
                snr_db,
                &mut ChaCha8Rng::seed_from_u64(channel_seed),
            )
            .unwrap();
            for (slot, value) in efaa_output_variances(&ch, &capture, ITERATIONS)
                .into_iter()
                .enumerate()
            {
                predicted[slot] += value;
            }

            let real = ch.to_real_domain();
            let cols = real.cols();
            let mut samples = vec![[[0.0_f64; TRIALS]; 2]; cols];
            #[allow(clippy::needless_range_loop)]
            for r in 0..TRIALS {
                let unit = (c * TRIALS + r) as u64;
                let mut bits_rng = ChaCha8Rng::seed_from_u64(derive_seed(
                    7,
                    StreamClass::Bits,
                    snr_index as u64,
                    unit,
                ));
                let mut noise_rng = ChaCha8Rng::seed_from_u64(derive_seed(
                    7,
                    StreamClass::Noise,
                    snr_index as u64,
                    unit,
                ));
                let bits: Vec<u8> = (0..8).map(|_| u8::from(bits_rng.random_bool(0.5))).collect();
                let x = modulate::<f64>(&bits, ModulationScheme::Qpsk).unwrap();
                let y = real.transmit(&x, &mut noise_rng).unwrap();
                let result = detect(&real, &y, ModulationScheme::Qpsk, &detector_config).unwrap();
                for (slot, &t) in capture.iter().enumerate() {
                    let llr = &result.per_iteration_llr[t - 1];
                    for l in 0..cols {
                        samples[l][slot][r] = x[l].signum() * llr[l];
                    }
                }
            }
            for column in &samples {
                for (slot, trials) in column.iter().enumerate() {
                    let mean = trials.iter().sum::<f64>() / TRIALS as f64;
                    let var = trials.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>()
                        / (TRIALS - 1) as f64;
                    measured[slot] += var / cols as f64;
                }
            }
        }

        for slot in 0..2 {
            predicted[slot] /= CHANNELS as f64;
            measured[slot] /= CHANNELS as f64;
            let ratio = measured[slot] / predicted[slot];
            let ok = (ratio - 1.0).abs() <= 0.10;
            pass &= ok;
            details.push(format!(
                "rho = {snr_db} dB iter {}: measured/predicted = {ratio:.3} ({})",
                capture[slot],
                if ok { "ok" } else { "violated" }
            ));
        }
    }
    report(7, "variance cross-validation", pass, &details.join("; "));
}

#[test]
fn c8_csv_byte_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let config = ExperimentConfig {
        nt: 4,
        nr: 4,
        scheme: ModulationScheme::Qpsk,
        snr_db_grid: vec![8.0, 12.0],
        max_iterations: 5,
        channel_ensemble: 20,
        bit_trials_per_point: 20_000,
        seed: 11,
        experiment_kind: ExperimentKind::Overlay,
        ..ExperimentConfig::default()
    };

    let mut outputs = Vec::new();
    for (tag, workers) in [("a", 0), ("b", 0), ("c", 3)] {
        let run_config = ExperimentConfig {
            workers,
            ..config.clone()
        };
        let rows = run_experiment(&run_config).unwrap();
        let path = dir.path().join(format!("{tag}.csv"));
        emit_csv(&rows, &path).unwrap();
        outputs.push(std::fs::read(&path).unwrap());
    }
    let pass = outputs[0] == outputs[1] && outputs[0] == outputs[2];
    report(
        8,
        "csv byte determinism",
        pass,
        &format!(
            "repeat run identical: {}, 3-worker run identical: {} ({} bytes)",
            outputs[0] == outputs[1],
            outputs[0] == outputs[2],
            outputs[0].len()
        ),
    );
}

#[test]
fn c9_small_system_optimality_gap() {
    const ENSEMBLE: usize = 200;
    const TRIALS: u64 = 50_000;
    let snr_db = 10.0;
    let detector_config = DetectorConfig::default();
    let hypotheses: [[f64; 2]; 4] = [[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]];

    let channels: Vec<_> = (0..ENSEMBLE)
        .map(|c| {
            let seed = derive_seed(9, StreamClass::Channel, 0, c as u64);
            ChannelRealization::<f64>::sample(2, 2, snr_db, &mut ChaCha8Rng::seed_from_u64(seed))
                .unwrap()
                .to_bpsk_real()
        })
        .collect();

    let mut fg_errors = 0_u64;
    let mut ml_errors = 0_u64;
    for t in 0..TRIALS {
        let real = &channels[(t % ENSEMBLE as u64) as usize];
        let mut bits_rng =
            ChaCha8Rng::seed_from_u64(derive_seed(9, StreamClass::Bits, 0, t));
        let mut noise_rng =
            ChaCha8Rng::seed_from_u64(derive_seed(9, StreamClass::Noise, 0, t));
        let bits: Vec<u8> = (0..2).map(|_| u8::from(bits_rng.random_bool(0.5))).collect();
        let x = modulate::<f64>(&bits, ModulationScheme::Bpsk).unwrap();
        let y = real.transmit(&x, &mut noise_rng).unwrap();

        let result = detect(real, &y, ModulationScheme::Bpsk, &detector_config).unwrap();
        fg_errors += result.bits.iter().zip(&bits).filter(|(a, b)| a != b).count() as u64;

        let best = hypotheses
            .iter()
            .min_by(|a, b| {
                let dist = |h: &[f64; 2]| {
                    (0..2)
                        .map(|i| {
                            let z = y[i] - real.hr.at(i, 0) * h[0] - real.hr.at(i, 1) * h[1];
                            z * z
                        })
                        .sum::<f64>()
                };
                dist(a).total_cmp(&dist(b))
            })
            .unwrap();
        let ml_bits = hard_decide(&llrs_in_bit_order(best, ModulationScheme::Bpsk).unwrap());
        ml_errors += ml_bits.iter().zip(&bits).filter(|(a, b)| a != b).count() as u64;
    }

    let bits_total = (2 * TRIALS) as f64;
    let fg_ber = fg_errors as f64 / bits_total;
    let ml_ber = ml_errors as f64 / bits_total;
    let ratio = fg_ber / ml_ber;
    let pass = ratio <= 3.0;
    report(
        9,
        "small-system optimality gap",
        pass,
        &format!(
            "2x2 BPSK @ 10 dB over {} bits: FG BER = {fg_ber:.4e}, ML BER = {ml_ber:.4e}, \
             ratio = {ratio:.2} (<= 3)",
            2 * TRIALS
        ),
    );
}
