//! Built-in oracle and invariant suites behind the `selftest` subcommand.
//!
//! Each suite is a fast, self-contained check of a frozen reference value
//! or a structural invariant, exercising the library through its public
//! API exactly as an external consumer would.

use std::fs;

use fg_mimo_core::channel::{realify, ChannelRealization, RealChannel};
use fg_mimo_core::detector::{init_messages, on_update, vn_update};
use fg_mimo_core::efaa::{run_efaa, EcvCoefficient};
use fg_mimo_core::grid::Grid;
use fg_mimo_core::harness::{emit_csv, parse_csv, run_experiment, ExperimentConfig, ExperimentKind};
use fg_mimo_core::modem::modulate_complex;
use fg_mimo_core::numerics::{
    erf, erfc, gauss_legendre_nodes, j_function, j_inverse, mutual_information_quadrature,
    QuadratureSpec,
};
use fg_mimo_core::ModulationScheme;

type Suite = (&'static str, fn() -> Result<(), String>);

/// Runs every suite, reports per-suite verdicts and a summary count.
pub fn run() -> i32 {
    let suites: &[Suite] = &[
        ("error-function-values", error_function_values),
        ("j-curve-fidelity", j_curve_fidelity),
        ("j-inverse-round-trip", j_inverse_round_trip),
        ("decision-integrals", decision_integrals),
        ("real-domain-embedding", real_domain_embedding),
        ("recursion-fixed-point", recursion_fixed_point),
        ("recursion-snr-monotonic", recursion_snr_monotonic),
        ("detector-consistency", detector_consistency),
        ("csv-determinism", csv_determinism),
    ];
    let mut passed = 0;
    for (name, suite) in suites {
        match suite() {
            Ok(()) => {
                passed += 1;
                println!("selftest {name}: ok");
            }
            Err(message) => println!("selftest {name}: FAILED ({message})"),
        }
    }
    println!("selftest: {passed}/{} suites passed", suites.len());
    if passed == suites.len() {
        0
    } else {
        1
    }
}

fn check(ok: bool, message: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(message())
    }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn error_function_values() -> Result<(), String> {
    let cases = [
        (1.0, 0.842_700_792_949_714_9),
        (0.5, 0.520_499_877_813_046_5),
        (2.0, 0.995_322_265_018_952_7),
    ];
    for (x, reference) in cases {
        let value = erf(x).map_err(|e| e.to_string())?;
        check(close(value, reference, 1e-15), || {
            format!("erf({x}) = {value}, expected {reference}")
        })?;
    }
    let tail: f64 = erfc(5.0).map_err(|e| e.to_string())?;
    check(close(tail, 1.537_459_794_428_035_1e-12, 1e-26), || {
        format!("erfc(5) = {tail:e}")
    })?;
    for k in 0..200 {
        let x = -3.0 + 0.03 * k as f64;
        let sum = erf(x).unwrap() + erfc(x).unwrap();
        check(close(sum, 1.0, 1e-14), || {
            format!("erf + erfc = {sum} at x = {x}")
        })?;
    }
    Ok(())
}

fn j_curve_fidelity() -> Result<(), String> {
    let spec = QuadratureSpec::default();
    for k in 1..=100 {
        let sigma = 0.1 * k as f64;
        let fitted = j_function(sigma).map_err(|e| e.to_string())?;
        let reference =
            mutual_information_quadrature(sigma * sigma, &spec).map_err(|e| e.to_string())?;
        check(close(fitted, reference, 5e-3), || {
            format!("|fit - quadrature| = {:.2e} at sigma = {sigma}", (fitted - reference).abs())
        })?;
    }
    Ok(())
}

fn j_inverse_round_trip() -> Result<(), String> {
    for k in 1..=49 {
        let i = 0.02 * k as f64;
        let back = j_function(j_inverse(i).unwrap()).unwrap();
        check(close(back, i, 2e-2), || {
            format!("J(J^-1({i})) = {back}")
        })?;
    }
    for k in 0..=53 {
        let sigma = 0.2 + 0.1 * k as f64;
        let back = j_inverse(j_function(sigma).unwrap()).unwrap();
        check(close(back, sigma, 0.05), || {
            format!("J^-1(J({sigma})) = {back}")
        })?;
    }
    Ok(())
}

fn decision_integrals() -> Result<(), String> {
    let (nodes, weights) = gauss_legendre_nodes(2001);
    for &v in &[0.5_f64, 2.0, 8.0, 32.0] {
        let arg = (v / 8.0).sqrt();
        let right = 0.25 * (1.0 + erf(arg).unwrap());
        let wrong = 0.25 * erfc(arg).unwrap();
        let reach = 45.0 * v.sqrt();
        let norm = 1.0 / (2.0 * (2.0 * std::f64::consts::PI * v).sqrt());
        for &(mean, lo, hi, closed) in &[
            (v / 2.0, 0.0, v / 2.0 + reach, right),
            (v / 2.0, v / 2.0 - reach, 0.0, wrong),
        ] {
            let half = 0.5 * (hi - lo);
            let mid = 0.5 * (hi + lo);
            let numeric: f64 = nodes
                .iter()
                .zip(&weights)
                .map(|(&x, &w)| {
                    let u = mid + half * x;
                    w * norm * (-(u - mean) * (u - mean) / (2.0 * v)).exp()
                })
                .sum::<f64>()
                * half;
            check(close(numeric, closed, 1e-9), || {
                format!("decision integral at v = {v}: {numeric} vs {closed}")
            })?;
        }
    }
    Ok(())
}

fn real_domain_embedding() -> Result<(), String> {
    use fg_mimo_core::harness::{derive_seed, StreamClass};
    use rand::{Rng, SeedableRng};
    let mut rng =
        rand_chacha::ChaCha8Rng::seed_from_u64(derive_seed(3, StreamClass::Channel, 0, 0));
    for _ in 0..200 {
        let nt = rng.random_range(1..=16);
        let nr = rng.random_range(1..=16);
        let ch = ChannelRealization::<f64>::sample(nt, nr, 10.0, &mut rng)
            .map_err(|e| e.to_string())?;
        let bits: Vec<u8> = (0..2 * nt).map(|_| u8::from(rng.random_bool(0.5))).collect();
        let x = modulate_complex::<f64>(&bits).map_err(|e| e.to_string())?;
        let complex_y = realify(&ch.propagate(&x).map_err(|e| e.to_string())?);
        let real_y = ch
            .to_real_domain()
            .propagate(&realify(&x))
            .map_err(|e| e.to_string())?;
        for (a, b) in complex_y.iter().zip(&real_y) {
            check(close(*a, *b, 1e-12), || {
                format!("real/complex mismatch {:.2e} at {nt}x{nr}", (a - b).abs())
            })?;
        }
    }
    Ok(())
}

fn recursion_fixed_point() -> Result<(), String> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(6);
    let ch =
        ChannelRealization::<f64>::sample(4, 4, 40.0, &mut rng).map_err(|e| e.to_string())?;
    let trace = run_efaa(&ch, ModulationScheme::Qpsk, 12, EcvCoefficient::default())
        .map_err(|e| e.to_string())?;
    let tail = &trace.per_iteration_i_l[8..];
    check(tail.windows(2).all(|w| w[0] == w[1]), || {
        format!("saturated trace still moving: {tail:?}")
    })
}

fn recursion_snr_monotonic() -> Result<(), String> {
    use rand::SeedableRng;
    let mut finals = Vec::new();
    for &snr_db in &[0.0, 10.0, 20.0] {
        let mut mean = 0.0;
        for c in 0..50 {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1000 + c);
            let ch = ChannelRealization::<f64>::sample(4, 4, snr_db, &mut rng)
                .map_err(|e| e.to_string())?;
            let trace = run_efaa(&ch, ModulationScheme::Qpsk, 10, EcvCoefficient::default())
                .map_err(|e| e.to_string())?;
            mean += trace.per_iteration_i_l[9];
        }
        finals.push(mean / 50.0);
    }
    check(finals.windows(2).all(|w| w[1] >= w[0] - 5e-3), || {
        format!("ensemble AMI not monotone in SNR: {finals:?}")
    })
}

fn detector_consistency() -> Result<(), String> {
    let sigma = 0.5;
    let y = 0.37;
    let channel = RealChannel {
        hr: Grid::from_vec(1, 1, vec![1.0_f64]),
        sigma_real_sq: sigma,
    };
    let mut grid = init_messages(1, 1, ModulationScheme::Bpsk);
    on_update(&mut grid, &channel, &[y]).map_err(|e| e.to_string())?;
    check(close(grid.omega.at(0, 0), 2.0 * y / sigma, 1e-14), || {
        format!("matched-filter LLR = {}, expected {}", grid.omega.at(0, 0), 2.0 * y / sigma)
    })?;

    let channel = RealChannel {
        hr: Grid::from_vec(2, 2, vec![0.9_f64, -0.4, 0.3, 1.1]),
        sigma_real_sq: sigma,
    };
    let mut grid = init_messages(2, 2, ModulationScheme::Bpsk);
    for (index, p) in [1.0, 0.0, 0.0, 1.0].into_iter().enumerate() {
        *grid.prob_plus.at_mut(index / 2, index % 2) = p;
    }
    let x = [1.0, -1.0];
    let y: Vec<f64> = (0..2)
        .map(|i| (0..2).map(|l| channel.hr.at(i, l) * x[l]).sum())
        .collect();
    on_update(&mut grid, &channel, &y).map_err(|e| e.to_string())?;
    for i in 0..2 {
        for l in 0..2 {
            check(grid.sigma_g_sq.at(i, l) == sigma, || {
                format!("perfect feedback left sigma_g^2 = {}", grid.sigma_g_sq.at(i, l))
            })?;
        }
    }
    vn_update(&mut grid, 50.0);
    check(
        grid.output_llr[0] > 0.0 && grid.output_llr[1] < 0.0,
        || format!("perfect-feedback LLR signs wrong: {:?}", grid.output_llr),
    )
}

fn csv_determinism() -> Result<(), String> {
    let config = ExperimentConfig {
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
    };
    let base = std::env::temp_dir();
    let mut outputs = Vec::new();
    for (tag, workers) in [("a", 0), ("b", 0), ("c", 2)] {
        let run_config = ExperimentConfig { workers, ..config.clone() };
        let rows = run_experiment(&run_config).map_err(|e| e.to_string())?;
        let path = base.join(format!("fg-mimo-selftest-{}-{tag}.csv", std::process::id()));
        emit_csv(&rows, &path).map_err(|e| e.to_string())?;
        let bytes = fs::read(&path).map_err(|e| e.to_string())?;
        parse_csv(std::str::from_utf8(&bytes).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        let _ = fs::remove_file(&path);
        outputs.push(bytes);
    }
    check(outputs[0] == outputs[1] && outputs[0] == outputs[2], || {
        "CSV bytes differ across identical runs or worker counts".to_string()
    })
}
