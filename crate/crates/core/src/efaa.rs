//! Error-functions-aided analysis of the iterative detector.
//!
//! Instead of Monte-Carlo histograms, the detector's convergence is
//! predicted by a deterministic per-channel recursion over edge-LLR
//! variances. Each iteration:
//!
//! 1. turns the extrinsic variances `var_ψ` into symbol variances through
//!    erf/erfc closed forms (right/wrong decision probabilities),
//! 2. recomputes the equivalent channel variables `var_ω` from the channel
//!    gains, the symbol variances, and the noise level,
//! 3. accumulates extrinsic sums `var_ψ = Σ_{i'≠i} var_ω`,
//! 4. maps output-LLR variances to mutual information through the J fit.
//!
//! The recursion runs on the same real-domain grids as the detector:
//! `N_R × N_T` for BPSK, `2N_R × 2N_T` for QPSK.

use crate::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::modem::ModulationScheme;
use crate::numerics::j_function;
use crate::real::Real;

/// Numerator convention for the equivalent-channel-variable update.
///
/// Two coefficient conventions exist for the BPSK edge variance: the
/// algorithm form `2h²/(Σ h²V + σ²)` and the full conditional variance
/// `4h²/σ_g²` implied by the detector's LLR construction, which differ by
/// a factor of two. The algorithm form is the default. For QPSK the
/// per-component amplitude `1/√2` absorbs the factor and the two
/// conventions coincide, so the override changes BPSK only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EcvCoefficient {
    /// Algorithm form, `2h²` numerator for BPSK.
    #[default]
    Halved,
    /// Full conditional-variance form, `4h²` numerator for BPSK.
    Full,
}

/// Loop-carried state of the variance recursion.
#[derive(Debug, Clone)]
pub struct EfaaState<R> {
    /// Equivalent channel variables `var_{ω_i^l}`.
    pub var_omega: Grid<R>,
    /// Extrinsic LLR variances `var_{ψ_i^l}`.
    pub var_psi: Grid<R>,
    /// Symbol variances `V(x_l)` as seen from each edge.
    pub symbol_var: Grid<R>,
    /// Current iteration `t ≥ 1`.
    pub iteration: usize,
    /// Grid topology: BPSK keeps antenna counts, QPSK doubles them.
    pub mode: ModulationScheme,
}

/// Mutual-information trace of one channel realization.
#[derive(Debug, Clone)]
pub struct AmiTrace<R> {
    /// Averaged mutual information `I_L` after each iteration.
    pub per_iteration_i_l: Vec<R>,
    /// Per-node `I_{L_l}` vectors after each iteration.
    pub per_node_i_ll: Option<Vec<Vec<R>>>,
    /// Operating SNR in dB.
    pub snr_db: R,
    /// Caller-assigned channel index for bookkeeping.
    pub channel_id: u64,
}

/// Right/wrong decision probabilities for an extrinsic variance.
///
/// Returns `(p_right, p_wrong)` with `p_right = ½[1 + erf(√(v/8))]` and
/// `p_wrong = ½·erfc(√(v/8))`. The pair is computed from the single erfc
/// value so it sums to 1 exactly.
pub fn decision_probabilities<R: Real>(var_psi: R) -> Result<(R, R)> {
    if var_psi.is_nan() || var_psi < R::zero() {
        return Err(Error::Domain(format!(
            "decision probabilities require var_psi >= 0, got {var_psi}"
        )));
    }
    let p_wrong = (var_psi / R::of(8.0)).sqrt().erfc() / R::of(2.0);
    Ok((R::one() - p_wrong, p_wrong))
}

/// Symbol variance seen by the interference model at iteration `t`.
///
/// BPSK starts from the uninformed value 1 at `t = 1` and afterwards uses
/// `[1 + erf(√(v/8))]·erfc(√(v/8))`; QPSK uses half that at every
/// iteration, which reproduces the 1/2 starting value through `var_ψ = 0`.
pub fn symbol_variance<R: Real>(var_psi: R, mode: ModulationScheme, t: usize) -> R {
    debug_assert!(t >= 1, "iterations are 1-based");
    match mode {
        ModulationScheme::Bpsk if t == 1 => R::one(),
        _ => {
            let c = (var_psi.max(R::zero()) / R::of(8.0)).sqrt().erfc();
            let f = (R::of(2.0) - c) * c;
            match mode {
                ModulationScheme::Bpsk => f,
                ModulationScheme::Qpsk => f / R::of(2.0),
            }
        }
    }
}

/// Equivalent-channel-variable update over all edges.
///
/// `h_abs_sq` holds the squared real-domain channel gains and `sigma_n_sq`
/// the per-component noise variance. BPSK edges get
/// `2h²/(Σ_{l'≠l} h²V + σ²)`; QPSK edges get `4h²/(Σ_{l'≠l} h²·2V + 2σ²)`
/// over the doubled column range, with the interference term written
/// through the full `[1+erf]·erfc` symbol variance.
pub fn ecv_update<R: Real>(
    h_abs_sq: &Grid<R>,
    sigma_n_sq: R,
    symbol_var: &Grid<R>,
    mode: ModulationScheme,
    coefficient: EcvCoefficient,
) -> Grid<R> {
    let (rows, cols) = (h_abs_sq.rows(), h_abs_sq.cols());
    assert_eq!(
        (symbol_var.rows(), symbol_var.cols()),
        (rows, cols),
        "symbol-variance grid must match the channel grid"
    );
    let two = R::of(2.0);
    let (numerator_gain, variance_scale, noise_scale) = match mode {
        ModulationScheme::Bpsk => {
            let gain = match coefficient {
                EcvCoefficient::Halved => two,
                EcvCoefficient::Full => R::of(4.0),
            };
            (gain, R::one(), R::one())
        }
        ModulationScheme::Qpsk => (R::of(4.0), two, two),
    };
    let mut var_omega = Grid::zeros(rows, cols);
    for i in 0..rows {
        let h_row = h_abs_sq.row(i);
        let v_row = symbol_var.row(i);
        let mut interference_sum = R::zero();
        for l in 0..cols {
            interference_sum += h_row[l] * variance_scale * v_row[l];
        }
        for l in 0..cols {
            let own = h_row[l] * variance_scale * v_row[l];
            let denominator = interference_sum - own + noise_scale * sigma_n_sq;
            *var_omega.at_mut(i, l) = numerator_gain * h_row[l] / denominator;
        }
    }
    var_omega
}

/// Extrinsic variance sums, `var_ψ(i,l) = Σ_{i'≠i} var_ω(i',l)`.
pub fn var_psi_update<R: Real>(var_omega: &Grid<R>) -> Grid<R> {
    let (rows, cols) = (var_omega.rows(), var_omega.cols());
    let col_sums = var_omega.col_sums();
    let mut var_psi = Grid::zeros(rows, cols);
    #[allow(clippy::needless_range_loop)]
    for i in 0..rows {
        for l in 0..cols {
            *var_psi.at_mut(i, l) = (col_sums[l] - var_omega.at(i, l)).max(R::zero());
        }
    }
    var_psi
}

/// Mutual information of one edge variance, `J(√variance)`.
pub fn edge_mutual_information<R: Real>(variance: R) -> Result<R> {
    if variance.is_nan() || variance < R::zero() {
        return Err(Error::Domain(format!(
            "edge mutual information requires variance >= 0, got {variance}"
        )));
    }
    j_function(variance.sqrt())
}

/// Output mutual information: per-node `I_{L_l} = J(√Σ_i var_ω)` and the
/// averaged `I_L`.
pub fn output_ami<R: Real>(var_omega: &Grid<R>) -> Result<(Vec<R>, R)> {
    let col_sums = var_omega.col_sums();
    let per_node: Vec<R> = col_sums
        .iter()
        .map(|&v| edge_mutual_information(v))
        .collect::<Result<_>>()?;
    let mean = per_node.iter().copied().sum::<R>() / R::of(per_node.len() as f64);
    Ok((per_node, mean))
}

/// Runs the full variance recursion for one channel realization.
///
/// Deterministic given the channel: no randomness enters after sampling.
pub fn run_efaa<R: Real>(
    ch: &ChannelRealization<R>,
    scheme: ModulationScheme,
    max_iterations: usize,
    coefficient: EcvCoefficient,
) -> Result<AmiTrace<R>> {
    if max_iterations == 0 {
        return Err(Error::InvalidArgument(
            "the recursion needs at least one iteration".into(),
        ));
    }
    let real = match scheme {
        ModulationScheme::Bpsk => ch.to_bpsk_real(),
        ModulationScheme::Qpsk => ch.to_real_domain(),
    };
    let (rows, cols) = (real.rows(), real.cols());
    let mut h_abs_sq = Grid::zeros(rows, cols);
    for i in 0..rows {
        for l in 0..cols {
            let h = real.hr.at(i, l);
            *h_abs_sq.at_mut(i, l) = h * h;
        }
    }
    let sigma = real.sigma_real_sq;

    let mut state = EfaaState {
        var_omega: Grid::zeros(rows, cols),
        var_psi: Grid::zeros(rows, cols),
        symbol_var: Grid::zeros(rows, cols),
        iteration: 0,
        mode: scheme,
    };
    let mut per_iteration_i_l = Vec::with_capacity(max_iterations);
    let mut per_node_i_ll = Vec::with_capacity(max_iterations);
    for t in 1..=max_iterations {
        state.iteration = t;
        for i in 0..rows {
            for l in 0..cols {
                *state.symbol_var.at_mut(i, l) =
                    symbol_variance(state.var_psi.at(i, l), scheme, t);
            }
        }
        state.var_omega = ecv_update(&h_abs_sq, sigma, &state.symbol_var, scheme, coefficient);
        state.var_psi = var_psi_update(&state.var_omega);
        let (i_ll, i_l) = output_ami(&state.var_omega)?;
        per_iteration_i_l.push(i_l);
        per_node_i_ll.push(i_ll);
    }
    Ok(AmiTrace {
        per_iteration_i_l,
        per_node_i_ll: Some(per_node_i_ll),
        snr_db: ch.snr_db,
        channel_id: 0,
    })
}
