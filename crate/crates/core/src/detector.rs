//! Factor-graph iterative MIMO detector.
//!
//! The receiver is a bipartite graph: one observation node (ON) per real
//! receive dimension, one variable node (VN) per real transmit dimension.
//! Each iteration floods messages both ways:
//!
//! * ON update: every edge treats all other symbols as Gaussian
//!   interference with moments taken from the current probabilities, and
//!   emits the LLR `ω_i^l = 2·amp·h_{i,l}(y_i − μ_g)/σ_g²`,
//! * VN update: every edge collects the extrinsic sum
//!   `ψ_i^l = Σ_{i'≠i} ω_{i'}^l`, clips it, and converts back to a symbol
//!   probability; the output LLR is the full column sum `L_l = Σ_i ω_i^l`.
//!
//! Both modulations run through the same real-domain path: BPSK on the real
//! part of the channel, QPSK on the stacked block expansion.

use crate::channel::RealChannel;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::modem::{hard_decide, llrs_in_bit_order, ModulationScheme};
use crate::real::Real;

/// Knobs of the message-passing loop.
#[derive(Debug, Clone)]
pub struct DetectorConfig<R> {
    /// Maximum iteration count `T`.
    pub max_iterations: usize,
    /// Symmetric bound applied to ψ before the logistic conversion.
    pub llr_clip: R,
    /// Optional blend factor keeping part of the previous ω messages.
    /// `None` (the default) matches the plain flooding schedule.
    pub damping: Option<R>,
    /// Optional stability threshold on max |ΔL_l| that ends the loop early.
    /// Off by default; fixed-T runs are required for reproducing traces.
    pub early_stop: Option<R>,
}

impl<R: Real> Default for DetectorConfig<R> {
    fn default() -> Self {
        Self {
            max_iterations: 10,
            llr_clip: R::of(50.0),
            damping: None,
            early_stop: None,
        }
    }
}

/// Per-edge message state of one detection run.
#[derive(Debug, Clone)]
pub struct MessageGrid<R> {
    /// ON→VN LLR messages ω_i^l.
    pub omega: Grid<R>,
    /// VN→ON extrinsic LLRs ψ_i^l (clipped).
    pub psi: Grid<R>,
    /// Edge probabilities P_i^l(θ = +amp).
    pub prob_plus: Grid<R>,
    /// Interference means μ_{g_il}.
    pub mu_g: Grid<R>,
    /// Interference variances σ_{g_il}².
    pub sigma_g_sq: Grid<R>,
    /// Output LLRs L_l = Σ_i ω_i^l.
    pub output_llr: Vec<R>,
    /// Per-real-dimension symbol amplitude.
    pub amp: R,
    /// How often σ_g² had to be clamped up to the noise floor.
    pub sigma_floor_clamps: u64,
}

/// Outcome of a full detection run.
#[derive(Debug, Clone)]
pub struct DetectionResult<R> {
    /// Output LLR vector after each iteration, in real-column order.
    pub per_iteration_llr: Vec<Vec<R>>,
    /// Final hard decisions in transmit-bit order.
    pub bits: Vec<u8>,
    /// Iterations actually executed (≤ configured maximum).
    pub iterations_run: usize,
}

/// Fresh message state: equal probabilities, zero messages.
///
/// `nr` and `nt` are the real-domain node counts (twice the antenna counts
/// for QPSK). Equal probabilities imply symbol variance `amp²`: 1 for BPSK,
/// 1/2 per QPSK real component.
pub fn init_messages<R: Real>(nr: usize, nt: usize, scheme: ModulationScheme) -> MessageGrid<R> {
    MessageGrid {
        omega: Grid::zeros(nr, nt),
        psi: Grid::zeros(nr, nt),
        prob_plus: Grid::filled(nr, nt, R::of(0.5)),
        mu_g: Grid::zeros(nr, nt),
        sigma_g_sq: Grid::zeros(nr, nt),
        output_llr: vec![R::zero(); nt],
        amp: scheme.amplitude(),
        sigma_floor_clamps: 0,
    }
}

/// Observation-node update: Gaussian interference moments and ω messages.
///
/// σ_g² never drops below the per-component noise variance; cancellation
/// that would push it lower is clamped and counted.
pub fn on_update<R: Real>(grid: &mut MessageGrid<R>, ch: &RealChannel<R>, y: &[R]) -> Result<()> {
    let (rows, cols) = (ch.rows(), ch.cols());
    if grid.omega.rows() != rows || grid.omega.cols() != cols {
        return Err(Error::Dimension(format!(
            "message grid is {}x{}, channel is {}x{}",
            grid.omega.rows(),
            grid.omega.cols(),
            rows,
            cols
        )));
    }
    if y.len() != rows {
        return Err(Error::Dimension(format!(
            "received vector has {} entries, channel expects {}",
            y.len(),
            rows
        )));
    }
    let amp = grid.amp;
    let amp_sq = amp * amp;
    let floor = ch.sigma_real_sq;
    let two = R::of(2.0);
    let mut mean = vec![R::zero(); cols];
    let mut var = vec![R::zero(); cols];
    #[allow(clippy::needless_range_loop)]
    for i in 0..rows {
        let h_row = ch.hr.row(i);
        let p_row = grid.prob_plus.row(i);
        let mut sum_he = R::zero();
        let mut sum_h2v = R::zero();
        for l in 0..cols {
            let e = amp * (two * p_row[l] - R::one());
            let v = amp_sq - e * e;
            mean[l] = e;
            var[l] = v;
            sum_he += h_row[l] * e;
            sum_h2v += h_row[l] * h_row[l] * v;
        }
        for l in 0..cols {
            let h = h_row[l];
            let mu = sum_he - h * mean[l];
            let mut sigma = sum_h2v - h * h * var[l] + floor;
            if sigma < floor {
                sigma = floor;
                grid.sigma_floor_clamps += 1;
            }
            *grid.mu_g.at_mut(i, l) = mu;
            *grid.sigma_g_sq.at_mut(i, l) = sigma;
            *grid.omega.at_mut(i, l) = two * amp * h * (y[i] - mu) / sigma;
        }
    }
    Ok(())
}

/// Variable-node update: extrinsic ψ messages, probabilities, output LLRs.
pub fn vn_update<R: Real>(grid: &mut MessageGrid<R>, llr_clip: R) {
    let (rows, cols) = (grid.omega.rows(), grid.omega.cols());
    let col_sums = grid.omega.col_sums();
    #[allow(clippy::needless_range_loop)]
    for i in 0..rows {
        for l in 0..cols {
            let psi = (col_sums[l] - grid.omega.at(i, l)).max(-llr_clip).min(llr_clip);
            *grid.psi.at_mut(i, l) = psi;
            *grid.prob_plus.at_mut(i, l) = R::one() / (R::one() + (-psi).exp());
        }
    }
    grid.output_llr.copy_from_slice(&col_sums);
}

/// Runs the full iterative detection loop.
pub fn detect<R: Real>(
    ch: &RealChannel<R>,
    y: &[R],
    scheme: ModulationScheme,
    config: &DetectorConfig<R>,
) -> Result<DetectionResult<R>> {
    if config.max_iterations == 0 {
        return Err(Error::InvalidArgument(
            "detector needs at least one iteration".into(),
        ));
    }
    let mut grid = init_messages(ch.rows(), ch.cols(), scheme);
    let mut per_iteration_llr = Vec::with_capacity(config.max_iterations);
    let mut iterations_run = 0;
    for _ in 0..config.max_iterations {
        let previous_omega = config.damping.map(|_| grid.omega.clone());
        on_update(&mut grid, ch, y)?;
        if let (Some(alpha), Some(old)) = (config.damping, previous_omega) {
            for i in 0..grid.omega.rows() {
                for l in 0..grid.omega.cols() {
                    let blended = (R::one() - alpha) * grid.omega.at(i, l) + alpha * old.at(i, l);
                    *grid.omega.at_mut(i, l) = blended;
                }
            }
        }
        vn_update(&mut grid, config.llr_clip);
        iterations_run += 1;
        per_iteration_llr.push(grid.output_llr.clone());
        if let Some(tol) = config.early_stop {
            if iterations_run >= 2 {
                let prev = &per_iteration_llr[iterations_run - 2];
                let delta = grid
                    .output_llr
                    .iter()
                    .zip(prev)
                    .map(|(&a, &b)| (a - b).abs())
                    .fold(R::zero(), R::max);
                if delta < tol {
                    break;
                }
            }
        }
    }
    let final_llr = per_iteration_llr.last().expect("at least one iteration ran");
    let bits = hard_decide(&llrs_in_bit_order(final_llr, scheme)?);
    Ok(DetectionResult {
        per_iteration_llr,
        bits,
        iterations_run,
    })
}
