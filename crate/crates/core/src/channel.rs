//! Rayleigh MIMO channel generation and real-domain conversion.
//!
//! A spatial-multiplexing link with `nt` transmit and `nr` receive antennas
//! is modeled as `y = Hx + n`, with `H` drawn entrywise from the unit-variance
//! complex Gaussian distribution and `n` white complex Gaussian noise. The
//! averaged received SNR `ρ = E{Σ|h|²}/(N_T σ_n²)` fixes the noise variance
//! as `σ_n² = N_R/ρ` once `E|h|² = 1`.
//!
//! QPSK detection runs in the equivalent real domain: the complex system is
//! expanded to a `2nr × 2nt` real block matrix and stacked re/im vectors,
//! with per-component noise variance `σ_n²/2`. BPSK uses the real part of
//! `H` directly with the same per-component noise.

use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::real::Real;

/// One complex channel draw with its calibrated noise level.
#[derive(Debug, Clone)]
pub struct ChannelRealization<R> {
    /// Transmit antenna count.
    pub nt: usize,
    /// Receive antenna count.
    pub nr: usize,
    /// Row-major `nr × nt` entries `h_{i,l}`.
    pub h: Vec<Complex<R>>,
    /// Complex noise variance `σ_n²`, total over both quadratures.
    pub sigma_n_sq: R,
    /// Target averaged received SNR in dB.
    pub snr_db: R,
}

/// Real-domain expansion of a channel realization.
#[derive(Debug, Clone)]
pub struct RealChannel<R> {
    /// Real channel matrix (block form for QPSK, `Re(H)` for BPSK).
    pub hr: Grid<R>,
    /// Per-component noise variance `σ_n²/2`.
    pub sigma_real_sq: R,
}

/// Draws an `nr × nt` matrix with independent `CN(0, 1)` entries.
///
/// Real and imaginary parts are each `N(0, 1/2)`, so `E|h|² = 1`.
pub fn sample_channel<R: Real>(nt: usize, nr: usize, rng: &mut impl Rng) -> Vec<Complex<R>> {
    let scale = 0.5_f64.sqrt();
    (0..nr * nt)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex::new(R::of(re * scale), R::of(im * scale))
        })
        .collect()
}

/// Noise variance that hits the target averaged received SNR.
///
/// Solves `E{Σ_{i,l}|h_{i,l}|²/(N_T σ_n²)} = 10^(snr_db/10)` under
/// `E|h|² = 1`, which reduces to `σ_n² = N_R / 10^(snr_db/10)`; the
/// transmit count cancels.
pub fn noise_variance_for_snr<R: Real>(_nt: usize, nr: usize, snr_db: R) -> R {
    let rho = R::of(10.0).powf(snr_db / R::of(10.0));
    R::of(nr as f64) / rho
}

impl<R: Real> ChannelRealization<R> {
    /// Wraps an explicit matrix, validating dimensions and noise variance.
    pub fn new(nt: usize, nr: usize, h: Vec<Complex<R>>, sigma_n_sq: R, snr_db: R) -> Result<Self> {
        if nt == 0 || nr == 0 || h.len() != nr * nt {
            return Err(Error::Dimension(format!(
                "channel matrix must be nr*nt = {} entries, got {}",
                nr * nt,
                h.len()
            )));
        }
        if sigma_n_sq.is_nan() || sigma_n_sq <= R::zero() {
            return Err(Error::InvalidArgument(format!(
                "noise variance must be positive, got {sigma_n_sq}"
            )));
        }
        Ok(Self {
            nt,
            nr,
            h,
            sigma_n_sq,
            snr_db,
        })
    }

    /// Samples a Rayleigh realization calibrated to the given SNR.
    pub fn sample(nt: usize, nr: usize, snr_db: R, rng: &mut impl Rng) -> Result<Self> {
        let h = sample_channel(nt, nr, rng);
        Self::new(nt, nr, h, noise_variance_for_snr(nt, nr, snr_db), snr_db)
    }

    /// Entry `h_{i,l}`.
    #[inline]
    pub fn at(&self, i: usize, l: usize) -> Complex<R> {
        self.h[i * self.nt + l]
    }

    /// Noiseless complex product `H·x`.
    pub fn propagate(&self, x: &[Complex<R>]) -> Result<Vec<Complex<R>>> {
        if x.len() != self.nt {
            return Err(Error::Dimension(format!(
                "symbol vector has {} entries, channel expects {}",
                x.len(),
                self.nt
            )));
        }
        Ok((0..self.nr)
            .map(|i| {
                let mut acc = Complex::new(R::zero(), R::zero());
                for (l, &xl) in x.iter().enumerate() {
                    acc = acc + self.at(i, l) * xl;
                }
                acc
            })
            .collect())
    }

    /// Noisy complex transmission `y = Hx + n`, `n ~ CN(0, σ_n²)` per entry.
    pub fn transmit(&self, x: &[Complex<R>], rng: &mut impl Rng) -> Result<Vec<Complex<R>>> {
        let mut y = self.propagate(x)?;
        let comp_sd = (self.sigma_n_sq / R::of(2.0)).sqrt();
        for yi in &mut y {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            *yi = *yi + Complex::new(R::of(re) * comp_sd, R::of(im) * comp_sd);
        }
        Ok(y)
    }

    /// Block expansion to the equivalent `2nr × 2nt` real-domain form.
    ///
    /// Top-left and bottom-right blocks are `Re(H)`, top-right is `−Im(H)`,
    /// bottom-left is `Im(H)`, making `Hr · realify(x)` reproduce `H·x`.
    pub fn to_real_domain(&self) -> RealChannel<R> {
        let (nr, nt) = (self.nr, self.nt);
        let mut hr = Grid::zeros(2 * nr, 2 * nt);
        for i in 0..nr {
            for l in 0..nt {
                let h = self.at(i, l);
                *hr.at_mut(i, l) = h.re;
                *hr.at_mut(i, nt + l) = -h.im;
                *hr.at_mut(nr + i, l) = h.im;
                *hr.at_mut(nr + i, nt + l) = h.re;
            }
        }
        RealChannel {
            hr,
            sigma_real_sq: self.sigma_n_sq / R::of(2.0),
        }
    }

    /// Real-part channel for BPSK detection, `nr × nt`.
    ///
    /// BPSK symbols are real, so only the in-phase component of `y` carries
    /// signal; its noise variance is the per-component `σ_n²/2`.
    pub fn to_bpsk_real(&self) -> RealChannel<R> {
        let mut hr = Grid::zeros(self.nr, self.nt);
        for i in 0..self.nr {
            for l in 0..self.nt {
                *hr.at_mut(i, l) = self.at(i, l).re;
            }
        }
        RealChannel {
            hr,
            sigma_real_sq: self.sigma_n_sq / R::of(2.0),
        }
    }
}

impl<R: Real> RealChannel<R> {
    /// Receive dimension of the real system.
    pub fn rows(&self) -> usize {
        self.hr.rows()
    }

    /// Transmit dimension of the real system.
    pub fn cols(&self) -> usize {
        self.hr.cols()
    }

    /// Noiseless real product `Hr·x`.
    pub fn propagate(&self, x: &[R]) -> Result<Vec<R>> {
        if x.len() != self.cols() {
            return Err(Error::Dimension(format!(
                "symbol vector has {} entries, real channel expects {}",
                x.len(),
                self.cols()
            )));
        }
        Ok((0..self.rows())
            .map(|i| self.hr.row(i).iter().zip(x).map(|(&h, &xl)| h * xl).sum())
            .collect())
    }

    /// Noisy real transmission, `n ~ N(0, σ_n²/2)` per entry.
    pub fn transmit(&self, x: &[R], rng: &mut impl Rng) -> Result<Vec<R>> {
        let mut y = self.propagate(x)?;
        let sd = self.sigma_real_sq.sqrt();
        for yi in &mut y {
            let n: f64 = rng.sample(StandardNormal);
            *yi += R::of(n) * sd;
        }
        Ok(y)
    }
}

/// Stacks a complex vector as `[Re(x); Im(x)]`.
pub fn realify<R: Real>(x: &[Complex<R>]) -> Vec<R> {
    x.iter().map(|c| c.re).chain(x.iter().map(|c| c.im)).collect()
}

/// Rebuilds a complex vector from its stacked real form.
///
/// # Panics
///
/// Panics if the length is odd.
pub fn complexify<R: Real>(x: &[R]) -> Vec<Complex<R>> {
    assert!(x.len().is_multiple_of(2), "stacked real vector must have even length");
    let n = x.len() / 2;
    (0..n).map(|l| Complex::new(x[l], x[n + l])).collect()
}
