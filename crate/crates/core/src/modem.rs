//! Bit mapping for BPSK and QPSK and LLR-based hard decisions.
//!
//! Both schemes are antipodal per real dimension: bit 1 maps to the positive
//! amplitude and bit 0 to the negative one. BPSK uses amplitude 1; QPSK puts
//! `±1/√2` on each quadrature so the complex symbol keeps unit energy. QPSK
//! vectors are handled in their stacked real form `[Re(x); Im(x)]`, where
//! bit `2l` drives the real part of symbol `l` and bit `2l+1` the imaginary
//! part.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::real::Real;

/// Modulation scheme of the link.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModulationScheme {
    /// Binary phase-shift keying, amplitude ±1.
    Bpsk,
    /// Quadrature phase-shift keying, per-component amplitude ±1/√2.
    Qpsk,
}

impl ModulationScheme {
    /// Per-real-dimension amplitude.
    pub fn amplitude<R: Real>(self) -> R {
        match self {
            Self::Bpsk => R::one(),
            Self::Qpsk => R::of(0.5_f64.sqrt()),
        }
    }

    /// Antipodal alphabet per real dimension, positive point first.
    pub fn alphabet<R: Real>(self) -> [R; 2] {
        let amp = self.amplitude::<R>();
        [amp, -amp]
    }

    /// Bits carried by one complex symbol.
    pub fn bits_per_symbol(self) -> usize {
        match self {
            Self::Bpsk => 1,
            Self::Qpsk => 2,
        }
    }

    /// Lowercase display name.
    pub fn name(self) -> &'static str {
        match self {
            Self::Bpsk => "bpsk",
            Self::Qpsk => "qpsk",
        }
    }
}

/// Maps bits to a real-domain symbol vector.
///
/// Any nonzero byte counts as bit 1. BPSK yields one entry per bit; QPSK
/// yields the stacked `[Re(x); Im(x)]` vector, two entries per bit pair.
pub fn modulate<R: Real>(bits: &[u8], scheme: ModulationScheme) -> Result<Vec<R>> {
    let amp = scheme.amplitude::<R>();
    let signed = |b: u8| if b != 0 { amp } else { -amp };
    match scheme {
        ModulationScheme::Bpsk => Ok(bits.iter().map(|&b| signed(b)).collect()),
        ModulationScheme::Qpsk => {
            if !bits.len().is_multiple_of(2) {
                return Err(Error::InvalidArgument(format!(
                    "QPSK needs an even bit count, got {}",
                    bits.len()
                )));
            }
            let nt = bits.len() / 2;
            let mut x = Vec::with_capacity(2 * nt);
            x.extend((0..nt).map(|l| signed(bits[2 * l])));
            x.extend((0..nt).map(|l| signed(bits[2 * l + 1])));
            Ok(x)
        }
    }
}

/// Maps bit pairs to complex QPSK symbols `(±1 ± i)/√2`.
pub fn modulate_complex<R: Real>(bits: &[u8]) -> Result<Vec<Complex<R>>> {
    let stacked = modulate::<R>(bits, ModulationScheme::Qpsk)?;
    let nt = stacked.len() / 2;
    Ok((0..nt).map(|l| Complex::new(stacked[l], stacked[nt + l])).collect())
}

/// Hard decision per LLR entry: 1 if `L > 0`, 0 if `L < 0`, tie `L = 0`
/// resolves to 1 so replays stay byte-identical.
pub fn hard_decide<R: Real>(llr: &[R]) -> Vec<u8> {
    llr.iter().map(|&l| u8::from(l >= R::zero())).collect()
}

/// Reorders per-real-dimension LLRs into transmit-bit order.
///
/// BPSK is already in bit order. For QPSK the stacked layout puts the LLR
/// of bit `2l` at position `l` and of bit `2l+1` at position `nt + l`.
pub fn llrs_in_bit_order<R: Real>(llr: &[R], scheme: ModulationScheme) -> Result<Vec<R>> {
    match scheme {
        ModulationScheme::Bpsk => Ok(llr.to_vec()),
        ModulationScheme::Qpsk => {
            if !llr.len().is_multiple_of(2) {
                return Err(Error::Dimension(format!(
                    "stacked QPSK LLR vector must have even length, got {}",
                    llr.len()
                )));
            }
            let nt = llr.len() / 2;
            let mut out = Vec::with_capacity(llr.len());
            for l in 0..nt {
                out.push(llr[l]);
                out.push(llr[nt + l]);
            }
            Ok(out)
        }
    }
}
