//! QPSK/OQPSK mapping, pulse-shaped synthesis and a known-timing receiver.
//!
//! Bits pair up as `(b_I, b_Q)`; bit 0 gives a positive rail and bit 1 a
//! negative one, each scaled by `1/sqrt(2)`. This Gray map is shared by both
//! formats. OQPSK delays the Q impulse train by half a symbol (`sps / 2`
//! samples) before filtering, so it needs an even sample count per symbol.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::metrics::align;
use crate::pulse::{fir_apply, FirFilter};
use crate::signal::{BitStream, IqSignal, ModFormat, SymbolStream};

pub const BITS_PER_SYMBOL: usize = 2;

#[derive(Debug, Clone)]
pub struct TxFrame {
    pub bits: BitStream,
    pub symbols: SymbolStream,
    pub signal: IqSignal,
    pub filter: FirFilter,
    pub format: ModFormat,
    pub samples_per_symbol: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RxResult {
    /// Symbol-instant samples after gain normalization and alignment.
    pub measured_symbols: Vec<Complex64>,
    pub decided_symbols: Vec<Complex64>,
    pub decided_bits: BitStream,
    /// Complex gain applied by the alignment stage (1 when disabled).
    pub alignment_gain: Complex64,
}

fn rail(bit: u8) -> f64 {
    if bit == 0 {
        FRAC_1_SQRT_2
    } else {
        -FRAC_1_SQRT_2
    }
}

pub fn map_symbols(bits: &BitStream, symbol_rate_hz: f64) -> Result<SymbolStream> {
    if !bits.len().is_multiple_of(BITS_PER_SYMBOL) {
        return Err(Error::OddBitCount(bits.len()));
    }
    let symbols = bits
        .bits()
        .chunks_exact(2)
        .map(|p| Complex64::new(rail(p[0]), rail(p[1])))
        .collect();
    SymbolStream::new(symbols, symbol_rate_hz)
}

fn check_sps(format: ModFormat, sps: usize) -> Result<()> {
    if sps == 0 {
        return Err(Error::invalid("samples per symbol must be at least 1"));
    }
    if format == ModFormat::Oqpsk && !sps.is_multiple_of(2) {
        return Err(Error::OqpskOddSps(sps));
    }
    Ok(())
}

/// Impulse train at every `sps`-th sample (Q rail offset for OQPSK), then
/// filtered. Output length is `n * sps + M - 1`.
pub fn modulate_baseband(
    symbols: &SymbolStream,
    format: ModFormat,
    filter: &FirFilter,
) -> Result<IqSignal> {
    let sps = filter.samples_per_symbol();
    check_sps(format, sps)?;
    if symbols.is_empty() {
        return Err(Error::EmptySignal);
    }
    let q_offset = match format {
        ModFormat::Qpsk => 0,
        ModFormat::Oqpsk => sps / 2,
    };
    let n = symbols.len() * sps;
    let mut train = vec![Complex64::new(0.0, 0.0); n];
    for (i, s) in symbols.symbols().iter().enumerate() {
        train[i * sps].re = s.re;
        // The final Q impulse of an OQPSK frame lands in the last symbol slot.
        train[i * sps + q_offset].im = s.im;
    }
    let rate = symbols.symbol_rate_hz() * sps as f64;
    fir_apply(filter, &IqSignal::new(train, rate)?)
}

/// Maps and modulates in one step.
pub fn transmit(
    bits: BitStream,
    format: ModFormat,
    filter: &FirFilter,
    symbol_rate_hz: f64,
) -> Result<TxFrame> {
    let symbols = map_symbols(&bits, symbol_rate_hz)?;
    let signal = modulate_baseband(&symbols, format, filter)?;
    Ok(TxFrame {
        bits,
        symbols,
        signal,
        filter: filter.clone(),
        format,
        samples_per_symbol: filter.samples_per_symbol(),
    })
}

/// Nearest constellation point; exact zeros go to the positive side.
pub fn decide(m: Complex64) -> Complex64 {
    let r = |x: f64| if x >= 0.0 { FRAC_1_SQRT_2 } else { -FRAC_1_SQRT_2 };
    Complex64::new(r(m.re), r(m.im))
}

fn symbol_bits(s: Complex64) -> [u8; 2] {
    [u8::from(s.re < 0.0), u8::from(s.im < 0.0)]
}

/// Receiver settings. Timing is known, not recovered.
#[derive(Debug, Clone)]
pub struct DemodParams {
    pub format: ModFormat,
    pub measurement_filter: Option<FirFilter>,
    pub samples_per_symbol: usize,
    pub n_symbols: usize,
    /// Transmit filter delay, `(M - 1) / 2`; half-integer for even lengths.
    pub tx_group_delay_samples: f64,
    /// Deterministic chain amplitude at the sampling instant; samples are
    /// divided by it so that a clean symbol lands on the unit constellation.
    pub reference_gain: f64,
    /// Symbols at each end left out of the alignment fit.
    pub edge_symbols: usize,
    pub align: bool,
}

impl DemodParams {
    /// Settings matched to a transmit filter and optional receive filter.
    pub fn for_chain(
        format: ModFormat,
        tx: &FirFilter,
        measurement_filter: Option<FirFilter>,
        n_symbols: usize,
        edge_symbols: usize,
    ) -> DemodParams {
        let reference_gain = chain_gain(tx, measurement_filter.as_ref());
        DemodParams {
            format,
            samples_per_symbol: tx.samples_per_symbol(),
            n_symbols,
            tx_group_delay_samples: tx.group_delay_samples(),
            reference_gain,
            measurement_filter,
            edge_symbols,
            align: true,
        }
    }

    fn sample_offset(&self) -> usize {
        let rx = self
            .measurement_filter
            .as_ref()
            .map_or(0.0, FirFilter::group_delay_samples);
        (self.tx_group_delay_samples + rx).floor() as usize
    }
}

/// Amplitude of the transmit (and receive) cascade at the receiver's
/// sampling index `floor(total group delay)`.
pub fn chain_gain(tx: &FirFilter, rx: Option<&FirFilter>) -> f64 {
    match rx {
        None => tx.taps()[tx.center_index()],
        Some(rx) => {
            let n = ((tx.len() - 1 + rx.len() - 1) / 2) as isize;
            let (a, b) = (tx.taps(), rx.taps());
            (0..a.len())
                .filter_map(|i| {
                    let j = n - i as isize;
                    (0..b.len() as isize).contains(&j).then(|| a[i] * b[j as usize])
                })
                .sum()
        }
    }
}

pub fn demodulate(signal: &IqSignal, params: &DemodParams) -> Result<RxResult> {
    let sps = params.samples_per_symbol;
    check_sps(params.format, sps)?;
    if params.n_symbols == 0 {
        return Err(Error::invalid("n_symbols must be at least 1"));
    }
    if !(params.reference_gain.is_finite() && params.reference_gain != 0.0) {
        return Err(Error::invalid("reference gain must be finite and nonzero"));
    }
    let filtered;
    let y = match &params.measurement_filter {
        Some(f) => {
            if f.samples_per_symbol() != sps {
                return Err(Error::invalid(format!(
                    "measurement filter is at {} samples/symbol, signal at {sps}",
                    f.samples_per_symbol()
                )));
            }
            filtered = fir_apply(f, signal)?;
            filtered.samples()
        }
        None => signal.samples(),
    };

    let d = params.sample_offset();
    let q_offset = match params.format {
        ModFormat::Qpsk => 0,
        ModFormat::Oqpsk => sps / 2,
    };
    let needed = d + (params.n_symbols - 1) * sps + q_offset + 1;
    if y.len() < needed {
        return Err(Error::InsufficientLength {
            needed,
            available: y.len(),
        });
    }

    let inv = params.reference_gain.recip();
    let mut measured: Vec<Complex64> = (0..params.n_symbols)
        .map(|i| {
            let k = d + i * sps;
            Complex64::new(y[k].re, y[k + q_offset].im) * inv
        })
        .collect();

    let mut gain = Complex64::new(1.0, 0.0);
    if params.align {
        let n = params.n_symbols;
        let (lo, hi) = if 2 * params.edge_symbols < n {
            (params.edge_symbols, n - params.edge_symbols)
        } else {
            (0, n)
        };
        // Decision-directed: decide, fit, re-decide.
        for _ in 0..2 {
            let decided: Vec<Complex64> = measured[lo..hi].iter().map(|&m| decide(m)).collect();
            let c = match align(&measured[lo..hi], &decided) {
                Ok(c) => c,
                Err(Error::ZeroPower) => break,
                Err(e) => return Err(e),
            };
            measured.iter_mut().for_each(|m| *m *= c);
            gain *= c;
        }
    }

    let decided_symbols: Vec<Complex64> = measured.iter().map(|&m| decide(m)).collect();
    let decided_bits = BitStream::new(
        decided_symbols
            .iter()
            .flat_map(|&s| symbol_bits(s))
            .collect(),
    )?;
    Ok(RxResult {
        measured_symbols: measured,
        decided_symbols,
        decided_bits,
        alignment_gain: gain,
    })
}
