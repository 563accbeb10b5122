use std::io::{BufRead, Write};

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::impulse;
use crate::error::{Error, Result};
use crate::signal::{FilterKind, IqSignal, RollOff};

/// Number of taps in the instrument-style truncated filters.
pub const VSG8_TAPS: usize = 8;
/// Tap spacing of the instrument-style filters is `T / VSG8_SPS`.
pub const VSG8_SPS: usize = 4;

/// Filters with at most this many taps are applied in direct form.
const DIRECT_MAX_TAPS: usize = 96;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Normalization {
    UnitPeak,
    UnitEnergy,
    UnitDcGain,
}

impl std::str::FromStr for Normalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "peak" | "unit-peak" => Ok(Normalization::UnitPeak),
            "energy" | "unit-energy" => Ok(Normalization::UnitEnergy),
            "dc" | "unit-dc-gain" => Ok(Normalization::UnitDcGain),
            _ => Err(Error::invalid(format!("unknown normalization '{s}'"))),
        }
    }
}

/// Real, even-symmetric FIR pulse-shaping filter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirFilter {
    taps: Vec<f64>,
    samples_per_symbol: usize,
    kind: FilterKind,
    /// `None` for tabulated taps whose design roll-off is unknown.
    alpha: Option<RollOff>,
    span_symbols: f64,
    normalization: Normalization,
}

impl FirFilter {
    /// Wraps existing taps, checking symmetry.
    pub fn from_taps(
        taps: Vec<f64>,
        samples_per_symbol: usize,
        kind: FilterKind,
        alpha: Option<RollOff>,
        span_symbols: f64,
        normalization: Normalization,
    ) -> Result<Self> {
        if taps.is_empty() {
            return Err(Error::invalid("filter needs at least one tap"));
        }
        if samples_per_symbol == 0 {
            return Err(Error::invalid("samples per symbol must be at least 1"));
        }
        if taps.iter().any(|t| !t.is_finite()) {
            return Err(Error::invalid("non-finite filter tap"));
        }
        let scale = taps.iter().fold(1.0f64, |m, t| m.max(t.abs()));
        let m = taps.len();
        for k in 0..m / 2 {
            if (taps[k] - taps[m - 1 - k]).abs() > 1e-12 * scale {
                return Err(Error::invalid(format!("taps not symmetric at index {k}")));
            }
        }
        Ok(FirFilter {
            taps,
            samples_per_symbol,
            kind,
            alpha,
            span_symbols,
            normalization,
        })
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    pub fn samples_per_symbol(&self) -> usize {
        self.samples_per_symbol
    }

    pub fn kind(&self) -> FilterKind {
        self.kind
    }

    pub fn alpha(&self) -> Option<RollOff> {
        self.alpha
    }

    pub fn span_symbols(&self) -> f64 {
        self.span_symbols
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    /// `(M - 1) / 2`; half-integer for even-length filters.
    pub fn group_delay_samples(&self) -> f64 {
        (self.taps.len() - 1) as f64 / 2.0
    }

    /// Integer sample index used as the pulse centre (floor of the group delay).
    pub fn center_index(&self) -> usize {
        (self.taps.len() - 1) / 2
    }

    pub fn energy(&self) -> f64 {
        self.taps.iter().map(|t| t * t).sum()
    }

    /// Series connection of two filters at the same rate, renormalized to unit peak.
    ///
    /// Two root-raised-cosine stages yield a raised-cosine cascade.
    pub fn cascade(&self, other: &FirFilter) -> Result<FirFilter> {
        if self.samples_per_symbol != other.samples_per_symbol {
            return Err(Error::invalid(format!(
                "cannot cascade filters at {} and {} samples/symbol",
                self.samples_per_symbol, other.samples_per_symbol
            )));
        }
        let mut taps = vec![0.0; self.len() + other.len() - 1];
        for (i, a) in self.taps.iter().enumerate() {
            for (j, b) in other.taps.iter().enumerate() {
                taps[i + j] += a * b;
            }
        }
        normalize(&mut taps, Normalization::UnitPeak)?;
        let kind = match (self.kind, other.kind) {
            (FilterKind::RootRaisedCosine, FilterKind::RootRaisedCosine) => {
                FilterKind::RaisedCosine
            }
            (k, _) => k,
        };
        FirFilter::from_taps(
            taps,
            self.samples_per_symbol,
            kind,
            self.alpha,
            self.span_symbols + other.span_symbols,
            Normalization::UnitPeak,
        )
    }
}

fn normalize(taps: &mut [f64], mode: Normalization) -> Result<()> {
    let divisor = match mode {
        Normalization::UnitPeak => taps.iter().fold(0.0f64, |m, t| m.max(t.abs())),
        Normalization::UnitEnergy => taps.iter().map(|t| t * t).sum::<f64>().sqrt(),
        Normalization::UnitDcGain => taps.iter().sum(),
    };
    if divisor == 0.0 || !divisor.is_finite() {
        return Err(Error::invalid(format!("cannot apply {mode:?} to these taps")));
    }
    taps.iter_mut().for_each(|t| *t /= divisor);
    Ok(())
}

/// Samples the RC or RRC pulse at `T / samples_per_symbol` spacing over
/// `span_symbols` symbols, `M = span * sps + 1` taps centred on `t = 0`.
pub fn design_fir(
    kind: FilterKind,
    alpha: RollOff,
    samples_per_symbol: usize,
    span_symbols: usize,
    normalization: Normalization,
) -> Result<FirFilter> {
    if samples_per_symbol == 0 || span_symbols == 0 {
        return Err(Error::invalid(format!(
            "invalid filter size: sps={samples_per_symbol}, span={span_symbols}"
        )));
    }
    let m = span_symbols * samples_per_symbol + 1;
    let half = (m - 1) as f64 / 2.0;
    let mut taps: Vec<f64> = (0..m)
        .map(|k| impulse(kind, (k as f64 - half) / samples_per_symbol as f64, alpha))
        .collect();
    normalize(&mut taps, normalization)?;
    FirFilter::from_taps(
        taps,
        samples_per_symbol,
        kind,
        Some(alpha),
        span_symbols as f64,
        normalization,
    )
}

/// Eight-tap truncated filter in the style of a signal generator's built-in
/// Nyquist filters: eight equally spaced samples of the pulse across its main
/// lobe `|t| < T`, at `t = (k - 3.5) T / 4`, unit peak.
///
/// The filter has even length, so its centre falls between taps 3 and 4.
pub fn design_vsg8(kind: FilterKind, alpha: RollOff) -> Result<FirFilter> {
    let half = (VSG8_TAPS - 1) as f64 / 2.0;
    let mut taps: Vec<f64> = (0..VSG8_TAPS)
        .map(|k| impulse(kind, (k as f64 - half) / VSG8_SPS as f64, alpha))
        .collect();
    normalize(&mut taps, Normalization::UnitPeak)?;
    FirFilter::from_taps(
        taps,
        VSG8_SPS,
        kind,
        Some(alpha),
        VSG8_TAPS as f64 / VSG8_SPS as f64,
        Normalization::UnitPeak,
    )
}

const VSG_RC_TAPS: [f64; 8] = [
    0.015609, 0.174413, 0.588622, 1.000000, 1.000000, 0.588622, 0.174413, 0.015609,
];
const VSG_RRC_TAPS: [f64; 8] = [
    0.004490, 0.143258, 0.560131, 1.000000, 1.000000, 0.560131, 0.143258, 0.004490,
];

/// Tap values reported for a commercial vector signal generator's 8-tap
/// Nyquist (RC) and root-Nyquist (RRC) filters, 8 samples over one symbol.
pub fn vsg_reference_taps(kind: FilterKind) -> FirFilter {
    let taps = match kind {
        FilterKind::RaisedCosine => VSG_RC_TAPS,
        FilterKind::RootRaisedCosine => VSG_RRC_TAPS,
    };
    FirFilter::from_taps(taps.to_vec(), 8, kind, None, 1.0, Normalization::UnitPeak)
        .expect("tabulated taps are symmetric")
}

/// Full linear convolution `y(n) = sum_k h_k x(n - k)` with zero initial
/// state; output length `len(x) + M - 1`.
pub fn convolve(taps: &[f64], x: &[Complex64]) -> Vec<Complex64> {
    if taps.is_empty() || x.is_empty() {
        return Vec::new();
    }
    if taps.len() <= DIRECT_MAX_TAPS || x.len() < taps.len() {
        convolve_direct(taps, x)
    } else {
        convolve_fft(taps, x)
    }
}

fn convolve_direct(taps: &[f64], x: &[Complex64]) -> Vec<Complex64> {
    let mut y = vec![Complex64::new(0.0, 0.0); x.len() + taps.len() - 1];
    for (n, out) in y.iter_mut().enumerate() {
        let k_lo = n.saturating_sub(x.len() - 1);
        let k_hi = n.min(taps.len() - 1);
        let mut acc = Complex64::new(0.0, 0.0);
        for k in k_lo..=k_hi {
            acc += x[n - k] * taps[k];
        }
        *out = acc;
    }
    y
}

// Overlap-add.
fn convolve_fft(taps: &[f64], x: &[Complex64]) -> Vec<Complex64> {
    let m = taps.len();
    let fft_len = (4 * m).next_power_of_two().max(4096);
    let block = fft_len - m + 1;
    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(fft_len);
    let inverse = planner.plan_fft_inverse(fft_len);

    let mut h: Vec<Complex64> = taps.iter().map(|&t| Complex64::new(t, 0.0)).collect();
    h.resize(fft_len, Complex64::new(0.0, 0.0));
    forward.process(&mut h);

    let scale = 1.0 / fft_len as f64;
    let mut y = vec![Complex64::new(0.0, 0.0); x.len() + m - 1];
    let mut buf = vec![Complex64::new(0.0, 0.0); fft_len];
    for (i, chunk) in x.chunks(block).enumerate() {
        buf[..chunk.len()].copy_from_slice(chunk);
        buf[chunk.len()..].fill(Complex64::new(0.0, 0.0));
        forward.process(&mut buf);
        buf.iter_mut().zip(&h).for_each(|(b, hk)| *b *= hk);
        inverse.process(&mut buf);
        let start = i * block;
        let n_out = chunk.len() + m - 1;
        for (dst, src) in y[start..start + n_out].iter_mut().zip(&buf[..n_out]) {
            *dst += src * scale;
        }
    }
    y
}

/// Applies the filter to a signal; the sample rate is carried through.
pub fn fir_apply(filter: &FirFilter, signal: &IqSignal) -> Result<IqSignal> {
    if signal.is_empty() {
        return Err(Error::EmptySignal);
    }
    Ok(signal.with_samples(convolve(filter.taps(), signal.samples())))
}

/// One coefficient per line, 17 significant digits.
pub fn write_taps_csv<W: Write>(mut w: W, filter: &FirFilter) -> std::io::Result<()> {
    for t in filter.taps() {
        writeln!(w, "{t:.16e}")?;
    }
    Ok(())
}

pub fn read_taps_csv<R: BufRead>(r: R) -> Result<Vec<f64>> {
    let mut taps = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        taps.push(line.parse::<f64>().map_err(|e| {
            Error::invalid(format!("line {}: '{line}' is not a number ({e})", i + 1))
        })?);
    }
    Ok(taps)
}
