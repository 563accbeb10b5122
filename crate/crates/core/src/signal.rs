//! Value types shared by every stage of the pipeline.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Complex baseband samples at a fixed sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct IqSignal {
    samples: Vec<Complex64>,
    sample_rate_hz: f64,
}

impl IqSignal {
    pub fn new(samples: Vec<Complex64>, sample_rate_hz: f64) -> Result<Self> {
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(Error::invalid(format!(
                "sample rate must be positive, got {sample_rate_hz}"
            )));
        }
        Ok(IqSignal {
            samples,
            sample_rate_hz,
        })
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Same sample rate, new samples.
    pub(crate) fn with_samples(&self, samples: Vec<Complex64>) -> IqSignal {
        IqSignal {
            samples,
            sample_rate_hz: self.sample_rate_hz,
        }
    }
}

/// Information bits, each 0 or 1.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BitStream(Vec<u8>);

impl BitStream {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if let Some(pos) = bits.iter().position(|&b| b > 1) {
            return Err(Error::invalid(format!(
                "bit {pos} has value {} (expected 0 or 1)",
                bits[pos]
            )));
        }
        Ok(BitStream(bits))
    }

    pub fn bits(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Bits `[start, end)`.
    pub fn slice(&self, start: usize, end: usize) -> BitStream {
        BitStream(self.0[start..end].to_vec())
    }
}

impl FromIterator<bool> for BitStream {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        BitStream(iter.into_iter().map(u8::from).collect())
    }
}

/// Constellation symbols at the symbol rate.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolStream {
    symbols: Vec<Complex64>,
    symbol_rate_hz: f64,
}

impl SymbolStream {
    pub fn new(symbols: Vec<Complex64>, symbol_rate_hz: f64) -> Result<Self> {
        if !(symbol_rate_hz.is_finite() && symbol_rate_hz > 0.0) {
            return Err(Error::invalid(format!(
                "symbol rate must be positive, got {symbol_rate_hz}"
            )));
        }
        Ok(SymbolStream {
            symbols,
            symbol_rate_hz,
        })
    }

    pub fn symbols(&self) -> &[Complex64] {
        &self.symbols
    }

    pub fn symbol_rate_hz(&self) -> f64 {
        self.symbol_rate_hz
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModFormat {
    #[serde(rename = "QPSK")]
    Qpsk,
    #[serde(rename = "OQPSK")]
    Oqpsk,
}

impl ModFormat {
    pub const ALL: [ModFormat; 2] = [ModFormat::Qpsk, ModFormat::Oqpsk];
}

impl fmt::Display for ModFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModFormat::Qpsk => "QPSK",
            ModFormat::Oqpsk => "OQPSK",
        })
    }
}

impl FromStr for ModFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "qpsk" => Ok(ModFormat::Qpsk),
            "oqpsk" => Ok(ModFormat::Oqpsk),
            _ => Err(Error::invalid(format!("unknown modulation format '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FilterKind {
    #[serde(rename = "RC")]
    RaisedCosine,
    #[serde(rename = "RRC")]
    RootRaisedCosine,
}

impl FilterKind {
    pub const ALL: [FilterKind; 2] = [FilterKind::RaisedCosine, FilterKind::RootRaisedCosine];
}

impl fmt::Display for FilterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FilterKind::RaisedCosine => "RC",
            FilterKind::RootRaisedCosine => "RRC",
        })
    }
}

impl FromStr for FilterKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rc" | "raised-cosine" | "nyquist" => Ok(FilterKind::RaisedCosine),
            "rrc" | "root-raised-cosine" | "root-nyquist" => Ok(FilterKind::RootRaisedCosine),
            _ => Err(Error::invalid(format!("unknown filter kind '{s}'"))),
        }
    }
}

/// Excess-bandwidth (roll-off) factor, `0 <= alpha <= 1`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct RollOff(f64);

impl RollOff {
    pub fn new(alpha: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&alpha) {
            Ok(RollOff(alpha))
        } else {
            Err(Error::InvalidRollOff(alpha))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Spectral band edge `(1 + alpha) F / 2` for symbol rate `F`.
    pub fn band_edge_hz(self, symbol_rate_hz: f64) -> f64 {
        (1.0 + self.0) * symbol_rate_hz / 2.0
    }
}

impl TryFrom<f64> for RollOff {
    type Error = Error;

    fn try_from(alpha: f64) -> Result<Self> {
        RollOff::new(alpha)
    }
}

impl From<RollOff> for f64 {
    fn from(alpha: RollOff) -> f64 {
        alpha.0
    }
}

impl fmt::Display for RollOff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub(crate) fn mean_power_of(samples: &[Complex64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptySignal);
    }
    Ok(samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / samples.len() as f64)
}

/// Mean of `|x|^2` over all samples.
pub fn mean_power(signal: &IqSignal) -> Result<f64> {
    mean_power_of(signal.samples())
}

/// Rescales by a positive real factor so that the mean power is one.
pub fn scale_to_unit_power(signal: &IqSignal) -> Result<IqSignal> {
    let power = mean_power(signal)?;
    if power <= 0.0 || !power.is_finite() {
        return Err(Error::ZeroPower);
    }
    let gain = power.sqrt().recip();
    Ok(signal.with_samples(signal.samples().iter().map(|s| s * gain).collect()))
}
