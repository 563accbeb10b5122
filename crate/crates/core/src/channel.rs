//! AWGN at a given Eb/N0 and deterministic gain/phase impairments.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::IqSignal;

/// Generator and Gaussian draw used by [`awgn`].
pub const RNG_ID: &str = "chacha20 (rand_chacha 0.9) + StandardNormal ziggurat (rand_distr 0.5)";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    /// `None` disables noise.
    pub ebn0_db: Option<f64>,
    pub bits_per_symbol: usize,
    pub samples_per_symbol: usize,
    pub seed: u64,
    pub rng_id: String,
}

impl ChannelConfig {
    pub fn new(ebn0_db: Option<f64>, bits_per_symbol: usize, samples_per_symbol: usize, seed: u64) -> Self {
        ChannelConfig {
            ebn0_db,
            bits_per_symbol,
            samples_per_symbol,
            seed,
            rng_id: RNG_ID.to_string(),
        }
    }

    /// Complex noise variance per sample for a signal of mean power `signal_power`.
    pub fn noise_variance(&self, signal_power: f64) -> Option<f64> {
        self.ebn0_db.map(|db| {
            signal_power * self.samples_per_symbol as f64
                / (self.bits_per_symbol as f64 * 10f64.powf(db / 10.0))
        })
    }
}

pub fn awgn(signal: &IqSignal, config: &ChannelConfig, signal_power: f64) -> Result<IqSignal> {
    if !(signal_power.is_finite() && signal_power > 0.0) {
        return Err(Error::invalid(format!(
            "signal power must be positive, got {signal_power}"
        )));
    }
    if config.bits_per_symbol == 0 || config.samples_per_symbol == 0 {
        return Err(Error::invalid("bits and samples per symbol must be at least 1"));
    }
    if config.rng_id != RNG_ID {
        return Err(Error::invalid(format!("unsupported generator '{}'", config.rng_id)));
    }
    let Some(var) = config.noise_variance(signal_power) else {
        return Ok(signal.clone());
    };
    let sigma = (var / 2.0).sqrt();
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
    let samples = signal
        .samples()
        .iter()
        .map(|&s| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            s + Complex64::new(re, im) * sigma
        })
        .collect();
    Ok(signal.with_samples(samples))
}

/// Multiplies every sample by `gain * exp(j phase)`.
pub fn impair(signal: &IqSignal, gain: f64, phase_deg: f64) -> Result<IqSignal> {
    if !(gain.is_finite() && gain > 0.0) {
        return Err(Error::invalid(format!("gain must be positive, got {gain}")));
    }
    let c = Complex64::from_polar(gain, phase_deg.to_radians());
    Ok(signal.with_samples(signal.samples().iter().map(|s| s * c).collect()))
}
