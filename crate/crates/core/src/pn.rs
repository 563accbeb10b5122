//! Pseudo-noise bit source built on a Fibonacci LFSR.
//!
//! The register holds `degree` bits. Each step outputs the least significant
//! stage, XORs the stages named by the feedback polynomial's lower exponents,
//! shifts right, and inserts the feedback bit at the top stage. With the
//! register read LSB-first as `a_k .. a_{k+n-1}`, this realizes the recurrence
//! `a_{k+n} = XOR_{e in taps, e < n} a_{k+e}` for the polynomial
//! `x^n + ... + 1`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::BitStream;

pub const TOPOLOGY: &str = "fibonacci (external XOR, output = LSB)";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LfsrConfig {
    pub degree: u32,
    /// Exponents of the feedback polynomial, including `degree` and 0.
    pub taps: Vec<u32>,
    /// Initial register contents, bit `i` is stage `i`.
    pub seed: u32,
}

impl LfsrConfig {
    /// `x^6 + x + 1` with an all-ones seed: period 63.
    pub fn pn63() -> Self {
        LfsrConfig {
            degree: 6,
            taps: vec![6, 1, 0],
            seed: 0b11_1111,
        }
    }

    fn validate(&self) -> Result<u32> {
        if self.degree == 0 || self.degree > 31 {
            return Err(Error::invalid(format!(
                "LFSR degree {} outside 1..=31",
                self.degree
            )));
        }
        if !self.taps.contains(&self.degree) {
            return Err(Error::invalid("polynomial must include the x^degree term"));
        }
        if let Some(&bad) = self.taps.iter().find(|&&e| e > self.degree) {
            return Err(Error::invalid(format!(
                "tap exponent {bad} exceeds degree {}",
                self.degree
            )));
        }
        let mask = (1u32 << self.degree) - 1;
        if self.seed & mask == 0 {
            return Err(Error::DegenerateSeed);
        }
        if self.seed & !mask != 0 {
            return Err(Error::invalid(format!(
                "seed {:#b} wider than {} bits",
                self.seed, self.degree
            )));
        }
        Ok(self
            .taps
            .iter()
            .filter(|&&e| e < self.degree)
            .fold(0, |m, &e| m | (1 << e)))
    }

    /// Polynomial in conventional notation, e.g. `x^6+x+1`.
    pub fn polynomial(&self) -> String {
        let mut exps = self.taps.clone();
        exps.sort_unstable_by(|a, b| b.cmp(a));
        exps.dedup();
        exps.iter()
            .map(|&e| match e {
                0 => "1".to_string(),
                1 => "x".to_string(),
                _ => format!("x^{e}"),
            })
            .collect::<Vec<_>>()
            .join("+")
    }
}

impl Default for LfsrConfig {
    fn default() -> Self {
        LfsrConfig::pn63()
    }
}

impl fmt::Display for LfsrConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} seed={:0width$b}",
            self.polynomial(),
            self.seed,
            width = self.degree as usize
        )
    }
}

/// Running register; yields one output bit per step.
#[derive(Debug, Clone)]
pub struct Lfsr {
    state: u32,
    feedback_mask: u32,
    top: u32,
}

impl Lfsr {
    pub fn new(config: &LfsrConfig) -> Result<Self> {
        let feedback_mask = config.validate()?;
        Ok(Lfsr {
            state: config.seed,
            feedback_mask,
            top: config.degree - 1,
        })
    }

    pub fn state(&self) -> u32 {
        self.state
    }
}

impl Iterator for Lfsr {
    type Item = bool;

    fn next(&mut self) -> Option<bool> {
        let out = self.state & 1 == 1;
        let fb = (self.state & self.feedback_mask).count_ones() & 1;
        self.state = (self.state >> 1) | (fb << self.top);
        Some(out)
    }
}

/// First `n_bits` output bits of the register described by `config`.
pub fn generate_pn(config: &LfsrConfig, n_bits: usize) -> Result<BitStream> {
    if n_bits == 0 {
        return Err(Error::invalid("n_bits must be at least 1"));
    }
    Ok(Lfsr::new(config)?.take(n_bits).collect())
}
