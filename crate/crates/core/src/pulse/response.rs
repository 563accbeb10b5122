use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use super::{rc_freq_response, FirFilter};
use crate::error::{Error, Result};
use crate::signal::RollOff;

/// Frequency points per symbol-rate interval used by [`check_nyquist_isi`].
const ISI_GRID_POINTS: usize = 512;

/// Zero-ISI diagnostics for a sampled pulse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsiReport {
    /// Maximum of `|sum_k G(f + kF) - T| / T` over `|f| <= F/2`.
    pub max_folded_deviation: f64,
    /// Maximum `|g(nT)| / |g(0)|` over nonzero `n`.
    pub worst_symbol_crossing: f64,
}

/// Checks the Nyquist criterion in both domains.
///
/// The pulse centre is tap `floor((M - 1) / 2)`. The folded spectrum is built
/// from the centred discrete-time transform of the taps and its `sps` aliases
/// spaced by the symbol rate; the ideal fold is `sps * g(0)` in tap units.
pub fn check_nyquist_isi(filter: &FirFilter) -> Result<IsiReport> {
    let sps = filter.samples_per_symbol();
    if sps < 2 {
        return Err(Error::invalid(format!(
            "zero-ISI check needs at least 2 samples/symbol (got {sps})"
        )));
    }
    let taps = filter.taps();
    let c = filter.center_index();
    let h0 = taps[c];
    if h0 == 0.0 {
        return Err(Error::invalid("pulse is zero at its centre"));
    }

    let mut worst_symbol_crossing = 0.0f64;
    let mut k = c % sps;
    while k < taps.len() {
        if k != c {
            worst_symbol_crossing = worst_symbol_crossing.max((taps[k] / h0).abs());
        }
        k += sps;
    }

    // Frequencies in cycles per symbol, f in [-1/2, 1/2].
    let dtft = |f_sym: f64| -> Complex64 {
        let w = -2.0 * PI * f_sym / sps as f64;
        taps.iter()
            .enumerate()
            .map(|(i, &h)| h * Complex64::from_polar(1.0, w * (i as f64 - c as f64)))
            .sum()
    };
    let ideal = sps as f64 * h0;
    let mut max_folded_deviation = 0.0f64;
    for i in 0..=ISI_GRID_POINTS {
        let f = -0.5 + i as f64 / ISI_GRID_POINTS as f64;
        let folded: Complex64 = (0..sps).map(|k| dtft(f + k as f64)).sum();
        max_folded_deviation = max_folded_deviation.max((folded / ideal - 1.0).norm());
    }

    Ok(IsiReport {
        max_folded_deviation,
        worst_symbol_crossing,
    })
}

/// Complex amplitude response `f (Hz) -> H(f)`.
#[derive(Clone)]
pub struct FrequencyResponse {
    eval: Arc<dyn Fn(f64) -> Complex64 + Send + Sync>,
    band_limit_hz: f64,
}

impl FrequencyResponse {
    pub fn new<F>(band_limit_hz: f64, eval: F) -> Self
    where
        F: Fn(f64) -> Complex64 + Send + Sync + 'static,
    {
        FrequencyResponse {
            eval: Arc::new(eval),
            band_limit_hz,
        }
    }

    pub fn eval(&self, f_hz: f64) -> Complex64 {
        (self.eval)(f_hz)
    }

    pub fn band_limit_hz(&self) -> f64 {
        self.band_limit_hz
    }

    /// `G_RC(f)`.
    pub fn raised_cosine(alpha: RollOff, symbol_rate_hz: f64) -> Self {
        FrequencyResponse::new(alpha.band_edge_hz(symbol_rate_hz), move |f| {
            Complex64::new(rc_freq_response(f, alpha, symbol_rate_hz), 0.0)
        })
    }

    /// `sqrt(G_RC(f))`.
    pub fn root_raised_cosine(alpha: RollOff, symbol_rate_hz: f64) -> Self {
        FrequencyResponse::new(alpha.band_edge_hz(symbol_rate_hz), move |f| {
            Complex64::new(rc_freq_response(f, alpha, symbol_rate_hz).sqrt(), 0.0)
        })
    }

    /// Frequency-flat response, e.g. an ideal channel.
    pub fn constant(value: Complex64, band_limit_hz: f64) -> Self {
        FrequencyResponse::new(band_limit_hz, move |_| value)
    }

    /// `dt * sum_k h_k exp(-j 2 pi f (k - (M-1)/2) dt)` with `dt = T / sps`:
    /// the transform of the sampled pulse, referenced to its centre.
    pub fn from_fir(filter: &FirFilter, symbol_rate_hz: f64) -> Self {
        let fs = symbol_rate_hz * filter.samples_per_symbol() as f64;
        let dt = fs.recip();
        let taps = filter.taps().to_vec();
        let centre = filter.group_delay_samples();
        FrequencyResponse::new(fs / 2.0, move |f| {
            let w = -2.0 * PI * f * dt;
            taps.iter()
                .enumerate()
                .map(|(k, &h)| h * Complex64::from_polar(1.0, w * (k as f64 - centre)))
                .sum::<Complex64>()
                * dt
        })
    }
}

impl fmt::Debug for FrequencyResponse {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FrequencyResponse")
            .field("band_limit_hz", &self.band_limit_hz)
            .finish_non_exhaustive()
    }
}

/// Pointwise product of the parts, e.g. channel × transmit × matched filter.
pub fn cascade_response(parts: &[FrequencyResponse]) -> Result<FrequencyResponse> {
    if parts.is_empty() {
        return Err(Error::invalid("cascade needs at least one response"));
    }
    let band = parts
        .iter()
        .map(|p| p.band_limit_hz)
        .fold(f64::INFINITY, f64::min);
    let parts = parts.to_vec();
    Ok(FrequencyResponse::new(band, move |f| {
        parts.iter().map(|p| p.eval(f)).product()
    }))
}
