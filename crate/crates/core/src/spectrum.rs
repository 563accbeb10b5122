//! Welch PSD, occupied bandwidth and bandwidth efficiency.

use std::f64::consts::PI;
use std::io::Write;

use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::IqSignal;
use crate::Complex64;

pub const DEFAULT_SEGMENT_LEN: usize = 4096;
pub const DEFAULT_OVERLAP: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Window {
    #[default]
    Hann,
    Rectangular,
}

impl Window {
    /// Periodic window of length `n`.
    fn coefficients(self, n: usize) -> Vec<f64> {
        match self {
            Window::Hann => (0..n)
                .map(|k| 0.5 - 0.5 * (2.0 * PI * k as f64 / n as f64).cos())
                .collect(),
            Window::Rectangular => vec![1.0; n],
        }
    }
}

/// Two-sided power spectral density on a grid centred at 0 Hz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsdEstimate {
    pub freqs_hz: Vec<f64>,
    pub density: Vec<f64>,
    pub resolution_hz: f64,
}

impl PsdEstimate {
    pub fn total_power(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.resolution_hz
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["freq_hz", "density"]).map_err(csv_err)?;
        for (f, d) in self.freqs_hz.iter().zip(&self.density) {
            out.write_record([format!("{f:.10e}"), format!("{d:.10e}")])
                .map_err(csv_err)?;
        }
        out.flush()?;
        Ok(())
    }
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::invalid(format!("csv: {other:?}")),
    }
}

/// Averaged, windowed, overlapped periodogram normalized by `fs * sum(w^2)`,
/// so that `sum(density) * df` equals the mean power.
pub fn welch_psd(
    signal: &IqSignal,
    segment_len: usize,
    overlap_fraction: f64,
    window: Window,
) -> Result<PsdEstimate> {
    if segment_len == 0 || !segment_len.is_power_of_two() {
        return Err(Error::invalid(format!(
            "segment length {segment_len} is not a power of two"
        )));
    }
    if !(0.0..1.0).contains(&overlap_fraction) {
        return Err(Error::invalid(format!(
            "overlap {overlap_fraction} outside [0, 1)"
        )));
    }
    if segment_len > signal.len() {
        return Err(Error::InsufficientLength {
            needed: segment_len,
            available: signal.len(),
        });
    }
    let n = segment_len;
    let hop = (n - (n as f64 * overlap_fraction).floor() as usize).max(1);
    let w = window.coefficients(n);
    let fs = signal.sample_rate_hz();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);

    let x = signal.samples();
    let mut acc = vec![0.0f64; n];
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    let mut segments = 0usize;
    let mut start = 0;
    while start + n <= x.len() {
        for ((b, &s), &wk) in buf.iter_mut().zip(&x[start..start + n]).zip(&w) {
            *b = s * wk;
        }
        fft.process(&mut buf);
        acc.iter_mut().zip(&buf).for_each(|(a, b)| *a += b.norm_sqr());
        segments += 1;
        start += hop;
    }

    let norm = segments as f64 * fs * w.iter().map(|v| v * v).sum::<f64>();
    let half = n / 2;
    let resolution_hz = fs / n as f64;
    // fftshift: bin k maps to frequency (k - n/2) * df
    let density = (0..n).map(|k| acc[(k + half) % n] / norm).collect();
    let freqs_hz = (0..n)
        .map(|k| (k as f64 - half as f64) * resolution_hz)
        .collect();
    Ok(PsdEstimate {
        freqs_hz,
        density,
        resolution_hz,
    })
}

/// Width between the points where `(1 - fraction) / 2` of the power lies
/// beyond each edge. Each bin's power is spread uniformly over
/// `[f - df/2, f + df/2]`, which interpolates inside the boundary bins.
pub fn occupied_bandwidth(psd: &PsdEstimate, fraction: f64) -> Result<f64> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::invalid(format!("fraction {fraction} outside (0, 1)")));
    }
    if psd.density.is_empty() || psd.density.len() != psd.freqs_hz.len() {
        return Err(Error::DegeneratePsd("empty or inconsistent grid"));
    }
    if psd.density.iter().any(|d| !d.is_finite() || *d < 0.0) {
        return Err(Error::DegeneratePsd("negative or non-finite density"));
    }
    let df = psd.resolution_hz;
    let powers: Vec<f64> = psd.density.iter().map(|d| d * df).collect();
    let total: f64 = powers.iter().sum();
    if total.is_nan() || total <= 0.0 {
        return Err(Error::DegeneratePsd("zero total power"));
    }
    let tail = (1.0 - fraction) / 2.0 * total;

    let edge = |order: &mut dyn Iterator<Item = usize>, sign: f64| -> f64 {
        let mut cum = 0.0;
        for k in order {
            let p = powers[k];
            if cum + p >= tail && p > 0.0 {
                let frac = (tail - cum) / p;
                return psd.freqs_hz[k] - sign * df / 2.0 + sign * frac * df;
            }
            cum += p;
        }
        unreachable!("tail is below total power")
    };
    let lower = edge(&mut (0..powers.len()), 1.0);
    let upper = edge(&mut (0..powers.len()).rev(), -1.0);
    Ok((upper - lower).max(0.0))
}

pub fn bandwidth_efficiency(bit_rate_bps: f64, obw_hz: f64) -> Result<f64> {
    if !(bit_rate_bps > 0.0 && obw_hz > 0.0) {
        return Err(Error::invalid(format!(
            "bandwidth efficiency needs positive inputs (bit rate {bit_rate_bps}, OBW {obw_hz})"
        )));
    }
    Ok(bit_rate_bps / obw_hz)
}
