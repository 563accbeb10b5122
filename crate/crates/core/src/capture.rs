//! IQ capture files: interleaved little-endian `f32` I/Q payload plus a JSON
//! sidecar with the same basename and a `.json` extension.

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::IqSignal;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaptureMeta {
    pub sample_rate_hz: f64,
    pub n_samples: usize,
    pub description: String,
    pub created_by: String,
    pub format_version: u32,
}

pub fn sidecar_path(payload: &Path) -> PathBuf {
    payload.with_extension("json")
}

pub fn write_capture(path: &Path, signal: &IqSignal, description: &str) -> Result<CaptureMeta> {
    let sidecar = sidecar_path(path);
    if sidecar == path {
        return Err(Error::invalid(format!(
            "capture payload '{}' would collide with its .json sidecar",
            path.display()
        )));
    }
    let mut payload = Vec::with_capacity(8 * signal.len());
    for s in signal.samples() {
        payload.extend_from_slice(&(s.re as f32).to_le_bytes());
        payload.extend_from_slice(&(s.im as f32).to_le_bytes());
    }
    let meta = CaptureMeta {
        sample_rate_hz: signal.sample_rate_hz(),
        n_samples: signal.len(),
        description: description.to_string(),
        created_by: format!("pslab {}", env!("CARGO_PKG_VERSION")),
        format_version: FORMAT_VERSION,
    };
    fs::write(path, payload)?;
    fs::write(&sidecar, serde_json::to_string_pretty(&meta)? + "\n")?;
    Ok(meta)
}

pub fn read_capture(path: &Path) -> Result<(IqSignal, CaptureMeta)> {
    let sidecar = sidecar_path(path);
    let meta_text = fs::read_to_string(&sidecar)?;
    let meta: CaptureMeta = serde_json::from_str(&meta_text)
        .map_err(|e| Error::CorruptCapture(format!("{}: {e}", sidecar.display())))?;
    if meta.format_version != FORMAT_VERSION {
        return Err(Error::CorruptCapture(format!(
            "unsupported format_version {}",
            meta.format_version
        )));
    }
    let payload = fs::read(path)?;
    if payload.len() != 8 * meta.n_samples {
        return Err(Error::CorruptCapture(format!(
            "payload is {} bytes, sidecar declares {} samples ({} bytes)",
            payload.len(),
            meta.n_samples,
            8 * meta.n_samples
        )));
    }
    let samples: Vec<Complex64> = payload
        .chunks_exact(8)
        .map(|c| {
            let re = f32::from_le_bytes([c[0], c[1], c[2], c[3]]);
            let im = f32::from_le_bytes([c[4], c[5], c[6], c[7]]);
            Complex64::new(f64::from(re), f64::from(im))
        })
        .collect();
    if samples.iter().any(|s| !s.re.is_finite() || !s.im.is_finite()) {
        return Err(Error::CorruptCapture("non-finite sample in payload".into()));
    }
    let signal = IqSignal::new(samples, meta.sample_rate_hz)
        .map_err(|e| Error::CorruptCapture(e.to_string()))?;
    Ok((signal, meta))
}
