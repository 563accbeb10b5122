//! Symbol-instant error metrics: EVM, magnitude error, phase error and BER.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::BitStream;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorSummary {
    pub evm_pct_rms: f64,
    pub mag_err_pct_rms: f64,
    pub phase_err_deg_rms: f64,
    pub n_symbols: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BitErrors {
    pub errors: usize,
    pub total: usize,
}

impl BitErrors {
    pub fn ber(&self) -> f64 {
        self.errors as f64 / self.total as f64
    }
}

fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::LengthMismatch(a, b));
    }
    if a == 0 {
        return Err(Error::EmptySignal);
    }
    Ok(())
}

/// Least-squares complex gain `c` minimizing `sum |c m_k - r_k|^2`.
pub fn align(measured: &[Complex64], reference: &[Complex64]) -> Result<Complex64> {
    check_lengths(measured.len(), reference.len())?;
    let num: Complex64 = measured.iter().zip(reference).map(|(m, r)| m.conj() * r).sum();
    let den: f64 = measured.iter().map(|m| m.norm_sqr()).sum();
    if den == 0.0 {
        return Err(Error::ZeroPower);
    }
    Ok(num / den)
}

/// Angle difference in degrees, wrapped to `(-180, 180]`.
fn wrapped_phase_deg(m: Complex64, r: Complex64) -> f64 {
    let d = (m.arg() - r.arg()).to_degrees();
    let w = d - 360.0 * (d / 360.0).round();
    if w <= -180.0 {
        w + 360.0
    } else if w > 180.0 {
        w - 360.0
    } else {
        w
    }
}

pub fn error_metrics(
    measured: &[Complex64],
    reference: &[Complex64],
    pre_align: bool,
) -> Result<ErrorSummary> {
    check_lengths(measured.len(), reference.len())?;
    if reference.iter().any(|r| r.norm_sqr() == 0.0) {
        return Err(Error::UndefinedPhaseReference);
    }
    let c = if pre_align {
        align(measured, reference)?
    } else {
        Complex64::new(1.0, 0.0)
    };
    let n = measured.len() as f64;
    let ref_rms = (reference.iter().map(|r| r.norm_sqr()).sum::<f64>() / n).sqrt();
    let (mut e2, mut m2, mut p2) = (0.0, 0.0, 0.0);
    for (&m, &r) in measured.iter().zip(reference) {
        let m = c * m;
        e2 += (m - r).norm_sqr();
        m2 += (m.norm() - r.norm()).powi(2);
        p2 += wrapped_phase_deg(m, r).powi(2);
    }
    Ok(ErrorSummary {
        evm_pct_rms: 100.0 * (e2 / n).sqrt() / ref_rms,
        mag_err_pct_rms: 100.0 * (m2 / n).sqrt() / ref_rms,
        phase_err_deg_rms: (p2 / n).sqrt(),
        n_symbols: measured.len(),
    })
}

/// Ideal reference at symbol instants. An RC reference filter is zero-ISI at
/// those instants, so this is the decided symbols themselves once each one
/// is confirmed to be a QPSK point.
pub fn build_reference(decided: &[Complex64]) -> Result<Vec<Complex64>> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    for &s in decided {
        let on = (s.re.abs() - h).abs() < 1e-9 && (s.im.abs() - h).abs() < 1e-9;
        if !on {
            return Err(Error::NotOnConstellation(s));
        }
    }
    Ok(decided.to_vec())
}

pub fn bit_error_rate(tx: &BitStream, rx: &BitStream) -> Result<BitErrors> {
    check_lengths(tx.len(), rx.len())?;
    let errors = tx.bits().iter().zip(rx.bits()).filter(|(a, b)| a != b).count();
    Ok(BitErrors {
        errors,
        total: tx.len(),
    })
}
