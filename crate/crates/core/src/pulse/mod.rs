//! Raised-cosine and root-raised-cosine pulses.
//!
//! Time arguments are normalized to the symbol period (`t_over_t = t / T`).
//! Both impulse responses have removable singularities; whenever the
//! denominator falls below [`SINGULARITY_GUARD`] the closed-form limit is
//! returned instead of the ratio.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4, PI};

use crate::signal::RollOff;

mod fir;
mod response;

pub use fir::{
    convolve, design_fir, design_vsg8, fir_apply, read_taps_csv, vsg_reference_taps,
    write_taps_csv, FirFilter, Normalization, VSG8_SPS, VSG8_TAPS,
};
pub use response::{cascade_response, check_nyquist_isi, FrequencyResponse, IsiReport};

/// Denominator magnitude (normalized units) below which limits are used.
pub const SINGULARITY_GUARD: f64 = 1e-9;

/// `sin(pi x) / (pi x)`, with `sinc(0) = 1`.
pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = PI * x;
        px.sin() / px
    }
}

/// Raised-cosine impulse response, unit value at `t = 0`.
pub fn rc_impulse(t_over_t: f64, alpha: RollOff) -> f64 {
    let t = t_over_t.abs();
    let a = alpha.value();
    if t < SINGULARITY_GUARD {
        return 1.0;
    }
    let d = 1.0 - (2.0 * a * t).powi(2);
    if d.abs() < SINGULARITY_GUARD {
        // |t| = T / (2 alpha)
        return FRAC_PI_4 * sinc(1.0 / (2.0 * a));
    }
    sinc(t) * (PI * a * t).cos() / d
}

/// Root-raised-cosine impulse response, value `1 - alpha + 4 alpha / pi` at `t = 0`.
pub fn rrc_impulse(t_over_t: f64, alpha: RollOff) -> f64 {
    let t = t_over_t.abs();
    let a = alpha.value();
    if t < SINGULARITY_GUARD {
        return 1.0 - a + 4.0 * a / PI;
    }
    let d = 1.0 - (4.0 * a * t).powi(2);
    if d.abs() < SINGULARITY_GUARD {
        // |t| = T / (4 alpha)
        let arg = PI / (4.0 * a);
        return a * FRAC_1_SQRT_2
            * ((1.0 + 2.0 / PI) * arg.sin() + (1.0 - 2.0 / PI) * arg.cos());
    }
    ((PI * (1.0 - a) * t).sin() + 4.0 * a * t * (PI * (1.0 + a) * t).cos()) / (PI * t * d)
}

/// Raised-cosine spectrum `G(f)`: `T` on the flat band, cosine roll-off, zero
/// beyond `(1 + alpha) F / 2`.
pub fn rc_freq_response(f_hz: f64, alpha: RollOff, symbol_rate_hz: f64) -> f64 {
    let period = symbol_rate_hz.recip();
    let a = alpha.value();
    let f = f_hz.abs();
    let flat_edge = (1.0 - a) * symbol_rate_hz / 2.0;
    let stop_edge = (1.0 + a) * symbol_rate_hz / 2.0;
    if f <= flat_edge {
        period
    } else if f >= stop_edge {
        0.0
    } else {
        period / 2.0 * (1.0 + (PI * period / a * (f - (1.0 - a) / (2.0 * period))).cos())
    }
}

/// Evaluates the pulse of the given kind.
pub fn impulse(kind: crate::signal::FilterKind, t_over_t: f64, alpha: RollOff) -> f64 {
    match kind {
        crate::signal::FilterKind::RaisedCosine => rc_impulse(t_over_t, alpha),
        crate::signal::FilterKind::RootRaisedCosine => rrc_impulse(t_over_t, alpha),
    }
}
