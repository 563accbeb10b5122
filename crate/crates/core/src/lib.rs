//! Baseband QPSK/OQPSK transmission laboratory.
//!
//! The crate synthesizes pulse-shaped QPSK and OQPSK signals with raised-cosine
//! (RC) and root-raised-cosine (RRC) filters, passes them through an optional
//! AWGN channel, demodulates them with known timing, and measures the usual
//! vector-signal-analyzer figures of merit: EVM, magnitude error, phase error,
//! bit error rate and 99% occupied bandwidth. The [`harness`] module sweeps the
//! filter roll-off factor over a modulation × filter grid and tabulates results.
//!
//! ```
//! use pslab::{pulse, signal::{FilterKind, RollOff}};
//!
//! let alpha = RollOff::new(0.35).unwrap();
//! let rrc = pulse::design_fir(FilterKind::RootRaisedCosine, alpha, 16, 16,
//!     pulse::Normalization::UnitPeak).unwrap();
//! assert_eq!(rrc.len(), 257);
//! assert!((rrc.taps()[128] - 1.0).abs() < 1e-12);
//! ```

pub mod capture;
pub mod channel;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod modem;
pub mod pn;
pub mod pulse;
pub mod signal;
pub mod spectrum;

pub use error::{Error, Result};
pub use num_complex::Complex64;
