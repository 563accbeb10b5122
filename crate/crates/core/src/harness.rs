//! Factorial sweep over modulation format, filter kind and roll-off.
//!
//! Each point runs three independent measurements: a short noiseless (or
//! configured) record for EVM and friends, a long noisy record for BER, and a
//! long transmit-only record for the 99% occupied bandwidth.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{awgn, ChannelConfig, RNG_ID};
use crate::error::{Error, Result};
use crate::metrics::{bit_error_rate, build_reference, error_metrics, ErrorSummary};
use crate::modem::{demodulate, transmit, DemodParams, BITS_PER_SYMBOL};
use crate::pn::{generate_pn, LfsrConfig};
use crate::pulse::{design_fir, design_vsg8, FirFilter, Normalization};
use crate::signal::{mean_power_of, FilterKind, IqSignal, ModFormat, RollOff};
use crate::spectrum::{
    bandwidth_efficiency, csv_err, occupied_bandwidth, welch_psd, Window, DEFAULT_OVERLAP,
};

pub const RESULTS_HEADER: [&str; 9] = [
    "format",
    "filter",
    "alpha",
    "evm_pct_rms",
    "mag_err_pct_rms",
    "phase_err_deg_rms",
    "ber",
    "obw_hz",
    "bw_eff_bps_per_hz",
];

/// Span of the software RRC measurement filter paired with 8-tap transmit filters.
pub const VSG8_RX_SPAN: usize = 32;
/// Welch segments are sized for at most this resolution.
pub const PSD_TARGET_RESOLUTION_HZ: f64 = 100.0;
pub const OBW_FRACTION: f64 = 0.99;
/// Roll-off limit for the bandwidth-efficiency best choice.
pub const EFFICIENCY_ALPHA_LIMIT: f64 = 0.35;

pub const DEFAULT_ALPHAS: [f64; 5] = [0.1, 0.22, 0.35, 0.7, 1.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "snake_case")]
pub enum FilterProfile {
    /// Eight-tap truncated filters at 4 samples/symbol.
    Vsg8,
    Long {
        span_symbols: usize,
        samples_per_symbol: usize,
    },
}

impl FilterProfile {
    pub fn long_default() -> Self {
        FilterProfile::Long {
            span_symbols: 32,
            samples_per_symbol: 16,
        }
    }

    pub fn samples_per_symbol(self) -> usize {
        match self {
            FilterProfile::Vsg8 => crate::pulse::VSG8_SPS,
            FilterProfile::Long {
                samples_per_symbol, ..
            } => samples_per_symbol,
        }
    }

    /// Transmit filter for one point.
    pub fn tx_filter(self, kind: FilterKind, alpha: RollOff) -> Result<FirFilter> {
        match self {
            FilterProfile::Vsg8 => design_vsg8(kind, alpha),
            FilterProfile::Long {
                span_symbols,
                samples_per_symbol,
            } => design_fir(kind, alpha, samples_per_symbol, span_symbols, Normalization::UnitEnergy),
        }
    }

    /// Measurement filter: none after RC, a matched RRC after RRC.
    pub fn measurement_filter(self, kind: FilterKind, alpha: RollOff) -> Result<Option<FirFilter>> {
        if kind == FilterKind::RaisedCosine {
            return Ok(None);
        }
        let f = match self {
            FilterProfile::Vsg8 => design_fir(
                FilterKind::RootRaisedCosine,
                alpha,
                crate::pulse::VSG8_SPS,
                VSG8_RX_SPAN,
                Normalization::UnitPeak,
            )?,
            long => long.tx_filter(kind, alpha)?,
        };
        Ok(Some(f))
    }
}

impl std::fmt::Display for FilterProfile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FilterProfile::Vsg8 => f.write_str("vsg8"),
            FilterProfile::Long {
                span_symbols,
                samples_per_symbol,
            } => write!(f, "long(span={span_symbols},sps={samples_per_symbol})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub formats: Vec<ModFormat>,
    pub filter_kinds: Vec<FilterKind>,
    pub alphas: Vec<RollOff>,
    pub symbol_rate_hz: f64,
    /// Symbols measured for EVM, magnitude and phase error, after edge exclusion.
    pub n_symbols: usize,
    /// Bits counted for BER, after edge exclusion.
    pub ber_bits: usize,
    /// `None` skips the noisy run; BER then comes from the metrics run.
    pub ber_ebn0_db: Option<f64>,
    /// Noise for the metrics run; `None` is noiseless.
    pub metrics_ebn0_db: Option<f64>,
    /// Minimum transmit record length for the PSD.
    pub psd_min_samples: usize,
    pub profile: FilterProfile,
    pub master_seed: u64,
    pub pn: LfsrConfig,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            formats: ModFormat::ALL.to_vec(),
            filter_kinds: FilterKind::ALL.to_vec(),
            alphas: DEFAULT_ALPHAS.iter().map(|&a| RollOff::new(a).unwrap()).collect(),
            symbol_rate_hz: 25_000.0,
            n_symbols: 256,
            ber_bits: 1_000_000,
            ber_ebn0_db: Some(6.0),
            metrics_ebn0_db: None,
            psd_min_samples: 262_144,
            profile: FilterProfile::Vsg8,
            master_seed: 1,
            pn: LfsrConfig::pn63(),
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.formats.is_empty() || self.filter_kinds.is_empty() || self.alphas.is_empty() {
            return Err(Error::invalid("formats, filter kinds and alphas must be non-empty"));
        }
        if self.n_symbols < 64 {
            return Err(Error::invalid(format!(
                "n_symbols must be at least 64 (got {})",
                self.n_symbols
            )));
        }
        if self.ber_bits < 2 || !self.ber_bits.is_multiple_of(2) {
            return Err(Error::invalid(format!(
                "ber_bits must be a positive even count (got {})",
                self.ber_bits
            )));
        }
        if !(self.symbol_rate_hz.is_finite() && self.symbol_rate_hz > 0.0) {
            return Err(Error::invalid("symbol rate must be positive"));
        }
        if self.psd_min_samples == 0 {
            return Err(Error::invalid("psd_min_samples must be positive"));
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<(ModFormat, FilterKind, RollOff)> {
        let mut alphas = self.alphas.clone();
        alphas.sort_by(|a, b| a.value().total_cmp(&b.value()));
        let mut out = Vec::new();
        for &f in &self.formats {
            for &k in &self.filter_kinds {
                for &a in &alphas {
                    out.push((f, k, a));
                }
            }
        }
        out
    }
}

/// Bookkeeping for one point, echoed to the metadata sidecar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointMeta {
    pub profile: String,
    pub tx_taps: usize,
    pub measurement_filter: String,
    pub edge_symbols: usize,
    pub metrics_symbols: usize,
    pub metrics_seed: u64,
    pub metrics_bit_errors: usize,
    pub ber_seed: u64,
    pub ber_ebn0_db: Option<f64>,
    pub ber_bits: usize,
    pub ber_errors: usize,
    pub psd_samples: usize,
    pub psd_segment_len: usize,
    pub rng_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub format: ModFormat,
    pub filter_kind: FilterKind,
    pub alpha: RollOff,
    #[serde(flatten)]
    pub errors: ErrorSummary,
    pub ber: f64,
    pub obw_hz: f64,
    pub bw_efficiency: f64,
    pub meta: PointMeta,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Sub-seed for one random stream of one sweep point.
pub fn derive_seed(master: u64, format: ModFormat, kind: FilterKind, alpha: RollOff, stream: u64) -> u64 {
    [format as u64, kind as u64, alpha.value().to_bits(), stream]
        .iter()
        .fold(splitmix64(master), |h, &x| splitmix64(h ^ x))
}

const STREAM_METRICS: u64 = 0;
const STREAM_BER: u64 = 1;

/// Symbols lost to filter ramp-up and ramp-down at each end.
pub fn edge_symbols(tx: &FirFilter, rx: Option<&FirFilter>) -> usize {
    let span = tx.span_symbols() + rx.map_or(0.0, FirFilter::span_symbols);
    (span / 2.0).ceil() as usize
}

/// Mean power away from the ramps at both ends.
fn steady_power(signal: &IqSignal, trim: usize) -> Result<f64> {
    let s = signal.samples();
    if s.len() > 2 * trim {
        mean_power_of(&s[trim..s.len() - trim])
    } else {
        mean_power_of(s)
    }
}

/// Welch segment length giving at most [`PSD_TARGET_RESOLUTION_HZ`].
pub fn psd_segment_len(sample_rate_hz: f64) -> usize {
    ((sample_rate_hz / PSD_TARGET_RESOLUTION_HZ).ceil() as usize).next_power_of_two()
}

struct Chain {
    format: ModFormat,
    tx: FirFilter,
    rx: Option<FirFilter>,
    edge: usize,
    symbol_rate_hz: f64,
}

struct RunOutcome {
    measured: Vec<crate::Complex64>,
    decided: Vec<crate::Complex64>,
    bit_errors: usize,
    bits_counted: usize,
}

impl Chain {
    /// pn -> map -> modulate -> channel -> demodulate, scored over the interior.
    fn run(&self, pn: &LfsrConfig, interior_symbols: usize, ebn0_db: Option<f64>, seed: u64, align: bool) -> Result<RunOutcome> {
        let n_sym = interior_symbols + 2 * self.edge;
        let bits = generate_pn(pn, BITS_PER_SYMBOL * n_sym)?;
        let frame = transmit(bits, self.format, &self.tx, self.symbol_rate_hz)?;
        let sps = self.tx.samples_per_symbol();
        let mut signal = frame.signal;
        if ebn0_db.is_some() {
            let power = steady_power(&signal, self.tx.len())?;
            let cfg = ChannelConfig::new(ebn0_db, BITS_PER_SYMBOL, sps, seed);
            signal = awgn(&signal, &cfg, power)?;
        }
        let mut params = DemodParams::for_chain(self.format, &self.tx, self.rx.clone(), n_sym, self.edge);
        params.align = align;
        let rx = demodulate(&signal, &params)?;
        let (lo, hi) = (self.edge, n_sym - self.edge);
        let tx_bits = frame.bits.slice(BITS_PER_SYMBOL * lo, BITS_PER_SYMBOL * hi);
        let rx_bits = rx.decided_bits.slice(BITS_PER_SYMBOL * lo, BITS_PER_SYMBOL * hi);
        let be = bit_error_rate(&tx_bits, &rx_bits)?;
        Ok(RunOutcome {
            measured: rx.measured_symbols[lo..hi].to_vec(),
            decided: rx.decided_symbols[lo..hi].to_vec(),
            bit_errors: be.errors,
            bits_counted: be.total,
        })
    }
}

pub fn run_point(config: &SweepConfig, format: ModFormat, kind: FilterKind, alpha: RollOff) -> Result<MetricsRecord> {
    config.validate()?;
    let tx = config.profile.tx_filter(kind, alpha)?;
    let rx = config.profile.measurement_filter(kind, alpha)?;
    if let FilterProfile::Long { .. } = config.profile {
        // The Eb/N0 definition assumes a unit-energy matched cascade.
        if (tx.energy() - 1.0).abs() > 1e-9 {
            return Err(Error::invalid("long-profile transmit filter is not unit energy"));
        }
    }
    let edge = edge_symbols(&tx, rx.as_ref());
    let chain = Chain {
        format,
        tx,
        rx,
        edge,
        symbol_rate_hz: config.symbol_rate_hz,
    };

    let metrics_seed = derive_seed(config.master_seed, format, kind, alpha, STREAM_METRICS);
    let m = chain.run(&config.pn, config.n_symbols, config.metrics_ebn0_db, metrics_seed, true)?;
    let reference = build_reference(&m.decided)?;
    let errors = error_metrics(&m.measured, &reference, true)?;

    let ber_seed = derive_seed(config.master_seed, format, kind, alpha, STREAM_BER);
    let (ber_errors, ber_bits) = match config.ber_ebn0_db {
        Some(db) => {
            let b = chain.run(&config.pn, config.ber_bits / BITS_PER_SYMBOL, Some(db), ber_seed, false)?;
            (b.bit_errors, b.bits_counted)
        }
        None => (m.bit_errors, m.bits_counted),
    };
    let ber = ber_errors as f64 / ber_bits as f64;

    let sps = chain.tx.samples_per_symbol();
    let psd_symbols = config.psd_min_samples.div_ceil(sps);
    let bits = generate_pn(&config.pn, BITS_PER_SYMBOL * psd_symbols)?;
    let long = transmit(bits, format, &chain.tx, config.symbol_rate_hz)?;
    let segment = psd_segment_len(long.signal.sample_rate_hz()).min(long.signal.len().next_power_of_two() / 2);
    let psd = welch_psd(&long.signal, segment, DEFAULT_OVERLAP, Window::Hann)?;
    let obw_hz = occupied_bandwidth(&psd, OBW_FRACTION)?;
    let bit_rate = BITS_PER_SYMBOL as f64 * config.symbol_rate_hz;
    let bw_efficiency = bandwidth_efficiency(bit_rate, obw_hz)?;

    Ok(MetricsRecord {
        format,
        filter_kind: kind,
        alpha,
        errors,
        ber,
        obw_hz,
        bw_efficiency,
        meta: PointMeta {
            profile: config.profile.to_string(),
            tx_taps: chain.tx.len(),
            measurement_filter: match &chain.rx {
                None => "off".into(),
                Some(f) => format!("rrc(taps={},sps={})", f.len(), f.samples_per_symbol()),
            },
            edge_symbols: edge,
            metrics_symbols: m.measured.len(),
            metrics_seed,
            metrics_bit_errors: m.bit_errors,
            ber_seed,
            ber_ebn0_db: config.ber_ebn0_db.or(config.metrics_ebn0_db),
            ber_bits,
            ber_errors,
            psd_samples: long.signal.len(),
            psd_segment_len: segment,
            rng_id: RNG_ID.to_string(),
        },
    })
}

/// All points in (format, kind, ascending alpha) order, computed in parallel.
pub fn run_sweep(config: &SweepConfig) -> Result<Vec<MetricsRecord>> {
    config.validate()?;
    config
        .points()
        .into_par_iter()
        .map(|(f, k, a)| {
            run_point(config, f, k, a).map_err(|e| Error::SweepPoint {
                format: f,
                kind: k,
                alpha: a.value(),
                source: Box::new(e),
            })
        })
        .collect()
}

pub fn write_results_csv<W: Write>(w: W, records: &[MetricsRecord]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(RESULTS_HEADER).map_err(csv_err)?;
    for r in records {
        out.write_record([
            r.format.to_string(),
            r.filter_kind.to_string(),
            r.alpha.to_string(),
            format!("{:.10e}", r.errors.evm_pct_rms),
            format!("{:.10e}", r.errors.mag_err_pct_rms),
            format!("{:.10e}", r.errors.phase_err_deg_rms),
            format!("{:.10e}", r.ber),
            format!("{:.10e}", r.obw_hz),
            format!("{:.10e}", r.bw_efficiency),
        ])
        .map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Metric {
    Evm,
    MagnitudeError,
    PhaseError,
    BandwidthEfficiency,
    Ber,
}

impl Metric {
    pub const ALL: [Metric; 5] = [
        Metric::Evm,
        Metric::MagnitudeError,
        Metric::PhaseError,
        Metric::BandwidthEfficiency,
        Metric::Ber,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Metric::Evm => "EVM",
            Metric::MagnitudeError => "Magnitude Error",
            Metric::PhaseError => "Phase Error",
            Metric::BandwidthEfficiency => "Bandwidth Efficiency",
            Metric::Ber => "BER",
        }
    }

    pub fn value(self, r: &MetricsRecord) -> f64 {
        match self {
            Metric::Evm => r.errors.evm_pct_rms,
            Metric::MagnitudeError => r.errors.mag_err_pct_rms,
            Metric::PhaseError => r.errors.phase_err_deg_rms,
            Metric::BandwidthEfficiency => r.bw_efficiency,
            Metric::Ber => r.ber,
        }
    }

    fn higher_is_better(self) -> bool {
        self == Metric::BandwidthEfficiency
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestChoice {
    pub metric: Metric,
    pub value: f64,
    /// Every point attaining `value`.
    pub winners: Vec<(ModFormat, FilterKind, RollOff)>,
}

/// Per-metric best point; efficiency is compared only up to alpha = 0.35.
pub fn best_choice_summary(records: &[MetricsRecord]) -> Result<Vec<BestChoice>> {
    if records.is_empty() {
        return Err(Error::invalid("no records to summarize"));
    }
    Metric::ALL
        .iter()
        .map(|&metric| {
            let mut pool: Vec<&MetricsRecord> = records.iter().collect();
            if metric == Metric::BandwidthEfficiency {
                let limited: Vec<&MetricsRecord> = records
                    .iter()
                    .filter(|r| r.alpha.value() <= EFFICIENCY_ALPHA_LIMIT)
                    .collect();
                if !limited.is_empty() {
                    pool = limited;
                }
            }
            let pick = if metric.higher_is_better() { f64::max } else { f64::min };
            let init = if metric.higher_is_better() { f64::NEG_INFINITY } else { f64::INFINITY };
            let value = pool.iter().map(|r| metric.value(r)).fold(init, pick);
            let winners = pool
                .iter()
                .filter(|r| metric.value(r) == value)
                .map(|r| (r.format, r.filter_kind, r.alpha))
                .collect();
            Ok(BestChoice {
                metric,
                value,
                winners,
            })
        })
        .collect()
}

pub fn format_summary(rows: &[BestChoice]) -> String {
    let mut s = String::from("Performance metric\tBest choice\n");
    for row in rows {
        let winners: Vec<String> = row
            .winners
            .iter()
            .map(|(f, k, a)| format!("{f} with {k} filter (alpha = {a})"))
            .collect();
        let _ = writeln!(s, "{}\t{} [{:.6e}]", row.metric.label(), winners.join("; "), row.value);
    }
    s
}

/// Plot files: x = alpha, one column per format-filter series.
pub const PLOT_FILES: [(&str, Metric); 5] = [
    ("fig4_evm.csv", Metric::Evm),
    ("fig5_mag_err.csv", Metric::MagnitudeError),
    ("fig6_phase_err.csv", Metric::PhaseError),
    ("fig7_bw_eff.csv", Metric::BandwidthEfficiency),
    ("fig8_ber.csv", Metric::Ber),
];

pub fn write_plot_csv<W: Write>(w: W, records: &[MetricsRecord], metric: Metric) -> Result<()> {
    let mut series: Vec<(ModFormat, FilterKind)> = Vec::new();
    let mut table: BTreeMap<u64, BTreeMap<(ModFormat, FilterKind), f64>> = BTreeMap::new();
    for r in records {
        let key = (r.format, r.filter_kind);
        if !series.contains(&key) {
            series.push(key);
        }
        table
            .entry(r.alpha.value().to_bits())
            .or_default()
            .insert(key, metric.value(r));
    }
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["alpha".to_string()];
    header.extend(series.iter().map(|(f, k)| format!("{f}-{k}")));
    out.write_record(&header).map_err(csv_err)?;
    for (alpha_bits, row) in table {
        let mut rec = vec![f64::from_bits(alpha_bits).to_string()];
        rec.extend(
            series
                .iter()
                .map(|k| row.get(k).map_or(String::new(), |v| format!("{v:.10e}"))),
        );
        out.write_record(&rec).map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct RunMetadata<'a> {
    software: String,
    config: &'a SweepConfig,
    rng_id: &'static str,
    symbol_map: &'static str,
    measurement_filter_pairing: &'static str,
    obw_method: &'static str,
    points: Vec<PointEntry<'a>>,
}

#[derive(Serialize)]
struct PointEntry<'a> {
    format: ModFormat,
    filter: FilterKind,
    alpha: RollOff,
    #[serde(flatten)]
    meta: &'a PointMeta,
}

pub fn write_metadata_json<W: Write>(mut w: W, config: &SweepConfig, records: &[MetricsRecord]) -> Result<()> {
    let meta = RunMetadata {
        software: format!("pslab {}", env!("CARGO_PKG_VERSION")),
        config,
        rng_id: RNG_ID,
        symbol_map: "gray: bit pair (b_I, b_Q), 0 -> +1/sqrt(2), 1 -> -1/sqrt(2) per rail",
        measurement_filter_pairing: "RC transmit -> off, RRC transmit -> RRC",
        obw_method: "welch (hann, 50% overlap), 0.5% power trimmed from each tail",
        points: records
            .iter()
            .map(|r| PointEntry {
                format: r.format,
                filter: r.filter_kind,
                alpha: r.alpha,
                meta: &r.meta,
            })
            .collect(),
    };
    serde_json::to_writer_pretty(&mut w, &meta)?;
    writeln!(w)?;
    Ok(())
}

/// Writes `results.csv`, `metadata.json`, the five plot files and `table3_summary.txt`.
pub fn write_outputs(dir: &Path, config: &SweepConfig, records: &[MetricsRecord]) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut buf = Vec::new();
    write_results_csv(&mut buf, records)?;
    fs::write(dir.join("results.csv"), &buf)?;

    buf.clear();
    write_metadata_json(&mut buf, config, records)?;
    fs::write(dir.join("metadata.json"), &buf)?;

    for (name, metric) in PLOT_FILES {
        buf.clear();
        write_plot_csv(&mut buf, records, metric)?;
        fs::write(dir.join(name), &buf)?;
    }
    let summary = format_summary(&best_choice_summary(records)?);
    fs::write(dir.join("table3_summary.txt"), summary)?;
    Ok(())
}
