use std::fs;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pslab::capture::{read_capture, write_capture};
use pslab::channel::{awgn, impair, ChannelConfig};
use pslab::harness::{
    best_choice_summary, edge_symbols, format_summary, psd_segment_len, run_sweep, write_outputs,
    FilterProfile, SweepConfig,
};
use pslab::metrics::{bit_error_rate, build_reference, error_metrics};
use pslab::modem::{demodulate, transmit, DemodParams, BITS_PER_SYMBOL};
use pslab::pn::{generate_pn, LfsrConfig};
use pslab::pulse::{
    design_fir, design_vsg8, vsg_reference_taps, write_taps_csv, FirFilter, Normalization,
};
use pslab::signal::{mean_power, BitStream, FilterKind, ModFormat, RollOff};
use pslab::spectrum::{occupied_bandwidth, welch_psd, Window, DEFAULT_OVERLAP};
use pslab::Error;
use serde_json::json;

#[derive(Parser)]
#[command(name = "pslab", version, about = "Pulse-shaping laboratory for QPSK and OQPSK")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write RC/RRC filter taps as CSV.
    DesignFilter(DesignArgs),
    /// Synthesize a pulse-shaped capture from PN or file bits.
    Modulate(ModulateArgs),
    /// Demodulate a capture and print error metrics as JSON.
    Analyze(AnalyzeArgs),
    /// Run the format x filter x roll-off sweep.
    Sweep(SweepArgs),
    /// Estimate the power spectral density of a capture.
    Psd(PsdArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Qpsk,
    Oqpsk,
}

impl From<Format> for ModFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Qpsk => ModFormat::Qpsk,
            Format::Oqpsk => ModFormat::Oqpsk,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Rc,
    Rrc,
}

impl From<Kind> for FilterKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Rc => FilterKind::RaisedCosine,
            Kind::Rrc => FilterKind::RootRaisedCosine,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Norm {
    Peak,
    Energy,
    Dc,
}

impl From<Norm> for Normalization {
    fn from(n: Norm) -> Self {
        match n {
            Norm::Peak => Normalization::UnitPeak,
            Norm::Energy => Normalization::UnitEnergy,
            Norm::Dc => Normalization::UnitDcGain,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MeasurementFilter {
    /// Off after RC transmit, matched RRC after RRC transmit.
    Auto,
    Off,
    Rrc,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProfileName {
    Vsg8,
    Long,
}

#[derive(Clone, Copy, ValueEnum)]
enum WindowName {
    Hann,
    Rect,
}

#[derive(Args)]
struct DesignArgs {
    #[arg(long, value_enum)]
    kind: Kind,
    /// Roll-off; with --vsg8 and no alpha the tabulated instrument taps are written.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, default_value_t = 16)]
    sps: usize,
    #[arg(long, default_value_t = 16)]
    span: usize,
    #[arg(long, value_enum, default_value = "peak")]
    normalization: Norm,
    /// Eight-tap instrument-style filter.
    #[arg(long)]
    vsg8: bool,
    /// Output CSV (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Transmit filter selection shared by `modulate` and `analyze`.
#[derive(Args)]
struct FilterArgs {
    #[arg(long, value_enum, default_value = "qpsk")]
    format: Format,
    #[arg(long, value_enum, default_value = "rrc")]
    kind: Kind,
    #[arg(long, default_value_t = 0.35)]
    alpha: f64,
    /// Samples per symbol of the long (unit-energy) filter.
    #[arg(long, default_value_t = 16)]
    sps: usize,
    /// Span in symbols of the long filter.
    #[arg(long, default_value_t = 32)]
    span: usize,
    /// Use the 8-tap filter at 4 samples/symbol instead of the long filter.
    #[arg(long)]
    vsg8: bool,
    #[arg(long, default_value_t = 25_000.0)]
    symbol_rate: f64,
}

impl FilterArgs {
    fn profile(&self) -> FilterProfile {
        if self.vsg8 {
            FilterProfile::Vsg8
        } else {
            FilterProfile::Long {
                span_symbols: self.span,
                samples_per_symbol: self.sps,
            }
        }
    }

    fn alpha(&self) -> Result<RollOff, Error> {
        RollOff::new(self.alpha)
    }

    fn tx_filter(&self) -> Result<FirFilter, Error> {
        self.profile().tx_filter(self.kind.into(), self.alpha()?)
    }
}

#[derive(Args)]
struct ModulateArgs {
    #[command(flatten)]
    filter: FilterArgs,
    #[arg(long, default_value_t = 256)]
    n_symbols: usize,
    /// Initial state of the x^6+x+1 register.
    #[arg(long, default_value_t = 0b11_1111)]
    pn_seed: u32,
    /// Text file of 0/1 characters used instead of the PN source.
    #[arg(long)]
    bits: Option<PathBuf>,
    /// Add AWGN at this Eb/N0 (dB).
    #[arg(long)]
    ebn0: Option<f64>,
    /// Noise seed.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 1.0)]
    gain: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    phase_deg: f64,
    /// Capture payload path; the sidecar goes next to it with a .json extension.
    #[arg(long)]
    out: PathBuf,
    /// Also write the transmitted bits as 0/1 text.
    #[arg(long)]
    bits_out: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Capture payload path.
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    filter: FilterArgs,
    #[arg(long, value_enum, default_value = "auto")]
    measurement_filter: MeasurementFilter,
    /// Symbols to demodulate (default: everything the capture holds).
    #[arg(long)]
    n_symbols: Option<usize>,
    /// Skip complex-gain alignment before measuring.
    #[arg(long)]
    no_align: bool,
    /// Reference bits (0/1 text) for BER.
    #[arg(long)]
    bits: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// JSON sweep configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    profile: Option<ProfileName>,
    #[arg(long)]
    ber_bits: Option<usize>,
    /// Eb/N0 (dB) of the BER run.
    #[arg(long)]
    ebn0: Option<f64>,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct PsdArgs {
    #[arg(long)]
    input: PathBuf,
    /// Segment length (power of two; default gives <= 100 Hz resolution).
    #[arg(long)]
    segment: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_OVERLAP)]
    overlap: f64,
    #[arg(long, value_enum, default_value = "hann")]
    window: WindowName,
    /// Two-column CSV output (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn read_bits(path: &Path) -> Result<BitStream, Error> {
    let text = fs::read_to_string(path)?;
    let mut bits = Vec::with_capacity(text.len());
    for c in text.chars().filter(|c| !c.is_whitespace()) {
        match c {
            '0' => bits.push(0),
            '1' => bits.push(1),
            other => {
                return Err(Error::InvalidArgument(format!(
                    "{}: unexpected character '{other}' in bit file",
                    path.display()
                )))
            }
        }
    }
    BitStream::new(bits)
}

fn bits_text(bits: &BitStream) -> String {
    let mut s: String = bits.bits().iter().map(|&b| if b == 1 { '1' } else { '0' }).collect();
    s.push('\n');
    s
}

fn emit(out: Option<&Path>, data: &[u8]) -> Result<(), Error> {
    match out {
        Some(p) => fs::write(p, data)?,
        None => io::stdout().write_all(data)?,
    }
    Ok(())
}

fn print_json(v: &serde_json::Value) -> Result<(), Error> {
    let mut stdout = io::stdout().lock();
    serde_json::to_writer_pretty(&mut stdout, v)?;
    writeln!(stdout)?;
    Ok(())
}

fn design_filter(a: DesignArgs) -> Result<(), Error> {
    let kind = a.kind.into();
    let filter = match (a.vsg8, a.alpha) {
        (true, None) => vsg_reference_taps(kind),
        (true, Some(alpha)) => design_vsg8(kind, RollOff::new(alpha)?)?,
        (false, alpha) => design_fir(
            kind,
            RollOff::new(alpha.unwrap_or(0.35))?,
            a.sps,
            a.span,
            a.normalization.into(),
        )?,
    };
    let mut buf = Vec::new();
    write_taps_csv(&mut buf, &filter)?;
    emit(a.out.as_deref(), &buf)
}

fn modulate(a: ModulateArgs) -> Result<(), Error> {
    let format = a.filter.format.into();
    let tx = a.filter.tx_filter()?;
    let bits = match &a.bits {
        Some(p) => read_bits(p)?,
        None => {
            let pn = LfsrConfig {
                seed: a.pn_seed,
                ..LfsrConfig::pn63()
            };
            generate_pn(&pn, BITS_PER_SYMBOL * a.n_symbols)?
        }
    };
    let frame = transmit(bits, format, &tx, a.filter.symbol_rate)?;
    let mut signal = frame.signal;
    if a.ebn0.is_some() {
        let cfg = ChannelConfig::new(a.ebn0, BITS_PER_SYMBOL, tx.samples_per_symbol(), a.seed);
        let power = mean_power(&signal)?;
        signal = awgn(&signal, &cfg, power)?;
    }
    if a.gain != 1.0 || a.phase_deg != 0.0 {
        signal = impair(&signal, a.gain, a.phase_deg)?;
    }
    let description = format!(
        "{format} {} alpha={} profile={} symbol_rate_hz={} gain={} phase_deg={} ebn0_db={}",
        FilterKind::from(a.filter.kind),
        a.filter.alpha,
        a.filter.profile(),
        a.filter.symbol_rate,
        a.gain,
        a.phase_deg,
        a.ebn0.map_or("none".to_string(), |v| v.to_string()),
    );
    let meta = write_capture(&a.out, &signal, &description)?;
    if let Some(p) = &a.bits_out {
        fs::write(p, bits_text(&frame.bits))?;
    }
    print_json(&json!({
        "n_symbols": frame.symbols.len(),
        "n_samples": meta.n_samples,
        "sample_rate_hz": meta.sample_rate_hz,
        "mean_power": mean_power(&signal)?,
    }))
}

fn analyze(a: AnalyzeArgs) -> Result<(), Error> {
    let (signal, meta) = read_capture(&a.input)?;
    let format = a.filter.format.into();
    let kind: FilterKind = a.filter.kind.into();
    let alpha = a.filter.alpha()?;
    let profile = a.filter.profile();
    let tx = a.filter.tx_filter()?;
    let sps = tx.samples_per_symbol();
    let expected_rate = a.filter.symbol_rate * sps as f64;
    if (meta.sample_rate_hz - expected_rate).abs() > 1e-6 * expected_rate {
        return Err(Error::InvalidArgument(format!(
            "capture is at {} Hz but the filter settings imply {expected_rate} Hz",
            meta.sample_rate_hz
        )));
    }
    let rx = match a.measurement_filter {
        MeasurementFilter::Auto => profile.measurement_filter(kind, alpha)?,
        MeasurementFilter::Off => None,
        MeasurementFilter::Rrc => profile.measurement_filter(FilterKind::RootRaisedCosine, alpha)?,
    };
    let available = (signal.len() + 1).saturating_sub(tx.len()) / sps;
    let n_symbols = a.n_symbols.unwrap_or(available);
    if n_symbols == 0 {
        return Err(Error::InsufficientLength {
            needed: tx.len() + sps,
            available: signal.len(),
        });
    }
    let edge = edge_symbols(&tx, rx.as_ref()).min((n_symbols - 1) / 2);
    let mut params = DemodParams::for_chain(format, &tx, rx, n_symbols, edge);
    params.align = !a.no_align;
    let result = demodulate(&signal, &params)?;

    let (lo, hi) = (edge, n_symbols - edge);
    let measured = &result.measured_symbols[lo..hi];
    let reference = build_reference(&result.decided_symbols[lo..hi])?;
    let summary = error_metrics(measured, &reference, !a.no_align)?;

    let mut out = json!({
        "evm_pct_rms": summary.evm_pct_rms,
        "mag_err_pct_rms": summary.mag_err_pct_rms,
        "phase_err_deg_rms": summary.phase_err_deg_rms,
        "n_symbols_measured": summary.n_symbols,
        "edge_symbols": edge,
    });
    if let Some(p) = &a.bits {
        let tx_bits = read_bits(p)?;
        if tx_bits.len() < BITS_PER_SYMBOL * n_symbols {
            return Err(Error::LengthMismatch(tx_bits.len(), BITS_PER_SYMBOL * n_symbols));
        }
        let b = BITS_PER_SYMBOL;
        let e = bit_error_rate(&tx_bits.slice(b * lo, b * hi), &result.decided_bits.slice(b * lo, b * hi))?;
        out["ber"] = json!(e.ber());
        out["bit_errors"] = json!(e.errors);
        out["bits_compared"] = json!(e.total);
    }
    let segment = psd_segment_len(signal.sample_rate_hz()).min(signal.len().next_power_of_two() / 2);
    if segment >= 2 {
        let psd = welch_psd(&signal, segment, DEFAULT_OVERLAP, Window::Hann)?;
        out["obw_hz"] = json!(occupied_bandwidth(&psd, 0.99)?);
    }
    print_json(&out)
}

fn sweep(a: SweepArgs) -> Result<(), Error> {
    let mut config = match &a.config {
        Some(p) => serde_json::from_reader(BufReader::new(fs::File::open(p)?))
            .map_err(|e| Error::InvalidArgument(format!("{}: {e}", p.display())))?,
        None => SweepConfig::default(),
    };
    if let Some(s) = a.seed {
        config.master_seed = s;
    }
    match a.profile {
        Some(ProfileName::Vsg8) => config.profile = FilterProfile::Vsg8,
        Some(ProfileName::Long) => config.profile = FilterProfile::long_default(),
        None => {}
    }
    if let Some(n) = a.ber_bits {
        config.ber_bits = n;
    }
    if a.ebn0.is_some() {
        config.ber_ebn0_db = a.ebn0;
    }
    config.validate()?;

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = a.threads {
        if t == 0 {
            return Err(Error::InvalidArgument("--threads must be at least 1".into()));
        }
        pool = pool.num_threads(t);
    }
    let pool = pool
        .build()
        .map_err(|e| Error::Io(io::Error::other(e.to_string())))?;
    let records = pool.install(|| run_sweep(&config))?;
    write_outputs(&a.out_dir, &config, &records)?;
    print!("{}", format_summary(&best_choice_summary(&records)?));
    Ok(())
}

fn psd(a: PsdArgs) -> Result<(), Error> {
    let (signal, _) = read_capture(&a.input)?;
    let segment = a
        .segment
        .unwrap_or_else(|| psd_segment_len(signal.sample_rate_hz()).min(signal.len().next_power_of_two() / 2));
    let window = match a.window {
        WindowName::Hann => Window::Hann,
        WindowName::Rect => Window::Rectangular,
    };
    let est = welch_psd(&signal, segment, a.overlap, window)?;
    let mut buf = Vec::new();
    est.write_csv(&mut buf)?;
    emit(a.out.as_deref(), &buf)?;
    if a.out.is_some() {
        print_json(&json!({
            "obw_hz": occupied_bandwidth(&est, 0.99)?,
            "resolution_hz": est.resolution_hz,
            "total_power": est.total_power(),
        }))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::DesignFilter(a) => design_filter(a),
        Command::Modulate(a) => modulate(a),
        Command::Analyze(a) => analyze(a),
        Command::Sweep(a) => sweep(a),
        Command::Psd(a) => psd(a),
    }
}

fn exit_code(e: &Error) -> u8 {
    if e.is_corruption() {
        3
    } else if e.is_validation() {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("pslab: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
