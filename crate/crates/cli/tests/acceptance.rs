//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use num_complex::Complex64;
use pslab::harness::{run_point, run_sweep, FilterProfile, MetricsRecord, SweepConfig};
use pslab::metrics::{align, error_metrics};
use pslab::pn::{generate_pn, Lfsr, LfsrConfig};
use pslab::pulse::{
    check_nyquist_isi, design_fir, rc_freq_response, rc_impulse, rrc_impulse, vsg_reference_taps,
    FrequencyResponse, Normalization,
};
use pslab::signal::{FilterKind, ModFormat, RollOff};
use pslab::Error;

type Outcome = Result<String, String>;
type Curve = Box<dyn Fn(f64) -> f64>;
type MetricFn = fn(&MetricsRecord) -> f64;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

const ALPHAS: [f64; 5] = [0.1, 0.22, 0.35, 0.7, 1.0];
const RS: f64 = 25_000.0;

fn ro(a: f64) -> RollOff {
    RollOff::new(a).unwrap()
}

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn filter_identities() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    for a in ALPHAS {
        let rrc = design_fir(FilterKind::RootRaisedCosine, ro(a), 16, 32, Normalization::UnitPeak)
            .map_err(|e| e.to_string())?;
        let casc = rrc.cascade(&rrc).map_err(|e| e.to_string())?;
        let c = casc.center_index() as f64;
        let err = casc
            .taps()
            .iter()
            .enumerate()
            .map(|(k, &v)| (v - rc_impulse((k as f64 - c) / 16.0, ro(a))).abs())
            .fold(0.0, f64::max);
        if err > 1e-3 {
            ok = false;
            notes.push(format!("rrc*rrc alpha={a} max err {err:.2e}"));
        }

        let rc = design_fir(FilterKind::RaisedCosine, ro(a), 16, 32, Normalization::UnitPeak)
            .map_err(|e| e.to_string())?;
        let h = FrequencyResponse::from_fir(&rc, RS);
        let h0 = h.eval(0.0).norm();
        let worst = (0..=400)
            .map(|i| RS / 2.0 * i as f64 / 400.0)
            .map(|f| {
                let want = rc_freq_response(f, ro(a), RS) * RS;
                (h.eval(f).norm() / h0 / want - 1.0).abs()
            })
            .fold(0.0, f64::max);
        if worst > 1e-2 {
            ok = false;
            notes.push(format!("rc spectrum alpha={a} rel err {worst:.2e}"));
        }
    }
    ensure(ok, notes.join("; "))
}

fn zero_isi() -> Outcome {
    let mut worst = (0.0f64, 0.0f64);
    for a in ALPHAS {
        let rc = design_fir(FilterKind::RaisedCosine, ro(a), 16, 32, Normalization::UnitPeak)
            .map_err(|e| e.to_string())?;
        let r = check_nyquist_isi(&rc).map_err(|e| e.to_string())?;
        worst.0 = worst.0.max(r.max_folded_deviation);
        worst.1 = worst.1.max(r.worst_symbol_crossing);
    }
    ensure(
        worst.0 <= 1e-3 && worst.1 <= 1e-10,
        format!("folded deviation {:.2e}, crossings {:.2e}", worst.0, worst.1),
    )
}

/// Symmetric averages at t +- h for h = 1e-6 and 1e-7, extrapolated in h^2.
fn numeric_limit(f: &dyn Fn(f64) -> f64, t: f64) -> f64 {
    let avg = |h: f64| (f(t + h) + f(t - h)) / 2.0;
    let (a6, a7) = (avg(1e-6), avg(1e-7));
    a7 + (a7 - a6) / 99.0
}

fn singularities() -> Outcome {
    let cases: [(&str, Curve, f64, Option<f64>); 3] = [
        ("rc(0.5, 1)", Box::new(|t| rc_impulse(t, ro(1.0))), 0.5, Some(0.5)),
        ("rrc(0, 0.35)", Box::new(|t| rrc_impulse(t, ro(0.35))), 0.0, Some(1.0 - 0.35 + 1.4 / PI)),
        ("rrc(1, 0.25)", Box::new(|t| rrc_impulse(t, ro(0.25))), 1.0, None),
    ];
    let mut ok = true;
    let mut notes = Vec::new();
    for (name, f, t, closed) in &cases {
        let got = f(*t);
        let oracle = numeric_limit(f.as_ref(), *t);
        let rough = (f(t + 1e-8) + f(t - 1e-8)) / 2.0;
        let e = (got - oracle).abs();
        ok &= e <= 1e-9 && (got - rough).abs() <= 1e-7;
        if let Some(v) = closed {
            ok &= (got - v).abs() <= 1e-12;
        }
        notes.push(format!("{name}={got:.12} (oracle diff {e:.1e})"));
    }
    ensure(ok, notes.join(", "))
}

fn table_i() -> Outcome {
    let rc = [0.015609, 0.174413, 0.588622, 1.000000, 1.000000, 0.588622, 0.174413, 0.015609];
    let rrc = [0.004490, 0.143258, 0.560131, 1.000000, 1.000000, 0.560131, 0.143258, 0.004490];
    let six = |x: f64| (x * 1e6).round() as i64;
    let matches = |kind, want: &[f64; 8]| {
        let f = vsg_reference_taps(kind);
        f.taps().len() == 8 && f.taps().iter().zip(want).all(|(a, b)| six(*a) == six(*b))
    };
    ensure(
        matches(FilterKind::RaisedCosine, &rc) && matches(FilterKind::RootRaisedCosine, &rrc),
        "RC and RRC columns".into(),
    )
}

fn find(records: &[MetricsRecord], f: ModFormat, k: FilterKind, a: f64) -> &MetricsRecord {
    records
        .iter()
        .find(|r| r.format == f && r.filter_kind == k && r.alpha.value() == a)
        .expect("sweep point present")
}

fn table_ii() -> Outcome {
    use FilterKind::{RaisedCosine as Rc, RootRaisedCosine as Rrc};
    use ModFormat::{Oqpsk, Qpsk};
    let table = [
        (Qpsk, Rc, [(24.78, 2.02), (26.17, 1.91), (30.45, 1.64), (33.11, 1.51)]),
        (Qpsk, Rrc, [(25.50, 1.96), (27.90, 1.79), (34.08, 1.47), (39.78, 1.26)]),
        (Oqpsk, Rc, [(24.12, 2.07), (25.89, 1.93), (29.38, 1.70), (33.87, 1.48)]),
        (Oqpsk, Rrc, [(24.60, 2.03), (28.91, 1.73), (34.76, 1.44), (40.25, 1.24)]),
    ];
    let alphas = [0.1, 0.35, 0.7, 1.0];
    let cfg = SweepConfig {
        profile: FilterProfile::long_default(),
        alphas: alphas.iter().map(|&a| ro(a)).collect(),
        ber_ebn0_db: None,
        ..SweepConfig::default()
    };
    let records = run_sweep(&cfg).map_err(|e| e.to_string())?;
    let mut worst = (0.0f64, 0.0f64);
    let mut misses = Vec::new();
    for (f, k, row) in table {
        for (a, (khz, eff)) in alphas.iter().zip(row) {
            let r = find(&records, f, k, *a);
            let d_obw = (r.obw_hz / (khz * 1e3) - 1.0).abs();
            let d_eff = (r.bw_efficiency / eff - 1.0).abs();
            worst = (worst.0.max(d_obw), worst.1.max(d_eff));
            if d_obw > 0.15 || d_eff > 0.15 {
                misses.push(format!("{f}/{k} {a}: {:.2} kHz", r.obw_hz / 1e3));
            }
        }
    }
    let detail = format!(
        "worst OBW dev {:.1}%, worst efficiency dev {:.1}% {}",
        100.0 * worst.0,
        100.0 * worst.1,
        misses.join("; ")
    );
    ensure(misses.is_empty(), detail)
}

fn noiseless_vsg8() -> Result<Vec<MetricsRecord>, Error> {
    run_sweep(&SweepConfig {
        ber_ebn0_db: None,
        ..SweepConfig::default()
    })
}

fn series(records: &[MetricsRecord], f: ModFormat, k: FilterKind, metric: MetricFn) -> Vec<f64> {
    ALPHAS.iter().map(|&a| metric(find(records, f, k, a))).collect()
}

fn metric_trends(records: &[MetricsRecord]) -> Outcome {
    let metrics: [(&str, MetricFn); 3] = [
        ("evm", |r| r.errors.evm_pct_rms),
        ("mag", |r| r.errors.mag_err_pct_rms),
        ("phase", |r| r.errors.phase_err_deg_rms),
    ];
    let mut falls = true;
    let mut flat = true;
    let mut notes = Vec::new();
    for f in ModFormat::ALL {
        for k in FilterKind::ALL {
            for (name, m) in metrics {
                let v = series(records, f, k, m);
                falls &= v[0] > v[1] && v[1] > v[2];
                let tail = &v[2..];
                let spread = tail.iter().cloned().fold(f64::MIN, f64::max)
                    - tail.iter().cloned().fold(f64::MAX, f64::min);
                let rel = spread / v[2];
                if rel >= 0.25 {
                    flat = false;
                    notes.push(format!("{f}/{k} {name} spread {:.0}%", 100.0 * rel));
                }
            }
        }
    }
    let detail = format!(
        "decrease 0.1->0.35 {}; plateau 0.35..1.0 {} {}",
        if falls { "holds" } else { "broken" },
        if flat { "holds" } else { "broken:" },
        notes.join(", ")
    );
    ensure(falls && flat, detail)
}

fn efficiency_trend(records: &[MetricsRecord]) -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    for f in ModFormat::ALL {
        for k in FilterKind::ALL {
            let v = series(records, f, k, |r| r.bw_efficiency);
            ok &= v.windows(2).all(|w| w[0] > w[1]);
            notes.push(format!("{f}/{k} {:.3}->{:.3}", v[0], v[4]));
        }
    }
    ensure(ok, notes.join(", "))
}

/// Gaussian tail probability by composite Simpson integration.
fn q_function(x: f64) -> f64 {
    let n = 200_000;
    let (a, b) = (x, x + 40.0);
    let h = (b - a) / n as f64;
    let pdf = |t: f64| (-t * t / 2.0).exp() / (2.0 * PI).sqrt();
    let mut s = pdf(a) + pdf(b);
    for i in 1..n {
        s += pdf(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

fn ber(records: &[MetricsRecord]) -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;

    let bits = 1_000_000;
    let cfg = SweepConfig {
        profile: FilterProfile::long_default(),
        ber_bits: bits,
        master_seed: 42,
        ..SweepConfig::default()
    };
    let r = run_point(&cfg, ModFormat::Qpsk, FilterKind::RootRaisedCosine, ro(0.35))
        .map_err(|e| e.to_string())?;
    let p = q_function((2.0 * 10f64.powf(0.6)).sqrt());
    let sigma = (p * (1.0 - p) / r.meta.ber_bits as f64).sqrt();
    let z = (r.ber - p) / sigma;
    ok &= r.meta.ber_bits >= bits && z.abs() <= 3.0;
    notes.push(format!("oracle {p:.4e}, measured {:.4e} ({z:+.2} sigma)", r.ber));

    let long = run_sweep(&SweepConfig {
        profile: FilterProfile::long_default(),
        ber_ebn0_db: None,
        ..SweepConfig::default()
    })
    .map_err(|e| e.to_string())?;
    let dirty = records.iter().chain(&long).filter(|r| r.ber != 0.0).count();
    ok &= dirty == 0;
    notes.push(format!("noiseless points with errors: {dirty}"));

    let trend_cfg = SweepConfig {
        alphas: ALPHAS[..4].iter().map(|&a| ro(a)).collect(),
        ber_bits: 4_000_000,
        master_seed: 42,
        ..SweepConfig::default()
    };
    let noisy = run_sweep(&trend_cfg).map_err(|e| e.to_string())?;
    for f in ModFormat::ALL {
        for k in FilterKind::ALL {
            let v: Vec<f64> = ALPHAS[..4].iter().map(|&a| find(&noisy, f, k, a).ber).collect();
            if !v.windows(2).all(|w| w[0] >= w[1]) {
                ok = false;
                notes.push(format!("{f}/{k} not non-increasing {v:?}"));
            }
        }
    }
    ensure(ok, notes.join("; "))
}

fn metric_oracles() -> Outcome {
    let h = FRAC_1_SQRT_2;
    let points: Vec<Complex64> = [(h, h), (-h, h), (-h, -h), (h, -h)]
        .iter()
        .map(|&(i, q)| Complex64::new(i, q))
        .collect();
    let scaled = |c: Complex64| points.iter().map(|&p| p * c).collect::<Vec<_>>();
    let run = |m: &[Complex64], pre| error_metrics(m, &points, pre).map_err(|e| e.to_string());

    let rot = run(&scaled(Complex64::from_polar(1.0, 1f64.to_radians())), false)?;
    let gain = run(&scaled(Complex64::new(1.02, 0.0)), false)?;
    let injected = Complex64::from_polar(0.7, -0.4);
    let c = align(&scaled(injected), &points).map_err(|e| e.to_string())?;
    let recovered = (c * injected - 1.0).norm();

    let ok = (rot.evm_pct_rms - 1.745).abs() < 5e-4
        && (rot.phase_err_deg_rms - 1.0).abs() < 5e-4
        && rot.mag_err_pct_rms <= 0.02
        && (gain.evm_pct_rms - 2.0).abs() < 5e-4
        && (gain.mag_err_pct_rms - 2.0).abs() < 5e-4
        && gain.phase_err_deg_rms < 5e-4
        && recovered < 1e-10;
    ensure(
        ok,
        format!(
            "rotation {:.4}%/{:.4}deg/{:.4}%, gain {:.4}%/{:.4}%/{:.4}deg, align residual {recovered:.1e}",
            rot.evm_pct_rms,
            rot.phase_err_deg_rms,
            rot.mag_err_pct_rms,
            gain.evm_pct_rms,
            gain.mag_err_pct_rms,
            gain.phase_err_deg_rms
        ),
    )
}

fn dir_contents(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

fn determinism() -> Outcome {
    let runs: Vec<_> = (0..2)
        .map(|_| {
            let dir = tempfile::tempdir().unwrap();
            let out = Command::new(env!("CARGO_BIN_EXE_pslab"))
                .args(["sweep", "--seed", "42", "--out-dir"])
                .arg(dir.path())
                .output()
                .unwrap();
            (out.status.success(), dir_contents(dir.path()))
        })
        .collect();
    let ok = runs.iter().all(|r| r.0) && runs[0].1 == runs[1].1 && !runs[0].1.is_empty();
    ensure(ok, format!("{} files compared", runs[0].1.len()))
}

fn pn_suite() -> Outcome {
    let mut ok = true;
    for seed in 1..64u32 {
        let mut lfsr = Lfsr::new(&LfsrConfig { seed, ..LfsrConfig::pn63() }).map_err(|e| e.to_string())?;
        let start = lfsr.state();
        let mut n = 0;
        loop {
            lfsr.next();
            n += 1;
            if lfsr.state() == start || n > 64 {
                break;
            }
        }
        ok &= n == 63;
    }
    let bits = generate_pn(&LfsrConfig::pn63(), 63).map_err(|e| e.to_string())?;
    let ones = bits.bits().iter().filter(|&&b| b == 1).count();
    ok &= ones == 32;
    let zero = LfsrConfig { seed: 0, ..LfsrConfig::pn63() };
    ok &= matches!(generate_pn(&zero, 10), Err(Error::DegenerateSeed));
    ensure(ok, format!("63 seeds enumerated, {ones} ones / {} zeros", 63 - ones))
}

fn main() -> ExitCode {
    let vsg8 = noiseless_vsg8();
    let with_vsg8 = |f: fn(&[MetricsRecord]) -> Outcome| -> Outcome {
        match &vsg8 {
            Ok(r) => f(r),
            Err(e) => Err(e.to_string()),
        }
    };
    let criteria: Vec<Criterion> = vec![
        ("filter identities", Box::new(filter_identities)),
        ("zero ISI", Box::new(zero_isi)),
        ("singularity values", Box::new(singularities)),
        ("tabulated instrument taps", Box::new(table_i)),
        ("OBW and efficiency table", Box::new(table_ii)),
        ("EVM/magnitude/phase trends", Box::new(move || with_vsg8(metric_trends))),
        ("efficiency trend", Box::new(move || with_vsg8(efficiency_trend))),
        ("BER", Box::new(move || with_vsg8(ber))),
        ("metric oracles", Box::new(metric_oracles)),
        ("determinism", Box::new(determinism)),
        ("PN sequence", Box::new(pn_suite)),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let (tag, detail) = match check() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("{tag} {:>2} {name} [{:.1}s]: {detail}", i + 1, t.elapsed().as_secs_f64());
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
