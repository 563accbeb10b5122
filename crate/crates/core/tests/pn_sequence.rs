use pslab::pn::{generate_pn, Lfsr, LfsrConfig};
use pslab::Error;

/// Walks the register from its seed until the state repeats.
fn cycle_length(config: &LfsrConfig) -> usize {
    let mut lfsr = Lfsr::new(config).unwrap();
    let start = lfsr.state();
    let mut n = 0;
    loop {
        lfsr.next();
        n += 1;
        if lfsr.state() == start {
            return n;
        }
        assert!(n < 1 << config.degree, "state never returned");
    }
}

#[test]
fn period_is_63_from_every_nonzero_seed() {
    for seed in 1..64 {
        let cfg = LfsrConfig {
            seed,
            ..LfsrConfig::pn63()
        };
        assert_eq!(cycle_length(&cfg), 63, "seed {seed:#b}");
    }
}

#[test]
fn one_period_has_32_ones_and_31_zeros() {
    let bits = generate_pn(&LfsrConfig::pn63(), 63).unwrap();
    let ones = bits.bits().iter().filter(|&&b| b == 1).count();
    assert_eq!((ones, 63 - ones), (32, 31));
}

#[test]
fn output_repeats_with_period_63() {
    let bits = generate_pn(&LfsrConfig::pn63(), 630).unwrap();
    let b = bits.bits();
    assert!((63..630).all(|k| b[k] == b[k - 63]));
    // and no shorter period
    for p in 1..63 {
        assert!((p..630).any(|k| b[k] != b[k - p]), "period {p}");
    }
}

#[test]
fn zero_seed_rejected() {
    let cfg = LfsrConfig {
        seed: 0,
        ..LfsrConfig::pn63()
    };
    assert!(matches!(Lfsr::new(&cfg), Err(Error::DegenerateSeed)));
}

#[test]
fn non_primitive_polynomial_has_short_cycle() {
    // x^6 + 1 just rotates the register.
    let cfg = LfsrConfig {
        degree: 6,
        taps: vec![6, 0],
        seed: 1,
    };
    assert_eq!(cycle_length(&cfg), 6);
}
