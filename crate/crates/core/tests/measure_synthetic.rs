use tdram_core::measure::{average_cell_current, delivered_power, sense_time, CELL_SOURCES};
use tdram_core::netlist::names;
use tdram_core::*;

const VDD: f64 = 1.2;
const DT: f64 = 0.1e-12;
const T_RISE: f64 = 1e-9;
const T_FALL: f64 = 3e-9;
const T_END: f64 = 6e-9;
const EDGE: f64 = 0.1e-9;

fn schedule(trit: u8) -> Schedule {
    Schedule {
        vdd: VDD,
        edge_time: EDGE,
        cycle_time: T_END,
        cycles: vec![CycleWindow {
            index: 0,
            trit: Trit::new(trit).unwrap(),
            start: 0.0,
            read_start: T_FALL - EDGE / 2.0,
            end: T_END,
        }],
    }
}

/// Word-line with linear edges whose 50% points are exactly T_RISE and
/// T_FALL.
fn wl(t: f64) -> f64 {
    let ramp = |t0: f64| ((t - (t0 - EDGE / 2.0)) / EDGE).clamp(0.0, 1.0);
    VDD * (ramp(T_RISE) - ramp(T_FALL))
}

struct Synth {
    x: Box<dyn Fn(f64) -> f64>,
    bl2: Box<dyn Fn(f64) -> f64>,
    sout: Box<dyn Fn(f64) -> f64>,
    i_m1: f64,
    i_m2: f64,
}

impl Default for Synth {
    fn default() -> Self {
        Self {
            x: Box::new(|_| 0.0),
            bl2: Box::new(|_| VDD),
            sout: Box::new(|_| 0.0),
            i_m1: 0.0,
            i_m2: 0.0,
        }
    }
}

impl Synth {
    fn build(self) -> WaveformSet {
        let n = (T_END / DT).round() as usize;
        let time: Vec<f64> = (0..=n).map(|k| k as f64 * DT).collect();
        let series = |f: &dyn Fn(f64) -> f64| time.iter().map(|&t| f(t)).collect::<Vec<_>>();
        let vdd_supply = -self.i_m2;
        WaveformSet {
            node_names: vec![
                names::WL.into(),
                names::X.into(),
                names::BL2.into(),
                names::SENSE_OUT.into(),
                names::VDD.into(),
                names::BL1.into(),
            ],
            voltages: vec![
                series(&wl),
                series(&*self.x),
                series(&*self.bl2),
                series(&*self.sout),
                vec![VDD; n + 1],
                vec![0.0; n + 1],
            ],
            element_names: vec![
                names::M1.into(),
                names::M2.into(),
                names::SRC_WL.into(),
                names::SRC_BL1.into(),
                names::SRC_VDD.into(),
            ],
            currents: vec![
                vec![self.i_m1; n + 1],
                vec![self.i_m2; n + 1],
                vec![0.0; n + 1],
                vec![0.0; n + 1],
                vec![vdd_supply; n + 1],
            ],
            sources: [
                (names::SRC_WL, names::WL),
                (names::SRC_BL1, names::BL1),
                (names::SRC_VDD, names::VDD),
            ]
            .iter()
            .map(|(n, p)| SourceProbe {
                name: n.to_string(),
                pos: p.to_string(),
                neg: GROUND.into(),
            })
            .collect(),
            time,
        }
    }
}

#[test]
fn instantaneous_write_has_zero_delay() {
    let wf = Synth {
        x: Box::new(|t| if t >= T_RISE { 0.96 } else { 0.0 }),
        ..Synth::default()
    }
    .build();
    let d = write_delay(&wf, &schedule(2), 0).unwrap();
    assert!(d.abs() <= DT / 2.0, "{d:e}");
}

#[test]
fn exponential_write_crosses_at_tau_ln2() {
    let tau = 45.8e-12;
    let wf = Synth {
        x: Box::new(move |t| {
            if t <= T_RISE {
                0.0
            } else {
                0.96 * (1.0 - (-(t - T_RISE) / tau).exp())
            }
        }),
        ..Synth::default()
    }
    .build();
    let d = write_delay(&wf, &schedule(2), 0).unwrap();
    let expected = tau * std::f64::consts::LN_2;
    assert!((d - expected).abs() < 0.01e-12, "{d:e} vs {expected:e}");
}

#[test]
fn falling_write_is_measured_toward_its_target() {
    let tau = 20e-12;
    let wf = Synth {
        x: Box::new(move |t| {
            if t <= T_RISE {
                0.96
            } else {
                0.96 * (-(t - T_RISE) / tau).exp()
            }
        }),
        ..Synth::default()
    }
    .build();
    let d = write_delay(&wf, &schedule(0), 0).unwrap();
    assert!((d - tau * std::f64::consts::LN_2).abs() < 0.01e-12);
}

#[test]
fn unchanged_storage_has_no_write_delay() {
    let wf = Synth::default().build();
    assert!(matches!(
        write_delay(&wf, &schedule(0), 0),
        Err(MeasureError::TargetNeverReached { .. })
    ));
}

fn linear_discharge(t: f64) -> f64 {
    VDD * (1.0 - ((t - T_FALL) / 1e-9).clamp(0.0, 1.0))
}

#[test]
fn linear_ramp_read_times() {
    let wf = Synth {
        bl2: Box::new(linear_discharge),
        ..Synth::default()
    }
    .build();
    let variant = MetricVariant::Excursion;
    let two = read_sense_time(&wf, &schedule(2), 0, Trit::TWO, variant).unwrap();
    assert!((two - 0.2e-9).abs() < 1e-15, "{two:e}");
    let one = read_sense_time(&wf, &schedule(1), 0, Trit::ONE, variant).unwrap();
    assert!((one - 0.1e-9).abs() < 1e-15, "{one:e}");
    let zero = read_sense_time(&wf, &schedule(0), 0, Trit::ZERO, variant).unwrap();
    assert_eq!(zero, 0.0);
    let fv = read_sense_time(&wf, &schedule(2), 0, Trit::TWO, MetricVariant::FinalValue).unwrap();
    assert!((fv - 0.2e-9).abs() < 1e-15);
}

#[test]
fn final_value_variant_uses_reached_level() {
    // Settles at 0.9 V: 20% of the 0.3 V reached excursion is 60 mV.
    let wf = Synth {
        bl2: Box::new(|t| VDD - 0.3 * ((t - T_FALL) / 1e-9).clamp(0.0, 1.0)),
        ..Synth::default()
    }
    .build();
    let fv = read_sense_time(&wf, &schedule(1), 0, Trit::ONE, MetricVariant::FinalValue).unwrap();
    assert!((fv - 0.2e-9).abs() < 1e-15, "{fv:e}");
    let ex = read_sense_time(&wf, &schedule(1), 0, Trit::ONE, MetricVariant::Excursion).unwrap();
    assert!((ex - 0.4e-9).abs() < 1e-15, "{ex:e}");
    let shallow = Synth {
        bl2: Box::new(|t| VDD - 0.1 * ((t - T_FALL) / 1e-9).clamp(0.0, 1.0)),
        ..Synth::default()
    }
    .build();
    assert!(matches!(
        read_sense_time(
            &shallow,
            &schedule(2),
            0,
            Trit::TWO,
            MetricVariant::Excursion
        ),
        Err(MeasureError::ExcursionNeverReached { .. })
    ));
}

#[test]
fn currents_and_power() {
    let quiet = Synth::default().build();
    assert_eq!(cycle_current(&quiet, &schedule(0), 0).unwrap(), 0.0);
    assert_eq!(cycle_power(&quiet, &schedule(0), 0).unwrap().delivered, 0.0);

    let wf = Synth {
        i_m2: 10e-9,
        ..Synth::default()
    }
    .build();
    let i = cycle_current(&wf, &schedule(1), 0).unwrap();
    assert!((i - 10e-9).abs() < 1e-9 * 10e-9, "{i:e}");
    let p = cycle_power(&wf, &schedule(1), 0).unwrap();
    assert!(
        (p.delivered - 12e-9).abs() < 1e-9 * 12e-9,
        "{:e}",
        p.delivered
    );
    assert!((p.vdd_times_current - 12e-9).abs() < 1e-9 * 12e-9);

    let both = Synth {
        i_m1: -4e-9,
        i_m2: 6e-9,
        ..Synth::default()
    }
    .build();
    let i = average_cell_current(&both, 1e-9, 2e-9).unwrap();
    assert!((i - 10e-9).abs() < 1e-9 * 10e-9, "{i:e}");
    let p = delivered_power(&both, &CELL_SOURCES, 0.0, T_END).unwrap();
    assert!((p - 7.2e-9).abs() < 1e-9 * 7.2e-9, "{p:e}");
}

#[test]
fn classification_of_steady_outputs() {
    for (level, trit) in [(0.0, Trit::ZERO), (0.6, Trit::ONE), (1.2, Trit::TWO)] {
        let wf = Synth {
            sout: Box::new(move |_| level),
            ..Synth::default()
        }
        .build();
        let out = wf.voltage(names::SENSE_OUT).unwrap();
        assert_eq!(classify_read(&wf.time, out, T_FALL, T_END, VDD), Ok(trit));
    }
}

#[test]
fn sense_time_is_band_entry() {
    let wf = Synth {
        sout: Box::new(|t| VDD * ((t - T_FALL) / 1e-9).clamp(0.0, 1.0)),
        ..Synth::default()
    }
    .build();
    let s = schedule(2);
    assert_eq!(sense_time(&wf, &s, 0, Trit::ZERO).unwrap(), 0.0);
    let one = sense_time(&wf, &s, 0, Trit::ONE).unwrap();
    let two = sense_time(&wf, &s, 0, Trit::TWO).unwrap();
    assert!((one - 1e-9 / 3.0).abs() < 1e-15);
    assert!((two - 2e-9 / 3.0).abs() < 1e-15);
}

#[test]
fn extractors_reject_bad_input() {
    let wf = Synth::default().build();
    assert!(matches!(
        write_delay(&wf, &schedule(0), 3),
        Err(MeasureError::BadCycle {
            cycle: 3,
            cycles: 1
        })
    ));
    let mut missing = wf.clone();
    missing.node_names[1] = "q".into();
    assert_eq!(
        write_delay(&missing, &schedule(0), 0),
        Err(MeasureError::MissingTrace("x".into()))
    );
}
