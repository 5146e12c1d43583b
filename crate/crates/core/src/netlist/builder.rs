//! Generators for the 3T ternary DRAM cell and its ternary sense inverter.
//!
//! Cell topology:
//!
//! ```text
//!            WL                    VDD
//!            |                      |
//!   BL1 ----M1---- X          SPRE (closed while WL high)
//!                  |                |
//!                 C_S     BL2 ------+------ C_BL
//!                  |       |
//!                 gnd     M3 (p, gate WL)
//!                          |
//!                          A
//!                          |
//!                 X ------M2 (n, gate X)
//!                          |
//!                         gnd
//! ```
//!
//! While WL is high, M1 copies BL1 onto X and BL2 is held at VDD. When WL
//! falls, M3 connects BL2 to M2, which discharges it at a rate set by the
//! stored level.

use serde::{Deserialize, Serialize};

use crate::device::{
    Chirality, CntfetDevice, Polarity, NOMINAL_CHANNEL_LENGTH, NOMINAL_OXIDE_THICKNESS,
};
use crate::error::BuildError;
use crate::netlist::circuit::{Circuit, Element, ElementKind, Stimulus, GROUND};

pub mod names {
    pub const X: &str = "x";
    pub const A: &str = "a";
    pub const WL: &str = "wl";
    pub const BL1: &str = "bl1";
    pub const BL2: &str = "bl2";
    pub const VDD: &str = "vdd";

    pub const M1: &str = "M1";
    pub const M2: &str = "M2";
    pub const M3: &str = "M3";
    pub const C_S: &str = "CS";
    pub const C_BL: &str = "CBL";
    pub const PRECHARGE: &str = "SPRE";
    pub const SRC_WL: &str = "VWL";
    pub const SRC_BL1: &str = "VBL1";
    pub const SRC_VDD: &str = "VDD";

    pub const SENSE_OUT: &str = "sout";
    pub const SENSE_SUPPLY: &str = "vsense";
    pub const SRC_SENSE: &str = "VSENSE";
    pub const SRC_EN: &str = "VEN";
    pub const SRC_EN_BAR: &str = "VENB";
}

/// A ternary digit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct Trit(u8);

impl Trit {
    pub const ZERO: Trit = Trit(0);
    pub const ONE: Trit = Trit(1);
    pub const TWO: Trit = Trit(2);
    pub const ALL: [Trit; 3] = [Trit::ZERO, Trit::ONE, Trit::TWO];

    pub fn new(v: u8) -> Result<Self, BuildError> {
        if v <= 2 {
            Ok(Trit(v))
        } else {
            Err(BuildError::InvalidTrit(v))
        }
    }

    pub fn value(self) -> u8 {
        self.0
    }

    /// Standard ternary inversion: 0 <-> 2, 1 fixed.
    pub fn invert(self) -> Trit {
        Trit(2 - self.0)
    }

    /// Bit-line level encoding this trit: 0, VDD/2 or VDD.
    pub fn level(self, vdd: f64) -> f64 {
        f64::from(self.0) * 0.5 * vdd
    }
}

impl TryFrom<u8> for Trit {
    type Error = BuildError;

    fn try_from(v: u8) -> Result<Self, Self::Error> {
        Trit::new(v)
    }
}

impl From<Trit> for u8 {
    fn from(t: Trit) -> u8 {
        t.0
    }
}

impl std::fmt::Display for Trit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub fn trits(values: &[u8]) -> Result<Vec<Trit>, BuildError> {
    values.iter().map(|&v| Trit::new(v)).collect()
}

/// Electrical and timing parameters of the cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellParams {
    pub vdd: f64,
    pub c_s: f64,
    pub c_bl: f64,
    pub vth_m1: f64,
    pub vth_m2: f64,
    pub vth_m3: f64,
    pub tubes_m1: u32,
    pub tubes_m2: u32,
    pub tubes_m3: u32,
    /// Rise/fall time of every stimulus edge.
    pub edge_time: f64,
    /// One write (WL high) plus one read (WL low) half-cycle.
    pub cycle_time: f64,
    pub channel_length: f64,
    pub oxide_thickness: f64,
    pub precharge_r_on: f64,
    pub switch_r_off: f64,
}

impl Default for CellParams {
    fn default() -> Self {
        Self {
            vdd: 1.2,
            c_s: 0.1e-15,
            c_bl: 0.7e-15,
            vth_m1: 0.24,
            vth_m2: 0.6,
            vth_m3: -0.24,
            tubes_m1: 1,
            tubes_m2: 48,
            tubes_m3: 2,
            edge_time: 50e-12,
            cycle_time: 6e-9,
            channel_length: NOMINAL_CHANNEL_LENGTH,
            oxide_thickness: NOMINAL_OXIDE_THICKNESS,
            precharge_r_on: 10e3,
            switch_r_off: 1e12,
        }
    }
}

impl CellParams {
    pub fn check(&self) -> Result<(), BuildError> {
        let positive = [
            ("vdd", self.vdd),
            ("c_s", self.c_s),
            ("c_bl", self.c_bl),
            ("vth_m1", self.vth_m1),
            ("vth_m2", self.vth_m2),
            ("edge_time", self.edge_time),
            ("cycle_time", self.cycle_time),
            ("channel_length", self.channel_length),
            ("oxide_thickness", self.oxide_thickness),
            ("precharge_r_on", self.precharge_r_on),
        ];
        for (what, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(BuildError::Params(format!(
                    "{what} must be positive, got {v}"
                )));
            }
        }
        if !(self.vth_m3.is_finite() && self.vth_m3 < 0.0) {
            return Err(BuildError::Params(format!(
                "vth_m3 must be negative, got {}",
                self.vth_m3
            )));
        }
        if self.edge_time >= self.cycle_time / 4.0 {
            return Err(BuildError::Params(
                "edge_time must be shorter than a quarter cycle".into(),
            ));
        }
        if self.tubes_m1 == 0 || self.tubes_m2 == 0 || self.tubes_m3 == 0 {
            return Err(BuildError::Params("tube counts must be at least 1".into()));
        }
        if self.switch_r_off.partial_cmp(&self.precharge_r_on) != Some(std::cmp::Ordering::Greater)
        {
            return Err(BuildError::Params(
                "switch off resistance must exceed on resistance".into(),
            ));
        }
        Ok(())
    }

    fn device(&self, polarity: Polarity, n: u32, vth: f64, tubes: u32) -> CntfetDevice {
        CntfetDevice::new(
            polarity,
            Chirality::zigzag(n).expect("nonzero zigzag index"),
        )
        .with_tubes(tubes)
        .with_vth(vth)
        .with_geometry(self.channel_length, self.oxide_thickness)
    }
}

/// Timing of one write/read cycle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleWindow {
    pub index: usize,
    pub trit: Trit,
    pub start: f64,
    /// WL starts falling here; the read half-cycle follows.
    pub read_start: f64,
    pub end: f64,
}

/// Stimulus timing produced alongside a generated deck.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub vdd: f64,
    pub edge_time: f64,
    pub cycle_time: f64,
    pub cycles: Vec<CycleWindow>,
}

impl Schedule {
    pub fn t_stop(&self) -> f64 {
        self.cycles.last().map_or(0.0, |c| c.end)
    }

    pub fn cycle(&self, index: usize) -> Option<&CycleWindow> {
        self.cycles.get(index)
    }
}

fn fet(name: &str, device: CntfetDevice, drain: &str, gate: &str, source: &str) -> Element {
    Element::new(
        name,
        ElementKind::Cntfet {
            device,
            drain: drain.into(),
            gate: gate.into(),
            source: source.into(),
        },
    )
}

fn source(name: &str, pos: &str, stimulus: Stimulus) -> Element {
    Element::new(
        name,
        ElementKind::VoltageSource {
            stimulus,
            pos: pos.into(),
            neg: GROUND.into(),
        },
    )
}

fn capacitor(name: &str, pos: &str, farads: f64) -> Element {
    Element::new(
        name,
        ElementKind::Capacitor {
            farads,
            pos: pos.into(),
            neg: GROUND.into(),
        },
    )
}

/// Builds the single-cell deck that writes and then reads each trit of
/// `sequence`, one word-line period per trit.
pub fn build_dram_cell(
    p: &CellParams,
    sequence: &[Trit],
) -> Result<(Circuit, Schedule), BuildError> {
    p.check()?;
    if sequence.is_empty() {
        return Err(BuildError::EmptySequence);
    }
    use names::*;

    let half = 0.5 * p.cycle_time;
    let mut wl = Vec::with_capacity(4 * sequence.len());
    let mut bl1 = vec![(0.0, 0.0)];
    let mut cycles = Vec::with_capacity(sequence.len());
    let mut previous = 0.0;
    for (k, &trit) in sequence.iter().enumerate() {
        let start = k as f64 * p.cycle_time;
        let level = trit.level(p.vdd);
        // The first word-line pulse is already high at t = 0 so the DC
        // operating point starts from a precharged bit-line.
        if k == 0 {
            wl.push((start, p.vdd));
        } else {
            wl.extend_from_slice(&[(start, 0.0), (start + p.edge_time, p.vdd)]);
        }
        wl.extend_from_slice(&[(start + half, p.vdd), (start + half + p.edge_time, 0.0)]);
        if level != previous {
            bl1.push((start, previous));
            bl1.push((start + p.edge_time, level));
            previous = level;
        }
        cycles.push(CycleWindow {
            index: k,
            trit,
            start,
            read_start: start + half,
            end: start + p.cycle_time,
        });
    }

    let mut c = Circuit::new(format!(
        "ternary 3T DRAM cell, sequence {}",
        sequence.iter().map(|t| t.to_string()).collect::<String>()
    ));
    c.add(fet(
        M1,
        p.device(Polarity::N, 23, p.vth_m1, p.tubes_m1),
        X,
        WL,
        BL1,
    ));
    c.add(fet(
        M2,
        p.device(Polarity::N, 10, p.vth_m2, p.tubes_m2),
        A,
        X,
        GROUND,
    ));
    c.add(fet(
        M3,
        p.device(Polarity::P, 23, p.vth_m3, p.tubes_m3),
        A,
        WL,
        BL2,
    ));
    c.add(capacitor(C_S, X, p.c_s));
    c.add(capacitor(C_BL, BL2, p.c_bl));
    c.add(Element::new(
        PRECHARGE,
        ElementKind::Switch {
            ctrl: SRC_WL.into(),
            threshold: 0.5 * p.vdd,
            r_on: p.precharge_r_on,
            r_off: p.switch_r_off,
            pos: BL2.into(),
            neg: VDD.into(),
        },
    ));
    c.add(source(SRC_WL, WL, Stimulus::Pwl(wl)));
    c.add(source(SRC_BL1, BL1, Stimulus::Pwl(bl1)));
    c.add(source(SRC_VDD, VDD, Stimulus::Dc(p.vdd)));

    let schedule = Schedule {
        vdd: p.vdd,
        edge_time: p.edge_time,
        cycle_time: p.cycle_time,
        cycles,
    };
    Ok((c, schedule))
}

/// Options for the ternary sense inverter hung on BL2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SenseOptions {
    /// Adds the En/En-bar header and footer devices.
    pub with_enable: bool,
    /// Level driven onto En when the enable devices exist.
    pub enabled: bool,
}

impl Default for SenseOptions {
    fn default() -> Self {
        Self {
            with_enable: true,
            enabled: true,
        }
    }
}

/// Zigzag index of the low-threshold pull-up/pull-down pair (|Vth| ~ 0.29 V).
pub const SENSE_LOW_VTH_TUBE: u32 = 19;
/// Zigzag index of the high-threshold output pair (|Vth| ~ 0.69 V).
pub const SENSE_HIGH_VTH_TUBE: u32 = 8;
/// Zigzag index of the two diode-connected level-setting devices.
pub const SENSE_DIODE_TUBE: u32 = 13;

/// Elements of a six-transistor standard ternary inverter reading BL2,
/// optionally gated from its own supply by En/En-bar.
pub fn build_sense_circuit(p: &CellParams, opts: SenseOptions) -> Vec<Element> {
    use names::*;
    let dev = |pol, n| {
        CntfetDevice::new(pol, Chirality::zigzag(n).expect("nonzero zigzag index"))
            .with_geometry(p.channel_length, p.oxide_thickness)
    };
    let (rail_hi, rail_lo) = if opts.with_enable {
        ("vsint", "gsint")
    } else {
        (SENSE_SUPPLY, GROUND)
    };
    let input = BL2;
    let mut out = vec![
        fet(
            "MSPH",
            dev(Polarity::P, SENSE_HIGH_VTH_TUBE),
            SENSE_OUT,
            input,
            rail_hi,
        ),
        fet(
            "MSNH",
            dev(Polarity::N, SENSE_HIGH_VTH_TUBE),
            SENSE_OUT,
            input,
            rail_lo,
        ),
        fet(
            "MSPL",
            dev(Polarity::P, SENSE_LOW_VTH_TUBE),
            "sn1",
            input,
            rail_hi,
        ),
        fet(
            "MSNL",
            dev(Polarity::N, SENSE_LOW_VTH_TUBE),
            "sn2",
            input,
            rail_lo,
        ),
        fet(
            "MSD1",
            dev(Polarity::N, SENSE_DIODE_TUBE),
            "sn1",
            "sn1",
            SENSE_OUT,
        ),
        fet(
            "MSD2",
            dev(Polarity::P, SENSE_DIODE_TUBE),
            "sn2",
            "sn2",
            SENSE_OUT,
        ),
    ];
    if opts.with_enable {
        out.push(fet(
            "MSHDR",
            dev(Polarity::P, SENSE_LOW_VTH_TUBE),
            rail_hi,
            "enb",
            SENSE_SUPPLY,
        ));
        out.push(fet(
            "MSFTR",
            dev(Polarity::N, SENSE_LOW_VTH_TUBE),
            rail_lo,
            "en",
            GROUND,
        ));
        let (en, enb) = if opts.enabled {
            (p.vdd, 0.0)
        } else {
            (0.0, p.vdd)
        };
        out.push(source(SRC_EN, "en", Stimulus::Dc(en)));
        out.push(source(SRC_EN_BAR, "enb", Stimulus::Dc(enb)));
    }
    out.push(source(SRC_SENSE, SENSE_SUPPLY, Stimulus::Dc(p.vdd)));
    out
}

/// Cell deck with the sense inverter attached to BL2.
pub fn build_cell_with_sense(
    p: &CellParams,
    sequence: &[Trit],
    opts: SenseOptions,
) -> Result<(Circuit, Schedule), BuildError> {
    let (mut c, s) = build_dram_cell(p, sequence)?;
    for e in build_sense_circuit(p, opts) {
        c.add(e);
    }
    c.title.push_str(" + sense");
    Ok((c, s))
}
