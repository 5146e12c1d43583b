//! Carbon-nanotube geometry and a compact CNTFET current model.
//!
//! The chirality helpers are closed-form: tube diameter, chiral angle,
//! metallic/semiconducting classification and the half-bandgap threshold
//! voltage. The drain-current model is a stitched subthreshold-exponential
//! plus square-law characteristic, written in forward/reverse form so it is
//! symmetric in drain and source.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::DeviceError;

/// Carbon-carbon lattice constant used for tube diameters, in nanometres.
pub const LATTICE_CONSTANT_NM: f64 = 0.249;
/// Tight-binding pi-pi bond energy, in electron-volts.
pub const PI_BOND_ENERGY_EV: f64 = 3.033;
/// Elementary charge in eV-per-volt bookkeeping.
pub const ELEMENTARY_CHARGE: f64 = 1.0;

/// Nominal channel length the transconductance default refers to (m).
pub const NOMINAL_CHANNEL_LENGTH: f64 = 16e-9;
/// Nominal gate-oxide thickness the transconductance default refers to (m).
pub const NOMINAL_OXIDE_THICKNESS: f64 = 4e-9;
/// Temperature at which `k_on` and `i_off` are specified.
pub const NOMINAL_TEMPERATURE_C: f64 = 25.0;

/// Threshold of the device whose zero-bias leakage `i_off` describes.
///
/// The subthreshold branch of every device is anchored to this: a device with
/// |Vth| equal to the reference leaks exactly `i_off` per tube at v_gs = 0,
/// and a device with a higher threshold leaks `10^(-dVth/ss)` less.
pub const REFERENCE_THRESHOLD_V: f64 = 0.24;

/// Fractional derating of `k_on` per degree above nominal.
pub const K_ON_TEMPCO_PER_C: f64 = 0.002;
/// Temperature rise over which `i_off` doubles.
pub const I_OFF_DOUBLING_C: f64 = 12.0;

/// The rolling vector (n, m) of a single-walled nanotube.
///
/// Stored in canonical orientation n >= m; `(0, 0)` and `m > n` are rejected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "(u32, u32)", into = "(u32, u32)")]
pub struct Chirality {
    n: u32,
    m: u32,
}

impl Chirality {
    pub fn new(n: u32, m: u32) -> Result<Self, DeviceError> {
        if n == 0 && m == 0 {
            return Err(DeviceError::ZeroChirality);
        }
        if m > n {
            return Err(DeviceError::NonCanonicalChirality { n, m });
        }
        Ok(Self { n, m })
    }

    /// Zigzag tube `(n, 0)`.
    pub fn zigzag(n: u32) -> Result<Self, DeviceError> {
        Self::new(n, 0)
    }

    pub fn n(self) -> u32 {
        self.n
    }

    pub fn m(self) -> u32 {
        self.m
    }
}

impl TryFrom<(u32, u32)> for Chirality {
    type Error = DeviceError;

    fn try_from((n, m): (u32, u32)) -> Result<Self, Self::Error> {
        Self::new(n, m)
    }
}

impl From<Chirality> for (u32, u32) {
    fn from(c: Chirality) -> Self {
        (c.n, c.m)
    }
}

impl fmt::Display for Chirality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.n, self.m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Conduction {
    Metallic,
    Semiconducting,
}

/// Tube diameter in nanometres: `a * sqrt(n^2 + m^2 + n*m) / pi`.
pub fn tube_diameter(c: Chirality) -> f64 {
    let (n, m) = (f64::from(c.n), f64::from(c.m));
    LATTICE_CONSTANT_NM * (n * n + m * m + n * m).sqrt() / PI
}

/// Chiral angle in degrees, `atan(sqrt(3) n / (2m + n))`.
///
/// This is the literal expression; it gives 60 degrees for zigzag tubes and
/// 30 degrees for armchair ones.
pub fn chiral_angle(c: Chirality) -> Result<f64, DeviceError> {
    let denom = 2.0 * f64::from(c.m) + f64::from(c.n);
    if denom == 0.0 {
        return Err(DeviceError::ZeroChirality);
    }
    Ok((3f64.sqrt() * f64::from(c.n) / denom).atan().to_degrees())
}

pub fn classify_conduction(c: Chirality) -> Conduction {
    if (c.n - c.m).is_multiple_of(3) {
        Conduction::Metallic
    } else {
        Conduction::Semiconducting
    }
}

/// First-order threshold voltage (half bandgap) of a semiconducting tube.
pub fn threshold_voltage(c: Chirality) -> Result<f64, DeviceError> {
    if classify_conduction(c) == Conduction::Metallic {
        return Err(DeviceError::Metallic(c));
    }
    Ok(LATTICE_CONSTANT_NM * PI_BOND_ENERGY_EV
        / (3f64.sqrt() * ELEMENTARY_CHARGE * tube_diameter(c)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Polarity {
    N,
    P,
}

impl Polarity {
    pub fn sign(self) -> f64 {
        match self {
            Polarity::N => 1.0,
            Polarity::P => -1.0,
        }
    }
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Polarity::N => "n",
            Polarity::P => "p",
        })
    }
}

/// One CNTFET instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CntfetDevice {
    pub polarity: Polarity,
    pub chirality: Chirality,
    pub tubes: u32,
    /// Metres.
    pub channel_length: f64,
    /// Metres.
    pub oxide_thickness: f64,
    /// Transconductance parameter per tube (A/V^2).
    pub k_on: f64,
    /// Zero-bias leakage per tube of a reference-threshold device (A).
    pub i_off: f64,
    /// Subthreshold swing (mV/decade).
    pub ss_mv_per_decade: f64,
    /// Signed threshold that replaces the chirality-derived one.
    pub vth_override: Option<f64>,
}

impl CntfetDevice {
    pub const DEFAULT_K_ON: f64 = 40e-6;
    pub const DEFAULT_I_OFF: f64 = 1e-12;
    pub const DEFAULT_SS_MV: f64 = 70.0;

    /// Single-tube device at Table-I geometry with default model parameters.
    pub fn new(polarity: Polarity, chirality: Chirality) -> Self {
        Self {
            polarity,
            chirality,
            tubes: 1,
            channel_length: NOMINAL_CHANNEL_LENGTH,
            oxide_thickness: NOMINAL_OXIDE_THICKNESS,
            k_on: Self::DEFAULT_K_ON,
            i_off: Self::DEFAULT_I_OFF,
            ss_mv_per_decade: Self::DEFAULT_SS_MV,
            vth_override: None,
        }
    }

    pub fn with_tubes(mut self, tubes: u32) -> Self {
        self.tubes = tubes;
        self
    }

    pub fn with_vth(mut self, vth: f64) -> Self {
        self.vth_override = Some(vth);
        self
    }

    pub fn with_geometry(mut self, channel_length: f64, oxide_thickness: f64) -> Self {
        self.channel_length = channel_length;
        self.oxide_thickness = oxide_thickness;
        self
    }

    /// Signed threshold: positive for N devices, negative for P devices.
    pub fn threshold(&self) -> Result<f64, DeviceError> {
        match self.vth_override {
            Some(v) => Ok(v),
            None => Ok(self.polarity.sign() * threshold_voltage(self.chirality)?),
        }
    }

    pub fn check(&self) -> Result<(), DeviceError> {
        if self.tubes == 0 {
            return Err(DeviceError::NoTubes);
        }
        for (what, v) in [
            ("channel length", self.channel_length),
            ("oxide thickness", self.oxide_thickness),
            ("k_on", self.k_on),
            ("i_off", self.i_off),
            ("subthreshold swing", self.ss_mv_per_decade),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(DeviceError::NonPositive { what, value: v });
            }
        }
        // A metallic tube has no gap even when a threshold is forced.
        threshold_voltage(self.chirality)?;
        let vth = self.threshold()?;
        if !vth.is_finite() || vth == 0.0 || vth.signum() != self.polarity.sign() {
            return Err(DeviceError::ThresholdSign {
                polarity: self.polarity,
                vth,
            });
        }
        Ok(())
    }

    /// Bias-independent model constants at a given temperature.
    ///
    /// Panics only if the device fails [`CntfetDevice::check`]; circuits are
    /// validated before they are compiled.
    pub fn operating_params(&self, temperature_c: f64) -> ModelParams {
        let vth = self
            .threshold()
            .expect("device threshold must be validated before use")
            .abs();
        let dt = temperature_c - NOMINAL_TEMPERATURE_C;
        let geometry = (NOMINAL_CHANNEL_LENGTH / self.channel_length)
            * (NOMINAL_OXIDE_THICKNESS / self.oxide_thickness);
        let k_on = self.k_on * (1.0 - K_ON_TEMPCO_PER_C * dt) * geometry;
        let i_off = self.i_off * 2f64.powf(dt / I_OFF_DOUBLING_C);
        let swing = self.ss_mv_per_decade * 1e-3;
        ModelParams {
            sign: self.polarity.sign(),
            vth,
            tubes: f64::from(self.tubes),
            k_on: k_on.max(0.0),
            i_th: i_off * 10f64.powf(REFERENCE_THRESHOLD_V / swing),
            swing,
        }
    }
}

/// Bias-independent constants of one device, precomputed for the solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    sign: f64,
    vth: f64,
    tubes: f64,
    k_on: f64,
    /// Per-tube forward current at v_gs = Vth.
    i_th: f64,
    /// Subthreshold swing in volts per decade.
    swing: f64,
}

impl ModelParams {
    /// Current at the subthreshold/square-law stitch point, per tube.
    pub fn threshold_current(&self) -> f64 {
        self.i_th
    }

    /// Drain current (into the drain) for terminal voltages relative to the
    /// source.
    pub fn drain_current(&self, v_gs: f64, v_ds: f64) -> f64 {
        let (vgs, vds) = (self.sign * v_gs, self.sign * v_ds);
        let forward = self.branch(vgs - self.vth);
        let reverse = self.branch(vgs - vds - self.vth);
        self.sign * self.tubes * (forward - reverse)
    }

    /// One side of the forward/reverse decomposition as a function of
    /// overdrive. Exponential below zero; above zero the tangent of the
    /// exponential plus the square law, so value and slope are continuous.
    fn branch(&self, overdrive: f64) -> f64 {
        if overdrive <= 0.0 {
            self.i_th * 10f64.powf(overdrive / self.swing)
        } else {
            self.i_th * (1.0 + std::f64::consts::LN_10 * overdrive / self.swing)
                + 0.5 * self.k_on * overdrive * overdrive
        }
    }
}

/// Drain current of `dev` in amps; positive current flows into the drain.
pub fn drain_current(dev: &CntfetDevice, v_gs: f64, v_ds: f64, temperature_c: f64) -> f64 {
    dev.operating_params(temperature_c)
        .drain_current(v_gs, v_ds)
}
