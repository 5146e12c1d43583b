//! Ternary CNTFET DRAM cell simulation.
//!
//! The crate covers the chirality-dependent CNTFET compact model, a small
//! netlist format, an MNA transient solver, cycle-level measurements and
//! Monte-Carlo variation analysis.

pub mod device;
pub mod engine;
pub mod error;
pub mod io;
pub mod measure;
pub mod montecarlo;
pub mod netlist;
pub mod units;

pub use device::{
    chiral_angle, classify_conduction, drain_current, threshold_voltage, tube_diameter, Chirality,
    CntfetDevice, Conduction, ModelParams, Polarity,
};
pub use engine::{
    dc_operating_point, transient, Method, OperatingPoint, SolverConfig, SourceProbe, WaveformSet,
};
pub use error::{
    BuildError, DeviceError, IoError, MeasureError, ParseError, ParseErrorKind, SolveError,
};
pub use measure::{
    classify_level, classify_read, cycle_current, cycle_power, measure_cycle, measure_run,
    read_sense_time, sense_time, write_delay, CycleMeasurements, MeasurementReport, MetricVariant,
};
pub use montecarlo::{
    run_mc, sample_trials, sensitivity_rank, McConfig, McReport, Parameter, TrialParams,
    VariationSpec,
};
pub use netlist::{
    build_cell_with_sense, build_dram_cell, build_sense_circuit, parse_netlist, trits, CellParams,
    Circuit, CycleWindow, Diagnostic, Element, ElementKind, Schedule, SenseOptions, Stimulus, Trit,
    GROUND,
};
pub use units::{format_value, parse_value};
