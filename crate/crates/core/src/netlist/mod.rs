//! Circuit data model, text netlist reader/writer and deck generators.

mod builder;
mod circuit;
mod parser;

pub use builder::{
    build_cell_with_sense, build_dram_cell, build_sense_circuit, names, trits, CellParams,
    CycleWindow, Schedule, SenseOptions, Trit, SENSE_DIODE_TUBE, SENSE_HIGH_VTH_TUBE,
    SENSE_LOW_VTH_TUBE,
};
pub use circuit::{Circuit, Diagnostic, Element, ElementKind, Stimulus, GROUND};
pub use parser::{parse_netlist, DEFAULT_SWITCH_R_OFF, DEFAULT_SWITCH_R_ON};
