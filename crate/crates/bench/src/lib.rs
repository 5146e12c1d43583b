//! Shared fixtures for the solver benchmarks.

use tdram_core::{
    build_dram_cell, parse_netlist, trits, CellParams, Circuit, Schedule, SolverConfig,
};

/// The nominal cell for `sequence` and a 1 ps solver config covering it.
pub fn cell(sequence: &[u8]) -> (Circuit, Schedule, SolverConfig) {
    let (c, s) = build_dram_cell(
        &CellParams::default(),
        &trits(sequence).expect("valid trits"),
    )
    .expect("nominal cell builds");
    let cfg = SolverConfig::default().with_dt(1e-12).with_stop(s.t_stop());
    (c, s, cfg)
}

/// An `stages`-long RC ladder discharging from 1.2 V.
pub fn rc_ladder(stages: usize) -> Circuit {
    let mut deck = String::from("* ladder\nVS in 0 pwl(0 1.2 0 0)\nVC g 0 dc 1\n");
    let mut prev = "in".to_string();
    for k in 1..=stages {
        deck.push_str(&format!(
            "S{k} {prev} n{k} ctrl=VC ron=1meg vt=0.5\nC{k} n{k} 0 0.7f\n"
        ));
        prev = format!("n{k}");
    }
    parse_netlist(&deck).expect("ladder deck parses")
}
