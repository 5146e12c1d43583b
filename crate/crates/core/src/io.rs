//! Waveform and Monte-Carlo trial tables as CSV.
//!
//! Waveform columns are `time_s`, then `v_<node>` per node, then
//! `i_<element>` per element, all in SI base units and scientific notation.

use std::io::{Read, Write};

use crate::engine::WaveformSet;
use crate::error::IoError;
use crate::montecarlo::{McReport, TrialOutcome, METRICS};
use crate::units::format_value;

pub fn write_waveforms<W: Write>(wf: &WaveformSet, out: W) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(out);
    let header: Vec<String> = std::iter::once("time_s".to_string())
        .chain(wf.node_names.iter().map(|n| format!("v_{n}")))
        .chain(wf.element_names.iter().map(|n| format!("i_{n}")))
        .collect();
    w.write_record(&header)?;
    let mut row = Vec::with_capacity(header.len());
    for k in 0..wf.len() {
        row.clear();
        row.push(format_value(wf.time[k]));
        row.extend(wf.voltages.iter().map(|s| format_value(s[k])));
        row.extend(wf.currents.iter().map(|s| format_value(s[k])));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a file produced by [`write_waveforms`]. Source terminal metadata
/// is not stored in the CSV and comes back empty.
pub fn read_waveforms<R: Read>(input: R) -> Result<WaveformSet, IoError> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    if header.get(0) != Some("time_s") {
        return Err(IoError::Format("first column must be time_s".into()));
    }
    let mut wf = WaveformSet {
        time: Vec::new(),
        node_names: Vec::new(),
        voltages: Vec::new(),
        element_names: Vec::new(),
        currents: Vec::new(),
        sources: Vec::new(),
    };
    // Column k of the file maps to (is_voltage, series index).
    let mut layout = Vec::new();
    for col in header.iter().skip(1) {
        if let Some(n) = col.strip_prefix("v_") {
            layout.push((true, wf.node_names.len()));
            wf.node_names.push(n.to_string());
            wf.voltages.push(Vec::new());
        } else if let Some(n) = col.strip_prefix("i_") {
            layout.push((false, wf.element_names.len()));
            wf.element_names.push(n.to_string());
            wf.currents.push(Vec::new());
        } else {
            return Err(IoError::Format(format!("unexpected column '{col}'")));
        }
    }
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let parse = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| IoError::Format(format!("record {}: bad number '{s}'", line + 1)))
        };
        wf.time.push(parse(&rec[0])?);
        for (field, &(is_v, idx)) in rec.iter().skip(1).zip(&layout) {
            let v = parse(field)?;
            if is_v {
                wf.voltages[idx].push(v);
            } else {
                wf.currents[idx].push(v);
            }
        }
    }
    Ok(wf)
}

/// One row per trial: index, sampled parameters, status and every metric
/// (empty for failed trials).
pub fn write_trials<W: Write>(report: &McReport, out: W) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec![
        "trial",
        "temperature_c",
        "vdd_v",
        "channel_length_m",
        "oxide_thickness_m",
        "status",
    ];
    header.extend(METRICS);
    w.write_record(&header)?;
    for t in &report.trials {
        let p = &t.params;
        let mut row = vec![
            t.index.to_string(),
            format_value(p.temperature_c),
            format_value(p.vdd),
            format_value(p.channel_length),
            format_value(p.oxide_thickness),
        ];
        match &t.outcome {
            TrialOutcome::Ok(m) => {
                row.push("ok".into());
                row.extend(m.values().iter().map(|v| format_value(*v)));
            }
            TrialOutcome::Failed(_) => {
                row.push("failed".into());
                row.extend(METRICS.iter().map(|_| String::new()));
            }
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
