//! Cycle-level metrics extracted from simulated waveforms.
//!
//! Every extractor is a pure function of a [`WaveformSet`] and the
//! [`Schedule`] that generated its stimuli.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::engine::WaveformSet;
use crate::error::MeasureError;
use crate::netlist::{names, CycleWindow, Schedule, Trit};

/// Interpretation of the 20% read threshold.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricVariant {
    /// 20% of the excursion expected for the trit (VDD to VDD/2 or to 0).
    #[default]
    Excursion,
    /// 20% of the excursion actually reached by the end of the read window.
    FinalValue,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Rising,
    Falling,
    Either,
}

/// Value of a sampled trace at `t` by linear interpolation, held flat
/// outside the sampled range.
pub fn sample_at(time: &[f64], values: &[f64], t: f64) -> f64 {
    let idx = time.partition_point(|&x| x < t);
    if idx == 0 {
        return values[0];
    }
    if idx >= time.len() {
        return values[time.len() - 1];
    }
    let (t0, t1) = (time[idx - 1], time[idx]);
    let (v0, v1) = (values[idx - 1], values[idx]);
    if t1 <= t0 {
        return v1;
    }
    v0 + (v1 - v0) * (t - t0) / (t1 - t0)
}

/// First time in `[from, to]` at which the trace crosses `level` in the
/// given direction, linearly interpolated between samples.
pub fn crossing(
    time: &[f64],
    values: &[f64],
    level: f64,
    from: f64,
    to: f64,
    dir: Direction,
) -> Option<f64> {
    let start = time.partition_point(|&x| x < from);
    let mut prev_t = from;
    let mut prev_v = sample_at(time, values, from);
    for k in start..time.len() {
        let (t, v) = if time[k] >= to {
            (to, sample_at(time, values, to))
        } else {
            (time[k], values[k])
        };
        let rising = prev_v < level && v >= level;
        let falling = prev_v > level && v <= level;
        let hit = match dir {
            Direction::Rising => rising,
            Direction::Falling => falling,
            Direction::Either => rising || falling,
        };
        if hit {
            return Some(prev_t + (t - prev_t) * (level - prev_v) / (v - prev_v));
        }
        if time[k] >= to {
            break;
        }
        prev_t = t;
        prev_v = v;
    }
    None
}

/// Trapezoidal time average of `f(sample index)` over `[t0, t1]`.
pub fn window_average(time: &[f64], t0: f64, t1: f64, f: impl Fn(usize) -> f64) -> f64 {
    if time.is_empty() || t1 <= t0 {
        return 0.0;
    }
    let interp = |t: f64| -> f64 {
        let idx = time.partition_point(|&x| x < t);
        if idx == 0 {
            return f(0);
        }
        if idx >= time.len() {
            return f(time.len() - 1);
        }
        let (ta, tb) = (time[idx - 1], time[idx]);
        let (a, b) = (f(idx - 1), f(idx));
        if tb <= ta {
            b
        } else {
            a + (b - a) * (t - ta) / (tb - ta)
        }
    };
    let lo = time.partition_point(|&x| x <= t0);
    let hi = time.partition_point(|&x| x < t1);
    let mut area = 0.0;
    let mut prev = (t0, interp(t0));
    for (k, &tk) in time.iter().enumerate().take(hi).skip(lo) {
        let cur = (tk, f(k));
        area += 0.5 * (cur.1 + prev.1) * (cur.0 - prev.0);
        prev = cur;
    }
    area += 0.5 * (interp(t1) + prev.1) * (t1 - prev.0);
    area / (t1 - t0)
}

fn trace<'a>(wf: &'a WaveformSet, node: &str) -> Result<&'a [f64], MeasureError> {
    wf.voltage(node)
        .ok_or_else(|| MeasureError::MissingTrace(node.to_string()))
}

fn branch<'a>(wf: &'a WaveformSet, element: &str) -> Result<&'a [f64], MeasureError> {
    wf.current(element)
        .ok_or_else(|| MeasureError::MissingTrace(element.to_string()))
}

fn window(s: &Schedule, cycle: usize) -> Result<&CycleWindow, MeasureError> {
    s.cycle(cycle).ok_or(MeasureError::BadCycle {
        cycle,
        cycles: s.cycles.len(),
    })
}

/// Time of the word-line's 50% rising edge that opens the cycle; the cycle
/// start if the word-line is already high there.
pub fn wl_rise(wf: &WaveformSet, s: &Schedule, cycle: usize) -> Result<f64, MeasureError> {
    let w = window(s, cycle)?;
    let wl = trace(wf, names::WL)?;
    if sample_at(&wf.time, wl, w.start) >= 0.5 * s.vdd {
        return Ok(w.start);
    }
    crossing(
        &wf.time,
        wl,
        0.5 * s.vdd,
        w.start,
        w.read_start,
        Direction::Rising,
    )
    .ok_or(MeasureError::MissingEdge {
        cycle,
        edge: "rising",
    })
}

/// Time of the word-line's 50% falling edge that starts the read.
pub fn wl_fall(wf: &WaveformSet, s: &Schedule, cycle: usize) -> Result<f64, MeasureError> {
    let w = window(s, cycle)?;
    let wl = trace(wf, names::WL)?;
    crossing(
        &wf.time,
        wl,
        0.5 * s.vdd,
        w.read_start,
        w.end,
        Direction::Falling,
    )
    .ok_or(MeasureError::MissingEdge {
        cycle,
        edge: "falling",
    })
}

/// Delay from the word-line 50% rise to X passing halfway between its value
/// at the start of the cycle and the value it holds when the word-line falls.
pub fn write_delay(wf: &WaveformSet, s: &Schedule, cycle: usize) -> Result<f64, MeasureError> {
    let w = window(s, cycle)?;
    let x = trace(wf, names::X)?;
    let t_rise = wl_rise(wf, s, cycle)?;
    let t_fall = wl_fall(wf, s, cycle)?;
    let initial = sample_at(&wf.time, x, w.start);
    let stored = sample_at(&wf.time, x, t_fall);
    let level = 0.5 * (initial + stored);
    if (stored - initial).abs() < 1e-3 {
        return Err(MeasureError::TargetNeverReached {
            cycle,
            threshold: level,
        });
    }
    let t = crossing(&wf.time, x, level, w.start, t_fall, Direction::Either).ok_or(
        MeasureError::TargetNeverReached {
            cycle,
            threshold: level,
        },
    )?;
    Ok((t - t_rise).max(0.0))
}

/// Time from the word-line 50% fall until BL2 has dropped by 20% of its
/// excursion. Reading a stored 0 leaves BL2 at precharge and is defined as 0.
pub fn read_sense_time(
    wf: &WaveformSet,
    s: &Schedule,
    cycle: usize,
    expected: Trit,
    variant: MetricVariant,
) -> Result<f64, MeasureError> {
    let w = window(s, cycle)?;
    if expected == Trit::ZERO {
        return Ok(0.0);
    }
    let bl2 = trace(wf, names::BL2)?;
    let t_fall = wl_fall(wf, s, cycle)?;
    let excursion = match variant {
        MetricVariant::Excursion => s.vdd - expected.invert().level(s.vdd),
        MetricVariant::FinalValue => s.vdd - sample_at(&wf.time, bl2, w.end),
    };
    let level = s.vdd - 0.2 * excursion;
    let never = MeasureError::ExcursionNeverReached {
        cycle,
        threshold: level,
    };
    if excursion < 1e-3 {
        return Err(never);
    }
    let t = crossing(&wf.time, bl2, level, t_fall, w.end, Direction::Falling).ok_or(never)?;
    Ok(t - t_fall)
}

fn cell_current_at<'a>(i1: &'a [f64], i2: &'a [f64]) -> impl Fn(usize) -> f64 + 'a {
    move |k| i1[k].abs() + i2[k].abs()
}

/// Average of |i(M1)| + |i(M2)| over `[t0, t1]`.
pub fn average_cell_current(wf: &WaveformSet, t0: f64, t1: f64) -> Result<f64, MeasureError> {
    if t1 <= t0 {
        return Err(MeasureError::EmptyWindow);
    }
    let i1 = branch(wf, names::M1)?;
    let i2 = branch(wf, names::M2)?;
    Ok(window_average(&wf.time, t0, t1, cell_current_at(i1, i2)))
}

/// Cycle average of the current through the write (M1) and read (M2) paths.
pub fn cycle_current(wf: &WaveformSet, s: &Schedule, cycle: usize) -> Result<f64, MeasureError> {
    let w = window(s, cycle)?;
    average_cell_current(wf, w.start, w.end)
}

/// Average power delivered by the named voltage sources over `[t0, t1]`.
pub fn delivered_power(
    wf: &WaveformSet,
    sources: &[&str],
    t0: f64,
    t1: f64,
) -> Result<f64, MeasureError> {
    if t1 <= t0 {
        return Err(MeasureError::EmptyWindow);
    }
    let mut total = 0.0;
    for &name in sources {
        let probe = wf
            .sources
            .iter()
            .find(|p| p.name.eq_ignore_ascii_case(name))
            .ok_or_else(|| MeasureError::MissingTrace(name.to_string()))?;
        let vp = wf
            .node_or_ground(&probe.pos)
            .ok_or_else(|| MeasureError::MissingTrace(probe.pos.clone()))?;
        let vn = wf
            .node_or_ground(&probe.neg)
            .ok_or_else(|| MeasureError::MissingTrace(probe.neg.clone()))?;
        let i = branch(wf, name)?;
        total += window_average(&wf.time, t0, t1, |k| -(vp[k] - vn[k]) * i[k]);
    }
    Ok(total)
}

/// Sources feeding the bare cell.
pub const CELL_SOURCES: [&str; 3] = [names::SRC_WL, names::SRC_BL1, names::SRC_VDD];

/// The two power figures of a window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerFigures {
    /// Average power delivered by the cell's sources.
    pub delivered: f64,
    /// VDD times the average cell current.
    pub vdd_times_current: f64,
}

pub fn cycle_power(
    wf: &WaveformSet,
    s: &Schedule,
    cycle: usize,
) -> Result<PowerFigures, MeasureError> {
    let w = window(s, cycle)?;
    Ok(PowerFigures {
        delivered: delivered_power(wf, &CELL_SOURCES, w.start, w.end)?,
        vdd_times_current: s.vdd * average_cell_current(wf, w.start, w.end)?,
    })
}

/// Maps a sense-output voltage to a trit with equal-width bands.
pub fn classify_level(v: f64, vdd: f64) -> Trit {
    if v < vdd / 3.0 {
        Trit::ZERO
    } else if v < 2.0 * vdd / 3.0 {
        Trit::ONE
    } else {
        Trit::TWO
    }
}

/// Classifies the sense output at the end of `[t0, t1]`; fails if the output
/// changes band during the final 10% of the window.
pub fn classify_read(
    time: &[f64],
    sense_out: &[f64],
    t0: f64,
    t1: f64,
    vdd: f64,
) -> Result<Trit, MeasureError> {
    if t1 <= t0 || time.is_empty() {
        return Err(MeasureError::EmptyWindow);
    }
    let result = classify_level(sample_at(time, sense_out, t1), vdd);
    let tail = t1 - 0.1 * (t1 - t0);
    let lo = time.partition_point(|&x| x < tail);
    let hi = time.partition_point(|&x| x <= t1);
    let stable = classify_level(sample_at(time, sense_out, tail), vdd) == result
        && (lo..hi).all(|k| classify_level(sense_out[k], vdd) == result);
    if stable {
        Ok(result)
    } else {
        Err(MeasureError::Ambiguous)
    }
}

/// Sense-inverter read of one cycle, over the read half-cycle.
pub fn sense_read(wf: &WaveformSet, s: &Schedule, cycle: usize) -> Result<Trit, MeasureError> {
    let w = window(s, cycle)?;
    let out = trace(wf, names::SENSE_OUT)?;
    classify_read(&wf.time, out, wl_fall(wf, s, cycle)?, w.end, s.vdd)
}

/// Time from the word-line 50% fall until the sense output enters the band
/// of `expected`; zero for a stored 0, whose output never leaves its band.
pub fn sense_time(
    wf: &WaveformSet,
    s: &Schedule,
    cycle: usize,
    expected: Trit,
) -> Result<f64, MeasureError> {
    let w = window(s, cycle)?;
    let level = match expected.value() {
        0 => return Ok(0.0),
        1 => s.vdd / 3.0,
        _ => 2.0 * s.vdd / 3.0,
    };
    let out = trace(wf, names::SENSE_OUT)?;
    let t_fall = wl_fall(wf, s, cycle)?;
    let t = crossing(&wf.time, out, level, t_fall, w.end, Direction::Rising).ok_or(
        MeasureError::TargetNeverReached {
            cycle,
            threshold: level,
        },
    )?;
    Ok(t - t_fall)
}

/// Average current drawn from the sense supply over `[t0, t1]`.
pub fn sense_supply_current(wf: &WaveformSet, t0: f64, t1: f64) -> Result<f64, MeasureError> {
    if t1 <= t0 {
        return Err(MeasureError::EmptyWindow);
    }
    let i = branch(wf, names::SRC_SENSE)?;
    Ok(window_average(&wf.time, t0, t1, |k| i[k].abs()))
}

/// Metrics of one write/read cycle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleMeasurements {
    pub written_trit: Trit,
    pub write_time: f64,
    pub read_sense_time: f64,
    pub avg_current: f64,
    pub avg_power: f64,
}

/// All metrics of a cycle, failing on the first unavailable one.
pub fn measure_cycle(
    wf: &WaveformSet,
    s: &Schedule,
    cycle: usize,
    variant: MetricVariant,
) -> Result<CycleMeasurements, MeasureError> {
    let trit = window(s, cycle)?.trit;
    Ok(CycleMeasurements {
        written_trit: trit,
        write_time: write_delay(wf, s, cycle)?,
        read_sense_time: read_sense_time(wf, s, cycle, trit, variant)?,
        avg_current: cycle_current(wf, s, cycle)?,
        avg_power: cycle_power(wf, s, cycle)?.delivered,
    })
}

/// One cycle of a [`MeasurementReport`]; unavailable metrics are `None` and
/// explained in the report's error list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleReport {
    pub cycle: usize,
    pub trit: Trit,
    pub write_time_s: Option<f64>,
    pub read_sense_time_s: Option<f64>,
    pub avg_current_a: Option<f64>,
    pub avg_power_w: Option<f64>,
    pub avg_power_vdd_current_w: Option<f64>,
    pub stored_x_v: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sense_read: Option<Trit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sense_time_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SenseSummary {
    pub sense_time_0_s: Option<f64>,
    pub sense_time_1_s: Option<f64>,
    pub sense_time_2_s: Option<f64>,
    pub avg_current_a: f64,
    pub avg_power_w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementReport {
    pub variant: MetricVariant,
    pub vdd: f64,
    pub cycles: Vec<CycleReport>,
    /// Per-trit figures taken from the first cycle storing that trit.
    pub read_sense_time_s: BTreeMap<String, Option<f64>>,
    pub avg_current_a: f64,
    pub avg_power_w: f64,
    pub avg_power_vdd_current_w: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sense: Option<SenseSummary>,
    pub errors: Vec<String>,
}

/// Extracts every metric of every cycle. Whole-run averages fail only when
/// the required traces are missing.
pub fn measure_run(
    wf: &WaveformSet,
    s: &Schedule,
    variant: MetricVariant,
    with_sense: bool,
) -> Result<MeasurementReport, MeasureError> {
    let mut errors = Vec::new();
    fn keep<T>(
        errors: &mut Vec<String>,
        cycle: usize,
        what: &str,
        r: Result<T, MeasureError>,
    ) -> Option<T> {
        r.map_err(|e| errors.push(format!("cycle {cycle} {what}: {e}")))
            .ok()
    }
    let x = trace(wf, names::X)?;
    let mut cycles = Vec::with_capacity(s.cycles.len());
    for w in &s.cycles {
        let k = w.index;
        let power = cycle_power(wf, s, k);
        let mut rep = CycleReport {
            cycle: k,
            trit: w.trit,
            write_time_s: keep(&mut errors, k, "write_time", write_delay(wf, s, k)),
            read_sense_time_s: keep(
                &mut errors,
                k,
                "read_sense_time",
                read_sense_time(wf, s, k, w.trit, variant),
            ),
            avg_current_a: keep(&mut errors, k, "avg_current", cycle_current(wf, s, k)),
            avg_power_w: keep(
                &mut errors,
                k,
                "avg_power",
                power.clone().map(|p| p.delivered),
            ),
            avg_power_vdd_current_w: power.ok().map(|p| p.vdd_times_current),
            stored_x_v: wl_fall(wf, s, k).ok().map(|t| sample_at(&wf.time, x, t)),
            sense_read: None,
            sense_time_s: None,
        };
        if with_sense {
            rep.sense_read = keep(&mut errors, k, "sense_read", sense_read(wf, s, k));
            rep.sense_time_s = keep(&mut errors, k, "sense_time", sense_time(wf, s, k, w.trit));
        }
        cycles.push(rep);
    }

    let first = |trit: Trit, f: fn(&CycleReport) -> Option<f64>| {
        cycles.iter().filter(|c| c.trit == trit).find_map(f)
    };
    let read_sense_time_s = Trit::ALL
        .iter()
        .filter(|t| cycles.iter().any(|c| c.trit == **t))
        .map(|&t| (t.to_string(), first(t, |c| c.read_sense_time_s)))
        .collect();
    let (t0, t1) = (0.0, s.t_stop());
    let avg_current_a = average_cell_current(wf, t0, t1)?;
    let sense = if with_sense {
        let i = sense_supply_current(wf, t0, t1)?;
        Some(SenseSummary {
            sense_time_0_s: first(Trit::ZERO, |c| c.sense_time_s),
            sense_time_1_s: first(Trit::ONE, |c| c.sense_time_s),
            sense_time_2_s: first(Trit::TWO, |c| c.sense_time_s),
            avg_current_a: i,
            avg_power_w: delivered_power(wf, &[names::SRC_SENSE], t0, t1)?,
        })
    } else {
        None
    };
    Ok(MeasurementReport {
        variant,
        vdd: s.vdd,
        read_sense_time_s,
        avg_current_a,
        avg_power_w: delivered_power(wf, &CELL_SOURCES, t0, t1)?,
        avg_power_vdd_current_w: s.vdd * avg_current_a,
        sense,
        errors,
        cycles,
    })
}
