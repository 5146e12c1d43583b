//! Gaussian process-variation sweeps over the cell.

use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::device::{NOMINAL_CHANNEL_LENGTH, NOMINAL_OXIDE_THICKNESS, NOMINAL_TEMPERATURE_C};
use crate::engine::{transient, SolverConfig};
use crate::error::SolveError;
use crate::measure::{
    average_cell_current, delivered_power, measure_cycle, CycleMeasurements, MetricVariant,
    CELL_SOURCES,
};
use crate::netlist::{build_dram_cell, CellParams, Trit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parameter {
    Temperature,
    SupplyVoltage,
    ChannelLength,
    OxideThickness,
}

impl Parameter {
    pub const ALL: [Parameter; 4] = [
        Parameter::Temperature,
        Parameter::SupplyVoltage,
        Parameter::ChannelLength,
        Parameter::OxideThickness,
    ];

    pub fn nominal(self) -> f64 {
        match self {
            Parameter::Temperature => NOMINAL_TEMPERATURE_C,
            Parameter::SupplyVoltage => 1.2,
            Parameter::ChannelLength => NOMINAL_CHANNEL_LENGTH,
            Parameter::OxideThickness => NOMINAL_OXIDE_THICKNESS,
        }
    }

    /// Default absolute 3-sigma half-width: 15 degC, or 10% of nominal.
    pub fn default_three_sigma(self, nominal: f64) -> f64 {
        match self {
            Parameter::Temperature => 15.0,
            _ => 0.1 * nominal.abs(),
        }
    }
}

impl fmt::Display for Parameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Parameter::Temperature => "temperature",
            Parameter::SupplyVoltage => "supply_voltage",
            Parameter::ChannelLength => "channel_length",
            Parameter::OxideThickness => "oxide_thickness",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariationSpec {
    pub parameter: Parameter,
    pub nominal: f64,
    pub three_sigma: f64,
}

impl VariationSpec {
    pub fn new(parameter: Parameter, nominal: f64, three_sigma: f64) -> Self {
        Self {
            parameter,
            nominal,
            three_sigma,
        }
    }

    /// Spec at the default nominal and spread.
    pub fn default_for(parameter: Parameter) -> Self {
        let nominal = parameter.nominal();
        Self::new(parameter, nominal, parameter.default_three_sigma(nominal))
    }

    pub fn bounds(&self) -> (f64, f64) {
        (
            self.nominal - self.three_sigma,
            self.nominal + self.three_sigma,
        )
    }

    /// Truncated Gaussian draw by rejection; exactly nominal when the spread
    /// is zero.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.three_sigma == 0.0 {
            return self.nominal;
        }
        let sigma = self.three_sigma / 3.0;
        loop {
            let z: f64 = StandardNormal.sample(rng);
            if z.abs() <= 3.0 {
                return self.nominal + sigma * z;
            }
        }
    }
}

/// Parameter values used by one trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialParams {
    pub temperature_c: f64,
    pub vdd: f64,
    pub channel_length: f64,
    pub oxide_thickness: f64,
}

impl TrialParams {
    pub fn nominal(cell: &CellParams, temperature_c: f64) -> Self {
        Self {
            temperature_c,
            vdd: cell.vdd,
            channel_length: cell.channel_length,
            oxide_thickness: cell.oxide_thickness,
        }
    }

    pub fn get(&self, p: Parameter) -> f64 {
        match p {
            Parameter::Temperature => self.temperature_c,
            Parameter::SupplyVoltage => self.vdd,
            Parameter::ChannelLength => self.channel_length,
            Parameter::OxideThickness => self.oxide_thickness,
        }
    }

    fn set(&mut self, p: Parameter, v: f64) {
        match p {
            Parameter::Temperature => self.temperature_c = v,
            Parameter::SupplyVoltage => self.vdd = v,
            Parameter::ChannelLength => self.channel_length = v,
            Parameter::OxideThickness => self.oxide_thickness = v,
        }
    }

    pub fn apply(&self, cell: &CellParams) -> CellParams {
        CellParams {
            vdd: self.vdd,
            channel_length: self.channel_length,
            oxide_thickness: self.oxide_thickness,
            ..cell.clone()
        }
    }
}

fn trial_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Draws trial `index`; a pure function of `(seed, index)`.
pub fn sample_trial(
    base: TrialParams,
    specs: &[VariationSpec],
    seed: u64,
    index: usize,
) -> TrialParams {
    let mut rng = trial_rng(seed, index);
    let mut p = base;
    for s in specs {
        p.set(s.parameter, s.sample(&mut rng));
    }
    p
}

pub fn sample_trials(
    base: TrialParams,
    specs: &[VariationSpec],
    n: usize,
    seed: u64,
) -> Vec<TrialParams> {
    (0..n).map(|i| sample_trial(base, specs, seed, i)).collect()
}

/// Written sequence of each trial. Cycles 1, 2 and 4 hold the 2->0, 0->1
/// and 0->2 write transitions.
pub const MC_SEQUENCE: [u8; 5] = [2, 0, 1, 0, 2];
/// Cycle measured for each trit, indexed by trit value.
pub const MC_CYCLES: [usize; 3] = [1, 2, 4];

/// Metric names, in report and CSV column order.
pub const METRICS: [&str; 7] = [
    "write_time_0_s",
    "write_time_1_s",
    "write_time_2_s",
    "read_sense_time_1_s",
    "read_sense_time_2_s",
    "avg_current_a",
    "avg_power_w",
];

/// Measurements of one successful trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialMetrics {
    /// Indexed by trit value.
    pub cycles: [CycleMeasurements; 3],
    /// Whole-run average of |i(M1)| + |i(M2)|.
    pub avg_current: f64,
    /// Whole-run average power delivered by the cell sources.
    pub avg_power: f64,
}

impl TrialMetrics {
    pub fn values(&self) -> [f64; 7] {
        let c = &self.cycles;
        [
            c[0].write_time,
            c[1].write_time,
            c[2].write_time,
            c[1].read_sense_time,
            c[2].read_sense_time,
            self.avg_current,
            self.avg_power,
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub index: usize,
    pub params: TrialParams,
    #[serde(flatten)]
    pub outcome: TrialOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialOutcome {
    Ok(TrialMetrics),
    Failed(String),
}

impl Trial {
    pub fn metrics(&self) -> Option<&TrialMetrics> {
        match &self.outcome {
            TrialOutcome::Ok(m) => Some(m),
            TrialOutcome::Failed(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub mean: f64,
    pub stddev: f64,
    pub min: f64,
    pub max: f64,
}

impl Stats {
    /// Sample statistics (n - 1 denominator; zero spread for one value).
    pub fn of(values: &[f64]) -> Option<Stats> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = if values.len() > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Some(Stats {
            mean,
            stddev: var.sqrt(),
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub seed: u64,
    pub specs: Vec<VariationSpec>,
    pub nominal: TrialMetrics,
    pub trials: Vec<Trial>,
    pub failures: usize,
    pub summary: BTreeMap<String, Stats>,
    pub worst_case_deviation: BTreeMap<String, f64>,
}

impl McReport {
    /// Metric values of the successful trials, in trial order.
    pub fn column(&self, metric: &str) -> Vec<f64> {
        let Some(k) = METRICS.iter().position(|m| *m == metric) else {
            return Vec::new();
        };
        self.trials
            .iter()
            .filter_map(Trial::metrics)
            .map(|m| m.values()[k])
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct McConfig {
    pub cell: CellParams,
    pub temperature_c: f64,
    pub solver: SolverConfig,
    pub variant: MetricVariant,
    pub parallel: bool,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            cell: CellParams::default(),
            temperature_c: NOMINAL_TEMPERATURE_C,
            solver: SolverConfig {
                dt: 1e-12,
                ..SolverConfig::default()
            },
            variant: MetricVariant::Excursion,
            parallel: true,
        }
    }
}

/// Simulates the measurement sequence at one parameter set.
pub fn evaluate(cfg: &McConfig, p: &TrialParams) -> Result<TrialMetrics, String> {
    let cell = p.apply(&cfg.cell);
    let seq: Vec<Trit> = MC_SEQUENCE
        .iter()
        .map(|&v| Trit::new(v).expect("valid trit"))
        .collect();
    let (circuit, schedule) = build_dram_cell(&cell, &seq).map_err(|e| e.to_string())?;
    let solver = SolverConfig {
        t_stop: schedule.t_stop(),
        temperature_c: p.temperature_c,
        ..cfg.solver.clone()
    };
    let wf = transient(&circuit, &solver).map_err(|e| e.to_string())?;
    let m = |trit: usize| {
        measure_cycle(&wf, &schedule, MC_CYCLES[trit], cfg.variant)
            .map_err(|e| format!("trit {trit}: {e}"))
    };
    let (t0, t1) = (0.0, schedule.t_stop());
    Ok(TrialMetrics {
        cycles: [m(0)?, m(1)?, m(2)?],
        avg_current: average_cell_current(&wf, t0, t1).map_err(|e| e.to_string())?,
        avg_power: delivered_power(&wf, &CELL_SOURCES, t0, t1).map_err(|e| e.to_string())?,
    })
}

fn summarize(
    nominal: &TrialMetrics,
    trials: &[Trial],
) -> (BTreeMap<String, Stats>, BTreeMap<String, f64>) {
    let ok: Vec<[f64; 7]> = trials
        .iter()
        .filter_map(Trial::metrics)
        .map(TrialMetrics::values)
        .collect();
    let nom = nominal.values();
    let mut summary = BTreeMap::new();
    let mut worst = BTreeMap::new();
    for (k, name) in METRICS.iter().enumerate() {
        let col: Vec<f64> = ok.iter().map(|v| v[k]).collect();
        if let Some(s) = Stats::of(&col) {
            summary.insert(name.to_string(), s);
            let w = col.iter().map(|v| (v - nom[k]).abs()).fold(0.0, f64::max);
            worst.insert(name.to_string(), w);
        }
    }
    (summary, worst)
}

/// Runs `n` varied trials plus a nominal reference.
///
/// Trials are independent and may run in parallel; results are keyed by trial
/// index, so the report does not depend on scheduling. The nominal reference
/// takes each varied parameter at its spec nominal.
pub fn run_mc(
    cfg: &McConfig,
    specs: &[VariationSpec],
    n: usize,
    seed: u64,
) -> Result<McReport, SolveError> {
    if n == 0 {
        return Err(SolveError::Config("at least one trial is required".into()));
    }
    let mut base = TrialParams::nominal(&cfg.cell, cfg.temperature_c);
    for s in specs {
        base.set(s.parameter, s.nominal);
    }
    let nominal =
        evaluate(cfg, &base).map_err(|e| SolveError::Config(format!("nominal run failed: {e}")))?;

    let run = |i: usize| {
        let params = sample_trial(base, specs, seed, i);
        let outcome = match evaluate(cfg, &params) {
            Ok(m) => TrialOutcome::Ok(m),
            Err(e) => TrialOutcome::Failed(e),
        };
        Trial {
            index: i,
            params,
            outcome,
        }
    };
    let trials: Vec<Trial> = if cfg.parallel {
        (0..n).into_par_iter().map(run).collect()
    } else {
        (0..n).map(run).collect()
    };
    let failures = trials.iter().filter(|t| t.metrics().is_none()).count();
    let (summary, worst_case_deviation) = summarize(&nominal, &trials);
    Ok(McReport {
        seed,
        specs: specs.to_vec(),
        nominal,
        trials,
        failures,
        summary,
        worst_case_deviation,
    })
}

/// Orders parameters by the spread (stddev) they induce in each metric,
/// largest first; ties keep the input order.
pub fn sensitivity_rank(reports: &[(Parameter, &McReport)]) -> BTreeMap<String, Vec<Parameter>> {
    METRICS
        .iter()
        .map(|&metric| {
            let mut spread: Vec<(Parameter, f64)> = reports
                .iter()
                .map(|(p, r)| (*p, r.summary.get(metric).map_or(0.0, |s| s.stddev)))
                .collect();
            spread.sort_by(|a, b| b.1.total_cmp(&a.1));
            (
                metric.to_string(),
                spread.into_iter().map(|(p, _)| p).collect(),
            )
        })
        .collect()
}
