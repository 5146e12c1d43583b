use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tdram_core::{parse_value, Method, MetricVariant, Parameter, Trit};

#[derive(Debug, Parser)]
#[command(
    name = "tdram",
    version,
    about = "Ternary CNTFET 3T DRAM cell simulator",
    allow_negative_numbers = true
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a transient simulation and write the waveforms as CSV.
    Simulate(SimulateArgs),
    /// Simulate the cell and report write/read timing, current and power.
    Measure(MeasureArgs),
    /// Monte-Carlo process-variation study of the cell.
    Mc(McArgs),
    /// Parse netlist files and report positioned diagnostics.
    NetlistCheck(CheckArgs),
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct DeckSource {
    /// Build the 3T cell for the given trit sequence.
    #[arg(long, requires = "sequence")]
    pub cell: bool,
    /// Read the circuit from a netlist file.
    #[arg(long, value_name = "FILE")]
    pub netlist: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    /// Time step, e.g. 0.1p.
    #[arg(long, value_parser = eng)]
    pub dt: Option<f64>,
    /// Integration method.
    #[arg(long, value_enum, default_value_t = MethodArg::Tr)]
    pub method: MethodArg,
    /// Junction temperature in degrees Celsius.
    #[arg(long, value_parser = eng, default_value = "25")]
    pub temp: f64,
    /// Supply voltage of the built cell.
    #[arg(long, value_parser = eng, default_value = "1.2")]
    pub vdd: f64,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub source: DeckSource,
    /// Trits written one per cycle, e.g. 0,1,2 or 012.
    #[arg(long, value_parser = trit_sequence)]
    pub sequence: Option<TritSeq>,
    /// Attach the ternary sense inverter to BL2 (cell decks only).
    #[arg(long)]
    pub with_sense: bool,
    /// End time; defaults to the end of the last cycle or stimulus corner.
    #[arg(long, value_parser = eng)]
    pub tstop: Option<f64>,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Output CSV path; standard output when omitted.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MeasureArgs {
    /// Accepted for symmetry with `simulate`; measurements always use the
    /// built cell.
    #[arg(long)]
    pub cell: bool,
    #[arg(long, value_parser = trit_sequence, default_value = "0,1,2")]
    pub sequence: TritSeq,
    /// Also simulate the sense inverter and report its timing and current.
    #[arg(long)]
    pub with_sense: bool,
    /// Reading of the 20% read-sensing rule.
    #[arg(long, value_enum, default_value_t = VariantArg::Excursion)]
    pub metric_variant: VariantArg,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Print the report as JSON instead of a table.
    #[arg(long)]
    pub json: bool,
    /// Also write the JSON report to this path.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct McArgs {
    /// Number of varied trials.
    #[arg(long, value_parser = count, default_value = "100")]
    pub trials: usize,
    /// Random seed; a fresh one is drawn and printed when absent.
    #[arg(long, env = "TDRAM_SEED")]
    pub seed: Option<u64>,
    /// Parameters to vary (repeatable or comma separated); all by default.
    #[arg(long, value_enum, value_delimiter = ',')]
    pub vary: Vec<ParamArg>,
    /// Override a 3-sigma half-width, e.g. vdd=0.06 or temp=10.
    #[arg(long = "three-sigma", value_parser = sigma_override, value_name = "PARAM=VALUE")]
    pub three_sigma: Vec<(Parameter, f64)>,
    /// Run one single-parameter sweep per varied parameter and rank them.
    #[arg(long)]
    pub sensitivity: bool,
    /// Nominal temperature in degrees Celsius.
    #[arg(long, value_parser = eng, default_value = "25")]
    pub temp: f64,
    /// Time step of each trial.
    #[arg(long, value_parser = eng, default_value = "1p")]
    pub dt: f64,
    #[arg(long, value_enum, default_value_t = VariantArg::Excursion)]
    pub metric_variant: VariantArg,
    /// Run trials on one thread.
    #[arg(long)]
    pub sequential: bool,
    /// Directory receiving mc_report.json and the trials CSV files.
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[arg(required = true)]
    pub files: Vec<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MethodArg {
    Tr,
    Be,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Tr => Method::Trapezoidal,
            MethodArg::Be => Method::BackwardEuler,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum VariantArg {
    Excursion,
    FinalValue,
}

impl From<VariantArg> for MetricVariant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Excursion => MetricVariant::Excursion,
            VariantArg::FinalValue => MetricVariant::FinalValue,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ParamArg {
    Temp,
    Vdd,
    L,
    Tox,
}

impl From<ParamArg> for Parameter {
    fn from(p: ParamArg) -> Self {
        match p {
            ParamArg::Temp => Parameter::Temperature,
            ParamArg::Vdd => Parameter::SupplyVoltage,
            ParamArg::L => Parameter::ChannelLength,
            ParamArg::Tox => Parameter::OxideThickness,
        }
    }
}

fn eng(s: &str) -> Result<f64, String> {
    parse_value(s).map_err(|e| e.to_string())
}

fn count(s: &str) -> Result<usize, String> {
    let v = eng(s)?;
    if v < 0.0 || v.fract() != 0.0 || v > u32::MAX as f64 {
        return Err(format!("'{s}' is not a whole number"));
    }
    Ok(v as usize)
}

/// Trits written one per cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct TritSeq(pub Vec<Trit>);

fn trit_sequence(s: &str) -> Result<TritSeq, String> {
    let digits: Vec<String> = if s.contains(',') {
        s.split(',').map(|d| d.trim().to_string()).collect()
    } else {
        s.trim().chars().map(String::from).collect()
    };
    if digits.is_empty() || digits.iter().all(|d| d.is_empty()) {
        return Err("trit sequence is empty".into());
    }
    digits
        .iter()
        .map(|d| {
            let v: u8 = d
                .parse()
                .map_err(|_| format!("invalid trit '{d}': expected 0, 1 or 2"))?;
            Trit::new(v).map_err(|e| e.to_string())
        })
        .collect::<Result<_, _>>()
        .map(TritSeq)
}

fn sigma_override(s: &str) -> Result<(Parameter, f64), String> {
    let (name, value) = s
        .split_once('=')
        .ok_or_else(|| format!("expected PARAM=VALUE, got '{s}'"))?;
    let p = ParamArg::from_str(name.trim(), true)?;
    let v = eng(value.trim())?;
    if !(v >= 0.0 && v.is_finite()) {
        return Err(format!("3-sigma for {name} must be non-negative"));
    }
    Ok((p.into(), v))
}
