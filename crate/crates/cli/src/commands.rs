use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{anyhow, Context};
use serde_json::json;
use tdram_core::io::{write_trials, write_waveforms};
use tdram_core::montecarlo::METRICS;
use tdram_core::*;

use crate::args::{CheckArgs, DeckSource, McArgs, MeasureArgs, SimulateArgs, SolverArgs, TritSeq};
use crate::Failure;

fn from_solve(e: SolveError) -> Failure {
    match e {
        SolveError::NonConvergence { .. } => Failure::solve(e),
        SolveError::InvalidCircuit(_) | SolveError::Config(_) => Failure::usage(e),
    }
}

fn cell_params(s: &SolverArgs) -> CellParams {
    CellParams {
        vdd: s.vdd,
        ..CellParams::default()
    }
}

fn solver_config(s: &SolverArgs, t_stop: f64) -> Result<SolverConfig, Failure> {
    let defaults = SolverConfig::default();
    let cfg = SolverConfig {
        dt: s.dt.unwrap_or(defaults.dt),
        t_stop,
        method: s.method.into(),
        temperature_c: s.temp,
        ..defaults
    };
    cfg.check().map_err(Failure::usage)?;
    Ok(cfg)
}

fn build_cell(
    p: &CellParams,
    seq: &TritSeq,
    with_sense: bool,
) -> Result<(Circuit, Schedule), Failure> {
    let built = if with_sense {
        build_cell_with_sense(p, &seq.0, SenseOptions::default())
    } else {
        build_dram_cell(p, &seq.0)
    };
    built.map_err(Failure::usage)
}

fn read_deck(path: &Path) -> Result<Circuit, Failure> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(Failure::io)?;
    parse_netlist(&text).map_err(|e| {
        Failure::usage(anyhow!(
            "{}:{}:{}: {}",
            path.display(),
            e.line,
            e.column,
            e.kind
        ))
    })
}

/// Last PWL corner of any source, if there is one after t = 0.
fn last_corner(c: &Circuit) -> Option<f64> {
    c.elements
        .iter()
        .filter_map(|e| match &e.kind {
            ElementKind::VoltageSource {
                stimulus: Stimulus::Pwl(points),
                ..
            } => points.last().map(|p| p.0),
            _ => None,
        })
        .fold(None, |acc: Option<f64>, t| {
            Some(acc.map_or(t, |a| a.max(t)))
        })
        .filter(|&t| t > 0.0)
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .with_context(|| format!("cannot create {}", path.display()))
        .map_err(Failure::io)
}

pub fn simulate(a: SimulateArgs) -> Result<(), Failure> {
    let (circuit, default_stop) = match (&a.source, &a.sequence) {
        (DeckSource { cell: true, .. }, Some(seq)) => {
            let (c, s) = build_cell(&cell_params(&a.solver), seq, a.with_sense)?;
            (c, Some(s.t_stop()))
        }
        (
            DeckSource {
                netlist: Some(path),
                ..
            },
            None,
        ) => {
            if a.with_sense {
                return Err(Failure::usage(anyhow!(
                    "--with-sense applies to built cells only"
                )));
            }
            let c = read_deck(path)?;
            let stop = last_corner(&c);
            (c, stop)
        }
        (
            DeckSource {
                netlist: Some(_), ..
            },
            Some(_),
        ) => {
            return Err(Failure::usage(anyhow!(
                "--sequence applies to built cells only"
            )))
        }
        _ => return Err(Failure::usage(anyhow!("--cell requires --sequence"))),
    };
    let t_stop = a.tstop.or(default_stop).ok_or_else(|| {
        Failure::usage(anyhow!(
            "--tstop is required: the deck has no time-varying source"
        ))
    })?;
    let cfg = solver_config(&a.solver, t_stop)?;
    let wf = transient(&circuit, &cfg).map_err(from_solve)?;
    match &a.out {
        Some(path) => write_waveforms(&wf, create(path)?),
        None => write_waveforms(&wf, io::stdout().lock()),
    }
    .map_err(Failure::io)?;
    if let Some(path) = &a.out {
        eprintln!("wrote {} samples to {}", wf.len(), path.display());
    }
    Ok(())
}

/// Four significant digits for tables; files keep full precision.
fn short(v: f64) -> String {
    format!("{v:.3e}")
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), short)
}

fn print_report(r: &MeasurementReport) {
    let sense = r.sense.is_some();
    print!(
        "{:>5} {:>4} {:>12} {:>12} {:>12} {:>12} {:>12}",
        "cycle", "trit", "write_s", "read_s", "current_a", "power_w", "stored_x_v"
    );
    if sense {
        print!(" {:>6} {:>12}", "sensed", "sense_s");
    }
    println!();
    for c in &r.cycles {
        print!(
            "{:>5} {:>4} {:>12} {:>12} {:>12} {:>12} {:>12}",
            c.cycle,
            c.trit,
            cell(c.write_time_s),
            cell(c.read_sense_time_s),
            cell(c.avg_current_a),
            cell(c.avg_power_w),
            cell(c.stored_x_v)
        );
        if sense {
            let read = c.sense_read.map_or("-".to_string(), |t| t.to_string());
            print!(" {:>6} {:>12}", read, cell(c.sense_time_s));
        }
        println!();
    }
    println!();
    for (trit, t) in &r.read_sense_time_s {
        println!("read_sense_time_{trit}_s  {}", cell(*t));
    }
    println!("avg_current_a        {}", short(r.avg_current_a));
    println!("avg_power_w          {}", short(r.avg_power_w));
    println!("vdd_x_current_w      {}", short(r.avg_power_vdd_current_w));
    if let Some(s) = &r.sense {
        println!("sense_time_0_s       {}", cell(s.sense_time_0_s));
        println!("sense_time_1_s       {}", cell(s.sense_time_1_s));
        println!("sense_time_2_s       {}", cell(s.sense_time_2_s));
        println!("sense_current_a      {}", short(s.avg_current_a));
        println!("sense_power_w        {}", short(s.avg_power_w));
    }
    for e in &r.errors {
        println!("note: {e}");
    }
}

pub fn measure(a: MeasureArgs) -> Result<(), Failure> {
    let (circuit, schedule) = build_cell(&cell_params(&a.solver), &a.sequence, a.with_sense)?;
    let cfg = solver_config(&a.solver, schedule.t_stop())?;
    let wf = transient(&circuit, &cfg).map_err(from_solve)?;
    let report = measure_run(&wf, &schedule, a.metric_variant.into(), a.with_sense)
        .map_err(Failure::solve)?;
    let text = serde_json::to_string_pretty(&report).map_err(Failure::io)?;
    if let Some(path) = &a.out {
        let mut f = create(path)?;
        writeln!(f, "{text}").map_err(Failure::io)?;
    }
    if a.json {
        println!("{text}");
    } else {
        print_report(&report);
    }
    Ok(())
}

fn fresh_seed() -> u64 {
    let nanos = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_nanos() as u64);
    nanos ^ (u64::from(std::process::id()) << 32)
}

fn print_summary(r: &McReport) {
    println!(
        "{:<22} {:>12} {:>12} {:>12} {:>12} {:>12}",
        "metric", "mean", "stddev", "min", "max", "worst_dev"
    );
    for m in METRICS {
        if let Some(s) = r.summary.get(m) {
            println!(
                "{:<22} {:>12} {:>12} {:>12} {:>12} {:>12}",
                m,
                short(s.mean),
                short(s.stddev),
                short(s.min),
                short(s.max),
                short(r.worst_case_deviation[m])
            );
        }
    }
    println!("trials {}, failures {}", r.trials.len(), r.failures);
    for t in &r.trials {
        if let montecarlo::TrialOutcome::Failed(why) = &t.outcome {
            println!("  trial {} failed: {why}", t.index);
        }
    }
}

fn write_csv(report: &McReport, path: &Path) -> Result<(), Failure> {
    write_trials(report, create(path)?).map_err(Failure::io)
}

pub fn mc(a: McArgs) -> Result<(), Failure> {
    if a.trials == 0 {
        return Err(Failure::usage(anyhow!("--trials must be at least 1")));
    }
    let seed = a.seed.unwrap_or_else(|| {
        let s = fresh_seed();
        eprintln!("seed {s}");
        s
    });
    let params: Vec<Parameter> = if a.vary.is_empty() {
        Parameter::ALL.to_vec()
    } else {
        let mut v: Vec<Parameter> = a.vary.iter().map(|&p| p.into()).collect();
        v.dedup();
        v
    };
    let specs: Vec<VariationSpec> = params
        .iter()
        .map(|&p| {
            let mut s = VariationSpec::default_for(p);
            if p == Parameter::Temperature {
                s.nominal = a.temp;
            }
            if let Some((_, v)) = a.three_sigma.iter().rev().find(|(q, _)| *q == p) {
                s.three_sigma = *v;
            }
            s
        })
        .collect();
    let defaults = McConfig::default();
    let cfg = McConfig {
        temperature_c: a.temp,
        solver: SolverConfig {
            dt: a.dt,
            ..defaults.solver.clone()
        },
        variant: a.metric_variant.into(),
        parallel: !a.sequential,
        ..defaults
    };
    SolverConfig {
        t_stop: 1.0,
        ..cfg.solver.clone()
    }
    .check()
    .map_err(Failure::usage)?;
    fs::create_dir_all(&a.out_dir)
        .with_context(|| format!("cannot create {}", a.out_dir.display()))
        .map_err(Failure::io)?;

    let json = if a.sensitivity {
        let mut sweeps = Vec::new();
        for spec in &specs {
            let r =
                run_mc(&cfg, std::slice::from_ref(spec), a.trials, seed).map_err(Failure::solve)?;
            write_csv(
                &r,
                &a.out_dir.join(format!("mc_{}_trials.csv", spec.parameter)),
            )?;
            println!("== {} ==", spec.parameter);
            print_summary(&r);
            println!();
            sweeps.push((spec.parameter, r));
        }
        let refs: Vec<_> = sweeps.iter().map(|(p, r)| (*p, r)).collect();
        let ranking = sensitivity_rank(&refs);
        println!("sensitivity ranking (largest spread first)");
        for (metric, order) in &ranking {
            let names: Vec<String> = order.iter().map(Parameter::to_string).collect();
            println!("  {metric:<22} {}", names.join(" > "));
        }
        let by_param: serde_json::Map<String, serde_json::Value> = sweeps
            .iter()
            .map(|(p, r)| Ok((p.to_string(), serde_json::to_value(r)?)))
            .collect::<Result<_, serde_json::Error>>()
            .map_err(Failure::io)?;
        json!({ "seed": seed, "trials": a.trials, "sweeps": by_param, "ranking": ranking })
    } else {
        let r = run_mc(&cfg, &specs, a.trials, seed).map_err(Failure::solve)?;
        write_csv(&r, &a.out_dir.join("mc_trials.csv"))?;
        print_summary(&r);
        serde_json::to_value(&r).map_err(Failure::io)?
    };
    let mut f = create(&a.out_dir.join("mc_report.json"))?;
    serde_json::to_writer_pretty(&mut f, &json).map_err(Failure::io)?;
    writeln!(f).map_err(Failure::io)?;
    Ok(())
}

pub fn netlist_check(a: CheckArgs) -> Result<(), Failure> {
    let mut code = 0;
    let mut failed = 0;
    for path in &a.files {
        match read_deck(path) {
            Ok(c) => {
                let diags = c.validate();
                if diags.is_empty() {
                    println!(
                        "{}: ok ({} elements, {} transistors)",
                        path.display(),
                        c.elements.len(),
                        c.transistor_count()
                    );
                } else {
                    code = code.max(1);
                    failed += 1;
                    for d in diags {
                        eprintln!("{}: {d}", path.display());
                    }
                }
            }
            Err(f) => {
                eprintln!("{:#}", f.error);
                code = code.max(f.code);
                failed += 1;
            }
        }
    }
    match code {
        0 => Ok(()),
        c => Err(Failure {
            code: c,
            error: anyhow!("{failed} of {} decks failed", a.files.len()),
        }),
    }
}
