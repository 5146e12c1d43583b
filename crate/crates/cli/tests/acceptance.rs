//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Details and measured values are printed indented below
//! each status line.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use tdram_core::measure::{sample_at, sense_read, sense_supply_current, wl_fall};
use tdram_core::montecarlo::METRICS;
use tdram_core::netlist::names;
use tdram_core::*;

#[derive(Default)]
struct Check {
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Check {
    fn ensure(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.failures.push(what.into());
        }
    }

    fn note(&mut self, what: impl Into<String>) {
        self.notes.push(what.into());
    }

    fn within(&mut self, elapsed: Duration, limit: Duration) {
        self.note(format!("runtime {:.2} s", elapsed.as_secs_f64()));
        self.ensure(
            elapsed <= limit,
            format!(
                "runtime {:.2} s exceeds {:.0} s",
                elapsed.as_secs_f64(),
                limit.as_secs_f64()
            ),
        );
    }
}

fn criterion(n: u32, title: &str, f: impl FnOnce(&mut Check)) -> bool {
    let mut c = Check::default();
    f(&mut c);
    let ok = c.failures.is_empty();
    println!(
        "{} criterion {n}: {title}",
        if ok { "PASS" } else { "FAIL" }
    );
    for line in c.notes.iter().chain(&c.failures) {
        println!("    {line}");
    }
    ok
}

fn zigzag(n: u32) -> Chirality {
    Chirality::zigzag(n).unwrap()
}

fn device_math(c: &mut Check) {
    let v19 = threshold_voltage(zigzag(19)).unwrap();
    let v10 = threshold_voltage(zigzag(10)).unwrap();
    let d19 = tube_diameter(zigzag(19));
    c.note(format!(
        "Vth(19,0) = {v19:.6} V, Vth(10,0) = {v10:.6} V, D(19,0) = {d19:.6} nm"
    ));
    c.ensure((v19 - 0.28954).abs() <= 1e-4, "Vth(19,0)");
    c.ensure((v10 - 0.55012).abs() <= 1e-4, "Vth(10,0)");
    c.ensure((d19 - 1.5059).abs() <= 1e-3, "D(19,0)");

    let mut rng = StdRng::seed_from_u64(2024);
    let mut pick = || loop {
        let n = rng.random_range(1u32..200);
        if n % 3 != 0 {
            return n;
        }
    };
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let (n1, n2) = (pick(), pick());
        let ratio = threshold_voltage(zigzag(n1)).unwrap() / threshold_voltage(zigzag(n2)).unwrap();
        let expected = f64::from(n2) / f64::from(n1);
        worst = worst.max((ratio / expected - 1.0).abs());
    }
    c.note(format!(
        "ratio law worst relative error {worst:e} over 20 pairs"
    ));
    c.ensure(worst <= 1e-12, "ratio law");
}

fn solver_oracle(c: &mut Check) {
    let start = Instant::now();
    let deck = "* rc\nVS in 0 pwl(0 1.2 0 0)\nVC g 0 dc 1\nS1 in n1 ctrl=VC ron=1meg roff=1t vt=0.5\nC1 n1 0 0.7f\n";
    let circuit = parse_netlist(deck).unwrap();
    let tau = 1e6 * 0.7e-15;
    let cfg = SolverConfig::default()
        .with_dt(tau / 1000.0)
        .with_stop(3.0 * tau);
    let wf = transient(&circuit, &cfg).unwrap();
    let v = wf.voltage("n1").unwrap();
    let worst = wf
        .time
        .iter()
        .zip(v)
        .map(|(t, v)| {
            let exact = 1.2 * (-t / tau).exp();
            (v - exact).abs() / exact
        })
        .fold(0.0, f64::max);
    c.note(format!(
        "{} samples, worst relative error {:.3}%",
        wf.len(),
        100.0 * worst
    ));
    c.ensure(worst <= 0.005, "RC discharge outside 0.5%");
    c.within(start.elapsed(), Duration::from_secs(1));
}

fn run_cell(seq: &[u8], dt: f64) -> (WaveformSet, Schedule) {
    let (c, s) = build_dram_cell(&CellParams::default(), &trits(seq).unwrap()).unwrap();
    let cfg = SolverConfig::default().with_dt(dt).with_stop(s.t_stop());
    (transient(&c, &cfg).unwrap(), s)
}

fn cell_semantics(c: &mut Check) {
    let (wf, s) = run_cell(&[0, 1, 2], SolverConfig::default().dt);
    let x = wf.voltage(names::X).unwrap();
    let stored: Vec<f64> = (0..3)
        .map(|k| sample_at(&wf.time, x, wl_fall(&wf, &s, k).unwrap()))
        .collect();
    c.note(format!(
        "stored X: {:.4} V, {:.4} V, {:.4} V",
        stored[0], stored[1], stored[2]
    ));
    c.ensure(stored[0].abs() <= 0.010, "stored 0");
    c.ensure((stored[1] - 0.6).abs() <= 0.020, "stored 1");
    c.ensure((stored[2] - (1.2 - 0.24)).abs() <= 0.050, "stored 2");

    let w = s.cycle(0).unwrap();
    let bl2 = wf.voltage(names::BL2).unwrap();
    let lo = wf.time.partition_point(|&t| t < w.read_start);
    let hi = wf.time.partition_point(|&t| t <= w.end);
    let droop = bl2[lo..hi]
        .iter()
        .map(|v| (v - 1.2).abs())
        .fold(0.0, f64::max);
    c.note(format!("read-0 BL2 worst deviation {:.2} mV", droop * 1e3));
    c.ensure(droop <= 0.02 * 1.2, "read-0 BL2 left the 2% band");

    let r = |k, t| read_sense_time(&wf, &s, k, t, MetricVariant::Excursion);
    match (r(1, Trit::ONE), r(2, Trit::TWO)) {
        (Ok(r1), Ok(r2)) => {
            c.note(format!(
                "read_sense_time(1) = {r1:e} s, read_sense_time(2) = {r2:e} s"
            ));
            c.ensure(r1.is_finite() && r2.is_finite() && r2 < r1, "read ordering");
        }
        (a, b) => c.ensure(false, format!("read times: {a:?} {b:?}")),
    }
}

fn calibration_envelope(c: &mut Check) {
    let (wf, s) = run_cell(&[0, 1, 2], SolverConfig::default().dt);
    for k in [1, 2] {
        match write_delay(&wf, &s, k) {
            Ok(d) => {
                c.note(format!("write_delay(cycle {k}, trit {k}) = {d:e} s"));
                c.ensure(
                    (1e-12..=1e-9).contains(&d),
                    format!("write_delay cycle {k}"),
                );
            }
            Err(e) => c.ensure(false, format!("write_delay cycle {k}: {e}")),
        }
    }
    match read_sense_time(&wf, &s, 1, Trit::ONE, MetricVariant::Excursion) {
        Ok(r1) => {
            c.note(format!("read_sense_time(1) = {r1:e} s"));
            c.ensure((0.05e-9..=10e-9).contains(&r1), "read_sense_time(1)");
        }
        Err(e) => c.ensure(false, format!("read_sense_time(1): {e}")),
    }
    let i = measure::average_cell_current(&wf, 0.0, s.t_stop()).unwrap();
    c.note(format!("average cell current {i:e} A"));
    c.ensure((1e-9..=1e-6).contains(&i), "average current");
}

fn sense_circuit(c: &mut Check) {
    let start = Instant::now();
    let p = CellParams::default();
    let fets = |with_enable| {
        build_sense_circuit(
            &p,
            SenseOptions {
                with_enable,
                enabled: true,
            },
        )
        .iter()
        .filter(|e| e.is_transistor())
        .count()
    };
    let (bare, gated) = (fets(false), fets(true));
    c.note(format!("transistor counts {bare} / {gated}"));
    c.ensure(bare == 6 && gated == 8, "transistor counts");

    let mut wrong = 0;
    let mut t1_min = f64::INFINITY;
    let mut t2_max: f64 = 0.0;
    for code in 0..27u8 {
        let seq = [code / 9, code / 3 % 3, code % 3];
        let (circuit, s) =
            build_cell_with_sense(&p, &trits(&seq).unwrap(), SenseOptions::default()).unwrap();
        let cfg = SolverConfig::default().with_dt(1e-12).with_stop(s.t_stop());
        let wf = transient(&circuit, &cfg).unwrap();
        for (k, &v) in seq.iter().enumerate() {
            match sense_read(&wf, &s, k) {
                Ok(t) if t.value() == v => {}
                other => {
                    wrong += 1;
                    c.ensure(false, format!("sequence {seq:?} cycle {k}: read {other:?}"));
                }
            }
            let trit = Trit::new(v).unwrap();
            match sense_time(&wf, &s, k, trit) {
                Ok(t) if v == 0 => c.ensure(t == 0.0, "sense_time(0) must be 0"),
                Ok(t) if v == 1 => t1_min = t1_min.min(t),
                Ok(t) => t2_max = t2_max.max(t),
                Err(e) => c.ensure(false, format!("sequence {seq:?} cycle {k}: {e}")),
            }
        }
    }
    c.note(format!("27 sequences, {wrong} misread cycles of 81"));
    c.note(format!(
        "slowest sense_time(2) {t2_max:e} s, fastest sense_time(1) {t1_min:e} s"
    ));
    c.ensure(t2_max < t1_min, "sense_time(2) < sense_time(1)");

    let off = SenseOptions {
        with_enable: true,
        enabled: false,
    };
    let (circuit, s) = build_cell_with_sense(&p, &trits(&[2, 1, 0]).unwrap(), off).unwrap();
    let wf = transient(
        &circuit,
        &SolverConfig::default().with_dt(1e-12).with_stop(s.t_stop()),
    )
    .unwrap();
    let i = sense_supply_current(&wf, 0.0, s.t_stop()).unwrap();
    c.note(format!("En = 0 sense supply current {i:e} A"));
    c.ensure(
        i < 10.0 * CntfetDevice::DEFAULT_I_OFF,
        "disabled sense current",
    );
    c.within(start.elapsed(), Duration::from_secs(60));
}

fn monte_carlo(c: &mut Check) {
    let start = Instant::now();
    let specs: Vec<VariationSpec> = Parameter::ALL
        .iter()
        .map(|&p| VariationSpec::default_for(p))
        .collect();
    let cfg = McConfig::default();
    let seed = 42;
    let t0 = Instant::now();
    let a = run_mc(&cfg, &specs, 100, seed).unwrap();
    let one_run = t0.elapsed();
    let b = run_mc(&cfg, &specs, 100, seed).unwrap();
    let seq = run_mc(
        &McConfig {
            parallel: false,
            ..cfg.clone()
        },
        &specs,
        100,
        seed,
    )
    .unwrap();
    c.note(format!(
        "100 trials in {:.1} s, {} failures",
        one_run.as_secs_f64(),
        a.failures
    ));
    c.ensure(a.trials.len() == 100, "trial count");
    c.ensure(a == b, "repeat run differs");
    c.ensure(a == seq, "sequential run differs from parallel run");
    c.ensure(
        one_run <= Duration::from_secs(300),
        "100 trials took over 5 min",
    );

    let outside = a
        .trials
        .iter()
        .flat_map(|t| specs.iter().map(move |s| (s, t.params.get(s.parameter))))
        .filter(|(s, v)| *v < s.bounds().0 || *v > s.bounds().1)
        .count();
    c.ensure(outside == 0, format!("{outside} samples outside 3 sigma"));

    let flat: Vec<_> = specs
        .iter()
        .map(|s| VariationSpec::new(s.parameter, s.nominal, 0.0))
        .collect();
    let z = run_mc(&cfg, &flat, 3, seed).unwrap();
    let collapsed = z.trials.iter().all(|t| t.metrics() == Some(&z.nominal));
    c.ensure(collapsed, "zero spread does not reproduce nominal");

    let mut means = Vec::new();
    for temp in [0.0, 25.0, 70.0] {
        let spec = VariationSpec::new(Parameter::Temperature, temp, 15.0);
        let r = run_mc(
            &McConfig {
                temperature_c: temp,
                ..cfg.clone()
            },
            &[spec],
            100,
            seed,
        )
        .unwrap();
        let mean = r.summary["avg_current_a"].mean;
        c.note(format!(
            "temperature {temp:>4} C: mean current {mean:e} A, {} failed trials",
            r.failures
        ));
        means.push(mean);
    }
    c.ensure(
        means[0] < means[1] && means[1] < means[2],
        "current not increasing with temperature",
    );

    let sweeps: Vec<(Parameter, McReport)> = specs
        .iter()
        .map(|s| {
            (
                s.parameter,
                run_mc(&cfg, std::slice::from_ref(s), 100, seed).unwrap(),
            )
        })
        .collect();
    let refs: Vec<_> = sweeps.iter().map(|(p, r)| (*p, r)).collect();
    let ranking = sensitivity_rank(&refs);
    for m in METRICS {
        let order: Vec<String> = ranking[m].iter().map(Parameter::to_string).collect();
        c.note(format!("sensitivity {m:<20} {}", order.join(" > ")));
    }
    let vdd_first = ranking
        .values()
        .filter(|o| o[0] == Parameter::SupplyVoltage)
        .count();
    c.note(format!(
        "supply voltage ranked first on {vdd_first} of {} metrics",
        METRICS.len()
    ));
    c.within(start.elapsed(), Duration::from_secs(600));
}

fn corpus(kind: &str) -> Vec<PathBuf> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/corpus")
        .join(kind);
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "sp"))
        .collect();
    v.sort();
    v
}

fn parser(c: &mut Check) {
    let start = Instant::now();
    let valid = corpus("valid");
    let mut round_trips = 0;
    for p in &valid {
        let text = fs::read_to_string(p).unwrap();
        let ok = parse_netlist(&text)
            .ok()
            .and_then(|first| {
                parse_netlist(&first.to_netlist())
                    .ok()
                    .map(|second| first == second)
            })
            .unwrap_or(false);
        c.ensure(ok, format!("{} does not round-trip", p.display()));
        round_trips += usize::from(ok);
    }
    c.note(format!(
        "{round_trips} of {} valid decks round-trip",
        valid.len()
    ));
    c.ensure(valid.len() >= 15, "fewer than 15 valid decks");

    let invalid = corpus("invalid");
    let mut positioned = 0;
    for p in &invalid {
        let text = fs::read_to_string(p).unwrap();
        let expect = text
            .lines()
            .next()
            .unwrap_or("")
            .trim_start_matches("* expect ")
            .trim();
        let diag = parse_netlist(&text)
            .err()
            .map(|e| format!("{}:{}", e.line, e.column));
        let exit = Command::new(env!("CARGO_BIN_EXE_tdram"))
            .args(["netlist-check", p.to_str().unwrap()])
            .output()
            .unwrap()
            .status
            .code();
        let ok = diag.as_deref() == Some(expect) && exit.is_some_and(|code| code != 0);
        c.ensure(
            ok,
            format!("{}: diagnostic {diag:?}, exit {exit:?}", p.display()),
        );
        positioned += usize::from(ok);
    }
    c.note(format!(
        "{positioned} of {} malformed decks give the expected position and a nonzero exit",
        invalid.len()
    ));
    c.ensure(invalid.len() >= 10, "fewer than 10 malformed decks");
    c.note(format!("runtime {:.2} s", start.elapsed().as_secs_f64()));
}

fn main() -> ExitCode {
    let results = [
        criterion(1, "device math", device_math),
        criterion(2, "solver RC oracle", solver_oracle),
        criterion(3, "cell semantics", cell_semantics),
        criterion(4, "calibration envelope", calibration_envelope),
        criterion(5, "sense circuit", sense_circuit),
        criterion(6, "Monte Carlo", monte_carlo),
        criterion(7, "netlist parser", parser),
    ];
    let failed = results.iter().filter(|ok| !**ok).count();
    println!(
        "acceptance: {} passed, {failed} failed",
        results.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
