//! Modified nodal analysis with Newton iteration.
//!
//! Unknowns are the non-ground node voltages followed by one branch current
//! per voltage source. Capacitors enter through their backward-Euler or
//! trapezoidal companion models; CNTFETs are linearised with central
//! differences of the compact model.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::device::ModelParams;
use crate::error::SolveError;
use crate::netlist::{Circuit, ElementKind, Stimulus};

/// Gate/drain perturbation for the numerical device Jacobian.
const DERIVATIVE_STEP: f64 = 1e-3;
/// Largest node-voltage change applied by one Newton update.
const MAX_NEWTON_STEP: f64 = 0.5;
const MAX_HALVINGS: u32 = 8;
const SOURCE_STEPS: u32 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    BackwardEuler,
    Trapezoidal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub dt: f64,
    pub t_stop: f64,
    pub method: Method,
    pub v_tol: f64,
    pub i_tol: f64,
    pub max_newton: usize,
    pub g_min: f64,
    pub temperature_c: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            dt: 0.1e-12,
            t_stop: 1e-9,
            method: Method::Trapezoidal,
            v_tol: 1e-6,
            i_tol: 1e-12,
            max_newton: 50,
            g_min: 1e-12,
            temperature_c: 25.0,
        }
    }
}

impl SolverConfig {
    pub fn with_stop(mut self, t_stop: f64) -> Self {
        self.t_stop = t_stop;
        self
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    pub fn check(&self) -> Result<(), SolveError> {
        let bad = |m: &str| Err(SolveError::Config(m.to_string()));
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return bad("dt must be positive");
        }
        if !(self.t_stop.is_finite() && self.t_stop > self.dt) {
            return bad("t_stop must exceed dt");
        }
        if !(self.v_tol > 0.0 && self.i_tol > 0.0 && self.g_min > 0.0) {
            return bad("tolerances and g_min must be positive");
        }
        if self.max_newton == 0 {
            return bad("max_newton must be at least 1");
        }
        if !self.temperature_c.is_finite() || self.temperature_c <= -273.15 {
            return bad("temperature must be above absolute zero");
        }
        Ok(())
    }
}

/// Terminal pair of a voltage source, kept with the waveforms so delivered
/// power can be computed from them alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceProbe {
    pub name: String,
    pub pos: String,
    pub neg: String,
}

/// Sampled node voltages and element currents.
///
/// Element currents are positive into the first terminal (drain for CNTFETs,
/// `n+` otherwise).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveformSet {
    pub time: Vec<f64>,
    pub node_names: Vec<String>,
    pub voltages: Vec<Vec<f64>>,
    pub element_names: Vec<String>,
    pub currents: Vec<Vec<f64>>,
    pub sources: Vec<SourceProbe>,
}

impl WaveformSet {
    pub fn len(&self) -> usize {
        self.time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time.is_empty()
    }

    pub fn voltage(&self, node: &str) -> Option<&[f64]> {
        self.node_names
            .iter()
            .position(|n| n == node)
            .map(|i| self.voltages[i].as_slice())
    }

    pub fn current(&self, element: &str) -> Option<&[f64]> {
        self.element_names
            .iter()
            .position(|n| n.eq_ignore_ascii_case(element))
            .map(|i| self.currents[i].as_slice())
    }

    /// Voltage of `node` (ground allowed) at every sample.
    pub fn node_or_ground(&self, node: &str) -> Option<Vec<f64>> {
        if node == crate::netlist::GROUND {
            Some(vec![0.0; self.len()])
        } else {
            self.voltage(node).map(<[f64]>::to_vec)
        }
    }
}

/// Node voltages from a DC solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub node_names: Vec<String>,
    pub voltages: Vec<f64>,
}

impl OperatingPoint {
    pub fn voltage(&self, node: &str) -> Option<f64> {
        if node == crate::netlist::GROUND {
            return Some(0.0);
        }
        self.node_names
            .iter()
            .position(|n| n == node)
            .map(|i| self.voltages[i])
    }
}

type Node = Option<usize>;

struct Fet {
    model: ModelParams,
    drain: Node,
    gate: Node,
    source: Node,
    element: usize,
}

struct Cap {
    farads: f64,
    pos: Node,
    neg: Node,
    element: usize,
}

struct Source {
    stimulus: Stimulus,
    pos: Node,
    neg: Node,
    element: usize,
}

struct Switch {
    ctrl: Stimulus,
    threshold: f64,
    g_on: f64,
    g_off: f64,
    pos: Node,
    neg: Node,
    element: usize,
}

impl Switch {
    fn conductance(&self, t: f64) -> f64 {
        if self.ctrl.value_at(t) >= self.threshold {
            self.g_on
        } else {
            self.g_off
        }
    }
}

/// Companion-model coefficients of one capacitor: `i = geq * v - ieq`.
#[derive(Clone, Copy)]
struct Companion {
    geq: f64,
    ieq: f64,
}

/// Circuit lowered to index form.
struct System {
    node_names: Vec<String>,
    element_names: Vec<String>,
    probes: Vec<SourceProbe>,
    n_nodes: usize,
    fets: Vec<Fet>,
    caps: Vec<Cap>,
    sources: Vec<Source>,
    switches: Vec<Switch>,
}

fn v(x: &DVector<f64>, n: Node) -> f64 {
    n.map_or(0.0, |i| x[i])
}

struct Stamp<'a> {
    jac: &'a mut DMatrix<f64>,
    res: &'a mut DVector<f64>,
}

impl Stamp<'_> {
    fn current(&mut self, n: Node, i: f64) {
        if let Some(k) = n {
            self.res[k] += i;
        }
    }

    fn deriv(&mut self, row: Node, col: Node, g: f64) {
        if let (Some(r), Some(c)) = (row, col) {
            self.jac[(r, c)] += g;
        }
    }

    fn conductance(&mut self, p: Node, n: Node, g: f64, i: f64) {
        self.current(p, i);
        self.current(n, -i);
        self.deriv(p, p, g);
        self.deriv(p, n, -g);
        self.deriv(n, p, -g);
        self.deriv(n, n, g);
    }
}

struct NewtonFailure {
    iterations: usize,
    worst: usize,
}

impl System {
    fn compile(c: &Circuit, temperature_c: f64) -> Result<Self, SolveError> {
        let diags = c.validate();
        if let Some(d) = diags.first() {
            return Err(SolveError::InvalidCircuit(d.message.clone()));
        }
        let node = |name: &str| -> Node {
            let idx = c.node_index(name).expect("validated node");
            (idx > 0).then(|| idx - 1)
        };
        let mut sys = System {
            node_names: c.nodes[1..].to_vec(),
            element_names: c.elements.iter().map(|e| e.name.clone()).collect(),
            probes: Vec::new(),
            n_nodes: c.nodes.len() - 1,
            fets: Vec::new(),
            caps: Vec::new(),
            sources: Vec::new(),
            switches: Vec::new(),
        };
        for (idx, e) in c.elements.iter().enumerate() {
            match &e.kind {
                ElementKind::Cntfet {
                    device,
                    drain,
                    gate,
                    source,
                } => sys.fets.push(Fet {
                    model: device.operating_params(temperature_c),
                    drain: node(drain),
                    gate: node(gate),
                    source: node(source),
                    element: idx,
                }),
                ElementKind::Capacitor { farads, pos, neg } => sys.caps.push(Cap {
                    farads: *farads,
                    pos: node(pos),
                    neg: node(neg),
                    element: idx,
                }),
                ElementKind::VoltageSource { stimulus, pos, neg } => {
                    sys.probes.push(SourceProbe {
                        name: e.name.clone(),
                        pos: pos.clone(),
                        neg: neg.clone(),
                    });
                    sys.sources.push(Source {
                        stimulus: stimulus.clone(),
                        pos: node(pos),
                        neg: node(neg),
                        element: idx,
                    })
                }
                ElementKind::Switch {
                    ctrl,
                    threshold,
                    r_on,
                    r_off,
                    pos,
                    neg,
                } => {
                    let Some(ElementKind::VoltageSource { stimulus, .. }) =
                        c.element(ctrl).map(|e| &e.kind)
                    else {
                        unreachable!("validated switch control");
                    };
                    sys.switches.push(Switch {
                        ctrl: stimulus.clone(),
                        threshold: *threshold,
                        g_on: 1.0 / r_on,
                        g_off: 1.0 / r_off,
                        pos: node(pos),
                        neg: node(neg),
                        element: idx,
                    })
                }
            }
        }
        Ok(sys)
    }

    fn size(&self) -> usize {
        self.n_nodes + self.sources.len()
    }

    /// Residual (currents leaving each node, then source constraints) and
    /// Jacobian at `x`. Capacitors are open when `companions` is `None`.
    #[allow(clippy::too_many_arguments)]
    fn assemble(
        &self,
        x: &DVector<f64>,
        t: f64,
        companions: Option<&[Companion]>,
        source_scale: f64,
        g_min: f64,
        jac: &mut DMatrix<f64>,
        res: &mut DVector<f64>,
    ) {
        jac.fill(0.0);
        res.fill(0.0);
        let mut st = Stamp { jac, res };

        for k in 0..self.n_nodes {
            st.res[k] += g_min * x[k];
            st.jac[(k, k)] += g_min;
        }
        for f in &self.fets {
            let (vd, vg, vs) = (v(x, f.drain), v(x, f.gate), v(x, f.source));
            let (vgs, vds) = (vg - vs, vd - vs);
            let h = DERIVATIVE_STEP;
            let id = f.model.drain_current(vgs, vds);
            let gm = (f.model.drain_current(vgs + h, vds) - f.model.drain_current(vgs - h, vds))
                / (2.0 * h);
            let gds = (f.model.drain_current(vgs, vds + h) - f.model.drain_current(vgs, vds - h))
                / (2.0 * h);
            st.current(f.drain, id);
            st.current(f.source, -id);
            for (row, sign) in [(f.drain, 1.0), (f.source, -1.0)] {
                st.deriv(row, f.drain, sign * gds);
                st.deriv(row, f.gate, sign * gm);
                st.deriv(row, f.source, -sign * (gm + gds));
            }
        }
        if let Some(comp) = companions {
            for (c, k) in self.caps.iter().zip(comp) {
                let i = k.geq * (v(x, c.pos) - v(x, c.neg)) - k.ieq;
                st.conductance(c.pos, c.neg, k.geq, i);
            }
        }
        for s in &self.switches {
            let g = s.conductance(t);
            let i = g * (v(x, s.pos) - v(x, s.neg));
            st.conductance(s.pos, s.neg, g, i);
        }
        for (k, s) in self.sources.iter().enumerate() {
            let row = self.n_nodes + k;
            let ib = x[row];
            st.current(s.pos, ib);
            st.current(s.neg, -ib);
            st.deriv(s.pos, Some(row), 1.0);
            st.deriv(s.neg, Some(row), -1.0);
            st.res[row] = v(x, s.pos) - v(x, s.neg) - source_scale * s.stimulus.value_at(t);
            st.deriv(Some(row), s.pos, 1.0);
            st.deriv(Some(row), s.neg, -1.0);
        }
    }

    fn newton(
        &self,
        mut x: DVector<f64>,
        t: f64,
        companions: Option<&[Companion]>,
        source_scale: f64,
        cfg: &SolverConfig,
    ) -> Result<DVector<f64>, NewtonFailure> {
        let n = self.size();
        let mut jac = DMatrix::zeros(n, n);
        let mut res = DVector::zeros(n);
        let mut worst = 0;
        for iter in 0..cfg.max_newton {
            self.assemble(
                &x,
                t,
                companions,
                source_scale,
                cfg.g_min,
                &mut jac,
                &mut res,
            );
            let (w, kcl) = (0..self.n_nodes)
                .map(|k| (k, res[k].abs()))
                .fold((0, 0.0), |a, b| if b.1 > a.1 { b } else { a });
            worst = w;
            let constraint = (self.n_nodes..n).map(|k| res[k].abs()).fold(0.0, f64::max);
            let Some(mut dx) = jac.clone().lu().solve(&res) else {
                return Err(NewtonFailure {
                    iterations: iter + 1,
                    worst,
                });
            };
            dx.neg_mut();
            let dv = (0..self.n_nodes).map(|k| dx[k].abs()).fold(0.0, f64::max);
            if !dv.is_finite() {
                break;
            }
            if dv > MAX_NEWTON_STEP {
                dx *= MAX_NEWTON_STEP / dv;
            }
            x += &dx;
            if dv < cfg.v_tol && kcl < cfg.i_tol && constraint < cfg.v_tol {
                return Ok(x);
            }
        }
        Err(NewtonFailure {
            iterations: cfg.max_newton,
            worst,
        })
    }

    fn non_convergence(&self, time: f64, f: NewtonFailure) -> SolveError {
        SolveError::NonConvergence {
            time,
            iterations: f.iterations,
            worst_node: self.node_names.get(f.worst).cloned().unwrap_or_default(),
        }
    }

    /// DC solve with a source-stepping fallback.
    fn operating_point(&self, t: f64, cfg: &SolverConfig) -> Result<DVector<f64>, SolveError> {
        let zero = DVector::zeros(self.size());
        match self.newton(zero.clone(), t, None, 1.0, cfg) {
            Ok(x) => Ok(x),
            Err(_) => {
                let mut x = zero;
                for step in 1..=SOURCE_STEPS {
                    let scale = f64::from(step) / f64::from(SOURCE_STEPS);
                    x = self
                        .newton(x, t, None, scale, cfg)
                        .map_err(|f| self.non_convergence(t, f))?;
                }
                Ok(x)
            }
        }
    }

    fn element_currents(&self, x: &DVector<f64>, t: f64, cap_currents: &[f64], out: &mut [f64]) {
        for f in &self.fets {
            let (vd, vg, vs) = (v(x, f.drain), v(x, f.gate), v(x, f.source));
            out[f.element] = f.model.drain_current(vg - vs, vd - vs);
        }
        for (c, i) in self.caps.iter().zip(cap_currents) {
            out[c.element] = *i;
        }
        for (k, s) in self.sources.iter().enumerate() {
            out[s.element] = x[self.n_nodes + k];
        }
        for s in &self.switches {
            out[s.element] = s.conductance(t) * (v(x, s.pos) - v(x, s.neg));
        }
    }
}

/// Solves the DC operating point with sources frozen at `at_time`.
pub fn dc_operating_point(
    c: &Circuit,
    at_time: f64,
    cfg: &SolverConfig,
) -> Result<OperatingPoint, SolveError> {
    let sys = System::compile(c, cfg.temperature_c)?;
    let x = sys.operating_point(at_time, cfg)?;
    Ok(OperatingPoint {
        voltages: (0..sys.n_nodes).map(|k| x[k]).collect(),
        node_names: sys.node_names,
    })
}

struct Recorder {
    wf: WaveformSet,
    scratch: Vec<f64>,
}

impl Recorder {
    fn push(&mut self, sys: &System, x: &DVector<f64>, t: f64, cap_currents: &[f64]) {
        self.wf.time.push(t);
        for (k, series) in self.wf.voltages.iter_mut().enumerate() {
            series.push(x[k]);
        }
        sys.element_currents(x, t, cap_currents, &mut self.scratch);
        for (series, i) in self.wf.currents.iter_mut().zip(&self.scratch) {
            series.push(*i);
        }
    }
}

struct Integrator<'a> {
    sys: &'a System,
    cfg: &'a SolverConfig,
    x: DVector<f64>,
    cap_v: Vec<f64>,
    cap_i: Vec<f64>,
    companions: Vec<Companion>,
    recorder: Recorder,
    started: bool,
}

impl Integrator<'_> {
    fn advance(&mut self, t0: f64, t1: f64, depth: u32) -> Result<(), SolveError> {
        let h = t1 - t0;
        // The DC capacitor currents are not consistent with a source step at
        // t = 0+, so the first step is always backward Euler.
        let method = if self.started {
            self.cfg.method
        } else {
            Method::BackwardEuler
        };
        for (k, c) in self.sys.caps.iter().enumerate() {
            self.companions[k] = match method {
                Method::BackwardEuler => {
                    let geq = c.farads / h;
                    Companion {
                        geq,
                        ieq: geq * self.cap_v[k],
                    }
                }
                Method::Trapezoidal => {
                    let geq = 2.0 * c.farads / h;
                    Companion {
                        geq,
                        ieq: geq * self.cap_v[k] + self.cap_i[k],
                    }
                }
            };
        }
        match self
            .sys
            .newton(self.x.clone(), t1, Some(&self.companions), 1.0, self.cfg)
        {
            Ok(x) => {
                for (k, c) in self.sys.caps.iter().enumerate() {
                    let vc = v(&x, c.pos) - v(&x, c.neg);
                    self.cap_i[k] = self.companions[k].geq * vc - self.companions[k].ieq;
                    self.cap_v[k] = vc;
                }
                self.recorder.push(self.sys, &x, t1, &self.cap_i);
                self.x = x;
                self.started = true;
                Ok(())
            }
            Err(f) if depth >= MAX_HALVINGS => Err(self.sys.non_convergence(t1, f)),
            Err(_) => {
                let mid = t0 + 0.5 * h;
                self.advance(t0, mid, depth + 1)?;
                self.advance(mid, t1, depth + 1)
            }
        }
    }
}

/// Fixed-step transient from the DC operating point at t = 0.
pub fn transient(c: &Circuit, cfg: &SolverConfig) -> Result<WaveformSet, SolveError> {
    cfg.check()?;
    let sys = System::compile(c, cfg.temperature_c)?;
    let x0 = sys.operating_point(0.0, cfg)?;

    let steps = (cfg.t_stop / cfg.dt - 1e-9).ceil() as usize;
    let n_elem = sys.element_names.len();
    let mut recorder = Recorder {
        wf: WaveformSet {
            time: Vec::with_capacity(steps + 1),
            node_names: sys.node_names.clone(),
            voltages: vec![Vec::with_capacity(steps + 1); sys.n_nodes],
            element_names: sys.element_names.clone(),
            currents: vec![Vec::with_capacity(steps + 1); n_elem],
            sources: sys.probes.clone(),
        },
        scratch: vec![0.0; n_elem],
    };
    let cap_i = vec![0.0; sys.caps.len()];
    recorder.push(&sys, &x0, 0.0, &cap_i);

    let mut integ = Integrator {
        cap_v: sys
            .caps
            .iter()
            .map(|c| v(&x0, c.pos) - v(&x0, c.neg))
            .collect(),
        cap_i,
        companions: vec![Companion { geq: 0.0, ieq: 0.0 }; sys.caps.len()],
        sys: &sys,
        cfg,
        x: x0,
        recorder,
        started: false,
    };
    let mut t_prev = 0.0;
    for k in 1..=steps {
        let t = (k as f64 * cfg.dt).min(cfg.t_stop);
        integ.advance(t_prev, t, 0)?;
        t_prev = t;
    }
    Ok(integ.recorder.wf)
}
