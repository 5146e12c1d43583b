use std::collections::HashSet;
use std::fmt;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::device::{CntfetDevice, NOMINAL_CHANNEL_LENGTH, NOMINAL_OXIDE_THICKNESS};
use crate::units::format_value;

/// Name of the reference node; always node index 0.
pub const GROUND: &str = "0";

/// Time-dependent source value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Stimulus {
    Dc(f64),
    /// Piecewise-linear `(time, value)` corners; held flat outside the range.
    Pwl(Vec<(f64, f64)>),
}

impl Stimulus {
    pub fn value_at(&self, t: f64) -> f64 {
        match self {
            Stimulus::Dc(v) => *v,
            Stimulus::Pwl(points) => {
                let Some(first) = points.first() else {
                    return 0.0;
                };
                if t <= first.0 {
                    return first.1;
                }
                let idx = points.partition_point(|p| p.0 <= t);
                if idx >= points.len() {
                    return points[points.len() - 1].1;
                }
                let (t0, v0) = points[idx - 1];
                let (t1, v1) = points[idx];
                if t1 <= t0 {
                    return v1;
                }
                v0 + (v1 - v0) * (t - t0) / (t1 - t0)
            }
        }
    }

    /// Smallest and largest value the stimulus ever takes.
    pub fn range(&self) -> (f64, f64) {
        match self {
            Stimulus::Dc(v) => (*v, *v),
            Stimulus::Pwl(points) => points
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                    (lo.min(p.1), hi.max(p.1))
                }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ElementKind {
    Cntfet {
        device: CntfetDevice,
        drain: String,
        gate: String,
        source: String,
    },
    Capacitor {
        farads: f64,
        pos: String,
        neg: String,
    },
    VoltageSource {
        stimulus: Stimulus,
        pos: String,
        neg: String,
    },
    /// Two-valued resistor controlled by the value of a named voltage source.
    Switch {
        ctrl: String,
        threshold: f64,
        r_on: f64,
        r_off: f64,
        pos: String,
        neg: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Element {
    pub name: String,
    pub kind: ElementKind,
}

impl Element {
    pub fn new(name: impl Into<String>, kind: ElementKind) -> Self {
        Self {
            name: name.into(),
            kind,
        }
    }

    pub fn terminals(&self) -> Vec<&str> {
        match &self.kind {
            ElementKind::Cntfet {
                drain,
                gate,
                source,
                ..
            } => vec![drain, gate, source],
            ElementKind::Capacitor { pos, neg, .. }
            | ElementKind::VoltageSource { pos, neg, .. }
            | ElementKind::Switch { pos, neg, .. } => vec![pos, neg],
        }
    }

    pub fn is_transistor(&self) -> bool {
        matches!(self.kind, ElementKind::Cntfet { .. })
    }
}

/// Named nodes plus the elements connecting them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    pub title: String,
    /// Declared node names; index 0 is always ground.
    pub nodes: Vec<String>,
    pub elements: Vec<Element>,
}

impl Default for Circuit {
    fn default() -> Self {
        Self::new("")
    }
}

impl Circuit {
    pub fn new(title: impl Into<String>) -> Self {
        Self {
            title: title.into(),
            nodes: vec![GROUND.to_string()],
            elements: Vec::new(),
        }
    }

    pub fn node_index(&self, name: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n == name)
    }

    /// Declares `name` if needed and returns its index.
    pub fn declare_node(&mut self, name: &str) -> usize {
        match self.node_index(name) {
            Some(i) => i,
            None => {
                self.nodes.push(name.to_string());
                self.nodes.len() - 1
            }
        }
    }

    /// Appends an element, declaring any nodes it touches.
    pub fn add(&mut self, element: Element) -> &mut Self {
        for t in element.terminals() {
            let t = t.to_string();
            self.declare_node(&t);
        }
        self.elements.push(element);
        self
    }

    pub fn element(&self, name: &str) -> Option<&Element> {
        self.elements
            .iter()
            .find(|e| e.name.eq_ignore_ascii_case(name))
    }

    pub fn transistor_count(&self) -> usize {
        self.elements.iter().filter(|e| e.is_transistor()).count()
    }

    pub fn count_where(&self, pred: impl Fn(&ElementKind) -> bool) -> usize {
        self.elements.iter().filter(|e| pred(&e.kind)).count()
    }

    /// Checks every structural invariant; an empty list means the circuit can
    /// be simulated.
    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        if self.nodes.first().map(String::as_str) != Some(GROUND) {
            out.push(Diagnostic::node(
                GROUND,
                "ground node must be declared first",
            ));
        }
        let mut seen = HashSet::new();
        for n in &self.nodes {
            if !seen.insert(n.as_str()) {
                out.push(Diagnostic::node(n, "node declared more than once"));
            }
        }

        let declared: HashSet<&str> = self.nodes.iter().map(String::as_str).collect();
        let mut used: HashSet<&str> = HashSet::new();
        let mut names = HashSet::new();
        for e in &self.elements {
            if !names.insert(e.name.to_ascii_lowercase()) {
                out.push(Diagnostic::element(&e.name, "duplicate element name"));
            }
            for t in e.terminals() {
                used.insert(t);
                if !declared.contains(t) {
                    out.push(Diagnostic {
                        subject: t.to_string(),
                        message: format!("element '{}' references undeclared node '{t}'", e.name),
                    });
                }
            }
            self.check_element(e, &mut out);
        }
        for n in self.nodes.iter().skip(1) {
            if !used.contains(n.as_str()) {
                out.push(Diagnostic::node(n, "node is not connected to any element"));
            }
        }
        if !self
            .elements
            .iter()
            .any(|e| matches!(e.kind, ElementKind::VoltageSource { .. }))
        {
            out.push(Diagnostic {
                subject: self.title.clone(),
                message: "circuit has no voltage source".into(),
            });
        }
        out
    }

    fn check_element(&self, e: &Element, out: &mut Vec<Diagnostic>) {
        match &e.kind {
            ElementKind::Cntfet { device, .. } => {
                if let Err(err) = device.check() {
                    out.push(Diagnostic::element(&e.name, err.to_string()));
                }
            }
            ElementKind::Capacitor { farads, .. } => {
                if !(farads.is_finite() && *farads > 0.0) {
                    out.push(Diagnostic::element(
                        &e.name,
                        format!("capacitance must be positive, got {farads}"),
                    ));
                }
            }
            ElementKind::VoltageSource { stimulus, .. } => match stimulus {
                Stimulus::Dc(v) if !v.is_finite() => {
                    out.push(Diagnostic::element(&e.name, "non-finite source value"));
                }
                Stimulus::Pwl(points) => {
                    if points.is_empty() {
                        out.push(Diagnostic::element(&e.name, "empty pwl source"));
                    }
                    if points.iter().any(|p| !p.0.is_finite() || !p.1.is_finite())
                        || points.windows(2).any(|w| w[1].0 < w[0].0)
                    {
                        out.push(Diagnostic::element(
                            &e.name,
                            "pwl corners must be finite with non-decreasing times",
                        ));
                    }
                }
                _ => {}
            },
            ElementKind::Switch {
                ctrl,
                threshold,
                r_on,
                r_off,
                ..
            } => {
                if !(r_on.is_finite() && r_off.is_finite() && *r_on > 0.0 && r_on < r_off) {
                    out.push(Diagnostic::element(
                        &e.name,
                        format!("need 0 < ron < roff, got ron={r_on} roff={r_off}"),
                    ));
                }
                if !threshold.is_finite() {
                    out.push(Diagnostic::element(&e.name, "non-finite switch threshold"));
                }
                let ctrl_ok = self
                    .element(ctrl)
                    .is_some_and(|c| matches!(c.kind, ElementKind::VoltageSource { .. }));
                if !ctrl_ok {
                    out.push(Diagnostic::element(
                        &e.name,
                        format!("control '{ctrl}' is not a voltage source"),
                    ));
                }
            }
        }
    }

    /// Renders the circuit in the text netlist format accepted by
    /// [`crate::netlist::parse_netlist`].
    pub fn to_netlist(&self) -> String {
        let mut s = String::new();
        if !self.title.is_empty() {
            let _ = writeln!(s, ".title {}", self.title);
        }
        for e in &self.elements {
            let _ = match &e.kind {
                ElementKind::Cntfet {
                    device,
                    drain,
                    gate,
                    source,
                } => {
                    let _ = write!(
                        s,
                        "{} {drain} {gate} {source} {} chirality={},{} tubes={}",
                        e.name,
                        device.polarity,
                        device.chirality.n(),
                        device.chirality.m(),
                        device.tubes
                    );
                    if let Some(v) = device.vth_override {
                        let _ = write!(s, " vth={}", format_value(v));
                    }
                    let defaults = [
                        ("l", device.channel_length, NOMINAL_CHANNEL_LENGTH),
                        ("tox", device.oxide_thickness, NOMINAL_OXIDE_THICKNESS),
                        ("kon", device.k_on, CntfetDevice::DEFAULT_K_ON),
                        ("ioff", device.i_off, CntfetDevice::DEFAULT_I_OFF),
                        ("ss", device.ss_mv_per_decade, CntfetDevice::DEFAULT_SS_MV),
                    ];
                    for (key, v, default) in defaults {
                        if v.to_bits() != default.to_bits() {
                            let _ = write!(s, " {key}={}", format_value(v));
                        }
                    }
                    writeln!(s)
                }
                ElementKind::Capacitor { farads, pos, neg } => {
                    writeln!(s, "{} {pos} {neg} {}", e.name, format_value(*farads))
                }
                ElementKind::VoltageSource { stimulus, pos, neg } => match stimulus {
                    Stimulus::Dc(v) => {
                        writeln!(s, "{} {pos} {neg} dc {}", e.name, format_value(*v))
                    }
                    Stimulus::Pwl(points) => {
                        let body: Vec<String> = points
                            .iter()
                            .map(|(t, v)| format!("{} {}", format_value(*t), format_value(*v)))
                            .collect();
                        writeln!(s, "{} {pos} {neg} pwl({})", e.name, body.join(" "))
                    }
                },
                ElementKind::Switch {
                    ctrl,
                    threshold,
                    r_on,
                    r_off,
                    pos,
                    neg,
                } => writeln!(
                    s,
                    "{} {pos} {neg} ctrl={ctrl} ron={} roff={} vt={}",
                    e.name,
                    format_value(*r_on),
                    format_value(*r_off),
                    format_value(*threshold)
                ),
            };
        }
        s.push_str(".end\n");
        s
    }
}

/// One violated circuit invariant, naming the offending node or element.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub subject: String,
    pub message: String,
}

impl Diagnostic {
    fn node(name: &str, message: impl Into<String>) -> Self {
        Self {
            subject: name.to_string(),
            message: format!("node '{name}': {}", message.into()),
        }
    }

    fn element(name: &str, message: impl Into<String>) -> Self {
        Self {
            subject: name.to_string(),
            message: format!("element '{name}': {}", message.into()),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}
