//! Line-oriented, SPICE-flavoured netlist reader.
//!
//! ```text
//! * comment
//! .title 3T ternary DRAM
//! M1 x wl bl1 n chirality=23,0 tubes=1 vth=0.24
//! CS x 0 0.1f
//! VWL wl 0 pwl(0 0 50p 1.2 3n 1.2 3.05n 0)
//! VDD vdd 0 dc 1.2
//! SPRE bl2 vdd ctrl=VWL ron=10k roff=1T vt=0.6
//! .end
//! ```
//!
//! Element letters and node names are case-insensitive (nodes are stored in
//! lower case); numbers accept the suffixes of [`crate::units`].

use std::collections::HashSet;

use crate::device::{Chirality, CntfetDevice, Polarity};
use crate::error::{DeviceError, ParseError, ParseErrorKind};
use crate::netlist::circuit::{Circuit, Element, ElementKind, Stimulus, GROUND};
use crate::units::parse_value;

pub const DEFAULT_SWITCH_R_ON: f64 = 1e3;
pub const DEFAULT_SWITCH_R_OFF: f64 = 1e12;

#[derive(Debug, Clone, Copy)]
struct Token<'a> {
    text: &'a str,
    /// 1-based character column.
    column: usize,
}

fn tokenize(line: &str) -> Vec<Token<'_>> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in line.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                out.push(Token {
                    text: &line[s..i],
                    column: line[..s].chars().count() + 1,
                });
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push(Token {
            text: &line[s..],
            column: line[..s].chars().count() + 1,
        });
    }
    out
}

struct LineCtx {
    line: usize,
}

impl LineCtx {
    fn err(&self, column: usize, kind: ParseErrorKind) -> ParseError {
        ParseError {
            line: self.line,
            column,
            kind,
        }
    }

    fn value(&self, tok: Token<'_>) -> Result<f64, ParseError> {
        parse_value(tok.text).map_err(|k| self.err(tok.column, k))
    }

    /// Value of a `key=value` token; the column points at the value.
    fn keyed_value(&self, tok: Token<'_>, value: &str) -> Result<f64, ParseError> {
        let column = tok.column + tok.text.len() - value.len();
        parse_value(value).map_err(|k| self.err(column, k))
    }
}

fn node_name(tok: Token<'_>) -> String {
    let lower = tok.text.to_ascii_lowercase();
    if lower == "gnd" {
        GROUND.to_string()
    } else {
        lower
    }
}

struct PendingSwitch {
    element: usize,
    ctrl: String,
    line: usize,
    column: usize,
    explicit_threshold: bool,
}

/// Parses and validates a netlist.
pub fn parse_netlist(text: &str) -> Result<Circuit, ParseError> {
    let mut circuit = Circuit::new("");
    let mut names = HashSet::new();
    let mut pending = Vec::new();
    let mut last_line = 0;

    for (idx, raw) in text.lines().enumerate() {
        let ctx = LineCtx { line: idx + 1 };
        last_line = idx + 1;
        let tokens = tokenize(raw);
        let Some(&head) = tokens.first() else {
            continue;
        };
        if head.text.starts_with('*') {
            continue;
        }
        if let Some(directive) = head.text.strip_prefix('.') {
            match directive.to_ascii_lowercase().as_str() {
                "title" => {
                    circuit.title = tokens
                        .get(1)
                        .map(|t| raw[t.column_byte(raw)..].trim())
                        .unwrap_or("")
                        .to_string();
                    continue;
                }
                "end" => break,
                _ => {
                    return Err(ctx.err(
                        head.column,
                        ParseErrorKind::UnknownDirective(head.text.to_string()),
                    ))
                }
            }
        }

        let name = head.text.to_string();
        if !names.insert(name.to_ascii_lowercase()) {
            return Err(ctx.err(head.column, ParseErrorKind::DuplicateElement(name)));
        }
        let letter = head.text.chars().next().unwrap_or(' ');
        let kind = match letter.to_ascii_uppercase() {
            'M' => parse_cntfet(&ctx, &tokens)?,
            'C' => parse_capacitor(&ctx, &tokens)?,
            'V' => parse_source(&ctx, raw, &tokens)?,
            'S' => {
                let (kind, ctrl, explicit_threshold) = parse_switch(&ctx, &tokens)?;
                pending.push(PendingSwitch {
                    element: circuit.elements.len(),
                    ctrl: ctrl.text.to_string(),
                    line: ctx.line,
                    column: ctrl.column,
                    explicit_threshold,
                });
                kind
            }
            other => return Err(ctx.err(head.column, ParseErrorKind::UnknownElement(other))),
        };
        circuit.add(Element::new(name, kind));
    }

    resolve_switches(&mut circuit, &pending)?;

    if let Some(d) = circuit.validate().into_iter().next() {
        return Err(ParseError {
            line: last_line.max(1),
            column: 1,
            kind: ParseErrorKind::Invalid(d.message),
        });
    }
    Ok(circuit)
}

impl Token<'_> {
    fn column_byte(&self, line: &str) -> usize {
        line.char_indices()
            .nth(self.column - 1)
            .map(|(b, _)| b)
            .unwrap_or(line.len())
    }
}

fn resolve_switches(circuit: &mut Circuit, pending: &[PendingSwitch]) -> Result<(), ParseError> {
    for p in pending {
        let stimulus = match circuit.element(&p.ctrl).map(|e| &e.kind) {
            Some(ElementKind::VoltageSource { stimulus, .. }) => stimulus.clone(),
            _ => {
                return Err(ParseError {
                    line: p.line,
                    column: p.column,
                    kind: ParseErrorKind::DanglingReference(p.ctrl.clone()),
                })
            }
        };
        let canonical = circuit.element(&p.ctrl).map(|e| e.name.clone());
        if let ElementKind::Switch {
            ctrl, threshold, ..
        } = &mut circuit.elements[p.element].kind
        {
            if let Some(c) = canonical {
                *ctrl = c;
            }
            if !p.explicit_threshold {
                let (lo, hi) = stimulus.range();
                *threshold = 0.5 * (lo + hi);
            }
        }
    }
    Ok(())
}

fn expect<'a>(
    ctx: &LineCtx,
    tokens: &[Token<'a>],
    i: usize,
    what: &'static str,
) -> Result<Token<'a>, ParseError> {
    tokens.get(i).copied().ok_or_else(|| {
        let column = tokens
            .last()
            .map(|t| t.column + t.text.chars().count())
            .unwrap_or(1);
        ctx.err(column, ParseErrorKind::Expected(what))
    })
}

fn split_key(tok: Token<'_>) -> Option<(String, &str)> {
    let (k, v) = tok.text.split_once('=')?;
    Some((k.to_ascii_lowercase(), v))
}

fn parse_cntfet(ctx: &LineCtx, tokens: &[Token<'_>]) -> Result<ElementKind, ParseError> {
    let drain = node_name(expect(ctx, tokens, 1, "drain node")?);
    let gate = node_name(expect(ctx, tokens, 2, "gate node")?);
    let source = node_name(expect(ctx, tokens, 3, "source node")?);
    let pol_tok = expect(ctx, tokens, 4, "polarity 'n' or 'p'")?;
    let polarity = match pol_tok.text.to_ascii_lowercase().as_str() {
        "n" => Polarity::N,
        "p" => Polarity::P,
        _ => {
            return Err(ctx.err(
                pol_tok.column,
                ParseErrorKind::Expected("polarity 'n' or 'p'"),
            ))
        }
    };

    let mut chirality = None;
    let mut chirality_col = tokens[0].column;
    let mut tubes = 1;
    let mut vth = None;
    let mut extra: Vec<(String, f64)> = Vec::new();
    for &tok in &tokens[5..] {
        let Some((key, value)) = split_key(tok) else {
            return Err(ctx.err(tok.column, ParseErrorKind::Unexpected(tok.text.to_string())));
        };
        let vcol = tok.column + tok.text.len() - value.len();
        match key.as_str() {
            "chirality" => {
                let bad = || ctx.err(vcol, ParseErrorKind::BadChirality(value.to_string()));
                let (n, m) = value.split_once(',').ok_or_else(bad)?;
                let n: u32 = n.trim().parse().map_err(|_| bad())?;
                let m: u32 = m.trim().parse().map_err(|_| bad())?;
                chirality = Some(Chirality::new(n, m).map_err(|e| ctx.err(vcol, e.into()))?);
                chirality_col = vcol;
            }
            "tubes" => {
                tubes = value
                    .parse::<u32>()
                    .ok()
                    .filter(|&t| t >= 1)
                    .ok_or_else(|| ctx.err(vcol, ParseErrorKind::BadNumber(value.to_string())))?;
            }
            "vth" => vth = Some(ctx.keyed_value(tok, value)?),
            "l" | "tox" | "kon" | "ioff" | "ss" => {
                extra.push((key.clone(), ctx.keyed_value(tok, value)?));
            }
            _ => return Err(ctx.err(tok.column, ParseErrorKind::Unexpected(tok.text.to_string()))),
        }
    }
    let chirality = chirality.ok_or_else(|| {
        ctx.err(
            tokens[0].column,
            ParseErrorKind::Expected("chirality=<n>,<m>"),
        )
    })?;
    let mut device = CntfetDevice::new(polarity, chirality).with_tubes(tubes);
    device.vth_override = vth;
    for (key, v) in extra {
        match key.as_str() {
            "l" => device.channel_length = v,
            "tox" => device.oxide_thickness = v,
            "kon" => device.k_on = v,
            "ioff" => device.i_off = v,
            _ => device.ss_mv_per_decade = v,
        }
    }
    device.check().map_err(|e| {
        let column = match e {
            DeviceError::Metallic(_) => chirality_col,
            _ => tokens[0].column,
        };
        ctx.err(column, e.into())
    })?;
    Ok(ElementKind::Cntfet {
        device,
        drain,
        gate,
        source,
    })
}

fn parse_capacitor(ctx: &LineCtx, tokens: &[Token<'_>]) -> Result<ElementKind, ParseError> {
    let pos = node_name(expect(ctx, tokens, 1, "positive node")?);
    let neg = node_name(expect(ctx, tokens, 2, "negative node")?);
    let vtok = expect(ctx, tokens, 3, "capacitance")?;
    let farads = ctx.value(vtok)?;
    if let Some(t) = tokens.get(4) {
        return Err(ctx.err(t.column, ParseErrorKind::Unexpected(t.text.to_string())));
    }
    if farads <= 0.0 {
        return Err(ctx.err(
            vtok.column,
            ParseErrorKind::Invalid(format!("capacitance must be positive, got {farads}")),
        ));
    }
    Ok(ElementKind::Capacitor { farads, pos, neg })
}

fn parse_source(ctx: &LineCtx, raw: &str, tokens: &[Token<'_>]) -> Result<ElementKind, ParseError> {
    let pos = node_name(expect(ctx, tokens, 1, "positive node")?);
    let neg = node_name(expect(ctx, tokens, 2, "negative node")?);
    let head = expect(ctx, tokens, 3, "'dc <v>' or 'pwl(...)'")?;
    let lower = head.text.to_ascii_lowercase();
    let stimulus = if lower.starts_with("pwl") {
        parse_pwl(ctx, raw, head)?
    } else if lower == "dc" {
        let v = ctx.value(expect(ctx, tokens, 4, "dc value")?)?;
        if let Some(t) = tokens.get(5) {
            return Err(ctx.err(t.column, ParseErrorKind::Unexpected(t.text.to_string())));
        }
        Stimulus::Dc(v)
    } else {
        let v = ctx.value(head)?;
        if let Some(t) = tokens.get(4) {
            return Err(ctx.err(t.column, ParseErrorKind::Unexpected(t.text.to_string())));
        }
        Stimulus::Dc(v)
    };
    Ok(ElementKind::VoltageSource { stimulus, pos, neg })
}

/// `pwl(t0 v0 t1 v1 ...)`, spaces or commas between numbers.
fn parse_pwl(ctx: &LineCtx, raw: &str, head: Token<'_>) -> Result<Stimulus, ParseError> {
    let start = head.column_byte(raw);
    let rest = &raw[start..];
    let col_of = |byte: usize| raw[..start + byte].chars().count() + 1;
    let open = rest
        .find('(')
        .ok_or_else(|| ctx.err(head.column, ParseErrorKind::Expected("'(' after pwl")))?;
    if !rest[3..open].trim().is_empty() {
        return Err(ctx.err(head.column, ParseErrorKind::Expected("'(' after pwl")));
    }
    let close = rest.rfind(')').filter(|&c| c > open).ok_or_else(|| {
        ctx.err(
            col_of(rest.len()),
            ParseErrorKind::Expected("')' closing pwl"),
        )
    })?;
    let tail = rest[close + 1..].trim();
    if !tail.is_empty() {
        let tcol = col_of(close + 1 + rest[close + 1..].find(tail).unwrap_or(0));
        return Err(ctx.err(tcol, ParseErrorKind::Unexpected(tail.to_string())));
    }

    let body = &rest[open + 1..close];
    let mut values = Vec::new();
    let mut cursor = 0;
    for piece in body.split(|c: char| c.is_whitespace() || c == ',') {
        let offset = body[cursor..]
            .find(piece)
            .map(|o| cursor + o)
            .unwrap_or(cursor);
        cursor = offset + piece.len();
        if piece.is_empty() {
            continue;
        }
        let column = col_of(open + 1 + offset);
        values.push(parse_value(piece).map_err(|k| ctx.err(column, k))?);
    }
    if values.is_empty() || values.len() % 2 != 0 {
        return Err(ctx.err(
            col_of(open),
            ParseErrorKind::Expected("an even, non-zero count of pwl numbers"),
        ));
    }
    let points: Vec<(f64, f64)> = values.chunks(2).map(|c| (c[0], c[1])).collect();
    if points.windows(2).any(|w| w[1].0 < w[0].0) {
        return Err(ctx.err(
            col_of(open),
            ParseErrorKind::Invalid("pwl times must be non-decreasing".into()),
        ));
    }
    Ok(Stimulus::Pwl(points))
}

fn parse_switch<'a>(
    ctx: &LineCtx,
    tokens: &[Token<'a>],
) -> Result<(ElementKind, Token<'a>, bool), ParseError> {
    let pos = node_name(expect(ctx, tokens, 1, "positive node")?);
    let neg = node_name(expect(ctx, tokens, 2, "negative node")?);
    let mut ctrl = None;
    let mut r_on = DEFAULT_SWITCH_R_ON;
    let mut r_off = DEFAULT_SWITCH_R_OFF;
    let mut threshold = None;
    for &tok in &tokens[3..] {
        let Some((key, value)) = split_key(tok) else {
            return Err(ctx.err(tok.column, ParseErrorKind::Unexpected(tok.text.to_string())));
        };
        match key.as_str() {
            "ctrl" => {
                ctrl = Some(Token {
                    text: value,
                    column: tok.column + tok.text.len() - value.len(),
                })
            }
            "ron" => r_on = ctx.keyed_value(tok, value)?,
            "roff" => r_off = ctx.keyed_value(tok, value)?,
            "vt" => threshold = Some(ctx.keyed_value(tok, value)?),
            _ => return Err(ctx.err(tok.column, ParseErrorKind::Unexpected(tok.text.to_string()))),
        }
    }
    let ctrl = ctrl
        .filter(|t| !t.text.is_empty())
        .ok_or_else(|| ctx.err(tokens[0].column, ParseErrorKind::Expected("ctrl=<source>")))?;
    if !(r_on > 0.0 && r_on < r_off) {
        return Err(ctx.err(
            tokens[0].column,
            ParseErrorKind::Invalid(format!("need 0 < ron < roff, got ron={r_on} roff={r_off}")),
        ));
    }
    Ok((
        ElementKind::Switch {
            ctrl: ctrl.text.to_string(),
            threshold: threshold.unwrap_or(0.0),
            r_on,
            r_off,
            pos,
            neg,
        },
        ctrl,
        threshold.is_some(),
    ))
}
