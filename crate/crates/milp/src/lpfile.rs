//! LP-file export/import and plain-text solution files.
//!
//! The writer emits the common CPLEX-style sections (`Minimize`,
//! `Subject To`, `Bounds`, `Generals`, `Binaries`, `End`). Every variable is
//! listed in the objective, with a zero coefficient if necessary, so that a
//! reader that declares variables on first appearance recovers the original
//! ordering. Model metadata travels in `\` comment lines.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::MilpError;
use crate::model::{MilpModel, Sense, VarId, Variable};

const TERMS_PER_LINE: usize = 8;

fn push_terms(out: &mut String, terms: &[(String, f64)]) {
    for (k, (name, coef)) in terms.iter().enumerate() {
        if k > 0 && k % TERMS_PER_LINE == 0 {
            out.push_str("\n   ");
        }
        if *coef < 0.0 || (*coef == 0.0 && coef.is_sign_negative()) {
            let _ = write!(out, " - {} {}", -coef, name);
        } else {
            let _ = write!(out, " + {} {}", coef, name);
        }
    }
}

fn fmt_bound(v: f64) -> String {
    if v == f64::INFINITY {
        "+inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v}")
    }
}

/// Renders `model` as LP-file text. Output is deterministic.
pub fn write_lp(model: &MilpModel) -> String {
    let mut out = String::new();
    out.push_str("\\ written by ddid-milp\n");
    if let Some(perm) = &model.metadata.permutation {
        let joined: Vec<String> = perm.iter().map(|p| p.to_string()).collect();
        let _ = writeln!(out, "\\ permutation: {}", joined.join(" "));
    }
    if let Some(d) = &model.metadata.digest {
        let _ = writeln!(out, "\\ digest: {d}");
    }
    let vars = model.variables();
    let name = |v: VarId| vars[v.0].name.clone();

    out.push_str("Minimize\n obj:");
    let dense = model.dense_objective();
    let obj_terms: Vec<(String, f64)> = vars.iter().zip(&dense).map(|(v, c)| (v.name.clone(), *c)).collect();
    push_terms(&mut out, &obj_terms);
    out.push_str("\nSubject To\n");
    for c in model.constraints() {
        let _ = write!(out, " {}:", c.name);
        let mut terms: Vec<(String, f64)> = c.coeffs.iter().map(|&(v, a)| (name(v), a)).collect();
        if terms.is_empty() {
            if let Some(first) = vars.first() {
                terms.push((first.name.clone(), 0.0));
            }
        }
        push_terms(&mut out, &terms);
        let _ = writeln!(out, " {} {}", c.sense.symbol(), c.rhs);
    }
    out.push_str("Bounds\n");
    for v in vars {
        let line = match (v.lower, v.upper) {
            (l, u) if l == f64::NEG_INFINITY && u == f64::INFINITY => format!(" {} free", v.name),
            (l, u) if l == u => format!(" {} = {}", v.name, l),
            (l, u) if u == f64::INFINITY => format!(" {} >= {}", v.name, l),
            (l, u) => format!(" {} <= {} <= {}", fmt_bound(l), v.name, fmt_bound(u)),
        };
        out.push_str(&line);
        out.push('\n');
    }
    let is_binary = |v: &Variable| v.integer && v.lower == 0.0 && v.upper == 1.0;
    let generals: Vec<&str> = vars.iter().filter(|v| v.integer && !is_binary(v)).map(|v| v.name.as_str()).collect();
    let binaries: Vec<&str> = vars.iter().filter(|v| is_binary(v)).map(|v| v.name.as_str()).collect();
    for (header, list) in [("Generals", generals), ("Binaries", binaries)] {
        if list.is_empty() {
            continue;
        }
        let _ = writeln!(out, "{header}");
        for chunk in list.chunks(TERMS_PER_LINE) {
            let _ = writeln!(out, " {}", chunk.join(" "));
        }
    }
    out.push_str("End\n");
    out
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Colon,
    Op(Sense),
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || "_.[]{}!#$%&()/,;?@`'|~^\"".contains(c)
}

fn lex(line: &str, lineno: usize) -> Result<Vec<Tok>, MilpError> {
    let err = |message: String| MilpError::Parse { line: lineno, message };
    let chars: Vec<char> = line.chars().collect();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c == '+' {
            toks.push(Tok::Plus);
            i += 1;
        } else if c == '-' {
            toks.push(Tok::Minus);
            i += 1;
        } else if c == ':' {
            toks.push(Tok::Colon);
            i += 1;
        } else if c == '<' || c == '>' || c == '=' {
            let mut op = String::from(c);
            if i + 1 < chars.len() && "<>=".contains(chars[i + 1]) {
                op.push(chars[i + 1]);
            }
            i += op.len();
            let sense = match op.as_str() {
                "<=" | "=<" | "<" => Sense::Le,
                ">=" | "=>" | ">" => Sense::Ge,
                "=" => Sense::Eq,
                _ => return Err(err(format!("bad operator {op:?}"))),
            };
            toks.push(Tok::Op(sense));
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() {
                let d = chars[i];
                let exp_ok = (d == 'e' || d == 'E')
                    && i + 1 < chars.len()
                    && (chars[i + 1].is_ascii_digit()
                        || ((chars[i + 1] == '+' || chars[i + 1] == '-')
                            && i + 2 < chars.len()
                            && chars[i + 2].is_ascii_digit()));
                if d.is_ascii_digit() || d == '.' {
                    i += 1;
                } else if exp_ok {
                    i += 2;
                } else {
                    break;
                }
            }
            let text: String = chars[start..i].iter().collect();
            let v: f64 = text.parse().map_err(|_| err(format!("bad number {text:?}")))?;
            toks.push(Tok::Num(v));
        } else if is_ident_char(c) {
            let start = i;
            while i < chars.len() && is_ident_char(chars[i]) {
                i += 1;
            }
            toks.push(Tok::Ident(chars[start..i].iter().collect()));
        } else {
            return Err(err(format!("unexpected character {c:?}")));
        }
    }
    Ok(toks)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Section {
    Preamble,
    Objective,
    Constraints,
    Bounds,
    Generals,
    Binaries,
    End,
}

fn section_header(line: &str) -> Option<Section> {
    let l = line.trim().to_ascii_lowercase();
    let l = l.split_whitespace().collect::<Vec<_>>().join(" ");
    match l.as_str() {
        "minimize" | "minimise" | "minimum" | "min" => Some(Section::Objective),
        "subject to" | "such that" | "st" | "s.t." | "st." => Some(Section::Constraints),
        "bounds" | "bound" => Some(Section::Bounds),
        "generals" | "general" | "gen" | "integers" | "integer" => Some(Section::Generals),
        "binaries" | "binary" | "bin" => Some(Section::Binaries),
        "end" => Some(Section::End),
        _ => None,
    }
}

fn as_infinity(name: &str) -> Option<f64> {
    match name.to_ascii_lowercase().as_str() {
        "inf" | "infinity" => Some(f64::INFINITY),
        _ => None,
    }
}

struct Reader {
    model: MilpModel,
    defaults: Vec<bool>,
}

impl Reader {
    fn var(&mut self, name: &str) -> VarId {
        if let Some(v) = self.model.var_by_name(name) {
            return v;
        }
        self.defaults.push(true);
        self.model.add_continuous(name.to_string(), 0.0, f64::INFINITY)
    }
}

/// Parses a linear expression `[+|-] [coef] name ...` from `toks[*pos..]`,
/// stopping at an operator or the end of the slice.
fn parse_terms(
    reader: &mut Reader,
    toks: &[Tok],
    pos: &mut usize,
    lineno: usize,
) -> Result<Vec<(VarId, f64)>, MilpError> {
    let err = |message: &str| MilpError::Parse { line: lineno, message: message.to_string() };
    let mut terms = Vec::new();
    while *pos < toks.len() {
        let mut sign = 1.0;
        let mut saw_sign = false;
        while let Some(t @ (Tok::Plus | Tok::Minus)) = toks.get(*pos) {
            if *t == Tok::Minus {
                sign = -sign;
            }
            saw_sign = true;
            *pos += 1;
        }
        match toks.get(*pos) {
            Some(Tok::Op(_)) | None => {
                if saw_sign {
                    return Err(err("dangling sign"));
                }
                break;
            }
            Some(Tok::Num(v)) => {
                let coef = sign * v;
                *pos += 1;
                match toks.get(*pos) {
                    Some(Tok::Ident(name)) => {
                        let id = reader.var(name);
                        terms.push((id, coef));
                        *pos += 1;
                    }
                    _ => return Err(err("constant terms are not supported")),
                }
            }
            Some(Tok::Ident(name)) => {
                let id = reader.var(name);
                terms.push((id, sign));
                *pos += 1;
            }
            Some(_) => return Err(err("unexpected token in expression")),
        }
    }
    Ok(terms)
}

fn parse_number(toks: &[Tok], pos: &mut usize, lineno: usize) -> Result<f64, MilpError> {
    let mut sign = 1.0;
    while let Some(t @ (Tok::Plus | Tok::Minus)) = toks.get(*pos) {
        if *t == Tok::Minus {
            sign = -sign;
        }
        *pos += 1;
    }
    let v = match toks.get(*pos) {
        Some(Tok::Num(v)) => *v,
        Some(Tok::Ident(s)) => as_infinity(s)
            .ok_or_else(|| MilpError::Parse { line: lineno, message: format!("expected a number, found {s:?}") })?,
        _ => return Err(MilpError::Parse { line: lineno, message: "expected a number".into() }),
    };
    *pos += 1;
    Ok(sign * v)
}

fn is_number_start(toks: &[Tok], pos: usize) -> bool {
    let mut p = pos;
    while matches!(toks.get(p), Some(Tok::Plus | Tok::Minus)) {
        p += 1;
    }
    match toks.get(p) {
        Some(Tok::Num(_)) => true,
        Some(Tok::Ident(s)) => as_infinity(s).is_some(),
        _ => false,
    }
}

fn parse_bound_line(reader: &mut Reader, toks: &[Tok], lineno: usize) -> Result<(), MilpError> {
    let err = |m: &str| MilpError::Parse { line: lineno, message: m.to_string() };
    let mut pos = 0;
    if is_number_start(toks, 0) {
        // lo <= x [<= hi]
        let lo = parse_number(toks, &mut pos, lineno)?;
        let Some(Tok::Op(op)) = toks.get(pos) else { return Err(err("expected operator")) };
        let op = *op;
        pos += 1;
        let Some(Tok::Ident(name)) = toks.get(pos) else { return Err(err("expected variable")) };
        let id = reader.var(name);
        pos += 1;
        let var = reader.model.variable_mut(id);
        match op {
            Sense::Le => var.lower = lo,
            Sense::Ge => var.upper = lo,
            Sense::Eq => {
                var.lower = lo;
                var.upper = lo;
            }
        }
        if pos < toks.len() {
            let Some(Tok::Op(op2)) = toks.get(pos) else { return Err(err("expected operator")) };
            let op2 = *op2;
            pos += 1;
            let hi = parse_number(toks, &mut pos, lineno)?;
            let var = reader.model.variable_mut(id);
            match op2 {
                Sense::Le => var.upper = hi,
                Sense::Ge => var.lower = hi,
                Sense::Eq => return Err(err("chained equality in bound")),
            }
        }
    } else {
        let Some(Tok::Ident(name)) = toks.first() else { return Err(err("expected variable")) };
        let id = reader.var(name);
        pos = 1;
        match toks.get(pos) {
            Some(Tok::Ident(w)) if w.eq_ignore_ascii_case("free") => {
                let var = reader.model.variable_mut(id);
                var.lower = f64::NEG_INFINITY;
                var.upper = f64::INFINITY;
                pos += 1;
            }
            Some(Tok::Op(op)) => {
                let op = *op;
                pos += 1;
                let v = parse_number(toks, &mut pos, lineno)?;
                let var = reader.model.variable_mut(id);
                match op {
                    Sense::Le => var.upper = v,
                    Sense::Ge => var.lower = v,
                    Sense::Eq => {
                        var.lower = v;
                        var.upper = v;
                    }
                }
            }
            _ => return Err(err("malformed bound")),
        }
    }
    if pos != toks.len() {
        return Err(err("trailing tokens in bound"));
    }
    Ok(())
}

/// Parses LP-file text into a model.
pub fn read_lp(text: &str) -> Result<MilpModel, MilpError> {
    let mut reader = Reader { model: MilpModel::new(), defaults: Vec::new() };
    let mut section = Section::Preamble;
    // Constraint tokens accumulate across lines until the right-hand side.
    let mut pending: Vec<Tok> = Vec::new();
    let mut pending_line = 0;
    let mut objective: Vec<(VarId, f64)> = Vec::new();
    let mut unnamed = 0usize;

    for (k, raw) in text.lines().enumerate() {
        let lineno = k + 1;
        let (body, comment) = match raw.find('\\') {
            Some(p) => (&raw[..p], Some(&raw[p + 1..])),
            None => (raw, None),
        };
        if let Some(c) = comment {
            let c = c.trim();
            if let Some(rest) = c.strip_prefix("permutation:") {
                let perm: Result<Vec<usize>, _> = rest.split_whitespace().map(str::parse).collect();
                reader.model.metadata.permutation = Some(
                    perm.map_err(|_| MilpError::Parse { line: lineno, message: "bad permutation metadata".into() })?,
                );
            } else if let Some(rest) = c.strip_prefix("digest:") {
                reader.model.metadata.digest = Some(rest.trim().to_string());
            }
        }
        if body.trim().is_empty() {
            continue;
        }
        let lower = body.trim().to_ascii_lowercase();
        if lower == "maximize" || lower == "maximise" || lower == "max" || lower == "maximum" {
            return Err(MilpError::Parse { line: lineno, message: "maximization models are not supported".into() });
        }
        if let Some(next) = section_header(body) {
            if !pending.is_empty() {
                return Err(MilpError::Parse { line: pending_line, message: "unterminated constraint".into() });
            }
            section = next;
            continue;
        }
        let toks = lex(body, lineno)?;
        match section {
            Section::Preamble | Section::End => {
                return Err(MilpError::Parse { line: lineno, message: "content outside of a section".into() })
            }
            Section::Objective => {
                let mut pos = 0;
                if let [Tok::Ident(_), Tok::Colon, ..] = toks.as_slice() {
                    pos = 2;
                }
                let terms = parse_terms(&mut reader, &toks, &mut pos, lineno)?;
                if pos != toks.len() {
                    return Err(MilpError::Parse { line: lineno, message: "operator in objective".into() });
                }
                objective.extend(terms);
            }
            Section::Constraints => {
                if pending.is_empty() {
                    pending_line = lineno;
                }
                pending.extend(toks);
                // A constraint is complete once an operator is followed by a number.
                let Some(op_at) = pending.iter().position(|t| matches!(t, Tok::Op(_))) else { continue };
                if !is_number_start(&pending, op_at + 1) {
                    continue;
                }
                let toks = std::mem::take(&mut pending);
                let mut pos = 0;
                let name = if let [Tok::Ident(n), Tok::Colon, ..] = toks.as_slice() {
                    pos = 2;
                    n.clone()
                } else {
                    unnamed += 1;
                    format!("R{unnamed}")
                };
                let terms = parse_terms(&mut reader, &toks, &mut pos, pending_line)?;
                let Some(Tok::Op(sense)) = toks.get(pos) else {
                    return Err(MilpError::Parse { line: pending_line, message: "expected operator".into() });
                };
                let sense = *sense;
                pos += 1;
                let rhs = parse_number(&toks, &mut pos, pending_line)?;
                if pos != toks.len() {
                    return Err(MilpError::Parse { line: pending_line, message: "trailing tokens after rhs".into() });
                }
                reader.model.add_constraint(name, terms, sense, rhs);
            }
            Section::Bounds => parse_bound_line(&mut reader, &toks, lineno)?,
            Section::Generals | Section::Binaries => {
                for t in toks {
                    let Tok::Ident(name) = t else {
                        return Err(MilpError::Parse { line: lineno, message: "expected variable name".into() });
                    };
                    let id = reader.var(&name);
                    let var = reader.model.variable_mut(id);
                    var.integer = true;
                    if section == Section::Binaries {
                        var.lower = 0.0;
                        var.upper = 1.0;
                    }
                }
            }
        }
    }
    if !pending.is_empty() {
        return Err(MilpError::Parse { line: pending_line, message: "unterminated constraint".into() });
    }
    reader.model.set_objective(objective);
    reader.model.validate()?;
    Ok(reader.model)
}

/// Parses whitespace-separated `name value` lines. Blank lines and lines
/// starting with `#` are ignored. Every name must be a variable of `model`.
pub fn read_solution(text: &str, model: &MilpModel) -> Result<BTreeMap<String, f64>, MilpError> {
    let mut out = BTreeMap::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let (Some(name), Some(value), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(MilpError::Parse { line: k + 1, message: "expected `name value`".into() });
        };
        if model.var_by_name(name).is_none() {
            return Err(MilpError::UnknownSolutionVariable { line: k + 1, name: name.to_string() });
        }
        let v: f64 =
            value.parse().map_err(|_| MilpError::Parse { line: k + 1, message: format!("bad value {value:?}") })?;
        out.insert(name.to_string(), v);
    }
    Ok(out)
}
