//! Plain-text tables for paths, generating-function families, and sampled
//! curves, plus the CSV and JSON helpers the report writers share.
//!
//! All numbers are written in Rust's shortest round-trip decimal form with
//! a '.' separator, so parsing recovers the exact double and the files are
//! locale-independent. Lines starting with '#' and blank lines are ignored.
//!
//! Path table (`# reeblab path v1`):
//!
//! ```text
//! model T3
//! term const 1 :: const
//! term harmonic 0.3 1 sin :: torus - - cos1
//! ```
//!
//! One `term` line per summand; the time profile sits left of `::`, the
//! basis right. Profiles: `const c`, `poly c0 c1 ...`, `harmonic amp k
//! sin|cos`, `nodes v0 v1 ...`. Bases: `const`; `torus X Y T` with each
//! factor `-`, `cosK`, or `sinK`; `jet Q F` with `F` either `-` or
//! `pow:radius`; `sphere p0 p1 p2 p3`. `model NAME co=-1` selects the
//! opposite co-orientation. Only sums serialize: reparametrized or
//! concatenated paths are runtime objects, not tables.
//!
//! Family table (`# reeblab gf-family v1`):
//!
//! ```text
//! m 1
//! lambda 1 0
//! plateau 1
//! support 2
//! offset poly 0 0.25
//! term poly 0 1 :: 0.8 sin1 1 0
//! ```
//!
//! `lambda` is the fiber quadratic diagonal (entries beyond `m` ignored),
//! and each term line is profile `::` coefficient, circle factor, fiber
//! powers. `offset` is optional.
//!
//! Curve table (`# reeblab curve v1`): `component N` then N rows of four
//! coordinates.

use crate::error::{Error, Result};
use crate::fields::{BasisFn, FiberProfile, TrigFactor, TrigKind};
use crate::flows::{HamiltonianPath, PathExpr, PathTerm, TimeProfile};
use crate::genfun::{FTerm, GenFamily};
use crate::geom::Point;
use crate::manifolds::{ContactModel, ModelKind};
use std::fmt::Write as _;

fn num(x: f64) -> String {
    let mut s = format!("{x}");
    if !s.contains('.') && !s.contains('e') && !s.contains("inf") && !s.contains("NaN") {
        s.push_str(".0");
    }
    s
}

fn parse_f64(tok: &str, line: usize) -> Result<f64> {
    tok.parse().map_err(|_| Error::Parse { line, detail: format!("bad number '{tok}'") })
}

fn parse_usize(tok: &str, line: usize) -> Result<usize> {
    tok.parse().map_err(|_| Error::Parse { line, detail: format!("bad count '{tok}'") })
}

// ---------------------------------------------------------------------------
// Profile and factor grammar
// ---------------------------------------------------------------------------

fn write_profile(out: &mut String, p: &TimeProfile) {
    match p {
        TimeProfile::Constant(c) => {
            let _ = write!(out, "const {}", num(*c));
        }
        TimeProfile::Poly(cs) => {
            out.push_str("poly");
            for c in cs {
                let _ = write!(out, " {}", num(*c));
            }
        }
        TimeProfile::Harmonic { amp, k, kind } => {
            let _ = write!(out, "harmonic {} {} {}", num(*amp), k, kind_token(*kind));
        }
        TimeProfile::Nodes(vs) => {
            out.push_str("nodes");
            for v in vs {
                let _ = write!(out, " {}", num(*v));
            }
        }
    }
}

fn parse_profile(toks: &[&str], line: usize) -> Result<TimeProfile> {
    let bad = |d: &str| Error::Parse { line, detail: d.into() };
    match toks.split_first() {
        Some((&"const", rest)) if rest.len() == 1 => {
            Ok(TimeProfile::Constant(parse_f64(rest[0], line)?))
        }
        Some((&"poly", rest)) if !rest.is_empty() => Ok(TimeProfile::Poly(
            rest.iter().map(|t| parse_f64(t, line)).collect::<Result<_>>()?,
        )),
        Some((&"harmonic", rest)) if rest.len() == 3 => Ok(TimeProfile::Harmonic {
            amp: parse_f64(rest[0], line)?,
            k: parse_usize(rest[1], line)? as u32,
            kind: parse_kind(rest[2], line)?,
        }),
        Some((&"nodes", rest)) if rest.len() >= 2 => Ok(TimeProfile::Nodes(
            rest.iter().map(|t| parse_f64(t, line)).collect::<Result<_>>()?,
        )),
        _ => Err(bad(&format!("unrecognized time profile '{}'", toks.join(" ")))),
    }
}

fn kind_token(k: TrigKind) -> &'static str {
    match k {
        TrigKind::Cos => "cos",
        TrigKind::Sin => "sin",
    }
}

fn parse_kind(tok: &str, line: usize) -> Result<TrigKind> {
    match tok {
        "cos" => Ok(TrigKind::Cos),
        "sin" => Ok(TrigKind::Sin),
        _ => Err(Error::Parse { line, detail: format!("expected cos or sin, got '{tok}'") }),
    }
}

fn trig_token(f: &TrigFactor) -> String {
    format!("{}{}", kind_token(f.kind), f.k)
}

fn parse_trig(tok: &str, line: usize) -> Result<TrigFactor> {
    let (kind, digits) = if let Some(d) = tok.strip_prefix("cos") {
        (TrigKind::Cos, d)
    } else if let Some(d) = tok.strip_prefix("sin") {
        (TrigKind::Sin, d)
    } else {
        return Err(Error::Parse { line, detail: format!("bad circle factor '{tok}'") });
    };
    let k = parse_usize(digits, line)? as u32;
    Ok(TrigFactor { k, kind })
}

fn opt_trig_token(f: &Option<TrigFactor>) -> String {
    f.as_ref().map_or_else(|| "-".into(), trig_token)
}

fn parse_opt_trig(tok: &str, line: usize) -> Result<Option<TrigFactor>> {
    if tok == "-" {
        Ok(None)
    } else {
        parse_trig(tok, line).map(Some)
    }
}

fn write_basis(out: &mut String, b: &BasisFn) {
    match b {
        BasisFn::Const => out.push_str("const"),
        BasisFn::Torus { x, y, theta } => {
            let _ = write!(
                out,
                "torus {} {} {}",
                opt_trig_token(x),
                opt_trig_token(y),
                opt_trig_token(theta)
            );
        }
        BasisFn::Jet { q, fiber } => {
            let f = fiber
                .as_ref()
                .map_or_else(|| "-".into(), |f| format!("{}:{}", f.pow, num(f.radius)));
            let _ = write!(out, "jet {} {}", opt_trig_token(q), f);
        }
        BasisFn::Sphere { pows } => {
            let _ = write!(out, "sphere {} {} {} {}", pows[0], pows[1], pows[2], pows[3]);
        }
    }
}

fn parse_basis(toks: &[&str], line: usize) -> Result<BasisFn> {
    let bad = |d: String| Error::Parse { line, detail: d };
    match toks.split_first() {
        Some((&"const", [])) => Ok(BasisFn::Const),
        Some((&"torus", rest)) if rest.len() == 3 => Ok(BasisFn::Torus {
            x: parse_opt_trig(rest[0], line)?,
            y: parse_opt_trig(rest[1], line)?,
            theta: parse_opt_trig(rest[2], line)?,
        }),
        Some((&"jet", rest)) if rest.len() == 2 => {
            let fiber = if rest[1] == "-" {
                None
            } else {
                let (pow, radius) = rest[1].split_once(':').ok_or_else(|| {
                    bad(format!("fiber factor '{}' needs pow:radius", rest[1]))
                })?;
                Some(FiberProfile::new(
                    parse_usize(pow, line)? as u8,
                    parse_f64(radius, line)?,
                ))
            };
            Ok(BasisFn::Jet { q: parse_opt_trig(rest[0], line)?, fiber })
        }
        Some((&"sphere", rest)) if rest.len() == 4 => {
            let mut pows = [0u8; 4];
            for (slot, tok) in pows.iter_mut().zip(rest) {
                *slot = parse_usize(tok, line)? as u8;
            }
            Ok(BasisFn::Sphere { pows })
        }
        _ => Err(bad(format!("unrecognized basis '{}'", toks.join(" ")))),
    }
}

// ---------------------------------------------------------------------------
// Path tables
// ---------------------------------------------------------------------------

pub fn write_path(path: &HamiltonianPath) -> Result<String> {
    let PathExpr::Sum(terms) = &path.expr else {
        return Err(Error::Refused(
            "only coefficient sums serialize; derived paths are runtime objects".into(),
        ));
    };
    let mut out = String::from("# reeblab path v1\n");
    let _ = write!(out, "model {}", path.model.name());
    if path.model.co_orient < 0.0 {
        out.push_str(" co=-1");
    }
    out.push('\n');
    for t in terms {
        out.push_str("term ");
        write_profile(&mut out, &t.profile);
        out.push_str(" :: ");
        write_basis(&mut out, &t.basis);
        out.push('\n');
    }
    Ok(out)
}

fn parse_model(toks: &[&str], line: usize) -> Result<ContactModel> {
    let (name, rest) = toks
        .split_first()
        .ok_or(Error::Parse { line, detail: "model line needs a name".into() })?;
    let kind = match *name {
        "T3" => ModelKind::T3,
        "J1S1" => ModelKind::J1S1,
        "S3" => ModelKind::S3,
        "STR2" => ModelKind::STR2,
        _ => return Err(Error::Parse { line, detail: format!("unknown model '{name}'") }),
    };
    let co_orient = match rest {
        [] => 1.0,
        ["co=-1"] => -1.0,
        ["co=1"] => 1.0,
        _ => {
            return Err(Error::Parse {
                line,
                detail: format!("unrecognized model flags '{}'", rest.join(" ")),
            })
        }
    };
    Ok(ContactModel { kind, co_orient })
}

/// Meaningful lines of a table: (1-based line number, tokens).
fn tokenize(text: &str) -> Vec<(usize, Vec<&str>)> {
    text.lines()
        .enumerate()
        .filter_map(|(i, l)| {
            let l = l.trim();
            if l.is_empty() || l.starts_with('#') {
                None
            } else {
                Some((i + 1, l.split_whitespace().collect()))
            }
        })
        .collect()
}

fn split_term<'a>(toks: &[&'a str], line: usize) -> Result<(Vec<&'a str>, Vec<&'a str>)> {
    let sep = toks.iter().position(|&t| t == "::").ok_or(Error::Parse {
        line,
        detail: "term line needs a '::' between profile and basis".into(),
    })?;
    Ok((toks[..sep].to_vec(), toks[sep + 1..].to_vec()))
}

pub fn parse_path(text: &str) -> Result<HamiltonianPath> {
    let mut model = None;
    let mut terms = Vec::new();
    for (line, toks) in tokenize(text) {
        match toks.split_first() {
            Some((&"model", rest)) => model = Some(parse_model(rest, line)?),
            Some((&"term", rest)) => {
                let (ptoks, btoks) = split_term(rest, line)?;
                terms.push(PathTerm {
                    profile: parse_profile(&ptoks, line)?,
                    basis: parse_basis(&btoks, line)?,
                });
            }
            _ => {
                return Err(Error::Parse {
                    line,
                    detail: format!("expected 'model' or 'term', got '{}'", toks[0]),
                })
            }
        }
    }
    let model = model.ok_or(Error::Parse { line: 0, detail: "missing model line".into() })?;
    HamiltonianPath::sum(model, terms)
}

// ---------------------------------------------------------------------------
// Family tables
// ---------------------------------------------------------------------------

pub fn write_family(fam: &GenFamily) -> String {
    let base = fam.base();
    let mut out = String::from("# reeblab gf-family v1\n");
    let _ = writeln!(out, "m {}", base.fiber_dim());
    let mut lambda = [0.0; 2];
    for (slot, &l) in lambda.iter_mut().zip(base.quadratic()) {
        *slot = l;
    }
    let _ = writeln!(out, "lambda {} {}", num(lambda[0]), num(lambda[1]));
    let _ = writeln!(out, "plateau {}", num(base.plateau_radius()));
    let _ = writeln!(out, "support {}", num(base.support_radius()));
    if !matches!(fam.offset_profile(), TimeProfile::Constant(c) if *c == 0.0) {
        out.push_str("offset ");
        write_profile(&mut out, fam.offset_profile());
        out.push('\n');
    }
    for (profile, term) in fam.profiles().iter().zip(base.terms()) {
        out.push_str("term ");
        write_profile(&mut out, profile);
        let _ = write!(
            out,
            " :: {} {} {} {}",
            num(term.coef),
            trig_token(&term.trig),
            term.pows[0],
            term.pows[1]
        );
        out.push('\n');
    }
    out
}

pub fn parse_family(text: &str) -> Result<GenFamily> {
    let mut m = None;
    let mut lambda = [0.0; 2];
    let mut plateau = 1.0;
    let mut support = 2.0;
    let mut offset = None;
    let mut terms = Vec::new();
    for (line, toks) in tokenize(text) {
        match toks.split_first() {
            Some((&"m", [v])) => m = Some(parse_usize(v, line)?),
            Some((&"lambda", rest)) if rest.len() == 2 => {
                lambda = [parse_f64(rest[0], line)?, parse_f64(rest[1], line)?];
            }
            Some((&"plateau", [v])) => plateau = parse_f64(v, line)?,
            Some((&"support", [v])) => support = parse_f64(v, line)?,
            Some((&"offset", rest)) => offset = Some(parse_profile(rest, line)?),
            Some((&"term", rest)) => {
                let (ptoks, btoks) = split_term(rest, line)?;
                if btoks.len() != 4 {
                    return Err(Error::Parse {
                        line,
                        detail: "family term needs coef, circle factor, two fiber powers".into(),
                    });
                }
                terms.push((
                    parse_profile(&ptoks, line)?,
                    FTerm {
                        coef: parse_f64(btoks[0], line)?,
                        trig: parse_trig(btoks[1], line)?,
                        pows: [
                            parse_usize(btoks[2], line)? as u32,
                            parse_usize(btoks[3], line)? as u32,
                        ],
                    },
                ));
            }
            _ => {
                return Err(Error::Parse {
                    line,
                    detail: format!("unrecognized family key '{}'", toks[0]),
                })
            }
        }
    }
    let m = m.ok_or(Error::Parse { line: 0, detail: "missing fiber dimension 'm'".into() })?;
    let fam = GenFamily::new(m, lambda, terms, plateau, support)?;
    Ok(match offset {
        Some(p) => fam.with_offset(p),
        None => fam,
    })
}

// ---------------------------------------------------------------------------
// Curve tables
// ---------------------------------------------------------------------------

pub fn write_curve(components: &[Vec<Point>]) -> String {
    let mut out = String::from("# reeblab curve v1\n");
    for comp in components {
        let _ = writeln!(out, "component {}", comp.len());
        for p in comp {
            let _ = writeln!(out, "{} {} {} {}", num(p.0[0]), num(p.0[1]), num(p.0[2]), num(p.0[3]));
        }
    }
    out
}

pub fn parse_curve(text: &str) -> Result<Vec<Vec<Point>>> {
    let mut components: Vec<Vec<Point>> = Vec::new();
    let mut expect = 0usize;
    for (line, toks) in tokenize(text) {
        if toks[0] == "component" {
            if expect > 0 {
                return Err(Error::Parse {
                    line,
                    detail: format!("previous component short by {expect} rows"),
                });
            }
            let [_, n] = toks[..] else {
                return Err(Error::Parse { line, detail: "component line needs a count".into() });
            };
            expect = parse_usize(n, line)?;
            components.push(Vec::with_capacity(expect));
        } else {
            if expect == 0 {
                return Err(Error::Parse { line, detail: "coordinate row outside a component".into() });
            }
            if toks.len() != 4 {
                return Err(Error::Parse { line, detail: "expected four coordinates".into() });
            }
            let mut c = [0.0; 4];
            for (slot, tok) in c.iter_mut().zip(&toks) {
                *slot = parse_f64(tok, line)?;
            }
            components.last_mut().unwrap().push(Point(c));
            expect -= 1;
        }
    }
    if expect > 0 {
        return Err(Error::Parse { line: 0, detail: format!("last component short by {expect} rows") });
    }
    Ok(components)
}

// ---------------------------------------------------------------------------
// CSV and JSON
// ---------------------------------------------------------------------------

/// Fixed-column CSV with '.' decimals. Cells are written as given; use
/// [`csv_num`] for numbers.
pub struct Csv {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Csv {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Csv { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push<S: Into<String>>(&mut self, row: impl IntoIterator<Item = S>) {
        let row: Vec<String> = row.into_iter().map(Into::into).collect();
        assert_eq!(row.len(), self.header.len(), "column count drifted");
        self.rows.push(row);
    }

    pub fn to_string(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }
}

pub fn csv_num(x: f64) -> String {
    num(x)
}

/// Deterministic JSON bytes: stable field order from the struct definition,
/// pretty-printed, trailing newline. Reports carry no timestamps; those go
/// in the sidecar next to the file.
pub fn json_bytes<T: serde::Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(value)
        .map_err(|e| Error::Config(format!("serialization failed: {e}")))?;
    v.push(b'\n');
    Ok(v)
}
