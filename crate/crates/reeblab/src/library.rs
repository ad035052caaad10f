//! Shipped catalog: canonical paths, generating-function families, and
//! spacetimes under stable string identifiers.
//!
//! The ids are load-bearing: configs and reports reference them, so renames
//! are breaking changes. Every family here starts at the bare quadratic
//! form, which is what the velocity sandwich requires.

use crate::error::{Error, Result};
use crate::fields::{BasisFn, FiberProfile, TrigFactor};
use crate::flows::{HamiltonianPath, PathTerm, TimeProfile};
use crate::genfun::{FTerm, GenFamily};
use crate::manifolds::ContactModel;
use crate::spacetime::ProductSpacetime;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EntryKind {
    Path,
    Family,
    Spacetime,
}

impl EntryKind {
    pub fn name(&self) -> &'static str {
        match self {
            EntryKind::Path => "path",
            EntryKind::Family => "family",
            EntryKind::Spacetime => "spacetime",
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct LibraryEntry {
    pub id: &'static str,
    pub kind: EntryKind,
    pub model: &'static str,
    pub summary: &'static str,
}

/// Every shipped object, in stable order: paths, families, spacetimes.
pub fn inventory() -> Vec<LibraryEntry> {
    let mut v = Vec::new();
    for &(id, model, summary) in PATHS {
        v.push(LibraryEntry { id, kind: EntryKind::Path, model, summary });
    }
    for &(id, model, summary) in FAMILIES {
        v.push(LibraryEntry { id, kind: EntryKind::Family, model, summary });
    }
    for &(id, model, summary) in SPACETIMES {
        v.push(LibraryEntry { id, kind: EntryKind::Spacetime, model, summary });
    }
    v
}

const PATHS: &[(&str, &str, &str)] = &[
    ("reeb", "T3", "time-one Reeb flow, H = 1"),
    ("t3-translation", "T3", "rigid torus translation by (0.3, 0.2)"),
    ("t3-mixed", "T3", "Reeb drift with an oscillating translation that integrates to zero"),
    ("s3-hopf", "S3", "time-one Hopf rotation, H = 1"),
    ("j1s1-shift", "J1S1", "vertical jet shift by 0.4 through a fiber bump"),
];

const FAMILIES: &[(&str, &str, &str)] = &[
    ("jet-cos", "J1S1", "single cosine growing linearly in time, no fiber"),
    ("jet-two-mode", "J1S1", "two circle modes, linear ramps"),
    ("jet-ramp", "J1S1", "quadratic-in-time ramp on two modes"),
    ("jet-breather", "J1S1", "harmonic envelope returning to the quadratic at t = 1"),
    ("jet-lifted", "J1S1", "ramped cosine plus a pure time offset, strict interior slack"),
    ("jet-skew", "J1S1", "three skewed circle modes"),
    ("fishtail-m1", "J1S1", "fiber-coupled sine over one positive square"),
    ("fishtail-m2", "J1S1", "the fishtail with an extra inert positive square"),
    ("saddle-m1", "J1S1", "fiber-coupled cosine over one negative square"),
    ("saddle-m2", "J1S1", "doubly coupled term over the (+, -) form"),
    ("inert-m1", "J1S1", "jet-cos carried on an untouched positive square"),
    ("inert-m2", "J1S1", "jet-cos carried on two untouched positive squares"),
];

const SPACETIMES: &[(&str, &str, &str)] = &[
    ("flat-cylinder-T2", "R1xT2", "product metric -dt^2 + dx^2 + dy^2"),
    ("conformal-bump-T2", "R1xT2", "conformal factor 0.2 cos x sin y + 0.1 cos 2y"),
];

pub fn path(id: &str) -> Result<HamiltonianPath> {
    match id {
        "reeb" => Ok(HamiltonianPath::reeb(ContactModel::t3(), 1.0)),
        "t3-translation" => HamiltonianPath::sum(
            ContactModel::t3(),
            vec![
                PathTerm {
                    profile: TimeProfile::Constant(0.3),
                    basis: BasisFn::Torus { x: None, y: None, theta: Some(TrigFactor::cos(1)) },
                },
                PathTerm {
                    profile: TimeProfile::Constant(0.2),
                    basis: BasisFn::Torus { x: None, y: None, theta: Some(TrigFactor::sin(1)) },
                },
            ],
        ),
        "t3-mixed" => HamiltonianPath::sum(
            ContactModel::t3(),
            vec![
                PathTerm { profile: TimeProfile::Constant(1.0), basis: BasisFn::Const },
                PathTerm {
                    profile: TimeProfile::Harmonic { amp: 0.3, k: 1, kind: crate::fields::TrigKind::Sin },
                    basis: BasisFn::Torus { x: None, y: None, theta: Some(TrigFactor::cos(1)) },
                },
            ],
        ),
        "s3-hopf" => Ok(HamiltonianPath::reeb(ContactModel::s3(), 1.0)),
        "j1s1-shift" => HamiltonianPath::sum(
            ContactModel::j1s1(),
            vec![PathTerm {
                profile: TimeProfile::Constant(0.4),
                basis: BasisFn::Jet { q: None, fiber: Some(FiberProfile::new(0, 2.0)) },
            }],
        ),
        _ => Err(unknown("path", id)),
    }
}

fn ramp(c: f64) -> TimeProfile {
    TimeProfile::Poly(vec![0.0, c])
}

pub fn family(id: &str) -> Result<GenFamily> {
    match id {
        "jet-cos" => GenFamily::new(
            0,
            [0.0; 2],
            vec![(ramp(1.0), FTerm::circle(0.7, TrigFactor::cos(1)))],
            1.0,
            2.0,
        ),
        "jet-two-mode" => GenFamily::new(
            0,
            [0.0; 2],
            vec![
                (ramp(1.0), FTerm::circle(0.5, TrigFactor::cos(1))),
                (ramp(1.0), FTerm::circle(0.3, TrigFactor::sin(2))),
            ],
            1.0,
            2.0,
        ),
        "jet-ramp" => GenFamily::new(
            0,
            [0.0; 2],
            vec![
                (TimeProfile::Poly(vec![0.0, 1.2, -0.4]), FTerm::circle(0.5, TrigFactor::cos(1))),
                (ramp(1.0), FTerm::circle(0.2, TrigFactor::sin(3))),
            ],
            1.0,
            2.0,
        ),
        "jet-breather" => GenFamily::new(
            0,
            [0.0; 2],
            vec![(
                TimeProfile::Harmonic { amp: 0.6, k: 1, kind: crate::fields::TrigKind::Sin },
                FTerm::circle(1.0, TrigFactor::cos(2)),
            )],
            1.0,
            2.0,
        ),
        "jet-lifted" => Ok(GenFamily::new(
            0,
            [0.0; 2],
            vec![(ramp(1.0), FTerm::circle(0.4, TrigFactor::cos(1)))],
            1.0,
            2.0,
        )?
        .with_offset(ramp(0.25))),
        "jet-skew" => GenFamily::new(
            0,
            [0.0; 2],
            vec![
                (ramp(1.0), FTerm::circle(0.45, TrigFactor::cos(1))),
                (ramp(1.0), FTerm::circle(0.25, TrigFactor::cos(2))),
                (ramp(1.0), FTerm::circle(0.15, TrigFactor::sin(3))),
            ],
            1.0,
            2.0,
        ),
        "fishtail-m1" => GenFamily::new(
            1,
            [1.0, 0.0],
            vec![
                (ramp(1.0), FTerm { coef: 0.8, trig: TrigFactor::sin(1), pows: [1, 0] }),
                (ramp(1.0), FTerm::circle(0.4, TrigFactor::cos(1))),
            ],
            1.0,
            2.0,
        ),
        "fishtail-m2" => GenFamily::new(
            2,
            [1.0, 1.0],
            vec![
                (ramp(1.0), FTerm { coef: 0.8, trig: TrigFactor::sin(1), pows: [1, 0] }),
                (ramp(1.0), FTerm::circle(0.4, TrigFactor::cos(1))),
            ],
            1.0,
            2.0,
        ),
        "saddle-m1" => GenFamily::new(
            1,
            [-1.0, 0.0],
            vec![
                (ramp(1.0), FTerm { coef: 0.6, trig: TrigFactor::cos(1), pows: [1, 0] }),
                (ramp(0.5), FTerm::constant(1.0)),
            ],
            1.0,
            2.0,
        ),
        "saddle-m2" => GenFamily::new(
            2,
            [1.0, -1.0],
            vec![
                (ramp(1.0), FTerm { coef: 0.5, trig: TrigFactor::sin(1), pows: [1, 1] }),
                (ramp(0.4), FTerm::circle(1.0, TrigFactor::cos(2))),
            ],
            1.0,
            2.0,
        ),
        "inert-m1" => GenFamily::new(
            1,
            [1.0, 0.0],
            vec![(ramp(1.0), FTerm::circle(0.7, TrigFactor::cos(1)))],
            1.0,
            2.0,
        ),
        "inert-m2" => GenFamily::new(
            2,
            [1.0, 1.0],
            vec![(ramp(1.0), FTerm::circle(0.7, TrigFactor::cos(1)))],
            1.0,
            2.0,
        ),
        _ => Err(unknown("family", id)),
    }
}

pub fn spacetime(id: &str) -> Result<ProductSpacetime> {
    match id {
        "flat-cylinder-T2" => Ok(ProductSpacetime::flat()),
        "conformal-bump-T2" => ProductSpacetime::conformal(vec![
            (
                0.2,
                BasisFn::Torus {
                    x: Some(TrigFactor::cos(1)),
                    y: Some(TrigFactor::sin(1)),
                    theta: None,
                },
            ),
            (0.1, BasisFn::Torus { x: None, y: Some(TrigFactor::cos(2)), theta: None }),
        ]),
        _ => Err(unknown("spacetime", id)),
    }
}

/// All shipped family ids, the set the sandwich suite sweeps.
pub fn family_ids() -> Vec<&'static str> {
    FAMILIES.iter().map(|&(id, _, _)| id).collect()
}

fn unknown(kind: &str, id: &str) -> Error {
    let known: Vec<&str> = inventory()
        .into_iter()
        .filter(|e| e.kind.name() == kind)
        .map(|e| e.id)
        .collect();
    Error::Config(format!("unknown {kind} '{id}'; shipped: {}", known.join(", ")))
}
