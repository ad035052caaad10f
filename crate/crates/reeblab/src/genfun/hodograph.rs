//! Chart change between the cotangent circle bundle and the 1-jet space, and
//! the fiber transport that turns a flow into a generating-function family.
//!
//! With alpha = cos(theta) dx + sin(theta) dy on one side and dz - p dq on
//! the other, the map (x, y, theta) -> (q, p, z) = (theta, -x sin + y cos,
//! x cos + y sin) matches the forms exactly, so it carries contact data
//! verbatim. A Hamiltonian c(t) + a(t) cos(theta) + b(t) sin(theta) keeps
//! theta frozen and translates the base; the image of the fiber over the
//! origin at time t is therefore the 1-jet of C + A cos q + B sin q, where
//! A, B, C are the running integrals of a, b, c. That closed form is what
//! `transported_fiber_family` returns; `cross_bound_check` then compares the
//! flow-side distance bounds against the jet-side spectral invariant.

use super::spectral::{spectral_invariant, HomologyClass, SpectralGrid};
use super::{FTerm, GenFamily};
use crate::error::{Error, Result};
use crate::fields::{BasisFn, ScalarField, TrigFactor, TrigKind};
use crate::flows::{
    lorentz_length_weighted, shelukhin_length_weighted, simpson, simpson_tail_estimate,
    HamiltonianPath, LengthCfg, PathExpr, TimeProfile,
};
use crate::geom::{wrap_angle, Point, Tangent};
use crate::grid::{extremize_scalar, GridSpec};
use crate::lorentz::{norm_upper, tau_lower, NormEstimate, SearchCfg, TauEstimate};
use crate::manifolds::ModelKind;
use serde::{Deserialize, Serialize};

/// (x, y, theta) -> (q, p, z). Pulls dz - p dq back to
/// cos(theta) dx + sin(theta) dy.
pub fn hodograph(p: &Point) -> Point {
    let (x, y, th) = (p.0[0], p.0[1], p.0[2]);
    let (s, c) = th.sin_cos();
    Point([wrap_angle(th), -x * s + y * c, x * c + y * s, 0.0])
}

/// Inverse chart change: (q, p, z) -> (x, y, theta).
pub fn hodograph_inv(pt: &Point) -> Point {
    let (q, p, z) = (pt.0[0], pt.0[1], pt.0[2]);
    let (s, c) = q.sin_cos();
    Point([z * c - p * s, z * s + p * c, q, 0.0])
}

/// Tangent pushforward of `hodograph` at `p`.
pub fn hodograph_push(p: &Point, v: &Tangent) -> Tangent {
    let (x, y, th) = (p.0[0], p.0[1], p.0[2]);
    let (s, c) = th.sin_cos();
    let (dx, dy, dth) = (v.0[0], v.0[1], v.0[2]);
    let z = x * c + y * s;
    let pp = -x * s + y * c;
    Tangent([dth, -dx * s + dy * c - z * dth, dx * c + dy * s + pp * dth, 0.0])
}

fn integral_profile(p: &TimeProfile) -> Result<TimeProfile> {
    match p {
        TimeProfile::Constant(c) => Ok(TimeProfile::Poly(vec![0.0, *c])),
        TimeProfile::Poly(v) => {
            let mut out = Vec::with_capacity(v.len() + 1);
            out.push(0.0);
            for (i, c) in v.iter().enumerate() {
                out.push(c / (i + 1) as f64);
            }
            Ok(TimeProfile::Poly(out))
        }
        _ => Err(Error::UnsupportedField {
            model: "T3",
            detail: "fiber transport integrates constant or polynomial time profiles only"
                .into(),
        }),
    }
}

/// The moving image of the fiber over the origin, as a family of circle
/// functions whose 1-jets trace the transported curve.
pub fn transported_fiber_family(path: &HamiltonianPath) -> Result<GenFamily> {
    let model = &path.model;
    if !matches!(model.kind, ModelKind::T3 | ModelKind::STR2) {
        return Err(Error::UnsupportedField {
            model: model.kind.name(),
            detail: "fiber transport lives on the cotangent circle bundle".into(),
        });
    }
    if model.co_orient != 1.0 {
        return Err(Error::UnsupportedField {
            model: model.kind.name(),
            detail: "fiber transport needs the standard co-orientation".into(),
        });
    }
    let PathExpr::Sum(terms) = &path.expr else {
        return Err(Error::UnsupportedField {
            model: model.kind.name(),
            detail: "fiber transport needs a plain sum of torus terms".into(),
        });
    };
    let mut fam_terms = Vec::with_capacity(terms.len());
    for term in terms {
        let trig = match &term.basis {
            BasisFn::Const => TrigFactor::cos(0),
            BasisFn::Torus { x: None, y: None, theta } => match theta {
                None => TrigFactor::cos(0),
                Some(f) if f.k == 0 && f.kind == TrigKind::Cos => TrigFactor::cos(0),
                Some(f) if f.k == 1 => *f,
                Some(f) => {
                    return Err(Error::UnsupportedField {
                        model: model.kind.name(),
                        detail: format!(
                            "theta harmonic {} does not translate the base rigidly",
                            f.k
                        ),
                    })
                }
            },
            _ => {
                return Err(Error::UnsupportedField {
                    model: model.kind.name(),
                    detail: "fiber transport needs theta-only dependence".into(),
                })
            }
        };
        fam_terms.push((integral_profile(&term.profile)?, FTerm::circle(1.0, trig)));
    }
    GenFamily::new(0, [0.0; 2], fam_terms, 1.0, 2.0)
}

#[derive(Debug, Clone)]
pub struct CrossBoundCfg {
    pub search: SearchCfg,
    pub grid: SpectralGrid,
    /// Conformal factor for the optional rescaled-form leg. Must be positive.
    pub weight: Option<ScalarField>,
}

impl CrossBoundCfg {
    pub fn standard() -> Self {
        CrossBoundCfg {
            search: SearchCfg::standard(),
            grid: SpectralGrid::default_for(0),
            weight: None,
        }
    }

    pub fn quick() -> Self {
        CrossBoundCfg { search: SearchCfg::quick(), ..CrossBoundCfg::standard() }
    }
}

/// Jet-side sandwich of the endpoint invariant between the time integrals of
/// the fiberwise Hamiltonian extremes.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SpectralLeg {
    pub lower_integral: f64,
    pub point_value: f64,
    pub upper_integral: f64,
    pub tolerance: f64,
}

/// Same witnesses re-measured against a rescaled contact form.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct WeightedLeg {
    /// max/min of the weight over the model, from the certified extremizer.
    pub ratio: f64,
    pub tau_lower: f64,
    pub norm_upper: f64,
}

#[derive(Debug, Clone)]
pub struct CrossBoundReport {
    pub tau: TauEstimate,
    pub norm: NormEstimate,
    /// Allowance for comparing the two bounds: both witnesses end within eta
    /// of the target, and each carries its own quadrature error.
    pub slack: f64,
    pub spectral: Option<SpectralLeg>,
    pub weighted: Option<WeightedLeg>,
}

/// Certify a lower bound for tau and an upper bound for the norm of the same
/// time-1 map and check they are ordered, optionally tying in the jet-side
/// spectral invariant and a rescaled-form comparison.
pub fn cross_bound_check(path: &HamiltonianPath, cfg: &CrossBoundCfg) -> Result<CrossBoundReport> {
    let tau = tau_lower(path, &cfg.search)?;
    let norm = norm_upper(path, &cfg.search)?;
    // Each witness endpoint sits within eta of the target ensemble, and a
    // time adjustment of order eta absorbs the mismatch on either side; the
    // factor two on top is headroom, not sharpness.
    let slack = 4.0 * cfg.search.eta
        + tau.length.error_bound
        + norm.length.error_bound
        + 1e-9;
    if tau.lower_bound > norm.upper_bound + slack {
        return Err(Error::Tolerance {
            needed: slack,
            achieved: tau.lower_bound - norm.upper_bound,
        });
    }

    let spectral = match transported_fiber_family(path) {
        Ok(fam) => {
            let end = fam.at(1.0);
            let point = spectral_invariant(&end, HomologyClass::Point, &cfg.grid)?;
            // Fiberwise extremes of H(t, theta) = c + a cos + b sin are
            // c -/+ hypot(a, b); integrate them over time.
            let n = 128;
            let mut lows = Vec::with_capacity(n + 1);
            let mut highs = Vec::with_capacity(n + 1);
            for i in 0..=n {
                let t = i as f64 / n as f64;
                let terms = path.collect_terms(t).ok_or_else(|| {
                    Error::UnsupportedField {
                        model: path.model.kind.name(),
                        detail: "expected a separable path".into(),
                    }
                })?;
                let (mut c, mut a, mut b) = (0.0, 0.0, 0.0);
                for (coef, basis) in &terms {
                    match basis {
                        BasisFn::Const => c += coef,
                        BasisFn::Torus { theta: None, .. } => c += coef,
                        BasisFn::Torus { theta: Some(f), .. } => match (f.k, f.kind) {
                            (0, TrigKind::Cos) => c += coef,
                            (0, TrigKind::Sin) => {}
                            (1, TrigKind::Cos) => a += coef,
                            (1, TrigKind::Sin) => b += coef,
                            _ => unreachable!("filtered by transported_fiber_family"),
                        },
                        _ => unreachable!("filtered by transported_fiber_family"),
                    }
                }
                let r = a.hypot(b);
                lows.push(c - r);
                highs.push(c + r);
            }
            let lower_integral = simpson(&lows);
            let upper_integral = simpson(&highs);
            let quad = simpson_tail_estimate(&lows).max(simpson_tail_estimate(&highs));
            let tolerance = point.pad + quad + 1e-9;
            if point.value < lower_integral - tolerance
                || point.value > upper_integral + tolerance
            {
                return Err(Error::Tolerance {
                    needed: tolerance,
                    achieved: (lower_integral - point.value)
                        .max(point.value - upper_integral),
                });
            }
            Some(SpectralLeg {
                lower_integral,
                point_value: point.value,
                upper_integral,
                tolerance,
            })
        }
        Err(Error::UnsupportedField { .. }) => None,
        Err(e) => return Err(e),
    };

    let weighted = match &cfg.weight {
        Some(rho) => {
            let gspec = GridSpec::certify_for(&path.model, cfg.search.grid_scale);
            let ext = extremize_scalar(rho, &gspec, None)?;
            let floor = ext.min - ext.error_bound;
            if floor <= 0.0 {
                return Err(Error::Config(format!(
                    "weight must stay positive, certified floor {floor}"
                )));
            }
            let ratio = (ext.max + ext.error_bound) / floor;
            let lcfg = LengthCfg { panels: cfg.search.panels, grid: gspec };
            let wtau = lorentz_length_weighted(&tau.witness, rho, &lcfg)?;
            let wnorm = shelukhin_length_weighted(&norm.witness, rho, &lcfg)?;
            let leg = WeightedLeg {
                ratio,
                tau_lower: (wtau.value - wtau.error_bound).max(0.0),
                norm_upper: wnorm.value + wnorm.error_bound,
            };
            // Same ordering must hold against the rescaled form, with the
            // slack stretched by the worst conformal ratio.
            let wslack = slack * ratio.max(1.0);
            if leg.tau_lower > leg.norm_upper + wslack {
                return Err(Error::Tolerance {
                    needed: wslack,
                    achieved: leg.tau_lower - leg.norm_upper,
                });
            }
            Some(leg)
        }
        None => None,
    };

    Ok(CrossBoundReport { tau, norm, slack, spectral, weighted })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flows::{integrate, PathTerm};
    use std::f64::consts::TAU;
    use crate::manifolds::ContactModel;

    #[test]
    fn chart_change_matches_forms() {
        let t = ContactModel::t3();
        let j = ContactModel::j1s1();
        let pts = [
            Point([0.3, -0.8, 1.1, 0.0]),
            Point([2.0, 0.4, 4.9, 0.0]),
            Point([-1.2, 0.05, 3.0, 0.0]),
        ];
        let vecs = [
            Tangent([0.5, 0.2, -0.7, 0.0]),
            Tangent([-1.0, 0.9, 0.3, 0.0]),
            Tangent([0.0, -0.4, 1.4, 0.0]),
        ];
        for p in &pts {
            for v in &vecs {
                let a1 = t.alpha_eval(p, v).unwrap();
                let a2 = j.alpha_eval(&hodograph(p), &hodograph_push(p, v)).unwrap();
                assert!((a1 - a2).abs() < 1e-12, "{a1} vs {a2}");
            }
        }
    }

    #[test]
    fn chart_change_round_trips() {
        for p in [Point([0.7, -0.2, 2.2, 0.0]), Point([-3.0, 1.5, 5.9, 0.0])] {
            let back = hodograph_inv(&hodograph(&p));
            assert!((back.0[0] - p.0[0]).abs() < 1e-12);
            assert!((back.0[1] - p.0[1]).abs() < 1e-12);
            assert!((wrap_angle(back.0[2]) - wrap_angle(p.0[2])).abs() < 1e-12);
        }
    }

    fn torus_path(terms: Vec<(TimeProfile, Option<TrigFactor>)>) -> HamiltonianPath {
        HamiltonianPath {
            model: ContactModel::t3(),
            expr: PathExpr::Sum(
                terms
                    .into_iter()
                    .map(|(profile, theta)| PathTerm {
                        profile,
                        basis: BasisFn::Torus { x: None, y: None, theta },
                    })
                    .collect(),
            ),
        }
    }

    #[test]
    fn transported_family_matches_integrated_flow() {
        // H = 0.4 + t cos(theta) - 0.3 sin(theta): the time-1 fiber image
        // must be the 1-jet of 0.4 + 0.5 cos q - 0.3 sin q. The flow
        // integration is the independent check.
        let path = torus_path(vec![
            (TimeProfile::Constant(0.4), None),
            (TimeProfile::Poly(vec![0.0, 1.0]), Some(TrigFactor::cos(1))),
            (TimeProfile::Constant(-0.3), Some(TrigFactor::sin(1))),
        ]);
        let fam = transported_fiber_family(&path).unwrap();
        let gf = fam.at(1.0);
        let expect = |q: f64| 0.4 + 0.5 * q.cos() - 0.3 * q.sin();
        for i in 0..32 {
            let q = TAU * i as f64 / 32.0;
            assert!((gf.value(q, &[]) - expect(q)).abs() < 1e-12);
        }

        let fiber: Vec<Point> =
            (0..24).map(|i| Point([0.0, 0.0, TAU * i as f64 / 24.0, 0.0])).collect();
        let trace = integrate(&path, &fiber, 400).unwrap();
        for end in trace.endpoints() {
            let jet_pt = hodograph(end);
            let (q, p, z) = (jet_pt.0[0], jet_pt.0[1], jet_pt.0[2]);
            assert!((z - expect(q)).abs() < 1e-6, "z off by {}", (z - expect(q)).abs());
            let slope = -0.5 * q.sin() - 0.3 * q.cos();
            assert!((p - slope).abs() < 1e-6);
        }
    }

    #[test]
    fn transport_rejects_unsupported_paths() {
        let jet_path = HamiltonianPath {
            model: ContactModel::j1s1(),
            expr: PathExpr::Sum(vec![PathTerm {
                profile: TimeProfile::Constant(1.0),
                basis: BasisFn::Const,
            }]),
        };
        assert!(transported_fiber_family(&jet_path).is_err());

        let sky_path = HamiltonianPath {
            model: ContactModel::sky_t3(),
            expr: PathExpr::Sum(vec![PathTerm {
                profile: TimeProfile::Constant(1.0),
                basis: BasisFn::Const,
            }]),
        };
        assert!(transported_fiber_family(&sky_path).is_err());

        let wobble = torus_path(vec![(
            TimeProfile::Constant(0.5),
            Some(TrigFactor::cos(2)),
        )]);
        assert!(transported_fiber_family(&wobble).is_err());
    }

    #[test]
    fn cross_bounds_on_slow_reeb() {
        let path = torus_path(vec![(TimeProfile::Constant(0.5), None)]);
        let cfg = CrossBoundCfg::quick();
        let report = cross_bound_check(&path, &cfg).unwrap();
        assert!((report.tau.lower_bound - 0.5).abs() < 2e-4, "tau {}", report.tau.lower_bound);
        assert!((report.norm.upper_bound - 0.5).abs() < 2e-4, "norm {}", report.norm.upper_bound);
        let leg = report.spectral.expect("theta-only path has a jet leg");
        assert!((leg.point_value - 0.5).abs() < 1e-6);
        assert!((leg.lower_integral - 0.5).abs() < 1e-9);
        assert!((leg.upper_integral - 0.5).abs() < 1e-9);
    }
}
