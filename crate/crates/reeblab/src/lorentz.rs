//! Certified interval estimates for the distance-like functionals on
//! contactomorphisms presented as flow endpoints.
//!
//! A lower bound for the time-separation tau comes from exhibiting one
//! non-negative path to the target and certifying its Lorentz length; an
//! upper bound for the norm comes from the cheapest path found. Both
//! searches walk the endpoint-preserving family built from the base path:
//! per-term coefficient rescalings (validated against the target ensemble
//! within a matching tolerance), Reeb reparametrization, and, where a
//! certified positive loop exists, loop concatenations.

use crate::error::{Error, Result};
use crate::flows::{
    concatenate, integrate, lorentz_length, reeb_reparametrize, shelukhin_length, HamiltonianPath,
    LengthCfg, LengthEstimate, PathExpr, PathTerm, ReparamCfg,
};
use crate::grid::GridSpec;
use crate::manifolds::{ContactModel, ModelKind};
use crate::optim::{nelder_mead, NmCfg};
use serde::{Deserialize, Serialize};

/// Certified order relation between the endpoints of a witness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    /// Witness minimum certified strictly positive.
    StrictlyPositive,
    /// Witness non-negative within tolerance.
    NonNegative,
    NotCertifiedPositive,
    /// Target indistinguishable from the identity.
    TrivialIdentity,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TauEstimate {
    pub lower_bound: f64,
    pub witness: HamiltonianPath,
    pub relation: Relation,
    /// Endpoint mismatch of the witness flow against the target ensemble.
    pub eta_residual: f64,
    /// Infimum over quadrature nodes of min_M H_t for the witness.
    pub node_min: f64,
    pub length: LengthEstimate,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormEstimate {
    pub upper_bound: f64,
    pub witness: HamiltonianPath,
    pub eta_residual: f64,
    pub length: LengthEstimate,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LoopCertificate {
    pub path: HamiltonianPath,
    pub k: usize,
    /// min over (t, M) of the loop Hamiltonian.
    pub margin: f64,
    pub eta_residual: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct SearchCfg {
    pub seed: u64,
    /// Objective evaluation budget for the coefficient search.
    pub budget: usize,
    /// Endpoint matching tolerance.
    pub eta: f64,
    /// Positive-loop iterates to append on models that have them.
    pub loops: usize,
    /// Certification ensemble size and integration steps.
    pub ensemble: usize,
    pub steps: usize,
    /// Cheap settings used inside the optimizer loop.
    pub probe_ensemble: usize,
    pub coarse_steps: usize,
    pub coarse_panels: usize,
    pub coarse_grid_scale: f64,
    /// Certification quadrature and grid.
    pub panels: usize,
    pub grid_scale: f64,
    pub reparam_samples: usize,
}

impl SearchCfg {
    pub fn standard() -> Self {
        SearchCfg {
            seed: 0,
            budget: 2000,
            eta: 1e-5,
            loops: 0,
            ensemble: 64,
            steps: 400,
            probe_ensemble: 16,
            coarse_steps: 120,
            coarse_panels: 32,
            coarse_grid_scale: 0.5,
            panels: 128,
            grid_scale: 1.0,
            reparam_samples: 2048,
        }
    }

    /// Faster settings for unit tests and smoke runs.
    pub fn quick() -> Self {
        SearchCfg {
            budget: 600,
            steps: 250,
            reparam_samples: 512,
            ..SearchCfg::standard()
        }
    }

    fn certify_length(&self, model: &ContactModel) -> LengthCfg {
        LengthCfg {
            panels: self.panels,
            grid: GridSpec::certify_for(model, self.grid_scale),
        }
    }

    fn reparam(&self, model: &ContactModel) -> ReparamCfg {
        ReparamCfg {
            eps: None,
            delta: 1e-3,
            samples: self.reparam_samples,
            grid: GridSpec::default_for(model, self.grid_scale),
        }
    }
}

/// Tolerance below which a certified length does not count as positive.
const POS_TOL: f64 = 1e-9;

struct Certified {
    path: HamiltonianPath,
    mismatch: f64,
    length: LengthEstimate,
}

/// Step count proportional to the path's top speed, so fast witnesses
/// (loop corrections in particular) keep their integration error under eta.
fn speed_scaled_steps(base_steps: usize, speed: f64) -> usize {
    ((base_steps as f64) * (1.0 + 0.5 * speed.abs())).ceil() as usize
}

fn certify_against(
    path: &HamiltonianPath,
    target: &[crate::geom::Point],
    cfg: &SearchCfg,
    lorentz: bool,
) -> Result<Certified> {
    let model = path.model;
    let lcfg = cfg.certify_length(&model);
    let length = if lorentz {
        lorentz_length(path, &lcfg)?
    } else {
        shelukhin_length(path, &lcfg)?
    };
    let speed = length.node_max.abs().max(length.node_min.abs());
    let ens = model.canonical_ensemble(cfg.ensemble);
    let trace = integrate(path, &ens, speed_scaled_steps(cfg.steps, speed))?;
    if trace.truncated {
        return Err(Error::Truncated("witness flow left the tracked region".into()));
    }
    let ends: Vec<_> = trace.endpoints().iter().map(|p| model.normalize(p)).collect();
    let mismatch = model.ensemble_distance(&ends, target);
    Ok(Certified { path: path.clone(), mismatch, length })
}

fn target_of(base: &HamiltonianPath, cfg: &SearchCfg) -> Result<Vec<crate::geom::Point>> {
    let model = base.model;
    let coarse = LengthCfg {
        panels: cfg.coarse_panels,
        grid: GridSpec::default_for(&model, cfg.coarse_grid_scale),
    };
    let hint = shelukhin_length(base, &coarse)?;
    let ens = model.canonical_ensemble(cfg.ensemble);
    let trace = integrate(base, &ens, speed_scaled_steps(cfg.steps, hint.value + hint.error_bound))?;
    if trace.truncated {
        return Err(Error::Truncated("base flow left the tracked region".into()));
    }
    Ok(trace.endpoints().iter().map(|p| model.normalize(p)).collect())
}

/// Coefficient rescalings of a separable path: every term picks up a
/// factor (1 + theta_j).
fn rescaled(base: &HamiltonianPath, theta: &[f64]) -> Option<HamiltonianPath> {
    if let PathExpr::Sum(terms) = &base.expr {
        if terms.len() != theta.len() {
            return None;
        }
        let scaled: Vec<PathTerm> = terms
            .iter()
            .zip(theta.iter())
            .map(|(tm, th)| PathTerm {
                profile: scale_profile(&tm.profile, 1.0 + th),
                basis: tm.basis.clone(),
            })
            .collect();
        Some(HamiltonianPath { model: base.model, expr: PathExpr::Sum(scaled) })
    } else {
        None
    }
}

fn scale_profile(p: &crate::flows::TimeProfile, s: f64) -> crate::flows::TimeProfile {
    use crate::flows::TimeProfile::*;
    match p {
        Constant(c) => Constant(c * s),
        Poly(a) => Poly(a.iter().map(|c| c * s).collect()),
        Harmonic { amp, k, kind } => Harmonic { amp: amp * s, k: *k, kind: *kind },
        Nodes(v) => Nodes(v.iter().map(|c| c * s).collect()),
    }
}

/// Runs the coefficient search, maximizing (sign = -1) or minimizing
/// (sign = +1) the coarse length subject to the endpoint penalty. Returns
/// the best feasible path found, if any.
fn coefficient_search(
    base: &HamiltonianPath,
    target: &[crate::geom::Point],
    cfg: &SearchCfg,
    minimize_shelukhin: bool,
) -> Option<HamiltonianPath> {
    let terms = match &base.expr {
        PathExpr::Sum(t) if !t.is_empty() && t.len() <= 200 => t.len(),
        _ => return None,
    };
    let model = base.model;
    let probe = model.canonical_ensemble(cfg.probe_ensemble);
    let probe_target: Vec<_> = {
        let trace = integrate(base, &probe, cfg.steps).ok()?;
        trace.endpoints().iter().map(|p| model.normalize(p)).collect()
    };
    let coarse = LengthCfg {
        panels: cfg.coarse_panels,
        grid: GridSpec::default_for(&model, cfg.coarse_grid_scale),
    };
    let scale_hint = {
        let l = shelukhin_length(base, &coarse).ok()?;
        1.0 + l.value.abs()
    };
    let lambda = 10.0 * scale_hint;

    let objective = |theta: &[f64]| -> f64 {
        let path = match rescaled(base, theta) {
            Some(p) => p,
            None => return f64::INFINITY,
        };
        let trace = match integrate(&path, &probe, cfg.coarse_steps) {
            Ok(t) => t,
            Err(_) => return f64::INFINITY,
        };
        let ends: Vec<_> = trace.endpoints().iter().map(|p| model.normalize(p)).collect();
        let mismatch = model.ensemble_distance(&ends, &probe_target);
        let pen = {
            let over = (mismatch / cfg.eta - 1.0).max(0.0);
            lambda * over * over
        };
        let len = if minimize_shelukhin {
            match shelukhin_length(&path, &coarse) {
                Ok(l) => l.value,
                Err(_) => return f64::INFINITY,
            }
        } else {
            match lorentz_length(&path, &coarse) {
                Ok(l) => -l.value,
                Err(_) => return f64::INFINITY,
            }
        };
        len + pen
    };

    let nm = NmCfg {
        budget: cfg.budget,
        init_step: 0.3,
        seed: cfg.seed,
        tol: 1e-9,
    };
    let result = nelder_mead(objective, &vec![0.0; terms], &nm);
    let path = rescaled(base, &result.x)?;
    // Feasibility is judged against the full target at certification
    // accuracy later; here reject plainly infeasible outputs.
    let trace = integrate(&path, &probe, cfg.steps).ok()?;
    let ends: Vec<_> = trace.endpoints().iter().map(|p| model.normalize(p)).collect();
    if model.ensemble_distance(&ends, target_subset(target, probe.len())) > 3.0 * cfg.eta {
        return None;
    }
    Some(path)
}

fn target_subset(target: &[crate::geom::Point], n: usize) -> &[crate::geom::Point] {
    &target[..n.min(target.len())]
}

/// Best certified lower bound for tau between the identity and the time-1
/// flow of the base path. Deterministic for a fixed seed.
pub fn tau_lower(base: &HamiltonianPath, cfg: &SearchCfg) -> Result<TauEstimate> {
    let model = base.model;
    let target = target_of(base, cfg)?;
    let ens = model.canonical_ensemble(cfg.ensemble);
    let trivial = model.ensemble_distance(&ens, &target) <= cfg.eta;

    // Raw candidates; each is reparametrized before certification so a
    // positive-length witness is pointwise positive.
    let mut raws: Vec<HamiltonianPath> = vec![base.clone()];
    if let Some(found) = coefficient_search(base, &target, cfg, false) {
        raws.push(found);
    }
    if cfg.loops > 0 {
        if let Ok(cert) = positive_loop(&model, 1) {
            let mut with_loops = base.clone();
            for _ in 0..cfg.loops {
                with_loops = concatenate(&with_loops, &cert.path)?;
                raws.push(with_loops.clone());
            }
        }
    }

    let rcfg = cfg.reparam(&model);
    let mut best: Option<Certified> = None;
    for raw in &raws {
        let (repar, _) = match reeb_reparametrize(raw, &rcfg) {
            Ok(r) => r,
            Err(_) => continue,
        };
        let cert = match certify_against(&repar, &target, cfg, true) {
            Ok(c) => c,
            Err(_) => continue,
        };
        if cert.mismatch > cfg.eta {
            continue;
        }
        let score = cert.length.value - cert.length.error_bound;
        if best
            .as_ref()
            .map(|b| score > b.length.value - b.length.error_bound)
            .unwrap_or(true)
        {
            best = Some(cert);
        }
    }

    let best = best.ok_or_else(|| {
        Error::Infeasible("no candidate path matched the target within eta".into())
    })?;
    let lower = best.length.value - best.length.error_bound;
    let node_min = best.length.node_min;
    let (lower_bound, relation) = if trivial && lower <= POS_TOL {
        (0.0, Relation::TrivialIdentity)
    } else if lower > POS_TOL {
        let rel = if node_min > POS_TOL {
            Relation::StrictlyPositive
        } else {
            Relation::NonNegative
        };
        (lower, rel)
    } else {
        (0.0, Relation::NotCertifiedPositive)
    };

    Ok(TauEstimate {
        lower_bound,
        witness: best.path,
        relation,
        eta_residual: best.mismatch,
        node_min,
        length: best.length,
    })
}

/// Cheapest certified path to the target: an upper bound for the norm.
pub fn norm_upper(base: &HamiltonianPath, cfg: &SearchCfg) -> Result<NormEstimate> {
    let model = base.model;
    let target = target_of(base, cfg)?;
    let ens = model.canonical_ensemble(cfg.ensemble);

    let mut raws: Vec<HamiltonianPath> = vec![base.clone()];
    if model.ensemble_distance(&ens, &target) <= cfg.eta {
        raws.push(HamiltonianPath::reeb(model, 0.0));
    }
    if let Some(found) = coefficient_search(base, &target, cfg, true) {
        raws.push(found);
    }

    let mut best: Option<Certified> = None;
    for raw in &raws {
        let cert = match certify_against(raw, &target, cfg, false) {
            Ok(c) => c,
            Err(_) => continue,
        };
        if cert.mismatch > cfg.eta {
            continue;
        }
        let score = cert.length.value + cert.length.error_bound;
        if best
            .as_ref()
            .map(|b| score < b.length.value + b.length.error_bound)
            .unwrap_or(true)
        {
            best = Some(cert);
        }
    }

    let best = best.ok_or_else(|| {
        Error::Infeasible("no candidate path matched the target within eta".into())
    })?;
    Ok(NormEstimate {
        upper_bound: best.length.value + best.length.error_bound,
        witness: best.path,
        eta_residual: best.mismatch,
        length: best.length,
    })
}

/// A certified positive loop: k turns of the periodic Reeb flow. Only the
/// sphere model carries one; the others are expected orderable and the
/// request is refused.
pub fn positive_loop(model: &ContactModel, k: usize) -> Result<LoopCertificate> {
    if model.kind != ModelKind::S3 {
        return Err(Error::Refused(format!(
            "no positive loop on {}: the Reeb flow is not periodic there and the model is expected orderable",
            model.name()
        )));
    }
    if k == 0 {
        return Err(Error::Refused("loop iterate count must be positive".into()));
    }
    let period = model.reeb_period().expect("S3 Reeb flow is periodic");
    let total = period * k as f64;
    let path = HamiltonianPath::reeb(*model, total);
    let ens = model.canonical_ensemble(64);
    let steps = (120.0 * total).ceil() as usize;
    let trace = integrate(&path, &ens, steps)?;
    let ends: Vec<_> = trace.endpoints().iter().map(|p| model.normalize(p)).collect();
    let eta_residual = model.ensemble_distance(&ens, &ends);
    if eta_residual > 1e-5 {
        return Err(Error::Tolerance { needed: 1e-5, achieved: eta_residual });
    }
    Ok(LoopCertificate { path, k, margin: total, eta_residual })
}

/// Composes two certified estimates: the concatenated witness bounds tau of
/// the composition from below by the sum. The midpoint of the concatenated
/// flow must match the first witness's endpoint within eta.
pub fn reverse_triangle_check(
    first: &TauEstimate,
    second: &TauEstimate,
    cfg: &SearchCfg,
) -> Result<TauEstimate> {
    let model = first.witness.model;
    if second.witness.model != model {
        return Err(Error::Refused("estimates on different models".into()));
    }
    let cat = concatenate(&first.witness, &second.witness)?;
    let ens = model.canonical_ensemble(cfg.ensemble);

    // The smoothstep warp tops out just under 1.9x the input speed.
    let speed = 1.9
        * first
            .length
            .node_max
            .abs()
            .max(first.length.node_min.abs())
            .max(second.length.node_max.abs())
            .max(second.length.node_min.abs());
    let steps = speed_scaled_steps(cfg.steps, speed);
    let half = cat.restricted(0.5);
    let mid = integrate(&half, &ens, steps)?;
    let first_ends = integrate(&first.witness, &ens, steps)?;
    let mid_n: Vec<_> = mid.endpoints().iter().map(|p| model.normalize(p)).collect();
    let fe_n: Vec<_> = first_ends.endpoints().iter().map(|p| model.normalize(p)).collect();
    let mid_mismatch = model.ensemble_distance(&mid_n, &fe_n);
    if mid_mismatch > cfg.eta {
        return Err(Error::Mismatch { distance: mid_mismatch, eta: cfg.eta });
    }

    let target = {
        let trace = integrate(&cat, &ens, cfg.steps)?;
        trace.endpoints().iter().map(|p| model.normalize(p)).collect::<Vec<_>>()
    };
    let cert = certify_against(&cat, &target, cfg, true)?;
    let lower = cert.length.value - cert.length.error_bound;
    let expected = first.lower_bound + second.lower_bound;
    let slack = first.length.error_bound + second.length.error_bound + cert.length.error_bound + 1e-6;
    if lower < expected - slack {
        return Err(Error::Tolerance { needed: expected - slack, achieved: lower });
    }
    let relation = if cert.length.node_min > POS_TOL {
        Relation::StrictlyPositive
    } else if lower > POS_TOL {
        Relation::NonNegative
    } else {
        Relation::NotCertifiedPositive
    };
    Ok(TauEstimate {
        lower_bound: lower.max(0.0),
        witness: cat,
        relation,
        eta_residual: cert.mismatch,
        node_min: cert.length.node_min,
        length: cert.length,
    })
}

/// Interval transport of a certified bound under a form change with
/// conformal factor in [rho_min, rho_max].
pub fn conjugation_transport(
    estimate: &TauEstimate,
    rho_min: f64,
    rho_max: f64,
) -> Result<(f64, f64)> {
    if rho_min <= 0.0 || rho_max < rho_min {
        return Err(Error::Refused(format!(
            "conformal bracket [{rho_min}, {rho_max}] is not positive"
        )));
    }
    let l = estimate.lower_bound.max(0.0);
    Ok((l * rho_min, l * rho_max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{BasisFn, TrigFactor, TrigKind};
    use crate::flows::TimeProfile;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn reeb_path_lower_bound_is_its_time() {
        let base = HamiltonianPath::reeb(ContactModel::t3(), 0.7);
        let est = tau_lower(&base, &SearchCfg::quick()).unwrap();
        assert!(est.lower_bound >= 0.7 - 1e-6, "lower {}", est.lower_bound);
        // The search may push a rescale to the eta matching boundary, so the
        // certified value can sit up to ~eta above the nominal time.
        assert!(est.lower_bound <= 0.7 + 2e-5, "lower {}", est.lower_bound);
        assert_eq!(est.relation, Relation::StrictlyPositive);
        assert!(est.eta_residual <= 1e-5);
    }

    #[test]
    fn zero_path_gives_trivial_identity() {
        let base = HamiltonianPath::reeb(ContactModel::t3(), 0.0);
        let est = tau_lower(&base, &SearchCfg::quick()).unwrap();
        assert_eq!(est.lower_bound, 0.0);
        assert_eq!(est.relation, Relation::TrivialIdentity);
    }

    #[test]
    fn optimizer_recovers_reeb_from_oscillating_base() {
        // 1 + 0.3 cos(theta) sin(2 pi t): the oscillation generates a
        // translation that integrates to zero, so H = 1 is in-family.
        let base = HamiltonianPath::sum(
            ContactModel::t3(),
            vec![
                PathTerm { profile: TimeProfile::Constant(1.0), basis: BasisFn::Const },
                PathTerm {
                    profile: TimeProfile::Harmonic { amp: 0.3, k: 1, kind: TrigKind::Sin },
                    basis: BasisFn::Torus { x: None, y: None, theta: Some(TrigFactor::cos(1)) },
                },
            ],
        )
        .unwrap();
        let cfg = SearchCfg { budget: 1200, ..SearchCfg::quick() };
        let est = tau_lower(&base, &cfg).unwrap();
        // Reparametrization alone reaches 1 - 0.6/pi; the search should
        // cancel the oscillation and get within a whisker of 1.
        assert!(
            est.lower_bound >= 1.0 - 1e-3,
            "lower {} vs floor {}",
            est.lower_bound,
            1.0 - 0.6 / PI
        );
        assert_eq!(est.relation, Relation::StrictlyPositive);
    }

    #[test]
    fn norm_upper_of_reeb_is_tight() {
        let base = HamiltonianPath::reeb(ContactModel::j1s1(), 0.5);
        let est = norm_upper(&base, &SearchCfg::quick()).unwrap();
        // Eta matching lets the minimizer shave up to ~eta off the nominal time.
        assert!(est.upper_bound >= 0.5 - 2e-5, "upper {}", est.upper_bound);
        assert!(est.upper_bound <= 0.5 + 1e-6, "upper {}", est.upper_bound);
    }

    #[test]
    fn norm_upper_of_identity_pair_is_tiny() {
        let model = ContactModel::t3();
        let fwd = HamiltonianPath::reeb(model, 0.5);
        let back = fwd.reversed();
        let base = concatenate(&fwd, &back).unwrap();
        let est = norm_upper(&base, &SearchCfg::quick()).unwrap();
        assert!(est.upper_bound <= 1e-3, "upper {}", est.upper_bound);
    }

    #[test]
    fn positive_loop_on_sphere_certifies() {
        let model = ContactModel::s3();
        let cert = positive_loop(&model, 1).unwrap();
        assert_abs_diff_eq!(cert.margin, 2.0 * PI, epsilon = 1e-12);
        assert!(cert.eta_residual <= 1e-5);
        let cert3 = positive_loop(&model, 3).unwrap();
        assert_abs_diff_eq!(cert3.margin, 6.0 * PI, epsilon = 1e-12);
    }

    #[test]
    fn positive_loop_refused_off_sphere() {
        assert!(positive_loop(&ContactModel::t3(), 1).is_err());
        assert!(positive_loop(&ContactModel::j1s1(), 1).is_err());
    }

    #[test]
    fn loop_corrections_grow_tau_of_identity() {
        let model = ContactModel::s3();
        let base = HamiltonianPath::reeb(model, 0.0);
        let mut prev = 0.0;
        for loops in [1usize, 2] {
            let cfg = SearchCfg { loops, budget: 0, ..SearchCfg::quick() };
            let est = tau_lower(&base, &cfg).unwrap();
            let expect = 2.0 * PI * loops as f64;
            assert!(
                (est.lower_bound - expect).abs() <= 1e-3,
                "loops {loops}: {} vs {}",
                est.lower_bound,
                expect
            );
            assert!(est.lower_bound > prev);
            prev = est.lower_bound;
        }
    }

    #[test]
    fn triangle_composition_adds_bounds() {
        let cfg = SearchCfg::quick();
        let a = tau_lower(&HamiltonianPath::reeb(ContactModel::t3(), 0.3), &cfg).unwrap();
        let b = tau_lower(&HamiltonianPath::reeb(ContactModel::t3(), 0.4), &cfg).unwrap();
        let c = reverse_triangle_check(&a, &b, &cfg).unwrap();
        assert_abs_diff_eq!(c.lower_bound, 0.7, epsilon = 1e-4);
        let slack = a.length.error_bound + b.length.error_bound + c.length.error_bound;
        assert!(
            c.lower_bound >= a.lower_bound + b.lower_bound - slack - 1e-9,
            "concat {} vs parts {} + {} (slack {:.2e})",
            c.lower_bound,
            a.lower_bound,
            b.lower_bound,
            slack
        );
    }

    #[test]
    fn conjugation_transport_brackets() {
        let base = HamiltonianPath::reeb(ContactModel::t3(), 0.7);
        let est = tau_lower(&base, &SearchCfg::quick()).unwrap();
        let (lo, hi) = conjugation_transport(&est, 1.0, 1.0).unwrap();
        assert_abs_diff_eq!(lo, est.lower_bound, epsilon = 1e-15);
        assert_abs_diff_eq!(hi, est.lower_bound, epsilon = 1e-15);
        let (lo2, hi2) = conjugation_transport(&est, 0.5, 1.0).unwrap();
        assert!(hi2 / lo2 <= 2.0 + 1e-12);
        assert!(conjugation_transport(&est, -1.0, 1.0).is_err());
    }
}
