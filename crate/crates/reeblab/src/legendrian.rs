//! Legendrian curves, their isotopies, and the length functionals
//! restricted to them.
//!
//! A Legendrian here is a sampled link: one or more closed curves tangent
//! to the contact structure. The shipped families are torus fibers of T3
//! and STR2, jet-space graphs j1(f) = (q, f'(q), f(q)), and great-circle
//! links on S3. An ambient Hamiltonian path drags a Legendrian along its
//! flow; the restricted Lorentz length integrates the per-time minimum of
//! the Hamiltonian over the moving curve, which dominates nothing and is
//! dominated by nothing a priori except the ambient minimum from below.
//!
//! Two optimization layers sit on top. `chekanov_upper` searches a small
//! family of ambient Hamiltonians for one whose time-1 flow carries one
//! Legendrian onto another within a Hausdorff budget and reports its
//! Shelukhin length, a certified upper bound for the corresponding
//! infimum. `loop_from_cheap_path` turns an isotopy that reaches the
//! unit-negative Reeb image of its start at Shelukhin cost below one into
//! a positive loop of Legendrians, by left-composing with the Reeb flow.
//! Read contrapositively: wherever no positive Legendrian loop exists,
//! every isotopy from L to its unit-negative Reeb image costs at least
//! one, which is exactly what makes the Legendrian distance on such
//! classes non-degenerate.

use crate::error::{Error, Result};
use crate::fields::{BasisFn, FiberProfile, ScalarField, TrigFactor};
use crate::flows::{
    integrate, shelukhin_length, simpson, simpson_tail_estimate, HamiltonianPath, LengthCfg,
    PathExpr, PathTerm, ShiftTable, TimeProfile,
};
use crate::geom::{angle_diff, Point, Tangent};
use crate::manifolds::{ContactModel, ModelKind};
use crate::optim::{nelder_mead, NmCfg};
use serde::{Deserialize, Serialize};

// ---------------------------------------------------------------------------
// Sampled Legendrians
// ---------------------------------------------------------------------------

/// A sampled Legendrian link: closed curves stored as point lists.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Legendrian {
    pub components: Vec<Vec<Point>>,
}

impl Legendrian {
    /// The fiber circle {(x, y)} x S1 of T3 or STR2.
    pub fn torus_fiber(model: &ContactModel, x: f64, y: f64, n: usize) -> Result<Self> {
        if !matches!(model.kind, ModelKind::T3 | ModelKind::STR2) {
            return Err(Error::Refused("torus fiber on a non-torus model".into()));
        }
        if n < 8 {
            return Err(Error::Config("fiber needs at least 8 samples".into()));
        }
        let pts = (0..n)
            .map(|i| {
                let th = std::f64::consts::TAU * i as f64 / n as f64;
                model.normalize(&Point([x, y, th, 0.0]))
            })
            .collect();
        Ok(Legendrian { components: vec![pts] })
    }

    /// The graph (q, f'(q), f(q)) in J1S1.
    pub fn jet_graph(n: usize, f: impl Fn(f64) -> f64, df: impl Fn(f64) -> f64) -> Self {
        let pts = (0..n)
            .map(|i| {
                let q = std::f64::consts::TAU * i as f64 / n as f64;
                Point([q, df(q), f(q), 0.0])
            })
            .collect();
        Legendrian { components: vec![pts] }
    }

    pub fn jet_zero(n: usize) -> Self {
        Self::jet_graph(n, |_| 0.0, |_| 0.0)
    }

    /// The great circle (cos s, 0, 0, sin s) on S3, tangent to the contact
    /// structure because its velocity pairs to zero with the Reeb direction.
    pub fn great_circle(n: usize) -> Self {
        let pts = (0..n)
            .map(|i| {
                let s = std::f64::consts::TAU * i as f64 / n as f64;
                Point([s.cos(), 0.0, 0.0, s.sin()])
            })
            .collect();
        Legendrian { components: vec![pts] }
    }

    /// k Reeb-rotated copies of the great circle, spaced pi/k apart. The
    /// circle is Reeb-periodic with set period pi, so the link is invariant
    /// under the time-(pi/k) Reeb flow; an even sample count keeps that
    /// invariance exact at the sample level (antipodal samples coincide).
    pub fn hopf_link(k: usize, n: usize) -> Result<Self> {
        if k == 0 || n % 2 != 0 || n < 8 {
            return Err(Error::Config("hopf link needs k >= 1 and an even sample count >= 8".into()));
        }
        let model = ContactModel::s3();
        let base = Self::great_circle(n);
        let components = (0..k)
            .map(|j| {
                let s = std::f64::consts::PI * j as f64 / k as f64;
                base.components[0].iter().map(|p| model.reeb_flow(p, s)).collect()
            })
            .collect();
        Ok(Legendrian { components })
    }

    /// From a jet-space critical locus: chart triples become J1S1 points.
    pub fn from_jet_samples(components: &[Vec<[f64; 3]>]) -> Self {
        Legendrian {
            components: components
                .iter()
                .map(|c| c.iter().map(|s| Point([s[0], s[1], s[2], 0.0])).collect())
                .collect(),
        }
    }

    /// Image under the closed-form time-s Reeb flow.
    pub fn reeb_image(&self, model: &ContactModel, s: f64) -> Legendrian {
        Legendrian {
            components: self
                .components
                .iter()
                .map(|c| c.iter().map(|p| model.reeb_flow(p, s)).collect())
                .collect(),
        }
    }

    pub fn sample_count(&self) -> usize {
        self.components.iter().map(Vec::len).sum()
    }

    fn flat(&self) -> Vec<Point> {
        self.components.iter().flatten().copied().collect()
    }

    fn sizes(&self) -> Vec<usize> {
        self.components.iter().map(Vec::len).collect()
    }

    /// Every stride-th sample of every component.
    pub fn subsampled(&self, stride: usize) -> Legendrian {
        let stride = stride.max(1);
        Legendrian {
            components: self
                .components
                .iter()
                .map(|c| c.iter().step_by(stride).copied().collect())
                .collect(),
        }
    }

    /// Symmetric point-set Hausdorff distance in the model's chart metric.
    /// Resolution-limited: distances below the sample spacing of the denser
    /// curve are not meaningful.
    pub fn hausdorff(&self, model: &ContactModel, other: &Legendrian) -> f64 {
        let a = self.flat();
        let b = other.flat();
        directed_hausdorff(model, &a, &b).max(directed_hausdorff(model, &b, &a))
    }
}

fn directed_hausdorff(model: &ContactModel, a: &[Point], b: &[Point]) -> f64 {
    a.iter()
        .map(|x| b.iter().map(|y| model.point_distance(x, y)).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
}

fn regroup(sizes: &[usize], row: &[Point]) -> Vec<Vec<Point>> {
    let mut out = Vec::with_capacity(sizes.len());
    let mut at = 0;
    for &s in sizes {
        out.push(row[at..at + s].to_vec());
        at += s;
    }
    out
}

// ---------------------------------------------------------------------------
// Isotopies
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub struct LegCfg {
    /// Flow steps; one trace row per step plus the initial row.
    pub steps: usize,
    /// Cap on |alpha(dl/dt) - H| along the traces.
    pub speed_tol: f64,
}

impl Default for LegCfg {
    fn default() -> Self {
        LegCfg { steps: 400, speed_tol: 1e-6 }
    }
}

/// A Legendrian dragged along a Hamiltonian flow, with the restriction of
/// the Hamiltonian to the moving curve tabulated per time slice.
#[derive(Debug, Clone)]
pub struct LegIsotopy {
    pub path: HamiltonianPath,
    pub initial: Legendrian,
    pub times: Vec<f64>,
    /// Per time slice, the components of the moved curve.
    pub curves: Vec<Vec<Vec<Point>>>,
    /// Min over the curve samples of H_t, per slice.
    pub min_track: Vec<f64>,
    pub max_track: Vec<f64>,
    /// Half the largest jump of H between adjacent curve samples, per
    /// slice: first-order bound on what the sampling can miss.
    pub refine_track: Vec<f64>,
    /// Max over interior slices of |alpha(dl/dt) - H| with a fourth-order
    /// stencil in t; consistency of the traces with the ambient data.
    pub speed_residual: f64,
}

impl LegIsotopy {
    pub fn final_curve(&self) -> Legendrian {
        Legendrian { components: self.curves.last().unwrap().clone() }
    }

    fn steps(&self) -> usize {
        self.times.len() - 1
    }
}

fn angular_mask(kind: ModelKind) -> [bool; 4] {
    match kind {
        ModelKind::T3 => [true, true, true, false],
        ModelKind::STR2 => [false, false, true, false],
        ModelKind::J1S1 => [true, false, false, false],
        ModelKind::S3 => [false, false, false, false],
    }
}

/// Displacement of `q` from the center `c`, shortest-wrap in the angular
/// coordinates so finite differences survive chart wrapping.
fn displacement(mask: &[bool; 4], q: &Point, c: &Point) -> [f64; 4] {
    let mut d = [0.0; 4];
    for i in 0..4 {
        d[i] = if mask[i] { angle_diff(q.0[i], c.0[i]) } else { q.0[i] - c.0[i] };
    }
    d
}

/// Drags the Legendrian along the path and tabulates the restricted
/// Hamiltonian. Fails when a trace leaves the tracked region or when the
/// traced velocity stops agreeing with the Hamiltonian through the contact
/// form, which would make every restricted quantity meaningless.
pub fn leg_isotopy(path: &HamiltonianPath, initial: &Legendrian, cfg: &LegCfg) -> Result<LegIsotopy> {
    if cfg.steps < 16 || cfg.steps % 2 != 0 {
        return Err(Error::Config("leg isotopy needs an even step count >= 16".into()));
    }
    if initial.sample_count() == 0 {
        return Err(Error::Config("empty Legendrian".into()));
    }
    let model = path.model;
    let sizes = initial.sizes();
    let flat = initial.flat();
    let trace = integrate(path, &flat, cfg.steps)?;
    if trace.truncated {
        return Err(Error::Truncated("Legendrian trace left the tracked fiber region".into()));
    }

    let nslices = trace.times.len();
    let mut curves = Vec::with_capacity(nslices);
    let mut min_track = Vec::with_capacity(nslices);
    let mut max_track = Vec::with_capacity(nslices);
    let mut refine_track = Vec::with_capacity(nslices);
    for (ti, row) in trace.points.iter().enumerate() {
        let t = trace.times[ti];
        let hs: Vec<f64> = row.iter().map(|p| path.value(t, p)).collect();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &h in &hs {
            lo = lo.min(h);
            hi = hi.max(h);
        }
        let mut jump: f64 = 0.0;
        let mut at = 0;
        for &s in &sizes {
            for j in 0..s {
                let a = hs[at + j];
                let b = hs[at + (j + 1) % s];
                jump = jump.max((a - b).abs());
            }
            at += s;
        }
        min_track.push(lo);
        max_track.push(hi);
        refine_track.push(0.5 * jump);
        curves.push(regroup(&sizes, row));
    }

    // Fourth-order centered stencil on the traces, applied to shortest-wrap
    // displacements so only the honest motion enters.
    let mask = angular_mask(model.kind);
    let h = trace.step;
    let mut speed_residual: f64 = 0.0;
    for ti in 2..nslices - 2 {
        let t = trace.times[ti];
        for j in 0..flat.len() {
            let c = &trace.points[ti][j];
            let dm2 = displacement(&mask, &trace.points[ti - 2][j], c);
            let dm1 = displacement(&mask, &trace.points[ti - 1][j], c);
            let dp1 = displacement(&mask, &trace.points[ti + 1][j], c);
            let dp2 = displacement(&mask, &trace.points[ti + 2][j], c);
            let mut v = [0.0; 4];
            for i in 0..4 {
                v[i] = (-dp2[i] + 8.0 * dp1[i] - 8.0 * dm1[i] + dm2[i]) / (12.0 * h);
            }
            let pairing = model.alpha_eval(c, &Tangent(v))?;
            let res = (pairing - path.value(t, c)).abs();
            speed_residual = speed_residual.max(res);
        }
    }
    if speed_residual > cfg.speed_tol {
        return Err(Error::Regularity(format!(
            "traced velocity disagrees with the Hamiltonian: residual {:.3e} exceeds {:.3e}",
            speed_residual, cfg.speed_tol
        )));
    }

    Ok(LegIsotopy {
        path: path.clone(),
        initial: initial.clone(),
        times: trace.times,
        curves,
        min_track,
        max_track,
        refine_track,
        speed_residual,
    })
}

// ---------------------------------------------------------------------------
// Restricted length and reparametrization
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LegLength {
    pub value: f64,
    /// Simpson tail plus the worst per-slice curve-refinement bound.
    pub error_bound: f64,
}

/// Integral over t of the minimum of H_t over the moving curve.
pub fn leg_lorentz_length(iso: &LegIsotopy) -> LegLength {
    let value = simpson(&iso.min_track);
    let refine = iso.refine_track.iter().fold(0.0f64, |a, &b| a.max(b));
    LegLength { value, error_bound: simpson_tail_estimate(&iso.min_track) + refine }
}

/// Left-composes with the Reeb flow so the per-time curve minimum becomes
/// uniformly the restricted Lorentz length, within `delta`. The shift rate
/// is the defect of the sampled minimum track; its integral vanishes by
/// construction, so the endpoint curve is unchanged. The reparametrized
/// isotopy is re-traced and the uniformity is checked a posteriori.
pub fn leg_reparametrize(iso: &LegIsotopy, delta: f64) -> Result<LegIsotopy> {
    if delta <= 0.0 {
        return Err(Error::Config("uniformity budget must be positive".into()));
    }
    let eps = leg_lorentz_length(iso).value;
    let n = iso.steps();
    let dt = 1.0 / n as f64;

    let mut dtau: Vec<f64> = iso.min_track.iter().map(|m| eps - m).collect();
    let mut tau = vec![0.0; n + 1];
    for i in 1..=n {
        tau[i] = tau[i - 1] + 0.5 * dt * (dtau[i - 1] + dtau[i]);
    }
    // The trapezoid endpoint differs from the Simpson value of eps by the
    // quadrature mismatch; shave it off uniformly so tau(1) = 0 exactly and
    // the endpoint curve is preserved.
    let correction = tau[n];
    for d in dtau.iter_mut() {
        *d -= correction;
    }
    for i in 1..=n {
        tau[i] = tau[i - 1] + 0.5 * dt * (dtau[i - 1] + dtau[i]);
    }

    let shifted = HamiltonianPath {
        model: iso.path.model,
        expr: PathExpr::ReebShift {
            base: Box::new(iso.path.expr.clone()),
            table: ShiftTable { tau, dtau },
        },
    };
    let out = leg_isotopy(&shifted, &iso.initial, &LegCfg { steps: n, ..Default::default() })?;

    let worst = out
        .min_track
        .iter()
        .map(|m| (m - eps).abs())
        .fold(0.0f64, f64::max);
    if worst > delta {
        return Err(Error::Tolerance { needed: delta, achieved: worst });
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Chekanov-type upper bounds
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub struct ChekanovCfg {
    pub seed: u64,
    /// Hausdorff matching budget for the certificate.
    pub eta: f64,
    /// Objective evaluations across both penalty rounds.
    pub budget: usize,
    /// Flow steps for the search (quartered) and the final certificate.
    pub steps: usize,
    /// Curve subsampling stride during the search.
    pub stride: usize,
    /// Initial penalty weight; the second round multiplies it by 32.
    pub penalty: f64,
}

impl ChekanovCfg {
    pub fn standard(seed: u64) -> Self {
        ChekanovCfg { seed, eta: 1e-3, budget: 400, steps: 400, stride: 4, penalty: 10.0 }
    }

    pub fn quick(seed: u64) -> Self {
        ChekanovCfg { seed, eta: 1e-3, budget: 240, steps: 200, stride: 8, penalty: 10.0 }
    }
}

#[derive(Debug, Clone)]
pub struct ChekanovEstimate {
    /// Shelukhin length of the witness: the exact sup norm of the trig
    /// family, constant in time. An upper bound for the Legendrian distance
    /// only when `certified` is set.
    pub upper: f64,
    pub certified: bool,
    /// Hausdorff distance between the witness endpoint and the target.
    pub residual: f64,
    pub eta: f64,
    pub witness: HamiltonianPath,
    pub evals: usize,
}

/// The search family: rigid translations of the fiber coordinate circle.
/// On the torus models the theta-only Hamiltonians c0 + c1 cos + c2 sin
/// move fibers rigidly; on J1S1 the same trig span in q under a fiber bump
/// moves jet graphs. Their sup norm is |c0| + |(c1, c2)| in closed form,
/// which the search uses; the certificate re-measures on the grid.
fn chekanov_basis(kind: ModelKind) -> Result<Vec<BasisFn>> {
    match kind {
        ModelKind::T3 | ModelKind::STR2 => Ok(vec![
            BasisFn::Const,
            BasisFn::Torus { x: None, y: None, theta: Some(TrigFactor::cos(1)) },
            BasisFn::Torus { x: None, y: None, theta: Some(TrigFactor::sin(1)) },
        ]),
        ModelKind::J1S1 => {
            let bump = FiberProfile::new(0, 2.0);
            Ok(vec![
                BasisFn::Jet { q: None, fiber: Some(bump) },
                BasisFn::Jet { q: Some(TrigFactor::cos(1)), fiber: Some(bump) },
                BasisFn::Jet { q: Some(TrigFactor::sin(1)), fiber: Some(bump) },
            ])
        }
        ModelKind::S3 => Err(Error::Refused("no shipped Chekanov family on S3".into())),
    }
}

fn family_path(model: ContactModel, basis: &[BasisFn], c: &[f64]) -> Result<HamiltonianPath> {
    let terms = basis
        .iter()
        .zip(c)
        .map(|(b, &coef)| PathTerm { profile: TimeProfile::Constant(coef), basis: b.clone() })
        .collect();
    HamiltonianPath::sum(model, terms)
}

/// Upper bound for the Legendrian distance from `from` to `to`: minimizes
/// the sup norm of an ambient family under a penalty on the endpoint
/// mismatch, then certifies the best candidate at full resolution. A
/// result with `certified` unset is a failed match, not a bound.
pub fn chekanov_upper(
    model: &ContactModel,
    from: &Legendrian,
    to: &Legendrian,
    cfg: &ChekanovCfg,
) -> Result<ChekanovEstimate> {
    let basis = chekanov_basis(model.kind)?;
    let coarse_from = from.subsampled(cfg.stride);
    let coarse_to = to.subsampled(cfg.stride);
    let coarse_flat = coarse_from.flat();
    let coarse_sizes = coarse_from.sizes();
    let coarse_steps = (cfg.steps / 4).max(50);
    let model = *model;

    let mut evals = 0usize;
    let mut objective = |c: &[f64], weight: f64| -> f64 {
        evals += 1;
        let sup = c[0].abs() + c[1].hypot(c[2]);
        let Ok(path) = family_path(model, &basis, c) else {
            return 1e9;
        };
        let Ok(trace) = integrate(&path, &coarse_flat, coarse_steps) else {
            return 1e9;
        };
        if trace.truncated {
            return 1e9;
        }
        let end = Legendrian { components: regroup(&coarse_sizes, trace.endpoints()) };
        let d = end.hausdorff(&model, &coarse_to);
        sup + weight * (d - 0.5 * cfg.eta).max(0.0)
    };

    // Two penalty rounds: a soft one to find the basin, a hard one to pin
    // the match below the certificate budget.
    let mut best = vec![0.0; basis.len()];
    let weights = [cfg.penalty, 32.0 * cfg.penalty];
    for (round, &w) in weights.iter().enumerate() {
        let nm = nelder_mead(
            |c| objective(c, w),
            &best,
            &NmCfg {
                budget: cfg.budget / weights.len(),
                init_step: if round == 0 { 0.5 } else { 0.05 },
                seed: cfg.seed.wrapping_add(round as u64),
                tol: 1e-12,
            },
        );
        best = nm.x;
    }

    let witness = family_path(model, &basis, &best)?;
    let trace = integrate(&witness, &from.flat(), cfg.steps)?;
    let end = Legendrian { components: regroup(&from.sizes(), trace.endpoints()) };
    let residual = end.hausdorff(&model, to);
    let certified = residual <= cfg.eta && !trace.truncated;
    // Time-constant trig family: the Shelukhin integral collapses to the sup
    // norm, and the sup of c0 + c1 cos + c2 sin (under a unit-peak bump on
    // J1S1) is |c0| + |(c1, c2)| exactly. No grid, no quadrature.
    let upper = best[0].abs() + best[1].hypot(best[2]);
    Ok(ChekanovEstimate { upper, certified, residual, eta: cfg.eta, witness, evals })
}

// ---------------------------------------------------------------------------
// Positive loops from cheap paths
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub struct LoopCfg {
    /// Hausdorff budget for the endpoint and closure checks.
    pub eta: f64,
    /// Uniformity budget handed to the reparametrization.
    pub delta: f64,
    pub length: LengthCfg,
}

impl LoopCfg {
    pub fn standard(model: &ContactModel) -> Self {
        LoopCfg { eta: 1e-3, delta: 1e-3, length: LengthCfg::certify(model) }
    }
}

/// A certified positive loop of Legendrians.
#[derive(Debug, Clone)]
pub struct LoopCertificate {
    /// Hamiltonian of the loop: the input left-composed with the unit-time
    /// Reeb rotation, 1 + H_t after the flow pullback.
    pub path: HamiltonianPath,
    /// Min over time and over the moving curve of the loop Hamiltonian.
    pub margin: f64,
    /// One minus the certified Shelukhin length of the input.
    pub eps: f64,
    pub shelukhin: f64,
    /// Input endpoint vs the unit-negative Reeb image of the start.
    pub endpoint_residual: f64,
    /// Loop endpoint vs the starting curve.
    pub closure_residual: f64,
    pub iso: LegIsotopy,
}

/// Builds a positive Legendrian loop out of an isotopy that reaches the
/// unit-negative Reeb image of its starting curve at Shelukhin cost below
/// one. The input is first uniformized so its per-time curve minimum is
/// its restricted Lorentz length l; left-composing with the Reeb flow then
/// gives the loop Hamiltonian 1 + H_t pulled back, whose curve minimum is
/// 1 + l >= eps uniformly, eps being one minus the Shelukhin cost.
///
/// Contrapositive reading: on a Legendrian class with no positive loop,
/// no input can satisfy both preconditions, so every isotopy ending on the
/// unit-negative Reeb image costs at least one. That floor is what makes
/// the Legendrian Lorentzian distance non-degenerate on such classes.
pub fn loop_from_cheap_path(iso: &LegIsotopy, cfg: &LoopCfg) -> Result<LoopCertificate> {
    let model = iso.path.model;
    let shel = shelukhin_length(&iso.path, &cfg.length)?;
    let shelukhin = shel.value + shel.error_bound;
    if shelukhin >= 1.0 - cfg.delta {
        return Err(Error::Refused(format!(
            "input Shelukhin length {:.6} is not certifiably below one",
            shelukhin
        )));
    }
    let eps = 1.0 - shelukhin;

    let target = iso.initial.reeb_image(&model, -1.0);
    let endpoint_residual = iso.final_curve().hausdorff(&model, &target);
    if endpoint_residual > cfg.eta {
        return Err(Error::Infeasible(format!(
            "endpoint misses the unit-negative Reeb image by {:.3e} (eta {:.3e})",
            endpoint_residual, cfg.eta
        )));
    }

    let uniform = leg_reparametrize(iso, cfg.delta)?;

    // Left-composition with the Reeb flow is a Reeb shift with the identity
    // table; the cubic interpolant reproduces linear data exactly.
    let n = uniform.steps();
    let tau: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
    let dtau = vec![1.0; n + 1];
    let loop_path = HamiltonianPath {
        model,
        expr: PathExpr::ReebShift {
            base: Box::new(uniform.path.expr.clone()),
            table: ShiftTable { tau, dtau },
        },
    };

    let liso = leg_isotopy(&loop_path, &iso.initial, &LegCfg { steps: n, ..Default::default() })?;
    let margin = liso.min_track.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    let closure_residual = liso.final_curve().hausdorff(&model, &iso.initial);
    if closure_residual > cfg.eta {
        return Err(Error::Infeasible(format!(
            "loop fails to close: residual {:.3e} (eta {:.3e})",
            closure_residual, cfg.eta
        )));
    }
    if margin <= cfg.delta {
        return Err(Error::Tolerance { needed: cfg.delta, achieved: margin });
    }

    Ok(LoopCertificate {
        path: loop_path,
        margin,
        eps,
        shelukhin,
        endpoint_residual,
        closure_residual,
        iso: liso,
    })
}

/// Scalar field wrapper for ambient comparisons in tests and reports.
pub fn restricted_min_of_field(model: &ContactModel, field: &ScalarField, curve: &Legendrian) -> f64 {
    let _ = model;
    curve
        .components
        .iter()
        .flatten()
        .map(|p| field.terms.iter().map(|(c, b)| c * b.eval(p)).sum::<f64>())
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flows::lorentz_length;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, TAU};

    fn t3() -> ContactModel {
        ContactModel::t3()
    }

    fn theta_path(model: ContactModel, c: f64, a: f64, b: f64) -> HamiltonianPath {
        HamiltonianPath::sum(
            model,
            vec![
                PathTerm { profile: TimeProfile::Constant(c), basis: BasisFn::Const },
                PathTerm {
                    profile: TimeProfile::Constant(a),
                    basis: BasisFn::Torus { x: None, y: None, theta: Some(TrigFactor::cos(1)) },
                },
                PathTerm {
                    profile: TimeProfile::Constant(b),
                    basis: BasisFn::Torus { x: None, y: None, theta: Some(TrigFactor::sin(1)) },
                },
            ],
        )
        .unwrap()
    }

    #[test]
    fn great_circle_and_link_are_legendrian() {
        let model = ContactModel::s3();
        for i in 0..64 {
            let s = TAU * i as f64 / 64.0;
            let p = Point([s.cos(), 0.0, 0.0, s.sin()]);
            let v = Tangent([-s.sin(), 0.0, 0.0, s.cos()]);
            let pairing = model.alpha_eval(&p, &v).unwrap();
            assert!(pairing.abs() < 1e-15);
        }
        let link = Legendrian::hopf_link(4, 64).unwrap();
        let rotated = link.reeb_image(&model, FRAC_PI_4);
        assert!(link.hausdorff(&model, &rotated) < 1e-12);
    }

    #[test]
    fn reeb_transport_of_fiber_costs_its_time() {
        let model = t3();
        let fiber = Legendrian::torus_fiber(&model, 1.0, 2.0, 256).unwrap();
        let t = 0.7;
        let path = HamiltonianPath::reeb(model, t);
        let iso = leg_isotopy(&path, &fiber, &LegCfg::default()).unwrap();
        let len = leg_lorentz_length(&iso);
        assert!((len.value - t).abs() < 1e-12);
        assert!(len.value - len.error_bound >= t - 1e-6);
        assert!(len.value - len.error_bound <= t);
    }

    #[test]
    fn zero_path_costs_nothing() {
        let model = t3();
        let fiber = Legendrian::torus_fiber(&model, 0.3, 0.4, 128).unwrap();
        let path = HamiltonianPath::reeb(model, 0.0);
        let iso = leg_isotopy(&path, &fiber, &LegCfg::default()).unwrap();
        let len = leg_lorentz_length(&iso);
        assert_eq!(len.value, 0.0);
        assert!(len.error_bound < 1e-15);
    }

    #[test]
    fn fiber_sweep_minimum_is_half() {
        // H = 1 + 0.5 cos(theta) freezes theta, so the fiber never moves and
        // the restricted minimum is the closed-form 0.5 at theta = pi.
        let model = t3();
        let fiber = Legendrian::torus_fiber(&model, 0.0, 0.0, 256).unwrap();
        let path = theta_path(model, 1.0, 0.5, 0.0);
        let iso = leg_isotopy(&path, &fiber, &LegCfg::default()).unwrap();
        let len = leg_lorentz_length(&iso);
        assert!((len.value - 0.5).abs() < 1e-12);
        let first = &iso.curves[0][0];
        let last = &iso.curves.last().unwrap()[0];
        let moved: f64 = first
            .iter()
            .zip(last)
            .map(|(a, b)| model.point_distance(a, b))
            .fold(0.0, f64::max);
        assert!(moved > 0.3, "fiber should translate in (x, y)");
        for (a, b) in first.iter().zip(last) {
            assert!(angle_diff(a.0[2], b.0[2]).abs() < 1e-12, "theta must stay frozen");
        }
    }

    #[test]
    fn curve_minimum_dominates_ambient() {
        let model = t3();
        let path = HamiltonianPath::sum(
            model,
            vec![
                PathTerm { profile: TimeProfile::Constant(0.9), basis: BasisFn::Const },
                PathTerm {
                    profile: TimeProfile::Poly(vec![0.1, 0.3]),
                    basis: BasisFn::Torus { x: None, y: None, theta: Some(TrigFactor::cos(1)) },
                },
                PathTerm {
                    profile: TimeProfile::Constant(0.2),
                    basis: BasisFn::Torus { x: Some(TrigFactor::sin(1)), y: None, theta: None },
                },
            ],
        )
        .unwrap();
        let fiber = Legendrian::torus_fiber(&model, 2.0, 0.5, 256).unwrap();
        let iso = leg_isotopy(&path, &fiber, &LegCfg::default()).unwrap();
        let leg = leg_lorentz_length(&iso);
        let amb = lorentz_length(&path, &LengthCfg::standard(&model)).unwrap();
        assert!(
            leg.value >= amb.value - amb.error_bound - leg.error_bound - 1e-9,
            "restricted min {} under ambient min {}",
            leg.value,
            amb.value
        );
    }

    #[test]
    fn time_warped_reeb_uniformizes() {
        // H_t = 2t: total transport 1, minima 0..2; after reparametrization
        // the minima sit at 1 uniformly and the endpoint is untouched.
        let model = t3();
        let fiber = Legendrian::torus_fiber(&model, 0.0, 1.0, 128).unwrap();
        let path = HamiltonianPath::sum(
            model,
            vec![PathTerm { profile: TimeProfile::Poly(vec![0.0, 2.0]), basis: BasisFn::Const }],
        )
        .unwrap();
        let iso = leg_isotopy(&path, &fiber, &LegCfg::default()).unwrap();
        let eps = leg_lorentz_length(&iso).value;
        assert!((eps - 1.0).abs() < 1e-10);
        let uniform = leg_reparametrize(&iso, 1e-3).unwrap();
        for m in &uniform.min_track {
            assert!((m - 1.0).abs() <= 1e-3);
        }
        let gap = uniform.final_curve().hausdorff(&model, &iso.final_curve());
        assert!(gap < 1e-6, "endpoint moved by {}", gap);
    }

    #[test]
    fn constant_reeb_reparametrizes_to_itself() {
        let model = t3();
        let fiber = Legendrian::torus_fiber(&model, 0.0, 0.0, 64).unwrap();
        let path = HamiltonianPath::reeb(model, 0.8);
        let iso = leg_isotopy(&path, &fiber, &LegCfg::default()).unwrap();
        let uniform = leg_reparametrize(&iso, 1e-6).unwrap();
        for m in &uniform.min_track {
            assert!((m - 0.8).abs() < 1e-9);
        }
    }

    #[test]
    fn chekanov_same_fiber_is_free() {
        let model = t3();
        let fiber = Legendrian::torus_fiber(&model, 1.0, 1.0, 128).unwrap();
        let est = chekanov_upper(&model, &fiber, &fiber, &ChekanovCfg::quick(7)).unwrap();
        assert!(est.certified);
        assert!(est.upper < 1e-6, "upper {}", est.upper);
    }

    #[test]
    fn chekanov_translation_between_fibers() {
        let model = t3();
        let from = Legendrian::torus_fiber(&model, 1.0, 2.0, 128).unwrap();
        let to = Legendrian::torus_fiber(&model, 1.4, 2.3, 128).unwrap();
        let est = chekanov_upper(&model, &from, &to, &ChekanovCfg::quick(11)).unwrap();
        assert!(est.certified, "residual {}", est.residual);
        assert!(est.upper <= 0.5 + 1e-3, "upper {}", est.upper);
    }

    #[test]
    fn chekanov_reaches_reeb_target() {
        let model = t3();
        let from = Legendrian::torus_fiber(&model, 0.5, 0.5, 128).unwrap();
        let t = 0.6;
        let to = from.reeb_image(&model, t);
        let est = chekanov_upper(&model, &from, &to, &ChekanovCfg::quick(13)).unwrap();
        assert!(est.certified, "residual {}", est.residual);
        assert!(est.upper <= t + 1e-3, "upper {}", est.upper);
    }

    #[test]
    fn chekanov_jet_shift() {
        let model = ContactModel::j1s1();
        let from = Legendrian::jet_zero(128);
        let to = Legendrian::jet_graph(128, |_| 0.4, |_| 0.0);
        let est = chekanov_upper(&model, &from, &to, &ChekanovCfg::quick(17)).unwrap();
        assert!(est.certified, "residual {}", est.residual);
        assert!(est.upper <= 0.4 + 1e-3, "upper {}", est.upper);
    }

    // Cheap path on the four-component great-circle link: the link has Reeb
    // set period pi/4, so a net transport of pi/4 - 1 lands on the
    // unit-negative Reeb image. The linear time profile below spends total
    // variation 1/2 on it, so the loop hypothesis holds with eps = 1/2, and
    // the uniformized minimum pi/4 - 1 gives the loop margin pi/4.
    fn cheap_link_profile() -> (f64, f64) {
        let s1 = FRAC_PI_4 - 1.0;
        let s2 = 0.5;
        let i_neg = (s1 - s2) / 2.0;
        let i_pos = (s1 + s2) / 2.0;
        let rho = (-i_neg / i_pos).sqrt();
        let r = rho / (1.0 + rho);
        let b = -2.0 * i_neg / (r * r);
        let a = -b * r;
        (a, b)
    }

    #[test]
    fn cheap_link_path_gives_positive_loop() {
        let model = ContactModel::s3();
        let link = Legendrian::hopf_link(4, 256).unwrap();
        let (a, b) = cheap_link_profile();
        assert!((a + b / 2.0 - (FRAC_PI_4 - 1.0)).abs() < 1e-12);
        let path = HamiltonianPath::sum(
            model,
            vec![PathTerm { profile: TimeProfile::Poly(vec![a, b]), basis: BasisFn::Const }],
        )
        .unwrap();
        let iso = leg_isotopy(&path, &link, &LegCfg::default()).unwrap();
        let cert = loop_from_cheap_path(&iso, &LoopCfg::standard(&model)).unwrap();
        assert!((cert.eps - 0.5).abs() < 2e-3, "eps {}", cert.eps);
        assert!(cert.margin >= 0.5 - 1e-3, "margin {}", cert.margin);
        assert!((cert.margin - FRAC_PI_4).abs() < 1e-6, "margin {}", cert.margin);
        assert!(cert.endpoint_residual < 1e-6);
        assert!(cert.closure_residual < 1e-6);
    }

    #[test]
    fn expensive_path_is_refused() {
        let model = ContactModel::s3();
        let link = Legendrian::hopf_link(4, 64).unwrap();
        let path = HamiltonianPath::reeb(model, PI - 1.0 - FRAC_PI_2);
        let iso = leg_isotopy(&path, &link, &LegCfg::default()).unwrap();
        let expensive = HamiltonianPath::reeb(model, 1.2);
        let iso2 = leg_isotopy(&expensive, &link, &LegCfg::default()).unwrap();
        drop(iso);
        match loop_from_cheap_path(&iso2, &LoopCfg::standard(&model)) {
            Err(Error::Refused(_)) => {}
            other => panic!("expected refusal, got {:?}", other.map(|c| c.margin)),
        }
    }

    #[test]
    fn mismatched_endpoint_is_infeasible() {
        let model = ContactModel::s3();
        let link = Legendrian::hopf_link(4, 64).unwrap();
        let path = HamiltonianPath::reeb(model, 0.3);
        let iso = leg_isotopy(&path, &link, &LegCfg::default()).unwrap();
        match loop_from_cheap_path(&iso, &LoopCfg::standard(&model)) {
            Err(Error::Infeasible(_)) => {}
            other => panic!("expected infeasible, got {:?}", other.map(|c| c.margin)),
        }
    }
}
