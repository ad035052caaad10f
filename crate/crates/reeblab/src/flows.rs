//! Time-dependent contact Hamiltonian paths and their flows.
//!
//! A path is an expression tree over a separable core: sums of
//! (time profile) x (spatial basis) terms, plus three structural wrappers
//! that the estimators need to stay exact:
//!
//! * `ReebShift` composes the spatial argument with a closed-form Reeb
//!   translation whose amount is tabulated in time (the uniformization
//!   construction);
//! * `Concat` glues two paths with quintic smoothstep time warps whose
//!   derivative supports are [0, 1/2] and [1/2, 1], so length functionals
//!   add exactly under substitution;
//! * `Restrict` runs a path up to an intermediate time with the matching
//!   speed factor.
//!
//! Length functionals use composite Simpson quadrature of grid
//! extremization per node; when the path is separable the per-node grid
//! scan reuses one matrix of basis values, which is what makes dense
//! reparametrization tables affordable.

use crate::error::{Error, Result};
use crate::fields::{BasisFn, ScalarField, SpatialEval, Tail, TrigKind, WeightedField};
use crate::geom::{Point, Tangent};
use crate::grid::{extremize, Extremum, GridSpec};
use crate::manifolds::{contact_vector_field, ContactModel, ModelKind};
use serde::{Deserialize, Serialize};

/// Scalar profile in time multiplying one spatial basis function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TimeProfile {
    Constant(f64),
    /// Polynomial sum a_i t^i.
    Poly(Vec<f64>),
    /// amp * cos/sin(2 pi k t).
    Harmonic { amp: f64, k: u32, kind: TrigKind },
    /// Catmull-Rom interpolation through uniformly spaced nodes on [0,1].
    Nodes(Vec<f64>),
}

impl TimeProfile {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            TimeProfile::Constant(c) => *c,
            TimeProfile::Poly(a) => {
                let mut v = 0.0;
                for &c in a.iter().rev() {
                    v = v * t + c;
                }
                v
            }
            TimeProfile::Harmonic { amp, k, kind } => {
                let w = std::f64::consts::TAU * *k as f64 * t;
                match kind {
                    TrigKind::Cos => amp * w.cos(),
                    TrigKind::Sin => amp * w.sin(),
                }
            }
            TimeProfile::Nodes(v) => catmull_rom(v, t),
        }
    }
}

fn catmull_rom(v: &[f64], t: f64) -> f64 {
    let n = v.len();
    if n == 0 {
        return 0.0;
    }
    if n == 1 {
        return v[0];
    }
    let x = (t.clamp(0.0, 1.0)) * (n - 1) as f64;
    let i = (x.floor() as usize).min(n - 2);
    let u = x - i as f64;
    let tangent = |j: usize| -> f64 {
        if j == 0 {
            v[1] - v[0]
        } else if j == n - 1 {
            v[n - 1] - v[n - 2]
        } else {
            0.5 * (v[j + 1] - v[j - 1])
        }
    };
    let (p0, p1) = (v[i], v[i + 1]);
    let (m0, m1) = (tangent(i), tangent(i + 1));
    let u2 = u * u;
    let u3 = u2 * u;
    (2.0 * u3 - 3.0 * u2 + 1.0) * p0
        + (u3 - 2.0 * u2 + u) * m0
        + (-2.0 * u3 + 3.0 * u2) * p1
        + (u3 - u2) * m1
}

/// Quintic smoothstep and its derivative; the warp of the concatenation.
pub fn smoothstep5(u: f64) -> f64 {
    let u = u.clamp(0.0, 1.0);
    u * u * u * (10.0 + u * (-15.0 + 6.0 * u))
}

pub fn smoothstep5_deriv(u: f64) -> f64 {
    if !(0.0..=1.0).contains(&u) {
        return 0.0;
    }
    30.0 * u * u * (1.0 - u) * (1.0 - u)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathTerm {
    pub profile: TimeProfile,
    pub basis: BasisFn,
}

/// Tabulated Reeb shift: tau and its smoothed derivative on a uniform
/// time grid, interpolated cubically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftTable {
    pub tau: Vec<f64>,
    pub dtau: Vec<f64>,
}

impl ShiftTable {
    pub fn tau_at(&self, t: f64) -> f64 {
        catmull_rom(&self.tau, t)
    }

    pub fn dtau_at(&self, t: f64) -> f64 {
        catmull_rom(&self.dtau, t)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PathExpr {
    Sum(Vec<PathTerm>),
    ReebShift { base: Box<PathExpr>, table: ShiftTable },
    Concat { first: Box<PathExpr>, second: Box<PathExpr> },
    Reversed(Box<PathExpr>),
    Restrict { base: Box<PathExpr>, t_end: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianPath {
    pub model: ContactModel,
    pub expr: PathExpr,
}

impl HamiltonianPath {
    pub fn sum(model: ContactModel, terms: Vec<PathTerm>) -> Result<Self> {
        for term in &terms {
            if !term.basis.compatible(model.kind) {
                return Err(Error::UnsupportedField {
                    model: model.name(),
                    detail: format!("{:?}", term.basis),
                });
            }
        }
        Ok(HamiltonianPath { model, expr: PathExpr::Sum(terms) })
    }

    /// Constant Hamiltonian c: the Reeb path run for time c.
    pub fn reeb(model: ContactModel, c: f64) -> Self {
        HamiltonianPath {
            model,
            expr: PathExpr::Sum(vec![PathTerm {
                profile: TimeProfile::Constant(c),
                basis: BasisFn::Const,
            }]),
        }
    }

    /// Autonomous path from a spatial field.
    pub fn autonomous(field: &ScalarField) -> Self {
        HamiltonianPath {
            model: field.model,
            expr: PathExpr::Sum(
                field
                    .terms
                    .iter()
                    .map(|(c, b)| PathTerm {
                        profile: TimeProfile::Constant(*c),
                        basis: b.clone(),
                    })
                    .collect(),
            ),
        }
    }

    pub fn reversed(&self) -> Self {
        HamiltonianPath {
            model: self.model,
            expr: PathExpr::Reversed(Box::new(self.expr.clone())),
        }
    }

    /// The path run only up to `t_end`, reparametrized to unit time.
    pub fn restricted(&self, t_end: f64) -> Self {
        HamiltonianPath {
            model: self.model,
            expr: PathExpr::Restrict { base: Box::new(self.expr.clone()), t_end },
        }
    }

    pub fn value(&self, t: f64, p: &Point) -> f64 {
        expr_value(&self.expr, t, p, &self.model)
    }

    pub fn value_grad(&self, t: f64, p: &Point) -> (f64, Tangent) {
        expr_value_grad(&self.expr, t, p, &self.model)
    }

    /// The contact vector field of the time-t slice at a point.
    pub fn vector_field(&self, t: f64, p: &Point) -> Result<Tangent> {
        let (h, g) = self.value_grad(t, p);
        contact_vector_field(&self.model, p, h, &g)
    }

    pub fn slice(&self, t: f64) -> TimeSlice<'_> {
        TimeSlice { path: self, t }
    }

    /// Linear-combination form of the time-t slice, when the whole tree is
    /// separable over spatial basis functions.
    pub fn collect_terms(&self, t: f64) -> Option<Vec<(f64, BasisFn)>> {
        let mut out = Vec::new();
        if collect(&self.expr, t, 1.0, false, &mut out) {
            Some(out)
        } else {
            None
        }
    }

    /// Largest fiber support radius appearing anywhere in the tree (J1S1).
    pub fn fiber_support_radius(&self) -> Option<f64> {
        fn walk(e: &PathExpr, acc: &mut Option<f64>) {
            match e {
                PathExpr::Sum(terms) => {
                    for t in terms {
                        if let BasisFn::Jet { fiber: Some(f), .. } = &t.basis {
                            *acc = Some(acc.map_or(f.radius, |a: f64| a.max(f.radius)));
                        }
                    }
                }
                PathExpr::ReebShift { base, .. } | PathExpr::Reversed(base) | PathExpr::Restrict { base, .. } => walk(base, acc),
                PathExpr::Concat { first, second } => {
                    walk(first, acc);
                    walk(second, acc);
                }
            }
        }
        let mut acc = None;
        walk(&self.expr, &mut acc);
        acc
    }
}

fn warp_first(t: f64) -> (f64, f64) {
    if t <= 0.5 {
        (smoothstep5(2.0 * t), 2.0 * smoothstep5_deriv(2.0 * t))
    } else {
        (1.0, 0.0)
    }
}

fn warp_second(t: f64) -> (f64, f64) {
    if t < 0.5 {
        (0.0, 0.0)
    } else {
        (smoothstep5(2.0 * t - 1.0), 2.0 * smoothstep5_deriv(2.0 * t - 1.0))
    }
}

fn expr_value(e: &PathExpr, t: f64, p: &Point, model: &ContactModel) -> f64 {
    match e {
        PathExpr::Sum(terms) => terms.iter().map(|tm| tm.profile.eval(t) * tm.basis.eval(p)).sum(),
        PathExpr::ReebShift { base, table } => {
            let tau = table.tau_at(t);
            let y = model.reeb_flow(p, -tau);
            expr_value(base, t, &y, model) + table.dtau_at(t)
        }
        PathExpr::Concat { first, second } => {
            if t <= 0.5 {
                let (u, w) = warp_first(t);
                w * expr_value(first, u, p, model)
            } else {
                let (u, w) = warp_second(t);
                w * expr_value(second, u, p, model)
            }
        }
        PathExpr::Reversed(base) => -expr_value(base, 1.0 - t, p, model),
        PathExpr::Restrict { base, t_end } => t_end * expr_value(base, t * t_end, p, model),
    }
}

fn expr_value_grad(e: &PathExpr, t: f64, p: &Point, model: &ContactModel) -> (f64, Tangent) {
    match e {
        PathExpr::Sum(terms) => {
            let mut v = 0.0;
            let mut g = Tangent::ZERO;
            for tm in terms {
                let c = tm.profile.eval(t);
                v += c * tm.basis.eval(p);
                let bg = tm.basis.grad(p);
                for k in 0..4 {
                    g.0[k] += c * bg.0[k];
                }
            }
            (v, g)
        }
        PathExpr::ReebShift { base, table } => {
            let tau = table.tau_at(t);
            let y = model.reeb_flow(p, -tau);
            let (v, gy) = expr_value_grad(base, t, &y, model);
            let jac = model.reeb_flow_jacobian(p, -tau);
            let mut g = Tangent::ZERO;
            for k in 0..4 {
                let mut s = 0.0;
                for r in 0..4 {
                    s += jac[r][k] * gy.0[r];
                }
                g.0[k] = s;
            }
            (v + table.dtau_at(t), g)
        }
        PathExpr::Concat { first, second } => {
            let (sub, u, w) = if t <= 0.5 {
                let (u, w) = warp_first(t);
                (first, u, w)
            } else {
                let (u, w) = warp_second(t);
                (second, u, w)
            };
            let (v, g) = expr_value_grad(sub, u, p, model);
            (w * v, g.scale(w))
        }
        PathExpr::Reversed(base) => {
            let (v, g) = expr_value_grad(base, 1.0 - t, p, model);
            (-v, g.scale(-1.0))
        }
        PathExpr::Restrict { base, t_end } => {
            let (v, g) = expr_value_grad(base, t * t_end, p, model);
            (t_end * v, g.scale(*t_end))
        }
    }
}

fn collect(e: &PathExpr, t: f64, scale: f64, _rev: bool, out: &mut Vec<(f64, BasisFn)>) -> bool {
    match e {
        PathExpr::Sum(terms) => {
            for tm in terms {
                out.push((scale * tm.profile.eval(t), tm.basis.clone()));
            }
            true
        }
        PathExpr::Concat { first, second } => {
            if t <= 0.5 {
                let (u, w) = warp_first(t);
                if w == 0.0 {
                    return true;
                }
                collect(first, u, scale * w, _rev, out)
            } else {
                let (u, w) = warp_second(t);
                if w == 0.0 {
                    return true;
                }
                collect(second, u, scale * w, _rev, out)
            }
        }
        PathExpr::Reversed(base) => collect(base, 1.0 - t, -scale, _rev, out),
        PathExpr::Restrict { base, t_end } => collect(base, t * t_end, scale * t_end, _rev, out),
        PathExpr::ReebShift { .. } => false,
    }
}

/// Spatial view of a path at a fixed time; supports grid extremization.
pub struct TimeSlice<'a> {
    pub path: &'a HamiltonianPath,
    pub t: f64,
}

impl SpatialEval for TimeSlice<'_> {
    fn model(&self) -> &ContactModel {
        &self.path.model
    }

    fn value(&self, p: &Point) -> f64 {
        self.path.value(self.t, p)
    }

    fn gradient(&self, p: &Point) -> Tangent {
        self.path.value_grad(self.t, p).1
    }

    fn tail(&self) -> Tail {
        slice_tail(&self.path.expr, self.t, &self.path.model)
    }
}

fn slice_tail(e: &PathExpr, t: f64, model: &ContactModel) -> Tail {
    match model.kind {
        ModelKind::T3 | ModelKind::S3 => Tail::None,
        ModelKind::STR2 => Tail::Periodic,
        ModelKind::J1S1 => {
            // Fiber-independent residual of the slice. Every wrapper
            // preserves it: the Reeb shift moves z only and contributes its
            // additive constant; warps rescale it.
            fn residual(e: &PathExpr, t: f64, model: &ContactModel) -> ScalarField {
                match e {
                    PathExpr::Sum(terms) => ScalarField {
                        model: *model,
                        terms: terms
                            .iter()
                            .filter(|tm| !tm.basis.fiber_compact())
                            .map(|tm| (tm.profile.eval(t), tm.basis.clone()))
                            .collect(),
                    },
                    PathExpr::ReebShift { base, table } => residual(base, t, model)
                        .plus(&ScalarField::constant(*model, table.dtau_at(t))),
                    PathExpr::Concat { first, second } => {
                        if t <= 0.5 {
                            let (u, w) = warp_first(t);
                            residual(first, u, model).scaled(w)
                        } else {
                            let (u, w) = warp_second(t);
                            residual(second, u, model).scaled(w)
                        }
                    }
                    PathExpr::Reversed(base) => residual(base, 1.0 - t, model).scaled(-1.0),
                    PathExpr::Restrict { base, t_end } => residual(base, t * t_end, model).scaled(*t_end),
                }
            }
            Tail::FiberResidual(residual(e, t, model))
        }
    }
}

/// Concatenation with smoothstep warps; lengths add exactly under the
/// change of variables, and the composite flow ends at the composition of
/// the two endpoint maps (second applied after the first).
pub fn concatenate(first: &HamiltonianPath, second: &HamiltonianPath) -> Result<HamiltonianPath> {
    if first.model != second.model {
        return Err(Error::Refused("concatenation across models".into()));
    }
    Ok(HamiltonianPath {
        model: first.model,
        expr: PathExpr::Concat {
            first: Box::new(first.expr.clone()),
            second: Box::new(second.expr.clone()),
        },
    })
}

// ---------------------------------------------------------------------------
// Integration
// ---------------------------------------------------------------------------

/// Flow of an ensemble of points under a Hamiltonian path.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlowTrace {
    pub model: ContactModel,
    pub times: Vec<f64>,
    /// times.len() rows, one Vec<Point> per time, ensemble order fixed.
    pub points: Vec<Vec<Point>>,
    pub step: f64,
    /// Max sphere-drift before renormalization (S3), 0 elsewhere.
    pub max_drift: f64,
    /// Set when a J1S1 trajectory left the tracked fiber region.
    pub truncated: bool,
}

impl FlowTrace {
    pub fn initial(&self) -> &[Point] {
        &self.points[0]
    }

    pub fn endpoints(&self) -> &[Point] {
        self.points.last().unwrap()
    }
}

/// Fixed-step classical RK4. `steps` >= 100 is the calibrated regime; the
/// integrator is deterministic and bitwise reproducible.
pub fn integrate(path: &HamiltonianPath, ensemble: &[Point], steps: usize) -> Result<FlowTrace> {
    if steps == 0 {
        return Err(Error::Refused("zero integration steps".into()));
    }
    let model = path.model;
    let h = 1.0 / steps as f64;
    let mut times = Vec::with_capacity(steps + 1);
    let mut rows: Vec<Vec<Point>> = Vec::with_capacity(steps + 1);
    let mut current: Vec<Point> = ensemble.to_vec();
    let mut max_drift: f64 = 0.0;
    let mut truncated = false;
    times.push(0.0);
    rows.push(current.clone());

    // RK4 stage points leave the sphere at O(h^2); project them back before
    // evaluating the field so the tangency checks stay exact.
    let field = |t: f64, p: &Point| -> Result<Tangent> {
        if model.kind == ModelKind::S3 {
            path.vector_field(t, &model.normalize(p))
        } else {
            path.vector_field(t, p)
        }
    };

    for s in 0..steps {
        let t = s as f64 * h;
        for p in current.iter_mut() {
            let k1 = field(t, p)?;
            let p2 = p.add(&k1, 0.5 * h);
            let k2 = field(t + 0.5 * h, &p2)?;
            let p3 = p.add(&k2, 0.5 * h);
            let k3 = field(t + 0.5 * h, &p3)?;
            let p4 = p.add(&k3, h);
            let k4 = field(t + h, &p4)?;
            let mut q = *p;
            for k in 0..4 {
                q.0[k] += h / 6.0 * (k1.0[k] + 2.0 * k2.0[k] + 2.0 * k3.0[k] + k4.0[k]);
            }
            if model.kind == ModelKind::S3 {
                let r = q.norm();
                max_drift = max_drift.max((r - 1.0).abs());
                q = q.scale(1.0 / r);
            }
            if model.kind == ModelKind::J1S1 && q.0[1].abs() > 50.0 {
                truncated = true;
            }
            *p = q;
        }
        times.push((s + 1) as f64 * h);
        rows.push(current.clone());
    }

    Ok(FlowTrace {
        model,
        times,
        points: rows,
        step: h,
        max_drift,
        truncated,
    })
}

/// Fixed right translation: the flow of t -> phi_t o chi, realized by
/// restarting the integration from the translated ensemble. The
/// Hamiltonian is untouched, so every length functional is invariant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ClosedMap {
    ReebTime(f64),
    TorusTranslate { dx: f64, dy: f64 },
}

impl ClosedMap {
    pub fn apply(&self, model: &ContactModel, p: &Point) -> Result<Point> {
        match self {
            ClosedMap::ReebTime(s) => Ok(model.reeb_flow(p, *s)),
            ClosedMap::TorusTranslate { dx, dy } => match model.kind {
                ModelKind::T3 | ModelKind::STR2 => {
                    Ok(model.normalize(&Point([p.0[0] + dx, p.0[1] + dy, p.0[2], 0.0])))
                }
                _ => Err(Error::Refused("torus translation on a non-torus model".into())),
            },
        }
    }
}

pub fn right_translate(
    path: &HamiltonianPath,
    chi: &ClosedMap,
    ensemble: &[Point],
    steps: usize,
) -> Result<FlowTrace> {
    let moved: Result<Vec<Point>> = ensemble.iter().map(|p| chi.apply(&path.model, p)).collect();
    integrate(path, &moved?, steps)
}

// ---------------------------------------------------------------------------
// Per-slice extremization with a shared basis cache
// ---------------------------------------------------------------------------

struct BasisCache {
    bases: Vec<BasisFn>,
    /// Row-major: grid point index x basis index, weight folded in.
    values: Vec<f64>,
    points: Vec<Point>,
}

/// Structural mirror of the path expression used for extremization. Reeb
/// shifts are spatial bijections, so they shift extrema by the additive
/// constant without moving them; the warps of concatenation, reversal and
/// restriction rescale them by non-negative factors. Only the separable
/// leaves touch the grid.
enum ExtNode {
    Leaf { path: HamiltonianPath, cache: Option<BasisCache> },
    Shift { inner: Box<ExtNode>, table: ShiftTable },
    Concat { first: Box<ExtNode>, second: Box<ExtNode> },
    Reversed(Box<ExtNode>),
    Restrict { inner: Box<ExtNode>, t_end: f64 },
}

/// Extremizes time slices of one path over one grid, reusing one matrix of
/// basis values per separable leaf across all slices.
pub struct SliceExtremizer<'a> {
    model: ContactModel,
    grid: GridSpec,
    weight: Option<&'a ScalarField>,
    root: ExtNode,
}

impl<'a> SliceExtremizer<'a> {
    pub fn new(
        path: &HamiltonianPath,
        grid: GridSpec,
        weight: Option<&'a ScalarField>,
    ) -> Result<Self> {
        if weight.is_some() && !matches!(path.model.kind, ModelKind::T3 | ModelKind::S3) {
            return Err(Error::Refused("weighted extremization needs a compact model".into()));
        }
        let grid = grid.fit_fiber(path.fiber_support_radius());
        let model = path.model;
        let root = build_node(&path.expr, &model, &grid, weight);
        Ok(SliceExtremizer { model, grid, weight, root })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Min/max of the time-t slice with the certified error bound.
    pub fn extrema(&self, t: f64) -> Result<Extremum> {
        node_extrema(&self.root, t, &self.model, &self.grid, self.weight)
    }
}

fn build_node(
    expr: &PathExpr,
    model: &ContactModel,
    grid: &GridSpec,
    weight: Option<&ScalarField>,
) -> ExtNode {
    match expr {
        // A weighted shift does not commute with the spatial bijection;
        // fall through to a leaf in that case.
        PathExpr::ReebShift { base, table } if weight.is_none() => ExtNode::Shift {
            inner: Box::new(build_node(base, model, grid, weight)),
            table: table.clone(),
        },
        PathExpr::Concat { first, second } => ExtNode::Concat {
            first: Box::new(build_node(first, model, grid, weight)),
            second: Box::new(build_node(second, model, grid, weight)),
        },
        PathExpr::Reversed(base) => ExtNode::Reversed(Box::new(build_node(base, model, grid, weight))),
        PathExpr::Restrict { base, t_end } if *t_end >= 0.0 => ExtNode::Restrict {
            inner: Box::new(build_node(base, model, grid, weight)),
            t_end: *t_end,
        },
        other => {
            let path = HamiltonianPath { model: *model, expr: other.clone() };
            let cache = build_cache(&path, grid, weight);
            ExtNode::Leaf { path, cache }
        }
    }
}

fn build_cache(
    path: &HamiltonianPath,
    grid: &GridSpec,
    weight: Option<&ScalarField>,
) -> Option<BasisCache> {
    let mut bases: Vec<BasisFn> = Vec::new();
    for &t in &[0.0, 0.25, 0.5, 0.625, 0.75, 1.0] {
        let terms = path.collect_terms(t)?;
        for (_, b) in terms {
            if !bases.contains(&b) {
                bases.push(b);
            }
        }
    }
    let kind = path.model.kind;
    let total = grid.total(kind);
    let mut points = Vec::with_capacity(total);
    for idx in 0..total {
        points.push(grid.point_at(kind, idx));
    }
    let k = bases.len();
    let mut values = vec![0.0; total * k];
    for (i, p) in points.iter().enumerate() {
        let w = weight.map(|f| f.value(p)).unwrap_or(1.0);
        for (j, b) in bases.iter().enumerate() {
            values[i * k + j] = w * b.eval(p);
        }
    }
    Some(BasisCache { bases, values, points })
}

fn node_extrema(
    node: &ExtNode,
    t: f64,
    model: &ContactModel,
    grid: &GridSpec,
    weight: Option<&ScalarField>,
) -> Result<Extremum> {
    match node {
        ExtNode::Leaf { path, cache } => leaf_extrema(path, cache.as_ref(), t, grid, weight),
        ExtNode::Shift { inner, table } => {
            let mut ex = node_extrema(inner, t, model, grid, weight)?;
            let d = table.dtau_at(t);
            let tau = table.tau_at(t);
            ex.min += d;
            ex.max += d;
            ex.argmin = model.reeb_flow(&ex.argmin, tau);
            ex.argmax = model.reeb_flow(&ex.argmax, tau);
            Ok(ex)
        }
        ExtNode::Concat { first, second } => {
            let (sub, u, w) = if t <= 0.5 {
                let (u, w) = warp_first(t);
                (first, u, w)
            } else {
                let (u, w) = warp_second(t);
                (second, u, w)
            };
            let ex = node_extrema(sub, u, model, grid, weight)?;
            Ok(scale_extremum(&ex, w))
        }
        ExtNode::Reversed(inner) => {
            let ex = node_extrema(inner, 1.0 - t, model, grid, weight)?;
            Ok(Extremum {
                min: -ex.max,
                max: -ex.min,
                argmin: ex.argmax,
                argmax: ex.argmin,
                error_bound: ex.error_bound,
                lipschitz: ex.lipschitz,
            })
        }
        ExtNode::Restrict { inner, t_end } => {
            let ex = node_extrema(inner, t * t_end, model, grid, weight)?;
            Ok(scale_extremum(&ex, *t_end))
        }
    }
}

fn scale_extremum(ex: &Extremum, w: f64) -> Extremum {
    debug_assert!(w >= 0.0);
    Extremum {
        min: w * ex.min,
        max: w * ex.max,
        argmin: ex.argmin,
        argmax: ex.argmax,
        error_bound: w * ex.error_bound,
        lipschitz: w * ex.lipschitz,
    }
}

fn leaf_extrema(
    path: &HamiltonianPath,
    cache: Option<&BasisCache>,
    t: f64,
    grid: &GridSpec,
    weight: Option<&ScalarField>,
) -> Result<Extremum> {
    if let Some(cache) = cache {
        if let Some(terms) = path.collect_terms(t) {
            let mut coeffs = vec![0.0; cache.bases.len()];
            let mut known = true;
            for (c, b) in terms {
                match cache.bases.iter().position(|x| *x == b) {
                    Some(j) => coeffs[j] += c,
                    None => {
                        known = false;
                        break;
                    }
                }
            }
            if known {
                return leaf_cached(path, cache, &coeffs, t, grid, weight);
            }
        }
    }
    let slice = path.slice(t);
    match weight {
        Some(w) => extremize(&WeightedField { weight: w, inner: &slice }, grid, None),
        None => extremize(&slice, grid, None),
    }
}

fn leaf_cached(
    path: &HamiltonianPath,
    cache: &BasisCache,
    coeffs: &[f64],
    t: f64,
    grid: &GridSpec,
    weight: Option<&ScalarField>,
) -> Result<Extremum> {
    let k = cache.bases.len();
    let model = &path.model;
    let kind = model.kind;
    let slice = path.slice(t);
    let dyn_field = SliceView { slice: &slice, weight };
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    let mut imin = 0usize;
    let mut imax = 0usize;
    if k > 0 {
        for (i, chunk) in cache.values.chunks_exact(k).enumerate() {
            let mut v = 0.0;
            for j in 0..k {
                v += coeffs[j] * chunk[j];
            }
            if v < min {
                min = v;
                imin = i;
            }
            if v > max {
                max = v;
                imax = i;
            }
        }
    }
    let lip = {
        let stride = (cache.points.len() / 256).max(1);
        let mut g: f64 = 0.0;
        let mut i = 0;
        while i < cache.points.len() {
            g = g.max(dyn_field.gradient(&cache.points[i]).norm());
            i += stride;
        }
        1.5 * g
    };
    let (min, argmin) = crate::grid::refine(&dyn_field, model, grid, imin, false);
    let (max, argmax) = crate::grid::refine(&dyn_field, model, grid, imax, true);
    let mut out = Extremum {
        min,
        max,
        argmin,
        argmax,
        error_bound: lip * grid.covering_radius(kind),
        lipschitz: lip,
    };
    // J1S1 tail: outside the window the slice equals its fiber-independent
    // residual; extremize that on the q-line and merge.
    if let Tail::FiberResidual(residual) = slice.tail() {
        let line = GridSpec { counts: [grid.counts[0].max(64), 1, 1], fiber_radius: 0.0 };
        let outer = extremize(&residual, &line, None)?;
        let far = grid.fiber_radius * 1.5;
        if outer.min < out.min {
            out.min = outer.min;
            out.argmin = Point([outer.argmin.0[0], far, 0.0, 0.0]);
        }
        if outer.max > out.max {
            out.max = outer.max;
            out.argmax = Point([outer.argmax.0[0], far, 0.0, 0.0]);
        }
        out.error_bound = out.error_bound.max(outer.error_bound);
        out.lipschitz = out.lipschitz.max(outer.lipschitz);
    }
    Ok(out)
}

/// Slice plus optional weight, viewed as one spatial field.
struct SliceView<'a, 'b> {
    slice: &'a TimeSlice<'b>,
    weight: Option<&'a ScalarField>,
}

impl SpatialEval for SliceView<'_, '_> {
    fn model(&self) -> &ContactModel {
        &self.slice.path.model
    }

    fn value(&self, p: &Point) -> f64 {
        let v = self.slice.value(p);
        match self.weight {
            Some(w) => w.value(p) * v,
            None => v,
        }
    }

    fn gradient(&self, p: &Point) -> Tangent {
        match self.weight {
            Some(w) => {
                let v = self.slice.value(p);
                let gv = self.slice.gradient(p);
                let wv = w.value(p);
                let gw = w.gradient(p);
                Tangent([
                    gw.0[0] * v + wv * gv.0[0],
                    gw.0[1] * v + wv * gv.0[1],
                    gw.0[2] * v + wv * gv.0[2],
                    gw.0[3] * v + wv * gv.0[3],
                ])
            }
            None => self.slice.gradient(p),
        }
    }

    fn tail(&self) -> Tail {
        self.slice.tail()
    }
}

// ---------------------------------------------------------------------------
// Length functionals
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub struct LengthCfg {
    /// Simpson panel count (number of intervals, multiple of 4).
    pub panels: usize,
    pub grid: GridSpec,
}

impl LengthCfg {
    pub fn standard(model: &ContactModel) -> Self {
        LengthCfg { panels: 128, grid: GridSpec::default_for(model, 1.0) }
    }

    pub fn certify(model: &ContactModel) -> Self {
        LengthCfg { panels: 128, grid: GridSpec::certify_for(model, 1.0) }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LengthEstimate {
    pub value: f64,
    /// Sound bound on |reported - true| from grid extremization plus a
    /// fourth-difference Simpson estimate.
    pub error_bound: f64,
    /// Infimum over quadrature nodes of min_M H_t.
    pub node_min: f64,
    /// Supremum over quadrature nodes of max_M H_t.
    pub node_max: f64,
}

pub(crate) fn simpson(values: &[f64]) -> f64 {
    let n = values.len() - 1;
    assert!(n >= 2 && n % 2 == 0, "simpson needs an even interval count");
    let h = 1.0 / n as f64;
    let mut s = values[0] + values[n];
    for (i, v) in values.iter().enumerate().skip(1).take(n - 1) {
        s += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    s * h / 3.0
}

pub(crate) fn simpson_tail_estimate(values: &[f64]) -> f64 {
    // Composite-Simpson error via the largest fourth difference.
    if values.len() < 5 {
        return 0.0;
    }
    let mut d4max: f64 = 0.0;
    for w in values.windows(5) {
        let d4 = w[0] - 4.0 * w[1] + 6.0 * w[2] - 4.0 * w[3] + w[4];
        d4max = d4max.max(d4.abs());
    }
    d4max / 180.0
}

enum Integrand {
    Min,
    MaxAbs,
    Max,
}

fn length_functional(
    path: &HamiltonianPath,
    cfg: &LengthCfg,
    weight: Option<&ScalarField>,
    which: Integrand,
) -> Result<LengthEstimate> {
    if cfg.panels % 4 != 0 || cfg.panels < 8 {
        return Err(Error::Config("Simpson panel count must be a multiple of 4, at least 8".into()));
    }
    if let Some(w) = weight {
        if w.model != path.model {
            return Err(Error::Refused("weight on a different model".into()));
        }
        if !matches!(path.model.kind, ModelKind::T3 | ModelKind::S3) {
            return Err(Error::Refused("weighted functionals need a compact model".into()));
        }
        let wex = extremize(w, &cfg.grid, None)?;
        if wex.min - wex.error_bound <= 0.0 {
            return Err(Error::Refused("conformal weight not certified positive".into()));
        }
    }
    let ext = SliceExtremizer::new(path, cfg.grid, weight)?;
    let n = cfg.panels;
    let mut vals = Vec::with_capacity(n + 1);
    let mut errs = Vec::with_capacity(n + 1);
    let mut node_min = f64::INFINITY;
    let mut node_max = f64::NEG_INFINITY;
    for i in 0..=n {
        let t = i as f64 / n as f64;
        let ex = ext.extrema(t)?;
        node_min = node_min.min(ex.min);
        node_max = node_max.max(ex.max);
        let v = match which {
            Integrand::Min => ex.min,
            Integrand::Max => ex.max,
            Integrand::MaxAbs => ex.min.abs().max(ex.max.abs()),
        };
        vals.push(v);
        errs.push(ex.error_bound);
    }
    let value = simpson(&vals);
    let grid_err = simpson(&errs).abs();
    let quad_err = simpson_tail_estimate(&vals);
    Ok(LengthEstimate {
        value,
        error_bound: grid_err + quad_err,
        node_min,
        node_max,
    })
}

/// integral over t of min_M H_t.
pub fn lorentz_length(path: &HamiltonianPath, cfg: &LengthCfg) -> Result<LengthEstimate> {
    length_functional(path, cfg, None, Integrand::Min)
}

/// integral over t of max_M |H_t|.
pub fn shelukhin_length(path: &HamiltonianPath, cfg: &LengthCfg) -> Result<LengthEstimate> {
    length_functional(path, cfg, None, Integrand::MaxAbs)
}

/// integral over t of max_M H_t (upper companion of the Lorentz integrand).
pub fn sup_length(path: &HamiltonianPath, cfg: &LengthCfg) -> Result<LengthEstimate> {
    length_functional(path, cfg, None, Integrand::Max)
}

/// Functionals of the same path measured against the rescaled form rho*alpha.
pub fn lorentz_length_weighted(
    path: &HamiltonianPath,
    rho: &ScalarField,
    cfg: &LengthCfg,
) -> Result<LengthEstimate> {
    length_functional(path, cfg, Some(rho), Integrand::Min)
}

pub fn shelukhin_length_weighted(
    path: &HamiltonianPath,
    rho: &ScalarField,
    cfg: &LengthCfg,
) -> Result<LengthEstimate> {
    length_functional(path, cfg, Some(rho), Integrand::MaxAbs)
}

// ---------------------------------------------------------------------------
// Reeb reparametrization
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub struct ReparamCfg {
    /// Target uniform minimum; None picks the Lorentz length (endpoint-
    /// preserving mode: tau(1) = 0).
    pub eps: Option<f64>,
    /// Uniformity tolerance the construction is sized for.
    pub delta: f64,
    /// Dense time samples of the minimum table (power of two).
    pub samples: usize,
    pub grid: GridSpec,
}

impl ReparamCfg {
    pub fn standard(model: &ContactModel) -> Self {
        ReparamCfg {
            eps: None,
            delta: 1e-3,
            samples: 2048,
            grid: GridSpec::default_for(model, 1.0),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReparamInfo {
    pub eps: f64,
    pub lorentz: f64,
    /// |tau(1)| after endpoint correction; 0 in auto mode up to rounding.
    pub tau_end: f64,
    pub mollify_width: f64,
    pub lipschitz: f64,
}

/// Composes the path with a Reeb translation so the per-time spatial
/// minimum of the new Hamiltonian is uniformly eps, within the tolerance
/// the table resolution supports. In auto mode eps equals the Lorentz
/// length and the endpoint is preserved exactly up to quadrature.
///
/// The derivative of the shift is smoothed by a discrete Gaussian of width
/// min(delta / (4 Lip), 0.01); at table resolutions where that width is
/// below one sample the kernel degenerates to the identity and the cubic
/// table interpolant supplies the smoothing, which keeps the uniformity
/// error within delta for Lipschitz minima.
pub fn reeb_reparametrize(
    path: &HamiltonianPath,
    cfg: &ReparamCfg,
) -> Result<(HamiltonianPath, ReparamInfo)> {
    let n = (cfg.samples.max(256) + 1) & !1;
    let ext = SliceExtremizer::new(path, cfg.grid, None)?;
    let mut m = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let t = i as f64 / n as f64;
        m.push(ext.extrema(t)?.min);
    }
    let lorentz = simpson(&m);
    let eps = cfg.eps.unwrap_or(lorentz);

    let dt = 1.0 / n as f64;
    let lip = m
        .windows(2)
        .map(|w| (w[1] - w[0]).abs() / dt)
        .fold(0.0, f64::max);
    let width = if lip > 1e-12 {
        (cfg.delta / (4.0 * lip)).min(0.01)
    } else {
        0.01
    };

    // Discrete Gaussian mollification of m with constant extension.
    let radius = ((4.0 * width / dt).ceil() as usize).min(n / 4);
    let m_smooth: Vec<f64> = if radius == 0 {
        m.clone()
    } else {
        let mut weights = Vec::with_capacity(2 * radius + 1);
        for j in -(radius as i64)..=(radius as i64) {
            let u = j as f64 * dt / width;
            weights.push((-0.5 * u * u).exp());
        }
        let wsum: f64 = weights.iter().sum();
        (0..=n)
            .map(|i| {
                let mut acc = 0.0;
                for (wj, j) in weights.iter().zip(-(radius as i64)..=(radius as i64)) {
                    let idx = (i as i64 + j).clamp(0, n as i64) as usize;
                    acc += wj * m[idx];
                }
                acc / wsum
            })
            .collect()
    };

    // tau' = eps - m_smooth, correcting the mean so tau(1) hits the exact
    // target (0 in auto mode).
    let mut dtau: Vec<f64> = m_smooth.iter().map(|v| eps - v).collect();
    let target_end = eps - lorentz;
    let mut tau = vec![0.0; n + 1];
    for i in 1..=n {
        tau[i] = tau[i - 1] + 0.5 * dt * (dtau[i - 1] + dtau[i]);
    }
    let correction = tau[n] - target_end;
    for d in dtau.iter_mut() {
        *d -= correction;
    }
    for i in 1..=n {
        tau[i] = tau[i - 1] + 0.5 * dt * (dtau[i - 1] + dtau[i]);
    }
    let tau_end = (tau[n] - target_end).abs();

    let table = ShiftTable { tau, dtau };
    let out = HamiltonianPath {
        model: path.model,
        expr: PathExpr::ReebShift { base: Box::new(path.expr.clone()), table },
    };
    Ok((
        out,
        ReparamInfo {
            eps,
            lorentz,
            tau_end,
            mollify_width: width,
            lipschitz: lip,
        },
    ))
}

// ---------------------------------------------------------------------------
// Conformal factor of a flow
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConformalFactorField {
    pub t: f64,
    pub samples: Vec<(Point, f64)>,
    pub min: f64,
    pub max: f64,
    /// Worst disagreement between the two independent probes.
    pub consistency: f64,
}

/// Conformal factor rho of the time-t flow map, from finite differences of
/// nearby trajectories: (phi_t^* alpha) = rho alpha. Two probe directions
/// with unit alpha-pairing estimate rho independently; their disagreement
/// is reported as a consistency diagnostic.
pub fn conformal_factor(
    path: &HamiltonianPath,
    t: f64,
    n_probes: usize,
    steps: usize,
) -> Result<ConformalFactorField> {
    let model = path.model;
    let restricted = if (t - 1.0).abs() < 1e-15 { path.clone() } else { path.restricted(t) };
    let probes = model.canonical_ensemble(n_probes);
    let fd = 1e-4;
    let mut samples = Vec::with_capacity(n_probes);
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    let mut consistency: f64 = 0.0;

    for x in &probes {
        let r = model.reeb_field(x)?;
        // Second probe: R + w with alpha(w) = 0, w built from a chart axis.
        let mut e = Tangent::ZERO;
        e.0[if model.kind == ModelKind::J1S1 { 1 } else { 2 }] = 1.0;
        let et = crate::manifolds::project_tangent(model.kind, x, &e);
        let ae = model.alpha_eval(x, &et)?;
        let w = Tangent([
            et.0[0] - ae * r.0[0],
            et.0[1] - ae * r.0[1],
            et.0[2] - ae * r.0[2],
            et.0[3] - ae * r.0[3],
        ]);
        let v2 = Tangent([
            r.0[0] + 0.5 * w.0[0],
            r.0[1] + 0.5 * w.0[1],
            r.0[2] + 0.5 * w.0[2],
            r.0[3] + 0.5 * w.0[3],
        ]);

        let rho_of = |v: &Tangent| -> Result<f64> {
            // No wrapping here: two starts wrapped to opposite chart edges
            // would make the endpoint difference meaningless. Only the
            // sphere constraint needs restoring.
            let perturb = |s: f64| {
                let q = x.add(v, s);
                if model.kind == ModelKind::S3 {
                    model.normalize(&q)
                } else {
                    q
                }
            };
            let starts = vec![perturb(fd), perturb(-fd), *x];
            let trace = integrate(&restricted, &starts, steps)?;
            let ends = trace.endpoints();
            let mut d = Tangent::ZERO;
            for k in 0..4 {
                d.0[k] = (ends[0].0[k] - ends[1].0[k]) / (2.0 * fd);
            }
            let img = ends[2];
            let d = crate::manifolds::project_tangent(model.kind, &img, &d);
            model.alpha_eval(&img, &d)
        };

        let rho1 = rho_of(&r)?;
        let rho2 = rho_of(&v2)?;
        consistency = consistency.max((rho1 - rho2).abs());
        min = min.min(rho1);
        max = max.max(rho1);
        samples.push((*x, rho1));
    }

    Ok(ConformalFactorField { t, samples, min, max, consistency })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{FiberProfile, TrigFactor};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn osc_t3() -> HamiltonianPath {
        // 1 + 0.3 cos(theta) sin(2 pi t)
        HamiltonianPath::sum(
            ContactModel::t3(),
            vec![
                PathTerm { profile: TimeProfile::Constant(1.0), basis: BasisFn::Const },
                PathTerm {
                    profile: TimeProfile::Harmonic { amp: 0.3, k: 1, kind: TrigKind::Sin },
                    basis: BasisFn::Torus { x: None, y: None, theta: Some(TrigFactor::cos(1)) },
                },
            ],
        )
        .unwrap()
    }

    #[test]
    fn oscillating_path_lorentz_length() {
        // integral of (1 - 0.3 |sin 2 pi t|) = 1 - 0.6 / pi.
        let cfg = LengthCfg::standard(&ContactModel::t3());
        let l = lorentz_length(&osc_t3(), &cfg).unwrap();
        assert_abs_diff_eq!(l.value, 1.0 - 0.6 / PI, epsilon = 2e-5);
        // The worst-case L*h bound is conservative; the refined value above
        // is far more accurate than this.
        assert!(l.error_bound < 0.2, "bound {}", l.error_bound);
        assert!(1.0 - 0.6 / PI >= l.value - l.error_bound);
        assert!(1.0 - 0.6 / PI <= l.value + l.error_bound);
    }

    #[test]
    fn reeb_path_lengths_are_exact() {
        for model in [ContactModel::t3(), ContactModel::j1s1(), ContactModel::s3()] {
            let path = HamiltonianPath::reeb(model, 0.7);
            let cfg = LengthCfg::standard(&model);
            let l = lorentz_length(&path, &cfg).unwrap();
            let s = shelukhin_length(&path, &cfg).unwrap();
            assert_abs_diff_eq!(l.value, 0.7, epsilon = 1e-12);
            assert_abs_diff_eq!(s.value, 0.7, epsilon = 1e-12);
            assert!(l.error_bound <= 1e-12);
        }
    }

    #[test]
    fn lorentz_below_shelukhin_for_positive_paths() {
        let cfg = LengthCfg::standard(&ContactModel::t3());
        let l = lorentz_length(&osc_t3(), &cfg).unwrap();
        let s = shelukhin_length(&osc_t3(), &cfg).unwrap();
        assert!(l.value <= s.value + 1e-12);
    }

    #[test]
    fn reeb_flow_integration_matches_closed_form() {
        for model in [ContactModel::t3(), ContactModel::j1s1(), ContactModel::s3()] {
            let t = 1.5;
            let path = HamiltonianPath::reeb(model, t);
            let ens = model.canonical_ensemble(16);
            let trace = integrate(&path, &ens, 200).unwrap();
            for (p0, p1) in ens.iter().zip(trace.endpoints()) {
                let expect = model.reeb_flow(p0, t);
                assert!(
                    model.point_distance(&model.normalize(p1), &expect) <= 1e-7,
                    "{}: flow error {}",
                    model.name(),
                    model.point_distance(&model.normalize(p1), &expect)
                );
            }
            assert!(trace.max_drift <= 1e-9);
        }
    }

    #[test]
    fn t3_translation_flow_is_exact_translation() {
        // H = a cos(theta) + b sin(theta) generates the base translation by
        // t (a, b).
        let (a, b) = (0.4, -0.9);
        let path = HamiltonianPath::sum(
            ContactModel::t3(),
            vec![
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
        .unwrap();
        let model = ContactModel::t3();
        let ens = model.canonical_ensemble(8);
        let trace = integrate(&path, &ens, 200).unwrap();
        for (p0, p1) in ens.iter().zip(trace.endpoints()) {
            let expect = model.normalize(&Point([p0.0[0] + a, p0.0[1] + b, p0.0[2], 0.0]));
            assert!(model.point_distance(&model.normalize(p1), &expect) <= 1e-9);
        }
    }

    #[test]
    fn integration_is_bitwise_reproducible() {
        let path = osc_t3();
        let ens = path.model.canonical_ensemble(8);
        let a = integrate(&path, &ens, 150).unwrap();
        let b = integrate(&path, &ens, 150).unwrap();
        for (ra, rb) in a.points.iter().zip(b.points.iter()) {
            for (pa, pb) in ra.iter().zip(rb.iter()) {
                for k in 0..4 {
                    assert_eq!(pa.0[k].to_bits(), pb.0[k].to_bits());
                }
            }
        }
    }

    #[test]
    fn concatenation_adds_lengths_exactly() {
        let p1 = osc_t3();
        let p2 = HamiltonianPath::reeb(ContactModel::t3(), 0.5);
        let cat = concatenate(&p1, &p2).unwrap();
        let cfg = LengthCfg { panels: 512, grid: GridSpec::default_for(&ContactModel::t3(), 1.0) };
        let l1 = lorentz_length(&p1, &cfg).unwrap();
        let l2 = lorentz_length(&p2, &cfg).unwrap();
        let lc = lorentz_length(&cat, &cfg).unwrap();
        assert_abs_diff_eq!(lc.value, l1.value + l2.value, epsilon = 1e-6);
        let s1 = shelukhin_length(&p1, &cfg).unwrap();
        let s2 = shelukhin_length(&p2, &cfg).unwrap();
        let sc = shelukhin_length(&cat, &cfg).unwrap();
        assert_abs_diff_eq!(sc.value, s1.value + s2.value, epsilon = 1e-6);
    }

    #[test]
    fn concatenated_flow_composes_endpoints() {
        let model = ContactModel::t3();
        let p1 = HamiltonianPath::reeb(model, 0.6);
        let p2 = HamiltonianPath::sum(
            model,
            vec![PathTerm {
                profile: TimeProfile::Constant(0.8),
                basis: BasisFn::Torus { x: None, y: None, theta: Some(TrigFactor::cos(1)) },
            }],
        )
        .unwrap();
        let cat = concatenate(&p1, &p2).unwrap();
        let ens = model.canonical_ensemble(8);
        let trace = integrate(&cat, &ens, 400).unwrap();
        for (p0, p1v) in ens.iter().zip(trace.endpoints()) {
            // Reeb 0.6 then translate by (0.8, 0).
            let mid = model.reeb_flow(p0, 0.6);
            let expect = model.normalize(&Point([mid.0[0] + 0.8, mid.0[1], mid.0[2], 0.0]));
            assert!(model.point_distance(&model.normalize(p1v), &expect) <= 1e-8);
        }
    }

    #[test]
    fn reversal_preserves_shelukhin() {
        let path = osc_t3();
        let cfg = LengthCfg::standard(&ContactModel::t3());
        let s = shelukhin_length(&path, &cfg).unwrap();
        let sr = shelukhin_length(&path.reversed(), &cfg).unwrap();
        assert_abs_diff_eq!(s.value, sr.value, epsilon = 1e-9);
        // Spatially constant sign-definite path: reversal negates the
        // Lorentz length exactly.
        let reeb = HamiltonianPath::reeb(ContactModel::t3(), 0.9);
        let l = lorentz_length(&reeb, &cfg).unwrap();
        let lr = lorentz_length(&reeb.reversed(), &cfg).unwrap();
        assert_abs_diff_eq!(lr.value, -l.value, epsilon = 1e-12);
    }

    #[test]
    fn reparametrize_uniformizes_the_minimum() {
        let path = osc_t3();
        let cfg = ReparamCfg::standard(&ContactModel::t3());
        let (out, info) = reeb_reparametrize(&path, &cfg).unwrap();
        assert_abs_diff_eq!(info.eps, 1.0 - 0.6 / PI, epsilon = 2e-5);
        assert!(info.tau_end <= 1e-9);
        let ext = SliceExtremizer::new(&out, cfg.grid, None).unwrap();
        for i in 0..=50 {
            let t = i as f64 / 50.0;
            let ex = ext.extrema(t).unwrap();
            assert!(
                (ex.min - info.eps).abs() <= cfg.delta,
                "min at t={t} is {} vs eps {}",
                ex.min,
                info.eps
            );
        }
    }

    #[test]
    fn reparametrize_preserves_endpoints() {
        let path = osc_t3();
        let cfg = ReparamCfg::standard(&ContactModel::t3());
        let (out, _) = reeb_reparametrize(&path, &cfg).unwrap();
        let model = path.model;
        let ens = model.canonical_ensemble(64);
        let a = integrate(&path, &ens, 400).unwrap();
        let b = integrate(&out, &ens, 400).unwrap();
        let d = model.ensemble_distance(a.endpoints(), b.endpoints());
        assert!(d <= 1e-5, "endpoint drift {d}");
    }

    #[test]
    fn reparametrize_constant_path_is_identity_like() {
        let path = HamiltonianPath::reeb(ContactModel::j1s1(), 0.3);
        let cfg = ReparamCfg::standard(&ContactModel::j1s1());
        let (out, info) = reeb_reparametrize(&path, &cfg).unwrap();
        assert_abs_diff_eq!(info.eps, 0.3, epsilon = 1e-12);
        let ext = SliceExtremizer::new(&out, cfg.grid, None).unwrap();
        let ex = ext.extrema(0.37).unwrap();
        assert_abs_diff_eq!(ex.min, 0.3, epsilon = 1e-10);
    }

    #[test]
    fn restricted_path_flows_to_intermediate_time() {
        let model = ContactModel::t3();
        let path = HamiltonianPath::reeb(model, 1.0);
        let half = path.restricted(0.5);
        let ens = model.canonical_ensemble(8);
        let trace = integrate(&half, &ens, 200).unwrap();
        for (p0, p1) in ens.iter().zip(trace.endpoints()) {
            let expect = model.reeb_flow(p0, 0.5);
            assert!(model.point_distance(&model.normalize(p1), &expect) <= 1e-9);
        }
    }

    #[test]
    fn right_translate_keeps_lengths_and_composes() {
        let model = ContactModel::t3();
        let path = HamiltonianPath::reeb(model, 0.4);
        let chi = ClosedMap::TorusTranslate { dx: 1.0, dy: -0.5 };
        let ens = model.canonical_ensemble(8);
        let trace = right_translate(&path, &chi, &ens, 200).unwrap();
        for (p0, p1) in ens.iter().zip(trace.endpoints()) {
            let moved = chi.apply(&model, p0).unwrap();
            let expect = model.reeb_flow(&moved, 0.4);
            assert!(model.point_distance(&model.normalize(p1), &expect) <= 1e-9);
        }
    }

    #[test]
    fn conformal_factor_of_reeb_flow_is_one() {
        for model in [ContactModel::t3(), ContactModel::j1s1(), ContactModel::s3()] {
            let path = HamiltonianPath::reeb(model, 0.8);
            let rho = conformal_factor(&path, 1.0, 12, 200).unwrap();
            assert!((rho.min - 1.0).abs() <= 1e-5, "{}: {:?}", model.name(), rho.min);
            assert!((rho.max - 1.0).abs() <= 1e-5);
            assert!(rho.consistency <= 1e-4);
        }
    }

    #[test]
    fn conformal_factor_consistency_on_nonstrict_flow() {
        let path = HamiltonianPath::sum(
            ContactModel::j1s1(),
            vec![PathTerm {
                profile: TimeProfile::Constant(0.5),
                basis: BasisFn::Jet {
                    q: Some(TrigFactor::cos(1)),
                    fiber: Some(FiberProfile::new(0, 2.0)),
                },
            }],
        )
        .unwrap();
        let rho = conformal_factor(&path, 1.0, 12, 300).unwrap();
        assert!(rho.consistency <= 1e-4, "consistency {}", rho.consistency);
    }

    #[test]
    fn j1s1_truncation_flag_fires_on_runaway_fiber() {
        // H = q-dependent without fiber cutoff pushes p linearly; from a
        // far start the trajectory exits the tracked region.
        let path = HamiltonianPath::sum(
            ContactModel::j1s1(),
            vec![PathTerm {
                profile: TimeProfile::Constant(-3.0),
                basis: BasisFn::Jet { q: Some(TrigFactor::cos(1)), fiber: None },
            }],
        )
        .unwrap();
        let start = vec![Point([0.5, 49.9, 0.0, 0.0])];
        let trace = integrate(&path, &start, 150).unwrap();
        assert!(trace.truncated);
    }

    #[test]
    fn weighted_lengths_match_plain_for_unit_weight() {
        let path = osc_t3();
        let rho = ScalarField::constant(ContactModel::t3(), 1.0);
        let cfg = LengthCfg::standard(&ContactModel::t3());
        let a = lorentz_length(&path, &cfg).unwrap();
        let b = lorentz_length_weighted(&path, &rho, &cfg).unwrap();
        assert_abs_diff_eq!(a.value, b.value, epsilon = 1e-12);
    }

    #[test]
    fn negative_weight_is_refused() {
        let path = osc_t3();
        let rho = ScalarField::constant(ContactModel::t3(), -2.0);
        let cfg = LengthCfg::standard(&ContactModel::t3());
        assert!(lorentz_length_weighted(&path, &rho, &cfg).is_err());
    }
}
