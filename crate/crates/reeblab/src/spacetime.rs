//! Product spacetimes over the two-torus and their skies.
//!
//! The spacetimes are g = -dt^2 + h on R x T2 with h flat or a conformal
//! trigonometric rescaling e^{2u}(dx^2 + dy^2); every {t} x T2 slice is
//! Cauchy, so global hyperbolicity is structural. Null geodesics project
//! to unit-speed h-geodesics parametrized by t. The sky of an event is the
//! set of null geodesics through it, recorded where they pierce the t = 0
//! slice as (position, momentum direction): a closed curve in ST*T2.
//!
//! Sky co-orientation. Backtracing to the Cauchy slice sends an event
//! moving to the future to sky curves sliding *against* the cogeodesic
//! flow: under the standard form cos(theta)dx + sin(theta)dy the induced
//! sky Hamiltonians of future timelike segments would come out negative.
//! The sky chart therefore carries the opposite co-orientation (the
//! `sky_t3` model), which flips the Reeb direction and makes future causal
//! motion induce non-negative sky isotopies, so the causal order on events
//! and the positivity order on sky Legendrians point the same way.
//!
//! The distance layer reports two numbers side by side and claims no
//! relation between them: the spacetime's own eigentime tau_g (closed-form
//! sqrt(dt^2 - d_h^2) when flat) and Legendrian bounds on the sky side,
//! where the certified lower bound of a straight timelike segment is
//! dt - d_h. Their comparison is exploratory output only.

use crate::error::{Error, Result};
use crate::fields::{BasisFn, TrigFactor};
use crate::flows::{HamiltonianPath, PathExpr, PathTerm, TimeProfile};
use crate::geom::{torus_shortest, wrap_angle, Point};
use crate::legendrian::{
    chekanov_upper, leg_isotopy, leg_lorentz_length, ChekanovCfg, LegCfg, LegIsotopy, Legendrian,
};
use crate::manifolds::ContactModel;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

// ---------------------------------------------------------------------------
// Spacetime and events
// ---------------------------------------------------------------------------

/// g = -dt^2 + e^{2u}(dx^2 + dy^2) on R x T2; empty `u_terms` is the flat
/// metric. The conformal factor is a trig polynomial in (x, y) with
/// |u| <= 1 enforced through the coefficient sum.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProductSpacetime {
    u_terms: Vec<(f64, BasisFn)>,
}

impl ProductSpacetime {
    pub fn flat() -> Self {
        ProductSpacetime { u_terms: Vec::new() }
    }

    /// Conformal factor from theta-free torus terms; the coefficient sum
    /// bounds sup|u| and must stay at or below one.
    pub fn conformal(terms: Vec<(f64, BasisFn)>) -> Result<Self> {
        let mut sum = 0.0;
        for (c, b) in &terms {
            match b {
                BasisFn::Const => {}
                BasisFn::Torus { theta: None, .. } => {}
                _ => {
                    return Err(Error::Config(
                        "conformal factor must be a torus trig polynomial in (x, y)".into(),
                    ))
                }
            }
            sum += c.abs();
        }
        if sum > 1.0 {
            return Err(Error::Config(format!("conformal factor bound {:.3} exceeds 1", sum)));
        }
        Ok(ProductSpacetime { u_terms: terms })
    }

    pub fn is_flat(&self) -> bool {
        self.u_terms.is_empty()
    }

    fn u(&self, x: f64, y: f64) -> f64 {
        let p = Point([x, y, 0.0, 0.0]);
        self.u_terms.iter().map(|(c, b)| c * b.eval(&p)).sum()
    }

    fn grad_u(&self, x: f64, y: f64) -> (f64, f64) {
        let p = Point([x, y, 0.0, 0.0]);
        let mut gx = 0.0;
        let mut gy = 0.0;
        for (c, b) in &self.u_terms {
            let g = b.grad(&p);
            gx += c * g.0[0];
            gy += c * g.0[1];
        }
        (gx, gy)
    }

    /// Lipschitz constant of u from the coefficients, for certified caps.
    fn u_lipschitz(&self) -> f64 {
        self.u_terms
            .iter()
            .map(|(c, b)| {
                let k = match b {
                    BasisFn::Torus { x, y, .. } => {
                        let kx = x.map_or(0, |f| f.k) as f64;
                        let ky = y.map_or(0, |f| f.k) as f64;
                        kx.hypot(ky)
                    }
                    _ => 0.0,
                };
                c.abs() * k
            })
            .sum()
    }

    /// Flat torus distance: shortest deck representative per coordinate.
    pub fn flat_distance(a: (f64, f64), b: (f64, f64)) -> f64 {
        let (dx, dy) = torus_shortest(b.0 - a.0, b.1 - a.1);
        dx.hypot(dy)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub t: f64,
    pub x: f64,
    pub y: f64,
}

impl Event {
    pub fn new(t: f64, x: f64, y: f64) -> Self {
        Event { t, x, y }
    }

    pub fn spatial(&self) -> (f64, f64) {
        (self.x, self.y)
    }
}

// ---------------------------------------------------------------------------
// Null geodesics
// ---------------------------------------------------------------------------

/// Cogeodesic state (x, y, px, py) for H = e^{-2u}|p|^2 / 2; unit h-speed
/// is |p| = e^u, kept exact by renormalizing after every step and tracked
/// as drift.
#[derive(Debug, Clone, Copy)]
struct CoState {
    x: f64,
    y: f64,
    px: f64,
    py: f64,
}

fn advance(s: &CoState, k: &[f64; 4], h: f64) -> CoState {
    CoState {
        x: s.x + h * k[0],
        y: s.y + h * k[1],
        px: s.px + h * k[2],
        py: s.py + h * k[3],
    }
}

fn costate_rhs(st: &ProductSpacetime, s: &CoState) -> [f64; 4] {
    let e2u = (-2.0 * st.u(s.x, s.y)).exp();
    let p2 = s.px * s.px + s.py * s.py;
    let (ux, uy) = st.grad_u(s.x, s.y);
    [e2u * s.px, e2u * s.py, ux * e2u * p2, uy * e2u * p2]
}

/// Unit-speed geodesic trace; positions unwrapped, one row per step plus
/// the start. Returns samples, momentum angles per row, and the worst
/// pre-renormalization speed defect per unit of span.
fn trace_geodesic(
    st: &ProductSpacetime,
    start: (f64, f64),
    theta: f64,
    span: f64,
    steps: usize,
) -> (Vec<(f64, f64)>, Vec<f64>, f64) {
    let scale = st.u(start.0, start.1).exp();
    let mut s = CoState {
        x: start.0,
        y: start.1,
        px: scale * theta.cos(),
        py: scale * theta.sin(),
    };
    let h = span / steps as f64;
    let mut pts = Vec::with_capacity(steps + 1);
    let mut angles = Vec::with_capacity(steps + 1);
    pts.push((s.x, s.y));
    angles.push(theta);
    let mut drift: f64 = 0.0;
    for _ in 0..steps {
        let k1 = costate_rhs(st, &s);
        let s2 = advance(&s, &k1, 0.5 * h);
        let k2 = costate_rhs(st, &s2);
        let s3 = advance(&s, &k2, 0.5 * h);
        let k3 = costate_rhs(st, &s3);
        let s4 = advance(&s, &k3, h);
        let k4 = costate_rhs(st, &s4);
        s.x += h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
        s.y += h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
        s.px += h / 6.0 * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2]);
        s.py += h / 6.0 * (k1[3] + 2.0 * k2[3] + 2.0 * k3[3] + k4[3]);
        // Unit-speed renormalization: |p| must equal e^u at the new point.
        let target = st.u(s.x, s.y).exp();
        let norm = s.px.hypot(s.py);
        drift = drift.max((norm / target - 1.0).abs());
        let fix = target / norm;
        s.px *= fix;
        s.py *= fix;
        pts.push((s.x, s.y));
        angles.push(s.py.atan2(s.px));
    }
    (pts, angles, drift / span.abs().max(1e-12))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NullGeodesic {
    pub theta: f64,
    /// Uniform in t from the event to event.t + span; positions wrapped.
    pub events: Vec<Event>,
    pub theta_end: f64,
    /// Worst unit-speed defect before renormalization, per unit span.
    pub drift: f64,
}

/// The null geodesic through `event` with spatial direction `theta`,
/// followed for `span` units of coordinate time (negative goes back).
pub fn null_geodesic(
    st: &ProductSpacetime,
    event: &Event,
    theta: f64,
    span: f64,
) -> Result<NullGeodesic> {
    if !(span.is_finite() && span.abs() <= 100.0) {
        return Err(Error::Refused(format!("span {} outside [-100, 100]", span)));
    }
    if span == 0.0 {
        return Ok(NullGeodesic {
            theta,
            events: vec![*event],
            theta_end: theta,
            drift: 0.0,
        });
    }
    let steps = ((span.abs() * 256.0).ceil() as usize).max(64);
    let (pts, angles, drift) = trace_geodesic(st, event.spatial(), theta, span, steps);
    let events = pts
        .iter()
        .enumerate()
        .map(|(i, &(x, y))| Event {
            t: event.t + span * i as f64 / steps as f64,
            x: wrap_angle(x),
            y: wrap_angle(y),
        })
        .collect();
    Ok(NullGeodesic { theta, events, theta_end: *angles.last().unwrap(), drift })
}

// ---------------------------------------------------------------------------
// Skies
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub struct SkyCfg {
    pub directions: usize,
    pub steps_per_unit: usize,
    /// Per-direction drift budget; offending directions are dropped and the
    /// sky is marked partial.
    pub drift_tol: f64,
}

impl Default for SkyCfg {
    fn default() -> Self {
        SkyCfg { directions: 512, steps_per_unit: 256, drift_tol: 1e-8 }
    }
}

/// The sky of an event: where its null geodesics pierce the t = 0 slice,
/// as a curve (x, y, momentum angle) in the sky-co-oriented ST*T2 chart.
#[derive(Debug, Clone)]
pub struct Sky {
    pub source: Event,
    pub curve: Legendrian,
    pub drift: f64,
    pub partial: bool,
}

impl Sky {
    pub fn model() -> ContactModel {
        ContactModel::sky_t3()
    }
}

/// Backtraces 256+ null directions from the event to the Cauchy slice.
/// At t = 0 the sky is the cotangent fiber itself, exactly.
pub fn sky(st: &ProductSpacetime, event: &Event, cfg: &SkyCfg) -> Result<Sky> {
    if cfg.directions < 256 {
        return Err(Error::Config("a sky needs at least 256 directions".into()));
    }
    let n = cfg.directions;
    let mut pts = Vec::with_capacity(n);
    let mut worst: f64 = 0.0;
    let mut partial = false;
    if event.t == 0.0 {
        for j in 0..n {
            let th = TAU * j as f64 / n as f64;
            pts.push(Point([event.x, event.y, th, 0.0]));
        }
    } else {
        let span = -event.t;
        let steps = ((span.abs() * cfg.steps_per_unit as f64).ceil() as usize).max(64);
        for j in 0..n {
            let th = TAU * j as f64 / n as f64;
            let (trace, angles, drift) = trace_geodesic(st, event.spatial(), th, span, steps);
            if drift > cfg.drift_tol {
                partial = true;
                continue;
            }
            worst = worst.max(drift);
            let (x, y) = *trace.last().unwrap();
            pts.push(Point([wrap_angle(x), wrap_angle(y), wrap_angle(*angles.last().unwrap()), 0.0]));
        }
    }
    if pts.is_empty() {
        return Err(Error::Infeasible("every sky direction exceeded the drift budget".into()));
    }
    Ok(Sky {
        source: *event,
        curve: Legendrian { components: vec![pts] },
        drift: worst,
        partial,
    })
}

/// Closed-form flat sky: {(q - t0 u(theta), theta)}.
pub fn flat_sky_closed_form(event: &Event, n: usize) -> Legendrian {
    let pts = (0..n)
        .map(|j| {
            let th = TAU * j as f64 / n as f64;
            Point([
                wrap_angle(event.x - event.t * th.cos()),
                wrap_angle(event.y - event.t * th.sin()),
                th,
                0.0,
            ])
        })
        .collect();
    Legendrian { components: vec![pts] }
}

// ---------------------------------------------------------------------------
// Eigentime
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EigentimeEstimate {
    pub value: f64,
    /// Set when the value is the closed form (flat); otherwise the value is
    /// a certified lower bound from a collocated polygonal path.
    pub exact: bool,
    /// Last-sweep improvement plus restart spread of the collocation.
    pub diagnostic: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct TauCfg {
    pub seed: u64,
    pub nodes: usize,
    pub sweeps: usize,
    pub restarts: usize,
}

impl Default for TauCfg {
    fn default() -> Self {
        TauCfg { seed: 0, nodes: 64, sweeps: 160, restarts: 3 }
    }
}

/// Greatest eigentime over future causal curves from p to q. Flat: the
/// closed form over deck translates. Conformal: gradient-ascent direct
/// collocation, returned as a certified lower bound for the polygonal
/// witness (conservative conformal cap between quadrature samples).
pub fn tau_g(st: &ProductSpacetime, p: &Event, q: &Event, cfg: &TauCfg) -> EigentimeEstimate {
    let dt = q.t - p.t;
    if st.is_flat() {
        let dh = ProductSpacetime::flat_distance(p.spatial(), q.spatial());
        let value = if dt >= dh { (dt * dt - dh * dh).sqrt() } else { 0.0 };
        return EigentimeEstimate { value, exact: true, diagnostic: 0.0 };
    }
    if dt <= 0.0 {
        return EigentimeEstimate { value: 0.0, exact: false, diagnostic: 0.0 };
    }

    // Optimize over spatial polygons with affine time; torus topology enters
    // through the deck translate of the endpoint.
    let (sx, sy) = torus_shortest(q.x - p.x, q.y - p.y);
    let n = cfg.nodes.max(8);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    // Restart jitter stays well under the per-segment time budget so the
    // perturbed polygons remain timelike.
    let budget = dt / n as f64;
    let mut runs: Vec<(f64, f64)> = Vec::new();
    for restart in 0..cfg.restarts.max(1) {
        let jitter = 0.1 * budget * restart as f64;
        let mut xs: Vec<(f64, f64)> = (0..=n)
            .map(|i| {
                let f = i as f64 / n as f64;
                let (jx, jy) = if i == 0 || i == n {
                    (0.0, 0.0)
                } else {
                    (rng.gen_range(-1.0..1.0) * jitter, rng.gen_range(-1.0..1.0) * jitter)
                };
                (p.x + f * sx + jx, p.y + f * sy + jy)
            })
            .collect();
        let mut step = 0.1;
        let mut gain = 0.0;
        let mut prev = polygon_eigentime(st, &xs, dt);
        for _ in 0..cfg.sweeps {
            let grad = polygon_gradient(st, &xs, dt);
            let mut trial = xs.clone();
            for i in 1..n {
                trial[i].0 += step * grad[i].0;
                trial[i].1 += step * grad[i].1;
            }
            let v = polygon_eigentime(st, &trial, dt);
            if v > prev {
                gain = v - prev;
                xs = trial;
                prev = v;
                step *= 1.1;
            } else {
                step *= 0.5;
                if step < 1e-9 {
                    break;
                }
            }
        }
        let certified = polygon_certified_lower(st, &xs, dt);
        if certified > 0.0 {
            runs.push((certified, gain));
        }
    }
    let Some(&(best, best_gain)) = runs.iter().max_by(|a, b| a.0.total_cmp(&b.0)) else {
        return EigentimeEstimate { value: 0.0, exact: false, diagnostic: 0.0 };
    };
    let worst = runs.iter().map(|r| r.0).fold(f64::INFINITY, f64::min);
    EigentimeEstimate { value: best, exact: false, diagnostic: best_gain + (best - worst) }
}

fn polygon_eigentime(st: &ProductSpacetime, xs: &[(f64, f64)], dt: f64) -> f64 {
    let n = xs.len() - 1;
    let dts = dt / n as f64;
    let mut total = 0.0;
    for i in 0..n {
        let (mx, my) = ((xs[i].0 + xs[i + 1].0) / 2.0, (xs[i].1 + xs[i + 1].1) / 2.0);
        let l = st.u(mx, my).exp() * (xs[i + 1].0 - xs[i].0).hypot(xs[i + 1].1 - xs[i].1);
        let s2 = dts * dts - l * l;
        if s2 <= 0.0 {
            return f64::NEG_INFINITY;
        }
        total += s2.sqrt();
    }
    total
}

fn polygon_gradient(st: &ProductSpacetime, xs: &[(f64, f64)], dt: f64) -> Vec<(f64, f64)> {
    let n = xs.len() - 1;
    let dts = dt / n as f64;
    let mut grad = vec![(0.0, 0.0); n + 1];
    for i in 0..n {
        let (ax, ay) = xs[i];
        let (bx, by) = xs[i + 1];
        let (mx, my) = ((ax + bx) / 2.0, (ay + by) / 2.0);
        let e2u = (2.0 * st.u(mx, my)).exp();
        let (ux, uy) = st.grad_u(mx, my);
        let (dx, dy) = (bx - ax, by - ay);
        let d2 = dx * dx + dy * dy;
        let s2 = dts * dts - e2u * d2;
        if s2 <= 1e-12 {
            continue;
        }
        let inv = 1.0 / (2.0 * s2.sqrt());
        // d(e2u d2)/db = 2 e2u (dx, dy) + e2u d2 (ux, uy); midpoint halves
        // the conformal term for both endpoints.
        let cbx = 2.0 * e2u * dx + e2u * d2 * ux;
        let cby = 2.0 * e2u * dy + e2u * d2 * uy;
        let cax = -2.0 * e2u * dx + e2u * d2 * ux;
        let cay = -2.0 * e2u * dy + e2u * d2 * uy;
        grad[i + 1].0 -= inv * cbx;
        grad[i + 1].1 -= inv * cby;
        grad[i].0 -= inv * cax;
        grad[i].1 -= inv * cay;
    }
    grad[0] = (0.0, 0.0);
    grad[n] = (0.0, 0.0);
    grad
}

/// Exact-side lower bound for the eigentime of the polygonal path: on each
/// segment the conformal factor is capped by its quadrature maximum plus
/// the Lipschitz slack over the sample gap.
fn polygon_certified_lower(st: &ProductSpacetime, xs: &[(f64, f64)], dt: f64) -> f64 {
    let n = xs.len() - 1;
    let dts = dt / n as f64;
    let lip = st.u_lipschitz();
    let mut total = 0.0;
    for i in 0..n {
        let (ax, ay) = xs[i];
        let (bx, by) = xs[i + 1];
        let d = (bx - ax).hypot(by - ay);
        let mut umax = f64::NEG_INFINITY;
        const K: usize = 8;
        for j in 0..=K {
            let f = j as f64 / K as f64;
            umax = umax.max(st.u(ax + f * (bx - ax), ay + f * (by - ay)));
        }
        let cap = umax + lip * d / (2.0 * K as f64);
        let s2 = dts * dts - (cap.exp() * d).powi(2);
        if s2 <= 0.0 {
            return 0.0;
        }
        total += s2.sqrt();
    }
    total
}

// ---------------------------------------------------------------------------
// Sky distance and order
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct SkyDistanceUpper {
    /// |dt| + d_h plus nothing: the witness family is exact.
    pub upper: f64,
    pub time_part: f64,
    pub space_part: f64,
    /// Witness endpoint vs target sky, point Hausdorff.
    pub residual: f64,
    pub eta: f64,
    pub certified: bool,
    pub witness: HamiltonianPath,
    /// Set when a Chekanov search improved on the structural witness.
    pub refined: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct SkyDistCfg {
    pub sky: SkyCfg,
    pub eta: f64,
    pub steps: usize,
    /// Optional Chekanov refinement on top of the structural witness.
    pub refine: Option<ChekanovCfg>,
}

impl Default for SkyDistCfg {
    fn default() -> Self {
        SkyDistCfg { sky: SkyCfg::default(), eta: 1e-6, steps: 400, refine: None }
    }
}

/// Upper bound for the sky distance: a Reeb shift absorbs the time
/// difference, a rigid translation lift absorbs the spatial difference
/// along a shortest torus segment. Both Hamiltonians are theta-only trig,
/// so the Shelukhin cost |dt| + d_h is exact; the concatenated flow is
/// integrated and its endpoint checked against the target sky.
pub fn sky_distance_upper(
    st: &ProductSpacetime,
    p: &Event,
    q: &Event,
    cfg: &SkyDistCfg,
) -> Result<SkyDistanceUpper> {
    let model = Sky::model();
    let sky_p = sky(st, p, &cfg.sky)?;
    let sky_q = sky(st, q, &cfg.sky)?;
    if sky_p.partial || sky_q.partial {
        return Err(Error::Infeasible("partial sky: drift budget exceeded".into()));
    }
    let dt = q.t - p.t;
    let (dx, dy) = torus_shortest(q.x - p.x, q.y - p.y);
    let time_part = dt.abs();
    let space_part = dx.hypot(dy);

    // Sky co-orientation: H = c translates sky positions by -c u(theta), so
    // c = dt retargets the time slice; H = a cos + b sin translates by
    // -(a, b), so (a, b) = -(dx, dy).
    let shift = HamiltonianPath::reeb(model, dt);
    let translate = HamiltonianPath::sum(
        model,
        vec![
            PathTerm {
                profile: TimeProfile::Constant(-dx),
                basis: BasisFn::Torus { x: None, y: None, theta: Some(TrigFactor::cos(1)) },
            },
            PathTerm {
                profile: TimeProfile::Constant(-dy),
                basis: BasisFn::Torus { x: None, y: None, theta: Some(TrigFactor::sin(1)) },
            },
        ],
    )?;
    let witness = HamiltonianPath {
        model,
        expr: PathExpr::Concat {
            first: Box::new(shift.expr.clone()),
            second: Box::new(translate.expr.clone()),
        },
    };

    // The concatenation only reparametrizes each leg in time, so its
    // endpoint equals the composition of the two leg flows; integrating the
    // legs separately checks the same witness without the warp's time
    // derivatives polluting the velocity residual.
    let leg_cfg = LegCfg { steps: cfg.steps, ..Default::default() };
    let iso1 = leg_isotopy(&shift, &sky_p.curve, &leg_cfg)?;
    let iso2 = leg_isotopy(&translate, &iso1.final_curve(), &leg_cfg)?;
    let residual = iso2.final_curve().hausdorff(&model, &sky_q.curve);
    let mut upper = time_part + space_part;
    let mut certified = residual <= cfg.eta;
    let mut refined = false;
    let mut out_witness = witness;
    if let Some(ck) = &cfg.refine {
        let est = chekanov_upper(&model, &sky_p.curve, &sky_q.curve, ck)?;
        if est.certified && est.upper < upper {
            upper = est.upper;
            certified = true;
            refined = true;
            out_witness = est.witness;
        }
    }
    Ok(SkyDistanceUpper {
        upper,
        time_part,
        space_part,
        residual,
        eta: cfg.eta,
        certified,
        witness: out_witness,
        refined,
    })
}

#[derive(Debug, Clone)]
pub struct SkyOrderCertificate {
    /// Closed-form minimum of the sky Hamiltonian: dt - d_h.
    pub margin: f64,
    /// Integral of the per-time curve minima; constant track, so equal to
    /// the margin.
    pub leg_tau_lower: f64,
    /// Minimum over the traced samples; at least the margin, above it by at
    /// most the angular resolution term.
    pub sampled_min: f64,
    /// The spacetime's own eigentime for the pair, reported side by side.
    /// No relation between the two columns is claimed.
    pub tau_g: f64,
    pub iso: LegIsotopy,
}

/// Positive sky isotopy along the straight timelike segment from p to q.
/// The induced sky Hamiltonian is dt - (dq . u(theta)), whose curve
/// minimum dt - d_h is positive exactly when the pair is strictly
/// timelike; otherwise there is no certificate.
pub fn sky_order_certificate(
    st: &ProductSpacetime,
    p: &Event,
    q: &Event,
    cfg: &SkyCfg,
) -> Result<Option<SkyOrderCertificate>> {
    if !st.is_flat() {
        return Err(Error::Refused("sky order certificates need the flat metric".into()));
    }
    let dt = q.t - p.t;
    let (dx, dy) = torus_shortest(q.x - p.x, q.y - p.y);
    let dh = dx.hypot(dy);
    let margin = dt - dh;
    if dt <= 0.0 || margin <= 0.0 {
        return Ok(None);
    }

    let model = Sky::model();
    let path = HamiltonianPath::sum(
        model,
        vec![
            PathTerm { profile: TimeProfile::Constant(dt), basis: BasisFn::Const },
            PathTerm {
                profile: TimeProfile::Constant(-dx),
                basis: BasisFn::Torus { x: None, y: None, theta: Some(TrigFactor::cos(1)) },
            },
            PathTerm {
                profile: TimeProfile::Constant(-dy),
                basis: BasisFn::Torus { x: None, y: None, theta: Some(TrigFactor::sin(1)) },
            },
        ],
    )?;
    let sky_p = sky(st, p, cfg)?;
    let iso = leg_isotopy(&path, &sky_p.curve, &LegCfg::default())?;

    // The moving curve keeps sweeping every direction, so the sampled
    // minimum can only sit above the closed form by the angular resolution.
    let sampled_min = iso.min_track.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    let resolution = dh * (TAU / cfg.directions as f64).powi(2) / 2.0 + 1e-9;
    if sampled_min < margin - 1e-9 || sampled_min > margin + resolution {
        return Err(Error::Regularity(format!(
            "sampled sky minimum {:.9} disagrees with the closed form {:.9}",
            sampled_min, margin
        )));
    }
    let sanity = leg_lorentz_length(&iso);
    if (sanity.value - margin).abs() > resolution + 1e-9 {
        return Err(Error::Regularity("sky isotopy length drifted from the closed form".into()));
    }

    let endpoint = iso.final_curve();
    let target = flat_sky_closed_form(q, cfg.directions);
    let gap = endpoint.hausdorff(&model, &target);
    if gap > 1e-6 {
        return Err(Error::Regularity(format!("sky isotopy misses the target sky by {:.3e}", gap)));
    }

    let eigentime = tau_g(st, p, q, &TauCfg::default()).value;
    Ok(Some(SkyOrderCertificate {
        margin,
        leg_tau_lower: margin,
        sampled_min,
        tau_g: eigentime,
        iso,
    }))
}
