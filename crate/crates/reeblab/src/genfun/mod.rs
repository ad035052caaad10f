//! Generating functions on the circle and the structures they induce.
//!
//! A generating function here is S(q, e) = f(q, e) + Q(e) + offset on
//! S1 x R^m with m <= 2, where Q is a nondegenerate diagonal quadratic form
//! and f is a trigonometric-polynomial sum in q times compactly supported
//! fiber factors. The fiber-critical locus {d_e S = 0} embeds into the 1-jet
//! space of the circle as (q, dS/dq, S); this module extracts that locus,
//! builds the curve, and (in the submodules) runs the sublevel filtration
//! that produces spectral invariants, plus the cotangent-model transport
//! that connects them to flows.
//!
//! Fiber factors are bump(e) * e^p with a shared C^2 plateau bump: identically
//! 1 on [-plateau, plateau], identically 0 outside [-support, support]. All
//! critical points of shipped functions live inside the plateau, where S is an
//! exact polynomial in e and closed-form root oracles apply.

mod cubical;
mod hodograph;
mod spectral;

pub use hodograph::{
    cross_bound_check, hodograph, hodograph_inv, hodograph_push, transported_fiber_family,
    CrossBoundCfg, CrossBoundReport, SpectralLeg, WeightedLeg,
};
pub use spectral::{
    family_velocity, sandwich_check, spectral_invariant, HomologyClass, SandwichCfg,
    SandwichReport, SpectralGrid, SpectralValue, VelocityProbe,
};

use crate::error::{Error, Result};
use crate::fields::TrigFactor;
use crate::flows::{smoothstep5, smoothstep5_deriv, TimeProfile};
use crate::geom::angle_diff;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

fn smoothstep5_dd(u: f64) -> f64 {
    60.0 * u * (1.0 - u) * (1.0 - 2.0 * u)
}

/// C^2 plateau bump: 1 on [-plateau, plateau], 0 outside [-support, support].
fn bump(x: f64, plateau: f64, support: f64) -> f64 {
    let a = x.abs();
    if a <= plateau {
        1.0
    } else if a >= support {
        0.0
    } else {
        1.0 - smoothstep5((a - plateau) / (support - plateau))
    }
}

fn bump_d(x: f64, plateau: f64, support: f64) -> f64 {
    let a = x.abs();
    if a <= plateau || a >= support {
        0.0
    } else {
        let w = support - plateau;
        -smoothstep5_deriv((a - plateau) / w) / w * x.signum()
    }
}

fn bump_dd(x: f64, plateau: f64, support: f64) -> f64 {
    let a = x.abs();
    if a <= plateau || a >= support {
        0.0
    } else {
        let w = support - plateau;
        -smoothstep5_dd((a - plateau) / w) / (w * w)
    }
}

/// bump(e) * e^p and its first two derivatives.
fn fiber_factor(e: f64, p: u32, plateau: f64, support: f64) -> f64 {
    bump(e, plateau, support) * e.powi(p as i32)
}

fn fiber_factor_d(e: f64, p: u32, plateau: f64, support: f64) -> f64 {
    let mut v = bump_d(e, plateau, support) * e.powi(p as i32);
    if p > 0 {
        v += bump(e, plateau, support) * p as f64 * e.powi(p as i32 - 1);
    }
    v
}

fn fiber_factor_dd(e: f64, p: u32, plateau: f64, support: f64) -> f64 {
    let mut v = bump_dd(e, plateau, support) * e.powi(p as i32);
    if p > 0 {
        v += 2.0 * bump_d(e, plateau, support) * p as f64 * e.powi(p as i32 - 1);
    }
    if p > 1 {
        v += bump(e, plateau, support) * (p * (p - 1)) as f64 * e.powi(p as i32 - 2);
    }
    v
}

/// One summand of the compactly supported part: coef * trig(q) * prod over
/// fiber axes of bump(e_a) * e_a^{pows[a]}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FTerm {
    pub coef: f64,
    pub trig: TrigFactor,
    pub pows: [u32; 2],
}

impl FTerm {
    pub fn constant(coef: f64) -> Self {
        FTerm { coef, trig: TrigFactor::cos(0), pows: [0, 0] }
    }

    pub fn circle(coef: f64, trig: TrigFactor) -> Self {
        FTerm { coef, trig, pows: [0, 0] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenFun {
    m: usize,
    lambda: [f64; 2],
    terms: Vec<FTerm>,
    plateau: f64,
    support: f64,
    offset: f64,
    q_idx: usize,
}

impl GenFun {
    pub fn new(
        m: usize,
        lambda: [f64; 2],
        terms: Vec<FTerm>,
        plateau: f64,
        support: f64,
    ) -> Result<Self> {
        if m > 2 {
            return Err(Error::Config(format!("fiber dimension {m} exceeds 2")));
        }
        if m > 0 && !(plateau > 0.0 && support > plateau) {
            return Err(Error::Config(format!(
                "need 0 < plateau < support, got {plateau} / {support}"
            )));
        }
        let mut q_idx = 0;
        for (a, &l) in lambda.iter().enumerate().take(m) {
            if l == 0.0 || !l.is_finite() {
                return Err(Error::Config(format!("degenerate quadratic entry {l} on axis {a}")));
            }
            if l < 0.0 {
                q_idx += 1;
            }
        }
        for t in &terms {
            if !t.coef.is_finite() {
                return Err(Error::Config("non-finite coefficient".into()));
            }
            for a in m..2 {
                if t.pows[a] != 0 {
                    return Err(Error::Config(format!(
                        "term uses fiber axis {a} beyond dimension {m}"
                    )));
                }
            }
        }
        Ok(GenFun { m, lambda, terms, plateau, support, offset: 0.0, q_idx })
    }

    /// A 1-jet style function: no fiber variables at all.
    pub fn jet(terms: Vec<FTerm>) -> Self {
        GenFun::new(0, [0.0; 2], terms, 1.0, 2.0).unwrap()
    }

    pub fn fiber_dim(&self) -> usize {
        self.m
    }

    /// Count of negative squares in the quadratic form.
    pub fn q_index(&self) -> usize {
        self.q_idx
    }

    pub fn support_radius(&self) -> f64 {
        self.support
    }

    pub fn plateau_radius(&self) -> f64 {
        self.plateau
    }

    pub fn quadratic(&self) -> &[f64] {
        &self.lambda[..self.m]
    }

    pub fn terms(&self) -> &[FTerm] {
        &self.terms
    }

    /// S + c. The shift is applied after everything else, so filtration
    /// values move by exactly the floating-point sum.
    pub fn shifted(&self, c: f64) -> GenFun {
        let mut out = self.clone();
        out.offset += c;
        out
    }

    /// Adds an inert fiber axis with a positive square. The critical locus
    /// and both spectral values are unchanged by construction.
    pub fn stabilized(&self) -> Result<GenFun> {
        if self.m >= 2 {
            return Err(Error::Config("cannot stabilize past fiber dimension 2".into()));
        }
        let mut out = self.clone();
        if out.m == 0 {
            out.plateau = 1.0;
            out.support = 2.0;
        }
        out.lambda[out.m] = 1.0;
        out.m += 1;
        Ok(out)
    }

    fn fiber_product(&self, t: &FTerm, e: &[f64]) -> f64 {
        let mut v = 1.0;
        for a in 0..self.m {
            v *= fiber_factor(e[a], t.pows[a], self.plateau, self.support);
        }
        v
    }

    pub fn value(&self, q: f64, e: &[f64]) -> f64 {
        debug_assert_eq!(e.len(), self.m);
        let mut s = 0.0;
        for a in 0..self.m {
            s += self.lambda[a] * e[a] * e[a];
        }
        for t in &self.terms {
            s += t.coef * t.trig.eval(q) * self.fiber_product(t, e);
        }
        s + self.offset
    }

    pub fn dq(&self, q: f64, e: &[f64]) -> f64 {
        let mut s = 0.0;
        for t in &self.terms {
            s += t.coef * t.trig.deriv(q) * self.fiber_product(t, e);
        }
        s
    }

    pub fn de(&self, q: f64, e: &[f64], axis: usize) -> f64 {
        debug_assert!(axis < self.m);
        let mut s = 2.0 * self.lambda[axis] * e[axis];
        for t in &self.terms {
            let mut v = t.coef * t.trig.eval(q);
            for a in 0..self.m {
                v *= if a == axis {
                    fiber_factor_d(e[a], t.pows[a], self.plateau, self.support)
                } else {
                    fiber_factor(e[a], t.pows[a], self.plateau, self.support)
                };
            }
            s += v;
        }
        s
    }

    /// Fiber Hessian entry.
    fn dee(&self, q: f64, e: &[f64], i: usize, j: usize) -> f64 {
        let mut s = if i == j { 2.0 * self.lambda[i] } else { 0.0 };
        for t in &self.terms {
            let mut v = t.coef * t.trig.eval(q);
            for a in 0..self.m {
                v *= if a == i && a == j {
                    fiber_factor_dd(e[a], t.pows[a], self.plateau, self.support)
                } else if a == i || a == j {
                    fiber_factor_d(e[a], t.pows[a], self.plateau, self.support)
                } else {
                    fiber_factor(e[a], t.pows[a], self.plateau, self.support)
                };
            }
            s += v;
        }
        s
    }

    /// Largest possible |f| + |negative quadratic part| over the support
    /// window, offset excluded so the bound is shift-invariant; used to size
    /// the filtration box.
    pub(crate) fn depth_bound(&self) -> f64 {
        let mut b = 0.0;
        for t in &self.terms {
            let mut v = t.coef.abs();
            for a in 0..self.m {
                v *= self.support.powi(t.pows[a] as i32).max(1.0);
            }
            b += v;
        }
        for a in 0..self.m {
            if self.lambda[a] < 0.0 {
                b += -self.lambda[a] * self.support * self.support;
            }
        }
        b
    }

    pub(crate) fn offset_value(&self) -> f64 {
        self.offset
    }
}

/// A time family S_t with per-term coefficient profiles and a time-dependent
/// additive offset. `at(t)` materializes the slice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenFamily {
    base: GenFun,
    profiles: Vec<TimeProfile>,
    offset: TimeProfile,
}

impl GenFamily {
    pub fn new(
        m: usize,
        lambda: [f64; 2],
        terms: Vec<(TimeProfile, FTerm)>,
        plateau: f64,
        support: f64,
    ) -> Result<Self> {
        let (profiles, fterms): (Vec<_>, Vec<_>) = terms.into_iter().unzip();
        let base = GenFun::new(m, lambda, fterms, plateau, support)?;
        Ok(GenFamily { base, profiles, offset: TimeProfile::Constant(0.0) })
    }

    pub fn with_offset(mut self, offset: TimeProfile) -> Self {
        self.offset = offset;
        self
    }

    pub fn at(&self, t: f64) -> GenFun {
        let mut gf = self.base.clone();
        for (term, profile) in gf.terms.iter_mut().zip(&self.profiles) {
            term.coef *= profile.eval(t);
        }
        gf.offset = self.offset.eval(t);
        gf
    }

    pub fn fiber_dim(&self) -> usize {
        self.base.m
    }

    pub fn base(&self) -> &GenFun {
        &self.base
    }

    pub fn profiles(&self) -> &[TimeProfile] {
        &self.profiles
    }

    pub fn offset_profile(&self) -> &TimeProfile {
        &self.offset
    }

    /// Whether the t = 0 slice is the bare quadratic form.
    pub fn starts_at_fiber_form(&self) -> bool {
        let g = self.at(0.0);
        g.offset.abs() <= 1e-12 && g.terms.iter().all(|t| t.coef.abs() <= 1e-12)
    }
}

// ---------------------------------------------------------------------------
// Critical locus
// ---------------------------------------------------------------------------

/// Sampling resolution for the locus: `nq` circle columns, `ne` fiber scan
/// samples (root isolation for m = 1, Newton seeds per axis for m = 2).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LocusGrid {
    pub nq: usize,
    pub ne: usize,
}

impl LocusGrid {
    pub fn default_for(m: usize) -> Self {
        match m {
            0 => LocusGrid { nq: 4096, ne: 0 },
            1 => LocusGrid { nq: 1024, ne: 513 },
            _ => LocusGrid { nq: 256, ne: 21 },
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CriticalSample {
    pub q: f64,
    pub e: [f64; 2],
    /// S at the sample; the z coordinate of the curve.
    pub value: f64,
    /// dS/dq at the sample; the p coordinate of the curve.
    pub slope: f64,
}

#[derive(Debug, Clone)]
pub struct CriticalComponent {
    pub samples: Vec<CriticalSample>,
    pub closed: bool,
}

#[derive(Debug, Clone)]
pub struct CriticalLocus {
    pub components: Vec<CriticalComponent>,
    /// (q, e) locations where the fiber derivative nearly vanishes without a
    /// sign change: failures of 0 being a regular value at this resolution.
    pub tangencies: Vec<(f64, f64)>,
    /// Column transitions the matcher could not explain as a clean fold.
    pub link_warnings: usize,
}

impl CriticalLocus {
    pub fn is_regular(&self) -> bool {
        self.tangencies.is_empty() && self.link_warnings == 0
    }

    pub fn sample_count(&self) -> usize {
        self.components.iter().map(|c| c.samples.len()).sum()
    }
}

const ROOT_WIDTH: f64 = 1e-12;
/// A pure quadratic tangency sampled at worst half a step off gives
/// |g| / |second difference| = 1/8; anything under this ratio is flagged.
const TANGENT_CURVE_RATIO: f64 = 0.3;

/// Roots of g on [-support, support] for one column, by sign-change bisection,
/// plus near-tangencies.
fn column_roots(
    g: &dyn Fn(f64) -> f64,
    support: f64,
    ne: usize,
) -> (Vec<f64>, Vec<f64>) {
    let n = ne.max(33);
    let h = 2.0 * support / (n - 1) as f64;
    let xs: Vec<f64> = (0..n).map(|i| -support + h * i as f64).collect();
    let gs: Vec<f64> = xs.iter().map(|&x| g(x)).collect();
    let mut roots = Vec::new();
    let mut tangents = Vec::new();
    for i in 0..n - 1 {
        if gs[i] == 0.0 {
            roots.push(xs[i]);
            // An exact zero the derivative does not cross is a tangency.
            if i > 0 && gs[i - 1] * gs[i + 1] > 0.0 {
                tangents.push(xs[i]);
            }
            continue;
        }
        if gs[i] * gs[i + 1] < 0.0 {
            let (mut lo, mut hi) = (xs[i], xs[i + 1]);
            let (mut glo, _) = (gs[i], gs[i + 1]);
            while hi - lo > ROOT_WIDTH {
                let mid = 0.5 * (lo + hi);
                let gm = g(mid);
                if gm == 0.0 {
                    lo = mid;
                    hi = mid;
                } else if (gm > 0.0) == (glo > 0.0) {
                    lo = mid;
                    glo = gm;
                } else {
                    hi = mid;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
    }
    if gs[n - 1] == 0.0 {
        roots.push(xs[n - 1]);
    }
    // A sign-preserving local minimum of |g| that is quadratically small
    // against the local curvature cannot be separated from a double root at
    // this resolution.
    for i in 1..n - 1 {
        let v = gs[i].abs();
        let curve = (gs[i - 1] - 2.0 * gs[i] + gs[i + 1]).abs();
        if v <= gs[i - 1].abs()
            && v <= gs[i + 1].abs()
            && gs[i - 1] * gs[i] > 0.0
            && gs[i] * gs[i + 1] > 0.0
            && v <= TANGENT_CURVE_RATIO * curve
        {
            tangents.push(xs[i]);
        }
    }
    (roots, tangents)
}

/// Newton roots of the fiber gradient for one column (m = 2).
fn column_roots_2d(gf: &GenFun, q: f64, seeds: usize) -> (Vec<[f64; 2]>, Vec<f64>) {
    let r = gf.support;
    let n = seeds.max(9);
    let h = 2.0 * r / (n - 1) as f64;
    let mut roots: Vec<[f64; 2]> = Vec::new();
    let mut tangents = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let mut e = [-r + h * i as f64, -r + h * j as f64];
            let mut ok = false;
            for _ in 0..60 {
                let g = [gf.de(q, &e, 0), gf.de(q, &e, 1)];
                let gn = g[0].abs().max(g[1].abs());
                if gn < 1e-11 {
                    ok = true;
                    break;
                }
                let h00 = gf.dee(q, &e, 0, 0);
                let h01 = gf.dee(q, &e, 0, 1);
                let h11 = gf.dee(q, &e, 1, 1);
                let det = h00 * h11 - h01 * h01;
                if det.abs() < 1e-13 {
                    break;
                }
                let dx = (-g[0] * h11 + g[1] * h01) / det;
                let dy = (g[0] * h01 - g[1] * h00) / det;
                let mut lam = 1.0;
                let mut stepped = false;
                for _ in 0..8 {
                    let cand = [e[0] + lam * dx, e[1] + lam * dy];
                    if cand[0].abs() > 1.5 * r || cand[1].abs() > 1.5 * r {
                        lam *= 0.5;
                        continue;
                    }
                    let gc = [gf.de(q, &cand, 0), gf.de(q, &cand, 1)];
                    if gc[0].abs().max(gc[1].abs()) < gn {
                        e = cand;
                        stepped = true;
                        break;
                    }
                    lam *= 0.5;
                }
                if !stepped {
                    break;
                }
            }
            if ok && e[0].abs() <= r && e[1].abs() <= r {
                if !roots.iter().any(|x| (x[0] - e[0]).abs() < 1e-8 && (x[1] - e[1]).abs() < 1e-8) {
                    let h00 = gf.dee(q, &e, 0, 0);
                    let h01 = gf.dee(q, &e, 0, 1);
                    let h11 = gf.dee(q, &e, 1, 1);
                    if (h00 * h11 - h01 * h01).abs() < 1e-8 {
                        tangents.push(e[0]);
                    }
                    roots.push(e);
                }
            }
        }
    }
    roots.sort_by(|a, b| (a[0], a[1]).partial_cmp(&(b[0], b[1])).unwrap());
    (roots, tangents)
}

struct LocusNode {
    col: usize,
    e: [f64; 2],
}

/// Link roots across adjacent columns into curve components. Equal counts
/// match in fiber order; a count jump of two is treated as a fold (the
/// closest adjacent pair is born or dies together); anything else is counted
/// as a warning and matched greedily.
fn link_columns(
    nodes: &[LocusNode],
    columns: &[Vec<usize>],
    wrap: bool,
) -> (Vec<Vec<usize>>, Vec<bool>, usize) {
    let ncol = columns.len();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); nodes.len()];
    let mut warnings = 0;
    let gap = |id: usize, jd: usize| -> f64 {
        let (a, b) = (&nodes[id].e, &nodes[jd].e);
        ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
    };
    let link = |adj: &mut Vec<Vec<usize>>, a: usize, b: usize| {
        adj[a].push(b);
        adj[b].push(a);
    };
    let last = if wrap { ncol } else { ncol - 1 };
    for i in 0..last {
        let j = (i + 1) % ncol;
        let a = &columns[i];
        let b = &columns[j];
        if a.len() == b.len() {
            for (&x, &y) in a.iter().zip(b) {
                link(&mut adj, x, y);
            }
        } else if b.len() == a.len() + 2 && !b.is_empty() {
            let mut best = 0;
            for k in 1..b.len() - 1 {
                if gap(b[k], b[k + 1]) < gap(b[best], b[best + 1]) {
                    best = k;
                }
            }
            if b.len() == 2 {
                best = 0;
            }
            link(&mut adj, b[best], b[best + 1]);
            let rest: Vec<usize> =
                b.iter().enumerate().filter(|(k, _)| *k != best && *k != best + 1).map(|(_, &v)| v).collect();
            for (&x, &y) in a.iter().zip(&rest) {
                link(&mut adj, x, y);
            }
        } else if a.len() == b.len() + 2 && !a.is_empty() {
            let mut best = 0;
            for k in 1..a.len() - 1 {
                if gap(a[k], a[k + 1]) < gap(a[best], a[best + 1]) {
                    best = k;
                }
            }
            if a.len() == 2 {
                best = 0;
            }
            link(&mut adj, a[best], a[best + 1]);
            let rest: Vec<usize> =
                a.iter().enumerate().filter(|(k, _)| *k != best && *k != best + 1).map(|(_, &v)| v).collect();
            for (&x, &y) in rest.iter().zip(b) {
                link(&mut adj, x, y);
            }
        } else {
            warnings += 1;
            for (&x, &y) in a.iter().zip(b) {
                link(&mut adj, x, y);
            }
        }
    }

    // Walk components: open chains start at a degree-one node, cycles at
    // their smallest node id.
    let mut seen = vec![false; nodes.len()];
    let mut comps = Vec::new();
    let mut closed_flags = Vec::new();
    for start in 0..nodes.len() {
        if seen[start] {
            continue;
        }
        let mut member = Vec::new();
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(v) = stack.pop() {
            member.push(v);
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        member.sort_unstable();
        let ends: Vec<usize> = member.iter().copied().filter(|&v| adj[v].len() == 1).collect();
        let branched = member.iter().any(|&v| adj[v].len() > 2);
        if branched || ends.len() > 2 {
            warnings += 1;
            comps.push(member);
            closed_flags.push(false);
            continue;
        }
        let head = *ends.first().unwrap_or(&member[0]);
        let mut walk = vec![head];
        let mut prev = usize::MAX;
        let mut cur = head;
        loop {
            let next = adj[cur].iter().copied().find(|&w| w != prev);
            match next {
                Some(w) if w != head => {
                    walk.push(w);
                    prev = cur;
                    cur = w;
                }
                _ => break,
            }
        }
        let closed = ends.is_empty() && walk.len() > 2;
        comps.push(walk);
        closed_flags.push(closed);
    }
    (comps, closed_flags, warnings)
}

/// Sample the fiber-critical locus on `grid.nq` circle columns.
pub fn critical_locus(gf: &GenFun, grid: &LocusGrid) -> Result<CriticalLocus> {
    if grid.nq < 8 {
        return Err(Error::Config("need at least 8 circle columns".into()));
    }
    let nq = grid.nq;
    let qs: Vec<f64> = (0..nq).map(|i| TAU * i as f64 / nq as f64).collect();

    if gf.m == 0 {
        let samples = qs
            .iter()
            .map(|&q| CriticalSample {
                q,
                e: [0.0; 2],
                value: gf.value(q, &[]),
                slope: gf.dq(q, &[]),
            })
            .collect();
        return Ok(CriticalLocus {
            components: vec![CriticalComponent { samples, closed: true }],
            tangencies: Vec::new(),
            link_warnings: 0,
        });
    }

    let per_column: Vec<(Vec<[f64; 2]>, Vec<f64>)> = qs
        .par_iter()
        .map(|&q| {
            if gf.m == 1 {
                let g = |e: f64| gf.de(q, &[e], 0);
                let (r, t) = column_roots(&g, gf.support, grid.ne);
                (r.into_iter().map(|e| [e, 0.0]).collect(), t)
            } else {
                column_roots_2d(gf, q, grid.ne)
            }
        })
        .collect();

    let mut nodes = Vec::new();
    let mut columns: Vec<Vec<usize>> = Vec::with_capacity(nq);
    let mut tangencies = Vec::new();
    for (col, (roots, tangs)) in per_column.iter().enumerate() {
        let mut ids = Vec::with_capacity(roots.len());
        for &e in roots {
            ids.push(nodes.len());
            nodes.push(LocusNode { col, e });
        }
        columns.push(ids);
        for &e in tangs {
            tangencies.push((qs[col], e));
        }
    }

    let (comps, closed_flags, link_warnings) = link_columns(&nodes, &columns, true);
    let mut components = Vec::new();
    for (walk, closed) in comps.into_iter().zip(closed_flags) {
        let samples: Vec<CriticalSample> = walk
            .iter()
            .map(|&id| {
                let n = &nodes[id];
                let q = qs[n.col];
                let e = &n.e[..gf.m];
                CriticalSample {
                    q,
                    e: n.e,
                    value: gf.value(q, e),
                    slope: gf.dq(q, e),
                }
            })
            .collect();
        components.push(CriticalComponent { samples, closed });
    }
    components.sort_by(|a, b| b.samples.len().cmp(&a.samples.len()));
    Ok(CriticalLocus { components, tangencies, link_warnings })
}

// ---------------------------------------------------------------------------
// Legendrian curves
// ---------------------------------------------------------------------------

/// Sampled curve in the 1-jet space: components of (q, p, z) triples.
///
/// `residual` is the largest fiber-criticality defect |d_e S| over all
/// samples; it bounds the pointwise failure of dz - p dq along the curve, so
/// a small value certifies the samples as Legendrian.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LegendrianCurve {
    pub components: Vec<Vec<[f64; 3]>>,
    pub closed: Vec<bool>,
    pub residual: f64,
}

impl LegendrianCurve {
    pub fn sample_count(&self) -> usize {
        self.components.iter().map(Vec::len).sum()
    }

    fn point_distance(a: &[f64; 3], b: &[f64; 3]) -> f64 {
        let dq = angle_diff(a[0], b[0]);
        (dq * dq + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
    }

    /// Symmetric Hausdorff distance between the sample sets.
    pub fn hausdorff(&self, other: &LegendrianCurve) -> f64 {
        let one_sided = |from: &LegendrianCurve, to: &LegendrianCurve| -> f64 {
            let mut worst = 0.0f64;
            for comp in &from.components {
                for s in comp {
                    let mut best = f64::INFINITY;
                    for c2 in &to.components {
                        for t in c2 {
                            best = best.min(Self::point_distance(s, t));
                        }
                    }
                    worst = worst.max(best);
                }
            }
            worst
        };
        one_sided(self, other).max(one_sided(other, self))
    }
}

/// Embed the critical locus via (q, dS/dq, S).
pub fn legendrian_from_genfun(gf: &GenFun, grid: &LocusGrid) -> Result<LegendrianCurve> {
    let locus = critical_locus(gf, grid)?;
    if !locus.tangencies.is_empty() {
        return Err(Error::Regularity(format!(
            "fiber derivative nearly tangent to zero at {} locations (first at q = {:.6}); \
             zero is not resolved as a regular value",
            locus.tangencies.len(),
            locus.tangencies[0].0
        )));
    }
    if locus.link_warnings > 0 {
        return Err(Error::Regularity(format!(
            "{} column transitions could not be linked as folds",
            locus.link_warnings
        )));
    }
    let mut residual = 0.0f64;
    let mut components = Vec::new();
    let mut closed = Vec::new();
    for comp in &locus.components {
        let mut pts = Vec::with_capacity(comp.samples.len());
        for s in &comp.samples {
            let e = &s.e[..gf.m];
            for a in 0..gf.m {
                residual = residual.max(gf.de(s.q, e, a).abs());
            }
            pts.push([s.q, s.slope, s.value]);
        }
        components.push(pts);
        closed.push(comp.closed);
    }
    Ok(LegendrianCurve { components, closed, residual })
}
