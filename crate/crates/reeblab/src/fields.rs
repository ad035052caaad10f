//! Spatial fields on the models.
//!
//! A `ScalarField` is a finite sum of basis terms with analytic gradients:
//! products of integer-frequency trig factors in the periodic coordinates,
//! compactly supported bump profiles in the J1S1 fiber, and low-degree
//! monomials in the ambient coordinates of S3. Fields on J1S1 never depend
//! on z, so extremization is two-dimensional there; the part of a J1S1
//! field that survives outside the fiber window (the terms without a bump
//! factor) is exposed as a fiber-independent residual so grid searches can
//! account for the tail exactly.

use crate::error::{Error, Result};
use crate::geom::{Point, Tangent};
use crate::manifolds::{ContactModel, ModelKind};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrigKind {
    Cos,
    Sin,
}

/// cos(k t) or sin(k t); k = 0 with Cos is the constant factor 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrigFactor {
    pub k: u32,
    pub kind: TrigKind,
}

impl TrigFactor {
    pub fn cos(k: u32) -> Self {
        TrigFactor { k, kind: TrigKind::Cos }
    }

    pub fn sin(k: u32) -> Self {
        TrigFactor { k, kind: TrigKind::Sin }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let kt = self.k as f64 * t;
        match self.kind {
            TrigKind::Cos => kt.cos(),
            TrigKind::Sin => kt.sin(),
        }
    }

    pub fn deriv(&self, t: f64) -> f64 {
        let k = self.k as f64;
        let kt = k * t;
        match self.kind {
            TrigKind::Cos => -k * kt.sin(),
            TrigKind::Sin => k * kt.cos(),
        }
    }
}

/// (p/R)^pow * bump(p/R), exactly zero for |p| >= R. The bump is the
/// standard C-infinity plateau-free profile exp(1 - 1/(1 - u^2)).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiberProfile {
    pub pow: u8,
    pub radius: f64,
}

fn bump(u: f64) -> f64 {
    if u.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - u * u)).exp()
    }
}

fn bump_deriv(u: f64) -> f64 {
    if u.abs() >= 1.0 {
        0.0
    } else {
        let d = 1.0 - u * u;
        bump(u) * (-2.0 * u / (d * d))
    }
}

impl FiberProfile {
    pub fn new(pow: u8, radius: f64) -> Self {
        FiberProfile { pow, radius }
    }

    pub fn eval(&self, p: f64) -> f64 {
        let u = p / self.radius;
        u.powi(self.pow as i32) * bump(u)
    }

    pub fn deriv(&self, p: f64) -> f64 {
        let u = p / self.radius;
        if u.abs() >= 1.0 {
            return 0.0;
        }
        let poly = if self.pow == 0 {
            0.0
        } else {
            self.pow as f64 * u.powi(self.pow as i32 - 1) * bump(u)
        };
        (poly + u.powi(self.pow as i32) * bump_deriv(u)) / self.radius
    }
}

/// One basis function. `Const` is valid on any model; the others are tied
/// to a model family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BasisFn {
    Const,
    /// Product of optional trig factors in (x, y, theta); T3 and STR2.
    Torus {
        x: Option<TrigFactor>,
        y: Option<TrigFactor>,
        theta: Option<TrigFactor>,
    },
    /// Product of an optional trig factor in q and an optional fiber
    /// profile in p; J1S1. z never appears.
    Jet {
        q: Option<TrigFactor>,
        fiber: Option<FiberProfile>,
    },
    /// Monomial x1^a y1^b x2^c y2^d of total degree <= 2 on S3.
    Sphere { pows: [u8; 4] },
}

impl BasisFn {
    pub fn compatible(&self, kind: ModelKind) -> bool {
        match self {
            BasisFn::Const => true,
            BasisFn::Torus { .. } => matches!(kind, ModelKind::T3 | ModelKind::STR2),
            BasisFn::Jet { .. } => kind == ModelKind::J1S1,
            BasisFn::Sphere { .. } => kind == ModelKind::S3,
        }
    }

    /// True when the term vanishes identically outside the fiber window.
    pub fn fiber_compact(&self) -> bool {
        matches!(self, BasisFn::Jet { fiber: Some(_), .. })
    }

    pub fn eval(&self, p: &Point) -> f64 {
        match self {
            BasisFn::Const => 1.0,
            BasisFn::Torus { x, y, theta } => {
                let mut v = 1.0;
                if let Some(f) = x {
                    v *= f.eval(p.0[0]);
                }
                if let Some(f) = y {
                    v *= f.eval(p.0[1]);
                }
                if let Some(f) = theta {
                    v *= f.eval(p.0[2]);
                }
                v
            }
            BasisFn::Jet { q, fiber } => {
                let mut v = 1.0;
                if let Some(f) = q {
                    v *= f.eval(p.0[0]);
                }
                if let Some(f) = fiber {
                    v *= f.eval(p.0[1]);
                }
                v
            }
            BasisFn::Sphere { pows } => {
                let mut v = 1.0;
                for i in 0..4 {
                    for _ in 0..pows[i] {
                        v *= p.0[i];
                    }
                }
                v
            }
        }
    }

    pub fn grad(&self, p: &Point) -> Tangent {
        match self {
            BasisFn::Const => Tangent::ZERO,
            BasisFn::Torus { x, y, theta } => {
                let fx = x.map(|f| f.eval(p.0[0])).unwrap_or(1.0);
                let fy = y.map(|f| f.eval(p.0[1])).unwrap_or(1.0);
                let ft = theta.map(|f| f.eval(p.0[2])).unwrap_or(1.0);
                let dx = x.map(|f| f.deriv(p.0[0])).unwrap_or(0.0);
                let dy = y.map(|f| f.deriv(p.0[1])).unwrap_or(0.0);
                let dt = theta.map(|f| f.deriv(p.0[2])).unwrap_or(0.0);
                Tangent([dx * fy * ft, fx * dy * ft, fx * fy * dt, 0.0])
            }
            BasisFn::Jet { q, fiber } => {
                let fq = q.map(|f| f.eval(p.0[0])).unwrap_or(1.0);
                let fp = fiber.map(|f| f.eval(p.0[1])).unwrap_or(1.0);
                let dq = q.map(|f| f.deriv(p.0[0])).unwrap_or(0.0);
                let dp = fiber.map(|f| f.deriv(p.0[1])).unwrap_or(0.0);
                Tangent([dq * fp, fq * dp, 0.0, 0.0])
            }
            BasisFn::Sphere { pows } => {
                let mut g = [0.0; 4];
                for i in 0..4 {
                    if pows[i] == 0 {
                        continue;
                    }
                    let mut v = pows[i] as f64;
                    for j in 0..4 {
                        let e = if j == i { pows[j] - 1 } else { pows[j] };
                        for _ in 0..e {
                            v *= p.0[j];
                        }
                    }
                    g[i] = v;
                }
                Tangent(g)
            }
        }
    }
}

/// Behavior of a field outside the grid window.
#[derive(Debug, Clone)]
pub enum Tail {
    /// The model is compact (or the window is the whole chart in the
    /// relevant coordinates); no tail.
    None,
    /// Deck-group invariant; a fundamental domain is exhaustive.
    Periodic,
    /// Outside the fiber window the field equals this fiber-independent
    /// residual (J1S1). The residual's own fiber terms are empty.
    FiberResidual(ScalarField),
}

/// A finite linear combination of basis functions on one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarField {
    pub model: ContactModel,
    pub terms: Vec<(f64, BasisFn)>,
}

impl ScalarField {
    pub fn new(model: ContactModel, terms: Vec<(f64, BasisFn)>) -> Result<Self> {
        for (_, b) in &terms {
            if !b.compatible(model.kind) {
                return Err(Error::UnsupportedField {
                    model: model.name(),
                    detail: format!("basis term {b:?} not available"),
                });
            }
        }
        Ok(ScalarField { model, terms })
    }

    pub fn constant(model: ContactModel, c: f64) -> Self {
        ScalarField { model, terms: vec![(c, BasisFn::Const)] }
    }

    pub fn zero(model: ContactModel) -> Self {
        ScalarField { model, terms: vec![] }
    }

    pub fn value(&self, p: &Point) -> f64 {
        self.terms.iter().map(|(c, b)| c * b.eval(p)).sum()
    }

    pub fn gradient(&self, p: &Point) -> Tangent {
        let mut g = Tangent::ZERO;
        for (c, b) in &self.terms {
            let t = b.grad(p);
            for k in 0..4 {
                g.0[k] += c * t.0[k];
            }
        }
        g
    }

    pub fn scaled(&self, s: f64) -> ScalarField {
        ScalarField {
            model: self.model,
            terms: self.terms.iter().map(|(c, b)| (s * c, b.clone())).collect(),
        }
    }

    pub fn plus(&self, other: &ScalarField) -> ScalarField {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        ScalarField { model: self.model, terms }
    }

    /// Tail contract for extremization.
    pub fn tail(&self) -> Tail {
        match self.model.kind {
            ModelKind::T3 | ModelKind::S3 => Tail::None,
            ModelKind::STR2 => Tail::Periodic,
            ModelKind::J1S1 => {
                let residual: Vec<(f64, BasisFn)> = self
                    .terms
                    .iter()
                    .filter(|(_, b)| !b.fiber_compact())
                    .cloned()
                    .collect();
                Tail::FiberResidual(ScalarField { model: self.model, terms: residual })
            }
        }
    }

    /// Largest fiber-support radius among the terms (J1S1), if any.
    pub fn fiber_support_radius(&self) -> Option<f64> {
        self.terms
            .iter()
            .filter_map(|(_, b)| match b {
                BasisFn::Jet { fiber: Some(f), .. } => Some(f.radius),
                _ => None,
            })
            .fold(None, |acc, r| Some(acc.map_or(r, |a: f64| a.max(r))))
    }
}

/// Pointwise product rho * H of a positive weight and a field, used for
/// evaluating functionals of a conformally rescaled form. Only meaningful
/// on compact models.
pub struct WeightedField<'a, F: SpatialEval> {
    pub weight: &'a ScalarField,
    pub inner: &'a F,
}

/// Anything that can be evaluated as a spatial field with gradient.
pub trait SpatialEval: Sync {
    fn model(&self) -> &ContactModel;
    fn value(&self, p: &Point) -> f64;
    fn gradient(&self, p: &Point) -> Tangent;
    fn tail(&self) -> Tail;
}

impl SpatialEval for ScalarField {
    fn model(&self) -> &ContactModel {
        &self.model
    }

    fn value(&self, p: &Point) -> f64 {
        ScalarField::value(self, p)
    }

    fn gradient(&self, p: &Point) -> Tangent {
        ScalarField::gradient(self, p)
    }

    fn tail(&self) -> Tail {
        ScalarField::tail(self)
    }
}

impl<F: SpatialEval> SpatialEval for WeightedField<'_, F> {
    fn model(&self) -> &ContactModel {
        self.inner.model()
    }

    fn value(&self, p: &Point) -> f64 {
        self.weight.value(p) * self.inner.value(p)
    }

    fn gradient(&self, p: &Point) -> Tangent {
        let w = self.weight.value(p);
        let v = self.inner.value(p);
        let gw = self.weight.gradient(p);
        let gv = self.inner.gradient(p);
        Tangent([
            gw.0[0] * v + w * gv.0[0],
            gw.0[1] * v + w * gv.0[1],
            gw.0[2] * v + w * gv.0[2],
            gw.0[3] * v + w * gv.0[3],
        ])
    }

    fn tail(&self) -> Tail {
        match self.inner.model().kind {
            ModelKind::T3 | ModelKind::S3 => Tail::None,
            // Weighted functionals are restricted to compact models.
            _ => Tail::Periodic,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn bump_is_compactly_supported_and_normalized() {
        assert_abs_diff_eq!(bump(0.0), 1.0, epsilon = 1e-15);
        assert_eq!(bump(1.0), 0.0);
        assert_eq!(bump(-1.2), 0.0);
        assert!(bump(0.9) > 0.0);
    }

    #[test]
    fn fiber_profile_derivative_matches_fd() {
        let f = FiberProfile::new(2, 3.0);
        for &p in &[-2.5, -1.0, 0.0, 0.4, 1.7, 2.9] {
            let h = 1e-6;
            let fd = (f.eval(p + h) - f.eval(p - h)) / (2.0 * h);
            assert_abs_diff_eq!(f.deriv(p), fd, epsilon = 1e-6);
        }
        assert_eq!(f.eval(3.0), 0.0);
        assert_eq!(f.deriv(3.1), 0.0);
    }

    #[test]
    fn torus_term_gradient_matches_fd() {
        let field = ScalarField::new(
            ContactModel::t3(),
            vec![
                (1.0, BasisFn::Const),
                (
                    0.3,
                    BasisFn::Torus {
                        x: Some(TrigFactor::cos(2)),
                        y: Some(TrigFactor::sin(1)),
                        theta: Some(TrigFactor::cos(1)),
                    },
                ),
            ],
        )
        .unwrap();
        let p = Point([0.7, 1.9, 4.4, 0.0]);
        let g = field.gradient(&p);
        for k in 0..3 {
            let mut e = Tangent::ZERO;
            e.0[k] = 1.0;
            let h = 1e-6;
            let fd = (field.value(&p.add(&e, h)) - field.value(&p.add(&e, -h))) / (2.0 * h);
            assert_abs_diff_eq!(g.0[k], fd, epsilon = 1e-7);
        }
    }

    #[test]
    fn sphere_monomial_gradient_matches_fd() {
        let field = ScalarField::new(
            ContactModel::s3(),
            vec![(0.8, BasisFn::Sphere { pows: [1, 0, 0, 1] }), (0.2, BasisFn::Sphere { pows: [0, 2, 0, 0] })],
        )
        .unwrap();
        let p = Point([0.5, 0.5, 0.5, 0.5]);
        let g = field.gradient(&p);
        for k in 0..4 {
            let mut e = Tangent::ZERO;
            e.0[k] = 1.0;
            let h = 1e-6;
            let fd = (field.value(&p.add(&e, h)) - field.value(&p.add(&e, -h))) / (2.0 * h);
            assert_abs_diff_eq!(g.0[k], fd, epsilon = 1e-7);
        }
    }

    #[test]
    fn jet_tail_residual_drops_compact_terms() {
        let field = ScalarField::new(
            ContactModel::j1s1(),
            vec![
                (2.0, BasisFn::Const),
                (
                    1.0,
                    BasisFn::Jet {
                        q: Some(TrigFactor::cos(1)),
                        fiber: Some(FiberProfile::new(0, 2.0)),
                    },
                ),
                (0.5, BasisFn::Jet { q: Some(TrigFactor::sin(1)), fiber: None }),
            ],
        )
        .unwrap();
        match field.tail() {
            Tail::FiberResidual(res) => {
                assert_eq!(res.terms.len(), 2);
                let far = Point([1.0, 5.0, 0.0, 0.0]);
                assert_abs_diff_eq!(field.value(&far), res.value(&far), epsilon = 1e-15);
            }
            _ => panic!("expected fiber residual"),
        }
    }

    #[test]
    fn incompatible_basis_is_rejected() {
        let r = ScalarField::new(
            ContactModel::s3(),
            vec![(1.0, BasisFn::Jet { q: None, fiber: None })],
        );
        assert!(r.is_err());
    }
}
