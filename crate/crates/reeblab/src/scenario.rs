//! Scenario configs and the batch runner behind the CLI.
//!
//! A scenario is a TOML file with a `kind` plus model/library references
//! and optional parameter and tolerance overrides. Unknown keys are
//! rejected. Running a scenario produces a deterministic JSON report (same
//! config and seed, same bytes; timestamps live in a sidecar, never here)
//! and plot-ready CSV tables, plus a list of named checks whose conjunction
//! is the process exit status.
//!
//! Scenario kinds:
//!
//! * `calibrate-reeb`: certify tau and norm bounds for the time-t Reeb
//!   flow and cross-check the jet-side spectral invariant.
//! * `reparametrize`: seeded random positive paths, composed with a Reeb
//!   shift to a uniform per-time minimum; deviations and endpoint drift.
//! * `zap`: sweep the shipped generating-function families through the
//!   velocity sandwich, then hammer the jet spectral oracle with random
//!   trigonometric functions (values, shifts, stabilization).
//! * `theorem3`: seeded positive paths measured against a rescaled contact
//!   form with a known conformal ratio; tau lower vs norm upper ordering.
//! * `loop-s3`: iterated Reeb loops on the sphere and the linearity of
//!   their certified margins.
//! * `chekanov`: restricted-norm upper bounds between cotangent fibers,
//!   optionally against a Reeb-transported target with its transport lower
//!   bound.
//! * `spacetime-sky`: skies of an event pair, the order certificate where
//!   timelike, eigentime side by side, curve and distance tables.
//! * `spacetime-scaling`: sky distance upper bounds for shrinking time
//!   separations and the fitted scaling constant.

use crate::error::{Error, Result};
use crate::fields::{BasisFn, ScalarField, TrigFactor, TrigKind};
use crate::flows::{
    integrate, reeb_reparametrize, HamiltonianPath, PathTerm, ReparamCfg, SliceExtremizer,
    TimeProfile,
};
use crate::formats::{csv_num, write_path, Csv};
use crate::genfun::{
    sandwich_check, spectral_invariant, FTerm, GenFun, HomologyClass, LocusGrid, SandwichCfg,
    SpectralGrid,
};
use crate::genfun::{cross_bound_check, CrossBoundCfg};
use crate::grid::GridSpec;
use crate::legendrian::{chekanov_upper, leg_isotopy, leg_lorentz_length, ChekanovCfg, LegCfg, Legendrian};
use crate::library;
use crate::lorentz::{positive_loop, SearchCfg};
use crate::manifolds::ContactModel;
use crate::spacetime::{
    flat_sky_closed_form, sky, sky_distance_upper, sky_order_certificate, tau_g, Event,
    ProductSpacetime, Sky, SkyCfg, SkyDistCfg, TauCfg,
};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::TAU;

pub const KINDS: &[&str] = &[
    "calibrate-reeb",
    "reparametrize",
    "zap",
    "theorem3",
    "loop-s3",
    "chekanov",
    "spacetime-sky",
    "spacetime-scaling",
];

/// Kinds whose runs involve a seeded search or random draws.
const SEEDED: &[&str] = &["calibrate-reeb", "reparametrize", "zap", "theorem3", "chekanov"];

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub kind: String,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Contact model name for contact scenarios (T3, J1S1, S3, STR2).
    #[serde(default)]
    pub model: Option<String>,
    /// Library spacetime id for spacetime scenarios.
    #[serde(default)]
    pub spacetime: Option<String>,
    /// Library path id, where a scenario acts on a fixed path.
    #[serde(default)]
    pub path: Option<String>,
    /// Restrict `zap` to a single shipped family.
    #[serde(default)]
    pub family: Option<String>,
    /// Output directory; the CLI flag overrides.
    #[serde(default)]
    pub out: Option<String>,
    #[serde(default = "default_grid_scale")]
    pub grid_scale: f64,
    #[serde(default)]
    pub params: Params,
    #[serde(default)]
    pub tolerances: Tolerances,
}

fn default_grid_scale() -> f64 {
    1.0
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    /// Reeb time (calibrate-reeb, chekanov transport target).
    pub t: Option<f64>,
    /// Loop iterate cap (loop-s3).
    pub k: Option<usize>,
    /// Batch size: paths, oracle draws.
    pub count: Option<usize>,
    /// Optimizer evaluation budget.
    pub budget: Option<usize>,
    /// Shrinking time separations (spacetime-scaling).
    pub deltas: Option<Vec<f64>>,
    /// Event pair (t, x, y) twice (spacetime scenarios).
    pub pair: Option<Vec<f64>>,
    /// Fiber base points (chekanov).
    pub from: Option<[f64; 2]>,
    pub to: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Endpoint matching tolerance.
    pub eta: Option<f64>,
    /// Uniformity / certification tolerance.
    pub delta: Option<f64>,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if !KINDS.contains(&self.kind.as_str()) {
            return Err(Error::Config(format!(
                "unknown scenario kind '{}'; expected one of {}",
                self.kind,
                KINDS.join(", ")
            )));
        }
        if SEEDED.contains(&self.kind.as_str()) && self.seed.is_none() {
            return Err(Error::Config(format!(
                "scenario '{}' runs a seeded search; 'seed' is mandatory",
                self.kind
            )));
        }
        for (name, v) in [("eta", self.tolerances.eta), ("delta", self.tolerances.delta)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::Config(format!("tolerance '{name}' must be positive")));
                }
            }
        }
        if !(self.grid_scale > 0.0 && self.grid_scale.is_finite()) {
            return Err(Error::Config("grid_scale must be positive".into()));
        }
        Ok(())
    }

    fn model(&self) -> Result<ContactModel> {
        match self.model.as_deref().unwrap_or("T3") {
            "T3" => Ok(ContactModel::t3()),
            "J1S1" => Ok(ContactModel::j1s1()),
            "S3" => Ok(ContactModel::s3()),
            "STR2" => Ok(ContactModel::str2()),
            other => Err(Error::Config(format!("unknown model '{other}'"))),
        }
    }

    fn spacetime(&self) -> Result<ProductSpacetime> {
        library::spacetime(self.spacetime.as_deref().unwrap_or("flat-cylinder-T2"))
    }

    fn pair(&self, default: [f64; 6]) -> Result<(Event, Event)> {
        let v = match &self.params.pair {
            Some(v) => {
                if v.len() != 6 {
                    return Err(Error::Config("params.pair needs six numbers: t x y t x y".into()));
                }
                [v[0], v[1], v[2], v[3], v[4], v[5]]
            }
            None => default,
        };
        Ok((Event::new(v[0], v[1], v[2]), Event::new(v[3], v[4], v[5])))
    }
}

// ---------------------------------------------------------------------------
// Report envelope
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    /// "<=" or ">=": how value relates to bound when the check passes.
    pub cmp: &'static str,
    pub value: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Debug, Default)]
pub struct Checks(pub Vec<Check>);

impl Checks {
    fn le(&mut self, name: impl Into<String>, value: f64, bound: f64) {
        self.0.push(Check { name: name.into(), cmp: "<=", value, bound, pass: value <= bound });
    }

    fn ge(&mut self, name: impl Into<String>, value: f64, bound: f64) {
        self.0.push(Check { name: name.into(), cmp: ">=", value, bound, pass: value >= bound });
    }

    fn all_pass(&self) -> bool {
        self.0.iter().all(|c| c.pass)
    }
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub kind: String,
    pub seed: Option<u64>,
    pub grid_scale: f64,
    /// The tolerances and resolutions actually used, by name.
    pub ledger: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
    pub pass: bool,
    pub body: serde_json::Value,
}

pub struct RunOutput {
    pub report: Report,
    /// (file name, contents) pairs of plot-ready tables.
    pub tables: Vec<(String, String)>,
}

fn body<T: Serialize>(v: &T) -> Result<serde_json::Value> {
    serde_json::to_value(v).map_err(|e| Error::Config(format!("report body: {e}")))
}

fn witness_ref(path: &HamiltonianPath) -> String {
    write_path(path).unwrap_or_else(|_| "runtime path (not a coefficient sum)".into())
}

pub fn run(cfg: &ScenarioConfig) -> Result<RunOutput> {
    cfg.validate()?;
    match cfg.kind.as_str() {
        "calibrate-reeb" => run_calibrate_reeb(cfg),
        "reparametrize" => run_reparametrize(cfg),
        "zap" => run_zap(cfg),
        "theorem3" => run_theorem3(cfg),
        "loop-s3" => run_loop_s3(cfg),
        "chekanov" => run_chekanov(cfg),
        "spacetime-sky" => run_spacetime_sky(cfg),
        "spacetime-scaling" => run_spacetime_scaling(cfg),
        _ => unreachable!("validated"),
    }
}

fn search_cfg(cfg: &ScenarioConfig) -> SearchCfg {
    let mut s = SearchCfg::standard();
    s.seed = cfg.seed.unwrap_or(0);
    s.grid_scale = cfg.grid_scale;
    if let Some(b) = cfg.params.budget {
        s.budget = b;
    }
    if let Some(eta) = cfg.tolerances.eta {
        s.eta = eta;
    }
    s
}

// ---------------------------------------------------------------------------
// calibrate-reeb
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct CalibrateBody {
    t: f64,
    tau_lower: f64,
    tau_node_min: f64,
    tau_eta_residual: f64,
    norm_upper: f64,
    cross_slack: f64,
    spectral_point: Option<f64>,
    spectral_pad: Option<f64>,
    spectral_window: Option<[f64; 2]>,
    witness_ref: String,
}

fn run_calibrate_reeb(cfg: &ScenarioConfig) -> Result<RunOutput> {
    let model = cfg.model()?;
    let t = cfg.params.t.unwrap_or(0.7);
    let path = HamiltonianPath::reeb(model, t);
    let search = search_cfg(cfg);
    let grid = SpectralGrid::default_for(0).scaled(cfg.grid_scale);
    let rep = cross_bound_check(&path, &CrossBoundCfg { search, grid, weight: None })?;

    let mut checks = Checks::default();
    checks.ge("tau-lower-at-least-t", rep.tau.lower_bound, t - 1e-6);
    checks.le("norm-upper-at-most-t", rep.norm.upper_bound, t + 1e-3);
    checks.le(
        "tau-lower-below-norm-upper",
        rep.tau.lower_bound,
        rep.norm.upper_bound + rep.slack,
    );
    let (sp, pad, window) = match &rep.spectral {
        Some(leg) => {
            let pad = leg.tolerance;
            checks.le("spectral-point-within-2-cells", (leg.point_value - t).abs(), 2.0 * pad);
            (Some(leg.point_value), Some(pad), Some([leg.lower_integral, leg.upper_integral]))
        }
        None => (None, None, None),
    };

    let mut ledger = BTreeMap::new();
    ledger.insert("eta".into(), search.eta);
    ledger.insert("grid_scale".into(), cfg.grid_scale);
    ledger.insert("quadrature_panels".into(), search.panels as f64);
    ledger.insert("spectral_nq".into(), grid.nq as f64);
    ledger.insert("tau_floor_tolerance".into(), 1e-6);
    ledger.insert("norm_ceiling_tolerance".into(), 1e-3);

    let mut csv = Csv::new(["t", "tau_lower", "norm_upper", "spectral_point", "spectral_pad"]);
    csv.push([
        csv_num(t),
        csv_num(rep.tau.lower_bound),
        csv_num(rep.norm.upper_bound),
        sp.map_or_else(|| "".into(), csv_num),
        pad.map_or_else(|| "".into(), csv_num),
    ]);

    let b = CalibrateBody {
        t,
        tau_lower: rep.tau.lower_bound,
        tau_node_min: rep.tau.node_min,
        tau_eta_residual: rep.tau.eta_residual,
        norm_upper: rep.norm.upper_bound,
        cross_slack: rep.slack,
        spectral_point: sp,
        spectral_pad: pad,
        spectral_window: window,
        witness_ref: witness_ref(&rep.tau.witness),
    };
    finish(cfg, checks, ledger, body(&b)?, vec![("calibrate-reeb.csv".into(), csv.to_string())])
}

// ---------------------------------------------------------------------------
// reparametrize
// ---------------------------------------------------------------------------

/// Seeded positive path: Reeb drift plus a few bounded spatial terms with
/// random time profiles. The coefficient budget keeps every slice minimum
/// strictly positive.
pub fn random_positive_path(model: ContactModel, rng: &mut ChaCha8Rng) -> Result<HamiltonianPath> {
    let mut terms =
        vec![PathTerm { profile: TimeProfile::Constant(1.0), basis: BasisFn::Const }];
    let n_terms = rng.gen_range(2..=3);
    let mut budget = 0.6;
    for _ in 0..n_terms {
        let amp = rng.gen_range(0.1..=0.5) * budget;
        budget -= amp;
        let profile = match rng.gen_range(0..3) {
            0 => TimeProfile::Constant(amp),
            1 => TimeProfile::Poly(vec![amp * rng.gen_range(-1.0..1.0), amp]),
            _ => TimeProfile::Harmonic {
                amp,
                k: rng.gen_range(1..=2),
                kind: if rng.gen_bool(0.5) { TrigKind::Sin } else { TrigKind::Cos },
            },
        };
        let basis = random_basis(model, rng);
        terms.push(PathTerm { profile, basis });
    }
    HamiltonianPath::sum(model, terms)
}

fn random_basis(model: ContactModel, rng: &mut ChaCha8Rng) -> BasisFn {
    let trig = |rng: &mut ChaCha8Rng| {
        let k = rng.gen_range(1..=2);
        if rng.gen_bool(0.5) {
            TrigFactor::cos(k)
        } else {
            TrigFactor::sin(k)
        }
    };
    match model.kind {
        crate::manifolds::ModelKind::T3 | crate::manifolds::ModelKind::STR2 => {
            let slot = rng.gen_range(0..3);
            BasisFn::Torus {
                x: (slot == 0).then(|| trig(rng)),
                y: (slot == 1).then(|| trig(rng)),
                theta: Some(trig(rng)),
            }
        }
        crate::manifolds::ModelKind::J1S1 => BasisFn::Jet {
            q: Some(trig(rng)),
            fiber: Some(crate::fields::FiberProfile::new(
                if rng.gen_bool(0.5) { 0 } else { 2 },
                2.0,
            )),
        },
        crate::manifolds::ModelKind::S3 => {
            let mut pows = [0u8; 4];
            pows[rng.gen_range(0..4)] = 2;
            BasisFn::Sphere { pows }
        }
    }
}

#[derive(Serialize)]
struct ReparamRow {
    index: usize,
    eps: f64,
    lorentz: f64,
    worst_min_dev: f64,
    endpoint_drift: f64,
    tau_end: f64,
}

fn run_reparametrize(cfg: &ScenarioConfig) -> Result<RunOutput> {
    let model = cfg.model()?;
    let count = cfg.params.count.unwrap_or(20);
    let delta = cfg.tolerances.delta.unwrap_or(1e-3);
    let eta = cfg.tolerances.eta.unwrap_or(1e-5);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.unwrap_or(0));
    let rcfg = ReparamCfg {
        delta,
        grid: GridSpec::default_for(&model, cfg.grid_scale),
        ..ReparamCfg::standard(&model)
    };
    let ens = model.canonical_ensemble(32);
    let mut rows = Vec::with_capacity(count);
    let mut csv =
        Csv::new(["index", "eps", "lorentz", "worst_min_dev", "endpoint_drift", "tau_end"]);
    let mut worst_dev = 0.0f64;
    let mut worst_drift = 0.0f64;
    for index in 0..count {
        let path = random_positive_path(model, &mut rng)?;
        let (shifted, info) = reeb_reparametrize(&path, &rcfg)?;
        let ext = SliceExtremizer::new(&shifted, rcfg.grid, None)?;
        let mut dev = 0.0f64;
        for i in 0..=256 {
            let t = i as f64 / 256.0;
            dev = dev.max((ext.extrema(t)?.min - info.eps).abs());
        }
        let steps = 400;
        let a = integrate(&path, &ens, steps)?;
        let b = integrate(&shifted, &ens, steps)?;
        let an: Vec<_> = a.endpoints().iter().map(|p| model.normalize(p)).collect();
        let bn: Vec<_> = b.endpoints().iter().map(|p| model.normalize(p)).collect();
        let drift = model.ensemble_distance(&an, &bn);
        worst_dev = worst_dev.max(dev);
        worst_drift = worst_drift.max(drift);
        csv.push([
            index.to_string(),
            csv_num(info.eps),
            csv_num(info.lorentz),
            csv_num(dev),
            csv_num(drift),
            csv_num(info.tau_end),
        ]);
        rows.push(ReparamRow {
            index,
            eps: info.eps,
            lorentz: info.lorentz,
            worst_min_dev: dev,
            endpoint_drift: drift,
            tau_end: info.tau_end,
        });
    }

    let mut checks = Checks::default();
    checks.le("minima-within-delta", worst_dev, delta);
    checks.le("endpoints-preserved", worst_drift, eta);

    let mut ledger = BTreeMap::new();
    ledger.insert("delta".into(), delta);
    ledger.insert("eta".into(), eta);
    ledger.insert("grid_scale".into(), cfg.grid_scale);
    ledger.insert("reparam_samples".into(), rcfg.samples as f64);
    ledger.insert("paths".into(), count as f64);

    finish(cfg, checks, ledger, body(&rows)?, vec![("reparametrize.csv".into(), csv.to_string())])
}

// ---------------------------------------------------------------------------
// zap
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct FamilyRow {
    id: String,
    point: f64,
    fundamental: f64,
    lower_integral: f64,
    upper_integral: f64,
    slack: f64,
    tolerance: f64,
}

#[derive(Serialize)]
struct OracleSummary {
    draws: usize,
    worst_point_error: f64,
    worst_fundamental_error: f64,
    worst_shift_error: f64,
    worst_stabilization_gap: f64,
}

#[derive(Serialize)]
struct ZapBody {
    families: Vec<FamilyRow>,
    oracle: Option<OracleSummary>,
}

fn random_trig(rng: &mut ChaCha8Rng) -> Vec<FTerm> {
    let mut terms = Vec::new();
    for k in 1..=5u32 {
        if rng.gen_bool(0.6) {
            terms.push(FTerm::circle(rng.gen_range(-0.5..0.5), TrigFactor::cos(k)));
        }
        if rng.gen_bool(0.6) {
            terms.push(FTerm::circle(rng.gen_range(-0.5..0.5), TrigFactor::sin(k)));
        }
    }
    if terms.is_empty() {
        terms.push(FTerm::circle(0.3, TrigFactor::cos(1)));
    }
    terms
}

fn dense_extrema(gf: &GenFun) -> (f64, f64) {
    let n = 8192;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let v = gf.value(TAU * i as f64 / n as f64, &[]);
        lo = lo.min(v);
        hi = hi.max(v);
    }
    (lo, hi)
}

fn run_zap(cfg: &ScenarioConfig) -> Result<RunOutput> {
    let ids: Vec<&str> = match &cfg.family {
        Some(one) => vec![library::family_ids()
            .into_iter()
            .find(|&id| id == one)
            .ok_or_else(|| Error::Config(format!("unknown family '{one}'")))?],
        None => library::family_ids(),
    };

    let mut checks = Checks::default();
    let mut rows = Vec::new();
    let mut csv = Csv::new([
        "id",
        "point",
        "fundamental",
        "lower_integral",
        "upper_integral",
        "slack",
        "tolerance",
    ]);
    for id in &ids {
        let fam = library::family(id)?;
        let m = fam.fiber_dim();
        let scfg = SandwichCfg {
            grid: SpectralGrid::default_for(m).scaled(cfg.grid_scale),
            locus: LocusGrid::default_for(m),
            panels: 64,
        };
        match sandwich_check(&fam, &scfg) {
            Ok(rep) => {
                let slack = rep.slack_point.min(rep.slack_fundamental);
                checks.ge(format!("sandwich-{id}"), slack, -rep.tolerance);
                csv.push([
                    id.to_string(),
                    csv_num(rep.point.value),
                    csv_num(rep.fundamental.value),
                    csv_num(rep.lower_integral),
                    csv_num(rep.upper_integral),
                    csv_num(slack),
                    csv_num(rep.tolerance),
                ]);
                rows.push(FamilyRow {
                    id: id.to_string(),
                    point: rep.point.value,
                    fundamental: rep.fundamental.value,
                    lower_integral: rep.lower_integral,
                    upper_integral: rep.upper_integral,
                    slack,
                    tolerance: rep.tolerance,
                });
            }
            Err(Error::Tolerance { needed, achieved }) => {
                checks.ge(format!("sandwich-{id}"), -achieved, -needed);
            }
            Err(e) => return Err(e),
        }
    }

    let draws = cfg.params.count.unwrap_or(50);
    let oracle = if draws > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.unwrap_or(0));
        let grid = SpectralGrid::default_for(0).scaled(cfg.grid_scale);
        let mut worst_pt = 0.0f64;
        let mut worst_fund = 0.0f64;
        let mut worst_shift = 0.0f64;
        let mut worst_stab = 0.0f64;
        for _ in 0..draws {
            let gf = GenFun::jet(random_trig(&mut rng));
            let (lo, hi) = dense_extrema(&gf);
            let pt = spectral_invariant(&gf, HomologyClass::Point, &grid)?;
            let fund = spectral_invariant(&gf, HomologyClass::Fundamental, &grid)?;
            worst_pt = worst_pt.max((pt.value - lo).abs() - 2.0 * pt.pad);
            worst_fund = worst_fund.max((fund.value - hi).abs() - 2.0 * fund.pad);

            let c = rng.gen_range(-1.0..1.0);
            let pt_shift = spectral_invariant(&gf.shifted(c), HomologyClass::Point, &grid)?;
            worst_shift = worst_shift.max((pt_shift.value - (pt.value + c)).abs());

            let stab = gf.stabilized()?;
            let sgrid = SpectralGrid::default_for(1).scaled(cfg.grid_scale);
            let pt_stab = spectral_invariant(&stab, HomologyClass::Point, &sgrid)?;
            worst_stab =
                worst_stab.max((pt_stab.value - pt.value).abs() - 2.0 * (pt.pad + pt_stab.pad));
        }
        checks.le("oracle-point-within-2-cells", worst_pt, 0.0);
        checks.le("oracle-fundamental-within-2-cells", worst_fund, 0.0);
        checks.le("oracle-shift-exact", worst_shift, 0.0);
        checks.le("oracle-stabilization-within-grid", worst_stab, 0.0);
        Some(OracleSummary {
            draws,
            worst_point_error: worst_pt,
            worst_fundamental_error: worst_fund,
            worst_shift_error: worst_shift,
            worst_stabilization_gap: worst_stab,
        })
    } else {
        None
    };

    let mut ledger = BTreeMap::new();
    ledger.insert("grid_scale".into(), cfg.grid_scale);
    ledger.insert("families".into(), ids.len() as f64);
    ledger.insert("oracle_draws".into(), draws as f64);
    ledger.insert("sandwich_panels".into(), 64.0);

    let b = ZapBody { families: rows, oracle };
    finish(cfg, checks, ledger, body(&b)?, vec![("zap-families.csv".into(), csv.to_string())])
}

// ---------------------------------------------------------------------------
// theorem3
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct Theorem3Row {
    index: usize,
    tau_lower: f64,
    norm_upper: f64,
    weighted_tau_lower: f64,
    weighted_norm_upper: f64,
    ratio: f64,
}

fn run_theorem3(cfg: &ScenarioConfig) -> Result<RunOutput> {
    let model = cfg.model()?;
    if model.kind != crate::manifolds::ModelKind::T3 {
        return Err(Error::Config("theorem3 runs on T3".into()));
    }
    let count = cfg.params.count.unwrap_or(10);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.unwrap_or(0));
    // rho in [1, 2]: conformal ratio exactly 2 up to the extremizer pad.
    let rho = ScalarField::new(
        model,
        vec![
            (1.5, BasisFn::Const),
            (0.5, BasisFn::Torus { x: None, y: None, theta: Some(TrigFactor::cos(1)) }),
        ],
    )?;
    let mut search = search_cfg(cfg);
    if cfg.params.budget.is_none() {
        search.budget = 600;
    }
    let base_seed = search.seed;
    let grid = SpectralGrid::default_for(0).scaled(cfg.grid_scale);

    let mut checks = Checks::default();
    let mut rows = Vec::new();
    let mut csv = Csv::new([
        "index",
        "tau_lower",
        "norm_upper",
        "weighted_tau_lower",
        "weighted_norm_upper",
        "ratio",
    ]);
    for index in 0..count {
        let path = random_positive_path(model, &mut rng)?;
        search.seed = base_seed.wrapping_add(index as u64);
        let rep = cross_bound_check(
            &path,
            &CrossBoundCfg { search, grid, weight: Some(rho.clone()) },
        )?;
        let w = rep.weighted.as_ref().expect("weight supplied");
        checks.le(
            format!("weighted-tau-below-ratio-norm-{index}"),
            w.tau_lower,
            w.ratio * w.norm_upper + rep.slack * w.ratio + 1e-9,
        );
        csv.push([
            index.to_string(),
            csv_num(rep.tau.lower_bound),
            csv_num(rep.norm.upper_bound),
            csv_num(w.tau_lower),
            csv_num(w.norm_upper),
            csv_num(w.ratio),
        ]);
        rows.push(Theorem3Row {
            index,
            tau_lower: rep.tau.lower_bound,
            norm_upper: rep.norm.upper_bound,
            weighted_tau_lower: w.tau_lower,
            weighted_norm_upper: w.norm_upper,
            ratio: w.ratio,
        });
    }

    let mut ledger = BTreeMap::new();
    ledger.insert("eta".into(), search.eta);
    ledger.insert("grid_scale".into(), cfg.grid_scale);
    ledger.insert("budget".into(), search.budget as f64);
    ledger.insert("paths".into(), count as f64);
    ledger.insert("conformal_ratio_nominal".into(), 2.0);

    finish(cfg, checks, ledger, body(&rows)?, vec![("theorem3.csv".into(), csv.to_string())])
}

// ---------------------------------------------------------------------------
// loop-s3
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct LoopRow {
    k: usize,
    margin: f64,
    eta_residual: f64,
}

fn run_loop_s3(cfg: &ScenarioConfig) -> Result<RunOutput> {
    let kmax = cfg.params.k.unwrap_or(2).max(1);
    let model = ContactModel::s3();
    let mut rows = Vec::new();
    let mut checks = Checks::default();
    let mut csv = Csv::new(["k", "margin", "eta_residual"]);
    let mut first = 0.0;
    for k in 1..=kmax {
        let cert = positive_loop(&model, k)?;
        if k == 1 {
            first = cert.margin;
        }
        checks.ge(format!("loop-margin-at-least-2pik-{k}"), cert.margin, TAU * k as f64 - 1e-9);
        checks.le(
            format!("loop-margin-linear-{k}"),
            (cert.margin - first * k as f64).abs(),
            1e-9,
        );
        csv.push([k.to_string(), csv_num(cert.margin), csv_num(cert.eta_residual)]);
        rows.push(LoopRow { k, margin: cert.margin, eta_residual: cert.eta_residual });
    }

    let mut ledger = BTreeMap::new();
    ledger.insert("linearity_tolerance".into(), 1e-9);
    ledger.insert("k_max".into(), kmax as f64);

    finish(cfg, checks, ledger, body(&rows)?, vec![("loop-s3.csv".into(), csv.to_string())])
}

// ---------------------------------------------------------------------------
// chekanov
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct ChekanovBody {
    from: [f64; 2],
    target: String,
    expected: f64,
    upper: f64,
    certified: bool,
    residual: f64,
    transport_lower: Option<f64>,
    witness_ref: String,
}

fn run_chekanov(cfg: &ScenarioConfig) -> Result<RunOutput> {
    let model = cfg.model()?;
    if model.kind != crate::manifolds::ModelKind::T3 {
        return Err(Error::Config("chekanov fiber scenarios run on T3".into()));
    }
    let from_xy = cfg.params.from.unwrap_or([1.0, 2.0]);
    let from = Legendrian::torus_fiber(&model, from_xy[0], from_xy[1], 256)?;
    let eta = cfg.tolerances.eta.unwrap_or(1e-3);

    let (to, expected, target_name, transport_lower) = match (cfg.params.t, cfg.params.to) {
        (Some(t), None) => {
            let to = from.reeb_image(&model, t);
            // Transport lower bound: ride the Reeb flow and integrate the
            // restricted minima.
            let iso =
                leg_isotopy(&HamiltonianPath::reeb(model, t), &from, &LegCfg::default())?;
            let len = leg_lorentz_length(&iso);
            (to, t.abs(), format!("reeb t={t}"), Some(len.value - len.error_bound))
        }
        (None, to_xy) => {
            let to_xy = to_xy.unwrap_or([1.4, 2.3]);
            let to = Legendrian::torus_fiber(&model, to_xy[0], to_xy[1], 256)?;
            let (dx, dy) = crate::geom::torus_shortest(to_xy[0] - from_xy[0], to_xy[1] - from_xy[1]);
            (to, dx.hypot(dy), format!("fiber ({}, {})", to_xy[0], to_xy[1]), None)
        }
        (Some(_), Some(_)) => {
            return Err(Error::Config("give either params.t or params.to, not both".into()))
        }
    };

    let mut ck = ChekanovCfg::standard(cfg.seed.unwrap_or(0));
    ck.eta = eta;
    if let Some(b) = cfg.params.budget {
        ck.budget = b;
    }
    let est = chekanov_upper(&model, &from, &to, &ck)?;

    let mut checks = Checks::default();
    checks.le("upper-at-most-expected", est.upper, expected + 1e-3);
    checks.le("witness-residual-within-eta", est.residual, eta);
    if let Some(lower) = transport_lower {
        checks.ge("transport-lower-at-least-t", lower, expected - 1e-6);
        checks.le("transport-lower-at-most-t", lower, expected);
        // The witness may stop a Hausdorff eta short of the target, so its
        // cost can undercut the true distance by that much.
        checks.le("lower-below-upper-plus-eta", lower, est.upper + eta + 1e-9);
    }

    let mut ledger = BTreeMap::new();
    ledger.insert("eta".into(), eta);
    ledger.insert("budget".into(), ck.budget as f64);
    ledger.insert("steps".into(), ck.steps as f64);
    ledger.insert("upper_tolerance".into(), 1e-3);

    let mut csv = Csv::new(["expected", "upper", "residual", "certified"]);
    csv.push([
        csv_num(expected),
        csv_num(est.upper),
        csv_num(est.residual),
        (est.certified as u8).to_string(),
    ]);

    let b = ChekanovBody {
        from: from_xy,
        target: target_name,
        expected,
        upper: est.upper,
        certified: est.certified,
        residual: est.residual,
        transport_lower,
        witness_ref: witness_ref(&est.witness),
    };
    finish(cfg, checks, ledger, body(&b)?, vec![("chekanov.csv".into(), csv.to_string())])
}

// ---------------------------------------------------------------------------
// spacetime scenarios
// ---------------------------------------------------------------------------

fn sky_csv(s: &Sky) -> String {
    let mut csv = Csv::new(["x", "y", "theta"]);
    for p in &s.curve.components[0] {
        csv.push([csv_num(p.0[0]), csv_num(p.0[1]), csv_num(p.0[2])]);
    }
    csv.to_string()
}

#[derive(Serialize)]
struct SkyBody {
    source: [f64; 3],
    target: [f64; 3],
    dt: f64,
    dh: f64,
    upper: f64,
    time_part: f64,
    space_part: f64,
    timelike: bool,
    margin: Option<f64>,
    leg_tau_lower: Option<f64>,
    tau_g: f64,
    tau_g_exact: bool,
    flat_sky_residual: Option<f64>,
}

fn run_spacetime_sky(cfg: &ScenarioConfig) -> Result<RunOutput> {
    let st = cfg.spacetime()?;
    let (p, q) = cfg.pair([0.0, 1.0, 2.0, 0.9, 1.3, 2.1])?;
    let scfg = SkyCfg::default();
    let sky_p = sky(&st, &p, &scfg)?;
    let sky_q = sky(&st, &q, &scfg)?;
    let dist = sky_distance_upper(&st, &p, &q, &SkyDistCfg::default())?;
    let eig = tau_g(&st, &p, &q, &TauCfg::default());

    let dt = q.t - p.t;
    let (dx, dy) = crate::geom::torus_shortest(q.x - p.x, q.y - p.y);
    let dh = dx.hypot(dy);

    let mut checks = Checks::default();
    checks.le("upper-at-most-dt-plus-dh", dist.upper, dt.abs() + dh + 1e-6);
    checks.le("witness-residual-within-eta", dist.residual, dist.eta);

    let mut flat_residual = None;
    let mut margin = None;
    let mut leg_lower = None;
    let timelike = st.is_flat() && dt > dh;
    if st.is_flat() {
        let r = sky_p
            .curve
            .hausdorff(&Sky::model(), &flat_sky_closed_form(&p, scfg.directions))
            .max(sky_q.curve.hausdorff(&Sky::model(), &flat_sky_closed_form(&q, scfg.directions)));
        flat_residual = Some(r);
        checks.le("flat-sky-matches-closed-form", r, 1e-7);
        if let Some(cert) = sky_order_certificate(&st, &p, &q, &scfg)? {
            checks.le("margin-matches-dt-minus-dh", (cert.margin - (dt - dh)).abs(), 1e-6);
            checks.ge("certificate-implies-eigentime", eig.value, 1e-12);
            checks.le("leg-lower-at-most-tau-g", cert.leg_tau_lower, eig.value + 1e-12);
            margin = Some(cert.margin);
            leg_lower = Some(cert.leg_tau_lower);
        }
    }

    let mut ledger = BTreeMap::new();
    ledger.insert("sky_directions".into(), scfg.directions as f64);
    ledger.insert("drift_tol".into(), scfg.drift_tol);
    ledger.insert("distance_eta".into(), dist.eta);
    ledger.insert("margin_tolerance".into(), 1e-6);

    let mut dist_csv = Csv::new(["delta", "upper", "time_part", "space_part"]);
    dist_csv.push([csv_num(dt.abs()), csv_num(dist.upper), csv_num(dist.time_part), csv_num(dist.space_part)]);

    let b = SkyBody {
        source: [p.t, p.x, p.y],
        target: [q.t, q.x, q.y],
        dt,
        dh,
        upper: dist.upper,
        time_part: dist.time_part,
        space_part: dist.space_part,
        timelike,
        margin,
        leg_tau_lower: leg_lower,
        tau_g: eig.value,
        tau_g_exact: eig.exact,
        flat_sky_residual: flat_residual,
    };
    finish(
        cfg,
        checks,
        ledger,
        body(&b)?,
        vec![
            ("sky-source.csv".into(), sky_csv(&sky_p)),
            ("sky-target.csv".into(), sky_csv(&sky_q)),
            ("sky-distance.csv".into(), dist_csv.to_string()),
        ],
    )
}

#[derive(Serialize)]
struct ScalingRow {
    delta: f64,
    upper: f64,
    time_part: f64,
    space_part: f64,
}

fn run_spacetime_scaling(cfg: &ScenarioConfig) -> Result<RunOutput> {
    let st = cfg.spacetime()?;
    let (p, _) = cfg.pair([0.0, 1.0, 2.0, 0.0, 1.0, 2.0])?;
    let deltas = cfg.params.deltas.clone().unwrap_or_else(|| vec![0.2, 0.1, 0.05, 0.025]);
    let dcfg = SkyDistCfg::default();

    let mut checks = Checks::default();
    let mut rows = Vec::new();
    let mut csv = Csv::new(["delta", "upper", "time_part", "space_part"]);
    let mut fitted_c = 0.0f64;
    for (i, &delta) in deltas.iter().enumerate() {
        if !(delta > 0.0) {
            return Err(Error::Config("deltas must be positive".into()));
        }
        let q = Event::new(p.t + delta, p.x, p.y);
        let est = sky_distance_upper(&st, &p, &q, &dcfg)?;
        // The reported value only bounds the distance when the witness
        // actually reaches the target sky.
        checks.le(format!("witness-residual-{i}"), est.residual, est.eta);
        checks.le(format!("upper-scaling-{i}"), est.upper, 1.01 * delta);
        fitted_c = fitted_c.max(est.upper / delta);
        csv.push([
            csv_num(delta),
            csv_num(est.upper),
            csv_num(est.time_part),
            csv_num(est.space_part),
        ]);
        rows.push(ScalingRow {
            delta,
            upper: est.upper,
            time_part: est.time_part,
            space_part: est.space_part,
        });
    }
    checks.le("fitted-constant", fitted_c, 1.01);

    let mut ledger = BTreeMap::new();
    ledger.insert("scaling_bound".into(), 1.01);
    ledger.insert("distance_eta".into(), dcfg.eta);
    ledger.insert("sky_directions".into(), dcfg.sky.directions as f64);

    #[derive(Serialize)]
    struct ScalingBody {
        base: [f64; 3],
        fitted_c: f64,
        rows: Vec<ScalingRow>,
    }
    let b = ScalingBody { base: [p.t, p.x, p.y], fitted_c, rows };
    finish(cfg, checks, ledger, body(&b)?, vec![("scaling.csv".into(), csv.to_string())])
}

// ---------------------------------------------------------------------------

fn finish(
    cfg: &ScenarioConfig,
    checks: Checks,
    ledger: BTreeMap<String, f64>,
    body: serde_json::Value,
    tables: Vec<(String, String)>,
) -> Result<RunOutput> {
    let pass = checks.all_pass();
    Ok(RunOutput {
        report: Report {
            kind: cfg.kind.clone(),
            seed: cfg.seed,
            grid_scale: cfg.grid_scale,
            ledger,
            checks: checks.0,
            pass,
            body,
        },
        tables,
    })
}

/// Parses and validates a TOML scenario config.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| {
        let line = e
            .span()
            .map_or(0, |s| text[..s.start.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1);
        Error::Parse { line, detail: e.message().to_string() }
    })?;
    cfg.validate()?;
    Ok(cfg)
}
