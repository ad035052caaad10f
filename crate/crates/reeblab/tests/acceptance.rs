//! The acceptance gate: nine numbered criteria, each printing one PASS or
//! FAIL line with its pinned tolerances. Run with --nocapture to see the
//! lines; any FAIL also fails the test.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use reeblab::fields::TrigFactor;
use reeblab::flows::{
    concatenate, integrate, lorentz_length, reeb_reparametrize, HamiltonianPath, LengthCfg,
    ReparamCfg, SliceExtremizer,
};
use reeblab::genfun::{
    cross_bound_check, sandwich_check, spectral_invariant, CrossBoundCfg, FTerm, GenFun,
    HomologyClass, SandwichCfg, SpectralGrid,
};
use reeblab::legendrian::{chekanov_upper, leg_isotopy, leg_lorentz_length, ChekanovCfg, LegCfg, Legendrian};
use reeblab::library;
use reeblab::lorentz::{norm_upper, positive_loop, reverse_triangle_check, tau_lower, SearchCfg};
use reeblab::manifolds::ContactModel;
use reeblab::scenario::{self, random_positive_path};
use reeblab::spacetime::{
    sky_distance_upper, sky_order_certificate, Event, ProductSpacetime, SkyCfg, SkyDistCfg,
};
use std::f64::consts::TAU;
use std::time::Instant;

fn verdict(n: usize, name: &str, pass: bool, detail: &str) {
    println!("[{n}/9] {name}: {} ({detail})", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {n} ({name}) failed: {detail}");
}

#[test]
fn criterion_1_reeb_calibration() {
    // Lower bound within 1e-6 below t, jet-side point invariant within two
    // grid cells at the default 256-column resolution, 60 s per time.
    let model = ContactModel::t3();
    let mut worst_floor = f64::INFINITY;
    let mut worst_cells = 0.0f64;
    let mut worst_secs = 0.0f64;
    for t in [0.3, 0.7, 1.5] {
        let clock = Instant::now();
        let path = HamiltonianPath::reeb(model, t);
        let cfg = CrossBoundCfg {
            search: SearchCfg { seed: 41, ..SearchCfg::standard() },
            grid: SpectralGrid::default_for(0),
            weight: None,
        };
        let rep = cross_bound_check(&path, &cfg).unwrap();
        let leg = rep.spectral.unwrap();
        worst_floor = worst_floor.min(rep.tau.lower_bound - t);
        worst_cells = worst_cells.max((leg.point_value - t).abs() / leg.tolerance);
        worst_secs = worst_secs.max(clock.elapsed().as_secs_f64());
    }
    let pass = worst_floor >= -1e-6 && worst_cells <= 2.0 && worst_secs <= 60.0;
    verdict(
        1,
        "reeb calibration",
        pass,
        &format!(
            "lower-t >= {worst_floor:.2e} (tol -1e-6), spectral within {worst_cells:.3} cells (max 2), {worst_secs:.1}s/t (max 60)"
        ),
    );
}

#[test]
fn criterion_2_norm_calibration() {
    // Upper bound at most t + 1e-3 and never below the certified Lorentz
    // lower bound minus the comparison slack.
    let model = ContactModel::t3();
    let mut worst_ceiling = f64::NEG_INFINITY;
    let mut worst_order = f64::INFINITY;
    for t in [0.5, 1.0] {
        let path = HamiltonianPath::reeb(model, t);
        let cfg = SearchCfg { seed: 43, ..SearchCfg::standard() };
        let up = norm_upper(&path, &cfg).unwrap();
        let lo = tau_lower(&path, &cfg).unwrap();
        let slack = 4.0 * cfg.eta + up.length.error_bound + lo.length.error_bound + 1e-9;
        worst_ceiling = worst_ceiling.max(up.upper_bound - t);
        worst_order = worst_order.min(up.upper_bound - (lo.lower_bound - slack));
    }
    let pass = worst_ceiling <= 1e-3 && worst_order >= 0.0;
    verdict(
        2,
        "norm calibration",
        pass,
        &format!("upper-t <= {worst_ceiling:.2e} (tol 1e-3), upper-(lower-slack) >= {worst_order:.2e}"),
    );
}

#[test]
fn criterion_3_uniform_minimum_reparametrization() {
    // 20 seeded positive paths per model; per-time minima within 1e-3 of
    // the Lorentz length, endpoints within 1e-5, five seconds per path.
    let mut worst_dev = 0.0f64;
    let mut worst_drift = 0.0f64;
    let mut worst_secs = 0.0f64;
    for model in [ContactModel::t3(), ContactModel::j1s1(), ContactModel::s3()] {
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        let rcfg = ReparamCfg::standard(&model);
        let ens = model.canonical_ensemble(32);
        for _ in 0..20 {
            let clock = Instant::now();
            let path = random_positive_path(model, &mut rng).unwrap();
            let (shifted, info) = reeb_reparametrize(&path, &rcfg).unwrap();
            let ext = SliceExtremizer::new(&shifted, rcfg.grid, None).unwrap();
            for i in 0..=128 {
                let t = i as f64 / 128.0;
                worst_dev = worst_dev.max((ext.extrema(t).unwrap().min - info.eps).abs());
            }
            let a = integrate(&path, &ens, 400).unwrap();
            let b = integrate(&shifted, &ens, 400).unwrap();
            let an: Vec<_> = a.endpoints().iter().map(|p| model.normalize(p)).collect();
            let bn: Vec<_> = b.endpoints().iter().map(|p| model.normalize(p)).collect();
            worst_drift = worst_drift.max(model.ensemble_distance(&an, &bn));
            worst_secs = worst_secs.max(clock.elapsed().as_secs_f64());
        }
    }
    let pass = worst_dev <= 1e-3 && worst_drift <= 1e-5 && worst_secs <= 5.0;
    verdict(
        3,
        "uniform minimum reparametrization",
        pass,
        &format!(
            "60 paths: |min-eps| <= {worst_dev:.2e} (tol 1e-3), drift <= {worst_drift:.2e} (tol 1e-5), {worst_secs:.2}s/path (max 5)"
        ),
    );
}

#[test]
fn criterion_4_family_sandwich() {
    // Every shipped generating-function family (>= 10 of them) satisfies
    // integral-min <= l <= integral-max within the combined bound.
    let ids = library::family_ids();
    assert!(ids.len() >= 10);
    let mut worst_slack = f64::INFINITY;
    let mut failures = Vec::new();
    for id in &ids {
        let fam = library::family(id).unwrap();
        match sandwich_check(&fam, &SandwichCfg::standard(fam.fiber_dim())) {
            Ok(rep) => worst_slack = worst_slack.min(rep.slack_point.min(rep.slack_fundamental)),
            Err(e) => failures.push(format!("{id}: {e}")),
        }
    }
    let pass = failures.is_empty();
    verdict(
        4,
        "family sandwich",
        pass,
        &format!("{} families, worst slack {worst_slack:.2e}, failures: {:?}", ids.len(), failures),
    );
}

#[test]
fn criterion_5_spectral_oracle() {
    // 50 random trig functions of degree <= 5: point invariant = min f and
    // fundamental = max f within two grid cells, shift equivariance exact,
    // stabilization within the combined grid tolerance.
    let mut rng = ChaCha8Rng::seed_from_u64(53);
    let grid = SpectralGrid::default_for(0);
    let sgrid = SpectralGrid::default_for(1);
    let mut worst_pt = f64::NEG_INFINITY;
    let mut worst_fund = f64::NEG_INFINITY;
    let mut worst_shift = 0.0f64;
    let mut worst_stab = f64::NEG_INFINITY;
    for _ in 0..50 {
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
        let gf = GenFun::jet(terms);
        let n = 8192;
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..n {
            let v = gf.value(TAU * i as f64 / n as f64, &[]);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        let pt = spectral_invariant(&gf, HomologyClass::Point, &grid).unwrap();
        let fund = spectral_invariant(&gf, HomologyClass::Fundamental, &grid).unwrap();
        worst_pt = worst_pt.max((pt.value - lo).abs() - 2.0 * pt.pad);
        worst_fund = worst_fund.max((fund.value - hi).abs() - 2.0 * fund.pad);

        let c = rng.gen_range(-1.0..1.0);
        let shifted = spectral_invariant(&gf.shifted(c), HomologyClass::Point, &grid).unwrap();
        worst_shift = worst_shift.max((shifted.value - (pt.value + c)).abs());

        let stab = spectral_invariant(&gf.stabilized().unwrap(), HomologyClass::Point, &sgrid).unwrap();
        worst_stab = worst_stab.max((stab.value - pt.value).abs() - 2.0 * (pt.pad + stab.pad));
    }
    let pass = worst_pt <= 0.0 && worst_fund <= 0.0 && worst_shift == 0.0 && worst_stab <= 0.0;
    verdict(
        5,
        "spectral oracle",
        pass,
        &format!(
            "50 draws: pt excess {worst_pt:.2e}, fund excess {worst_fund:.2e}, shift defect {worst_shift:.1e} (exact), stab excess {worst_stab:.2e}"
        ),
    );
}

#[test]
fn criterion_6_rescaled_form_comparison() {
    // 10 seeded positive paths against a rescaled form with certified
    // conformal ratio 2: tau lower <= ratio * norm upper + slack each time.
    let cfg = scenario::parse_config(
        "kind = \"theorem3\"\nseed = 59\n[params]\ncount = 10\n",
    )
    .unwrap();
    let out = scenario::run(&cfg).unwrap();
    let worst = out
        .report
        .checks
        .iter()
        .map(|c| c.value - c.bound)
        .fold(f64::NEG_INFINITY, f64::max);
    verdict(
        6,
        "rescaled form comparison",
        out.report.pass,
        &format!("10 paths, worst (tau - 2*norm - slack) = {worst:.2e} (tol 0)"),
    );
}

#[test]
fn criterion_7_sphere_loop_linearity() {
    // tau(id, id) on the sphere is bounded below by 2 pi k for every
    // iterate, linearly within 1e-9.
    let model = ContactModel::s3();
    let mut worst_floor = f64::INFINITY;
    let mut worst_linear = 0.0f64;
    let mut first = 0.0;
    for k in 1..=5usize {
        let cert = positive_loop(&model, k).unwrap();
        if k == 1 {
            first = cert.margin;
        }
        worst_floor = worst_floor.min(cert.margin - TAU * k as f64);
        worst_linear = worst_linear.max((cert.margin - first * k as f64).abs());
    }
    let pass = worst_floor >= -1e-9 && worst_linear <= 1e-9;
    verdict(
        7,
        "sphere loop linearity",
        pass,
        &format!("k=1..5: margin-2pik >= {worst_floor:.2e} (tol -1e-9), linearity {worst_linear:.2e} (tol 1e-9)"),
    );
}

#[test]
fn criterion_8_concatenation_additivity() {
    // Lengths add under concatenation on 20 random pairs, within the
    // summed quadrature bounds; composed certificates match the sum of the
    // parts within 1e-6 plus those bounds.
    let model = ContactModel::t3();
    let mut rng = ChaCha8Rng::seed_from_u64(61);
    let lcfg = LengthCfg::standard(&model);
    let mut worst_add = 0.0f64;
    for _ in 0..20 {
        let a = random_positive_path(model, &mut rng).unwrap();
        let b = random_positive_path(model, &mut rng).unwrap();
        let la = lorentz_length(&a, &lcfg).unwrap();
        let lb = lorentz_length(&b, &lcfg).unwrap();
        let lc = lorentz_length(&concatenate(&a, &b).unwrap(), &lcfg).unwrap();
        let tol = la.error_bound + lb.error_bound + lc.error_bound + 1e-9;
        worst_add = worst_add.max((lc.value - (la.value + lb.value)).abs() - tol);
    }

    let mut worst_tri = 0.0f64;
    let scfg = SearchCfg { seed: 67, ..SearchCfg::quick() };
    let mut rng = ChaCha8Rng::seed_from_u64(71);
    for _ in 0..6 {
        let a = random_positive_path(model, &mut rng).unwrap();
        let b = random_positive_path(model, &mut rng).unwrap();
        let ta = tau_lower(&a, &scfg).unwrap();
        let tb = tau_lower(&b, &scfg).unwrap();
        let cat = reverse_triangle_check(&ta, &tb, &scfg).unwrap();
        let expected = ta.lower_bound + tb.lower_bound;
        let tol = ta.length.error_bound + tb.length.error_bound + cat.length.error_bound + 1e-6;
        worst_tri = worst_tri.max((cat.lower_bound - expected).abs() - tol);
    }
    let pass = worst_add <= 0.0 && worst_tri <= 0.0;
    verdict(
        8,
        "concatenation additivity",
        pass,
        &format!("20 pairs: additivity excess {worst_add:.2e}; 6 composed certificates: excess {worst_tri:.2e}"),
    );
}

#[test]
fn criterion_9_sky_continuity_and_margins() {
    // Flat product spacetime: the sky distance scales with the time
    // separation (constant at most 1.01), and order-certificate margins
    // equal dt - d_h within 1e-6 and are positive on 50 random timelike
    // pairs; the whole suite stays under 120 s.
    let clock = Instant::now();
    let st = ProductSpacetime::flat();
    let p = Event::new(0.0, 1.0, 2.0);
    let mut worst_scale = 0.0f64;
    for delta in [0.2, 0.1, 0.05, 0.025] {
        let q = Event::new(delta, p.x, p.y);
        let est = sky_distance_upper(&st, &p, &q, &SkyDistCfg::default()).unwrap();
        worst_scale = worst_scale.max(est.upper / delta);
    }

    let cfg = SkyCfg { directions: 256, ..SkyCfg::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(73);
    let mut worst_margin_dev = 0.0f64;
    let mut min_margin = f64::INFINITY;
    let mut seen = 0usize;
    while seen < 50 {
        let a = Event::new(0.0, rng.gen_range(0.0..TAU), rng.gen_range(0.0..TAU));
        let dx: f64 = rng.gen_range(-0.5..0.5);
        let dy: f64 = rng.gen_range(-0.5..0.5);
        let dh = dx.hypot(dy);
        let dt = dh + rng.gen_range(0.05..0.8);
        let b = Event::new(dt, a.x + dx, a.y + dy);
        let Some(cert) = sky_order_certificate(&st, &a, &b, &cfg).unwrap() else {
            continue;
        };
        seen += 1;
        worst_margin_dev = worst_margin_dev.max((cert.margin - (dt - dh)).abs());
        min_margin = min_margin.min(cert.margin);
    }
    let secs = clock.elapsed().as_secs_f64();
    let pass = worst_scale <= 1.01 && worst_margin_dev <= 1e-6 && min_margin > 0.0 && secs <= 120.0;
    verdict(
        9,
        "sky continuity and margins",
        pass,
        &format!(
            "scaling constant {worst_scale:.4} (max 1.01), margin dev {worst_margin_dev:.2e} (tol 1e-6), min margin {min_margin:.3} > 0, {secs:.1}s (max 120)"
        ),
    );
}

#[test]
fn fiber_calibration_sweep() {
    // Companion invariant: fiber-to-Reeb-image distances are pinched
    // between the transport lower bound and the search upper bound.
    let model = ContactModel::t3();
    let from = Legendrian::torus_fiber(&model, 0.7, 1.9, 192).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(79);
    let mut worst_low = f64::INFINITY;
    let mut worst_high = f64::NEG_INFINITY;
    let mut worst_up = f64::NEG_INFINITY;
    for _ in 0..20 {
        let t = rng.gen_range(0.1..1.2);
        let iso = leg_isotopy(&HamiltonianPath::reeb(model, t), &from, &LegCfg::default()).unwrap();
        let len = leg_lorentz_length(&iso);
        worst_low = worst_low.min(len.value - len.error_bound - t);
        worst_high = worst_high.max(len.value - len.error_bound - t);
        let to = from.reeb_image(&model, t);
        let est = chekanov_upper(&model, &from, &to, &ChekanovCfg::quick(83)).unwrap();
        assert!(est.certified, "witness must certify at t={t}");
        worst_up = worst_up.max(est.upper - t);
    }
    let pass = worst_low >= -1e-6 && worst_high <= 1e-12 && worst_up <= 1e-3;
    assert!(
        pass,
        "transport lower in [t-1e-6, t+1e-12] (got [{worst_low:.2e}, {worst_high:.2e}] around t), upper - t <= {worst_up:.2e} (tol 1e-3)"
    );
}
