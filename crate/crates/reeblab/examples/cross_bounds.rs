//! Certified tau lower bound vs norm upper bound for one positive path,
//! re-measured against a rescaled contact form with conformal ratio 2.
//!
//!     cargo run --release --example cross_bounds

use reeblab::fields::{BasisFn, ScalarField, TrigFactor};
use reeblab::genfun::{cross_bound_check, CrossBoundCfg, SpectralGrid};
use reeblab::library;
use reeblab::lorentz::SearchCfg;

fn main() {
    let path = library::path("t3-mixed").unwrap();
    let rho = ScalarField::new(
        path.model,
        vec![
            (1.5, BasisFn::Const),
            (0.5, BasisFn::Torus { x: None, y: None, theta: Some(TrigFactor::cos(1)) }),
        ],
    )
    .unwrap();

    let cfg = CrossBoundCfg {
        search: SearchCfg { seed: 12, ..SearchCfg::standard() },
        grid: SpectralGrid::default_for(0),
        weight: Some(rho),
    };
    let rep = cross_bound_check(&path, &cfg).unwrap();

    println!("tau  >= {:.9}   (node min {:.9}, endpoint residual {:.1e})", rep.tau.lower_bound, rep.tau.node_min, rep.tau.eta_residual);
    println!("norm <= {:.9}   (endpoint residual {:.1e})", rep.norm.upper_bound, rep.norm.eta_residual);
    println!("comparison slack: {:.2e}", rep.slack);

    let w = rep.weighted.as_ref().unwrap();
    println!("\nrescaled form, certified ratio {:.6}:", w.ratio);
    println!("tau'  >= {:.9}", w.tau_lower);
    println!("norm' <= {:.9}", w.norm_upper);
    println!("tau' <= ratio * norm' + slack: {}", w.tau_lower <= w.ratio * w.norm_upper + rep.slack * w.ratio);
}
