//! Certifies both sides of the distance to a pure Reeb shift on T3: a tau
//! lower bound from a positivity-preserving witness, a norm upper bound
//! from a cheap family, and the jet-side spectral invariant sitting in its
//! velocity window.
//!
//!     cargo run --release --example calibrate_reeb

use reeblab::flows::HamiltonianPath;
use reeblab::genfun::{cross_bound_check, CrossBoundCfg};
use reeblab::lorentz::SearchCfg;
use reeblab::manifolds::ContactModel;

fn main() {
    let model = ContactModel::t3();
    let mut bad = false;
    for t in [0.3, 0.7, 1.5] {
        let path = HamiltonianPath::reeb(model, t);
        let cfg = CrossBoundCfg { search: SearchCfg { seed: 5, ..SearchCfg::standard() }, ..CrossBoundCfg::standard() };
        let rep = cross_bound_check(&path, &cfg).unwrap();
        let leg = rep.spectral.as_ref().unwrap();
        let ok = rep.tau.lower_bound >= t - 1e-6
            && rep.norm.upper_bound <= t + 1e-3
            && (leg.point_value - t).abs() <= 2.0 * leg.tolerance;
        bad |= !ok;
        println!(
            "t={t:<4} tau >= {:.9}  norm <= {:.9}  l(pt) = {:.9} (pad {:.1e})  {}",
            rep.tau.lower_bound,
            rep.norm.upper_bound,
            leg.point_value,
            leg.tolerance,
            if ok { "ok" } else { "MISMATCH" },
        );
    }
    if bad {
        std::process::exit(1);
    }
}
