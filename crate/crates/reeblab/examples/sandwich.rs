//! Sweeps every shipped generating-function family through the velocity
//! sandwich: both endpoint spectral invariants must land between the time
//! integrals of the extreme locus velocities.
//!
//!     cargo run --release --example sandwich

use reeblab::genfun::{sandwich_check, SandwichCfg};
use reeblab::library;

fn main() {
    let mut worst = f64::INFINITY;
    let mut failed = 0;
    for id in library::family_ids() {
        let fam = library::family(id).unwrap();
        let cfg = SandwichCfg::standard(fam.fiber_dim());
        match sandwich_check(&fam, &cfg) {
            Ok(rep) => {
                let slack = rep.slack_point.min(rep.slack_fundamental);
                worst = worst.min(slack);
                println!(
                    "{:<14} m={}  l(pt)={:+.6}  l(fund)={:+.6}  window=[{:+.6}, {:+.6}]  slack={:+.3e}",
                    id,
                    fam.fiber_dim(),
                    rep.point.value,
                    rep.fundamental.value,
                    rep.lower_integral,
                    rep.upper_integral,
                    slack,
                );
            }
            Err(e) => {
                failed += 1;
                println!("{:<14} FAILED: {e}", id);
            }
        }
    }
    println!("\nworst slack across the catalog: {worst:+.3e}");
    if failed > 0 {
        std::process::exit(1);
    }
}
