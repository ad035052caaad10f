//! Iterated Reeb loops on the round three-sphere: each iterate is a
//! positive loop of contactomorphisms, and the certified margins grow
//! linearly with the iterate. These margins are what caps the distance
//! function on models with a positive loop.
//!
//!     cargo run --release --example positive_loop_s3

use reeblab::lorentz::positive_loop;
use reeblab::manifolds::ContactModel;
use std::f64::consts::TAU;

fn main() {
    let model = ContactModel::s3();
    let mut first = 0.0;
    for k in 1..=4 {
        let cert = positive_loop(&model, k).unwrap();
        if k == 1 {
            first = cert.margin;
        }
        println!(
            "k={k}  margin {:.12}  = {:.12} * 2 pi k  endpoint residual {:.1e}",
            cert.margin,
            cert.margin / (TAU * k as f64),
            cert.eta_residual,
        );
        assert!((cert.margin - first * k as f64).abs() < 1e-9);
    }

    // Refused on models without a shipped loop, rather than silently
    // producing a non-loop.
    let refused = positive_loop(&ContactModel::t3(), 1);
    println!("\nT3: {}", refused.unwrap_err());
}
