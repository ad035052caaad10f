//! Composes a positive path with a Reeb time-shift so its per-time spatial
//! minimum becomes uniform, without moving the endpoint. Prints the
//! minimum track before and after.
//!
//!     cargo run --release --example reparametrize_path

use reeblab::flows::{integrate, reeb_reparametrize, ReparamCfg, SliceExtremizer};
use reeblab::library;

fn main() {
    let path = library::path("t3-mixed").unwrap();
    let model = path.model;
    let cfg = ReparamCfg::standard(&model);
    let (shifted, info) = reeb_reparametrize(&path, &cfg).unwrap();

    let before = SliceExtremizer::new(&path, cfg.grid, None).unwrap();
    let after = SliceExtremizer::new(&shifted, cfg.grid, None).unwrap();
    println!("target minimum (Lorentz length): {:.9}\n", info.eps);
    println!("  t     min before   min after");
    let mut worst = 0.0f64;
    for i in 0..=10 {
        let t = i as f64 / 10.0;
        let b = before.extrema(t).unwrap().min;
        let a = after.extrema(t).unwrap().min;
        worst = worst.max((a - info.eps).abs());
        println!("  {t:.1}   {b:+.6}    {a:+.6}");
    }
    println!("\nworst |min - eps| on the printed slices: {worst:.2e}");

    let ens = model.canonical_ensemble(32);
    let a = integrate(&path, &ens, 400).unwrap();
    let b = integrate(&shifted, &ens, 400).unwrap();
    let an: Vec<_> = a.endpoints().iter().map(|p| model.normalize(p)).collect();
    let bn: Vec<_> = b.endpoints().iter().map(|p| model.normalize(p)).collect();
    let drift = model.ensemble_distance(&an, &bn);
    println!("endpoint drift across 32 probe points: {drift:.2e}");
    if worst > cfg.delta || drift > 1e-5 {
        std::process::exit(1);
    }
}
