//! Upper bounds for the restricted distance between cotangent-style fibers
//! of T3, from a seeded search over rigid translation families, with the
//! Reeb-transport lower bound alongside when the target is a Reeb image.
//!
//!     cargo run --release --example chekanov_fibers

use reeblab::flows::HamiltonianPath;
use reeblab::legendrian::{chekanov_upper, leg_isotopy, leg_lorentz_length, ChekanovCfg, LegCfg, Legendrian};
use reeblab::manifolds::ContactModel;

fn main() {
    let model = ContactModel::t3();
    let from = Legendrian::torus_fiber(&model, 1.0, 2.0, 256).unwrap();
    let cfg = ChekanovCfg::standard(3);

    // Reeb target: both bounds pinch the distance to within eta + 1e-3.
    let t = 0.5;
    let to = from.reeb_image(&model, t);
    let est = chekanov_upper(&model, &from, &to, &cfg).unwrap();
    let iso = leg_isotopy(&HamiltonianPath::reeb(model, t), &from, &LegCfg::default()).unwrap();
    let len = leg_lorentz_length(&iso);
    println!("reeb target t={t}:");
    println!("  transport lower: {:.9} (err {:.1e})", len.value - len.error_bound, len.error_bound);
    println!("  chekanov upper:  {:.9} (residual {:.1e}, certified {})", est.upper, est.residual, est.certified);

    // Plain translation between two fibers.
    let to = Legendrian::torus_fiber(&model, 1.4, 2.3, 256).unwrap();
    let est = chekanov_upper(&model, &from, &to, &cfg).unwrap();
    let d = 0.4f64.hypot(0.3);
    println!("\nfiber (1.4, 2.3), euclidean shortest {d:.9}:");
    println!("  chekanov upper:  {:.9} (residual {:.1e}, certified {})", est.upper, est.residual, est.certified);
    if !est.certified || est.upper > d + 1e-3 {
        std::process::exit(1);
    }
}
