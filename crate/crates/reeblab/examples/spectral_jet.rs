//! The endpoint spectral invariants of a jet-space generating function:
//! values on the grid vs the dense extrema of the function, exact shift
//! equivariance, and invariance under adding an inert fiber square.
//!
//!     cargo run --release --example spectral_jet

use reeblab::fields::TrigFactor;
use reeblab::genfun::{spectral_invariant, FTerm, GenFun, HomologyClass, SpectralGrid};
use std::f64::consts::TAU;

fn main() {
    let gf = GenFun::jet(vec![
        FTerm::circle(0.7, TrigFactor::cos(1)),
        FTerm::circle(-0.3, TrigFactor::sin(2)),
        FTerm::circle(0.15, TrigFactor::cos(4)),
    ]);
    let grid = SpectralGrid::default_for(0);

    let pt = spectral_invariant(&gf, HomologyClass::Point, &grid).unwrap();
    let fund = spectral_invariant(&gf, HomologyClass::Fundamental, &grid).unwrap();

    // Dense reference sweep; the grid values must agree within their pads.
    let n = 1 << 16;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..n {
        let v = gf.value(TAU * i as f64 / n as f64, &[]);
        lo = lo.min(v);
        hi = hi.max(v);
    }
    println!("l(pt)   = {:+.9}  bracket [{:+.9}, {:+.9}]  dense min {lo:+.9}", pt.value, pt.bracket[0], pt.bracket[1]);
    println!("l(fund) = {:+.9}  bracket [{:+.9}, {:+.9}]  dense max {hi:+.9}", fund.value, fund.bracket[0], fund.bracket[1]);

    let c = 0.4375;
    let shifted = spectral_invariant(&gf.shifted(c), HomologyClass::Point, &grid).unwrap();
    println!("shift by {c}: l(pt) moves by {:+.17} (exactly c)", shifted.value - pt.value);

    let stab = gf.stabilized().unwrap();
    let sgrid = SpectralGrid::default_for(1);
    let spt = spectral_invariant(&stab, HomologyClass::Point, &sgrid).unwrap();
    println!(
        "inert fiber square: l(pt) = {:+.9} (gap {:.2e}, grids allow {:.2e})",
        spt.value,
        (spt.value - pt.value).abs(),
        2.0 * (pt.pad + spt.pad),
    );

    let ok = (pt.value - lo).abs() <= 2.0 * pt.pad
        && (fund.value - hi).abs() <= 2.0 * fund.pad
        && shifted.value - pt.value == c
        && (spt.value - pt.value).abs() <= 2.0 * (pt.pad + spt.pad);
    if !ok {
        std::process::exit(1);
    }
}
