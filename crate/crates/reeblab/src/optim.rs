//! Derivative-free minimization for the estimate searches.
//!
//! Classical Nelder-Mead with a seeded initial simplex. Everything is
//! deterministic for a fixed seed: the jitter comes from a counter-based
//! ChaCha stream and ties in the ordering are broken by insertion index.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy)]
pub struct NmCfg {
    /// Maximum number of objective evaluations.
    pub budget: usize,
    /// Edge length of the initial simplex.
    pub init_step: f64,
    pub seed: u64,
    /// Stop when the simplex value spread falls below this.
    pub tol: f64,
}

impl Default for NmCfg {
    fn default() -> Self {
        NmCfg { budget: 2000, init_step: 0.25, seed: 0, tol: 1e-10 }
    }
}

#[derive(Debug, Clone)]
pub struct NmResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
}

pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(mut f: F, x0: &[f64], cfg: &NmCfg) -> NmResult {
    let n = x0.len();
    if n == 0 {
        let v = f(x0);
        return NmResult { x: Vec::new(), value: v, evals: 1 };
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| -> f64 {
        *evals += 1;
        f(x)
    };

    // Vertices carry their objective value; kept sorted best-first.
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let v0 = eval(x0, &mut evals);
    simplex.push((x0.to_vec(), v0));
    for i in 0..n {
        let mut x = x0.to_vec();
        let jitter: f64 = rng.gen_range(-0.1..0.1);
        x[i] += cfg.init_step * (1.0 + jitter);
        let v = eval(&x, &mut evals);
        simplex.push((x, v));
    }
    let order = |s: &mut Vec<(Vec<f64>, f64)>| {
        s.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
    };
    order(&mut simplex);

    while evals < cfg.budget {
        let spread = simplex[n].1 - simplex[0].1;
        if spread.abs() < cfg.tol {
            break;
        }
        // Centroid of all but the worst.
        let mut c = vec![0.0; n];
        for (x, _) in simplex.iter().take(n) {
            for (ci, xi) in c.iter_mut().zip(x.iter()) {
                *ci += xi / n as f64;
            }
        }
        let worst = simplex[n].clone();
        let lerp = |t: f64| -> Vec<f64> {
            c.iter()
                .zip(worst.0.iter())
                .map(|(ci, wi)| ci + t * (ci - wi))
                .collect()
        };
        let xr = lerp(1.0);
        let vr = eval(&xr, &mut evals);
        if vr < simplex[0].1 {
            let xe = lerp(2.0);
            let ve = eval(&xe, &mut evals);
            simplex[n] = if ve < vr { (xe, ve) } else { (xr, vr) };
        } else if vr < simplex[n - 1].1 {
            simplex[n] = (xr, vr);
        } else {
            let xc = if vr < worst.1 { lerp(0.5) } else { lerp(-0.5) };
            let vc = eval(&xc, &mut evals);
            if vc < worst.1.min(vr) {
                simplex[n] = (xc, vc);
            } else {
                // Shrink toward the best vertex.
                let best = simplex[0].0.clone();
                for vtx in simplex.iter_mut().skip(1) {
                    for (xi, bi) in vtx.0.iter_mut().zip(best.iter()) {
                        *xi = bi + 0.5 * (*xi - bi);
                    }
                    vtx.1 = eval(&vtx.0, &mut evals);
                }
            }
        }
        order(&mut simplex);
    }

    let (x, value) = simplex.swap_remove(0);
    NmResult { x, value, evals }
}
