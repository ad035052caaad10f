//! Spectral invariants from the sublevel filtration of a generating function,
//! and the velocity bracket that sandwiches them along a time family.
//!
//! For S = f + Q + offset the pair (sublevel set, deep base level) on a large
//! enough fiber box has the homology of the circle shifted up by the negative
//! index of Q. Exactly two essential classes exist; the filtration levels at
//! which they appear are the two invariants. The box is sized so that the
//! entire outer wall along each negative axis lies below the base level,
//! which makes the relative pair equal to the stabilized picture.

use super::cubical::{essential_births, FiltGrid};
use super::{critical_locus, GenFamily, GenFun, LocusGrid};
use crate::error::{Error, Result};
use crate::flows::{simpson, simpson_tail_estimate};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HomologyClass {
    Point,
    Fundamental,
}

/// Vertex resolution of the filtration grid: `nq` circle columns, `ne` odd
/// samples per fiber axis.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SpectralGrid {
    pub nq: usize,
    pub ne: usize,
}

impl SpectralGrid {
    pub fn default_for(m: usize) -> Self {
        match m {
            0 => SpectralGrid { nq: 256, ne: 0 },
            1 => SpectralGrid { nq: 96, ne: 49 },
            _ => SpectralGrid { nq: 40, ne: 21 },
        }
    }

    /// Halved spacing on every axis; fiber counts stay odd so e = 0 stays on
    /// the grid.
    pub fn refined(&self) -> Self {
        SpectralGrid {
            nq: 2 * self.nq,
            ne: if self.ne == 0 { 0 } else { 2 * self.ne - 1 },
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        let nq = ((self.nq as f64 * s).round() as usize).max(8);
        let ne = if self.ne == 0 {
            0
        } else {
            (((self.ne as f64 * s).round() as usize).max(5)) | 1
        };
        SpectralGrid { nq, ne }
    }
}

/// One essential birth level, computed on a grid and its refinement.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SpectralValue {
    pub class: HomologyClass,
    /// Birth level on the refined grid.
    pub value: f64,
    /// Birth level on the coarse grid, kept for the bracket.
    pub coarse: f64,
    /// [low, high] enclosing both grid readings, padded by the resolution pad.
    pub bracket: [f64; 2],
    /// Largest value change between adjacent vertices inside the support
    /// window of the refined grid.
    pub pad: f64,
    pub q_index: usize,
}

fn box_radii(gf: &GenFun, ne: usize) -> Result<[f64; 2]> {
    let m = gf.fiber_dim();
    if m == 0 {
        return Ok([0.0; 2]);
    }
    if ne < 7 || ne % 2 == 0 {
        return Err(Error::Config(format!("fiber sample count {ne} must be odd and at least 7")));
    }
    let support = gf.support_radius();
    let pos_r = 1.1 * support;
    let lambda = gf.quadratic();
    let pos_cap: f64 =
        lambda.iter().filter(|&&l| l > 0.0).map(|&l| l * pos_r * pos_r).sum();
    let need = 2.0 * gf.depth_bound() + pos_cap + 2.0;
    // The wall cells' inner vertices sit at r (ne-3)/(ne-1); both the depth
    // condition and f = 0 must hold there.
    let stretch = (ne - 1) as f64 / (ne - 3) as f64;
    let mut radii = [0.0; 2];
    for (a, &l) in lambda.iter().enumerate() {
        radii[a] = if l > 0.0 {
            pos_r
        } else {
            ((need / -l).sqrt().max(1.05 * support)) * stretch
        };
    }
    Ok(radii)
}

/// Vertex values in filtration order plus the adjacent-difference pad over
/// the support window.
fn vertex_values(gf: &GenFun, nq: usize, ne: usize, radii: &[f64; 2]) -> (Vec<f64>, f64) {
    let m = gf.fiber_dim();
    let support = gf.support_radius();
    let coord = |a: usize, j: usize| -> f64 {
        -radii[a] + 2.0 * radii[a] * j as f64 / (ne - 1) as f64
    };
    let columns: Vec<Vec<f64>> = (0..nq)
        .into_par_iter()
        .map(|iq| {
            let q = TAU * iq as f64 / nq as f64;
            match m {
                0 => vec![gf.value(q, &[])],
                1 => (0..ne).map(|j| gf.value(q, &[coord(0, j)])).collect(),
                _ => {
                    let mut col = Vec::with_capacity(ne * ne);
                    for j in 0..ne {
                        let e0 = coord(0, j);
                        for k in 0..ne {
                            col.push(gf.value(q, &[e0, coord(1, k)]));
                        }
                    }
                    col
                }
            }
        })
        .collect();
    let stride = columns[0].len();
    let vals: Vec<f64> = columns.into_iter().flatten().collect();

    let in_window = |j: usize, a: usize| -> bool { coord(a, j).abs() <= support };
    let mut pad = 0.0f64;
    let fiber_ok = |fi: usize| -> bool {
        match m {
            0 => true,
            1 => in_window(fi, 0),
            _ => in_window(fi / ne, 0) && in_window(fi % ne, 1),
        }
    };
    for iq in 0..nq {
        let jq = (iq + 1) % nq;
        for fi in 0..stride {
            if !fiber_ok(fi) {
                continue;
            }
            let v = vals[iq * stride + fi];
            pad = pad.max((vals[jq * stride + fi] - v).abs());
            if m >= 1 {
                let (j, k) = if m == 1 { (fi, 0) } else { (fi / ne, fi % ne) };
                if j + 1 < ne && (m == 1 || fiber_ok(fi + ne)) && in_window(j + 1, 0) {
                    let up = if m == 1 { fi + 1 } else { fi + ne };
                    pad = pad.max((vals[iq * stride + up] - v).abs());
                }
                if m == 2 && k + 1 < ne && in_window(k + 1, 1) {
                    pad = pad.max((vals[iq * stride + fi + 1] - v).abs());
                }
            }
        }
    }
    (vals, pad)
}

fn births_on(gf: &GenFun, sg: &SpectralGrid) -> Result<(f64, f64, f64)> {
    if sg.nq < 8 {
        return Err(Error::Config("need at least 8 circle columns".into()));
    }
    let m = gf.fiber_dim();
    let ne = if m == 0 { 0 } else { sg.ne };
    let radii = box_radii(gf, ne)?;
    let (vals, pad) = vertex_values(gf, sg.nq, ne.max(1), &radii);
    let grid = FiltGrid { nq: sg.nq, ne, m };
    let base = gf.offset_value() - gf.depth_bound() - 1.0;
    let eb = essential_births(grid, &vals, base);
    if eb.count() == 0 {
        return Err(Error::Infeasible("no essential class above the base level".into()));
    }
    let d0 = gf.q_index();
    let counts: Vec<usize> = eb.by_dim.iter().map(Vec::len).collect();
    if eb.by_dim[d0].len() != 1 || eb.by_dim[d0 + 1].len() != 1 || eb.count() != 2 {
        return Err(Error::Regularity(format!(
            "expected single essential classes in degrees {} and {}, found counts {:?}",
            d0,
            d0 + 1,
            counts
        )));
    }
    Ok((eb.by_dim[d0][0], eb.by_dim[d0 + 1][0], pad))
}

/// Birth level of one essential class, with a bracket from running the grid
/// and its refinement.
pub fn spectral_invariant(
    gf: &GenFun,
    class: HomologyClass,
    grid: &SpectralGrid,
) -> Result<SpectralValue> {
    let (c_pt, c_fu, _) = births_on(gf, grid)?;
    let (f_pt, f_fu, pad) = births_on(gf, &grid.refined())?;
    let (coarse, value) = match class {
        HomologyClass::Point => (c_pt, f_pt),
        HomologyClass::Fundamental => (c_fu, f_fu),
    };
    Ok(SpectralValue {
        class,
        value,
        coarse,
        bracket: [value.min(coarse) - pad, value.max(coarse) + pad],
        pad,
        q_index: gf.q_index(),
    })
}

/// Range of the time derivative of a family over its critical locus at one
/// time, with a cross-check that the locus samples move consistently.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct VelocityProbe {
    pub min: f64,
    pub max: f64,
    /// Difference between the finite-difference velocity at a frozen point
    /// and the velocity read off the moving locus samples.
    pub geometry_gap: f64,
}

const VELOCITY_STEP: f64 = 1e-4;
const GEOMETRY_GAP_TOL: f64 = 1e-3;

pub fn family_velocity(fam: &GenFamily, t: f64, grid: &LocusGrid) -> Result<VelocityProbe> {
    let h = VELOCITY_STEP;
    let gc = fam.at(t);
    let gp = fam.at(t + h);
    let gm = fam.at(t - h);
    let lc = critical_locus(&gc, grid)?;
    let lp = critical_locus(&gp, grid)?;
    let lm = critical_locus(&gm, grid)?;
    if lp.components.len() != lc.components.len() || lm.components.len() != lc.components.len() {
        return Err(Error::FamilyEvent(format!(
            "locus component count changes within {h:.0e} of t = {t}"
        )));
    }

    let m = gc.fiber_dim();
    let mut vmin = f64::INFINITY;
    let mut vmax = f64::NEG_INFINITY;
    for comp in &lc.components {
        for s in &comp.samples {
            let e = &s.e[..m];
            let fd = (gp.value(s.q, e) - gm.value(s.q, e)) / (2.0 * h);
            vmin = vmin.min(fd);
            vmax = vmax.max(fd);
        }
    }

    // On the locus the fiber gradient vanishes, so the value change at the
    // frozen point and along the moving root must agree to second order.
    let mut gap = 0.0f64;
    if m > 0 {
        let nq = grid.nq;
        let probes = 16.min(nq);
        for i in 0..probes {
            let q = TAU * (i * (nq / probes)) as f64 / nq as f64;
            let roots_at = |g: &GenFun| -> Vec<Vec<f64>> {
                if m == 1 {
                    let f = |e: f64| g.de(q, &[e], 0);
                    let (r, _) = super::column_roots(&f, g.support_radius(), grid.ne);
                    r.into_iter().map(|e| vec![e]).collect()
                } else {
                    let (r, _) = super::column_roots_2d(g, q, grid.ne);
                    r.into_iter().map(|e| e.to_vec()).collect()
                }
            };
            let rc = roots_at(&gc);
            let rp = roots_at(&gp);
            let rm = roots_at(&gm);
            if rc.len() != rp.len() || rc.len() != rm.len() {
                continue;
            }
            for ((ec, ep), em) in rc.iter().zip(&rp).zip(&rm) {
                let frozen = (gp.value(q, ec) - gm.value(q, ec)) / (2.0 * h);
                let moving = (gp.value(q, ep) - gm.value(q, em)) / (2.0 * h);
                gap = gap.max((frozen - moving).abs());
            }
        }
        if gap > GEOMETRY_GAP_TOL {
            return Err(Error::Tolerance { needed: GEOMETRY_GAP_TOL, achieved: gap });
        }
    }
    Ok(VelocityProbe { min: vmin, max: vmax, geometry_gap: gap })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SandwichCfg {
    pub grid: SpectralGrid,
    pub locus: LocusGrid,
    /// Simpson panels over the time interval; must be even.
    pub panels: usize,
}

impl SandwichCfg {
    pub fn standard(m: usize) -> Self {
        SandwichCfg {
            grid: SpectralGrid::default_for(m),
            locus: LocusGrid::default_for(m),
            panels: 64,
        }
    }
}

/// Outcome of the velocity sandwich for one family.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SandwichReport {
    pub point: SpectralValue,
    pub fundamental: SpectralValue,
    /// Integral over time of the locus minimum of the velocity.
    pub lower_integral: f64,
    /// Integral over time of the locus maximum of the velocity.
    pub upper_integral: f64,
    pub quad_error: f64,
    pub velocity_gap: f64,
    pub tolerance: f64,
    /// Margins of the two invariants inside [lower, upper]; the smaller the
    /// tighter, and anything above -tolerance passes.
    pub slack_point: f64,
    pub slack_fundamental: f64,
}

/// Check that both endpoint invariants of a family starting at the bare
/// quadratic are squeezed between the time integrals of the extreme locus
/// velocities.
pub fn sandwich_check(fam: &GenFamily, cfg: &SandwichCfg) -> Result<SandwichReport> {
    if cfg.panels < 4 || cfg.panels % 2 != 0 {
        return Err(Error::Config("panel count must be even and at least 4".into()));
    }
    if !fam.starts_at_fiber_form() {
        return Err(Error::Config(
            "family must start at the bare quadratic so both invariants start at zero".into(),
        ));
    }
    let end = fam.at(1.0);
    let point = spectral_invariant(&end, HomologyClass::Point, &cfg.grid)?;
    let fundamental = spectral_invariant(&end, HomologyClass::Fundamental, &cfg.grid)?;

    let n = cfg.panels;
    let probes: Vec<VelocityProbe> = (0..=n)
        .into_par_iter()
        .map(|i| family_velocity(fam, i as f64 / n as f64, &cfg.locus))
        .collect::<Result<_>>()?;
    let mins: Vec<f64> = probes.iter().map(|p| p.min).collect();
    let maxs: Vec<f64> = probes.iter().map(|p| p.max).collect();
    let lower_integral = simpson(&mins);
    let upper_integral = simpson(&maxs);
    let quad_error = simpson_tail_estimate(&mins).max(simpson_tail_estimate(&maxs));
    let velocity_gap = probes.iter().fold(0.0f64, |g, p| g.max(p.geometry_gap));

    let tolerance = quad_error + velocity_gap + point.pad.max(fundamental.pad) + 1e-6;
    let slack_point = (point.value - lower_integral).min(upper_integral - point.value);
    let slack_fundamental =
        (fundamental.value - lower_integral).min(upper_integral - fundamental.value);
    let worst = slack_point.min(slack_fundamental);
    if worst < -tolerance {
        return Err(Error::Tolerance { needed: tolerance, achieved: -worst });
    }
    Ok(SandwichReport {
        point,
        fundamental,
        lower_integral,
        upper_integral,
        quad_error,
        velocity_gap,
        tolerance,
        slack_point,
        slack_fundamental,
    })
}
