//! Sublevel filtration homology over Z2 for grid functions on S1 x [-R,R]^m.
//!
//! The complex is cubical with the vertex convention: a cell enters the
//! filtration at the maximum of the function over its vertices. The circle
//! axis is periodic, fiber axes are boxes. Cells whose value is at or below
//! the base level are removed and boundaries are taken relative to them, so
//! the reduction computes the homology of the pair (sublevel, base sublevel).
//!
//! Output is the list of essential birth values per degree: the filtration
//! levels at which classes appear that survive to the full complex. The
//! spectral layer upstream interprets them; this file knows nothing about
//! generating functions.

/// Vertex grid layout: `nq` circle samples, `ne` samples per fiber axis
/// (shared between fiber axes), `m` fiber axes.
#[derive(Debug, Clone, Copy)]
pub(crate) struct FiltGrid {
    pub nq: usize,
    pub ne: usize,
    pub m: usize,
}

/// Per-axis cell code: base vertex index plus extent flag per axis.
#[derive(Debug, Clone, Copy)]
struct CellCode {
    iq: usize,
    extq: usize,
    ie: [usize; 2],
    exte: [usize; 2],
}

impl FiltGrid {
    pub fn vertex_count(&self) -> usize {
        self.nq * self.ne.pow(self.m as u32)
    }

    /// Codes per axis: q has 2*nq (vertex/edge at each sample), a fiber axis
    /// has 2*ne - 1 (no edge past the last sample).
    fn fib_radix(&self) -> usize {
        if self.m == 0 {
            1
        } else {
            2 * self.ne - 1
        }
    }

    pub fn cell_count(&self) -> usize {
        2 * self.nq * self.fib_radix().pow(self.m as u32)
    }

    fn decode(&self, id: usize) -> CellCode {
        let fr = self.fib_radix();
        let mut rest = id;
        let mut ie = [0usize; 2];
        let mut exte = [0usize; 2];
        for a in (0..self.m).rev() {
            let code = rest % fr;
            rest /= fr;
            ie[a] = code / 2;
            exte[a] = code % 2;
        }
        CellCode { iq: rest / 2, extq: rest % 2, ie, exte }
    }

    fn encode(&self, c: &CellCode) -> usize {
        let fr = self.fib_radix();
        let mut id = 2 * c.iq + c.extq;
        for a in 0..self.m {
            id = id * fr + 2 * c.ie[a] + c.exte[a];
        }
        id
    }

    fn vertex_index(&self, iq: usize, ie: &[usize; 2]) -> usize {
        let mut v = iq;
        for a in 0..self.m {
            v = v * self.ne + ie[a];
        }
        v
    }

    fn cell_dim(&self, c: &CellCode) -> u8 {
        (c.extq + c.exte[0] + c.exte[1]) as u8
    }

    /// Max of the vertex values over the cell's corners.
    fn cell_value(&self, c: &CellCode, vals: &[f64]) -> f64 {
        let dim = self.cell_dim(c) as usize;
        let mut vmax = f64::NEG_INFINITY;
        for mask in 0..(1usize << dim) {
            let mut bit = 0;
            let iq = if c.extq == 1 {
                let b = (mask >> bit) & 1;
                bit += 1;
                (c.iq + b) % self.nq
            } else {
                c.iq
            };
            let mut ie = c.ie;
            for a in 0..self.m {
                if c.exte[a] == 1 {
                    ie[a] += (mask >> bit) & 1;
                    bit += 1;
                }
            }
            let v = vals[self.vertex_index(iq, &ie)];
            if v > vmax {
                vmax = v;
            }
        }
        vmax
    }

    /// Raw ids of the boundary faces (two per extended axis).
    fn faces(&self, c: &CellCode, out: &mut Vec<usize>) {
        out.clear();
        if c.extq == 1 {
            let mut f = *c;
            f.extq = 0;
            out.push(self.encode(&f));
            f.iq = (c.iq + 1) % self.nq;
            out.push(self.encode(&f));
        }
        for a in 0..self.m {
            if c.exte[a] == 1 {
                let mut f = *c;
                f.exte[a] = 0;
                out.push(self.encode(&f));
                f.ie[a] = c.ie[a] + 1;
                out.push(self.encode(&f));
            }
        }
    }
}

/// Birth values of essential classes, indexed by degree.
#[derive(Debug, Clone)]
pub(crate) struct EssentialBirths {
    pub by_dim: Vec<Vec<f64>>,
}

impl EssentialBirths {
    pub fn count(&self) -> usize {
        self.by_dim.iter().map(Vec::len).sum()
    }
}

/// Symmetric difference of two sorted index lists into `scratch`, which is
/// swapped with `a`.
fn xor_into(a: &mut Vec<u32>, b: &[u32], scratch: &mut Vec<u32>) {
    scratch.clear();
    let mut i = 0;
    let mut j = 0;
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                scratch.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                scratch.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    scratch.extend_from_slice(&a[i..]);
    scratch.extend_from_slice(&b[j..]);
    std::mem::swap(a, scratch);
}

/// Run the relative sublevel reduction and return the essential births.
///
/// `vals` are the vertex values in `vertex_index` order; cells at or below
/// `base` form the relative subcomplex. Ties in the filtration are broken by
/// dimension then raw id, which keeps faces ahead of cofaces.
pub(crate) fn essential_births(grid: FiltGrid, vals: &[f64], base: f64) -> EssentialBirths {
    assert_eq!(vals.len(), grid.vertex_count());
    let n = grid.cell_count();
    let mut value = Vec::with_capacity(n);
    let mut dim = Vec::with_capacity(n);
    for id in 0..n {
        let c = grid.decode(id);
        value.push(grid.cell_value(&c, vals));
        dim.push(grid.cell_dim(&c));
    }

    let mut order: Vec<u32> = (0..n as u32).filter(|&id| value[id as usize] > base).collect();
    order.sort_unstable_by(|&a, &b| {
        let (ia, ib) = (a as usize, b as usize);
        value[ia]
            .partial_cmp(&value[ib])
            .unwrap()
            .then(dim[ia].cmp(&dim[ib]))
            .then(a.cmp(&b))
    });
    const EXCLUDED: u32 = u32::MAX;
    let mut pos = vec![EXCLUDED; n];
    for (p, &id) in order.iter().enumerate() {
        pos[id as usize] = p as u32;
    }

    let ncells = order.len();
    let mut columns: Vec<Vec<u32>> = Vec::with_capacity(ncells);
    let mut owner = vec![EXCLUDED; ncells];
    let mut positive = vec![false; ncells];
    let mut faces = Vec::with_capacity(6);
    let mut scratch: Vec<u32> = Vec::new();

    for p in 0..ncells {
        let id = order[p] as usize;
        let code = grid.decode(id);
        grid.faces(&code, &mut faces);
        let mut col: Vec<u32> = faces
            .iter()
            .filter_map(|&f| {
                let fp = pos[f];
                (fp != EXCLUDED).then_some(fp)
            })
            .collect();
        col.sort_unstable();
        // A doubled face (q edge wrapping onto itself needs nq >= 3, enforced
        // upstream) cannot occur, so no same-pair cancellation is needed here.
        loop {
            match col.last() {
                None => {
                    positive[p] = true;
                    break;
                }
                Some(&low) => {
                    let holder = owner[low as usize];
                    if holder == EXCLUDED {
                        owner[low as usize] = p as u32;
                        break;
                    }
                    xor_into(&mut col, &columns[holder as usize], &mut scratch);
                }
            }
        }
        columns.push(col);
    }

    let max_dim = 1 + grid.m;
    let mut by_dim = vec![Vec::new(); max_dim + 1];
    for p in 0..ncells {
        if positive[p] && owner[p] == EXCLUDED {
            let id = order[p] as usize;
            by_dim[dim[id] as usize].push(value[id]);
        }
    }
    for births in &mut by_dim {
        births.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    }
    EssentialBirths { by_dim }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle_vals(nq: usize, f: impl Fn(f64) -> f64) -> Vec<f64> {
        (0..nq).map(|i| f(std::f64::consts::TAU * i as f64 / nq as f64)).collect()
    }

    #[test]
    fn circle_cosine_births() {
        let grid = FiltGrid { nq: 64, ne: 0, m: 0 };
        let vals = circle_vals(64, f64::cos);
        let births = essential_births(grid, &vals, -2.0);
        assert_eq!(births.by_dim[0].len(), 1);
        assert_eq!(births.by_dim[1].len(), 1);
        assert_eq!(births.count(), 2);
        assert!((births.by_dim[0][0] + 1.0).abs() < 1e-12);
        assert!((births.by_dim[1][0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn circle_constant_births_at_level() {
        let grid = FiltGrid { nq: 16, ne: 0, m: 0 };
        let vals = vec![0.25; 16];
        let births = essential_births(grid, &vals, 0.0);
        assert_eq!(births.by_dim[0], vec![0.25]);
        assert_eq!(births.by_dim[1], vec![0.25]);
    }

    #[test]
    fn two_wells_pair_up() {
        // cos(2q) has two minima; only one component survives, the other
        // dies when the saddles connect them. Essential count stays 2.
        let grid = FiltGrid { nq: 128, ne: 0, m: 0 };
        let vals = circle_vals(128, |q| (2.0 * q).cos());
        let births = essential_births(grid, &vals, -2.0);
        assert_eq!(births.by_dim[0].len(), 1);
        assert_eq!(births.by_dim[1].len(), 1);
        assert!((births.by_dim[0][0] + 1.0).abs() < 1e-12);
        assert!((births.by_dim[1][0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn positive_fiber_band() {
        // Values f(q) + e^2 on a band: essentials in degrees 0 and 1 at the
        // min and max of f, nothing in degree 2.
        let nq = 32;
        let ne = 17;
        let grid = FiltGrid { nq, ne, m: 1 };
        let mut vals = Vec::new();
        for i in 0..nq {
            let q = std::f64::consts::TAU * i as f64 / nq as f64;
            for j in 0..ne {
                let e = -2.0 + 4.0 * j as f64 / (ne - 1) as f64;
                vals.push(0.3 * q.sin() + e * e);
            }
        }
        let births = essential_births(grid, &vals, -1.0);
        assert_eq!(births.by_dim[0].len(), 1);
        assert_eq!(births.by_dim[1].len(), 1);
        assert_eq!(births.by_dim[2].len(), 0);
        assert!((births.by_dim[0][0] + 0.3).abs() < 1e-3);
        assert!((births.by_dim[1][0] - 0.3).abs() < 1e-3);
    }

    #[test]
    fn negative_fiber_band_shifts_degree() {
        // Values f(q) - e^2 relative to the deep outer strips: the pair gains
        // a degree, essentials sit in degrees 1 and 2.
        let nq = 32;
        let ne = 33;
        let grid = FiltGrid { nq, ne, m: 1 };
        let r = 3.0;
        let mut vals = Vec::new();
        for i in 0..nq {
            let q = std::f64::consts::TAU * i as f64 / nq as f64;
            for j in 0..ne {
                let e = -r + 2.0 * r * j as f64 / (ne - 1) as f64;
                vals.push(0.5 * q.cos() - e * e);
            }
        }
        let base = -4.0;
        let births = essential_births(grid, &vals, base);
        assert_eq!(births.by_dim[0].len(), 0);
        assert_eq!(births.by_dim[1].len(), 1);
        assert_eq!(births.by_dim[2].len(), 1);
        assert!((births.by_dim[1][0] + 0.5).abs() < 1e-2);
        assert!((births.by_dim[2][0] - 0.5).abs() < 1e-2);
    }

    #[test]
    fn saddle_block_two_axes() {
        // e1^2 - e2^2 with a circle factor: index 1, essentials in degrees
        // 1 and 2 at the critical level 0.
        let nq = 12;
        let ne = 17;
        let grid = FiltGrid { nq, ne, m: 2 };
        let r = 3.0;
        let mut vals = Vec::new();
        for _ in 0..nq {
            for j in 0..ne {
                let e1 = -r + 2.0 * r * j as f64 / (ne - 1) as f64;
                for k in 0..ne {
                    let e2 = -r + 2.0 * r * k as f64 / (ne - 1) as f64;
                    vals.push(e1 * e1 - e2 * e2);
                }
            }
        }
        let births = essential_births(grid, &vals, -4.0);
        assert_eq!(births.by_dim[1].len(), 1);
        assert_eq!(births.by_dim[2].len(), 1);
        assert_eq!(births.by_dim[0].len(), 0);
        assert_eq!(births.by_dim[3].len(), 0);
        assert!(births.by_dim[1][0].abs() < 0.1);
        assert!(births.by_dim[2][0].abs() < 0.1);
    }

    // Reference reducer for cross-checking: dense bit columns, pivot search
    // by scanning every earlier column, essentials read off the final low
    // set. Cubic in the cell count, so only small random grids go through it.
    fn dense_essentials(grid: FiltGrid, vals: &[f64], base: f64) -> Vec<Vec<f64>> {
        let n = grid.cell_count();
        let mut cells: Vec<(f64, u8, usize)> = (0..n)
            .map(|id| {
                let c = grid.decode(id);
                (grid.cell_value(&c, vals), grid.cell_dim(&c), id)
            })
            .filter(|&(v, _, _)| v > base)
            .collect();
        cells.sort_by(|a, b| {
            a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2))
        });
        let m = cells.len();
        let mut rank = vec![usize::MAX; n];
        for (p, &(_, _, id)) in cells.iter().enumerate() {
            rank[id] = p;
        }
        let words = m.div_ceil(64);
        let low = |col: &[u64]| -> Option<usize> {
            for w in (0..words).rev() {
                if col[w] != 0 {
                    return Some(w * 64 + 63 - col[w].leading_zeros() as usize);
                }
            }
            None
        };
        let mut cols: Vec<Vec<u64>> = Vec::with_capacity(m);
        let mut faces = Vec::new();
        for p in 0..m {
            let code = grid.decode(cells[p].2);
            grid.faces(&code, &mut faces);
            let mut col = vec![0u64; words];
            for &f in &faces {
                if rank[f] != usize::MAX {
                    col[rank[f] / 64] ^= 1u64 << (rank[f] % 64);
                }
            }
            'reduce: while let Some(l) = low(&col) {
                for q in 0..p {
                    if low(&cols[q]) == Some(l) {
                        let other = cols[q].clone();
                        for (a, b) in col.iter_mut().zip(&other) {
                            *a ^= b;
                        }
                        continue 'reduce;
                    }
                }
                break;
            }
            cols.push(col);
        }
        let mut is_low = vec![false; m];
        for col in &cols {
            if let Some(l) = low(col) {
                is_low[l] = true;
            }
        }
        let mut by_dim = vec![Vec::new(); grid.m + 2];
        for p in 0..m {
            if low(&cols[p]).is_none() && !is_low[p] {
                by_dim[cells[p].1 as usize].push(cells[p].0);
            }
        }
        for v in &mut by_dim {
            v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        }
        by_dim
    }

    #[test]
    fn random_grids_match_dense_reduction() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(41);
        let grids = [
            FiltGrid { nq: 12, ne: 0, m: 0 },
            FiltGrid { nq: 8, ne: 7, m: 1 },
            FiltGrid { nq: 6, ne: 5, m: 2 },
        ];
        for grid in grids {
            for _ in 0..6 {
                let vals: Vec<f64> =
                    (0..grid.vertex_count()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let engine = essential_births(grid, &vals, -0.5);
                let dense = dense_essentials(grid, &vals, -0.5);
                assert_eq!(engine.by_dim.len(), dense.len());
                for d in 0..dense.len() {
                    assert_eq!(engine.by_dim[d], dense[d], "dim {} on {:?}", d, grid);
                }
            }
        }
    }

    #[test]
    fn shift_moves_births_exactly() {
        let grid = FiltGrid { nq: 48, ne: 0, m: 0 };
        let vals = circle_vals(48, |q| q.cos() + 0.4 * (3.0 * q).sin());
        let shifted: Vec<f64> = vals.iter().map(|v| v + 0.25).collect();
        let a = essential_births(grid, &vals, -3.0);
        let b = essential_births(grid, &shifted, -2.75);
        for d in 0..2 {
            assert_eq!(a.by_dim[d].len(), b.by_dim[d].len());
            for (x, y) in a.by_dim[d].iter().zip(&b.by_dim[d]) {
                assert!((x + 0.25 - y).abs() < 1e-15);
            }
        }
    }
}
