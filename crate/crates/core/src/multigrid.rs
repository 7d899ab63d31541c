//! Geometric multigrid on the triangular lattice, used as a preconditioner.
//!
//! Coarse nodes are the fine nodes with both indices even (plus any even
//! neighbours needed to interpolate at the boundary); every other fine node
//! takes the average of the two coarse nodes on the lattice line through it.
//! That interpolation is exact for affine fields, so rigid motions pass
//! between levels unchanged. Coarse operators are Galerkin products, the
//! smoother is block Gauss–Seidel run forward before and backward after the
//! coarse correction, and the coarsest level is solved with a dense
//! pseudo-inverse. The resulting V-cycle is symmetric positive semidefinite.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use crate::sparse::{pinv_sym, Block, BlockCsr, Vec2};

/// Stop coarsening once a level has at most this many nodes.
const COARSEST_NODES: usize = 300;
const MAX_LEVELS: usize = 24;
const SWEEPS: usize = 2;

pub trait Preconditioner: Sync {
    /// `z ≈ A⁺ r`.
    fn apply(&self, r: &[Vec2], z: &mut [Vec2]);
}

/// Block Jacobi.
pub struct Jacobi {
    inv: Vec<Block>,
}

impl Jacobi {
    pub fn new(a: &BlockCsr) -> Self {
        Self { inv: (0..a.n()).map(|i| pinv_sym(&a.diagonal(i))).collect() }
    }
}

impl Preconditioner for Jacobi {
    fn apply(&self, r: &[Vec2], z: &mut [Vec2]) {
        for ((zi, ri), d) in z.iter_mut().zip(r).zip(&self.inv) {
            *zi = d * ri;
        }
    }
}

/// Interpolation from a coarse level: each fine node has one parent with
/// weight 1 or two parents with weight ½.
struct Prolongation {
    parents: Vec<[(u32, f64); 2]>,
    n_coarse: usize,
}

impl Prolongation {
    fn parents(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.parents[i].iter().filter(|p| p.1 != 0.0).map(|&(c, w)| (c as usize, w))
    }

    fn restrict(&self, fine: &[Vec2], coarse: &mut [Vec2]) {
        coarse.iter_mut().for_each(|c| *c = Vec2::zeros());
        for (i, f) in fine.iter().enumerate() {
            for (c, w) in self.parents(i) {
                coarse[c] += w * f;
            }
        }
    }

    fn prolong_add(&self, coarse: &[Vec2], fine: &mut [Vec2]) {
        for (i, f) in fine.iter_mut().enumerate() {
            for (c, w) in self.parents(i) {
                *f += w * coarse[c];
            }
        }
    }
}

struct Level {
    a: BlockCsr,
    diag_inv: Vec<Block>,
    /// Interpolation from the next coarser level, if any.
    to_coarse: Option<Prolongation>,
}

pub struct Multigrid {
    levels: Vec<Level>,
    coarse_pinv: DMatrix<f64>,
}

impl Multigrid {
    /// `coords` are the integer index coordinates of the rows of `a`.
    pub fn new(a: BlockCsr, coords: &[(i64, i64)]) -> Self {
        let mut levels = Vec::new();
        let mut a = a;
        let mut coords = coords.to_vec();
        while a.n() > COARSEST_NODES && levels.len() + 1 < MAX_LEVELS {
            let (p, next_coords) = coarsen(&coords);
            if p.n_coarse * 10 > a.n() * 9 {
                break;
            }
            let ac = galerkin(&a, &p);
            let diag_inv = (0..a.n()).map(|i| pinv_sym(&a.diagonal(i))).collect();
            levels.push(Level { a, diag_inv, to_coarse: Some(p) });
            a = ac;
            coords = next_coords;
        }
        let coarse_pinv = dense_pinv(&a.to_dense());
        let diag_inv = (0..a.n()).map(|i| pinv_sym(&a.diagonal(i))).collect();
        levels.push(Level { a, diag_inv, to_coarse: None });
        Self { levels, coarse_pinv }
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn level_sizes(&self) -> Vec<usize> {
        self.levels.iter().map(|l| l.a.n()).collect()
    }

    fn vcycle(&self, k: usize, b: &[Vec2], x: &mut [Vec2]) {
        let level = &self.levels[k];
        let Some(p) = &level.to_coarse else {
            let bv = DVector::from_iterator(2 * b.len(), b.iter().flat_map(|v| [v.x, v.y]));
            let xv = &self.coarse_pinv * bv;
            for (i, xi) in x.iter_mut().enumerate() {
                *xi = Vec2::new(xv[2 * i], xv[2 * i + 1]);
            }
            return;
        };
        for _ in 0..SWEEPS {
            gauss_seidel(&level.a, &level.diag_inv, b, x, false);
        }
        let mut r = vec![Vec2::zeros(); b.len()];
        level.a.mul(x, &mut r);
        r.iter_mut().zip(b).for_each(|(ri, bi)| *ri = bi - *ri);
        let mut rc = vec![Vec2::zeros(); p.n_coarse];
        p.restrict(&r, &mut rc);
        let mut ec = vec![Vec2::zeros(); p.n_coarse];
        self.vcycle(k + 1, &rc, &mut ec);
        p.prolong_add(&ec, x);
        for _ in 0..SWEEPS {
            gauss_seidel(&level.a, &level.diag_inv, b, x, true);
        }
    }
}

impl Preconditioner for Multigrid {
    fn apply(&self, r: &[Vec2], z: &mut [Vec2]) {
        z.iter_mut().for_each(|v| *v = Vec2::zeros());
        self.vcycle(0, r, z);
    }
}

fn gauss_seidel(a: &BlockCsr, diag_inv: &[Block], b: &[Vec2], x: &mut [Vec2], backward: bool) {
    let n = a.n();
    let mut step = |i: usize| {
        let (cols, blocks) = a.row(i);
        let mut s = b[i];
        for (&c, blk) in cols.iter().zip(blocks) {
            if c as usize != i {
                s -= blk * x[c as usize];
            }
        }
        x[i] = diag_inv[i] * s;
    };
    if backward {
        (0..n).rev().for_each(&mut step);
    } else {
        (0..n).for_each(&mut step);
    }
}

fn coarsen(coords: &[(i64, i64)]) -> (Prolongation, Vec<(i64, i64)>) {
    let mut ids: HashMap<(i64, i64), u32> = HashMap::new();
    let mut next = Vec::new();
    let mut id = |c: (i64, i64)| -> u32 {
        *ids.entry(c).or_insert_with(|| {
            next.push((c.0 / 2, c.1 / 2));
            (next.len() - 1) as u32
        })
    };
    let parents = coords
        .iter()
        .map(|&(a, b)| match (a.rem_euclid(2), b.rem_euclid(2)) {
            (0, 0) => [(id((a, b)), 1.0), (0, 0.0)],
            (1, 0) => [(id((a - 1, b)), 0.5), (id((a + 1, b)), 0.5)],
            (0, 1) => [(id((a, b - 1)), 0.5), (id((a, b + 1)), 0.5)],
            _ => [(id((a + 1, b - 1)), 0.5), (id((a - 1, b + 1)), 0.5)],
        })
        .collect();
    let n_coarse = next.len();
    (Prolongation { parents, n_coarse }, next)
}

/// `Pᵀ A P`, row by row with a dense accumulator.
fn galerkin(a: &BlockCsr, p: &Prolongation) -> BlockCsr {
    let nc = p.n_coarse;
    let mut children: Vec<Vec<(u32, f64)>> = vec![Vec::new(); nc];
    for i in 0..a.n() {
        for (c, w) in p.parents(i) {
            children[c].push((i as u32, w));
        }
    }
    let mut acc = vec![Block::zeros(); nc];
    let mut mark = vec![usize::MAX; nc];
    let mut rows = Vec::with_capacity(nc);
    for ci in 0..nc {
        let mut touched: Vec<u32> = Vec::new();
        for &(i, wi) in &children[ci] {
            let (cols, blocks) = a.row(i as usize);
            for (&j, blk) in cols.iter().zip(blocks) {
                for (cj, wj) in p.parents(j as usize) {
                    if mark[cj] != ci {
                        mark[cj] = ci;
                        acc[cj] = Block::zeros();
                        touched.push(cj as u32);
                    }
                    acc[cj] += (wi * wj) * blk;
                }
            }
        }
        touched.sort_unstable();
        rows.push(touched.into_iter().map(|c| (c, acc[c as usize])).collect::<Vec<_>>());
    }
    BlockCsr::from_rows(rows)
}

fn dense_pinv(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    let sym = 0.5 * (m + m.transpose());
    let eig = sym.symmetric_eigen();
    let top = eig.eigenvalues.iter().fold(0.0f64, |a, &l| a.max(l.abs()));
    let mut out = DMatrix::zeros(n, n);
    for k in 0..n {
        let l = eig.eigenvalues[k];
        if l > 1e-11 * top {
            let v = eig.eigenvectors.column(k);
            out += (&v * v.transpose()) / l;
        }
    }
    out
}
