//! Sparse symmetric operators on node-displacement space, stored as 2×2
//! blocks per node pair, and the few vector kernels the solvers need.
//!
//! Reductions use fixed-size chunks summed in order, so results do not
//! depend on the number of worker threads.

use nalgebra::{Matrix2, Vector2};
use rayon::prelude::*;

pub type Block = Matrix2<f64>;
pub type Vec2 = Vector2<f64>;

const CHUNK: usize = 4096;

#[derive(Clone, Debug, Default)]
pub struct BlockCsr {
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    blocks: Vec<Block>,
}

impl BlockCsr {
    /// Rows must list their columns in increasing order.
    pub fn from_rows(rows: impl IntoIterator<Item = Vec<(u32, Block)>>) -> Self {
        let mut m = Self { row_ptr: vec![0], ..Self::default() };
        for row in rows {
            debug_assert!(row.windows(2).all(|w| w[0].0 < w[1].0));
            for (c, b) in row {
                m.cols.push(c);
                m.blocks.push(b);
            }
            m.row_ptr.push(m.cols.len());
        }
        m
    }

    /// Number of block rows (nodes).
    pub fn n(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn nnz_blocks(&self) -> usize {
        self.cols.len()
    }

    pub fn row(&self, i: usize) -> (&[u32], &[Block]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.cols[r.clone()], &self.blocks[r])
    }

    pub fn diagonal(&self, i: usize) -> Block {
        let (cols, blocks) = self.row(i);
        match cols.binary_search(&(i as u32)) {
            Ok(k) => blocks[k],
            Err(_) => Block::zeros(),
        }
    }

    pub fn row_times(&self, i: usize, x: &[Vec2]) -> Vec2 {
        let (cols, blocks) = self.row(i);
        cols.iter().zip(blocks).fold(Vec2::zeros(), |acc, (&c, b)| acc + b * x[c as usize])
    }

    /// `y = A x`.
    pub fn mul(&self, x: &[Vec2], y: &mut [Vec2]) {
        y.par_chunks_mut(CHUNK).enumerate().for_each(|(c, chunk)| {
            let start = c * CHUNK;
            for (k, yi) in chunk.iter_mut().enumerate() {
                *yi = self.row_times(start + k, x);
            }
        });
    }

    /// Dense copy, for small coarse problems and tests.
    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let n = self.n();
        let mut d = nalgebra::DMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            let (cols, blocks) = self.row(i);
            for (&c, b) in cols.iter().zip(blocks) {
                let c = c as usize;
                d.fixed_view_mut::<2, 2>(2 * i, 2 * c).copy_from(b);
            }
        }
        d
    }
}

pub fn dot(x: &[Vec2], y: &[Vec2]) -> f64 {
    let partial: Vec<f64> = x
        .par_chunks(CHUNK)
        .zip(y.par_chunks(CHUNK))
        .map(|(a, b)| a.iter().zip(b).map(|(u, v)| u.dot(v)).sum())
        .collect();
    partial.iter().fold(0.0, |s, x| s + x)
}

pub fn norm(x: &[Vec2]) -> f64 {
    dot(x, x).sqrt()
}

/// `y += α x`.
pub fn axpy(alpha: f64, x: &[Vec2], y: &mut [Vec2]) {
    y.par_iter_mut().zip(x.par_iter()).for_each(|(yi, xi)| *yi += alpha * xi);
}

/// Moore–Penrose inverse of a symmetric 2×2 block; directions with
/// eigenvalue below `1e-12 · trace` are treated as null.
pub fn pinv_sym(m: &Block) -> Block {
    let tr = m.trace();
    if !(tr > 0.0) {
        return Block::zeros();
    }
    let eig = m.symmetric_eigen();
    let mut out = Block::zeros();
    for k in 0..2 {
        let l = eig.eigenvalues[k];
        if l > 1e-12 * tr {
            let v = eig.eigenvectors.column(k);
            out += (v * v.transpose()) / l;
        }
    }
    out
}
