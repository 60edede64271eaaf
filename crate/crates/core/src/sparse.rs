//! Compressed sparse column matrices, a sparse Cholesky factorization, and a
//! fill-reducing ordering.
//!
//! The factorization is the up-looking variant: the elimination tree of the
//! upper triangle gives, for each row, the set of earlier columns it touches
//! (the row's reach), and one sparse triangular solve per row produces the
//! final entries directly, so the factor is built once with no dynamic
//! pattern merging. The stencil couples each triangle with its neighbors'
//! neighbors, which makes geometric separators twice as thick as the mesh
//! cut; approximate minimum degree handles that clique structure with far
//! less fill, so the ordering delegates to it.

use std::io::{self, Write};

use crate::Error;

const NONE: usize = usize::MAX;

/// Square sparse matrix in compressed sparse column form with sorted,
/// duplicate-free row indices per column.
#[derive(Debug, Clone)]
pub struct CscMatrix {
    pub n: usize,
    pub col_ptr: Vec<usize>,
    pub row_idx: Vec<u32>,
    pub values: Vec<f64>,
}

impl CscMatrix {
    /// Builds an `n` by `n` matrix from `(row, col, value)` triplets, summing
    /// duplicates. The input order does not matter.
    pub fn from_triplets(n: usize, mut triplets: Vec<(u32, u32, f64)>) -> CscMatrix {
        triplets.sort_unstable_by_key(|&(r, c, _)| ((c as u64) << 32) | r as u64);
        let mut col_ptr = vec![0usize; n + 1];
        let mut row_idx: Vec<u32> = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last = None;
        for (r, c, v) in triplets {
            debug_assert!((r as usize) < n && (c as usize) < n);
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                row_idx.push(r);
                values.push(v);
                col_ptr[c as usize + 1] += 1;
                last = Some((r, c));
            }
        }
        for c in 0..n {
            col_ptr[c + 1] += col_ptr[c];
        }
        CscMatrix { n, col_ptr, row_idx, values }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        y.fill(0.0);
        for j in 0..self.n {
            let xj = x[j];
            if xj == 0.0 {
                continue;
            }
            for p in self.col_ptr[j]..self.col_ptr[j + 1] {
                y[self.row_idx[p] as usize] += self.values[p] * xj;
            }
        }
    }

    /// `x^T A x`.
    pub fn quadratic(&self, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for j in 0..self.n {
            let xj = x[j];
            if xj == 0.0 {
                continue;
            }
            for p in self.col_ptr[j]..self.col_ptr[j + 1] {
                acc += x[self.row_idx[p] as usize] * self.values[p] * xj;
            }
        }
        acc
    }

    /// Largest deviation from symmetry, `max |A_ij - A_ji|`, treating missing
    /// entries as zero.
    pub fn symmetry_gap(&self) -> f64 {
        // Entries in CSC order are sorted by (col, row); the same entries
        // re-sorted by (row, col) walk the transpose in the same key order.
        let mut transposed: Vec<(u32, u32, f64)> = Vec::with_capacity(self.nnz());
        for j in 0..self.n {
            for p in self.col_ptr[j]..self.col_ptr[j + 1] {
                transposed.push((self.row_idx[p], j as u32, self.values[p]));
            }
        }
        transposed.sort_unstable_by_key(|&(r, c, _)| ((r as u64) << 32) | c as u64);
        let mut gap = 0.0_f64;
        let mut q = 0;
        for j in 0..self.n {
            for p in self.col_ptr[j]..self.col_ptr[j + 1] {
                let key = ((j as u64) << 32) | self.row_idx[p] as u64;
                while q < transposed.len() {
                    let (r, c, v) = transposed[q];
                    let tkey = ((r as u64) << 32) | c as u64;
                    if tkey < key {
                        gap = gap.max(v.abs());
                        q += 1;
                    } else {
                        break;
                    }
                }
                if q < transposed.len() {
                    let (r, c, v) = transposed[q];
                    if ((r as u64) << 32) | c as u64 == key {
                        gap = gap.max((self.values[p] - v).abs());
                        q += 1;
                        continue;
                    }
                }
                gap = gap.max(self.values[p].abs());
            }
        }
        while q < transposed.len() {
            gap = gap.max(transposed[q].2.abs());
            q += 1;
        }
        gap
    }

    /// Writes the matrix in MatrixMarket coordinate form.
    pub fn write_matrix_market<W: Write>(&self, w: &mut W) -> io::Result<()> {
        writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
        writeln!(w, "{} {} {}", self.n, self.n, self.nnz())?;
        for j in 0..self.n {
            for p in self.col_ptr[j]..self.col_ptr[j + 1] {
                writeln!(w, "{} {} {:e}", self.row_idx[p] as usize + 1, j + 1, self.values[p])?;
            }
        }
        Ok(())
    }
}

/// Lower-triangular Cholesky factor, columns sorted with the diagonal first.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    n: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

/// Parent pointers of the elimination tree of the upper triangle.
fn etree(a: &CscMatrix) -> Vec<usize> {
    let mut parent = vec![NONE; a.n];
    let mut ancestor = vec![NONE; a.n];
    for k in 0..a.n {
        for p in a.col_ptr[k]..a.col_ptr[k + 1] {
            let mut i = a.row_idx[p] as usize;
            if i >= k {
                continue;
            }
            // Walk towards the root with path compression.
            loop {
                let next = ancestor[i];
                ancestor[i] = k;
                if next == NONE {
                    parent[i] = k;
                    break;
                }
                if next == k {
                    break;
                }
                i = next;
            }
        }
    }
    parent
}

/// Columns of L with an entry in row `k`, collected into `pattern` in
/// ascending order. Ascending column index is a topological order of the
/// elimination tree because every parent has a larger index than its child.
fn row_reach(
    a: &CscMatrix,
    k: usize,
    parent: &[usize],
    stamp: &mut [usize],
    pattern: &mut Vec<usize>,
) {
    pattern.clear();
    stamp[k] = k;
    for p in a.col_ptr[k]..a.col_ptr[k + 1] {
        let mut i = a.row_idx[p] as usize;
        if i >= k {
            continue;
        }
        while stamp[i] != k {
            pattern.push(i);
            stamp[i] = k;
            if parent[i] == NONE {
                break;
            }
            i = parent[i];
        }
    }
    pattern.sort_unstable();
}

/// Sparse Cholesky factorization `A = L L^T` reading the upper triangle of a
/// symmetric positive definite matrix. Fails on the first non-positive pivot.
pub fn cholesky(a: &CscMatrix) -> Result<CholeskyFactor, Error> {
    let n = a.n;
    let parent = etree(a);
    let mut stamp = vec![NONE; n];
    let mut pattern: Vec<usize> = Vec::new();

    // Symbolic pass: exact column counts of L.
    let mut count = vec![1usize; n];
    for k in 0..n {
        row_reach(a, k, &parent, &mut stamp, &mut pattern);
        for &s in &pattern {
            count[s] += 1;
        }
    }
    let mut col_ptr = vec![0usize; n + 1];
    for k in 0..n {
        col_ptr[k + 1] = col_ptr[k] + count[k];
    }
    let nnz = col_ptr[n];
    let mut row_idx = vec![0usize; nnz];
    let mut values = vec![0.0; nnz];
    let mut next = col_ptr[..n].to_vec();

    // Numeric pass: one sparse triangular solve per row of L.
    stamp.fill(NONE);
    let mut x = vec![0.0; n];
    for k in 0..n {
        row_reach(a, k, &parent, &mut stamp, &mut pattern);
        let mut d = 0.0;
        for p in a.col_ptr[k]..a.col_ptr[k + 1] {
            let i = a.row_idx[p] as usize;
            if i < k {
                x[i] = a.values[p];
            } else if i == k {
                d = a.values[p];
            }
        }
        for &s in &pattern {
            // The first stored entry of a finished column is its pivot.
            let lks = x[s] / values[col_ptr[s]];
            x[s] = 0.0;
            for p in col_ptr[s] + 1..next[s] {
                x[row_idx[p]] -= values[p] * lks;
            }
            d -= lks * lks;
            row_idx[next[s]] = k;
            values[next[s]] = lks;
            next[s] += 1;
        }
        if !(d > 0.0) {
            return Err(Error::NotPositiveDefinite { col: k, pivot: d });
        }
        row_idx[next[k]] = k;
        values[next[k]] = d.sqrt();
        next[k] += 1;
    }
    Ok(CholeskyFactor { n, col_ptr, row_idx, values })
}

impl CholeskyFactor {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Solves `A x = b` by the forward and backward substitutions.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let mut x = b.to_vec();
        for k in 0..self.n {
            let xk = x[k] / self.values[self.col_ptr[k]];
            x[k] = xk;
            for p in self.col_ptr[k] + 1..self.col_ptr[k + 1] {
                x[self.row_idx[p]] -= self.values[p] * xk;
            }
        }
        for k in (0..self.n).rev() {
            let mut s = x[k];
            for p in self.col_ptr[k] + 1..self.col_ptr[k + 1] {
                s -= self.values[p] * x[self.row_idx[p]];
            }
            x[k] = s / self.values[self.col_ptr[k]];
        }
        x
    }
}

/// Fill-reducing elimination order via approximate minimum degree on the
/// adjacency pattern. Each list must hold the node's neighbors without the
/// node itself; symmetry is the caller's responsibility.
pub fn min_degree_order(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let mut col_ptr = Vec::with_capacity(n + 1);
    col_ptr.push(0usize);
    let mut row_idx = Vec::new();
    for list in adj {
        row_idx.extend_from_slice(list);
        col_ptr.push(row_idx.len());
    }
    if row_idx.len() < n {
        // Fewer entries than nodes means a forest of near-isolated pieces;
        // any order is fill-free enough, and amd's counters underflow here.
        return (0..n).collect();
    }
    let (perm, _inv, _info) = amd::order(n, &col_ptr, &row_idx, &amd::Control::default())
        .expect("adjacency pattern is square and in-bounds");
    perm
}
