//! Sparse nonnegative count matrices and iterated-multiplication path counting.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::CellId;
use crate::saddle_graph::{DagMinor, MinorEdge};

/// Compressed sparse rows of `u64` counts. Stored entries are always nonzero
/// and columns are strictly increasing within a row.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparseCountMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    vals: Vec<u64>,
}

/// Position of an entry whose count overflowed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct OverflowAt {
    row: usize,
    col: usize,
}

impl SparseCountMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        SparseCountMatrix {
            rows,
            cols,
            row_ptr: vec![0; rows + 1],
            col_idx: Vec::new(),
            vals: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        SparseCountMatrix {
            rows: n,
            cols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            vals: vec![1; n],
        }
    }

    /// Builds a matrix from `(row, col, count)` triplets, summing duplicates
    /// and dropping zeros.
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, u64)>,
    ) -> Result<Self> {
        let mut t: Vec<(usize, usize, u64)> = triplets.into_iter().collect();
        if let Some(&(r, c, _)) = t.iter().find(|&&(r, c, _)| r >= rows || c >= cols) {
            return Err(Error::Shape(format!(
                "entry ({r}, {c}) outside a {rows}x{cols} matrix"
            )));
        }
        t.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut row_rows: Vec<Vec<(usize, u64)>> = vec![Vec::new(); rows];
        for (r, c, v) in t {
            let row = &mut row_rows[r];
            match row.last_mut() {
                Some((lc, lv)) if *lc == c => {
                    *lv = lv
                        .checked_add(v)
                        .ok_or(Error::Overflow(format!("entry ({r}, {c})")))?
                }
                _ => row.push((c, v)),
            }
        }
        Ok(Self::from_rows(rows, cols, row_rows))
    }

    pub fn from_dense(dense: &[Vec<u64>], cols: usize) -> Self {
        let rows = dense
            .iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .filter(|(_, &v)| v != 0)
                    .map(|(c, &v)| (c, v))
                    .collect()
            })
            .collect();
        Self::from_rows(dense.len(), cols, rows)
    }

    fn from_rows(rows: usize, cols: usize, row_rows: Vec<Vec<(usize, u64)>>) -> Self {
        let mut row_ptr = Vec::with_capacity(rows + 1);
        row_ptr.push(0);
        let nnz: usize = row_rows
            .iter()
            .map(|r| r.iter().filter(|e| e.1 != 0).count())
            .sum();
        let mut col_idx = Vec::with_capacity(nnz);
        let mut vals = Vec::with_capacity(nnz);
        for row in row_rows {
            for (c, v) in row {
                if v != 0 {
                    col_idx.push(c);
                    vals.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        SparseCountMatrix {
            rows,
            cols,
            row_ptr,
            col_idx,
            vals,
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<u64>> {
        let mut out = vec![vec![0; self.cols]; self.rows];
        for (r, c, v) in self.iter() {
            out[r][c] = v;
        }
        out
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn is_zero(&self) -> bool {
        self.vals.is_empty()
    }

    pub fn row(&self, r: usize) -> (&[usize], &[u64]) {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        (&self.col_idx[span.clone()], &self.vals[span])
    }

    pub fn get(&self, r: usize, c: usize) -> u64 {
        let (cols, vals) = self.row(r);
        cols.binary_search(&c).map_or(0, |i| vals[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, u64)> + '_ {
        (0..self.rows).flat_map(move |r| {
            let (cols, vals) = self.row(r);
            cols.iter().zip(vals).map(move |(&c, &v)| (r, c, v))
        })
    }

    /// Reduces every count mod 2, dropping even entries.
    pub fn parity(&self) -> Self {
        let rows = (0..self.rows)
            .map(|r| {
                let (cols, vals) = self.row(r);
                cols.iter().zip(vals).map(|(&c, &v)| (c, v & 1)).collect()
            })
            .collect();
        Self::from_rows(self.rows, self.cols, rows)
    }

    /// Checks the canonical-form invariants.
    pub fn is_canonical(&self) -> bool {
        self.row_ptr.len() == self.rows + 1
            && self.vals.iter().all(|&v| v != 0)
            && (0..self.rows).all(|r| {
                let (cols, _) = self.row(r);
                cols.windows(2).all(|w| w[0] < w[1]) && cols.iter().all(|&c| c < self.cols)
            })
    }

    fn multiply_checked(&self, other: &Self) -> std::result::Result<Self, OverflowAt> {
        let rows: Vec<Vec<(usize, u64)>> = (0..self.rows)
            .into_par_iter()
            .map(|r| {
                let (xc, xv) = self.row(r);
                let mut acc: Vec<(usize, u64)> = Vec::new();
                for (&k, &a) in xc.iter().zip(xv) {
                    let (yc, yv) = other.row(k);
                    for (&c, &b) in yc.iter().zip(yv) {
                        let p = a.checked_mul(b).ok_or(OverflowAt { row: r, col: c })?;
                        acc.push((c, p));
                    }
                }
                acc.sort_unstable_by_key(|e| e.0);
                let mut merged: Vec<(usize, u64)> = Vec::with_capacity(acc.len());
                for (c, v) in acc {
                    match merged.last_mut() {
                        Some((lc, lv)) if *lc == c => {
                            *lv = lv.checked_add(v).ok_or(OverflowAt { row: r, col: c })?
                        }
                        _ => merged.push((c, v)),
                    }
                }
                Ok(merged)
            })
            .collect::<std::result::Result<_, _>>()?;
        Ok(Self::from_rows(self.rows, other.cols, rows))
    }

    fn add_checked(&self, other: &Self) -> std::result::Result<Self, OverflowAt> {
        let rows: Vec<Vec<(usize, u64)>> = (0..self.rows)
            .into_par_iter()
            .map(|r| {
                let (ac, av) = self.row(r);
                let (bc, bv) = other.row(r);
                let mut out = Vec::with_capacity(ac.len() + bc.len());
                let (mut i, mut j) = (0, 0);
                while i < ac.len() || j < bc.len() {
                    if j == bc.len() || (i < ac.len() && ac[i] < bc[j]) {
                        out.push((ac[i], av[i]));
                        i += 1;
                    } else if i == ac.len() || bc[j] < ac[i] {
                        out.push((bc[j], bv[j]));
                        j += 1;
                    } else {
                        let s = av[i]
                            .checked_add(bv[j])
                            .ok_or(OverflowAt { row: r, col: ac[i] })?;
                        out.push((ac[i], s));
                        i += 1;
                        j += 1;
                    }
                }
                Ok(out)
            })
            .collect::<std::result::Result<_, _>>()?;
        Ok(Self::from_rows(self.rows, self.cols, rows))
    }
}

fn overflow(what: &str, at: OverflowAt) -> Error {
    Error::Overflow(format!(
        "{what} overflowed 64 bits at entry ({}, {})",
        at.row, at.col
    ))
}

/// Integer matrix product `x * y` in sparse form, parallel over output rows.
pub fn sp_multiply(x: &SparseCountMatrix, y: &SparseCountMatrix) -> Result<SparseCountMatrix> {
    if x.cols != y.rows {
        return Err(Error::Shape(format!(
            "cannot multiply {}x{} by {}x{}",
            x.rows, x.cols, y.rows, y.cols
        )));
    }
    x.multiply_checked(y).map_err(|at| overflow("product", at))
}

/// Entrywise sum.
pub fn sp_add(x: &SparseCountMatrix, y: &SparseCountMatrix) -> Result<SparseCountMatrix> {
    if x.rows != y.rows || x.cols != y.cols {
        return Err(Error::Shape(format!(
            "cannot add {}x{} and {}x{}",
            x.rows, x.cols, y.rows, y.cols
        )));
    }
    x.add_checked(y).map_err(|at| overflow("sum", at))
}

/// Matrix of a typed minor edge list; `rows` and `cols` are the sorted node
/// lists that define the dense re-indexing. Duplicate pairs are summed.
pub fn from_edges(
    edges: &[MinorEdge],
    rows: &[CellId],
    cols: &[CellId],
) -> Result<SparseCountMatrix> {
    let locate = |ids: &[CellId], c: CellId| {
        ids.binary_search(&c).map_err(|_| {
            Error::Shape(format!(
                "minor edge endpoint {} is not an indexed node",
                c.0
            ))
        })
    };
    let triplets = edges
        .iter()
        .map(|e| Ok((locate(rows, e.src)?, locate(cols, e.dst)?, e.multiplicity)))
        .collect::<Result<Vec<_>>>()?;
    SparseCountMatrix::from_triplets(rows.len(), cols.len(), triplets)
}

/// All matrices of the path-counting iteration, kept for inspection.
#[derive(Clone, Debug)]
pub struct PathCountingState {
    pub one_saddles: Vec<CellId>,
    pub junctions: Vec<CellId>,
    pub two_saddles: Vec<CellId>,
    /// Current frontier, 1-saddles x junctions.
    pub a: SparseCountMatrix,
    /// Junction to junction edges.
    pub b: SparseCountMatrix,
    /// Junction to 2-saddle edges.
    pub b_star: SparseCountMatrix,
    /// Direct 1-saddle to 2-saddle edges.
    pub d: SparseCountMatrix,
    /// Accumulated 1-saddle to junction paths.
    pub a_star: SparseCountMatrix,
    /// Last iteration product.
    pub c: SparseCountMatrix,
    /// 1-saddle to 2-saddle paths through at least one junction.
    pub d_star: SparseCountMatrix,
}

impl PathCountingState {
    pub fn new(minor: &DagMinor) -> Result<Self> {
        let (s1, j, s2) = (&minor.one_saddles, &minor.junctions, &minor.two_saddles);
        Ok(PathCountingState {
            a: from_edges(&minor.saddle_junction, s1, j)?,
            b: from_edges(&minor.junction_junction, j, j)?,
            b_star: from_edges(&minor.junction_saddle, j, s2)?,
            d: from_edges(&minor.saddle_saddle, s1, s2)?,
            a_star: SparseCountMatrix::zeros(s1.len(), j.len()),
            c: SparseCountMatrix::zeros(s1.len(), j.len()),
            d_star: SparseCountMatrix::zeros(s1.len(), s2.len()),
            one_saddles: s1.clone(),
            junctions: j.clone(),
            two_saddles: s2.clone(),
        })
    }

    fn cell_overflow(&self, what: &str, at: OverflowAt, cols: &[CellId]) -> Error {
        Error::overflow_at(what, self.one_saddles[at.row], cols[at.col])
    }
}

/// Number of gradient paths between every connected 1-saddle / 2-saddle pair.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PathCounts {
    pub one_saddles: Vec<CellId>,
    pub two_saddles: Vec<CellId>,
    pub counts: SparseCountMatrix,
    /// Frontier multiplications performed.
    pub iterations: usize,
}

impl PathCounts {
    pub fn pairs(&self) -> impl Iterator<Item = (CellId, CellId, u64)> + '_ {
        self.counts
            .iter()
            .map(|(r, c, v)| (self.one_saddles[r], self.two_saddles[c], v))
    }

    pub fn to_map(&self) -> BTreeMap<(CellId, CellId), u64> {
        self.pairs().map(|(a, b, v)| ((a, b), v)).collect()
    }
}

/// Frontier iteration over the minor:
/// `C = A*B; A* += A; A = C` until `A` is empty, then `A* * B* + D`.
pub fn count_paths(minor: &DagMinor) -> Result<PathCounts> {
    let mut st = PathCountingState::new(minor)?;
    let limit = st.junctions.len() + 1;
    let mut iterations = 0;
    while !st.a.is_zero() {
        if iterations == limit {
            return Err(Error::Cycle(format!(
                "junction frontier still nonempty after {limit} iterations; the minor is not acyclic"
            )));
        }
        st.c =
            st.a.multiply_checked(&st.b)
                .map_err(|at| st.cell_overflow("path count", at, &st.junctions))?;
        st.a_star = st
            .a_star
            .add_checked(&st.a)
            .map_err(|at| st.cell_overflow("path count", at, &st.junctions))?;
        st.a = std::mem::replace(&mut st.c, SparseCountMatrix::zeros(0, 0));
        iterations += 1;
    }
    st.d_star = st
        .a_star
        .multiply_checked(&st.b_star)
        .map_err(|at| st.cell_overflow("path count", at, &st.two_saddles))?;
    let counts = st
        .d_star
        .add_checked(&st.d)
        .map_err(|at| st.cell_overflow("path count", at, &st.two_saddles))?;
    Ok(PathCounts {
        one_saddles: st.one_saddles,
        two_saddles: st.two_saddles,
        counts,
        iterations,
    })
}
