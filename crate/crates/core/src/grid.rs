//! Cubical cell complex over a regular 3D vertex grid.
//!
//! Cells live on the doubled-coordinate lattice: a vertex `(x, y, z)` sits at
//! `(2x, 2y, 2z)` and every lattice point with odd coordinates is the cell
//! spanned by its neighbouring vertices. The dimension of a cell is the number
//! of odd coordinates. Cells are packed into a single x-fastest linear index.

use std::cmp::Ordering;

use arrayvec::ArrayVec;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Linear index of a cell in the doubled-coordinate lattice.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellId(pub usize);

pub type CellList = ArrayVec<CellId, 6>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridDims {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
}

impl GridDims {
    pub fn new(nx: usize, ny: usize, nz: usize) -> Result<Self> {
        if nx < 2 || ny < 2 || nz < 2 {
            return Err(Error::InvalidDims { nx, ny, nz });
        }
        Ok(GridDims { nx, ny, nz })
    }

    pub fn vertex_counts(&self) -> [usize; 3] {
        [self.nx, self.ny, self.nz]
    }

    /// Cell lattice extents `(2nx-1, 2ny-1, 2nz-1)`.
    pub fn extents(&self) -> [usize; 3] {
        [2 * self.nx - 1, 2 * self.ny - 1, 2 * self.nz - 1]
    }

    pub fn num_cells(&self) -> usize {
        let [ex, ey, ez] = self.extents();
        ex * ey * ez
    }

    pub fn num_vertices(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    pub fn num_cubes(&self) -> usize {
        (self.nx - 1) * (self.ny - 1) * (self.nz - 1)
    }

    /// Number of cells of each dimension 0..=3.
    pub fn cell_counts(&self) -> [usize; 4] {
        let (nx, ny, nz) = (self.nx, self.ny, self.nz);
        let (mx, my, mz) = (nx - 1, ny - 1, nz - 1);
        [
            nx * ny * nz,
            mx * ny * nz + nx * my * nz + nx * ny * mz,
            nx * my * mz + mx * ny * mz + mx * my * nz,
            mx * my * mz,
        ]
    }

    pub fn cell(&self, coords: [usize; 3]) -> Result<CellId> {
        let ext = self.extents();
        if coords.iter().zip(ext.iter()).any(|(c, e)| c >= e) {
            return Err(Error::InvalidCell {
                coords,
                extents: ext,
            });
        }
        Ok(self.pack(coords))
    }

    #[inline]
    pub(crate) fn pack(&self, [cx, cy, cz]: [usize; 3]) -> CellId {
        let [ex, ey, _] = self.extents();
        CellId(cx + ex * (cy + ey * cz))
    }

    #[inline]
    pub fn contains(&self, c: CellId) -> bool {
        c.0 < self.num_cells()
    }

    fn check(&self, c: CellId) -> Result<()> {
        if self.contains(c) {
            Ok(())
        } else {
            Err(Error::InvalidCellId(c.0))
        }
    }

    #[inline]
    pub fn coords(&self, c: CellId) -> [usize; 3] {
        let [ex, ey, _] = self.extents();
        let cx = c.0 % ex;
        let rest = c.0 / ex;
        [cx, rest % ey, rest / ey]
    }

    pub fn dimension(&self, c: CellId) -> Result<u8> {
        self.check(c)?;
        Ok(self.dim_of(c))
    }

    #[inline]
    pub(crate) fn dim_of(&self, c: CellId) -> u8 {
        self.coords(c).iter().map(|&k| (k & 1) as u8).sum()
    }

    /// The `2 * dim` facets of `c`: step by one along each odd coordinate.
    pub fn facets(&self, c: CellId) -> Result<CellList> {
        self.check(c)?;
        Ok(self.facets_of(c))
    }

    /// Cofacets of `c`, clipped at the domain boundary.
    pub fn cofacets(&self, c: CellId) -> Result<CellList> {
        self.check(c)?;
        Ok(self.cofacets_of(c))
    }

    pub(crate) fn facets_of(&self, c: CellId) -> CellList {
        let coords = self.coords(c);
        let mut out = CellList::new();
        for axis in 0..3 {
            if coords[axis] & 1 == 1 {
                let mut lo = coords;
                lo[axis] -= 1;
                out.push(self.pack(lo));
                let mut hi = coords;
                hi[axis] += 1;
                out.push(self.pack(hi));
            }
        }
        out
    }

    pub(crate) fn cofacets_of(&self, c: CellId) -> CellList {
        let coords = self.coords(c);
        let ext = self.extents();
        let mut out = CellList::new();
        for axis in 0..3 {
            if coords[axis] & 1 == 0 {
                if coords[axis] > 0 {
                    let mut lo = coords;
                    lo[axis] -= 1;
                    out.push(self.pack(lo));
                }
                if coords[axis] + 1 < ext[axis] {
                    let mut hi = coords;
                    hi[axis] += 1;
                    out.push(self.pack(hi));
                }
            }
        }
        out
    }

    /// Neighbouring lattice point one step along `axis`, if inside the lattice.
    #[inline]
    pub fn step(&self, c: CellId, axis: usize, positive: bool) -> Option<CellId> {
        let mut coords = self.coords(c);
        if positive {
            coords[axis] += 1;
            if coords[axis] >= self.extents()[axis] {
                return None;
            }
        } else {
            coords[axis] = coords[axis].checked_sub(1)?;
        }
        Some(self.pack(coords))
    }

    /// True when the cell lies in the boundary surface of the box.
    pub fn on_boundary(&self, c: CellId) -> bool {
        let coords = self.coords(c);
        let ext = self.extents();
        (0..3).any(|a| coords[a] == 0 || coords[a] + 1 == ext[a])
    }

    #[inline]
    pub fn vertex_index(&self, [x, y, z]: [usize; 3]) -> usize {
        x + self.nx * (y + self.ny * z)
    }

    #[inline]
    pub fn vertex_position(&self, v: usize) -> [usize; 3] {
        [
            v % self.nx,
            (v / self.nx) % self.ny,
            v / (self.nx * self.ny),
        ]
    }

    #[inline]
    pub fn vertex_cell(&self, v: usize) -> CellId {
        let [x, y, z] = self.vertex_position(v);
        self.pack([2 * x, 2 * y, 2 * z])
    }

    /// Vertex index of a 0-cell.
    #[inline]
    pub fn cell_vertex(&self, c: CellId) -> usize {
        let [cx, cy, cz] = self.coords(c);
        self.vertex_index([cx / 2, cy / 2, cz / 2])
    }

    #[inline]
    pub fn cube_index(&self, c: CellId) -> usize {
        let [cx, cy, cz] = self.coords(c);
        cx / 2 + (self.nx - 1) * (cy / 2 + (self.ny - 1) * (cz / 2))
    }

    #[inline]
    pub fn cube_cell(&self, i: usize) -> CellId {
        let (mx, my) = (self.nx - 1, self.ny - 1);
        let (x, y, z) = (i % mx, (i / mx) % my, i / (mx * my));
        self.pack([2 * x + 1, 2 * y + 1, 2 * z + 1])
    }

    /// Vertex indices of a cell (1, 2, 4 or 8 of them).
    pub fn vertices(&self, c: CellId) -> ArrayVec<usize, 8> {
        let coords = self.coords(c);
        let mut out = ArrayVec::new();
        let choices = |k: usize| -> ArrayVec<usize, 2> {
            let mut v = ArrayVec::new();
            if k & 1 == 1 {
                v.push(k / 2);
                v.push(k / 2 + 1);
            } else {
                v.push(k / 2);
            }
            v
        };
        for &z in &choices(coords[2]) {
            for &y in &choices(coords[1]) {
                for &x in &choices(coords[0]) {
                    out.push(self.vertex_index([x, y, z]));
                }
            }
        }
        out
    }

    pub fn cells(&self) -> impl Iterator<Item = CellId> {
        (0..self.num_cells()).map(CellId)
    }
}

/// Vertex-sampled scalar field, widened to `f64`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    dims: GridDims,
    values: Vec<f64>,
}

/// A cell's vertices sorted by descending vertex order. Comparing two keys
/// lexicographically (a prefix sorts first) gives the total cell order.
pub type CellOrderKey = ArrayVec<usize, 8>;

impl ScalarField {
    pub fn new(dims: GridDims, values: Vec<f64>) -> Result<Self> {
        if values.len() != dims.num_vertices() {
            return Err(Error::ValueCount {
                expected: dims.num_vertices(),
                actual: values.len(),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(ScalarField { dims, values })
    }

    pub fn from_fn(dims: GridDims, f: impl Fn(usize, usize, usize) -> f64) -> Result<Self> {
        let values = (0..dims.num_vertices())
            .map(|v| {
                let [x, y, z] = dims.vertex_position(v);
                f(x, y, z)
            })
            .collect();
        Self::new(dims, values)
    }

    pub fn dims(&self) -> GridDims {
        self.dims
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Vertex order: by value, ties broken by linear vertex index.
    #[inline]
    pub fn compare_vertices(&self, a: usize, b: usize) -> Ordering {
        self.values[a]
            .partial_cmp(&self.values[b])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    }

    pub fn order_key(&self, c: CellId) -> Result<CellOrderKey> {
        self.dims.check(c)?;
        let mut key = self.dims.vertices(c);
        key.sort_unstable_by(|&a, &b| self.compare_vertices(b, a));
        Ok(key)
    }

    pub fn compare_cells(&self, a: CellId, b: CellId) -> Result<Ordering> {
        let ka = self.order_key(a)?;
        let kb = self.order_key(b)?;
        for (&va, &vb) in ka.iter().zip(kb.iter()) {
            match self.compare_vertices(va, vb) {
                Ordering::Equal => continue,
                o => return Ok(o),
            }
        }
        Ok(ka.len().cmp(&kb.len()))
    }

    /// Scalar value attached to a cell: the value of its highest vertex.
    pub fn cell_value(&self, c: CellId) -> f64 {
        self.dims
            .vertices(c)
            .into_iter()
            .map(|v| self.values[v])
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Position of each vertex in the total vertex order. Comparing ranks is
    /// equivalent to [`ScalarField::compare_vertices`].
    pub fn vertex_ranks(&self) -> Vec<u32> {
        let n = self.values.len();
        assert!(
            n <= u32::MAX as usize,
            "grid too large for 32-bit vertex ranks"
        );
        let mut order: Vec<u32> = (0..n as u32).collect();
        order.par_sort_unstable_by(|&a, &b| self.compare_vertices(a as usize, b as usize));
        let mut ranks = vec![0u32; n];
        for (r, &v) in order.iter().enumerate() {
            ranks[v as usize] = r as u32;
        }
        ranks
    }
}
