//! Saddle-extremum arcs and extrema segmentation.
//!
//! Gradient paths between saddles and extrema only merge, so following them
//! is root finding in a forest: vertices point to the far end of their paired
//! edge, cubes point across their paired quad. Roots are resolved by pointer
//! doubling.

use arrayvec::ArrayVec;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gradient::{CriticalCells, GradientField};
use crate::grid::{CellId, GridDims};

/// Parent pointers over all cells of dimension 0 (indexed by vertex index) or
/// dimension 3 (indexed by cube index). A root points to itself.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParentForest {
    dim: u8,
    parent: Vec<usize>,
}

impl ParentForest {
    pub fn from_parents(dim: u8, parent: Vec<usize>) -> Result<Self> {
        if let Some(&bad) = parent.iter().find(|&&p| p >= parent.len()) {
            return Err(Error::InvalidCellId(bad));
        }
        Ok(ParentForest { dim, parent })
    }

    pub fn dim(&self) -> u8 {
        self.dim
    }

    pub fn parents(&self) -> &[usize] {
        &self.parent
    }

    pub fn roots(&self) -> Vec<usize> {
        (0..self.parent.len())
            .filter(|&i| self.parent[i] == i)
            .collect()
    }
}

/// Builds the descent forest on vertices (`d = 0`) or the ascent forest on
/// cubes (`d = 3`).
///
/// A cube whose paired quad lies on the domain boundary has no cube to step
/// into and becomes a root even though it is not critical.
pub fn build_forest(g: &GradientField, d: u8) -> Result<ParentForest> {
    let dims = g.dims();
    let parent: Vec<usize> = match d {
        0 => (0..dims.num_vertices())
            .into_par_iter()
            .map(|v| {
                let c = dims.vertex_cell(v);
                match g.paired_cofacet(c) {
                    Some(e) => {
                        let other = dims.facets_of(e).into_iter().find(|&w| w != c).unwrap();
                        dims.cell_vertex(other)
                    }
                    None => v,
                }
            })
            .collect(),
        3 => (0..dims.num_cubes())
            .into_par_iter()
            .map(|i| {
                let c = dims.cube_cell(i);
                g.paired_facet(c)
                    .and_then(|q| dims.cofacets_of(q).into_iter().find(|&w| w != c))
                    .map_or(i, |w| dims.cube_index(w))
            })
            .collect(),
        _ => {
            return Err(Error::Shape(format!(
                "forests exist for dimensions 0 and 3, not {d}"
            )))
        }
    };
    Ok(ParentForest { dim: d, parent })
}

/// Root of every forest node plus the number of doubling rounds used.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RootLabels {
    pub dim: u8,
    pub labels: Vec<usize>,
    pub rounds: usize,
}

/// Pointer doubling: `label <- label[label]` until nothing changes. Each
/// round reads the previous array and writes a fresh one.
pub fn find_roots(forest: &ParentForest) -> Result<RootLabels> {
    let n = forest.parent.len();
    let max_rounds = usize::BITS as usize - n.leading_zeros() as usize + 2;
    let mut cur = forest.parent.clone();
    let mut rounds = 0;
    loop {
        let next: Vec<usize> = cur.par_iter().map(|&p| cur[p]).collect();
        rounds += 1;
        if next == cur {
            break;
        }
        if rounds > max_rounds {
            return Err(Error::Cycle(format!(
                "dimension-{} forest did not converge after {rounds} doubling rounds",
                forest.dim
            )));
        }
        cur = next;
    }
    // a cycle collapses to a fixpoint of the doubled map that is not a root
    if cur.par_iter().any(|&r| forest.parent[r] != r) {
        return Err(Error::Cycle(format!(
            "dimension-{} forest contains a cycle",
            forest.dim
        )));
    }
    Ok(RootLabels {
        dim: forest.dim,
        labels: cur,
        rounds,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SaddleExtremumArc {
    pub saddle: CellId,
    pub extremum: CellId,
    pub multiplicity: u32,
}

/// Arcs from every 1-saddle to the minima below its two endpoints and from
/// every 2-saddle to the maxima above its cofacet cubes. Ascents that leave
/// through the domain boundary produce no arc.
pub fn saddle_extremum_arcs(
    g: &GradientField,
    critical: &CriticalCells,
    labels_0: &RootLabels,
    labels_3: &RootLabels,
) -> Vec<SaddleExtremumArc> {
    let dims = g.dims();
    let merge = |saddle: CellId, mut ends: ArrayVec<CellId, 2>| -> ArrayVec<SaddleExtremumArc, 2> {
        ends.sort_unstable();
        let mut out: ArrayVec<SaddleExtremumArc, 2> = ArrayVec::new();
        for e in ends {
            match out.last_mut() {
                Some(a) if a.extremum == e => a.multiplicity += 1,
                _ => out.push(SaddleExtremumArc {
                    saddle,
                    extremum: e,
                    multiplicity: 1,
                }),
            }
        }
        out
    };

    let mut arcs: Vec<SaddleExtremumArc> = critical
        .saddles1
        .par_iter()
        .flat_map_iter(|&s| {
            let ends = dims
                .facets_of(s)
                .into_iter()
                .map(|v| dims.vertex_cell(labels_0.labels[dims.cell_vertex(v)]))
                .collect();
            merge(s, ends)
        })
        .collect();

    arcs.par_extend(critical.saddles2.par_iter().flat_map_iter(|&s| {
        let ends = dims
            .cofacets_of(s)
            .into_iter()
            .map(|c| dims.cube_cell(labels_3.labels[dims.cube_index(c)]))
            .filter(|&m| g.is_critical(m))
            .collect();
        merge(s, ends)
    }));
    arcs.par_sort_unstable();
    arcs
}

/// Destination extremum of every vertex and every cube.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExtremumSegmentation {
    /// Minimum reached from each vertex, indexed by vertex index.
    pub minima: Vec<CellId>,
    /// Maximum reached from each cube, `None` when the ascent exits through
    /// the boundary.
    pub maxima: Vec<Option<CellId>>,
}

pub fn extremum_segmentation(
    g: &GradientField,
    labels_0: &RootLabels,
    labels_3: &RootLabels,
) -> ExtremumSegmentation {
    let dims: GridDims = g.dims();
    let minima = labels_0
        .labels
        .par_iter()
        .map(|&r| dims.vertex_cell(r))
        .collect();
    let maxima = labels_3
        .labels
        .par_iter()
        .map(|&r| {
            let c = dims.cube_cell(r);
            g.is_critical(c).then_some(c)
        })
        .collect();
    ExtremumSegmentation { minima, maxima }
}
