//! Pipeline orchestration and the Morse-Smale complex data model.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::extrema::{
    build_forest, extremum_segmentation, find_roots, saddle_extremum_arcs, RootLabels,
};
use crate::gradient::{assign_gradient, extract_critical_cells, CriticalCells, GradientField};
use crate::grid::{CellId, GridDims, ScalarField};
use crate::path_matrix::{count_paths, sp_multiply, PathCounts, SparseCountMatrix};
use crate::saddle_graph::{build_minor, mark_reachable, GradientDag, MarkedSubgraph};
use crate::volume::Dtype;

/// Identifies the vertex order and pairing rule used to build the gradient.
pub const TIE_BREAK_RULE: &str = "value-then-vertex-index/lower-star/boundary-strata/1";

/// Version of the JSON document layout.
pub const FORMAT_VERSION: u32 = 1;

/// Label written to segmentation volumes for cells with no extremum.
pub const NO_LABEL: u32 = u32::MAX;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    /// SHA-256 of the scalar values as little-endian `f64`, hex encoded.
    pub input_sha256: String,
    pub tie_break: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Header {
    pub format_version: u32,
    pub dims: [usize; 3],
    pub dtype: Dtype,
    pub provenance: Provenance,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub id: u32,
    pub cell: CellId,
    pub index: u8,
    /// Doubled lattice coordinates of the cell.
    pub position: [usize; 3],
    /// Cell midpoint in vertex units.
    pub midpoint: [f64; 3],
    /// Value of the highest vertex of the cell.
    pub value: f64,
}

/// Connection between critical points of consecutive index; `src` has the
/// lower index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Arc {
    pub src: u32,
    pub dst: u32,
    pub multiplicity: u64,
}

/// Critical point ids per vertex (minima) and per cube (maxima).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Segmentation {
    pub minima: Vec<u32>,
    pub maxima: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MsComplex {
    pub header: Header,
    pub critical_points: Vec<CriticalPoint>,
    pub arcs: Vec<Arc>,
    #[serde(skip)]
    pub segmentation: Option<Segmentation>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ComputeOptions {
    pub segmentation: bool,
    /// Element type recorded in the header.
    pub dtype: Dtype,
}

impl Default for ComputeOptions {
    fn default() -> Self {
        ComputeOptions {
            segmentation: false,
            dtype: Dtype::F64,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct StageTimings {
    pub gradient: Duration,
    pub critical: Duration,
    pub extrema: Duration,
    pub reachability: Duration,
    pub counting: Duration,
    pub assembly: Duration,
}

impl StageTimings {
    pub fn stages(&self) -> [(&'static str, Duration); 6] {
        [
            ("gradient", self.gradient),
            ("critical", self.critical),
            ("extrema", self.extrema),
            ("reachability", self.reachability),
            ("counting", self.counting),
            ("assembly", self.assembly),
        ]
    }

    pub fn total(&self) -> Duration {
        self.stages().iter().map(|(_, d)| *d).sum()
    }
}

/// Everything the pipeline produced, for callers that need intermediate
/// results.
#[derive(Clone, Debug)]
pub struct Pipeline {
    pub complex: MsComplex,
    pub gradient: GradientField,
    pub critical: CriticalCells,
    pub marked: MarkedSubgraph,
    pub path_counts: PathCounts,
    pub timings: StageTimings,
}

pub fn compute(f: &ScalarField, options: ComputeOptions) -> Result<MsComplex> {
    Ok(compute_pipeline(f, options)?.complex)
}

pub fn compute_pipeline(f: &ScalarField, options: ComputeOptions) -> Result<Pipeline> {
    let mut t = StageTimings::default();
    let dims = f.dims();

    let clock = Instant::now();
    let gradient = assign_gradient(f);
    t.gradient = clock.elapsed();

    let clock = Instant::now();
    let critical = extract_critical_cells(&gradient);
    t.critical = clock.elapsed();

    let clock = Instant::now();
    let labels_0 = find_roots(&build_forest(&gradient, 0)?)?;
    let labels_3 = find_roots(&build_forest(&gradient, 3)?)?;
    let extremum_arcs = saddle_extremum_arcs(&gradient, &critical, &labels_0, &labels_3);
    t.extrema = clock.elapsed();

    let clock = Instant::now();
    let dag = GradientDag(&gradient);
    let marked = mark_reachable(&dag, &critical.saddles1);
    t.reachability = clock.elapsed();

    let clock = Instant::now();
    let minor = build_minor(&dag, &marked)?;
    let path_counts = count_paths(&minor)?;
    t.counting = clock.elapsed();

    let clock = Instant::now();
    let critical_points = critical_points(f, &critical);
    let ids = IdMap::new(&critical);
    let mut arcs: Vec<Arc> = extremum_arcs
        .par_iter()
        .map(|a| {
            let (s, e) = (ids.get(a.saddle), ids.get(a.extremum));
            let (src, dst) = if s < e { (s, e) } else { (e, s) };
            Arc {
                src,
                dst,
                multiplicity: a.multiplicity as u64,
            }
        })
        .collect();
    arcs.extend(path_counts.pairs().map(|(s1, s2, m)| Arc {
        src: ids.get(s1),
        dst: ids.get(s2),
        multiplicity: m,
    }));
    arcs.par_sort_unstable();

    let segmentation = options
        .segmentation
        .then(|| segmentation(&gradient, &labels_0, &labels_3, &ids));
    let complex = MsComplex {
        header: Header {
            format_version: FORMAT_VERSION,
            dims: dims.vertex_counts(),
            dtype: options.dtype,
            provenance: Provenance {
                input_sha256: field_hash(f),
                tie_break: TIE_BREAK_RULE.to_string(),
            },
        },
        critical_points,
        arcs,
        segmentation,
    };
    t.assembly = clock.elapsed();

    Ok(Pipeline {
        complex,
        gradient,
        critical,
        marked,
        path_counts,
        timings: t,
    })
}

/// Sequential ids in (index, cell) order.
struct IdMap<'a> {
    critical: &'a CriticalCells,
    offsets: [u32; 4],
}

impl<'a> IdMap<'a> {
    fn new(critical: &'a CriticalCells) -> Self {
        let c = critical.counts();
        let mut offsets = [0u32; 4];
        for i in 1..4 {
            offsets[i] = offsets[i - 1] + c[i - 1] as u32;
        }
        IdMap { critical, offsets }
    }

    fn get(&self, cell: CellId) -> u32 {
        (0..4u8)
            .find_map(|d| {
                self.critical
                    .by_index(d)
                    .binary_search(&cell)
                    .ok()
                    .map(|i| self.offsets[d as usize] + i as u32)
            })
            .expect("arc endpoint is a critical cell")
    }
}

fn critical_points(f: &ScalarField, critical: &CriticalCells) -> Vec<CriticalPoint> {
    let dims = f.dims();
    let cells: Vec<(u8, CellId)> = (0..4u8)
        .flat_map(|d| critical.by_index(d).iter().map(move |&c| (d, c)))
        .collect();
    cells
        .par_iter()
        .enumerate()
        .map(|(id, &(index, cell))| {
            let position = dims.coords(cell);
            CriticalPoint {
                id: id as u32,
                cell,
                index,
                position,
                midpoint: position.map(|p| p as f64 / 2.0),
                value: f.cell_value(cell),
            }
        })
        .collect()
}

fn segmentation(
    g: &GradientField,
    labels_0: &RootLabels,
    labels_3: &RootLabels,
    ids: &IdMap<'_>,
) -> Segmentation {
    let seg = extremum_segmentation(g, labels_0, labels_3);
    Segmentation {
        minima: seg.minima.par_iter().map(|&m| ids.get(m)).collect(),
        maxima: seg
            .maxima
            .par_iter()
            .map(|m| m.map_or(NO_LABEL, |m| ids.get(m)))
            .collect(),
    }
}

/// Hex SHA-256 of the field values as little-endian `f64`.
pub fn field_hash(f: &ScalarField) -> String {
    let mut h = Sha256::new();
    for v in f.values() {
        h.update(v.to_le_bytes());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// A pair of critical points whose mod-2 boundary composition is nonzero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct BoundaryViolation {
    /// Critical point of index i + 2.
    pub upper: u32,
    /// Critical point of index i.
    pub lower: u32,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BoundaryReport {
    pub violations: Vec<BoundaryViolation>,
}

impl BoundaryReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

impl MsComplex {
    /// Critical point counts by index.
    pub fn counts(&self) -> [usize; 4] {
        let mut c = [0; 4];
        for p in &self.critical_points {
            c[p.index as usize] += 1;
        }
        c
    }

    pub fn euler(&self) -> i64 {
        let [a, b, c, d] = self.counts();
        a as i64 - b as i64 + c as i64 - d as i64
    }

    pub fn dims(&self) -> Result<GridDims> {
        let [nx, ny, nz] = self.header.dims;
        GridDims::new(nx, ny, nz)
    }

    pub fn critical_point(&self, id: u32) -> Result<&CriticalPoint> {
        self.critical_points
            .get(id as usize)
            .ok_or(Error::NotFound(id))
    }

    /// Arcs with `id` as source or destination, in (src, dst) order.
    pub fn query_arcs(&self, id: u32) -> Result<Vec<Arc>> {
        self.critical_point(id)?;
        Ok(self
            .arcs
            .iter()
            .filter(|a| a.src == id || a.dst == id)
            .copied()
            .collect())
    }

    /// For every pair of critical points two indices apart, the number of
    /// two-step arc chains between them must be even.
    pub fn boundary_check(&self) -> BoundaryReport {
        let counts = self.counts();
        let mut offsets = [0usize; 4];
        for i in 1..4 {
            offsets[i] = offsets[i - 1] + counts[i - 1];
        }
        // incidence from index i + 1 down to index i, reduced mod 2
        let incidence = |i: usize| {
            let triplets = self
                .arcs
                .iter()
                .filter(|a| self.critical_points[a.src as usize].index as usize == i)
                .map(|a| {
                    (
                        a.dst as usize - offsets[i + 1],
                        a.src as usize - offsets[i],
                        a.multiplicity % 2,
                    )
                });
            SparseCountMatrix::from_triplets(counts[i + 1], counts[i], triplets)
                .expect("arc endpoints are in range")
                .parity()
        };
        let down = [incidence(0), incidence(1), incidence(2)];
        let mut violations = Vec::new();
        for i in 0..2 {
            let composed = sp_multiply(&down[i + 1], &down[i])
                .expect("0/1 entries cannot overflow")
                .parity();
            violations.extend(composed.iter().map(|(r, c, _)| BoundaryViolation {
                upper: (r + offsets[i + 2]) as u32,
                lower: (c + offsets[i]) as u32,
            }));
        }
        violations.sort_unstable();
        BoundaryReport { violations }
    }

    /// Checks internal consistency of a complex that did not come from
    /// [`compute`], such as a parsed document.
    pub fn validate(&self) -> Result<()> {
        let dims = self
            .dims()
            .map_err(|e| Error::InvalidComplex(e.to_string()))?;
        let bad = |m: String| Err(Error::InvalidComplex(m));
        let mut prev: Option<(u8, CellId)> = None;
        for (i, p) in self.critical_points.iter().enumerate() {
            if p.id as usize != i {
                return bad(format!("critical point {i} has id {}", p.id));
            }
            if !dims.contains(p.cell) || dims.coords(p.cell) != p.position {
                return bad(format!(
                    "critical point {i} has inconsistent cell and position"
                ));
            }
            if dims.dimension(p.cell)? != p.index {
                return bad(format!(
                    "critical point {i} has index {} but cell dimension differs",
                    p.index
                ));
            }
            if prev.is_some_and(|q| q >= (p.index, p.cell)) {
                return bad(format!("critical point {i} is out of order"));
            }
            prev = Some((p.index, p.cell));
        }
        let n = self.critical_points.len();
        for (i, a) in self.arcs.iter().enumerate() {
            if a.src as usize >= n || a.dst as usize >= n {
                return bad(format!("arc {i} references a missing critical point"));
            }
            let (s, d) = (
                &self.critical_points[a.src as usize],
                &self.critical_points[a.dst as usize],
            );
            if s.index + 1 != d.index {
                return bad(format!("arc {i} does not join consecutive indices"));
            }
            if a.multiplicity == 0 {
                return bad(format!("arc {i} has zero multiplicity"));
            }
            if i > 0 && (self.arcs[i - 1].src, self.arcs[i - 1].dst) >= (a.src, a.dst) {
                return bad(format!("arc {i} is out of order or duplicated"));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec_pretty(self).expect("complex serializes");
        out.push(b'\n');
        out
    }

    /// Parses and validates a JSON document. Segmentation volumes are not
    /// part of the document.
    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let m: MsComplex = serde_json::from_slice(bytes).map_err(|e| Error::Parse {
            offset: byte_offset(bytes, e.line(), e.column()),
            message: e.to_string(),
        })?;
        m.validate()?;
        Ok(m)
    }

    /// Writes `<stem>_critical_points.csv` and `<stem>_arcs.csv` and returns
    /// their paths.
    pub fn write_csv(&self, stem: &Path) -> Result<[PathBuf; 2]> {
        let cp_path = suffixed(stem, "_critical_points.csv");
        let arc_path = suffixed(stem, "_arcs.csv");
        let io = |e: csv::Error| Error::Io(e.to_string());

        let mut w = csv::Writer::from_path(&cp_path).map_err(io)?;
        w.write_record([
            "id", "cell", "index", "x", "y", "z", "value", "mid_x", "mid_y", "mid_z",
        ])
        .map_err(io)?;
        for p in &self.critical_points {
            let [x, y, z] = p.position;
            let [mx, my, mz] = p.midpoint;
            w.write_record([
                p.id.to_string(),
                p.cell.0.to_string(),
                p.index.to_string(),
                x.to_string(),
                y.to_string(),
                z.to_string(),
                p.value.to_string(),
                mx.to_string(),
                my.to_string(),
                mz.to_string(),
            ])
            .map_err(io)?;
        }
        w.flush()?;

        let mut w = csv::Writer::from_path(&arc_path).map_err(io)?;
        w.write_record(["src", "dst", "multiplicity"]).map_err(io)?;
        for a in &self.arcs {
            w.write_record([
                a.src.to_string(),
                a.dst.to_string(),
                a.multiplicity.to_string(),
            ])
            .map_err(io)?;
        }
        w.flush()?;
        Ok([cp_path, arc_path])
    }

    /// Writes `<prefix>_min.raw` (per vertex) and `<prefix>_max.raw` (per
    /// cube) as little-endian `u32` critical point ids.
    pub fn write_labels(&self, prefix: &Path) -> Result<[PathBuf; 2]> {
        let seg = self
            .segmentation
            .as_ref()
            .ok_or_else(|| Error::InvalidComplex("no segmentation was computed".into()))?;
        let paths = [suffixed(prefix, "_min.raw"), suffixed(prefix, "_max.raw")];
        for (path, labels) in paths.iter().zip([&seg.minima, &seg.maxima]) {
            let bytes: Vec<u8> = labels.iter().flat_map(|l| l.to_le_bytes()).collect();
            fs::write(path, bytes).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        }
        Ok(paths)
    }

    /// Arc multiplicity sums per (critical point, neighbour index).
    pub fn degree_sums(&self) -> BTreeMap<(u32, u8), u64> {
        let mut out = BTreeMap::new();
        for a in &self.arcs {
            let (s, d) = (
                &self.critical_points[a.src as usize],
                &self.critical_points[a.dst as usize],
            );
            *out.entry((a.src, d.index)).or_insert(0) += a.multiplicity;
            *out.entry((a.dst, s.index)).or_insert(0) += a.multiplicity;
        }
        out
    }
}

fn suffixed(stem: &Path, suffix: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Converts a 1-based line and column into a byte offset.
fn byte_offset(bytes: &[u8], line: usize, column: usize) -> usize {
    let line_start: usize = bytes
        .split_inclusive(|&b| b == b'\n')
        .take(line.saturating_sub(1))
        .map(<[u8]>::len)
        .sum();
    (line_start + column.saturating_sub(1)).min(bytes.len())
}
