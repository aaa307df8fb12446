//! Discrete gradient assignment by per-vertex lower-star processing.
//!
//! Every cell belongs to the lower star of exactly one vertex (its highest
//! vertex in the total vertex order), and pairing decisions only look inside
//! that lower star. Vertices are therefore processed independently and each
//! cell's code is written by a single task.

use std::sync::atomic::{AtomicU8, Ordering as AtomicOrdering};

use arrayvec::ArrayVec;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{CellId, GridDims, ScalarField};
use crate::primitives::{compact_range, stream_compact};

/// Unit step in the doubled-coordinate lattice.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Direction {
    pub axis: u8,
    pub positive: bool,
}

impl Direction {
    fn code(self) -> u8 {
        self.axis * 2 + self.positive as u8
    }

    fn from_code(c: u8) -> Option<Self> {
        (c < 6).then_some(Direction {
            axis: c / 2,
            positive: c & 1 == 1,
        })
    }

    pub fn reverse(self) -> Self {
        Direction {
            axis: self.axis,
            positive: !self.positive,
        }
    }
}

/// Gradient code of a single cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pairing {
    Critical,
    /// Paired with the facet one step away in the given direction.
    WithFacet(Direction),
    /// Paired with the cofacet one step away in the given direction.
    WithCofacet(Direction),
}

const UNASSIGNED: u8 = 0;
const CRITICAL: u8 = 0x40;
const FACET: u8 = 0x10;
const COFACET: u8 = 0x20;

impl Pairing {
    pub fn encode(self) -> u8 {
        match self {
            Pairing::Critical => CRITICAL,
            Pairing::WithFacet(d) => FACET | d.code(),
            Pairing::WithCofacet(d) => COFACET | d.code(),
        }
    }

    pub fn decode(code: u8) -> Option<Self> {
        match code {
            CRITICAL => Some(Pairing::Critical),
            c if c & 0xF0 == FACET => Direction::from_code(c & 0x0F).map(Pairing::WithFacet),
            c if c & 0xF0 == COFACET => Direction::from_code(c & 0x0F).map(Pairing::WithCofacet),
            _ => None,
        }
    }
}

/// One byte per cell holding its [`Pairing`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GradientField {
    dims: GridDims,
    codes: Vec<u8>,
}

impl GradientField {
    /// Wraps raw codes without validating them; see [`validate_gradient`].
    pub fn from_codes(dims: GridDims, codes: Vec<u8>) -> Result<Self> {
        if codes.len() != dims.num_cells() {
            return Err(Error::ValueCount {
                expected: dims.num_cells(),
                actual: codes.len(),
            });
        }
        Ok(GradientField { dims, codes })
    }

    /// Field with every cell critical.
    pub fn all_critical(dims: GridDims) -> Self {
        GradientField {
            dims,
            codes: vec![CRITICAL; dims.num_cells()],
        }
    }

    /// Records the pair `lower -> upper`, where `lower` is a facet of `upper`.
    pub fn set_pair(&mut self, lower: CellId, upper: CellId) -> Result<()> {
        let dir = direction_between(&self.dims, lower, upper)
            .filter(|_| self.dims.dim_of(upper) == self.dims.dim_of(lower) + 1)
            .ok_or(Error::InvalidCellId(upper.0))?;
        self.codes[lower.0] = Pairing::WithCofacet(dir).encode();
        self.codes[upper.0] = Pairing::WithFacet(dir.reverse()).encode();
        Ok(())
    }

    pub fn set_critical(&mut self, c: CellId) {
        self.codes[c.0] = CRITICAL;
    }

    pub fn dims(&self) -> GridDims {
        self.dims
    }

    pub fn codes(&self) -> &[u8] {
        &self.codes
    }

    pub fn pairing(&self, c: CellId) -> Option<Pairing> {
        Pairing::decode(self.codes[c.0])
    }

    #[inline]
    pub fn is_critical(&self, c: CellId) -> bool {
        self.codes[c.0] == CRITICAL
    }

    /// The cofacet `c` is paired with, if any.
    #[inline]
    pub fn paired_cofacet(&self, c: CellId) -> Option<CellId> {
        match self.pairing(c)? {
            Pairing::WithCofacet(d) => self.dims.step(c, d.axis as usize, d.positive),
            _ => None,
        }
    }

    /// The facet `c` is paired with, if any.
    #[inline]
    pub fn paired_facet(&self, c: CellId) -> Option<CellId> {
        match self.pairing(c)? {
            Pairing::WithFacet(d) => self.dims.step(c, d.axis as usize, d.positive),
            _ => None,
        }
    }

    pub fn partner(&self, c: CellId) -> Option<CellId> {
        self.paired_cofacet(c).or_else(|| self.paired_facet(c))
    }
}

fn direction_between(dims: &GridDims, from: CellId, to: CellId) -> Option<Direction> {
    let a = dims.coords(from);
    let b = dims.coords(to);
    let mut found = None;
    for axis in 0..3 {
        if a[axis] != b[axis] {
            let positive = match b[axis].checked_sub(a[axis]) {
                Some(1) => true,
                None if a[axis] - b[axis] == 1 => false,
                _ => return None,
            };
            if found.is_some() {
                return None;
            }
            found = Some(Direction {
                axis: axis as u8,
                positive,
            });
        }
    }
    found
}

/// Offsets of the 27 lattice points around a vertex, index `(dx+1) + 3(dy+1) + 9(dz+1)`.
#[inline]
fn local_slot(off: [i8; 3]) -> usize {
    (off[0] + 1) as usize + 3 * (off[1] + 1) as usize + 9 * (off[2] + 1) as usize
}

struct StarCell {
    id: CellId,
    off: [i8; 3],
    boundary: bool,
    key: ArrayVec<u32, 8>,
}

/// Runs the homotopy-expansion pairing on the lower star of vertex `v` and
/// returns the codes of every cell in that lower star.
///
/// Boundary cells only pair with boundary cells and interior cells only with
/// interior cells, so no gradient path leaves the domain through its faces.
fn process_lower_star(dims: &GridDims, ranks: &[u32], v: usize) -> ArrayVec<(CellId, u8), 27> {
    let ext = dims.extents();
    let [x, y, z] = dims.vertex_position(v);
    let center = [2 * x as isize, 2 * y as isize, 2 * z as isize];
    let rv = ranks[v];

    // ranks of the neighbouring vertices, u32::MAX outside the grid
    let counts = dims.vertex_counts();
    let mut near = [u32::MAX; 27];
    for dz in -1i8..=1 {
        for dy in -1i8..=1 {
            for dx in -1i8..=1 {
                let p = [
                    x as isize + dx as isize,
                    y as isize + dy as isize,
                    z as isize + dz as isize,
                ];
                if (0..3).all(|a| p[a] >= 0 && p[a] < counts[a] as isize) {
                    let u = dims.vertex_index(p.map(|c| c as usize));
                    near[local_slot([dx, dy, dz])] = ranks[u];
                }
            }
        }
    }

    let mut star: ArrayVec<StarCell, 27> = ArrayVec::new();
    for dz in -1i8..=1 {
        for dy in -1i8..=1 {
            'cell: for dx in -1i8..=1 {
                let off = [dx, dy, dz];
                let mut coords = [0usize; 3];
                for a in 0..3 {
                    let c = center[a] + off[a] as isize;
                    if c < 0 || c >= ext[a] as isize {
                        continue 'cell;
                    }
                    coords[a] = c as usize;
                }
                // vertices of the cell: each nonzero offset axis may stay or move
                let mut key: ArrayVec<u32, 8> = ArrayVec::new();
                let free: ArrayVec<usize, 3> = (0..3).filter(|&a| off[a] != 0).collect();
                for m in 0..1u8 << free.len() {
                    let mut o = [0i8; 3];
                    for (b, &a) in free.iter().enumerate() {
                        if m >> b & 1 == 1 {
                            o[a] = off[a];
                        }
                    }
                    let r = near[local_slot(o)];
                    if r > rv {
                        continue 'cell;
                    }
                    key.push(r);
                }
                key.sort_unstable_by(|a, b| b.cmp(a));
                let id = dims.pack(coords);
                let boundary = (0..3).any(|a| coords[a] == 0 || coords[a] + 1 == ext[a]);
                star.push(StarCell {
                    id,
                    off,
                    boundary,
                    key,
                });
            }
        }
    }
    star.sort_unstable_by(|a, b| a.key.cmp(&b.key));

    let n = star.len();
    let mut pos = [u8::MAX; 27];
    for (i, c) in star.iter().enumerate() {
        pos[local_slot(c.off)] = i as u8;
    }

    let facets = |i: usize| -> ArrayVec<usize, 3> {
        let mut out = ArrayVec::new();
        for a in 0..3 {
            if star[i].off[a] != 0 {
                let mut o = star[i].off;
                o[a] = 0;
                let p = pos[local_slot(o)];
                if p != u8::MAX && star[p as usize].boundary == star[i].boundary {
                    out.push(p as usize);
                }
            }
        }
        out
    };
    let cofacets = |i: usize| -> ArrayVec<usize, 6> {
        let mut out = ArrayVec::new();
        for a in 0..3 {
            if star[i].off[a] == 0 {
                for s in [-1i8, 1] {
                    let mut o = star[i].off;
                    o[a] = s;
                    let p = pos[local_slot(o)];
                    if p != u8::MAX && star[p as usize].boundary == star[i].boundary {
                        out.push(p as usize);
                    }
                }
            }
        }
        out
    };

    const OPEN: u8 = 0;
    const CRIT: u8 = 1;
    const PAIRED: u8 = 2;
    let mut state = [OPEN; 27];
    let mut code = [UNASSIGNED; 27];

    let unpaired_faces = |state: &[u8; 27], i: usize| -> ArrayVec<usize, 3> {
        facets(i)
            .into_iter()
            .filter(|&f| state[f] == OPEN)
            .collect()
    };
    let pair = |state: &mut [u8; 27], code: &mut [u8; 27], lo: usize, hi: usize| {
        let axis = (0..3)
            .find(|&a| star[lo].off[a] != star[hi].off[a])
            .unwrap();
        let positive = star[hi].off[axis] > star[lo].off[axis];
        let dir = Direction {
            axis: axis as u8,
            positive,
        };
        code[lo] = Pairing::WithCofacet(dir).encode();
        code[hi] = Pairing::WithFacet(dir.reverse()).encode();
        state[lo] = PAIRED;
        state[hi] = PAIRED;
    };

    // priority queues as bitmasks over positions in key order; the two strata
    // never interact, so they can share one pass
    let mut pq_zero: u32 = 0;
    let mut pq_one: u32 = 0;
    for i in 0..n {
        match facets(i).len() {
            0 => pq_zero |= 1 << i,
            1 => pq_one |= 1 << i,
            _ => {}
        }
    }
    while pq_one != 0 || pq_zero != 0 {
        while pq_one != 0 {
            let a = pq_one.trailing_zeros() as usize;
            pq_one &= !(1 << a);
            if state[a] != OPEN {
                continue;
            }
            let open = unpaired_faces(&state, a);
            if open.is_empty() {
                pq_zero |= 1 << a;
                continue;
            }
            if open.len() > 1 {
                continue;
            }
            let f = open[0];
            pair(&mut state, &mut code, f, a);
            pq_zero &= !(1 << f);
            for b in cofacets(a).into_iter().chain(cofacets(f)) {
                if state[b] == OPEN && unpaired_faces(&state, b).len() <= 1 {
                    pq_one |= 1 << b;
                }
            }
        }
        if pq_zero != 0 {
            let g = pq_zero.trailing_zeros() as usize;
            pq_zero &= !(1 << g);
            if state[g] != OPEN {
                continue;
            }
            state[g] = CRIT;
            code[g] = CRITICAL;
            for b in cofacets(g) {
                if state[b] == OPEN && unpaired_faces(&state, b).len() <= 1 {
                    pq_one |= 1 << b;
                }
            }
        }
    }

    star.iter()
        .enumerate()
        .map(|(i, c)| {
            debug_assert_ne!(code[i], UNASSIGNED, "lower star cell left unclassified");
            (c.id, code[i])
        })
        .collect()
}

/// Assigns the discrete gradient of `f`, in parallel over vertices.
pub fn assign_gradient(f: &ScalarField) -> GradientField {
    let dims = f.dims();
    let ranks = f.vertex_ranks();
    let codes: Vec<AtomicU8> = (0..dims.num_cells())
        .map(|_| AtomicU8::new(UNASSIGNED))
        .collect();
    (0..dims.num_vertices()).into_par_iter().for_each(|v| {
        for (c, code) in process_lower_star(&dims, &ranks, v) {
            codes[c.0].store(code, AtomicOrdering::Relaxed);
        }
    });
    let codes = codes.into_iter().map(AtomicU8::into_inner).collect();
    GradientField { dims, codes }
}

/// Serial variant that visits vertices in the given order. Used to check that
/// the result does not depend on processing order.
pub fn assign_gradient_in_order(f: &ScalarField, order: &[usize]) -> GradientField {
    let dims = f.dims();
    let ranks = f.vertex_ranks();
    let mut codes = vec![UNASSIGNED; dims.num_cells()];
    for &v in order {
        for (c, code) in process_lower_star(&dims, &ranks, v) {
            codes[c.0] = code;
        }
    }
    GradientField { dims, codes }
}

/// Critical cells bucketed by index, each list sorted by cell id.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CriticalCells {
    pub minima: Vec<CellId>,
    pub saddles1: Vec<CellId>,
    pub saddles2: Vec<CellId>,
    pub maxima: Vec<CellId>,
}

impl CriticalCells {
    pub fn by_index(&self, index: u8) -> &[CellId] {
        match index {
            0 => &self.minima,
            1 => &self.saddles1,
            2 => &self.saddles2,
            3 => &self.maxima,
            _ => &[],
        }
    }

    pub fn counts(&self) -> [usize; 4] {
        [
            self.minima.len(),
            self.saddles1.len(),
            self.saddles2.len(),
            self.maxima.len(),
        ]
    }

    pub fn total(&self) -> usize {
        self.counts().iter().sum()
    }

    /// Alternating sum `c0 - c1 + c2 - c3`.
    pub fn euler(&self) -> i64 {
        let [c0, c1, c2, c3] = self.counts();
        c0 as i64 - c1 as i64 + c2 as i64 - c3 as i64
    }
}

pub fn extract_critical_cells(g: &GradientField) -> CriticalCells {
    let dims = g.dims;
    let critical = compact_range(g.codes.len(), |i| g.codes[i] == CRITICAL);
    let bucket = |d: u8| -> Vec<CellId> {
        stream_compact(&critical, |&i| dims.dim_of(CellId(i)) == d)
            .into_iter()
            .map(CellId)
            .collect()
    };
    CriticalCells {
        minima: bucket(0),
        saddles1: bucket(1),
        saddles2: bucket(2),
        maxima: bucket(3),
    }
}

/// Findings of [`validate_gradient`].
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GradientReport {
    /// Cells whose code is not a valid pairing or whose partner does not point back.
    pub matching_violations: Vec<CellId>,
    /// A cell on a closed V-path, per dimension pair (d, d+1), if one exists.
    pub closed_vpaths: Vec<(u8, CellId)>,
    /// False when the grid exceeded the size limit for the V-path traversal.
    pub vpaths_checked: bool,
    /// No gradient pairs at all.
    pub degenerate: bool,
}

impl GradientReport {
    pub fn is_valid(&self) -> bool {
        self.matching_violations.is_empty() && self.closed_vpaths.is_empty()
    }
}

/// Default grid size limit for the closed V-path traversal.
pub const VPATH_CHECK_LIMIT: usize = 100_000;

pub fn validate_gradient(g: &GradientField) -> GradientReport {
    validate_gradient_with_limit(g, VPATH_CHECK_LIMIT)
}

pub fn validate_gradient_with_limit(g: &GradientField, max_cells: usize) -> GradientReport {
    let dims = g.dims;
    let n = dims.num_cells();
    let bad = compact_range(n, |i| !matching_ok(g, CellId(i)));
    let degenerate = g.codes.par_iter().all(|&c| c == CRITICAL);
    let mut report = GradientReport {
        matching_violations: bad.into_iter().map(CellId).collect(),
        closed_vpaths: Vec::new(),
        vpaths_checked: false,
        degenerate,
    };
    if n <= max_cells && report.matching_violations.is_empty() {
        report.vpaths_checked = true;
        for d in 0..3u8 {
            if let Some(c) = find_closed_vpath(g, d) {
                report.closed_vpaths.push((d, c));
            }
        }
    }
    report
}

fn matching_ok(g: &GradientField, c: CellId) -> bool {
    match g.pairing(c) {
        None => false,
        Some(Pairing::Critical) => true,
        Some(Pairing::WithCofacet(d)) => match g.dims.step(c, d.axis as usize, d.positive) {
            Some(up) => g.pairing(up) == Some(Pairing::WithFacet(d.reverse())),
            None => false,
        },
        Some(Pairing::WithFacet(d)) => match g.dims.step(c, d.axis as usize, d.positive) {
            Some(lo) => {
                g.dims.coords(c)[d.axis as usize] & 1 == 1
                    && g.pairing(lo) == Some(Pairing::WithCofacet(d.reverse()))
            }
            None => false,
        },
    }
}

/// Looks for a cycle in the (d, d+1) V-path graph: a d-cell `a` paired with
/// `b` leads to every other d-facet of `b` that is itself paired upward.
fn find_closed_vpath(g: &GradientField, d: u8) -> Option<CellId> {
    let dims = g.dims;
    let next = |a: CellId| -> ArrayVec<CellId, 6> {
        match g.paired_cofacet(a) {
            Some(b) => dims
                .facets_of(b)
                .into_iter()
                .filter(|&f| f != a && g.paired_cofacet(f).is_some())
                .collect(),
            None => ArrayVec::new(),
        }
    };
    // iterative three-colour DFS
    let mut color = vec![0u8; dims.num_cells()];
    for start in dims.cells() {
        if dims.dim_of(start) != d || color[start.0] != 0 || g.paired_cofacet(start).is_none() {
            continue;
        }
        let mut stack: Vec<(CellId, ArrayVec<CellId, 6>)> = vec![(start, next(start))];
        color[start.0] = 1;
        while let Some((_, succ)) = stack.last_mut() {
            match succ.pop() {
                Some(s) => match color[s.0] {
                    0 => {
                        color[s.0] = 1;
                        let ns = next(s);
                        stack.push((s, ns));
                    }
                    1 => return Some(s),
                    _ => {}
                },
                None => {
                    let (c, _) = stack.pop().unwrap();
                    color[c.0] = 2;
                }
            }
        }
    }
    None
}
