//! Saddle-saddle reachability and simple-path contraction.
//!
//! Gradient paths from 1-saddles up to 2-saddles form a DAG over 1-cells:
//! from an edge `e`, each cofacet quad `q` either is a 2-saddle (a terminal),
//! is paired with another edge `e'` (the next node), or is paired with a cube
//! (no successor). Every node has at most four successors.
//!
//! The traversal routines are written against the [`SaddleDag`] trait so that
//! small hand-built graphs can exercise them directly.

use std::sync::atomic::{AtomicBool, Ordering as AtomicOrdering};

use arrayvec::ArrayVec;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gradient::GradientField;
use crate::grid::CellId;
use crate::primitives::stream_compact;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Successor {
    /// An interior DAG node (a 1-cell paired upward).
    Edge(CellId),
    /// A 2-saddle; traversal stops here.
    Terminal(CellId),
}

pub type Successors = ArrayVec<Successor, 4>;

pub trait SaddleDag: Sync {
    /// Exclusive upper bound on node and terminal ids.
    fn node_bound(&self) -> usize;

    fn successors(&self, node: CellId) -> Successors;
}

/// Successors of 1-cell `e` in the gradient DAG, in cofacet order.
pub fn successors(g: &GradientField, e: CellId) -> Successors {
    let dims = g.dims();
    let mut out = Successors::new();
    for q in dims.cofacets_of(e) {
        if g.is_critical(q) {
            out.push(Successor::Terminal(q));
        } else if let Some(next) = g.paired_facet(q) {
            if next != e {
                out.push(Successor::Edge(next));
            }
        }
    }
    out
}

/// The saddle-connection DAG implied by a gradient field.
#[derive(Clone, Copy)]
pub struct GradientDag<'a>(pub &'a GradientField);

impl SaddleDag for GradientDag<'_> {
    fn node_bound(&self) -> usize {
        self.0.dims().num_cells()
    }

    fn successors(&self, node: CellId) -> Successors {
        successors(self.0, node)
    }
}

/// Adjacency-list DAG for fixtures and synthetic tests.
#[derive(Clone, Debug, Default)]
pub struct ExplicitDag {
    succ: Vec<Successors>,
}

impl ExplicitDag {
    pub fn new(nodes: usize) -> Self {
        ExplicitDag {
            succ: vec![Successors::new(); nodes],
        }
    }

    pub fn add_edge(&mut self, from: usize, to: usize) -> &mut Self {
        self.succ[from].push(Successor::Edge(CellId(to)));
        self
    }

    pub fn add_terminal(&mut self, from: usize, to: usize) -> &mut Self {
        self.succ[from].push(Successor::Terminal(CellId(to)));
        self
    }
}

impl SaddleDag for ExplicitDag {
    fn node_bound(&self) -> usize {
        self.succ.len()
    }

    fn successors(&self, node: CellId) -> Successors {
        self.succ[node.0].clone()
    }
}

/// Nodes reachable from the 1-saddles, plus the 2-saddles reached.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MarkedSubgraph {
    pub sources: Vec<CellId>,
    /// All marked interior nodes, sources included, sorted.
    pub nodes: Vec<CellId>,
    pub two_saddles: Vec<CellId>,
    /// Number of frontier expansions performed.
    pub iterations: usize,
    /// Total number of frontier entries expanded.
    pub expanded: usize,
}

impl MarkedSubgraph {
    pub fn contains(&self, c: CellId) -> bool {
        self.nodes.binary_search(&c).is_ok()
    }
}

/// Multi-source frontier BFS. Each frontier node writes its successors into
/// a fixed window of four slots; terminals are recorded, unvisited edges are
/// compacted, deduplicated and become the next frontier.
pub fn mark_reachable<D: SaddleDag>(dag: &D, one_saddles: &[CellId]) -> MarkedSubgraph {
    let visited: Vec<AtomicBool> = (0..dag.node_bound())
        .map(|_| AtomicBool::new(false))
        .collect();
    let mut frontier: Vec<CellId> = one_saddles.to_vec();
    frontier.par_sort_unstable();
    frontier.dedup();
    frontier
        .par_iter()
        .for_each(|c| visited[c.0].store(true, AtomicOrdering::Relaxed));

    let mut nodes = frontier.clone();
    let mut terminals: Vec<CellId> = Vec::new();
    let mut iterations = 0;
    let mut expanded = 0;

    while !frontier.is_empty() {
        iterations += 1;
        expanded += frontier.len();
        let mut slots: Vec<Option<Successor>> = vec![None; 4 * frontier.len()];
        slots
            .par_chunks_mut(4)
            .zip(frontier.par_iter())
            .for_each(|(window, &node)| {
                for (slot, s) in window.iter_mut().zip(dag.successors(node)) {
                    *slot = Some(s);
                }
            });

        terminals.extend(
            stream_compact(&slots, |s| matches!(s, Some(Successor::Terminal(_))))
                .into_iter()
                .flatten()
                .map(|s| match s {
                    Successor::Terminal(t) | Successor::Edge(t) => t,
                }),
        );

        let mut next: Vec<CellId> = stream_compact(&slots, |s| match s {
            Some(Successor::Edge(n)) => !visited[n.0].load(AtomicOrdering::Relaxed),
            _ => false,
        })
        .into_iter()
        .flatten()
        .map(|s| match s {
            Successor::Edge(n) | Successor::Terminal(n) => n,
        })
        .collect();
        next.par_sort_unstable();
        next.dedup();
        next.par_iter()
            .for_each(|c| visited[c.0].store(true, AtomicOrdering::Relaxed));
        nodes.extend_from_slice(&next);
        frontier = next;
    }

    nodes.par_sort_unstable();
    terminals.par_sort_unstable();
    terminals.dedup();
    let mut sources = one_saddles.to_vec();
    sources.sort_unstable();
    sources.dedup();
    MarkedSubgraph {
        sources,
        nodes,
        two_saddles: terminals,
        iterations,
        expanded,
    }
}

/// Contracted edge of the graph minor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MinorEdge {
    pub src: CellId,
    pub dst: CellId,
    pub multiplicity: u64,
}

/// The saddle DAG with every simple path contracted to a single counted edge.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DagMinor {
    pub one_saddles: Vec<CellId>,
    pub junctions: Vec<CellId>,
    pub two_saddles: Vec<CellId>,
    pub saddle_junction: Vec<MinorEdge>,
    pub junction_junction: Vec<MinorEdge>,
    pub junction_saddle: Vec<MinorEdge>,
    pub saddle_saddle: Vec<MinorEdge>,
}

impl DagMinor {
    pub fn edge_count(&self) -> usize {
        self.saddle_junction.len()
            + self.junction_junction.len()
            + self.junction_saddle.len()
            + self.saddle_saddle.len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum DstKind {
    Junction,
    TwoSaddle,
}

#[derive(Clone, Copy, Debug)]
struct Trace {
    origin: CellId,
    at: Successor,
}

#[derive(Clone, Copy, Debug)]
enum Step {
    Emit(CellId, CellId, DstKind),
    Advance(Trace),
    Dead,
}

/// Contracts simple paths of the marked subgraph. One trace starts on every
/// outgoing branch of every 1-saddle and junction; all traces advance one node
/// per round and stop at a junction or a 2-saddle. Parallel contracted paths
/// between the same pair merge into one edge with summed multiplicity.
pub fn build_minor<D: SaddleDag>(dag: &D, marked: &MarkedSubgraph) -> Result<DagMinor> {
    let bound = dag.node_bound();
    let mut is_source = vec![false; bound];
    for s in &marked.sources {
        is_source[s.0] = true;
    }
    let junctions: Vec<CellId> = stream_compact(&marked.nodes, |n| {
        !is_source[n.0] && dag.successors(*n).len() > 1
    });
    let mut is_junction = vec![false; bound];
    for j in &junctions {
        is_junction[j.0] = true;
    }

    let origins: Vec<CellId> = {
        let mut o: Vec<CellId> = marked.sources.iter().chain(&junctions).copied().collect();
        o.sort_unstable();
        o
    };
    let mut traces: Vec<Trace> = origins
        .par_iter()
        .flat_map_iter(|&origin| {
            dag.successors(origin)
                .into_iter()
                .map(move |at| Trace { origin, at })
        })
        .collect();

    let mut emitted: Vec<(CellId, CellId, DstKind)> = Vec::new();
    let mut rounds = 0usize;
    while !traces.is_empty() {
        rounds += 1;
        if rounds > bound + 1 {
            return Err(Error::Cycle(format!(
                "path contraction exceeded {bound} rounds; the gradient field has a closed V-path"
            )));
        }
        let steps: Vec<Step> = traces
            .par_iter()
            .map(|t| match t.at {
                Successor::Terminal(s) => Ok(Step::Emit(t.origin, s, DstKind::TwoSaddle)),
                Successor::Edge(n) if is_junction[n.0] => {
                    Ok(Step::Emit(t.origin, n, DstKind::Junction))
                }
                Successor::Edge(n) => {
                    let succ = dag.successors(n);
                    match succ.len() {
                        0 => Ok(Step::Dead),
                        1 => Ok(Step::Advance(Trace {
                            origin: t.origin,
                            at: succ[0],
                        })),
                        _ => Err(Error::Cycle(format!(
                            "trace from {} re-entered source {}",
                            t.origin.0, n.0
                        ))),
                    }
                }
            })
            .collect::<Result<_>>()?;
        emitted.extend(
            stream_compact(&steps, |s| matches!(s, Step::Emit(..)))
                .into_iter()
                .map(|s| match s {
                    Step::Emit(a, b, k) => (a, b, k),
                    _ => unreachable!(),
                }),
        );
        traces = stream_compact(&steps, |s| matches!(s, Step::Advance(_)))
            .into_iter()
            .map(|s| match s {
                Step::Advance(t) => t,
                _ => unreachable!(),
            })
            .collect();
    }

    emitted.par_sort_unstable();
    let mut minor = DagMinor {
        one_saddles: marked.sources.clone(),
        junctions,
        two_saddles: marked.two_saddles.clone(),
        ..Default::default()
    };
    let mut i = 0;
    while i < emitted.len() {
        let (src, dst, kind) = emitted[i];
        let mut j = i;
        while j < emitted.len() && emitted[j] == (src, dst, kind) {
            j += 1;
        }
        let edge = MinorEdge {
            src,
            dst,
            multiplicity: (j - i) as u64,
        };
        let list = match (is_source[src.0], kind) {
            (true, DstKind::Junction) => &mut minor.saddle_junction,
            (false, DstKind::Junction) => &mut minor.junction_junction,
            (false, DstKind::TwoSaddle) => &mut minor.junction_saddle,
            (true, DstKind::TwoSaddle) => &mut minor.saddle_saddle,
        };
        list.push(edge);
        i = j;
    }
    Ok(minor)
}
