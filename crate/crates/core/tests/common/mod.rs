//! Independent oracles shared by the integration tests.

#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};

use morse_smale::gradient::GradientField;
use morse_smale::saddle_graph::{DagMinor, ExplicitDag, MinorEdge};
use morse_smale::{CellId, GridDims, ScalarField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random_field(n: [usize; 3], seed: u64) -> ScalarField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = GridDims::new(n[0], n[1], n[2]).unwrap();
    ScalarField::new(d, (0..d.num_vertices()).map(|_| rng.gen()).collect()).unwrap()
}

/// One step up a 1-2 gradient path, read straight off the pairing codes.
enum Next {
    Edge(CellId),
    Saddle(CellId),
}

fn upward_steps(g: &GradientField, e: CellId) -> Vec<Next> {
    let d = g.dims();
    let mut out = Vec::new();
    for q in d.cofacets(e).unwrap() {
        if g.is_critical(q) {
            out.push(Next::Saddle(q));
        } else if let Some(f) = g.paired_facet(q) {
            if f != e {
                out.push(Next::Edge(f));
            }
        }
    }
    out
}

/// Walks every gradient path from every 1-saddle one at a time and tallies
/// (1-saddle, 2-saddle) pairs. Panics after `budget` path steps.
pub fn enumerate_gradient_paths(
    g: &GradientField,
    one_saddles: &[CellId],
    budget: u64,
) -> BTreeMap<(CellId, CellId), u64> {
    let mut counts = BTreeMap::new();
    let mut steps = 0u64;
    for &s in one_saddles {
        let mut stack = vec![s];
        while let Some(e) = stack.pop() {
            steps += 1;
            assert!(steps <= budget, "path enumeration exceeded its step budget");
            for n in upward_steps(g, e) {
                match n {
                    Next::Edge(f) => stack.push(f),
                    Next::Saddle(t) => *counts.entry((s, t)).or_insert(0) += 1,
                }
            }
        }
    }
    counts
}

/// Plain adjacency description of a random DAG for synthetic suites.
#[derive(Clone, Debug)]
pub struct RandomDag {
    pub sources: Vec<usize>,
    pub terminals: Vec<usize>,
    /// `succ[n]` lists `(target, is_terminal)`.
    pub succ: Vec<Vec<(usize, bool)>>,
}

impl RandomDag {
    /// Up to `max_nodes` nodes in topological order: sources first, then
    /// interior nodes, then terminals. Out-degree at most 4.
    pub fn generate(rng: &mut ChaCha8Rng, max_nodes: usize) -> Self {
        let n = rng.gen_range(3..=max_nodes);
        let ns = rng.gen_range(1..=(n / 3).max(1));
        let nt = rng.gen_range(1..=(n / 3).max(1));
        let ni = n - ns - nt;
        let mut succ = vec![Vec::new(); n];
        for (v, out) in succ.iter_mut().enumerate().take(ns + ni) {
            let lo = if v < ns { ns } else { v + 1 };
            let deg = rng.gen_range(0..=4usize);
            for _ in 0..deg {
                let t = rng.gen_range(lo..n);
                out.push((t, t >= ns + ni));
            }
        }
        RandomDag {
            sources: (0..ns).collect(),
            terminals: (ns + ni..n).collect(),
            succ,
        }
    }

    pub fn to_explicit(&self) -> ExplicitDag {
        let mut dag = ExplicitDag::new(self.succ.len());
        for (v, out) in self.succ.iter().enumerate() {
            for &(t, term) in out {
                if term {
                    dag.add_terminal(v, t);
                } else {
                    dag.add_edge(v, t);
                }
            }
        }
        dag
    }

    /// Number of source-to-terminal paths by memoised counting, used to keep
    /// the exhaustive enumeration affordable.
    pub fn path_total(&self) -> u128 {
        let mut memo: HashMap<usize, u128> = HashMap::new();
        fn go(d: &RandomDag, v: usize, memo: &mut HashMap<usize, u128>) -> u128 {
            if let Some(&c) = memo.get(&v) {
                return c;
            }
            let c = d.succ[v]
                .iter()
                .map(|&(t, term)| if term { 1 } else { go(d, t, memo) })
                .sum();
            memo.insert(v, c);
            c
        }
        self.sources.iter().map(|&s| go(self, s, &mut memo)).sum()
    }

    /// Exhaustive DFS over every individual path.
    pub fn enumerate(&self) -> BTreeMap<(CellId, CellId), u64> {
        let mut counts = BTreeMap::new();
        for &s in &self.sources {
            let mut stack = vec![s];
            while let Some(v) = stack.pop() {
                for &(t, term) in &self.succ[v] {
                    if term {
                        *counts.entry((CellId(s), CellId(t))).or_insert(0) += 1;
                    } else {
                        stack.push(t);
                    }
                }
            }
        }
        counts
    }
}

/// A random minor: 1-saddles, junctions in topological order, 2-saddles,
/// with edge multiplicities in 1..=3 and out-degree at most 4.
pub fn random_minor(rng: &mut ChaCha8Rng, max_nodes: usize) -> DagMinor {
    let n = rng.gen_range(3..=max_nodes);
    let ns = rng.gen_range(1..=(n / 3).max(1));
    let nt = rng.gen_range(1..=(n / 3).max(1));
    let nj = n - ns - nt;
    let one_saddles: Vec<CellId> = (0..ns).map(CellId).collect();
    let junctions: Vec<CellId> = (ns..ns + nj).map(CellId).collect();
    let two_saddles: Vec<CellId> = (ns + nj..n).map(CellId).collect();
    let mut m = DagMinor {
        one_saddles,
        junctions,
        two_saddles,
        ..Default::default()
    };
    for v in 0..ns + nj {
        let lo = if v < ns { ns } else { v + 1 };
        let deg = if v < ns {
            rng.gen_range(1..=4)
        } else {
            rng.gen_range(2..=4)
        };
        for _ in 0..deg {
            let t = rng.gen_range(lo..n);
            let e = MinorEdge {
                src: CellId(v),
                dst: CellId(t),
                multiplicity: rng.gen_range(1..=3),
            };
            match (v < ns, t >= ns + nj) {
                (true, false) => m.saddle_junction.push(e),
                (true, true) => m.saddle_saddle.push(e),
                (false, false) => m.junction_junction.push(e),
                (false, true) => m.junction_saddle.push(e),
            }
        }
    }
    m
}

/// Every path through a minor, one at a time, weighted by edge multiplicities.
pub fn enumerate_minor(m: &DagMinor) -> BTreeMap<(CellId, CellId), u64> {
    let mut out: HashMap<CellId, Vec<(CellId, u64)>> = HashMap::new();
    for e in m
        .saddle_junction
        .iter()
        .chain(&m.junction_junction)
        .chain(&m.junction_saddle)
        .chain(&m.saddle_saddle)
    {
        out.entry(e.src).or_default().push((e.dst, e.multiplicity));
    }
    let mut counts = BTreeMap::new();
    for &s in &m.one_saddles {
        let mut stack = vec![(s, 1u64)];
        while let Some((v, w)) = stack.pop() {
            for &(t, k) in out.get(&v).map(Vec::as_slice).unwrap_or(&[]) {
                if m.two_saddles.binary_search(&t).is_ok() {
                    *counts.entry((s, t)).or_insert(0) += w * k;
                } else {
                    stack.push((t, w * k));
                }
            }
        }
    }
    counts
}

/// Sum of path weights, computed by memoised counting.
pub fn minor_path_weight(m: &DagMinor) -> u128 {
    let mut out: HashMap<CellId, Vec<(CellId, u64)>> = HashMap::new();
    for e in m
        .saddle_junction
        .iter()
        .chain(&m.junction_junction)
        .chain(&m.junction_saddle)
        .chain(&m.saddle_saddle)
    {
        out.entry(e.src).or_default().push((e.dst, e.multiplicity));
    }
    fn go(
        v: CellId,
        out: &HashMap<CellId, Vec<(CellId, u64)>>,
        m: &DagMinor,
        memo: &mut HashMap<CellId, u128>,
    ) -> u128 {
        if m.two_saddles.binary_search(&v).is_ok() {
            return 1;
        }
        if let Some(&c) = memo.get(&v) {
            return c;
        }
        let c = out
            .get(&v)
            .map(|es| {
                es.iter()
                    .map(|&(t, k)| k as u128 * go(t, out, m, memo))
                    .sum()
            })
            .unwrap_or(0);
        memo.insert(v, c);
        c
    }
    let mut memo = HashMap::new();
    m.one_saddles
        .iter()
        .map(|&s| go(s, &out, m, &mut memo))
        .sum()
}

/// The merge-split configuration: a 1-saddle splits into two paths that
/// merge, split again and merge into one 2-saddle, for four paths in all.
pub fn merge_split_minor() -> DagMinor {
    let e = |s, d, k| MinorEdge {
        src: CellId(s),
        dst: CellId(d),
        multiplicity: k,
    };
    DagMinor {
        one_saddles: vec![CellId(0)],
        junctions: vec![CellId(3)],
        two_saddles: vec![CellId(7)],
        saddle_junction: vec![e(0, 3, 2)],
        junction_saddle: vec![e(3, 7, 2)],
        ..Default::default()
    }
}

/// The same configuration as an uncontracted DAG:
/// 0 -> {1, 2} -> 3 -> {4, 5} -> 6 -> 2-saddle 7.
pub fn merge_split_dag() -> ExplicitDag {
    let mut d = ExplicitDag::new(8);
    d.add_edge(0, 1)
        .add_edge(0, 2)
        .add_edge(1, 3)
        .add_edge(2, 3);
    d.add_edge(3, 4)
        .add_edge(3, 5)
        .add_edge(4, 6)
        .add_edge(5, 6);
    d.add_terminal(6, 7);
    d
}
