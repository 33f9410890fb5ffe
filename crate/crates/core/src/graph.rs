//! Undirected graphs on `p` labelled nodes, node permutations, clique
//! enumeration and symbolic elimination (fill-in) for Cholesky factors.
//!
//! Nodes are 0-based in memory. The edge-list text format is 1-based: the
//! first line holds `p`, every further non-empty line holds one `i j` pair.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};

const WORD: usize = 64;

fn words_for(p: usize) -> usize {
    p.div_ceil(WORD).max(1)
}

const INLINE_WORDS: usize = 2;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum Bits {
    Inline([u64; INLINE_WORDS]),
    Heap(Vec<u64>),
}

/// Fixed-capacity bit set over node indices. Sets over at most 128 nodes
/// live inline.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct NodeSet {
    bits: Bits,
}

impl NodeSet {
    pub fn empty(p: usize) -> Self {
        let n = words_for(p);
        let bits = if n <= INLINE_WORDS {
            Bits::Inline([0; INLINE_WORDS])
        } else {
            Bits::Heap(vec![0; n])
        };
        NodeSet { bits }
    }

    pub fn full(p: usize) -> Self {
        let mut s = Self::empty(p);
        for v in 0..p {
            s.insert(v);
        }
        s
    }

    #[inline]
    fn words(&self) -> &[u64] {
        match &self.bits {
            Bits::Inline(w) => w,
            Bits::Heap(w) => w,
        }
    }

    #[inline]
    fn words_mut(&mut self) -> &mut [u64] {
        match &mut self.bits {
            Bits::Inline(w) => w,
            Bits::Heap(w) => w,
        }
    }

    #[inline]
    pub fn contains(&self, v: usize) -> bool {
        self.words()[v / WORD] >> (v % WORD) & 1 == 1
    }

    #[inline]
    pub fn insert(&mut self, v: usize) {
        self.words_mut()[v / WORD] |= 1 << (v % WORD);
    }

    #[inline]
    pub fn remove(&mut self, v: usize) {
        self.words_mut()[v / WORD] &= !(1 << (v % WORD));
    }

    pub fn is_empty(&self) -> bool {
        self.words().iter().all(|&w| w == 0)
    }

    pub fn len(&self) -> usize {
        self.words().iter().map(|w| w.count_ones() as usize).sum()
    }

    fn zip_with(&self, other: &NodeSet, f: impl Fn(u64, u64) -> u64) -> NodeSet {
        let mut out = self.clone();
        for (a, b) in out.words_mut().iter_mut().zip(other.words()) {
            *a = f(*a, *b);
        }
        out
    }

    pub fn intersection(&self, other: &NodeSet) -> NodeSet {
        self.zip_with(other, |a, b| a & b)
    }

    pub fn difference(&self, other: &NodeSet) -> NodeSet {
        self.zip_with(other, |a, b| a & !b)
    }

    pub fn union_with(&mut self, other: &NodeSet) {
        for (a, b) in self.words_mut().iter_mut().zip(other.words()) {
            *a |= b;
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words().iter().enumerate().flat_map(|(w, &word)| {
            let mut rest = word;
            std::iter::from_fn(move || {
                if rest == 0 {
                    return None;
                }
                let tz = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(w * WORD + tz)
            })
        })
    }
}

/// Undirected simple graph stored as a symmetric bit adjacency matrix.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Graph {
    p: usize,
    adj: Vec<NodeSet>,
}

impl Graph {
    pub fn empty(p: usize) -> Self {
        Graph {
            p,
            adj: vec![NodeSet::empty(p); p],
        }
    }

    pub fn complete(p: usize) -> Self {
        let mut g = Self::empty(p);
        for i in 0..p {
            for j in i + 1..p {
                g.add_edge(i, j);
            }
        }
        g
    }

    /// Builds a graph from 0-based pairs. Self-loops and out-of-range nodes
    /// are rejected; duplicate pairs are merged.
    pub fn from_edges(p: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Self::empty(p);
        for &(i, j) in edges {
            if i >= p || j >= p {
                return Err(Error::Domain(format!("edge ({i}, {j}) outside 0..{p}")));
            }
            if i == j {
                return Err(Error::Domain(format!("self-loop at node {i}")));
            }
            g.add_edge(i, j);
        }
        Ok(g)
    }

    #[inline]
    pub fn p(&self) -> usize {
        self.p
    }

    #[inline]
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        i != j && self.adj[i].contains(j)
    }

    pub fn add_edge(&mut self, i: usize, j: usize) {
        assert!(i != j, "self-loop at node {i}");
        self.adj[i].insert(j);
        self.adj[j].insert(i);
    }

    pub fn remove_edge(&mut self, i: usize, j: usize) {
        self.adj[i].remove(j);
        self.adj[j].remove(i);
    }

    pub fn set_edge(&mut self, i: usize, j: usize, present: bool) {
        if present {
            self.add_edge(i, j)
        } else {
            self.remove_edge(i, j)
        }
    }

    pub fn neighbors(&self, i: usize) -> &NodeSet {
        &self.adj[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adj[i].len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(NodeSet::len).sum::<usize>() / 2
    }

    /// Edges `(i, j)` with `i < j`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.p).flat_map(move |i| self.adj[i].iter().filter(move |&j| j > i).map(move |j| (i, j)))
    }

    pub fn is_subgraph_of(&self, other: &Graph) -> bool {
        self.p == other.p && self.edges().all(|(i, j)| other.has_edge(i, j))
    }

    pub fn is_complete_on(&self, nodes: &[usize]) -> bool {
        nodes
            .iter()
            .enumerate()
            .all(|(a, &i)| nodes[a + 1..].iter().all(|&j| self.has_edge(i, j)))
    }

    /// Relabels node `v` as `perm.position(v)`.
    pub fn permuted(&self, perm: &Permutation) -> Graph {
        assert_eq!(perm.len(), self.p);
        let mut g = Graph::empty(self.p);
        for (i, j) in self.edges() {
            g.add_edge(perm.position(i), perm.position(j));
        }
        g
    }

    /// Subgraph induced by `nodes`; node `nodes[k]` becomes node `k`.
    pub fn induced(&self, nodes: &[usize]) -> Graph {
        let mut g = Graph::empty(nodes.len());
        for (a, &i) in nodes.iter().enumerate() {
            for (b, &j) in nodes.iter().enumerate().skip(a + 1) {
                if self.has_edge(i, j) {
                    g.add_edge(a, b);
                }
            }
        }
        g
    }

    pub fn parse_edge_list(text: &str) -> Result<Graph> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty edge list".into()))?;
        let p: usize = header
            .parse()
            .map_err(|_| Error::Parse(format!("bad node count `{header}`")))?;
        let mut edges = Vec::new();
        for line in lines {
            let mut it = line.split_whitespace().map(str::parse::<usize>);
            match (it.next(), it.next(), it.next()) {
                (Some(Ok(i)), Some(Ok(j)), None) if i >= 1 && j >= 1 => edges.push((i - 1, j - 1)),
                _ => return Err(Error::Parse(format!("bad edge line `{line}`"))),
            }
        }
        Graph::from_edges(p, &edges)
    }

    pub fn to_edge_list(&self) -> String {
        let mut out = format!("{}\n", self.p);
        for (i, j) in self.edges() {
            let _ = writeln!(out, "{} {}", i + 1, j + 1);
        }
        out
    }
}

/// Bijection between nodes and positions in an elimination order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Permutation {
    pos: Vec<usize>,
    order: Vec<usize>,
}

impl Permutation {
    pub fn identity(p: usize) -> Self {
        let v: Vec<usize> = (0..p).collect();
        Permutation {
            pos: v.clone(),
            order: v,
        }
    }

    /// `order[k]` is the node placed at position `k`.
    pub fn from_order(order: Vec<usize>) -> Result<Self> {
        let p = order.len();
        let mut pos = vec![usize::MAX; p];
        for (k, &v) in order.iter().enumerate() {
            if v >= p || pos[v] != usize::MAX {
                return Err(Error::Domain(format!("not a permutation: {order:?}")));
            }
            pos[v] = k;
        }
        Ok(Permutation { pos, order })
    }

    /// `positions[v]` is the position assigned to node `v`.
    pub fn from_positions(positions: Vec<usize>) -> Result<Self> {
        let p = positions.len();
        let mut order = vec![usize::MAX; p];
        for (v, &k) in positions.iter().enumerate() {
            if k >= p || order[k] != usize::MAX {
                return Err(Error::Domain(format!("not a permutation: {positions:?}")));
            }
            order[k] = v;
        }
        Ok(Permutation {
            pos: positions,
            order,
        })
    }

    pub fn len(&self) -> usize {
        self.pos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pos.is_empty()
    }

    #[inline]
    pub fn position(&self, node: usize) -> usize {
        self.pos[node]
    }

    #[inline]
    pub fn node_at(&self, position: usize) -> usize {
        self.order[position]
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn inverse(&self) -> Permutation {
        Permutation {
            pos: self.order.clone(),
            order: self.pos.clone(),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.pos.iter().enumerate().all(|(v, &k)| v == k)
    }
}

/// A cover of a graph by complete node subsets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CliqueSet {
    pub cliques: Vec<Vec<usize>>,
}

impl CliqueSet {
    pub fn len(&self) -> usize {
        self.cliques.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cliques.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &[usize]> {
        self.cliques.iter().map(Vec::as_slice)
    }

    /// Every subset is complete and every node and edge is covered.
    pub fn covers(&self, g: &Graph) -> bool {
        let p = g.p();
        let mut nodes = NodeSet::empty(p);
        let mut covered = Graph::empty(p);
        for c in &self.cliques {
            if !g.is_complete_on(c) {
                return false;
            }
            for (a, &i) in c.iter().enumerate() {
                nodes.insert(i);
                for &j in &c[a + 1..] {
                    covered.add_edge(i, j);
                }
            }
        }
        nodes.len() == p && g.edges().all(|(i, j)| covered.has_edge(i, j))
    }
}


impl std::str::FromStr for CliqueCover {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "maximal" => Ok(CliqueCover::Maximal),
            "edge-pairs" => Ok(CliqueCover::EdgePairs),
            other => Err(Error::Config(format!("unknown clique cover `{other}` (maximal | edge-pairs)"))),
        }
    }
}

/// How block Gibbs covers the graph with complete subsets.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CliqueCover {
    /// All maximal cliques.
    #[default]
    Maximal,
    /// One block per edge plus singletons for isolated nodes.
    EdgePairs,
}

pub fn clique_cover(g: &Graph, cover: CliqueCover) -> CliqueSet {
    match cover {
        CliqueCover::Maximal => maximal_cliques(g),
        CliqueCover::EdgePairs => edge_pair_cover(g),
    }
}

/// All maximal complete subgraphs, found by Bron–Kerbosch with pivoting.
/// Each clique is sorted; cliques are ordered lexicographically.
pub fn maximal_cliques(g: &Graph) -> CliqueSet {
    let p = g.p();
    let mut out = Vec::new();
    let mut r = Vec::new();
    bron_kerbosch(g, &mut r, NodeSet::full(p), NodeSet::empty(p), &mut out);
    for c in &mut out {
        c.sort_unstable();
    }
    out.sort();
    CliqueSet { cliques: out }
}

fn bron_kerbosch(
    g: &Graph,
    r: &mut Vec<usize>,
    mut cand: NodeSet,
    mut excl: NodeSet,
    out: &mut Vec<Vec<usize>>,
) {
    if cand.is_empty() {
        if excl.is_empty() {
            out.push(r.clone());
        }
        return;
    }
    // pivot: node of cand ∪ excl with most neighbours in cand
    let mut both = cand.clone();
    both.union_with(&excl);
    let pivot = both
        .iter()
        .max_by_key(|&u| (g.neighbors(u).intersection(&cand).len(), std::cmp::Reverse(u)))
        .expect("non-empty");
    let branch: Vec<usize> = cand.difference(g.neighbors(pivot)).iter().collect();
    for v in branch {
        let nv = g.neighbors(v);
        r.push(v);
        bron_kerbosch(g, r, cand.intersection(nv), excl.intersection(nv), out);
        r.pop();
        cand.remove(v);
        excl.insert(v);
    }
}

pub fn edge_pair_cover(g: &Graph) -> CliqueSet {
    let mut cliques: Vec<Vec<usize>> = g.edges().map(|(i, j)| vec![i, j]).collect();
    cliques.extend((0..g.p()).filter(|&v| g.degree(v) == 0).map(|v| vec![v]));
    cliques.sort();
    CliqueSet { cliques }
}

/// Symbolic elimination of `g` in the given order. The result contains `g`
/// plus every fill edge, labelled with the original node indices.
pub fn fill_in_graph(g: &Graph, order: &Permutation) -> Graph {
    assert_eq!(order.len(), g.p());
    symbolic_elimination(g, |k| order.node_at(k), |u| order.position(u))
}

/// [`fill_in_graph`] for the identity order.
pub fn natural_fill_in_graph(g: &Graph) -> Graph {
    symbolic_elimination(g, |k| k, |u| u)
}

fn symbolic_elimination(
    g: &Graph,
    node_at: impl Fn(usize) -> usize,
    position: impl Fn(usize) -> usize,
) -> Graph {
    let mut f = g.clone();
    let mut later = Vec::with_capacity(g.p);
    for k in 0..g.p {
        let v = node_at(k);
        later.clear();
        later.extend(f.neighbors(v).iter().filter(|&u| position(u) > k));
        for (a, &i) in later.iter().enumerate() {
            for &j in &later[a + 1..] {
                f.add_edge(i, j);
            }
        }
    }
    f
}

/// Number of fill edges created by eliminating `g` in the given order.
pub fn fill_count(g: &Graph, order: &Permutation) -> usize {
    fill_in_graph(g, order).edge_count() - g.edge_count()
}

/// Eliminates the nodes flagged in `alive`, either in the given order or
/// greedily by minimum fill (ties to the lowest index). Edges to nodes not
/// flagged are ignored. Returns the order used and the number of fill edges.
fn eliminate(g: &Graph, mut alive: Vec<bool>, order: Option<&[usize]>) -> (Vec<usize>, usize) {
    let mut work = g.adj.clone();
    let count = alive.iter().filter(|&&a| a).count();
    let mut out = Vec::with_capacity(count);
    let mut nbrs = Vec::with_capacity(g.p);
    let mut fill = 0;
    let live_neighbours = |work: &[NodeSet], alive: &[bool], v: usize, buf: &mut Vec<usize>| {
        buf.clear();
        buf.extend(work[v].iter().filter(|&u| alive[u]));
    };
    for step in 0..count {
        let v = match order {
            Some(o) => o[step],
            None => {
                let mut best = (usize::MAX, usize::MAX);
                for v in (0..g.p).filter(|&v| alive[v]) {
                    live_neighbours(&work, &alive, v, &mut nbrs);
                    let mut missing = 0;
                    for (a, &i) in nbrs.iter().enumerate() {
                        missing += nbrs[a + 1..].iter().filter(|&&j| !work[i].contains(j)).count();
                    }
                    if missing < best.0 {
                        best = (missing, v);
                        if missing == 0 {
                            break;
                        }
                    }
                }
                best.1
            }
        };
        live_neighbours(&work, &alive, v, &mut nbrs);
        for (a, &i) in nbrs.iter().enumerate() {
            for &j in &nbrs[a + 1..] {
                if !work[i].contains(j) {
                    work[i].insert(j);
                    work[j].insert(i);
                    fill += 1;
                }
            }
        }
        alive[v] = false;
        out.push(v);
    }
    (out, fill)
}

/// Greedy min-fill order of the flagged nodes, or their increasing order if
/// that creates strictly less fill.
fn min_fill_order_of(g: &Graph, alive: Vec<bool>) -> Vec<usize> {
    let natural: Vec<usize> = (0..g.p).filter(|&v| alive[v]).collect();
    let (greedy, greedy_fill) = eliminate(g, alive.clone(), None);
    if greedy_fill == 0 {
        return greedy;
    }
    let (_, natural_fill) = eliminate(g, alive, Some(&natural));
    if greedy_fill > natural_fill {
        natural
    } else {
        greedy
    }
}

/// Greedy minimum-fill elimination order, ties broken by lowest node index.
/// Falls back to the identity order if the greedy result is worse.
pub fn min_fill_ordering(g: &Graph) -> Permutation {
    let order = min_fill_order_of(g, vec![true; g.p]);
    Permutation::from_order(order).expect("greedy order is a bijection")
}

/// Order that moves edge `(i, j)` to the last two positions (the smaller
/// endpoint first) and orders the remaining nodes by minimum fill of the
/// subgraph they induce.
pub fn edge_permutation(g: &Graph, i: usize, j: usize) -> Permutation {
    assert!(i != j, "edge endpoints must differ");
    let (i, j) = (i.min(j), i.max(j));
    let mut alive = vec![true; g.p];
    alive[i] = false;
    alive[j] = false;
    let mut order = min_fill_order_of(g, alive);
    order.push(i);
    order.push(j);
    Permutation::from_order(order).expect("edge permutation is a bijection")
}

/// Memo table keyed by a graph plus a few extra words. Cleared when it
/// reaches `capacity` entries.
#[derive(Clone, Debug)]
pub struct GraphMemo<T> {
    map: HashMap<Vec<u64>, T>,
    key: Vec<u64>,
    capacity: usize,
}

impl<T> Default for GraphMemo<T> {
    fn default() -> Self {
        Self::with_capacity(1 << 16)
    }
}

impl<T> GraphMemo<T> {
    pub fn with_capacity(capacity: usize) -> Self {
        GraphMemo {
            map: HashMap::new(),
            key: Vec::new(),
            capacity: capacity.max(1),
        }
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn get_or_insert_with(&mut self, g: &Graph, extra: &[u64], make: impl FnOnce() -> T) -> &T {
        self.key.clear();
        self.key.push(g.p as u64);
        self.key.extend_from_slice(extra);
        for row in &g.adj {
            self.key.extend_from_slice(row.words());
        }
        if !self.map.contains_key(self.key.as_slice()) {
            if self.map.len() >= self.capacity {
                self.map.clear();
            }
            self.map.insert(self.key.clone(), make());
        }
        &self.map[self.key.as_slice()]
    }
}

/// [`clique_cover`] behind a [`GraphMemo`].
#[derive(Clone, Debug)]
pub struct CliqueCache {
    cover: CliqueCover,
    memo: GraphMemo<CliqueSet>,
}

impl CliqueCache {
    pub fn new(cover: CliqueCover) -> Self {
        Self::with_capacity(cover, 1 << 16)
    }

    pub fn with_capacity(cover: CliqueCover, capacity: usize) -> Self {
        CliqueCache {
            cover,
            memo: GraphMemo::with_capacity(capacity),
        }
    }

    pub fn get(&mut self, g: &Graph) -> &CliqueSet {
        let cover = self.cover;
        self.memo.get_or_insert_with(g, &[], || clique_cover(g, cover))
    }
}

/// `ν_i`: number of neighbours of node `i` among nodes `i+1..p`.
pub fn nu_counts(g: &Graph) -> Vec<usize> {
    (0..g.p())
        .map(|i| g.neighbors(i).iter().filter(|&j| j > i).count())
        .collect()
}
