//! Directed acyclic graphs and skeletons over a fixed, ordered node set.
//!
//! Node order is the declaration order of the [`NodeSet`]; every iteration,
//! canonical edge ordering and tie-break in the crate follows it.

use std::collections::{BTreeSet, BinaryHeap};
use std::cmp::Reverse;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("duplicate node name `{0}`")]
    DuplicateNode(String),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("node index {index} out of range for {len} nodes")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("self-loop on node {0}")]
    SelfLoop(usize),
    #[error("duplicate edge {0} -> {1}")]
    DuplicateEdge(usize, usize),
    #[error("edge {0} -> {1} not present")]
    MissingEdge(usize, usize),
    #[error("cycle detected: {0:?}")]
    Cycle(Vec<usize>),
    #[error("node sets differ")]
    NodeSetMismatch,
}

/// Ordered list of distinct variable names.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct NodeSet {
    names: Vec<String>,
}

impl NodeSet {
    pub fn new<I, S>(names: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        let mut seen = BTreeSet::new();
        for name in &names {
            if !seen.insert(name.as_str()) {
                return Err(GraphError::DuplicateNode(name.clone()));
            }
        }
        Ok(Self { names })
    }

    /// Nodes named `A`, `B`, ... (then `N26`, `N27`, ... past `Z`).
    pub fn lettered(n: usize) -> Self {
        let names = (0..n)
            .map(|i| {
                if i < 26 {
                    char::from(b'A' + i as u8).to_string()
                } else {
                    format!("N{i}")
                }
            })
            .collect();
        Self { names }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, index: usize) -> &str {
        &self.names[index]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn require(&self, name: &str) -> Result<usize, GraphError> {
        self.index_of(name)
            .ok_or_else(|| GraphError::UnknownNode(name.to_string()))
    }

    /// Number of unordered node pairs, `N(N-1)/2`.
    pub fn pair_count(&self) -> usize {
        pair_count(self.len())
    }
}

impl TryFrom<Vec<String>> for NodeSet {
    type Error = GraphError;

    fn try_from(names: Vec<String>) -> Result<Self, Self::Error> {
        NodeSet::new(names)
    }
}

impl From<NodeSet> for Vec<String> {
    fn from(nodes: NodeSet) -> Self {
        nodes.names
    }
}

/// Unordered pair of distinct nodes, stored with `lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "[usize; 2]", try_from = "[usize; 2]")]
pub struct NodePair {
    lo: usize,
    hi: usize,
}

impl NodePair {
    /// Panics if `a == b`.
    pub fn new(a: usize, b: usize) -> Self {
        assert_ne!(a, b, "a node pair needs two distinct nodes");
        Self {
            lo: a.min(b),
            hi: a.max(b),
        }
    }

    pub fn lo(self) -> usize {
        self.lo
    }

    pub fn hi(self) -> usize {
        self.hi
    }

    /// Position of this pair in the canonical enumeration for `n` nodes.
    pub fn index(self, n: usize) -> usize {
        // pairs (0, 1..n), (1, 2..n), ...
        self.lo * (2 * n - self.lo - 1) / 2 + (self.hi - self.lo - 1)
    }
}

impl From<NodePair> for [usize; 2] {
    fn from(p: NodePair) -> Self {
        [p.lo, p.hi]
    }
}

impl TryFrom<[usize; 2]> for NodePair {
    type Error = GraphError;

    fn try_from([a, b]: [usize; 2]) -> Result<Self, Self::Error> {
        if a == b {
            return Err(GraphError::SelfLoop(a));
        }
        Ok(NodePair::new(a, b))
    }
}

impl fmt::Display for NodePair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}, {}}}", self.lo, self.hi)
    }
}

pub fn pair_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// All `N(N-1)/2` unordered pairs in lexicographic index order.
pub fn enumerate_possible_edges(n: usize) -> Vec<NodePair> {
    let mut out = Vec::with_capacity(pair_count(n));
    for lo in 0..n {
        for hi in lo + 1..n {
            out.push(NodePair { lo, hi });
        }
    }
    out
}

/// Kahn's algorithm with a min-heap so ties resolve to the smallest index.
///
/// On failure the error carries one directed cycle, as a node sequence whose
/// last element points back to the first.
pub fn topological_sort(n: usize, edges: &[(usize, usize)]) -> Result<Vec<usize>, GraphError> {
    let mut children = vec![Vec::new(); n];
    let mut indegree = vec![0usize; n];
    for &(u, v) in edges {
        for index in [u, v] {
            if index >= n {
                return Err(GraphError::IndexOutOfRange { index, len: n });
            }
        }
        if u == v {
            return Err(GraphError::Cycle(vec![u]));
        }
        children[u].push(v);
        indegree[v] += 1;
    }
    let mut heap: BinaryHeap<Reverse<usize>> = (0..n)
        .filter(|&i| indegree[i] == 0)
        .map(Reverse)
        .collect();
    let mut order = Vec::with_capacity(n);
    while let Some(Reverse(u)) = heap.pop() {
        order.push(u);
        for &v in &children[u] {
            indegree[v] -= 1;
            if indegree[v] == 0 {
                heap.push(Reverse(v));
            }
        }
    }
    if order.len() == n {
        return Ok(order);
    }
    Err(GraphError::Cycle(find_cycle(&children, &indegree)))
}

/// Every node with positive residual indegree has a predecessor that is also
/// left over, so walking predecessors from any of them must revisit a node.
fn find_cycle(children: &[Vec<usize>], indegree: &[usize]) -> Vec<usize> {
    let n = children.len();
    let mut pred = vec![usize::MAX; n];
    for u in 0..n {
        if indegree[u] == 0 {
            continue;
        }
        for &v in &children[u] {
            if indegree[v] > 0 && pred[v] == usize::MAX {
                pred[v] = u;
            }
        }
    }
    let start = (0..n).find(|&i| indegree[i] > 0).expect("residual node");
    let mut seen = vec![false; n];
    let mut cur = start;
    while !seen[cur] {
        seen[cur] = true;
        cur = pred[cur];
    }
    let mut cycle = vec![cur];
    let mut walk = pred[cur];
    while walk != cur {
        cycle.push(walk);
        walk = pred[walk];
    }
    cycle.reverse();
    cycle
}

/// A directed acyclic graph. Parent and child lists are kept sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dag {
    nodes: NodeSet,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
}

impl Dag {
    pub fn empty(nodes: NodeSet) -> Self {
        let n = nodes.len();
        Self {
            nodes,
            parents: vec![Vec::new(); n],
            children: vec![Vec::new(); n],
        }
    }

    pub fn from_edges(nodes: NodeSet, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        let n = nodes.len();
        let mut dag = Dag::empty(nodes);
        for &(u, v) in edges {
            dag.check_pair(u, v)?;
            if dag.has_edge(u, v) {
                return Err(GraphError::DuplicateEdge(u, v));
            }
            dag.insert(u, v);
        }
        let all: Vec<_> = dag.edges().collect();
        topological_sort(n, &all)?;
        Ok(dag)
    }

    pub fn from_named_edges<S: AsRef<str>>(
        nodes: NodeSet,
        edges: &[(S, S)],
    ) -> Result<Self, GraphError> {
        let indexed = edges
            .iter()
            .map(|(a, b)| Ok((nodes.require(a.as_ref())?, nodes.require(b.as_ref())?)))
            .collect::<Result<Vec<_>, GraphError>>()?;
        Dag::from_edges(nodes, &indexed)
    }

    pub fn nodes(&self) -> &NodeSet {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.parents.iter().map(Vec::len).sum()
    }

    pub fn parents(&self, node: usize) -> &[usize] {
        &self.parents[node]
    }

    pub fn children(&self, node: usize) -> &[usize] {
        &self.children[node]
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.children[from].binary_search(&to).is_ok()
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.has_edge(a, b) || self.has_edge(b, a)
    }

    /// Edges sorted by (parent, child).
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.children
            .iter()
            .enumerate()
            .flat_map(|(u, cs)| cs.iter().map(move |&v| (u, v)))
    }

    /// True if `to` is reachable from `from` along directed edges.
    /// A node reaches itself.
    pub fn reaches(&self, from: usize, to: usize) -> bool {
        if from == to {
            return true;
        }
        let mut seen = vec![false; self.node_count()];
        let mut stack = vec![from];
        seen[from] = true;
        while let Some(u) = stack.pop() {
            for &v in &self.children[u] {
                if v == to {
                    return true;
                }
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        false
    }

    /// Whether `from -> to` could be added without breaking any invariant.
    pub fn can_add_edge(&self, from: usize, to: usize) -> bool {
        from != to && !self.adjacent(from, to) && !self.reaches(to, from)
    }

    /// Whether the existing edge `from -> to` could be reversed while staying acyclic.
    pub fn can_reverse_edge(&self, from: usize, to: usize) -> bool {
        if !self.has_edge(from, to) {
            return false;
        }
        // another path from -> ... -> to would close a cycle with to -> from
        let mut seen = vec![false; self.node_count()];
        let mut stack: Vec<usize> = self.children[from]
            .iter()
            .copied()
            .filter(|&c| c != to)
            .collect();
        for &s in &stack {
            seen[s] = true;
        }
        while let Some(u) = stack.pop() {
            if u == to {
                return false;
            }
            for &v in &self.children[u] {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        true
    }

    pub fn add_edge(&mut self, from: usize, to: usize) -> Result<(), GraphError> {
        self.check_pair(from, to)?;
        if self.has_edge(from, to) {
            return Err(GraphError::DuplicateEdge(from, to));
        }
        if self.reaches(to, from) {
            return Err(GraphError::Cycle(self.path(to, from)));
        }
        self.insert(from, to);
        Ok(())
    }

    pub fn remove_edge(&mut self, from: usize, to: usize) -> Result<(), GraphError> {
        self.check_pair(from, to)?;
        if !self.has_edge(from, to) {
            return Err(GraphError::MissingEdge(from, to));
        }
        self.erase(from, to);
        Ok(())
    }

    pub fn reverse_edge(&mut self, from: usize, to: usize) -> Result<(), GraphError> {
        self.check_pair(from, to)?;
        if !self.has_edge(from, to) {
            return Err(GraphError::MissingEdge(from, to));
        }
        if !self.can_reverse_edge(from, to) {
            self.erase(from, to);
            let cycle = self.path(from, to);
            self.insert(from, to);
            return Err(GraphError::Cycle(cycle));
        }
        self.erase(from, to);
        self.insert(to, from);
        Ok(())
    }

    pub fn topological_order(&self) -> Vec<usize> {
        let edges: Vec<_> = self.edges().collect();
        topological_sort(self.node_count(), &edges).expect("Dag invariant: acyclic")
    }

    pub fn skeleton(&self) -> Skeleton {
        skeleton_of(self)
    }

    fn check_pair(&self, u: usize, v: usize) -> Result<(), GraphError> {
        let len = self.node_count();
        for index in [u, v] {
            if index >= len {
                return Err(GraphError::IndexOutOfRange { index, len });
            }
        }
        if u == v {
            return Err(GraphError::SelfLoop(u));
        }
        Ok(())
    }

    fn insert(&mut self, u: usize, v: usize) {
        let c = &mut self.children[u];
        let at = c.binary_search(&v).unwrap_err();
        c.insert(at, v);
        let p = &mut self.parents[v];
        let at = p.binary_search(&u).unwrap_err();
        p.insert(at, u);
    }

    fn erase(&mut self, u: usize, v: usize) {
        let c = &mut self.children[u];
        let at = c.binary_search(&v).unwrap();
        c.remove(at);
        let p = &mut self.parents[v];
        let at = p.binary_search(&u).unwrap();
        p.remove(at);
    }

    /// One directed path `from ~> to`, assuming it exists.
    fn path(&self, from: usize, to: usize) -> Vec<usize> {
        let mut prev = vec![usize::MAX; self.node_count()];
        let mut stack = vec![from];
        prev[from] = from;
        while let Some(u) = stack.pop() {
            if u == to {
                break;
            }
            for &v in &self.children[u] {
                if prev[v] == usize::MAX {
                    prev[v] = u;
                    stack.push(v);
                }
            }
        }
        let mut path = vec![to];
        let mut cur = to;
        while cur != from && prev[cur] != usize::MAX {
            cur = prev[cur];
            path.push(cur);
        }
        path.reverse();
        path
    }
}

/// Undirected projection of a graph: a set of node pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Skeleton {
    nodes: NodeSet,
    edges: BTreeSet<NodePair>,
}

impl Skeleton {
    pub fn new(nodes: NodeSet, edges: impl IntoIterator<Item = NodePair>) -> Result<Self, GraphError> {
        let edges: BTreeSet<NodePair> = edges.into_iter().collect();
        let len = nodes.len();
        if let Some(bad) = edges.iter().find(|e| e.hi() >= len) {
            return Err(GraphError::IndexOutOfRange { index: bad.hi(), len });
        }
        Ok(Self { nodes, edges })
    }

    pub fn nodes(&self) -> &NodeSet {
        &self.nodes
    }

    pub fn edges(&self) -> &BTreeSet<NodePair> {
        &self.edges
    }

    pub fn contains(&self, pair: NodePair) -> bool {
        self.edges.contains(&pair)
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }
}

pub fn skeleton_of(dag: &Dag) -> Skeleton {
    Skeleton {
        nodes: dag.nodes.clone(),
        edges: dag.edges().map(|(u, v)| NodePair::new(u, v)).collect(),
    }
}
