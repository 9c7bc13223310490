//! Immutable simple undirected graphs with dense integer vertex ids,
//! plus the instance generators used throughout the crate.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::Rng;
use thiserror::Error;

use crate::seeds;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("vertex {v} out of range (n = {n})")]
    VertexOutOfRange { v: u64, n: u32 },
    #[error("self-loop at vertex {0}")]
    SelfLoop(u32),
    #[error("duplicate edge {0} {1}")]
    DuplicateEdge(u32, u32),
    #[error("empty graph has no degree statistics")]
    EmptyGraph,
    #[error("infeasible parameters: {0}")]
    Infeasible(String),
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("generation failed after {0} attempts")]
    GenerationFailed(u32),
}

/// Sorted, deduplicated set of vertex ids.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct VertexSet(Vec<u32>);

impl VertexSet {
    pub fn new() -> Self {
        VertexSet(Vec::new())
    }

    pub fn singleton(v: u32) -> Self {
        VertexSet(vec![v])
    }

    pub fn from_unsorted(mut members: Vec<u32>) -> Self {
        members.sort_unstable();
        members.dedup();
        VertexSet(members)
    }

    /// Caller promises `members` is strictly increasing.
    pub fn from_sorted(members: Vec<u32>) -> Self {
        debug_assert!(members.windows(2).all(|w| w[0] < w[1]));
        VertexSet(members)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, v: u32) -> bool {
        self.0.binary_search(&v).is_ok()
    }

    pub fn insert(&mut self, v: u32) -> bool {
        match self.0.binary_search(&v) {
            Ok(_) => false,
            Err(i) => {
                self.0.insert(i, v);
                true
            }
        }
    }

    pub fn remove(&mut self, v: u32) -> bool {
        match self.0.binary_search(&v) {
            Ok(i) => {
                self.0.remove(i);
                true
            }
            Err(_) => false,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.0.iter().copied()
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn min(&self) -> Option<u32> {
        self.0.first().copied()
    }

    pub fn is_disjoint(&self, other: &VertexSet) -> bool {
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].cmp(&other.0[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => return false,
            }
        }
        true
    }

    pub fn union(&self, other: &VertexSet) -> VertexSet {
        let mut out = Vec::with_capacity(self.0.len() + other.0.len());
        out.extend_from_slice(&self.0);
        out.extend_from_slice(&other.0);
        VertexSet::from_unsorted(out)
    }

    pub fn into_vec(self) -> Vec<u32> {
        self.0
    }
}

impl FromIterator<u32> for VertexSet {
    fn from_iter<I: IntoIterator<Item = u32>>(iter: I) -> Self {
        VertexSet::from_unsorted(iter.into_iter().collect())
    }
}

/// Simple undirected graph. Adjacency lists are sorted ascending; each
/// edge {u,v} with u < v owns a stable id in lexicographic edge order,
/// which the percolation layer keys its coin flips on.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    n: u32,
    m: u64,
    adj: Vec<Vec<u32>>,
    /// upper_off[u] = number of edges {a,b}, a < b, with a < u; length n+1.
    upper_off: Vec<u64>,
}

impl Graph {
    pub fn empty(n: u32) -> Graph {
        Graph {
            n,
            m: 0,
            adj: vec![Vec::new(); n as usize],
            upper_off: vec![0; n as usize + 1],
        }
    }

    /// Build from an edge list in either endpoint order. Rejects
    /// self-loops, duplicates, and out-of-range endpoints.
    pub fn from_edges(n: u32, edges: &[(u32, u32)]) -> Result<Graph, GraphError> {
        let mut adj = vec![Vec::new(); n as usize];
        for &(a, b) in edges {
            if a == b {
                return Err(GraphError::SelfLoop(a));
            }
            for v in [a, b] {
                if v >= n {
                    return Err(GraphError::VertexOutOfRange { v: v as u64, n });
                }
            }
            adj[a as usize].push(b);
            adj[b as usize].push(a);
        }
        for (u, list) in adj.iter_mut().enumerate() {
            list.sort_unstable();
            if let Some(w) = list.windows(2).find(|w| w[0] == w[1]) {
                let (a, b) = (u as u32, w[0]);
                return Err(GraphError::DuplicateEdge(a.min(b), a.max(b)));
            }
        }
        Ok(Graph::from_adj(n, adj))
    }

    fn from_adj(n: u32, mut adj: Vec<Vec<u32>>) -> Graph {
        for list in &mut adj {
            if !list.is_sorted() {
                list.sort_unstable();
            }
        }
        let mut upper_off = Vec::with_capacity(n as usize + 1);
        let mut acc = 0u64;
        for (u, list) in adj.iter().enumerate() {
            upper_off.push(acc);
            let first_upper = list.partition_point(|&v| v <= u as u32);
            acc += (list.len() - first_upper) as u64;
        }
        upper_off.push(acc);
        Graph {
            n,
            m: acc,
            adj,
            upper_off,
        }
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn degree(&self, u: u32) -> u32 {
        self.adj[u as usize].len() as u32
    }

    pub fn neighbors(&self, u: u32) -> &[u32] {
        &self.adj[u as usize]
    }

    pub fn has_edge(&self, u: u32, v: u32) -> bool {
        if u >= self.n || v >= self.n || u == v {
            return false;
        }
        self.adj[u as usize].binary_search(&v).is_ok()
    }

    /// Stable id of edge {u,v} in lexicographic (min,max) order.
    pub fn edge_id(&self, u: u32, v: u32) -> Option<u64> {
        let (a, b) = (u.min(v), u.max(v));
        if !self.has_edge(a, b) {
            return None;
        }
        let list = &self.adj[a as usize];
        let first_upper = list.partition_point(|&w| w <= a);
        let pos = list.binary_search(&b).unwrap();
        Some(self.upper_off[a as usize] + (pos - first_upper) as u64)
    }

    /// Edges as (u, v) with u < v, ascending; position equals edge id.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        (0..self.n).flat_map(move |u| {
            let list = &self.adj[u as usize];
            let first_upper = list.partition_point(|&w| w <= u);
            list[first_upper..].iter().map(move |&v| (u, v))
        })
    }

    pub fn min_degree(&self) -> Result<u32, GraphError> {
        (0..self.n)
            .map(|u| self.degree(u))
            .min()
            .ok_or(GraphError::EmptyGraph)
    }

    pub fn max_degree(&self) -> u32 {
        (0..self.n).map(|u| self.degree(u)).max().unwrap_or(0)
    }

    pub fn avg_degree(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            2.0 * self.m as f64 / self.n as f64
        }
    }

    /// Connected components, largest first; ties by smallest member id.
    pub fn components(&self) -> Vec<VertexSet> {
        let mut seen = vec![false; self.n as usize];
        let mut out = Vec::new();
        let mut queue = Vec::new();
        for s in 0..self.n {
            if seen[s as usize] {
                continue;
            }
            seen[s as usize] = true;
            queue.clear();
            queue.push(s);
            let mut comp = vec![s];
            while let Some(u) = queue.pop() {
                for &v in self.neighbors(u) {
                    if !seen[v as usize] {
                        seen[v as usize] = true;
                        queue.push(v);
                        comp.push(v);
                    }
                }
            }
            comp.sort_unstable();
            out.push(VertexSet::from_sorted(comp));
        }
        out.sort_by(|a, b| b.len().cmp(&a.len()).then(a.min().cmp(&b.min())));
        out
    }

    /// Induced subgraph on `verts` with local ids 0..|verts|; second
    /// return maps local id -> original id (ascending).
    pub fn induced(&self, verts: &VertexSet) -> (Graph, Vec<u32>) {
        let map_back: Vec<u32> = verts.iter().collect();
        let local = |g: u32| verts.as_slice().binary_search(&g).ok();
        let mut adj = vec![Vec::new(); map_back.len()];
        for (lu, &gu) in map_back.iter().enumerate() {
            for &gv in self.neighbors(gu) {
                if let Some(lv) = local(gv) {
                    adj[lu].push(lv as u32);
                }
            }
        }
        (Graph::from_adj(map_back.len() as u32, adj), map_back)
    }

    /// True when both graphs share a vertex range and every edge of
    /// `self` is an edge of `host`.
    pub fn is_spanning_subgraph_of(&self, host: &Graph) -> bool {
        self.n == host.n && self.edges().all(|(u, v)| host.has_edge(u, v))
    }

    /// Is the sorted slice `verts` nonempty and connected in `self`?
    pub fn connected_within(&self, verts: &[u32]) -> bool {
        if verts.is_empty() {
            return false;
        }
        let inside = |v: u32| verts.binary_search(&v).is_ok();
        let mut seen = HashSet::new();
        seen.insert(verts[0]);
        let mut stack = vec![verts[0]];
        while let Some(u) = stack.pop() {
            for &v in self.neighbors(u) {
                if inside(v) && seen.insert(v) {
                    stack.push(v);
                }
            }
        }
        seen.len() == verts.len()
    }
}

#[derive(Clone, Debug)]
pub enum GeneratorSpec {
    Complete { n: u32 },
    CompleteBipartite { a: u32, b: u32 },
    RandomRegular { n: u32, d: u32, seed: u64 },
    Hypercube { d: u32 },
    CliqueUnion { cliques: u32, size: u32 },
    File { path: PathBuf },
}

pub fn generate(spec: &GeneratorSpec) -> Result<Graph, GraphError> {
    match *spec {
        GeneratorSpec::Complete { n } => {
            if n == 0 {
                return Err(GraphError::Infeasible(
                    "complete: n must be positive".into(),
                ));
            }
            Ok(complete(n))
        }
        GeneratorSpec::CompleteBipartite { a, b } => {
            if a == 0 || b == 0 {
                return Err(GraphError::Infeasible(
                    "complete-bipartite: both sides must be positive".into(),
                ));
            }
            Ok(complete_bipartite(a, b))
        }
        GeneratorSpec::RandomRegular { n, d, seed } => random_regular(n, d, seed).map(|(g, _)| g),
        GeneratorSpec::Hypercube { d } => {
            if d == 0 || d > 30 {
                return Err(GraphError::Infeasible(
                    "hypercube: dimension must be in 1..=30".into(),
                ));
            }
            Ok(hypercube(d))
        }
        GeneratorSpec::CliqueUnion { cliques, size } => {
            if cliques == 0 || size == 0 {
                return Err(GraphError::Infeasible(
                    "clique-union: counts must be positive".into(),
                ));
            }
            Ok(clique_union(cliques, size))
        }
        GeneratorSpec::File { ref path } => load_edge_list(path),
    }
}

pub fn complete(n: u32) -> Graph {
    let adj = (0..n)
        .map(|u| (0..n).filter(|&v| v != u).collect())
        .collect();
    Graph::from_adj(n, adj)
}

pub fn complete_bipartite(a: u32, b: u32) -> Graph {
    let n = a + b;
    let adj = (0..n)
        .map(|u| {
            if u < a {
                (a..n).collect()
            } else {
                (0..a).collect()
            }
        })
        .collect();
    Graph::from_adj(n, adj)
}

pub fn hypercube(d: u32) -> Graph {
    let n = 1u32 << d;
    let adj = (0..n)
        .map(|u| (0..d).map(|b| u ^ (1 << b)).collect())
        .collect();
    Graph::from_adj(n, adj)
}

/// Disjoint union of `cliques` copies of K_size; min degree size−1.
pub fn clique_union(cliques: u32, size: u32) -> Graph {
    let n = cliques * size;
    let adj = (0..n)
        .map(|u| {
            let base = u - u % size;
            (base..base + size).filter(|&v| v != u).collect()
        })
        .collect();
    Graph::from_adj(n, adj)
}

/// Pairing model: shuffle d stubs per vertex, match greedily while
/// refusing loops and repeats, restart on dead ends. Returns the graph
/// and the number of attempts consumed.
pub fn random_regular(n: u32, d: u32, seed: u64) -> Result<(Graph, u32), GraphError> {
    if d >= n {
        return Err(GraphError::Infeasible(format!(
            "random-regular: need d < n, got d={d}, n={n}"
        )));
    }
    if !(n as u64 * d as u64).is_multiple_of(2) {
        return Err(GraphError::Infeasible(format!(
            "random-regular: n*d must be even, got n={n}, d={d}"
        )));
    }
    let mut rng = seeds::stream(seeds::mix2(seed, 0x5e6f_0001));
    const MAX_ATTEMPTS: u32 = 1000;
    'attempt: for attempt in 1..=MAX_ATTEMPTS {
        let mut stubs: Vec<u32> = (0..n)
            .flat_map(|v| std::iter::repeat_n(v, d as usize))
            .collect();
        // Fisher-Yates via the stream rng
        for i in (1..stubs.len()).rev() {
            let j = rng.random_range(0..=i);
            stubs.swap(i, j);
        }
        let mut present: HashSet<(u32, u32)> = HashSet::with_capacity(n as usize * d as usize / 2);
        let mut edges = Vec::with_capacity(n as usize * d as usize / 2);
        while let Some(u) = stubs.pop() {
            let len = stubs.len();
            let start = if len > 1 { rng.random_range(0..len) } else { 0 };
            let mut found = None;
            for off in 0..len {
                let idx = (start + off) % len;
                let v = stubs[idx];
                if v != u && !present.contains(&(u.min(v), u.max(v))) {
                    found = Some(idx);
                    break;
                }
            }
            match found {
                Some(idx) => {
                    let v = stubs.swap_remove(idx);
                    present.insert((u.min(v), u.max(v)));
                    edges.push((u, v));
                }
                None => continue 'attempt,
            }
        }
        let g = Graph::from_edges(n, &edges)?;
        debug_assert!((0..n).all(|v| g.degree(v) == d));
        return Ok((g, attempt));
    }
    Err(GraphError::GenerationFailed(MAX_ATTEMPTS))
}

pub fn load_edge_list(path: &Path) -> Result<Graph, GraphError> {
    let shown = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| GraphError::Io {
        path: shown.clone(),
        source,
    })?;
    parse_edge_list(&text, &shown)
}

pub fn parse_edge_list(text: &str, origin: &str) -> Result<Graph, GraphError> {
    let err = |line: usize, msg: String| GraphError::Parse {
        path: origin.to_string(),
        line,
        msg,
    };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let (hline, header) = lines
        .next()
        .ok_or_else(|| err(1, "missing header line \"n m\"".into()))?;
    let mut it = header.split_whitespace();
    let n: u32 = it
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| err(hline, "expected vertex count".into()))?;
    let m: u64 = it
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| err(hline, "expected edge count".into()))?;
    if it.next().is_some() {
        return Err(err(hline, "trailing tokens after \"n m\"".into()));
    }
    let mut edges = Vec::with_capacity(m as usize);
    let mut last_line = hline;
    for (lineno, line) in lines {
        last_line = lineno;
        let mut it = line.split_whitespace();
        let (u, v): (u64, u64) = match (
            it.next().and_then(|t| t.parse().ok()),
            it.next().and_then(|t| t.parse().ok()),
            it.next(),
        ) {
            (Some(u), Some(v), None) => (u, v),
            _ => return Err(err(lineno, format!("malformed edge line {line:?}"))),
        };
        if u >= v {
            let msg = if u == v {
                format!("self-loop {u} {v}")
            } else {
                format!("endpoints out of order: {u} {v} (need u < v)")
            };
            return Err(err(lineno, msg));
        }
        if v >= n as u64 {
            return Err(err(lineno, format!("vertex {v} out of range (n = {n})")));
        }
        if edges.len() as u64 == m {
            return Err(err(lineno, format!("more than {m} edge lines")));
        }
        edges.push((u as u32, v as u32));
    }
    if (edges.len() as u64) < m {
        return Err(err(
            last_line,
            format!("expected {m} edges, found {}", edges.len()),
        ));
    }
    let mut sorted = edges.clone();
    sorted.sort_unstable();
    if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
        return Err(err(
            last_line,
            format!("duplicate edge {} {}", w[0].0, w[0].1),
        ));
    }
    Graph::from_edges(n, &edges)
}

pub fn save_edge_list(g: &Graph, path: &Path) -> Result<(), GraphError> {
    let mut text = format!("{} {}\n", g.n(), g.m());
    for (u, v) in g.edges() {
        writeln!(text, "{u} {v}").unwrap();
    }
    std::fs::write(path, text).map_err(|source| GraphError::Io {
        path: path.display().to_string(),
        source,
    })
}
