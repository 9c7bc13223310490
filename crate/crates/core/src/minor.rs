//! Complete-minor certificates: verification, extraction from dense
//! graphs, an exact solver for desk-sized instances, and the edge-count
//! upper bound.

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use thiserror::Error;

use crate::graph::{Graph, VertexSet};
use crate::seeds;

#[derive(Debug, Error)]
pub enum MinorError {
    #[error("branch set {set} references vertex {vertex}, out of range (n = {n})")]
    OutOfRange { set: usize, vertex: u32, n: u32 },
    #[error("exact solver caps at {cap} vertices, got {n}")]
    CapExceeded { n: u32, cap: u32 },
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
}

/// Disjoint connected branch sets, pairwise joined by at least one edge:
/// a witness that the complete graph on `order()` vertices is a minor.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MinorCertificate {
    pub branch_sets: Vec<VertexSet>,
}

impl MinorCertificate {
    pub fn new(branch_sets: Vec<VertexSet>) -> Self {
        MinorCertificate { branch_sets }
    }

    pub fn order(&self) -> u32 {
        self.branch_sets.len() as u32
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MinorViolation {
    /// Vertex appears in two branch sets.
    Overlap { a: usize, b: usize, vertex: u32 },
    /// Branch set is empty or induces a disconnected subgraph.
    Disconnected { set: usize },
    /// No edge joins the two branch sets.
    MissingAdjacency { a: usize, b: usize },
}

/// Check a certificate against the graph it claims to live in.
/// Ok(None) means valid; Ok(Some(_)) carries the first violation in
/// the order overlap, connectivity, adjacency.
pub fn verify_minor(
    g: &Graph,
    cert: &MinorCertificate,
) -> Result<Option<MinorViolation>, MinorError> {
    let t = cert.branch_sets.len();
    let mut owner: Vec<Option<u32>> = vec![None; g.n() as usize];
    let mut overlap: Option<MinorViolation> = None;
    for (i, set) in cert.branch_sets.iter().enumerate() {
        for v in set.iter() {
            if v >= g.n() {
                return Err(MinorError::OutOfRange {
                    set: i,
                    vertex: v,
                    n: g.n(),
                });
            }
            match owner[v as usize] {
                Some(prev) => {
                    let cand = MinorViolation::Overlap {
                        a: prev as usize,
                        b: i,
                        vertex: v,
                    };
                    if overlap.is_none() {
                        overlap = Some(cand);
                    }
                }
                None => owner[v as usize] = Some(i as u32),
            }
        }
    }
    if overlap.is_some() {
        return Ok(overlap);
    }
    for (i, set) in cert.branch_sets.iter().enumerate() {
        if !g.connected_within(set.as_slice()) {
            return Ok(Some(MinorViolation::Disconnected { set: i }));
        }
    }
    let mut joined = vec![false; t * t];
    for (u, v) in g.edges() {
        if let (Some(a), Some(b)) = (owner[u as usize], owner[v as usize]) {
            if a != b {
                joined[a as usize * t + b as usize] = true;
                joined[b as usize * t + a as usize] = true;
            }
        }
    }
    for a in 0..t {
        for b in a + 1..t {
            if !joined[a * t + b] {
                return Ok(Some(MinorViolation::MissingAdjacency { a, b }));
            }
        }
    }
    Ok(None)
}

pub fn is_valid_minor(g: &Graph, cert: &MinorCertificate) -> bool {
    matches!(verify_minor(g, cert), Ok(None))
}

/// Largest t with t(t-1)/2 <= m, additionally capped by n. Any valid
/// certificate order is bounded by this.
pub fn hadwiger_upper(g: &Graph) -> u32 {
    let m = g.m();
    let mut t = seeds::isqrt(1 + 8 * m).div_ceil(2);
    while t * (t - 1) / 2 > m {
        t -= 1;
    }
    while (t + 1) * t / 2 <= m {
        t += 1;
    }
    (t as u32).min(g.n())
}

/// Lower/upper bracket for the largest complete-minor order, with the
/// exact value when a solver supplied one.
#[derive(Clone, Copy, Debug)]
pub struct HadwigerBounds {
    pub lower: u32,
    pub upper: u32,
    pub exact: Option<u32>,
}

impl HadwigerBounds {
    pub fn consistent(&self) -> bool {
        self.lower <= self.upper
            && self
                .exact
                .map(|e| self.lower <= e && e <= self.upper)
                .unwrap_or(true)
    }
}

pub const EXACT_CAP: u32 = 12;

/// Exact largest complete-minor order by branch-and-bound: process the
/// lowest unused vertex, either discarding it or making it the minimum
/// of a fresh connected branch set that must touch every earlier set.
pub fn hadwiger_exact(g: &Graph) -> Result<u32, MinorError> {
    let n = g.n();
    if n > EXACT_CAP {
        return Err(MinorError::CapExceeded { n, cap: EXACT_CAP });
    }
    if n == 0 {
        return Ok(0);
    }
    let adj: Vec<u32> = (0..n)
        .map(|u| g.neighbors(u).iter().fold(0u32, |m, &v| m | (1 << v)))
        .collect();
    let full: u32 = if n == 32 { !0 } else { (1 << n) - 1 };
    let upper = hadwiger_upper(g);
    let mut best = 1u32;
    dfs_exact(&adj, full, &mut Vec::new(), &mut best, upper);
    Ok(best)
}

fn neighborhood(adj: &[u32], set: u32) -> u32 {
    let mut s = set;
    let mut out = 0;
    while s != 0 {
        let v = s.trailing_zeros();
        s &= s - 1;
        out |= adj[v as usize];
    }
    out & !set
}

fn dfs_exact(adj: &[u32], avail: u32, sets: &mut Vec<u32>, best: &mut u32, upper: u32) {
    let t = sets.len() as u32;
    if t > *best {
        *best = t;
    }
    if *best >= upper || t + avail.count_ones() <= *best {
        return;
    }
    let v = avail.trailing_zeros();
    let vbit = 1u32 << v;
    // start a new branch set whose minimum is v
    grow_sets(adj, vbit, avail & !vbit, avail & !vbit, sets, best, upper);
    // or discard v entirely
    dfs_exact(adj, avail & !vbit, sets, best, upper);
}

/// Enumerate connected supersets of `s` inside s ∪ allowed, each exactly
/// once, and recurse on those adjacent to every chosen set so far.
/// `allowed` carries the exactly-once exclusions and only governs how s
/// may still grow; `pool` is what later branch sets may draw from.
fn grow_sets(
    adj: &[u32],
    s: u32,
    allowed: u32,
    pool: u32,
    sets: &mut Vec<u32>,
    best: &mut u32,
    upper: u32,
) {
    if *best >= upper {
        return;
    }
    let nb = neighborhood(adj, s);
    if sets.iter().all(|&other| nb & other != 0) {
        sets.push(s);
        dfs_exact(adj, pool & !s, sets, best, upper);
        sets.pop();
    }
    let mut cand = nb & allowed;
    let mut banned = 0u32;
    while cand != 0 {
        let u = cand & cand.wrapping_neg();
        cand &= cand - 1;
        grow_sets(adj, s | u, allowed & !banned & !u, pool, sets, best, upper);
        banned |= u;
    }
}

/// Greedy extraction of a large complete minor from a dense graph.
/// Targets ceil(d / sqrt(max(ln d, 1))) branch sets for average degree
/// d, backing off geometrically until a verified certificate appears;
/// a single branch set always succeeds. Unassigned vertices adjacent to
/// every set join as extra singletons at the end.
pub fn dense_minor(g: &Graph, seed: u64) -> MinorCertificate {
    assert!(g.n() > 0, "dense_minor needs a nonempty graph");
    let d = g.avg_degree();
    let target = if d <= 1.0 {
        1
    } else {
        (d / d.ln().max(1.0).sqrt()).ceil() as u32
    };
    dense_minor_from(g, target, seed)
}

/// Same extraction, driven from an explicit initial target.
pub fn dense_minor_from(g: &Graph, target: u32, seed: u64) -> MinorCertificate {
    assert!(g.n() > 0, "dense_minor_from needs a nonempty graph");
    let mut t = target.clamp(1, g.n());
    loop {
        for attempt in 0..3u64 {
            if let Some(mut cert) = try_assemble(g, t, seeds::mix3(seed, t as u64, attempt)) {
                augment_with_universal_singletons(g, &mut cert);
                debug_assert!(is_valid_minor(g, &cert));
                return cert;
            }
        }
        if t == 1 {
            // unreachable in practice: a single branch set of one vertex
            // is always valid
            return MinorCertificate::new(vec![VertexSet::singleton(0)]);
        }
        t = (t - 1).min(((t as f64) * 0.9).ceil() as u32);
    }
}

fn try_assemble(g: &Graph, t: u32, seed: u64) -> Option<MinorCertificate> {
    let n = g.n() as usize;
    let t = t as usize;
    if t > n {
        return None;
    }
    let mut rng = seeds::stream(seed);
    // seed branch sets on high-degree vertices; later attempts shuffle
    // within the top slice for variety
    let mut by_degree: Vec<u32> = (0..g.n()).collect();
    by_degree.sort_by_key(|&v| (std::cmp::Reverse(g.degree(v)), v));
    let slice_len = (2 * t).min(n);
    by_degree[..slice_len].shuffle(&mut rng);
    let seeds_slice = &by_degree[..t];

    let mut owner: Vec<Option<u32>> = vec![None; n];
    for (i, &v) in seeds_slice.iter().enumerate() {
        owner[v as usize] = Some(i as u32);
    }
    let mut joined = vec![false; t * t];
    let join = |joined: &mut Vec<bool>, a: usize, b: usize| {
        joined[a * t + b] = true;
        joined[b * t + a] = true;
    };
    for (u, v) in g.edges() {
        if let (Some(a), Some(b)) = (owner[u as usize], owner[v as usize]) {
            if a != b {
                join(&mut joined, a as usize, b as usize);
            }
        }
    }

    // positive-gain passes: attach a free vertex to an adjacent set when
    // it newly joins that set to others
    let mut free: Vec<u32> = (0..g.n())
        .filter(|&v| owner[v as usize].is_none())
        .collect();
    loop {
        free.shuffle(&mut rng);
        let mut assigned_any = false;
        let mut still_free = Vec::with_capacity(free.len());
        for &v in &free {
            let mut touched: Vec<u32> = g
                .neighbors(v)
                .iter()
                .filter_map(|&w| owner[w as usize])
                .collect();
            touched.sort_unstable();
            touched.dedup();
            let mut best: Option<(usize, u32)> = None; // (gain, set)
            for &s in &touched {
                let gain = touched
                    .iter()
                    .filter(|&&o| o != s && !joined[s as usize * t + o as usize])
                    .count();
                if gain > 0
                    && best
                        .map(|(bg, bs)| gain > bg || (gain == bg && s < bs))
                        .unwrap_or(true)
                {
                    best = Some((gain, s));
                }
            }
            if let Some((_, s)) = best {
                owner[v as usize] = Some(s);
                for &o in &touched {
                    if o != s {
                        join(&mut joined, s as usize, o as usize);
                    }
                }
                assigned_any = true;
            } else {
                still_free.push(v);
            }
        }
        free = still_free;
        if !assigned_any {
            break;
        }
    }

    // route the remaining missing pairs through free vertices
    for a in 0..t {
        for b in a + 1..t {
            if joined[a * t + b] {
                continue;
            }
            connect_via_free(g, a as u32, b as u32, &mut owner, &mut joined, t)?;
        }
    }

    let mut members: Vec<Vec<u32>> = vec![Vec::new(); t];
    for (v, o) in owner.iter().enumerate() {
        if let Some(s) = o {
            members[*s as usize].push(v as u32);
        }
    }
    let cert = MinorCertificate::new(members.into_iter().map(VertexSet::from_unsorted).collect());
    if is_valid_minor(g, &cert) {
        Some(cert)
    } else {
        None
    }
}

/// BFS from set `a` through unowned vertices until one touches set `b`;
/// the discovered path is absorbed into `a`. Updates every pair newly
/// joined by the absorbed vertices.
fn connect_via_free(
    g: &Graph,
    a: u32,
    b: u32,
    owner: &mut [Option<u32>],
    joined: &mut [bool],
    t: usize,
) -> Option<()> {
    let n = g.n() as usize;
    let mut prev: Vec<Option<u32>> = vec![None; n];
    let mut queue: std::collections::VecDeque<u32> = std::collections::VecDeque::new();
    let mut seen = vec![false; n];
    for v in 0..g.n() {
        if owner[v as usize] == Some(a) {
            seen[v as usize] = true;
            queue.push_back(v);
        }
    }
    let mut hit: Option<u32> = None;
    'bfs: while let Some(u) = queue.pop_front() {
        for &w in g.neighbors(u) {
            match owner[w as usize] {
                Some(o) if o == b && owner[u as usize].is_none() => {
                    hit = Some(u);
                    break 'bfs;
                }
                None if !seen[w as usize] => {
                    seen[w as usize] = true;
                    prev[w as usize] = Some(u);
                    queue.push_back(w);
                }
                _ => {}
            }
        }
    }
    let mut cur = hit?;
    // absorb the path back to set a
    while owner[cur as usize].is_none() {
        owner[cur as usize] = Some(a);
        let mut touched: Vec<u32> = g
            .neighbors(cur)
            .iter()
            .filter_map(|&w| owner[w as usize])
            .collect();
        touched.sort_unstable();
        touched.dedup();
        for &o in &touched {
            if o != a {
                joined[a as usize * t + o as usize] = true;
                joined[o as usize * t + a as usize] = true;
            }
        }
        match prev[cur as usize] {
            Some(p) => cur = p,
            None => break,
        }
    }
    Some(())
}

fn augment_with_universal_singletons(g: &Graph, cert: &mut MinorCertificate) {
    let mut owner: Vec<bool> = vec![false; g.n() as usize];
    for set in &cert.branch_sets {
        for v in set.iter() {
            owner[v as usize] = true;
        }
    }
    for v in 0..g.n() {
        if owner[v as usize] {
            continue;
        }
        let touches_all = cert
            .branch_sets
            .iter()
            .all(|set| g.neighbors(v).iter().any(|&w| set.contains(w)));
        if touches_all {
            cert.branch_sets.push(VertexSet::singleton(v));
            owner[v as usize] = true;
        }
    }
}

pub fn save_certificate(cert: &MinorCertificate, path: &Path) -> Result<(), MinorError> {
    let mut text = format!("{}\n", cert.order());
    for set in &cert.branch_sets {
        let ids: Vec<String> = set.iter().map(|v| v.to_string()).collect();
        writeln!(text, "{}", ids.join(" ")).unwrap();
    }
    std::fs::write(path, text).map_err(|source| MinorError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_certificate(path: &Path) -> Result<MinorCertificate, MinorError> {
    let shown = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| MinorError::Io {
        path: shown.clone(),
        source,
    })?;
    parse_certificate(&text, &shown)
}

pub fn parse_certificate(text: &str, origin: &str) -> Result<MinorCertificate, MinorError> {
    let err = |line: usize, msg: String| MinorError::Parse {
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
        .ok_or_else(|| err(1, "missing order line".into()))?;
    let t: usize = header
        .parse()
        .map_err(|_| err(hline, format!("expected branch-set count, got {header:?}")))?;
    let mut branch_sets = Vec::with_capacity(t);
    let mut last = hline;
    for (lineno, line) in lines {
        last = lineno;
        if branch_sets.len() == t {
            return Err(err(lineno, format!("more than {t} branch-set lines")));
        }
        let mut ids = Vec::new();
        for tok in line.split_whitespace() {
            let v: u32 = tok
                .parse()
                .map_err(|_| err(lineno, format!("bad vertex id {tok:?}")))?;
            ids.push(v);
        }
        branch_sets.push(VertexSet::from_unsorted(ids));
    }
    if branch_sets.len() < t {
        return Err(err(
            last,
            format!("expected {t} branch sets, found {}", branch_sets.len()),
        ));
    }
    Ok(MinorCertificate::new(branch_sets))
}
