//! Dense-regime pipeline: percolate, keep the giant component, sprinkle
//! extra edges inside it, shed the highest-degree vertices, certify local
//! sparsity, distill a vertex expander, and read a complete minor off it.

use rand::Rng;
use thiserror::Error;

use crate::graph::{Graph, VertexSet};
use crate::minor::{self, MinorCertificate};
use crate::percolation::{self, PercolationError, PercolationParams};
use crate::seeds;

const SALT_P1: u64 = 0x60_0001;
const SALT_SPRINKLE: u64 = 0x60_0002;
const SALT_MINOR: u64 = 0x60_0003;
/// Heuristic searches draw from fixed streams so the pipeline is a pure
/// function of (host, params, seed).
const SPARSITY_SALT: u64 = 0x60_1001;
const EXPANDER_SALT: u64 = 0x60_1002;

/// Instances up to this many vertices get exhaustive subset searches;
/// larger ones fall back to randomized heuristics.
const EXACT_VERTEX_CAP: u32 = 24;
const SPARSITY_RESTARTS: u32 = 10_000;
const EXPANDER_PROBES: u32 = 1_000;

#[derive(Debug, Error)]
pub enum DenseError {
    #[error("bad parameters: {0}")]
    BadParams(String),
    #[error("host has {n} vertices but parameters were derived for {expected}")]
    HostMismatch { n: u32, expected: u32 },
    #[error("host min degree {min_degree} is below k = {k}")]
    HostTooSparse { min_degree: u32, k: u32 },
    #[error(transparent)]
    Percolation(#[from] PercolationError),
}

/// Constants fixed by (nu, epsilon) alone. `beta`'s closed form
/// underflows for every desk-scale input, so it is floored at 2^-40 and
/// flagged infeasible; `mu_union_bound` is likewise recorded but far too
/// small to drive the degree-shedding stage (see `MU_SPARSITY`).
#[derive(Clone, Copy, Debug)]
pub struct DerivedConstants {
    pub c1: f64,
    pub c2: f64,
    pub beta: f64,
    pub beta_feasible: bool,
    pub mu_union_bound: f64,
}

/// Operational trim fraction for the degree-shedding stage: remove
/// ceil(f(mu) * n) vertices where f(mu) = -mu ln mu, keeping the degree
/// cap 2 mu / f(mu) finite. 0.99 trims about 1% and caps degrees near
/// 199, the mildest cut that still exercises the stage.
pub const MU_SPARSITY: f64 = 0.99;

/// Default expansion demanded of the distilled witness. Kept low so
/// that near-threshold giants shed only grossly non-expanding chunks
/// (pendant bulk, long filaments) instead of being eaten whole; the
/// witness records whatever value was actually enforced.
pub const GAMMA_TARGET: f64 = 0.05;

/// Largest c2 with (e/(c1 nu)) * 2 e c2 (1 + eps/2) <= 1/2, found by
/// bisection to f64 resolution, plus the dependent constants.
pub fn derive_constants(nu: f64, epsilon: f64) -> Result<DerivedConstants, DenseError> {
    if !(nu > 0.0 && nu <= 1.0) {
        return Err(DenseError::BadParams(format!(
            "nu must lie in (0, 1], got {nu}"
        )));
    }
    if epsilon <= 0.0 || !epsilon.is_finite() {
        return Err(DenseError::BadParams(format!(
            "epsilon must be a positive real, got {epsilon}"
        )));
    }
    let e = std::f64::consts::E;
    let c1 = epsilon * epsilon / 5.0;
    let feasible = |c2: f64| (e / (c1 * nu)) * (2.0 * e * c2 * (1.0 + epsilon / 2.0)) <= 0.5;
    if !feasible(f64::MIN_POSITIVE) {
        return Err(DenseError::BadParams(format!(
            "no positive edge-density slack exists for nu = {nu}, epsilon = {epsilon}"
        )));
    }
    let c2 = if feasible(1.0) {
        1.0
    } else {
        let (mut lo, mut hi) = (f64::MIN_POSITIVE, 1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if feasible(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    let c4 = 1.0 + c2 * epsilon / 8.0;
    // largest beta with e * (e(1+eps))^c4 / nu * beta^(c4-1) <= 1/2,
    // solved in log space because c4 - 1 is minuscule
    let ln_beta = ((0.5 * nu).ln() - 1.0 - c4 * (1.0 + (1.0 + epsilon).ln())) / (c4 - 1.0);
    let floor_ln = -40.0 * std::f64::consts::LN_2;
    let beta_feasible = ln_beta >= floor_ln;
    let beta = if beta_feasible {
        ln_beta.exp().min(1.0)
    } else {
        (2.0f64).powi(-40)
    };
    let mu_union_bound = c2 * epsilon * c1 * nu / 40.0;
    Ok(DerivedConstants {
        c1,
        c2,
        beta,
        beta_feasible,
        mu_union_bound,
    })
}

#[derive(Clone, Debug)]
pub struct DenseParams {
    pub k: u32,
    pub n: u32,
    pub nu: f64,
    pub epsilon: f64,
    pub perc: PercolationParams,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    /// Global density bar for the post-shedding sparsity check; sits
    /// strictly between c4 and c3.
    pub c3_prime: f64,
    pub beta: f64,
    pub beta_feasible: bool,
    pub mu_union_bound: f64,
    pub mu_sparsity: f64,
    pub gamma_target: f64,
}

impl DenseParams {
    pub fn new(k: u32, n: u32, nu: f64, epsilon: f64) -> Result<DenseParams, DenseError> {
        if n == 0 {
            return Err(DenseError::BadParams("host size n must be positive".into()));
        }
        let derived = derive_constants(nu, epsilon)?;
        if (k as f64) < nu * n as f64 {
            return Err(DenseError::BadParams(format!(
                "k = {k} is below nu*n = {}; this route needs k >= nu*n",
                nu * n as f64
            )));
        }
        let perc = PercolationParams::new(k, epsilon)?;
        let c3 = 1.0 + derived.c2 * epsilon / 4.0;
        let c4 = 1.0 + derived.c2 * epsilon / 8.0;
        let c3_prime = 1.0 + derived.c2 * epsilon / 5.0;
        debug_assert!(c3 > c3_prime && c3_prime > c4 && c4 > 1.0);
        Ok(DenseParams {
            k,
            n,
            nu,
            epsilon,
            perc,
            c1: derived.c1,
            c2: derived.c2,
            c3,
            c4,
            c3_prime,
            beta: derived.beta,
            beta_feasible: derived.beta_feasible,
            mu_union_bound: derived.mu_union_bound,
            mu_sparsity: MU_SPARSITY,
            gamma_target: GAMMA_TARGET,
        })
    }

    pub fn f_mu(&self) -> f64 {
        -self.mu_sparsity * self.mu_sparsity.ln()
    }

    /// Post-shedding degrees should not exceed this.
    pub fn degree_cap(&self) -> f64 {
        2.0 * self.mu_sparsity / self.f_mu()
    }
}

/// Largest percolated component when it reaches c1 * k vertices.
pub fn find_giant(gp: &Graph, params: &DenseParams) -> Option<VertexSet> {
    let best = gp.components().into_iter().next()?;
    if best.len() as f64 >= params.c1 * params.k as f64 {
        Some(best)
    } else {
        None
    }
}

/// Does the host put at least c2 * k * |comp| edges inside comp?
pub fn check_component_density(host: &Graph, comp: &VertexSet, params: &DenseParams) -> bool {
    induced_edge_count(host, comp) as f64 >= params.c2 * params.k as f64 * comp.len() as f64
}

fn induced_edge_count(g: &Graph, set: &VertexSet) -> u64 {
    let mut inside = vec![false; g.n() as usize];
    for v in set.iter() {
        inside[v as usize] = true;
    }
    let mut m = 0u64;
    for u in set.iter() {
        for &v in g.neighbors(u) {
            if u < v && inside[v as usize] {
                m += 1;
            }
        }
    }
    m
}

/// Drop the ceil(f(mu) * n) highest-degree vertices, ties broken toward
/// lower ids, and reindex the rest ascending. Returns the trimmed graph
/// and the removed ids.
pub fn remove_high_degree(g: &Graph, params: &DenseParams) -> (Graph, VertexSet) {
    let n = g.n() as usize;
    let drop = ((params.f_mu() * n as f64).ceil() as usize).min(n);
    let mut order: Vec<u32> = (0..g.n()).collect();
    order.sort_by(|&a, &b| g.degree(b).cmp(&g.degree(a)).then(a.cmp(&b)));
    let removed = VertexSet::from_unsorted(order[..drop].to_vec());
    let kept: VertexSet = (0..g.n()).filter(|&v| !removed.contains(v)).collect();
    let (trimmed, _) = g.induced(&kept);
    (trimmed, removed)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SearchMode {
    /// Exhaustive subset enumeration: a pass is a proof over the
    /// searched family.
    Exact,
    /// Randomized search: a pass means no violator was found.
    Sampled,
}

#[derive(Clone, Debug)]
pub struct SparsityReport {
    pub pass: bool,
    pub global_pass: bool,
    pub small_set_pass: bool,
    pub mode: SearchMode,
    /// A set U with e(U) > c_lo |U| and |U| <= beta n, when one was found.
    pub witness: Option<VertexSet>,
}

/// Global side: e(G) >= c_hi |G|. Small-set side: every nonempty U with
/// |U| <= beta |G| has e(U) <= c_lo |U|, checked exhaustively up to
/// 24 vertices and by seeded greedy densification above that.
pub fn check_locally_sparse(g: &Graph, c_hi: f64, c_lo: f64, beta: f64) -> SparsityReport {
    let n = g.n();
    let global_pass = g.m() as f64 >= c_hi * n as f64;
    let cap = (beta * n as f64).floor() as usize;
    let (small_set_pass, mode, witness) = if cap < 1 {
        (true, SearchMode::Exact, None)
    } else if n <= EXACT_VERTEX_CAP {
        match exact_dense_subset(g, c_lo, cap) {
            Some(u) => (false, SearchMode::Exact, Some(u)),
            None => (true, SearchMode::Exact, None),
        }
    } else {
        match sampled_dense_subset(g, c_lo, cap) {
            Some(u) => (false, SearchMode::Sampled, Some(u)),
            None => (true, SearchMode::Sampled, None),
        }
    };
    SparsityReport {
        pass: global_pass && small_set_pass,
        global_pass,
        small_set_pass,
        mode,
        witness,
    }
}

fn mask_to_set(mask: u32, n: u32) -> VertexSet {
    VertexSet::from_sorted((0..n).filter(|&v| mask >> v & 1 == 1).collect())
}

fn neighbor_masks(g: &Graph) -> Vec<u32> {
    (0..g.n())
        .map(|u| g.neighbors(u).iter().fold(0u32, |m, &v| m | 1 << v))
        .collect()
}

/// First subset (DFS order) of size <= cap with more than c_lo |U| edges.
fn exact_dense_subset(g: &Graph, c_lo: f64, cap: usize) -> Option<VertexSet> {
    let n = g.n();
    let masks = neighbor_masks(g);
    // (next vertex to consider, members, size, induced edges)
    let mut stack: Vec<(u32, u32, usize, u64)> = vec![(0, 0, 0, 0)];
    while let Some((start, members, size, edges)) = stack.pop() {
        if size >= 1 && edges as f64 > c_lo * size as f64 {
            return Some(mask_to_set(members, n));
        }
        if size == cap {
            continue;
        }
        for v in start..n {
            let gained = (masks[v as usize] & members).count_ones() as u64;
            stack.push((v + 1, members | 1 << v, size + 1, edges + gained));
        }
    }
    None
}

/// Greedy densest-set search: from each start vertex (every vertex gets
/// a systematic pass, then random restarts), repeatedly pull in the
/// outside vertex with the most neighbors inside, testing the density
/// bar at every prefix size.
fn sampled_dense_subset(g: &Graph, c_lo: f64, cap: usize) -> Option<VertexSet> {
    let n = g.n() as usize;
    let mut rng = seeds::stream(SPARSITY_SALT);
    for restart in 0..SPARSITY_RESTARTS {
        let start = if (restart as usize) < n {
            restart as usize
        } else {
            rng.random_range(0..n)
        };
        let span = (cap as f64).ln() - std::f64::consts::LN_2;
        let target = if cap <= 2 {
            cap
        } else {
            (std::f64::consts::LN_2 + rng.random::<f64>() * span)
                .exp()
                .round() as usize
        }
        .clamp(2, cap);
        let mut inside = vec![false; n];
        let mut cnt = vec![0u32; n];
        let mut members = vec![start as u32];
        inside[start] = true;
        for &w in g.neighbors(start as u32) {
            cnt[w as usize] += 1;
        }
        let mut edges = 0u64;
        while members.len() < target {
            let mut best: Option<(u32, u32)> = None; // (gain, vertex)
            for v in 0..n as u32 {
                if !inside[v as usize] && cnt[v as usize] > 0 {
                    let better = match best {
                        None => true,
                        Some((bg, _)) => cnt[v as usize] > bg,
                    };
                    if better {
                        best = Some((cnt[v as usize], v));
                    }
                }
            }
            let Some((gain, v)) = best else { break };
            inside[v as usize] = true;
            members.push(v);
            edges += gain as u64;
            for &w in g.neighbors(v) {
                if !inside[w as usize] {
                    cnt[w as usize] += 1;
                }
            }
            if edges as f64 > c_lo * members.len() as f64 {
                return Some(VertexSet::from_unsorted(members));
            }
        }
    }
    None
}

#[derive(Clone, Debug)]
pub struct ExpanderWitness {
    /// Surviving vertices, in the ids of the graph handed in.
    pub vertices: VertexSet,
    /// Expansion claimed for the survivors; a proof in Exact mode, a
    /// failure-to-refute in Sampled mode.
    pub alpha: f64,
    pub mode: SearchMode,
    pub rounds: u32,
}

#[derive(Clone, Debug)]
pub struct ExpanderFailure {
    pub remaining: u32,
    pub floor: f64,
    pub rounds: u32,
}

/// Iteratively delete sets U with |U| <= |W|/2 and |N(U) ∩ W \ U| <
/// gamma |U| until no more are found; fails when fewer than beta * n
/// vertices survive. Search is exhaustive at or below 24 survivors,
/// otherwise component splits, weak singletons, spectral sweep cuts with
/// greedy refinement, and random connected probes.
pub fn extract_expander(
    g: &Graph,
    gamma: f64,
    beta: f64,
) -> Result<ExpanderWitness, ExpanderFailure> {
    assert!(gamma > 0.0, "gamma must be positive");
    assert!(beta > 0.0, "beta must be positive");
    let floor = beta * g.n() as f64;
    let mut alive: VertexSet = (0..g.n()).collect();
    let mut rng = seeds::stream(EXPANDER_SALT);
    let mut rounds = 0u32;
    loop {
        if (alive.len() as f64) < floor {
            return Err(ExpanderFailure {
                remaining: alive.len() as u32,
                floor,
                rounds,
            });
        }
        let (sub, map) = g.induced(&alive);
        let half = sub.n() as usize / 2;
        let violator = if sub.n() <= EXACT_VERTEX_CAP {
            exact_violator(&sub, gamma, half)
        } else {
            sampled_violator(&sub, gamma, half, &mut rng)
        };
        match violator {
            Some(local) => {
                rounds += 1;
                for v in local {
                    alive.remove(map[v as usize]);
                }
            }
            None => {
                let mode = if sub.n() <= EXACT_VERTEX_CAP {
                    SearchMode::Exact
                } else {
                    SearchMode::Sampled
                };
                return Ok(ExpanderWitness {
                    vertices: alive,
                    alpha: gamma,
                    mode,
                    rounds,
                });
            }
        }
    }
}

/// First subset (DFS order) violating vertex expansion gamma.
fn exact_violator(g: &Graph, gamma: f64, max_size: usize) -> Option<Vec<u32>> {
    let n = g.n();
    let masks = neighbor_masks(g);
    // (next vertex, members, union of member neighborhoods, size)
    let mut stack: Vec<(u32, u32, u32, usize)> = vec![(0, 0, 0, 0)];
    while let Some((start, members, nbrs, size)) = stack.pop() {
        if size >= 1 {
            let outside = (nbrs & !members).count_ones();
            if (outside as f64) < gamma * size as f64 {
                return Some(mask_to_set(members, n).into_vec());
            }
        }
        if size == max_size {
            continue;
        }
        for v in start..n {
            stack.push((v + 1, members | 1 << v, nbrs | masks[v as usize], size + 1));
        }
    }
    None
}

/// Incremental |N(U)| bookkeeping while a set grows one vertex at a time.
struct BoundaryTracker {
    inside: Vec<bool>,
    cnt: Vec<u32>,
    members: Vec<u32>,
    boundary: u32,
}

impl BoundaryTracker {
    fn new(n: usize) -> Self {
        BoundaryTracker {
            inside: vec![false; n],
            cnt: vec![0; n],
            members: Vec::new(),
            boundary: 0,
        }
    }

    fn add(&mut self, g: &Graph, v: u32) {
        debug_assert!(!self.inside[v as usize]);
        if self.cnt[v as usize] > 0 {
            self.boundary -= 1;
        }
        self.inside[v as usize] = true;
        self.members.push(v);
        for &w in g.neighbors(v) {
            if !self.inside[w as usize] {
                self.cnt[w as usize] += 1;
                if self.cnt[w as usize] == 1 {
                    self.boundary += 1;
                }
            }
        }
    }

    fn violates(&self, gamma: f64) -> bool {
        (self.boundary as f64) < gamma * self.members.len() as f64
    }
}

fn sampled_violator(g: &Graph, gamma: f64, half: usize, rng: &mut impl Rng) -> Option<Vec<u32>> {
    let n = g.n();
    // a disconnected piece other than the largest expands by nothing
    let comps = g.components();
    if comps.len() > 1 {
        return Some(comps[1..].iter().flat_map(|c| c.iter()).collect());
    }
    // vertices too weakly attached to count as their own U
    let singles: Vec<u32> = (0..n).filter(|&v| (g.degree(v) as f64) < gamma).collect();
    if !singles.is_empty() {
        let keep_one = (n as usize - 1).max(1);
        return Some(singles.into_iter().take(keep_one).collect());
    }
    if half == 0 {
        return None;
    }
    // spectral sweeps, best prefix kept for greedy refinement
    let order = spectral_order(g, rng);
    let rev: Vec<u32> = order.iter().rev().copied().collect();
    let mut best: Option<(f64, Vec<u32>)> = None;
    for ord in [&order, &rev] {
        let mut tracker = BoundaryTracker::new(n as usize);
        for &v in ord.iter().take(half) {
            tracker.add(g, v);
            if tracker.violates(gamma) {
                return Some(tracker.members);
            }
            let ratio = tracker.boundary as f64 / tracker.members.len() as f64;
            if best.as_ref().map(|(r, _)| ratio < *r).unwrap_or(true) {
                best = Some((ratio, tracker.members.clone()));
            }
        }
    }
    if let Some((_, seed_set)) = best {
        if let Some(u) = greedy_shrink_boundary(g, &seed_set, gamma, half) {
            return Some(u);
        }
    }
    // random connected probes
    for _ in 0..EXPANDER_PROBES {
        if let Some(u) = probe_violator(g, gamma, half, rng) {
            return Some(u);
        }
    }
    None
}

/// Power iteration for an approximate second eigenvector of the random
/// walk on g, deflating the stationary direction; vertices are returned
/// sorted by coordinate so prefixes approximate sparse cuts.
fn spectral_order(g: &Graph, rng: &mut impl Rng) -> Vec<u32> {
    let n = g.n() as usize;
    let degs: Vec<f64> = (0..g.n()).map(|v| g.degree(v) as f64).collect();
    let total: f64 = degs.iter().sum::<f64>().max(1.0);
    let mut x: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
    for _ in 0..60 {
        let drift: f64 = x.iter().zip(&degs).map(|(xi, d)| xi * d).sum::<f64>() / total;
        for xi in x.iter_mut() {
            *xi -= drift;
        }
        let mut y = vec![0.0; n];
        for u in 0..n {
            for &v in g.neighbors(u as u32) {
                y[u] += x[v as usize];
            }
            y[u] /= degs[u].max(1.0);
        }
        let norm = y.iter().fold(0.0f64, |a, &b| a.max(b.abs())).max(1e-12);
        for yi in y.iter_mut() {
            *yi /= norm;
        }
        x = y;
    }
    let mut order: Vec<u32> = (0..g.n()).collect();
    order.sort_by(|&a, &b| {
        x[a as usize]
            .partial_cmp(&x[b as usize])
            .unwrap()
            .then(a.cmp(&b))
    });
    order
}

/// From a starting set, greedily absorb the boundary vertex that shrinks
/// the boundary most, watching for a violation along the way.
fn greedy_shrink_boundary(
    g: &Graph,
    seed_set: &[u32],
    gamma: f64,
    half: usize,
) -> Option<Vec<u32>> {
    let n = g.n() as usize;
    let mut tracker = BoundaryTracker::new(n);
    for &v in seed_set {
        tracker.add(g, v);
        if tracker.members.len() <= half && tracker.violates(gamma) {
            return Some(tracker.members);
        }
    }
    while tracker.members.len() < half {
        let mut best: Option<(i64, u32)> = None; // (boundary delta, vertex)
        for v in 0..n as u32 {
            if tracker.inside[v as usize] || tracker.cnt[v as usize] == 0 {
                continue;
            }
            let newly_exposed = g
                .neighbors(v)
                .iter()
                .filter(|&&w| !tracker.inside[w as usize] && tracker.cnt[w as usize] == 0)
                .count() as i64;
            let delta = newly_exposed - 1;
            let better = match best {
                None => true,
                Some((bd, bv)) => delta < bd || (delta == bd && v < bv),
            };
            if better {
                best = Some((delta, v));
            }
        }
        let Some((_, v)) = best else { break };
        tracker.add(g, v);
        if tracker.violates(gamma) {
            return Some(tracker.members);
        }
    }
    None
}

/// One random connected set grown to a log-uniform size, tested at every
/// prefix.
fn probe_violator(g: &Graph, gamma: f64, half: usize, rng: &mut impl Rng) -> Option<Vec<u32>> {
    let n = g.n() as usize;
    let target = if half <= 1 {
        1
    } else {
        (rng.random::<f64>() * (half as f64).ln()).exp().round() as usize
    }
    .clamp(1, half);
    let mut tracker = BoundaryTracker::new(n);
    let mut frontier: Vec<u32> = Vec::new();
    let start = rng.random_range(0..n as u32);
    tracker.add(g, start);
    frontier.extend(g.neighbors(start));
    if tracker.violates(gamma) {
        return Some(tracker.members);
    }
    while tracker.members.len() < target {
        let mut picked = None;
        while !frontier.is_empty() {
            let i = rng.random_range(0..frontier.len());
            let v = frontier.swap_remove(i);
            if !tracker.inside[v as usize] {
                picked = Some(v);
                break;
            }
        }
        let Some(v) = picked else { break };
        tracker.add(g, v);
        frontier.extend(
            g.neighbors(v)
                .iter()
                .copied()
                .filter(|&w| !tracker.inside[w as usize]),
        );
        if tracker.violates(gamma) {
            return Some(tracker.members);
        }
    }
    None
}

/// Complete minor inside g restricted to the witness w: the better of a
/// direct dense extraction on g[w] and a carve-and-quotient pass (BFS
/// clusters of about sqrt(|w|) vertices, dense extraction on the cluster
/// quotient, lifted back). Ids in the certificate are g's.
pub fn expander_minor(g: &Graph, w: &VertexSet, seed: u64) -> MinorCertificate {
    assert!(!w.is_empty(), "witness must be nonempty");
    let (gw, map) = g.induced(w);
    let direct = minor::dense_minor(&gw, seeds::mix2(seed, 0x61_0001));
    let carved = carve_quotient_minor(&gw, seeds::mix2(seed, 0x61_0002));
    let best = match carved {
        Some(c) if c.order() > direct.order() => c,
        _ => direct,
    };
    debug_assert!(minor::is_valid_minor(&gw, &best));
    MinorCertificate::new(
        best.branch_sets
            .iter()
            .map(|s| s.iter().map(|v| map[v as usize]).collect())
            .collect(),
    )
}

/// Partition g into connected BFS clusters of at most ceil(sqrt(n))
/// vertices, extract a dense minor of the cluster quotient, and blow its
/// branch sets back up to vertex sets of g.
fn carve_quotient_minor(g: &Graph, seed: u64) -> Option<MinorCertificate> {
    let n = g.n();
    if n < 4 {
        return None;
    }
    let cluster_size = (seeds::isqrt(n as u64 - 1) + 1) as usize;
    let mut rng = seeds::stream(seed);
    let mut cluster_of: Vec<Option<u32>> = vec![None; n as usize];
    let mut clusters: Vec<Vec<u32>> = Vec::new();
    let mut scan: Vec<u32> = (0..n).collect();
    for i in (1..scan.len()).rev() {
        let j = rng.random_range(0..=i);
        scan.swap(i, j);
    }
    for &s in &scan {
        if cluster_of[s as usize].is_some() {
            continue;
        }
        let id = clusters.len() as u32;
        let mut queue = std::collections::VecDeque::from([s]);
        cluster_of[s as usize] = Some(id);
        let mut members = Vec::with_capacity(cluster_size);
        while let Some(u) = queue.pop_front() {
            members.push(u);
            if members.len() + queue.len() >= cluster_size {
                break;
            }
            for &v in g.neighbors(u) {
                if cluster_of[v as usize].is_none() {
                    cluster_of[v as usize] = Some(id);
                    queue.push_back(v);
                }
            }
        }
        members.extend(queue);
        clusters.push(members);
    }
    let q_n = clusters.len() as u32;
    if q_n < 2 {
        return None;
    }
    let mut q_edges: Vec<(u32, u32)> = Vec::new();
    for (u, v) in g.edges() {
        let (a, b) = (
            cluster_of[u as usize].unwrap(),
            cluster_of[v as usize].unwrap(),
        );
        if a != b {
            q_edges.push((a.min(b), a.max(b)));
        }
    }
    q_edges.sort_unstable();
    q_edges.dedup();
    let quotient = Graph::from_edges(q_n, &q_edges).expect("cluster quotient is simple");
    let q_cert = minor::dense_minor_from(&quotient, q_n, seeds::mix2(seed, 0x61_0003));
    Some(MinorCertificate::new(
        q_cert
            .branch_sets
            .iter()
            .map(|s| {
                s.iter()
                    .flat_map(|c| clusters[c as usize].iter().copied())
                    .collect()
            })
            .collect(),
    ))
}

#[derive(Clone, Debug)]
pub struct StageRecord {
    pub stage: &'static str,
    pub pass: bool,
    pub measured: f64,
    pub threshold: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DenseExit {
    Completed,
    GiantAbsent,
    ExpanderFloor,
}

impl DenseExit {
    pub fn tag(&self) -> &'static str {
        match self {
            DenseExit::Completed => "completed",
            DenseExit::GiantAbsent => "giant_absent",
            DenseExit::ExpanderFloor => "expander_floor",
        }
    }

    pub fn is_failure(&self) -> bool {
        !matches!(self, DenseExit::Completed)
    }
}

#[derive(Clone, Debug)]
pub struct DenseOutcome {
    pub certificate: MinorCertificate,
    /// Percolated-plus-sprinkled graph the certificate was verified in.
    pub realized: Graph,
    pub exit: DenseExit,
    pub stages: Vec<StageRecord>,
    pub witness_size: u32,
}

/// Union of the first-round graph with a p2 coin flip on every host edge
/// inside `comp`, keyed on host edge ids.
fn sprinkle_inside(host: &Graph, base: &Graph, comp: &VertexSet, p2: f64, seed: u64) -> Graph {
    let mut inside = vec![false; host.n() as usize];
    for v in comp.iter() {
        inside[v as usize] = true;
    }
    let kept: Vec<(u32, u32)> = host
        .edges()
        .enumerate()
        .filter(|&(id, (u, v))| {
            base.has_edge(u, v)
                || (inside[u as usize]
                    && inside[v as usize]
                    && seeds::unit_at(seed, id as u64) < p2)
        })
        .map(|(_, e)| e)
        .collect();
    Graph::from_edges(host.n(), &kept).expect("host edges stay valid")
}

/// Full pipeline run. Checks record their outcome and the run presses on;
/// only a missing giant or an expander-extraction collapse aborts early,
/// degrading to an order-1 certificate with the failing stage on record.
pub fn run_dense(g: &Graph, params: &DenseParams, seed: u64) -> Result<DenseOutcome, DenseError> {
    if g.n() != params.n {
        return Err(DenseError::HostMismatch {
            n: g.n(),
            expected: params.n,
        });
    }
    if (params.k as f64) < params.nu * params.n as f64 {
        return Err(DenseError::BadParams(format!(
            "k = {} is below nu*n = {}",
            params.k,
            params.nu * params.n as f64
        )));
    }
    let min_degree = g
        .min_degree()
        .map_err(|_| DenseError::BadParams("host graph is empty".into()))?;
    if min_degree < params.k {
        return Err(DenseError::HostTooSparse {
            min_degree,
            k: params.k,
        });
    }

    let mut stages = Vec::new();
    let gp1 = percolation::percolate(g, params.perc.p1, seeds::mix2(seed, SALT_P1));
    let comps = gp1.components();
    let giant_size = comps.first().map_or(0, |c| c.len());
    let giant_floor = params.c1 * params.k as f64;
    let giant_pass = giant_size as f64 >= giant_floor;
    stages.push(StageRecord {
        stage: "giant",
        pass: giant_pass,
        measured: giant_size as f64,
        threshold: giant_floor,
    });
    if !giant_pass {
        return Ok(degraded(gp1, DenseExit::GiantAbsent, stages));
    }
    let c0 = comps.into_iter().next().expect("giant exists");

    let host_inside = induced_edge_count(g, &c0);
    let density_floor = params.c2 * params.k as f64 * c0.len() as f64;
    stages.push(StageRecord {
        stage: "component_density",
        pass: host_inside as f64 >= density_floor,
        measured: host_inside as f64,
        threshold: density_floor,
    });

    let realized = sprinkle_inside(
        g,
        &gp1,
        &c0,
        params.perc.p2,
        seeds::mix2(seed, SALT_SPRINKLE),
    );
    let (g1, map1) = realized.induced(&c0);
    let excess_floor = params.c3 * c0.len() as f64;
    stages.push(StageRecord {
        stage: "edge_excess",
        pass: g1.m() as f64 >= excess_floor,
        measured: g1.m() as f64,
        threshold: excess_floor,
    });

    let (g2, removed) = remove_high_degree(&g1, params);
    let cap = params.degree_cap();
    stages.push(StageRecord {
        stage: "degree_cap",
        pass: (g2.max_degree() as f64) <= cap,
        measured: g2.max_degree() as f64,
        threshold: cap,
    });
    let kept: Vec<u32> = (0..g1.n()).filter(|&v| !removed.contains(v)).collect();

    let sparsity = check_locally_sparse(&g2, params.c3_prime, params.c4, params.beta);
    stages.push(StageRecord {
        stage: "local_sparsity",
        pass: sparsity.pass,
        measured: if g2.n() > 0 {
            g2.m() as f64 / g2.n() as f64
        } else {
            0.0
        },
        threshold: params.c3_prime,
    });

    match extract_expander(&g2, params.gamma_target, params.beta) {
        Err(fail) => {
            stages.push(StageRecord {
                stage: "expander",
                pass: false,
                measured: fail.remaining as f64,
                threshold: fail.floor,
            });
            Ok(degraded(realized, DenseExit::ExpanderFloor, stages))
        }
        Ok(witness) => {
            stages.push(StageRecord {
                stage: "expander",
                pass: true,
                measured: witness.vertices.len() as f64,
                threshold: params.beta * g2.n() as f64,
            });
            let witness_size = witness.vertices.len() as u32;
            let local = expander_minor(&g2, &witness.vertices, seeds::mix2(seed, SALT_MINOR));
            let certificate = MinorCertificate::new(
                local
                    .branch_sets
                    .iter()
                    .map(|s| s.iter().map(|v| map1[kept[v as usize] as usize]).collect())
                    .collect(),
            );
            assert!(
                minor::is_valid_minor(&realized, &certificate),
                "dense pipeline produced an invalid certificate"
            );
            assert!(certificate.order() <= minor::hadwiger_upper(&realized));
            Ok(DenseOutcome {
                certificate,
                realized,
                exit: DenseExit::Completed,
                stages,
                witness_size,
            })
        }
    }
}

fn degraded(realized: Graph, exit: DenseExit, stages: Vec<StageRecord>) -> DenseOutcome {
    let certificate = MinorCertificate::new(vec![VertexSet::singleton(0)]);
    debug_assert!(minor::is_valid_minor(&realized, &certificate));
    DenseOutcome {
        certificate,
        realized,
        exit,
        stages,
        witness_size: 0,
    }
}
