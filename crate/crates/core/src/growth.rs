//! Frontier-growth extraction: seed a small binary tree under the
//! first-round percolation, branch layer by layer while keeping every
//! frontier edge unexposed, stop when some layer sees enough host edges
//! packed into the grown structure, then hand that edge reservoir to the
//! piece-contraction pipeline at the second-round rate.

use rand::Rng;
use thiserror::Error;

use crate::graph::{Graph, VertexSet};
use crate::minor::{is_valid_minor, MinorCertificate};
use crate::percolation::{EdgeOracle, PercolationError, PercolationParams};
use crate::seeds;
use crate::sprinkling::{extract, SprinklingInstance};
use crate::tree::{tree_partition, RootedTree};

#[derive(Debug, Error)]
pub enum GrowthError {
    #[error("bad parameters: {0}")]
    BadParams(String),
    #[error("host minimum degree {min_degree} is below k = {k}")]
    HostTooSparse { min_degree: u32, k: u32 },
    #[error(transparent)]
    Percolation(#[from] PercolationError),
}

/// Knobs of the growth process. Defaults follow the asymptotic recipe
/// with floors that keep desk-scale runs meaningful; delta, the star
/// cap, and the seed-tree size accept explicit overrides.
#[derive(Clone, Copy, Debug)]
pub struct GrowthParams {
    pub k: u32,
    pub epsilon: f64,
    pub perc: PercolationParams,
    /// N: target size of the seed tree (floored at 3)
    pub seed_tree_size: u32,
    /// K: max children adopted per frontier vertex (floored at 2)
    pub star_cap: u32,
    /// density threshold scale; reservoirs trigger at delta*k edges
    pub delta: f64,
    /// clamped per-attempt success-rate proxy driving the seed budget
    pub gamma: f64,
}

impl GrowthParams {
    pub fn new(k: u32, epsilon: f64) -> Result<Self, GrowthError> {
        Self::with_overrides(k, epsilon, None, None, None)
    }

    pub fn with_overrides(
        k: u32,
        epsilon: f64,
        delta: Option<f64>,
        star_cap: Option<u32>,
        seed_tree_size: Option<u32>,
    ) -> Result<Self, GrowthError> {
        let perc = PercolationParams::new(k, epsilon)?;
        let lll = (k as f64).ln().ln().ln();
        let n_default = if lll.is_finite() {
            lll.ceil().max(3.0) as u32
        } else {
            3
        };
        let seed_tree_size = seed_tree_size.unwrap_or(n_default).max(3);
        let k_default = (4.0 * (1.0 / epsilon).ln()).ceil().max(2.0) as u32;
        let star_cap = star_cap.unwrap_or(k_default).max(2);
        let delta_cap = epsilon * epsilon / 100.0;
        let delta = delta.unwrap_or(delta_cap.min(0.01));
        if !(delta > 0.0 && delta <= delta_cap) {
            return Err(GrowthError::BadParams(format!(
                "delta must lie in (0, epsilon^2/100 = {delta_cap}], got {delta}"
            )));
        }
        let gamma = (1.0 - 2.0 * (epsilon - 1.0).exp()).clamp(0.05, 0.95);
        Ok(GrowthParams {
            k,
            epsilon,
            perc,
            seed_tree_size,
            star_cap,
            delta,
            gamma,
        })
    }

    /// Seed attempts allowed before giving up, gamma^{-N} * N, saturated
    /// to keep the arithmetic finite; the vertex pool is the real cap.
    pub fn seed_budget(&self) -> u64 {
        let raw = self.gamma.powi(-(self.seed_tree_size as i32)) * self.seed_tree_size as f64;
        if raw >= 1e9 {
            1_000_000_000
        } else {
            raw.ceil() as u64
        }
    }
}

/// Mutable state of one growth run. The tree holds every adopted vertex
/// (frontier included); `discarded` marks vertices burned by failed
/// seed attempts.
pub struct GrowthState<'g> {
    pub oracle: EdgeOracle<'g>,
    pub tree: RootedTree,
    /// ascending; every member is a tree leaf with all outside edges unexposed
    pub frontier: Vec<u32>,
    pub in_tree: Vec<bool>,
    pub discarded: Vec<bool>,
    pub discarded_count: u32,
    pub step: u32,
}

impl std::fmt::Debug for GrowthState<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GrowthState")
            .field("step", &self.step)
            .field("tree", &self.tree.len())
            .field("frontier", &self.frontier.len())
            .field("discarded", &self.discarded_count)
            .finish()
    }
}

impl<'g> GrowthState<'g> {
    fn host(&self) -> &'g Graph {
        self.oracle.host()
    }

    fn host_degree_into(&self, s: u32, member: impl Fn(u32) -> bool) -> u64 {
        self.host()
            .neighbors(s)
            .iter()
            .filter(|&&w| member(w))
            .count() as u64
    }
}

pub struct InitFailure<'g> {
    pub oracle: EdgeOracle<'g>,
    pub attempts: u64,
    pub discarded: u32,
}

impl std::fmt::Debug for InitFailure<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("InitFailure")
            .field("attempts", &self.attempts)
            .field("discarded", &self.discarded)
            .finish()
    }
}

/// Grow the seed tree: a chain of trials, each picking a fresh root,
/// exposing pool edges one at a time until the root finds one child and
/// every later processed leaf finds two. A trial that runs dry moves its
/// partial tree into the discard pile.
pub fn initial_phase<'g>(
    params: &GrowthParams,
    mut oracle: EdgeOracle<'g>,
    seed: u64,
) -> Result<GrowthState<'g>, InitFailure<'g>> {
    let host = oracle.host();
    let n = host.n() as usize;
    let mut rng = seeds::stream(seeds::mix2(seed, 0x9e0_0001));
    let mut discarded = vec![false; n];
    let mut discarded_count = 0u32;
    let budget = params.seed_budget();
    let mut attempts = 0u64;
    while attempts < budget {
        let unused: Vec<u32> = (0..host.n()).filter(|&v| !discarded[v as usize]).collect();
        if unused.is_empty() {
            break;
        }
        attempts += 1;
        let root = unused[rng.random_range(0..unused.len())];
        let mut tree = RootedTree::new(root);
        let mut in_tree = vec![false; n];
        in_tree[root as usize] = true;
        // process leaves in adoption order; the root wants one child,
        // later leaves want two
        let mut pending = std::collections::VecDeque::from([root]);
        let mut ok = true;
        while (tree.len() as u32) < params.seed_tree_size {
            let v = match pending.pop_front() {
                Some(v) => v,
                None => {
                    ok = false;
                    break;
                }
            };
            let quota = if v == root { 1 } else { 2 };
            let mut found = 0;
            for &w in host.neighbors(v) {
                if in_tree[w as usize] || discarded[w as usize] {
                    continue;
                }
                if oracle.query(v, w).expect("host edge") {
                    tree.add_leaf(v, w).expect("fresh vertex");
                    in_tree[w as usize] = true;
                    pending.push_back(w);
                    found += 1;
                    if found == quota {
                        break;
                    }
                }
            }
            if found < quota {
                ok = false;
                break;
            }
        }
        if !ok {
            for v in tree.vertices() {
                discarded[v as usize] = true;
                discarded_count += 1;
            }
            continue;
        }
        // unprocessed leaves become the frontier: at least half the tree
        let mut frontier: Vec<u32> = pending.into_iter().collect();
        frontier.sort_unstable();
        debug_assert!(frontier.len() * 4 >= tree.len());
        return Ok(GrowthState {
            oracle,
            tree,
            frontier,
            in_tree,
            discarded,
            discarded_count,
            step: 0,
        });
    }
    Err(InitFailure {
        oracle,
        attempts,
        discarded: discarded_count,
    })
}

/// One branching step.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LayerResult {
    /// frontier replaced by the adopted children
    Continue { saturated: u32, bad: u32 },
    /// enough frontier vertices see delta*k host edges into the tree;
    /// the tree itself is the reservoir
    DenseWithinTree { saturated: Vec<u32> },
    /// enough skipped vertices see delta*k host edges into the new
    /// frontier; the tree with this layer's partial stars is the
    /// reservoir
    DenseAtLayer { bad: Vec<u32> },
    /// the new frontier came up short of the (1+eps/8) factor
    Stalled,
}

/// Advance the frontier one layer, maintaining: (a) the frontier stays
/// an epsilon/16 share of the tree, (b) frontier outside edges are
/// unexposed, (c) tree degrees stay <= star_cap + 1.
pub fn grow_layer(params: &GrowthParams, state: &mut GrowthState) -> LayerResult {
    let host = state.host();
    let frontier = state.frontier.clone();
    let st = frontier.len();
    assert!(st > 0, "layer needs a nonempty frontier");
    assert!(
        st as f64 >= params.epsilon / 16.0 * state.tree.len() as f64,
        "frontier share invariant broken on entry"
    );
    assert!(state.tree.max_degree() <= params.star_cap + 1);
    let dk = params.delta * params.k as f64;

    // saturated vertices: host edges into the current tree reach delta*k
    let saturated: Vec<u32> = frontier
        .iter()
        .copied()
        .filter(|&s| state.host_degree_into(s, |w| state.in_tree[w as usize]) as f64 >= dk)
        .collect();
    if saturated.len() as f64 >= params.delta * st as f64 {
        return LayerResult::DenseWithinTree { saturated };
    }

    let mut in_new = vec![false; host.n() as usize];
    let mut new_frontier: Vec<u32> = Vec::new();
    let mut bad: Vec<u32> = Vec::new();
    for &s in frontier.iter().filter(|s| !saturated.contains(s)) {
        // a vertex whose host edges into the fresh frontier already
        // reach delta*k cannot be exposed without breaking (b)
        if state.host_degree_into(s, |w| in_new[w as usize]) as f64 >= dk {
            bad.push(s);
            if bad.len() as f64 >= params.delta * st as f64 {
                return LayerResult::DenseAtLayer { bad };
            }
            continue;
        }
        // exposure audit: every edge from s to the pool must be fresh
        let pool_ok = |state: &GrowthState, w: u32| {
            !state.in_tree[w as usize] && !state.discarded[w as usize] && !in_new[w as usize]
        };
        let mut children = Vec::new();
        for &w in host.neighbors(s) {
            if !pool_ok(state, w) {
                continue;
            }
            assert!(
                !state.oracle.is_revealed(s, w).expect("host edge"),
                "frontier vertex {s} has a pre-revealed pool edge to {w}"
            );
            if state.oracle.query(s, w).expect("host edge")
                && (children.len() as u32) < params.star_cap
            {
                children.push(w);
            }
        }
        for &c in &children {
            state.tree.add_leaf(s, c).expect("fresh child");
            state.in_tree[c as usize] = true;
            in_new[c as usize] = true;
            new_frontier.push(c);
        }
    }
    if (new_frontier.len() as f64) < (1.0 + params.epsilon / 8.0) * st as f64 {
        return LayerResult::Stalled;
    }
    new_frontier.sort_unstable();
    state.frontier = new_frontier;
    state.step += 1;
    assert!(
        state.frontier.len() as f64 >= params.epsilon / 16.0 * state.tree.len() as f64,
        "frontier share invariant broken after growth"
    );
    assert!(state.tree.max_degree() <= params.star_cap + 1);
    LayerResult::Continue {
        saturated: saturated.len() as u32,
        bad: bad.len() as u32,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GrowthExit {
    DenseWithinTree,
    DenseAtLayer,
    Stalled,
    InitFailure,
}

impl GrowthExit {
    pub fn tag(&self) -> &'static str {
        match self {
            GrowthExit::DenseWithinTree => "dense_tree",
            GrowthExit::DenseAtLayer => "dense_layer",
            GrowthExit::Stalled => "stalled",
            GrowthExit::InitFailure => "init_fail",
        }
    }

    pub fn is_failure(&self) -> bool {
        matches!(self, GrowthExit::Stalled | GrowthExit::InitFailure)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct LayerTrace {
    pub step: u32,
    pub tree: u32,
    pub frontier: u32,
    pub discarded: u32,
    pub bad: u32,
}

#[derive(Debug)]
pub struct GrowthOutcome {
    pub certificate: MinorCertificate,
    /// host-id graph (seed-tree and star edges plus the second-round
    /// percolation of the reservoir) that the certificate verifies against
    pub realized: Graph,
    pub exit: GrowthExit,
    pub h_order: u32,
    pub steps: u32,
    pub trace: Vec<LayerTrace>,
}

/// Full pipeline: seed, branch until a dense exit or a stall, then
/// contract the reservoir at the second-round rate. Failures degrade to
/// small verified certificates, never to a hard error.
pub fn run(g: &Graph, params: &GrowthParams, seed: u64) -> Result<GrowthOutcome, GrowthError> {
    let min_degree = g
        .min_degree()
        .map_err(|_| GrowthError::BadParams("empty host".into()))?;
    if min_degree < params.k {
        return Err(GrowthError::HostTooSparse {
            min_degree,
            k: params.k,
        });
    }
    let oracle = EdgeOracle::new(g, params.perc.p1, seeds::mix2(seed, 0x40_0001));
    let mut state = match initial_phase(params, oracle, seeds::mix2(seed, 0x40_0002)) {
        Ok(s) => s,
        Err(fail) => {
            let realized = fail.oracle.present_graph();
            let certificate = MinorCertificate::new(vec![VertexSet::singleton(0)]);
            assert!(is_valid_minor(&realized, &certificate));
            return Ok(GrowthOutcome {
                certificate,
                realized,
                exit: GrowthExit::InitFailure,
                h_order: 0,
                steps: 0,
                trace: Vec::new(),
            });
        }
    };
    let mut trace = vec![LayerTrace {
        step: 0,
        tree: state.tree.len() as u32,
        frontier: state.frontier.len() as u32,
        discarded: state.discarded_count,
        bad: 0,
    }];
    loop {
        let frontier_size = state.frontier.len() as u64;
        match grow_layer(params, &mut state) {
            LayerResult::Continue { bad, .. } => {
                trace.push(LayerTrace {
                    step: state.step,
                    tree: state.tree.len() as u32,
                    frontier: state.frontier.len() as u32,
                    discarded: state.discarded_count,
                    bad,
                });
            }
            LayerResult::DenseWithinTree { saturated } => {
                let floor =
                    params.delta * params.delta / 2.0 * frontier_size as f64 * params.k as f64;
                let c1 = params.delta * params.delta * params.epsilon / 32.0;
                return Ok(finish_dense(
                    g,
                    params,
                    state,
                    GrowthExit::DenseWithinTree,
                    floor,
                    c1,
                    saturated.len() as u32,
                    trace,
                    seed,
                ));
            }
            LayerResult::DenseAtLayer { bad } => {
                let floor = params.delta * params.delta * frontier_size as f64 * params.k as f64;
                let c1 = params.delta * params.delta * params.epsilon
                    / (16.0 * (1.0 + params.star_cap as f64));
                return Ok(finish_dense(
                    g,
                    params,
                    state,
                    GrowthExit::DenseAtLayer,
                    floor,
                    c1,
                    bad.len() as u32,
                    trace,
                    seed,
                ));
            }
            LayerResult::Stalled => {
                return Ok(finish_stalled(g, params, state, trace, seed));
            }
        }
    }
}

/// Host edges with both endpoints in the (sorted) span.
fn span_edges(host: &Graph, span: &[u32]) -> Vec<(u32, u32)> {
    let mut edges = Vec::new();
    for &u in span {
        for &w in host.neighbors(u) {
            if w > u && span.binary_search(&w).is_ok() {
                edges.push((u, w));
            }
        }
    }
    edges
}

struct LiftedRun {
    certificate: MinorCertificate,
    realized: Graph,
    h_order: u32,
}

/// Partition the grown tree into ~sqrt(k) pieces, wrap the span's host
/// edges as a contraction instance at the second-round rate, extract,
/// and map everything back to host ids. None when the tree is too small
/// to carve even one piece.
fn contract_reservoir(
    g: &Graph,
    params: &GrowthParams,
    tree: &RootedTree,
    c1: f64,
    seed: u64,
) -> Option<LiftedRun> {
    let span: Vec<u32> = tree.vertices().collect();
    let part = tree_partition(tree, params.k as u64).ok()?;
    let local = |v: u32| span.binary_search(&v).unwrap() as u32;
    let pieces: Vec<VertexSet> = part
        .pieces
        .iter()
        .map(|p| VertexSet::from_sorted(p.iter().map(local).collect()))
        .collect();
    let forest_edges: Vec<(u32, u32)> = tree.edges().map(|(a, b)| (local(a), local(b))).collect();
    let cross: Vec<(u32, u32)> = span_edges(g, &span)
        .into_iter()
        .map(|(a, b)| (local(a), local(b)))
        .collect();
    if cross.is_empty() {
        return None;
    }
    let c2 = params.perc.p2 * params.k as f64;
    let c1 = c1.max(1e-12);
    let inst = SprinklingInstance::new(
        span.len() as u32,
        params.k,
        1.0,
        (params.star_cap + 2) as f64,
        c1,
        c2,
        pieces,
        forest_edges,
        cross,
    )
    .expect("tree partition yields a valid contraction instance");
    let out = extract(&inst, seed);
    let certificate = MinorCertificate::new(
        out.certificate
            .branch_sets
            .iter()
            .map(|set| VertexSet::from_unsorted(set.iter().map(|v| span[v as usize]).collect()))
            .collect(),
    );
    let realized_edges: Vec<(u32, u32)> = out
        .realized
        .edges()
        .map(|(a, b)| (span[a as usize], span[b as usize]))
        .collect();
    let realized = Graph::from_edges(g.n(), &realized_edges).expect("span edges valid");
    assert!(is_valid_minor(&realized, &certificate));
    Some(LiftedRun {
        certificate,
        realized,
        h_order: out.h_order,
    })
}

#[allow(clippy::too_many_arguments)]
fn finish_dense(
    g: &Graph,
    params: &GrowthParams,
    state: GrowthState,
    exit: GrowthExit,
    reservoir_floor: f64,
    c1: f64,
    trigger_count: u32,
    mut trace: Vec<LayerTrace>,
    seed: u64,
) -> GrowthOutcome {
    let span: Vec<u32> = state.tree.vertices().collect();
    let reservoir = span_edges(g, &span).len();
    assert!(
        reservoir as f64 >= reservoir_floor - 1e-9,
        "reservoir {reservoir} below its guaranteed floor {reservoir_floor}"
    );
    trace.push(LayerTrace {
        step: state.step + 1,
        tree: state.tree.len() as u32,
        frontier: state.frontier.len() as u32,
        discarded: state.discarded_count,
        bad: trigger_count,
    });
    match contract_reservoir(g, params, &state.tree, c1, seeds::mix2(seed, 0x40_0003)) {
        Some(run) => GrowthOutcome {
            certificate: run.certificate,
            realized: run.realized,
            exit,
            h_order: run.h_order,
            steps: state.step,
            trace,
        },
        None => degraded_outcome(g, state, exit, trace),
    }
}

fn finish_stalled(
    g: &Graph,
    params: &GrowthParams,
    state: GrowthState,
    mut trace: Vec<LayerTrace>,
    seed: u64,
) -> GrowthOutcome {
    trace.push(LayerTrace {
        step: state.step + 1,
        tree: state.tree.len() as u32,
        frontier: state.frontier.len() as u32,
        discarded: state.discarded_count,
        bad: 0,
    });
    let span: Vec<u32> = state.tree.vertices().collect();
    let cross = span_edges(g, &span).len() as f64;
    let c1 = cross / (params.k as f64 * span.len() as f64);
    match contract_reservoir(g, params, &state.tree, c1, seeds::mix2(seed, 0x40_0003)) {
        Some(run) => GrowthOutcome {
            certificate: run.certificate,
            realized: run.realized,
            exit: GrowthExit::Stalled,
            h_order: run.h_order,
            steps: state.step,
            trace,
        },
        None => degraded_outcome(g, state, GrowthExit::Stalled, trace),
    }
}

/// Smallest honest answer: the revealed tree as the realized graph and
/// one branch set holding its root.
fn degraded_outcome(
    g: &Graph,
    state: GrowthState,
    exit: GrowthExit,
    trace: Vec<LayerTrace>,
) -> GrowthOutcome {
    let edges: Vec<(u32, u32)> = state.tree.edges().collect();
    let realized = Graph::from_edges(g.n(), &edges).expect("tree edges valid");
    let certificate = MinorCertificate::new(vec![VertexSet::singleton(state.tree.root())]);
    assert!(is_valid_minor(&realized, &certificate));
    GrowthOutcome {
        certificate,
        realized,
        exit,
        h_order: 0,
        steps: state.step,
        trace,
    }
}
