//! Minor extraction through piece contraction: prune weakly connected
//! pieces, cap pairwise edge multiplicities, percolate the remaining
//! cross edges, read off an auxiliary graph on the surviving pieces,
//! pull a dense minor out of it, and lift the result back to the host
//! vertex set.

use std::collections::HashMap;

use thiserror::Error;

use crate::graph::{Graph, VertexSet};
use crate::minor::{dense_minor, is_valid_minor, MinorCertificate};
use crate::seeds;

#[derive(Debug, Error)]
pub enum SprinklingError {
    #[error("bad instance: {0}")]
    BadInstance(String),
    #[error("every piece fell below the pruning threshold")]
    AllPiecesPruned,
}

/// A vertex set split into connected forest pieces of ~sqrt(k) size,
/// with a reservoir of cross edges to percolate. `cross_edges` may
/// include intra-piece edges; pruning discards those first.
#[derive(Clone, Debug)]
pub struct SprinklingInstance {
    pub n: u32,
    pub k: u32,
    pub b1: f64,
    pub b2: f64,
    pub c1: f64,
    pub c2: f64,
    /// retention probability c2/k
    pub p: f64,
    pub pieces: Vec<VertexSet>,
    pub forest_edges: Vec<(u32, u32)>,
    pub cross_edges: Vec<(u32, u32)>,
    /// |cross_edges| >= c1*k*n, recorded at construction
    pub hypothesis_met: bool,
    piece_of: Vec<u32>,
}

fn norm(e: (u32, u32)) -> (u32, u32) {
    (e.0.min(e.1), e.0.max(e.1))
}

/// Coin for edge {u,v}: pure in (seed, endpoints), so percolating a
/// subset of an edge list agrees with percolating the whole list.
fn edge_open(seed: u64, u: u32, v: u32, p: f64) -> bool {
    let (a, b) = norm((u, v));
    seeds::unit_at(seed, ((a as u64) << 32) | b as u64) < p
}

impl SprinklingInstance {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        n: u32,
        k: u32,
        b1: f64,
        b2: f64,
        c1: f64,
        c2: f64,
        pieces: Vec<VertexSet>,
        forest_edges: Vec<(u32, u32)>,
        cross_edges: Vec<(u32, u32)>,
    ) -> Result<Self, SprinklingError> {
        let bad = |msg: String| Err(SprinklingError::BadInstance(msg));
        if n == 0 || k == 0 {
            return bad("n and k must be positive".into());
        }
        if !(b1 > 0.0 && b2 >= b1 && c1 > 0.0 && c2 > 0.0) {
            return bad(format!(
                "need 0 < b1 <= b2 and positive c1, c2; got b1={b1} b2={b2} c1={c1} c2={c2}"
            ));
        }
        let p = c2 / k as f64;
        if p > 1.0 {
            return bad(format!("retention probability c2/k = {p} exceeds 1"));
        }
        let mut piece_of = vec![u32::MAX; n as usize];
        let sqrt_k = (k as f64).sqrt();
        let (lo, hi) = (
            (b1 * sqrt_k).floor() as usize,
            (b2 * sqrt_k).ceil() as usize,
        );
        for (i, piece) in pieces.iter().enumerate() {
            if piece.len() < lo.max(1) || piece.len() > hi {
                return bad(format!(
                    "piece {i} has {} vertices, outside [{}, {hi}]",
                    piece.len(),
                    lo.max(1)
                ));
            }
            for v in piece.iter() {
                if v >= n {
                    return bad(format!("piece {i} references vertex {v} >= n = {n}"));
                }
                if piece_of[v as usize] != u32::MAX {
                    return bad(format!("vertex {v} lies in two pieces"));
                }
                piece_of[v as usize] = i as u32;
            }
        }
        if piece_of.contains(&u32::MAX) {
            return bad("pieces do not cover the vertex set".into());
        }
        // forest must be acyclic and keep each piece internally connected
        let forest_edges: Vec<(u32, u32)> = forest_edges.into_iter().map(norm).collect();
        let mut dsu: Vec<u32> = (0..n).collect();
        fn find(dsu: &mut [u32], v: u32) -> u32 {
            let mut v = v;
            while dsu[v as usize] != v {
                dsu[v as usize] = dsu[dsu[v as usize] as usize];
                v = dsu[v as usize];
            }
            v
        }
        for &(u, v) in &forest_edges {
            if u == v || v >= n {
                return bad(format!("bad forest edge {u} {v}"));
            }
            let (ru, rv) = (find(&mut dsu, u), find(&mut dsu, v));
            if ru == rv {
                return bad(format!("forest edge {u} {v} closes a cycle"));
            }
            dsu[ru as usize] = rv;
        }
        for piece in &pieces {
            let mut intra: Vec<(u32, u32)> = forest_edges
                .iter()
                .copied()
                .filter(|&(u, v)| piece_of[u as usize] == piece_of[v as usize] && piece.contains(u))
                .collect();
            intra.dedup();
            let g = Graph::from_edges(n, &intra)
                .map_err(|e| SprinklingError::BadInstance(format!("forest edges: {e}")))?;
            if !g.connected_within(piece.as_slice()) {
                return bad(format!(
                    "piece with minimum vertex {:?} is not connected by its forest edges",
                    piece.min()
                ));
            }
        }
        let mut cross_edges: Vec<(u32, u32)> = cross_edges.into_iter().map(norm).collect();
        cross_edges.sort_unstable();
        for w in cross_edges.windows(2) {
            if w[0] == w[1] {
                return bad(format!("duplicate cross edge {} {}", w[0].0, w[0].1));
            }
        }
        if let Some(&(u, v)) = cross_edges.iter().find(|&&(u, v)| u == v || v >= n) {
            return bad(format!("bad cross edge {u} {v}"));
        }
        let hypothesis_met = cross_edges.len() as f64 >= c1 * k as f64 * n as f64;
        Ok(SprinklingInstance {
            n,
            k,
            b1,
            b2,
            c1,
            c2,
            p,
            pieces,
            forest_edges,
            cross_edges,
            hypothesis_met,
            piece_of,
        })
    }

    /// Indexed synthetic instance: consecutive blocks of `piece_size`
    /// joined internally by paths, plus exactly ceil(c1*k*n) distinct
    /// random cross-block edges.
    pub fn synthetic(
        n: u32,
        k: u32,
        piece_size: u32,
        c1: f64,
        c2: f64,
        seed: u64,
    ) -> Result<Self, SprinklingError> {
        if piece_size == 0 || !n.is_multiple_of(piece_size) {
            return Err(SprinklingError::BadInstance(format!(
                "piece_size {piece_size} must divide n = {n}"
            )));
        }
        let pieces: Vec<VertexSet> = (0..n / piece_size)
            .map(|b| VertexSet::from_sorted((b * piece_size..(b + 1) * piece_size).collect()))
            .collect();
        let forest_edges: Vec<(u32, u32)> = (0..n)
            .filter(|v| v % piece_size != 0)
            .map(|v| (v - 1, v))
            .collect();
        let want = (c1 * k as f64 * n as f64).ceil() as u64;
        let block = |v: u32| v / piece_size;
        let mut chosen: std::collections::HashSet<(u32, u32)> = Default::default();
        let mut cross = Vec::with_capacity(want as usize);
        let mut counter = 0u64;
        let draw_seed = seeds::mix2(seed, 0x5b_0001);
        while (cross.len() as u64) < want {
            let a = (seeds::mix2(draw_seed, counter) % n as u64) as u32;
            let b = (seeds::mix2(draw_seed, counter + 1) % n as u64) as u32;
            counter += 2;
            if block(a) == block(b) {
                continue;
            }
            let e = norm((a, b));
            if chosen.insert(e) {
                cross.push(e);
            }
        }
        let sk = (k as f64).sqrt();
        SprinklingInstance::new(
            n,
            k,
            piece_size as f64 / sk,
            piece_size as f64 / sk,
            c1,
            c2,
            pieces,
            forest_edges,
            cross,
        )
    }

    pub fn piece_of(&self, v: u32) -> u32 {
        self.piece_of[v as usize]
    }

    /// Pruning threshold: (c1*b1/4) * k^{3/2}.
    pub fn prune_threshold(&self) -> f64 {
        self.c1 * self.b1 / 4.0 * (self.k as f64).powf(1.5)
    }

    /// The graph the lifted certificate is checked against: all forest
    /// edges plus every cross edge whose coin at `seed` lands below p.
    pub fn realized(&self, seed: u64) -> Graph {
        let mut edges = self.forest_edges.clone();
        edges.extend(
            self.cross_edges
                .iter()
                .copied()
                .filter(|&(u, v)| edge_open(seed, u, v, self.p)),
        );
        edges.sort_unstable();
        edges.dedup();
        Graph::from_edges(self.n, &edges).expect("instance edges validated")
    }
}

/// Survivors of the iterative pruning pass plus the cross edges that
/// still join two surviving pieces.
#[derive(Clone, Debug)]
pub struct Pruned {
    pub survivors: Vec<u32>,
    pub edges: Vec<(u32, u32)>,
}

/// Drop intra-piece cross edges, then iteratively delete pieces whose
/// incident count has fallen to the threshold (ascending piece index
/// first), removing their edges as they go.
pub fn prune_pieces(inst: &SprinklingInstance) -> Result<Pruned, SprinklingError> {
    let r = inst.pieces.len();
    let threshold = inst.prune_threshold();
    let edges: Vec<(u32, u32)> = inst
        .cross_edges
        .iter()
        .copied()
        .filter(|&(u, v)| inst.piece_of(u) != inst.piece_of(v))
        .collect();
    let mut alive_edge = vec![true; edges.len()];
    let mut incident: Vec<Vec<u32>> = vec![Vec::new(); r];
    let mut count = vec![0u64; r];
    for (idx, &(u, v)) in edges.iter().enumerate() {
        for piece in [inst.piece_of(u), inst.piece_of(v)] {
            incident[piece as usize].push(idx as u32);
            count[piece as usize] += 1;
        }
    }
    let mut alive_piece = vec![true; r];
    let mut queue: std::collections::BTreeSet<u32> = (0..r as u32)
        .filter(|&i| count[i as usize] as f64 <= threshold)
        .collect();
    while let Some(&i) = queue.iter().next() {
        queue.remove(&i);
        if !alive_piece[i as usize] {
            continue;
        }
        alive_piece[i as usize] = false;
        for &eidx in &incident[i as usize] {
            if !alive_edge[eidx as usize] {
                continue;
            }
            alive_edge[eidx as usize] = false;
            let (u, v) = edges[eidx as usize];
            for piece in [inst.piece_of(u), inst.piece_of(v)] {
                if piece != i && alive_piece[piece as usize] {
                    count[piece as usize] -= 1;
                    if count[piece as usize] as f64 <= threshold {
                        queue.insert(piece);
                    }
                }
            }
        }
    }
    let survivors: Vec<u32> = (0..r as u32).filter(|&i| alive_piece[i as usize]).collect();
    if survivors.is_empty() {
        return Err(SprinklingError::AllPiecesPruned);
    }
    let edges = edges
        .into_iter()
        .zip(alive_edge)
        .filter(|&(_, alive)| alive)
        .map(|(e, _)| e)
        .collect();
    Ok(Pruned { survivors, edges })
}

/// For every surviving piece pair keep at most k cross edges, deleting
/// the lexicographically largest excess. Each piece retains at least a
/// 1/b2^2 share of its pruned incident count.
pub fn cap_multiplicities(inst: &SprinklingInstance, pruned: &Pruned) -> Vec<(u32, u32)> {
    let mut groups: HashMap<(u32, u32), Vec<(u32, u32)>> = HashMap::new();
    for &(u, v) in &pruned.edges {
        let pair = norm((inst.piece_of(u), inst.piece_of(v)));
        groups.entry(pair).or_default().push((u, v));
    }
    let mut kept = Vec::with_capacity(pruned.edges.len());
    for (_, mut group) in groups {
        group.sort_unstable();
        group.truncate(inst.k as usize);
        kept.extend(group);
    }
    kept.sort_unstable();
    kept
}

/// Contraction graph on the surviving pieces: i ~ j iff at least one
/// capped cross edge between their pieces survives percolation at p.
#[derive(Clone, Debug)]
pub struct AuxiliaryGraph {
    pub graph: Graph,
    /// local auxiliary vertex -> original piece index
    pub piece_index: Vec<u32>,
    /// cross edges that survived percolation (original vertex ids)
    pub retained: Vec<(u32, u32)>,
    /// exact expectation of the auxiliary edge count at this p
    pub expected_edges: f64,
    /// the per-pair probability floor c2*mult/(2k) needs c2 < 1/2;
    /// callers running hotter keep the machinery but lose that bound
    pub prob_bound_applies: bool,
}

pub fn build_auxiliary(
    inst: &SprinklingInstance,
    pruned: &Pruned,
    capped: &[(u32, u32)],
    seed: u64,
) -> AuxiliaryGraph {
    let local: HashMap<u32, u32> = pruned
        .survivors
        .iter()
        .enumerate()
        .map(|(i, &piece)| (piece, i as u32))
        .collect();
    let mut mult: HashMap<(u32, u32), u64> = HashMap::new();
    let mut open_pairs: Vec<(u32, u32)> = Vec::new();
    let mut retained = Vec::new();
    for &(u, v) in capped {
        let pair = norm((local[&inst.piece_of(u)], local[&inst.piece_of(v)]));
        *mult.entry(pair).or_insert(0) += 1;
        if edge_open(seed, u, v, inst.p) {
            retained.push((u, v));
            open_pairs.push(pair);
        }
    }
    open_pairs.sort_unstable();
    open_pairs.dedup();
    let expected_edges = mult
        .values()
        .map(|&m| 1.0 - (1.0 - inst.p).powi(m as i32))
        .sum();
    let graph = Graph::from_edges(pruned.survivors.len() as u32, &open_pairs)
        .expect("piece pairs are simple");
    AuxiliaryGraph {
        graph,
        piece_index: pruned.survivors.clone(),
        retained,
        expected_edges,
        prob_bound_applies: inst.c2 < 0.5,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SprinklingExit {
    Completed,
    /// pruning ate every piece; the order-1 fallback certificate stands
    HypothesisViolated,
}

#[derive(Clone, Debug)]
pub struct SprinklingOutcome {
    pub certificate: MinorCertificate,
    /// forest plus percolated cross edges; the certificate verifies
    /// against exactly this graph
    pub realized: Graph,
    pub h_order: u32,
    pub exit: SprinklingExit,
}

/// Full pipeline: prune, cap, percolate, contract, extract, lift.
pub fn extract(inst: &SprinklingInstance, seed: u64) -> SprinklingOutcome {
    let perc_seed = seeds::mix2(seed, 0x0051_0001);
    let minor_seed = seeds::mix2(seed, 0x0051_0002);
    let realized = inst.realized(perc_seed);
    let fallback = |realized: Graph| {
        let certificate = MinorCertificate::new(vec![VertexSet::singleton(0)]);
        assert!(is_valid_minor(&realized, &certificate));
        SprinklingOutcome {
            certificate,
            realized,
            h_order: 0,
            exit: SprinklingExit::HypothesisViolated,
        }
    };
    let pruned = match prune_pieces(inst) {
        Ok(p) => p,
        Err(SprinklingError::AllPiecesPruned) => return fallback(realized),
        Err(e) => unreachable!("prune on validated instance: {e}"),
    };
    let capped = cap_multiplicities(inst, &pruned);
    let aux = build_auxiliary(inst, &pruned, &capped, perc_seed);
    let h_cert = dense_minor(&aux.graph, minor_seed);
    let h_order = h_cert.order();
    let branch_sets: Vec<VertexSet> = h_cert
        .branch_sets
        .iter()
        .map(|set| {
            let mut members = Vec::new();
            for local in set.iter() {
                let piece = aux.piece_index[local as usize] as usize;
                members.extend(inst.pieces[piece].iter());
            }
            VertexSet::from_unsorted(members)
        })
        .collect();
    let certificate = MinorCertificate::new(branch_sets);
    assert!(
        is_valid_minor(&realized, &certificate),
        "lifted certificate must verify against the realized graph"
    );
    SprinklingOutcome {
        certificate,
        realized,
        h_order,
        exit: SprinklingExit::Completed,
    }
}
