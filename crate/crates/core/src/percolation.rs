//! Independent edge retention, two-round sprinkling, and a lazy
//! exposure oracle. All coins are keyed on (seed, stable edge id), so a
//! full percolation, an oracle replay, and a remainder pass over the
//! same host agree edge for edge.

use thiserror::Error;

use crate::graph::Graph;
use crate::seeds;

#[derive(Debug, Error)]
pub enum PercolationError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("base graph is not a spanning subgraph of the host")]
    NotSubgraph,
    #[error("queried non-host edge {u} {v}")]
    NonHostEdge { u: u32, v: u32 },
}

/// Supercritical two-round parameters: a first round at p1 keeps the
/// branching process alive, and the leftover rate p2 is available for
/// reconnection, with p1 + (1-p1)*p2 = p exactly.
#[derive(Clone, Copy, Debug)]
pub struct PercolationParams {
    pub k: u32,
    pub epsilon: f64,
    pub p: f64,
    pub p1: f64,
    pub p2: f64,
}

impl PercolationParams {
    pub fn new(k: u32, epsilon: f64) -> Result<Self, PercolationError> {
        if k == 0 {
            return Err(PercolationError::InvalidParams("k must be positive".into()));
        }
        if epsilon <= 0.0 || !epsilon.is_finite() {
            return Err(PercolationError::InvalidParams(format!(
                "epsilon must be a positive real, got {epsilon}"
            )));
        }
        let kf = k as f64;
        let p = (1.0 + epsilon) / kf;
        let p1 = (1.0 + epsilon / 2.0) / kf;
        if p > 1.0 {
            return Err(PercolationError::InvalidParams(format!(
                "(1+epsilon)/k = {p} exceeds 1; raise k or lower epsilon"
            )));
        }
        let p2 = (p - p1) / (1.0 - p1);
        debug_assert!(0.0 < p1 && p1 < p && p <= 1.0);
        debug_assert!(p2 >= epsilon / (2.0 * kf) * (1.0 - 1e-12));
        Ok(PercolationParams {
            k,
            epsilon,
            p,
            p1,
            p2,
        })
    }
}

/// Keep each edge independently with probability p; deterministic per seed.
pub fn percolate(g: &Graph, p: f64, seed: u64) -> Graph {
    let kept: Vec<(u32, u32)> = g
        .edges()
        .enumerate()
        .filter(|&(id, _)| seeds::unit_at(seed, id as u64) < p)
        .map(|(_, e)| e)
        .collect();
    Graph::from_edges(g.n(), &kept).expect("host edges stay valid")
}

/// Union of `base` with an independent p2-percolation of host-minus-base.
/// Coins are keyed on host edge ids, so the outcome is independent of
/// how `base` was produced.
pub fn sprinkle(base: &Graph, host: &Graph, p2: f64, seed: u64) -> Result<Graph, PercolationError> {
    if !base.is_spanning_subgraph_of(host) {
        return Err(PercolationError::NotSubgraph);
    }
    let kept: Vec<(u32, u32)> = host
        .edges()
        .enumerate()
        .filter(|&(id, (u, v))| base.has_edge(u, v) || seeds::unit_at(seed, id as u64) < p2)
        .map(|(_, e)| e)
        .collect();
    Ok(Graph::from_edges(host.n(), &kept).expect("host edges stay valid"))
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum EdgeState {
    Unexposed,
    Absent,
    Present,
}

/// One-shot lazy revelation of each host edge at probability p. Each
/// edge is sampled at most once; repeated queries replay the record.
pub struct EdgeOracle<'g> {
    host: &'g Graph,
    p: f64,
    seed: u64,
    state: Vec<EdgeState>,
    draws: u64,
}

impl<'g> EdgeOracle<'g> {
    pub fn new(host: &'g Graph, p: f64, seed: u64) -> Self {
        EdgeOracle {
            host,
            p,
            seed,
            state: vec![EdgeState::Unexposed; host.m() as usize],
            draws: 0,
        }
    }

    pub fn host(&self) -> &'g Graph {
        self.host
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// Total Bernoulli draws so far; never exceeds m over the lifetime.
    pub fn draws(&self) -> u64 {
        self.draws
    }

    fn edge_id(&self, u: u32, v: u32) -> Result<u64, PercolationError> {
        self.host
            .edge_id(u, v)
            .ok_or(PercolationError::NonHostEdge { u, v })
    }

    pub fn is_revealed(&self, u: u32, v: u32) -> Result<bool, PercolationError> {
        Ok(self.state[self.edge_id(u, v)? as usize] != EdgeState::Unexposed)
    }

    /// Reveal edge {u,v}: first call draws the coin, later calls replay it.
    pub fn query(&mut self, u: u32, v: u32) -> Result<bool, PercolationError> {
        let id = self.edge_id(u, v)? as usize;
        if self.state[id] == EdgeState::Unexposed {
            self.draws += 1;
            self.state[id] = if seeds::unit_at(self.seed, id as u64) < self.p {
                EdgeState::Present
            } else {
                EdgeState::Absent
            };
        }
        Ok(self.state[id] == EdgeState::Present)
    }

    /// Edges revealed present so far, as a spanning subgraph of the host.
    pub fn present_graph(&self) -> Graph {
        let kept: Vec<(u32, u32)> = self
            .host
            .edges()
            .enumerate()
            .filter(|&(id, _)| self.state[id] == EdgeState::Present)
            .map(|(_, e)| e)
            .collect();
        Graph::from_edges(self.host.n(), &kept).expect("host edges stay valid")
    }

    /// Percolate every still-unexposed edge at p, mark it revealed, and
    /// return the union of everything present.
    pub fn remainder_percolation(&mut self) -> Graph {
        for id in 0..self.state.len() {
            if self.state[id] == EdgeState::Unexposed {
                self.draws += 1;
                self.state[id] = if seeds::unit_at(self.seed, id as u64) < self.p {
                    EdgeState::Present
                } else {
                    EdgeState::Absent
                };
            }
        }
        self.present_graph()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{clique_union, complete};

    #[test]
    fn params_derivation_and_floor() {
        for k in [2u32, 10, 100, 1000, 10000] {
            for eps in [0.05, 0.1, 0.2, 0.5, 1.0] {
                if (1.0 + eps) / k as f64 > 1.0 {
                    continue;
                }
                let pp = PercolationParams::new(k, eps).unwrap();
                assert!(0.0 < pp.p1 && pp.p1 < pp.p && pp.p <= 1.0);
                assert!(pp.p2 >= eps / (2.0 * k as f64) * (1.0 - 1e-12));
                let recombined = pp.p1 + (1.0 - pp.p1) * pp.p2;
                assert!((recombined - pp.p).abs() < 1e-15);
            }
        }
        assert!(PercolationParams::new(0, 0.1).is_err());
        assert!(PercolationParams::new(10, 0.0).is_err());
        assert!(PercolationParams::new(1, 0.1).is_err());
    }

    #[test]
    fn percolate_extremes() {
        let g = complete(7);
        assert_eq!(percolate(&g, 0.0, 3).m(), 0);
        assert_eq!(percolate(&g, 1.0, 3), g);
        assert_eq!(percolate(&g, 0.4, 9), percolate(&g, 0.4, 9));
    }

    #[test]
    fn percolate_k4_mean_matches_binomial() {
        let g = complete(4);
        let trials = 10_000u64;
        let total: u64 = (0..trials)
            .map(|t| percolate(&g, 0.5, seeds::mix2(77, t)).m())
            .sum();
        let mean = total as f64 / trials as f64;
        // Bin(6, 0.5): sd of the mean is sqrt(1.5)/100
        let tol = 3.0 * (6.0f64 * 0.25 / trials as f64).sqrt();
        assert!((mean - 3.0).abs() <= tol, "mean {mean}, tol {tol}");
    }

    #[test]
    fn sprinkle_extremes_and_error() {
        let host = complete(4);
        assert_eq!(sprinkle(&host, &host, 0.3, 5).unwrap(), host);
        let base = percolate(&host, 0.5, 11);
        assert_eq!(sprinkle(&base, &host, 0.0, 5).unwrap(), base);
        let empty = Graph::empty(4);
        assert_eq!(sprinkle(&empty, &host, 1.0, 5).unwrap(), host);
        let stranger = complete(5);
        assert!(matches!(
            sprinkle(&stranger, &host, 0.5, 5),
            Err(PercolationError::NotSubgraph)
        ));
        let tri = Graph::from_edges(4, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        let path = Graph::from_edges(4, &[(0, 1), (1, 2)]).unwrap();
        assert!(sprinkle(&path, &tri, 0.5, 5).is_ok());
        assert!(matches!(
            sprinkle(&tri, &path, 0.5, 5),
            Err(PercolationError::NotSubgraph)
        ));
    }

    #[test]
    fn two_round_marginal_equals_p() {
        let pp = PercolationParams::new(20, 0.5).unwrap();
        let host = complete(20);
        let m = host.m() as f64;
        let trials = 4000u64;
        let mut total = 0u64;
        for t in 0..trials {
            let base = percolate(&host, pp.p1, seeds::mix2(101, t));
            let full = sprinkle(&base, &host, pp.p2, seeds::mix2(202, t)).unwrap();
            total += full.m();
        }
        let frac = total as f64 / (trials as f64 * m);
        let tol = 3.0 * (pp.p * (1.0 - pp.p) / (trials as f64 * m)).sqrt();
        assert!(
            (frac - pp.p).abs() <= tol,
            "frac {frac}, p {}, tol {tol}",
            pp.p
        );
    }

    #[test]
    fn oracle_idempotent_and_counts_draws() {
        let host = complete(10);
        let mut o = EdgeOracle::new(&host, 0.5, 42);
        let a = o.query(0, 1).unwrap();
        assert_eq!(o.draws(), 1);
        assert_eq!(o.query(1, 0).unwrap(), a);
        assert_eq!(o.draws(), 1);
        assert!(o.is_revealed(0, 1).unwrap());
        assert!(!o.is_revealed(2, 3).unwrap());
        for (u, v) in host.edges() {
            o.query(u, v).unwrap();
            o.query(u, v).unwrap();
        }
        let _ = o.remainder_percolation();
        assert_eq!(o.draws(), host.m());
        assert!(matches!(
            o.query(5, 5),
            Err(PercolationError::NonHostEdge { .. })
        ));
        let two = clique_union(2, 3);
        let mut o2 = EdgeOracle::new(&two, 1.0, 1);
        assert!(matches!(
            o2.query(0, 3),
            Err(PercolationError::NonHostEdge { u: 0, v: 3 })
        ));
        assert!(o2.query(0, 1).unwrap());
    }

    #[test]
    fn oracle_fraction_within_three_sigma() {
        let host = complete(100);
        let mut o = EdgeOracle::new(&host, 0.3, 7);
        let mut present = 0u64;
        for (u, v) in host.edges() {
            if o.query(u, v).unwrap() {
                present += 1;
            }
        }
        let m = host.m() as f64;
        let frac = present as f64 / m;
        let tol = 3.0 * (0.3f64 * 0.7 / m).sqrt();
        assert!((frac - 0.3).abs() <= tol, "frac {frac}, tol {tol}");
    }

    #[test]
    fn remainder_agrees_with_full_percolation() {
        let host = complete(30);
        let seed = 99;
        let mut o = EdgeOracle::new(&host, 0.4, seed);
        for (u, v) in host.edges().take(100) {
            o.query(u, v).unwrap();
        }
        let merged = o.remainder_percolation();
        assert_eq!(merged, percolate(&host, 0.4, seed));
        // idempotent once everything is revealed
        assert_eq!(o.remainder_percolation(), merged);
        assert_eq!(o.draws(), host.m());

        let mut closed = EdgeOracle::new(&host, 0.0, 5);
        assert_eq!(closed.remainder_percolation().m(), 0);
        let mut open = EdgeOracle::new(&host, 1.0, 5);
        assert_eq!(open.remainder_percolation(), host);
    }
}
