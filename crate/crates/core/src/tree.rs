//! Rooted trees over graph vertex ids, a splitter that finds a deepest
//! vertex whose subtree clears a weight threshold, and the partition of
//! bounded-degree trees/forests into connected pieces of ~sqrt(k) size.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::graph::VertexSet;
use crate::seeds;

#[derive(Debug, Error)]
pub enum TreeError {
    #[error("ell must satisfy 1 <= ell <= {n}, got {ell}")]
    BadEll { ell: u32, n: u32 },
    #[error(
        "tree of size {n} does not exceed floor(sqrt(k)) = {ell}; treat it as one undersized piece"
    )]
    Undersized { n: u32, ell: u32 },
    #[error("vertex {0} is already in the tree")]
    DuplicateVertex(u32),
    #[error("parent {0} is not in the tree")]
    UnknownParent(u32),
}

/// Rooted tree whose vertices are external (graph) ids.
#[derive(Clone, Debug)]
pub struct RootedTree {
    root: u32,
    parent: BTreeMap<u32, u32>,
    children: BTreeMap<u32, Vec<u32>>,
}

impl RootedTree {
    pub fn new(root: u32) -> Self {
        let mut parent = BTreeMap::new();
        parent.insert(root, root);
        let mut children = BTreeMap::new();
        children.insert(root, Vec::new());
        RootedTree {
            root,
            parent,
            children,
        }
    }

    pub fn root(&self) -> u32 {
        self.root
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        false // a rooted tree always has its root
    }

    pub fn contains(&self, v: u32) -> bool {
        self.parent.contains_key(&v)
    }

    pub fn add_leaf(&mut self, parent: u32, child: u32) -> Result<(), TreeError> {
        if !self.parent.contains_key(&parent) {
            return Err(TreeError::UnknownParent(parent));
        }
        if self.parent.contains_key(&child) {
            return Err(TreeError::DuplicateVertex(child));
        }
        self.parent.insert(child, parent);
        self.children.insert(child, Vec::new());
        let list = self.children.get_mut(&parent).unwrap();
        let pos = list.partition_point(|&c| c < child);
        list.insert(pos, child);
        Ok(())
    }

    /// Parent id; the root maps to itself.
    pub fn parent_of(&self, v: u32) -> Option<u32> {
        self.parent.get(&v).copied()
    }

    pub fn children_of(&self, v: u32) -> &[u32] {
        self.children.get(&v).map(|c| c.as_slice()).unwrap_or(&[])
    }

    /// Vertices in ascending id order.
    pub fn vertices(&self) -> impl Iterator<Item = u32> + '_ {
        self.parent.keys().copied()
    }

    /// Tree edges as (parent, child).
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.children
            .iter()
            .flat_map(|(&p, kids)| kids.iter().map(move |&c| (p, c)))
    }

    pub fn degree(&self, v: u32) -> u32 {
        let kids = self.children_of(v).len() as u32;
        if v == self.root {
            kids
        } else {
            kids + 1
        }
    }

    pub fn max_degree(&self) -> u32 {
        self.vertices().map(|v| self.degree(v)).max().unwrap_or(0)
    }

    /// Pre-order from the root, children visited in ascending id order.
    fn preorder(&self) -> Vec<u32> {
        let mut order = Vec::with_capacity(self.len());
        let mut stack = vec![self.root];
        while let Some(v) = stack.pop() {
            order.push(v);
            // reversed so the smallest child pops first
            stack.extend(self.children_of(v).iter().rev());
        }
        order
    }

    pub fn depths(&self) -> BTreeMap<u32, u32> {
        let mut d = BTreeMap::new();
        d.insert(self.root, 0u32);
        for v in self.preorder() {
            let dv = d[&v];
            for &c in self.children_of(v) {
                d.insert(c, dv + 1);
            }
        }
        d
    }

    pub fn subtree_sizes(&self) -> BTreeMap<u32, u32> {
        let order = self.preorder();
        let mut size: BTreeMap<u32, u32> = order.iter().map(|&v| (v, 1)).collect();
        for &v in order.iter().rev() {
            let s = size[&v];
            if v != self.root {
                *size.get_mut(&self.parent[&v]).unwrap() += s;
            }
        }
        size
    }
}

/// Deepest vertex (ties: smallest id) whose subtree has at least `ell`
/// vertices. Its subtree then has at most ell * max(deg, 1) vertices,
/// because every strictly deeper subtree has fewer than ell.
pub fn subtree_split(t: &RootedTree, ell: u32) -> Result<u32, TreeError> {
    let n = t.len() as u32;
    if ell < 1 || ell > n {
        return Err(TreeError::BadEll { ell, n });
    }
    let sizes = t.subtree_sizes();
    let depths = t.depths();
    let mut best: Option<(u32, u32)> = None; // (depth, id)
    for v in t.vertices() {
        if sizes[&v] >= ell {
            let cand = (depths[&v], v);
            best = Some(match best {
                None => cand,
                Some((bd, bv)) => {
                    if cand.0 > bd || (cand.0 == bd && cand.1 < bv) {
                        cand
                    } else {
                        (bd, bv)
                    }
                }
            });
        }
    }
    Ok(best.expect("root always has subtree size n >= ell").1)
}

/// Connected pieces covering a tree or forest. `tree_of[i]` names the
/// input component piece i was carved from; `undersized` lists whole
/// components too small to form any piece.
#[derive(Clone, Debug, Default)]
pub struct PiecePartition {
    pub pieces: Vec<VertexSet>,
    pub tree_of: Vec<u32>,
    pub undersized: Vec<VertexSet>,
}

/// Carve connected pieces of size in [floor(sqrt(k)), (D+1)*floor(sqrt(k))]
/// where D is the tree's max degree: repeatedly cut the deepest residual
/// subtree weighing at least floor(sqrt(k)); a final light residue merges
/// into the last piece cut, which stays adjacent to it.
pub fn tree_partition(t: &RootedTree, k: u64) -> Result<PiecePartition, TreeError> {
    let ell = (seeds::isqrt(k) as u32).max(1);
    let n = t.len() as u32;
    if n <= ell {
        return Err(TreeError::Undersized { n, ell });
    }
    let depths = t.depths();
    // deepest first, ties by smallest id
    let mut order: Vec<u32> = t.vertices().collect();
    order.sort_by_key(|&v| (std::cmp::Reverse(depths[&v]), v));

    let mut residual: BTreeMap<u32, u32> = t.vertices().map(|v| (v, 1)).collect();
    let mut cut: BTreeMap<u32, bool> = t.vertices().map(|v| (v, false)).collect();
    let mut pieces: Vec<VertexSet> = Vec::new();
    for &v in &order {
        let r = residual[&v];
        if r < ell {
            if v != t.root() {
                *residual.get_mut(&t.parent_of(v).unwrap()).unwrap() += r;
            }
            continue;
        }
        // cut the still-attached part of v's subtree as one piece
        let mut members = Vec::with_capacity(r as usize);
        let mut stack = vec![v];
        while let Some(u) = stack.pop() {
            members.push(u);
            for &c in t.children_of(u) {
                if !cut[&c] {
                    stack.push(c);
                }
            }
        }
        debug_assert_eq!(members.len() as u32, r);
        for &u in &members {
            *cut.get_mut(&u).unwrap() = true;
        }
        pieces.push(VertexSet::from_unsorted(members));
    }
    let leftover: Vec<u32> = t.vertices().filter(|&v| !cut[&v]).collect();
    if !leftover.is_empty() {
        debug_assert!((leftover.len() as u32) < ell);
        let last = pieces.pop().expect("n > ell guarantees at least one cut");
        pieces.push(last.union(&VertexSet::from_unsorted(leftover)));
    }
    let tree_of = vec![0; pieces.len()];
    Ok(PiecePartition {
        pieces,
        tree_of,
        undersized: Vec::new(),
    })
}

/// Per-component partition of a forest. Components below the threshold
/// are reported as undersized; components hitting it exactly become one
/// piece each.
pub fn forest_partition(forest: &[RootedTree], k: u64) -> PiecePartition {
    let ell = (seeds::isqrt(k) as u32).max(1);
    let mut out = PiecePartition::default();
    for (idx, t) in forest.iter().enumerate() {
        let n = t.len() as u32;
        if n < ell {
            out.undersized.push(t.vertices().collect());
        } else if n == ell {
            out.pieces.push(t.vertices().collect());
            out.tree_of.push(idx as u32);
        } else {
            let part = tree_partition(t, k).expect("n > ell checked");
            for piece in part.pieces {
                out.pieces.push(piece);
                out.tree_of.push(idx as u32);
            }
        }
    }
    out
}

/// Random tree grown by attaching each new vertex to a uniformly chosen
/// earlier vertex that still has degree below `max_deg`. Vertex ids are
/// 0..n with root 0.
pub fn random_attachment_tree(n: u32, max_deg: u32, seed: u64) -> RootedTree {
    assert!(n >= 1 && max_deg >= 2);
    use rand::Rng;
    let mut rng = seeds::stream(seeds::mix2(seed, 0x7ee_0001));
    let mut t = RootedTree::new(0);
    let mut deg = vec![0u32; n as usize];
    for i in 1..n {
        let mut parent = None;
        for _ in 0..64 {
            let c = rng.random_range(0..i);
            if deg[c as usize] < max_deg {
                parent = Some(c);
                break;
            }
        }
        // deterministic fallback: first eligible vertex
        let p = parent.unwrap_or_else(|| (0..i).find(|&c| deg[c as usize] < max_deg).unwrap());
        t.add_leaf(p, i).unwrap();
        deg[p as usize] += 1;
        deg[i as usize] += 1;
    }
    t
}
