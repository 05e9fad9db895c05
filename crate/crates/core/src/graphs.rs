//! Ballot graphs whose path metrics realize the ballot distances.
//!
//! * [`GraphVariant::Basic`]: neighbor swaps (weight 1) plus truncation and
//!   extension between lengths `k - 1` and `k` (weight `(m - k) / 2`). Its path
//!   metric is the head-to-head distance.
//! * [`GraphVariant::Shortcut`]: adds a swap of positions `i` and `i + k` with
//!   weight `k`. Its path metric is the pessimistic Borda distance.
//! * [`GraphVariant::Generalized`]: weak orders, joined when one merges two
//!   adjacent tiers of the other (weight `r * s / 2` for tier sizes `r`, `s`).
//!   Its path metric is the head-to-head distance on weak orders.
//!
//! Nodes are kept in a fixed sorted order so builds are deterministic.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};
use std::fmt::Write as _;

use crate::ballot::{canonicalize, count_ballots, enumerate_ballots, enumerate_weak_orders, Ballot, CandidateId, GeneralizedBallot};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::half::HalfInt;
use crate::metrics::{borda_embed, dist_b, dist_h, BordaConvention};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GraphVariant {
    Basic,
    Shortcut,
    Generalized,
    /// Merge edges plus swaps of two singleton tiers, weighted by their
    /// position gap. Experimental: only upper bounds are checked.
    GeneralizedShortcut,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GraphOptions {
    /// Add the empty ballot, joined to every bullet vote.
    pub include_empty: bool,
    /// Refuse to build graphs with more nodes than this.
    pub max_nodes: u128,
}

impl Default for GraphOptions {
    fn default() -> Self {
        GraphOptions { include_empty: false, max_nodes: 50_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeLabel {
    Empty,
    Partial(Ballot),
    Weak(GeneralizedBallot),
}

impl NodeLabel {
    pub fn to_generalized(&self, m: usize) -> GeneralizedBallot {
        match self {
            NodeLabel::Empty => GeneralizedBallot::all_tied(m),
            NodeLabel::Partial(b) => b.to_generalized(),
            NodeLabel::Weak(g) => g.clone(),
        }
    }

    /// Candidate indices joined by `>`; tied tiers render as `{i,j}`.
    pub fn render(&self) -> String {
        match self {
            NodeLabel::Empty => String::new(),
            NodeLabel::Partial(b) => b.to_index_string(),
            NodeLabel::Weak(g) => g
                .tiers()
                .iter()
                .map(|t| {
                    let ids: Vec<String> = t.iter().map(|c| c.0.to_string()).collect();
                    if t.len() == 1 {
                        ids[0].clone()
                    } else {
                        format!("{{{}}}", ids.join(","))
                    }
                })
                .collect::<Vec<_>>()
                .join(">"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BallotGraph {
    variant: GraphVariant,
    m: usize,
    nodes: Vec<NodeLabel>,
    index: HashMap<NodeLabel, usize>,
    adjacency: Vec<Vec<(usize, HalfInt)>>,
}

fn fubini(m: usize) -> u128 {
    // ordered Bell numbers: a(n) = sum_k C(n,k) a(n-k)
    let mut a = vec![1u128; m + 1];
    for n in 1..=m {
        let mut binom = 1u128;
        let mut total = 0u128;
        for k in 1..=n {
            binom = binom * (n - k + 1) as u128 / k as u128;
            total += binom * a[n - k];
        }
        a[n] = total;
    }
    a[m]
}

pub fn build_graph(m: usize, variant: GraphVariant, opts: GraphOptions) -> Result<BallotGraph> {
    if m < 2 {
        return Err(Error::param("ballot graphs need at least two candidates"));
    }
    let generalized = matches!(variant, GraphVariant::Generalized | GraphVariant::GeneralizedShortcut);
    let size = if generalized { fubini(m) } else { count_ballots(m)? + opts.include_empty as u128 };
    if size > opts.max_nodes {
        return Err(Error::BudgetExceeded { what: format!("ballot graph on {m} candidates"), estimate: size, cap: opts.max_nodes });
    }
    let mut nodes: Vec<NodeLabel> = if generalized {
        enumerate_weak_orders(m)?.into_iter().map(NodeLabel::Weak).collect()
    } else {
        let mut v: Vec<NodeLabel> = enumerate_ballots(m)?.into_iter().map(NodeLabel::Partial).collect();
        if opts.include_empty {
            v.insert(0, NodeLabel::Empty);
        }
        v
    };
    nodes.sort();
    let index: HashMap<NodeLabel, usize> = nodes.iter().cloned().enumerate().map(|(i, n)| (n, i)).collect();
    let mut g = BallotGraph { variant, m, adjacency: vec![Vec::new(); nodes.len()], nodes, index };
    let mut edges: Vec<(usize, usize, HalfInt)> = Vec::new();
    for (i, node) in g.nodes.iter().enumerate() {
        match node {
            NodeLabel::Empty => {
                for c in 0..m {
                    let bullet = NodeLabel::Partial(canonicalize(&[CandidateId(c)], m)?);
                    edges.push((i, g.index[&bullet], HalfInt::from_doubled(m as i64 - 1)));
                }
            }
            NodeLabel::Partial(b) => g.partial_edges(i, b, &mut edges),
            NodeLabel::Weak(w) => g.weak_edges(i, w, &mut edges),
        }
    }
    for (a, b, w) in edges {
        g.adjacency[a].push((b, w));
        g.adjacency[b].push((a, w));
    }
    for adj in &mut g.adjacency {
        adj.sort();
    }
    Ok(g)
}

impl BallotGraph {
    /// Extensions and swaps out of a partial ballot. Each undirected edge is
    /// emitted once: extensions from the shorter end, swaps from the lower index.
    fn partial_edges(&self, i: usize, b: &Ballot, edges: &mut Vec<(usize, usize, HalfInt)>) {
        let m = self.m;
        let len = b.len();
        if len + 1 < m {
            // extending to length k = len + 1 weighs (m - k) / 2
            let weight = HalfInt::from_doubled((m - len - 1) as i64);
            for c in b.unranked() {
                let mut raw = b.ranking().to_vec();
                raw.push(c);
                let next = canonicalize(&raw, m).expect("extension of a valid ballot");
                edges.push((i, self.index[&NodeLabel::Partial(next)], weight));
            }
        }
        let max_gap = match self.variant {
            GraphVariant::Shortcut => len.saturating_sub(1),
            _ => 1,
        };
        for p in 0..len {
            for q in p + 1..len.min(p + max_gap + 1) {
                let mut raw = b.ranking().to_vec();
                raw.swap(p, q);
                let j = self.index[&NodeLabel::Partial(Ballot::from_parts_unchecked(m, raw))];
                if j > i {
                    edges.push((i, j, HalfInt::from_int((q - p) as i64)));
                }
            }
        }
    }

    fn weak_edges(&self, i: usize, w: &GeneralizedBallot, edges: &mut Vec<(usize, usize, HalfInt)>) {
        let tiers = w.tiers();
        for t in 0..tiers.len().saturating_sub(1) {
            let (r, s) = (tiers[t].len(), tiers[t + 1].len());
            let mut merged: Vec<Vec<CandidateId>> = Vec::with_capacity(tiers.len() - 1);
            merged.extend_from_slice(&tiers[..t]);
            let mut block = [tiers[t].as_slice(), tiers[t + 1].as_slice()].concat();
            block.sort();
            merged.push(block);
            merged.extend_from_slice(&tiers[t + 2..]);
            let target = NodeLabel::Weak(GeneralizedBallot::from_tiers_unchecked(self.m, merged));
            edges.push((i, self.index[&target], HalfInt::from_doubled((r * s) as i64)));
        }
        if self.variant == GraphVariant::GeneralizedShortcut {
            let starts: Vec<usize> = tiers
                .iter()
                .scan(0, |pos, t| {
                    let s = *pos;
                    *pos += t.len();
                    Some(s)
                })
                .collect();
            for a in 0..tiers.len() {
                for b in a + 2..tiers.len() {
                    if tiers[a].len() == 1 && tiers[b].len() == 1 {
                        let mut swapped = tiers.to_vec();
                        swapped.swap(a, b);
                        let j = self.index[&NodeLabel::Weak(GeneralizedBallot::from_tiers_unchecked(self.m, swapped))];
                        if j > i {
                            edges.push((i, j, HalfInt::from_int((starts[b] - starts[a]) as i64)));
                        }
                    }
                }
            }
        }
    }

    pub fn variant(&self) -> GraphVariant {
        self.variant
    }

    pub fn num_candidates(&self) -> usize {
        self.m
    }

    pub fn nodes(&self) -> &[NodeLabel] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn neighbors(&self, i: usize) -> &[(usize, HalfInt)] {
        &self.adjacency[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    pub fn node_index(&self, label: &NodeLabel) -> Result<usize> {
        self.index.get(label).copied().ok_or(Error::UnknownNode)
    }

    pub fn ballot_index(&self, b: &Ballot) -> Result<usize> {
        match self.variant {
            GraphVariant::Basic | GraphVariant::Shortcut => self.node_index(&NodeLabel::Partial(b.clone())),
            _ => self.node_index(&NodeLabel::Weak(b.to_generalized())),
        }
    }

    /// Weight of the edge `a - b`, if present.
    pub fn edge_weight(&self, a: usize, b: usize) -> Option<HalfInt> {
        self.adjacency[a].iter().find(|(n, _)| *n == b).map(|&(_, w)| w)
    }

    /// Shortest-path distances from `source` to every node.
    pub fn distances_from(&self, source: usize) -> Vec<Option<HalfInt>> {
        let mut dist: Vec<Option<HalfInt>> = vec![None; self.nodes.len()];
        let mut heap = BinaryHeap::new();
        dist[source] = Some(HalfInt::ZERO);
        heap.push(Reverse((HalfInt::ZERO, source)));
        while let Some(Reverse((d, u))) = heap.pop() {
            if dist[u].is_some_and(|best| d > best) {
                continue;
            }
            for &(v, w) in &self.adjacency[u] {
                let nd = d + w;
                if dist[v].is_none_or(|cur| nd < cur) {
                    dist[v] = Some(nd);
                    heap.push(Reverse((nd, v)));
                }
            }
        }
        dist
    }

    pub fn path_distance(&self, a: usize, b: usize) -> Result<HalfInt> {
        if a >= self.nodes.len() || b >= self.nodes.len() {
            return Err(Error::UnknownNode);
        }
        self.distances_from(a)[b].ok_or(Error::UnknownNode)
    }

    pub fn ballot_distance(&self, x: &Ballot, y: &Ballot) -> Result<HalfInt> {
        self.path_distance(self.ballot_index(x)?, self.ballot_index(y)?)
    }

    /// All-pairs shortest paths, one Dijkstra per source.
    pub fn all_pairs(&self, exec: Exec) -> Vec<Vec<HalfInt>> {
        exec.map_range(self.nodes.len(), |s| {
            self.distances_from(s).into_iter().map(|d| d.expect("ballot graphs are connected")).collect()
        })
    }

    /// The distance the path metric is supposed to realize.
    pub fn expected_distance(&self, a: usize, b: usize) -> HalfInt {
        let (x, y) = (self.nodes[a].to_generalized(self.m), self.nodes[b].to_generalized(self.m));
        match self.variant {
            GraphVariant::Shortcut => dist_b(&x, &y, BordaConvention::Pessimistic).unwrap(),
            _ => dist_h(&x, &y).unwrap(),
        }
    }

    /// Compares the path metric with the metric it should realize on every pair.
    pub fn verify_path_metric(&self, exec: Exec) -> GraphCheck {
        let rows = exec.map_range(self.nodes.len(), |s| {
            let dist = self.distances_from(s);
            (0..self.nodes.len())
                .filter_map(|t| {
                    let got = dist[t].expect("ballot graphs are connected");
                    let want = self.expected_distance(s, t);
                    (got != want).then_some((s, t, got, want))
                })
                .collect::<Vec<_>>()
        });
        let n = self.nodes.len();
        GraphCheck { pairs_checked: n * n, mismatches: rows.into_iter().flatten().collect() }
    }

    /// One line per edge: `node_a<TAB>node_b<TAB>doubled_weight`.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for (a, adj) in self.adjacency.iter().enumerate() {
            for &(b, w) in adj.iter().filter(|(b, _)| *b > a) {
                writeln!(out, "{}\t{}\t{}", self.nodes[a].render(), self.nodes[b].render(), w.doubled()).unwrap();
            }
        }
        out
    }
}

/// Outcome of [`BallotGraph::verify_path_metric`]; mismatches hold
/// `(source, target, path distance, expected distance)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphCheck {
    pub pairs_checked: usize,
    pub mismatches: Vec<(usize, usize, HalfInt, HalfInt)>,
}

impl GraphCheck {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MoveKind {
    Extend,
    /// Exchange of the candidates at 0-based positions `i < j`.
    Swap { i: usize, j: usize },
    Truncate,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Move {
    pub from: Ballot,
    pub to: Ballot,
    pub kind: MoveKind,
    pub weight: HalfInt,
}

/// A path `x -> x' -> y' -> y` through the shortcut ballot graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeodesicPlan {
    /// `[x, x', y', y]`
    pub waypoints: [Ballot; 4],
    pub moves: Vec<Move>,
}

impl GeodesicPlan {
    pub fn total_weight(&self) -> HalfInt {
        self.moves.iter().map(|mv| mv.weight).sum()
    }

    /// Weight of the swap segment `x' -> y'` alone.
    pub fn swap_weight(&self) -> HalfInt {
        self.moves.iter().filter(|mv| matches!(mv.kind, MoveKind::Swap { .. })).map(|mv| mv.weight).sum()
    }

    /// Every ballot visited, starting with `x`.
    pub fn ballots(&self) -> Vec<Ballot> {
        let mut out = vec![self.waypoints[0].clone()];
        out.extend(self.moves.iter().map(|mv| mv.to.clone()));
        out
    }

    /// True when every candidate's pessimistic Borda score moves monotonically
    /// from its start value to its end value.
    pub fn is_borda_monotone(&self) -> bool {
        let scores: Vec<Vec<i64>> = self
            .ballots()
            .iter()
            .map(|b| borda_embed(b, BordaConvention::Pessimistic).doubled().to_vec())
            .collect();
        let (first, last) = (&scores[0], &scores[scores.len() - 1]);
        (0..first.len()).all(|c| {
            let dir = (last[c] - first[c]).signum();
            scores.windows(2).all(|w| {
                let step = (w[1][c] - w[0][c]).signum();
                step == 0 || step == dir
            })
        })
    }
}

fn extend_in_order(from: &Ballot, order: &Ballot) -> Vec<Ballot> {
    let m = from.num_candidates();
    let mut path = vec![from.clone()];
    let mut raw = from.ranking().to_vec();
    for &c in order.ranking() {
        let current = path.last().unwrap();
        if current.contains(c) {
            continue;
        }
        raw.push(c);
        path.push(canonicalize(&raw, m).expect("extension of a valid ballot"));
    }
    path
}

fn extension_weight(m: usize, shorter: &Ballot) -> HalfInt {
    // edge between lengths k - 1 and k, with k = shorter.len() + 1
    HalfInt::from_doubled((m - shorter.len() - 1) as i64)
}

/// A shortest path from `x` to `y` in the shortcut ballot graph.
///
/// `x` is extended by the candidates only `y` ranks (in `y`'s order), `y` by
/// those only `x` ranks, and the two resulting rankings of a common candidate
/// set are joined by swaps: each swap exchanges the first candidate that must
/// move up with the last candidate before it that must move down.
pub fn borda_geodesic(x: &Ballot, y: &Ballot) -> Result<GeodesicPlan> {
    let m = x.num_candidates();
    if y.num_candidates() != m {
        return Err(Error::MismatchedCandidates { left: m, right: y.num_candidates() });
    }
    let mut moves = Vec::new();

    let up = extend_in_order(x, y);
    for w in up.windows(2) {
        moves.push(Move { from: w[0].clone(), to: w[1].clone(), kind: MoveKind::Extend, weight: extension_weight(m, &w[0]) });
    }
    let x_prime = up.last().unwrap().clone();
    let down = extend_in_order(y, x);
    let y_prime = down.last().unwrap().clone();
    debug_assert_eq!(x_prime.len(), y_prime.len());

    let len = x_prime.len();
    let mut target = vec![usize::MAX; m];
    for (p, c) in y_prime.ranking().iter().enumerate() {
        target[c.0] = p;
    }
    let mut current = x_prime.ranking().to_vec();
    while let Some(j) = (0..len).find(|&p| target[current[p].0] < p) {
        let i = (0..j).rev().find(|&p| target[current[p].0] > p).expect("a candidate ahead must move down");
        let from = Ballot::from_parts_unchecked(m, current.clone());
        current.swap(i, j);
        let to = Ballot::from_parts_unchecked(m, current.clone());
        moves.push(Move { from, to, kind: MoveKind::Swap { i, j }, weight: HalfInt::from_int((j - i) as i64) });
    }
    debug_assert_eq!(current, y_prime.ranking());

    for w in down.windows(2).rev() {
        moves.push(Move { from: w[1].clone(), to: w[0].clone(), kind: MoveKind::Truncate, weight: extension_weight(m, &w[0]) });
    }
    Ok(GeodesicPlan { waypoints: [x.clone(), x_prime, y_prime, y.clone()], moves })
}

/// `sum(k_i) - r` over the `r` swaps of lengths `k_i` in the plan: how much
/// shorter the plan's swap segment is than the same moves made by neighbor swaps.
pub fn shortcut_savings(plan: &GeodesicPlan) -> i64 {
    plan.moves
        .iter()
        .filter_map(|mv| match mv.kind {
            MoveKind::Swap { i, j } => Some((j - i) as i64 - 1),
            _ => None,
        })
        .sum()
}
