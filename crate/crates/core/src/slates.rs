//! Candidate-side clustering: dissimilarities between candidates, slates,
//! and the assignment of voters to slates.

use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use serde::Serialize;

use crate::ballot::{Ballot, CandidateId, GeneralizedBallot, Ranking};
use crate::clustering::{Center, Clustering};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::metrics::{borda_embed, BordaConvention, BordaVector};
use crate::profile::Profile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DissimilarityKind {
    /// Average gap between Borda coordinates.
    RankDifference(BordaConvention),
    /// Average expected rank gap over uniform completions.
    CompletionCloud,
}

impl fmt::Display for DissimilarityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DissimilarityKind::RankDifference(BordaConvention::Pessimistic) => f.write_str("rank-difference"),
            DissimilarityKind::RankDifference(BordaConvention::Averaged) => f.write_str("rank-difference-avg"),
            DissimilarityKind::CompletionCloud => f.write_str("completion-cloud"),
        }
    }
}

impl FromStr for DissimilarityKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rank-difference" | "db" => Ok(DissimilarityKind::RankDifference(BordaConvention::Pessimistic)),
            "rank-difference-avg" | "db-avg" => Ok(DissimilarityKind::RankDifference(BordaConvention::Averaged)),
            "completion-cloud" | "cloud" => Ok(DissimilarityKind::CompletionCloud),
            _ => Err(Error::param(format!("unknown candidate dissimilarity '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateDissimilarity {
    pub kind: DissimilarityKind,
    matrix: Vec<Vec<f64>>,
}

impl CandidateDissimilarity {
    pub fn from_matrix(kind: DissimilarityKind, matrix: Vec<Vec<f64>>) -> Result<Self> {
        let m = matrix.len();
        for (i, row) in matrix.iter().enumerate() {
            if row.len() != m {
                return Err(Error::param("dissimilarity matrix must be square"));
            }
            for j in 0..m {
                if row[j] != matrix[j][i] || (i == j && row[j] != 0.0) {
                    return Err(Error::NotSymmetric { row: i, col: j });
                }
            }
        }
        Ok(CandidateDissimilarity { kind, matrix })
    }

    pub fn num_candidates(&self) -> usize {
        self.matrix.len()
    }

    pub fn get(&self, i: CandidateId, j: CandidateId) -> f64 {
        self.matrix[i.0][j.0]
    }

    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.matrix
    }
}

fn weighted_pair_average<F>(p: &Profile, exec: Exec, per_ballot: F) -> Vec<Vec<f64>>
where
    F: Fn(&Ballot) -> Vec<Vec<f64>> + Sync + Send,
{
    let m = p.num_candidates();
    let types: Vec<(&Ballot, u64)> = p.iter().collect();
    let parts = exec.map_slice(&types, |(b, w)| {
        let mut g = per_ballot(b);
        g.iter_mut().flatten().for_each(|x| *x *= *w as f64);
        g
    });
    let mut total = vec![vec![0.0; m]; m];
    for g in parts {
        for (row, add) in total.iter_mut().zip(g) {
            row.iter_mut().zip(add).for_each(|(t, a)| *t += a);
        }
    }
    let n = p.voter_count().max(1) as f64;
    total.iter_mut().flatten().for_each(|x| *x /= n);
    // symmetrize exactly: the per-pair sums are computed once for i < j
    for i in 0..m {
        for j in 0..i {
            total[i][j] = total[j][i];
        }
    }
    total
}

/// `D_B`: voter-weighted average of `|b(σ)_i − b(σ)_j|`.
///
/// Under the pessimistic convention every unranked candidate scores zero, so
/// candidates nobody ranks come out identical.
pub fn dissim_rank_difference(p: &Profile, convention: BordaConvention, exec: Exec) -> CandidateDissimilarity {
    let m = p.num_candidates();
    let matrix = weighted_pair_average(p, exec, |b| {
        let v = borda_embed(b, convention);
        let d = v.doubled();
        let mut g = vec![vec![0.0; m]; m];
        for i in 0..m {
            for j in i + 1..m {
                g[i][j] = (d[i] - d[j]).abs() as f64 / 2.0;
            }
        }
        g
    });
    CandidateDissimilarity { kind: DissimilarityKind::RankDifference(convention), matrix }
}

/// Expected `|τ(i) − τ(j)|` over the uniform completions `τ` of `b`, where
/// `τ(c)` is the 1-based position of `c`.
pub fn completion_gap(b: &Ballot, i: CandidateId, j: CandidateId) -> Ratio<i64> {
    let m = b.num_candidates() as i64;
    let u = b.unranked_count() as i64;
    let pos = b.positions();
    match (pos[i.0], pos[j.0]) {
        (Some(a), Some(c)) => Ratio::from_integer((a as i64 - c as i64).abs()),
        (Some(a), None) | (None, Some(a)) => {
            let a = a as i64 + 1;
            let sum: i64 = (m - u + 1..=m).map(|t| t - a).sum();
            Ratio::new(sum, u)
        }
        (None, None) if i == j => Ratio::from_integer(0),
        (None, None) => Ratio::new(u + 1, 3),
    }
}

/// `D̄_B`: voter-weighted average of [`completion_gap`]. A metric on candidates.
pub fn dissim_completion_cloud(p: &Profile, exec: Exec) -> CandidateDissimilarity {
    let m = p.num_candidates();
    let matrix = weighted_pair_average(p, exec, |b| {
        let mut g = vec![vec![0.0; m]; m];
        for i in 0..m {
            for j in i + 1..m {
                let r = completion_gap(b, CandidateId(i), CandidateId(j));
                g[i][j] = *r.numer() as f64 / *r.denom() as f64;
            }
        }
        g
    });
    CandidateDissimilarity { kind: DissimilarityKind::CompletionCloud, matrix }
}

pub fn candidate_dissimilarity(p: &Profile, kind: DissimilarityKind, exec: Exec) -> CandidateDissimilarity {
    match kind {
        DissimilarityKind::RankDifference(conv) => dissim_rank_difference(p, conv, exec),
        DissimilarityKind::CompletionCloud => dissim_completion_cloud(p, exec),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Linkage {
    Single,
    Average,
    Complete,
}

impl FromStr for Linkage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single" => Ok(Linkage::Single),
            "average" => Ok(Linkage::Average),
            "complete" => Ok(Linkage::Complete),
            _ => Err(Error::param(format!("unknown linkage '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum SlateMethod {
    Centers { centers: Vec<CandidateId> },
    Agglomerative(Linkage),
    SimplexOptimal,
}

/// One agglomeration step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Merge {
    pub left: Vec<CandidateId>,
    pub right: Vec<CandidateId>,
    pub distance: f64,
    /// Number of slates after this merge.
    pub slates_after: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlatePartition {
    m: usize,
    slates: Vec<Vec<CandidateId>>,
    pub method: SlateMethod,
    pub merge_history: Vec<Merge>,
    /// Objective value of the method (summed distance to centers, or the
    /// simplex objective); zero for agglomeration.
    pub cost: f64,
}

impl SlatePartition {
    /// Validates and normalizes: members sorted, slates ordered by their
    /// smallest member.
    pub fn new(mut slates: Vec<Vec<CandidateId>>, m: usize, method: SlateMethod) -> Result<Self> {
        let mut seen = vec![false; m];
        for s in &mut slates {
            if s.is_empty() {
                return Err(Error::InvalidTiers("empty slate".into()));
            }
            s.sort_unstable();
            for c in s.iter() {
                if c.0 >= m {
                    return Err(Error::CandidateOutOfRange { index: c.0, m });
                }
                if std::mem::replace(&mut seen[c.0], true) {
                    return Err(Error::DuplicateCandidate { candidate: c.0 });
                }
            }
        }
        if seen.contains(&false) {
            return Err(Error::InvalidTiers("slates must cover every candidate".into()));
        }
        slates.sort_by_key(|s| s[0]);
        Ok(SlatePartition { m, slates, method, merge_history: Vec::new(), cost: 0.0 })
    }

    pub fn k(&self) -> usize {
        self.slates.len()
    }

    pub fn num_candidates(&self) -> usize {
        self.m
    }

    pub fn slates(&self) -> &[Vec<CandidateId>] {
        &self.slates
    }

    pub fn slate_of(&self, c: CandidateId) -> usize {
        self.slates.iter().position(|s| s.contains(&c)).expect("slates cover all candidates")
    }

    /// Slates as 1-based candidate numbers, e.g. `{1,6} {2,3,4,5,7}`.
    pub fn render(&self, names: Option<&[String]>) -> String {
        let parts: Vec<String> = self
            .slates
            .iter()
            .map(|s| {
                let labels: Vec<String> = s
                    .iter()
                    .map(|c| match names {
                        Some(n) => n[c.0].clone(),
                        None => (c.0 + 1).to_string(),
                    })
                    .collect();
                format!("{{{}}}", labels.join(","))
            })
            .collect();
        parts.join(" ")
    }
}

fn check_slate_k(k: usize, m: usize) -> Result<()> {
    if k == 0 || k > m {
        return Err(Error::param(format!("k = {k} must be between 1 and {m}")));
    }
    Ok(())
}

/// Calls `f` on every `k`-subset of `0..n` in lexicographic order.
fn for_each_subset(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let Some(pos) = (0..k).rev().find(|&i| idx[i] < n - k + i) else { return };
        idx[pos] += 1;
        for i in pos + 1..k {
            idx[i] = idx[i - 1] + 1;
        }
    }
}

fn voronoi(d: &CandidateDissimilarity, centers: &[usize]) -> (Vec<Vec<CandidateId>>, f64) {
    let m = d.num_candidates();
    let mut cells = vec![Vec::new(); centers.len()];
    let mut cost = 0.0;
    for c in 0..m {
        let mut best = (0, f64::INFINITY);
        for (slot, &z) in centers.iter().enumerate() {
            let v = d.matrix[c][z];
            if v < best.1 {
                best = (slot, v);
            }
        }
        cells[best.0].push(CandidateId(c));
        cost += best.1;
    }
    (cells, cost)
}

/// Exhaustive optimal `k` candidate centers; each slate is the Voronoi cell
/// of a center, ties going to the lower center.
pub fn slates_by_centers(d: &CandidateDissimilarity, k: usize) -> Result<SlatePartition> {
    let m = d.num_candidates();
    check_slate_k(k, m)?;
    let mut best: Option<(Vec<usize>, f64)> = None;
    for_each_subset(m, k, |centers| {
        let cost: f64 = (0..m).map(|c| centers.iter().map(|&z| d.matrix[c][z]).fold(f64::INFINITY, f64::min)).sum();
        if best.as_ref().is_none_or(|b| cost < b.1) {
            best = Some((centers.to_vec(), cost));
        }
    });
    let (centers, _) = best.expect("at least one subset");
    let (cells, cost) = voronoi(d, &centers);
    let method = SlateMethod::Centers { centers: centers.into_iter().map(CandidateId).collect() };
    let mut s = SlatePartition::new(cells, m, method)?;
    s.cost = cost;
    Ok(s)
}

fn linkage_distance(d: &CandidateDissimilarity, a: &[CandidateId], b: &[CandidateId], linkage: Linkage) -> f64 {
    let pairs = a.iter().flat_map(|x| b.iter().map(move |y| d.get(*x, *y)));
    match linkage {
        Linkage::Single => pairs.fold(f64::INFINITY, f64::min),
        Linkage::Complete => pairs.fold(f64::NEG_INFINITY, f64::max),
        Linkage::Average => pairs.sum::<f64>() / (a.len() * b.len()) as f64,
    }
}

/// Hierarchical agglomeration from singletons down to `k` slates. The merge
/// history always records the full dendrogram down to one slate.
pub fn slates_by_agglomeration(d: &CandidateDissimilarity, k: usize, linkage: Linkage) -> Result<SlatePartition> {
    let m = d.num_candidates();
    check_slate_k(k, m)?;
    let mut clusters: Vec<Vec<CandidateId>> = (0..m).map(|c| vec![CandidateId(c)]).collect();
    let mut history = Vec::with_capacity(m.saturating_sub(1));
    let mut at_k = None;
    loop {
        if clusters.len() == k {
            at_k = Some(clusters.clone());
        }
        if clusters.len() == 1 {
            break;
        }
        // clusters stay ordered by smallest member, so the first minimal pair
        // in scan order is the deterministic choice
        let mut best = (0, 1, f64::INFINITY);
        for a in 0..clusters.len() {
            for b in a + 1..clusters.len() {
                let dist = linkage_distance(d, &clusters[a], &clusters[b], linkage);
                if dist < best.2 {
                    best = (a, b, dist);
                }
            }
        }
        let (a, b, distance) = best;
        let right = clusters.remove(b);
        let left = clusters[a].clone();
        clusters[a].extend(right.iter().copied());
        clusters[a].sort_unstable();
        history.push(Merge { left, right, distance, slates_after: clusters.len() });
    }
    let mut s = SlatePartition::new(at_k.expect("k is reached"), m, SlateMethod::Agglomerative(linkage))?;
    s.merge_history = history;
    Ok(s)
}

/// Borda vector of the two-tier generalized ballot (slate, complement).
pub fn slate_embedding(s: &SlatePartition, i: usize, convention: BordaConvention) -> Result<BordaVector> {
    let slate = s.slates.get(i).ok_or_else(|| Error::param(format!("no slate {i}")))?;
    let rest: Vec<CandidateId> = (0..s.m).map(CandidateId).filter(|c| !slate.contains(c)).collect();
    let mut tiers = vec![slate.clone()];
    if !rest.is_empty() {
        tiers.push(rest);
    }
    Ok(borda_embed(&GeneralizedBallot::new(tiers, s.m)?, convention))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SlateRule {
    /// Closest slate embedding in half-`L1`.
    NearestEmbedding,
    /// Most pessimistic Borda points per slate member.
    BordaPerCandidate,
}

impl FromStr for SlateRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nearest" | "nearest-embedding" => Ok(SlateRule::NearestEmbedding),
            "borda" | "borda-per-candidate" => Ok(SlateRule::BordaPerCandidate),
            _ => Err(Error::param(format!("unknown slate rule '{s}'"))),
        }
    }
}

/// Average pessimistic Borda points `b` awards to each slate's members.
pub fn per_slate_awards<R: Ranking + ?Sized>(b: &R, s: &SlatePartition) -> Vec<f64> {
    let v = borda_embed(b, BordaConvention::Pessimistic);
    s.slates
        .iter()
        .map(|slate| slate.iter().map(|c| v.doubled()[c.0]).sum::<i64>() as f64 / 2.0 / slate.len() as f64)
        .collect()
}

/// Assigns every ballot type to a slate, ties going to the lower slate. The
/// result's centers are the slate embeddings and its cost is the summed
/// half-`L1` distance to the assigned one.
pub fn assign_ballots_to_slates(p: &Profile, s: &SlatePartition, rule: SlateRule, convention: BordaConvention) -> Result<Clustering> {
    if s.m != p.num_candidates() {
        return Err(Error::MismatchedCandidates { left: p.num_candidates(), right: s.m });
    }
    let embeddings: Vec<BordaVector> = (0..s.k()).map(|i| slate_embedding(s, i, convention)).collect::<Result<_>>()?;
    let mut assignment = Vec::with_capacity(p.num_types());
    let mut cost = 0.0;
    for (b, w) in p.iter() {
        let bv = borda_embed(b, BordaConvention::Pessimistic);
        let dists: Vec<f64> = embeddings.iter().map(|e| bv.half_l1(e).to_f64()).collect();
        let label = match rule {
            SlateRule::NearestEmbedding => first_extreme(&dists, |a, b| a < b),
            SlateRule::BordaPerCandidate => first_extreme(&per_slate_awards(b, s), |a, b| a > b),
        };
        cost += w as f64 * dists[label];
        assignment.push(label);
    }
    Ok(Clustering {
        k: s.k(),
        centers: embeddings.iter().map(|e| Center::Vector(e.values())).collect(),
        assignment,
        weights: p.weights(),
        cost,
    })
}

fn first_extreme(values: &[f64], better: impl Fn(f64, f64) -> bool) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if better(v, values[best]) {
            best = i;
        }
    }
    best
}

/// A point of the probability simplex, one coordinate per slate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimplexPoint {
    pub coords: Vec<f64>,
    /// The ballot awarded no points to any slate; mapped to the barycenter.
    pub degenerate: bool,
}

impl SimplexPoint {
    /// Index of the Euclidean-nearest vertex (the largest coordinate), ties
    /// to the lower index.
    pub fn nearest_vertex(&self) -> usize {
        first_extreme(&self.coords, |a, b| a > b)
    }

    pub fn distance_to_vertex(&self, i: usize) -> f64 {
        self.coords
            .iter()
            .enumerate()
            .map(|(j, &x)| if i == j { (1.0 - x).powi(2) } else { x * x })
            .sum::<f64>()
            .sqrt()
    }
}

pub fn simplex_map<R: Ranking + ?Sized>(b: &R, s: &SlatePartition) -> SimplexPoint {
    let v = per_slate_awards(b, s);
    let total: f64 = v.iter().sum();
    if total <= 0.0 {
        let k = v.len() as f64;
        return SimplexPoint { coords: vec![1.0 / k; v.len()], degenerate: true };
    }
    SimplexPoint { coords: v.into_iter().map(|x| x / total).collect(), degenerate: false }
}

/// Partitions of `0..m` into exactly `k` non-empty blocks, as restricted
/// growth strings.
fn for_each_set_partition(m: usize, k: usize, mut f: impl FnMut(&[usize])) {
    fn rec(labels: &mut Vec<usize>, used: usize, m: usize, k: usize, f: &mut dyn FnMut(&[usize])) {
        if labels.len() == m {
            if used == k {
                f(labels);
            }
            return;
        }
        let remaining = m - labels.len();
        if used + remaining < k {
            return;
        }
        for l in 0..=used.min(k - 1) {
            labels.push(l);
            rec(labels, used.max(l + 1), m, k, f);
            labels.pop();
        }
    }
    rec(&mut Vec::with_capacity(m), 0, m, k, &mut f);
}

/// Exhaustive search for the slates minimizing the voter-weighted Euclidean
/// distance from each ballot's simplex point to its nearest vertex. Limited
/// to `m <= 10` and `k <= 3`.
pub fn slates_by_simplex_objective(p: &Profile, k: usize, exec: Exec) -> Result<SlatePartition> {
    let m = p.num_candidates();
    check_slate_k(k, m)?;
    if m > 10 || k > 3 {
        return Err(Error::param("simplex-optimal slates are limited to m <= 10 and k <= 3"));
    }
    let mut partitions = Vec::new();
    for_each_set_partition(m, k, |labels| partitions.push(labels.to_vec()));
    let types: Vec<(Vec<i64>, u64)> = p.iter().map(|(b, w)| (borda_embed(b, BordaConvention::Pessimistic).doubled().to_vec(), w)).collect();
    let costs = exec.map_slice(&partitions, |labels| {
        let sizes: Vec<f64> = (0..k).map(|l| labels.iter().filter(|&&x| x == l).count() as f64).collect();
        types
            .iter()
            .map(|(v, w)| {
                let mut awards = vec![0.0; k];
                for (c, &l) in labels.iter().enumerate() {
                    awards[l] += v[c] as f64;
                }
                awards.iter_mut().zip(&sizes).for_each(|(a, s)| *a /= s);
                let total: f64 = awards.iter().sum();
                let pt = if total > 0.0 { awards.iter().map(|a| a / total).collect() } else { vec![1.0 / k as f64; k] };
                let sp = SimplexPoint { coords: pt, degenerate: false };
                *w as f64 * sp.distance_to_vertex(sp.nearest_vertex())
            })
            .sum::<f64>()
    });
    let (best, cost) = costs
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &c)| if c < acc.1 { (i, c) } else { acc });
    let labels = &partitions[best];
    let slates = (0..k).map(|l| (0..m).filter(|&c| labels[c] == l).map(CandidateId).collect()).collect();
    let mut s = SlatePartition::new(slates, m, SlateMethod::SimplexOptimal)?;
    s.cost = cost;
    Ok(s)
}
