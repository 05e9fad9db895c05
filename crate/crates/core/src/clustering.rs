//! Bloc detection: center-based clustering of the voters in a profile.
//!
//! All algorithms work on the distinct ballot types of a profile, weighting
//! each type by how many voters cast it. Cluster labels follow center order
//! and nearest-center ties go to the lowest label.

use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::ballot::{Ballot, Ranking};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::metrics::{borda_from_view, disagreements_from_levels, for_each_complete_ranking, h2h_from_levels, BordaConvention};
use crate::profile::Profile;

/// Which ballot distance to cluster with.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum DistanceSpec {
    BordaPessimistic,
    BordaAveraged,
    HeadToHead,
    Hausdorff,
    Kp(f64),
}

impl DistanceSpec {
    /// Rejects `K^(p)` outside `[1/2, 1]`, where it stops being a metric.
    pub fn require_metric(self) -> Result<Self> {
        match self {
            DistanceSpec::Kp(p) if !(0.5..=1.0).contains(&p) => {
                Err(Error::param(format!("K^(p) is only a metric for p in [1/2, 1], got {p}")))
            }
            other => Ok(other),
        }
    }
}

impl fmt::Display for DistanceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DistanceSpec::BordaPessimistic => f.write_str("borda"),
            DistanceSpec::BordaAveraged => f.write_str("borda-avg"),
            DistanceSpec::HeadToHead => f.write_str("h2h"),
            DistanceSpec::Hausdorff => f.write_str("hausdorff"),
            DistanceSpec::Kp(p) => write!(f, "kp:{p}"),
        }
    }
}

impl FromStr for DistanceSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "borda" | "borda-pessimistic" | "db" => Ok(DistanceSpec::BordaPessimistic),
            "borda-avg" | "borda-averaged" => Ok(DistanceSpec::BordaAveraged),
            "h2h" | "head-to-head" | "dh" | "kendall" => Ok(DistanceSpec::HeadToHead),
            "hausdorff" => Ok(DistanceSpec::Hausdorff),
            _ => match s.strip_prefix("kp:") {
                Some(p) => {
                    let p: f64 = p.parse().map_err(|_| Error::param(format!("bad K^(p) parameter '{p}'")))?;
                    if p > 0.0 && p <= 1.0 {
                        Ok(DistanceSpec::Kp(p))
                    } else {
                        Err(Error::param(format!("K^(p) needs p in (0, 1], got {p}")))
                    }
                }
                None => Err(Error::param(format!("unknown metric '{s}'"))),
            },
        }
    }
}

/// A ballot with everything needed to evaluate any [`DistanceSpec`] cheaply.
#[derive(Debug, Clone)]
pub struct PreparedBallot {
    levels: Vec<usize>,
    borda_pess: Vec<i64>,
    borda_avg: Vec<i64>,
    partial: bool,
}

impl PreparedBallot {
    pub fn new<R: Ranking + ?Sized>(r: &R) -> Self {
        let view = r.tier_view();
        PreparedBallot {
            borda_pess: borda_from_view(&view, BordaConvention::Pessimistic).doubled().to_vec(),
            borda_avg: borda_from_view(&view, BordaConvention::Averaged).doubled().to_vec(),
            levels: view.level,
            partial: r.is_partial(),
        }
    }

    pub fn distance(&self, other: &PreparedBallot, spec: DistanceSpec) -> f64 {
        let half_l1 = |a: &[i64], b: &[i64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<i64>() as f64 / 4.0;
        match spec {
            DistanceSpec::BordaPessimistic => half_l1(&self.borda_pess, &other.borda_pess),
            DistanceSpec::BordaAveraged => half_l1(&self.borda_avg, &other.borda_avg),
            DistanceSpec::HeadToHead => {
                let d = disagreements_from_levels(&self.levels, &other.levels);
                d.strong as f64 + 0.5 * d.weak as f64
            }
            DistanceSpec::Hausdorff => {
                debug_assert!(self.partial && other.partial);
                let d = disagreements_from_levels(&self.levels, &other.levels);
                (d.strong + d.weak_forward.max(d.weak_backward)) as f64
            }
            DistanceSpec::Kp(p) => {
                let d = disagreements_from_levels(&self.levels, &other.levels);
                d.strong as f64 + p * d.weak as f64
            }
        }
    }
}

/// Distance between two rankings under `spec`.
pub fn distance<X: Ranking + ?Sized, Y: Ranking + ?Sized>(x: &X, y: &Y, spec: DistanceSpec) -> Result<f64> {
    if x.num_candidates() != y.num_candidates() {
        return Err(Error::MismatchedCandidates { left: x.num_candidates(), right: y.num_candidates() });
    }
    if spec == DistanceSpec::Hausdorff && !(x.is_partial() && y.is_partial()) {
        return Err(Error::NotPartial);
    }
    Ok(PreparedBallot::new(x).distance(&PreparedBallot::new(y), spec))
}

/// Dense row-major matrix of distances.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistanceMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        let n = rows.len();
        let cols = rows.first().map_or(0, Vec::len);
        DistanceMatrix { rows: n, cols, data: rows.into_iter().flatten().collect() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }
}

/// Distances between every pair of rankings in `rows` x `cols`.
pub fn cross_distances(rows: &[PreparedBallot], cols: &[PreparedBallot], spec: DistanceSpec, exec: Exec) -> DistanceMatrix {
    let data = exec.map_slice(rows, |r| cols.iter().map(|c| r.distance(c, spec)).collect::<Vec<f64>>());
    DistanceMatrix::from_rows(data)
}

/// Pairwise distances between the distinct ballot types of `p`, in type order.
pub fn distance_matrix(p: &Profile, spec: DistanceSpec, exec: Exec) -> Result<DistanceMatrix> {
    let prepared: Vec<PreparedBallot> = p.iter().map(|(b, _)| PreparedBallot::new(b)).collect();
    let n = prepared.len();
    let upper = exec.map_range(n, |i| (i + 1..n).map(|j| prepared[i].distance(&prepared[j], spec)).collect::<Vec<f64>>());
    let mut data = vec![0.0; n * n];
    for (i, row) in upper.into_iter().enumerate() {
        for (off, d) in row.into_iter().enumerate() {
            let j = i + 1 + off;
            data[i * n + j] = d;
            data[j * n + i] = d;
        }
    }
    Ok(DistanceMatrix { rows: n, cols: n, data })
}

/// Coordinates used by the vector-space methods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Embedding {
    BordaPessimistic,
    BordaAveraged,
    HeadToHead,
}

impl Embedding {
    pub fn embed<R: Ranking + ?Sized>(self, r: &R) -> Vec<f64> {
        let view = r.tier_view();
        match self {
            Embedding::BordaPessimistic => borda_from_view(&view, BordaConvention::Pessimistic).values(),
            Embedding::BordaAveraged => borda_from_view(&view, BordaConvention::Averaged).values(),
            Embedding::HeadToHead => h2h_from_levels(&view.level).coords().iter().map(|&c| c as f64).collect(),
        }
    }

    /// The ballot metric that half the `L1` distance in these coordinates gives.
    pub fn metric(self) -> DistanceSpec {
        match self {
            Embedding::BordaPessimistic => DistanceSpec::BordaPessimistic,
            Embedding::BordaAveraged => DistanceSpec::BordaAveraged,
            Embedding::HeadToHead => DistanceSpec::HeadToHead,
        }
    }
}

impl FromStr for Embedding {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.parse::<DistanceSpec>()? {
            DistanceSpec::BordaPessimistic => Ok(Embedding::BordaPessimistic),
            DistanceSpec::BordaAveraged => Ok(Embedding::BordaAveraged),
            DistanceSpec::HeadToHead => Ok(Embedding::HeadToHead),
            other => Err(Error::param(format!("{other} has no coordinate embedding"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Center {
    /// A ballot type cast in the profile (by type index).
    Cast { type_index: usize, ballot: Ballot },
    /// A complete ranking, cast or not.
    Ranking(Ballot),
    /// A free point in embedding coordinates.
    Vector(Vec<f64>),
}

impl fmt::Display for Center {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Center::Cast { ballot, .. } | Center::Ranking(ballot) => write!(f, "{ballot}"),
            Center::Vector(v) => {
                let parts: Vec<String> = v.iter().map(|x| format!("{x:.3}")).collect();
                write!(f, "({})", parts.join(", "))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Clustering {
    pub k: usize,
    pub centers: Vec<Center>,
    /// Cluster label of each ballot type, in profile type order.
    pub assignment: Vec<usize>,
    /// Voters per ballot type, in profile type order.
    pub weights: Vec<u64>,
    /// The algorithm's objective: summed distance to the assigned center, or
    /// summed squared Euclidean distance for Lloyd.
    pub cost: f64,
}

impl Clustering {
    pub fn sizes(&self) -> Vec<u64> {
        let mut sizes = vec![0; self.k];
        for (&a, &w) in self.assignment.iter().zip(&self.weights) {
            sizes[a] += w;
        }
        sizes
    }

    pub fn voter_count(&self) -> u64 {
        self.weights.iter().sum()
    }

    /// Center ballots, when every center is a ballot.
    pub fn center_ballots(&self) -> Option<Vec<Ballot>> {
        self.centers
            .iter()
            .map(|c| match c {
                Center::Cast { ballot, .. } | Center::Ranking(ballot) => Some(ballot.clone()),
                Center::Vector(_) => None,
            })
            .collect()
    }
}

fn argmin_first(values: impl Iterator<Item = f64>) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, v) in values.enumerate() {
        if v < best.1 {
            best = (i, v);
        }
    }
    best
}

/// Assigns each column of `dist` (rows are centers) to its nearest center.
fn assign_by_rows(dist: &[&[f64]], weights: &[u64]) -> (Vec<usize>, f64) {
    let n = weights.len();
    let mut assignment = Vec::with_capacity(n);
    let mut cost = 0.0;
    for v in 0..n {
        let (a, d) = argmin_first(dist.iter().map(|row| row[v]));
        assignment.push(a);
        cost += weights[v] as f64 * d;
    }
    (assignment, cost)
}

/// Assigns every ballot type of `p` to the nearest of `centers`.
pub fn assign_to_centers(p: &Profile, centers: &[Ballot], spec: DistanceSpec) -> Result<Clustering> {
    if centers.is_empty() {
        return Err(Error::param("need at least one center"));
    }
    let types: Vec<PreparedBallot> = p.iter().map(|(b, _)| PreparedBallot::new(b)).collect();
    let rows: Vec<Vec<f64>> = centers
        .iter()
        .map(|c| {
            let pc = PreparedBallot::new(c);
            types.iter().map(|t| pc.distance(t, spec)).collect()
        })
        .collect();
    let weights = p.weights();
    let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
    let (assignment, cost) = assign_by_rows(&refs, &weights);
    let type_list = p.ballot_types();
    let centers = centers
        .iter()
        .map(|c| match type_list.binary_search(c) {
            Ok(type_index) => Center::Cast { type_index, ballot: c.clone() },
            Err(_) => Center::Ranking(c.clone()),
        })
        .collect();
    Ok(Clustering { k: rows.len(), centers, assignment, weights, cost })
}

fn medoid_clustering(p: &Profile, dist: &DistanceMatrix, mut medoids: Vec<usize>, weights: &[u64]) -> Clustering {
    medoids.sort_unstable();
    let rows: Vec<&[f64]> = medoids.iter().map(|&m| dist.row(m)).collect();
    let (assignment, cost) = assign_by_rows(&rows, weights);
    let types = p.ballot_types();
    let centers = medoids.iter().map(|&i| Center::Cast { type_index: i, ballot: types[i].clone() }).collect();
    Clustering { k: medoids.len(), centers, assignment, weights: weights.to_vec(), cost }
}

/// Options shared by the randomized algorithms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchOptions {
    pub seed: u64,
    /// Extra randomly initialized runs on top of the first one.
    pub restarts: usize,
    pub exec: Exec,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions { seed: 0, restarts: 4, exec: Exec::Parallel }
    }
}

fn run_rng(seed: u64, run: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run as u64);
    rng
}

fn check_k(k: usize, available: usize) -> Result<()> {
    if k == 0 || k > available {
        return Err(Error::param(format!("k = {k} must be between 1 and {available}")));
    }
    Ok(())
}

/// Partitioning Around Medoids on a precomputed distance matrix.
///
/// Run 0 starts from the greedy BUILD medoids, later runs from random ones;
/// every run applies the best improving swap until none is left. The cheapest
/// run wins, ties going to the earliest.
pub fn pam_with_matrix(p: &Profile, dist: &DistanceMatrix, k: usize, opts: SearchOptions) -> Result<Clustering> {
    let n = dist.rows();
    check_k(k, n)?;
    let weights = p.weights();
    if weights.len() != n {
        return Err(Error::param("distance matrix does not match the profile"));
    }
    let runs = opts.exec.map_range(opts.restarts + 1, |run| {
        let init = if run == 0 {
            pam_build(dist, &weights, k)
        } else {
            let mut rng = run_rng(opts.seed, run);
            sample(&mut rng, n, k).into_vec()
        };
        pam_swap(dist, &weights, init)
    });
    let best = runs
        .into_iter()
        .fold(None::<(Vec<usize>, f64)>, |best, (meds, cost)| match best {
            Some((_, c)) if c <= cost => best,
            _ => Some((meds, cost)),
        })
        .unwrap();
    Ok(medoid_clustering(p, dist, best.0, &weights))
}

pub fn pam(p: &Profile, k: usize, spec: DistanceSpec, opts: SearchOptions) -> Result<Clustering> {
    let dist = distance_matrix(p, spec, opts.exec)?;
    pam_with_matrix(p, &dist, k, opts)
}

fn pam_build(dist: &DistanceMatrix, weights: &[u64], k: usize) -> Vec<usize> {
    let n = dist.rows();
    let (first, _) = argmin_first((0..n).map(|j| (0..n).map(|i| weights[i] as f64 * dist.get(i, j)).sum::<f64>()));
    let mut medoids = vec![first];
    let mut nearest: Vec<f64> = (0..n).map(|i| dist.get(i, first)).collect();
    while medoids.len() < k {
        let mut best = (usize::MAX, f64::NEG_INFINITY);
        for j in (0..n).filter(|j| !medoids.contains(j)) {
            let gain: f64 = (0..n).map(|i| weights[i] as f64 * (nearest[i] - dist.get(i, j)).max(0.0)).sum();
            if gain > best.1 {
                best = (j, gain);
            }
        }
        medoids.push(best.0);
        for (i, d) in nearest.iter_mut().enumerate() {
            *d = d.min(dist.get(i, best.0));
        }
    }
    medoids
}

fn pam_swap(dist: &DistanceMatrix, weights: &[u64], mut medoids: Vec<usize>) -> (Vec<usize>, f64) {
    let n = dist.rows();
    let k = medoids.len();
    let mut is_medoid = vec![false; n];
    medoids.iter().for_each(|&m| is_medoid[m] = true);
    loop {
        // nearest and second-nearest medoid distances per point
        let mut near = vec![0usize; n];
        let mut dn = vec![f64::INFINITY; n];
        let mut ds = vec![f64::INFINITY; n];
        for i in 0..n {
            for (slot, &m) in medoids.iter().enumerate() {
                let d = dist.get(i, m);
                if d < dn[i] {
                    ds[i] = dn[i];
                    dn[i] = d;
                    near[i] = slot;
                } else if d < ds[i] {
                    ds[i] = d;
                }
            }
        }
        let mut best = (0usize, 0usize, -1e-9);
        for h in (0..n).filter(|&h| !is_medoid[h]) {
            let row = dist.row(h);
            for slot in 0..k {
                let mut delta = 0.0;
                for i in 0..n {
                    let replacement = if near[i] == slot { ds[i].min(row[i]) } else { dn[i].min(row[i]) };
                    delta += weights[i] as f64 * (replacement - dn[i]);
                }
                if delta < best.2 {
                    best = (slot, h, delta);
                }
            }
        }
        if best.2 >= -1e-9 {
            let cost = (0..n).map(|i| weights[i] as f64 * dn[i]).sum();
            return (medoids, cost);
        }
        let (slot, h, _) = best;
        is_medoid[medoids[slot]] = false;
        is_medoid[h] = true;
        medoids[slot] = h;
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn half_l1(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CenterRule {
    Mean,
    Median,
}

fn weighted_lower_median(mut pairs: Vec<(f64, u64)>) -> f64 {
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: u64 = pairs.iter().map(|p| p.1).sum();
    let rank = total.div_ceil(2);
    let mut seen = 0;
    for (v, w) in pairs {
        seen += w;
        if seen >= rank {
            return v;
        }
    }
    f64::NAN
}

fn update_center(points: &[Vec<f64>], weights: &[u64], members: &[usize], rule: CenterRule) -> Vec<f64> {
    let dim = points[members[0]].len();
    match rule {
        CenterRule::Mean => {
            let total: f64 = members.iter().map(|&i| weights[i] as f64).sum();
            (0..dim).map(|d| members.iter().map(|&i| weights[i] as f64 * points[i][d]).sum::<f64>() / total).collect()
        }
        CenterRule::Median => (0..dim)
            .map(|d| weighted_lower_median(members.iter().map(|&i| (points[i][d], weights[i])).collect()))
            .collect(),
    }
}

const MAX_LLOYD_ITERATIONS: usize = 200;

fn lloyd_run(points: &[Vec<f64>], weights: &[u64], k: usize, rule: CenterRule, rng: &mut ChaCha8Rng) -> (Vec<Vec<f64>>, Vec<usize>, f64) {
    let n = points.len();
    let cost_of = |a: &[f64], b: &[f64]| match rule {
        CenterRule::Mean => sq_dist(a, b),
        CenterRule::Median => half_l1(a, b),
    };
    // k-means++ seeding, weighted by multiplicity
    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(k);
    let total_w: u64 = weights.iter().sum();
    let mut pick = rng.random_range(0..total_w);
    let first = weights.iter().position(|&w| {
        if pick < w {
            true
        } else {
            pick -= w;
            false
        }
    });
    centers.push(points[first.unwrap()].clone());
    let mut nearest: Vec<f64> = points.iter().map(|p| sq_dist(p, &centers[0])).collect();
    while centers.len() < k {
        let mass: f64 = nearest.iter().zip(weights).map(|(d, &w)| d * w as f64).sum();
        let next = if mass <= 0.0 {
            rng.random_range(0..n)
        } else {
            let mut target = rng.random::<f64>() * mass;
            let mut chosen = n - 1;
            for i in 0..n {
                target -= nearest[i] * weights[i] as f64;
                if target < 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        };
        centers.push(points[next].clone());
        for (i, d) in nearest.iter_mut().enumerate() {
            *d = d.min(sq_dist(&points[i], &points[next]));
        }
    }

    let mut assignment = vec![usize::MAX; n];
    for _ in 0..MAX_LLOYD_ITERATIONS {
        let next: Vec<usize> = points.iter().map(|p| argmin_first(centers.iter().map(|c| cost_of(p, c))).0).collect();
        if next == assignment {
            break;
        }
        assignment = next;
        for c in 0..k {
            let members: Vec<usize> = (0..n).filter(|&i| assignment[i] == c).collect();
            if members.is_empty() {
                // reseed at the point farthest from its center
                let far = (0..n)
                    .max_by(|&a, &b| {
                        let da = cost_of(&points[a], &centers[assignment[a]]);
                        let db = cost_of(&points[b], &centers[assignment[b]]);
                        da.total_cmp(&db).then(b.cmp(&a))
                    })
                    .unwrap();
                centers[c] = points[far].clone();
                assignment[far] = c;
            } else {
                centers[c] = update_center(points, weights, &members, rule);
            }
        }
    }
    let cost = (0..n).map(|i| weights[i] as f64 * cost_of(&points[i], &centers[assignment[i]])).sum();
    (centers, assignment, cost)
}

fn vector_clustering(p: &Profile, k: usize, embedding: Embedding, rule: CenterRule, opts: SearchOptions) -> Result<Clustering> {
    let points: Vec<Vec<f64>> = p.iter().map(|(b, _)| embedding.embed(b)).collect();
    check_k(k, points.len())?;
    let weights = p.weights();
    let runs = opts.exec.map_range(opts.restarts + 1, |run| {
        let mut rng = run_rng(opts.seed, run);
        lloyd_run(&points, &weights, k, rule, &mut rng)
    });
    let (centers, assignment, cost) = runs
        .into_iter()
        .fold(None::<(Vec<Vec<f64>>, Vec<usize>, f64)>, |best, run| match best {
            Some(ref b) if b.2 <= run.2 => best,
            _ => Some(run),
        })
        .unwrap();
    Ok(Clustering { k, centers: centers.into_iter().map(Center::Vector).collect(), assignment, weights, cost })
}

/// Weighted k-means (Lloyd's algorithm with k-means++ seeding) in embedding
/// coordinates. Cost is the summed squared Euclidean distance.
pub fn lloyd(p: &Profile, k: usize, embedding: Embedding, opts: SearchOptions) -> Result<Clustering> {
    vector_clustering(p, k, embedding, CenterRule::Mean, opts)
}

/// k-medians: like [`lloyd`] but with `L1` assignment and coordinatewise
/// median centers. Cost is the summed half-`L1` distance.
pub fn k_medians(p: &Profile, k: usize, embedding: Embedding, opts: SearchOptions) -> Result<Clustering> {
    vector_clustering(p, k, embedding, CenterRule::Median, opts)
}

/// Multiplicity-weighted coordinatewise lower median of the embedded profile.
pub fn coordinatewise_median_center(p: &Profile, embedding: Embedding) -> Result<Vec<f64>> {
    let points: Vec<(Vec<f64>, u64)> = p.iter().map(|(b, w)| (embedding.embed(b), w)).collect();
    if points.is_empty() {
        return Err(Error::param("profile has no ballots"));
    }
    let dim = points[0].0.len();
    Ok((0..dim).map(|d| weighted_lower_median(points.iter().map(|(x, w)| (x[d], *w)).collect())).collect())
}

/// Limits for the exhaustive searches, in distance evaluations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget {
    pub max_ops: u128,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { max_ops: 2_000_000_000 }
    }
}

impl Budget {
    fn check(self, what: &str, estimate: u128) -> Result<()> {
        if estimate > self.max_ops {
            return Err(Error::BudgetExceeded { what: what.into(), estimate, cap: self.max_ops });
        }
        Ok(())
    }
}

/// Cheapest single row of `dist`, or cheapest pair of rows, against the
/// weighted columns. Ties go to the lexicographically first choice.
fn best_rows(dist: &DistanceMatrix, weights: &[u64], k: usize, exec: Exec) -> (Vec<usize>, f64) {
    let n = dist.rows();
    // w * min(a, b) = min(w * a, w * b), so scale each column once
    let weighted: Vec<Vec<f64>> = exec.map_range(n, |i| dist.row(i).iter().zip(weights).map(|(d, &w)| d * w as f64).collect());
    let sum_min = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x.min(*y)).sum::<f64>();
    let per_first: Vec<(Vec<usize>, f64)> = match k {
        1 => weighted.iter().enumerate().map(|(i, r)| (vec![i], r.iter().sum())).collect(),
        2 => exec.map_range(n, |i| {
            let mut best = (Vec::new(), f64::INFINITY);
            for j in i + 1..n {
                let c = sum_min(&weighted[i], &weighted[j]);
                if c < best.1 {
                    best = (vec![i, j], c);
                }
            }
            best
        }),
        _ => exec.map_range(n, |i| {
            let mut best = (Vec::new(), f64::INFINITY);
            let mut pair = vec![0.0; weighted[i].len()];
            for j in i + 1..n {
                for ((p, a), b) in pair.iter_mut().zip(&weighted[i]).zip(&weighted[j]) {
                    *p = a.min(*b);
                }
                for l in j + 1..n {
                    let c = sum_min(&pair, &weighted[l]);
                    if c < best.1 {
                        best = (vec![i, j, l], c);
                    }
                }
            }
            best
        }),
    };
    per_first
        .into_iter()
        .fold((Vec::new(), f64::INFINITY), |best, cand| if cand.1 < best.1 { cand } else { best })
}

/// Exhaustive distance evaluations for an exact `k`-medoid search over `t` types.
pub fn exact_medoid_ops(t: usize, k: usize) -> u128 {
    let t = t as u128;
    match k {
        1 => t * t,
        2 => t * t * t / 2,
        _ => t * t * t * t / 6,
    }
}

/// Provably optimal clustering with 1 to 3 medoids among the cast ballot
/// types, by exhaustive search.
pub fn exact_k_medoids(p: &Profile, k: usize, spec: DistanceSpec, budget: Budget, exec: Exec) -> Result<Clustering> {
    if !(1..=3).contains(&k) {
        return Err(Error::param("exact k-medoids supports k = 1, 2 or 3"));
    }
    budget.check(&format!("exact {k}-medoid"), exact_medoid_ops(p.num_types(), k))?;
    check_k(k, p.num_types())?;
    let dist = distance_matrix(p, spec, exec)?;
    exact_k_medoids_with_matrix(p, &dist, k, exec)
}

pub fn exact_k_medoids_with_matrix(p: &Profile, dist: &DistanceMatrix, k: usize, exec: Exec) -> Result<Clustering> {
    if !(1..=3).contains(&k) {
        return Err(Error::param("exact k-medoids supports k = 1, 2 or 3"));
    }
    check_k(k, dist.rows())?;
    let weights = p.weights();
    let (medoids, _) = best_rows(dist, &weights, k, exec);
    Ok(medoid_clustering(p, dist, medoids, &weights))
}

/// Provably optimal 1 or 2 complete-ranking centers (the Kemeny problem when
/// the metric is head-to-head).
pub fn exact_kemeny(p: &Profile, k: usize, spec: DistanceSpec, budget: Budget, exec: Exec) -> Result<Clustering> {
    let m = p.num_candidates();
    let rankings_count: u128 = (1..=m as u128).product();
    let t = p.num_types() as u128;
    match k {
        1 => budget.check("exact 1-Kemeny", rankings_count * t)?,
        2 => budget.check("exact 2-Kemeny", rankings_count * rankings_count / 2 * t)?,
        _ => return Err(Error::param("exact Kemeny supports k = 1 or 2")),
    }
    if p.num_types() == 0 {
        return Err(Error::param("profile has no ballots"));
    }
    let mut rankings = Vec::with_capacity(rankings_count as usize);
    for_each_complete_ranking(m, |perm| rankings.push(Ballot::from_parts_unchecked(m, perm.to_vec())));
    let prepared_rankings: Vec<PreparedBallot> = rankings.iter().map(PreparedBallot::new).collect();
    let types: Vec<PreparedBallot> = p.iter().map(|(b, _)| PreparedBallot::new(b)).collect();
    let table = cross_distances(&prepared_rankings, &types, spec, exec);
    let (best, _) = best_rows(&table, &p.weights(), k, exec);
    let centers: Vec<Ballot> = best.into_iter().map(|i| rankings[i].clone()).collect();
    let mut c = assign_to_centers(p, &centers, spec)?;
    c.centers = centers.into_iter().map(Center::Ranking).collect();
    Ok(c)
}

/// Mean silhouette over voters, from a precomputed type distance matrix.
///
/// A voter's own copies count as within-cluster peers at distance zero; a
/// voter alone in its cluster scores zero.
pub fn silhouette_with_matrix(c: &Clustering, dist: &DistanceMatrix) -> Result<f64> {
    if c.k < 2 {
        return Err(Error::param("silhouette needs at least two clusters"));
    }
    if dist.rows() != c.assignment.len() {
        return Err(Error::MismatchedClusterings);
    }
    let sizes = c.sizes();
    let n = c.assignment.len();
    let mut total = 0.0;
    for i in 0..n {
        let mut sums = vec![0.0; c.k];
        let row = dist.row(i);
        for j in 0..n {
            sums[c.assignment[j]] += c.weights[j] as f64 * row[j];
        }
        let own = c.assignment[i];
        if sizes[own] <= 1 {
            continue;
        }
        let a = sums[own] / (sizes[own] - 1) as f64;
        let b = (0..c.k)
            .filter(|&l| l != own && sizes[l] > 0)
            .map(|l| sums[l] / sizes[l] as f64)
            .fold(f64::INFINITY, f64::min);
        if !b.is_finite() {
            continue;
        }
        let denom = a.max(b);
        if denom > 0.0 {
            total += c.weights[i] as f64 * (b - a) / denom;
        }
    }
    Ok(total / c.voter_count() as f64)
}

pub fn silhouette(p: &Profile, c: &Clustering, spec: DistanceSpec, exec: Exec) -> Result<f64> {
    if c.weights != p.weights() {
        return Err(Error::MismatchedClusterings);
    }
    silhouette_with_matrix(c, &distance_matrix(p, spec, exec)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PolarizationCertificate {
    /// Distance between the two centers.
    pub separation: f64,
    /// Largest distance from a cast ballot to its nearer center.
    pub radius: f64,
    /// `separation > 4 * radius`: the optimal 2-clustering is unique.
    pub stable: bool,
    /// `separation > 10 * radius`: it is also optimal for any metric within a
    /// factor of two.
    pub cross_metric_stable: bool,
}

pub fn polarization_certificate(p: &Profile, x: &Ballot, y: &Ballot, spec: DistanceSpec) -> Result<PolarizationCertificate> {
    if x == y {
        return Err(Error::param("polarization centers must differ"));
    }
    let separation = distance(x, y, spec)?;
    let (px, py) = (PreparedBallot::new(x), PreparedBallot::new(y));
    let radius = p
        .iter()
        .map(|(b, _)| {
            let pb = PreparedBallot::new(b);
            pb.distance(&px, spec).min(pb.distance(&py, spec))
        })
        .fold(0.0, f64::max);
    Ok(PolarizationCertificate {
        separation,
        radius,
        stable: separation > 4.0 * radius,
        cross_metric_stable: separation > 10.0 * radius,
    })
}

/// Smallest fraction of voters that must change cluster to turn `a` into `b`,
/// over all matchings of cluster labels.
pub fn partition_difference(a: &Clustering, b: &Clustering) -> Result<f64> {
    if a.weights != b.weights || a.assignment.len() != b.assignment.len() {
        return Err(Error::MismatchedClusterings);
    }
    let (ka, kb) = (a.k, b.k);
    if ka.max(kb) > 16 {
        return Err(Error::param("partition comparison supports at most 16 clusters"));
    }
    let mut overlap = vec![vec![0u64; kb]; ka];
    for ((&la, &lb), &w) in a.assignment.iter().zip(&b.assignment).zip(&a.weights) {
        overlap[la][lb] += w;
    }
    // max-weight matching of a-labels into b-labels by DP over used b-labels
    let mut best = vec![None::<u64>; 1 << kb];
    best[0] = Some(0);
    for row in &overlap {
        let mut next = vec![None::<u64>; 1 << kb];
        for (mask, val) in best.iter().enumerate() {
            let Some(v) = *val else { continue };
            // leave this a-label unmatched (only needed when ka > kb)
            next[mask] = next[mask].max(Some(v));
            for (l, &w) in row.iter().enumerate() {
                if mask & (1 << l) == 0 {
                    let m2 = mask | (1 << l);
                    next[m2] = next[m2].max(Some(v + w));
                }
            }
        }
        best = next;
    }
    let matched = best.into_iter().flatten().max().unwrap_or(0);
    let total = a.voter_count();
    Ok(if total == 0 { 0.0 } else { (total - matched) as f64 / total as f64 })
}
