//! Coordinate embeddings of rankings and the distances they induce.
//!
//! The Borda embedding gives candidate `i` the points `m - rank(i)`; the
//! head-to-head embedding records every pairwise comparison as `+1` (the lower
//! indexed candidate is preferred), `0` (tied) or `-1`. Distances are half the
//! `L1` gap between embeddings. Ties are handled either pessimistically (tied
//! candidates all get the points of the worst position in their block) or by
//! averaging over the block.
//!
//! Everything on the half-integer lattice is returned as an exact [`HalfInt`].

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::ballot::{for_each_permutation, Ballot, CandidateId, Ranking, TierView};
use crate::error::{Error, Result};
use crate::half::HalfInt;

/// How tied candidates share Borda points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, serde::Serialize)]
pub enum BordaConvention {
    /// Every member of a tie gets the fewest points any resolution would give.
    #[default]
    Pessimistic,
    /// Every member of a tie gets the mean of the points of its block.
    Averaged,
}

/// Borda coordinates, stored doubled so averaged ties stay exact.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BordaVector {
    doubled: Vec<i64>,
}

impl BordaVector {
    pub fn doubled(&self) -> &[i64] {
        &self.doubled
    }

    pub fn values(&self) -> Vec<f64> {
        self.doubled.iter().map(|&d| d as f64 / 2.0).collect()
    }

    pub fn len(&self) -> usize {
        self.doubled.len()
    }

    pub fn is_empty(&self) -> bool {
        self.doubled.is_empty()
    }

    /// Half the `L1` distance to `other`.
    pub fn half_l1(&self, other: &BordaVector) -> HalfInt {
        let l1_doubled: i64 = self.doubled.iter().zip(&other.doubled).map(|(a, b)| (a - b).abs()).sum();
        // half of (l1_doubled / 2), expressed in doubled units
        debug_assert!(l1_doubled % 2 == 0, "Borda L1 gaps are integral");
        HalfInt::from_doubled(l1_doubled / 2)
    }
}

pub(crate) fn borda_from_view(view: &TierView, convention: BordaConvention) -> BordaVector {
    let m = view.num_candidates() as i64;
    let doubled = (0..view.num_candidates())
        .map(|c| match convention {
            BordaConvention::Pessimistic => 2 * (m - view.last[c] as i64),
            BordaConvention::Averaged => 2 * m - (view.first[c] + view.last[c]) as i64,
        })
        .collect();
    BordaVector { doubled }
}

pub fn borda_embed<R: Ranking + ?Sized>(r: &R, convention: BordaConvention) -> BordaVector {
    borda_from_view(&r.tier_view(), convention)
}

/// Pairwise comparison coordinates over `(i, j)`, `i < j`, in lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct H2HVector {
    coords: Vec<i8>,
}

impl H2HVector {
    pub fn coords(&self) -> &[i8] {
        &self.coords
    }

    pub fn half_l1(&self, other: &H2HVector) -> HalfInt {
        let l1: i64 = self.coords.iter().zip(&other.coords).map(|(&a, &b)| (a - b).abs() as i64).sum();
        HalfInt::from_doubled(l1)
    }
}

/// Position of the pair `(i, j)`, `i < j`, in an [`H2HVector`].
pub fn pair_index(i: usize, j: usize, m: usize) -> usize {
    debug_assert!(i < j && j < m);
    i * (2 * m - i - 1) / 2 + (j - i - 1)
}

pub(crate) fn h2h_from_levels(level: &[usize]) -> H2HVector {
    let m = level.len();
    let mut coords = Vec::with_capacity(m * (m.saturating_sub(1)) / 2);
    for i in 0..m {
        for j in i + 1..m {
            coords.push((level[j] as i64 - level[i] as i64).signum() as i8);
        }
    }
    H2HVector { coords }
}

pub fn h2h_embed<R: Ranking + ?Sized>(r: &R) -> H2HVector {
    h2h_from_levels(&r.tier_view().level)
}

/// Strong and weak disagreement counts between two rankings.
///
/// `weak_forward` counts pairs tied by the first ranking but ordered by the
/// second; `weak_backward` the reverse. `weak` is their sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct DisagreementCount {
    pub strong: u64,
    pub weak: u64,
    pub weak_forward: u64,
    pub weak_backward: u64,
}

pub(crate) fn disagreements_from_levels(a: &[usize], b: &[usize]) -> DisagreementCount {
    let m = a.len();
    let mut out = DisagreementCount::default();
    for i in 0..m {
        for j in i + 1..m {
            let sa = (a[j] as i64 - a[i] as i64).signum();
            let sb = (b[j] as i64 - b[i] as i64).signum();
            match (sa, sb) {
                (0, 0) => {}
                (0, _) => out.weak_forward += 1,
                (_, 0) => out.weak_backward += 1,
                _ if sa != sb => out.strong += 1,
                _ => {}
            }
        }
    }
    out.weak = out.weak_forward + out.weak_backward;
    out
}

fn same_m<X: Ranking + ?Sized, Y: Ranking + ?Sized>(x: &X, y: &Y) -> Result<usize> {
    let (a, b) = (x.num_candidates(), y.num_candidates());
    if a == b {
        Ok(a)
    } else {
        Err(Error::MismatchedCandidates { left: a, right: b })
    }
}

pub fn disagreements<X: Ranking + ?Sized, Y: Ranking + ?Sized>(x: &X, y: &Y) -> Result<DisagreementCount> {
    same_m(x, y)?;
    Ok(disagreements_from_levels(&x.tier_view().level, &y.tier_view().level))
}

/// Head-to-head distance (Kendall tau on complete ballots).
///
/// Computed from the embeddings and cross-checked against `str + wk/2`.
pub fn dist_h<X: Ranking + ?Sized, Y: Ranking + ?Sized>(x: &X, y: &Y) -> Result<HalfInt> {
    same_m(x, y)?;
    let (lx, ly) = (x.tier_view().level, y.tier_view().level);
    let via_l1 = h2h_from_levels(&lx).half_l1(&h2h_from_levels(&ly));
    let d = disagreements_from_levels(&lx, &ly);
    let via_counts = HalfInt::from_doubled((2 * d.strong + d.weak) as i64);
    assert_eq!(via_l1, via_counts, "head-to-head L1 disagrees with str + wk/2");
    Ok(via_l1)
}

/// Borda distance (half the Spearman footrule on complete ballots).
pub fn dist_b<X: Ranking + ?Sized, Y: Ranking + ?Sized>(
    x: &X,
    y: &Y,
    convention: BordaConvention,
) -> Result<HalfInt> {
    same_m(x, y)?;
    Ok(borda_embed(x, convention).half_l1(&borda_embed(y, convention)))
}

/// `str + p * wk`, for `p` in `(0, 1]`.
pub fn dist_kp<X: Ranking + ?Sized, Y: Ranking + ?Sized>(x: &X, y: &Y, p: f64) -> Result<f64> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::param(format!("K^(p) needs p in (0, 1], got {p}")));
    }
    let d = disagreements(x, y)?;
    Ok(d.strong as f64 + p * d.weak as f64)
}

/// Hausdorff distance between the completion sets of two partial ballots
/// under swap distance: `str + max(wk_forward, wk_backward)`.
pub fn dist_hausdorff<X: Ranking + ?Sized, Y: Ranking + ?Sized>(x: &X, y: &Y) -> Result<u64> {
    same_m(x, y)?;
    if !x.is_partial() || !y.is_partial() {
        return Err(Error::NotPartial);
    }
    let d = disagreements(x, y)?;
    Ok(d.strong + d.weak_forward.max(d.weak_backward))
}

/// Swap (Kendall tau) distance between two complete rankings given as
/// candidate sequences.
pub fn kendall_tau(a: &[CandidateId], b: &[CandidateId]) -> u64 {
    let m = a.len();
    let mut pos_b = vec![0usize; m];
    for (p, c) in b.iter().enumerate() {
        pos_b[c.0] = p;
    }
    let mapped: Vec<usize> = a.iter().map(|c| pos_b[c.0]).collect();
    let mut inversions = 0;
    for i in 0..m {
        for j in i + 1..m {
            if mapped[i] > mapped[j] {
                inversions += 1;
            }
        }
    }
    inversions
}

/// How to average swap distance over completions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompletionMode {
    /// Enumerate every pair of completions; refuses more than `max_pairs`.
    Exact { max_pairs: u64 },
    /// Average over `trials` uniformly random completion pairs.
    MonteCarlo { seed: u64, trials: u64 },
}

impl CompletionMode {
    pub const DEFAULT_EXACT: CompletionMode = CompletionMode::Exact { max_pairs: 10_000_000 };
}

fn factorial(n: usize) -> u64 {
    (1..=n as u64).product()
}

/// Mean number of adjacent swaps between completions of `x` and of `y`.
///
/// Candidates that neither ballot ranks are completed in the same relative
/// order on both sides; every other unranked candidate is placed uniformly at
/// random. Under this pairing the mean equals [`dist_h`] exactly.
pub fn expected_completion_swaps(x: &Ballot, y: &Ballot, mode: CompletionMode) -> Result<f64> {
    same_m(x, y)?;
    let (ux, uy) = (x.unranked(), y.unranked());
    let shared: Vec<bool> = {
        let mut in_x = vec![false; x.num_candidates()];
        ux.iter().for_each(|c| in_x[c.0] = true);
        let mut s = vec![false; x.num_candidates()];
        uy.iter().filter(|c| in_x[c.0]).for_each(|c| s[c.0] = true);
        s
    };
    let restrict = |seq: &[CandidateId]| -> Vec<CandidateId> { seq.iter().copied().filter(|c| shared[c.0]).collect() };
    match mode {
        CompletionMode::Exact { max_pairs } => {
            let n_shared = shared.iter().filter(|&&s| s).count();
            let pairs = factorial(ux.len()).saturating_mul(factorial(uy.len()) / factorial(n_shared));
            if pairs > max_pairs {
                return Err(Error::BudgetExceeded {
                    what: "completion pair enumeration".into(),
                    estimate: pairs as u128,
                    cap: max_pairs as u128,
                });
            }
            let (cx, cy) = (x.completions(), y.completions());
            let mut total = 0u64;
            let mut count = 0u64;
            for a in &cx {
                let order = restrict(&a.ranking()[x.len()..]);
                for b in cy.iter().filter(|b| restrict(&b.ranking()[y.len()..]) == order) {
                    total += kendall_tau(a.ranking(), b.ranking());
                    count += 1;
                }
            }
            Ok(total as f64 / count as f64)
        }
        CompletionMode::MonteCarlo { seed, trials } => {
            if trials == 0 {
                return Err(Error::param("Monte Carlo needs at least one trial"));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (mut sx, mut sy) = (ux.clone(), uy.clone());
            let slots: Vec<usize> = (0..sy.len()).filter(|&i| shared[uy[i].0]).collect();
            let mut a = x.ranking().to_vec();
            let mut b = y.ranking().to_vec();
            let mut total = 0u64;
            for _ in 0..trials {
                sx.shuffle(&mut rng);
                sy.shuffle(&mut rng);
                // put the shared candidates into y's shared slots in x's order
                let slots_now: Vec<usize> = (0..sy.len()).filter(|&i| shared[sy[i].0]).collect();
                debug_assert_eq!(slots_now.len(), slots.len());
                for (slot, c) in slots_now.into_iter().zip(restrict(&sx)) {
                    sy[slot] = c;
                }
                a.truncate(x.len());
                a.extend_from_slice(&sx);
                b.truncate(y.len());
                b.extend_from_slice(&sy);
                total += kendall_tau(&a, &b);
            }
            Ok(total as f64 / trials as f64)
        }
    }
}

/// Brute-force Hausdorff distance between completion clouds. Exponential;
/// used to validate [`dist_hausdorff`] on small instances.
pub fn hausdorff_by_enumeration(x: &Ballot, y: &Ballot) -> Result<u64> {
    same_m(x, y)?;
    let (cx, cy) = (x.completions(), y.completions());
    let directed = |from: &[Ballot], to: &[Ballot]| -> u64 {
        from.iter()
            .map(|a| to.iter().map(|b| kendall_tau(a.ranking(), b.ranking())).min().unwrap())
            .max()
            .unwrap()
    };
    Ok(directed(&cx, &cy).max(directed(&cy, &cx)))
}

/// Calls `f` with every complete ranking of `m` candidates, lexicographically.
pub fn for_each_complete_ranking<F: FnMut(&[CandidateId])>(m: usize, f: F) {
    let ids: Vec<CandidateId> = (0..m).map(CandidateId).collect();
    for_each_permutation(&ids, f);
}
