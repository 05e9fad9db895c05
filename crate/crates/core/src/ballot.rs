//! Ballots, generalized ballots and their enumeration.
//!
//! A [`Ballot`] ranks some of the `m` candidates; everyone it leaves out is
//! tied in last place. Because a ballot that ranks `m - 1` candidates leaves
//! exactly one candidate behind, it is stored as its unique completion, so two
//! ballots compare equal exactly when they express the same preferences.
//!
//! A [`GeneralizedBallot`] is an arbitrary weak order: a sequence of tiers,
//! each a set of tied candidates.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};

/// Index of a candidate, in `0..m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize)]
#[serde(transparent)]
pub struct CandidateId(pub usize);

impl CandidateId {
    pub fn index(self) -> usize {
        self.0
    }

    /// `A`, `B`, ... for the first 26 candidates, otherwise the 1-based number.
    pub fn letter(self) -> String {
        if self.0 < 26 {
            char::from(b'A' + self.0 as u8).to_string()
        } else {
            format!("#{}", self.0 + 1)
        }
    }
}

impl From<usize> for CandidateId {
    fn from(i: usize) -> Self {
        CandidateId(i)
    }
}

/// Per-candidate view of where a ranking places everyone.
///
/// Positions are 1-based. A candidate in a tier covering positions `p..=q`
/// has `first = p`, `last = q`; `level` is the tier number (0 is the top).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TierView {
    pub level: Vec<usize>,
    pub first: Vec<usize>,
    pub last: Vec<usize>,
}

impl TierView {
    pub fn num_candidates(&self) -> usize {
        self.level.len()
    }
}

/// Anything that orders the candidates into tiers.
pub trait Ranking {
    fn num_candidates(&self) -> usize;

    fn tier_view(&self) -> TierView;

    /// True when all ties are in the final tier.
    fn is_partial(&self) -> bool;
}

/// A complete or partial ranking in canonical form.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Ballot {
    m: usize,
    ranking: Vec<CandidateId>,
}

/// Validates `raw` and returns the canonical ballot it denotes.
pub fn canonicalize(raw: &[CandidateId], m: usize) -> Result<Ballot> {
    if m == 0 {
        return Err(Error::NoCandidates);
    }
    if raw.is_empty() {
        return Err(Error::EmptyBallot);
    }
    let mut seen = vec![false; m];
    for &c in raw {
        if c.0 >= m {
            return Err(Error::CandidateOutOfRange { index: c.0, m });
        }
        if std::mem::replace(&mut seen[c.0], true) {
            return Err(Error::DuplicateCandidate { candidate: c.0 });
        }
    }
    let mut ranking = raw.to_vec();
    if ranking.len() + 1 == m {
        let missing = seen.iter().position(|s| !s).expect("exactly one unranked candidate");
        ranking.push(CandidateId(missing));
    }
    Ok(Ballot { m, ranking })
}

impl Ballot {
    pub fn new(raw: &[CandidateId], m: usize) -> Result<Self> {
        canonicalize(raw, m)
    }

    pub fn from_indices(indices: &[usize], m: usize) -> Result<Self> {
        let raw: Vec<CandidateId> = indices.iter().map(|&i| CandidateId(i)).collect();
        canonicalize(&raw, m)
    }

    /// Parses letter notation such as `"ACB"` (A is candidate 0).
    pub fn from_letters(letters: &str, m: usize) -> Result<Self> {
        let mut raw = Vec::new();
        for ch in letters.chars() {
            if !ch.is_ascii_uppercase() {
                return Err(Error::param(format!("'{ch}' is not a candidate letter")));
            }
            raw.push(CandidateId((ch as u8 - b'A') as usize));
        }
        canonicalize(&raw, m)
    }

    /// Parses `idx>idx>...` with 0-based candidate indices.
    pub fn parse_indices(text: &str, m: usize) -> Result<Self> {
        let mut raw = Vec::new();
        for part in text.split('>') {
            let idx: usize = part
                .trim()
                .parse()
                .map_err(|_| Error::param(format!("'{part}' is not a candidate index")))?;
            raw.push(CandidateId(idx));
        }
        canonicalize(&raw, m)
    }

    pub fn num_candidates(&self) -> usize {
        self.m
    }

    pub fn ranking(&self) -> &[CandidateId] {
        &self.ranking
    }

    /// Stored length; a cast ballot of length `m - 1` reports `m`.
    pub fn len(&self) -> usize {
        self.ranking.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranking.is_empty()
    }

    pub fn is_complete(&self) -> bool {
        self.ranking.len() == self.m
    }

    pub fn unranked_count(&self) -> usize {
        self.m - self.ranking.len()
    }

    /// Candidates not on the ballot, in index order.
    pub fn unranked(&self) -> Vec<CandidateId> {
        let mut seen = vec![false; self.m];
        for c in &self.ranking {
            seen[c.0] = true;
        }
        (0..self.m).filter(|&i| !seen[i]).map(CandidateId).collect()
    }

    /// 0-based position of each ranked candidate, `None` when unranked.
    pub fn positions(&self) -> Vec<Option<usize>> {
        let mut pos = vec![None; self.m];
        for (p, c) in self.ranking.iter().enumerate() {
            pos[c.0] = Some(p);
        }
        pos
    }

    pub fn contains(&self, c: CandidateId) -> bool {
        self.ranking.contains(&c)
    }

    /// All complete ballots obtained by ordering the unranked candidates.
    pub fn completions(&self) -> Vec<Ballot> {
        let suffix = self.unranked();
        let mut out = Vec::new();
        for_each_permutation(&suffix, |perm| {
            let mut ranking = self.ranking.clone();
            ranking.extend_from_slice(perm);
            out.push(Ballot { m: self.m, ranking });
        });
        out
    }

    /// Candidates joined by `>` using 0-based indices.
    pub fn to_index_string(&self) -> String {
        join_indices(&self.ranking)
    }

    pub fn to_letters(&self) -> String {
        self.ranking.iter().map(|c| c.letter()).collect()
    }

    pub fn to_generalized(&self) -> GeneralizedBallot {
        GeneralizedBallot::from(self)
    }

    pub(crate) fn from_parts_unchecked(m: usize, ranking: Vec<CandidateId>) -> Ballot {
        debug_assert!(canonicalize(&ranking, m).map(|b| b.ranking == ranking).unwrap_or(false));
        Ballot { m, ranking }
    }
}

pub(crate) fn join_indices(ranking: &[CandidateId]) -> String {
    ranking.iter().map(|c| c.0.to_string()).collect::<Vec<_>>().join(">")
}

impl Ord for Ballot {
    fn cmp(&self, other: &Self) -> Ordering {
        self.m
            .cmp(&other.m)
            .then(self.ranking.len().cmp(&other.ranking.len()))
            .then_with(|| self.ranking.cmp(&other.ranking))
    }
}

impl PartialOrd for Ballot {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Ballot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.m <= 26 {
            f.write_str(&self.to_letters())
        } else {
            f.write_str(&self.to_index_string())
        }
    }
}

/// Serializes as the 0-based index string, e.g. `"0>3"`.
impl serde::Serialize for Ballot {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_index_string())
    }
}

impl Ranking for Ballot {
    fn num_candidates(&self) -> usize {
        self.m
    }

    fn tier_view(&self) -> TierView {
        let m = self.m;
        let k = self.ranking.len();
        let mut view = TierView { level: vec![k; m], first: vec![k + 1; m], last: vec![m; m] };
        for (p, c) in self.ranking.iter().enumerate() {
            view.level[c.0] = p;
            view.first[c.0] = p + 1;
            view.last[c.0] = p + 1;
        }
        view
    }

    fn is_partial(&self) -> bool {
        true
    }
}

/// Number of canonical non-empty ballots on `m` candidates.
pub fn count_ballots(m: usize) -> Result<u128> {
    match m {
        0 => Err(Error::NoCandidates),
        1 => Ok(1),
        2 => Ok(2),
        _ => Ok(m as u128 * count_ballots(m - 1)? + m as u128),
    }
}

/// Every canonical ballot on `m` candidates, in ballot order.
pub fn enumerate_ballots(m: usize) -> Result<Vec<Ballot>> {
    if m == 0 {
        return Err(Error::NoCandidates);
    }
    let mut out = Vec::new();
    let mut prefix = Vec::with_capacity(m);
    let mut used = vec![false; m];
    extend_prefixes(m, &mut prefix, &mut used, &mut out);
    out.sort();
    Ok(out)
}

fn extend_prefixes(m: usize, prefix: &mut Vec<CandidateId>, used: &mut [bool], out: &mut Vec<Ballot>) {
    let len = prefix.len();
    if len > 0 && len + 1 != m {
        out.push(Ballot { m, ranking: prefix.clone() });
    }
    if len == m {
        return;
    }
    for c in 0..m {
        if !used[c] {
            used[c] = true;
            prefix.push(CandidateId(c));
            extend_prefixes(m, prefix, used, out);
            prefix.pop();
            used[c] = false;
        }
    }
}

/// Calls `f` on every permutation of `items` in lexicographic order of
/// positions (the input order is the first permutation).
pub fn for_each_permutation<T: Clone, F: FnMut(&[T])>(items: &[T], mut f: F) {
    let n = items.len();
    let mut idx: Vec<usize> = (0..n).collect();
    let mut buf: Vec<T> = items.to_vec();
    loop {
        f(&buf);
        // next lexicographic permutation of idx
        let Some(i) = (1..n).rev().find(|&i| idx[i - 1] < idx[i]) else {
            return;
        };
        let pivot = i - 1;
        let j = (pivot + 1..n).rev().find(|&j| idx[j] > idx[pivot]).unwrap();
        idx.swap(pivot, j);
        idx[i..].reverse();
        for (slot, &k) in buf.iter_mut().zip(&idx) {
            *slot = items[k].clone();
        }
    }
}

/// A weak order: tiers of tied candidates, best tier first.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GeneralizedBallot {
    m: usize,
    tiers: Vec<Vec<CandidateId>>,
}

impl GeneralizedBallot {
    /// Builds a weak order; tiers must be non-empty, disjoint and cover `0..m`.
    pub fn new(tiers: Vec<Vec<CandidateId>>, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::NoCandidates);
        }
        let mut seen = vec![false; m];
        let mut tiers = tiers;
        for tier in &mut tiers {
            if tier.is_empty() {
                return Err(Error::InvalidTiers("empty tier".into()));
            }
            for c in tier.iter() {
                if c.0 >= m {
                    return Err(Error::CandidateOutOfRange { index: c.0, m });
                }
                if std::mem::replace(&mut seen[c.0], true) {
                    return Err(Error::InvalidTiers(format!("candidate {} appears in two tiers", c.0)));
                }
            }
            tier.sort();
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidTiers(format!("candidate {missing} is missing")));
        }
        Ok(GeneralizedBallot { m, tiers })
    }

    pub fn from_index_tiers(tiers: &[&[usize]], m: usize) -> Result<Self> {
        Self::new(tiers.iter().map(|t| t.iter().map(|&i| CandidateId(i)).collect()).collect(), m)
    }

    /// A single tier holding every candidate (the empty ballot).
    pub fn all_tied(m: usize) -> Self {
        GeneralizedBallot { m, tiers: vec![(0..m).map(CandidateId).collect()] }
    }

    pub fn tiers(&self) -> &[Vec<CandidateId>] {
        &self.tiers
    }

    pub fn num_candidates(&self) -> usize {
        self.m
    }

    /// Back to a [`Ballot`] when the only tie is the last tier.
    pub fn to_ballot(&self) -> Option<Ballot> {
        if !Ranking::is_partial(self) {
            return None;
        }
        let mut ranking: Vec<CandidateId> = Vec::new();
        for tier in &self.tiers {
            if tier.len() == 1 {
                ranking.push(tier[0]);
            }
        }
        canonicalize(&ranking, self.m).ok()
    }

    pub(crate) fn from_tiers_unchecked(m: usize, tiers: Vec<Vec<CandidateId>>) -> Self {
        GeneralizedBallot { m, tiers }
    }
}

impl From<&Ballot> for GeneralizedBallot {
    fn from(b: &Ballot) -> Self {
        let mut tiers: Vec<Vec<CandidateId>> = b.ranking.iter().map(|&c| vec![c]).collect();
        let rest = b.unranked();
        if !rest.is_empty() {
            tiers.push(rest);
        }
        GeneralizedBallot { m: b.m, tiers }
    }
}

impl Ranking for GeneralizedBallot {
    fn num_candidates(&self) -> usize {
        self.m
    }

    fn tier_view(&self) -> TierView {
        let m = self.m;
        let mut view = TierView { level: vec![0; m], first: vec![0; m], last: vec![0; m] };
        let mut start = 1;
        for (t, tier) in self.tiers.iter().enumerate() {
            let end = start + tier.len() - 1;
            for c in tier {
                view.level[c.0] = t;
                view.first[c.0] = start;
                view.last[c.0] = end;
            }
            start = end + 1;
        }
        view
    }

    fn is_partial(&self) -> bool {
        let n = self.tiers.len();
        self.tiers.iter().take(n.saturating_sub(1)).all(|t| t.len() == 1)
    }
}

impl fmt::Display for GeneralizedBallot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .tiers
            .iter()
            .map(|t| {
                let names: Vec<String> = t.iter().map(|c| c.letter()).collect();
                if t.len() == 1 {
                    names[0].clone()
                } else {
                    format!("{{{}}}", names.join(","))
                }
            })
            .collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Every weak order on `m` candidates, sorted. There are Fubini-many.
pub fn enumerate_weak_orders(m: usize) -> Result<Vec<GeneralizedBallot>> {
    if m == 0 {
        return Err(Error::NoCandidates);
    }
    let mut out = Vec::new();
    let mut labels = vec![0usize; m];
    loop {
        let tiers = labels.iter().max().unwrap() + 1;
        let mut groups: Vec<Vec<CandidateId>> = vec![Vec::new(); tiers];
        for (c, &l) in labels.iter().enumerate() {
            groups[l].push(CandidateId(c));
        }
        if groups.iter().all(|g| !g.is_empty()) {
            out.push(GeneralizedBallot { m, tiers: groups });
        }
        // odometer over [0, m)^m
        let mut i = 0;
        loop {
            if i == m {
                out.sort();
                return Ok(out);
            }
            labels[i] += 1;
            if labels[i] < m {
                break;
            }
            labels[i] = 0;
            i += 1;
        }
    }
}

/// The coarsest partition in which two candidates share a block iff they share
/// a tier in both rankings. Blocks are sorted, ordered by smallest member.
pub fn common_refinement<A: Ranking, B: Ranking>(a: &A, b: &B) -> Result<Vec<Vec<CandidateId>>> {
    let (ma, mb) = (a.num_candidates(), b.num_candidates());
    if ma != mb {
        return Err(Error::MismatchedCandidates { left: ma, right: mb });
    }
    let (va, vb) = (a.tier_view(), b.tier_view());
    let mut blocks: BTreeMap<(usize, usize), Vec<CandidateId>> = BTreeMap::new();
    for c in 0..ma {
        blocks.entry((va.level[c], vb.level[c])).or_default().push(CandidateId(c));
    }
    let mut out: Vec<Vec<CandidateId>> = blocks.into_values().collect();
    out.sort_by_key(|block| block[0]);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(v: &[usize]) -> Vec<CandidateId> {
        v.iter().map(|&i| CandidateId(i)).collect()
    }

    #[test]
    fn canonicalize_examples() {
        assert_eq!(Ballot::from_letters("AB", 3).unwrap().to_letters(), "ABC");
        assert_eq!(Ballot::from_letters("ABCD", 4).unwrap().to_letters(), "ABCD");
        assert_eq!(Ballot::from_letters("AD", 4).unwrap().to_letters(), "AD");
    }

    #[test]
    fn canonicalize_errors() {
        assert_eq!(canonicalize(&[], 3), Err(Error::EmptyBallot));
        assert_eq!(canonicalize(&ids(&[0, 0]), 3), Err(Error::DuplicateCandidate { candidate: 0 }));
        assert_eq!(canonicalize(&ids(&[3]), 3), Err(Error::CandidateOutOfRange { index: 3, m: 3 }));
        assert_eq!(canonicalize(&ids(&[0]), 0), Err(Error::NoCandidates));
    }

    #[test]
    fn canonicalize_is_idempotent() {
        for m in 1..=5 {
            for b in enumerate_ballots(m).unwrap() {
                assert_eq!(canonicalize(b.ranking(), m).unwrap(), b);
            }
        }
    }

    #[test]
    fn ballot_counts() {
        assert_eq!(count_ballots(0), Err(Error::NoCandidates));
        assert_eq!(count_ballots(3).unwrap(), 9);
        assert_eq!(count_ballots(4).unwrap(), 40);
        assert_eq!(count_ballots(7).unwrap(), 8659);
    }

    /// Independent count: every non-empty sequence of distinct candidates,
    /// keyed by its completion-identified form.
    fn brute_force_count(m: usize) -> usize {
        let mut set = std::collections::BTreeSet::new();
        let total = (m + 1).pow(m as u32);
        for code in 0..total {
            let mut digits = Vec::new();
            let mut x = code;
            for _ in 0..m {
                digits.push(x % (m + 1));
                x /= m + 1;
            }
            // digits == m marks the end of the sequence
            let seq: Vec<usize> = digits.iter().take_while(|&&d| d < m).copied().collect();
            if let Ok(b) = Ballot::from_indices(&seq, m) {
                set.insert(b);
            }
        }
        set.len()
    }

    #[test]
    fn enumeration_matches_recursion_and_brute_force() {
        for m in 1..=6 {
            let all = enumerate_ballots(m).unwrap();
            assert_eq!(all.len() as u128, count_ballots(m).unwrap(), "m={m}");
            assert_eq!(all.len(), brute_force_count(m), "m={m}");
        }
    }

    #[test]
    fn completions_examples() {
        let b = Ballot::from_letters("ABCD", 4).unwrap();
        assert_eq!(b.completions(), vec![b.clone()]);
        let ab = Ballot::from_letters("AB", 4).unwrap();
        let c: Vec<String> = ab.completions().iter().map(|b| b.to_letters()).collect();
        assert_eq!(c, vec!["ABCD", "ABDC"]);
        assert_eq!(Ballot::from_letters("A", 4).unwrap().completions().len(), 6);
    }

    #[test]
    fn completion_counts_are_factorials() {
        let fact = |n: usize| (1..=n).product::<usize>();
        for b in enumerate_ballots(5).unwrap() {
            let comps = b.completions();
            assert_eq!(comps.len(), fact(b.unranked_count()));
            assert!(comps.iter().all(|c| c.is_complete() && c.ranking()[..b.len()] == *b.ranking()));
        }
    }

    #[test]
    fn generalized_from_ballot() {
        let g = Ballot::from_letters("AD", 4).unwrap().to_generalized();
        assert_eq!(g.to_string(), "(A,D,{B,C})");
        let full = Ballot::from_letters("DCBA", 4).unwrap().to_generalized();
        assert_eq!(full.tiers().len(), 4);
        assert_eq!(g.to_ballot().unwrap(), Ballot::from_letters("AD", 4).unwrap());
    }

    #[test]
    fn generalized_validation() {
        assert!(GeneralizedBallot::from_index_tiers(&[&[0, 1], &[1, 2]], 3).is_err());
        assert!(GeneralizedBallot::from_index_tiers(&[&[0], &[2]], 3).is_err());
        assert!(GeneralizedBallot::from_index_tiers(&[&[0], &[]], 1).is_err());
        assert!(GeneralizedBallot::from_index_tiers(&[&[1, 0], &[2]], 3).is_ok());
    }

    #[test]
    fn weak_order_counts_are_fubini_numbers() {
        let counts: Vec<usize> = (1..=5).map(|m| enumerate_weak_orders(m).unwrap().len()).collect();
        assert_eq!(counts, vec![1, 3, 13, 75, 541]);
    }

    #[test]
    fn common_refinement_example() {
        // (A,{B,C},D,{E,F}) vs ({B,D},{A,C},{E,F})
        let a = GeneralizedBallot::from_index_tiers(&[&[0], &[1, 2], &[3], &[4, 5]], 6).unwrap();
        let b = GeneralizedBallot::from_index_tiers(&[&[1, 3], &[0, 2], &[4, 5]], 6).unwrap();
        let blocks = common_refinement(&a, &b).unwrap();
        assert_eq!(blocks, vec![ids(&[0]), ids(&[1]), ids(&[2]), ids(&[3]), ids(&[4, 5])]);
        assert_eq!(common_refinement(&a, &a).unwrap(), a.tiers().to_vec());
        let singles = Ballot::from_letters("FEDCBA", 6).unwrap();
        assert_eq!(common_refinement(&singles, &b).unwrap().len(), 6);
        let small = GeneralizedBallot::all_tied(5);
        assert!(matches!(common_refinement(&a, &small), Err(Error::MismatchedCandidates { .. })));
    }

    #[test]
    fn ballot_order_is_length_then_lexicographic() {
        let all = enumerate_ballots(3).unwrap();
        let s: Vec<String> = all.iter().map(|b| b.to_letters()).collect();
        assert_eq!(s, vec!["A", "B", "C", "ABC", "ACB", "BAC", "BCA", "CAB", "CBA"]);
    }
}
