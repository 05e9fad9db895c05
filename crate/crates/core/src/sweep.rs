//! Dataset-wide comparisons of clustering methods over many elections.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::clustering::{
    distance_matrix, exact_k_medoids_with_matrix, exact_medoid_ops, lloyd, pam_with_matrix, partition_difference, Budget, Clustering,
    DistanceSpec, Embedding, SearchOptions,
};
use crate::error::Result;
use crate::exec::Exec;
use crate::metrics::BordaConvention;
use crate::profile::Profile;
use crate::slates::{dissim_completion_cloud, dissim_rank_difference, slates_by_agglomeration, slates_by_centers, Linkage, SlatePartition};

/// The four 2-clustering methods compared, in table order.
pub const METHODS: [&str; 4] = ["Lloyd b", "Lloyd h", "PAM b", "PAM h"];

pub const MAJOR_PARTIES: [&str; 5] = ["SNP", "Lab", "Con", "LD", "Grn"];

/// Maps a party label to a major-party code, accepting common long forms.
pub fn major_party(label: &str) -> Option<&'static str> {
    let l = label.to_ascii_lowercase();
    let table: [(&str, &[&str]); 5] = [
        ("SNP", &["snp", "scottish national"]),
        ("Lab", &["lab", "labour"]),
        ("Con", &["con", "conservative"]),
        ("LD", &["ld", "lib dem", "liberal democrat"]),
        ("Grn", &["grn", "green"]),
    ];
    table
        .iter()
        .find(|(_, keys)| keys.iter().any(|k| l == *k || (k.len() > 3 && l.contains(k))))
        .map(|(code, _)| *code)
}

#[derive(Debug, Clone, Copy)]
pub struct SweepOptions {
    pub seed: u64,
    pub restarts: usize,
    /// Cap for the exact 2-medoid searches; larger elections are skipped.
    pub budget: Budget,
    pub exec: Exec,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions { seed: 0, restarts: 4, budget: Budget::default(), exec: Exec::Parallel }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ElectionSummary {
    pub name: String,
    pub candidates: usize,
    pub voters: u64,
    pub types: usize,
    /// Exact 1-medoid under `d_H` equals the one under `d_B`.
    pub k1_center_agreement: bool,
    /// Exact 2-medoid center sets agree; `None` when over budget.
    pub k2_center_agreement: Option<bool>,
    /// Partition differences between [`METHODS`]; the diagonal compares two
    /// seeds of the same method.
    pub method_differences: [[f64; 4]; 4],
    /// Whether the k = 2 slates separate two candidates of one major party;
    /// `None` when no major party fields two candidates.
    pub centers_split_party: Option<bool>,
    pub agglomerative_split_party: Option<bool>,
    pub smaller_slate_centers: usize,
    pub smaller_slate_agglomerative: usize,
}

fn splits_party(p: &Profile, s: &SlatePartition) -> Option<bool> {
    let mut by_party: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, label) in p.parties().iter().enumerate() {
        if let Some(code) = label.as_deref().and_then(major_party) {
            by_party.entry(code).or_default().push(s.slate_of(crate::ballot::CandidateId(i)));
        }
    }
    let groups: Vec<&Vec<usize>> = by_party.values().filter(|v| v.len() > 1).collect();
    if groups.is_empty() {
        return None;
    }
    Some(groups.iter().any(|v| v.iter().any(|&x| x != v[0])))
}

fn two_clusterings(p: &Profile, dh: &crate::clustering::DistanceMatrix, db: &crate::clustering::DistanceMatrix, seed: u64, opts: &SweepOptions) -> Result<[Clustering; 4]> {
    let search = SearchOptions { seed, restarts: opts.restarts, exec: opts.exec };
    Ok([
        lloyd(p, 2, Embedding::BordaPessimistic, search)?,
        lloyd(p, 2, Embedding::HeadToHead, search)?,
        pam_with_matrix(p, db, 2, search)?,
        pam_with_matrix(p, dh, 2, search)?,
    ])
}

pub fn analyze_election(name: &str, p: &Profile, opts: &SweepOptions) -> Result<ElectionSummary> {
    let dh = distance_matrix(p, DistanceSpec::HeadToHead, opts.exec)?;
    let db = distance_matrix(p, DistanceSpec::BordaPessimistic, opts.exec)?;
    let k1 = exact_k_medoids_with_matrix(p, &dh, 1, opts.exec)?.centers == exact_k_medoids_with_matrix(p, &db, 1, opts.exec)?.centers;
    let enough_types = p.num_types() >= 2;
    let k2 = if enough_types && exact_medoid_ops(p.num_types(), 2) <= opts.budget.max_ops {
        Some(exact_k_medoids_with_matrix(p, &dh, 2, opts.exec)?.centers == exact_k_medoids_with_matrix(p, &db, 2, opts.exec)?.centers)
    } else {
        None
    };

    let mut table = [[0.0; 4]; 4];
    if enough_types {
        let first = two_clusterings(p, &dh, &db, opts.seed, opts)?;
        let second = two_clusterings(p, &dh, &db, opts.seed.wrapping_add(1), opts)?;
        for i in 0..4 {
            table[i][i] = partition_difference(&first[i], &second[i])?;
            for j in i + 1..4 {
                let d = partition_difference(&first[i], &first[j])?;
                table[i][j] = d;
                table[j][i] = d;
            }
        }
    }

    let m = p.num_candidates();
    let (mut centers_split, mut agglom_split, mut small_c, mut small_a) = (None, None, 0, 0);
    if m >= 2 {
        let centers = slates_by_centers(&dissim_rank_difference(p, BordaConvention::Pessimistic, opts.exec), 2)?;
        let agglom = slates_by_agglomeration(&dissim_completion_cloud(p, opts.exec), 2, Linkage::Average)?;
        centers_split = splits_party(p, &centers);
        agglom_split = splits_party(p, &agglom);
        small_c = centers.slates().iter().map(Vec::len).min().unwrap_or(0);
        small_a = agglom.slates().iter().map(Vec::len).min().unwrap_or(0);
    }

    Ok(ElectionSummary {
        name: name.to_string(),
        candidates: m,
        voters: p.voter_count(),
        types: p.num_types(),
        k1_center_agreement: k1,
        k2_center_agreement: k2,
        method_differences: table,
        centers_split_party: centers_split,
        agglomerative_split_party: agglom_split,
        smaller_slate_centers: small_c,
        smaller_slate_agglomerative: small_a,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusSummary {
    pub elections: usize,
    pub k1_agreement: f64,
    pub k2_agreement: f64,
    pub k2_evaluated: usize,
    /// Mean of the per-election method tables.
    pub method_table: [[f64; 4]; 4],
    pub party_eligible: usize,
    pub centers_party_splits: usize,
    pub agglomerative_party_splits: usize,
    /// Smaller k = 2 slate size histograms, by candidate count.
    pub smaller_slate_centers: BTreeMap<usize, BTreeMap<usize, usize>>,
    pub smaller_slate_agglomerative: BTreeMap<usize, BTreeMap<usize, usize>>,
}

pub fn summarize(elections: &[ElectionSummary]) -> CorpusSummary {
    let n = elections.len().max(1) as f64;
    let mut table = [[0.0; 4]; 4];
    for e in elections {
        for (row, add) in table.iter_mut().zip(&e.method_differences) {
            row.iter_mut().zip(add).for_each(|(t, a)| *t += a / n);
        }
    }
    let k2: Vec<bool> = elections.iter().filter_map(|e| e.k2_center_agreement).collect();
    let mut centers_hist: BTreeMap<usize, BTreeMap<usize, usize>> = BTreeMap::new();
    let mut agglom_hist: BTreeMap<usize, BTreeMap<usize, usize>> = BTreeMap::new();
    for e in elections {
        *centers_hist.entry(e.candidates).or_default().entry(e.smaller_slate_centers).or_default() += 1;
        *agglom_hist.entry(e.candidates).or_default().entry(e.smaller_slate_agglomerative).or_default() += 1;
    }
    CorpusSummary {
        elections: elections.len(),
        k1_agreement: elections.iter().filter(|e| e.k1_center_agreement).count() as f64 / n,
        k2_agreement: k2.iter().filter(|&&x| x).count() as f64 / k2.len().max(1) as f64,
        k2_evaluated: k2.len(),
        method_table: table,
        party_eligible: elections.iter().filter(|e| e.centers_split_party.is_some()).count(),
        centers_party_splits: elections.iter().filter(|e| e.centers_split_party == Some(true)).count(),
        agglomerative_party_splits: elections.iter().filter(|e| e.agglomerative_split_party == Some(true)).count(),
        smaller_slate_centers: centers_hist,
        smaller_slate_agglomerative: agglom_hist,
    }
}

impl CorpusSummary {
    pub fn to_text(&self) -> String {
        use std::fmt::Write as _;
        let mut out = String::new();
        writeln!(out, "elections: {}", self.elections).unwrap();
        writeln!(out, "k1_center_agreement: {:.4}", self.k1_agreement).unwrap();
        writeln!(out, "k2_center_agreement: {:.4} (of {})", self.k2_agreement, self.k2_evaluated).unwrap();
        writeln!(out, "method differences:").unwrap();
        writeln!(out, "{:>8} | {}", "", METHODS.map(|m| format!("{m:>8}")).join(" ")).unwrap();
        for (i, row) in self.method_table.iter().enumerate() {
            let cells: Vec<String> = row.iter().map(|x| format!("{x:>8.4}")).collect();
            writeln!(out, "{:>8} | {}", METHODS[i], cells.join(" ")).unwrap();
        }
        writeln!(out, "party_eligible: {}", self.party_eligible).unwrap();
        writeln!(out, "centers_party_splits: {}", self.centers_party_splits).unwrap();
        writeln!(out, "agglomerative_party_splits: {}", self.agglomerative_party_splits).unwrap();
        for (m, hist) in &self.smaller_slate_centers {
            writeln!(out, "smaller_slate_centers[m={m}]: {hist:?}").unwrap();
        }
        for (m, hist) in &self.smaller_slate_agglomerative {
            writeln!(out, "smaller_slate_agglomerative[m={m}]: {hist:?}").unwrap();
        }
        out
    }
}
