#![allow(clippy::needless_range_loop)]

//! Acceptance suite: one PASS/FAIL/SKIP line per criterion.
//!
//! Oracles here are written from the definitions and deliberately avoid the
//! library's own distance helpers.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::Instant;

use ballot_geometry::ballot::enumerate_ballots;
use ballot_geometry::clustering::{
    distance_matrix, exact_k_medoids, exact_k_medoids_with_matrix, lloyd, pam_with_matrix, partition_difference, silhouette_with_matrix,
    Budget, Clustering, DistanceSpec, Embedding, SearchOptions,
};
use ballot_geometry::graphs::{borda_geodesic, build_graph, GraphOptions, GraphVariant};
use ballot_geometry::ingest::{parse_blt, profile_stats};
use ballot_geometry::metrics::{
    borda_embed, disagreements, dist_b, dist_h, dist_hausdorff, expected_completion_swaps, h2h_embed, CompletionMode,
};
use ballot_geometry::slates::{
    assign_ballots_to_slates, completion_gap, dissim_completion_cloud, dissim_rank_difference, slates_by_agglomeration, slates_by_centers,
    Linkage, SlateMethod, SlateRule,
};
use ballot_geometry::sweep::{analyze_election, summarize, SweepOptions};
use ballot_geometry::synthetic::{benchmark_election, Benchmark};
use ballot_geometry::{count_ballots, Ballot, BordaConvention, CandidateId, Exec, Profile, Ranking};
use num_rational::Ratio;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CORPUS_ENV: &str = "BALLOT_CORPUS_DIR";

enum Outcome {
    Pass(String),
    Fail(String),
    /// A failure traced to a false statement in the criterion itself; the
    /// line still reads FAIL but does not fail the run.
    Unattainable(String),
    Skip(String),
}

fn check(failures: Vec<String>, pass: String) -> Outcome {
    if failures.is_empty() {
        Outcome::Pass(pass)
    } else {
        let shown: Vec<&str> = failures.iter().take(8).map(String::as_str).collect();
        Outcome::Fail(format!("{} failure(s): {}", failures.len(), shown.join("; ")))
    }
}

// ---------- oracles ----------

/// Tier index per candidate; unranked candidates share the last tier.
fn levels_of<R: Ranking + ?Sized>(r: &R) -> Vec<usize> {
    r.tier_view().level.clone()
}

fn h2h_sign(levels: &[usize], i: usize, j: usize) -> i64 {
    (levels[j] as i64 - levels[i] as i64).signum()
}

/// Twice the head-to-head distance: sum over pairs of |h_x - h_y|.
fn oracle_dh_doubled(a: &[usize], b: &[usize]) -> i64 {
    let m = a.len();
    let mut total = 0;
    for i in 0..m {
        for j in i + 1..m {
            total += (h2h_sign(a, i, j) - h2h_sign(b, i, j)).abs();
        }
    }
    total
}

/// Twice each candidate's Borda score.
fn oracle_borda_doubled(levels: &[usize], averaged: bool) -> Vec<i64> {
    levels
        .iter()
        .map(|&l| {
            let below = levels.iter().filter(|&&o| o > l).count() as i64;
            let tied = levels.iter().filter(|&&o| o == l).count() as i64;
            if averaged {
                2 * below + tied - 1
            } else {
                2 * below
            }
        })
        .collect()
}

/// Twice the Borda distance.
fn oracle_db_doubled(a: &[usize], b: &[usize], averaged: bool) -> i64 {
    let (x, y) = (oracle_borda_doubled(a, averaged), oracle_borda_doubled(b, averaged));
    x.iter().zip(&y).map(|(p, q)| (p - q).abs()).sum::<i64>() / 2
}

/// (strong, weak) disagreement counts.
fn oracle_str_wk(a: &[usize], b: &[usize]) -> (i64, i64) {
    let m = a.len();
    let (mut s, mut w) = (0, 0);
    for i in 0..m {
        for j in i + 1..m {
            match (h2h_sign(a, i, j), h2h_sign(b, i, j)) {
                (0, 0) => {}
                (0, _) | (_, 0) => w += 1,
                (p, q) if p != q => s += 1,
                _ => {}
            }
        }
    }
    (s, w)
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.is_empty() {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for (i, &first) in items.iter().enumerate() {
        let rest: Vec<usize> = items.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &x)| x).collect();
        for mut tail in permutations(&rest) {
            tail.insert(0, first);
            out.push(tail);
        }
    }
    out
}

/// Every completion of `b` as a position-per-candidate vector.
fn completion_positions(b: &Ballot) -> Vec<Vec<usize>> {
    let m = b.num_candidates();
    let ranked: Vec<usize> = b.ranking().iter().map(|c| c.0).collect();
    let unranked: Vec<usize> = (0..m).filter(|c| !ranked.contains(c)).collect();
    permutations(&unranked)
        .into_iter()
        .map(|tail| {
            let mut pos = vec![0; m];
            for (p, &c) in ranked.iter().chain(&tail).enumerate() {
                pos[c] = p;
            }
            pos
        })
        .collect()
}

fn inversions(a: &[usize], b: &[usize]) -> i64 {
    let m = a.len();
    let mut n = 0;
    for i in 0..m {
        for j in i + 1..m {
            if (a[i] < a[j]) != (b[i] < b[j]) {
                n += 1;
            }
        }
    }
    n
}

fn random_ballot(rng: &mut ChaCha8Rng, m: usize) -> Ballot {
    let mut order: Vec<usize> = (0..m).collect();
    order.shuffle(rng);
    let len = rng.random_range(1..m);
    Ballot::from_indices(&order[..len], m).unwrap()
}

fn random_profile(rng: &mut ChaCha8Rng, m: usize, types: usize) -> Profile {
    let ballots: Vec<(u64, Ballot)> = (0..types)
        .map(|_| {
            let w = rng.random_range(1..=20);
            (w, random_ballot(rng, m))
        })
        .collect();
    Profile::from_ballots(m, ballots).unwrap()
}

fn letters(s: &str, m: usize) -> Ballot {
    Ballot::from_letters(s, m).unwrap()
}

/// Labels of `a` match labels of `b` up to renaming.
fn same_partition(a: &[usize], b: &[usize]) -> bool {
    let mut map = std::collections::HashMap::new();
    let mut back = std::collections::HashMap::new();
    a.iter().zip(b).all(|(x, y)| *map.entry(x).or_insert(y) == y && *back.entry(y).or_insert(x) == x)
}

// ---------- criteria ----------

fn criterion_1() -> Outcome {
    let mut failures = Vec::new();
    let mut checked = 0usize;
    let cases = [(3, GraphVariant::Basic), (4, GraphVariant::Basic), (5, GraphVariant::Basic), (3, GraphVariant::Shortcut), (4, GraphVariant::Shortcut), (5, GraphVariant::Shortcut), (3, GraphVariant::Generalized), (4, GraphVariant::Generalized)];
    for (m, variant) in cases {
        let g = build_graph(m, variant, GraphOptions::default()).unwrap();
        let levels: Vec<Vec<usize>> = g.nodes().iter().map(|n| levels_of(&n.to_generalized(m))).collect();
        let all = g.all_pairs(Exec::Parallel);
        for (a, row) in all.iter().enumerate() {
            for (b, d) in row.iter().enumerate() {
                let want = match variant {
                    GraphVariant::Shortcut => oracle_db_doubled(&levels[a], &levels[b], false),
                    _ => oracle_dh_doubled(&levels[a], &levels[b]),
                };
                checked += 1;
                if d.doubled() != want {
                    failures.push(format!("{variant:?} m={m} {} -> {}: path {d} vs {}", g.nodes()[a].render(), g.nodes()[b].render(), want as f64 / 2.0));
                }
            }
        }
    }
    check(failures, format!("{checked} pairs exact"))
}

fn criterion_2() -> Outcome {
    let mut f = Vec::new();
    let mut expect = |ok: bool, what: &str| {
        if !ok {
            f.push(what.to_string())
        }
    };
    let ad = letters("AD", 4);
    expect(borda_embed(&ad, BordaConvention::Pessimistic).values() == [3.0, 0.0, 0.0, 2.0], "b(AD)");
    expect(oracle_borda_doubled(&levels_of(&ad), false) == [6, 0, 0, 4], "oracle b(AD)");
    expect(h2h_embed(&ad).coords() == [1, 1, 1, 0, -1, -1], "h(AD)");
    let (abcd, dcba) = (letters("ABCD", 4), letters("DCBA", 4));
    expect(dist_h(&abcd, &dcba).unwrap().to_f64() == 6.0, "d_H(ABCD, DCBA)");
    let g = build_graph(4, GraphVariant::Shortcut, GraphOptions::default()).unwrap();
    expect(g.ballot_distance(&abcd, &dcba).unwrap().to_f64() == 4.0, "G4+ distance");
    let d = disagreements(&letters("ABC", 5), &letters("AE", 5)).unwrap();
    expect((d.strong, d.weak) == (2, 4), "str/wk");
    expect(oracle_str_wk(&levels_of(&letters("ABC", 5)), &levels_of(&letters("AE", 5))) == (2, 4), "oracle str/wk");
    let (x, y) = (letters("ABDF", 6), letters("BCA", 6));
    expect(dist_b(&x, &y, BordaConvention::Pessimistic).unwrap().to_f64() == 6.0, "shifts pessimistic");
    expect(dist_b(&x, &y, BordaConvention::Averaged).unwrap().to_f64() == 5.0, "shifts averaged");
    expect(oracle_db_doubled(&levels_of(&x), &levels_of(&y), false) == 12, "oracle shifts pessimistic");
    expect(oracle_db_doubled(&levels_of(&x), &levels_of(&y), true) == 10, "oracle shifts averaged");
    let plan = borda_geodesic(&letters("ACB", 5), &letters("DCAEB", 5)).unwrap();
    expect(plan.swap_weight().to_f64() == 4.0, "statevector swap segment");
    expect(count_ballots(7).unwrap() == 8659, "count_ballots(7)");
    check(f, "all worked values".into())
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut failures = Vec::new();
    let n = 100_000;
    let (mut strict_equal_at_zero_str, mut strict_other, mut zero_str_pairs) = (0, 0, 0);
    for t in 0..n {
        let m = 4 + t % 6;
        let (x, y) = (random_ballot(&mut rng, m), random_ballot(&mut rng, m));
        let (lx, ly) = (levels_of(&x), levels_of(&y));
        let dh = dist_h(&x, &y).unwrap().doubled();
        let db = dist_b(&x, &y, BordaConvention::Pessimistic).unwrap().doubled();
        let haus = dist_hausdorff(&x, &y).unwrap() as i64;
        let (s, w) = oracle_str_wk(&lx, &ly);
        let mut bad = |ok: bool, what: &str| {
            if !ok {
                failures.push(format!("{what}: {} vs {}", x.to_letters(), y.to_letters()));
            }
        };
        bad(dh == oracle_dh_doubled(&lx, &ly), "d_H oracle");
        bad(db == oracle_db_doubled(&lx, &ly, false), "d_B oracle");
        bad(dh == 2 * s + w, "d_H = str + wk/2");
        bad(db <= dh, "d_B <= d_H");
        bad(dh <= 2 * haus, "d_H <= d_Haus");
        bad(haus <= db, "d_Haus <= 2 d_B");
        if x != y {
            bad(dh < 2 * db, "d_H < 2 d_B");
            if s == 0 {
                zero_str_pairs += 1;
            }
            if s + w >= db {
                if s == 0 && s + w == db {
                    strict_equal_at_zero_str += 1;
                } else {
                    strict_other += 1;
                    bad(false, "(str + wk)/2 < d_B");
                }
            }
        }
    }
    if !failures.is_empty() {
        return check(failures, String::new());
    }
    if strict_equal_at_zero_str > 0 && strict_other == 0 {
        return Outcome::Unattainable(format!(
            "all bounds hold on {n} pairs except strict (str + wk)/2 < d_B: equality on {strict_equal_at_zero_str} of {zero_str_pairs} distinct pairs with str = 0 (one ballot extends the other, so d_B = wk/2); strict on every pair with str > 0"
        ));
    }
    Outcome::Pass(format!("{n} pairs, zero violations"))
}

fn criterion_4() -> Outcome {
    let mut failures = Vec::new();
    let mut checked = 0usize;
    for m in 2..=6 {
        let ballots: Vec<Ballot> = enumerate_ballots(m).unwrap().into_iter().filter(|b| b.unranked_count() <= 4).collect();
        let completions: Vec<Vec<Vec<usize>>> = if m <= 4 { ballots.iter().map(completion_positions).collect() } else { Vec::new() };
        let rows = Exec::Parallel.map_range(ballots.len(), |i| {
            let mut bad = Vec::new();
            let li = levels_of(&ballots[i]);
            for (j, y) in ballots.iter().enumerate() {
                let want = oracle_dh_doubled(&li, &levels_of(y)) as f64 / 2.0;
                let got = expected_completion_swaps(&ballots[i], y, CompletionMode::DEFAULT_EXACT).unwrap();
                if got != want {
                    bad.push(format!("m={m} {} vs {}: {got} vs {want}", ballots[i].to_letters(), y.to_letters()));
                }
                // small m: check the pairing independently by brute force
                if m <= 4 {
                    let shared: Vec<usize> = (0..m).filter(|&c| !ballots[i].contains(CandidateId(c)) && !y.contains(CandidateId(c))).collect();
                    let (mut total, mut count) = (0i64, 0i64);
                    for a in &completions[i] {
                        for b in &completions[j] {
                            let agree = shared.iter().all(|&c| shared.iter().all(|&d| (a[c] < a[d]) == (b[c] < b[d])));
                            if agree {
                                total += inversions(a, b);
                                count += 1;
                            }
                        }
                    }
                    if 2 * total != (want * 2.0) as i64 * count {
                        bad.push(format!("brute m={m} {} vs {}", ballots[i].to_letters(), y.to_letters()));
                    }
                }
            }
            bad
        });
        checked += ballots.len() * ballots.len();
        failures.extend(rows.into_iter().flatten());
    }
    check(failures, format!("{checked} pairs exact"))
}

fn brute_gap(b: &Ballot, i: usize, j: usize) -> Ratio<i64> {
    let comps = completion_positions(b);
    let total: i64 = comps.iter().map(|p| (p[i] as i64 - p[j] as i64).abs()).sum();
    Ratio::new(total, comps.len() as i64)
}

fn criterion_5() -> Outcome {
    let mut failures = Vec::new();
    let mut gaps = 0usize;
    for m in 2..=6 {
        for b in enumerate_ballots(m).unwrap() {
            for i in 0..m {
                for j in i + 1..m {
                    gaps += 1;
                    let (got, want) = (completion_gap(&b, CandidateId(i), CandidateId(j)), brute_gap(&b, i, j));
                    if got != want {
                        failures.push(format!("{} gap({i},{j}) {got} vs {want}", b.to_letters()));
                    }
                }
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut triples = 0usize;
    for t in 0..100 {
        let m = 3 + t % 5;
        let types = rng.random_range(1..=25);
        let p = random_profile(&mut rng, m, types);
        let d = dissim_completion_cloud(&p, Exec::Parallel);
        if m <= 6 {
            for i in 0..m {
                for j in 0..m {
                    let mut sum = Ratio::from_integer(0);
                    for (b, w) in p.iter() {
                        sum += brute_gap(b, i, j) * Ratio::from_integer(w as i64);
                    }
                    let want = sum / Ratio::from_integer(p.voter_count() as i64);
                    let want = *want.numer() as f64 / *want.denom() as f64;
                    if (d.matrix()[i][j] - want).abs() > 1e-12 {
                        failures.push(format!("profile {t} D({i},{j}) {} vs {want}", d.matrix()[i][j]));
                    }
                }
            }
        }
        let x = d.matrix();
        for i in 0..m {
            if x[i][i] != 0.0 {
                failures.push(format!("profile {t} nonzero diagonal"));
            }
            for j in 0..m {
                if x[i][j] != x[j][i] {
                    failures.push(format!("profile {t} asymmetric"));
                }
                for k in 0..m {
                    triples += 1;
                    if x[i][k] > x[i][j] + x[j][k] + 1e-12 {
                        failures.push(format!("profile {t} triangle ({i},{j},{k})"));
                    }
                }
            }
        }
    }
    check(failures, format!("{gaps} ballot gaps exact, {triples} triples"))
}

fn pam_opts(seed: u64) -> SearchOptions {
    SearchOptions { seed, restarts: 4, exec: Exec::Parallel }
}

fn center_set(c: &Clustering) -> BTreeSet<String> {
    c.center_ballots().unwrap().iter().map(Ballot::to_letters).collect()
}

fn min_swap_gap(found: &Ballot, truth: &[Ballot]) -> f64 {
    truth.iter().map(|t| dist_h(found, t).unwrap().to_f64()).fold(f64::INFINITY, f64::min)
}

fn criterion_6() -> Outcome {
    let mut failures = Vec::new();
    let mut notes = Vec::new();

    let (mut e_ok, mut diff_sum) = (0, 0.0);
    for seed in 0..20 {
        let p = benchmark_election(Benchmark::E, seed, Exec::Parallel).unwrap();
        let db = distance_matrix(&p, DistanceSpec::BordaPessimistic, Exec::Parallel).unwrap();
        let c = pam_with_matrix(&p, &db, 2, pam_opts(seed)).unwrap();
        let truth: BTreeSet<String> = ["ABCDE", "EDCBA"].map(String::from).into();
        let sizes = c.sizes();
        let by_center: Vec<(String, u64)> = c.center_ballots().unwrap().iter().map(Ballot::to_letters).zip(sizes).collect();
        let size_ok = by_center.iter().all(|(name, s)| (*s as i64 - if name == "ABCDE" { 300 } else { 700 }).abs() <= 30);
        if center_set(&c) == truth && size_ok {
            e_ok += 1;
        }
        let l = lloyd(&p, 2, Embedding::BordaPessimistic, pam_opts(seed)).unwrap();
        diff_sum += partition_difference(&l, &c).unwrap();
    }
    let diff_mean = diff_sum / 20.0;
    notes.push(format!("E {e_ok}/20, Lloyd-PAM {diff_mean:.4}"));
    if e_ok < 19 {
        failures.push(format!("E recovered {e_ok}/20"));
    }
    if diff_mean > 0.03 {
        failures.push(format!("Lloyd vs PAM mean difference {diff_mean:.4}"));
    }

    let seeds = 10;
    let mut worst = (f64::INFINITY, 0.0);
    for i in 0..12 {
        let p_swap = 0.06 + 0.04 * i as f64;
        let family = Benchmark::E2(p_swap);
        let truth: BTreeSet<String> = family.centers().iter().map(Ballot::to_letters).collect();
        let ok = (0..seeds)
            .filter(|&seed| {
                let p = benchmark_election(family, seed, Exec::Parallel).unwrap();
                let db = distance_matrix(&p, DistanceSpec::BordaPessimistic, Exec::Parallel).unwrap();
                center_set(&pam_with_matrix(&p, &db, 2, pam_opts(seed)).unwrap()) == truth
            })
            .count();
        let rate = ok as f64 / seeds as f64;
        if rate < worst.0 {
            worst = (rate, p_swap);
        }
        if rate < 0.9 {
            failures.push(format!("E2({p_swap:.2}) {ok}/{seeds}"));
        }
    }
    notes.push(format!("E2 worst rate {:.2} at p={:.2}", worst.0, worst.1));
    let mut near = (0, 0);
    for p_swap in [0.02, 0.04] {
        let family = Benchmark::E2(p_swap);
        let truth = family.centers();
        for seed in 0..seeds {
            let p = benchmark_election(family, seed, Exec::Parallel).unwrap();
            let db = distance_matrix(&p, DistanceSpec::BordaPessimistic, Exec::Parallel).unwrap();
            let found = pam_with_matrix(&p, &db, 2, pam_opts(seed)).unwrap().center_ballots().unwrap();
            near.1 += 1;
            let gaps: Vec<f64> = truth.iter().map(|t| min_swap_gap(t, &found)).collect();
            if gaps.iter().all(|&g| g <= 2.0) {
                near.0 += 1;
            } else {
                failures.push(format!("E2({p_swap}) seed {seed}: gaps {gaps:?}"));
            }
        }
    }
    notes.push(format!("E2 low p within 2 swaps {}/{}", near.0, near.1));

    let mut e3_exact = (0, 0);
    for (p_swap, tolerance) in [(0.02, 1.0), (0.04, 1.0), (0.06, 0.0), (0.1, 0.0), (0.2, 0.0), (0.3, 0.0), (0.4, 0.0), (0.5, 0.0)] {
        let family = Benchmark::E3(p_swap);
        let truth = family.centers();
        for seed in 0..5 {
            let p = benchmark_election(family, seed, Exec::Parallel).unwrap();
            let db = distance_matrix(&p, DistanceSpec::BordaPessimistic, Exec::Parallel).unwrap();
            let found = pam_with_matrix(&p, &db, 3, pam_opts(seed)).unwrap().center_ballots().unwrap();
            let gaps: Vec<f64> = found.iter().map(|b| min_swap_gap(b, &truth)).collect();
            let matched: BTreeSet<String> = found.iter().map(|b| {
                truth.iter().min_by(|a, c| dist_h(b, *a).unwrap().cmp(&dist_h(b, *c).unwrap())).unwrap().to_letters()
            }).collect();
            if tolerance == 0.0 {
                e3_exact.1 += 1;
            }
            if gaps.iter().any(|&g| g > tolerance) || matched.len() != 3 {
                failures.push(format!("E3({p_swap}) seed {seed}: gaps {gaps:?}"));
            } else if tolerance == 0.0 {
                e3_exact.0 += 1;
            }
        }
    }
    notes.push(format!("E3 exact {}/{}", e3_exact.0, e3_exact.1));
    check(failures, notes.join(", "))
}

fn silhouettes(p: &Profile, ks: &[usize], seed: u64) -> Vec<f64> {
    let db = distance_matrix(p, DistanceSpec::BordaPessimistic, Exec::Parallel).unwrap();
    ks.iter().map(|&k| silhouette_with_matrix(&pam_with_matrix(p, &db, k, pam_opts(seed)).unwrap(), &db).unwrap()).collect()
}

fn criterion_7() -> Outcome {
    let mut failures = Vec::new();
    let mut tested = 0;
    for i in 0..=12 {
        let p_swap = 0.02 + 0.04 * i as f64;
        for seed in 0..3 {
            let p = benchmark_election(Benchmark::E2(p_swap), seed, Exec::Parallel).unwrap();
            let s = silhouettes(&p, &[2, 3, 4, 5], seed);
            tested += 1;
            if s[1..].iter().any(|&x| x >= s[0]) {
                failures.push(format!("E2({p_swap:.2}) seed {seed}: {s:.3?}"));
            }
        }
    }
    for p_swap in [0.2, 0.3, 0.4, 0.5] {
        for seed in 0..3 {
            let p = benchmark_election(Benchmark::E3(p_swap), seed, Exec::Parallel).unwrap();
            let s = silhouettes(&p, &[3, 4, 5], seed);
            tested += 1;
            if s[1..].iter().any(|&x| x > s[0]) {
                failures.push(format!("E3({p_swap}) seed {seed}: {s:.3?}"));
            }
        }
    }
    check(failures, format!("{tested} instances"))
}

fn reversed(b: &Ballot) -> Ballot {
    let mut r: Vec<usize> = b.ranking().iter().map(|c| c.0).collect();
    r.reverse();
    Ballot::from_indices(&r, b.num_candidates()).unwrap()
}

/// A profile with every ballot within `r` of `x` or `y` (head-to-head),
/// both centers cast. Returns the profile and per-type ball labels.
fn polarized_profile(rng: &mut ChaCha8Rng, x: &Ballot, y: &Ballot, r: f64, types: usize) -> (Profile, Vec<usize>) {
    let m = x.num_candidates();
    let mut chosen: Vec<(Ballot, usize)> = vec![(x.clone(), 0), (y.clone(), 1)];
    let mut guard = 0;
    while chosen.len() < types && guard < 100_000 {
        guard += 1;
        let side = rng.random_range(0..2);
        let center = if side == 0 { x } else { y };
        let mut order: Vec<usize> = center.ranking().iter().map(|c| c.0).collect();
        for _ in 0..rng.random_range(0..=(r as usize)) {
            let i = rng.random_range(0..m - 1);
            order.swap(i, i + 1);
        }
        let len = rng.random_range(m.saturating_sub(3).max(1)..m);
        let b = Ballot::from_indices(&order[..len], m).unwrap();
        if oracle_dh_doubled(&levels_of(&b), &levels_of(center)) as f64 / 2.0 <= r && !chosen.iter().any(|(c, _)| *c == b) {
            chosen.push((b, side));
        }
    }
    let profile = Profile::from_ballots(m, chosen.iter().map(|(b, _)| (rng.random_range(1..=6), b.clone()))).unwrap();
    let labels = profile.ballot_types().iter().map(|b| chosen.iter().find(|(c, _)| c == b).unwrap().1).collect();
    (profile, labels)
}

fn criterion_8() -> Outcome {
    let m = 7;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut failures = Vec::new();
    let (mut strong_cases, mut built) = (0, 0);
    for t in 0..50 {
        let r = [2.0, 3.0, 4.0, 5.0][t % 4];
        let mut order: Vec<usize> = (0..m).collect();
        order.shuffle(&mut rng);
        let x = Ballot::from_indices(&order, m).unwrap();
        let y = if r == 2.0 {
            reversed(&x)
        } else {
            loop {
                let mut o: Vec<usize> = (0..m).collect();
                o.shuffle(&mut rng);
                let y = Ballot::from_indices(&o, m).unwrap();
                if oracle_dh_doubled(&levels_of(&x), &levels_of(&y)) as f64 / 2.0 > 4.0 * r {
                    break y;
                }
            }
        };
        let big_r = oracle_dh_doubled(&levels_of(&x), &levels_of(&y)) as f64 / 2.0;
        let (p, labels) = polarized_profile(&mut rng, &x, &y, r, 30);
        built += 1;
        let budget = Budget::default();
        let h = exact_k_medoids(&p, 2, DistanceSpec::HeadToHead, budget, Exec::Parallel).unwrap();
        if !same_partition(&h.assignment, &labels) {
            failures.push(format!("profile {t} (R={big_r}, r={r}): d_H medoids {:?} differ from balls", center_set(&h)));
        }
        if big_r > 10.0 * r {
            strong_cases += 1;
            let b = exact_k_medoids(&p, 2, DistanceSpec::BordaPessimistic, budget, Exec::Parallel).unwrap();
            if !same_partition(&b.assignment, &h.assignment) {
                failures.push(format!("profile {t} (R={big_r}, r={r}): d_B and d_H assignments differ"));
            }
        }
    }
    check(failures, format!("{built} profiles, {strong_cases} with R > 10r"))
}

fn blt_files(dir: &Path, out: &mut Vec<PathBuf>) {
    let Ok(entries) = std::fs::read_dir(dir) else { return };
    let mut entries: Vec<PathBuf> = entries.filter_map(|e| e.ok().map(|e| e.path())).collect();
    entries.sort();
    for path in entries {
        if path.is_dir() {
            blt_files(&path, out);
        } else if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("blt")) {
            out.push(path);
        }
    }
}

fn slate_sets(s: &ballot_geometry::slates::SlatePartition) -> Vec<Vec<usize>> {
    s.slates().iter().map(|sl| sl.iter().map(|c| c.0 + 1).collect()).collect()
}

fn criterion_9() -> Outcome {
    let Some(dir) = std::env::var_os(CORPUS_ENV) else {
        return Outcome::Skip(format!("{CORPUS_ENV} not set"));
    };
    let mut files = Vec::new();
    blt_files(Path::new(&dir), &mut files);
    if files.is_empty() {
        return Outcome::Skip(format!("no .blt files under {}", Path::new(&dir).display()));
    }
    let mut failures = Vec::new();
    let mut notes = Vec::new();

    let pentland = files.iter().find(|f| f.to_string_lossy().to_ascii_lowercase().contains("pentland"));
    match pentland {
        None => failures.push("Pentland Hills file not found".into()),
        Some(path) => {
            let p = parse_blt(&std::fs::read_to_string(path).unwrap()).unwrap().to_profile().unwrap();
            let s = profile_stats(&p, 1);
            let mut expect = |ok: bool, what: String| {
                if !ok {
                    failures.push(what)
                }
            };
            expect(s.voter_count == 11315, format!("voters {}", s.voter_count));
            expect(s.distinct_types == 1238, format!("types {}", s.distinct_types));
            expect(s.bullet_votes == 967, format!("bullets {}", s.bullet_votes));
            expect(s.complete_as_cast == 1431, format!("complete {}", s.complete_as_cast));
            expect(s.singleton_type_count == 660, format!("singletons {}", s.singleton_type_count));
            expect((s.mean_length - 3.2).abs() <= 0.05, format!("mean length {}", s.mean_length));
            let top = &s.top_ballots[0];
            expect(top.0.ranking() == [CandidateId(0), CandidateId(5)] && top.1 == 1342, format!("top type {:?}", top));

            let db = distance_matrix(&p, DistanceSpec::BordaPessimistic, Exec::Parallel).unwrap();
            let sorted = |c: &Clustering| {
                let mut s = c.sizes();
                s.sort();
                s
            };
            let k2 = exact_k_medoids_with_matrix(&p, &db, 2, Exec::Parallel).unwrap();
            expect(sorted(&k2) == [4802, 6513], format!("k=2 sizes {:?}", k2.sizes()));
            let k3 = exact_k_medoids_with_matrix(&p, &db, 3, Exec::Parallel).unwrap();
            expect(sorted(&k3) == [2565, 3798, 4955], format!("k=3 sizes {:?}", k3.sizes()));
            let centers: BTreeSet<Vec<usize>> = k3.center_ballots().unwrap().iter().map(|b| b.ranking().iter().map(|c| c.0 + 1).collect()).collect();
            expect(centers == [vec![1, 6], vec![3, 5, 7], vec![2, 4]].into(), format!("k=3 centers {centers:?}"));

            let d_b = dissim_rank_difference(&p, BordaConvention::Pessimistic, Exec::Parallel);
            let d_cloud = dissim_completion_cloud(&p, Exec::Parallel);
            let c2 = slates_by_centers(&d_b, 2).unwrap();
            let c3 = slates_by_centers(&d_b, 3).unwrap();
            let centers_of = |s: &ballot_geometry::slates::SlatePartition| match &s.method {
                SlateMethod::Centers { centers } => centers.iter().map(|c| c.0 + 1).collect::<BTreeSet<_>>(),
                _ => BTreeSet::new(),
            };
            expect(centers_of(&c2) == [1, 7].into() && slate_sets(&c2) == [vec![1, 6], vec![2, 3, 4, 5, 7]], format!("centers k=2 {:?}", slate_sets(&c2)));
            expect(centers_of(&c3) == [1, 2, 5].into() && slate_sets(&c3) == [vec![1, 6], vec![2, 4, 7], vec![3, 5]], format!("centers k=3 {:?}", slate_sets(&c3)));
            let a3 = slates_by_agglomeration(&d_cloud, 3, Linkage::Average).unwrap();
            expect(slate_sets(&a3) == [vec![1, 6], vec![2, 4, 7], vec![3, 5]], format!("agglomerative k=3 {:?}", slate_sets(&a3)));
            let merges: Vec<Vec<usize>> = a3.merge_history.iter().take(3).map(|mg| mg.left.iter().chain(&mg.right).map(|c| c.0 + 1).collect::<BTreeSet<_>>().into_iter().collect()).collect();
            expect(merges == [vec![1, 6], vec![3, 5], vec![2, 7]], format!("merge order {merges:?}"));
            let a2 = slates_by_agglomeration(&d_cloud, 2, Linkage::Average).unwrap();
            expect(slate_sets(&a2) == [vec![1, 6], vec![2, 3, 4, 5, 7]], format!("agglomerative k=2 {:?}", slate_sets(&a2)));
            for linkage in [Linkage::Single, Linkage::Complete] {
                let s2 = slates_by_agglomeration(&d_cloud, 2, linkage).unwrap();
                expect(slate_sets(&s2) == slate_sets(&a2), format!("{linkage:?} k=2 {:?}", slate_sets(&s2)));
            }
            let complete3 = slates_by_agglomeration(&d_cloud, 3, Linkage::Complete).unwrap();
            expect(slate_sets(&complete3) == slate_sets(&a3), format!("complete k=3 {:?}", slate_sets(&complete3)));
            let single3 = slates_by_agglomeration(&d_cloud, 3, Linkage::Single).unwrap();
            expect(slate_sets(&single3) == [vec![1, 6], vec![2, 3, 5, 7], vec![4]], format!("single k=3 {:?}", slate_sets(&single3)));
            let _ = assign_ballots_to_slates(&p, &a3, SlateRule::BordaPerCandidate, BordaConvention::Pessimistic).unwrap();
        }
    }

    let opts = SweepOptions { seed: 0, restarts: 4, budget: Budget { max_ops: 4_000_000_000 }, exec: Exec::Parallel };
    let mut elections = Vec::new();
    for path in &files {
        let text = std::fs::read_to_string(path).unwrap();
        let Ok(doc) = parse_blt(&text) else {
            notes.push(format!("unparsed {}", path.display()));
            continue;
        };
        let p = doc.to_profile().unwrap();
        elections.push(analyze_election(&path.to_string_lossy(), &p, &opts).unwrap());
    }
    let s = summarize(&elections);
    let target = [[0.00, 0.02, 0.07, 0.07], [0.02, 0.00, 0.07, 0.07], [0.07, 0.07, 0.00, 0.04], [0.07, 0.07, 0.04, 0.00]];
    if (s.k1_agreement - 0.746).abs() > 0.02 {
        failures.push(format!("k=1 agreement {:.3}", s.k1_agreement));
    }
    if (s.k2_agreement - 0.735).abs() > 0.02 {
        failures.push(format!("k=2 agreement {:.3}", s.k2_agreement));
    }
    for i in 0..4 {
        for j in i..4 {
            if (s.method_table[i][j] - target[i][j]).abs() > 0.03 {
                failures.push(format!("method table ({i},{j}) {:.3}", s.method_table[i][j]));
            }
        }
    }
    if s.centers_party_splits.abs_diff(8) > 2 {
        failures.push(format!("centers party splits {}", s.centers_party_splits));
    }
    if s.agglomerative_party_splits.abs_diff(3) > 2 {
        failures.push(format!("agglomerative party splits {}", s.agglomerative_party_splits));
    }
    notes.push(format!("{} elections", s.elections));
    check(failures, notes.join(", "))
}

fn criterion_10() -> Outcome {
    let mut failures = Vec::new();
    let run = |exec: Exec| -> String {
        let mut out = String::new();
        for family in [Benchmark::E, Benchmark::E2(0.1), Benchmark::E3(0.3)] {
            let p = benchmark_election(family, 11, exec).unwrap();
            out.push_str(&p.to_text());
            let opts = SearchOptions { seed: 11, restarts: 4, exec };
            for spec in [DistanceSpec::BordaPessimistic, DistanceSpec::HeadToHead] {
                let d = distance_matrix(&p, spec, exec).unwrap();
                let c = pam_with_matrix(&p, &d, 3, opts).unwrap();
                out.push_str(&serde_json::to_string(&c).unwrap());
                out.push_str(&format!("{:?}", silhouette_with_matrix(&c, &d).unwrap().to_bits()));
            }
            out.push_str(&serde_json::to_string(&lloyd(&p, 2, Embedding::HeadToHead, opts).unwrap()).unwrap());
            let d = dissim_completion_cloud(&p, exec);
            out.push_str(&serde_json::to_string(&slates_by_agglomeration(&d, 2, Linkage::Average).unwrap()).unwrap());
            let sweep = analyze_election("x", &p, &SweepOptions { seed: 11, restarts: 2, budget: Budget::default(), exec }).unwrap();
            out.push_str(&serde_json::to_string(&sweep).unwrap());
        }
        let small = benchmark_election(Benchmark::E, 4, exec).unwrap();
        let g = exact_k_medoids(&small, 2, DistanceSpec::HeadToHead, Budget::default(), exec).unwrap();
        out.push_str(&serde_json::to_string(&g).unwrap());
        out
    };
    let serial = run(Exec::Serial);
    let parallel = run(Exec::Parallel);
    let again = run(Exec::Parallel);
    if serial != parallel {
        failures.push("serial and parallel outputs differ".into());
    }
    if parallel != again {
        failures.push("repeated seeded runs differ".into());
    }
    check(failures, format!("{} bytes identical across 3 runs", serial.len()))
}

type Criterion = (u32, &'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        (1, "graph path metrics equal d_H / d_B", criterion_1),
        (2, "worked values", criterion_2),
        (3, "distance bounds on random pairs", criterion_3),
        (4, "completion average equals d_H", criterion_4),
        (5, "completion-cloud dissimilarity", criterion_5),
        (6, "synthetic recovery", criterion_6),
        (7, "silhouette shape", criterion_7),
        (8, "classification stability", criterion_8),
        (9, "dataset statistics", criterion_9),
        (10, "determinism", criterion_10),
    ];
    let filter: Option<u32> = std::env::args().skip(1).find_map(|a| a.parse().ok());
    let mut failed = 0;
    for (n, name, f) in criteria {
        if filter.is_some_and(|only| only != n) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Outcome::Fail(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Outcome::Pass(detail) => println!("criterion {n}: PASS  {name} ({detail}) [{secs:.1}s]"),
            Outcome::Unattainable(detail) => println!("criterion {n}: FAIL  {name} (unattainable as stated: {detail}) [{secs:.1}s]"),
            Outcome::Skip(detail) => println!("criterion {n}: SKIP  {name} ({detail}) [{secs:.1}s]"),
            Outcome::Fail(detail) => {
                failed += 1;
                println!("criterion {n}: FAIL  {name} ({detail}) [{secs:.1}s]");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
