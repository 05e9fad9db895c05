//! BLT ballot files and profile statistics.
//!
//! ```text
//! 4 2
//! -3
//! 3 1 3 0
//! 1 2 0
//! 0
//! "Alice (Green)"
//! "Bob"
//! "Carol"
//! "Dan"
//! "Example ward"
//! ```
//!
//! Header `candidates seats`, an optional line of negative withdrawn
//! candidate numbers, weighted ballot lines ending in `0`, a lone `0`, the
//! quoted candidate names and a quoted title. Preferences are 1-based.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::ballot::{Ballot, CandidateId};
use crate::error::{Error, Result};
use crate::profile::Profile;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BltDocument {
    pub m: usize,
    pub seats: usize,
    /// 1-based.
    pub withdrawn: Vec<usize>,
    /// Weight and 1-based preferences of each ballot line, in file order.
    pub ballot_lines: Vec<(u64, Vec<usize>)>,
    pub candidate_names: Vec<String>,
    pub title: String,
}

fn parse_int<T: std::str::FromStr>(token: &str, line: usize, what: &str) -> Result<T> {
    token.parse().map_err(|_| Error::parse(line, format!("bad {what} '{token}'")))
}

pub fn parse_blt(text: &str) -> Result<BltDocument> {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
        .peekable();

    let (no, header) = lines.next().ok_or_else(|| Error::parse(1, "empty file"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 2 {
        return Err(Error::parse(no, "header must be '<candidates> <seats>'"));
    }
    let m: usize = parse_int(fields[0], no, "candidate count")?;
    let seats: usize = parse_int(fields[1], no, "seat count")?;
    if m == 0 {
        return Err(Error::parse(no, "no candidates"));
    }

    let mut withdrawn = Vec::new();
    if let Some(&(no, line)) = lines.peek() {
        if line.starts_with('-') {
            lines.next();
            for tok in line.split_whitespace() {
                let v: i64 = parse_int(tok, no, "withdrawn candidate")?;
                let c = usize::try_from(-v).ok().filter(|&c| (1..=m).contains(&c) && v < 0);
                withdrawn.push(c.ok_or_else(|| Error::parse(no, format!("bad withdrawn candidate '{tok}'")))?);
            }
        }
    }

    let mut ballot_lines = Vec::new();
    let mut terminated = false;
    for (no, line) in lines.by_ref() {
        if line == "0" {
            terminated = true;
            break;
        }
        let mut tokens = line.split_whitespace();
        if line.starts_with('(') {
            tokens.next(); // optional ballot id
        }
        let weight: u64 = parse_int(tokens.next().ok_or_else(|| Error::parse(no, "missing weight"))?, no, "weight")?;
        if weight == 0 {
            return Err(Error::parse(no, "ballot weight must be positive"));
        }
        let mut prefs = Vec::new();
        let mut closed = false;
        for tok in tokens {
            if closed {
                return Err(Error::parse(no, "preferences after the terminating 0"));
            }
            let c: usize = parse_int(tok, no, "preference")?;
            if c == 0 {
                closed = true;
            } else if c > m {
                return Err(Error::parse(no, format!("preference {c} out of range 1..={m}")));
            } else if prefs.contains(&c) {
                return Err(Error::parse(no, format!("candidate {c} ranked twice")));
            } else {
                prefs.push(c);
            }
        }
        if !closed {
            return Err(Error::parse(no, "ballot line not terminated by 0"));
        }
        if prefs.is_empty() {
            return Err(Error::parse(no, "empty ballot"));
        }
        ballot_lines.push((weight, prefs));
    }
    if !terminated {
        return Err(Error::parse(text.lines().count(), "missing '0' line after the ballots"));
    }

    let mut strings = Vec::new();
    for (no, line) in lines {
        let inner = line
            .strip_prefix('"')
            .and_then(|l| l.strip_suffix('"'))
            .ok_or_else(|| Error::parse(no, "expected a quoted string"))?;
        strings.push(inner.to_string());
    }
    if strings.len() < m + 1 {
        return Err(Error::parse(text.lines().count(), format!("expected {m} candidate names and a title, found {} strings", strings.len())));
    }
    if strings.len() > m + 1 {
        return Err(Error::parse(text.lines().count(), "unexpected text after the title"));
    }
    let title = strings.pop().unwrap();
    Ok(BltDocument { m, seats, withdrawn, ballot_lines, candidate_names: strings, title })
}

impl BltDocument {
    pub fn to_blt(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{} {}", self.m, self.seats).unwrap();
        if !self.withdrawn.is_empty() {
            let w: Vec<String> = self.withdrawn.iter().map(|c| format!("-{c}")).collect();
            writeln!(out, "{}", w.join(" ")).unwrap();
        }
        for (weight, prefs) in &self.ballot_lines {
            write!(out, "{weight}").unwrap();
            for p in prefs {
                write!(out, " {p}").unwrap();
            }
            out.push_str(" 0\n");
        }
        out.push_str("0\n");
        for name in &self.candidate_names {
            writeln!(out, "\"{name}\"").unwrap();
        }
        writeln!(out, "\"{}\"", self.title).unwrap();
        out
    }

    pub fn voter_count(&self) -> u64 {
        self.ballot_lines.iter().map(|(w, _)| w).sum()
    }

    /// Voters whose ballots list only withdrawn candidates.
    pub fn empty_after_withdrawal(&self) -> u64 {
        self.ballot_lines
            .iter()
            .filter(|(_, prefs)| prefs.iter().all(|c| self.withdrawn.contains(c)))
            .map(|(w, _)| w)
            .sum()
    }

    /// Canonical profile: withdrawn candidates are removed and the rest
    /// renumbered in order; ballots left empty are dropped. A trailing
    /// `(Party)` in a candidate name becomes its party label.
    pub fn to_profile(&self) -> Result<Profile> {
        let kept: Vec<usize> = (1..=self.m).filter(|c| !self.withdrawn.contains(c)).collect();
        if kept.is_empty() {
            return Err(Error::param("every candidate is withdrawn"));
        }
        let mut new_index = vec![None; self.m + 1];
        for (i, &c) in kept.iter().enumerate() {
            new_index[c] = Some(CandidateId(i));
        }
        let mut p = Profile::new(kept.len())?;
        for (weight, prefs) in &self.ballot_lines {
            let raw: Vec<CandidateId> = prefs.iter().filter_map(|&c| new_index[c]).collect();
            if !raw.is_empty() {
                p.add_cast(&raw, *weight)?;
            }
        }
        if p.voter_count() == 0 {
            return Err(Error::param("no ballots left after removing withdrawn candidates"));
        }
        p.set_names(kept.iter().map(|&c| self.candidate_names[c - 1].clone()).collect())?;
        for (i, &c) in kept.iter().enumerate() {
            p.set_party(CandidateId(i), party_label(&self.candidate_names[c - 1]))?;
        }
        p.set_seats(Some(self.seats));
        Ok(p)
    }
}

/// `"Jane Doe (Green)"` -> `Some("Green")`.
pub fn party_label(name: &str) -> Option<String> {
    let inner = name.trim_end().strip_suffix(')')?;
    let open = inner.rfind('(')?;
    let label = inner[open + 1..].trim();
    (!label.is_empty()).then(|| label.to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileStats {
    pub candidates: usize,
    pub voter_count: u64,
    pub distinct_types: usize,
    /// Over lengths as cast.
    pub mean_length: f64,
    /// Voters by length as cast.
    pub length_histogram: BTreeMap<usize, u64>,
    pub bullet_votes: u64,
    /// Voters who ranked every candidate.
    pub complete_as_cast: u64,
    /// Most frequent types, count descending then ballot order.
    pub top_ballots: Vec<(Ballot, u64)>,
    pub singleton_type_count: usize,
}

pub const DEFAULT_TOP_BALLOTS: usize = 20;

pub fn profile_stats(p: &Profile, top: usize) -> ProfileStats {
    let hist = p.cast_lengths().clone();
    let voters = p.voter_count();
    let total_len: u64 = hist.iter().map(|(&l, &c)| l as u64 * c).sum();
    let mut types: Vec<(Ballot, u64)> = p.iter().map(|(b, c)| (b.clone(), c)).collect();
    types.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    types.truncate(top);
    ProfileStats {
        candidates: p.num_candidates(),
        voter_count: voters,
        distinct_types: p.num_types(),
        mean_length: if voters == 0 { 0.0 } else { total_len as f64 / voters as f64 },
        bullet_votes: hist.get(&1).copied().unwrap_or(0),
        complete_as_cast: hist.get(&p.num_candidates()).copied().unwrap_or(0),
        length_histogram: hist,
        top_ballots: types,
        singleton_type_count: p.iter().filter(|&(_, c)| c == 1).count(),
    }
}

impl ProfileStats {
    /// `key: value` lines; ballots as 1-based candidate numbers.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "candidates: {}", self.candidates).unwrap();
        writeln!(out, "voters: {}", self.voter_count).unwrap();
        writeln!(out, "distinct_types: {}", self.distinct_types).unwrap();
        writeln!(out, "mean_length: {:.4}", self.mean_length).unwrap();
        writeln!(out, "bullet_votes: {}", self.bullet_votes).unwrap();
        writeln!(out, "complete_as_cast: {}", self.complete_as_cast).unwrap();
        writeln!(out, "singleton_types: {}", self.singleton_type_count).unwrap();
        for (len, count) in &self.length_histogram {
            writeln!(out, "length[{len}]: {count}").unwrap();
        }
        for (b, count) in &self.top_ballots {
            writeln!(out, "top: ({}) x {count}", one_based(b)).unwrap();
        }
        out
    }
}

/// `(1,6)`-style rendering without the parentheses.
pub fn one_based(b: &Ballot) -> String {
    let parts: Vec<String> = b.ranking().iter().map(|c| (c.0 + 1).to_string()).collect();
    parts.join(",")
}
