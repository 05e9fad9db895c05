//! Preference profiles and their text serialization.
//!
//! The profile file format is line based:
//!
//! ```text
//! m=5 voters=3
//! 2	0>1>2>3>4
//! 1	4>3
//! name	0	Alice
//! party	0	Con
//! seats	2
//! ```
//!
//! Ballot lines are `count<TAB>indices` with 0-based candidate indices joined
//! by `>`. `name`, `party` and `seats` lines are optional.
#![allow(clippy::tabs_in_doc_comments)]

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::ballot::{canonicalize, Ballot, CandidateId};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Profile {
    m: usize,
    names: Vec<String>,
    parties: Vec<Option<String>>,
    seats: Option<usize>,
    ballots: BTreeMap<Ballot, u64>,
    cast_lengths: BTreeMap<usize, u64>,
}

impl Profile {
    pub fn new(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::NoCandidates);
        }
        Ok(Profile {
            m,
            names: (0..m).map(|i| CandidateId(i).letter()).collect(),
            parties: vec![None; m],
            seats: None,
            ballots: BTreeMap::new(),
            cast_lengths: BTreeMap::new(),
        })
    }

    /// Builds a profile from `(count, ballot)` pairs.
    pub fn from_ballots<I>(m: usize, ballots: I) -> Result<Self>
    where
        I: IntoIterator<Item = (u64, Ballot)>,
    {
        let mut p = Profile::new(m)?;
        for (count, b) in ballots {
            p.add_ballot(b, count)?;
        }
        Ok(p)
    }

    pub fn num_candidates(&self) -> usize {
        self.m
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn set_names(&mut self, names: Vec<String>) -> Result<()> {
        if names.len() != self.m {
            return Err(Error::param(format!("expected {} names, got {}", self.m, names.len())));
        }
        self.names = names;
        Ok(())
    }

    pub fn parties(&self) -> &[Option<String>] {
        &self.parties
    }

    pub fn set_party(&mut self, c: CandidateId, party: Option<String>) -> Result<()> {
        if c.0 >= self.m {
            return Err(Error::CandidateOutOfRange { index: c.0, m: self.m });
        }
        self.parties[c.0] = party;
        Ok(())
    }

    pub fn seats(&self) -> Option<usize> {
        self.seats
    }

    pub fn set_seats(&mut self, seats: Option<usize>) {
        self.seats = seats;
    }

    /// Records `count` voters casting `raw`, canonicalizing it.
    pub fn add_cast(&mut self, raw: &[CandidateId], count: u64) -> Result<()> {
        let b = canonicalize(raw, self.m)?;
        self.insert(b, raw.len(), count);
        Ok(())
    }

    /// Adds an already canonical ballot; its cast length is its stored length.
    pub fn add_ballot(&mut self, b: Ballot, count: u64) -> Result<()> {
        if b.num_candidates() != self.m {
            return Err(Error::MismatchedCandidates { left: self.m, right: b.num_candidates() });
        }
        let len = b.len();
        self.insert(b, len, count);
        Ok(())
    }

    fn insert(&mut self, b: Ballot, cast_len: usize, count: u64) {
        if count == 0 {
            return;
        }
        *self.ballots.entry(b).or_insert(0) += count;
        *self.cast_lengths.entry(cast_len).or_insert(0) += count;
    }

    /// Distinct ballot types with their counts, in ballot order.
    pub fn iter(&self) -> impl Iterator<Item = (&Ballot, u64)> {
        self.ballots.iter().map(|(b, &c)| (b, c))
    }

    pub fn ballot_types(&self) -> Vec<Ballot> {
        self.ballots.keys().cloned().collect()
    }

    pub fn weights(&self) -> Vec<u64> {
        self.ballots.values().copied().collect()
    }

    pub fn count_of(&self, b: &Ballot) -> u64 {
        self.ballots.get(b).copied().unwrap_or(0)
    }

    pub fn num_types(&self) -> usize {
        self.ballots.len()
    }

    pub fn voter_count(&self) -> u64 {
        self.ballots.values().sum()
    }

    /// Histogram of ballot lengths as cast (before completion).
    pub fn cast_lengths(&self) -> &BTreeMap<usize, u64> {
        &self.cast_lengths
    }

    /// Union of two profiles over the same candidates.
    pub fn merge(&mut self, other: &Profile) -> Result<()> {
        if other.m != self.m {
            return Err(Error::MismatchedCandidates { left: self.m, right: other.m });
        }
        for (b, &c) in &other.ballots {
            *self.ballots.entry(b.clone()).or_insert(0) += c;
        }
        for (&len, &c) in &other.cast_lengths {
            *self.cast_lengths.entry(len).or_insert(0) += c;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "m={} voters={}", self.m, self.voter_count()).unwrap();
        for (b, c) in self.iter() {
            writeln!(out, "{c}\t{}", b.to_index_string()).unwrap();
        }
        for (i, name) in self.names.iter().enumerate() {
            writeln!(out, "name\t{i}\t{name}").unwrap();
        }
        for (i, party) in self.parties.iter().enumerate() {
            if let Some(p) = party {
                writeln!(out, "party\t{i}\t{p}").unwrap();
            }
        }
        if let Some(s) = self.seats {
            writeln!(out, "seats\t{s}").unwrap();
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end_matches('\r')));
        let (_, header) = lines.next().ok_or_else(|| Error::parse(1, "missing header"))?;
        let (m, voters) = parse_header(header)?;
        let mut p = Profile::new(m)?;
        for (no, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            match fields[0] {
                "name" | "party" => {
                    if fields.len() != 3 {
                        return Err(Error::parse(no, "expected three tab-separated fields"));
                    }
                    let idx: usize =
                        fields[1].parse().map_err(|_| Error::parse(no, "bad candidate index"))?;
                    if idx >= m {
                        return Err(Error::parse(no, format!("candidate {idx} out of range")));
                    }
                    if fields[0] == "name" {
                        p.names[idx] = fields[2].to_string();
                    } else {
                        p.parties[idx] = Some(fields[2].to_string());
                    }
                }
                "seats" => {
                    let s = fields.get(1).and_then(|s| s.parse().ok());
                    p.seats = Some(s.ok_or_else(|| Error::parse(no, "bad seat count"))?);
                }
                count => {
                    if fields.len() != 2 {
                        return Err(Error::parse(no, "expected count<TAB>ballot"));
                    }
                    let count: u64 =
                        count.parse().map_err(|_| Error::parse(no, "bad ballot count"))?;
                    if count == 0 {
                        return Err(Error::parse(no, "ballot count must be positive"));
                    }
                    let b = Ballot::parse_indices(fields[1], m)
                        .map_err(|e| Error::parse(no, e.to_string()))?;
                    p.add_ballot(b, count).map_err(|e| Error::parse(no, e.to_string()))?;
                }
            }
        }
        if p.voter_count() != voters {
            return Err(Error::parse(1, format!("header says {voters} voters, found {}", p.voter_count())));
        }
        Ok(p)
    }
}

fn parse_header(line: &str) -> Result<(usize, u64)> {
    let mut m = None;
    let mut voters = None;
    for field in line.split_whitespace() {
        match field.split_once('=') {
            Some(("m", v)) => m = v.parse().ok(),
            Some(("voters", v)) => voters = v.parse().ok(),
            _ => return Err(Error::parse(1, format!("unexpected header field '{field}'"))),
        }
    }
    match (m, voters) {
        (Some(m), Some(v)) => Ok((m, v)),
        _ => Err(Error::parse(1, "header must be 'm=<int> voters=<int>'")),
    }
}
