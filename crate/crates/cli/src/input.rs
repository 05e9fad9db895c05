//! Loading profiles and parsing ballot literals.

use std::io::Read;

use anyhow::Context;
use ballot_geometry::ingest::parse_blt;
use ballot_geometry::{Ballot, CandidateId, Profile};
use sha2::{Digest, Sha256};

use crate::CliError;

/// An input file with its raw bytes kept for the manifest hash.
pub struct Input {
    pub path: String,
    pub sha256: String,
    pub profile: Profile,
    pub format: &'static str,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Reads `path` (or stdin for `-`) as profile text or BLT, by content.
pub fn load(path: &str) -> anyhow::Result<Input> {
    let mut bytes = Vec::new();
    if path == "-" {
        std::io::stdin().read_to_end(&mut bytes).context("reading stdin")?;
    } else {
        bytes = std::fs::read(path).map_err(|e| CliError::Usage(format!("cannot read {path}: {e}")))?;
    }
    let text = String::from_utf8(bytes.clone()).map_err(|_| CliError::Parse(format!("{path}: not UTF-8 text")))?;
    let first = text.trim_start_matches('\u{feff}').lines().find(|l| !l.trim().is_empty()).unwrap_or("");
    let (profile, format) = if first.trim_start().starts_with("m=") {
        (Profile::from_text(&text).with_context(|| format!("parsing {path}"))?, "profile")
    } else {
        let doc = parse_blt(&text).with_context(|| format!("parsing {path}"))?;
        (doc.to_profile()?, "blt")
    };
    Ok(Input { path: path.to_string(), sha256: sha256_hex(&bytes), profile, format })
}

/// Parses `A>B>C`-style literals: each token is a 1-based number or a name
/// from `names` (exact match first, then case-insensitive).
pub fn parse_ballot(literal: &str, names: &[String]) -> Result<Ballot, CliError> {
    let m = names.len();
    let mut ids = Vec::new();
    for token in literal.split('>').map(str::trim) {
        if token.is_empty() {
            return Err(CliError::Parse(format!("empty candidate in '{literal}'")));
        }
        let id = if let Ok(n) = token.parse::<usize>() {
            if n == 0 || n > m {
                return Err(CliError::Parse(format!("candidate {n} out of range 1..={m}")));
            }
            n - 1
        } else {
            names
                .iter()
                .position(|x| x == token)
                .or_else(|| names.iter().position(|x| x.eq_ignore_ascii_case(token)))
                .ok_or_else(|| CliError::Parse(format!("unknown candidate '{token}'")))?
        };
        ids.push(CandidateId(id));
    }
    Ballot::new(&ids, m).map_err(|e| CliError::Parse(format!("'{literal}': {e}")))
}

pub fn render_ballot(b: &Ballot, names: &[String]) -> String {
    let parts: Vec<&str> = b.ranking().iter().map(|c| names[c.0].as_str()).collect();
    parts.join(">")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn letters(m: usize) -> Vec<String> {
        (0..m).map(|i| CandidateId(i).letter()).collect()
    }

    #[test]
    fn literals() {
        let names = letters(5);
        let b = parse_ballot("A>B>C", &names).unwrap();
        assert_eq!(render_ballot(&b, &names), "A>B>C");
        assert_eq!(parse_ballot("1>2>3", &names).unwrap(), b);
        assert_eq!(parse_ballot("a > b > c", &names).unwrap(), b);
        assert!(parse_ballot("A>A", &names).is_err());
        assert!(parse_ballot("A>Z", &names).is_err());
        assert!(parse_ballot("6", &names).is_err());
        assert!(parse_ballot("A>>B", &names).is_err());
    }

    #[test]
    fn hashing() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
